//! Bisection for monotone non-decreasing objectives.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisectError {
    #[error("target {target} is outside the bracket [{low}, {high}]")]
    NotBracketed { target: f64, low: f64, high: f64 },
    #[error("objective is not finite at {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: u32,
}

/// Finds `x` in `[lo, hi]` with `|f(x) - target| <= tol`, for `f`
/// non-decreasing on the bracket. Stops early once the bracket can no longer
/// be split in floating point and returns whichever end is closer.
pub fn bisect_increasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
) -> Result<Root, BisectError>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    for (x, v) in [(lo, f_lo), (hi, f_hi)] {
        if !v.is_finite() {
            return Err(BisectError::NonFinite(x));
        }
    }
    if target < f_lo - tol || target > f_hi + tol {
        return Err(BisectError::NotBracketed {
            target,
            low: f_lo,
            high: f_hi,
        });
    }
    if (f_lo - target).abs() <= tol {
        return Ok(Root {
            x: lo,
            value: f_lo,
            iterations: 0,
        });
    }
    if (f_hi - target).abs() <= tol {
        return Ok(Root {
            x: hi,
            value: f_hi,
            iterations: 0,
        });
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            let best = if (f_lo - target).abs() <= (f_hi - target).abs() {
                Root {
                    x: lo,
                    value: f_lo,
                    iterations,
                }
            } else {
                Root {
                    x: hi,
                    value: f_hi,
                    iterations,
                }
            };
            return Ok(best);
        }
        let v = f(mid);
        if !v.is_finite() {
            return Err(BisectError::NonFinite(mid));
        }
        if (v - target).abs() <= tol {
            return Ok(Root {
                x: mid,
                value: v,
                iterations,
            });
        }
        if v < target {
            lo = mid;
            f_lo = v;
        } else {
            hi = mid;
            f_hi = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root() {
        let r = bisect_increasing(|x| x * x, 0.0, 2.0, 2.0, 1e-12).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn endpoints_short_circuit() {
        let r = bisect_increasing(|x| x, 1.0, 5.0, 1.0, 1e-9).unwrap();
        assert_eq!((r.x, r.iterations), (1.0, 0));
        let r = bisect_increasing(|x| x, 1.0, 5.0, 5.0, 1e-9).unwrap();
        assert_eq!(r.x, 5.0);
    }

    #[test]
    fn unbracketed() {
        assert!(matches!(
            bisect_increasing(|x| x, 0.0, 1.0, 3.0, 1e-9),
            Err(BisectError::NotBracketed { .. })
        ));
    }

    #[test]
    fn flat_pieces_are_fine() {
        // capped objective like a saturating cascade factor
        let r = bisect_increasing(|x: f64| x.min(0.5), 0.0, 1.0, 0.5, 1e-12).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn step_function_terminates() {
        let r =
            bisect_increasing(|x| if x < 0.3 { 0.0 } else { 1.0 }, 0.0, 1.0, 0.5, 1e-9).unwrap();
        assert!((r.x - 0.3).abs() < 1e-12);
    }
}
