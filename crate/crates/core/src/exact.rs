//! Correctly rounded products of non-negative floats.
//!
//! Every finite `f64` is an integer mantissa times a power of two, so a
//! product of n of them is one big integer times one power of two. We form
//! that exactly and round once at the end. The result is the nearest `f64`
//! to the true product (ties to even), which makes it independent of the
//! order of the operands and immune to intermediate underflow.

use num_bigint::BigUint;

/// Exact running product, rounded to `f64` on demand.
#[derive(Debug, Clone)]
pub struct ExactProduct {
    mantissa: BigUint,
    exponent: i64,
    zero: bool,
}

impl Default for ExactProduct {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactProduct {
    pub fn new() -> Self {
        ExactProduct {
            mantissa: BigUint::from(1u8),
            exponent: 0,
            zero: false,
        }
    }

    /// Multiplies in `x`. Panics on negative or non-finite input; callers hold
    /// validated probabilities or positive reals.
    pub fn mul(&mut self, x: f64) {
        assert!(
            x.is_finite() && x >= 0.0,
            "exact product requires finite non-negative operands, got {x}"
        );
        if x == 0.0 {
            self.zero = true;
            return;
        }
        if self.zero {
            return;
        }
        let (m, e) = decompose(x);
        self.mantissa *= m;
        self.exponent += e;
    }

    pub fn to_f64(&self) -> f64 {
        if self.zero {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        // quantum of the result: 53 significant bits, but never finer than the
        // smallest subnormal
        let quantum = (self.exponent + bits - 53).max(-1074);
        let shift = quantum - self.exponent;
        if shift <= 0 {
            let m = u64::try_from(&self.mantissa).expect("at most 53 bits");
            return ldexp(m as f64, self.exponent);
        }
        let shift = shift as u64;
        let floor = &self.mantissa >> shift;
        let rem = &self.mantissa - (&floor << shift);
        let half = BigUint::from(1u8) << (shift - 1);
        let round_up = match rem.cmp(&half) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => floor.bit(0),
        };
        let mut r = u64::try_from(&floor).expect("at most 53 bits");
        if round_up {
            r += 1;
        }
        ldexp(r as f64, quantum)
    }
}

/// Nearest `f64` to the exact product of `values`.
pub fn product<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = ExactProduct::new();
    for v in values {
        acc.mul(v);
    }
    acc.to_f64()
}

fn decompose(x: f64) -> (u64, i64) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let two_pow = |k: i64| f64::from_bits(((k + 1023) as u64) << 52);
    while e > 1023 {
        x *= two_pow(1023);
        e -= 1023;
    }
    while e < -1022 {
        x *= two_pow(-1022);
        e += 1022;
    }
    x * two_pow(e)
}
