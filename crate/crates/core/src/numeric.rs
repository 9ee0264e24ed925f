use num_bigint::BigInt;

/// Correctly rounded sum of finite values (Shewchuk's exact partials with
/// a half-even correction on the final step), so `0.4 + 0.06 + 0.02` comes out
/// as the double nearest `0.48` rather than one ulp off.
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // the remaining partials decide ties left by the last addition
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// Sum of the values read as the shortest decimals that round-trip to them,
/// carried out exactly and rounded once. Weights entered as `0.4`, `0.06` and
/// `0.02` therefore total the double nearest `0.48`, which binary summation of
/// the same doubles misses by one ulp. Non-finite input gives a non-finite sum.
pub fn decimal_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return values.iter().sum();
    }
    let terms: Vec<(BigInt, i64)> = values.iter().map(|&v| shortest_decimal(v)).collect();
    let Some(scale) = terms.iter().map(|(_, e)| *e).min() else {
        return 0.0;
    };
    let total: BigInt = terms
        .into_iter()
        .map(|(m, e)| m * BigInt::from(10u8).pow((e - scale) as u32))
        .sum();
    format!("{total}e{scale}").parse().unwrap_or(f64::NAN)
}

/// `(m, e)` with `v == m * 10^e` for the shortest round-trip digits of `v`.
fn shortest_decimal(v: f64) -> (BigInt, i64) {
    let s = format!("{v:e}");
    let (mantissa, exp) = s.split_once('e').expect("LowerExp always has an exponent");
    let exp: i64 = exp.parse().expect("integer exponent");
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    (digits, exp - frac.len() as i64)
}

/// `true` when `x` is finite and strictly positive.
pub fn is_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}
