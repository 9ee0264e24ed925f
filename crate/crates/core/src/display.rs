//! Display rounding shared by every text surface.
//!
//! Values are always carried at full precision; these helpers only decide
//! how they are printed.

/// Rounds half away from zero to `decimals` places.
pub fn round_half_away(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    // guard against representation error pushing an exact tie below .5
    let nudged = scaled + scaled.signum() * scaled.abs() * 1e-12;
    nudged.round() / scale
}

/// A fraction rendered as a percentage with `decimals` places, e.g. `0.4%`.
pub fn percent_with(p: f64, decimals: u32) -> String {
    let v = round_half_away(p * 100.0, decimals);
    format!("{:.*}%", decimals as usize, v)
}

/// A fraction rendered as a percentage with one decimal place.
pub fn percent(p: f64) -> String {
    percent_with(p, 1)
}

/// Full-precision percentage for `--precise` output.
pub fn percent_precise(p: f64) -> String {
    format!("{}%", p * 100.0)
}

/// Scientific notation at one significant figure in the `1E+08` style of
/// order-of-magnitude tables.
pub fn sig1(x: f64) -> String {
    sig(x, 1)
}

/// Scientific notation at `digits` significant figures, e.g. `sig(2.28e8, 2)`
/// gives `2.3E+08`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return format!("{:.*}E+00", digits.saturating_sub(1), 0.0);
    }
    let exp = x.abs().log10().floor() as i32;
    let mut mantissa = round_half_away(x / 10f64.powi(exp), digits as u32 - 1);
    let mut exp = exp;
    if mantissa.abs() >= 10.0 {
        mantissa /= 10.0;
        exp += 1;
    }
    let sign = if exp < 0 { '-' } else { '+' };
    format!(
        "{:.*}E{}{:02}",
        digits.saturating_sub(1),
        mantissa,
        sign,
        exp.abs()
    )
}

/// Rounds to `digits` significant figures, returning the number.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let shift = digits as i32 - 1 - exp;
    if shift >= 0 {
        round_half_away(x, shift as u32)
    } else {
        let scale = 10f64.powi(-shift);
        round_half_away(x / scale, 0) * scale
    }
}
