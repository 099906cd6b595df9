//! Number formatting shared by the CSV and Markdown writers.

/// Formats `x` like C's `%.{prec}e`: mantissa with `prec` decimals and a
/// signed exponent of at least two digits (`8.300000e-02`).
pub fn sci(x: f64, prec: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let s = format!("{:.*e}", prec, x);
    let (mantissa, exp) = s.split_once('e').expect("rust exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}
