//! Stable numeric formatting for CSV output.

/// Significant digits written to CSV files.
pub const SIGNIFICANT_DIGITS: usize = 6;

/// Formats `x` with six significant digits, rounding ties to even.
///
/// Magnitudes in `[1e-5, 1e6)` are written in fixed notation, others in
/// exponent notation; trailing zeros are dropped. Negative zero prints as `0`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // The formatter rounds exact ties to even, so the exponent read here
    // already reflects any carry into the next decade.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// Formats an optional value; `None` becomes an empty cell.
pub fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
