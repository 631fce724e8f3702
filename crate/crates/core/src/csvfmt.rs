//! Plain-text number formatting shared by all CSV outputs.

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..DIGITS).contains(&exp) {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
