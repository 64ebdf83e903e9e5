/// Significant digits for reals in CSV output.
pub const CSV_DIGITS: usize = 10;

/// `x` with `digits` significant digits, in plain notation where sensible.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Exponent after rounding to `digits` places, read from scientific form.
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci[sci.find('e').expect("scientific form") + 1..]
        .parse()
        .expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
