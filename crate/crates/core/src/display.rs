//! Human-readable number formatting.

/// Six significant digits, trailing zeros trimmed (`0.0778`, `-2.48625`,
/// `1.5e-07`).
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, e) = sci.split_once('e').expect("exponent form");
    let exp: i32 = e.parse().expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (5 - exp).max(0) as usize;
    trim(&format!("{rounded:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn formats() {
        assert_eq!(sig6(0.0778), "0.0778");
        assert_eq!(sig6(0.4798f64.ln()), "-0.734386");
        assert_eq!(sig6(2.486248349464601), "2.48625");
        assert_eq!(sig6(20.0), "20");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(1.5e-7), "1.5e-07");
        assert_eq!(sig6(-1e20), "-1e+20");
        assert_eq!(sig6(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig6(0.0), "0");
    }
}
