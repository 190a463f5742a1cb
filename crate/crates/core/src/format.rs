//! Number formatting shared by the CSV and JSON writers.

/// Formats a double with 12 significant digits, trailing zeros removed,
/// switching to exponent notation below `1e-4` and from `1e12` (the `%.12g`
/// convention).
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::fmt_g12;

    #[test]
    fn matches_printf_g12() {
        assert_eq!(fmt_g12(0.5), "0.5");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_g12(8.0 / 9.0), "0.888888888889");
        assert_eq!(fmt_g12(72f64.sqrt()), "8.48528137424");
        assert_eq!(fmt_g12(123456.0), "123456");
        assert_eq!(fmt_g12(0.0001), "0.0001");
        assert_eq!(fmt_g12(0.00001234), "1.234e-05");
        assert_eq!(fmt_g12(1e15), "1e+15");
        assert_eq!(fmt_g12(-0.25), "-0.25");
        assert_eq!(fmt_g12(0.0), "0");
        // rounding that carries into a new digit
        assert_eq!(fmt_g12(9.9999999999999), "10");
    }
}
