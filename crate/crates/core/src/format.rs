//! Fixed-precision number output shared by JSON and CSV writers.

/// Significant digits kept in every reported number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest decimal text of `x` after rounding to [`SIGNIFICANT_DIGITS`] digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

/// JSON number rounded to [`SIGNIFICANT_DIGITS`] digits, or `null` when not finite.
pub fn json_num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round_sig(x))
        .map_or(serde_json::Value::Null, serde_json::Value::Number)
}

pub fn json_opt(x: Option<f64>) -> serde_json::Value {
    x.map_or(serde_json::Value::Null, json_num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(num(std::f64::consts::E.recip()), "0.367879441171");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(123456789012345.0), "123456789012000");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn json_numbers() {
        assert_eq!(json_num(f64::INFINITY), serde_json::Value::Null);
        assert_eq!(json_num(0.1 + 0.2).to_string(), "0.3");
    }
}
