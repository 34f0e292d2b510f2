//! SPICE-style numbers with engineering suffixes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed number `{0}`")]
pub struct NumberError(pub String);

/// Parses `1.5`, `100k`, `1p`, `2.2meg`, `1e-9`. Suffixes are case-insensitive.
pub fn parse_si(text: &str) -> Result<f64, NumberError> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let (mantissa, exponent): (&str, i32) = if let Some(m) = lower.strip_suffix("meg") {
        (m, 6)
    } else {
        match lower.chars().last() {
            Some('f') => (&lower[..lower.len() - 1], -15),
            Some('p') => (&lower[..lower.len() - 1], -12),
            Some('n') => (&lower[..lower.len() - 1], -9),
            Some('u') => (&lower[..lower.len() - 1], -6),
            Some('m') => (&lower[..lower.len() - 1], -3),
            Some('k') => (&lower[..lower.len() - 1], 3),
            _ => (lower.as_str(), 0),
        }
    };
    if mantissa.is_empty() || mantissa.ends_with(['e', '+', '-']) {
        return Err(NumberError(t.to_string()));
    }
    let value: f64 = mantissa.parse().map_err(|_| NumberError(t.to_string()))?;
    if !value.is_finite() {
        return Err(NumberError(t.to_string()));
    }
    // Dividing by an exact power of ten keeps `100u` equal to the literal 1e-4.
    Ok(if exponent < 0 {
        value / 10f64.powi(-exponent)
    } else {
        value * 10f64.powi(exponent)
    })
}

/// Parses a length and returns nanometres. Bare numbers are nanometres; an
/// `n` suffix is read directly so lattice coordinates such as `17.8n` stay
/// exact; other suffixes (`u`, `m`, ...) are scaled from metres.
pub fn parse_length_nm(text: &str) -> Result<f64, NumberError> {
    let t = text.trim();
    let direct = t.strip_suffix(['n', 'N']).unwrap_or(t);
    if !direct.is_empty() && !direct.ends_with(['e', 'E', '+', '-']) {
        if let Ok(v) = direct.parse::<f64>() {
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(NumberError(t.to_string()))
            };
        }
    }
    if t.ends_with(['n', 'N']) {
        return Err(NumberError(t.to_string()));
    }
    Ok(parse_si(t)? * 1e9)
}

/// Writes a nanometre length as `<value>n`.
pub fn format_length_nm(nm: f64) -> String {
    format!("{nm}n")
}

/// Shortest round-trippable representation, used when writing files.
pub fn format_f64(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_si("100k").unwrap(), 1.0e5);
        assert_eq!(parse_si("1p").unwrap(), 1e-12);
        assert!((parse_si("17.8n").unwrap() - 17.8e-9).abs() < 1e-24);
        assert_eq!(parse_si("2MEG").unwrap(), 2e6);
        assert_eq!(parse_si("3m").unwrap(), 3e-3);
        assert_eq!(parse_si("1e-9").unwrap(), 1e-9);
        assert_eq!(parse_si("-0.75").unwrap(), -0.75);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "k", "1x", "1..2", "abc", "1e", "nan", "inf"] {
            assert!(parse_si(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lengths_stay_exact() {
        assert_eq!(parse_length_nm("17.8n").unwrap(), 17.8);
        assert_eq!(parse_length_nm(&format_length_nm(6.3)).unwrap(), 6.3);
        assert_eq!(parse_length_nm("18").unwrap(), 18.0);
        assert!((parse_length_nm("0.018u").unwrap() - 18.0).abs() < 1e-9);
        assert!(parse_length_nm("n").is_err());
    }

    #[test]
    fn format_round_trips() {
        for v in [1.0, 17.8e-9, 3.3e-17, -0.125, 1.0e5] {
            assert_eq!(parse_si(&format_f64(v)).unwrap(), v);
        }
    }
}
