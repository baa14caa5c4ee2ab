//! Output formatting: 17 significant digits everywhere.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

/// Shortest fixed-width form that round-trips an `f64`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Like [`fmt_f64`], with `None` written as an empty field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Compact JSON formatter writing floats with 17 significant digits.
/// Non-finite values become `null`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(writer: W, value: &T) -> io::Result<()> {
    let mut ser = Serializer::with_formatter(writer, Sig17);
    value.serialize(&mut ser).map_err(io::Error::other)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17);
        }
    }

    #[test]
    fn json_uses_sig17_and_nulls() {
        let s = to_json_string(&serde_json::json!({"a": 0.1, "b": [1.5, 2]}));
        assert_eq!(
            s,
            r#"{"a":1.0000000000000001e-1,"b":[1.5000000000000000e0,2]}"#
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
        assert_eq!(to_json_string(&[f64::NAN]), "[null]");
    }

    #[test]
    fn missing_values_are_blank() {
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_opt(Some(1.0)), "1.0000000000000000e0");
    }
}
