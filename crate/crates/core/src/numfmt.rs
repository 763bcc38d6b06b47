//! Deterministic JSON/CSV number formatting: every float is written with
//! 17 significant digits in scientific notation. Non-finite values become
//! `null` in JSON and an empty cell in CSV.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn sig17_opt(v: Option<f64>) -> String {
    v.map(sig17).unwrap_or_default()
}

#[derive(Debug, Default, Clone, Copy)]
struct Sig17Formatter;

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serialize `value` as single-line JSON with fixed float formatting.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: Option<f64>,
        c: f64,
        n: usize,
    }

    #[test]
    fn fixed_digits() {
        assert_eq!(sig17(0.25), "2.5000000000000000e-1");
        assert_eq!(sig17(-3.0), "-3.0000000000000000e0");
        assert_eq!(sig17(f64::NAN), "");
        let s = to_json(&Row {
            a: 1.0 / 6.0,
            b: None,
            c: f64::INFINITY,
            n: 3,
        });
        assert_eq!(s, r#"{"a":1.6666666666666666e-1,"b":null,"c":null,"n":3}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 1.0 / 6.0);
    }
}
