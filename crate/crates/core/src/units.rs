//! SI quantities with explicit unit suffixes, e.g. `"20nA"`, `"8.9ms"`, `"6kohm"`.
//!
//! Config fields accept either a bare number in base units or a string with a
//! suffix. The suffix must name the field's dimension, so `"20nA"` in a time
//! field is rejected instead of silently misread.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Ampere,
    Volt,
    Second,
    Hertz,
    Ohm,
    Siemens,
}

impl Dim {
    fn symbols(self) -> &'static [&'static str] {
        match self {
            Dim::Ampere => &["A"],
            Dim::Volt => &["V"],
            Dim::Second => &["s"],
            Dim::Hertz => &["Hz"],
            Dim::Ohm => &["ohm", "Ohm", "Ω"],
            Dim::Siemens => &["S"],
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbols()[0])
    }
}

fn prefix_scale(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        _ => return None,
    })
}

/// Parses `text` as a quantity of dimension `dim`, returning base units.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && text[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (number, suffix) = text.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{text}` does not start with a number"))?;
    let suffix = suffix.trim();
    if suffix.is_empty() {
        return Ok(value);
    }
    for sym in dim.symbols() {
        if let Some(prefix) = suffix.strip_suffix(sym) {
            if let Some(scale) = prefix_scale(prefix) {
                return Ok(value * scale);
            }
        }
    }
    Err(format!("`{text}` is not a quantity in {dim}"))
}

macro_rules! quantity_serde {
    ($name:ident, $dim:expr) => {
        pub mod $name {
            use serde::{de, Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(*v)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum Raw {
                    Float(f64),
                    Int(i64),
                    Text(String),
                }
                match Raw::deserialize(d)? {
                    Raw::Float(v) => Ok(v),
                    Raw::Int(v) => Ok(v as f64),
                    Raw::Text(t) => crate::units::parse_quantity(&t, $dim).map_err(de::Error::custom),
                }
            }
        }
    };
}

pub mod serde_si {
    quantity_serde!(ampere, crate::units::Dim::Ampere);
    quantity_serde!(volt, crate::units::Dim::Volt);
    quantity_serde!(second, crate::units::Dim::Second);
    quantity_serde!(hertz, crate::units::Dim::Hertz);
    quantity_serde!(ohm, crate::units::Dim::Ohm);
    quantity_serde!(siemens, crate::units::Dim::Siemens);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_prefixed_units() {
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-15;
        assert!(close(parse_quantity("20nA", Dim::Ampere).unwrap(), 20e-9));
        assert!(close(parse_quantity("8.9ms", Dim::Second).unwrap(), 8.9e-3));
        assert!(close(parse_quantity("6kohm", Dim::Ohm).unwrap(), 6e3));
        assert!(close(parse_quantity("600 Ω", Dim::Ohm).unwrap(), 600.0));
        assert!(close(parse_quantity("1mS", Dim::Siemens).unwrap(), 1e-3));
        assert!(close(parse_quantity("50kHz", Dim::Hertz).unwrap(), 5e4));
        assert!(close(parse_quantity("-500pA", Dim::Ampere).unwrap(), -500e-12));
        assert!(close(parse_quantity("1.5e-3V", Dim::Volt).unwrap(), 1.5e-3));
        assert_eq!(parse_quantity("0.25", Dim::Volt).unwrap(), 0.25);
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(parse_quantity("20nA", Dim::Second).is_err());
        assert!(parse_quantity("8ms", Dim::Siemens).is_err());
        assert!(parse_quantity("3xA", Dim::Ampere).is_err());
        assert!(parse_quantity("nA", Dim::Ampere).is_err());
    }
}
