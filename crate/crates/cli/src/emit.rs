//! Byte-stable result emission.
//!
//! Result files must be identical across reruns with the same seed, so the
//! writer is deliberately dumb: object keys are emitted in sorted order and
//! every float is formatted with exactly nine significant digits.

use std::collections::BTreeMap;

/// A JSON value with deterministic serialization.
#[derive(Debug, Clone)]
pub enum Json {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(BTreeMap<String, Json>),
    Null,
}

impl Json {
    pub fn object(pairs: Vec<(&str, Json)>) -> Json {
        Json::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn floats(values: impl IntoIterator<Item = f64>) -> Json {
        Json::Array(values.into_iter().map(Json::Float).collect())
    }

    pub fn to_string_pretty(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Float(x) => out.push_str(&fmt_float(*x)),
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    item.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Json::Object(map) => {
                if map.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    out.push('"');
                    out.push_str(k);
                    out.push_str("\": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
            Json::Null => out.push_str("null"),
        }
    }
}

/// Nine significant digits, scientific notation, stable across platforms.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    format!("{x:.8e}")
}

/// Minimal CSV assembly with the same float rule.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            lines: vec![header.to_string()],
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        self.lines.push(fields.join(","));
    }

    pub fn finish(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_nine_significant_digits() {
        assert_eq!(fmt_float(0.78125), "7.81250000e-1");
        assert_eq!(fmt_float(-1.0), "-1.00000000e0");
        assert_eq!(fmt_float(0.0), "0.0");
        assert_eq!(fmt_float(4.9278e9), "4.92780000e9");
    }

    #[test]
    fn object_keys_are_sorted() {
        let j = Json::object(vec![
            ("zeta", Json::Int(1)),
            ("alpha", Json::Int(2)),
            ("mid", Json::Bool(true)),
        ]);
        let s = j.to_string_pretty();
        let alpha = s.find("alpha").unwrap();
        let mid = s.find("mid").unwrap();
        let zeta = s.find("zeta").unwrap();
        assert!(alpha < mid && mid < zeta);
    }

    #[test]
    fn serialization_is_reproducible() {
        let j = Json::object(vec![
            ("values", Json::floats([0.1, 0.2, 0.3])),
            ("name", Json::Str("run".into())),
        ]);
        assert_eq!(j.to_string_pretty(), j.to_string_pretty());
    }
}
