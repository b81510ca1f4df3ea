//! Deterministic JSON output with every float at 17 significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::geometry::fmt17;

fn write_value(out: &mut String, v: &Value, indent: Option<usize>, depth: usize) {
    let newline = |out: &mut String, d: usize| {
        if let Some(w) = indent {
            out.push('\n');
            out.push_str(&" ".repeat(w * d));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&fmt17(x)),
                    _ => out.push_str("null"),
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(out, x, indent, depth + 1);
            }
            if !a.is_empty() {
                newline(out, depth);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, x, indent, depth + 1);
            }
            if !m.is_empty() {
                newline(out, depth);
            }
            out.push('}');
        }
    }
}

/// Single-line JSON; non-finite floats become `null`.
pub fn to_json_line<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).unwrap_or(Value::Null);
    let mut s = String::new();
    write_value(&mut s, &value, None, 0);
    s
}

/// Indented JSON document terminated by a newline.
pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).unwrap_or(Value::Null);
    let mut s = String::new();
    write_value(&mut s, &value, Some(2), 0);
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Rec {
        a: f64,
        n: usize,
        v: Vec<f64>,
        name: &'static str,
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_line(&Rec { a: 0.1, n: 3, v: vec![-1.5, f64::NAN], name: "x\"y" });
        assert_eq!(s, r#"{"a":1.0000000000000001e-1,"n":3,"name":"x\"y","v":[-1.5000000000000000e0,null]}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn pretty_output_parses() {
        let s = to_json_pretty(&Rec { a: 2.0, n: 0, v: vec![], name: "" });
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["n"], 0);
    }
}
