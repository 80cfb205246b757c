//! Canonical JSON text: two-space indentation, sorted keys, floating-point
//! numbers with 17 significant digits.

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug)]
pub enum EmitError {
    Serialize(serde_json::Error),
    /// A `null` reached the emitter, which only happens for NaN or infinities.
    NonFinite(String),
}

impl std::fmt::Display for EmitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmitError::Serialize(e) => write!(f, "{e}"),
            EmitError::NonFinite(path) => write!(f, "non-finite number at {path}"),
        }
    }
}

impl std::error::Error for EmitError {}

pub fn to_string<T: Serialize>(value: &T) -> Result<String, EmitError> {
    let v = serde_json::to_value(value).map_err(EmitError::Serialize)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0, "$")?;
    out.push('\n');
    Ok(out)
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn is_flat(items: &[Value]) -> bool {
    items.iter().all(|v| !matches!(v, Value::Array(_) | Value::Object(_)))
}

fn write_value(out: &mut String, v: &Value, depth: usize, path: &str) -> Result<(), EmitError> {
    match v {
        Value::Null => return Err(EmitError::NonFinite(path.to_string())),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                let _ = write!(out, "{i}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                out.push_str(&real(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).map_err(EmitError::Serialize)?),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_flat(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth, &format!("{path}[{i}]"))?;
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, depth + 1);
                write_value(out, item, depth + 1, &format!("{path}[{i}]"))?;
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&serde_json::to_string(key).map_err(EmitError::Serialize)?);
                out.push_str(": ");
                write_value(out, item, depth + 1, &format!("{path}.{key}"))?;
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push('}');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308, 5e-324, 0.0, -0.0] {
            let s = real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(real(1.7), "1.7000000000000000e0");
    }

    #[test]
    fn integers_stay_integers() {
        let s = to_string(&serde_json::json!({"seed": 42u64, "x": [1.5, 2.0]})).unwrap();
        assert_eq!(s, "{\n  \"seed\": 42,\n  \"x\": [1.5000000000000000e0, 2.0000000000000000e0]\n}\n");
    }

    #[test]
    fn nan_is_rejected() {
        assert!(to_string(&vec![1.0, f64::NAN]).is_err());
    }
}
