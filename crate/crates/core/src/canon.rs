//! Canonical text output: floats rounded to 12 significant digits and JSON with
//! sorted keys, so identical runs produce identical bytes.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to 12 significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific notation parses")
}

/// Shortest decimal that round-trips the 12-significant-digit value.
pub fn fmt_f64(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // fold -0.0
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        // serde_json's default Map is a BTreeMap, so keys come out sorted
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and 12-significant-digit floats, newline-terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = canonicalize(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
