//! Minimal JSON text helpers with bit-exact float formatting.
//!
//! Floats are written with 17 significant digits so that parsing the text
//! recovers the identical `f64`. Non-finite values become the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use serde_json::value::RawValue;

/// Formats a float as a JSON token with 17 significant digits.
pub fn number(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"" } else { "\"-inf\"" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| number(x)).collect();
    format!("[{}]", items.join(","))
}

pub fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Builds a JSON object from already-rendered values, keeping key order.
#[derive(Debug, Default)]
pub struct Object {
    fields: Vec<(String, String)>,
}

impl Object {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, key: &str, value: String) -> Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.raw(key, number(x))
    }

    pub fn str(self, key: &str, s: &str) -> Self {
        self.raw(key, string(s))
    }

    pub fn render(&self) -> String {
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{}:{}", string(k), v))
            .collect();
        format!("{{{}}}", body.join(","))
    }

    /// Wraps the rendered text so it can be embedded in serde output verbatim.
    pub fn into_raw(self) -> Box<RawValue> {
        RawValue::from_string(self.render()).expect("rendered object is valid JSON")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let parsed: f64 = number(x).parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn objects_are_valid_json() {
        let o = Object::new().num("a", 1.5).str("b", "x\"y").raw("c", array(&[1.0, f64::INFINITY]));
        let v: serde_json::Value = serde_json::from_str(&o.render()).unwrap();
        assert_eq!(v["a"].as_f64(), Some(1.5));
        assert_eq!(v["c"][1].as_str(), Some("inf"));
    }
}
