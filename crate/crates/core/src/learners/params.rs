use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

/// Value of one estimator hyper-parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Result<f64> {
        match self {
            ParamValue::Float(x) => Ok(*x),
            ParamValue::Int(i) => Ok(*i as f64),
            other => Err(Error::InvalidParameter(format!("expected a number, got `{other}`"))),
        }
    }

    pub fn as_usize(&self) -> Result<usize> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            ParamValue::Float(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
            other => Err(Error::InvalidParameter(format!("expected a nonnegative integer, got `{other}`"))),
        }
    }

    pub fn as_bool(&self) -> Result<bool> {
        match self {
            ParamValue::Bool(b) => Ok(*b),
            other => Err(Error::InvalidParameter(format!("expected a boolean, got `{other}`"))),
        }
    }

    pub fn as_text(&self) -> Result<&str> {
        match self {
            ParamValue::Text(s) => Ok(s),
            other => Err(Error::InvalidParameter(format!("expected text, got `{other}`"))),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Hyper-parameters keyed by dotted path, e.g. `s.inner.kappa`.
pub type ParamMap = BTreeMap<String, ParamValue>;

/// Candidate values per parameter path; the search space is their product.
pub type Grid = BTreeMap<String, Vec<ParamValue>>;

/// Prefixes every key of `inner` with `prefix.`.
pub(crate) fn nest(out: &mut ParamMap, prefix: &str, inner: ParamMap) {
    for (k, v) in inner {
        out.insert(format!("{prefix}.{k}"), v);
    }
}

/// Splits `a.b.c` into `("a", Some("b.c"))`.
pub(crate) fn split_path(path: &str) -> (&str, Option<&str>) {
    match path.split_once('.') {
        Some((head, rest)) => (head, Some(rest)),
        None => (path, None),
    }
}

/// Every combination of grid values, in lexicographic order of keys and listed order of values.
pub fn grid_points(grid: &Grid) -> Vec<ParamMap> {
    let mut out = vec![ParamMap::new()];
    for (key, values) in grid {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for base in &out {
            for v in values {
                let mut m = base.clone();
                m.insert(key.clone(), v.clone());
                next.push(m);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_enumerate_product() {
        let mut g = Grid::new();
        g.insert("a".into(), vec![ParamValue::Int(1), ParamValue::Int(2)]);
        g.insert("b".into(), vec![ParamValue::Bool(true), ParamValue::Bool(false), ParamValue::Bool(true)]);
        let pts = grid_points(&g);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0]["a"], ParamValue::Int(1));
        assert_eq!(pts[1]["b"], ParamValue::Bool(false));
        assert_eq!(grid_points(&Grid::new()), vec![ParamMap::new()]);
    }

    #[test]
    fn conversions() {
        assert_eq!(ParamValue::Int(3).as_f64().unwrap(), 3.0);
        assert_eq!(ParamValue::Float(4.0).as_usize().unwrap(), 4);
        assert!(ParamValue::Float(4.5).as_usize().is_err());
        assert!(ParamValue::Text("x".into()).as_bool().is_err());
        assert_eq!(split_path("s.inner.kappa"), ("s", Some("inner.kappa")));
    }
}
