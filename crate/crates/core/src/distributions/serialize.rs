use serde_json::value::RawValue;

use super::{Diffeomorphism, Distribution};
use crate::json::{array, Object};

impl Distribution {
    /// JSON object `{"variant": ..., "params": {...}}` with 17 significant digits per float.
    pub fn to_json(&self) -> String {
        self.json_object().render()
    }

    pub fn to_raw_json(&self) -> Box<RawValue> {
        self.json_object().into_raw()
    }

    fn json_object(&self) -> Object {
        let params = match self {
            Distribution::Normal { mu, sigma } => Object::new().num("mu", *mu).num("sigma", *sigma),
            Distribution::Laplace { mu, b } => Object::new().num("mu", *mu).num("b", *b),
            Distribution::Uniform { lo, hi } => Object::new().num("lo", *lo).num("hi", *hi),
            Distribution::Categorical { labels, probs } => {
                Object::new().raw("labels", array(labels)).raw("probs", array(probs))
            }
            Distribution::Empirical { atoms, weights } => {
                Object::new().raw("atoms", array(atoms)).raw("weights", array(weights))
            }
            Distribution::Mixture { components, weights } => {
                let comps: Vec<String> = components.iter().map(|c| c.to_json()).collect();
                Object::new().raw("components", format!("[{}]", comps.join(","))).raw("weights", array(weights))
            }
            Distribution::KernelDensity { atoms, weights, bandwidths, kernel } => Object::new()
                .str("kernel", kernel.name())
                .raw("atoms", array(atoms))
                .raw("weights", array(weights))
                .raw("bandwidths", array(bandwidths)),
            Distribution::Histogram { edges, masses } => {
                Object::new().raw("edges", array(edges)).raw("masses", array(masses))
            }
            Distribution::Pushforward { base, map } => {
                Object::new().raw("base", base.to_json()).raw("map", map.to_json())
            }
        };
        Object::new().str("variant", self.variant_name()).raw("params", params.render())
    }
}

impl Diffeomorphism {
    pub fn to_json(&self) -> String {
        let params = match self {
            Diffeomorphism::Affine { a, b } => Object::new().num("a", *a).num("b", *b),
            Diffeomorphism::Sigmoid | Diffeomorphism::Logit => Object::new(),
            Diffeomorphism::CdfOf(d) | Diffeomorphism::QuantileOf(d) => Object::new().raw("distribution", d.to_json()),
            Diffeomorphism::Composed(maps) => {
                let items: Vec<String> = maps.iter().map(|m| m.to_json()).collect();
                Object::new().raw("maps", format!("[{}]", items.join(",")))
            }
        };
        Object::new().str("map", self.name()).raw("params", params.render()).render()
    }
}
