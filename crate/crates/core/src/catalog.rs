//! Built-in example configurations.

use crate::config::RunConfig;
use crate::error::{Error, Result};

const ENTRIES: [(&str, &str); 7] = [
    ("cosymplectic_r7", include_str!("../catalog/cosymplectic_r7.json")),
    ("flat_product", include_str!("../catalog/flat_product.json")),
    ("gigseh", include_str!("../catalog/gigseh.json")),
    ("girmednh", include_str!("../catalog/girmednh.json")),
    ("hopf_s7_s4", include_str!("../catalog/hopf_s7_s4.json")),
    ("sphere_chart", include_str!("../catalog/sphere_chart.json")),
    ("synthetic_complex_r6", include_str!("../catalog/synthetic_complex_r6.json")),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(n, _)| *n).collect()
}

/// Raw JSON text of a catalog entry.
pub fn source(name: &str) -> Result<&'static str> {
    ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::InvalidArgument(format!("no catalog entry `{name}` (try: {})", names().join(", "))))
}

pub fn load(name: &str) -> Result<RunConfig> {
    RunConfig::from_json(source(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads() {
        for name in names() {
            let cfg = load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name(), name);
            assert!(!cfg.file.theorems.is_empty());
        }
        assert!(load("nope").is_err());
    }

    #[test]
    fn girmednh_shape() {
        let cfg = load("girmednh").unwrap();
        assert_eq!((cfg.file.n, cfg.file.m), (6, 3));
        let g = cfg.setup.g1.eval(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.0]).unwrap();
        assert!((g[(0, 0)] - 1f64.exp()).abs() < 1e-12);
        assert!((g[(5, 5)] - 1f64.exp()).abs() < 1e-12);
    }
}
