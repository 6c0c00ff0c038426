use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Color, mask, eikonal and seam terms of the first training stage.
pub const STAGE1_WEIGHTS: [(&str, f64); 4] = [("col", 1.0), ("mask", 0.1), ("eik", 0.1), ("seam", 1.0)];
/// Template refinement: SDF, Laplacian, Laplacian-to-zero, normal and area.
pub const STAGE2_WEIGHTS: [(&str, f64); 5] =
    [("sdf", 1.0), ("reg", 0.15), ("zero", 0.005), ("normal", 0.005), ("area", 5.0)];
/// Final stage. The perceptual slot is kept for completeness but nothing here
/// computes that term, so it never contributes.
pub const STAGE3_WEIGHTS: [(&str, f64); 6] =
    [("col", 1.0), ("mask", 0.1), ("eik", 0.1), ("seam", 1.0), ("lappyr", 1.0), ("perc", 0.5)];

pub fn weights(table: &[(&str, f64)]) -> BTreeMap<String, f64> {
    table.iter().map(|&(k, w)| (k.to_string(), w)).collect()
}

/// Named loss values with the weights applied to them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub values: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, f64>,
}

impl LossReport {
    pub fn new(weights: BTreeMap<String, f64>) -> Self {
        Self { values: BTreeMap::new(), weights }
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// `Σ w · L` over terms that have both a value and a weight.
    pub fn total(&self) -> f64 {
        self.values.iter().filter_map(|(k, v)| self.weights.get(k).map(|w| w * v)).sum()
    }

    pub fn is_valid(&self) -> bool {
        self.values.values().all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_weights() {
        let v = |t: &[(&str, f64)]| t.iter().map(|p| p.1).collect::<Vec<_>>();
        assert_eq!(v(&STAGE1_WEIGHTS), [1.0, 0.1, 0.1, 1.0]);
        assert_eq!(v(&STAGE2_WEIGHTS), [1.0, 0.15, 0.005, 0.005, 5.0]);
        assert_eq!(v(&STAGE3_WEIGHTS), [1.0, 0.1, 0.1, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn total_skips_missing_terms() {
        let mut r = LossReport::new(weights(&STAGE2_WEIGHTS));
        r.insert("sdf", 2.0);
        r.insert("area", 0.1);
        r.insert("other", 100.0);
        assert!((r.total() - 2.5).abs() < 1e-15);
        assert!(r.is_valid());
    }
}
