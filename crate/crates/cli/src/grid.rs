//! Parameter grids for the simulate command.

use seamqec::patch::{Basis, PatchSpec, Variant};
use serde::{Deserialize, Serialize};

/// Explicit values or `n` log-spaced points between two ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Log { logspace: [f64; 2], n: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Log { logspace: [lo, hi], n } => match n {
                0 => vec![],
                1 => vec![*lo],
                _ => (0..*n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
            },
        }
    }
}

fn zero() -> Axis {
    Axis::List(vec![0.0])
}

fn both_bases() -> Vec<Basis> {
    vec![Basis::Z, Basis::X]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub variant: Variant,
    pub d: Vec<usize>,
    pub p: Axis,
    #[serde(default = "zero")]
    pub p_bell: Axis,
    #[serde(default = "both_bases")]
    pub bases: Vec<Basis>,
    /// Rounds for every point; 3d when absent.
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub seam_column: Option<usize>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Grid {
    /// Points in (d, p, p_Bell, basis) order.
    pub fn points(&self) -> Vec<PatchSpec> {
        let (ps, pbs) = (self.p.values(), self.p_bell.values());
        let mut out = Vec::new();
        for &d in &self.d {
            for &p in &ps {
                for &pb in &pbs {
                    for &b in &self.bases {
                        let mut s = PatchSpec::new(self.variant, d, b, p, pb);
                        s.rounds = self.rounds;
                        s.seam_column = self.seam_column;
                        out.push(s);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_is_the_product() {
        let g: Grid = serde_json::from_str(
            r#"{"variant":"seam","d":[3,5,7],"p":{"logspace":[1e-4,1e-3],"n":8},"p_bell":{"logspace":[1e-3,5e-2],"n":8}}"#,
        )
        .unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 3 * 8 * 8 * 2);
        assert!((pts[0].p - 1e-4).abs() < 1e-18);
        assert!((pts.last().unwrap().p_bell - 5e-2).abs() < 1e-15);
    }
}
