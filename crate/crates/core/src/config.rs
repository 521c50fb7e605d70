//! Run configuration as read from JSON. Complex numbers are `[re, im]` pairs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, Complex64, ComplexMatrix, Tolerances};
use crate::protocol::{MapKind, DEFAULT_DIMENSION_CAP};
use crate::states::AguStateSet;
use crate::symmetry::{AbelianGroup, UnitaryRep};

pub type JsonComplex = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub orders: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepType {
    /// Regular representation by cyclic shifts of the standard basis.
    Shift,
    /// Diagonal representation `U_m = diag(χ_j(m))`.
    Diag,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepSpec {
    #[serde(rename = "type")]
    pub kind: RepType,
    /// One matrix per generator (cyclic factor) or one per group element,
    /// each row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<JsonComplex>>>>,
}

/// A failure probability, or `"unamb"` for the error-free threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FailureProb {
    Value(f64),
    Named(String),
}

impl Default for FailureProb {
    fn default() -> Self {
        FailureProb::Value(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub rep: RepSpec,
    pub seed_vectors: Vec<Vec<JsonComplex>>,
    #[serde(default)]
    pub failure_prob: FailureProb,
    #[serde(default = "default_observers")]
    pub observers: usize,
    #[serde(default = "default_preprocessing")]
    pub preprocessing: MapKind,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_observers() -> usize {
    2
}

fn default_preprocessing() -> MapKind {
    MapKind::Entangled
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

impl RunConfig {
    /// Minimal configuration with the shift representation.
    pub fn shift(orders: Vec<usize>, seeds: Vec<Vec<Complex64>>, p: f64, observers: usize) -> Self {
        RunConfig {
            group: GroupSpec { orders },
            rep: RepSpec {
                kind: RepType::Shift,
                matrices: None,
            },
            seed_vectors: seeds.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
            failure_prob: FailureProb::Value(p),
            observers,
            preprocessing: MapKind::Entangled,
            trials: 0,
            rng_seed: 0,
            tolerance: default_tolerance(),
            dimension_cap: DEFAULT_DIMENSION_CAP,
            out: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.group.orders.is_empty() || self.group.orders.iter().any(|&o| o < 2) {
            return Err(Error::Config("group orders must be a non-empty list of integers ≥ 2".into()));
        }
        if self.observers < 2 {
            return Err(Error::Config(format!("observers must be at least 2, got {}", self.observers)));
        }
        if self.preprocessing == MapKind::Separable && self.observers != 2 {
            return Err(Error::Config("separable preprocessing is defined for two observers".into()));
        }
        match &self.failure_prob {
            FailureProb::Value(p) if !(0.0..=1.0).contains(p) => {
                return Err(Error::Config(format!("failure_prob {p} outside [0, 1]")));
            }
            FailureProb::Named(s) if s != "unamb" => {
                return Err(Error::Config(format!("failure_prob must be a number or \"unamb\", got {s:?}")));
            }
            _ => {}
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.seed_vectors.is_empty() {
            return Err(Error::Config("at least one seed vector is required".into()));
        }
        let d = self.seed_vectors[0].len();
        if self.seed_vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Config("seed vectors must have equal length".into()));
        }
        let m: usize = self.group.orders.iter().product();
        match self.rep.kind {
            RepType::Shift | RepType::Diag if d != m => Err(Error::Config(format!(
                "seed vectors have length {d} but the representation has dimension {m}"
            ))),
            RepType::Explicit if self.rep.matrices.is_none() => {
                Err(Error::Config("explicit representation needs \"matrices\"".into()))
            }
            _ => Ok(()),
        }
    }

    /// Internal numerical tolerances; `tolerance` only sets the pass/fail
    /// threshold of reported residuals.
    pub fn tolerances(&self) -> Tolerances {
        Tolerances::default()
    }

    pub fn build_group(&self) -> Result<AbelianGroup> {
        AbelianGroup::new(self.group.orders.clone())
    }

    pub fn build_rep(&self) -> Result<UnitaryRep> {
        let group = self.build_group()?;
        let tol = self.tolerances();
        match self.rep.kind {
            RepType::Shift => Ok(UnitaryRep::regular(group)),
            RepType::Diag => Ok(UnitaryRep::diagonal_characters(group)),
            RepType::Explicit => {
                let raw = self.rep.matrices.as_ref().expect("validated");
                let matrices = raw.iter().map(|m| json_matrix(m)).collect::<Result<Vec<_>>>()?;
                let d = self.seed_vectors[0].len();
                if matrices.iter().any(|m| m.rows() != d) {
                    return Err(Error::Config(format!("representation matrices must be {d}x{d}")));
                }
                if matrices.len() == group.orders().len() {
                    UnitaryRep::from_generators(group, &matrices, &tol)
                } else if matrices.len() == group.order() {
                    UnitaryRep::from_matrices(group, matrices, &tol)
                } else {
                    Err(Error::Config(format!(
                        "{} matrices given; expected one per generator ({}) or per element ({})",
                        matrices.len(),
                        group.orders().len(),
                        group.order()
                    )))
                }
            }
        }
    }

    pub fn build_states(&self) -> Result<AguStateSet> {
        let rep = self.build_rep()?;
        let seeds = self.seed_vectors.iter().map(|v| json_vector(v)).collect();
        AguStateSet::new(&rep.group().clone(), rep, seeds, &self.tolerances())
    }
}

pub fn json_vector(v: &[JsonComplex]) -> Vec<Complex64> {
    v.iter().map(|z| c64(z[0], z[1])).collect()
}

/// Row-major `[[re, im]]` rows into a square matrix.
pub fn json_matrix(rows: &[Vec<JsonComplex>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("matrices must be square and non-empty".into()));
    }
    ComplexMatrix::new(n, n, rows.iter().flat_map(|r| json_vector(r)).collect())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<JsonComplex>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIPLE: &str = r#"{
        "group": {"orders": [3]},
        "rep": {"type": "shift"},
        "seed_vectors": [[[0.7071067811865476, 0], [0.5477225575051661, 0], [0.4472135954999579, 0]]],
        "failure_prob": 0.2,
        "observers": 3
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(TRIPLE).unwrap();
        assert_eq!(c.observers, 3);
        assert_eq!(c.preprocessing, MapKind::Entangled);
        assert_eq!(c.trials, 0);
        assert_eq!(c.tolerance, 1e-9);
        let set = c.build_states().unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.is_pure());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            TRIPLE.replace("0.2", "1.5"),
            TRIPLE.replace("\"observers\": 3", "\"observers\": 1"),
            TRIPLE.replace("[3]", "[4]"),
            TRIPLE.replace("0.2", "\"sometimes\""),
            TRIPLE.replace("\"observers\": 3", "\"observers\": 3, \"extra\": 1"),
            TRIPLE.replace("\"observers\": 3", "\"observers\": 3, \"preprocessing\": \"separable\""),
            TRIPLE.replace("shift", "explicit"),
        ];
        for text in bad {
            let err = RunConfig::from_json(&text).unwrap_err();
            assert_eq!(err.exit_code(), 3, "{text}");
        }
        let err = RunConfig::load(Path::new("/nonexistent/config.json")).unwrap_err();
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn explicit_matrices_per_generator_and_per_element() {
        let shift = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        let gen = matrix_to_json(shift.matrix(1));
        let mut c = RunConfig::from_json(TRIPLE).unwrap();
        c.rep = RepSpec {
            kind: RepType::Explicit,
            matrices: Some(vec![gen]),
        };
        let rep = c.build_rep().unwrap();
        for m in 0..3 {
            assert!(rep.matrix(m).distance(shift.matrix(m)) < 1e-15);
        }
        c.rep.matrices = Some(shift.matrices().iter().map(matrix_to_json).collect());
        assert!(c.build_rep().is_ok());
        c.rep.matrices = Some(vec![matrix_to_json(shift.matrix(1)); 2]);
        assert!(c.build_rep().is_err());
    }

    #[test]
    fn unamb_keyword() {
        let c = RunConfig::from_json(&TRIPLE.replace("0.2", "\"unamb\"")).unwrap();
        assert_eq!(c.failure_prob, FailureProb::Named("unamb".into()));
    }
}
