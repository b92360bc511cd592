//! TOML problem files.
//!
//! A file holds any of the sections `[operator]`, `[c]`, `[t]`,
//! `[annulus]`, `[schedule]`, `[search]`, `[elliptic]` and `[parabolic]`.
//! Unknown keys are rejected. See `specs/FORMAT.md` for the schema.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::{Bound, CMap, InclusionProblem, Multifunction, MultistartConfig, Schedule};
use crate::operators::{Grid, Homogeneity, MonotoneOp};
use crate::pde::{EllipticSpec, GridKind, ParabolicSpec};

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation("matrix must be square and nonempty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero { dim: usize },
    /// Positive semidefinite matrix, given by rows.
    Linear { matrix: Vec<Vec<f64>> },
    ScaledIdentity { a: f64, dim: usize },
    L1 { weight: f64, dim: usize },
    Huber { delta: f64, dim: usize },
    Power {
        gamma: f64,
        #[serde(default = "one")]
        coeff: f64,
        dim: usize,
    },
    OneSidedPower {
        gamma: f64,
        #[serde(default = "one")]
        coeff: f64,
        dim: usize,
    },
    BoxCone { lo: Vec<f64>, hi: Vec<f64> },
    BallCone {
        dim: usize,
        radius: f64,
        #[serde(default = "two")]
        exponent: f64,
    },
    PLaplacian { grid: GridKind, n: usize, p: f64 },
}

impl OperatorSpec {
    pub fn build(&self) -> Result<MonotoneOp> {
        match self {
            OperatorSpec::Zero { dim } => MonotoneOp::zero(*dim),
            OperatorSpec::Linear { matrix: rows } => MonotoneOp::linear_psd(matrix(rows)?),
            OperatorSpec::ScaledIdentity { a, dim } => MonotoneOp::scaled_identity(*a, *dim),
            OperatorSpec::L1 { weight, dim } => MonotoneOp::l1(*weight, *dim),
            OperatorSpec::Huber { delta, dim } => MonotoneOp::huber(*delta, *dim),
            OperatorSpec::Power { gamma, coeff, dim } => MonotoneOp::power(*gamma, *coeff, *dim),
            OperatorSpec::OneSidedPower { gamma, coeff, dim } => MonotoneOp::one_sided_power(*gamma, *coeff, *dim),
            OperatorSpec::BoxCone { lo, hi } => MonotoneOp::box_cone(lo.clone(), hi.clone()),
            OperatorSpec::BallCone { dim, radius, exponent } => MonotoneOp::ball_cone(*dim, *radius, *exponent),
            OperatorSpec::PLaplacian { grid, n, p } => {
                let g = match grid {
                    GridKind::Line => Grid::new_line(*n)?,
                    GridKind::Square => Grid::new_square(*n, *n)?,
                };
                MonotoneOp::p_laplacian(g, *p)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CSpec {
    Zero,
    /// `coeff·|x_i|^{exponent−2} x_i + forcing_i`.
    Pointwise {
        coeff: f64,
        #[serde(default = "two")]
        exponent: f64,
        #[serde(default)]
        forcing: Vec<f64>,
    },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `scale` times the normalized duality map of `l^p`.
    Duality {
        p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl CSpec {
    pub fn build(&self) -> Result<CMap> {
        Ok(match self {
            CSpec::Zero => CMap::Zero,
            CSpec::Pointwise { coeff, exponent, forcing } => {
                CMap::Pointwise { coeff: *coeff, exponent: *exponent, forcing: forcing.clone() }
            }
            CSpec::Affine { matrix: rows, offset } => CMap::Affine { matrix: matrix(rows)?, offset: offset.clone() },
            CSpec::Duality { p, scale } => CMap::NormalizedDuality { p: *p, scale: *scale },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TSpec {
    Zero,
    Singleton { map: CSpec },
    Interval { lower: Bound, upper: Bound },
}

impl TSpec {
    pub fn build(&self) -> Result<Multifunction> {
        Ok(match self {
            TSpec::Zero => Multifunction::Zero,
            TSpec::Singleton { map } => Multifunction::Singleton(map.build()?),
            TSpec::Interval { lower, upper } => Multifunction::Interval { lower: *lower, upper: *upper },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSection {
    /// Homogeneity degree; defaults to the operator's declared degree.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub g1: f64,
    pub g2: f64,
    #[serde(default)]
    pub v0_star: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub seeds_per_dim: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub c: Option<CSpec>,
    #[serde(default)]
    pub t: Option<TSpec>,
    #[serde(default)]
    pub annulus: Option<AnnulusSection>,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub elliptic: Option<EllipticSpec>,
    #[serde(default)]
    pub parabolic: Option<ParabolicSpec>,
}

/// Accepted range for residual tolerances.
pub const TOL_RANGE: (f64, f64) = (1e-14, 1e-2);

pub fn validate_tol(tol: f64) -> Result<f64> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::Validation(format!("tolerance {tol} outside [{:e}, {:e}]", TOL_RANGE.0, TOL_RANGE.1)));
    }
    Ok(tol)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn inclusion_problem(&self) -> Result<InclusionProblem> {
        let op = self.operator.as_ref().ok_or_else(|| Error::Validation("missing [operator] section".into()))?.build()?;
        let ann = self.annulus.as_ref().ok_or_else(|| Error::Validation("missing [annulus] section".into()))?;
        let gamma = match (ann.gamma, op.homogeneity()) {
            (Some(g), _) => g,
            (None, Homogeneity::Degree(d)) => d,
            (None, _) => return Err(Error::Validation("annulus.gamma is required for this operator".into())),
        };
        let c = self.c.as_ref().map_or(Ok(CMap::Zero), CSpec::build)?;
        let t = self.t.as_ref().map_or(Ok(Multifunction::Zero), TSpec::build)?;
        InclusionProblem::new(op, gamma, c, t, ann.g1, ann.g2, ann.v0_star.clone())
    }

    /// The `[schedule]` section, or the default for `gamma`.
    pub fn schedule_for(&self, gamma: f64) -> Result<Schedule> {
        match &self.schedule {
            Some(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            None => Ok(Schedule::default_for(gamma)),
        }
    }

    pub fn multistart(&self) -> Result<MultistartConfig> {
        let mut cfg = MultistartConfig::default();
        if let Some(s) = &self.search {
            if let Some(k) = s.seeds_per_dim {
                if !(1..=1024).contains(&k) {
                    return Err(Error::Validation(format!("search.seeds_per_dim {k} outside [1, 1024]")));
                }
                cfg.seeds_per_dim = k;
            }
            if let Some(t) = s.tol {
                cfg.tol = validate_tol(t)?;
            }
            if let Some(m) = s.max_iter {
                if !(1..=10_000).contains(&m) {
                    return Err(Error::Validation(format!("search.max_iter {m} outside [1, 10000]")));
                }
                cfg.max_iter = m;
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"
[operator]
kind = "power"
gamma = 2.0
dim = 1

[c]
kind = "pointwise"
coeff = -1.0

[annulus]
g1 = 2.0
g2 = 0.5
v0_star = [1.0]
"#;

    #[test]
    fn parses_scalar_benchmark() {
        let f = ProblemFile::parse(SCALAR).unwrap();
        let p = f.inclusion_problem().unwrap();
        assert_eq!(p.gamma(), 2.0);
        assert_eq!(p.gauge().p(), 3.0);
        assert_eq!(f.schedule_for(2.0).unwrap().len(), 30);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = SCALAR.replace("g2 = 0.5", "g2 = 0.5\nradius = 3");
        assert!(matches!(ProblemFile::parse(&bad), Err(Error::Parse(_))));
        let bad = SCALAR.replace("kind = \"power\"", "kind = \"power\"\ncoef = 2");
        assert!(ProblemFile::parse(&bad).is_err());
    }

    #[test]
    fn interval_and_elliptic_sections() {
        let text = r#"
[elliptic]
grid = "line"
n = 2
p = 3.0
c_coeff = -1.0
delta1 = 1.0
delta2 = 0.01
reaction = { lower = { cabs = -0.01 }, upper = { cabs = 0.01 } }

[search]
tol = 1e-10
"#;
        let f = ProblemFile::parse(text).unwrap();
        let e = f.elliptic.unwrap();
        assert_eq!(e.reaction.unwrap().upper.cabs, 0.01);
        assert!(ProblemFile::parse("[search]\ntol = 1.0").unwrap().multistart().is_err());
    }
}
