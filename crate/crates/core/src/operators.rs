//! Catalog of maximal monotone operators on `ℝⁿ`.
//!
//! Operators are intensional: each variant carries a closed-form description
//! of its graph, so membership, minimal sections and resolvents can be
//! evaluated exactly or by a dedicated solver. Maximality is a property of
//! the construction and is probed through the range condition by the
//! resolvent engine in [`crate::yosida`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::report::{Check, VerifierReport};
use crate::space::{inf_norm, lp_norm, pairing, power_map, spow};

/// A smooth convex energy with gradient and Hessian.
pub trait ConvexEnergy: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// Convex functions whose subdifferentials are in the catalog.
#[derive(Clone, Debug)]
pub enum ConvexFn {
    /// `weight · ‖x‖₁`; closed-form resolvent.
    L1 { weight: f64 },
    /// `Σ huber_δ(x_i)`; differentiable with a piecewise constant Hessian.
    Huber { delta: f64 },
    /// A user supplied smooth energy; resolvents are computed by minimization.
    Energy(Arc<dyn ConvexEnergy>),
}

/// Closed convex sets with computable normal cones.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{ y : ‖y‖_exponent ≤ radius }`.
    Ball { dim: usize, radius: f64, exponent: f64 },
}

/// Uniform grid on the unit interval or unit square with homogeneous
/// Dirichlet data; the unknowns are the interior nodal values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grid {
    Line { intervals: usize },
    Square { nx: usize, ny: usize },
}

/// One edge of the stencil: the two endpoint unknowns (`None` on the boundary) and the spacing.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Edge {
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub h: f64,
}

impl Grid {
    pub fn new_line(intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::Invalid("a 1-D grid needs at least 2 intervals".into()));
        }
        Ok(Grid::Line { intervals })
    }

    pub fn new_square(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Invalid("a 2-D grid needs at least 2 intervals per axis".into()));
        }
        Ok(Grid::Square { nx, ny })
    }

    /// Number of interior nodes.
    pub fn unknowns(&self) -> usize {
        match *self {
            Grid::Line { intervals } => intervals - 1,
            Grid::Square { nx, ny } => (nx - 1) * (ny - 1),
        }
    }

    pub fn spatial_dim(&self) -> usize {
        match self {
            Grid::Line { .. } => 1,
            Grid::Square { .. } => 2,
        }
    }

    /// Mesh widths `(hx, hy)`; `hy = hx` on a line.
    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            Grid::Line { intervals } => {
                let h = 1.0 / intervals as f64;
                (h, h)
            }
            Grid::Square { nx, ny } => (1.0 / nx as f64, 1.0 / ny as f64),
        }
    }

    /// Physical coordinates of every interior node, in unknown order.
    pub fn node_coordinates(&self) -> Vec<Vec<f64>> {
        match *self {
            Grid::Line { intervals } => {
                let h = 1.0 / intervals as f64;
                (1..intervals).map(|i| vec![i as f64 * h]).collect()
            }
            Grid::Square { nx, ny } => {
                let (hx, hy) = self.spacing();
                let mut out = Vec::with_capacity(self.unknowns());
                for j in 1..ny {
                    for i in 1..nx {
                        out.push(vec![i as f64 * hx, j as f64 * hy]);
                    }
                }
                out
            }
        }
    }

    pub(crate) fn edges(&self) -> Vec<Edge> {
        match *self {
            Grid::Line { intervals } => {
                let h = 1.0 / intervals as f64;
                let node = |k: usize| (k >= 1 && k < intervals).then(|| k - 1);
                (0..intervals).map(|e| Edge { left: node(e), right: node(e + 1), h }).collect()
            }
            Grid::Square { nx, ny } => {
                let (hx, hy) = self.spacing();
                let node = |i: usize, j: usize| {
                    (i >= 1 && i < nx && j >= 1 && j < ny).then(|| (j - 1) * (nx - 1) + (i - 1))
                };
                let mut edges = Vec::new();
                for j in 1..ny {
                    for i in 0..nx {
                        edges.push(Edge { left: node(i, j), right: node(i + 1, j), h: hx });
                    }
                }
                for i in 1..nx {
                    for j in 0..ny {
                        edges.push(Edge { left: node(i, j), right: node(i, j + 1), h: hy });
                    }
                }
                edges
            }
        }
    }
}

/// Declared positive homogeneity of an operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Homogeneity {
    /// Homogeneous of every degree (the zero operator).
    Any,
    Degree(f64),
    None,
}

/// Maximal monotone operator `A : ℝⁿ ⊃ D(A) → 2^{ℝⁿ}`.
#[derive(Clone, Debug)]
pub enum MonotoneOp {
    Zero { dim: usize },
    /// `x ↦ M x` with `M + Mᵀ ⪰ 0`.
    LinearPsd { matrix: DMatrix<f64> },
    Subdifferential { f: ConvexFn, dim: usize },
    /// Componentwise `coeff·|x_i|^{γ-1} x_i`. With `one_sided` the graph is
    /// `coeff·x^γ` on `(0, ∞)` and `(-∞, 0]` at `x = 0`, with domain `[0, ∞)`.
    PowerGraph { gamma: f64, coeff: f64, dim: usize, one_sided: bool },
    NormalCone { set: ConvexSet },
    /// `(Au)_i = Σ_edges (1/h)[Φ(Δ⁻u/h) − Φ(Δ⁺u/h)]`, `Φ(s) = |s|^{p-2}s`, zero Dirichlet data.
    DiscretePLaplacian { grid: Grid, p: f64 },
    Sum(Vec<MonotoneOp>),
    Scaled { factor: f64, op: Box<MonotoneOp> },
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Invalid("operator dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Invalid(format!("matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }
    Ok(())
}

impl MonotoneOp {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(MonotoneOp::Zero { dim })
    }

    /// Linear operator; rejects matrices whose symmetric part is not positive semidefinite.
    pub fn linear_psd(matrix: DMatrix<f64>) -> Result<Self> {
        check_square(&matrix)?;
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        let scale = matrix.abs().max().max(1.0);
        if min_eig < -1e-12 * scale {
            return Err(Error::Invalid(format!(
                "symmetric part has negative eigenvalue {min_eig:e}; operator is not monotone"
            )));
        }
        Ok(MonotoneOp::LinearPsd { matrix })
    }

    /// Linear operator without the semidefiniteness check; used to exercise
    /// the monotonicity checker on non-monotone input.
    pub fn linear_unchecked(matrix: DMatrix<f64>) -> Result<Self> {
        check_square(&matrix)?;
        Ok(MonotoneOp::LinearPsd { matrix })
    }

    /// `a · I` on `ℝⁿ`.
    pub fn scaled_identity(a: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Self::linear_psd(DMatrix::identity(dim, dim) * a)
    }

    /// `∂(weight·‖·‖₁)`; with weight 1 on `ℝ` this is `∂|·|`.
    pub fn l1(weight: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Invalid(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(MonotoneOp::Subdifferential { f: ConvexFn::L1 { weight }, dim })
    }

    pub fn huber(delta: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Invalid(format!("huber delta must be > 0, got {delta}")));
        }
        Ok(MonotoneOp::Subdifferential { f: ConvexFn::Huber { delta }, dim })
    }

    pub fn energy(energy: Arc<dyn ConvexEnergy>) -> Result<Self> {
        let dim = energy.dim();
        check_dim(dim)?;
        Ok(MonotoneOp::Subdifferential { f: ConvexFn::Energy(energy), dim })
    }

    pub fn power(gamma: f64, coeff: f64, dim: usize) -> Result<Self> {
        Self::power_graph(gamma, coeff, dim, false)
    }

    /// The half-line power graph, `A(0) = (-∞, 0]`, `A(x) = coeff·x^γ` for `x > 0`.
    pub fn one_sided_power(gamma: f64, coeff: f64, dim: usize) -> Result<Self> {
        Self::power_graph(gamma, coeff, dim, true)
    }

    fn power_graph(gamma: f64, coeff: f64, dim: usize, one_sided: bool) -> Result<Self> {
        check_dim(dim)?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Invalid(format!("power exponent must be > 0, got {gamma}")));
        }
        if !(coeff.is_finite() && coeff >= 0.0) {
            return Err(Error::Invalid(format!("power coefficient must be >= 0, got {coeff}")));
        }
        Ok(MonotoneOp::PowerGraph { gamma, coeff, dim, one_sided })
    }

    pub fn box_cone(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len())?;
        if lo.len() != hi.len() {
            return Err(Error::Invalid("box bounds have different lengths".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || a.is_nan()) {
            return Err(Error::Invalid("box requires lo <= hi componentwise".into()));
        }
        Ok(MonotoneOp::NormalCone { set: ConvexSet::Box { lo, hi } })
    }

    pub fn ball_cone(dim: usize, radius: f64, exponent: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(radius.is_finite() && radius > 0.0) || !(exponent.is_finite() && exponent > 1.0) {
            return Err(Error::Invalid("ball needs radius > 0 and exponent > 1".into()));
        }
        Ok(MonotoneOp::NormalCone { set: ConvexSet::Ball { dim, radius, exponent } })
    }

    pub fn p_laplacian(grid: Grid, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Invalid(format!("p-Laplacian exponent must be > 1, got {p}")));
        }
        Ok(MonotoneOp::DiscretePLaplacian { grid, p })
    }

    pub fn sum(ops: Vec<MonotoneOp>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::Invalid("empty operator sum".into()))?;
        let dim = first.dim();
        if ops.iter().any(|o| o.dim() != dim) {
            return Err(Error::Invalid("summands have different dimensions".into()));
        }
        Ok(MonotoneOp::Sum(ops))
    }

    pub fn scaled(factor: f64, op: MonotoneOp) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::Invalid(format!("scale factor must be >= 0, got {factor}")));
        }
        Ok(MonotoneOp::Scaled { factor, op: Box::new(op) })
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneOp::Zero { dim } => *dim,
            MonotoneOp::LinearPsd { matrix } => matrix.nrows(),
            MonotoneOp::Subdifferential { dim, .. } => *dim,
            MonotoneOp::PowerGraph { dim, .. } => *dim,
            MonotoneOp::NormalCone { set: ConvexSet::Box { lo, .. } } => lo.len(),
            MonotoneOp::NormalCone { set: ConvexSet::Ball { dim, .. } } => *dim,
            MonotoneOp::DiscretePLaplacian { grid, .. } => grid.unknowns(),
            MonotoneOp::Sum(ops) => ops[0].dim(),
            MonotoneOp::Scaled { op, .. } => op.dim(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MonotoneOp::Zero { .. } => "zero".into(),
            MonotoneOp::LinearPsd { .. } => "linear".into(),
            MonotoneOp::Subdifferential { f: ConvexFn::L1 { weight }, .. } => format!("l1(w={weight})"),
            MonotoneOp::Subdifferential { f: ConvexFn::Huber { delta }, .. } => format!("huber(d={delta})"),
            MonotoneOp::Subdifferential { f: ConvexFn::Energy(e), .. } => format!("subdiff({})", e.name()),
            MonotoneOp::PowerGraph { gamma, one_sided: false, .. } => format!("power(g={gamma})"),
            MonotoneOp::PowerGraph { gamma, one_sided: true, .. } => format!("half-line power(g={gamma})"),
            MonotoneOp::NormalCone { set: ConvexSet::Box { .. } } => "normal-cone(box)".into(),
            MonotoneOp::NormalCone { set: ConvexSet::Ball { exponent, radius, .. } } => {
                format!("normal-cone(l^{exponent} ball r={radius})")
            }
            MonotoneOp::DiscretePLaplacian { p, .. } => format!("p-laplacian(p={p})"),
            MonotoneOp::Sum(ops) => {
                let names: Vec<String> = ops.iter().map(|o| o.name()).collect();
                format!("sum[{}]", names.join(" + "))
            }
            MonotoneOp::Scaled { factor, op } => format!("{factor}*{}", op.name()),
        }
    }

    pub fn homogeneity(&self) -> Homogeneity {
        match self {
            MonotoneOp::Zero { .. } => Homogeneity::Any,
            MonotoneOp::LinearPsd { .. } => Homogeneity::Degree(1.0),
            MonotoneOp::Subdifferential { .. } => Homogeneity::None,
            MonotoneOp::PowerGraph { gamma, .. } => Homogeneity::Degree(*gamma),
            MonotoneOp::NormalCone { .. } => Homogeneity::None,
            MonotoneOp::DiscretePLaplacian { p, .. } => Homogeneity::Degree(p - 1.0),
            MonotoneOp::Sum(ops) => ops.iter().fold(Homogeneity::Any, |acc, o| match (acc, o.homogeneity()) {
                (Homogeneity::Any, h) | (h, Homogeneity::Any) => h,
                (Homogeneity::Degree(a), Homogeneity::Degree(b)) if (a - b).abs() <= 1e-12 * a.max(b) => {
                    Homogeneity::Degree(a)
                }
                _ => Homogeneity::None,
            }),
            MonotoneOp::Scaled { factor, op } if *factor == 0.0 => match op.homogeneity() {
                Homogeneity::None => Homogeneity::None,
                _ => Homogeneity::Any,
            },
            MonotoneOp::Scaled { op, .. } => op.homogeneity(),
        }
    }

    /// Whether every coordinate of the graph decouples into a scalar monotone graph.
    pub fn is_separable(&self) -> bool {
        match self {
            MonotoneOp::Zero { .. } => true,
            MonotoneOp::LinearPsd { matrix } => {
                let n = matrix.nrows();
                (0..n).all(|i| (0..n).all(|j| i == j || matrix[(i, j)] == 0.0))
            }
            MonotoneOp::Subdifferential { f, .. } => !matches!(f, ConvexFn::Energy(_)),
            MonotoneOp::PowerGraph { .. } => true,
            MonotoneOp::NormalCone { set } => matches!(set, ConvexSet::Box { .. }),
            MonotoneOp::DiscretePLaplacian { .. } => false,
            MonotoneOp::Sum(ops) => ops.iter().all(|o| o.is_separable()),
            MonotoneOp::Scaled { op, .. } => op.is_separable(),
        }
    }

    /// Whether `Ax` is a singleton for every `x ∈ D(A)` and `D(A) = ℝⁿ`.
    pub fn is_single_valued(&self) -> bool {
        match self {
            MonotoneOp::Zero { .. } | MonotoneOp::LinearPsd { .. } | MonotoneOp::DiscretePLaplacian { .. } => true,
            MonotoneOp::Subdifferential { f, .. } => !matches!(f, ConvexFn::L1 { weight } if *weight > 0.0),
            MonotoneOp::PowerGraph { one_sided, .. } => !one_sided,
            MonotoneOp::NormalCone { .. } => false,
            MonotoneOp::Sum(ops) => ops.iter().all(|o| o.is_single_valued()),
            MonotoneOp::Scaled { op, .. } => op.is_single_valued(),
        }
    }

    /// Whether the graph of `A` is the gradient of a convex energy that [`MonotoneOp::energy_value`] evaluates.
    pub fn has_energy(&self) -> bool {
        match self {
            MonotoneOp::Zero { .. } | MonotoneOp::DiscretePLaplacian { .. } => true,
            MonotoneOp::LinearPsd { matrix } => (matrix - matrix.transpose()).abs().max() == 0.0,
            MonotoneOp::Subdifferential { f, .. } => !matches!(f, ConvexFn::L1 { .. }),
            MonotoneOp::PowerGraph { one_sided, .. } => !one_sided,
            MonotoneOp::NormalCone { .. } => false,
            MonotoneOp::Sum(ops) => ops.iter().all(|o| o.has_energy()),
            MonotoneOp::Scaled { op, .. } => op.has_energy(),
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            MonotoneOp::PowerGraph { one_sided: true, .. } => x.iter().all(|&v| v >= 0.0),
            MonotoneOp::NormalCone { set: ConvexSet::Box { lo, hi } } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
            }
            MonotoneOp::NormalCone { set: ConvexSet::Ball { radius, exponent, .. } } => {
                lp_norm(x, *exponent) <= radius * (1.0 + 1e-12)
            }
            MonotoneOp::Sum(ops) => ops.iter().all(|o| o.in_domain(x)),
            MonotoneOp::Scaled { op, .. } => op.in_domain(x),
            _ => true,
        }
    }

    /// Scalar graph of coordinate `i` of a separable operator as the interval
    /// `[lo, hi] = A_i(u)`. Outside the domain the interval degenerates to
    /// `(-∞, -∞)` on the left and `(+∞, +∞)` on the right, which keeps the
    /// extended graph monotone.
    pub(crate) fn scalar_interval(&self, i: usize, u: f64) -> (f64, f64) {
        let inf = f64::INFINITY;
        match self {
            MonotoneOp::Zero { .. } => (0.0, 0.0),
            MonotoneOp::LinearPsd { matrix } => {
                let v = matrix[(i, i)] * u;
                (v, v)
            }
            MonotoneOp::Subdifferential { f: ConvexFn::L1 { weight }, .. } => {
                if u > 0.0 {
                    (*weight, *weight)
                } else if u < 0.0 {
                    (-weight, -weight)
                } else {
                    (-weight, *weight)
                }
            }
            MonotoneOp::Subdifferential { f: ConvexFn::Huber { delta }, .. } => {
                let v = u.clamp(-delta, *delta);
                (v, v)
            }
            MonotoneOp::PowerGraph { gamma, coeff, one_sided, .. } => {
                if *one_sided {
                    if u > 0.0 {
                        let v = coeff * u.powf(*gamma);
                        (v, v)
                    } else if u == 0.0 {
                        (-inf, 0.0)
                    } else {
                        (-inf, -inf)
                    }
                } else {
                    let v = coeff * spow(u, *gamma);
                    (v, v)
                }
            }
            MonotoneOp::NormalCone { set: ConvexSet::Box { lo, hi } } => {
                let (a, b) = (lo[i], hi[i]);
                if u < a {
                    (-inf, -inf)
                } else if u > b {
                    (inf, inf)
                } else if a == b {
                    (-inf, inf)
                } else if u == a {
                    (-inf, 0.0)
                } else if u == b {
                    (0.0, inf)
                } else {
                    (0.0, 0.0)
                }
            }
            MonotoneOp::Sum(ops) => ops.iter().fold((0.0, 0.0), |(lo, hi), o| {
                let (a, b) = o.scalar_interval(i, u);
                (lo + a, hi + b)
            }),
            MonotoneOp::Scaled { factor, op } => {
                let (a, b) = op.scalar_interval(i, u);
                if *factor == 0.0 {
                    if a == b && a.is_infinite() {
                        (a, b)
                    } else {
                        (0.0, 0.0)
                    }
                } else {
                    (factor * a, factor * b)
                }
            }
            MonotoneOp::Subdifferential { f: ConvexFn::Energy(_), .. }
            | MonotoneOp::NormalCone { set: ConvexSet::Ball { .. } }
            | MonotoneOp::DiscretePLaplacian { .. } => {
                unreachable!("scalar_interval called on a non-separable operator")
            }
        }
    }

    /// Slope of the scalar graph of coordinate `i` at a point where it is single-valued.
    pub(crate) fn scalar_slope(&self, i: usize, u: f64) -> f64 {
        match self {
            MonotoneOp::Zero { .. } => 0.0,
            MonotoneOp::LinearPsd { matrix } => matrix[(i, i)],
            MonotoneOp::Subdifferential { f: ConvexFn::L1 { .. }, .. } => 0.0,
            MonotoneOp::Subdifferential { f: ConvexFn::Huber { delta }, .. } => {
                if u.abs() < *delta {
                    1.0
                } else {
                    0.0
                }
            }
            MonotoneOp::PowerGraph { gamma, coeff, .. } => {
                if u == 0.0 {
                    if *gamma > 1.0 {
                        0.0
                    } else if *gamma == 1.0 {
                        *coeff
                    } else {
                        f64::INFINITY
                    }
                } else {
                    coeff * gamma * u.abs().powf(gamma - 1.0)
                }
            }
            MonotoneOp::NormalCone { .. } => 0.0,
            MonotoneOp::Sum(ops) => ops.iter().map(|o| o.scalar_slope(i, u)).sum(),
            MonotoneOp::Scaled { factor, op } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * op.scalar_slope(i, u)
                }
            }
            _ => unreachable!("scalar_slope called on a non-separable operator"),
        }
    }

    /// `Ax` for single-valued operators.
    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        if !self.is_single_valued() {
            return Err(Error::Unsupported(format!("{} is multivalued; use min_section", self.name())));
        }
        Ok(self.value_unchecked(x))
    }

    fn value_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MonotoneOp::Zero { dim } => vec![0.0; *dim],
            MonotoneOp::LinearPsd { matrix } => crate::linalg::mat_vec(matrix, x),
            MonotoneOp::Subdifferential { f: ConvexFn::Energy(e), .. } => e.gradient(x),
            MonotoneOp::DiscretePLaplacian { grid, p } => p_laplacian_apply(grid, *p, x),
            MonotoneOp::Sum(ops) => {
                let mut out = vec![0.0; x.len()];
                for o in ops {
                    for (acc, v) in out.iter_mut().zip(o.value_unchecked(x)) {
                        *acc += v;
                    }
                }
                out
            }
            MonotoneOp::Scaled { factor, op } => op.value_unchecked(x).into_iter().map(|v| factor * v).collect(),
            _ => (0..x.len()).map(|i| self.scalar_interval(i, x[i]).0).collect(),
        }
    }

    /// Jacobian of a single-valued operator. Power terms with negative
    /// exponent are evaluated at `max(|s|, floor)` so the matrix stays finite.
    pub fn jacobian(&self, x: &[f64], floor: f64) -> Option<DMatrix<f64>> {
        let n = self.dim();
        match self {
            MonotoneOp::Zero { .. } => Some(DMatrix::zeros(n, n)),
            MonotoneOp::LinearPsd { matrix } => Some(matrix.clone()),
            MonotoneOp::Subdifferential { f: ConvexFn::Energy(e), .. } => Some(e.hessian(x)),
            MonotoneOp::Subdifferential { f: ConvexFn::Huber { .. }, .. } => {
                Some(DMatrix::from_fn(n, n, |i, j| if i == j { self.scalar_slope(i, x[i]) } else { 0.0 }))
            }
            MonotoneOp::Subdifferential { f: ConvexFn::L1 { weight }, .. } => {
                (*weight == 0.0).then(|| DMatrix::zeros(n, n))
            }
            MonotoneOp::PowerGraph { gamma, coeff, one_sided: false, .. } => Some(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    coeff * gamma * x[i].abs().max(floor).powf(gamma - 1.0)
                } else {
                    0.0
                }
            })),
            MonotoneOp::DiscretePLaplacian { grid, p } => Some(p_laplacian_jacobian(grid, *p, x, floor)),
            MonotoneOp::Sum(ops) => {
                let mut acc = DMatrix::zeros(n, n);
                for o in ops {
                    acc += o.jacobian(x, floor)?;
                }
                Some(acc)
            }
            MonotoneOp::Scaled { factor, op } => op.jacobian(x, floor).map(|j| j * *factor),
            _ => None,
        }
    }

    /// Convex energy whose gradient is `A`, when [`MonotoneOp::has_energy`] holds.
    pub fn energy_value(&self, x: &[f64]) -> Option<f64> {
        match self {
            MonotoneOp::Zero { .. } => Some(0.0),
            MonotoneOp::LinearPsd { matrix } if self.has_energy() => {
                Some(0.5 * pairing(&crate::linalg::mat_vec(matrix, x), x))
            }
            MonotoneOp::Subdifferential { f: ConvexFn::Energy(e), .. } => Some(e.value(x)),
            MonotoneOp::Subdifferential { f: ConvexFn::Huber { delta }, .. } => Some(
                x.iter()
                    .map(|&u| if u.abs() <= *delta { 0.5 * u * u } else { delta * (u.abs() - 0.5 * delta) })
                    .sum(),
            ),
            MonotoneOp::PowerGraph { gamma, coeff, one_sided: false, .. } => {
                Some(coeff / (gamma + 1.0) * x.iter().map(|u| u.abs().powf(gamma + 1.0)).sum::<f64>())
            }
            MonotoneOp::DiscretePLaplacian { grid, p } => Some(p_laplacian_energy(grid, *p, x)),
            MonotoneOp::Sum(ops) => ops.iter().map(|o| o.energy_value(x)).sum(),
            MonotoneOp::Scaled { factor, op } => op.energy_value(x).map(|v| factor * v),
            _ => None,
        }
    }

    /// Distance (in `l^∞`) from `y` to the set `Ax`.
    pub fn graph_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain { op: self.name() });
        }
        if self.is_separable() {
            return Ok((0..x.len())
                .map(|i| {
                    let (lo, hi) = self.scalar_interval(i, x[i]);
                    if y[i] < lo {
                        lo - y[i]
                    } else if y[i] > hi {
                        y[i] - hi
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max));
        }
        if self.is_single_valued() {
            let ax = self.value_unchecked(x);
            return Ok(ax.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        match self {
            MonotoneOp::NormalCone { set: ConvexSet::Ball { radius, exponent, .. } } => {
                let nx = lp_norm(x, *exponent);
                if nx < radius * (1.0 - 1e-12) {
                    return Ok(inf_norm(y));
                }
                // boundary: the cone is the ray spanned by the gradient of ‖·‖_r^r
                let g = power_map(x, *exponent);
                let gg = pairing(&g, &g);
                let mu = if gg > 0.0 { (pairing(y, &g) / gg).max(0.0) } else { 0.0 };
                Ok(y.iter().zip(&g).map(|(a, b)| (a - mu * b).abs()).fold(0.0, f64::max))
            }
            MonotoneOp::Scaled { factor, op } if *factor > 0.0 => {
                let ys: Vec<f64> = y.iter().map(|v| v / factor).collect();
                Ok(factor * op.graph_distance(x, &ys)?)
            }
            _ => Err(Error::Unsupported(format!("graph membership for {}", self.name()))),
        }
    }

    /// Least-norm element `A^0 x` of `Ax`.
    pub fn min_section(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain { op: self.name() });
        }
        if self.is_separable() {
            // the dual norm is a sum of coordinate terms, so the least-norm
            // element picks the least-magnitude point of every interval
            return Ok((0..x.len())
                .map(|i| {
                    let (lo, hi) = self.scalar_interval(i, x[i]);
                    if lo > 0.0 {
                        lo
                    } else if hi < 0.0 {
                        hi
                    } else {
                        0.0
                    }
                })
                .collect());
        }
        if self.is_single_valued() {
            return Ok(self.value_unchecked(x));
        }
        match self {
            MonotoneOp::NormalCone { .. } => Ok(vec![0.0; x.len()]),
            MonotoneOp::Scaled { factor, op } => Ok(op.min_section(x)?.into_iter().map(|v| factor * v).collect()),
            _ => Err(Error::Unsupported(format!("minimal section of {}", self.name()))),
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "{} acts on R^{} but got a vector of length {}",
                self.name(),
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Random point of `D(A)`; a fraction of draws land on the relative boundary
    /// where multivalued operators have nontrivial images.
    pub fn sample_domain<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        match self {
            MonotoneOp::PowerGraph { one_sided: true, .. } => (0..n)
                .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) })
                .collect(),
            MonotoneOp::NormalCone { set: ConvexSet::Box { lo, hi } } => (0..n)
                .map(|i| match rng.gen_range(0..5) {
                    0 => lo[i],
                    1 => hi[i],
                    _ => lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>(),
                })
                .collect(),
            MonotoneOp::NormalCone { set: ConvexSet::Ball { radius, exponent, .. } } => {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nv = lp_norm(&v, *exponent).max(1e-12);
                let r = if rng.gen_bool(0.3) { *radius } else { radius * rng.gen::<f64>() };
                v.iter().map(|c| c * r / nv).collect()
            }
            MonotoneOp::Sum(ops) => {
                for _ in 0..1000 {
                    let cand = ops[rng.gen_range(0..ops.len())].sample_domain(rng);
                    if self.in_domain(&cand) {
                        return cand;
                    }
                }
                vec![0.0; n]
            }
            MonotoneOp::Scaled { op, .. } => op.sample_domain(rng),
            _ => (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        }
    }

    /// Random element of `Ax` for `x ∈ D(A)`.
    pub fn sample_image<R: Rng>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain { op: self.name() });
        }
        if self.is_separable() {
            return Ok((0..x.len())
                .map(|i| {
                    let (lo, hi) = self.scalar_interval(i, x[i]);
                    let w: f64 = rng.gen_range(0.0..3.0);
                    match (lo.is_finite(), hi.is_finite()) {
                        (true, true) => lo + (hi - lo) * rng.gen::<f64>(),
                        (false, true) => hi - w,
                        (true, false) => lo + w,
                        (false, false) => rng.gen_range(-3.0..3.0),
                    }
                })
                .collect());
        }
        if self.is_single_valued() {
            return Ok(self.value_unchecked(x));
        }
        match self {
            MonotoneOp::NormalCone { set: ConvexSet::Ball { radius, exponent, .. } } => {
                if lp_norm(x, *exponent) < radius * (1.0 - 1e-12) {
                    Ok(vec![0.0; x.len()])
                } else {
                    let mu: f64 = rng.gen_range(0.0..3.0);
                    Ok(power_map(x, *exponent).into_iter().map(|g| mu * g).collect())
                }
            }
            MonotoneOp::Scaled { factor, op } => Ok(op.sample_image(x, rng)?.into_iter().map(|v| factor * v).collect()),
            _ => self.min_section(x),
        }
    }
}

fn flux(s: f64, p: f64) -> f64 {
    spow(s, p - 1.0)
}

fn edge_slope(e: &Edge, u: &[f64]) -> f64 {
    let a = e.left.map_or(0.0, |k| u[k]);
    let b = e.right.map_or(0.0, |k| u[k]);
    (b - a) / e.h
}

pub(crate) fn p_laplacian_apply(grid: &Grid, p: f64, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for e in grid.edges() {
        let f = flux(edge_slope(&e, u), p) / e.h;
        if let Some(a) = e.left {
            out[a] -= f;
        }
        if let Some(b) = e.right {
            out[b] += f;
        }
    }
    out
}

fn p_laplacian_jacobian(grid: &Grid, p: f64, u: &[f64], floor: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    for e in grid.edges() {
        let s = edge_slope(&e, u);
        let d = (p - 1.0) * s.abs().max(floor).powf(p - 2.0) / (e.h * e.h);
        if let Some(a) = e.left {
            jac[(a, a)] += d;
        }
        if let Some(b) = e.right {
            jac[(b, b)] += d;
        }
        if let (Some(a), Some(b)) = (e.left, e.right) {
            jac[(a, b)] -= d;
            jac[(b, a)] -= d;
        }
    }
    jac
}

/// `E(u) = (1/p) Σ_edges |Δu/h|^p`, whose gradient is the stencil.
pub(crate) fn p_laplacian_energy(grid: &Grid, p: f64, u: &[f64]) -> f64 {
    grid.edges().iter().map(|e| edge_slope(e, u).abs().powf(p)).sum::<f64>() / p
}

/// Spot check of `⟨u − v, x − y⟩ ≥ 0` over random graph pairs.
pub fn check_monotone(op: &MonotoneOp, sample_count: usize, seed: u64) -> Result<VerifierReport> {
    if sample_count == 0 {
        return Err(Error::Invalid("sample_count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = Check::new("pairwise monotonicity");
    for _ in 0..sample_count {
        let x = op.sample_domain(&mut rng);
        let y = op.sample_domain(&mut rng);
        let u = op.sample_image(&x, &mut rng)?;
        let v = op.sample_image(&y, &mut rng)?;
        let du: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let pr = pairing(&du, &dx);
        if pr < -1e-12 {
            check.fail(-pr, format!("x={x:?} u={u:?} y={y:?} v={v:?} pairing={pr:e}"));
        }
    }
    let mut report = VerifierReport::new(format!("monotonicity of {}", op.name()));
    report.push(check);
    Ok(report)
}

/// Scales used by [`check_homogeneous`].
pub const HOMOGENEITY_SCALES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 7.3];

/// Spot check of `(sx, s^γ y) ∈ Gr(A)` for graph samples `(x, y)`; at
/// `s = 0` only `0 ∈ A(0)` is required.
pub fn check_homogeneous(op: &MonotoneOp, gamma: f64, samples: usize, seed: u64) -> Result<VerifierReport> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!("homogeneity degree must be > 0, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifierReport::new(format!("homogeneity of degree {gamma} for {}", op.name()));
    let mut at_zero = Check::new("0 in A(0)");
    let zero = vec![0.0; op.dim()];
    match op.graph_distance(&zero, &zero) {
        Ok(d) if d <= 1e-12 => {}
        Ok(d) => at_zero.fail(d, "0 is not in A(0)".into()),
        Err(e) => at_zero.fail(f64::INFINITY, format!("0 not in D(A): {e}")),
    }
    report.push(at_zero);
    let mut scaling = Check::new("s^gamma * y in A(s x)");
    for _ in 0..samples {
        let x = op.sample_domain(&mut rng);
        let y = op.sample_image(&x, &mut rng)?;
        for &s in HOMOGENEITY_SCALES.iter().filter(|s| **s > 0.0) {
            let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
            let f = s.powf(gamma);
            let sy: Vec<f64> = y.iter().map(|v| f * v).collect();
            let tol = 1e-10 * (1.0 + inf_norm(&sy));
            match op.graph_distance(&sx, &sy) {
                Ok(d) if d <= tol => scaling.observe(d / (1.0 + inf_norm(&sy))),
                Ok(d) => scaling.fail(d / (1.0 + inf_norm(&sy)), format!("s={s} x={x:?} y={y:?} dist={d:e}")),
                Err(e) => scaling.fail(f64::INFINITY, format!("s={s} x={x:?}: {e}")),
            }
        }
    }
    report.push(scaling);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn min_section_examples() {
        let abs = MonotoneOp::l1(1.0, 1).unwrap();
        assert_eq!(abs.min_section(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(abs.min_section(&[-2.0]).unwrap(), vec![-1.0]);
        let cone = MonotoneOp::box_cone(vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(cone.min_section(&[1.0]).unwrap(), vec![0.0]);
        let half = MonotoneOp::one_sided_power(2.0, 1.0, 1).unwrap();
        assert_eq!(half.min_section(&[0.0]).unwrap(), vec![0.0]);
        assert_relative_eq!(half.min_section(&[3.0]).unwrap()[0], 9.0);
    }

    #[test]
    fn min_section_outside_domain_names_operator() {
        let cone = MonotoneOp::box_cone(vec![-1.0], vec![1.0]).unwrap();
        match cone.min_section(&[2.0]) {
            Err(Error::OutsideDomain { op }) => assert!(op.contains("normal-cone")),
            other => panic!("expected domain error, got {other:?}"),
        }
        let half = MonotoneOp::one_sided_power(2.0, 1.0, 1).unwrap();
        assert!(half.min_section(&[-0.1]).is_err());
    }

    #[test]
    fn half_line_graph_at_zero() {
        let half = MonotoneOp::one_sided_power(3.0, 1.0, 1).unwrap();
        // A(0) = (-inf, 0]
        assert_eq!(half.graph_distance(&[0.0], &[-17.0]).unwrap(), 0.0);
        assert_eq!(half.graph_distance(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_relative_eq!(half.graph_distance(&[0.0], &[0.5]).unwrap(), 0.5);
        // scaling the graph point (0, -1) by s = 0 gives (0, 0) which is in A(0),
        // even though 0·A(0) = {0} is a strict subset of A(0)
        let r = check_homogeneous(&half, 3.0, 50, 1).unwrap();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn monotonicity_examples() {
        let cube = MonotoneOp::power(3.0, 1.0, 1).unwrap();
        assert!(check_monotone(&cube, 500, 42).unwrap().passed());

        let neg = MonotoneOp::linear_unchecked(-DMatrix::<f64>::identity(2, 2)).unwrap();
        let r = check_monotone(&neg, 20, 42).unwrap();
        assert!(!r.passed());
        assert!(!r.checks[0].witnesses.is_empty());

        let sum = MonotoneOp::sum(vec![
            MonotoneOp::power(2.0, 1.0, 2).unwrap(),
            MonotoneOp::l1(0.5, 2).unwrap(),
        ])
        .unwrap();
        assert!(check_monotone(&sum, 500, 42).unwrap().passed());

        let cone = MonotoneOp::box_cone(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(check_monotone(&cone, 500, 3).unwrap().passed());
        let ball = MonotoneOp::ball_cone(3, 1.5, 3.0).unwrap();
        assert!(check_monotone(&ball, 500, 3).unwrap().passed());
    }

    #[test]
    fn linear_psd_rejects_indefinite() {
        assert!(MonotoneOp::linear_psd(-DMatrix::<f64>::identity(2, 2)).is_err());
        // skew part is allowed
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, -5.0, 1.0]);
        assert!(MonotoneOp::linear_psd(m).is_ok());
    }

    #[test]
    fn homogeneity_examples() {
        let sq = MonotoneOp::power(2.0, 1.0, 1).unwrap();
        assert!(check_homogeneous(&sq, 2.0, 100, 7).unwrap().passed());

        let lap = MonotoneOp::p_laplacian(Grid::new_line(8).unwrap(), 3.0).unwrap();
        assert!(check_homogeneous(&lap, 2.0, 100, 7).unwrap().passed());

        let lap2 = MonotoneOp::p_laplacian(Grid::new_square(4, 4).unwrap(), 3.0).unwrap();
        assert!(check_homogeneous(&lap2, 2.0, 50, 7).unwrap().passed());

        let lin = MonotoneOp::scaled_identity(2.0, 2).unwrap();
        assert!(!check_homogeneous(&lin, 2.0, 20, 7).unwrap().passed());
        assert!(check_homogeneous(&lin, 1.0, 20, 7).unwrap().passed());
    }

    #[test]
    fn p_laplacian_single_node() {
        // one interior node, h = 1/2: Au = 2 Φ(u/h)/h = 16|u|u for p = 3
        let lap = MonotoneOp::p_laplacian(Grid::new_line(2).unwrap(), 3.0).unwrap();
        for u in [-0.3, 0.0, 0.0625, 1.7] {
            assert_relative_eq!(lap.value(&[u]).unwrap()[0], 16.0 * u.abs() * u, max_relative = 1e-14);
        }
    }

    #[test]
    fn p_laplacian_p2_is_tridiagonal_laplacian() {
        let n = 5;
        let lap = MonotoneOp::p_laplacian(Grid::new_line(n).unwrap(), 2.0).unwrap();
        let h2 = 1.0 / (n * n) as f64;
        let u = [0.3, -1.0, 2.0, 0.5];
        let au = lap.value(&u).unwrap();
        let pad = |k: isize| if k < 0 || k as usize >= u.len() { 0.0 } else { u[k as usize] };
        for i in 0..u.len() {
            let k = i as isize;
            let expect = (2.0 * pad(k) - pad(k - 1) - pad(k + 1)) / h2;
            assert_relative_eq!(au[i], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn p_laplacian_is_energy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for grid in [Grid::new_line(7).unwrap(), Grid::new_square(3, 4).unwrap()] {
            for p in [1.5, 2.0, 3.0, 4.5] {
                let u: Vec<f64> = (0..grid.unknowns()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let grad = p_laplacian_apply(&grid, p, &u);
                for i in 0..u.len() {
                    let h = 1e-6;
                    let mut up = u.clone();
                    let mut um = u.clone();
                    up[i] += h;
                    um[i] -= h;
                    let fd = (p_laplacian_energy(&grid, p, &up) - p_laplacian_energy(&grid, p, &um)) / (2.0 * h);
                    assert!((fd - grad[i]).abs() <= 1e-6 * (1.0 + grad[i].abs()), "p={p} i={i}: {fd} vs {}", grad[i]);
                }
            }
        }
    }

    #[test]
    fn p_laplacian_jacobian_matches_fd() {
        let grid = Grid::new_square(3, 3).unwrap();
        let op = MonotoneOp::p_laplacian(grid, 3.0).unwrap();
        let u = [0.1, -0.4, 0.7, 0.2];
        let j = op.jacobian(&u, 0.0).unwrap();
        let fu = op.value(&u).unwrap();
        let fd = crate::linalg::fd_jacobian(|z| op.value(z), &u, &fu).unwrap();
        assert!((j - fd).abs().max() < 1e-4);
    }

    #[test]
    fn ball_cone_membership() {
        let ball = MonotoneOp::ball_cone(2, 1.0, 2.0).unwrap();
        assert_eq!(ball.graph_distance(&[0.5, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(ball.graph_distance(&[1.0, 0.0], &[3.0, 0.0]).unwrap() < 1e-15);
        assert_relative_eq!(ball.graph_distance(&[1.0, 0.0], &[-3.0, 0.0]).unwrap(), 3.0);
        assert!(!ball.in_domain(&[1.0, 1.0]));
    }

    #[test]
    fn declared_homogeneity() {
        assert_eq!(MonotoneOp::power(2.5, 1.0, 2).unwrap().homogeneity(), Homogeneity::Degree(2.5));
        assert_eq!(MonotoneOp::zero(2).unwrap().homogeneity(), Homogeneity::Any);
        let s = MonotoneOp::sum(vec![
            MonotoneOp::zero(3).unwrap(),
            MonotoneOp::p_laplacian(Grid::new_line(4).unwrap(), 3.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(s.homogeneity(), Homogeneity::Degree(2.0));
        assert_eq!(MonotoneOp::l1(1.0, 1).unwrap().homogeneity(), Homogeneity::None);
    }
}
