//! Regularized inclusions `A_t^φ x + C x + q_ε x = 0` and the annulus search.
//!
//! `A` is positively homogeneous of degree `γ` and the gauge exponent is
//! locked to `p = γ + 1`, which makes `A_t^φ` homogeneous of the same degree.
//! The multifunction `T` is replaced by a continuous selection `q_ε`. A
//! nonzero solution is located by comparing the degrees of the regularized
//! map on two nested balls `G2 ⊂ G1`, searching the annulus `G1 ∖ G2` with
//! deflated Newton from deterministic seeds, and following every root
//! down a decreasing `(t, ε)` schedule.

use std::cell::RefCell;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::degree::{degree_on_with_jacobian, halton, DegreeMethod, DegreeOptions, DegreeReport, Excision, Region};
use crate::error::{Error, Result};
use crate::linalg::{dot, fd_jacobian, mat_vec, newton, NewtonOptions, NewtonSystem};
use crate::operators::{check_homogeneous, Homogeneity, MonotoneOp};
use crate::space::{inf_norm, lp_norm, normalized_duality, pairing, spow, Gauge};
use crate::yosida::{solve_raw_from, yosida_jacobian, Raw, ResolventOptions};

/// A user supplied continuous map `ℝⁿ → ℝⁿ`.
pub trait VectorField: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> Vec<f64>;

    /// Analytic Jacobian, if available; finite differences are used otherwise.
    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// The single-valued perturbation `C`.
#[derive(Clone, Debug)]
pub enum CMap {
    Zero,
    /// `x ↦ M x + b`.
    Affine { matrix: DMatrix<f64>, offset: Vec<f64> },
    /// `x_i ↦ coeff·|x_i|^{r−2} x_i + forcing_i`; an empty forcing means zero.
    Pointwise { coeff: f64, exponent: f64, forcing: Vec<f64> },
    /// `scale · J x` with `J` the normalized duality map of `l^p`.
    NormalizedDuality { p: f64, scale: f64 },
    Custom(Arc<dyn VectorField>),
    Sum(Vec<CMap>),
}

impl CMap {
    /// `x ↦ a x`.
    pub fn linear(a: f64) -> Self {
        CMap::Pointwise { coeff: a, exponent: 2.0, forcing: Vec::new() }
    }

    /// `x ↦ a x − c`.
    pub fn shifted(a: f64, c: Vec<f64>) -> Self {
        CMap::Pointwise { coeff: a, exponent: 2.0, forcing: c.into_iter().map(|v| -v).collect() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            CMap::Zero | CMap::Custom(_) => Ok(()),
            CMap::Affine { matrix, offset } => {
                if matrix.nrows() != dim || matrix.ncols() != dim || offset.len() != dim {
                    return Err(Error::Validation(format!("affine C must be {dim}x{dim} with offset of length {dim}")));
                }
                Ok(())
            }
            CMap::Pointwise { coeff, exponent, forcing } => {
                if !coeff.is_finite() || !(exponent.is_finite() && *exponent > 1.0) {
                    return Err(Error::Validation("pointwise C needs a finite coefficient and exponent > 1".into()));
                }
                if !forcing.is_empty() && forcing.len() != dim {
                    return Err(Error::Validation(format!("forcing has length {}, expected {dim}", forcing.len())));
                }
                Ok(())
            }
            CMap::NormalizedDuality { p, scale } => {
                if !(*p > 1.0) || !scale.is_finite() {
                    return Err(Error::Validation("duality C needs p > 1 and a finite scale".into()));
                }
                Ok(())
            }
            CMap::Sum(parts) => parts.iter().try_for_each(|c| c.validate(dim)),
        }
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CMap::Zero => vec![0.0; x.len()],
            CMap::Affine { matrix, offset } => {
                mat_vec(matrix, x).into_iter().zip(offset).map(|(a, b)| a + b).collect()
            }
            CMap::Pointwise { coeff, exponent, forcing } => x
                .iter()
                .enumerate()
                .map(|(i, &v)| coeff * spow(v, exponent - 1.0) + forcing.get(i).copied().unwrap_or(0.0))
                .collect(),
            CMap::NormalizedDuality { p, scale } => normalized_duality(x, *p).into_iter().map(|v| scale * v).collect(),
            CMap::Custom(f) => f.value(x),
            CMap::Sum(parts) => {
                let mut out = vec![0.0; x.len()];
                for c in parts {
                    for (o, v) in out.iter_mut().zip(c.value(x)) {
                        *o += v;
                    }
                }
                out
            }
        }
    }

    pub fn jacobian(&self, x: &[f64], floor: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        Ok(match self {
            CMap::Zero => DMatrix::zeros(n, n),
            CMap::Affine { matrix, .. } => matrix.clone(),
            CMap::Pointwise { coeff, exponent, .. } => DMatrix::from_fn(n, n, |i, j| {
                if i != j {
                    0.0
                } else if *exponent == 2.0 {
                    *coeff
                } else {
                    coeff * (exponent - 1.0) * x[i].abs().max(floor).powf(exponent - 2.0)
                }
            }),
            CMap::NormalizedDuality { p, scale } => {
                let nx = lp_norm(x, *p);
                if nx == 0.0 {
                    DMatrix::identity(n, n) * *scale
                } else {
                    let phi: Vec<f64> = x.iter().map(|&v| spow(v, p - 1.0)).collect();
                    let a = nx.powf(2.0 - p);
                    let b = (2.0 - p) * nx.powf(2.0 - 2.0 * p);
                    DMatrix::from_fn(n, n, |i, j| {
                        let diag = if i == j { a * (p - 1.0) * x[i].abs().max(floor).powf(p - 2.0) } else { 0.0 };
                        scale * (diag + b * phi[i] * phi[j])
                    })
                }
            }
            CMap::Custom(f) => match f.jacobian(x) {
                Some(j) => j,
                None => fd_jacobian(|y| Ok(f.value(y)), x, &f.value(x))?,
            },
            CMap::Sum(parts) => {
                let mut acc = DMatrix::zeros(n, n);
                for c in parts {
                    acc += c.jacobian(x, floor)?;
                }
                acc
            }
        })
    }
}

/// `c0 + c1·r + cabs·|r| + c2·r²`, one endpoint of an interval-valued reaction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bound {
    pub c0: f64,
    pub c1: f64,
    pub cabs: f64,
    pub c2: f64,
}

impl Bound {
    pub fn constant(c: f64) -> Self {
        Self { c0: c, ..Self::default() }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.c0 + self.c1 * r + self.cabs * r.abs() + self.c2 * r * r
    }

    fn slope(&self, r: f64) -> f64 {
        let s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.c1 + self.cabs * s + 2.0 * self.c2 * r
    }

    fn midpoint(&self, other: &Bound) -> Bound {
        Bound {
            c0: 0.5 * (self.c0 + other.c0),
            c1: 0.5 * (self.c1 + other.c1),
            cabs: 0.5 * (self.cabs + other.cabs),
            c2: 0.5 * (self.c2 + other.c2),
        }
    }
}

/// The multivalued part `T`.
#[derive(Clone, Debug)]
pub enum Multifunction {
    Zero,
    Singleton(CMap),
    /// Coordinatewise `T(x)_i = [lower(x_i), upper(x_i)]`.
    Interval { lower: Bound, upper: Bound },
}

const QUAD_NODES: usize = 64;

/// Continuous selection `q_ε` of a multifunction.
#[derive(Clone, Debug)]
pub struct Selection {
    kind: SelectionKind,
    eps: f64,
}

#[derive(Clone, Debug)]
enum SelectionKind {
    Zero,
    Exact(CMap),
    /// Midpoint of the bounds averaged against a compact bump of half-width ε.
    Mollified { mid: Bound, nodes: Vec<f64>, weights: Vec<f64> },
}

impl Selection {
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            SelectionKind::Zero => vec![0.0; x.len()],
            SelectionKind::Exact(c) => c.value(x),
            SelectionKind::Mollified { mid, nodes, weights } => x
                .iter()
                .map(|&v| nodes.iter().zip(weights).map(|(s, w)| w * mid.eval(v + self.eps * s)).sum())
                .collect(),
        }
    }

    pub fn jacobian(&self, x: &[f64], floor: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        match &self.kind {
            SelectionKind::Zero => Ok(DMatrix::zeros(n, n)),
            SelectionKind::Exact(c) => c.jacobian(x, floor),
            SelectionKind::Mollified { mid, nodes, weights } => Ok(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    nodes.iter().zip(weights).map(|(s, w)| w * mid.slope(x[i] + self.eps * s)).sum()
                } else {
                    0.0
                }
            })),
        }
    }
}

/// Builds `q_ε`: the exact map for singletons, and for interval-valued `T`
/// the midpoint `(lower + upper)/2` mollified with the biweight kernel
/// `(15/16)(1 − s²)²` scaled to `[−ε, ε]`.
pub fn make_selection(t: &Multifunction, eps: f64) -> Result<Selection> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be > 0, got {eps}")));
    }
    let kind = match t {
        Multifunction::Zero => SelectionKind::Zero,
        Multifunction::Singleton(c) => SelectionKind::Exact(c.clone()),
        Multifunction::Interval { lower, upper } => {
            validate_interval(lower, upper)?;
            let h = 2.0 / QUAD_NODES as f64;
            let nodes: Vec<f64> = (0..QUAD_NODES).map(|k| -1.0 + h * (k as f64 + 0.5)).collect();
            let raw: Vec<f64> = nodes.iter().map(|s| (1.0 - s * s).powi(2)).collect();
            let total: f64 = raw.iter().sum();
            let weights = raw.into_iter().map(|w| w / total).collect();
            SelectionKind::Mollified { mid: lower.midpoint(upper), nodes, weights }
        }
    };
    Ok(Selection { kind, eps })
}

fn validate_interval(lower: &Bound, upper: &Bound) -> Result<()> {
    for k in 0..=2000 {
        let r = -100.0 + 0.1 * k as f64;
        let (lo, hi) = (lower.eval(r), upper.eval(r));
        if lo > hi + 1e-12 * (1.0 + lo.abs()) {
            return Err(Error::MalformedMultifunction(format!("lower bound {lo} exceeds upper bound {hi} at r = {r}")));
        }
    }
    Ok(())
}

/// `A x + C x + T x ∋ 0` with the data needed to localize a nonzero solution.
#[derive(Clone, Debug)]
pub struct InclusionProblem {
    op: MonotoneOp,
    gamma: f64,
    gauge: Gauge,
    c: CMap,
    t: Multifunction,
    g1_radius: f64,
    g2_radius: f64,
    v0_star: Option<Vec<f64>>,
}

impl InclusionProblem {
    pub fn new(
        op: MonotoneOp,
        gamma: f64,
        c: CMap,
        t: Multifunction,
        g1_radius: f64,
        g2_radius: f64,
        v0_star: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = op.dim();
        if !(gamma > 0.0) {
            return Err(Error::Validation(format!("homogeneity degree must be > 0, got {gamma}")));
        }
        if !(0.0 < g2_radius && g2_radius < g1_radius && g1_radius.is_finite()) {
            return Err(Error::Validation(format!("radii must satisfy 0 < G2 < G1, got G1={g1_radius}, G2={g2_radius}")));
        }
        match op.homogeneity() {
            Homogeneity::Degree(d) if (d - gamma).abs() > 1e-12 * d.max(1.0) => {
                return Err(Error::Validation(format!("{} is homogeneous of degree {d}, not {gamma}", op.name())));
            }
            Homogeneity::None => {
                return Err(Error::Validation(format!("{} is not positively homogeneous", op.name())));
            }
            _ => {}
        }
        if !op.is_single_valued() || op.value(&vec![0.0; n])?.iter().any(|v| *v != 0.0) {
            return Err(Error::Validation(format!("{} must satisfy A(0) = {{0}}", op.name())));
        }
        let hom = check_homogeneous(&op, gamma, 20, 0)?;
        if !hom.passed() {
            return Err(Error::Validation(format!("homogeneity check failed:\n{}", hom.render())));
        }
        c.validate(n)?;
        if let Multifunction::Singleton(s) = &t {
            s.validate(n)?;
        }
        if let Multifunction::Interval { lower, upper } = &t {
            validate_interval(lower, upper)?;
        }
        if let Some(v) = &v0_star {
            if v.len() != n || v.iter().all(|c| *c == 0.0) {
                return Err(Error::Validation("v0* must be a nonzero vector of the operator dimension".into()));
            }
        }
        let gauge = Gauge::new(gamma + 1.0)?;
        Ok(Self { op, gamma, gauge, c, t, g1_radius, g2_radius, v0_star })
    }

    pub fn op(&self) -> &MonotoneOp {
        &self.op
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn c_map(&self) -> &CMap {
        &self.c
    }

    pub fn multifunction(&self) -> &Multifunction {
        &self.t
    }

    pub fn g1_radius(&self) -> f64 {
        self.g1_radius
    }

    pub fn g2_radius(&self) -> f64 {
        self.g2_radius
    }

    pub fn v0_star(&self) -> Option<&[f64]> {
        self.v0_star.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    fn norm(&self, x: &[f64]) -> f64 {
        lp_norm(x, self.gauge.p())
    }

    fn a_t(&self, t: f64, x: &[f64]) -> Result<Raw> {
        self.a_t_from(t, x, None)
    }

    fn a_t_from(&self, t: f64, x: &[f64], hint: Option<&[f64]>) -> Result<Raw> {
        solve_raw_from(&self.op, self.gauge.p(), t, x, &inner_opts(), hint)
    }

    /// `A_t^φ x + C x + q_ε x`.
    pub fn residual(&self, t: f64, sel: &Selection, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.a_t(t, x)?;
        Ok(self.assemble(&raw, sel, x))
    }

    fn assemble(&self, raw: &Raw, sel: &Selection, x: &[f64]) -> Vec<f64> {
        let c = self.c.value(x);
        let q = sel.value(x);
        raw.a.iter().zip(c).zip(q).map(|((a, c), q)| a + c + q).collect()
    }

    fn residual_jacobian(&self, t: f64, sel: &Selection, x: &[f64], raw: &Raw) -> Result<DMatrix<f64>> {
        let floor = 1e-12 * (1.0 + inf_norm(x));
        let da = yosida_jacobian(&self.op, self.gauge.p(), t, x, raw, floor, &inner_opts())?;
        Ok(da + self.c.jacobian(x, floor)? + sel.jacobian(x, floor)?)
    }
}

fn inner_opts() -> ResolventOptions {
    ResolventOptions { tol: 1e-12, max_iter: 200 }
}

/// Newton system for `G(x) = F(x)·Π_j (1 + 1/‖x − x_j‖²)`.
struct Deflated<'a> {
    prob: &'a InclusionProblem,
    t: f64,
    sel: &'a Selection,
    roots: &'a [Vec<f64>],
    tol: f64,
    cache: RefCell<Option<(Vec<f64>, Raw)>>,
}

impl Deflated<'_> {
    fn raw(&self, x: &[f64]) -> Result<Raw> {
        if let Some((cx, raw)) = self.cache.borrow().as_ref() {
            if cx.as_slice() == x {
                return Ok(raw.clone());
            }
        }
        let hint = self.cache.borrow().as_ref().map(|(_, r)| r.u.clone());
        let raw = self.prob.a_t_from(self.t, x, hint.as_deref())?;
        *self.cache.borrow_mut() = Some((x.to_vec(), raw.clone()));
        Ok(raw)
    }

    /// Deflation factor and its gradient.
    fn factor(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut m = 1.0;
        let mut terms = vec![0.0; x.len()];
        for r in self.roots {
            let diff: Vec<f64> = x.iter().zip(r).map(|(a, b)| a - b).collect();
            let d2 = dot(&diff, &diff).max(1e-300);
            m *= 1.0 + 1.0 / d2;
            // ∂ log(1 + 1/d²) = −2 diff / (d² (d² + 1))
            for (t, dv) in terms.iter_mut().zip(&diff) {
                *t += -2.0 * dv / (d2 * (d2 + 1.0));
            }
        }
        (m, terms.into_iter().map(|t| m * t).collect())
    }
}

impl NewtonSystem for Deflated<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.raw(x)?;
        let f = self.prob.assemble(&raw, self.sel, x);
        let (m, _) = self.factor(x);
        Ok(f.into_iter().map(|v| m * v).collect())
    }

    fn jacobian(&self, x: &[f64], g: &[f64]) -> Result<DMatrix<f64>> {
        let raw = self.raw(x)?;
        let df = self.prob.residual_jacobian(self.t, self.sel, x, &raw)?;
        let (m, grad) = self.factor(x);
        let n = x.len();
        let f: Vec<f64> = g.iter().map(|v| v / m).collect();
        Ok(DMatrix::from_fn(n, n, |i, j| m * df[(i, j)] + f[i] * grad[j]))
    }

    fn accept(&self, x: &[f64], g: &[f64]) -> (bool, f64) {
        let (m, _) = self.factor(x);
        let r = inf_norm(g) / m;
        (r <= self.tol, r)
    }
}

/// A solution of one regularized equation.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedSolution {
    pub x: Vec<f64>,
    /// `‖A_t^φ x + C x + q_ε x‖_∞`.
    pub residual: f64,
    pub iterations: usize,
}

fn solve_deflated(
    prob: &InclusionProblem,
    t: f64,
    sel: &Selection,
    x0: &[f64],
    tol: f64,
    nopts: &NewtonOptions,
    roots: &[Vec<f64>],
) -> Result<RegularizedSolution> {
    let sys = Deflated { prob, t, sel, roots, tol, cache: RefCell::new(None) };
    let out = newton(&sys, x0.to_vec(), nopts)?;
    let residual = inf_norm(&prob.residual(t, sel, &out.z)?);
    if !(residual <= tol) {
        return Err(Error::NonConvergence { iterations: out.iterations, residual });
    }
    Ok(RegularizedSolution { x: out.z, residual, iterations: out.iterations })
}

/// Solves `A_t^φ x + C x + q_ε x = 0` by damped Newton from `x0`.
pub fn solve_regularized(prob: &InclusionProblem, t: f64, eps: f64, x0: &[f64], tol: f64) -> Result<RegularizedSolution> {
    if !(t > 0.0) || !(tol > 0.0) || x0.len() != prob.dim() {
        return Err(Error::Invalid("solve_regularized needs t > 0, tol > 0 and x0 of the problem dimension".into()));
    }
    let sel = make_selection(&prob.t, eps)?;
    solve_deflated(prob, t, &sel, x0, tol, &NewtonOptions::default(), &[])
}

/// A sampled near-equality found by a boundary diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearEquality {
    pub x: Vec<f64>,
    /// The ray parameter (`τ` for the first condition, `λ` for the second).
    pub parameter: f64,
    /// `‖residual‖_∞ / (1 + ‖F(x)‖_∞)`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub condition: String,
    /// Set when the diagnostic could not run.
    pub skipped: Option<String>,
    pub samples: usize,
    pub min_distance: f64,
    pub near_equalities: Vec<NearEquality>,
}

impl DiagnosticReport {
    pub fn clean(&self) -> bool {
        self.skipped.is_none() && self.near_equalities.is_empty()
    }
}

/// Relative distance under which a sampled boundary point is reported.
pub const NEAR_MARGIN: f64 = 1e-6;

/// Points of the `l^p` sphere of radius `r`: the `±r e_i` followed by Halton directions.
fn sphere_samples(n: usize, r: f64, p: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s * r;
            out.push(e);
        }
    }
    let mut k = 0;
    while out.len() < count.max(2 * n) {
        let h = halton(k, n);
        k += 1;
        let v: Vec<f64> = h.iter().map(|c| 2.0 * c - 1.0).collect();
        let nv = lp_norm(&v, p);
        if nv < 1e-6 {
            continue;
        }
        out.push(v.into_iter().map(|c| c * r / nv).collect());
    }
    out
}

fn ray_scan<F>(
    condition: &str,
    points: Vec<Vec<f64>>,
    grid: &[f64],
    mut eval: F,
) -> Result<DiagnosticReport>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)>,
{
    // eval returns (F(x), direction v, best parameter); the scanned residual is F − τ v
    let mut report = DiagnosticReport {
        condition: condition.into(),
        skipped: None,
        samples: points.len(),
        min_distance: f64::INFINITY,
        near_equalities: Vec::new(),
    };
    for x in points {
        let (f, v, best) = eval(&x)?;
        let scale = 1.0 + inf_norm(&f);
        let mut closest = (f64::INFINITY, 0.0);
        for &tau in grid.iter().chain(std::iter::once(&best)) {
            if !(tau >= 0.0) {
                continue;
            }
            let d = f.iter().zip(&v).map(|(a, b)| (a - tau * b).abs()).fold(0.0, f64::max) / scale;
            if d < closest.0 {
                closest = (d, tau);
            }
        }
        report.min_distance = report.min_distance.min(closest.0);
        if closest.0 <= NEAR_MARGIN {
            report.near_equalities.push(NearEquality { x, parameter: closest.1, distance: closest.0 });
        }
    }
    Ok(report)
}

/// Samples `‖A_t^φ x + C x + q_ε x − τ v₀*‖` on `∂G1 × τ-grid` (plus the
/// least-squares `τ` at each point) and lists near-equalities.
pub fn check_ray_condition(
    prob: &InclusionProblem,
    t: f64,
    eps: f64,
    tau_grid: &[f64],
    boundary_samples: usize,
) -> Result<DiagnosticReport> {
    let Some(v0) = prob.v0_star.clone() else {
        return Ok(DiagnosticReport {
            condition: "ray".into(),
            skipped: Some("no v0* configured; ray condition not checked".into()),
            samples: 0,
            min_distance: f64::INFINITY,
            near_equalities: Vec::new(),
        });
    };
    let sel = make_selection(&prob.t, eps)?;
    let points = sphere_samples(prob.dim(), prob.g1_radius, prob.gauge.p(), boundary_samples);
    let vv = dot(&v0, &v0);
    ray_scan("ray", points, tau_grid, |x| {
        let f = prob.residual(t, &sel, x)?;
        let best = (dot(&f, &v0) / vv).max(0.0);
        Ok((f, v0.clone(), best))
    })
}

/// Samples `‖A_t^φ x + C x + q_ε x + λ J x‖` on `∂G2 × λ-grid` (plus the
/// least-squares `λ`) and lists near-zeros.
pub fn check_duality_condition(
    prob: &InclusionProblem,
    t: f64,
    eps: f64,
    lambda_grid: &[f64],
    boundary_samples: usize,
) -> Result<DiagnosticReport> {
    let sel = make_selection(&prob.t, eps)?;
    let p = prob.gauge.p();
    let points = sphere_samples(prob.dim(), prob.g2_radius, p, boundary_samples);
    ray_scan("duality", points, lambda_grid, |x| {
        let f = prob.residual(t, &sel, x)?;
        let jx = normalized_duality(x, p);
        let neg: Vec<f64> = jx.iter().map(|v| -v).collect();
        let jj = dot(&jx, &jx);
        let best = if jj > 0.0 { (-dot(&f, &jx) / jj).max(0.0) } else { 0.0 };
        Ok((f, neg, best))
    })
}

/// Decreasing continuation schedule for `(t, ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Schedule {
    pub fn new(t: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        let s = Self { t, eps };
        s.validate()?;
        Ok(s)
    }

    /// `t_k = ε_k = 10^{−1−k/2}` for `k = 1..=K`, with `K` the smallest count
    /// (at least six) for which `t_K^{1/γ} ≤ 1e-8`. The distance from the
    /// regularized root to the limit root scales like `t^{1/γ}`.
    pub fn default_for(gamma: f64) -> Self {
        let k = ((16.0 * gamma - 2.0).ceil() as usize).clamp(6, 120);
        let t: Vec<f64> = (1..=k).map(|j| 10f64.powf(-1.0 - j as f64 / 2.0)).collect();
        Self { eps: t.clone(), t }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.is_empty() || self.t.len() != self.eps.len() {
            return Err(Error::Validation("schedules must be nonempty and of equal length".into()));
        }
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !decreasing(&self.t) || !decreasing(&self.eps) {
            return Err(Error::Validation("schedules must be positive and strictly decreasing".into()));
        }
        if *self.t.last().unwrap() > 1e-4 {
            return Err(Error::Validation("final t must be <= 1e-4".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultistartConfig {
    /// Seeds per dimension on the mid-annulus sphere.
    pub seeds_per_dim: usize,
    /// Residual tolerance (`l^∞`) at every stage.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed solves stop once the residual has not halved over this many iterations.
    pub stall: usize,
    /// Minimum separation of distinct candidates.
    pub separation: f64,
    /// Relative band around `∂G2` inside which candidates are boundary-suspect.
    pub boundary_band: f64,
    pub degree: DegreeOptions,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        Self {
            seeds_per_dim: 8,
            tol: 1e-10,
            max_iter: 200,
            stall: 6,
            separation: 1e-4,
            boundary_band: 1e-3,
            degree: DegreeOptions { starts_per_dim: 4, boundary_samples_per_dim: 20, ..DegreeOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub t: f64,
    pub eps: f64,
    pub seed: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Interior,
    BoundarySuspect,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub norm: f64,
    pub residual: f64,
    pub seed: usize,
    pub classification: Classification,
    /// `‖x_k − x_{k+1}‖_p` between successive stages.
    pub gaps: Vec<f64>,
    /// Relative distance of `(x, −C x − q_ε x)` to the graph of `A`.
    pub graph_violation: f64,
    /// `max |⟨A_t x_k, x_k − x⟩|` over the three stages before the last.
    pub pairing_tail: f64,
    /// Largest relative defect of `A_t(2x) = 2^γ A_t(x)` along the branch.
    pub homogeneity_defect: f64,
}

impl Candidate {
    /// Whether the last three gaps are non-increasing and below `limit`.
    pub fn stable_tail(&self, limit: f64) -> bool {
        let tail = &self.gaps[self.gaps.len().saturating_sub(3)..];
        !tail.is_empty()
            && tail.iter().all(|g| *g <= limit)
            && tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SearchOutcome {
    Found,
    ExcisionInconclusive,
    NoCandidates,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationTrace {
    pub dim: usize,
    pub schedule: Schedule,
    pub records: Vec<StageRecord>,
    pub degree_g1: DegreeReport,
    pub degree_g2: DegreeReport,
    pub final_degree_g1: DegreeReport,
    pub final_degree_g2: DegreeReport,
    pub excision: Excision,
    pub outcome: SearchOutcome,
    pub candidates: Vec<Candidate>,
    pub notes: Vec<String>,
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl ContinuationTrace {
    /// Stage records as CSV: `stage,t,eps,seed,x0..,residual,iters`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["stage".to_string(), "t".into(), "eps".into(), "seed".into()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        header.push("residual".into());
        header.push("iters".into());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![r.stage.to_string(), fmt_f64(r.t), fmt_f64(r.eps), r.seed.to_string()];
            row.extend(r.x.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(r.residual));
            row.push(r.iterations.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "degree on G1: {}", self.degree_g1.describe());
        let _ = writeln!(s, "degree on G2: {}", self.degree_g2.describe());
        let _ = writeln!(s, "final-stage degrees: G1 {}, G2 {}", self.final_degree_g1.describe(), self.final_degree_g2.describe());
        let _ = writeln!(s, "excision: {:?}", self.excision);
        let _ = writeln!(s, "outcome: {:?}", self.outcome);
        for (k, c) in self.candidates.iter().enumerate() {
            let coords: Vec<String> = c.x.iter().map(|v| format!("{v:.10}")).collect();
            let _ = writeln!(
                s,
                "candidate {k}: [{}] norm={:.10} residual={:.3e} {:?} final_gap={:.3e} graph={:.3e}",
                coords.join(", "),
                c.norm,
                c.residual,
                c.classification,
                c.gaps.last().copied().unwrap_or(0.0),
                c.graph_violation
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn degrees(
    prob: &InclusionProblem,
    t: f64,
    sel: &Selection,
    opts: &DegreeOptions,
    notes: &mut Vec<String>,
) -> Result<(DegreeReport, DegreeReport)> {
    let p = prob.gauge.p();
    let n = prob.dim();
    let f = |x: &[f64]| prob.residual(t, sel, x);
    let jac = |x: &[f64]| {
        let raw = prob.a_t(t, x)?;
        prob.residual_jacobian(t, sel, x, &raw)
    };
    let g1 = Region::centered_ball(n, prob.g1_radius, p)?;
    let g2 = Region::centered_ball(n, prob.g2_radius, p)?;
    let mut run = |region: &Region| match degree_on_with_jacobian(f, jac, region, opts) {
        Err(Error::DegenerateZero(z)) => {
            notes.push(format!("degenerate zero at {z:?}; degree left undetermined"));
            Ok(DegreeReport {
                value: None,
                certified: false,
                method: DegreeMethod::RegularSum,
                boundary_margin: f64::NAN,
                refinement: 0,
            })
        }
        other => other,
    };
    Ok((run(&g1)?, run(&g2)?))
}

fn homogeneity_defect(prob: &InclusionProblem, t: f64, x: &[f64]) -> Result<f64> {
    let a = prob.a_t(t, x)?.a;
    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let a2 = prob.a_t(t, &x2)?.a;
    let f = 2f64.powf(prob.gamma);
    let num = a2.iter().zip(&a).map(|(u, v)| (u - f * v).abs()).fold(0.0, f64::max);
    let den = inf_norm(&a2) + f * inf_norm(&a);
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// Degree certificates, deflated multistart in the annulus and continuation
/// of every root down the schedule.
pub fn annulus_search(prob: &InclusionProblem, schedule: &Schedule, cfg: &MultistartConfig) -> Result<ContinuationTrace> {
    schedule.validate()?;
    let n = prob.dim();
    let p = prob.gauge.p();
    let stages = schedule.len();
    let sels = schedule.eps.iter().map(|&e| make_selection(&prob.t, e)).collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    let (d1, d2) = degrees(prob, schedule.t[0], &sels[0], &cfg.degree, &mut notes)?;
    let excision = match (d1.certified_value(), d2.certified_value()) {
        (Some(a), Some(b)) if a != b => Excision::SolutionInAnnulus,
        (Some(_), Some(_)) => Excision::Inconclusive,
        _ => Excision::Uncertified,
    };
    let (fd1, fd2) = degrees(prob, schedule.t[stages - 1], &sels[stages - 1], &cfg.degree, &mut notes)?;
    let mut trace = ContinuationTrace {
        dim: n,
        schedule: schedule.clone(),
        records: Vec::new(),
        degree_g1: d1,
        degree_g2: d2,
        final_degree_g1: fd1,
        final_degree_g2: fd2,
        excision,
        outcome: SearchOutcome::NoCandidates,
        candidates: Vec::new(),
        notes,
    };
    if excision == Excision::Inconclusive {
        trace.outcome = SearchOutcome::ExcisionInconclusive;
        trace.notes.push("degrees on G1 and G2 agree; annulus search skipped".into());
        return Ok(trace);
    }
    if excision == Excision::Uncertified {
        trace.notes.push("degree certificates unavailable; searching the annulus anyway".into());
    }

    let lo = prob.g2_radius * (1.0 - cfg.boundary_band);
    let hi = prob.g1_radius * (1.0 + cfg.boundary_band);
    let mid = 0.5 * (prob.g1_radius + prob.g2_radius);
    let seeds: Vec<Vec<f64>> = (0..cfg.seeds_per_dim * n)
        .map(|k| {
            let mut j = k;
            loop {
                let v: Vec<f64> = halton(j, n).iter().map(|c| 2.0 * c - 1.0).collect();
                let nv = lp_norm(&v, p);
                if nv > 1e-6 {
                    return v.into_iter().map(|c| c * mid / nv).collect();
                }
                j += 1000;
            }
        })
        .collect();

    // every converged root deflates later searches; annulus roots become branches
    let seed_opts = NewtonOptions { max_iter: cfg.max_iter, stall: cfg.stall, ..NewtonOptions::default() };
    let follow_opts = NewtonOptions { max_iter: cfg.max_iter, ..NewtonOptions::default() };
    let mut known: Vec<Vec<f64>> = Vec::new();
    let mut branches: Vec<(usize, RegularizedSolution)> = Vec::new();
    for (k, seed) in seeds.iter().enumerate() {
        let Ok(sol) = solve_deflated(prob, schedule.t[0], &sels[0], seed, cfg.tol, &seed_opts, &known) else {
            continue;
        };
        if known.iter().any(|r| prob.norm(&r.iter().zip(&sol.x).map(|(a, b)| a - b).collect::<Vec<_>>()) < cfg.separation) {
            continue;
        }
        known.push(sol.x.clone());
        let nx = prob.norm(&sol.x);
        if lo <= nx && nx <= hi {
            branches.push((k, sol));
        }
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    for (seed, first) in branches {
        let mut path = vec![first.clone()];
        trace.records.push(StageRecord {
            stage: 1,
            t: schedule.t[0],
            eps: schedule.eps[0],
            seed,
            x: first.x.clone(),
            residual: first.residual,
            iterations: first.iterations,
        });
        let mut hom = homogeneity_defect(prob, schedule.t[0], &first.x)?;
        let mut failed = None;
        for s in 1..stages {
            let prev = &path.last().unwrap().x;
            match solve_deflated(prob, schedule.t[s], &sels[s], prev, cfg.tol, &follow_opts, &[]) {
                Ok(sol) => {
                    trace.records.push(StageRecord {
                        stage: s + 1,
                        t: schedule.t[s],
                        eps: schedule.eps[s],
                        seed,
                        x: sol.x.clone(),
                        residual: sol.residual,
                        iterations: sol.iterations,
                    });
                    hom = hom.max(homogeneity_defect(prob, schedule.t[s], &sol.x)?);
                    path.push(sol);
                }
                Err(e) => {
                    failed = Some(format!("branch from seed {seed} lost at stage {}: {e}", s + 1));
                    break;
                }
            }
        }
        if let Some(msg) = failed {
            trace.notes.push(msg);
            continue;
        }
        let last = path.last().unwrap();
        let x0 = last.x.clone();
        let gaps: Vec<f64> = path
            .windows(2)
            .map(|w| prob.norm(&w[0].x.iter().zip(&w[1].x).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .collect();
        let sel_last = &sels[stages - 1];
        let y: Vec<f64> = prob.c.value(&x0).iter().zip(sel_last.value(&x0)).map(|(c, q)| -(c + q)).collect();
        let graph_violation = prob.op.graph_distance(&x0, &y)? / (1.0 + inf_norm(&y));
        let mut pairing_tail = 0.0_f64;
        for k in stages.saturating_sub(4)..stages.saturating_sub(1) {
            let xk = &path[k].x;
            let ak = prob.a_t(schedule.t[k], xk)?.a;
            let diff: Vec<f64> = xk.iter().zip(&x0).map(|(a, b)| a - b).collect();
            pairing_tail = pairing_tail.max(pairing(&ak, &diff).abs());
        }
        let norm = prob.norm(&x0);
        if norm < lo || norm > hi {
            trace.notes.push(format!("branch from seed {seed} left the annulus (final norm {norm:.6e})"));
            continue;
        }
        if candidates
            .iter()
            .any(|c| prob.norm(&c.x.iter().zip(&x0).map(|(a, b)| a - b).collect::<Vec<_>>()) < cfg.separation)
        {
            trace.notes.push(format!("branch from seed {seed} merged with an earlier candidate"));
            continue;
        }
        let band = cfg.boundary_band;
        let classification = if norm < prob.g2_radius * (1.0 - band) || norm > prob.g2_radius * (1.0 + band) {
            Classification::Interior
        } else {
            Classification::BoundarySuspect
        };
        candidates.push(Candidate {
            x: x0,
            norm,
            residual: last.residual,
            seed,
            classification,
            gaps,
            graph_violation,
            pairing_tail,
            homogeneity_defect: hom,
        });
    }
    candidates.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    trace.candidates = candidates;
    if !trace.candidates.is_empty() {
        trace.outcome = SearchOutcome::Found;
    } else if excision == Excision::SolutionInAnnulus {
        return Err(Error::SearchFailure(format!(
            "degrees differ but no candidate survived continuation\n{}",
            trace.summary()
        )));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_benchmark() -> InclusionProblem {
        InclusionProblem::new(
            MonotoneOp::power(2.0, 1.0, 1).unwrap(),
            2.0,
            CMap::linear(-1.0),
            Multifunction::Zero,
            2.0,
            0.5,
            Some(vec![1.0]),
        )
        .unwrap()
    }

    #[test]
    fn selection_examples() {
        let g = CMap::shifted(2.0, vec![1.0]);
        let s = make_selection(&Multifunction::Singleton(g.clone()), 0.3).unwrap();
        assert_eq!(s.value(&[0.7]), g.value(&[0.7]));
        let sym = Multifunction::Interval { lower: Bound::constant(-1.0), upper: Bound::constant(1.0) };
        let s = make_selection(&sym, 0.1).unwrap();
        assert_abs_diff_eq!(s.value(&[3.0])[0], 0.0, epsilon = 1e-15);
        let quad = Multifunction::Interval { lower: Bound::default(), upper: Bound { c2: 2.0, ..Bound::default() } };
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let v = make_selection(&quad, eps).unwrap().value(&[1.0])[0];
            let err = (v - 1.0).abs();
            assert!(err <= eps * eps && err <= prev);
            prev = err;
        }
        let bad = Multifunction::Interval { lower: Bound::constant(1.0), upper: Bound::constant(0.0) };
        assert!(matches!(make_selection(&bad, 0.1), Err(Error::MalformedMultifunction(_))));
    }

    #[test]
    fn selection_stays_near_interval() {
        let t = Multifunction::Interval {
            lower: Bound { c0: -0.5, cabs: -0.2, ..Bound::default() },
            upper: Bound { c0: 0.5, c1: 1.0, cabs: 1.2, ..Bound::default() },
        };
        let eps = 1e-2;
        let s = make_selection(&t, eps).unwrap();
        for k in 0..=400 {
            let x = -2.0 + 0.01 * k as f64;
            let q = s.value(&[x])[0];
            let Multifunction::Interval { lower, upper } = &t else { unreachable!() };
            let (lo, hi) = (lower.eval(x), upper.eval(x));
            let dist = if q < lo { lo - q } else if q > hi { q - hi } else { 0.0 };
            assert!(dist <= eps, "x={x}: q={q} not within eps of [{lo}, {hi}]");
        }
    }

    #[test]
    fn regularized_examples() {
        let prob = scalar_benchmark();
        let s = solve_regularized(&prob, 0.01, 0.01, &[1.2], 1e-12).unwrap();
        // exact regularized root: x|x|/(1+√t)² = x ⇒ x = (1+√t)²
        assert_abs_diff_eq!(s.x[0], 1.21, epsilon = 1e-9);
        assert!((s.x[0] - 1.0).abs() < 0.25);
        let s = solve_regularized(&prob, 0.01, 0.01, &[-1.2], 1e-12).unwrap();
        assert_abs_diff_eq!(s.x[0], -1.21, epsilon = 1e-9);

        let zero = InclusionProblem::new(
            MonotoneOp::zero(2).unwrap(),
            1.0,
            CMap::shifted(1.0, vec![0.3, -0.7]),
            Multifunction::Zero,
            2.0,
            0.5,
            None,
        )
        .unwrap();
        let s = solve_regularized(&zero, 0.1, 0.1, &[1.0, 1.0], 1e-12).unwrap();
        assert_abs_diff_eq!(s.x[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], -0.7, epsilon = 1e-12);
    }

    #[test]
    fn boundary_diagnostics() {
        let t = 1e-12;
        let prob = scalar_benchmark();
        let grid: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let ray = check_ray_condition(&prob, t, t, &grid, 8).unwrap();
        let hit = ray.near_equalities.iter().find(|e| e.x == vec![2.0]).expect("violation at x = 2");
        assert_abs_diff_eq!(hit.parameter, 2.0, epsilon = 1e-5);

        let mut neg = prob.clone();
        neg.v0_star = Some(vec![-1.0]);
        let ray = check_ray_condition(&neg, t, t, &grid, 8).unwrap();
        assert!(ray.near_equalities.iter().any(|e| e.x == vec![-2.0]));

        let dual_scan = check_duality_condition(&prob, t, t, &grid, 8).unwrap();
        let hit = dual_scan.near_equalities.iter().find(|e| e.x == vec![0.5]).expect("violation at x = 0.5");
        assert_abs_diff_eq!(hit.parameter, 0.5, epsilon = 1e-5);

        let outward = InclusionProblem::new(
            MonotoneOp::zero(1).unwrap(),
            1.0,
            CMap::shifted(1.0, vec![-1.0]),
            Multifunction::Zero,
            0.5,
            0.25,
            Some(vec![-1.0]),
        )
        .unwrap();
        assert!(check_ray_condition(&outward, t, t, &grid, 8).unwrap().clean());

        let plus = InclusionProblem::new(
            MonotoneOp::power(2.0, 1.0, 1).unwrap(),
            2.0,
            CMap::linear(1.0),
            Multifunction::Zero,
            2.0,
            0.5,
            None,
        )
        .unwrap();
        assert!(check_duality_condition(&plus, t, t, &grid, 8).unwrap().clean());
        assert!(check_ray_condition(&plus, t, t, &grid, 8).unwrap().skipped.is_some());

        let dual = InclusionProblem::new(
            MonotoneOp::zero(2).unwrap(),
            1.0,
            CMap::NormalizedDuality { p: 2.0, scale: 1.0 },
            Multifunction::Zero,
            2.0,
            0.5,
            None,
        )
        .unwrap();
        assert!(check_duality_condition(&dual, t, t, &grid, 32).unwrap().clean());
    }

    #[test]
    fn annulus_scalar_benchmark() {
        let prob = scalar_benchmark();
        let trace = annulus_search(&prob, &Schedule::default_for(2.0), &MultistartConfig::default()).unwrap();
        assert_eq!(trace.degree_g1.certified_value(), Some(1));
        assert_eq!(trace.degree_g2.certified_value(), Some(-1));
        assert_eq!(trace.outcome, SearchOutcome::Found);
        assert_eq!(trace.candidates.len(), 2);
        assert_abs_diff_eq!(trace.candidates[0].x[0], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(trace.candidates[1].x[0], 1.0, epsilon = 1e-6);
        for c in &trace.candidates {
            assert!(c.residual <= 1e-8);
            assert!(c.stable_tail(1e-6), "gaps {:?}", c.gaps);
            assert!(c.graph_violation <= 1e-6);
            assert!(c.homogeneity_defect <= 1e-8);
            assert_eq!(c.classification, Classification::Interior);
        }
        let csv = trace.to_csv().unwrap();
        assert!(csv.starts_with("stage,t,eps,seed,x0,residual,iters\n"));
    }

    #[test]
    fn annulus_identity_is_inconclusive() {
        let prob = InclusionProblem::new(
            MonotoneOp::zero(1).unwrap(),
            1.0,
            CMap::NormalizedDuality { p: 2.0, scale: 1.0 },
            Multifunction::Zero,
            2.0,
            0.5,
            None,
        )
        .unwrap();
        let trace = annulus_search(&prob, &Schedule::default_for(1.0), &MultistartConfig::default()).unwrap();
        assert_eq!(trace.outcome, SearchOutcome::ExcisionInconclusive);
        assert_eq!((trace.degree_g1.value, trace.degree_g2.value), (Some(1), Some(1)));
        assert!(trace.candidates.is_empty());
    }

    #[test]
    fn problem_validation() {
        let op = MonotoneOp::power(2.0, 1.0, 1).unwrap();
        assert!(InclusionProblem::new(op.clone(), 3.0, CMap::Zero, Multifunction::Zero, 2.0, 0.5, None).is_err());
        assert!(InclusionProblem::new(op.clone(), 2.0, CMap::Zero, Multifunction::Zero, 0.5, 2.0, None).is_err());
        let half = MonotoneOp::one_sided_power(2.0, 1.0, 1).unwrap();
        assert!(InclusionProblem::new(half, 2.0, CMap::Zero, Multifunction::Zero, 2.0, 0.5, None).is_err());
    }

    #[test]
    fn default_schedule_shape() {
        let s = Schedule::default_for(2.0);
        assert_eq!(s.len(), 30);
        assert_abs_diff_eq!(s.t[0], 10f64.powf(-1.5), epsilon = 1e-18);
        assert!(s.t.last().unwrap().powf(0.5) <= 1e-8 * (1.0 + 1e-12));
        assert_eq!(Schedule::default_for(0.25).len(), 6);
    }
}
