//! Discretized Dirichlet p-Laplacian problems.
//!
//! The elliptic problem `−Δ_p u + C u + H u ∋ 0` is assembled on a uniform
//! grid of the unit interval or square and handed to the annulus search.
//! The parabolic problem `∂u/∂t − Δ_p u + C u = h`, `u(0) = 0` is stepped
//! with implicit Euler; each step is a finite-dimensional monotone equation.
//! `C` and `H` act nodally and radii are measured in the nodal `l^p` norm.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::{
    annulus_search, fmt_f64, make_selection, Bound, CMap, ContinuationTrace, InclusionProblem, Multifunction,
    MultistartConfig, Schedule,
};
use crate::linalg::{newton, NewtonOptions, NewtonSystem};
use crate::operators::{check_homogeneous, check_monotone, Grid, MonotoneOp};
use crate::space::{inf_norm, lp_norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Line,
    Square,
}

/// Interval reaction `H(u) = [lower(u), upper(u)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reaction {
    pub lower: Bound,
    pub upper: Bound,
}

fn two() -> f64 {
    2.0
}

/// Elliptic problem data. `n` counts intervals per axis, so `n = 2` on a
/// line leaves one interior node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticSpec {
    pub grid: GridKind,
    pub n: usize,
    pub p: f64,
    /// `C(u)_i = c_coeff·|u_i|^{c_exponent−2} u_i + forcing`.
    #[serde(default)]
    pub c_coeff: f64,
    #[serde(default = "two")]
    pub c_exponent: f64,
    #[serde(default)]
    pub forcing: f64,
    #[serde(default)]
    pub reaction: Option<Reaction>,
    pub delta1: f64,
    pub delta2: f64,
    /// Constant nodal ray direction for the first boundary diagnostic.
    #[serde(default)]
    pub v0_star: Option<f64>,
}

impl EllipticSpec {
    /// Single interior node, `p = 3`, `C(u) = −u`, radii `(1, 0.01)`.
    pub fn single_node_demo() -> Self {
        Self {
            grid: GridKind::Line,
            n: 2,
            p: 3.0,
            c_coeff: -1.0,
            c_exponent: 2.0,
            forcing: 0.0,
            reaction: None,
            delta1: 1.0,
            delta2: 0.01,
            v0_star: None,
        }
    }
}

fn make_grid(kind: GridKind, n: usize) -> Result<Grid> {
    match kind {
        GridKind::Line => Grid::new_line(n),
        GridKind::Square => Grid::new_square(n, n),
    }
}

#[derive(Clone, Debug)]
pub struct EllipticProblem {
    pub spec: EllipticSpec,
    pub grid: Grid,
    pub problem: InclusionProblem,
}

/// Assembles the operators and checks the structural hypotheses on samples.
pub fn build_elliptic(spec: &EllipticSpec) -> Result<EllipticProblem> {
    let mut violations = Vec::new();
    if !(spec.p > 1.0 && spec.p.is_finite()) {
        violations.push(format!("exponent p must be > 1, got {}", spec.p));
    }
    if spec.n < 2 {
        violations.push(format!("n counts intervals and must be >= 2, got {}", spec.n));
    }
    if !(0.0 < spec.delta2 && spec.delta2 < spec.delta1) {
        violations.push(format!("radii must satisfy 0 < delta2 < delta1, got ({}, {})", spec.delta1, spec.delta2));
    }
    if !(spec.c_exponent > 1.0 && spec.c_exponent <= spec.p) {
        violations.push(format!("growth of C: exponent {} must lie in (1, p]", spec.c_exponent));
    }
    if !spec.c_coeff.is_finite() || !spec.forcing.is_finite() {
        violations.push("C coefficients must be finite".into());
    }
    if let Some(r) = &spec.reaction {
        if r.lower.c2 != 0.0 || r.upper.c2 != 0.0 {
            violations.push("growth of H: reaction bounds must grow at most linearly".into());
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations.join("; ")));
    }
    let grid = make_grid(spec.grid, spec.n)?;
    let op = MonotoneOp::p_laplacian(grid, spec.p)?;
    let gamma = spec.p - 1.0;
    let mono = check_monotone(&op, 64, 7)?;
    if !mono.passed() {
        violations.push(format!("monotonicity of A:\n{}", mono.render()));
    }
    let hom = check_homogeneous(&op, gamma, 16, 7)?;
    if !hom.passed() {
        violations.push(format!("homogeneity of A:\n{}", hom.render()));
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations.join("; ")));
    }
    let n = grid.unknowns();
    let forcing = if spec.forcing == 0.0 { Vec::new() } else { vec![spec.forcing; n] };
    let c = CMap::Pointwise { coeff: spec.c_coeff, exponent: spec.c_exponent, forcing };
    let t = match spec.reaction {
        Some(r) => Multifunction::Interval { lower: r.lower, upper: r.upper },
        None => Multifunction::Zero,
    };
    let v0 = spec.v0_star.map(|v| vec![v; n]);
    let problem = InclusionProblem::new(op, gamma, c, t, spec.delta1, spec.delta2, v0)?;
    Ok(EllipticProblem { spec: spec.clone(), grid, problem })
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub trace: ContinuationTrace,
    /// Candidates after polishing against the unregularized equation, in trace order.
    pub solutions: Vec<Vec<f64>>,
    /// `‖A u + C u + q_ε u‖_∞` of each solution, with the exact stencil `A`.
    pub weak_residuals: Vec<f64>,
}

impl EllipticSolution {
    pub fn summary(&self, p: f64) -> String {
        let mut s = self.trace.summary();
        for (k, (u, r)) in self.solutions.iter().zip(&self.weak_residuals).enumerate() {
            let _ = writeln!(s, "solution {k}: norm={:.10} weak_residual={r:.3e}", lp_norm(u, p));
        }
        s
    }
}

/// Newton on `A u + C u + q_ε u = 0` with the exact stencil.
struct WeakSystem<'a> {
    problem: &'a InclusionProblem,
    sel: &'a crate::homotopy::Selection,
    tol: f64,
}

impl WeakSystem<'_> {
    fn floor(&self, u: &[f64]) -> f64 {
        1e-12 * (1.0 + inf_norm(u))
    }
}

impl NewtonSystem for WeakSystem<'_> {
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let a = self.problem.op().value(u)?;
        let c = self.problem.c_map().value(u);
        let q = self.sel.value(u);
        Ok(a.iter().zip(c).zip(q).map(|((a, c), q)| a + c + q).collect())
    }

    fn jacobian(&self, u: &[f64], _r: &[f64]) -> Result<DMatrix<f64>> {
        let floor = self.floor(u);
        let da = self.problem.op().jacobian(u, floor).ok_or_else(|| Error::Unsupported("stencil Jacobian".into()))?;
        Ok(da + self.problem.c_map().jacobian(u, floor)? + self.sel.jacobian(u, floor)?)
    }

    fn accept(&self, _u: &[f64], r: &[f64]) -> (bool, f64) {
        let m = inf_norm(r);
        (m <= self.tol, m)
    }
}

/// Tolerance on the weak-form residual of reported solutions.
pub const WEAK_TOL: f64 = 1e-8;

/// Runs the annulus search and polishes every candidate against the
/// unregularized equation at the final `ε`.
pub fn solve_elliptic_annulus(
    problem: &EllipticProblem,
    schedule: Option<&Schedule>,
    cfg: &MultistartConfig,
) -> Result<EllipticSolution> {
    let inc = &problem.problem;
    let default = Schedule::default_for(inc.gamma());
    let schedule = schedule.unwrap_or(&default);
    let trace = annulus_search(inc, schedule, cfg)?;
    let sel = make_selection(inc.multifunction(), *schedule.eps.last().unwrap())?;
    let sys = WeakSystem { problem: inc, sel: &sel, tol: 0.01 * WEAK_TOL };
    let mut solutions = Vec::new();
    let mut weak_residuals = Vec::new();
    for c in &trace.candidates {
        let r0 = inf_norm(&sys.residual(&c.x)?);
        let (u, r) = if r0 <= sys.tol {
            (c.x.clone(), r0)
        } else {
            match newton(&sys, c.x.clone(), &NewtonOptions { max_iter: 50, ..NewtonOptions::default() }) {
                Ok(out) => {
                    let r = inf_norm(&sys.residual(&out.z)?);
                    (out.z, r)
                }
                Err(_) => (c.x.clone(), r0),
            }
        };
        solutions.push(u);
        weak_residuals.push(r);
    }
    Ok(EllipticSolution { trace, solutions, weak_residuals })
}

/// Parabolic problem data; the initial state is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicSpec {
    pub grid: GridKind,
    pub n: usize,
    pub p: f64,
    /// Whether the p-Laplacian is present; `false` gives `A = 0`.
    #[serde(default = "yes")]
    pub diffusion: bool,
    #[serde(default)]
    pub c_coeff: f64,
    #[serde(default = "two")]
    pub c_exponent: f64,
    /// `h(t) = forcing + forcing_slope·t`, uniform in space.
    #[serde(default)]
    pub forcing: f64,
    #[serde(default)]
    pub forcing_slope: f64,
    pub dt: f64,
    pub horizon: f64,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    pub spec: ParabolicSpec,
    pub grid: Grid,
    pub op: MonotoneOp,
    pub c: CMap,
    pub steps: usize,
    /// Lower bound on `⟨S(v) − S(w), v − w⟩ / ‖v − w‖₂²` for the step map;
    /// `None` when `C` is nonlinear and not monotone.
    pub step_monotonicity: Option<f64>,
}

impl ParabolicProblem {
    pub fn forcing_at(&self, t: f64) -> f64 {
        self.spec.forcing + self.spec.forcing_slope * t
    }

    /// `S(v) = (v − u_prev)/Δt + A v + C v − h`.
    pub fn step_residual(&self, v: &[f64], u_prev: &[f64], h: f64) -> Result<Vec<f64>> {
        let dt = self.spec.dt;
        let a = self.op.value(v)?;
        let c = self.c.value(v);
        Ok((0..v.len()).map(|i| (v[i] - u_prev[i]) / dt + a[i] + c[i] - h).collect())
    }
}

pub fn build_parabolic(spec: &ParabolicSpec) -> Result<ParabolicProblem> {
    let mut violations = Vec::new();
    if !(spec.p > 1.0 && spec.p.is_finite()) {
        violations.push(format!("exponent p must be > 1, got {}", spec.p));
    }
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        violations.push(format!("time step must be > 0, got {}", spec.dt));
    }
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        violations.push(format!("horizon must be > 0, got {}", spec.horizon));
    }
    if !(spec.c_exponent > 1.0) || !spec.c_coeff.is_finite() {
        violations.push("C needs a finite coefficient and exponent > 1".into());
    }
    if !spec.forcing.is_finite() || !spec.forcing_slope.is_finite() {
        violations.push("forcing must be finite".into());
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations.join("; ")));
    }
    let grid = make_grid(spec.grid, spec.n)?;
    let n = grid.unknowns();
    let op = if spec.diffusion { MonotoneOp::p_laplacian(grid, spec.p)? } else { MonotoneOp::zero(n)? };
    let c = CMap::Pointwise { coeff: spec.c_coeff, exponent: spec.c_exponent, forcing: Vec::new() };
    let steps = (spec.horizon / spec.dt).round().max(1.0) as usize;
    let inv = 1.0 / spec.dt;
    let step_monotonicity = if spec.c_coeff >= 0.0 {
        Some(inv)
    } else if spec.c_exponent == 2.0 {
        Some(inv + spec.c_coeff)
    } else {
        None
    };
    Ok(ParabolicProblem { spec: spec.clone(), grid, op, c, steps, step_monotonicity })
}

/// Nodal states `u^0 = 0, u^1, …` at times `k Δt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub nodes: Vec<Vec<f64>>,
    /// `‖S_k(u^{k+1})‖_∞` for every step.
    pub residuals: Vec<f64>,
}

impl Trajectory {
    /// Long-format CSV: `step,time,x[,y],value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let dim = self.nodes.first().map_or(1, |c| c.len());
        let mut header = vec!["step".to_string(), "time".into(), "x".into()];
        if dim == 2 {
            header.push("y".into());
        }
        header.push("value".into());
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&header).map_err(err)?;
        for (k, (t, u)) in self.times.iter().zip(&self.states).enumerate() {
            for (coords, v) in self.nodes.iter().zip(u) {
                let mut row = vec![k.to_string(), fmt_f64(*t)];
                row.extend(coords.iter().map(|c| fmt_f64(*c)));
                row.push(fmt_f64(*v));
                w.write_record(&row).map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

struct StepSystem<'a> {
    problem: &'a ParabolicProblem,
    prev: &'a [f64],
    h: f64,
    tol: f64,
}

impl NewtonSystem for StepSystem<'_> {
    fn residual(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.problem.step_residual(v, self.prev, self.h)
    }

    fn jacobian(&self, v: &[f64], _r: &[f64]) -> Result<DMatrix<f64>> {
        let n = v.len();
        let floor = 1e-12 * (1.0 + inf_norm(v));
        let da = self.problem.op.jacobian(v, floor).ok_or_else(|| Error::Unsupported("stencil Jacobian".into()))?;
        Ok(DMatrix::identity(n, n) / self.problem.spec.dt + da + self.problem.c.jacobian(v, floor)?)
    }

    fn accept(&self, _v: &[f64], r: &[f64]) -> (bool, f64) {
        let m = inf_norm(r);
        (m <= self.tol, m)
    }
}

/// Per-step residual tolerance of the implicit Euler solves.
pub const STEP_TOL: f64 = 1e-9;

/// Implicit Euler from `u^0 = 0`; each step solves `S_k(u^{k+1}) = 0`.
pub fn step_parabolic(problem: &ParabolicProblem, steps: usize) -> Result<Trajectory> {
    let n = problem.grid.unknowns();
    let dt = problem.spec.dt;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![vec![0.0; n]],
        nodes: problem.grid.node_coordinates(),
        residuals: Vec::new(),
    };
    for k in 0..steps {
        let t = (k + 1) as f64 * dt;
        let prev = traj.states.last().unwrap().clone();
        let sys = StepSystem { problem, prev: &prev, h: problem.forcing_at(t), tol: STEP_TOL };
        let out = newton(&sys, prev.clone(), &NewtonOptions::default())
            .map_err(|e| Error::StepFailed { step: k + 1, reason: e.to_string() })?;
        traj.residuals.push(inf_norm(&sys.residual(&out.z)?));
        traj.times.push(t);
        traj.states.push(out.z);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn elliptic(n: usize, p: f64) -> EllipticSpec {
        EllipticSpec { n, p, ..EllipticSpec::single_node_demo() }
    }

    #[test]
    fn single_node_stencil() {
        let e = build_elliptic(&elliptic(2, 3.0)).unwrap();
        for u in [-0.7, 0.0, 0.25, 2.0] {
            assert_abs_diff_eq!(e.problem.op().value(&[u]).unwrap()[0], 16.0 * u.abs() * u, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_case_is_laplacian() {
        let e = build_elliptic(&EllipticSpec { c_coeff: 0.0, ..elliptic(5, 2.0) }).unwrap();
        let h = 0.2;
        let u = [0.3, -1.0, 0.5, 2.0];
        let a = e.problem.op().value(&u).unwrap();
        for i in 0..4 {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i < 3 { u[i + 1] } else { 0.0 };
            assert_abs_diff_eq!(a[i], (2.0 * u[i] - l - r) / (h * h), epsilon = 1e-10);
        }
    }

    #[test]
    fn square_grid_passes_checks() {
        let spec = EllipticSpec { grid: GridKind::Square, ..elliptic(4, 3.0) };
        let e = build_elliptic(&spec).unwrap();
        assert_eq!(e.grid.unknowns(), 9);
        assert!(check_homogeneous(e.problem.op(), 2.0, 20, 3).unwrap().passed());
    }

    #[test]
    fn validation_lists_conditions() {
        let bad = EllipticSpec { delta1: 0.001, c_exponent: 5.0, ..elliptic(2, 3.0) };
        let Err(Error::Validation(msg)) = build_elliptic(&bad) else { panic!() };
        assert!(msg.contains("radii") && msg.contains("growth of C"));
    }

    #[test]
    fn single_node_annulus() {
        let e = build_elliptic(&EllipticSpec::single_node_demo()).unwrap();
        let sol = solve_elliptic_annulus(&e, None, &MultistartConfig::default()).unwrap();
        assert_eq!(sol.solutions.len(), 2);
        assert_abs_diff_eq!(sol.solutions[0][0], -0.0625, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.solutions[1][0], 0.0625, epsilon = 1e-9);
        assert!(sol.weak_residuals.iter().all(|r| *r <= WEAK_TOL));
    }

    #[test]
    fn positive_c_is_inconclusive() {
        let e = build_elliptic(&EllipticSpec { c_coeff: 1.0, ..EllipticSpec::single_node_demo() }).unwrap();
        let sol = solve_elliptic_annulus(&e, None, &MultistartConfig::default()).unwrap();
        assert!(sol.solutions.is_empty());
        assert_eq!(sol.trace.outcome, crate::homotopy::SearchOutcome::ExcisionInconclusive);
    }

    fn linear_scalar() -> ParabolicSpec {
        ParabolicSpec {
            grid: GridKind::Line,
            n: 2,
            p: 2.0,
            diffusion: false,
            c_coeff: 1.0,
            c_exponent: 2.0,
            forcing: 1.0,
            forcing_slope: 0.0,
            dt: 0.1,
            horizon: 0.3,
        }
    }

    #[test]
    fn parabolic_linear_recurrence() {
        let pb = build_parabolic(&linear_scalar()).unwrap();
        assert_eq!(pb.steps, 3);
        let tr = step_parabolic(&pb, pb.steps).unwrap();
        let expect = [1.0 / 11.0, 0.17355371900826447, 0.24868519909842224];
        for (k, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(tr.states[k + 1][0], *e, epsilon = 1e-12);
        }
        let zero = build_parabolic(&ParabolicSpec { forcing: 0.0, ..linear_scalar() }).unwrap();
        assert!(step_parabolic(&zero, 5).unwrap().states.iter().all(|u| u[0] == 0.0));
    }

    #[test]
    fn parabolic_single_node_step() {
        let spec = ParabolicSpec { diffusion: true, p: 3.0, c_coeff: 0.0, dt: 1.0, horizon: 1.0, ..linear_scalar() };
        let tr = step_parabolic(&build_parabolic(&spec).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(tr.states[1][0], (65f64.sqrt() - 1.0) / 32.0, epsilon = 1e-9);
        assert!(tr.residuals[0] <= STEP_TOL);
        let csv = tr.to_csv().unwrap();
        assert!(csv.starts_with("step,time,x,value\n0,"));
    }
}
