//! Resolvents `J_λ^φ` and Yosida approximants `A_λ^φ` for power gauges.
//!
//! The resolvent `x_λ` solves `0 ∈ J_φ(x_λ − x) + λ A x_λ` and the Yosida
//! approximant is `A_λ^φ x = (1/λ) J_φ(x − x_λ) ∈ A x_λ`. Three solvers
//! cover the catalog:
//!
//! * separable operators reduce to one scalar monotone inclusion per
//!   coordinate, solved by bisection over float bit patterns to adjacent floats;
//! * the `l^r` ball normal cone is a one-parameter projection solved by nested bisection;
//! * smooth non-separable operators are solved by damped Newton, in the
//!   displacement `d = x − x_λ` when `p ≥ 2` and in the dual variable
//!   `w = λ A_λ x` when `p < 2`, so the Jacobian of the inner power map stays finite.
//!
//! The reported residual is the `l^∞` violation of `J_φ(x − x_λ) ∈ λ A x_λ`
//! relative to the size of its two sides, so it is invariant under scaling
//! of `x` and stays meaningful for very small `λ`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, newton, NewtonOptions, NewtonOutcome, NewtonSystem};
use crate::operators::{ConvexSet, Homogeneity, MonotoneOp};
use crate::report::{Check, VerifierReport};
use crate::scalar::{increasing_root, solve_monotone, Bracketed, Direction};
use crate::space::{inf_norm, lp_norm, pairing, power_map, spow, Gauge, PVector, Side};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

impl ResolventOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// One resolvent solve: `x_λ`, `A_λ^φ x`, relative residual and iteration count.
#[derive(Clone, Debug, PartialEq)]
pub struct YosidaResult {
    pub x_lambda: PVector,
    pub a_lambda: PVector,
    pub residual: f64,
    pub iterations: usize,
    pub lambda: f64,
}

/// Coordinates of a solve, without the space tags.
#[derive(Clone, Debug)]
pub(crate) struct Raw {
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `0 ∈ J_φ(x_λ − x) + λ A x_λ`.
pub fn resolvent(op: &MonotoneOp, g: &Gauge, lambda: f64, x: &PVector, tol: f64) -> Result<YosidaResult> {
    resolvent_with(op, g, lambda, x, &ResolventOptions::with_tol(tol))
}

/// Same as [`resolvent`]; provided for call sites that care about `A_λ^φ x`.
pub fn yosida_apply(op: &MonotoneOp, g: &Gauge, lambda: f64, x: &PVector, tol: f64) -> Result<YosidaResult> {
    resolvent(op, g, lambda, x, tol)
}

pub fn resolvent_with(
    op: &MonotoneOp,
    g: &Gauge,
    lambda: f64,
    x: &PVector,
    opts: &ResolventOptions,
) -> Result<YosidaResult> {
    if x.side() != Side::Primal {
        return Err(Error::Invalid("resolvent expects a primal-side vector".into()));
    }
    if (x.p() - g.p()).abs() > 1e-12 * g.p() {
        return Err(Error::Invalid(format!("vector lives in l^{} but the gauge has p = {}", x.p(), g.p())));
    }
    let raw = solve_raw(op, g.p(), lambda, x.coords(), opts)?;
    Ok(YosidaResult {
        x_lambda: PVector::primal(raw.u, g.p())?,
        a_lambda: PVector::dual(raw.a, g.p())?,
        residual: raw.residual,
        iterations: raw.iterations,
        lambda,
    })
}

pub(crate) fn solve_raw(op: &MonotoneOp, p: f64, lambda: f64, x: &[f64], opts: &ResolventOptions) -> Result<Raw> {
    solve_raw_from(op, p, lambda, x, opts, None)
}

/// As [`solve_raw`], with the resolvent of a nearby point as an extra starting guess.
pub(crate) fn solve_raw_from(
    op: &MonotoneOp,
    p: f64,
    lambda: f64,
    x: &[f64],
    opts: &ResolventOptions,
    hint: Option<&[f64]>,
) -> Result<Raw> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Invalid(format!("lambda must be finite and > 0, got {lambda}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    if x.len() != op.dim() {
        return Err(Error::Invalid(format!("{} acts on R^{} but x has length {}", op.name(), op.dim(), x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("x has non-finite coordinates".into()));
    }
    let raw = if op.is_separable() {
        solve_separable(op, p, lambda, x)?
    } else {
        match op {
            MonotoneOp::NormalCone { set: ConvexSet::Ball { radius, exponent, .. } } => {
                solve_ball(p, lambda, x, *radius, *exponent)?
            }
            MonotoneOp::Scaled { factor, op: inner } if *factor > 0.0 => {
                let mut r = solve_raw_from(inner, p, lambda * factor, x, opts, hint)?;
                for v in &mut r.a {
                    *v *= factor;
                }
                r
            }
            MonotoneOp::Scaled { op: inner, .. } if inner.is_single_valued() => {
                Raw { u: x.to_vec(), a: vec![0.0; x.len()], residual: 0.0, iterations: 0 }
            }
            _ if op.is_single_valued() => solve_smooth(op, p, lambda, x, opts, hint)?,
            _ => {
                return Err(Error::Unsupported(format!(
                    "no resolvent rule for {} (multivalued and not separable)",
                    op.name()
                )))
            }
        }
    };
    if !(raw.residual <= opts.tol) {
        return Err(Error::NonConvergence { iterations: raw.iterations, residual: raw.residual });
    }
    Ok(raw)
}

/// Scale-invariant violation of `j ∈ λ[lo, hi]`: the distance to the
/// interval over the larger of `|j|` and the nearest interval point.
fn relative_violation(j: f64, lambda: f64, lo: f64, hi: f64) -> f64 {
    let m = (j / lambda).clamp(lo, hi);
    let near = lambda * m;
    let gap = (j - near).abs();
    if gap == 0.0 {
        return 0.0;
    }
    gap / j.abs().max(near.abs()).max(f64::MIN_POSITIVE)
}

fn coordinate_violation(op: &MonotoneOp, i: usize, p: f64, lambda: f64, d: f64, u: f64) -> f64 {
    let (lo, hi) = op.scalar_interval(i, u);
    relative_violation(spow(d, p - 1.0), lambda, lo, hi)
}

/// Best of two bracket endpoints `(d, u)` by violation.
fn pick(op: &MonotoneOp, i: usize, p: f64, lambda: f64, a: (f64, f64), b: (f64, f64)) -> (f64, f64, f64) {
    let va = coordinate_violation(op, i, p, lambda, a.0, a.1);
    let vb = coordinate_violation(op, i, p, lambda, b.0, b.1);
    if va <= vb || vb.is_nan() {
        (a.0, a.1, va)
    } else {
        (b.0, b.1, vb)
    }
}

/// Solves coordinate `i` by bisection on the displacement `d = x − x_λ`,
/// which keeps `A_λ` accurate for small `λ`; falls back to bisection on
/// `x_λ` itself, which lands exactly on kinks and domain endpoints.
fn solve_coordinate(op: &MonotoneOp, i: usize, p: f64, lambda: f64, xi: f64) -> Result<(f64, f64, f64, usize)> {
    let by_d = solve_monotone(
        |d| {
            let h = spow(d, p - 1.0) / lambda;
            let (lo, hi) = op.scalar_interval(i, xi - d);
            if h < lo {
                Direction::Increase
            } else if h > hi {
                Direction::Decrease
            } else {
                Direction::Found
            }
        },
        0.0,
        xi.abs().max(1.0),
    )?;
    let (d, u, v) = match by_d.outcome {
        Bracketed::Found(d) => (d, xi - d, coordinate_violation(op, i, p, lambda, d, xi - d)),
        Bracketed::Adjacent(a, b) => pick(op, i, p, lambda, (a, xi - a), (b, xi - b)),
    };
    if v <= 1e-13 {
        return Ok((d, u, v, by_d.iterations));
    }
    let by_u = solve_monotone(
        |u| {
            let h = spow(xi - u, p - 1.0) / lambda;
            let (lo, hi) = op.scalar_interval(i, u);
            if h > hi {
                Direction::Increase
            } else if h < lo {
                Direction::Decrease
            } else {
                Direction::Found
            }
        },
        xi,
        xi.abs().max(1.0),
    )?;
    let iterations = by_d.iterations + by_u.iterations;
    let (d2, u2, v2) = match by_u.outcome {
        Bracketed::Found(u) => (xi - u, u, coordinate_violation(op, i, p, lambda, xi - u, u)),
        Bracketed::Adjacent(a, b) => pick(op, i, p, lambda, (xi - a, a), (xi - b, b)),
    };
    if v2 < v || v.is_nan() {
        Ok((d2, u2, v2, iterations))
    } else {
        Ok((d, u, v, iterations))
    }
}

fn solve_separable(op: &MonotoneOp, p: f64, lambda: f64, x: &[f64]) -> Result<Raw> {
    let n = x.len();
    let mut u = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut residual = 0.0_f64;
    let mut iterations = 0;
    for i in 0..n {
        let (d, ui, v, it) = solve_coordinate(op, i, p, lambda, x[i])?;
        u[i] = ui;
        a[i] = spow(d, p - 1.0) / lambda;
        residual = residual.max(v);
        iterations = iterations.max(it);
    }
    Ok(Raw { u, a, residual, iterations })
}

/// Resolvent of the normal cone of `{‖y‖_r ≤ R}`: outside the ball `x_λ`
/// is the boundary point with `J_p(x − x_λ) = μ J_r(x_λ)`, `μ > 0`.
fn solve_ball(p: f64, lambda: f64, x: &[f64], radius: f64, r: f64) -> Result<Raw> {
    if lp_norm(x, r) <= radius {
        return Ok(Raw { u: x.to_vec(), a: vec![0.0; x.len()], residual: 0.0, iterations: 0 });
    }
    let mut iterations = 0;
    let point = |mu: f64, iterations: &mut usize| -> Result<Vec<f64>> {
        x.iter()
            .map(|&xi| {
                if xi == 0.0 {
                    return Ok(0.0);
                }
                let (root, it) = increasing_root(|v| mu * spow(v, r - 1.0) - spow(xi - v, p - 1.0), 0.0, xi.abs())?;
                *iterations += it;
                Ok(root)
            })
            .collect()
    };
    let (theta, it) = {
        let mut inner = 0;
        let mut failure = None;
        let res = increasing_root(
            |theta| match point(theta.exp(), &mut inner) {
                Ok(u) => radius - lp_norm(&u, r),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            0.0,
            1.0,
        )?;
        iterations += inner;
        if let Some(e) = failure {
            return Err(e);
        }
        res
    };
    iterations += it;
    let u = point(theta.exp(), &mut iterations)?;
    let jd = power_map(&x.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>(), p);
    let ray = power_map(&u, r);
    let rr = pairing(&ray, &ray);
    let mu = if rr > 0.0 { pairing(&jd, &ray) / rr } else { 0.0 };
    let viol = jd.iter().zip(&ray).map(|(a, b)| (a - mu * b).abs()).fold(0.0, f64::max);
    let residual = if viol == 0.0 { 0.0 } else { viol / inf_norm(&jd).max(f64::MIN_POSITIVE) };
    let a = jd.iter().map(|v| v / lambda).collect();
    Ok(Raw { u, a, residual, iterations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Form {
    /// Unknown `d = x − x_λ`; used for `p ≥ 2`.
    Displacement,
    /// Unknown `w = J_φ(d)`; used for `p < 2`.
    Dual,
}

struct ResolventSystem<'a> {
    op: &'a MonotoneOp,
    p: f64,
    q: f64,
    lambda: f64,
    x: &'a [f64],
    form: Form,
    energy: bool,
    mu: f64,
    floor: f64,
    tol: f64,
}

impl ResolventSystem<'_> {
    fn split(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        // returns (d, J(d))
        match self.form {
            Form::Displacement => (z.to_vec(), power_map(z, self.p)),
            Form::Dual => (power_map(z, self.q), z.to_vec()),
        }
    }

    fn point(&self, d: &[f64]) -> Vec<f64> {
        self.x.iter().zip(d).map(|(a, b)| a - b).collect()
    }

    /// Derivative of the inner power map, smoothed near zero.
    fn inner_slope(&self, s: f64, e: f64) -> f64 {
        if e == 2.0 {
            1.0
        } else {
            (e - 1.0) * (s * s + self.mu).powf((e - 2.0) / 2.0)
        }
    }

    /// Exact derivative `(q−1)|w|^{q−2}` of `J_φ^{-1}` (finite when `q > 2`).
    fn exact_dual_slope(&self, w: f64) -> f64 {
        if self.q == 2.0 {
            1.0
        } else {
            (self.q - 1.0) * w.abs().powf(self.q - 2.0)
        }
    }
}

impl NewtonSystem for ResolventSystem<'_> {
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (d, jd) = self.split(z);
        let au = self.op.value(&self.point(&d))?;
        Ok(jd.iter().zip(&au).map(|(j, a)| j - self.lambda * a).collect())
    }

    fn jacobian(&self, z: &[f64], _r: &[f64]) -> Result<DMatrix<f64>> {
        let (d, _) = self.split(z);
        let u = self.point(&d);
        let da = self
            .op
            .jacobian(&u, self.floor)
            .ok_or_else(|| Error::Unsupported(format!("no Jacobian for {}", self.op.name())))?;
        let n = z.len();
        Ok(match self.form {
            Form::Displacement => {
                let mut m = da * self.lambda;
                for i in 0..n {
                    m[(i, i)] += self.inner_slope(z[i], self.p);
                }
                m
            }
            Form::Dual => {
                let k: Vec<f64> = z.iter().map(|&w| self.inner_slope(w, self.q)).collect();
                let mut m = DMatrix::from_fn(n, n, |i, j| self.lambda * da[(i, j)] * k[j]);
                for i in 0..n {
                    m[(i, i)] += 1.0;
                }
                m
            }
        })
    }

    fn accept(&self, z: &[f64], r: &[f64]) -> (bool, f64) {
        let (_, jd) = self.split(z);
        let rn = inf_norm(r);
        // r = J(d) − λA(u), so J(d) − r = λA(u)
        let lam_a = jd.iter().zip(r).map(|(j, ri)| (j - ri).abs()).fold(0.0, f64::max);
        let m = if rn == 0.0 { 0.0 } else { rn / inf_norm(&jd).max(lam_a).max(f64::MIN_POSITIVE) };
        (m <= self.tol, m)
    }

    fn merit(&self, z: &[f64], r: &[f64]) -> f64 {
        if !self.energy {
            return 0.5 * dot(r, r);
        }
        let (d, _) = self.split(z);
        let e = self.op.energy_value(&self.point(&d)).unwrap_or(f64::INFINITY);
        d.iter().map(|v| v.abs().powf(self.p)).sum::<f64>() / self.p + self.lambda * e
    }

    fn merit_slope(&self, z: &[f64], r: &[f64], jac: &DMatrix<f64>, delta: &[f64]) -> f64 {
        if !self.energy {
            return dot(r, &crate::linalg::mat_vec(jac, delta));
        }
        match self.form {
            Form::Displacement => dot(r, delta),
            Form::Dual => r.iter().zip(z).zip(delta).map(|((ri, w), di)| ri * self.exact_dual_slope(*w) * di).sum(),
        }
    }

    fn descent(&self, z: &[f64], r: &[f64], jac: &DMatrix<f64>) -> Vec<f64> {
        if !self.energy {
            return crate::linalg::mat_t_vec(jac, r).iter().map(|v| -v).collect();
        }
        match self.form {
            Form::Displacement => r.iter().map(|v| -v).collect(),
            Form::Dual => r.iter().zip(z).map(|(ri, w)| -ri * self.exact_dual_slope(*w)).collect(),
        }
    }
}

fn solve_smooth(
    op: &MonotoneOp,
    p: f64,
    lambda: f64,
    x: &[f64],
    opts: &ResolventOptions,
    hint: Option<&[f64]>,
) -> Result<Raw> {
    let q = p / (p - 1.0);
    let scale = 1.0 + inf_norm(x);
    let sys = ResolventSystem {
        op,
        p,
        q,
        lambda,
        x,
        form: if p >= 2.0 { Form::Displacement } else { Form::Dual },
        energy: op.has_energy(),
        mu: (1e-14 * scale).powi(2),
        floor: 1e-12 * scale,
        tol: opts.tol,
    };
    // candidates: first-order guess J(d) ≈ λ A(x), and x_λ = 0
    let ax = op.value(x)?;
    let w_guess: Vec<f64> = ax.iter().map(|v| lambda * v).collect();
    let (g1, g2) = match sys.form {
        Form::Displacement => (power_map(&w_guess, q), x.to_vec()),
        Form::Dual => (w_guess, power_map(x, p)),
    };
    let score = |z: &[f64]| -> f64 {
        sys.residual(z).map(|r| sys.merit(z, &r)).unwrap_or(f64::INFINITY)
    };
    let mut z0 = if score(&g2) < score(&g1) { g2 } else { g1 };
    if let Some(u) = hint.filter(|u| u.len() == x.len()) {
        let d: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - b).collect();
        let g3 = match sys.form {
            Form::Displacement => d,
            Form::Dual => power_map(&d, p),
        };
        if score(&g3) < score(&z0) {
            z0 = g3;
        }
    }
    let nopts = NewtonOptions { max_iter: opts.max_iter, ..NewtonOptions::default() };
    let NewtonOutcome { z, measure, iterations, .. } = newton(&sys, z0, &nopts)?;
    let (d, jd) = sys.split(&z);
    let u = sys.point(&d);
    let a = jd.iter().map(|v| v / lambda).collect();
    Ok(Raw { u, a, residual: measure, iterations })
}

/// Jacobian of `x ↦ A_λ^φ x` at a solved point. Power terms that are
/// singular at zero are evaluated at `max(|s|, floor)`.
pub(crate) fn yosida_jacobian(
    op: &MonotoneOp,
    p: f64,
    lambda: f64,
    x: &[f64],
    raw: &Raw,
    floor: f64,
    opts: &ResolventOptions,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let q = p / (p - 1.0);
    let j_slope = |d: f64| (p - 1.0) * d.abs().max(floor).powf(p - 2.0);
    if op.is_separable() {
        let mut diag = DMatrix::zeros(n, n);
        for i in 0..n {
            let u = raw.u[i];
            let d = x[i] - u;
            let h = raw.a[i];
            let (lo, hi) = op.scalar_interval(i, u);
            let jp = j_slope(d);
            diag[(i, i)] = if lo < h && h < hi {
                // stuck at a kink of the graph: x_λ is locally constant
                jp / lambda
            } else {
                let s = op.scalar_slope(i, u);
                if s.is_infinite() {
                    jp / lambda
                } else if jp + lambda * s == 0.0 {
                    0.0
                } else {
                    jp * s / (jp + lambda * s)
                }
            };
        }
        return Ok(diag);
    }
    if op.is_single_valued() {
        if let Some(da) = op.jacobian(&raw.u, floor) {
            if p >= 2.0 {
                let d: Vec<f64> = x.iter().zip(&raw.u).map(|(a, b)| a - b).collect();
                let dj = DMatrix::from_fn(n, n, |i, j| if i == j { j_slope(d[i]) } else { 0.0 });
                let m = &dj + &da * lambda;
                if let Some(sol) = m.lu().solve(&da) {
                    return Ok(dj * sol);
                }
            } else {
                let w: Vec<f64> = raw.a.iter().map(|v| v * lambda).collect();
                let k: Vec<f64> = w.iter().map(|v| (q - 1.0) * v.abs().max(floor).powf(q - 2.0)).collect();
                let mut m = DMatrix::from_fn(n, n, |i, j| lambda * da[(i, j)] * k[j]);
                for i in 0..n {
                    m[(i, i)] += 1.0;
                }
                if let Some(sol) = m.lu().solve(&da) {
                    return Ok(sol);
                }
            }
        }
    }
    // central differences of the solver itself
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = solve_raw(op, p, lambda, &xp, opts)?.a;
        xp[j] = x[j] - h;
        let fm = solve_raw(op, p, lambda, &xp, opts)?.a;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Splitting defect `‖x − x_λ − λ^{q−1} J_φ^{-1}(A_λ^φ x)‖_p`.
pub fn splitting_defect(x: &[f64], r: &YosidaResult, g: &Gauge) -> f64 {
    let f = r.lambda.powf(g.q() - 1.0);
    let back = power_map(r.a_lambda.coords(), g.q());
    let diff: Vec<f64> = x
        .iter()
        .zip(r.x_lambda.coords())
        .zip(&back)
        .map(|((xi, ui), bi)| xi - ui - f * bi)
        .collect();
    lp_norm(&diff, g.p())
}

/// Decreasing schedule `10^{-k/2}`, `k = 0..=12`, from 1 down to 1e-6.
pub fn default_lambda_schedule() -> Vec<f64> {
    (0..=12).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

/// Whether the last five values are non-increasing, up to roundoff.
fn trend_down(v: &[f64]) -> bool {
    let tail = &v[v.len().saturating_sub(5)..];
    tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15)
}

fn trend_up(v: &[f64]) -> bool {
    let tail = &v[v.len().saturating_sub(5)..];
    tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9))
}

fn qnorm(v: &[f64], g: &Gauge) -> f64 {
    lp_norm(v, g.q())
}

/// Executable checks of the elementary properties of `A_λ^φ`: monotonicity
/// and local boundedness, the bound by the minimal section, convergence of
/// `J_λ^φ x` and `A_λ^φ x` as `λ → 0`, and blow-up outside the domain closure.
pub fn verify_approximant_properties(
    op: &MonotoneOp,
    g: &Gauge,
    x_samples: &[Vec<f64>],
    lambda_schedule: &[f64],
) -> Result<VerifierReport> {
    if lambda_schedule.is_empty() || x_samples.is_empty() {
        return Err(Error::Invalid("verify_approximant_properties needs samples and a lambda schedule".into()));
    }
    if lambda_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("lambda schedule must be strictly decreasing".into()));
    }
    let opts = ResolventOptions::default();
    let mut report = VerifierReport::new(format!("Yosida approximant properties for {}", op.name()));
    let mut mono = Check::new("monotone");
    let mut bounded = Check::new("bounded on the samples");
    let mut bound = Check::new("|A_lambda x| <= |A0 x|");
    let mut conv_x = Check::new("J_lambda x -> x");
    let mut conv_a = Check::new("A_lambda x -> A0 x");
    let mut blow = Check::new("|A_lambda x| -> infinity outside the domain closure");

    // values[k][j] = A_λk x_j
    let mut values: Vec<Vec<Raw>> = Vec::with_capacity(lambda_schedule.len());
    for &lambda in lambda_schedule {
        let row = x_samples
            .iter()
            .map(|x| solve_raw(op, g.p(), lambda, x, &opts))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }

    for (k, row) in values.iter().enumerate() {
        let lambda = lambda_schedule[k];
        let mut sup = 0.0_f64;
        for (i, ri) in row.iter().enumerate() {
            sup = sup.max(qnorm(&ri.a, g));
            for j in (i + 1)..row.len() {
                let da: Vec<f64> = ri.a.iter().zip(&row[j].a).map(|(a, b)| a - b).collect();
                let dx: Vec<f64> = x_samples[i].iter().zip(&x_samples[j]).map(|(a, b)| a - b).collect();
                let pr = pairing(&da, &dx);
                let tol = 1e-12 * (1.0 + dot(&da, &da).sqrt() * dot(&dx, &dx).sqrt());
                mono.require(pr >= -tol, (-pr).max(0.0), || {
                    format!("lambda={lambda:e} x={:?} y={:?} pairing={pr:e}", x_samples[i], x_samples[j])
                });
            }
        }
        bounded.require(sup.is_finite(), 0.0, || format!("lambda={lambda:e}: unbounded sample"));
    }

    for (j, x) in x_samples.iter().enumerate() {
        let a_norms: Vec<f64> = values.iter().map(|row| qnorm(&row[j].a, g)).collect();
        if op.in_domain(x) {
            let a0 = op.min_section(x)?;
            let a0n = qnorm(&a0, g);
            for (k, an) in a_norms.iter().enumerate() {
                let tol = 1e-9_f64.max(1e-12 * a0n);
                bound.require(*an <= a0n + tol, (an - a0n).max(0.0), || {
                    format!("x={x:?} lambda={:e}: |A_lambda x|={an:e} > |A0 x|={a0n:e}", lambda_schedule[k])
                });
            }
            let gaps_x: Vec<f64> = values
                .iter()
                .map(|row| lp_norm(&row[j].u.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>(), g.p()))
                .collect();
            let gaps_a: Vec<f64> = values
                .iter()
                .map(|row| qnorm(&row[j].a.iter().zip(&a0).map(|(a, b)| a - b).collect::<Vec<_>>(), g))
                .collect();
            let last_x = *gaps_x.last().unwrap();
            conv_x.require(trend_down(&gaps_x) && last_x < 1e-4, last_x, || format!("x={x:?} gaps={gaps_x:?}"));
            let last_a = *gaps_a.last().unwrap();
            conv_a.require(trend_down(&gaps_a) && last_a < 1e-4, last_a, || format!("x={x:?} gaps={gaps_a:?}"));
        } else {
            let last = *a_norms.last().unwrap();
            blow.require(trend_up(&a_norms) && last >= 1e6, 1.0 / last.max(f64::MIN_POSITIVE), || {
                format!("x={x:?} norms={a_norms:?}")
            });
            report.set_metric(format!("final |A_lambda x| at x={x:?}"), last);
        }
    }
    for c in [mono, bounded, bound, conv_x, conv_a, blow] {
        report.push(c);
    }
    Ok(report)
}

/// Log-spaced grid of `n ≥ 2` points in `[lo, hi]` including both ends.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn sphere_point<R: Rng>(rng: &mut R, n: usize, radius: f64, p: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = lp_norm(&v, p);
        if nv > 1e-3 {
            return v.into_iter().map(|c| c * radius / nv).collect();
        }
    }
}

fn ball_point<R: Rng>(rng: &mut R, n: usize, radius: f64, p: f64) -> Vec<f64> {
    let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
    sphere_point(rng, n, r, p)
}

/// Empirical constant `K = sup ‖A_λ^φ x‖` over `‖x‖ ≤ R`, `λ ∈ [λ_lo, λ_hi]`,
/// accepted when doubling the sample count changes it by less than 5%.
pub fn verify_uniform_bound(
    op: &MonotoneOp,
    g: &Gauge,
    ball_radius: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    samples: usize,
    seed: u64,
) -> Result<VerifierReport> {
    if !(0.0 < lambda_lo && lambda_lo < lambda_hi) || !(ball_radius > 0.0) || samples == 0 {
        return Err(Error::Invalid("uniform bound needs 0 < lambda_lo < lambda_hi, radius > 0, samples >= 1".into()));
    }
    let n = op.dim();
    let opts = ResolventOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambdas = log_grid(lambda_lo, lambda_hi, 9);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; n];
            e[i] = s * ball_radius;
            points.push(e);
        }
    }
    points.push(vec![0.0; n]);
    let sup_over = |pts: &[Vec<f64>]| -> Result<f64> {
        let mut k = 0.0_f64;
        for x in pts {
            for &lambda in &lambdas {
                let r = solve_raw(op, g.p(), lambda, x, &opts)?;
                k = k.max(qnorm(&r.a, g));
            }
        }
        Ok(k)
    };
    while points.len() < samples {
        points.push(if rng.gen_bool(0.5) {
            sphere_point(&mut rng, n, ball_radius, g.p())
        } else {
            ball_point(&mut rng, n, ball_radius, g.p())
        });
    }
    let k1 = sup_over(&points)?;
    let extra: Vec<Vec<f64>> = (0..points.len())
        .map(|_| {
            if rng.gen_bool(0.5) {
                sphere_point(&mut rng, n, ball_radius, g.p())
            } else {
                ball_point(&mut rng, n, ball_radius, g.p())
            }
        })
        .collect();
    let k2 = k1.max(sup_over(&extra)?);
    let mut report = VerifierReport::new(format!("uniform bound over lambda for {}", op.name()));
    report.set_metric("K_emp", k2);
    let mut c = Check::new("K finite and stable under sample doubling");
    let growth = if k1 > 0.0 { k2 / k1 - 1.0 } else if k2 > 0.0 { f64::INFINITY } else { 0.0 };
    c.require(k2.is_finite() && growth < 0.05, growth, || format!("K(n)={k1:e} K(2n)={k2:e}"));
    report.push(c);
    Ok(report)
}

/// Empirical bound on `‖A_λ^φ x‖` over samples with `‖x‖ ≤ S` and
/// `⟨A_λ^φ x, x⟩ ≤ S1`, for `λ` log-uniform in `[1e-6, 1e2]`.
pub fn quasibound_probe(op: &MonotoneOp, g: &Gauge, s: f64, s1: f64, samples: usize, seed: u64) -> Result<VerifierReport> {
    if !(s > 0.0 && s1 > 0.0) || samples == 0 {
        return Err(Error::Invalid("quasibound probe needs S, S1 > 0 and samples >= 1".into()));
    }
    let n = op.dim();
    let opts = ResolventOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = |count: usize| -> Result<(f64, usize)> {
        let mut k = 0.0_f64;
        let mut kept = 0;
        for _ in 0..count {
            let lambda = 10f64.powf(rng.gen_range(-6.0..2.0));
            let x = if rng.gen_bool(0.3) { sphere_point(&mut rng, n, s, g.p()) } else { ball_point(&mut rng, n, s, g.p()) };
            let r = solve_raw(op, g.p(), lambda, &x, &opts)?;
            if pairing(&r.a, &x) <= s1 {
                kept += 1;
                k = k.max(qnorm(&r.a, g));
            }
        }
        Ok((k, kept))
    };
    let (k1, kept1) = run(samples)?;
    let (k_extra, kept2) = run(samples)?;
    let k2 = k1.max(k_extra);
    let mut report = VerifierReport::new(format!("strong quasiboundedness probe for {}", op.name()));
    report.set_metric("K_emp", k2);
    report.set_metric("kept samples", (kept1 + kept2) as f64);
    let mut c = Check::new("K finite and stable under sample doubling");
    let growth = if k1 > 0.0 { k2 / k1 - 1.0 } else if k2 > 0.0 { f64::INFINITY } else { 0.0 };
    c.require(k2.is_finite() && growth < 0.05, growth, || format!("K(n)={k1:e} K(2n)={k2:e}"));
    report.push(c);
    Ok(report)
}

/// Gaps `‖A_{λ_k}^φ x_k − A_{λ_0}^φ x_0‖` along a path converging to `(λ_0, x_0)`.
pub fn verify_joint_continuity(
    op: &MonotoneOp,
    g: &Gauge,
    path: &[(f64, Vec<f64>)],
    limit: &(f64, Vec<f64>),
) -> Result<VerifierReport> {
    if path.is_empty() {
        return Err(Error::Invalid("continuity path is empty".into()));
    }
    if !(limit.0 > 0.0) {
        return Err(Error::Invalid("limit lambda must be > 0".into()));
    }
    let opts = ResolventOptions::default();
    let a0 = solve_raw(op, g.p(), limit.0, &limit.1, &opts)?.a;
    let gaps = path
        .iter()
        .map(|(lambda, x)| {
            let a = solve_raw(op, g.p(), *lambda, x, &opts)?.a;
            Ok(qnorm(&a.iter().zip(&a0).map(|(u, v)| u - v).collect::<Vec<_>>(), g))
        })
        .collect::<Result<Vec<f64>>>()?;
    let last = *gaps.last().unwrap();
    let mut report = VerifierReport::new(format!("joint continuity in (lambda, x) for {}", op.name()));
    report.set_metric("final gap", last);
    let mut c = Check::new("final gap < 1e-6");
    c.require(last < 1e-6, last, || format!("gaps={gaps:?}"));
    report.push(c);
    Ok(report)
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = inf_norm(a) + inf_norm(b);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Checks `A_t^φ(sx) = s^γ A_{t s^{γ+1−p}}^φ x`; when `p = γ + 1` also the
/// direct homogeneity of `A_t^φ` and `J_t^φ`. The report's `max_violation` is the residual.
pub fn verify_homogeneity_transmission(
    op: &MonotoneOp,
    gamma: f64,
    g: &Gauge,
    t: f64,
    s: f64,
    x: &[f64],
) -> Result<VerifierReport> {
    match op.homogeneity() {
        Homogeneity::None => {
            return Err(Error::Usage(format!("{} has no declared homogeneity degree", op.name())));
        }
        Homogeneity::Degree(d) if (d - gamma).abs() > 1e-12 * d.max(1.0) => {
            return Err(Error::Usage(format!("{} is homogeneous of degree {d}, not {gamma}", op.name())));
        }
        _ => {}
    }
    if !(t > 0.0) || !(s >= 0.0) {
        return Err(Error::Invalid("need t > 0 and s >= 0".into()));
    }
    let opts = ResolventOptions { tol: 1e-12, ..ResolventOptions::default() };
    let p = g.p();
    let mut report = VerifierReport::new(format!("homogeneity transmission for {}", op.name()));
    let mut eq = Check::new("A_t(sx) = s^gamma A_{t s^(gamma+1-p)}(x)");
    if s == 0.0 {
        let zero = vec![0.0; x.len()];
        let r = solve_raw(op, p, t, &zero, &opts)?;
        let v = inf_norm(&r.a);
        eq.require(v == 0.0, v, || format!("A_t(0) = {:?}", r.a));
        report.push(eq);
        return Ok(report);
    }
    let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
    let lhs = solve_raw(op, p, t, &sx, &opts)?;
    let t_shift = t * s.powf(gamma + 1.0 - p);
    let inner = solve_raw(op, p, t_shift, x, &opts)?;
    let f = s.powf(gamma);
    let rhs: Vec<f64> = inner.a.iter().map(|v| f * v).collect();
    let res = rel_gap(&lhs.a, &rhs);
    eq.require(res <= 1e-8, res, || format!("s={s} t={t} x={x:?} lhs={:?} rhs={rhs:?}", lhs.a));
    report.push(eq);
    if (p - (gamma + 1.0)).abs() <= 1e-12 * p {
        let base = solve_raw(op, p, t, x, &opts)?;
        let scaled_a: Vec<f64> = base.a.iter().map(|v| f * v).collect();
        let ra = rel_gap(&lhs.a, &scaled_a);
        let mut ca = Check::new("A_t(sx) = s^gamma A_t(x)");
        ca.require(ra <= 1e-8, ra, || format!("s={s} t={t} x={x:?}"));
        report.push(ca);
        let scaled_u: Vec<f64> = base.u.iter().map(|v| s * v).collect();
        let ru = rel_gap(&lhs.u, &scaled_u);
        let mut cu = Check::new("J_t(sx) = s J_t(x)");
        cu.require(ru <= 1e-8, ru, || format!("s={s} t={t} x={x:?}"));
        report.push(cu);
    }
    Ok(report)
}
