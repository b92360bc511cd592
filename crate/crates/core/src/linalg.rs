//! Dense linear solves and a damped Newton loop shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    let x = a.clone().lu().solve(&rhs)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

pub(crate) fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let v = a * DVector::from_column_slice(x);
    v.iter().copied().collect()
}

pub(crate) fn mat_t_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let v = a.transpose() * DVector::from_column_slice(x);
    v.iter().copied().collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward-difference Jacobian of `f` at `x` given `fx = f(x)`.
pub(crate) fn fd_jacobian<F>(mut f: F, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let m = fx.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct NewtonOptions {
    pub max_iter: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Give up when the residual measure has not halved over this many
    /// iterations; zero disables the test.
    pub stall: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 200, armijo: 1e-4, max_backtracks: 40, stall: 0 }
    }
}

/// A square nonlinear system `F(z) = 0` with a merit function for line search.
pub(crate) trait NewtonSystem {
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>>;

    fn jacobian(&self, z: &[f64], r: &[f64]) -> Result<DMatrix<f64>>;

    /// Acceptance test; returns the residual measure reported to callers.
    fn accept(&self, z: &[f64], r: &[f64]) -> (bool, f64);

    fn merit(&self, _z: &[f64], r: &[f64]) -> f64 {
        0.5 * dot(r, r)
    }

    /// Directional derivative of the merit along `delta`.
    fn merit_slope(&self, _z: &[f64], r: &[f64], jac: &DMatrix<f64>, delta: &[f64]) -> f64 {
        dot(r, &mat_vec(jac, delta))
    }

    /// Steepest-descent direction of the merit, used when Newton fails to descend.
    fn descent(&self, _z: &[f64], r: &[f64], jac: &DMatrix<f64>) -> Vec<f64> {
        mat_t_vec(jac, r).iter().map(|v| -v).collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct NewtonOutcome {
    pub z: Vec<f64>,
    pub measure: f64,
    pub iterations: usize,
}

pub(crate) fn newton<S: NewtonSystem>(
    sys: &S,
    z0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let mut z = z0;
    let mut r = sys.residual(&z)?;
    let (ok, mut measure) = sys.accept(&z, &r);
    if ok {
        return Ok(NewtonOutcome { z, measure, iterations: 0 });
    }
    let mut history = vec![measure];
    for it in 1..=opts.max_iter {
        let jac = sys.jacobian(&z, &r)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let newton_step = solve(&jac, &neg);
        let mut delta = newton_step.clone().unwrap_or_else(|| sys.descent(&z, &r, &jac));
        let m0 = sys.merit(&z, &r);
        let mut slope = sys.merit_slope(&z, &r, &jac, &delta);
        if !(slope < 0.0) {
            delta = sys.descent(&z, &r, &jac);
            slope = sys.merit_slope(&z, &r, &jac, &delta);
        }
        // the merit is flat here; only a residual decrease counts as progress
        let flat = !(slope < 0.0);
        if flat {
            if let Some(step) = newton_step {
                delta = step;
            }
        }
        let r_norm = dot(&r, &r).sqrt();
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut fallback: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..=opts.max_backtracks {
            let zt: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            if let Ok(rt) = sys.residual(&zt) {
                if rt.iter().all(|v| v.is_finite()) {
                    let mt = sys.merit(&zt, &rt);
                    let allowance = 1e-14 * m0.abs();
                    if !flat && mt <= m0 + opts.armijo * alpha * slope + allowance {
                        accepted = Some((zt, rt));
                        break;
                    }
                    let rt_norm = dot(&rt, &rt).sqrt();
                    if rt_norm < r_norm && fallback.as_ref().map_or(true, |f| rt_norm < f.2) {
                        fallback = Some((zt, rt, rt_norm));
                    }
                }
            }
            alpha *= 0.5;
        }
        let (zn, rn) = match (accepted, fallback) {
            (Some(a), _) => a,
            (None, Some((zt, rt, _))) => (zt, rt),
            (None, None) => {
                return Err(Error::NonConvergence { iterations: it, residual: measure });
            }
        };
        z = zn;
        r = rn;
        let (ok, m) = sys.accept(&z, &r);
        measure = m;
        if ok {
            return Ok(NewtonOutcome { z, measure, iterations: it });
        }
        history.push(measure);
        if opts.stall > 0 && it >= opts.stall && !(measure <= 0.5 * history[it - opts.stall]) {
            return Err(Error::NonConvergence { iterations: it, residual: measure });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: measure })
}
