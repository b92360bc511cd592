//! Brouwer degree `d(f, G, 0)` in finite dimensions.
//!
//! Dimension 1 uses endpoint signs and dimension 2 the winding number of `f`
//! along `∂G`; both are reported only when `min ‖f‖` on the sampled boundary
//! clears a margin. In dimension 3 and up the degree is the sum of
//! `sign det Df` over zeros found by multistart Newton, which depends on the
//! search finding every zero and is therefore never certified.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{fd_jacobian, newton, NewtonOptions, NewtonSystem};
use crate::space::{inf_norm, lp_norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DegreeMethod {
    EndpointSign,
    Winding,
    RegularSum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeReport {
    /// The computed degree; `None` when no value could be reported.
    pub value: Option<i64>,
    /// Whether `value` is backed by the boundary-margin certificate.
    pub certified: bool,
    pub method: DegreeMethod,
    /// Smallest `‖f‖₂` observed on the boundary samples.
    pub boundary_margin: f64,
    /// Deepest bisection level used (winding) or number of zeros found (regular sum).
    pub refinement: usize,
}

impl DegreeReport {
    /// The value if certified.
    pub fn certified_value(&self) -> Option<i64> {
        if self.certified {
            self.value
        } else {
            None
        }
    }

    pub fn describe(&self) -> String {
        match (self.value, self.certified) {
            (Some(v), true) => format!("{v} (certified, margin {:.3e})", self.boundary_margin),
            (Some(v), false) => format!("{v} (uncertified, margin {:.3e})", self.boundary_margin),
            (None, _) => format!("uncertified (margin {:.3e})", self.boundary_margin),
        }
    }
}

/// Bounded open region: an interval of `ℝ` or an `l^p` ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64, p: f64 },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64, p: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !(p >= 1.0) {
            return Err(Error::Invalid("ball needs a center, radius > 0 and p >= 1".into()));
        }
        Ok(Region::Ball { center, radius, p })
    }

    pub fn centered_ball(dim: usize, radius: f64, p: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius, p)
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Interval { a, b } => *a < x[0] && x[0] < *b,
            Region::Ball { center, radius, p } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(u, c)| u - c).collect();
                lp_norm(&d, *p) < *radius
            }
        }
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Interval { a, b } => (vec![*a], vec![*b]),
            Region::Ball { center, radius, .. } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeOptions {
    /// Minimum boundary `‖f‖` for a certified value.
    pub margin: f64,
    /// Maximum bisection depth per initial boundary segment.
    pub max_refine: usize,
    pub initial_segments: usize,
    /// Multistart points per dimension for the regular-value sum.
    pub starts_per_dim: usize,
    /// Boundary samples per dimension used to estimate the margin in `n ≥ 3`.
    pub boundary_samples_per_dim: usize,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self { margin: 1e-6, max_refine: 30, initial_segments: 64, starts_per_dim: 128, boundary_samples_per_dim: 200 }
    }
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Degree of a scalar map on `(a, b)`: `(sign f(b) − sign f(a)) / 2`.
pub fn degree_1d<F>(mut f: F, a: f64, b: f64) -> Result<DegreeReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    degree_1d_with(&mut f, a, b, &DegreeOptions::default())
}

fn degree_1d_with<F>(f: &mut F, a: f64, b: f64, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b) {
        return Err(Error::Invalid(format!("interval needs a < b, got [{a}, {b}]")));
    }
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 || fb == 0.0 || fa.is_nan() || fb.is_nan() {
        return Err(Error::BoundaryDegenerate(format!("f vanishes at an endpoint of [{a}, {b}]: f(a)={fa}, f(b)={fb}")));
    }
    let margin = fa.abs().min(fb.abs());
    let certified = margin >= opts.margin;
    Ok(DegreeReport {
        value: certified.then(|| (sign(fb) - sign(fa)) / 2),
        certified,
        method: DegreeMethod::EndpointSign,
        boundary_margin: margin,
        refinement: 0,
    })
}

fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.atan2(dot)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Winding number of `f` along the closed curve `curve(s)`, `s ∈ [0, 1]`,
/// with `curve(1) = curve(0)`.
fn winding_curve<F, C>(f: &mut F, curve: C, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    C: Fn(f64) -> [f64; 2],
{
    let m = opts.initial_segments.max(3);
    let mut margin = f64::INFINITY;
    let mut eval = |s: f64, margin: &mut f64| -> Result<Vec<f64>> {
        let v = f(&curve(s))?;
        if v.len() != 2 {
            return Err(Error::Invalid(format!("planar map returned {} components", v.len())));
        }
        *margin = margin.min(norm2(&v));
        Ok(v)
    };
    let uncertified = |margin: f64, depth: usize| DegreeReport {
        value: None,
        certified: false,
        method: DegreeMethod::Winding,
        boundary_margin: margin,
        refinement: depth,
    };
    let nodes: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let mut vals = Vec::with_capacity(m + 1);
    for &s in &nodes[..m] {
        vals.push(eval(s, &mut margin)?);
    }
    vals.push(vals[0].clone());
    let mut total = 0.0;
    let mut deepest = 0;
    for k in 0..m {
        let mut stack = vec![(nodes[k], nodes[k + 1], vals[k].clone(), vals[k + 1].clone(), 0usize)];
        while let Some((s0, s1, f0, f1, depth)) = stack.pop() {
            if margin < opts.margin {
                return Ok(uncertified(margin, deepest));
            }
            let d = angle_between(&f0, &f1);
            let sm = 0.5 * (s0 + s1);
            let fm = eval(sm, &mut margin)?;
            if d.abs() < PI / 2.0 {
                // the midpoint must confirm the increment, otherwise the samples alias
                let (d1, d2) = (angle_between(&f0, &fm), angle_between(&fm, &f1));
                if d1.abs() < PI / 2.0 && d2.abs() < PI / 2.0 && (d1 + d2 - d).abs() < 1e-9 {
                    total += d1 + d2;
                    deepest = deepest.max(depth);
                    continue;
                }
            }
            if depth >= opts.max_refine {
                return Ok(uncertified(margin, depth));
            }
            // right half pushed first so the left half is processed first
            stack.push((sm, s1, fm.clone(), f1, depth + 1));
            stack.push((s0, sm, f0, fm, depth + 1));
        }
    }
    if margin < opts.margin {
        return Ok(uncertified(margin, deepest));
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 1e-6 {
        return Ok(uncertified(margin, deepest));
    }
    Ok(DegreeReport {
        value: Some(rounded as i64),
        certified: true,
        method: DegreeMethod::Winding,
        boundary_margin: margin,
        refinement: deepest,
    })
}

/// Winding number of a planar map along a closed polyline (the last vertex
/// connects back to the first). Segments are bisected until every angle
/// increment of `f` is below `π/2` and is confirmed by the segment midpoint.
pub fn winding_2d<F>(mut f: F, boundary: &[[f64; 2]], max_refine: usize) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if boundary.len() < 3 {
        return Err(Error::Invalid("boundary polyline needs at least 3 vertices".into()));
    }
    let m = boundary.len();
    let curve = |s: f64| {
        let pos = s * m as f64;
        let k = (pos.floor() as usize).min(m - 1);
        let frac = pos - k as f64;
        let (a, b) = (boundary[k], boundary[(k + 1) % m]);
        [a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])]
    };
    let opts = DegreeOptions { max_refine, initial_segments: m, ..DegreeOptions::default() };
    winding_curve(&mut f, curve, &opts)
}

/// Vertices of a regular polygon inscribed in a circle.
pub fn circle_polyline(center: [f64; 2], radius: f64, segments: usize) -> Vec<[f64; 2]> {
    (0..segments)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / segments as f64;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect()
}

/// Radical-inverse (Halton) point `index` in `[0, 1)^dim`.
pub(crate) fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut i = index + 1;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

struct ZeroSearch<'a, F, J> {
    f: &'a std::cell::RefCell<F>,
    jac: Option<&'a std::cell::RefCell<J>>,
}

impl<F, J> NewtonSystem for ZeroSearch<'_, F, J>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        (self.f.borrow_mut())(z)
    }

    fn jacobian(&self, z: &[f64], r: &[f64]) -> Result<DMatrix<f64>> {
        match self.jac {
            Some(j) => (j.borrow_mut())(z),
            None => fd_jacobian(|y| (self.f.borrow_mut())(y), z, r),
        }
    }

    fn accept(&self, z: &[f64], r: &[f64]) -> (bool, f64) {
        let m = inf_norm(r);
        (m <= 1e-13 * (1.0 + inf_norm(z)), m)
    }
}

/// Degree at a regular value: `Σ sign det Df(z)` over zeros `z ∈ G` found by
/// multistart Newton from Halton points of the bounding box. Always uncertified.
pub fn degree_regular_nd<F, J>(f: F, jacobian: Option<J>, region: &Region, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    let n = region.dim();
    let f = std::cell::RefCell::new(f);
    let jac = jacobian.map(std::cell::RefCell::new);
    let sys = ZeroSearch { f: &f, jac: jac.as_ref() };
    let margin = boundary_margin(&mut *f.borrow_mut(), region, opts)?;
    let (lo, hi) = region.bounding_box();
    let mut zeros: Vec<Vec<f64>> = Vec::new();
    let nopts = NewtonOptions { max_iter: 100, stall: 6, ..NewtonOptions::default() };
    for k in 0..opts.starts_per_dim * n {
        let h = halton(k, n);
        let z0: Vec<f64> = (0..n).map(|i| lo[i] + (hi[i] - lo[i]) * h[i]).collect();
        let Ok(out) = newton(&sys, z0, &nopts) else { continue };
        if !region.contains(&out.z) {
            continue;
        }
        if zeros.iter().any(|z| norm2(&z.iter().zip(&out.z).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6) {
            continue;
        }
        zeros.push(out.z);
    }
    let mut total = 0;
    for z in &zeros {
        let r = sys.residual(z)?;
        let jz = sys.jacobian(z, &r)?;
        let scale = jz.abs().max().max(1.0).powi(n as i32);
        let det = jz.determinant();
        if det.abs() <= 1e-10 * scale {
            return Err(Error::DegenerateZero(z.clone()));
        }
        total += sign(det);
    }
    Ok(DegreeReport {
        value: Some(total),
        certified: false,
        method: DegreeMethod::RegularSum,
        boundary_margin: margin,
        refinement: zeros.len(),
    })
}

/// Minimum of `‖f‖₂` over boundary samples.
fn boundary_margin<F>(f: &mut F, region: &Region, opts: &DegreeOptions) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    match region {
        Region::Interval { a, b } => Ok(norm2(&f(&[*a])?).min(norm2(&f(&[*b])?))),
        Region::Ball { center, radius, p } => {
            let n = center.len();
            let mut m = f64::INFINITY;
            for k in 0..opts.boundary_samples_per_dim * n {
                let h = halton(k, n);
                let v: Vec<f64> = h.iter().map(|c| 2.0 * c - 1.0).collect();
                let nv = lp_norm(&v, *p);
                if nv < 1e-9 {
                    continue;
                }
                let x: Vec<f64> = v.iter().zip(center).map(|(c, o)| o + c * radius / nv).collect();
                m = m.min(norm2(&f(&x)?));
            }
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut x = center.clone();
                    x[i] += s * radius;
                    m = m.min(norm2(&f(&x)?));
                }
            }
            Ok(m)
        }
    }
}

/// Degree of `f` on `region`, choosing the method by dimension.
pub fn degree_on<F>(f: F, region: &Region, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    degree_dispatch(f, None::<fn(&[f64]) -> Result<DMatrix<f64>>>, region, opts)
}

/// As [`degree_on`], with an analytic Jacobian for the regular-value sum in `n ≥ 3`.
pub fn degree_on_with_jacobian<F, J>(f: F, jacobian: J, region: &Region, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    degree_dispatch(f, Some(jacobian), region, opts)
}

fn degree_dispatch<F, J>(mut f: F, jacobian: Option<J>, region: &Region, opts: &DegreeOptions) -> Result<DegreeReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    J: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    match region {
        Region::Interval { a, b } => degree_1d_with(&mut |x: f64| Ok(f(&[x])?[0]), *a, *b, opts),
        Region::Ball { center, radius, .. } if center.len() == 1 => {
            let c = center[0];
            degree_1d_with(&mut |x: f64| Ok(f(&[x])?[0]), c - radius, c + radius, opts)
        }
        Region::Ball { center, radius, p } if center.len() == 2 => {
            let (c, r, p) = ([center[0], center[1]], *radius, *p);
            let curve = move |s: f64| {
                let th = 2.0 * PI * s;
                let v = [th.cos(), th.sin()];
                let nv = lp_norm(&v, p);
                [c[0] + r * v[0] / nv, c[1] + r * v[1] / nv]
            };
            winding_curve(&mut f, curve, opts)
        }
        Region::Ball { center, radius, p } => {
            let mut report = degree_regular_nd(&mut f, jacobian, region, opts)?;
            if report.boundary_margin >= opts.margin {
                let compared = comparison_degree(&mut f, center, *radius, *p, opts)?;
                report.certified = compared.is_some() && compared == report.value;
            }
            Ok(report)
        }
    }
}

/// Smallest cosine between `f(x)` and `±(x − c)` accepted on the boundary samples.
const COMPARISON_COS: f64 = 1e-2;

/// Degree from a straight-line homotopy to `±(x − c)`: when
/// `⟨f(x), x − c⟩` keeps a strict sign on the sampled sphere, the degree
/// is `1` (positive) or `(−1)^n` (negative).
fn comparison_degree<F>(f: &mut F, center: &[f64], radius: f64, p: f64, opts: &DegreeOptions) -> Result<Option<i64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = center.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut visit = |x: &[f64]| -> Result<()> {
        let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
        let fx = f(x)?;
        let c = fx.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / (norm2(&fx) * norm2(&d)).max(f64::MIN_POSITIVE);
        lo = lo.min(c);
        hi = hi.max(c);
        Ok(())
    };
    for k in 0..opts.boundary_samples_per_dim * n {
        let v: Vec<f64> = halton(k, n).iter().map(|c| 2.0 * c - 1.0).collect();
        let nv = lp_norm(&v, p);
        if nv < 1e-9 {
            continue;
        }
        let x: Vec<f64> = v.iter().zip(center).map(|(c, o)| o + c * radius / nv).collect();
        visit(&x)?;
    }
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut x = center.to_vec();
            x[i] += s * radius;
            visit(&x)?;
        }
    }
    Ok(if lo >= COMPARISON_COS {
        Some(1)
    } else if hi <= -COMPARISON_COS {
        Some(if n % 2 == 0 { 1 } else { -1 })
    } else {
        None
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Excision {
    /// Degrees differ: `f` has a zero in `G1 ∖ closure(G2)`.
    SolutionInAnnulus,
    /// Degrees agree; excision says nothing.
    Inconclusive,
    /// At least one degree is not certified.
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcisionReport {
    pub d1: DegreeReport,
    pub d2: DegreeReport,
    pub conclusion: Excision,
}

/// Compares `d(f, G1, 0)` and `d(f, G2, 0)` for nested regions `G2 ⊂ G1`.
pub fn excision_report<F>(mut f: F, g1: &Region, g2: &Region, opts: &DegreeOptions) -> Result<ExcisionReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if g1.dim() != g2.dim() {
        return Err(Error::Invalid("regions have different dimensions".into()));
    }
    let d1 = degree_on(&mut f, g1, opts)?;
    let d2 = degree_on(&mut f, g2, opts)?;
    let conclusion = match (d1.certified_value(), d2.certified_value()) {
        (Some(a), Some(b)) if a != b => Excision::SolutionInAnnulus,
        (Some(_), Some(_)) => Excision::Inconclusive,
        _ => Excision::Uncertified,
    };
    Ok(ExcisionReport { d1, d2, conclusion })
}
