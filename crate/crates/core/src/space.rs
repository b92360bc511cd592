//! Power gauges, `l^p` norms and the duality mappings `J_φ`, `J_φ^{-1}`.
//!
//! With the gauge `φ(r) = r^{p-1}` the duality mapping of `(ℝⁿ, ‖·‖_p)` is
//! single-valued and acts componentwise, `(J_φ x)_i = |x_i|^{p-2} x_i`. It is
//! the gradient of `(1/p)‖x‖_p^p`; its inverse is the duality mapping of the
//! dual space `(ℝⁿ, ‖·‖_q)` for the gauge `φ^{-1}(r) = r^{q-1}`.

use crate::error::{Error, Result};

/// Power gauge `φ(r) = r^{p-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gauge {
    p: f64,
    q: f64,
    gamma: f64,
}

impl Gauge {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Invalid(format!("gauge exponent must be finite and > 1, got {p}")));
        }
        let q = p / (p - 1.0);
        debug_assert!((1.0 / p + 1.0 / q - 1.0).abs() <= 1e-14);
        Ok(Self { p, q, gamma: p - 1.0 })
    }

    /// Exponent of the primal space.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent, `1/p + 1/q = 1`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Homogeneity degree of `J_φ`, equal to `p - 1`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `φ(r) = r^{p-1}`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(r.powf(self.p - 1.0))
    }

    /// `φ^{-1}(r) = r^{q-1}`.
    pub fn inverse(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(r.powf(self.q - 1.0))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("gauge argument must be nonnegative, got {r}")));
    }
    Ok(())
}

/// Which space a [`PVector`] lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Primal,
    Dual,
}

/// A point of `(ℝⁿ, ‖·‖_p)` or of its dual `(ℝⁿ, ‖·‖_q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PVector {
    coords: Vec<f64>,
    side: Side,
    p: f64,
}

impl PVector {
    pub fn new(coords: Vec<f64>, side: Side, p: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Invalid("vector must have at least one coordinate".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("non-finite coordinate {bad}")));
        }
        Gauge::new(p)?;
        Ok(Self { coords, side, p })
    }

    pub fn primal(coords: Vec<f64>, p: f64) -> Result<Self> {
        Self::new(coords, Side::Primal, p)
    }

    pub fn dual(coords: Vec<f64>, p: f64) -> Result<Self> {
        Self::new(coords, Side::Dual, p)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Exponent `p` of the primal space this vector belongs to (or is dual to).
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Exponent of the norm this vector is measured in: `p` on the primal
    /// side, `q` on the dual side.
    pub fn norm_exponent(&self) -> f64 {
        match self.side {
            Side::Primal => self.p,
            Side::Dual => self.p / (self.p - 1.0),
        }
    }

    pub fn norm(&self) -> f64 {
        pnorm(self)
    }
}

/// Norm of `x` in its own space.
pub fn pnorm(x: &PVector) -> f64 {
    lp_norm(x.coords(), x.norm_exponent())
}

/// `(Σ|v_i|^r)^{1/r}`, computed with max-scaling so large exponents do not overflow.
pub fn lp_norm(v: &[f64], r: f64) -> f64 {
    let m = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let s: f64 = v.iter().map(|c| (c.abs() / m).powf(r)).sum();
    m * s.powf(1.0 / r)
}

/// Dual pairing `⟨y, x⟩`.
pub fn pairing(y: &[f64], x: &[f64]) -> f64 {
    y.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Signed power `sign(s)|s|^e`, with value 0 at `s = 0`.
#[inline]
pub fn spow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(e)
    }
}

/// Componentwise `|v_i|^{r-2} v_i`: the duality map of `l^r` for the gauge `t^{r-1}`.
pub fn power_map(v: &[f64], r: f64) -> Vec<f64> {
    v.iter().map(|&c| spow(c, r - 1.0)).collect()
}

/// `J_φ` on a primal vector; returns the dual vector `(|x_i|^{p-2} x_i)_i`.
pub fn duality_map(x: &PVector, g: &Gauge) -> Result<PVector> {
    if x.side() != Side::Primal {
        return Err(Error::Invalid("duality_map expects a primal-side vector".into()));
    }
    check_exponent(x.p(), g)?;
    PVector::dual(power_map(x.coords(), g.p()), g.p())
}

/// `J_φ^{-1}` on a dual vector; returns `(|y_i|^{q-2} y_i)_i`.
pub fn duality_map_inverse(y: &PVector, g: &Gauge) -> Result<PVector> {
    if y.side() != Side::Dual {
        return Err(Error::Invalid("duality_map_inverse expects a dual-side vector".into()));
    }
    check_exponent(y.p(), g)?;
    PVector::primal(power_map(y.coords(), g.q()), g.p())
}

fn check_exponent(p: f64, g: &Gauge) -> Result<()> {
    if (p - g.p()).abs() > 1e-12 * p {
        return Err(Error::Invalid(format!(
            "vector lives in l^{p} but the gauge has exponent {}",
            g.p()
        )));
    }
    Ok(())
}

/// Normalized duality map `J = J_φ` with `φ(r) = r`, i.e. `‖x‖_p^{2-p} (|x_i|^{p-2} x_i)_i`.
pub fn normalized_duality(x: &[f64], p: f64) -> Vec<f64> {
    let n = lp_norm(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let scale = n.powf(2.0 - p);
    x.iter().map(|&c| scale * spow(c, p - 1.0)).collect()
}
