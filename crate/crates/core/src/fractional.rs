//! The fractional Laplacian `(-Laplace)^s` as a spectral multiplier and as the
//! singular-integral bilinear form on the 3-torus, with calibration of the
//! form's constant against the multiplier.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{eval_shifted, Basis, Grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalExponent(f64);

impl FractionalExponent {
    pub fn new(s: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&s) {
            Ok(FractionalExponent(s))
        } else {
            Err(Error::param(format!("fractional exponent {s} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalExponent {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        FractionalExponent::new(s)
    }
}

impl From<FractionalExponent> for f64 {
    fn from(s: FractionalExponent) -> f64 {
        s.0
    }
}

/// Multiplier `mu^s` of `(-Laplace)^s` at Laplacian eigenvalue `mu`; the zero
/// mode is annihilated for every `s`, including `s = 0`.
pub fn multiplier(mu: f64, s: f64) -> f64 {
    if mu == 0.0 {
        0.0
    } else {
        mu.powf(s)
    }
}

pub fn apply_fractional_laplacian(u: &SpectralField, s: FractionalExponent) -> SpectralField {
    let mut out = u.clone();
    for (c, &mu) in out.coeffs_mut().iter_mut().zip(u.grid().mu()) {
        *c *= multiplier(mu, s.0);
    }
    out
}

/// `(v, (-Laplace)^s u)` by Parseval.
pub fn bilinear_form_spectral(v: &SpectralField, u: &SpectralField, s: FractionalExponent) -> Result<f64> {
    v.weighted_inner(u, |mu| multiplier(mu, s.0))
}

/// Discretization of the `h`-integral over `h_min <= |h| <= h_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralQuadratureSpec {
    pub h_min: f64,
    pub h_max: f64,
    pub shells: usize,
    pub directions: usize,
}

impl Default for IntegralQuadratureSpec {
    fn default() -> Self {
        IntegralQuadratureSpec {
            h_min: 1e-3,
            h_max: 32.0,
            shells: 64,
            directions: 26,
        }
    }
}

impl IntegralQuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min < self.h_max && self.h_max.is_finite()) {
            return Err(Error::param(format!(
                "quadrature needs 0 < h_min < h_max, got h_min = {}, h_max = {}",
                self.h_min, self.h_max
            )));
        }
        if self.shells < 4 || self.directions < 6 {
            return Err(Error::param("quadrature needs at least 4 shells and 6 directions"));
        }
        Ok(())
    }

    /// Radial nodes and weights: midpoint rule in `log r`, so the weight of a
    /// node already contains the volume factor `r^2 dr = r^3 d(log r)`.
    fn radial_nodes(&self) -> Vec<(f64, f64)> {
        let (a, b) = (self.h_min.ln(), self.h_max.ln());
        let step = (b - a) / self.shells as f64;
        (0..self.shells)
            .map(|i| {
                let r = (a + (i as f64 + 0.5) * step).exp();
                (r, r * r * r * step)
            })
            .collect()
    }

    /// Spherical Fibonacci lattice with equal weights `4 pi / n`.
    fn directions(&self) -> Vec<[f64; 3]> {
        let n = self.directions;
        let golden = PI * (1.0 + 5f64.sqrt());
        (0..n)
            .map(|i| {
                let t = i as f64 + 0.5;
                let z = 1.0 - 2.0 * t / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * t;
                [rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect()
    }
}

fn require_3d_torus(grid: &Grid, op: &'static str) -> Result<()> {
    if !grid.is_torus() {
        return Err(Error::RequiresTorus(op));
    }
    if grid.dim() != 3 {
        return Err(Error::UnsupportedDimension { op, dim: grid.dim() });
    }
    Ok(())
}

/// `c * int int (v(x+h)-v(x)) (u(x+h)-u(x)) |h|^{-3-2s} dx dh`, with the inner
/// integral evaluated exactly per `h` by spectral shifting and collocation.
pub fn bilinear_form_integral(
    v: &SpectralField,
    u: &SpectralField,
    s: FractionalExponent,
    q: &IntegralQuadratureSpec,
    c: f64,
) -> Result<f64> {
    q.validate()?;
    v.ensure_same_grid(u)?;
    require_3d_torus(u.grid(), "bilinear_form_integral")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("integral-form constant {c} must be positive")));
    }
    let grid = u.grid();
    let uv = crate::spectral::inverse_transform(u)?;
    let vv = crate::spectral::inverse_transform(v)?;
    let same = std::ptr::eq(u, v) || u.coeffs() == v.coeffs();
    let total = integrate_over_h(s, q, |h| {
        let us = eval_shifted(u, &h)?;
        let vs = if same { us.clone() } else { eval_shifted(v, &h)? };
        let terms: Vec<f64> = us
            .values()
            .iter()
            .zip(uv.values())
            .zip(vs.values().iter().zip(vv.values()))
            .map(|((a, b), (p, r))| (p - r) * (a - b))
            .collect();
        Ok(pairwise_sum(&terms) * grid.cell_volume())
    })?;
    Ok(c * total)
}

/// Integral form of `(f(u), (-Laplace)^{1/2} u)` with `f` applied pointwise
/// to the shifted samples, so that for nondecreasing `f` every integrand
/// value `(f(u(x+h)) - f(u(x))) (u(x+h) - u(x))` is nonnegative.
pub fn monotone_integral_form(
    spec: &NonlinearitySpec,
    u: &SpectralField,
    q: &IntegralQuadratureSpec,
    c: f64,
) -> Result<f64> {
    q.validate()?;
    require_3d_torus(u.grid(), "monotone_integral_form")?;
    let grid = u.grid();
    let base = crate::spectral::inverse_transform(u)?;
    let fbase = crate::nonlinearity::eval_f(spec, &base)?;
    let half = FractionalExponent(0.5);
    let total = integrate_over_h(half, q, |h| {
        let us = eval_shifted(u, &h)?;
        let fus = crate::nonlinearity::eval_f(spec, &us)?;
        let terms: Vec<f64> = us
            .values()
            .iter()
            .zip(base.values())
            .zip(fus.values().iter().zip(fbase.values()))
            .map(|((a, b), (p, r))| (p - r) * (a - b))
            .collect();
        Ok(pairwise_sum(&terms) * grid.cell_volume())
    })?;
    Ok(c * total)
}

fn integrate_over_h(
    s: FractionalExponent,
    q: &IntegralQuadratureSpec,
    mut inner: impl FnMut([f64; 3]) -> Result<f64>,
) -> Result<f64> {
    let dirs = q.directions();
    let w_dir = 4.0 * PI / dirs.len() as f64;
    let mut terms = Vec::with_capacity(dirs.len() * q.shells);
    for (r, w_r) in q.radial_nodes() {
        let kernel = r.powf(-3.0 - 2.0 * s.0);
        for d in &dirs {
            let h = [r * d[0], r * d[1], r * d[2]];
            terms.push(w_r * w_dir * kernel * inner(h)?);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Ratio of the spectral to the uncalibrated integral form on `cos(x_1)`.
pub fn calibrate_constant(s: FractionalExponent, q: &IntegralQuadratureSpec) -> Result<f64> {
    if !(s.0 > 0.0 && s.0 < 1.0) {
        return Err(Error::param(format!("calibration needs s in (0, 1), got {}", s.0)));
    }
    q.validate()?;
    let grid = crate::spectral::make_grid(3, 8, Basis::TorusExponential)?;
    let mut m = SpectralField::zeros(grid);
    m.set_real_mode(&[1, 0, 0], crate::spectral::Complex64::new(0.5, 0.0))?;
    let num = bilinear_form_spectral(&m, &m, s)?;
    let den = bilinear_form_integral(&m, &m, s, q, 1.0)?;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateQuadrature(format!(
            "integral form of cos(x1) evaluated to {den}"
        )));
    }
    Ok(num / den)
}

/// Deterministic tree reduction.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
