//! The nonlinear term `f`, its potential `F(u) = int_0^u f`, and sampled
//! verification of the structural conditions imposed on `f`.
//!
//! Conditions are universally quantified over `u`; every check here samples a
//! finite range and certifies only that no violation was found there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{bilinear_form_spectral, FractionalExponent};
use crate::spectral::{Field, SpectralField, Transform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// `f = 0` (linear problem).
    Zero,
    /// `f(u) = a u |u|^q`.
    PowerOdd { a: f64, q: f64 },
    /// `f(u) = a u^3`.
    Cubic { a: f64 },
    /// `f(u) = a u^5`.
    Quintic { a: f64 },
    /// Monotone cubic interpolation of tabulated samples.
    Custom(Tabulated),
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Quintic { a: 1.0 }
    }
}

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<()> {
        let coeff = |a: f64| {
            if a.is_finite() && a > 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!(
                    "nonlinearity coefficient a = {a} must be positive"
                )))
            }
        };
        match self {
            NonlinearitySpec::Zero | NonlinearitySpec::Custom(_) => Ok(()),
            NonlinearitySpec::Cubic { a } | NonlinearitySpec::Quintic { a } => coeff(*a),
            NonlinearitySpec::PowerOdd { a, q } => {
                coeff(*a)?;
                if q.is_finite() && *q >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("growth exponent q = {q} must be nonnegative")))
                }
            }
        }
    }

    /// Growth exponent `q` of `f'(u) ~ |u|^q`.
    pub fn growth_q(&self) -> f64 {
        match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::PowerOdd { q, .. } => *q,
            NonlinearitySpec::Cubic { .. } => 2.0,
            NonlinearitySpec::Quintic { .. } => 4.0,
            NonlinearitySpec::Custom(t) => t.growth_q,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NonlinearitySpec::Zero)
    }

    /// True for the built-in odd kinds; tabulated data is checked numerically.
    pub fn is_odd(&self) -> bool {
        match self {
            NonlinearitySpec::Custom(t) => t.is_odd(1e-12),
            _ => true,
        }
    }

    /// Smallest and largest admissible argument.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            NonlinearitySpec::Custom(t) => (t.u[0], t.u[t.u.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn f(&self, u: f64) -> Result<f64> {
        Ok(match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::PowerOdd { a, q } => a * u * u.abs().powf(*q),
            NonlinearitySpec::Cubic { a } => a * u * u * u,
            NonlinearitySpec::Quintic { a } => {
                let u2 = u * u;
                a * u2 * u2 * u
            }
            NonlinearitySpec::Custom(t) => t.eval(u)?.0,
        })
    }

    pub fn df(&self, u: f64) -> Result<f64> {
        Ok(match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::PowerOdd { a, q } => a * (q + 1.0) * u.abs().powf(*q),
            NonlinearitySpec::Cubic { a } => 3.0 * a * u * u,
            NonlinearitySpec::Quintic { a } => 5.0 * a * (u * u) * (u * u),
            NonlinearitySpec::Custom(t) => t.eval(u)?.1,
        })
    }

    pub fn d2f(&self, u: f64) -> Result<f64> {
        Ok(match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::PowerOdd { a, q } => {
                if *q == 0.0 || u == 0.0 {
                    0.0
                } else {
                    a * (q + 1.0) * q * u.abs().powf(q - 1.0) * u.signum()
                }
            }
            NonlinearitySpec::Cubic { a } => 6.0 * a * u,
            NonlinearitySpec::Quintic { a } => 20.0 * a * u * u * u,
            NonlinearitySpec::Custom(t) => t.eval(u)?.2,
        })
    }

    /// `F(u) = int_0^u f(v) dv`.
    pub fn potential(&self, u: f64) -> Result<f64> {
        Ok(match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::PowerOdd { a, q } => a * u.abs().powf(q + 2.0) / (q + 2.0),
            NonlinearitySpec::Cubic { a } => 0.25 * a * (u * u) * (u * u),
            NonlinearitySpec::Quintic { a } => {
                let u2 = u * u;
                a * u2 * u2 * u2 / 6.0
            }
            NonlinearitySpec::Custom(t) => t.potential(u)?,
        })
    }

    /// Pointwise `f` over a slice, in place.
    pub(crate) fn apply_in_place(&self, values: &mut [f64]) -> Result<()> {
        match self {
            NonlinearitySpec::Quintic { a } => {
                for v in values.iter_mut() {
                    let u2 = *v * *v;
                    *v *= a * u2 * u2;
                }
            }
            NonlinearitySpec::Cubic { a } => {
                for v in values.iter_mut() {
                    *v = a * *v * *v * *v;
                }
            }
            _ => {
                for v in values.iter_mut() {
                    *v = self.f(*v)?;
                }
            }
        }
        Ok(())
    }

    /// Sum of `F` over a slice.
    pub(crate) fn potential_sum(&self, values: &[f64]) -> Result<f64> {
        values.iter().try_fold(0.0, |acc, &v| Ok(acc + self.potential(v)?))
    }
}

/// Tabulated nonlinearity with monotone (Fritsch-Carlson) cubic
/// interpolation. Evaluation outside the table is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct Tabulated {
    u: Vec<f64>,
    f: Vec<f64>,
    slopes: Vec<f64>,
    /// Cumulative integral of the interpolant from `u[0]` to each node.
    cumulative: Vec<f64>,
    /// Integral from `u[0]` to 0.
    origin: f64,
    growth_q: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    u: Vec<f64>,
    f: Vec<f64>,
    #[serde(default)]
    growth_q: f64,
}

impl TryFrom<TableRepr> for Tabulated {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        Tabulated::new(r.u, r.f, r.growth_q)
    }
}

impl From<Tabulated> for TableRepr {
    fn from(t: Tabulated) -> Self {
        TableRepr {
            u: t.u,
            f: t.f,
            growth_q: t.growth_q,
        }
    }
}

impl Tabulated {
    pub fn new(u: Vec<f64>, f: Vec<f64>, growth_q: f64) -> Result<Self> {
        if u.len() != f.len() || u.len() < 2 {
            return Err(Error::param("table needs at least two (u, f) pairs of equal length"));
        }
        if u.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::param("table entries must be finite"));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("table abscissae must be strictly increasing"));
        }
        if !(u[0] <= 0.0 && 0.0 <= u[u.len() - 1]) {
            return Err(Error::param("table range must contain 0"));
        }
        if !(growth_q.is_finite() && growth_q >= 0.0) {
            return Err(Error::param("growth exponent must be nonnegative"));
        }
        let slopes = pchip_slopes(&u, &f);
        let mut t = Tabulated {
            u,
            f,
            slopes,
            cumulative: Vec::new(),
            origin: 0.0,
            growth_q,
        };
        let mut cumulative = vec![0.0];
        for i in 0..t.u.len() - 1 {
            let last = cumulative[i];
            cumulative.push(last + t.segment_integral(i, 1.0));
        }
        t.cumulative = cumulative;
        t.origin = t.integral_from_start(0.0);
        Ok(t)
    }

    /// Samples `g` on `count` equally spaced points of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, count: usize, growth_q: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let u: Vec<f64> = (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
        let f = u.iter().map(|&x| g(x)).collect();
        Tabulated::new(u, f, growth_q)
    }

    fn is_odd(&self, tol: f64) -> bool {
        let n = self.u.len();
        (0..n).all(|i| {
            let j = n - 1 - i;
            (self.u[i] + self.u[j]).abs() <= tol * (1.0 + self.u[i].abs())
                && (self.f[i] + self.f[j]).abs() <= tol * (1.0 + self.f[i].abs())
        })
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.u[0], self.u[self.u.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfTableRange { value: x, lo, hi });
        }
        let i = match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.u.len() - 2),
        };
        let h = self.u[i + 1] - self.u[i];
        Ok((i, (x - self.u[i]) / h))
    }

    /// Value, first and second derivative of the interpolant.
    fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (i, t) = self.locate(x)?;
        let h = self.u[i + 1] - self.u[i];
        let (y0, y1, d0, d1) = (self.f[i], self.f[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1;
        let d2v = ((12.0 * t - 6.0) * y0 + (-12.0 * t + 6.0) * y1) / (h * h)
            + ((6.0 * t - 4.0) * d0 + (6.0 * t - 2.0) * d1) / h;
        Ok((v, dv, d2v))
    }

    /// Integral of the Hermite cubic on segment `i` from its left node to
    /// local coordinate `t`.
    fn segment_integral(&self, i: usize, t: f64) -> f64 {
        let h = self.u[i + 1] - self.u[i];
        let (y0, y1, d0, d1) = (self.f[i], self.f[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        h * ((t - t3 + 0.5 * t4) * y0
            + (0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4) * h * d0
            + (t3 - 0.5 * t4) * y1
            + (-t3 / 3.0 + 0.25 * t4) * h * d1)
    }

    fn integral_from_start(&self, x: f64) -> f64 {
        // `x` is inside the table whenever this is called.
        let (i, t) = self.locate(x).expect("inside table");
        self.cumulative[i] + self.segment_integral(i, t)
    }

    fn potential(&self, x: f64) -> Result<f64> {
        self.locate(x)?;
        Ok(self.integral_from_start(x) - self.origin)
    }
}

/// Shape-preserving derivative estimates (Fritsch-Carlson with the
/// three-point end conditions used by PCHIP).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let edge = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Pointwise `f(u)`.
pub fn eval_f(spec: &NonlinearitySpec, u: &Field) -> Result<Field> {
    let mut values = u.values().to_vec();
    spec.apply_in_place(&mut values)?;
    Ok(Field::from_raw(u.grid().clone(), values))
}

/// Pointwise `F(u)`.
pub fn eval_potential(spec: &NonlinearitySpec, u: &Field) -> Result<Field> {
    let values = u
        .values()
        .iter()
        .map(|&v| spec.potential(v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Field::from_raw(u.grid().clone(), values))
}

/// Certificate for `-C + kappa |u|^q <= f'(u) <= C (1 + |u|^q)` on a sampled
/// range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub kappa: f64,
    pub big_c: f64,
    pub q: f64,
    pub satisfied: bool,
    /// Sample where the tighter of the two inequalities has the least margin
    /// (or, when no certificate exists, where `kappa` would have to be <= 0).
    pub worst_sample: f64,
}

/// Searches `(kappa, C)` certifying the growth condition on
/// `[-u_range, u_range]` for the spec's own exponent.
pub fn verify_growth(spec: &NonlinearitySpec, u_range: f64, samples: usize) -> Result<GrowthReport> {
    verify_growth_with_q(spec, u_range, samples, spec.growth_q())
}

/// As [`verify_growth`] with an explicitly claimed exponent `q`.
pub fn verify_growth_with_q(spec: &NonlinearitySpec, u_range: f64, samples: usize, q: f64) -> Result<GrowthReport> {
    if !(u_range > 0.0) || samples < 100 {
        return Err(Error::param("verify_growth needs u_range > 0 and at least 100 samples"));
    }
    let us = symmetric_samples(spec, u_range, samples);
    let slopes = us.iter().map(|&u| spec.df(u)).collect::<Result<Vec<_>>>()?;
    let pow = |u: f64| if q == 0.0 { 1.0 } else { u.abs().powf(q) };
    let far = 0.5 * us.iter().fold(0.0_f64, |m, u| m.max(u.abs()));

    // kappa: the smallest ratio f'/|u|^q over the outer half of the range.
    let (mut kappa, mut kappa_at) = (f64::INFINITY, 0.0);
    for (&u, &d) in us.iter().zip(&slopes) {
        if u.abs() >= far && u != 0.0 {
            let r = d / pow(u);
            if r < kappa {
                kappa = r;
                kappa_at = u;
            }
        }
    }
    // Built-in powers with the matching exponent: the ratio is exactly
    // constant, so the sampled value is the exact one.
    if let Some(exact) = exact_power_constant(spec, q) {
        kappa = exact;
    }
    if !(kappa > 0.0) {
        return Ok(GrowthReport {
            kappa: kappa.max(0.0),
            big_c: f64::NAN,
            q,
            satisfied: false,
            worst_sample: kappa_at,
        });
    }

    let mut c_low = f64::NEG_INFINITY;
    let mut c_up = f64::NEG_INFINITY;
    for (&u, &d) in us.iter().zip(&slopes) {
        c_low = c_low.max(kappa * pow(u) - d);
        c_up = c_up.max(d / (1.0 + pow(u)));
    }
    if let Some(exact) = exact_power_constant(spec, q) {
        // sup over all u of a(p+1)|u|^q / (1 + |u|^q) is a(p+1).
        c_up = c_up.max(exact);
    }
    let big_c = c_low.max(c_up).max(f64::EPSILON);

    let mut worst = (f64::INFINITY, 0.0);
    let mut satisfied = true;
    for (&u, &d) in us.iter().zip(&slopes) {
        let lower = d - (kappa * pow(u) - big_c);
        let upper = big_c * (1.0 + pow(u)) - d;
        let margin = lower.min(upper);
        let tol = 1e-12 * (1.0 + d.abs() + big_c * (1.0 + pow(u)));
        if margin < -tol {
            satisfied = false;
        }
        if margin < worst.0 {
            worst = (margin, u);
        }
    }
    Ok(GrowthReport {
        kappa,
        big_c,
        q,
        satisfied,
        worst_sample: worst.1,
    })
}

fn exact_power_constant(spec: &NonlinearitySpec, q: f64) -> Option<f64> {
    match spec {
        NonlinearitySpec::Cubic { a } if q == 2.0 => Some(3.0 * a),
        NonlinearitySpec::Quintic { a } if q == 4.0 => Some(5.0 * a),
        NonlinearitySpec::PowerOdd { a, q: p } if *p == q => Some(a * (p + 1.0)),
        _ => None,
    }
}

fn symmetric_samples(spec: &NonlinearitySpec, u_range: f64, samples: usize) -> Vec<f64> {
    let (lo, hi) = spec.domain();
    let r = u_range.min(-lo).min(hi);
    (0..samples)
        .map(|i| -r + 2.0 * r * i as f64 / (samples - 1) as f64)
        .collect()
}

/// Outcome of the two extra conditions required for the weakly damped
/// quintic theory: `|f''(u)| <= C (1 + |u|^3)` and `f(u) u - 4 F(u) >= -C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShatahStruweReport {
    pub second_derivative_ok: bool,
    /// Largest sampled `|f''(u)| / (1 + |u|^3)`.
    pub second_derivative_c: f64,
    pub virial_ok: bool,
    /// Smallest sampled `f(u) u - 4 F(u)`.
    pub virial_min: f64,
    pub virial_min_at: f64,
    pub passed: bool,
}

/// Sampled check of both conditions on `[-u_range, u_range]`.
///
/// A quantity counts as unbounded when its extreme over the full range
/// exceeds the extreme over the inner half by more than a factor of two (plus
/// one unit), i.e. it is still growing at the edge of the sampled range.
pub fn verify_shatah_struwe_conditions(spec: &NonlinearitySpec, u_range: f64) -> Result<ShatahStruweReport> {
    let us = symmetric_samples(spec, u_range, 4001);
    let r = us[us.len() - 1];
    let mut ratio_inner = 0.0_f64;
    let mut ratio_full = 0.0_f64;
    let mut vir_inner = f64::INFINITY;
    let mut vir_full = f64::INFINITY;
    let mut vir_at = 0.0;
    for &u in &us {
        let ratio = spec.d2f(u)?.abs() / (1.0 + u.abs().powi(3));
        let virial = spec.f(u)? * u - 4.0 * spec.potential(u)?;
        ratio_full = ratio_full.max(ratio);
        if virial < vir_full {
            vir_full = virial;
            vir_at = u;
        }
        if u.abs() <= 0.5 * r {
            ratio_inner = ratio_inner.max(ratio);
            vir_inner = vir_inner.min(virial);
        }
    }
    let second_derivative_ok = ratio_full <= 2.0 * ratio_inner + 1.0;
    let virial_ok = vir_full >= 0.0 || vir_full >= 2.0 * vir_inner.min(0.0) - 1.0;
    Ok(ShatahStruweReport {
        second_derivative_ok,
        second_derivative_c: ratio_full,
        virial_ok,
        virial_min: vir_full,
        virial_min_at: vir_at,
        passed: second_derivative_ok && virial_ok,
    })
}

/// Residual of `(f(u), (-Laplace)^{1/2} u) >= -K ||(-Laplace)^{1/4} u||^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative up to round-off when the bound holds.
    pub residual: f64,
    /// `max |u|` on the evaluation grid, the natural scale of the residual.
    pub sup_u: f64,
}

/// Evaluates both sides exactly for band-limited `u`: `f(u)` is projected
/// from a 3x zero-padded grid, which is alias-free for quintic `f`.
pub fn monotone_fractional_bound_check(
    spec: &NonlinearitySpec,
    u: &SpectralField,
    k: f64,
) -> Result<MonotoneBoundReport> {
    let grid = u.grid();
    if !grid.is_torus() {
        return Err(Error::RequiresTorus("monotone_fractional_bound_check"));
    }
    let pad = Transform::padded(grid.dim(), grid.n_per_axis(), grid.basis(), 3);
    let mut values = pad.to_physical(u.coeffs());
    let sup_u = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    spec.apply_in_place(&mut values)?;
    let fu = SpectralField::from_raw(grid.clone(), pad.to_spectral(&values));
    let half = FractionalExponent::new(0.5)?;
    let lhs = bilinear_form_spectral(&fu, u, half)?;
    let rhs = -k * bilinear_form_spectral(u, u, half)?;
    Ok(MonotoneBoundReport {
        lhs,
        rhs,
        residual: lhs - rhs,
        sup_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, make_grid, seeded_field, Basis};

    const QUINTIC: NonlinearitySpec = NonlinearitySpec::Quintic { a: 1.0 };
    const CUBIC: NonlinearitySpec = NonlinearitySpec::Cubic { a: 1.0 };

    #[test]
    fn pointwise_values() {
        let g = make_grid(1, 8, Basis::TorusExponential).unwrap();
        let two = Field::from_fn(g.clone(), |_| 2.0);
        assert!(eval_f(&QUINTIC, &two).unwrap().values().iter().all(|&v| v == 32.0));
        let zero = Field::zeros(g.clone());
        for spec in [QUINTIC, CUBIC, NonlinearitySpec::PowerOdd { a: 2.0, q: 1.5 }] {
            assert!(eval_f(&spec, &zero).unwrap().values().iter().all(|&v| v == 0.0));
            assert_eq!(spec.potential(0.0).unwrap(), 0.0);
        }
        assert!((QUINTIC.potential(1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(CUBIC.potential(2.0).unwrap(), 4.0);
    }

    #[test]
    fn cubic_of_cosine_has_two_modes() {
        let g = make_grid(1, 16, Basis::TorusExponential).unwrap();
        let u = Field::from_fn(g.clone(), |x| x[0].cos());
        let s = forward_transform(&eval_f(&CUBIC, &u).unwrap());
        for k in -7..=8_i64 {
            let expect = match k.abs() {
                1 => 0.375,
                3 => 0.125,
                _ => 0.0,
            };
            assert!((s.coeff_at(&[k]).re - expect).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn growth_certificates() {
        let q = verify_growth(&QUINTIC, 10.0, 1001).unwrap();
        assert!(q.satisfied);
        assert_eq!((q.kappa, q.big_c, q.q), (5.0, 5.0, 4.0));

        let c = verify_growth_with_q(&CUBIC, 10.0, 1001, 4.0).unwrap();
        assert!(c.satisfied, "{c:?}");
        assert!(c.kappa > 0.0 && c.big_c > 0.0);

        let minus_u = NonlinearitySpec::Custom(Tabulated::from_fn(-10.0, 10.0, 21, 1.0, |u| -u).unwrap());
        for q in [0.0, 1.0, 4.0] {
            let r = verify_growth_with_q(&minus_u, 10.0, 501, q).unwrap();
            assert!(!r.satisfied);
        }
        assert!(verify_growth(&QUINTIC, 10.0, 50).is_err());
    }

    #[test]
    fn shatah_struwe_conditions() {
        let q = verify_shatah_struwe_conditions(&QUINTIC, 10.0).unwrap();
        assert!(q.passed);
        assert!(q.virial_min >= 0.0);
        let c = verify_shatah_struwe_conditions(&CUBIC, 10.0).unwrap();
        assert!(c.passed, "{c:?}");
        let neg = NonlinearitySpec::Custom(Tabulated::from_fn(-10.0, 10.0, 2001, 4.0, |u| -u.powi(5)).unwrap());
        let r = verify_shatah_struwe_conditions(&neg, 10.0).unwrap();
        assert!(!r.virial_ok && !r.passed);
        assert!(r.virial_min < -1e4);
        let septic = NonlinearitySpec::PowerOdd { a: 1.0, q: 6.0 };
        assert!(
            !verify_shatah_struwe_conditions(&septic, 10.0)
                .unwrap()
                .second_derivative_ok
        );
    }

    #[test]
    fn quintic_virial_identity() {
        for i in -50..=50 {
            let u = i as f64 * 0.1;
            let v = QUINTIC.f(u).unwrap() * u - 4.0 * QUINTIC.potential(u).unwrap();
            assert!((v - u.powi(6) / 3.0).abs() <= 1e-12 * (1.0 + u.powi(6)));
        }
    }

    #[test]
    fn tabulated_interpolation() {
        let t = Tabulated::from_fn(-2.0, 2.0, 9, 0.0, |u| 3.0 * u).unwrap();
        let spec = NonlinearitySpec::Custom(t);
        // Linear data is reproduced exactly, including derivative and potential.
        for &u in &[-1.7, -0.3, 0.0, 0.25, 1.99] {
            assert!((spec.f(u).unwrap() - 3.0 * u).abs() < 1e-13);
            assert!((spec.df(u).unwrap() - 3.0).abs() < 1e-12);
            assert!((spec.potential(u).unwrap() - 1.5 * u * u).abs() < 1e-13);
        }
        assert!(matches!(spec.f(2.5), Err(Error::OutOfTableRange { .. })));
        assert!(spec.is_odd());
        assert!(Tabulated::new(vec![1.0, 2.0], vec![0.0, 1.0], 0.0).is_err());
        assert!(Tabulated::new(vec![0.0, 0.0], vec![0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn tabulated_monotone_between_nodes() {
        let t = Tabulated::from_fn(-3.0, 3.0, 13, 4.0, |u| u.powi(5)).unwrap();
        let spec = NonlinearitySpec::Custom(t);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=600 {
            let u = -3.0 + 0.01 * i as f64;
            let v = spec.f(u).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn monotone_bound_on_cosine_and_zero() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let u = forward_transform(&Field::from_fn(g.clone(), |x| x[0].cos()));
        let r = monotone_fractional_bound_check(&QUINTIC, &u, 0.0).unwrap();
        // cos^5 = (10 cos x + 5 cos 3x + cos 5x)/16; only |k| = 1 pairs with u.
        let vol = (2.0 * std::f64::consts::PI).powi(3);
        assert!((r.lhs - 10.0 / 16.0 * 0.5 * vol).abs() < 1e-10 * vol);
        let z = monotone_fractional_bound_check(&QUINTIC, &SpectralField::zeros(g.clone()), 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        let rnd = seeded_field(&g, 3, 3).unwrap().scaled(4.0);
        let r = monotone_fractional_bound_check(&QUINTIC, &rnd, 0.0).unwrap();
        assert!(r.residual >= -1e-10 * r.sup_u.powi(6));
    }

    #[test]
    fn serde_round_trip() {
        let spec = NonlinearitySpec::Custom(Tabulated::from_fn(-1.0, 1.0, 5, 2.0, |u| u * u * u).unwrap());
        let text = serde_json::to_string(&spec).unwrap();
        let back: NonlinearitySpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let q: NonlinearitySpec = serde_json::from_str(r#"{"kind":"quintic","a":1.0}"#).unwrap();
        assert_eq!(q, QUINTIC);
    }
}
