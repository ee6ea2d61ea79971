//! Norms, energies and identity residuals evaluated along trajectories.
//!
//! Sobolev norms use the inhomogeneous weight `(1 + |k|^2)^s`. Physical-space
//! integrals of nonlinear quantities are taken on zero-padded grids: on the
//! 3x grid `F(u)` and `|u|^6` are integrated exactly for quintic `F`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::multiplier;
use crate::integrator::{DiagnosticSink, ModelParams, SimState, Stepper};
use crate::linear::damping_multiplier;
use crate::spectral::{lp_norm, SpectralField};

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_e: f64,
    pub energy_space_norm: f64,
    pub h1: f64,
    pub h32: f64,
    pub h2: f64,
    /// `gamma ||(-Laplace)^{theta/2} v||^2`.
    pub damping_integrand: f64,
    /// Spatial `L^12` norm of `u` on the 2x padded grid.
    pub l12: f64,
    /// `(v, A u) + gamma/2 ||A u||^2` with `A = (-Laplace)^{1/2}`.
    pub lyapunov_quantity: Option<f64>,
    /// Minus the time derivative of `lyapunov_quantity` along exact solutions.
    pub lyapunov_rate: Option<f64>,
    /// `|L^12 on the 3x grid - L^12 on the 2x grid|`.
    pub l12_refinement_delta: f64,
    /// `||v||_{H^1}`.
    pub v_h1: f64,
}

impl DiagnosticsRecord {
    /// `||u||_{H^2} + ||v||_{H^1}`.
    pub fn e1_norm(&self) -> f64 {
        self.h2 + self.v_h1
    }
}

/// `(sum_k (1 + mu_k)^s |u_k|^2 vol)^{1/2}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> Result<f64> {
    if !(0.0..=3.0).contains(&s) {
        return Err(Error::param(format!("Sobolev index {s} outside [0, 3]")));
    }
    Ok(u.weighted_inner(u, |mu| (1.0 + mu).powf(s))?.sqrt())
}

fn sobolev_unchecked(u: &SpectralField, s: f64) -> f64 {
    u.weighted_inner(u, |mu| (1.0 + mu).powf(s)).expect("same field").sqrt()
}

/// `gamma ||(-Laplace)^{theta/2} v||^2`, with `0^0 = 1` as in the integrator.
pub fn damping_integrand(state: &SimState, params: &ModelParams) -> f64 {
    params.gamma
        * state
            .v
            .weighted_inner(&state.v, |mu| damping_multiplier(mu, params.theta))
            .expect("same field")
}

/// Samples of `u` on the 3x padded grid and that grid's cell volume.
fn padded_samples(u: &SpectralField, factor: usize) -> (Vec<f64>, f64) {
    let grid = u.grid();
    let t = grid.padded_transform(factor);
    (t.to_physical(u.coeffs()), t.cell_volume(grid.axis_length()))
}

fn potential_integral(params: &ModelParams, samples: &[f64], cell: f64) -> Result<f64> {
    if params.nonlinearity.is_zero() {
        return Ok(0.0);
    }
    Ok(params.nonlinearity.potential_sum(samples)? * cell)
}

fn energy_from(state: &SimState, params: &ModelParams, samples: &[f64], cell: f64) -> Result<f64> {
    let kinetic = 0.5 * state.v.weighted_inner(&state.v, |_| 1.0)?;
    let gradient = 0.5 * state.u.weighted_inner(&state.u, |mu| mu)?;
    let forcing = params.forcing.weighted_inner(&state.u, |_| 1.0)?;
    Ok(kinetic + gradient + potential_integral(params, samples, cell)? - forcing)
}

/// `E(u, v) = 1/2 ||v||^2 + 1/2 ||grad u||^2 + (F(u), 1) - (g, u)`.
pub fn energy(state: &SimState, params: &ModelParams) -> Result<f64> {
    state.u.ensure_same_grid(&params.forcing)?;
    let (samples, cell) = padded_samples(&state.u, 3);
    energy_from(state, params, &samples, cell)
}

/// `||u||_{H^1} + ||u||_{L^{q+2}} + ||v||_{L^2}`.
pub fn energy_space_norm(state: &SimState, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::param(format!("growth exponent {q} must be nonnegative")));
    }
    let (samples, cell) = padded_samples(&state.u, 3);
    Ok(energy_space_from(state, q, &samples, cell))
}

fn energy_space_from(state: &SimState, q: f64, samples: &[f64], cell: f64) -> f64 {
    sobolev_unchecked(&state.u, 1.0) + lp_norm(samples, q + 2.0, cell) + state.v.l2_norm()
}

/// Spatial `L^12` norm on the 2x padded grid.
pub fn l12_norm(u: &SpectralField) -> f64 {
    let (samples, cell) = padded_samples(u, 2);
    lp_norm(&samples, 12.0, cell)
}

/// `(v, A u) + gamma/2 ||A u||^2` with `A = (-Laplace)^{1/2}`.
pub fn lyapunov_quantity(state: &SimState, gamma: f64) -> Result<f64> {
    let cross = state.v.weighted_inner(&state.u, |mu| multiplier(mu, 0.5))?;
    let top = state.u.weighted_inner(&state.u, |mu| mu)?;
    Ok(cross + 0.5 * gamma * top)
}

/// `||A^{3/2} u||^2 + (P f(u), A u) - (g, A u) - ||A^{1/2} v||^2`, so that
/// `d/dt lyapunov_quantity = -lyapunov_rate` along Galerkin solutions.
pub fn lyapunov_rate(state: &SimState, stepper: &Stepper) -> Result<f64> {
    let params = stepper.params();
    let u = &state.u;
    let a = |mu: f64| multiplier(mu, 0.5);
    let pf = SpectralField::from_raw(u.grid().clone(), stepper.projected_nonlinearity(u)?);
    Ok(u.weighted_inner(u, |mu| mu * a(mu))? + pf.weighted_inner(u, a)?
        - params.forcing.weighted_inner(u, a)?
        - state.v.weighted_inner(&state.v, a)?)
}

/// Which optional quantities a [`DiagnosticsCollector`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsOptions {
    /// Spatial `L^12` norm (costs one 2x padded synthesis).
    pub l12: bool,
    /// Lyapunov quantity and rate; only meaningful for `theta = 1/2`.
    pub lyapunov: bool,
}

impl DiagnosticsOptions {
    pub fn full(params: &ModelParams) -> Self {
        DiagnosticsOptions {
            l12: true,
            lyapunov: params.theta == 0.5,
        }
    }

    pub fn light() -> Self {
        DiagnosticsOptions {
            l12: false,
            lyapunov: false,
        }
    }
}

/// Full diagnostics row for one state.
pub fn record(state: &SimState, stepper: &Stepper, opts: DiagnosticsOptions) -> Result<DiagnosticsRecord> {
    let params = stepper.params();
    let q = params.nonlinearity.growth_q();
    let (samples, cell) = padded_samples(&state.u, 3);
    let (l12, l12_refinement_delta) = if opts.l12 {
        let two = l12_norm(&state.u);
        (two, (lp_norm(&samples, 12.0, cell) - two).abs())
    } else {
        (f64::NAN, f64::NAN)
    };
    let (lyapunov_quantity, lyapunov_rate) = if opts.lyapunov {
        (
            Some(lyapunov_quantity(state, params.gamma)?),
            Some(self::lyapunov_rate(state, stepper)?),
        )
    } else {
        (None, None)
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        energy_e: energy_from(state, params, &samples, cell)?,
        energy_space_norm: energy_space_from(state, q, &samples, cell),
        h1: sobolev_unchecked(&state.u, 1.0),
        h32: sobolev_unchecked(&state.u, 1.5),
        h2: sobolev_unchecked(&state.u, 2.0),
        damping_integrand: damping_integrand(state, params),
        l12,
        lyapunov_quantity,
        lyapunov_rate,
        l12_refinement_delta,
        v_h1: sobolev_unchecked(&state.v, 1.0),
    })
}

/// Sink accumulating one [`DiagnosticsRecord`] per snapshot.
pub struct DiagnosticsCollector {
    pub options: DiagnosticsOptions,
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsCollector {
    pub fn new(options: DiagnosticsOptions) -> Self {
        DiagnosticsCollector {
            options,
            records: Vec::new(),
        }
    }
}

impl DiagnosticSink for DiagnosticsCollector {
    fn observe(&mut self, state: &SimState, stepper: &Stepper) -> Result<()> {
        self.records.push(record(state, stepper, self.options)?);
        Ok(())
    }
}

/// Per-interval identity residuals over a record series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Absolute residual on each interval between consecutive records.
    pub per_interval: Vec<f64>,
    /// Sum of `per_interval`.
    pub total: f64,
    /// `total` divided by the covered time span.
    pub per_unit_time: f64,
}

fn check_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::TooFewSnapshots {
            got: times.len(),
            need: 2,
        });
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return Err(Error::IrregularSpacing);
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
            return Err(Error::IrregularSpacing);
        }
    }
    Ok(h)
}

/// Integral over each interval of an equally spaced series of the degree-5
/// interpolant through the six nearest samples (one-sided near the ends).
/// Shorter series fall back to the cubic rule, then to the trapezoid rule.
pub(crate) fn interval_integrals(values: &[f64], h: f64) -> Vec<f64> {
    const EDGE: [f64; 6] = [475.0, 1427.0, -798.0, 482.0, -173.0, 27.0];
    const NEAR: [f64; 6] = [-27.0, 637.0, 1022.0, -258.0, 77.0, -11.0];
    const MID: [f64; 6] = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
    let n = values.len();
    let f = values;
    if n < 4 {
        return f.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).collect();
    }
    if n < 6 {
        let c = h / 24.0;
        return (0..n - 1)
            .map(|i| {
                if i == 0 {
                    c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
                } else if i == n - 2 {
                    c * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
                } else {
                    c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
                }
            })
            .collect();
    }
    let dot = |w: &[f64; 6], x: &mut dyn Iterator<Item = f64>| -> f64 {
        h / 1440.0 * w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    };
    (0..n - 1)
        .map(|i| match i {
            0 => dot(&EDGE, &mut f[..6].iter().copied()),
            1 => dot(&NEAR, &mut f[..6].iter().copied()),
            _ if i == n - 2 => dot(&EDGE, &mut f[n - 6..].iter().rev().copied()),
            _ if i == n - 3 => dot(&NEAR, &mut f[n - 6..].iter().rev().copied()),
            _ => dot(&MID, &mut f[i - 2..i + 4].iter().copied()),
        })
        .collect()
}

fn residuals(times: &[f64], quantity: &[f64], rate: &[f64]) -> Result<ResidualReport> {
    let h = check_spacing(times)?;
    let integrals = interval_integrals(rate, h);
    let per_interval: Vec<f64> = quantity
        .windows(2)
        .zip(&integrals)
        .map(|(w, i)| (w[1] - w[0] + i).abs())
        .collect();
    let total: f64 = per_interval.iter().sum();
    let span = times[times.len() - 1] - times[0];
    Ok(ResidualReport {
        per_interval,
        total,
        per_unit_time: total / span,
    })
}

/// `|E(t2) - E(t1) + int_{t1}^{t2} gamma ||(-Laplace)^{theta/2} v||^2 dt|` per
/// interval. The time integral is sixth order in the record spacing, so it
/// does not mask the second-order splitting error.
pub fn energy_identity_residual(records: &[DiagnosticsRecord]) -> Result<ResidualReport> {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let e: Vec<f64> = records.iter().map(|r| r.energy_e).collect();
    let d: Vec<f64> = records.iter().map(|r| r.damping_integrand).collect();
    residuals(&t, &e, &d)
}

/// Integrated residual of the identity obtained by testing the equation with
/// `(-Laplace)^{1/2} u`; requires `theta = 1/2` records.
pub fn lyapunov_identity_residual(records: &[DiagnosticsRecord], params: &ModelParams) -> Result<ResidualReport> {
    if params.theta != 0.5 {
        return Err(Error::param(format!(
            "the Lyapunov identity needs theta = 1/2, got {}",
            params.theta
        )));
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let missing = || Error::param("records lack Lyapunov quantities");
    let l = records
        .iter()
        .map(|r| r.lyapunov_quantity.ok_or_else(missing))
        .collect::<Result<Vec<_>>>()?;
    let rate = records
        .iter()
        .map(|r| r.lyapunov_rate.ok_or_else(missing))
        .collect::<Result<Vec<_>>>()?;
    residuals(&t, &l, &rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WindowKind {
    #[serde(rename = "L2_H32")]
    L2H32,
    #[serde(rename = "L4_L12")]
    L4L12,
    #[serde(rename = "L2_damping")]
    L2Damping,
}

impl WindowKind {
    pub fn label(self) -> &'static str {
        match self {
            WindowKind::L2H32 => "L2_H32",
            WindowKind::L4L12 => "L4_L12",
            WindowKind::L2Damping => "L2_damping",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowNorm {
    pub t_start: f64,
    pub t_end: f64,
    pub value: f64,
    pub kind: WindowKind,
}

/// Minimum number of snapshots inside a window.
pub const MIN_WINDOW_SNAPSHOTS: usize = 9;

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Time-integrated window norm from per-snapshot spatial norms:
/// `(int ||.||^p dt)^{1/p}` with `p = 4` for `L4_L12` and `p = 2` otherwise.
/// For `L2_damping` the samples are the damping integrand itself and the
/// value is its plain integral.
pub fn window_norm(kind: WindowKind, times: &[f64], spatial: &[f64]) -> Result<WindowNorm> {
    if times.len() < MIN_WINDOW_SNAPSHOTS || spatial.len() != times.len() {
        return Err(Error::TooFewSnapshots {
            got: times.len().min(spatial.len()),
            need: MIN_WINDOW_SNAPSHOTS,
        });
    }
    let value = match kind {
        WindowKind::L4L12 => {
            let p: Vec<f64> = spatial.iter().map(|x| x.powi(4)).collect();
            trapezoid(times, &p).powf(0.25)
        }
        WindowKind::L2H32 => {
            let p: Vec<f64> = spatial.iter().map(|x| x * x).collect();
            trapezoid(times, &p).sqrt()
        }
        WindowKind::L2Damping => trapezoid(times, spatial),
    };
    Ok(WindowNorm {
        t_start: times[0],
        t_end: times[times.len() - 1],
        value,
        kind,
    })
}

/// `||u||_{L^4(t, t+1; L^12)}` from snapshots spanning the window.
pub fn strichartz_window_norm(snapshots: &[SimState]) -> Result<WindowNorm> {
    let t: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let n: Vec<f64> = snapshots.iter().map(|s| l12_norm(&s.u)).collect();
    window_norm(WindowKind::L4L12, &t, &n)
}

/// `||u||_{L^2(t, t+1; H^{3/2})}` from snapshots spanning the window.
pub fn h32_window_norm(snapshots: &[SimState]) -> Result<WindowNorm> {
    let t: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let n: Vec<f64> = snapshots.iter().map(|s| sobolev_unchecked(&s.u, 1.5)).collect();
    window_norm(WindowKind::L2H32, &t, &n)
}

/// Window norms over every unit window `[t_i, t_i + 1]` starting at a record
/// time, for equally spaced records.
pub fn sliding_windows(records: &[DiagnosticsRecord], kind: WindowKind) -> Result<Vec<WindowNorm>> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let h = check_spacing(&times)?;
    let per_unit = (1.0 / h).round() as usize;
    if ((per_unit as f64) * h - 1.0).abs() > 1e-9 || per_unit + 1 < MIN_WINDOW_SNAPSHOTS {
        return Err(Error::param(format!(
            "record spacing {h} must divide 1 into at least {} intervals",
            MIN_WINDOW_SNAPSHOTS - 1
        )));
    }
    let spatial: Vec<f64> = records
        .iter()
        .map(|r| match kind {
            WindowKind::L2H32 => r.h32,
            WindowKind::L4L12 => r.l12,
            WindowKind::L2Damping => r.damping_integrand,
        })
        .collect();
    (0..records.len().saturating_sub(per_unit))
        .map(|i| window_norm(kind, &times[i..=i + per_unit], &spatial[i..=i + per_unit]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{run, IntegratorConfig};
    use crate::nonlinearity::NonlinearitySpec;
    use crate::spectral::{make_grid, seeded_field, Basis, Complex64, Grid};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cos_x(g: &Arc<Grid>) -> SpectralField {
        let mut u = SpectralField::zeros(g.clone());
        u.set_real_mode(&[1, 0, 0][..g.dim()], Complex64::new(0.5, 0.0))
            .unwrap();
        u
    }

    fn vol3() -> f64 {
        (2.0 * PI).powi(3)
    }

    #[test]
    fn energy_of_cosine_with_cubic() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let s = SimState::new(0.0, cos_x(&g), SpectralField::zeros(g.clone())).unwrap();
        let p = ModelParams::unforced(g.clone(), 1.0, 0.5, NonlinearitySpec::Cubic { a: 1.0 });
        let e = energy(&s, &p).unwrap();
        assert!((e - 11.0 / 32.0 * vol3()).abs() < 1e-12 * vol3());
        assert!((e - 85.26726087082449).abs() < 1e-9);
        let z = SimState::zeros(g.clone());
        assert_eq!(energy(&z, &p).unwrap(), 0.0);
    }

    #[test]
    fn kinetic_term_scales_quadratically() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let p = ModelParams::unforced(g.clone(), 1.0, 0.5, NonlinearitySpec::Quintic { a: 1.0 });
        let u = seeded_field(&g, 1, 3).unwrap().scaled(0.1);
        let v = seeded_field(&g, 2, 3).unwrap();
        let e0 = energy(
            &SimState::new(0.0, u.clone(), SpectralField::zeros(g.clone())).unwrap(),
            &p,
        )
        .unwrap();
        let e1 = energy(&SimState::new(0.0, u.clone(), v.clone()).unwrap(), &p).unwrap();
        let e2 = energy(&SimState::new(0.0, u, v.scaled(2.0)).unwrap(), &p).unwrap();
        assert!(((e2 - e0) - 4.0 * (e1 - e0)).abs() < 1e-12 * e2.abs());
    }

    #[test]
    fn energy_space_norm_examples() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        assert_eq!(energy_space_norm(&SimState::zeros(g.clone()), 4.0).unwrap(), 0.0);
        let s = SimState::new(0.0, cos_x(&g), SpectralField::zeros(g.clone())).unwrap();
        let l6 = (5.0 / 16.0 * vol3()).powf(1.0 / 6.0);
        assert!((l6 - 2.0648).abs() < 1e-4);
        let h1 = vol3().sqrt();
        assert!((energy_space_norm(&s, 4.0).unwrap() - (h1 + l6)).abs() < 1e-12);
        // Translation invariance.
        let mut shifted = s.clone();
        for (idx, c) in shifted.u.coeffs_mut().iter_mut().enumerate() {
            let k = g.wavevector(idx);
            *c *= Complex64::from_polar(1.0, 0.7 * k[0] as f64 - 0.2 * k[1] as f64);
        }
        let a = energy_space_norm(&s, 4.0).unwrap();
        let b = energy_space_norm(&shifted, 4.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn sobolev_examples() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let u = cos_x(&g);
        assert!((sobolev_norm(&u, 0.0).unwrap() - u.l2_norm()).abs() < 1e-14);
        assert!((sobolev_norm(&u, 1.0).unwrap() - vol3().sqrt()).abs() < 1e-12);
        let r = seeded_field(&g, 4, 3).unwrap();
        let mut prev = 0.0;
        for s in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let n = sobolev_norm(&r, s).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        assert!(sobolev_norm(&r, 3.5).is_err());
        let h1 = sobolev_norm(&r, 1.0).unwrap();
        assert!(h1 * h1 >= r.weighted_inner(&r, |mu| mu).unwrap());
    }

    #[test]
    fn window_norm_examples() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let mut one = SpectralField::zeros(g.clone());
        one.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
        let snaps: Vec<SimState> = (0..=10)
            .map(|i| SimState::new(i as f64 * 0.1, one.clone(), SpectralField::zeros(g.clone())).unwrap())
            .collect();
        let w = strichartz_window_norm(&snaps).unwrap();
        assert!((w.value - vol3().powf(1.0 / 12.0)).abs() < 1e-12);
        assert!((w.value - 1.583).abs() < 1e-3);
        let zero: Vec<SimState> = snaps
            .iter()
            .map(|s| SimState {
                u: s.u.scaled(0.0),
                ..s.clone()
            })
            .collect();
        assert_eq!(strichartz_window_norm(&zero).unwrap().value, 0.0);
        let two: Vec<SimState> = snaps
            .iter()
            .map(|s| SimState {
                u: s.u.scaled(2.0),
                ..s.clone()
            })
            .collect();
        assert!((strichartz_window_norm(&two).unwrap().value - 2.0 * w.value).abs() < 1e-12);

        let c: Vec<SimState> = snaps
            .iter()
            .map(|s| SimState {
                u: cos_x(&g),
                ..s.clone()
            })
            .collect();
        let w = h32_window_norm(&c).unwrap();
        let expect = (2f64.powf(1.5) * vol3() / 2.0).sqrt();
        assert!((w.value - expect).abs() < 1e-12 * expect);
        assert!(matches!(h32_window_norm(&c[..5]), Err(Error::TooFewSnapshots { .. })));
    }

    #[test]
    fn interval_rules_are_exact_for_polynomials() {
        let h = 0.1;
        // degree 5 for the long rule, degree 3 for the short fallback
        let f5 = |t: f64| 2.0 - t + 3.0 * t * t - 0.7 * t.powi(3) + 0.4 * t.powi(4) - 1.1 * t.powi(5);
        let p5 =
            |t: f64| 2.0 * t - 0.5 * t * t + t.powi(3) - 0.175 * t.powi(4) + 0.08 * t.powi(5) - 1.1 / 6.0 * t.powi(6);
        let f3 = |t: f64| 2.0 - t + 3.0 * t * t - 0.7 * t.powi(3);
        let p3 = |t: f64| 2.0 * t - 0.5 * t * t + t.powi(3) - 0.175 * t.powi(4);
        type Poly = fn(f64) -> f64;
        let cases: [(usize, Poly, Poly); 4] = [(6, f5, p5), (11, f5, p5), (4, f3, p3), (5, f3, p3)];
        for (n, f, big_f) in cases {
            let vals: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
            let ints = interval_integrals(&vals, h);
            assert_eq!(ints.len(), n - 1);
            for (i, v) in ints.iter().enumerate() {
                let exact = big_f((i + 1) as f64 * h) - big_f(i as f64 * h);
                assert!((v - exact).abs() < 1e-14, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn irregular_spacing_rejected() {
        let mk = |t: f64| DiagnosticsRecord {
            t,
            energy_e: 0.0,
            energy_space_norm: 0.0,
            h1: 0.0,
            h32: 0.0,
            h2: 0.0,
            damping_integrand: 0.0,
            l12: 0.0,
            lyapunov_quantity: None,
            lyapunov_rate: None,
            l12_refinement_delta: 0.0,
            v_h1: 0.0,
        };
        let recs = vec![mk(0.0), mk(0.1), mk(0.3)];
        assert!(matches!(energy_identity_residual(&recs), Err(Error::IrregularSpacing)));
    }

    #[test]
    fn identities_hold_on_linear_runs() {
        let g = make_grid(3, 8, Basis::TorusExponential).unwrap();
        let u = seeded_field(&g, 3, 3).unwrap();
        let u = u.scaled(1.0 / sobolev_norm(&u, 1.0).unwrap());
        let s0 = SimState::new(0.0, u, SpectralField::zeros(g.clone())).unwrap();
        let p = ModelParams::unforced(g.clone(), 1.0, 0.5, NonlinearitySpec::Zero);
        let mut col = DiagnosticsCollector::new(DiagnosticsOptions::full(&p));
        run(
            &s0,
            &p,
            &IntegratorConfig::new(1e-3, 1.0).with_stride(1),
            &mut [&mut col],
        )
        .unwrap();
        let e = energy_identity_residual(&col.records).unwrap();
        let l = lyapunov_identity_residual(&col.records, &p).unwrap();
        assert!(e.per_unit_time < 1e-8, "{}", e.per_unit_time);
        assert!(l.per_unit_time < 1e-8, "{}", l.per_unit_time);
        let z = SimState::zeros(g.clone());
        let mut col = DiagnosticsCollector::new(DiagnosticsOptions::full(&p));
        run(&z, &p, &IntegratorConfig::new(0.1, 1.0), &mut [&mut col]).unwrap();
        assert_eq!(lyapunov_identity_residual(&col.records, &p).unwrap().total, 0.0);
        let p0 = ModelParams { theta: 0.0, ..p };
        assert!(lyapunov_identity_residual(&col.records, &p0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn norms_are_homogeneous(seed in 0u64..500, c in -3.0f64..3.0) {
            let g = make_grid(2, 16, Basis::TorusExponential).unwrap();
            let u = seeded_field(&g, seed, 4).unwrap();
            let cu = u.scaled(c);
            for s in [0.0, 1.0, 1.5, 2.0] {
                let a = sobolev_norm(&cu, s).unwrap();
                let b = c.abs() * sobolev_norm(&u, s).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
            }
            let a = l12_norm(&cu);
            let b = c.abs() * l12_norm(&u);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
