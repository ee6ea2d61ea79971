//! Time stepping by Strang splitting: exact per-mode propagation of the linear
//! damped-wave block around an explicit nonlinear kick.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BlowUp, Error, Result};
use crate::linear::damping_multiplier;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{Basis, Complex64, Grid, SpectralField, Transform};

/// Coefficients above this magnitude abort a run.
pub const BLOW_UP_THRESHOLD: f64 = 1e30;

/// The pair `(u, u_t)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
}

impl SimState {
    pub fn new(t: f64, u: SpectralField, v: SpectralField) -> Result<Self> {
        u.ensure_same_grid(&v)?;
        let s = SimState { t, u, v };
        s.validate()?;
        Ok(s)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        SimState {
            t: 0.0,
            u: SpectralField::zeros(grid.clone()),
            v: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.u.ensure_same_grid(&self.v)?;
        if !self.t.is_finite() || !self.u.is_finite() || !self.v.is_finite() {
            return Err(Error::param("state contains non-finite values"));
        }
        self.u.check_symmetry()?;
        self.v.check_symmetry()
    }

    fn max_abs(&self) -> f64 {
        let m = self.u.max_abs().max(self.v.max_abs());
        if self.u.is_finite() && self.v.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub theta: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Time-independent forcing `g`.
    pub forcing: SpectralField,
}

impl ModelParams {
    /// Unforced problem on `grid`.
    pub fn unforced(grid: Arc<Grid>, gamma: f64, theta: f64, nonlinearity: NonlinearitySpec) -> Self {
        ModelParams {
            gamma,
            theta,
            nonlinearity,
            forcing: SpectralField::zeros(grid),
        }
    }

    /// `gamma = 0` is accepted here for conservative test runs; configuration
    /// files require `gamma > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("gamma = {} must be nonnegative", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::param(format!("theta = {} outside [0, 1]", self.theta)));
        }
        self.nonlinearity.validate()?;
        if !self.forcing.is_finite() {
            return Err(Error::param("forcing has non-finite coefficients"));
        }
        self.forcing.check_symmetry()?;
        let grid = self.forcing.grid();
        if grid.is_torus() && self.theta > 0.0 {
            let mean = self.forcing.mean().abs();
            if mean > 1e-14 * self.forcing.max_abs().max(1.0) {
                return Err(Error::param(format!(
                    "theta > 0 leaves the mean mode undamped: forcing must have zero mean (mean = {mean:e})"
                )));
            }
        }
        if grid.basis() == Basis::DirichletSine && !self.nonlinearity.is_odd() {
            return Err(Error::param("the Dirichlet basis requires an odd nonlinearity"));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.forcing.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    /// Keep `|k_i| <= n/3` on input and output; approximate for quintic `f`.
    TwoThirds,
    /// Evaluate `f(u)` on a 3x zero-padded grid; exact for quintic powers.
    #[default]
    ZeroPadTriple,
    /// Collocation on the grid itself.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default)]
    pub dealias: Dealias,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            dt,
            dealias: Dealias::ZeroPadTriple,
            t_end,
            snapshot_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_dealias(mut self, dealias: Dealias) -> Self {
        self.dealias = dealias;
        self
    }

    /// Number of steps covering `[0, t_end]`; `t_end` must be a whole
    /// number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride must be at least 1"));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::param(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Exact `exp(t [[0, 1], [-mu, -gamma mu^theta]])` as `[m11, m12, m21, m22]`.
pub fn linear_propagator(mu: f64, gamma: f64, theta: f64, dt: f64) -> [[f64; 2]; 2] {
    let m = propagator(mu, gamma * damping_multiplier(mu, theta), dt);
    [[m[0], m[1]], [m[2], m[3]]]
}

/// `exp(t A)` for `A = [[0, 1], [-mu, -b]]`.
///
/// With `a = -b/2` and `delta = b^2/4 - mu`,
/// `exp(tA) = e^{at} [[C - a S, S], [-mu S, C + a S]]` where `C` and `S` are
/// the even and odd parts of `e^{sqrt(delta) t}` (`S` divided by
/// `sqrt(delta)`). Near the repeated root both are summed as series in
/// `delta t^2`, which makes the degenerate case a regular point; strongly
/// overdamped modes use the root form to avoid `e^{at} cosh` overflow.
pub(crate) fn propagator(mu: f64, b: f64, t: f64) -> [f64; 4] {
    let a = -0.5 * b;
    let delta = 0.25 * crate::linear::discriminant(mu, b);
    let z = delta * t * t;
    if z.abs() <= 1.0 {
        let (mut c, mut s) = (0.0, 0.0);
        let mut term_c = 1.0;
        let mut term_s = 1.0;
        for k in 0..30 {
            c += term_c;
            s += term_s;
            let k2 = 2.0 * k as f64;
            term_c *= z / ((k2 + 1.0) * (k2 + 2.0));
            term_s *= z / ((k2 + 2.0) * (k2 + 3.0));
            if term_c.abs() < 1e-18 * c.abs() && term_s.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        s *= t;
        let e = (a * t).exp();
        return [e * (c - a * s), e * s, -mu * e * s, e * (c + a * s)];
    }
    if delta > 0.0 {
        let r = delta.sqrt();
        let lm = a - r;
        let lp = mu / lm;
        let (ep, em) = ((lp * t).exp(), (lm * t).exp());
        let d = 2.0 * r;
        let m12 = (ep - em) / d;
        return [(lp * em - lm * ep) / d, m12, -mu * m12, (lp * ep - lm * em) / d];
    }
    let w = (-delta).sqrt();
    let (sn, cs) = (w * t).sin_cos();
    let s = sn / w;
    let e = (a * t).exp();
    [e * (cs - a * s), e * s, -mu * e * s, e * (cs + a * s)]
}

/// Reusable stepping machinery for one grid, parameter set and time step.
pub struct Stepper {
    grid: Arc<Grid>,
    params: ModelParams,
    dt: f64,
    dealias: Dealias,
    /// Half-step propagator per mode.
    half: Vec<[f64; 4]>,
    /// Modes retained by the nonlinear kick.
    kick_mask: Vec<bool>,
    eval: Arc<Transform>,
}

impl Stepper {
    pub fn new(params: &ModelParams, dt: f64, dealias: Dealias) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param(format!("dt = {dt} must be positive")));
        }
        let grid = params.grid().clone();
        let b = |mu: f64| params.gamma * damping_multiplier(mu, params.theta);
        let half = grid.mu().iter().map(|&mu| propagator(mu, b(mu), 0.5 * dt)).collect();
        let n = grid.n_per_axis();
        let kick_mask = (0..grid.len())
            .map(|idx| {
                if grid.is_nyquist(idx) {
                    return false;
                }
                match dealias {
                    Dealias::TwoThirds => {
                        let k = grid.wavevector(idx);
                        k[..grid.dim()].iter().all(|&x| 3 * x.unsigned_abs() as usize <= n)
                    }
                    _ => true,
                }
            })
            .collect();
        let eval = match dealias {
            Dealias::ZeroPadTriple => grid.padded_transform(3),
            _ => Arc::new(Transform::new(grid.dim(), n, grid.basis(), n)),
        };
        Ok(Stepper {
            grid,
            params: params.clone(),
            dt,
            dealias,
            half,
            kick_mask,
            eval,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn apply_half(&self, state: &mut SimState) {
        let u = state.u.coeffs_mut();
        let v = state.v.coeffs_mut();
        for ((m, cu), cv) in self.half.iter().zip(u.iter_mut()).zip(v.iter_mut()) {
            let (a, b) = (*cu, *cv);
            *cu = a * m[0] + b * m[1];
            *cv = a * m[2] + b * m[3];
        }
    }

    /// Galerkin projection of `f(u)` under the configured dealiasing.
    pub fn projected_nonlinearity(&self, u: &SpectralField) -> Result<Vec<Complex64>> {
        if self.params.nonlinearity.is_zero() {
            return Ok(vec![Complex64::new(0.0, 0.0); u.coeffs().len()]);
        }
        let input: Vec<Complex64> = match self.dealias {
            Dealias::TwoThirds => u
                .coeffs()
                .iter()
                .zip(&self.kick_mask)
                .map(|(&c, &keep)| if keep { c } else { Complex64::new(0.0, 0.0) })
                .collect(),
            _ => u.coeffs().to_vec(),
        };
        let mut values = self.eval.to_physical(&input);
        self.params.nonlinearity.apply_in_place(&mut values)?;
        let mut out = self.eval.to_spectral(&values);
        for (c, &keep) in out.iter_mut().zip(&self.kick_mask) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let mut s = SpectralField::from_raw(self.grid.clone(), out);
        s.enforce_reality();
        Ok(s.into_coeffs())
    }

    fn kick(&self, state: &mut SimState) -> Result<()> {
        let g = self.params.forcing.coeffs();
        let fu = self.projected_nonlinearity(&state.u)?;
        let dt = self.dt;
        for ((v, &gk), &fk) in state.v.coeffs_mut().iter_mut().zip(g).zip(&fu) {
            *v += (gk - fk) * dt;
        }
        Ok(())
    }

    /// One Strang step `L(dt/2) N(dt) L(dt/2)`, in place. On blow-up the
    /// state is left at its last finite value.
    pub fn advance(&self, state: &mut SimState) -> Result<()> {
        let before = state.clone();
        self.apply_half(state);
        self.kick(state)?;
        self.apply_half(state);
        state.t = before.t + self.dt;
        let max = state.max_abs();
        if !(max <= BLOW_UP_THRESHOLD) {
            let t = state.t;
            *state = before.clone();
            return Err(Error::BlowUp(Box::new(BlowUp {
                t,
                max_coeff: max,
                last_finite: before,
            })));
        }
        Ok(())
    }
}

/// `dt` bound `0.5 / (1 + sup |f'(u)|)` with the supremum taken over the
/// 3x padded samples of `u`.
pub fn stable_dt(state: &SimState, nonlinearity: &NonlinearitySpec) -> Result<f64> {
    if nonlinearity.is_zero() {
        return Ok(0.5);
    }
    let grid = state.grid();
    let values = grid.padded_transform(3).to_physical(state.u.coeffs());
    let mut sup = 0.0_f64;
    for v in values {
        sup = sup.max(nonlinearity.df(v)?.abs());
    }
    Ok(0.5 / (1.0 + sup))
}

pub fn step(state: &SimState, params: &ModelParams, cfg: &IntegratorConfig) -> Result<SimState> {
    let stepper = Stepper::new(params, cfg.dt, cfg.dealias)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Receives the state at every snapshot, in time order.
pub trait DiagnosticSink {
    fn observe(&mut self, state: &SimState, stepper: &Stepper) -> Result<()>;
}

/// Writes one progress line per snapshot to standard error.
pub struct Progress {
    pub label: String,
}

impl DiagnosticSink for Progress {
    fn observe(&mut self, state: &SimState, _: &Stepper) -> Result<()> {
        let norm = (state.u.l2_norm().powi(2) + state.v.l2_norm().powi(2)).sqrt();
        let mut err = std::io::stderr().lock();
        writeln!(err, "{} t = {:.6} |(u, v)|_L2 = {:.6e}", self.label, state.t, norm)?;
        Ok(())
    }
}

/// Collects snapshots of the state.
#[derive(Default)]
pub struct StateRecorder {
    pub states: Vec<SimState>,
}

impl DiagnosticSink for StateRecorder {
    fn observe(&mut self, state: &SimState, _: &Stepper) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

/// Advances `initial` by `cfg.t_end`, calling every sink at the start and
/// after every `snapshot_stride` steps (and at the final step).
///
/// The stability rule is checked against the initial data; blow-up aborts
/// with the last finite state attached to the error.
pub fn run(
    initial: &SimState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    sinks: &mut [&mut dyn DiagnosticSink],
) -> Result<SimState> {
    initial.validate()?;
    if !initial.grid().same_as(params.grid()) {
        return Err(Error::GridMismatch);
    }
    let steps = cfg.steps()?;
    let stepper = Stepper::new(params, cfg.dt, cfg.dealias)?;
    run_with(&stepper, initial, steps, cfg.snapshot_stride, sinks)
}

/// As [`run`] with a prepared stepper and an explicit step count.
pub fn run_with(
    stepper: &Stepper,
    initial: &SimState,
    steps: usize,
    stride: usize,
    sinks: &mut [&mut dyn DiagnosticSink],
) -> Result<SimState> {
    if stride == 0 {
        return Err(Error::param("snapshot_stride must be at least 1"));
    }
    if steps > 0 {
        let bound = stable_dt(initial, &stepper.params.nonlinearity)?;
        if stepper.dt > bound {
            return Err(Error::UnstableTimeStep { dt: stepper.dt, bound });
        }
    }
    let mut state = initial.clone();
    for sink in sinks.iter_mut() {
        sink.observe(&state, stepper)?;
    }
    let t0 = initial.t;
    for i in 1..=steps {
        stepper.advance(&mut state)?;
        state.t = t0 + i as f64 * stepper.dt;
        if i % stride == 0 || i == steps {
            for sink in sinks.iter_mut() {
                sink.observe(&state, stepper)?;
            }
        }
    }
    Ok(state)
}
