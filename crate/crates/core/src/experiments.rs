//! Scripted numerical studies: dissipativity sweeps, attractor tails,
//! Strichartz window histories, separation of nearby trajectories and
//! Galerkin self-convergence.
//!
//! Every study is a deterministic function of its [`ExperimentSpec`]:
//! trajectories run one after another in a fixed order.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    energy_space_norm, sliding_windows, DiagnosticsCollector, DiagnosticsOptions, DiagnosticsRecord, WindowKind,
    WindowNorm,
};
use crate::error::{Error, Result};
use crate::integrator::{run_with, stable_dt, Dealias, ModelParams, SimState, Stepper};
use crate::linear::mode_eigenvalues;
use crate::nonlinearity::{verify_growth, NonlinearitySpec};
use crate::spectral::{make_grid, seeded_field, seeded_field_with, Basis, Complex64, Grid, SpectralField};

/// Wavenumber bound of the initial-data ensemble.
pub const DATA_BAND: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dissipativity,
    GalerkinConvergence,
    AttractorRegularity,
    StrichartzProbe,
    SeparationProbe,
}

impl ExperimentKind {
    /// Kinds that make statements about long-time behaviour.
    pub fn is_asymptotic(self) -> bool {
        matches!(
            self,
            ExperimentKind::Dissipativity | ExperimentKind::AttractorRegularity | ExperimentKind::StrichartzProbe
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    /// Data emitted without a pass criterion.
    Reported,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub params: ModelParams,
    pub grid: Arc<Grid>,
    pub seeds: Vec<u64>,
    pub amplitudes: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub dealias: Dealias,
    /// Time between diagnostics records; a multiple of `dt` dividing 1.
    pub record_spacing: f64,
}

impl ExperimentSpec {
    pub fn new(
        kind: ExperimentKind,
        params: ModelParams,
        seeds: Vec<u64>,
        amplitudes: Vec<f64>,
        horizon: f64,
        dt: f64,
    ) -> Self {
        ExperimentSpec {
            kind,
            grid: params.grid().clone(),
            params,
            seeds,
            amplitudes,
            horizon,
            dt,
            dealias: Dealias::ZeroPadTriple,
            record_spacing: dt,
        }
    }

    pub fn with_record_spacing(mut self, spacing: f64) -> Self {
        self.record_spacing = spacing;
        self
    }

    pub fn with_dealias(mut self, dealias: Dealias) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.grid.same_as(self.params.grid()) {
            return Err(Error::GridMismatch);
        }
        if self.kind.is_asymptotic() && !(self.horizon >= 10.0) {
            return Err(Error::param(format!("horizon {} must be at least 10", self.horizon)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param(format!("horizon {} must be positive", self.horizon)));
        }
        if self.seeds.is_empty() {
            return Err(Error::param("at least one seed is required"));
        }
        if self.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::param("amplitudes must be finite and nonnegative"));
        }
        if self.kind == ExperimentKind::Dissipativity && self.amplitudes.len() < 3 {
            return Err(Error::param("a dissipativity sweep needs at least 3 amplitudes"));
        }
        self.steps()?;
        self.stride()?;
        Ok(())
    }

    fn steps(&self) -> Result<usize> {
        whole_multiple(self.horizon, self.dt, "horizon")
    }

    fn stride(&self) -> Result<usize> {
        whole_multiple(self.record_spacing, self.dt, "record_spacing")
    }

    fn amplitude_list(&self) -> Vec<f64> {
        if self.amplitudes.is_empty() {
            vec![1.0]
        } else {
            self.amplitudes.clone()
        }
    }

    pub fn echo(&self) -> SpecEcho {
        SpecEcho {
            kind: self.kind,
            dim: self.grid.dim(),
            n_per_axis: self.grid.n_per_axis(),
            basis: self.grid.basis(),
            gamma: self.params.gamma,
            theta: self.params.theta,
            nonlinearity: self.params.nonlinearity.clone(),
            forcing_l2: self.params.forcing.l2_norm(),
            seeds: self.seeds.clone(),
            amplitudes: self.amplitudes.clone(),
            horizon: self.horizon,
            dt: self.dt,
            dealias: self.dealias,
            record_spacing: self.record_spacing,
        }
    }
}

fn whole_multiple(total: f64, dt: f64, what: &str) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("dt = {dt} must be positive")));
    }
    let n = (total / dt).round();
    if n < 1.0 || (n * dt - total).abs() > 1e-9 * total.max(dt) {
        return Err(Error::param(format!(
            "{what} = {total} is not a whole number of steps dt = {dt}"
        )));
    }
    Ok(n as usize)
}

/// Serializable summary of an [`ExperimentSpec`] for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecEcho {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub n_per_axis: usize,
    pub basis: Basis,
    pub gamma: f64,
    pub theta: f64,
    pub nonlinearity: NonlinearitySpec,
    pub forcing_l2: f64,
    pub seeds: Vec<u64>,
    pub amplitudes: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub dealias: Dealias,
    pub record_spacing: f64,
}

/// Random smooth `(u, v)` on `|k| <= 4` with energy-space norm `amplitude`.
pub fn initial_data(grid: &Arc<Grid>, seed: u64, amplitude: f64, q: f64) -> Result<SimState> {
    let limit = match grid.basis() {
        Basis::TorusExponential => (grid.n_per_axis() / 2).saturating_sub(1),
        Basis::DirichletSine => grid.n_per_axis(),
    } as u32;
    let band = DATA_BAND.min(limit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = seeded_field_with(grid, &mut rng, band)?;
    let v = seeded_field_with(grid, &mut rng, band)?;
    let unit = SimState::new(0.0, u, v)?;
    let norm = energy_space_norm(&unit, q)?;
    if norm == 0.0 {
        return Err(Error::param("grid too coarse for the initial-data band"));
    }
    let s = amplitude / norm;
    SimState::new(0.0, unit.u.scaled(s), unit.v.scaled(s))
}

/// Seeded smooth forcing with `||g||_{L^2} = norm` (zero mean on the torus).
pub fn seeded_forcing(grid: &Arc<Grid>, seed: u64, band: u32, norm: f64) -> Result<SpectralField> {
    let g = seeded_field(grid, seed, band)?;
    let l2 = g.l2_norm();
    if l2 == 0.0 {
        return Ok(g);
    }
    Ok(g.scaled(norm / l2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUpInfo {
    pub seed: u64,
    pub amplitude: f64,
    pub t: f64,
    pub max_coeff: f64,
}

enum Outcome<T> {
    Done(T),
    BlownUp(BlowUpInfo),
}

fn collect_records(
    spec: &ExperimentSpec,
    stepper: &Stepper,
    initial: &SimState,
    opts: DiagnosticsOptions,
    seed: u64,
    amplitude: f64,
) -> Result<Outcome<Vec<DiagnosticsRecord>>> {
    let mut col = DiagnosticsCollector::new(opts);
    match run_with(stepper, initial, spec.steps()?, spec.stride()?, &mut [&mut col]) {
        Ok(_) => Ok(Outcome::Done(col.records)),
        Err(Error::BlowUp(b)) => Ok(Outcome::BlownUp(BlowUpInfo {
            seed,
            amplitude,
            t: b.t,
            max_coeff: b.max_coeff,
        })),
        Err(e) => Err(e),
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `y` against `x` and its standard error.
fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let stderr = (sse / (n - 2) as f64 / sxx).sqrt();
    Some((slope, stderr))
}

fn relative_spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

/// Earliest record time after which `values` stay at or below `level`.
fn entry_time(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let last_above = values.iter().rposition(|v| !(*v <= level));
    match last_above {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

fn tail_start(times: &[f64]) -> usize {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let mid = 0.5 * (t0 + t1);
    times.iter().position(|&t| t >= mid - 1e-12).unwrap_or(0)
}

/// Exponential rate fitted on the part of the decay between 10% and 90% of
/// the way from the initial value to `floor`.
fn fit_decay_rate(times: &[f64], norms: &[f64], floor: f64) -> Option<f64> {
    let n0 = norms[0];
    let drop = n0 - floor;
    if !(drop > 0.0) {
        return None;
    }
    let frac = |n: f64| (n0 - n) / drop;
    let start = norms.iter().position(|&n| frac(n) >= 0.1)?;
    let end = norms[start..]
        .iter()
        .position(|&n| frac(n) > 0.9)
        .map_or(norms.len(), |i| start + i);
    let (x, y): (Vec<f64>, Vec<f64>) = (start..end)
        .filter(|&i| norms[i] > floor)
        .map(|i| (times[i], (norms[i] - floor).ln()))
        .unzip();
    fit_line(&x, &y).map(|(s, _)| -s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub seed: u64,
    pub amplitude: f64,
    pub times: Vec<f64>,
    pub energy_space_norm: Vec<f64>,
    pub tail_median: f64,
    pub entered_ball_time: Option<f64>,
    pub alpha: Option<f64>,
    pub damping_windows: Vec<WindowNorm>,
    pub h32_windows: Vec<WindowNorm>,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityReport {
    pub spec: SpecEcho,
    pub trajectories: Vec<DecayCurve>,
    /// Median of the per-trajectory fitted rates.
    pub alpha: Option<f64>,
    /// Twice the long-run median of the smallest-amplitude trajectories.
    pub absorbing_level: f64,
    pub entered_ball_times: Vec<Option<f64>>,
    /// `(max - min) / max` of the per-trajectory tail medians.
    pub band_spread: f64,
    pub damping_bounded: bool,
    pub blow_up: Option<BlowUpInfo>,
    pub verdict: Verdict,
}

/// Runs every (seed, amplitude) trajectory and tests entry into a common ball.
pub fn dissipativity_sweep(spec: &ExperimentSpec) -> Result<DissipativityReport> {
    spec.validate()?;
    let p = &spec.params;
    if !(p.gamma > 0.0) {
        return Err(Error::param("dissipativity needs gamma > 0"));
    }
    let growth = verify_growth(&p.nonlinearity, 10.0, 2001)?;
    if !growth.satisfied {
        return Err(Error::param("the nonlinearity fails the growth condition"));
    }
    let q = p.nonlinearity.growth_q();
    let stepper = Stepper::new(p, spec.dt, spec.dealias)?;
    let mut curves = Vec::new();
    let mut blow_up = None;
    'outer: for &seed in &spec.seeds {
        for &amp in &spec.amplitudes {
            let init = initial_data(&spec.grid, seed, amp, q)?;
            match collect_records(spec, &stepper, &init, DiagnosticsOptions::light(), seed, amp)? {
                Outcome::Done(records) => curves.push(decay_curve(seed, amp, records)?),
                Outcome::BlownUp(info) => {
                    blow_up = Some(info);
                    break 'outer;
                }
            }
        }
    }
    if let Some(info) = blow_up {
        return Ok(DissipativityReport {
            spec: spec.echo(),
            trajectories: curves,
            alpha: None,
            absorbing_level: f64::NAN,
            entered_ball_times: Vec::new(),
            band_spread: f64::NAN,
            damping_bounded: false,
            blow_up: Some(info),
            verdict: Verdict::Fail,
        });
    }
    let a_min = spec.amplitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let small_tails: Vec<f64> = curves
        .iter()
        .filter(|c| c.amplitude == a_min)
        .flat_map(|c| c.energy_space_norm[tail_start(&c.times)..].to_vec())
        .collect();
    let absorbing_level = 2.0 * median(&small_tails);
    let mut alphas = Vec::new();
    let mut entered = Vec::new();
    for c in &mut curves {
        c.entered_ball_time = entry_time(&c.times, &c.energy_space_norm, absorbing_level);
        c.alpha = fit_decay_rate(&c.times, &c.energy_space_norm, c.tail_median);
        alphas.extend(c.alpha);
        entered.push(c.entered_ball_time);
    }
    let tails: Vec<f64> = curves.iter().map(|c| c.tail_median).collect();
    let damping_bounded = curves.iter().all(|c| windows_do_not_grow(&c.damping_windows));
    let verdict = if entered.iter().all(Option::is_some) && damping_bounded {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(DissipativityReport {
        spec: spec.echo(),
        trajectories: curves,
        alpha: if alphas.is_empty() { None } else { Some(median(&alphas)) },
        absorbing_level,
        entered_ball_times: entered,
        band_spread: relative_spread(&tails),
        damping_bounded,
        blow_up: None,
        verdict,
    })
}

fn decay_curve(seed: u64, amplitude: f64, records: Vec<DiagnosticsRecord>) -> Result<DecayCurve> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let norms: Vec<f64> = records.iter().map(|r| r.energy_space_norm).collect();
    let tail_median = median(&norms[tail_start(&times)..]);
    Ok(DecayCurve {
        seed,
        amplitude,
        damping_windows: sliding_windows(&records, WindowKind::L2Damping)?,
        h32_windows: sliding_windows(&records, WindowKind::L2H32)?,
        times,
        energy_space_norm: norms,
        tail_median,
        entered_ball_time: None,
        alpha: None,
        records,
    })
}

/// Finite, and the second half never exceeds the first half by more than 10%.
fn windows_do_not_grow(w: &[WindowNorm]) -> bool {
    if w.iter().any(|x| !x.value.is_finite()) {
        return false;
    }
    if w.len() < 2 {
        return true;
    }
    let half = w.len() / 2;
    let head = w[..half].iter().map(|x| x.value).fold(0.0, f64::max);
    let tail = w[half..].iter().map(|x| x.value).fold(0.0, f64::max);
    tail <= 1.1 * head + 1e-300
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSummary {
    pub seed: u64,
    pub amplitude: f64,
    pub times: Vec<f64>,
    /// `||u||_{H^2} + ||v||_{H^1}` per record.
    pub e1_norm: Vec<f64>,
    pub initial_e1: f64,
    pub tail_max: f64,
    pub tail_final: f64,
    pub tail_slope: Option<f64>,
    pub tail_slope_stderr: Option<f64>,
    /// Log-linear decay rate fitted over the tail, when it is positive.
    pub tail_rate: Option<f64>,
    pub entered: bool,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorReport {
    pub spec: SpecEcho,
    pub tails: Vec<TailSummary>,
    /// Twice the largest tail median plus 0.1% of the largest initial norm.
    pub absorbing_level: f64,
    /// Largest tail maximum over all trajectories.
    pub uniform_bound: f64,
    /// `(max - min) / max` of the per-trajectory tail maxima.
    pub seed_spread: f64,
    /// Some tail has a least-squares slope above its standard error.
    pub trending: bool,
    /// Slowest decay rate `-max Re lambda` over the modes populated by the
    /// initial data, from the linear analysis.
    pub linear_rate: f64,
    pub blow_up: Option<BlowUpInfo>,
    pub verdict: Verdict,
}

/// Long runs per seed recording the `E_1` norm; the verdict reads the last
/// half of each run.
pub fn attractor_regularity_probe(spec: &ExperimentSpec) -> Result<AttractorReport> {
    spec.validate()?;
    let p = &spec.params;
    let q = p.nonlinearity.growth_q();
    let stepper = Stepper::new(p, spec.dt, spec.dealias)?;
    let mut tails = Vec::new();
    let mut blow_up = None;
    let mut linear_rate = f64::INFINITY;
    'outer: for &seed in &spec.seeds {
        for amp in spec.amplitude_list() {
            let init = initial_data(&spec.grid, seed, amp, q)?;
            linear_rate = linear_rate.min(populated_rate(&init, p)?);
            match collect_records(spec, &stepper, &init, DiagnosticsOptions::light(), seed, amp)? {
                Outcome::Done(records) => tails.push(tail_summary(seed, amp, records)),
                Outcome::BlownUp(info) => {
                    blow_up = Some(info);
                    break 'outer;
                }
            }
        }
    }
    let tail_norms: Vec<f64> = tails
        .iter()
        .map(|t| median(&energy_norms(&t.records)[tail_start(&t.times)..]))
        .collect();
    // A small floor keeps the ball nondegenerate when every tail decays to 0.
    let largest_norm = tails.iter().map(|t| t.records[0].energy_space_norm).fold(0.0, f64::max);
    let absorbing_level = 2.0 * tail_norms.iter().cloned().fold(0.0, f64::max) + 1e-3 * largest_norm;
    for t in &mut tails {
        let s = tail_start(&t.times);
        t.entered = energy_norms(&t.records)[s..].iter().all(|&x| x <= absorbing_level);
    }
    let maxima: Vec<f64> = tails.iter().map(|t| t.tail_max).collect();
    let uniform_bound = maxima.iter().cloned().fold(0.0, f64::max);
    let seed_spread = relative_spread(&maxima);
    let largest_start = tails.iter().map(|t| t.initial_e1).fold(0.0, f64::max);
    let trending = tails.iter().any(|t| match (t.tail_slope, t.tail_slope_stderr) {
        (Some(s), Some(e)) => {
            let scale = t.e1_norm.iter().cloned().fold(0.0, f64::max);
            s > e + 1e-12 * scale
        }
        _ => false,
    });
    let uniform = maxima.iter().all(|m| m.is_finite()) && (seed_spread <= 0.5 || uniform_bound <= 1e-2 * largest_start);
    let verdict = if blow_up.is_some() {
        Verdict::Fail
    } else if tails.iter().any(|t| !t.entered) {
        Verdict::Inconclusive
    } else if uniform && !trending {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AttractorReport {
        spec: spec.echo(),
        tails,
        absorbing_level,
        uniform_bound,
        seed_spread,
        trending,
        linear_rate,
        blow_up,
        verdict,
    })
}

fn energy_norms(records: &[DiagnosticsRecord]) -> Vec<f64> {
    records.iter().map(|r| r.energy_space_norm).collect()
}

fn tail_summary(seed: u64, amplitude: f64, records: Vec<DiagnosticsRecord>) -> TailSummary {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let e1: Vec<f64> = records.iter().map(DiagnosticsRecord::e1_norm).collect();
    let s = tail_start(&times);
    let fit = fit_line(&times[s..], &e1[s..]);
    let (lx, ly): (Vec<f64>, Vec<f64>) = times[s..]
        .iter()
        .zip(&e1[s..])
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    let tail_rate = fit_line(&lx, &ly).map(|(r, _)| -r).filter(|r| *r > 0.0);
    TailSummary {
        seed,
        amplitude,
        initial_e1: e1[0],
        tail_max: e1[s..].iter().cloned().fold(0.0, f64::max),
        tail_final: e1[e1.len() - 1],
        tail_slope: fit.map(|f| f.0),
        tail_slope_stderr: fit.map(|f| f.1),
        tail_rate,
        entered: false,
        times,
        e1_norm: e1,
        records,
    }
}

/// `-max Re lambda` over the modes where `u` or `v` is nonzero.
fn populated_rate(state: &SimState, params: &ModelParams) -> Result<f64> {
    let mu = state.grid().mu();
    let mut rate = f64::INFINITY;
    for (i, (a, b)) in state.u.coeffs().iter().zip(state.v.coeffs()).enumerate() {
        if a.norm() == 0.0 && b.norm() == 0.0 {
            continue;
        }
        let pair = mode_eigenvalues(mu[i], params.gamma, params.theta)?;
        rate = rate.min(-pair.lambda_plus.re.max(pair.lambda_minus.re));
    }
    Ok(rate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowHistory {
    pub seed: u64,
    pub amplitude: f64,
    pub windows: Vec<WindowNorm>,
    pub tail_median: f64,
    pub entered_time: Option<f64>,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzReport {
    pub spec: SpecEcho,
    pub q: f64,
    pub histories: Vec<WindowHistory>,
    /// Twice the tail median of the smallest-amplitude histories; absent at
    /// `q = 4`.
    pub level: Option<f64>,
    /// `(max - min) / max` of the per-trajectory tail medians.
    pub band_spread: f64,
    pub blow_up: Option<BlowUpInfo>,
    pub note: String,
    pub verdict: Verdict,
}

/// Sliding `L^4(t, t+1; L^12)` norms for weak damping.
pub fn strichartz_probe(spec: &ExperimentSpec, q: f64) -> Result<StrichartzReport> {
    spec.validate()?;
    let p = &spec.params;
    if p.theta != 0.0 {
        return Err(Error::param("the Strichartz probe needs theta = 0"));
    }
    if (q - p.nonlinearity.growth_q()).abs() > 1e-12 {
        return Err(Error::param(format!(
            "q = {q} does not match the nonlinearity exponent {}",
            p.nonlinearity.growth_q()
        )));
    }
    let stepper = Stepper::new(p, spec.dt, spec.dealias)?;
    let opts = DiagnosticsOptions {
        l12: true,
        lyapunov: false,
    };
    let mut histories = Vec::new();
    let mut blow_up = None;
    'outer: for &seed in &spec.seeds {
        for amp in spec.amplitude_list() {
            let init = initial_data(&spec.grid, seed, amp, q)?;
            match collect_records(spec, &stepper, &init, opts, seed, amp)? {
                Outcome::Done(records) => {
                    let windows = sliding_windows(&records, WindowKind::L4L12)?;
                    let starts: Vec<f64> = windows.iter().map(|w| w.t_start).collect();
                    let values: Vec<f64> = windows.iter().map(|w| w.value).collect();
                    histories.push(WindowHistory {
                        seed,
                        amplitude: amp,
                        tail_median: median(&values[tail_start(&starts)..]),
                        windows,
                        entered_time: None,
                        records,
                    });
                }
                Outcome::BlownUp(info) => {
                    blow_up = Some(info);
                    break 'outer;
                }
            }
        }
    }
    let tails: Vec<f64> = histories.iter().map(|h| h.tail_median).collect();
    let band_spread = relative_spread(&tails);
    let critical = q >= 4.0;
    let (level, note, verdict) = if let Some(info) = &blow_up {
        (None, format!("blow-up at t = {}", info.t), Verdict::Fail)
    } else if critical {
        (
            None,
            "critical growth: history reported without a dissipative Strichartz claim".to_string(),
            Verdict::Reported,
        )
    } else {
        let a_min = spec.amplitude_list().into_iter().fold(f64::INFINITY, f64::min);
        let small: Vec<f64> = histories
            .iter()
            .filter(|h| h.amplitude == a_min)
            .flat_map(|h| {
                let starts: Vec<f64> = h.windows.iter().map(|w| w.t_start).collect();
                h.windows[tail_start(&starts)..]
                    .iter()
                    .map(|w| w.value)
                    .collect::<Vec<_>>()
            })
            .collect();
        let level = 2.0 * median(&small);
        let mut all = true;
        for h in &mut histories {
            let starts: Vec<f64> = h.windows.iter().map(|w| w.t_start).collect();
            let values: Vec<f64> = h.windows.iter().map(|w| w.value).collect();
            h.entered_time = entry_time(&starts, &values, level);
            all &= h.entered_time.is_some();
        }
        let v = if all { Verdict::Pass } else { Verdict::Fail };
        (Some(level), "subcritical growth".to_string(), v)
    };
    Ok(StrichartzReport {
        spec: spec.echo(),
        q,
        histories,
        level,
        band_spread,
        blow_up,
        note,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationHistory {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `||xi_1(t) - xi_2(t)||` in the energy-space norm.
    pub separation: Vec<f64>,
    /// `separation / delta0`; empty when `delta0 = 0`.
    pub ratio: Vec<f64>,
    /// Least-squares slope of `ln ratio`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub spec: SpecEcho,
    pub delta0: f64,
    pub data_norm: f64,
    pub coarse: SeparationHistory,
    pub fine: SeparationHistory,
    pub rate_difference: Option<f64>,
    pub blow_up: Option<BlowUpInfo>,
    pub verdict: Verdict,
}

/// Tolerance on the change of the fitted separation rate under `dt -> dt/2`.
pub const SEPARATION_RATE_TOL: f64 = 0.05;

/// Evolves two initial conditions `delta0` apart (energy-space norm) at `dt`
/// and at `dt / 2`, using the first seed and amplitude.
pub fn separation_probe(spec: &ExperimentSpec, delta0: f64) -> Result<SeparationReport> {
    spec.validate()?;
    let p = &spec.params;
    let q = p.nonlinearity.growth_q();
    let seed = spec.seeds[0];
    let amp = spec.amplitude_list()[0];
    let base = initial_data(&spec.grid, seed, amp, q)?;
    let data_norm = energy_space_norm(&base, q)?;
    if !(delta0 >= 0.0) || delta0 > 1e-6 * data_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::param(format!(
            "delta0 = {delta0} must be at most 1e-6 times the data norm {data_norm:e}"
        )));
    }
    let dir = initial_data(&spec.grid, seed.wrapping_add(1), 1.0, q)?;
    let other = SimState::new(0.0, base.u.axpy(delta0, &dir.u)?, base.v.axpy(delta0, &dir.v)?)?;
    let mut hist = Vec::new();
    for dt in [spec.dt, 0.5 * spec.dt] {
        let stride = if dt == spec.dt {
            spec.stride()?
        } else {
            2 * spec.stride()?
        };
        let steps = if dt == spec.dt {
            spec.steps()?
        } else {
            2 * spec.steps()?
        };
        match pair_history(p, spec.dealias, dt, steps, stride, &base, &other, delta0, q, seed, amp)? {
            Outcome::Done(h) => hist.push(h),
            Outcome::BlownUp(info) => {
                let empty = |dt| SeparationHistory {
                    dt,
                    times: Vec::new(),
                    separation: Vec::new(),
                    ratio: Vec::new(),
                    rate: None,
                };
                return Ok(SeparationReport {
                    spec: spec.echo(),
                    delta0,
                    data_norm,
                    coarse: empty(spec.dt),
                    fine: empty(0.5 * spec.dt),
                    rate_difference: None,
                    blow_up: Some(info),
                    verdict: Verdict::Fail,
                });
            }
        }
    }
    let fine = hist.pop().expect("two runs");
    let coarse = hist.pop().expect("two runs");
    let rate_difference = match (coarse.rate, fine.rate) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    let verdict = if delta0 == 0.0 {
        if coarse.separation.iter().chain(&fine.separation).all(|&s| s == 0.0) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    } else {
        match (coarse.rate, rate_difference) {
            (Some(r), Some(d)) if d <= SEPARATION_RATE_TOL * r.abs().max(1.0) => Verdict::Pass,
            _ => Verdict::Fail,
        }
    };
    Ok(SeparationReport {
        spec: spec.echo(),
        delta0,
        data_norm,
        coarse,
        fine,
        rate_difference,
        blow_up: None,
        verdict,
    })
}

#[allow(clippy::too_many_arguments)]
fn pair_history(
    params: &ModelParams,
    dealias: Dealias,
    dt: f64,
    steps: usize,
    stride: usize,
    a: &SimState,
    b: &SimState,
    delta0: f64,
    q: f64,
    seed: u64,
    amplitude: f64,
) -> Result<Outcome<SeparationHistory>> {
    let stepper = Stepper::new(params, dt, dealias)?;
    let bound = stable_dt(a, &params.nonlinearity)?.min(stable_dt(b, &params.nonlinearity)?);
    if dt > bound {
        return Err(Error::UnstableTimeStep { dt, bound });
    }
    let (mut x, mut y) = (a.clone(), b.clone());
    let mut times = Vec::new();
    let mut separation = Vec::new();
    let mut sample = |x: &SimState, y: &SimState, t: f64| -> Result<()> {
        let d = SimState::new(t, x.u.axpy(-1.0, &y.u)?, x.v.axpy(-1.0, &y.v)?)?;
        times.push(t);
        separation.push(energy_space_norm(&d, q)?);
        Ok(())
    };
    sample(&x, &y, a.t)?;
    for i in 1..=steps {
        for s in [&mut x, &mut y] {
            match stepper.advance(s) {
                Ok(()) => {}
                Err(Error::BlowUp(bu)) => {
                    return Ok(Outcome::BlownUp(BlowUpInfo {
                        seed,
                        amplitude,
                        t: bu.t,
                        max_coeff: bu.max_coeff,
                    }))
                }
                Err(e) => return Err(e),
            }
            s.t = a.t + i as f64 * dt;
        }
        if i % stride == 0 || i == steps {
            sample(&x, &y, x.t)?;
        }
    }
    let ratio: Vec<f64> = if delta0 > 0.0 {
        separation.iter().map(|s| s / delta0).collect()
    } else {
        Vec::new()
    };
    let (lx, ly): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&ratio)
        .filter(|(_, r)| **r > 0.0)
        .map(|(t, r)| (*t, r.ln()))
        .unzip();
    let rate = fit_line(&lx, &ly).map(|f| f.0);
    Ok(Outcome::Done(SeparationHistory {
        dt,
        times,
        separation,
        ratio,
        rate,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub next_n: Option<usize>,
    /// `||u_N(T) - u_next(T)||_{L^2}`.
    pub l2_difference: Option<f64>,
    pub blow_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub spec: SpecEcho,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Differences nonincreasing up to a 5% allowance.
    pub monotone: bool,
    pub strictly_decreasing: bool,
    pub verdict: Verdict,
}

/// Runs the first seed's data (built on the finest grid and restricted
/// exactly to the others) at each resolution and compares consecutive
/// final states.
pub fn galerkin_convergence(spec: &ExperimentSpec, resolutions: &[usize]) -> Result<ConvergenceReport> {
    spec.validate()?;
    if resolutions.len() < 2 {
        return Err(Error::param("at least two resolutions are required"));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) || resolutions.iter().any(|n| n % 2 != 0) {
        return Err(Error::param("resolutions must be strictly increasing and even"));
    }
    let p = &spec.params;
    let q = p.nonlinearity.growth_q();
    let (dim, basis, length) = (spec.grid.dim(), spec.grid.basis(), spec.grid.axis_length());
    let grids = resolutions
        .iter()
        .map(|&n| Grid::with_axis_length(dim, n, basis, length).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let finest = grids.last().expect("nonempty");
    let amp = spec.amplitude_list()[0];
    let data = initial_data(finest, spec.seeds[0], amp, q)?;
    let mut finals: Vec<Option<SpectralField>> = Vec::new();
    let mut blow_ups = Vec::new();
    for g in &grids {
        let params = ModelParams {
            forcing: p.forcing.resample(g.clone())?,
            ..p.clone()
        };
        let init = SimState::new(0.0, data.u.resample(g.clone())?, data.v.resample(g.clone())?)?;
        let stepper = Stepper::new(&params, spec.dt, spec.dealias)?;
        match run_with(&stepper, &init, spec.steps()?, spec.steps()?, &mut []) {
            Ok(s) => {
                finals.push(Some(s.u));
                blow_ups.push(None);
            }
            Err(Error::BlowUp(b)) => {
                finals.push(None);
                blow_ups.push(Some(b.t));
            }
            Err(e) => return Err(e),
        }
    }
    let mut rows = Vec::new();
    for i in 0..grids.len() {
        let next = grids.get(i + 1);
        let diff = match (next, &finals[i], finals.get(i + 1).and_then(|f| f.as_ref())) {
            (Some(g), Some(a), Some(b)) => Some(a.resample(g.clone())?.axpy(-1.0, b)?.l2_norm()),
            _ => None,
        };
        rows.push(ConvergenceRow {
            n: resolutions[i],
            next_n: next.map(|g| g.n_per_axis()),
            l2_difference: diff,
            blow_up: blow_ups[i],
        });
    }
    let diffs: Vec<Option<f64>> = rows.iter().take(rows.len() - 1).map(|r| r.l2_difference).collect();
    let complete = diffs.iter().all(Option::is_some);
    let d: Vec<f64> = diffs.iter().flatten().copied().collect();
    let monotone = complete && d.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let strictly_decreasing = complete && d.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceReport {
        spec: spec.echo(),
        t_end: spec.horizon,
        rows,
        monotone,
        strictly_decreasing,
        verdict: if monotone { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportReport {
    /// Largest coefficient of `(u, v)` with `|k| <= 3` after one step.
    pub max_inside: f64,
    /// Largest coefficient with `|k| > 3`.
    pub max_outside: f64,
}

/// One step from `u = cos x_1`, `v = 0`: a cubic kick can only reach
/// `|k| <= 3`.
pub fn nonlinear_support_check(grid: &Arc<Grid>, nonlinearity: &NonlinearitySpec, dt: f64) -> Result<SupportReport> {
    if !grid.is_torus() {
        return Err(Error::RequiresTorus("nonlinear_support_check"));
    }
    let mut u = SpectralField::zeros(grid.clone());
    let mut k = [0i64; 3];
    k[0] = 1;
    u.set_real_mode(&k[..grid.dim()], Complex64::new(0.5, 0.0))?;
    let params = ModelParams::unforced(grid.clone(), 1.0, 0.5, nonlinearity.clone());
    let stepper = Stepper::new(&params, dt, Dealias::ZeroPadTriple)?;
    let mut s = SimState::new(0.0, u, SpectralField::zeros(grid.clone()))?;
    stepper.advance(&mut s)?;
    let (mut inside, mut outside) = (0.0_f64, 0.0_f64);
    for idx in 0..grid.len() {
        let m = s.u.coeffs()[idx].norm().max(s.v.coeffs()[idx].norm());
        let k = grid.wavevector(idx);
        let k2: i64 = k.iter().map(|x| x * x).sum();
        if k2 <= 9 {
            inside = inside.max(m);
        } else {
            outside = outside.max(m);
        }
    }
    Ok(SupportReport {
        max_inside: inside,
        max_outside: outside,
    })
}

/// Parameters only some experiment kinds use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentExtras {
    pub resolutions: Vec<usize>,
    pub q: Option<f64>,
    pub delta0: f64,
}

impl Default for ExperimentExtras {
    fn default() -> Self {
        ExperimentExtras {
            resolutions: Vec::new(),
            q: None,
            delta0: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentReport {
    Dissipativity(DissipativityReport),
    GalerkinConvergence(ConvergenceReport),
    AttractorRegularity(AttractorReport),
    StrichartzProbe(StrichartzReport),
    SeparationProbe(SeparationReport),
}

impl ExperimentReport {
    pub fn verdict(&self) -> Verdict {
        match self {
            ExperimentReport::Dissipativity(r) => r.verdict,
            ExperimentReport::GalerkinConvergence(r) => r.verdict,
            ExperimentReport::AttractorRegularity(r) => r.verdict,
            ExperimentReport::StrichartzProbe(r) => r.verdict,
            ExperimentReport::SeparationProbe(r) => r.verdict,
        }
    }

    /// Per-trajectory diagnostics as `(name, records)`.
    pub fn trajectories(&self) -> Vec<(String, &[DiagnosticsRecord])> {
        let name = |seed: u64, amp: f64| format!("seed{seed}_amp{amp}");
        match self {
            ExperimentReport::Dissipativity(r) => r
                .trajectories
                .iter()
                .map(|c| (name(c.seed, c.amplitude), c.records.as_slice()))
                .collect(),
            ExperimentReport::AttractorRegularity(r) => r
                .tails
                .iter()
                .map(|c| (name(c.seed, c.amplitude), c.records.as_slice()))
                .collect(),
            ExperimentReport::StrichartzProbe(r) => r
                .histories
                .iter()
                .map(|c| (name(c.seed, c.amplitude), c.records.as_slice()))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Window norms as `(name, windows)` for the window CSV.
    pub fn windows(&self) -> Vec<(String, Vec<WindowNorm>)> {
        let name = |seed: u64, amp: f64| format!("seed{seed}_amp{amp}");
        match self {
            ExperimentReport::Dissipativity(r) => r
                .trajectories
                .iter()
                .map(|c| {
                    let mut w = c.damping_windows.clone();
                    w.extend_from_slice(&c.h32_windows);
                    (name(c.seed, c.amplitude), w)
                })
                .collect(),
            ExperimentReport::StrichartzProbe(r) => r
                .histories
                .iter()
                .map(|h| (name(h.seed, h.amplitude), h.windows.clone()))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Dispatches on `spec.kind`.
pub fn run_experiment(spec: &ExperimentSpec, extras: &ExperimentExtras) -> Result<ExperimentReport> {
    Ok(match spec.kind {
        ExperimentKind::Dissipativity => ExperimentReport::Dissipativity(dissipativity_sweep(spec)?),
        ExperimentKind::GalerkinConvergence => {
            ExperimentReport::GalerkinConvergence(galerkin_convergence(spec, &extras.resolutions)?)
        }
        ExperimentKind::AttractorRegularity => ExperimentReport::AttractorRegularity(attractor_regularity_probe(spec)?),
        ExperimentKind::StrichartzProbe => {
            let q = extras.q.unwrap_or_else(|| spec.params.nonlinearity.growth_q());
            ExperimentReport::StrichartzProbe(strichartz_probe(spec, q)?)
        }
        ExperimentKind::SeparationProbe => ExperimentReport::SeparationProbe(separation_probe(spec, extras.delta0)?),
    })
}

/// Convenience: a torus grid and unforced parameters for quick studies.
pub fn torus_params(
    dim: usize,
    n: usize,
    gamma: f64,
    theta: f64,
    nonlinearity: NonlinearitySpec,
) -> Result<ModelParams> {
    let g = make_grid(dim, n, Basis::TorusExponential)?;
    Ok(ModelParams::unforced(g, gamma, theta, nonlinearity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::run;
    use crate::integrator::IntegratorConfig;
    use crate::integrator::StateRecorder;

    fn params2(n: usize, theta: f64, nl: NonlinearitySpec) -> ModelParams {
        torus_params(2, n, 1.0, theta, nl).unwrap()
    }

    #[test]
    fn helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [0.0, 1.0, 2.0, 3.0];
        let (s, e) = fit_line(&x, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && e < 1e-14);
        assert_eq!(entry_time(&x, &[5.0, 3.0, 1.0, 0.5], 2.0), Some(2.0));
        assert_eq!(entry_time(&x, &[5.0, 1.0, 1.0, 3.0], 2.0), None);
        assert_eq!(entry_time(&x, &[1.0; 4], 2.0), Some(0.0));
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let n: Vec<f64> = t.iter().map(|t| 0.5 + 2.0 * (-0.7 * t).exp()).collect();
        assert!((fit_decay_rate(&t, &n, 0.5).unwrap() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn initial_data_is_normalized_and_reproducible() {
        let g = make_grid(3, 12, Basis::TorusExponential).unwrap();
        let a = initial_data(&g, 5, 3.0, 4.0).unwrap();
        assert!((energy_space_norm(&a, 4.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(a, initial_data(&g, 5, 3.0, 4.0).unwrap());
        assert_ne!(a, initial_data(&g, 6, 3.0, 4.0).unwrap());
        let d = make_grid(2, 8, Basis::DirichletSine).unwrap();
        let b = initial_data(&d, 5, 2.0, 2.0).unwrap();
        assert!((energy_space_norm(&b, 2.0).unwrap() - 2.0).abs() < 1e-12);
        let f = seeded_forcing(&g, 1, 4, 1.0).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-13);
        assert!(f.mean().abs() < 1e-15);
    }

    #[test]
    fn preconditions() {
        let p = params2(8, 0.5, NonlinearitySpec::Cubic { a: 1.0 });
        let mk =
            |kind, p: ModelParams, amps: Vec<f64>, horizon| ExperimentSpec::new(kind, p, vec![1], amps, horizon, 0.1);
        let d = ExperimentKind::Dissipativity;
        let weak = ModelParams {
            gamma: 0.0,
            ..p.clone()
        };
        assert!(dissipativity_sweep(&mk(d, weak, vec![1.0, 2.0, 4.0], 10.0)).is_err());
        assert!(dissipativity_sweep(&mk(d, p.clone(), vec![1.0, 2.0], 10.0)).is_err());
        assert!(dissipativity_sweep(&mk(d, p.clone(), vec![1.0, 2.0, 4.0], 5.0)).is_err());
        let s = mk(ExperimentKind::StrichartzProbe, p.clone(), vec![1.0], 10.0);
        assert!(strichartz_probe(&s, 2.0).is_err());
        let sep = mk(ExperimentKind::SeparationProbe, p.clone(), vec![1.0], 1.0);
        assert!(separation_probe(&sep, 1e-3).is_err());
        let conv = mk(ExperimentKind::GalerkinConvergence, p, vec![1.0], 1.0);
        assert!(galerkin_convergence(&conv, &[16, 8]).is_err());
        assert!(galerkin_convergence(&conv, &[8, 9]).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = params2(8, 0.5, NonlinearitySpec::Quintic { a: 1.0 });
        let spec = ExperimentSpec::new(
            ExperimentKind::Dissipativity,
            p.clone(),
            vec![3],
            vec![0.0, 0.0, 0.0],
            10.0,
            0.1,
        );
        let r = dissipativity_sweep(&spec).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r
            .trajectories
            .iter()
            .all(|c| c.energy_space_norm.iter().all(|&x| x == 0.0)));
        let p0 = ModelParams { theta: 0.0, ..p };
        let spec = ExperimentSpec::new(ExperimentKind::StrichartzProbe, p0, vec![3], vec![0.0], 10.0, 0.1);
        let r = strichartz_probe(&spec, 4.0).unwrap();
        assert_eq!(r.verdict, Verdict::Reported);
        assert!(r.histories[0].windows.iter().all(|w| w.value == 0.0));
    }

    #[test]
    fn unforced_sweep_decays_and_is_deterministic() {
        let g = make_grid(2, 12, Basis::DirichletSine).unwrap();
        let p = ModelParams::unforced(g, 1.0, 0.5, NonlinearitySpec::Quintic { a: 1.0 });
        let spec = ExperimentSpec::new(
            ExperimentKind::Dissipativity,
            p,
            vec![1],
            vec![1.0, 2.0, 4.0],
            10.0,
            0.1,
        );
        let r = dissipativity_sweep(&spec).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        for c in &r.trajectories {
            let last = c.energy_space_norm[c.energy_space_norm.len() - 1];
            assert!(last < 1e-2 * c.amplitude, "{last}");
            assert!(c.alpha.unwrap() > 0.0);
        }
        let json = serde_json::to_string(&ExperimentReport::Dissipativity(r)).unwrap();
        let again = ExperimentReport::Dissipativity(dissipativity_sweep(&spec).unwrap());
        assert_eq!(json, serde_json::to_string(&again).unwrap());
        assert!(json.contains("\"verdict\":\"PASS\""));
    }

    #[test]
    fn separation_identical_and_linear() {
        let p = params2(8, 0.5, NonlinearitySpec::Zero);
        let spec = ExperimentSpec::new(
            ExperimentKind::SeparationProbe,
            p.clone(),
            vec![2],
            vec![1.0],
            2.0,
            0.01,
        )
        .with_record_spacing(0.1);
        let r = separation_probe(&spec, 0.0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.coarse.separation.iter().all(|&s| s == 0.0));

        let delta0 = 1e-8;
        let r = separation_probe(&spec, delta0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let dir = initial_data(p.grid(), 3, 1.0, 0.0).unwrap();
        let mut rec = StateRecorder::default();
        run(
            &dir,
            &p,
            &IntegratorConfig::new(0.01, 2.0).with_stride(10),
            &mut [&mut rec],
        )
        .unwrap();
        for (s, ratio) in rec.states.iter().zip(&r.coarse.ratio) {
            let exact = energy_space_norm(s, 0.0).unwrap();
            assert!((ratio - exact).abs() < 1e-6 * exact, "{ratio} {exact}");
        }
    }

    #[test]
    fn linear_galerkin_runs_agree_to_round_off() {
        let p = params2(10, 0.5, NonlinearitySpec::Zero);
        let spec = ExperimentSpec::new(ExperimentKind::GalerkinConvergence, p, vec![4], vec![1.0], 1.0, 0.05);
        let r = galerkin_convergence(&spec, &[10, 20, 40]).unwrap();
        for row in &r.rows[..2] {
            assert!(row.l2_difference.unwrap() < 1e-13, "{:?}", row);
        }
        assert!(r.rows[2].l2_difference.is_none());
    }

    #[test]
    fn cubic_kick_support() {
        for dim in [1, 2, 3] {
            let g = make_grid(dim, 8, Basis::TorusExponential).unwrap();
            let r = nonlinear_support_check(&g, &NonlinearitySpec::Cubic { a: 1.0 }, 0.1).unwrap();
            assert!(r.max_inside > 0.1);
            assert!(r.max_outside < 1e-15, "{:?}", r);
        }
    }
}
