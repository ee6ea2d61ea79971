//! Run configuration documents (TOML).
//!
//! Parsing is strict: unknown keys are errors, and every rule is checked
//! before a [`RunConfig`] is returned.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{seeded_forcing, ExperimentExtras, ExperimentKind, ExperimentSpec};
use crate::integrator::{IntegratorConfig, ModelParams};
use crate::nonlinearity::{verify_growth, NonlinearitySpec};
use crate::spectral::{Basis, Complex64, Grid, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_basis")]
    pub basis: Basis,
    /// Defaults to `2 pi` on the torus and `pi` for the Dirichlet box.
    #[serde(default)]
    pub axis_length: Option<f64>,
}

fn default_basis() -> Basis {
    Basis::TorusExponential
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSection {
    #[default]
    Zero,
    /// Random smooth field on `1 <= |k| <= band` with `||g||_{L^2} = norm`.
    Seeded { seed: u64, band: u32, norm: f64 },
    /// Spatially constant forcing (torus only).
    Constant { value: f64 },
    /// `amplitude cos(k.x)` on the torus, `amplitude prod sin(k_i x_i)` on the box.
    Mode { k: Vec<i64>, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    pub theta: f64,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub forcing: ForcingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub seed: u64,
    /// Energy-space norm of the initial data.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Start from a checkpoint instead of seeded data.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            seed: 0,
            amplitude: 1.0,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    pub horizon: f64,
    /// Defaults to the integrator time step.
    #[serde(default)]
    pub record_spacing: Option<f64>,
    /// Galerkin convergence only.
    #[serde(default)]
    pub resolutions: Vec<usize>,
    /// Strichartz probe only; defaults to the nonlinearity exponent.
    #[serde(default)]
    pub q: Option<f64>,
    /// Separation probe only.
    #[serde(default = "default_delta0")]
    pub delta0: f64,
}

fn default_delta0() -> f64 {
    1e-8
}

impl ExperimentSection {
    pub fn extras(&self) -> ExperimentExtras {
        ExperimentExtras {
            resolutions: self.resolutions.clone(),
            q: self.q,
            delta0: self.delta0,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Checkpoint]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

/// The document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub grid: GridSection,
    pub model: ModelSection,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A validated configuration with the grid and model built.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub document: ConfigDocument,
    pub grid: Arc<Grid>,
    pub params: ModelParams,
}

impl RunConfig {
    pub fn output_dir(&self) -> &PathBuf {
        &self.document.output.directory
    }

    /// The experiment described by the `[experiment]` section.
    pub fn experiment(&self) -> Option<(ExperimentSpec, ExperimentExtras)> {
        let e = self.document.experiment.as_ref()?;
        let it = &self.document.integrator;
        let spec = ExperimentSpec::new(
            e.kind,
            self.params.clone(),
            e.seeds.clone(),
            e.amplitudes.clone(),
            e.horizon,
            it.dt,
        )
        .with_dealias(it.dealias)
        .with_record_spacing(e.record_spacing.unwrap_or(it.dt));
        Some((spec, e.extras()))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.message()))?;
    let document: ConfigDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".to_string() } else { path };
        Error::config(path, e.into_inner().message())
    })?;
    build(document)
}

fn build(doc: ConfigDocument) -> Result<RunConfig> {
    let g = &doc.grid;
    let axis_length = g.axis_length.unwrap_or_else(|| g.basis.default_axis_length());
    if !(axis_length > 0.0 && axis_length.is_finite()) {
        return Err(Error::config("grid.axis_length", "must be positive and finite"));
    }
    if !(1..=3).contains(&g.dim) {
        return Err(Error::config("grid.dim", format!("dimension {} not in 1..=3", g.dim)));
    }
    let grid = Grid::with_axis_length(g.dim, g.n, g.basis, axis_length)
        .map(Arc::new)
        .map_err(|e| Error::config("grid.n", e.to_string()))?;

    let m = &doc.model;
    if !(m.gamma > 0.0 && m.gamma.is_finite()) {
        return Err(Error::config("model.gamma", "gamma must be positive"));
    }
    if !(0.0..=1.0).contains(&m.theta) {
        return Err(Error::config("model.theta", "theta must lie in [0, 1]"));
    }
    m.nonlinearity
        .validate()
        .map_err(|e| Error::config("model.nonlinearity", e.to_string()))?;
    if g.basis == Basis::DirichletSine && !m.nonlinearity.is_odd() {
        return Err(Error::config(
            "model.nonlinearity",
            "the Dirichlet basis requires an odd nonlinearity",
        ));
    }
    let forcing = build_forcing(&grid, &m.forcing)?;
    if grid.is_torus() && m.theta > 0.0 && forcing.mean() != 0.0 {
        return Err(Error::config(
            "model.forcing",
            "theta > 0 requires mean-zero forcing (the mean mode is undamped)",
        ));
    }
    let params = ModelParams {
        gamma: m.gamma,
        theta: m.theta,
        nonlinearity: m.nonlinearity.clone(),
        forcing,
    };
    params.validate().map_err(|e| Error::config("model", e.to_string()))?;

    let it = &doc.integrator;
    if !(it.dt > 0.0 && it.dt.is_finite()) {
        return Err(Error::config("integrator.dt", "dt must be positive"));
    }
    if it.snapshot_stride == 0 {
        return Err(Error::config("integrator.snapshot_stride", "must be at least 1"));
    }
    it.steps()
        .map_err(|e| Error::config("integrator.t_end", e.to_string()))?;

    let init = &doc.initial;
    if !(init.amplitude >= 0.0 && init.amplitude.is_finite()) {
        return Err(Error::config("initial.amplitude", "must be finite and nonnegative"));
    }

    if doc.output.formats.is_empty() {
        return Err(Error::config("output.formats", "at least one format is required"));
    }

    let cfg = RunConfig {
        document: doc.clone(),
        grid,
        params,
    };
    if let Some(e) = &doc.experiment {
        check_experiment(e, &cfg)?;
    }
    Ok(cfg)
}

fn build_forcing(grid: &Arc<Grid>, f: &ForcingSection) -> Result<SpectralField> {
    let path = "model.forcing";
    match f {
        ForcingSection::Zero => Ok(SpectralField::zeros(grid.clone())),
        ForcingSection::Seeded { seed, band, norm } => {
            if !(*norm >= 0.0 && norm.is_finite()) {
                return Err(Error::config(format!("{path}.norm"), "must be finite and nonnegative"));
            }
            if *band == 0 {
                return Err(Error::config(format!("{path}.band"), "must be at least 1"));
            }
            seeded_forcing(grid, *seed, *band, *norm).map_err(|e| Error::config(format!("{path}.band"), e.to_string()))
        }
        ForcingSection::Constant { value } => {
            if !grid.is_torus() {
                return Err(Error::config(path, "constant forcing needs the torus basis"));
            }
            if !value.is_finite() {
                return Err(Error::config(format!("{path}.value"), "must be finite"));
            }
            let mut g = SpectralField::zeros(grid.clone());
            g.set_real_mode(&vec![0; grid.dim()], Complex64::new(*value, 0.0))?;
            Ok(g)
        }
        ForcingSection::Mode { k, amplitude } => {
            if k.len() != grid.dim() {
                return Err(Error::config(
                    format!("{path}.k"),
                    format!("needs {} components, got {}", grid.dim(), k.len()),
                ));
            }
            if !amplitude.is_finite() {
                return Err(Error::config(format!("{path}.amplitude"), "must be finite"));
            }
            if grid.index_of(k).is_none()
                || k.iter()
                    .any(|&x| grid.is_torus() && 2 * x.abs() >= grid.n_per_axis() as i64)
            {
                return Err(Error::config(
                    format!("{path}.k"),
                    "wavevector not resolved by the grid",
                ));
            }
            let mut g = SpectralField::zeros(grid.clone());
            let c = if grid.is_torus() && k.iter().any(|&x| x != 0) {
                0.5 * amplitude
            } else {
                *amplitude
            };
            g.set_real_mode(k, Complex64::new(c, 0.0))?;
            Ok(g)
        }
    }
}

fn check_experiment(e: &ExperimentSection, cfg: &RunConfig) -> Result<()> {
    let p = "experiment";
    if e.seeds.is_empty() {
        return Err(Error::config(format!("{p}.seeds"), "at least one seed is required"));
    }
    if e.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::config(
            format!("{p}.amplitudes"),
            "must be finite and nonnegative",
        ));
    }
    if e.kind.is_asymptotic() && !(e.horizon >= 10.0) {
        return Err(Error::config(format!("{p}.horizon"), "must be at least 10"));
    }
    if !(e.horizon > 0.0 && e.horizon.is_finite()) {
        return Err(Error::config(format!("{p}.horizon"), "must be positive"));
    }
    match e.kind {
        ExperimentKind::Dissipativity => {
            if e.amplitudes.len() < 3 {
                return Err(Error::config(
                    format!("{p}.amplitudes"),
                    "dissipativity needs at least 3 amplitudes",
                ));
            }
            let g = verify_growth(&cfg.params.nonlinearity, 10.0, 2001)?;
            if !g.satisfied {
                return Err(Error::config("model.nonlinearity", "fails the growth condition"));
            }
        }
        ExperimentKind::StrichartzProbe => {
            if cfg.params.theta != 0.0 {
                return Err(Error::config("model.theta", "the Strichartz probe needs theta = 0"));
            }
            if let Some(q) = e.q {
                if (q - cfg.params.nonlinearity.growth_q()).abs() > 1e-12 {
                    return Err(Error::config(
                        format!("{p}.q"),
                        "does not match the nonlinearity exponent",
                    ));
                }
            }
        }
        ExperimentKind::GalerkinConvergence => {
            let r = &e.resolutions;
            if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) || r.iter().any(|n| n % 2 != 0) {
                return Err(Error::config(
                    format!("{p}.resolutions"),
                    "need at least two strictly increasing even resolutions",
                ));
            }
        }
        ExperimentKind::SeparationProbe => {
            if !(e.delta0 >= 0.0 && e.delta0.is_finite()) {
                return Err(Error::config(format!("{p}.delta0"), "must be finite and nonnegative"));
            }
        }
        ExperimentKind::AttractorRegularity => {}
    }
    let (spec, _) = cfg.experiment().expect("section present");
    spec.validate().map_err(|err| Error::config(p, err.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 2
n = 16

[model]
gamma = 1.0
theta = 0.5

[integrator]
dt = 0.01
t_end = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        let d = &c.document;
        assert_eq!(d.grid.basis, Basis::TorusExponential);
        assert_eq!(d.model.nonlinearity, NonlinearitySpec::Quintic { a: 1.0 });
        assert_eq!(d.model.forcing, ForcingSection::Zero);
        assert_eq!(d.integrator.snapshot_stride, 1);
        assert_eq!(d.output, OutputSection::default());
        assert_eq!(d.initial, InitialSection::default());
        assert!(d.experiment.is_none());
        assert_eq!(c.grid.n_per_axis(), 16);
    }

    #[test]
    fn errors_carry_key_paths() {
        let bad = MINIMAL.replace("gamma = 1.0", "gamma = -1.0");
        match parse_config(&bad) {
            Err(Error::Config { path, reason }) => {
                assert_eq!(path, "model.gamma");
                assert_eq!(reason, "gamma must be positive");
            }
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("theta = 0.5", "theta = 0.5\ntheat = 1");
        match parse_config(&bad) {
            Err(Error::Config { path, reason }) => {
                assert_eq!(path, "model.theat");
                assert!(reason.contains("unknown field"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("dt = 0.01", "dt = \"fast\"");
        match parse_config(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "integrator.dt"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[grid"), Err(Error::Config { .. })));
    }

    #[test]
    fn forcing_kinds() {
        let with = |f: &str| MINIMAL.replace("theta = 0.5", &format!("theta = 0.0\nforcing = {f}"));
        let c = parse_config(&with("{ kind = \"constant\", value = 2.0 }")).unwrap();
        assert_eq!(c.params.forcing.mean(), 2.0);
        let c = parse_config(&with("{ kind = \"mode\", k = [1, 0], amplitude = 2.0 }")).unwrap();
        assert!((c.params.forcing.l2_norm() - 2.0 * (0.5 * c.grid.volume()).sqrt()).abs() < 1e-12);
        let c = parse_config(&with("{ kind = \"seeded\", seed = 3, band = 4, norm = 1.0 }")).unwrap();
        assert!((c.params.forcing.l2_norm() - 1.0).abs() < 1e-13);
    }
}
