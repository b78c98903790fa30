//! Run configuration: a TOML file with one flat section per module, plus
//! `--set section.key=value` overrides applied before validation.

use std::path::{Path, PathBuf};

use polarosc_core::atomic::{gain_scale_for, AtomicParams};
use polarosc_core::cavity::{optimal_phase, CavityParams, NoiseMode};
use polarosc_core::Medium;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub medium: MediumSection,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub bistability: BistabilitySection,
    #[serde(default)]
    pub loss_sweep: LossSweepSection,
    pub ising: Option<IsingSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
}

/// Either `delta` alone (linewidth units) or `gamma_big`, `detuning` and
/// optionally `gamma_small`. The gain is set by `gain_scale` (C) or by the
/// small-signal slope `gl`, never both.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub delta: Option<f64>,
    pub gamma_big: Option<f64>,
    pub gamma_small: Option<f64>,
    pub detuning: Option<f64>,
    #[serde(default = "defaults::intensity_ratio")]
    pub intensity_ratio: f64,
    pub gain_scale: Option<f64>,
    pub gl: Option<f64>,
    /// Γ + γ in GHz; enables a detuning column in GHz.
    pub linewidth_ghz: Option<f64>,
}

impl Default for MediumSection {
    fn default() -> Self {
        Self {
            delta: None,
            gamma_big: None,
            gamma_small: None,
            detuning: None,
            intensity_ratio: defaults::intensity_ratio(),
            gain_scale: None,
            gl: None,
            linewidth_ghz: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PsiSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    #[serde(default = "defaults::pump")]
    pub pump: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::psi")]
    pub psi: PsiSpec,
    #[serde(default = "defaults::noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default = "defaults::conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "defaults::conv_window")]
    pub conv_window: usize,
    #[serde(default = "defaults::noise_mode")]
    pub noise_mode: String,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            pump: defaults::pump(),
            eta: defaults::eta(),
            psi: defaults::psi(),
            noise_sigma: defaults::noise_sigma(),
            max_iters: defaults::max_iters(),
            conv_tol: defaults::conv_tol(),
            conv_window: defaults::conv_window(),
            noise_mode: defaults::noise_mode(),
        }
    }
}

/// An explicit list of values or an inclusive linear range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl GridSpec {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let values = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range {
                start,
                stop,
                points,
            } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("grid `{name}` is empty")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid `{name}` contains {bad}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    #[serde(default = "defaults::epsilon_grid")]
    pub epsilon: GridSpec,
    #[serde(default = "defaults::delta_grid")]
    pub delta: GridSpec,
    #[serde(default = "defaults::eta_grid")]
    pub eta: GridSpec,
}

impl Default for GridsSection {
    fn default() -> Self {
        Self {
            epsilon: defaults::epsilon_grid(),
            delta: defaults::delta_grid(),
            eta: defaults::eta_grid(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BistabilitySection {
    #[serde(default = "defaults::num_events")]
    pub num_events: usize,
    #[serde(default = "defaults::max_lag")]
    pub max_lag: usize,
    #[serde(default = "defaults::band_sigmas")]
    pub band_sigmas: f64,
}

impl Default for BistabilitySection {
    fn default() -> Self {
        Self {
            num_events: defaults::num_events(),
            max_lag: defaults::max_lag(),
            band_sigmas: defaults::band_sigmas(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSweepSection {
    #[serde(default = "defaults::runs_per_point")]
    pub runs_per_point: usize,
}

impl Default for LossSweepSection {
    fn default() -> Self {
        Self {
            runs_per_point: defaults::runs_per_point(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    /// Edge-list file, relative to the config file's directory.
    pub instance: PathBuf,
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

mod defaults {
    use super::{GridSpec, PsiSpec};

    pub fn intensity_ratio() -> f64 {
        10.0
    }
    pub fn pump() -> f64 {
        1.0
    }
    pub fn eta() -> f64 {
        0.9
    }
    pub fn psi() -> PsiSpec {
        PsiSpec::Named("optimal".into())
    }
    pub fn noise_sigma() -> f64 {
        1e-6
    }
    pub fn max_iters() -> usize {
        100_000
    }
    pub fn conv_tol() -> f64 {
        1e-10
    }
    pub fn conv_window() -> usize {
        10
    }
    pub fn noise_mode() -> String {
        "initial-seed".into()
    }
    pub fn epsilon_grid() -> GridSpec {
        GridSpec::Range {
            start: 0.0,
            stop: std::f64::consts::FRAC_PI_4,
            points: 101,
        }
    }
    pub fn delta_grid() -> GridSpec {
        GridSpec::Range {
            start: -2.0,
            stop: 2.0,
            points: 201,
        }
    }
    pub fn eta_grid() -> GridSpec {
        GridSpec::Range {
            start: 0.05,
            stop: 1.0,
            points: 30,
        }
    }
    pub fn num_events() -> usize {
        700
    }
    pub fn max_lag() -> usize {
        50
    }
    pub fn band_sigmas() -> f64 {
        3.0
    }
    pub fn runs_per_point() -> usize {
        20
    }
    pub fn kappa() -> f64 {
        0.1
    }
    pub fn restarts() -> usize {
        32
    }
}

/// A validated configuration together with its provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// SHA-256 of the merged settings, excluding the output section.
    pub hash: String,
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    from_str(&text, base_dir, overrides)
}

pub fn from_str(
    text: &str,
    base_dir: PathBuf,
    overrides: &Overrides,
) -> Result<LoadedConfig, CliError> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("config is not valid TOML: {e}")))?;
    for assignment in &overrides.set {
        apply_override(&mut table, assignment)?;
    }
    if let Some(seed) = overrides.seed {
        let seed = i64::try_from(seed)
            .map_err(|_| CliError::Config(format!("seed {seed} exceeds the TOML integer range")))?;
        apply_value(&mut table, "run.seed", Value::Integer(seed))?;
    }
    if let Some(out) = &overrides.out {
        apply_value(
            &mut table,
            "output.dir",
            Value::String(out.display().to_string()),
        )?;
    }

    let mut hashed = table.clone();
    hashed.remove("output");
    let canonical = toml::to_string(&hashed).map_err(|e| CliError::Config(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));

    let config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    let loaded = LoadedConfig {
        config,
        hash,
        base_dir,
    };
    loaded.validate()?;
    Ok(loaded)
}

fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!(
            "override `{assignment}` is not of the form key=value"
        ))
    })?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    apply_value(table, key.trim(), value)
}

fn apply_value(table: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override `{key}`: `{part}` is not a section"))
        })?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl LoadedConfig {
    fn validate(&self) -> Result<(), CliError> {
        self.atomic_params()?;
        self.cavity_params()?;
        let c = &self.config;
        if !(c.medium.intensity_ratio >= 0.0 && c.medium.intensity_ratio.is_finite()) {
            return Err(CliError::Config(format!(
                "medium.intensity_ratio = {}",
                c.medium.intensity_ratio
            )));
        }
        if !(c.cavity.pump > 0.0 && c.cavity.pump.is_finite()) {
            return Err(CliError::Config(format!(
                "cavity.pump must be positive, got {}",
                c.cavity.pump
            )));
        }
        if let Some(l) = c.medium.linewidth_ghz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::Config(format!(
                    "medium.linewidth_ghz must be positive, got {l}"
                )));
            }
        }
        if c.bistability.num_events == 0 {
            return Err(CliError::Config(
                "bistability.num_events must be positive".into(),
            ));
        }
        if c.bistability.band_sigmas.is_nan() || c.bistability.band_sigmas <= 0.0 {
            return Err(CliError::Config(
                "bistability.band_sigmas must be positive".into(),
            ));
        }
        if c.loss_sweep.runs_per_point == 0 {
            return Err(CliError::Config(
                "loss_sweep.runs_per_point must be positive".into(),
            ));
        }
        if let Some(ising) = &c.ising {
            if ising.restarts == 0 {
                return Err(CliError::Config("ising.restarts must be positive".into()));
            }
            if !(ising.kappa >= 0.0 && ising.kappa.is_finite()) {
                return Err(CliError::Config(format!(
                    "ising.kappa must be non-negative, got {}",
                    ising.kappa
                )));
            }
        }
        Ok(())
    }

    /// Medium parameters with Δ, Γ, γ as configured and the gain scale
    /// resolved. When `gl` is given, C is chosen so that the slope at the
    /// configured detuning equals it.
    pub fn atomic_params(&self) -> Result<AtomicParams, CliError> {
        let m = &self.config.medium;
        let base = match (m.delta, m.gamma_big, m.detuning) {
            (Some(delta), None, None) if m.gamma_small.is_none() => AtomicParams::from_detuning_ratio(delta, 1.0),
            (None, Some(g), Some(d)) => AtomicParams::new(g, m.gamma_small.unwrap_or(0.0), d, 1.0, 1.0, 1.0),
            (None, None, None) if m.gamma_small.is_none() => AtomicParams::from_detuning_ratio(0.1, 1.0),
            _ => {
                return Err(CliError::Config(
                    "medium: give either `delta` or `gamma_big` and `detuning` (with optional `gamma_small`)".into(),
                ))
            }
        }
        .map_err(|e| CliError::Config(format!("medium: {e}")))?;
        let c = match (m.gain_scale, m.gl) {
            (Some(c), None) => c,
            (None, gl) => {
                gain_scale_for(base.detuning_ratio(), m.intensity_ratio, gl.unwrap_or(1.0))
                    .map_err(|e| CliError::Config(format!("medium: {e}")))?
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "medium: set `gain_scale` or `gl`, not both".into(),
                ))
            }
        };
        let params = base.with_gain_scale(c);
        params
            .validate()
            .map_err(|e| CliError::Config(format!("medium: {e}")))?;
        Ok(params)
    }

    pub fn medium(&self) -> Result<Medium, CliError> {
        Medium::new(self.atomic_params()?, self.config.medium.intensity_ratio)
            .map_err(|e| CliError::Config(format!("medium: {e}")))
    }

    pub fn cavity_params(&self) -> Result<CavityParams, CliError> {
        let c = &self.config.cavity;
        let psi = match &c.psi {
            PsiSpec::Value(v) => *v,
            PsiSpec::Named(name) if name == "optimal" => optimal_phase(self.medium()?.gain()),
            PsiSpec::Named(name) => {
                return Err(CliError::Config(format!(
                    "cavity.psi must be a number or \"optimal\", got {name:?}"
                )))
            }
        };
        let noise_mode = match c.noise_mode.as_str() {
            "initial-seed" => NoiseMode::InitialSeed,
            "per-pass" => NoiseMode::PerPass,
            other => {
                return Err(CliError::Config(format!(
                    "cavity.noise_mode must be \"initial-seed\" or \"per-pass\", got {other:?}"
                )))
            }
        };
        let cav = CavityParams {
            eta: c.eta,
            psi,
            noise_sigma: c.noise_sigma,
            max_iters: c.max_iters,
            conv_tol: c.conv_tol,
            conv_window: c.conv_window,
            noise_mode,
        };
        cav.validate()
            .map_err(|e| CliError::Config(format!("cavity: {e}")))?;
        Ok(cav)
    }

    pub fn instance_path(&self) -> Option<PathBuf> {
        self.config
            .ising
            .as_ref()
            .map(|i| self.base_dir.join(&i.instance))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.config
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, set: &[&str]) -> Result<LoadedConfig, CliError> {
        let overrides = Overrides {
            set: set.iter().map(|s| s.to_string()).collect(),
            ..Overrides::default()
        };
        from_str(text, PathBuf::new(), &overrides)
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(
            parse("[medium]\ndelta = 0.1\n", &[]),
            Err(CliError::Config(_))
        ));
        assert_eq!(parse("[run]\nseed = 3\n", &[]).unwrap().config.run.seed, 3);
    }

    #[test]
    fn overrides_are_typed_and_hashed() {
        let base = parse("[run]\nseed = 3\n", &[]).unwrap();
        let changed = parse(
            "[run]\nseed = 3\n",
            &["cavity.eta=0.5", "cavity.psi=optimal"],
        )
        .unwrap();
        assert_eq!(changed.config.cavity.eta, 0.5);
        assert_ne!(base.hash, changed.hash);
        let grid = parse("[run]\nseed = 3\n", &["grids.eta=[0.2, 0.4]"]).unwrap();
        assert_eq!(grid.config.grids.eta.values("eta").unwrap(), vec![0.2, 0.4]);
    }

    #[test]
    fn output_dir_does_not_change_the_hash() {
        let a = parse("[run]\nseed = 3\n", &["output.dir=a"]).unwrap();
        let b = parse("[run]\nseed = 3\n", &["output.dir=b"]).unwrap();
        assert_eq!(a.hash, b.hash);
    }

    #[test]
    fn gain_can_be_given_as_slope() {
        let cfg = parse(
            "[run]\nseed = 1\n[medium]\ndelta = 0.1\nintensity_ratio = 10\ngl = 1.0\n",
            &[],
        )
        .unwrap();
        assert!((cfg.atomic_params().unwrap().gain_scale - 110.4).abs() < 1e-9);
        assert!(parse("[run]\nseed = 1\n[medium]\ngl = 1.0\ngain_scale = 3\n", &[]).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(parse("[run]\nseed = 1\n[cavity]\neta = 1.5\n", &[]).is_err());
        assert!(parse("[run]\nseed = 1\n[cavity]\npsi = \"best\"\n", &[]).is_err());
        assert!(parse("[run]\nseed = 1\n[unknown]\nx = 1\n", &[]).is_err());
        assert!(parse("[run]\nseed = 1\n", &["noequals"]).is_err());
        assert!(parse(
            "[run]\nseed = 1\n[ising]\ninstance = \"missing.txt\"\nrestarts = 0\n",
            &[]
        )
        .is_err());
        let empty = parse("[run]\nseed = 1\n[grids]\nepsilon = []\n", &[]).unwrap();
        assert!(empty.config.grids.epsilon.values("epsilon").is_err());
    }

    #[test]
    fn range_grids() {
        let g = GridSpec::Range {
            start: 0.0,
            stop: 1.0,
            points: 5,
        };
        assert_eq!(g.values("x").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let one = GridSpec::Range {
            start: 0.3,
            stop: 1.0,
            points: 1,
        };
        assert_eq!(one.values("x").unwrap(), vec![0.3]);
    }
}
