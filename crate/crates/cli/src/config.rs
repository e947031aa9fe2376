//! Declarative experiment configuration (JSON, camelCase keys) and its
//! resolution into concrete per-experiment settings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ris_pdpr::analysis::LambdaForm;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig1,
    Fig2,
    OptimizeRis,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::OptimizeRis => "optimize-ris",
            Experiment::Validate => "validate",
        }
    }

    fn default_output(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1.csv",
            Experiment::Fig2 => "fig2.csv",
            Experiment::OptimizeRis => "optimize-ris.json",
            Experiment::Validate => "validate.json",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Experiment::Fig1),
            "fig2" => Ok(Experiment::Fig2),
            "optimize-ris" => Ok(Experiment::OptimizeRis),
            "validate" => Ok(Experiment::Validate),
            other => Err(format!("unknown experiment '{other}' (expected fig1, fig2, optimize-ris or validate)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RisCorrelation {
    Isotropic,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoGrid {
    Auto,
}

/// `"auto"` or an evenly spaced `{min, max, points}` grid over `γ_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Auto(AutoGrid),
    Range { min: f64, max: f64, points: usize },
}

impl GridSpec {
    /// Auto grids use `γ_k = k·τ_c/320`, `k = 1..319`.
    pub fn values(&self, tau_c: u32) -> Vec<f64> {
        match *self {
            GridSpec::Auto(_) => (1..320).map(|k| k as f64 * tau_c as f64 / 320.0).collect(),
            GridSpec::Range { min, max, points } => {
                let step = (max - min) / (points - 1) as f64;
                (0..points).map(|k| if k + 1 == points { max } else { min + k as f64 * step }).collect()
            }
        }
    }
}

/// Raw configuration as read from disk; every field is optional and
/// defaults depend on the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub tau_c: Option<u32>,
    pub tau_c_list: Option<Vec<u32>>,
    pub snr_db: Option<f64>,
    pub zeta_nb_snr_db: Option<f64>,
    pub bs_rows: Option<usize>,
    pub bs_cols: Option<usize>,
    pub bs_spacing: Option<f64>,
    pub ris_rows: Option<usize>,
    pub ris_cols: Option<usize>,
    pub ris_spacing: Option<f64>,
    pub bs_azimuth: Option<f64>,
    pub bs_elevation: Option<f64>,
    pub ris_azimuth: Option<f64>,
    pub ris_elevation: Option<f64>,
    pub nr_list: Option<Vec<usize>>,
    pub gamma_p_grid: Option<GridSpec>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub restarts: Option<usize>,
    pub ris_correlation: Option<RisCorrelation>,
    pub lambda_form: Option<LambdaForm>,
    pub output_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const FIG1_NR_LIST: [usize; 3] = [16, 64, 256];
pub const FIG2_NR_LIST: [usize; 12] = [1, 4, 9, 16, 36, 64, 100, 144, 256, 400, 576, 1024];
/// Oblique arrival at the RIS; at broadside the all-ones start is already a
/// stationary point of the phase optimizer.
pub const DEFAULT_RIS_AZIMUTH: f64 = 0.5;
pub const DEFAULT_RIS_ELEVATION: f64 = 0.2;
pub const FIG2_TAU_C_LIST: [u32; 2] = [40, 160];

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Settings {
    pub experiment: Experiment,
    pub tau_c_list: Vec<u32>,
    pub snr_db: f64,
    pub zeta_nb_snr_db: f64,
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub bs_spacing: f64,
    pub ris_rows: usize,
    pub ris_cols: usize,
    pub ris_spacing: f64,
    pub bs_azimuth: f64,
    pub bs_elevation: f64,
    pub ris_azimuth: f64,
    pub ris_elevation: f64,
    pub nr_list: Vec<usize>,
    pub gamma_p_grid: GridSpec,
    pub trials: u64,
    pub seed: u64,
    /// `None` selects a tolerance relative to `trace(G)`.
    pub epsilon: Option<f64>,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub ris_correlation: RisCorrelation,
    pub lambda_form: LambdaForm,
    pub output_path: PathBuf,
    /// Keys that fell back to a built-in default.
    pub defaults_used: Vec<&'static str>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError { line: Some(e.line()), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::from_json(&text)?, text))
    }

    /// Applies defaults and validates. `source` is the config text, used to
    /// point errors at the offending key.
    pub fn resolve(&self, source: Option<&str>) -> Result<Settings, ConfigError> {
        let fail = |key: &str, message: String| ConfigError { line: source.and_then(|s| key_line(s, key)), message };
        let experiment = self
            .experiment
            .ok_or_else(|| ConfigError::new("no experiment given (set \"experiment\" or pass --experiment)"))?;
        let mut defaults = Vec::new();
        macro_rules! pick {
            ($field:ident, $key:literal, $default:expr) => {
                match self.$field.clone() {
                    Some(v) => v,
                    None => {
                        defaults.push($key);
                        $default
                    }
                }
            };
        }
        let fig2 = experiment == Experiment::Fig2;
        let tau_c_list = match (&self.tau_c_list, self.tau_c) {
            (Some(list), _) => list.clone(),
            (None, Some(t)) => vec![t],
            (None, None) => {
                defaults.push("tauCList");
                match experiment {
                    Experiment::Fig2 => FIG2_TAU_C_LIST.to_vec(),
                    Experiment::Validate => vec![40],
                    _ => vec![160],
                }
            }
        };
        let settings = Settings {
            experiment,
            tau_c_list,
            snr_db: pick!(snr_db, "snrDb", -10.0),
            zeta_nb_snr_db: pick!(zeta_nb_snr_db, "zetaNbSnrDb", 0.0),
            bs_rows: pick!(bs_rows, "bsRows", 2),
            bs_cols: pick!(bs_cols, "bsCols", 5),
            bs_spacing: pick!(bs_spacing, "bsSpacing", 0.5),
            ris_rows: pick!(ris_rows, "risRows", 4),
            ris_cols: pick!(ris_cols, "risCols", 4),
            ris_spacing: pick!(ris_spacing, "risSpacing", 1.0 / 7.0),
            bs_azimuth: pick!(bs_azimuth, "bsAzimuth", 0.0),
            bs_elevation: pick!(bs_elevation, "bsElevation", 0.0),
            ris_azimuth: pick!(ris_azimuth, "risAzimuth", DEFAULT_RIS_AZIMUTH),
            ris_elevation: pick!(ris_elevation, "risElevation", DEFAULT_RIS_ELEVATION),
            nr_list: pick!(nr_list, "nrList", if fig2 { FIG2_NR_LIST.to_vec() } else { FIG1_NR_LIST.to_vec() }),
            gamma_p_grid: pick!(gamma_p_grid, "gammaPGrid", GridSpec::Auto(AutoGrid::Auto)),
            trials: pick!(trials, "trials", 100_000),
            seed: pick!(seed, "seed", DEFAULT_SEED),
            epsilon: self.epsilon,
            max_sweeps: pick!(max_sweeps, "maxSweeps", ris_pdpr::risopt::DEFAULT_MAX_SWEEPS),
            restarts: pick!(restarts, "restarts", 1),
            ris_correlation: pick!(ris_correlation, "risCorrelation", RisCorrelation::Isotropic),
            lambda_form: pick!(
                lambda_form,
                "lambdaForm",
                if fig2 { LambdaForm::PerSymbol } else { LambdaForm::AsPrinted }
            ),
            output_path: pick!(output_path, "outputPath", PathBuf::from(experiment.default_output())),
            defaults_used: Vec::new(),
        };
        let settings = Settings { defaults_used: defaults, ..settings };
        settings.check(&fail)?;
        Ok(settings)
    }
}

impl Settings {
    fn check(&self, fail: &dyn Fn(&str, String) -> ConfigError) -> Result<(), ConfigError> {
        if self.tau_c_list.is_empty() {
            return Err(fail("tauCList", "tauCList is empty".into()));
        }
        if let Some(&t) = self.tau_c_list.iter().find(|&&t| t < 2) {
            let key = if t < 2 && self.tau_c_list.len() == 1 { "tauC" } else { "tauCList" };
            return Err(fail(key, format!("coherence interval must be at least 2 symbols, got {t}")));
        }
        if self.nr_list.is_empty() || self.nr_list.contains(&0) {
            return Err(fail("nrList", "nrList must be non-empty with entries >= 1".into()));
        }
        if let GridSpec::Range { min, max, points } = self.gamma_p_grid {
            let tau_min = *self.tau_c_list.iter().min().expect("non-empty");
            if !(min > 0.0) || !max.is_finite() {
                return Err(fail("gammaPGrid", format!("gammaPGrid.min must be > 0, got {min}")));
            }
            if !(max < tau_min as f64) {
                return Err(fail("gammaPGrid", format!("gammaPGrid.max must be < tauC = {tau_min}, got {max}")));
            }
            if points < 2 || !(min < max) {
                return Err(fail("gammaPGrid", "gammaPGrid needs min < max and at least 2 points".into()));
            }
        }
        for (key, v) in [("bsSpacing", self.bs_spacing), ("risSpacing", self.ris_spacing)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail(key, format!("{key} must be positive, got {v}")));
            }
        }
        for (key, v) in [("bsRows", self.bs_rows), ("bsCols", self.bs_cols), ("risRows", self.ris_rows), ("risCols", self.ris_cols)] {
            if v == 0 {
                return Err(fail(key, format!("{key} must be at least 1")));
            }
        }
        for (key, v) in [
            ("snrDb", self.snr_db),
            ("zetaNbSnrDb", self.zeta_nb_snr_db),
            ("bsAzimuth", self.bs_azimuth),
            ("bsElevation", self.bs_elevation),
            ("risAzimuth", self.ris_azimuth),
            ("risElevation", self.ris_elevation),
        ] {
            if !v.is_finite() {
                return Err(fail(key, format!("{key} must be finite")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(fail("epsilon", format!("epsilon must be positive, got {eps}")));
            }
        }
        if self.max_sweeps == 0 {
            return Err(fail("maxSweeps", "maxSweeps must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(fail("restarts", "restarts must be at least 1".into()));
        }
        if self.experiment == Experiment::Validate && self.trials < 2 {
            return Err(fail("trials", format!("validation needs at least 2 trials, got {}", self.trials)));
        }
        Ok(())
    }
}

/// 1-based line of the first occurrence of `"key"` in `source`.
fn key_line(source: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    source.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}
