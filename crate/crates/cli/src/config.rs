use std::path::PathBuf;

use loewner_core::drivers::{BuiltinFunctional, DriverSpecFile, SlopeSpec};
use loewner_core::flow::FlowConfig;
use loewner_core::pathint::RepresentationForm;
use loewner_core::trace::{ContinuityConfig, TraceConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Gen,
    Solve,
    Trace,
    Qv,
    Represent,
    VerifyCm,
    VerifyKeyest,
    VerifyKey1,
    McMoment,
    MomentofF,
    Tail,
    Continuity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Gen => "gen",
            Experiment::Solve => "solve",
            Experiment::Trace => "trace",
            Experiment::Qv => "qv",
            Experiment::Represent => "represent",
            Experiment::VerifyCm => "verify-cm",
            Experiment::VerifyKeyest => "verify-keyest",
            Experiment::VerifyKey1 => "verify-key1",
            Experiment::McMoment => "mc-moment",
            Experiment::MomentofF => "momentof-f",
            Experiment::Tail => "tail",
            Experiment::Continuity => "continuity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub base: u64,
    pub count: u64,
}

/// One experiment. Every field but `experiment` has a default; the report
/// embeds the config with all defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Inline driver spec.
    #[serde(default)]
    pub driver: Option<DriverSpecFile>,
    /// Driver CSV (`t,u`), resolved relative to the config file.
    #[serde(default)]
    pub driver_file: Option<PathBuf>,
    /// Names from the built-in corpus.
    #[serde(default)]
    pub corpus: Option<Vec<String>>,
    /// Overrides the grid size of spec and corpus drivers.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub continuity: ContinuityConfig,
    #[serde(default = "default_max_levels")]
    pub max_levels: usize,
    /// Diffusivity for the estimate constants.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    #[serde(default = "default_ys")]
    pub ys: Vec<f64>,
    #[serde(default = "default_xs")]
    pub xs: Vec<f64>,
    /// Cone rays `x = r y` for the finer bound.
    #[serde(default = "default_rays")]
    pub rays: Vec<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub seeds: Option<SeedSpec>,
    /// Share of random samples that must pass a pathwise check.
    #[serde(default = "default_required_fraction")]
    pub required_fraction: f64,
    #[serde(default)]
    pub form: RepresentationForm,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_b_target")]
    pub b_target: f64,
    /// Inclusive range of dyadic levels `m` for the tail table.
    #[serde(default = "default_levels")]
    pub levels: [u32; 2],
    #[serde(default)]
    pub functional: Option<BuiltinFunctional>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
    /// Grid steps for the functional moment.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Upper limit for the max/min ratio of moments across `y`; `null` disables the check.
    #[serde(default = "default_y_ratio_max")]
    pub y_ratio_max: Option<f64>,
    /// Upper limit for the top-decile share of the functional moment; `null` disables the check.
    #[serde(default)]
    pub top_share_max: Option<f64>,
    /// Perturbation added with each of `scales` for the continuity ladder.
    #[serde(default = "default_perturbation")]
    pub perturbation: SlopeSpec,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// p-variation exponent and self-intersection separation for trace regularity.
    #[serde(default = "default_pvar")]
    pub pvar: f64,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub plot: bool,
}

fn default_max_levels() -> usize {
    6
}
fn default_ts() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_ys() -> Vec<f64> {
    vec![1.0, 0.1, 0.01]
}
fn default_xs() -> Vec<f64> {
    vec![0.0]
}
fn default_rays() -> Vec<f64> {
    loewner_core::verify::CONE_RAYS.to_vec()
}
fn default_slack() -> f64 {
    1e-3
}
fn default_required_fraction() -> f64 {
    0.95
}
fn default_theta() -> f64 {
    0.9
}
fn default_b_target() -> f64 {
    2.5
}
fn default_levels() -> [u32; 2] {
    [2, 7]
}
fn default_horizons() -> Vec<f64> {
    vec![0.25]
}
fn default_steps() -> usize {
    1024
}
fn default_y_ratio_max() -> Option<f64> {
    Some(3.0)
}
fn default_perturbation() -> SlopeSpec {
    SlopeSpec { slopes: vec![1.0, -1.0] }
}
fn default_scales() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_pvar() -> f64 {
    1.5
}
fn default_separation() -> f64 {
    1.0 / 64.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let sources = self.driver.is_some() as u8 + self.driver_file.is_some() as u8 + self.corpus.is_some() as u8;
        if sources > 1 {
            return bad("give at most one of driver, driver_file, corpus");
        }
        if let Some(k) = self.kappa {
            loewner_core::verify::constants_for_kappa(k)?;
        }
        if self.ts.is_empty() || self.ys.is_empty() {
            return bad("ts and ys must be non-empty");
        }
        if self.ys.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
            return bad("ys must be positive");
        }
        if !(self.slack >= 0.0 && self.slack < 1.0) {
            return bad("slack must lie in [0, 1)");
        }
        if !(self.required_fraction > 0.0 && self.required_fraction <= 1.0) {
            return bad("required_fraction must lie in (0, 1]");
        }
        if self.levels[0] > self.levels[1] {
            return bad("levels must be [lo, hi] with lo <= hi");
        }
        if let Some(s) = self.seeds {
            if s.count == 0 {
                return bad("seeds.count must be >= 1");
            }
        }
        self.flow.validate()?;
        self.trace.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"trace"}"#).unwrap();
        assert_eq!(c.max_levels, 6);
        assert_eq!(c.ys, vec![1.0, 0.1, 0.01]);
    }

    #[test]
    fn unknown_fields_and_bad_kappa_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment":"trace","bogus":1}"#).is_err());
        let e = ExperimentConfig::from_json(r#"{"experiment":"verify-key1","kappa":3}"#).unwrap_err();
        assert!(e.to_string().contains("kappa must be < 2"));
    }
}
