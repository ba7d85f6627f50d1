//! TOML configuration for campaigns and file estimation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use releff_core::baselines::BaselineModel;
use releff_core::copulas::{CopulaModel, Family};
use releff_core::datagen::{self, Observation, SingleIndexDgp, TwoHazardsDgp, WeibullMargin};
use releff_core::estimators::{GridSpec, TrimConfig};
use releff_core::inference::{CvConfig, PValueConvention};
use releff_core::kernels::KernelConfig;
use releff_core::oracle::OracleDesign;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Copula family with either Kendall's tau or the generator parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl CopulaSpec {
    pub fn build(&self) -> Result<CopulaModel> {
        match (self.tau, self.theta) {
            (Some(tau), None) => Ok(CopulaModel::from_tau(self.family, tau)?),
            (None, Some(theta)) => Ok(CopulaModel::new(self.family, theta)?),
            _ => Err(HarnessError::Config("copula needs exactly one of `tau` or `theta`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleIndexSpec {
    pub copula: CopulaSpec,
    pub margin1: WeibullMargin,
    pub margin2: WeibullMargin,
    pub beta_x: f64,
    pub beta_y: f64,
    #[serde(default)]
    pub beta_x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoHazardsSpec {
    pub copula: CopulaSpec,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpSpec {
    SingleIndex(SingleIndexSpec),
    TwoHazards(TwoHazardsSpec),
}

/// A validated data-generating process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    SingleIndex(SingleIndexDgp),
    TwoHazards(TwoHazardsDgp),
}

impl DgpSpec {
    pub fn build(&self) -> Result<Dgp> {
        match *self {
            DgpSpec::SingleIndex(s) => {
                let d = SingleIndexDgp {
                    margin1: s.margin1,
                    margin2: s.margin2,
                    beta_x: s.beta_x,
                    beta_y: s.beta_y,
                    beta_x2: s.beta_x2,
                    copula: s.copula.build()?,
                };
                d.validate()?;
                Ok(Dgp::SingleIndex(d))
            }
            DgpSpec::TwoHazards(s) => {
                let d = TwoHazardsDgp {
                    a1: s.a1,
                    b1: s.b1,
                    a2: s.a2,
                    b2: s.b2,
                    beta_x: s.beta_x,
                    beta_y: s.beta_y,
                    copula: s.copula.build()?,
                };
                d.validate()?;
                Ok(Dgp::TwoHazards(d))
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DgpSpec::SingleIndex(s) => s.copula.family,
            DgpSpec::TwoHazards(s) => s.copula.family,
        }
    }
}

impl Dgp {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Observation>> {
        Ok(match self {
            Dgp::SingleIndex(d) => datagen::sample_single_index(d, n, seed)?,
            Dgp::TwoHazards(d) => datagen::sample_two_hazards(d, n, seed)?,
        })
    }

    pub fn copula(&self) -> CopulaModel {
        match self {
            Dgp::SingleIndex(d) => d.copula,
            Dgp::TwoHazards(d) => d.copula,
        }
    }

    pub fn oracle_design(&self) -> OracleDesign {
        match self {
            Dgp::SingleIndex(d) => d.into(),
            Dgp::TwoHazards(d) => d.into(),
        }
    }
}

fn default_folds() -> usize {
    10
}

fn default_y_scale() -> f64 {
    1.0
}

/// Candidate bandwidths used when no grid is configured.
pub const DEFAULT_CV_GRID: [f64; 9] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.7, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthPolicy {
    Fixed {
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_y: Option<f64>,
    },
    Cv {
        grid: Vec<f64>,
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default = "default_y_scale")]
        y_scale: f64,
    },
}

impl BandwidthPolicy {
    pub fn cv(folds: usize) -> Self {
        BandwidthPolicy::Cv {
            grid: DEFAULT_CV_GRID.to_vec(),
            folds,
            y_scale: 1.0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BandwidthPolicy::Fixed { h, h_y } => {
                KernelConfig::new(*h, h_y.unwrap_or(*h))?;
            }
            BandwidthPolicy::Cv { .. } => {
                let cfg = self.cv_config(0).expect("cv policy");
                cfg.validate()?;
                if n < cfg.folds {
                    return Err(HarnessError::Config(format!("n = {n} is smaller than the {} folds", cfg.folds)));
                }
            }
        }
        Ok(())
    }

    pub fn cv_config(&self, seed: u64) -> Option<CvConfig> {
        match self {
            BandwidthPolicy::Cv { grid, folds, y_scale } => Some(CvConfig {
                folds: *folds,
                grid: grid.clone(),
                seed,
                y_scale: *y_scale,
            }),
            BandwidthPolicy::Fixed { .. } => None,
        }
    }
}

/// Quantities a campaign or report can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Eta,
    EtaPi,
    EtaLambda,
    EtaM,
    Cox,
    Aft,
    Po,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Eta,
        Quantity::EtaPi,
        Quantity::EtaLambda,
        Quantity::EtaM,
        Quantity::Cox,
        Quantity::Aft,
        Quantity::Po,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Eta => "eta",
            Quantity::EtaPi => "eta_pi",
            Quantity::EtaLambda => "eta_lambda",
            Quantity::EtaM => "eta_m",
            Quantity::Cox => "cox",
            Quantity::Aft => "aft",
            Quantity::Po => "po",
        }
    }

    pub fn baseline(self) -> Option<BaselineModel> {
        match self {
            Quantity::Cox => Some(BaselineModel::Cox),
            Quantity::Aft => Some(BaselineModel::Aft),
            Quantity::Po => Some(BaselineModel::Po),
            _ => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Quantity {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub runs: usize,
    pub n: usize,
    pub dgp: DgpSpec,
    pub bandwidth: BandwidthPolicy,
    pub estimators: Vec<Quantity>,
    #[serde(default)]
    pub grid: GridSpec,
    /// Defaults to boundary-and-denominator trimming for the copula family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim: Option<TrimConfig>,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        self.dgp.build()?;
        self.bandwidth.validate(self.n)?;
        self.grid.validate()?;
        self.trim().validate()?;
        let mut seen = self.estimators.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("estimators are listed more than once".into()));
        }
        Ok(())
    }

    pub fn trim(&self) -> TrimConfig {
        self.trim.unwrap_or_else(|| TrimConfig::default_for(self.dgp.family()))
    }

    /// The configuration with every default made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            trim: Some(self.trim()),
            ..self.clone()
        }
    }

    pub fn explain(&self) -> Result<String> {
        toml::to_string_pretty(&self.resolved()).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

fn default_replicates() -> usize {
    400
}

fn default_estimate_bandwidth() -> BandwidthPolicy {
    BandwidthPolicy::cv(5)
}

/// Options of the file estimation workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateOptions {
    #[serde(default = "default_estimate_bandwidth")]
    pub bandwidth: BandwidthPolicy,
    #[serde(default)]
    pub models: Vec<BaselineModel>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: PValueConvention,
    /// Skip the bootstrap and report only the point estimates.
    #[serde(default)]
    pub skip_tests: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            bandwidth: default_estimate_bandwidth(),
            models: Vec::new(),
            replicates: default_replicates(),
            seed: 0,
            convention: PValueConvention::Centered,
            skip_tests: false,
        }
    }
}

impl EstimateOptions {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn explain(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
seed = 7
runs = 3
n = 500
estimators = ["eta", "cox"]

[dgp]
kind = "single_index"
beta_x = 1.0
beta_y = 1.0
copula = { family = "gumbel", tau = 0.1 }
margin1 = { lambda = 0.5, shape = 1.0 }
margin2 = { lambda = 1.0, shape = 1.0 }

[bandwidth]
policy = "fixed"
h = 0.2
"#;

    #[test]
    fn parses_and_resolves_defaults() {
        let cfg = CampaignConfig::from_toml(TABLE1).unwrap();
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.trim(), TrimConfig::default_for(Family::Gumbel));
        let explained = cfg.explain().unwrap();
        let back = CampaignConfig::from_toml(&explained).unwrap();
        assert_eq!(back, cfg.resolved());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = TABLE1.replace("runs = 3", "runs = 3\nrusn = 4");
        assert!(CampaignConfig::from_toml(&bad).is_err());
        let bad = TABLE1.replace("h = 0.2", "h = 0.2\nwidth = 1");
        assert!(CampaignConfig::from_toml(&bad).is_err());
        let bad = TABLE1.replace("beta_y = 1.0", "beta_y = 1.0\nbeta_z = 1.0");
        assert!(CampaignConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("runs = 3", "runs = 0"),
            ("h = 0.2", "h = -0.2"),
            ("tau = 0.1", "tau = 1.5"),
            ("tau = 0.1", "tau = 0.1, theta = 2.0"),
            ("estimators = [\"eta\", \"cox\"]", "estimators = [\"eta\", \"eta\"]"),
            ("lambda = 0.5", "lambda = 0.0"),
        ] {
            let bad = TABLE1.replace(from, to);
            assert!(CampaignConfig::from_toml(&bad).is_err(), "{to}");
        }
    }

    #[test]
    fn cv_policy_defaults() {
        let text = TABLE1.replace("policy = \"fixed\"\nh = 0.2", "policy = \"cv\"\ngrid = [0.2, 0.4]");
        let cfg = CampaignConfig::from_toml(&text).unwrap();
        let cv = cfg.bandwidth.cv_config(3).unwrap();
        assert_eq!((cv.folds, cv.y_scale, cv.seed), (10, 1.0, 3));
    }

    #[test]
    fn two_hazards_design_parses() {
        let text = r#"
seed = 1
runs = 1
n = 100
estimators = ["po"]
[dgp]
kind = "two_hazards"
a1 = 1.0
b1 = 1.0
a2 = 0.5
b2 = 1.0
beta_x = 1.0
beta_y = 1.0
copula = { family = "clayton", tau = 0.8 }
[bandwidth]
policy = "fixed"
h = 0.3
"#;
        let cfg = CampaignConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.dgp.build().unwrap(), Dgp::TwoHazards(_)));
    }

    #[test]
    fn quantities_round_trip_through_labels() {
        for q in Quantity::ALL {
            assert_eq!(q.label().parse::<Quantity>().unwrap(), q);
        }
        assert!("beta".parse::<Quantity>().is_err());
    }

    #[test]
    fn estimate_options_defaults() {
        let o = EstimateOptions::from_toml("models = [\"cox\", \"po\"]").unwrap();
        assert_eq!(o.replicates, 400);
        assert_eq!(o.bandwidth, BandwidthPolicy::cv(5));
        assert_eq!(EstimateOptions::from_toml(&o.explain().unwrap()).unwrap(), o);
    }
}
