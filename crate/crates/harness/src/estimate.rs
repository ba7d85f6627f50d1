//! Estimation and specification tests on a single dataset.

use std::fmt::Write as _;
use std::path::Path;

use releff_core::baselines::{coeff_ratio, fit_baseline, BaselineModel, CensoredSample, RegressionFit};
use releff_core::datagen::risk_share;
use releff_core::estimators::{eta_bar, EtaEstimate, SurvivalData};
use releff_core::inference::{bootstrap_spec_test, cv_bandwidth, BootstrapConfig, CvReport, PValueConvention, TestResult};
use releff_core::kernels::KernelConfig;
use releff_core::seeding::child_seed;
use serde::{Deserialize, Serialize};

use crate::config::{BandwidthPolicy, EstimateOptions};
use crate::emit::Format;
use crate::error::{HarnessError, Result};
use crate::io::{read_dataset_file, Dataset};

/// Applies a bandwidth policy; the cross-validation report is returned when one was run.
pub fn select_bandwidth(data: &SurvivalData, policy: &BandwidthPolicy, seed: u64) -> Result<(KernelConfig, Option<CvReport>)> {
    match policy {
        BandwidthPolicy::Fixed { h, h_y } => Ok((KernelConfig::new(*h, h_y.unwrap_or(*h))?, None)),
        BandwidthPolicy::Cv { .. } => {
            let cfg = policy.cv_config(seed).expect("cv policy");
            let report = cv_bandwidth(data, &cfg)?;
            Ok((report.kernel, Some(report)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub convention: PValueConvention,
    pub replicates: usize,
    pub failed: usize,
    pub requested: usize,
    /// Standard deviation of the replicate statistics.
    pub boot_sd: f64,
}

impl From<&TestResult> for TestSummary {
    fn from(r: &TestResult) -> Self {
        Self {
            statistic: r.statistic,
            p_value: r.p_value,
            convention: r.convention,
            replicates: r.replicates,
            failed: r.failed,
            requested: r.requested,
            boot_sd: releff_core::stats::variance(&r.boot_stats).map_or(f64::NAN, f64::sqrt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: BaselineModel,
    pub ratio: f64,
    pub fit: RegressionFit,
    pub test: Option<TestSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n: usize,
    pub risk1_share: Option<f64>,
    pub bandwidth: KernelConfig,
    pub cv: Option<CvReport>,
    pub eta: EtaEstimate,
    pub models: Vec<ModelReport>,
    pub options: EstimateOptions,
}

/// Bandwidth selection, `eta_bar`, baseline ratios and one bootstrap
/// specification test per requested model.
///
/// The bandwidth is chosen with `options.seed`; all models share the
/// bootstrap resamples drawn from `child_seed(options.seed, 1)`.
pub fn estimate_dataset(ds: &Dataset, options: &EstimateOptions) -> Result<EstimateReport> {
    let obs = if options.models.is_empty() { None } else { Some(ds.observations()?) };
    if !options.skip_tests && !options.models.is_empty() && options.replicates == 0 {
        return Err(HarnessError::Config("replicates must be at least 1".into()));
    }
    let data = ds.survival_data()?;
    options.bandwidth.validate(data.len())?;
    let (kernel, cv) = select_bandwidth(&data, &options.bandwidth, options.seed)?;
    let eta = eta_bar(&data, &kernel)?;

    let mut models = Vec::with_capacity(options.models.len());
    if let Some(obs) = &obs {
        let sample = CensoredSample::from_observations(obs)?;
        let boot = BootstrapConfig {
            convention: options.convention,
            ..BootstrapConfig::new(options.replicates, child_seed(options.seed, 1))
        };
        for &model in &options.models {
            let fit = fit_baseline(model, &sample)?;
            let ratio = coeff_ratio(&fit)?;
            let test = if options.skip_tests {
                None
            } else {
                Some(TestSummary::from(&bootstrap_spec_test(obs, model, &kernel, &boot)?))
            };
            models.push(ModelReport { model, ratio, fit, test });
        }
    }
    Ok(EstimateReport {
        n: data.len(),
        risk1_share: obs.as_deref().and_then(|o| risk_share(o).ok()),
        bandwidth: kernel,
        cv,
        eta,
        models,
        options: options.clone(),
    })
}

pub fn estimate_file(path: &Path, options: &EstimateOptions) -> Result<EstimateReport> {
    estimate_dataset(&read_dataset_file(path)?, options)
}

pub fn render_report(report: &EstimateReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Text => Ok(report_text(report)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "value", "statistic", "p_value", "replicates"])?;
            w.write_record(["eta", &report.eta.value.to_string(), "", "", ""])?;
            for m in &report.models {
                let (stat, p, reps) = m.test.as_ref().map_or((String::new(), String::new(), String::new()), |t| {
                    (t.statistic.to_string(), t.p_value.to_string(), t.replicates.to_string())
                });
                w.write_record([m.model.label(), &m.ratio.to_string(), &stat, &p, &reps])?;
            }
            let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn report_text(r: &EstimateReport) -> String {
    let mut out = String::new();
    write!(out, "observations          {}", r.n).unwrap();
    if let Some(s) = r.risk1_share {
        write!(out, " (risk-1 share {s:.4})").unwrap();
    }
    writeln!(out).unwrap();
    let how = match &r.cv {
        Some(cv) => format!("{}-fold cross-validation", cv.folds),
        None => "fixed".to_string(),
    };
    writeln!(out, "bandwidth             h_x = {}, h_y = {} ({how})", r.bandwidth.h_x, r.bandwidth.h_y).unwrap();
    writeln!(out, "eta_hat               {:.6} ({} sample points)", r.eta.value, r.eta.n_grid_used).unwrap();
    if r.models.is_empty() {
        return out;
    }
    writeln!(out, "\n{:<8}{:>12}{:>14}{:>10}{:>12}", "model", "ratio", "eta - ratio", "p-value", "replicates").unwrap();
    for m in &r.models {
        write!(out, "{:<8}{:>12.6}", m.model.label(), m.ratio).unwrap();
        match &m.test {
            Some(t) => writeln!(out, "{:>14.6}{:>10.4}{:>12}", t.statistic, t.p_value, t.replicates).unwrap(),
            None => writeln!(out).unwrap(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use releff_core::copulas::{CopulaModel, Family};
    use releff_core::datagen::{sample_single_index, SingleIndexDgp, WeibullMargin};

    fn dataset(n: usize, seed: u64) -> Dataset {
        let dgp = SingleIndexDgp {
            copula: CopulaModel::from_tau(Family::Clayton, 0.5).unwrap(),
            margin1: WeibullMargin::new(0.5, 1.0).unwrap(),
            margin2: WeibullMargin::new(1.0, 1.0).unwrap(),
            beta_x: 1.0,
            beta_y: 1.0,
            beta_x2: 0.0,
        };
        Dataset::from(sample_single_index(&dgp, n, seed).unwrap().as_slice())
    }

    #[test]
    fn missing_delta_with_models_is_a_config_error() {
        let mut ds = dataset(200, 1);
        ds.delta = None;
        let opts = EstimateOptions {
            models: vec![BaselineModel::Cox],
            ..EstimateOptions::default()
        };
        assert!(matches!(estimate_dataset(&ds, &opts), Err(HarnessError::Config(_))));
        let opts = EstimateOptions {
            bandwidth: BandwidthPolicy::Fixed { h: 0.5, h_y: None },
            ..EstimateOptions::default()
        };
        assert!(estimate_dataset(&ds, &opts).is_ok());
    }

    #[test]
    fn report_covers_every_requested_model() {
        let ds = dataset(400, 2);
        let opts = EstimateOptions {
            models: vec![BaselineModel::Cox, BaselineModel::Po],
            replicates: 20,
            seed: 5,
            ..EstimateOptions::default()
        };
        let r = estimate_dataset(&ds, &opts).unwrap();
        assert_eq!(r.models.len(), 2);
        assert!(r.cv.is_some());
        for m in &r.models {
            let t = m.test.as_ref().unwrap();
            assert!((t.statistic - (r.eta.value - m.ratio)).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&t.p_value));
            assert_eq!(t.requested, 20);
        }
        for f in [Format::Text, Format::Csv, Format::Json] {
            assert!(!render_report(&r, f).unwrap().is_empty());
        }
        let back: EstimateReport = serde_json::from_str(&render_report(&r, Format::Json).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn skip_tests_omits_bootstrap() {
        let ds = dataset(300, 3);
        let opts = EstimateOptions {
            models: vec![BaselineModel::Aft],
            skip_tests: true,
            bandwidth: BandwidthPolicy::Fixed { h: 0.5, h_y: None },
            ..EstimateOptions::default()
        };
        let r = estimate_dataset(&ds, &opts).unwrap();
        assert!(r.models[0].test.is_none());
        assert!(r.cv.is_none());
    }
}
