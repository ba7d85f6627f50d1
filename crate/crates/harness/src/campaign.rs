//! Seeded Monte Carlo campaigns.
//!
//! Run `r` draws its data from `child_seed(master, r)`, so every run is a
//! pure function of the configuration and its index. Runs execute on the
//! rayon pool and are gathered in index order; thread count never changes
//! the output.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use releff_core::baselines::{coeff_ratio, fit_baseline, CensoredSample};
use releff_core::datagen::risk_share;
use releff_core::estimators::{KernelSmoother, SurvivalData};
use releff_core::kernels::KernelConfig;
use releff_core::seeding::child_seed;
use releff_core::stats::percentile_nearest_rank;
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, Dgp, Quantity};
use crate::error::Result;
use crate::estimate::select_bandwidth;

/// Share of failed runs above which a campaign is marked degraded.
pub const DEGRADED_SHARE: f64 = 0.2;

pub const PERCENTILE_METHOD: &str = "nearest-rank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub quantity: Quantity,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub bandwidth: Option<KernelConfig>,
    pub risk1_share: Option<f64>,
    pub estimates: Vec<Estimate>,
    pub errors: Vec<String>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn value(&self, q: Quantity) -> Option<f64> {
        self.estimates.iter().find(|e| e.quantity == q).and_then(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: Quantity,
    pub mean: Option<f64>,
    pub p5: Option<f64>,
    pub p95: Option<f64>,
    pub runs_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub percentile_method: String,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub failed_runs: usize,
    pub degraded: bool,
    /// Wall-clock time; not persisted so that saved results stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Mean and nearest-rank 5th/95th percentiles of each estimator over the
/// runs where it is defined.
pub fn summarize(estimators: &[Quantity], records: &[RunRecord]) -> Vec<SummaryRow> {
    estimators
        .iter()
        .map(|&q| {
            let values: Vec<f64> = records.iter().filter_map(|r| r.value(q)).collect();
            let pct = |p| percentile_nearest_rank(&values, p).ok();
            SummaryRow {
                estimator: q,
                mean: releff_core::stats::mean(&values),
                p5: pct(5.0),
                p95: pct(95.0),
                runs_used: values.len(),
            }
        })
        .collect()
}

/// One campaign run. Failures are recorded in the returned record.
pub fn run_once(config: &CampaignConfig, dgp: &Dgp, run: usize) -> RunRecord {
    let seed = child_seed(config.seed, run as u64);
    let mut record = RunRecord {
        run,
        seed,
        bandwidth: None,
        risk1_share: None,
        estimates: config.estimators.iter().map(|&q| Estimate { quantity: q, value: None }).collect(),
        errors: Vec::new(),
    };
    let obs = match dgp.sample(config.n, seed) {
        Ok(o) => o,
        Err(e) => {
            record.errors.push(format!("data: {e}"));
            return record;
        }
    };
    record.risk1_share = risk_share(&obs).ok();
    let data = match SurvivalData::from_observations(&obs) {
        Ok(d) => d,
        Err(e) => {
            record.errors.push(format!("data: {e}"));
            return record;
        }
    };

    let needs_kernel = config.estimators.iter().any(|q| q.baseline().is_none());
    let kernel = if needs_kernel {
        match select_bandwidth(&data, &config.bandwidth, child_seed(seed, 1)) {
            Ok((k, _)) => Some(k),
            Err(e) => {
                record.errors.push(format!("bandwidth: {e}"));
                None
            }
        }
    } else {
        None
    };
    record.bandwidth = kernel;
    let smoother = kernel.map(|k| KernelSmoother::new(&data, k));
    let censored = if config.estimators.iter().any(|q| q.baseline().is_some()) {
        CensoredSample::from_observations(&obs).map_err(|e| record.errors.push(format!("baselines: {e}"))).ok()
    } else {
        None
    };

    let trim = config.trim();
    for slot in &mut record.estimates {
        let q = slot.quantity;
        let value = match q.baseline() {
            Some(model) => match &censored {
                Some(cs) => fit_baseline(model, cs).and_then(|f| coeff_ratio(&f)),
                None => continue,
            },
            None => match &smoother {
                Some(sm) => match q {
                    Quantity::Eta => sm.eta_bar(),
                    Quantity::EtaPi => sm.eta_pi_bar(&config.grid, &trim),
                    Quantity::EtaLambda => sm.eta_lambda_bar(&config.grid, &trim),
                    Quantity::EtaM => {
                        let (xb, yb) = data.covariate_means();
                        sm.eta_m_at(xb, yb)
                    }
                    _ => unreachable!("baseline quantities handled above"),
                }
                .map(|e| e.value),
                None => continue,
            },
        };
        match value {
            Ok(v) => slot.value = Some(v),
            Err(e) => record.errors.push(format!("{q}: {e}")),
        }
    }
    record
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let start = Instant::now();
    let dgp = config.dgp.build()?;
    let records: Vec<RunRecord> = (0..config.runs).into_par_iter().map(|r| run_once(config, &dgp, r)).collect();
    let failed_runs = records.iter().filter(|r| r.failed()).count();
    Ok(CampaignResult {
        config: config.resolved(),
        percentile_method: PERCENTILE_METHOD.to_string(),
        summary: summarize(&config.estimators, &records),
        degraded: failed_runs as f64 > DEGRADED_SHARE * config.runs as f64,
        failed_runs,
        records,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(runs: usize, n: usize, estimators: &str) -> CampaignConfig {
        CampaignConfig::from_toml(&format!(
            r#"
seed = 11
runs = {runs}
n = {n}
estimators = {estimators}
[dgp]
kind = "single_index"
beta_x = 1.0
beta_y = 1.0
copula = {{ family = "clayton", tau = 0.5 }}
margin1 = {{ lambda = 0.5, shape = 1.0 }}
margin2 = {{ lambda = 1.0, shape = 1.0 }}
[bandwidth]
policy = "fixed"
h = 0.5
"#
        ))
        .unwrap()
    }

    #[test]
    fn records_follow_run_order_and_seeds() {
        let cfg = config(4, 300, r#"["eta", "eta_m", "cox"]"#);
        let res = run_campaign(&cfg).unwrap();
        assert_eq!(res.records.len(), 4);
        for (i, r) in res.records.iter().enumerate() {
            assert_eq!(r.run, i);
            assert_eq!(r.seed, child_seed(11, i as u64));
            assert_eq!(r.estimates.len(), 3);
        }
        assert_eq!(res.summary.len(), 3);
        assert_eq!(res.percentile_method, "nearest-rank");
    }

    #[test]
    fn a_single_run_is_reproducible() {
        let cfg = config(1, 400, r#"["eta", "eta_pi", "eta_lambda", "po"]"#);
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn summary_is_derivable_from_records() {
        let cfg = config(7, 300, r#"["eta", "cox"]"#);
        let res = run_campaign(&cfg).unwrap();
        assert_eq!(summarize(&cfg.estimators, &res.records), res.summary);
        let row = &res.summary[0];
        let mut v: Vec<f64> = res.records.iter().filter_map(|r| r.value(Quantity::Eta)).collect();
        v.sort_by(f64::total_cmp);
        // ceil(0.05 * 7) = 1 and ceil(0.95 * 7) = 7.
        assert_eq!(row.p5, Some(v[0]));
        assert_eq!(row.p95, Some(v[v.len() - 1]));
    }

    #[test]
    fn failing_runs_mark_the_campaign_degraded() {
        // A tiny bandwidth leaves most sample points without neighbours in
        // both directions, and trimming everything makes eta_pi fail.
        let mut cfg = config(5, 20, r#"["eta_pi"]"#);
        cfg.trim = Some(releff_core::estimators::TrimConfig::boundary_and_denominator(0.05, 0.06, 1e6).unwrap());
        let res = run_campaign(&cfg).unwrap();
        assert_eq!(res.failed_runs, 5);
        assert!(res.degraded);
        assert_eq!(res.summary[0].runs_used, 0);
        assert_eq!(res.summary[0].mean, None);
        assert!(res.records[0].errors[0].starts_with("eta_pi:"));
    }

    #[test]
    fn empty_estimator_set_runs() {
        let res = run_campaign(&config(2, 50, "[]")).unwrap();
        assert!(res.summary.is_empty());
        assert!(!res.degraded);
    }
}
