//! Bandwidth selection by k-fold cross-validation and the bootstrap test of
//! a single-index model against the nonparametric `eta`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{coeff_ratio, fit_baseline, BaselineModel, CensoredSample};
use crate::datagen::Observation;
use crate::error::{Error, Result};
use crate::estimators::{KernelSmoother, SurvivalData};
use crate::kernels::KernelConfig;
use crate::seeding::stream_rng;

fn default_y_scale() -> f64 {
    1.0
}

/// Cross-validation setup. Candidate `h` is applied as `h_x = h`,
/// `h_y = h * y_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_y_scale")]
    pub y_scale: f64,
}

impl CvConfig {
    pub fn new(folds: usize, grid: Vec<f64>, seed: u64) -> Self {
        Self {
            folds,
            grid,
            seed,
            y_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {}", self.folds)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("bandwidth grid is empty".into()));
        }
        if let Some(h) = self.grid.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::Config(format!("bandwidth candidates must be positive and finite, got {h}")));
        }
        if !(self.y_scale.is_finite() && self.y_scale > 0.0) {
            return Err(Error::Config(format!("y_scale must be positive, got {}", self.y_scale)));
        }
        Ok(())
    }

    pub fn kernel(&self, h: f64) -> Result<KernelConfig> {
        KernelConfig::new(h, h * self.y_scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub h: f64,
    /// Mean out-of-fold squared error including penalties.
    pub score: f64,
    /// Held-out points whose prediction was undefined.
    pub undefined: usize,
    /// Folds on which every held-out prediction was undefined.
    pub empty_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub selected: f64,
    pub kernel: KernelConfig,
    pub folds: usize,
    /// Candidates in ascending order of `h`.
    pub scores: Vec<CandidateScore>,
}

/// Fold label of each observation: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, 0));
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    label
}

fn population_variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

struct FoldOutcome {
    sse: f64,
    undefined: usize,
    held_out: usize,
}

/// Selects the candidate bandwidth minimizing out-of-fold squared error of
/// the Nadaraya-Watson mean of `t`.
///
/// A held-out point with an undefined prediction costs the variance of its
/// fold's durations. Ties go to the smaller bandwidth.
pub fn cv_bandwidth(data: &SurvivalData, config: &CvConfig) -> Result<CvReport> {
    config.validate()?;
    let n = data.len();
    if n < config.folds {
        return Err(Error::Config(format!("{} folds need at least as many observations, got {n}", config.folds)));
    }
    let mut grid = config.grid.clone();
    grid.sort_by(f64::total_cmp);
    let kernels = grid.iter().map(|&h| config.kernel(h)).collect::<Result<Vec<_>>>()?;

    let label = fold_assignment(n, config.folds, config.seed);
    let mut splits = Vec::with_capacity(config.folds);
    for f in 0..config.folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| label[i] != f);
        let train = data.subset(&train)?;
        let test_t: Vec<f64> = test.iter().map(|&i| data.t()[i]).collect();
        let penalty = population_variance(&test_t);
        splits.push((train, test, penalty));
    }

    let jobs: Vec<(usize, usize)> = (0..config.folds).flat_map(|f| (0..grid.len()).map(move |c| (f, c))).collect();
    let outcomes: Vec<FoldOutcome> = jobs
        .par_iter()
        .map(|&(f, c)| {
            let (train, test, penalty) = &splits[f];
            let sm = KernelSmoother::new(train, kernels[c]);
            let mut scratch = sm.scratch();
            let mut out = FoldOutcome {
                sse: 0.0,
                undefined: 0,
                held_out: test.len(),
            };
            for &i in test {
                match sm.nw_sums(data.x()[i], data.y()[i], &mut scratch).mean() {
                    Some(m) => out.sse += (data.t()[i] - m) * (data.t()[i] - m),
                    None => {
                        out.sse += penalty;
                        out.undefined += 1;
                    }
                }
            }
            out
        })
        .collect();

    let mut scores: Vec<CandidateScore> = grid
        .iter()
        .map(|&h| CandidateScore {
            h,
            score: 0.0,
            undefined: 0,
            empty_folds: 0,
        })
        .collect();
    for (&(_, c), o) in jobs.iter().zip(&outcomes) {
        scores[c].score += o.sse;
        scores[c].undefined += o.undefined;
        if o.undefined == o.held_out {
            scores[c].empty_folds += 1;
        }
    }
    for s in &mut scores {
        s.score /= n as f64;
    }

    for f in 0..config.folds {
        let all_empty = (0..grid.len()).all(|c| {
            let o = &outcomes[f * grid.len() + c];
            o.undefined == o.held_out
        });
        if all_empty {
            let diag: Vec<String> = scores
                .iter()
                .map(|s| format!("h={}: {} undefined, {} empty folds", s.h, s.undefined, s.empty_folds))
                .collect();
            return Err(Error::Estimation(format!(
                "bandwidth selection failed: every candidate is undefined on fold {f} ({})",
                diag.join("; ")
            )));
        }
    }

    let mut best = 0;
    for c in 1..scores.len() {
        if scores[c].score < scores[best].score {
            best = c;
        }
    }
    Ok(CvReport {
        selected: grid[best],
        kernel: kernels[best],
        folds: config.folds,
        scores,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueConvention {
    /// Share of replicates with `|D* - D| >= |D|`.
    #[default]
    Centered,
    /// `2 min(#{D* <= 0}, #{D* >= 0}) / B'`, capped at 1.
    BasicPercentile,
}

impl std::str::FromStr for PValueConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "centered" => Ok(Self::Centered),
            "basic_percentile" | "basic" => Ok(Self::BasicPercentile),
            other => Err(Error::Config(format!("unknown p-value convention '{other}'"))),
        }
    }
}

pub fn p_value(observed: f64, replicates: &[f64], convention: PValueConvention) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::Estimation("p-value needs at least one replicate".into()));
    }
    let b = replicates.len() as f64;
    let p = match convention {
        PValueConvention::Centered => {
            let a = observed.abs();
            replicates.iter().filter(|d| (**d - observed).abs() >= a).count() as f64 / b
        }
        PValueConvention::BasicPercentile => {
            let lo = replicates.iter().filter(|d| **d <= 0.0).count();
            let hi = replicates.iter().filter(|d| **d >= 0.0).count();
            (2.0 * lo.min(hi) as f64 / b).min(1.0)
        }
    };
    Ok(p)
}

/// Maximum share of failed replicates before the test itself fails.
pub const MAX_FAILURE_SHARE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub convention: PValueConvention,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            convention: PValueConvention::Centered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub convention: PValueConvention,
    /// Successful replicates.
    pub replicates: usize,
    pub failed: usize,
    pub requested: usize,
    /// Replicate statistics in replicate order, failures omitted.
    pub boot_stats: Vec<f64>,
}

/// Row indices of bootstrap replicate `b`.
pub fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = stream_rng(seed, b as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap of a statistic computed from resampled row indices.
pub fn bootstrap<F>(n: usize, observed: f64, config: &BootstrapConfig, statistic: F) -> Result<TestResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if config.replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    if n == 0 {
        return Err(Error::Domain("bootstrap of an empty sample".into()));
    }
    if !observed.is_finite() {
        return Err(Error::Estimation(format!("observed statistic is not finite: {observed}")));
    }
    let draws: Vec<Result<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| {
            let idx = resample_indices(n, config.seed, b);
            statistic(&idx).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Estimation(format!("replicate {b} is not finite")))
                }
            })
        })
        .collect();
    let mut boot_stats = Vec::with_capacity(draws.len());
    let mut first_error = None;
    for d in draws {
        match d {
            Ok(v) => boot_stats.push(v),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let failed = config.replicates - boot_stats.len();
    if failed as f64 > MAX_FAILURE_SHARE * config.replicates as f64 {
        return Err(Error::Estimation(format!(
            "{failed} of {} bootstrap replicates failed; first failure: {}",
            config.replicates,
            first_error.map(|e| e.to_string()).unwrap_or_default()
        )));
    }
    Ok(TestResult {
        statistic: observed,
        p_value: p_value(observed, &boot_stats, config.convention)?,
        convention: config.convention,
        replicates: boot_stats.len(),
        failed,
        requested: config.replicates,
        boot_stats,
    })
}

fn eta_of(obs: &[Observation], k: &KernelConfig) -> Result<f64> {
    let data = SurvivalData::from_observations(obs)?;
    Ok(KernelSmoother::new(&data, *k).eta_bar()?.value)
}

/// Bootstrap test of `eta - reference` where `reference` is recomputed on
/// each resample with the same bandwidth.
pub fn bootstrap_difference_test<R>(obs: &[Observation], k: &KernelConfig, config: &BootstrapConfig, reference: R) -> Result<TestResult>
where
    R: Fn(&[Observation]) -> Result<f64> + Sync,
{
    let stat = |sample: &[Observation]| -> Result<f64> { Ok(eta_of(sample, k)? - reference(sample)?) };
    let observed = stat(obs)?;
    bootstrap(obs.len(), observed, config, |idx| {
        let sample: Vec<Observation> = idx.iter().map(|&i| obs[i]).collect();
        stat(&sample)
    })
}

/// Ratio `beta_x / beta_y` of a baseline fitted to observations, with
/// risk 1 as the event and risk 2 as censoring.
pub fn baseline_ratio(model: BaselineModel, obs: &[Observation]) -> Result<f64> {
    coeff_ratio(&fit_baseline(model, &CensoredSample::from_observations(obs)?)?)
}

/// Bootstrap specification test of `eta` against the coefficient ratio of
/// a single-index baseline. Rows are resampled jointly.
pub fn bootstrap_spec_test(obs: &[Observation], model: BaselineModel, k: &KernelConfig, config: &BootstrapConfig) -> Result<TestResult> {
    baseline_ratio(model, obs)?;
    bootstrap_difference_test(obs, k, config, |s| baseline_ratio(model, s))
}
