//! Nonparametric kernel estimators of survival functionals and of the
//! relative covariate effect `eta`.
//!
//! Every estimator is built from product-kernel weights around an evaluation
//! point `(x, y)`. Kernel sums are accumulated in data-index order, so
//! results are reproducible bit for bit and symmetric under relabeling the
//! covariates. Quantities whose denominator carries no kernel weight are
//! reported as undefined (`None`) rather than imputed.

mod data;
mod eta;
mod neighbors;
mod smoother;

pub use data::SurvivalData;
pub use eta::{EstimatorKind, EtaEstimate, GridSpec, TrimConfig, TrimMode, DEFAULT_DENOM_FLOOR};
pub use neighbors::Scratch;
pub use smoother::{CumulativeHazard, CurvePoint, KernelSmoother, LocalWeight, NwSums, SurvivalPoint};

use crate::error::{Error, Result};
use crate::kernels::KernelConfig;

fn check_point(x: f64, y: f64) -> Result<()> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("evaluation point must be finite, got ({x}, {y})")))
    }
}

fn curve_at(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<CurvePoint> {
    check_point(x, y)?;
    let sm = KernelSmoother::new(data, *k);
    let mut scratch = sm.scratch();
    Ok(sm.curves(x, y, &[t], &mut scratch)?[0])
}

fn nw_sums(data: &SurvivalData, x: f64, y: f64, k: &KernelConfig) -> Result<NwSums> {
    check_point(x, y)?;
    let sm = KernelSmoother::new(data, *k);
    let mut scratch = sm.scratch();
    Ok(sm.nw_sums(x, y, &mut scratch))
}

/// `sum 1(t_i = t) w_i / sum 1(t_i > t) w_i` at an observed time `t`.
///
/// Returns `None` when the risk set carries no kernel weight.
pub fn conditional_hazard(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    check_point(x, y)?;
    if data.distinct_times().binary_search_by(|v| v.total_cmp(&t)).is_err() {
        return Err(Error::Domain(format!("{t} is not an observed duration")));
    }
    let sm = KernelSmoother::new(data, *k);
    let mut scratch = sm.scratch();
    let (mut num, mut den) = (0.0, 0.0);
    sm.for_each_weight(x, y, &mut scratch, |_, lw| {
        if lw.t == t {
            num += lw.w;
        } else if lw.t > t {
            den += lw.w;
        }
    });
    Ok((den > 0.0).then(|| num / den))
}

/// Nelson-Aalen sum of [`conditional_hazard`] over observed times `<= t`.
pub fn nelson_aalen(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<CumulativeHazard> {
    let cp = curve_at(data, t, x, y, k)?;
    Ok(CumulativeHazard {
        value: cp.cum_hazard,
        undefined_terms: cp.undefined_terms,
    })
}

/// Term-wise x-derivative of [`nelson_aalen`].
pub fn nelson_aalen_deriv_x(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<CumulativeHazard> {
    let cp = curve_at(data, t, x, y, k)?;
    Ok(CumulativeHazard {
        value: cp.cum_hazard_dx,
        undefined_terms: cp.undefined_terms,
    })
}

/// Term-wise y-derivative of [`nelson_aalen`].
pub fn nelson_aalen_deriv_y(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<CumulativeHazard> {
    let cp = curve_at(data, t, x, y, k)?;
    Ok(CumulativeHazard {
        value: cp.cum_hazard_dy,
        undefined_terms: cp.undefined_terms,
    })
}

/// Kernel-weighted share of observations surviving past `t`.
pub fn survival_nw(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(curve_at(data, t, x, y, k)?.survival.map(|s| s.value))
}

pub fn survival_deriv_x(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(curve_at(data, t, x, y, k)?.survival.map(|s| s.deriv_x))
}

pub fn survival_deriv_y(data: &SurvivalData, t: f64, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(curve_at(data, t, x, y, k)?.survival.map(|s| s.deriv_y))
}

/// Nadaraya-Watson estimate of `E[T | x, y]`.
pub fn nw_mean(data: &SurvivalData, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(nw_sums(data, x, y, k)?.mean())
}

pub fn nw_mean_deriv_x(data: &SurvivalData, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(nw_sums(data, x, y, k)?.mean_deriv_x())
}

pub fn nw_mean_deriv_y(data: &SurvivalData, x: f64, y: f64, k: &KernelConfig) -> Result<Option<f64>> {
    Ok(nw_sums(data, x, y, k)?.mean_deriv_y())
}

pub fn eta_pi_bar(data: &SurvivalData, grid: &GridSpec, trim: &TrimConfig, k: &KernelConfig) -> Result<EtaEstimate> {
    KernelSmoother::new(data, *k).eta_pi_bar(grid, trim)
}

pub fn eta_lambda_bar(data: &SurvivalData, grid: &GridSpec, trim: &TrimConfig, k: &KernelConfig) -> Result<EtaEstimate> {
    KernelSmoother::new(data, *k).eta_lambda_bar(grid, trim)
}

pub fn eta_m_at(data: &SurvivalData, x: f64, y: f64, k: &KernelConfig) -> Result<EtaEstimate> {
    check_point(x, y)?;
    KernelSmoother::new(data, *k).eta_m_at(x, y)
}

pub fn eta_bar(data: &SurvivalData, k: &KernelConfig) -> Result<EtaEstimate> {
    KernelSmoother::new(data, *k).eta_bar()
}
