use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::Family;
use crate::error::{Error, Result};
use crate::kernels::Kernel;

use super::smoother::{CurvePoint, KernelSmoother};

/// Equidistant time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub g: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            t_min: 0.04,
            t_max: 3.55,
            g: 500,
        }
    }
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, g: usize) -> Result<Self> {
        let spec = Self { t_min, t_max, g };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) || self.g < 2 {
            return Err(Error::Config(format!(
                "grid needs 0 < t_min < t_max and at least 2 points, got [{}, {}] with {}",
                self.t_min, self.t_max, self.g
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.t_max - self.t_min) / (self.g - 1) as f64;
        (0..self.g)
            .map(|i| if i + 1 == self.g { self.t_max } else { self.t_min + i as f64 * step })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimMode {
    None,
    Boundary,
    BoundaryAndDenominator,
}

/// Which grid points enter an averaged ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimConfig {
    pub mode: TrimMode,
    pub t_lo: f64,
    pub t_hi: f64,
    pub denom_floor: f64,
}

pub const DEFAULT_DENOM_FLOOR: f64 = 0.1;

impl TrimConfig {
    pub fn none() -> Self {
        Self {
            mode: TrimMode::None,
            t_lo: f64::NEG_INFINITY,
            t_hi: f64::INFINITY,
            denom_floor: 0.0,
        }
    }

    pub fn boundary(t_lo: f64, t_hi: f64) -> Result<Self> {
        let c = Self {
            mode: TrimMode::Boundary,
            t_lo,
            t_hi,
            denom_floor: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn boundary_and_denominator(t_lo: f64, t_hi: f64, denom_floor: f64) -> Result<Self> {
        let c = Self {
            mode: TrimMode::BoundaryAndDenominator,
            t_lo,
            t_hi,
            denom_floor,
        };
        c.validate()?;
        Ok(c)
    }

    /// Boundary window `[0.05, 2.5]` for Gumbel, `[0.05, 0.5]` for Clayton,
    /// and a denominator floor of 0.1.
    pub fn default_for(family: Family) -> Self {
        let t_hi = match family {
            Family::Gumbel => 2.5,
            Family::Clayton => 0.5,
        };
        Self {
            mode: TrimMode::BoundaryAndDenominator,
            t_lo: 0.05,
            t_hi,
            denom_floor: DEFAULT_DENOM_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != TrimMode::None && !(self.t_lo < self.t_hi) {
            return Err(Error::Config(format!(
                "trim window needs t_lo < t_hi, got [{}, {}]",
                self.t_lo, self.t_hi
            )));
        }
        if !(self.denom_floor >= 0.0) {
            return Err(Error::Config(format!(
                "denominator floor must be nonnegative, got {}",
                self.denom_floor
            )));
        }
        Ok(())
    }

    /// Whether a grid point with ratio denominator `denom` is kept.
    pub fn keeps(&self, t: f64, denom: f64) -> bool {
        if denom == 0.0 || !denom.is_finite() {
            return false;
        }
        match self.mode {
            TrimMode::None => true,
            TrimMode::Boundary => t >= self.t_lo && t <= self.t_hi,
            TrimMode::BoundaryAndDenominator => {
                t >= self.t_lo && t <= self.t_hi && denom.abs() >= self.denom_floor
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    EtaPi,
    EtaLambda,
    EtaM,
    EtaBar,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::EtaPi => "eta_pi",
            EstimatorKind::EtaLambda => "eta_lambda",
            EstimatorKind::EtaM => "eta_m",
            EstimatorKind::EtaBar => "eta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    pub eval_point: Option<(f64, f64)>,
    /// Grid points averaged, or sample points summed for [`EstimatorKind::EtaBar`].
    pub n_grid_used: usize,
    /// Points dropped by trimming or because a denominator vanished.
    pub n_excluded: usize,
}

fn grid_average(
    kind: EstimatorKind,
    point: (f64, f64),
    curve: &[CurvePoint],
    trim: &TrimConfig,
    ratio: impl Fn(&CurvePoint) -> Option<(f64, f64)>,
) -> Result<EtaEstimate> {
    let mut total = 0.0;
    let mut used = 0usize;
    for cp in curve {
        if let Some((num, den)) = ratio(cp) {
            if trim.keeps(cp.t, den) {
                total += num / den;
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::Estimation(format!(
            "{}: all {} grid points were trimmed or undefined at ({}, {})",
            kind.label(),
            curve.len(),
            point.0,
            point.1
        )));
    }
    Ok(EtaEstimate {
        value: total / used as f64,
        kind,
        eval_point: Some(point),
        n_grid_used: used,
        n_excluded: curve.len() - used,
    })
}

impl<K: Kernel> KernelSmoother<'_, K> {
    fn mean_curve(&self, grid: &GridSpec, trim: &TrimConfig) -> Result<((f64, f64), Vec<CurvePoint>)> {
        grid.validate()?;
        trim.validate()?;
        let point = self.data().covariate_means();
        let mut scratch = self.scratch();
        let curve = self.curves(point.0, point.1, &grid.points(), &mut scratch)?;
        Ok((point, curve))
    }

    /// Grid average of `pi_x / pi_y` at the covariate means.
    pub fn eta_pi_bar(&self, grid: &GridSpec, trim: &TrimConfig) -> Result<EtaEstimate> {
        let (point, curve) = self.mean_curve(grid, trim)?;
        grid_average(EstimatorKind::EtaPi, point, &curve, trim, |cp| {
            cp.survival.map(|s| (s.deriv_x, s.deriv_y))
        })
    }

    /// Grid average of `Lambda_x / Lambda_y` at the covariate means.
    pub fn eta_lambda_bar(&self, grid: &GridSpec, trim: &TrimConfig) -> Result<EtaEstimate> {
        let (point, curve) = self.mean_curve(grid, trim)?;
        grid_average(EstimatorKind::EtaLambda, point, &curve, trim, |cp| {
            Some((cp.cum_hazard_dx, cp.cum_hazard_dy))
        })
    }

    /// `m_x / m_y` at one point.
    pub fn eta_m_at(&self, x: f64, y: f64) -> Result<EtaEstimate> {
        let mut scratch = self.scratch();
        let sums = self.nw_sums(x, y, &mut scratch);
        match (sums.mean_deriv_x(), sums.mean_deriv_y()) {
            (Some(dx), Some(dy)) if dy != 0.0 => Ok(EtaEstimate {
                value: dx / dy,
                kind: EstimatorKind::EtaM,
                eval_point: Some((x, y)),
                n_grid_used: 1,
                n_excluded: 0,
            }),
            _ => Err(Error::Estimation(format!("eta_m undefined at ({x}, {y})"))),
        }
    }

    /// Per-observation `(m_x, m_y)` at each sample point, in index order.
    pub fn mean_derivs_at_sample(&self) -> Vec<Option<(f64, f64)>> {
        let data = self.data();
        (0..data.len())
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |scratch, i| {
                    let sums = self.nw_sums(data.x()[i], data.y()[i], scratch);
                    sums.mean_deriv_x().zip(sums.mean_deriv_y())
                },
            )
            .collect()
    }

    /// Ratio of sums `sum_i m_x(x_i, y_i) / sum_i m_y(x_i, y_i)`.
    pub fn eta_bar(&self) -> Result<EtaEstimate> {
        let derivs = self.mean_derivs_at_sample();
        let (mut num, mut den, mut used) = (0.0, 0.0, 0usize);
        for (dx, dy) in derivs.iter().flatten() {
            num += dx;
            den += dy;
            used += 1;
        }
        if used == 0 || den.abs() < 1e-300 {
            return Err(Error::Estimation(format!(
                "eta: denominator sum {den} over {used} points is numerically zero"
            )));
        }
        Ok(EtaEstimate {
            value: num / den,
            kind: EstimatorKind::EtaBar,
            eval_point: None,
            n_grid_used: used,
            n_excluded: derivs.len() - used,
        })
    }
}
