//! Simulation of dependent competing-risks samples.
//!
//! Each observation is produced in four steps: draw `(s1, v2)` uniform, set
//! `s2 = F^-1(v2 | s1)` from the copula, draw `x, y ~ N(0, 1)`, and invert the
//! two marginal survival functions at `s1` and `s2`. Only the minimum of the
//! two latent times is observed.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::copulas::CopulaModel;
use crate::error::{Error, Result};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Risk {
    Risk1,
    Risk2,
}

impl Risk {
    /// Numeric code used in CSV files: 1 or 2.
    pub fn code(self) -> u8 {
        match self {
            Risk::Risk1 => 1,
            Risk::Risk2 => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Risk::Risk1),
            2 => Ok(Risk::Risk2),
            other => Err(Error::Domain(format!("risk code must be 1 or 2, got {other}"))),
        }
    }
}

/// One observed duration with the covariates and the risk that ended it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub delta: Risk,
    pub x: f64,
    pub y: f64,
}

/// Weibull margin `S(t) = exp(-(lambda t)^k c)` for a covariate factor `c`.
///
/// With `k = 1` this is the cumulative baseline hazard `lambda t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullMargin {
    pub lambda: f64,
    pub shape: f64,
}

impl WeibullMargin {
    pub fn new(lambda: f64, shape: f64) -> Result<Self> {
        let m = Self { lambda, shape };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda > 0.0 && self.lambda.is_finite() && self.shape > 0.0 && self.shape.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Weibull margin needs positive rate and shape, got ({}, {})",
                self.lambda, self.shape
            )))
        }
    }

    /// `t = [-ln s / lambda^k / factor]^(1/k)`.
    pub fn invert(&self, s: f64, factor: f64) -> f64 {
        (-s.ln() / self.lambda.powf(self.shape) / factor).powf(1.0 / self.shape)
    }

    pub fn survival(&self, t: f64, factor: f64) -> f64 {
        (-(self.lambda * t).powf(self.shape) * factor).exp()
    }
}

/// Weibull design whose risk-1 margin depends on `exp(bx x + by y + bx2 x^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleIndexDgp {
    pub margin1: WeibullMargin,
    pub margin2: WeibullMargin,
    pub beta_x: f64,
    pub beta_y: f64,
    #[serde(default)]
    pub beta_x2: f64,
    pub copula: CopulaModel,
}

impl SingleIndexDgp {
    pub fn validate(&self) -> Result<()> {
        self.margin1.validate()?;
        self.margin2.validate()?;
        if self.beta_x == 0.0 && self.beta_y == 0.0 {
            return Err(Error::Config("beta_x and beta_y cannot both be zero".into()));
        }
        if !(self.beta_x.is_finite() && self.beta_y.is_finite() && self.beta_x2.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// `exp(bx x + by y + bx2 x^2)`.
    pub fn covariate_factor(&self, x: f64, y: f64) -> f64 {
        (self.beta_x * x + self.beta_y * y + self.beta_x2 * x * x).exp()
    }

    pub fn latent_t1(&self, s1: f64, x: f64, y: f64) -> f64 {
        self.margin1.invert(s1, self.covariate_factor(x, y))
    }

    pub fn latent_t2(&self, s2: f64) -> f64 {
        self.margin2.invert(s2, 1.0)
    }

    pub fn survival1(&self, t: f64, x: f64, y: f64) -> f64 {
        self.margin1.survival(t, self.covariate_factor(x, y))
    }

    pub fn survival2(&self, t: f64) -> f64 {
        self.margin2.survival(t, 1.0)
    }
}

/// Additive two-hazards design: `lambda1 = a1 e^(x bx) t + b1 e^(y by)` and
/// `lambda2 = a2 t + b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoHazardsDgp {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub copula: CopulaModel,
}

impl TwoHazardsDgp {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("b1", self.b1), ("a2", self.a2), ("b2", self.b2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta_x.is_finite() && self.beta_y.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Quadratic coefficients `(A, B)` of the risk-1 cumulative hazard `A t^2 + B t`.
    pub fn risk1_coefficients(&self, x: f64, y: f64) -> (f64, f64) {
        (
            0.5 * self.a1 * (x * self.beta_x).exp(),
            self.b1 * (y * self.beta_y).exp(),
        )
    }

    pub fn risk2_coefficients(&self) -> (f64, f64) {
        (0.5 * self.a2, self.b2)
    }

    pub fn latent_t1(&self, u: f64, x: f64, y: f64) -> Result<f64> {
        let (a, b) = self.risk1_coefficients(x, y);
        quadratic_inverse(a, b, u)
    }

    pub fn latent_t2(&self, u: f64) -> Result<f64> {
        let (a, b) = self.risk2_coefficients();
        quadratic_inverse(a, b, u)
    }

    pub fn survival1(&self, t: f64, x: f64, y: f64) -> f64 {
        let (a, b) = self.risk1_coefficients(x, y);
        (-(a * t * t + b * t)).exp()
    }

    pub fn survival2(&self, t: f64) -> f64 {
        let (a, b) = self.risk2_coefficients();
        (-(a * t * t + b * t)).exp()
    }
}

/// Positive root of `A t^2 + B t = -ln u`.
fn quadratic_inverse(a: f64, b: f64, u: f64) -> Result<f64> {
    let c = -u.ln();
    let disc = b * b + 4.0 * a * c;
    if !(disc >= 0.0) || !disc.is_finite() {
        return Err(Error::numerical(
            "two-hazards inversion",
            format!("invalid discriminant {disc} for A={a}, B={b}, u={u}"),
        ));
    }
    // (-B + sqrt(disc)) / (2A), in the cancellation-free form 2c / (B + sqrt(disc)).
    Ok(2.0 * c / (b + disc.sqrt()))
}

fn sample_with<F>(copula: &CopulaModel, n: usize, seed: u64, mut times: F) -> Result<Vec<Observation>>
where
    F: FnMut(f64, f64, f64, f64) -> Result<(f64, f64)>,
{
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut rng: ChaCha20Rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s1: f64 = rng.sample(Open01);
        let v2: f64 = rng.sample(Open01);
        let s2 = copula.conditional_inverse(v2, s1)?;
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let (t1, t2) = times(s1, s2, x, y)?;
        let (t, delta) = if t1 <= t2 { (t1, Risk::Risk1) } else { (t2, Risk::Risk2) };
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::numerical(
                "data generation",
                format!("non-positive or non-finite duration {t} at s1={s1}, s2={s2}, x={x}, y={y}"),
            ));
        }
        out.push(Observation { t, delta, x, y });
    }
    Ok(out)
}

pub fn sample_single_index(config: &SingleIndexDgp, n: usize, seed: u64) -> Result<Vec<Observation>> {
    config.validate()?;
    sample_with(&config.copula, n, seed, |s1, s2, x, y| {
        Ok((config.latent_t1(s1, x, y), config.latent_t2(s2)))
    })
}

pub fn sample_two_hazards(config: &TwoHazardsDgp, n: usize, seed: u64) -> Result<Vec<Observation>> {
    config.validate()?;
    sample_with(&config.copula, n, seed, |s1, s2, x, y| {
        Ok((config.latent_t1(s1, x, y)?, config.latent_t2(s2)?))
    })
}

/// Fraction of observations ended by risk 1.
pub fn risk_share(data: &[Observation]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("risk share of an empty sample".into()));
    }
    let ones = data.iter().filter(|o| o.delta == Risk::Risk1).count();
    Ok(ones as f64 / data.len() as f64)
}
