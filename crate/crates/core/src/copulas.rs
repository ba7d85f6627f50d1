//! Clayton and Gumbel copulas on the survival scale.
//!
//! The latent pair of survival probabilities `(s1, s2)` has joint law `C`, so
//! `Pr(T1 > t1, T2 > t2) = C(S1(t1), S2(t2))`. Evaluations are carried out in
//! log space so that strong dependence (e.g. Clayton with theta = 8) does not
//! overflow `s^-theta`.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Clayton,
    Gumbel,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Clayton => write!(f, "clayton"),
            Family::Gumbel => write!(f, "gumbel"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            other => Err(Error::Config(format!("unknown copula family '{other}'"))),
        }
    }
}

/// Kendall's tau to the dependence parameter.
pub fn tau_to_theta(family: Family, tau: f64) -> Result<f64> {
    match family {
        Family::Clayton if tau > 0.0 && tau < 1.0 => Ok(2.0 * tau / (1.0 - tau)),
        Family::Gumbel if (0.0..1.0).contains(&tau) => Ok(1.0 / (1.0 - tau)),
        _ => Err(Error::Config(format!(
            "Kendall tau {tau} outside the admissible range for the {family} family"
        ))),
    }
}

/// Dependence parameter to Kendall's tau.
pub fn theta_to_tau(family: Family, theta: f64) -> f64 {
    match family {
        Family::Clayton => theta / (theta + 2.0),
        Family::Gumbel => 1.0 - 1.0 / theta,
    }
}

/// Bisection tolerance on `|F(s2|s1) - v2|` for the Gumbel inverse.
pub const INVERSE_TOLERANCE: f64 = 1e-10;
const INVERSE_MAX_ITER: usize = 200;
// Bracket on (EPS, 1 - EPS) for the Gumbel root search.
const BRACKET_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    family: Family,
    theta: f64,
}

impl CopulaModel {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        let ok = theta.is_finite()
            && match family {
                Family::Clayton => theta > 0.0,
                Family::Gumbel => theta >= 1.0,
            };
        if !ok {
            return Err(Error::Config(format!(
                "theta = {theta} is outside the {family} parameter range"
            )));
        }
        Ok(Self { family, theta })
    }

    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        Self::new(family, tau_to_theta(family, tau)?)
    }

    pub fn independence() -> Self {
        Self {
            family: Family::Gumbel,
            theta: 1.0,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kendall_tau(&self) -> f64 {
        theta_to_tau(self.family, self.theta)
    }

    /// `C(s1, s2)`.
    pub fn cdf(&self, s1: f64, s2: f64) -> Result<f64> {
        check_unit("s1", s1)?;
        check_unit("s2", s2)?;
        if s1 == 0.0 || s2 == 0.0 {
            return Ok(0.0);
        }
        if s1 == 1.0 {
            return Ok(s2);
        }
        if s2 == 1.0 {
            return Ok(s1);
        }
        let th = self.theta;
        Ok(match self.family {
            Family::Clayton => {
                // u * (1 + (v^-th - 1) u^th)^(-1/th)
                let lr = ln_expm1(-th * s2.ln()) + th * s1.ln();
                s1 * (-softplus(lr) / th).exp()
            }
            Family::Gumbel => {
                let la = gumbel_log_sum(th, s1, s2);
                (-(la / th).exp()).exp()
            }
        })
    }

    /// `dC/ds1`, which is also the conditional cdf `F(s2 | s1)`.
    ///
    /// At `s2 = 1` this is exactly 1; at `s1 = 0` and `s1 = 1` the analytic
    /// one-sided limits are returned.
    pub fn partial1(&self, s1: f64, s2: f64) -> Result<f64> {
        check_unit("s1", s1)?;
        check_unit("s2", s2)?;
        Ok(self.partial1_unchecked(s1, s2))
    }

    pub(crate) fn partial1_unchecked(&self, s1: f64, s2: f64) -> f64 {
        if s2 >= 1.0 {
            return 1.0;
        }
        if s2 <= 0.0 {
            return 0.0;
        }
        let th = self.theta;
        match self.family {
            Family::Clayton => {
                if s1 <= 0.0 {
                    return 1.0;
                }
                // (1 + (v^-th - 1) u^th)^(-(th + 1)/th); at u = 1 this is v^(th+1).
                let lr = ln_expm1(-th * s2.ln()) + th * s1.ln();
                (-(th + 1.0) / th * softplus(lr)).exp()
            }
            Family::Gumbel => {
                if th == 1.0 {
                    return s2;
                }
                if s1 <= 0.0 {
                    return 1.0;
                }
                if s1 >= 1.0 {
                    return 0.0;
                }
                let a = -s1.ln();
                let la = gumbel_log_sum(th, s1, s2);
                let log_val = -(la / th).exp() + (1.0 / th - 1.0) * la + (th - 1.0) * a.ln() + a;
                log_val.exp().min(1.0)
            }
        }
    }

    /// Inverts `F(s2 | s1) = v2` in `s2`.
    pub fn conditional_inverse(&self, v2: f64, s1: f64) -> Result<f64> {
        if !(v2 > 0.0 && v2 < 1.0) {
            return Err(Error::Domain(format!("v2 must lie in (0, 1), got {v2}")));
        }
        if !(s1 > 0.0 && s1 < 1.0) {
            return Err(Error::Domain(format!("s1 must lie in (0, 1), got {s1}")));
        }
        let th = self.theta;
        match self.family {
            Family::Clayton => {
                // s2 = (1 - s1^-th + (v2 s1^(th+1))^(-th/(th+1)))^(-1/th), rewritten
                // as (1 + s1^-th (v2^(-th/(th+1)) - 1))^(-1/th) to avoid cancellation.
                let lr = -th * s1.ln() + ln_expm1(-th / (th + 1.0) * v2.ln());
                Ok((-softplus(lr) / th).exp())
            }
            Family::Gumbel if th == 1.0 => Ok(v2),
            Family::Gumbel => self.gumbel_inverse(v2, s1),
        }
    }

    // Bisection on w = ln(-ln s2), where F(s2 | s1) is decreasing in w.
    fn gumbel_inverse(&self, v2: f64, s1: f64) -> Result<f64> {
        let to_s2 = |w: f64| (-(w.exp())).exp();
        let f = |w: f64| self.partial1_unchecked(s1, to_s2(w));
        let mut lo = (-(-BRACKET_EPS).ln_1p()).ln(); // s2 = 1 - eps
        let mut hi = (-(BRACKET_EPS.ln())).ln(); // s2 = eps
        let (f_lo, f_hi) = (f(lo), f(hi));
        if !(f_hi <= v2 && v2 <= f_lo) {
            return Err(Error::numerical(
                "gumbel conditional inverse",
                format!(
                    "root not bracketed: theta={}, s1={s1}, v2={v2}, F(eps)={f_hi}, F(1-eps)={f_lo}",
                    self.theta
                ),
            ));
        }
        let mut last = f64::NAN;
        for _ in 0..INVERSE_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            last = fm;
            if (fm - v2).abs() <= INVERSE_TOLERANCE {
                return Ok(to_s2(mid));
            }
            if fm > v2 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        Err(Error::numerical(
            "gumbel conditional inverse",
            format!(
                "no convergence: theta={}, s1={s1}, v2={v2}, last F={last}, bracket=[{lo}, {hi}]",
                self.theta
            ),
        ))
    }

    /// Draws one pair `(s1, s2)` from the copula by conditional inversion.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let s1: f64 = rng.sample(Open01);
        let v2: f64 = rng.sample(Open01);
        Ok((s1, self.conditional_inverse(v2, s1)?))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `ln(exp(a) - 1)` for `a > 0`.
fn ln_expm1(a: f64) -> f64 {
    if a > 30.0 {
        a + (-(-a).exp()).ln_1p()
    } else {
        a.exp_m1().ln()
    }
}

/// `ln(1 + exp(l))`.
fn softplus(l: f64) -> f64 {
    if l > 0.0 {
        l + (-l).exp().ln_1p()
    } else {
        l.exp().ln_1p()
    }
}

// ln((-ln u)^th + (-ln v)^th) for u, v in (0, 1).
fn gumbel_log_sum(th: f64, u: f64, v: f64) -> f64 {
    let la = th * (-u.ln()).ln();
    let lb = th * (-v.ln()).ln();
    let m = la.max(lb);
    m + ((la - m).exp() + (lb - m).exp()).ln()
}
