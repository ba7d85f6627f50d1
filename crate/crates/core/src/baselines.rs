//! Single-index regression baselines: Cox proportional hazards, Weibull
//! accelerated failure time, and proportional odds via a log-logistic AFT.
//!
//! Only risk-1 endings count as events; risk-2 endings are treated as
//! independent censoring. AFT coefficients are reported on the log-time
//! scale, so a positive coefficient lengthens durations. The ratio
//! `beta_x / beta_y` is the same on every scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::{Observation, Risk};
use crate::error::{Error, Result};

/// Right-censored durations with two covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    pub t: Vec<f64>,
    pub event: Vec<bool>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CensoredSample {
    pub fn new(t: Vec<f64>, event: Vec<bool>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if event.len() != n || x.len() != n || y.len() != n {
            return Err(Error::Domain("censored sample columns differ in length".into()));
        }
        if let Some(i) = (0..n).find(|&i| !(t[i] > 0.0 && t[i].is_finite() && x[i].is_finite() && y[i].is_finite())) {
            return Err(Error::Domain(format!("row {i} has a non-positive duration or non-finite value")));
        }
        Ok(Self { t, event, x, y })
    }

    /// Risk-1 endings are events; risk-2 endings are censored.
    pub fn from_observations(obs: &[Observation]) -> Result<Self> {
        Self::new(
            obs.iter().map(|o| o.t).collect(),
            obs.iter().map(|o| o.delta == Risk::Risk1).collect(),
            obs.iter().map(|o| o.x).collect(),
            obs.iter().map(|o| o.y).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn swapped(&self) -> Self {
        Self {
            t: self.t.clone(),
            event: self.event.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    fn check_events(&self, model: &'static str) -> Result<()> {
        if self.events() < 2 {
            return Err(Error::Fit {
                model,
                detail: format!("need at least 2 events, found {}", self.events()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineModel {
    Cox,
    Aft,
    Po,
}

impl BaselineModel {
    pub fn label(self) -> &'static str {
        match self {
            BaselineModel::Cox => "cox",
            BaselineModel::Aft => "aft",
            BaselineModel::Po => "po",
        }
    }
}

impl std::str::FromStr for BaselineModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cox" => Ok(BaselineModel::Cox),
            "aft" | "weibull" => Ok(BaselineModel::Aft),
            "po" => Ok(BaselineModel::Po),
            other => Err(Error::Config(format!("unknown baseline model '{other}'"))),
        }
    }
}

/// Location and log-scale of an AFT fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AftNuisance {
    pub intercept: f64,
    pub log_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: BaselineModel,
    pub beta_x: f64,
    pub beta_y: f64,
    pub nuisance: Option<AftNuisance>,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    pub grad_norm: f64,
}

impl RegressionFit {
    /// Coefficients on the hazard/odds scale, `-beta / sigma`, for AFT fits.
    pub fn rate_scale_coefficients(&self) -> (f64, f64) {
        match self.nuisance {
            Some(n) => {
                let sigma = n.log_scale.exp();
                (-self.beta_x / sigma, -self.beta_y / sigma)
            }
            None => (self.beta_x, self.beta_y),
        }
    }
}

/// `beta_x / beta_y`.
pub fn coeff_ratio(fit: &RegressionFit) -> Result<f64> {
    if !fit.converged {
        return Err(Error::Estimation(format!("{} fit did not converge", fit.model.label())));
    }
    if fit.beta_y.abs() < 1e-12 {
        return Err(Error::Estimation(format!(
            "coefficient ratio undefined: |beta_y| = {} < 1e-12",
            fit.beta_y.abs()
        )));
    }
    Ok(fit.beta_x / fit.beta_y)
}

pub fn fit_baseline(model: BaselineModel, data: &CensoredSample) -> Result<RegressionFit> {
    match model {
        BaselineModel::Cox => fit_cox(data),
        BaselineModel::Aft => fit_weibull_aft(data),
        BaselineModel::Po => fit_po(data),
    }
}

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 60;
const DIVERGENCE_NORM: f64 = 1e6;

/// Objective evaluated with its first two derivatives.
struct Eval {
    loglik: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

struct NewtonOutcome {
    theta: DVector<f64>,
    last: Eval,
    iterations: usize,
    /// Log-likelihood after each accepted step, starting value first.
    #[cfg_attr(not(test), allow(dead_code))]
    path: Vec<f64>,
}

/// Damped Newton ascent with step halving.
fn newton<F>(model: &'static str, start: DVector<f64>, eval: F) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> Eval,
{
    let mut theta = start;
    let mut cur = eval(&theta);
    let mut path = vec![cur.loglik];
    for iter in 0..=MAX_ITER {
        let gnorm = cur.grad.norm();
        if !cur.loglik.is_finite() || !gnorm.is_finite() {
            return Err(Error::Fit {
                model,
                detail: format!("non-finite objective at iteration {iter}"),
            });
        }
        if gnorm <= GRADIENT_TOLERANCE {
            return Ok(NewtonOutcome {
                theta,
                last: cur,
                iterations: iter,
                path,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let neg_h = -&cur.hess;
        let step = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&cur.grad),
            None => match neg_h.lu().solve(&cur.grad) {
                Some(s) if s.dot(&cur.grad) > 0.0 => s,
                // Not an ascent direction: fall back to a scaled gradient step.
                _ => &cur.grad / cur.grad.norm().max(1.0),
            },
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta + &step * scale;
            let next = eval(&cand);
            let noise = 64.0 * f64::EPSILON * cur.loglik.abs().max(1.0);
            let improves = next.loglik >= cur.loglik
                || (next.loglik >= cur.loglik - noise && next.grad.norm() < gnorm);
            if next.loglik.is_finite() && improves {
                accepted = Some((cand, next));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((cand, next)) => {
                theta = cand;
                cur = next;
                path.push(cur.loglik);
            }
            None => {
                return Err(Error::Fit {
                    model,
                    detail: format!("line search failed at iteration {iter}, gradient norm {gnorm:e}"),
                })
            }
        }
        if theta.norm() > DIVERGENCE_NORM {
            return Err(Error::Fit {
                model,
                detail: format!("coefficients diverged (norm {:e}); possible separation", theta.norm()),
            });
        }
    }
    Err(Error::Fit {
        model,
        detail: format!(
            "no convergence after {MAX_ITER} iterations, gradient norm {:e}",
            cur.grad.norm()
        ),
    })
}

/// Cox partial likelihood with Breslow ties, by damped Newton from `beta = 0`.
pub fn fit_cox(data: &CensoredSample) -> Result<RegressionFit> {
    data.check_events("cox")?;
    let n = data.len();
    // Descending time; risk sets grow as we walk the order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.t[b].total_cmp(&data.t[a]).then(a.cmp(&b)));

    let eval = |beta: &DVector<f64>| -> Eval {
        let (bx, by) = (beta[0], beta[1]);
        let eta: Vec<f64> = (0..n).map(|i| bx * data.x[i] + by * data.y[i]).collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s0, mut s1x, mut s1y, mut s2xx, mut s2xy, mut s2yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut ll = 0.0;
        let (mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut k = 0;
        while k < n {
            let mut j = k;
            while j < n && data.t[order[j]] == data.t[order[k]] {
                let i = order[j];
                let r = (eta[i] - shift).exp();
                s0 += r;
                s1x += r * data.x[i];
                s1y += r * data.y[i];
                s2xx += r * data.x[i] * data.x[i];
                s2xy += r * data.x[i] * data.y[i];
                s2yy += r * data.y[i] * data.y[i];
                j += 1;
            }
            let (mx, my) = (s1x / s0, s1y / s0);
            let log_s0 = s0.ln() + shift;
            for &i in &order[k..j] {
                if data.event[i] {
                    ll += eta[i] - log_s0;
                    gx += data.x[i] - mx;
                    gy += data.y[i] - my;
                    hxx -= s2xx / s0 - mx * mx;
                    hxy -= s2xy / s0 - mx * my;
                    hyy -= s2yy / s0 - my * my;
                }
            }
            k = j;
        }
        Eval {
            loglik: ll,
            grad: DVector::from_vec(vec![gx, gy]),
            hess: DMatrix::from_row_slice(2, 2, &[hxx, hxy, hxy, hyy]),
        }
    };

    let out = newton("cox", DVector::zeros(2), eval)?;
    Ok(RegressionFit {
        model: BaselineModel::Cox,
        beta_x: out.theta[0],
        beta_y: out.theta[1],
        nuisance: None,
        converged: true,
        iterations: out.iterations,
        loglik: out.last.loglik,
        grad_norm: out.last.grad.norm(),
    })
}

/// Error law of `log T = mu + bx x + by y + sigma * eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AftFamily {
    /// Standard minimum extreme value: Weibull durations.
    ExtremeValue,
    /// Standard logistic: log-logistic durations, a proportional-odds model.
    Logistic,
}

impl AftFamily {
    /// `(g, g', g'', G, G', G'')` for the log-density `g` and log-survival `G`.
    #[inline]
    fn terms(self, z: f64) -> [f64; 6] {
        match self {
            AftFamily::ExtremeValue => {
                let ez = z.exp();
                [z - ez, 1.0 - ez, -ez, -ez, -ez, -ez]
            }
            AftFamily::Logistic => {
                // log(1 + e^z) and the logistic function, both overflow-safe.
                let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                let s = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
                let v = s * (1.0 - s);
                [z - 2.0 * sp, 1.0 - 2.0 * s, -2.0 * v, -sp, -s, -v]
            }
        }
    }

    /// Ratio of the error standard deviation to `sigma`.
    fn sd_factor(self) -> f64 {
        match self {
            AftFamily::ExtremeValue => std::f64::consts::PI / 6f64.sqrt(),
            AftFamily::Logistic => std::f64::consts::PI / 3f64.sqrt(),
        }
    }
}

/// Log-likelihood (up to the constant `-sum log t_i` over events) with its
/// gradient and Hessian in `(mu, bx, by, log sigma)`.
fn aft_eval(family: AftFamily, data: &CensoredSample, logt: &[f64], theta: &DVector<f64>) -> Eval {
    let (mu, bx, by, psi) = (theta[0], theta[1], theta[2], theta[3]);
    let sigma = psi.exp();
    let mut ll = 0.0;
    let mut g = [0.0; 4];
    let mut h = [[0.0; 4]; 4];
    for i in 0..data.len() {
        let c = [1.0, data.x[i], data.y[i]];
        let z = (logt[i] - mu - bx * c[1] - by * c[2]) / sigma;
        let [gv, g1, g2, sv, s1, s2] = family.terms(z);
        let (a, b) = if data.event[i] {
            ll += gv - psi;
            (g1, g2)
        } else {
            ll += sv;
            (s1, s2)
        };
        for j in 0..3 {
            g[j] -= a * c[j] / sigma;
            for k in j..3 {
                h[j][k] += b * c[j] * c[k] / (sigma * sigma);
            }
            h[j][3] += c[j] / sigma * (b * z + a);
        }
        g[3] -= a * z + if data.event[i] { 1.0 } else { 0.0 };
        h[3][3] += b * z * z + a * z;
    }
    for j in 0..4 {
        for k in 0..j {
            h[j][k] = h[k][j];
        }
    }
    Eval {
        loglik: ll,
        grad: DVector::from_row_slice(&g),
        hess: DMatrix::from_fn(4, 4, |r, c| h[r][c]),
    }
}

fn fit_aft(family: AftFamily, model: BaselineModel, name: &'static str, data: &CensoredSample) -> Result<RegressionFit> {
    data.check_events(name)?;
    let logt: Vec<f64> = data.t.iter().map(|t| t.ln()).collect();
    let n = logt.len() as f64;
    let mean = logt.iter().sum::<f64>() / n;
    let var = logt.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sigma0 = (var.sqrt() / family.sd_factor()).max(1e-3);
    let start = DVector::from_vec(vec![mean, 0.0, 0.0, sigma0.ln()]);
    let out = newton(name, start, |th| aft_eval(family, data, &logt, th))?;
    Ok(RegressionFit {
        model,
        beta_x: out.theta[1],
        beta_y: out.theta[2],
        nuisance: Some(AftNuisance {
            intercept: out.theta[0],
            log_scale: out.theta[3],
        }),
        converged: true,
        iterations: out.iterations,
        loglik: out.last.loglik,
        grad_norm: out.last.grad.norm(),
    })
}

/// Right-censored Weibull AFT by maximum likelihood.
pub fn fit_weibull_aft(data: &CensoredSample) -> Result<RegressionFit> {
    fit_aft(AftFamily::ExtremeValue, BaselineModel::Aft, "weibull aft", data)
}

/// Proportional odds through the log-logistic AFT, which shares its
/// coefficient ratio.
pub fn fit_po(data: &CensoredSample) -> Result<RegressionFit> {
    fit_aft(AftFamily::Logistic, BaselineModel::Po, "proportional odds", data)
}
