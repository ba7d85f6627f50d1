//! Reference values for the relative covariate effect.
//!
//! Closed forms cover the single-index margins (Cox, PO, AFT) and the
//! two-hazards design under independence. For dependent designs, `eta_m`
//! and its population average are obtained by adaptive quadrature of
//!
//! `m_x(x, y) = int_0^inf d1C(S1(t|x,y), S2(t)) dS1(t|x,y)/dx dt`
//!
//! and the analogous `m_y`, since `m(x, y) = int_0^inf C(S1, S2) dt`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::copulas::CopulaModel;
use crate::datagen::{SingleIndexDgp, TwoHazardsDgp, WeibullMargin};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    CoxPh,
    Po,
    Aft,
}

/// Single-index margin built on the baseline `S10(t) = exp(-(lambda t)^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleIndexParams {
    pub baseline: WeibullMargin,
    pub beta_x: f64,
    pub beta_y: f64,
}

impl SingleIndexParams {
    fn index(&self, x: f64, y: f64) -> f64 {
        x * self.beta_x + y * self.beta_y
    }

    /// `S1(t | x, y)` for the given model class.
    pub fn survival(&self, kind: ClosedFormKind, t: f64, x: f64, y: f64) -> f64 {
        let e = self.index(x, y).exp();
        match kind {
            ClosedFormKind::CoxPh => self.baseline.survival(t, 1.0).powf(e),
            ClosedFormKind::Po => {
                let s0 = self.baseline.survival(t, 1.0);
                s0 / (s0 + (1.0 - s0) * e)
            }
            ClosedFormKind::Aft => self.baseline.survival(t * e, 1.0),
        }
    }

    /// Analytic `(dS1/dx, dS1/dy)`.
    pub fn survival_partials(&self, kind: ClosedFormKind, t: f64, x: f64, y: f64) -> (f64, f64) {
        let e = self.index(x, y).exp();
        let (lam, k) = (self.baseline.lambda, self.baseline.shape);
        // d/d(index) of S1, times the index partials.
        let d_index = match kind {
            ClosedFormKind::CoxPh => {
                let s1 = self.survival(kind, t, x, y);
                let log_s0 = -(lam * t).powf(k);
                s1 * log_s0 * e
            }
            ClosedFormKind::Po => {
                let s0 = self.baseline.survival(t, 1.0);
                let den = s0 + (1.0 - s0) * e;
                -s0 * (1.0 - s0) * e / (den * den)
            }
            ClosedFormKind::Aft => {
                let u = t * e;
                // S10'(u) u = -k (lambda u)^k S10(u).
                -k * (lam * u).powf(k) * self.baseline.survival(u, 1.0)
            }
        };
        (d_index * self.beta_x, d_index * self.beta_y)
    }
}

/// `(S1_x / S1_y, beta_x / beta_y)`; the two agree for single-index margins.
pub fn single_index_ratio_check(kind: ClosedFormKind, params: &SingleIndexParams, t: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    if params.beta_x == 0.0 && params.beta_y == 0.0 {
        return Err(Error::Config("beta_x and beta_y cannot both be zero".into()));
    }
    let (sx, sy) = params.survival_partials(kind, t, x, y);
    Ok((sx / sy, params.beta_x / params.beta_y))
}

/// Hazard parameters of the additive two-hazards design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoHazardsParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

impl From<&TwoHazardsDgp> for TwoHazardsParams {
    fn from(d: &TwoHazardsDgp) -> Self {
        Self {
            a1: d.a1,
            b1: d.b1,
            a2: d.a2,
            b2: d.b2,
            beta_x: d.beta_x,
            beta_y: d.beta_y,
        }
    }
}

impl TwoHazardsParams {
    /// `A(x)` and `B(y)` of the overall survival `exp(-(A t^2 + B t))` under independence.
    fn overall_coefficients(&self, x: f64, y: f64) -> (f64, f64) {
        (
            0.5 * (self.a1 * (x * self.beta_x).exp() + self.a2),
            self.b1 * (y * self.beta_y).exp() + self.b2,
        )
    }
}

/// `eta_pi(t, x, y) = (bx / by) a1 e^(x bx) t / (2 b1 e^(y by))`, linear in `t`.
pub fn two_hazards_eta_pi(p: &TwoHazardsParams, t: f64, x: f64, y: f64) -> f64 {
    p.beta_x / p.beta_y * p.a1 * (x * p.beta_x).exp() / (2.0 * p.b1 * (y * p.beta_y).exp()) * t
}

/// `exp(z^2) erfc(z)`, switching to the asymptotic series where `exp(z^2)` overflows.
fn scaled_erfc(z: f64) -> f64 {
    if z < 25.0 {
        (z * z).exp() * erfc(z)
    } else {
        let r = 1.0 / (2.0 * z * z);
        // 1 - r + 3 r^2 - 15 r^3 + 105 r^4 - 945 r^5 + 10395 r^6
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r * (1.0 - 11.0 * r)))));
        series / (z * std::f64::consts::PI.sqrt())
    }
}

/// `m(x, y) = int_0^inf exp(-(A t^2 + B t)) dt
///          = 1/2 sqrt(pi / A) exp(B^2 / (4A)) erfc(B / (2 sqrt(A)))`.
pub fn independence_limit_m(p: &TwoHazardsParams, x: f64, y: f64) -> f64 {
    let (a, b) = p.overall_coefficients(x, y);
    if a.is_infinite() {
        return 0.0;
    }
    0.5 * (std::f64::consts::PI / a).sqrt() * scaled_erfc(b / (2.0 * a.sqrt()))
}

/// Closed-form `eta_m(x, y)` under independence:
/// `(bx/by) a1 e^(x bx) / (2 b1 e^(y by)) * ((2A + B^2) m - B) / (2A (1 - B m))`.
pub fn independence_limit_eta_m(p: &TwoHazardsParams, x: f64, y: f64) -> Result<f64> {
    let (a, b) = p.overall_coefficients(x, y);
    let m = independence_limit_m(p, x, y);
    let den = 2.0 * a * (1.0 - b * m);
    if den.abs() < 1e-14 {
        return Err(Error::Estimation(format!("closed-form eta_m has a vanishing denominator at ({x}, {y})")));
    }
    let lead = p.beta_x / p.beta_y * p.a1 * (x * p.beta_x).exp() / (2.0 * p.b1 * (y * p.beta_y).exp());
    Ok(lead * ((2.0 * a + b * b) * m - b) / den)
}

/// A design whose risk-1 margin depends on the covariates and whose risk-2
/// margin does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum OracleDesign {
    TwoHazards(TwoHazardsParams),
    SingleIndex {
        margin1: WeibullMargin,
        margin2: WeibullMargin,
        beta_x: f64,
        beta_y: f64,
        beta_x2: f64,
    },
}

impl From<&SingleIndexDgp> for OracleDesign {
    fn from(d: &SingleIndexDgp) -> Self {
        OracleDesign::SingleIndex {
            margin1: d.margin1,
            margin2: d.margin2,
            beta_x: d.beta_x,
            beta_y: d.beta_y,
            beta_x2: d.beta_x2,
        }
    }
}

impl From<&TwoHazardsDgp> for OracleDesign {
    fn from(d: &TwoHazardsDgp) -> Self {
        OracleDesign::TwoHazards(d.into())
    }
}

/// Tail level for the truncation point: `S1(T | x, y) = TAIL`.
///
/// The integrand is bounded by `S1 |dH1/dx|` because `0 <= d1C <= 1`, so the
/// risk-1 margin alone controls the neglected tail. Under strong positive
/// dependence `C(S1, S2)` is close to `min(S1, S2)` and a cut on the product
/// `S1 S2` would be too early.
const TAIL: f64 = 1e-14;

impl OracleDesign {
    /// Risk-1 and risk-2 cumulative hazards and the covariate partials of the
    /// risk-1 cumulative hazard, at `t`.
    fn hazards(&self, t: f64, x: f64, y: f64) -> (f64, f64, f64, f64) {
        match *self {
            OracleDesign::TwoHazards(p) => {
                let ax = 0.5 * p.a1 * (x * p.beta_x).exp();
                let by = p.b1 * (y * p.beta_y).exp();
                (
                    ax * t * t + by * t,
                    0.5 * p.a2 * t * t + p.b2 * t,
                    ax * p.beta_x * t * t,
                    by * p.beta_y * t,
                )
            }
            OracleDesign::SingleIndex {
                margin1,
                margin2,
                beta_x,
                beta_y,
                beta_x2,
            } => {
                let g = (beta_x * x + beta_y * y + beta_x2 * x * x).exp();
                let h1 = (margin1.lambda * t).powf(margin1.shape) * g;
                let h2 = (margin2.lambda * t).powf(margin2.shape);
                (h1, h2, h1 * (beta_x + 2.0 * beta_x2 * x), h1 * beta_y)
            }
        }
    }

    /// Smallest `T` with `S1(T|x,y) <= 1e-14`, by bracketing and bisection.
    pub fn truncation_point(&self, x: f64, y: f64) -> Result<f64> {
        let target = -TAIL.ln();
        let total = |t: f64| self.hazards(t, x, y).0;
        let mut hi = 1.0;
        let mut guard = 0;
        while total(hi) < target {
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::numerical("truncation point", format!("no finite bound at ({x}, {y})")));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(hi)
    }

    /// `(m_x(x, y), m_y(x, y))` by adaptive quadrature on `[0, t_max]`.
    pub fn mean_partials(&self, copula: &CopulaModel, x: f64, y: f64, t_max: f64, rel_tol: f64) -> Result<(f64, f64)> {
        let integrand = |t: f64| {
            let (h1, h2, d1x, d1y) = self.hazards(t, x, y);
            let (s1, s2) = ((-h1).exp(), (-h2).exp());
            let w = copula.partial1_unchecked(s1, s2) * s1;
            [-w * d1x, -w * d1y]
        };
        let r = integrate(integrand, 0.0, t_max, Tolerance::relative(rel_tol))?;
        Ok((r.value[0], r.value[1]))
    }
}

/// Default relative tolerance of the time integrals.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

/// `eta_m(x, y) = m_x / m_y` for a dependent design.
pub fn quadrature_eta_m(design: &OracleDesign, copula: &CopulaModel, x: f64, y: f64) -> Result<f64> {
    let t_max = design.truncation_point(x, y)?;
    let (mx, my) = design.mean_partials(copula, x, y, t_max, QUADRATURE_REL_TOL)?;
    if my == 0.0 {
        return Err(Error::Estimation(format!("m_y vanishes at ({x}, {y})")));
    }
    Ok(mx / my)
}

/// Population target `E[m_x(X, Y)] / E[m_y(X, Y)]` for independent standard
/// normal covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedEta {
    pub value: f64,
    pub mean_mx: f64,
    pub mean_my: f64,
}

const NORMAL_CUTOFF: f64 = 8.5;

fn std_normal_pdf(v: f64) -> f64 {
    (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Ratio of expectations by nested adaptive quadrature over `[-8.5, 8.5]^2`.
pub fn expected_eta(design: &OracleDesign, copula: &CopulaModel) -> Result<ExpectedEta> {
    let outer_tol = Tolerance::relative(1e-7);
    let inner_tol = Tolerance::relative(1e-8);
    let mut failure: Option<Error> = None;
    let outer = integrate(
        |x| {
            if failure.is_some() {
                return [0.0, 0.0];
            }
            let inner = integrate(
                |y| match design
                    .truncation_point(x, y)
                    .and_then(|tm| design.mean_partials(copula, x, y, tm, QUADRATURE_REL_TOL))
                {
                    Ok((mx, my)) => {
                        let w = std_normal_pdf(y);
                        [w * mx, w * my]
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0, 0.0]
                    }
                },
                -NORMAL_CUTOFF,
                NORMAL_CUTOFF,
                inner_tol,
            );
            match inner {
                Ok(r) => {
                    let w = std_normal_pdf(x);
                    [w * r.value[0], w * r.value[1]]
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    [0.0, 0.0]
                }
            }
        },
        -NORMAL_CUTOFF,
        NORMAL_CUTOFF,
        outer_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let [mean_mx, mean_my] = outer.value;
    Ok(ExpectedEta {
        value: mean_mx / mean_my,
        mean_mx,
        mean_my,
    })
}

/// Ratio of expectations by seeded Monte Carlo over the covariates.
pub fn expected_eta_monte_carlo(design: &OracleDesign, copula: &CopulaModel, draws: usize, seed: u64) -> Result<ExpectedEta> {
    if draws == 0 {
        return Err(Error::Config("Monte Carlo needs at least one draw".into()));
    }
    const CHUNK: usize = 4096;
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(draws - c * CHUNK);
            let (mut sx, mut sy) = (0.0, 0.0);
            for _ in 0..count {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let tm = design.truncation_point(x, y)?;
                let (mx, my) = design.mean_partials(copula, x, y, tm, 1e-7)?;
                sx += mx;
                sy += my;
            }
            Ok((sx, sy))
        })
        .collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in partial {
        let (a, b) = p?;
        sx += a;
        sy += b;
    }
    let n = draws as f64;
    Ok(ExpectedEta {
        value: sx / sy,
        mean_mx: sx / n,
        mean_my: sy / n,
    })
}
