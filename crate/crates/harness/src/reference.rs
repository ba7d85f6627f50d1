//! Population reference values for simulation designs.

use std::fmt::Write as _;

use releff_core::copulas::{CopulaModel, Family};
use releff_core::datagen::{SingleIndexDgp, TwoHazardsDgp, WeibullMargin};
use releff_core::oracle::{expected_eta, independence_limit_eta_m, quadrature_eta_m, ExpectedEta, OracleDesign};
use serde::{Deserialize, Serialize};

use crate::config::Dgp;
use crate::emit::Format;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub design: OracleDesign,
    pub copula: CopulaModel,
    /// `E[m_x] / E[m_y]` over independent standard normal covariates.
    pub expected_eta: ExpectedEta,
    /// `m_x / m_y` at the covariate origin.
    pub eta_m_origin: f64,
    /// `beta_x / beta_y` when the design is a single index.
    pub single_index_ratio: Option<f64>,
    /// Closed-form `eta_m(0, 0)` of the independent two-hazards model.
    pub independence_eta_m_origin: Option<f64>,
}

pub fn oracle_report(name: &str, dgp: &Dgp) -> Result<OracleReport> {
    let design = dgp.oracle_design();
    let copula = dgp.copula();
    let single_index_ratio = match design {
        OracleDesign::SingleIndex {
            beta_x, beta_y, beta_x2, ..
        } if beta_x2 == 0.0 => Some(beta_x / beta_y),
        _ => None,
    };
    let independence_eta_m_origin = match design {
        OracleDesign::TwoHazards(p) => independence_limit_eta_m(&p, 0.0, 0.0).ok(),
        OracleDesign::SingleIndex { .. } => None,
    };
    Ok(OracleReport {
        name: name.to_string(),
        expected_eta: expected_eta(&design, &copula)?,
        eta_m_origin: quadrature_eta_m(&design, &copula, 0.0, 0.0)?,
        design,
        copula,
        single_index_ratio,
        independence_eta_m_origin,
    })
}

/// The two non-single-index comparison designs: the two-hazards model and
/// the Weibull model with a quadratic term, both under Clayton with tau 0.8.
pub fn builtin_designs() -> Result<Vec<(String, Dgp)>> {
    let copula = CopulaModel::from_tau(Family::Clayton, 0.8)?;
    let two_hazards = TwoHazardsDgp {
        a1: 1.0,
        b1: 1.0,
        a2: 0.5,
        b2: 1.0,
        beta_x: 1.0,
        beta_y: 1.0,
        copula,
    };
    let quadratic = SingleIndexDgp {
        margin1: WeibullMargin::new(0.5, 1.0)?,
        margin2: WeibullMargin::new(1.0, 1.0)?,
        beta_x: 1.0,
        beta_y: 1.0,
        beta_x2: 2.0,
        copula,
    };
    Ok(vec![
        ("two_hazards".to_string(), Dgp::TwoHazards(two_hazards)),
        ("weibull_quadratic".to_string(), Dgp::SingleIndex(quadratic)),
    ])
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.6}"))
}

pub fn render_oracle(reports: &[OracleReport], format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(reports)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["design", "family", "theta", "expected_eta", "eta_m_origin", "single_index_ratio"])?;
            for r in reports {
                w.write_record([
                    r.name.clone(),
                    r.copula.family().to_string(),
                    r.copula.theta().to_string(),
                    r.expected_eta.value.to_string(),
                    r.eta_m_origin.to_string(),
                    r.single_index_ratio.map_or_else(String::new, |v| v.to_string()),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Text => {
            let mut out = format!("{:<20}{:>10}{:>14}{:>14}{:>14}\n", "design", "tau", "E-ratio eta", "eta_m(0,0)", "beta ratio");
            for r in reports {
                writeln!(
                    out,
                    "{:<20}{:>10.4}{:>14.6}{:>14.6}{:>14}",
                    r.name,
                    r.copula.kendall_tau(),
                    r.expected_eta.value,
                    r.eta_m_origin,
                    opt(r.single_index_ratio)
                )
                .unwrap();
            }
            Ok(out)
        }
    }
}
