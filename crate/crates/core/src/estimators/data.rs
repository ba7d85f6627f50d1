use crate::datagen::Observation;
use crate::error::{Error, Result};

/// Durations with two continuous covariates. The risk label is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalData {
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    distinct_times: Vec<f64>,
}

impl SurvivalData {
    pub fn new(t: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::Domain("survival data must not be empty".into()));
        }
        if t.len() != x.len() || t.len() != y.len() {
            return Err(Error::Domain(format!(
                "column lengths differ: t={}, x={}, y={}",
                t.len(),
                x.len(),
                y.len()
            )));
        }
        if t.len() > u32::MAX as usize {
            return Err(Error::Domain("too many observations".into()));
        }
        for (i, &ti) in t.iter().enumerate() {
            if !(ti > 0.0 && ti.is_finite()) {
                return Err(Error::Domain(format!("duration {i} must be positive and finite, got {ti}")));
            }
            if !(x[i].is_finite() && y[i].is_finite()) {
                return Err(Error::Domain(format!("covariates of observation {i} must be finite")));
            }
        }
        let mut distinct_times = t.clone();
        distinct_times.sort_by(f64::total_cmp);
        distinct_times.dedup();
        Ok(Self {
            t,
            x,
            y,
            distinct_times,
        })
    }

    pub fn from_observations(obs: &[Observation]) -> Result<Self> {
        Self::new(
            obs.iter().map(|o| o.t).collect(),
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

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Sorted distinct durations.
    pub fn distinct_times(&self) -> &[f64] {
        &self.distinct_times
    }

    /// Sample means `(x_bar, y_bar)`.
    pub fn covariate_means(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (self.x.iter().sum::<f64>() / n, self.y.iter().sum::<f64>() / n)
    }

    /// The same data with the covariate columns exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t: self.t.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
            distinct_times: self.distinct_times.clone(),
        }
    }

    /// Rows selected by `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.t[i]).collect(),
            indices.iter().map(|&i| self.x[i]).collect(),
            indices.iter().map(|&i| self.y[i]).collect(),
        )
    }
}
