//! Smoothing kernels and bandwidth-scaled product weights.
//!
//! All estimators use a product kernel `K_hx(x - x_i) K_hy(y - y_i)` with
//! `K_h(u) = K(u / h) / h`. Only the Epanechnikov kernel ships, but the
//! smoothers are written against the [`Kernel`] trait.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate smoothing kernel with a derivative.
pub trait Kernel: Copy + Send + Sync {
    /// Kernel value at `u`. Callers guarantee `u` is finite.
    fn value(&self, u: f64) -> f64;

    /// Derivative of the kernel at `u`.
    fn deriv(&self, u: f64) -> f64;

    /// Half-width of the support; `value(u) == 0` for `|u| >= support()`.
    fn support(&self) -> f64;
}

/// `K(u) = 0.75 (1 - u^2)` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Epanechnikov;

impl Kernel for Epanechnikov {
    #[inline]
    fn value(&self, u: f64) -> f64 {
        if u.abs() <= 1.0 {
            0.75 * (1.0 - u * u)
        } else {
            0.0
        }
    }

    /// The kernel has a kink at `|u| = 1`; the derivative is taken as 0 there.
    #[inline]
    fn deriv(&self, u: f64) -> f64 {
        if u.abs() < 1.0 {
            -1.5 * u
        } else {
            0.0
        }
    }

    fn support(&self) -> f64 {
        1.0
    }
}

fn check_finite(u: f64) -> Result<f64> {
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::Domain(format!("kernel argument must be finite, got {u}")))
    }
}

pub fn epanechnikov(u: f64) -> Result<f64> {
    check_finite(u).map(|u| Epanechnikov.value(u))
}

pub fn epanechnikov_deriv(u: f64) -> Result<f64> {
    check_finite(u).map(|u| Epanechnikov.deriv(u))
}

/// Bandwidths for the two covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub h_x: f64,
    pub h_y: f64,
}

impl KernelConfig {
    pub fn new(h_x: f64, h_y: f64) -> Result<Self> {
        for (name, h) in [("h_x", h_x), ("h_y", h_y)] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {h}")));
            }
        }
        Ok(Self { h_x, h_y })
    }

    /// Same bandwidth for both covariates.
    pub fn uniform(h: f64) -> Result<Self> {
        Self::new(h, h)
    }

    /// Both coordinates swapped, for covariate-relabeling checks.
    pub fn swapped(&self) -> Self {
        Self {
            h_x: self.h_y,
            h_y: self.h_x,
        }
    }
}

/// `K(dx/h_x)/h_x * K(dy/h_y)/h_y`.
pub fn scaled_weight(config: &KernelConfig, dx: f64, dy: f64) -> Result<f64> {
    let kx = epanechnikov(dx / config.h_x)? / config.h_x;
    let ky = epanechnikov(dy / config.h_y)? / config.h_y;
    Ok(kx * ky)
}

/// Partial derivative of [`scaled_weight`] in the evaluation point's x.
pub fn scaled_weight_deriv_x(config: &KernelConfig, dx: f64, dy: f64) -> Result<f64> {
    let dkx = epanechnikov_deriv(dx / config.h_x)? / (config.h_x * config.h_x);
    let ky = epanechnikov(dy / config.h_y)? / config.h_y;
    Ok(dkx * ky)
}

/// Partial derivative of [`scaled_weight`] in the evaluation point's y.
pub fn scaled_weight_deriv_y(config: &KernelConfig, dx: f64, dy: f64) -> Result<f64> {
    let kx = epanechnikov(dx / config.h_x)? / config.h_x;
    let dky = epanechnikov_deriv(dy / config.h_y)? / (config.h_y * config.h_y);
    Ok(kx * dky)
}
