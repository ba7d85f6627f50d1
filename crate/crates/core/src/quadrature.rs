//! Globally adaptive Gauss-Kronrod (7/15) quadrature for small vector-valued
//! integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_intervals: 4000,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub intervals: usize,
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|c| c.abs()).fold(0.0, f64::max)
}

fn kronrod<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for j in 0..N {
        k[j] = WGK[7] * fc[j];
        g[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let f1 = f(c - h * XGK[i]);
        let f2 = f(c + h * XGK[i]);
        for j in 0..N {
            k[j] += WGK[i] * (f1[j] + f2[j]);
            if i % 2 == 1 {
                g[j] += WG[i / 2] * (f1[j] + f2[j]);
            }
        }
    }
    let mut err: f64 = 0.0;
    for j in 0..N {
        k[j] *= h;
        g[j] *= h;
        err = err.max((k[j] - g[j]).abs());
    }
    (k, err)
}

/// Integrates `f` over `[a, b]` until the error estimate is below
/// `max(abs, rel * |I|)` in the max-norm.
pub fn integrate<const N: usize, F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: [0.0; N],
            error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in &parts {
            for j in 0..N {
                total[j] += p.2[j];
            }
            err += p.3;
        }
        if !err.is_finite() || total.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("adaptive quadrature", format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol.abs.max(tol.rel * norm(&total)) {
            return Ok(Integral {
                value: total,
                error: err,
                intervals: parts.len(),
            });
        }
        if parts.len() >= tol.max_intervals {
            return Err(Error::numerical(
                "adaptive quadrature",
                format!(
                    "no convergence on [{a}, {b}] after {} subintervals: error {err:e}, value {:?}",
                    parts.len(),
                    total
                ),
            ));
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3))
            .unwrap_or(0);
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::numerical(
                "adaptive quadrature",
                format!("subinterval [{lo}, {hi}] cannot be split further"),
            ));
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    Ok(integrate(|t| [f(t)], a, b, tol)?.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate_scalar(|t| 3.0 * t * t + 1.0, 0.0, 2.0, Tolerance::relative(1e-12)).unwrap();
        assert_abs_diff_eq!(v, 10.0, epsilon = 1e-13);
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let tol = Tolerance::relative(1e-11);
        let v = integrate_scalar(|t| (-t * t).exp(), -10.0, 10.0, tol).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-10);
        let v = integrate_scalar(|t| 1.0 / (1e-4 + t * t), -1.0, 1.0, tol).unwrap();
        assert_abs_diff_eq!(v, 2.0 * 100.0 * (100.0f64).atan(), epsilon = 1e-7);
        let v = integrate(|t| [t.sin(), t.cos()], 0.0, std::f64::consts::PI, tol).unwrap();
        assert_abs_diff_eq!(v.value[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.value[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn failures_are_reported() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
            max_intervals: 8,
        };
        assert!(matches!(
            integrate_scalar(|t| t.abs().sqrt().recip(), -1.0, 1.0, tol),
            Err(Error::Numerical { .. })
        ));
        assert!(integrate_scalar(|t| t, 0.0, f64::INFINITY, tol).is_err());
        assert_eq!(integrate_scalar(|t| t, 1.0, 1.0, tol).unwrap(), 0.0);
    }
}
