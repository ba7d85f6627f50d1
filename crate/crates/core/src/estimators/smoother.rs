use crate::error::{Error, Result};
use crate::kernels::{Epanechnikov, Kernel, KernelConfig};

use super::data::SurvivalData;
use super::neighbors::{NeighborIndex, Scratch};

/// Product-kernel weight of one observation and its partials in the
/// evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWeight {
    pub t: f64,
    pub w: f64,
    pub dw_x: f64,
    pub dw_y: f64,
}

/// The six kernel sums behind the Nadaraya-Watson mean and its derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NwSums {
    pub s: f64,
    pub s_t: f64,
    pub s_dx: f64,
    pub s_dy: f64,
    pub s_t_dx: f64,
    pub s_t_dy: f64,
}

impl NwSums {
    pub fn add(&mut self, lw: &LocalWeight) {
        self.s += lw.w;
        self.s_t += lw.t * lw.w;
        self.s_dx += lw.dw_x;
        self.s_dy += lw.dw_y;
        self.s_t_dx += lw.t * lw.dw_x;
        self.s_t_dy += lw.t * lw.dw_y;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.s > 0.0).then(|| self.s_t / self.s)
    }

    /// `(S_t,dx S - S_t S_dx) / S^2`.
    pub fn mean_deriv_x(&self) -> Option<f64> {
        (self.s > 0.0).then(|| (self.s_t_dx * self.s - self.s_t * self.s_dx) / (self.s * self.s))
    }

    pub fn mean_deriv_y(&self) -> Option<f64> {
        (self.s > 0.0).then(|| (self.s_t_dy * self.s - self.s_t * self.s_dy) / (self.s * self.s))
    }
}

/// Kernel survivor share and its partials at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub value: f64,
    pub deriv_x: f64,
    pub deriv_y: f64,
}

/// Nelson-Aalen sum (or one of its partials) and the number of hazard terms
/// that were undefined because their risk set carried no kernel weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeHazard {
    pub value: f64,
    pub undefined_terms: usize,
}

/// All time-indexed estimates at one covariate point and one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    /// `None` when no observation carries kernel weight.
    pub survival: Option<SurvivalPoint>,
    pub cum_hazard: f64,
    pub cum_hazard_dx: f64,
    pub cum_hazard_dy: f64,
    pub undefined_terms: usize,
}

/// Kernel estimators over one data set with fixed bandwidths.
pub struct KernelSmoother<'a, K: Kernel = Epanechnikov> {
    data: &'a SurvivalData,
    config: KernelConfig,
    kernel: K,
    index: NeighborIndex,
    /// `(x_i, y_i, t_i)` packed for locality.
    points: Vec<[f64; 3]>,
}

impl<'a> KernelSmoother<'a, Epanechnikov> {
    pub fn new(data: &'a SurvivalData, config: KernelConfig) -> Self {
        Self::with_kernel(data, config, Epanechnikov)
    }
}

impl<'a, K: Kernel> KernelSmoother<'a, K> {
    pub fn with_kernel(data: &'a SurvivalData, config: KernelConfig, kernel: K) -> Self {
        let index = NeighborIndex::new(
            data.x(),
            data.y(),
            kernel.support() * config.h_x,
            kernel.support() * config.h_y,
        );
        Self {
            data,
            config,
            kernel,
            index,
            points: (0..data.len()).map(|i| [data.x()[i], data.y()[i], data.t()[i]]).collect(),
        }
    }

    pub fn data(&self) -> &'a SurvivalData {
        self.data
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn scratch(&self) -> Scratch {
        self.index.scratch()
    }

    #[inline]
    fn weight(&self, x: f64, y: f64, i: usize) -> LocalWeight {
        let (hx, hy) = (self.config.h_x, self.config.h_y);
        let [xi, yi, ti] = self.points[i];
        let (ux, uy) = ((x - xi) / hx, (y - yi) / hy);
        let kx = self.kernel.value(ux) / hx;
        let ky = self.kernel.value(uy) / hy;
        let dkx = self.kernel.deriv(ux) / (hx * hx);
        let dky = self.kernel.deriv(uy) / (hy * hy);
        LocalWeight {
            t: ti,
            w: kx * ky,
            dw_x: dkx * ky,
            dw_y: kx * dky,
        }
    }

    /// Visits the weights of all observations inside the kernel window, in
    /// data-index order.
    pub fn for_each_weight<F: FnMut(usize, &LocalWeight)>(&self, x: f64, y: f64, scratch: &mut Scratch, mut f: F) {
        self.index.for_each(x, y, scratch, |i| {
            let lw = self.weight(x, y, i);
            f(i, &lw)
        });
    }

    /// Weights inside the kernel window, in data-index order.
    pub fn local_weights(&self, x: f64, y: f64, scratch: &mut Scratch) -> Vec<LocalWeight> {
        let mut out = Vec::new();
        self.for_each_weight(x, y, scratch, |_, lw| out.push(*lw));
        out
    }

    pub fn nw_sums(&self, x: f64, y: f64, scratch: &mut Scratch) -> NwSums {
        let mut sums = NwSums::default();
        self.for_each_weight(x, y, scratch, |_, lw| sums.add(lw));
        sums
    }

    /// Survival and Nelson-Aalen curves at `(x, y)` for ascending `times`.
    pub fn curves(&self, x: f64, y: f64, times: &[f64], scratch: &mut Scratch) -> Result<Vec<CurvePoint>> {
        if times.windows(2).any(|w| !(w[0] <= w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("evaluation times must be finite and ascending".into()));
        }
        let mut local = self.local_weights(x, y, scratch);
        local.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(curves_from_local(&local, self.data.distinct_times(), times))
    }
}

// Groups tied durations; sums of weights at each distinct local time.
struct Group {
    t: f64,
    w: f64,
    dx: f64,
    dy: f64,
}

/// Curves from weights sorted by ascending `t`.
pub(crate) fn curves_from_local(local: &[LocalWeight], distinct_times: &[f64], times: &[f64]) -> Vec<CurvePoint> {
    let mut groups: Vec<Group> = Vec::new();
    for lw in local {
        match groups.last_mut() {
            Some(g) if g.t == lw.t => {
                g.w += lw.w;
                g.dx += lw.dw_x;
                g.dy += lw.dw_y;
            }
            _ => groups.push(Group {
                t: lw.t,
                w: lw.w,
                dx: lw.dw_x,
                dy: lw.dw_y,
            }),
        }
    }

    // Sums over observations strictly later than each group, accumulated from
    // the top so that the full-sample totals come out of the same recursion.
    let g = groups.len();
    let mut after = vec![(0.0, 0.0, 0.0); g];
    let mut run = (0.0, 0.0, 0.0);
    for k in (0..g).rev() {
        after[k] = run;
        run.0 += groups[k].w;
        run.1 += groups[k].dx;
        run.2 += groups[k].dy;
    }
    let totals = run;

    // Running Nelson-Aalen sums up to and including each group.
    let mut cum = vec![(0.0, 0.0, 0.0); g];
    let mut acc = (0.0, 0.0, 0.0);
    for k in 0..g {
        let (rw, rdx, rdy) = after[k];
        if rw > 0.0 {
            let gr = &groups[k];
            acc.0 += gr.w / rw;
            acc.1 += (gr.dx * rw - gr.w * rdx) / (rw * rw);
            acc.2 += (gr.dy * rw - gr.w * rdy) / (rw * rw);
        }
        cum[k] = acc;
    }

    // Hazard terms are undefined from the last positively weighted time on.
    let last_positive = local.iter().rev().find(|lw| lw.w > 0.0).map(|lw| lw.t);
    let first_undefined = match last_positive {
        Some(t) => distinct_times.partition_point(|&v| v < t),
        None => 0,
    };

    times
        .iter()
        .map(|&t| {
            let k = groups.partition_point(|gr| gr.t <= t);
            let (rw, rdx, rdy) = if k == 0 { totals } else { after[k - 1] };
            let survival = (totals.0 > 0.0).then(|| {
                let tw = totals.0;
                SurvivalPoint {
                    value: rw / tw,
                    deriv_x: (rdx * tw - totals.1 * rw) / (tw * tw),
                    deriv_y: (rdy * tw - totals.2 * rw) / (tw * tw),
                }
            });
            let (cv, cdx, cdy) = if k == 0 { (0.0, 0.0, 0.0) } else { cum[k - 1] };
            let upto = distinct_times.partition_point(|&v| v <= t);
            CurvePoint {
                t,
                survival,
                cum_hazard: cv,
                cum_hazard_dx: cdx,
                cum_hazard_dy: cdy,
                undefined_terms: upto.saturating_sub(first_undefined),
            }
        })
        .collect()
}
