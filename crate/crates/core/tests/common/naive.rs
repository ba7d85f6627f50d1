//! Brute-force reference implementations: every quantity is a direct double
//! loop over all observations with the kernel written out by hand.
#![allow(dead_code)]

pub struct Sample {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn k(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

fn dk(u: f64) -> f64 {
    if u.abs() < 1.0 {
        -1.5 * u
    } else {
        0.0
    }
}

/// `(t_i, w_i, dw_i/dx, dw_i/dy)` for all observations.
pub fn weights(d: &Sample, x: f64, y: f64, hx: f64, hy: f64) -> Vec<(f64, f64, f64, f64)> {
    (0..d.t.len())
        .map(|i| {
            let (ux, uy) = ((x - d.x[i]) / hx, (y - d.y[i]) / hy);
            let (kx, ky) = (k(ux) / hx, k(uy) / hy);
            (d.t[i], kx * ky, dk(ux) / (hx * hx) * ky, kx * dk(uy) / (hy * hy))
        })
        .collect()
}

pub fn distinct_times(d: &Sample) -> Vec<f64> {
    let mut v = d.t.clone();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn hazard(d: &Sample, tj: f64, x: f64, y: f64, hx: f64, hy: f64) -> Option<f64> {
    let w = weights(d, x, y, hx, hy);
    let num: f64 = w.iter().filter(|q| q.0 == tj).map(|q| q.1).sum();
    let den: f64 = w.iter().filter(|q| q.0 > tj).map(|q| q.1).sum();
    (den > 0.0).then(|| num / den)
}

/// `(value, d/dx, d/dy)` of the survivor share.
pub fn survival(d: &Sample, t: f64, x: f64, y: f64, hx: f64, hy: f64) -> Option<(f64, f64, f64)> {
    let w = weights(d, x, y, hx, hy);
    let s: f64 = w.iter().map(|v| v.1).sum();
    let sx: f64 = w.iter().map(|v| v.2).sum();
    let sy: f64 = w.iter().map(|v| v.3).sum();
    let r: f64 = w.iter().filter(|v| v.0 > t).map(|v| v.1).sum();
    let rx: f64 = w.iter().filter(|v| v.0 > t).map(|v| v.2).sum();
    let ry: f64 = w.iter().filter(|v| v.0 > t).map(|v| v.3).sum();
    (s > 0.0).then(|| (r / s, (rx * s - sx * r) / (s * s), (ry * s - sy * r) / (s * s)))
}

/// `(value, d/dx, d/dy, undefined terms)` of the Nelson-Aalen sum.
pub fn nelson_aalen(d: &Sample, t: f64, x: f64, y: f64, hx: f64, hy: f64) -> (f64, f64, f64, usize) {
    let w = weights(d, x, y, hx, hy);
    let (mut v, mut vx, mut vy, mut undefined) = (0.0, 0.0, 0.0, 0);
    for tj in distinct_times(d).into_iter().filter(|&tj| tj <= t) {
        let at = |f: fn(&(f64, f64, f64, f64)) -> f64| -> f64 { w.iter().filter(|q| q.0 == tj).map(f).sum() };
        let after = |f: fn(&(f64, f64, f64, f64)) -> f64| -> f64 { w.iter().filter(|q| q.0 > tj).map(f).sum() };
        let (n, nx, ny) = (at(|q| q.1), at(|q| q.2), at(|q| q.3));
        let (r, rx, ry) = (after(|q| q.1), after(|q| q.2), after(|q| q.3));
        if r > 0.0 {
            v += n / r;
            vx += (nx * r - n * rx) / (r * r);
            vy += (ny * r - n * ry) / (r * r);
        } else {
            undefined += 1;
        }
    }
    (v, vx, vy, undefined)
}

/// `(m, m_x, m_y)` of the Nadaraya-Watson mean of `t`.
pub fn nw(d: &Sample, x: f64, y: f64, hx: f64, hy: f64) -> Option<(f64, f64, f64)> {
    let w = weights(d, x, y, hx, hy);
    let s: f64 = w.iter().map(|v| v.1).sum();
    let st: f64 = w.iter().map(|v| v.0 * v.1).sum();
    let sx: f64 = w.iter().map(|v| v.2).sum();
    let sy: f64 = w.iter().map(|v| v.3).sum();
    let stx: f64 = w.iter().map(|v| v.0 * v.2).sum();
    let sty: f64 = w.iter().map(|v| v.0 * v.3).sum();
    (s > 0.0).then(|| (st / s, (stx * s - st * sx) / (s * s), (sty * s - st * sy) / (s * s)))
}

pub fn means(d: &Sample) -> (f64, f64) {
    let n = d.t.len() as f64;
    (d.x.iter().sum::<f64>() / n, d.y.iter().sum::<f64>() / n)
}

/// Average of `num/den` over grid points where `keep(t, den)` holds.
fn grid_mean(points: &[(f64, f64, f64)], keep: &dyn Fn(f64, f64) -> bool) -> Option<(f64, usize)> {
    let kept: Vec<f64> = points
        .iter()
        .filter(|p| p.2 != 0.0 && keep(p.0, p.2))
        .map(|p| p.1 / p.2)
        .collect();
    (!kept.is_empty()).then(|| (kept.iter().sum::<f64>() / kept.len() as f64, kept.len()))
}

pub fn eta_pi_bar(d: &Sample, grid: &[f64], hx: f64, hy: f64, keep: &dyn Fn(f64, f64) -> bool) -> Option<(f64, usize)> {
    let (xb, yb) = means(d);
    let pts: Vec<(f64, f64, f64)> = grid
        .iter()
        .filter_map(|&t| survival(d, t, xb, yb, hx, hy).map(|s| (t, s.1, s.2)))
        .collect();
    grid_mean(&pts, keep)
}

pub fn eta_lambda_bar(d: &Sample, grid: &[f64], hx: f64, hy: f64, keep: &dyn Fn(f64, f64) -> bool) -> Option<(f64, usize)> {
    let (xb, yb) = means(d);
    let pts: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&t| {
            let na = nelson_aalen(d, t, xb, yb, hx, hy);
            (t, na.1, na.2)
        })
        .collect();
    grid_mean(&pts, keep)
}

pub fn eta_m(d: &Sample, x: f64, y: f64, hx: f64, hy: f64) -> Option<f64> {
    nw(d, x, y, hx, hy).and_then(|(_, mx, my)| (my != 0.0).then(|| mx / my))
}

/// Ratio of sums over the sample points where both derivatives exist.
pub fn eta_bar(d: &Sample, hx: f64, hy: f64) -> Option<(f64, usize)> {
    let (mut num, mut den, mut used) = (0.0, 0.0, 0);
    for i in 0..d.t.len() {
        if let Some((_, mx, my)) = nw(d, d.x[i], d.y[i], hx, hy) {
            num += mx;
            den += my;
            used += 1;
        }
    }
    (used > 0 && den != 0.0).then(|| (num / den, used))
}

/// `|a - b| <= tol * max(|b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
