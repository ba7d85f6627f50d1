//! Fixed-radius neighbour search returning points in data-index order.
//!
//! Points are bucketed into horizontal strips of y and sorted by x inside
//! each strip. A query marks the hits in a bitset keyed by the original row
//! index and then walks the bitset, so every kernel sum is accumulated in
//! index order no matter how the index is laid out. That makes sums
//! invariant under relabeling the covariates and under shifting them.

pub(crate) struct NeighborIndex {
    reach_x: f64,
    reach_y: f64,
    y0: f64,
    width: f64,
    starts: Vec<usize>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    ids: Vec<u32>,
    n: usize,
}

/// Per-thread working memory for [`NeighborIndex::for_each`].
pub struct Scratch {
    words: Vec<u64>,
}

impl NeighborIndex {
    pub(crate) fn new(x: &[f64], y: &[f64], reach_x: f64, reach_y: f64) -> Self {
        let n = x.len();
        let y0 = y.iter().copied().fold(f64::INFINITY, f64::min);
        let y1 = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (y1 - y0).max(0.0);
        // Quarter-reach strips keep the scanned band close to the query window;
        // strips never outnumber the points, so sparse data stays cheap.
        let width = (0.25 * reach_y).max(span / n.max(1) as f64);
        let n_strips = (span / width).floor() as usize + 1;

        let strip_of = |v: f64| (((v - y0) / width).floor() as usize).min(n_strips - 1);
        let mut counts = vec![0usize; n_strips + 1];
        for &v in y {
            counts[strip_of(v) + 1] += 1;
        }
        for s in 0..n_strips {
            counts[s + 1] += counts[s];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut order = vec![0u32; n];
        for (i, &v) in y.iter().enumerate() {
            let s = strip_of(v);
            order[fill[s]] = i as u32;
            fill[s] += 1;
        }
        for s in 0..n_strips {
            order[starts[s]..starts[s + 1]]
                .sort_by(|&a, &b| x[a as usize].total_cmp(&x[b as usize]).then(a.cmp(&b)));
        }
        Self {
            reach_x,
            reach_y,
            y0,
            width,
            xs: order.iter().map(|&i| x[i as usize]).collect(),
            ys: order.iter().map(|&i| y[i as usize]).collect(),
            ids: order,
            starts,
            n,
        }
    }

    pub(crate) fn scratch(&self) -> Scratch {
        Scratch {
            words: vec![0; self.n.div_ceil(64)],
        }
    }

    /// Calls `f(i)` for every row with `|x - x_i| < reach_x` and
    /// `|y - y_i| < reach_y`, in increasing `i`.
    pub(crate) fn for_each<F: FnMut(usize)>(&self, x: f64, y: f64, scratch: &mut Scratch, mut f: F) {
        let n_strips = self.starts.len() - 1;
        let lo_pos = (y - self.reach_y - self.y0) / self.width;
        let hi_pos = (y + self.reach_y - self.y0) / self.width;
        if !(hi_pos >= -1.0 && lo_pos <= n_strips as f64 + 1.0) {
            return;
        }
        let s_lo = (lo_pos.floor().max(0.0) as usize).min(n_strips - 1);
        let s_hi = (hi_pos.floor().max(0.0) as usize).min(n_strips - 1);
        // Slightly widened bracket; the exact test below decides membership.
        let pad = self.reach_x * 1e-9;
        let (x_lo, x_hi) = (x - self.reach_x - pad, x + self.reach_x + pad);

        let words = &mut scratch.words;
        let (mut w_lo, mut w_hi) = (usize::MAX, 0usize);
        for s in s_lo..=s_hi {
            let (a, b) = (self.starts[s], self.starts[s + 1]);
            let first = self.xs[a..b].partition_point(|&v| v < x_lo);
            let last = self.xs[a..b].partition_point(|&v| v <= x_hi);
            let (xs, ys, ids) = (&self.xs[a + first..a + last], &self.ys[a + first..a + last], &self.ids[a + first..a + last]);
            for ((&xk, &yk), &id) in xs.iter().zip(ys).zip(ids) {
                // Branch-free: roughly a third of the candidates miss.
                let hit = ((x - xk).abs() < self.reach_x) & ((y - yk).abs() < self.reach_y);
                let id = id as usize;
                let w = id >> 6;
                words[w] |= (hit as u64) << (id & 63);
                w_lo = w_lo.min(w);
                w_hi = w_hi.max(w);
            }
        }
        if w_lo == usize::MAX {
            return;
        }
        for w in w_lo..=w_hi {
            let mut bits = words[w];
            words[w] = 0;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                f((w << 6) | b);
            }
        }
    }
}
