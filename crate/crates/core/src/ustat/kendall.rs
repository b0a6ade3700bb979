//! Kendall's tau as an order-two U-statistic over column pairs.
//!
//! The statistic for pair `(a, b)` is
//! `C(n,2)⁻¹ Σ_{k<l} sign(x_ka − x_la)·sign(x_kb − x_lb)`; ties contribute
//! zero. The fast path counts inversions with a merge sort and is required
//! to agree exactly with the sign-sum definition.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::kernel::Kernel;
use crate::data::DataMatrix;
use crate::error::{Error, Result};

#[inline]
fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `Σ_{k<l} sign(x_k − x_l)·sign(y_k − y_l)` by direct enumeration.
pub fn sign_sum_naive(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len();
    let mut s = 0;
    for k in 0..n {
        for l in k + 1..n {
            s += sign(x[k] - x[l]) * sign(y[k] - y[l]);
        }
    }
    s
}

/// Kendall's tau (no tie adjustment) by direct enumeration.
pub fn tau_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    sign_sum_naive(x, y) as f64 / (n * (n - 1.0) / 2.0)
}

/// Row indices sorted by value, ties by index.
fn argsort(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    idx
}

fn tied_pairs_sorted(sorted: impl Iterator<Item = f64>) -> i64 {
    let mut ties = 0i64;
    let mut run = 0i64;
    let mut prev: Option<f64> = None;
    for v in sorted {
        if prev == Some(v) {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
        prev = Some(v);
    }
    ties + run * (run - 1) / 2
}

/// Counts pairs `i < j` with `v[i] > v[j]`, sorting `v` in place.
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> i64 {
    let n = v.len();
    buf.clear();
    buf.resize(n, 0.0);
    let mut swaps = 0i64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if v[i] <= v[j] {
                    buf[k] = v[i];
                    i += 1;
                } else {
                    buf[k] = v[j];
                    swaps += (mid - i) as i64;
                    j += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&v[j..end]);
            start = end;
        }
        v.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

/// Per-column precomputation shared by all pairs touching that column.
struct ColumnOrder {
    order: Vec<usize>,
    ties: i64,
    has_ties: bool,
}

impl ColumnOrder {
    fn new(x: &[f64]) -> Self {
        let order = argsort(x);
        let ties = tied_pairs_sorted(order.iter().map(|&i| x[i]));
        Self {
            order,
            ties,
            has_ties: ties > 0,
        }
    }
}

fn sign_sum_sorted(xa: &[f64], xb: &[f64], ca: &ColumnOrder, cb: &ColumnOrder) -> i64 {
    let n = xa.len() as i64;
    let n0 = n * (n - 1) / 2;
    let mut ys: Vec<f64> = ca.order.iter().map(|&i| xb[i]).collect();
    let mut joint = 0i64;
    if ca.has_ties {
        // Within runs of equal x_a, order by x_b so those pairs count no swaps.
        let mut start = 0;
        while start < ys.len() {
            let xv = xa[ca.order[start]];
            let mut end = start + 1;
            while end < ys.len() && xa[ca.order[end]] == xv {
                end += 1;
            }
            if end - start > 1 {
                let run = &mut ys[start..end];
                run.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
                joint += tied_pairs_sorted(run.iter().copied());
            }
            start = end;
        }
    }
    let mut buf = Vec::new();
    let swaps = count_inversions(&mut ys, &mut buf);
    n0 - ca.ties - cb.ties + joint - 2 * swaps
}

/// Kendall's tau via merge-sort inversion counting, `O(n log n)`.
pub fn tau_fast(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let cx = ColumnOrder::new(x);
    let cy = ColumnOrder::new(y);
    sign_sum_sorted(x, y, &cx, &cy) as f64 / (n * (n - 1.0) / 2.0)
}

/// Per-row sums `s_l = Σ_{k≠l} sign(x_l − x_k)·sign(y_l − y_k)`.
fn row_sign_sums(x: &[f64], y: &[f64]) -> Vec<i64> {
    let n = x.len();
    let mut s = vec![0i64; n];
    for l in 0..n {
        let (xl, yl) = (x[l], y[l]);
        let mut acc = 0;
        for k in l + 1..n {
            let v = sign(xl - x[k]) * sign(yl - y[k]);
            acc += v;
            s[k] += v;
        }
        s[l] += acc;
    }
    s
}

/// Kendall's tau for every column pair `(i, j)`, `i < j`, optionally
/// keeping only pairs with `j − i ≥ band`.
///
/// Output coordinates follow the `vech` ordering: pairs sorted by `i`, then
/// `j`.
#[derive(Debug, Clone)]
pub struct KendallKernel {
    d: usize,
    band: usize,
    pairs: Vec<(usize, usize)>,
}

impl KendallKernel {
    pub fn new(d: usize) -> Result<Self> {
        Self::with_band(d, 1)
    }

    /// Restricts to pairs with `|i − j| ≥ band`.
    pub fn with_band(d: usize, band: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::param(format!("Kendall kernel needs d >= 2, got {d}")));
        }
        let band = band.max(1);
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (i + band..d).map(move |j| (i, j)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::param(format!("band {band} leaves no pairs for d = {d}")));
        }
        Ok(Self { d, band, pairs })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, coord: usize) -> (usize, usize) {
        self.pairs[coord]
    }

    pub fn coord_of(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs.binary_search(&(i, j)).ok()
    }
}

impl Kernel for KendallKernel {
    fn name(&self) -> &str {
        "kendall"
    }

    fn order(&self) -> usize {
        2
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.pairs.len()
    }

    fn evaluate(&self, data: &DataMatrix, rows: &[usize], out: &mut [f64]) {
        let (k, l) = (rows[0], rows[1]);
        for (o, &(i, j)) in out.iter_mut().zip(&self.pairs) {
            *o = (sign(data.get(k, i) - data.get(l, i)) * sign(data.get(k, j) - data.get(l, j)))
                as f64;
        }
    }

    fn statistic(&self, data: &DataMatrix) -> Vec<f64> {
        let n = data.n() as f64;
        let n0 = n * (n - 1.0) / 2.0;
        let orders: Vec<ColumnOrder> = (0..self.d)
            .into_par_iter()
            .map(|j| ColumnOrder::new(data.column(j)))
            .collect();
        self.pairs
            .par_iter()
            .map(|&(i, j)| {
                sign_sum_sorted(data.column(i), data.column(j), &orders[i], &orders[j]) as f64 / n0
            })
            .collect()
    }

    fn leave_one_out(&self, data: &DataMatrix, coords: &[usize]) -> DMatrix<f64> {
        let n = data.n();
        let m = (n - 1) as f64;
        let n0_minus = m * (m - 1.0) / 2.0;
        let cols: Vec<Vec<f64>> = coords
            .par_iter()
            .map(|&c| {
                let (i, j) = self.pairs[c];
                let s = row_sign_sums(data.column(i), data.column(j));
                let total: i64 = s.iter().sum::<i64>() / 2;
                s.iter().map(|&sl| (total - sl) as f64 / n0_minus).collect()
            })
            .collect();
        DMatrix::from_fn(n, coords.len(), |l, c| cols[c][l])
    }
}
