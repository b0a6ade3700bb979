use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// A bounded, symmetric, vector-valued kernel `h` of order `r`.
///
/// Implementations must return outputs that are symmetric in the `r` rows
/// and bounded by [`Kernel::bound`] in every component; the privacy
/// calibration of everything downstream depends on that bound.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &str;

    /// Number of rows consumed per evaluation (`r`).
    fn order(&self) -> usize;

    /// `L∞`, a bound on `|h_j|` for every component.
    fn bound(&self) -> f64;

    /// Expected number of data columns.
    fn input_dim(&self) -> usize;

    /// Number of output coordinates (`p`).
    fn output_dim(&self) -> usize;

    /// Writes `h(X_{rows[0]}, …, X_{rows[r-1]})` into `out` (length `p`).
    fn evaluate(&self, data: &DataMatrix, rows: &[usize], out: &mut [f64]);

    /// Checks data-dependent preconditions, e.g. the bound of a mean kernel.
    fn validate(&self, _data: &DataMatrix) -> Result<()> {
        Ok(())
    }

    /// Averages `h` over all `C(n, r)` row subsets.
    fn statistic(&self, data: &DataMatrix) -> Vec<f64> {
        enumerate_statistic(self, data)
    }

    /// `n × coords.len()` matrix whose row `l` is the statistic recomputed
    /// without row `l`, restricted to `coords`.
    fn leave_one_out(&self, data: &DataMatrix, coords: &[usize]) -> DMatrix<f64> {
        enumerate_leave_one_out(self, data, coords)
    }
}

/// Visits every `r`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r == 0 || r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let mut i = r;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - r {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Definitional `O(C(n,r)·p)` evaluation.
pub fn enumerate_statistic<K: Kernel + ?Sized>(kernel: &K, data: &DataMatrix) -> Vec<f64> {
    let p = kernel.output_dim();
    let mut sum = vec![0.0; p];
    let mut buf = vec![0.0; p];
    for_each_subset(data.n(), kernel.order(), |rows| {
        kernel.evaluate(data, rows, &mut buf);
        for (s, b) in sum.iter_mut().zip(&buf) {
            *s += b;
        }
    });
    let count = binomial_f64(data.n(), kernel.order());
    sum.iter().map(|s| s / count).collect()
}

/// Leave-one-out replicates by downdating: the subsets avoiding row `l` are
/// all subsets minus those containing `l`.
pub fn enumerate_leave_one_out<K: Kernel + ?Sized>(
    kernel: &K,
    data: &DataMatrix,
    coords: &[usize],
) -> DMatrix<f64> {
    let n = data.n();
    let r = kernel.order();
    let k = coords.len();
    let mut total = vec![0.0; k];
    let mut per_row = DMatrix::<f64>::zeros(n, k);
    let mut buf = vec![0.0; kernel.output_dim()];
    for_each_subset(n, r, |rows| {
        kernel.evaluate(data, rows, &mut buf);
        for (c, &j) in coords.iter().enumerate() {
            total[c] += buf[j];
            for &l in rows {
                per_row[(l, c)] += buf[j];
            }
        }
    });
    let count = binomial_f64(n - 1, r);
    DMatrix::from_fn(n, k, |l, c| (total[c] - per_row[(l, c)]) / count)
}

/// Identity kernel of order one: the U-statistic is the column mean.
///
/// Every entry must lie in `[-bound, bound]`.
#[derive(Debug, Clone)]
pub struct MeanKernel {
    d: usize,
    bound: f64,
}

impl MeanKernel {
    pub fn new(d: usize, bound: f64) -> Result<Self> {
        if d == 0 || !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::param("mean kernel needs d >= 1 and a positive bound"));
        }
        Ok(Self { d, bound })
    }
}

impl Kernel for MeanKernel {
    fn name(&self) -> &str {
        "mean"
    }

    fn order(&self) -> usize {
        1
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.d
    }

    fn evaluate(&self, data: &DataMatrix, rows: &[usize], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = data.get(rows[0], j);
        }
    }

    fn validate(&self, data: &DataMatrix) -> Result<()> {
        for j in 0..self.d {
            if data.column(j).iter().any(|v| v.abs() > self.bound) {
                return Err(Error::Data(format!(
                    "column {j} exceeds the declared kernel bound {}",
                    self.bound
                )));
            }
        }
        Ok(())
    }
}

type KernelFn = dyn Fn(&DataMatrix, &[usize], &mut [f64]) + Send + Sync;

/// A user-supplied kernel. The closure is trusted to be symmetric and to
/// respect `bound`.
pub struct FnKernel {
    name: String,
    order: usize,
    bound: f64,
    d: usize,
    p: usize,
    f: Box<KernelFn>,
}

impl FnKernel {
    pub fn new(
        name: impl Into<String>,
        order: usize,
        bound: f64,
        d: usize,
        p: usize,
        f: impl Fn(&DataMatrix, &[usize], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if order == 0 || p == 0 || !(bound > 0.0) {
            return Err(Error::param("kernel needs order >= 1, p >= 1, bound > 0"));
        }
        Ok(Self {
            name: name.into(),
            order,
            bound,
            d,
            p,
            f: Box::new(f),
        })
    }
}

impl Kernel for FnKernel {
    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> usize {
        self.order
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.p
    }

    fn evaluate(&self, data: &DataMatrix, rows: &[usize], out: &mut [f64]) {
        (self.f)(data, rows, out)
    }
}
