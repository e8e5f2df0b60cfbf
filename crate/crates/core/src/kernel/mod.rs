//! Non-negative (and signed test) kernels: dense matrices for a finite state
//! space, densities on an interval, and their Nyström images.
//!
//! Entry `(i, j)` of every representation is the mass moved from state `i`
//! into state `j`, so the row-sum operator `R K(x) = ∫ K(x, dy)` is literally
//! the sum of row `i`.

mod density;
mod io;
mod matrix;

pub use density::{
    absolute_product_mass, builtin_kernel, g_example_density, DensityKernel, DensitySpec,
    KernelFamily, MassAggregation, Profile,
};
pub use io::{
    matrix_to_csv, parse_density_spec, parse_kernel, parse_matrix_csv, parse_matrix_json,
    KernelInput,
};
pub use matrix::MatrixKernel;

use crate::error::{Error, Result};
use crate::measure::{QuadratureGrid, SampledFunction};

/// A square array of finite reals that can be read entry by entry.
///
/// Implementations may store their entries or compute them on demand. All
/// reductions run in a fixed index order, so results are bit-reproducible.
pub trait Kernel {
    fn dim(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    /// `R K`, each row summed left to right.
    fn row_sums(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).fold(0.0, |acc, j| acc + self.entry(i, j)))
            .collect()
    }

    /// `(K v)_i = sum_j K(i, j) v_j`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(v.len(), n);
        (0..n)
            .map(|i| (0..n).fold(0.0, |acc, j| acc + self.entry(i, j) * v[j]))
            .collect()
    }

    /// `(v^T K)_j = sum_i v_i K(i, j)`.
    fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(v.len(), n);
        (0..n)
            .map(|j| (0..n).fold(0.0, |acc, i| acc + v[i] * self.entry(i, j)))
            .collect()
    }

    /// First negative entry in row-major order.
    fn first_negative(&self) -> Option<(usize, usize)> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| self.entry(i, j) < 0.0)
    }

    fn max_row_sum(&self) -> f64 {
        self.row_sums().into_iter().fold(0.0, f64::max)
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }
    fn row_sums(&self) -> Vec<f64> {
        (**self).row_sums()
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (**self).apply(v)
    }
    fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        (**self).apply_left(v)
    }
    fn first_negative(&self) -> Option<(usize, usize)> {
        (**self).first_negative()
    }
}

/// A density kernel sampled on a grid: entry `(i, j) = k(x_i, x_j) * w_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedKernel {
    grid: QuadratureGrid,
    matrix: MatrixKernel,
}

impl DiscretizedKernel {
    pub(crate) fn new(grid: QuadratureGrid, matrix: MatrixKernel) -> Self {
        debug_assert_eq!(grid.len(), matrix.n());
        Self { grid, matrix }
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &MatrixKernel {
        &self.matrix
    }

    pub fn into_matrix(self) -> MatrixKernel {
        self.matrix
    }
}

impl Kernel for DiscretizedKernel {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.entry(i, j)
    }
    fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.apply(v)
    }
    fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.apply_left(v)
    }
    fn first_negative(&self) -> Option<(usize, usize)> {
        self.matrix.first_negative()
    }
}

/// `R K(x) = ∫ K(x, dy)`; on a finite index set, the row sums.
pub fn row_sum<K: Kernel + ?Sized>(kernel: &K) -> SampledFunction {
    SampledFunction::from_vec(kernel.row_sums())
}

/// Matrix analogue of `F·G (x, A) = ∫ F(x, dy) G(y, A)`.
pub fn kernel_product(f: &MatrixKernel, g: &MatrixKernel) -> Result<MatrixKernel> {
    f.matmul(g)
}

/// `R (F·G)` evaluated as `F` applied to `R G`.
///
/// For finite kernels this equals `row_sum(kernel_product(F, G))` because the
/// two finite sums can be exchanged. For densities the exchange needs the
/// absolute product mass to be finite; see [`absolute_product_mass`].
pub fn product_row_sum<F, G>(f: &F, g: &G) -> Result<SampledFunction>
where
    F: Kernel + ?Sized,
    G: Kernel + ?Sized,
{
    if f.dim() != g.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            f.dim(),
            g.dim()
        )));
    }
    Ok(SampledFunction::from_vec(f.apply(&g.row_sums())))
}
