//! Turning density kernels into something the bound and oracle routines can
//! consume.
//!
//! [`discretize`] is the plain Nyström image: entry `(i, j) = k(x_i, x_j) w_j`,
//! materialized. [`NystromOperator`] has the same entries computed on demand,
//! for grids too large to store.
//!
//! A single shared grid cannot show order-of-integration effects: finite
//! double sums always commute. [`IteratedQuadrature`] evaluates the inner
//! integral first on its own breakpoint-split rule, which is what the
//! iterated integrals `∫ dz ∫ dy` and `∫ dy ∫ dz` actually mean when the
//! absolute double integral diverges.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bounds::perron_bounds;
use crate::error::{Error, Result};
use crate::kernel::{
    absolute_product_mass, DensityKernel, DiscretizedKernel, Kernel, MassAggregation, MatrixKernel,
    Profile,
};
use crate::measure::{
    make_uniform_grid, IntervalDomain, QuadratureGrid, QuadratureRule, SampledFunction,
};
use crate::oracle::power_iteration;

fn check_domain(kernel: &DensityKernel, grid: &QuadratureGrid) -> Result<()> {
    if kernel.domain() != grid.domain() {
        return Err(Error::invalid(format!(
            "kernel {} lives on {:?} but the grid covers {:?}",
            kernel.label(),
            kernel.domain(),
            grid.domain()
        )));
    }
    Ok(())
}

/// Materialized Nyström matrix of `kernel` on `grid`.
pub fn discretize(kernel: &DensityKernel, grid: &QuadratureGrid) -> Result<DiscretizedKernel> {
    check_domain(kernel, grid)?;
    let n = grid.len();
    let mut entries = Vec::with_capacity(n * n);
    for &x in grid.nodes() {
        for (&y, &w) in grid.nodes().iter().zip(grid.weights()) {
            entries.push(kernel.eval(x, y)? * w);
        }
    }
    let matrix = MatrixKernel::new(n, entries)?;
    Ok(DiscretizedKernel::new(grid.clone(), matrix))
}

/// Matrix-free Nyström operator. Every entry is evaluated once up front to
/// validate the kernel, then recomputed on each access.
#[derive(Debug, Clone)]
pub struct NystromOperator<'a> {
    kernel: &'a DensityKernel,
    grid: &'a QuadratureGrid,
}

impl<'a> NystromOperator<'a> {
    pub fn new(kernel: &'a DensityKernel, grid: &'a QuadratureGrid) -> Result<Self> {
        check_domain(kernel, grid)?;
        for &x in grid.nodes() {
            for &y in grid.nodes() {
                kernel.eval(x, y)?;
            }
        }
        Ok(Self { kernel, grid })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.grid
    }
}

impl Kernel for NystromOperator<'_> {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        let nodes = self.grid.nodes();
        self.kernel.value(nodes[i], nodes[j]) * self.grid.weights()[j]
    }
}

/// Inner rule for iterated integrals: the domain is split at the given
/// breakpoints and each piece gets `panels` midpoint panels.
///
/// Pieces that start at the domain's lower end are uniform. Pieces starting
/// at a breakpoint `a > lo` use the substitution `z - lo = (a - lo) r^t`,
/// `t ∈ [0, 1]`, which clusters nodes next to the breakpoint and integrates
/// power-law behaviour toward the lower corner accurately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IteratedQuadrature {
    pub panels: usize,
}

impl Default for IteratedQuadrature {
    fn default() -> Self {
        Self { panels: 4096 }
    }
}

impl IteratedQuadrature {
    pub fn new(panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::invalid("inner rule needs at least one panel"));
        }
        Ok(Self { panels })
    }

    /// `∫_domain f`, with `breaks` (inside the domain, any order) as piece
    /// boundaries. Summation order is fixed.
    pub fn integrate(
        &self,
        domain: IntervalDomain,
        breaks: &[f64],
        mut f: impl FnMut(f64) -> Result<f64>,
    ) -> Result<f64> {
        let (lo, hi) = (domain.lo(), domain.hi());
        let mut edges = Vec::with_capacity(breaks.len() + 2);
        edges.push(lo);
        edges.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        edges.push(hi);
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let m = self.panels;
        let mut acc = 0.0;
        for piece in edges.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if a == lo {
                let h = (b - a) / m as f64;
                for k in 0..m {
                    acc += f(a + (k as f64 + 0.5) * h)? * h;
                }
            } else {
                let (da, db) = (a - lo, b - lo);
                let step = (db / da).ln() / m as f64;
                let q = step.exp();
                let mut d = da * (0.5 * step).exp();
                for _ in 0..m {
                    acc += f(lo + d)? * d * step;
                    d *= q;
                }
            }
        }
        Ok(acc)
    }
}

/// `R K(x_i) = ∫ k(x_i, y) dy` with the inner integral split at `x_i`.
pub fn iterated_row_sum(
    kernel: &DensityKernel,
    grid: &QuadratureGrid,
    rule: IteratedQuadrature,
) -> Result<SampledFunction> {
    check_domain(kernel, grid)?;
    let domain = grid.domain();
    let values = grid
        .nodes()
        .iter()
        .map(|&x| rule.integrate(domain, &[x], |y| kernel.eval(x, y)))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(values)
}

/// `R (F·G)(x_i) = ∫ dz [∫ f(x_i, y) g(y, z) dy]`: the product kernel is
/// formed first (inner integral over `y`), then its row is summed over the
/// outer grid in `z`.
///
/// Separable `F = a(x) b(y)` costs `O(n · panels)`; general `F` costs
/// `O(n² · panels)`.
pub fn iterated_product_row_sum(
    f: &DensityKernel,
    g: &DensityKernel,
    grid: &QuadratureGrid,
    rule: IteratedQuadrature,
) -> Result<SampledFunction> {
    check_domain(f, grid)?;
    check_domain(g, grid)?;
    let domain = grid.domain();
    let (nodes, weights) = (grid.nodes(), grid.weights());

    let values = if let Some((left, right)) = f.factors() {
        let mut total = 0.0;
        for (&z, &w) in nodes.iter().zip(weights) {
            let column = rule.integrate(domain, &[z], |y| Ok(right.eval(y) * g.eval(y, z)?))?;
            total += column * w;
        }
        nodes.iter().map(|&x| left.eval(x) * total).collect()
    } else {
        let mut values = Vec::with_capacity(nodes.len());
        for &x in nodes {
            let mut total = 0.0;
            for (&z, &w) in nodes.iter().zip(weights) {
                let column =
                    rule.integrate(domain, &[x, z], |y| Ok(f.eval(x, y)? * g.eval(y, z)?))?;
                total += column * w;
            }
            values.push(total);
        }
        values
    };
    SampledFunction::new(values)
}

/// What [`convergence_study`] tracks per grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyQuantity {
    /// Oracle Perron root of the Nyström matrix.
    Rho,
    /// Lower bound with `L = K`.
    LowerBound,
    /// Upper bound with `L = K`.
    UpperBound,
    /// `sup_x ∬ |k(y, z)| dy dz`: absolute product mass against Lebesgue measure.
    AbsoluteMass,
}

impl std::str::FromStr for StudyQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Self::Rho),
            "lower" => Ok(Self::LowerBound),
            "upper" => Ok(Self::UpperBound),
            "abs-mass" | "abs_mass" => Ok(Self::AbsoluteMass),
            other => Err(Error::invalid(format!("unknown study quantity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub size: usize,
    pub value: f64,
    /// Change from the previous size.
    pub delta: Option<f64>,
}

const STUDY_TOL: f64 = 1e-13;
const STUDY_MAX_ITER: usize = 100_000;

/// Discretizes on midpoint grids of increasing size and reports the chosen
/// quantity with successive differences. No extrapolation.
pub fn convergence_study(
    kernel: &DensityKernel,
    sizes: &[usize],
    quantity: StudyQuantity,
) -> Result<Vec<StudyRow>> {
    if sizes.is_empty() {
        return Err(Error::invalid("no grid sizes given"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "grid sizes {sizes:?} must be strictly increasing"
        )));
    }
    let lebesgue = DensityKernel::separable(
        kernel.domain(),
        false,
        "lebesgue",
        Profile::Constant { value: 1.0 },
        Profile::Constant { value: 1.0 },
    );
    let mut rows: Vec<StudyRow> = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let grid = make_uniform_grid(kernel.domain(), size, QuadratureRule::Midpoint)?;
        let value = match quantity {
            StudyQuantity::Rho => {
                power_iteration(
                    &NystromOperator::new(kernel, &grid)?,
                    STUDY_TOL,
                    STUDY_MAX_ITER,
                )?
                .rho
            }
            StudyQuantity::LowerBound | StudyQuantity::UpperBound => {
                let k = NystromOperator::new(kernel, &grid)?;
                let report = perron_bounds(&k, &k)?;
                if quantity == StudyQuantity::LowerBound {
                    report.lower
                } else {
                    report.upper
                }
            }
            StudyQuantity::AbsoluteMass => {
                absolute_product_mass(&lebesgue, kernel, &grid, MassAggregation::SupOverX)?
            }
        };
        let delta = rows.last().map(|prev| value - prev.value);
        rows.push(StudyRow { size, value, delta });
    }
    Ok(rows)
}

/// `size,value,delta` with an empty delta on the first row.
pub fn study_to_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("size,value,delta\n");
    for r in rows {
        match r.delta {
            Some(d) => writeln!(out, "{},{},{}", r.size, r.value, d),
            None => writeln!(out, "{},{},", r.size, r.value),
        }
        .unwrap();
    }
    out
}
