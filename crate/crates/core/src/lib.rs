//! Two-sided bounds on the Perron root of non-negative kernels via a test
//! kernel `L`, with the pieces needed to use and check them: row sums and
//! kernel products, a power-iteration oracle, Nyström discretization of
//! density kernels, a diagnostic for the absolute-integrability condition,
//! and the decay rate of Markov-modulated random walks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod counterexample;
pub mod decay;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod nystrom;
pub mod oracle;

pub use bounds::{
    bounds_from_row_sums, fubini_trend, perron_bounds, perron_bounds_density, refine_bounds,
    refine_bounds_with, scaled_power, BoundsReport, DensityBounds, DensityBoundsOptions,
    FubiniTrend, FUBINI_GROWTH_FACTOR,
};
pub use counterexample::{
    analytic_fg_rowsum, analytic_rowsum_g, verify_counterexample, CounterexampleReport,
};
pub use decay::{
    decay_rate_bounds, effective_decay_rate, tilt_kernel, tilt_kernel_source, DecayRateResult,
    ModulatedSource,
};
pub use error::{Error, Result};
pub use kernel::{
    absolute_product_mass, builtin_kernel, kernel_product, product_row_sum, row_sum, DensityKernel,
    DensitySpec, DiscretizedKernel, Kernel, KernelFamily, KernelInput, MassAggregation,
    MatrixKernel, Profile,
};
pub use measure::{
    integrate, make_uniform_grid, mediant_bounds, IntervalDomain, MediantBounds, QuadratureGrid,
    QuadratureRule, SampledFunction, WeightedMeasure,
};
pub use nystrom::{
    convergence_study, discretize, iterated_product_row_sum, iterated_row_sum, IteratedQuadrature,
    NystromOperator, StudyQuantity, StudyRow,
};
pub use oracle::{closed_form_2x2, left_power_iteration, perron_pair, power_iteration, EigenPair};
