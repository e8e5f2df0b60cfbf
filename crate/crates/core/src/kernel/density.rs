use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{IntervalDomain, QuadratureGrid};

/// One-variable factor of a separable density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `1 + beta * x`
    Affine {
        beta: f64,
    },
    /// `exp(beta * x)`
    Exponential {
        beta: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Affine { beta } => 1.0 + beta * x,
            Profile::Exponential { beta } => (beta * x).exp(),
        }
    }
}

/// Built-in density families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum KernelFamily {
    Constant {
        c: f64,
    },
    RankOne {
        a: Profile,
        b: Profile,
    },
    /// Lebesgue measure on `[0, 1]`, independent of the starting point.
    FExample,
    /// The signed kernel of the Fubini counterexample, see [`g_example_density`].
    GExample,
}

/// JSON description of a density kernel:
/// `{"family": str, "params": {...}, "domain": [lo, hi], "signed": bool}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(default = "IntervalDomain::unit")]
    pub domain: IntervalDomain,
    #[serde(default)]
    pub signed: bool,
}

impl DensitySpec {
    pub fn build(&self) -> Result<DensityKernel> {
        builtin_kernel(&self.family, self.domain, self.signed)
    }
}

type DensityFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Form {
    Separable { left: Profile, right: Profile },
    General(Arc<DensityFn>),
}

/// Real density `k(x, y)` against Lebesgue measure on an interval, so that
/// `K(x, dy) = k(x, y) dy`.
///
/// Unsigned kernels must evaluate to non-negative values; this is checked on
/// every call to [`DensityKernel::eval`].
#[derive(Clone)]
pub struct DensityKernel {
    domain: IntervalDomain,
    form: Form,
    signed: bool,
    label: String,
}

impl fmt::Debug for DensityKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityKernel")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("signed", &self.signed)
            .finish()
    }
}

impl DensityKernel {
    pub fn from_fn<F>(
        domain: IntervalDomain,
        signed: bool,
        label: impl Into<String>,
        density: F,
    ) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            domain,
            form: Form::General(Arc::new(density)),
            signed,
            label: label.into(),
        }
    }

    /// `k(x, y) = a(x) b(y)`.
    pub fn separable(
        domain: IntervalDomain,
        signed: bool,
        label: impl Into<String>,
        left: Profile,
        right: Profile,
    ) -> Self {
        Self {
            domain,
            form: Form::Separable { left, right },
            signed,
            label: label.into(),
        }
    }

    pub fn domain(&self) -> IntervalDomain {
        self.domain
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The factors `(a, b)` when the density is `a(x) b(y)`.
    pub fn factors(&self) -> Option<(Profile, Profile)> {
        match self.form {
            Form::Separable { left, right } => Some((left, right)),
            Form::General(_) => None,
        }
    }

    /// Raw density value, unchecked.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.form {
            Form::Separable { left, right } => left.eval(x) * right.eval(y),
            Form::General(f) => f(x, y),
        }
    }

    /// Density value, rejecting non-finite results and negative values of
    /// unsigned kernels.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = self.value(x, y);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "{} is not finite at ({x}, {y})",
                self.label
            )));
        }
        if !self.signed && v < 0.0 {
            return Err(Error::Evaluation(format!(
                "{} is declared unsigned but equals {v} at ({x}, {y})",
                self.label
            )));
        }
        Ok(v)
    }
}

/// The signed density of the Fubini counterexample on `[0, 1]`:
///
/// ```text
/// g(y, z) = -1/z²   0 < y < z <= 1
///            1/y²   0 < z <= y <= 1
///           -1      z = 0, y != 0
///            1      y = 0
/// ```
///
/// Each row integrates to 1 while each column integrates to -1; `|g|` is not
/// integrable near the origin.
pub fn g_example_density(y: f64, z: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else if z == 0.0 {
        -1.0
    } else if y < z {
        -1.0 / (z * z)
    } else {
        1.0 / (y * y)
    }
}

pub fn builtin_kernel(
    family: &KernelFamily,
    domain: IntervalDomain,
    signed: bool,
) -> Result<DensityKernel> {
    let unit = Profile::Constant { value: 1.0 };
    let require_unit = |name: &str| {
        if domain != IntervalDomain::unit() {
            return Err(Error::invalid(format!("{name} is defined on [0, 1] only")));
        }
        Ok(())
    };
    match *family {
        KernelFamily::Constant { c } => {
            if !c.is_finite() {
                return Err(Error::invalid(format!("constant {c} is not finite")));
            }
            if c < 0.0 && !signed {
                return Err(Error::Domain(format!(
                    "constant {c} is negative but the kernel is unsigned"
                )));
            }
            Ok(DensityKernel::separable(
                domain,
                signed,
                format!("constant({c})"),
                unit,
                Profile::Constant { value: c },
            ))
        }
        KernelFamily::RankOne { a, b } => {
            Ok(DensityKernel::separable(domain, signed, "rank_one", a, b))
        }
        KernelFamily::FExample => {
            require_unit("f_example")?;
            Ok(DensityKernel::separable(
                domain,
                signed,
                "f_example",
                unit,
                unit,
            ))
        }
        KernelFamily::GExample => {
            require_unit("g_example")?;
            if !signed {
                return Err(Error::Domain(
                    "g_example takes negative values and must be declared signed".into(),
                ));
            }
            Ok(DensityKernel::from_fn(
                domain,
                true,
                "g_example",
                g_example_density,
            ))
        }
    }
}

/// How the outer variable of the absolute product mass is aggregated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassAggregation {
    /// `sup_x ∬ |f(x, y) g(y, z)| dy dz`
    #[default]
    SupOverX,
    /// `∫∬ |f(x, y) g(y, z)| dx dy dz`
    Total,
}

/// Quadrature estimate of `∬ |F(x, dy) G(y, dz)|`.
///
/// A finite value is what licenses swapping the order of integration in
/// `R (F·G)`. A sequence of estimates that keeps growing under grid refinement
/// is consistent with the double integral diverging.
pub fn absolute_product_mass(
    f: &DensityKernel,
    g: &DensityKernel,
    grid: &QuadratureGrid,
    aggregation: MassAggregation,
) -> Result<f64> {
    let nodes = grid.nodes();
    let weights = grid.weights();

    // |f g| = |f| |g|, so the z-integral only depends on y
    let mut inner = Vec::with_capacity(nodes.len());
    for &y in nodes {
        let mut acc = 0.0;
        for (&z, &w) in nodes.iter().zip(weights) {
            acc += g.eval(y, z)?.abs() * w;
        }
        inner.push(acc);
    }

    let mut agg = 0.0;
    for (&x, &wx) in nodes.iter().zip(weights) {
        let mut acc = 0.0;
        for ((&y, &w), a) in nodes.iter().zip(weights).zip(&inner) {
            acc += f.eval(x, y)?.abs() * w * a;
        }
        agg = match aggregation {
            MassAggregation::SupOverX => f64::max(agg, acc),
            MassAggregation::Total => agg + wx * acc,
        };
    }
    Ok(agg)
}
