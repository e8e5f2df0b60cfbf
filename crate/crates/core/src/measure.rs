//! Interval domains, quadrature grids, discrete measures and the mediant
//! inequality: a weighted average of `f/g` lies between the smallest and
//! largest pointwise ratio.
//!
//! The continuous `inf`/`sup` over a domain are replaced by `min`/`max` over
//! the grid nodes. Bounds built from them are "grid-certified": exact for
//! matrices, sampled for densities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct IntervalDomain {
    lo: f64,
    hi: f64,
}

impl IntervalDomain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "interval [{lo}, {hi}] is not finite"
            )));
        }
        if lo >= hi {
            return Err(Error::invalid(format!(
                "interval [{lo}, {hi}] requires lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl TryFrom<[f64; 2]> for IntervalDomain {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<IntervalDomain> for [f64; 2] {
    fn from(d: IntervalDomain) -> Self {
        [d.lo, d.hi]
    }
}

/// Composite rule used to place nodes on an interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    /// Interior nodes only; never samples the interval endpoints.
    #[default]
    Midpoint,
    Trapezoid,
}

impl FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "trapezoid" => Ok(Self::Trapezoid),
            other => Err(Error::invalid(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

impl fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Midpoint => "midpoint",
            Self::Trapezoid => "trapezoid",
        })
    }
}

/// Ordered nodes with positive weights summing to the domain length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    domain: IntervalDomain,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
}

impl QuadratureGrid {
    pub fn domain(&self) -> IntervalDomain {
        self.domain
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The weights viewed as a discrete measure on the node indices.
    pub fn measure(&self) -> WeightedMeasure {
        WeightedMeasure {
            masses: self.weights.clone(),
        }
    }
}

/// Builds an `n`-node composite grid on `domain`.
///
/// Midpoint: nodes `lo + (i + 1/2) h`, weights `h = (hi - lo) / n`.
/// Trapezoid: nodes `lo + i h` spanning both endpoints, `h = (hi - lo) / (n - 1)`,
/// with half weights at the ends.
pub fn make_uniform_grid(
    domain: IntervalDomain,
    n: usize,
    rule: QuadratureRule,
) -> Result<QuadratureGrid> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "grid needs at least 2 nodes, got {n}"
        )));
    }
    let (lo, hi) = (domain.lo, domain.hi);
    let (nodes, weights) = match rule {
        QuadratureRule::Midpoint => {
            let h = (hi - lo) / n as f64;
            let nodes = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
            (nodes, vec![h; n])
        }
        QuadratureRule::Trapezoid => {
            let h = (hi - lo) / (n - 1) as f64;
            let mut nodes: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
            nodes[n - 1] = hi;
            let mut weights = vec![h; n];
            weights[0] = 0.5 * h;
            weights[n - 1] = 0.5 * h;
            (nodes, weights)
        }
    };
    Ok(QuadratureGrid {
        domain,
        nodes,
        weights,
        rule,
    })
}

/// Non-negative point masses on an index set, not all zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedMeasure {
    masses: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if let Some(i) = masses.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Domain(format!(
                "mass {} at index {i} is not a finite non-negative number",
                masses[i]
            )));
        }
        if !masses.iter().any(|&m| m > 0.0) {
            return Err(Error::DegenerateMeasure("all masses are zero".into()));
        }
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, _)| i)
    }

    pub fn scaled(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::invalid(format!(
                "measure scale {beta} must be positive"
            )));
        }
        Self::new(self.masses.iter().map(|m| m * beta).collect())
    }
}

/// Finite values aligned with a grid or an index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampledFunction {
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "value {} at index {i} is not finite",
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for SampledFunction {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `sum_i f_i * mass_i`, accumulated left to right.
pub fn integrate(f: &SampledFunction, mu: &WeightedMeasure) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(Error::invalid(format!(
            "function has {} values but measure has {} masses",
            f.len(),
            mu.len()
        )));
    }
    Ok(f.values
        .iter()
        .zip(&mu.masses)
        .fold(0.0, |acc, (v, m)| acc + v * m))
}

/// The three quantities of the mediant inequality, with the indices at which
/// the extreme ratios occur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediantBounds {
    pub inf_ratio: f64,
    pub integral_ratio: f64,
    pub sup_ratio: f64,
    pub arg_inf: usize,
    pub arg_sup: usize,
}

/// `min f/g <= (∫f dμ)/(∫g dμ) <= max f/g` with the extrema taken over the
/// support of `mu`.
pub fn mediant_bounds(
    f: &SampledFunction,
    g: &SampledFunction,
    mu: &WeightedMeasure,
) -> Result<MediantBounds> {
    if f.len() != g.len() {
        return Err(Error::invalid(format!(
            "f has {} values, g has {}",
            f.len(),
            g.len()
        )));
    }
    if let Some(i) = f.values.iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!("f is negative at index {i}")));
    }
    let num = integrate(f, mu)?;
    let den = integrate(g, mu)?;

    let mut ratios = Vec::with_capacity(mu.len());
    for i in mu.support() {
        if !(g.values[i] > 0.0) {
            return Err(Error::Domain(format!(
                "g is not positive at index {i} of the support"
            )));
        }
        ratios.push((i, f.values[i] / g.values[i]));
    }
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::Domain("integrals of f and g must be finite".into()));
    }
    if den == 0.0 {
        return Err(Error::DegenerateMeasure("integral of g is zero".into()));
    }

    let ext = Extrema::of(ratios.iter().copied()).expect("support is non-empty");
    Ok(MediantBounds {
        inf_ratio: ext.min,
        integral_ratio: num / den,
        sup_ratio: ext.max,
        arg_inf: ext.argmin,
        arg_sup: ext.argmax,
    })
}

/// Minimum and maximum of indexed values; ties go to the first index seen.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extrema {
    pub min: f64,
    pub argmin: usize,
    pub max: f64,
    pub argmax: usize,
}

impl Extrema {
    pub fn of(values: impl IntoIterator<Item = (usize, f64)>) -> Option<Self> {
        let mut it = values.into_iter();
        let (i0, v0) = it.next()?;
        let mut ext = Extrema {
            min: v0,
            argmin: i0,
            max: v0,
            argmax: i0,
        };
        for (i, v) in it {
            if v < ext.min {
                ext.min = v;
                ext.argmin = i;
            }
            if v > ext.max {
                ext.max = v;
                ext.argmax = i;
            }
        }
        Some(ext)
    }
}
