//! Effective decay rate of a Markov-modulated fluid queue.
//!
//! A modulating chain with transition matrix `P` adds `s_j` units of work per
//! slot while in state `j`. For a stable source (negative stationary drift
//! with some positive increment) the queue tail decays like `e^{-θ* q}`,
//! where `θ* > 0` solves `rho(K_θ) = 1` for the tilted kernel
//! `K_θ(i, j) = P(i, j) e^{θ s_j}`.
//!
//! The tilt sits on the destination state. Tilting the source state instead,
//! `P(i, j) e^{θ s_i}`, gives `D P D^{-1}`-similar matrices with
//! `D = diag(e^{θ s})` and hence the same spectrum.

use serde::{Deserialize, Serialize};

use crate::bounds::{perron_bounds, scaled_power, BoundsReport};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, MatrixKernel};
use crate::measure::SampledFunction;
use crate::oracle::{left_power_iteration, power_iteration};

/// Allowed deviation of a row sum of `P` from 1.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Largest power `m` tried when certifying a bracket end.
pub const BRACKET_POWER: usize = 16;

const ORACLE_TOL: f64 = 1e-14;
const ORACLE_MAX_ITER: usize = 200_000;

/// JSON shape: `{"P": [[...], ...], "s": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceFile", into = "SourceFile")]
pub struct ModulatedSource {
    transition: MatrixKernel,
    increments: SampledFunction,
}

#[derive(Serialize, Deserialize)]
struct SourceFile {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    s: Vec<f64>,
}

impl TryFrom<SourceFile> for ModulatedSource {
    type Error = Error;

    fn try_from(file: SourceFile) -> Result<Self> {
        Self::new(
            MatrixKernel::from_rows(file.p)?,
            SampledFunction::new(file.s)?,
        )
    }
}

impl From<ModulatedSource> for SourceFile {
    fn from(src: ModulatedSource) -> Self {
        SourceFile {
            p: src.transition.to_rows(),
            s: src.increments.into_values(),
        }
    }
}

impl ModulatedSource {
    pub fn new(transition: MatrixKernel, increments: SampledFunction) -> Result<Self> {
        let n = transition.n();
        if increments.len() != n {
            return Err(Error::invalid(format!(
                "{} increments for {n} states",
                increments.len()
            )));
        }
        if let Some((i, j)) = transition.first_negative() {
            return Err(Error::invalid(format!(
                "P has a negative entry at ({i},{j})"
            )));
        }
        if let Some((i, s)) = transition
            .row_sums()
            .into_iter()
            .enumerate()
            .find(|(_, s)| (s - 1.0).abs() > STOCHASTIC_TOL)
        {
            return Err(Error::invalid(format!("row {i} of P sums to {s}, not 1")));
        }
        Ok(Self {
            transition,
            increments,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("source json: {e}")))
    }

    pub fn transition(&self) -> &MatrixKernel {
        &self.transition
    }

    pub fn increments(&self) -> &[f64] {
        self.increments.values()
    }

    /// Same chain with every increment multiplied by `c`.
    pub fn with_scaled_increments(&self, c: f64) -> Result<Self> {
        let s = self.increments().iter().map(|v| v * c).collect();
        Self::new(self.transition.clone(), SampledFunction::new(s)?)
    }

    /// `Σ π_j s_j` for the stationary distribution `π` of `P`.
    pub fn stationary_drift(&self) -> Result<f64> {
        let pi = left_power_iteration(&self.transition, ORACLE_TOL, ORACLE_MAX_ITER)?;
        let pi = pi.left_vec.expect("left iteration returns a vector");
        Ok(pi
            .values()
            .iter()
            .zip(self.increments())
            .map(|(p, s)| p * s)
            .sum())
    }
}

fn tilt(
    src: &ModulatedSource,
    theta: f64,
    exponent: impl Fn(usize, usize) -> f64,
) -> Result<MatrixKernel> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("theta = {theta} is not finite")));
    }
    let p = src.transition();
    let n = p.n();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let factor = (theta * exponent(i, j)).exp();
            if !factor.is_finite() {
                return Err(Error::Range(format!(
                    "exp overflow in the tilt at theta = {theta}"
                )));
            }
            entries.push(p.get(i, j) * factor);
        }
    }
    MatrixKernel::new(n, entries)
}

/// `K_θ(i, j) = P(i, j) e^{θ s_j}`.
pub fn tilt_kernel(src: &ModulatedSource, theta: f64) -> Result<MatrixKernel> {
    let s = src.increments();
    tilt(src, theta, |_, j| s[j])
}

/// `P(i, j) e^{θ s_i}`; similar to [`tilt_kernel`].
pub fn tilt_kernel_source(src: &ModulatedSource, theta: f64) -> Result<MatrixKernel> {
    let s = src.increments();
    tilt(src, theta, |i, _| s[i])
}

/// `perron_bounds(K_θ, K_θ^m)`.
pub fn decay_rate_bounds(src: &ModulatedSource, theta: f64, m: usize) -> Result<BoundsReport> {
    let k = tilt_kernel(src, theta)?;
    let mut report = perron_bounds(&k, &scaled_power(&k, m)?)?;
    report.m = m;
    Ok(report)
}

/// Oracle value at one bisection point, with the certified interval there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub theta: f64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRateResult {
    pub theta_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub rho_at_theta: f64,
    pub method_notes: Vec<String>,
    pub probes: Vec<Probe>,
}

fn oracle_rho(src: &ModulatedSource, theta: f64) -> Result<f64> {
    Ok(power_iteration(&tilt_kernel(src, theta)?, ORACLE_TOL, ORACLE_MAX_ITER)?.rho)
}

/// Tightest of `perron_bounds(K_θ, K_θ^m)` for `m ≤ BRACKET_POWER`.
fn certified_interval(src: &ModulatedSource, theta: f64) -> Result<BoundsReport> {
    let k = tilt_kernel(src, theta)?;
    let mut best: Option<BoundsReport> = None;
    let mut power = MatrixKernel::identity(k.n());
    for m in 0..=BRACKET_POWER {
        if m > 0 {
            power = power.matmul(&k)?;
            power = power.scaled(1.0 / power.max_row_sum().max(1.0));
        }
        let mut r = perron_bounds(&k, &power)?;
        r.m = m;
        if r.lower > 1.0 || r.upper < 1.0 {
            return Ok(r);
        }
        if best.as_ref().is_none_or(|b| r.width() < b.width()) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one power"))
}

/// Bisection for `rho(K_θ) = 1` on `(0, theta_max]`.
///
/// `θ = 0` is always a root (`P` is stochastic) and `log rho(K_θ)` is convex
/// with slope equal to the stationary drift there, so for a stable source
/// `rho(K_θ) < 1` exactly on `(0, θ*)`. The right end of the bracket is found
/// by doubling `θ` until the bounds certify `rho(K_θ) > 1`; bisection then
/// uses the oracle. `theta_max` defaults to `50 / max |s|`.
pub fn effective_decay_rate(
    src: &ModulatedSource,
    tol: f64,
    theta_max: Option<f64>,
) -> Result<DecayRateResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    let s = src.increments();
    let s_max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if s_max <= 0.0 {
        return Err(Error::NoRoot(format!(
            "largest increment {s_max} is not positive, so rho(K_theta) < 1 for all theta > 0"
        )));
    }
    let drift = src.stationary_drift()?;
    if drift >= 0.0 {
        return Err(Error::Unstable { drift });
    }
    let abs_max = s.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let theta_max = theta_max.unwrap_or(50.0 / abs_max);
    if !(theta_max > 0.0 && theta_max.is_finite()) {
        return Err(Error::invalid(format!(
            "theta_max = {theta_max} must be positive and finite"
        )));
    }

    let mut notes = vec![format!("stationary drift {drift}")];
    let (mut lo, mut hi) = (0.0, f64::NAN);
    let mut theta = (theta_max / 1024.0).min(1.0 / abs_max);
    loop {
        let r = certified_interval(src, theta)?;
        if r.lower > 1.0 {
            hi = theta;
            notes.push(format!(
                "right end {theta} certified: lower bound {} > 1 with L = K^{}",
                r.lower, r.m
            ));
            break;
        }
        if r.upper < 1.0 {
            lo = theta;
        }
        if theta >= theta_max {
            break;
        }
        theta = (2.0 * theta).min(theta_max);
    }
    if hi.is_nan() {
        let rho = oracle_rho(src, theta_max)?;
        if rho <= 1.0 {
            return Err(Error::NoRoot(format!(
                "rho(K_theta) = {rho} <= 1 at theta_max = {theta_max}"
            )));
        }
        hi = theta_max;
        notes.push(format!(
            "bounds inconclusive up to theta_max; oracle rho = {rho} > 1 there"
        ));
    }
    if lo > 0.0 {
        notes.push(format!("left end {lo} certified: upper bound < 1"));
    }

    let mut probes = Vec::new();
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let rho = oracle_rho(src, mid)?;
        let r = decay_rate_bounds(src, mid, BRACKET_POWER)?;
        probes.push(Probe {
            theta: mid,
            rho,
            lower: r.lower,
            upper: r.upper,
        });
        if rho < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let theta_star = 0.5 * (lo + hi);
    notes.push(format!(
        "bisection on the power-iteration oracle, {iterations} steps"
    ));
    Ok(DecayRateResult {
        theta_star,
        bracket: (lo, hi),
        iterations,
        rho_at_theta: oracle_rho(src, theta_star)?,
        method_notes: notes,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::closed_form_2x2;

    fn two_state() -> ModulatedSource {
        ModulatedSource::from_json(r#"{"P": [[0.9, 0.1], [0.1, 0.9]], "s": [1, -2]}"#).unwrap()
    }

    fn theta_star_closed_form() -> f64 {
        // rho(K_θ) = 1 reduces to 0.9u³ - u² - 0.8u + 0.9 = 0, u = e^θ
        ((0.1 + 3.25f64.sqrt()) / 1.8).ln()
    }

    #[test]
    fn closed_form_root_is_a_root() {
        let u = theta_star_closed_form().exp();
        assert!((0.9 * u.powi(3) - u * u - 0.8 * u + 0.9).abs() < 1e-14);
        let k = tilt_kernel(&two_state(), theta_star_closed_form()).unwrap();
        assert!((closed_form_2x2(&k).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_state_decay_rate() {
        let r = effective_decay_rate(&two_state(), 1e-8, None).unwrap();
        assert!(
            (r.theta_star - theta_star_closed_form()).abs() < 1e-6,
            "{}",
            r.theta_star
        );
        assert!(r.bracket.1 - r.bracket.0 <= 1e-8);
        assert!((r.rho_at_theta - 1.0).abs() < 1e-8);
        for p in &r.probes {
            assert!(
                p.lower <= p.rho + 1e-12 && p.rho <= p.upper + 1e-12,
                "{p:?}"
            );
        }
    }

    #[test]
    fn tilt_entries() {
        let t = 0.3;
        let k = tilt_kernel(&two_state(), t).unwrap();
        let want = [
            0.9 * t.exp(),
            0.1 * (-2.0 * t).exp(),
            0.1 * t.exp(),
            0.9 * (-2.0 * t).exp(),
        ];
        for (a, b) in k.entries().iter().zip(want) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        assert_eq!(
            tilt_kernel(&two_state(), 0.0).unwrap(),
            *two_state().transition()
        );
    }

    #[test]
    fn scalar_source() {
        let src = ModulatedSource::from_json(r#"{"P": [[1]], "s": [-1]}"#).unwrap();
        let k = tilt_kernel(&src, 0.7).unwrap();
        assert_eq!(k.get(0, 0), (-0.7f64).exp());
        assert!(matches!(
            effective_decay_rate(&src, 1e-8, None),
            Err(Error::NoRoot(_))
        ));
    }

    #[test]
    fn bounds_at_fixed_theta() {
        let src = two_state();
        let r = decay_rate_bounds(&src, 0.0, 3).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, 1.0));
        let r = decay_rate_bounds(&src, 0.03, 6).unwrap();
        assert!(r.upper < 1.0, "{r:?}");
        let r8 = decay_rate_bounds(&src, theta_star_closed_form(), 8).unwrap();
        let r2 = decay_rate_bounds(&src, theta_star_closed_form(), 2).unwrap();
        assert!(r8.contains(1.0, 0.0) && r8.width() < r2.width());
    }

    #[test]
    fn unstable_and_bad_input() {
        let src =
            ModulatedSource::from_json(r#"{"P": [[0.5, 0.5], [0.5, 0.5]], "s": [2, -1]}"#).unwrap();
        assert!(matches!(
            effective_decay_rate(&src, 1e-8, None),
            Err(Error::Unstable { .. })
        ));
        assert!(
            ModulatedSource::from_json(r#"{"P": [[0.5, 0.6], [0.5, 0.5]], "s": [2, -1]}"#).is_err()
        );
        assert!(
            ModulatedSource::from_json(r#"{"P": [[1.5, -0.5], [0.5, 0.5]], "s": [2, -1]}"#)
                .is_err()
        );
        assert!(ModulatedSource::from_json(r#"{"P": [[1]], "s": [2, -1]}"#).is_err());
        assert!(matches!(
            tilt_kernel(&two_state(), 1e3),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            effective_decay_rate(&two_state(), 0.0, None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn too_small_theta_max_has_no_root() {
        assert!(matches!(
            effective_decay_rate(&two_state(), 1e-8, Some(0.01)),
            Err(Error::NoRoot(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let text = serde_json::to_string(&two_state()).unwrap();
        assert_eq!(text, r#"{"P":[[0.9,0.1],[0.1,0.9]],"s":[1.0,-2.0]}"#);
        assert_eq!(ModulatedSource::from_json(&text).unwrap(), two_state());
    }
}
