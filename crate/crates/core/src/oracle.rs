//! Independent Perron-root computation used to check the bounds: plain power
//! iteration from the all-ones vector, with a diagonal shift when the plain
//! iteration oscillates (imprimitive kernels).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, MatrixKernel};
use crate::measure::SampledFunction;

/// Spectral-radius estimate with its right eigenvector (max-entry 1) and/or
/// left eigenmeasure (total mass 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub rho: f64,
    #[serde(rename = "right")]
    pub right_vec: Option<SampledFunction>,
    #[serde(rename = "left")]
    pub left_vec: Option<SampledFunction>,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

struct Iterate {
    rho: f64,
    vec: Vec<f64>,
    iterations: usize,
    residual: f64,
}

fn iterate(
    mul: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Iterate> {
    let mut v = vec![1.0; n];
    let mut prev: Option<f64> = None;
    for it in 1..=max_iter {
        let w = mul(&v);
        let rho = w.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        if rho == 0.0 {
            return Ok(Iterate {
                rho,
                vec: v,
                iterations: it,
                residual: 0.0,
            });
        }
        let residual = w
            .iter()
            .zip(&v)
            .fold(0.0, |m: f64, (a, b)| m.max((a - rho * b).abs()));
        if let Some(p) = prev {
            if (rho - p).abs() <= tol * rho && residual <= tol * rho.max(1.0) {
                return Ok(Iterate {
                    rho,
                    vec: v,
                    iterations: it,
                    residual,
                });
            }
        }
        prev = Some(rho);
        v = w.into_iter().map(|x| x / rho).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_estimate: prev.unwrap_or(f64::NAN),
    })
}

fn check_input<K: Kernel + ?Sized>(k: &K, tol: f64) -> Result<()> {
    if k.dim() == 0 {
        return Err(Error::invalid("kernel is empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    if let Some((i, j)) = k.first_negative() {
        return Err(Error::hypothesis(format!(
            "K not non-negative at ({i},{j})"
        )));
    }
    Ok(())
}

fn run<K: Kernel + ?Sized>(
    k: &K,
    side: Side,
    tol: f64,
    max_iter: usize,
    notes: &mut Vec<String>,
) -> Result<Iterate> {
    let n = k.dim();
    let plain = match side {
        Side::Right => iterate(|v| k.apply(v), n, tol, max_iter),
        Side::Left => iterate(|v| k.apply_left(v), n, tol, max_iter),
    };
    match plain {
        Err(Error::NoConvergence { .. }) => {}
        other => return other,
    }
    // A shift on the scale of the spectral radius pulls the peripheral
    // eigenvalues rho*omega strictly inside the disc of radius rho + shift.
    let shift = k.max_row_sum();
    notes.push(format!(
        "plain iteration did not settle; retried on K + {shift} I"
    ));
    let shifted = |v: &[f64]| {
        let w = match side {
            Side::Right => k.apply(v),
            Side::Left => k.apply_left(v),
        };
        w.into_iter()
            .zip(v)
            .map(|(a, b)| a + shift * b)
            .collect::<Vec<_>>()
    };
    let mut it = iterate(shifted, n, tol, max_iter)?;
    it.rho -= shift;
    it.iterations += max_iter;
    Ok(it)
}

/// Right power iteration `v <- K v / |K v|_inf` from `v = 1`.
pub fn power_iteration<K: Kernel + ?Sized>(k: &K, tol: f64, max_iter: usize) -> Result<EigenPair> {
    check_input(k, tol)?;
    let mut notes = Vec::new();
    let it = run(k, Side::Right, tol, max_iter, &mut notes)?;
    Ok(EigenPair {
        rho: it.rho,
        right_vec: Some(SampledFunction::from_vec(it.vec)),
        left_vec: None,
        iterations: it.iterations,
        residual: it.residual,
        notes,
    })
}

/// Power iteration on the transpose; the left vector is returned as masses
/// summing to one (the discrete left eigenmeasure).
pub fn left_power_iteration<K: Kernel + ?Sized>(
    k: &K,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    check_input(k, tol)?;
    let mut notes = Vec::new();
    let it = run(k, Side::Left, tol, max_iter, &mut notes)?;
    let (left, residual) = normalize_mass(it.vec, it.residual);
    Ok(EigenPair {
        rho: it.rho,
        right_vec: None,
        left_vec: Some(SampledFunction::from_vec(left)),
        iterations: it.iterations,
        residual,
        notes,
    })
}

/// Both eigenvectors. `rho` and `residual` come from the right iteration.
pub fn perron_pair<K: Kernel + ?Sized>(k: &K, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let mut right = power_iteration(k, tol, max_iter)?;
    let left = left_power_iteration(k, tol, max_iter)?;
    right.left_vec = left.left_vec;
    right.iterations = right.iterations.max(left.iterations);
    right.notes.extend(left.notes);
    Ok(right)
}

fn normalize_mass(v: Vec<f64>, residual: f64) -> (Vec<f64>, f64) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        (v.into_iter().map(|x| x / total).collect(), residual / total)
    } else {
        let n = v.len() as f64;
        (vec![1.0 / n; v.len()], 0.0)
    }
}

/// Largest root of `λ² - T λ + D` for a 2×2 matrix, when it is real.
pub fn closed_form_2x2(k: &MatrixKernel) -> Option<f64> {
    if k.n() != 2 {
        return None;
    }
    let t = k.get(0, 0) + k.get(1, 1);
    let d = k.get(0, 0) * k.get(1, 1) - k.get(0, 1) * k.get(1, 0);
    let disc = t * t - 4.0 * d;
    (disc >= 0.0).then(|| 0.5 * (t + disc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> MatrixKernel {
        MatrixKernel::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    const RHO_1234: f64 = 5.372281323269014; // (5 + sqrt 33) / 2

    #[test]
    fn symmetric_circulant() {
        let p = power_iteration(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-12, 1000).unwrap();
        assert_eq!(p.rho, 3.0);
        assert_eq!(p.right_vec.unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn two_by_two_matches_characteristic_root() {
        assert!((RHO_1234 - (5.0 + 33f64.sqrt()) / 2.0).abs() < 1e-15);
        let k = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let p = power_iteration(&k, 1e-13, 1000).unwrap();
        assert!((p.rho - RHO_1234).abs() < 1e-10, "{}", p.rho);
        assert!(p.residual <= 1e-13 * p.rho);
        assert!((closed_form_2x2(&k).unwrap() - RHO_1234).abs() < 1e-14);

        let l = left_power_iteration(&k, 1e-13, 1000).unwrap();
        assert!((l.rho - p.rho).abs() < 1e-9);
        let mass: f64 = l.left_vec.unwrap().values().iter().sum();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn permutation_has_unit_radius() {
        let p = power_iteration(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-12, 100).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn imprimitive_kernel_uses_shift() {
        // spectrum ±sqrt 2; the plain iterate alternates between 2 and 1
        let p = power_iteration(&m(&[&[0.0, 2.0], &[1.0, 0.0]]), 1e-12, 200).unwrap();
        assert!((p.rho - 2f64.sqrt()).abs() < 1e-10, "{}", p.rho);
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn zero_matrix_is_not_an_error() {
        let p = power_iteration(&MatrixKernel::zeros(3), 1e-12, 10).unwrap();
        assert_eq!((p.rho, p.residual), (0.0, 0.0));
        let l = left_power_iteration(&MatrixKernel::zeros(3), 1e-12, 10).unwrap();
        assert_eq!(l.rho, 0.0);
    }

    #[test]
    fn nilpotent_has_zero_radius() {
        let p = power_iteration(&m(&[&[0.0, 1.0], &[0.0, 0.0]]), 1e-12, 10).unwrap();
        assert_eq!(p.rho, 0.0);
    }

    #[test]
    fn stochastic_left_radius_is_one() {
        let k = m(&[&[0.2, 0.8, 0.0], &[0.1, 0.1, 0.8], &[0.5, 0.25, 0.25]]);
        let l = left_power_iteration(&k, 1e-13, 10_000).unwrap();
        assert!((l.rho - 1.0).abs() < 1e-12);
        let pi = l.left_vec.unwrap();
        let back = k.apply_left(pi.values());
        for (a, b) in back.iter().zip(pi.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_left_is_proportional_to_right() {
        let k = m(&[&[1.0, 2.0, 0.5], &[2.0, 0.3, 1.0], &[0.5, 1.0, 4.0]]);
        let pair = perron_pair(&k, 1e-13, 10_000).unwrap();
        let r = pair.right_vec.unwrap();
        let l = pair.left_vec.unwrap();
        let scale = l.values()[0] / r.values()[0];
        for (a, b) in l.values().iter().zip(r.values()) {
            assert!((a - scale * b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_negative_and_bad_tolerance() {
        let err = power_iteration(&m(&[&[1.0, -1.0], &[0.0, 1.0]]), 1e-9, 10).unwrap_err();
        assert_eq!(
            err.to_string(),
            "hypothesis violation: K not non-negative at (0,1)"
        );
        assert!(matches!(
            power_iteration(&MatrixKernel::identity(2), 0.0, 10),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn no_convergence_carries_estimate() {
        // too few iterations for a slowly mixing chain
        let k = m(&[&[0.999, 0.001], &[0.001, 0.5]]);
        match power_iteration(&k, 1e-15, 2) {
            Err(Error::NoConvergence {
                iterations,
                last_estimate,
            }) => {
                assert_eq!(iterations, 2);
                assert!(last_estimate.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serializes_with_expected_keys() {
        let p = power_iteration(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-12, 100).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(
            s.starts_with(r#"{"rho":3.0,"right":[1.0,1.0],"left":null,"iterations":"#),
            "{s}"
        );
    }
}
