//! Most-likely unitary from estimated amplitudes and arguments.

use crate::error::{Error, Result};
use crate::matrix::{canonicalize_representative, lu_solve, nearest_unitary, svd, ComplexMatrix, UnitaryMatrix, C64};

/// Condition number above which `A` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Builds `A = α̃·e^{iθ̃}`, solves `A·μ = e₁` and `A†·λ = e₁/μ₁` for the
/// diagonal dressings, forms `Ũ_ij = √|λ_i| A_ij √|μ_j|` and returns the
/// canonicalized nearest unitary.
///
/// `alpha` and `theta` are row-major `m×m`.
pub fn max_likely_unitary(m: usize, alpha: &[f64], theta: &[f64]) -> Result<UnitaryMatrix> {
    if m == 0 || alpha.len() != m * m || theta.len() != m * m {
        return Err(Error::ShapeError(format!("amplitude/argument arrays inconsistent with m = {m}")));
    }
    let a = ComplexMatrix::from_fn(m, m, |i, j| C64::from_polar(alpha[i * m + j], theta[i * m + j]));
    let cond = svd(&a)?.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateAmplitudes(format!("amplitude matrix condition number {cond:.3e}")));
    }
    let mut e1 = vec![C64::new(0.0, 0.0); m];
    e1[0] = C64::new(1.0, 0.0);
    let mu = lu_solve(&a, &e1).map_err(|e| Error::DegenerateAmplitudes(e.to_string()))?;
    if mu[0].norm() == 0.0 {
        return Err(Error::DegenerateAmplitudes("first input dressing vanishes".into()));
    }
    let rhs: Vec<C64> = e1.iter().map(|x| x / mu[0]).collect();
    let lambda = lu_solve(&a.adjoint(), &rhs).map_err(|e| Error::DegenerateAmplitudes(e.to_string()))?;
    let u_tilde = ComplexMatrix::from_fn(m, m, |i, j| a[(i, j)] * (lambda[i].norm() * mu[j].norm()).sqrt());
    let w = nearest_unitary(&u_tilde)?;
    UnitaryMatrix::try_from_matrix(canonicalize_representative(w.matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{haar_random_unitary, trace_distance};
    use crate::photonic::RepresentativeParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_parameters_reproduce_representative() {
        for seed in 0..10 {
            let u = haar_random_unitary(5, seed).unwrap();
            let p = RepresentativeParams::from_unitary(&u).unwrap();
            let w = max_likely_unitary(5, &p.alpha, &p.theta).unwrap();
            let c = canonicalize_representative(&u).unwrap();
            assert!(w.max_abs_diff(&c) < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn balanced_splitter_by_hand() {
        // A = [[1, 1], [1, −1]]: μ = (½, ½) and λ = (1, 1), so Ũ = A/√2.
        let w = max_likely_unitary(2, &[1.0, 1.0, 1.0, 1.0], &[0.0, 0.0, 0.0, PI]).unwrap();
        let s = 0.5f64.sqrt();
        let expect = [s, s, s, -s];
        for (k, e) in expect.iter().enumerate() {
            assert!((w.as_slice()[k] - C64::new(*e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_amplitudes_rejected() {
        let e = max_likely_unitary(2, &[1.0; 4], &[0.0; 4]).unwrap_err();
        assert_eq!(e.code(), "DegenerateAmplitudes");
    }

    proptest! {
        #[test]
        fn prop_perturbed_inputs_still_unitary(seed in any::<u64>(), eps in proptest::collection::vec(-0.05f64..0.05, 32)) {
            let u = haar_random_unitary(4, seed).unwrap();
            let p = RepresentativeParams::from_unitary(&u).unwrap();
            let mut a = p.alpha.clone();
            let mut t = p.theta.clone();
            for i in 1..4 {
                for j in 1..4 {
                    a[i * 4 + j] *= 1.0 + eps[i * 4 + j];
                    t[i * 4 + j] += eps[16 + i * 4 + j];
                }
            }
            if let Ok(w) = max_likely_unitary(4, &a, &t) {
                prop_assert!(w.unitarity_defect() < 1e-10);
                prop_assert!(trace_distance(&w, &canonicalize_representative(&u).unwrap()).unwrap() < 1.0);
            }
        }
    }
}
