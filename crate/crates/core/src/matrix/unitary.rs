//! Operations specific to unitary matrices: Haar-random sampling, trace
//! distance, Frobenius-nearest unitary and the canonical phase representative.

use super::linalg::{qr_householder, svd};
use super::{ComplexMatrix, UnitaryMatrix, C64};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Samples an `m×m` unitary from the Haar measure, deterministically for a given seed.
///
/// Uses the QR factorization of a complex Ginibre matrix with the phases of
/// the diagonal of `R` moved into `Q`.
pub fn haar_random_unitary(m: usize, seed: u64) -> Result<UnitaryMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary_with_rng(m, &mut rng)
}

/// Samples a Haar-random unitary from a caller-supplied generator.
pub fn haar_unitary_with_rng<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if m == 0 {
        return Err(Error::InvalidDimension("Haar unitary of order 0".into()));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let (mut q, r) = qr_householder(&g);
    for j in 0..m {
        let d = r[(j, j)];
        let ph = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..m {
            q[(i, j)] *= ph;
        }
    }
    Ok(UnitaryMatrix::from_trusted(q))
}

/// Half the sum of the singular values of `a − b`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeError(format!(
            "trace distance of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let d = a - b;
    Ok(0.5 * svd(&d)?.singular_values.iter().sum::<f64>())
}

/// Unitary closest to `u_tilde` in Frobenius norm, `W = (ŨŨ†)^(−1/2) Ũ`.
///
/// Computed as `W_svd · V_svd†`; rank-deficient input yields [`Error::SingularInput`].
pub fn nearest_unitary(u_tilde: &ComplexMatrix) -> Result<UnitaryMatrix> {
    if !u_tilde.is_square() {
        return Err(Error::ShapeError(format!(
            "nearest unitary of non-square {}x{}",
            u_tilde.rows(),
            u_tilde.cols()
        )));
    }
    let s = svd(u_tilde)?;
    let smax = s.singular_values[0];
    let smin = *s.singular_values.last().expect("nonempty");
    if smax == 0.0 || smin <= smax * 1e-13 {
        return Err(Error::SingularInput(format!(
            "rank-deficient matrix (smallest singular value {smin:e})"
        )));
    }
    let w = s.left.matrix() * &s.right.matrix().adjoint();
    Ok(UnitaryMatrix::from_trusted(w))
}

/// Entries below this modulus are treated as zero when fixing port phases.
const PHASE_ZERO_TOL: f64 = 1e-14;

/// Returns `D1·V·D2†` whose first row and first column are real and nonnegative.
///
/// The result is the canonical representative of the class of unitaries
/// equivalent to `v` up to input and output phases. Fails with
/// [`Error::PhaseUndefined`] if a first-row or first-column entry vanishes.
pub fn canonicalize_representative(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = v.rows();
    if !v.is_square() || n == 0 {
        return Err(Error::ShapeError("canonicalization needs a nonempty square matrix".into()));
    }
    for i in 0..n {
        if v[(i, 0)].norm() < PHASE_ZERO_TOL {
            return Err(Error::PhaseUndefined { side: "output".into(), port: i + 1 });
        }
        if v[(0, i)].norm() < PHASE_ZERO_TOL {
            return Err(Error::PhaseUndefined { side: "input".into(), port: i + 1 });
        }
    }
    let unit = |z: C64| z / z.norm();
    let p00 = unit(v[(0, 0)]);
    let row_ph: Vec<C64> = (0..n).map(|i| unit(v[(i, 0)]).conj()).collect();
    let col_ph: Vec<C64> = (0..n).map(|j| unit(v[(0, j)]).conj() * p00).collect();
    let mut w = ComplexMatrix::from_fn(n, n, |i, j| v[(i, j)] * row_ph[i] * col_ph[j]);
    // The first row and column are real by construction; remove rounding residue.
    for k in 0..n {
        w[(k, 0)] = C64::new(v[(k, 0)].norm(), 0.0);
        w[(0, k)] = C64::new(v[(0, k)].norm(), 0.0);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn haar_small_and_deterministic() {
        let u1 = haar_random_unitary(1, 5).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-15);
        let a = haar_random_unitary(5, 42).unwrap();
        let b = haar_random_unitary(5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_defect() < 1e-10);
        assert!(matches!(haar_random_unitary(0, 1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn haar_second_moment() {
        // E|U_11|^2 = 1/m for the Haar measure.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mean: f64 =
            (0..n).map(|_| haar_unitary_with_rng(4, &mut rng).unwrap()[(0, 0)].norm_sqr()).sum::<f64>()
                / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn unitary_singular_values_are_one() {
        let u = haar_random_unitary(4, 9).unwrap();
        let s = svd(&u).unwrap();
        assert!(s.singular_values.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn trace_distance_examples() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!(matches!(trace_distance(&a, &ComplexMatrix::identity(3)), Err(Error::ShapeError(_))));
    }

    #[test]
    fn nearest_unitary_examples() {
        let u = haar_random_unitary(3, 1).unwrap();
        assert!(nearest_unitary(&u).unwrap().max_abs_diff(&u) < 1e-12);
        let d = ComplexMatrix::diag(&[c(2.0, 0.0), c(0.5, 0.0)]);
        assert!(nearest_unitary(&d).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        let sing = ComplexMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(nearest_unitary(&sing), Err(Error::SingularInput(_))));
    }

    #[test]
    fn nearest_unitary_beats_parametrized_search() {
        // Oracle: brute-force minimisation over U(2) = e^{iδ}[[a, b], [-b*, a*]].
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary_with_rng(2, &mut rng).unwrap();
        let noisy = ComplexMatrix::from_fn(2, 2, |i, j| {
            u[(i, j)] + c(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3))
        });
        let w = nearest_unitary(&noisy).unwrap();
        let dist_w = (w.matrix() - &noisy).frobenius_norm();
        assert!((w.matrix() - u.matrix()).frobenius_norm() <= (&noisy - u.matrix()).frobenius_norm() + 1e-6);
        let steps = 24;
        let mut best = f64::INFINITY;
        let tau = std::f64::consts::TAU;
        for a in 0..=steps {
            let th = std::f64::consts::FRAC_PI_2 * a as f64 / steps as f64;
            for b in 0..steps {
                for cc in 0..steps {
                    for dd in 0..steps {
                        let (p1, p2, de) =
                            (tau * b as f64 / steps as f64, tau * cc as f64 / steps as f64, tau * dd as f64 / steps as f64);
                        let x = C64::from_polar(th.cos(), p1);
                        let y = C64::from_polar(th.sin(), p2);
                        let g = C64::from_polar(1.0, de);
                        let cand = ComplexMatrix::new(2, 2, vec![g * x, g * y, -g * y.conj(), g * x.conj()]).unwrap();
                        best = best.min((&cand - &noisy).frobenius_norm());
                    }
                }
            }
        }
        assert!(dist_w <= best + 1e-12, "{dist_w} vs grid {best}");
    }

    #[test]
    fn canonical_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let v = ComplexMatrix::new(2, 2, vec![e * s, c(s, 0.0), c(s, 0.0), -e.conj() * s]).unwrap();
        assert!(v.unitarity_defect() < 1e-15);
        let w = canonicalize_representative(&v).unwrap();
        for k in 0..2 {
            assert!(w[(k, 0)].im == 0.0 && w[(0, k)].im == 0.0 && w[(k, 0)].re >= 0.0);
        }
        assert!(w.unitarity_defect() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                assert!((w[(i, j)].norm() - v[(i, j)].norm()).abs() < 1e-14);
            }
        }
        let fixed = ComplexMatrix::new(2, 2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap();
        assert!(canonicalize_representative(&fixed).unwrap().max_abs_diff(&fixed) < 1e-16);
        assert!(matches!(
            canonicalize_representative(&ComplexMatrix::identity(2)),
            Err(Error::PhaseUndefined { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_svd_round_trip(m in 1usize..9, n in 1usize..9, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = ComplexMatrix::from_fn(m, n, |_, _| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let s = svd(&a).unwrap();
            let mut sig = ComplexMatrix::zeros(m, n);
            for (k, &x) in s.singular_values.iter().enumerate() { sig[(k, k)] = c(x, 0.0); }
            let rec = &(s.left.matrix() * &sig) * &s.right.matrix().adjoint();
            prop_assert!(rec.max_abs_diff(&a) < 1e-10 * a.max_abs().max(1.0));
            prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn prop_trace_distance_metric(seed in any::<u64>(), n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = haar_unitary_with_rng(n, &mut rng).unwrap();
            let b = haar_unitary_with_rng(n, &mut rng).unwrap();
            let cm = haar_unitary_with_rng(n, &mut rng).unwrap();
            let ab = trace_distance(&a, &b).unwrap();
            let ba = trace_distance(&b, &a).unwrap();
            prop_assert!(ab >= 0.0 && (ab - ba).abs() < 1e-12);
            prop_assert!(ab <= trace_distance(&a, &cm).unwrap() + trace_distance(&cm, &b).unwrap() + 1e-12);
            prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        }

        #[test]
        fn prop_canonical_class_invariant(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = haar_unitary_with_rng(n, &mut rng).unwrap();
            let d1 = ComplexMatrix::diag(&(0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect::<Vec<_>>());
            let d2 = ComplexMatrix::diag(&(0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect::<Vec<_>>());
            let moved = &(&d1 * u.matrix()) * &d2.adjoint();
            let cu = canonicalize_representative(&u).unwrap();
            let cm = canonicalize_representative(&moved).unwrap();
            prop_assert!(cu.max_abs_diff(&cm) < 1e-12);
            // Idempotent and modulus-preserving.
            prop_assert!(canonicalize_representative(&cu).unwrap().max_abs_diff(&cu) < 1e-14);
            for i in 0..n { for j in 0..n {
                prop_assert!((cu[(i, j)].norm() - u[(i, j)].norm()).abs() < 1e-14);
            }}
        }
    }
}
