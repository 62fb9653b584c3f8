//! Dense linear-algebra kernels: one-sided Jacobi SVD, Householder QR and
//! LU factorization with partial pivoting.

use super::{ComplexMatrix, UnitaryMatrix, C64};
use crate::error::{Error, Result};

/// Full singular value decomposition `M = W · Λ · V†`.
///
/// `left` (W) is `rows×rows`, `right` (V) is `cols×cols`, both unitary;
/// `singular_values` holds the `min(rows, cols)` diagonal entries of the
/// rectangular Λ in nonincreasing order.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors (columns).
    pub left: UnitaryMatrix,
    /// Singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Right singular vectors (columns).
    pub right: UnitaryMatrix,
}

impl SvdResult {
    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        let min = self.singular_values.last().copied().unwrap_or(0.0);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_TOL: f64 = 1e-15;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Computes the full SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Returns [`Error::NumericalFailure`] if the sweeps do not converge and
/// [`Error::InvalidDimension`] for empty input.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension("SVD of an empty matrix".into()));
    }
    if m < n {
        let t = svd(&a.adjoint())?;
        return Ok(SvdResult { left: t.right, singular_values: t.singular_values, right: t.left });
    }
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
        .collect();
    let mut converged = n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = norm_sqr(&cols[p]);
                let beta = norm_sqr(&cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, phase, c, s);
                rotate(&mut vcols, p, q, phase, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let norms: Vec<f64> = cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = norms[order[0]];
    let cutoff = smax * 1e-14;
    let mut ucols: Vec<Option<Vec<C64>>> = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(n);
    for &j in &order {
        s.push(norms[j]);
        if norms[j] > cutoff && norms[j] > 0.0 {
            ucols.push(Some(cols[j].iter().map(|x| x / norms[j]).collect()));
        } else {
            ucols.push(None);
        }
    }
    ucols.resize(m, None);
    let ucols = complete_basis(m, ucols);
    let u = ComplexMatrix::from_fn(m, m, |i, j| ucols[j][i]);
    let v = ComplexMatrix::from_fn(n, n, |i, j| vcols[order[j]][i]);
    Ok(SvdResult {
        left: UnitaryMatrix::from_trusted(u),
        singular_values: s,
        right: UnitaryMatrix::from_trusted(v),
    })
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let ap = *x;
        let bq = *y * phase;
        *x = ap * c - bq * s;
        *y = ap * s + bq * c;
    }
}

/// Fills the `None` slots with unit vectors orthogonal to every other column.
fn complete_basis(m: usize, cols: Vec<Option<Vec<C64>>>) -> Vec<Vec<C64>> {
    let basis: Vec<Vec<C64>> = cols.iter().flatten().cloned().collect();
    let mut extra: Vec<Vec<C64>> = Vec::new();
    let missing = cols.iter().filter(|c| c.is_none()).count();
    for _ in 0..missing {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for k in 0..m {
            let mut e = vec![C64::new(0.0, 0.0); m];
            e[k] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in basis.iter().chain(extra.iter()) {
                    let proj = dot(b, &e);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm_sqr(&e).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| nrm > *bn) {
                best = Some((nrm, e));
            }
        }
        let (nrm, e) = best.expect("at least one candidate");
        extra.push(e.iter().map(|x| x / nrm).collect());
    }
    let mut extra = extra.into_iter();
    cols.into_iter()
        .map(|c| c.unwrap_or_else(|| extra.next().expect("enough completion vectors")))
        .collect()
}

/// Householder QR: returns `(Q, R)` with `Q` unitary (`rows×rows`) and `R`
/// upper triangular (`rows×cols`) such that `A = Q R`.
pub fn qr_householder(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = norm_sqr(&x).sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = norm_sqr(&v).sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // R <- (I - 2 v v†) R on rows k..m
        for j in 0..n {
            let s: C64 = (k..m).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            for i in k..m {
                r[(i, j)] -= 2.0 * v[i - k] * s;
            }
        }
        // Q <- Q (I - 2 v v†) on columns k..m
        for i in 0..m {
            let s: C64 = (k..m).map(|l| q[(i, l)] * v[l - k]).sum();
            for l in k..m {
                q[(i, l)] -= 2.0 * s * v[l - k].conj();
            }
        }
    }
    for i in 0..m {
        for j in 0..n.min(i) {
            r[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    (q, r)
}

struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

fn lu_decompose(a: &ComplexMatrix) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::ShapeError(format!("LU requires a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax == 0.0 {
            singular = true;
            continue;
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
        }
    }
    Ok(Lu { lu, perm, sign, singular })
}

/// Determinant by LU factorization with partial pivoting.
pub fn lu_det(a: &ComplexMatrix) -> Result<C64> {
    let f = lu_decompose(a)?;
    if f.singular {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut d = C64::new(f.sign, 0.0);
    for i in 0..a.rows() {
        d *= f.lu[(i, i)];
    }
    Ok(d)
}

/// Solves `A x = b` by LU with partial pivoting; [`Error::SingularInput`] on a zero pivot.
pub fn lu_solve(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.rows();
    if b.len() != n {
        return Err(Error::ShapeError(format!("rhs length {} does not match order {n}", b.len())));
    }
    let f = lu_decompose(a)?;
    if f.singular {
        return Err(Error::SingularInput("zero pivot in LU factorization".into()));
    }
    let mut y: Vec<C64> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let t = f.lu[(i, j)] * y[j];
            y[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let t = f.lu[(i, j)] * y[j];
            y[i] -= t;
        }
        y[i] /= f.lu[(i, i)];
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn reconstruct(s: &SvdResult, m: usize, n: usize) -> ComplexMatrix {
        let mut sig = ComplexMatrix::zeros(m, n);
        for (k, &v) in s.singular_values.iter().enumerate() {
            sig[(k, k)] = C64::new(v, 0.0);
        }
        &(s.left.matrix() * &sig) * &s.right.matrix().adjoint()
    }

    #[test]
    fn svd_reconstructs_rectangular_and_square() {
        for &(m, n) in &[(1, 1), (3, 3), (5, 2), (2, 5), (6, 6), (7, 4)] {
            let a = random_matrix(m, n, (m * 10 + n) as u64);
            let s = svd(&a).unwrap();
            assert!(reconstruct(&s, m, n).max_abs_diff(&a) < 1e-13, "{m}x{n}");
            assert!(s.left.unitarity_defect() < 1e-13);
            assert!(s.right.unitarity_defect() < 1e-13);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_rank_deficient() {
        // Outer product: rank one.
        let x = random_matrix(4, 1, 3);
        let y = random_matrix(1, 4, 4);
        let a = &x * &y;
        let s = svd(&a).unwrap();
        assert!(s.singular_values[1] < 1e-14 * s.singular_values[0]);
        assert!(s.left.unitarity_defect() < 1e-13);
        assert!(reconstruct(&s, 4, 4).max_abs_diff(&a) < 1e-13);
        let z = svd(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert!(z.left.unitarity_defect() < 1e-14 && z.singular_values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svd_known_values() {
        // diag(3, -2i) has singular values 3, 2.
        let a = ComplexMatrix::diag(&[C64::new(3.0, 0.0), C64::new(0.0, -2.0)]);
        let s = svd(&a).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-15 && (s.singular_values[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn qr_reconstructs() {
        for &(m, n) in &[(4, 4), (5, 3), (3, 5), (1, 1)] {
            let a = random_matrix(m, n, 77 + m as u64);
            let (q, r) = qr_householder(&a);
            assert!(q.unitarity_defect() < 1e-13);
            assert!((&q * &r).max_abs_diff(&a) < 1e-13);
            for i in 0..m {
                for j in 0..n.min(i) {
                    assert_eq!(r[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn lu_det_and_solve() {
        let a = ComplexMatrix::new(
            2,
            2,
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(4.0, 0.0)],
        )
        .unwrap();
        assert!((lu_det(&a).unwrap() - C64::new(-2.0, 0.0)).norm() < 1e-15);
        let x = lu_solve(&a, &[C64::new(5.0, 0.0), C64::new(11.0, 0.0)]).unwrap();
        assert!((x[0] - C64::new(1.0, 0.0)).norm() < 1e-14 && (x[1] - C64::new(2.0, 0.0)).norm() < 1e-14);
        let sing = ComplexMatrix::zeros(2, 2);
        assert!(matches!(lu_solve(&sing, &[C64::new(1.0, 0.0); 2]), Err(Error::SingularInput(_))));
        assert_eq!(lu_det(&sing).unwrap(), C64::new(0.0, 0.0));
    }
}
