//! `D`-functions: matrix elements `⟨row| T(Ω) |col⟩` of the group element
//! `Ω` in the canonical basis of an irrep.
//!
//! Every boson transforms independently under the fundamental matrix
//! `V(Ω)`: `a†_{i,k} → Σ_j V_{j,i} a†_{j,k}`. With this (column) convention
//! the `D`-matrix of the defining irrep is `V` itself and `Ω ↦ D(Ω)` is a
//! homomorphism. The transformed state is contracted against the row state
//! with the bosonic inner product; since species transform independently
//! the contraction factorizes into per-species factors, which are memoized.

use super::canonical::{canonical_basis, CanonicalBasis, CanonicalStateLabel};
use super::IrrepLabel;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, UnitaryMatrix, C64};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

/// Tolerance on `|det V − 1|` when converting a matrix to angles.
const DET_TOL: f64 = 1e-9;

/// A group element of `SU(n)`.
#[derive(Clone, Debug)]
pub enum Omega {
    /// Parameter list; see [`fundamental_matrix`] for the layout.
    Angles(Vec<f64>),
    /// The fundamental matrix itself (any unitary is accepted).
    Matrix(UnitaryMatrix),
}

/// Defining `SU(2)` matrix in Euler angles:
/// `[[e^{−i(α+γ)/2} cos β/2, −e^{−i(α−γ)/2} sin β/2],
///   [e^{i(α−γ)/2} sin β/2,  e^{i(α+γ)/2} cos β/2]]`.
pub fn su2_matrix(alpha: f64, beta: f64, gamma: f64) -> UnitaryMatrix {
    let (s, c) = (beta / 2.0).sin_cos();
    let e = |x: f64| C64::from_polar(1.0, x);
    let data = vec![
        e(-(alpha + gamma) / 2.0) * c,
        -e(-(alpha - gamma) / 2.0) * s,
        e((alpha - gamma) / 2.0) * s,
        e((alpha + gamma) / 2.0) * c,
    ];
    UnitaryMatrix::from_trusted(ComplexMatrix::new(2, 2, data).expect("2x2 data"))
}

/// Mode pairs `(c, r)` (0-based, `c < r`) of the two-level rotations, in the
/// order they are nulled: row `n` against columns `1..n−1`, then row `n−1`
/// against `1..n−2`, and so on.
fn rotation_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).rev().flat_map(|r| (0..r).map(move |c| (c, r))).collect()
}

/// Number of real parameters of `SU(n)`: `n² − 1`.
pub fn parameter_count(n: usize) -> usize {
    n * n - 1
}

/// Embeds the rotation `[[e^{iφ}cos θ, −sin θ], [e^{iφ}sin θ, cos θ]]` on
/// modes `(c, r)`.
fn rotation(n: usize, c: usize, r: usize, theta: f64, phi: f64) -> ComplexMatrix {
    let mut t = ComplexMatrix::identity(n);
    let (s, co) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    t[(c, c)] = e * co;
    t[(c, r)] = C64::new(-s, 0.0);
    t[(r, c)] = e * s;
    t[(r, r)] = C64::new(co, 0.0);
    t
}

/// The fundamental matrix `V(Ω)`.
///
/// For `n = 2` the parameters are the Euler angles `(α, β, γ)` of
/// [`su2_matrix`]. For `n ≥ 3` they are `(θ_1, φ_1, …, θ_L, φ_L, δ_1, …,
/// δ_{n−1})` with `L = n(n−1)/2`, and `V = diag(e^{iδ}) T_L ⋯ T_1` where
/// `T_k` is the two-level rotation on the `k`-th pair (row `n` with columns
/// `1..n−1` first) and `δ_n` is fixed by `det V = 1`.
pub fn fundamental_matrix(n: usize, omega: &Omega) -> Result<UnitaryMatrix> {
    match omega {
        Omega::Matrix(u) => {
            if u.dim() != n {
                return Err(Error::ShapeError(format!("{}x{} matrix given for SU({n})", u.dim(), u.dim())));
            }
            Ok(u.clone())
        }
        Omega::Angles(p) => {
            if n < 2 {
                return Err(Error::InvalidDimension(format!("SU(n) needs n >= 2, got {n}")));
            }
            if p.len() != parameter_count(n) {
                return Err(Error::ShapeError(format!("SU({n}) needs {} parameters, got {}", parameter_count(n), p.len())));
            }
            if n == 2 {
                return Ok(su2_matrix(p[0], p[1], p[2]));
            }
            let pairs = rotation_pairs(n);
            let l = pairs.len();
            let mut v = ComplexMatrix::identity(n);
            for (k, &(c, r)) in pairs.iter().enumerate() {
                v = rotation(n, c, r, p[2 * k], p[2 * k + 1]).matmul(&v)?;
            }
            let phis: f64 = (0..l).map(|k| p[2 * k + 1]).sum();
            let mut deltas = p[2 * l..].to_vec();
            deltas.push(-phis - deltas.iter().sum::<f64>());
            let d: Vec<C64> = deltas.iter().map(|&x| C64::from_polar(1.0, x)).collect();
            Ok(UnitaryMatrix::from_trusted(ComplexMatrix::diag(&d).matmul(&v)?))
        }
    }
}

/// Parameters reproducing a given `SU(n)` matrix under [`fundamental_matrix`].
///
/// Fails with [`Error::InvalidInput`] unless `det u = 1` (within `1e-9`).
pub fn omega_from_unitary(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    let n = u.dim();
    let det = crate::matrix::lu_det(u.matrix())?;
    if (det - C64::new(1.0, 0.0)).norm() > DET_TOL {
        return Err(Error::InvalidInput(format!("determinant {det} is not 1")));
    }
    if n == 2 {
        let (v11, v21, v22) = (u[(0, 0)], u[(1, 0)], u[(1, 1)]);
        let beta = 2.0 * v21.norm().atan2(v11.norm());
        // A vanishing entry leaves one phase free; tie it to the other.
        let (a22, a21) = match (v22.norm() > 1e-14, v21.norm() > 1e-14) {
            (true, true) => (v22.arg(), v21.arg()),
            (true, false) => (v22.arg(), v22.arg()),
            _ => (v21.arg(), v21.arg()),
        };
        return Ok(vec![a22 + a21, beta, a22 - a21]);
    }
    let mut w = u.matrix().clone();
    let mut params = Vec::with_capacity(parameter_count(n));
    for (c, r) in rotation_pairs(n) {
        let (a, b) = (w[(r, c)], w[(r, r)]);
        let (theta, phi) = if a.norm() == 0.0 {
            (0.0, 0.0)
        } else if b.norm() == 0.0 {
            (FRAC_PI_2, a.arg())
        } else {
            (a.norm().atan2(b.norm()), a.arg() - b.arg())
        };
        w = w.matmul(&rotation(n, c, r, theta, phi).adjoint())?;
        params.push(theta);
        params.push(phi);
    }
    params.extend((0..n - 1).map(|i| w[(i, i)].arg()));
    Ok(params)
}

/// Per-species transformation factors `⟨μ'| T |μ⟩ ⋅ μ'!` keyed by the
/// column site vector `μ`, each a map from row site vectors `μ'`.
struct SpeciesFactors<'a> {
    v: &'a ComplexMatrix,
    memo: BTreeMap<Vec<u8>, BTreeMap<Vec<u8>, C64>>,
}

impl<'a> SpeciesFactors<'a> {
    fn new(v: &'a ComplexMatrix) -> Self {
        Self { v, memo: BTreeMap::new() }
    }

    /// `Π_i (Σ_j V_{j,i} x_j)^{μ_i}` with each coefficient of `x^{μ'}`
    /// multiplied by `μ'!`.
    fn get(&mut self, mu: &[u8]) -> &BTreeMap<Vec<u8>, C64> {
        if !self.memo.contains_key(mu) {
            let n = self.v.rows();
            let mut poly: BTreeMap<Vec<u8>, C64> = BTreeMap::from([(vec![0u8; n], C64::new(1.0, 0.0))]);
            for (i, &power) in mu.iter().enumerate() {
                for _ in 0..power {
                    let mut next: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
                    for (m, c) in &poly {
                        for j in 0..n {
                            let vji = self.v[(j, i)];
                            if vji == C64::new(0.0, 0.0) {
                                continue;
                            }
                            let mut m2 = m.clone();
                            m2[j] += 1;
                            *next.entry(m2).or_insert(C64::new(0.0, 0.0)) += c * vji;
                        }
                    }
                    poly = next;
                }
            }
            for (m, c) in poly.iter_mut() {
                let f: f64 = m.iter().flat_map(|&k| 1..=u32::from(k)).map(f64::from).product();
                *c *= f;
            }
            self.memo.insert(mu.to_vec(), poly);
        }
        &self.memo[mu]
    }
}

/// Splits a flattened monomial into its per-species site vectors.
fn species_columns(m: &[u8], n: usize) -> Vec<Vec<u8>> {
    let s = n - 1;
    (0..s).map(|k| (0..n).map(|i| m[i * s + k]).collect()).collect()
}

/// Normalized state as per-species column vectors with coefficients.
type SplitState = Vec<(Vec<Vec<u8>>, f64)>;

fn split_state(basis: &CanonicalBasis, idx: usize, n: usize) -> SplitState {
    basis.states()[idx]
        .polynomial
        .normalized_coefficients()
        .into_iter()
        .map(|(m, c)| (species_columns(&m, n), c))
        .collect()
}

/// `⟨row| T(V) |col⟩` for normalized states.
fn contract(factors: &mut SpeciesFactors<'_>, row: &SplitState, col: &SplitState) -> C64 {
    let row_index: BTreeMap<&Vec<Vec<u8>>, f64> = row.iter().map(|(m, c)| (m, *c)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (mu, c_col) in col {
        // Expand the product over species, keeping only row monomials.
        for (mu_row, c_row) in &row_index {
            let mut term = C64::new(*c_row * c_col, 0.0);
            for (k, col_k) in mu.iter().enumerate() {
                match factors.get(col_k).get(&mu_row[k]) {
                    Some(f) => term *= f,
                    None => {
                        term = C64::new(0.0, 0.0);
                        break;
                    }
                }
            }
            acc += term;
        }
    }
    acc
}

/// Checks that both labels belong to `SU(n)` and are known canonical states.
fn locate(n: usize, basis: &CanonicalBasis, label: &CanonicalStateLabel) -> Result<usize> {
    if label.n() != n {
        return Err(Error::ShapeError(format!("label {label} is not an SU({n}) state")));
    }
    basis.index_of(label).ok_or_else(|| Error::LabelError(format!("{label} is not a canonical state")))
}

/// The `D`-function `D^K_{row;col}(Ω) = ⟨row| T(Ω) |col⟩`.
///
/// Returns exactly zero when the two labels carry different `SU(n)` irreps.
/// Fails with [`Error::ShapeError`] when a label or `Ω` does not match `n`,
/// and with [`Error::LabelError`] for labels that are not canonical states.
pub fn dfunction(n: usize, omega: &Omega, row: &CanonicalStateLabel, col: &CanonicalStateLabel) -> Result<C64> {
    if row.n() != n || col.n() != n {
        return Err(Error::ShapeError(format!("labels {row}, {col} are not both SU({n}) states")));
    }
    let v = fundamental_matrix(n, omega)?;
    if row.irrep() != col.irrep() {
        return Ok(C64::new(0.0, 0.0));
    }
    let basis = canonical_basis(row.irrep())?;
    let (r, c) = (locate(n, &basis, row)?, locate(n, &basis, col)?);
    let mut factors = SpeciesFactors::new(v.matrix());
    Ok(contract(&mut factors, &split_state(&basis, r, n), &split_state(&basis, c, n)))
}

/// Block `D_{r,c}(V)` for the given row and column state indices of
/// `basis` (`V` may be any square matrix of the right order).
pub(crate) fn dmatrix_block(v: &ComplexMatrix, basis: &CanonicalBasis, rows: &[usize], cols: &[usize]) -> ComplexMatrix {
    let n = basis.irrep().n();
    let row_states: Vec<SplitState> = rows.iter().map(|&i| split_state(basis, i, n)).collect();
    let col_states: Vec<SplitState> = cols.iter().map(|&i| split_state(basis, i, n)).collect();
    let mut factors = SpeciesFactors::new(v);
    ComplexMatrix::from_fn(rows.len(), cols.len(), |r, c| contract(&mut factors, &row_states[r], &col_states[c]))
}

/// The full `Δ_K × Δ_K` `D`-matrix in the canonical basis order of
/// [`CanonicalBasis::states`].
pub fn dfunction_matrix(n: usize, omega: &Omega, k: &IrrepLabel) -> Result<UnitaryMatrix> {
    if k.n() != n {
        return Err(Error::ShapeError(format!("irrep {k} is not an SU({n}) label")));
    }
    let v = fundamental_matrix(n, omega)?;
    let basis = canonical_basis(k)?;
    let all: Vec<usize> = (0..basis.len()).collect();
    let out = dmatrix_block(v.matrix(), &basis, &all, &all);
    UnitaryMatrix::new(out, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::haar_random_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn label(n: usize, k: &[u32]) -> IrrepLabel {
        IrrepLabel::new(n, k.to_vec()).unwrap()
    }

    fn random_angles(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..parameter_count(n)).map(|_| rng.gen_range(-3.0..3.0)).collect()
    }

    #[test]
    fn angle_parametrization_is_special_unitary_and_invertible() {
        for n in 2..=5 {
            for seed in 0..5 {
                let v = fundamental_matrix(n, &Omega::Angles(random_angles(n, seed))).unwrap();
                assert!(v.unitarity_defect() < 1e-12);
                assert!((crate::matrix::lu_det(v.matrix()).unwrap() - 1.0).norm() < 1e-12);
                let p = omega_from_unitary(&v).unwrap();
                let back = fundamental_matrix(n, &Omega::Angles(p)).unwrap();
                assert!(back.max_abs_diff(v.matrix()) < 1e-10, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn identity_gives_identity() {
        for (n, k) in [(2, vec![2]), (3, vec![1, 1]), (4, vec![1, 0, 1])] {
            let d = dfunction_matrix(n, &Omega::Matrix(UnitaryMatrix::identity(n)), &label(n, &k)).unwrap();
            assert!(d.max_abs_diff(&ComplexMatrix::identity(d.dim())) < 1e-12);
        }
    }

    #[test]
    fn defining_irrep_reproduces_the_fundamental_matrix() {
        for n in 2..=5 {
            let mut k = vec![0; n - 1];
            k[0] = 1;
            let omega = Omega::Angles(random_angles(n, 7));
            let d = dfunction_matrix(n, &omega, &label(n, &k)).unwrap();
            let v = fundamental_matrix(n, &omega).unwrap();
            assert!(d.max_abs_diff(v.matrix()) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn spin_one_zero_zero_element_is_cos_beta() {
        let (a, b, g) = (0.7, 1.1, -2.3);
        let l = CanonicalStateLabel::from_compact(&[2], &[1, 1], &[]).unwrap();
        let d = dfunction(2, &Omega::Angles(vec![a, b, g]), &l, &l).unwrap();
        assert!((d - C64::new(b.cos(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_selection_rule_between_irreps() {
        let a = CanonicalStateLabel::from_compact(&[1, 1], &[1, 1, 1], &[vec![2]]).unwrap();
        let b = CanonicalStateLabel::from_compact(&[3], &[1, 1, 1], &[vec![2]]).unwrap();
        let d = dfunction(3, &Omega::Angles(random_angles(3, 1)), &a, &b).unwrap();
        assert_eq!(d, C64::new(0.0, 0.0));
    }

    #[test]
    fn unitary_and_homomorphic_on_random_elements() {
        for (n, k) in [(3, vec![1, 1]), (3, vec![2, 0]), (4, vec![0, 1, 0])] {
            let k = label(n, &k);
            for seed in 0..3 {
                let v1 = fundamental_matrix(n, &Omega::Angles(random_angles(n, 100 + seed))).unwrap();
                let v2 = fundamental_matrix(n, &Omega::Angles(random_angles(n, 200 + seed))).unwrap();
                let d1 = dfunction_matrix(n, &Omega::Matrix(v1.clone()), &k).unwrap();
                let d2 = dfunction_matrix(n, &Omega::Matrix(v2.clone()), &k).unwrap();
                let p = omega_from_unitary(&v1.compose(&v2).unwrap()).unwrap();
                let d12 = dfunction_matrix(n, &Omega::Angles(p), &k).unwrap();
                assert!(d1.unitarity_defect() < 1e-10);
                assert!(d12.max_abs_diff(&d1.matmul(&d2).unwrap()) < 1e-10, "K = {k}");
            }
        }
    }

    #[test]
    fn general_unitaries_are_accepted_as_matrices() {
        let u = haar_random_unitary(3, 5).unwrap();
        let d = dfunction_matrix(3, &Omega::Matrix(u), &label(3, &[1, 1])).unwrap();
        assert!(d.unitarity_defect() < 1e-10);
        assert!(matches!(omega_from_unitary(&haar_random_unitary(3, 5).unwrap()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn shape_errors() {
        let l = CanonicalStateLabel::from_compact(&[2], &[1, 1], &[]).unwrap();
        assert!(matches!(dfunction(3, &Omega::Angles(random_angles(3, 0)), &l, &l), Err(Error::ShapeError(_))));
        assert!(matches!(fundamental_matrix(3, &Omega::Angles(vec![0.0; 3])), Err(Error::ShapeError(_))));
    }
}
