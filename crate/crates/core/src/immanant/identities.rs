//! Identities between immanants of (sub)matrices of the fundamental matrix
//! `T(Ω)` and sums of `SU(n)` `D`-functions.
//!
//! * Full matrix: `imm^{λ}(T) = Σ_t D^{(λ)}_{tt}` over the zero-weight
//!   states `t` of the irrep `(λ)` dual to `{λ}`.
//! * Principal submatrix on indices `k`: the same sum over the states whose
//!   site occupations are 1 on `k` and 0 elsewhere.
//! * Non-principal submatrices: tabulated instances, each a sum of
//!   `dim{λ}` off-diagonal `D`-functions with unit coefficients, and an
//!   exploratory check of the general pairing rule observed in this basis.
//! * A product relation between immanants of complementary principal
//!   submatrices of a `4×4` matrix, in immanant and `D`-function form.
//!
//! Some tabulated instances label states along the chain in which
//! `su(m−1)` acts on the *last* `m−1` modes. Such a basis is the canonical
//! basis of the mode-reversed problem, so these `D`-functions are evaluated
//! as `D_{rev(r),rev(c)}(P T P)` with `P` the reversal permutation.

use super::{immanant, Partition};
use crate::error::{Error, Result};
use crate::matrix::{lu_det, ComplexMatrix, C64};
use crate::sun::{canonical_basis, dmatrix_block, fundamental_matrix, CanonicalStateLabel, IrrepLabel, Omega};
use serde::{Deserialize, Serialize};

/// Both sides of an identity and their distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// The immanant side.
    pub immanant: C64,
    /// The `D`-function side.
    pub dfunction_sum: C64,
    /// `|immanant − dfunction_sum|`.
    pub difference: f64,
}

impl IdentityCheck {
    fn new(immanant: C64, dfunction_sum: C64) -> Self {
        Self { immanant, dfunction_sum, difference: (immanant - dfunction_sum).norm() }
    }
}

/// `SU(n)` irrep dual to `{λ}` in the boson realization, and the number of
/// full columns (`λ_n`) that the realization drops; those contribute a
/// factor `det T` each.
fn dual_irrep(n: usize, lambda: &Partition) -> Result<(IrrepLabel, u32)> {
    let parts = lambda.parts();
    if parts.len() > n {
        return Err(Error::PartitionError(format!("{lambda} has more than {n} parts")));
    }
    let full = if parts.len() == n { parts[n - 1] } else { 0 };
    let reduced: Vec<u32> = parts.iter().map(|&p| p - full).filter(|&p| p > 0).collect();
    Ok((IrrepLabel::from_partition(n, &reduced)?, full))
}

/// Occupations `1` on the (1-based) `indices`, `0` elsewhere, minus `shift`.
fn indicator(n: usize, indices: &[usize], shift: u32) -> Vec<u32> {
    (1..=n).map(|i| u32::from(indices.contains(&i)) - shift).collect()
}

/// Validates strictly increasing 1-based indices of length `len`.
fn check_indices(n: usize, idx: &[usize], len: usize, what: &str) -> Result<()> {
    if idx.len() != len {
        return Err(Error::InvalidInput(format!("{what} {idx:?} must have {len} entries")));
    }
    if idx.iter().any(|&i| i == 0 || i > n) || idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("{what} {idx:?} must be increasing indices in 1..={n}")));
    }
    Ok(())
}

fn zero_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i - 1).collect()
}

/// `Σ_r D^{(λ)}_{rr}(T)` over states with occupations `1` on `k`.
fn principal_dsum(t: &ComplexMatrix, lambda: &Partition, k: &[usize]) -> Result<C64> {
    let n = t.rows();
    let (irrep, full) = dual_irrep(n, lambda)?;
    let basis = canonical_basis(&irrep)?;
    let idx = basis.indices_with_occupations(&indicator(n, k, full));
    let block = dmatrix_block(t, &basis, &idx, &idx);
    let trace: C64 = (0..idx.len()).map(|i| block[(i, i)]).sum();
    Ok(trace * lu_det(t)?.powu(full))
}

/// Full-matrix identity `imm^{λ}(T(Ω)) = Σ D^{(λ)}_{tt}(Ω)` over zero-weight
/// states.
pub fn kostant_lhs_rhs(omega: &Omega, lambda: &Partition, n: usize) -> Result<IdentityCheck> {
    if lambda.size() != n {
        return Err(Error::PartitionError(format!("{lambda} is not a partition of {n}")));
    }
    let t = fundamental_matrix(n, omega)?;
    let all: Vec<usize> = (1..=n).collect();
    Ok(IdentityCheck::new(immanant(t.matrix(), lambda)?, principal_dsum(t.matrix(), lambda, &all)?))
}

/// Which subalgebra chain a tabulated label refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainOrientation {
    /// `su(m−1)` acts on the first `m−1` modes (the canonical basis).
    Leading,
    /// `su(m−1)` acts on the last `m−1` modes.
    Trailing,
}

#[derive(Deserialize)]
struct RawState {
    occupations: Vec<u32>,
    subchain: Vec<Vec<u32>>,
}

#[derive(Deserialize)]
struct RawTerm {
    row: RawState,
    col: RawState,
}

#[derive(Deserialize)]
struct RawInstance {
    n: usize,
    partition: Partition,
    irrep: Vec<u32>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    chain: ChainOrientation,
    terms: Vec<RawTerm>,
}

#[derive(Deserialize)]
struct RawTable {
    instances: Vec<RawInstance>,
}

/// One tabulated non-principal identity
/// `imm^{λ}(T[rows, cols]) = Σ_j D^{(λ)}_{r_j; c_j}`.
#[derive(Clone, Debug)]
pub struct SubmatrixInstance {
    /// Group parameter `n`.
    pub n: usize,
    /// Symmetric-group irrep `{λ}`.
    pub partition: Partition,
    /// Kept rows (1-based, increasing).
    pub rows: Vec<usize>,
    /// Kept columns (1-based, increasing).
    pub cols: Vec<usize>,
    /// Chain the labels refer to.
    pub chain: ChainOrientation,
    /// `(row, col)` label pairs in the frame where they are evaluated: as
    /// given for the leading chain, with reversed occupations for the
    /// trailing chain.
    pub terms: Vec<(CanonicalStateLabel, CanonicalStateLabel)>,
}

impl SubmatrixInstance {
    /// `Σ_j D_{r_j; c_j}(T)`.
    pub fn dfunction_sum(&self, t: &ComplexMatrix) -> Result<C64> {
        let n = self.n;
        let frame = match self.chain {
            ChainOrientation::Leading => t.clone(),
            ChainOrientation::Trailing => {
                let rev: Vec<usize> = (0..n).rev().collect();
                t.select(&rev, &rev)
            }
        };
        let mut total = C64::new(0.0, 0.0);
        for (r, c) in &self.terms {
            let basis = canonical_basis(r.irrep())?;
            let ri = basis.index_of(r).ok_or_else(|| Error::LabelError(format!("{r} is not a canonical state")))?;
            let ci = basis.index_of(c).ok_or_else(|| Error::LabelError(format!("{c} is not a canonical state")))?;
            total += dmatrix_block(&frame, &basis, &[ri], &[ci])[(0, 0)];
        }
        Ok(total)
    }
}

/// Table of non-principal submatrix identities.
#[derive(Clone, Debug)]
pub struct SubmatrixTable {
    instances: Vec<SubmatrixInstance>,
}

/// The bundled table of non-principal identities.
pub const BUNDLED_SUBMATRIX_IDENTITIES: &str = include_str!("../../../../fixtures/submatrix_identities.json");

impl SubmatrixTable {
    /// Parses and validates a table (every label must be consistent with
    /// its irrep and chain).
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawTable = serde_json::from_str(text).map_err(|e| Error::FixtureError(e.to_string()))?;
        let mut instances = Vec::with_capacity(raw.instances.len());
        for r in raw.instances {
            let p = r.partition.size();
            check_indices(r.n, &r.rows, p, "rows").map_err(|e| Error::FixtureError(e.to_string()))?;
            check_indices(r.n, &r.cols, p, "cols").map_err(|e| Error::FixtureError(e.to_string()))?;
            let make = |s: &RawState| -> Result<CanonicalStateLabel> {
                let mut occ = s.occupations.clone();
                if r.chain == ChainOrientation::Trailing {
                    occ.reverse();
                }
                CanonicalStateLabel::from_compact(&r.irrep, &occ, &s.subchain)
            };
            let terms = r
                .terms
                .iter()
                .map(|t| Ok((make(&t.row)?, make(&t.col)?)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::FixtureError(e.to_string()))?;
            instances.push(SubmatrixInstance {
                n: r.n,
                partition: r.partition,
                rows: r.rows,
                cols: r.cols,
                chain: r.chain,
                terms,
            });
        }
        Ok(Self { instances })
    }

    /// The bundled table.
    pub fn bundled() -> Result<Self> {
        Self::from_json(BUNDLED_SUBMATRIX_IDENTITIES)
    }

    /// All instances.
    pub fn instances(&self) -> &[SubmatrixInstance] {
        &self.instances
    }

    /// The instance for `(n, λ, rows, cols)`, if tabulated.
    pub fn find(&self, n: usize, lambda: &Partition, rows: &[usize], cols: &[usize]) -> Option<&SubmatrixInstance> {
        self.instances.iter().find(|i| i.n == n && &i.partition == lambda && i.rows == rows && i.cols == cols)
    }
}

/// Submatrix identity for `T(Ω)` restricted to `rows × cols` (1-based,
/// increasing).
///
/// Principal submatrices (`rows == cols`) use the weight-space trace; other
/// submatrices use the bundled table and fail with [`Error::NotTabulated`]
/// when the combination is absent.
pub fn submatrix_immanant_identity(
    omega: &Omega,
    lambda: &Partition,
    rows: &[usize],
    cols: &[usize],
    n: usize,
) -> Result<IdentityCheck> {
    let p = lambda.size();
    check_indices(n, rows, p, "rows")?;
    check_indices(n, cols, p, "cols")?;
    let t = fundamental_matrix(n, omega)?;
    let imm = immanant(&t.select(&zero_based(rows), &zero_based(cols)), lambda)?;
    let dsum = if rows == cols {
        principal_dsum(t.matrix(), lambda, rows)?
    } else {
        let table = SubmatrixTable::bundled()?;
        let inst = table.find(n, lambda, rows, cols).ok_or_else(|| {
            Error::NotTabulated(format!("{lambda} on rows {rows:?}, cols {cols:?} of SU({n})"))
        })?;
        inst.dfunction_sum(t.matrix())?
    };
    Ok(IdentityCheck::new(imm, dsum))
}

/// Exploratory check of the pairing rule for arbitrary submatrices: the
/// immanant is compared with the trace of the `D`-block between the states
/// with occupations `1` on `rows` and those with occupations `1` on `cols`,
/// both taken in canonical basis order (which pairs states with matching
/// position in their weight spaces).
pub fn submatrix_conjecture_check(
    omega: &Omega,
    lambda: &Partition,
    rows: &[usize],
    cols: &[usize],
    n: usize,
) -> Result<IdentityCheck> {
    let p = lambda.size();
    check_indices(n, rows, p, "rows")?;
    check_indices(n, cols, p, "cols")?;
    let t = fundamental_matrix(n, omega)?;
    let imm = immanant(&t.select(&zero_based(rows), &zero_based(cols)), lambda)?;
    let (irrep, full) = dual_irrep(n, lambda)?;
    let basis = canonical_basis(&irrep)?;
    let r = basis.indices_with_occupations(&indicator(n, rows, full));
    let c = basis.indices_with_occupations(&indicator(n, cols, full));
    if r.len() != c.len() {
        return Err(Error::InternalInconsistency(format!("weight spaces of sizes {} and {}", r.len(), c.len())));
    }
    let block = dmatrix_block(t.matrix(), &basis, &r, &c);
    let trace: C64 = (0..r.len()).map(|i| block[(i, i)]).sum();
    Ok(IdentityCheck::new(imm, trace * lu_det(t.matrix())?.powu(full)))
}

/// Both sides of
/// `Σ_{ℓ} imm^{3}(T[ℓ̄, ℓ̄]) · T_{ℓℓ} = imm^{3,1}(T) + imm^{4}(T)` for a
/// `4×4` matrix (`ℓ̄` the complement of `ℓ`), evaluated once with immanants
/// and once with `D`-function sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LittlewoodReport {
    /// Left side from immanants.
    pub immanant_lhs: C64,
    /// Right side from immanants.
    pub immanant_rhs: C64,
    /// Left side from `D`-function sums.
    pub dfunction_lhs: C64,
    /// Right side from `D`-function sums.
    pub dfunction_rhs: C64,
}

impl LittlewoodReport {
    /// Largest of the immanant residual, the `D`-function residual and the
    /// distance between the two left sides.
    pub fn max_residual(&self) -> f64 {
        (self.immanant_lhs - self.immanant_rhs)
            .norm()
            .max((self.dfunction_lhs - self.dfunction_rhs).norm())
            .max((self.immanant_lhs - self.dfunction_lhs).norm())
    }
}

/// Evaluates the four-split product relation on the `SU(4)` element `Ω`.
pub fn littlewood_relation(omega: &Omega) -> Result<LittlewoodReport> {
    let t = fundamental_matrix(4, omega)?;
    let t = t.matrix();
    let p3 = Partition::new(vec![3])?;
    let p1 = Partition::new(vec![1])?;
    let (mut imm_lhs, mut d_lhs) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for l in 1..=4usize {
        let rest: Vec<usize> = (1..=4).filter(|&i| i != l).collect();
        let sub = t.select(&zero_based(&rest), &zero_based(&rest));
        imm_lhs += immanant(&sub, &p3)? * t[(l - 1, l - 1)];
        d_lhs += principal_dsum(t, &p3, &rest)? * principal_dsum(t, &p1, &[l])?;
    }
    let p31 = Partition::new(vec![3, 1])?;
    let p4 = Partition::new(vec![4])?;
    let all = [1, 2, 3, 4];
    Ok(LittlewoodReport {
        immanant_lhs: imm_lhs,
        immanant_rhs: immanant(t, &p31)? + immanant(t, &p4)?,
        dfunction_lhs: d_lhs,
        dfunction_rhs: principal_dsum(t, &p31, &all)? + principal_dsum(t, &p4, &all)?,
    })
}

/// Largest residual of [`littlewood_relation`].
pub fn littlewood_relation_check(omega: &Omega) -> Result<f64> {
    Ok(littlewood_relation(omega)?.max_residual())
}

/// The three-photon amplitudes `A`, `B`, `C` of an `SU(3)` element from
/// `D`-functions at zero weight:
///
/// * `A = (D^{(3)} + 2 D^{(1,1)}_{s;s}) / 3`,
/// * `B = (D^{(3)} − D^{(1,1)}_{s;s} + √3 D^{(1,1)}_{s;a}) / 3`,
/// * `C = (D^{(3)} − D^{(1,1)}_{s;s} − √3 D^{(1,1)}_{s;a}) / 3`,
///
/// where `s` (`a`) is the zero-weight state of `(1,1)` that is symmetric
/// (antisymmetric) in modes 2 and 3, i.e. carries `su(2)` label `(2)`
/// (`(0)`) in the trailing chain.
pub fn abc_via_dfunctions(omega: &Omega) -> Result<(C64, C64, C64)> {
    let t = fundamental_matrix(3, omega)?;
    let rev = [2, 1, 0];
    let frame = t.select(&rev, &rev);
    let zero = [1, 1, 1];
    let sym_basis = canonical_basis(&IrrepLabel::new(3, vec![3, 0])?)?;
    let s3 = sym_basis.indices_with_occupations(&zero);
    let d3 = dmatrix_block(&frame, &sym_basis, &s3, &s3)[(0, 0)];
    let mixed = canonical_basis(&IrrepLabel::new(3, vec![1, 1])?)?;
    let find = |sub: u32| -> Result<usize> {
        let label = CanonicalStateLabel::from_compact(&[1, 1], &zero, &[vec![sub]])?;
        mixed.index_of(&label).ok_or_else(|| Error::InternalInconsistency(format!("{label} missing")))
    };
    let (s, a) = (find(2)?, find(0)?);
    let block = dmatrix_block(&frame, &mixed, &[s], &[s, a]);
    let (dss, dsa) = (block[(0, 0)], block[(0, 1)]);
    let r3 = 3f64.sqrt();
    Ok(((d3 + dss * 2.0) / 3.0, (d3 - dss + dsa * r3) / 3.0, (d3 - dss - dsa * r3) / 3.0))
}

#[cfg(test)]
mod tests {
    use super::super::photons::abc_matrix_elements;
    use super::*;
    use crate::matrix::UnitaryMatrix;
    use crate::sun::parameter_count;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn omega(n: usize, seed: u64) -> Omega {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Omega::Angles((0..parameter_count(n)).map(|_| rng.gen_range(-3.0..3.0)).collect())
    }

    fn part(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn su2_permanent_is_cos_beta_and_determinant_is_one() {
        let beta = 0.83;
        let om = Omega::Angles(vec![0.4, beta, -1.3]);
        let per = kostant_lhs_rhs(&om, &part(&[2]), 2).unwrap();
        assert!((per.immanant - C64::new(beta.cos(), 0.0)).norm() < 1e-12);
        assert!(per.difference < 1e-12);
        let det = kostant_lhs_rhs(&om, &part(&[1, 1]), 2).unwrap();
        assert!((det.dfunction_sum - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(det.difference < 1e-12);
    }

    #[test]
    fn full_matrix_identity_for_su3_and_su4() {
        for n in [3, 4] {
            for l in Partition::all(n) {
                for seed in 0..3 {
                    let c = kostant_lhs_rhs(&omega(n, seed), &l, n).unwrap();
                    assert!(c.difference < 1e-10, "n={n} {l}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn full_columns_carry_the_determinant_for_general_unitaries() {
        let u = crate::matrix::haar_random_unitary(3, 9).unwrap();
        let c = kostant_lhs_rhs(&Omega::Matrix(u), &part(&[1, 1, 1]), 3).unwrap();
        assert!(c.difference < 1e-12);
    }

    #[test]
    fn principal_submatrices() {
        for (n, l, k) in [(4, part(&[2, 1]), vec![1, 2, 4]), (5, part(&[2, 1]), vec![1, 2, 4]), (5, part(&[2]), vec![2, 5])] {
            let c = submatrix_immanant_identity(&omega(n, 4), &l, &k, &k, n).unwrap();
            assert!(c.difference < 1e-10, "{c:?}");
        }
        // A 1×1 submatrix is the matrix element itself.
        let om = omega(4, 5);
        let t = fundamental_matrix(4, &om).unwrap();
        let c = submatrix_immanant_identity(&om, &part(&[1]), &[3], &[3], 4).unwrap();
        assert!((c.dfunction_sum - t[(2, 2)]).norm() < 1e-12);
    }

    #[test]
    fn tabulated_instances_hold() {
        let table = SubmatrixTable::bundled().unwrap();
        assert!(!table.instances().is_empty());
        for inst in table.instances() {
            assert_eq!(inst.terms.len() as u64, inst.partition.dimension());
            for seed in 0..3 {
                let c = submatrix_immanant_identity(&omega(inst.n, seed), &inst.partition, &inst.rows, &inst.cols, inst.n)
                    .unwrap();
                assert!(c.difference < 1e-10, "{:?} {:?}: {c:?}", inst.rows, inst.cols);
            }
        }
    }

    #[test]
    fn untabulated_combinations_are_reported() {
        let r = submatrix_immanant_identity(&omega(4, 0), &part(&[2, 1]), &[1, 2, 3], &[2, 3, 4], 4);
        assert!(matches!(r, Err(Error::NotTabulated(_))));
        let r = submatrix_immanant_identity(&omega(4, 0), &part(&[2, 1]), &[3, 2, 1], &[3, 2, 1], 4);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pairing_rule_holds_for_every_su4_three_by_three_submatrix() {
        let subsets: Vec<Vec<usize>> = (1..=4).map(|drop| (1..=4).filter(|&i| i != drop).collect()).collect();
        for l in Partition::all(3) {
            for r in &subsets {
                for c in &subsets {
                    let chk = submatrix_conjecture_check(&omega(4, 11), &l, r, c, 4).unwrap();
                    assert!(chk.difference < 1e-10, "{l} {r:?} {c:?}: {chk:?}");
                }
            }
        }
    }

    #[test]
    fn littlewood_relation_holds() {
        let id = littlewood_relation(&Omega::Matrix(UnitaryMatrix::identity(4))).unwrap();
        assert!((id.immanant_lhs - C64::new(4.0, 0.0)).norm() < 1e-12);
        assert!((id.immanant_rhs - C64::new(4.0, 0.0)).norm() < 1e-12);
        for seed in 0..3 {
            assert!(littlewood_relation_check(&omega(4, seed)).unwrap() < 1e-9);
        }
        // Permuting columns keeps the relation (it holds for any matrix).
        let t = fundamental_matrix(4, &omega(4, 8)).unwrap();
        let permuted = UnitaryMatrix::try_from_matrix(t.select(&[0, 1, 2, 3], &[1, 3, 0, 2])).unwrap();
        assert!(littlewood_relation_check(&Omega::Matrix(permuted)).unwrap() < 1e-9);
    }

    #[test]
    fn abc_from_dfunctions_matches_matrix_elements() {
        let (a, b, c) = abc_via_dfunctions(&Omega::Matrix(UnitaryMatrix::identity(3))).unwrap();
        assert!((a - 1.0).norm() < 1e-12 && b.norm() < 1e-12 && c.norm() < 1e-12);
        for seed in 0..5 {
            let om = omega(3, seed);
            let t = fundamental_matrix(3, &om).unwrap();
            let (a, b, c) = abc_via_dfunctions(&om).unwrap();
            let (ea, eb, ec) = abc_matrix_elements(t.matrix()).unwrap();
            assert!((a - ea).norm() < 1e-10 && (b - eb).norm() < 1e-10 && (c - ec).norm() < 1e-10, "seed {seed}");
            let per = immanant(t.matrix(), &part(&[3])).unwrap();
            assert!((a + b + c - per).norm() < 1e-10);
        }
    }
}
