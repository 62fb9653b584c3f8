//! Canonical basis states: simultaneous eigenstates of the Cartan operators
//! of every algebra in the chain `su(n) ⊃ su(n−1) ⊃ … ⊃ su(2)`, with
//! definite irrep labels at every level.
//!
//! The `su(m)` irrep is partitioned into `su(m−1)` irreps: pick the vertex
//! of highest multiplicity among the states not yet assigned (ties broken
//! by the lexicographically largest weight), raise its first state with the
//! `su(m−1)` raising operators until it is annihilated by all of them,
//! build that `su(m−1)` irrep by breadth-first search, and project it out of
//! the remaining space. The remaining space is the orthogonal complement of
//! the irreps extracted so far and therefore itself `su(m−1)`-invariant, so
//! the raised state never falls into an already extracted component.
//!
//! Phases: every simple raising operator `c_{l,l+1}` has nonnegative matrix
//! elements between canonical states. Signs are fixed along a spanning tree
//! of the simple-lowering graph rooted at the highest-weight state; the
//! remaining matrix elements then come out nonnegative (verified by tests).
//! Consequently raising any state along simple raising operators reaches the
//! highest-weight state with a nonnegative coefficient.

use super::basis::{basis_set, OrthoSpace};
use super::polynomial::{big_to_f64, hws, BosonPolynomial, Generator};
use super::{IrrepLabel, Weight};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Label of a canonical basis state: the chain of irreps `K^(n), …, K^(2)`,
/// the chain of weights `Λ^(n), …, Λ^(2)` and the site occupations
/// `ν_1..ν_n` (which determine all the weights).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalStateLabel {
    /// `K^(n), K^(n−1), …, K^(2)`.
    pub chain_irreps: Vec<IrrepLabel>,
    /// `Λ^(n), …, Λ^(2)` with `Λ^(m)_i = ν_i − ν_{i+1}`, `i < m`.
    pub chain_weights: Vec<Weight>,
    /// Boson occupation numbers per site.
    pub occupations: Vec<u32>,
}

impl CanonicalStateLabel {
    /// Validates the shapes and boson numbers and derives the weights.
    ///
    /// Every `K^(m)` must be an `su(m)` label and the number of bosons on
    /// sites `1..=m` must be at least `N_{K^(m)}` with the excess divisible
    /// by `m` (it fills complete columns of the Young diagram).
    pub fn new(chain_irreps: Vec<IrrepLabel>, occupations: Vec<u32>) -> Result<Self> {
        let n = occupations.len();
        if n < 2 || chain_irreps.len() != n - 1 {
            return Err(Error::LabelError(format!(
                "{} chain labels for {} sites; expected one per level n..2",
                chain_irreps.len(),
                n
            )));
        }
        for (idx, k) in chain_irreps.iter().enumerate() {
            let m = n - idx;
            if k.n() != m {
                return Err(Error::LabelError(format!("chain entry {k} is not an su({m}) label")));
            }
            let bosons: usize = occupations[..m].iter().map(|&v| v as usize).sum();
            let need = k.boson_number();
            let excess = bosons.checked_sub(need).ok_or_else(|| {
                Error::LabelError(format!("{bosons} bosons on sites 1..{m} cannot carry su({m}) irrep {k}"))
            })?;
            if excess % m != 0 {
                return Err(Error::LabelError(format!("{bosons} bosons on sites 1..{m} cannot carry su({m}) irrep {k}")));
            }
            if idx == 0 && excess != 0 {
                return Err(Error::LabelError(format!("{bosons} bosons but irrep {k} needs {need}")));
            }
        }
        let chain_weights = (0..n - 1).map(|idx| Weight::from_occupations(&occupations[..n - idx])).collect();
        Ok(Self { chain_irreps, chain_weights, occupations })
    }

    /// Builds a label from Dynkin labels written without trailing zeros,
    /// e.g. `([1,1], [0,1,1,1], [[2], [1]])` for `n = 4`.
    pub fn from_compact(irrep: &[u32], occupations: &[u32], sub_irreps: &[Vec<u32>]) -> Result<Self> {
        let n = occupations.len();
        let mut chain = vec![IrrepLabel::padded(n, irrep)?];
        for (idx, k) in sub_irreps.iter().enumerate() {
            chain.push(IrrepLabel::padded(n - 1 - idx, k)?);
        }
        Self::new(chain, occupations.to_vec())
    }

    /// The `SU(n)` irrep `K^(n)`.
    pub fn irrep(&self) -> &IrrepLabel {
        &self.chain_irreps[0]
    }

    /// Number of sites `n`.
    pub fn n(&self) -> usize {
        self.occupations.len()
    }
}

fn compact(k: &IrrepLabel) -> String {
    let mut v = k.kappas().to_vec();
    while v.len() > 1 && v.last() == Some(&0) {
        v.pop();
    }
    let parts: Vec<String> = v.iter().map(u32::to_string).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for CanonicalStateLabel {
    /// Compressed notation `K^(n) ν_1…ν_n K^(n−1)…K^(2)` with trailing
    /// zeros of the Dynkin labels omitted, e.g. `(1,1)0111(2)(1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", compact(&self.chain_irreps[0]))?;
        if self.occupations.iter().all(|&v| v < 10) {
            for v in &self.occupations {
                write!(f, "{v}")?;
            }
        } else {
            let parts: Vec<String> = self.occupations.iter().map(u32::to_string).collect();
            write!(f, "[{}]", parts.join(","))?;
        }
        for k in &self.chain_irreps[1..] {
            write!(f, "{}", compact(k))?;
        }
        Ok(())
    }
}

/// One canonical basis state with its exact (unnormalized) polynomial.
#[derive(Clone, Debug)]
pub struct CanonicalState {
    /// The state's label.
    pub label: CanonicalStateLabel,
    /// Primitive integer polynomial; the normalized state is
    /// `polynomial / √norm_sqr`.
    pub polynomial: BosonPolynomial,
    /// Exact squared norm of `polynomial`.
    pub norm_sqr: BigInt,
}

/// All canonical basis states of one irrep, ordered by decreasing site
/// occupations (lexicographically) and then by decreasing chain labels.
#[derive(Debug)]
pub struct CanonicalBasis {
    irrep: IrrepLabel,
    states: Vec<CanonicalState>,
    index: HashMap<CanonicalStateLabel, usize>,
}

impl CanonicalBasis {
    /// The irrep `K^(n)`.
    pub fn irrep(&self) -> &IrrepLabel {
        &self.irrep
    }

    /// States in basis order.
    pub fn states(&self) -> &[CanonicalState] {
        &self.states
    }

    /// Number of states (the irrep dimension).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Whether the basis is empty (never true).
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of a label in the basis.
    pub fn index_of(&self, label: &CanonicalStateLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Indices of the states with the given site occupations.
    pub fn indices_with_occupations(&self, occ: &[u32]) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].label.occupations == occ).collect()
    }

    /// Normalized real matrix element `⟨row| op |col⟩`.
    pub fn matrix_element(&self, op: Generator, row: usize, col: usize) -> Result<f64> {
        let (r, c) = (&self.states[row], &self.states[col]);
        let v = r.polynomial.inner(&c.polynomial.apply(op)?);
        Ok(big_to_f64(&v) / (big_to_f64(&r.norm_sqr) * big_to_f64(&c.norm_sqr)).sqrt())
    }
}

/// Splits an `su(m)` irrep (vertices keyed by site occupations) into
/// `su(m−1)` irreps recursively, appending finished states to `out`.
fn decompose(
    space: BTreeMap<Vec<u32>, OrthoSpace>,
    m: usize,
    chain: &mut Vec<IrrepLabel>,
    out: &mut Vec<(Vec<IrrepLabel>, Vec<u32>, BosonPolynomial)>,
) -> Result<()> {
    if m == 2 {
        for (occ, sp) in space {
            if sp.len() != 1 {
                return Err(Error::InternalInconsistency(format!("su(2) weight {occ:?} has multiplicity {}", sp.len())));
            }
            out.push((chain.clone(), occ, sp.states.into_iter().next().expect("one state")));
        }
        return Ok(());
    }
    let sub = m - 1;
    let mut remaining = space;
    loop {
        remaining.retain(|_, sp| !sp.is_empty());
        let Some(key) = remaining
            .iter()
            .max_by(|a, b| {
                a.1.len()
                    .cmp(&b.1.len())
                    .then_with(|| Weight::from_occupations(&a.0[..m]).cmp(&Weight::from_occupations(&b.0[..m])))
            })
            .map(|(k, _)| k.clone())
        else {
            break;
        };
        let mut psi = remaining[&key].states[0].clone();
        'raise: loop {
            for i in 1..sub {
                for j in i + 1..=sub {
                    let mut r = psi.apply(Generator::C(i, j))?;
                    if !r.is_zero() {
                        r.make_primitive();
                        psi = r;
                        continue 'raise;
                    }
                }
            }
            break;
        }
        let occ = psi.site_occupations().ok_or_else(|| Error::InternalInconsistency("raised state lost its weight".into()))?;
        let top = Weight::from_occupations(&occ[..sub]);
        let kappas = top
            .0
            .iter()
            .map(|&v| u32::try_from(v).map_err(|_| Error::InternalInconsistency(format!("negative highest weight {top}"))))
            .collect::<Result<Vec<u32>>>()?;
        let label = IrrepLabel::new(sub, kappas)?;
        let irrep = basis_set(&psi, sub)?;
        for (occ, sub_space) in &irrep.vertices {
            let rem = remaining.get_mut(occ).ok_or_else(|| {
                Error::InternalInconsistency(format!("su({sub}) irrep {label} reaches vertex {occ:?} outside the space"))
            })?;
            let mut span = sub_space.clone();
            let mut complement = OrthoSpace::default();
            for r in &rem.states {
                let x = span.residual(r);
                if !x.is_zero() && span.push(&x) {
                    complement.push_orthogonal(span.states.last().expect("just pushed").clone());
                }
            }
            if complement.len() + sub_space.len() != rem.len() {
                return Err(Error::InternalInconsistency(format!(
                    "projecting su({sub}) irrep {label} out of vertex {occ:?} left {} of {} states",
                    complement.len(),
                    rem.len()
                )));
            }
            *rem = complement;
        }
        chain.push(label);
        decompose(irrep.vertices, sub, chain, out)?;
        chain.pop();
    }
    Ok(())
}

/// Fixes signs so that all simple raising matrix elements are nonnegative.
fn fix_phases(irrep: &IrrepLabel, states: &mut [CanonicalState]) -> Result<()> {
    let n = irrep.n();
    let top = hws(irrep);
    let root = states
        .iter()
        .position(|s| s.polynomial.inner(&top).is_positive() || s.polynomial.inner(&top).is_negative())
        .ok_or_else(|| Error::InternalInconsistency("highest-weight state missing from basis".into()))?;
    if states[root].polynomial.inner(&top).is_negative() {
        states[root].polynomial.negate();
    }
    let mut by_occ: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        by_occ.entry(s.label.occupations.clone()).or_default().push(i);
    }
    let mut fixed = vec![false; states.len()];
    fixed[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        for l in 1..n {
            let lowered = states[i].polynomial.apply(Generator::C(l + 1, l))?;
            if lowered.is_zero() {
                continue;
            }
            let Some(occ) = lowered.site_occupations() else { continue };
            for &j in by_occ.get(&occ).map(Vec::as_slice).unwrap_or(&[]) {
                if fixed[j] {
                    continue;
                }
                let ip = states[j].polynomial.inner(&lowered);
                if ip.is_zero() {
                    continue;
                }
                if ip.is_negative() {
                    states[j].polynomial.negate();
                }
                fixed[j] = true;
                queue.push_back(j);
            }
        }
    }
    if let Some(j) = fixed.iter().position(|f| !f) {
        return Err(Error::InternalInconsistency(format!("state {} unreachable by simple lowering", states[j].label)));
    }
    Ok(())
}

fn build(irrep: &IrrepLabel) -> Result<CanonicalBasis> {
    let n = irrep.n();
    let top = basis_set(&hws(irrep), n)?;
    let mut raw = Vec::new();
    decompose(top.vertices, n, &mut vec![irrep.clone()], &mut raw)?;
    let mut states = raw
        .into_iter()
        .map(|(chain, occ, poly)| {
            let label = CanonicalStateLabel::new(chain, occ)?;
            let norm_sqr = poly.norm_sqr();
            Ok(CanonicalState { label, polynomial: poly, norm_sqr })
        })
        .collect::<Result<Vec<_>>>()?;
    if states.len() != irrep.dimension() {
        return Err(Error::InternalInconsistency(format!(
            "{} canonical states for irrep {irrep} of dimension {}",
            states.len(),
            irrep.dimension()
        )));
    }
    fix_phases(irrep, &mut states)?;
    states.sort_by(|a, b| {
        b.label.occupations.cmp(&a.label.occupations).then_with(|| b.label.chain_irreps.cmp(&a.label.chain_irreps))
    });
    let index = states.iter().enumerate().map(|(i, s)| (s.label.clone(), i)).collect::<HashMap<_, _>>();
    if index.len() != states.len() {
        return Err(Error::InternalInconsistency(format!("duplicate canonical labels in irrep {irrep}")));
    }
    Ok(CanonicalBasis { irrep: irrep.clone(), states, index })
}

/// The canonical basis of `K`, built once per process and shared.
pub fn canonical_basis(k: &IrrepLabel) -> Result<Arc<CanonicalBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<IrrepLabel, Arc<CanonicalBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(k) {
        return Ok(Arc::clone(b));
    }
    // Built outside the lock; a concurrent duplicate build is harmless.
    let basis = Arc::new(build(k)?);
    let mut guard = cache.lock().expect("basis cache poisoned");
    Ok(Arc::clone(guard.entry(k.clone()).or_insert(basis)))
}

/// Canonical basis states of the `SU(n)` irrep `K` as `(label, state)`
/// pairs with primitive integer polynomials (normalize by
/// [`BosonPolynomial::norm_sqr`]).
pub fn canonical_basis_states(n: usize, k: &IrrepLabel) -> Result<Vec<(CanonicalStateLabel, BosonPolynomial)>> {
    if k.n() != n {
        return Err(Error::ShapeError(format!("irrep {k} is not an SU({n}) label")));
    }
    Ok(canonical_basis(k)?.states.iter().map(|s| (s.label.clone(), s.polynomial.clone())).collect())
}

/// Coefficient `⟨hws| c_{l_1,l_1+1} ⋯ |ψ⟩` (normalized states) obtained by
/// repeatedly applying the first simple raising operator that does not
/// annihilate the current state, until the highest weight is reached.
pub fn phase_convention_coefficient(basis: &CanonicalBasis, index: usize) -> Result<f64> {
    let irrep = basis.irrep();
    let n = irrep.n();
    let top = hws(irrep);
    let top_occ = top.site_occupations().expect("highest-weight state has definite occupations");
    let state = &basis.states()[index];
    let mut psi = state.polynomial.clone();
    while psi.site_occupations().as_deref() != Some(top_occ.as_slice()) {
        let mut raised = None;
        for l in 1..n {
            let r = psi.apply(Generator::C(l, l + 1))?;
            if !r.is_zero() {
                raised = Some(r);
                break;
            }
        }
        psi = raised.ok_or_else(|| {
            Error::InternalInconsistency(format!("state {} is annihilated below the highest weight", state.label))
        })?;
    }
    Ok(big_to_f64(&top.inner(&psi)) / (big_to_f64(&top.norm_sqr()) * big_to_f64(&state.norm_sqr)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, k: &[u32]) -> Arc<CanonicalBasis> {
        canonical_basis(&IrrepLabel::new(n, k.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn su3_adjoint_zero_weight_splits_into_singlet_and_triplet() {
        let b = basis(3, &[1, 1]);
        assert_eq!(b.len(), 8);
        let zero = b.indices_with_occupations(&[1, 1, 1]);
        assert_eq!(zero.len(), 2);
        let mut subs: Vec<u32> = zero.iter().map(|&i| b.states()[i].label.chain_irreps[1].kappas()[0]).collect();
        subs.sort();
        // su(2) on sites 1,2 holding two bosons: spin 0 or spin 1.
        assert_eq!(subs, vec![0, 2]);
        for &i in &zero {
            assert!(b.states()[i].label.chain_weights[0].is_zero());
        }
    }

    #[test]
    fn su2_labels_reduce_to_spin_projection() {
        let b = basis(2, &[3]);
        assert_eq!(b.len(), 4);
        for s in b.states() {
            assert_eq!(s.label.chain_irreps.len(), 1);
            assert_eq!(s.polynomial.len(), 1);
        }
        let occ: Vec<Vec<u32>> = b.states().iter().map(|s| s.label.occupations.clone()).collect();
        assert_eq!(occ, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
    }

    #[test]
    fn canonical_states_are_orthonormal_cartan_eigenstates() {
        for (n, k) in [(3, vec![2, 1]), (4, vec![1, 0, 1]), (4, vec![1, 1, 0])] {
            let b = basis(n, &k);
            let states = b.states();
            for (i, a) in states.iter().enumerate() {
                for l in 1..n {
                    let h = a.polynomial.apply(Generator::H(l)).unwrap();
                    let w = a.label.chain_weights[0].0[l - 1];
                    assert_eq!(h, a.polynomial.scaled(&BigInt::from(w)));
                }
                for bb in &states[i + 1..] {
                    assert!(a.polynomial.inner(&bb.polynomial).is_zero(), "{} vs {}", a.label, bb.label);
                }
            }
        }
    }

    #[test]
    fn chain_labels_are_casimir_consistent() {
        // Every state of a chain irrep K^(m) is reached from its su(m)
        // highest weight: the su(m) raising operators never leave the set of
        // states sharing the chain labels above m.
        let b = basis(4, &[1, 1, 0]);
        for (ci, s) in b.states().iter().enumerate() {
            for m in 2..4 {
                for i in 1..m {
                    for j in i + 1..=m {
                        let raised = s.polynomial.apply(Generator::C(i, j)).unwrap();
                        for (ri, r) in b.states().iter().enumerate() {
                            if r.polynomial.inner(&raised).is_zero() {
                                continue;
                            }
                            let depth = 4 - m;
                            assert_eq!(
                                r.label.chain_irreps[..=depth],
                                s.label.chain_irreps[..=depth],
                                "c_{i},{j} links {} and {} ({ci}->{ri})",
                                s.label,
                                r.label
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn simple_raising_matrix_elements_are_nonnegative() {
        for (n, k) in [(3, vec![1, 1]), (3, vec![2, 2]), (4, vec![1, 0, 1]), (4, vec![1, 1, 0]), (4, vec![2, 1, 0])] {
            let b = basis(n, &k);
            for r in 0..b.len() {
                for c in 0..b.len() {
                    for l in 1..n {
                        let v = b.matrix_element(Generator::C(l, l + 1), r, c).unwrap();
                        assert!(v >= -1e-12, "K={k:?} <{}|c_{l},{}|{}> = {v}", b.states()[r].label, l + 1, b.states()[c].label);
                    }
                }
            }
            for i in 0..b.len() {
                assert!(phase_convention_coefficient(&b, i).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn su2_raising_reproduces_angular_momentum_elements() {
        // c_{12}|J,M⟩ = √(J(J+1) − M(M+1)) |J,M+1⟩ for J = 3/2.
        let b = basis(2, &[3]);
        for c in 1..4 {
            let m = 1.5 - c as f64;
            let v = b.matrix_element(Generator::C(1, 2), c - 1, c).unwrap();
            assert!((v - (1.5 * 2.5 - m * (m + 1.0)).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn label_display_uses_compressed_notation() {
        let l = CanonicalStateLabel::from_compact(&[1, 1], &[0, 1, 1, 1], &[vec![2], vec![1]]).unwrap();
        assert_eq!(l.to_string(), "(1,1)0111(2)(1)");
        assert_eq!(l.chain_weights[0], Weight(vec![-1, 0, 0]));
        assert!(CanonicalStateLabel::from_compact(&[1, 1], &[0, 1, 1, 0], &[vec![2], vec![1]]).is_err());
        assert!(CanonicalStateLabel::from_compact(&[1, 1], &[0, 1, 1, 1], &[vec![3], vec![1]]).is_err());
    }

    #[test]
    fn canonical_counts_match_dimension_for_all_small_irreps() {
        for n in 2..=4 {
            for k in super::super::irreps_up_to_dimension(n, 30).unwrap() {
                assert_eq!(canonical_basis(&k).unwrap().len(), k.dimension(), "K = {k}");
            }
        }
    }
}
