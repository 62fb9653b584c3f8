//! Basis sets of `su(m)` irreps by a modified breadth-first search over the
//! weight graph, starting from a highest-weight state.
//!
//! Vertices are weights; a vertex is expanded only after every vertex above
//! it has been expanded (vertices are processed in order of their depth
//! below the highest weight), so each weight space is complete before its
//! states are lowered further. Candidate states are filtered by exact
//! Gram–Schmidt: a candidate is kept iff its component orthogonal to the
//! states already at the vertex is nonzero.

use super::polynomial::{BosonPolynomial, Generator};
use super::Weight;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Mutually orthogonal states (exact, unnormalized) spanning a subspace.
#[derive(Clone, Debug, Default)]
pub(crate) struct OrthoSpace {
    pub(crate) states: Vec<BosonPolynomial>,
    norms: Vec<BigInt>,
}

impl OrthoSpace {
    /// Component of `u` orthogonal to the space, scaled to a primitive
    /// integer polynomial (zero if `u` lies in the span).
    pub(crate) fn residual(&self, u: &BosonPolynomial) -> BosonPolynomial {
        let mut r = u.clone();
        for (v, nv) in self.states.iter().zip(&self.norms) {
            let ip = v.inner(&r);
            if ip.is_zero() {
                continue;
            }
            // r ← ‖v‖² r − ⟨v|r⟩ v keeps integrality and orthogonality.
            r = r.combine(nv, v, &-ip);
            r.make_primitive();
        }
        r
    }

    /// Adds the orthogonal component of `u`; returns whether it was new.
    pub(crate) fn push(&mut self, u: &BosonPolynomial) -> bool {
        let r = self.residual(u);
        if r.is_zero() {
            return false;
        }
        self.norms.push(r.norm_sqr());
        self.states.push(r);
        true
    }

    /// Adds a state already known to be orthogonal to the space.
    pub(crate) fn push_orthogonal(&mut self, u: BosonPolynomial) {
        self.norms.push(u.norm_sqr());
        self.states.push(u);
    }

    pub(crate) fn len(&self) -> usize {
        self.states.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// States of one `su(m)` irrep, grouped by vertex.
///
/// Vertices are keyed by the site occupations `(ν_1, …, ν_n)`; inside one
/// `su(m)` irrep these are in one-to-one correspondence with `su(m)`
/// weights (sites beyond `m` are untouched and the total is fixed).
#[derive(Clone, Debug)]
pub struct BasisSet {
    m: usize,
    pub(crate) vertices: BTreeMap<Vec<u32>, OrthoSpace>,
    lowering_applications: usize,
}

impl BasisSet {
    /// Rank parameter `m` of the algebra `su(m)` that generated the set.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of states.
    pub fn len(&self) -> usize {
        self.vertices.values().map(OrthoSpace::len).sum()
    }

    /// Whether the set is empty (never true for a constructed set).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of lowering-operator applications performed by the search.
    pub fn lowering_applications(&self) -> usize {
        self.lowering_applications
    }

    /// States grouped by `su(m)` weight (mutually orthogonal, unnormalized).
    pub fn by_weight(&self) -> BTreeMap<Weight, Vec<BosonPolynomial>> {
        self.vertices
            .iter()
            .map(|(occ, sp)| (Weight::from_occupations(&occ[..self.m]), sp.states.clone()))
            .collect()
    }

    /// Multiplicity of each `su(m)` weight.
    pub fn multiplicities(&self) -> BTreeMap<Weight, usize> {
        self.vertices.iter().map(|(occ, sp)| (Weight::from_occupations(&occ[..self.m]), sp.len())).collect()
    }
}

/// Depth of a vertex below the top: `Σ_{i≤m} i·ν_i` grows by `j − i` under
/// the lowering operator `c_{j,i}`.
fn depth(occ: &[u32], m: usize) -> u64 {
    occ[..m].iter().enumerate().map(|(i, &v)| (i as u64 + 1) * u64::from(v)).sum()
}

/// Builds the basis set of the `su(m)` irrep (acting on sites `1..=m`)
/// generated by `hws`.
///
/// Fails with [`Error::NotHighestWeight`] if `hws` has no definite site
/// occupations or is not annihilated by every raising operator `c_{i,j}`,
/// `i < j ≤ m`. Exactly `Δ·m(m−1)/2` lowering applications are made.
pub fn basis_set(hws: &BosonPolynomial, m: usize) -> Result<BasisSet> {
    let n = hws.n_sites();
    if m < 2 || m > n {
        return Err(Error::InvalidInput(format!("su({m}) is not a subalgebra for {n} sites")));
    }
    let top = hws.site_occupations().ok_or(Error::NotHighestWeight)?;
    for i in 1..=m {
        for j in i + 1..=m {
            if !hws.apply(Generator::C(i, j))?.is_zero() {
                return Err(Error::NotHighestWeight);
            }
        }
    }
    let mut start = hws.clone();
    start.make_primitive();
    let mut vertices: BTreeMap<Vec<u32>, OrthoSpace> = BTreeMap::new();
    let mut first = OrthoSpace::default();
    first.push_orthogonal(start);
    vertices.insert(top.clone(), first);
    let mut pending: BTreeMap<(u64, Vec<u32>), ()> = BTreeMap::new();
    pending.insert((depth(&top, m), top), ());
    let mut applications = 0;
    while let Some(((_, occ), ())) = pending.pop_first() {
        let sources = vertices[&occ].states.clone();
        for psi in &sources {
            for i in 1..m {
                for j in i + 1..=m {
                    applications += 1;
                    let mut lowered = psi.apply(Generator::C(j, i))?;
                    if lowered.is_zero() {
                        continue;
                    }
                    lowered.make_primitive();
                    let mut target = occ.clone();
                    target[i - 1] -= 1;
                    target[j - 1] += 1;
                    let added = vertices.entry(target.clone()).or_default().push(&lowered);
                    if added {
                        pending.insert((depth(&target, m), target), ());
                    }
                }
            }
        }
    }
    Ok(BasisSet { m, vertices, lowering_applications: applications })
}
