//! Boson polynomials: states of `n−1` species of bosons on `n` sites written
//! as polynomials in creation operators acting on the vacuum, together with
//! the action of the `su(n)` generators.
//!
//! Coefficients are exact integers. A state is only meaningful up to scale,
//! so polynomials are kept *primitive* (coefficients with unit gcd; the
//! overall sign is meaningful and carries the phase convention) and the
//! squared norm is evaluated exactly on demand. Real
//! integer coefficients suffice because the highest-weight states and all
//! generators have integer matrix elements in the monomial basis.

use super::{IrrepLabel, Weight};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// Occupation matrix `ν_{i,k}` flattened row-major over sites `i` and
/// species `k` (`n` rows, `n−1` columns).
pub type Monomial = Vec<u8>;

/// An `su(n)` generator in the boson realization (1-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `c_{i,j} = Σ_k a†_{i,k} a_{j,k}`: moves one boson from site `j` to
    /// site `i` (raising for `i < j`, lowering for `i > j`).
    C(usize, usize),
    /// Cartan operator `h_i = Σ_k (n_{i,k} − n_{i+1,k})`.
    H(usize),
}

/// A polynomial in the creation operators `a†_{i,k}` applied to the vacuum,
/// with exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BosonPolynomial {
    n: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

fn factorial(k: u8) -> BigInt {
    (1..=u64::from(k)).fold(BigInt::one(), |acc, v| acc * v)
}

/// `⟨0| a^ν (a†)^ν |0⟩ = Π ν_{i,k}!`.
pub(crate) fn monomial_norm(m: &[u8]) -> BigInt {
    m.iter().filter(|&&v| v > 1).fold(BigInt::one(), |acc, &v| acc * factorial(v))
}

impl BosonPolynomial {
    /// The zero polynomial for `n` sites.
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    /// The vacuum `|0⟩` (constant polynomial 1).
    pub fn vacuum(n: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; n * (n - 1)], BigInt::one());
        Self { n, terms }
    }

    /// Builds a polynomial from explicit terms; zero coefficients are dropped.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, BigInt)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("boson realization needs n >= 2, got {n}")));
        }
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if m.len() != n * (n - 1) {
                return Err(Error::ShapeError(format!("monomial of length {} for n = {n}", m.len())));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    /// Number of sites `n`.
    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// Number of species `n−1`.
    pub fn n_species(&self) -> usize {
        self.n - 1
    }

    /// Terms as `(occupation matrix, coefficient)` pairs in monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    /// Number of monomials with nonzero coefficient.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Whether the polynomial vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial (zero if absent).
    pub fn coefficient(&self, m: &[u8]) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Total degree of each monomial, or `None` for the zero polynomial or
    /// mixed degrees.
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|m| m.iter().map(|&v| v as usize).sum::<usize>());
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    /// Site occupations `ν_i = Σ_k ν_{i,k}` if all monomials agree.
    pub fn site_occupations(&self) -> Option<Vec<u32>> {
        let mut it = self.terms.keys().map(|m| site_totals(m, self.n));
        let first = it.next()?;
        it.all(|o| o == first).then_some(first)
    }

    /// `su(m)` weight `(ν_1−ν_2, …, ν_{m−1}−ν_m)` of a state with definite
    /// site occupations.
    pub fn weight(&self, m: usize) -> Option<Weight> {
        self.site_occupations().map(|o| Weight::from_occupations(&o[..m]))
    }

    /// Exact squared norm `Σ_ν c_ν² Π ν!` under the bosonic inner product.
    pub fn norm_sqr(&self) -> BigInt {
        self.terms.iter().map(|(m, c)| c * c * monomial_norm(m)).sum()
    }

    /// Exact bosonic inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> BigInt {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.terms.iter().filter_map(|(m, c)| large.terms.get(m).map(|d| c * d * monomial_norm(m))).sum()
    }

    /// Divides by the gcd of the coefficients (the state is unchanged up to
    /// a positive scale).
    pub fn make_primitive(&mut self) {
        let g = self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c));
        if !g.is_zero() && !g.is_one() {
            for c in self.terms.values_mut() {
                *c /= &g;
            }
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: &BigInt) -> Self {
        if s.is_zero() {
            return Self::zero(self.n);
        }
        Self { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    /// Flips the overall sign.
    pub fn negate(&mut self) {
        for c in self.terms.values_mut() {
            *c = -&*c;
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: &BigInt, other: &Self, b: &BigInt) -> Self {
        let mut out = self.scaled(a);
        for (m, c) in &other.terms {
            let v = c * b;
            match out.terms.get_mut(m) {
                Some(e) => {
                    *e += v;
                    if e.is_zero() {
                        out.terms.remove(m);
                    }
                }
                None if !v.is_zero() => {
                    out.terms.insert(m.clone(), v);
                }
                None => {}
            }
        }
        out
    }

    /// Polynomial product (the creation operators commute).
    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                *acc.entry(m).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Self { n: self.n, terms: acc }
    }

    /// Normalized coefficients `c_ν/‖ψ‖` in floating point, i.e. the state
    /// `Σ_ν c_ν (a†)^ν|0⟩` with unit norm.
    pub fn normalized_coefficients(&self) -> Vec<(Monomial, f64)> {
        let norm = big_to_f64(&self.norm_sqr()).sqrt();
        self.terms.iter().map(|(m, c)| (m.clone(), big_to_f64(c) / norm)).collect()
    }

    /// Sign of the leading (first in monomial order) coefficient.
    pub fn leading_sign(&self) -> i32 {
        self.terms.values().next().map_or(0, |c| if c.is_negative() { -1 } else { 1 })
    }

    /// Applies an `su(n)` generator exactly.
    pub fn apply(&self, op: Generator) -> Result<Self> {
        let n = self.n;
        let s = n - 1;
        match op {
            Generator::C(i, j) => {
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::InvalidInput(format!("generator c_{{{i},{j}}} outside 1..={n}")));
                }
                let (i, j) = (i - 1, j - 1);
                let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
                for (m, c) in &self.terms {
                    for k in 0..s {
                        let occ = m[j * s + k];
                        if occ == 0 {
                            continue;
                        }
                        let mut t = m.clone();
                        t[j * s + k] -= 1;
                        t[i * s + k] += 1;
                        *acc.entry(t).or_insert_with(BigInt::zero) += c * BigInt::from(occ);
                    }
                }
                acc.retain(|_, c| !c.is_zero());
                Ok(Self { n, terms: acc })
            }
            Generator::H(i) => {
                if i == 0 || i >= n {
                    return Err(Error::InvalidInput(format!("Cartan operator h_{i} outside 1..{n}")));
                }
                let mut out = Self::zero(n);
                for (m, c) in &self.terms {
                    let o = site_totals(m, n);
                    let w = i64::from(o[i - 1]) - i64::from(o[i]);
                    if w != 0 {
                        out.terms.insert(m.clone(), c * BigInt::from(w));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Site totals `ν_i = Σ_k ν_{i,k}` of a monomial.
pub(crate) fn site_totals(m: &[u8], n: usize) -> Vec<u32> {
    let s = n - 1;
    (0..n).map(|i| m[i * s..(i + 1) * s].iter().map(|&v| u32::from(v)).sum()).collect()
}

/// Converts a big integer to the nearest `f64` (infinite if out of range).
pub(crate) fn big_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(if v.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Applies a generator to a state (free-function form of
/// [`BosonPolynomial::apply`]).
pub fn apply_generator(op: Generator, state: &BosonPolynomial) -> Result<BosonPolynomial> {
    state.apply(op)
}

/// Determinant of the `k×k` matrix of creation operators `a†_{i,l}`
/// (`i, l ≤ k`) as a polynomial on `n` sites.
fn creation_determinant(n: usize, k: usize) -> BosonPolynomial {
    let s = n - 1;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut p = BosonPolynomial::zero(n);
    // Heap's algorithm tracks the permutation parity alongside.
    let mut sign = 1i64;
    let mut c = vec![0usize; k];
    let push = |perm: &[usize], sign: i64, p: &mut BosonPolynomial| {
        let mut m = vec![0u8; n * s];
        for (row, &col) in perm.iter().enumerate() {
            m[row * s + col] += 1;
        }
        p.add_term(m, BigInt::from(sign));
    };
    push(&perm, sign, &mut p);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            push(&perm, sign, &mut p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    p
}

/// Highest-weight state of the irrep `K`: the product of `k×k`
/// creation-operator determinants raised to `κ_k`, applied to the vacuum.
///
/// The returned polynomial is primitive; its exact norm is available via
/// [`BosonPolynomial::norm_sqr`].
pub fn hws(k: &IrrepLabel) -> BosonPolynomial {
    let n = k.n();
    let mut state = BosonPolynomial::vacuum(n);
    for (idx, &kappa) in k.kappas().iter().enumerate() {
        if kappa == 0 {
            continue;
        }
        let det = creation_determinant(n, idx + 1);
        for _ in 0..kappa {
            state = state.mul(&det);
        }
    }
    state.make_primitive();
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(n: usize, k: &[u32]) -> IrrepLabel {
        IrrepLabel::new(n, k.to_vec()).unwrap()
    }

    #[test]
    fn su2_hws_is_single_power() {
        let p = hws(&label(2, &[4]));
        assert_eq!(p.len(), 1);
        assert_eq!(p.coefficient(&[4, 0]), BigInt::one());
        // ⟨0|a^4 a†^4|0⟩ = 4!
        assert_eq!(p.norm_sqr(), BigInt::from(24));
    }

    #[test]
    fn su3_adjoint_hws_matches_determinant_structure() {
        // a†_{11} (a†_{11} a†_{22} − a†_{12} a†_{21}); rows = sites, cols = species.
        let p = hws(&label(3, &[1, 1]));
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&[2, 0, 0, 1, 0, 0]), BigInt::one());
        assert_eq!(p.coefficient(&[1, 1, 1, 0, 0, 0]), BigInt::from(-1));
        assert_eq!(p.degree(), Some(3));
        // Norm: 2!·1 + 1 = 3.
        assert_eq!(p.norm_sqr(), BigInt::from(3));
    }

    #[test]
    fn hws_annihilated_by_raising_operators() {
        for (n, k) in [(2, vec![3]), (3, vec![2, 1]), (4, vec![1, 0, 2]), (4, vec![1, 1, 1])] {
            let p = hws(&label(n, &k));
            for i in 1..=n {
                for j in i + 1..=n {
                    assert!(p.apply(Generator::C(i, j)).unwrap().is_zero(), "n={n} K={k:?} c_{i},{j}");
                }
            }
            assert_eq!(p.weight(n).unwrap().0, k.iter().map(|&v| v as i64).collect::<Vec<_>>());
            let deg: u32 = k.iter().enumerate().map(|(i, &v)| (i as u32 + 1) * v).sum();
            assert_eq!(p.degree(), Some(deg as usize));
        }
    }

    #[test]
    fn cartan_acts_by_weight() {
        let p = hws(&label(3, &[2, 1]));
        let h1 = p.apply(Generator::H(1)).unwrap();
        assert_eq!(h1, p.scaled(&BigInt::from(2)));
        let h2 = p.apply(Generator::H(2)).unwrap();
        assert_eq!(h2, p);
    }

    #[test]
    fn su2_raising_matrix_element() {
        // |J=1, M=0⟩ ∝ a†_1 a†_2; c_{12}|1,0⟩ = √2 |1,1⟩.
        let state = BosonPolynomial::from_terms(2, [(vec![1, 1], BigInt::one())]).unwrap();
        let raised = state.apply(Generator::C(1, 2)).unwrap();
        let top = BosonPolynomial::from_terms(2, [(vec![2, 0], BigInt::one())]).unwrap();
        let amp = big_to_f64(&top.inner(&raised))
            / (big_to_f64(&top.norm_sqr()) * big_to_f64(&state.norm_sqr())).sqrt();
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn commutator_of_raising_and_lowering_is_cartan() {
        let p = BosonPolynomial::from_terms(3, [(vec![1, 0, 1, 1, 0, 0], BigInt::from(3)), (vec![0, 1, 2, 0, 0, 0], BigInt::from(-2))])
            .unwrap();
        let a = p.apply(Generator::C(2, 1)).unwrap().apply(Generator::C(1, 2)).unwrap();
        let b = p.apply(Generator::C(1, 2)).unwrap().apply(Generator::C(2, 1)).unwrap();
        let lhs = a.combine(&BigInt::one(), &b, &BigInt::from(-1));
        assert_eq!(lhs, p.apply(Generator::H(1)).unwrap());
    }

    #[test]
    fn determinant_has_k_factorial_terms() {
        for k in 1..=4 {
            let d = creation_determinant(5, k);
            assert_eq!(d.len(), (1..=k).product::<usize>());
        }
    }
}
