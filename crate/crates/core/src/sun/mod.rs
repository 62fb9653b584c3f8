//! Boson realizations of `su(n)`: highest-weight states, basis sets of
//! irreducible representations, canonical basis states adapted to the chain
//! `su(n) ⊃ su(n−1) ⊃ … ⊃ su(2)` (with `su(m)` acting on sites `1..=m`),
//! `D`-functions and Gelfand–Tsetlin patterns.
//!
//! States are built in exact integer arithmetic, so every linear-independence
//! decision is exact; `D`-functions are evaluated in floating point at the
//! very end.

mod basis;
mod canonical;
mod dfunction;
mod gt;
mod polynomial;

pub use basis::{basis_set, BasisSet};
pub use canonical::{
    canonical_basis, canonical_basis_states, phase_convention_coefficient, CanonicalBasis, CanonicalState,
    CanonicalStateLabel,
};
pub(crate) use dfunction::dmatrix_block;
pub use dfunction::{dfunction, dfunction_matrix, fundamental_matrix, omega_from_unitary, parameter_count, su2_matrix, Omega};
pub use gt::{gt_weights, state_to_gt, GtPattern};
pub use polynomial::{apply_generator, hws, BosonPolynomial, Generator, Monomial};

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Irrep label `K = (κ_1, …, κ_{n−1})` of `SU(n)` (Dynkin labels; the
/// highest weight).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IrrepLabel {
    n: usize,
    kappas: Vec<u32>,
}

impl IrrepLabel {
    /// Validates `n >= 2` and `kappas.len() == n − 1`.
    pub fn new(n: usize, kappas: Vec<u32>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("SU(n) needs n >= 2, got {n}")));
        }
        if kappas.len() != n - 1 {
            return Err(Error::LabelError(format!("SU({n}) irrep needs {} labels, got {}", n - 1, kappas.len())));
        }
        Ok(Self { n, kappas })
    }

    /// Label with trailing zeros omitted, padded to `n − 1` entries.
    pub fn padded(n: usize, kappas: &[u32]) -> Result<Self> {
        if n < 2 || kappas.len() > n - 1 {
            return Err(Error::LabelError(format!("{kappas:?} is not an SU({n}) label")));
        }
        let mut k = kappas.to_vec();
        k.resize(n - 1, 0);
        Self::new(n, k)
    }

    /// Label dual to a partition `{λ}` with at most `n` parts:
    /// `κ_i = λ_i − λ_{i+1}`.
    pub fn from_partition(n: usize, parts: &[u32]) -> Result<Self> {
        if parts.len() > n {
            return Err(Error::PartitionError(format!("partition {parts:?} has more than {n} parts")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) || parts.contains(&0) {
            return Err(Error::PartitionError(format!("{parts:?} is not a partition")));
        }
        let mut lam = parts.to_vec();
        lam.resize(n, 0);
        Self::new(n, (0..n - 1).map(|i| lam[i] - lam[i + 1]).collect())
    }

    /// The group parameter `n` of `SU(n)`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dynkin labels `κ_1..κ_{n−1}`.
    pub fn kappas(&self) -> &[u32] {
        &self.kappas
    }

    /// Number of bosons `N_K = κ_1 + 2κ_2 + … + (n−1)κ_{n−1}` in the
    /// boson realization.
    pub fn boson_number(&self) -> usize {
        self.kappas.iter().enumerate().map(|(i, &k)| (i + 1) * k as usize).sum()
    }

    /// Partition (row lengths `λ_i = Σ_{j≥i} κ_j`, zeros dropped).
    pub fn partition(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n);
        let mut acc = 0;
        for &k in self.kappas.iter().rev() {
            acc += k;
            out.push(acc);
        }
        out.reverse();
        out.retain(|&v| v > 0);
        out
    }

    /// Dimension of the irrep.
    pub fn dimension(&self) -> usize {
        irrep_dimension(self).to_usize().expect("irrep dimension exceeds usize")
    }

    /// The highest weight as a [`Weight`].
    pub fn highest_weight(&self) -> Weight {
        Weight(self.kappas.iter().map(|&k| i64::from(k)).collect())
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.kappas.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Weight `Λ = (λ_1, …, λ_{n−1})`: eigenvalues of the Cartan operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    /// Weight of a state with site occupations `ν`: `λ_i = ν_i − ν_{i+1}`.
    pub fn from_occupations(occ: &[u32]) -> Self {
        Weight(occ.windows(2).map(|w| i64::from(w[0]) - i64::from(w[1])).collect())
    }

    /// Whether every component vanishes.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Dimension `Δ_K = Π_{1≤i<j≤n} (j − i + Σ_{k=i}^{j−1} κ_k)/(j − i)`,
/// evaluated exactly.
pub fn irrep_dimension(k: &IrrepLabel) -> BigUint {
    let n = k.n();
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 1..n {
        for j in i + 1..=n {
            let s: u64 = k.kappas()[i - 1..j - 1].iter().map(|&v| u64::from(v)).sum();
            num *= BigUint::from(s + (j - i) as u64);
            den *= BigUint::from((j - i) as u64);
        }
    }
    num / den
}

/// All labels of `SU(n)` with dimension at most `max_dim`, in lexicographic
/// order of the Dynkin labels.
///
/// The dimension is nondecreasing in every `κ_i`, so a prefix whose
/// zero-padded completion is already too large prunes its whole subtree.
pub fn irreps_up_to_dimension(n: usize, max_dim: usize) -> Result<Vec<IrrepLabel>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("SU(n) needs n >= 2, got {n}")));
    }
    fn walk(n: usize, prefix: &mut Vec<u32>, max: &BigUint, out: &mut Vec<IrrepLabel>) {
        if prefix.len() == n - 1 {
            out.push(IrrepLabel { n, kappas: prefix.clone() });
            return;
        }
        for v in 0.. {
            prefix.push(v);
            let mut probe = prefix.clone();
            probe.resize(n - 1, 0);
            let fits = irrep_dimension(&IrrepLabel { n, kappas: probe }) <= *max;
            if fits {
                walk(n, prefix, max, out);
            }
            prefix.pop();
            if !fits {
                break;
            }
        }
    }
    let mut out = Vec::new();
    walk(n, &mut Vec::with_capacity(n - 1), &BigUint::from(max_dim), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula_examples() {
        let d = |n, k: &[u32]| IrrepLabel::new(n, k.to_vec()).unwrap().dimension();
        assert_eq!(d(2, &[2]), 3);
        assert_eq!(d(2, &[4]), 5);
        assert_eq!(d(3, &[1, 1]), 8);
        assert_eq!(d(3, &[2, 2]), 27);
        assert_eq!(d(3, &[3, 0]), 10);
        assert_eq!(d(4, &[1, 0, 1]), 15);
        assert_eq!(d(5, &[1, 0, 0, 0]), 5);
        assert_eq!(d(5, &[2, 1, 0, 0]), 105);
    }

    #[test]
    fn partition_round_trip() {
        let k = IrrepLabel::from_partition(4, &[2, 1]).unwrap();
        assert_eq!(k.kappas(), &[1, 1, 0]);
        assert_eq!(k.partition(), vec![2, 1]);
        assert_eq!(k.boson_number(), 3);
        assert_eq!(IrrepLabel::from_partition(3, &[1, 1, 1]).unwrap().kappas(), &[0, 0]);
        assert!(IrrepLabel::from_partition(2, &[1, 1, 1]).is_err());
        assert!(IrrepLabel::from_partition(3, &[1, 2]).is_err());
    }

    #[test]
    fn irrep_enumeration_matches_brute_force() {
        for n in 2..=4 {
            let max = 60;
            let found = irreps_up_to_dimension(n, max).unwrap();
            let mut brute = Vec::new();
            let bound = max as u32;
            let mut k = vec![0u32; n - 1];
            'outer: loop {
                let l = IrrepLabel::new(n, k.clone()).unwrap();
                if l.dimension() <= max {
                    brute.push(l);
                }
                for d in (0..n - 1).rev() {
                    if k[d] < bound {
                        k[d] += 1;
                        continue 'outer;
                    }
                    k[d] = 0;
                }
                break;
            }
            brute.sort();
            assert_eq!(found, brute, "n = {n}");
        }
    }
}
