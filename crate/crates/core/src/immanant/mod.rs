//! Immanants of complex matrices and their connection to `SU(n)`
//! `D`-functions.
//!
//! The immanant of an `N×N` matrix `T` for a partition `{λ}` of `N` is
//! `imm^{λ}(T) = Σ_σ χ^{λ}(σ) T_{1σ(1)} ⋯ T_{Nσ(N)}`, with `χ^{λ}` the
//! character of the symmetric-group irrep `{λ}`; the permanent and the
//! determinant are the trivial and alternating cases. Characters come from
//! the Murnaghan–Nakayama rule in exact integer arithmetic.
//!
//! Submodules verify identities between immanants and `D`-functions
//! ([`identities`]) and evaluate three-photon coincidence probabilities
//! ([`photons`]).

pub mod identities;
pub mod photons;

pub use identities::{
    abc_via_dfunctions, kostant_lhs_rhs, littlewood_relation, littlewood_relation_check, submatrix_conjecture_check,
    submatrix_immanant_identity, IdentityCheck, LittlewoodReport, SubmatrixInstance, SubmatrixTable,
};
pub use photons::{
    abc_matrix_elements, delayed_photon_coincidence, three_photon_coincidence, three_photon_coincidence_spectrum,
    three_photon_quadrature,
};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// Largest order accepted by the permutation-sum evaluation.
pub const MAX_IMMANANT_ORDER: usize = 10;

/// A partition `{λ_1 ≥ λ_2 ≥ … > 0}` of `N = Σ λ_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Validates that the parts are positive and nonincreasing.
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::PartitionError("empty partition".into()));
        }
        if parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::PartitionError(format!("{parts:?} is not a partition")));
        }
        Ok(Self(parts))
    }

    /// The parts.
    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// `N = Σ λ_i`.
    pub fn size(&self) -> usize {
        self.0.iter().map(|&p| p as usize).sum()
    }

    /// All partitions of `n` in reverse lexicographic order (`{n}` first).
    pub fn all(n: usize) -> Vec<Partition> {
        fn walk(rest: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
            if rest == 0 {
                out.push(Partition(prefix.clone()));
                return;
            }
            for p in (1..=rest.min(max)).rev() {
                prefix.push(p);
                walk(rest - p, p, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            walk(n as u32, n as u32, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Dimension of the symmetric-group irrep by the hook-length formula.
    pub fn dimension(&self) -> u64 {
        let n = self.size() as u64;
        let mut num: u128 = (1..=n as u128).product();
        for (i, &row) in self.0.iter().enumerate() {
            for j in 0..row as usize {
                let arm = row as usize - j - 1;
                let leg = self.0[i + 1..].iter().filter(|&&r| r as usize > j).count();
                num /= (arm + leg + 1) as u128;
            }
        }
        num as u64
    }

    /// Cycle type of a permutation given as images `σ(k)` (0-based).
    pub fn cycle_type(perm: &[usize]) -> Partition {
        let mut seen = vec![false; perm.len()];
        let mut cycles = Vec::new();
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = perm[k];
                len += 1;
            }
            cycles.push(len);
        }
        cycles.sort_unstable_by(|a, b| b.cmp(a));
        Partition(cycles)
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    /// `{2,1}` notation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `2,1`, `{2,1}`, `[2,1]` or (single-digit parts) `21`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['{', '[', '(']).trim_end_matches(['}', ']', ')']);
        let parts: Option<Vec<u32>> = if t.contains(',') {
            t.split(',').map(|p| p.trim().parse().ok()).collect()
        } else {
            t.chars().map(|c| c.to_digit(10)).collect()
        };
        Partition::new(parts.ok_or_else(|| Error::PartitionError(format!("cannot parse partition '{s}'")))?)
    }
}

/// Character `χ^{λ}(μ)` of the symmetric-group irrep `{λ}` on the class of
/// cycle type `μ`, by the Murnaghan–Nakayama rule.
///
/// Rim hooks are removed on the beta-set (first-column hook lengths) of
/// `λ`: removing a hook of length `r` moves one bead from `β` to `β − r`,
/// with sign `(−1)^{beads strictly between}`.
pub fn sn_character(irrep: &Partition, cycle_type: &Partition) -> Result<i64> {
    if irrep.size() != cycle_type.size() {
        return Err(Error::PartitionError(format!(
            "{irrep} and {cycle_type} are partitions of different integers"
        )));
    }
    let l = irrep.0.len();
    let beta: Vec<u32> = irrep.0.iter().enumerate().map(|(i, &p)| p + (l - 1 - i) as u32).collect();
    let mut memo = HashMap::new();
    Ok(mn(beta, &cycle_type.0, &mut memo))
}

fn mn(beta: Vec<u32>, mu: &[u32], memo: &mut HashMap<(Vec<u32>, usize), i64>) -> i64 {
    let Some((&r, rest)) = mu.split_first() else {
        return 1;
    };
    let key = (beta.clone(), mu.len());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut total = 0;
    for (idx, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let target = b - r;
        let between = beta.iter().filter(|&&x| x > target && x < b).count();
        let mut next = beta.clone();
        next[idx] = target;
        let sign = if between % 2 == 0 { 1 } else { -1 };
        total += sign * mn(next, rest, memo);
    }
    memo.insert(key, total);
    total
}

/// Character table of `S_N` (rows: irreps, columns: classes, both in the
/// order of [`Partition::all`]).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterTable {
    /// `N`.
    pub n: usize,
    /// Irrep labels (rows).
    pub irreps: Vec<Partition>,
    /// Class labels by cycle type (columns).
    pub classes: Vec<Partition>,
    /// `values[i][j] = χ^{irreps[i]}(classes[j])`.
    pub values: Vec<Vec<i64>>,
}

impl CharacterTable {
    /// Computes the table by the Murnaghan–Nakayama rule.
    pub fn compute(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::PartitionError("S_0 has no character table".into()));
        }
        let parts = Partition::all(n);
        let values = parts
            .iter()
            .map(|l| parts.iter().map(|m| sn_character(l, m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, irreps: parts.clone(), classes: parts, values })
    }

    /// `χ^{irrep}(class)` from the table.
    pub fn get(&self, irrep: &Partition, class: &Partition) -> Option<i64> {
        let i = self.irreps.iter().position(|p| p == irrep)?;
        let j = self.classes.iter().position(|p| p == class)?;
        Some(self.values[i][j])
    }

    /// Size of the class of cycle type `μ`: `N! / Π_k k^{m_k} m_k!`.
    pub fn class_size(mu: &Partition) -> u64 {
        let n = mu.size() as u64;
        let mut size: u128 = (1..=n as u128).product();
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for &k in mu.parts() {
            *counts.entry(k).or_default() += 1;
        }
        for (k, m) in counts {
            size /= u128::from(k).pow(m) * (1..=u128::from(m)).product::<u128>();
        }
        size as u64
    }
}

/// The bundled `S_2` and `S_3` character tables (reference data).
pub const BUNDLED_CHARACTER_TABLES: &str = include_str!("../../../../fixtures/character_tables.json");

/// Parses the reference character tables.
pub fn reference_character_tables() -> Result<Vec<CharacterTable>> {
    #[derive(Deserialize)]
    struct File {
        tables: Vec<CharacterTable>,
    }
    let f: File = serde_json::from_str(BUNDLED_CHARACTER_TABLES).map_err(|e| Error::FixtureError(e.to_string()))?;
    for t in &f.tables {
        if t.values.len() != t.irreps.len() || t.values.iter().any(|r| r.len() != t.classes.len()) {
            return Err(Error::FixtureError(format!("character table for S_{} is ragged", t.n)));
        }
    }
    Ok(f.tables)
}

fn check_square(t: &ComplexMatrix, irrep: &Partition) -> Result<usize> {
    if !t.is_square() {
        return Err(Error::ShapeError(format!("immanant of a {}x{} matrix", t.rows(), t.cols())));
    }
    let n = t.rows();
    if irrep.size() != n {
        return Err(Error::PartitionError(format!("{irrep} is not a partition of {n}")));
    }
    Ok(n)
}

/// Permanent by Ryser's inclusion–exclusion formula with Gray-code column
/// updates, `O(2^N N)`.
pub fn permanent(t: &ComplexMatrix) -> Result<C64> {
    if !t.is_square() {
        return Err(Error::ShapeError(format!("permanent of a {}x{} matrix", t.rows(), t.cols())));
    }
    let n = t.rows();
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if n >= 63 {
        return Err(Error::ComplexityLimit(format!("permanent of order {n}")));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let next = k ^ (k >> 1);
        let col = (next ^ gray).trailing_zeros() as usize;
        let adding = next & (1 << col) != 0;
        gray = next;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += t[(i, col)];
            } else {
                *s -= t[(i, col)];
            }
        }
        let prod: C64 = row_sums.iter().product();
        if next.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

/// Sums `Π_k t_{k,σ(k)}` over all permutations, grouped by cycle type.
fn class_sums(t: &ComplexMatrix) -> BTreeMap<Partition, C64> {
    let n = t.rows();
    let mut sums: BTreeMap<Partition, C64> = BTreeMap::new();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut visit = |perm: &[usize]| {
        let prod: C64 = perm.iter().enumerate().map(|(k, &s)| t[(k, s)]).product();
        *sums.entry(Partition::cycle_type(perm)).or_insert(C64::new(0.0, 0.0)) += prod;
    };
    visit(&perm);
    // Heap's algorithm.
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    sums
}

/// Immanant by the permutation sum, grouped by class (any partition).
///
/// Fails with [`Error::ComplexityLimit`] above order
/// [`MAX_IMMANANT_ORDER`].
pub fn immanant_by_permutations(t: &ComplexMatrix, irrep: &Partition) -> Result<C64> {
    let n = check_square(t, irrep)?;
    if n > MAX_IMMANANT_ORDER {
        return Err(Error::ComplexityLimit(format!("immanant of order {n} exceeds {MAX_IMMANANT_ORDER}")));
    }
    let mut total = C64::new(0.0, 0.0);
    for (class, sum) in class_sums(t) {
        total += sum * sn_character(irrep, &class)? as f64;
    }
    Ok(total)
}

/// Immanant `imm^{λ}(t)`: Ryser's formula for the permanent `{N}`, the
/// class-grouped permutation sum otherwise.
pub fn immanant(t: &ComplexMatrix, irrep: &Partition) -> Result<C64> {
    let n = check_square(t, irrep)?;
    if irrep.parts().len() == 1 {
        return permanent(t);
    }
    if n > MAX_IMMANANT_ORDER {
        return Err(Error::ComplexityLimit(format!("immanant of order {n} exceeds {MAX_IMMANANT_ORDER}")));
    }
    immanant_by_permutations(t, irrep)
}
