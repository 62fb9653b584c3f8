//! Gelfand–Tsetlin patterns of canonical basis states.
//!
//! Row `ℓ` (`ℓ = n, …, 1`) holds `m_{1,ℓ} ≥ … ≥ m_{ℓ,ℓ}`: the partition of
//! the `su(ℓ)` irrep in the chain, shifted so that its entries add up to the
//! number of bosons on sites `1..=ℓ`. Adjacent rows interlace,
//! `m_{k,ℓ} ≥ m_{k,ℓ−1} ≥ m_{k+1,ℓ}`.

use super::canonical::CanonicalStateLabel;
use super::{IrrepLabel, Weight};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A Gelfand–Tsetlin pattern; `rows[0]` is the top row (length `n`) and
/// `rows[n−1]` the single bottom entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GtPattern {
    rows: Vec<Vec<i64>>,
}

impl GtPattern {
    /// Validates the triangular shape, monotone rows and interlacing.
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::LabelError("a pattern needs at least two rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n - i {
                return Err(Error::LabelError(format!("row {} has {} entries, expected {}", i, row.len(), n - i)));
            }
        }
        for i in 1..n {
            let (up, low) = (&rows[i - 1], &rows[i]);
            for k in 0..low.len() {
                if !(up[k] >= low[k] && low[k] >= up[k + 1]) {
                    return Err(Error::LabelError(format!(
                        "rows {up:?} and {low:?} do not interlace at position {}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self { rows })
    }

    /// Rows from top (length `n`) to bottom (length 1).
    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// Number of bosons on sites `1..=ℓ` (row sum of row `ℓ`).
    fn cumulative(&self, l: usize) -> i64 {
        let n = self.rows.len();
        self.rows[n - l].iter().sum()
    }

    /// The canonical label this pattern describes.
    pub fn to_label(&self) -> Result<CanonicalStateLabel> {
        let n = self.rows.len();
        let mut chain = Vec::with_capacity(n - 1);
        for row in &self.rows[..n - 1] {
            let l = row.len();
            let kappas = row
                .windows(2)
                .map(|w| u32::try_from(w[0] - w[1]).map_err(|_| Error::LabelError(format!("row {row:?} increases"))))
                .collect::<Result<Vec<u32>>>()?;
            chain.push(IrrepLabel::new(l, kappas)?);
        }
        let mut occ = Vec::with_capacity(n);
        let mut prev = 0;
        for l in 1..=n {
            let s = self.cumulative(l);
            occ.push(u32::try_from(s - prev).map_err(|_| Error::LabelError(format!("negative occupation on site {l}")))?);
            prev = s;
        }
        CanonicalStateLabel::new(chain, occ)
    }
}

impl fmt::Display for GtPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", rows.join(" | "))
    }
}

/// Gelfand–Tsetlin pattern of a canonical label.
///
/// Row `ℓ` is `m_{k,ℓ} = Σ_{j=k}^{ℓ−1} κ^(ℓ)_j + c_ℓ` with the shift
/// `c_ℓ = (S_ℓ − Σ_j j κ^(ℓ)_j)/ℓ`, `S_ℓ` the number of bosons on sites
/// `1..=ℓ`; the bottom row is `ν_1`. Fails with [`Error::LabelError`] if the
/// rows do not interlace.
pub fn state_to_gt(label: &CanonicalStateLabel) -> Result<GtPattern> {
    let n = label.n();
    let cumulative = |l: usize| -> i64 { label.occupations[..l].iter().map(|&v| i64::from(v)).sum() };
    let mut rows = Vec::with_capacity(n);
    for k in &label.chain_irreps {
        let l = k.n();
        let shift_num = cumulative(l) - k.boson_number() as i64;
        if shift_num % l as i64 != 0 {
            return Err(Error::LabelError(format!("irrep {k} does not fit the occupations of {label}")));
        }
        let shift = shift_num / l as i64;
        let row = (0..l).map(|i| k.kappas()[i..].iter().map(|&v| i64::from(v)).sum::<i64>() + shift).collect();
        rows.push(row);
    }
    rows.push(vec![cumulative(1)]);
    GtPattern::new(rows)
}

/// Weight read off a pattern: `λ_ℓ = 2 S_ℓ − S_{ℓ+1} − S_{ℓ−1}`, which equals
/// `ν_ℓ − ν_{ℓ+1}`.
pub fn gt_weights(p: &GtPattern) -> Weight {
    let n = p.rows.len();
    let s = |l: usize| if l == 0 { 0 } else { p.cumulative(l) };
    Weight((1..n).map(|l| 2 * s(l) - s(l + 1) - s(l - 1)).collect())
}
