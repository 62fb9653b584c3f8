//! Cosine-sine decomposition and the realization of an `n_s·n_p`-dimensional
//! unitary as a sequence of balanced beam splitters and internal-mode
//! transformations.
//!
//! The decomposition proceeds in two stages. The first repeatedly applies
//! the cosine-sine decomposition to peel off one spatial mode at a time,
//! producing internal unitaries and CS matrices; the second factors each CS
//! matrix as `(B₂⊗1)(Θ ⊕ Θ†)(B₂†⊗1)`.
//!
//! Plans store elements in *product order*: the target unitary equals
//! `E₀·E₁·…·E_last`, so `E_last` is the first element a photon meets.

use crate::error::{Error, Result};
use crate::matrix::{nearest_unitary, qr_householder, svd, ComplexMatrix, MatrixJson, UnitaryMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Result of the cosine-sine decomposition of an `(m+n)×(m+n)` unitary.
///
/// `u = left · (S_2m(θ) ⊕ 1_{n−m}) · right`, where `S_2m(θ)` has diagonal
/// blocks `diag(cos θ)` and off-diagonal blocks `±diag(sin θ)`
/// (`+` upper-right, `−` lower-left).
#[derive(Clone, Debug)]
pub struct CsdBlocks {
    /// Block-diagonal `L_m ⊕ L'_n`.
    pub left: UnitaryMatrix,
    /// CS angles θ_i in `[0, π/2]`, ordered by nonincreasing `cos θ_i`.
    pub cs_angles: Vec<f64>,
    /// Block-diagonal `R_m† ⊕ R'_n†`.
    pub right: UnitaryMatrix,
    /// Size of the upper block.
    pub m: usize,
    /// Size of the lower block.
    pub n: usize,
}

impl CsdBlocks {
    /// The middle factor `S_2m(θ) ⊕ 1_{n−m}`.
    pub fn middle(&self) -> ComplexMatrix {
        cs_middle(&self.cs_angles, self.m + self.n)
    }

    /// Upper-left block `L_m` of `left`.
    pub fn l_upper(&self) -> ComplexMatrix {
        self.left.submatrix(0, 0, self.m, self.m)
    }

    /// Lower-right block `L'_n` of `left`.
    pub fn l_lower(&self) -> ComplexMatrix {
        self.left.submatrix(self.m, self.m, self.n, self.n)
    }

    /// Upper-left block `R_m†` of `right`.
    pub fn r_upper(&self) -> ComplexMatrix {
        self.right.submatrix(0, 0, self.m, self.m)
    }

    /// Lower-right block `R'_n†` of `right`.
    pub fn r_lower(&self) -> ComplexMatrix {
        self.right.submatrix(self.m, self.m, self.n, self.n)
    }

    /// `left · middle · right`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        &(self.left.matrix() * &self.middle()) * self.right.matrix()
    }
}

/// Builds `S_2m(θ) ⊕ 1_{dim−2m}` for `m = angles.len()`.
pub fn cs_middle(angles: &[f64], dim: usize) -> ComplexMatrix {
    let m = angles.len();
    let mut s = ComplexMatrix::identity(dim);
    for (i, &t) in angles.iter().enumerate() {
        let (sn, cs) = t.sin_cos();
        s[(i, i)] = C64::new(cs, 0.0);
        s[(m + i, m + i)] = C64::new(cs, 0.0);
        s[(i, m + i)] = C64::new(sn, 0.0);
        s[(m + i, i)] = C64::new(-sn, 0.0);
    }
    s
}

/// Cosine-sine decomposition of `u` with an `m×m` upper-left block.
///
/// The SVD of the upper-left block fixes `L_m`, `cos θ` and `R_m`; the
/// lower-left block is then triangularized (largest sines first, for
/// stability) to obtain `L'_n` with the residual phases absorbed so that the
/// middle factor is real, and `R'_n†` follows by projecting the right block
/// columns onto the CS structure. Undetermined phases (vanishing sines) are
/// set to zero.
pub fn csd(u: &UnitaryMatrix, m: usize) -> Result<CsdBlocks> {
    let total = u.dim();
    if m == 0 || 2 * m > total {
        return Err(Error::InvalidSplit(format!(
            "upper block size {m} must satisfy 1 <= m <= n for total dimension {total}"
        )));
    }
    let n = total - m;
    let a = u.submatrix(0, 0, m, m);
    let c_blk = u.submatrix(m, 0, n, m);
    let a_svd = svd(&a)?;
    let l = a_svd.left.matrix().clone();
    let r = a_svd.right.matrix().clone();
    let cos: Vec<f64> = a_svd.singular_values.iter().map(|&c| c.min(1.0)).collect();

    // Y = C R has orthogonal columns with norms sin θ_i; triangularize it with
    // the largest-norm columns first.
    let y = &c_blk * &r;
    let rev: Vec<usize> = (0..m).rev().collect();
    let all_rows: Vec<usize> = (0..n).collect();
    let y_perm = y.select(&all_rows, &rev);
    let (q, rt) = qr_householder(&y_perm);
    let mut lp = ComplexMatrix::zeros(n, n);
    let mut sin = vec![0.0; m];
    for (p, &i) in rev.iter().enumerate() {
        let d = rt[(p, p)];
        let phase = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        sin[i] = d.norm();
        for row in 0..n {
            lp[(row, i)] = -q[(row, p)] * phase;
        }
    }
    for col in m..n {
        for row in 0..n {
            lp[(row, col)] = q[(row, col)];
        }
    }
    let angles: Vec<f64> = cos.iter().zip(&sin).map(|(&c, &s)| s.atan2(c)).collect();

    // R'† = Λ₂† · (L ⊕ L')† · [B; D].
    let left = l.direct_sum(&lp);
    let right_cols = u.submatrix(0, m, total, n);
    let t2 = &left.adjoint() * &right_cols;
    let mut rp_dag = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            rp_dag[(i, j)] = if i < m {
                let (sn, cs) = angles[i].sin_cos();
                t2[(i, j)] * sn + t2[(m + i, j)] * cs
            } else {
                t2[(m + i, j)]
            };
        }
    }
    let rp_dag = nearest_unitary(&rp_dag)?.into_matrix();
    let right = r.adjoint().direct_sum(&rp_dag);
    Ok(CsdBlocks {
        left: UnitaryMatrix::from_trusted(left),
        cs_angles: angles,
        right: UnitaryMatrix::from_trusted(right),
        m,
        n,
    })
}

/// The balanced beam splitter `B₂ = (1/√2)[[1, i], [i, 1]]`.
pub fn balanced_beam_splitter() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::new(2, 2, vec![C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(s, 0.0)])
        .expect("static 2x2")
}

/// One optical element of a decomposition plan. Modes are 1-based spatial indices.
#[derive(Clone, Debug, PartialEq)]
pub enum OpticalElement {
    /// `B₂ ⊗ 1_{n_p}` (or its adjoint) on spatial modes `(mode, mode+1)`.
    BeamSplitter { mode: usize, adjoint: bool },
    /// Arbitrary `n_p×n_p` unitary on the internal modes of one spatial mode.
    InternalUnitary { mode: usize, matrix: UnitaryMatrix },
    /// Diagonal phase bank `diag(e^{iφ_1}, …, e^{iφ_{n_p}})` on one spatial mode.
    InternalPhases { mode: usize, phases: Vec<f64> },
}

impl OpticalElement {
    /// Short kind tag used in JSON (`BS`, `IU`, `IP`).
    pub fn kind(&self) -> &'static str {
        match self {
            OpticalElement::BeamSplitter { .. } => "BS",
            OpticalElement::InternalUnitary { .. } => "IU",
            OpticalElement::InternalPhases { .. } => "IP",
        }
    }

    /// Spatial mode the element acts on (upper mode for beam splitters).
    pub fn mode(&self) -> usize {
        match self {
            OpticalElement::BeamSplitter { mode, .. }
            | OpticalElement::InternalUnitary { mode, .. }
            | OpticalElement::InternalPhases { mode, .. } => *mode,
        }
    }

    /// The element embedded in the full `n_s·n_p` space.
    pub fn embedded(&self, n_s: usize, n_p: usize) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::identity(n_s * n_p);
        self.apply_right(&mut m, n_s, n_p)?;
        Ok(m)
    }

    fn validate(&self, n_s: usize, n_p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::PlanCorrupt(msg));
        match self {
            OpticalElement::BeamSplitter { mode, .. } => {
                if *mode == 0 || mode + 1 > n_s {
                    return bad(format!("beam splitter on modes ({mode}, {}) with n_s = {n_s}", mode + 1));
                }
            }
            OpticalElement::InternalUnitary { mode, matrix } => {
                if *mode == 0 || *mode > n_s {
                    return bad(format!("internal unitary on mode {mode} with n_s = {n_s}"));
                }
                if matrix.dim() != n_p {
                    return bad(format!("internal unitary of order {} with n_p = {n_p}", matrix.dim()));
                }
            }
            OpticalElement::InternalPhases { mode, phases } => {
                if *mode == 0 || *mode > n_s {
                    return bad(format!("phase bank on mode {mode} with n_s = {n_s}"));
                }
                if phases.len() != n_p {
                    return bad(format!("phase bank with {} phases, n_p = {n_p}", phases.len()));
                }
                if phases.iter().any(|p| !p.is_finite()) {
                    return bad("non-finite phase".into());
                }
            }
        }
        Ok(())
    }

    /// Replaces `acc` by `acc · E` (acts on columns only).
    fn apply_right(&self, acc: &mut ComplexMatrix, n_s: usize, n_p: usize) -> Result<()> {
        self.validate(n_s, n_p)?;
        let rows = acc.rows();
        match self {
            OpticalElement::BeamSplitter { mode, adjoint } => {
                let s = FRAC_1_SQRT_2;
                let off = C64::new(0.0, if *adjoint { -s } else { s });
                for l in 0..n_p {
                    let a = (mode - 1) * n_p + l;
                    let b = mode * n_p + l;
                    for r in 0..rows {
                        let (x, y) = (acc[(r, a)], acc[(r, b)]);
                        acc[(r, a)] = x * s + y * off;
                        acc[(r, b)] = x * off + y * s;
                    }
                }
            }
            OpticalElement::InternalUnitary { mode, matrix } => {
                let base = (mode - 1) * n_p;
                let mut tmp = vec![C64::new(0.0, 0.0); n_p];
                for r in 0..rows {
                    for (j, t) in tmp.iter_mut().enumerate() {
                        *t = (0..n_p).map(|k| acc[(r, base + k)] * matrix[(k, j)]).sum();
                    }
                    for (j, t) in tmp.iter().enumerate() {
                        acc[(r, base + j)] = *t;
                    }
                }
            }
            OpticalElement::InternalPhases { mode, phases } => {
                let base = (mode - 1) * n_p;
                for (l, &p) in phases.iter().enumerate() {
                    let ph = C64::from_polar(1.0, p);
                    for r in 0..rows {
                        acc[(r, base + l)] *= ph;
                    }
                }
            }
        }
        Ok(())
    }
}

/// A realization of a unitary on `n_s` spatial × `n_p` internal modes.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionPlan {
    /// Number of spatial modes.
    pub n_s: usize,
    /// Number of internal modes per spatial mode.
    pub n_p: usize,
    /// Elements in product order (`U = E₀·E₁·…`).
    pub elements: Vec<OpticalElement>,
}

/// Counts of each element kind in a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementCensus {
    /// Balanced beam splitters (including adjoints).
    pub beam_splitters: usize,
    /// Arbitrary internal unitaries.
    pub internal_unitaries: usize,
    /// Internal phase banks.
    pub phase_banks: usize,
}

impl DecompositionPlan {
    /// Tallies element kinds.
    pub fn census(&self) -> ElementCensus {
        let mut c = ElementCensus { beam_splitters: 0, internal_unitaries: 0, phase_banks: 0 };
        for e in &self.elements {
            match e {
                OpticalElement::BeamSplitter { .. } => c.beam_splitters += 1,
                OpticalElement::InternalUnitary { .. } => c.internal_unitaries += 1,
                OpticalElement::InternalPhases { .. } => c.phase_banks += 1,
            }
        }
        c
    }

    /// Number of CS blocks (each contributes two beam splitters).
    pub fn cs_blocks(&self) -> usize {
        self.census().beam_splitters / 2
    }
}

/// Factors `S_{2n_p}(θ)` on spatial modes `(mode, mode+1)` as
/// `[BS, IP(mode, +θ), IP(mode+1, −θ), BS†]` in product order.
pub fn factor_cs_matrix(angles: &[f64], mode: usize) -> Vec<OpticalElement> {
    vec![
        OpticalElement::BeamSplitter { mode, adjoint: false },
        OpticalElement::InternalPhases { mode, phases: angles.to_vec() },
        OpticalElement::InternalPhases { mode: mode + 1, phases: angles.iter().map(|t| -t).collect() },
        OpticalElement::BeamSplitter { mode, adjoint: true },
    ]
}

/// Decomposes `u` (dimension `n_s·n_p`) into beam splitters and internal elements.
///
/// The plan contains `n_s(n_s−1)/2` CS blocks (hence `n_s(n_s−1)` beam
/// splitters and as many phase banks) and `n_s²` internal unitaries.
pub fn decompose(u: &UnitaryMatrix, n_s: usize, n_p: usize) -> Result<DecompositionPlan> {
    if n_s == 0 || n_p == 0 {
        return Err(Error::InvalidDimension("n_s and n_p must be positive".into()));
    }
    if u.dim() != n_s * n_p {
        return Err(Error::ShapeMismatch(format!(
            "matrix dimension {} differs from n_s·n_p = {}",
            u.dim(),
            n_s * n_p
        )));
    }
    let mut elements = Vec::new();
    let mut current = u.matrix().clone();
    for offset in 1..n_s {
        current = peel_iteration(&current, n_s - offset + 1, n_p, offset, &mut elements)?;
    }
    elements.push(OpticalElement::InternalUnitary {
        mode: n_s,
        matrix: UnitaryMatrix::from_trusted(current),
    });
    Ok(DecompositionPlan { n_s, n_p, elements })
}

/// One iteration on `r` spatial modes starting at spatial mode `offset`.
///
/// Appends the internal and CS elements for this iteration and returns the
/// residual unitary on the last `r−1` modes (the merged right factors).
fn peel_iteration(
    u: &ComplexMatrix,
    r: usize,
    n_p: usize,
    offset: usize,
    out: &mut Vec<OpticalElement>,
) -> Result<ComplexMatrix> {
    let mut lefts: Vec<ComplexMatrix> = Vec::with_capacity(r);
    let mut chain: Vec<(Vec<f64>, ComplexMatrix)> = Vec::with_capacity(r - 1);
    let mut residual: Option<ComplexMatrix> = None;
    let mut cur = u.clone();
    for k in 0..r - 1 {
        let blocks = csd(&UnitaryMatrix::from_trusted(cur), n_p)?;
        lefts.push(blocks.l_upper());
        chain.push((blocks.cs_angles.clone(), blocks.r_upper()));
        // Right factors on the lower modes commute with the CS matrices
        // above them and are merged into the residual.
        let rp = blocks.r_lower();
        residual = Some(match residual {
            None => rp,
            Some(acc) => &ComplexMatrix::identity(k * n_p).direct_sum(&rp) * &acc,
        });
        cur = blocks.l_lower();
    }
    lefts.push(cur);
    for (k, l) in lefts.into_iter().enumerate() {
        out.push(OpticalElement::InternalUnitary { mode: offset + k, matrix: UnitaryMatrix::from_trusted(l) });
    }
    for (k, (angles, r_dag)) in chain.into_iter().enumerate().rev() {
        out.extend(factor_cs_matrix(&angles, offset + k));
        out.push(OpticalElement::InternalUnitary { mode: offset + k, matrix: UnitaryMatrix::from_trusted(r_dag) });
    }
    residual.ok_or_else(|| Error::InternalInconsistency("iteration on a single spatial mode".into()))
}

/// Multiplies the embedded element matrices in plan order.
pub fn reconstruct(plan: &DecompositionPlan) -> Result<UnitaryMatrix> {
    if plan.n_s == 0 || plan.n_p == 0 {
        return Err(Error::PlanCorrupt("n_s and n_p must be positive".into()));
    }
    let mut acc = ComplexMatrix::identity(plan.n_s * plan.n_p);
    for e in &plan.elements {
        e.apply_right(&mut acc, plan.n_s, plan.n_p)?;
    }
    UnitaryMatrix::new(acc, 1e-9)
        .map_err(|e| Error::PlanCorrupt(format!("product is not unitary: {e}")))
}

/// Element counts and the comparison with a single-DOF triangular mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Number of spatial modes.
    pub n_s: usize,
    /// Number of internal modes.
    pub n_p: usize,
    /// `n_s(n_s−1)` balanced beam splitters.
    pub beam_splitters: usize,
    /// `n_s(n_s−1)/2` CS blocks.
    pub cs_blocks: usize,
    /// `n_s²` arbitrary internal unitaries.
    pub internal_unitaries: usize,
    /// `n_s(n_s−1)` internal phase banks.
    pub phase_banks: usize,
    /// Internal optical elements, `n_s·n_p(n_s·n_p + n_s − 1)`.
    pub internal_elements: usize,
    /// Beam splitters of a triangular mesh on `N = n_s·n_p` spatial modes, `N(N−1)/2`.
    pub reck_beam_splitters: usize,
    /// `reck_beam_splitters / beam_splitters`; `None` when no beam splitters are needed.
    pub reduction_factor: Option<f64>,
}

/// Closed-form element counts.
pub fn cost_report(n_s: usize, n_p: usize) -> Result<CostReport> {
    if n_s == 0 || n_p == 0 {
        return Err(Error::InvalidDimension("n_s and n_p must be positive".into()));
    }
    let bs = n_s * (n_s - 1);
    let big_n = n_s * n_p;
    let reck = big_n * (big_n - 1) / 2;
    Ok(CostReport {
        n_s,
        n_p,
        beam_splitters: bs,
        cs_blocks: bs / 2,
        internal_unitaries: n_s * n_s,
        phase_banks: bs,
        internal_elements: big_n * (big_n + n_s - 1),
        reck_beam_splitters: reck,
        reduction_factor: if bs == 0 { None } else { Some(reck as f64 / bs as f64) },
    })
}

/// JSON form of an element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementJson {
    /// `BS`, `IU` or `IP`.
    pub kind: String,
    /// 1-based spatial mode.
    pub mode: usize,
    /// Beam splitter only: whether this is `B₂†`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint: Option<bool>,
    /// Internal unitary only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
    /// Phase bank only (radians).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
}

/// JSON form of a plan. Elements are listed rightmost-first, i.e. in the
/// order light traverses them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanJson {
    /// Schema tag, `"v1"`.
    #[serde(default)]
    pub schema: Option<String>,
    /// Number of spatial modes.
    pub n_s: usize,
    /// Number of internal modes.
    pub n_p: usize,
    /// `"rightmost-first"` (traversal order) or `"leftmost-first"` (product order).
    pub order: String,
    /// The elements.
    pub elements: Vec<ElementJson>,
}

impl DecompositionPlan {
    /// Serializes in traversal order (`"order": "rightmost-first"`).
    pub fn to_json(&self) -> PlanJson {
        let elements = self
            .elements
            .iter()
            .rev()
            .map(|e| match e {
                OpticalElement::BeamSplitter { mode, adjoint } => ElementJson {
                    kind: "BS".into(),
                    mode: *mode,
                    adjoint: Some(*adjoint),
                    matrix: None,
                    phases: None,
                },
                OpticalElement::InternalUnitary { mode, matrix } => ElementJson {
                    kind: "IU".into(),
                    mode: *mode,
                    adjoint: None,
                    matrix: Some(matrix.to_json()),
                    phases: None,
                },
                OpticalElement::InternalPhases { mode, phases } => ElementJson {
                    kind: "IP".into(),
                    mode: *mode,
                    adjoint: None,
                    matrix: None,
                    phases: Some(phases.clone()),
                },
            })
            .collect();
        PlanJson { schema: Some("v1".into()), n_s: self.n_s, n_p: self.n_p, order: "rightmost-first".into(), elements }
    }

    /// Parses a plan, validating every element against `(n_s, n_p)`.
    pub fn from_json(j: &PlanJson) -> Result<Self> {
        let mut elements = Vec::with_capacity(j.elements.len());
        for (idx, e) in j.elements.iter().enumerate() {
            let corrupt = |what: &str| Error::PlanCorrupt(format!("element {idx}: {what}"));
            let el = match e.kind.as_str() {
                "BS" => OpticalElement::BeamSplitter { mode: e.mode, adjoint: e.adjoint.unwrap_or(false) },
                "IU" => {
                    let m = e.matrix.as_ref().ok_or_else(|| corrupt("IU without matrix"))?;
                    let m = ComplexMatrix::from_json(m).map_err(|err| corrupt(&err.to_string()))?;
                    let u = UnitaryMatrix::new(m, 1e-9).map_err(|err| corrupt(&err.to_string()))?;
                    OpticalElement::InternalUnitary { mode: e.mode, matrix: u }
                }
                "IP" => OpticalElement::InternalPhases {
                    mode: e.mode,
                    phases: e.phases.clone().ok_or_else(|| corrupt("IP without phases"))?,
                },
                other => return Err(corrupt(&format!("unknown kind {other}"))),
            };
            el.validate(j.n_s, j.n_p)?;
            elements.push(el);
        }
        match j.order.as_str() {
            "rightmost-first" => elements.reverse(),
            "leftmost-first" => {}
            other => return Err(Error::PlanCorrupt(format!("unknown order {other}"))),
        }
        Ok(Self { n_s: j.n_s, n_p: j.n_p, elements })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{haar_random_unitary, trace_distance};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

    fn product(elements: &[OpticalElement], n_s: usize, n_p: usize) -> ComplexMatrix {
        // Oracle: explicit embedded matrices multiplied densely.
        elements
            .iter()
            .fold(ComplexMatrix::identity(n_s * n_p), |acc, e| &acc * &e.embedded(n_s, n_p).unwrap())
    }

    #[test]
    fn csd_identity() {
        let b = csd(&UnitaryMatrix::identity(4), 2).unwrap();
        assert!(b.cs_angles.iter().all(|&t| t.abs() < 1e-15));
        assert!(b.reconstruct().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn csd_of_cs_matrix_recovers_angles() {
        let s = UnitaryMatrix::try_from_matrix(cs_middle(&[FRAC_PI_6, FRAC_PI_3], 4)).unwrap();
        let b = csd(&s, 2).unwrap();
        let mut got = b.cs_angles.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((got[0] - FRAC_PI_6).abs() < 1e-12 && (got[1] - FRAC_PI_3).abs() < 1e-12);
        assert!(b.reconstruct().max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn csd_random_6x6_m2() {
        let u = haar_random_unitary(6, 17).unwrap();
        let b = csd(&u, 2).unwrap();
        assert!(b.reconstruct().max_abs_diff(&u) < 1e-10);
        assert!(b.cs_angles.iter().all(|&t| (0.0..=PI / 2.0).contains(&t)));
        assert!(b.left.unitarity_defect() < 1e-10 && b.right.unitarity_defect() < 1e-10);
        // Block-diagonal structure.
        assert!(b.left.submatrix(0, 2, 2, 4).max_abs() == 0.0 && b.right.submatrix(2, 0, 4, 2).max_abs() == 0.0);
    }

    #[test]
    fn csd_rejects_bad_split() {
        let u = haar_random_unitary(5, 1).unwrap();
        assert!(matches!(csd(&u, 3), Err(Error::InvalidSplit(_))));
        assert!(matches!(csd(&u, 0), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn csd_near_degenerate_angles() {
        // Nearly zero and nearly π/2 angles mixed with a generic unitary.
        let s = cs_middle(&[1e-9, PI / 2.0 - 1e-9, 0.7], 7);
        let g = haar_random_unitary(7, 3).unwrap();
        let h = haar_random_unitary(7, 4).unwrap();
        let l = haar_random_unitary(3, 5).unwrap().direct_sum(&haar_random_unitary(4, 6).unwrap());
        let r = haar_random_unitary(3, 7).unwrap().direct_sum(&haar_random_unitary(4, 8).unwrap());
        for u in [&(&l * &s) * &r, &(g.matrix() * &s) * h.matrix()] {
            let u = UnitaryMatrix::try_from_matrix(u).unwrap();
            let b = csd(&u, 3).unwrap();
            assert!(b.reconstruct().max_abs_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn factor_cs_examples() {
        let z = factor_cs_matrix(&[0.0, 0.0], 1);
        assert!(product(&z, 2, 2).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let e = factor_cs_matrix(&[PI / 3.0, PI / 7.0], 1);
        assert!(product(&e, 2, 2).max_abs_diff(&cs_middle(&[PI / 3.0, PI / 7.0], 4)) < 1e-12);
        let one = factor_cs_matrix(&[FRAC_PI_4], 1);
        let (s, c) = FRAC_PI_4.sin_cos();
        let want = ComplexMatrix::new(2, 2, vec![C64::new(c, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(c, 0.0)])
            .unwrap();
        assert!(product(&one, 2, 1).max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn single_beam_splitter_plan() {
        let plan = DecompositionPlan {
            n_s: 2,
            n_p: 1,
            elements: vec![OpticalElement::BeamSplitter { mode: 1, adjoint: false }],
        };
        assert_eq!(reconstruct(&plan).unwrap().matrix(), &balanced_beam_splitter());
        let empty = DecompositionPlan { n_s: 3, n_p: 2, elements: vec![] };
        assert_eq!(reconstruct(&empty).unwrap().matrix(), &ComplexMatrix::identity(6));
    }

    #[test]
    fn reconstruct_rejects_corrupt() {
        let plan = DecompositionPlan {
            n_s: 2,
            n_p: 1,
            elements: vec![OpticalElement::BeamSplitter { mode: 2, adjoint: false }],
        };
        assert!(matches!(reconstruct(&plan), Err(Error::PlanCorrupt(_))));
        let plan = DecompositionPlan {
            n_s: 2,
            n_p: 2,
            elements: vec![OpticalElement::InternalPhases { mode: 1, phases: vec![0.1] }],
        };
        assert!(matches!(reconstruct(&plan), Err(Error::PlanCorrupt(_))));
    }

    #[test]
    fn decompose_single_mode_and_shape() {
        let u = haar_random_unitary(3, 2).unwrap();
        let p = decompose(&u, 1, 3).unwrap();
        assert_eq!(p.elements.len(), 1);
        assert_eq!(p.census().beam_splitters, 0);
        assert!(matches!(decompose(&u, 2, 2), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn decompose_census_ns4() {
        for n_p in 1..=3 {
            let u = haar_random_unitary(4 * n_p, 100 + n_p as u64).unwrap();
            let p = decompose(&u, 4, n_p).unwrap();
            let c = p.census();
            assert_eq!((c.beam_splitters, c.internal_unitaries, c.phase_banks), (12, 16, 12));
            assert_eq!(p.cs_blocks(), 6);
            assert!(trace_distance(reconstruct(&p).unwrap().matrix(), &u).unwrap() < 1e-9);
        }
    }

    #[test]
    fn decompose_ns2_np2_structure() {
        let u = haar_random_unitary(4, 55).unwrap();
        let p = decompose(&u, 2, 2).unwrap();
        let c = p.census();
        assert_eq!((c.internal_unitaries, c.beam_splitters, c.phase_banks), (4, 2, 2));
        assert!(trace_distance(reconstruct(&p).unwrap().matrix(), &u).unwrap() < 1e-9);
        // Dense oracle agrees with the column-action product.
        assert!(product(&p.elements, 2, 2).max_abs_diff(reconstruct(&p).unwrap().matrix()) < 1e-13);
    }

    #[test]
    fn plan_json_round_trip() {
        let u = haar_random_unitary(6, 8).unwrap();
        let p = decompose(&u, 3, 2).unwrap();
        let j = serde_json::to_string(&p.to_json()).unwrap();
        let back = DecompositionPlan::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back.elements.len(), p.elements.len());
        assert!(reconstruct(&back).unwrap().max_abs_diff(&u) < 1e-9);
        // Traversal order: the first listed element is the last factor.
        assert_eq!(p.to_json().elements[0].kind, p.elements.last().unwrap().kind());
    }

    #[test]
    fn cost_examples() {
        let c = cost_report(6, 1).unwrap();
        assert_eq!((c.beam_splitters, c.reck_beam_splitters), (30, 15));
        let c = cost_report(3, 2).unwrap();
        assert_eq!((c.beam_splitters, c.reck_beam_splitters), (6, 15));
        assert!((c.reduction_factor.unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(cost_report(4, 2).unwrap().beam_splitters, 12);
        assert_eq!(cost_report(1, 3).unwrap().reduction_factor, None);
        // internal elements: n_s² n_p² + n_s(n_s−1) n_p.
        assert_eq!(cost_report(3, 2).unwrap().internal_elements, 9 * 4 + 6 * 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn prop_factor_cs_exact(angles in proptest::collection::vec(-PI..PI, 1..4)) {
            let n_p = angles.len();
            let e = factor_cs_matrix(&angles, 1);
            prop_assert!(product(&e, 2, n_p).max_abs_diff(&cs_middle(&angles, 2 * n_p)) < 1e-12);
        }

        #[test]
        fn prop_decompose_round_trip(n_s in 1usize..6, n_p in 1usize..4, seed in any::<u64>()) {
            let u = haar_random_unitary(n_s * n_p, seed).unwrap();
            let p = decompose(&u, n_s, n_p).unwrap();
            let rec = reconstruct(&p).unwrap();
            prop_assert!(trace_distance(rec.matrix(), &u).unwrap() < 1e-9);
            let c = p.census();
            let cr = cost_report(n_s, n_p).unwrap();
            prop_assert_eq!(c.beam_splitters, cr.beam_splitters);
            prop_assert_eq!(c.internal_unitaries, cr.internal_unitaries);
            prop_assert_eq!(c.phase_banks, cr.phase_banks);
        }

        #[test]
        fn prop_csd_angles_in_range(m in 1usize..4, extra in 0usize..3, seed in any::<u64>()) {
            let u = haar_random_unitary(2 * m + extra, seed).unwrap();
            let b = csd(&u, m).unwrap();
            prop_assert!(b.cs_angles.iter().all(|&t| (0.0..=PI / 2.0).contains(&t)));
            prop_assert!(b.reconstruct().max_abs_diff(&u) < 1e-10);
        }
    }
}
