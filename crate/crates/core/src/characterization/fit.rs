//! Weighted three-parameter fits of coincidence-versus-delay curves.
//!
//! The fitted family is
//! `C'(τ) = s·(b + c·h(x)·K(τ − t))` with ordinate scale `s`, abscissa
//! shift `t` and one shape parameter `x`; `K = |G|²/(∫f²∫f'²)` is the
//! normalized spectral kernel. For the calibration fit `h(x) = x = γ`, for
//! argument fits `h(x) = cos x` with `x` an argument magnitude or a phase
//! combination. Minimization uses a damped Gauss–Newton (Levenberg–Marquardt)
//! iteration with Marquardt diagonal scaling; only strictly improving steps
//! are accepted, so the objective never increases.

use crate::error::{Error, Result};
use crate::photonic::{CoincidenceCurve, SpectralOverlap};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Shape-parameter seeds for argument fits (one per qualitative curve type).
pub const PHASE_SEEDS: [f64; 4] = [PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0];

const MAX_ITER: usize = 400;
const DEGENERATE_MODULATION: f64 = 1e-6;

/// How the shape parameter enters the interference term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    /// `h(x) = x` (mode-matching parameter).
    Linear,
    /// `h(x) = cos x` (argument or phase combination); reported folded to `[0, π]`.
    Cosine,
}

/// A parametrized coincidence curve.
#[derive(Clone, Copy, Debug)]
pub struct CurveModel<'a> {
    overlap: &'a SpectralOverlap,
    base: f64,
    coupling: f64,
    kind: ShapeKind,
}

impl<'a> CurveModel<'a> {
    /// `C'(τ) = s·(base + coupling·h(x)·K(τ − t))`; `base` must be positive.
    pub fn new(overlap: &'a SpectralOverlap, base: f64, coupling: f64, kind: ShapeKind) -> Result<Self> {
        if !(base > 0.0 && base.is_finite() && coupling.is_finite()) {
            return Err(Error::InvalidInput(format!("curve model needs base > 0, got base {base}, coupling {coupling}")));
        }
        if !(overlap.direct() > 0.0) {
            return Err(Error::InvalidInput("spectral overlap has zero norm".into()));
        }
        Ok(Self { overlap, base, coupling, kind })
    }

    /// Model for the tuple `(i, i', j, j')` with amplitudes
    /// `[α_ij, α_ij', α_i'j, α_i'j']`, the phase combination as shape.
    pub fn phase(overlap: &'a SpectralOverlap, amps: [f64; 4], gamma: f64) -> Result<Self> {
        let [a, b, c, d] = amps;
        Self::new(overlap, a * a * d * d + b * b * c * c, 2.0 * gamma * a * b * c * d, ShapeKind::Cosine)
    }

    /// Calibration model of a beam splitter with amplitude ratio `α₂₂`
    /// (argument `π`), `γ` as shape.
    pub fn beam_splitter(overlap: &'a SpectralOverlap, alpha22: f64) -> Result<Self> {
        Self::new(overlap, 1.0 + alpha22 * alpha22, -2.0 * alpha22, ShapeKind::Linear)
    }

    /// Shape dependence of the model.
    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    /// Model value at `tau` for parameters `[shape, scale, shift]`.
    pub fn value(&self, tau: f64, p: &[f64; 3]) -> f64 {
        self.value_and_gradient(tau, p).0
    }

    fn h(&self, x: f64) -> (f64, f64) {
        match self.kind {
            ShapeKind::Linear => (x, 1.0),
            ShapeKind::Cosine => (x.cos(), -x.sin()),
        }
    }

    fn value_and_gradient(&self, tau: f64, p: &[f64; 3]) -> (f64, [f64; 3]) {
        let [x, s, t] = *p;
        let (k, dk) = self.overlap.kernel_with_derivative(tau - t);
        let norm = 1.0 / self.overlap.direct();
        let (k, dk) = (k * norm, dk * norm);
        let (h, dh) = self.h(x);
        let inner = self.base + self.coupling * h * k;
        (s * inner, [s * self.coupling * dh * k, inner, -s * self.coupling * h * dk])
    }

    /// Interference-to-background ratio `|c·h(x)|·max K / b` over `taus` for a shape.
    fn modulation(&self, taus: &[f64], p: &[f64; 3]) -> f64 {
        let kmax = taus
            .iter()
            .map(|&tau| self.overlap.kernel(tau - p[2]) / self.overlap.direct())
            .fold(0.0f64, f64::max);
        (self.coupling * self.h(p[0]).0).abs() * kmax / self.base
    }
}

/// Starting point of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitGuesses {
    /// Shape seeds (one damped least-squares run each).
    pub shapes: Vec<f64>,
    /// Ordinate scale.
    pub scale: f64,
    /// Abscissa shift.
    pub shift: f64,
}

impl FitGuesses {
    /// Heuristic starting point: the scale matches the mean of the two end
    /// points to the model's large-delay value; the shift puts the extremum
    /// farthest from the mean at zero delay; shape seeds are
    /// [`PHASE_SEEDS`] for argument fits, and for calibration the ratio of the
    /// observed to the fully-matched visibility together with `0.5` and `1`.
    pub fn heuristic(model: &CurveModel<'_>, data: &CoincidenceCurve) -> Self {
        let y = &data.values;
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let mut far = (y[0] + y[n - 1]) / 2.0;
        if !(far > 0.0) {
            far = if mean > 0.0 { mean } else { 1.0 };
        }
        let scale = far / model.base;
        let kstar = (0..n)
            .max_by(|&a, &b| (y[a] - mean).abs().total_cmp(&(y[b] - mean).abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let shift = data.tau[kstar];
        let shapes = match model.kind {
            ShapeKind::Cosine => PHASE_SEEDS.to_vec(),
            ShapeKind::Linear => {
                let k0 = model.overlap.kernel(0.0) / model.overlap.direct();
                let v_model = -model.coupling * k0 / model.base;
                let v_exp = (far - y[kstar]) / far;
                let g0 = if v_model.abs() > 0.0 { (v_exp / v_model).clamp(0.0, 1.0) } else { 0.5 };
                let mut s = vec![g0];
                for g in [0.5, 1.0] {
                    if (g - g0).abs() > 1e-6 {
                        s.push(g);
                    }
                }
                s
            }
        };
        Self { shapes, scale, shift }
    }
}

/// Outcome of one start of the multi-start fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    /// Shape seed.
    pub seed: f64,
    /// Whether a convergence test was met (rather than the iteration cap).
    pub converged: bool,
    /// Accepted iterations.
    pub iterations: usize,
    /// Final objective.
    pub objective: f64,
    /// Final `[shape, scale, shift]`.
    pub params: [f64; 3],
    /// Objective after each accepted step (starting value first).
    pub history: Vec<f64>,
    /// Failure note, if any.
    pub note: Option<String>,
}

/// Result of [`fit_curve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Shape parameter (`γ`, or an angle folded into `[0, π]`).
    pub shape_param: f64,
    /// Ordinate scale (positive).
    pub ordinate_scale: f64,
    /// Abscissa shift.
    pub abscissa_shift: f64,
    /// `C^exp(τ) − C'(τ)` at each delay.
    pub residuals: Vec<f64>,
    /// `Σ w(τ)·residual²`.
    pub objective: f64,
    /// Weights `w(τ)`.
    pub weights: Vec<f64>,
    /// Fitted curve `C'(τ)`.
    pub fitted: Vec<f64>,
    /// Standard error of the shape parameter from the curvature at the optimum.
    pub shape_std_error: f64,
    /// The fitted curve carries (almost) no interference term, so the delay
    /// shift is unidentifiable and the shape is fixed only by the absence of a dip.
    pub degenerate: bool,
    /// Every start, in seed order.
    pub starts: Vec<StartSummary>,
}

/// `w(τ) = 1/C^exp(τ)`, or `1` where `C^exp(τ) = 0`.
pub fn fit_weights(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&c| if c != 0.0 { 1.0 / c.abs() } else { 1.0 }).collect()
}

/// Fits `model` to `data` by weighted damped least squares, one run per
/// shape seed; the converged run with the lowest objective wins.
///
/// Seeds related by the model's shape symmetry (`x ↦ −x`, `x ↦ x + 2π` for
/// cosine shapes) produce mirror-image trajectories with identical
/// objectives, so each symmetry class is iterated once.
pub fn fit_curve(model: &CurveModel<'_>, data: &CoincidenceCurve, guesses: Option<&FitGuesses>) -> Result<FitResult> {
    let n = data.tau.len();
    if n < 5 || data.values.len() != n {
        return Err(Error::InvalidInput(format!("curve fit needs at least 5 aligned points, got {n}")));
    }
    let owned;
    let g = match guesses {
        Some(g) => g,
        None => {
            owned = FitGuesses::heuristic(model, data);
            &owned
        }
    };
    if g.shapes.is_empty() || g.shapes.iter().any(|x| !x.is_finite()) || !g.scale.is_finite() || !g.shift.is_finite()
    {
        return Err(Error::InvalidInput("fit guesses must be finite and include a shape seed".into()));
    }
    let weights = fit_weights(&data.values);
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let tau_span = (data.tau.iter().cloned().fold(f64::MIN, f64::max) - data.tau.iter().cloned().fold(f64::MAX, f64::min))
        .max(1e-12);
    let scale0 = if g.scale > 0.0 { g.scale } else { 1.0 };
    let mut starts: Vec<StartSummary> = Vec::with_capacity(g.shapes.len());
    for &seed in &g.shapes {
        let class = canonical_seed(model.kind, seed);
        if let Some(prev) = starts.iter().find(|s| canonical_seed(model.kind, s.seed) == class) {
            let mut mirrored = prev.clone();
            mirrored.seed = seed;
            mirrored.params[0] = mirror_shape(model.kind, prev.seed, seed, prev.params[0]);
            starts.push(mirrored);
            continue;
        }
        starts.push(levenberg_marquardt(model, data, &sw, [seed, scale0, g.shift], tau_span));
    }
    let best = starts
        .iter()
        .filter(|s| s.converged && s.params[1] > 0.0)
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .cloned();
    let Some(best) = best else {
        let notes: Vec<String> = starts
            .iter()
            .map(|s| format!("seed {:.4}: {}", s.seed, s.note.clone().unwrap_or_else(|| "not converged".into())))
            .collect();
        return Err(Error::FitFailure(notes.join("; ")));
    };
    let p = best.params;
    let fitted: Vec<f64> = data.tau.iter().map(|&tau| model.value(tau, &p)).collect();
    let residuals: Vec<f64> = data.values.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let objective = residuals.iter().zip(&weights).map(|(r, w)| w * r * r).sum();
    let shape_std_error = shape_standard_error(model, data, &sw, &p, objective);
    let shape_param = match model.kind {
        ShapeKind::Linear => p[0],
        ShapeKind::Cosine => p[0].cos().clamp(-1.0, 1.0).acos(),
    };
    let degenerate = model.modulation(&data.tau, &p) < DEGENERATE_MODULATION;
    Ok(FitResult {
        shape_param,
        ordinate_scale: p[1],
        abscissa_shift: p[2],
        residuals,
        objective,
        weights,
        fitted,
        shape_std_error,
        degenerate,
        starts,
    })
}

fn canonical_seed(kind: ShapeKind, x: f64) -> u64 {
    match kind {
        ShapeKind::Linear => x.to_bits(),
        ShapeKind::Cosine => {
            let c = x.cos();
            // Distinct symmetry classes differ in cos x by far more than rounding.
            ((c * 1e9).round() as i64) as u64
        }
    }
}

fn mirror_shape(kind: ShapeKind, from_seed: f64, to_seed: f64, x: f64) -> f64 {
    match kind {
        ShapeKind::Linear => x,
        ShapeKind::Cosine => {
            if (from_seed.sin() > 0.0) == (to_seed.sin() > 0.0) {
                x
            } else {
                -x
            }
        }
    }
}

struct Eval {
    obj: f64,
    jtj: [[f64; 3]; 3],
    jtr: [f64; 3],
}

fn evaluate(model: &CurveModel<'_>, data: &CoincidenceCurve, sw: &[f64], p: &[f64; 3], with_jac: bool) -> Eval {
    let mut e = Eval { obj: 0.0, jtj: [[0.0; 3]; 3], jtr: [0.0; 3] };
    for k in 0..data.tau.len() {
        let (f, grad) = model.value_and_gradient(data.tau[k], p);
        let r = sw[k] * (data.values[k] - f);
        e.obj += r * r;
        if with_jac {
            let j = grad.map(|g| sw[k] * g);
            for a in 0..3 {
                e.jtr[a] += j[a] * r;
                for b in 0..3 {
                    e.jtj[a][b] += j[a] * j[b];
                }
            }
        }
    }
    e
}

fn levenberg_marquardt(
    model: &CurveModel<'_>,
    data: &CoincidenceCurve,
    sw: &[f64],
    p0: [f64; 3],
    tau_span: f64,
) -> StartSummary {
    let mut p = p0;
    let mut cur = evaluate(model, data, sw, &p, true);
    let data_norm: f64 = data.values.iter().zip(sw).map(|(y, s)| (y * s).powi(2)).sum();
    let mut history = vec![cur.obj];
    let mut lambda = 1e-3;
    let mut stalls = 0;
    let summary = |p: [f64; 3], obj: f64, it: usize, conv: bool, history: Vec<f64>, note: Option<String>| StartSummary {
        seed: p0[0],
        converged: conv,
        iterations: it,
        objective: obj,
        params: p,
        history,
        note,
    };
    if !cur.obj.is_finite() {
        return summary(p, cur.obj, 0, false, history, Some("non-finite objective at start".into()));
    }
    for it in 0..MAX_ITER {
        if cur.obj <= 1e-30 * data_norm {
            return summary(p, cur.obj, it, true, history, None);
        }
        let dmax = (0..3).map(|a| cur.jtj[a][a]).fold(0.0f64, f64::max);
        if dmax == 0.0 {
            return summary(p, cur.obj, it, true, history, Some("zero Jacobian".into()));
        }
        let accepted = loop {
            let mut a = cur.jtj;
            for (k, row) in a.iter_mut().enumerate() {
                // Marquardt scaling by each parameter's own curvature keeps the
                // damping invariant under rescaling of that parameter; a
                // parameter with an identically zero column has zero gradient
                // and any positive damping pins its step at zero.
                let d = cur.jtj[k][k];
                row[k] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let step = solve3_equilibrated(a, cur.jtr);
            if let Some(d) = step {
                let trial = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
                if trial[1] > 0.0 && trial.iter().all(|x| x.is_finite()) {
                    let e = evaluate(model, data, sw, &trial, true);
                    if e.obj.is_finite() && e.obj < cur.obj {
                        break Some((trial, d, e));
                    }
                }
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break None;
            }
        };
        let Some((trial, d, e)) = accepted else {
            // No descent direction left at working precision: a stationary point.
            return summary(p, cur.obj, it, true, history, None);
        };
        let rel_drop = (cur.obj - e.obj) / cur.obj.max(f64::MIN_POSITIVE);
        p = trial;
        cur = e;
        history.push(cur.obj);
        lambda = (lambda / 3.0).max(1e-12);
        let small_step = d[0].abs() <= 1e-12 && d[1].abs() <= 1e-12 * p[1].abs() && d[2].abs() <= 1e-12 * tau_span;
        if small_step {
            return summary(p, cur.obj, it + 1, true, history, None);
        }
        stalls = if rel_drop < 1e-12 { stalls + 1 } else { 0 };
        if stalls >= 3 {
            return summary(p, cur.obj, it + 1, true, history, None);
        }
    }
    summary(p, cur.obj, MAX_ITER, false, history, Some(format!("iteration cap {MAX_ITER} reached")))
}

fn shape_standard_error(model: &CurveModel<'_>, data: &CoincidenceCurve, sw: &[f64], p: &[f64; 3], obj: f64) -> f64 {
    let e = evaluate(model, data, sw, p, true);
    let dof = (data.tau.len() as f64 - 3.0).max(1.0);
    match solve3_equilibrated(e.jtj, [1.0, 0.0, 0.0]) {
        Some(col) if col[0] > 0.0 => (col[0] * obj / dof).sqrt(),
        _ => f64::INFINITY,
    }
}

/// Solves a symmetric positive 3×3 system after equilibrating it to unit
/// diagonal, so parameters of wildly different magnitude (a shape angle next
/// to a count scale of 10¹²) do not lose precision in the elimination.
fn solve3_equilibrated(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut s = [0.0; 3];
    for k in 0..3 {
        if !(a[k][k] > 0.0) {
            return solve3(a, b);
        }
        s[k] = 1.0 / a[k][k].sqrt();
    }
    let mut sa = a;
    for (r, row) in sa.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v *= s[r] * s[c];
        }
    }
    let x = solve3(sa, [b[0] * s[0], b[1] * s[1], b[2] * s[2]])?;
    Some([x[0] * s[0], x[1] * s[1], x[2] * s[2]])
}

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) {
        return None;
    }
    for c in 0..3 {
        let piv = (c..3).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[piv][c].abs() <= 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonic::SpectralFunction;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> Vec<f64> {
        (0..41).map(|k| -6.0 + 0.3 * k as f64).collect()
    }

    fn synth(model: &CurveModel<'_>, p: [f64; 3]) -> CoincidenceCurve {
        let t = grid();
        let v = t.iter().map(|&tau| model.value(tau, &p)).collect();
        CoincidenceCurve::new(t, v).unwrap()
    }

    #[test]
    fn exact_calibration_data_recovered() {
        let f = SpectralFunction::gaussian(10.0, 0.5, 201).unwrap();
        let ov = SpectralOverlap::new(&f, &f);
        let model = CurveModel::beam_splitter(&ov, 1.0).unwrap();
        let data = synth(&model, [0.8, 2.0, 0.1]);
        let r = fit_curve(&model, &data, None).unwrap();
        assert!((r.shape_param - 0.8).abs() < 1e-6, "{}", r.shape_param);
        assert!((r.ordinate_scale - 2.0).abs() < 1e-6);
        assert!((r.abscissa_shift - 0.1).abs() < 1e-6);
        assert!(!r.degenerate);
    }

    #[test]
    fn exact_phase_data_recovered_for_every_curve_type() {
        let f = SpectralFunction::double_peak_fixture();
        let ov = SpectralOverlap::new(&f, &f);
        let model = CurveModel::phase(&ov, [0.9, 1.1, 0.7, 1.3], 0.95).unwrap();
        for &x in &[0.0, 0.3, 1.2, PI / 2.0, 2.5, PI] {
            let data = synth(&model, [x, 0.03, -0.2]);
            let r = fit_curve(&model, &data, None).unwrap();
            assert!((r.shape_param - x).abs() < 1e-6, "x {x}: {}", r.shape_param);
        }
    }

    #[test]
    fn flat_data_flagged_degenerate() {
        let f = SpectralFunction::gaussian(10.0, 0.5, 201).unwrap();
        let ov = SpectralOverlap::new(&f, &f);
        let model = CurveModel::beam_splitter(&ov, 1.0).unwrap();
        let data = CoincidenceCurve::new(grid(), vec![500.0; 41]).unwrap();
        match fit_curve(&model, &data, None) {
            Ok(r) => assert!(r.degenerate, "flat data must be flagged, got shape {}", r.shape_param),
            Err(e) => assert_eq!(e.code(), "FitFailure"),
        }
    }

    #[test]
    fn one_percent_noise_keeps_gamma_within_two_hundredths() {
        let f = SpectralFunction::gaussian(10.0, 0.5, 201).unwrap();
        let ov = SpectralOverlap::new(&f, &f);
        let model = CurveModel::beam_splitter(&ov, 1.0).unwrap();
        let clean = synth(&model, [0.8, 1000.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..100 {
            let v = clean.values.iter().map(|y| y * (1.0 + noise.sample(&mut rng))).collect();
            let d = CoincidenceCurve::new(clean.tau.clone(), v).unwrap();
            let r = fit_curve(&model, &d, None).unwrap();
            assert!((r.shape_param - 0.8).abs() < 0.02, "{}", r.shape_param);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let f = SpectralFunction::gaussian(10.0, 0.5, 51).unwrap();
        let ov = SpectralOverlap::new(&f, &f);
        let model = CurveModel::beam_splitter(&ov, 1.0).unwrap();
        let d = CoincidenceCurve::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0; 4]).unwrap();
        assert_eq!(fit_curve(&model, &d, None).unwrap_err().code(), "InvalidInput");
    }

    #[test]
    fn equilibrated_solve_handles_disparate_scales() {
        // diag(1e-26, 1, 1e26)-scaled version of a well-conditioned system.
        let base = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let d = [1e-13, 1.0, 1e13];
        let mut a = base;
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] *= d[r] * d[c];
            }
        }
        let x = [1.0, -2.0, 0.5];
        let y = [x[0] / d[0], x[1] / d[1], x[2] / d[2]];
        let b: Vec<f64> = (0..3).map(|r| (0..3).map(|c| a[r][c] * y[c]).sum()).collect();
        let s = solve3_equilibrated(a, [b[0], b[1], b[2]]).unwrap();
        for k in 0..3 {
            assert!((s[k] * d[k] - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve3_matches_known_solution() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let b = [2.0 * 1.0 - 2.0, 1.0 - 6.0 + 0.5, -2.0 + 2.0];
        let s = solve3(a, b).unwrap();
        for k in 0..3 {
            assert!((s[k] - x[k]).abs() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prop_objective_monotone_and_consistent(x in 0.0f64..PI, noise_seed in any::<u64>(), shift in -0.5f64..0.5) {
            let f = SpectralFunction::gaussian(10.0, 0.6, 121).unwrap();
            let ov = SpectralOverlap::new(&f, &f);
            let model = CurveModel::phase(&ov, [1.0, 1.0, 1.0, 0.8], 0.9).unwrap();
            let clean = synth(&model, [x, 500.0, shift]);
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            let noise = Normal::new(0.0, 0.02).unwrap();
            let v = clean.values.iter().map(|y| y * (1.0 + noise.sample(&mut rng))).collect();
            let d = CoincidenceCurve::new(clean.tau.clone(), v).unwrap();
            let r = fit_curve(&model, &d, None).unwrap();
            for s in &r.starts {
                for w in s.history.windows(2) {
                    prop_assert!(w[1] <= w[0]);
                }
            }
            let recomputed: f64 = r.residuals.iter().zip(&r.weights).map(|(e, w)| w * e * e).sum();
            prop_assert!((recomputed - r.objective).abs() <= 1e-12 * r.objective.max(1e-300));
            prop_assert!((0.0..=PI).contains(&r.shape_param));
        }
    }
}
