//! Mode-matching calibration on a reference beam splitter.

use super::fit::{fit_curve, CurveModel, FitResult};
use crate::error::{Error, Result};
use crate::photonic::{CoincidenceCurve, SpectralOverlap};

/// Tolerance above one accepted for a fitted `γ` before it is rejected
/// (values in `(1, 1 + ε]` are clipped to one).
pub const GAMMA_OVERSHOOT: f64 = 0.05;

/// Calibrated mode-matching parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaEstimate {
    /// `γ̃ ∈ [0, 1]`.
    pub gamma: f64,
    /// Standard error from the fit curvature.
    pub sigma: f64,
    /// The underlying fit.
    pub fit: FitResult,
}

/// Reflectivity `cos ϑ` of a beam splitter whose representative has
/// amplitude ratio `α₂₂ = cot²ϑ`: `cos ϑ = √(α₂₂/(1 + α₂₂))`.
pub fn reflectivity_from_alpha(alpha22: f64) -> Result<f64> {
    if !(alpha22 >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha22 must be nonnegative, got {alpha22}")));
    }
    if alpha22.is_infinite() {
        return Ok(1.0);
    }
    Ok((alpha22 / (1.0 + alpha22)).sqrt())
}

/// Inverse of [`reflectivity_from_alpha`]: `α₂₂ = cos²ϑ / sin²ϑ`.
pub fn alpha_from_reflectivity(reflectivity: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&reflectivity) {
        return Err(Error::InvalidInput(format!("reflectivity must lie in [0, 1), got {reflectivity}")));
    }
    let c2 = reflectivity * reflectivity;
    Ok(c2 / (1.0 - c2))
}

/// Fits the beam-splitter coincidence model to `curve` with `γ` as the shape
/// parameter (scale and delay offset fitted jointly).
///
/// `overlap` is built from the spectra of the two calibration sources.
pub fn calibrate_gamma(curve: &CoincidenceCurve, reflectivity: f64, overlap: &SpectralOverlap) -> Result<GammaEstimate> {
    let alpha22 = alpha_from_reflectivity(reflectivity)?;
    let model = CurveModel::beam_splitter(overlap, alpha22)?;
    let fit = fit_curve(&model, curve, None)?;
    if fit.degenerate {
        return Err(Error::FitFailure("calibration curve shows no interference; gamma unidentifiable".into()));
    }
    let g = fit.shape_param;
    if !(0.0..=1.0 + GAMMA_OVERSHOOT).contains(&g) {
        return Err(Error::CalibrationOutOfRange(g));
    }
    Ok(GammaEstimate { gamma: g.min(1.0), sigma: fit.shape_std_error, fit })
}

/// Two estimates agree within `k` combined standard deviations.
pub fn consistent_within(a: (f64, f64), b: (f64, f64), k: f64) -> bool {
    (a.0 - b.0).abs() <= k * (a.1 * a.1 + b.1 * b.1).sqrt()
}
