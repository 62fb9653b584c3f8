//! Characterization of an interferometer from one- and two-photon data.
//!
//! The pipeline estimates the class representative `U = L·A·M` (real,
//! nonnegative first row and column) in stages:
//!
//! 1. amplitude ratios `α_ij` from repeated single-photon counts
//!    ([`estimate_amplitudes`]);
//! 2. the source mode-matching parameter `γ` from a delay scan on a
//!    reference beam splitter ([`calibrate_gamma`]);
//! 3. argument magnitudes `|θ_ij|` and signs from delay-scanned
//!    coincidence curves ([`estimate_arguments`]), with port relabelling and
//!    re-derivation of unstable sign decisions;
//! 4. the diagonal dressings and the nearest unitary
//!    ([`max_likely_unitary`]);
//! 5. error bars by residual bootstrap ([`bootstrap`]).
//!
//! Ports are 1-based in every public interface; coincidence curves are keyed
//! by [`PortTuple`] `(i, i', j, j')` = outputs `i, i'`, inputs `j, j'`.

mod amplitudes;
mod arguments;
mod bootstrap;
mod bundle;
mod calibration;
mod fit;
mod mlu;
mod scattershot;

pub use amplitudes::{cumulant_check, estimate_amplitudes, AmplitudeEstimate, SingleCounts};
pub use arguments::{
    estimate_argument_magnitude, estimate_arguments, fold_angle, reference_angle, resolve_signs, sign_calc,
    ArgumentEstimate,
};
pub use bootstrap::{bootstrap, derive_seed, BootstrapConfig, ResidualScheme};
pub use bundle::{read_bundle, read_spectrum, write_bundle, write_result, write_spectrum, BundleManifest};
pub use calibration::{alpha_from_reflectivity, calibrate_gamma, consistent_within, reflectivity_from_alpha, GammaEstimate};
pub use fit::{fit_curve, CurveModel, FitGuesses, FitResult, ShapeKind, StartSummary, PHASE_SEEDS};
pub use mlu::max_likely_unitary;
pub use scattershot::{scattershot_extract, DiscardCounts, ScattershotEvent, ScattershotExtract};

use crate::error::{Error, Result};
use crate::matrix::UnitaryMatrix;
use crate::photonic::{CoincidenceCurve, PortTuple, SpectralFunction, SpectralOverlap};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default reference-angle threshold `θ^T` (radians) below which a sign
/// decision is re-derived from an alternate port pair.
pub const DEFAULT_SIGN_THRESHOLD: f64 = 0.1;

/// Orders both port pairs of a tuple increasingly.
///
/// A coincidence curve is unchanged by swapping the two outputs or the two
/// inputs (the interference phase only changes sign), so curves are stored
/// under this canonical key.
pub fn canonical_ports(t: PortTuple) -> PortTuple {
    let [i, i2, j, j2] = t;
    [i.min(i2), i.max(i2), j.min(j2), j.max(j2)]
}

/// Port tuples consumed by the plain sweep for `m` modes: the `(m−1)²`
/// magnitude curves `(1, i, 1, j)` and the `(m−1)² − 1` sign curves
/// `(2, i; 1, 2)`, `(1, 2; 2, j)` and `(2, i; 2, j)` (canonical keys).
pub fn required_tuples(m: usize) -> Vec<PortTuple> {
    let mut out = Vec::new();
    for i in 2..=m {
        for j in 2..=m {
            out.push(canonical_ports([1, i, 1, j]));
        }
    }
    for i in 3..=m {
        out.push(canonical_ports([2, i, 1, 2]));
        out.push(canonical_ports([1, 2, 2, i]));
    }
    for i in 3..=m {
        for j in 3..=m {
            out.push(canonical_ports([2, i, 2, j]));
        }
    }
    out
}

/// Every canonical tuple `(i < i', j < j')` of an `m`-mode interferometer,
/// i.e. the superset from which alternate sign curves may be drawn.
pub fn all_tuples(m: usize) -> Vec<PortTuple> {
    let mut out = Vec::new();
    for i in 1..=m {
        for i2 in i + 1..=m {
            for j in 1..=m {
                for j2 in j + 1..=m {
                    out.push([i, i2, j, j2]);
                }
            }
        }
    }
    out
}

/// Reference beam-splitter measurements used for `γ` calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationData {
    /// Single-photon counts of the beam splitter (`2×2×B`).
    pub single_counts: SingleCounts,
    /// Coincidence counts versus delay for photons from sources 1 and 2.
    pub curve: CoincidenceCurve,
}

/// Everything recorded in one characterization experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacterizationDataset {
    m: usize,
    single_counts: SingleCounts,
    curves: BTreeMap<PortTuple, CoincidenceCurve>,
    calibration: Option<CalibrationData>,
    spectra: Vec<SpectralFunction>,
}

impl CharacterizationDataset {
    /// Assembles a dataset; curve keys are canonicalized.
    pub fn new(
        single_counts: SingleCounts,
        curves: BTreeMap<PortTuple, CoincidenceCurve>,
        calibration: Option<CalibrationData>,
        spectra: Vec<SpectralFunction>,
    ) -> Result<Self> {
        let m = single_counts.modes();
        if m < 2 {
            return Err(Error::InvalidDimension("characterization needs at least two modes".into()));
        }
        if single_counts.repetitions() < 2 {
            return Err(Error::InvalidInput("at least two repetitions of single-photon counting are required".into()));
        }
        if spectra.len() != m {
            return Err(Error::ShapeError(format!("expected {m} input spectra, got {}", spectra.len())));
        }
        if let Some(c) = &calibration {
            if c.single_counts.modes() != 2 {
                return Err(Error::ShapeError("calibration counts must describe a 2-mode beam splitter".into()));
            }
        }
        let mut canon = BTreeMap::new();
        for (k, v) in curves {
            if k.iter().any(|&p| p == 0 || p > m) || k[0] == k[1] || k[2] == k[3] {
                return Err(Error::PortError(format!("curve ports {k:?} invalid for m = {m}")));
            }
            canon.insert(canonical_ports(k), v);
        }
        Ok(Self { m, single_counts, curves: canon, calibration, spectra })
    }

    /// Mode count.
    pub fn modes(&self) -> usize {
        self.m
    }

    /// Single-photon counts `N_ijb`.
    pub fn single_counts(&self) -> &SingleCounts {
        &self.single_counts
    }

    /// All coincidence curves under canonical keys.
    pub fn curves(&self) -> &BTreeMap<PortTuple, CoincidenceCurve> {
        &self.curves
    }

    /// Curve for `ports` (either ordering of each pair).
    pub fn curve(&self, ports: PortTuple) -> Option<&CoincidenceCurve> {
        self.curves.get(&canonical_ports(ports))
    }

    /// Calibration measurements, if recorded.
    pub fn calibration(&self) -> Option<&CalibrationData> {
        self.calibration.as_ref()
    }

    /// Input spectra `f_1..f_m`.
    pub fn spectra(&self) -> &[SpectralFunction] {
        &self.spectra
    }

    /// Lists the tuples of [`required_tuples`] that are absent.
    pub fn missing_required(&self) -> Vec<PortTuple> {
        required_tuples(self.m).into_iter().filter(|t| !self.curves.contains_key(t)).collect()
    }
}

/// One noteworthy event of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Ports were relabelled so that the seeded argument is the magnitude nearest `π/2`.
    Relabel {
        /// Output port swapped with output 2.
        output: usize,
        /// Input port swapped with input 2.
        input: usize,
        /// Magnitude of the argument now at position (2, 2).
        magnitude: f64,
    },
    /// A sign decision was re-derived from an alternate port pair.
    Rederived {
        /// Entry `(i, j)` whose sign was decided.
        target: [usize; 2],
        /// Tuple the plain sweep would have used.
        primary: PortTuple,
        /// Tuple actually used.
        alternate: PortTuple,
        /// Reference angle of the primary decision.
        primary_reference: f64,
        /// Reference angle of the alternate decision.
        reference: f64,
    },
    /// No port pair with a reference angle above threshold was available.
    UnstableDecision {
        /// Entry `(i, j)` whose sign was decided.
        target: [usize; 2],
        /// Tuple used.
        ports: PortTuple,
        /// Its reference angle.
        reference: f64,
    },
    /// A fit carried (almost) no interference signal.
    DegenerateFit {
        /// Tuple of the fitted curve (`[1, 2, 1, 2]` for calibration).
        ports: PortTuple,
    },
    /// The spread of repeated counts did not settle between `B/2` and `B` repetitions.
    CumulantWarning {
        /// Output port.
        output: usize,
        /// Input port.
        input: usize,
        /// Relative change of the standard deviation.
        relative_change: f64,
    },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::Relabel { output, input, magnitude } => {
                write!(f, "relabelled output {output} and input {input} to position 2 (|θ| = {magnitude:.4})")
            }
            Diagnostic::Rederived { target, primary, alternate, primary_reference, reference } => write!(
                f,
                "sign of θ{target:?} re-derived from {alternate:?} (reference {reference:.4}) instead of {primary:?} (reference {primary_reference:.4})"
            ),
            Diagnostic::UnstableDecision { target, ports, reference } => {
                write!(f, "sign of θ{target:?} decided from {ports:?} with reference angle {reference:.4} below threshold")
            }
            Diagnostic::DegenerateFit { ports } => write!(f, "fit of curve {ports:?} carries no interference signal"),
            Diagnostic::CumulantWarning { output, input, relative_change } => write!(
                f,
                "count spread for output {output}, input {input} changed by {:.1}% between B/2 and B",
                100.0 * relative_change
            ),
        }
    }
}

/// How `γ` enters the argument fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaMode {
    /// Estimate `γ` from the calibration data.
    Calibrate,
    /// Use a fixed value (e.g. `1.0` to skip calibration).
    Fixed(f64),
}

/// Which spectra the fit model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitSpectra {
    /// The measured spectra.
    Measured,
    /// Gaussians matching the mean and width of each measured power spectrum.
    GaussianMatched,
}

/// Pipeline options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Sign-decision threshold `θ^T`; `0` disables re-derivation.
    pub threshold: f64,
    /// Calibration mode.
    pub gamma: GammaMode,
    /// Fit-model spectra.
    pub fit_spectra: FitSpectra,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_SIGN_THRESHOLD, gamma: GammaMode::Calibrate, fit_spectra: FitSpectra::Measured }
    }
}

/// Spectral overlaps of every input pair, built from the fit-model spectra.
#[derive(Clone, Debug)]
pub struct FitKernels {
    m: usize,
    pairs: Vec<Option<SpectralOverlap>>,
}

impl FitKernels {
    /// Precomputes the overlap of every unordered input pair.
    pub fn new(spectra: &[SpectralFunction], mode: FitSpectra) -> Result<Self> {
        let m = spectra.len();
        let model: Vec<SpectralFunction> = match mode {
            FitSpectra::Measured => spectra.to_vec(),
            FitSpectra::GaussianMatched => spectra.iter().map(|s| s.gaussian_moment_matched()).collect::<Result<_>>()?,
        };
        let mut pairs = vec![None; m * m];
        for j in 0..m {
            for j2 in j + 1..m {
                pairs[j * m + j2] = Some(SpectralOverlap::new(&model[j], &model[j2]));
            }
        }
        Ok(Self { m, pairs })
    }

    /// Overlap for 1-based inputs `j ≠ j'`.
    pub fn overlap(&self, j: usize, j2: usize) -> Result<&SpectralOverlap> {
        let (a, b) = (j.min(j2), j.max(j2));
        if a == 0 || b > self.m || a == b {
            return Err(Error::PortError(format!("input pair ({j}, {j2}) invalid for m = {}", self.m)));
        }
        Ok(self.pairs[(a - 1) * self.m + (b - 1)].as_ref().expect("filled for a < b"))
    }
}

/// Point estimate of a characterization run.
#[derive(Clone, Debug)]
pub struct PointEstimate {
    /// Most-likely unitary, canonicalized.
    pub w: UnitaryMatrix,
    /// Amplitude estimates.
    pub amplitudes: AmplitudeEstimate,
    /// Arguments `θ_ij` (row-major).
    pub theta: Vec<f64>,
    /// Mode-matching parameter used in the argument fits.
    pub gamma: f64,
    /// Its fit standard error (zero when fixed).
    pub gamma_sigma: f64,
    /// Calibration beam-splitter reflectivity, when calibrated.
    pub reflectivity: Option<f64>,
    /// Calibration fit, when calibrated.
    pub calibration_fit: Option<FitResult>,
    /// Fits of the consumed coincidence curves.
    pub fits: BTreeMap<PortTuple, FitResult>,
    /// Pipeline diagnostics.
    pub diagnostics: Vec<Diagnostic>,
}

/// Result of a characterization with bootstrap error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizedInterferometer {
    /// Representative matrix (real nonnegative first row and column).
    pub w: UnitaryMatrix,
    /// `σ(Re W_ij)` (row-major).
    pub sigma_re: Vec<f64>,
    /// `σ(Im W_ij)` (row-major).
    pub sigma_im: Vec<f64>,
    /// Mode-matching parameter.
    pub gamma: f64,
    /// Bootstrap spread of `γ`.
    pub gamma_sigma: f64,
    /// Point-estimate diagnostics.
    pub diagnostics: Vec<Diagnostic>,
    /// Number of bootstrap replicates attempted.
    pub replicates: usize,
    /// Number of failed replicates.
    pub failures: usize,
}

/// Runs the point-estimate pipeline on `dataset`.
pub fn characterize(dataset: &CharacterizationDataset, config: &PipelineConfig) -> Result<PointEstimate> {
    let amplitudes = estimate_amplitudes(dataset.single_counts())?;
    let mut diagnostics = cumulant_check(dataset.single_counts());
    let kernels = FitKernels::new(dataset.spectra(), config.fit_spectra)?;
    let (gamma, gamma_sigma, reflectivity, calibration_fit) = match config.gamma {
        GammaMode::Fixed(g) => {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::InvalidGamma(g));
            }
            (g, 0.0, None, None)
        }
        GammaMode::Calibrate => {
            let cal = dataset
                .calibration()
                .ok_or_else(|| Error::InvalidInput("calibration data required to estimate gamma".into()))?;
            let bs = estimate_amplitudes(&cal.single_counts)?;
            let r = reflectivity_from_alpha(bs.alpha(2, 2))?;
            let est = calibrate_gamma(&cal.curve, r, kernels.overlap(1, 2)?)?;
            if est.fit.degenerate {
                diagnostics.push(Diagnostic::DegenerateFit { ports: [1, 2, 1, 2] });
            }
            (est.gamma, est.sigma, Some(r), Some(est.fit))
        }
    };
    let provider = |t: PortTuple| dataset.curve(t).cloned();
    let args = estimate_arguments(dataset.modes(), &amplitudes.alpha, gamma, &kernels, &provider, config.threshold)?;
    diagnostics.extend(args.diagnostics.iter().cloned());
    let w = max_likely_unitary(dataset.modes(), &amplitudes.alpha, &args.theta)?;
    Ok(PointEstimate {
        w,
        amplitudes,
        theta: args.theta,
        gamma,
        gamma_sigma,
        reflectivity,
        calibration_fit,
        fits: args.fits,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_tuple_count_matches_sweep() {
        for m in 2..=6 {
            let t = required_tuples(m);
            assert_eq!(t.len(), 2 * (m - 1) * (m - 1) - 1);
            let mut u = t.clone();
            u.sort();
            u.dedup();
            assert_eq!(u.len(), t.len(), "duplicates at m = {m}");
        }
    }

    #[test]
    fn all_tuples_contains_required() {
        let all = all_tuples(5);
        assert_eq!(all.len(), 100);
        assert!(required_tuples(5).iter().all(|t| all.contains(t)));
    }

    #[test]
    fn canonical_ports_orders_pairs() {
        assert_eq!(canonical_ports([3, 1, 4, 2]), [1, 3, 2, 4]);
    }
}
