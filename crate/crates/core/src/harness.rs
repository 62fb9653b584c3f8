//! Numerical verification of the characterization pipeline: synthetic
//! experiments with Poisson shot noise and imperfect mode matching, pipeline
//! variants, trace-distance error statistics, and the reflectivity
//! comparison on the bundled fixture.

use crate::characterization::{
    all_tuples, characterize, derive_seed, required_tuples, CalibrationData, CharacterizationDataset, FitSpectra,
    GammaMode, PipelineConfig, SingleCounts, DEFAULT_SIGN_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::matrix::{canonicalize_representative, haar_random_unitary, trace_distance, ComplexMatrix, UnitaryMatrix};
use crate::photonic::{
    beam_splitter_params, curve_over_grid, CoincidenceCurve, LossModel, RepresentativeParams, SpectralFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

/// Mean above which Poisson draws use the normal approximation.
pub const POISSON_NORMAL_CUTOFF: f64 = 1e6;

/// Pipeline variant under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Calibrated `γ`, measured spectra in the fit model.
    Full,
    /// `γ` forced to one, measured spectra.
    NoCalibration,
    /// Calibrated `γ`, moment-matched Gaussian spectra in the fit model.
    GaussianFit,
}

impl Variant {
    /// Pipeline settings realizing this variant.
    pub fn pipeline(self, threshold: f64) -> PipelineConfig {
        match self {
            Variant::Full => PipelineConfig { threshold, gamma: GammaMode::Calibrate, fit_spectra: FitSpectra::Measured },
            Variant::NoCalibration => {
                PipelineConfig { threshold, gamma: GammaMode::Fixed(1.0), fit_spectra: FitSpectra::Measured }
            }
            Variant::GaussianFit => {
                PipelineConfig { threshold, gamma: GammaMode::Calibrate, fit_spectra: FitSpectra::GaussianMatched }
            }
        }
    }

    /// Short label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoCalibration => "no_calibration",
            Variant::GaussianFit => "gaussian_fit",
        }
    }
}

/// Source spectrum shared by all inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectraSource {
    /// The bundled non-Gaussian double-peak profile.
    DoublePeak,
    /// Gaussian amplitude with power-spectrum centre and standard deviation `width`.
    Gaussian {
        /// Centre frequency.
        center: f64,
        /// Power-spectrum standard deviation.
        width: f64,
    },
    /// A measured spectrum stored as an `omega,f` CSV file.
    File {
        /// CSV path.
        path: PathBuf,
    },
}

impl SpectraSource {
    /// Loads or builds the (normalized) spectrum.
    pub fn spectrum(&self) -> Result<SpectralFunction> {
        match self {
            SpectraSource::DoublePeak => Ok(SpectralFunction::double_peak_fixture()),
            SpectraSource::Gaussian { center, width } => {
                if !(*width > 0.0) || !(*center > 8.0 * width) {
                    return Err(Error::InvalidInput("gaussian spectrum needs width > 0 and center > 8·width".into()));
                }
                SpectralFunction::gaussian(*center, *width, 161)
            }
            SpectraSource::File { path } => crate::characterization::read_spectrum(path),
        }
    }
}

/// Shot-noise model for synthetic data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Every count is a Poisson draw around its expectation.
    Poisson,
    /// Counts equal their (rounded) expectations.
    Noiseless,
}

/// Which coincidence curves a synthetic experiment records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSet {
    /// Only the tuples consumed by the plain sign sweep.
    Required,
    /// Every tuple, so that sign decisions can be re-derived.
    All,
}

/// Settings of a batch of synthetic characterization experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Number of modes.
    pub m: usize,
    /// Mean number of detected events per single-photon setting and
    /// repetition; coincidence curves use the same budget per delay point.
    pub photon_budget: f64,
    /// True mode-matching parameter.
    pub gamma_true: f64,
    /// Source spectrum (identical for every input).
    pub spectra: SpectraSource,
    /// Pipeline variant.
    pub variant: Variant,
    /// Number of independent experiments.
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    /// Single-photon counting repetitions `B`.
    pub repetitions: usize,
    /// Number of delay points per curve (symmetric grid).
    pub tau_points: usize,
    /// Reflectivity angle `ϑ` of the calibration beam splitter.
    pub calibration_angle: f64,
    /// Sign-decision threshold.
    pub threshold: f64,
    /// Shot-noise model.
    pub noise: NoiseModel,
    /// Recorded coincidence curves.
    pub curves: CurveSet,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            m: 3,
            photon_budget: 1e5,
            gamma_true: 1.0,
            spectra: SpectraSource::DoublePeak,
            variant: Variant::Full,
            trials: 100,
            seed: 0,
            repetitions: 10,
            tau_points: 41,
            calibration_angle: FRAC_PI_4,
            threshold: DEFAULT_SIGN_THRESHOLD,
            noise: NoiseModel::Poisson,
            curves: CurveSet::All,
        }
    }
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidDimension(format!("m must be at least 2, got {}", self.m)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if !(self.photon_budget > 0.0) || !self.photon_budget.is_finite() {
            return Err(Error::InvalidInput(format!("photon budget must be positive, got {}", self.photon_budget)));
        }
        if !(0.0..=1.0).contains(&self.gamma_true) {
            return Err(Error::InvalidGamma(self.gamma_true));
        }
        if self.repetitions < 2 || self.tau_points < 5 {
            return Err(Error::InvalidInput("need at least 2 repetitions and 5 delay points".into()));
        }
        Ok(())
    }
}

/// Delay grid spanning `±4/σ` for a spectrum of power standard deviation `σ`
/// (the interference kernel has decayed below `e^{-16}` for a Gaussian).
pub fn delay_grid(spectrum: &SpectralFunction, points: usize) -> Vec<f64> {
    let (_, sd) = spectrum.power_moments();
    let half = 4.0 / sd;
    (0..points).map(|k| -half + 2.0 * half * k as f64 / (points - 1) as f64).collect()
}

/// Draws a Poisson variate (normal approximation above
/// [`POISSON_NORMAL_CUTOFF`]).
pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean > POISSON_NORMAL_CUTOFF {
        let x = Normal::new(mean, mean.sqrt()).expect("finite mean").sample(rng);
        return x.round().max(0.0) as u64;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn draw<R: Rng + ?Sized>(mean: f64, noise: NoiseModel, rng: &mut R) -> u64 {
    match noise {
        NoiseModel::Poisson => poisson_sample(mean, rng),
        NoiseModel::Noiseless => mean.round().max(0.0) as u64,
    }
}

fn draw_curve<R: Rng + ?Sized>(c: CoincidenceCurve, scale: f64, noise: NoiseModel, rng: &mut R) -> CoincidenceCurve {
    let values = match noise {
        NoiseModel::Poisson => c.values.iter().map(|v| poisson_sample(scale * v, rng) as f64).collect(),
        NoiseModel::Noiseless => c.values.iter().map(|v| scale * v).collect(),
    };
    CoincidenceCurve { tau: c.tau, values }
}

fn single_counts<R: Rng + ?Sized>(
    u: &ComplexMatrix,
    budget: f64,
    repetitions: usize,
    noise: NoiseModel,
    rng: &mut R,
) -> SingleCounts {
    let m = u.rows();
    let mut counts = SingleCounts::zeros(m, repetitions);
    for b in 1..=repetitions {
        for j in 1..=m {
            for i in 1..=m {
                counts.set(i, j, b, draw(budget * u[(i - 1, j - 1)].norm_sqr(), noise, rng));
            }
        }
    }
    counts
}

/// Simulates a full characterization experiment on `u`: single-photon
/// counts, two-photon coincidence curves with mode-matching `γ_true`, and a
/// calibration run on a beam splitter with angle `config.calibration_angle`.
///
/// Deterministic for a fixed `seed`.
pub fn simulate_dataset(u: &UnitaryMatrix, config: &TrialConfig, seed: u64) -> Result<CharacterizationDataset> {
    config.validate()?;
    let m = config.m;
    if u.dim() != m {
        return Err(Error::ShapeError(format!("unitary of order {} does not match m = {m}", u.dim())));
    }
    let f = config.spectra.spectrum()?;
    let taus = delay_grid(&f, config.tau_points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = RepresentativeParams::from_unitary(u)?;
    let loss = LossModel::lossless(m);
    let singles = single_counts(u, config.photon_budget, config.repetitions, config.noise, &mut rng);
    let tuples = match config.curves {
        CurveSet::Required => required_tuples(m),
        CurveSet::All => all_tuples(m),
    };
    let mut curves = BTreeMap::new();
    for t in tuples {
        let c = curve_over_grid(&params, &loss, config.gamma_true, &f, &f, t, &taus)?;
        curves.insert(t, draw_curve(c, config.photon_budget, config.noise, &mut rng));
    }
    let bs = beam_splitter_params(config.calibration_angle)?;
    let bs_matrix = bs.assemble();
    let cal_singles = single_counts(&bs_matrix, config.photon_budget, config.repetitions, config.noise, &mut rng);
    let cal_curve = curve_over_grid(&bs, &LossModel::lossless(2), config.gamma_true, &f, &f, [1, 2, 1, 2], &taus)?;
    let calibration = CalibrationData {
        single_counts: cal_singles,
        curve: draw_curve(cal_curve, config.photon_budget, config.noise, &mut rng),
    };
    CharacterizationDataset::new(singles, curves, Some(calibration), vec![f; m])
}

/// Characterization error `ε = min(D(W, Ũ), D(W, Ũ*))` where `Ũ` is the
/// canonical representative of `u` and `D` the trace distance.
pub fn characterization_error(w: &UnitaryMatrix, u: &UnitaryMatrix) -> Result<f64> {
    let c = UnitaryMatrix::try_from_matrix(canonicalize_representative(u)?)?;
    let cc = UnitaryMatrix::try_from_matrix(c.conj())?;
    Ok(trace_distance(w, &c)?.min(trace_distance(w, &cc)?))
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Trial index.
    pub trial: usize,
    /// `ε`, or `None` when the pipeline failed.
    pub error: Option<f64>,
    /// Error code of a failed pipeline run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Statistics of a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    /// Variant label.
    pub variant: Variant,
    /// Number of trials run.
    pub trials: usize,
    /// Mean `ε` over successful trials.
    pub mean_error: f64,
    /// Standard deviation of `ε` over successful trials.
    pub std_dev: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Number of failed trials.
    pub failures: usize,
    /// Per-trial outcomes in trial order.
    pub per_trial: Vec<TrialOutcome>,
}

impl TrialReport {
    /// Successful errors in trial order.
    pub fn errors(&self) -> Vec<f64> {
        self.per_trial.iter().filter_map(|o| o.error).collect()
    }
}

/// Compensated (Kahan–Babuška) summation.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn mean_and_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = kahan_sum(v.iter().copied()) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(v.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, var.sqrt())
}

/// Haar-random unitary and dataset seed of trial `t` (independent of the
/// variant, so different variants see identical experiments).
pub fn trial_seeds(master: u64, trial: usize) -> (u64, u64) {
    (derive_seed(master, &[trial as u64, 0]), derive_seed(master, &[trial as u64, 1]))
}

/// Runs one trial: fresh Haar unitary, simulation, characterization, error.
pub fn run_trial(config: &TrialConfig, trial: usize) -> TrialOutcome {
    let (useed, dseed) = trial_seeds(config.seed, trial);
    let result = (|| -> Result<f64> {
        let u = haar_random_unitary(config.m, useed)?;
        let ds = simulate_dataset(&u, config, dseed)?;
        let est = characterize(&ds, &config.variant.pipeline(config.threshold))?;
        characterization_error(&est.w, &u)
    })();
    match result {
        Ok(e) => TrialOutcome { trial, error: Some(e), failure: None },
        Err(e) => TrialOutcome { trial, error: None, failure: Some(e.code().to_string()) },
    }
}

/// Runs `config.trials` independent experiments in parallel and aggregates
/// the errors (order-independent: outcomes are collected by trial index).
pub fn run_trials(config: &TrialConfig) -> Result<TrialReport> {
    config.validate()?;
    config.spectra.spectrum()?;
    let per_trial: Vec<TrialOutcome> = (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect();
    let errors: Vec<f64> = per_trial.iter().filter_map(|o| o.error).collect();
    let (mean_error, std_dev) = mean_and_sd(&errors);
    Ok(TrialReport {
        variant: config.variant,
        trials: config.trials,
        mean_error,
        std_dev,
        std_error: std_dev / (errors.len() as f64).sqrt(),
        failures: config.trials - errors.len(),
        per_trial,
    })
}

/// Paired comparison of two variants run on the same trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    /// Trials where both variants succeeded.
    pub paired: usize,
    /// Mean of `ε_b − ε_a` over paired trials.
    pub mean_difference: f64,
    /// Lower end of the one-sided bootstrap confidence bound on the mean difference.
    pub lower_bound: f64,
    /// Confidence level of `lower_bound`.
    pub confidence: f64,
    /// `mean ε_b / mean ε_a` over paired trials.
    pub ratio: f64,
}

impl VariantComparison {
    /// `a` is better than `b` at the stated confidence.
    pub fn a_better(&self) -> bool {
        self.lower_bound > 0.0
    }
}

/// Compares `a` (expected better) against `b` trial by trial; the lower
/// confidence bound on `mean(ε_b − ε_a)` is the `(1 − confidence)` quantile
/// of `resamples` bootstrap means.
pub fn compare_variants(
    a: &TrialReport,
    b: &TrialReport,
    confidence: f64,
    resamples: usize,
    seed: u64,
) -> Result<VariantComparison> {
    let ea: BTreeMap<usize, f64> = a.per_trial.iter().filter_map(|o| o.error.map(|e| (o.trial, e))).collect();
    let pairs: Vec<(f64, f64)> =
        b.per_trial.iter().filter_map(|o| Some((*ea.get(&o.trial)?, o.error?))).collect();
    if pairs.len() < 2 || resamples == 0 || !(0.0..1.0).contains(&confidence) {
        return Err(Error::InvalidInput("need at least two paired trials, resamples > 0 and confidence in [0, 1)".into()));
    }
    let d: Vec<f64> = pairs.iter().map(|(x, y)| y - x).collect();
    let n = d.len();
    let mean_difference = kahan_sum(d.iter().copied()) / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| kahan_sum((0..n).map(|_| d[rng.gen_range(0..n)])) / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let k = (((1.0 - confidence) * resamples as f64).floor() as usize).min(resamples - 1);
    let ma = kahan_sum(pairs.iter().map(|p| p.0)) / n as f64;
    let mb = kahan_sum(pairs.iter().map(|p| p.1)) / n as f64;
    Ok(VariantComparison { paired: n, mean_difference, lower_bound: means[k], confidence, ratio: mb / ma })
}

/// One procedure's column set in the reflectivity fixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityProcedure {
    /// Procedure name.
    pub name: String,
    /// Reflectivity estimates.
    pub r: Vec<f64>,
    /// Their error bars.
    pub sigma: Vec<f64>,
    /// Published normalized distances to the single-photon estimates.
    pub published_ratio: Vec<f64>,
}

/// Reference estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityReference {
    /// Reflectivity estimates.
    pub r: Vec<f64>,
    /// Their error bars.
    pub sigma: Vec<f64>,
}

/// The reflectivity fixture file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityFixture {
    /// Free-text description.
    #[serde(default)]
    pub description: String,
    /// Beam-splitter labels.
    pub labels: Vec<usize>,
    /// Single-photon reference estimates.
    pub single_photon: ReflectivityReference,
    /// Two-photon procedures.
    pub procedures: Vec<ReflectivityProcedure>,
}

/// The fixture shipped with the repository.
pub const BUNDLED_REFLECTIVITY_FIXTURE: &str = include_str!("../../../fixtures/reflectivity.json");

impl ReflectivityFixture {
    /// Parses and validates fixture JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::FixtureError(e.to_string()))?;
        let n = f.labels.len();
        let bad = |v: &[f64]| v.len() != n || v.iter().any(|x| !x.is_finite());
        if n == 0 || bad(&f.single_photon.r) || bad(&f.single_photon.sigma) {
            return Err(Error::FixtureError("reference columns inconsistent with labels".into()));
        }
        for p in &f.procedures {
            if bad(&p.r) || bad(&p.sigma) || bad(&p.published_ratio) {
                return Err(Error::FixtureError(format!("procedure '{}' columns inconsistent with labels", p.name)));
            }
        }
        Ok(f)
    }

    /// The bundled fixture.
    pub fn bundled() -> Result<Self> {
        Self::from_json(BUNDLED_REFLECTIVITY_FIXTURE)
    }
}

/// Normalized distance `|a − b| / √(σ_a² + σ_b²)`.
pub fn normalized_distance(a: f64, sigma_a: f64, b: f64, sigma_b: f64) -> f64 {
    let s = sigma_a.hypot(sigma_b);
    if s == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / s
    }
}

/// Recomputed distances for one procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityRow {
    /// Procedure name.
    pub name: String,
    /// Recomputed normalized distances.
    pub ratio: Vec<f64>,
    /// Published values.
    pub published: Vec<f64>,
    /// Largest relative deviation `|ratio − published|/published`.
    pub max_relative_deviation: f64,
}

/// Recomputes every procedure's normalized distances to the single-photon
/// reference.
pub fn reflectivity_comparison(fixture: &ReflectivityFixture) -> Vec<ReflectivityRow> {
    let sp = &fixture.single_photon;
    fixture
        .procedures
        .iter()
        .map(|p| {
            let ratio: Vec<f64> = (0..fixture.labels.len())
                .map(|k| normalized_distance(p.r[k], p.sigma[k], sp.r[k], sp.sigma[k]))
                .collect();
            let max_relative_deviation = ratio
                .iter()
                .zip(&p.published_ratio)
                .map(|(r, q)| if *q == 0.0 { r.abs() } else { (r - q).abs() / q.abs() })
                .fold(0.0, f64::max);
            ReflectivityRow { name: p.name.clone(), ratio, published: p.published_ratio.clone(), max_relative_deviation }
        })
        .collect()
}
