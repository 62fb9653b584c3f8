//! Residual bootstrap for error bars on the characterized matrix.
//!
//! Each replicate resamples whole single-photon runs (with replacement over
//! the repetition index, per input) and rebuilds every coincidence curve from
//! its fit plus residuals drawn with replacement from that curve's normalized
//! residuals (see [`ResidualScheme`]). The whole pipeline is re-run on the
//! replicate; the spread of the replicate matrices gives `σ(Re W_ij)` and
//! `σ(Im W_ij)`.

use super::amplitudes::estimate_amplitudes;
use super::arguments::estimate_arguments;
use super::calibration::{calibrate_gamma, reflectivity_from_alpha};
use super::fit::{fit_curve, CurveModel, FitResult};
use super::mlu::max_likely_unitary;
use super::{
    canonical_ports, CharacterizationDataset, CharacterizedInterferometer, FitKernels, GammaMode, PipelineConfig,
    PointEstimate,
};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, UnitaryMatrix};
use crate::photonic::{CoincidenceCurve, PortTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// How residuals are normalized before they are pooled and redrawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualScheme {
    /// `r = (C^exp − C^fit)/√C^fit`, replicate `C^fit + √C^fit·r*`.
    ///
    /// Matches the variance of counting noise, so residuals from a deep
    /// two-photon dip (where `C^fit → 0`) do not contaminate the pool.
    #[default]
    Pearson,
    /// `r = (C^exp − C^fit)/C^fit`, replicate `C^fit·(1 + r*)`.
    ///
    /// Appropriate for multiplicative noise; unstable when a curve dips
    /// close to zero counts.
    Relative,
}

/// Bootstrap options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapConfig {
    /// Number of replicates `N`.
    pub replicates: usize,
    /// Smallest accepted `N`.
    pub min_replicates: usize,
    /// Master seed; replicate `n` uses a seed derived from `(seed, n)`.
    pub seed: u64,
    /// Largest tolerated fraction of failed replicates.
    pub max_failure_rate: f64,
    /// Residual normalization.
    pub residuals: ResidualScheme,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 200, min_replicates: 100, seed: 0, max_failure_rate: 0.1, residuals: ResidualScheme::Pearson }
    }
}

/// Mixes a master seed with stream labels (SplitMix64 finalizer per word).
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    labels.iter().fold(mix(master), |acc, &l| mix(acc ^ mix(l)))
}

struct ResidualModel {
    fitted: Vec<f64>,
    normalized: Vec<f64>,
    scheme: ResidualScheme,
}

impl ResidualModel {
    fn from_fit(fit: &FitResult, scheme: ResidualScheme) -> Self {
        let normalized = fit
            .fitted
            .iter()
            .zip(&fit.residuals)
            .map(|(f, r)| {
                let d = Self::spread(*f, scheme);
                if d > 0.0 {
                    r / d
                } else {
                    0.0
                }
            })
            .collect();
        Self { fitted: fit.fitted.clone(), normalized, scheme }
    }

    fn spread(f: f64, scheme: ResidualScheme) -> f64 {
        match scheme {
            ResidualScheme::Pearson => f.max(0.0).sqrt(),
            ResidualScheme::Relative => f.max(0.0),
        }
    }

    fn replicate(&self, tau: &[f64], rng: &mut ChaCha8Rng) -> CoincidenceCurve {
        let n = self.normalized.len();
        let values = self
            .fitted
            .iter()
            .map(|f| (f + Self::spread(*f, self.scheme) * self.normalized[rng.gen_range(0..n)]).max(0.0))
            .collect();
        CoincidenceCurve { tau: tau.to_vec(), values }
    }
}

/// Runs `config.replicates` bootstrap replicates of the pipeline around the
/// point estimate `point` (computed from `dataset` with `pipeline`).
///
/// Replicate matrices are aligned with the point estimate's conjugation
/// class before the spreads are taken (the sign convention for the seeded
/// argument may land a replicate on `W*`). Results are deterministic for a
/// fixed seed regardless of scheduling.
pub fn bootstrap(
    dataset: &CharacterizationDataset,
    point: &PointEstimate,
    pipeline: &PipelineConfig,
    config: &BootstrapConfig,
) -> Result<CharacterizedInterferometer> {
    if config.replicates < config.min_replicates.max(2) {
        return Err(Error::InvalidInput(format!(
            "bootstrap needs at least {} replicates, got {}",
            config.min_replicates.max(2),
            config.replicates
        )));
    }
    let m = dataset.modes();
    let kernels = FitKernels::new(dataset.spectra(), pipeline.fit_spectra)?;
    let alpha = &point.amplitudes.alpha;
    // Lazily fitted residual models for every recorded curve.
    let models: BTreeMap<PortTuple, OnceLock<Option<ResidualModel>>> =
        dataset.curves().keys().map(|k| (*k, OnceLock::new())).collect();
    for (k, f) in &point.fits {
        if let Some(cell) = models.get(k) {
            let _ = cell.set(Some(ResidualModel::from_fit(f, config.residuals)));
        }
    }
    let residual_model = |key: PortTuple| -> Option<&ResidualModel> {
        let cell = models.get(&key)?;
        cell.get_or_init(|| {
            let curve = dataset.curve(key)?;
            let [i, i2, j, j2] = key;
            let a = |r: usize, c: usize| alpha[(r - 1) * m + (c - 1)];
            let model =
                CurveModel::phase(kernels.overlap(j, j2).ok()?, [a(i, j), a(i, j2), a(i2, j), a(i2, j2)], point.gamma)
                    .ok()?;
            fit_curve(&model, curve, None).ok().map(|f| ResidualModel::from_fit(&f, config.residuals))
        })
        .as_ref()
    };
    let calibration = match pipeline.gamma {
        GammaMode::Calibrate => {
            let cal = dataset.calibration().ok_or_else(|| Error::InvalidInput("calibration data missing".into()))?;
            let fit = point.calibration_fit.as_ref().ok_or_else(|| Error::InvalidInput("calibration fit missing".into()))?;
            Some((cal, ResidualModel::from_fit(fit, config.residuals)))
        }
        GammaMode::Fixed(_) => None,
    };
    let reference = point.w.matrix().clone();

    let run = |n: usize| -> Result<(ComplexMatrix, f64)> {
        let seed = derive_seed(config.seed, &[n as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
        let singles = dataset.single_counts();
        let bb = singles.repetitions();
        let picks: Vec<Vec<usize>> = (0..m).map(|_| (0..bb).map(|_| rng.gen_range(1..=bb)).collect()).collect();
        let amps = estimate_amplitudes(&singles.resampled(&picks))?;
        let gamma = match (&calibration, pipeline.gamma) {
            (Some((cal, rm)), _) => {
                let cb = cal.single_counts.repetitions();
                let cp: Vec<Vec<usize>> = (0..2).map(|_| (0..cb).map(|_| rng.gen_range(1..=cb)).collect()).collect();
                let bs = estimate_amplitudes(&cal.single_counts.resampled(&cp))?;
                let r = reflectivity_from_alpha(bs.alpha(2, 2))?;
                let curve = rm.replicate(&cal.curve.tau, &mut rng);
                calibrate_gamma(&curve, r, kernels.overlap(1, 2)?)?.gamma
            }
            (None, GammaMode::Fixed(g)) => g,
            (None, GammaMode::Calibrate) => unreachable!("calibration resolved above"),
        };
        let provider = |t: PortTuple| -> Option<CoincidenceCurve> {
            let key = canonical_ports(t);
            let rm = residual_model(key)?;
            let tau = &dataset.curve(key)?.tau;
            let label = key.iter().fold(0u64, |acc, &p| acc * 64 + p as u64);
            let mut r = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1, label]));
            Some(rm.replicate(tau, &mut r))
        };
        let args = estimate_arguments(m, &amps.alpha, gamma, &kernels, &provider, pipeline.threshold)?;
        let w = max_likely_unitary(m, &amps.alpha, &args.theta)?;
        let w = align_conjugation(w, &reference);
        Ok((w, gamma))
    };

    let outcomes: Vec<Result<(ComplexMatrix, f64)>> = (0..config.replicates).into_par_iter().map(run).collect();
    let mut log = Vec::new();
    let mut ok = Vec::new();
    for (n, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => ok.push(v),
            Err(e) => log.push(format!("replicate {n}: {e}")),
        }
    }
    let failures = log.len();
    if failures as f64 > config.max_failure_rate * config.replicates as f64 || ok.len() < 2 {
        return Err(Error::BootstrapUnstable { failures, replicates: config.replicates, log });
    }
    let (sigma_re, sigma_im) = entry_spreads(m, ok.iter().map(|(w, _)| w));
    let gamma_sigma = match pipeline.gamma {
        GammaMode::Calibrate => sample_sd(&ok.iter().map(|(_, g)| *g).collect::<Vec<_>>()),
        GammaMode::Fixed(_) => 0.0,
    };
    Ok(CharacterizedInterferometer {
        w: point.w.clone(),
        sigma_re,
        sigma_im,
        gamma: point.gamma,
        gamma_sigma,
        diagnostics: point.diagnostics.clone(),
        replicates: config.replicates,
        failures,
    })
}

/// Returns `w` or its conjugate, whichever is closer to `reference` (Frobenius).
fn align_conjugation(w: UnitaryMatrix, reference: &ComplexMatrix) -> ComplexMatrix {
    let w = w.into_matrix();
    let c = w.conj();
    if (&c - reference).frobenius_norm() < (&w - reference).frobenius_norm() {
        c
    } else {
        w
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mu = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn entry_spreads<'a>(m: usize, ws: impl Iterator<Item = &'a ComplexMatrix> + Clone) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; m * m];
    let mut im = vec![0.0; m * m];
    for k in 0..m * m {
        let r: Vec<f64> = ws.clone().map(|w| w.as_slice()[k].re).collect();
        let i: Vec<f64> = ws.clone().map(|w| w.as_slice()[k].im).collect();
        re[k] = sample_sd(&r);
        im[k] = sample_sd(&i);
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_and_repeat() {
        let a = derive_seed(42, &[0]);
        assert_eq!(a, derive_seed(42, &[0]));
        assert_ne!(a, derive_seed(42, &[1]));
        assert_ne!(a, derive_seed(43, &[0]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    }

    #[test]
    fn sample_sd_oracle() {
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_sd(&[3.0]), 0.0);
    }
}
