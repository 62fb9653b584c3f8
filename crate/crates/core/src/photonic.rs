//! Forward model of a lossy linear interferometer probed with one and two
//! photons.
//!
//! The class representative is parametrized as `U = L·A·M` with
//! `L = diag(√λ_i)`, `A_ij = α_ij e^{iθ_ij}` (first row and column equal to
//! one) and `M = diag(√μ_j)`. Port losses `κ_i, ν_j` and dephasings
//! `φ_i, ξ_j` dress it into the physically effected matrix.
//!
//! The two-photon coincidence probability involves the double spectral
//! integral `∫∫ g(ω₁) g(ω₂) cos((ω₂−ω₁)τ + φ)` with `g = f_j f_j'`, which
//! factorizes exactly as `cos φ · |G(τ)|²` with `G(τ) = ∫ g(ω) e^{iωτ} dω`.
//! The factorization also holds for the product trapezoid rule, so the
//! quadrature below is the 2-D trapezoid rule evaluated in `O(N)` per delay.

use crate::error::{Error, Result};
use crate::matrix::{canonicalize_representative, ComplexMatrix, C64};
use serde::{Deserialize, Serialize};

/// Parameters `{λ_i}, {α_ij}, {θ_ij}, {μ_j}` of a class representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeParams {
    /// Mode count.
    pub m: usize,
    /// Amplitude ratios `α_ij` (row-major `m×m`), first row and column one.
    pub alpha: Vec<f64>,
    /// Arguments `θ_ij` in `(−π, π]` (row-major), first row and column zero.
    pub theta: Vec<f64>,
    /// Output dressings `λ_i` (`λ_1 = 1`); the representative carries `√λ_i`.
    pub lambda: Vec<f64>,
    /// Input dressings `μ_j`; the representative carries `√μ_j`.
    pub mu: Vec<f64>,
}

impl RepresentativeParams {
    /// Validates shapes and the border constraints.
    pub fn new(m: usize, alpha: Vec<f64>, theta: Vec<f64>, lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension("mode count 0".into()));
        }
        if alpha.len() != m * m || theta.len() != m * m || lambda.len() != m || mu.len() != m {
            return Err(Error::ShapeError(format!("parameter arrays inconsistent with m = {m}")));
        }
        let p = Self { m, alpha, theta, lambda, mu };
        for k in 0..m {
            if (p.a(0, k) - 1.0).abs() > 1e-9 || (p.a(k, 0) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput("alpha border must equal one".into()));
            }
            if p.t(0, k).abs() > 1e-9 || p.t(k, 0).abs() > 1e-9 {
                return Err(Error::InvalidInput("theta border must equal zero".into()));
            }
        }
        if p.alpha.iter().chain(&p.lambda).chain(&p.mu).any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("alpha, lambda, mu must be finite and nonnegative".into()));
        }
        Ok(p)
    }

    /// Extracts the parameters of the class representative of `u`.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        let w = canonicalize_representative(u)?;
        let m = w.rows();
        let mu: Vec<f64> = (0..m).map(|j| w[(0, j)].norm_sqr()).collect();
        let lambda: Vec<f64> = (0..m).map(|i| w[(i, 0)].norm_sqr() / mu[0]).collect();
        let mut alpha = vec![1.0; m * m];
        let mut theta = vec![0.0; m * m];
        for i in 1..m {
            for j in 1..m {
                alpha[i * m + j] = w[(i, j)].norm() / (lambda[i] * mu[j]).sqrt();
                theta[i * m + j] = w[(i, j)].arg();
            }
        }
        Ok(Self { m, alpha, theta, lambda, mu })
    }

    /// `α_ij` with 0-based indices.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.alpha[i * self.m + j]
    }

    /// `θ_ij` with 0-based indices.
    pub fn t(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.m + j]
    }

    /// The representative `U = L·A·M`.
    pub fn assemble(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.m, self.m, |i, j| {
            C64::from_polar(self.a(i, j), self.t(i, j)) * (self.lambda[i] * self.mu[j]).sqrt()
        })
    }
}

/// Port transmissions and dephasings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Output transmission probabilities `κ_i ∈ [0, 1]`.
    pub kappa: Vec<f64>,
    /// Input transmission probabilities `ν_j ∈ [0, 1]`.
    pub nu: Vec<f64>,
    /// Output dephasings `φ_i` (radians).
    pub phi: Vec<f64>,
    /// Input dephasings `ξ_j` (radians).
    pub xi: Vec<f64>,
}

impl LossModel {
    /// No loss and no dephasing.
    pub fn lossless(m: usize) -> Self {
        Self { kappa: vec![1.0; m], nu: vec![1.0; m], phi: vec![0.0; m], xi: vec![0.0; m] }
    }

    fn check(&self, m: usize) -> Result<()> {
        if self.kappa.len() != m || self.nu.len() != m || self.phi.len() != m || self.xi.len() != m {
            return Err(Error::ShapeError(format!("loss model inconsistent with m = {m}")));
        }
        if self.kappa.iter().chain(&self.nu).any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidInput("transmissions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// `U^lossy_ij = e^{iφ_i}√κ_i √λ_i α_ij e^{iθ_ij} √μ_j √ν_j e^{iξ_j}`.
pub fn assemble_lossy_matrix(params: &RepresentativeParams, loss: &LossModel) -> Result<ComplexMatrix> {
    loss.check(params.m)?;
    let u = params.assemble();
    Ok(ComplexMatrix::from_fn(params.m, params.m, |i, j| {
        C64::from_polar((loss.kappa[i] * loss.nu[j]).sqrt(), loss.phi[i] + loss.xi[j]) * u[(i, j)]
    }))
}

/// `P_ij = |U^lossy_ij|²` for 1-based output `i` and input `j`.
pub fn single_photon_probability(lossy: &ComplexMatrix, i: usize, j: usize) -> Result<f64> {
    if i == 0 || j == 0 || i > lossy.rows() || j > lossy.cols() {
        return Err(Error::PortError(format!("ports ({i}, {j}) outside 1..={}", lossy.rows())));
    }
    Ok(lossy[(i - 1, j - 1)].norm_sqr())
}

/// Sampled real nonnegative spectral amplitude `f(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    omega: Vec<f64>,
    values: Vec<f64>,
}

impl SpectralFunction {
    /// Validates the grid (strictly increasing, positive, ≥ 2 points) and the samples (finite, ≥ 0).
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() || omega.len() < 2 {
            return Err(Error::ShapeError("spectrum needs at least two aligned samples".into()));
        }
        if omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("frequency grid must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("spectral amplitudes must be finite and nonnegative".into()));
        }
        Ok(Self { omega, values })
    }

    /// Frequency grid.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Amplitudes on the grid.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid weights of the grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.omega)
    }

    /// `∫ f² dω` by the trapezoid rule.
    pub fn norm_sqr(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(w, v)| w * v * v).sum()
    }

    /// Rescales so that `∫ f² dω = 1`; also returns the raw `∫ f² dω`.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("spectrum has zero norm".into()));
        }
        let s = 1.0 / n.sqrt();
        Ok((Self { omega: self.omega.clone(), values: self.values.iter().map(|v| v * s).collect() }, n))
    }

    /// Linear interpolation (zero outside the grid).
    pub fn value_at(&self, w: f64) -> f64 {
        if w < self.omega[0] || w > *self.omega.last().expect("nonempty") {
            return 0.0;
        }
        let k = self.omega.partition_point(|&x| x <= w).min(self.omega.len() - 1).max(1);
        let (w0, w1) = (self.omega[k - 1], self.omega[k]);
        let (f0, f1) = (self.values[k - 1], self.values[k]);
        f0 + (f1 - f0) * (w - w0) / (w1 - w0)
    }

    /// Mean and standard deviation of the power spectrum `f²` (normalized).
    pub fn power_moments(&self) -> (f64, f64) {
        let w = self.weights();
        let p: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        let z: f64 = w.iter().zip(&p).map(|(a, b)| a * b).sum();
        let mean: f64 = w.iter().zip(&p).zip(&self.omega).map(|((a, b), o)| a * b * o).sum::<f64>() / z;
        let var: f64 =
            w.iter().zip(&p).zip(&self.omega).map(|((a, b), o)| a * b * (o - mean).powi(2)).sum::<f64>() / z;
        (mean, var.sqrt())
    }

    /// Gaussian amplitude on the same grid whose power spectrum has the same mean and variance.
    pub fn gaussian_moment_matched(&self) -> Result<Self> {
        let (mean, sd) = self.power_moments();
        if !(sd > 0.0) {
            return Err(Error::InvalidInput("spectrum has zero width".into()));
        }
        let vals = self.omega.iter().map(|o| (-(o - mean).powi(2) / (4.0 * sd * sd)).exp()).collect();
        Self::new(self.omega.clone(), vals)?.normalized().map(|(s, _)| s)
    }

    /// Gaussian amplitude with power-spectrum mean `center` and standard deviation `sd`,
    /// sampled on `n` points over `center ± 8·sd` and normalized.
    pub fn gaussian(center: f64, sd: f64, n: usize) -> Result<Self> {
        let lo = center - 8.0 * sd;
        let hi = center + 8.0 * sd;
        let omega: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let vals = omega.iter().map(|o| (-(o - center).powi(2) / (4.0 * sd * sd)).exp()).collect();
        Self::new(omega, vals)?.normalized().map(|(s, _)| s)
    }

    /// The bundled asymmetric double-peak spectrum: two Gaussian lobes of
    /// unequal weight and width (power-spectrum centres 9.2 and 10.6),
    /// sampled on 401 points over `[5, 15]` and normalized.
    pub fn double_peak_fixture() -> Self {
        let n = 401;
        let omega: Vec<f64> = (0..n).map(|k| 5.0 + 10.0 * k as f64 / (n - 1) as f64).collect();
        let vals = omega
            .iter()
            .map(|&o| {
                let a = (-(o - 9.2f64).powi(2) / (4.0 * 0.35f64.powi(2))).exp();
                let b = 0.55 * (-(o - 10.6f64).powi(2) / (4.0 * 0.6f64.powi(2))).exp();
                a + b
            })
            .collect();
        Self::new(omega, vals).expect("static grid").normalized().expect("nonzero").0
    }
}

/// Trapezoid weights for an increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (grid[k + 1] - grid[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// Precomputed spectral overlap for an ordered pair of input spectra.
///
/// Holds `g(ω) = f_j(ω) f_j'(ω)` with trapezoid weights on the grid of `f_j`
/// (`f_j'` is interpolated onto it) and the non-interference integral
/// `∫f_j² ∫f_j'²`.
#[derive(Clone, Debug)]
pub struct SpectralOverlap {
    omega: Vec<f64>,
    wg: Vec<f64>,
    direct: f64,
    center: f64,
    step: Option<f64>,
}

impl SpectralOverlap {
    /// Builds the overlap kernel for spectra `f` and `f2`.
    pub fn new(f: &SpectralFunction, f2: &SpectralFunction) -> Self {
        let w = f.weights();
        let same_grid = f.omega == f2.omega;
        let wg: Vec<f64> = (0..f.omega.len())
            .map(|k| {
                let g2 = if same_grid { f2.values[k] } else { f2.value_at(f.omega[k]) };
                w[k] * f.values[k] * g2
            })
            .collect();
        let omega = f.omega.clone();
        let n = omega.len();
        let center = 0.5 * (omega[0] + omega[n - 1]);
        let h = (omega[n - 1] - omega[0]) / (n - 1) as f64;
        let uniform = omega.iter().enumerate().all(|(k, &o)| (o - (omega[0] + h * k as f64)).abs() <= 1e-12 * omega[n - 1]);
        Self { omega, wg, direct: f.norm_sqr() * f2.norm_sqr(), center, step: uniform.then_some(h) }
    }

    /// `|G(τ)|²` with `G(τ) = ∫ f_j f_j' e^{iωτ} dω`.
    pub fn kernel(&self, tau: f64) -> f64 {
        self.kernel_with_derivative(tau).0
    }

    /// `|G(τ)|²` together with its delay derivative `2·Re(Ḡ·∂_τG)`.
    ///
    /// The global phase `e^{iω_c τ}` is factored out (it cancels in the modulus);
    /// on uniform grids the remaining phases are generated by a complex
    /// recurrence instead of one `sin_cos` per sample.
    pub fn kernel_with_derivative(&self, tau: f64) -> (f64, f64) {
        let (mut re, mut im, mut dre, mut dim) = (0.0, 0.0, 0.0, 0.0);
        match self.step {
            Some(h) => {
                let (s0, c0) = ((self.omega[0] - self.center) * tau).sin_cos();
                let (sr, cr) = (h * tau).sin_cos();
                let (mut zr, mut zi) = (c0, s0);
                for (k, wg) in self.wg.iter().enumerate() {
                    let d = self.omega[0] - self.center + h * k as f64;
                    re += wg * zr;
                    im += wg * zi;
                    dre -= wg * d * zi;
                    dim += wg * d * zr;
                    let nr = zr * cr - zi * sr;
                    zi = zr * sr + zi * cr;
                    zr = nr;
                }
            }
            None => {
                for (o, wg) in self.omega.iter().zip(&self.wg) {
                    let d = o - self.center;
                    let (s, c) = (d * tau).sin_cos();
                    re += wg * c;
                    im += wg * s;
                    dre -= wg * d * s;
                    dim += wg * d * c;
                }
            }
        }
        (re * re + im * im, 2.0 * (re * dre + im * dim))
    }

    /// `∫f_j² dω · ∫f_j'² dω`.
    pub fn direct(&self) -> f64 {
        self.direct
    }
}

/// Delay-sampled coincidence curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceCurve {
    /// Delays.
    pub tau: Vec<f64>,
    /// Coincidence probabilities or counts at each delay.
    pub values: Vec<f64>,
}

impl CoincidenceCurve {
    /// Validates alignment and finiteness.
    pub fn new(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() != values.len() || tau.is_empty() {
            return Err(Error::ShapeError("curve grids misaligned or empty".into()));
        }
        if tau.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("curve contains non-finite values".into()));
        }
        Ok(Self { tau, values })
    }
}

/// Output pair `(i, i')` and input pair `(j, j')`, 1-based.
pub type PortTuple = [usize; 4];

/// Prefactors of a coincidence curve, `C(τ) = base + amp·|G(τ)|²`.
///
/// `base = D·(α_ij²α_i'j'² + α_ij'²α_i'j²)·∫f²∫f'²` and
/// `amp = 2γ·D·α_ij α_ij' α_i'j α_i'j'·cos φ`, with
/// `D = κ_iκ_i'ν_jν_j'λ_iλ_i'μ_jμ_j'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceTerms {
    /// Non-interfering contribution.
    pub base: f64,
    /// Interference amplitude multiplying `|G(τ)|²`.
    pub amp: f64,
}

fn check_ports(m: usize, ports: PortTuple) -> Result<()> {
    let [i, i2, j, j2] = ports;
    if ports.iter().any(|&p| p == 0 || p > m) {
        return Err(Error::PortError(format!("ports {ports:?} outside 1..={m}")));
    }
    if i == i2 || j == j2 {
        return Err(Error::PortError(format!("coincidence needs distinct ports, got {ports:?}")));
    }
    Ok(())
}

/// Computes the coincidence prefactors for `ports`.
pub fn coincidence_terms(
    params: &RepresentativeParams,
    loss: &LossModel,
    gamma: f64,
    overlap: &SpectralOverlap,
    ports: PortTuple,
) -> Result<CoincidenceTerms> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    loss.check(params.m)?;
    check_ports(params.m, ports)?;
    let [i, i2, j, j2] = ports.map(|p| p - 1);
    let dress = loss.kappa[i]
        * loss.kappa[i2]
        * loss.nu[j]
        * loss.nu[j2]
        * params.lambda[i]
        * params.lambda[i2]
        * params.mu[j]
        * params.mu[j2];
    let (a, b, c, d) = (params.a(i, j), params.a(i, j2), params.a(i2, j), params.a(i2, j2));
    let phase = params.t(i, j) - params.t(i, j2) - params.t(i2, j) + params.t(i2, j2);
    Ok(CoincidenceTerms {
        base: dress * (a * a * d * d + b * b * c * c) * overlap.direct(),
        amp: 2.0 * gamma * dress * a * b * c * d * phase.cos(),
    })
}

/// Two-photon coincidence probability at delay `tau` for photons entering `j, j'`
/// (spectra `f_j`, `f_j2`) and detected at `i, i'`.
#[allow(clippy::too_many_arguments)]
pub fn coincidence_probability(
    params: &RepresentativeParams,
    loss: &LossModel,
    gamma: f64,
    f_j: &SpectralFunction,
    f_j2: &SpectralFunction,
    ports: PortTuple,
    tau: f64,
) -> Result<f64> {
    let ov = SpectralOverlap::new(f_j, f_j2);
    let t = coincidence_terms(params, loss, gamma, &ov, ports)?;
    Ok((t.base + t.amp * ov.kernel(tau)).max(0.0))
}

/// Vectorized [`coincidence_probability`] over a delay grid.
#[allow(clippy::too_many_arguments)]
pub fn curve_over_grid(
    params: &RepresentativeParams,
    loss: &LossModel,
    gamma: f64,
    f_j: &SpectralFunction,
    f_j2: &SpectralFunction,
    ports: PortTuple,
    tau_grid: &[f64],
) -> Result<CoincidenceCurve> {
    let ov = SpectralOverlap::new(f_j, f_j2);
    let t = coincidence_terms(params, loss, gamma, &ov, ports)?;
    let values = tau_grid.iter().map(|&tau| (t.base + t.amp * ov.kernel(tau)).max(0.0)).collect();
    CoincidenceCurve::new(tau_grid.to_vec(), values)
}

/// Representative parameters of a lossless beam splitter `[[cos ϑ, sin ϑ], [sin ϑ, −cos ϑ]]`.
pub fn beam_splitter_params(vartheta: f64) -> Result<RepresentativeParams> {
    let (s, c) = vartheta.sin_cos();
    let u = ComplexMatrix::new(2, 2, vec![C64::new(c, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-c, 0.0)])?;
    RepresentativeParams::from_unitary(&u)
}

/// Dip visibility of a lossless beam splitter with reflectivity angle `ϑ`:
/// `V = 2γ cos²ϑ sin²ϑ / (cos⁴ϑ + sin⁴ϑ)`.
pub fn beam_splitter_visibility(vartheta: f64, gamma: f64) -> f64 {
    let (s, c) = vartheta.sin_cos();
    2.0 * gamma * c * c * s * s / (c.powi(4) + s.powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::haar_random_unitary;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn gauss() -> SpectralFunction {
        SpectralFunction::gaussian(10.0, 1.0, 301).unwrap()
    }

    /// Oracle: literal 2-D trapezoid evaluation of the coincidence integral.
    fn brute_force(
        p: &RepresentativeParams,
        gamma: f64,
        f: &SpectralFunction,
        f2: &SpectralFunction,
        ports: PortTuple,
        tau: f64,
    ) -> f64 {
        let [i, i2, j, j2] = ports.map(|x| x - 1);
        let w = f.weights();
        let g: Vec<f64> = f.omega().iter().map(|&o| f.value_at(o) * f2.value_at(o)).collect();
        let phase = p.t(i, j) - p.t(i, j2) - p.t(i2, j) + p.t(i2, j2);
        let n = f.omega().len();
        let mut inter = 0.0;
        let mut direct = 0.0;
        for a in 0..n {
            for b in 0..n {
                let (o1, o2) = (f.omega()[a], f.omega()[b]);
                inter += w[a] * w[b] * g[a] * g[b] * ((o2 - o1) * tau + phase).cos();
                direct += w[a] * w[b] * (f.value_at(o1) * f2.value_at(o2)).powi(2);
            }
        }
        let d = p.lambda[i] * p.lambda[i2] * p.mu[j] * p.mu[j2];
        let (aa, bb, cc, dd) = (p.a(i, j), p.a(i, j2), p.a(i2, j), p.a(i2, j2));
        d * ((aa * aa * dd * dd + bb * bb * cc * cc) * direct + 2.0 * gamma * aa * bb * cc * dd * inter)
    }

    #[test]
    fn params_round_trip() {
        let u = haar_random_unitary(4, 3).unwrap();
        let p = RepresentativeParams::from_unitary(&u).unwrap();
        let w = canonicalize_representative(&u).unwrap();
        assert!(p.assemble().max_abs_diff(&w) < 1e-14);
        assert!(assemble_lossy_matrix(&p, &LossModel::lossless(4)).unwrap().max_abs_diff(&w) < 1e-14);
    }

    #[test]
    fn lossy_matrix_examples() {
        let u = haar_random_unitary(3, 8).unwrap();
        let p = RepresentativeParams::from_unitary(&u).unwrap();
        let loss = LossModel {
            kappa: vec![0.9, 0.0, 0.5],
            nu: vec![0.7, 1.0, 0.3],
            phi: vec![0.1, 0.2, 0.3],
            xi: vec![-1.0, 2.0, 0.5],
        };
        let l = assemble_lossy_matrix(&p, &loss).unwrap();
        assert!((0..3).all(|j| l[(1, j)].norm() == 0.0));
        for i in 0..3 {
            for j in 0..3 {
                let want = loss.kappa[i] * p.lambda[i] * p.a(i, j).powi(2) * p.mu[j] * loss.nu[j];
                assert!((single_photon_probability(&l, i + 1, j + 1).unwrap() - want).abs() < 1e-14);
            }
        }
        assert!(matches!(single_photon_probability(&l, 4, 1), Err(Error::PortError(_))));
        assert!(matches!(assemble_lossy_matrix(&p, &LossModel::lossless(2)), Err(Error::ShapeError(_))));
    }

    #[test]
    fn single_photon_examples() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(single_photon_probability(&id, 2, 2).unwrap(), 1.0);
        assert_eq!(single_photon_probability(&id, 1, 2).unwrap(), 0.0);
        let b = crate::csd::balanced_beam_splitter();
        for i in 1..=2 {
            for j in 1..=2 {
                assert!((single_photon_probability(&b, i, j).unwrap() - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hom_dip_and_visibility() {
        let f = gauss();
        let p = beam_splitter_params(FRAC_PI_4).unwrap();
        let loss = LossModel::lossless(2);
        let at0 = coincidence_probability(&p, &loss, 1.0, &f, &f, [1, 2, 1, 2], 0.0).unwrap();
        assert!(at0.abs() < 1e-14, "{at0}");
        for &(theta, gamma) in &[(FRAC_PI_4, 1.0), (FRAC_PI_4, 0.8), (0.6, 0.9), (1.1, 0.5)] {
            let p = beam_splitter_params(theta).unwrap();
            let c0 = coincidence_probability(&p, &loss, gamma, &f, &f, [1, 2, 1, 2], 0.0).unwrap();
            let cinf = coincidence_probability(&p, &loss, gamma, &f, &f, [1, 2, 1, 2], 60.0).unwrap();
            let v = (cinf - c0) / cinf;
            assert!((v - beam_splitter_visibility(theta, gamma)).abs() < 1e-9, "{v}");
        }
        assert!((beam_splitter_visibility(FRAC_PI_4, 0.7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_is_flat_and_gamma_checked() {
        let f = gauss();
        let u = haar_random_unitary(3, 4).unwrap();
        let p = RepresentativeParams::from_unitary(&u).unwrap();
        let c = curve_over_grid(&p, &LossModel::lossless(3), 0.0, &f, &f, [1, 3, 2, 3], &[-2.0, 0.0, 1.0, 5.0])
            .unwrap();
        assert!(c.values.iter().all(|v| (v - c.values[0]).abs() < 1e-15));
        assert!(matches!(
            coincidence_probability(&p, &LossModel::lossless(3), 1.2, &f, &f, [1, 2, 1, 2], 0.0),
            Err(Error::InvalidGamma(_))
        ));
        assert!(matches!(
            coincidence_probability(&p, &LossModel::lossless(3), 1.0, &f, &f, [1, 1, 1, 2], 0.0),
            Err(Error::PortError(_))
        ));
    }

    #[test]
    fn factorized_quadrature_matches_double_sum() {
        let f = SpectralFunction::gaussian(10.0, 1.0, 81).unwrap();
        let f2 = SpectralFunction::double_peak_fixture();
        let u = haar_random_unitary(3, 12).unwrap();
        let p = RepresentativeParams::from_unitary(&u).unwrap();
        for &tau in &[0.0, 0.3, -1.2, 4.0] {
            let fast = coincidence_probability(&p, &LossModel::lossless(3), 0.93, &f, &f2, [2, 3, 1, 3], tau).unwrap();
            let f2_on_f = SpectralFunction::new(f.omega().to_vec(), f.omega().iter().map(|&o| f2.value_at(o)).collect())
                .unwrap();
            let slow = brute_force(&p, 0.93, &f, &f2_on_f, [2, 3, 1, 3], tau);
            assert!((fast - slow).abs() < 1e-12, "{fast} {slow}");
        }
    }

    #[test]
    fn curve_single_point_and_symmetry() {
        let f = gauss();
        let u = haar_random_unitary(3, 21).unwrap();
        let p = RepresentativeParams::from_unitary(&u).unwrap();
        let loss = LossModel::lossless(3);
        let c = curve_over_grid(&p, &loss, 0.9, &f, &f, [1, 2, 2, 3], &[0.37]).unwrap();
        assert_eq!(c.values[0], coincidence_probability(&p, &loss, 0.9, &f, &f, [1, 2, 2, 3], 0.37).unwrap());
        let taus: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.3).collect();
        let c = curve_over_grid(&p, &loss, 0.9, &f, &f, [1, 2, 2, 3], &taus).unwrap();
        for k in 0..taus.len() {
            assert!((c.values[k] - c.values[taus.len() - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn dip_width_scales_inversely_with_bandwidth() {
        let p = beam_splitter_params(FRAC_PI_4).unwrap();
        let loss = LossModel::lossless(2);
        let half_width = |sd: f64| {
            let f = SpectralFunction::gaussian(30.0, sd, 401).unwrap();
            // Delay at which the dip has recovered half-way.
            let mut t = 0.0;
            while coincidence_probability(&p, &loss, 1.0, &f, &f, [1, 2, 1, 2], t).unwrap() < 0.25 {
                t += 1e-3;
            }
            t
        };
        let r = half_width(1.0) / half_width(2.0);
        assert!((r - 2.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn moment_matched_gaussian() {
        let f = SpectralFunction::double_peak_fixture();
        let g = f.gaussian_moment_matched().unwrap();
        let (m1, s1) = f.power_moments();
        let (m2, s2) = g.power_moments();
        assert!((m1 - m2).abs() < 1e-6 && (s1 - s2).abs() < 1e-6);
        assert!((g.norm_sqr() - 1.0).abs() < 1e-12 && (f.norm_sqr() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn prop_nonnegative(seed in any::<u64>(), gamma in 0.0f64..=1.0, tau in -5.0f64..5.0) {
            let u = haar_random_unitary(3, seed).unwrap();
            let p = RepresentativeParams::from_unitary(&u).unwrap();
            let f = SpectralFunction::gaussian(10.0, 1.0, 41).unwrap();
            let c = coincidence_probability(&p, &LossModel::lossless(3), gamma, &f, &f, [1, 3, 2, 3], tau).unwrap();
            prop_assert!(c >= 0.0);
        }
    }

    #[test]
    fn kernel_recurrence_matches_direct_phases_and_derivative() {
        let f = SpectralFunction::double_peak_fixture();
        let ov = SpectralOverlap::new(&f, &f);
        let w = f.weights();
        for &tau in &[-7.3, -1.1, 0.0, 0.4, 2.9, 11.0] {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..w.len() {
                let (s, c) = (f.omega()[k] * tau).sin_cos();
                re += w[k] * f.values()[k] * f.values()[k] * c;
                im += w[k] * f.values()[k] * f.values()[k] * s;
            }
            let (k, dk) = ov.kernel_with_derivative(tau);
            assert!((k - (re * re + im * im)).abs() < 1e-12, "tau {tau}");
            let h = 1e-5;
            let fd = (ov.kernel(tau + h) - ov.kernel(tau - h)) / (2.0 * h);
            assert!((dk - fd).abs() < 1e-7, "tau {tau}: {dk} vs {fd}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]

        #[test]
        fn prop_scale_invariance(s in 0.5f64..3.0, tau in -3.0f64..3.0, seed in any::<u64>()) {
            let f = SpectralFunction::double_peak_fixture();
            let fs = SpectralFunction::new(
                f.omega().iter().map(|o| o * s).collect(),
                f.values().iter().map(|v| v / s.sqrt()).collect(),
            ).unwrap();
            let u = haar_random_unitary(3, seed).unwrap();
            let p = RepresentativeParams::from_unitary(&u).unwrap();
            let loss = LossModel::lossless(3);
            let a = coincidence_probability(&p, &loss, 0.9, &f, &f, [1, 2, 1, 3], tau).unwrap();
            let b = coincidence_probability(&p, &loss, 0.9, &fs, &fs, [1, 2, 1, 3], tau / s).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn prop_theta_sign_flip_invariance(seed in any::<u64>(), tau in -3.0f64..3.0) {
            let f = gauss();
            let u = haar_random_unitary(3, seed).unwrap();
            let p = RepresentativeParams::from_unitary(&u).unwrap();
            let mut q = p.clone();
            q.theta.iter_mut().for_each(|t| *t = -*t);
            let loss = LossModel::lossless(3);
            let a = coincidence_probability(&p, &loss, 1.0, &f, &f, [2, 3, 2, 3], tau).unwrap();
            let b = coincidence_probability(&q, &loss, 1.0, &f, &f, [2, 3, 2, 3], tau).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}
