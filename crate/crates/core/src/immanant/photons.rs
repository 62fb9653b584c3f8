//! Coincidence probabilities of three partially distinguishable photons.
//!
//! Photon `j` enters input `j` of a network with transfer matrix `U`
//! (`U_{jk}`: input `j` → output `k`), delayed by `τ_j`. Every photon has
//! the same spectral amplitude `φ(ω)`. The amplitude for one photon at each
//! of outputs 1, 2, 3 with frequencies `ω_1, ω_2, ω_3` is
//!
//! `ψ(ω) = Σ_σ Π_j U_{jσ(j)} φ(ω_{σ(j)}) e^{iω_{σ(j)}τ_j}`,
//!
//! and the coincidence probability is `℘ = ∫|ψ|² d³ω`. Expanding the square,
//!
//! `℘ = Σ_{σ,σ'} P_σ P*_{σ'} Π_k F(τ_{σ⁻¹(k)} − τ_{σ'⁻¹(k)})`,
//!
//! where `P_σ = Π_j U_{jσ(j)}` and `F(Δ) = ∫|φ|² e^{iωΔ} dω`. For a Gaussian
//! power spectrum of standard deviation `σ_ω`, `|F(Δ)| = e^{−σ_ω²Δ²/2}`; the
//! carrier phases cancel because `Σ_k Δ_k = 0` for every pair of terms.
//!
//! `U` need not be unitary: the 3×3 submatrix of a larger interferometer
//! gives the coincidence probability for those three inputs and outputs.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::photonic::SpectralFunction;

/// The six permutations of `{0, 1, 2}` as images `σ(j)`.
const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn check_3x3(u: &ComplexMatrix) -> Result<()> {
    if u.rows() != 3 || u.cols() != 3 {
        return Err(Error::ShapeError(format!("expected a 3×3 matrix, got {}×{}", u.rows(), u.cols())));
    }
    Ok(())
}

fn check_width(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("spectral width must be finite and nonnegative, got {sigma}")));
    }
    Ok(())
}

fn check_delays(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("delays must be finite".into()));
    }
    Ok(())
}

fn term(u: &ComplexMatrix, p: &[usize; 3]) -> C64 {
    u[(0, p[0])] * u[(1, p[1])] * u[(2, p[2])]
}

/// Inverse permutation: the input that feeds output `k`.
fn inverse(p: &[usize; 3]) -> [usize; 3] {
    let mut inv = [0; 3];
    for (j, &k) in p.iter().enumerate() {
        inv[k] = j;
    }
    inv
}

/// The three partial sums of the permanent grouped by the output of photon 1:
/// `A = U11(U22U33 + U23U32)`, `B = U12(U21U33 + U23U31)`,
/// `C = U13(U22U31 + U21U32)`, so that `A + B + C = per U`.
pub fn abc_matrix_elements(u: &ComplexMatrix) -> Result<(C64, C64, C64)> {
    check_3x3(u)?;
    let a = u[(0, 0)] * (u[(1, 1)] * u[(2, 2)] + u[(1, 2)] * u[(2, 1)]);
    let b = u[(0, 1)] * (u[(1, 0)] * u[(2, 2)] + u[(1, 2)] * u[(2, 0)]);
    let c = u[(0, 2)] * (u[(1, 1)] * u[(2, 0)] + u[(1, 0)] * u[(2, 1)]);
    Ok((a, b, c))
}

/// Coincidence probability when only photon 1 is delayed, by `tau`, for a
/// Gaussian power spectrum of standard deviation `sigma`:
///
/// `℘(τ) = |A|² + |B|² + |C|² + e^{−σ²τ²}[(A*+B*)C + (A*+C*)B + (B*+C*)A]`.
///
/// At `τ = 0` this is `|per U|²`; for `|τ| → ∞` it tends to the
/// distinguishable-photon value `|A|² + |B|² + |C|²`.
pub fn delayed_photon_coincidence(u: &ComplexMatrix, tau: f64, sigma: f64) -> Result<f64> {
    check_width(sigma)?;
    check_delays(&[tau])?;
    let (a, b, c) = abc_matrix_elements(u)?;
    let e = (-(sigma * tau).powi(2)).exp();
    let cross = (a.conj() + b.conj()) * c + (a.conj() + c.conj()) * b + (b.conj() + c.conj()) * a;
    Ok(a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + e * cross.re)
}

/// Closed-form coincidence probability for arbitrary delays `taus` (photon
/// `j` delayed by `taus[j]`) and a Gaussian power spectrum of standard
/// deviation `sigma`, summing all 36 pairs of permutations.
pub fn three_photon_coincidence(u: &ComplexMatrix, taus: [f64; 3], sigma: f64) -> Result<f64> {
    check_3x3(u)?;
    check_width(sigma)?;
    check_delays(&taus)?;
    let overlap = |d: f64| C64::new((-0.5 * (sigma * d).powi(2)).exp(), 0.0);
    Ok(double_sum(u, taus, overlap))
}

/// Coincidence probability for a sampled spectral amplitude, with
/// `F(Δ) = ∫ f² e^{iωΔ} dω / ∫ f² dω` evaluated by the trapezoid rule on the
/// spectrum's grid.
pub fn three_photon_coincidence_spectrum(u: &ComplexMatrix, taus: [f64; 3], f: &SpectralFunction) -> Result<f64> {
    check_3x3(u)?;
    check_delays(&taus)?;
    let w = f.weights();
    let power: Vec<f64> = w.iter().zip(f.values()).map(|(w, v)| w * v * v).collect();
    let z: f64 = power.iter().sum();
    if !(z > 0.0) {
        return Err(Error::InvalidInput("spectrum has zero norm".into()));
    }
    let overlap = |d: f64| -> C64 {
        power.iter().zip(f.omega()).map(|(p, o)| C64::from_polar(*p, o * d)).sum::<C64>() / z
    };
    Ok(double_sum(u, taus, overlap))
}

fn double_sum(u: &ComplexMatrix, taus: [f64; 3], overlap: impl Fn(f64) -> C64) -> f64 {
    let mut total = C64::new(0.0, 0.0);
    for p in &PERMS3 {
        let (tp, ip) = (term(u, p), inverse(p));
        for q in &PERMS3 {
            let iq = inverse(q);
            let f: C64 = (0..3).map(|k| overlap(taus[ip[k]] - taus[iq[k]])).product();
            total += tp * term(u, q).conj() * f;
        }
    }
    total.re
}

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} g(x) dx ≈ Σ w_k g(x_k)`,
/// by Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidInput("at least one quadrature node is needed".into()));
    }
    // π^{−1/4}
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericalFailure(format!("Gauss–Hermite root {i} of {n} did not converge")));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Independent evaluation of the Gaussian coincidence probability: integrates
/// `|ψ(ω)|²` directly over a `nodes³` Gauss–Hermite tensor grid, with the
/// power spectrum `N(0, sigma²)` folded into the weights.
pub fn three_photon_quadrature(u: &ComplexMatrix, taus: [f64; 3], sigma: f64, nodes: usize) -> Result<f64> {
    check_3x3(u)?;
    check_width(sigma)?;
    check_delays(&taus)?;
    let (x, w) = gauss_hermite(nodes)?;
    let omega: Vec<f64> = x.iter().map(|x| std::f64::consts::SQRT_2 * sigma * x).collect();
    let weight: Vec<f64> = w.iter().map(|w| w / std::f64::consts::PI.sqrt()).collect();
    let terms: Vec<(C64, [usize; 3])> = PERMS3.iter().map(|p| (term(u, p), inverse(p))).collect();
    let mut total = 0.0;
    for (a, &w1) in omega.iter().zip(&weight) {
        for (b, &w2) in omega.iter().zip(&weight) {
            for (c, &w3) in omega.iter().zip(&weight) {
                let freq = [*a, *b, *c];
                let psi: C64 = terms
                    .iter()
                    .map(|(t, inv)| {
                        let phase: f64 = (0..3).map(|k| freq[k] * taus[inv[k]]).sum();
                        t * C64::from_polar(1.0, phase)
                    })
                    .sum();
                total += w1 * w2 * w3 * psi.norm_sqr();
            }
        }
    }
    Ok(total)
}
