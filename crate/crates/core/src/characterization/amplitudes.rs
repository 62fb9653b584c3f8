//! Amplitude ratios from repeated single-photon counts.

use super::Diagnostic;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Counts `N_ijb` for output `i`, input `j`, repetition `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleCounts {
    m: usize,
    repetitions: usize,
    data: Vec<u64>,
}

impl SingleCounts {
    /// Wraps `data` laid out as `[(i·m + j)·B + b]` (0-based).
    pub fn new(m: usize, repetitions: usize, data: Vec<u64>) -> Result<Self> {
        if m == 0 || repetitions == 0 {
            return Err(Error::InvalidDimension("mode count and repetitions must be positive".into()));
        }
        if data.len() != m * m * repetitions {
            return Err(Error::ShapeError(format!(
                "expected {} counts for m = {m}, B = {repetitions}, got {}",
                m * m * repetitions,
                data.len()
            )));
        }
        Ok(Self { m, repetitions, data })
    }

    /// All-zero counts.
    pub fn zeros(m: usize, repetitions: usize) -> Self {
        Self { m, repetitions, data: vec![0; m * m * repetitions] }
    }

    /// Mode count.
    pub fn modes(&self) -> usize {
        self.m
    }

    /// Repetitions `B`.
    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// `N_ijb` with 1-based `i, j, b`.
    pub fn get(&self, i: usize, j: usize, b: usize) -> u64 {
        self.data[self.index(i, j, b)]
    }

    /// Sets `N_ijb` (1-based).
    pub fn set(&mut self, i: usize, j: usize, b: usize, value: u64) {
        let k = self.index(i, j, b);
        self.data[k] = value;
    }

    /// Adds to `N_ijb` (1-based).
    pub fn add(&mut self, i: usize, j: usize, b: usize, value: u64) {
        let k = self.index(i, j, b);
        self.data[k] += value;
    }

    /// Raw layout.
    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    /// New counts where input `j`'s repetition `b` is replaced by repetition
    /// `picks[j−1][b−1]` of the same input (whole runs are resampled together).
    pub fn resampled(&self, picks: &[Vec<usize>]) -> Self {
        let mut out = self.clone();
        for j in 1..=self.m {
            for b in 1..=self.repetitions {
                let src = picks[j - 1][b - 1];
                for i in 1..=self.m {
                    out.set(i, j, b, self.get(i, j, src));
                }
            }
        }
        out
    }

    fn index(&self, i: usize, j: usize, b: usize) -> usize {
        assert!(
            (1..=self.m).contains(&i) && (1..=self.m).contains(&j) && (1..=self.repetitions).contains(&b),
            "count index ({i}, {j}, {b}) out of range"
        );
        ((i - 1) * self.m + (j - 1)) * self.repetitions + (b - 1)
    }
}

/// Amplitude estimates `α̃_ij` and their spreads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEstimate {
    /// Mode count.
    pub m: usize,
    /// `α̃_ij` (row-major, 0-based storage).
    pub alpha: Vec<f64>,
    /// Standard deviation of the ratio set behind each `α̃_ij`.
    pub sigma: Vec<f64>,
}

impl AmplitudeEstimate {
    /// `α̃_ij` with 1-based indices.
    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[(i - 1) * self.m + (j - 1)]
    }

    /// `σ(α̃_ij)` with 1-based indices.
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i - 1) * self.m + (j - 1)]
    }
}

/// Estimates `α_ij` as the mean over all repetition pairs `(b₁, b_j)` of
/// `√(N_11b₁ N_ijb_j / (N_1jb_j N_i1b₁))`, with the standard deviation of
/// the same set.
///
/// The ratio separates into `x_b₁ = √(N_11b₁/N_i1b₁)` and
/// `y_bj = √(N_ijbj/N_1jbj)`, and the pair set is the outer product of the
/// two, so its mean is `x̄·ȳ` and its second moment `⟨x²⟩⟨y²⟩`; this avoids
/// the `B²` enumeration. The border entries are one by construction.
pub fn estimate_amplitudes(counts: &SingleCounts) -> Result<AmplitudeEstimate> {
    let m = counts.modes();
    let bb = counts.repetitions();
    let mut alpha = vec![1.0; m * m];
    let mut sigma = vec![0.0; m * m];
    for i in 2..=m {
        for j in 2..=m {
            let mut x = Vec::with_capacity(bb);
            let mut y = Vec::with_capacity(bb);
            for b in 1..=bb {
                let den_x = counts.get(i, 1, b);
                if den_x == 0 {
                    return Err(Error::DivisionByZeroCount { output: i, input: 1, repetition: b });
                }
                x.push((counts.get(1, 1, b) as f64 / den_x as f64).sqrt());
                let den_y = counts.get(1, j, b);
                if den_y == 0 {
                    return Err(Error::DivisionByZeroCount { output: 1, input: j, repetition: b });
                }
                y.push((counts.get(i, j, b) as f64 / den_y as f64).sqrt());
            }
            let n = bb as f64;
            let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
            let (sx, sy) = (x.iter().map(|v| v * v).sum::<f64>() / n, y.iter().map(|v| v * v).sum::<f64>() / n);
            let mean = mx * my;
            alpha[(i - 1) * m + (j - 1)] = mean;
            sigma[(i - 1) * m + (j - 1)] = (sx * sy - mean * mean).max(0.0).sqrt();
        }
    }
    Ok(AmplitudeEstimate { m, alpha, sigma })
}

/// Relative change of the (population) standard deviation of `{N_ijb}`
/// between the first `B/2` repetitions and all `B`; entries changing by
/// more than 20% are reported. Skipped for `B < 4`.
pub fn cumulant_check(counts: &SingleCounts) -> Vec<Diagnostic> {
    let bb = counts.repetitions();
    let mut out = Vec::new();
    if bb < 4 {
        return out;
    }
    let sd = |v: &[f64]| {
        let n = v.len() as f64;
        let mu = v.iter().sum::<f64>() / n;
        (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt()
    };
    let m = counts.modes();
    for i in 1..=m {
        for j in 1..=m {
            let v: Vec<f64> = (1..=bb).map(|b| counts.get(i, j, b) as f64).collect();
            let (half, full) = (sd(&v[..bb / 2]), sd(&v));
            let scale = full.max(half);
            if scale > 0.0 {
                let rel = (full - half).abs() / scale;
                if rel > 0.2 {
                    out.push(Diagnostic::CumulantWarning { output: i, input: j, relative_change: rel });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::haar_random_unitary;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    /// Brute-force pair enumeration, the literal form of the estimator.
    fn pairwise_oracle(c: &SingleCounts, i: usize, j: usize) -> (f64, f64) {
        let bb = c.repetitions();
        let mut vals = Vec::new();
        for b1 in 1..=bb {
            for bj in 1..=bb {
                let num = c.get(1, 1, b1) as f64 * c.get(i, j, bj) as f64;
                let den = c.get(1, j, bj) as f64 * c.get(i, 1, b1) as f64;
                vals.push((num / den).sqrt());
            }
        }
        let n = vals.len() as f64;
        let mu = vals.iter().sum::<f64>() / n;
        (mu, (vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt())
    }

    fn random_counts(m: usize, bb: usize, seed: u64) -> SingleCounts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = (0..m * m * bb).map(|_| Poisson::new(500.0).unwrap().sample(&mut rng) as u64 + 1).collect();
        SingleCounts::new(m, bb, d).unwrap()
    }

    #[test]
    fn uniform_counts_give_unit_amplitudes() {
        let c = SingleCounts::new(3, 4, vec![77; 36]).unwrap();
        let a = estimate_amplitudes(&c).unwrap();
        assert!(a.alpha.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(a.sigma.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn direct_evaluation_example() {
        let mut c = SingleCounts::zeros(2, 3);
        for b in 1..=3 {
            c.set(1, 1, b, 400);
            c.set(2, 2, b, 100);
            c.set(1, 2, b, 200);
            c.set(2, 1, b, 200);
        }
        let a = estimate_amplitudes(&c).unwrap();
        assert!((a.alpha(2, 2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_identifies_port_and_repetition() {
        let mut c = SingleCounts::new(2, 3, vec![5; 12]).unwrap();
        c.set(1, 2, 3, 0);
        assert_eq!(
            estimate_amplitudes(&c).unwrap_err(),
            Error::DivisionByZeroCount { output: 1, input: 2, repetition: 3 }
        );
    }

    #[test]
    fn factorized_moments_match_pair_enumeration() {
        let c = random_counts(4, 7, 3);
        let a = estimate_amplitudes(&c).unwrap();
        for i in 2..=4 {
            for j in 2..=4 {
                let (mu, sd) = pairwise_oracle(&c, i, j);
                assert!((a.alpha(i, j) - mu).abs() < 1e-13);
                assert!((a.sigma(i, j) - sd).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn poisson_counts_from_known_unitary_recover_ratios() {
        let u = haar_random_unitary(3, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bb = 20;
        let mut c = SingleCounts::zeros(3, bb);
        for j in 1..=3 {
            for b in 1..=bb {
                for i in 1..=3 {
                    let mean = 1e5 * u[(i - 1, j - 1)].norm_sqr();
                    c.set(i, j, b, Poisson::new(mean).unwrap().sample(&mut rng) as u64);
                }
            }
        }
        let a = estimate_amplitudes(&c).unwrap();
        for i in 2..=3 {
            for j in 2..=3 {
                let truth = u[(i - 1, j - 1)].norm() * u[(0, 0)].norm() / (u[(0, j - 1)].norm() * u[(i - 1, 0)].norm());
                // Spread of the mean over B² correlated pairs is at most the pair spread / √B.
                let err = a.sigma(i, j) / (bb as f64).sqrt();
                assert!((a.alpha(i, j) - truth).abs() < 3.0 * err + 1e-9, "({i},{j}) {} vs {truth}", a.alpha(i, j));
            }
        }
    }

    #[test]
    fn cumulant_warning_fires_on_drift() {
        let mut c = SingleCounts::new(2, 8, vec![100; 32]).unwrap();
        c.set(2, 2, 8, 400);
        let d = cumulant_check(&c);
        assert!(d.iter().any(|x| matches!(x, Diagnostic::CumulantWarning { output: 2, input: 2, .. })));
        let steady = SingleCounts::new(2, 8, vec![100; 32]).unwrap();
        assert!(cumulant_check(&steady).is_empty());
    }

    proptest! {
        #[test]
        fn prop_invariant_under_per_run_rescaling(seed in any::<u64>(), scales in proptest::collection::vec(1u64..6, 12)) {
            let c = random_counts(3, 4, seed);
            let mut s = c.clone();
            for j in 1..=3 {
                for b in 1..=4 {
                    let k = scales[(j - 1) * 4 + (b - 1)];
                    for i in 1..=3 {
                        s.set(i, j, b, c.get(i, j, b) * k);
                    }
                }
            }
            let a = estimate_amplitudes(&c).unwrap();
            let b = estimate_amplitudes(&s).unwrap();
            for k in 0..9 {
                prop_assert!((a.alpha[k] - b.alpha[k]).abs() < 1e-12 * a.alpha[k].max(1.0));
            }
        }
    }
}
