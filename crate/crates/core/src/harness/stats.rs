use serde::Serialize;
use statrs::distribution::{Continuous, Normal};

use crate::error::{Error, Result};

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    /// Samples outside [lo, hi).
    pub outside: usize,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        let mut outside = 0;
        let w = (hi - lo) / bins as f64;
        for &x in samples {
            let k = ((x - lo) / w).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            } else {
                outside += 1;
            }
        }
        Self { lo, hi, counts, outside }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + k as f64 * w, self.lo + (k + 1) as f64 * w)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.outside
    }
}

/// Three-component Gaussian mixture with a shared variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixtureFit {
    pub weights: [f64; 3],
    pub means: [f64; 3],
    pub variance: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
}

/// Expectation-maximization fit started from the given guess.
pub fn fit_mixture(xs: &[f64], weights: [f64; 3], means: [f64; 3], variance: f64) -> Result<MixtureFit> {
    if xs.len() < 3 {
        return Err(Error::InvalidParams("mixture fit needs at least 3 samples".into()));
    }
    let n = xs.len() as f64;
    let mut fit = MixtureFit { weights, means, variance, iterations: 0, log_likelihood: f64::NEG_INFINITY };
    let mut resp = vec![[0.0; 3]; xs.len()];
    for it in 1..=500 {
        let sd = fit.variance.sqrt();
        let comps: Vec<Normal> = fit.means.iter().map(|m| Normal::new(*m, sd).expect("positive variance")).collect();
        let mut ll = 0.0;
        for (x, r) in xs.iter().zip(resp.iter_mut()) {
            // log-sum-exp over components
            let l: Vec<f64> = (0..3).map(|k| fit.weights[k].ln() + comps[k].ln_pdf(*x)).collect();
            let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = l.iter().map(|v| (v - m).exp()).sum();
            let lse = m + s.ln();
            ll += lse;
            for k in 0..3 {
                r[k] = (l[k] - lse).exp();
            }
        }
        let mut nk = [0.0; 3];
        let mut mk = [0.0; 3];
        for (x, r) in xs.iter().zip(&resp) {
            for k in 0..3 {
                nk[k] += r[k];
                mk[k] += r[k] * x;
            }
        }
        for k in 0..3 {
            fit.weights[k] = (nk[k] / n).max(1e-12);
            if nk[k] > 0.0 {
                fit.means[k] = mk[k] / nk[k];
            }
        }
        let mut v = 0.0;
        for (x, r) in xs.iter().zip(&resp) {
            for k in 0..3 {
                v += r[k] * (x - fit.means[k]).powi(2);
            }
        }
        fit.variance = (v / n).max(1e-300);
        fit.iterations = it;
        let done = (ll - fit.log_likelihood).abs() < 1e-10 * ll.abs().max(1.0);
        fit.log_likelihood = ll;
        if done {
            break;
        }
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal as RNormal};

    #[test]
    fn wilson_contains_proportion() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - lo - 0.19).abs() < 0.01);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }

    #[test]
    fn histogram_counts() {
        let h = Histogram::new(&[0.1, 0.2, 0.9, 1.5, -0.1], 0.0, 1.0, 2);
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.outside, 2);
        assert_eq!(h.total(), 5);
    }

    #[test]
    fn mixture_recovers_parameters() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (lam, n) = (10.0, 40_000);
        let sd = (2.0 * lam as f64).sqrt();
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let m = match i % 4 {
                    0 => -2.0 * lam,
                    3 => 2.0 * lam,
                    _ => 0.0,
                };
                RNormal::new(m, sd).unwrap().sample(&mut rng)
            })
            .collect();
        let f = fit_mixture(&xs, [0.3, 0.4, 0.3], [-15.0, 1.0, 15.0], 30.0).unwrap();
        assert!((f.means[2] - 20.0).abs() < 0.3, "{f:?}");
        assert!((f.means[0] + 20.0).abs() < 0.3);
        assert!((f.variance / 20.0 - 1.0).abs() < 0.05);
        assert!((f.weights[1] - 0.5).abs() < 0.02);
        assert!((variance(&xs) - (20.0 + 0.5 * 400.0)).abs() < 10.0);
    }
}
