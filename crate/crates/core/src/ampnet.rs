//! Quantum-limited phase-preserving amplifier and heterodyne detection.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-degenerate parametric amplifier below threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifierParams {
    /// Signal port coupling, rad/μs.
    pub kappa_si: f64,
    /// Idler port coupling, rad/μs.
    pub kappa_id: f64,
    /// Pump-induced amplification strength |λ|, rad/μs.
    pub lambda_mag: f64,
    /// Pump phase φ.
    pub phi: f64,
}

impl AmplifierParams {
    pub fn new(kappa_si: f64, kappa_id: f64, lambda_mag: f64, phi: f64) -> Result<Self> {
        let p = Self { kappa_si, kappa_id, lambda_mag, phi };
        p.validate()?;
        Ok(p)
    }

    /// Parameters that realize a given power gain `G ≥ 1` for the given couplings.
    pub fn with_gain(kappa_si: f64, kappa_id: f64, gain: f64, phi: f64) -> Result<Self> {
        if !(gain >= 1.0) || !gain.is_finite() {
            return Err(Error::InvalidParams(format!("power gain {gain} must be finite and ≥ 1")));
        }
        let s = gain.sqrt();
        let kk = kappa_si * kappa_id;
        let lambda_mag = (kk * (s - 1.0) / (s + 1.0) / 4.0).sqrt();
        Self::new(kappa_si, kappa_id, lambda_mag, phi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_si > 0.0) || !(self.kappa_id > 0.0) {
            return Err(Error::InvalidParams("amplifier couplings must be positive".into()));
        }
        if !(self.lambda_mag >= 0.0) || !self.phi.is_finite() {
            return Err(Error::InvalidParams("|λ| must be ≥ 0 and φ finite".into()));
        }
        if 4.0 * self.lambda_mag * self.lambda_mag >= self.kappa_si * self.kappa_id {
            return Err(Error::InvalidParams(
                "amplifier at or above threshold: 4|λ|² ≥ κ_si κ_id".into(),
            ));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_si + self.kappa_id
    }

    pub fn d_kappa(&self) -> f64 {
        (self.kappa_id - self.kappa_si) / self.kappa()
    }

    /// Amplitude gain √G = |g(0)|.
    pub fn sqrt_g(&self) -> f64 {
        let kk = self.kappa_si * self.kappa_id;
        let l4 = 4.0 * self.lambda_mag * self.lambda_mag;
        (kk + l4) / (kk - l4)
    }

    /// Power gain G.
    pub fn gain(&self) -> f64 {
        self.sqrt_g().powi(2)
    }

    /// Amplification bandwidth D, rad/μs.
    pub fn bandwidth(&self) -> f64 {
        self.kappa_si * self.kappa_id / ((self.sqrt_g() + 1.0) * self.kappa())
    }
}

/// Frequency-dependent reflection gain g(ω) at offset `omega` (rad/μs).
pub fn gain_profile(p: &AmplifierParams, omega: f64) -> C64 {
    let d = p.bandwidth();
    let x = omega / d;
    let quad = 2.0 * d / p.kappa() * x * x;
    let num = C64::new(p.sqrt_g() + quad, -p.d_kappa() * x);
    let den = C64::new(-1.0 + quad, -x);
    num / den
}

/// Cross gain h(ω) onto the conjugate of the other port, from the two-mode
/// response: e^{iφ}|λ|√(κ_si κ_id)/((κ_si/2 + iω)(κ_id/2 + iω) − |λ|²).
pub fn cross_gain(p: &AmplifierParams, omega: f64) -> C64 {
    let den = C64::new(p.kappa_si / 2.0, omega) * C64::new(p.kappa_id / 2.0, omega) - p.lambda_mag * p.lambda_mag;
    C64::from_polar(p.lambda_mag * (p.kappa_si * p.kappa_id).sqrt(), p.phi) / den
}

/// Time-local high-gain transform of coherent input amplitudes.
pub fn two_mode_transform(p: &AmplifierParams, a_si_in: C64, a_id_in: C64) -> (C64, C64) {
    let g = p.gain();
    let cross = C64::from_polar((g - 1.0).max(0.0).sqrt(), p.phi);
    let sg = g.sqrt();
    (sg * a_si_in + cross * a_id_in.conj(), sg * a_id_in + cross * a_si_in.conj())
}

/// One heterodyne outcome pair for rescaled mean input amplitudes.
pub fn heterodyne_increment<R: Rng + ?Sized>(
    a_si: C64,
    a_id: C64,
    dt: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    let sd = dt.sqrt();
    let w_i: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
    let w_q: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
    let s2 = std::f64::consts::SQRT_2;
    Ok((s2 * (a_si + a_id).re * dt + w_i, s2 * (a_si - a_id).im * dt + w_q))
}

/// Causal first-order low-pass y(t) = D∫₀^∞ e^{−Dτ} x(t−τ) dτ applied to a
/// uniformly sampled series, the next-to-leading-order finite-bandwidth delay.
/// Uses the exact update for piecewise-linear input.
pub fn delay_filter(samples: &[C64], dt: f64, bandwidth: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(samples.len());
    let Some(&first) = samples.first() else { return out };
    let h = bandwidth * dt;
    let e = (-h).exp();
    // weights of x_n and x_{n+1} for linear interpolation over one step
    let b1 = if h > 1e-8 { (1.0 - e) / h - e } else { 0.5 * h };
    let b0 = 1.0 - e - b1;
    let mut y = first;
    out.push(y);
    for w in samples.windows(2) {
        y = e * y + b1 * w[0] + b0 * w[1];
        out.push(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sym(k: f64, lambda: f64) -> AmplifierParams {
        AmplifierParams::new(k, k, lambda, 0.0).unwrap()
    }

    #[test]
    fn unit_gain_reflects_with_pi_phase() {
        let p = sym(3.0, 0.0);
        let g = gain_profile(&p, 0.0);
        assert!((g - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn quarter_lambda_gives_five_thirds() {
        let k0 = 7.0;
        let p = sym(k0, k0 / 4.0);
        assert!((p.sqrt_g() - 5.0 / 3.0).abs() < 1e-14);
        assert!((gain_profile(&p, 0.0).norm() - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn half_power_at_bandwidth() {
        let p = AmplifierParams::with_gain(10.0, 10.0, 1e4, 0.0).unwrap();
        assert!((p.gain() - 1e4).abs() < 1e-6);
        let d = p.bandwidth();
        for w in [d, -d] {
            let r = gain_profile(&p, w).norm_sqr() / p.gain();
            assert!((r - 0.5).abs() < 0.01, "ratio {r}");
        }
    }

    #[test]
    fn threshold_rejected() {
        assert!(AmplifierParams::new(2.0, 2.0, 1.0, 0.0).is_err());
        assert!(AmplifierParams::new(2.0, 2.0, 1.1, 0.0).is_err());
        assert!(AmplifierParams::new(0.0, 2.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn transform_examples() {
        let unit = sym(1.0, 0.0);
        let (a, b) = two_mode_transform(&unit, C64::new(0.3, -0.2), C64::new(1.0, 2.0));
        assert!((a - C64::new(0.3, -0.2)).norm() < 1e-15);
        assert!((b - C64::new(1.0, 2.0)).norm() < 1e-15);

        let g4 = AmplifierParams::with_gain(1.0, 1.0, 4.0, 0.0).unwrap();
        let z = C64::new(0.7, 0.1);
        let (a, _) = two_mode_transform(&g4, z, C64::new(0.0, 0.0));
        assert!((a - 2.0 * z).norm() < 1e-12);

        let g2 = AmplifierParams::with_gain(1.0, 1.0, 2.0, 0.0).unwrap();
        let (a, _) = two_mode_transform(&g2, C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        assert!((a - C64::new(2f64.sqrt(), -1.0)).norm() < 1e-12);
    }

    #[test]
    fn heterodyne_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dt = 1e-3;
        let n = 100_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let (di, _) = heterodyne_increment(C64::new(0.0, 0.0), C64::new(0.0, 0.0), dt, &mut rng).unwrap();
            s2 += di * di;
        }
        let var = s2 / n as f64;
        // χ² sampling error of the variance estimator: dt·√(2/n)
        assert!((var - dt).abs() < 3.0 * dt * (2.0 / n as f64).sqrt());

        let c = C64::new(0.4, 0.0);

        let n = 1_000_000;
        let mut m = 0.0;
        for _ in 0..n {
            m += heterodyne_increment(C64::new(1.0, 0.0), C64::new(0.0, 0.0), dt, &mut rng).unwrap().0;
        }
        let mean = m / n as f64;
        let se = (dt / n as f64).sqrt();
        assert!((mean - 2f64.sqrt() * dt).abs() < 4.0 * se, "mean {mean}");
        assert!(heterodyne_increment(c, c, 0.0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_inputs_have_zero_q_drift() {
        // identical seeds with and without the symmetric drive give identical dQ
        let c = C64::new(0.8, 0.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = heterodyne_increment(c, c, 1e-3, &mut r1).unwrap();
            let b = heterodyne_increment(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 1e-3, &mut r2).unwrap();
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn delay_filter_steps_towards_input() {
        let d = 50.0;
        let dt = 1e-3;
        let x: Vec<C64> = (0..2000).map(|n| C64::new(if n == 0 { 0.0 } else { 1.0 }, 0.0)).collect();
        let y = delay_filter(&x, dt, d);
        // response to a step is 1 − e^{−D t} after the first ramp interval
        let t = 1000.0 * dt;
        assert!((y[1000].re - (1.0 - (-d * (t - dt)).exp())).abs() < 1e-2);
        assert!((y[1999].re - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn zero_frequency_gain_matches_closed_form(
            ksi in 0.1f64..50.0, kid in 0.1f64..50.0, frac in 0.0f64..0.999, phi in -3.0f64..3.0
        ) {
            let lambda = (frac * ksi * kid / 4.0).sqrt();
            let p = AmplifierParams::new(ksi, kid, lambda, phi).unwrap();
            let g0 = gain_profile(&p, 0.0).norm();
            prop_assert!((g0 - p.sqrt_g()).abs() <= 1e-12 * p.sqrt_g());
        }

        #[test]
        fn bogoliubov_condition(
            ksi in 0.1f64..50.0, kid in 0.1f64..50.0, frac in 0.0f64..0.99, w in -200.0f64..200.0
        ) {
            let lambda = (frac * ksi * kid / 4.0).sqrt();
            let p = AmplifierParams::new(ksi, kid, lambda, 0.3).unwrap();
            let g2 = gain_profile(&p, w).norm_sqr();
            prop_assert!(g2 >= 1.0 - 1e-12);
            let h2 = cross_gain(&p, w).norm_sqr();
            prop_assert!((g2 - h2 - 1.0).abs() <= 1e-12 * g2.max(1.0));
        }

        #[test]
        fn photon_difference_conserved(
            g in 1.0f64..1e4, a in -5.0f64..5.0, b in -5.0f64..5.0
        ) {
            let p = AmplifierParams::with_gain(1.0, 1.0, g, 0.0).unwrap();
            let (x, y) = two_mode_transform(&p, C64::new(a, 0.0), C64::new(b, 0.0));
            let lhs = x.norm_sqr() - y.norm_sqr();
            let rhs = a * a - b * b;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm_sqr() + y.norm_sqr()));
        }
    }
}
