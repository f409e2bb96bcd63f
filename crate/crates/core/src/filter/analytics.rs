use statrs::distribution::{ContinuousCDF, Normal};

use super::bloch::concurrence_closed_form;
use crate::cavity::SystemParams;
use crate::error::{Error, Result};

/// Minimum total efficiency for entanglement after a measurement of strength
/// Λ lasting `t_m` with summed dephasing rate `gamma2_s`: 1/(3 − 2Γ₂ˢT_m/Λ).
pub fn efficiency_threshold(gamma2_s: f64, t_m: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || gamma2_s < 0.0 || t_m < 0.0 {
        return Err(Error::InvalidParams(format!("threshold needs Λ > 0 and Γ₂ˢ, T_m ≥ 0 (Λ = {lambda})")));
    }
    let d = 3.0 - 2.0 * gamma2_s * t_m / lambda;
    if d <= 0.0 {
        return Err(Error::EntanglementImpossible(format!(
            "Γ₂ˢT_m/Λ = {:.4} ≥ 3/2: dephasing outpaces purification at any efficiency",
            gamma2_s * t_m / lambda
        )));
    }
    Ok(1.0 / d)
}

pub const LAMBDA_MAX: f64 = 50.0;

/// Result of maximizing the heralded concurrence over the measurement strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalLambda {
    /// None when the concurrence vanishes for every Λ.
    pub lambda: Option<f64>,
    pub concurrence: f64,
    /// The maximum sits at the upper end of the search interval.
    pub at_bound: bool,
}

/// Concurrence at I_m = 0 after a completed measurement.
pub fn heralded_concurrence(eta_t: f64, gamma2_s: f64, t_m: f64, lambda: f64) -> f64 {
    concurrence_closed_form(eta_t, lambda, 0.0, 0.0, gamma2_s * t_m)
}

/// Maximizes the heralded concurrence over Λ ∈ (0, 50] for the system's
/// efficiencies and dephasing.
pub fn optimal_lambda(sys: &SystemParams, t_m: f64) -> OptimalLambda {
    optimal_lambda_for(sys.eta_t(), sys.gamma2_sum(), t_m)
}

pub fn optimal_lambda_for(eta_t: f64, gamma2_s: f64, t_m: f64) -> OptimalLambda {
    let f = |l: f64| heralded_concurrence(eta_t, gamma2_s, t_m, l);
    let n = 2000;
    let h = LAMBDA_MAX / n as f64;
    let (mut best, mut best_c) = (0usize, 0.0);
    for k in 1..=n {
        let c = f(k as f64 * h);
        // ties resolve upward so a saturated objective reports the bound
        if c > 0.0 && c >= best_c {
            best = k;
            best_c = c;
        }
    }
    if best_c <= 0.0 {
        return OptimalLambda { lambda: None, concurrence: 0.0, at_bound: false };
    }
    if best == n {
        return OptimalLambda { lambda: Some(LAMBDA_MAX), concurrence: best_c, at_bound: true };
    }
    // golden-section refinement inside the bracketing grid cells
    let (mut a, mut b) = (((best - 1) as f64 * h).max(1e-12), (best + 1) as f64 * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 * b.max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    OptimalLambda { lambda: Some(x), concurrence: f(x), at_bound: false }
}

/// 1:2:1 Gaussian mixture of I_m and normal Q_m after a strong balanced measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeMixture {
    pub lambda: f64,
    pub weights: [f64; 3],
    pub means: [f64; 3],
    pub variance: f64,
}

pub fn outcome_distribution(lambda: f64) -> Result<OutcomeMixture> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!("outcome distribution needs Λ > 0, got {lambda}")));
    }
    Ok(OutcomeMixture {
        lambda,
        weights: [0.25, 0.5, 0.25],
        means: [-2.0 * lambda, 0.0, 2.0 * lambda],
        variance: 2.0 * lambda,
    })
}

impl OutcomeMixture {
    fn component(&self, k: usize) -> Normal {
        Normal::new(self.means[k], self.variance.sqrt()).expect("positive variance")
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf_i(&self, x: f64) -> f64 {
        use statrs::distribution::Continuous;
        (0..3).map(|k| self.weights[k] * self.component(k).pdf(x)).sum()
    }

    pub fn cdf_i(&self, x: f64) -> f64 {
        (0..3).map(|k| self.weights[k] * self.component(k).cdf(x)).sum()
    }

    /// Probability that component `k` lands in (lo, hi).
    pub fn component_mass(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let c = self.component(k);
        self.weights[k] * (c.cdf(hi) - c.cdf(lo))
    }

    /// P(|I_m| < threshold).
    pub fn herald_probability(&self, threshold: f64) -> f64 {
        (0..3).map(|k| self.component_mass(k, -threshold, threshold)).sum()
    }

    /// P(middle component | |I_m| < threshold).
    pub fn middle_purity(&self, threshold: f64) -> f64 {
        self.component_mass(1, -threshold, threshold) / self.herald_probability(threshold)
    }

    /// Q_m ~ N(0, 2Λ).
    pub fn q_distribution(&self) -> Normal {
        Normal::new(0.0, self.sigma()).expect("positive variance")
    }

    /// Probability mass of I_m in [lo, hi).
    pub fn bin_probability(&self, lo: f64, hi: f64) -> f64 {
        self.cdf_i(hi) - self.cdf_i(lo)
    }
}
