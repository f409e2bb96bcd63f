use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sme::{MeasurementRecord, MeasurementSetup};

/// Largest relative imaginary part of S accepted as real.
pub const REAL_S_TOL: f64 = 1e-9;
/// Largest relative mismatch |S₁ − S₂|/max|S₁| accepted as balanced.
pub const BALANCE_TOL: f64 = 1e-4;

/// Matched-filter integrals of a balanced record.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct FilterState {
    pub t: f64,
    /// Λ(t) = ∫S² dτ.
    pub lambda: f64,
    pub i_m: f64,
    pub q_m: f64,
    /// Stark phases Θ_j = ∫Ω_j dτ.
    pub theta: [f64; 2],
    /// Γ_m^j/(2η_jκ_j) = |α_e^j − α_g^j|²/2 at time t.
    pub penalty: [f64; 2],
    /// Γ₂^j t.
    pub gamma2_t: [f64; 2],
}

impl FilterState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one record step: I_m += √2 S dI_r, Q_m += √2 S dQ_r, Λ += S²dt,
    /// Θ_j += `d_theta`_j; `penalty` is the value at the end of the step.
    #[allow(clippy::too_many_arguments)]
    pub fn accumulate(
        &mut self,
        d_i: f64,
        d_q: f64,
        s: C64,
        d_theta: [f64; 2],
        penalty: [f64; 2],
        gamma2: [f64; 2],
        dt: f64,
    ) -> Result<()> {
        if s.im.abs() > REAL_S_TOL * s.re.abs().max(1.0) {
            return Err(Error::InvalidParams(format!("filter needs a real measurement amplitude, got {s}")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("filter step {dt} must be positive")));
        }
        let s = s.re;
        let r = std::f64::consts::SQRT_2 * s;
        self.i_m += r * d_i;
        self.q_m += r * d_q;
        self.lambda += s * s * dt;
        self.t += dt;
        for j in 0..2 {
            self.theta[j] += d_theta[j];
            self.penalty[j] = penalty[j];
            self.gamma2_t[j] += gamma2[j] * dt;
        }
        Ok(())
    }

    /// Σ_j Γ_m^j/(2η_jκ_j), equal to Γ_m/(2η_sκ_s) for balanced amplitudes.
    pub fn penalty_sum(&self) -> f64 {
        self.penalty[0] + self.penalty[1]
    }

    pub fn gamma2_t_sum(&self) -> f64 {
        self.gamma2_t[0] + self.gamma2_t[1]
    }
}

/// Checks that the setup has real, balanced measurement amplitudes.
pub fn check_balanced(setup: &MeasurementSetup) -> Result<()> {
    let (mismatch, imag) = setup.balance_defect();
    if imag > REAL_S_TOL.max(1e-7) {
        return Err(Error::InvalidParams(format!("measurement amplitudes are not real (relative Im S {imag:.2e})")));
    }
    if mismatch > BALANCE_TOL {
        return Err(Error::InvalidParams(format!("measurement amplitudes are not balanced (|S₁−S₂| {mismatch:.2e})")));
    }
    Ok(())
}

/// Runs the filter over a record of the setup, returning the state at every
/// `every`-th node and at the final node.
pub fn filter_record(setup: &MeasurementSetup, record: &MeasurementRecord, every: usize) -> Result<Vec<FilterState>> {
    check_balanced(setup)?;
    record.validate()?;
    let n = setup.n_steps();
    if record.len() != n {
        return Err(Error::InvalidParams(format!("record has {} increments, grid has {n} steps", record.len())));
    }
    let every = every.max(1);
    let dt = setup.grid.dt;
    let gamma2 = [setup.sys.gamma2(0), setup.sys.gamma2(1)];
    let [c1, c2] = &setup.cavities;
    let mut fs = FilterState::new();
    let mut out = vec![fs];
    for k in 0..n {
        let s = C64::new(c1.s[k].re, 0.0);
        let d_theta = [c1.step_integrals(k).0, c2.step_integrals(k).0];
        fs.accumulate(record.d_i[k], record.d_q[k], s, d_theta, [c1.penalty(k + 1), c2.penalty(k + 1)], gamma2, dt)?;
        fs.t = setup.grid.t(k + 1);
        if (k + 1) % every == 0 || k + 1 == n {
            out.push(fs);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(fs: &mut FilterState, di: f64, s: f64, dt: f64) {
        fs.accumulate(di, 0.0, C64::new(s, 0.0), [0.0; 2], [0.0; 2], [0.0; 2], dt).unwrap();
    }

    #[test]
    fn zero_amplitude_leaves_integrals() {
        let mut fs = FilterState::new();
        for _ in 0..10 {
            step(&mut fs, 0.3, 0.0, 0.1);
        }
        assert_eq!((fs.i_m, fs.q_m, fs.lambda), (0.0, 0.0, 0.0));
        assert!((fs.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_amplitude_rectangle() {
        let (s, dt, n) = (3.0, 1e-3, 1000);
        let mut fs = FilterState::new();
        let c = 0.7;
        for _ in 0..n {
            step(&mut fs, s / std::f64::consts::SQRT_2 * c * dt, s, dt);
        }
        assert!((fs.lambda - s * s).abs() < 1e-9);
        assert!((fs.i_m - c * fs.lambda).abs() < 1e-9);
    }

    #[test]
    fn complex_amplitude_rejected() {
        let mut fs = FilterState::new();
        assert!(fs.accumulate(0.0, 0.0, C64::new(1.0, 0.1), [0.0; 2], [0.0; 2], [0.0; 2], 1e-3).is_err());
    }
}
