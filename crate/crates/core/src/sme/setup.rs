use num_complex::Complex64 as C64;

use crate::cavity::{
    balanced_drive, drive_for_pair, integrate_cavity, CavityTrajectory, DriveEnvelope, DriveShape, SystemParams,
    TimeGrid,
};
use crate::error::{Error, Result};

/// Drives and cavity trajectories of both pairs on the simulation grid.
#[derive(Clone, Debug)]
pub struct MeasurementSetup {
    pub sys: SystemParams,
    pub grid: TimeGrid,
    pub drives: [DriveEnvelope; 2],
    pub cavities: [CavityTrajectory; 2],
}

/// Per-step inputs of the reduced two-qubit model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients {
    pub dt: f64,
    /// Measurement amplitudes at the start of the step.
    pub s: [C64; 2],
    /// Stark phase accumulated over the step, ∫Ω_j dt.
    pub theta: [f64; 2],
    /// Coherence decay accumulated over the step, ∫(Γ_d^j + Γ_φ^j [+ Γ^j/2]) dt.
    pub dephase: [f64; 2],
    /// Relaxation Γ^j dt when relaxation is simulated explicitly, else zero.
    pub decay: [f64; 2],
}

impl StepCoefficients {
    /// No dynamics at all.
    pub fn idle(dt: f64) -> Self {
        Self { dt, s: [C64::new(0.0, 0.0); 2], theta: [0.0; 2], dephase: [0.0; 2], decay: [0.0; 2] }
    }
}

impl MeasurementSetup {
    /// Drives pair 1 with `shape`; pair 2 gets the balanced drive or, if
    /// `balanced` is false, the same shape.
    pub fn new(sys: SystemParams, grid: TimeGrid, shape: &DriveShape, balanced: bool) -> Result<Self> {
        sys.validate()?;
        let d1 = drive_for_pair(&sys, 0, shape, grid)?;
        let c1 = integrate_cavity(&sys, 0, &d1, grid.dt)?;
        let d2 = if balanced { balanced_drive(&c1, &sys)? } else { drive_for_pair(&sys, 1, shape, grid)? };
        let c2 = integrate_cavity(&sys, 1, &d2, grid.dt)?;
        Ok(Self { sys, grid, drives: [d1, d2], cavities: [c1, c2] })
    }

    pub fn from_drives(sys: SystemParams, drives: [DriveEnvelope; 2]) -> Result<Self> {
        sys.validate()?;
        let grid = drives[0].grid;
        if drives[1].grid != grid {
            return Err(Error::InvalidParams("drives live on different grids".into()));
        }
        let c1 = integrate_cavity(&sys, 0, &drives[0], grid.dt)?;
        let c2 = integrate_cavity(&sys, 1, &drives[1], grid.dt)?;
        Ok(Self { sys, grid, drives, cavities: [c1, c2] })
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn coefficients(&self, n: usize, relaxation: bool) -> StepCoefficients {
        let dt = self.grid.dt;
        let mut c = StepCoefficients::idle(dt);
        for j in 0..2 {
            let cav = &self.cavities[j];
            let p = &self.sys.pairs[j];
            let (om, gd) = cav.step_integrals(n);
            c.s[j] = cav.s[n];
            c.theta[j] = om;
            let extra = if relaxation { p.gamma_phi } else { p.gamma_phi + p.gamma1 / 2.0 };
            c.dephase[j] = gd + extra * dt;
            c.decay[j] = if relaxation { p.gamma1 * dt } else { 0.0 };
        }
        c
    }

    pub fn all_coefficients(&self, relaxation: bool) -> Vec<StepCoefficients> {
        (0..self.n_steps()).map(|n| self.coefficients(n, relaxation)).collect()
    }

    /// Largest |S₁ − S₂| relative to max|S₁|, and largest |Im S_j| relative to max|S₁|.
    pub fn balance_defect(&self) -> (f64, f64) {
        let [a, b] = &self.cavities;
        let m = a.max_abs_s().max(f64::MIN_POSITIVE);
        let d = a.s.iter().zip(&b.s).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let im = a.s.iter().chain(&b.s).map(|x| x.im.abs()).fold(0.0, f64::max);
        (d / m, im / m)
    }

    /// Λ(T) = Σ S₁² dt over the grid (left sums, as accumulated by the filter).
    pub fn lambda_total(&self) -> f64 {
        let s = &self.cavities[0].s;
        s[..s.len() - 1].iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt
    }
}
