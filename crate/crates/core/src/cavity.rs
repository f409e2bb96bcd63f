//! Qubit-conditioned coherent cavity amplitudes, measurement amplitudes,
//! drive envelopes and balanced-drive synthesis.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dispersively coupled qubit-cavity pair. Rates in rad/μs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    pub chi: f64,
    pub kappa: f64,
    #[serde(default)]
    pub kappa_in: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    #[serde(default = "one")]
    pub etabar: f64,
}

fn one() -> f64 {
    1.0
}

impl PairParams {
    /// Resonant pair with κ^in = 0, ideal qubit and lossless line.
    pub fn ideal(kappa: f64, chi: f64) -> Self {
        Self { chi, kappa, kappa_in: 0.0, delta: 0.0, gamma1: 0.0, gamma_phi: 0.0, etabar: 1.0 }
    }
}

/// Both pairs plus the shared detection chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub pairs: [PairParams; 2],
    /// Detection efficiency η.
    pub eta: f64,
    /// Amplifier power gain G; `None` is the infinite-gain limit η_g = 1.
    pub gain: Option<f64>,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (j, p) in self.pairs.iter().enumerate() {
            let n = j + 1;
            for (name, v) in [
                ("kappa", p.kappa),
                ("kappa_in", p.kappa_in),
                ("gamma1", p.gamma1),
                ("gamma_phi", p.gamma_phi),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParams(format!("pair {n}: {name} = {v} must be finite and ≥ 0")));
                }
            }
            if !p.chi.is_finite() || !p.delta.is_finite() {
                return Err(Error::InvalidParams(format!("pair {n}: chi and delta must be finite")));
            }
            if !(p.kappa > 0.0) {
                return Err(Error::InvalidParams(format!("pair {n}: kappa must be positive")));
            }
            if !(p.etabar > 0.0 && p.etabar <= 1.0) {
                return Err(Error::InvalidParams(format!("pair {n}: etabar = {} outside (0, 1]", p.etabar)));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParams(format!("eta = {} outside (0, 1]", self.eta)));
        }
        if let Some(g) = self.gain {
            if !(g > 1.0) || !g.is_finite() {
                return Err(Error::InvalidParams(format!("amplifier gain G = {g} must be finite and > 1")));
            }
        }
        Ok(())
    }

    /// Effective efficiency of the amplification stage, (G−1)/G.
    pub fn eta_g(&self) -> f64 {
        self.gain.map_or(1.0, |g| (g - 1.0) / g)
    }

    /// Measurement efficiency of channel `j` (0 or 1).
    pub fn eta_j(&self, j: usize) -> f64 {
        match j {
            0 => self.eta * self.pairs[0].etabar,
            _ => self.eta_g() * self.eta * self.pairs[1].etabar,
        }
    }

    /// Combined efficiency η₁η₂/(η₁ + η₂ − η₁η₂).
    pub fn eta_t(&self) -> f64 {
        let (a, b) = (self.eta_j(0), self.eta_j(1));
        a * b / (a + b - a * b)
    }

    /// η_sκ_s from (η_sκ_s)⁻¹ = Σ_j (η_jκ_j)⁻¹.
    pub fn eta_s_kappa_s(&self) -> f64 {
        1.0 / (0..2).map(|j| 1.0 / (self.eta_j(j) * self.pairs[j].kappa)).sum::<f64>()
    }

    /// Total transverse decay rate Γ^j/2 + Γ_φ^j.
    pub fn gamma2(&self, j: usize) -> f64 {
        self.pairs[j].gamma1 / 2.0 + self.pairs[j].gamma_phi
    }

    pub fn gamma2_sum(&self) -> f64 {
        self.gamma2(0) + self.gamma2(1)
    }
}

/// Uniform grid t_n = n·dt, n = 0..=n_steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0) || !(duration > 0.0) {
            return Err(Error::InvalidParams(format!("grid needs dt > 0 and duration > 0 (dt={dt}, T={duration})")));
        }
        let n = (duration / dt).round();
        if ((n * dt - duration) / duration).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("duration {duration} is not a multiple of dt {dt}")));
        }
        Ok(Self { dt, n_steps: n as usize })
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.t(self.n_steps)
    }
}

/// Drive shapes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DriveShape {
    Zero,
    /// Rectangle from `t_s` to `t_e` with sin² ramps of length `t_ramp` inside the window.
    RectRamped { eps_m: f64, t_s: f64, t_e: f64, t_ramp: f64 },
    /// Drive whose pointer-state separation follows a flat top with smooth
    /// quintic ramps inside [`t_s`, `t_e`], at the level a constant drive
    /// `eps_m` reaches in steady state. The drive overshoots at the edges and
    /// actively empties the cavity at `t_e`.
    FlatResponse { eps_m: f64, t_s: f64, t_e: f64, t_ramp: f64 },
    /// Like [`DriveShape::FlatResponse`] on the rising edge, then constant
    /// `eps_m` until it switches off at `t_e` and the cavity rings down freely.
    FlatRise { eps_m: f64, t_s: f64, t_e: f64, t_ramp: f64 },
    /// Synthesized by [`balanced_drive`] from the first pair's trajectory.
    Balanced,
}

/// Drive amplitude sampled on the half-step grid of a [`TimeGrid`], so that
/// RK4 stages see exact values at step midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveEnvelope {
    pub grid: TimeGrid,
    samples: Vec<C64>,
    pub shape: DriveShape,
}

impl DriveEnvelope {
    pub fn zero(grid: TimeGrid) -> Self {
        Self { grid, samples: vec![C64::new(0.0, 0.0); 2 * grid.n_steps + 1], shape: DriveShape::Zero }
    }

    /// Samples `f(t)` at every half step.
    pub fn from_fn(grid: TimeGrid, shape: DriveShape, f: impl Fn(f64) -> C64) -> Result<Self> {
        let samples: Vec<C64> = (0..=2 * grid.n_steps).map(|k| f(0.5 * k as f64 * grid.dt)).collect();
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParams("drive amplitude is not finite".into()));
        }
        Ok(Self { grid, samples, shape })
    }

    pub fn at_node(&self, n: usize) -> C64 {
        self.samples[2 * n]
    }

    pub fn at_mid(&self, n: usize) -> C64 {
        self.samples[2 * n + 1]
    }

    pub fn half_samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|z| z * k).collect(), shape: self.shape }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Trapezoid integral over the half-step samples.
    pub fn integral(&self) -> C64 {
        let h = 0.5 * self.grid.dt;
        let s = &self.samples;
        let inner: C64 = s.iter().sum();
        (inner - 0.5 * (s[0] + s[s.len() - 1])) * h
    }
}

fn check_window(t_s: f64, t_e: f64, t_ramp: f64, grid: &TimeGrid) -> Result<()> {
    let tm = grid.duration();
    if !(0.0 <= t_s && t_s < t_e && t_e <= tm * (1.0 + 1e-12)) {
        return Err(Error::InvalidParams(format!("drive window [{t_s}, {t_e}] not inside [0, {tm}]")));
    }
    if !(t_ramp >= 0.0 && t_ramp < (t_e - t_s) / 2.0) {
        return Err(Error::InvalidParams(format!("ramp {t_ramp} must lie in [0, (t_e − t_s)/2)")));
    }
    Ok(())
}

fn sin2_envelope(t: f64, t_s: f64, t_e: f64, t_ramp: f64) -> f64 {
    if t < t_s || t > t_e {
        return 0.0;
    }
    if t_ramp == 0.0 {
        return 1.0;
    }
    let q = std::f64::consts::FRAC_PI_2 / t_ramp;
    if t < t_s + t_ramp {
        (q * (t - t_s)).sin().powi(2)
    } else if t > t_e - t_ramp {
        (q * (t_e - t)).sin().powi(2)
    } else {
        1.0
    }
}

/// Smoothstep 10x³ − 15x⁴ + 6x⁵ flat top with its first two time derivatives.
fn quintic_top(t: f64, t_s: f64, t_e: f64, t_ramp: f64) -> (f64, f64, f64) {
    let ramp = |x: f64| {
        let x2 = x * x;
        (
            x2 * x * (10.0 - 15.0 * x + 6.0 * x2),
            30.0 * x2 * (1.0 - x) * (1.0 - x),
            60.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
        )
    };
    if t <= t_s || t >= t_e {
        (0.0, 0.0, 0.0)
    } else if t < t_s + t_ramp {
        let (f, d1, d2) = ramp((t - t_s) / t_ramp);
        (f, d1 / t_ramp, d2 / (t_ramp * t_ramp))
    } else if t > t_e - t_ramp {
        let (f, d1, d2) = ramp((t_e - t) / t_ramp);
        (f, -d1 / t_ramp, d2 / (t_ramp * t_ramp))
    } else {
        (1.0, 0.0, 0.0)
    }
}

/// Builds the envelope of a drive shape that does not depend on cavity parameters.
pub fn make_drive_envelope(shape: &DriveShape, grid: TimeGrid) -> Result<DriveEnvelope> {
    match *shape {
        DriveShape::Zero => Ok(DriveEnvelope::zero(grid)),
        DriveShape::RectRamped { eps_m, t_s, t_e, t_ramp } => {
            check_window(t_s, t_e, t_ramp, &grid)?;
            DriveEnvelope::from_fn(grid, *shape, |t| C64::new(eps_m * sin2_envelope(t, t_s, t_e, t_ramp), 0.0))
        }
        DriveShape::FlatResponse { .. } | DriveShape::FlatRise { .. } => Err(Error::InvalidParams(
            "flat-response drive depends on the cavity; use drive_for_pair".into(),
        )),
        DriveShape::Balanced => Err(Error::InvalidParams(
            "balanced drive is synthesized from the first pair's trajectory".into(),
        )),
    }
}

/// Builds the drive of pair `j` for any shape.
pub fn drive_for_pair(sys: &SystemParams, j: usize, shape: &DriveShape, grid: TimeGrid) -> Result<DriveEnvelope> {
    match *shape {
        DriveShape::FlatResponse { eps_m, t_s, t_e, t_ramp } | DriveShape::FlatRise { eps_m, t_s, t_e, t_ramp } => {
            check_window(t_s, t_e, t_ramp, &grid)?;
            let fall = matches!(shape, DriveShape::FlatResponse { .. });
            if !(t_ramp > 0.0) {
                return Err(Error::InvalidParams("flat-response drive needs a positive ramp".into()));
            }
            let p = &sys.pairs[j];
            if p.delta != 0.0 || p.chi == 0.0 {
                return Err(Error::InvalidParams("flat-response drive needs Δ = 0 and χ ≠ 0".into()));
            }
            let w2 = (p.kappa * p.kappa + p.chi * p.chi) / 4.0;
            let k = p.kappa;
            DriveEnvelope::from_fn(grid, *shape, |t| {
                let (f, d1, d2) = if fall || t <= t_s + t_ramp {
                    quintic_top(t, t_s, t_e, t_ramp)
                } else if t < t_e {
                    (1.0, 0.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                };
                C64::new(eps_m * (f + (d2 + k * d1) / w2), 0.0)
            })
        }
        _ => make_drive_envelope(shape, grid),
    }
}

/// Qubit-conditioned cavity amplitudes and derived rates on a uniform grid.
#[derive(Clone, Debug)]
pub struct CavityTrajectory {
    pub grid: TimeGrid,
    pub pair: PairParams,
    /// η_jκ_j of the channel.
    pub eta_kappa: f64,
    pub alpha_e: Vec<C64>,
    pub alpha_g: Vec<C64>,
    /// Drive at the grid nodes.
    pub eps: Vec<C64>,
    /// Drive at the step midpoints.
    pub eps_mid: Vec<C64>,
    pub s: Vec<C64>,
    pub stark: Vec<f64>,
    pub gamma_d: Vec<f64>,
    pub gamma_m: Vec<f64>,
    pub u: Vec<C64>,
}

/// Right-hand side of both branches: (α̇_e, α̇_g).
fn cavity_rhs(p: &PairParams, eps: C64, ae: C64, ag: C64) -> (C64, C64) {
    let ie = C64::new(0.0, -1.0) * eps;
    let re = C64::new(-p.kappa / 2.0, -(p.delta + p.chi / 2.0));
    let rg = C64::new(-p.kappa / 2.0, -(p.delta - p.chi / 2.0));
    (ie + re * ae, ie + rg * ag)
}

/// Largest stable step for pair `p`.
pub fn max_cavity_step(p: &PairParams) -> f64 {
    let mut m = 1.0 / p.kappa;
    if p.chi != 0.0 {
        m = m.min(1.0 / p.chi.abs());
    }
    0.01 * m
}

/// Integrates both branches of pair `j` from vacuum with classical RK4.
pub fn integrate_cavity(sys: &SystemParams, j: usize, drive: &DriveEnvelope, dt_cav: f64) -> Result<CavityTrajectory> {
    sys.validate()?;
    let p = sys.pairs[j];
    let bound = max_cavity_step(&p);
    if dt_cav > bound * (1.0 + 1e-9) {
        return Err(Error::StepTooLarge { dt: dt_cav, bound });
    }
    if ((drive.grid.dt - dt_cav) / dt_cav).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "drive grid step {} differs from cavity step {dt_cav}",
            drive.grid.dt
        )));
    }
    let grid = drive.grid;
    let n = grid.n_steps;
    let h = dt_cav;
    let mut ae = vec![C64::new(0.0, 0.0); n + 1];
    let mut ag = vec![C64::new(0.0, 0.0); n + 1];
    for k in 0..n {
        let (e0, em, e1) = (drive.at_node(k), drive.at_mid(k), drive.at_node(k + 1));
        let (x, y) = (ae[k], ag[k]);
        let (k1x, k1y) = cavity_rhs(&p, e0, x, y);
        let (k2x, k2y) = cavity_rhs(&p, em, x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        let (k3x, k3y) = cavity_rhs(&p, em, x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        let (k4x, k4y) = cavity_rhs(&p, e1, x + h * k3x, y + h * k3y);
        ae[k + 1] = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        ag[k + 1] = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !(ae[k + 1].norm().is_finite() && ag[k + 1].norm().is_finite()) {
            return Err(Error::numerical(grid.t(k + 1), format!("cavity {} amplitude diverged", j + 1)));
        }
    }
    let eta_kappa = sys.eta_j(j) * p.kappa;
    Ok(CavityTrajectory::from_amplitudes(grid, p, eta_kappa, ae, ag, drive))
}

impl CavityTrajectory {
    fn from_amplitudes(
        grid: TimeGrid,
        pair: PairParams,
        eta_kappa: f64,
        alpha_e: Vec<C64>,
        alpha_g: Vec<C64>,
        drive: &DriveEnvelope,
    ) -> Self {
        let n = grid.n_steps;
        let r = eta_kappa.sqrt();
        let mut t = Self {
            grid,
            pair,
            eta_kappa,
            eps: (0..=n).map(|k| drive.at_node(k)).collect(),
            eps_mid: (0..n).map(|k| drive.at_mid(k)).collect(),
            s: Vec::with_capacity(n + 1),
            stark: Vec::with_capacity(n + 1),
            gamma_d: Vec::with_capacity(n + 1),
            gamma_m: Vec::with_capacity(n + 1),
            u: Vec::with_capacity(n + 1),
            alpha_e,
            alpha_g,
        };
        for k in 0..=n {
            let (e, g) = (t.alpha_e[k], t.alpha_g[k]);
            let s = r * (e - g);
            let x = g * e.conj();
            t.s.push(s);
            t.stark.push(pair.chi * x.re);
            t.gamma_d.push(pair.chi * x.im);
            t.gamma_m.push(s.norm_sqr());
            t.u.push(r * (e + g));
        }
        t
    }

    pub fn len(&self) -> usize {
        self.alpha_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_e.is_empty()
    }

    /// |α_e − α_g|²/2 at node `k`.
    pub fn penalty(&self, k: usize) -> f64 {
        0.5 * (self.alpha_e[k] - self.alpha_g[k]).norm_sqr()
    }

    /// Time derivatives (α̇_e, α̇_g) at node `k`.
    pub fn derivative(&self, k: usize) -> (C64, C64) {
        cavity_rhs(&self.pair, self.eps[k], self.alpha_e[k], self.alpha_g[k])
    }

    /// Amplitudes at the midpoint of step `k` by cubic Hermite interpolation.
    pub fn state_at_mid(&self, k: usize) -> (C64, C64) {
        let h = self.grid.dt;
        let (f0e, f0g) = self.derivative(k);
        let (f1e, f1g) = self.derivative(k + 1);
        (
            0.5 * (self.alpha_e[k] + self.alpha_e[k + 1]) + h / 8.0 * (f0e - f1e),
            0.5 * (self.alpha_g[k] + self.alpha_g[k + 1]) + h / 8.0 * (f0g - f1g),
        )
    }

    /// ∫Ω dt and ∫Γ_d dt over step `k` (Simpson on the interpolated amplitudes).
    pub fn step_integrals(&self, k: usize) -> (f64, f64) {
        let h = self.grid.dt;
        let (me, mg) = self.state_at_mid(k);
        let xm = mg * me.conj();
        let chi = self.pair.chi;
        let om = h / 6.0 * (self.stark[k] + 4.0 * chi * xm.re + self.stark[k + 1]);
        let gd = h / 6.0 * (self.gamma_d[k] + 4.0 * chi * xm.im + self.gamma_d[k + 1]);
        (om, gd)
    }

    pub fn max_abs_s(&self) -> f64 {
        self.s.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Target (D₂, Ḋ₂, D̈₂) for S₂ = S₁ given the first cavity's amplitudes and drive.
fn balanced_target(traj1: &CavityTrajectory, ratio: f64, ae: C64, ag: C64, eps1: C64) -> (C64, C64, C64) {
    let p = &traj1.pair;
    let d = ae - ag;
    let sum = ae + ag;
    let d1 = -0.5 * p.kappa * d - C64::new(0.0, 0.5 * p.chi) * sum;
    let d2 = -p.kappa * d1 - p.chi * eps1 - 0.25 * (p.kappa * p.kappa + p.chi * p.chi) * d;
    (ratio * d, ratio * d1, ratio * d2)
}

/// Synthesizes the drive of pair 2 that makes its measurement amplitude follow
/// S₁(t), by inverting the second-order equation of the pointer separation.
pub fn balanced_drive(traj1: &CavityTrajectory, sys: &SystemParams) -> Result<DriveEnvelope> {
    let p2 = &sys.pairs[1];
    if p2.chi == 0.0 {
        return Err(Error::InvalidParams("balanced drive needs χ₂ ≠ 0".into()));
    }
    if p2.delta != 0.0 || traj1.pair.delta != 0.0 {
        return Err(Error::InvalidParams("balanced drive needs Δ₁ = Δ₂ = 0".into()));
    }
    let grid = traj1.grid;
    if traj1.max_abs_s() == 0.0 {
        return Ok(DriveEnvelope::zero(grid));
    }
    let eta_kappa2 = sys.eta_j(1) * p2.kappa;
    let ratio = (traj1.eta_kappa / eta_kappa2).sqrt();
    let w2 = 0.25 * (p2.kappa * p2.kappa + p2.chi * p2.chi);
    let invert = |(d, d1, d2): (C64, C64, C64)| -(d2 + p2.kappa * d1 + w2 * d) / p2.chi;
    let n = grid.n_steps;
    let mut samples = Vec::with_capacity(2 * n + 1);
    for k in 0..=n {
        samples.push(invert(balanced_target(traj1, ratio, traj1.alpha_e[k], traj1.alpha_g[k], traj1.eps[k])));
        if k < n {
            let (me, mg) = traj1.state_at_mid(k);
            samples.push(invert(balanced_target(traj1, ratio, me, mg, traj1.eps_mid[k])));
        }
    }
    Ok(DriveEnvelope { grid, samples, shape: DriveShape::Balanced })
}
