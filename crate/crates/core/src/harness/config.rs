//! Run configuration files. Frequency keys keep the MHz unit spelling of the JSON format.

#![allow(non_snake_case)]

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ampnet::AmplifierParams;
use crate::cavity::{DriveShape, PairParams, SystemParams, TimeGrid};
use crate::error::{Error, Result};
use crate::sme::{Model, Scheme, SimulationOptions, DEFAULT_LEAKAGE_LIMIT};
use crate::mhz_to_rad_per_us;

/// One qubit-cavity pair. Frequencies are quoted as x/2π in MHz; qubit
/// decay rates are plain rates in 1/μs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub kappa_over_2pi_MHz: f64,
    pub chi_over_2pi_MHz: f64,
    #[serde(default)]
    pub kappa_in_over_2pi_MHz: f64,
    #[serde(default)]
    pub delta_over_2pi_MHz: f64,
    /// Relaxation rate Γ.
    #[serde(default)]
    pub gamma1_per_us: f64,
    /// Pure dephasing rate Γ_φ.
    #[serde(default)]
    pub gamma_phi_per_us: f64,
    /// Transmission efficiency of the line from this cavity.
    #[serde(default = "one")]
    pub etabar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub pairs: [PairConfig; 2],
    /// Detection efficiency η.
    #[serde(default = "one")]
    pub eta: f64,
    /// Power gain of the amplifier in the second branch; absent means an ideal
    /// noiseless link (η_g = 1).
    #[serde(default)]
    pub amplifier_gain: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Zero,
    RectRamped,
    FlatResponse,
    FlatRise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub shape: ShapeKind,
    #[serde(default)]
    pub eps_m_over_2pi_MHz: f64,
    #[serde(default)]
    pub t_s_us: f64,
    #[serde(default)]
    pub t_e_us: f64,
    #[serde(default)]
    pub t_ramp_us: f64,
    /// Drive the second cavity with the balanced amplitude (otherwise the same shape).
    #[serde(default = "yes")]
    pub balanced: bool,
    /// Rescale ε_m so that Λ(T_m) equals this value; the string "optimal"
    /// selects the concurrence-maximizing Λ_o.
    #[serde(default)]
    pub target_lambda: Option<LambdaTarget>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaTarget {
    Value(f64),
    Named(NamedLambda),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLambda {
    Optimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dt_us: f64,
    /// Step of the full qubit-cavity model.
    pub dt_full_us: f64,
    /// State output cadence.
    pub dt_out_us: f64,
    pub t_m_us: f64,
    pub n_fock: usize,
    pub model: Model,
    pub scheme: Scheme,
    pub relaxation: bool,
    pub leakage_limit: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt_us: 1e-4,
            dt_full_us: 2e-5,
            dt_out_us: 1e-3,
            t_m_us: 1.0,
            n_fock: 8,
            model: Model::Reduced,
            scheme: Scheme::Kraus,
            relaxation: false,
            leakage_limit: DEFAULT_LEAKAGE_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    pub histogram_bins: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n_traj: 1000, base_seed: 2024, histogram_bins: 60 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Common efficiency η_j of both channels.
    Eta,
    Lambda,
    /// Common Γ₂^j of both qubits in 1/μs.
    Gamma2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Measurement strength for the η and Γ₂ axes; absent means optimized at each point.
    pub lambda: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { axis: SweepAxis::Eta, start: 0.3, stop: 1.0, points: 71, lambda: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplifierConfig {
    pub kappa_si_over_2pi_MHz: f64,
    pub kappa_id_over_2pi_MHz: f64,
    pub power_gain: f64,
    pub phi: f64,
    pub omega_max_over_2pi_MHz: f64,
    pub points: usize,
}

impl Default for AmplifierConfig {
    fn default() -> Self {
        Self {
            kappa_si_over_2pi_MHz: 50.0,
            kappa_id_over_2pi_MHz: 50.0,
            power_gain: 100.0,
            phi: 0.0,
            omega_max_over_2pi_MHz: 20.0,
            points: 401,
        }
    }
}

/// Complete run description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub system: SystemConfig,
    pub drive: DriveConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    /// Herald window |I_m| < factor·Λ(T_m).
    #[serde(default = "one")]
    pub herald_threshold_over_lambda: f64,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub amplifier: AmplifierConfig,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub const PRESETS: [&str; 4] = ["dissimilar", "ideal", "realistic", "zero_drive"];

const DISSIMILAR: &str = include_str!("../../configs/dissimilar.json");
const IDEAL: &str = include_str!("../../configs/ideal.json");
const REALISTIC: &str = include_str!("../../configs/realistic.json");
const ZERO_DRIVE: &str = include_str!("../../configs/zero_drive.json");

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::config(
                "<root>",
                format!("{e} (line {}, column {})", e.line(), e.column()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "dissimilar" => DISSIMILAR,
            "ideal" => IDEAL,
            "realistic" => REALISTIC,
            "zero_drive" => ZERO_DRIVE,
            _ => {
                return Err(Error::config("--preset", format!("unknown preset `{name}` (one of {})", PRESETS.join(", "))))
            }
        };
        Self::from_json(text)
    }

    /// Field-level checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        let pos = |field: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        };
        let nonneg = |field: &str, v: f64| -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be non-negative and finite, got {v}")))
            }
        };
        for (j, p) in self.system.pairs.iter().enumerate() {
            let f = |name: &str| format!("system.pairs[{j}].{name}");
            pos(&f("kappa_over_2pi_MHz"), p.kappa_over_2pi_MHz)?;
            if !p.chi_over_2pi_MHz.is_finite() || p.chi_over_2pi_MHz == 0.0 {
                return Err(Error::config(&f("chi_over_2pi_MHz"), "must be finite and non-zero"));
            }
            nonneg(&f("kappa_in_over_2pi_MHz"), p.kappa_in_over_2pi_MHz)?;
            if !p.delta_over_2pi_MHz.is_finite() {
                return Err(Error::config(&f("delta_over_2pi_MHz"), "must be finite"));
            }
            nonneg(&f("gamma1_per_us"), p.gamma1_per_us)?;
            nonneg(&f("gamma_phi_per_us"), p.gamma_phi_per_us)?;
            if !(p.etabar > 0.0 && p.etabar <= 1.0) {
                return Err(Error::config(&f("etabar"), format!("must lie in (0, 1], got {}", p.etabar)));
            }
        }
        if !(self.system.eta > 0.0 && self.system.eta <= 1.0) {
            return Err(Error::config("system.eta", format!("must lie in (0, 1], got {}", self.system.eta)));
        }
        if let Some(g) = self.system.amplifier_gain {
            if !(g > 1.0) || !g.is_finite() {
                return Err(Error::config("system.amplifier_gain", format!("must exceed 1, got {g}")));
            }
        }
        let s = &self.simulation;
        pos("simulation.dt_us", s.dt_us)?;
        pos("simulation.dt_full_us", s.dt_full_us)?;
        pos("simulation.t_m_us", s.t_m_us)?;
        nonneg("simulation.dt_out_us", s.dt_out_us)?;
        pos("simulation.leakage_limit", s.leakage_limit)?;
        if s.n_fock < 3 {
            return Err(Error::config("simulation.n_fock", format!("must be at least 3, got {}", s.n_fock)));
        }
        let d = &self.drive;
        if d.shape != ShapeKind::Zero {
            nonneg("drive.eps_m_over_2pi_MHz", d.eps_m_over_2pi_MHz)?;
            nonneg("drive.t_s_us", d.t_s_us)?;
            nonneg("drive.t_ramp_us", d.t_ramp_us)?;
            if !(d.t_e_us > d.t_s_us && d.t_e_us <= s.t_m_us) {
                return Err(Error::config("drive.t_e_us", format!("must lie in (t_s, T_m], got {}", d.t_e_us)));
            }
            if !(2.0 * d.t_ramp_us < d.t_e_us - d.t_s_us) {
                return Err(Error::config("drive.t_ramp_us", "two ramps must fit inside the drive window"));
            }
        }
        if let Some(LambdaTarget::Value(v)) = d.target_lambda {
            pos("drive.target_lambda", v)?;
        }
        pos("herald_threshold_over_lambda", self.herald_threshold_over_lambda)?;
        if self.ensemble.n_traj == 0 {
            return Err(Error::config("ensemble.n_traj", "must be at least 1"));
        }
        if self.ensemble.histogram_bins == 0 {
            return Err(Error::config("ensemble.histogram_bins", "must be at least 1"));
        }
        let w = &self.sweep;
        if w.points < 2 || !w.start.is_finite() || !w.stop.is_finite() || w.stop <= w.start {
            return Err(Error::config("sweep", "needs points ≥ 2 and start < stop"));
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let pair = |p: &PairConfig| PairParams {
            chi: mhz_to_rad_per_us(p.chi_over_2pi_MHz),
            kappa: mhz_to_rad_per_us(p.kappa_over_2pi_MHz),
            kappa_in: mhz_to_rad_per_us(p.kappa_in_over_2pi_MHz),
            delta: mhz_to_rad_per_us(p.delta_over_2pi_MHz),
            gamma1: p.gamma1_per_us,
            gamma_phi: p.gamma_phi_per_us,
            etabar: p.etabar,
        };
        let sys = SystemParams {
            pairs: [pair(&self.system.pairs[0]), pair(&self.system.pairs[1])],
            eta: self.system.eta,
            gain: self.system.amplifier_gain,
        };
        sys.validate().map_err(|e| Error::config("system", e.to_string()))?;
        Ok(sys)
    }

    /// Grid of the configured model.
    pub fn grid(&self) -> Result<TimeGrid> {
        self.grid_for(self.simulation.model)
    }

    pub fn grid_for(&self, model: Model) -> Result<TimeGrid> {
        let dt = match model {
            Model::Reduced => self.simulation.dt_us,
            Model::Full => self.simulation.dt_full_us,
        };
        TimeGrid::new(dt, self.simulation.t_m_us).map_err(|e| Error::config("simulation", e.to_string()))
    }

    /// Drive shape before any Λ retargeting.
    pub fn drive_shape(&self) -> DriveShape {
        let d = &self.drive;
        let eps_m = mhz_to_rad_per_us(d.eps_m_over_2pi_MHz);
        let (t_s, t_e, t_ramp) = (d.t_s_us, d.t_e_us, d.t_ramp_us);
        match d.shape {
            ShapeKind::Zero => DriveShape::Zero,
            ShapeKind::RectRamped => DriveShape::RectRamped { eps_m, t_s, t_e, t_ramp },
            ShapeKind::FlatResponse => DriveShape::FlatResponse { eps_m, t_s, t_e, t_ramp },
            ShapeKind::FlatRise => DriveShape::FlatRise { eps_m, t_s, t_e, t_ramp },
        }
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        let s = &self.simulation;
        SimulationOptions {
            model: s.model,
            scheme: s.scheme,
            relaxation: s.relaxation,
            dt_out: s.dt_out_us,
            n_fock: s.n_fock,
            leakage_limit: s.leakage_limit,
            ..Default::default()
        }
    }

    pub fn amplifier_params(&self) -> Result<AmplifierParams> {
        let a = &self.amplifier;
        AmplifierParams::with_gain(
            mhz_to_rad_per_us(a.kappa_si_over_2pi_MHz),
            mhz_to_rad_per_us(a.kappa_id_over_2pi_MHz),
            a.power_gain,
            a.phi,
        )
        .map_err(|e| Error::config("amplifier", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
