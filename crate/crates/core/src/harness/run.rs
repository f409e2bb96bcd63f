use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::ampnet::{cross_gain, gain_profile};
use crate::cavity::{DriveShape, SystemParams};
use crate::error::{Error, Result};
use crate::filter::{
    bloch_from_filter, concurrence_closed_form, concurrence_exact, concurrence_filter, efficiency_threshold,
    filter_bloch_vector, filter_record, heralded_concurrence, most_probable_trajectory, optimal_lambda,
    optimal_lambda_for, outcome_distribution, FilterState,
};
use crate::harness::config::{LambdaTarget, RunConfig, SweepAxis};
use crate::harness::io::{self, fmt};
use crate::harness::stats::{fit_mixture, mean, variance, wilson_interval, Histogram, MixtureFit};
use crate::linalg::trace_distance;
use crate::sme::{
    trajectory_rng, MeasurementRecord, MeasurementSetup, Model, SimulationOptions, Simulator, TwoQubitState,
    WienerPath, BLOCH_LABELS,
};
use crate::{mhz_to_rad_per_us, rad_per_us_to_mhz};

/// Trajectories per parallel batch; results are always assembled in index order.
const CHUNK: usize = 256;

/// Setup resolved from a configuration, with the drive rescaled to the requested Λ.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub sys: SystemParams,
    pub shape: DriveShape,
    pub setup: MeasurementSetup,
    pub model: Model,
    /// Factor applied to the configured ε_m.
    pub eps_scale: f64,
    pub lambda_m: f64,
}

impl Prepared {
    pub fn threshold(&self, cfg: &RunConfig) -> f64 {
        cfg.herald_threshold_over_lambda * self.lambda_m
    }
}

fn scale_shape(shape: DriveShape, k: f64) -> DriveShape {
    match shape {
        DriveShape::RectRamped { eps_m, t_s, t_e, t_ramp } => DriveShape::RectRamped { eps_m: k * eps_m, t_s, t_e, t_ramp },
        DriveShape::FlatResponse { eps_m, t_s, t_e, t_ramp } => {
            DriveShape::FlatResponse { eps_m: k * eps_m, t_s, t_e, t_ramp }
        }
        DriveShape::FlatRise { eps_m, t_s, t_e, t_ramp } => DriveShape::FlatRise { eps_m: k * eps_m, t_s, t_e, t_ramp },
        s => s,
    }
}

/// Builds the measurement setup for `model`. A target Λ rescales ε_m by
/// √(target/Λ), exact for the linear cavity response.
pub fn prepare(cfg: &RunConfig, model: Model) -> Result<Prepared> {
    cfg.validate()?;
    let sys = cfg.system_params()?;
    let grid = cfg.grid_for(model)?;
    let shape0 = cfg.drive_shape();
    let setup0 = MeasurementSetup::new(sys.clone(), grid, &shape0, cfg.drive.balanced)?;
    let lambda0 = setup0.lambda_total();
    let target = match cfg.drive.target_lambda {
        None => None,
        Some(LambdaTarget::Value(v)) => Some(v),
        Some(LambdaTarget::Named(_)) => match optimal_lambda(&sys, cfg.simulation.t_m_us).lambda {
            Some(l) => Some(l),
            None => {
                return Err(Error::EntanglementImpossible(format!(
                    "η_t = {:.4} is below threshold for every Λ",
                    sys.eta_t()
                )))
            }
        },
    };
    let Some(target) = target else {
        return Ok(Prepared { sys, shape: shape0, setup: setup0, model, eps_scale: 1.0, lambda_m: lambda0 });
    };
    if !(lambda0 > 0.0) {
        return Err(Error::config("drive.target_lambda", "the configured drive produces no measurement"));
    }
    let k = (target / lambda0).sqrt();
    let shape = scale_shape(shape0, k);
    let setup = MeasurementSetup::new(sys.clone(), grid, &shape, cfg.drive.balanced)?;
    let lambda_m = setup.lambda_total();
    Ok(Prepared { sys, shape, setup, model, eps_scale: k, lambda_m })
}

fn options_for(cfg: &RunConfig, model: Model, dt_out: f64) -> SimulationOptions {
    SimulationOptions { model, dt_out, ..cfg.simulation_options() }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub model: Model,
    pub dt_us: f64,
    pub base_seed: u64,
    pub trajectories: Vec<u64>,
    pub eps_scale: f64,
    pub eps_m_over_2pi_MHz: f64,
    pub lambda_m: f64,
}

fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig, p: &Prepared, trajectories: Vec<u64>) -> Result<()> {
    let m = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        model: p.model,
        dt_us: p.setup.grid.dt,
        base_seed: cfg.ensemble.base_seed,
        trajectories,
        eps_scale: p.eps_scale,
        eps_m_over_2pi_MHz: cfg.drive.eps_m_over_2pi_MHz * p.eps_scale,
        lambda_m: p.lambda_m,
    };
    io::write_json(&dir.join("manifest.json"), &m)
}

fn max_abs_diff(a: &[f64; 15], b: &[f64; 15]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySummary {
    pub index: u64,
    pub model: Model,
    pub lambda_m: f64,
    pub i_m: f64,
    pub q_m: f64,
    pub threshold: f64,
    pub heralded: bool,
    pub concurrence_exact: f64,
    pub concurrence_filter: f64,
    pub zz: f64,
    pub purity: f64,
    /// Largest Bloch-coordinate difference between filter and SME.
    pub max_filter_deviation: f64,
    pub max_leakage: Option<f64>,
}

/// One conditioned trajectory with its filter, written to `dir`.
pub fn run_trajectory(cfg: &RunConfig, index: u64, dir: &Path) -> Result<TrajectorySummary> {
    let model = cfg.simulation.model;
    let p = prepare(cfg, model)?;
    let sim = Simulator::new(&p.setup, options_for(cfg, model, cfg.simulation.dt_out_us))?;
    let mut rng = trajectory_rng(cfg.ensemble.base_seed, index);
    let noise = WienerPath::sample(&mut rng, p.setup.grid.dt, p.setup.n_steps())?;
    let out = sim.run(&noise)?;
    let filt = filter_record(&p.setup, &out.record, 1)?;

    io::create_dir(dir)?;
    io::write_state_csv(&dir.join("states.csv"), &out.times, &out.states)?;
    io::write_record_csv(&dir.join("record.csv"), &out.record)?;

    let mut w = io::csv_writer(&dir.join("filter.csv"))?;
    let mut header = vec!["t_us".to_string(), "I_m".into(), "Q_m".into(), "Lambda".into()];
    header.extend(BLOCH_LABELS.iter().map(|s| s.to_string()));
    header.extend(["purity", "C_exact", "C_filter", "deviation"].map(String::from));
    w.write_record(&header)?;
    let mut max_dev: f64 = 0.0;
    for (&n, state) in out.steps.iter().zip(&out.states) {
        let fs = &filt[n];
        let r = filter_bloch_vector(fs, &p.sys);
        let fstate = bloch_from_filter(fs, &p.sys)?;
        let dev = max_abs_diff(&r, &state.bloch());
        max_dev = max_dev.max(dev);
        let mut row = vec![fmt(fs.t), fmt(fs.i_m), fmt(fs.q_m), fmt(fs.lambda)];
        row.extend(r.iter().map(|x| fmt(*x)));
        row.push(fmt(fstate.purity()));
        row.push(fmt(concurrence_exact(&fstate)?));
        row.push(fmt(concurrence_filter(fs, &p.sys)));
        row.push(fmt(dev));
        w.write_record(&row)?;
    }
    w.flush()?;

    let last = filt.last().expect("filter output is never empty");
    let fin = out.final_state();
    let threshold = p.threshold(cfg);
    let summary = TrajectorySummary {
        index,
        model,
        lambda_m: last.lambda,
        i_m: last.i_m,
        q_m: last.q_m,
        threshold,
        heralded: last.i_m.abs() < threshold,
        concurrence_exact: concurrence_exact(fin)?,
        concurrence_filter: concurrence_filter(last, &p.sys),
        zz: fin.expect(3, 3),
        purity: fin.purity(),
        max_filter_deviation: max_dev,
        max_leakage: out.max_leakage,
    };
    io::write_json(&dir.join("summary.json"), &summary)?;
    write_manifest(dir, "trajectory", cfg, &p, vec![index])?;
    Ok(summary)
}

/// Per-trajectory ensemble result.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnsembleRow {
    pub index: u64,
    pub i_m: f64,
    pub q_m: f64,
    pub lambda_m: f64,
    pub heralded: bool,
    pub concurrence_exact: f64,
    pub concurrence_filter: f64,
    pub zz: f64,
    pub purity: f64,
}

fn ensemble_member(sim: &Simulator, p: &Prepared, base_seed: u64, index: u64, threshold: f64) -> Result<EnsembleRow> {
    let mut rng = trajectory_rng(base_seed, index);
    let noise = WienerPath::sample(&mut rng, p.setup.grid.dt, p.setup.n_steps())?;
    let out = sim.run(&noise)?;
    let filt = filter_record(&p.setup, &out.record, p.setup.n_steps())?;
    let last = filt.last().expect("filter output is never empty");
    let fin = out.final_state();
    Ok(EnsembleRow {
        index,
        i_m: last.i_m,
        q_m: last.q_m,
        lambda_m: last.lambda,
        heralded: last.i_m.abs() < threshold,
        concurrence_exact: concurrence_exact(fin)?,
        concurrence_filter: concurrence_filter(last, &p.sys),
        zz: fin.expect(3, 3),
        purity: fin.purity(),
    })
}

/// Runs trajectories `0..n` in parallel batches; stops at the first failing
/// batch and returns the rows completed before it together with the error.
pub fn ensemble_rows(
    cfg: &RunConfig,
    p: &Prepared,
    n: usize,
    threshold: f64,
) -> Result<(Vec<EnsembleRow>, Option<Error>)> {
    let sim = Simulator::new(&p.setup, options_for(cfg, p.model, 0.0))?;
    let base = cfg.ensemble.base_seed;
    let mut rows = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let batch: Vec<Result<EnsembleRow>> = (start..end)
            .into_par_iter()
            .map(|i| ensemble_member(&sim, p, base, i as u64, threshold))
            .collect();
        for r in batch {
            match r {
                Ok(row) => rows.push(row),
                Err(e) => return Ok((rows, Some(e))),
            }
        }
        start = end;
    }
    Ok((rows, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub complete: bool,
    pub lambda_m: f64,
    pub threshold: f64,
    pub n_heralded: usize,
    pub herald_fraction: f64,
    pub herald_fraction_wilson95: (f64, f64),
    pub herald_probability_model: f64,
    pub middle_purity_model: f64,
    pub mean_i: f64,
    pub var_i: f64,
    pub var_q: f64,
    pub var_q_model: f64,
    pub mixture_fit: Option<MixtureFit>,
    pub mixture_means_model: [f64; 3],
    pub mixture_variance_model: f64,
    pub mean_concurrence_heralded_exact: f64,
    pub mean_concurrence_heralded_filter: f64,
    /// Heralded concurrence predicted from η_t, Γ₂ˢ, T_m and Λ.
    pub concurrence_model: f64,
}

pub fn summarize_ensemble(cfg: &RunConfig, p: &Prepared, rows: &[EnsembleRow], complete: bool) -> EnsembleSummary {
    let threshold = p.threshold(cfg);
    let is: Vec<f64> = rows.iter().map(|r| r.i_m).collect();
    let qs: Vec<f64> = rows.iter().map(|r| r.q_m).collect();
    let her: Vec<&EnsembleRow> = rows.iter().filter(|r| r.heralded).collect();
    let n_her = her.len();
    let model = outcome_distribution(p.lambda_m).ok();
    let mixture_fit = model.and_then(|m| fit_mixture(&is, m.weights, m.means, m.variance).ok());
    let (hp, mp, means, var) = match model {
        Some(m) => (m.herald_probability(threshold), m.middle_purity(threshold), m.means, m.variance),
        None => (f64::NAN, f64::NAN, [f64::NAN; 3], f64::NAN),
    };
    EnsembleSummary {
        n_traj: rows.len(),
        complete,
        lambda_m: p.lambda_m,
        threshold,
        n_heralded: n_her,
        herald_fraction: if rows.is_empty() { f64::NAN } else { n_her as f64 / rows.len() as f64 },
        herald_fraction_wilson95: wilson_interval(n_her, rows.len(), 1.959964),
        herald_probability_model: hp,
        middle_purity_model: mp,
        mean_i: mean(&is),
        var_i: variance(&is),
        var_q: variance(&qs),
        var_q_model: 2.0 * p.lambda_m,
        mixture_fit,
        mixture_means_model: means,
        mixture_variance_model: var,
        mean_concurrence_heralded_exact: mean(&her.iter().map(|r| r.concurrence_exact).collect::<Vec<_>>()),
        mean_concurrence_heralded_filter: mean(&her.iter().map(|r| r.concurrence_filter).collect::<Vec<_>>()),
        concurrence_model: heralded_concurrence(
            p.sys.eta_t(),
            p.sys.gamma2_sum(),
            cfg.simulation.t_m_us,
            p.lambda_m,
        ),
    }
}

fn write_histogram(path: &Path, samples: &[f64], lo: f64, hi: f64, bins: usize, density: impl Fn(f64, f64) -> f64) -> Result<()> {
    let h = Histogram::new(samples, lo, hi, bins);
    let n = samples.len().max(1) as f64;
    let mut w = io::csv_writer(path)?;
    w.write_record(["bin_lo", "bin_hi", "count", "density", "model_density"])?;
    for (k, &c) in h.counts.iter().enumerate() {
        let (a, b) = h.edges(k);
        w.write_record([fmt(a), fmt(b), c.to_string(), fmt(c as f64 / (n * h.width())), fmt(density(a, b) / h.width())])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ensemble_outputs(dir: &Path, cfg: &RunConfig, p: &Prepared, rows: &[EnsembleRow], s: &EnsembleSummary) -> Result<()> {
    let mut w = io::csv_writer(&dir.join("trajectories.csv"))?;
    w.write_record(["index", "I_m", "Q_m", "Lambda", "heralded", "C_exact", "C_filter", "ZZ", "purity"])?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            fmt(r.i_m),
            fmt(r.q_m),
            fmt(r.lambda_m),
            (r.heralded as u8).to_string(),
            fmt(r.concurrence_exact),
            fmt(r.concurrence_filter),
            fmt(r.zz),
            fmt(r.purity),
        ])?;
    }
    w.flush()?;
    if let Ok(m) = outcome_distribution(p.lambda_m) {
        let bins = cfg.ensemble.histogram_bins.max(1);
        let span = 2.0 * p.lambda_m + 5.0 * m.sigma();
        let is: Vec<f64> = rows.iter().map(|r| r.i_m).collect();
        let qs: Vec<f64> = rows.iter().map(|r| r.q_m).collect();
        write_histogram(&dir.join("histogram_I.csv"), &is, -span, span, bins, |a, b| m.bin_probability(a, b))?;
        let qd = m.q_distribution();
        let qspan = 5.0 * m.sigma();
        write_histogram(&dir.join("histogram_Q.csv"), &qs, -qspan, qspan, bins, |a, b| {
            use statrs::distribution::ContinuousCDF;
            qd.cdf(b) - qd.cdf(a)
        })?;
    }
    io::write_json(&dir.join("ensemble.json"), s)
}

/// Ensemble of `n` trajectories (default from the configuration). Partial
/// results are written before an error is returned.
pub fn run_ensemble(cfg: &RunConfig, n: Option<usize>, dir: &Path) -> Result<EnsembleSummary> {
    let n = n.unwrap_or(cfg.ensemble.n_traj);
    let p = prepare(cfg, cfg.simulation.model)?;
    io::create_dir(dir)?;
    write_manifest(dir, "ensemble", cfg, &p, (0..n as u64).collect())?;
    let (rows, err) = ensemble_rows(cfg, &p, n, p.threshold(cfg))?;
    let s = summarize_ensemble(cfg, &p, &rows, err.is_none());
    write_ensemble_outputs(dir, cfg, &p, &rows, &s)?;
    match err {
        Some(e) => Err(e),
        None => Ok(s),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub eta_t: f64,
    pub gamma2_s: f64,
    pub lambda: f64,
    pub concurrence: f64,
    pub eta_t_min: Option<f64>,
    pub entangling: bool,
}

/// Heralded concurrence along one parameter axis. Λ is the fixed sweep Λ when
/// given, otherwise the optimum at each point.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let sys = cfg.system_params()?;
    let sw = &cfg.sweep;
    let t_m = cfg.simulation.t_m_us;
    let pts = (0..sw.points).map(|k| sw.start + (sw.stop - sw.start) * k as f64 / (sw.points - 1) as f64);
    let mut out = Vec::with_capacity(sw.points);
    for v in pts {
        let (eta_t, g2, fixed) = match sw.axis {
            SweepAxis::Eta => {
                let mut s = sys.clone();
                s.eta = v;
                (s.eta_t(), sys.gamma2_sum(), sw.lambda)
            }
            SweepAxis::Gamma2 => (sys.eta_t(), v, sw.lambda),
            SweepAxis::Lambda => (sys.eta_t(), sys.gamma2_sum(), Some(v)),
        };
        let lambda = match fixed {
            Some(l) => Some(l),
            None => optimal_lambda_for(eta_t, g2, t_m).lambda,
        };
        let (lambda, c) = match lambda {
            Some(l) => (l, heralded_concurrence(eta_t, g2, t_m, l)),
            None => (f64::NAN, 0.0),
        };
        let eta_t_min = if lambda.is_finite() { efficiency_threshold(g2, t_m, lambda).ok() } else { None };
        out.push(SweepPoint { value: v, eta_t, gamma2_s: g2, lambda, concurrence: c, eta_t_min, entangling: c > 0.0 });
    }
    Ok(out)
}

pub fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<Vec<SweepPoint>> {
    let pts = sweep_points(cfg)?;
    io::create_dir(dir)?;
    let axis = match cfg.sweep.axis {
        SweepAxis::Eta => "eta",
        SweepAxis::Lambda => "lambda",
        SweepAxis::Gamma2 => "gamma2_s_per_us",
    };
    let mut w = io::csv_writer(&dir.join("sweep.csv"))?;
    w.write_record([axis, "eta_t", "gamma2_s_per_us", "lambda", "concurrence", "eta_t_min", "entangling"])?;
    for p in &pts {
        w.write_record([
            fmt(p.value),
            fmt(p.eta_t),
            fmt(p.gamma2_s),
            fmt(p.lambda),
            fmt(p.concurrence),
            p.eta_t_min.map(fmt).unwrap_or_else(|| "nan".into()),
            (p.entangling as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(pts)
}

/// Amplifier gain over ±ω_max: `omega_over_2pi_MHz,re_g,im_g,abs_g2,abs_cross2`.
pub fn run_gain(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let a = cfg.amplifier_params()?;
    let wmax = mhz_to_rad_per_us(cfg.amplifier.omega_max_over_2pi_MHz);
    let n = cfg.amplifier.points.max(2);
    io::create_dir(dir)?;
    let path = dir.join("gain.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record(["omega_over_2pi_MHz", "re_g", "im_g", "abs_g2", "abs_cross2"])?;
    for k in 0..n {
        let om = -wmax + 2.0 * wmax * k as f64 / (n - 1) as f64;
        let g = gain_profile(&a, om);
        let x = cross_gain(&a, om);
        w.write_record([fmt(rad_per_us_to_mhz(om)), fmt(g.re), fmt(g.im), fmt(g.norm_sqr()), fmt(x.norm_sqr())])?;
    }
    w.flush()?;
    Ok(path)
}

/// Cavity amplitudes, measurement amplitudes and the balanced second drive.
pub fn run_cavity(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let p = prepare(cfg, Model::Reduced)?;
    io::create_dir(dir)?;
    let path = dir.join("cavity.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "t_us", "re_ae1", "im_ae1", "re_ag1", "im_ag1", "re_ae2", "im_ae2", "re_ag2", "im_ag2", "re_S1", "im_S1",
        "re_S2", "im_S2", "re_eps2", "im_eps2",
    ])?;
    let [c1, c2] = &p.setup.cavities;
    for k in 0..c1.len() {
        let mut row = vec![fmt(p.setup.grid.t(k))];
        for z in [c1.alpha_e[k], c1.alpha_g[k], c2.alpha_e[k], c2.alpha_g[k], c1.s[k], c2.s[k], c2.eps[k]] {
            row.push(fmt(z.re));
            row.push(fmt(z.im));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    write_manifest(dir, "cavity", cfg, &p, Vec::new())?;
    Ok(path)
}

fn write_filter_csv(path: &Path, states: &[FilterState], sys: &SystemParams) -> Result<()> {
    let mut w = io::csv_writer(path)?;
    let mut header = vec!["t_us".to_string(), "I_m".into(), "Q_m".into(), "Lambda".into()];
    header.extend(BLOCH_LABELS.iter().map(|s| s.to_string()));
    header.extend(["purity", "C_exact", "C_filter", "C_closed_form"].map(String::from));
    w.write_record(&header)?;
    for fs in states {
        let r = filter_bloch_vector(fs, sys);
        let st = bloch_from_filter(fs, sys)?;
        let mut row = vec![fmt(fs.t), fmt(fs.i_m), fmt(fs.q_m), fmt(fs.lambda)];
        row.extend(r.iter().map(|x| fmt(*x)));
        row.push(fmt(st.purity()));
        row.push(fmt(concurrence_exact(&st)?));
        row.push(fmt(concurrence_filter(fs, sys)));
        row.push(fmt(concurrence_closed_form(sys.eta_t(), fs.lambda, fs.i_m, fs.penalty_sum(), fs.gamma2_t_sum())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Applies the filter to a recorded `t_us,dI_r,dQ_r` file.
pub fn run_filter(cfg: &RunConfig, record_path: &Path, dir: &Path) -> Result<FilterState> {
    let record = io::read_record_csv(record_path)?;
    let mut cfg = cfg.clone();
    cfg.simulation.dt_us = record.dt;
    cfg.simulation.t_m_us = record.dt * record.len() as f64;
    let p = prepare(&cfg, Model::Reduced)?;
    let every = ((cfg.simulation.dt_out_us / record.dt).round() as usize).max(1);
    let states = filter_record(&p.setup, &record, every)?;
    io::create_dir(dir)?;
    write_filter_csv(&dir.join("filter.csv"), &states, &p.sys)?;
    let last = *states.last().expect("filter output is never empty");
    io::write_json(&dir.join("summary.json"), &last_summary(&last, &p, &cfg))?;
    Ok(last)
}

#[derive(Serialize)]
struct FilterSummary {
    t_us: f64,
    i_m: f64,
    q_m: f64,
    lambda_m: f64,
    threshold: f64,
    heralded: bool,
    concurrence_filter: f64,
}

fn last_summary(fs: &FilterState, p: &Prepared, cfg: &RunConfig) -> FilterSummary {
    let threshold = cfg.herald_threshold_over_lambda * fs.lambda;
    FilterSummary {
        t_us: fs.t,
        i_m: fs.i_m,
        q_m: fs.q_m,
        lambda_m: fs.lambda,
        threshold,
        heralded: fs.i_m.abs() < threshold,
        concurrence_filter: concurrence_filter(fs, &p.sys),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MostProbableSummary {
    pub q_target: f64,
    pub q_prime: f64,
    pub i_m: f64,
    pub q_m: f64,
    pub lambda_m: f64,
    pub final_zz: f64,
    pub final_concurrence: f64,
    /// ⟨ZZ⟩ along the path never increases.
    pub zz_monotone: bool,
}

/// Most probable record reaching the entangled state with the given Q_m,
/// replayed through the reduced SME and the filter.
pub fn most_probable(cfg: &RunConfig, q_target: f64) -> Result<(MostProbableSummary, Vec<(f64, f64, f64, TwoQubitState)>)> {
    let p = prepare(cfg, Model::Reduced)?;
    let dt = p.setup.grid.dt;
    let n = p.setup.n_steps();
    let s: Vec<f64> = p.setup.cavities[0].s[..n].iter().map(|z| z.re).collect();
    let path = most_probable_trajectory(q_target, &s, dt)?;
    let record = MeasurementRecord::from_increments(dt, path.d_i.clone(), path.d_q.clone())?;
    let opts = SimulationOptions { dt_out: dt, ..options_for(cfg, Model::Reduced, dt) };
    let sim = Simulator::new(&p.setup, opts)?;
    let out = sim.run_record(&record)?;
    let filt = filter_record(&p.setup, &record, n)?;
    let last = filt.last().expect("filter output is never empty");
    let rows: Vec<(f64, f64, f64, TwoQubitState)> = out
        .steps
        .iter()
        .zip(&out.states)
        .map(|(&k, st)| (p.setup.grid.t(k), path.i_path[k], path.q_path[k], st.clone()))
        .collect();
    let zz_monotone = rows.windows(2).all(|w| w[1].3.expect(3, 3) <= w[0].3.expect(3, 3) + 1e-12);
    let fin = out.final_state();
    let summary = MostProbableSummary {
        q_target,
        q_prime: path.q_prime,
        i_m: last.i_m,
        q_m: last.q_m,
        lambda_m: last.lambda,
        final_zz: fin.expect(3, 3),
        final_concurrence: concurrence_exact(fin)?,
        zz_monotone,
    };
    Ok((summary, rows))
}

pub fn run_mostprobable(cfg: &RunConfig, q_target: f64, dir: &Path) -> Result<MostProbableSummary> {
    let (summary, rows) = most_probable(cfg, q_target)?;
    io::create_dir(dir)?;
    let mut w = io::csv_writer(&dir.join("mostprobable.csv"))?;
    w.write_record(["t_us", "I_tilde", "Q_tilde", "ZZ", "XX", "YY", "ZI", "IZ", "C"])?;
    let every = ((cfg.simulation.dt_out_us / cfg.simulation.dt_us).round() as usize).max(1);
    for (k, (t, i, q, st)) in rows.iter().enumerate() {
        if k % every != 0 && k + 1 != rows.len() {
            continue;
        }
        w.write_record([
            fmt(*t),
            fmt(*i),
            fmt(*q),
            fmt(st.expect(3, 3)),
            fmt(st.expect(1, 1)),
            fmt(st.expect(2, 2)),
            fmt(st.expect(3, 0)),
            fmt(st.expect(0, 3)),
            fmt(concurrence_exact(st)?),
        ])?;
    }
    w.flush()?;
    io::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct FullComparison {
    pub n_fock: usize,
    pub dt_us: f64,
    pub max_trace_distance: f64,
    pub final_trace_distance: f64,
    pub max_leakage: f64,
    pub max_photons: f64,
}

/// Unconditioned evolution of the full qubit-cavity model against the reduced
/// model on the same grid.
pub fn compare_full_reduced(cfg: &RunConfig) -> Result<(FullComparison, Vec<[f64; 6]>)> {
    let p = prepare(cfg, Model::Full)?;
    let dt_out = cfg.simulation.dt_out_us;
    let red = Simulator::new(&p.setup, options_for(cfg, Model::Reduced, dt_out))?.run_unconditioned()?;
    let full_sim = Simulator::new(&p.setup, options_for(cfg, Model::Full, dt_out))?;
    let model = full_sim.full_model().expect("full engine");
    let mut state = crate::sme::FullState::initial(model.n_fock);
    let n = p.setup.n_steps();
    let mut rows = Vec::new();
    let (mut max_td, mut max_leak, mut max_ph) = (0.0f64, 0.0f64, 0.0f64);
    let mut out_k = 0;
    for k in 0..=n {
        if k > 0 {
            state = model.step_unconditioned(&state, k - 1)?;
        }
        let leak = state.leakage();
        let ph = state.photons();
        max_leak = max_leak.max(leak[0].max(leak[1]));
        max_ph = max_ph.max(ph[0].max(ph[1]));
        if out_k < red.steps.len() && red.steps[out_k] == k {
            let td = trace_distance(&state.qubits().to_dmatrix(), &red.states[out_k].to_dmatrix());
            max_td = max_td.max(td);
            rows.push([p.setup.grid.t(k), td, leak[0], leak[1], ph[0], ph[1]]);
            out_k += 1;
        }
    }
    if max_leak > model.leakage_limit {
        return Err(Error::Truncation { t: cfg.simulation.t_m_us, leak: max_leak, limit: model.leakage_limit });
    }
    let final_td = rows.last().map(|r| r[1]).unwrap_or(0.0);
    Ok((
        FullComparison {
            n_fock: model.n_fock,
            dt_us: p.setup.grid.dt,
            max_trace_distance: max_td,
            final_trace_distance: final_td,
            max_leakage: max_leak,
            max_photons: max_ph,
        },
        rows,
    ))
}

pub fn run_fullsme(cfg: &RunConfig, dir: &Path) -> Result<FullComparison> {
    let (c, rows) = compare_full_reduced(cfg)?;
    io::create_dir(dir)?;
    let mut w = io::csv_writer(&dir.join("fullsme.csv"))?;
    w.write_record(["t_us", "trace_distance", "leakage1", "leakage2", "photons1", "photons2"])?;
    for r in &rows {
        w.write_record(r.map(fmt))?;
    }
    w.flush()?;
    io::write_json(&dir.join("fullsme.json"), &c)?;
    Ok(c)
}
