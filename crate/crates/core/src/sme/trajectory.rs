use serde::{Deserialize, Serialize};

use super::full::{FullModel, FullState, DEFAULT_LEAKAGE_LIMIT};
use super::record::MeasurementRecord;
use super::reduced::{step_reduced, step_reduced_record, step_unconditioned, Scheme};
use super::setup::{MeasurementSetup, StepCoefficients};
use super::state::TwoQubitState;
use super::wiener::WienerPath;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Reduced,
    Full,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(Model::Reduced),
            "full" => Ok(Model::Full),
            _ => Err(Error::config("model", format!("unknown model `{s}` (reduced|full)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub model: Model,
    pub scheme: Scheme,
    /// Simulate qubit relaxation explicitly instead of folding Γ/2 into dephasing.
    pub relaxation: bool,
    /// State output cadence; zero stores only the initial and final states.
    pub dt_out: f64,
    pub n_fock: usize,
    /// Remove the deterministic U_j offsets from full-model records.
    pub subtract_offsets: bool,
    /// Conditioned on a simulated record (false: unconditioned evolution, empty record).
    pub conditioned: bool,
    pub leakage_limit: f64,
    /// Keep the Wiener increments alongside the record.
    pub keep_noise: bool,
    /// Abort when a sampled state has an eigenvalue below −POSITIVITY_TOL.
    pub check_positivity: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            model: Model::Reduced,
            scheme: Scheme::Kraus,
            relaxation: false,
            dt_out: 0.0,
            n_fock: 8,
            subtract_offsets: true,
            conditioned: true,
            leakage_limit: DEFAULT_LEAKAGE_LIMIT,
            keep_noise: false,
            check_positivity: true,
        }
    }
}

/// States sampled on the output grid and the full-resolution record.
#[derive(Clone, Debug)]
pub struct TrajectoryOutput {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<TwoQubitState>,
    pub record: MeasurementRecord,
    /// Largest truncation leakage seen (full model only).
    pub max_leakage: Option<f64>,
}

impl TrajectoryOutput {
    pub fn final_state(&self) -> &TwoQubitState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

enum Engine {
    Reduced(Vec<StepCoefficients>),
    Full(Box<FullModel>),
}

/// Integrator prepared once for a measurement setup and reused across noise paths.
pub struct Simulator<'a> {
    pub setup: &'a MeasurementSetup,
    pub options: SimulationOptions,
    engine: Engine,
    out_every: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(setup: &'a MeasurementSetup, options: SimulationOptions) -> Result<Self> {
        let n = setup.n_steps();
        let dt = setup.grid.dt;
        let out_every = if options.dt_out <= 0.0 {
            n.max(1)
        } else {
            let k = (options.dt_out / dt).round();
            if k < 1.0 || ((k * dt - options.dt_out).abs() > 1e-9 * options.dt_out) {
                return Err(Error::config("dt_out", format!("{} is not a multiple of dt = {dt}", options.dt_out)));
            }
            k as usize
        };
        let engine = match options.model {
            Model::Reduced => Engine::Reduced(setup.all_coefficients(options.relaxation)),
            Model::Full => {
                let mut m = FullModel::new(setup, options.n_fock, options.relaxation)?;
                m.leakage_limit = options.leakage_limit;
                Engine::Full(Box::new(m))
            }
        };
        Ok(Self { setup, options, engine, out_every })
    }

    pub fn full_model(&self) -> Option<&FullModel> {
        match &self.engine {
            Engine::Full(m) => Some(m),
            Engine::Reduced(_) => None,
        }
    }

    fn is_output(&self, n: usize) -> bool {
        n % self.out_every == 0 || n == self.setup.n_steps()
    }

    /// Integrates from |++⟩ along the given Wiener path.
    pub fn run(&self, noise: &WienerPath) -> Result<TrajectoryOutput> {
        let n_steps = self.setup.n_steps();
        let dt = self.setup.grid.dt;
        if self.options.conditioned && (noise.len() != n_steps || (noise.dt - dt).abs() > 1e-12 * dt) {
            return Err(Error::InvalidParams(format!(
                "noise path has {} steps of {}, grid has {n_steps} of {dt}",
                noise.len(),
                noise.dt
            )));
        }
        self.integrate(|n| Source::Noise((noise.dw_i[n], noise.dw_q[n])))
    }

    /// Integrates from |++⟩ conditioned on a given record (offsets removed for the full model
    /// when `subtract_offsets` is set).
    pub fn run_record(&self, record: &MeasurementRecord) -> Result<TrajectoryOutput> {
        record.validate()?;
        if record.len() != self.setup.n_steps() {
            return Err(Error::InvalidParams(format!(
                "record has {} increments, grid has {} steps",
                record.len(),
                self.setup.n_steps()
            )));
        }
        self.integrate(|n| Source::Record((record.d_i[n], record.d_q[n])))
    }

    /// Unconditioned evolution regardless of the `conditioned` option.
    pub fn run_unconditioned(&self) -> Result<TrajectoryOutput> {
        self.integrate(|_| Source::None)
    }

    fn integrate(&self, src: impl Fn(usize) -> Source) -> Result<TrajectoryOutput> {
        let n_steps = self.setup.n_steps();
        let dt = self.setup.grid.dt;
        let opts = &self.options;
        let conditioned = opts.conditioned;
        let mut out = TrajectoryOutput {
            steps: vec![0],
            times: vec![0.0],
            states: vec![TwoQubitState::plus_plus()],
            record: MeasurementRecord::with_capacity(dt, if conditioned { n_steps } else { 0 }, opts.keep_noise),
            max_leakage: None,
        };
        let push_record = |out: &mut TrajectoryOutput, rec: (f64, f64), dw: Option<(f64, f64)>| {
            out.record.d_i.push(rec.0);
            out.record.d_q.push(rec.1);
            if let (true, Some(w)) = (opts.keep_noise, dw) {
                out.record.dw_i.push(w.0);
                out.record.dw_q.push(w.1);
            }
        };
        match &self.engine {
            Engine::Reduced(coeffs) => {
                let mut s = TwoQubitState::plus_plus();
                for (n, c) in coeffs.iter().enumerate() {
                    let t0 = self.setup.grid.t(n);
                    s = match (conditioned, src(n)) {
                        (true, Source::Noise(dw)) => {
                            let (next, rec) = step_reduced(&s, c, dw, opts.scheme).map_err(|e| at_time(e, t0))?;
                            push_record(&mut out, rec, Some(dw));
                            next
                        }
                        (true, Source::Record(rec)) => {
                            push_record(&mut out, rec, None);
                            step_reduced_record(&s, c, rec, opts.scheme).map_err(|e| at_time(e, t0))?
                        }
                        _ => step_unconditioned(&s, c, opts.scheme).map_err(|e| at_time(e, t0))?,
                    };
                    if self.is_output(n + 1) {
                        s.validate(opts.check_positivity).map_err(|e| at_time(e, self.setup.grid.t(n + 1)))?;
                        out.steps.push(n + 1);
                        out.times.push(self.setup.grid.t(n + 1));
                        out.states.push(s);
                    }
                }
            }
            Engine::Full(model) => {
                let mut s = FullState::initial(opts.n_fock);
                let mut max_leak: f64 = 0.0;
                for n in 0..n_steps {
                    let t1 = self.setup.grid.t(n + 1);
                    s = match (conditioned, src(n)) {
                        (true, Source::Noise(dw)) => {
                            let (next, mut rec) = model.step(&s, n, dw).map_err(|e| at_time(e, self.setup.grid.t(n)))?;
                            if opts.subtract_offsets {
                                let o = model.offset(n);
                                rec = (rec.0 - o.0, rec.1 - o.1);
                            }
                            push_record(&mut out, rec, Some(dw));
                            next
                        }
                        (true, Source::Record(mut rec)) => {
                            push_record(&mut out, rec, None);
                            if opts.subtract_offsets {
                                let o = model.offset(n);
                                rec = (rec.0 + o.0, rec.1 + o.1);
                            }
                            model.step_record(&s, n, rec).map_err(|e| at_time(e, self.setup.grid.t(n)))?
                        }
                        _ => model.step_unconditioned(&s, n).map_err(|e| at_time(e, self.setup.grid.t(n)))?,
                    };
                    max_leak = max_leak.max(model.check_leakage(&s, t1)?);
                    if self.is_output(n + 1) {
                        let q = s.qubits();
                        q.validate(opts.check_positivity).map_err(|e| at_time(e, t1))?;
                        out.steps.push(n + 1);
                        out.times.push(t1);
                        out.states.push(q);
                    }
                }
                out.max_leakage = Some(max_leak);
            }
        }
        Ok(out)
    }
}

enum Source {
    Noise((f64, f64)),
    Record((f64, f64)),
    None,
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::Numerical { t: tt, msg } if tt.is_nan() => Error::Numerical { t, msg },
        Error::Invariant(msg) => Error::Numerical { t, msg },
        other => other,
    }
}

/// Single trajectory from |++⟩ along `noise`.
pub fn simulate_trajectory(
    setup: &MeasurementSetup,
    noise: &WienerPath,
    options: &SimulationOptions,
) -> Result<TrajectoryOutput> {
    Simulator::new(setup, options.clone())?.run(noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{DriveShape, PairParams, SystemParams, TimeGrid};
    use crate::mhz_to_rad_per_us;
    use crate::sme::wiener::trajectory_rng;

    fn ideal_setup(dt: f64, eps_scale: f64) -> MeasurementSetup {
        let k = mhz_to_rad_per_us(5.0);
        let sys = SystemParams {
            pairs: [PairParams::ideal(k, k), PairParams::ideal(1.1 * k, 1.1 * k)],
            eta: 1.0,
            gain: None,
        };
        let shape = DriveShape::FlatRise { eps_m: eps_scale * k / 6f64.sqrt(), t_s: 0.03, t_e: 0.5, t_ramp: 0.1113 };
        MeasurementSetup::new(sys, TimeGrid::new(dt, 1.0).unwrap(), &shape, true).unwrap()
    }

    #[test]
    fn zero_drive_record_is_pure_noise() {
        let k = mhz_to_rad_per_us(5.0);
        let sys = SystemParams { pairs: [PairParams::ideal(k, k); 2], eta: 1.0, gain: None };
        let setup = MeasurementSetup::new(sys, TimeGrid::new(2.5e-4, 0.2).unwrap(), &DriveShape::Zero, false).unwrap();
        let noise = WienerPath::sample(&mut trajectory_rng(1, 0), 2.5e-4, 800).unwrap();
        let out = simulate_trajectory(&setup, &noise, &SimulationOptions::default()).unwrap();
        assert_eq!(out.record.d_i, noise.dw_i);
        assert_eq!(out.record.d_q, noise.dw_q);
        assert!(out.final_state().bloch_distance(&TwoQubitState::plus_plus()) < 1e-12);
    }

    #[test]
    fn output_cadence() {
        let setup = ideal_setup(2.5e-4, 1.0);
        let opts = SimulationOptions { dt_out: 0.1, conditioned: false, ..Default::default() };
        let out = Simulator::new(&setup, opts).unwrap().run_unconditioned().unwrap();
        assert_eq!(out.states.len(), 11);
        assert!((out.times[10] - 1.0).abs() < 1e-12);
        assert!(out.record.is_empty());
        let bad = SimulationOptions { dt_out: 0.00015, ..Default::default() };
        assert!(Simulator::new(&setup, bad).is_err());
    }

    #[test]
    fn strong_measurement_projects_parity() {
        let setup = ideal_setup(2e-4, 2.0);
        let sim = Simulator::new(&setup, SimulationOptions::default()).unwrap();
        let n = setup.n_steps();
        let mut even = 0;
        let trials = 60;
        for i in 0..trials {
            let noise = WienerPath::sample(&mut trajectory_rng(42, i), 2e-4, n).unwrap();
            let zz = sim.run(&noise).unwrap().final_state().expect(3, 3);
            assert!(zz.abs() > 0.98, "⟨ZZ⟩ = {zz}");
            if zz > 0.0 {
                even += 1;
            }
        }
        // p = 1/2 within ~3.5σ
        assert!((even as f64 / trials as f64 - 0.5).abs() < 0.23, "{even}/{trials}");
    }

    #[test]
    fn record_replay_reproduces_state() {
        let setup = ideal_setup(2e-4, 0.5);
        for scheme in [Scheme::Kraus, Scheme::EulerMaruyama] {
            let opts = SimulationOptions { scheme, dt_out: 0.05, check_positivity: false, ..Default::default() };
            let sim = Simulator::new(&setup, opts).unwrap();
            let noise = WienerPath::sample(&mut trajectory_rng(3, 1), 2e-4, setup.n_steps()).unwrap();
            let a = sim.run(&noise).unwrap();
            let b = sim.run_record(&a.record).unwrap();
            for (x, y) in a.states.iter().zip(&b.states) {
                assert!(x.bloch_distance(y) < 1e-9);
            }
        }
    }

    #[test]
    fn symmetric_populations_for_balanced_drive() {
        let setup = ideal_setup(1e-4, 1.0);
        let sim = Simulator::new(&setup, SimulationOptions { dt_out: 0.01, ..Default::default() }).unwrap();
        let noise = WienerPath::sample(&mut trajectory_rng(9, 0), 1e-4, setup.n_steps()).unwrap();
        for s in sim.run(&noise).unwrap().states {
            assert!((s.expect(3, 0) - s.expect(0, 3)).abs() < 1e-9);
        }
    }

    fn strong_errors(scheme: Scheme, eps_scale: f64) -> Vec<f64> {
        // fixed fine Wiener paths, coarsened dyadically
        let fine = 2.5e-5;
        let levels = [8usize, 4, 2, 1];
        let setups: Vec<_> = levels.iter().map(|f| ideal_setup(fine * *f as f64, eps_scale)).collect();
        let mut errs = vec![0.0; levels.len() - 1];
        let seeds = 8;
        for seed in 0..seeds {
            let base = WienerPath::sample(&mut trajectory_rng(77, seed), fine, setups[3].n_steps()).unwrap();
            let finals: Vec<TwoQubitState> = levels
                .iter()
                .zip(&setups)
                .map(|(f, s)| {
                    let opts = SimulationOptions { scheme, check_positivity: false, ..Default::default() };
                    let path = base.coarsen(*f).unwrap();
                    *simulate_trajectory(s, &path, &opts).unwrap().final_state()
                })
                .collect();
            for i in 0..errs.len() {
                errs[i] += finals[i].bloch_distance(&finals[i + 1]) / seeds as f64;
            }
        }
        errs
    }

    #[test]
    fn strong_convergence_order() {
        // Euler–Maruyama loses positivity at the coarsest step for the full drive
        for (scheme, eps_scale) in [(Scheme::Kraus, 1.0), (Scheme::EulerMaruyama, 0.5)] {
            let e = strong_errors(scheme, eps_scale);
            let order = (e[0] / e[2]).log2() / 2.0;
            assert!(order >= 0.5, "{scheme:?}: errors {e:?}, order {order}");
        }
    }
}
