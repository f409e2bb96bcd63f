use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

use super::setup::MeasurementSetup;
use super::state::TwoQubitState;
use crate::error::{Error, Result};
use crate::slh::network::QUBIT;
use crate::slh::{build_network, generator_from_triplet, Elem, HilbertSpace, Monitoring, SmeGenerator, Symbol};
use crate::slh::{CHANNEL_I, CHANNEL_Q};

/// Default bound on the population of the two highest Fock levels.
pub const DEFAULT_LEAKAGE_LIMIT: f64 = 1e-4;

/// Density matrix on qubit₁ ⊗ qubit₂ ⊗ cavity₁ ⊗ cavity₂.
#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub rho: DMatrix<C64>,
    pub n_fock: usize,
}

impl FullState {
    /// |++⟩ ⊗ |0, 0⟩.
    pub fn initial(n_fock: usize) -> Self {
        let m = n_fock * n_fock;
        let dim = 4 * m;
        let mut rho = DMatrix::zeros(dim, dim);
        for a in 0..4 {
            for b in 0..4 {
                rho[(a * m, b * m)] = C64::new(0.25, 0.0);
            }
        }
        Self { rho, n_fock }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Partial trace over both cavities.
    pub fn qubits(&self) -> TwoQubitState {
        let m = self.n_fock * self.n_fock;
        let mut r = Matrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..m {
                    s += self.rho[(a * m + k, b * m + k)];
                }
                r[(a, b)] = s;
            }
        }
        TwoQubitState::new(r)
    }

    /// Population of the two highest Fock levels of each cavity.
    pub fn leakage(&self) -> [f64; 2] {
        let n = self.n_fock;
        let mut out = [0.0; 2];
        for i in 0..self.dim() {
            let (n1, n2) = ((i / n) % n, i % n);
            let p = self.rho[(i, i)].re;
            if n1 + 2 >= n {
                out[0] += p;
            }
            if n2 + 2 >= n {
                out[1] += p;
            }
        }
        out
    }

    /// Mean photon numbers ⟨a_j†a_j⟩.
    pub fn photons(&self) -> [f64; 2] {
        let n = self.n_fock;
        let mut out = [0.0; 2];
        for i in 0..self.dim() {
            let p = self.rho[(i, i)].re;
            out[0] += p * ((i / n) % n) as f64;
            out[1] += p * (i % n) as f64;
        }
        out
    }

    fn hermitize_normalize(&mut self) -> C64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace();
        self.rho = h / tr;
        tr
    }
}

/// Qubit-cavity network compiled into an SME generator, with the classical
/// drives sampled on the simulation grid.
#[derive(Clone, Debug)]
pub struct FullModel {
    pub generator: SmeGenerator,
    pub n_fock: usize,
    pub leakage_limit: f64,
    eps: [Vec<C64>; 2],
    offsets: Vec<(f64, f64)>,
    dt: f64,
}

impl FullModel {
    pub fn new(setup: &MeasurementSetup, n_fock: usize, relaxation: bool) -> Result<Self> {
        if n_fock < 3 {
            return Err(Error::InvalidParams(format!("Fock truncation {n_fock} too small")));
        }
        let sys = &setup.sys;
        let g = build_network(sys, n_fock)?;
        let monitoring = Monitoring { i_channel: Some(CHANNEL_I), q_channel: Some(CHANNEL_Q) };
        let mut generator = generator_from_triplet(&g, monitoring, sys.eta)?;
        let space = HilbertSpace::two_pairs(n_fock)?;
        for j in 0..2 {
            let p = &sys.pairs[j];
            // Without explicit relaxation its Γ/2 contribution to Γ₂ is kept as pure dephasing.
            let (g1, gphi) = if relaxation { (p.gamma1, p.gamma_phi) } else { (0.0, p.gamma_phi + p.gamma1 / 2.0) };
            if g1 > 0.0 {
                generator.add_dissipator_word(&space, g1.sqrt(), &[Elem::SigmaMinus(QUBIT[j])])?;
            }
            if gphi > 0.0 {
                generator.add_dissipator_word(&space, (gphi / 2.0).sqrt(), &[Elem::SigmaZ(QUBIT[j])])?;
            }
        }
        let eps = [setup.cavities[0].eps.clone(), setup.cavities[1].eps.clone()];
        let dt = setup.grid.dt;
        let (u1, u2) = (&setup.cavities[0].u, &setup.cavities[1].u);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let offsets = u1.iter().zip(u2).map(|(a, b)| ((a + b).re * r * dt, -(a - b).im * r * dt)).collect();
        Ok(Self { generator, n_fock, leakage_limit: DEFAULT_LEAKAGE_LIMIT, eps, offsets, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Deterministic record offsets Re(U₁+U₂)dt/√2 and −Im(U₁−U₂)dt/√2 at step `n`.
    pub fn offset(&self, n: usize) -> (f64, f64) {
        self.offsets[n]
    }

    fn drive_value(&self, n: usize) -> impl Fn(Symbol) -> C64 + '_ {
        move |s| match s {
            Symbol::Eps(j) => self.eps[j][n],
            Symbol::EpsConj(j) => self.eps[j][n].conj(),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Expected record drifts (⟨c_I + c_I†⟩, ⟨c_Q + c_Q†⟩), offsets included.
    pub fn record_mean(&self, state: &FullState) -> (f64, f64) {
        let g = &self.generator;
        let mi = g.innovation_i.as_ref().map_or(0.0, |c| c.mean(&state.rho));
        let mq = g.innovation_q.as_ref().map_or(0.0, |c| c.mean(&state.rho));
        (mi, mq)
    }

    fn advance(&self, state: &FullState, n: usize, dw: Option<(f64, f64)>) -> Result<FullState> {
        let value = self.drive_value(n);
        let mut next = state.rho.clone();
        self.generator.add_drift(&state.rho, &value, &mut next, self.dt);
        if let Some((wi, wq)) = dw {
            if let Some(c) = &self.generator.innovation_i {
                c.apply(wi, &state.rho, &mut next);
            }
            if let Some(c) = &self.generator.innovation_q {
                c.apply(wq, &state.rho, &mut next);
            }
        }
        let mut out = FullState { rho: next, n_fock: self.n_fock };
        let tr = out.hermitize_normalize();
        let t = n as f64 * self.dt;
        if !(tr.re > 1e-300) || out.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numerical(t, "trace collapse or non-finite density matrix"));
        }
        Ok(out)
    }

    /// Aborts when the truncation leakage exceeds the limit.
    pub fn check_leakage(&self, state: &FullState, t: f64) -> Result<f64> {
        let leak = state.leakage().into_iter().fold(0.0, f64::max);
        if leak > self.leakage_limit {
            return Err(Error::Truncation { t, leak, limit: self.leakage_limit });
        }
        Ok(leak)
    }

    /// One Euler–Maruyama step at grid index `n`; returns the new state and
    /// the record increments (offsets included).
    pub fn step(&self, state: &FullState, n: usize, dw: (f64, f64)) -> Result<(FullState, (f64, f64))> {
        let (mi, mq) = self.record_mean(state);
        let rec = (mi * self.dt + dw.0, mq * self.dt + dw.1);
        Ok((self.advance(state, n, Some(dw))?, rec))
    }

    /// One step conditioned on given record increments (offsets included).
    pub fn step_record(&self, state: &FullState, n: usize, rec: (f64, f64)) -> Result<FullState> {
        let (mi, mq) = self.record_mean(state);
        self.advance(state, n, Some((rec.0 - mi * self.dt, rec.1 - mq * self.dt)))
    }

    /// One step of the unconditioned evolution.
    pub fn step_unconditioned(&self, state: &FullState, n: usize) -> Result<FullState> {
        self.advance(state, n, None)
    }
}
