use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Independent random stream for trajectory `index` of an ensemble.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Two independent N(0, dt) increments.
pub fn wiener_pair<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> (f64, f64) {
    let sd = dt.sqrt();
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a * sd, b * sd)
}

/// Pre-drawn Wiener increments on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    pub dt: f64,
    pub dw_i: Vec<f64>,
    pub dw_q: Vec<f64>,
}

impl WienerPath {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
        }
        let mut dw_i = Vec::with_capacity(n_steps);
        let mut dw_q = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let (a, b) = wiener_pair(rng, dt);
            dw_i.push(a);
            dw_q.push(b);
        }
        Ok(Self { dt, dw_i, dw_q })
    }

    pub fn zero(dt: f64, n_steps: usize) -> Self {
        Self { dt, dw_i: vec![0.0; n_steps], dw_q: vec![0.0; n_steps] }
    }

    pub fn len(&self) -> usize {
        self.dw_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dw_i.is_empty()
    }

    /// Same Brownian path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.len() % factor != 0 {
            return Err(Error::InvalidParams(format!("cannot coarsen {} steps by {factor}", self.len())));
        }
        let sum = |v: &[f64]| v.chunks(factor).map(|c| c.iter().sum()).collect::<Vec<f64>>();
        Ok(Self { dt: self.dt * factor as f64, dw_i: sum(&self.dw_i), dw_q: sum(&self.dw_q) })
    }
}
