use crate::error::{Error, Result};

/// Heterodyne record increments on the simulation grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasurementRecord {
    pub dt: f64,
    pub d_i: Vec<f64>,
    pub d_q: Vec<f64>,
    /// Wiener increments that generated the record, when simulated.
    pub dw_i: Vec<f64>,
    pub dw_q: Vec<f64>,
}

impl MeasurementRecord {
    pub fn with_capacity(dt: f64, n: usize, keep_noise: bool) -> Self {
        let m = if keep_noise { n } else { 0 };
        Self {
            dt,
            d_i: Vec::with_capacity(n),
            d_q: Vec::with_capacity(n),
            dw_i: Vec::with_capacity(m),
            dw_q: Vec::with_capacity(m),
        }
    }

    /// Record without noise bookkeeping.
    pub fn from_increments(dt: f64, d_i: Vec<f64>, d_q: Vec<f64>) -> Result<Self> {
        let r = Self { dt, d_i, d_q, dw_i: vec![], dw_q: vec![] };
        r.validate()?;
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.d_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_i.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("record step {} must be positive", self.dt)));
        }
        if self.d_q.len() != self.d_i.len() {
            return Err(Error::InvalidParams("record quadratures differ in length".into()));
        }
        if let Some(k) = self.d_i.iter().chain(&self.d_q).position(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite record increment at index {k}")));
        }
        Ok(())
    }

    /// Start time of increment `n`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}
