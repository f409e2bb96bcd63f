use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Qubit,
    Mode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub label: String,
    pub kind: FactorKind,
    pub dim: usize,
}

/// Ordered tensor product of labeled qubits and truncated bosonic modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.dim < 2 {
                return Err(Error::InvalidParams(format!("factor `{}` has dimension {}", f.label, f.dim)));
            }
            if f.kind == FactorKind::Qubit && f.dim != 2 {
                return Err(Error::InvalidParams(format!("qubit `{}` must have dimension 2", f.label)));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::InvalidParams(format!("duplicate factor label `{}`", f.label)));
            }
        }
        Ok(Self { factors })
    }

    pub fn qubit(label: &str) -> Factor {
        Factor { label: label.to_string(), kind: FactorKind::Qubit, dim: 2 }
    }

    pub fn mode(label: &str, n_fock: usize) -> Factor {
        Factor { label: label.to_string(), kind: FactorKind::Mode, dim: n_fock }
    }

    /// Two qubits followed by two cavities, the layout used by the compiled network.
    pub fn two_pairs(n_fock: usize) -> Result<Self> {
        Self::new(vec![
            Self::qubit("q1"),
            Self::qubit("q2"),
            Self::mode("c1", n_fock),
            Self::mode("c2", n_fock),
        ])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    /// Embeds per-factor local operators (identity where `None`) into the full space.
    pub fn embed(&self, locals: &[Option<DMatrix<C64>>]) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (f, local) in self.factors.iter().zip(locals) {
            let op = match local {
                Some(op) => op.clone(),
                None => DMatrix::identity(f.dim, f.dim),
            };
            m = m.kronecker(&op);
        }
        m
    }
}
