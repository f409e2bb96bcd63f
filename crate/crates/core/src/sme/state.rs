use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, kron2, pauli};

/// Labels of the 15 two-qubit Bloch coordinates ⟨σ_a¹σ_b²⟩ in storage order.
pub const BLOCH_LABELS: [&str; 15] = [
    "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

/// Storage index of ⟨σ_a σ_b⟩ with a, b ∈ 0..4 = I, X, Y, Z, not both zero.
pub fn bloch_index(a: usize, b: usize) -> usize {
    4 * a + b - 1
}

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Two-qubit density matrix in the basis |ee⟩, |eg⟩, |ge⟩, |gg⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    pub rho: Matrix4<C64>,
}

impl TwoQubitState {
    pub fn new(rho: Matrix4<C64>) -> Self {
        Self { rho }
    }

    /// |++⟩⟨++|
    pub fn plus_plus() -> Self {
        Self { rho: Matrix4::from_element(C64::new(0.25, 0.0)) }
    }

    /// ρ = ¼ Σ r_ab σ_a⊗σ_b with r_II = 1.
    pub fn from_bloch(r: &[f64; 15]) -> Self {
        let mut rho = kron2(&pauli(0), &pauli(0));
        for a in 0..4 {
            for b in 0..4 {
                if a + b == 0 {
                    continue;
                }
                rho += kron2(&pauli(a), &pauli(b)) * C64::new(r[bloch_index(a, b)], 0.0);
            }
        }
        Self { rho: rho * C64::new(0.25, 0.0) }
    }

    pub fn bloch(&self) -> [f64; 15] {
        let mut r = [0.0; 15];
        for a in 0..4 {
            for b in 0..4 {
                if a + b == 0 {
                    continue;
                }
                r[bloch_index(a, b)] = (kron2(&pauli(a), &pauli(b)) * self.rho).trace().re;
            }
        }
        r
    }

    pub fn expect(&self, a: usize, b: usize) -> f64 {
        (kron2(&pauli(a), &pauli(b)) * self.rho).trace().re
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(4, 4, |i, j| self.rho[(i, j)])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.to_dmatrix())[0]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Checks Hermiticity, unit trace and (optionally) positivity.
    pub fn validate(&self, check_positivity: bool) -> Result<()> {
        let h = self.hermiticity_defect();
        if !(h <= HERMITICITY_TOL) {
            return Err(Error::Invariant(format!("density matrix not Hermitian (defect {h:.3e})")));
        }
        let t = self.trace();
        if !((t - C64::new(1.0, 0.0)).norm() <= TRACE_TOL) {
            return Err(Error::Invariant(format!("trace {t} differs from 1")));
        }
        if check_positivity {
            let m = self.min_eigenvalue();
            if !(m >= -POSITIVITY_TOL) {
                return Err(Error::Invariant(format!("negative eigenvalue {m:.3e}")));
            }
        }
        Ok(())
    }

    /// Max absolute difference of Bloch coordinates.
    pub fn bloch_distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.bloch(), other.bloch());
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn hermitize_normalize(&mut self) -> C64 {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let t = h.trace();
        self.rho = h / t;
        t
    }
}
