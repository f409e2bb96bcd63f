use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::expr::OperatorExpr;
use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub const UNITARITY_TOL: f64 = 1e-12;
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Scattering matrix, coupling vector and Hamiltonian of a network element.
#[derive(Clone, Debug)]
pub struct SLHTriplet {
    space: Arc<HilbertSpace>,
    s: DMatrix<C64>,
    l: Vec<OperatorExpr>,
    h: OperatorExpr,
}

impl SLHTriplet {
    pub fn new(space: Arc<HilbertSpace>, s: DMatrix<C64>, l: Vec<OperatorExpr>, h: OperatorExpr) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::InvalidParams("scattering matrix must be square".into()));
        }
        if l.len() != s.nrows() {
            return Err(Error::PortMismatch(s.nrows(), l.len()));
        }
        let dev = unitarity_defect(&s);
        if dev > UNITARITY_TOL {
            return Err(Error::InvalidParams(format!("scattering matrix not unitary: ‖S†S − I‖ = {dev:.3e}")));
        }
        let herm = h.max_abs_diff(&h.adjoint());
        if herm > HERMITICITY_TOL * h.max_coefficient().max(1.0) {
            return Err(Error::InvalidParams(format!("Hamiltonian not Hermitian: defect {herm:.3e}")));
        }
        Ok(Self { space, s, l, h })
    }

    /// Pass-through element on `n` ports.
    pub fn identity(space: Arc<HilbertSpace>, n: usize) -> Self {
        Self { space, s: DMatrix::identity(n, n), l: vec![OperatorExpr::zero(); n], h: OperatorExpr::zero() }
    }

    pub fn ports(&self) -> usize {
        self.l.len()
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn s(&self) -> &DMatrix<C64> {
        &self.s
    }

    pub fn l(&self) -> &[OperatorExpr] {
        &self.l
    }

    pub fn h(&self) -> &OperatorExpr {
        &self.h
    }

    /// Largest entrywise difference between two triplets (S, L and H coefficients).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.ports() != other.ports() {
            return f64::INFINITY;
        }
        let ds = (&self.s - &other.s).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dl = self.l.iter().zip(&other.l).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
        ds.max(dl).max(self.h.max_abs_diff(&other.h))
    }
}

/// Frobenius norm of S†S − I.
pub fn unitarity_defect(s: &DMatrix<C64>) -> f64 {
    let n = s.nrows();
    (s.adjoint() * s - DMatrix::<C64>::identity(n, n)).norm()
}

fn check_space(a: &SLHTriplet, b: &SLHTriplet) -> Result<()> {
    if Arc::ptr_eq(&a.space, &b.space) || *a.space == *b.space {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// Series product: outputs of `g1` feed the inputs of `g2`.
pub fn cascade(g2: &SLHTriplet, g1: &SLHTriplet) -> Result<SLHTriplet> {
    if g2.ports() != g1.ports() {
        return Err(Error::PortMismatch(g2.ports(), g1.ports()));
    }
    check_space(g2, g1)?;
    let n = g1.ports();
    let s = &g2.s * &g1.s;
    let mut l = Vec::with_capacity(n);
    for i in 0..n {
        let mut li = g2.l[i].clone();
        for k in 0..n {
            li = li.add(&g1.l[k].scale(g2.s[(i, k)]));
        }
        l.push(li);
    }
    // L₂†S₂L₁ − L₁†S₂†L₂
    let mut cross = OperatorExpr::zero();
    for i in 0..n {
        let l2d = g2.l[i].adjoint();
        for k in 0..n {
            let sik = g2.s[(i, k)];
            if sik == C64::new(0.0, 0.0) {
                continue;
            }
            cross = cross.add(&l2d.mul(&g1.l[k]).scale(sik));
            cross = cross.sub(&g1.l[k].adjoint().mul(&g2.l[i]).scale(sik.conj()));
        }
    }
    let h = g1.h.add(&g2.h).add(&cross.scale(C64::new(0.0, -0.5)));
    SLHTriplet::new(g1.space.clone(), s, l, h)
}

/// Parallel product with block-diagonal scattering.
pub fn concatenate(g1: &SLHTriplet, g2: &SLHTriplet) -> Result<SLHTriplet> {
    check_space(g1, g2)?;
    let (n1, n2) = (g1.ports(), g2.ports());
    let mut s = DMatrix::zeros(n1 + n2, n1 + n2);
    s.view_mut((0, 0), (n1, n1)).copy_from(&g1.s);
    s.view_mut((n1, n1), (n2, n2)).copy_from(&g2.s);
    let mut l = g1.l.clone();
    l.extend(g2.l.iter().cloned());
    SLHTriplet::new(g1.space.clone(), s, l, g1.h.add(&g2.h))
}

/// Left-to-right series chain: `chain(&[a, b, c])` is a ◁ b ◁ c.
pub fn chain(parts: &[SLHTriplet]) -> Result<SLHTriplet> {
    let (last, rest) = parts.split_last().ok_or_else(|| Error::InvalidParams("empty chain".into()))?;
    let mut acc = last.clone();
    for g in rest.iter().rev() {
        acc = cascade(g, &acc)?;
    }
    Ok(acc)
}

/// Parallel stack of several triplets.
pub fn stack(parts: &[SLHTriplet]) -> Result<SLHTriplet> {
    let (first, rest) = parts.split_first().ok_or_else(|| Error::InvalidParams("empty stack".into()))?;
    let mut acc = first.clone();
    for g in rest {
        acc = concatenate(&acc, g)?;
    }
    Ok(acc)
}
