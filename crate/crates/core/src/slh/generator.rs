use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::expr::{word_matrix, OperatorExpr, Symbol, Word};
use super::triplet::SLHTriplet;
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// Channels read out by heterodyne detection (zero-based).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Monitoring {
    pub i_channel: Option<usize>,
    pub q_channel: Option<usize>,
}

#[derive(Clone, Debug)]
struct Dissipator {
    l: SparseMatrix,
    ld: SparseMatrix,
    ldl: SparseMatrix,
}

impl Dissipator {
    fn new(l: SparseMatrix) -> Self {
        let ld = l.adjoint();
        let ldl = SparseMatrix::from_dense(&(ld.to_dense() * l.to_dense()));
        Self { l, ld, ldl }
    }

    /// `out += k · D(L)ρ`
    fn apply(&self, k: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let lr = self.l.left_product(rho);
        self.ld.add_right_product(C64::new(k, 0.0), &lr, out);
        self.ldl.add_left_product(C64::new(-0.5 * k, 0.0), rho, out);
        self.ldl.add_right_product(C64::new(-0.5 * k, 0.0), rho, out);
    }
}

/// Innovation operator c with its adjoint, for H(c)ρ = cρ + ρc† − ⟨c + c†⟩ρ.
#[derive(Clone, Debug)]
pub struct Innovation {
    pub expr: OperatorExpr,
    c: SparseMatrix,
    cd: SparseMatrix,
}

impl Innovation {
    fn new(expr: OperatorExpr, c: SparseMatrix) -> Self {
        let cd = c.adjoint();
        Self { expr, c, cd }
    }

    /// ⟨c + c†⟩
    pub fn mean(&self, rho: &DMatrix<C64>) -> f64 {
        2.0 * self.c.expectation(rho).re
    }

    /// `out += k · H(c)ρ`
    pub fn apply(&self, k: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let kc = C64::new(k, 0.0);
        self.c.add_left_product(kc, rho, out);
        self.cd.add_right_product(kc, rho, out);
        let m = self.mean(rho);
        *out -= rho * C64::new(k * m, 0.0);
    }
}

/// Drift superoperator and innovation operators of a monitored network.
#[derive(Clone, Debug)]
pub struct SmeGenerator {
    dim: usize,
    h_static: SparseMatrix,
    h_driven: Vec<(Vec<Symbol>, SparseMatrix)>,
    dissipators: Vec<Dissipator>,
    pub innovation_i: Option<Innovation>,
    pub innovation_q: Option<Innovation>,
}

/// Rewrites Σ_k D(L_k) over channels that are linear combinations of a few
/// operator words as an equivalent sum over at most that many channels.
fn compress_channels(ls: &[OperatorExpr]) -> Result<Vec<OperatorExpr>> {
    let mut basis: Vec<Word> = Vec::new();
    for l in ls {
        for (w, c) in l.terms() {
            if !w.scalars.is_empty() {
                return Err(Error::InvalidParams(format!(
                    "coupling operator carries a classical amplitude `{w}`; absorb drives first"
                )));
            }
            if *c != C64::new(0.0, 0.0) && !basis.contains(w) {
                basis.push(w.clone());
            }
        }
    }
    let m = basis.len();
    if m == 0 {
        return Ok(vec![]);
    }
    let coef = DMatrix::from_fn(ls.len(), m, |k, i| ls[k].coefficient(&basis[i]));
    // G[m,n] = Σ_k C[k,m] conj(C[k,n])
    let gram = coef.transpose() * coef.map(|z| z.conj());
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 0..m {
        let lam = eig.eigenvalues[i];
        if lam <= 1e-14 * top {
            continue;
        }
        let mut e = OperatorExpr::zero();
        for (b, w) in basis.iter().enumerate() {
            e.add_term(eig.eigenvectors[(b, i)] * lam.sqrt(), w.clone());
        }
        out.push(e);
    }
    Ok(out)
}

fn sparse_of(expr: &OperatorExpr, space: &super::HilbertSpace) -> Result<SparseMatrix> {
    Ok(SparseMatrix::from_dense(&expr.to_dense(space, &|_| C64::new(0.0, 0.0))?))
}

/// Builds the SME generator of a compiled network: commutator with H, one
/// dissipator per coupling channel, and innovations √η·L_I and i√η·L_Q.
pub fn generator_from_triplet(g: &SLHTriplet, monitored: Monitoring, eta: f64) -> Result<SmeGenerator> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParams(format!("measurement efficiency η = {eta} outside (0, 1]")));
    }
    let space = g.space();
    let dim = space.total_dim();
    let channel = |idx: Option<usize>| -> Result<Option<&OperatorExpr>> {
        match idx {
            None => Ok(None),
            Some(k) => {
                let l = g.l().get(k).ok_or_else(|| {
                    Error::InvalidParams(format!("monitored channel {} out of range 1..={}", k + 1, g.ports()))
                })?;
                if l.is_zero() {
                    return Err(Error::InvalidParams(format!("monitored channel {} has zero coupling", k + 1)));
                }
                Ok(Some(l))
            }
        }
    };
    let li = channel(monitored.i_channel)?;
    let lq = channel(monitored.q_channel)?;

    let mut h_static = OperatorExpr::zero();
    let mut driven: Vec<(Vec<Symbol>, OperatorExpr)> = Vec::new();
    for (w, c) in g.h().terms() {
        if w.scalars.is_empty() {
            h_static.add_term(*c, w.clone());
        } else {
            let bare = Word { scalars: vec![], ops: w.ops.clone() };
            match driven.iter_mut().find(|(s, _)| *s == w.scalars) {
                Some((_, e)) => e.add_term(*c, bare),
                None => driven.push((w.scalars.clone(), OperatorExpr::term(*c, bare))),
            }
        }
    }
    let h_driven = driven
        .into_iter()
        .map(|(s, e)| Ok((s, sparse_of(&e, space)?)))
        .collect::<Result<Vec<_>>>()?;

    let dissipators = compress_channels(g.l())?
        .iter()
        .map(|l| Ok(Dissipator::new(sparse_of(l, space)?)))
        .collect::<Result<Vec<_>>>()?;

    let make = |l: Option<&OperatorExpr>, phase: C64| -> Result<Option<Innovation>> {
        match l {
            None => Ok(None),
            Some(l) => {
                let e = l.scale(phase * eta.sqrt());
                let m = sparse_of(&e, space)?;
                Ok(Some(Innovation::new(e, m)))
            }
        }
    };
    Ok(SmeGenerator {
        dim,
        h_static: sparse_of(&h_static, space)?,
        h_driven,
        dissipators,
        innovation_i: make(li, C64::new(1.0, 0.0))?,
        innovation_q: make(lq, C64::new(0.0, 1.0))?,
    })
}

impl SmeGenerator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends a dissipator `D(op)` built from a dense operator on the same space.
    pub fn add_dissipator(&mut self, op: &DMatrix<C64>) {
        self.dissipators.push(Dissipator::new(SparseMatrix::from_dense(op)));
    }

    /// Appends a dissipator from an operator word (no classical amplitudes).
    pub fn add_dissipator_word(&mut self, space: &super::HilbertSpace, coef: f64, ops: &[super::Elem]) -> Result<()> {
        let m = word_matrix(space, ops)? * C64::new(coef, 0.0);
        self.add_dissipator(&m);
        Ok(())
    }

    /// Deterministic part dρ/dt = −i[H(t), ρ] + Σ_k D(L_k)ρ.
    pub fn drift(&self, rho: &DMatrix<C64>, value: &dyn Fn(Symbol) -> C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.add_drift(rho, value, &mut out, 1.0);
        out
    }

    /// `out += k · drift(ρ)`
    pub fn add_drift(&self, rho: &DMatrix<C64>, value: &dyn Fn(Symbol) -> C64, out: &mut DMatrix<C64>, k: f64) {
        let mi = C64::new(0.0, -k);
        self.h_static.add_left_product(mi, rho, out);
        self.h_static.add_right_product(-mi, rho, out);
        for (syms, m) in &self.h_driven {
            let v: C64 = syms.iter().map(|s| value(*s)).product();
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            m.add_left_product(mi * v, rho, out);
            m.add_right_product(-mi * v, rho, out);
        }
        for d in &self.dissipators {
            d.apply(k, rho, out);
        }
    }

    pub fn num_dissipators(&self) -> usize {
        self.dissipators.len()
    }
}
