use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::space::{FactorKind, HilbertSpace};
use crate::error::{Error, Result};

/// Elementary operator acting on one factor (by index) of a [`HilbertSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Destroy(usize),
    Create(usize),
    SigmaZ(usize),
    SigmaMinus(usize),
    SigmaPlus(usize),
}

impl Elem {
    pub fn factor(self) -> usize {
        match self {
            Elem::Destroy(k) | Elem::Create(k) | Elem::SigmaZ(k) | Elem::SigmaMinus(k) | Elem::SigmaPlus(k) => k,
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            Elem::Destroy(k) => Elem::Create(k),
            Elem::Create(k) => Elem::Destroy(k),
            Elem::SigmaZ(k) => Elem::SigmaZ(k),
            Elem::SigmaMinus(k) => Elem::SigmaPlus(k),
            Elem::SigmaPlus(k) => Elem::SigmaMinus(k),
        }
    }

    fn local_matrix(self, kind: FactorKind, dim: usize) -> Result<DMatrix<C64>> {
        let one = C64::new(1.0, 0.0);
        let mut m = DMatrix::zeros(dim, dim);
        match (self, kind) {
            (Elem::Destroy(_), FactorKind::Mode) => {
                for n in 1..dim {
                    m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
                }
            }
            (Elem::Create(_), FactorKind::Mode) => {
                for n in 1..dim {
                    m[(n, n - 1)] = C64::new((n as f64).sqrt(), 0.0);
                }
            }
            (Elem::SigmaZ(_), FactorKind::Qubit) => {
                m[(0, 0)] = one;
                m[(1, 1)] = -one;
            }
            (Elem::SigmaMinus(_), FactorKind::Qubit) => m[(1, 0)] = one,
            (Elem::SigmaPlus(_), FactorKind::Qubit) => m[(0, 1)] = one,
            _ => {
                return Err(Error::InvalidParams(format!("{self:?} does not act on a {kind:?} factor")));
            }
        }
        Ok(m)
    }
}

/// Classical amplitudes that may appear as symbolic coefficients.
///
/// `DriveIn(j)` stands for the input-field amplitude ε_j/√κ_j^in of drive `j`
/// and is kept symbolic so that κ_j^in → 0 never divides by zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    DriveIn(usize),
    DriveInConj(usize),
    Eps(usize),
    EpsConj(usize),
}

impl Symbol {
    pub fn conj(self) -> Self {
        match self {
            Symbol::DriveIn(j) => Symbol::DriveInConj(j),
            Symbol::DriveInConj(j) => Symbol::DriveIn(j),
            Symbol::Eps(j) => Symbol::EpsConj(j),
            Symbol::EpsConj(j) => Symbol::Eps(j),
        }
    }

    pub fn is_drive_in(self) -> bool {
        matches!(self, Symbol::DriveIn(_) | Symbol::DriveInConj(_))
    }
}

/// Product of scalar symbols and elementary operators in canonical order:
/// symbols sorted, operators stably sorted by factor (operators on different
/// factors commute, those on the same factor keep their order).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    pub scalars: Vec<Symbol>,
    pub ops: Vec<Elem>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn op(e: Elem) -> Self {
        Self { scalars: vec![], ops: vec![e] }
    }

    pub fn symbol(s: Symbol) -> Self {
        Self { scalars: vec![s], ops: vec![] }
    }

    pub fn new(mut scalars: Vec<Symbol>, mut ops: Vec<Elem>) -> Self {
        scalars.sort();
        ops.sort_by_key(|e| e.factor());
        Self { scalars, ops }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut s = self.scalars.clone();
        s.extend_from_slice(&other.scalars);
        let mut o = self.ops.clone();
        o.extend_from_slice(&other.ops);
        Word::new(s, o)
    }

    pub fn adjoint(&self) -> Word {
        Word::new(
            self.scalars.iter().map(|s| s.conj()).collect(),
            self.ops.iter().rev().map(|e| e.adjoint()).collect(),
        )
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scalars.is_empty() && self.ops.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .scalars
            .iter()
            .map(|s| format!("{s:?}"))
            .chain(self.ops.iter().map(|e| format!("{e:?}")))
            .collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Linear combination of [`Word`]s with complex coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperatorExpr {
    terms: BTreeMap<Word, C64>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coef: C64, word: Word) -> Self {
        let mut e = Self::zero();
        e.add_term(coef, word);
        e
    }

    pub fn op(coef: f64, e: Elem) -> Self {
        Self::term(C64::new(coef, 0.0), Word::op(e))
    }

    pub fn symbol(coef: C64, s: Symbol) -> Self {
        Self::term(coef, Word::symbol(s))
    }

    pub fn add_term(&mut self, coef: C64, word: Word) {
        if coef == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(word).or_insert(C64::new(0.0, 0.0));
        *entry += coef;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &Word) -> C64 {
        self.terms.get(word).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(*c, w.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C64) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(c * k, w.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(c1 * c2, w1.mul(w2));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(c.conj(), w.adjoint());
        }
        out
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_coefficient()
    }

    /// Splits into (terms containing a symbol matching `pred`, the rest).
    pub fn partition(&self, pred: impl Fn(Symbol) -> bool) -> (Self, Self) {
        let mut hit = Self::zero();
        let mut rest = Self::zero();
        for (w, c) in &self.terms {
            if w.scalars.iter().any(|s| pred(*s)) {
                hit.add_term(*c, w.clone());
            } else {
                rest.add_term(*c, w.clone());
            }
        }
        (hit, rest)
    }

    /// Dense matrix on `space`, with symbols replaced by `value(symbol)`.
    pub fn to_dense(&self, space: &HilbertSpace, value: &dyn Fn(Symbol) -> C64) -> Result<DMatrix<C64>> {
        let n = space.total_dim();
        let mut out = DMatrix::zeros(n, n);
        for (w, c) in &self.terms {
            let mut coef = *c;
            for s in &w.scalars {
                coef *= value(*s);
            }
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            out += word_matrix(space, &w.ops)? * coef;
        }
        Ok(out)
    }
}

/// Dense matrix of an operator word (no scalars) on `space`.
pub fn word_matrix(space: &HilbertSpace, ops: &[Elem]) -> Result<DMatrix<C64>> {
    let factors = space.factors();
    let mut locals: Vec<Option<DMatrix<C64>>> = vec![None; factors.len()];
    for e in ops {
        let k = e.factor();
        let f = factors
            .get(k)
            .ok_or_else(|| Error::InvalidParams(format!("{e:?} refers to a missing factor")))?;
        let m = e.local_matrix(f.kind, f.dim)?;
        locals[k] = Some(match locals[k].take() {
            Some(prev) => prev * m,
            None => m,
        });
    }
    Ok(space.embed(&locals))
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(|(w, c)| format!("({:.6}{:+.6}i)·{}", c.re, c.im, w))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_commutes_factors() {
        let a = Word::new(vec![], vec![Elem::Create(2), Elem::Destroy(2), Elem::SigmaZ(0)]);
        let b = Word::new(vec![], vec![Elem::SigmaZ(0), Elem::Create(2), Elem::Destroy(2)]);
        assert_eq!(a, b);
        // a†a σz is Hermitian symbolically
        let h = OperatorExpr::term(C64::new(0.5, 0.0), b);
        assert_eq!(h.max_abs_diff(&h.adjoint()), 0.0);
    }

    #[test]
    fn dense_realization_matches_matrices() {
        let space = HilbertSpace::new(vec![HilbertSpace::qubit("q"), HilbertSpace::mode("c", 4)]).unwrap();
        let n = OperatorExpr::op(1.0, Elem::Create(1)).mul(&OperatorExpr::op(1.0, Elem::Destroy(1)));
        let m = n.to_dense(&space, &|_| C64::new(0.0, 0.0)).unwrap();
        for k in 0..8 {
            assert!((m[(k, k)].re - (k % 4) as f64).abs() < 1e-14);
        }
        let bad = OperatorExpr::op(1.0, Elem::Destroy(0));
        assert!(bad.to_dense(&space, &|_| C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn symbols_evaluate() {
        let space = HilbertSpace::new(vec![HilbertSpace::mode("c", 3)]).unwrap();
        let e = OperatorExpr::term(C64::new(2.0, 0.0), Word::new(vec![Symbol::Eps(0)], vec![Elem::Create(0)]));
        let m = e.to_dense(&space, &|s| if s == Symbol::Eps(0) { C64::new(0.0, 1.5) } else { C64::new(0.0, 0.0) }).unwrap();
        assert!((m[(1, 0)] - C64::new(0.0, 3.0)).norm() < 1e-15);
    }
}
