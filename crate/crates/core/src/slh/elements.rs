use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::expr::{Elem, OperatorExpr, Symbol, Word};
use super::space::HilbertSpace;
use super::triplet::SLHTriplet;
use crate::error::{Error, Result};

/// Library of network elements.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind {
    /// Semiclassical drive `pair` entering through a port of strength κ^in.
    Drive { pair: usize },
    /// Dispersive qubit-cavity pair with input and output ports.
    QubitCavity { qubit: usize, mode: usize, kappa_in: f64, kappa: f64, delta: f64, chi: f64 },
    /// Transmission-line loss with transmission η̄.
    LineLoss { etabar: f64 },
    /// Effective loss of the amplification stage, η_g = (G−1)/G.
    AmpLoss { eta_g: f64 },
    /// Effective 50:50 beam splitter of the amplification-detection stage.
    BeamSplitter,
    Identity(usize),
    /// Port permutation: output `i` carries input `perm[i]`.
    Permutation(Vec<usize>),
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_efficiency(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} = {x} outside (0, 1]")))
    }
}

fn passive(space: Arc<HilbertSpace>, s: DMatrix<C64>) -> Result<SLHTriplet> {
    let n = s.nrows();
    SLHTriplet::new(space, s, vec![OperatorExpr::zero(); n], OperatorExpr::zero())
}

pub fn element(kind: &ElementKind, space: Arc<HilbertSpace>) -> Result<SLHTriplet> {
    match kind {
        ElementKind::Drive { pair } => SLHTriplet::new(
            space,
            DMatrix::identity(1, 1),
            vec![OperatorExpr::symbol(r(1.0), Symbol::DriveIn(*pair))],
            OperatorExpr::zero(),
        ),
        ElementKind::QubitCavity { qubit, mode, kappa_in, kappa, delta, chi } => {
            for (name, v) in [("κ^in", kappa_in), ("κ", kappa)] {
                if !(*v >= 0.0) {
                    return Err(Error::InvalidParams(format!("{name} must be ≥ 0, got {v}")));
                }
            }
            if !delta.is_finite() || !chi.is_finite() {
                return Err(Error::InvalidParams("detuning and dispersive shift must be finite".into()));
            }
            let a = Elem::Destroy(*mode);
            let n = Word::new(vec![], vec![Elem::Create(*mode), a]);
            let zn = Word::new(vec![], vec![Elem::SigmaZ(*qubit), Elem::Create(*mode), a]);
            let mut h = OperatorExpr::term(r(*delta), n);
            h.add_term(r(chi / 2.0), zn);
            SLHTriplet::new(
                space,
                DMatrix::identity(2, 2),
                vec![OperatorExpr::op(kappa_in.sqrt(), a), OperatorExpr::op(kappa.sqrt(), a)],
                h,
            )
        }
        ElementKind::LineLoss { etabar } => {
            check_efficiency("η̄", *etabar)?;
            let (t, l) = (etabar.sqrt(), (1.0 - etabar).sqrt());
            passive(space, DMatrix::from_row_slice(2, 2, &[r(t), r(l), r(-l), r(t)]))
        }
        ElementKind::AmpLoss { eta_g } => {
            check_efficiency("η_g", *eta_g)?;
            let (t, l) = (eta_g.sqrt(), (1.0 - eta_g).sqrt());
            let z = r(0.0);
            passive(space, DMatrix::from_row_slice(3, 3, &[r(t), z, r(l), z, r(1.0), z, r(-l), z, r(t)]))
        }
        ElementKind::BeamSplitter => {
            let h = r(std::f64::consts::FRAC_1_SQRT_2);
            let (z, o) = (r(0.0), r(1.0));
            #[rustfmt::skip]
            let s = DMatrix::from_row_slice(4, 4, &[
                h, z, z, h,
                z, o, z, z,
                z, z, o, z,
                -h, z, z, h,
            ]);
            passive(space, s)
        }
        ElementKind::Identity(n) => Ok(SLHTriplet::identity(space, *n)),
        ElementKind::Permutation(perm) => {
            let n = perm.len();
            let mut seen = vec![false; n];
            for &p in perm {
                if p >= n || seen[p] {
                    return Err(Error::InvalidParams(format!("{perm:?} is not a permutation")));
                }
                seen[p] = true;
            }
            let mut s = DMatrix::zeros(n, n);
            for (i, &p) in perm.iter().enumerate() {
                s[(i, p)] = r(1.0);
            }
            passive(space, s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slh::triplet::unitarity_defect;

    fn sp() -> Arc<HilbertSpace> {
        Arc::new(HilbertSpace::new(vec![HilbertSpace::qubit("q"), HilbertSpace::mode("c", 3)]).unwrap())
    }

    #[test]
    fn lossless_line_is_identity() {
        let g = element(&ElementKind::LineLoss { etabar: 1.0 }, sp()).unwrap();
        assert_eq!(*g.s(), DMatrix::<C64>::identity(2, 2));
    }

    #[test]
    fn beam_splitter_unitary() {
        let g = element(&ElementKind::BeamSplitter, sp()).unwrap();
        assert!(unitarity_defect(g.s()) < 1e-15);
        assert!((g.s()[(3, 0)].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
    }

    #[test]
    fn amp_loss_from_gain() {
        let gain: f64 = 100.0;
        let eta_g = (gain - 1.0) / gain;
        assert!((eta_g - 0.99).abs() < 1e-15);
        let g = element(&ElementKind::AmpLoss { eta_g }, sp()).unwrap();
        let s = g.s();
        assert!((s[(0, 0)].re - 0.99f64.sqrt()).abs() < 1e-15);
        assert!((s[(0, 2)].re - 0.01f64.sqrt()).abs() < 1e-12);
        assert!((s[(2, 0)].re + 0.01f64.sqrt()).abs() < 1e-12);
        assert!((s[(2, 2)].re - 0.99f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[(1, 1)].re, 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(element(&ElementKind::LineLoss { etabar: 0.0 }, sp()).is_err());
        assert!(element(&ElementKind::LineLoss { etabar: 1.2 }, sp()).is_err());
        assert!(element(&ElementKind::AmpLoss { eta_g: -0.1 }, sp()).is_err());
        let bad = ElementKind::QubitCavity { qubit: 0, mode: 1, kappa_in: 0.0, kappa: -1.0, delta: 0.0, chi: 1.0 };
        assert!(element(&bad, sp()).is_err());
        assert!(element(&ElementKind::Permutation(vec![0, 0]), sp()).is_err());
    }
}
