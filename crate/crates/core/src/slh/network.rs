use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::elements::{element, ElementKind};
use super::expr::{Elem, OperatorExpr, Symbol, Word};
use super::space::HilbertSpace;
use super::triplet::{chain, stack, SLHTriplet};
use crate::cavity::SystemParams;
use crate::error::Result;

/// Zero-based index of the output channel read out as the I quadrature.
pub const CHANNEL_I: usize = 1;
/// Zero-based index of the output channel read out as the Q quadrature.
pub const CHANNEL_Q: usize = 4;

/// Factor indices in [`HilbertSpace::two_pairs`].
pub const QUBIT: [usize; 2] = [0, 1];
pub const MODE: [usize; 2] = [2, 3];

fn el(kind: ElementKind, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    element(&kind, space.clone())
}

fn id(n: usize, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    el(ElementKind::Identity(n), space)
}

fn swap(n: usize, a: usize, b: usize, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(a, b);
    el(ElementKind::Permutation(perm), space)
}

fn pair_element(sys: &SystemParams, j: usize) -> ElementKind {
    let p = &sys.pairs[j];
    ElementKind::QubitCavity {
        qubit: QUBIT[j],
        mode: MODE[j],
        kappa_in: p.kappa_in,
        kappa: p.kappa,
        delta: p.delta,
        chi: p.chi,
    }
}

/// Driven first pair with its lossy line; ports: loss, line output, input port.
pub fn first_branch(sys: &SystemParams, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    chain(&[
        stack(&[el(ElementKind::LineLoss { etabar: sys.pairs[0].etabar }, space)?, id(1, space)?])?,
        swap(3, 1, 2, space)?,
        stack(&[id(1, space)?, el(pair_element(sys, 0), space)?])?,
        stack(&[id(1, space)?, el(ElementKind::Drive { pair: 0 }, space)?, id(1, space)?])?,
    ])
}

/// Driven second pair with its lossy line; ports: input port, line output, loss, spare.
pub fn second_branch(sys: &SystemParams, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    chain(&[
        swap(4, 1, 2, space)?,
        stack(&[id(1, space)?, el(ElementKind::LineLoss { etabar: sys.pairs[1].etabar }, space)?, id(1, space)?])?,
        swap(4, 1, 2, space)?,
        stack(&[el(pair_element(sys, 1), space)?, id(2, space)?])?,
        stack(&[el(ElementKind::Drive { pair: 1 }, space)?, id(3, space)?])?,
    ])
}

/// Amplification-detection stage on the seven network channels.
pub fn amplifier_stage(sys: &SystemParams, space: &Arc<HilbertSpace>) -> Result<SLHTriplet> {
    // route: line output 2 to port 5, idler line output to port 2, amplifier loss to port 7
    let mut perm: Vec<usize> = (0..7).collect();
    perm[1] = 6;
    perm[4] = 1;
    perm[6] = 4;
    chain(&[
        stack(&[id(1, space)?, el(ElementKind::BeamSplitter, space)?, id(2, space)?])?,
        el(ElementKind::Permutation(perm), space)?,
        stack(&[id(4, space)?, el(ElementKind::AmpLoss { eta_g: sys.eta_g() }, space)?])?,
        swap(7, 4, 6, space)?,
    ])
}

/// Compiles the network with drive inputs still symbolic.
pub fn build_network_unabsorbed(sys: &SystemParams, n_fock: usize) -> Result<SLHTriplet> {
    sys.validate()?;
    let space = Arc::new(HilbertSpace::two_pairs(n_fock)?);
    let branches = stack(&[first_branch(sys, &space)?, second_branch(sys, &space)?])?;
    chain(&[amplifier_stage(sys, &space)?, branches])
}

/// Compiles the full two-pair network and absorbs the drives into the Hamiltonian.
pub fn build_network(sys: &SystemParams, n_fock: usize) -> Result<SLHTriplet> {
    absorb_drives(&build_network_unabsorbed(sys, n_fock)?, &MODE)
}

/// Removes classical drive amplitudes from L and H and adds ε_j a_j† + ε_j* a_j
/// for each driven mode, with `modes[j]` the factor of drive `j`.
pub fn absorb_drives(g: &SLHTriplet, modes: &[usize]) -> Result<SLHTriplet> {
    let is_drive = |s: Symbol| s.is_drive_in();
    let l: Vec<OperatorExpr> = g.l().iter().map(|x| x.partition(is_drive).1).collect();
    let mut h = g.h().partition(is_drive).1;
    for (j, &m) in modes.iter().enumerate() {
        h.add_term(C64::new(1.0, 0.0), Word::new(vec![Symbol::Eps(j)], vec![Elem::Create(m)]));
        h.add_term(C64::new(1.0, 0.0), Word::new(vec![Symbol::EpsConj(j)], vec![Elem::Destroy(m)]));
    }
    SLHTriplet::new(g.space().clone(), g.s().clone(), l, h)
}

/// Expected coupling vector of the compiled network, channel by channel.
pub fn reference_coupling_vector(sys: &SystemParams) -> Vec<OperatorExpr> {
    let [p1, p2] = &sys.pairs;
    let eg = sys.eta_g();
    let a1 = Elem::Destroy(MODE[0]);
    let a2 = Elem::Destroy(MODE[1]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let lin = |c1: f64, c2: f64| {
        let mut e = OperatorExpr::op(c1, a1);
        e = e.add(&OperatorExpr::op(c2, a2));
        e
    };
    vec![
        OperatorExpr::op((p1.kappa * (1.0 - p1.etabar)).sqrt(), a1),
        lin(s * (p1.kappa * p1.etabar).sqrt(), s * (p2.kappa * p2.etabar * eg).sqrt()),
        OperatorExpr::op(p1.kappa_in.sqrt(), a1),
        OperatorExpr::op(p2.kappa_in.sqrt(), a2),
        lin(s * (p1.kappa * p1.etabar).sqrt(), -s * (p2.kappa * p2.etabar * eg).sqrt()),
        OperatorExpr::op((p2.kappa * (1.0 - p2.etabar)).sqrt(), a2),
        OperatorExpr::op((p2.kappa * p2.etabar * (1.0 - eg)).sqrt(), a2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{PairParams, SystemParams};
    use crate::slh::triplet::unitarity_defect;

    fn general() -> SystemParams {
        SystemParams {
            pairs: [
                PairParams { chi: 20.0, kappa: 30.0, kappa_in: 0.4, delta: 0.7, gamma1: 0.0, gamma_phi: 0.0, etabar: 0.8 },
                PairParams { chi: 25.0, kappa: 33.0, kappa_in: 0.2, delta: -0.3, gamma1: 0.0, gamma_phi: 0.0, etabar: 0.6 },
            ],
            eta: 0.9,
            gain: Some(20.0),
        }
    }

    #[test]
    fn branch_port_counts() {
        let sys = general();
        let space = Arc::new(HilbertSpace::two_pairs(3).unwrap());
        let b1 = first_branch(&sys, &space).unwrap();
        let b2 = second_branch(&sys, &space).unwrap();
        assert_eq!(b1.ports(), 3);
        assert_eq!(b2.ports(), 4);
        let both = stack(&[b1.clone(), b2.clone()]).unwrap();
        for k in 0..3 {
            assert_eq!(both.l()[k].max_abs_diff(&b1.l()[k]), 0.0);
        }
        for k in 0..4 {
            assert_eq!(both.l()[3 + k].max_abs_diff(&b2.l()[k]), 0.0);
        }
    }

    #[test]
    fn compiled_coupling_vector_matches_reference() {
        let sys = general();
        let g = build_network(&sys, 3).unwrap();
        let reference = reference_coupling_vector(&sys);
        assert_eq!(g.ports(), 7);
        for (k, (got, want)) in g.l().iter().zip(&reference).enumerate() {
            let d = got.max_abs_diff(want);
            assert!(d < 1e-14, "channel {}: {} vs {}", k + 1, got, want);
        }
        assert!(unitarity_defect(g.s()) < 1e-12);
    }

    #[test]
    fn compiled_hamiltonian_is_sum_of_pair_hamiltonians() {
        let sys = general();
        let g = build_network(&sys, 3).unwrap();
        let mut want = OperatorExpr::zero();
        for j in 0..2 {
            let p = &sys.pairs[j];
            let (q, m) = (QUBIT[j], MODE[j]);
            want.add_term(C64::new(p.delta, 0.0), Word::new(vec![], vec![Elem::Create(m), Elem::Destroy(m)]));
            want.add_term(
                C64::new(p.chi / 2.0, 0.0),
                Word::new(vec![], vec![Elem::SigmaZ(q), Elem::Create(m), Elem::Destroy(m)]),
            );
            want.add_term(C64::new(1.0, 0.0), Word::new(vec![Symbol::Eps(j)], vec![Elem::Create(m)]));
            want.add_term(C64::new(1.0, 0.0), Word::new(vec![Symbol::EpsConj(j)], vec![Elem::Destroy(m)]));
        }
        assert!(g.h().max_abs_diff(&want) < 1e-14, "{}", g.h());
    }

    #[test]
    fn unabsorbed_network_has_symbolic_drive_on_input_ports() {
        let mut sys = general();
        sys.pairs[0].kappa_in = 0.0;
        let g = build_network_unabsorbed(&sys, 3).unwrap();
        // the drive enters the weak input port; with κ^in = 0 it leaves only a c-number
        let w = Word::symbol(Symbol::DriveIn(0));
        assert_eq!(g.l()[2].coefficient(&w), C64::new(1.0, 0.0));
        assert!(g.l()[2].partition(|s| s.is_drive_in()).1.is_zero());
        // and contributes no cross term to H for the zero-coupled input
        assert!(g.h().partition(|s| s == Symbol::DriveIn(0) || s == Symbol::DriveInConj(0)).0.is_zero());
    }

    #[test]
    fn lossless_limit() {
        let mut sys = general();
        sys.pairs[0].etabar = 1.0;
        sys.pairs[1].etabar = 1.0;
        sys.gain = None;
        let g = build_network(&sys, 3).unwrap();
        for k in [0, 5, 6] {
            assert!(g.l()[k].is_zero(), "channel {} = {}", k + 1, g.l()[k]);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a1 = Word::op(Elem::Destroy(MODE[0]));
        let a2 = Word::op(Elem::Destroy(MODE[1]));
        let l2 = &g.l()[CHANNEL_I];
        let l5 = &g.l()[CHANNEL_Q];
        assert!((l2.coefficient(&a1).re - s * 30f64.sqrt()).abs() < 1e-14);
        assert!((l2.coefficient(&a2).re - s * 33f64.sqrt()).abs() < 1e-14);
        assert!((l5.coefficient(&a1).re - s * 30f64.sqrt()).abs() < 1e-14);
        assert!((l5.coefficient(&a2).re + s * 33f64.sqrt()).abs() < 1e-14);
    }
}
