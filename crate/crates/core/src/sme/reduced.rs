use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::setup::StepCoefficients;
use super::state::TwoQubitState;
use crate::error::{Error, Result};
use crate::linalg::{kron2, z_sign};

/// Integration scheme for the reduced two-qubit SME.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Completely positive first-order map: exact Stark rotation and excess
    /// dephasing channels followed by a record-driven Kraus update.
    #[default]
    Kraus,
    /// Plain Itô Euler–Maruyama with renormalization.
    EulerMaruyama,
}

const R8: f64 = 0.353_553_390_593_273_8; // 1/(2√2)

struct Diag {
    ci: [C64; 4],
    cq: [C64; 4],
    phase: [f64; 4],
}

fn diagonals(c: &StepCoefficients) -> Diag {
    let mut d = Diag { ci: [C64::new(0.0, 0.0); 4], cq: [C64::new(0.0, 0.0); 4], phase: [0.0; 4] };
    for k in 0..4 {
        let (z1, z2) = (z_sign(0, k), z_sign(1, k));
        d.ci[k] = (c.s[0] * z1 + c.s[1] * z2) * R8;
        d.cq[k] = C64::new(0.0, 1.0) * (c.s[0] * z1 - c.s[1] * z2) * R8;
        d.phase[k] = 0.5 * (c.theta[0] * z1 + c.theta[1] * z2);
    }
    d
}

/// Expected record drifts (⟨c_I + c_I†⟩, ⟨c_Q + c_Q†⟩) for the state.
pub fn record_mean(state: &TwoQubitState, c: &StepCoefficients) -> (f64, f64) {
    let d = diagonals(c);
    mean_of(&state.rho, &d)
}

fn mean_of(rho: &Matrix4<C64>, d: &Diag) -> (f64, f64) {
    let (mut mi, mut mq) = (0.0, 0.0);
    for k in 0..4 {
        let p = rho[(k, k)].re;
        mi += 2.0 * d.ci[k].re * p;
        mq += 2.0 * d.cq[k].re * p;
    }
    (mi, mq)
}

/// Multiplies coherences by the Stark phase and per-qubit decay factors `f`.
fn rotate_and_dephase(rho: &mut Matrix4<C64>, phase: &[f64; 4], f: [f64; 2]) {
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let mut k = 1.0;
            for (q, fq) in f.iter().enumerate() {
                if z_sign(q, a) != z_sign(q, b) {
                    k *= fq;
                }
            }
            rho[(a, b)] *= C64::from_polar(k, -(phase[a] - phase[b]));
        }
    }
}

fn damping_ops(q: usize, p: f64) -> (Matrix4<C64>, Matrix4<C64>) {
    let k0 = nalgebra::Matrix2::new(
        C64::new((1.0 - p).sqrt(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    );
    let k1 = nalgebra::Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(p.sqrt(), 0.0),
        C64::new(0.0, 0.0),
    );
    let id = nalgebra::Matrix2::identity();
    if q == 0 {
        (kron2(&k0, &id), kron2(&k1, &id))
    } else {
        (kron2(&id, &k0), kron2(&id, &k1))
    }
}

/// Exact amplitude-damping channel with decay probability 1 − e^{−Γdt}.
fn amplitude_damp(rho: &mut Matrix4<C64>, decay: [f64; 2]) {
    for (q, g) in decay.iter().enumerate() {
        if *g > 0.0 {
            let (k0, k1) = damping_ops(q, 1.0 - (-g).exp());
            *rho = k0 * *rho * k0.adjoint() + k1 * *rho * k1.adjoint();
        }
    }
}

/// Euler increment Γdt·D(σ−)ρ.
fn damping_increment(rho: &Matrix4<C64>, decay: [f64; 2]) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for (q, g) in decay.iter().enumerate() {
        if *g > 0.0 {
            let (_, sm) = damping_ops(q, 1.0);
            let smd = sm.adjoint();
            let n = smd * sm;
            out += (sm * rho * smd - (n * rho + rho * n) * C64::new(0.5, 0.0)) * C64::new(*g, 0.0);
        }
    }
    out
}

fn finish(mut s: TwoQubitState, t_label: f64) -> Result<TwoQubitState> {
    let tr = s.hermitize_normalize();
    if !(tr.re > 1e-300) || !tr.re.is_finite() || s.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical(t_label, "trace collapse or non-finite density matrix"));
    }
    Ok(s)
}

fn kraus_update(state: &TwoQubitState, c: &StepCoefficients, rec: Option<(f64, f64)>) -> Result<TwoQubitState> {
    let d = diagonals(c);
    let dt = c.dt;
    let mut rho = state.rho;
    let measured = rec.is_some();
    let mut f = [1.0; 2];
    for q in 0..2 {
        let residual = if measured { c.dephase[q] - 0.5 * c.s[q].norm_sqr() * dt } else { c.dephase[q] };
        f[q] = (-residual).exp();
    }
    rotate_and_dephase(&mut rho, &d.phase, f);
    amplitude_damp(&mut rho, c.decay);
    if let Some((di, dq)) = rec {
        let mut m = [C64::new(0.0, 0.0); 4];
        for k in 0..4 {
            let (a, b) = (d.ci[k], d.cq[k]);
            m[k] = C64::new(1.0, 0.0) - 0.5 * (a.norm_sqr() + b.norm_sqr()) * dt
                + a * di
                + b * dq
                + 0.5 * (a * a * (di * di - dt) + b * b * (dq * dq - dt) + 2.0 * a * b * di * dq);
        }
        for x in 0..4 {
            for y in 0..4 {
                rho[(x, y)] *= m[x] * m[y].conj();
            }
        }
    }
    finish(TwoQubitState::new(rho), f64::NAN)
}

fn euler_update(state: &TwoQubitState, c: &StepCoefficients, dw: Option<(f64, f64)>) -> Result<TwoQubitState> {
    let d = diagonals(c);
    let rho = state.rho;
    let (mi, mq) = mean_of(&rho, &d);
    let mut next = rho + damping_increment(&rho, c.decay);
    for a in 0..4 {
        for b in 0..4 {
            let mut g = C64::new(0.0, -(d.phase[a] - d.phase[b]));
            for q in 0..2 {
                if z_sign(q, a) != z_sign(q, b) {
                    g -= c.dephase[q];
                }
            }
            if let Some((wi, wq)) = dw {
                g += (d.ci[a] + d.ci[b].conj() - mi) * wi + (d.cq[a] + d.cq[b].conj() - mq) * wq;
            }
            next[(a, b)] += g * rho[(a, b)];
        }
    }
    finish(TwoQubitState::new(next), f64::NAN)
}

/// One conditioned step driven by Wiener increments; returns the new state
/// and the emitted record increments (dI_r, dQ_r).
pub fn step_reduced(
    state: &TwoQubitState,
    c: &StepCoefficients,
    dw: (f64, f64),
    scheme: Scheme,
) -> Result<(TwoQubitState, (f64, f64))> {
    let (mi, mq) = record_mean(state, c);
    let rec = (mi * c.dt + dw.0, mq * c.dt + dw.1);
    let next = match scheme {
        Scheme::Kraus => kraus_update(state, c, Some(rec))?,
        Scheme::EulerMaruyama => euler_update(state, c, Some(dw))?,
    };
    Ok((next, rec))
}

/// One step conditioned on given record increments (dI_r, dQ_r).
pub fn step_reduced_record(
    state: &TwoQubitState,
    c: &StepCoefficients,
    rec: (f64, f64),
    scheme: Scheme,
) -> Result<TwoQubitState> {
    match scheme {
        Scheme::Kraus => kraus_update(state, c, Some(rec)),
        Scheme::EulerMaruyama => {
            let (mi, mq) = record_mean(state, c);
            euler_update(state, c, Some((rec.0 - mi * c.dt, rec.1 - mq * c.dt)))
        }
    }
}

/// One step of the unconditioned (ensemble-averaged) evolution.
pub fn step_unconditioned(state: &TwoQubitState, c: &StepCoefficients, scheme: Scheme) -> Result<TwoQubitState> {
    match scheme {
        Scheme::Kraus => kraus_update(state, c, None),
        Scheme::EulerMaruyama => euler_update(state, c, None),
    }
}
