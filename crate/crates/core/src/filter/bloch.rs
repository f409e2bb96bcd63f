use nalgebra::DMatrix;

use super::state::FilterState;
use crate::cavity::SystemParams;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, kron2, pauli, psd_sqrt};
use crate::sme::{bloch_index, TwoQubitState};

const LN2: f64 = std::f64::consts::LN_2;

/// ln(1 + eˣ) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// ln cosh x.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN2
}

/// ln |sinh x| (−∞ at zero).
fn ln_abs_sinh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-3 {
        // avoids cancellation in 1 − e^{−2a}
        return (a * (1.0 + a * a / 6.0)).ln();
    }
    a + (-(-2.0 * a).exp()).ln_1p() - LN2
}

/// sign(x)·exp(c + ln|sinh x|)
fn signed_sinh_term(x: f64, c: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * (c + ln_abs_sinh(x)).exp()
    }
}

/// ln(e^a + e^b)
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Closed-form two-qubit Bloch coordinates of the filtered state, in the
/// order of [`crate::sme::BLOCH_LABELS`].
pub fn filter_bloch_vector(fs: &FilterState, sys: &SystemParams) -> [f64; 15] {
    let (lam, im, qm) = (fs.lambda, fs.i_m, fs.q_m);
    let (t1, t2) = (fs.theta[0], fs.theta[1]);
    let (tp, tm) = (t1 + t2, t1 - t2);
    let (e1, e2, et) = (sys.eta_j(0), sys.eta_j(1), sys.eta_t());

    // ln(e^{−Λ}cosh I + 1)
    let x = -lam + ln_cosh(im);
    let ln_den = softplus(x);

    let two = -(fs.penalty_sum() + (1.0 - et) / et * lam / 2.0 + fs.gamma2_t_sum());
    let one = |j: usize, eta: f64| -(fs.penalty[j] + (1.0 - eta) / eta * lam / 2.0 + fs.gamma2_t[j]);
    let (o1, o2) = (one(0, e1), one(1, e2));

    let zz = (x / 2.0).tanh();
    let zi = signed_sinh_term(im, -lam - ln_den);
    // e^{−Λ}/den and 1/den
    let a = (-lam - ln_den).exp();
    let b = (-ln_den).exp();
    let (q, th) = (qm - tm, tp);
    let xx = (two).exp() * (a * th.cos() + b * q.cos());
    let xy = (two).exp() * (a * th.sin() + b * q.sin());
    let yx = (two).exp() * (a * th.sin() - b * q.sin());
    let yy = (two).exp() * (-a * th.cos() + b * q.cos());

    // 2 e^{o} e^{−Λ/2} cosh(I/2) / den and the sinh counterpart
    let ch = |o: f64| 2.0 * (o - lam / 2.0 + ln_cosh(im / 2.0) - ln_den).exp();
    let sh = |o: f64| 2.0 * signed_sinh_term(im / 2.0, o - lam / 2.0 - ln_den);
    let (c1, c2, s1, s2) = (ch(o1), ch(o2), sh(o1), sh(o2));
    let (p1, p2) = (qm / 2.0 - t1, qm / 2.0 + t2);

    let mut r = [0.0; 15];
    let mut set = |a: usize, b: usize, v: f64| r[bloch_index(a, b)] = v;
    set(3, 3, zz);
    set(3, 0, zi);
    set(0, 3, zi);
    set(1, 1, xx);
    set(1, 2, xy);
    set(2, 1, yx);
    set(2, 2, yy);
    set(1, 0, c1 * p1.cos());
    set(2, 0, -c1 * p1.sin());
    set(0, 1, c2 * p2.cos());
    set(0, 2, c2 * p2.sin());
    set(1, 3, s1 * p1.cos());
    set(2, 3, -s1 * p1.sin());
    set(3, 1, s2 * p2.cos());
    set(3, 2, s2 * p2.sin());
    r
}

/// Two-qubit state reconstructed from the filter; fails if the result is not
/// a valid density matrix.
pub fn bloch_from_filter(fs: &FilterState, sys: &SystemParams) -> Result<TwoQubitState> {
    let s = TwoQubitState::from_bloch(&filter_bloch_vector(fs, sys));
    s.validate(true)?;
    Ok(s)
}

/// Wootters concurrence.
pub fn concurrence_exact(state: &TwoQubitState) -> Result<f64> {
    state.validate(true)?;
    let rho = state.to_dmatrix();
    let yy = kron2(&pauli(2), &pauli(2));
    let yy = DMatrix::from_fn(4, 4, |i, j| yy[(i, j)]);
    let tilde = &yy * rho.map(|z| z.conj()) * &yy;
    let sq = psd_sqrt(&rho);
    let m = &sq * tilde * &sq;
    let mut l: Vec<f64> = hermitian_eigenvalues(&m).into_iter().map(|v| v.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Strong-measurement approximation of the concurrence from the filter integrals.
pub fn concurrence_filter(fs: &FilterState, sys: &SystemParams) -> f64 {
    concurrence_closed_form(sys.eta_t(), fs.lambda, fs.i_m, fs.penalty_sum(), fs.gamma2_t_sum())
}

/// C = max{0, (exp((3η_t−1)/η_t·Λ/2 − P − Γ₂ˢt) − 1)/(cosh I + e^Λ)}.
pub fn concurrence_closed_form(eta_t: f64, lambda: f64, i_m: f64, penalty: f64, gamma2_t: f64) -> f64 {
    let a = (3.0 * eta_t - 1.0) / eta_t * lambda / 2.0 - penalty - gamma2_t;
    if !(a > 0.0) {
        return 0.0;
    }
    let ln_num = a + (-(-a).exp_m1()).ln();
    let ln_den = log_add_exp(ln_cosh(i_m), lambda);
    (ln_num - ln_den).exp()
}

/// Rejects coordinates that do not form a physical state.
pub fn state_from_coordinates(r: &[f64; 15]) -> Result<TwoQubitState> {
    let s = TwoQubitState::from_bloch(r);
    s.validate(true).map_err(|e| Error::Invariant(format!("reconstructed state: {e}")))?;
    Ok(s)
}
