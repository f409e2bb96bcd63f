use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Record leading most probably to the entangled state with a given Q_m.
#[derive(Clone, Debug, PartialEq)]
pub struct MostProbablePath {
    /// Target reduced to [0, 2π).
    pub q_prime: f64,
    pub d_i: Vec<f64>,
    pub d_q: Vec<f64>,
    /// Integrated records Ĩ_r(t_n), Q̃_r(t_n) at the grid nodes.
    pub i_path: Vec<f64>,
    pub q_path: Vec<f64>,
}

/// Ĩ_r ≡ 0 and Q̃_r(t) = Q′_m ∫₀ᵗ S dτ/σ² with σ² = √2 ∫₀^{T_m} S² dτ, on the
/// grid of the amplitude samples `s` (left-point sums, as in the filter).
pub fn most_probable_trajectory(q_target: f64, s: &[f64], dt: f64) -> Result<MostProbablePath> {
    if !(dt > 0.0) || !q_target.is_finite() {
        return Err(Error::InvalidParams("most probable path needs dt > 0 and a finite target".into()));
    }
    let q_prime = q_target.rem_euclid(2.0 * PI);
    let sigma2 = SQRT_2 * s.iter().map(|x| x * x).sum::<f64>() * dt;
    let n = s.len();
    if sigma2 == 0.0 {
        if q_prime != 0.0 {
            return Err(Error::InvalidParams("no measurement amplitude to steer Q_m".into()));
        }
        return Ok(MostProbablePath {
            q_prime,
            d_i: vec![0.0; n],
            d_q: vec![0.0; n],
            i_path: vec![0.0; n + 1],
            q_path: vec![0.0; n + 1],
        });
    }
    let d_q: Vec<f64> = s.iter().map(|x| q_prime * x * dt / sigma2).collect();
    let mut q_path = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    q_path.push(0.0);
    for d in &d_q {
        acc += d;
        q_path.push(acc);
    }
    Ok(MostProbablePath { q_prime, d_i: vec![0.0; n], d_q, i_path: vec![0.0; n + 1], q_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterState;
    use num_complex::Complex64 as C64;

    #[test]
    fn zero_target_gives_zero_record() {
        let s = vec![1.0; 100];
        let p = most_probable_trajectory(4.0 * PI, &s, 1e-2).unwrap();
        assert_eq!(p.q_prime, 0.0);
        assert!(p.d_q.iter().chain(&p.d_i).all(|x| *x == 0.0));
    }

    #[test]
    fn endpoints_round_trip() {
        let dt = 1e-3;
        let s: Vec<f64> = (0..1000).map(|k| (k as f64 * dt * 5.0).sin().abs() * 4.0).collect();
        let p = most_probable_trajectory(-1.0, &s, dt).unwrap();
        assert!((p.q_prime - (2.0 * PI - 1.0)).abs() < 1e-12);
        let mut fs = FilterState::new();
        for k in 0..s.len() {
            fs.accumulate(p.d_i[k], p.d_q[k], C64::new(s[k], 0.0), [0.0; 2], [0.0; 2], [0.0; 2], dt).unwrap();
        }
        assert_eq!(fs.i_m, 0.0);
        assert!((fs.q_m - p.q_prime).abs() < 1e-12);
    }

    #[test]
    fn no_measurement_rejects_target() {
        assert!(most_probable_trajectory(1.0, &[0.0; 10], 1e-3).is_err());
        assert!(most_probable_trajectory(0.0, &[0.0; 10], 1e-3).is_ok());
    }
}
