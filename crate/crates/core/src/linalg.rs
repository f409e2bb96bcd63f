//! Dense and sparse complex linear algebra helpers.
//!
//! Qubit basis convention: index 0 is the excited state |e⟩ (σz = +1),
//! index 1 the ground state |g⟩. Two-qubit index is `2*q1 + q2`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit Pauli matrix by label 0..4 = I, X, Y, Z.
pub fn pauli(k: usize) -> Matrix2<C64> {
    match k {
        0 => Matrix2::identity(),
        1 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2::new(ZERO, -I, I, ZERO),
        3 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index out of range"),
    }
}

pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut d = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Trace distance ½‖a − b‖₁ between Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Row/column compressed complex matrix for repeated products with dense
/// density matrices.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim], cols: vec![Vec::new(); dim] }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        let mut s = Self::zeros(dim);
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v != ZERO {
                    s.rows[i].push((j, v));
                    s.cols[j].push((i, v));
                }
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dense(&self.to_dense().adjoint())
    }

    /// `out += coef · A ρ`
    pub fn add_left_product(&self, coef: C64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for j in 0..n {
            let col = &r[j * n..(j + 1) * n];
            for (i, row) in self.rows.iter().enumerate() {
                if row.is_empty() {
                    continue;
                }
                let mut s = ZERO;
                for &(k, a) in row {
                    s += a * col[k];
                }
                o[j * n + i] += coef * s;
            }
        }
    }

    /// `out += coef · ρ A`
    pub fn add_right_product(&self, coef: C64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for (j, col) in self.cols.iter().enumerate() {
            for &(k, a) in col {
                let f = coef * a;
                let src = &r[k * n..(k + 1) * n];
                let dst = &mut o[j * n..(j + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += f * s;
                }
            }
        }
    }

    pub fn left_product(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.add_left_product(ONE, rho, &mut out);
        out
    }

    pub fn right_product(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.add_right_product(ONE, rho, &mut out);
        out
    }

    /// Expectation value Tr(Aρ).
    pub fn expectation(&self, rho: &DMatrix<C64>) -> C64 {
        let mut s = ZERO;
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                s += a * rho[(k, i)];
            }
        }
        s
    }
}

pub fn z1() -> Matrix4<C64> {
    kron2(&pauli(3), &pauli(0))
}

pub fn z2() -> Matrix4<C64> {
    kron2(&pauli(0), &pauli(3))
}

/// Eigenvalue ±1 of σz on qubit `q` (0 or 1) for two-qubit basis index `k`.
pub fn z_sign(q: usize, k: usize) -> f64 {
    let bit = if q == 0 { k >> 1 } else { k & 1 };
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_products_match_dense() {
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if (i + 2 * j) % 3 == 0 {
                c(i as f64 - 1.5, j as f64 * 0.3)
            } else {
                ZERO
            }
        });
        let rho = DMatrix::from_fn(n, n, |i, j| c((i * j) as f64 * 0.1, i as f64 - j as f64));
        let s = SparseMatrix::from_dense(&a);
        assert!(max_abs(&(s.left_product(&rho) - &a * &rho)) < 1e-12);
        assert!(max_abs(&(s.right_product(&rho) - &rho * &a)) < 1e-12);
        assert!((s.expectation(&rho) - (&a * &rho).trace()).norm() < 1e-12);
        assert!(max_abs(&(s.adjoint().to_dense() - a.adjoint())) < 1e-15);
    }

    #[test]
    fn pauli_algebra() {
        let x = pauli(1);
        let y = pauli(2);
        let z = pauli(3);
        assert_eq!(x * y, z * I);
        assert_eq!(z1() * z2(), kron2(&z, &z));
        for k in 0..4 {
            assert_eq!(z1()[(k, k)].re, z_sign(0, k));
            assert_eq!(z2()[(k, k)].re, z_sign(1, k));
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let b = DMatrix::from_fn(3, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let m = &b * b.adjoint();
        let r = psd_sqrt(&m);
        assert!(max_abs(&(&r * &r - &m)) < 1e-10);
    }
}
