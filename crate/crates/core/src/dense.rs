//! Small dense factorizations: Cholesky for the per-macro mass blocks and a
//! partially pivoted LU used as the fallback direct solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `L L^T` factorization of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Returns `None` when a non-positive pivot appears.
    pub fn factor(a: &DenseMatrix) -> Option<Self> {
        let n = a.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.at(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = libm::sqrt(d);
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a.at(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}

/// `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let (p, pivot) =
                (k..n).map(|i| (i, lu[i * n + k].abs())).fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pivot > scale * f64::EPSILON * n as f64) {
                return Err(Error::Singular("zero pivot in dense LU"));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve_transpose(&self, b: &mut [f64]) {
        // A^T = U^T L^T P, so solve U^T y = b, L^T z = y, x = P^T z.
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[k * n + i] * y[k];
            }
            y[i] /= self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.lu[k * n + i] * y[k];
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = y[i];
        }
    }

    /// Diagonal of the upper factor.
    pub fn u_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.lu[i * self.n + i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        let mut a = DenseMatrix::zeros(3);
        a.data.copy_from_slice(&[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = sample();
        let c = Cholesky::factor(&a).unwrap();
        let mut x = [1.0, 2.0, 3.0];
        c.solve_in_place(&mut x);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.at(i, j) * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-14);
        }
        let mut bad = sample();
        *bad.at_mut(2, 2) = -1.0;
        assert!(Cholesky::factor(&bad).is_none());
    }

    #[test]
    fn lu_solves_and_transposes() {
        let mut a = DenseMatrix::zeros(3);
        a.data.copy_from_slice(&[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let lu = DenseLu::factor(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let mut x = b;
        lu.solve(&mut x);
        let mut xt = b;
        lu.solve_transpose(&mut xt);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.at(i, j) * x[j]).sum();
            let rt: f64 = (0..3).map(|j| a.at(j, i) * xt[j]).sum();
            assert!((r - b[i]).abs() < 1e-14);
            assert!((rt - b[i]).abs() < 1e-14);
        }
        let singular = DenseMatrix { n: 2, data: vec![1.0, 2.0, 2.0, 4.0] };
        assert!(DenseLu::factor(&singular).is_err());
    }
}
