//! Sparse LU through faer.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use sdg_core::system::{Factorization, LinearSolver};
use sdg_core::{Error, Result, SparseMatrix};

/// Sparse LU with partial pivoting (faer).
#[derive(Debug, Clone, Copy, Default)]
pub struct SparseLu;

pub struct SparseLuFactor {
    n: usize,
    lu: Lu<usize, f64>,
}

/// Run faer kernels on one thread (`true`) or on the rayon pool.
pub fn set_deterministic(deterministic: bool) {
    if deterministic {
        faer::set_global_parallelism(Par::Seq);
    } else {
        faer::set_global_parallelism(Par::rayon(0));
    }
}

impl LinearSolver for SparseLu {
    fn name(&self) -> &'static str {
        "faer-sparse-lu"
    }

    fn factor(&self, a: &SparseMatrix) -> Result<Box<dyn Factorization>> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        let triplets: Vec<_> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|_| Error::Singular("could not build the sparse matrix"))?;
        let lu = mat.sp_lu().map_err(|_| Error::Singular("structurally singular matrix"))?;
        Ok(Box::new(SparseLuFactor { n, lu }))
    }
}

impl SparseLuFactor {
    fn run(&self, rhs: &mut [f64], transpose: bool) -> Result<()> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: rhs.len() });
        }
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        if transpose {
            self.lu.solve_transpose_in_place(x.as_mut());
        } else {
            self.lu.solve_in_place(x.as_mut());
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = x[(i, 0)];
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("zero pivot in sparse LU"));
        }
        Ok(())
    }
}

impl Factorization for SparseLuFactor {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        self.run(rhs, false)
    }

    fn solve_transpose_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        self.run(rhs, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdg_core::system::DenseSolver;

    #[test]
    fn agrees_with_dense_lu() {
        let a = SparseMatrix::from_dense(&[
            vec![0.0, 2.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![3.0, 0.0, 1.0, -1.0],
            vec![0.0, 0.0, 2.0, 5.0],
        ]);
        let b = [1.0, -2.0, 0.5, 3.0];
        for transpose in [false, true] {
            let (mut x, mut y) = (b, b);
            let s = SparseLu.factor(&a).unwrap();
            let d = DenseSolver.factor(&a).unwrap();
            if transpose {
                s.solve_transpose_in_place(&mut x).unwrap();
                d.solve_transpose_in_place(&mut y).unwrap();
            } else {
                s.solve_in_place(&mut x).unwrap();
                d.solve_in_place(&mut y).unwrap();
            }
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_fails() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let res = SparseLu.factor(&a).and_then(|f| {
            let mut x = [1.0, 1.0];
            f.solve_in_place(&mut x)
        });
        assert!(res.is_err());
    }
}
