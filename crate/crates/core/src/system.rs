//! Static condensation of the flux unknowns, boundary conditions, and the
//! solve/recovery step.
//!
//! With `Y_B = M^-1 B^T` and `Y_R = M^-1 R^T` computed block by block,
//!
//! ```text
//!   lap_h = -B Y_B
//!   C     = -theta B Y_R + (1 - theta) R Y_B
//!   A     = -mu lap_h + C
//! ```
//!
//! and after solving `A u = f` the auxiliary fields are recovered as
//! `w = M^-1 (sqrt(mu) B^T - theta / sqrt(mu) R^T) u`, `p = M^-1 R^T u`,
//! `z = M^-1 B^T u`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Cholesky, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::spaces::{DofSpace, EmbeddingMatrix, SpaceKind, VECTOR_PER_MACRO};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// A factored square matrix.
pub trait Factorization {
    fn dim(&self) -> usize;
    fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()>;
    fn solve_transpose_in_place(&self, rhs: &mut [f64]) -> Result<()>;
}

/// A direct solver able to factor a sparse matrix.
pub trait LinearSolver {
    fn name(&self) -> &'static str;
    fn factor(&self, a: &SparseMatrix) -> Result<Box<dyn Factorization>>;
}

/// Dense LU with partial pivoting. Only sensible for a few thousand unknowns.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSolver;

impl Factorization for DenseLu {
    fn dim(&self) -> usize {
        self.u_diagonal().count()
    }

    fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        self.solve(rhs);
        Ok(())
    }

    fn solve_transpose_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        self.solve_transpose(rhs);
        Ok(())
    }
}

impl LinearSolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense-lu"
    }

    fn factor(&self, a: &SparseMatrix) -> Result<Box<dyn Factorization>> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        let mut d = DenseMatrix::zeros(n);
        for (i, j, v) in a.triplets() {
            *d.at_mut(i, j) = v;
        }
        Ok(Box::new(DenseLu::factor(&d)?))
    }
}

/// Estimate of `||A^-1||_1` (Hager's method, as refined by Higham) using
/// only solves with `A` and `A^T`.
pub fn inverse_norm1_estimate(f: &dyn Factorization) -> Result<f64> {
    let n = f.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let mut y = x.clone();
        f.solve_in_place(&mut y)?;
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let mut z: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        f.solve_transpose_in_place(&mut z)?;
        let (j, zmax) = z.iter().enumerate().fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        last_j = j;
    }
    // alternating test vector guards against unlucky cancellation
    let mut alt: Vec<f64> =
        (0..n).map(|i| (if i % 2 == 0 { 1.0 } else { -1.0 }) * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0))).collect();
    f.solve_in_place(&mut alt)?;
    let alt_est = 2.0 * alt.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
    Ok(estimate.max(alt_est))
}

/// 1-norm condition number estimate of `a`, given its factorization.
pub fn condition_estimate(a: &SparseMatrix, f: &dyn Factorization) -> Result<f64> {
    Ok(a.norm1() * inverse_norm1_estimate(f)?)
}

/// Cholesky factors of the per-macro blocks of the `Wh` mass matrix.
#[derive(Debug, Clone)]
pub struct MassInverse {
    blocks: Vec<Cholesky>,
}

impl MassInverse {
    pub fn factor(wh: &DofSpace, m: &SparseMatrix) -> Result<Self> {
        if wh.kind() != SpaceKind::Wh {
            return Err(Error::SpaceMismatch("mass inverse needs Wh"));
        }
        if m.shape() != (wh.n_dofs(), wh.n_dofs()) {
            return Err(Error::DimensionMismatch { expected: wh.n_dofs(), found: m.n_rows() });
        }
        if let Some((row, col, _)) =
            m.triplets().find(|&(i, j, v)| v != 0.0 && i / VECTOR_PER_MACRO != j / VECTOR_PER_MACRO)
        {
            return Err(Error::NotBlockDiagonal { row, col });
        }
        let n_blocks = wh.n_dofs() / VECTOR_PER_MACRO;
        let mut blocks = Vec::with_capacity(n_blocks);
        for k in 0..n_blocks {
            let range = wh.macro_block(k);
            let mut d = DenseMatrix::zeros(VECTOR_PER_MACRO);
            for i in range.clone() {
                for (j, v) in m.row(i) {
                    *d.at_mut(i - range.start, j - range.start) = v;
                }
            }
            blocks.push(Cholesky::factor(&d).ok_or(Error::NotPositiveDefinite { block: k })?);
        }
        Ok(Self { blocks })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.len() * VECTOR_PER_MACRO
    }

    /// `M^-1 v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let mut out = v.to_vec();
        for (k, c) in self.blocks.iter().enumerate() {
            c.solve_in_place(&mut out[k * VECTOR_PER_MACRO..(k + 1) * VECTOR_PER_MACRO]);
        }
        out
    }

    fn block(&self, k: usize) -> &Cholesky {
        &self.blocks[k]
    }
}

pub fn check_parameters(mu: f64, theta: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidDiffusivity(mu));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidTheta(theta));
    }
    Ok(())
}

/// The condensed operator on a scalar space.
#[derive(Debug, Clone)]
pub struct CondensedOperator {
    pub a: SparseMatrix,
    /// `lap_h = -B M^-1 B^T` (negative semidefinite).
    pub laplacian: SparseMatrix,
    /// `C = -theta B M^-1 R^T + (1 - theta) R M^-1 B^T`.
    pub convection: SparseMatrix,
    pub mu: f64,
    pub theta: f64,
}

/// Eliminate the flux unknowns. `b` and `r` have rows in a scalar space and
/// columns in `Wh`.
pub fn condense(
    minv: &MassInverse,
    b: &SparseMatrix,
    r: &SparseMatrix,
    mu: f64,
    theta: f64,
) -> Result<CondensedOperator> {
    check_parameters(mu, theta)?;
    if b.shape() != r.shape() {
        return Err(Error::DimensionMismatch { expected: b.n_rows(), found: r.n_rows() });
    }
    if b.n_cols() != minv.dim() {
        return Err(Error::DimensionMismatch { expected: minv.dim(), found: b.n_cols() });
    }
    let n = b.n_rows();
    let bt = b.transpose();
    let rt = r.transpose();
    let mut lap = TripletBuilder::with_capacity(n, n, 81 * minv.n_blocks());
    let mut conv = TripletBuilder::with_capacity(n, n, 2 * 81 * minv.n_blocks());
    const NB: usize = VECTOR_PER_MACRO;

    let mut rows: Vec<usize> = Vec::new();
    for k in 0..minv.n_blocks() {
        let range = k * NB..(k + 1) * NB;
        rows.clear();
        for a in range.clone() {
            rows.extend(bt.row(a).map(|(j, _)| j));
            rows.extend(rt.row(a).map(|(j, _)| j));
        }
        rows.sort_unstable();
        rows.dedup();
        let nu = rows.len();
        let local = |m: &SparseMatrix| {
            let mut d = vec![0.0; NB * nu];
            for a in range.clone() {
                for (j, v) in m.row(a) {
                    let c = rows.binary_search(&j).expect("collected above");
                    d[(a - range.start) * nu + c] = v;
                }
            }
            d
        };
        let bk = local(&bt);
        let rk = local(&rt);
        let solve_cols = |m: &[f64]| {
            let mut y = m.to_vec();
            let mut col = [0.0; NB];
            for c in 0..nu {
                for a in 0..NB {
                    col[a] = m[a * nu + c];
                }
                minv.block(k).solve_in_place(&mut col);
                for a in 0..NB {
                    y[a * nu + c] = col[a];
                }
            }
            y
        };
        let yb = solve_cols(&bk);
        let yr = solve_cols(&rk);
        for c in 0..nu {
            for d in 0..nu {
                let (mut bmb, mut bmr, mut rmb) = (0.0, 0.0, 0.0);
                for a in 0..NB {
                    bmb += bk[a * nu + c] * yb[a * nu + d];
                    bmr += bk[a * nu + c] * yr[a * nu + d];
                    rmb += rk[a * nu + c] * yb[a * nu + d];
                }
                lap.push(rows[c], rows[d], -bmb);
                conv.push(rows[c], rows[d], -theta * bmr + (1.0 - theta) * rmb);
            }
        }
    }
    let laplacian = lap.build();
    let convection = conv.build();
    let a = convection.add_scaled(&laplacian, -mu)?;
    Ok(CondensedOperator { a, laplacian, convection, mu, theta })
}

/// Congruence `P X P^T` of every component: the operator on `UhTilde`.
pub fn embed_system(op: &CondensedOperator, p: &EmbeddingMatrix) -> Result<CondensedOperator> {
    let (_, n_uh) = p.shape();
    if op.a.n_rows() != n_uh {
        return Err(Error::DimensionMismatch { expected: n_uh, found: op.a.n_rows() });
    }
    let pt = p.p.transpose();
    let congruence = |x: &SparseMatrix| p.p.matmul(x)?.matmul(&pt);
    Ok(CondensedOperator {
        a: congruence(&op.a)?,
        laplacian: congruence(&op.laplacian)?,
        convection: congruence(&op.convection)?,
        mu: op.mu,
        theta: op.theta,
    })
}

/// A square system with Dirichlet rows replaced by the identity.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub boundary_dofs: Vec<usize>,
    /// Prescribed values, parallel to `boundary_dofs`.
    pub boundary_values: Vec<f64>,
}

/// Impose `u = g` at the boundary nodes of `space` by nodal interpolation.
/// Couplings to the prescribed values are moved to the right-hand side.
pub fn apply_dirichlet(
    a: &SparseMatrix,
    rhs: &[f64],
    space: &DofSpace,
    g: impl Fn(Point) -> f64,
) -> Result<ConstrainedSystem> {
    let n = space.n_dofs();
    if a.shape() != (n, n) || rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.n_rows() });
    }
    let boundary_dofs = space.boundary_dofs().to_vec();
    let mut value = vec![0.0; n];
    let mut fixed = vec![false; n];
    let mut boundary_values = Vec::with_capacity(boundary_dofs.len());
    for &i in &boundary_dofs {
        let v = g(space.dof_point(i));
        if !v.is_finite() {
            return Err(Error::NonFinite("boundary data"));
        }
        value[i] = v;
        fixed[i] = true;
        boundary_values.push(v);
    }
    let mut out_rhs = rhs.to_vec();
    let mut m = TripletBuilder::with_capacity(n, n, a.nnz());
    for i in 0..n {
        if fixed[i] {
            m.push(i, i, 1.0);
            out_rhs[i] = value[i];
            continue;
        }
        for (j, v) in a.row(i) {
            if fixed[j] {
                out_rhs[i] -= v * value[j];
            } else {
                m.push(i, j, v);
            }
        }
    }
    Ok(ConstrainedSystem { matrix: m.build(), rhs: out_rhs, boundary_dofs, boundary_values })
}

/// Scalar solution of a constrained system.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: Vec<f64>,
    /// `||A u - f|| / ||f||` (absolute when `f = 0`).
    pub residual_norm: f64,
    pub condition: f64,
}

pub fn solve_constrained(system: &ConstrainedSystem, solver: &dyn LinearSolver) -> Result<LinearSolution> {
    let factor = solver.factor(&system.matrix)?;
    let mut u = system.rhs.clone();
    factor.solve_in_place(&mut u)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite solution"));
    }
    let au = system.matrix.matvec(&u);
    let res = au.iter().zip(&system.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let norm_f = system.rhs.iter().map(|v| v * v).sum::<f64>();
    let residual_norm = if norm_f > 0.0 { libm::sqrt(res / norm_f) } else { libm::sqrt(res) };
    let condition = condition_estimate(&system.matrix, factor.as_ref())?;
    Ok(LinearSolution { u, residual_norm, condition })
}

/// Recovered flux-space fields for a `Uh` coefficient vector.
#[derive(Debug, Clone)]
pub struct RecoveredFields {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn recover(
    minv: &MassInverse,
    b: &SparseMatrix,
    r: &SparseMatrix,
    u: &[f64],
    mu: f64,
    theta: f64,
) -> Result<RecoveredFields> {
    check_parameters(mu, theta)?;
    if u.len() != b.n_rows() {
        return Err(Error::DimensionMismatch { expected: b.n_rows(), found: u.len() });
    }
    let z = minv.apply(&b.matvec_transpose(u));
    let p = minv.apply(&r.matvec_transpose(u));
    let sm = libm::sqrt(mu);
    let w = z.iter().zip(&p).map(|(zi, pi)| sm * zi - theta / sm * pi).collect();
    Ok(RecoveredFields { w, p, z })
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Coefficients in the scalar space of the method.
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub residual_norm: f64,
    pub condition: f64,
    pub mu: f64,
    pub theta: f64,
}
