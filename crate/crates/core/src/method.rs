//! The SDG and ESDG pipelines: assemble, condense, constrain, solve, recover.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::analysis::{
    interpolant_error_flux, interpolant_error_potential, l2_error_flux, l2_error_potential, l2_norm_flux, ErrorMeasure,
    ManufacturedProblem, ERROR_QUAD_DEGREE,
};
use crate::error::{Error, Result};
use crate::forms::{assemble_b, assemble_load, assemble_mass, assemble_r, AssemblyOptions, ConvectionField};
use crate::geometry::Point;
use crate::mesh::StaggeredMesh;
use crate::spaces::{DofSpace, EmbeddingMatrix, SpaceKind};
use crate::sparse::SparseMatrix;
use crate::system::{
    apply_dirichlet, condense, embed_system, recover, solve_constrained, CondensedOperator, ConstrainedSystem,
    LinearSolver, MassInverse, SolveResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sdg,
    Esdg,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Sdg => "SDG",
            Method::Esdg => "ESDG",
        }
    }

    pub fn scalar_kind(self) -> SpaceKind {
        match self {
            Method::Sdg => SpaceKind::Uh,
            Method::Esdg => SpaceKind::UhTilde,
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sdg" => Ok(Method::Sdg),
            "esdg" => Ok(Method::Esdg),
            _ => Err(Error::SpaceMismatch("method must be SDG or ESDG")),
        }
    }
}

/// Spaces and mesh-only matrices for one method on one mesh. The convection
/// dependent parts are assembled per solve.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub method: Method,
    pub mesh: Arc<StaggeredMesh>,
    pub uh: DofSpace,
    pub wh: DofSpace,
    /// `UhTilde` and the embedding, for ESDG only.
    pub tilde: Option<(DofSpace, EmbeddingMatrix)>,
    pub mass: SparseMatrix,
    pub mass_inverse: MassInverse,
    /// `B` on `Uh`.
    pub b: SparseMatrix,
    pub options: AssemblyOptions,
}

impl Discretization {
    pub fn new(method: Method, mesh: Arc<StaggeredMesh>, options: AssemblyOptions) -> Result<Self> {
        let uh = DofSpace::build(mesh.clone(), SpaceKind::Uh, 1)?;
        let wh = DofSpace::build(mesh.clone(), SpaceKind::Wh, 1)?;
        let tilde = match method {
            Method::Sdg => None,
            Method::Esdg => {
                let t = DofSpace::build(mesh.clone(), SpaceKind::UhTilde, 1)?;
                let p = EmbeddingMatrix::build(&uh, &t)?;
                Some((t, p))
            }
        };
        let mass = assemble_mass(&wh, &options)?;
        let mass_inverse = MassInverse::factor(&wh, &mass)?;
        let b = assemble_b(&wh, &uh, &options)?;
        Ok(Self { method, mesh, uh, wh, tilde, mass, mass_inverse, b, options })
    }

    pub fn structured(method: Method, n: usize, options: AssemblyOptions) -> Result<Self> {
        Self::new(method, Arc::new(StaggeredMesh::build_structured(n)?), options)
    }

    /// The space holding the unknown: `Uh` for SDG, `UhTilde` for ESDG.
    pub fn scalar_space(&self) -> &DofSpace {
        match &self.tilde {
            Some((t, _)) => t,
            None => &self.uh,
        }
    }

    pub fn embedding(&self) -> Option<&EmbeddingMatrix> {
        self.tilde.as_ref().map(|(_, p)| p)
    }

    /// `Uh` coefficients of a scalar-space coefficient vector.
    pub fn to_uh(&self, u: &[f64]) -> Vec<f64> {
        match self.embedding() {
            Some(p) => p.expand(u),
            None => u.to_vec(),
        }
    }

    pub fn assemble_r(&self, b: &ConvectionField) -> Result<SparseMatrix> {
        assemble_r(&self.wh, &self.uh, b, &self.options)
    }

    /// Condensed operator on the scalar space of the method.
    pub fn operator(&self, r: &SparseMatrix, mu: f64, theta: f64) -> Result<CondensedOperator> {
        let op = condense(&self.mass_inverse, &self.b, r, mu, theta)?;
        match self.embedding() {
            Some(p) => embed_system(&op, p),
            None => Ok(op),
        }
    }

    /// Load vector on the scalar space (`P f` for ESDG).
    pub fn load(&self, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
        let f_uh = assemble_load(&self.uh, f, &self.options)?;
        Ok(match self.embedding() {
            Some(p) => p.restrict(&f_uh),
            None => f_uh,
        })
    }

    pub fn constrained_system(
        &self,
        op: &CondensedOperator,
        load: &[f64],
        g: impl Fn(Point) -> f64,
    ) -> Result<ConstrainedSystem> {
        apply_dirichlet(&op.a, load, self.scalar_space(), g)
    }

    /// Solve `-mu lap(u) + b . grad(u) = f`, `u = g` on the boundary.
    pub fn solve_with(
        &self,
        b: &ConvectionField,
        f: impl Fn(Point) -> f64,
        g: impl Fn(Point) -> f64,
        mu: f64,
        theta: f64,
        solver: &dyn LinearSolver,
    ) -> Result<SolveResult> {
        let r = self.assemble_r(b)?;
        let op = self.operator(&r, mu, theta)?;
        let load = self.load(f)?;
        let system = self.constrained_system(&op, &load, g)?;
        let sol = solve_constrained(&system, solver)?;
        let fields = recover(&self.mass_inverse, &self.b, &r, &self.to_uh(&sol.u), mu, theta)?;
        Ok(SolveResult {
            u: sol.u,
            w: fields.w,
            p: fields.p,
            z: fields.z,
            residual_norm: sol.residual_norm,
            condition: sol.condition,
            mu,
            theta,
        })
    }

    pub fn solve(&self, problem: &ManufacturedProblem, theta: f64, solver: &dyn LinearSolver) -> Result<SolveResult> {
        self.solve_with(&problem.b, |p| problem.f(p), |p| problem.g(p), problem.mu, theta, solver)
    }

    /// Potential and flux errors, `z = grad u`.
    pub fn errors(&self, result: &SolveResult, problem: &ManufacturedProblem, measure: ErrorMeasure) -> (f64, f64) {
        let (space, u, z) = (self.scalar_space(), |p| problem.u(p), |p| problem.grad_u(p));
        match measure {
            ErrorMeasure::Exact => (
                l2_error_potential(space, &result.u, u, ERROR_QUAD_DEGREE),
                l2_error_flux(&self.wh, &result.z, z, ERROR_QUAD_DEGREE),
            ),
            ErrorMeasure::Interpolant => {
                (interpolant_error_potential(space, &result.u, u), interpolant_error_flux(&self.wh, &result.z, z))
            }
        }
    }

    pub fn flux_norm(&self, result: &SolveResult) -> f64 {
        l2_norm_flux(&self.wh, &result.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::DenseSolver;

    #[test]
    fn linear_solution_is_reproduced() {
        // b = 0, f = 0, u = g linear: exact for both methods
        let g = |p: Point| 1.0 + 2.0 * p.x - 3.0 * p.y;
        for method in [Method::Sdg, Method::Esdg] {
            let d = Discretization::structured(method, 2, AssemblyOptions::default()).unwrap();
            let res = d.solve_with(&ConvectionField::zero(), |_| 0.0, g, 1.0, 0.5, &DenseSolver).unwrap();
            let eu = l2_error_potential(d.scalar_space(), &res.u, g, 4);
            let ez = l2_error_flux(&d.wh, &res.z, |_| Point::new(2.0, -3.0), 4);
            assert!(eu < 1e-10 && ez < 1e-10, "{method:?}: {eu} {ez}");
        }
    }

    #[test]
    fn parse_method() {
        assert_eq!("esdg".parse::<Method>().unwrap(), Method::Esdg);
        assert_eq!("SDG".parse::<Method>().unwrap(), Method::Sdg);
        assert!("dg".parse::<Method>().is_err());
    }
}
