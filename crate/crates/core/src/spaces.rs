//! Finite element spaces on a staggered mesh (lowest nontrivial degree k = 1).
//!
//! * `Uh`: piecewise linear on sub-triangles, continuous across interior
//!   primal edges. Degrees of freedom are the two endpoint values of every
//!   primal edge (shared by the sub-triangles of `R(e)`) plus one centroid
//!   value per sub-triangle.
//! * `UhTilde`: the subspace of `Uh` that is single valued at every
//!   initial-mesh vertex; the endpoint values meeting at a vertex are merged.
//! * `Wh`: piecewise linear vector fields whose normal component is
//!   continuous across dual edges. Each macro triangle carries 12 degrees of
//!   freedom: at each macro vertex the normal component on the adjoining dual
//!   edge (shared) and one tangential component per side, and at the interior
//!   point the normal component on each of the three dual edges.
//!
//! Boundary values of the scalar spaces are kept as degrees of freedom and
//! flagged in `boundary_dofs`; Dirichlet data is imposed when solving.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{EdgeKind, StaggeredMesh};
use crate::sparse::{SparseMatrix, TripletBuilder};

pub const MAX_DEGREE: usize = 1;
/// Local basis functions per sub-triangle.
pub const SCALAR_LOCAL: usize = 3;
pub const VECTOR_LOCAL: usize = 6;
/// `Wh` degrees of freedom per macro triangle.
pub const VECTOR_PER_MACRO: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Uh,
    UhTilde,
    Wh,
}

impl SpaceKind {
    pub fn is_scalar(self) -> bool {
        !matches!(self, SpaceKind::Wh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDof {
    pub dof: usize,
    pub weight: f64,
}

/// A local vector basis function `lambda_node * direction`. The coefficient
/// of a smooth field `F` under nodal interpolation is `F(node) . functional`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorShape {
    pub node: usize,
    pub direction: Point,
    pub functional: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisValues {
    Scalar { values: Vec<f64>, gradients: Vec<Point> },
    Vector { values: Vec<Point>, divergences: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct DofSpace {
    kind: SpaceKind,
    degree: usize,
    mesh: Arc<StaggeredMesh>,
    n_dofs: usize,
    /// `n_local` entries per sub-triangle.
    local: Vec<LocalDof>,
    n_local: usize,
    /// Only for `Wh`; parallel to `local`.
    shapes: Vec<VectorShape>,
    boundary_dofs: Vec<usize>,
    is_boundary: Vec<bool>,
    /// Nodal location of each scalar degree of freedom.
    dof_points: Vec<Point>,
}

impl DofSpace {
    pub fn build(mesh: Arc<StaggeredMesh>, kind: SpaceKind, degree: usize) -> Result<Self> {
        if degree != MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        match kind {
            SpaceKind::Uh => Ok(Self::build_uh(mesh)),
            SpaceKind::UhTilde => Ok(Self::build_uh_tilde(mesh)),
            SpaceKind::Wh => Ok(Self::build_wh(mesh)),
        }
    }

    fn scalar_dof_of_node(mesh: &StaggeredMesh, s: usize, node: usize) -> (usize, usize) {
        // (primal ordinal, endpoint slot) of the primal edge node of sub s
        let sub = mesh.sub_triangles[s];
        let e = mesh.sub_edges[s][2];
        let p = mesh.primal_ordinal[e].expect("edge opposite the interior point is primal");
        let slot = if mesh.edges[e].endpoints[0] == sub[node] { 0 } else { 1 };
        (p, slot)
    }

    fn build_uh(mesh: Arc<StaggeredMesh>) -> Self {
        let n_edge_dofs = 2 * mesh.primal_edges.len();
        let n_dofs = n_edge_dofs + mesh.n_sub();
        let mut local = Vec::with_capacity(SCALAR_LOCAL * mesh.n_sub());
        for s in 0..mesh.n_sub() {
            for node in 0..2 {
                let (p, slot) = Self::scalar_dof_of_node(&mesh, s, node);
                local.push(LocalDof { dof: 2 * p + slot, weight: 1.0 });
            }
            local.push(LocalDof { dof: n_edge_dofs + s, weight: 1.0 });
        }
        let mut dof_points = vec![Point::default(); n_dofs];
        let mut is_boundary = vec![false; n_dofs];
        for (p, &e) in mesh.primal_edges.iter().enumerate() {
            let edge = &mesh.edges[e];
            for slot in 0..2 {
                dof_points[2 * p + slot] = mesh.vertices[edge.endpoints[slot]];
                is_boundary[2 * p + slot] = edge.kind == EdgeKind::PrimalBoundary;
            }
        }
        for s in 0..mesh.n_sub() {
            dof_points[n_edge_dofs + s] = mesh.vertices[mesh.sub_triangles[s][2]];
        }
        Self::finish(SpaceKind::Uh, mesh, n_dofs, local, SCALAR_LOCAL, Vec::new(), is_boundary, dof_points)
    }

    fn build_uh_tilde(mesh: Arc<StaggeredMesh>) -> Self {
        let nv = mesh.n_primal_vertices;
        let n_dofs = nv + mesh.n_sub();
        let mut local = Vec::with_capacity(SCALAR_LOCAL * mesh.n_sub());
        for s in 0..mesh.n_sub() {
            let sub = mesh.sub_triangles[s];
            local.push(LocalDof { dof: sub[0], weight: 1.0 });
            local.push(LocalDof { dof: sub[1], weight: 1.0 });
            local.push(LocalDof { dof: nv + s, weight: 1.0 });
        }
        let mut dof_points = mesh.vertices[..nv].to_vec();
        dof_points.extend((0..mesh.n_sub()).map(|s| mesh.vertices[mesh.sub_triangles[s][2]]));
        let mut is_boundary = vec![false; n_dofs];
        is_boundary[..nv].copy_from_slice(&mesh.boundary_vertex[..nv]);
        Self::finish(SpaceKind::UhTilde, mesh, n_dofs, local, SCALAR_LOCAL, Vec::new(), is_boundary, dof_points)
    }

    fn build_wh(mesh: Arc<StaggeredMesh>) -> Self {
        let n_dofs = VECTOR_PER_MACRO * mesh.n_macro();
        let mut local = Vec::with_capacity(VECTOR_LOCAL * mesh.n_sub());
        let mut shapes = Vec::with_capacity(VECTOR_LOCAL * mesh.n_sub());
        for k in 0..mesh.n_macro() {
            let base = VECTOR_PER_MACRO * k;
            let nu = mesh.vertices[mesh.interior_points[k]];
            // geometric frame of dual edge i, running from macro vertex i to nu
            let frame: [(Point, Point); 3] = core::array::from_fn(|i| {
                let a = mesh.vertices[mesh.macro_triangles[k][i]];
                let d = nu - a;
                let t = d * (1.0 / d.norm());
                (t.perp_right(), t)
            });
            let sigma_vertex = |i: usize| base + i;
            let tangent = |i: usize, side: usize| base + 3 + 2 * i + side;
            let sigma_centre = |i: usize| base + 9 + i;
            for i in 0..3 {
                let j = (i + 1) % 3;
                let (ni, ti) = frame[i];
                let (nj, tj) = frame[j];
                // dual basis at nu: da . ni = 1, da . nj = 0, db . ni = 0, db . nj = 1
                let det = ni.x * nj.y - ni.y * nj.x;
                let da = Point::new(nj.y, -nj.x) * (1.0 / det);
                let db = Point::new(-ni.y, ni.x) * (1.0 / det);
                let entries = [
                    (0, ni, ni, sigma_vertex(i)),
                    (0, ti, ti, tangent(i, 0)),
                    (1, nj, nj, sigma_vertex(j)),
                    (1, tj, tj, tangent(j, 1)),
                    (2, da, ni, sigma_centre(i)),
                    (2, db, nj, sigma_centre(j)),
                ];
                for (node, direction, functional, dof) in entries {
                    local.push(LocalDof { dof, weight: 1.0 });
                    shapes.push(VectorShape { node, direction, functional });
                }
            }
        }
        let is_boundary = vec![false; n_dofs];
        Self::finish(SpaceKind::Wh, mesh, n_dofs, local, VECTOR_LOCAL, shapes, is_boundary, Vec::new())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: SpaceKind,
        mesh: Arc<StaggeredMesh>,
        n_dofs: usize,
        local: Vec<LocalDof>,
        n_local: usize,
        shapes: Vec<VectorShape>,
        is_boundary: Vec<bool>,
        dof_points: Vec<Point>,
    ) -> Self {
        let boundary_dofs = is_boundary.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        Self { kind, degree: 1, mesh, n_dofs, local, n_local, shapes, boundary_dofs, is_boundary, dof_points }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mesh(&self) -> &Arc<StaggeredMesh> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn local_dofs(&self, sub: usize) -> &[LocalDof] {
        &self.local[sub * self.n_local..(sub + 1) * self.n_local]
    }

    pub fn vector_shapes(&self, sub: usize) -> &[VectorShape] {
        &self.shapes[sub * self.n_local..(sub + 1) * self.n_local]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.is_boundary[dof]
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| !self.is_boundary[i]).collect()
    }

    /// Nodal location of a scalar degree of freedom.
    pub fn dof_point(&self, dof: usize) -> Point {
        self.dof_points[dof]
    }

    pub fn same_mesh(&self, other: &DofSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// The `Wh` block (contiguous dof range) owned by each macro triangle.
    pub fn macro_block(&self, macro_triangle: usize) -> core::ops::Range<usize> {
        debug_assert_eq!(self.kind, SpaceKind::Wh);
        VECTOR_PER_MACRO * macro_triangle..VECTOR_PER_MACRO * (macro_triangle + 1)
    }

    /// Local shape functions (and gradients or divergences) at `point`.
    pub fn eval_basis(&self, sub: usize, point: Point) -> Result<BasisValues> {
        let map = self.mesh.sub_map(sub);
        let bary = map.barycentric(point);
        if let Some(&worst) = bary.iter().find(|&&l| l < -1e-10) {
            return Err(Error::PointOutside { sub, bary: worst });
        }
        Ok(match self.kind {
            SpaceKind::Uh | SpaceKind::UhTilde => {
                BasisValues::Scalar { values: bary.to_vec(), gradients: map.grad_bary.to_vec() }
            }
            SpaceKind::Wh => {
                let shapes = self.vector_shapes(sub);
                BasisValues::Vector {
                    values: shapes.iter().map(|s| s.direction * bary[s.node]).collect(),
                    divergences: shapes.iter().map(|s| map.grad_bary[s.node].dot(s.direction)).collect(),
                }
            }
        })
    }

    /// Value of a scalar finite element function at barycentric `bary` in `sub`.
    pub fn scalar_value(&self, coeffs: &[f64], sub: usize, bary: [f64; 3]) -> f64 {
        self.local_dofs(sub).iter().enumerate().map(|(i, d)| d.weight * coeffs[d.dof] * bary[i]).sum()
    }

    pub fn scalar_gradient(&self, coeffs: &[f64], sub: usize) -> Point {
        let map = self.mesh.sub_map(sub);
        self.local_dofs(sub)
            .iter()
            .enumerate()
            .fold(Point::default(), |g, (i, d)| g + map.grad_bary[i] * (d.weight * coeffs[d.dof]))
    }

    pub fn vector_value(&self, coeffs: &[f64], sub: usize, bary: [f64; 3]) -> Point {
        self.local_dofs(sub)
            .iter()
            .zip(self.vector_shapes(sub))
            .fold(Point::default(), |v, (d, s)| v + s.direction * (d.weight * coeffs[d.dof] * bary[s.node]))
    }

    pub fn divergence(&self, coeffs: &[f64], sub: usize) -> f64 {
        let map = self.mesh.sub_map(sub);
        self.local_dofs(sub)
            .iter()
            .zip(self.vector_shapes(sub))
            .map(|(d, s)| d.weight * coeffs[d.dof] * map.grad_bary[s.node].dot(s.direction))
            .sum()
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate_scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        assert!(self.kind.is_scalar());
        self.dof_points.iter().map(|&p| f(p)).collect()
    }

    /// Nodal interpolant of a continuous vector field.
    pub fn interpolate_vector(&self, f: impl Fn(Point) -> Point) -> Vec<f64> {
        assert_eq!(self.kind, SpaceKind::Wh);
        let mut c = vec![0.0; self.n_dofs];
        for s in 0..self.mesh.n_sub() {
            let verts = self.mesh.sub_points(s);
            for (d, shape) in self.local_dofs(s).iter().zip(self.vector_shapes(s)) {
                c[d.dof] = f(verts[shape.node]).dot(shape.functional) / d.weight;
            }
        }
        c
    }
}

/// Matrix of the canonical embedding of `UhTilde` into `Uh`, shape
/// `dim(UhTilde) x dim(Uh)`. Its transpose maps `UhTilde` coefficients to
/// their `Uh` representation.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub p: SparseMatrix,
}

impl EmbeddingMatrix {
    pub fn build(uh: &DofSpace, tilde: &DofSpace) -> Result<Self> {
        if uh.kind != SpaceKind::Uh || tilde.kind != SpaceKind::UhTilde {
            return Err(Error::SpaceMismatch("embedding needs (Uh, UhTilde)"));
        }
        if !uh.same_mesh(tilde) {
            return Err(Error::SpaceMismatch("spaces live on different meshes"));
        }
        if uh.degree != tilde.degree {
            return Err(Error::SpaceMismatch("spaces have different degrees"));
        }
        let mut target = vec![usize::MAX; uh.n_dofs];
        for s in 0..uh.mesh.n_sub() {
            for (a, b) in uh.local_dofs(s).iter().zip(tilde.local_dofs(s)) {
                target[a.dof] = b.dof;
            }
        }
        let mut p = TripletBuilder::with_capacity(tilde.n_dofs, uh.n_dofs, uh.n_dofs);
        for (j, &i) in target.iter().enumerate() {
            debug_assert_ne!(i, usize::MAX);
            p.push(i, j, 1.0);
        }
        Ok(Self { p: p.build() })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.p.shape()
    }

    /// `P^T x`: the `Uh` coefficients of a `UhTilde` function.
    pub fn expand(&self, tilde_coeffs: &[f64]) -> Vec<f64> {
        self.p.matvec_transpose(tilde_coeffs)
    }

    /// `P y`: restriction of a `Uh` functional (load vector) to `UhTilde`.
    pub fn restrict(&self, uh_vector: &[f64]) -> Vec<f64> {
        self.p.matvec(uh_vector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Arc<StaggeredMesh> {
        Arc::new(StaggeredMesh::build_structured(n).unwrap())
    }

    #[test]
    fn table_one_small_rows() {
        let m = mesh(2);
        assert_eq!(DofSpace::build(m.clone(), SpaceKind::Uh, 1).unwrap().n_dofs(), 56);
        let m4 = mesh(4);
        assert_eq!(DofSpace::build(m4, SpaceKind::UhTilde, 1).unwrap().n_dofs(), 121);
        assert_eq!(DofSpace::build(mesh(8), SpaceKind::Uh, 1).unwrap().n_dofs(), 800);
        assert_eq!(DofSpace::build(m, SpaceKind::Wh, 1).unwrap().n_dofs(), 96);
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert_eq!(DofSpace::build(mesh(1), SpaceKind::Uh, 2).unwrap_err(), Error::UnsupportedDegree(2));
        assert_eq!(DofSpace::build(mesh(1), SpaceKind::Wh, 0).unwrap_err(), Error::UnsupportedDegree(0));
    }

    #[test]
    fn nodal_basis_properties() {
        let m = mesh(2);
        let uh = DofSpace::build(m.clone(), SpaceKind::Uh, 1).unwrap();
        let pts = m.sub_points(5);
        for (i, &p) in pts.iter().enumerate() {
            let BasisValues::Scalar { values, .. } = uh.eval_basis(5, p).unwrap() else { panic!() };
            for (j, v) in values.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-14);
            }
        }
        let inner = m.sub_map(5).point([0.2, 0.3, 0.5]);
        let BasisValues::Scalar { values, gradients } = uh.eval_basis(5, inner).unwrap() else { panic!() };
        assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let g = gradients.iter().fold(Point::default(), |a, &b| a + b);
        assert!(g.norm() < 1e-12);
        let outside = m.sub_map(5).point([1.5, -0.25, -0.25]);
        assert!(matches!(uh.eval_basis(5, outside), Err(Error::PointOutside { .. })));
    }

    #[test]
    fn embedding_shape_and_constants() {
        let m = mesh(2);
        let uh = DofSpace::build(m.clone(), SpaceKind::Uh, 1).unwrap();
        let ut = DofSpace::build(m.clone(), SpaceKind::UhTilde, 1).unwrap();
        let p = EmbeddingMatrix::build(&uh, &ut).unwrap();
        assert_eq!(p.shape(), (33, 56));
        let ones = p.expand(&vec![1.0; 33]);
        assert!(ones.iter().all(|&v| v == 1.0));
        let other = DofSpace::build(mesh(2), SpaceKind::UhTilde, 1).unwrap();
        assert!(EmbeddingMatrix::build(&uh, &other).is_err());
        assert!(EmbeddingMatrix::build(&ut, &uh).is_err());
    }

    #[test]
    fn vector_interpolation_reproduces_linear_fields() {
        let m = mesh(3);
        let wh = DofSpace::build(m.clone(), SpaceKind::Wh, 1).unwrap();
        let field = |p: Point| Point::new(1.0 + 2.0 * p.x - p.y, 0.5 * p.x + 3.0 * p.y);
        let c = wh.interpolate_vector(field);
        for s in 0..m.n_sub() {
            let map = m.sub_map(s);
            let bary = [0.1, 0.6, 0.3];
            let v = wh.vector_value(&c, s, bary);
            assert!((v - field(map.point(bary))).norm() < 1e-13);
            assert!((wh.divergence(&c, s) - 5.0).abs() < 1e-12);
        }
    }
}
