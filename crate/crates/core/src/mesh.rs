//! Two-level staggered triangulations.
//!
//! Every triangle of the initial (macro) triangulation is split into three
//! sub-triangles by joining its centroid to its vertices. Edges of the refined
//! mesh fall into three classes: primal interior edges and primal boundary
//! edges (edges of the macro triangles), and dual edges (the three new edges
//! inside each macro triangle).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{self, Point, TriangleMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    PrimalInterior,
    PrimalBoundary,
    Dual,
}

impl EdgeKind {
    pub fn is_primal(self) -> bool {
        !matches!(self, EdgeKind::Dual)
    }

    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::PrimalInterior => "primal-interior",
            EdgeKind::PrimalBoundary => "primal-boundary",
            EdgeKind::Dual => "dual",
        }
    }
}

/// An edge of the refined triangulation.
///
/// `plus` is the lower-indexed adjacent sub-triangle. `normal` is the fixed
/// unit normal used in jumps: outward from the domain on the boundary, and
/// pointing from `plus` into `minus` for interior edges unless the mesh was
/// built with reversed normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub endpoints: [usize; 2],
    pub kind: EdgeKind,
    pub normal: Point,
    pub plus: usize,
    pub minus: Option<usize>,
    pub length: f64,
    /// Outward unit normals of `plus` and `minus` on this edge (the second
    /// entry is zero on boundary edges).
    pub outward: [Point; 2],
}

impl Edge {
    pub fn adjacent_subs(&self) -> impl Iterator<Item = usize> + '_ {
        core::iter::once(self.plus).chain(self.minus)
    }

    pub fn is_interior(&self) -> bool {
        self.minus.is_some()
    }

    /// Exact signs of `n . n_plus` and `n . n_minus`.
    pub fn side_signs(&self) -> [f64; 2] {
        let sign = |p: Point| if self.normal.dot(p) >= 0.0 { 1.0 } else { -1.0 };
        match self.minus {
            Some(_) => [sign(self.outward[0]), sign(self.outward[1])],
            None => [sign(self.outward[0]), 0.0],
        }
    }

    /// `(n . n_plus) phi_plus + (n . n_minus) phi_minus`. For vector
    /// quantities pass the normal components `Phi . n` of each side.
    pub fn jump(&self, edge_index: usize, plus: f64, minus: f64) -> Result<f64> {
        if self.minus.is_none() {
            return Err(Error::BoundaryEdge(edge_index));
        }
        let [sp, sm] = self.side_signs();
        Ok(sp * plus + sm * minus)
    }

    /// Point at parameter `t` in `[0, 1]` along `endpoints[0] -> endpoints[1]`.
    pub fn point(&self, vertices: &[Point], t: f64) -> Point {
        let a = vertices[self.endpoints[0]];
        let b = vertices[self.endpoints[1]];
        a + (b - a) * t
    }
}

/// A macro region: `S(nu)` is the macro triangle around interior point `nu`,
/// `R(e)` the union of sub-triangles sharing primal edge `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacroRegion {
    S { macro_triangle: usize, member_subs: [usize; 3] },
    R { edge: usize, member_subs: Vec<usize> },
}

impl MacroRegion {
    pub fn member_subs(&self) -> &[usize] {
        match self {
            MacroRegion::S { member_subs, .. } => member_subs,
            MacroRegion::R { member_subs, .. } => member_subs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StaggeredMesh {
    /// Initial-mesh vertices first, then one interior point per macro triangle.
    pub vertices: Vec<Point>,
    pub n_primal_vertices: usize,
    pub macro_triangles: Vec<[usize; 3]>,
    /// Vertex index of the interior point of each macro triangle.
    pub interior_points: Vec<usize>,
    /// `(A_i, A_{i+1}, nu)` for `i = 0, 1, 2`, stored at `3 * macro + i`.
    pub sub_triangles: Vec<[usize; 3]>,
    pub macro_of_sub: Vec<usize>,
    pub edges: Vec<Edge>,
    /// Edge opposite each local vertex of every sub-triangle.
    pub sub_edges: Vec<[usize; 3]>,
    /// Ordinal of each primal edge among primal edges (`None` for dual edges).
    pub primal_ordinal: Vec<Option<usize>>,
    pub primal_edges: Vec<usize>,
    pub boundary_vertex: Vec<bool>,
    pub resolution: Option<usize>,
}

/// Which diagonal cuts each square of the structured family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Lower-left to upper-right.
    Main,
    /// Lower-right to upper-left.
    #[default]
    Anti,
}

impl StaggeredMesh {
    /// The structured family on the unit square: `n x n` squares, each cut by
    /// its lower-right to upper-left diagonal, each triangle split at its
    /// centroid.
    pub fn build_structured(n: usize) -> Result<Self> {
        Self::build_structured_with(n, Diagonal::default())
    }

    pub fn build_structured_with(n: usize, diagonal: Diagonal) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroResolution);
        }
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                match diagonal {
                    Diagonal::Main => {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    }
                    Diagonal::Anti => {
                        triangles.push([v00, v10, v01]);
                        triangles.push([v10, v11, v01]);
                    }
                }
            }
        }
        let mut mesh = Self::from_initial(vertices, triangles)?;
        mesh.resolution = Some(n);
        Ok(mesh)
    }

    /// Build the staggered mesh from an initial conforming triangulation.
    /// Clockwise triangles are reoriented.
    pub fn from_initial(mut vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n_primal_vertices = vertices.len();
        let mut interior_points = Vec::with_capacity(triangles.len());
        for tri in triangles.iter_mut() {
            let pts = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let nu = geometry::centroid(&pts)?;
            if geometry::signed_area(&pts) < 0.0 {
                tri.swap(1, 2);
            }
            interior_points.push(vertices.len());
            vertices.push(nu);
        }

        let mut sub_triangles = Vec::with_capacity(3 * triangles.len());
        let mut macro_of_sub = Vec::with_capacity(3 * triangles.len());
        for (k, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                sub_triangles.push([tri[i], tri[(i + 1) % 3], interior_points[k]]);
                macro_of_sub.push(k);
            }
        }

        let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut sub_edges = vec![[0usize; 3]; sub_triangles.len()];
        for (s, sub) in sub_triangles.iter().enumerate() {
            let map = TriangleMap::new([vertices[sub[0]], vertices[sub[1]], vertices[sub[2]]]);
            for local in 0..3 {
                let a = sub[(local + 1) % 3];
                let b = sub[(local + 2) % 3];
                let key = (a.min(b), a.max(b));
                let outward = map.outward_normal(local);
                let e = *lookup.entry(key).or_insert_with(|| {
                    let length = (vertices[b] - vertices[a]).norm();
                    edges.push(Edge {
                        endpoints: [key.0, key.1],
                        kind: EdgeKind::PrimalBoundary,
                        normal: outward,
                        plus: s,
                        minus: None,
                        length,
                        outward: [outward, Point::default()],
                    });
                    edges.len() - 1
                });
                if edges[e].plus != s {
                    edges[e].minus = Some(s);
                    edges[e].outward[1] = outward;
                }
                sub_edges[s][local] = e;
            }
        }

        let mut primal_ordinal = vec![None; edges.len()];
        let mut primal_edges = Vec::new();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, edge) in edges.iter_mut().enumerate() {
            let dual = edge.endpoints.iter().any(|&v| v >= n_primal_vertices);
            edge.kind = match (dual, edge.minus.is_some()) {
                (true, _) => EdgeKind::Dual,
                (false, true) => EdgeKind::PrimalInterior,
                (false, false) => EdgeKind::PrimalBoundary,
            };
            if edge.kind.is_primal() {
                primal_ordinal[e] = Some(primal_edges.len());
                primal_edges.push(e);
            }
            if edge.kind == EdgeKind::PrimalBoundary {
                for &v in &edge.endpoints {
                    boundary_vertex[v] = true;
                }
            }
        }

        Ok(Self {
            vertices,
            n_primal_vertices,
            macro_triangles: triangles,
            interior_points,
            sub_triangles,
            macro_of_sub,
            edges,
            sub_edges,
            primal_ordinal,
            primal_edges,
            boundary_vertex,
            resolution: None,
        })
    }

    /// Same mesh with the fixed normal of every interior edge reversed. All
    /// assembled forms are invariant under this change.
    pub fn with_reversed_normals(&self) -> Self {
        let mut mesh = self.clone();
        for edge in mesh.edges.iter_mut().filter(|e| e.is_interior()) {
            edge.normal = edge.normal * -1.0;
        }
        mesh
    }

    pub fn n_macro(&self) -> usize {
        self.macro_triangles.len()
    }

    pub fn n_sub(&self) -> usize {
        self.sub_triangles.len()
    }

    pub fn sub_map(&self, s: usize) -> TriangleMap {
        let t = self.sub_triangles[s];
        TriangleMap::new([self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]])
    }

    pub fn sub_points(&self, s: usize) -> [Point; 3] {
        let t = self.sub_triangles[s];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn macro_points(&self, k: usize) -> [Point; 3] {
        let t = self.macro_triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.kind == kind)
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges_of_kind(kind).count()
    }

    pub fn region_s(&self, macro_triangle: usize) -> MacroRegion {
        let b = 3 * macro_triangle;
        MacroRegion::S { macro_triangle, member_subs: [b, b + 1, b + 2] }
    }

    pub fn region_r(&self, edge: usize) -> Option<MacroRegion> {
        let e = &self.edges[edge];
        e.kind.is_primal().then(|| MacroRegion::R { edge, member_subs: e.adjacent_subs().collect() })
    }

    /// Barycentric coordinates, in sub-triangle `s`, of the point at parameter
    /// `t` along edge `e` (which must be an edge of `s`).
    pub fn edge_bary(&self, s: usize, e: usize, t: f64) -> [f64; 3] {
        let sub = self.sub_triangles[s];
        let [a, b] = self.edges[e].endpoints;
        let mut l = [0.0; 3];
        for (i, &v) in sub.iter().enumerate() {
            if v == a {
                l[i] = 1.0 - t;
            } else if v == b {
                l[i] = t;
            }
        }
        l
    }

    /// Sub-triangle containing `p`, preferring the lowest index on shared
    /// boundaries.
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.n_sub()).find(|&s| {
            let l = self.sub_map(s).barycentric(p);
            l.iter().all(|&x| x >= -1e-12)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        let m = StaggeredMesh::build_structured(4).unwrap();
        assert_eq!(m.n_macro(), 32);
        assert_eq!(m.n_sub(), 96);
        assert_eq!(m.count(EdgeKind::Dual), 96);
        let m = StaggeredMesh::build_structured(2).unwrap();
        let primal = m.count(EdgeKind::PrimalInterior) + m.count(EdgeKind::PrimalBoundary);
        assert_eq!(primal, 16);
        assert_eq!(m.count(EdgeKind::PrimalBoundary), 8);
    }

    #[test]
    fn rejects_zero_resolution() {
        assert_eq!(StaggeredMesh::build_structured(0).unwrap_err(), Error::ZeroResolution);
    }

    #[test]
    fn jump_definition() {
        let m = StaggeredMesh::build_structured(2).unwrap();
        let (e, edge) = m.edges.iter().enumerate().find(|(_, e)| e.is_interior()).unwrap();
        // default orientation: n = n_plus = -n_minus
        assert_eq!(edge.jump(e, 2.5, 2.5).unwrap(), 0.0);
        assert_eq!(edge.jump(e, 1.0, 0.0).unwrap(), 1.0);
        let flipped = m.with_reversed_normals();
        assert_eq!(flipped.edges[e].jump(e, 1.0, 3.0).unwrap(), 2.0);
        let (b, bedge) = m.edges.iter().enumerate().find(|(_, e)| !e.is_interior()).unwrap();
        assert_eq!(bedge.jump(b, 1.0, 0.0), Err(Error::BoundaryEdge(b)));
    }

    #[test]
    fn regions() {
        let m = StaggeredMesh::build_structured(3).unwrap();
        for k in 0..m.n_macro() {
            assert_eq!(m.region_s(k).member_subs().len(), 3);
        }
        for (e, edge) in m.edges.iter().enumerate() {
            match edge.kind {
                EdgeKind::Dual => assert!(m.region_r(e).is_none()),
                EdgeKind::PrimalInterior => {
                    let r = m.region_r(e).unwrap();
                    let subs = r.member_subs();
                    assert_eq!(subs.len(), 2);
                    assert_ne!(m.macro_of_sub[subs[0]], m.macro_of_sub[subs[1]]);
                }
                EdgeKind::PrimalBoundary => assert_eq!(m.region_r(e).unwrap().member_subs().len(), 1),
            }
        }
    }
}
