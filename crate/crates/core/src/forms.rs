//! Assembly of the discrete bilinear forms.
//!
//! With `v` in a scalar space and `Psi` in `Wh`:
//!
//! ```text
//!   B(Psi, v)  =  (Psi, grad_h v)  - sum_{dual e}      <Psi . n, [v]>_e
//!   B*(v, Psi) = -(v, div_h Psi)   + sum_{primal int e} <v, [Psi . n]>_e
//!   R(Psi, v)  =  (b . Psi, v)
//!   M          =  Gram matrix of Wh
//! ```
//!
//! Matrices are stored with rows indexed by the scalar space and columns by
//! `Wh` (`B`, `R`), so that the matrix of `B*` is `B^T`. Contributions are
//! accumulated sub-triangle by sub-triangle and then edge by edge, in index
//! order, so assembly is reproducible.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::EdgeKind;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::spaces::{DofSpace, SpaceKind};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Lowest quadrature degree accepted for terms with non-polynomial data.
pub const MIN_DATA_DEGREE: usize = 3;
pub const DEFAULT_DATA_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Exactness of the volume rule for products of basis functions.
    pub poly_degree: usize,
    /// Exactness of the volume rule for terms involving `b` or `f`.
    pub data_degree: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { poly_degree: 3, data_degree: DEFAULT_DATA_DEGREE }
    }
}

impl AssemblyOptions {
    pub fn with_data_degree(degree: usize) -> Result<Self> {
        if degree < MIN_DATA_DEGREE {
            return Err(Error::QuadratureTooLow { requested: degree, minimum: MIN_DATA_DEGREE });
        }
        Ok(Self { data_degree: degree, ..Self::default() })
    }

    fn check(&self) -> Result<()> {
        if self.data_degree < MIN_DATA_DEGREE {
            return Err(Error::QuadratureTooLow { requested: self.data_degree, minimum: MIN_DATA_DEGREE });
        }
        Ok(())
    }
}

type VectorFn = dyn Fn(Point) -> Point + Send + Sync;

/// A convection field `b`. Fields declared divergence free are spot-checked
/// with central differences at 100 quasi-random points of the unit square.
#[derive(Clone)]
pub struct ConvectionField {
    field: Arc<VectorFn>,
    divergence_free: bool,
    sup_norm_hint: Option<f64>,
}

impl core::fmt::Debug for ConvectionField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ConvectionField")
            .field("divergence_free", &self.divergence_free)
            .field("sup_norm_hint", &self.sup_norm_hint)
            .finish_non_exhaustive()
    }
}

/// Halton point `i` (bases 2 and 3) in the unit square.
pub fn halton(i: usize) -> Point {
    fn radical_inverse(mut i: usize, base: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    Point::new(radical_inverse(i + 1, 2), radical_inverse(i + 1, 3))
}

impl ConvectionField {
    pub fn new(
        field: impl Fn(Point) -> Point + Send + Sync + 'static,
        divergence_free: bool,
        sup_norm_hint: Option<f64>,
    ) -> Result<Self> {
        let b = Self { field: Arc::new(field), divergence_free, sup_norm_hint };
        if divergence_free {
            let sup = sup_norm_hint.unwrap_or_else(|| b.sampled_sup_norm());
            let div = b.max_divergence(100);
            if !(div < 1e-6 * (1.0 + sup)) {
                return Err(Error::NotDivergenceFree(div));
            }
        }
        Ok(b)
    }

    pub fn zero() -> Self {
        Self { field: Arc::new(|_| Point::default()), divergence_free: true, sup_norm_hint: Some(0.0) }
    }

    pub fn constant(b: Point) -> Self {
        Self { field: Arc::new(move |_| b), divergence_free: true, sup_norm_hint: Some(b.norm()) }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> Point {
        (self.field)(p)
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn sup_norm_hint(&self) -> Option<f64> {
        self.sup_norm_hint
    }

    fn sampled_sup_norm(&self) -> f64 {
        (0..100).map(|i| self.eval(halton(i)).norm()).fold(0.0, f64::max)
    }

    /// Largest `|div b|` over `samples` Halton points, by central differences.
    pub fn max_divergence(&self, samples: usize) -> f64 {
        let h = 1e-5;
        (0..samples)
            .map(|i| {
                let p = halton(i);
                let dx = (self.eval(p + Point::new(h, 0.0)).x - self.eval(p - Point::new(h, 0.0)).x) / (2.0 * h);
                let dy = (self.eval(p + Point::new(0.0, h)).y - self.eval(p - Point::new(0.0, h)).y) / (2.0 * h);
                (dx + dy).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn require_wh(wh: &DofSpace) -> Result<()> {
    if wh.kind() != SpaceKind::Wh {
        return Err(Error::SpaceMismatch("expected the flux space Wh"));
    }
    Ok(())
}

fn require_pair(wh: &DofSpace, scalar: &DofSpace) -> Result<()> {
    require_wh(wh)?;
    if !scalar.kind().is_scalar() {
        return Err(Error::SpaceMismatch("expected a scalar space"));
    }
    if !wh.same_mesh(scalar) {
        return Err(Error::SpaceMismatch("spaces live on different meshes"));
    }
    Ok(())
}

/// Mass matrix of `Wh`.
pub fn assemble_mass(wh: &DofSpace, opts: &AssemblyOptions) -> Result<SparseMatrix> {
    require_wh(wh)?;
    let mesh = wh.mesh();
    let rule = triangle_rule(opts.poly_degree.max(2));
    let mut m = TripletBuilder::with_capacity(wh.n_dofs(), wh.n_dofs(), 36 * mesh.n_sub());
    for s in 0..mesh.n_sub() {
        let area = mesh.sub_map(s).area;
        let dofs = wh.local_dofs(s);
        let shapes = wh.vector_shapes(s);
        for (da, sa) in dofs.iter().zip(shapes) {
            for (db, sb) in dofs.iter().zip(shapes) {
                let lam: f64 = rule.iter().map(|(q, w)| w * q[sa.node] * q[sb.node]).sum();
                m.push(da.dof, db.dof, area * lam * da.weight * db.weight * sa.direction.dot(sb.direction));
            }
        }
    }
    Ok(m.build())
}

/// Matrix of `B(Psi_j, v_i)`: rows from `scalar`, columns from `wh`.
pub fn assemble_b(wh: &DofSpace, scalar: &DofSpace, opts: &AssemblyOptions) -> Result<SparseMatrix> {
    require_pair(wh, scalar)?;
    let mesh = wh.mesh();
    let rule = triangle_rule(opts.poly_degree.max(1));
    let erule = edge_rule(2 * wh.degree());
    let mut b = TripletBuilder::with_capacity(scalar.n_dofs(), wh.n_dofs(), 36 * mesh.n_sub());

    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        let wdofs = wh.local_dofs(s);
        let shapes = wh.vector_shapes(s);
        for (i, vi) in scalar.local_dofs(s).iter().enumerate() {
            let grad = map.grad_bary[i];
            for (pj, sj) in wdofs.iter().zip(shapes) {
                let lam: f64 = rule.iter().map(|(q, w)| w * q[sj.node]).sum();
                b.push(vi.dof, pj.dof, map.area * lam * grad.dot(sj.direction) * vi.weight * pj.weight);
            }
        }
    }

    for (e, edge) in mesh.edges_of_kind(EdgeKind::Dual) {
        let minus = edge.minus.expect("dual edges are interior");
        let [sp, sm] = edge.side_signs();
        let n = edge.normal;
        for (t, w) in erule.iter() {
            let wl = w * edge.length;
            let lp = mesh.edge_bary(edge.plus, e, t);
            let lm = mesh.edge_bary(minus, e, t);
            // Psi . n is single valued on dual edges; take it from the plus side
            for (pj, sj) in wh.local_dofs(edge.plus).iter().zip(wh.vector_shapes(edge.plus)) {
                let psi_n = lp[sj.node] * sj.direction.dot(n) * pj.weight;
                if psi_n == 0.0 {
                    continue;
                }
                for (i, vi) in scalar.local_dofs(edge.plus).iter().enumerate() {
                    b.push(vi.dof, pj.dof, -wl * psi_n * sp * lp[i] * vi.weight);
                }
                for (i, vi) in scalar.local_dofs(minus).iter().enumerate() {
                    b.push(vi.dof, pj.dof, -wl * psi_n * sm * lm[i] * vi.weight);
                }
            }
        }
    }
    Ok(b.build())
}

/// Matrix of `B*(v_i, Psi_j)` assembled from its own definition, stored with
/// rows from `wh` and columns from `scalar` (so it is comparable to `B^T`).
///
/// The edge sum runs over interior primal edges only, so `B* = B^T` holds on
/// the rows of functions vanishing on the boundary.
pub fn assemble_b_adjoint(wh: &DofSpace, scalar: &DofSpace, opts: &AssemblyOptions) -> Result<SparseMatrix> {
    require_pair(wh, scalar)?;
    let mesh = wh.mesh();
    let rule = triangle_rule(opts.poly_degree.max(1));
    let erule = edge_rule(2 * wh.degree());
    let mut bt = TripletBuilder::with_capacity(wh.n_dofs(), scalar.n_dofs(), 36 * mesh.n_sub());

    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        for (pj, sj) in wh.local_dofs(s).iter().zip(wh.vector_shapes(s)) {
            let div = map.grad_bary[sj.node].dot(sj.direction);
            for (i, vi) in scalar.local_dofs(s).iter().enumerate() {
                let lam: f64 = rule.iter().map(|(q, w)| w * q[i]).sum();
                bt.push(pj.dof, vi.dof, -map.area * lam * div * vi.weight * pj.weight);
            }
        }
    }

    for (e, edge) in mesh.edges_of_kind(EdgeKind::PrimalInterior) {
        let minus = edge.minus.expect("interior edge");
        let signs = edge.side_signs();
        let n = edge.normal;
        for (t, w) in erule.iter() {
            let wl = w * edge.length;
            let lp = mesh.edge_bary(edge.plus, e, t);
            // v is continuous across primal edges: its trace from the plus side
            for (side, sub) in [edge.plus, minus].into_iter().enumerate() {
                let l = mesh.edge_bary(sub, e, t);
                for (pj, sj) in wh.local_dofs(sub).iter().zip(wh.vector_shapes(sub)) {
                    let psi_n = signs[side] * l[sj.node] * sj.direction.dot(n) * pj.weight;
                    if psi_n == 0.0 {
                        continue;
                    }
                    for (i, vi) in scalar.local_dofs(edge.plus).iter().enumerate() {
                        bt.push(pj.dof, vi.dof, wl * lp[i] * psi_n * vi.weight);
                    }
                }
            }
        }
    }
    Ok(bt.build())
}

/// Matrix of `R(Psi_j, v_i) = (b . Psi_j, v_i)`: rows from `scalar`, columns
/// from `wh`. The matrix of `R*` is its transpose.
pub fn assemble_r(
    wh: &DofSpace,
    scalar: &DofSpace,
    b: &ConvectionField,
    opts: &AssemblyOptions,
) -> Result<SparseMatrix> {
    require_pair(wh, scalar)?;
    opts.check()?;
    let mesh = wh.mesh();
    let rule = triangle_rule(opts.data_degree);
    let mut r = TripletBuilder::with_capacity(scalar.n_dofs(), wh.n_dofs(), 18 * mesh.n_sub());
    let mut bq: Vec<Point> = vec![Point::default(); rule.len()];
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        for (k, (q, _)) in rule.iter().enumerate() {
            bq[k] = b.eval(map.point(q));
        }
        for (i, vi) in scalar.local_dofs(s).iter().enumerate() {
            for (pj, sj) in wh.local_dofs(s).iter().zip(wh.vector_shapes(s)) {
                let val: f64 =
                    rule.iter().zip(&bq).map(|((q, w), bk)| w * bk.dot(sj.direction) * q[sj.node] * q[i]).sum();
                r.push(vi.dof, pj.dof, map.area * val * vi.weight * pj.weight);
            }
        }
    }
    Ok(r.build())
}

/// `(f, v_i)` for every basis function of a scalar space.
pub fn assemble_load(space: &DofSpace, f: impl Fn(Point) -> f64, opts: &AssemblyOptions) -> Result<Vec<f64>> {
    if !space.kind().is_scalar() {
        return Err(Error::SpaceMismatch("load vectors live on scalar spaces"));
    }
    opts.check()?;
    let mesh = space.mesh();
    let rule = triangle_rule(opts.data_degree);
    let mut load = vec![0.0; space.n_dofs()];
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        let fq: Vec<f64> = rule.iter().map(|(q, _)| f(map.point(q))).collect();
        for (i, vi) in space.local_dofs(s).iter().enumerate() {
            let val: f64 = rule.iter().zip(&fq).map(|((q, w), fk)| w * fk * q[i]).sum();
            load[vi.dof] += map.area * val * vi.weight;
        }
    }
    Ok(load)
}
