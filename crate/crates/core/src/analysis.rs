//! Errors, discrete norms, observed orders, and the manufactured problems
//! used by the experiments.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Write;

use libm::{cos, exp, sin};

use crate::error::{Error, Result};
use crate::forms::{halton, ConvectionField};
use crate::geometry::Point;
use crate::mesh::EdgeKind;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::spaces::{DofSpace, SpaceKind};

/// Exactness degree of the rule used for error integrals.
pub const ERROR_QUAD_DEGREE: usize = 8;

type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;
type VectorFn = dyn Fn(Point) -> Point + Send + Sync;

/// An exact solution together with its data. `f = -mu lap(u) + b . grad(u)`
/// (the fields used here are divergence free).
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub experiment: u32,
    pub mu: f64,
    pub b: ConvectionField,
    u: Arc<ScalarFn>,
    grad: Arc<VectorFn>,
    lap: Arc<ScalarFn>,
    homogeneous: bool,
}

impl core::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("experiment", &self.experiment)
            .field("mu", &self.mu)
            .field("homogeneous", &self.homogeneous)
            .finish_non_exhaustive()
    }
}

impl ManufacturedProblem {
    pub fn u(&self, p: Point) -> f64 {
        (self.u)(p)
    }

    pub fn grad_u(&self, p: Point) -> Point {
        (self.grad)(p)
    }

    pub fn laplacian_u(&self, p: Point) -> f64 {
        (self.lap)(p)
    }

    pub fn f(&self, p: Point) -> f64 {
        -self.mu * self.laplacian_u(p) + self.b.eval(p).dot(self.grad_u(p))
    }

    /// Dirichlet data.
    pub fn g(&self, p: Point) -> f64 {
        if self.homogeneous {
            0.0
        } else {
            self.u(p)
        }
    }

    pub fn has_homogeneous_data(&self) -> bool {
        self.homogeneous
    }

    /// Same problem with a different diffusivity.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidDiffusivity(mu));
        }
        Ok(Self { mu, ..self.clone() })
    }

    /// Largest relative mismatch between `f` and a fourth-order central
    /// difference evaluation of `-mu lap(u) + b . grad(u)` at `samples`
    /// quasi-random interior points.
    pub fn source_mismatch(&self, samples: usize) -> f64 {
        let h = 1e-3;
        let u = |x: f64, y: f64| self.u(Point::new(x, y));
        let d1 = |fm2: f64, fm1: f64, fp1: f64, fp2: f64| (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
        let d2 = |fm2: f64, fm1: f64, f0: f64, fp1: f64, fp2: f64| {
            (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
        };
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let q = halton(i);
            let p = Point::new(0.01 + 0.98 * q.x, 0.01 + 0.98 * q.y);
            let (x, y) = (p.x, p.y);
            let ux = [u(x - 2.0 * h, y), u(x - h, y), u(x, y), u(x + h, y), u(x + 2.0 * h, y)];
            let uy = [u(x, y - 2.0 * h), u(x, y - h), u(x, y), u(x, y + h), u(x, y + 2.0 * h)];
            let grad = Point::new(d1(ux[0], ux[1], ux[3], ux[4]), d1(uy[0], uy[1], uy[3], uy[4]));
            let lap = d2(ux[0], ux[1], ux[2], ux[3], ux[4]) + d2(uy[0], uy[1], uy[2], uy[3], uy[4]);
            let fd = -self.mu * lap + self.b.eval(p).dot(grad);
            let exact = self.f(p);
            let scale = exact.abs().max(self.mu * lap.abs()).max(1.0);
            worst = worst.max((fd - exact).abs() / scale);
        }
        worst
    }
}

/// Experiment 1: constant field `b` with boundary layers along `x = 1` and
/// `y = 1`, homogeneous boundary data.
pub fn experiment1(b1: f64, b2: f64, mu: f64) -> Result<ManufacturedProblem> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidDiffusivity(mu));
    }
    // u = X(x) Y(y) / D with X(s) = s (1 - exp(c (s - 1)))
    let d = (1.0 - exp(-b1)) * (1.0 - exp(-b2));
    let factor = move |c: f64, s: f64| {
        let e = exp(c * (s - 1.0));
        (s * (1.0 - e), 1.0 - e - c * s * e, -2.0 * c * e - c * c * s * e)
    };
    let u = move |p: Point| factor(b1, p.x).0 * factor(b2, p.y).0 / d;
    let grad = move |p: Point| {
        let (x0, x1, _) = factor(b1, p.x);
        let (y0, y1, _) = factor(b2, p.y);
        Point::new(x1 * y0 / d, x0 * y1 / d)
    };
    let lap = move |p: Point| {
        let (x0, _, x2) = factor(b1, p.x);
        let (y0, _, y2) = factor(b2, p.y);
        (x2 * y0 + x0 * y2) / d
    };
    Ok(ManufacturedProblem {
        experiment: 1,
        mu,
        b: ConvectionField::constant(Point::new(b1, b2)),
        u: Arc::new(u),
        grad: Arc::new(grad),
        lap: Arc::new(lap),
        homogeneous: true,
    })
}

/// The rotating, divergence-free field shared by experiments 2 and 3.
pub fn vortex_field() -> Result<ConvectionField> {
    let tp = 2.0 * PI;
    ConvectionField::new(
        move |p: Point| Point::new((1.0 - cos(tp * p.x)) * sin(tp * p.y), -sin(tp * p.x) * (1.0 - cos(tp * p.y))),
        true,
        Some(4.0),
    )
}

/// Manufactured problem for experiment 1, 2 or 3 (experiment 1 uses
/// `b = (20, 20)`).
pub fn make_problem(experiment: u32, mu: f64) -> Result<ManufacturedProblem> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidDiffusivity(mu));
    }
    let tp = 2.0 * PI;
    match experiment {
        1 => experiment1(20.0, 20.0, mu),
        2 => Ok(ManufacturedProblem {
            experiment,
            mu,
            b: vortex_field()?,
            u: Arc::new(move |p: Point| sin(tp * p.x) * cos(tp * p.y)),
            grad: Arc::new(move |p: Point| {
                Point::new(tp * cos(tp * p.x) * cos(tp * p.y), -tp * sin(tp * p.x) * sin(tp * p.y))
            }),
            lap: Arc::new(move |p: Point| -2.0 * tp * tp * sin(tp * p.x) * cos(tp * p.y)),
            homogeneous: false,
        }),
        3 => Ok(ManufacturedProblem {
            experiment,
            mu,
            b: vortex_field()?,
            u: Arc::new(move |p: Point| sin(tp * p.x) * sin(tp * p.y)),
            grad: Arc::new(move |p: Point| {
                Point::new(tp * cos(tp * p.x) * sin(tp * p.y), tp * sin(tp * p.x) * cos(tp * p.y))
            }),
            lap: Arc::new(move |p: Point| -2.0 * tp * tp * sin(tp * p.x) * sin(tp * p.y)),
            homogeneous: true,
        }),
        other => Err(Error::UnknownExperiment(other)),
    }
}

/// `||u_h - u||_{0}` for coefficients of a scalar space.
pub fn l2_error_potential(space: &DofSpace, coeffs: &[f64], u: impl Fn(Point) -> f64, degree: usize) -> f64 {
    assert!(space.kind().is_scalar());
    let mesh = space.mesh();
    let rule = triangle_rule(degree);
    let mut sum = 0.0;
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        let local: f64 = rule
            .iter()
            .map(|(q, w)| {
                let e = space.scalar_value(coeffs, s, q) - u(map.point(q));
                w * e * e
            })
            .sum();
        sum += map.area * local;
    }
    libm::sqrt(sum)
}

/// `||z_h - z||_{0}` for coefficients of `Wh`.
pub fn l2_error_flux(wh: &DofSpace, coeffs: &[f64], z: impl Fn(Point) -> Point, degree: usize) -> f64 {
    assert_eq!(wh.kind(), SpaceKind::Wh);
    let mesh = wh.mesh();
    let rule = triangle_rule(degree);
    let mut sum = 0.0;
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        let local: f64 = rule
            .iter()
            .map(|(q, w)| {
                let e = wh.vector_value(coeffs, s, q) - z(map.point(q));
                w * e.dot(e)
            })
            .sum();
        sum += map.area * local;
    }
    libm::sqrt(sum)
}

/// How errors against an exact solution are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMeasure {
    /// Distance to the nodal interpolant of the exact solution (of `grad u`
    /// for the flux), integrated exactly.
    #[default]
    Interpolant,
    /// `||u_h - u||` by quadrature of degree [`ERROR_QUAD_DEGREE`].
    Exact,
}

impl core::str::FromStr for ErrorMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolant" => Ok(ErrorMeasure::Interpolant),
            "exact" => Ok(ErrorMeasure::Exact),
            _ => Err(Error::SpaceMismatch("error measure must be `interpolant` or `exact`")),
        }
    }
}

/// `||I_h u - u_h||_{0}` with `I_h` the nodal interpolant of `space`.
pub fn interpolant_error_potential(space: &DofSpace, coeffs: &[f64], u: impl Fn(Point) -> f64) -> f64 {
    let diff: Vec<f64> = space.interpolate_scalar(u).iter().zip(coeffs).map(|(a, b)| a - b).collect();
    l2_error_potential(space, &diff, |_| 0.0, 2)
}

/// `||J_h z - z_h||_{0}` with `J_h` the nodal interpolant of `Wh`.
pub fn interpolant_error_flux(wh: &DofSpace, coeffs: &[f64], z: impl Fn(Point) -> Point) -> f64 {
    let diff: Vec<f64> = wh.interpolate_vector(z).iter().zip(coeffs).map(|(a, b)| a - b).collect();
    l2_norm_flux(wh, &diff)
}

/// `||z_h||_{0}` of a `Wh` function.
pub fn l2_norm_flux(wh: &DofSpace, coeffs: &[f64]) -> f64 {
    l2_error_flux(wh, coeffs, |_| Point::default(), 2)
}

/// Mesh-dependent norms: `(X, Z)` for scalar functions and `(X', Z')` for
/// flux-space functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteNorms {
    pub x: f64,
    pub z: f64,
}

pub fn discrete_norms(space: &DofSpace, coeffs: &[f64]) -> DiscreteNorms {
    if space.kind().is_scalar() {
        scalar_norms(space, coeffs)
    } else {
        vector_norms(space, coeffs)
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

fn scalar_norms(space: &DofSpace, v: &[f64]) -> DiscreteNorms {
    let mesh = space.mesh();
    let rule = triangle_rule(2);
    let erule = edge_rule(2);
    let (mut x2, mut z2) = (0.0, 0.0);
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        x2 += map.area * rule.iter().map(|(q, w)| w * sq(space.scalar_value(v, s, q))).sum::<f64>();
        let g = space.scalar_gradient(v, s);
        z2 += map.area * g.dot(g);
    }
    for (e, edge) in mesh.edges_of_kind(EdgeKind::PrimalInterior) {
        let tr: f64 =
            erule.iter().map(|(t, w)| w * sq(space.scalar_value(v, edge.plus, mesh.edge_bary(edge.plus, e, t)))).sum();
        x2 += edge.length * edge.length * tr;
    }
    for (e, edge) in mesh.edges_of_kind(EdgeKind::Dual) {
        let minus = edge.minus.expect("dual edges are interior");
        let [sp, sm] = edge.side_signs();
        let jump: f64 = erule
            .iter()
            .map(|(t, w)| {
                let j = sp * space.scalar_value(v, edge.plus, mesh.edge_bary(edge.plus, e, t))
                    + sm * space.scalar_value(v, minus, mesh.edge_bary(minus, e, t));
                w * j * j
            })
            .sum();
        // h_e^-1 ||[v]||_e^2 with ||.||_e^2 = length * mean
        z2 += jump;
    }
    DiscreteNorms { x: libm::sqrt(x2), z: libm::sqrt(z2) }
}

fn vector_norms(wh: &DofSpace, psi: &[f64]) -> DiscreteNorms {
    let mesh = wh.mesh();
    let rule = triangle_rule(2);
    let erule = edge_rule(2);
    let (mut x2, mut z2) = (0.0, 0.0);
    for s in 0..mesh.n_sub() {
        let map = mesh.sub_map(s);
        x2 += map.area
            * rule
                .iter()
                .map(|(q, w)| {
                    let v = wh.vector_value(psi, s, q);
                    w * v.dot(v)
                })
                .sum::<f64>();
        z2 += map.area * sq(wh.divergence(psi, s));
    }
    for (e, edge) in mesh.edges_of_kind(EdgeKind::Dual) {
        let tr: f64 = erule
            .iter()
            .map(|(t, w)| w * sq(wh.vector_value(psi, edge.plus, mesh.edge_bary(edge.plus, e, t)).dot(edge.normal)))
            .sum();
        x2 += edge.length * edge.length * tr;
    }
    for (e, edge) in mesh.edges_of_kind(EdgeKind::PrimalInterior) {
        let minus = edge.minus.expect("interior edge");
        let [sp, sm] = edge.side_signs();
        let jump: f64 = erule
            .iter()
            .map(|(t, w)| {
                let j = sp * wh.vector_value(psi, edge.plus, mesh.edge_bary(edge.plus, e, t)).dot(edge.normal)
                    + sm * wh.vector_value(psi, minus, mesh.edge_bary(minus, e, t)).dot(edge.normal);
                w * j * j
            })
            .sum();
        z2 += jump;
    }
    DiscreteNorms { x: libm::sqrt(x2), z: libm::sqrt(z2) }
}

/// `log2(e_coarse / e_fine)` for a mesh halving.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) || !e_coarse.is_finite() || !e_fine.is_finite() {
        return Err(Error::NonPositiveError(e_coarse, e_fine));
    }
    Ok(libm::log2(e_coarse / e_fine))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error_u: f64,
    pub order_u: Option<f64>,
    pub error_z: f64,
    pub order_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub method: String,
    pub mu: f64,
    pub theta: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Set when a level failed; later levels are not computed.
    pub failure: Option<(usize, String)>,
}

impl ConvergenceTable {
    pub fn new(method: &str, mu: f64, theta: f64) -> Self {
        Self { method: method.into(), mu, theta, rows: Vec::new(), failure: None }
    }

    /// Append a level; orders are computed against the previous row when it
    /// is exactly half as fine.
    pub fn push(&mut self, n: usize, error_u: f64, error_z: f64) {
        let prev = self.rows.last().filter(|r| 2 * r.n == n);
        let order_u = prev.and_then(|r| observed_order(r.error_u, error_u).ok());
        let order_z = prev.and_then(|r| observed_order(r.error_z, error_z).ok());
        self.rows.push(ConvergenceRow { n, error_u, order_u, error_z, order_z });
    }

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    /// CSV with full precision; missing orders are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,error_u,order_u,error_z,order_z\n");
        let opt = |o: Option<f64>| o.map(|v| format!("{v:?}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(s, "{},{:?},{},{:?},{}", r.n, r.error_u, opt(r.order_u), r.error_z, opt(r.order_z));
        }
        if let Some((n, msg)) = &self.failure {
            let _ = writeln!(s, "{n},FAILED,,{msg},");
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("{} (mu = {}, theta = {})\n\n", self.method, sci3(self.mu), self.theta);
        s.push_str("|  N | error u  | order | error z  | order |\n");
        s.push_str("|---:|---------:|------:|---------:|------:|\n");
        let opt = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| String::from("-"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {:>2} | {:>8} | {:>5} | {:>8} | {:>5} |",
                r.n,
                sci3(r.error_u),
                opt(r.order_u),
                sci3(r.error_z),
                opt(r.order_z)
            );
        }
        if let Some((n, msg)) = &self.failure {
            let _ = writeln!(s, "| {n:>2} | FAILED: {msg} | | | |");
        }
        s
    }
}

/// Three significant digits in the `1.23e-04` style.
pub fn sci3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.2e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mant}e{sign}{:02}", e.abs())
        }
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::StaggeredMesh;
    use alloc::vec;

    #[test]
    fn orders() {
        assert!((observed_order(4e-2, 1e-2).unwrap() - 2.0).abs() < 1e-14);
        assert!((observed_order(2e-1, 1e-1).unwrap() - 1.0).abs() < 1e-14);
        assert!(observed_order(0.0, 1.0).is_err());
        assert!(observed_order(1.0, -1.0).is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(sci3(3.86e-4), "3.86e-04");
        assert_eq!(sci3(1.55e5), "1.55e+05");
        assert_eq!(sci3(4.4429), "4.44e+00");
        let mut t = ConvergenceTable::new("ESDG", 1.0, 0.5);
        t.push(2, 4e-2, 1.0);
        t.push(4, 1e-2, 0.5);
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "N,error_u,order_u,error_z,order_z");
        assert_eq!(csv.lines().nth(1).unwrap(), "2,0.04,,1.0,");
        assert_eq!(csv.lines().nth(2).unwrap(), "4,0.01,2.0,0.5,1.0");
        assert!(t.to_markdown().contains(" 2.00 |"));
    }

    #[test]
    fn problems() {
        let p2 = make_problem(2, 1.0).unwrap();
        let b = p2.b.eval(Point::new(0.25, 0.25));
        assert!((b.x - 1.0).abs() < 1e-14 && (b.y + 1.0).abs() < 1e-14);
        assert!(p2.b.max_divergence(100) < 1e-6);
        assert!(matches!(make_problem(4, 1.0), Err(Error::UnknownExperiment(4))));
        for id in 1..=3 {
            for mu in [1.0, 1e-2, 1e-4] {
                let p = make_problem(id, mu).unwrap();
                assert!(p.source_mismatch(200) < 1e-6, "experiment {id} mu {mu}: {}", p.source_mismatch(200));
            }
        }
        let p1 = make_problem(1, 1.0).unwrap();
        assert!(p1.u(Point::new(1.0, 0.3)).abs() < 1e-15 && p1.u(Point::new(0.4, 1.0)).abs() < 1e-15);
        assert!((make_problem(2, 1.0).unwrap().g(Point::new(0.25, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolant_error_is_second_order() {
        let p = make_problem(2, 1.0).unwrap();
        let err = |n: usize| {
            let mesh = Arc::new(StaggeredMesh::build_structured(n).unwrap());
            let uh = DofSpace::build(mesh, SpaceKind::Uh, 1).unwrap();
            let c = uh.interpolate_scalar(|x| p.u(x));
            l2_error_potential(&uh, &c, |x| p.u(x), ERROR_QUAD_DEGREE)
        };
        let (e8, e16, e32) = (err(8), err(16), err(32));
        let mesh = Arc::new(StaggeredMesh::build_structured(4).unwrap());
        let uh = DofSpace::build(mesh, SpaceKind::Uh, 1).unwrap();
        assert_eq!(interpolant_error_potential(&uh, &uh.interpolate_scalar(|x| p.u(x)), |x| p.u(x)), 0.0);
        assert!((observed_order(e8, e16).unwrap() - 2.0).abs() < 0.1);
        assert!((observed_order(e16, e32).unwrap() - 2.0).abs() < 0.05);
    }

    #[test]
    fn norms_of_simple_functions() {
        let mesh = Arc::new(StaggeredMesh::build_structured(3).unwrap());
        let uh = DofSpace::build(mesh.clone(), SpaceKind::Uh, 1).unwrap();
        let wh = DofSpace::build(mesh.clone(), SpaceKind::Wh, 1).unwrap();
        let zero = discrete_norms(&uh, &vec![0.0; uh.n_dofs()]);
        assert_eq!((zero.x, zero.z), (0.0, 0.0));

        // a continuous linear function has no jumps: Z = |grad v|
        let lin = uh.interpolate_scalar(|p| 2.0 * p.x - p.y);
        let n = discrete_norms(&uh, &lin);
        assert!((n.z - libm::sqrt(5.0)).abs() < 1e-12);
        assert!(n.x >= l2_error_potential(&uh, &lin, |_| 0.0, 4));

        // constant flux (1, 0): X'^2 = 1 + sum over dual edges of h_e^2 n_x^2
        let psi = wh.interpolate_vector(|_| Point::new(1.0, 0.0));
        let brute: f64 =
            mesh.edges_of_kind(EdgeKind::Dual).map(|(_, e)| e.length * e.length * e.normal.x * e.normal.x).sum();
        let n = discrete_norms(&wh, &psi);
        assert!((n.x - libm::sqrt(1.0 + brute)).abs() < 1e-12);
        assert!(n.z < 1e-12);
    }
}
