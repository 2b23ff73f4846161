//! Experiment drivers: DOF comparison, convergence histories, the
//! theta-stability sweep, and field sampling.

use std::fmt::Write;

use rayon::prelude::*;
use sdg_core::analysis::{make_problem, sci3, ConvergenceTable, ErrorMeasure};
use sdg_core::forms::AssemblyOptions;
use sdg_core::system::{LinearSolver, SolveResult};
use sdg_core::{Discretization, DofSpace, Method, Point, Result, SpaceKind, StaggeredMesh};
use std::sync::Arc;

use crate::solver::SparseLu;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofRow {
    pub n: usize,
    pub dim_uh: usize,
    pub dim_tilde: usize,
}

impl DofRow {
    pub fn ratio(&self) -> f64 {
        self.dim_tilde as f64 / self.dim_uh as f64
    }
}

/// Counts taken from the constructed spaces (not from the closed formulas).
pub fn run_dof_table(ns: &[usize]) -> Result<Vec<DofRow>> {
    ns.iter()
        .map(|&n| {
            let mesh = Arc::new(StaggeredMesh::build_structured(n)?);
            let uh = DofSpace::build(mesh.clone(), SpaceKind::Uh, 1)?;
            let tilde = DofSpace::build(mesh, SpaceKind::UhTilde, 1)?;
            Ok(DofRow { n, dim_uh: uh.n_dofs(), dim_tilde: tilde.n_dofs() })
        })
        .collect()
}

pub fn dof_csv(rows: &[DofRow]) -> String {
    let mut s = String::from("N,dim_Uh,dim_Uh_tilde,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:?}", r.n, r.dim_uh, r.dim_tilde, r.ratio());
    }
    s
}

pub fn dof_markdown(rows: &[DofRow]) -> String {
    let mut s = String::from("|  N | dim(Uh) | dim(Uh~) | ratio  |\n|---:|--------:|---------:|-------:|\n");
    for r in rows {
        let _ = writeln!(s, "| {:>2} | {:>7} | {:>8} | {:.4} |", r.n, r.dim_uh, r.dim_tilde, r.ratio());
    }
    s
}

/// One solved refinement level, kept for dumps and plots.
pub struct Level {
    pub discretization: Discretization,
    pub result: SolveResult,
}

/// Solve one experiment at one resolution.
pub fn solve_level(
    experiment: u32,
    method: Method,
    n: usize,
    mu: f64,
    theta: f64,
    options: AssemblyOptions,
    solver: &dyn LinearSolver,
) -> Result<Level> {
    let problem = make_problem(experiment, mu)?;
    let discretization = Discretization::structured(method, n, options)?;
    let result = discretization.solve(&problem, theta, solver)?;
    Ok(Level { discretization, result })
}

/// Convergence history over `ns`. A failing level ends the table with a
/// diagnostic entry. Levels run in parallel unless `sequential`.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence(
    experiment: u32,
    method: Method,
    mu: f64,
    theta: f64,
    ns: &[usize],
    options: AssemblyOptions,
    measure: ErrorMeasure,
    sequential: bool,
) -> Result<ConvergenceTable> {
    let problem = make_problem(experiment, mu)?;
    let level = |&n: &usize| -> Result<(f64, f64)> {
        let d = Discretization::structured(method, n, options)?;
        let res = d.solve(&problem, theta, &SparseLu)?;
        Ok(d.errors(&res, &problem, measure))
    };
    let results: Vec<Result<(f64, f64)>> =
        if sequential { ns.iter().map(level).collect() } else { ns.par_iter().map(level).collect() };
    let mut table = ConvergenceTable::new(method.label(), mu, theta);
    for (&n, r) in ns.iter().zip(results) {
        match r {
            Ok((eu, ez)) => table.push(n, eu, ez),
            Err(e) => {
                table.failure = Some((n, e.to_string()));
                break;
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCell {
    pub mu: f64,
    pub theta: f64,
    /// `(||z_h||, condition estimate)`, or the failure message.
    pub outcome: std::result::Result<(f64, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    pub n: usize,
    pub mus: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Row-major: one row per `mu`, one column per `theta`.
    pub cells: Vec<StabilityCell>,
}

impl StabilityTable {
    pub fn cell(&self, mu_index: usize, theta_index: usize) -> &StabilityCell {
        &self.cells[mu_index * self.thetas.len() + theta_index]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu,theta,z_norm,condition\n");
        for c in &self.cells {
            match &c.outcome {
                Ok((z, k)) => {
                    let _ = writeln!(s, "{:?},{:?},{:?},{:?}", c.mu, c.theta, z, k);
                }
                Err(_) => {
                    let _ = writeln!(s, "{:?},{:?},SINGULAR,", c.mu, c.theta);
                }
            }
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("||z_h|| for N = {} (condition estimate in brackets)\n\n|    mu    |", self.n);
        for t in &self.thetas {
            let _ = write!(s, " theta = {t} |");
        }
        s.push_str("\n|---------:|");
        for _ in &self.thetas {
            s.push_str("------:|");
        }
        s.push('\n');
        for (i, mu) in self.mus.iter().enumerate() {
            let _ = write!(s, "| {} |", sci3(*mu));
            for j in 0..self.thetas.len() {
                match &self.cell(i, j).outcome {
                    Ok((z, k)) => {
                        let _ = write!(s, " {} [{}] |", sci3(*z), sci3(*k));
                    }
                    Err(_) => s.push_str(" SINGULAR |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// `||z_h||` of the experiment 3 solution for every `(mu, theta)`.
pub fn run_stability_sweep(
    method: Method,
    n: usize,
    mus: &[f64],
    thetas: &[f64],
    options: AssemblyOptions,
    sequential: bool,
) -> Result<StabilityTable> {
    let d = Discretization::structured(method, n, options)?;
    let problem = make_problem(3, 1.0)?;
    let r = d.assemble_r(&problem.b)?;
    let pairs: Vec<(f64, f64)> = mus.iter().flat_map(|&mu| thetas.iter().map(move |&t| (mu, t))).collect();
    let cell = |&(mu, theta): &(f64, f64)| {
        let outcome = (|| {
            let p = problem.with_mu(mu)?;
            let op = d.operator(&r, mu, theta)?;
            let load = d.load(|x| p.f(x))?;
            let sys = d.constrained_system(&op, &load, |x| p.g(x))?;
            let sol = sdg_core::system::solve_constrained(&sys, &SparseLu)?;
            let fields = sdg_core::system::recover(&d.mass_inverse, &d.b, &r, &d.to_uh(&sol.u), mu, theta)?;
            let z = sdg_core::analysis::l2_norm_flux(&d.wh, &fields.z);
            if !z.is_finite() {
                return Err(sdg_core::Error::NonFinite("flux norm"));
            }
            Ok((z, sol.condition))
        })()
        .map_err(|e: sdg_core::Error| e.to_string());
        StabilityCell { mu, theta, outcome }
    };
    let cells = if sequential { pairs.iter().map(cell).collect() } else { pairs.par_iter().map(cell).collect() };
    Ok(StabilityTable { n, mus: mus.to_vec(), thetas: thetas.to_vec(), cells })
}

/// `[x, y, u, zx, zy]` on a uniform `resolution x resolution` grid of the unit
/// square. Points on shared edges take the value from the lowest-numbered
/// sub-triangle containing them (the plus side).
pub fn sample_field(d: &Discretization, result: &SolveResult, resolution: usize) -> Vec<[f64; 5]> {
    let mesh = &d.mesh;
    let h = 1.0 / (resolution.max(2) - 1) as f64;
    let coord = |i: usize| (i as f64 * h).min(1.0);
    let mut owner = vec![usize::MAX; resolution * resolution];
    let mut bary = vec![[0.0; 3]; resolution * resolution];
    for s in 0..mesh.n_sub() {
        let pts = mesh.sub_points(s);
        let map = mesh.sub_map(s);
        let (lo_x, hi_x) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
        let (lo_y, hi_y) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
        let range = |lo: f64, hi: f64| {
            let a = ((lo / h) - 1e-9).ceil().max(0.0) as usize;
            let b = (((hi / h) + 1e-9).floor() as usize).min(resolution - 1);
            a..=b
        };
        for j in range(lo_y, hi_y) {
            for i in range(lo_x, hi_x) {
                let k = j * resolution + i;
                if owner[k] != usize::MAX {
                    continue;
                }
                let l = map.barycentric(Point::new(coord(i), coord(j)));
                if l.iter().all(|&v| v >= -1e-12) {
                    owner[k] = s;
                    bary[k] = l;
                }
            }
        }
    }
    let scalar = d.scalar_space();
    (0..resolution * resolution)
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            let (s, l) = (owner[k], bary[k]);
            let u = scalar.scalar_value(&result.u, s, l);
            let z = d.wh.vector_value(&result.z, s, l);
            [coord(i), coord(j), u, z.x, z.y]
        })
        .collect()
}
