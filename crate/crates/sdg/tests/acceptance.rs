//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sdg::experiments::{run_convergence, run_dof_table, run_stability_sweep};
use sdg::solver::SparseLu;
use sdg_core::analysis::{discrete_norms, make_problem, observed_order, ConvergenceTable, ErrorMeasure};
use sdg_core::forms::{assemble_b_adjoint, assemble_load, AssemblyOptions, ConvectionField};
use sdg_core::{Discretization, DofSpace, Method, Point, SpaceKind, SparseMatrix, StaggeredMesh};

const NS: [usize; 6] = [2, 4, 8, 16, 32, 64];

/// Reference DOF counts: (N, dim Uh, dim Uh~).
const DOF_TABLE: [(usize, usize, usize); 6] =
    [(2, 56, 33), (4, 208, 121), (8, 800, 465), (16, 3136, 1825), (32, 12416, 7233), (64, 49408, 28801)];

/// Reference experiment 1 errors, N = 2..64: SDG u, SDG z, ESDG u, ESDG z.
const EXP1: [[f64; 6]; 4] = [
    [1.50e-1, 8.42e-2, 3.37e-2, 1.03e-2, 2.72e-3, 6.91e-4],
    [2.48e0, 1.63e0, 6.96e-1, 2.15e-1, 5.71e-2, 1.45e-2],
    [1.03e-1, 5.80e-2, 2.23e-2, 6.15e-3, 1.55e-3, 3.86e-4],
    [2.31e0, 2.00e0, 1.38e0, 7.92e-1, 4.13e-1, 2.09e-1],
];

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for (i, j, v) in a.triplets() {
        m[(i, j)] += v;
    }
    m
}

fn last_orders(t: &ConvergenceTable) -> (f64, f64) {
    let r = t.rows.last().expect("table has rows");
    (r.order_u.unwrap_or(f64::NAN), r.order_z.unwrap_or(f64::NAN))
}

fn complete(t: &ConvergenceTable, ns: &[usize]) -> Result<(), String> {
    match &t.failure {
        Some((n, msg)) => Err(format!("{} failed at N = {n}: {msg}", t.method)),
        None if t.rows.len() != ns.len() => Err(format!("{} has {} rows", t.method, t.rows.len())),
        None => Ok(()),
    }
}

fn near(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn within_factor(x: f64, reference: f64, factor: f64) -> bool {
    x > 0.0 && x / reference <= factor && reference / x <= factor
}

fn criterion1() -> Outcome {
    let rows = match run_dof_table(&NS) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let ok = rows.iter().zip(DOF_TABLE).all(|(r, (n, du, dt))| {
        r.n == n && r.dim_uh == du && r.dim_tilde == dt && du == 12 * n * n + 4 * n && dt == 7 * n * n + 2 * n + 1
    });
    let last = rows.last().expect("six rows");
    (ok, format!("N=64: {} / {} (ratio {:.4})", last.dim_uh, last.dim_tilde, last.ratio()))
}

fn criterion2() -> Outcome {
    let opts = AssemblyOptions::default();
    let mut adj: f64 = 0.0;
    let mut skew: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut asym: f64 = 0.0;
    let vortex = make_problem(2, 1.0).expect("experiment 2").b;
    for n in [2, 4] {
        let mesh = Arc::new(StaggeredMesh::build_structured(n).expect("mesh"));
        let wh = DofSpace::build(mesh.clone(), SpaceKind::Wh, 1).expect("Wh");
        let uh = DofSpace::build(mesh, SpaceKind::Uh, 1).expect("Uh");
        let b = sdg_core::forms::assemble_b(&wh, &uh, &opts).expect("B");
        let bs = assemble_b_adjoint(&wh, &uh, &opts).expect("B*");
        let all: Vec<usize> = (0..wh.n_dofs()).collect();
        let free = uh.free_dofs();
        adj = adj.max(bs.submatrix(&all, &free).max_abs_diff(&b.transpose().submatrix(&all, &free)));

        for method in [Method::Sdg, Method::Esdg] {
            let d = Discretization::structured(method, n, opts).expect("discretization");
            for field in [&vortex, &ConvectionField::constant(Point::new(20.0, 20.0))] {
                let r = d.assemble_r(field).expect("R");
                let op = d.operator(&r, 1.0, 0.5).expect("operator");
                let c = dense(&op.convection);
                skew = skew.max((&c + c.transpose()).abs().max());
                let free = d.scalar_space().free_dofs();
                let lap = dense(&op.laplacian.submatrix(&free, &free).scaled(-1.0));
                asym = asym.max((&lap - lap.transpose()).abs().max());
                let eig = SymmetricEigen::new(lap.clone()).eigenvalues;
                min_eig = min_eig.min(eig.min() / eig.max());
            }
        }
    }
    let ok = adj < 1e-12 && skew < 1e-12 && asym < 1e-12 && min_eig > 0.0;
    (
        ok,
        format!(
            "max|B*-B^T| = {adj:.1e}, max|C+C^T| = {skew:.1e}, max|L-L^T| = {asym:.1e}, min eig(-lap)/max = {min_eig:.2e}"
        ),
    )
}

fn criterion3() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [4, 8, 16, 32] {
        for method in [Method::Sdg, Method::Esdg] {
            let d = match Discretization::structured(method, n, AssemblyOptions::default()) {
                Ok(d) => d,
                Err(e) => return (false, e.to_string()),
            };
            for mu in [1.0, 1e-2, 1e-3] {
                let p = make_problem(3, mu).expect("experiment 3");
                let res = match d.solve(&p, 0.5, &SparseLu) {
                    Ok(r) => r,
                    Err(e) => return (false, format!("{method:?} N={n} mu={mu}: {e}")),
                };
                let z = d.flux_norm(&res);
                let fu: f64 = d.load(|x| p.f(x)).expect("load").iter().zip(&res.u).map(|(a, b)| a * b).sum();
                worst = worst.max((mu * z * z - fu).abs() / fu.abs());
            }
        }
    }
    (worst < 1e-10, format!("max relative defect {worst:.2e}"))
}

fn criterion4() -> Outcome {
    let opts = AssemblyOptions::default();
    let mut msgs = Vec::new();
    let mut ok = true;
    for (k, method) in [Method::Sdg, Method::Esdg].into_iter().enumerate() {
        let t = match run_convergence(1, method, 1.0, 0.5, &NS, opts, ErrorMeasure::Interpolant, false) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        if let Err(e) = complete(&t, &NS) {
            return (false, e);
        }
        let (ou, oz) = last_orders(&t);
        let (tu, tz) = if method == Method::Sdg { (1.98, 1.98) } else { (2.00, 0.98) };
        ok &= near(ou, tu, 0.1) && near(oz, tz, 0.1);
        for (i, r) in t.rows.iter().enumerate() {
            ok &= within_factor(r.error_u, EXP1[2 * k][i], 2.0) && within_factor(r.error_z, EXP1[2 * k + 1][i], 2.0);
        }
        let r = t.rows.last().expect("rows");
        msgs.push(format!("{} N=64 u {:.2e} ({ou:.2}) z {:.2e} ({oz:.2})", method.label(), r.error_u, r.error_z));

        let exact = run_convergence(1, method, 1.0, 0.5, &NS[4..], opts, ErrorMeasure::Exact, false);
        if let Ok(e) = exact {
            let r = e.rows.last().expect("rows");
            msgs.push(format!("[exact-L2 N=64: u {:.2e} z {:.2e}]", r.error_u, r.error_z));
        }
    }
    (ok, msgs.join("; "))
}

fn criterion5() -> Outcome {
    let opts = AssemblyOptions::default();
    let run = |method, mu| -> Result<ConvergenceTable, String> {
        let t = run_convergence(2, method, mu, 0.5, &NS, opts, ErrorMeasure::Interpolant, false)
            .map_err(|e| e.to_string())?;
        complete(&t, &NS)?;
        Ok(t)
    };
    let tables = (|| -> Result<_, String> {
        Ok([run(Method::Sdg, 1.0)?, run(Method::Esdg, 1.0)?, run(Method::Sdg, 1e-4)?, run(Method::Esdg, 1e-4)?])
    })();
    let [sdg1, esdg1, sdg4, esdg4] = match tables {
        Ok(t) => t,
        Err(e) => return (false, e),
    };
    let e64 = sdg1.rows.last().expect("rows").error_u;
    let (ou_sdg1, _) = last_orders(&sdg1);
    let (_, oz_esdg1) = last_orders(&esdg1);
    let (ou_sdg4, oz_sdg4) = last_orders(&sdg4);
    let (ou_esdg4, _) = last_orders(&esdg4);
    let ok = within_factor(e64, 5.89e-4, 2.0)
        && ou_sdg1 >= 1.9
        && near(oz_esdg1, 0.99, 0.15)
        && ou_sdg4 >= 1.9
        && ou_esdg4 >= 1.9
        && oz_sdg4 <= 1.6;
    (
        ok,
        format!(
            "mu=1: SDG u(64) {e64:.2e} order {ou_sdg1:.2}, ESDG z order {oz_esdg1:.2}; \
             mu=1e-4: u orders SDG {ou_sdg4:.2} ESDG {ou_esdg4:.2}, SDG z order {oz_sdg4:.2}"
        ),
    )
}

fn criterion6() -> Outcome {
    let mus = [1.0, 1e-2, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4];
    let t = match run_stability_sweep(Method::Esdg, 32, &mus, &[0.0, 0.5, 1.0], AssemblyOptions::default(), false) {
        Ok(t) => t,
        Err(e) => return (false, e.to_string()),
    };
    let z = |i: usize, j: usize| t.cell(i, j).outcome.as_ref().map(|v| v.0).unwrap_or(f64::INFINITY);
    let half: Vec<f64> = (0..mus.len()).map(|i| z(i, 1)).collect();
    let half_ok = half.iter().all(|v| (4.0..=7.0).contains(v));
    let small: Vec<usize> = (0..mus.len()).filter(|&i| mus[i] <= 5e-4).collect();
    let max0 = small.iter().map(|&i| z(i, 0)).fold(0.0, f64::max);
    let max1 = small.iter().map(|&i| z(i, 2)).fold(0.0, f64::max);
    let ok = half_ok && max0 > 1e2 && max1 > 1e2;
    (
        ok,
        format!(
            "theta=1/2: {:.2}..{:.2}; max over mu<=5e-4: theta=0 {max0:.2e}, theta=1 {max1:.2e}",
            half.iter().cloned().fold(f64::INFINITY, f64::min),
            half.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn criterion7() -> Outcome {
    let b = ConvectionField::zero();
    let f = |p: Point| 1.0 + p.x * p.y;
    let g = |p: Point| p.x * p.x - p.y;
    let mut worst: f64 = 0.0;
    for (mu, theta) in [(1.0, 0.5), (0.1, 0.5), (0.01, 0.0), (0.3, 1.0)] {
        let d = Discretization::structured(Method::Sdg, 2, AssemblyOptions::default()).expect("discretization");
        let res = match d.solve_with(&b, f, g, mu, theta, &SparseLu) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let r = d.assemble_r(&b).expect("R");
        let (nu, nw) = (d.uh.n_dofs(), d.wh.n_dofs());
        let (bm, rm, mm) = (dense(&d.b), dense(&r), dense(&d.mass));
        let s = mu.sqrt();
        let mut k = DMatrix::zeros(nu + 2 * nw, nu + 2 * nw);
        let mut rhs = DVector::zeros(nu + 2 * nw);
        k.view_mut((0, nu), (nw, nw)).copy_from(&mm);
        k.view_mut((0, 0), (nw, nu)).copy_from(&(-s * bm.transpose()));
        k.view_mut((0, nu + nw), (nw, nw)).copy_from(&(theta / s * &mm));
        k.view_mut((nw, nu + nw), (nw, nw)).copy_from(&mm);
        k.view_mut((nw, 0), (nw, nu)).copy_from(&(-rm.transpose()));
        let row = 2 * nw;
        k.view_mut((row, nu), (nu, nw)).copy_from(&(s * &bm + (1.0 - theta) / s * &rm));
        k.view_mut((row, nu + nw), (nu, nw)).copy_from(&((1.0 - theta) * theta / mu * &rm));
        let load = assemble_load(&d.uh, f, &d.options).expect("load");
        rhs.rows_mut(row, nu).copy_from(&DVector::from_vec(load));
        let gi = d.uh.interpolate_scalar(g);
        for &i in d.uh.boundary_dofs() {
            k.row_mut(row + i).fill(0.0);
            k[(row + i, i)] = 1.0;
            rhs[row + i] = gi[i];
        }
        let Some(x) = k.lu().solve(&rhs) else {
            return (false, "three-field system is singular".into());
        };
        let diff =
            |a: &[f64], off: usize| a.iter().enumerate().map(|(i, v)| (v - x[off + i]).abs()).fold(0.0, f64::max);
        let zx: Vec<f64> = (0..nw).map(|i| (x[nu + i] + theta / s * x[nu + nw + i]) / s).collect();
        let dz = res.z.iter().zip(&zx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff(&res.u, 0)).max(diff(&res.w, nu)).max(diff(&res.p, nu + nw)).max(dz);
    }
    (worst < 1e-10, format!("max field difference {worst:.2e}"))
}

fn criterion8() -> Outcome {
    let d = match Discretization::structured(Method::Esdg, 16, AssemblyOptions::default()) {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let mut values = Vec::new();
    for mu in [1.0, 1e-1, 1e-2, 1e-3] {
        let p = make_problem(3, mu).expect("experiment 3");
        match d.solve(&p, 0.5, &SparseLu) {
            Ok(res) => values.push(mu * discrete_norms(d.scalar_space(), &res.u).z),
            Err(e) => return (false, format!("mu={mu}: {e}")),
        }
    }
    // one constant for the whole sweep, pinned to the diffusion-dominated case
    let bound = 10.0 * values[0];
    let ok = values.iter().all(|v| v.is_finite() && *v <= bound);
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    (ok, format!("mu*||u||_Z = [{}], bound {bound:.3e}", shown.join(", ")))
}

fn main() {
    // orders of the reference columns, recomputed as a sanity check on the constants
    assert!((observed_order(EXP1[2][4], EXP1[2][5]).expect("order") - 2.0).abs() < 0.02);

    let criteria: [Criterion; 8] = [
        ("degree-of-freedom counts", criterion1),
        ("structural invariants", criterion2),
        ("energy identity", criterion3),
        ("experiment 1 reproduction", criterion4),
        ("experiment 2 reproduction", criterion5),
        ("experiment 3 stability contrast", criterion6),
        ("condensed vs three-field solve", criterion7),
        ("robustness of mu*||u||_Z", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {} {name}: {} ({detail}) [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
