use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use sdg::config::{Cli, RunConfig, Task};
use sdg::experiments::{
    dof_csv, dof_markdown, run_convergence, run_dof_table, run_stability_sweep, sample_field, solve_level, Level,
};
use sdg::io::{write_coefficients, write_grid, write_matrix, write_mesh};
use sdg::solver::{set_deterministic, SparseLu};
use sdg_core::analysis::make_problem;

enum Failure {
    Config(String),
    Solver(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))
}

/// Grid samples and debug dumps for one solved level.
fn write_level(cfg: &RunConfig, level: &Level, experiment: u32, stem: &str) -> Result<(), Failure> {
    let (d, res) = (&level.discretization, &level.result);
    if cfg.grid > 0 {
        let mut w = create(&cfg.out.join(format!("{stem}_grid.txt")))?;
        write_grid(&sample_field(d, res, cfg.grid), &mut w)?;
        w.flush()?;
    }
    if cfg.dump {
        let problem = make_problem(experiment, res.mu).map_err(|e| Failure::Solver(e.to_string()))?;
        let r = d.assemble_r(&problem.b).map_err(|e| Failure::Solver(e.to_string()))?;
        let op = d.operator(&r, res.mu, res.theta).map_err(|e| Failure::Solver(e.to_string()))?;
        let mut w = create(&cfg.out.join(format!("{stem}_mesh.txt")))?;
        write_mesh(&d.mesh, &mut w)?;
        w.flush()?;
        for (name, m) in [("B", &d.b), ("M", &d.mass), ("R", &r), ("A", &op.a)] {
            let mut w = create(&cfg.out.join(format!("{stem}_{name}.txt")))?;
            write_matrix(m, &mut w)?;
            w.flush()?;
        }
        for (name, v) in [("u", &res.u), ("w", &res.w), ("p", &res.p), ("z", &res.z)] {
            let mut w = create(&cfg.out.join(format!("{stem}_{name}.txt")))?;
            write_coefficients(v, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<(), Failure> {
    set_deterministic(cfg.deterministic);
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", cfg.out.display())))?;
    let sequential = cfg.deterministic;
    let mut solver_failure = None;
    match cfg.task {
        Task::Dof => {
            let rows = run_dof_table(&cfg.ns).map_err(|e| Failure::Config(e.to_string()))?;
            write_file(&cfg.out.join("dof.csv"), &dof_csv(&rows))?;
            let md = dof_markdown(&rows);
            write_file(&cfg.out.join("dof.md"), &md)?;
            println!("{md}");
        }
        Task::Convergence(e) => {
            let theta = cfg.thetas[0];
            for &method in &cfg.methods {
                for &mu in &cfg.mus {
                    let table =
                        run_convergence(e, method, mu, theta, &cfg.ns, cfg.options, cfg.error_measure, sequential)
                            .map_err(|e| Failure::Config(e.to_string()))?;
                    let stem = format!("exp{e}_{}_mu{mu:e}", method.label().to_ascii_lowercase());
                    write_file(&cfg.out.join(format!("{stem}.csv")), &table.to_csv())?;
                    let md = table.to_markdown();
                    write_file(&cfg.out.join(format!("{stem}.md")), &md)?;
                    println!("{md}");
                    if let Some((n, msg)) = &table.failure {
                        solver_failure.get_or_insert(format!("{stem}: N = {n}: {msg}"));
                        continue;
                    }
                    if cfg.grid > 0 || cfg.dump {
                        let n = *cfg.ns.last().expect("validated non-empty");
                        let level = solve_level(e, method, n, mu, theta, cfg.options, &SparseLu)
                            .map_err(|e| Failure::Solver(e.to_string()))?;
                        write_level(cfg, &level, e, &format!("{stem}_N{n}"))?;
                    }
                }
            }
        }
        Task::Stability => {
            for &method in &cfg.methods {
                let table = run_stability_sweep(method, cfg.ns[0], &cfg.mus, &cfg.thetas, cfg.options, sequential)
                    .map_err(|e| Failure::Solver(e.to_string()))?;
                let stem = format!("exp3_{}_N{}", method.label().to_ascii_lowercase(), cfg.ns[0]);
                write_file(&cfg.out.join(format!("{stem}.csv")), &table.to_csv())?;
                let md = table.to_markdown();
                write_file(&cfg.out.join(format!("{stem}.md")), &md)?;
                println!("{}\n{md}", method.label());
            }
        }
    }
    match solver_failure {
        Some(msg) => Err(Failure::Solver(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}
