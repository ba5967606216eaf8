use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcmesh::atomistic::{compute_rmax, DEFAULT_C_R};
use qcmesh::coupled::build_coupled_mesh;
use qcmesh::interp::transfer;
use qcmesh::mesh::QualityReport;
use qcmesh::Point3;
use qcmesh_driver::adaptive::{adapt_step, adaptive_solve, check_mesh, initial_state, minimize_params, State};
use qcmesh_driver::config::{example_config, RunConfig};
use qcmesh_driver::io::{self, Checkpoint, VtkFields};
use qcmesh_driver::marking::mark_elements;
use qcmesh_driver::setup::{retag, Problem};
use qcmesh_driver::solve::{estimate, solve_bgfc};
use qcmesh_driver::DriverError;

#[derive(Parser)]
#[command(name = "qcmesh", version, about = "Coupled atomistic/continuum meshes and adaptive BGFC solves")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Overrides of the `[adapt]` config keys.
#[derive(Args, Debug, Default)]
struct AdaptOverrides {
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    max_layers: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    dof_budget: Option<usize>,
    #[arg(long)]
    g_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the atomistic reference solve.
    #[arg(long)]
    no_reference: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print an example configuration.
    Config,
    /// Build the coupled mesh for a config (or for the atoms of an XYZ file).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// One BGFC solve on a mesh; writes a checkpoint.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        /// Warm start and blend; the config blend when absent.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        vtk: Option<PathBuf>,
        #[command(flatten)]
        over: AdaptOverrides,
    },
    /// One solve / estimate / mark / adapt step from a checkpoint.
    Adapt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out_mesh: PathBuf,
        #[arg(long)]
        out_state: PathBuf,
        #[command(flatten)]
        over: AdaptOverrides,
    },
    /// Full adaptive loop.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        over: AdaptOverrides,
    },
    /// Quality histogram of a mesh.
    Quality {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Interpolate a checkpoint's displacement onto another mesh.
    Transfer {
        #[arg(long)]
        from_mesh: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        to_mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
}

fn load_config(path: &Path, over: &AdaptOverrides) -> Result<RunConfig, DriverError> {
    let mut c = RunConfig::load(path)?;
    let a = &mut c.adapt;
    if let Some(v) = over.tau1 {
        a.tau1 = v;
    }
    if let Some(v) = over.tau2 {
        a.tau2 = v;
    }
    if let Some(v) = over.max_layers {
        a.max_layers = v;
    }
    if let Some(v) = over.max_steps {
        a.max_steps = v;
    }
    if let Some(v) = over.dof_budget {
        a.dof_budget = v;
    }
    if let Some(v) = over.g_tol {
        a.g_tol = v;
    }
    if let Some(v) = over.seed {
        a.seed = v;
    }
    if over.no_reference {
        c.reference.enabled = false;
    }
    c.adapt.validate()?;
    Ok(c)
}

fn write_vtk_state(path: &Path, s: &State, eta: Option<&[f64]>) -> Result<(), DriverError> {
    let beta: Vec<f64> = s.mesh.nodes.iter().map(|&p| s.blend.beta(p)).collect();
    io::write_vtk(path, &s.mesh, &VtkFields { eta, u: Some(&s.u), beta: Some(&beta) })
}

fn load_state(config: &RunConfig, mesh: &Path, state: Option<&Path>) -> Result<(Problem, State), DriverError> {
    let problem = Problem::new(config)?;
    let mesh = io::read_mesh(mesh)?;
    let state = match state {
        Some(p) => io::read_checkpoint(p)?.into_state(mesh)?,
        None => {
            let blend = problem.initial_blend(config)?;
            let atoms: Vec<Point3> = (0..mesh.nodes.len()).filter(|&n| mesh.is_atom(n)).map(|n| mesh.nodes[n]).collect();
            let r_max = compute_rmax(&atoms, DEFAULT_C_R).map_err(|e| DriverError::Coupled(e.into()))?;
            let n = mesh.nodes.len();
            State { mesh, blend, u: vec![Point3::zero(); n], r_max }
        }
    };
    Ok((problem, state))
}

fn run(cmd: Cmd) -> Result<(), DriverError> {
    match cmd {
        Cmd::Config => print!("{}", example_config().to_toml()),
        Cmd::Generate { config, atoms, out, vtk } => {
            let cfg = load_config(&config, &AdaptOverrides::default())?;
            let problem = Problem::new(&cfg)?;
            let state = match atoms {
                None => initial_state(&problem, &cfg)?,
                Some(p) => {
                    let atoms = io::read_xyz(&p)?;
                    let blend = problem.initial_blend(&cfg)?;
                    let mut cm = build_coupled_mesh(&atoms.positions, &problem.coupled_params())?;
                    retag(&mut cm.mesh, &blend);
                    check_mesh(&cm.mesh, "generation")?;
                    let n = cm.mesh.nodes.len();
                    State { mesh: cm.mesh, blend, u: vec![Point3::zero(); n], r_max: cm.r_max }
                }
            };
            io::write_mesh(&out, &state.mesh)?;
            io::write_checkpoint(&out.with_extension("state.json"), &Checkpoint::from_state(&state))?;
            if let Some(v) = vtk {
                write_vtk_state(&v, &state, None)?;
            }
            let q = QualityReport::new(&state.mesh);
            println!(
                "nodes {} tets {} atoms {} min q {:.4} q>0.9 {:.4}",
                state.mesh.nodes.len(),
                state.mesh.tets.len(),
                state.num_atoms(),
                q.min_q,
                q.fraction_high
            );
        }
        Cmd::Solve { config, mesh, state, out, vtk, over } => {
            let cfg = load_config(&config, &over)?;
            let (problem, mut s) = load_state(&cfg, &mesh, state.as_deref())?;
            let sol = solve_bgfc(&s.mesh, &problem.lattice, &s.blend, problem.potential, Some(&s.u), &minimize_params(&cfg))?;
            s.u = sol.u;
            let est = estimate(&s.mesh, &s.u);
            io::write_checkpoint(&out, &Checkpoint::from_state(&s))?;
            if let Some(v) = vtk {
                write_vtk_state(&v, &s, Some(&est.per_tet))?;
            }
            println!(
                "dof {} energy {:.10e} |g|_inf {:.3e} iters {} eta {:.6e}",
                sol.n_dof, sol.energy, sol.grad_inf, sol.iters, est.sum
            );
        }
        Cmd::Adapt { config, mesh, state, out_mesh, out_state, over } => {
            let cfg = load_config(&config, &over)?;
            let (problem, mut s) = load_state(&cfg, &mesh, Some(&state))?;
            let sol = solve_bgfc(&s.mesh, &problem.lattice, &s.blend, problem.potential, Some(&s.u), &minimize_params(&cfg))?;
            s.u = sol.u;
            let est = estimate(&s.mesh, &s.u);
            let a = &cfg.adapt;
            let m = mark_elements(&est.per_tet, &s.mesh, a.tau1, a.tau2, a.max_layers, problem.d_layer)?;
            let (next, summary) = adapt_step(&problem, &s, &m)?;
            io::write_mesh(&out_mesh, &next.mesh)?;
            io::write_checkpoint(&out_state, &Checkpoint::from_state(&next))?;
            println!(
                "marked {} split {} layers {} added atoms {}; tets {} -> {}",
                m.marked.len(),
                summary.split,
                m.p,
                summary.added_atoms,
                s.mesh.tets.len(),
                next.mesh.tets.len()
            );
        }
        Cmd::Run { config, out_dir, over } => {
            let cfg = load_config(&config, &over)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| DriverError::io(&out_dir, e))?;
            let mut io_err = None;
            let outcome = adaptive_solve(&cfg, |rec, s| {
                let stem = out_dir.join(format!("step{:02}", rec.step));
                let r = io::write_mesh(&stem.with_extension("mesh"), &s.mesh)
                    .and_then(|_| write_vtk_state(&stem.with_extension("vtk"), s, None));
                if let Err(e) = r {
                    io_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = io_err {
                return Err(e);
            }
            outcome.log.write(&out_dir.join("run.jsonl"))?;
            std::fs::write(out_dir.join("run.txt"), outcome.log.table()).map_err(|e| DriverError::io(&out_dir, e))?;
            io::write_mesh(&out_dir.join("final.mesh"), &outcome.state.mesh)?;
            io::write_checkpoint(&out_dir.join("final.state.json"), &Checkpoint::from_state(&outcome.state))?;
            print!("{}", outcome.log.table());
            if let Some(e) = outcome.error {
                return Err(e);
            }
        }
        Cmd::Quality { mesh } => {
            let m = io::read_mesh(&mesh)?;
            let q = QualityReport::new(&m);
            for (k, c) in q.histogram.iter().enumerate() {
                println!("({:.1}, {:.1}] {c}", k as f64 / 10.0, (k + 1) as f64 / 10.0);
            }
            println!("min {:.6} q>0.9 {:.4} tets {}", q.min_q, q.fraction_high, m.tets.len());
        }
        Cmd::Transfer { from_mesh, state, to_mesh, out, eps } => {
            let old = io::read_mesh(&from_mesh)?;
            let s = io::read_checkpoint(&state)?.into_state(old)?;
            let new = io::read_mesh(&to_mesh)?;
            let tr = transfer(&s.mesh, &s.u, &new, eps);
            let next = State { mesh: new, blend: s.blend, u: tr.values, r_max: s.r_max };
            io::write_checkpoint(&out, &Checkpoint::from_state(&next))?;
            println!("transferred {} values, {} outside the source mesh", next.u.len(), tr.warnings.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
