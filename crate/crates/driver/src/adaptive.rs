//! The adaptive loop: solve, estimate, mark, adapt, transfer.

use std::time::Instant;

use qcmesh::adapt::{extend_atomistic, refine_continuum, regenerate, EditMesh, ExtensionRequest, RefineParams};
use qcmesh::continuum::init_boundary;
use qcmesh::interp::transfer;
use qcmesh::mesh::{validate, QualityReport};
use qcmesh::{Point3, Region, TetMesh};
use qcmesh_model::blend::Blend;
use qcmesh_model::minimize::MinimizeParams;

use crate::config::RunConfig;
use crate::marking::{mark_elements, Marking};
use crate::reference::{reference_errors, solve_reference, Reference};
use crate::runlog::{RunLog, StepRecord};
use crate::setup::{retag, Problem};
use crate::solve::{estimate, solve_bgfc, Solution};
use crate::DriverError;

/// Mesh, blend and nodal displacement between steps.
#[derive(Debug, Clone)]
pub struct State {
    pub mesh: TetMesh,
    pub blend: Blend,
    pub u: Vec<Point3>,
    /// Deletion threshold of the atomistic mesh.
    pub r_max: f64,
}

impl State {
    pub fn num_atoms(&self) -> usize {
        (0..self.mesh.nodes.len()).filter(|&n| self.mesh.is_atom(n)).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct AdaptSummary {
    pub split: usize,
    pub added_atoms: usize,
    pub used_regenerate: bool,
    pub transfer_warnings: usize,
}

pub fn check_mesh(mesh: &TetMesh, stage: &str) -> Result<(), DriverError> {
    let rep = validate(mesh);
    if rep.is_ok() {
        Ok(())
    } else {
        Err(DriverError::InvalidMesh {
            stage: stage.into(),
            detail: format!("{} violations, first {:?}", rep.violations.len(), rep.violations[0]),
        })
    }
}

/// Refines the split set, grows the atomistic region and blend by the
/// marked layer count, and carries the displacement over.
pub fn adapt_step(problem: &Problem, state: &State, marking: &Marking) -> Result<(State, AdaptSummary), DriverError> {
    let mut summary = AdaptSummary::default();
    let mut e = EditMesh::from_mesh(&state.mesh);
    // Blend tets are never split; they are absorbed by region growth.
    let split: Vec<usize> = marking.split.iter().copied().filter(|&t| e.region(t) == Region::Continuum).collect();
    summary.split = refine_continuum(&mut e, &split, &RefineParams::default())?.split;
    let mut mesh = e.to_mesh();
    let mut blend = state.blend.clone();
    if marking.p > 0 {
        let (la, lb) = marking.growth();
        blend = blend.expanded(la as f64 * problem.d_layer, lb as f64 * problem.d_layer);
        let req = ExtensionRequest { atoms: problem.atoms_for(&blend) };
        let params = problem.extend_params(state.r_max, &req.atoms);
        let ext = match extend_atomistic(&mesh, &req, &params) {
            Ok(x) => x,
            Err(err) => {
                log::warn!("local extension failed ({err}); regenerating the continuum");
                summary.used_regenerate = true;
                regenerate(&mesh, &req, &init_boundary(&problem.domain), &params)?
            }
        };
        summary.added_atoms = ext.added_atoms;
        mesh = ext.mesh;
    }
    retag(&mut mesh, &blend);
    check_mesh(&mesh, "adaptation")?;
    let tr = transfer(&state.mesh, &state.u, &mesh, problem.eps());
    summary.transfer_warnings = tr.warnings.len();
    Ok((State { mesh, blend, u: tr.values, r_max: state.r_max }, summary))
}

/// Outcome of a run: the log so far, the last good state, and the error that
/// stopped the run early, if any.
#[derive(Debug)]
pub struct RunOutcome {
    pub log: RunLog,
    pub state: State,
    pub reference: Option<Reference>,
    pub error: Option<DriverError>,
}

pub fn minimize_params(cfg: &RunConfig) -> MinimizeParams {
    MinimizeParams { g_tol: cfg.adapt.g_tol, max_iters: cfg.adapt.max_iters, ..Default::default() }
}

/// Initial state of a run.
pub fn initial_state(problem: &Problem, cfg: &RunConfig) -> Result<State, DriverError> {
    let blend = problem.initial_blend(cfg)?;
    let cm = problem.initial_mesh(&blend)?;
    check_mesh(&cm.mesh, "generation")?;
    let n = cm.mesh.nodes.len();
    Ok(State { mesh: cm.mesh, blend, u: vec![Point3::zero(); n], r_max: cm.r_max })
}

/// Solves, estimates and records one step; returns the solution and the
/// estimator.
fn solve_and_record(
    problem: &Problem,
    cfg: &RunConfig,
    state: &mut State,
    step: usize,
    reference: Option<&Reference>,
) -> Result<(StepRecord, Vec<f64>), DriverError> {
    let t0 = Instant::now();
    let sol: Solution = solve_bgfc(
        &state.mesh,
        &problem.lattice,
        &state.blend,
        problem.potential,
        Some(&state.u),
        &minimize_params(cfg),
    )?;
    let t_solve = t0.elapsed().as_secs_f64();
    state.u = sol.u.clone();
    let t1 = Instant::now();
    let est = estimate(&state.mesh, &state.u);
    let t_estimate = t1.elapsed().as_secs_f64();
    let errs = match reference {
        Some(r) => Some(reference_errors(r, &state.mesh, &state.u, sol.energy, problem.eps())?),
        None => None,
    };
    let q = QualityReport::new(&state.mesh);
    let rec = StepRecord {
        step,
        dof: sol.n_dof,
        atoms: state.num_atoms(),
        nodes: state.mesh.nodes.len(),
        tets: state.mesh.tets.len(),
        energy: sol.energy,
        grad_inf: sol.grad_inf,
        iters: sol.iters,
        converged: sol.converged,
        eta: est.sum,
        eta_l2: est.l2,
        geometry_error: errs.map(|e| e.geometry),
        energy_error: errs.map(|e| e.energy),
        quality_histogram: q.histogram,
        fraction_high: q.fraction_high,
        min_quality: q.min_q,
        marked: None,
        split: None,
        layers: None,
        t_solve,
        t_estimate,
        t_refine: 0.0,
    };
    Ok((rec, est.per_tet))
}

/// Runs the full adaptive loop. `on_step` sees every record as soon as the
/// step is complete.
pub fn adaptive_solve(cfg: &RunConfig, mut on_step: impl FnMut(&StepRecord, &State)) -> Result<RunOutcome, DriverError> {
    let problem = Problem::new(cfg)?;
    let mut state = initial_state(&problem, cfg)?;
    let reference = if cfg.reference.enabled && problem.lattice.len() <= cfg.reference.max_atoms {
        Some(solve_reference(&problem.lattice, problem.potential, &minimize_params(cfg))?)
    } else {
        None
    };
    let mut log = RunLog::default();
    let mut step = 0;
    loop {
        let (mut rec, eta) = match solve_and_record(&problem, cfg, &mut state, step, reference.as_ref()) {
            Ok(x) => x,
            Err(e) => return Ok(RunOutcome { log, state, reference, error: Some(e) }),
        };
        let last = step >= cfg.adapt.max_steps || rec.dof >= cfg.adapt.dof_budget;
        if last {
            on_step(&rec, &state);
            log.push(rec);
            return Ok(RunOutcome { log, state, reference, error: None });
        }
        let t2 = Instant::now();
        let adapted = mark_elements(&eta, &state.mesh, cfg.adapt.tau1, cfg.adapt.tau2, cfg.adapt.max_layers, problem.d_layer)
            .map_err(DriverError::from)
            .and_then(|m| adapt_step(&problem, &state, &m).map(|r| (m, r)));
        rec.t_refine = t2.elapsed().as_secs_f64();
        match adapted {
            Ok((m, (next, summary))) => {
                rec.marked = Some(m.marked.len());
                rec.split = Some(summary.split);
                rec.layers = Some(m.p);
                log::info!(
                    "step {step}: dof {} eta {:.4e}; marked {}, split {}, p = {}, +{} atoms",
                    rec.dof,
                    rec.eta,
                    m.marked.len(),
                    summary.split,
                    m.p,
                    summary.added_atoms
                );
                on_step(&rec, &state);
                log.push(rec);
                state = next;
            }
            Err(e) => {
                on_step(&rec, &state);
                log.push(rec);
                return Ok(RunOutcome { log, state, reference, error: Some(e) });
            }
        }
        step += 1;
    }
}
