//! Geometry optimisation: L-BFGS with a More-Thuente (strong Wolfe) line
//! search, driven through `argmin`.

use std::cell::RefCell;

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use thiserror::Error;

use crate::ModelError;

/// A differentiable energy of a flat state vector.
pub trait Objective {
    fn n_dof(&self) -> usize;

    fn energy(&self, x: &[f64]) -> Result<f64, ModelError>;

    /// Energy, with the gradient written to `grad`.
    fn energy_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, ModelError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeParams {
    /// Stop when `‖∇E‖_∞ <= g_tol`.
    pub g_tol: f64,
    pub max_iters: u64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Bound on the max norm of the first trial step.
    pub max_first_step: f64,
}

impl Default for MinimizeParams {
    fn default() -> Self {
        Self { g_tol: 1e-5, max_iters: 5000, memory: 10, max_first_step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimized {
    pub x: Vec<f64>,
    pub energy: f64,
    pub grad_inf: f64,
    pub iters: u64,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("line search stalled after {iters} iterations (E = {energy}, |g|_inf = {grad_inf}): {reason}")]
    Stall { iters: u64, energy: f64, grad_inf: f64, reason: String, best: Vec<f64> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Point, energy and gradient of the last evaluation.
type Eval = (Vec<f64>, f64, Vec<f64>);

/// `obj` in the scaled variable `y = x / scale`.
struct Problem<'a, O: ?Sized> {
    obj: &'a O,
    scale: f64,
    // The line search asks for cost and gradient separately at the same point.
    cache: RefCell<Option<Eval>>,
    /// Lowest energy evaluated so far and its point, unscaled.
    best: &'a RefCell<Option<(f64, Vec<f64>)>>,
}

impl<O: Objective + ?Sized> Problem<'_, O> {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ModelError> {
        if let Some((cx, e, g)) = self.cache.borrow().as_ref() {
            if cx.as_slice() == x {
                return Ok((*e, g.clone()));
            }
        }
        let xs: Vec<f64> = x.iter().map(|v| v * self.scale).collect();
        let mut g = vec![0.0; x.len()];
        let e = self.obj.energy_grad(&xs, &mut g)?;
        g.iter_mut().for_each(|v| *v *= self.scale);
        if self.best.borrow().as_ref().is_none_or(|(b, _)| e < *b) {
            *self.best.borrow_mut() = Some((e, xs));
        }
        *self.cache.borrow_mut() = Some((x.to_vec(), e, g.clone()));
        Ok((e, g))
    }
}

impl<O: Objective + ?Sized> CostFunction for Problem<'_, O> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        Ok(self.eval(x).map(|(e, _)| e).unwrap_or(f64::INFINITY))
    }
}

impl<O: Objective + ?Sized> Gradient for Problem<'_, O> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        Ok(self.eval(x)?.1)
    }
}

/// How one L-BFGS run ended.
enum Leg {
    Done(Minimized),
    /// The line search failed; the lowest point seen and the reason.
    Failed(Vec<f64>, u64, String),
}

fn leg<O: Objective + ?Sized>(obj: &O, x0: &[f64], gi0: f64, max_iters: u64, params: &MinimizeParams) -> Result<Leg, MinimizeError> {
    let scale = (params.max_first_step / gi0).sqrt().min(1.0);
    let best_seen = RefCell::new(None);
    let problem = Problem { obj, scale, cache: RefCell::new(None), best: &best_seen };
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), params.memory)
        .with_tolerance_grad(params.g_tol * scale)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| ModelError::BadParameter(e.to_string()))?;
    let run = Executor::new(problem, solver)
        .configure(|s| s.param(x0.iter().map(|v| v / scale).collect()).max_iters(max_iters))
        .run();
    let lowest = || best_seen.borrow().as_ref().map_or_else(|| x0.to_vec(), |b| b.1.clone());
    let mut res = match run {
        Ok(r) => r,
        Err(e) => return Ok(Leg::Failed(lowest(), 0, e.to_string())),
    };
    let state = &mut res.state;
    let iters = state.get_iter();
    let reason = match state.get_termination_status() {
        TerminationStatus::Terminated(r) => r.clone(),
        TerminationStatus::NotTerminated => TerminationReason::SolverExit("not terminated".into()),
    };
    // The best iterate by energy can differ from the last one only by
    // round-off in the energy; prefer the last if it is converged.
    let unscale = |y: Vec<f64>| y.into_iter().map(|v| v * scale).collect::<Vec<f64>>();
    let last = state.take_param().map(unscale);
    let best = state.take_best_param().map(unscale);
    let mut g = vec![0.0; x0.len()];
    if let Some(x) = last {
        let energy = obj.energy_grad(&x, &mut g)?;
        let grad_inf = inf_norm(&g);
        if grad_inf <= params.g_tol {
            return Ok(Leg::Done(Minimized { x, energy, grad_inf, iters, converged: true }));
        }
    }
    let x = best.unwrap_or_else(lowest);
    let energy = obj.energy_grad(&x, &mut g)?;
    let grad_inf = inf_norm(&g);
    let converged = grad_inf <= params.g_tol;
    match reason {
        TerminationReason::SolverExit(msg) if !converged => Ok(Leg::Failed(x, iters, msg)),
        _ => {
            if !converged {
                log::warn!("minimize: stopped after {iters} iterations with |g|_inf = {grad_inf:.3e} ({})", reason.text());
            }
            Ok(Leg::Done(Minimized { x, energy, grad_inf, iters, converged }))
        }
    }
}

/// Backtracking steepest-descent step from `x`, halving from `alpha` until
/// the energy is defined and drops by the Armijo amount.
fn armijo_descent<O: Objective + ?Sized>(obj: &O, x: &[f64], energy: f64, g: &[f64], mut alpha: f64) -> Option<Vec<f64>> {
    let g2: f64 = g.iter().map(|v| v * v).sum();
    for _ in 0..40 {
        let trial: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - alpha * gi).collect();
        let r = obj.energy(&trial);
        if let Ok(e) = r {
            if e <= energy - 1e-4 * alpha * g2 {
                return Some(trial);
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Restarts allowed after line-search failures, as long as each one lowers
/// the energy.
const MAX_RESTARTS: usize = 20;

/// Minimises `obj` from `x0`. The convergence test inside the iteration uses
/// the Euclidean gradient norm, which bounds the max norm from above.
///
/// The first L-BFGS step is the bare gradient, so the variables are scaled
/// to bound it by `max_first_step`; later steps carry their own scaling. A
/// failed line search (for instance a trial step that inverts an element)
/// restarts L-BFGS from the lowest point found.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, params: &MinimizeParams) -> Result<Minimized, MinimizeError> {
    if x0.len() != obj.n_dof() {
        return Err(ModelError::DofMismatch { got: x0.len(), want: obj.n_dof() }.into());
    }
    let mut x = x0;
    let mut iters = 0;
    let mut g = vec![0.0; x.len()];
    for restart in 0..=MAX_RESTARTS {
        let energy = obj.energy_grad(&x, &mut g)?;
        let grad_inf = inf_norm(&g);
        if grad_inf <= params.g_tol || x.is_empty() {
            return Ok(Minimized { x, energy, grad_inf, iters, converged: true });
        }
        if iters >= params.max_iters {
            log::warn!("minimize: stopped after {iters} iterations with |g|_inf = {grad_inf:.3e}");
            return Ok(Minimized { x, energy, grad_inf, iters, converged: false });
        }
        match leg(obj, &x, grad_inf, params.max_iters - iters, params)? {
            Leg::Done(mut m) => {
                m.iters += iters;
                return Ok(m);
            }
            Leg::Failed(next, k, reason) => {
                iters += k;
                let e_next = obj.energy(&next).unwrap_or(f64::INFINITY);
                let next = if e_next < energy {
                    Some(next)
                } else {
                    armijo_descent(obj, &x, energy, &g, params.max_first_step / grad_inf)
                };
                match next {
                    Some(n) if restart < MAX_RESTARTS => {
                        log::debug!("minimize: restart {} after {iters} iterations ({reason})", restart + 1);
                        x = n;
                    }
                    _ => return Err(MinimizeError::Stall { iters, energy, grad_inf, reason, best: x }),
                }
            }
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `½ xᵀ D x - bᵀ x` with diagonal `D`.
    struct Quadratic {
        d: Vec<f64>,
        b: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn n_dof(&self) -> usize {
            self.d.len()
        }

        fn energy(&self, x: &[f64]) -> Result<f64, ModelError> {
            Ok((0..x.len()).map(|i| 0.5 * self.d[i] * x[i] * x[i] - self.b[i] * x[i]).sum())
        }

        fn energy_grad(&self, x: &[f64], g: &mut [f64]) -> Result<f64, ModelError> {
            for i in 0..x.len() {
                g[i] = self.d[i] * x[i] - self.b[i];
            }
            self.energy(x)
        }
    }

    /// Two atoms on a line, Morse bond; state = positions.
    struct Dimer(crate::potential::Morse);

    impl Objective for Dimer {
        fn n_dof(&self) -> usize {
            2
        }

        fn energy(&self, x: &[f64]) -> Result<f64, ModelError> {
            Ok(self.0.phi((x[1] - x[0]).abs()).0)
        }

        fn energy_grad(&self, x: &[f64], g: &mut [f64]) -> Result<f64, ModelError> {
            let r = x[1] - x[0];
            let (v, dv) = self.0.phi(r.abs());
            g[1] = dv * r.signum();
            g[0] = -g[1];
            Ok(v)
        }
    }

    #[test]
    fn quadratic_minimiser() {
        let q = Quadratic { d: vec![1.0, 2.0, 3.0, 1.5, 2.5], b: vec![1.0, -1.0, 0.5, 2.0, 0.0] };
        let p = MinimizeParams { g_tol: 1e-10, ..Default::default() };
        let r = minimize(&q, vec![0.0; 5], &p).unwrap();
        assert!(r.converged, "{r:?}");
        for i in 0..5 {
            assert!((r.x[i] - q.b[i] / q.d[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dimer_relaxes_to_the_well() {
        let m = crate::potential::Morse::new(1.0, 3.0, 1.1, 3.0).unwrap();
        let r = minimize(&Dimer(m), vec![0.0, 1.4], &MinimizeParams { g_tol: 1e-9, ..Default::default() }).unwrap();
        assert!(((r.x[1] - r.x[0]) - 1.1).abs() < 1e-8);
        assert!((r.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn starting_at_the_minimum_takes_no_iterations() {
        let q = Quadratic { d: vec![2.0; 3], b: vec![2.0; 3] };
        let r = minimize(&q, vec![1.0; 3], &MinimizeParams::default()).unwrap();
        assert_eq!(r.iters, 0);
    }
}
