//! Per-step records of an adaptive run, written as JSON lines and as a
//! plain-text table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::DriverError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub dof: usize,
    pub atoms: usize,
    pub nodes: usize,
    pub tets: usize,
    pub energy: f64,
    pub grad_inf: f64,
    pub iters: u64,
    pub converged: bool,
    /// `Σ_T η_T`.
    pub eta: f64,
    /// `(Σ_T η_T²)^{1/2}`.
    pub eta_l2: f64,
    pub geometry_error: Option<f64>,
    pub energy_error: Option<f64>,
    /// Quality histogram over `(0, 0.1], ..., (0.9, 1]`.
    pub quality_histogram: [usize; 10],
    pub fraction_high: f64,
    pub min_quality: f64,
    /// Marking of this step (absent on the last step).
    pub marked: Option<usize>,
    pub split: Option<usize>,
    pub layers: Option<usize>,
    pub t_solve: f64,
    pub t_estimate: f64,
    pub t_refine: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
}

impl RunLog {
    pub fn push(&mut self, r: StepRecord) {
        debug_assert!(self.records.last().is_none_or(|l| l.step < r.step));
        self.records.push(r);
    }

    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("record serialises"));
            s.push('\n');
        }
        s
    }

    pub fn from_json_lines(text: &str) -> Result<Self, DriverError> {
        let mut log = RunLog::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r = serde_json::from_str(line).map_err(|e| DriverError::Parse {
                path: "<run log>".into(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            log.records.push(r);
        }
        Ok(log)
    }

    pub fn table(&self) -> String {
        let mut s = String::from(
            "step      dof  atoms     energy         eta   geom_err  q>0.9   solve(s)  est(s)  refine(s)\n",
        );
        for r in &self.records {
            let ge = r.geometry_error.map_or("-".to_string(), |g| format!("{g:.4e}"));
            s.push_str(&format!(
                "{:>4} {:>8} {:>6} {:>10.4e} {:>11.4e} {:>10} {:>6.3} {:>10.3} {:>7.3} {:>10.3}\n",
                r.step, r.dof, r.atoms, r.energy, r.eta, ge, r.fraction_high, r.t_solve, r.t_estimate, r.t_refine
            ));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), DriverError> {
        let mut f = std::fs::File::create(path).map_err(|e| DriverError::io(path, e))?;
        f.write_all(self.to_json_lines().as_bytes()).map_err(|e| DriverError::io(path, e))
    }
}
