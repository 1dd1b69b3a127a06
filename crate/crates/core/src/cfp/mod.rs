//! Sequential almost-cyclic iteration for common fixed-point problems:
//! `x_{n+1} = x_n + λ_n (T_{i(n)}(x_n) - x_n)` with cutter operators `T_i`.

mod control;
mod operator;
pub mod random;
mod trace;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use control::{control_validate, ControlSpec, RelaxationSchedule};
pub(crate) use control::min_window;
pub use operator::{
    average, fne_check, relax, AffinePiece, Operator, OperatorSpec, SelfMap, FIX_TOL, INEQ_TOL,
};
pub use trace::{
    fejer_check, read_trace_jsonl, replay, write_trace_jsonl, Checkpoint, RunStatus, Trace,
    TraceRecord,
};

pub type Point = DVector<f64>;

#[derive(Debug, Error)]
pub enum CfpError {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("relaxation parameter {0} is outside [0, 2]")]
    InvalidRelaxation(f64),
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("the problem has no operators")]
    NoOperators,
    #[error("point is not a fixed point (residual {0:e})")]
    NotFixed(f64),
    #[error("iterate {n} is not finite")]
    NonFinite { n: usize },
    #[error("invalid stop rule: {0}")]
    InvalidStop(String),
    #[error("trace file line {line}: {message}")]
    TraceFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// When to stop: at a checkpoint whose largest residual is at most `tol`,
/// or after `max_iter` steps. Checkpoints fall every `stride` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub tol: f64,
    pub max_iter: usize,
    pub stride: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            tol: 1e-6,
            max_iter: 100_000,
            stride: 10,
        }
    }
}

/// A common fixed-point problem together with solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Problem {
    pub dim: usize,
    pub operators: Vec<OperatorSpec>,
    #[serde(default = "cyclic")]
    pub control: ControlSpec,
    #[serde(default)]
    pub relaxation: RelaxationSchedule,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
}

fn cyclic() -> ControlSpec {
    ControlSpec::Cyclic
}

/// A problem with compiled operators.
#[derive(Debug, Clone)]
pub struct Instance {
    pub operators: Vec<Operator>,
    pub control: ControlSpec,
    pub relaxation: RelaxationSchedule,
    pub x0: Point,
    pub stop: StopRule,
    /// Almost-cyclicality constant of the control.
    pub window: usize,
}

impl Problem {
    pub fn compile(&self) -> Result<Instance, CfpError> {
        if self.operators.is_empty() {
            return Err(CfpError::NoOperators);
        }
        let operators = self
            .operators
            .iter()
            .map(|spec| {
                let op = Operator::new(spec.clone())?;
                if op.dim() != self.dim {
                    return Err(CfpError::DimensionMismatch { expected: self.dim, got: op.dim() });
                }
                Ok(op)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if self.x0.len() != self.dim {
            return Err(CfpError::DimensionMismatch { expected: self.dim, got: self.x0.len() });
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(CfpError::NonFinite { n: 0 });
        }
        if self.stop.stride == 0 || !(self.stop.tol >= 0.0) {
            return Err(CfpError::InvalidStop("stride must be positive and tol nonnegative".into()));
        }
        self.relaxation.validate()?;
        let horizon = match &self.control {
            ControlSpec::Explicit { list } => list.len(),
            _ => usize::MAX,
        };
        let window = control_validate(&self.control, operators.len(), horizon)?;
        Ok(Instance {
            operators,
            control: self.control.clone(),
            relaxation: self.relaxation.clone(),
            x0: DVector::from_vec(self.x0.clone()),
            stop: self.stop,
            window,
        })
    }
}

/// `max_i ‖T_i(x) - x‖`.
pub fn max_residual(ops: &[Operator], x: &Point) -> f64 {
    ops.iter().map(|op| op.residual(x)).fold(0.0, f64::max)
}

/// Runs the iteration until a checkpoint meets the tolerance, the iteration
/// cap is hit, or an explicit control list runs out.
pub fn acsa_run(problem: &Problem) -> Result<Trace, CfpError> {
    let inst = problem.compile()?;
    acsa_run_instance(&inst)
}

pub fn acsa_run_instance(inst: &Instance) -> Result<Trace, CfpError> {
    let m = inst.operators.len();
    let stop = inst.stop;
    let mut x = inst.x0.clone();
    let mut trace = Trace::start(x.clone());
    let first = max_residual(&inst.operators, &x);
    trace.checkpoints.push(Checkpoint { n: 0, max_residual: first });
    if first <= stop.tol {
        trace.status = Some(RunStatus::Converged);
        return Ok(trace);
    }
    let mut status = RunStatus::IterationCap;
    for n in 0..stop.max_iter {
        let Some(i) = inst.control.index(n, m) else {
            status = RunStatus::ControlExhausted;
            break;
        };
        let lambda = inst.relaxation.lambda(n);
        let tx = inst.operators[i - 1].apply(&x);
        let step = &tx - &x;
        let next = &x + &step * lambda;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(CfpError::NonFinite { n: n + 1 });
        }
        trace.push(i, lambda, step.norm(), next.clone());
        x = next;
        if (n + 1) % stop.stride == 0 {
            let res = max_residual(&inst.operators, &x);
            trace.checkpoints.push(Checkpoint { n: n + 1, max_residual: res });
            if res <= stop.tol {
                status = RunStatus::Converged;
                break;
            }
        }
    }
    let last = trace.steps();
    if trace.checkpoints.last().map(|c| c.n) != Some(last) {
        let res = max_residual(&inst.operators, &x);
        trace.checkpoints.push(Checkpoint { n: last, max_residual: res });
    }
    trace.status = Some(status);
    Ok(trace)
}
