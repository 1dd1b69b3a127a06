//! Recorded runs: iterates, controls, relaxations and residuals, with JSONL
//! persistence, replay and a Fejér-monotonicity check.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CfpError, Operator, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationCap,
    ControlExhausted,
}

/// `max_i ‖T_i(x_n) - x_n‖` at step `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub max_residual: f64,
}

/// A run `x_0, ..., x_N`. Step `n` moves `x_n` to `x_{n+1}` using operator
/// `controls[n]` (1-based) with relaxation `lambdas[n]`; `step_residuals[n]`
/// is `‖T_{i(n)}(x_n) - x_n‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub iterates: Vec<Point>,
    pub controls: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub step_residuals: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    /// `None` for traces read back from disk.
    pub status: Option<RunStatus>,
}

impl Trace {
    pub fn start(x0: Point) -> Self {
        Trace {
            iterates: vec![x0],
            controls: Vec::new(),
            lambdas: Vec::new(),
            step_residuals: Vec::new(),
            checkpoints: Vec::new(),
            status: None,
        }
    }

    pub fn push(&mut self, i: usize, lambda: f64, residual: f64, next: Point) {
        self.controls.push(i);
        self.lambdas.push(lambda);
        self.step_residuals.push(residual);
        self.iterates.push(next);
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.controls.len()
    }

    pub fn last(&self) -> &Point {
        self.iterates.last().expect("a trace holds at least x_0")
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.max_residual)
    }

    pub fn records(&self) -> impl Iterator<Item = TraceRecord> + '_ {
        self.iterates.iter().enumerate().map(|(n, x)| TraceRecord {
            n,
            i: self.controls.get(n).copied(),
            lambda: self.lambdas.get(n).copied(),
            x: x.iter().copied().collect(),
            res: self.step_residuals.get(n).copied(),
        })
    }
}

/// One JSONL line. The last iterate carries no step fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res: Option<f64>,
}

pub fn write_trace_jsonl<W: Write>(trace: &Trace, mut out: W) -> Result<(), CfpError> {
    for record in trace.records() {
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_jsonl<R: BufRead>(input: R) -> Result<Trace, CfpError> {
    let mut trace: Option<Trace> = None;
    let mut pending: Option<(usize, f64, f64)> = None;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CfpError::TraceFormat { line: k + 1, message };
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let x = Point::from_vec(record.x);
        let expected_n = trace.as_ref().map_or(0, |t| t.iterates.len());
        if record.n != expected_n {
            return Err(bad(format!("expected n = {expected_n}, found {}", record.n)));
        }
        match (&mut trace, pending.take()) {
            (None, None) => trace = Some(Trace::start(x)),
            (Some(t), Some((i, lambda, res))) => {
                if x.len() != t.iterates[0].len() {
                    return Err(bad("point dimension changed".into()));
                }
                t.push(i, lambda, res, x);
            }
            (Some(_), None) => return Err(bad("previous record has no step fields".into())),
            (None, Some(_)) => unreachable!("steps are only pending after the first record"),
        }
        pending = match (record.i, record.lambda, record.res) {
            (Some(i), Some(lambda), Some(res)) => Some((i, lambda, res)),
            (None, None, None) => None,
            _ => return Err(bad("step fields i, lambda and res go together".into())),
        };
    }
    match (trace, pending) {
        (Some(t), None) => Ok(t),
        (None, _) => Err(CfpError::TraceFormat { line: 0, message: "empty trace".into() }),
        (Some(t), Some(_)) => Err(CfpError::TraceFormat {
            line: t.iterates.len(),
            message: "last record announces a step with no following iterate".into(),
        }),
    }
}

/// Recomputes every step from the recorded controls and relaxations and
/// returns the largest deviation from the stored iterates.
pub fn replay(trace: &Trace, ops: &[Operator]) -> Result<f64, CfpError> {
    let mut worst: f64 = 0.0;
    for n in 0..trace.steps() {
        let i = trace.controls[n];
        let op = ops.get(i.wrapping_sub(1)).ok_or_else(|| {
            CfpError::InvalidControl(format!("trace uses operator {i} but only {} exist", ops.len()))
        })?;
        let x = &trace.iterates[n];
        let next = x + (op.apply(x) - x) * trace.lambdas[n];
        worst = worst.max((next - &trace.iterates[n + 1]).norm());
    }
    Ok(worst)
}

/// Largest increase of `‖x_n - z‖` from one step to the next (zero or negative
/// for a Fejér monotone run), with the step where it happens.
pub fn fejer_check(trace: &Trace, z: &Point) -> (f64, usize) {
    let dist: Vec<f64> = trace.iterates.iter().map(|x| (x - z).norm()).collect();
    dist.windows(2)
        .enumerate()
        .map(|(n, w)| (w[1] - w[0], n))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}
