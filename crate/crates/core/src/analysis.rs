//! Reading solver traces through the family calculus.
//!
//! A trace follows an operator `T` with respect to a family `E` when every
//! index set in `E` contains a pair `p, q` with `x_p = T(x_q)`. From a finite
//! trace we check a stronger sufficient condition: every window of `c + 1`
//! consecutive indices holds an adjacent pair `q, q + 1` with
//! `x_{q+1} = T(x_q)`. That settles every index set whose coGap is at least
//! `c + 1` inside the analyzed range.
//!
//! Multiplicities of limit candidates are estimated from runs of consecutive
//! visits to shrinking balls, a finite stand-in for coGap of the visit sets.

use std::ops::Range;

use serde::Serialize;

use crate::cfp::{max_residual, Operator, Point, RunStatus, Trace};
use crate::intseq::ExtNat;

/// Balls used for limit estimates, from coarse to fine.
pub const DEFAULT_LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Tolerance for `x_{q+1} = T(x_q)`; recorded steps replay exactly.
pub const WITNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Witness steps may use the recorded relaxation.
    AdjacentRelaxed,
    /// Witness steps must be unrelaxed applications of `T`.
    AdjacentStrict,
}

#[derive(Debug, Clone, Serialize)]
pub struct FollowsReport {
    /// 1-based operator index.
    pub operator: usize,
    pub criterion: Criterion,
    /// Iterate indices analyzed.
    pub range: (usize, usize),
    /// Smallest `c` such that every `c + 1` consecutive indices hold a witness pair.
    pub min_c: Option<usize>,
    /// Pairs `(q, p)` with `p = q + 1` and `x_p = T(x_q)` within tolerance.
    #[serde(skip)]
    pub witnesses: Vec<(usize, usize)>,
    pub witness_count: usize,
}

impl FollowsReport {
    /// Whether the window criterion holds with window length `c`.
    pub fn follows(&self, c: usize) -> bool {
        self.min_c.is_some_and(|m| m <= c)
    }
}

/// Checks the adjacent-witness criterion for `op` over the whole trace.
pub fn follows_check(trace: &Trace, op: &Operator, operator: usize, relaxed: bool, tol: f64) -> FollowsReport {
    follows_check_range(trace, op, operator, relaxed, tol, 0..trace.iterates.len())
}

/// As [`follows_check`], over the iterates with indices in `range`.
pub fn follows_check_range(
    trace: &Trace,
    op: &Operator,
    operator: usize,
    relaxed: bool,
    tol: f64,
    range: Range<usize>,
) -> FollowsReport {
    let end = range.end.min(trace.iterates.len());
    let start = range.start.min(end);
    let steps = start..end.saturating_sub(1).max(start);
    let is_witness = |q: usize| {
        let (x, next) = (&trace.iterates[q], &trace.iterates[q + 1]);
        let lambda = trace.lambdas[q];
        let image = if relaxed {
            x + (op.apply(x) - x) * lambda
        } else if lambda == 1.0 {
            op.apply(x)
        } else {
            return false;
        };
        (next - image).norm() <= tol
    };
    let witnesses: Vec<(usize, usize)> = steps.clone().filter(|&q| is_witness(q)).map(|q| (q, q + 1)).collect();
    // need[s]: positions from step s up to and including the next witness
    let mut need = vec![None; steps.len()];
    let mut next: Option<usize> = None;
    for q in steps.clone().rev() {
        if witnesses.binary_search_by_key(&q, |w| w.0).is_ok() {
            next = Some(q);
        }
        need[q - start] = next.map(|w| w - q + 1);
    }
    FollowsReport {
        operator,
        criterion: if relaxed { Criterion::AdjacentRelaxed } else { Criterion::AdjacentStrict },
        range: (start, end.saturating_sub(1).max(start)),
        min_c: crate::cfp::min_window(&need),
        witness_count: witnesses.len(),
        witnesses,
    }
}

/// Greedy `ε`-clustering of `points[n0..]`. A cluster is kept when the tail
/// enters it at least three separate times, or when it holds the final point
/// for at least two steps; in the latter case the final point represents it.
pub fn accumulation_points(points: &[Point], eps: f64, n0: usize) -> Vec<Point> {
    let tail = &points[n0.min(points.len())..];
    let mut reps: Vec<Point> = Vec::new();
    let mut labels = Vec::with_capacity(tail.len());
    for x in tail {
        let label = match reps.iter().position(|r| (r - x).norm() <= eps) {
            Some(k) => k,
            None => {
                reps.push(x.clone());
                reps.len() - 1
            }
        };
        labels.push(label);
    }
    let mut entries = vec![0usize; reps.len()];
    for (k, &label) in labels.iter().enumerate() {
        if k == 0 || labels[k - 1] != label {
            entries[label] += 1;
        }
    }
    let final_label = labels.last().copied();
    let final_run = labels.iter().rev().take_while(|&&l| Some(l) == final_label).count();
    reps.into_iter()
        .enumerate()
        .filter_map(|(k, rep)| {
            if Some(k) == final_label && final_run >= 2 {
                Some(tail[tail.len() - 1].clone())
            } else {
                (entries[k] >= 3).then_some(rep)
            }
        })
        .collect()
}

/// Run lengths of consecutive tail indices whose point lies within `eps` of `x`.
fn runs(points: &[Point], x: &Point, eps: f64, n0: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut current = 0;
    for p in &points[n0.min(points.len())..] {
        if (p - x).norm() <= eps {
            current += 1;
        } else if current > 0 {
            out.push(current);
            current = 0;
        }
    }
    if current > 0 {
        out.push(current);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStat {
    pub eps: f64,
    pub visits: usize,
    pub longest: usize,
    pub second_longest: usize,
    /// `max(second_longest, longest / 2)`: the longest run length that occurs
    /// at least twice, counting two halves of one long run.
    pub recurring: usize,
}

fn run_stat(points: &[Point], x: &Point, eps: f64, n0: usize) -> RunStat {
    let mut lens = runs(points, x, eps, n0);
    lens.sort_unstable_by(|a, b| b.cmp(a));
    let longest = lens.first().copied().unwrap_or(0);
    let second_longest = lens.get(1).copied().unwrap_or(0);
    RunStat {
        eps,
        visits: lens.len(),
        longest,
        second_longest,
        recurring: second_longest.max(longest / 2),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateEstimate {
    pub point: Vec<f64>,
    pub runs: Vec<RunStat>,
    pub multiplicity: ExtNat,
    /// Finite traces only bound the multiplicity from below unless convergence is certified.
    pub lower_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitEstimate {
    pub ladder: Vec<f64>,
    pub tail_start: usize,
    pub candidates: Vec<CandidateEstimate>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("the ε ladder is empty")]
    EmptyLadder,
    #[error("the ε ladder must be positive and strictly decreasing")]
    BadLadder,
}

/// Multiplicity estimates for accumulation points of `points[n0..]`.
///
/// Candidates come from [`accumulation_points`] at the finest `ε`. When
/// `converged` is set the final point is the only candidate and gets `∞`.
pub fn cogap_limit_estimate(
    points: &[Point],
    ladder: &[f64],
    n0: usize,
    converged: bool,
) -> Result<LimitEstimate, AnalysisError> {
    let (&finest, _) = ladder.split_last().ok_or(AnalysisError::EmptyLadder)?;
    if ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::BadLadder);
    }
    let candidates = match (converged, points.last()) {
        (true, Some(last)) => vec![last.clone()],
        (true, None) => Vec::new(),
        (false, _) => accumulation_points(points, finest, n0),
    };
    let candidates = candidates
        .into_iter()
        .map(|x| {
            let runs: Vec<RunStat> = ladder.iter().map(|&eps| run_stat(points, &x, eps, n0)).collect();
            let multiplicity = if converged {
                ExtNat::Infinite
            } else {
                let least = runs.iter().map(|r| r.recurring).min().unwrap_or(0);
                ExtNat::Finite(least as u64)
            };
            CandidateEstimate {
                point: x.iter().copied().collect(),
                runs,
                multiplicity,
                lower_bound: !converged,
            }
        })
        .collect();
    Ok(LimitEstimate {
        ladder: ladder.to_vec(),
        tail_start: n0,
        candidates,
    })
}

/// The final point, if every tail point from `n0` on lies within `eps` of it.
pub fn classical_limit(points: &[Point], eps: f64, n0: usize) -> Option<Point> {
    let last = points.last()?;
    points[n0.min(points.len())..]
        .iter()
        .all(|p| (p - last).norm() <= eps)
        .then(|| last.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    Certified,
    Inconclusive,
    Violation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateCert {
    pub point: Vec<f64>,
    /// `(operator, ‖T(y) - y‖)` for every operator the trace follows.
    pub residuals: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub status: CertStatus,
    pub tol: f64,
    pub candidates: Vec<CandidateCert>,
    /// `(candidate index, operator, residual)` above tolerance.
    pub violations: Vec<(usize, usize, f64)>,
    pub note: String,
}

/// Every candidate must be fixed by every operator the trace follows. A
/// failure on a converged trace is a violation; otherwise it is inconclusive.
pub fn certify_fixed_points(
    ops: &[Operator],
    follows: &[FollowsReport],
    candidates: &[Point],
    tol: f64,
    converged: bool,
) -> Certification {
    let followed: Vec<usize> = follows.iter().filter(|r| r.min_c.is_some()).map(|r| r.operator).collect();
    let certs: Vec<CandidateCert> = candidates
        .iter()
        .map(|y| CandidateCert {
            point: y.iter().copied().collect(),
            residuals: followed.iter().map(|&i| (i, ops[i - 1].residual(y))).collect(),
        })
        .collect();
    let violations: Vec<(usize, usize, f64)> = certs
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.residuals.iter().filter(|r| !(r.1 <= tol)).map(move |&(i, r)| (k, i, r)))
        .collect();
    let (status, note) = if candidates.is_empty() {
        (CertStatus::Inconclusive, "no accumulation point found".to_string())
    } else if followed.is_empty() {
        (CertStatus::Inconclusive, "the trace follows no operator".to_string())
    } else if violations.is_empty() {
        (CertStatus::Certified, format!("{} candidate(s) fixed by {} operator(s)", certs.len(), followed.len()))
    } else if converged {
        (CertStatus::Violation, "a converged trace has a candidate that is not a fixed point".to_string())
    } else {
        (CertStatus::Inconclusive, "the trace has not converged; residuals above tolerance".to_string())
    };
    Certification { status, tol, candidates: certs, violations, note }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub relaxed: bool,
    pub witness_tol: f64,
    pub cert_tol: f64,
    /// Tail start; half the trace when `None`.
    pub tail_start: Option<usize>,
    /// A trace read from disk counts as converged when its final iterate has
    /// every residual at most this.
    pub converged_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            relaxed: true,
            witness_tol: WITNESS_TOL,
            cert_tol: 1e-5,
            tail_start: None,
            converged_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub converged: bool,
    pub follows: Vec<FollowsReport>,
    pub estimate: LimitEstimate,
    pub classical_limit: Option<Vec<f64>>,
    pub certification: Certification,
}

/// Follows checks for every operator, limit estimates and certification.
pub fn analyze_trace(trace: &Trace, ops: &[Operator], ladder: &[f64], opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let converged = match trace.status {
        Some(status) => status == RunStatus::Converged,
        None => max_residual(ops, trace.last()) <= opts.converged_tol,
    };
    let follows: Vec<FollowsReport> = ops
        .iter()
        .enumerate()
        .map(|(k, op)| follows_check(trace, op, k + 1, opts.relaxed, opts.witness_tol))
        .collect();
    let n0 = opts.tail_start.unwrap_or(trace.iterates.len() / 2);
    let estimate = cogap_limit_estimate(&trace.iterates, ladder, n0, converged)?;
    let candidates: Vec<Point> = estimate.candidates.iter().map(|c| Point::from_vec(c.point.clone())).collect();
    let certification = certify_fixed_points(ops, &follows, &candidates, opts.cert_tol, converged);
    let finest = *ladder.last().ok_or(AnalysisError::EmptyLadder)?;
    Ok(AnalysisReport {
        converged,
        follows,
        classical_limit: classical_limit(&trace.iterates, finest, n0).map(|p| p.iter().copied().collect()),
        estimate,
        certification,
    })
}

/// The sequence `x_{2n} = n`, `x_{2n-1} = -1` for indices `1..=len`, as points of ℝ.
pub fn counterexample_sequence(len: usize) -> Vec<Point> {
    (1..=len)
        .map(|n| Point::from_element(1, if n % 2 == 0 { (n / 2) as f64 } else { -1.0 }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfp::{acsa_run, random, OperatorSpec, Problem, StopRule};
    use crate::intseq::cogap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn two_halfspaces() -> (Problem, Vec<Operator>) {
        let problem: Problem = serde_json::from_value(serde_json::json!({
            "dim": 2,
            "operators": [
                {"kind": "halfspace", "a": [-1.0, 0.0], "b": 0.0},
                {"kind": "halfspace", "a": [0.0, -1.0], "b": 0.0}
            ],
            "x0": [-1.0, -1.0],
            "stop": {"tol": 0.0, "max_iter": 2, "stride": 1}
        }))
        .unwrap();
        let ops = problem.compile().unwrap().operators;
        (problem, ops)
    }

    // smallest c with a witness among every c consecutive steps, by direct scan
    fn brute_min_c(witness: &[bool]) -> Option<usize> {
        let n = witness.len();
        (1..=n).find(|&c| (0..=n - c).all(|s| witness[s..s + c].iter().any(|&w| w)))
    }

    #[test]
    fn follows_on_cyclic_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let stop = StopRule { tol: 1e-9, max_iter: 400, stride: 10 };
        let (mut problem, _) = random::feasible_problem(&mut rng, 3, 4, 0.1, stop);
        problem.control = crate::cfp::ControlSpec::Cyclic;
        let trace = acsa_run(&problem).unwrap();
        let ops = problem.compile().unwrap().operators;
        for (k, op) in ops.iter().enumerate() {
            let report = follows_check(&trace, op, k + 1, true, WITNESS_TOL);
            assert!(report.min_c.unwrap() <= 4, "{report:?}");
        }
    }

    #[test]
    fn single_operator_and_constant_traces() {
        let op = Operator::new(OperatorSpec::Ball { center: vec![0.0], radius: 1.0 }).unwrap();
        let mut trace = Trace::start(p(&[5.0]));
        for x in [1.0, 1.0, 1.0] {
            trace.push(1, 1.0, 0.0, p(&[x]));
        }
        let report = follows_check(&trace, &op, 1, false, WITNESS_TOL);
        assert_eq!(report.min_c, Some(1));
        assert_eq!(report.witness_count, 3);
        let constant = Trace { iterates: vec![p(&[0.5]); 4], ..trace.clone() };
        let other = Operator::new(OperatorSpec::Halfspace { a: vec![1.0], b: 1.0 }).unwrap();
        assert_eq!(follows_check(&constant, &other, 2, true, WITNESS_TOL).min_c, Some(1));
        let mut relaxed = trace.clone();
        relaxed.lambdas = vec![0.5; 3];
        assert_eq!(follows_check(&relaxed, &op, 1, false, WITNESS_TOL).min_c, None);
    }

    #[test]
    fn min_c_matches_window_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let op = Operator::new(OperatorSpec::Halfspace { a: vec![1.0], b: 0.0 }).unwrap();
        for _ in 0..200 {
            let len = rand::Rng::gen_range(&mut rng, 1..30);
            // random iterates in {-1, 0, 1}; T maps 1 to 0 and fixes the others
            let values: Vec<f64> = (0..=len).map(|_| rand::Rng::gen_range(&mut rng, -1i32..=1) as f64).collect();
            let mut trace = Trace::start(p(&[values[0]]));
            for &x in &values[1..] {
                trace.push(1, 1.0, 0.0, p(&[x]));
            }
            let report = follows_check(&trace, &op, 1, false, WITNESS_TOL);
            let actual: Vec<bool> = (0..len)
                .map(|q| (trace.iterates[q + 1].clone() - op.apply(&trace.iterates[q])).norm() <= WITNESS_TOL)
                .collect();
            assert_eq!(report.min_c, brute_min_c(&actual));
        }
    }

    #[test]
    fn window_criterion_covers_high_cogap_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let stop = StopRule { tol: 0.0, max_iter: 120, stride: 10 };
        let (problem, _) = random::feasible_problem(&mut rng, 3, 5, 0.1, stop);
        let trace = acsa_run(&problem).unwrap();
        let ops = problem.compile().unwrap().operators;
        let horizon = trace.iterates.len() as u64;
        for (k, op) in ops.iter().enumerate() {
            let report = follows_check(&trace, op, k + 1, true, WITNESS_TOL);
            let c = report.min_c.unwrap() as u64;
            for _ in 0..100 {
                // trace index n is the element n + 1 of ℕ
                let s = crate::sampling::epset(&mut rng);
                if cogap(&s) < ExtNat::Finite(c + 1) {
                    continue;
                }
                let run_start = (1..=horizon.saturating_sub(c)).find(|&a| (a..=a + c).all(|n| s.member(n)));
                let Some(a) = run_start else { continue };
                let inside = |q: usize| s.member(q as u64 + 1) && s.member(q as u64 + 2);
                let found = report.witnesses.iter().any(|&(q, _)| inside(q) && q as u64 + 1 >= a && q as u64 + 2 <= a + c);
                assert!(found, "no witness in run at {a} for operator {}", k + 1);
            }
        }
    }

    #[test]
    fn accumulation_examples() {
        let (problem, _) = two_halfspaces();
        let trace = acsa_run(&problem).unwrap();
        let mut points = trace.iterates.clone();
        points.extend(std::iter::repeat(p(&[0.0, 0.0])).take(5));
        assert_eq!(accumulation_points(&points, 1e-3, 1), vec![p(&[0.0, 0.0])]);
        let alternating: Vec<Point> = (0..20).map(|n| p(&[if n % 2 == 0 { 1.0 } else { -1.0 }])).collect();
        assert_eq!(accumulation_points(&alternating, 0.1, 0).len(), 2);
        let constant = vec![p(&[3.0]); 10];
        assert_eq!(accumulation_points(&constant, 0.1, 5), vec![p(&[3.0])]);
    }

    #[test]
    fn counterexample_estimate() {
        let seq = counterexample_sequence(2000);
        let est = cogap_limit_estimate(&seq, &DEFAULT_LADDER, 1000, false).unwrap();
        assert_eq!(est.candidates.len(), 1);
        let cand = &est.candidates[0];
        assert_eq!(cand.point, vec![-1.0]);
        assert!(cand.runs.iter().all(|r| r.recurring == 1));
        assert_eq!(cand.multiplicity, ExtNat::Finite(1));
        assert!(classical_limit(&seq, 1e-1, 1000).is_none());
    }

    #[test]
    fn convergent_and_constant_estimates() {
        let seq: Vec<Point> = (0..200).map(|n| p(&[2.0 + 0.5f64.powi(n)])).collect();
        let est = cogap_limit_estimate(&seq, &DEFAULT_LADDER, 100, true).unwrap();
        assert_eq!(est.candidates[0].multiplicity, ExtNat::Infinite);
        assert!((est.candidates[0].point[0] - 2.0).abs() < 1e-12);
        let constant = vec![p(&[1.0]); 50];
        let est = cogap_limit_estimate(&constant, &DEFAULT_LADDER, 25, true).unwrap();
        assert_eq!(est.candidates.len(), 1);
        assert_eq!(est.candidates[0].multiplicity, ExtNat::Infinite);
        assert_eq!(cogap_limit_estimate(&constant, &[], 0, true).unwrap_err(), AnalysisError::EmptyLadder);
        assert_eq!(cogap_limit_estimate(&constant, &[1e-2, 1e-1], 0, true).unwrap_err(), AnalysisError::BadLadder);
    }

    #[test]
    fn certification_examples() {
        let (problem, ops) = two_halfspaces();
        let trace = acsa_run(&problem).unwrap();
        let report = analyze_trace(&trace, &ops, &DEFAULT_LADDER, &AnalysisOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.certification.status, CertStatus::Certified);
        assert_eq!(report.certification.candidates[0].point, vec![0.0, 0.0]);
        assert!(report.certification.candidates[0].residuals.iter().all(|r| r.1 == 0.0));

        let mut constant = Trace::start(p(&[1.0, 1.0]));
        for n in 0..6 {
            constant.push(n % 2 + 1, 1.0, 0.0, p(&[1.0, 1.0]));
        }
        let report = analyze_trace(&constant, &ops, &DEFAULT_LADDER, &AnalysisOptions::default()).unwrap();
        assert_eq!(report.certification.status, CertStatus::Certified);

        let follows: Vec<FollowsReport> =
            ops.iter().enumerate().map(|(k, op)| follows_check(&trace, op, k + 1, true, WITNESS_TOL)).collect();
        let bad = certify_fixed_points(&ops, &follows, &[p(&[-1.0, 0.0])], 1e-5, true);
        assert_eq!(bad.status, CertStatus::Violation);
        assert_eq!(bad.violations, vec![(0, 1, 1.0)]);
        let unsure = certify_fixed_points(&ops, &follows, &[p(&[-1.0, 0.0])], 1e-5, false);
        assert_eq!(unsure.status, CertStatus::Inconclusive);
    }

    proptest::proptest! {
        #[test]
        fn run_estimate_shrinks_with_eps(seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Point> = (0..200).map(|_| random::point(&mut rng, 1, 0.2)).collect();
            let ladder = [0.2, 0.1, 0.05, 0.01];
            let x = points[0].clone();
            let stats: Vec<usize> = ladder.iter().map(|&e| run_stat(&points, &x, e, 0).recurring).collect();
            proptest::prop_assert!(stats.windows(2).all(|w| w[1] <= w[0]), "{:?}", stats);
        }

        #[test]
        fn followed_candidates_are_fixed(seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stop = StopRule { tol: 1e-8, max_iter: 3000, stride: 10 };
            let (problem, _) = random::feasible_problem(&mut rng, 3, 4, 0.1, stop);
            let trace = acsa_run(&problem).unwrap();
            let ops = problem.compile().unwrap().operators;
            let report = analyze_trace(&trace, &ops, &DEFAULT_LADDER, &AnalysisOptions::default()).unwrap();
            for cand in &report.certification.candidates {
                for &(_, r) in &cand.residuals {
                    proptest::prop_assert!(!report.converged || r <= 10.0 * 1e-5);
                }
            }
        }
    }
}
