//! Worked examples, reproduced end to end.

use serde::Serialize;

use crate::analysis::{self, AnalysisOptions, AnalysisReport, LimitEstimate, DEFAULT_LADDER};
use crate::cfp::{self, OperatorSpec, Problem, StopRule, Trace};
use crate::families::FamilySpec;
use crate::intseq::ExtNat;
use crate::multisets::Multifamily;

pub const DEMOS: [&str; 3] = ["counterexample", "two-halfspaces", "families-tour"];

/// The sequence `x_{2n} = n`, `x_{2n-1} = -1`: a coGap-limit candidate that
/// is not a limit.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub length: usize,
    pub estimate: LimitEstimate,
    pub classical_limit: Option<Vec<f64>>,
    pub summary: Vec<String>,
}

pub fn counterexample(length: usize) -> CounterexampleReport {
    let seq = analysis::counterexample_sequence(length);
    let n0 = length / 2;
    let estimate = analysis::cogap_limit_estimate(&seq, &DEFAULT_LADDER, n0, false).expect("default ladder is valid");
    let classical = analysis::classical_limit(&seq, DEFAULT_LADDER[0], n0);
    let mut summary = vec![format!("x_1..x_{length} with x_2n = n and x_2n-1 = -1; tail from n = {n0}")];
    for cand in &estimate.candidates {
        let runs: Vec<String> = cand.runs.iter().map(|r| format!("ε={:e}: {}", r.eps, r.recurring)).collect();
        summary.push(format!("candidate {:?}: recurring runs {}; multiplicity ≥ {}", cand.point, runs.join(", "), cand.multiplicity));
    }
    summary.push(match &classical {
        Some(x) => format!("classical limit {x:?}"),
        None => "no classical limit".into(),
    });
    summary.push("the visits to -1 are the odd indices, whose coGap is 1".into());
    CounterexampleReport {
        length,
        estimate,
        classical_limit: classical.map(|p| p.iter().copied().collect()),
        summary,
    }
}

/// `u₁ >= 0` and `u₂ >= 0` from `(-1, -1)`, cyclic control, `λ ≡ 1`.
pub fn two_halfspaces_problem() -> Problem {
    Problem {
        dim: 2,
        operators: vec![
            OperatorSpec::Halfspace { a: vec![-1.0, 0.0], b: 0.0 },
            OperatorSpec::Halfspace { a: vec![0.0, -1.0], b: 0.0 },
        ],
        control: cfp::ControlSpec::Cyclic,
        relaxation: cfp::RelaxationSchedule::Constant { value: 1.0 },
        x0: vec![-1.0, -1.0],
        stop: StopRule { tol: 1e-12, max_iter: 100, stride: 1 },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoHalfspacesReport {
    pub iterates: Vec<Vec<f64>>,
    pub steps: usize,
    pub analysis: AnalysisReport,
    pub summary: Vec<String>,
}

pub fn two_halfspaces() -> (Problem, Trace, TwoHalfspacesReport) {
    let problem = two_halfspaces_problem();
    let inst = problem.compile().expect("demo problem is valid");
    let trace = cfp::acsa_run_instance(&inst).expect("demo problem is valid");
    let analysis = analysis::analyze_trace(&trace, &inst.operators, &DEFAULT_LADDER, &AnalysisOptions::default())
        .expect("default ladder is valid");
    let iterates: Vec<Vec<f64>> = trace.iterates.iter().map(|x| x.iter().copied().collect()).collect();
    let mut summary: Vec<String> = iterates.iter().enumerate().map(|(n, x)| format!("x_{n} = {x:?}")).collect();
    summary.push(format!(
        "{:?} after {} steps; certification: {:?}",
        trace.status.expect("fresh run"),
        trace.steps(),
        analysis.certification.status
    ));
    let report = TwoHalfspacesReport { steps: trace.steps(), iterates, analysis, summary };
    (problem, trace, report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TourLine {
    pub name: String,
    pub eventual: bool,
    pub co_eventual: bool,
    pub filter: bool,
    pub finitely_insensitive: Option<bool>,
    pub note: String,
}

/// Classifications of the standard families and multifamilies on ℕ.
pub fn families_tour() -> Vec<TourLine> {
    let mut lines = Vec::new();
    let notes = [
        ("H (cofinite sets)", FamilySpec::cofinite(), "limits along H are ordinary limits, unique in a Hausdorff space"),
        ("G (infinite sets)", FamilySpec::infinite(), "limits along G are accumulation points; not unique since G is not a filter"),
        ("CoGapLevel(1)", FamilySpec::cogap_level(ExtNat::ONE).expect("positive"), "same sets as G"),
        ("CoGapLevel(2)", FamilySpec::cogap_level(ExtNat::Finite(2)).expect("positive"), "recurring runs of length 2"),
        ("CoGapLevel(inf)", FamilySpec::cogap_level(ExtNat::Infinite).expect("positive"), "arbitrarily long runs"),
    ];
    for (name, fam, note) in notes {
        let r = fam.classify(0, 0);
        lines.push(TourLine {
            name: name.into(),
            eventual: r.eventual.holds,
            co_eventual: r.co_eventual.holds,
            filter: r.filter.holds,
            finitely_insensitive: r.finitely_insensitive.map(|v| v.holds),
            note: match r.filter.witness {
                Some(w) if !r.filter.holds => format!("{note}; not a filter: {w}"),
                _ => note.into(),
            },
        });
    }
    for (name, m) in [("Gap", Multifamily::Gap), ("CoGap", Multifamily::CoGap)] {
        let r = m.classify(0, 0);
        lines.push(TourLine {
            name: name.into(),
            eventual: r.increasing.holds,
            co_eventual: r.decreasing.holds,
            filter: false,
            finitely_insensitive: r.finitely_insensitive.map(|v| v.holds),
            note: "multifamily: eventual/co-eventual read as increasing/decreasing".into(),
        });
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CertStatus;

    #[test]
    fn counterexample_report() {
        let r = counterexample(2000);
        assert_eq!(r.estimate.candidates.len(), 1);
        assert_eq!(r.estimate.candidates[0].point, vec![-1.0]);
        assert_eq!(r.estimate.candidates[0].multiplicity, ExtNat::ONE);
        assert!(r.classical_limit.is_none());
        assert!(r.summary.iter().any(|l| l == "no classical limit"));
    }

    #[test]
    fn two_halfspaces_report() {
        let (_, trace, r) = two_halfspaces();
        assert_eq!(r.steps, 2);
        assert_eq!(r.iterates[2], vec![0.0, 0.0]);
        assert_eq!(trace.status, Some(cfp::RunStatus::Converged));
        assert_eq!(r.analysis.certification.status, CertStatus::Certified);
    }

    #[test]
    fn tour_matches_known_classifications() {
        let lines = families_tour();
        let h = &lines[0];
        let g = &lines[1];
        assert!(h.filter && h.eventual && h.finitely_insensitive == Some(true));
        assert!(!g.filter && g.eventual && g.finitely_insensitive == Some(true));
        assert!(lines.iter().find(|l| l.name == "Gap").is_some_and(|l| l.co_eventual && !l.eventual));
    }
}
