//! Executable property suites, one per module, driven by a seed and a case budget.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{self, AnalysisOptions, CertStatus, DEFAULT_LADDER, WITNESS_TOL};
use crate::cfp::{self, random, StopRule};
use crate::families::{
    self, all_families, closure_family, limit_set, random_family, star, FamilySpec, FiniteGround,
    FiniteTopology, SetArg,
};
use crate::intseq::{cogap, gap, EPSet, ExtNat};
use crate::multisets::{self, level_family, Multifamily};
use crate::sampling;
use crate::setlimits::{classical_limits, e_limit, verify_limit_theorem, LimitTheoremVerdict, SetSequence};

pub const SUITES: [&str; 6] = ["intseq", "families", "multisets", "setlimits", "cfp", "analysis"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            cases: 0,
            failures: Vec::new(),
            notes: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        // keep the first few witnesses; the first one is the smallest case seen
        if !ok && self.failures.len() < 5 {
            self.failures.push(describe());
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown suite {0:?}; expected one of intseq, families, multisets, setlimits, cfp, analysis, all")]
pub struct UnknownSuite(pub String);

/// Runs one suite, or every suite concurrently for `"all"`.
pub fn run_suite(name: &str, seed: u64, budget: usize) -> Result<Vec<SuiteReport>, UnknownSuite> {
    if name == "all" {
        return Ok(std::thread::scope(|scope| {
            let handles: Vec<_> = SUITES
                .iter()
                .map(|s| scope.spawn(move || run_one(s, seed, budget)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("suite thread panicked").expect("known suite"))
                .collect()
        }));
    }
    run_one(name, seed, budget).map(|r| vec![r])
}

fn run_one(name: &str, seed: u64, budget: usize) -> Result<SuiteReport, UnknownSuite> {
    let suite: fn(&mut SuiteReport, &mut ChaCha8Rng, usize) = match name {
        "intseq" => intseq_suite,
        "families" => families_suite,
        "multisets" => multisets_suite,
        "setlimits" => setlimits_suite,
        "cfp" => cfp_suite,
        "analysis" => analysis_suite,
        other => return Err(UnknownSuite(other.to_string())),
    };
    let mut report = SuiteReport::new(name);
    let started = Instant::now();
    if budget == 0 {
        report.notes.push("0 cases: the budget is 0, so the pass is vacuous".into());
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        suite(&mut report, &mut rng, budget);
    }
    report.seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Gap by scanning raw membership bits over `p + 4q` positions past the prefix.
pub fn scan_gap(prefix: &[bool], period: &[bool]) -> ExtNat {
    let bit = |n: usize| if n < prefix.len() { prefix[n] } else if period.is_empty() { false } else { period[(n - prefix.len()) % period.len()] };
    let (p, q) = (prefix.len(), period.len());
    if !period.contains(&true) {
        return ExtNat::Infinite;
    }
    let members: Vec<usize> = (p..p + 4 * q.max(1) + p).filter(|&n| bit(n)).collect();
    ExtNat::Finite(members.windows(2).map(|w| (w[1] - w[0] - 1) as u64).max().unwrap_or(0))
}

fn intseq_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    for _ in 0..budget {
        let (prefix, period) = sampling::raw_bits(rng, 8, 12);
        let s = EPSet::new(prefix.clone(), period.clone());
        let flipped: Vec<bool> = prefix.iter().map(|b| !b).collect();
        let flipped_period: Vec<bool> = if period.is_empty() { vec![true] } else { period.iter().map(|b| !b).collect() };
        r.check(gap(&s) == scan_gap(&prefix, &period), || format!("gap({s}) = {} but scan gives {}", gap(&s), scan_gap(&prefix, &period)));
        r.check(cogap(&s) == scan_gap(&flipped, &flipped_period), || format!("cogap({s}) disagrees with the complement scan"));
        let bigger = sampling::superset(rng, &s);
        r.check(gap(&s) >= gap(&bigger) && cogap(&s) <= cogap(&bigger), || format!("monotonicity fails for {s} ⊆ {bigger}"));
        let (add, remove) = sampling::finite_change(rng);
        let changed = s.finitely_change(&add, &remove).expect("disjoint changes");
        r.check(gap(&s) == gap(&changed) && cogap(&s) == cogap(&changed), || format!("finite change alters gap of {s}"));
        let text = s.to_string();
        r.check(text.parse::<EPSet>().ok().as_ref() == Some(&s), || format!("{text} does not round-trip"));
    }
}

fn families_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    for n in 0..=3 {
        let g = FiniteGround::letters(n);
        let fams = all_families(&g).expect("small ground");
        let trivial = fams.iter().filter(|f| f.classify(0, 0).is_trivial()).count();
        r.check(trivial == 2, || format!("{trivial} families on {n} points are both eventual and co-eventual"));
        for f in &fams {
            r.check(families::complement_duality_check(f).unwrap_or(false), || format!("complement duality fails on {n} points"));
        }
    }
    r.notes.push("exhaustive scan of all families on up to 3 points".into());
    let h = FamilySpec::cofinite().classify(0, 0);
    let g_report = FamilySpec::infinite().classify(0, 0);
    r.check(h.filter.holds && !g_report.filter.holds, || "H should be a filter and G not".into());
    for _ in 0..budget {
        let n = rng.gen_range(1..=4);
        let ground = FiniteGround::letters(n);
        let t = FiniteTopology::random(ground.clone(), rng);
        let f = random_family(&ground, rng);
        let lim = limit_set(&f, &t).expect("same ground");
        let via_closure = star(&closure_family(&f, &t).expect("same ground")).expect("finite ground");
        r.check(via_closure == SetArg::Finite(lim), || format!("star(cl F) ≠ limit set on {n} points"));
        r.check(t.is_closed(lim), || format!("limit set {} is not closed", ground.show(lim)));
    }
}

fn multisets_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    for n in 0..=2 {
        let g = FiniteGround::letters(n);
        for f in all_families(&g).expect("small ground") {
            let fr = f.classify(0, 0);
            let mr = Multifamily::Indicator(f).classify(0, 0);
            r.check(fr.eventual.holds == mr.increasing.holds && fr.co_eventual.holds == mr.decreasing.holds, || {
                format!("indicator bridge fails on {n} points")
            });
        }
    }
    let levels: Vec<FamilySpec> = [ExtNat::Finite(1), ExtNat::Finite(2), ExtNat::Finite(3), ExtNat::Infinite]
        .into_iter()
        .map(|c| level_family(&Multifamily::CoGap, c).expect("positive level"))
        .collect();
    for _ in 0..budget {
        let s = sampling::epset(rng);
        let bigger = sampling::superset(rng, &s);
        for (k, fam) in levels.iter().enumerate() {
            let (a, b) = (fam.contains(&SetArg::Nat(s.clone())), fam.contains(&SetArg::Nat(bigger.clone())));
            r.check(!matches!((a, b), (Ok(true), Ok(false))), || format!("level family {k} not upward closed at {s}"));
        }
        let n = rng.gen_range(1..=3);
        let ground = FiniteGround::letters(n);
        let t = FiniteTopology::random(ground.clone(), rng);
        // an increasing table: φ(S) = max over members of a random weight, plus |S|
        let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let table = ground.all_subsets().map(|s| {
            let w = s.indices().map(|x| weights[x]).max().unwrap_or(0);
            (s, ExtNat::Finite(w + s.len() as u64))
        });
        let m = Multifamily::explicit(ground, table).expect("valid table");
        let lim = multisets::multiset_limit(&m, &t).expect("increasing");
        let via = multisets::mstar(&multisets::closure(&m, &t).expect("increasing")).expect("finite");
        r.check(lim == via, || "multiset limit differs from star of the closure".into());
    }
}

fn random_sequence(rng: &mut ChaCha8Rng, constant_tail: bool) -> SetSequence {
    let n = rng.gen_range(1..=5);
    let g = FiniteGround::letters(n);
    let prefix: Vec<_> = (0..rng.gen_range(0..6)).map(|_| sampling::subset(rng, n)).collect();
    let len = if constant_tail { 1 } else { rng.gen_range(2..5) };
    let period: Vec<_> = (0..len).map(|_| sampling::subset(rng, n)).collect();
    SetSequence::from_sets(g, &prefix, &period).expect("valid sets")
}

/// The nontrivial finitely-insensitive families used for set limits.
pub fn limit_families() -> Vec<(String, FamilySpec)> {
    let mut out = vec![("G".to_string(), FamilySpec::infinite()), ("H".to_string(), FamilySpec::cofinite())];
    for c in [1, 2, 5] {
        out.push((format!("CoGapLevel({c})"), FamilySpec::cogap_level(ExtNat::Finite(c)).expect("positive level")));
    }
    out
}

fn setlimits_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    let fams = limit_families();
    for _ in 0..budget {
        let seq = random_sequence(rng, true);
        for (name, e) in &fams {
            r.check(verify_limit_theorem(&seq, e) == LimitTheoremVerdict::Holds, || format!("limit theorem fails for {name}"));
        }
        let seq = random_sequence(rng, false);
        let limits = classical_limits(&seq);
        for (name, e) in &fams {
            let got = e_limit(e, &seq).expect("symbolic family");
            r.check(limits.liminf.is_subset_of(got) && got.is_subset_of(limits.limsup), || format!("{name}-limit escapes [liminf, limsup]"));
        }
    }
}

fn cfp_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    for kind in random::KINDS {
        let mut fne_failures = 0;
        for _ in 0..budget {
            let op = random::operator(kind, 3, rng);
            let z = random::fixed_point(&op, rng);
            let x = random::point(rng, 3, 5.0);
            let y = random::point(rng, 3, 5.0);
            r.check(op.cutter_check(&x, &z).unwrap_or(false), || format!("{kind}: cutter inequality fails at x = {:?}", x.as_slice()));
            let lambda = rng.gen_range(0.0..=1.0);
            let relaxed = cfp::relax(&op, lambda).expect("λ in range");
            r.check(relaxed.cutter_check(&x, &z).unwrap_or(false), || format!("{kind}: relaxation by {lambda} is not a cutter"));
            let fne = cfp::fne_check(&op, &x, &y);
            if op.is_firmly_nonexpansive() {
                r.check(fne, || format!("{kind}: firmly nonexpansive inequality fails"));
            } else if !fne {
                fne_failures += 1;
            }
        }
        if fne_failures > 0 {
            r.notes.push(format!("{kind}: {fne_failures} pairs violate the firmly nonexpansive inequality (not expected to hold)"));
        }
    }
    let runs = (budget / 50).max(1);
    for _ in 0..runs {
        let stop = StopRule { tol: 1e-8, max_iter: 2000, stride: 10 };
        let (problem, center) = random::feasible_problem(rng, 4, 6, 0.1, stop);
        let trace = cfp::acsa_run(&problem).expect("valid problem");
        let (increase, n) = cfp::fejer_check(&trace, &center);
        r.check(increase <= 1e-10, || format!("distance to the interior point grows by {increase:e} at step {n}"));
        let ops = problem.compile().expect("valid problem").operators;
        r.check(cfp::replay(&trace, &ops).map(|d| d == 0.0).unwrap_or(false), || "replay does not reproduce the trace".into());
    }
}

fn analysis_suite(r: &mut SuiteReport, rng: &mut ChaCha8Rng, budget: usize) {
    let seq = analysis::counterexample_sequence(2000);
    let est = analysis::cogap_limit_estimate(&seq, &DEFAULT_LADDER, 1000, false).expect("valid ladder");
    let ok = est.candidates.len() == 1
        && est.candidates[0].point == vec![-1.0]
        && est.candidates[0].runs.iter().all(|s| s.recurring == 1);
    r.check(ok, || "counterexample estimate differs from a single candidate -1 with runs of 1".into());
    let runs = (budget / 50).max(1);
    for _ in 0..runs {
        let stop = StopRule { tol: 1e-8, max_iter: 3000, stride: 10 };
        let (problem, _) = random::feasible_problem(rng, 3, 5, 0.1, stop);
        let inst = problem.compile().expect("valid problem");
        let trace = cfp::acsa_run_instance(&inst).expect("valid problem");
        // a trace shorter than the window cannot exhibit one
        let long_enough = trace.steps() > inst.window;
        for (k, op) in inst.operators.iter().enumerate().filter(|_| long_enough) {
            let report = analysis::follows_check(&trace, op, k + 1, true, WITNESS_TOL);
            r.check(report.follows(inst.window + 1), || format!("operator {} not followed within window {}", k + 1, inst.window + 1));
        }
        let report = analysis::analyze_trace(&trace, &inst.operators, &DEFAULT_LADDER, &AnalysisOptions::default()).expect("valid ladder");
        let fine = report.certification.status != CertStatus::Violation;
        r.check(fine, || format!("certification reports a violation: {}", report.certification.note));
        for cand in &report.estimate.candidates {
            let monotone = cand.runs.windows(2).all(|w| w[1].recurring <= w[0].recurring);
            r.check(monotone, || "run estimates grow as ε shrinks".into());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_on_a_small_budget() {
        for report in run_suite("all", 7, 40).unwrap() {
            assert!(report.passed(), "{}: {:?}", report.suite, report.failures);
            assert!(report.cases > 0);
        }
    }

    #[test]
    fn zero_budget_is_vacuous() {
        let reports = run_suite("all", 1, 0).unwrap();
        assert_eq!(reports.len(), SUITES.len());
        assert!(reports.iter().all(|r| r.passed() && r.cases == 0 && !r.notes.is_empty()));
        assert!(run_suite("nope", 1, 1).is_err());
    }

    #[test]
    fn scan_gap_examples() {
        assert_eq!(scan_gap(&[], &[true, false, false]), ExtNat::Finite(2));
        assert_eq!(scan_gap(&[true, true], &[false]), ExtNat::Infinite);
        assert_eq!(scan_gap(&[false, false, false, true], &[true]), ExtNat::Finite(0));
    }
}
