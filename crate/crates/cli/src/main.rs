use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use evfam::analysis::{self, AnalysisOptions, CertStatus, DEFAULT_LADDER, WITNESS_TOL};
use evfam::cfp::{self, OperatorSpec, Problem, RunStatus, Trace};
use evfam::{checks, demos};

const EXIT_INPUT: u8 = 1;
const EXIT_UNFINISHED: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "evfam", version, about = "Eventual families, set limits and almost-cyclic fixed-point runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on a problem file; writes trace.jsonl and summary.json.
    Solve {
        problem: PathBuf,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Override the residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Override the checkpoint stride.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Replay and analyze a trace; writes report.json, runs.csv and estimates.csv.
    Analyze {
        trace: PathBuf,
        problem: PathBuf,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Comma-separated, strictly decreasing ball radii.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Window length to test the follows criterion against; the control's
        /// constant plus one by default.
        #[arg(long)]
        window: Option<usize>,
        /// Only accept unrelaxed steps as witnesses.
        #[arg(long)]
        strict: bool,
        /// First iterate of the analyzed tail; half the trace by default.
        #[arg(long)]
        tail: Option<usize>,
        #[arg(long, default_value_t = 1e-5)]
        cert_tol: f64,
    },
    /// Run executable property suites.
    Check {
        /// intseq, families, multisets, setlimits, cfp, analysis or all.
        suite: String,
        #[arg(long, env = "EVFAM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        /// Also write check.json to this directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a worked example: counterexample, two-halfspaces or families-tour.
    Demo {
        name: String,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { problem, out, tol, max_iter, stride } => solve(&problem, &out, tol, max_iter, stride),
        Command::Analyze { trace, problem, out, eps, window, strict, tail, cert_tol } => {
            let opts = AnalysisOptions {
                relaxed: !strict,
                witness_tol: WITNESS_TOL,
                cert_tol,
                tail_start: tail,
                ..AnalysisOptions::default()
            };
            analyze(&trace, &problem, &out, eps.as_deref().unwrap_or(&DEFAULT_LADDER), window, &opts)
        }
        Command::Check { suite, seed, budget, out } => check(&suite, seed, budget, out.as_deref()),
        Command::Demo { name, out } => demo(&name, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn normalize(spec: &mut OperatorSpec) {
    match spec {
        OperatorSpec::Halfspace { a, b } | OperatorSpec::Hyperplane { a, b } => {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() && norm != 1.0 {
                a.iter_mut().for_each(|v| *v /= norm);
                *b /= norm;
            }
        }
        OperatorSpec::FirmlyNonexpansiveAvg { inner } | OperatorSpec::Relaxed { inner, .. } => normalize(inner),
        _ => {}
    }
}

/// Reads a problem and rescales half-space and hyperplane normals to unit length,
/// so residual tolerances read as distances.
fn load_problem(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut problem: Problem = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    problem.operators.iter_mut().for_each(normalize);
    Ok(problem)
}

#[derive(Serialize)]
struct Summary<'a> {
    status: RunStatus,
    iterations: usize,
    final_point: Vec<f64>,
    max_residual: f64,
    window: usize,
    checkpoints: &'a [cfp::Checkpoint],
    warnings: Vec<String>,
}

fn solve(path: &Path, out: &Path, tol: Option<f64>, max_iter: Option<usize>, stride: Option<usize>) -> Result<u8> {
    let mut problem = load_problem(path)?;
    if let Some(t) = tol {
        problem.stop.tol = t;
    }
    if let Some(m) = max_iter {
        problem.stop.max_iter = m;
    }
    if let Some(s) = stride {
        problem.stop.stride = s;
    }
    let inst = problem.compile()?;
    let mut warnings = Vec::new();
    if inst.relaxation.touches_boundary() {
        let w = "the relaxation schedule reaches 0 or 2; convergence is not guaranteed".to_string();
        eprintln!("warning: {w}");
        warnings.push(w);
    }
    let trace = cfp::acsa_run_instance(&inst)?;
    let mut jsonl = Vec::new();
    cfp::write_trace_jsonl(&trace, &mut jsonl)?;
    write_atomic(&out.join("trace.jsonl"), &jsonl)?;
    let status = trace.status.expect("a fresh run has a status");
    let summary = Summary {
        status,
        iterations: trace.steps(),
        final_point: trace.last().iter().copied().collect(),
        max_residual: cfp::max_residual(&inst.operators, trace.last()),
        window: inst.window,
        checkpoints: &trace.checkpoints,
        warnings,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "{:?} after {} iterations; max residual {:e}; final point {:?}",
        status, summary.iterations, summary.max_residual, summary.final_point
    );
    Ok(if status == RunStatus::Converged { 0 } else { EXIT_UNFINISHED })
}

#[derive(Serialize)]
struct Report {
    replay_deviation: f64,
    window: usize,
    followed_within_window: Vec<usize>,
    #[serde(flatten)]
    analysis: analysis::AnalysisReport,
}

fn runs_csv(trace: &Trace) -> String {
    let last = trace.last();
    let mut csv = String::from("n,i,lambda,res,dist_to_final\n");
    for (n, x) in trace.iterates.iter().enumerate() {
        let dist = (x - last).norm();
        if n < trace.steps() {
            csv += &format!("{n},{},{},{},{dist}\n", trace.controls[n], trace.lambdas[n], trace.step_residuals[n]);
        } else {
            csv += &format!("{n},,,,{dist}\n");
        }
    }
    csv
}

fn estimates_csv(estimate: &analysis::LimitEstimate) -> String {
    let mut csv = String::from("candidate,eps,visits,longest,second_longest,recurring\n");
    for (k, cand) in estimate.candidates.iter().enumerate() {
        for r in &cand.runs {
            csv += &format!("{k},{},{},{},{},{}\n", r.eps, r.visits, r.longest, r.second_longest, r.recurring);
        }
    }
    csv
}

fn analyze(trace_path: &Path, problem_path: &Path, out: &Path, ladder: &[f64], window: Option<usize>, opts: &AnalysisOptions) -> Result<u8> {
    let problem = load_problem(problem_path)?;
    let inst = problem.compile()?;
    let file = fs::File::open(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let trace = cfp::read_trace_jsonl(BufReader::new(file))?;
    if trace.iterates[0].len() != problem.dim {
        bail!("trace has dimension {} but the problem has {}", trace.iterates[0].len(), problem.dim);
    }
    if trace.iterates[0].as_slice() != problem.x0.as_slice() {
        bail!("replay error: the trace does not start at the problem's x0");
    }
    let deviation = cfp::replay(&trace, &inst.operators)?;
    if !(deviation <= 1e-12) {
        bail!("replay error: recorded iterates deviate from the problem's operators by {deviation:e}");
    }
    let report = analysis::analyze_trace(&trace, &inst.operators, ladder, opts)?;
    let window = window.unwrap_or(inst.window + 1);
    let report = Report {
        replay_deviation: deviation,
        window,
        followed_within_window: report.follows.iter().filter(|f| f.follows(window)).map(|f| f.operator).collect(),
        analysis: report,
    };
    write_json(&out.join("report.json"), &report)?;
    write_atomic(&out.join("runs.csv"), runs_csv(&trace).as_bytes())?;
    write_atomic(&out.join("estimates.csv"), estimates_csv(&report.analysis.estimate).as_bytes())?;
    let cert = &report.analysis.certification;
    println!(
        "{} of {} operators followed within window {window}; {} candidate(s); {:?}: {}",
        report.followed_within_window.len(),
        inst.operators.len(),
        report.analysis.estimate.candidates.len(),
        cert.status,
        cert.note
    );
    Ok(match cert.status {
        CertStatus::Certified => 0,
        CertStatus::Inconclusive => EXIT_UNFINISHED,
        CertStatus::Violation => EXIT_VIOLATION,
    })
}

fn check(suite: &str, seed: u64, budget: usize, out: Option<&Path>) -> Result<u8> {
    let reports = checks::run_suite(suite, seed, budget)?;
    for r in &reports {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        println!("{verdict} {} ({} cases, {:.2}s)", r.suite, r.cases, r.seconds);
        for note in &r.notes {
            println!("  note: {note}");
        }
        for f in &r.failures {
            println!("  witness: {f}");
        }
    }
    if let Some(dir) = out {
        write_json(&dir.join("check.json"), &serde_json::json!({ "seed": seed, "budget": budget, "suites": reports }))?;
    }
    Ok(if reports.iter().all(|r| r.passed()) { 0 } else { EXIT_INPUT })
}

fn demo(name: &str, out: &Path) -> Result<u8> {
    match name {
        "counterexample" => {
            let report = demos::counterexample(2000);
            report.summary.iter().for_each(|l| println!("{l}"));
            write_json(&out.join("counterexample.json"), &report)?;
        }
        "two-halfspaces" => {
            let (problem, trace, report) = demos::two_halfspaces();
            report.summary.iter().for_each(|l| println!("{l}"));
            write_json(&out.join("problem.json"), &problem)?;
            let mut jsonl = Vec::new();
            cfp::write_trace_jsonl(&trace, &mut jsonl)?;
            write_atomic(&out.join("trace.jsonl"), &jsonl)?;
            write_json(&out.join("report.json"), &report)?;
        }
        "families-tour" => {
            let lines = demos::families_tour();
            for l in &lines {
                println!(
                    "{:<18} eventual={:<5} co-eventual={:<5} filter={:<5} {}",
                    l.name, l.eventual, l.co_eventual, l.filter, l.note
                );
            }
            write_json(&out.join("families-tour.json"), &lines)?;
        }
        other => bail!("unknown demo {other:?}; expected one of {}", demos::DEMOS.join(", ")),
    }
    Ok(0)
}
