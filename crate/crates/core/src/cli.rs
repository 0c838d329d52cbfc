//! The `senscheck` command line: parse, infer or check, lower, decide.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ast::{Loc, Type};
use crate::backend::{check_tasks, lower, overall, CheckConfig, SolverConfig, TaskResult, Verdict, DEFAULT_BUDGET};
use crate::constraints::Mode;
use crate::dynsem::{instantiate_first_order, lipschitz_test, PrimRegistry};
use crate::syntax::{parse_prelude, parse_program_with_prelude, pretty_type, ParseOptions, SourceProgram};
use crate::typing::{check, infer_closed, InferOptions, InferenceResult, Prelude};

pub const EXIT_VALID: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Index values used by `--fuzz`.
pub const FUZZ_INSTANTIATIONS: [u64; 3] = [0, 1, 5];

const FUZZ_FUEL: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "senscheck", version, about = "Sensitivity type checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a program and decide every constraint.
    Check(CheckArgs),
    /// Print the inferred type of a program.
    Infer(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    pub file: PathBuf,
    /// Accept `max`, `sup` and `scase` in annotations.
    #[arg(long)]
    pub allow_extended_annotations: bool,
    /// Extra `primitive` declarations.
    #[arg(long, value_name = "FILE")]
    pub prelude: Option<PathBuf>,
    /// Print a JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mixed,
    Uniform,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Mixed => Mode::Mixed,
            ModeArg::Uniform => Mode::Uniform,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "mixed")]
    pub mode: ModeArg,
    /// Split constraints into alternation-free obligations (default).
    #[arg(long, overrides_with = "no_simplify")]
    pub simplify: bool,
    /// Translate constraints directly.
    #[arg(long, overrides_with = "simplify")]
    pub no_simplify: bool,
    /// Solver command line; reads SMT-LIB on stdin.
    #[arg(long, value_name = "CMD")]
    pub solver: Option<String>,
    /// Use only the internal checks.
    #[arg(long, conflicts_with = "solver")]
    pub no_solver: bool,
    /// Per-query solver timeout in seconds.
    #[arg(long, value_name = "SECS", default_value_t = 10.0)]
    pub timeout: f64,
    /// Write every solver query to DIR.
    #[arg(long, value_name = "DIR")]
    pub emit_smt: Option<PathBuf>,
    /// Sample N input pairs per index instantiation and compare against the
    /// checked bound.
    #[arg(long, value_name = "N")]
    pub fuzz: Option<usize>,
    /// Write the fuzzing report as JSON to FILE.
    #[arg(long, value_name = "FILE", requires = "fuzz")]
    pub fuzz_json: Option<PathBuf>,
    /// Worker threads for the backend; defaults to the number of processors.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed for the falsifier and the fuzzer.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

/// A located error message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub loc: Option<Loc>,
    pub message: String,
}

impl Diagnostic {
    fn plain(message: impl Into<String>) -> Self {
        Diagnostic {
            loc: None,
            message: message.into(),
        }
    }

    pub fn render(&self, file: &str) -> String {
        match self.loc {
            Some(loc) => format!("{file}:{loc}: error: {}", self.message),
            None => format!("{file}: error: {}", self.message),
        }
    }
}

/// A parsed and typed program.
#[derive(Clone, Debug)]
pub struct Frontend {
    pub program: SourceProgram,
    pub inference: InferenceResult,
    pub parse_time: Duration,
    pub infer_time: Duration,
}

impl Frontend {
    /// The goal type in check mode, otherwise the inferred type.
    pub fn claimed_type(&self) -> &Type {
        self.program.goal.as_ref().unwrap_or(&self.inference.ty)
    }
}

/// Parses `text` (with optional extra primitive declarations) and runs
/// inference, or checking when the program carries a goal type.
pub fn frontend(text: &str, extra_prelude: Option<&str>, allow_extended: bool) -> Result<Frontend, Diagnostic> {
    let start = Instant::now();
    let popts = ParseOptions { allow_extended };
    let extra = match extra_prelude {
        Some(p) => parse_prelude(p, popts).map_err(|e| Diagnostic {
            loc: None,
            message: format!("in prelude: {e}"),
        })?,
        None => Vec::new(),
    };
    let program = parse_program_with_prelude(text, popts, &extra).map_err(|e| Diagnostic {
        loc: Some(e.loc()),
        message: strip_loc(&e.to_string(), e.loc()),
    })?;
    let parse_time = start.elapsed();
    let start = Instant::now();
    let prelude = Prelude::from_decls(&program.prelude).map_err(|e| Diagnostic::plain(e.to_string()))?;
    let iopts = InferOptions { allow_extended };
    let inference = match &program.goal {
        Some(goal) => check(&prelude, iopts, &program.body, goal),
        None => infer_closed(&prelude, iopts, &program.body),
    }
    .map_err(|e| Diagnostic {
        loc: Some(e.loc()),
        message: strip_loc(&e.to_string(), e.loc()),
    })?;
    Ok(Frontend {
        program,
        inference,
        parse_time,
        infer_time: start.elapsed(),
    })
}

fn strip_loc(msg: &str, loc: Loc) -> String {
    msg.strip_prefix(&format!("{loc}: ")).unwrap_or(msg).to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObligationReport {
    pub rule: String,
    pub loc: String,
    pub constraint: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub decided_by: String,
    pub millis: u64,
}

impl From<&TaskResult> for ObligationReport {
    fn from(r: &TaskResult) -> Self {
        ObligationReport {
            rule: r.task.origin.rule.to_string(),
            loc: r.task.origin.loc.to_string(),
            constraint: r.task.constraint.to_string(),
            verdict: r.verdict.label().to_string(),
            witness: r
                .verdict
                .witness()
                .map(|w| w.values.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()),
            reason: match &r.verdict {
                Verdict::Unknown(reason) => Some(reason.to_string()),
                _ => None,
            },
            decided_by: r.decided_by.label().to_string(),
            millis: r.millis as u64,
        }
    }
}

/// Milliseconds spent in each phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Phases {
    pub parse: u64,
    pub infer: u64,
    pub lower: u64,
    pub solve: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzReport {
    pub instantiation: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<String>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub file: String,
    pub overall: String,
    pub obligations: Vec<ObligationReport>,
    pub phases: Phases,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<Vec<FuzzReport>>,
}

impl RunReport {
    /// Zeroes every timing so reports compare equal across runs.
    pub fn without_timings(mut self) -> Self {
        self.phases = Phases::default();
        for o in &mut self.obligations {
            o.millis = 0;
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Settings for [`check_program`].
#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub allow_extended: bool,
    pub backend: CheckConfig,
    pub fuzz_trials: Option<usize>,
}

/// The full `check` pipeline on source text. Returns the report and the
/// overall verdict.
pub fn check_program(
    file: &str,
    text: &str,
    extra_prelude: Option<&str>,
    opts: &CheckOptions,
) -> Result<(RunReport, Verdict), Diagnostic> {
    let fe = frontend(text, extra_prelude, opts.allow_extended)?;
    let start = Instant::now();
    let tasks = lower(&fe.inference.constraints, opts.backend.simplify);
    let lower_time = start.elapsed();
    let start = Instant::now();
    let results = check_tasks(&tasks, &opts.backend);
    let solve_time = start.elapsed();
    let verdict = overall(results.iter().map(|r| &r.verdict));
    let fuzz = opts
        .fuzz_trials
        .map(|trials| fuzz_program(&fe, trials, opts.backend.seed));
    let report = RunReport {
        file: file.to_string(),
        overall: verdict.label().to_string(),
        obligations: results.iter().map(ObligationReport::from).collect(),
        phases: Phases {
            parse: fe.parse_time.as_millis() as u64,
            infer: fe.infer_time.as_millis() as u64,
            lower: lower_time.as_millis() as u64,
            solve: solve_time.as_millis() as u64,
        },
        fuzz,
    };
    Ok((report, verdict))
}

/// Runs [`lipschitz_test`] on the program at each of
/// [`FUZZ_INSTANTIATIONS`], against the checked type.
pub fn fuzz_program(fe: &Frontend, trials: usize, seed: u64) -> Vec<FuzzReport> {
    let prims = PrimRegistry::standard();
    FUZZ_INSTANTIATIONS
        .iter()
        .map(|&n| {
            let failed = |error: String| FuzzReport {
                instantiation: n,
                trials,
                bound: None,
                max_ratio: None,
                pass: false,
                error: Some(error),
            };
            let Some((term, bound)) = instantiate_first_order(&fe.program.body, fe.claimed_type(), n) else {
                return failed(format!("type {} is not first order", pretty_type(fe.claimed_type())));
            };
            match lipschitz_test(&term, &bound, trials, seed, &prims, FUZZ_FUEL) {
                Ok(r) => FuzzReport {
                    instantiation: n,
                    trials,
                    bound: Some(r.bound.to_string()),
                    max_ratio: Some(r.max_ratio.to_string()),
                    pass: r.pass,
                    error: None,
                },
                Err(e) => failed(e.to_string()),
            }
        })
        .collect()
}

/// Exit code for a verdict.
pub fn exit_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Valid => EXIT_VALID,
        Verdict::Invalid(_) => EXIT_INVALID,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    }
}

/// Captured result of one command-line invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(stderr: String) -> Self {
        Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome::error(text),
            };
        }
    };
    match cli.command {
        Command::Check(a) => run_check(&a),
        Command::Infer(a) => run_infer(&a),
    }
}

fn read_inputs(a: &CommonArgs) -> Result<(String, String, Option<String>), Outcome> {
    let file = a.file.display().to_string();
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| Outcome::error(format!("{file}: error: cannot read file: {e}\n")))?;
    let prelude = match &a.prelude {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
            Outcome::error(format!("{}: error: cannot read prelude: {e}\n", p.display()))
        })?),
        None => None,
    };
    Ok((file, text, prelude))
}

fn run_infer(a: &CommonArgs) -> Outcome {
    let (file, text, prelude) = match read_inputs(a) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let fe = match frontend(&text, prelude.as_deref(), a.allow_extended_annotations) {
        Ok(fe) => fe,
        Err(d) => return Outcome::error(d.render(&file) + "\n"),
    };
    let ty = pretty_type(&fe.inference.ty);
    let constraints: Vec<String> = fe.inference.constraints.iter().map(|c| c.to_string()).collect();
    let stdout = if a.json {
        #[derive(Serialize)]
        struct InferReport<'a> {
            file: &'a str,
            r#type: &'a str,
            constraints: &'a [String],
        }
        let r = InferReport {
            file: &file,
            r#type: &ty,
            constraints: &constraints,
        };
        serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
    } else {
        let mut out = format!("{ty}\n");
        for c in &constraints {
            let _ = writeln!(out, "  where {c}");
        }
        out
    };
    Outcome {
        code: EXIT_VALID,
        stdout,
        stderr: String::new(),
    }
}

fn backend_config(a: &CheckArgs) -> Result<CheckConfig, String> {
    if !(a.timeout.is_finite() && a.timeout > 0.0) {
        return Err(format!("--timeout must be a positive number of seconds, got {}", a.timeout));
    }
    if a.jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }
    let mode = Mode::from(a.mode);
    let solver = (!a.no_solver).then(|| SolverConfig {
        command: a.solver.clone().unwrap_or_else(SolverConfig::command_from_env),
        timeout: Duration::from_secs_f64(a.timeout),
        mode,
        emit_dir: a.emit_smt.clone(),
    });
    Ok(CheckConfig {
        mode,
        simplify: !a.no_simplify,
        solver,
        falsify_budget: DEFAULT_BUDGET,
        seed: a.seed,
        jobs: a
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    })
}

fn run_check(a: &CheckArgs) -> Outcome {
    let (file, text, prelude) = match read_inputs(&a.common) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let backend = match backend_config(a) {
        Ok(c) => c,
        Err(m) => return Outcome::error(format!("error: {m}\n")),
    };
    if let Some(dir) = &a.emit_smt {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return Outcome::error(format!("{}: error: cannot create directory: {e}\n", dir.display()));
        }
    }
    let opts = CheckOptions {
        allow_extended: a.common.allow_extended_annotations,
        backend,
        fuzz_trials: a.fuzz,
    };
    let (report, verdict) = match check_program(&file, &text, prelude.as_deref(), &opts) {
        Ok(x) => x,
        Err(d) => return Outcome::error(d.render(&file) + "\n"),
    };
    let mut stderr = String::new();
    let mut code = exit_code(&verdict);
    if let Some(fuzz) = &report.fuzz {
        if let Some(path) = &a.fuzz_json {
            let json = serde_json::to_string_pretty(fuzz).expect("report serializes") + "\n";
            if let Err(e) = std::fs::write(path, json) {
                return Outcome::error(format!("{}: error: cannot write fuzz report: {e}\n", path.display()));
            }
        }
        if verdict == Verdict::Valid && fuzz.iter().any(|f| f.error.is_none() && !f.pass) {
            stderr.push_str("error: fuzzing found inputs that exceed the checked bound\n");
            code = EXIT_INVALID;
        }
    }
    let stdout = if a.common.json {
        report.to_json() + "\n"
    } else {
        render_text(&report, &verdict)
    };
    Outcome { code, stdout, stderr }
}

/// The human-readable report.
pub fn render_text(report: &RunReport, verdict: &Verdict) -> String {
    let mut out = String::new();
    let n = report.obligations.len();
    let _ = writeln!(out, "{}: {n} obligation{}", report.file, if n == 1 { "" } else { "s" });
    for o in &report.obligations {
        let mut status = o.verdict.clone();
        if let Some(r) = &o.reason {
            let _ = write!(status, " ({r})");
        }
        let _ = writeln!(out, "  {status:<9} {} at {}: {}", o.rule, o.loc, o.constraint);
        if let Some(w) = &o.witness {
            let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let shown = if parts.is_empty() { "(closed)".to_string() } else { parts.join(", ") };
            let _ = writeln!(out, "            witness: {shown}");
        }
    }
    if let Some(fuzz) = &report.fuzz {
        for f in fuzz {
            match (&f.error, &f.max_ratio, &f.bound) {
                (Some(e), _, _) => {
                    let _ = writeln!(out, "  fuzz i={}: skipped: {e}", f.instantiation);
                }
                (None, Some(m), Some(b)) => {
                    let _ = writeln!(
                        out,
                        "  fuzz i={}: {} trials, max ratio {m}, bound {b}: {}",
                        f.instantiation,
                        f.trials,
                        if f.pass { "pass" } else { "FAIL" }
                    );
                }
                _ => {}
            }
        }
    }
    let _ = writeln!(out, "overall: {verdict}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = "
primitive use : forall i : size . ![0] nat[i] -o ![i] real -o real;
primitive add : ![1] real -o ![1] real -o real;
check idxlam (i : size) { fun (e :[0] nat[i]) { fun (x :[G] real) { <x, add (use[i] e x) (use[i] e x)> } } }
  : forall i : size . ![0] nat[i] -o ![G] real -o real & real
";

    fn internal_only() -> CheckOptions {
        let mut o = CheckOptions::default();
        o.backend.solver = None;
        o
    }

    #[test]
    fn pair_of_uses() {
        let good = PAIR.replace('G', "2 * i + 1");
        let (report, v) = check_program("pair", &good, None, &internal_only()).unwrap();
        assert_eq!(v, Verdict::Valid, "{report:?}");
        // i * i + 1 >= 2 * i needs more than coefficient comparison.
        let square = PAIR.replace('G', "i * i + 1");
        let (_, v) = check_program("pair", &square, None, &internal_only()).unwrap();
        assert_eq!(v.label(), "unknown");
        let bad = PAIR.replace('G', "2 * i");
        let (report, v) = check_program("pair", &bad, None, &internal_only()).unwrap();
        assert_eq!(v.label(), "invalid");
        let w = report.obligations.iter().find_map(|o| o.witness.clone()).unwrap();
        assert_eq!(w.get("i").map(String::as_str), Some("0"));
    }

    #[test]
    fn diagnostics_are_located() {
        let err = frontend("check fun (x :[1] real) { y } : ![1] real -o real", None, false).unwrap_err();
        assert_eq!(err.loc, Some(Loc::new(1, 27)));
        assert!(err.render("f.dfz").starts_with("f.dfz:1:27: error: unbound variable"));
    }

    #[test]
    fn usage_errors_exit_three() {
        assert_eq!(run(["senscheck"]).code, EXIT_ERROR);
        assert_eq!(run(["senscheck", "check", "/nonexistent.dfz"]).code, EXIT_ERROR);
        assert_eq!(run(["senscheck", "--help"]).code, 0);
    }

    #[test]
    fn fuzzing_uses_the_claimed_bound() {
        let src = "primitive plus : ![1] real -o ![1] real -o real;
check fun (x :[1] real) { plus x x } : ![1] real -o real";
        let fe = frontend(src, None, false).unwrap();
        let reports = fuzz_program(&fe, 50, 1);
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| !r.pass && r.error.is_none()));
        assert_eq!(reports[0].max_ratio.as_deref(), Some("2"));
    }
}
