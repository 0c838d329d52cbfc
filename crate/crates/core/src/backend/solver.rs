use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use wait_timeout::ChildExt;

use super::smtlib::{emit_query, Declared};
use super::{UnknownReason, Verdict};
use crate::constraints::{Formula, Mode, Sort};
use crate::semantics::{ExtReal, Valuation};

/// Environment variable that overrides the configured solver command.
pub const SOLVER_ENV: &str = "SENSCHECK_SOLVER";

pub const DEFAULT_SOLVER: &str = "z3 -in";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub command: String,
    pub timeout: Duration,
    pub mode: Mode,
    pub emit_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    /// Takes the command from [`SOLVER_ENV`] when set.
    fn default() -> Self {
        SolverConfig {
            command: SolverConfig::command_from_env(),
            timeout: Duration::from_secs(10),
            mode: Mode::Mixed,
            emit_dir: None,
        }
    }
}

impl SolverConfig {
    /// [`SOLVER_ENV`] if set and non-empty, else [`DEFAULT_SOLVER`].
    pub fn command_from_env() -> String {
        match std::env::var(SOLVER_ENV) {
            Ok(c) if !c.trim().is_empty() => c,
            _ => DEFAULT_SOLVER.to_string(),
        }
    }
}

/// Decides a closed formula with the external solver. Every failure maps to
/// `Unknown`; `Invalid` carries the model of the leading universal prefix.
pub fn solve(f: &Formula, cfg: &SolverConfig) -> Verdict {
    solve_named(f, cfg, "query")
}

/// [`solve`], writing the script to `emit_dir/<name>.smt2` when configured.
pub fn solve_named(f: &Formula, cfg: &SolverConfig, name: &str) -> Verdict {
    let (script, declared) = emit_query(f, cfg.mode);
    if let Some(dir) = &cfg.emit_dir {
        // Best effort: a failed dump must not change the verdict.
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(dir.join(format!("{name}.smt2")), &script);
    }
    match run(&cfg.command, &script, cfg.timeout) {
        Ok(out) => interpret(&out, &declared, cfg.mode),
        Err(reason) => Verdict::Unknown(reason),
    }
}

fn run(command: &str, script: &str, timeout: Duration) -> Result<String, UnknownReason> {
    let words = shlex::split(command).filter(|w| !w.is_empty()).ok_or(UnknownReason::SolverUnknown)?;
    let (prog, args) = words.split_first().ok_or(UnknownReason::SolverUnknown)?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|_| UnknownReason::SolverUnknown)?;
    let mut stdout = child.stdout.take().ok_or(UnknownReason::SolverUnknown)?;
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(script.as_bytes());
    }
    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => status,
        Ok(None) | Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            return Err(UnknownReason::Timeout);
        }
    };
    let out = reader.join().map_err(|_| UnknownReason::SolverUnknown)?;
    if !status.success() && !out.trim_start().starts_with("sat") && !out.trim_start().starts_with("unsat") {
        return Err(UnknownReason::SolverUnknown);
    }
    Ok(out)
}

fn interpret(out: &str, declared: &Declared, mode: Mode) -> Verdict {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("unsat") => Verdict::Valid,
        Some("sat") => {
            let rest: Vec<&str> = lines.collect();
            match parse_model(&rest.join(" "), declared, mode) {
                Some(v) => Verdict::Invalid(v),
                None => Verdict::Unknown(UnknownReason::SolverUnknown),
            }
        }
        Some("timeout") => Verdict::Unknown(UnknownReason::Timeout),
        _ => Verdict::Unknown(UnknownReason::SolverUnknown),
    }
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                out.push(c.to_string());
                chars.next();
            }
            '|' => {
                chars.next();
                let mut tok = String::new();
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                    tok.push(d);
                }
                out.push(tok);
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut tok = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    tok.push(d);
                    chars.next();
                }
                out.push(tok);
            }
        }
    }
    out
}

fn parse_sexp(tokens: &[String], pos: &mut usize) -> Option<Sexp> {
    let t = tokens.get(*pos)?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                if tokens.get(*pos)? == ")" {
                    *pos += 1;
                    return Some(Sexp::List(items));
                }
                items.push(parse_sexp(tokens, pos)?);
            }
        }
        ")" => None,
        _ => Some(Sexp::Atom(t.clone())),
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.is_empty() || !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(digits, scale))
}

fn value_of(s: &Sexp) -> Option<BigRational> {
    match s {
        Sexp::Atom(a) => parse_decimal(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Some(-value_of(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = value_of(y)?;
                if d.is_zero() {
                    return None;
                }
                Some(value_of(x)? / d)
            }
            _ => None,
        },
    }
}

fn parse_model(text: &str, declared: &Declared, mode: Mode) -> Option<Valuation> {
    let mut rho = match mode {
        Mode::Mixed => Valuation::standard(),
        Mode::Uniform => Valuation::uniform(),
    };
    if declared.is_empty() {
        return Some(rho);
    }
    let tokens = tokenize(text);
    let Sexp::List(pairs) = parse_sexp(&tokens, &mut 0)? else {
        return None;
    };
    for p in pairs {
        let Sexp::List(kv) = p else { return None };
        let [Sexp::Atom(name), v] = kv.as_slice() else {
            return None;
        };
        let q = value_of(v)?;
        let sort = declared.iter().find(|(n, _)| n == name)?.1;
        if q < BigRational::zero() || (sort == Sort::Nat && mode == Mode::Mixed && !q.denom().is_one()) {
            return None;
        }
        rho.set(name, ExtReal::Finite(q));
    }
    if declared.iter().all(|(n, _)| rho.get(n).is_some()) {
        Some(rho)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Arith;

    fn z3_available() -> bool {
        Command::new("z3").arg("-version").output().is_ok()
    }

    #[test]
    fn model_parsing() {
        let declared = vec![("i".to_string(), Sort::Nat), ("r'".to_string(), Sort::SensReal)];
        let rho = parse_model("((i 3) (|r'| (/ 1.0 2.0)))", &declared, Mode::Mixed).unwrap();
        assert_eq!(rho.get("i"), Some(&ExtReal::from_int(3)));
        assert_eq!(rho.get("r'"), Some(&ExtReal::from_ratio(1, 2)));
        assert_eq!(parse_decimal("0.25"), Some(BigRational::new(1.into(), 4.into())));
        assert!(parse_model("((i (- 1)) (|r'| 0.0))", &declared, Mode::Mixed).is_none());
    }

    #[test]
    fn missing_solver_is_unknown() {
        let cfg = SolverConfig {
            command: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        };
        let f = Formula::forall("i", Sort::Nat, Formula::ge(Arith::var("i"), Arith::int(0)));
        assert_eq!(solve(&f, &cfg), Verdict::Unknown(UnknownReason::SolverUnknown));
    }

    #[test]
    fn z3_round_trip() {
        if !z3_available() {
            eprintln!("z3 not found; skipping");
            return;
        }
        let cfg = SolverConfig::default();
        let taut = Formula::ge(Arith::int(1), Arith::int(0));
        assert_eq!(solve(&taut, &cfg), Verdict::Valid);
        let f = Formula::forall("i", Sort::Nat, Formula::ge(Arith::product(Arith::int(2), Arith::var("i")), Arith::int(1)));
        match solve(&f, &cfg) {
            Verdict::Invalid(rho) => assert_eq!(rho.get("i"), Some(&ExtReal::zero())),
            other => panic!("expected a witness, got {other:?}"),
        }
    }
}
