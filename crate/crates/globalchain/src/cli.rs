//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::compiler::{compile, GadgetName, GadgetSpec, Side};
use crate::exec::Executor;
use crate::layout::{build_layout, min_block_len, ChainLayout, LayoutConfig, Species};
use crate::pulse::Pair;
use crate::qec::{builtin_code, CodeSpec};
use crate::stabsim::{Circuit, NoiseModel, TrajectoryRecord};
use crate::threshold::{default_layout, points_csv, threshold_report, RateEstimator};
use crate::verify::{selftest, verify_gadget, GadgetCheck};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "globalchain", version, about = "Global-pulse compiler and simulators for three-species spin chains")]
pub struct Cli {
    /// Worker cap for Monte Carlo sweeps (1 = sequential).
    #[arg(long, global = true, env = "GLOBALCHAIN_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a recursive chain layout and print it as JSON.
    Layout {
        #[arg(long)]
        ncomp: usize,
        #[arg(long, default_value_t = 0)]
        level: u32,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long, default_value = "bare")]
        code: String,
        /// Add a C cell at both chain ends.
        #[arg(long)]
        capped: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a gadget to a global pulse schedule.
    Compile {
        #[command(flatten)]
        gadget: GadgetArgs,
        #[arg(long)]
        theta: Option<f64>,
        /// Use a built layout with this block length instead of the gadget's minimal chain.
        #[arg(long)]
        ncomp: Option<usize>,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        /// Species string such as `ACBBCA`; overrides --ncomp.
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long, default_value = "A")]
        species: String,
        /// Comma-separated coupling pairs, e.g. `A-C,B-C`.
        #[arg(long, default_value = "A-C")]
        pairs: String,
        #[arg(long, default_value = "AC")]
        side: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a compiled gadget against its target action.
    Verify {
        #[command(flatten)]
        gadget: GadgetArgs,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noisy Pauli-frame simulation of repeated EC rounds.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long)]
        ncomp: Option<usize>,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        eps_idle: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Logical error rate sweep, fit and recursion projection.
    Threshold {
        /// `lo:hi:Nlog` (N log-spaced points) or a comma-separated list.
        #[arg(long)]
        eps: String,
        #[arg(long)]
        trials: u64,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long)]
        seed: u64,
        /// CSV of the sweep points.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report JSON (defaults to the CSV path with a .json extension).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the full verification suite and print a pass/fail table.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GadgetArgs {
    #[arg(long)]
    pub gadget: String,
    #[arg(long, default_value_t = 0)]
    pub level: u32,
    #[arg(long, default_value = "steane")]
    pub code: String,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(long, default_value = "steane")]
    pub code: String,
    /// JSON code definition; overrides --code.
    #[arg(long)]
    pub code_file: Option<PathBuf>,
}

impl CodeArgs {
    fn load(&self) -> Result<CodeSpec, Failure> {
        match &self.code_file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {}", p.display(), e)))?;
                CodeSpec::from_json(&text).map_err(|e| Failure::Usage(e.to_string()))
            }
            None => builtin_code(&self.code).map_err(|e| Failure::Usage(e.to_string())),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

struct Io<'a> {
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.stdout, "{}", s.as_ref());
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {}", path.display(), e)))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `lo:hi:Nlog` or `a,b,c`.
pub fn parse_eps(spec: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("bad eps spec `{}`", spec);
    let eps: Vec<f64> = if let [lo, hi, n] = spec.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        let n: usize = n.strip_suffix("log").unwrap_or(n).parse().map_err(|_| bad())?;
        if n == 0 || lo <= 0.0 || hi < lo {
            return Err(bad());
        }
        if n == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if eps.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
        return Err(bad());
    }
    Ok(eps)
}

fn default_pattern(name: GadgetName, level: u32) -> &'static str {
    match (name, level) {
        (GadgetName::SyndromeReset | GadgetName::AncillaReset, 0) => "CAAACBBCAAAC",
        (GadgetName::SyndromeReset | GadgetName::AncillaReset, _) => "AACBBBBCAA",
        (GadgetName::InterblockCz, 0) => "ACBBCA",
        (GadgetName::InterblockCz, _) => "ACBBBBCA",
        (GadgetName::CzAb, _) => "ACB",
        (GadgetName::EdgeRotation, _) => "BCAA",
        (GadgetName::EdgePhase, _) => "AACAA",
        (GadgetName::Decouple, _) => "ACBBCA",
        (GadgetName::SwapInterface, _) => "CAAC",
        _ => "CAAAAC",
    }
}

fn parse_species(s: &str) -> Result<Vec<Species>, Failure> {
    s.chars().map(|c| Species::from_char(c).ok_or_else(|| usage(format!("bad species `{}`", c)))).collect()
}

fn gadget_name(s: &str) -> Result<GadgetName, Failure> {
    s.parse().map_err(usage)
}

fn compile_layout(name: GadgetName, a: &GadgetArgs, ncomp: Option<usize>, blocks: usize, pattern: Option<&str>) -> Result<ChainLayout, Failure> {
    if let Some(p) = pattern {
        return ChainLayout::from_pattern(p).map_err(usage);
    }
    let code_layout = matches!(name, GadgetName::EcRound | GadgetName::IntrablockTransversalCz);
    match (ncomp, code_layout) {
        (Some(n), _) => build_layout(&LayoutConfig::new(n, a.level, blocks, &a.code).capped()).map_err(usage),
        (None, true) => {
            let n = min_block_len(&a.code).map_err(usage)?;
            build_layout(&LayoutConfig::new(n, 0, 1, &a.code).capped()).map_err(usage)
        }
        (None, false) => ChainLayout::from_pattern(default_pattern(name, a.level)).map_err(usage),
    }
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    code: String,
    level: u32,
    layout: String,
    rounds: usize,
    eps: f64,
    eps_idle: f64,
    trials: u64,
    seed: u64,
    pulses: usize,
    /// Trials in which any logical qubit of the block failed.
    failures: u64,
    x_failures: Vec<u64>,
    z_failures: Vec<u64>,
    faults: u64,
    nontrivial_syndrome_trials: u64,
    first_trajectory: TrajectoryRecord,
}

fn simulate(code: CodeSpec, level: u32, ncomp: Option<usize>, rounds: usize, noise: NoiseModel, trials: u64, exec: Executor) -> Result<SimulationSummary, Failure> {
    if rounds == 0 || trials == 0 {
        return Err(usage("rounds and trials must be positive"));
    }
    let code = match level {
        0 => builtin_code("bare").map_err(usage)?,
        1 => code,
        l => return Err(usage(format!("level {} is projected, not simulated (use threshold)", l))),
    };
    let layout = match ncomp {
        Some(n) => build_layout(&LayoutConfig::new(n, 0, 1, &code.name).capped()).map_err(usage)?,
        None => default_layout(&code).map_err(usage)?,
    };
    let s = crate::compiler::compile_ec_round(&code, 0, &layout).map_err(usage)?.schedule;
    let circuit = Circuit::new(&vec![s; rounds], &layout, &code).map_err(usage)?;
    let records = exec.map(trials as usize, |t| circuit.trajectory(&noise, t as u64));
    let nl = circuit.logicals().len();
    let mut out = SimulationSummary {
        code: code.name.clone(),
        level,
        layout: layout.species_string(),
        rounds,
        eps: noise.eps,
        eps_idle: noise.eps_idle,
        trials,
        seed: noise.rng_seed,
        pulses: circuit.pulses(),
        failures: 0,
        x_failures: vec![0; nl],
        z_failures: vec![0; nl],
        faults: 0,
        nontrivial_syndrome_trials: 0,
        first_trajectory: records[0].clone(),
    };
    for r in &records {
        out.failures += r.failures.iter().any(|f| f.any()) as u64;
        for (l, f) in r.failures.iter().enumerate() {
            out.x_failures[l] += f.x_flip as u64;
            out.z_failures[l] += f.z_flip as u64;
        }
        out.faults += r.faults as u64;
        out.nontrivial_syndrome_trials += r.syndromes.iter().flatten().any(|s| !s.is_trivial()) as u64;
    }
    Ok(out)
}

fn check_table(checks: &[GadgetCheck]) -> String {
    let mut s = format!("{:<28} {:>5} {:<11} {:<22} {:>10}  {}\n", "gadget", "level", "backend", "layout", "deviation", "result");
    for c in checks {
        let backend = serde_json::to_value(c.backend).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        s.push_str(&format!(
            "{:<28} {:>5} {:<11} {:<22} {:>10.2e}  {}\n",
            c.gadget,
            c.level,
            backend,
            c.layout,
            c.max_deviation,
            match (c.pass, c.detail.starts_with("skipped")) {
                (true, true) => "SKIP",
                (true, false) => "PASS",
                _ => "FAIL",
            }
        ));
    }
    s
}

fn dispatch(cli: Cli, io: &mut Io) -> Result<(), Failure> {
    let exec = Executor::from_jobs(cli.jobs);
    match cli.command {
        Command::Layout { ncomp, level, blocks, code, capped, out } => {
            let mut cfg = LayoutConfig::new(ncomp, level, blocks, &code);
            if capped {
                cfg = cfg.capped();
            }
            let layout = build_layout(&cfg).map_err(usage)?;
            let text = layout.to_json() + "\n";
            match out {
                Some(p) => {
                    write_file(&p, &text)?;
                    io.line(format!("{} cells: {}", layout.len(), layout.species_string()));
                }
                None => io.line(text.trim_end()),
            }
        }
        Command::Compile { gadget, theta, ncomp, blocks, pattern, species, pairs, side, out } => {
            let name = gadget_name(&gadget.gadget)?;
            let layout = compile_layout(name, &gadget, ncomp, blocks, pattern.as_deref())?;
            let mut spec = GadgetSpec::new(name, gadget.level);
            if let Some(t) = theta {
                spec.params.theta = t;
            }
            spec.params.species = parse_species(&species)?;
            spec.params.pairs = pairs.split(',').map(|p| Pair::parse(p.trim()).ok_or_else(|| usage(format!("bad pair `{}`", p)))).collect::<Result<_, _>>()?;
            spec.params.side = match side.as_str() {
                "AC" => Side::AC,
                "BC" => Side::BC,
                s => return Err(usage(format!("bad side `{}`", s))),
            };
            spec.params.code = gadget.code.clone();
            let r = compile(&spec, &layout).map_err(usage)?;
            let valid = crate::pulse::validate_schedule(&r.schedule);
            let doc = json!({
                "layout": layout.species_string(),
                "claimed_action": r.claimed_action,
                "budget": r.budget,
                "legal": valid.legal,
                "schedule": r.schedule.to_value(),
            });
            let text = to_json(&doc);
            match out {
                Some(p) => write_file(&p, &text)?,
                None => io.line(text.trim_end()),
            }
            let b = r.budget.as_ref().map(|b| b.total_pulses).unwrap_or(0);
            io.line(format!("{} level {}: {} pulses on {}", name, gadget.level, b, layout.species_string()));
            if !valid.legal {
                return Err(Failure::Check("schedule is not globally legal".into()));
            }
        }
        Command::Verify { gadget, theta, out } => {
            let name = gadget_name(&gadget.gadget)?;
            let checks = verify_gadget(name, gadget.level, theta, &gadget.code);
            let text = if checks.len() == 1 { to_json(&checks[0]) } else { to_json(&checks) };
            if let Some(p) = out {
                write_file(&p, &text)?;
            }
            io.line(text.trim_end());
            if let Some(c) = checks.iter().find(|c| !c.pass) {
                return Err(Failure::Check(format!("{}: {}", c.gadget, c.detail)));
            }
        }
        Command::Simulate { code, level, ncomp, rounds, eps, eps_idle, trials, seed, out } => {
            let noise = NoiseModel::with_idle(eps, eps_idle, seed).map_err(usage)?;
            let s = simulate(code.load()?, level, ncomp, rounds, noise, trials, exec)?;
            let text = to_json(&s);
            match out {
                Some(p) => write_file(&p, &text)?,
                None => io.line(text.trim_end()),
            }
            io.line(format!("{} level {}, {} rounds, eps {}: {} / {} trials failed", s.code, level, rounds, eps, s.failures, trials));
        }
        Command::Threshold { eps, trials, code, level, rounds, seed, out, report } => {
            let eps = parse_eps(&eps).map_err(Failure::Usage)?;
            let code = code.load()?;
            let est = RateEstimator::new(&code, level, rounds).map_err(usage)?;
            let points = est.sweep(&eps, trials, seed, exec).map_err(usage)?;
            let csv = points_csv(&points).map_err(usage)?;
            let rep = threshold_report(&code, points, &est).map_err(usage)?;
            let report = report.or_else(|| out.as_ref().map(|p| p.with_extension("json")));
            match out {
                Some(p) => write_file(&p, &csv)?,
                None => io.line(csv.trim_end()),
            }
            if let Some(p) = report {
                write_file(&p, &to_json(&rep))?;
            }
            for p in &rep.points {
                io.line(format!("eps {:.3e}  p {:.3e}  [{:.3e}, {:.3e}]  {}/{}", p.eps, p.p_logical, p.ci_low, p.ci_high, p.failures, p.trials));
            }
            match (rep.slope, rep.kappa_fit) {
                (Some(s), Some(k)) => io.line(format!("slope {:.3}, kappa_fit {:.3e}, N {}, kappa_bound {}", s, k, rep.n, rep.kappa_bound)),
                _ => io.line(format!("no fit: {}; N {}, kappa_bound {}", rep.fit_error.as_deref().unwrap_or("?"), rep.n, rep.kappa_bound)),
            }
        }
        Command::Selftest { out } => {
            let checks = selftest();
            io.line(check_table(&checks).trim_end());
            if let Some(p) = out {
                write_file(&p, &to_json(&checks))?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            io.line(format!("{} / {} checks passed", checks.len() - failed, checks.len()));
            if failed > 0 {
                return Err(Failure::Check(format!("{} checks failed", failed)));
            }
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{}", text) } else { write!(stdout, "{}", text) };
            return code;
        }
    };
    match dispatch(cli, &mut Io { stdout }) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {}", m);
            EXIT_USAGE
        }
        Err(Failure::Check(m)) => {
            let _ = writeln!(stderr, "verification failed: {}", m);
            EXIT_FAIL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("globalchain").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn eps_specs() {
        let e = parse_eps("1e-4:1e-2:3log").unwrap();
        assert_eq!(e.len(), 3);
        assert!((e[1] - 1e-3).abs() < 1e-15);
        assert_eq!(parse_eps("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_eps("1e-2:1e-4:3log").is_err());
        assert!(parse_eps("2").is_err());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        let (c, _, err) = call(&["layout", "--ncomp", "4", "--bogus"]);
        assert_eq!(c, EXIT_USAGE);
        assert!(err.contains("Usage"));
        assert_eq!(call(&["simulate", "--eps", "0.01", "--trials", "5"]).0, EXIT_USAGE);
        assert_eq!(call(&["verify", "--gadget", "nope"]).0, EXIT_USAGE);
        assert_eq!(call(&["threshold", "--eps", "x", "--trials", "1", "--seed", "1"]).0, EXIT_USAGE);
    }

    #[test]
    fn layout_and_verify() {
        let (c, out, _) = call(&["layout", "--ncomp", "4", "--level", "0", "--blocks", "2"]);
        assert_eq!(c, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["cells"].as_array().unwrap().len(), 12);
        let (c, out, _) = call(&["verify", "--gadget", "cz_ab", "--level", "0"]);
        assert_eq!(c, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["report"]["equal_up_to_phase"], true);
        assert_eq!(call(&["verify", "--gadget", "syndrome_reset", "--level", "7"]).0, EXIT_FAIL);
    }

    #[test]
    fn simulate_is_reproducible() {
        let args = ["simulate", "--code", "bare", "--level", "0", "--eps", "0.05", "--trials", "200", "--seed", "9"];
        let (c, a, _) = call(&args);
        assert_eq!(c, EXIT_OK);
        assert_eq!(a, call(&args).1);
        let one = call(&["--jobs", "1", args[0], args[1], args[2], args[3], args[4], args[5], args[6], args[7], args[8], args[9], args[10]]).1;
        assert_eq!(a, one);
    }
}
