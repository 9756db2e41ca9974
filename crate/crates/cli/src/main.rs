//! `qmaj` — majorization analysis of quantum measurements from the command
//! line.
//!
//! Every command prints one self-describing JSON report on stdout and a
//! short human summary on stderr. Exit codes are a stable contract: 0 on
//! pass, 1 when an invariant or guaranteed inequality fails, 2 on usage or
//! parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qmaj::config::Config;
use qmaj::error::Error;
use qmaj::files::{
    load_json, save_json, MultipartyStateFile, PovmFile, ProtocolFile, StateFile, VectorOrState,
};
use qmaj::locc::{check_deterministic_transform, check_monotonicity, run as run_protocol};
use qmaj::majorization::{compare, SortedVector};
use qmaj::multiparty::{LocalPovm, TensorSpace};
use qmaj::state::rejection_record;
use qmaj::uhlmann::synthesize;
use qmaj::verify::{run_suite, trace_preserving_entropy_drop, Suite};

#[derive(Parser)]
#[command(name = "qmaj", version, about = "Majorization analysis of quantum measurements")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Base seed for randomized suites
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per randomized suite
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Largest accepted total dimension
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    /// Hermiticity tolerance
    #[arg(long, global = true)]
    tol_herm: Option<f64>,
    /// Positivity tolerance on eigenvalues
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    /// Unit-trace tolerance
    #[arg(long, global = true)]
    tol_trace: Option<f64>,
    /// Measurement completeness / bi-stochasticity tolerance
    #[arg(long, global = true)]
    tol_povm: Option<f64>,
    /// Zero-probability threshold
    #[arg(long, global = true)]
    tol_prob: Option<f64>,
    /// Majorization prefix-sum tolerance
    #[arg(long, global = true)]
    tol_major: Option<f64>,
    /// Doubly-stochastic row/column tolerance
    #[arg(long, global = true)]
    tol_ds: Option<f64>,
    /// Reconstruction residual tolerance
    #[arg(long, global = true)]
    tol_recon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileKind {
    State,
    Povm,
    Protocol,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Monotonicity,
    Deterministic,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a state, measurement or protocol file
    Validate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: FileKind,
    },
    /// Print the spectrum and entropy of a state
    Spectrum {
        #[arg(long)]
        state: PathBuf,
    },
    /// Apply a measurement family to a state
    Measure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        povm: PathBuf,
        /// Restrict posterior detail to one outcome (0-based)
        #[arg(long)]
        outcome: Option<usize>,
    },
    /// Compare two vectors or states under majorization (a ⪰ b?)
    Majorize {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Synthesize a bi-stochastic measurement carrying source to target
    Synthesize {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Where to write the synthesized measurement file
        #[arg(long)]
        out: PathBuf,
    },
    /// Partial trace of a multiparty state onto one agent
    Ptrace {
        #[arg(long)]
        state: PathBuf,
        /// Agent to keep (1-based)
        #[arg(long)]
        keep: usize,
    },
    /// Lift a local measurement to the full tensor space
    Lift {
        #[arg(long)]
        povm: PathBuf,
        /// Tensor factor dimensions, e.g. 2,2
        #[arg(long, value_delimiter = ',')]
        factors: Vec<usize>,
        /// Measuring agent (1-based)
        #[arg(long)]
        agent: usize,
        /// Optional output file for the lifted family
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Protocol execution
    Locc {
        #[command(subcommand)]
        command: LoccCommand,
    },
    /// Run a randomized verification suite
    Verify {
        /// One of: fan, sp-equal, expect, uhlmann-if, uhlmann-synth,
        /// bob-expect, bob-invariance, locc-monotone, entropy-chain
        suite: String,
    },
    /// Evaluate a stored counterexample
    Counterexample {
        /// Currently: trace-preserving-entropy-drop
        name: String,
    },
}

#[derive(Subcommand)]
enum LoccCommand {
    /// Run a protocol on a state, reporting per-step expected spectra
    Run {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Additional verdict to compute
        #[arg(long, value_enum)]
        check: Option<CheckKind>,
        /// Target state for --check deterministic
        #[arg(long)]
        target: Option<PathBuf>,
    },
}

/// Report plus the exit disposition of a finished command.
struct Outcome {
    report: Value,
    summary: String,
    pass: bool,
}

impl Outcome {
    fn pass(report: Value, summary: impl Into<String>) -> Self {
        Outcome {
            report,
            summary: summary.into(),
            pass: true,
        }
    }

    fn fail(report: Value, summary: impl Into<String>) -> Self {
        Outcome {
            report,
            summary: summary.into(),
            pass: false,
        }
    }

    /// An invariant failure: fold the machine-readable rejection record
    /// into the report when there is one.
    fn from_error(err: Error) -> Self {
        let mut report = json!({ "ok": false, "error": err.to_string() });
        if let Some((invariant, deviation)) = rejection_record(&err) {
            report["invariant"] = json!(invariant.name());
            report["deviation"] = json!(deviation);
        }
        Outcome::fail(report, format!("failed: {err}"))
    }
}

/// Usage and parse problems, reported on stderr with exit code 2.
struct ParseFailure(String);

type CmdResult = Result<Outcome, ParseFailure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli.opts) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command, &cfg) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report is JSON"));
            eprintln!("{}", outcome.summary);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(ParseFailure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn build_config(opts: &GlobalOpts) -> Result<Config, String> {
    let mut cfg = Config::default();
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.trials {
        cfg.trials = v;
    }
    if let Some(v) = opts.dim_cap {
        cfg.dim_cap = v;
    }
    if let Some(v) = opts.tol_herm {
        cfg.tol_herm = v;
    }
    if let Some(v) = opts.tol_psd {
        cfg.tol_psd = v;
    }
    if let Some(v) = opts.tol_trace {
        cfg.tol_trace = v;
    }
    if let Some(v) = opts.tol_povm {
        cfg.tol_povm = v;
    }
    if let Some(v) = opts.tol_prob {
        cfg.tol_prob = v;
    }
    if let Some(v) = opts.tol_major {
        cfg.tol_major = v;
    }
    if let Some(v) = opts.tol_ds {
        cfg.tol_ds = v;
    }
    if let Some(v) = opts.tol_recon {
        cfg.tol_recon = v;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ParseFailure> {
    load_json(path).map_err(ParseFailure)
}

fn dispatch(command: Command, cfg: &Config) -> CmdResult {
    match command {
        Command::Validate { file, kind } => cmd_validate(&file, kind, cfg),
        Command::Spectrum { state } => cmd_spectrum(&state, cfg),
        Command::Measure { state, povm, outcome } => cmd_measure(&state, &povm, outcome, cfg),
        Command::Majorize { a, b } => cmd_majorize(&a, &b, cfg),
        Command::Synthesize { source, target, out } => cmd_synthesize(&source, &target, &out, cfg),
        Command::Ptrace { state, keep } => cmd_ptrace(&state, keep, cfg),
        Command::Lift { povm, factors, agent, out } => cmd_lift(&povm, &factors, agent, out.as_deref(), cfg),
        Command::Locc { command } => match command {
            LoccCommand::Run { protocol, state, check, target } => {
                cmd_locc_run(&protocol, &state, check, target.as_deref(), cfg)
            }
        },
        Command::Verify { suite } => cmd_verify(&suite, cfg),
        Command::Counterexample { name } => cmd_counterexample(&name, cfg),
    }
}

fn cmd_validate(file: &Path, kind: FileKind, cfg: &Config) -> CmdResult {
    match kind {
        FileKind::State => {
            let parsed: StateFile = parse_file(file)?;
            match parsed.into_state(cfg) {
                Ok(state) => Ok(Outcome::pass(
                    json!({ "ok": true, "kind": "state", "dim": state.dim() }),
                    format!("valid state of dimension {}", state.dim()),
                )),
                Err(e) => Ok(Outcome::from_error(e)),
            }
        }
        FileKind::Povm => {
            let parsed: PovmFile = parse_file(file)?;
            match parsed.into_povm(cfg) {
                Ok((povm, flag)) => Ok(Outcome::pass(
                    json!({
                        "ok": true,
                        "kind": "povm",
                        "dim": povm.dim(),
                        "operators": povm.len(),
                        "completeness_residual": povm.completeness_residual(),
                        "bistochastic": flag.is_bistochastic,
                        "bistochastic_deviation": flag.deviation,
                    }),
                    format!(
                        "valid measurement: {} operators on dimension {}, bi-stochastic: {}",
                        povm.len(),
                        povm.dim(),
                        flag.is_bistochastic
                    ),
                )),
                Err(e) => Ok(Outcome::from_error(e)),
            }
        }
        FileKind::Protocol => {
            let parsed: ProtocolFile = parse_file(file)?;
            match parsed.into_protocol(cfg) {
                Ok(protocol) => Ok(Outcome::pass(
                    json!({
                        "ok": true,
                        "kind": "protocol",
                        "parties": protocol.space().parties(),
                        "factors": protocol.space().factor_dims(),
                        "steps": protocol.steps().len(),
                    }),
                    format!(
                        "valid protocol: {} steps on {} parties",
                        protocol.steps().len(),
                        protocol.space().parties()
                    ),
                )),
                Err(e) => Ok(Outcome::from_error(e)),
            }
        }
    }
}

fn cmd_spectrum(state: &Path, cfg: &Config) -> CmdResult {
    let parsed: StateFile = parse_file(state)?;
    let state = match parsed.into_state(cfg) {
        Ok(s) => s,
        Err(e) => return Ok(Outcome::from_error(e)),
    };
    let spectrum = match state.spectrum(cfg) {
        Ok(sp) => sp,
        Err(e) => return Ok(Outcome::from_error(e)),
    };
    let entropy = spectrum.entropy();
    Ok(Outcome::pass(
        json!({
            "ok": true,
            "dim": state.dim(),
            "spectrum": spectrum.values(),
            "sum": spectrum.sum(),
            "entropy_bits": entropy,
        }),
        format!("spectrum of dimension {}, entropy {entropy:.6} bits", state.dim()),
    ))
}

fn cmd_measure(state: &Path, povm: &Path, outcome: Option<usize>, cfg: &Config) -> CmdResult {
    let state_file: StateFile = parse_file(state)?;
    let povm_file: PovmFile = parse_file(povm)?;
    let run = || -> Result<Value, Error> {
        let state = state_file.into_state(cfg)?;
        let (povm, flag) = povm_file.into_povm(cfg)?;
        let probabilities = povm.outcome_probabilities(&state)?;
        let indices: Vec<usize> = match outcome {
            Some(k) => {
                if k >= povm.len() {
                    return Err(Error::IndexOutOfRange { index: k, len: povm.len() });
                }
                vec![k]
            }
            None => (0..povm.len()).collect(),
        };
        let mut outcomes = Vec::new();
        for k in indices {
            let o = povm.posterior_state(&state, k, cfg)?;
            outcomes.push(json!({
                "index": o.index,
                "probability": o.probability,
                "posterior": o.posterior.map(|p| StateFile::from_state(&p)),
            }));
        }
        let expected = povm.expected_spectrum(&state, cfg)?;
        let channel = povm.apply_channel(&state, cfg)?;
        let (s1, s2) = povm.entropy_pair(&state, cfg)?;
        Ok(json!({
            "ok": true,
            "bistochastic": flag.is_bistochastic,
            "probabilities": probabilities,
            "outcomes": outcomes,
            "expected_spectrum": expected.values(),
            "channel_output": StateFile::from_state(&channel),
            "s1": s1,
            "s2": s2,
        }))
    };
    match run() {
        Ok(report) => {
            let summary = format!(
                "measurement applied: s1 = {:.6}, s2 = {:.6}",
                report["s1"].as_f64().unwrap_or(f64::NAN),
                report["s2"].as_f64().unwrap_or(f64::NAN)
            );
            Ok(Outcome::pass(report, summary))
        }
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn load_sorted_vector(path: &Path, cfg: &Config) -> Result<Result<SortedVector, Error>, ParseFailure> {
    let parsed: VectorOrState = parse_file(path)?;
    Ok(match parsed {
        VectorOrState::Vector(v) => SortedVector::from_unsorted(v),
        VectorOrState::State(sf) => sf
            .into_state(cfg)
            .and_then(|s| s.spectrum(cfg))
            .map(SortedVector::from),
    })
}

fn cmd_majorize(a: &Path, b: &Path, cfg: &Config) -> CmdResult {
    let a = match load_sorted_vector(a, cfg)? {
        Ok(v) => v,
        Err(e) => return Ok(Outcome::from_error(e)),
    };
    let b = match load_sorted_vector(b, cfg)? {
        Ok(v) => v,
        Err(e) => return Ok(Outcome::from_error(e)),
    };
    match compare(&a, &b, cfg) {
        Ok(check) => {
            let report = json!({
                "ok": check.holds,
                "majorizes": check.holds,
                "min_slack": check.min_slack,
                "first_violation": check.first_violation,
            });
            let summary = if check.holds {
                format!("a ⪰ b holds (min slack {:.3e})", check.min_slack)
            } else {
                format!(
                    "a ⪰ b fails at prefix {} (slack {:.3e})",
                    check.first_violation.unwrap_or(0),
                    check.min_slack
                )
            };
            if check.holds {
                Ok(Outcome::pass(report, summary))
            } else {
                Ok(Outcome::fail(report, summary))
            }
        }
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn cmd_synthesize(source: &Path, target: &Path, out: &Path, cfg: &Config) -> CmdResult {
    let source_file: StateFile = parse_file(source)?;
    let target_file: StateFile = parse_file(target)?;
    let run = || -> Result<(Value, String), Error> {
        let sigma = source_file.into_state(cfg)?;
        let tau = target_file.into_state(cfg)?;
        let result = synthesize(&sigma, &tau, cfg)?;
        let file = PovmFile::from_povm(&result.povm);
        save_json(out, &file).map_err(|_| Error::Config {
            reason: "failed to write output file",
        })?;
        let report = json!({
            "ok": true,
            "residual": result.report.residual,
            "terms": result.report.terms,
            "completeness_residual": result.report.completeness_residual,
            "bistochastic_deviation": result.report.bistochastic_deviation,
            "weights": result.birkhoff.weights,
            "out": out.display().to_string(),
        });
        let summary = format!(
            "synthesized {} operators, reconstruction residual {:.3e}",
            result.report.terms, result.report.residual
        );
        Ok((report, summary))
    };
    match run() {
        Ok((report, summary)) => Ok(Outcome::pass(report, summary)),
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn cmd_ptrace(state: &Path, keep: usize, cfg: &Config) -> CmdResult {
    let parsed: MultipartyStateFile = parse_file(state)?;
    if keep == 0 {
        return Err(ParseFailure("--keep is 1-based".to_string()));
    }
    let run = || -> Result<(Value, String), Error> {
        let ms = parsed.into_state(cfg)?;
        let marginal = ms.partial_trace(keep - 1, cfg)?;
        let spectrum = marginal.spectrum(cfg)?;
        let report = json!({
            "ok": true,
            "keep": keep,
            "state": StateFile::from_state(&marginal),
            "spectrum": spectrum.values(),
            "entropy_bits": spectrum.entropy(),
        });
        let summary = format!("traced onto agent {keep}: dimension {}", marginal.dim());
        Ok((report, summary))
    };
    match run() {
        Ok((report, summary)) => Ok(Outcome::pass(report, summary)),
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn cmd_lift(povm: &Path, factors: &[usize], agent: usize, out: Option<&Path>, cfg: &Config) -> CmdResult {
    let parsed: PovmFile = parse_file(povm)?;
    if agent == 0 {
        return Err(ParseFailure("--agent is 1-based".to_string()));
    }
    if factors.is_empty() {
        return Err(ParseFailure("--factors must list at least one dimension".to_string()));
    }
    let run = || -> Result<(Value, String), Error> {
        let (local, _) = parsed.into_povm(cfg)?;
        let space = TensorSpace::new(factors.to_vec(), cfg)?;
        let lp = LocalPovm::new(agent - 1, local, &space)?;
        let (lifted, flag) = lp.lift(&space, cfg)?;
        let file = PovmFile::from_povm(&lifted);
        let mut report = json!({
            "ok": true,
            "dim": lifted.dim(),
            "operators": lifted.len(),
            "completeness_residual": lifted.completeness_residual(),
            "bistochastic": flag.is_bistochastic,
            "bistochastic_deviation": flag.deviation,
        });
        if let Some(path) = out {
            save_json(path, &file).map_err(|_| Error::Config {
                reason: "failed to write output file",
            })?;
            report["out"] = json!(path.display().to_string());
        } else {
            report["povm"] = serde_json::to_value(&file).expect("povm file serializes");
        }
        let summary = format!(
            "lifted to dimension {} ({} operators)",
            lifted.dim(),
            lifted.len()
        );
        Ok((report, summary))
    };
    match run() {
        Ok((report, summary)) => Ok(Outcome::pass(report, summary)),
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn cmd_locc_run(
    protocol: &Path,
    state: &Path,
    check: Option<CheckKind>,
    target: Option<&Path>,
    cfg: &Config,
) -> CmdResult {
    let protocol_file: ProtocolFile = parse_file(protocol)?;
    let state_file: MultipartyStateFile = parse_file(state)?;
    let target_file: Option<MultipartyStateFile> = match (check, target) {
        (Some(CheckKind::Deterministic), Some(path)) => Some(parse_file(path)?),
        (Some(CheckKind::Deterministic), None) => {
            return Err(ParseFailure(
                "--check deterministic requires --target".to_string(),
            ))
        }
        _ => None,
    };
    let run = || -> Result<(Value, String, bool), Error> {
        let protocol = protocol_file.into_protocol(cfg)?;
        let initial = state_file.into_state(cfg)?;
        let ensemble = run_protocol(&protocol, &initial, cfg)?;
        let parties = protocol.space().parties();
        let mut branches = Vec::new();
        for branch in ensemble.branches() {
            let mut locals = Vec::with_capacity(parties);
            for agent in 0..parties {
                let marginal = branch.state.partial_trace(agent, cfg)?;
                locals.push(marginal.spectrum(cfg)?.values().to_vec());
            }
            branches.push(json!({
                "probability": branch.probability,
                "history": branch.history,
                "local_spectra": locals,
            }));
        }
        let monotonicity = check_monotonicity(&protocol, &initial, cfg)?;
        let mut pass = true;
        let mut report = json!({
            "ok": true,
            "branches": branches,
            "monotonicity": serde_json::to_value(&monotonicity).expect("report serializes"),
        });
        let mut summary = format!(
            "{} branches after {} steps; monotone: {}",
            ensemble.len(),
            protocol.steps().len(),
            monotonicity.ok
        );
        if matches!(check, Some(CheckKind::Monotonicity)) && !monotonicity.ok {
            pass = false;
        }
        if let Some(tf) = target_file {
            let target = tf.into_state(cfg)?;
            let det = check_deterministic_transform(&protocol, &initial, &target, cfg)?;
            summary = format!(
                "{summary}; deterministic: {} (target deviation {:.3e})",
                det.deterministic, det.max_target_deviation
            );
            if !det.ok {
                pass = false;
            }
            report["deterministic"] = serde_json::to_value(&det).expect("report serializes");
        }
        report["ok"] = json!(pass);
        Ok((report, summary, pass))
    };
    match run() {
        Ok((report, summary, true)) => Ok(Outcome::pass(report, summary)),
        Ok((report, summary, false)) => Ok(Outcome::fail(report, summary)),
        Err(e) => Ok(Outcome::from_error(e)),
    }
}

fn cmd_verify(name: &str, cfg: &Config) -> CmdResult {
    let Some(suite) = Suite::parse(name) else {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        return Err(ParseFailure(format!(
            "unknown suite \"{name}\"; expected one of: {}",
            names.join(", ")
        )));
    };
    let report = run_suite(suite, cfg);
    let summary = format!(
        "suite {}: {}/{} passed, {} {:.3e} (worst seed {})",
        report.suite, report.passes, report.trials, report.metric, report.worst_value, report.worst_seed
    );
    let ok = report.ok;
    let value = serde_json::to_value(&report).expect("report serializes");
    if ok {
        Ok(Outcome::pass(value, summary))
    } else {
        Ok(Outcome::fail(value, summary))
    }
}

fn cmd_counterexample(name: &str, cfg: &Config) -> CmdResult {
    if name != "trace-preserving-entropy-drop" {
        return Err(ParseFailure(format!(
            "unknown counterexample \"{name}\"; expected trace-preserving-entropy-drop"
        )));
    }
    match trace_preserving_entropy_drop(cfg) {
        Ok(report) => {
            let summary = format!(
                "entropy {} -> {} under a trace-preserving, non-bi-stochastic measurement",
                report.input_entropy, report.output_entropy
            );
            let ok = report.ok;
            let value = serde_json::to_value(&report).expect("report serializes");
            if ok {
                Ok(Outcome::pass(value, summary))
            } else {
                Ok(Outcome::fail(value, summary))
            }
        }
        Err(e) => Ok(Outcome::from_error(e)),
    }
}
