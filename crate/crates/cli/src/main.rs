//! `normbet` — classify finite-state betting strategies against normal
//! sequences and simulate them on concrete symbol streams.
//!
//! Machine-readable output (JSON or CSV) goes to stdout, human summaries to
//! stderr. Exit codes: 0 success, 1 usage or parse failure, 2 domain
//! rejection (e.g. a family that is not superfair), 3 internal
//! contradiction (an invariant the tool itself guarantees was violated —
//! always a bug worth reporting).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use normbet_core::classify::{classify_general, classify_star, ProbeParams};
use normbet_core::family::FairnessKind;
use normbet_core::support::{
    build_support_automaton, bscc_structure, pseudo_mixing_word, reachability_graph, star_check,
    support_automaton_dot, synchronizing_word,
};
use normbet_core::trajectory::{evolve, rate_fit, write_csv, EvolveOptions, FitTarget};
use normbet_core::{
    betting_subspace, presets, BettingAutomaton, Error, MatrixFamily, Mode, NonNegVector,
    SequenceSource,
};

const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser)]
#[command(
    name = "normbet",
    version,
    about = "Decide whether a finite-state betting strategy dies, goes broke, or stabilizes against normal sequences"
)]
struct Cli {
    /// Arithmetic mode: "exact", "float", or "float:<eps>". Overrides the
    /// NORMBET_MODE environment variable and the file's own "mode" field.
    #[arg(long, global = true)]
    mode: Option<String>,

    /// Seed for every randomized element (probe trials, random sequences).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the fairness verdict of a matrix family.
    Verify {
        /// Family JSON file.
        family: PathBuf,
    },
    /// Classify a family (or a betting automaton) against normal sequences.
    Classify(ClassifyArgs),
    /// Evolve a capital vector along a symbol stream; emit per-step CSV.
    Simulate(SimulateArgs),
    /// Expected capital of a betting automaton on a sequence prefix.
    Expected(ExpectedArgs),
    /// Write the bundled example files (case0, case1, case2, fig1).
    Examples(ExamplesArgs),
    /// Support-automaton structure: BSCCs, synchronizing and pseudo-mixing words.
    Support {
        /// Family JSON file.
        family: PathBuf,
        /// Also write a DOT rendering of the support automaton here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ClassifyArgs {
    /// Family JSON file (omit when using --automaton).
    family: Option<PathBuf>,
    /// Betting-automaton JSON file; converted to its matrix family first.
    #[arg(long, conflicts_with = "family")]
    automaton: Option<PathBuf>,
    /// Skip the live-contraction probe in the general (multi-component) case.
    #[arg(long)]
    no_probe: bool,
    /// Word length for the probe.
    #[arg(long, default_value_t = 100)]
    probe_len: usize,
    /// Number of sampled words for the probe.
    #[arg(long, default_value_t = 1000)]
    probe_trials: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Family JSON file.
    family: PathBuf,
    /// Starting vector as comma-separated entries ("1,0,0,0" or "1/2,1/2");
    /// defaults to the uniform vector.
    #[arg(long)]
    vector: Option<String>,
    /// Symbol stream: champernowne[:<base>], periodic:<word>, file:<path>,
    /// or random[:<seed>].
    #[arg(long)]
    sequence: String,
    /// Number of letters to consume.
    #[arg(long)]
    steps: usize,
    /// Compute the Live diagnostic along the trajectory.
    #[arg(long)]
    live: bool,
    /// Compute Live only every k-th step.
    #[arg(long, default_value_t = 1)]
    live_every: usize,
    /// Add the projective distance to the family's fixed direction.
    #[arg(long)]
    dh: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Append a fit of this series as a trailing "#fit=" JSON line:
    /// norm, live, or dh.
    #[arg(long)]
    fit: Option<String>,
    /// Force the fit's limit instead of estimating it from the tail.
    #[arg(long)]
    fit_limit: Option<f64>,
}

#[derive(Args)]
struct ExpectedArgs {
    /// Betting-automaton JSON file.
    automaton: PathBuf,
    /// Symbol stream (same syntax as simulate).
    #[arg(long)]
    sequence: String,
    /// Prefix length n: the report is about the capital after n letters.
    #[arg(long)]
    steps: usize,
    /// Add a Monte Carlo estimate: number of trials and seed.
    #[arg(long, num_args = 2, value_names = ["TRIALS", "SEED"])]
    mc: Option<Vec<u64>>,
}

#[derive(Args)]
struct ExamplesArgs {
    /// Which example: case0, case1, case2, or fig1.
    name: String,
    /// Directory to write into.
    #[arg(long, default_value = ".")]
    dir: PathBuf,
    /// Stay-probability of the first state (case1 only).
    #[arg(long, default_value = "3/10")]
    p1: String,
    /// Stay-probability of the second state (case1 only).
    #[arg(long, default_value = "3/5")]
    p2: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Render clap's message (help/version exit cleanly).
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let payload = json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() }
            });
            println!("{}", pretty(&payload));
            eprintln!("error: {e}");
            ExitCode::from(error_exit(&e))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let mode = resolve_mode(cli.mode.as_deref())?;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Verify { family } => cmd_verify(&family, mode),
        Command::Classify(args) => cmd_classify(&args, mode, seed),
        Command::Simulate(args) => cmd_simulate(&args, mode, seed),
        Command::Expected(args) => cmd_expected(&args, mode, seed),
        Command::Examples(args) => cmd_examples(&args),
        Command::Support { family, dot } => cmd_support(&family, dot.as_deref(), mode),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_verify(path: &Path, mode: Option<Mode>) -> Result<ExitCode, Error> {
    let family = load_family(path, mode)?;
    let verdict = family.validate();
    println!("{}", pretty(&verdict.to_json()));
    eprintln!(
        "{}: {} states over {} symbols -> {:?}",
        path.display(),
        family.dim(),
        family.size(),
        verdict.kind
    );
    if verdict.kind == FairnessKind::NotSuperfair {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(args: &ClassifyArgs, mode: Option<Mode>, seed: u64) -> Result<ExitCode, Error> {
    let family = match (&args.family, &args.automaton) {
        (Some(path), None) => load_family(path, mode)?,
        (None, Some(path)) => {
            let automaton = load_automaton(path, mode)?;
            automaton.to_matrix_family()?.0
        }
        (None, None) => {
            return Err(Error::Malformed(
                "provide a family file or --automaton <file>".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting inputs"),
    };
    family.require_superfair()?;
    let graph = reachability_graph(&family);
    let payload = if star_check(&graph) {
        let c = classify_star(&family)?;
        eprintln!("strongly connected; case {}", c.case.label());
        c.to_json(&family)
    } else {
        let probe = ProbeParams { word_len: args.probe_len, trials: args.probe_trials, seed };
        let report =
            classify_general(&family, if args.no_probe { None } else { Some(&probe) })?;
        eprintln!(
            "{} components, {} leakage edges{}",
            report.condensation.len(),
            report.leakage_edges.len(),
            if report.mixed { ", mixed cases" } else { "" }
        );
        report.to_json(&family)
    };
    println!("{}", pretty(&payload));
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs, mode: Option<Mode>, seed: u64) -> Result<ExitCode, Error> {
    let family = load_family(&args.family, mode)?;
    let vector = match &args.vector {
        Some(text) => parse_vector(text, &family)?,
        None => NonNegVector::uniform(family.dim(), family.mode()),
    };
    let mut src = parse_sequence(&args.sequence, family.alphabet(), seed)?;
    let dh_target = if args.dh {
        let c = classify_star(&family)?;
        match c.x {
            Some(fd) => Some(fd.x),
            None => {
                return Err(Error::DegenerateSelection(
                    "the family has no fixed direction (every trajectory dies)".into(),
                ))
            }
        }
    } else {
        None
    };
    let opts = EvolveOptions {
        live_basis: if args.live { Some(betting_subspace(&family)) } else { None },
        live_every: args.live_every,
        dh_target,
    };
    let records = evolve(&family, &vector, &mut src, args.steps, &opts)?;
    let fit = match &args.fit {
        Some(target) => Some(rate_fit(&records, FitTarget::parse(target)?, args.fit_limit)?),
        None => None,
    };

    let mut out: Vec<u8> = Vec::new();
    write_csv(&records, &mut out)?;
    if let Some(fit) = &fit {
        writeln!(&mut out, "#fit={}", fit.to_json())?;
    }
    match &args.csv {
        Some(path) => fs::write(path, &out)?,
        None => {
            std::io::stdout().write_all(&out)?;
        }
    }
    let last = records.last().expect("evolve emits at least one record");
    eprintln!(
        "{} steps; final log-capital {:.6}{}{}",
        args.steps,
        last.log_norm,
        if last.dead { " (dead)" } else { "" },
        match &fit {
            Some(f) => format!("; fitted beta {:.6} (r^2 {:.4})", f.beta, f.r_squared),
            None => String::new(),
        }
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_expected(args: &ExpectedArgs, mode: Option<Mode>, seed: u64) -> Result<ExitCode, Error> {
    let automaton = load_automaton(&args.automaton, mode)?;
    let mut src = parse_sequence(&args.sequence, automaton.alphabet(), seed)?;
    let exact = automaton.expected_capital(&mut src, args.steps)?;
    let mut payload = json!({
        "steps": args.steps,
        "exact": exact.to_json(),
    });
    if let Some(mc) = &args.mc {
        let (trials, mc_seed) = (mc[0], mc[1]);
        let mut src = parse_sequence(&args.sequence, automaton.alphabet(), seed)?;
        let estimate = automaton.mc_capital(&mut src, args.steps, trials, mc_seed)?;
        payload["mc"] = estimate.to_json();
    }
    println!("{}", pretty(&payload));
    eprintln!("expected capital after {} letters: {}", args.steps, exact);
    Ok(ExitCode::SUCCESS)
}

fn cmd_examples(args: &ExamplesArgs) -> Result<ExitCode, Error> {
    let mode = Mode::Exact;
    let mut written: Vec<PathBuf> = Vec::new();
    let emit = |name: &str, value: Value, written: &mut Vec<PathBuf>| -> Result<(), Error> {
        let path = args.dir.join(name);
        fs::write(&path, format!("{}\n", pretty(&value)))?;
        written.push(path);
        Ok(())
    };
    match args.name.as_str() {
        "case0" => {
            emit("case0_automaton.json", presets::case0_automaton().to_json(), &mut written)?;
            emit("case0_family.json", presets::case0_family().to_json(), &mut written)?;
        }
        "case1" => {
            let p1 = mode.parse(&args.p1)?;
            let p2 = mode.parse(&args.p2)?;
            let automaton = presets::case1_automaton(p1.clone(), p2.clone())?;
            emit("case1_automaton.json", automaton.to_json(), &mut written)?;
            emit("case1_family.json", presets::case1_family(p1, p2)?.to_json(), &mut written)?;
        }
        "case2" => {
            emit("case2_automaton.json", presets::case2_automaton().to_json(), &mut written)?;
            emit("case2_family.json", presets::case2_family().to_json(), &mut written)?;
        }
        "fig1" => {
            emit("fig1_automaton.json", presets::fig1_automaton().to_json(), &mut written)?;
        }
        other => {
            return Err(Error::Malformed(format!(
                "unknown example {other:?} (expected case0, case1, case2, or fig1)"
            )))
        }
    }
    let paths: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    println!("{}", pretty(&json!({ "written": paths })));
    eprintln!("wrote {} file(s) to {}", written.len(), args.dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_support(path: &Path, dot: Option<&Path>, mode: Option<Mode>) -> Result<ExitCode, Error> {
    let family = load_family(path, mode)?;
    let aut = build_support_automaton(&family);
    let bs = bscc_structure(&aut)?;
    let sync = synchronizing_word(&aut);
    let pseudo = match (aut.star, bs.minimal_member) {
        (true, Some(fset)) => {
            Some(family.word_to_string(&pseudo_mixing_word(&family, &aut, &bs, fset)?))
        }
        _ => None,
    };
    let mut payload = json!({
        "states": aut.len(),
        "star": aut.star,
        "contains_null": aut.contains_null,
        "bscc": bs.to_json(&aut),
        "synchronizing_word": family.word_to_string(&sync),
        "pseudo_mixing_word": pseudo,
    });
    if let Some(dot_path) = dot {
        fs::write(dot_path, support_automaton_dot(&aut, &family, &bs))?;
        payload["dot"] = json!(dot_path.display().to_string());
    }
    println!("{}", pretty(&payload));
    eprintln!(
        "{} support states, {} BSCC(s){}",
        aut.len(),
        bs.bsccs.len(),
        if aut.star { "" } else { " (index graph not strongly connected)" }
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn resolve_mode(flag: Option<&str>) -> Result<Option<Mode>, Error> {
    let spec = match flag {
        Some(s) => Some(s.to_string()),
        None => std::env::var("NORMBET_MODE").ok(),
    };
    let Some(spec) = spec else { return Ok(None) };
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("exact") {
        return Ok(Some(Mode::Exact));
    }
    if spec.eq_ignore_ascii_case("float") {
        return Ok(Some(Mode::float_default()));
    }
    if let Some(eps) = spec.strip_prefix("float:") {
        let eps: f64 = eps
            .parse()
            .map_err(|_| Error::Malformed(format!("invalid float tolerance {eps:?}")))?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Malformed("float tolerance must be positive".into()));
        }
        return Ok(Some(Mode::Float { eps }));
    }
    Err(Error::Malformed(format!(
        "unknown mode {spec:?} (expected \"exact\", \"float\", or \"float:<eps>\")"
    )))
}

fn load_family(path: &Path, mode: Option<Mode>) -> Result<MatrixFamily, Error> {
    let text = fs::read_to_string(path)?;
    MatrixFamily::from_json_str(&text, mode)
}

fn load_automaton(path: &Path, mode: Option<Mode>) -> Result<BettingAutomaton, Error> {
    let text = fs::read_to_string(path)?;
    BettingAutomaton::from_json_str(&text, mode)
}

fn parse_vector(text: &str, family: &MatrixFamily) -> Result<NonNegVector, Error> {
    let entries = text
        .split(',')
        .map(|e| family.mode().parse(e))
        .collect::<Result<Vec<_>, Error>>()?;
    if entries.len() != family.dim() {
        return Err(Error::Malformed(format!(
            "vector has {} entries, family has dimension {}",
            entries.len(),
            family.dim()
        )));
    }
    NonNegVector::new(entries)
}

fn parse_sequence(spec: &str, alphabet: &[String], seed: u64) -> Result<SequenceSource, Error> {
    if let Some(rest) = spec.strip_prefix("champernowne") {
        let base = match rest.strip_prefix(':') {
            None if rest.is_empty() => alphabet.len(),
            Some(b) => b
                .parse::<usize>()
                .map_err(|_| Error::Malformed(format!("invalid base {b:?}")))?,
            None => return Err(Error::Malformed(format!("unknown sequence {spec:?}"))),
        };
        return SequenceSource::champernowne(base);
    }
    if let Some(word) = spec.strip_prefix("periodic:") {
        return SequenceSource::periodic(chars_to_symbols(word, alphabet)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)?;
        return SequenceSource::from_text(&text, alphabet);
    }
    if let Some(rest) = spec.strip_prefix("random") {
        let seed = match rest.strip_prefix(':') {
            None if rest.is_empty() => seed,
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::Malformed(format!("invalid seed {s:?}")))?,
            None => return Err(Error::Malformed(format!("unknown sequence {spec:?}"))),
        };
        return SequenceSource::random(seed, alphabet.len());
    }
    Err(Error::Malformed(format!(
        "unknown sequence {spec:?} (expected champernowne[:<base>], periodic:<word>, file:<path>, or random[:<seed>])"
    )))
}

fn chars_to_symbols(word: &str, alphabet: &[String]) -> Result<Vec<usize>, Error> {
    word.chars()
        .map(|c| {
            alphabet
                .iter()
                .position(|s| s.len() == c.len_utf8() && s.chars().next() == Some(c))
                .ok_or_else(|| Error::UnknownSymbol(c.to_string()))
        })
        .collect()
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializing an owned JSON value cannot fail")
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Malformed(_) => "malformed",
        Error::UnknownSymbol(_) => "unknown-symbol",
        Error::NotNonNegative { .. } => "not-non-negative",
        Error::NotSuperfair { .. } => "not-superfair",
        Error::SupportMismatch => "support-mismatch",
        Error::ZeroVector => "zero-vector",
        Error::NotPositive => "not-positive",
        Error::DegenerateSelection(_) => "degenerate-selection",
        Error::NotInBscc => "not-in-bscc",
        Error::NotPseudoMixing => "not-pseudo-mixing",
        Error::StarViolated => "star-violated",
        Error::SequenceTooShort { .. } => "sequence-too-short",
        Error::UnsupportedBase(_) => "unsupported-base",
        Error::DegenerateLiveCone => "degenerate-live-cone",
        Error::NoSignal(_) => "no-signal",
        Error::NumericalFailure(_) => "numerical-failure",
        Error::InternalContradiction(_) => "internal-contradiction",
        Error::Io(_) => "io",
    }
}

fn error_exit(e: &Error) -> u8 {
    match e {
        Error::Malformed(_) | Error::UnknownSymbol(_) | Error::Io(_) | Error::UnsupportedBase(_) => 1,
        Error::InternalContradiction(_) => 3,
        _ => 2,
    }
}
