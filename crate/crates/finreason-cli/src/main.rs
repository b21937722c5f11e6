//! `finreason`: command-line front end for the finreason toolkit.
//!
//! Every subcommand is line-oriented plain text by default and machine
//! JSON under `--json`. Exit codes: 0 on success, 1 on a domain error
//! (bad program text, missing record, failed check), 2 on a usage error
//! (clap prints the synopsis to standard error).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use finreason::attention::{
    disentangled_attention, disentangled_attention_injected, grad_check_disentangled,
    grad_check_standard, random_case, seeded_matrix, standard_attention_scaled, AttentionConfig,
    GradCheckOptions, RelPositionTable,
};
use finreason::dsl::{parse_program, serialize_program, OperationKind};
use finreason::equivalence::{canonical_pair, programs_equivalent, random_eval_oracle};
use finreason::eval::{
    evaluate, gold_self_check, load_dataset, load_predictions, EvalOptions, EvalReport,
};
use finreason::executor::{execute_program, Answer, FinTable, Tolerances};
use finreason::fusion::{
    average_retriever_scores, rank_top_k, recall_at_k, sample_negatives, weighted_program_fusion,
    CandidateProgram, FusionWeights, ModelScores, ScoreMap,
};
use finreason::mask::{initial_state, tokenize, VocabPartition, EOF_TOKEN, MAX_STEPS};

// ---------------------------------------------------------------------------
// Command-line surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "finreason",
    version,
    about = "Parse, execute, compare, decode, fuse, and score financial reasoning programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse program text and echo its canonical serialization.
    Parse(ParseArgs),
    /// Execute a program, optionally against a table or a dataset record.
    Exec(ExecArgs),
    /// Decide whether two programs are symbolically equivalent.
    Equiv(EquivArgs),
    /// Trace the decoding automaton over partial program text.
    MaskTrace(MaskTraceArgs),
    /// Score a predictions file against a dataset.
    Eval(EvalArgs),
    /// Audit that gold programs reproduce their stored answers.
    SelfCheck(SelfCheckArgs),
    /// Average retriever score files and rank the top facts.
    FuseRetriever(FuseRetrieverArgs),
    /// Draw training negatives for a record, seeded and reproducible.
    SampleNegatives(SampleNegativesArgs),
    /// Pick the weighted-ensemble winner among candidate programs.
    FuseGenerator(FuseGeneratorArgs),
    /// Run the attention gradient checks and reduction identity.
    AttnCheck(AttnCheckArgs),
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe consumer closes early (`head`,
    // `grep -m1`), matching other line-oriented tools; Rust's default
    // ignores SIGPIPE and panics on the failed write instead.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Parse(args) => cmd_parse(args),
        Command::Exec(args) => cmd_exec(args),
        Command::Equiv(args) => cmd_equiv(args),
        Command::MaskTrace(args) => cmd_mask_trace(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SelfCheck(args) => cmd_self_check(args),
        Command::FuseRetriever(args) => cmd_fuse_retriever(args),
        Command::SampleNegatives(args) => cmd_sample_negatives(args),
        Command::FuseGenerator(args) => cmd_fuse_generator(args),
        Command::AttnCheck(args) => cmd_attn_check(args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_table(path: &Path) -> Result<FinTable> {
    let raw: Vec<Vec<String>> = read_json(path)?;
    Ok(FinTable::from_raw_rows(&raw))
}

/// Tolerance overrides shared by the scoring subcommands; unset flags keep
/// the executor defaults.
#[derive(Args)]
struct TolArgs {
    /// Absolute tolerance for numeric answer matching.
    #[arg(long, value_name = "EPS")]
    abs_tol: Option<f64>,
    /// Relative tolerance for numeric answer matching.
    #[arg(long, value_name = "EPS")]
    rel_tol: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(abs) = self.abs_tol {
            tol.abs_tol = abs;
        }
        if let Some(rel) = self.rel_tol {
            tol.rel_tol = rel;
        }
        tol
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("valid JSON"));
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ParseArgs {
    /// Program text, e.g. "add(1, 2), subtract(#0, 5)".
    program: String,
    #[arg(long)]
    json: bool,
}

fn cmd_parse(args: ParseArgs) -> Result<()> {
    let program = parse_program(&args.program)?;
    let text = serialize_program(&program);
    if args.json {
        print_json(&json!({ "program": text, "steps": program.len() }));
    } else {
        println!("{text}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// exec
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExecArgs {
    /// Program text to execute.
    program: String,
    /// Table file: a JSON array of string rows, header row first.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["dataset", "record"])]
    table: Option<PathBuf>,
    /// Dataset file to pull a record's table from (with --record).
    #[arg(long, value_name = "FILE", requires = "record")]
    dataset: Option<PathBuf>,
    /// Record id inside --dataset whose table to execute against.
    #[arg(long, value_name = "ID", requires = "dataset")]
    record: Option<String>,
    #[arg(long)]
    json: bool,
}

fn cmd_exec(args: ExecArgs) -> Result<()> {
    let table = if let Some(path) = &args.table {
        load_table(path)?
    } else if let Some(dataset) = &args.dataset {
        let id = args.record.as_deref().expect("clap enforces --record");
        let records = load_dataset(dataset)?;
        records
            .into_iter()
            .find(|r| r.id == id)
            .map(|r| r.table)
            .ok_or_else(|| anyhow!("record `{id}` not found in {}", dataset.display()))?
    } else {
        FinTable::empty()
    };

    let program = parse_program(&args.program)?;
    let answer = execute_program(&program, &table)?;
    if args.json {
        let value = match answer {
            Answer::Numeric(v) => json!({ "answer": v }),
            Answer::Boolean(b) => json!({ "answer": b }),
        };
        print_json(&value);
    } else {
        println!("{answer}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// equiv
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EquivArgs {
    program_a: String,
    program_b: String,
    /// Also cross-check the verdict by randomized evaluation (20 trials).
    #[arg(long)]
    oracle: bool,
    /// Seed for --oracle trials.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

fn cmd_equiv(args: EquivArgs) -> Result<()> {
    let a = parse_program(&args.program_a).context("program A")?;
    let b = parse_program(&args.program_b).context("program B")?;
    let equivalent = programs_equivalent(&a, &b);
    let (canon_a, canon_b) = canonical_pair(&a, &b);
    let oracle = if args.oracle {
        Some(random_eval_oracle(&a, &b, 20, args.seed)?)
    } else {
        None
    };

    if args.json {
        let mut value = json!({
            "equivalent": equivalent,
            "canonical_a": canon_a.as_str(),
            "canonical_b": canon_b.as_str(),
        });
        if let Some(agrees) = oracle {
            value["oracle_agrees"] = json!(agrees);
        }
        print_json(&value);
    } else {
        println!("{}", if equivalent { "equivalent" } else { "not equivalent" });
        println!("canonical a: {canon_a}");
        println!("canonical b: {canon_b}");
        if let Some(agrees) = oracle {
            println!(
                "randomized evaluation: {}",
                if agrees { "values agree" } else { "values differ" }
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mask-trace
// ---------------------------------------------------------------------------

/// Vocabulary file layout for `mask-trace`: operation names (all ten when
/// omitted), literal token pools, and how many step-memory tokens exist.
#[derive(Deserialize)]
struct VocabSpec {
    #[serde(default)]
    ops: Vec<String>,
    #[serde(default)]
    numbers: Vec<String>,
    #[serde(default)]
    constants: Vec<String>,
    #[serde(default)]
    rows: Vec<String>,
    #[serde(default = "default_memory_slots")]
    memory_slots: usize,
}

fn default_memory_slots() -> usize {
    MAX_STEPS
}

fn build_vocab(spec: &VocabSpec) -> Result<VocabPartition> {
    let vocab = if spec.ops.is_empty() {
        VocabPartition::with_all_ops(
            &spec.numbers,
            &spec.constants,
            &spec.rows,
            spec.memory_slots,
        )?
    } else {
        let ops: Vec<OperationKind> = spec
            .ops
            .iter()
            .map(|name| {
                OperationKind::from_name(name)
                    .ok_or_else(|| anyhow!("unknown operation `{name}` in vocabulary"))
            })
            .collect::<Result<_>>()?;
        VocabPartition::new(
            &ops,
            &spec.numbers,
            &spec.constants,
            &spec.rows,
            spec.memory_slots,
        )?
    };
    Ok(vocab)
}

#[derive(Args)]
struct MaskTraceArgs {
    /// Vocabulary file: {"ops": [...], "numbers": [...], "constants": [...],
    /// "rows": [...], "memory_slots": N}; omitted ops mean all ten.
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,
    /// Partial program text to trace, e.g. "add(1, 2), subtract(".
    text: String,
    /// Also feed the end-of-program token after the text.
    #[arg(long)]
    eof: bool,
    #[arg(long)]
    json: bool,
}

fn cmd_mask_trace(args: MaskTraceArgs) -> Result<()> {
    let spec: VocabSpec = read_json(&args.vocab)?;
    let vocab = build_vocab(&spec)?;
    let mut sequence = tokenize(&args.text);
    if args.eof {
        sequence.push(EOF_TOKEN.to_string());
    }

    let mut state = initial_state();
    let mut positions = Vec::new();
    positions.push((0usize, None::<String>, vocab.valid_mask(&state).allowed(&vocab)));
    for (index, token) in sequence.iter().enumerate() {
        state = vocab
            .advance(&state, token)
            .with_context(|| format!("position {}", index + 1))?;
        positions.push((
            index + 1,
            Some(token.clone()),
            vocab.valid_mask(&state).allowed(&vocab),
        ));
    }

    if args.json {
        let rows: Vec<serde_json::Value> = positions
            .iter()
            .map(|(index, token, allowed)| {
                json!({ "position": index, "token": token, "allowed": allowed })
            })
            .collect();
        print_json(&json!({
            "positions": rows,
            "completed_steps": state.completed_steps(),
            "accepted": state.is_accepted(),
        }));
    } else {
        for (index, token, allowed) in &positions {
            let label = token.as_deref().unwrap_or("<start>");
            println!("{index:>3}  {label:<14} allowed: {}", allowed.join(" | "));
        }
        println!(
            "completed steps: {}; next: {}; accepted: {}",
            state.completed_steps(),
            state.slot(),
            if state.is_accepted() { "yes" } else { "no" }
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EvalArgs {
    /// Dataset file: JSON array of records with a `qa` block.
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Predictions file: JSON array of {"id", "program"}.
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,
    #[command(flatten)]
    tol: TolArgs,
    /// Also accept a predicted value off by a factor of 100 (percent forms).
    #[arg(long)]
    percent_lenient: bool,
    /// Write the full JSON report to a file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let dataset = load_dataset(&args.dataset)?;
    let predictions = load_predictions(&args.predictions)?;
    let opts = EvalOptions {
        tolerances: args.tol.resolve(),
        percent_lenient: args.percent_lenient,
    };
    let report = evaluate(&dataset, &predictions, &opts);
    write_report(&report, args.out.as_deref(), args.json)
}

fn write_report(report: &EvalReport, out: Option<&Path>, as_json: bool) -> Result<()> {
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(report)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if as_json {
        print_json(&serde_json::to_value(report)?);
    } else {
        print!("{}", report.summary());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// self-check
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SelfCheckArgs {
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    #[command(flatten)]
    tol: TolArgs,
    /// How many mismatching records to list in plain output.
    #[arg(long, default_value_t = 5, value_name = "N")]
    show_mismatches: usize,
    #[arg(long)]
    json: bool,
}

fn cmd_self_check(args: SelfCheckArgs) -> Result<()> {
    let dataset = load_dataset(&args.dataset)?;
    let report = gold_self_check(&dataset, args.tol.resolve());
    if args.json {
        print_json(&serde_json::to_value(&report)?);
    } else {
        println!(
            "gold self-check {:.6} ({}/{})",
            report.fraction, report.matched, report.total
        );
        for mismatch in report.mismatches.iter().take(args.show_mismatches) {
            println!(
                "  {}: computed {}, expected {}",
                mismatch.id, mismatch.computed, mismatch.expected
            );
        }
        let hidden = report.mismatches.len().saturating_sub(args.show_mismatches);
        if hidden > 0 {
            println!("  ... and {hidden} more");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fuse-retriever
// ---------------------------------------------------------------------------

#[derive(Args)]
struct FuseRetrieverArgs {
    /// Score files: each either {"model", "scores"} or a bare fact->score map.
    #[arg(required = true, value_name = "FILE")]
    scores: Vec<PathBuf>,
    /// How many facts to keep in the ranking.
    #[arg(long, default_value_t = 3, value_name = "K")]
    top_k: usize,
    /// Gold fact ids (JSON array); enables the recall readout.
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn load_score_map(path: &Path) -> Result<ScoreMap> {
    let value: serde_json::Value = read_json(path)?;
    let model: ModelScores = if value.get("scores").is_some() {
        serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?
    } else {
        ModelScores {
            model: path.display().to_string(),
            scores: serde_json::from_value(value)
                .with_context(|| format!("parsing {}", path.display()))?,
        }
    };
    model.validate()?;
    Ok(model.scores)
}

fn cmd_fuse_retriever(args: FuseRetrieverArgs) -> Result<()> {
    let maps: Vec<ScoreMap> = args
        .scores
        .iter()
        .map(|path| load_score_map(path))
        .collect::<Result<_>>()?;
    let averaged = average_retriever_scores(&maps)?;
    let ranking = rank_top_k(&averaged, args.top_k);
    let recall = match &args.gold {
        Some(path) => {
            let gold: BTreeSet<String> = read_json::<Vec<String>>(path)?.into_iter().collect();
            Some(recall_at_k(&ranking, &gold, args.top_k)?)
        }
        None => None,
    };

    if args.json {
        let ranked: Vec<serde_json::Value> = ranking
            .iter()
            .map(|fact| json!({ "fact": fact, "score": averaged[fact] }))
            .collect();
        let mut value = json!({ "averaged": averaged, "ranking": ranked });
        if let Some(r) = recall {
            value["recall_at_k"] = json!(r);
        }
        print_json(&value);
    } else {
        for (rank, fact) in ranking.iter().enumerate() {
            println!("{:>2}  {fact}  {:.6}", rank + 1, averaged[fact]);
        }
        if let Some(r) = recall {
            println!("recall@{} {:.6}", args.top_k, r);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sample-negatives
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SampleNegativesArgs {
    /// All candidate fact ids (JSON array).
    #[arg(long, value_name = "FILE")]
    facts: PathBuf,
    /// Gold fact ids to exclude (JSON array).
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    /// Negatives per gold fact.
    #[arg(long, default_value_t = 3)]
    neg_rate: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

fn cmd_sample_negatives(args: SampleNegativesArgs) -> Result<()> {
    let facts: Vec<String> = read_json(&args.facts)?;
    let gold: BTreeSet<String> = read_json::<Vec<String>>(&args.gold)?.into_iter().collect();
    let sample = sample_negatives(&facts, &gold, args.neg_rate, args.seed);
    if args.json {
        print_json(&json!(sample));
    } else {
        for fact in &sample {
            println!("{fact}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fuse-generator
// ---------------------------------------------------------------------------

/// Candidate file layout: one entry per decoded program with one score per
/// ensemble model.
#[derive(Deserialize)]
struct RawCandidate {
    program: String,
    scores: Vec<f64>,
}

#[derive(Args)]
struct FuseGeneratorArgs {
    /// Candidates file: JSON array of {"program", "scores": [...]}.
    #[arg(long, value_name = "FILE")]
    candidates: PathBuf,
    /// Model weights (JSON array of numbers); uniform when omitted.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn cmd_fuse_generator(args: FuseGeneratorArgs) -> Result<()> {
    let raw: Vec<RawCandidate> = read_json(&args.candidates)?;
    if raw.is_empty() {
        bail!("candidates file holds no entries");
    }
    let models = raw[0].scores.len();
    let candidates: Vec<CandidateProgram> = raw
        .into_iter()
        .enumerate()
        .map(|(index, c)| {
            let program = parse_program(&c.program)
                .with_context(|| format!("candidate {index} (`{}`)", c.program))?;
            Ok(CandidateProgram::new(program, c.scores)?)
        })
        .collect::<Result<_>>()?;
    let weights = match &args.weights {
        Some(path) => FusionWeights::new(read_json(path)?)?,
        None => FusionWeights::uniform(models)?,
    };
    let (winner, score) = weighted_program_fusion(&candidates, &weights)?;
    let text = serialize_program(&winner);
    if args.json {
        print_json(&json!({ "program": text, "score": score }));
    } else {
        println!("{text}");
        println!("fused score {score:.6}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// attn-check
// ---------------------------------------------------------------------------

#[derive(Args)]
struct AttnCheckArgs {
    /// First seed; consecutive seeds follow.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// How many seeds to check.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Sequence length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Embedding width.
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Maximum relative distance.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Largest acceptable relative error against finite differences.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long)]
    json: bool,
}

fn cmd_attn_check(args: AttnCheckArgs) -> Result<()> {
    let cfg = AttentionConfig::new(args.n, args.d, args.k)?;
    let opts = GradCheckOptions::default();

    let mut cases = Vec::new();
    let mut worst = 0.0f64;
    for seed in args.seed..args.seed + args.seeds.max(1) {
        let (h, rel, proj) = random_case(&cfg, seed);
        let standard = grad_check_standard(&h, &proj.w_qc, &proj.w_kc, &proj.w_vc, &opts)?;
        let disentangled = grad_check_disentangled(&h, &rel, &proj, &opts)?;
        worst = worst.max(standard).max(disentangled);
        cases.push((seed, standard, disentangled));
    }

    // Zero relative-position table: scores and outputs must collapse to
    // standard attention at scale sqrt(3d).
    let (h, _, proj) = random_case(&cfg, args.seed);
    let zero = RelPositionTable::zeros(cfg.k, cfg.d);
    let (_, h_o) = disentangled_attention(&h, &zero, &proj)?;
    let reference = standard_attention_scaled(
        &h,
        &proj.w_qc,
        &proj.w_kc,
        &proj.w_vc,
        (3.0 * cfg.d as f64).sqrt(),
    )?;
    let reduction_gap = h_o.max_abs_diff(&reference);

    // Absolute-position injection touches the query side only: a zero
    // injection is a no-op, a random one shifts the output.
    let (case_h, rel, proj) = random_case(&cfg, args.seed);
    let (_, base) = disentangled_attention(&case_h, &rel, &proj)?;
    let zero_inject = seeded_matrix(cfg.n, cfg.d, args.seed).scale(0.0);
    let (_, unshifted) = disentangled_attention_injected(&case_h, &zero_inject, &rel, &proj)?;
    let random_inject = seeded_matrix(cfg.n, cfg.d, args.seed ^ 0x5A5A);
    let (_, shifted) = disentangled_attention_injected(&case_h, &random_inject, &rel, &proj)?;
    let emd_zero_shift = base.max_abs_diff(&unshifted);
    let emd_random_shift = base.max_abs_diff(&shifted);

    if args.json {
        let rows: Vec<serde_json::Value> = cases
            .iter()
            .map(|(seed, standard, disentangled)| {
                json!({ "seed": seed, "standard": standard, "disentangled": disentangled })
            })
            .collect();
        print_json(&json!({
            "cases": rows,
            "worst": worst,
            "tolerance": args.tolerance,
            "reduction_gap": reduction_gap,
            "emd_zero_shift": emd_zero_shift,
            "emd_random_shift": emd_random_shift,
        }));
    } else {
        for (seed, standard, disentangled) in &cases {
            println!("seed {seed}  standard {standard:.3e}  disentangled {disentangled:.3e}");
        }
        println!("zero-position reduction gap {reduction_gap:.3e}");
        println!("emd injection shift: zero {emd_zero_shift:.3e}, random {emd_random_shift:.3e}");
    }

    if worst > args.tolerance {
        bail!("worst gradient error {worst:.3e} exceeds tolerance {:.1e}", args.tolerance);
    }
    if reduction_gap > 1e-12 {
        bail!("zero-position reduction gap {reduction_gap:.3e} exceeds 1e-12");
    }
    if emd_zero_shift != 0.0 {
        bail!("zero injection shifted the output by {emd_zero_shift:.3e}");
    }
    Ok(())
}
