//! Command-line interface: dataset generation, training, evaluation, rule
//! export, single-query inference, and a WMC self-check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use difflog::datagen::{generate_dataset, dataset_to_text, CompositionOracle, GenSpec};
use difflog::engine::{forward, predict, proof_report, ForwardConfig};
use difflog::learner::{
    self, evaluate, export_rules, oracle_matches, train, Checkpoint, RuleWeightStore, TrainConfig,
};
use difflog::logic::{Program, Vocabulary};
use difflog::manifest::RunManifest;
use difflog::parser::{parse_dataset, parse_priors, parse_program};
use difflog::provenance::{brute_force_wmc, random_formula, FormulaArena, WmcEvaluator};

/// Differentiable probabilistic Datalog for kinship reasoning.
#[derive(Parser)]
#[command(name = "difflog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic kinship chain dataset.
    GenData(GenDataArgs),
    /// Train composite rule weights from answer-only supervision.
    Train(TrainArgs),
    /// Evaluate a trained checkpoint on a dataset.
    Eval(EvalArgs),
    /// Print the heaviest learned rules.
    ExportRules(ExportArgs),
    /// Answer a single query over a KB file.
    Infer(InferArgs),
    /// Self-check: exact WMC against brute-force enumeration.
    CheckWmc(CheckWmcArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated `count x k` terms, e.g. `1000x2,1000x3`.
    #[arg(long)]
    counts: String,
    /// Add one disconnected distractor edge per sample.
    #[arg(long, default_value_t = false)]
    distractors: bool,
    /// Output path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Logic program (defaults to the built-in kinship program).
    #[arg(long)]
    program: Option<PathBuf>,
    /// Training dataset (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Optional rule priors file.
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Output checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch metrics log (JSONL).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Run manifest path (written before training).
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 150)]
    sample_rules: usize,
    #[arg(long, default_value_t = 0.1)]
    lr_rule: f64,
    #[arg(long, default_value_t = 1e-5)]
    lr_fact: f64,
    /// Top-k proof bound.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Disable the integrity-constraint semantic loss.
    #[arg(long, default_value_t = false)]
    no_constraints: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Number of top rules to evaluate with.
    #[arg(long, default_value_t = 150)]
    top: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 92)]
    top: usize,
    /// Also report how many exported rules agree with a `compose` oracle
    /// file.
    #[arg(long, name = "match")]
    match_oracle: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    program: Option<PathBuf>,
    /// KB dataset file; inference runs on its first record unless --index.
    #[arg(long)]
    kb: PathBuf,
    /// Record index within the KB file.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Override the query pair: subject object.
    #[arg(long, num_args = 2)]
    query: Option<Vec<String>>,
    /// Rule priors or exported-rules file supplying the rule set.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Trained checkpoint supplying the rule set (top --top rules).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 150)]
    top: usize,
    /// Top-k proof bound.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    /// Print this many proofs for the predicted relation.
    #[arg(long, default_value_t = 3)]
    proofs: usize,
}

#[derive(Args)]
struct CheckWmcArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    formulas: usize,
    #[arg(long, default_value_t = 12)]
    max_vars: usize,
}

/// Exit codes: 0 success, 2 input/format error, 3 internal failure.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::ExportRules(args) => cmd_export(args),
        Command::Infer(args) => cmd_infer(args),
        Command::CheckWmc(args) => cmd_check_wmc(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum CliError {
    Input(String),
    Internal(String),
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal_err(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn load_program(path: &Option<PathBuf>) -> Result<Program, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(input_err)?;
            parse_program(&text).map_err(input_err)
        }
        None => Ok(difflog::parser::kinship_program()),
    }
}

fn write_out(target: &str, content: &str) -> Result<(), CliError> {
    if target == "-" {
        print!("{content}");
        Ok(())
    } else {
        fs::write(target, content).map_err(internal_err)
    }
}

fn parse_counts(spec: &str) -> Result<Vec<(u32, u32)>, CliError> {
    spec.split(',')
        .map(|term| {
            let (count, k) = term
                .split_once('x')
                .ok_or_else(|| input_err(format!("bad counts term `{term}`, expected COUNTxK")))?;
            let count: u32 = count.trim().parse().map_err(input_err)?;
            let k: u32 = k.trim().parse().map_err(input_err)?;
            if k < 2 {
                return Err(input_err(format!("chain length k must be >= 2, got {k}")));
            }
            Ok((k, count))
        })
        .collect()
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let vocab = Vocabulary::kinship();
    let oracle = CompositionOracle::builtin(&vocab).map_err(internal_err)?;
    let spec = GenSpec {
        counts: parse_counts(&args.counts)?,
        seed: args.seed,
        distractors: args.distractors,
    };
    let samples = generate_dataset(&spec, &oracle, &vocab).map_err(internal_err)?;
    write_out(&args.out, &dataset_to_text(&samples, &vocab))
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let program = load_program(&args.program)?;
    let data_text = fs::read_to_string(&args.data).map_err(input_err)?;
    let samples = parse_dataset(&data_text, &program.vocab).map_err(input_err)?;
    let mut program = program;
    if let Some(priors_path) = &args.priors {
        let text = fs::read_to_string(priors_path).map_err(input_err)?;
        let priors = parse_priors(&text, &program.vocab).map_err(input_err)?;
        for (t, w) in priors.weights {
            program.template_facts.push((t, w));
        }
    }
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        sample_n: args.sample_rules,
        lr_rule: args.lr_rule,
        lr_fact: args.lr_fact,
        k: args.k,
        with_constraints: !args.no_constraints,
        seed: args.seed,
        ..Default::default()
    };
    if let Some(manifest_path) = &args.manifest {
        let mut inputs: Vec<&Path> = vec![args.data.as_path()];
        if let Some(p) = &args.program {
            inputs.push(p.as_path());
        }
        if let Some(p) = &args.priors {
            inputs.push(p.as_path());
        }
        let manifest = RunManifest::new(cfg.clone(), &inputs).map_err(input_err)?;
        manifest.write(manifest_path).map_err(internal_err)?;
    }
    let out = train(&samples, &program, &cfg).map_err(internal_err)?;
    if let Some(metrics_path) = &args.metrics {
        let mut log = String::new();
        for m in &out.metrics {
            log.push_str(&serde_json::to_string(m).map_err(internal_err)?);
            log.push('\n');
        }
        fs::write(metrics_path, log).map_err(internal_err)?;
    }
    let ck = Checkpoint::new(&out);
    let json = serde_json::to_string(&ck).map_err(internal_err)?;
    fs::write(&args.out, json).map_err(internal_err)?;
    if let Some(last) = out.metrics.last() {
        eprintln!(
            "trained {} epochs; final loss {:.4}, train accuracy {:.3}",
            out.metrics.len(),
            last.loss,
            last.train_accuracy
        );
    }
    Ok(())
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path).map_err(input_err)?;
    serde_json::from_str(&text).map_err(input_err)
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let program = load_program(&args.program)?;
    let data_text = fs::read_to_string(&args.data).map_err(input_err)?;
    let samples = parse_dataset(&data_text, &program.vocab).map_err(input_err)?;
    let ck = read_checkpoint(&args.checkpoint)?;
    let cfg = TrainConfig { top_n: args.top, k: args.k, ..Default::default() };
    let report = evaluate(&samples, &program, &ck.store, &cfg).map_err(internal_err)?;
    for (k, (correct, total)) in &report.per_k {
        println!("k={k}: {correct}/{total} = {:.3}", *correct as f64 / *total as f64);
    }
    println!("overall: {}/{} = {:.3}", report.correct, report.total, report.accuracy());
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let ck = read_checkpoint(&args.checkpoint)?;
    let vocab = Vocabulary::kinship();
    let text = export_rules(&ck.store, &vocab, args.top);
    if let Some(oracle_path) = &args.match_oracle {
        let oracle_text = fs::read_to_string(oracle_path).map_err(input_err)?;
        let priors = parse_priors(&oracle_text, &vocab).map_err(input_err)?;
        let oracle =
            CompositionOracle::from_entries(&vocab, &priors.compose).map_err(input_err)?;
        let matches = oracle_matches(&ck.store, &oracle, args.top);
        eprintln!("{matches}/{} of the top rules match the oracle", args.top);
    }
    write_out(&args.out, &text)
}

fn rules_from_sources(
    program: &Program,
    args: &InferArgs,
) -> Result<Vec<difflog::engine::EngineRule>, CliError> {
    let mut program = program.clone();
    if let Some(rules_path) = &args.rules {
        let text = fs::read_to_string(rules_path).map_err(input_err)?;
        let priors = parse_priors(&text, &program.vocab).map_err(input_err)?;
        for (t, w) in priors.weights {
            program.template_facts.push((t, w));
        }
    }
    let store = match &args.checkpoint {
        Some(path) => read_checkpoint(path)?.store,
        None => RuleWeightStore::new(program.vocab.len()),
    };
    let slots = store.top_rules(args.top);
    Ok(learner::build_rules(&program, &store, &slots))
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    let program = load_program(&args.program)?;
    let kb_text = fs::read_to_string(&args.kb).map_err(input_err)?;
    let samples = parse_dataset(&kb_text, &program.vocab).map_err(input_err)?;
    let mut sample = samples
        .get(args.index)
        .cloned()
        .ok_or_else(|| input_err(format!("no record {} in KB file", args.index)))?;
    if let Some(q) = &args.query {
        sample.query = (q[0].clone(), q[1].clone());
    }
    let rules = rules_from_sources(&program, &args)?;
    let fwd = ForwardConfig { k: args.topk, with_constraints: false, ..Default::default() };
    let out = forward(&sample, &program, &rules, &fwd).map_err(internal_err)?;
    let pred = predict(&out.y_hat);
    println!("query: ({}, {})", sample.query.0, sample.query.1);
    let mut ranked: Vec<(usize, f64)> =
        out.y_hat.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, p) in &ranked {
        println!("  {:<16} {:.6}", program.vocab.name(difflog::logic::RelationId(*i as u8)), p);
    }
    let verdict = if pred == sample.answer {
        "correct".to_string()
    } else {
        format!("gold: {}", program.vocab.name(sample.answer))
    };
    println!("prediction: {} ({verdict})", program.vocab.name(pred));
    let proofs = proof_report(&out.store, &program.vocab, (&sample.query.0, &sample.query.1), pred);
    for (i, proof) in proofs.iter().take(args.proofs).enumerate() {
        println!("proof {}:", i + 1);
        for literal in proof {
            println!("    {literal}");
        }
    }
    Ok(())
}

fn cmd_check_wmc(args: CheckWmcArgs) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst = 0.0f64;
    for i in 0..args.formulas {
        let n_vars = rng.gen_range(1..=args.max_vars);
        let probs: Vec<f64> = (0..n_vars).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut arena = FormulaArena::new();
        let f = random_formula(&mut arena, n_vars, 3, &mut rng);
        let exact = WmcEvaluator::new(&mut arena, &probs)
            .wmc(f)
            .map_err(internal_err)?;
        let brute = brute_force_wmc(&arena, f, &probs).map_err(internal_err)?;
        let err = (exact - brute).abs();
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(CliError::Internal(format!(
                "formula {i}: exact {exact} vs brute {brute} (err {err:.3e})"
            )));
        }
    }
    println!(
        "checked {} random formulas (<= {} vars): max |error| = {:.3e}",
        args.formulas, args.max_vars, worst
    );
    Ok(())
}

