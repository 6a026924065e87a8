use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seqvalid::crosscheck::{compare, exhaustive_corpus, run_reference, uniform_corpus, AgreementReport};
use seqvalid::expr::Validator;
use seqvalid::harness::{emit_plot_data, run_experiment_with, ExperimentConfig, RunControl};
use seqvalid::metrics::PrefixScores;
use seqvalid::oracle::{PrefixOracle, DEFAULT_ENUMERATION_BUDGET};
use seqvalid::rnn::load_checkpoint;
use seqvalid::sampling::{best_report, sample_report_from, Weighting, THETA_GRID};
use seqvalid::strategies::{load_or_build_validation_set, read_labeled, Provenance, DEFAULT_CALL_BUDGET};
use seqvalid::{Alphabet, Error, Result, DEFAULT_CHARS};

#[derive(Parser)]
#[command(name = "seqvalid", version, about = "Learn which expression strings are valid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training experiment and write its run directory.
    Train(TrainArgs),
    /// Average-prefix AUC of a checkpoint on a balanced validation set.
    Evaluate(EvaluateArgs),
    /// Boltzmann-sample sequences from a checkpoint.
    Sample(SampleArgs),
    /// Read sequences from stdin and print one verdict per line.
    Validate(ValidateArgs),
    /// Exact prefix validity probability by enumeration.
    Oracle(OracleArgs),
    /// Compare the native validator against a reference command.
    Crosscheck(CrosscheckArgs),
    /// Merge metrics files into plot-ready tables.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// key=value file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    posterior_samples: Option<String>,
    #[arg(long)]
    warmstart: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    examples_budget: Option<String>,
    #[arg(long)]
    eval_interval: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    validation_seed: Option<String>,
    #[arg(long)]
    validation_size: Option<String>,
    #[arg(long)]
    min_pos_frac: Option<String>,
    #[arg(long)]
    call_budget: Option<String>,
    #[arg(long, alias = "out")]
    output_dir: Option<String>,
    #[arg(long)]
    validation_dir: Option<String>,
    /// Continue an interrupted run from its last checkpoint, or extend a
    /// finished one whose examples budget was raised.
    #[arg(long)]
    resume: bool,
    /// Stop once an evaluation row reaches this average AUC.
    #[arg(long)]
    target_auc: Option<f64>,
}

impl TrainArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        // a resumed run starts from its own saved configuration
        let saved = self.output_dir.as_ref().map(|d| Path::new(d).join("config.txt")).filter(|p| self.resume && p.exists());
        let mut config = match self.config.as_ref().or(saved.as_ref()) {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("strategy", &self.strategy),
            ("alphabet", &self.alphabet),
            ("length", &self.length),
            ("hidden", &self.hidden),
            ("dropout", &self.dropout),
            ("batch_size", &self.batch_size),
            ("posterior_samples", &self.posterior_samples),
            ("warmstart", &self.warmstart),
            ("learning_rate", &self.learning_rate),
            ("optimizer", &self.optimizer),
            ("examples_budget", &self.examples_budget),
            ("eval_interval", &self.eval_interval),
            ("seed", &self.seed),
            ("validation_seed", &self.validation_seed),
            ("validation_size", &self.validation_size),
            ("min_pos_frac", &self.min_pos_frac),
            ("call_budget", &self.call_budget),
            ("output_dir", &self.output_dir),
            ("validation_dir", &self.validation_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Labeled file (sequence, tab, label bit); built and cached when absent.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    length: usize,
    #[arg(long, default_value_t = 2000)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "validation")]
    cache_dir: PathBuf,
    /// Also print the AUC at every prefix length.
    #[arg(long)]
    per_step: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    length: usize,
    /// Temperatures to try; the built-in grid when omitted.
    #[arg(long, num_args = 1..)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight characters by exp(logit/θ) instead of exp(probability/θ).
    #[arg(long)]
    logit: bool,
    /// Minimum unique fraction when picking the best temperature.
    #[arg(long, default_value_t = 0.5)]
    min_unique: f64,
    /// Print the sampled sequences of the chosen temperature.
    #[arg(long)]
    print: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Append the outcome category after a tab.
    #[arg(long)]
    detail: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = DEFAULT_CHARS)]
    alphabet: String,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value = "")]
    prefix: String,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct CrosscheckArgs {
    /// Reference program, followed by its arguments after `--`.
    #[arg(long)]
    reference: String,
    #[arg(last = true)]
    reference_args: Vec<String>,
    #[arg(long, default_value = DEFAULT_CHARS)]
    alphabet: String,
    #[arg(long, default_value_t = 25)]
    length: usize,
    #[arg(long, default_value_t = 100_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check every string of the given length instead of a uniform sample.
    #[arg(long)]
    exhaustive: bool,
    /// Read the corpus from a file, one sequence per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
    /// Directory for plot_examples.csv and plot_time.csv; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn train(args: TrainArgs) -> Result<ExitCode> {
    let config = args.resolve()?;
    let summary = run_experiment_with(&config, RunControl { resume: args.resume, stop_after_examples: None, target_auc: args.target_auc })?;
    let last = summary.final_row();
    println!(
        "{} run: {} rows, {} examples, final avg_auc {:.4}, {} validator calls, {:.1}s",
        config.strategy,
        summary.rows.len(),
        last.examples_seen,
        last.avg_auc,
        last.validator_calls,
        last.wall_time_s
    );
    println!("outputs in {}", summary.output_dir.display());
    if let Some(reason) = summary.terminal {
        eprintln!("{reason}");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let validation = match &args.validation {
        Some(path) if path.exists() => read_labeled(path, &ckpt.alphabet, Provenance::Validation)?,
        _ => {
            let budget = DEFAULT_CALL_BUDGET.saturating_mul(args.size as u64);
            load_or_build_validation_set(&args.cache_dir, args.size, args.length, &ckpt.alphabet, args.seed, budget)?.0
        }
    };
    let scores = PrefixScores::from_model(&ckpt.params, &validation)?;
    if args.per_step {
        for (t, auc) in scores.auc_per_step()?.iter().enumerate() {
            println!("t={} auc={auc:.6}", t + 1);
        }
    }
    println!("avg_auc={:.6} sequences={} positives={}", scores.average_auc()?, validation.len(), validation.positives());
    Ok(ExitCode::SUCCESS)
}

fn sample(args: SampleArgs) -> Result<ExitCode> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let grid: Vec<f64> = if args.theta.is_empty() { THETA_GRID.to_vec() } else { args.theta.clone() };
    let weighting = if args.logit { Weighting::Logit } else { Weighting::Probability };
    let reports = grid
        .iter()
        .map(|&theta| sample_report_from(&ckpt.params, &ckpt.alphabet, theta, args.count, args.length, weighting, args.seed))
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        println!(
            "theta {}: {:.1}% valid, {:.1}% unique over {} samples",
            r.temperature,
            100.0 * r.valid_fraction,
            100.0 * r.unique_fraction,
            r.sequences.len()
        );
    }
    match best_report(&reports, args.min_unique) {
        Some(best) => {
            if args.print {
                for s in &best.sequences {
                    println!("{}", ckpt.alphabet.decode(s));
                }
            }
            println!("best {}", best.summary_line());
        }
        None => println!("best none (no temperature reached unique_fraction {})", args.min_unique),
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let v = Validator::default();
    let stdin = io::stdin();
    let mut out = BufWriter::new(io::stdout().lock());
    for line in stdin.lock().lines() {
        let line = line?;
        let outcome = v.check_str(line.trim_end_matches('\r'));
        if args.detail {
            writeln!(out, "{}\t{}", outcome.valid as u8, outcome.category.as_str())?;
        } else {
            writeln!(out, "{}", outcome.valid as u8)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let alphabet = Alphabet::new(&args.alphabet)?;
    let prefix = alphabet.encode(&args.prefix)?;
    let oracle = PrefixOracle::new(Validator::default(), args.budget);
    let p = oracle.prefix_validity_probability(&seqvalid::oracle::OracleQuery {
        prefix,
        total_length: args.length,
        alphabet: &alphabet,
    })?;
    let ratio = p.ratio();
    println!("{}/{} = {}/{} ~ {:.6}", p.valid, p.total, ratio.numer(), ratio.denom(), p.to_f64());
    Ok(ExitCode::SUCCESS)
}

fn crosscheck(args: CrosscheckArgs) -> Result<ExitCode> {
    let alphabet = Alphabet::new(&args.alphabet)?;
    let corpus = match (&args.corpus, args.exhaustive) {
        (Some(path), _) => fs::read_to_string(path)?.lines().map(str::to_string).collect(),
        (None, true) => exhaustive_corpus(&alphabet, args.length),
        (None, false) => uniform_corpus(&alphabet, args.length, args.count, args.seed),
    };
    let verdicts = run_reference(&args.reference, &args.reference_args, &corpus)?;
    let records = compare(&corpus, &verdicts)?;
    let report = AgreementReport::from_records(&records);
    let described = std::iter::once(args.reference.as_str())
        .chain(args.reference_args.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    let text = report.to_text(&described);
    if let Some(path) = &args.report {
        fs::write(path, &text)?;
    }
    print!("{text}");
    Ok(if report.unexplained() == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn plotdata(args: PlotdataArgs) -> Result<ExitCode> {
    let plot = emit_plot_data(&args.metrics)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("plot_examples.csv"), &plot.by_examples)?;
            fs::write(dir.join("plot_time.csv"), &plot.by_time)?;
            println!("wrote {} series to {}", plot.labels.len(), dir.display());
        }
        None => print!("{}\n{}", plot.by_examples, plot.by_time),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sample(a) => sample(a),
        Command::Validate(a) => validate(a),
        Command::Oracle(a) => oracle(a),
        Command::Crosscheck(a) => crosscheck(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match result {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
