//! Experiment orchestration: warm start, interleaved batch generation and
//! training, periodic evaluation, metrics logging and plot-data merging.
//!
//! A run directory holds
//!
//! ```text
//! config.txt    resolved configuration, key=value
//! metrics.csv   one MetricsRow per evaluation
//! model.ckpt    parameters and optimizer at the last evaluation
//! state.txt     counters needed to resume from model.ckpt
//! run.log       terminal conditions
//! ```
//!
//! Batch contents and dropout masks are derived from the master seed and the
//! batch index alone, so a resumed run replays exactly the batches it missed.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::alphabet::{Alphabet, DEFAULT_CHARS};
use crate::error::{Error, Result};
use crate::metrics::average_prefix_auc;
use crate::rng;
use crate::rnn::{
    load_checkpoint_for, save_checkpoint, ModelParams, Optimizer, OptimizerKind, Trainer, DEFAULT_DROPOUT,
    DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE,
};
use crate::strategies::{
    active_batch, balanced_batch, load_or_build_validation_set, vanilla_batch, warmstart_batch, LabeledBatch,
    Strategy, DEFAULT_BATCH_SIZE, DEFAULT_CALL_BUDGET, DEFAULT_MIN_POSITIVE_FRACTION, DEFAULT_VALIDATION_SIZE,
};
use crate::acquisition::{DEFAULT_POSTERIOR_SAMPLES, DEFAULT_WARMSTART};

pub const CONFIG_FILE: &str = "config.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const STATE_FILE: &str = "state.txt";
pub const LOG_FILE: &str = "run.log";
pub const METRICS_HEADER: &str = "step,examples_seen,wall_time_s,avg_auc,loss,pos_frac,validator_calls";

const INIT_STREAM: u64 = 0x494E_4954;
const DATA_STREAM: u64 = 0x4441_5441;
const DROPOUT_STREAM: u64 = 0x4452_4F50;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub alphabet: String,
    pub length: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub posterior_samples: usize,
    pub warmstart: usize,
    pub learning_rate: f64,
    pub optimizer: String,
    /// Total training examples, warm start included.
    pub examples_budget: usize,
    /// Examples between evaluation rows.
    pub eval_interval: usize,
    pub seed: u64,
    pub validation_seed: u64,
    pub validation_size: usize,
    pub min_pos_frac: f64,
    /// Validator calls allowed per balanced batch.
    pub call_budget: u64,
    pub output_dir: PathBuf,
    /// Where the validation set is cached; empty means `output_dir`.
    pub validation_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Active,
            alphabet: DEFAULT_CHARS.to_string(),
            length: 25,
            hidden: DEFAULT_HIDDEN,
            dropout: DEFAULT_DROPOUT,
            batch_size: DEFAULT_BATCH_SIZE,
            posterior_samples: DEFAULT_POSTERIOR_SAMPLES,
            warmstart: DEFAULT_WARMSTART,
            learning_rate: DEFAULT_LEARNING_RATE,
            optimizer: "adam".to_string(),
            examples_budget: 150_000,
            eval_interval: 5_000,
            seed: 0,
            validation_seed: 0,
            validation_size: DEFAULT_VALIDATION_SIZE,
            min_pos_frac: DEFAULT_MIN_POSITIVE_FRACTION,
            call_budget: DEFAULT_CALL_BUDGET,
            output_dir: PathBuf::from("runs/default"),
            validation_dir: PathBuf::new(),
        }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 19] = [
        "strategy",
        "alphabet",
        "length",
        "hidden",
        "dropout",
        "batch_size",
        "posterior_samples",
        "warmstart",
        "learning_rate",
        "optimizer",
        "examples_budget",
        "eval_interval",
        "seed",
        "validation_seed",
        "validation_size",
        "min_pos_frac",
        "call_budget",
        "output_dir",
        "validation_dir",
    ];

    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "strategy" => self.strategy.to_string(),
            "alphabet" => self.alphabet.clone(),
            "length" => self.length.to_string(),
            "hidden" => self.hidden.to_string(),
            "dropout" => self.dropout.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "posterior_samples" => self.posterior_samples.to_string(),
            "warmstart" => self.warmstart.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "optimizer" => self.optimizer.clone(),
            "examples_budget" => self.examples_budget.to_string(),
            "eval_interval" => self.eval_interval.to_string(),
            "seed" => self.seed.to_string(),
            "validation_seed" => self.validation_seed.to_string(),
            "validation_size" => self.validation_size.to_string(),
            "min_pos_frac" => self.min_pos_frac.to_string(),
            "call_budget" => self.call_budget.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "validation_dir" => self.validation_dir.display().to_string(),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "strategy" => self.strategy = value.parse()?,
            "alphabet" => self.alphabet = value.to_string(),
            "length" => self.length = parse_field(key, value)?,
            "hidden" => self.hidden = parse_field(key, value)?,
            "dropout" => self.dropout = parse_field(key, value)?,
            "batch_size" => self.batch_size = parse_field(key, value)?,
            "posterior_samples" => self.posterior_samples = parse_field(key, value)?,
            "warmstart" => self.warmstart = parse_field(key, value)?,
            "learning_rate" => self.learning_rate = parse_field(key, value)?,
            "optimizer" => self.optimizer = value.to_string(),
            "examples_budget" => self.examples_budget = parse_field(key, value)?,
            "eval_interval" => self.eval_interval = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "validation_seed" => self.validation_seed = parse_field(key, value)?,
            "validation_size" => self.validation_size = parse_field(key, value)?,
            "min_pos_frac" => self.min_pos_frac = parse_field(key, value)?,
            "call_budget" => self.call_budget = parse_field(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "validation_dir" => self.validation_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("hidden", self.hidden),
            ("batch_size", self.batch_size),
            ("posterior_samples", self.posterior_samples),
            ("eval_interval", self.eval_interval),
            ("validation_size", self.validation_size),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        if !self.validation_size.is_multiple_of(2) {
            return Err(Error::Config("validation_size must be even".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.min_pos_frac) {
            return Err(Error::Config(format!("min_pos_frac {} outside [0, 1)", self.min_pos_frac)));
        }
        if self.call_budget == 0 {
            return Err(Error::Config("call_budget must be positive".into()));
        }
        OptimizerKind::from_name(&self.optimizer)?;
        self.alphabet()?;
        Ok(())
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        Alphabet::new(&self.alphabet)
    }

    pub fn validation_dir(&self) -> &Path {
        if self.validation_dir.as_os_str().is_empty() {
            &self.output_dir
        } else {
            &self.validation_dir
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            out.push_str(key);
            out.push('=');
            out.push_str(&self.get(key).expect("known key"));
            out.push('\n');
        }
        out
    }

    /// Parses `key=value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped; the value is everything after the first
    /// `=`, so alphabets containing `=` survive.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub examples_seen: u64,
    pub wall_time_s: f64,
    pub avg_auc: f64,
    /// Mean per-sequence training loss since the previous row; 0 when no
    /// batch was trained in between.
    pub loss: f64,
    /// Positive fraction of the examples trained since the previous row.
    pub pos_frac: f64,
    /// Cumulative validator calls spent generating training data.
    pub validator_calls: u64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.6},{},{},{},{}",
            self.step, self.examples_seen, self.wall_time_s, self.avg_auc, self.loss, self.pos_frac, self.validator_calls
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed metrics row {line:?}"));
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        Ok(Self {
            step: f[0].parse().map_err(|_| bad())?,
            examples_seen: f[1].parse().map_err(|_| bad())?,
            wall_time_s: f[2].parse().map_err(|_| bad())?,
            avg_auc: f[3].parse().map_err(|_| bad())?,
            loss: f[4].parse().map_err(|_| bad())?,
            pos_frac: f[5].parse().map_err(|_| bad())?,
            validator_calls: f[6].parse().map_err(|_| bad())?,
        })
    }

    /// The row with the wall-clock field blanked, for byte comparisons.
    pub fn deterministic_part(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.examples_seen, self.avg_auc, self.loss, self.pos_frac, self.validator_calls
        )
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == METRICS_HEADER => {}
        _ => return Err(Error::Format { path: path.display().to_string(), reason: "missing metrics header".into() }),
    }
    lines.filter(|l| !l.trim().is_empty()).map(MetricsRow::from_csv).collect()
}

/// Counters persisted next to the checkpoint.
#[derive(Clone, Debug, Default, PartialEq)]
struct RunState {
    step: u64,
    examples_seen: u64,
    validator_calls: u64,
    wall_time_s: f64,
    rows: usize,
    finished: bool,
}

impl RunState {
    fn to_text(&self) -> String {
        format!(
            "step={}\nexamples_seen={}\nvalidator_calls={}\nwall_time_s={}\nrows={}\nfinished={}\n",
            self.step, self.examples_seen, self.validator_calls, self.wall_time_s, self.rows, self.finished
        )
    }

    fn from_text(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("bad state line {line:?}")))?;
            match k {
                "step" => s.step = parse_field(k, v)?,
                "examples_seen" => s.examples_seen = parse_field(k, v)?,
                "validator_calls" => s.validator_calls = parse_field(k, v)?,
                "wall_time_s" => s.wall_time_s = parse_field(k, v)?,
                "rows" => s.rows = parse_field(k, v)?,
                "finished" => s.finished = parse_field(k, v)?,
                _ => return Err(Error::Config(format!("unknown state key {k:?}"))),
            }
        }
        Ok(s)
    }
}

/// How a run may start and stop.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunControl {
    /// Continue from `model.ckpt` and `state.txt` when present.
    pub resume: bool,
    /// Stop at the first evaluation row at or beyond this many examples, as
    /// if interrupted there.
    pub stop_after_examples: Option<u64>,
    /// Stop at the first evaluation row whose AUC reaches this value.
    pub target_auc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub rows: Vec<MetricsRow>,
    /// Set when the run ended early, e.g. a balanced batch ran out of
    /// validator calls.
    pub terminal: Option<String>,
    pub finished: bool,
    pub output_dir: PathBuf,
}

impl RunSummary {
    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("every run has an initial row")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.output_dir.join(CHECKPOINT_FILE)
    }
}

/// Which batch comes next and how large it is.
fn next_batch(config: &ExperimentConfig, examples_seen: u64) -> Option<(bool, usize)> {
    let budget = config.examples_budget as u64;
    let warm = (config.warmstart as u64).min(budget);
    if examples_seen < warm {
        return Some((true, (warm - examples_seen).min(config.batch_size as u64) as usize));
    }
    if examples_seen + config.batch_size as u64 <= budget {
        return Some((false, config.batch_size));
    }
    None
}

fn generate_batch(
    config: &ExperimentConfig,
    alphabet: &Alphabet,
    params: &ModelParams,
    warm: bool,
    n: usize,
    step: u64,
) -> Result<LabeledBatch> {
    let seed = rng::sublabel(rng::sublabel(config.seed, DATA_STREAM), step);
    if warm {
        return Ok(warmstart_batch(n, config.length, alphabet, seed));
    }
    match config.strategy {
        Strategy::Vanilla => Ok(vanilla_batch(n, config.length, alphabet, seed)),
        Strategy::Balanced => balanced_batch(n, config.length, alphabet, config.min_pos_frac, seed, config.call_budget),
        Strategy::Active => active_batch(params, n, config.posterior_samples, config.length, alphabet, seed),
    }
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    alphabet: Alphabet,
    validation: LabeledBatch,
    trainer: Trainer,
    state: RunState,
    rows: Vec<MetricsRow>,
    loss_sum: f64,
    positives: u64,
    trained: u64,
}

impl Run<'_> {
    fn dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn emit_row(&mut self) -> Result<()> {
        let avg_auc = average_prefix_auc(&self.trainer.params, &self.validation)?;
        let (loss, pos_frac) = if self.trained == 0 {
            (0.0, 0.0)
        } else {
            (self.loss_sum / self.trained as f64, self.positives as f64 / self.trained as f64)
        };
        let row = MetricsRow {
            step: self.state.step,
            examples_seen: self.state.examples_seen,
            wall_time_s: self.state.wall_time_s,
            avg_auc,
            loss,
            pos_frac,
            validator_calls: self.state.validator_calls,
        };
        let mut f = OpenOptions::new().append(true).open(self.dir().join(METRICS_FILE))?;
        writeln!(f, "{}", row.to_csv())?;
        f.flush()?;
        self.rows.push(row);
        self.state.rows = self.rows.len();
        (self.loss_sum, self.positives, self.trained) = (0.0, 0, 0);
        self.persist()
    }

    fn persist(&self) -> Result<()> {
        save_checkpoint(&self.dir().join(CHECKPOINT_FILE), &self.alphabet, &self.trainer.params, &self.trainer.optimizer)?;
        let tmp = self.dir().join("state.tmp");
        fs::write(&tmp, self.state.to_text())?;
        fs::rename(tmp, self.dir().join(STATE_FILE))?;
        Ok(())
    }

    fn log(&self, message: &str) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir().join(LOG_FILE))?;
        writeln!(f, "{message}")?;
        Ok(())
    }
}

/// Trains one model under `config` from scratch, writing the run directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    run_experiment_with(config, RunControl::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, control: RunControl) -> Result<RunSummary> {
    config.validate()?;
    let alphabet = config.alphabet()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let validation_budget = config.call_budget.max(DEFAULT_CALL_BUDGET).saturating_mul(config.validation_size as u64);
    let (validation, _) = load_or_build_validation_set(
        config.validation_dir(),
        config.validation_size,
        config.length,
        &alphabet,
        config.validation_seed,
        validation_budget,
    )?;

    let state_path = dir.join(STATE_FILE);
    let resuming = control.resume && state_path.exists() && dir.join(CHECKPOINT_FILE).exists();
    let mut run = if resuming {
        let previous = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        let comparable = ExperimentConfig { examples_budget: config.examples_budget, ..previous.clone() };
        if comparable != *config {
            return Err(Error::Incompatible("resume requested with a different configuration".into()));
        }
        let mut state = RunState::from_text(&fs::read_to_string(&state_path)?)?;
        if previous.examples_budget != config.examples_budget {
            // a finished run may be extended; shrinking below progress is refused
            if (config.examples_budget as u64) < state.examples_seen {
                return Err(Error::Incompatible(format!(
                    "examples_budget {} is below the {} examples already seen",
                    config.examples_budget, state.examples_seen
                )));
            }
            config.save(&dir.join(CONFIG_FILE))?;
            state.finished = state.finished && next_batch(config, state.examples_seen).is_none();
        }
        let ckpt = load_checkpoint_for(&dir.join(CHECKPOINT_FILE), &alphabet)?;
        let mut rows = read_metrics(&dir.join(METRICS_FILE))?;
        if rows.len() < state.rows {
            return Err(Error::Format {
                path: dir.join(METRICS_FILE).display().to_string(),
                reason: format!("{} rows present, state expects {}", rows.len(), state.rows),
            });
        }
        rows.truncate(state.rows);
        let mut text = format!("{METRICS_HEADER}\n");
        for r in &rows {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        fs::write(dir.join(METRICS_FILE), text)?;
        Run {
            config,
            alphabet,
            validation,
            trainer: Trainer::new(ckpt.params, ckpt.optimizer),
            state,
            rows,
            loss_sum: 0.0,
            positives: 0,
            trained: 0,
        }
    } else {
        config.save(&dir.join(CONFIG_FILE))?;
        for stale in [STATE_FILE, LOG_FILE] {
            let _ = fs::remove_file(dir.join(stale));
        }
        fs::write(dir.join(METRICS_FILE), format!("{METRICS_HEADER}\n"))?;
        let mut init_rng = rng::stream(config.seed, INIT_STREAM);
        let params = ModelParams::init(alphabet.size(), config.hidden, config.dropout, &mut init_rng)?;
        let kind = OptimizerKind::from_name(&config.optimizer)?;
        let optimizer = Optimizer::new(kind, config.learning_rate, params.len());
        let mut run = Run {
            config,
            alphabet,
            validation,
            trainer: Trainer::new(params, optimizer),
            state: RunState::default(),
            rows: Vec::new(),
            loss_sum: 0.0,
            positives: 0,
            trained: 0,
        };
        run.emit_row()?;
        run
    };

    let mut terminal = None;
    if !run.state.finished {
        while let Some((warm, n)) = next_batch(config, run.state.examples_seen) {
            let started = Instant::now();
            let batch = match generate_batch(config, &run.alphabet, &run.trainer.params, warm, n, run.state.step) {
                Ok(b) => b,
                Err(e @ Error::BudgetExceeded(_)) => {
                    let message = format!("terminated at step {}: {e}", run.state.step);
                    run.log(&message)?;
                    terminal = Some(message);
                    break;
                }
                Err(e) => return Err(e),
            };
            let mut dropout_rng = rng::stream(config.seed, rng::sublabel(DROPOUT_STREAM, run.state.step));
            let loss = run.trainer.train_batch(&batch.sequences, &batch.labels, &mut dropout_rng)?;
            run.state.wall_time_s += started.elapsed().as_secs_f64();

            let before = run.state.examples_seen;
            run.state.step += 1;
            run.state.examples_seen += n as u64;
            run.state.validator_calls += batch.cost.validator_calls;
            run.loss_sum += loss * n as f64;
            run.positives += batch.positives() as u64;
            run.trained += n as u64;

            let interval = config.eval_interval as u64;
            if before / interval < run.state.examples_seen / interval {
                run.emit_row()?;
                let reached = control.target_auc.is_some_and(|t| run.rows.last().is_some_and(|r| r.avg_auc >= t));
                if reached || control.stop_after_examples.is_some_and(|stop| run.state.examples_seen >= stop) {
                    return Ok(RunSummary { rows: run.rows, terminal: None, finished: false, output_dir: dir.clone() });
                }
            }
        }
        if run.rows.last().is_some_and(|r| r.examples_seen != run.state.examples_seen || r.step != run.state.step) {
            run.emit_row()?;
        }
        run.state.finished = true;
        run.persist()?;
    }
    Ok(RunSummary { rows: run.rows, terminal, finished: true, output_dir: dir.clone() })
}

/// Merged plot data: one table keyed by examples seen and one keyed by wall
/// time, each with an AUC column per run.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub labels: Vec<String>,
    pub by_examples: String,
    pub by_time: String,
}

fn merge_series(key_name: &str, labels: &[String], series: &[Vec<(String, f64)>]) -> String {
    let mut keys: Vec<(f64, &String)> =
        series.iter().flatten().map(|(k, _)| (k.parse::<f64>().unwrap_or(f64::NAN), k)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    keys.dedup_by(|a, b| a.1 == b.1);
    let mut cells: BTreeMap<&String, Vec<Option<f64>>> = BTreeMap::new();
    for (col, s) in series.iter().enumerate() {
        for (k, v) in s {
            cells.entry(k).or_insert_with(|| vec![None; labels.len()])[col] = Some(*v);
        }
    }
    let mut out = format!("{key_name},{}\n", labels.join(","));
    for (_, k) in keys {
        let row: Vec<String> = cells[k].iter().map(|v| v.map_or(String::new(), |v| v.to_string())).collect();
        out.push_str(&format!("{k},{}\n", row.join(",")));
    }
    out
}

/// Merges the metrics files of several runs. Each file's `config.txt` must
/// sit beside it; runs over different lengths or alphabets are refused.
pub fn emit_plot_data(metrics_files: &[PathBuf]) -> Result<PlotData> {
    if metrics_files.is_empty() {
        return Err(Error::Config("no metrics files given".into()));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut by_examples = Vec::new();
    let mut by_time = Vec::new();
    let mut reference: Option<ExperimentConfig> = None;
    for path in metrics_files {
        let dir = path.parent().unwrap_or(Path::new("."));
        let config = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        if let Some(r) = &reference {
            if r.length != config.length {
                return Err(Error::Incompatible(format!(
                    "{} has T={} but {} has T={}",
                    metrics_files[0].display(),
                    r.length,
                    path.display(),
                    config.length
                )));
            }
            if r.alphabet != config.alphabet {
                return Err(Error::Incompatible(format!("{} uses a different alphabet", path.display())));
            }
        } else {
            reference = Some(config.clone());
        }
        let base = config.strategy.to_string();
        let mut label = base.clone();
        let mut k = 2;
        while labels.contains(&label) {
            label = format!("{base}_{k}");
            k += 1;
        }
        labels.push(label);
        let rows = read_metrics(path)?;
        by_examples.push(rows.iter().map(|r| (r.examples_seen.to_string(), r.avg_auc)).collect());
        by_time.push(rows.iter().map(|r| (format!("{:.6}", r.wall_time_s), r.avg_auc)).collect());
    }
    Ok(PlotData {
        by_examples: merge_series("examples_seen", &labels, &by_examples),
        by_time: merge_series("wall_time_s", &labels, &by_time),
        labels,
    })
}

/// First row whose AUC reaches `target`.
pub fn first_reaching(rows: &[MetricsRow], target: f64) -> Option<&MetricsRow> {
    rows.iter().find(|r| r.avg_auc >= target)
}
