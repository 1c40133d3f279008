//! The `canids` command line: simulate, inject, extract, train, eval and detect.
//!
//! Exit codes: 0 success or clean traffic, 2 usage or input error, 3 contract
//! violation (attack rows in training data), 4 anomaly detected.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_init, KernelName, RunConfig};

use crate::can::{parse_labeled_csv_log, read_candump, write_labeled_csv_log, CsvSchema};
use crate::error::Error;
use crate::eval::{default_grid, evaluate, grid_search, split, write_results_table, write_summary_json, SplitSpec};
use crate::features::{build_vocabulary, extract_log, segment_windows_with_stride, FeatureTable, IdVocabulary, StdevMode};
use crate::label::Label;
use crate::occ::{Detector, Family, Psi, Verdict};
use crate::par::Execution;
use crate::sim::{generate_normal, inject, label_windows, parse_scenarios, AttackKind, AttackScenario, BusSpec, LabeledLog};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;
pub const EXIT_ANOMALY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "canids", version, about = "CAN bus intrusion detection with one-class classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Flat `key = value` run configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct FeatureArgs {
    /// Window length in seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Window stride in seconds; defaults to the window length.
    #[arg(long)]
    pub stride: Option<f64>,
    /// `gaps` (stdev of inter-arrival gaps) or `timestamps`.
    #[arg(long)]
    pub stdev_mode: Option<StdevMode>,
    /// Drop the pseudo-ID that pools IDs outside the vocabulary.
    #[arg(long)]
    pub no_other_bucket: bool,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// svdd, ssvdd, esvdd, gesvdd, ocsvm or geocsvm.
    #[arg(long)]
    pub family: Option<Family>,
    /// linear or rbf.
    #[arg(long)]
    pub kernel: Option<KernelName>,
    /// Fixed rbf bandwidth; without it the median heuristic is used.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Multiplier on the median-heuristic bandwidth.
    #[arg(long)]
    pub sigma_scale: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub psi: Option<Psi>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eta_decay: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// pca, identity or random (seeded by --seed).
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate attack-free traffic on the default ten-ID bus.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        duration: Option<f64>,
        /// Jitter as a fraction of each period.
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Add attack frames to a log, from a scenario file or inline flags.
    Inject {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        kind: Option<AttackKind>,
        #[arg(long)]
        rate: Option<f64>,
        /// `start,end` in seconds.
        #[arg(long)]
        window: Option<String>,
        /// Replay source `start,end` in seconds.
        #[arg(long)]
        segment: Option<String>,
        #[arg(long)]
        repeat: Option<usize>,
        #[arg(long)]
        zero_payload: bool,
    },
    /// Cut a log into windows and write per-ID timing features.
    Extract {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Use this ID vocabulary instead of building one from the log.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        vocab_out: Option<PathBuf>,
    },
    /// Train a one-class model on normal feature rows.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Drop attack rows instead of refusing them.
        #[arg(long)]
        filter_normal: bool,
        /// Split the input: train on a share of the normal rows and write the rest here.
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Select hyperparameters on --validation with the default grid.
        #[arg(long)]
        grid: bool,
        #[arg(long)]
        validation: Option<PathBuf>,
    },
    /// Score labeled feature rows and write the results table.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        model: Option<PathBuf>,
        #[arg(long, short)]
        input: Option<PathBuf>,
    },
    /// Score every window of a log: `window_start,score,verdict` per line.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        model: Option<PathBuf>,
        #[arg(long, short)]
        input: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Contract(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Contract(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_CONTRACT
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Outcome {
    match command {
        Command::Simulate { common, duration, jitter } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg.duration, duration);
            set(&mut cfg.jitter, jitter);
            simulate(&cfg, stdout)
        }
        Command::Inject {
            common,
            input,
            scenario,
            kind,
            rate,
            window,
            segment,
            repeat,
            zero_payload,
        } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.scenario, scenario);
            let inline = Inline {
                kind,
                rate,
                window,
                segment,
                repeat,
                zero_payload,
            };
            inject_cmd(&cfg, inline, stdout)
        }
        Command::Extract {
            common,
            features,
            input,
            vocab,
            vocab_out,
        } => {
            let mut cfg = base_config(&common)?;
            apply_features(&mut cfg, &features);
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.vocab, vocab);
            extract_cmd(&cfg, vocab_out.as_deref(), stdout)
        }
        Command::Train {
            common,
            features,
            model,
            input,
            filter_normal,
            test_out,
            train_fraction,
            grid,
            validation,
        } => {
            let mut cfg = base_config(&common)?;
            apply_features(&mut cfg, &features);
            apply_model(&mut cfg, &model)?;
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.validation, validation);
            set(&mut cfg.train_fraction, train_fraction);
            let opts = TrainOptions {
                filter_normal,
                test_out,
                grid,
            };
            train_cmd(&cfg, &opts, stdout)
        }
        Command::Eval { common, model, input } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg.model_path, model);
            set_path(&mut cfg.input, input);
            eval_cmd(&cfg, stdout)
        }
        Command::Detect { common, model, input } => {
            let mut cfg = base_config(&common)?;
            set_path(&mut cfg.model_path, model);
            set_path(&mut cfg.input, input);
            detect_cmd(&cfg, stdout)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

fn base_config(common: &Common) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.load_file(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    set(&mut cfg.seed, common.seed);
    set_path(&mut cfg.out, common.out.clone());
    Ok(cfg)
}

fn apply_features(cfg: &mut RunConfig, f: &FeatureArgs) {
    set(&mut cfg.window, f.window);
    if f.stride.is_some() {
        cfg.stride = f.stride;
    }
    set(&mut cfg.stdev_mode, f.stdev_mode);
    if f.no_other_bucket {
        cfg.other_bucket = false;
    }
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs) -> std::result::Result<(), Failure> {
    set(&mut cfg.model.family, m.family);
    set(&mut cfg.kernel, m.kernel);
    if m.sigma.is_some() {
        cfg.sigma = m.sigma;
    }
    set(&mut cfg.sigma_scale, m.sigma_scale);
    set(&mut cfg.model.c, m.c);
    set(&mut cfg.model.nu, m.nu);
    if m.d.is_some() {
        cfg.model.d = m.d;
    }
    set(&mut cfg.model.beta, m.beta);
    set(&mut cfg.model.psi, m.psi);
    set(&mut cfg.model.eta, m.eta);
    set(&mut cfg.model.eta_decay, m.eta_decay);
    set(&mut cfg.model.iterations, m.iterations);
    if let Some(init) = &m.init {
        cfg.model.init = parse_init(init, cfg.seed)?;
    }
    set(&mut cfg.model.k_neighbors, m.k_neighbors);
    set(&mut cfg.model.epsilon, m.epsilon);
    Ok(())
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> std::result::Result<&'a Path, Failure> {
    path.as_deref().ok_or_else(|| Failure::Usage(format!("missing {what} (flag or config key)")))
}

/// Fails early when an output's directory does not exist.
fn output_path<'a>(path: &'a Option<PathBuf>) -> std::result::Result<&'a Path, Failure> {
    let p = required(path, "--out")?;
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            return Err(Failure::Usage(format!("output directory {} does not exist", dir.display())));
        }
    }
    Ok(p)
}

fn open_input(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?))
}

/// Reads a CSV capture (with optional label column) or a candump log,
/// told apart by the first non-blank line. Unlabeled frames are normal.
pub fn read_log(bytes: &[u8], source: &str) -> crate::Result<LabeledLog> {
    let first = bytes.split(|&b| b == b'\n').map(|l| l.trim_ascii()).find(|l| !l.is_empty());
    if first.is_some_and(|l| l.starts_with(b"(")) {
        return Ok(LabeledLog::normal(read_candump(bytes, source)?));
    }
    let (mut log, labels) = parse_labeled_csv_log(bytes, &CsvSchema::default())?;
    log.source = source.to_string();
    LabeledLog::new(log, labels)
}

fn load_log(path: &Path) -> std::result::Result<LabeledLog, Failure> {
    read_log(&open_input(path)?, &path.display().to_string()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_table(path: &Path) -> std::result::Result<FeatureTable, Failure> {
    FeatureTable::read_csv(open_input(path)?.as_slice()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_detector(path: &Path) -> std::result::Result<Detector, Failure> {
    Detector::load(open_input(path)?.as_slice()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn simulate(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let out = output_path(&cfg.out)?;
    let mut spec = BusSpec::with_duration(cfg.duration, cfg.seed);
    for id in &mut spec.ids {
        id.jitter = cfg.jitter;
    }
    let log = LabeledLog::normal(generate_normal(&spec)?);
    let mut sink = create(out)?;
    write_labeled_csv_log(&log.log, &log.labels, &mut sink)?;
    sink.flush()?;
    writeln!(stdout, "frames {} ids {} duration {}", log.len(), spec.ids.len(), spec.duration)?;
    Ok(EXIT_OK)
}

struct Inline {
    kind: Option<AttackKind>,
    rate: Option<f64>,
    window: Option<String>,
    segment: Option<String>,
    repeat: Option<usize>,
    zero_payload: bool,
}

fn pair(text: &str, what: &str) -> std::result::Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("{what} must be `start,end`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn inject_cmd(cfg: &RunConfig, inline: Inline, stdout: &mut dyn Write) -> Outcome {
    let input = required(&cfg.input, "--input")?;
    let out = output_path(&cfg.out)?;
    let mut scenarios = match &cfg.scenario {
        Some(p) => parse_scenarios(&String::from_utf8_lossy(&open_input(p)?)).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    if let Some(kind) = inline.kind {
        let window = pair(inline.window.as_deref().ok_or_else(|| Failure::Usage("--kind needs --window".into()))?, "--window")?;
        let mut s = AttackScenario::flood(kind, inline.rate.unwrap_or(0.0), window, cfg.seed);
        if let Some(seg) = &inline.segment {
            s.replay_segment = Some(pair(seg, "--segment")?);
        }
        s.repeat = inline.repeat.unwrap_or(1);
        s.zero_payload = inline.zero_payload;
        scenarios.push(s);
    }
    if scenarios.is_empty() {
        return Err(Failure::Usage("no attack given: use --scenario or --kind".into()));
    }
    let mut log = load_log(input)?;
    let before = log.len();
    for s in &scenarios {
        log = inject(&log, s)?;
    }
    let mut sink = create(out)?;
    write_labeled_csv_log(&log.log, &log.labels, &mut sink)?;
    sink.flush()?;
    writeln!(stdout, "frames {} injected {} scenarios {}", log.len(), log.len() - before, scenarios.len())?;
    Ok(EXIT_OK)
}

fn extract_cmd(cfg: &RunConfig, vocab_out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    let input = required(&cfg.input, "--input")?;
    let out = output_path(&cfg.out)?;
    let features = cfg.features()?;
    let log = load_log(input)?;
    if log.is_empty() {
        return Err(Failure::Usage(format!("{}: log holds no frames", input.display())));
    }
    let vocab = match &cfg.vocab {
        Some(p) => IdVocabulary::read(open_input(p)?.as_slice()).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => build_vocabulary(&log.log, cfg.other_bucket)?,
    };
    let (_, x) = extract_log(&log.log, &vocab, &features, Execution::default())?;
    let windows = segment_windows_with_stride(&log.log, features.window, features.stride)?;
    let table = FeatureTable::new(vocab.clone(), x, label_windows(&log.labels, &windows))?;
    let mut sink = create(out)?;
    table.write_csv(&mut sink)?;
    sink.flush()?;
    if let Some(p) = vocab_out {
        let mut v = create(p)?;
        vocab.write(&mut v)?;
        v.flush()?;
    }
    let attacked = table.labels.iter().filter(|l| l.is_anomaly()).count();
    writeln!(stdout, "windows {} attacked {} features {}", table.len(), attacked, vocab.dimension())?;
    Ok(EXIT_OK)
}

struct TrainOptions {
    filter_normal: bool,
    test_out: Option<PathBuf>,
    grid: bool,
}

fn write_table(table: &FeatureTable, path: &Path) -> std::result::Result<(), Failure> {
    let mut sink = create(path)?;
    table.write_csv(&mut sink)?;
    sink.flush()?;
    Ok(())
}

fn train_cmd(cfg: &RunConfig, opts: &TrainOptions, stdout: &mut dyn Write) -> Outcome {
    let input = required(&cfg.input, "--input")?;
    let out = output_path(&cfg.out)?;
    let features = cfg.features()?;
    let mut config = cfg.model_config();
    let table = load_table(input)?;
    let mut train = if let Some(test_out) = &opts.test_out {
        let s = split(
            &table,
            &SplitSpec {
                train_fraction: cfg.train_fraction,
                seed: cfg.seed,
            },
        )?;
        write_table(&s.test, test_out)?;
        writeln!(stdout, "test rows {} written to {}", s.test.len(), test_out.display())?;
        s.train
    } else {
        table
    };
    let attacks: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i].is_anomaly()).collect();
    if !attacks.is_empty() {
        if !opts.filter_normal {
            return Err(Failure::Contract(format!(
                "training data must be target-class only ({} non-normal rows; pass --filter-normal to drop them)",
                attacks.len()
            )));
        }
        let keep: Vec<usize> = (0..train.len()).filter(|&i| !train.labels[i].is_anomaly()).collect();
        train = train.select(&keep);
    }
    if opts.grid {
        let val = load_table(required(&cfg.validation, "--validation")?)?;
        let outcome = grid_search(&default_grid(&config), &train, &val, features, Execution::default())?;
        config = *outcome.best_config();
        writeln!(stdout, "grid cells {} best {} validation gmean {:.4}", outcome.rows.len(), config.tag(), outcome.best_report().gmean)?;
    }
    let detector = Detector::train(&train.x, train.vocab.clone(), features, config, Execution::default())?;
    let mut sink = create(out)?;
    detector.save(&mut sink)?;
    sink.flush()?;
    writeln!(stdout, "trained {} on {} windows", config.tag(), train.len())?;
    Ok(EXIT_OK)
}

fn eval_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let detector = load_detector(required(&cfg.model_path, "--model")?)?;
    let input = required(&cfg.input, "--input")?;
    let out = output_path(&cfg.out)?;
    let table = load_table(input)?;
    let report = evaluate(&detector, &table, Execution::default())?;
    let mut sink = create(out)?;
    write_results_table(std::slice::from_ref(&report), &mut sink)?;
    sink.flush()?;
    let mut json = create(&out.with_extension("json"))?;
    write_summary_json(std::slice::from_ref(&report), &mut json)?;
    json.flush()?;
    writeln!(stdout, "{} gmean {:.2} tpr {:.4} tnr {:.4}", report.model_tag, report.gmean, report.tpr, report.tnr)?;
    for kind in Label::ATTACKS {
        if let Some(g) = report.per_attack.get(&kind) {
            writeln!(stdout, "  {kind} gmean {g:.4}")?;
        }
    }
    Ok(EXIT_OK)
}

fn detect_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Outcome {
    let detector = load_detector(required(&cfg.model_path, "--model")?)?;
    let log = load_log(required(&cfg.input, "--input")?)?;
    if log.is_empty() {
        return Err(Failure::Usage("log holds no frames".into()));
    }
    let (starts, x) = extract_log(&log.log, &detector.vocab, &detector.features, Execution::default())?;
    let scores = detector.score_raw_matrix(&x, Execution::default())?;
    let mut file = match &cfg.out {
        Some(_) => Some(create(output_path(&cfg.out)?)?),
        None => None,
    };
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => stdout,
    };
    writeln!(sink, "window_start,score,verdict")?;
    let mut anomalies = 0;
    for (start, score) in starts.iter().zip(&scores) {
        let verdict = Verdict::from_score(*score);
        anomalies += usize::from(verdict == Verdict::Anomaly);
        writeln!(sink, "{start:.6},{score:.6},{}", verdict.as_str())?;
    }
    sink.flush()?;
    Ok(if anomalies > 0 { EXIT_ANOMALY } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sniffs_log_format() {
        let dump = b"(0.000100) can0 123#11\n(0.000200) can0 124#\n";
        assert_eq!(read_log(dump, "d").unwrap().len(), 2);
        let csv = b"timestamp,id,dlc,payload,label\n0.5,0x010,1,AA,zero_id\n";
        let log = read_log(csv, "c").unwrap();
        assert_eq!(log.labels, vec![Label::ZeroId]);
        assert!(read_log(b"garbage\n", "g").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["canids", "bogus"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["canids", "simulate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["canids", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8_lossy(&err).contains("missing --out"));
    }
}
