//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    self, AblationAxes, Baseline, DatasetSource, ExperimentConfig, ModeChoice, SeparationConfig,
    SeparationReport, SWEEP_EXPONENTS,
};
use crate::error::{AtolError, Result};
use crate::io;
use crate::orbit::{generate_dataset, DatasetManifest, OrbitDatasetSpec};
use crate::quantizer::QuantizerConfig;
use crate::util::{derive_seed, write_atomic};
use crate::vectorizer::{calibrate, Bandwidth, CalibrationConfig, ContrastFamily, VectorizationMap};

#[derive(Debug, Parser)]
#[command(name = "atol", version, about = "Measure vectorization by mean-measure quantization")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a vectorization map on a measures CSV and write it as JSON.
    Calibrate(CalibrateArgs),
    /// Vectorize a measures CSV with a saved map.
    Transform(TransformArgs),
    /// Generate a labelled orbit dataset.
    #[command(name = "orbits-gen")]
    OrbitsGen(OrbitsGenArgs),
    /// Run repeated train/test experiments for one configuration.
    Experiment(ExperimentArgs),
    /// Vary budget, contrast family, calibration fraction and baseline.
    Ablation(AblationArgs),
    /// Compare constant bandwidths against the adaptive ones.
    Sweep(SweepArgs),
    /// Check that noisy copies of two sources vectorize apart.
    Separation(SeparationArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    BatchLloyd,
    MinibatchMacqueen,
}

impl From<ModeArg> for ModeChoice {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ModeChoice::Auto,
            ModeArg::BatchLloyd => ModeChoice::BatchLloyd,
            ModeArg::MinibatchMacqueen => ModeChoice::MinibatchMacqueen,
        }
    }
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    measures: PathBuf,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value = "laplacian")]
    family: ContrastFamily,
    /// Fraction of measures used to fit the codebook.
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    /// Constant bandwidth; adaptive when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    measures: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OrbitsGenArgs {
    /// Comma-separated parameters r, one class each.
    #[arg(long, value_delimiter = ',', default_values_t = crate::orbit::DEFAULT_PARAMETERS.to_vec())]
    classes: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    per_class: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measures CSV; labels and manifest are written next to it.
    #[arg(long, default_value = "orbits.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaseArgs {
    /// Named starting configuration: orbit5k-table3 or orbit-desk.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON file holding a full experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labelled measures CSV to use instead of generated orbits.
    #[arg(long, requires = "labels")]
    measures: Option<PathBuf>,
    #[arg(long, requires = "measures")]
    labels: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    family: Option<ContrastFamily>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    trees: Option<usize>,
    /// Use the fixed grid codebook instead of a fitted one.
    #[arg(long)]
    grid: bool,
    /// Constant bandwidth; adaptive when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BaseArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| AtolError::from(e).context(path.display().to_string()))?;
                serde_json::from_str(&text)
                    .map_err(|e| AtolError::from(e).context(path.display().to_string()))?
            }
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::orbit5k_table3(),
        };
        if let (Some(m), Some(l)) = (&self.measures, &self.labels) {
            cfg.dataset = DatasetSource::Files {
                measures: m.clone(),
                labels: l.clone(),
            };
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(f) = self.family {
            cfg.family = f;
        }
        if let Some(p) = self.fraction {
            cfg.calibration_fraction = p;
        }
        if let Some(s) = self.split {
            cfg.split_ratio = s;
        }
        if let Some(n) = self.repetitions {
            cfg.n_repetitions = n;
        }
        if let Some(m) = self.mode {
            cfg.quantizer_mode = m.into();
        }
        if let Some(t) = self.trees {
            cfg.forest.n_trees = t;
        }
        if self.grid {
            cfg.baseline = Baseline::Grid;
        }
        if let Some(s) = self.sigma {
            cfg.bandwidth = Bandwidth::Constant(s);
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Also write per-repetition accuracies as CSV.
    #[arg(long)]
    accuracies_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblationArgs {
    #[command(flatten)]
    base: BaseArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 16, 36, 100])]
    budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![ContrastFamily::Laplacian, ContrastFamily::Gaussian])]
    families: Vec<ContrastFamily>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0])]
    fractions: Vec<f64>,
    /// Skip the grid baseline.
    #[arg(long)]
    no_grid: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Base-10 exponents of σ/μ.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = SWEEP_EXPONENTS.to_vec())]
    exponents: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourcesArg {
    /// Diracs at (0,0) and (1,1).
    TwoDiracs,
    /// Three square corners each, differing in one.
    Corners,
}

#[derive(Debug, Args)]
struct SeparationArgs {
    #[arg(long, value_enum, default_value = "two-diracs")]
    sources: SourcesArg,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 50)]
    per_source: usize,
    /// Codebook size; defaults to the number of distinct source atoms.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value = "laplacian")]
    family: ContrastFamily,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SeparationSummary {
    seed: u64,
    trials: Vec<SeparationReport>,
    all_separated: bool,
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, text.as_bytes()).map_err(|e| AtolError::from(e).context(path.display().to_string()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        save_json(value, path)?;
    }
    Ok(())
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let data = io::load_measures(&a.measures)?;
    let mut q = QuantizerConfig::new(a.budget, a.seed);
    q.mode = ModeChoice::from(a.mode).resolve(data.len());
    let bandwidth = a.sigma.map_or(Bandwidth::Adaptive, Bandwidth::Constant);
    let cfg = CalibrationConfig::new(q, a.family)
        .with_fraction(a.fraction)
        .with_bandwidth(bandwidth);
    let map = calibrate(data.measures(), &cfg)?;
    write_atomic(&a.out, map.to_json()?.as_bytes())?;
    println!("calibrated b={} {} seed={} -> {}", map.budget(), map.family(), a.seed, a.out.display());
    Ok(())
}

fn run_transform(a: TransformArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.map).map_err(|e| AtolError::from(e).context(a.map.display().to_string()))?;
    let map = VectorizationMap::from_json(&text).map_err(|e| e.context(a.map.display().to_string()))?;
    let data = io::load_measures(&a.measures)?;
    let features = map.transform_batch(data.measures())?;
    io::save_features(data.ids(), &features, &a.out)?;
    println!("transformed {} measures -> {}", data.len(), a.out.display());
    Ok(())
}

fn run_orbits_gen(a: OrbitsGenArgs) -> Result<()> {
    let spec = OrbitDatasetSpec {
        parameters: a.classes,
        orbits_per_class: a.per_class,
        n_iterations: a.iters,
        master_seed: a.seed,
    };
    let data = generate_dataset(&spec)?;
    let (labels_path, manifest_path) = io::sidecar_paths(&a.out);
    io::save_measures(&data, &a.out)?;
    io::save_labels(&data, &labels_path)?;
    let name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let manifest = DatasetManifest::new(&spec, &name(&a.out), &name(&labels_path));
    save_json(&manifest, &manifest_path)?;
    println!(
        "wrote {} measures of {} points (seed {}) -> {}",
        data.len(),
        spec.n_iterations,
        spec.master_seed,
        a.out.display()
    );
    Ok(())
}

fn run_experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let cfg = a.base.config()?;
    let report = bench::run_experiment(&cfg)?;
    println!(
        "{}  accuracy {}  vectorization {:.3}s  seed {}",
        report.description,
        report.summary(),
        report.vectorization_seconds,
        cfg.master_seed
    );
    emit(&report, a.base.out.as_deref())?;
    if let Some(path) = &a.accuracies_csv {
        write_atomic(path, report.accuracies_csv().as_bytes())?;
    }
    Ok(())
}

fn run_ablation_cmd(a: AblationArgs) -> Result<()> {
    let cfg = a.base.config()?;
    let axes = AblationAxes {
        budgets: a.budgets,
        families: a.families,
        fractions: a.fractions,
        include_grid: !a.no_grid,
    };
    let table = bench::run_ablation(&cfg, &axes)?;
    print!("{}", table.render());
    emit(&table, a.base.out.as_deref())
}

fn run_sweep_cmd(a: SweepArgs) -> Result<()> {
    let cfg = a.base.config()?;
    let report = bench::run_bandwidth_sweep(&cfg, &a.exponents)?;
    print!("{}", report.render());
    emit(&report, a.base.out.as_deref())
}

fn run_separation_cmd(a: SeparationArgs) -> Result<()> {
    let mut trials = Vec::with_capacity(a.trials);
    for t in 0..a.trials {
        let seed = derive_seed(a.seed, t as u64);
        let mut cfg = match a.sources {
            SourcesArg::TwoDiracs => SeparationConfig::two_diracs(a.noise, a.per_source, seed),
            SourcesArg::Corners => SeparationConfig::corners(a.noise, a.per_source, seed),
        };
        if let Some(b) = a.budget {
            cfg.budget = b;
        }
        cfg.family = a.family;
        let r = bench::separation_probe(&cfg)?;
        println!(
            "trial {t:>3}  max intra {:.6}  min inter {:.6}  {}",
            r.max_intra,
            r.min_inter,
            if r.separated() { "separated" } else { "NOT separated" }
        );
        trials.push(r);
    }
    let summary = SeparationSummary {
        seed: a.seed,
        all_separated: trials.iter().all(SeparationReport::separated),
        trials,
    };
    emit(&summary, a.out.as_deref())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Transform(a) => run_transform(a),
        Command::OrbitsGen(a) => run_orbits_gen(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::Ablation(a) => run_ablation_cmd(a),
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Separation(a) => run_separation_cmd(a),
    }
}

fn exit_code(e: &AtolError) -> i32 {
    match e {
        AtolError::InvalidConfig(_) => 1,
        AtolError::Context { source, .. } => exit_code(source),
        _ => 2,
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(AtolError::InvalidConfig(format!("thread pool: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
