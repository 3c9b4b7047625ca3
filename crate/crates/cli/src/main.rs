//! Command-line driver for transmission-network experiments: simulation,
//! spectral thresholds, continuous-time limits, training, and function
//! approximation, each run reproducible from a written manifest.

mod manifest;
mod p0;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use transnn::activations::ActivationKind;
use transnn::analysis::extinction_check;
use transnn::continuum::{
    discretization_consistency, discretization_consistency_multi, integrate, sis_rhs_multi,
    sis_rhs_single, write_consistency_csv, ContinuousRates, ContinuumError, SelfTransmission,
};
use transnn::dynamics::{simulate, InitialState, Representation};
use transnn::learn::{
    accuracy, compare_activations, fit_universal_ladder, round_output_weights_rational,
    sup_error_on_grid, train, two_clusters, ApproxConfig, ApproxTarget, Dataset, LayeredTransNN,
    LearnError, Loss, Optimizer, OutputHead, Targets, TrainConfig,
};
use transnn::network::{
    load_network, load_network_csv, NetworkError, NetworkKind, TransmissionNetwork,
};
use transnn::Mat;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "transnn",
    version,
    about = "Transmission-network dynamics, spectral thresholds, continuous-time limits, and trainable layered models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for any randomized choice (initial states, training).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Output format for tabular data.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    #[value(name = "prob")]
    Prob,
    #[value(name = "info")]
    Info,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Effective,
    Single,
    Multi,
    General,
}

impl From<KindArg> for NetworkKind {
    fn from(k: KindArg) -> NetworkKind {
        match k {
            KindArg::Effective => NetworkKind::EffectiveAdjacency,
            KindArg::Single => NetworkKind::SingleParticle,
            KindArg::Multi => NetworkKind::MultiParticle,
            KindArg::General => NetworkKind::GeneralReal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    #[value(name = "exponential")]
    Exponential,
    #[value(name = "linear")]
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActArg {
    #[value(name = "psi")]
    Psi,
    #[value(name = "psi-plus")]
    PsiPlus,
    #[value(name = "phi")]
    Phi,
}

impl From<ActArg> for ActivationKind {
    fn from(a: ActArg) -> ActivationKind {
        match a {
            ActArg::Psi => ActivationKind::TLogSigmoid,
            ActArg::PsiPlus => ActivationKind::TLogSigmoidPlus,
            ActArg::Phi => ActivationKind::TSoftAffine,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the discrete spread dynamics and export the trajectory.
    Simulate {
        /// Network file (.json, or .csv edge list).
        network: PathBuf,
        /// Initial probabilities: `all=v[,node:i=v...]` or `uniform-random(seed)`.
        #[arg(long, default_value = "all=0")]
        p0: String,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        /// State space to iterate in.
        #[arg(long, value_enum, default_value_t = ReprArg::Prob)]
        representation: ReprArg,
        /// Network kind for CSV edge lists (JSON files carry their own).
        #[arg(long, value_enum, default_value_t = KindArg::Single)]
        kind: KindArg,
    },
    /// Spectral extinction threshold of a network.
    Threshold {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Single)]
        kind: KindArg,
    },
    /// Integrate the continuous-time SIS field with fixed-step RK4.
    Ode {
        /// Rates file: `{"n", "c", "kappa"?, "epsilon"?, "adj"?}`.
        rates: PathBuf,
        #[arg(long, default_value = "all=0.5")]
        p0: String,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Step-size consistency of the discretized dynamics against RK4.
    Consistency {
        rates: PathBuf,
        #[arg(long, default_value = "all=0.5")]
        p0: String,
        /// Strictly decreasing step ladder.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025, 0.0125])]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Self-loop discretization variant.
        #[arg(long, value_enum, default_value_t = VariantArg::Exponential)]
        self_transmission: VariantArg,
    },
    /// Train a layered model on a dataset (or the bundled synthetic task).
    Train {
        /// Dataset JSON: `{"inputs": [[..]], "targets": [[..]]}` or
        /// `{"inputs": [[..]], "labels": [..]}`.
        #[arg(long, conflicts_with = "synthetic")]
        dataset: Option<PathBuf>,
        /// Training/model config JSON (defaults applied per field).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bundled task: `two-clusters`.
        #[arg(long)]
        synthetic: Option<String>,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        /// Run all five activation variants and emit one loss column each.
        #[arg(long)]
        compare_activations: bool,
    },
    /// Fit the single-hidden-layer approximator over a width ladder.
    Approx {
        /// Target name: sin | gaussian-bump | sawtooth-smooth | 2d-peaks.
        #[arg(long, default_value = "sin")]
        target: String,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
        widths: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ActArg::Psi)]
        activation: ActArg,
        /// Fixed shared bias (nonzero; positive for psi-plus).
        #[arg(long, default_value_t = 1.0)]
        bias: f64,
        #[arg(long)]
        epochs: Option<usize>,
        /// Also report sup error after rational rounding of output weights.
        #[arg(long)]
        rational: bool,
    },
    /// Validate a network file and print a summary.
    Validate {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Single)]
        kind: KindArg,
    },
}

/// Process exit codes: 2 validation, 3 numerical domain, 4 non-convergence.
enum AppError {
    Validation(String),
    Domain(String),
    NonConvergence(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 2,
            AppError::Domain(_) => 3,
            AppError::NonConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Domain(m) | AppError::NonConvergence(m) => m,
        }
    }
}

impl From<NetworkError> for AppError {
    fn from(e: NetworkError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<transnn::dynamics::DynamicsError> for AppError {
    fn from(e: transnn::dynamics::DynamicsError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<transnn::analysis::AnalysisError> for AppError {
    fn from(e: transnn::analysis::AnalysisError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<ContinuumError> for AppError {
    fn from(e: ContinuumError) -> Self {
        match e {
            ContinuumError::DeltaTooLarge { .. }
            | ContinuumError::NonFiniteField { .. }
            | ContinuumError::MultiScaleViolation(_) => AppError::Domain(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<LearnError> for AppError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::NanLoss { .. } => AppError::Domain(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn say(cli: &Cli, line: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", line.as_ref());
    }
}

fn load_any_network(path: &Path, kind: KindArg) -> Result<TransmissionNetwork, AppError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(load_network_csv(path, kind.into())?),
        _ => Ok(load_network(path)?),
    }
}

fn write_gnuplot(path: &Path, body: &str) -> Result<(), AppError> {
    fs::write(path, body)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Simulate {
            network,
            p0,
            horizon,
            representation,
            kind,
        } => cmd_simulate(cli, network, p0, *horizon, *representation, *kind),
        Command::Threshold { network, kind } => cmd_threshold(cli, network, *kind),
        Command::Ode {
            rates,
            p0,
            t_end,
            dt,
        } => cmd_ode(cli, rates, p0, *t_end, *dt),
        Command::Consistency {
            rates,
            p0,
            deltas,
            t_end,
            self_transmission,
        } => cmd_consistency(cli, rates, p0, deltas, *t_end, *self_transmission),
        Command::Train {
            dataset,
            config,
            synthetic,
            per_class,
            compare_activations,
        } => cmd_train(
            cli,
            dataset.as_deref(),
            config.as_deref(),
            synthetic.as_deref(),
            *per_class,
            *compare_activations,
        ),
        Command::Approx {
            target,
            widths,
            activation,
            bias,
            epochs,
            rational,
        } => cmd_approx(cli, target, widths, *activation, *bias, *epochs, *rational),
        Command::Validate { network, kind } => cmd_validate(cli, network, *kind),
    }
}

fn cmd_simulate(
    cli: &Cli,
    network: &Path,
    p0_spec: &str,
    horizon: usize,
    representation: ReprArg,
    kind: KindArg,
) -> Result<(), AppError> {
    let net = load_any_network(network, kind)?;
    let p0 = p0::parse_p0(p0_spec, net.n()).map_err(AppError::Validation)?;
    let repr = match representation {
        ReprArg::Prob => Representation::Probability,
        ReprArg::Info => Representation::Info,
    };
    let mut man = RunManifest::new(
        cli.seed,
        json!({
            "subcommand": "simulate",
            "network": network.display().to_string(),
            "p0": p0_spec,
            "horizon": horizon,
            "representation": match repr { Representation::Probability => "probability", Representation::Info => "info" },
            "format": match cli.format { Format::Csv => "csv", Format::Json => "json" },
        }),
    );
    man.add_input(network)?;
    let traj_path = man.add_output(&cli.out_dir.join(match cli.format {
        Format::Csv => "trajectory.csv",
        Format::Json => "trajectory.json",
    }));
    let plot_path = man.add_output(&cli.out_dir.join("plot_trajectory.gp"));
    man.write(&cli.out_dir)?;

    let traj = simulate(&net, &InitialState::Probability(p0), horizon, repr)?;
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).map_err(AppError::from)?;
            fs::write(&traj_path, buf)?;
        }
        Format::Json => {
            fs::write(
                &traj_path,
                serde_json::to_string_pretty(&traj.to_json()).expect("trajectory serializes"),
            )?;
        }
    }
    write_gnuplot(
        &plot_path,
        &format!(
            "set datafile separator ','\n\
             set xlabel 'step'\nset ylabel 'p'\nset key outside\n\
             plot for [i=0:{}] 'trajectory.csv' every ::1 using 1:($2==i?$3:1/0) \
             with lines title sprintf('node %d', i)\n",
            net.n() - 1
        ),
    )?;
    say(
        cli,
        format!(
            "simulated {} steps of a {}-node {:?} network -> {}",
            horizon,
            net.n(),
            net.kind(),
            traj_path.display()
        ),
    );
    Ok(())
}

fn cmd_threshold(cli: &Cli, network: &Path, kind: KindArg) -> Result<(), AppError> {
    let net = load_any_network(network, kind)?;
    let mut man = RunManifest::new(
        cli.seed,
        json!({
            "subcommand": "threshold",
            "network": network.display().to_string(),
        }),
    );
    man.add_input(network)?;
    let report_path = man.add_output(&cli.out_dir.join("threshold.json"));
    man.write(&cli.out_dir)?;

    let report = extinction_check(&net)?;
    fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    let verdict = if report.boundary_indeterminate {
        "indeterminate at tolerance"
    } else if report.extinction_guaranteed {
        "extinction guaranteed"
    } else {
        "extinction not guaranteed"
    };
    println!("radius {:.6}, {}", report.spectral_radius, verdict);
    if !report.converged {
        return Err(AppError::NonConvergence(format!(
            "spectral radius estimate did not converge (residual {:.3e})",
            report.residual
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct RatesFile {
    n: usize,
    c: Vec<Vec<f64>>,
    #[serde(default)]
    kappa: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    adj: Option<Vec<Vec<f64>>>,
}

fn load_rates(path: &Path) -> Result<(ContinuousRates, Mat), AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    let file: RatesFile = serde_json::from_str(&text)
        .map_err(|e| AppError::Validation(format!("{}: invalid JSON: {e}", path.display())))?;
    let to_mat = |name: &str, rows: &Vec<Vec<f64>>| -> Result<Mat, AppError> {
        let m = Mat::from_rows(rows)
            .ok_or_else(|| AppError::Validation(format!("{name}: ragged matrix")))?;
        if m.rows() != file.n || m.cols() != file.n {
            return Err(AppError::Validation(format!(
                "{name}: expected {0}x{0}, got {1}x{2}",
                file.n,
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    };
    let c = to_mat("c", &file.c)?;
    let kappa = file.kappa.as_ref().map(|k| to_mat("kappa", k)).transpose()?;
    let adj = match file.adj.as_ref() {
        Some(a) => to_mat("adj", a)?,
        None => Mat::filled(file.n, file.n, 1.0),
    };
    let rates = ContinuousRates::new(c, kappa, file.epsilon.unwrap_or(0.5))?;
    Ok((rates, adj))
}

fn cmd_ode(cli: &Cli, rates_path: &Path, p0_spec: &str, t_end: f64, dt: f64) -> Result<(), AppError> {
    let (rates, adj) = load_rates(rates_path)?;
    let p0 = p0::parse_p0(p0_spec, rates.n()).map_err(AppError::Validation)?;
    let mut man = RunManifest::new(
        cli.seed,
        json!({
            "subcommand": "ode",
            "rates": rates_path.display().to_string(),
            "p0": p0_spec,
            "t_end": t_end,
            "dt": dt,
        }),
    );
    man.add_input(rates_path)?;
    let series_path = man.add_output(&cli.out_dir.join(match cli.format {
        Format::Csv => "timeseries.csv",
        Format::Json => "timeseries.json",
    }));
    let plot_path = man.add_output(&cli.out_dir.join("plot_timeseries.gp"));
    man.write(&cli.out_dir)?;

    let multi = rates.kappa.is_some();
    let series = if multi {
        integrate(|p| sis_rhs_multi(&rates, p), &p0, t_end, dt)?
    } else {
        integrate(|p| sis_rhs_single(&rates, &adj, p), &p0, t_end, dt)?
    };
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            series.write_csv(&mut buf).map_err(AppError::from)?;
            fs::write(&series_path, buf)?;
        }
        Format::Json => {
            fs::write(
                &series_path,
                serde_json::to_string_pretty(&series).expect("series serializes"),
            )?;
        }
    }
    write_gnuplot(
        &plot_path,
        &format!(
            "set datafile separator ','\n\
             set xlabel 't'\nset ylabel 'p'\nset key outside\n\
             plot for [i=0:{}] 'timeseries.csv' every ::1 using 1:($2==i?$3:1/0) \
             with lines title sprintf('node %d', i)\n",
            rates.n() - 1
        ),
    )?;
    say(
        cli,
        format!(
            "integrated the {} field to t = {t_end} (dt = {dt}, {} clamp events) -> {}",
            if multi { "multi-particle" } else { "network SIS" },
            series.clamp_events.len(),
            series_path.display()
        ),
    );
    Ok(())
}

fn cmd_consistency(
    cli: &Cli,
    rates_path: &Path,
    p0_spec: &str,
    deltas: &[f64],
    t_end: f64,
    variant: VariantArg,
) -> Result<(), AppError> {
    let (rates, adj) = load_rates(rates_path)?;
    let p0 = p0::parse_p0(p0_spec, rates.n()).map_err(AppError::Validation)?;
    let mut man = RunManifest::new(
        cli.seed,
        json!({
            "subcommand": "consistency",
            "rates": rates_path.display().to_string(),
            "p0": p0_spec,
            "deltas": deltas,
            "t_end": t_end,
            "self_transmission": match variant { VariantArg::Exponential => "exponential", VariantArg::Linear => "linear" },
        }),
    );
    man.add_input(rates_path)?;
    let table_path = man.add_output(&cli.out_dir.join("consistency.csv"));
    let plot_path = man.add_output(&cli.out_dir.join("plot_consistency.gp"));
    man.write(&cli.out_dir)?;

    let rows = if rates.kappa.is_some() {
        discretization_consistency_multi(&rates, &p0, deltas, t_end)?
    } else {
        let v = match variant {
            VariantArg::Exponential => SelfTransmission::Exponential,
            VariantArg::Linear => SelfTransmission::Linear,
        };
        discretization_consistency(&rates, &adj, &p0, deltas, t_end, v)?
    };
    let mut buf = Vec::new();
    write_consistency_csv(&rows, &mut buf).map_err(AppError::from)?;
    fs::write(&table_path, buf)?;
    write_gnuplot(
        &plot_path,
        "set datafile separator ','\nset logscale xy\n\
         set xlabel 'delta'\nset ylabel 'sup error'\n\
         plot 'consistency.csv' every ::1 using 1:2 with linespoints title 'endpoint error'\n",
    )?;
    for row in &rows {
        say(
            cli,
            format!(
                "delta {:<8} sup_error {:.6e} order {}",
                row.delta,
                row.sup_error,
                row.order_estimate
                    .map(|o| format!("{o:.3}"))
                    .unwrap_or_else(|| "-".into())
            ),
        );
    }
    say(cli, format!("consistency table -> {}", table_path.display()));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    inputs: Vec<Vec<f64>>,
    #[serde(default)]
    targets: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    labels: Option<Vec<usize>>,
}

fn load_dataset(path: &Path) -> Result<Dataset, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| AppError::Validation(format!("{}: invalid JSON: {e}", path.display())))?;
    let inputs = Mat::from_rows(&file.inputs)
        .ok_or_else(|| AppError::Validation("inputs: ragged matrix".into()))?;
    let targets = match (file.targets, file.labels) {
        (Some(t), None) => Targets::Regression(
            Mat::from_rows(&t).ok_or_else(|| AppError::Validation("targets: ragged".into()))?,
        ),
        (None, Some(l)) => Targets::Labels(l),
        _ => {
            return Err(AppError::Validation(
                "dataset needs exactly one of `targets` or `labels`".into(),
            ))
        }
    };
    Ok(Dataset::new(inputs, targets)?)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct TrainFile {
    layer_sizes: Option<Vec<usize>>,
    activation: Option<String>,
    head: Option<String>,
    loss: Option<String>,
    optimizer: Option<String>,
    learning_rate: Option<f64>,
    lr_decay: Option<f64>,
    l2_weight: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    seed: Option<u64>,
    val_fraction: Option<f64>,
    train_a: Option<bool>,
    train_w: Option<bool>,
    train_eta: Option<bool>,
    train_bias: Option<bool>,
}

fn parse_activation(s: &str) -> Result<ActivationKind, AppError> {
    match s {
        "psi" | "TLogSigmoid" => Ok(ActivationKind::TLogSigmoid),
        "psi-plus" | "TLogSigmoidPlus" => Ok(ActivationKind::TLogSigmoidPlus),
        "phi" | "TSoftAffine" => Ok(ActivationKind::TSoftAffine),
        other => Err(AppError::Validation(format!("unknown activation `{other}`"))),
    }
}

fn cmd_train(
    cli: &Cli,
    dataset: Option<&Path>,
    config: Option<&Path>,
    synthetic: Option<&str>,
    per_class: usize,
    compare: bool,
) -> Result<(), AppError> {
    let seed = cli.seed.unwrap_or(7);
    let data = match (dataset, synthetic) {
        (Some(path), None) => load_dataset(path)?,
        (None, Some("two-clusters")) => two_clusters(per_class, seed),
        (None, Some(other)) => {
            return Err(AppError::Validation(format!(
                "unknown synthetic task `{other}` (available: two-clusters)"
            )))
        }
        (None, None) => {
            return Err(AppError::Validation(
                "provide --dataset FILE or --synthetic two-clusters".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let tf: TrainFile = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| AppError::Validation(format!("{}: invalid JSON: {e}", path.display())))?
        }
        None => TrainFile::default(),
    };
    let classification = matches!(data.targets, Targets::Labels(_));
    let out_dim = match &data.targets {
        Targets::Labels(l) => l.iter().max().map_or(2, |m| m + 1),
        Targets::Regression(t) => t.cols(),
    };
    let layer_sizes = tf
        .layer_sizes
        .unwrap_or_else(|| vec![data.inputs.cols(), 8, out_dim]);
    let activation = parse_activation(tf.activation.as_deref().unwrap_or("psi"))?;
    let head = match tf.head.as_deref() {
        Some("identity") => OutputHead::Identity,
        Some("prob") => OutputHead::ProbObservation,
        Some("log-softmax") => OutputHead::LogSoftmax,
        None => {
            if classification {
                OutputHead::LogSoftmax
            } else {
                OutputHead::Identity
            }
        }
        Some(other) => {
            return Err(AppError::Validation(format!(
                "unknown head `{other}` (identity|prob|log-softmax)"
            )))
        }
    };
    let cfg = TrainConfig {
        loss: match tf.loss.as_deref() {
            Some("mse") => Loss::Mse,
            Some("nll") => Loss::NegLogLikelihood,
            None => {
                if classification {
                    Loss::NegLogLikelihood
                } else {
                    Loss::Mse
                }
            }
            Some(other) => {
                return Err(AppError::Validation(format!(
                    "unknown loss `{other}` (mse|nll)"
                )))
            }
        },
        optimizer: match tf.optimizer.as_deref() {
            Some("sgd") => Optimizer::Sgd,
            Some("adam") | None => Optimizer::adam(),
            Some(other) => {
                return Err(AppError::Validation(format!(
                    "unknown optimizer `{other}` (sgd|adam)"
                )))
            }
        },
        learning_rate: tf.learning_rate.unwrap_or(0.05),
        lr_decay: tf.lr_decay.unwrap_or(1.0),
        l2_weight: tf.l2_weight.unwrap_or(0.0),
        epochs: tf.epochs.unwrap_or(300),
        batch_size: tf.batch_size.unwrap_or(32),
        seed: tf.seed.unwrap_or(seed),
        train_a: tf.train_a.unwrap_or(true),
        train_w: tf.train_w.unwrap_or(true),
        train_eta: tf.train_eta.unwrap_or(true),
        train_bias: tf.train_bias.unwrap_or(true),
        val_fraction: tf.val_fraction.unwrap_or(0.0),
    };

    let mut man = RunManifest::new(
        Some(cfg.seed),
        json!({
            "subcommand": "train",
            "synthetic": synthetic,
            "per_class": per_class,
            "compare_activations": compare,
            "layer_sizes": layer_sizes,
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
        }),
    );
    if let Some(path) = dataset {
        man.add_input(path)?;
    }
    if let Some(path) = config {
        man.add_input(path)?;
    }

    if compare {
        let table_path = man.add_output(&cli.out_dir.join("activation_comparison.csv"));
        man.write(&cli.out_dir)?;
        let table = compare_activations(&data, &layer_sizes, &cfg)?;
        let mut buf = Vec::new();
        table.write_csv(&mut buf).map_err(AppError::from)?;
        fs::write(&table_path, buf)?;
        for (name, acc) in &table.final_accuracy {
            say(cli, format!("{name:<10} final accuracy {acc:.4}"));
        }
        say(cli, format!("comparison table -> {}", table_path.display()));
        return Ok(());
    }

    let ckpt_path = man.add_output(&cli.out_dir.join("checkpoint.json"));
    let loss_path = man.add_output(&cli.out_dir.join("loss.csv"));
    man.write(&cli.out_dir)?;
    let model = LayeredTransNN::new(&layer_sizes, activation, head, cfg.seed)?;
    let result = train(model, &data, &cfg)?;
    result.model.save_checkpoint(&ckpt_path)?;
    let mut buf = Vec::new();
    result.write_history_csv(&mut buf).map_err(AppError::from)?;
    fs::write(&loss_path, buf)?;
    let last = result.history.last().expect("at least one epoch");
    let mut line = format!(
        "trained {} epochs, final loss {:.6e}",
        result.history.len(),
        last.train_loss
    );
    if classification {
        line.push_str(&format!(
            ", accuracy {:.4}",
            accuracy(&result.model, &data)?
        ));
    }
    say(cli, line);
    say(cli, format!("checkpoint -> {}", ckpt_path.display()));
    Ok(())
}

fn cmd_approx(
    cli: &Cli,
    target_name: &str,
    widths: &[usize],
    activation: ActArg,
    bias: f64,
    epochs: Option<usize>,
    rational: bool,
) -> Result<(), AppError> {
    let target = ApproxTarget::by_name(target_name).ok_or_else(|| {
        AppError::Validation(format!(
            "unknown target `{target_name}` (sin|gaussian-bump|sawtooth-smooth|2d-peaks)"
        ))
    })?;
    let mut cfg = ApproxConfig {
        bias,
        activation: activation.into(),
        ..ApproxConfig::default()
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let mut man = RunManifest::new(
        Some(cfg.seed),
        json!({
            "subcommand": "approx",
            "target": target_name,
            "widths": widths,
            "bias": bias,
            "epochs": cfg.epochs,
            "rational": rational,
        }),
    );
    let ladder_path = man.add_output(&cli.out_dir.join("ladder.csv"));
    let plot_path = man.add_output(&cli.out_dir.join("plot_ladder.gp"));
    let ckpt_paths: Vec<PathBuf> = widths
        .iter()
        .map(|w| man.add_output(&cli.out_dir.join(format!("checkpoint_w{w}.json"))))
        .collect();
    man.write(&cli.out_dir)?;

    let rungs = fit_universal_ladder(&target, widths, &cfg)?;
    let mut table = String::from(if rational {
        "width,sup_error,sup_error_rational\n"
    } else {
        "width,sup_error\n"
    });
    for (rung, ckpt) in rungs.iter().zip(&ckpt_paths) {
        rung.model.save_checkpoint(ckpt)?;
        if rational {
            let (rounded, _) = round_output_weights_rational(&rung.model, 1_000_000);
            let sup_r = sup_error_on_grid(&rounded, &target, cfg.eval_points)?;
            table.push_str(&format!("{},{},{}\n", rung.width, rung.sup_error, sup_r));
        } else {
            table.push_str(&format!("{},{}\n", rung.width, rung.sup_error));
        }
        say(
            cli,
            format!("width {:<4} sup error {:.6e}", rung.width, rung.sup_error),
        );
    }
    fs::write(&ladder_path, table)?;
    write_gnuplot(
        &plot_path,
        "set datafile separator ','\nset logscale y\n\
         set xlabel 'width'\nset ylabel 'sup error'\n\
         plot 'ladder.csv' every ::1 using 1:2 with linespoints title 'sup error'\n",
    )?;
    say(cli, format!("ladder -> {}", ladder_path.display()));
    Ok(())
}

fn cmd_validate(cli: &Cli, network: &Path, kind: KindArg) -> Result<(), AppError> {
    let net = load_any_network(network, kind)?;
    let links: usize = (0..net.n()).map(|i| net.in_links(i).count()).sum();
    say(
        cli,
        format!(
            "valid {:?} network: {} nodes, {} links, counts integral: {}",
            net.kind(),
            net.n(),
            links,
            net.counts_are_integral()
        ),
    );
    Ok(())
}
