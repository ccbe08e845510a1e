//! Command-line front end: `generate`, `train`, `evaluate`, `export`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autodiff::Activation;
use crate::config::RunConfig;
use crate::dataset::CollocationSet;
use crate::error::{Error, Result};
use crate::eval::{
    export_deformed_mesh, export_timeseries, mean_squared_error, nearest_time_index, relative_l2,
    rms_error, Field, FieldGrid, Predictor,
};
use crate::oracle::{axis, generate_grid_dataset, MollifierMode};
use crate::residual::LossBreakdown;
use crate::trainer::{read_history, save_checkpoint, write_history, Checkpoint, Trainer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidInput(_) | Error::DegenerateReference(_) => {
            EXIT_CONFIG
        }
        Error::Diverged { .. } | Error::NonFinite { .. } => EXIT_DIVERGED,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "poro-pinn",
    version,
    about = "Physics-informed network for the poroelastic point-source problem"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Configuration file (`key = value` with sections).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Worker threads for grid evaluation (0: all cores).
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,
    /// Serial, fixed-order evaluation everywhere.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[arg(long, global = true, value_enum)]
    pub activation: Option<ActivationArg>,
    #[arg(long = "source-mode", global = true, value_enum)]
    pub source_mode: Option<SourceModeArg>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ActivationArg {
    Tanh,
    Relu,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SourceModeArg {
    Gaussian,
    #[value(name = "grid_delta")]
    GridDelta,
    Omit,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the analytical grid dataset.
    Generate,
    /// Train on the dataset and write checkpoint and history.
    Train {
        /// Override the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Print per-field errors of a checkpoint against the analytical grid.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Write figure data.
    Export {
        #[arg(value_enum)]
        what: ExportKind,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Snapshot times for `mesh` (default π/2 and 3π/2).
        #[arg(long = "time", value_name = "T")]
        times: Vec<f64>,
        /// Displacement magnification for `mesh`.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Probe as `FIELD,X,Z` for `timeseries` (default `u,0,0.25` and `v,0.25,0`).
        #[arg(long = "probe", value_name = "FIELD,X,Z")]
        probes: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Mesh,
    Timeseries,
    History,
}

/// Parses arguments, runs the command and returns the exit code. Messages
/// go to `out`, errors to `err`.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Loads the config file (or defaults) and applies the global flags.
pub fn resolve_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.training.seed = s;
    }
    if let Some(t) = g.threads {
        cfg.threads = t;
    }
    if g.deterministic {
        cfg.training.deterministic = true;
    }
    if let Some(a) = g.activation {
        cfg.training.spec.activation = match a {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Relu => Activation::Relu,
        };
    }
    if let Some(m) = g.source_mode {
        cfg.source.mode = match m {
            SourceModeArg::Gaussian => MollifierMode::Gaussian,
            SourceModeArg::GridDelta => MollifierMode::GridDelta,
            SourceModeArg::Omit => MollifierMode::Omit,
        };
    }
    if let Some(o) = &g.out {
        cfg.paths.out_dir = o.clone();
    }
    cfg.sync();
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    // A global pool can only be installed once per process; later calls
    // (tests running several commands) keep the first one.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global();
    match &cli.command {
        Command::Generate => cmd_generate(&cfg, out),
        Command::Train { epochs } => {
            let mut cfg = cfg;
            if let Some(e) = epochs {
                cfg.training.epochs = *e;
                cfg.validate()?;
            }
            cmd_train(&cfg, out, err)
        }
        Command::Evaluate { checkpoint } => cmd_evaluate(&cfg, checkpoint.as_deref(), out),
        Command::Export {
            what,
            checkpoint,
            times,
            scale,
            probes,
        } => cmd_export(
            &cfg,
            *what,
            checkpoint.as_deref(),
            times,
            *scale,
            probes,
            out,
        ),
    }
}

fn analytical_grid(cfg: &RunConfig) -> Result<FieldGrid> {
    let ds = generate_grid_dataset(&cfg.domain, &cfg.params, cfg.grid, cfg.truncation)?;
    FieldGrid::from_dataset(&ds)
}

pub fn cmd_generate(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let ds = generate_grid_dataset(&cfg.domain, &cfg.params, cfg.grid, cfg.truncation)?;
    let path = cfg.paths.dataset();
    ds.write_csv(&path)?;
    writeln!(
        out,
        "wrote {} rows to {} (series truncation n_max = {}, q_max = {})",
        ds.len(),
        path.display(),
        cfg.truncation.n_max,
        cfg.truncation.q_max
    )
    .map_err(io_err)
}

fn format_breakdown(lb: &LossBreakdown) -> String {
    format!(
        "mse_u {:.6e}  mse_v {:.6e}  mse_p {:.6e}  mse_f {:.6e}  mse_g {:.6e}  mse_h {:.6e}  mse_t {:.6e}  mse_c {:.6e}  total {:.6e}",
        lb.mse_u, lb.mse_v, lb.mse_p, lb.mse_f, lb.mse_g, lb.mse_h, lb.mse_t, lb.mse_c, lb.total
    )
}

fn write_outputs(cfg: &RunConfig, trainer: &Trainer) -> Result<()> {
    let model = trainer.snapshot();
    save_checkpoint(&cfg.paths.checkpoint(), &Checkpoint::from(&model))?;
    write_history(&cfg.paths.history(), &model.history)
}

pub fn cmd_train(cfg: &RunConfig, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    let path = cfg.paths.dataset();
    let ds = CollocationSet::read_csv(&path)?;
    let mut trainer = Trainer::new(cfg.training, &ds)?;
    let every = cfg.log_every;
    let result = trainer.run(|epoch, lb| {
        if every > 0 && (epoch % every == 0 || epoch == 1) {
            let _ = writeln!(err, "epoch {epoch}: total {:.6e}", lb.total);
        }
    });
    write_outputs(cfg, &trainer)?;
    result?;
    let last = trainer.history().last().copied().unwrap_or_default();
    writeln!(
        out,
        "final epoch {}: {}",
        trainer.epochs_done(),
        format_breakdown(&last)
    )
    .map_err(io_err)?;
    let truth = match FieldGrid::from_dataset(&ds) {
        Ok(g) => g,
        Err(_) => analytical_grid(cfg)?,
    };
    let model = trainer.snapshot();
    let pred = Predictor::Network {
        params: model.params,
        maps: model.maps,
    }
    .predict_grid(truth.xs(), truth.zs(), truth.ts())?;
    for f in Field::ALL {
        writeln!(
            out,
            "relative_l2 {f} {:.6e}",
            relative_l2(&pred, &truth, f)?
        )
        .map_err(io_err)?;
    }
    writeln!(
        out,
        "wrote {} and {}",
        cfg.paths.checkpoint().display(),
        cfg.paths.history().display()
    )
    .map_err(io_err)
}

fn truth_grid(cfg: &RunConfig) -> Result<FieldGrid> {
    let path = cfg.paths.dataset();
    if path.exists() {
        if let Ok(g) = FieldGrid::from_dataset(&CollocationSet::read_csv(&path)?) {
            return Ok(g);
        }
    }
    analytical_grid(cfg)
}

fn load_predictor(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<Predictor> {
    let path = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.paths.checkpoint());
    Predictor::load(&path, &cfg.params)
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    out: &mut impl Write,
) -> Result<()> {
    let predictor = load_predictor(cfg, checkpoint)?;
    let truth = truth_grid(cfg)?;
    let pred = predictor.predict_grid(truth.xs(), truth.zs(), truth.ts())?;
    writeln!(out, "field,mse,rms,relative_l2").map_err(io_err)?;
    for f in Field::ALL {
        writeln!(
            out,
            "{f},{:.6e},{:.6e},{:.6e}",
            mean_squared_error(&pred, &truth, f)?,
            rms_error(&pred, &truth, f)?,
            relative_l2(&pred, &truth, f)?
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn parse_probe(s: &str) -> Result<(Field, f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config {
        line: None,
        msg: format!("probe `{s}` is not `FIELD,X,Z`"),
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let field = parts[0].parse().map_err(|_| bad())?;
    let x = parts[1].parse().map_err(|_| bad())?;
    let z = parts[2].parse().map_err(|_| bad())?;
    Ok((field, x, z))
}

pub fn cmd_export(
    cfg: &RunConfig,
    what: ExportKind,
    checkpoint: Option<&Path>,
    times: &[f64],
    scale: f64,
    probes: &[String],
    out: &mut impl Write,
) -> Result<()> {
    let dir = &cfg.paths.out_dir;
    if what == ExportKind::History {
        let history = read_history(&cfg.paths.history())?;
        let path = dir.join("loss_history.csv");
        write_history(&path, &history)?;
        return writeln!(out, "wrote {} ({} epochs)", path.display(), history.len())
            .map_err(io_err);
    }
    let predictor = load_predictor(cfg, checkpoint)?;
    let xs = axis(0.0, cfg.domain.a, cfg.grid.nx);
    let zs = axis(0.0, cfg.domain.b, cfg.grid.nz);
    let ts = axis(0.0, cfg.domain.t_max, cfg.grid.nt);
    let grids = [
        ("model", predictor.predict_grid(&xs, &zs, &ts)?),
        (
            "analytical",
            FieldGrid::analytical(&xs, &zs, &ts, &cfg.params, cfg.truncation)?,
        ),
    ];
    match what {
        ExportKind::Mesh => {
            let times = if times.is_empty() {
                vec![PI / 2.0, 3.0 * PI / 2.0]
            } else {
                times.to_vec()
            };
            for t in times {
                for (name, grid) in &grids {
                    let it = nearest_time_index(grid, t);
                    let path = dir.join(format!("mesh_{name}_t{it:03}.csv"));
                    export_deformed_mesh(grid, it, scale, &path)?;
                    writeln!(out, "wrote {} (t = {:.6})", path.display(), grid.ts()[it])
                        .map_err(io_err)?;
                }
            }
        }
        ExportKind::Timeseries => {
            let probes = if probes.is_empty() {
                vec![(Field::U, 0.0, 0.25), (Field::V, 0.25, 0.0)]
            } else {
                probes
                    .iter()
                    .map(|p| parse_probe(p))
                    .collect::<Result<_>>()?
            };
            for (field, x, z) in probes {
                for (name, grid) in &grids {
                    let path = dir.join(format!("timeseries_{name}_{field}_x{x}_z{z}.csv"));
                    let snap = export_timeseries(grid, (x, z), field, &path)?;
                    writeln!(out, "wrote {} (snap distance {snap:.3e})", path.display())
                        .map_err(io_err)?;
                }
            }
        }
        ExportKind::History => unreachable!(),
    }
    Ok(())
}
