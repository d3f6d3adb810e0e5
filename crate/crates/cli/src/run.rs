use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tremor_core::analysis::{
    backtest, lag_groups, lead_lag_curve, sync_curve, tremor_activity, BinEdges,
};
use tremor_core::calibration::{grid_calibrate, CalibrationGrid, CalibrationOptions};
use tremor_core::io::{
    default_universe, generate_synthetic, panel_from_prices, parse_prices, parse_universe,
    timeline_from_prices, universe_to_toml, write_backtest_json, write_calibration_json,
    write_events_csv, write_lead_lag_csv, write_sync_csv, write_tremor_csv, UniverseConfig,
};
use tremor_core::model::{replay, ObservedPanel};
use tremor_core::{CalibrationError, DataError, ModelError};

use crate::args::{AnalyzeArgs, Analysis, BacktestArgs, CalibrateArgs, Command, DataArgs, GenerateArgs};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Estimation(m) => f.write_str(m),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::InvalidGrid(m) => CliError::Usage(format!("invalid grid: {m}")),
            CalibrationError::AllPointsFailed(points) => {
                let mut msg = format!("calibration failed at every grid point ({} points)", points.len());
                for p in points {
                    msg.push_str("\n  ");
                    msg.push_str(&p);
                }
                CliError::Estimation(msg)
            }
            other => CliError::Estimation(other.to_string()),
        }
    }
}

impl From<tremor_core::AnalysisError> for CliError {
    fn from(e: tremor_core::AnalysisError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let err = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(err)?);
        f(&mut w).and_then(|_| w.flush()).map_err(err)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: &Command) -> Result<(), CliError> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            outputs: std::mem::take(&mut self.written),
        };
        self.write(MANIFEST_FILE, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            writeln!(w)
        })
    }
}

fn load_config(path: Option<&Path>) -> Result<UniverseConfig, CliError> {
    match path {
        Some(p) => Ok(parse_universe(p)?),
        None => Ok(default_universe()),
    }
}

fn load_panel(data: &DataArgs) -> Result<(UniverseConfig, ObservedPanel), CliError> {
    let cfg = load_config(data.config.as_deref())?;
    let prices = parse_prices(&data.prices, &cfg.universe)?;
    if prices.is_empty() {
        return Err(CliError::Data(format!("{}: no price rows", data.prices.display())));
    }
    let timeline = timeline_from_prices(&cfg.universe, &prices)?;
    let (panel, gaps) = panel_from_prices(&prices, &cfg.universe, &timeline)?;
    if !gaps.is_empty() {
        eprintln!("{} events without a computable return are skipped", gaps.len());
    }
    Ok((cfg, panel))
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => generate(command, a, false),
        Command::Simulate(a) => generate(command, a, true),
        Command::Calibrate(a) => calibrate(command, a),
        Command::Analyze(a) => analyze(command, a),
        Command::Backtest(a) => run_backtest(command, a),
        Command::Rerun(a) => {
            let text = fs::read_to_string(&a.manifest)
                .map_err(|e| CliError::Data(format!("{}: {e}", a.manifest.display())))?;
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", a.manifest.display())))?;
            let mut inner = manifest.command;
            if let Command::Rerun(_) = inner {
                return Err(CliError::Usage("a manifest cannot record a rerun".into()));
            }
            if let (Some(out), Some(slot)) = (&a.out, inner.out_mut()) {
                *slot = out.clone();
            }
            execute(&inner)
        }
    }
}

fn generate(command: &Command, a: &GenerateArgs, events: bool) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let params = a.params.params()?;
    if a.days == 0 {
        return Err(CliError::Usage("--days must be at least 1".into()));
    }
    let synth = generate_synthetic(&cfg, params, a.days, a.seed, a.modes.modes())?;
    let mut out = Outputs::new(&a.out)?;
    out.write("universe.toml", |w| w.write_all(universe_to_toml(&cfg).as_bytes()))?;
    out.write("prices.csv", |w| w.write_all(&synth.csv))?;
    if events {
        out.write("events.csv", |w| write_events_csv(&synth.panel, w))?;
        out.write("tremor.csv", |w| write_tremor_csv(&tremor_activity(&synth.panel), w))?;
    }
    eprintln!("{} events over {} days written to {}", synth.panel.timeline().len(), a.days, a.out.display());
    out.finish(command)
}

fn calibrate(command: &Command, a: &CalibrateArgs) -> Result<(), CliError> {
    let grid = CalibrationGrid::from_variances(a.r_c_grid.clone(), a.tau_grid.clone(), a.sigma2_grid.clone())?;
    let (_, panel) = load_panel(&a.data)?;
    let options = CalibrationOptions {
        gamma_method: a.gamma_method.into(),
        likelihood: a.likelihood.into(),
        min_occupancy: a.min_occupancy,
        ..Default::default()
    };
    let modes = a.modes.modes();
    let result = grid_calibrate(&panel, &grid, modes, &options)?;
    let decomposition = replay(&panel, result.params, modes)?;
    let mut out = Outputs::new(&a.out)?;
    out.write("calibration.json", |w| write_calibration_json(&result, w))?;
    out.write("events.csv", |w| write_events_csv(&decomposition, w))?;
    let p = result.params;
    eprintln!(
        "selected gamma={} tau={} r_c={} sigma2={} (log-likelihood {})",
        p.gamma,
        p.tau,
        p.r_c,
        p.variance(),
        result.log_likelihood
    );
    out.finish(command)
}

fn analyze(command: &Command, a: &AnalyzeArgs) -> Result<(), CliError> {
    let params = a.params.params()?;
    let (cfg, panel) = load_panel(&a.data)?;
    let edges = match &a.edges {
        Some(e) => BinEdges::Fixed(e.clone()),
        None => BinEdges::Quantiles(a.bins),
    };
    let mut out = Outputs::new(&a.out)?;
    match a.which {
        Analysis::Sync => {
            let curve = sync_curve(&panel, &edges)?;
            out.write("sync.csv", |w| write_sync_csv(&curve, w))?;
        }
        Analysis::Leadlag => {
            let mover = match &a.mover {
                Some(id) => cfg
                    .universe
                    .index_of(id)
                    .ok_or_else(|| CliError::Usage(format!("unknown mover exchange {id:?}")))?,
                None => cfg.universe.largest(),
            };
            let groups = lag_groups(&cfg.universe, mover, a.split_hours);
            let mut curves = Vec::new();
            for (name, members) in [("short", &groups.short), ("long", &groups.long)] {
                if !members.is_empty() {
                    curves.push((name.to_string(), lead_lag_curve(&panel, mover, members, &edges)?));
                }
            }
            out.write("leadlag.csv", |w| write_lead_lag_csv(&curves, w))?;
        }
        Analysis::Tremor => {
            let decomposition = replay(&panel, params, a.modes.modes())?;
            out.write("tremor.csv", |w| write_tremor_csv(&tremor_activity(&decomposition), w))?;
        }
    }
    out.finish(command)
}

fn run_backtest(command: &Command, a: &BacktestArgs) -> Result<(), CliError> {
    let params = a.params.params()?;
    let (_, panel) = load_panel(&a.data)?;
    let report = backtest(&panel, params, a.modes.modes())?;
    let mut out = Outputs::new(&a.out)?;
    out.write("backtest.json", |w| write_backtest_json(&report, w))?;
    eprintln!(
        "{} hits out of {} predictions ({} events)",
        report.hits, report.n_predicted, report.n_events
    );
    out.finish(command)
}
