//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::optimizer::{analyze, archive_csv, optimize, sweep, SweepVariable};
use crate::optimizer::analysis::write_text;
use crate::pipeline::SiteYear;
use crate::weather::{load_horizon, load_weather, HorizonProfile};

#[derive(Debug, Parser)]
#[command(name = "agrivoltaic", version, about = "Vertical bifacial agrivoltaic simulation and design optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the design fixed in [design].
    Simulate(CommonArgs),
    /// Search azimuth and row distance for the Pareto archive.
    Optimize(CommonArgs),
    /// Vary one design variable over the [sweep] range.
    Sweep(CommonArgs),
    /// Check the configuration and input files without computing.
    ValidateConfig(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides optimizer.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides optimizer.workers.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides paths.output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    /// Loads the config and applies command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.optimizer.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.optimizer.workers = workers;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&a.resolve()?),
        Command::Optimize(a) => cmd_optimize(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?),
        Command::ValidateConfig(a) => a.resolve().map(|_| Vec::new()),
    }
}

/// Loads the inputs and prepares the site year.
pub fn prepare(cfg: &RunConfig) -> Result<SiteYear> {
    let weather = load_weather(&cfg.weather, cfg.site)?;
    let horizon = match &cfg.horizon {
        Some(p) => load_horizon(p)?,
        None => HorizonProfile::flat(),
    };
    SiteYear::prepare(&weather, &horizon, cfg.plant.clone())
}

/// Output files are assembled in memory and written only once every
/// computation has succeeded.
fn write_all(dir: &Path, files: Vec<(&str, String)>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            write_text(&path, &text)?;
            Ok(path)
        })
        .collect()
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let site = prepare(cfg)?;
    let sim = site.simulate(&site.scene(&cfg.design), &cfg.crop)?;
    let header = cfg.header(cfg.optimizer.seed);
    let summary = format!(
        "{header}\ncrop,yield_t_ha,reference_yield_t_ha,relative_yield,biomass_kg_ha,harvest_index\n{},{:.9},{:.9},{:.9},{:.6},{:.6}\n",
        sim.season.crop,
        sim.season.yield_t_ha,
        sim.reference.yield_t_ha,
        if sim.reference.yield_t_ha > 0.0 { sim.season.yield_t_ha / sim.reference.yield_t_ha } else { 0.0 },
        sim.season.biomass,
        sim.season.harvest_index,
    );
    let kpi = format!("{header}\n{}\n{}\n", crate::kpi::KpiResult::CSV_HEADER, sim.kpi.csv_row());
    write_all(
        &cfg.output,
        vec![
            ("power.csv", sim.power.to_csv(&header)),
            ("crop_trace.csv", sim.season.trace_csv(&header)),
            ("yield.csv", summary),
            ("kpi.csv", kpi),
        ],
    )
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let site = prepare(cfg)?;
    let run = optimize(&site, &cfg.crop, &cfg.optimizer)?;
    let analysis = analyze(&run.archive)?;
    let header = cfg.header(cfg.optimizer.seed);
    let mut hv = format!("{header}\ngeneration,hypervolume\n");
    for (g, v) in run.hypervolume_history.iter().enumerate() {
        hv.push_str(&format!("{g},{v:.9e}\n"));
    }
    write_all(
        &cfg.output,
        vec![
            ("archive.csv", archive_csv(&header, &run.archive)),
            ("correlations.csv", analysis.correlation_csv(&header)),
            ("ler_decomposition.csv", analysis.decomposition_csv(&header)),
            ("density.csv", analysis.density_csv(&header)),
            ("hypervolume.csv", hv),
        ],
    )
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let site = prepare(cfg)?;
    let crops = cfg.sweep_crops()?;
    let table = sweep(&site, &crops, cfg.sweep.variable, &cfg.sweep.values()?, cfg.design)?;
    let header = cfg.header(cfg.optimizer.seed);
    let mut files = vec![("sweep.csv", table.csv(&header))];
    if cfg.sweep.variable == SweepVariable::Distance {
        let mut s = format!("{header}\ncrop,crossover_m\n");
        for (k, name) in table.crops.iter().enumerate() {
            match table.crossover(k) {
                Some(v) => s.push_str(&format!("{name},{v:.6}\n")),
                None => s.push_str(&format!("{name},none\n")),
            }
        }
        files.push(("crossover.csv", s));
    }
    write_all(&cfg.output, files)
}
