//! Design search over panel azimuth and row distance.

pub mod analysis;
pub mod hypervolume;
pub mod nsga2;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crop::CropParams;
use crate::error::{Error, Result};
use crate::pipeline::{Objectives, ProfileCache, SiteYear};

pub use analysis::{analyze, grid_search, pearson, sweep, Analysis, SweepTable, SweepVariable};
pub use nsga2::{dominates, nsga2, Individual, Nsga2Result, Nsga2Settings};

pub const AZIMUTH_BOUNDS: (f64, f64) = (-180.0, 0.0);
pub const DISTANCE_BOUNDS: (f64, f64) = (5.0, 20.0);

/// Panel azimuth (°, 0 = south, east negative) and row distance (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub azimuth: f64,
    pub row_distance: f64,
}

impl DecisionVector {
    pub fn new(azimuth: f64, row_distance: f64) -> Result<Self> {
        let d = Self { azimuth, row_distance };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = AZIMUTH_BOUNDS;
        let (d0, d1) = DISTANCE_BOUNDS;
        if !(a0..=a1).contains(&self.azimuth) {
            return Err(Error::Config(format!("azimuth {} outside [{a0}, {a1}]", self.azimuth)));
        }
        if !(d0..=d1).contains(&self.row_distance) {
            return Err(Error::Config(format!("row distance {} outside [{d0}, {d1}]", self.row_distance)));
        }
        Ok(())
    }
}

/// Which objectives the search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Maximize LER, minimize STD, maximize annual energy.
    #[default]
    ThreeObjective,
    /// Maximize annual energy only.
    EnergyOnly,
}

impl ObjectiveMode {
    fn minimized(&self, o: &Objectives) -> Vec<f64> {
        match self {
            Self::ThreeObjective => vec![-o.ler, o.std_kw, -o.energy_kwh],
            Self::EnergyOnly => vec![-o.energy_kwh],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// Per-variable; omitted means one over the number of variables.
    pub mutation_probability: Option<f64>,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Parallel evaluations; 0 uses every core.
    pub workers: usize,
    pub objectives: ObjectiveMode,
    /// Shading bucket resolution, degrees of azimuth.
    pub azimuth_bucket: f64,
    /// Shading bucket resolution, metres of row distance.
    pub distance_bucket: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let s = Nsga2Settings::default();
        Self {
            population: s.population,
            generations: s.generations,
            crossover_probability: s.crossover_probability,
            mutation_probability: s.mutation_probability,
            crossover_eta: s.crossover_eta,
            mutation_eta: s.mutation_eta,
            seed: s.seed,
            workers: s.workers,
            objectives: ObjectiveMode::ThreeObjective,
            azimuth_bucket: 1.0,
            distance_bucket: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn settings(&self) -> Nsga2Settings {
        Nsga2Settings {
            population: self.population,
            generations: self.generations,
            crossover_probability: self.crossover_probability,
            crossover_eta: self.crossover_eta,
            mutation_probability: self.mutation_probability,
            mutation_eta: self.mutation_eta,
            seed: self.seed,
            workers: self.workers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()?;
        if !(self.azimuth_bucket > 0.0 && self.azimuth_bucket <= 10.0) {
            return Err(Error::Config(format!(
                "optimizer.azimuth_bucket {} outside (0, 10]",
                self.azimuth_bucket
            )));
        }
        if !(self.distance_bucket > 0.0 && self.distance_bucket <= 1.0) {
            return Err(Error::Config(format!(
                "optimizer.distance_bucket {} outside (0, 1]",
                self.distance_bucket
            )));
        }
        Ok(())
    }

    /// Upper bound on the evaluations of one run.
    pub fn evaluation_budget(&self) -> usize {
        self.population * (self.generations + 1)
    }
}

/// One archive member.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSolution {
    pub decision: DecisionVector,
    pub objectives: Objectives,
    pub generation: usize,
    pub evaluation: usize,
}

/// Archive and convergence trace of a run.
#[derive(Debug, Clone)]
pub struct OptimizationRun {
    /// Sorted by row distance, then azimuth.
    pub archive: Vec<ParetoSolution>,
    pub hypervolume_history: Vec<f64>,
    pub evaluations: usize,
}

/// Searches the design box for the crop on a prepared site year.
pub fn optimize(site: &SiteYear, crop: &CropParams, config: &OptimizerConfig) -> Result<OptimizationRun> {
    config.validate()?;
    crop.validate()?;
    let cache = ProfileCache::new(config.azimuth_bucket, config.distance_bucket, config.evaluation_budget())?;
    let mode = config.objectives;
    let evaluate = |x: &[f64]| -> Result<Objectives> {
        let d = DecisionVector::new(x[0], x[1])?;
        site.evaluate(&d, crop, &cache)
    };
    let lower = [AZIMUTH_BOUNDS.0, DISTANCE_BOUNDS.0];
    let upper = [AZIMUTH_BOUNDS.1, DISTANCE_BOUNDS.1];
    let result = nsga2(&lower, &upper, &config.settings(), |x| Ok(mode.minimized(&evaluate(x)?)))?;
    let mut archive = result
        .archive
        .iter()
        .map(|ind| {
            Ok(ParetoSolution {
                decision: DecisionVector {
                    azimuth: ind.x[0],
                    row_distance: ind.x[1],
                },
                objectives: evaluate(&ind.x)?,
                generation: ind.generation,
                evaluation: ind.evaluation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    archive.sort_by(|a, b| {
        a.decision
            .row_distance
            .total_cmp(&b.decision.row_distance)
            .then(a.decision.azimuth.total_cmp(&b.decision.azimuth))
    });
    Ok(OptimizationRun {
        archive,
        hypervolume_history: result.hypervolume_history,
        evaluations: result.evaluations,
    })
}

pub const ARCHIVE_HEADER: &str = "azimuth_deg,distance_m,ler,ler_crop,ler_pv,std_kw,energy_kwh";

/// Archive rows after the given header lines.
pub fn archive_csv(header: &str, archive: &[ParetoSolution]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(ARCHIVE_HEADER);
    out.push('\n');
    for s in archive {
        let o = &s.objectives;
        out.push_str(&format!(
            "{:.6},{:.6},{:.9},{:.9},{:.9},{:.9},{:.6}\n",
            s.decision.azimuth, s.decision.row_distance, o.ler, o.ler_crop, o.ler_pv, o.std_kw, o.energy_kwh
        ));
    }
    out
}

pub fn write_archive(path: &Path, header: &str, archive: &[ParetoSolution]) -> Result<()> {
    std::fs::write(path, archive_csv(header, archive)).map_err(|e| Error::io(path, e))
}
