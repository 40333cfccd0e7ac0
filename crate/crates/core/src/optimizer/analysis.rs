//! Post-processing of archives and one-dimensional design sweeps.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DecisionVector, ParetoSolution, AZIMUTH_BOUNDS, DISTANCE_BOUNDS};
use crate::crop::CropParams;
use crate::error::{Error, Result};
use crate::pipeline::{Objectives, ProfileCache, SiteYear};

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Numerical(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Numerical(format!("need at least 3 samples, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Columns that take part in the correlation table.
pub const ANALYSIS_VARIABLES: [&str; 5] = ["azimuth", "distance", "ler", "std", "energy"];

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub x: &'static str,
    pub y: &'static str,
    /// `None` when undefined (too few members or a constant column).
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityBin {
    pub variable: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub fraction: f64,
}

/// Plot-ready tables derived from an archive.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub correlations: Vec<Correlation>,
    pub density: Vec<DensityBin>,
    pub solutions: Vec<ParetoSolution>,
}

fn column(archive: &[ParetoSolution], name: &str) -> Vec<f64> {
    archive
        .iter()
        .map(|s| match name {
            "azimuth" => s.decision.azimuth,
            "distance" => s.decision.row_distance,
            "ler" => s.objectives.ler,
            "std" => s.objectives.std_kw,
            _ => s.objectives.energy_kwh,
        })
        .collect()
}

fn bins(variable: &'static str, values: &[f64], (lo, hi): (f64, f64), count: usize) -> Vec<DensityBin> {
    let width = (hi - lo) / count as f64;
    let mut counts = vec![0usize; count];
    for v in values {
        let k = (((v - lo) / width).floor().max(0.0) as usize).min(count - 1);
        counts[k] += 1;
    }
    let total = values.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| DensityBin {
            variable,
            lower: lo + k as f64 * width,
            upper: lo + (k + 1) as f64 * width,
            count: c,
            fraction: c as f64 / total,
        })
        .collect()
}

/// Correlations between every pair of decision and objective columns, and
/// decision-variable histograms (10° and 1 m bins).
pub fn analyze(archive: &[ParetoSolution]) -> Result<Analysis> {
    if archive.is_empty() {
        return Err(Error::Inconsistent("cannot analyze an empty archive".into()));
    }
    let mut correlations = Vec::new();
    for (i, x) in ANALYSIS_VARIABLES.iter().enumerate() {
        for y in &ANALYSIS_VARIABLES[i + 1..] {
            correlations.push(Correlation {
                x,
                y,
                pearson: pearson(&column(archive, x), &column(archive, y)).ok(),
            });
        }
    }
    let mut density = bins("azimuth", &column(archive, "azimuth"), AZIMUTH_BOUNDS, 18);
    density.extend(bins("distance", &column(archive, "distance"), DISTANCE_BOUNDS, 15));
    Ok(Analysis {
        correlations,
        density,
        solutions: archive.to_vec(),
    })
}

impl Analysis {
    pub fn correlation(&self, x: &str, y: &str) -> Option<f64> {
        self.correlations
            .iter()
            .find(|c| (c.x == x && c.y == y) || (c.x == y && c.y == x))
            .and_then(|c| c.pearson)
    }

    /// Whether every coefficient could be computed.
    pub fn correlations_defined(&self) -> bool {
        self.correlations.iter().all(|c| c.pearson.is_some())
    }

    pub fn correlation_csv(&self, header: &str) -> String {
        let mut s = format!("{header}\nx,y,pearson\n");
        for c in &self.correlations {
            match c.pearson {
                Some(r) => writeln!(s, "{},{},{r:.6}", c.x, c.y),
                None => writeln!(s, "{},{},undefined", c.x, c.y),
            }
            .expect("write to string");
        }
        s
    }

    pub fn decomposition_csv(&self, header: &str) -> String {
        let mut s = format!("{header}\nazimuth_deg,distance_m,ler,ler_crop,ler_pv\n");
        for p in &self.solutions {
            let o = &p.objectives;
            writeln!(
                s,
                "{:.6},{:.6},{:.9},{:.9},{:.9}",
                p.decision.azimuth, p.decision.row_distance, o.ler, o.ler_crop, o.ler_pv
            )
            .expect("write to string");
        }
        s
    }

    pub fn density_csv(&self, header: &str) -> String {
        let mut s = format!("{header}\nvariable,bin_lower,bin_upper,count,fraction\n");
        for b in &self.density {
            writeln!(s, "{},{},{},{},{:.6}", b.variable, b.lower, b.upper, b.count, b.fraction).expect("write to string");
        }
        s
    }
}

/// Evaluates an `n × n` grid spanning the decision box, endpoints included.
pub fn grid_search(
    site: &SiteYear,
    crop: &CropParams,
    n: usize,
    cache: &ProfileCache,
) -> Result<Vec<(DecisionVector, Objectives)>> {
    if n < 2 {
        return Err(Error::Config("grid needs at least 2 points per axis".into()));
    }
    let step = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let designs: Vec<DecisionVector> = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| DecisionVector {
                azimuth: step(AZIMUTH_BOUNDS, i),
                row_distance: step(DISTANCE_BOUNDS, j),
            })
        })
        .collect();
    designs
        .par_iter()
        .map(|d| Ok((*d, site.evaluate(d, crop, cache)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Azimuth,
    Distance,
}

/// Per-crop columns of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropPoint {
    pub yield_t_ha: f64,
    pub ler_crop: f64,
    pub ler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub specific_pv_kwh_kwp: f64,
    pub energy_density: f64,
    pub ler_pv: f64,
    /// In the order of [`SweepTable::crops`].
    pub crops: Vec<CropPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub crops: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Varies one decision variable with the other held at `fixed`.
pub fn sweep(
    site: &SiteYear,
    crops: &[CropParams],
    variable: SweepVariable,
    values: &[f64],
    fixed: DecisionVector,
) -> Result<SweepTable> {
    if crops.is_empty() || values.is_empty() {
        return Err(Error::Config("sweep needs at least one crop and one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let d = match variable {
            SweepVariable::Azimuth => DecisionVector::new(value, fixed.row_distance)?,
            SweepVariable::Distance => DecisionVector::new(fixed.azimuth, value)?,
        };
        let scene = site.scene(&d);
        let profile = site.profile(&scene)?;
        let capacity = scene.total_modules() as f64 * site.plant.module.p_mp / 1000.0;
        let mut row = SweepRow {
            value,
            specific_pv_kwh_kwp: 0.0,
            energy_density: 0.0,
            ler_pv: 0.0,
            crops: Vec::with_capacity(crops.len()),
        };
        for crop in crops {
            let k = site.assess(&scene, crop, &profile)?;
            row.specific_pv_kwh_kwp = if capacity > 0.0 { k.annual_energy / capacity } else { 0.0 };
            row.energy_density = k.energy_density;
            row.ler_pv = k.ler_pv_term;
            row.crops.push(CropPoint {
                yield_t_ha: k.yield_agri,
                ler_crop: k.ler_crop_term,
                ler: k.ler,
            });
        }
        rows.push(row);
    }
    Ok(SweepTable {
        variable,
        crops: crops.iter().map(|c| c.name.clone()).collect(),
        rows,
    })
}

impl SweepTable {
    /// First value where the crop term overtakes or falls below the PV term,
    /// linearly interpolated between sweep rows.
    pub fn crossover(&self, crop: usize) -> Option<f64> {
        let gap = |r: &SweepRow| r.crops[crop].ler_crop - r.ler_pv;
        for w in self.rows.windows(2) {
            let (g0, g1) = (gap(&w[0]), gap(&w[1]));
            if g0 == 0.0 {
                return Some(w[0].value);
            }
            if g0.signum() != g1.signum() {
                return Some(w[0].value + (w[1].value - w[0].value) * g0 / (g0 - g1));
            }
        }
        self.rows.last().filter(|r| gap(r) == 0.0).map(|r| r.value)
    }

    pub fn csv(&self, header: &str) -> String {
        let mut s = format!("{header}\nvalue");
        for c in &self.crops {
            write!(s, ",yield_{c}").expect("write to string");
        }
        s.push_str(",specific_pv_kwh_kwp,energy_density_kwh_m2,ler_pv");
        for c in &self.crops {
            write!(s, ",ler_crop_{c}").expect("write to string");
        }
        for c in &self.crops {
            write!(s, ",ler_{c}").expect("write to string");
        }
        s.push('\n');
        for r in &self.rows {
            write!(s, "{}", r.value).expect("write to string");
            for p in &r.crops {
                write!(s, ",{:.9}", p.yield_t_ha).expect("write to string");
            }
            write!(s, ",{:.6},{:.6},{:.9}", r.specific_pv_kwh_kwp, r.energy_density, r.ler_pv).expect("write to string");
            for p in &r.crops {
                write!(s, ",{:.9}", p.ler_crop).expect("write to string");
            }
            for p in &r.crops {
                write!(s, ",{:.9}", p.ler).expect("write to string");
            }
            s.push('\n');
        }
        s
    }
}

/// Writes text to a file, mapping failures to I/O errors.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
