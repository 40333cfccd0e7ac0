//! Acceptance criteria, one line of output each.
//!
//! Runs on the bundled sample year through `config/example.toml`. Exits
//! nonzero when any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use agrivoltaic::cli::{cmd_sweep, prepare};
use agrivoltaic::config::RunConfig;
use agrivoltaic::crop::{biomass_increment, simulate_season, CropParams, CropWeather, MonthDay, SoilParams};
use agrivoltaic::optimizer::{
    analyze, archive_csv, dominates, grid_search, optimize, DecisionVector, OptimizationRun, OptimizerConfig,
};
use agrivoltaic::pipeline::{Objectives, ProfileCache, SiteYear};
use agrivoltaic::pv::{power_std, ModuleDatasheet, ModuleModel};
use agrivoltaic::shading::{beam_shading, diffuse_shading, SceneConfig, ShadeLookup, ShadingMatrix, Target};
use agrivoltaic::sky::{cell_center, SkyRadianceField, DOME_CELLS};
use agrivoltaic::solar::{direction_vector, extraterrestrial_daily, SolarPosition};
use agrivoltaic::weather::{DailyAggregate, HorizonProfile};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/example.toml")
}

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn shading_matrix_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let flat = HorizonProfile::flat();
    let mut errors = Vec::new();
    let mut pairs = Vec::new();
    for (az, d) in [(-90.0, 10.0), (-40.0, 5.0), (-150.0, 17.0)] {
        let scene = SceneConfig::default().with_design(az, d);
        for target in [Target::Ground, Target::PanelFront, Target::PanelRear] {
            let m = ShadingMatrix::build(&scene, target, &flat);
            for _ in 0..1000 {
                let pos = SolarPosition::new(rng.random_range(0.5..89.5), rng.random_range(-179.9..180.0));
                let direct = beam_shading(&scene, &direction_vector(pos.altitude, pos.azimuth), target);
                let ShadeLookup::Value(looked) = m.lookup(&pos) else {
                    return Err("flat horizon lookup reported a masked cell".into());
                };
                errors.push((looked - direct).abs());
                pairs.push((direct, looked));
            }
        }
    }
    let mae = errors.iter().sum::<f64>() / errors.len() as f64;
    let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let ss_tot: f64 = pairs.iter().map(|p| (p.0 - mean).powi(2)).sum();
    let ss_res: f64 = pairs.iter().map(|p| (p.0 - p.1).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let t = start.elapsed();
    Ok((
        mae < 0.01 && r2 > 0.99 && t < Duration::from_secs(60),
        format!("{} sun positions, MAE {mae:.5}, R² {r2:.5}, {:.1} s", pairs.len(), t.as_secs_f64()),
    ))
}

fn diffuse_shading_limits() -> Outcome {
    let none = vec![false; DOME_CELLS];
    let zeros = ShadingMatrix::from_values(Target::Ground, vec![0.0; DOME_CELLS], none.clone()).map_err(|e| e.to_string())?;
    let ones = ShadingMatrix::from_values(Target::Ground, vec![1.0; DOME_CELLS], none.clone()).map_err(|e| e.to_string())?;
    let half_values = (0..DOME_CELLS).map(|c| if cell_center(c).1 < 0.0 { 1.0 } else { 0.0 }).collect();
    let half = ShadingMatrix::from_values(Target::Ground, half_values, none).map_err(|e| e.to_string())?;
    let iso = SkyRadianceField::isotropic(100.0);
    let f = |m: &ShadingMatrix, tilt| diffuse_shading(m, &iso, tilt, 0.0).map_err(|e| e.to_string());
    let (z, o, h) = (f(&zeros, 0.0)?, f(&ones, 0.0)?, f(&half, 0.0)?);
    let (zv, ov) = (f(&zeros, 90.0)?, f(&ones, 90.0)?);
    Ok((
        z == 0.0 && zv == 0.0 && o == 1.0 && ov == 1.0 && (h - 0.5).abs() <= 0.01,
        format!("all-clear {z}, all-shaded {o}, isotropic half dome {h:.5}"),
    ))
}

fn datasheet_closure() -> Outcome {
    let sheet = ModuleDatasheet::default();
    let model = ModuleModel::fit(&sheet).map_err(|e| e.to_string())?;
    let (_, _, p_mp) = model.reference.max_power_point();
    let i0 = model.reference.current(0.0);
    let i_oc = model.reference.current(49.5);
    Ok((
        relative(p_mp, 380.0) <= 0.01 && relative(i0, 9.93) <= 0.005 && i_oc.abs() <= 0.005 * 9.93,
        format!("P_mp {p_mp:.3} W, I(0 V) {i0:.4} A, I(49.5 V) {i_oc:.2e} A"),
    ))
}

/// Day-by-day season arithmetic written independently of the library.
fn season_oracle(p: &CropParams, days: &[DailyAggregate], lat: f64) -> f64 {
    let point = |e: f64| (e.floor() / 100.0, ((e - e.floor()) * 100.0).round() / 100.0);
    let ((x1, y1), (x2, y2)) = (point(p.lai_curve_point_1), point(p.lai_curve_point_2));
    let z = |x: f64, y: f64| (x / y - x).ln();
    let l2 = (z(x1, y1) - z(x2, y2)) / (x2 - x1);
    let l1 = z(x1, y1) + l2 * x1;
    let shape = |h: f64| if h <= 0.0 { 0.0 } else { h / (h + (l1 - l2 * h).exp()) };
    let soil = SoilParams::default();
    let wp = soil.wilting_point_content * soil.rooting_depth * 1000.0;
    let fc = wp + soil.available_water_capacity * soil.rooting_depth;
    let taw = fc - wp;
    let raw = soil.depletion_fraction * taw;
    let (mut storage, mut heat, mut biomass) = (fc, 0.0, 0.0);
    let mut late_stress = Vec::new();
    for d in days {
        heat += ((d.t_max + d.t_min) / 2.0 - p.t_base).max(0.0);
        let hui = (heat / p.potential_heat_units).min(1.0);
        let lai = if hui <= p.decline_start_fraction {
            p.lai_max * shape(hui)
        } else {
            p.lai_max
                * shape(p.decline_start_fraction)
                * ((1.0 - hui) / (1.0 - p.decline_start_fraction)).powf(p.lai_decline_exponent)
        };
        let et0 = 0.0023 * extraterrestrial_daily(&d.date, lat) / 2.45 * (d.t_mean + 17.8) * (d.t_max - d.t_min).sqrt();
        storage = (storage + d.precipitation).min(fc);
        let depletion = fc - storage;
        let ks = if depletion <= raw { 1.0 } else { ((taw - depletion) / (taw - raw)).max(0.0) };
        storage = (storage - ks * (0.3 + 0.85 * (1.0 - (-0.65 * lai).exp())) * et0).max(wp);
        let span = p.t_opt - p.t_base;
        let mirrored = if d.t_mean > p.t_opt { 2.0 * p.t_opt - d.t_mean } else { d.t_mean };
        let ts = if mirrored <= p.t_base { 0.0 } else { (PI / 2.0 * (mirrored - p.t_base) / span).sin() };
        biomass += p.biomass_energy_ratio * d.par_daily * (1.0 - (-0.65 * lai).exp()) * ks.min(ts);
        if hui > p.decline_start_fraction {
            late_stress.push(ks);
        }
    }
    let ws = if late_stress.is_empty() { 1.0 } else { late_stress.iter().sum::<f64>() / late_stress.len() as f64 };
    p.harvest_index * (1.0 - p.water_stress_yield_factor * (1.0 - ws)) * biomass * 0.001
}

fn season_oracle_equivalence() -> Outcome {
    let mut p = CropParams::oat();
    p.sowing = MonthDay::new(6, 1).map_err(|e| e.to_string())?;
    p.harvest = MonthDay::new(6, 10).map_err(|e| e.to_string())?;
    p.potential_heat_units = 140.0;
    let start = NaiveDate::from_ymd_opt(2019, 6, 1).expect("valid date");
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let days: Vec<DailyAggregate> = (0..10)
            .map(|k| {
                let t_min = rng.random_range(2.0..14.0);
                let t_max = t_min + rng.random_range(3.0..14.0);
                DailyAggregate {
                    date: start + chrono::Days::new(k),
                    t_max,
                    t_min,
                    t_mean: t_min + (t_max - t_min) * rng.random_range(0.3..0.7),
                    precipitation: if rng.random::<f64>() < 0.3 { rng.random_range(0.0..15.0) } else { 0.0 },
                    par_daily: rng.random_range(2.0..12.0),
                }
            })
            .collect();
        let par: Vec<f64> = days.iter().map(|d| d.par_daily).collect();
        let w = CropWeather::from_days(59.55, days.clone());
        let got = simulate_season(&p, &SoilParams::default(), &w, &par).map_err(|e| e.to_string())?;
        let want = season_oracle(&p, &days, 59.55);
        if !(want > 0.0) {
            return Err(format!("degenerate oracle season for seed {seed}"));
        }
        worst = worst.max(relative(got.yield_t_ha, want));
    }
    let single_day = 0.42 * 0.001 * biomass_increment(35.0, 10.0, 5.0, 1.0);
    Ok((
        worst <= 1e-9 && (single_day - 0.1413).abs() < 5e-5,
        format!("20 ten-day seasons, worst relative gap {worst:.2e}; worked day {single_day:.4} t/ha"),
    ))
}

struct SweepOutputs {
    rows: Vec<Vec<String>>,
    columns: Vec<String>,
    crossovers: Vec<(String, Option<f64>)>,
    elapsed: Duration,
}

fn run_sweep(cfg: &RunConfig) -> Result<SweepOutputs, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = cfg.clone();
    cfg.output = dir.path().to_path_buf();
    cmd_sweep(&cfg).map_err(|e| e.to_string())?;
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).map_err(|e| e.to_string());
    let table: Vec<Vec<String>> = read("sweep.csv")?
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let crossovers = read("crossover.csv")?
        .lines()
        .skip(2)
        .map(|l| {
            let (name, v) = l.split_once(',').unwrap_or((l, "none"));
            (name.to_string(), v.parse().ok())
        })
        .collect();
    Ok(SweepOutputs {
        columns: table[0].clone(),
        rows: table[1..].to_vec(),
        crossovers,
        elapsed: start.elapsed(),
    })
}

fn yield_halving(s: &SweepOutputs) -> Outcome {
    let value = |row: &[String], col: &str| -> Result<f64, String> {
        let k = s.columns.iter().position(|c| c == col).ok_or(format!("missing column {col}"))?;
        row[k].parse::<f64>().map_err(|e| e.to_string())
    };
    let at = |d: f64| s.rows.iter().find(|r| r[0].parse::<f64>().ok() == Some(d)).ok_or(format!("no sweep row at {d} m"));
    let (r5, r20) = (at(5.0)?, at(20.0)?);
    let mut ok = s.elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for crop in ["oat", "potato"] {
        let col = format!("yield_{crop}");
        let ratio = value(r5, &col)? / value(r20, &col)?;
        ok &= (0.40..=0.60).contains(&ratio);
        parts.push(format!("{crop} {ratio:.3}"));
    }
    Ok((ok, format!("yield(5 m)/yield(20 m): {} (band [0.40, 0.60]), {:.0} s", parts.join(", "), s.elapsed.as_secs_f64())))
}

fn crossover_band(s: &SweepOutputs) -> Outcome {
    let mut ok = s.crossovers.len() == 2;
    let mut parts = Vec::new();
    for (crop, v) in &s.crossovers {
        ok &= v.is_some_and(|v| (7.0..=11.0).contains(&v));
        parts.push(match v {
            Some(v) => format!("{crop} {v:.2} m"),
            None => format!("{crop} none"),
        });
    }
    Ok((ok, format!("crop/PV term crossover: {} (band [7, 11] m)", parts.join(", "))))
}

fn ler_band(run: &OptimizationRun) -> Outcome {
    let lers: Vec<f64> = run.archive.iter().map(|s| s.objectives.ler).collect();
    let min = lers.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        !lers.is_empty() && min > 1.0 && max > 1.2,
        format!("{} archive members, LER min {min:.3}, max {max:.3}", lers.len()),
    ))
}

fn correlation_signs(run: &OptimizationRun) -> Outcome {
    let a = analyze(&run.archive).map_err(|e| e.to_string())?;
    let get = |x, y| a.correlation(x, y).ok_or(format!("corr({x}, {y}) undefined"));
    let (de, ds, dl, al) = (
        get("distance", "energy")?,
        get("distance", "std")?,
        get("distance", "ler")?,
        get("azimuth", "ler")?,
    );
    Ok((
        de > 0.9 && ds > 0.9 && dl < -0.5 && al.abs() < dl.abs(),
        format!("corr(d, energy) {de:.3}, corr(d, STD) {ds:.3}, corr(d, LER) {dl:.3}, corr(azimuth, LER) {al:.3}"),
    ))
}

fn azimuth_ordering(site: &SiteYear, crop: &CropParams) -> Outcome {
    let e = |az| {
        site.evaluate_exact(&DecisionVector { azimuth: az, row_distance: 10.0 }, crop)
            .map(|o| o.energy_kwh)
            .map_err(|e| e.to_string())
    };
    let (e40, e90) = (e(-40.0)?, e(-90.0)?);
    Ok((
        e40 >= e90,
        format!("annual energy at d = 10 m: -40° {:.0} kWh, -90° {:.0} kWh", e40, e90),
    ))
}

fn optimizer_soundness(
    site: &SiteYear,
    cfg: &RunConfig,
    run: &OptimizationRun,
    elapsed: Duration,
) -> Outcome {
    let start = Instant::now();
    let minimized = |o: &Objectives| [-o.ler, o.std_kw, -o.energy_kwh];
    let members: Vec<[f64; 3]> = run.archive.iter().map(|s| minimized(&s.objectives)).collect();
    let mutually = members.iter().all(|a| members.iter().all(|b| !dominates(a, b)));

    let cache = ProfileCache::new(cfg.optimizer.azimuth_bucket, cfg.optimizer.distance_bucket, 256)
        .map_err(|e| e.to_string())?;
    let grid = grid_search(site, &cfg.crop, 16, &cache).map_err(|e| e.to_string())?;
    let mut violations = 0;
    for m in &members {
        for (_, o) in &grid {
            let g = minimized(o);
            let beyond = g.iter().zip(m).any(|(gv, mv)| (mv - gv) / mv.abs() > 0.01);
            if dominates(&g, m) && beyond {
                violations += 1;
            }
        }
    }

    let other = OptimizerConfig {
        workers: if cfg.optimizer.workers == 3 { 2 } else { 3 },
        ..cfg.optimizer.clone()
    };
    let rerun = optimize(site, &cfg.crop, &other).map_err(|e| e.to_string())?;
    let identical = archive_csv("", &run.archive) == archive_csv("", &rerun.archive);
    let total = elapsed + start.elapsed();
    Ok((
        mutually && violations == 0 && identical && total < Duration::from_secs(1800),
        format!(
            "mutually non-dominated {mutually}, grid dominations beyond 1% {violations}, identical with {} workers {identical}, {:.0} s",
            other.workers,
            total.as_secs_f64()
        ),
    ))
}

fn std_exactness() -> Outcome {
    let two = power_std(&[0.0, 2.0]).map_err(|e| e.to_string())?;
    let flat = power_std(&[3.7; 50]).map_err(|e| e.to_string())?;
    let series: Vec<f64> = (0..100).map(|k| (k as f64 * 0.37).sin().abs() * 12.0).collect();
    let base = power_std(&series).map_err(|e| e.to_string())?;
    let scaled: Vec<f64> = series.iter().map(|p| p * 4.5).collect();
    let s = power_std(&scaled).map_err(|e| e.to_string())?;
    Ok((
        (two - 2f64.sqrt()).abs() < 1e-12 && flat == 0.0 && relative(s, 4.5 * base) < 1e-12,
        format!("STD{{0, 2}} {two:.12}, constant {flat}, scaling ratio {:.12}", s / base),
    ))
}

fn report(id: usize, name: &str, outcome: Outcome) -> bool {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report(1, "shading-matrix fidelity", shading_matrix_fidelity());
    all &= report(2, "diffuse shading limits", diffuse_shading_limits());
    all &= report(3, "single-diode datasheet closure", datasheet_closure());
    all &= report(4, "season oracle equivalence", season_oracle_equivalence());

    let cfg = match RunConfig::load(&config_path()) {
        Ok(c) => c,
        Err(e) => {
            println!("cannot load {}: {e}", config_path().display());
            return ExitCode::FAILURE;
        }
    };
    let sweep = run_sweep(&cfg);
    match &sweep {
        Ok(s) => all &= report(5, "yield halving trend", yield_halving(s)),
        Err(e) => all &= report(5, "yield halving trend", Err(e.clone())),
    }

    let started = Instant::now();
    let site = match prepare(&cfg) {
        Ok(s) => s,
        Err(e) => {
            println!("cannot prepare the sample year: {e}");
            return ExitCode::FAILURE;
        }
    };
    let run = optimize(&site, &cfg.crop, &cfg.optimizer);
    let elapsed = started.elapsed();
    match &run {
        Ok(r) => {
            all &= report(6, "LER band", ler_band(r));
            all &= report(7, "correlation signs", correlation_signs(r));
        }
        Err(e) => {
            all &= report(6, "LER band", Err(e.to_string()));
            all &= report(7, "correlation signs", Err(e.to_string()));
        }
    }
    all &= report(8, "azimuth ordering", azimuth_ordering(&site, &cfg.crop));
    match &sweep {
        Ok(s) => all &= report(9, "optimal-distance band", crossover_band(s)),
        Err(e) => all &= report(9, "optimal-distance band", Err(e.clone())),
    }
    match &run {
        Ok(r) => all &= report(10, "optimizer soundness", optimizer_soundness(&site, &cfg, r, elapsed)),
        Err(e) => all &= report(10, "optimizer soundness", Err(e.to_string())),
    }
    all &= report(11, "STD exactness", std_exactness());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
