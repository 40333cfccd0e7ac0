//! EPIC-style daily crop growth driven by shade-reduced PAR.
//!
//! Each simulated day accumulates heat units, places the crop on its
//! leaf-area curve, updates a root-zone water bucket and converts
//! intercepted PAR into biomass. The harvest index applied at maturity is
//! reduced by late-season water stress.

mod growth;
mod params;
mod soil;

use std::path::Path;

use chrono::{Datelike, NaiveDate};

pub use growth::{
    adjusted_harvest_index, biomass_increment, crop_coefficient, crop_par, et0_hargreaves,
    heat_unit_index, heat_units, lai_curve, temperature_stress, LaiCurve,
};
pub use params::{decode_curve_point, solve_lai_shape, CropParams, MonthDay};
pub use soil::{water_stress, SoilBucket, SoilParams};

use crate::error::{Error, Result};
use crate::irradiance::ParSplit;
use crate::solar::extraterrestrial_daily;
use crate::weather::{DailyAggregate, WeatherSeries};

/// Daily weather inputs with the hour-to-day mapping of the source series.
#[derive(Debug, Clone)]
pub struct CropWeather {
    pub latitude: f64,
    pub days: Vec<DailyAggregate>,
    /// Index into `days` for every hour of the source series.
    pub day_of_hour: Vec<usize>,
}

impl CropWeather {
    pub fn from_series(weather: &WeatherSeries) -> Self {
        let days = weather.daily_aggregates();
        let mut day_of_hour = Vec::with_capacity(weather.len());
        let mut k = 0;
        for i in 0..weather.len() {
            let date = weather.civil_date(i);
            while days[k].date < date {
                k += 1;
            }
            day_of_hour.push(k);
        }
        Self {
            latitude: weather.site.latitude,
            days,
            day_of_hour,
        }
    }

    /// Daily weather without hourly detail.
    pub fn from_days(latitude: f64, days: Vec<DailyAggregate>) -> Self {
        Self {
            latitude,
            days,
            day_of_hour: Vec::new(),
        }
    }

    /// Shade-reduced PAR per day, MJ/m². Shading slices are hourly and
    /// aligned with the source series.
    pub fn daily_par(&self, splits: &[ParSplit], shade_beam: &[f64], shade_diffuse: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.days.len()];
        for (h, &d) in self.day_of_hour.iter().enumerate() {
            out[d] += crop_par(&splits[h..h + 1], &shade_beam[h..h + 1], &shade_diffuse[h..h + 1]);
        }
        out
    }

    /// Unshaded PAR per day, MJ/m².
    pub fn open_field_par(&self, splits: &[ParSplit]) -> Vec<f64> {
        let mut out = vec![0.0; self.days.len()];
        for (h, &d) in self.day_of_hour.iter().enumerate() {
            out[d] += (splits[h].par_beam + splits[h].par_diffuse) * 3600.0 / 1e6;
        }
        out
    }

    /// Index range of the growing season in `days`.
    pub fn season(&self, params: &CropParams) -> Result<std::ops::RangeInclusive<usize>> {
        let Some(mid) = self.days.get(self.days.len() / 2) else {
            return Err(Error::Inconsistent("no daily weather for the growing season".into()));
        };
        let year = mid.date.year();
        let find = |md: MonthDay| -> Result<usize> {
            let date = md
                .in_year(year)
                .ok_or_else(|| Error::Config(format!("{md} does not exist in {year}")))?;
            self.days.iter().position(|d| d.date == date).ok_or_else(|| {
                Error::Inconsistent(format!("season date {date} of {} outside the weather data", params.name))
            })
        };
        let start = find(params.sowing)?;
        let end = find(params.harvest)?;
        for w in self.days[start..=end].windows(2) {
            if w[1].date != w[0].date.succ_opt().unwrap_or(w[0].date) {
                return Err(Error::Inconsistent(format!(
                    "daily weather gap between {} and {}",
                    w[0].date, w[1].date
                )));
            }
        }
        Ok(start..=end)
    }
}

/// Component stresses of one day; 1 means unstressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stresses {
    pub water: f64,
    pub temperature: f64,
    pub aeration: f64,
    pub nutrient: f64,
}

impl Stresses {
    /// Growth regulating factor.
    pub fn gamma(&self) -> f64 {
        self.water.min(self.temperature).min(self.aeration).min(self.nutrient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyCropState {
    pub date: NaiveDate,
    pub heat_unit_index: f64,
    pub lai: f64,
    pub stresses: Stresses,
    pub gamma: f64,
    /// MJ/m²
    pub par_tot: f64,
    /// kg/ha
    pub biomass_increment: f64,
    /// mm/day
    pub et0: f64,
    /// mm
    pub soil_storage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonResult {
    pub crop: String,
    pub days: Vec<DailyCropState>,
    /// kg/ha
    pub biomass: f64,
    pub harvest_index: f64,
    /// t/ha
    pub yield_t_ha: f64,
}

impl SeasonResult {
    /// Daily state rows after the given header lines.
    pub fn trace_csv(&self, header: &str) -> String {
        let mut s = String::new();
        for line in header.lines() {
            s.push_str(line);
            s.push('\n');
        }
        s.push_str("date,hui,lai,par_tot_mj_m2,water_stress,temperature_stress,aeration_stress,nutrient_stress,gamma,biomass_kg_ha,et0_mm,soil_storage_mm\n");
        for d in &self.days {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                d.date,
                d.heat_unit_index,
                d.lai,
                d.par_tot,
                d.stresses.water,
                d.stresses.temperature,
                d.stresses.aeration,
                d.stresses.nutrient,
                d.gamma,
                d.biomass_increment,
                d.et0,
                d.soil_storage
            ));
        }
        s
    }

    pub fn write_trace(&self, path: &Path, header: &str) -> Result<()> {
        std::fs::write(path, self.trace_csv(header)).map_err(|e| Error::io(path, e))
    }
}

/// Runs the season on per-day crop PAR aligned with `weather.days`.
pub fn simulate_season(
    params: &CropParams,
    soil: &SoilParams,
    weather: &CropWeather,
    daily_par: &[f64],
) -> Result<SeasonResult> {
    params.validate()?;
    soil.validate()?;
    if daily_par.len() != weather.days.len() {
        return Err(Error::Inconsistent(format!(
            "{} daily PAR values for {} weather days",
            daily_par.len(),
            weather.days.len()
        )));
    }
    let curve = LaiCurve::new(params)?;
    let range = weather.season(params)?;
    let mut bucket = soil.bucket();
    let mut heat = 0.0;
    let mut biomass = 0.0;
    let mut late_water = (0.0, 0usize);
    let mut days = Vec::with_capacity(range.clone().count());
    for k in range {
        let day = &weather.days[k];
        heat += heat_units(day.t_max, day.t_min, params.t_base);
        let hui = (heat / params.potential_heat_units).clamp(0.0, 1.0);
        let lai = curve.lai(hui);
        let ra = extraterrestrial_daily(&day.date, weather.latitude);
        let et0 = et0_hargreaves(day.t_max, day.t_min, day.t_mean, ra);
        let water = bucket.step(day.precipitation, et0, crop_coefficient(lai));
        let stresses = Stresses {
            water,
            temperature: temperature_stress(day.t_mean, params.t_base, params.t_opt),
            aeration: 1.0,
            nutrient: 1.0,
        };
        let gamma = stresses.gamma();
        let inc = biomass_increment(params.biomass_energy_ratio, daily_par[k], lai, gamma);
        biomass += inc;
        if hui > params.decline_start_fraction {
            late_water.0 += water;
            late_water.1 += 1;
        }
        days.push(DailyCropState {
            date: day.date,
            heat_unit_index: hui,
            lai,
            stresses,
            gamma,
            par_tot: daily_par[k],
            biomass_increment: inc,
            et0,
            soil_storage: bucket.current_storage,
        });
    }
    let mean_late_water = if late_water.1 > 0 {
        late_water.0 / late_water.1 as f64
    } else {
        1.0
    };
    let hia = adjusted_harvest_index(params.harvest_index, params.water_stress_yield_factor, mean_late_water);
    Ok(SeasonResult {
        crop: params.name.clone(),
        days,
        biomass,
        harvest_index: hia,
        yield_t_ha: hia * biomass * 0.001,
    })
}

/// Season under hourly ground shading factors.
pub fn simulate_yield(
    params: &CropParams,
    soil: &SoilParams,
    weather: &CropWeather,
    splits: &[ParSplit],
    shade_beam: &[f64],
    shade_diffuse: &[f64],
) -> Result<SeasonResult> {
    let n = weather.day_of_hour.len();
    if splits.len() != n || shade_beam.len() != n || shade_diffuse.len() != n {
        return Err(Error::Inconsistent("hourly inputs do not match the weather series".into()));
    }
    simulate_season(params, soil, weather, &weather.daily_par(splits, shade_beam, shade_diffuse))
}

/// Open-field season without panel shading.
pub fn reference_yield(
    params: &CropParams,
    soil: &SoilParams,
    weather: &CropWeather,
    splits: &[ParSplit],
) -> Result<SeasonResult> {
    if splits.len() != weather.day_of_hour.len() {
        return Err(Error::Inconsistent("hourly inputs do not match the weather series".into()));
    }
    simulate_season(params, soil, weather, &weather.open_field_par(splits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic_days(start: NaiveDate, n: usize, seed: u64) -> Vec<DailyAggregate> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|k| {
                let t_min = 4.0 + 10.0 * next();
                let t_max = t_min + 3.0 + 10.0 * next();
                DailyAggregate {
                    date: start + chrono::Days::new(k as u64),
                    t_max,
                    t_min,
                    t_mean: t_min + (t_max - t_min) * (0.3 + 0.4 * next()),
                    precipitation: if next() < 0.3 { 15.0 * next() } else { 0.0 },
                    par_daily: 2.0 + 10.0 * next(),
                }
            })
            .collect()
    }

    fn ten_day_crop() -> CropParams {
        let mut p = CropParams::oat();
        p.sowing = MonthDay::new(6, 1).unwrap();
        p.harvest = MonthDay::new(6, 10).unwrap();
        p.potential_heat_units = 140.0;
        p
    }

    /// Independent day-by-day evaluation written out longhand.
    fn spreadsheet_oracle(p: &CropParams, days: &[DailyAggregate], lat: f64) -> f64 {
        let x1: f64 = 0.15;
        let y1 = 0.01;
        let x2: f64 = 0.50;
        let y2 = 0.95;
        let z1 = (x1 / y1 - x1).ln();
        let z2 = (x2 / y2 - x2).ln();
        let l2 = (z1 - z2) / (x2 - x1);
        let l1 = z1 + l2 * x1;
        let frac = |h: f64| if h <= 0.0 { 0.0 } else { h / (h + (l1 - l2 * h).exp()) };
        let (fc, wp) = (150.0, 60.0);
        let (taw, raw) = (fc - wp, 0.5 * (fc - wp));
        let mut sw = fc;
        let mut cum = 0.0;
        let mut bio = 0.0;
        let mut late = Vec::new();
        for d in days {
            cum += ((d.t_max + d.t_min) / 2.0 - p.t_base).max(0.0);
            let hui = (cum / p.potential_heat_units).min(1.0);
            let lai = if hui <= p.decline_start_fraction {
                p.lai_max * frac(hui)
            } else {
                p.lai_max * frac(p.decline_start_fraction)
                    * ((1.0 - hui) / (1.0 - p.decline_start_fraction)).powf(p.lai_decline_exponent)
            };
            let ra = crate::solar::extraterrestrial_daily(&d.date, lat);
            let et0 = 0.0023 * ra / 2.45 * (d.t_mean + 17.8) * (d.t_max - d.t_min).sqrt();
            sw = (sw + d.precipitation).min(fc);
            let dr = fc - sw;
            let ks = if dr <= raw { 1.0 } else { ((taw - dr) / (taw - raw)).max(0.0) };
            let kc = 0.3 + 0.85 * (1.0 - (-0.65 * lai).exp());
            sw = (sw - ks * kc * et0).max(wp);
            let ts = if d.t_mean <= p.t_base {
                0.0
            } else if d.t_mean <= p.t_opt {
                (std::f64::consts::PI / 2.0 * (d.t_mean - p.t_base) / (p.t_opt - p.t_base)).sin()
            } else {
                let t = 2.0 * p.t_opt - d.t_mean;
                if t <= p.t_base {
                    0.0
                } else {
                    (std::f64::consts::PI / 2.0 * (t - p.t_base) / (p.t_opt - p.t_base)).sin()
                }
            };
            let g = ks.min(ts);
            bio += p.biomass_energy_ratio * 0.001 * d.par_daily * (1.0 - (-0.65 * lai).exp()) * g;
            if hui > p.decline_start_fraction {
                late.push(ks);
            }
        }
        let mean = if late.is_empty() { 1.0 } else { late.iter().sum::<f64>() / late.len() as f64 };
        p.harvest_index * (1.0 - p.water_stress_yield_factor * (1.0 - mean)) * bio
    }

    #[test]
    fn ten_day_season_matches_oracle() {
        let p = ten_day_crop();
        for seed in 0..20 {
            let days = synthetic_days(NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(), 10, seed);
            let par: Vec<f64> = days.iter().map(|d| d.par_daily).collect();
            let w = CropWeather::from_days(59.55, days.clone());
            let got = simulate_season(&p, &SoilParams::default(), &w, &par).unwrap();
            let want = spreadsheet_oracle(&p, &days, 59.55);
            assert!(((got.yield_t_ha - want) / want).abs() < 1e-9, "seed {seed}: {} vs {want}", got.yield_t_ha);
            for d in &got.days {
                let s = d.stresses;
                assert_eq!(d.gamma, s.water.min(s.temperature).min(s.aeration).min(s.nutrient));
            }
        }
    }

    #[test]
    fn zero_par_and_zero_gamma_give_no_yield() {
        let p = ten_day_crop();
        let days = synthetic_days(NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(), 10, 3);
        let w = CropWeather::from_days(59.55, days.clone());
        let r = simulate_season(&p, &SoilParams::default(), &w, &[0.0; 10]).unwrap();
        assert_eq!(r.yield_t_ha, 0.0);
        let cold: Vec<DailyAggregate> = days
            .iter()
            .map(|d| DailyAggregate { t_max: -1.0, t_min: -5.0, t_mean: -3.0, ..*d })
            .collect();
        let w = CropWeather::from_days(59.55, cold);
        let r = simulate_season(&p, &SoilParams::default(), &w, &[10.0; 10]).unwrap();
        assert_eq!(r.yield_t_ha, 0.0);
    }

    #[test]
    fn season_outside_data_is_an_error() {
        let days = synthetic_days(NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(), 10, 1);
        let w = CropWeather::from_days(59.55, days);
        let r = simulate_season(&CropParams::oat(), &SoilParams::default(), &w, &[1.0; 10]);
        assert!(matches!(r, Err(Error::Inconsistent(_))));
    }

    #[test]
    fn hourly_mapping_sums_to_days() {
        use crate::solar::Site;
        use chrono::{FixedOffset, TimeZone};
        let tz = FixedOffset::east_opt(3600).unwrap();
        let t0 = tz.with_ymd_and_hms(2019, 6, 1, 1, 0, 0).unwrap();
        let n = 72;
        let times: Vec<_> = (0..n).map(|k| t0 + chrono::Duration::hours(k)).collect();
        let ghi: Vec<f64> = (0..n).map(|k| if (6..18).contains(&(k % 24)) { 400.0 } else { 0.0 }).collect();
        let par: Vec<Option<f64>> = ghi.iter().map(|g| Some(0.48 * g)).collect();
        let w = WeatherSeries::new(
            Site::new(59.55, 16.76, 0.0),
            times,
            ghi.clone(),
            vec![None; n as usize],
            par,
            vec![12.0; n as usize],
            vec![None; n as usize],
        )
        .unwrap();
        let cw = CropWeather::from_series(&w);
        assert_eq!(cw.days.len(), 3);
        let splits: Vec<ParSplit> = ghi.iter().map(|g| ParSplit { par_beam: 0.3 * g, par_diffuse: 0.18 * g }).collect();
        let open = cw.open_field_par(&splits);
        for (o, d) in open.iter().zip(&cw.days) {
            assert!((o - d.par_daily).abs() < 1e-9);
        }
        let zeros = vec![0.0; n as usize];
        assert_eq!(cw.daily_par(&splits, &zeros, &zeros), open);
    }

    proptest! {
        #[test]
        fn yield_monotone_in_light(seed in 0u64..500, scale in 1.0f64..3.0) {
            let p = ten_day_crop();
            let days = synthetic_days(NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(), 10, seed);
            let w = CropWeather::from_days(59.55, days.clone());
            let par: Vec<f64> = days.iter().map(|d| d.par_daily).collect();
            let more: Vec<f64> = par.iter().map(|v| v * scale).collect();
            let a = simulate_season(&p, &SoilParams::default(), &w, &par).unwrap();
            let b = simulate_season(&p, &SoilParams::default(), &w, &more).unwrap();
            prop_assert!(b.yield_t_ha >= a.yield_t_ha);
        }

        #[test]
        fn shading_never_helps(seed in 0u64..500, shade in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 10)) {
            let p = ten_day_crop();
            let days = synthetic_days(NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(), 10, seed);
            let w = CropWeather::from_days(59.55, days.clone());
            let open: Vec<f64> = days.iter().map(|d| d.par_daily).collect();
            let shaded: Vec<f64> = open
                .iter()
                .zip(&shade)
                .map(|(v, (sb, sd))| crop_par(&[ParSplit { par_beam: 0.6 * v, par_diffuse: 0.4 * v }], &[*sb], &[*sd]) * 1e6 / 3600.0)
                .collect();
            let a = simulate_season(&p, &SoilParams::default(), &w, &open).unwrap();
            let b = simulate_season(&p, &SoilParams::default(), &w, &shaded).unwrap();
            prop_assert!(b.yield_t_ha <= a.yield_t_ha + 1e-12);
        }
    }
}
