//! Seeded synthetic weather year and horizon profile.
//!
//! The year combines a clear-sky irradiance model with persistent
//! stochastic cloud attenuation, a seasonal temperature cycle with diurnal
//! swing and intermittent rainfall. It is a stand-in for measured site data,
//! not a reproduction of any particular year.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, FixedOffset, TimeZone, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::irradiance::diffuse_fraction_ghi;
use crate::solar::{solar_position, Site};
use crate::weather::{write_horizon, write_weather, HorizonProfile, WeatherSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleYearOptions {
    pub seed: u64,
    pub year: i32,
    pub site: Site,
    pub utc_offset_hours: i32,
}

impl Default for SampleYearOptions {
    fn default() -> Self {
        Self {
            seed: 5955,
            year: 2019,
            site: Site::new(59.5549, 16.7585, 20.0),
            utc_offset_hours: 1,
        }
    }
}

/// Haurwitz clear-sky global horizontal irradiance, W/m².
pub fn clear_sky_ghi(altitude: f64) -> f64 {
    let s = altitude.to_radians().sin();
    if s <= 0.0 {
        0.0
    } else {
        1098.0 * s * (-0.057 / s).exp()
    }
}

fn seasonal_phase(doy: f64) -> f64 {
    // 0 at the end of January, 1 in late July.
    0.5 * (1.0 - (TAU * (doy - 20.0) / 365.0).cos())
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Generates one hour-ending weather year with dhi and precipitation.
pub fn sample_year(opts: &SampleYearOptions) -> Result<WeatherSeries> {
    let tz = FixedOffset::east_opt(opts.utc_offset_hours * 3600)
        .ok_or_else(|| Error::Config(format!("invalid UTC offset {}", opts.utc_offset_hours)))?;
    let start = tz
        .with_ymd_and_hms(opts.year, 1, 1, 1, 0, 0)
        .single()
        .ok_or_else(|| Error::Config(format!("invalid year {}", opts.year)))?;
    let end = tz
        .with_ymd_and_hms(opts.year + 1, 1, 1, 0, 0, 0)
        .single()
        .ok_or_else(|| Error::Config(format!("invalid year {}", opts.year)))?;
    let hours = (end - start).num_hours() as usize + 1;
    let days = hours / 24;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let rain = Exp::new(1.0 / 4.0).expect("positive rate");

    struct Day {
        cloud: f64,
        t_mean: f64,
        t_range: f64,
        rain_mm: f64,
        rain_start: usize,
        rain_hours: usize,
    }
    let mut day_state = Vec::with_capacity(days);
    let (mut z_cloud, mut z_temp) = (0.0f64, 0.0f64);
    for d in 0..days {
        let doy = d as f64 + 1.0;
        let season = seasonal_phase(doy);
        z_cloud = 0.55 * z_cloud + 0.835 * unit.sample(&mut rng);
        z_temp = 0.75 * z_temp + 0.66 * unit.sample(&mut rng);
        let logit_mean = 0.2 + 1.5 * season;
        let cloud = 1.0 / (1.0 + (-(logit_mean + 1.35 * z_cloud)).exp());
        let t_mean = 7.0 - 10.5 * (TAU * (doy - 20.0) / 365.0).cos()
            + 2.2 * z_temp
            + 2.5 * (season - 0.5) * (cloud - 0.55);
        let t_range = (2.5 + 10.0 * cloud) * (0.4 + 0.6 * season);
        let p_wet = 0.1 + 0.55 * (1.0 - cloud) + 0.15 * season;
        let wet = rng.random::<f64>() < p_wet;
        let rain_mm = if wet {
            round_to(rain.sample(&mut rng) * (0.6 + 1.6 * season), 0.1)
        } else {
            0.0
        };
        let rain_hours = rng.random_range(2..10usize);
        let rain_start = rng.random_range(0..24 - rain_hours);
        day_state.push(Day {
            cloud,
            t_mean,
            t_range,
            rain_mm,
            rain_start,
            rain_hours,
        });
    }

    let mut times = Vec::with_capacity(hours);
    let mut ghi = Vec::with_capacity(hours);
    let mut dhi = Vec::with_capacity(hours);
    let mut t_air = Vec::with_capacity(hours);
    let mut precip = Vec::with_capacity(hours);
    for h in 0..hours {
        let t = start + Duration::hours(h as i64);
        let mid = t - Duration::minutes(30);
        let d = (mid.ordinal0() as usize).min(days - 1);
        let day = &day_state[d];
        let sun = solar_position(&mid, &opts.site);
        let hour_of_day = mid.hour() as f64 + mid.minute() as f64 / 60.0;

        let kc = (day.cloud * (1.0 + 0.12 * unit.sample(&mut rng))).clamp(0.03, 1.02);
        let g = round_to(kc * clear_sky_ghi(sun.altitude), 0.1);
        let dfrac = diffuse_fraction_ghi(g, sun, mid.ordinal() as f64);
        let dh = round_to(dfrac, 0.1).min(g);

        let temp = day.t_mean
            + 0.5 * day.t_range * (TAU * (hour_of_day - 15.0) / 24.0).cos()
            + 0.25 * unit.sample(&mut rng);

        let local_hour = mid.hour() as usize;
        let p = if day.rain_mm > 0.0
            && local_hour >= day.rain_start
            && local_hour < day.rain_start + day.rain_hours
        {
            round_to(day.rain_mm / day.rain_hours as f64, 0.01)
        } else {
            0.0
        };

        times.push(t);
        ghi.push(g);
        dhi.push(Some(dh));
        t_air.push(round_to(temp, 0.01));
        precip.push(Some(p));
    }
    let par = vec![None; hours];
    WeatherSeries::new(opts.site, times, ghi, dhi, par, t_air, precip)
}

/// Gently undulating far horizon sampled every 7.5° of compass azimuth.
pub fn sample_horizon() -> HorizonProfile {
    let samples = (0..48)
        .map(|k| {
            let az = k as f64 * 7.5;
            let a = az.to_radians();
            let el = 2.2 + 1.1 * (a + 0.6).sin() + 0.6 * (3.0 * a + 1.3).sin() + 0.3 * (PI * az / 45.0).cos();
            (az, round_to(el.max(0.0), 0.1))
        })
        .collect();
    HorizonProfile::new(samples).expect("valid synthetic horizon")
}

pub const SAMPLE_YEAR_FILE: &str = "sample_year_5955N.csv";
pub const SAMPLE_HORIZON_FILE: &str = "horizon_5955N.csv";

fn prepend(path: &Path, comment: &str) -> Result<()> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, format!("{comment}{body}")).map_err(|e| Error::io(path, e))
}

/// Writes the default sample year and horizon into `dir`, returning their
/// paths.
pub fn write_sample_data(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let opts = SampleYearOptions::default();
    let weather = dir.join(SAMPLE_YEAR_FILE);
    let horizon = dir.join(SAMPLE_HORIZON_FILE);
    write_weather(&weather, &sample_year(&opts)?)?;
    prepend(
        &weather,
        &format!(
            "# Synthetic hourly weather year, seed {}, {:.4}N {:.4}E, UTC{:+03}:00, hour-ending stamps.\n\
             # Clear-sky model with stochastic cloud attenuation; not measured data.\n",
            opts.seed, opts.site.latitude, opts.site.longitude, opts.utc_offset_hours
        ),
    )?;
    write_horizon(&horizon, &sample_horizon())?;
    prepend(&horizon, "# Synthetic far-horizon profile, compass azimuth (0 = north).\n")?;
    Ok((weather, horizon))
}
