//! Solar position, the local solar unit vector, incidence angles and daily
//! extraterrestrial radiation.
//!
//! Azimuths exposed by this crate follow one convention: 0° = South, East
//! negative, West positive, range (-180°, 180°]. The local Cartesian frame has
//! unit vectors along South, East and Zenith.

use chrono::{DateTime, Datelike, TimeZone};
use serde::{Deserialize, Serialize};

/// Geographic location of the site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east.
    pub longitude: f64,
    /// Metres above sea level.
    #[serde(default)]
    pub elevation: f64,
}

impl Site {
    pub fn new(latitude: f64, longitude: f64, elevation: f64) -> Self {
        Self {
            latitude,
            longitude,
            elevation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    /// Apparent altitude above the astronomical horizon, degrees.
    pub altitude: f64,
    /// Degrees, 0 = South, East negative, West positive.
    pub azimuth: f64,
    /// False when the sun is below the astronomical horizon or hidden by the
    /// local horizon profile.
    pub above_horizon: bool,
}

impl SolarPosition {
    pub fn new(altitude: f64, azimuth: f64) -> Self {
        Self {
            altitude,
            azimuth: wrap_azimuth(azimuth),
            above_horizon: altitude > 0.0,
        }
    }

    pub fn zenith(&self) -> f64 {
        90.0 - self.altitude
    }
}

/// Unit vector pointing at the sun, components on (South, East, Zenith).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarVector {
    pub south: f64,
    pub east: f64,
    pub zenith: f64,
}

impl SolarVector {
    pub fn norm(&self) -> f64 {
        (self.south * self.south + self.east * self.east + self.zenith * self.zenith).sqrt()
    }

    pub fn dot(&self, other: &SolarVector) -> f64 {
        self.south * other.south + self.east * other.east + self.zenith * other.zenith
    }
}

/// Options of the ephemeris.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EphemerisOptions {
    /// TT - UT in seconds.
    pub delta_t: f64,
    /// Apply standard atmospheric refraction near the horizon.
    pub refraction: bool,
    /// Station pressure, hPa (refraction only).
    pub pressure: f64,
    /// Air temperature, °C (refraction only).
    pub temperature: f64,
}

impl Default for EphemerisOptions {
    fn default() -> Self {
        Self {
            delta_t: 69.0,
            refraction: true,
            pressure: 1010.0,
            temperature: 10.0,
        }
    }
}

/// Wraps an azimuth into (-180, 180].
pub fn wrap_azimuth(azimuth: f64) -> f64 {
    let mut a = (azimuth + 180.0).rem_euclid(360.0) - 180.0;
    if a <= -180.0 {
        a += 360.0;
    }
    a
}

fn julian_day<Tz: TimeZone>(time: &DateTime<Tz>) -> f64 {
    let seconds = time.timestamp() as f64 + f64::from(time.timestamp_subsec_nanos()) * 1e-9;
    seconds / 86_400.0 + 2_440_587.5
}

pub fn solar_position<Tz: TimeZone>(time: &DateTime<Tz>, site: &Site) -> SolarPosition {
    solar_position_with(time, site, &EphemerisOptions::default())
}

/// Low-order solar ephemeris (mean elements, equation of centre, nutation in
/// longitude and obliquity). Agrees with the NREL SPA to a few thousandths of
/// a degree for dates within a few centuries of J2000.
pub fn solar_position_with<Tz: TimeZone>(
    time: &DateTime<Tz>,
    site: &Site,
    opts: &EphemerisOptions,
) -> SolarPosition {
    let jd = julian_day(time);
    let jde = jd + opts.delta_t / 86_400.0;
    let t = (jde - 2_451_545.0) / 36_525.0;

    let l0 = 280.46646 + t * (36_000.76983 + 0.000_303_2 * t);
    let m = (357.52911 + t * (35_999.05029 - 0.000_153_7 * t)).to_radians();
    let c = m.sin() * (1.914602 - t * (0.004817 + 0.000014 * t))
        + (2.0 * m).sin() * (0.019993 - 0.000101 * t)
        + (3.0 * m).sin() * 0.000289;
    let true_longitude = l0 + c;
    let omega = (125.04 - 1934.136 * t).to_radians();
    let lambda = (true_longitude - 0.00569 - 0.00478 * omega.sin()).to_radians();

    let eps0 = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
    let eps = (eps0 + 0.00256 * omega.cos()).to_radians();

    let declination = (eps.sin() * lambda.sin()).asin();
    let right_ascension = (eps.cos() * lambda.sin()).atan2(lambda.cos());

    let d = jd - 2_451_545.0;
    let tu = d / 36_525.0;
    let gmst = 280.460_618_37 + 360.985_647_366_29 * d + 0.000_387_933 * tu * tu
        - tu * tu * tu / 38_710_000.0;
    // Equation of the equinoxes keeps the sidereal time apparent.
    let gast = gmst + (-17.20 * omega.sin() / 3600.0) * eps.cos();
    let hour_angle = (gast + site.longitude - right_ascension.to_degrees())
        .rem_euclid(360.0)
        .to_radians();

    let phi = site.latitude.to_radians();
    let sin_alt = phi.sin() * declination.sin() + phi.cos() * declination.cos() * hour_angle.cos();
    let true_altitude = sin_alt.clamp(-1.0, 1.0).asin().to_degrees();
    let azimuth = hour_angle
        .sin()
        .atan2(hour_angle.cos() * phi.sin() - declination.tan() * phi.cos())
        .to_degrees();

    let altitude = if opts.refraction {
        true_altitude + refraction(true_altitude, opts.pressure, opts.temperature)
    } else {
        true_altitude
    };
    SolarPosition::new(altitude, azimuth)
}

/// Bennett refraction in degrees for a true altitude in degrees.
fn refraction(true_altitude: f64, pressure: f64, temperature: f64) -> f64 {
    // Sun radius plus horizontal refraction; below this the correction fades
    // out linearly over one degree so the apparent track stays continuous.
    const SET: f64 = -(0.26667 + 0.5667);
    let bennett = |h: f64| {
        let arcmin = 1.02 / (h + 10.3 / (h + 5.11)).to_radians().tan();
        (pressure / 1010.0) * (283.0 / (273.0 + temperature)) * arcmin / 60.0
    };
    if true_altitude >= SET {
        bennett(true_altitude)
    } else {
        bennett(SET) * (1.0 - (SET - true_altitude)).max(0.0)
    }
}

/// Components (cos α cos γ, cos α sin γ, sin α) with γ measured
/// east-positive from South; the canonical azimuth is west-positive, hence the
/// sign flip on the East component.
pub fn solar_vector(pos: &SolarPosition) -> SolarVector {
    direction_vector(pos.altitude, pos.azimuth)
}

/// Unit vector for an arbitrary sky direction (altitude, canonical azimuth).
pub fn direction_vector(altitude: f64, azimuth: f64) -> SolarVector {
    let (sa, ca) = altitude.to_radians().sin_cos();
    let (sg, cg) = azimuth.to_radians().sin_cos();
    SolarVector {
        south: ca * cg,
        east: -ca * sg,
        zenith: sa,
    }
}

/// Outward unit normal of a plane with the given tilt (0 = horizontal) and
/// canonical azimuth of the direction it faces.
pub fn surface_normal(tilt: f64, azimuth: f64) -> SolarVector {
    let (sb, cb) = tilt.to_radians().sin_cos();
    let (sg, cg) = azimuth.to_radians().sin_cos();
    SolarVector {
        south: sb * cg,
        east: -sb * sg,
        zenith: cb,
    }
}

/// Angle in degrees between the sun and the surface normal; values above 90°
/// mean the sun is behind the surface.
pub fn incidence_angle(vec: &SolarVector, tilt: f64, azimuth: f64) -> f64 {
    let n = surface_normal(tilt, azimuth);
    vec.dot(&n).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Inverse relative Earth–Sun distance factor for a (possibly fractional)
/// day of year.
pub fn inverse_relative_distance(day_of_year: f64) -> f64 {
    1.0 + 0.033 * (2.0 * std::f64::consts::PI * day_of_year / 365.0).cos()
}

/// Extraterrestrial normal irradiance, W/m².
pub fn extraterrestrial_normal(day_of_year: f64) -> f64 {
    const SOLAR_CONSTANT: f64 = 1361.0;
    SOLAR_CONSTANT * inverse_relative_distance(day_of_year)
}

/// Daily extraterrestrial radiation on a horizontal surface, MJ/m²/day, for a
/// fractional day of year.
pub fn extraterrestrial_daily_doy(day_of_year: f64, latitude: f64) -> f64 {
    const GSC: f64 = 0.0820;
    let phi = latitude.to_radians();
    let dr = inverse_relative_distance(day_of_year);
    let delta = 0.409 * (2.0 * std::f64::consts::PI * day_of_year / 365.0 - 1.39).sin();
    let ws = (-phi.tan() * delta.tan()).clamp(-1.0, 1.0).acos();
    let ra = 24.0 * 60.0 / std::f64::consts::PI
        * GSC
        * dr
        * (ws * phi.sin() * delta.sin() + phi.cos() * delta.cos() * ws.sin());
    ra.max(0.0)
}

pub fn extraterrestrial_daily<D: Datelike>(date: &D, latitude: f64) -> f64 {
    extraterrestrial_daily_doy(f64::from(date.ordinal()), latitude)
}
