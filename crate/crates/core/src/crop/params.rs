use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar day without a year, written `MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self> {
        // 2020 is a leap year, so Feb 29 is accepted here.
        NaiveDate::from_ymd_opt(2020, month, day)
            .map(|_| Self { month, day })
            .ok_or_else(|| Error::Config(format!("invalid calendar day {month:02}-{day:02}")))
    }

    pub fn in_year(&self, year: i32) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(year, self.month, self.day)
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected MM-DD, got {s:?}"));
        let (m, d) = s.trim().split_once('-').ok_or_else(bad)?;
        let month = m.parse().map_err(|_| bad())?;
        let day = d.parse().map_err(|_| bad())?;
        Self::new(month, day)
    }
}

impl TryFrom<String> for MonthDay {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthDay> for String {
    fn from(md: MonthDay) -> String {
        md.to_string()
    }
}

/// EPIC crop parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropParams {
    pub name: String,
    pub harvest_index: f64,
    /// (kg/ha)/(MJ/m²)
    pub biomass_energy_ratio: f64,
    pub t_base: f64,
    pub t_opt: f64,
    pub lai_max: f64,
    pub water_stress_yield_factor: f64,
    pub lai_decline_exponent: f64,
    pub decline_start_fraction: f64,
    /// Encoded as `percent.fraction`, e.g. 15.01.
    pub lai_curve_point_1: f64,
    pub lai_curve_point_2: f64,
    pub sowing: MonthDay,
    pub harvest: MonthDay,
    /// °C·day
    pub potential_heat_units: f64,
}

impl CropParams {
    pub fn oat() -> Self {
        Self {
            name: "oat".into(),
            harvest_index: 0.42,
            biomass_energy_ratio: 35.0,
            t_base: 0.0,
            t_opt: 15.0,
            lai_max: 5.0,
            water_stress_yield_factor: 0.21,
            lai_decline_exponent: 1.0,
            decline_start_fraction: 0.8,
            lai_curve_point_1: 15.01,
            lai_curve_point_2: 50.95,
            sowing: MonthDay { month: 4, day: 15 },
            harvest: MonthDay { month: 8, day: 20 },
            potential_heat_units: 1500.0,
        }
    }

    pub fn potato() -> Self {
        Self {
            name: "potato".into(),
            harvest_index: 0.95,
            biomass_energy_ratio: 30.0,
            t_base: 7.0,
            t_opt: 20.0,
            lai_max: 5.0,
            water_stress_yield_factor: 0.95,
            lai_decline_exponent: 2.0,
            decline_start_fraction: 0.6,
            lai_curve_point_1: 15.01,
            lai_curve_point_2: 50.95,
            sowing: MonthDay { month: 5, day: 5 },
            harvest: MonthDay { month: 9, day: 15 },
            potential_heat_units: 1050.0,
        }
    }

    /// Looks up a bundled preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "oat" => Ok(Self::oat()),
            "potato" => Ok(Self::potato()),
            other => Err(Error::Config(format!("unknown crop preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("crop {}: {m}", self.name)));
        if !(self.harvest_index > 0.0 && self.harvest_index <= 1.0) {
            return fail(format!("harvest index {} outside (0, 1]", self.harvest_index));
        }
        if !(self.biomass_energy_ratio > 0.0 && self.biomass_energy_ratio.is_finite()) {
            return fail("biomass energy ratio must be positive".into());
        }
        if !(self.t_base < self.t_opt) {
            return fail(format!("t_base {} must be below t_opt {}", self.t_base, self.t_opt));
        }
        if !(self.lai_max > 0.0 && self.lai_max.is_finite()) {
            return fail("lai_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.water_stress_yield_factor) {
            return fail("water stress yield factor outside [0, 1]".into());
        }
        if !(self.lai_decline_exponent >= 0.0 && self.lai_decline_exponent.is_finite()) {
            return fail("LAI decline exponent must be non-negative".into());
        }
        if !(self.decline_start_fraction > 0.0 && self.decline_start_fraction < 1.0) {
            return fail("decline start fraction outside (0, 1)".into());
        }
        if self.potential_heat_units <= 0.0 || !self.potential_heat_units.is_finite() {
            return fail(format!(
                "potential heat units must be positive, got {}",
                self.potential_heat_units
            ));
        }
        if self.sowing >= self.harvest {
            return fail(format!("sowing {} is not before harvest {}", self.sowing, self.harvest));
        }
        self.lai_shape()?;
        Ok(())
    }

    /// Shape coefficients `(l1, l2)` of the optimal leaf-area curve.
    pub fn lai_shape(&self) -> Result<(f64, f64)> {
        let p1 = decode_curve_point(self.lai_curve_point_1)?;
        let p2 = decode_curve_point(self.lai_curve_point_2)?;
        solve_lai_shape(p1, p2)
    }
}

/// Splits an EPIC `percent.fraction` encoding into
/// `(fraction of season, fraction of maximum LAI)`.
pub fn decode_curve_point(encoded: f64) -> Result<(f64, f64)> {
    if !(encoded > 0.0 && encoded < 100.0) {
        return Err(Error::Config(format!("LAI curve point {encoded} outside (0, 100)")));
    }
    let whole = encoded.floor();
    let frac = ((encoded - whole) * 100.0).round() / 100.0;
    Ok((whole / 100.0, frac))
}

/// Solves `y = x / (x + exp(l1 − l2·x))` through two points.
pub fn solve_lai_shape(p1: (f64, f64), p2: (f64, f64)) -> Result<(f64, f64)> {
    let ok = |(x, y): (f64, f64)| x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0;
    if !(ok(p1) && ok(p2) && p1.0 < p2.0 && p1.1 < p2.1) {
        return Err(Error::Config(format!(
            "LAI curve points {p1:?} and {p2:?} are not strictly increasing inside the unit square"
        )));
    }
    let z = |(x, y): (f64, f64)| (x / y - x).ln();
    let l2 = (z(p1) - z(p2)) / (p2.0 - p1.0);
    let l1 = z(p1) + l2 * p1.0;
    if !(l1.is_finite() && l2.is_finite()) {
        return Err(Error::Config("LAI curve has no finite solution".into()));
    }
    Ok((l1, l2))
}
