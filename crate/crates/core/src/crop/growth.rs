use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::irradiance::ParSplit;

use super::CropParams;

/// Daily heat units above the base temperature.
pub fn heat_units(t_max: f64, t_min: f64, t_base: f64) -> f64 {
    (0.5 * (t_max + t_min) - t_base).max(0.0)
}

/// Cumulative heat-unit index for consecutive `(t_max, t_min)` days.
pub fn heat_unit_index(temps: &[(f64, f64)], params: &CropParams) -> Result<Vec<f64>> {
    if params.potential_heat_units <= 0.0 || !params.potential_heat_units.is_finite() {
        return Err(Error::Config(format!(
            "potential heat units must be positive, got {}",
            params.potential_heat_units
        )));
    }
    let mut sum = 0.0;
    Ok(temps
        .iter()
        .map(|&(hi, lo)| {
            sum += heat_units(hi, lo, params.t_base);
            (sum / params.potential_heat_units).clamp(0.0, 1.0)
        })
        .collect())
}

/// Leaf-area curve with precomputed shape coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaiCurve {
    pub l1: f64,
    pub l2: f64,
    pub lai_max: f64,
    pub decline_start: f64,
    pub decline_exponent: f64,
}

impl LaiCurve {
    pub fn new(params: &CropParams) -> Result<Self> {
        let (l1, l2) = params.lai_shape()?;
        Ok(Self {
            l1,
            l2,
            lai_max: params.lai_max,
            decline_start: params.decline_start_fraction,
            decline_exponent: params.lai_decline_exponent,
        })
    }

    /// Fraction of maximum LAI on the development branch.
    pub fn development_fraction(&self, hui: f64) -> f64 {
        if hui <= 0.0 {
            return 0.0;
        }
        hui / (hui + (self.l1 - self.l2 * hui).exp())
    }

    pub fn lai(&self, hui: f64) -> f64 {
        let hui = hui.clamp(0.0, 1.0);
        if hui <= self.decline_start {
            return self.lai_max * self.development_fraction(hui);
        }
        let peak = self.lai_max * self.development_fraction(self.decline_start);
        let ratio = (1.0 - hui) / (1.0 - self.decline_start);
        if self.decline_exponent == 0.0 {
            peak
        } else {
            peak * ratio.powf(self.decline_exponent)
        }
    }
}

pub fn lai_curve(hui: f64, params: &CropParams) -> Result<f64> {
    Ok(LaiCurve::new(params)?.lai(hui))
}

/// Hargreaves–Samani reference evapotranspiration, mm/day, from
/// extraterrestrial radiation `ra` in MJ/m²/day.
pub fn et0_hargreaves(t_max: f64, t_min: f64, t_mean: f64, ra: f64) -> f64 {
    let range = (t_max - t_min).max(0.0);
    let ra_mm = ra / 2.45;
    (0.0023 * ra_mm * (t_mean + 17.8) * range.sqrt()).max(0.0)
}

/// Sine-shaped temperature stress, mirrored above the optimum.
pub fn temperature_stress(t_mean: f64, t_base: f64, t_opt: f64) -> f64 {
    let t = if t_mean > t_opt { 2.0 * t_opt - t_mean } else { t_mean };
    if t <= t_base {
        return 0.0;
    }
    (FRAC_PI_2 * (t - t_base) / (t_opt - t_base)).sin().clamp(0.0, 1.0)
}

/// Leaf-area dependent crop coefficient for the soil water budget.
pub fn crop_coefficient(lai: f64) -> f64 {
    0.3 + 0.85 * (1.0 - (-0.65 * lai).exp())
}

/// Shade-reduced PAR over the given hours, MJ/m².
pub fn crop_par(hours: &[ParSplit], shade_beam: &[f64], shade_diffuse: &[f64]) -> f64 {
    hours
        .iter()
        .zip(shade_beam)
        .zip(shade_diffuse)
        .map(|((p, sb), sd)| p.par_beam * (1.0 - sb) + p.par_diffuse * (1.0 - sd))
        .sum::<f64>()
        * 3600.0
        / 1e6
}

/// Daily biomass increment, kg/ha.
pub fn biomass_increment(be: f64, par_tot: f64, lai: f64, gamma: f64) -> f64 {
    be * par_tot * (1.0 - (-0.65 * lai).exp()) * gamma
}

/// Harvest index reduced by the mean water stress after the decline start.
pub fn adjusted_harvest_index(hi: f64, wsyf: f64, mean_water_stress: f64) -> f64 {
    hi * (1.0 - wsyf * (1.0 - mean_water_stress.clamp(0.0, 1.0)))
}
