use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root-zone soil properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoilParams {
    /// m
    pub rooting_depth: f64,
    /// mm of plant-available water per m of soil
    pub available_water_capacity: f64,
    /// Volumetric water content at wilting point, m³/m³.
    pub wilting_point_content: f64,
    /// Fraction of available water extractable without stress.
    pub depletion_fraction: f64,
}

impl Default for SoilParams {
    fn default() -> Self {
        Self {
            rooting_depth: 0.6,
            available_water_capacity: 150.0,
            wilting_point_content: 0.1,
            depletion_fraction: 0.5,
        }
    }
}

impl SoilParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.rooting_depth) || !positive(self.available_water_capacity) {
            return Err(Error::Config("soil depth and water capacity must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.wilting_point_content) {
            return Err(Error::Config("wilting point content outside [0, 1)".into()));
        }
        if !(self.depletion_fraction > 0.0 && self.depletion_fraction < 1.0) {
            return Err(Error::Config("depletion fraction outside (0, 1)".into()));
        }
        Ok(())
    }

    /// Bucket at field capacity.
    pub fn bucket(&self) -> SoilBucket {
        let wilting_point = self.wilting_point_content * self.rooting_depth * 1000.0;
        let field_capacity = wilting_point + self.available_water_capacity * self.rooting_depth;
        SoilBucket {
            field_capacity,
            wilting_point,
            current_storage: field_capacity,
            rooting_depth: self.rooting_depth,
            depletion_fraction: self.depletion_fraction,
        }
    }
}

/// Single-layer root-zone water store, mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilBucket {
    pub field_capacity: f64,
    pub wilting_point: f64,
    pub current_storage: f64,
    pub rooting_depth: f64,
    pub depletion_fraction: f64,
}

impl SoilBucket {
    pub fn total_available(&self) -> f64 {
        self.field_capacity - self.wilting_point
    }

    pub fn readily_available(&self) -> f64 {
        self.depletion_fraction * self.total_available()
    }

    pub fn depletion(&self) -> f64 {
        self.field_capacity - self.current_storage
    }

    /// Transpiration reduction coefficient for the current storage.
    pub fn stress(&self) -> f64 {
        let taw = self.total_available();
        let raw = self.readily_available();
        let dr = self.depletion();
        if dr <= raw {
            1.0
        } else {
            ((taw - dr) / (taw - raw)).clamp(0.0, 1.0)
        }
    }

    /// One daily step: precipitation in (excess drains), then crop
    /// evapotranspiration `kc·et0` scaled by the stress coefficient.
    /// Returns the stress coefficient of the day.
    pub fn step(&mut self, precip: f64, et0: f64, kc: f64) -> f64 {
        self.current_storage = (self.current_storage + precip.max(0.0)).min(self.field_capacity);
        let ks = self.stress();
        let eta = ks * kc * et0.max(0.0);
        self.current_storage = (self.current_storage - eta).max(self.wilting_point);
        ks
    }
}

pub fn water_stress(bucket: &mut SoilBucket, et0: f64, precip: f64, kc: f64) -> f64 {
    bucket.step(precip, et0, kc)
}
