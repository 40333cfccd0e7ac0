//! Land equivalent ratio, power fluctuation and energy objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shading::SceneConfig;

/// Specific yield of the ground-mounted reference system, kWh/kWp/year.
pub const REFERENCE_SPECIFIC_YIELD: f64 = 1000.0;
/// Energy density of the ground-mounted reference system, kWh/m²/year.
pub const REFERENCE_ENERGY_DENSITY: f64 = 58.0;

/// Basis of the energy term of the land equivalent ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyBasis {
    /// kWh/m²/year against the reference density.
    #[default]
    PerArea,
    /// kWh/kWp/year against the reference specific yield.
    PerCapacity,
}

/// Crop and PV terms of the land equivalent ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LerTerms {
    pub crop: f64,
    pub pv: f64,
}

impl LerTerms {
    pub fn ler(&self) -> f64 {
        self.crop + self.pv
    }
}

pub fn land_equivalent_ratio(y_agri: f64, y_ref: f64, e_agri: f64, e_ref: f64) -> Result<LerTerms> {
    if !(y_ref > 0.0) || !(e_ref > 0.0) {
        return Err(Error::Numerical(format!(
            "land equivalent ratio undefined for reference yield {y_ref} and reference energy {e_ref}"
        )));
    }
    if y_agri < 0.0 || e_agri < 0.0 {
        return Err(Error::Numerical("negative yield or energy".into()));
    }
    Ok(LerTerms {
        crop: y_agri / y_ref,
        pv: e_agri / e_ref,
    })
}

/// Annual energy per occupied land area, kWh/m²/year.
pub fn agrivoltaic_energy_density(annual_energy_kwh: f64, scene: &SceneConfig) -> f64 {
    let area = scene.land_area();
    if area > 0.0 {
        annual_energy_kwh / area
    } else {
        0.0
    }
}

/// Reference energy of a ground-mounted system of the given capacity:
/// `(kWh/year, kWh/m²/year)`.
pub fn reference_pv_energy(capacity_kwp: f64) -> Result<(f64, f64)> {
    if !(capacity_kwp > 0.0) {
        return Err(Error::Numerical(format!("capacity must be positive, got {capacity_kwp}")));
    }
    Ok((capacity_kwp * REFERENCE_SPECIFIC_YIELD, REFERENCE_ENERGY_DENSITY))
}

/// Identifies the inputs a result was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub scene_hash: String,
    pub weather_hash: String,
    pub crop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiResult {
    pub ler: f64,
    pub ler_crop_term: f64,
    pub ler_pv_term: f64,
    pub std_kw: f64,
    /// kWh/year
    pub annual_energy: f64,
    /// kWh/m²/year
    pub energy_density: f64,
    pub yield_agri: f64,
    pub yield_reference: f64,
    pub provenance: Provenance,
}

impl KpiResult {
    /// Combines simulation outputs into the objective set.
    #[allow(clippy::too_many_arguments)]
    pub fn compute(
        scene: &SceneConfig,
        capacity_kwp: f64,
        annual_energy: f64,
        std_kw: f64,
        yield_agri: f64,
        yield_reference: f64,
        basis: EnergyBasis,
        provenance: Provenance,
    ) -> Result<Self> {
        let energy_density = agrivoltaic_energy_density(annual_energy, scene);
        let terms = match basis {
            EnergyBasis::PerArea => {
                land_equivalent_ratio(yield_agri, yield_reference, energy_density, REFERENCE_ENERGY_DENSITY)?
            }
            EnergyBasis::PerCapacity if capacity_kwp == 0.0 => LerTerms {
                crop: land_equivalent_ratio(yield_agri, yield_reference, 0.0, 1.0)?.crop,
                pv: 0.0,
            },
            EnergyBasis::PerCapacity => {
                let (e_ref, _) = reference_pv_energy(capacity_kwp)?;
                land_equivalent_ratio(yield_agri, yield_reference, annual_energy, e_ref)?
            }
        };
        Ok(Self {
            ler: terms.ler(),
            ler_crop_term: terms.crop,
            ler_pv_term: terms.pv,
            std_kw,
            annual_energy,
            energy_density,
            yield_agri,
            yield_reference,
            provenance,
        })
    }

    pub const CSV_HEADER: &'static str = "ler,ler_crop,ler_pv,std_kw,energy_kwh,energy_density_kwh_m2,yield_t_ha,reference_yield_t_ha,crop,scene_hash,weather_hash";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.9},{:.9},{:.9},{:.9},{:.6},{:.6},{:.9},{:.9},{},{},{}",
            self.ler,
            self.ler_crop_term,
            self.ler_pv_term,
            self.std_kw,
            self.annual_energy,
            self.energy_density,
            self.yield_agri,
            self.yield_reference,
            self.provenance.crop,
            self.provenance.scene_hash,
            self.provenance.weather_hash
        )
    }
}
