//! Annual evaluation of a row design on a prepared site year.
//!
//! [`SiteYear::prepare`] does all design-independent work once: PAR filling,
//! horizon masking, beam/diffuse splitting, sky radiance fields and the
//! sky weights used for diffuse shading. Evaluating a design then needs
//! only its shading matrices, a pass over the daylight hours and the crop
//! season.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crop::{simulate_season, CropParams, CropWeather, SeasonResult, SoilParams};
use crate::error::{Error, Result};
use crate::irradiance::{
    bifacial_plane_irradiance, diffuse_fraction_ghi, diffuse_fraction_par, DiffuseModel, ParSplit,
    SkyConditions, DEFAULT_ALBEDO,
};
use crate::kpi::{EnergyBasis, KpiResult, Provenance};
use crate::optimizer::DecisionVector;
use crate::pv::{
    effective_irradiance, power_std, ArrayConfig, ModuleDatasheet, ModuleModel, PowerSeries,
};
use crate::shading::{
    composite_shading, dot_lanes, horizon_mask, SceneConfig, ShadeLookup, ShadeSample,
    ShadingMatrix, Target,
};
use crate::sky::{cell_center, cell_solid_angle, SkyRadianceField, ALTITUDE_CELLS, AZIMUTH_CELLS, DOME_CELLS};
use crate::weather::{HorizonProfile, WeatherSeries, DEFAULT_PAR_RATIO};

/// Physical model options shared by every evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub albedo: f64,
    pub diffuse_model: DiffuseModel,
    pub par_ratio: f64,
    pub energy_basis: EnergyBasis,
    /// Smallest row distance the prepared sky weights must serve quickly, m.
    pub min_row_distance: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            albedo: DEFAULT_ALBEDO,
            diffuse_model: DiffuseModel::Perez,
            par_ratio: DEFAULT_PAR_RATIO,
            energy_basis: EnergyBasis::PerArea,
            min_row_distance: 5.0,
        }
    }
}

impl ModelSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.albedo) {
            return Err(Error::Config(format!("model.albedo {} outside [0, 1]", self.albedo)));
        }
        if !(self.par_ratio > 0.0 && self.par_ratio <= 1.0) {
            return Err(Error::Config(format!("model.par_ratio {} outside (0, 1]", self.par_ratio)));
        }
        if !(self.min_row_distance > 0.0 && self.min_row_distance.is_finite()) {
            return Err(Error::Config("model.min_row_distance must be positive".into()));
        }
        Ok(())
    }
}

/// Everything about the plant except its two design variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlantSpec {
    pub scene: SceneConfig,
    pub module: ModuleDatasheet,
    pub array: ArrayConfig,
    pub soil: SoilParams,
    pub model: ModelSettings,
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.module.validate()?;
        self.array.validate()?;
        self.soil.validate()?;
        self.model.validate()
    }

    /// Installed capacity, kWp.
    pub fn capacity_kwp(&self) -> f64 {
        self.scene.total_modules() as f64 * self.module.p_mp / 1000.0
    }
}

/// Hex SHA-256 digest of every record of a weather series.
pub fn weather_hash(weather: &WeatherSeries) -> String {
    let mut h = Sha256::new();
    let opt = |v: Option<f64>| v.map(f64::to_bits).unwrap_or(u64::MAX).to_le_bytes();
    for i in 0..weather.len() {
        h.update(weather.times[i].timestamp().to_le_bytes());
        h.update(weather.ghi[i].to_bits().to_le_bytes());
        h.update(opt(weather.dhi[i]));
        h.update(opt(weather.par[i]));
        h.update(weather.t_air[i].to_bits().to_le_bytes());
        h.update(opt(weather.precip[i]));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Hourly shading of one design over the daylight hours, plus the daily
/// diffuse PAR removed from the crop strip.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingProfile {
    pub ground_beam: Vec<f32>,
    pub front_beam: Vec<f32>,
    pub front_diffuse: Vec<f32>,
    pub rear_beam: Vec<f32>,
    pub rear_diffuse: Vec<f32>,
    /// Per crop-weather day, W·h/m².
    pub ground_diffuse_loss: Vec<f64>,
}

/// Objective values of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    pub ler: f64,
    pub ler_crop: f64,
    pub ler_pv: f64,
    pub std_kw: f64,
    pub energy_kwh: f64,
}

/// Full outputs of one simulated design.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scene: SceneConfig,
    pub power: PowerSeries,
    pub season: SeasonResult,
    pub reference: SeasonResult,
    pub kpi: KpiResult,
    /// Hourly crop-strip and face shading, aligned with the weather series.
    pub ground_shading: Vec<ShadeSample>,
}

/// Shading profiles keyed by design bucket.
pub struct ProfileCache {
    azimuth_step: f64,
    distance_step: f64,
    capacity: usize,
    profiles: Mutex<HashMap<(i64, i64), Arc<ShadingProfile>>>,
}

impl ProfileCache {
    pub fn new(azimuth_step: f64, distance_step: f64, capacity: usize) -> Result<Self> {
        if !(azimuth_step > 0.0 && distance_step > 0.0) {
            return Err(Error::Config("bucket resolutions must be positive".into()));
        }
        Ok(Self {
            azimuth_step,
            distance_step,
            capacity,
            profiles: Mutex::new(HashMap::new()),
        })
    }

    fn key(&self, d: &DecisionVector) -> (i64, i64) {
        (
            (d.azimuth / self.azimuth_step).round() as i64,
            (d.row_distance / self.distance_step).round() as i64,
        )
    }

    /// Design at the center of the bucket holding `d`.
    pub fn bucket_center(&self, d: &DecisionVector) -> DecisionVector {
        let (a, r) = self.key(d);
        DecisionVector {
            azimuth: a as f64 * self.azimuth_step,
            row_distance: r as f64 * self.distance_step,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(
        &self,
        d: &DecisionVector,
        compute: impl FnOnce(&DecisionVector) -> Result<ShadingProfile>,
    ) -> Result<Arc<ShadingProfile>> {
        let key = self.key(d);
        if let Some(p) = self.profiles.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        let profile = Arc::new(compute(&self.bucket_center(d))?);
        let mut map = self.profiles.lock().expect("cache lock");
        if map.len() < self.capacity {
            map.entry(key).or_insert_with(|| Arc::clone(&profile));
        }
        Ok(profile)
    }
}

/// Design-independent state of one site and weather year.
pub struct SiteYear {
    pub plant: PlantSpec,
    pub weather: WeatherSeries,
    pub horizon: HorizonProfile,
    pub crop_weather: CropWeather,
    pub sky: Vec<SkyConditions>,
    pub par: Vec<ParSplit>,
    /// Series indices with the sun above the horizon profile and light.
    pub daylight: Vec<usize>,
    pub weather_hash: String,
    model: ModuleModel,
    mask: Vec<bool>,
    face_rows: usize,
    /// Per daylight hour: weights `R·cos α·dΩ` of the lowest `face_rows`
    /// dome rows.
    face_weights: Vec<f32>,
    /// Per daylight hour: weight column sums over all rows.
    column_sums: Vec<f64>,
    /// Per crop-weather day: Σ PAR_diffuse · w / Σ(w·tan α) over its hours.
    ground_day_weights: Vec<f64>,
    open_par: Vec<f64>,
    references: Mutex<HashMap<String, SeasonResult>>,
}

impl SiteYear {
    pub fn prepare(weather: &WeatherSeries, horizon: &HorizonProfile, plant: PlantSpec) -> Result<Self> {
        plant.validate()?;
        let model = ModuleModel::fit(&plant.module)?;
        let hash = weather_hash(weather);
        let series = weather.fill_par(plant.model.par_ratio)?.mask_horizon(horizon);
        let n = series.len();
        let mut sky = Vec::with_capacity(n);
        let mut par = Vec::with_capacity(n);
        for i in 0..n {
            let sun = series.sun_position(i);
            let doy = series.midpoint(i).ordinal() as f64;
            let ghi = series.ghi[i];
            let dhi = series.dhi[i].unwrap_or_else(|| diffuse_fraction_ghi(ghi, sun, doy));
            let s = SkyConditions::from_horizontal(ghi, dhi, sun, doy);
            par.push(diffuse_fraction_par(series.par[i].unwrap_or(0.0), ghi, s.dhi, sun)?);
            sky.push(s);
        }
        let daylight: Vec<usize> = (0..n)
            .filter(|&i| sky[i].ghi > 0.0 && sky[i].sun.altitude > 0.0)
            .collect();
        let crop_weather = CropWeather::from_series(&series);
        let mask = horizon_mask(horizon);
        let face_rows = face_row_bound(&plant.scene, plant.model.min_row_distance);
        let diffuse_model = plant.model.diffuse_model;

        let cos_dw: Vec<f64> = (0..ALTITUDE_CELLS)
            .map(|j| (j as f64 + 0.5).to_radians().cos() * cell_solid_angle(j))
            .collect();
        let tan: Vec<f64> = (0..ALTITUDE_CELLS).map(|j| (j as f64 + 0.5).to_radians().tan()).collect();
        let weights_of = |h: usize| -> Vec<f64> {
            let field = match diffuse_model {
                DiffuseModel::Perez => SkyRadianceField::perez(&sky[h]),
                DiffuseModel::Isotropic => SkyRadianceField::isotropic(sky[h].dhi),
            };
            field
                .values()
                .iter()
                .enumerate()
                .map(|(c, r)| if mask[c] { 0.0 } else { r * cos_dw[c / AZIMUTH_CELLS] })
                .collect()
        };

        // Hours grouped by crop-weather day, in series order.
        let days = crop_weather.days.len();
        let mut hours_of_day: Vec<Vec<(usize, usize)>> = vec![Vec::new(); days];
        for (k, &h) in daylight.iter().enumerate() {
            hours_of_day[crop_weather.day_of_hour[h]].push((k, h));
        }
        let per_day: Vec<(Vec<f64>, Vec<(usize, Vec<f32>, Vec<f64>)>)> = hours_of_day
            .par_iter()
            .map(|hours| {
                let mut ground = if hours.is_empty() { Vec::new() } else { vec![0.0; DOME_CELLS] };
                let mut faces = Vec::with_capacity(hours.len());
                for &(k, h) in hours {
                    let w = weights_of(h);
                    let g: f64 = w.iter().enumerate().map(|(c, v)| v * tan[c / AZIMUTH_CELLS]).sum();
                    if g > 0.0 {
                        let scale = par[h].par_diffuse / g;
                        for (acc, v) in ground.iter_mut().zip(&w) {
                            *acc += scale * v;
                        }
                    }
                    let mut cols = vec![0.0; AZIMUTH_CELLS];
                    for (c, v) in w.iter().enumerate() {
                        cols[c % AZIMUTH_CELLS] += v;
                    }
                    let face: Vec<f32> = w[..face_rows * AZIMUTH_CELLS].iter().map(|&v| v as f32).collect();
                    faces.push((k, face, cols));
                }
                (ground, faces)
            })
            .collect();

        let mut face_weights = vec![0.0f32; daylight.len() * face_rows * AZIMUTH_CELLS];
        let mut column_sums = vec![0.0; daylight.len() * AZIMUTH_CELLS];
        let mut ground_day_weights = vec![0.0; days * DOME_CELLS];
        for (d, (ground, faces)) in per_day.into_iter().enumerate() {
            if !ground.is_empty() {
                ground_day_weights[d * DOME_CELLS..(d + 1) * DOME_CELLS].copy_from_slice(&ground);
            }
            for (k, face, cols) in faces {
                let stride = face_rows * AZIMUTH_CELLS;
                face_weights[k * stride..(k + 1) * stride].copy_from_slice(&face);
                column_sums[k * AZIMUTH_CELLS..(k + 1) * AZIMUTH_CELLS].copy_from_slice(&cols);
            }
        }
        let open_par = crop_weather.open_field_par(&par);

        Ok(Self {
            plant,
            weather: series,
            horizon: horizon.clone(),
            crop_weather,
            sky,
            par,
            daylight,
            weather_hash: hash,
            model,
            mask,
            face_rows,
            face_weights,
            column_sums,
            ground_day_weights,
            open_par,
            references: Mutex::new(HashMap::new()),
        })
    }

    pub fn module_model(&self) -> &ModuleModel {
        &self.model
    }

    pub fn scene(&self, d: &DecisionVector) -> SceneConfig {
        self.plant.scene.with_design(d.azimuth, d.row_distance)
    }

    /// Shading profile of a scene from freshly built matrices.
    pub fn profile(&self, scene: &SceneConfig) -> Result<ShadingProfile> {
        scene.validate()?;
        let ground = ShadingMatrix::build(scene, Target::Ground, &self.horizon);
        let front = ShadingMatrix::build(scene, Target::PanelFront, &self.horizon);
        let rear = ShadingMatrix::build(scene, Target::PanelRear, &self.horizon);
        let beam = |m: &ShadingMatrix, h: usize| match m.lookup(&self.sky[h].sun) {
            ShadeLookup::Value(v) => v as f32,
            ShadeLookup::Masked => 0.0,
        };
        let ground_beam = self.daylight.iter().map(|&h| beam(&ground, h)).collect();
        let front_beam = self.daylight.iter().map(|&h| beam(&front, h)).collect();
        let rear_beam = self.daylight.iter().map(|&h| beam(&rear, h)).collect();
        let (front_diffuse, rear_diffuse) = self.face_diffuse(&front, &rear, scene.panel_azimuth);
        let ground_diffuse_loss = self.ground_diffuse_loss(&ground);
        Ok(ShadingProfile {
            ground_beam,
            front_beam,
            front_diffuse,
            rear_beam,
            rear_diffuse,
            ground_diffuse_loss,
        })
    }

    fn face_diffuse(&self, front: &ShadingMatrix, rear: &ShadingMatrix, azimuth: f64) -> (Vec<f32>, Vec<f32>) {
        let face_cos: Vec<f64> = (0..AZIMUTH_CELLS)
            .map(|i| (cell_center(i).1 - azimuth).to_radians().cos())
            .collect();
        let kernel = |m: &ShadingMatrix, sign: f64| -> Vec<f32> {
            (0..DOME_CELLS)
                .map(|c| (m.values()[c] * (sign * face_cos[c % AZIMUTH_CELLS]).max(0.0)) as f32)
                .collect()
        };
        let kf = kernel(front, 1.0);
        let kr = kernel(rear, -1.0);
        let active = |k: &[f32]| -> usize {
            (0..ALTITUDE_CELLS)
                .rev()
                .find(|&j| k[j * AZIMUTH_CELLS..(j + 1) * AZIMUTH_CELLS].iter().any(|&v| v != 0.0))
                .map_or(0, |j| j + 1)
        };
        let rows_f = active(&kf);
        let rows_r = active(&kr);
        if rows_f.max(rows_r) > self.face_rows {
            return self.face_diffuse_exact(&kf, &kr, &face_cos);
        }
        let stride = self.face_rows * AZIMUTH_CELLS;
        let per_hour: Vec<(f32, f32)> = (0..self.daylight.len())
            .into_par_iter()
            .map(|k| {
                let w = &self.face_weights[k * stride..(k + 1) * stride];
                let nf = dot_lanes(&w[..rows_f * AZIMUTH_CELLS], &kf[..rows_f * AZIMUTH_CELLS]);
                let nr = dot_lanes(&w[..rows_r * AZIMUTH_CELLS], &kr[..rows_r * AZIMUTH_CELLS]);
                let cols = &self.column_sums[k * AZIMUTH_CELLS..(k + 1) * AZIMUTH_CELLS];
                let (mut df, mut dr) = (0.0, 0.0);
                for (i, &s) in cols.iter().enumerate() {
                    df += face_cos[i].max(0.0) * s;
                    dr += (-face_cos[i]).max(0.0) * s;
                }
                (ratio(nf, df) as f32, ratio(nr, dr) as f32)
            })
            .collect();
        per_hour.into_iter().unzip()
    }

    /// Face factors from regenerated radiance fields; used when a scene
    /// shades its faces above the stored dome rows.
    fn face_diffuse_exact(&self, kf: &[f32], kr: &[f32], face_cos: &[f64]) -> (Vec<f32>, Vec<f32>) {
        let cos_dw: Vec<f64> = (0..ALTITUDE_CELLS)
            .map(|j| (j as f64 + 0.5).to_radians().cos() * cell_solid_angle(j))
            .collect();
        let per_hour: Vec<(f32, f32)> = self
            .daylight
            .par_iter()
            .map(|&h| {
                let field = self.field(h);
                let (mut nf, mut nr, mut df, mut dr) = (0.0, 0.0, 0.0, 0.0);
                for (c, r) in field.values().iter().enumerate() {
                    if self.mask[c] {
                        continue;
                    }
                    let w = r * cos_dw[c / AZIMUTH_CELLS];
                    nf += w * kf[c] as f64;
                    nr += w * kr[c] as f64;
                    df += w * face_cos[c % AZIMUTH_CELLS].max(0.0);
                    dr += w * (-face_cos[c % AZIMUTH_CELLS]).max(0.0);
                }
                (ratio(nf, df) as f32, ratio(nr, dr) as f32)
            })
            .collect();
        per_hour.into_iter().unzip()
    }

    fn field(&self, h: usize) -> SkyRadianceField {
        match self.plant.model.diffuse_model {
            DiffuseModel::Perez => SkyRadianceField::perez(&self.sky[h]),
            DiffuseModel::Isotropic => SkyRadianceField::isotropic(self.sky[h].dhi),
        }
    }

    fn ground_diffuse_loss(&self, ground: &ShadingMatrix) -> Vec<f64> {
        let kernel: Vec<f64> = (0..DOME_CELLS)
            .map(|c| ground.values()[c] * (cell_center(c).0).to_radians().tan())
            .collect();
        self.ground_day_weights
            .par_chunks(DOME_CELLS)
            .map(|w| w.iter().zip(&kernel).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Hourly ground-strip diffuse shading factors over the daylight hours,
    /// evaluated one hour at a time.
    pub fn ground_diffuse_hourly(&self, ground: &ShadingMatrix) -> Vec<f64> {
        let w_tan: Vec<f64> = (0..ALTITUDE_CELLS)
            .map(|j| {
                let a = (j as f64 + 0.5).to_radians();
                a.cos() * cell_solid_angle(j) * a.tan()
            })
            .collect();
        self.daylight
            .par_iter()
            .map(|&h| {
                let field = self.field(h);
                let (mut num, mut den) = (0.0, 0.0);
                for (c, r) in field.values().iter().enumerate() {
                    if self.mask[c] {
                        continue;
                    }
                    let w = r * w_tan[c / AZIMUTH_CELLS];
                    num += w * ground.values()[c];
                    den += w;
                }
                ratio(num, den)
            })
            .collect()
    }

    /// Shade-reduced crop PAR per crop-weather day, MJ/m².
    pub fn crop_par(&self, profile: &ShadingProfile) -> Vec<f64> {
        let mut beam_loss = vec![0.0; self.open_par.len()];
        for (k, &h) in self.daylight.iter().enumerate() {
            beam_loss[self.crop_weather.day_of_hour[h]] += self.par[h].par_beam * profile.ground_beam[k] as f64;
        }
        self.open_par
            .iter()
            .zip(&beam_loss)
            .zip(&profile.ground_diffuse_loss)
            .map(|((open, b), d)| (open - (b + d) * 3600.0 / 1e6).max(0.0))
            .collect()
    }

    /// Hourly system power for a scene and its shading profile.
    pub fn power(&self, scene: &SceneConfig, profile: &ShadingProfile) -> PowerSeries {
        let modules = scene.total_modules();
        let mut power_kw = vec![0.0; self.weather.len()];
        if modules > 0 {
            let sheet = &self.plant.module;
            let array = &self.plant.array;
            let scale = modules as f64 * array.derate / 1000.0;
            for (k, &h) in self.daylight.iter().enumerate() {
                let (front, rear) = bifacial_plane_irradiance(
                    &self.sky[h],
                    scene.panel_azimuth,
                    self.plant.model.albedo,
                    self.plant.model.diffuse_model,
                );
                let fs = composite_shading(profile.front_beam[k] as f64, profile.front_diffuse[k] as f64, &front);
                let rs = composite_shading(profile.rear_beam[k] as f64, profile.rear_diffuse[k] as f64, &rear);
                let g = effective_irradiance(&front, &rear, &fs, &rs, sheet.bifaciality);
                let t_cell = array.cell_temperature(self.weather.t_air[h], g);
                power_kw[h] = self.model.module_power(g, t_cell) * scale;
            }
        }
        PowerSeries {
            times: self.weather.times.clone(),
            power_kw,
            modules,
        }
    }

    /// Open-field season of a crop, memoized per parameter set.
    pub fn reference_season(&self, crop: &CropParams) -> Result<SeasonResult> {
        let key = format!("{crop:?}");
        if let Some(r) = self.references.lock().expect("reference lock").get(&key) {
            return Ok(r.clone());
        }
        let r = simulate_season(crop, &self.plant.soil, &self.crop_weather, &self.open_par)?;
        self.references.lock().expect("reference lock").insert(key, r.clone());
        Ok(r)
    }

    pub fn season(&self, crop: &CropParams, profile: &ShadingProfile) -> Result<SeasonResult> {
        simulate_season(crop, &self.plant.soil, &self.crop_weather, &self.crop_par(profile))
    }

    fn kpi(&self, scene: &SceneConfig, power: &PowerSeries, yield_agri: f64, yield_ref: f64, crop: &str) -> Result<KpiResult> {
        let capacity = scene.total_modules() as f64 * self.plant.module.p_mp / 1000.0;
        let std_kw = power_std(&power.power_kw)?;
        let provenance = Provenance {
            scene_hash: scene.geometry_hash(),
            weather_hash: self.weather_hash.clone(),
            crop: crop.to_string(),
        };
        KpiResult::compute(
            scene,
            capacity,
            power.energy_kwh(),
            std_kw,
            yield_agri,
            yield_ref,
            self.plant.model.energy_basis,
            provenance,
        )
    }

    /// KPIs of a scene for one crop under a precomputed shading profile.
    pub fn assess(&self, scene: &SceneConfig, crop: &CropParams, profile: &ShadingProfile) -> Result<KpiResult> {
        let power = self.power(scene, profile);
        let season = self.season(crop, profile)?;
        let reference = self.reference_season(crop)?;
        self.kpi(scene, &power, season.yield_t_ha, reference.yield_t_ha, &crop.name)
    }

    fn objectives_with(&self, d: &DecisionVector, crop: &CropParams, profile: &ShadingProfile) -> Result<Objectives> {
        let k = self.assess(&self.scene(d), crop, profile)?;
        Ok(Objectives {
            ler: k.ler,
            ler_crop: k.ler_crop_term,
            ler_pv: k.ler_pv_term,
            std_kw: k.std_kw,
            energy_kwh: k.annual_energy,
        })
    }

    /// Objectives with shading taken from the design's bucket.
    pub fn evaluate(&self, d: &DecisionVector, crop: &CropParams, cache: &ProfileCache) -> Result<Objectives> {
        let profile = cache.get_or_compute(d, |center| self.profile(&self.scene(center)))?;
        self.objectives_with(d, crop, &profile)
    }

    /// Objectives with shading computed at the exact design.
    pub fn evaluate_exact(&self, d: &DecisionVector, crop: &CropParams) -> Result<Objectives> {
        let profile = self.profile(&self.scene(d))?;
        self.objectives_with(d, crop, &profile)
    }

    /// Complete outputs of one design.
    pub fn simulate(&self, scene: &SceneConfig, crop: &CropParams) -> Result<Simulation> {
        let profile = self.profile(scene)?;
        let power = self.power(scene, &profile);
        let season = self.season(crop, &profile)?;
        let reference = self.reference_season(crop)?;
        let kpi = self.kpi(scene, &power, season.yield_t_ha, reference.yield_t_ha, &crop.name)?;
        let ground = ShadingMatrix::build(scene, Target::Ground, &self.horizon);
        let hourly_diffuse = self.ground_diffuse_hourly(&ground);
        let mut ground_shading = vec![
            ShadeSample {
                s_f_beam: 0.0,
                s_f_diffuse: 0.0,
                s_f_total: 0.0
            };
            self.weather.len()
        ];
        for (k, &h) in self.daylight.iter().enumerate() {
            let p = self.par[h];
            let (sb, sd) = (profile.ground_beam[k] as f64, hourly_diffuse[k]);
            let total = p.par_beam + p.par_diffuse;
            ground_shading[h] = ShadeSample {
                s_f_beam: sb,
                s_f_diffuse: sd,
                s_f_total: if total > 0.0 { (sb * p.par_beam + sd * p.par_diffuse) / total } else { 0.0 },
            };
        }
        Ok(Simulation {
            scene: *scene,
            power,
            season,
            reference,
            kpi,
            ground_shading,
        })
    }
}

fn ratio(n: f64, d: f64) -> f64 {
    if d > 0.0 {
        (n / d).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Dome rows that can hold nonzero face shading for any row distance of at
/// least `min_distance`, with a two-row margin.
fn face_row_bound(scene: &SceneConfig, min_distance: f64) -> usize {
    let alt = (scene.panel_height() / min_distance).atan().to_degrees();
    ((alt.ceil() as usize) + 2).min(ALTITUDE_CELLS)
}
