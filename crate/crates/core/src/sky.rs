//! Sky-dome discretization and the all-weather anisotropic sky radiance
//! distribution (Perez 1993).
//!
//! The dome is split into 1° × 1° cells. Cell `(i, j)` covers canonical
//! azimuths `[−180 + i, −179 + i)` and altitudes `[j, j + 1)`; cells are stored
//! altitude-major at index `j · 360 + i`.

use std::f64::consts::PI;

use crate::irradiance::SkyConditions;
use crate::solar::{direction_vector, SolarVector};

pub const AZIMUTH_CELLS: usize = 360;
pub const ALTITUDE_CELLS: usize = 90;
pub const DOME_CELLS: usize = AZIMUTH_CELLS * ALTITUDE_CELLS;

const MIN_RELATIVE_RADIANCE: f64 = 1e-6;

/// Flat index of cell `(azimuth column, altitude row)`.
#[inline]
pub fn cell_index(azimuth_col: usize, altitude_row: usize) -> usize {
    altitude_row * AZIMUTH_CELLS + azimuth_col
}

/// Center of a cell as (altitude, canonical azimuth) in degrees.
#[inline]
pub fn cell_center(index: usize) -> (f64, f64) {
    let (j, i) = (index / AZIMUTH_CELLS, index % AZIMUTH_CELLS);
    (j as f64 + 0.5, i as f64 - 179.5)
}

/// Solid angle of any cell in altitude row `j`, sr.
pub fn cell_solid_angle(altitude_row: usize) -> f64 {
    let lo = (altitude_row as f64).to_radians();
    let hi = (altitude_row as f64 + 1.0).to_radians();
    1f64.to_radians() * (hi.sin() - lo.sin())
}

/// Cell containing a direction; `None` at or below the horizon.
#[inline]
pub fn locate(altitude: f64, azimuth: f64) -> Option<usize> {
    if !(altitude > 0.0) {
        return None;
    }
    let j = (altitude.floor() as usize).min(ALTITUDE_CELLS - 1);
    let i = ((azimuth + 180.0).floor().rem_euclid(360.0) as usize).min(AZIMUTH_CELLS - 1);
    Some(cell_index(i, j))
}

/// Unit direction vectors of all cell centers.
pub fn cell_directions() -> Vec<SolarVector> {
    (0..DOME_CELLS)
        .map(|c| {
            let (alt, az) = cell_center(c);
            direction_vector(alt, az)
        })
        .collect()
}

/// Radiance over the dome cells, W/m²/sr.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyRadianceField {
    radiance: Vec<f64>,
}

// Rows: clearness bins. Columns: a1..a4, b1..b4, c1..c4, d1..d4, e1..e4.
const PEREZ_1993: [[f64; 20]; 8] = [
    [
        1.3525, -0.2576, -0.2690, -1.4366, -0.7670, 0.0007, 1.2734, -0.1233, 2.8000, 0.6004,
        1.2375, 1.0000, 1.8734, 0.6297, 0.9738, 0.2809, 0.0356, -0.1246, -0.5718, 0.9938,
    ],
    [
        -1.2219, -0.7730, 1.4148, 1.1016, -0.2054, 0.0367, -3.9128, 0.9156, 6.9750, 0.1774,
        6.4477, -0.1239, -1.5798, -0.5081, -1.7812, 0.1080, 0.2624, 0.0672, -0.2190, -0.4285,
    ],
    [
        -1.1000, -0.2515, 0.8952, 0.0156, 0.2782, -0.1812, -4.5000, 1.1766, 24.7219, -13.0812,
        -37.7000, 34.8438, -5.0000, 1.5218, 3.9229, -2.6204, -0.0156, 0.1597, 0.4199, -0.5562,
    ],
    [
        -0.5484, -0.6654, -0.2672, 0.7117, 0.7234, -0.6219, -5.6812, 2.6297, 33.3389, -18.3000,
        -62.2500, 52.0781, -3.5000, 0.0016, 1.1477, 0.1062, 0.4659, -0.3296, -0.0876, -0.0329,
    ],
    [
        -0.6000, -0.3566, -2.5000, 2.3250, 0.2937, 0.0496, -5.6812, 1.8415, 21.0000, -4.7656,
        -21.5906, 7.2492, -3.5000, -0.1554, 1.4062, 0.3988, 0.0032, 0.0766, -0.0656, -0.1294,
    ],
    [
        -1.0156, -0.3670, 1.0078, 1.4051, 0.2875, -0.5328, -3.8500, 3.3750, 14.0000, -0.9999,
        -7.1406, 7.5469, -3.4000, -0.1078, -1.0750, 1.5702, -0.0672, 0.4016, 0.3017, -0.4844,
    ],
    [
        -1.0000, 0.0211, 0.5025, -0.5119, -0.3000, 0.1922, 0.7023, -1.6317, 19.0000, -5.0000,
        1.2438, -1.9094, -4.0000, 0.0250, 0.3844, 0.2656, 1.0468, -0.3788, -2.4517, 1.4656,
    ],
    [
        -1.0500, 0.0289, 0.4260, 0.3590, -0.3250, 0.1156, 0.7781, 0.0025, 31.0625, -14.5000,
        -46.1148, 55.3750, -7.2312, 0.4050, 13.3500, 0.6234, 1.5000, -0.6426, 1.8564, 0.5636,
    ],
];

const CLEARNESS_EDGES: [f64; 7] = [1.065, 1.23, 1.5, 1.95, 2.8, 4.5, 6.2];

/// Coefficients (a, b, c, d, e) of the radiance distribution for a sun
/// zenith angle (radians), sky clearness ε and sky brightness Δ.
pub fn perez_1993_coefficients(zenith: f64, epsilon: f64, delta: f64) -> [f64; 5] {
    let epsilon = epsilon.min(11.9);
    let mut delta = delta.max(0.01);
    if epsilon > 1.065 && epsilon < 2.8 && delta < 0.2 {
        delta = 0.2;
    }
    let bin = CLEARNESS_EDGES.partition_point(|&e| e <= epsilon);
    let x = |k: usize, m: usize| PEREZ_1993[bin][4 * k + m];
    let linear = |k: usize| x(k, 0) + x(k, 1) * zenith + delta * (x(k, 2) + x(k, 3) * zenith);
    if bin == 0 {
        [
            linear(0),
            linear(1),
            (delta * (x(2, 0) + x(2, 1) * zenith)).powf(x(2, 2)).exp() - x(2, 3),
            -(delta * (x(3, 0) + x(3, 1) * zenith)).exp() + x(3, 2) + delta * x(3, 3),
            linear(4),
        ]
    } else {
        [linear(0), linear(1), linear(2), linear(3), linear(4)]
    }
}

/// Relative radiance of a sky element at zenith angle `zeta` and angular
/// distance `gamma` from the sun (radians).
#[inline]
pub fn relative_radiance(coef: &[f64; 5], zeta: f64, gamma: f64) -> f64 {
    let [a, b, c, d, e] = *coef;
    let cos_zeta = zeta.cos().max(0.01);
    let gradation = 1.0 + a * (b / cos_zeta).exp();
    let indicatrix = 1.0 + c * (d * gamma).exp() + e * gamma.cos().powi(2);
    (gradation * indicatrix).max(MIN_RELATIVE_RADIANCE)
}

impl SkyRadianceField {
    pub fn zero() -> Self {
        Self {
            radiance: vec![0.0; DOME_CELLS],
        }
    }

    /// Uniform radiance whose horizontal integral equals `dhi`.
    pub fn isotropic(dhi: f64) -> Self {
        Self::normalized(vec![1.0; DOME_CELLS], dhi)
    }

    /// All-weather anisotropic radiance for one hour.
    pub fn perez(sky: &SkyConditions) -> Self {
        if sky.dhi <= 0.0 {
            return Self::zero();
        }
        if sky.sun.altitude <= 0.0 {
            return Self::isotropic(sky.dhi);
        }
        let zenith = sky.sun.zenith().to_radians().clamp(0.0, PI / 2.0);
        let kz3 = 1.041 * zenith.powi(3);
        let epsilon = ((sky.dhi + sky.dni) / sky.dhi + kz3) / (1.0 + kz3);
        let airmass = sky.airmass().unwrap_or(40.0);
        let delta = sky.dhi * airmass / sky.dni_extra;
        let coef = perez_1993_coefficients(zenith, epsilon, delta);
        let sun = direction_vector(sky.sun.altitude, sky.sun.azimuth);
        let lv = cell_directions()
            .iter()
            .enumerate()
            .map(|(c, dir)| {
                let zeta = PI / 2.0 - cell_center(c).0.to_radians();
                let gamma = dir.dot(&sun).clamp(-1.0, 1.0).acos();
                relative_radiance(&coef, zeta, gamma)
            })
            .collect();
        Self::normalized(lv, sky.dhi)
    }

    fn normalized(mut lv: Vec<f64>, dhi: f64) -> Self {
        let total = horizontal_sum(&lv);
        let scale = if total > 0.0 { dhi / total } else { 0.0 };
        lv.iter_mut().for_each(|v| *v *= scale);
        Self { radiance: lv }
    }

    pub fn values(&self) -> &[f64] {
        &self.radiance
    }

    /// ∫ R cos θ_z dΩ over the dome.
    pub fn horizontal_integral(&self) -> f64 {
        horizontal_sum(&self.radiance)
    }
}

fn horizontal_sum(values: &[f64]) -> f64 {
    values
        .chunks_exact(AZIMUTH_CELLS)
        .enumerate()
        .map(|(j, row)| {
            let w = (j as f64 + 0.5).to_radians().sin() * cell_solid_angle(j);
            w * row.iter().sum::<f64>()
        })
        .sum()
}
