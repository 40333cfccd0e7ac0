//! Beam/diffuse decomposition and transposition onto the faces of a vertical
//! bifacial plane.
//!
//! Diffuse irradiance on a tilted surface follows the Perez 1990 model with
//! the all-sites composite coefficient set. Missing diffuse horizontal
//! irradiance is estimated with the Erbs hourly clearness-index regression,
//! and the diffuse share of PAR with a cubic correlation in the broadband
//! diffuse fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solar::{direction_vector, extraterrestrial_normal, incidence_angle, SolarPosition};

/// Default ground reflectance.
pub const DEFAULT_ALBEDO: f64 = 0.2;

/// Lower clamp on the zenith cosine used by the circumsolar term.
const COS_85: f64 = 0.087_155_742_747_658_18;

const PEREZ_KAPPA: f64 = 1.041;

const EPSILON_BINS: [f64; 7] = [1.065, 1.23, 1.5, 1.95, 2.8, 4.5, 6.2];

const PEREZ_F1: [[f64; 3]; 8] = [
    [-0.008, 0.588, -0.062],
    [0.130, 0.683, -0.151],
    [0.330, 0.487, -0.221],
    [0.568, 0.187, -0.295],
    [0.873, -0.392, -0.362],
    [1.132, -1.237, -0.412],
    [1.060, -1.600, -0.359],
    [0.678, -0.327, -0.250],
];

const PEREZ_F2: [[f64; 3]; 8] = [
    [-0.060, 0.072, -0.022],
    [-0.019, 0.066, -0.029],
    [0.055, -0.064, -0.026],
    [0.109, -0.152, -0.014],
    [0.226, -0.462, 0.001],
    [0.288, -0.823, 0.056],
    [0.264, -1.127, 0.131],
    [0.156, -1.377, 0.251],
];

/// Diffuse sky model used by [`transpose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffuseModel {
    #[default]
    Perez,
    Isotropic,
}

/// Which side of a bifacial module a [`PlaneIrradiance`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Front,
    Rear,
}

/// Unshaded irradiance components on one face, W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneIrradiance {
    pub i_beam: f64,
    pub i_diffuse: f64,
    pub i_reflected: f64,
    pub face: Face,
}

impl PlaneIrradiance {
    pub fn total(&self) -> f64 {
        self.i_beam + self.i_diffuse + self.i_reflected
    }
}

/// Beam and diffuse shares of horizontal PAR, W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParSplit {
    pub par_beam: f64,
    pub par_diffuse: f64,
}

/// Horizontal irradiance of one hour split into consistent beam and diffuse
/// parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkyConditions {
    pub ghi: f64,
    /// Diffuse horizontal irradiance after the beam cap, W/m².
    pub dhi: f64,
    /// Direct normal irradiance, W/m².
    pub dni: f64,
    /// Extraterrestrial normal irradiance, W/m².
    pub dni_extra: f64,
    pub sun: SolarPosition,
}

impl SkyConditions {
    /// Splits `ghi` into beam and diffuse. Direct normal irradiance is capped
    /// at the extraterrestrial value; any excess is moved to the diffuse part
    /// so that `dni·sin α + dhi = ghi` holds exactly.
    pub fn from_horizontal(ghi: f64, dhi: f64, sun: SolarPosition, day_of_year: f64) -> Self {
        let dni_extra = extraterrestrial_normal(day_of_year);
        let ghi = ghi.max(0.0);
        let dhi = dhi.clamp(0.0, ghi);
        let sin_alt = sun.altitude.to_radians().sin();
        if sin_alt <= 0.0 {
            return Self {
                ghi,
                dhi: ghi,
                dni: 0.0,
                dni_extra,
                sun,
            };
        }
        let dni = ((ghi - dhi) / sin_alt).min(dni_extra).max(0.0);
        Self {
            ghi,
            dhi: (ghi - dni * sin_alt).max(0.0),
            dni,
            dni_extra,
            sun,
        }
    }

    /// Beam irradiance on the horizontal, W/m².
    pub fn beam_horizontal(&self) -> f64 {
        self.dni * self.sun.altitude.to_radians().sin().max(0.0)
    }

    /// Kasten–Young relative optical air mass; `None` below the horizon.
    pub fn airmass(&self) -> Option<f64> {
        relative_airmass(self.sun.zenith())
    }
}

/// Kasten–Young relative air mass for a zenith angle in degrees.
pub fn relative_airmass(zenith: f64) -> Option<f64> {
    (zenith < 90.0).then(|| {
        1.0 / (zenith.to_radians().cos() + 0.50572 * (96.07995 - zenith).powf(-1.6364))
    })
}

/// Estimates diffuse horizontal irradiance from `ghi` with the Erbs hourly
/// regression on the clearness index.
pub fn diffuse_fraction_ghi(ghi: f64, sun: SolarPosition, day_of_year: f64) -> f64 {
    if ghi <= 0.0 {
        return 0.0;
    }
    let sin_alt = sun.altitude.to_radians().sin();
    if sin_alt <= 0.0 {
        return ghi;
    }
    let kt = (ghi / (extraterrestrial_normal(day_of_year) * sin_alt)).clamp(0.0, 1.0);
    ghi * erbs_fraction(kt)
}

/// Diffuse fraction as a function of the hourly clearness index.
pub fn erbs_fraction(kt: f64) -> f64 {
    let d = if kt <= 0.22 {
        1.0 - 0.09 * kt
    } else if kt <= 0.8 {
        0.9511 - 0.1604 * kt + 4.388 * kt.powi(2) - 16.638 * kt.powi(3) + 12.336 * kt.powi(4)
    } else {
        0.165
    };
    d.clamp(0.0, 1.0)
}

/// Splits horizontal PAR into beam and diffuse parts using the broadband
/// diffuse fraction `q = dhi/ghi`: `f = q·(1 + 0.3·(1 − q²))`.
pub fn diffuse_fraction_par(par: f64, ghi: f64, dhi: f64, sun: SolarPosition) -> Result<ParSplit> {
    if par <= 0.0 {
        return Ok(ParSplit {
            par_beam: 0.0,
            par_diffuse: 0.0,
        });
    }
    if ghi <= 0.0 {
        return Err(Error::Inconsistent(format!(
            "PAR {par} W/m² with zero global irradiance"
        )));
    }
    let f = if sun.altitude <= 0.0 {
        1.0
    } else {
        par_diffuse_fraction(dhi / ghi)
    };
    let par_diffuse = f * par;
    Ok(ParSplit {
        par_beam: par - par_diffuse,
        par_diffuse,
    })
}

/// Diffuse PAR fraction for a broadband diffuse fraction `q`.
pub fn par_diffuse_fraction(q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    (q * (1.0 + 0.3 * (1.0 - q * q))).clamp(0.0, 1.0)
}

/// Perez 1990 sky-diffuse irradiance on a tilted plane. Angles in degrees,
/// azimuths canonical.
#[allow(clippy::too_many_arguments)]
pub fn perez_sky_diffuse(
    tilt: f64,
    surface_azimuth: f64,
    dhi: f64,
    dni: f64,
    dni_extra: f64,
    zenith: f64,
    sun_azimuth: f64,
    airmass: f64,
) -> f64 {
    if dhi <= 0.0 {
        return 0.0;
    }
    let z = zenith.to_radians();
    let kz3 = PEREZ_KAPPA * z.powi(3);
    let epsilon = ((dhi + dni) / dhi + kz3) / (1.0 + kz3);
    let delta = dhi * airmass / dni_extra;
    let bin = EPSILON_BINS.partition_point(|&edge| edge <= epsilon);
    let [f11, f12, f13] = PEREZ_F1[bin];
    let [f21, f22, f23] = PEREZ_F2[bin];
    let f1 = (f11 + f12 * delta + f13 * z).max(0.0);
    let f2 = f21 + f22 * delta + f23 * z;
    let sun = direction_vector(90.0 - zenith, sun_azimuth);
    let a = incidence_angle(&sun, tilt, surface_azimuth)
        .to_radians()
        .cos()
        .max(0.0);
    let b = z.cos().max(COS_85);
    let beta = tilt.to_radians();
    let sky = dhi
        * ((1.0 - f1) * 0.5 * (1.0 + beta.cos()) + f1 * a / b + f2 * beta.sin());
    sky.max(0.0)
}

/// Unshaded irradiance on a surface of the given tilt and canonical azimuth.
pub fn transpose(
    sky: &SkyConditions,
    tilt: f64,
    azimuth: f64,
    albedo: f64,
    model: DiffuseModel,
    face: Face,
) -> PlaneIrradiance {
    let beta = tilt.to_radians();
    let i_reflected = albedo * sky.ghi * 0.5 * (1.0 - beta.cos());
    let isotropic = sky.dhi * 0.5 * (1.0 + beta.cos());
    let airmass = sky.airmass();
    let (i_beam, i_diffuse) = match airmass {
        Some(am) if sky.sun.altitude > 0.0 => {
            let sun = direction_vector(sky.sun.altitude, sky.sun.azimuth);
            let cos_theta = incidence_angle(&sun, tilt, azimuth).to_radians().cos();
            let beam = (sky.dni * cos_theta).max(0.0);
            let diffuse = match model {
                DiffuseModel::Perez => perez_sky_diffuse(
                    tilt,
                    azimuth,
                    sky.dhi,
                    sky.dni,
                    sky.dni_extra,
                    sky.sun.zenith(),
                    sky.sun.azimuth,
                    am,
                ),
                DiffuseModel::Isotropic => isotropic,
            };
            (beam, diffuse)
        }
        _ => (0.0, isotropic),
    };
    PlaneIrradiance {
        i_beam,
        i_diffuse,
        i_reflected,
        face,
    }
}

/// Front and rear irradiance of a vertical module row whose front face looks
/// towards `azimuth`.
pub fn bifacial_plane_irradiance(
    sky: &SkyConditions,
    azimuth: f64,
    albedo: f64,
    model: DiffuseModel,
) -> (PlaneIrradiance, PlaneIrradiance) {
    (
        transpose(sky, 90.0, azimuth, albedo, model, Face::Front),
        transpose(sky, 90.0, azimuth + 180.0, albedo, model, Face::Rear),
    )
}
