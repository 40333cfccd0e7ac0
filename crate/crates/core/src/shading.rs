//! Beam shading of the crop strip and of the module faces by the PV rows,
//! 1°-resolution shading matrices with nearest-cell lookup, and the diffuse
//! shading integral over the anisotropic sky.
//!
//! Geometry is expressed in a row frame: `v` is the horizontal direction of
//! the front-face normal, `u` runs along the rows and `z` is up. Row `k`
//! stands in the plane `v = k·d`, spans `u ∈ [0, L]` and `z ∈ [gap, gap + H]`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::irradiance::PlaneIrradiance;
use crate::polygon::{self, Rect};
use crate::sky::{
    cell_center, cell_directions, cell_index, cell_solid_angle, locate, SkyRadianceField,
    ALTITUDE_CELLS, AZIMUTH_CELLS, DOME_CELLS,
};
use crate::solar::{direction_vector, surface_normal, SolarPosition, SolarVector};
use crate::weather::HorizonProfile;

/// How the stacked module rows of one structure are oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Long module edge horizontal.
    #[default]
    Landscape,
    /// Long module edge vertical.
    Portrait,
}

/// Array geometry plus the two design variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub n_rows: usize,
    /// Modules in one row structure, all stacked sub-rows included.
    pub modules_per_row: usize,
    /// Module sub-rows stacked vertically per structure.
    pub stack_count: usize,
    /// Long module edge, m.
    pub module_width: f64,
    /// Short module edge, m.
    pub module_height: f64,
    pub orientation: Orientation,
    /// Height of the lower panel edge above ground, m.
    pub mounting_gap: f64,
    /// Canonical azimuth the front faces look towards, degrees.
    pub panel_azimuth: f64,
    /// Axis-to-axis row distance, m.
    pub row_distance: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_rows: 3,
            modules_per_row: 20,
            stack_count: 2,
            module_width: 1.974,
            module_height: 0.992,
            orientation: Orientation::Landscape,
            mounting_gap: 0.8,
            panel_azimuth: -90.0,
            row_distance: 10.0,
        }
    }
}

impl SceneConfig {
    pub fn with_design(mut self, panel_azimuth: f64, row_distance: f64) -> Self {
        self.panel_azimuth = panel_azimuth;
        self.row_distance = row_distance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("module_width", self.module_width),
            ("module_height", self.module_height),
            ("row_distance", self.row_distance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("scene.{name} must be positive, got {v}")));
            }
        }
        if !(self.mounting_gap.is_finite() && self.mounting_gap >= 0.0) {
            return Err(Error::Config("scene.mounting_gap must be non-negative".into()));
        }
        if !self.panel_azimuth.is_finite() {
            return Err(Error::Config("scene.panel_azimuth must be finite".into()));
        }
        if self.stack_count == 0 || self.modules_per_row == 0 {
            return Err(Error::Config(
                "scene.stack_count and scene.modules_per_row must be positive".into(),
            ));
        }
        if !self.modules_per_row.is_multiple_of(self.stack_count) {
            return Err(Error::Config(format!(
                "scene.modules_per_row ({}) is not divisible by scene.stack_count ({})",
                self.modules_per_row, self.stack_count
            )));
        }
        Ok(())
    }

    /// Row length L, m.
    pub fn row_length(&self) -> f64 {
        let across = (self.modules_per_row / self.stack_count.max(1)) as f64;
        match self.orientation {
            Orientation::Landscape => across * self.module_width,
            Orientation::Portrait => across * self.module_height,
        }
    }

    /// Height H of the module area of one structure, m.
    pub fn panel_height(&self) -> f64 {
        let stack = self.stack_count as f64;
        match self.orientation {
            Orientation::Landscape => stack * self.module_height,
            Orientation::Portrait => stack * self.module_width,
        }
    }

    /// Height of the upper panel edge, m.
    pub fn top_height(&self) -> f64 {
        self.mounting_gap + self.panel_height()
    }

    pub fn total_modules(&self) -> usize {
        self.n_rows * self.modules_per_row
    }

    /// Ground area attributed to the array, m².
    pub fn land_area(&self) -> f64 {
        self.n_rows as f64 * self.row_distance * self.row_length()
    }

    /// Lower boundary of the reference crop strip in the row frame.
    fn strip_start(&self) -> f64 {
        (self.n_rows.saturating_sub(1) / 2) as f64 * self.row_distance
    }

    /// Hex SHA-256 digest of every field that affects shading.
    pub fn geometry_hash(&self) -> String {
        let canonical = format!(
            "n_rows={};modules_per_row={};stack_count={};module_width={:?};module_height={:?};\
             orientation={:?};mounting_gap={:?};panel_azimuth={:?};row_distance={:?}",
            self.n_rows,
            self.modules_per_row,
            self.stack_count,
            self.module_width,
            self.module_height,
            self.orientation,
            self.mounting_gap,
            self.panel_azimuth,
            self.row_distance
        );
        hex_digest(canonical.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Sun vector components in the row frame.
#[derive(Debug, Clone, Copy)]
struct RowFrame {
    s_u: f64,
    s_v: f64,
    s_z: f64,
}

impl RowFrame {
    fn new(scene: &SceneConfig, vec: &SolarVector) -> Self {
        let (sp, cp) = scene.panel_azimuth.to_radians().sin_cos();
        Self {
            s_u: vec.south * sp + vec.east * cp,
            s_v: vec.south * cp - vec.east * sp,
            s_z: vec.zenith,
        }
    }
}

/// Which surface a beam shading factor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// Central inter-row crop strip.
    Ground,
    PanelFront,
    PanelRear,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Ground => "ground",
            Target::PanelFront => "front",
            Target::PanelRear => "rear",
        }
    }
}

/// Fraction of the central crop strip in beam shadow. Returns 1 when the sun
/// is at or below the horizon.
pub fn beam_shading_ground(scene: &SceneConfig, vec: &SolarVector) -> f64 {
    if scene.n_rows == 0 {
        return 0.0;
    }
    let f = RowFrame::new(scene, vec);
    if f.s_z <= 0.0 {
        return 1.0;
    }
    let (l, d) = (scene.row_length(), scene.row_distance);
    let (gap, top) = (scene.mounting_gap, scene.top_height());
    let v0 = scene.strip_start();
    let strip = polygon::rectangle(0.0, l, v0, v0 + d);
    let (du, dv) = (f.s_u / f.s_z, f.s_v / f.s_z);
    let shadows: Vec<Vec<polygon::Point>> = (0..scene.n_rows)
        .filter_map(|k| {
            let v = k as f64 * d;
            let project = |u: f64, z: f64| [u - du * z, v - dv * z];
            let quad = polygon::counter_clockwise(vec![
                project(0.0, gap),
                project(l, gap),
                project(l, top),
                project(0.0, top),
            ]);
            let clipped = polygon::clip_convex(&quad, &strip);
            (polygon::area(&clipped) > 0.0).then_some(clipped)
        })
        .collect();
    (polygon::union_area(&shadows) / (l * d)).clamp(0.0, 1.0)
}

/// Fraction of the given module face, averaged over all rows, shadowed by
/// neighboring rows. Zero when the sun does not illuminate that face.
pub fn beam_shading_panel(scene: &SceneConfig, vec: &SolarVector, target: Target) -> f64 {
    let f = RowFrame::new(scene, vec);
    let lit = match target {
        Target::PanelFront => f.s_v > 0.0,
        Target::PanelRear => f.s_v < 0.0,
        Target::Ground => panic!("beam_shading_panel called for the ground target"),
    };
    if scene.n_rows < 2 || f.s_z <= 0.0 || !lit {
        return 0.0;
    }
    let (l, d) = (scene.row_length(), scene.row_distance);
    let (gap, top) = (scene.mounting_gap, scene.top_height());
    let face = Rect {
        x0: 0.0,
        x1: l,
        y0: gap,
        y1: top,
    };
    let mut total = 0.0;
    let mut rects = Vec::with_capacity(scene.n_rows);
    for k in 0..scene.n_rows {
        rects.clear();
        for j in 0..scene.n_rows {
            let t = (j as f64 - k as f64) * d / f.s_v;
            if j == k || t <= 0.0 {
                continue;
            }
            let shifted = Rect {
                x0: -t * f.s_u,
                x1: l - t * f.s_u,
                y0: gap - t * f.s_z,
                y1: top - t * f.s_z,
            };
            if let Some(r) = shifted.intersection(&face) {
                rects.push(r);
            }
        }
        total += polygon::rect_union_area(&rects) / face.area();
    }
    (total / scene.n_rows as f64).clamp(0.0, 1.0)
}

/// Beam shading factor of `target` for a sun direction.
pub fn beam_shading(scene: &SceneConfig, vec: &SolarVector, target: Target) -> f64 {
    match target {
        Target::Ground => beam_shading_ground(scene, vec),
        _ => beam_shading_panel(scene, vec, target),
    }
}

/// Result of a shading-matrix query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShadeLookup {
    Value(f64),
    /// Sun below the horizon profile; the beam must be zeroed.
    Masked,
}

/// Beam shading factors at every dome cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingMatrix {
    pub target: Target,
    values: Vec<f64>,
    masked: Vec<bool>,
}

impl ShadingMatrix {
    /// Evaluates the beam shading operation at every cell center. Cells
    /// whose center lies at or below the horizon profile are masked and
    /// hold 0.
    pub fn build(scene: &SceneConfig, target: Target, horizon: &HorizonProfile) -> Self {
        let masked = horizon_mask(horizon);
        let values = (0..DOME_CELLS)
            .into_par_iter()
            .map(|c| {
                if masked[c] {
                    return 0.0;
                }
                let (alt, az) = cell_center(c);
                beam_shading(scene, &direction_vector(alt, az), target)
            })
            .collect();
        Self {
            target,
            values,
            masked,
        }
    }

    /// Matrix from explicit cell values, altitude-major.
    pub fn from_values(target: Target, values: Vec<f64>, masked: Vec<bool>) -> Result<Self> {
        if values.len() != DOME_CELLS || masked.len() != DOME_CELLS {
            return Err(Error::Structure(format!(
                "shading matrix needs {DOME_CELLS} cells"
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("shading factor outside [0, 1]".into()));
        }
        let values = values
            .into_iter()
            .zip(&masked)
            .map(|(v, &m)| if m { 0.0 } else { v })
            .collect();
        Ok(Self {
            target,
            values,
            masked,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masked(&self) -> &[bool] {
        &self.masked
    }

    pub fn value(&self, azimuth_col: usize, altitude_row: usize) -> f64 {
        self.values[cell_index(azimuth_col, altitude_row)]
    }

    /// Nearest-cell shading factor at a sun position.
    pub fn lookup(&self, pos: &SolarPosition) -> ShadeLookup {
        match locate(pos.altitude, pos.azimuth) {
            Some(c) if !self.masked[c] => ShadeLookup::Value(self.values[c]),
            _ => ShadeLookup::Masked,
        }
    }

    /// Writes the matrix as text: a header line recording `key`, then one
    /// line per altitude row with `nan` for masked cells.
    pub fn save(&self, path: impl AsRef<Path>, key: &str) -> Result<()> {
        let path = path.as_ref();
        let mut out = format!(
            "# shading-matrix key={key} target={} cells={}x{}\n",
            self.target.name(),
            AZIMUTH_CELLS,
            ALTITUDE_CELLS
        );
        for j in 0..ALTITUDE_CELLS {
            let row: Vec<String> = (0..AZIMUTH_CELLS)
                .map(|i| {
                    let c = cell_index(i, j);
                    if self.masked[c] {
                        "nan".to_string()
                    } else {
                        self.values[c].to_string()
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a matrix written by [`ShadingMatrix::save`]. Returns `Ok(None)`
    /// when the file is absent or was written for a different key.
    pub fn load(path: impl AsRef<Path>, key: &str, target: Target) -> Result<Option<Self>> {
        let path = path.as_ref();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut lines = text.lines();
        let expected = format!(
            "# shading-matrix key={key} target={} cells={}x{}",
            target.name(),
            AZIMUTH_CELLS,
            ALTITUDE_CELLS
        );
        if lines.next() != Some(expected.as_str()) {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(DOME_CELLS);
        let mut masked = Vec::with_capacity(DOME_CELLS);
        for (n, line) in lines.enumerate() {
            for field in line.split(',') {
                let parse_error = || Error::Parse {
                    path: path.to_path_buf(),
                    line: n as u64 + 2,
                    message: format!("invalid shading factor {field:?}"),
                };
                if field == "nan" {
                    values.push(0.0);
                    masked.push(true);
                } else {
                    values.push(field.parse::<f64>().map_err(|_| parse_error())?);
                    masked.push(false);
                }
            }
        }
        Self::from_values(target, values, masked).map(Some)
    }

    /// Loads a cached matrix from `dir` or builds and stores it.
    pub fn cached(
        dir: impl AsRef<Path>,
        scene: &SceneConfig,
        target: Target,
        horizon: &HorizonProfile,
    ) -> Result<Self> {
        let dir = dir.as_ref();
        let key = matrix_key(scene, horizon);
        let path = dir.join(format!("{}_{}.csv", &key[..16], target.name()));
        if let Some(m) = Self::load(&path, &key, target)? {
            return Ok(m);
        }
        let m = Self::build(scene, target, horizon);
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        m.save(&path, &key)?;
        Ok(m)
    }
}

/// Cache key covering the scene geometry and the horizon profile.
pub fn matrix_key(scene: &SceneConfig, horizon: &HorizonProfile) -> String {
    let mut s = scene.geometry_hash();
    for (az, el) in horizon.samples() {
        let _ = write!(s, ";{az:?}:{el:?}");
    }
    hex_digest(s.as_bytes())
}

/// Cells whose center lies at or below the horizon profile.
pub fn horizon_mask(horizon: &HorizonProfile) -> Vec<bool> {
    (0..DOME_CELLS)
        .map(|c| {
            let (alt, az) = cell_center(c);
            alt <= horizon.elevation_at(az)
        })
        .collect()
}

/// Diffuse shading factor of a surface: the radiance- and
/// incidence-weighted mean of the beam shading factors over the visible
/// sky cells.
pub fn diffuse_shading(
    matrix: &ShadingMatrix,
    radiance: &SkyRadianceField,
    tilt: f64,
    azimuth: f64,
) -> Result<f64> {
    let normal = surface_normal(tilt, azimuth);
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, dir) in cell_directions().iter().enumerate() {
        if matrix.masked[c] {
            continue;
        }
        let cos_theta = dir.dot(&normal);
        if cos_theta <= 0.0 {
            continue;
        }
        let w = radiance.values()[c] * cos_theta * cell_solid_angle(c / AZIMUTH_CELLS);
        num += matrix.values[c] * w;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::Numerical(
            "no visible sky radiance for diffuse shading".into(),
        ));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Beam, diffuse and irradiance-weighted total shading of one surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadeSample {
    pub s_f_beam: f64,
    pub s_f_diffuse: f64,
    pub s_f_total: f64,
}

/// Combines beam and diffuse shading factors with the unshaded irradiance
/// components; reflected irradiance is never shaded.
pub fn composite_shading(s_f_beam: f64, s_f_diffuse: f64, plane: &PlaneIrradiance) -> ShadeSample {
    let total = plane.i_beam + plane.i_diffuse + plane.i_reflected;
    let s_f_total = if total > 0.0 {
        ((s_f_beam * plane.i_beam + s_f_diffuse * plane.i_diffuse) / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ShadeSample {
        s_f_beam,
        s_f_diffuse,
        s_f_total,
    }
}

impl ShadeSample {
    /// Irradiance remaining after shading, W/m².
    pub fn shaded_irradiance(&self, plane: &PlaneIrradiance) -> f64 {
        plane.i_beam * (1.0 - self.s_f_beam)
            + plane.i_diffuse * (1.0 - self.s_f_diffuse)
            + plane.i_reflected
    }
}

const LANES: usize = 8;

/// Precomputed per-hour sky weights for evaluating diffuse shading factors
/// of the crop strip and both faces of vertical rows for many scenes.
///
/// For each hour the weight of cell `c` is `R(c) · cos α · dΩ` (zero for
/// masked cells). Horizontal incidence multiplies this by `tan α`; a
/// vertical face looking towards `ψ` multiplies it by `max(0, cos(γ − ψ))`.
pub struct SkyWeights {
    weights: Vec<f32>,
    column_sums: Vec<f64>,
    ground_den: Vec<f64>,
    hours: usize,
}

/// Diffuse shading factors of one hour.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffuseFactors {
    pub ground: f64,
    pub front: f64,
    pub rear: f64,
}

impl SkyWeights {
    /// Builds weights from one radiance field per hour.
    pub fn new<'a>(
        fields: impl IntoIterator<Item = &'a SkyRadianceField>,
        mask: &[bool],
    ) -> Self {
        let cos_dw: Vec<f64> = (0..ALTITUDE_CELLS)
            .map(|j| (j as f64 + 0.5).to_radians().cos() * cell_solid_angle(j))
            .collect();
        let tan: Vec<f64> = (0..ALTITUDE_CELLS)
            .map(|j| (j as f64 + 0.5).to_radians().tan())
            .collect();
        let mut weights = Vec::new();
        let mut column_sums = Vec::new();
        let mut ground_den = Vec::new();
        let mut hours = 0;
        for field in fields {
            let mut cols = vec![0.0f64; AZIMUTH_CELLS];
            let mut g = 0.0;
            for c in 0..DOME_CELLS {
                let j = c / AZIMUTH_CELLS;
                let w = if mask[c] {
                    0.0
                } else {
                    field.values()[c] * cos_dw[j]
                };
                let w32 = w as f32;
                weights.push(w32);
                cols[c % AZIMUTH_CELLS] += w32 as f64;
                g += w32 as f64 * tan[j];
            }
            column_sums.extend_from_slice(&cols);
            ground_den.push(g);
            hours += 1;
        }
        Self {
            weights,
            column_sums,
            ground_den,
            hours,
        }
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    /// Diffuse shading factors of every hour for the given matrices; the
    /// face matrices belong to rows whose front looks towards
    /// `panel_azimuth`.
    pub fn evaluate(
        &self,
        ground: &ShadingMatrix,
        front: &ShadingMatrix,
        rear: &ShadingMatrix,
        panel_azimuth: f64,
    ) -> Vec<DiffuseFactors> {
        let face_cos: Vec<f64> = (0..AZIMUTH_CELLS)
            .map(|i| (cell_center(i).1 - panel_azimuth).to_radians().cos())
            .collect();
        let targets = [
            scaled(ground, |c| {
                (cell_center(c).0).to_radians().tan()
            }),
            scaled(front, |c| face_cos[c % AZIMUTH_CELLS].max(0.0)),
            scaled(rear, |c| (-face_cos[c % AZIMUTH_CELLS]).max(0.0)),
        ];
        let active_rows: Vec<usize> = (0..ALTITUDE_CELLS)
            .filter(|&j| {
                let r = j * AZIMUTH_CELLS..(j + 1) * AZIMUTH_CELLS;
                targets.iter().any(|t| t[r.clone()].iter().any(|&v| v != 0.0))
            })
            .collect();
        (0..self.hours)
            .into_par_iter()
            .map(|h| {
                let base = &self.weights[h * DOME_CELLS..(h + 1) * DOME_CELLS];
                let mut num = [0.0f64; 3];
                for &j in &active_rows {
                    let r = j * AZIMUTH_CELLS..(j + 1) * AZIMUTH_CELLS;
                    let b = &base[r.clone()];
                    for (k, t) in targets.iter().enumerate() {
                        num[k] += dot_lanes(b, &t[r.clone()]);
                    }
                }
                let cols = &self.column_sums[h * AZIMUTH_CELLS..(h + 1) * AZIMUTH_CELLS];
                let (mut den_f, mut den_r) = (0.0, 0.0);
                for (i, &s) in cols.iter().enumerate() {
                    den_f += face_cos[i].max(0.0) * s;
                    den_r += (-face_cos[i]).max(0.0) * s;
                }
                let ratio = |n: f64, d: f64| if d > 0.0 { (n / d).clamp(0.0, 1.0) } else { 0.0 };
                DiffuseFactors {
                    ground: ratio(num[0], self.ground_den[h]),
                    front: ratio(num[1], den_f),
                    rear: ratio(num[2], den_r),
                }
            })
            .collect()
    }
}

fn scaled(matrix: &ShadingMatrix, factor: impl Fn(usize) -> f64) -> Vec<f32> {
    (0..DOME_CELLS)
        .map(|c| {
            if matrix.masked[c] {
                0.0
            } else {
                (matrix.values[c] * factor(c)) as f32
            }
        })
        .collect()
}

#[inline]
pub(crate) fn dot_lanes(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f32; LANES];
    let chunks = a.len() / LANES;
    for k in 0..chunks {
        let (x, y) = (&a[k * LANES..(k + 1) * LANES], &b[k * LANES..(k + 1) * LANES]);
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s: f64 = acc.iter().map(|&v| v as f64).sum();
    for k in chunks * LANES..a.len() {
        s += (a[k] * b[k]) as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irradiance::{Face, SkyConditions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scene(azimuth: f64, d: f64) -> SceneConfig {
        SceneConfig::default().with_design(azimuth, d)
    }

    /// Does a ray from `p` towards the sun hit any row rectangle (other than
    /// `skip`)?
    fn ray_blocked(scene: &SceneConfig, f: &RowFrame, p: [f64; 3], skip: Option<usize>) -> bool {
        (0..scene.n_rows).any(|k| {
            if Some(k) == skip || f.s_v == 0.0 {
                return false;
            }
            let t = (k as f64 * scene.row_distance - p[1]) / f.s_v;
            if t <= 0.0 {
                return false;
            }
            let u = p[0] + t * f.s_u;
            let z = p[2] + t * f.s_z;
            (0.0..=scene.row_length()).contains(&u)
                && (scene.mounting_gap..=scene.top_height()).contains(&z)
        })
    }

    fn ground_oracle(scene: &SceneConfig, vec: &SolarVector, samples: usize) -> f64 {
        let f = RowFrame::new(scene, vec);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v0 = scene.strip_start();
        let hits = (0..samples)
            .filter(|_| {
                let p = [
                    rng.random::<f64>() * scene.row_length(),
                    v0 + rng.random::<f64>() * scene.row_distance,
                    0.0,
                ];
                ray_blocked(scene, &f, p, None)
            })
            .count();
        hits as f64 / samples as f64
    }

    fn panel_oracle(scene: &SceneConfig, vec: &SolarVector, samples: usize) -> f64 {
        let f = RowFrame::new(scene, vec);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let hits = (0..samples)
            .filter(|_| {
                let k = rng.random_range(0..scene.n_rows);
                let p = [
                    rng.random::<f64>() * scene.row_length(),
                    k as f64 * scene.row_distance,
                    scene.mounting_gap + rng.random::<f64>() * scene.panel_height(),
                ];
                ray_blocked(scene, &f, p, Some(k))
            })
            .count();
        hits as f64 / samples as f64
    }

    #[test]
    fn default_geometry() {
        let s = SceneConfig::default();
        assert!((s.row_length() - 19.74).abs() < 1e-12);
        assert!((s.panel_height() - 1.984).abs() < 1e-12);
        assert!((s.top_height() - 2.784).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn zenith_sun_casts_no_ground_shadow() {
        let v = SolarVector { south: 0.0, east: 0.0, zenith: 1.0 };
        assert_eq!(beam_shading_ground(&scene(-90.0, 10.0), &v), 0.0);
    }

    #[test]
    fn shadow_length_oracle() {
        let h = 2.5;
        let s = SceneConfig {
            n_rows: 1,
            mounting_gap: 0.0,
            stack_count: 1,
            module_height: h,
            ..scene(-90.0, 6.0)
        };
        // Sun normal to the row, behind it, at 45° altitude.
        let v = direction_vector(45.0, 90.0);
        assert!((beam_shading_ground(&s, &v) - h / 6.0).abs() < 1e-12);
        // Strip width equal to the shadow length.
        let s = SceneConfig { row_distance: h, ..s };
        assert!((beam_shading_ground(&s, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shadow_along_rows_matches_ray_sampling() {
        let s = scene(-90.0, 6.0);
        // Panels face East; a sun towards the North-North-West runs almost
        // parallel to the rows.
        for az in [178.0, 170.0, -175.0, 160.0] {
            let v = direction_vector(6.0, az);
            let exact = beam_shading_ground(&s, &v);
            let mc = ground_oracle(&s, &v, 40_000);
            assert!((exact - mc).abs() < 0.02, "az {az}: {exact} vs {mc}");
        }
    }

    #[test]
    fn ground_matches_ray_sampling_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = scene(rng.random_range(-180.0..0.0), rng.random_range(5.0..20.0));
            let v = direction_vector(rng.random_range(3.0..70.0), rng.random_range(-180.0..180.0));
            let exact = beam_shading_ground(&s, &v);
            let mc = ground_oracle(&s, &v, 20_000);
            assert!((exact - mc).abs() < 0.02, "{exact} vs {mc}");
        }
    }

    #[test]
    fn panel_clear_when_shadow_short() {
        let s = scene(-90.0, 20.0);
        let v = direction_vector(30.0, -90.0);
        assert_eq!(beam_shading_panel(&s, &v, Target::PanelFront), 0.0);
        assert_eq!(beam_shading_panel(&s, &v, Target::PanelRear), 0.0);
    }

    #[test]
    fn panel_shading_just_below_clearance_angle() {
        let s = SceneConfig {
            n_rows: 2,
            ..scene(-90.0, 5.0)
        };
        // The shadow of the neighbor's upper edge reaches the face once
        // tan α < H / d.
        let clearance = (s.panel_height() / s.row_distance).atan().to_degrees();
        let v = direction_vector(clearance - 2.0, -90.0);
        let exact = beam_shading_panel(&s, &v, Target::PanelFront);
        assert!(exact > 0.0);
        let mc = panel_oracle(&s, &v, 40_000);
        assert!((exact - mc).abs() < 0.02, "{exact} vs {mc}");
    }

    #[test]
    fn panel_matches_ray_sampling_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = scene(rng.random_range(-180.0..0.0), rng.random_range(5.0..12.0));
            let v = direction_vector(rng.random_range(2.0..25.0), rng.random_range(-180.0..180.0));
            for target in [Target::PanelFront, Target::PanelRear] {
                let exact = beam_shading_panel(&s, &v, target);
                let f = RowFrame::new(&s, &v);
                let lit = (target == Target::PanelFront) == (f.s_v > 0.0);
                if lit {
                    let mc = panel_oracle(&s, &v, 20_000);
                    assert!((exact - mc).abs() < 0.02, "{exact} vs {mc}");
                } else {
                    assert_eq!(exact, 0.0);
                }
            }
        }
    }

    #[test]
    fn matrix_range_and_empty_scene() {
        let h = HorizonProfile::flat();
        let m = ShadingMatrix::build(&scene(-90.0, 8.0), Target::Ground, &h);
        assert!(m.values().iter().all(|v| (0.0..=1.0).contains(v)));
        for i in 0..AZIMUTH_CELLS {
            assert!(m.value(i, 89) < 0.01);
        }
        let empty = SceneConfig {
            n_rows: 0,
            ..scene(-90.0, 8.0)
        };
        for target in [Target::Ground, Target::PanelFront, Target::PanelRear] {
            let m = ShadingMatrix::build(&empty, target, &h);
            assert!(m.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn matrix_build_is_deterministic() {
        let h = HorizonProfile::new(vec![(0.0, 3.0), (180.0, 8.0)]).unwrap();
        let a = ShadingMatrix::build(&scene(-40.0, 7.3), Target::PanelFront, &h);
        let b = ShadingMatrix::build(&scene(-40.0, 7.3), Target::PanelFront, &h);
        assert_eq!(a, b);
        assert!(a.masked().iter().any(|&m| m));
    }

    #[test]
    fn lookup_hits_cell_and_rounds() {
        let m = ShadingMatrix::build(&scene(-90.0, 5.0), Target::Ground, &HorizonProfile::flat());
        let c = cell_index(100, 10);
        let (alt, az) = cell_center(c);
        for (da, dz) in [(0.0, 0.0), (0.49, 0.49), (-0.49, -0.49)] {
            assert_eq!(
                m.lookup(&SolarPosition::new(alt + da, az + dz)),
                ShadeLookup::Value(m.values()[c])
            );
        }
        assert_eq!(m.lookup(&SolarPosition::new(-1.0, 0.0)), ShadeLookup::Masked);
        let walled = ShadingMatrix::build(
            &scene(-90.0, 5.0),
            Target::Ground,
            &HorizonProfile::new(vec![(0.0, 20.0)]).unwrap(),
        );
        assert_eq!(walled.lookup(&SolarPosition::new(15.2, 3.0)), ShadeLookup::Masked);
    }

    #[test]
    fn lookup_fidelity() {
        let s = scene(-60.0, 7.0);
        let h = HorizonProfile::flat();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for target in [Target::Ground, Target::PanelFront] {
            let m = ShadingMatrix::build(&s, target, &h);
            let (mut abs, mut n) = (0.0, 0);
            for _ in 0..500 {
                let pos = SolarPosition::new(rng.random_range(1.0..89.0), rng.random_range(-180.0..180.0));
                let direct = beam_shading(&s, &direction_vector(pos.altitude, pos.azimuth), target);
                if let ShadeLookup::Value(v) = m.lookup(&pos) {
                    abs += (v - direct).abs();
                    n += 1;
                }
            }
            assert!(abs / (n as f64) < 0.01);
        }
    }

    #[test]
    fn diffuse_limits() {
        let h = HorizonProfile::flat();
        let mask = horizon_mask(&h);
        let sky = SkyConditions::from_horizontal(500.0, 200.0, SolarPosition::new(35.0, -30.0), 150.0);
        let field = SkyRadianceField::perez(&sky);
        let zeros = ShadingMatrix::from_values(Target::Ground, vec![0.0; DOME_CELLS], mask.clone()).unwrap();
        let ones = ShadingMatrix::from_values(Target::Ground, vec![1.0; DOME_CELLS], mask.clone()).unwrap();
        for (tilt, az) in [(0.0, 0.0), (90.0, -90.0), (90.0, 90.0)] {
            assert_eq!(diffuse_shading(&zeros, &field, tilt, az).unwrap(), 0.0);
            assert!((diffuse_shading(&ones, &field, tilt, az).unwrap() - 1.0).abs() < 1e-12);
        }
        let east: Vec<f64> = (0..DOME_CELLS)
            .map(|c| if cell_center(c).1 < 0.0 { 1.0 } else { 0.0 })
            .collect();
        let half = ShadingMatrix::from_values(Target::Ground, east, mask.clone()).unwrap();
        let iso = SkyRadianceField::isotropic(100.0);
        assert!((diffuse_shading(&half, &iso, 0.0, 0.0).unwrap() - 0.5).abs() < 0.01);
        let all_masked = ShadingMatrix::from_values(Target::Ground, vec![0.0; DOME_CELLS], vec![true; DOME_CELLS]).unwrap();
        assert!(matches!(diffuse_shading(&all_masked, &iso, 0.0, 0.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn diffuse_is_convex_combination() {
        let s = scene(-70.0, 6.0);
        let h = HorizonProfile::new(vec![(0.0, 2.0), (90.0, 5.0), (200.0, 1.0)]).unwrap();
        let sky = SkyConditions::from_horizontal(650.0, 180.0, SolarPosition::new(40.0, 20.0), 180.0);
        let field = SkyRadianceField::perez(&sky);
        let m = ShadingMatrix::build(&s, Target::Ground, &h);
        let visible: Vec<f64> = m.values().iter().zip(m.masked()).filter(|(_, &k)| !k).map(|(&v, _)| v).collect();
        let lo = visible.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = visible.iter().cloned().fold(0.0, f64::max);
        let sd = diffuse_shading(&m, &field, 0.0, 0.0).unwrap();
        assert!(lo <= sd && sd <= hi);
    }

    #[test]
    fn sky_weights_match_direct_integral() {
        let s = scene(-63.0, 6.5);
        let h = HorizonProfile::new(vec![(0.0, 1.5), (120.0, 4.0), (250.0, 2.5)]).unwrap();
        let mats = [Target::Ground, Target::PanelFront, Target::PanelRear]
            .map(|t| ShadingMatrix::build(&s, t, &h));
        let skies = [
            (500.0, 200.0, 35.0, -30.0),
            (120.0, 120.0, 10.0, 80.0),
            (850.0, 95.0, 52.0, 5.0),
        ];
        let fields: Vec<SkyRadianceField> = skies
            .iter()
            .map(|&(g, d, a, z)| SkyRadianceField::perez(&SkyConditions::from_horizontal(g, d, SolarPosition::new(a, z), 170.0)))
            .collect();
        let weights = SkyWeights::new(fields.iter(), &horizon_mask(&h));
        let fast = weights.evaluate(&mats[0], &mats[1], &mats[2], s.panel_azimuth);
        for (k, field) in fields.iter().enumerate() {
            let g = diffuse_shading(&mats[0], field, 0.0, 0.0).unwrap();
            let f = diffuse_shading(&mats[1], field, 90.0, s.panel_azimuth).unwrap();
            let r = diffuse_shading(&mats[2], field, 90.0, s.panel_azimuth + 180.0).unwrap();
            assert!((fast[k].ground - g).abs() < 1e-4, "{} vs {g}", fast[k].ground);
            assert!((fast[k].front - f).abs() < 1e-4, "{} vs {f}", fast[k].front);
            assert!((fast[k].rear - r).abs() < 1e-4, "{} vs {r}", fast[k].rear);
        }
    }

    #[test]
    fn wider_rows_matrix_pair() {
        let h = HorizonProfile::flat();
        let grounded = |d| SceneConfig { mounting_gap: 0.0, ..scene(-45.0, d) };
        let near = ShadingMatrix::build(&grounded(8.0), Target::Ground, &h);
        let far = ShadingMatrix::build(&grounded(9.0), Target::Ground, &h);
        assert!(near.values().iter().zip(far.values()).all(|(n, f)| *f <= n + 1e-9));
    }

    #[test]
    fn raised_rows_light_a_band_beneath_them() {
        // Light passing under a raised row leaves a lit band of fixed width at
        // the far end of the strip, so at low sun a wider strip can be more
        // shaded in relative terms.
        let v = direction_vector(2.0, -54.4);
        let near = beam_shading_ground(&scene(-98.0, 18.7), &v);
        let far = beam_shading_ground(&scene(-98.0, 19.7), &v);
        assert!(far > near);
    }

    #[test]
    fn matrix_cache_round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let h = HorizonProfile::new(vec![(0.0, 3.0), (180.0, 6.0)]).unwrap();
        let s = scene(-90.0, 9.0);
        let built = ShadingMatrix::cached(dir.path(), &s, Target::PanelRear, &h).unwrap();
        let again = ShadingMatrix::cached(dir.path(), &s, Target::PanelRear, &h).unwrap();
        assert_eq!(built, again);
        let key = matrix_key(&s, &h);
        let path = dir.path().join(format!("{}_rear.csv", &key[..16]));
        assert!(ShadingMatrix::load(&path, &key, Target::PanelRear).unwrap().is_some());
        let moved = scene(-90.0, 9.5);
        assert!(ShadingMatrix::load(&path, &matrix_key(&moved, &h), Target::PanelRear).unwrap().is_none());
        assert_ne!(s.geometry_hash(), moved.geometry_hash());
    }

    #[test]
    fn composite_cases() {
        let plane = |b, d, r| PlaneIrradiance { i_beam: b, i_diffuse: d, i_reflected: r, face: Face::Front };
        assert_eq!(composite_shading(1.0, 1.0, &plane(300.0, 100.0, 0.0)).s_f_total, 1.0);
        let s = composite_shading(0.5, 0.2, &plane(300.0, 100.0, 0.0));
        assert!((s.s_f_total - 0.425).abs() < 1e-12);
        assert_eq!(composite_shading(0.3, 0.3, &plane(0.0, 0.0, 0.0)).s_f_total, 0.0);
        let p = plane(300.0, 100.0, 40.0);
        let s = composite_shading(0.5, 0.2, &p);
        assert!((s.shaded_irradiance(&p) - p.total() * (1.0 - s.s_f_total)).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn wider_rows_never_shade_more(az in -180.0f64..0.0, d in 5.0f64..19.0,
                                       alt in 1.0f64..89.0, sun_az in -180.0f64..180.0) {
            let v = direction_vector(alt, sun_az);
            let grounded = |d| SceneConfig { mounting_gap: 0.0, ..scene(az, d) };
            let near = beam_shading_ground(&grounded(d), &v);
            let far = beam_shading_ground(&grounded(d + 1.0), &v);
            prop_assert!(far <= near + 1e-9);
        }

        #[test]
        fn factors_stay_in_unit_interval(az in -180.0f64..0.0, d in 0.5f64..20.0,
                                         alt in 0.1f64..89.9, sun_az in -180.0f64..180.0) {
            let s = SceneConfig { n_rows: 5, ..scene(az, d) };
            let v = direction_vector(alt, sun_az);
            for t in [Target::Ground, Target::PanelFront, Target::PanelRear] {
                let f = beam_shading(&s, &v, t);
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }
    }
}
