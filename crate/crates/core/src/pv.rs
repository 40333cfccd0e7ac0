//! Five-parameter single-diode model of a bifacial module and array power.
//!
//! The circuit equation is
//! `I = I_L − I_0·(exp((V + I·R_s)/a) − 1) − (V + I·R_s)/R_sh`.
//! Reference parameters are fitted to the datasheet points at standard test
//! conditions and translated to operating conditions following De Soto et
//! al. (2006).

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irradiance::PlaneIrradiance;
use crate::shading::ShadeSample;

const BOLTZMANN_EV: f64 = 8.617_333_262e-5;
const T_REF: f64 = 298.15;
const G_REF: f64 = 1000.0;
const BANDGAP_REF: f64 = 1.121;
const BANDGAP_SLOPE: f64 = -0.000_267_7;

/// Module characteristics at standard test conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModuleDatasheet {
    pub p_mp: f64,
    pub v_mp: f64,
    pub i_mp: f64,
    pub v_oc: f64,
    pub i_sc: f64,
    pub efficiency: f64,
    pub width: f64,
    pub height: f64,
    pub cells_in_series: u32,
    /// Rear-to-front response ratio φ.
    pub bifaciality: f64,
    /// Open-circuit voltage coefficient, %/°C.
    pub beta_voc: f64,
    /// Short-circuit current coefficient, %/°C.
    pub alpha_isc: f64,
}

impl Default for ModuleDatasheet {
    fn default() -> Self {
        Self {
            p_mp: 380.0,
            v_mp: 40.2,
            i_mp: 9.44,
            v_oc: 49.5,
            i_sc: 9.93,
            efficiency: 0.1941,
            width: 1.974,
            height: 0.992,
            cells_in_series: 72,
            bifaciality: 0.8,
            beta_voc: -0.28,
            alpha_isc: 0.048,
        }
    }
}

impl ModuleDatasheet {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.p_mp, self.v_mp, self.i_mp, self.v_oc, self.i_sc, self.width, self.height,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("module datasheet values must be positive".into()));
        }
        if self.v_mp >= self.v_oc || self.i_mp >= self.i_sc {
            return Err(Error::Config(
                "module datasheet needs v_mp < v_oc and i_mp < i_sc".into(),
            ));
        }
        if (self.v_mp * self.i_mp - self.p_mp).abs() > 0.01 * self.p_mp {
            return Err(Error::Config(format!(
                "module p_mp {} differs from v_mp·i_mp {} by more than 1%",
                self.p_mp,
                self.v_mp * self.i_mp
            )));
        }
        if !(self.bifaciality > 0.0 && self.bifaciality <= 1.0) {
            return Err(Error::Config("module bifaciality must lie in (0, 1]".into()));
        }
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return Err(Error::Config("module efficiency must lie in (0, 1)".into()));
        }
        if !(self.beta_voc.is_finite() && self.alpha_isc.is_finite()) {
            return Err(Error::Config("module temperature coefficients must be finite".into()));
        }
        Ok(())
    }

    fn beta_voc_abs(&self) -> f64 {
        self.beta_voc / 100.0 * self.v_oc
    }

    fn alpha_isc_abs(&self) -> f64 {
        self.alpha_isc / 100.0 * self.i_sc
    }
}

/// Single-diode parameters at one operating condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeParams {
    /// Photocurrent I_L, A.
    pub photocurrent: f64,
    /// Diode saturation current I_0, A.
    pub saturation_current: f64,
    /// Series resistance R_s, Ω.
    pub series_resistance: f64,
    /// Shunt resistance R_sh, Ω.
    pub shunt_resistance: f64,
    /// Modified ideality factor a = n·N_s·k·T/q, V.
    pub ideality: f64,
}

/// Reference parameters together with the temperature coefficient needed
/// for translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleModel {
    pub reference: DiodeParams,
    /// Short-circuit current coefficient, A/K.
    pub alpha_isc: f64,
}

impl DiodeParams {
    /// Current at terminal voltage `v`.
    pub fn current(&self, v: f64) -> f64 {
        let (il, i0, rs, a) = (
            self.photocurrent,
            self.saturation_current,
            self.series_resistance,
            self.ideality,
        );
        let gsh = 1.0 / self.shunt_resistance;
        let f = |i: f64| il - i0 * ((v + i * rs) / a).exp_m1() - gsh * (v + i * rs) - i;
        let df = |i: f64| -i0 * rs / a * ((v + i * rs) / a).exp() - gsh * rs - 1.0;
        // f is strictly decreasing in i; bracket then Newton with bisection
        // fallback.
        let (mut lo, mut hi) = (-il - 1.0, il + 1.0);
        while f(lo) < 0.0 {
            lo = 2.0 * lo - 1.0;
        }
        while f(hi) > 0.0 {
            hi = 2.0 * hi + 1.0;
        }
        let mut i = il.clamp(lo, hi);
        for _ in 0..100 {
            let fi = f(i);
            if fi == 0.0 {
                return i;
            }
            if fi > 0.0 {
                lo = i;
            } else {
                hi = i;
            }
            let mut next = i - fi / df(i);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - i).abs() <= 1e-13 * (1.0 + i.abs()) {
                return next;
            }
            i = next;
        }
        i
    }

    /// Open-circuit voltage.
    pub fn open_circuit_voltage(&self) -> f64 {
        let (il, i0, a) = (self.photocurrent, self.saturation_current, self.ideality);
        if il <= 0.0 {
            return 0.0;
        }
        let gsh = 1.0 / self.shunt_resistance;
        let f = |v: f64| il - i0 * (v / a).exp_m1() - gsh * v;
        let mut lo = 0.0;
        let mut hi = a * (il / i0 + 1.0).ln() + 1e-9;
        let mut v = hi;
        for _ in 0..200 {
            let fv = f(v);
            if fv > 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            let d = -i0 / a * (v / a).exp() - gsh;
            let mut next = v - fv / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - v).abs() <= 1e-12 * (1.0 + v.abs()) {
                return next;
            }
            v = next;
        }
        v
    }

    /// Maximum power point (V, I, P) by golden-section search on `[0, V_oc]`.
    pub fn max_power_point(&self) -> (f64, f64, f64) {
        let voc = self.open_circuit_voltage();
        if voc <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let power = |v: f64| v * self.current(v);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, voc);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut p1, mut p2) = (power(x1), power(x2));
        while hi - lo > 1e-6 * voc {
            if p1 < p2 {
                lo = x1;
                x1 = x2;
                p1 = p2;
                x2 = lo + ratio * (hi - lo);
                p2 = power(x2);
            } else {
                hi = x2;
                x2 = x1;
                p2 = p1;
                x1 = hi - ratio * (hi - lo);
                p1 = power(x1);
            }
        }
        let v = 0.5 * (lo + hi);
        let i = self.current(v);
        (v, i, v * i)
    }
}

/// Solves the 3×3 linear system for (I_L, I_0, G_sh) given a and R_s so
/// that the curve passes through the short-circuit, open-circuit and
/// maximum-power points.
fn linear_parameters(sheet: &ModuleDatasheet, a: f64, rs: f64) -> Option<[f64; 3]> {
    let points = [(0.0, sheet.i_sc), (sheet.v_oc, 0.0), (sheet.v_mp, sheet.i_mp)];
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (row, &(v, i)) in points.iter().enumerate() {
        let x = (v + i * rs) / a;
        m[row] = [1.0, -x.exp_m1(), -(v + i * rs)];
        rhs[row] = i;
    }
    let scale: [f64; 3] =
        std::array::from_fn(|c| (0..3).map(|r| m[r][c].abs()).fold(0.0, f64::max).max(1e-300));
    for row in m.iter_mut() {
        for c in 0..3 {
            row[c] /= scale[c];
        }
    }
    let x = solve3(m, rhs)?;
    Some(std::array::from_fn(|c| x[c] / scale[c]))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

impl ModuleModel {
    /// Fits reference parameters to a datasheet.
    ///
    /// For trial (a, R_s) the three datasheet points fix I_L, I_0 and R_sh
    /// linearly. A damped Newton iteration on (a, R_s) then enforces a zero
    /// power derivative at the maximum-power point and the datasheet
    /// open-circuit voltage coefficient 10 K above reference.
    pub fn fit(sheet: &ModuleDatasheet) -> Result<Self> {
        sheet.validate()?;
        let alpha = sheet.alpha_isc_abs();
        let residual = |p: [f64; 2]| -> Option<[f64; 2]> {
            let [a, rs] = p;
            if !(a > 0.0 && rs >= 0.0) {
                return None;
            }
            let [il, i0, gsh] = linear_parameters(sheet, a, rs)?;
            if !(il > 0.0 && i0 > 0.0 && gsh > 0.0) {
                return None;
            }
            let x = (sheet.v_mp + sheet.i_mp * rs) / a;
            let g = i0 / a * x.exp() + gsh;
            let r_mpp = sheet.i_mp / sheet.v_mp - g / (1.0 + rs * g);
            let reference = DiodeParams {
                photocurrent: il,
                saturation_current: i0,
                series_resistance: rs,
                shunt_resistance: 1.0 / gsh,
                ideality: a,
            };
            let model = ModuleModel {
                reference,
                alpha_isc: alpha,
            };
            let hot = model.at_conditions(G_REF, 35.0);
            let r_voc = (hot.open_circuit_voltage() - (sheet.v_oc + 10.0 * sheet.beta_voc_abs()))
                / sheet.v_oc;
            Some([r_mpp * sheet.v_mp / sheet.i_mp, r_voc])
        };
        let norm = |r: [f64; 2]| r[0].hypot(r[1]);
        let n_s = sheet.cells_in_series.max(1) as f64;
        let mut p = [1.0 * n_s * BOLTZMANN_EV * T_REF * 0.95, 0.3];
        let mut r = residual(p)
            .or_else(|| {
                p = [2.0, 0.3];
                residual(p)
            })
            .ok_or_else(|| Error::FitDidNotConverge { residuals: vec![] })?;
        let mut trajectory = vec![norm(r)];
        for _ in 0..100 {
            if norm(r) < 1e-12 {
                break;
            }
            let mut jac = [[0.0; 2]; 2];
            for k in 0..2 {
                let h = 1e-7 * p[k].abs().max(1e-3);
                let mut q = p;
                q[k] += h;
                let rq = residual(q).ok_or_else(|| Error::FitDidNotConverge {
                    residuals: trajectory.clone(),
                })?;
                jac[0][k] = (rq[0] - r[0]) / h;
                jac[1][k] = (rq[1] - r[1]) / h;
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let step = [
                (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
            ];
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let q = [p[0] - lambda * step[0], p[1] - lambda * step[1]];
                if let Some(rq) = residual(q) {
                    if norm(rq) < norm(r) {
                        p = q;
                        r = rq;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            trajectory.push(norm(r));
            if !accepted {
                break;
            }
        }
        if !(norm(r) < 1e-8) {
            return Err(Error::FitDidNotConverge {
                residuals: trajectory,
            });
        }
        let [a, rs] = p;
        let [il, i0, gsh] = linear_parameters(sheet, a, rs).ok_or_else(|| {
            Error::FitDidNotConverge {
                residuals: trajectory.clone(),
            }
        })?;
        let model = ModuleModel {
            reference: DiodeParams {
                photocurrent: il,
                saturation_current: i0,
                series_resistance: rs,
                shunt_resistance: 1.0 / gsh,
                ideality: a,
            },
            alpha_isc: alpha,
        };
        let worst = [(0.0, sheet.i_sc), (sheet.v_oc, 0.0), (sheet.v_mp, sheet.i_mp)]
            .iter()
            .map(|&(v, i)| (model.reference.current(v) - i).abs())
            .fold(0.0, f64::max);
        if worst > 0.005 * sheet.i_sc {
            trajectory.push(worst);
            return Err(Error::FitDidNotConverge {
                residuals: trajectory,
            });
        }
        Ok(model)
    }

    /// Parameters at plane-of-array irradiance `g` (W/m²) and cell
    /// temperature `t_cell` (°C).
    pub fn at_conditions(&self, g: f64, t_cell: f64) -> DiodeParams {
        let r = &self.reference;
        let t = t_cell + 273.15;
        let s = g / G_REF;
        let eg = BANDGAP_REF * (1.0 + BANDGAP_SLOPE * (t - T_REF));
        DiodeParams {
            photocurrent: s * (r.photocurrent + self.alpha_isc * (t - T_REF)),
            saturation_current: r.saturation_current
                * (t / T_REF).powi(3)
                * (BANDGAP_REF / (BOLTZMANN_EV * T_REF) - eg / (BOLTZMANN_EV * t)).exp(),
            series_resistance: r.series_resistance,
            shunt_resistance: if s > 0.0 {
                r.shunt_resistance / s
            } else {
                f64::INFINITY
            },
            ideality: r.ideality * t / T_REF,
        }
    }

    /// Maximum power of one module, W.
    pub fn module_power(&self, g_effective: f64, t_cell: f64) -> f64 {
        if g_effective <= 0.0 {
            return 0.0;
        }
        self.at_conditions(g_effective, t_cell).max_power_point().2.max(0.0)
    }
}

/// Effective front-equivalent irradiance of a bifacial module, W/m².
pub fn effective_irradiance(
    front: &PlaneIrradiance,
    rear: &PlaneIrradiance,
    front_shade: &ShadeSample,
    rear_shade: &ShadeSample,
    bifaciality: f64,
) -> f64 {
    front_shade.shaded_irradiance(front) + bifaciality * rear_shade.shaded_irradiance(rear)
}

/// Array-level electrical and thermal settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    /// Inverter and wiring derate.
    pub derate: f64,
    /// Nominal operating cell temperature, °C.
    pub noct: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            derate: 0.96,
            noct: 45.0,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.derate > 0.0 && self.derate <= 1.0) {
            return Err(Error::Config("array.derate must lie in (0, 1]".into()));
        }
        if !(self.noct > 20.0 && self.noct < 100.0) {
            return Err(Error::Config("array.noct must lie in (20, 100) °C".into()));
        }
        Ok(())
    }

    /// Cell temperature for air temperature and effective irradiance.
    pub fn cell_temperature(&self, t_air: f64, g_effective: f64) -> f64 {
        t_air + (self.noct - 20.0) / 800.0 * g_effective
    }
}

/// Hourly grid-injected power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub times: Vec<DateTime<FixedOffset>>,
    pub power_kw: Vec<f64>,
    pub modules: usize,
}

/// Hourly inputs of the power simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerInput {
    pub front: PlaneIrradiance,
    pub rear: PlaneIrradiance,
    pub front_shade: ShadeSample,
    pub rear_shade: ShadeSample,
    pub t_air: f64,
}

/// Hourly system power: module power × module count × derate.
pub fn simulate_power(
    times: &[DateTime<FixedOffset>],
    inputs: &[PowerInput],
    model: &ModuleModel,
    sheet: &ModuleDatasheet,
    array: &ArrayConfig,
    modules: usize,
) -> PowerSeries {
    let power_kw = inputs
        .iter()
        .map(|h| {
            let g = effective_irradiance(
                &h.front,
                &h.rear,
                &h.front_shade,
                &h.rear_shade,
                sheet.bifaciality,
            );
            let t_cell = array.cell_temperature(h.t_air, g);
            model.module_power(g, t_cell) * modules as f64 * array.derate / 1000.0
        })
        .collect();
    PowerSeries {
        times: times.to_vec(),
        power_kw,
        modules,
    }
}

impl PowerSeries {
    /// Annual energy as the plain sum of hourly power × 1 h, kWh.
    pub fn energy_kwh(&self) -> f64 {
        self.power_kw.iter().sum()
    }

    /// `time,power_kw` rows after the given header lines.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("time,power_kw\n");
        for (t, p) in self.times.iter().zip(&self.power_kw) {
            out.push_str(&format!("{},{}\n", t.format("%Y-%m-%dT%H:%M:%S%:z"), p));
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path, header: &str) -> Result<()> {
        std::fs::write(path, self.to_csv(header)).map_err(|e| Error::io(path, e))
    }
}

/// Sample standard deviation of hourly power, kW.
pub fn power_std(power_kw: &[f64]) -> Result<f64> {
    let n = power_kw.len();
    if n < 2 {
        return Err(Error::Numerical(format!(
            "standard deviation needs at least 2 samples, got {n}"
        )));
    }
    // Shifted by the first sample so a constant series is exactly zero.
    let shift = power_kw[0];
    let mean = power_kw.iter().map(|p| p - shift).sum::<f64>() / n as f64;
    let ss: f64 = power_kw.iter().map(|p| (p - shift - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}
