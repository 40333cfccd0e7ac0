//! Python bindings.
//!
//! Long computations release the GIL. Results come back as plain dicts
//! and lists.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use agrivoltaic::config::RunConfig;
use agrivoltaic::crop::CropParams;
use agrivoltaic::optimizer::hypervolume::hypervolume as hv;
use agrivoltaic::optimizer::{self, analyze, DecisionVector, SweepVariable};
use agrivoltaic::pipeline::{Objectives, SiteYear};

create_exception!(agrivoltaic_py, AgrivoltaicError, PyException);

fn err(e: agrivoltaic::Error) -> PyErr {
    AgrivoltaicError::new_err(e.to_string())
}

fn objectives_dict<'py>(py: Python<'py>, o: &Objectives) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ler", o.ler)?;
    d.set_item("ler_crop", o.ler_crop)?;
    d.set_item("ler_pv", o.ler_pv)?;
    d.set_item("std_kw", o.std_kw)?;
    d.set_item("energy_kwh", o.energy_kwh)?;
    Ok(d)
}

/// A loaded and validated TOML run configuration.
#[pyclass(name = "Config", module = "agrivoltaic_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        RunConfig::load(&path).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn design(&self) -> (f64, f64) {
        (self.inner.design.azimuth, self.inner.design.row_distance)
    }

    #[getter]
    fn crop(&self) -> String {
        self.inner.crop.name.clone()
    }

    #[getter]
    fn output(&self) -> PathBuf {
        self.inner.output.clone()
    }

    #[setter]
    fn set_output(&mut self, path: PathBuf) {
        self.inner.output = path;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.optimizer.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.optimizer.seed = seed;
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.hash.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(crop={:?}, azimuth={}, row_distance={})",
            self.inner.crop.name, self.inner.design.azimuth, self.inner.design.row_distance
        )
    }
}

/// Weather, horizon and plant prepared once for repeated evaluation.
#[pyclass(name = "Site", module = "agrivoltaic_py", frozen)]
pub struct PySite {
    site: SiteYear,
    config: RunConfig,
}

impl PySite {
    fn crop(&self, name: Option<&str>) -> PyResult<CropParams> {
        match name {
            None => Ok(self.config.crop.clone()),
            Some(n) if n.eq_ignore_ascii_case(&self.config.crop.name) => Ok(self.config.crop.clone()),
            Some(n) => CropParams::preset(n).map_err(err),
        }
    }
}

#[pymethods]
impl PySite {
    #[new]
    fn new(py: Python<'_>, config: &PyConfig) -> PyResult<Self> {
        let config = config.inner.clone();
        let site = py.detach(|| agrivoltaic::cli::prepare(&config)).map_err(err)?;
        Ok(Self { site, config })
    }

    /// Objectives of one design with exact shading.
    #[pyo3(signature = (azimuth, row_distance, crop=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        azimuth: f64,
        row_distance: f64,
        crop: Option<&str>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = DecisionVector::new(azimuth, row_distance).map_err(err)?;
        let crop = self.crop(crop)?;
        let o = py.detach(|| self.site.evaluate_exact(&d, &crop)).map_err(err)?;
        objectives_dict(py, &o)
    }

    /// Hourly power, crop season and KPIs of one design.
    #[pyo3(signature = (azimuth, row_distance, crop=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        azimuth: f64,
        row_distance: f64,
        crop: Option<&str>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = DecisionVector::new(azimuth, row_distance).map_err(err)?;
        let crop = self.crop(crop)?;
        let sim = py
            .detach(|| self.site.simulate(&self.site.scene(&d), &crop))
            .map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("crop", &sim.season.crop)?;
        out.set_item("yield_t_ha", sim.season.yield_t_ha)?;
        out.set_item("reference_yield_t_ha", sim.reference.yield_t_ha)?;
        out.set_item("ler", sim.kpi.ler)?;
        out.set_item("ler_crop", sim.kpi.ler_crop_term)?;
        out.set_item("ler_pv", sim.kpi.ler_pv_term)?;
        out.set_item("std_kw", sim.kpi.std_kw)?;
        out.set_item("energy_kwh", sim.kpi.annual_energy)?;
        out.set_item("energy_density_kwh_m2", sim.kpi.energy_density)?;
        let times: Vec<String> = sim.power.times.iter().map(|t| t.to_rfc3339()).collect();
        out.set_item("times", times)?;
        out.set_item("power_kw", sim.power.power_kw)?;
        let lai: Vec<f64> = sim.season.days.iter().map(|d| d.lai).collect();
        out.set_item("lai", lai)?;
        Ok(out)
    }

    /// One row per value with the other design variable fixed by the config.
    #[pyo3(signature = (variable, values, crops=None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        variable: &str,
        values: Vec<f64>,
        crops: Option<Vec<String>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let variable = match variable {
            "azimuth" => SweepVariable::Azimuth,
            "distance" => SweepVariable::Distance,
            other => {
                return Err(AgrivoltaicError::new_err(format!(
                    "sweep variable must be \"azimuth\" or \"distance\", got {other:?}"
                )))
            }
        };
        let crops = match crops {
            Some(names) => names.iter().map(|n| self.crop(Some(n))).collect::<PyResult<Vec<_>>>()?,
            None => self.config.sweep_crops().map_err(err)?,
        };
        let fixed = self.config.design;
        let table = py
            .detach(|| optimizer::sweep(&self.site, &crops, variable, &values, fixed))
            .map_err(err)?;
        table
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("value", r.value)?;
                d.set_item("specific_pv_kwh_kwp", r.specific_pv_kwh_kwp)?;
                d.set_item("energy_density_kwh_m2", r.energy_density)?;
                d.set_item("ler_pv", r.ler_pv)?;
                for (name, p) in table.crops.iter().zip(&r.crops) {
                    d.set_item(format!("yield_{name}"), p.yield_t_ha)?;
                    d.set_item(format!("ler_crop_{name}"), p.ler_crop)?;
                    d.set_item(format!("ler_{name}"), p.ler)?;
                }
                Ok(d)
            })
            .collect()
    }

    /// Pareto archive search; keyword arguments override the config.
    #[pyo3(signature = (population=None, generations=None, seed=None, workers=None))]
    fn optimize<'py>(
        &self,
        py: Python<'py>,
        population: Option<usize>,
        generations: Option<usize>,
        seed: Option<u64>,
        workers: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = self.config.optimizer.clone();
        cfg.population = population.unwrap_or(cfg.population);
        cfg.generations = generations.unwrap_or(cfg.generations);
        cfg.seed = seed.unwrap_or(cfg.seed);
        cfg.workers = workers.unwrap_or(cfg.workers);
        let crop = &self.config.crop;
        let run = py
            .detach(|| optimizer::optimize(&self.site, crop, &cfg))
            .map_err(err)?;
        let archive = run
            .archive
            .iter()
            .map(|s| {
                let d = objectives_dict(py, &s.objectives)?;
                d.set_item("azimuth", s.decision.azimuth)?;
                d.set_item("row_distance", s.decision.row_distance)?;
                d.set_item("generation", s.generation)?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let correlations = PyDict::new(py);
        if let Ok(a) = analyze(&run.archive) {
            for c in &a.correlations {
                correlations.set_item((c.x, c.y), c.pearson)?;
            }
        }
        let out = PyDict::new(py);
        out.set_item("archive", archive)?;
        out.set_item("hypervolume", run.hypervolume_history)?;
        out.set_item("evaluations", run.evaluations)?;
        out.set_item("correlations", correlations)?;
        Ok(out)
    }
}

/// Pearson correlation coefficient.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    optimizer::pearson(&x, &y).map_err(err)
}

/// Population standard deviation of a power series, kW.
#[pyfunction]
fn power_std(power_kw: Vec<f64>) -> PyResult<f64> {
    agrivoltaic::pv::power_std(&power_kw).map_err(err)
}

/// Hypervolume of minimization points dominated relative to `reference`.
#[pyfunction]
fn hypervolume(points: Vec<Vec<f64>>, reference: Vec<f64>) -> PyResult<f64> {
    if points.iter().any(|p| p.len() != reference.len()) {
        return Err(AgrivoltaicError::new_err("every point needs one value per reference coordinate"));
    }
    Ok(hv(&points, &reference))
}

#[pymodule]
fn agrivoltaic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AgrivoltaicError", m.py().get_type::<AgrivoltaicError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySite>()?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(power_std, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    Ok(())
}
