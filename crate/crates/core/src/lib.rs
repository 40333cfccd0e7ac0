//! Simulation and multi-objective design optimization of vertically mounted
//! bifacial photovoltaic rows over arable land.

pub mod cli;
pub mod config;
pub mod crop;
pub mod error;
pub mod irradiance;
pub mod kpi;
pub mod optimizer;
pub mod pipeline;
pub mod polygon;
pub mod pv;
pub mod shading;
pub mod sky;
pub mod solar;
pub mod synthetic;
pub mod weather;

pub use error::{Error, Result};
