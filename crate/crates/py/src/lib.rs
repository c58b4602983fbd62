//! Python bindings: configuration, deployments, runs, training, and the
//! pathloss functions.

use std::path::PathBuf;
use std::sync::Arc;

use ntn_ric::config::SimConfig;
use ntn_ric::dqn::{self, Mlp};
use ntn_ric::harness::{self, PolicyKind, RunOptions};
use ntn_ric::netmodel::{self, World};
use ntn_ric::propagation::{self, LinkGeometry, RadioEnvironment, Terrain};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Simulation configuration.
#[pyclass(name = "Config", module = "ntn_ric")]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, or the given TOML text layered over them.
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(t) => SimConfig::from_toml(t).map_err(value_err)?,
            None => SimConfig::default(),
        };
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn hash(&self) -> String {
        self.inner.hash_hex()
    }

    #[getter]
    fn dqn_episodes(&self) -> u32 {
        self.inner.dqn.episodes
    }

    fn __repr__(&self) -> String {
        format!("Config(hash={})", &self.inner.hash_hex()[..12])
    }
}

/// A deployment: cells, UEs and their precomputed links.
#[pyclass(name = "Network", module = "ntn_ric")]
struct PyNetwork {
    world: World,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (seed, config=None, terrain_csv=None))]
    fn new(seed: u64, config: Option<&PyConfig>, terrain_csv: Option<&str>) -> PyResult<Self> {
        let cfg = config.map_or_else(SimConfig::default, |c| c.inner.clone());
        let terrain = terrain_csv.map(Terrain::from_csv).transpose().map_err(value_err)?.map(Arc::new);
        let world = World::build(&cfg, seed).and_then(|w| w.with_terrain(terrain)).map_err(value_err)?;
        Ok(Self { world })
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.world.n_cells()
    }

    #[getter]
    fn n_ues(&self) -> usize {
        self.world.ues.len()
    }

    fn switchable_ids(&self) -> Vec<u32> {
        self.world.switchable_ids()
    }

    /// (x, y, z) of every cell, in id order.
    fn cell_positions(&self) -> Vec<(f64, f64, f64)> {
        self.world.cells.iter().map(|c| (c.position.x, c.position.y, c.position.z)).collect()
    }

    /// Power draw in watts of a cell when on or asleep.
    fn cell_power_w(&self, cell: u32, on: bool) -> PyResult<f64> {
        let c = self.world.cell(cell).ok_or_else(|| value_err(format!("unknown cell {cell}")))?;
        Ok(c.power_w(on))
    }

    fn rsrp_dbm(&self, ue: usize, cell: u32) -> PyResult<f64> {
        if ue >= self.world.ues.len() || cell as usize >= self.world.n_cells() {
            return Err(value_err("ue or cell out of range"));
        }
        Ok(self.world.links.rsrp(ue, cell))
    }

    fn demands(&self, day: u64, hour: u8) -> Vec<f64> {
        self.world.demands(day, hour % netmodel::HOURS_PER_DAY)
    }

    /// Run one policy; returns per-day metrics and the metrics CSV.
    #[pyo3(signature = (policy="always_on", days=1, first_day=0, warmup_days=0, seed=0, checkpoint=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        policy: &str,
        days: u32,
        first_day: u64,
        warmup_days: u32,
        seed: u64,
        checkpoint: Option<PathBuf>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind = policy_kind(policy, checkpoint)?;
        let opts = RunOptions { first_day, days, warmup_days };
        let run = py
            .detach(|| {
                let mut p = harness::build_policy(&kind, &self.world, seed)?;
                harness::run_days(&self.world, p.as_mut(), opts)
            })
            .map_err(runtime_err)?;
        let mut metrics = format!("{}\n", netmodel::METRICS_CSV_HEADER);
        netmodel::metrics_csv_rows(&run.reports, &mut metrics);
        let out = PyDict::new(py);
        out.set_item("policy", &run.policy)?;
        out.set_item("daily_energy_wh", run.days.iter().map(|d| d.total_energy_wh).collect::<Vec<_>>())?;
        out.set_item("daily_efficiency", run.days.iter().map(|d| d.efficiency_bits_per_j).collect::<Vec<_>>())?;
        out.set_item("mean_unserved_ues", run.mean_unserved_ues())?;
        out.set_item("episodes_csv", harness::episodes_csv(&run.days))?;
        out.set_item("metrics_csv", metrics)?;
        out.set_item("bus_ndjson", ntn_ric::ric::encode_stream(&run.envelopes))?;
        Ok(out)
    }

    /// Compare policies with always-on; returns the evaluation CSV.
    #[pyo3(signature = (policies, days=30, first_day=100_000, warmup_days=1, seed=0))]
    fn evaluate(&self, py: Python<'_>, policies: Vec<String>, days: u32, first_day: u64, warmup_days: u32, seed: u64) -> PyResult<String> {
        let kinds = policies.iter().map(|p| p.parse::<PolicyKind>().map_err(value_err)).collect::<PyResult<Vec<_>>>()?;
        let opts = RunOptions { first_day, days, warmup_days };
        let cmp = py.detach(|| harness::evaluate(&self.world, &kinds, opts, seed)).map_err(runtime_err)?;
        Ok(cmp.to_csv())
    }

    /// Train the DQN xApp; returns (network, learning-curve CSV).
    #[pyo3(signature = (seed, episodes=None))]
    fn train(&self, py: Python<'_>, seed: u64, episodes: Option<u32>) -> PyResult<(PyQNetwork, String)> {
        let mut cfg = self.world.config.dqn.clone();
        if let Some(e) = episodes {
            cfg.episodes = e;
        }
        let out = py.detach(|| harness::train(&self.world, &cfg, seed)).map_err(runtime_err)?;
        Ok((PyQNetwork { net: out.net }, harness::learning_curve_csv(&out.curve)))
    }
}

fn policy_kind(name: &str, checkpoint: Option<PathBuf>) -> PyResult<PolicyKind> {
    match (name, checkpoint) {
        ("dqn", Some(p)) => Ok(PolicyKind::Dqn(p)),
        ("dqn", None) => Err(value_err("policy dqn needs a checkpoint")),
        (other, _) => other.parse().map_err(value_err),
    }
}

/// A Q-network loaded from or saved to a checkpoint.
#[pyclass(name = "QNetwork", module = "ntn_ric")]
struct PyQNetwork {
    net: Mlp,
}

#[pymethods]
impl PyQNetwork {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { net: dqn::load_checkpoint(&path).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { net: dqn::checkpoint_from_bytes(data).map_err(value_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dqn::save_checkpoint(&self.net, &path).map_err(runtime_err)
    }

    fn to_bytes(&self) -> Vec<u8> {
        dqn::checkpoint_bytes(&self.net)
    }

    fn layer_sizes(&self) -> Vec<usize> {
        self.net.layer_sizes()
    }

    fn q_values(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.net.forward(&state).map_err(value_err)
    }
}

#[pyfunction]
fn fspl_db(distance_m: f64, fc_mhz: f64) -> PyResult<f64> {
    propagation::fspl_db(distance_m, fc_mhz).map_err(value_err)
}

fn rma_env(building_height_m: f64, street_width_m: f64) -> RadioEnvironment {
    RadioEnvironment { building_height_m, street_width_m, ..RadioEnvironment::default() }
}

#[pyfunction]
#[pyo3(signature = (d2d_m, h_bs_m, h_ut_m, fc_mhz, building_height_m=5.0, street_width_m=5.0))]
fn rma_los_db(d2d_m: f64, h_bs_m: f64, h_ut_m: f64, fc_mhz: f64, building_height_m: f64, street_width_m: f64) -> PyResult<f64> {
    let g = LinkGeometry::from_heights(d2d_m, h_bs_m, h_ut_m, fc_mhz);
    Ok(propagation::rma_los_pathloss_db(&g, &rma_env(building_height_m, street_width_m)).map_err(value_err)?.db)
}

#[pyfunction]
#[pyo3(signature = (d2d_m, h_bs_m, h_ut_m, fc_mhz, building_height_m=5.0, street_width_m=5.0))]
fn rma_nlos_db(d2d_m: f64, h_bs_m: f64, h_ut_m: f64, fc_mhz: f64, building_height_m: f64, street_width_m: f64) -> PyResult<f64> {
    let g = LinkGeometry::from_heights(d2d_m, h_bs_m, h_ut_m, fc_mhz);
    Ok(propagation::rma_nlos_pathloss_db(&g, &rma_env(building_height_m, street_width_m)).map_err(value_err)?.db)
}

#[pyfunction]
fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    propagation::noise_floor_dbm(bandwidth_hz, noise_figure_db)
}

#[pymodule]
#[pyo3(name = "ntn_ric")]
fn ntn_ric_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyQNetwork>()?;
    m.add_function(wrap_pyfunction!(fspl_db, m)?)?;
    m.add_function(wrap_pyfunction!(rma_los_db, m)?)?;
    m.add_function(wrap_pyfunction!(rma_nlos_db, m)?)?;
    m.add_function(wrap_pyfunction!(noise_floor_dbm, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
