//! Python bindings: radio model, the four allocators, their oracles and the
//! experiment harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use d2d_core::auction::{self as rica, RicaConfig};
use d2d_core::coalition::{self, Allocator, ContentScenario};
use d2d_core::harness::{self, ExperimentConfig, ExperimentKind};
use d2d_core::oracle::{self, OracleBudget};
use d2d_core::power_control::{self, PowerGameInstance, PowerPlayer};
use d2d_core::radio::{self, LinkDirection};
use d2d_core::stackelberg::{self, PriceGrid, StackelbergInstance};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Radio parameters; every argument defaults to the standard scenario.
#[pyclass(name = "RadioParams", from_py_object)]
#[derive(Clone)]
struct PyRadioParams {
    inner: radio::RadioParams,
}

#[pymethods]
impl PyRadioParams {
    #[new]
    #[pyo3(signature = (cell_radius=None, max_d2d_distance=None, p_cue_dbm=None, p_d2d_dbm=None, p_enb_dbm=None, noise_dbm=None, noise_figure_db=None, carrier_ghz=None, uplink=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        cell_radius: Option<f64>,
        max_d2d_distance: Option<f64>,
        p_cue_dbm: Option<f64>,
        p_d2d_dbm: Option<f64>,
        p_enb_dbm: Option<f64>,
        noise_dbm: Option<f64>,
        noise_figure_db: Option<f64>,
        carrier_ghz: Option<f64>,
        uplink: bool,
    ) -> PyResult<Self> {
        let d = radio::RadioParams::default();
        let inner = radio::RadioParams {
            cell_radius: cell_radius.unwrap_or(d.cell_radius),
            max_d2d_distance: max_d2d_distance.unwrap_or(d.max_d2d_distance),
            p_cue_dbm: p_cue_dbm.unwrap_or(d.p_cue_dbm),
            p_d2d_dbm: p_d2d_dbm.unwrap_or(d.p_d2d_dbm),
            p_enb_dbm: p_enb_dbm.unwrap_or(d.p_enb_dbm),
            noise_dbm: noise_dbm.unwrap_or(d.noise_dbm),
            noise_figure_db: noise_figure_db.unwrap_or(d.noise_figure_db),
            carrier_ghz: carrier_ghz.unwrap_or(d.carrier_ghz),
            link_direction: if uplink { LinkDirection::Uplink } else { LinkDirection::Downlink },
        };
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cell_radius(&self) -> f64 {
        self.inner.cell_radius
    }

    #[getter]
    fn max_d2d_distance(&self) -> f64 {
        self.inner.max_d2d_distance
    }

    /// Thermal noise plus noise figure, in watts.
    #[getter]
    fn noise_w(&self) -> f64 {
        self.inner.noise_w()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One drop: node positions plus the fading realisation on every RB.
#[pyclass(name = "Drop")]
struct PyDrop {
    params: radio::RadioParams,
    topology: radio::Topology,
    gains: radio::GainTensor,
}

#[pymethods]
impl PyDrop {
    /// `cues` cellular UEs (one RB each) and `pairs` D2D pairs, reproducible
    /// from `seed`.
    #[new]
    #[pyo3(signature = (cues, pairs, seed, params=None))]
    fn new(cues: usize, pairs: usize, seed: u64, params: Option<PyRadioParams>) -> PyResult<Self> {
        let params = params.map(|p| p.inner).unwrap_or_default();
        let topology = radio::generate_topology(&params, cues, pairs, seed).map_err(value_error)?;
        let gains = radio::draw_gains(&topology, &params, seed.wrapping_add(1)).map_err(value_error)?;
        Ok(Self { params, topology, gains })
    }

    #[getter]
    fn rb_count(&self) -> usize {
        self.topology.rb_count
    }

    #[getter]
    fn pair_count(&self) -> usize {
        self.topology.pair_count()
    }

    fn cue_positions(&self) -> Vec<(f64, f64)> {
        self.topology.cue.iter().map(|p| (p.x, p.y)).collect()
    }

    fn pair_positions(&self) -> Vec<((f64, f64), (f64, f64))> {
        self.topology.d2d_pairs.iter().map(|(a, b)| ((a.x, a.y), (b.x, b.y))).collect()
    }

    /// Sum rate (bits/s/Hz) with pair `k` on RB `rbs[k]`, or silent for None.
    fn sum_rate(&self, rbs: Vec<Option<usize>>) -> PyResult<f64> {
        if rbs.len() != self.topology.pair_count() || rbs.iter().flatten().any(|&r| r >= self.topology.rb_count) {
            return Err(PyValueError::new_err("one RB (or None) per pair, each below rb_count"));
        }
        let alloc = radio::Allocation::with_assignment(self.topology.rb_count, rbs, &self.params);
        Ok(radio::sum_rate(&alloc, &self.gains, &self.params))
    }

    /// Runs the auction; returns (rb per pair, sum rate, rounds, valuation calls).
    #[pyo3(signature = (epsilon_fraction=0.01, signaling_cost=0.05))]
    fn auction(&self, epsilon_fraction: f64, signaling_cost: f64) -> PyResult<(Vec<Option<usize>>, f64, usize, usize)> {
        let config = RicaConfig { epsilon_fraction, signaling_cost, ..RicaConfig::default() };
        let inst = rica::d2d_auction(&self.topology, &self.gains, &self.params, &config).map_err(value_error)?;
        let state = rica::run_auction(&inst, config.max_rounds).map_err(value_error)?;
        let alloc = rica::allocation_from_auction(&state, &self.topology, &self.params).map_err(value_error)?;
        let rate = radio::sum_rate(&alloc, &self.gains, &self.params);
        Ok((state.assignment, rate, state.round, state.valuation_calls))
    }

    fn random_sum_rate(&self, seed: u64) -> f64 {
        let alloc = rica::random_allocation(&self.topology, &self.params, seed);
        radio::sum_rate(&alloc, &self.gains, &self.params)
    }

    fn all_cellular_sum_rate(&self) -> f64 {
        rica::all_cellular_sum_rate(&self.topology, &self.gains, &self.params)
    }

    /// Best assignment by full enumeration; returns (rb per pair, sum rate).
    #[pyo3(signature = (max_assignments=2_000_000))]
    fn exhaustive_best(&self, max_assignments: usize) -> PyResult<(Vec<Option<usize>>, f64)> {
        let budget = OracleBudget { max_assignments, ..OracleBudget::default() };
        let (alloc, v) =
            oracle::exhaustive_best_allocation(&self.topology, &self.gains, &self.params, &budget).map_err(value_error)?;
        Ok((alloc.rb_of_d2d, v))
    }

    /// Stackelberg game between pair `pair` and the cellular link on `rb`;
    /// returns (price, power, leader utility, follower utility).
    #[pyo3(signature = (pair, rb, grid_points=2000))]
    fn stackelberg(&self, pair: usize, rb: usize, grid_points: usize) -> PyResult<(f64, f64, f64, f64)> {
        if pair >= self.topology.pair_count() || rb >= self.topology.rb_count {
            return Err(PyValueError::new_err("pair or rb out of range"));
        }
        let mut inst = StackelbergInstance::from_topology(&self.gains, &self.params, pair, rb);
        inst.lambda_grid = PriceGrid { points: grid_points, ..inst.lambda_grid };
        let o = stackelberg::leader_optimize(&inst).map_err(value_error)?;
        Ok((o.lambda_star, o.p_star_w, o.u_leader, o.u_follower))
    }
}

fn power_instance(
    direct: Vec<f64>,
    cross: Vec<Vec<f64>>,
    external: Vec<f64>,
    targets: Vec<f64>,
    p_max: f64,
) -> PyResult<PowerGameInstance> {
    let n = direct.len();
    if cross.len() != n || external.len() != n {
        return Err(PyValueError::new_err("direct, cross and external must have one entry per player"));
    }
    let players = direct
        .into_iter()
        .zip(cross)
        .zip(external)
        .map(|((direct_gain, cross_gains), external_w)| PowerPlayer { direct_gain, cross_gains, external_w })
        .collect();
    let inst = PowerGameInstance { players, sinr_targets: targets, p_max_w: p_max };
    inst.validate().map_err(value_error)?;
    Ok(inst)
}

/// Best-response power iteration from zero; returns (iterates, converged).
#[pyfunction]
#[pyo3(signature = (direct, cross, external, targets, p_max, max_iters=1000, tol=1e-12))]
fn power_game(
    direct: Vec<f64>,
    cross: Vec<Vec<f64>>,
    external: Vec<f64>,
    targets: Vec<f64>,
    p_max: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<(Vec<Vec<f64>>, bool)> {
    let inst = power_instance(direct, cross, external, targets, p_max)?;
    let trace = power_control::run_power_game(&inst, &vec![0.0; inst.len()], max_iters, tol).map_err(value_error)?;
    Ok((trace.iterates, trace.converged))
}

/// Minimal powers meeting every target, from the linear system.
#[pyfunction]
fn solve_min_power(
    direct: Vec<f64>,
    cross: Vec<Vec<f64>>,
    external: Vec<f64>,
    targets: Vec<f64>,
    p_max: f64,
) -> PyResult<Vec<f64>> {
    let inst = power_instance(direct, cross, external, targets, p_max)?;
    oracle::solve_min_power(&inst).map_err(value_error)
}

/// Cumulative packets held after each round of content distribution.
#[pyfunction]
#[pyo3(signature = (allocator, rounds=50, seed=1, n_d2d=20, k_seeds=4, m_cue=6, file_packets=500, packets_per_rate_unit=10.0))]
#[allow(clippy::too_many_arguments)]
fn content_distribution(
    allocator: &str,
    rounds: usize,
    seed: u64,
    n_d2d: usize,
    k_seeds: usize,
    m_cue: usize,
    file_packets: u64,
    packets_per_rate_unit: f64,
) -> PyResult<Vec<u64>> {
    let allocator = match allocator {
        "coalition" => Allocator::Coalition,
        "noncooperative" => Allocator::Noncooperative,
        other => return Err(PyValueError::new_err(format!("unknown allocator {other}"))),
    };
    let scenario = ContentScenario { n_d2d, k_seeds, m_cue, file_packets, packets_per_rate_unit };
    let params = radio::RadioParams::default();
    coalition::simulate_content_distribution(&scenario, &params, allocator, rounds, seed)
        .map(|c| c.cumulative_packets)
        .map_err(value_error)
}

/// Default config file for an experiment.
#[pyfunction]
#[pyo3(signature = (experiment="sumrate-vs-pairs"))]
fn default_config(experiment: &str) -> PyResult<String> {
    let kind = ExperimentKind::ALL
        .into_iter()
        .find(|k| k.name() == experiment)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment {experiment}")))?;
    Ok(ExperimentConfig::for_experiment(kind).to_toml())
}

/// Runs an experiment from config text without touching the disk; returns
/// (file name, CSV or JSON contents, summary as JSON).
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<(String, String, String)> {
    let cfg = harness::parse_config(config).map_err(value_error)?;
    let out = py.detach(|| harness::execute(&cfg)).map_err(value_error)?;
    let summary = serde_json::to_string(&out.summary).map_err(value_error)?;
    Ok((out.file_name.to_string(), out.contents, summary))
}

/// Cross-checks every allocator against the brute-force references; returns
/// (all passed, report as JSON).
#[pyfunction]
#[pyo3(signature = (seed=1, instances=20, max_assignments=2_000_000))]
fn oracle_check(py: Python<'_>, seed: u64, instances: usize, max_assignments: usize) -> PyResult<(bool, String)> {
    let budget = OracleBudget { max_assignments, ..OracleBudget::default() };
    let report = py.detach(|| harness::oracle_check(seed, instances, &budget));
    Ok((report.passed(), serde_json::to_string(&report).map_err(value_error)?))
}

#[pymodule]
fn d2dsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadioParams>()?;
    m.add_class::<PyDrop>()?;
    m.add_function(wrap_pyfunction!(power_game, m)?)?;
    m.add_function(wrap_pyfunction!(solve_min_power, m)?)?;
    m.add_function(wrap_pyfunction!(content_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
