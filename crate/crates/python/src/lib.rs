//! Python bindings: channels, consensus and gossip models, the bandit, the
//! oracle, single client sessions and the replicated experiments.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use v2xsim_core::bandit::{self, Policy};
use v2xsim_core::client::{self, ClientSession, NoContention, SelectionMode, SessionConfig, SessionRng};
use v2xsim_core::consensus::{self, analytic};
use v2xsim_core::engine::{self, ReplicationMetrics};
use v2xsim_core::geometry::{self, SceneConfig};
use v2xsim_core::oracle::{self, CostCap};
use v2xsim_core::seed::rng_from_seed;
use v2xsim_core::{gossip, report, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Toml(_) | Error::NoNetwork => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::Csv(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_policy(name: &str, epsilon: f64) -> PyResult<Policy> {
    match name {
        "thompson" | "ts" => Ok(Policy::ThompsonSampling),
        "epsilon_greedy" | "egreedy" => Ok(Policy::EpsilonGreedy { epsilon }),
        _ => Err(PyValueError::new_err(format!("unknown policy {name:?}; expected \"thompson\" or \"epsilon_greedy\""))),
    }
}

fn parse_mode(name: &str) -> PyResult<SelectionMode> {
    match name {
        "bandit" => Ok(SelectionMode::Bandit),
        "random" => Ok(SelectionMode::UniformRandom),
        "oracle" => Ok(SelectionMode::Oracle),
        _ => Err(PyValueError::new_err(format!("unknown mode {name:?}; expected \"bandit\", \"random\" or \"oracle\""))),
    }
}

fn costs_or_default(costs: Option<PyRef<'_, LatencyCosts>>) -> consensus::LatencyCosts {
    costs.map(|c| c.inner.clone()).unwrap_or_default()
}

fn channel_specs(channels: &[PyRef<'_, ChannelSpec>]) -> Vec<consensus::ChannelSpec> {
    channels.iter().map(|c| c.inner.clone()).collect()
}

/// Slot costs of the consensus phases.
#[pyclass(module = "v2xsim")]
struct LatencyCosts {
    inner: consensus::LatencyCosts,
}

#[pymethods]
impl LatencyCosts {
    #[new]
    #[pyo3(signature = (c_endorse=1, c_order=1, max_retries=2, slot_duration_s=0.1))]
    fn new(c_endorse: u32, c_order: u32, max_retries: u32, slot_duration_s: f64) -> PyResult<Self> {
        let inner = consensus::LatencyCosts { c_endorse, c_order, max_retries, slot_duration_s };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn c_endorse(&self) -> u32 {
        self.inner.c_endorse
    }

    #[getter]
    fn c_order(&self) -> u32 {
        self.inner.c_order
    }

    #[getter]
    fn max_retries(&self) -> u32 {
        self.inner.max_retries
    }

    #[getter]
    fn slot_duration_s(&self) -> f64 {
        self.inner.slot_duration_s
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "LatencyCosts(c_endorse={}, c_order={}, max_retries={}, slot_duration_s={})",
            c.c_endorse, c.c_order, c.max_retries, c.slot_duration_s
        )
    }
}

/// A channel: its peer count and per-peer fault probability.
#[pyclass(module = "v2xsim")]
struct ChannelSpec {
    inner: consensus::ChannelSpec,
}

#[pymethods]
impl ChannelSpec {
    #[new]
    fn new(channel_id: u32, n_peers: u32, fault_prob: f64) -> PyResult<Self> {
        Ok(Self { inner: consensus::ChannelSpec::new(channel_id, n_peers, fault_prob).map_err(to_py)? })
    }

    #[getter]
    fn channel_id(&self) -> u32 {
        self.inner.channel_id
    }

    #[getter]
    fn n_peers(&self) -> u32 {
        self.inner.n_peers
    }

    #[getter]
    fn fault_prob(&self) -> f64 {
        self.inner.fault_prob
    }

    /// Largest number of faulty peers a round tolerates.
    #[getter]
    fn fault_margin(&self) -> u32 {
        self.inner.fault_margin()
    }

    fn quorum_success_prob(&self) -> f64 {
        analytic::quorum_success_prob(self.inner.n_peers, self.inner.fault_prob)
    }

    /// Probability that a transaction is endorsed and committed.
    #[pyo3(signature = (costs=None))]
    fn success_prob(&self, costs: Option<PyRef<'_, LatencyCosts>>) -> f64 {
        analytic::transaction_success_prob(&self.inner, &costs_or_default(costs))
    }

    /// Mean latency of the validation phase in slots.
    #[pyo3(signature = (costs=None))]
    fn expected_latency_slots(&self, costs: Option<PyRef<'_, LatencyCosts>>) -> f64 {
        analytic::expected_latency_slots(&self.inner, &costs_or_default(costs))
    }

    /// One simulated transaction as a dict with `endorsed`, `ec_success`,
    /// `latency_slots` and `retries_used`.
    #[pyo3(signature = (seed, costs=None))]
    fn simulate<'py>(&self, py: Python<'py>, seed: u64, costs: Option<PyRef<'_, LatencyCosts>>) -> PyResult<Bound<'py, PyDict>> {
        let tx = consensus::simulate_transaction(&self.inner, &mut rng_from_seed(seed), &costs_or_default(costs));
        let d = PyDict::new(py);
        d.set_item("endorsed", tx.endorsed)?;
        d.set_item("ec_success", tx.ec_success)?;
        d.set_item("latency_slots", tx.latency_slots)?;
        d.set_item("retries_used", tx.retries_used)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("ChannelSpec(channel_id={}, n_peers={}, fault_prob={})", self.inner.channel_id, self.inner.n_peers, self.inner.fault_prob)
    }
}

/// RSU and OBU placements of one sampled scene.
#[pyclass(module = "v2xsim")]
struct SpatialScene {
    inner: geometry::SpatialScene,
}

#[pymethods]
impl SpatialScene {
    #[getter]
    fn rsu_positions(&self) -> Vec<(f64, f64)> {
        self.inner.rsu_positions.clone()
    }

    /// `(x, y, speed_mps, heading_rad)` per vehicle.
    #[getter]
    fn vehicles(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner.obu_states.iter().map(|o| (o.position.0, o.position.1, o.speed_mps, o.heading_rad)).collect()
    }

    fn closest_rsu(&self, x: f64, y: f64) -> Option<usize> {
        self.inner.closest_rsu((x, y))
    }

    fn __len__(&self) -> usize {
        self.inner.rsu_positions.len() + self.inner.obu_states.len()
    }
}

/// Per-context best channels and per-channel estimates.
#[pyclass(module = "v2xsim")]
struct OracleTable {
    inner: oracle::OracleTable,
}

#[pymethods]
impl OracleTable {
    /// Index of the best channel for `bin`, or `None` when no channel is feasible.
    #[pyo3(signature = (bin=0))]
    fn best_channel(&self, bin: usize) -> Option<usize> {
        self.inner.best_channel(bin)
    }

    #[pyo3(signature = (bin=0))]
    fn expected_rewards(&self, bin: usize) -> PyResult<Vec<f64>> {
        let row = self.inner.estimates.get(bin).ok_or_else(|| PyValueError::new_err(format!("no context bin {bin}")))?;
        Ok(row.iter().map(|e| e.expected_reward).collect())
    }

    #[pyo3(signature = (bin=0))]
    fn expected_latencies_s(&self, bin: usize) -> PyResult<Vec<f64>> {
        let row = self.inner.estimates.get(bin).ok_or_else(|| PyValueError::new_err(format!("no context bin {bin}")))?;
        Ok(row.iter().map(|e| e.expected_latency_s).collect())
    }

    #[getter]
    fn n_contexts(&self) -> usize {
        self.inner.entries.len()
    }
}

/// Beta-Bernoulli posteriors per (context bin, arm) and a selection policy.
#[pyclass(module = "v2xsim")]
struct BanditState {
    inner: bandit::BanditState,
    rng: v2xsim_core::seed::SimRng,
}

#[pymethods]
impl BanditState {
    #[new]
    #[pyo3(signature = (n_arms, policy="thompson", epsilon=0.1, bin_edges=None, seed=0))]
    fn new(n_arms: usize, policy: &str, epsilon: f64, bin_edges: Option<Vec<f64>>, seed: u64) -> PyResult<Self> {
        let inner = bandit::BanditState::new(n_arms, parse_policy(policy, epsilon)?, bin_edges.unwrap_or_default()).map_err(to_py)?;
        Ok(Self { inner, rng: rng_from_seed(seed) })
    }

    #[getter]
    fn n_arms(&self) -> usize {
        self.inner.n_arms()
    }

    #[getter]
    fn n_bins(&self) -> usize {
        self.inner.n_bins()
    }

    fn context_bin(&self, t_dwell_s: f64) -> usize {
        self.inner.context_bin(t_dwell_s)
    }

    #[pyo3(signature = (bin=0))]
    fn select_arm(&mut self, bin: usize) -> PyResult<usize> {
        self.inner.select_arm(bin, &mut self.rng).map_err(to_py)
    }

    fn update(&mut self, bin: usize, arm: usize, reward: u8) -> PyResult<()> {
        self.inner.update_posterior(bin, arm, reward).map_err(to_py)
    }

    /// `(alpha, beta)` of one posterior.
    fn posterior(&self, bin: usize, arm: usize) -> PyResult<(f64, f64)> {
        let p = self.inner.posterior(bin, arm).map_err(to_py)?;
        Ok((p.alpha, p.beta))
    }

    fn total_observations(&self) -> f64 {
        self.inner.total_observations()
    }
}

/// One operating-phase transaction of a client session.
#[pyclass(module = "v2xsim", get_all)]
struct TxRecord {
    vehicle_id: u64,
    slot_submitted: u64,
    channel_id: u32,
    ec_success: bool,
    latency_slots: u64,
    committed_within_dwell: bool,
    reward: u8,
    regret: u8,
}

impl From<client::TxRecord> for TxRecord {
    fn from(r: client::TxRecord) -> Self {
        Self {
            vehicle_id: r.vehicle_id,
            slot_submitted: r.slot_submitted,
            channel_id: r.channel_id,
            ec_success: r.ec_success,
            latency_slots: r.latency_slots,
            committed_within_dwell: r.committed_within_dwell,
            reward: r.reward,
            regret: r.regret,
        }
    }
}

#[pymethods]
impl TxRecord {
    fn __repr__(&self) -> String {
        format!(
            "TxRecord(slot_submitted={}, channel_id={}, latency_slots={}, reward={}, regret={})",
            self.slot_submitted, self.channel_id, self.latency_slots, self.reward, self.regret
        )
    }
}

/// Scenario configuration; unset keys take their defaults.
#[pyclass(module = "v2xsim")]
struct ScenarioConfig {
    inner: engine::ScenarioConfig,
}

#[pymethods]
impl ScenarioConfig {
    /// Parses TOML text, or returns the defaults when `toml` is `None`.
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(text) => engine::ScenarioConfig::from_toml_str(text).map_err(to_py)?,
            None => engine::ScenarioConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: engine::ScenarioConfig::from_file(&path).map_err(to_py)? })
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    #[setter]
    fn set_master_seed(&mut self, v: u64) {
        self.inner.master_seed = v;
    }

    #[getter]
    fn replications(&self) -> u32 {
        self.inner.replications
    }

    #[setter]
    fn set_replications(&mut self, v: u32) {
        self.inner.replications = v;
    }

    #[getter]
    fn n_channels(&self) -> u32 {
        self.inner.n_channels
    }

    #[setter]
    fn set_n_channels(&mut self, v: u32) {
        self.inner.n_channels = v;
    }

    #[getter]
    fn t_train_slots(&self) -> u64 {
        self.inner.t_train_slots
    }

    #[setter]
    fn set_t_train_slots(&mut self, v: u64) {
        self.inner.t_train_slots = v;
    }

    #[getter]
    fn oracle_reps(&self) -> u32 {
        self.inner.oracle_reps
    }

    #[setter]
    fn set_oracle_reps(&mut self, v: u32) {
        self.inner.oracle_reps = v;
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    /// Draws the channels of one network.
    fn build_network(&self, seed: u64) -> PyResult<Vec<ChannelSpec>> {
        let chs = engine::build_network(&self.inner, None, &mut rng_from_seed(seed)).map_err(to_py)?;
        Ok(chs.into_iter().map(|inner| ChannelSpec { inner }).collect())
    }
}

/// Per-replication metrics of an experiment, exportable as CSV text.
#[pyclass(module = "v2xsim")]
struct MetricsLog {
    inner: engine::MetricsLog,
}

fn replication_dict<'py>(py: Python<'py>, r: &ReplicationMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("policy", r.policy.as_str())?;
    d.set_item("replication", r.replication)?;
    d.set_item("n_channels", r.n_channels)?;
    d.set_item("t_train_slots", r.t_train_slots)?;
    d.set_item("n_clients", r.n_clients)?;
    d.set_item("transactions", r.transactions)?;
    d.set_item("commits", r.commits)?;
    d.set_item("mean_latency_s", r.mean_latency_s)?;
    d.set_item("throughput_tps", r.throughput_tps)?;
    d.set_item("mean_reward", r.mean_reward)?;
    d.set_item("mean_regret", r.mean_regret)?;
    d.set_item("oracle_channel", r.oracle_channel)?;
    d.set_item("selection_counts", r.selection_counts.clone())?;
    Ok(d)
}

#[pymethods]
impl MetricsLog {
    fn replications<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner.replications.iter().map(|r| replication_dict(py, r)).collect()
    }

    /// CSV text of one table: `replications`, `selections`,
    /// `selection_probabilities`, `regret` or `scalability`.
    fn csv(&self, table: &str) -> PyResult<String> {
        let mut buf = Vec::new();
        let log = &self.inner;
        match table {
            "replications" => report::write_replications_csv(log, &mut buf),
            "selections" => report::write_selections_csv(log, &mut buf),
            "selection_probabilities" => report::write_selection_probabilities_csv(log, &mut buf),
            "regret" => report::write_regret_csv(log, &mut buf),
            "scalability" => report::write_scalability_csv(log, &mut buf),
            _ => return Err(PyValueError::new_err(format!("unknown table {table:?}"))),
        }
        .map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.replications.len()
    }
}

#[pyfunction]
fn gossip_rounds(n_peers: u32) -> PyResult<u32> {
    if n_peers == 0 {
        return Err(PyValueError::new_err("group size must be at least 1"));
    }
    Ok(consensus::gossip_rounds(n_peers))
}

#[pyfunction]
fn rounds_to_dissemination(n: u32, threshold: f64) -> PyResult<u32> {
    gossip::rounds_to_dissemination(n, threshold).map_err(to_py)
}

/// Expected uninformed fraction after each round, starting from one informed peer.
#[pyfunction]
fn analytic_trajectory(n: u32, rounds: u32) -> PyResult<Vec<f64>> {
    gossip::analytic_trajectory(n, rounds).map_err(to_py)
}

#[pyfunction]
fn monte_carlo_mean_uninformed(py: Python<'_>, n: u32, rounds: u32, reps: u32, seed: u64) -> PyResult<Vec<f64>> {
    py.detach(|| gossip::monte_carlo_mean_uninformed(n, rounds, reps, seed)).map_err(to_py)
}

#[pyfunction]
fn dwell_time(network_radius_m: f64, speed_mps: f64) -> PyResult<f64> {
    geometry::dwell_time(network_radius_m, speed_mps).map_err(to_py)
}

/// `(r_ec, r_ld, r)` of one transaction.
#[pyfunction]
fn compute_reward(ec_success: bool, latency_s: f64, t_dwell_s: f64) -> (u8, u8, u8) {
    let r = bandit::compute_reward(ec_success, latency_s, t_dwell_s);
    (r.r_ec, r.r_ld, r.r)
}

#[pyfunction]
#[pyo3(signature = (seed, length_m=2000.0, width_m=2000.0, rsu_density=2.5e-5, obu_density=5.0e-5, speed_min_mps=5.0, speed_max_mps=30.0))]
#[allow(clippy::too_many_arguments)]
fn sample_scene(
    seed: u64,
    length_m: f64,
    width_m: f64,
    rsu_density: f64,
    obu_density: f64,
    speed_min_mps: f64,
    speed_max_mps: f64,
) -> PyResult<SpatialScene> {
    let cfg = SceneConfig { length_m, width_m, rsu_density, obu_density, speed_min_mps, speed_max_mps, ..SceneConfig::default() };
    Ok(SpatialScene { inner: geometry::sample_scene(&cfg, seed).map_err(to_py)? })
}

/// `(n_peers, p_f, mean_latency_s)` per grid cell, row-major over `n_grid`.
#[pyfunction]
#[pyo3(signature = (n_grid, pf_grid, reps, seed, costs=None))]
fn latency_heatmap(
    py: Python<'_>,
    n_grid: Vec<u32>,
    pf_grid: Vec<f64>,
    reps: u32,
    seed: u64,
    costs: Option<PyRef<'_, LatencyCosts>>,
) -> PyResult<Vec<(u32, f64, f64)>> {
    let costs = costs_or_default(costs);
    let map = py.detach(|| consensus::latency_heatmap(&n_grid, &pf_grid, reps, seed, &costs)).map_err(to_py)?;
    Ok(map.cells.iter().map(|c| (c.n_peers, c.p_f, c.mean_latency_s)).collect())
}

/// Best channel per dwell-time context by Monte-Carlo. `cost_cap_s = None`
/// caps expected latency at the context's dwell time.
#[pyfunction]
#[pyo3(signature = (channels, contexts, reps=20_000, seed=0, costs=None, cost_cap_s=None))]
fn solve_oracle(
    py: Python<'_>,
    channels: Vec<PyRef<'_, ChannelSpec>>,
    contexts: Vec<f64>,
    reps: u32,
    seed: u64,
    costs: Option<PyRef<'_, LatencyCosts>>,
    cost_cap_s: Option<f64>,
) -> PyResult<OracleTable> {
    let chs = channel_specs(&channels);
    let costs = costs_or_default(costs);
    let cap = cost_cap_s.map_or(CostCap::Dwell, CostCap::Fixed);
    let inner = py.detach(|| oracle::solve_oracle(&chs, &contexts, &costs, reps, cap, seed)).map_err(to_py)?;
    Ok(OracleTable { inner })
}

/// Runs one client for `horizon_slots` slots on the given channels and
/// returns its operating-phase transactions.
#[pyfunction]
#[pyo3(signature = (channels, horizon_slots, seed, policy="thompson", epsilon=0.1, t_train_slots=100, arrival_prob=1.0, mode="bandit", costs=None, oracle_reps=20_000))]
#[allow(clippy::too_many_arguments)]
fn run_session(
    py: Python<'_>,
    channels: Vec<PyRef<'_, ChannelSpec>>,
    horizon_slots: u64,
    seed: u64,
    policy: &str,
    epsilon: f64,
    t_train_slots: u64,
    arrival_prob: f64,
    mode: &str,
    costs: Option<PyRef<'_, LatencyCosts>>,
    oracle_reps: u32,
) -> PyResult<Vec<TxRecord>> {
    let chs = channel_specs(&channels);
    let costs = costs_or_default(costs);
    let cfg = SessionConfig { t_train_slots, arrival_prob, mode: parse_mode(mode)?, policy: parse_policy(policy, epsilon)?, ..SessionConfig::default() };
    cfg.validate().map_err(to_py)?;
    let records = py
        .detach(|| -> v2xsim_core::Result<Vec<client::TxRecord>> {
            let dwell_s = costs.to_seconds(horizon_slots);
            let oracle = oracle::solve_oracle(&chs, &[dwell_s], &costs, oracle_reps, CostCap::Dwell, seed)?;
            let network = client::Network { channels: chs, costs, oracle, network_radius_m: SceneConfig::default().network_radius_m };
            let mut session = ClientSession::with_horizon(0, horizon_slots, &network, &cfg)?;
            client::run_session(&mut session, &network, &mut SessionRng::new(seed), &mut NoContention)
        })
        .map_err(to_py)?;
    Ok(records.into_iter().map(TxRecord::from).collect())
}

/// ε-greedy and Thompson sampling on identical networks and seeds.
#[pyfunction]
fn run_convergence(py: Python<'_>, cfg: PyRef<'_, ScenarioConfig>) -> PyResult<MetricsLog> {
    let c = &cfg.inner;
    let inner = py.detach(|| engine::run_experiment_convergence(c)).map_err(to_py)?;
    Ok(MetricsLog { inner })
}

/// Post-training regret per (policy, training length, channel count).
/// Grids default to the config's `regret` table.
#[pyfunction]
#[pyo3(signature = (cfg, t_train_grid=None, n_ch_grid=None))]
fn run_regret(py: Python<'_>, cfg: PyRef<'_, ScenarioConfig>, t_train_grid: Option<Vec<u64>>, n_ch_grid: Option<Vec<u32>>) -> PyResult<MetricsLog> {
    let c = &cfg.inner;
    let t = t_train_grid.unwrap_or_else(|| c.regret.t_train_grid.clone());
    let n = n_ch_grid.unwrap_or_else(|| c.regret.n_ch_grid.clone());
    let inner = py.detach(|| engine::run_experiment_regret(c, &t, &n)).map_err(to_py)?;
    Ok(MetricsLog { inner })
}

/// Thompson sampling, uniform-random and oracle selection per client count.
#[pyfunction]
#[pyo3(signature = (cfg, n_clients_grid=None))]
fn run_scalability(py: Python<'_>, cfg: PyRef<'_, ScenarioConfig>, n_clients_grid: Option<Vec<u32>>) -> PyResult<MetricsLog> {
    let c = &cfg.inner;
    let grid = n_clients_grid.unwrap_or_else(|| c.scalability.n_clients_grid.clone());
    let inner = py.detach(|| engine::run_experiment_scalability(c, &grid)).map_err(to_py)?;
    Ok(MetricsLog { inner })
}

#[pymodule]
fn v2xsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<LatencyCosts>()?;
    m.add_class::<ChannelSpec>()?;
    m.add_class::<SpatialScene>()?;
    m.add_class::<OracleTable>()?;
    m.add_class::<BanditState>()?;
    m.add_class::<TxRecord>()?;
    m.add_class::<ScenarioConfig>()?;
    m.add_class::<MetricsLog>()?;
    m.add_function(wrap_pyfunction!(gossip_rounds, m)?)?;
    m.add_function(wrap_pyfunction!(rounds_to_dissemination, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_mean_uninformed, m)?)?;
    m.add_function(wrap_pyfunction!(dwell_time, m)?)?;
    m.add_function(wrap_pyfunction!(compute_reward, m)?)?;
    m.add_function(wrap_pyfunction!(sample_scene, m)?)?;
    m.add_function(wrap_pyfunction!(latency_heatmap, m)?)?;
    m.add_function(wrap_pyfunction!(solve_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(run_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(run_regret, m)?)?;
    m.add_function(wrap_pyfunction!(run_scalability, m)?)?;
    Ok(())
}
