//! Scenario configuration, network construction and the experiment runners.
//!
//! Every replication draws its seeds from `master_seed` through
//! [`derive_path`] with a fixed experiment tag and the replication index, so
//! replications are independent of each other and of the order they run in.
//! Within a replication, the competing policies reuse the same network and
//! session seeds.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{Policy, TrainingSchedule};
use crate::client::{join, ClientSession, FifoQueues, Network, NoContention, QueueModel, SelectionMode, SessionConfig, SessionRng, TxRecord};
use crate::consensus::{ChannelSpec, LatencyCosts};
use crate::error::{Error, Result};
use crate::geometry::{dwell_time, sample_scene, sample_vehicle, SceneConfig, SpatialScene};
use crate::oracle::{solve_oracle, CostCap};
use crate::seed::{derive_path, rng_from_seed};

const TAG_CONVERGENCE: u64 = 1;
const TAG_REGRET: u64 = 2;
const TAG_SCALABILITY: u64 = 3;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Distribution of a channel's per-peer fault probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PfDistribution {
    Uniform { low: f64, high: f64 },
    Fixed { value: f64 },
    /// Channel `k` gets `values[k % len]`.
    Cycle { values: Vec<f64> },
}

impl Default for PfDistribution {
    fn default() -> Self {
        PfDistribution::Uniform { low: 0.0, high: 0.5 }
    }
}

impl PfDistribution {
    fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            PfDistribution::Uniform { low, high } if ok(*low) && ok(*high) && low <= high => Ok(()),
            PfDistribution::Fixed { value } if ok(*value) => Ok(()),
            PfDistribution::Cycle { values } if !values.is_empty() && values.iter().all(|&p| ok(p)) => Ok(()),
            _ => Err(config_err(format!("invalid pf_distribution {self:?}"))),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        match self {
            PfDistribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            PfDistribution::Fixed { value } => *value,
            PfDistribution::Cycle { values } => values[k % values.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contention {
    #[default]
    Fifo,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub n_grid: Vec<u32>,
    pub pf_grid: Vec<f64>,
    pub reps: u32,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![4, 5, 7, 10, 13, 16, 20, 30, 50, 75, 100],
            pf_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
            reps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GossipConfig {
    pub n_list: Vec<u32>,
    /// Dissemination threshold; `1/n` per group when unset.
    pub threshold: Option<f64>,
    pub mc_reps: u32,
}

impl Default for GossipConfig {
    fn default() -> Self {
        Self { n_list: vec![5, 10, 50, 100], threshold: None, mc_reps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub horizon_slots: u64,
    /// Keep every `log_every`-th slot in the selection and probability logs.
    pub log_every: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { horizon_slots: 10_000, log_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegretConfig {
    pub t_train_grid: Vec<u64>,
    pub n_ch_grid: Vec<u32>,
    /// Session length; must exceed every training length.
    pub horizon_slots: u64,
}

impl Default for RegretConfig {
    fn default() -> Self {
        Self { t_train_grid: vec![100, 1_000, 10_000], n_ch_grid: vec![10, 20, 30], horizon_slots: 15_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalabilityConfig {
    pub n_clients_grid: Vec<u32>,
    pub arrival_prob: f64,
    pub contention: Contention,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        Self { n_clients_grid: vec![10, 50, 100, 200], arrival_prob: 0.01, contention: Contention::Fifo }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    pub replications: u32,
    pub scene: SceneConfig,
    pub n_channels: u32,
    /// Inclusive peer-count range per channel.
    pub peer_range: [u32; 2],
    /// Peers available to form channels.
    pub total_peers: u32,
    pub pf_distribution: PfDistribution,
    /// Peers are RSUs of the sampled scene; channels may not need more
    /// peers than the scene has RSUs.
    pub rsu_backed: bool,
    /// Policy of single-policy runs.
    pub policy: Policy,
    /// Exploration rate of the ε-greedy arm of comparative experiments.
    pub epsilon: f64,
    pub t_train_slots: u64,
    pub training_schedule: TrainingSchedule,
    pub costs: LatencyCosts,
    pub n_clients: u32,
    pub arrival_prob: f64,
    /// Dwell-time bin edges in seconds; empty means a single context.
    pub bin_edges: Vec<f64>,
    pub oracle_reps: u32,
    pub cost_cap: CostCap,
    pub heatmap: HeatmapConfig,
    pub gossip: GossipConfig,
    pub convergence: ConvergenceConfig,
    pub regret: RegretConfig,
    pub scalability: ScalabilityConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            replications: 100,
            scene: SceneConfig::default(),
            n_channels: 10,
            peer_range: [5, 10],
            total_peers: 100,
            pf_distribution: PfDistribution::default(),
            rsu_backed: false,
            policy: Policy::ThompsonSampling,
            epsilon: 0.1,
            t_train_slots: 100,
            training_schedule: TrainingSchedule::RoundRobin,
            costs: LatencyCosts::default(),
            n_clients: 10,
            arrival_prob: 1.0,
            bin_edges: Vec::new(),
            oracle_reps: 20_000,
            cost_cap: CostCap::Dwell,
            heatmap: HeatmapConfig::default(),
            gossip: GossipConfig::default(),
            convergence: ConvergenceConfig::default(),
            regret: RegretConfig::default(),
            scalability: ScalabilityConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.costs.validate()?;
        self.pf_distribution.validate()?;
        let [lo, hi] = self.peer_range;
        if self.n_channels == 0 {
            return Err(config_err("n_channels must be at least 1"));
        }
        if lo == 0 || lo > hi || hi > self.total_peers {
            return Err(config_err(format!("peer_range [{lo}, {hi}] not within [1, {}]", self.total_peers)));
        }
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(config_err(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if let Policy::EpsilonGreedy { epsilon } = self.policy {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(config_err(format!("policy epsilon {epsilon} outside [0, 1]")));
            }
        }
        for p in [self.arrival_prob, self.scalability.arrival_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(config_err(format!("arrival probability {p} outside [0, 1]")));
            }
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) || self.bin_edges.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(config_err("bin_edges must be positive and strictly increasing"));
        }
        if self.oracle_reps == 0 {
            return Err(config_err("oracle_reps must be at least 1"));
        }
        let h = &self.heatmap;
        if h.n_grid.is_empty() || h.pf_grid.is_empty() || h.n_grid.contains(&0) || h.reps == 0 {
            return Err(config_err("heatmap grids must be non-empty with positive peer counts and reps"));
        }
        if h.pf_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(config_err("heatmap pf_grid values must lie in [0, 1]"));
        }
        let g = &self.gossip;
        if g.n_list.is_empty() || g.n_list.contains(&0) || g.mc_reps == 0 {
            return Err(config_err("gossip n_list must be non-empty with positive sizes and mc_reps"));
        }
        if let Some(t) = g.threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(config_err(format!("gossip threshold {t} outside (0, 1)")));
            }
        }
        if self.convergence.horizon_slots == 0 || self.convergence.log_every == 0 {
            return Err(config_err("convergence horizon_slots and log_every must be positive"));
        }
        let r = &self.regret;
        if r.t_train_grid.is_empty() || r.n_ch_grid.is_empty() || r.n_ch_grid.contains(&0) {
            return Err(config_err("regret grids must be non-empty with positive channel counts"));
        }
        if r.t_train_grid.iter().any(|&t| t >= r.horizon_slots) {
            return Err(config_err("regret horizon_slots must exceed every t_train"));
        }
        if self.scalability.n_clients_grid.is_empty() || self.scalability.n_clients_grid.contains(&0) {
            return Err(config_err("scalability n_clients_grid must be non-empty and positive"));
        }
        Ok(())
    }

    fn epsilon_greedy(&self) -> Policy {
        Policy::EpsilonGreedy { epsilon: self.epsilon }
    }

    fn session_config(&self, mode: SelectionMode, policy: Policy, t_train_slots: u64, arrival_prob: f64) -> SessionConfig {
        SessionConfig {
            t_train_slots,
            training_schedule: self.training_schedule,
            arrival_prob,
            mode,
            policy,
            bin_edges: self.bin_edges.clone(),
        }
    }

    /// Dwell range implied by the scene's radius and speed range.
    fn dwell_range_s(&self) -> Result<(f64, f64)> {
        let r = self.scene.network_radius_m;
        Ok((dwell_time(r, self.scene.speed_max_mps)?, dwell_time(r, self.scene.speed_min_mps)?))
    }
}

/// Draws the channels of a network. Peer counts are discrete uniform on
/// `peer_range`; fault probabilities follow `pf_distribution`. Channel `k`
/// consumes draws in order, so a larger `n_channels` extends a smaller one.
pub fn build_network<R: Rng + ?Sized>(cfg: &ScenarioConfig, scene: Option<&SpatialScene>, rng: &mut R) -> Result<Vec<ChannelSpec>> {
    cfg.validate()?;
    let [lo, hi] = cfg.peer_range;
    if cfg.rsu_backed {
        let scene = scene.ok_or_else(|| config_err("rsu_backed network needs a scene"))?;
        let rsus = scene.rsu_positions.len();
        if hi as usize > rsus {
            return Err(config_err(format!("peer_range max {hi} exceeds the scene's {rsus} RSUs")));
        }
    }
    (0..cfg.n_channels as usize)
        .map(|k| {
            let n_peers = rng.random_range(lo..=hi);
            let p_f = cfg.pf_distribution.draw(k, rng);
            ChannelSpec::new(k as u32, n_peers, p_f)
        })
        .collect()
}

/// Representative dwell time of each context bin, clamped to `range`.
fn bin_contexts(edges: &[f64], range: (f64, f64)) -> Vec<f64> {
    let (dmin, dmax) = range;
    let mut bounds = vec![dmin];
    bounds.extend(edges.iter().map(|e| e.clamp(dmin, dmax)));
    bounds.push(dmax);
    bounds.windows(2).map(|w| 0.5 * (w[0] + w[1]).max(f64::MIN_POSITIVE)).collect()
}

fn network_for(cfg: &ScenarioConfig, channels: Vec<ChannelSpec>, contexts: &[f64], seed: u64) -> Result<Network> {
    let oracle = solve_oracle(&channels, contexts, &cfg.costs, cfg.oracle_reps, cfg.cost_cap, seed)?;
    Ok(Network { channels, costs: cfg.costs.clone(), oracle, network_radius_m: cfg.scene.network_radius_m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyLabel {
    EpsilonGreedy,
    Thompson,
    Random,
    Oracle,
}

impl PolicyLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyLabel::EpsilonGreedy => "epsilon_greedy",
            PolicyLabel::Thompson => "thompson",
            PolicyLabel::Random => "random",
            PolicyLabel::Oracle => "oracle",
        }
    }
}

/// Aggregate outcome of one replication of one policy at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub policy: PolicyLabel,
    pub replication: u32,
    pub n_channels: u32,
    pub t_train_slots: u64,
    pub n_clients: u32,
    /// Operating-phase transactions.
    pub transactions: u64,
    /// Transactions committed within the submitter's dwell.
    pub commits: u64,
    /// Over committed transactions only; `NaN` when nothing committed.
    pub mean_latency_s: f64,
    pub throughput_tps: f64,
    pub mean_reward: f64,
    pub mean_regret: f64,
    /// Oracle channel of the (first) context; `None` when infeasible.
    pub oracle_channel: Option<u32>,
    /// Operating-phase selections per channel.
    pub selection_counts: Vec<u64>,
}

impl ReplicationMetrics {
    pub fn most_selected(&self) -> Option<u32> {
        let max = *self.selection_counts.iter().max()?;
        if max == 0 {
            return None;
        }
        self.selection_counts.iter().position(|&c| c == max).map(|k| k as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSample {
    pub policy: PolicyLabel,
    pub replication: u32,
    pub slot: u64,
    pub channel: u32,
}

/// Cumulative per-channel selection counts at a slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCheckpoint {
    pub policy: PolicyLabel,
    pub replication: u32,
    pub slot: u64,
    pub counts: Vec<u64>,
}

/// Expected reward of every channel as estimated by the oracle, per
/// replication, for ranking the channels a policy settled on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRewards {
    pub replication: u32,
    pub expected_reward: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub replications: Vec<ReplicationMetrics>,
    pub selections: Vec<SelectionSample>,
    pub checkpoints: Vec<SelectionCheckpoint>,
    pub channel_rewards: Vec<ChannelRewards>,
}

impl MetricsLog {
    fn extend(&mut self, other: MetricsLog) {
        self.replications.extend(other.replications);
        self.selections.extend(other.selections);
        self.checkpoints.extend(other.checkpoints);
        self.channel_rewards.extend(other.channel_rewards);
    }

    fn concat(parts: Vec<MetricsLog>) -> MetricsLog {
        let mut out = MetricsLog::default();
        for p in parts {
            out.extend(p);
        }
        out
    }

    /// Rows for one policy matching `filter`, ordered by replication.
    pub fn select<'a>(&'a self, policy: PolicyLabel, filter: impl Fn(&ReplicationMetrics) -> bool + 'a) -> Vec<&'a ReplicationMetrics> {
        let mut v: Vec<_> = self.replications.iter().filter(|r| r.policy == policy && filter(r)).collect();
        v.sort_by_key(|r| r.replication);
        v
    }
}

/// Throughput and commit-time bookkeeping over a set of records.
#[allow(clippy::too_many_arguments)]
fn summarise(
    policy: PolicyLabel,
    replication: u32,
    n_channels: u32,
    t_train_slots: u64,
    n_clients: u32,
    records: &[TxRecord],
    elapsed_slots: u64,
    costs: &LatencyCosts,
    oracle_channel: Option<u32>,
) -> ReplicationMetrics {
    let mut selection_counts = vec![0u64; n_channels as usize];
    let mut commits = 0u64;
    let mut latency_slots = 0u64;
    let mut reward = 0u64;
    let mut regret = 0u64;
    for r in records {
        selection_counts[r.channel_id as usize] += 1;
        reward += r.reward as u64;
        regret += r.regret as u64;
        if r.committed_within_dwell {
            commits += 1;
            latency_slots += r.latency_slots;
        }
    }
    let n = records.len() as f64;
    ReplicationMetrics {
        policy,
        replication,
        n_channels,
        t_train_slots,
        n_clients,
        transactions: records.len() as u64,
        commits,
        mean_latency_s: if commits > 0 { costs.to_seconds(latency_slots) / commits as f64 } else { f64::NAN },
        throughput_tps: if elapsed_slots > 0 { commits as f64 / costs.to_seconds(elapsed_slots) } else { 0.0 },
        mean_reward: if n > 0.0 { reward as f64 / n } else { f64::NAN },
        mean_regret: if n > 0.0 { regret as f64 / n } else { f64::NAN },
        oracle_channel,
        selection_counts,
    }
}

/// Runs both bandit policies on one network per replication and logs which
/// channel each slot selects.
pub fn run_experiment_convergence(cfg: &ScenarioConfig) -> Result<MetricsLog> {
    cfg.validate()?;
    let horizon = cfg.convergence.horizon_slots;
    let log_every = cfg.convergence.log_every;
    let parts = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<MetricsLog> {
            let mut net_rng = rng_from_seed(derive_path(cfg.master_seed, &[TAG_CONVERGENCE, rep as u64, 0]));
            let channels = build_network(cfg, None, &mut net_rng)?;
            let context = cfg.costs.to_seconds(horizon);
            let oracle_seed = derive_path(cfg.master_seed, &[TAG_CONVERGENCE, rep as u64, 1]);
            let network = network_for(cfg, channels, &[context], oracle_seed)?;
            let session_seed = derive_path(cfg.master_seed, &[TAG_CONVERGENCE, rep as u64, 2]);
            let oracle_channel = network.oracle.best_channel(0).map(|k| network.channels[k].channel_id);

            let mut log = MetricsLog::default();
            log.channel_rewards.push(ChannelRewards {
                replication: rep,
                expected_reward: network.oracle.estimates[0].iter().map(|e| e.expected_reward).collect(),
            });
            for (label, policy) in [(PolicyLabel::EpsilonGreedy, cfg.epsilon_greedy()), (PolicyLabel::Thompson, Policy::ThompsonSampling)] {
                let scfg = cfg.session_config(SelectionMode::Bandit, policy, cfg.t_train_slots, cfg.arrival_prob);
                let mut session = ClientSession::with_horizon(0, horizon, &network, &scfg)?;
                let mut rng = SessionRng::new(session_seed);
                let mut counts = vec![0u64; network.channels.len()];
                let mut records = Vec::new();
                while !session.is_departed() {
                    let slot = session.slot_clock;
                    if let Some(r) = session.step(&network, &mut rng, &mut NoContention)? {
                        counts[r.channel_id as usize] += 1;
                        if slot % log_every == 0 {
                            log.selections.push(SelectionSample { policy: label, replication: rep, slot, channel: r.channel_id });
                        }
                        records.push(r);
                    }
                    if (slot + 1) % log_every == 0 || slot + 1 == horizon {
                        log.checkpoints.push(SelectionCheckpoint { policy: label, replication: rep, slot: slot + 1, counts: counts.clone() });
                    }
                }
                log.replications.push(summarise(
                    label,
                    rep,
                    network.channels.len() as u32,
                    cfg.t_train_slots,
                    1,
                    &records,
                    horizon,
                    &cfg.costs,
                    oracle_channel,
                ));
            }
            Ok(log)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsLog::concat(parts))
}

/// Mean post-training regret for every (policy, t_train, N_ch) cell.
///
/// Per replication one network with the largest `N_ch` is drawn and smaller
/// counts use its leading channels. All cells of a replication share the
/// session seed.
pub fn run_experiment_regret(cfg: &ScenarioConfig, t_train_grid: &[u64], n_ch_grid: &[u32]) -> Result<MetricsLog> {
    cfg.validate()?;
    let horizon = cfg.regret.horizon_slots;
    if t_train_grid.is_empty() || n_ch_grid.is_empty() || n_ch_grid.contains(&0) {
        return Err(config_err("regret grids must be non-empty with positive channel counts"));
    }
    if t_train_grid.iter().any(|&t| t >= horizon) {
        return Err(config_err("regret horizon_slots must exceed every t_train"));
    }
    let max_ch = *n_ch_grid.iter().max().expect("non-empty");
    let wide = ScenarioConfig { n_channels: max_ch, ..cfg.clone() };
    let parts = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<MetricsLog> {
            let mut net_rng = rng_from_seed(derive_path(cfg.master_seed, &[TAG_REGRET, rep as u64, 0]));
            let all_channels = build_network(&wide, None, &mut net_rng)?;
            let session_seed = derive_path(cfg.master_seed, &[TAG_REGRET, rep as u64, 2]);
            let mut log = MetricsLog::default();
            for &n_ch in n_ch_grid {
                let context = cfg.costs.to_seconds(horizon);
                let oracle_seed = derive_path(cfg.master_seed, &[TAG_REGRET, rep as u64, 1, n_ch as u64]);
                let network = network_for(cfg, all_channels[..n_ch as usize].to_vec(), &[context], oracle_seed)?;
                let oracle_channel = network.oracle.best_channel(0).map(|k| network.channels[k].channel_id);
                for &t_train in t_train_grid {
                    for (label, policy) in [(PolicyLabel::EpsilonGreedy, cfg.epsilon_greedy()), (PolicyLabel::Thompson, Policy::ThompsonSampling)] {
                        let scfg = cfg.session_config(SelectionMode::Bandit, policy, t_train, cfg.arrival_prob);
                        let mut session = ClientSession::with_horizon(0, horizon, &network, &scfg)?;
                        let records = crate::client::run_session(&mut session, &network, &mut SessionRng::new(session_seed), &mut NoContention)?;
                        log.replications.push(summarise(label, rep, n_ch, t_train, 1, &records, horizon, &cfg.costs, oracle_channel));
                    }
                }
            }
            Ok(log)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsLog::concat(parts))
}

/// Many vehicles share one network and its endorsement queues. For each
/// client count the proposed (Thompson), random and oracle policies face the
/// same scene, vehicles, arrivals and environment draws.
pub fn run_experiment_scalability(cfg: &ScenarioConfig, n_clients_grid: &[u32]) -> Result<MetricsLog> {
    cfg.validate()?;
    if n_clients_grid.is_empty() || n_clients_grid.contains(&0) {
        return Err(config_err("n_clients_grid must be non-empty and positive"));
    }
    let contexts = bin_contexts(&cfg.bin_edges, cfg.dwell_range_s()?);
    let policies = [
        (PolicyLabel::Thompson, SelectionMode::Bandit),
        (PolicyLabel::Random, SelectionMode::UniformRandom),
        (PolicyLabel::Oracle, SelectionMode::Oracle),
    ];
    let parts = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<MetricsLog> {
            let r = rep as u64;
            let rsus = sample_scene(&cfg.scene, derive_path(cfg.master_seed, &[TAG_SCALABILITY, r, 0]))?.rsu_positions;
            let with_rsus = SpatialScene { rsu_positions: rsus, obu_states: Vec::new() };
            let mut net_rng = rng_from_seed(derive_path(cfg.master_seed, &[TAG_SCALABILITY, r, 1]));
            let channels = build_network(cfg, Some(&with_rsus), &mut net_rng)?;
            let network = network_for(cfg, channels, &contexts, derive_path(cfg.master_seed, &[TAG_SCALABILITY, r, 2]))?;
            let oracle_channel = network.oracle.best_channel(0).map(|k| network.channels[k].channel_id);

            let mut log = MetricsLog::default();
            for &n_clients in n_clients_grid {
                let mut veh_rng = rng_from_seed(derive_path(cfg.master_seed, &[TAG_SCALABILITY, r, 3, n_clients as u64]));
                let scene = SpatialScene {
                    rsu_positions: with_rsus.rsu_positions.clone(),
                    obu_states: (0..n_clients).map(|_| sample_vehicle(&cfg.scene, &mut veh_rng)).collect(),
                };
                for (label, mode) in policies {
                    let scfg = cfg.session_config(mode, Policy::ThompsonSampling, cfg.t_train_slots, cfg.scalability.arrival_prob);
                    let mut queues: Box<dyn QueueModel> = match cfg.scalability.contention {
                        Contention::Fifo => Box::new(FifoQueues::new(&network.channels)),
                        Contention::None => Box::new(NoContention),
                    };
                    let (records, elapsed) = run_clients(&scene, &network, &scfg, queues.as_mut(), |vid| {
                        derive_path(cfg.master_seed, &[TAG_SCALABILITY, r, 4, n_clients as u64, vid as u64])
                    })?;
                    log.replications.push(summarise(
                        label,
                        rep,
                        network.channels.len() as u32,
                        cfg.t_train_slots,
                        n_clients,
                        &records,
                        elapsed,
                        &cfg.costs,
                        oracle_channel,
                    ));
                }
            }
            Ok(log)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsLog::concat(parts))
}

/// Joins every vehicle of `scene` at slot 0 and steps all sessions in
/// lockstep, in vehicle order, until the last one departs. Returns the
/// records and the number of slots elapsed.
pub fn run_clients(
    scene: &SpatialScene,
    network: &Network,
    cfg: &SessionConfig,
    queues: &mut dyn QueueModel,
    session_seed: impl Fn(usize) -> u64,
) -> Result<(Vec<TxRecord>, u64)> {
    let mut sessions = Vec::with_capacity(scene.obu_states.len());
    for vid in 0..scene.obu_states.len() {
        let (session, _confirm) = join(scene, vid, network, cfg, queues)?;
        sessions.push((session, SessionRng::new(session_seed(vid))));
    }
    let elapsed = sessions.iter().map(|(s, _)| s.t_dwell_slots).max().unwrap_or(0);
    let mut records = Vec::new();
    for _ in 0..elapsed {
        for (session, rng) in sessions.iter_mut() {
            if let Some(r) = session.step(network, rng, queues)? {
                records.push(r);
            }
        }
    }
    Ok((records, elapsed))
}
