//! Per-vehicle session: join, train, operate, depart.
//!
//! A session advances one slot per [`ClientSession::step`]. Training pulls
//! cost one slot each. In the operating phase each slot carries at most one
//! transaction, and its outcome is known to the vehicle before the next
//! slot's choice. Its realised latency only matters against the deadline: a
//! transaction whose latency exceeds the dwell time left at submission is
//! scored `r_ld = 0` straight away.
//!
//! Randomness is split in three streams (see [`SessionRng`]). The policy
//! stream drives arm choice, the arrival stream decides which slots carry a
//! transaction, and the environment stream is reseeded per slot. The
//! oracle's counterfactual transaction for regret replays the same per-slot
//! environment stream, so agent and oracle see common random numbers and an
//! agent on the oracle's channel has zero regret. Arrivals do not depend on
//! the policy, so different policies face the same workload.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{compute_reward, regret, BanditState, Policy, TrainingSchedule};
use crate::consensus::{max_faults, simulate_transaction, ChannelSpec, LatencyCosts};
use crate::error::{invalid, Error, Result};
use crate::geometry::{dwell_time, SpatialScene};
use crate::oracle::OracleTable;
use crate::seed::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Joining,
    Training,
    Operating,
    Departed,
}

/// How the vehicle picks a channel once training is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// The learned bandit policy.
    Bandit,
    /// Uniformly random channel per transaction.
    UniformRandom,
    /// The oracle's channel for the vehicle's context.
    Oracle,
}

/// Everything the network exposes to its clients. Immutable during a run.
#[derive(Debug, Clone)]
pub struct Network {
    pub channels: Vec<ChannelSpec>,
    pub costs: LatencyCosts,
    pub oracle: OracleTable,
    pub network_radius_m: f64,
}

impl Network {
    /// Smallest endorsement quorum `n - f` over the channels.
    pub fn min_endorsers(&self) -> u32 {
        self.channels.iter().map(|c| c.n_peers - max_faults(c.n_peers)).min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinConfirm {
    pub network_radius_m: f64,
    /// Channel ids only; fault probabilities stay hidden from clients.
    pub channel_ids: Vec<u32>,
    pub min_endorsers: u32,
    /// Endorsement backlog per channel at join time. Carried for policies
    /// that want it; the bandit ignores it.
    pub queue_depths: Vec<u64>,
}

/// Endorsement queueing shared by all vehicles on a network.
pub trait QueueModel {
    /// Admits one request on `channel` at `slot` and returns its wait in slots.
    fn admit(&mut self, channel: usize, slot: u64) -> u64;
    fn depths(&self) -> Vec<u64>;
}

/// No queueing: every request is served in the slot it arrives.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoContention;

impl QueueModel for NoContention {
    fn admit(&mut self, _channel: usize, _slot: u64) -> u64 {
        0
    }

    fn depths(&self) -> Vec<u64> {
        Vec::new()
    }
}

/// FIFO endorsement queue per channel serving up to `n_peers` requests per
/// slot.
#[derive(Debug, Clone)]
pub struct FifoQueues {
    capacity: Vec<u64>,
    backlog: Vec<u64>,
    last_slot: Vec<u64>,
}

impl FifoQueues {
    pub fn new(channels: &[ChannelSpec]) -> Self {
        let n = channels.len();
        Self { capacity: channels.iter().map(|c| c.n_peers.max(1) as u64).collect(), backlog: vec![0; n], last_slot: vec![0; n] }
    }
}

impl QueueModel for FifoQueues {
    fn admit(&mut self, channel: usize, slot: u64) -> u64 {
        let cap = self.capacity[channel];
        let elapsed = slot.saturating_sub(self.last_slot[channel]);
        self.backlog[channel] = self.backlog[channel].saturating_sub(elapsed.saturating_mul(cap));
        self.last_slot[channel] = self.last_slot[channel].max(slot);
        let wait = self.backlog[channel] / cap;
        self.backlog[channel] += 1;
        wait
    }

    fn depths(&self) -> Vec<u64> {
        self.backlog.clone()
    }
}

/// Independent random streams of one session.
#[derive(Debug, Clone)]
pub struct SessionRng {
    policy: SimRng,
    arrival: SimRng,
    env_seed: u64,
}

impl SessionRng {
    pub fn new(seed: u64) -> Self {
        Self {
            policy: rng_from_seed(derive_seed(seed, 0)),
            env_seed: derive_seed(seed, 1),
            arrival: rng_from_seed(derive_seed(seed, 2)),
        }
    }

    pub fn policy(&mut self) -> &mut SimRng {
        &mut self.policy
    }

    pub fn arrival(&mut self) -> &mut SimRng {
        &mut self.arrival
    }

    /// Environment stream for `slot`; the same slot always yields the same stream.
    pub fn env(&self, slot: u64) -> SimRng {
        rng_from_seed(derive_seed(self.env_seed, slot))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub t_train_slots: u64,
    pub training_schedule: TrainingSchedule,
    /// Probability that an idle vehicle submits a transaction in a slot.
    pub arrival_prob: f64,
    pub mode: SelectionMode,
    pub policy: Policy,
    pub bin_edges: Vec<f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            t_train_slots: 100,
            training_schedule: TrainingSchedule::RoundRobin,
            arrival_prob: 1.0,
            mode: SelectionMode::Bandit,
            policy: Policy::ThompsonSampling,
            bin_edges: Vec::new(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.arrival_prob) {
            return Err(invalid(format!("arrival_prob {} outside [0, 1]", self.arrival_prob)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRecord {
    pub vehicle_id: u64,
    pub slot_submitted: u64,
    pub channel_id: u32,
    pub ec_success: bool,
    pub latency_slots: u64,
    pub committed_within_dwell: bool,
    pub reward: u8,
    pub regret: u8,
}

pub fn write_records_csv<W: Write>(records: &[TxRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "vehicle_id",
        "slot_submitted",
        "channel_id",
        "ec_success",
        "latency_slots",
        "committed_within_dwell",
        "reward",
        "regret",
    ])?;
    for r in records {
        w.serialize((
            r.vehicle_id,
            r.slot_submitted,
            r.channel_id,
            r.ec_success as u8,
            r.latency_slots,
            r.committed_within_dwell as u8,
            r.reward,
            r.regret,
        ))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSession {
    pub vehicle_id: u64,
    pub t_dwell_s: f64,
    pub t_dwell_slots: u64,
    pub t_train_slots: u64,
    pub phase: Phase,
    pub bandit: BanditState,
    pub slot_clock: u64,
    pub context_bin: usize,
    pub serving_rsu: Option<usize>,
    pub training_pulls: u64,
    training_schedule: TrainingSchedule,
    arrival_prob: f64,
    mode: SelectionMode,
}

/// Sends a join request to the RSU closest to `vehicle_id` and returns the
/// session with the confirm it received.
pub fn join(
    scene: &SpatialScene,
    vehicle_id: usize,
    network: &Network,
    cfg: &SessionConfig,
    queues: &dyn QueueModel,
) -> Result<(ClientSession, JoinConfirm)> {
    let vehicle = scene
        .obu_states
        .get(vehicle_id)
        .ok_or_else(|| invalid(format!("vehicle {vehicle_id} not in scene")))?;
    let serving_rsu = scene.closest_rsu(vehicle.position).ok_or(Error::NoNetwork)?;

    let confirm = JoinConfirm {
        network_radius_m: network.network_radius_m,
        channel_ids: network.channels.iter().map(|c| c.channel_id).collect(),
        min_endorsers: network.min_endorsers(),
        queue_depths: queues.depths(),
    };
    let t_dwell_s = dwell_time(confirm.network_radius_m, vehicle.speed_mps)?;
    let t_dwell_slots = (t_dwell_s / network.costs.slot_duration_s).ceil() as u64;
    let mut session = ClientSession::new(vehicle_id as u64, t_dwell_s, t_dwell_slots, network, cfg)?;
    session.serving_rsu = Some(serving_rsu);
    Ok((session, confirm))
}

impl ClientSession {
    /// Session for a vehicle with a known dwell, already joined.
    pub fn new(vehicle_id: u64, t_dwell_s: f64, t_dwell_slots: u64, network: &Network, cfg: &SessionConfig) -> Result<Self> {
        cfg.validate()?;
        let bandit = BanditState::new(network.channels.len(), cfg.policy, cfg.bin_edges.clone())?;
        let context_bin = bandit.context_bin(t_dwell_s);
        let t_train_slots = cfg.t_train_slots.min(t_dwell_slots);
        let mut s = Self {
            vehicle_id,
            t_dwell_s,
            t_dwell_slots,
            t_train_slots,
            phase: Phase::Joining,
            bandit,
            slot_clock: 0,
            context_bin,
            serving_rsu: None,
            training_pulls: 0,
            training_schedule: cfg.training_schedule,
            arrival_prob: cfg.arrival_prob,
            mode: cfg.mode,
        };
        s.phase = s.phase_for_clock();
        Ok(s)
    }

    /// Session whose dwell is given in slots, e.g. a fixed experiment horizon.
    pub fn with_horizon(vehicle_id: u64, horizon_slots: u64, network: &Network, cfg: &SessionConfig) -> Result<Self> {
        let t_dwell_s = network.costs.to_seconds(horizon_slots);
        Self::new(vehicle_id, t_dwell_s, horizon_slots, network, cfg)
    }

    fn phase_for_clock(&self) -> Phase {
        if self.slot_clock >= self.t_dwell_slots {
            Phase::Departed
        } else if self.slot_clock < self.t_train_slots {
            Phase::Training
        } else {
            Phase::Operating
        }
    }

    pub fn is_departed(&self) -> bool {
        self.phase == Phase::Departed
    }

    fn choose_channel(&self, network: &Network, rng: &mut SessionRng) -> Result<usize> {
        match self.mode {
            SelectionMode::Bandit => self.bandit.select_arm(self.context_bin, rng.policy()),
            SelectionMode::UniformRandom => Ok(rng.policy().random_range(0..network.channels.len())),
            SelectionMode::Oracle => Ok(network.oracle.best_channel(self.context_bin).unwrap_or_else(|| {
                // Infeasible context: fall back to the fastest channel.
                let est = &network.oracle.estimates[self.context_bin];
                (0..est.len()).min_by(|&a, &b| est[a].expected_latency_s.total_cmp(&est[b].expected_latency_s)).unwrap_or(0)
            })),
        }
    }

    /// Advances one slot. Returns a record when an operating-phase
    /// transaction is submitted in this slot.
    pub fn step(&mut self, network: &Network, rng: &mut SessionRng, queues: &mut dyn QueueModel) -> Result<Option<TxRecord>> {
        if self.phase == Phase::Departed {
            return Ok(None);
        }
        let slot = self.slot_clock;
        let remaining = self.t_dwell_slots - slot;
        let costs = &network.costs;
        let mut record = None;

        match self.phase {
            Phase::Training => {
                let n = network.channels.len();
                let arm = self.training_schedule.arm_for(self.training_pulls, n, rng.policy());
                let tx = simulate_transaction(&network.channels[arm], &mut rng.env(slot), costs);
                let reward = compute_reward(tx.ec_success, costs.to_seconds(tx.latency_slots), costs.to_seconds(remaining));
                self.bandit.update_posterior(self.context_bin, arm, reward.r)?;
                self.training_pulls += 1;
            }
            Phase::Operating => {
                if rng.arrival().random::<f64>() < self.arrival_prob {
                    record = Some(self.submit(network, rng, queues, slot, remaining)?);
                }
            }
            Phase::Joining | Phase::Departed => unreachable!("phase resolved at construction"),
        }

        self.slot_clock += 1;
        self.phase = self.phase_for_clock();
        Ok(record)
    }

    fn submit(
        &mut self,
        network: &Network,
        rng: &mut SessionRng,
        queues: &mut dyn QueueModel,
        slot: u64,
        remaining: u64,
    ) -> Result<TxRecord> {
        let costs = &network.costs;
        let arm = self.choose_channel(network, rng)?;
        let wait = queues.admit(arm, slot);
        let tx = simulate_transaction(&network.channels[arm], &mut rng.env(slot), costs);
        let latency_slots = wait + tx.latency_slots;
        let deadline_s = costs.to_seconds(remaining);
        let reward = compute_reward(tx.ec_success, costs.to_seconds(latency_slots), deadline_s);
        self.bandit.update_posterior(self.context_bin, arm, reward.r)?;

        let r_star = network.oracle.oracle_reward_draw_with_deadline(self.context_bin, deadline_s, &mut rng.env(slot));

        Ok(TxRecord {
            vehicle_id: self.vehicle_id,
            slot_submitted: slot,
            channel_id: network.channels[arm].channel_id,
            ec_success: tx.ec_success,
            latency_slots,
            committed_within_dwell: reward.r == 1,
            reward: reward.r,
            regret: regret(reward.r, r_star),
        })
    }
}

/// Steps `session` until it departs and returns its transaction records.
pub fn run_session(
    session: &mut ClientSession,
    network: &Network,
    rng: &mut SessionRng,
    queues: &mut dyn QueueModel,
) -> Result<Vec<TxRecord>> {
    let mut records = Vec::new();
    while !session.is_departed() {
        if let Some(r) = session.step(network, rng, queues)? {
            records.push(r);
        }
    }
    Ok(records)
}
