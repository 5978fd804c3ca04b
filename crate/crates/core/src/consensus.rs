//! Endorsement and BFT validation of a transaction on one channel.
//!
//! Each consensus attempt draws every peer faulty independently with the
//! channel's fault probability and succeeds iff `n >= 3f + 1`. Validation
//! retries failed attempts up to `max_retries` times; every attempt pays one
//! full gossip dissemination. Transaction latency in slots is
//!
//! ```text
//! c_endorse + c_order + attempts * gossip_rounds(n)
//! ```

use std::io::Write;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gossip::default_rounds;
use crate::seed::{derive_path, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub channel_id: u32,
    pub n_peers: u32,
    /// Per-peer, per-attempt failure probability.
    pub fault_prob: f64,
}

impl ChannelSpec {
    pub fn new(channel_id: u32, n_peers: u32, fault_prob: f64) -> Result<Self> {
        let ch = Self { channel_id, n_peers, fault_prob };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_peers == 0 {
            return Err(invalid(format!("channel {} has no peers", self.channel_id)));
        }
        if !(0.0..=1.0).contains(&self.fault_prob) {
            return Err(invalid(format!(
                "channel {} fault probability {} outside [0, 1]",
                self.channel_id, self.fault_prob
            )));
        }
        Ok(())
    }

    /// Largest number of faulty peers the channel tolerates.
    pub fn fault_margin(&self) -> u32 {
        max_faults(self.n_peers)
    }
}

/// `floor((n - 1) / 3)`.
pub fn max_faults(n_peers: u32) -> u32 {
    n_peers.saturating_sub(1) / 3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyCosts {
    /// Endorsement cost in slots.
    pub c_endorse: u32,
    /// Ordering cost in slots.
    pub c_order: u32,
    pub max_retries: u32,
    pub slot_duration_s: f64,
}

impl Default for LatencyCosts {
    fn default() -> Self {
        Self { c_endorse: 1, c_order: 1, max_retries: 2, slot_duration_s: 0.1 }
    }
}

impl LatencyCosts {
    pub fn validate(&self) -> Result<()> {
        if !self.slot_duration_s.is_finite() || self.slot_duration_s <= 0.0 {
            return Err(invalid(format!("slot_duration_s must be positive, got {}", self.slot_duration_s)));
        }
        Ok(())
    }

    pub fn to_seconds(&self, slots: u64) -> f64 {
        slots as f64 * self.slot_duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusOutcome {
    pub success: bool,
    pub latency_slots: u64,
    pub retries_used: u32,
}

/// Outcome of a full transaction: endorsement, ordering and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutcome {
    pub endorsed: bool,
    /// Executed and committed (`r_ec`).
    pub ec_success: bool,
    pub latency_slots: u64,
    pub retries_used: u32,
}

const ROUNDS_CACHE: usize = 4096;

/// Gossip rounds for `n` peers at the `1/n` dissemination threshold.
pub fn gossip_rounds(n_peers: u32) -> u32 {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..ROUNDS_CACHE as u32).map(|n| if n == 0 { 0 } else { default_rounds(n).expect("n >= 1") }).collect()
    });
    match table.get(n_peers as usize) {
        Some(&r) => r,
        None => default_rounds(n_peers).expect("n >= 1"),
    }
}

/// One BFT round. Always draws exactly `n_peers` uniforms, so runs that share
/// a stream stay aligned across fault probabilities.
pub fn consensus_round<R: Rng + ?Sized>(ch: &ChannelSpec, rng: &mut R) -> bool {
    let faulty = (0..ch.n_peers).filter(|_| rng.random::<f64>() < ch.fault_prob).count() as u32;
    faulty <= ch.fault_margin()
}

/// Validation phase with retries. Failure is a value: after `max_retries`
/// failed retries the outcome has `success = false` and the latency of every
/// attempt made.
pub fn transaction_latency<R: Rng + ?Sized>(ch: &ChannelSpec, rng: &mut R, costs: &LatencyCosts) -> ConsensusOutcome {
    let rounds = gossip_rounds(ch.n_peers) as u64;
    let base = costs.c_endorse as u64 + costs.c_order as u64;
    let mut retries_used = 0;
    loop {
        let attempt_ok = consensus_round(ch, rng);
        let attempts = retries_used as u64 + 1;
        if attempt_ok || retries_used == costs.max_retries {
            return ConsensusOutcome {
                success: attempt_ok,
                latency_slots: base + attempts * rounds,
                retries_used,
            };
        }
        retries_used += 1;
    }
}

/// Endorsement round followed, if it succeeds, by ordering and validation.
/// A failed endorsement is known to the client after `c_endorse` slots.
pub fn simulate_transaction<R: Rng + ?Sized>(ch: &ChannelSpec, rng: &mut R, costs: &LatencyCosts) -> TxOutcome {
    if !consensus_round(ch, rng) {
        return TxOutcome { endorsed: false, ec_success: false, latency_slots: costs.c_endorse as u64, retries_used: 0 };
    }
    let v = transaction_latency(ch, rng, costs);
    TxOutcome { endorsed: true, ec_success: v.success, latency_slots: v.latency_slots, retries_used: v.retries_used }
}

/// Closed forms for the model above.
pub mod analytic {
    use super::*;

    /// `P(Binomial(n, p) <= floor((n - 1) / 3))`, summed term by term.
    pub fn quorum_success_prob(n_peers: u32, fault_prob: f64) -> f64 {
        let n = n_peers as usize;
        let f_max = max_faults(n_peers) as usize;
        let q = 1.0 - fault_prob;
        // term_k = C(n, k) p^k q^(n-k), built incrementally from k = 0.
        let mut term = q.powi(n as i32);
        if fault_prob >= 1.0 {
            return if f_max >= n { 1.0 } else { 0.0 };
        }
        let mut sum = term;
        for k in 0..f_max {
            term *= (n - k) as f64 / (k + 1) as f64 * fault_prob / q;
            sum += term;
        }
        sum.min(1.0)
    }

    /// Expected attempts of a truncated geometric with per-attempt success
    /// `q` and at most `max_retries + 1` attempts.
    pub fn expected_attempts(q: f64, max_retries: u32) -> f64 {
        (0..=max_retries).map(|k| (1.0 - q).powi(k as i32)).sum()
    }

    pub fn validation_success_prob(q: f64, max_retries: u32) -> f64 {
        1.0 - (1.0 - q).powi(max_retries as i32 + 1)
    }

    /// Probability that a transaction is endorsed and committed.
    pub fn transaction_success_prob(ch: &ChannelSpec, costs: &LatencyCosts) -> f64 {
        let q = quorum_success_prob(ch.n_peers, ch.fault_prob);
        q * validation_success_prob(q, costs.max_retries)
    }

    /// Mean of [`transaction_latency`] in slots, over successes and failures.
    pub fn expected_latency_slots(ch: &ChannelSpec, costs: &LatencyCosts) -> f64 {
        let q = quorum_success_prob(ch.n_peers, ch.fault_prob);
        (costs.c_endorse + costs.c_order) as f64 + gossip_rounds(ch.n_peers) as f64 * expected_attempts(q, costs.max_retries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub n_peers: u32,
    pub p_f: f64,
    pub mean_latency_s: f64,
    pub reps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub n_grid: Vec<u32>,
    pub pf_grid: Vec<f64>,
    /// Row-major: one row per `n_grid` entry.
    pub cells: Vec<HeatmapCell>,
}

impl Heatmap {
    pub fn cell(&self, n_index: usize, pf_index: usize) -> &HeatmapCell {
        &self.cells[n_index * self.pf_grid.len() + pf_index]
    }

    pub fn row(&self, n_index: usize) -> &[HeatmapCell] {
        let w = self.pf_grid.len();
        &self.cells[n_index * w..(n_index + 1) * w]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean validation latency in seconds for every `(n, p_f)` cell.
///
/// Replication `k` of every cell in a row draws from the stream
/// `derive_path(seed, [n, k])`, shared across `p_f` values. A peer faulty at
/// some `p_f` is then faulty at every larger `p_f`, so each row is
/// non-decreasing draw by draw, not only in expectation.
pub fn latency_heatmap(n_grid: &[u32], pf_grid: &[f64], reps: u32, rng_seed: u64, costs: &LatencyCosts) -> Result<Heatmap> {
    if n_grid.is_empty() || pf_grid.is_empty() {
        return Err(invalid("heatmap grids must be non-empty"));
    }
    if reps == 0 {
        return Err(invalid("heatmap reps must be at least 1"));
    }
    costs.validate()?;
    for &n in n_grid {
        if n == 0 {
            return Err(invalid("heatmap n_grid entries must be at least 1"));
        }
    }
    for &p in pf_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("heatmap p_f {p} outside [0, 1]")));
        }
    }

    let rows: Vec<Vec<HeatmapCell>> = n_grid
        .par_iter()
        .map(|&n| {
            pf_grid
                .iter()
                .map(|&p_f| {
                    let ch = ChannelSpec { channel_id: 0, n_peers: n, fault_prob: p_f };
                    let total: u64 = (0..reps)
                        .map(|k| {
                            let mut rng = rng_from_seed(derive_path(rng_seed, &[n as u64, k as u64]));
                            transaction_latency(&ch, &mut rng, costs).latency_slots
                        })
                        .sum();
                    HeatmapCell {
                        n_peers: n,
                        p_f,
                        mean_latency_s: costs.to_seconds(1) * total as f64 / reps as f64,
                        reps,
                    }
                })
                .collect()
        })
        .collect();

    Ok(Heatmap { n_grid: n_grid.to_vec(), pf_grid: pf_grid.to_vec(), cells: rows.into_iter().flatten().collect() })
}
