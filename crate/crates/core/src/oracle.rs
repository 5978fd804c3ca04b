//! Exhaustive solver for the optimal channel per context.
//!
//! For every context (a dwell time) the solver estimates each channel's
//! expected reward and latency by Monte-Carlo, discards channels whose
//! expected latency exceeds the cost cap, and keeps the best remaining one.
//! Choosing one channel among `N` is a degenerate 0-1 knapsack, so checking
//! all `N` items is exact.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::compute_reward;
use crate::consensus::{simulate_transaction, ChannelSpec, LatencyCosts};
use crate::error::{invalid, Result};
use crate::seed::{derive_path, rng_from_seed};

/// The cap `C` on expected latency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "seconds", rename_all = "snake_case")]
pub enum CostCap {
    /// `C` equals the context's dwell time.
    #[default]
    Dwell,
    Fixed(f64),
}

impl CostCap {
    fn for_context(&self, t_dwell_s: f64) -> f64 {
        match *self {
            CostCap::Dwell => t_dwell_s,
            CostCap::Fixed(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub expected_reward: f64,
    pub expected_latency_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub t_dwell_s: f64,
    /// Index into the table's channels; `None` when no channel meets the cap.
    pub best_channel: Option<usize>,
    pub expected_reward: f64,
    pub expected_latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub channels: Vec<ChannelSpec>,
    pub costs: LatencyCosts,
    pub entries: Vec<OracleEntry>,
    /// `estimates[context][channel]`.
    pub estimates: Vec<Vec<ChannelEstimate>>,
}

/// Per-channel Monte-Carlo tallies, shared by every context.
struct Draws {
    ec: Vec<bool>,
    latency_slots: Vec<u64>,
}

pub fn solve_oracle(
    channels: &[ChannelSpec],
    contexts: &[f64],
    costs: &LatencyCosts,
    reps: u32,
    cap: CostCap,
    rng_seed: u64,
) -> Result<OracleTable> {
    if channels.is_empty() {
        return Err(invalid("oracle needs at least one channel"));
    }
    if contexts.is_empty() {
        return Err(invalid("oracle needs at least one context"));
    }
    if reps == 0 {
        return Err(invalid("oracle reps must be at least 1"));
    }
    if contexts.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(invalid("context dwell times must be positive and finite"));
    }
    costs.validate()?;
    for ch in channels {
        ch.validate()?;
    }

    let draws: Vec<Draws> = channels
        .par_iter()
        .enumerate()
        .map(|(k, ch)| {
            let mut d = Draws { ec: Vec::with_capacity(reps as usize), latency_slots: Vec::with_capacity(reps as usize) };
            for rep in 0..reps {
                let mut rng = rng_from_seed(derive_path(rng_seed, &[k as u64, rep as u64]));
                let tx = simulate_transaction(ch, &mut rng, costs);
                d.ec.push(tx.ec_success);
                d.latency_slots.push(tx.latency_slots);
            }
            d
        })
        .collect();

    let mut entries = Vec::with_capacity(contexts.len());
    let mut estimates = Vec::with_capacity(contexts.len());
    for &t_dwell_s in contexts {
        let c = cap.for_context(t_dwell_s);
        let row: Vec<ChannelEstimate> = draws
            .iter()
            .map(|d| {
                let rewards: u64 = d
                    .ec
                    .iter()
                    .zip(&d.latency_slots)
                    .map(|(&ec, &l)| compute_reward(ec, costs.to_seconds(l), t_dwell_s).r as u64)
                    .sum();
                let latency: u64 = d.latency_slots.iter().sum();
                let expected_latency_s = costs.to_seconds(1) * latency as f64 / reps as f64;
                ChannelEstimate {
                    expected_reward: rewards as f64 / reps as f64,
                    expected_latency_s,
                    feasible: expected_latency_s <= c,
                }
            })
            .collect();

        let best = row
            .iter()
            .enumerate()
            .filter(|(_, e)| e.feasible)
            .min_by(|(ia, a), (ib, b)| {
                b.expected_reward
                    .total_cmp(&a.expected_reward)
                    .then(a.expected_latency_s.total_cmp(&b.expected_latency_s))
                    .then(channels[*ia].channel_id.cmp(&channels[*ib].channel_id))
            })
            .map(|(i, _)| i);

        entries.push(match best {
            Some(i) => OracleEntry {
                t_dwell_s,
                best_channel: Some(i),
                expected_reward: row[i].expected_reward,
                expected_latency_s: row[i].expected_latency_s,
            },
            None => OracleEntry { t_dwell_s, best_channel: None, expected_reward: 0.0, expected_latency_s: f64::NAN },
        });
        estimates.push(row);
    }

    Ok(OracleTable { channels: channels.to_vec(), costs: costs.clone(), entries, estimates })
}

impl OracleTable {
    pub fn best_channel(&self, bin: usize) -> Option<usize> {
        self.entries.get(bin).and_then(|e| e.best_channel)
    }

    /// Contexts for which no channel meets the cap.
    pub fn infeasible_contexts(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, e)| e.best_channel.is_none()).map(|(i, _)| i).collect()
    }

    /// Realised reward `r*` of one transaction on the oracle's channel, with
    /// the context's dwell time as deadline. Infeasible contexts yield 0.
    pub fn oracle_reward_draw<R: Rng + ?Sized>(&self, bin: usize, rng: &mut R) -> u8 {
        let deadline = self.entries.get(bin).map_or(0.0, |e| e.t_dwell_s);
        self.oracle_reward_draw_with_deadline(bin, deadline, rng)
    }

    /// As [`Self::oracle_reward_draw`] with an explicit deadline, e.g. the
    /// dwell time remaining when the transaction is submitted.
    pub fn oracle_reward_draw_with_deadline<R: Rng + ?Sized>(&self, bin: usize, deadline_s: f64, rng: &mut R) -> u8 {
        let Some(k) = self.best_channel(bin) else {
            return 0;
        };
        let tx = simulate_transaction(&self.channels[k], rng, &self.costs);
        compute_reward(tx.ec_success, self.costs.to_seconds(tx.latency_slots), deadline_s).r
    }

    /// Writes `bin,channel,expected_reward,expected_latency,chosen` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin", "channel", "expected_reward", "expected_latency", "chosen"])?;
        for (bin, row) in self.estimates.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                let chosen = self.best_channel(bin) == Some(k);
                w.serialize((bin, self.channels[k].channel_id, e.expected_reward, e.expected_latency_s, chosen as u8))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
