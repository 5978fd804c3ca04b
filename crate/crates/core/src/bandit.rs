//! Contextual Beta-Bernoulli bandit over channels.
//!
//! Posteriors are kept per `(context bin, channel)`. The context is the
//! vehicle's dwell time; with no bin edges there is a single bin and the
//! bandit is a plain (non-contextual) Beta-Bernoulli bandit.

use std::io::Write;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaPosterior {
    /// The uniform prior `Beta(1, 1)`.
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

impl BetaPosterior {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Observations absorbed since the uniform prior.
    pub fn observations(&self) -> f64 {
        self.alpha + self.beta - 2.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // alpha, beta >= 1 by construction, so the distribution is valid.
        Beta::new(self.alpha, self.beta).expect("positive shape parameters").sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    EpsilonGreedy { epsilon: f64 },
    ThompsonSampling,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::EpsilonGreedy { .. } => "epsilon_greedy",
            Policy::ThompsonSampling => "thompson",
        }
    }
}

/// Arm schedule during the training window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingSchedule {
    #[default]
    RoundRobin,
    UniformRandom,
}

impl TrainingSchedule {
    pub fn arm_for<R: Rng + ?Sized>(&self, pull_index: u64, n_arms: usize, rng: &mut R) -> usize {
        match self {
            TrainingSchedule::RoundRobin => (pull_index % n_arms as u64) as usize,
            TrainingSchedule::UniformRandom => rng.random_range(0..n_arms),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardSample {
    pub r_ec: u8,
    pub r_ld: u8,
    pub r: u8,
}

/// `r_ec` is execution-and-commit success, `r_ld` is commit within the dwell
/// time, and the reward is their conjunction.
pub fn compute_reward(ec_success: bool, latency_s: f64, t_dwell_s: f64) -> RewardSample {
    let r_ec = ec_success as u8;
    let r_ld = (latency_s <= t_dwell_s) as u8;
    RewardSample { r_ec, r_ld, r: r_ec & r_ld }
}

/// `|r - r*|`.
pub fn regret(r: u8, r_star: u8) -> u8 {
    r.abs_diff(r_star)
}

/// Source of training rewards.
pub trait RewardEnv {
    fn pull(&mut self, arm: usize, pull_index: u64) -> u8;
}

impl<F: FnMut(usize, u64) -> u8> RewardEnv for F {
    fn pull(&mut self, arm: usize, pull_index: u64) -> u8 {
        self(arm, pull_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    /// Row-major `(bin, arm)`.
    posteriors: Vec<BetaPosterior>,
    pub policy: Policy,
    n_arms: usize,
    /// Ascending interior edges (seconds). `k` edges make `k + 1` bins.
    bin_edges: Vec<f64>,
}

impl BanditState {
    pub fn new(n_arms: usize, policy: Policy, bin_edges: Vec<f64>) -> Result<Self> {
        if n_arms == 0 {
            return Err(invalid("bandit needs at least one arm"));
        }
        if let Policy::EpsilonGreedy { epsilon } = policy {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(invalid(format!("epsilon {epsilon} outside [0, 1]")));
            }
        }
        if bin_edges.iter().any(|e| !e.is_finite()) || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("context bin edges must be finite and strictly increasing"));
        }
        let n_bins = bin_edges.len() + 1;
        Ok(Self { posteriors: vec![BetaPosterior::default(); n_bins * n_arms], policy, n_arms, bin_edges })
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn n_bins(&self) -> usize {
        self.bin_edges.len() + 1
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    /// Bin holding `t_dwell_s`; bin `i` covers `[edge[i-1], edge[i])`.
    pub fn context_bin(&self, t_dwell_s: f64) -> usize {
        self.bin_edges.partition_point(|&e| e <= t_dwell_s)
    }

    fn check(&self, bin: usize, arm: usize) -> Result<()> {
        if bin >= self.n_bins() {
            return Err(invalid(format!("context bin {bin} out of range (have {})", self.n_bins())));
        }
        if arm >= self.n_arms {
            return Err(invalid(format!("channel {arm} out of range (have {})", self.n_arms)));
        }
        Ok(())
    }

    pub fn posterior(&self, bin: usize, arm: usize) -> Result<BetaPosterior> {
        self.check(bin, arm)?;
        Ok(self.posteriors[bin * self.n_arms + arm])
    }

    pub fn bin_posteriors(&self, bin: usize) -> Result<&[BetaPosterior]> {
        self.check(bin, 0)?;
        Ok(&self.posteriors[bin * self.n_arms..(bin + 1) * self.n_arms])
    }

    /// Total observations absorbed across all cells.
    pub fn total_observations(&self) -> f64 {
        self.posteriors.iter().map(BetaPosterior::observations).sum()
    }

    /// Epsilon-greedy explores uniformly over channels with probability
    /// epsilon and otherwise exploits the greatest posterior mean. Thompson
    /// sampling draws one sample per channel and plays the argmax. Ties go
    /// to the lowest channel id.
    pub fn select_arm<R: Rng + ?Sized>(&self, bin: usize, rng: &mut R) -> Result<usize> {
        let cells = self.bin_posteriors(bin)?;
        let arm = match self.policy {
            Policy::EpsilonGreedy { epsilon } => {
                if rng.random::<f64>() < epsilon {
                    rng.random_range(0..self.n_arms)
                } else {
                    argmax(cells.iter().map(BetaPosterior::mean))
                }
            }
            Policy::ThompsonSampling => argmax(cells.iter().map(|p| p.sample(rng))),
        };
        Ok(arm)
    }

    pub fn update_posterior(&mut self, bin: usize, arm: usize, r: u8) -> Result<()> {
        self.check(bin, arm)?;
        let cell = &mut self.posteriors[bin * self.n_arms + arm];
        match r {
            1 => cell.alpha += 1.0,
            0 => cell.beta += 1.0,
            other => return Err(invalid(format!("reward must be 0 or 1, got {other}"))),
        }
        Ok(())
    }

    /// Runs `t_train` training pulls in `bin`, arms chosen by `schedule`.
    pub fn train<E: RewardEnv, R: Rng + ?Sized>(
        &mut self,
        env: &mut E,
        t_train: u64,
        bin: usize,
        schedule: TrainingSchedule,
        rng: &mut R,
    ) -> Result<()> {
        self.check(bin, 0)?;
        for pull in 0..t_train {
            let arm = schedule.arm_for(pull, self.n_arms, rng);
            let r = env.pull(arm, pull);
            self.update_posterior(bin, arm, r)?;
        }
        Ok(())
    }

    /// Writes `bin,channel,alpha,beta` rows.
    pub fn write_snapshot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin", "channel", "alpha", "beta"])?;
        for (i, p) in self.posteriors.iter().enumerate() {
            w.serialize((i / self.n_arms, i % self.n_arms, p.alpha, p.beta))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the greatest value; the first one wins ties.
pub(crate) fn argmax<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
