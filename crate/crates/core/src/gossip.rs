//! Push-gossip dissemination of a block among a channel's peers.
//!
//! `x` is the fraction of peers that have not yet received the block. One
//! source starts informed, so `x_0 = 1 - 1/n`, and every round each informed
//! peer pushes the block to one peer chosen uniformly among all `n` (itself
//! included). An uninformed peer stays uninformed with probability
//! `(1 - 1/n)^(informed)`, which gives the expected recurrence
//!
//! ```text
//! x_{t+1} = x_t * (1 - 1/n)^(n (1 - x_t))
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng_from_seed;

/// Upper bound on recurrence iterations; reached only for thresholds far
/// below the float resolution of `x`.
const MAX_ROUNDS: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossipState {
    pub n: u32,
    /// Uninformed fraction.
    pub x: f64,
    pub round: u32,
}

impl GossipState {
    /// State with one informed source.
    pub fn initial(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(invalid("gossip needs at least one peer"));
        }
        Ok(Self { n, x: 1.0 - 1.0 / n as f64, round: 0 })
    }

    pub fn informed_fraction(&self) -> f64 {
        1.0 - self.x
    }
}

/// One round of the expected-value recurrence.
pub fn gossip_step(state: GossipState) -> Result<GossipState> {
    if state.n == 0 {
        return Err(invalid("gossip needs at least one peer"));
    }
    if !(0.0..=1.0).contains(&state.x) {
        return Err(invalid(format!("uninformed fraction {} outside [0, 1]", state.x)));
    }
    let n = state.n as f64;
    let x = state.x * (1.0 - 1.0 / n).powf(n * (1.0 - state.x));
    Ok(GossipState { n: state.n, x: x.min(state.x), round: state.round + 1 })
}

/// The recurrence trajectory `x_0 ..= x_rounds`.
pub fn analytic_trajectory(n: u32, rounds: u32) -> Result<Vec<f64>> {
    let mut state = GossipState::initial(n)?;
    let mut out = Vec::with_capacity(rounds as usize + 1);
    out.push(state.x);
    for _ in 0..rounds {
        state = gossip_step(state)?;
        out.push(state.x);
    }
    Ok(out)
}

/// Smallest `t` with `x_t < threshold`, starting from one informed source.
///
/// The default threshold used by the latency model is `1/n`: fewer than one
/// peer expected to be uninformed.
pub fn rounds_to_dissemination(n: u32, threshold: f64) -> Result<u32> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold {threshold} outside (0, 1)")));
    }
    let mut state = GossipState::initial(n)?;
    while state.x >= threshold {
        if state.round >= MAX_ROUNDS {
            return Err(invalid(format!("threshold {threshold} not reached within {MAX_ROUNDS} rounds")));
        }
        state = gossip_step(state)?;
    }
    Ok(state.round)
}

/// [`rounds_to_dissemination`] with threshold `1/n`. A single peer needs no
/// rounds.
pub fn default_rounds(n: u32) -> Result<u32> {
    if n <= 1 {
        GossipState::initial(n)?;
        return Ok(0);
    }
    rounds_to_dissemination(n, 1.0 / n as f64)
}

/// Simulates push gossip until every peer is informed. Returns the informed
/// count after each round, starting with `[1]` at round zero.
pub fn gossip_monte_carlo(n: u32, rng_seed: u64) -> Result<Vec<u32>> {
    let mut rng = rng_from_seed(rng_seed);
    gossip_monte_carlo_with(n, &mut rng)
}

pub fn gossip_monte_carlo_with<R: Rng>(n: u32, rng: &mut R) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(invalid("gossip needs at least one peer"));
    }
    let n_us = n as usize;
    let mut informed = vec![false; n_us];
    informed[0] = true;
    let mut count = 1u32;
    let mut trajectory = vec![count];
    let mut pushers = Vec::with_capacity(n_us);
    while count < n {
        pushers.clear();
        pushers.extend(informed.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i));
        for _ in &pushers {
            let target = rng.random_range(0..n_us);
            if !informed[target] {
                informed[target] = true;
                count += 1;
            }
        }
        trajectory.push(count);
    }
    Ok(trajectory)
}

/// Mean uninformed fraction per round over `reps` independent runs, padded
/// with zeros once a run has finished, for rounds `0 ..= rounds`.
pub fn monte_carlo_mean_uninformed(n: u32, rounds: u32, reps: u32, rng_seed: u64) -> Result<Vec<f64>> {
    use crate::seed::derive_seed;
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let len = rounds as usize + 1;
    let mut acc = vec![0.0; len];
    for rep in 0..reps {
        let traj = gossip_monte_carlo(n, derive_seed(rng_seed, rep as u64))?;
        for (t, slot) in acc.iter_mut().enumerate() {
            let informed = traj.get(t).copied().unwrap_or(n);
            *slot += (n - informed) as f64 / n as f64;
        }
    }
    Ok(acc.into_iter().map(|s| s / reps as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn informed_everywhere_is_fixpoint() {
        for n in [1, 2, 10, 100] {
            let s = gossip_step(GossipState { n, x: 0.0, round: 3 }).unwrap();
            assert_eq!(s.x, 0.0);
            assert_eq!(s.round, 4);
        }
    }

    #[test]
    fn hand_evaluated_step() {
        // n (1 - x) = 1, so x' = 0.9 * 0.9.
        let s = gossip_step(GossipState { n: 10, x: 0.9, round: 0 }).unwrap();
        assert!((s.x - 0.81).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_peers_and_bad_fraction() {
        assert!(gossip_step(GossipState { n: 0, x: 0.5, round: 0 }).is_err());
        assert!(gossip_step(GossipState { n: 3, x: 1.5, round: 0 }).is_err());
        assert!(rounds_to_dissemination(10, 0.0).is_err());
        assert!(rounds_to_dissemination(10, 1.0).is_err());
        assert!(gossip_monte_carlo(0, 1).is_err());
    }

    #[test]
    fn rounds_examples() {
        assert_eq!(rounds_to_dissemination(1, 0.5).unwrap(), 0);
        assert_eq!(default_rounds(1).unwrap(), 0);
        assert_eq!(rounds_to_dissemination(10, 0.1).unwrap(), 6);
        // x_6 is the first value below 0.1.
        let traj = analytic_trajectory(10, 6).unwrap();
        assert!(traj[5] >= 0.1 && traj[6] < 0.1);
        assert!((traj[6] - 0.0485).abs() < 5e-4, "{}", traj[6]);
    }

    #[test]
    fn default_rounds_table() {
        let got: Vec<u32> = [5, 10, 50, 100].iter().map(|&n| default_rounds(n).unwrap()).collect();
        assert_eq!(got, vec![4, 6, 10, 12]);
    }

    #[test]
    fn rounds_non_decreasing_from_five() {
        let mut prev = 0;
        for n in 5..=300 {
            let r = default_rounds(n).unwrap();
            assert!(r >= prev, "n = {n}");
            prev = r;
        }
    }

    #[test]
    fn monte_carlo_trivial_sizes() {
        assert_eq!(gossip_monte_carlo(1, 3).unwrap(), vec![1]);
        // Two peers: the source hits the other peer with probability 1/2 per
        // round, so completion takes 2 rounds on average.
        let reps = 4000;
        let mut total = 0usize;
        for seed in 0..reps {
            let t = gossip_monte_carlo(2, seed).unwrap();
            assert_eq!(*t.last().unwrap(), 2);
            total += t.len() - 1;
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 2.0).abs() < 0.1, "mean rounds {mean}");
    }

    #[test]
    fn monte_carlo_tracks_recurrence_n50() {
        let analytic = analytic_trajectory(50, 5).unwrap();
        let mc = monte_carlo_mean_uninformed(50, 5, 10_000, 11).unwrap();
        for t in 1..=5 {
            assert!((analytic[t] - mc[t]).abs() <= 0.05, "round {t}: {} vs {}", analytic[t], mc[t]);
        }
    }

    proptest! {
        #[test]
        fn step_never_increases(n in 1u32..500, x in 0.0f64..=1.0) {
            let s = gossip_step(GossipState { n, x, round: 0 }).unwrap();
            prop_assert!(s.x <= x);
            prop_assert!((0.0..=1.0).contains(&s.x));
        }

        #[test]
        fn fixpoints_only_at_ends(n in 2u32..500, x in 0.001f64..0.999) {
            let s = gossip_step(GossipState { n, x, round: 0 }).unwrap();
            prop_assert!(s.x < x);
        }

        #[test]
        fn more_informed_spreads_faster(n in 2u32..500, x in 0.01f64..0.99, dx in 0.001f64..0.5) {
            // Lower uninformed fraction (more informed) gives a lower next ratio x'/x.
            let lower = (x - dx).max(0.001);
            let a = gossip_step(GossipState { n, x, round: 0 }).unwrap().x / x;
            let b = gossip_step(GossipState { n, x: lower, round: 0 }).unwrap().x / lower;
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn monte_carlo_monotone_and_complete(n in 1u32..60, seed in any::<u64>()) {
            let t = gossip_monte_carlo(n, seed).unwrap();
            prop_assert_eq!(t[0], 1);
            prop_assert_eq!(*t.last().unwrap(), n);
            prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
