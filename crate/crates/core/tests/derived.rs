//! Checks against independent reference computations: closed forms,
//! goodness-of-fit tests and constructed dominance scenarios.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use v2xsim_core::bandit::{Policy, TrainingSchedule};
use v2xsim_core::client::{run_session, ClientSession, Network, NoContention, SelectionMode, SessionConfig, SessionRng};
use v2xsim_core::consensus::{gossip_rounds, ChannelSpec, LatencyCosts};
use v2xsim_core::engine::{build_network, ScenarioConfig};
use v2xsim_core::geometry::{sample_scene, SceneConfig};
use v2xsim_core::oracle::{solve_oracle, CostCap};
use v2xsim_core::seed::{derive_path, derive_seed, rng_from_seed};

/// Test-side closed forms, written from the model definition rather than
/// reusing the library's `analytic` module.
mod reference {
    use v2xsim_core::consensus::{gossip_rounds, ChannelSpec, LatencyCosts};

    fn binom_pmf(n: u32, k: u32, p: f64) -> f64 {
        let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum();
        (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
    }

    /// Probability that at most `floor((n-1)/3)` of `n` peers fail.
    pub fn quorum(n: u32, p: f64) -> f64 {
        if p == 0.0 {
            return 1.0;
        }
        (0..=(n - 1) / 3).map(|k| binom_pmf(n, k, p)).sum()
    }

    /// `(P(commit), E[latency slots])` of one transaction: endorsement
    /// round, then up to `max_retries + 1` validation rounds.
    pub fn transaction(ch: &ChannelSpec, c: &LatencyCosts) -> (f64, f64) {
        let q = quorum(ch.n_peers, ch.fault_prob);
        let r = gossip_rounds(ch.n_peers) as f64;
        let m = c.max_retries as i32 + 1;
        let mut commit = 0.0;
        let mut lat = (1.0 - q) * c.c_endorse as f64;
        for a in 1..=m {
            let p_here = if a < m { (1.0 - q).powi(a - 1) * q } else { (1.0 - q).powi(m - 1) };
            let ok = (1.0 - q).powi(a - 1) * q;
            commit += q * ok;
            lat += q * p_here * ((c.c_endorse + c.c_order) as f64 + a as f64 * r);
        }
        (commit, lat)
    }
}

fn ten_channel_instance() -> Vec<ChannelSpec> {
    let spec = [(5, 0.30), (6, 0.12), (7, 0.45), (8, 0.05), (9, 0.22), (10, 0.08), (5, 0.02), (7, 0.35), (9, 0.15), (10, 0.40)];
    spec.iter().enumerate().map(|(k, &(n, p))| ChannelSpec::new(k as u32, n, p).unwrap()).collect()
}

#[test]
fn reference_matches_exhaustive_enumeration() {
    // Brute force over all fault patterns of a 5-peer channel.
    let (n, p) = (5u32, 0.3f64);
    let mut exact = 0.0;
    for mask in 0u32..(1 << n) {
        let f = mask.count_ones();
        if f <= (n - 1) / 3 {
            exact += p.powi(f as i32) * (1.0 - p).powi((n - f) as i32);
        }
    }
    assert!((reference::quorum(n, p) - exact).abs() < 1e-12);
}

#[test]
fn monte_carlo_oracle_agrees_with_analytic_oracle() {
    let costs = LatencyCosts::default();
    let chs = ten_channel_instance();
    let t = solve_oracle(&chs, &[1000.0], &costs, 100_000, CostCap::Dwell, 17).unwrap();
    let analytic: Vec<(f64, f64)> = chs.iter().map(|c| reference::transaction(c, &costs)).collect();
    let best = (0..chs.len())
        .max_by(|&a, &b| analytic[a].0.total_cmp(&analytic[b].0).then(analytic[b].1.total_cmp(&analytic[a].1)))
        .unwrap();
    assert_eq!(t.best_channel(0), Some(best));
    for (k, &(r, lat)) in analytic.iter().enumerate() {
        let est = t.estimates[0][k];
        let sigma = (r * (1.0 - r) / 100_000.0).sqrt();
        assert!((est.expected_reward - r).abs() <= 4.0 * sigma + 1e-9, "channel {k}: {} vs {r}", est.expected_reward);
        assert!((est.expected_latency_s - costs.to_seconds(1) * lat).abs() < 0.01, "channel {k} latency");
    }
}

#[test]
fn oracle_choice_survives_reseeding() {
    let costs = LatencyCosts::default();
    let chs = ten_channel_instance();
    let a = solve_oracle(&chs, &[1000.0], &costs, 50_000, CostCap::Dwell, 1).unwrap();
    let b = solve_oracle(&chs, &[1000.0], &costs, 50_000, CostCap::Dwell, 2).unwrap();
    let best = a.best_channel(0).unwrap();
    for k in 0..chs.len() {
        let (ra, rb) = (a.estimates[0][best].expected_reward, b.estimates[0][k].expected_reward);
        let sigma = ((ra * (1.0 - ra) + rb * (1.0 - rb)) / 50_000.0).sqrt();
        assert!(ra + 2.0 * sigma >= rb, "channel {k} beats the oracle on a fresh seed");
    }
}

#[test]
fn peer_counts_uniform_chi_square() {
    let cfg = ScenarioConfig { n_channels: 10_000, ..ScenarioConfig::default() };
    let chs = build_network(&cfg, None, &mut rng_from_seed(123)).unwrap();
    let mut hist = [0f64; 6];
    for c in &chs {
        hist[(c.n_peers - 5) as usize] += 1.0;
    }
    let e = 10_000.0 / 6.0;
    let stat: f64 = hist.iter().map(|o| (o - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(stat);
    assert!(p > 0.01, "χ² = {stat}, p = {p}");
}

#[test]
fn pooled_scene_counts_fit_poisson() {
    let cfg = SceneConfig::default();
    let lambda = cfg.rsu_density * cfg.area_m2();
    let counts: Vec<u64> = (0..50_000u64).map(|s| sample_scene(&cfg, derive_seed(99, s)).unwrap().rsu_positions.len() as u64).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    assert!((mean - lambda).abs() < 3.0 * (lambda / n).sqrt());
    // Equal-probability bins from the Poisson quantiles.
    let pois = Poisson::new(lambda).unwrap();
    let cuts: Vec<u64> = (1..10).map(|i| pois.inverse_cdf(i as f64 / 10.0)).collect();
    let mut edges = vec![0u64];
    edges.extend(cuts.iter().map(|c| c + 1));
    edges.dedup();
    let mut stat = 0.0;
    for (i, &lo) in edges.iter().enumerate() {
        let hi = edges.get(i + 1).map(|h| h - 1);
        let p = match hi {
            Some(h) => pois.cdf(h) - if lo == 0 { 0.0 } else { pois.cdf(lo - 1) },
            None => 1.0 - pois.cdf(lo - 1),
        };
        let o = counts.iter().filter(|&&c| c >= lo && hi.is_none_or(|h| c <= h)).count() as f64;
        stat += (o - n * p).powi(2) / (n * p);
    }
    let p = 1.0 - ChiSquared::new(edges.len() as f64 - 1.0).unwrap().cdf(stat);
    assert!(p > 0.01, "p = {p}");
    assert!(pois.pmf(100) > 0.0);
}

fn dominance_network() -> Network {
    // Channel 3 commits almost surely; the rest fail often.
    let costs = LatencyCosts::default();
    let pf = [0.5, 0.45, 0.4, 0.0, 0.5, 0.45, 0.4, 0.5, 0.45, 0.4];
    let channels: Vec<ChannelSpec> = pf.iter().enumerate().map(|(k, &p)| ChannelSpec::new(k as u32, 7, p).unwrap()).collect();
    let oracle = solve_oracle(&channels, &[1000.0], &costs, 5_000, CostCap::Dwell, 5).unwrap();
    assert_eq!(oracle.best_channel(0), Some(3));
    assert!((reference::transaction(&channels[3], &costs).0 - 1.0).abs() < 1e-12);
    Network { channels, costs, oracle, network_radius_m: 1000.0 }
}

fn dominant_share(net: &Network, policy: Policy, seed: u64, from_slot: u64) -> f64 {
    let cfg = SessionConfig { t_train_slots: 50, policy, ..SessionConfig::default() };
    let mut s = ClientSession::with_horizon(0, 6000, net, &cfg).unwrap();
    let recs = run_session(&mut s, net, &mut SessionRng::new(seed), &mut NoContention).unwrap();
    let late: Vec<_> = recs.iter().filter(|r| r.slot_submitted >= from_slot).collect();
    late.iter().filter(|r| r.channel_id == 3).count() as f64 / late.len() as f64
}

#[test]
fn thompson_locks_onto_dominant_channel_by_slot_2000() {
    let net = dominance_network();
    for seed in 0..10 {
        let share = dominant_share(&net, Policy::ThompsonSampling, seed, 2000);
        assert!(share > 0.9, "seed {seed}: {share}");
    }
}

#[test]
fn epsilon_greedy_asymptotic_share() {
    let net = dominance_network();
    let mean: f64 = (0..10).map(|s| dominant_share(&net, Policy::EpsilonGreedy { epsilon: 0.1 }, s, 2000)).sum::<f64>() / 10.0;
    let expected = 0.9 + 0.1 / 10.0;
    assert!((mean - expected).abs() < 0.01, "{mean} vs {expected}");
}

#[test]
fn thompson_concentrates_more_than_epsilon_greedy() {
    let net = dominance_network();
    for seed in 0..5 {
        let ts = dominant_share(&net, Policy::ThompsonSampling, seed, 5000);
        let eg = dominant_share(&net, Policy::EpsilonGreedy { epsilon: 0.1 }, seed, 5000);
        assert!(ts > eg, "seed {seed}: {ts} vs {eg}");
    }
}

#[test]
fn thompson_session_regret_below_epsilon_greedy() {
    // 10^3 vehicle sessions on default-configured networks.
    let base = ScenarioConfig { oracle_reps: 2_000, ..ScenarioConfig::default() };
    let (mut ts, mut eg) = (0u64, 0u64);
    for i in 0..1000u64 {
        let channels = build_network(&base, None, &mut rng_from_seed(derive_path(7, &[i, 0]))).unwrap();
        let oracle = solve_oracle(&channels, &[100.0], &base.costs, base.oracle_reps, CostCap::Dwell, derive_path(7, &[i, 1])).unwrap();
        let net = Network { channels, costs: base.costs.clone(), oracle, network_radius_m: 1000.0 };
        for (policy, acc) in [(Policy::ThompsonSampling, &mut ts), (Policy::EpsilonGreedy { epsilon: 0.1 }, &mut eg)] {
            let cfg = SessionConfig { t_train_slots: 100, policy, training_schedule: TrainingSchedule::RoundRobin, ..SessionConfig::default() };
            let mut s = ClientSession::with_horizon(i, 1000, &net, &cfg).unwrap();
            let recs = run_session(&mut s, &net, &mut SessionRng::new(derive_path(7, &[i, 2])), &mut NoContention).unwrap();
            *acc += recs.iter().map(|r| r.regret as u64).sum::<u64>();
        }
    }
    assert!(ts <= eg, "TS regret {ts} vs ε-greedy {eg}");
}

#[test]
fn oracle_policy_has_zero_self_regret() {
    let net = dominance_network();
    let cfg = SessionConfig { t_train_slots: 0, mode: SelectionMode::Oracle, ..SessionConfig::default() };
    let mut s = ClientSession::with_horizon(0, 5000, &net, &cfg).unwrap();
    let recs = run_session(&mut s, &net, &mut SessionRng::new(1), &mut NoContention).unwrap();
    assert!(recs.iter().all(|r| r.regret == 0));
}

#[test]
fn rounds_table_spot_values() {
    assert_eq!([4, 7, 10, 20].map(gossip_rounds), [3, 5, 6, 8]);
}
