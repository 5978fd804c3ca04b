//! CSV exports of experiment results. Comma-separated, header row, LF line
//! endings; floats use the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::engine::{MetricsLog, PolicyLabel};
use crate::error::Result;
use crate::gossip::{analytic_trajectory, monte_carlo_mean_uninformed, rounds_to_dissemination};
use crate::stats::{finite_mean, mean};

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], header: &[&str], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication, policy and grid point.
pub fn write_replications_csv<W: Write>(log: &MetricsLog, out: W) -> Result<()> {
    let rows: Vec<_> = log
        .replications
        .iter()
        .map(|r| {
            (
                r.policy.as_str(),
                r.replication,
                r.n_channels,
                r.t_train_slots,
                r.n_clients,
                r.transactions,
                r.commits,
                r.mean_latency_s,
                r.throughput_tps,
                r.mean_reward,
                r.mean_regret,
                r.oracle_channel,
                r.most_selected(),
            )
        })
        .collect();
    let header = [
        "policy",
        "replication",
        "n_channels",
        "t_train_slots",
        "n_clients",
        "transactions",
        "commits",
        "mean_latency_s",
        "throughput_tps",
        "mean_reward",
        "mean_regret",
        "oracle_channel",
        "most_selected",
    ];
    write_rows(&rows, &header, out)
}

/// Sampled per-slot channel selections.
pub fn write_selections_csv<W: Write>(log: &MetricsLog, out: W) -> Result<()> {
    let rows: Vec<_> = log.selections.iter().map(|s| (s.policy.as_str(), s.replication, s.slot, s.channel)).collect();
    write_rows(&rows, &["policy", "replication", "slot", "channel"], out)
}

/// Cumulative selection probability of every channel at each checkpoint.
pub fn write_selection_probabilities_csv<W: Write>(log: &MetricsLog, out: W) -> Result<()> {
    let mut rows = Vec::new();
    for c in &log.checkpoints {
        let total: u64 = c.counts.iter().sum();
        for (k, &n) in c.counts.iter().enumerate() {
            let p = if total > 0 { n as f64 / total as f64 } else { 0.0 };
            rows.push((c.policy.as_str(), c.replication, c.slot, k, p));
        }
    }
    write_rows(&rows, &["policy", "replication", "slot", "channel", "cum_prob"], out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCell {
    pub policy: PolicyLabel,
    pub t_train_slots: u64,
    pub n_channels: u32,
    pub replications: usize,
    pub mean_regret: f64,
}

/// Mean post-training regret per (policy, t_train, N_ch).
pub fn regret_cells(log: &MetricsLog) -> Vec<RegretCell> {
    let mut groups: BTreeMap<(PolicyLabel, u64, u32), Vec<f64>> = BTreeMap::new();
    for r in &log.replications {
        groups.entry((r.policy, r.t_train_slots, r.n_channels)).or_default().push(r.mean_regret);
    }
    groups
        .into_iter()
        .map(|((policy, t_train_slots, n_channels), v)| RegretCell {
            policy,
            t_train_slots,
            n_channels,
            replications: v.len(),
            mean_regret: finite_mean(&v),
        })
        .collect()
}

pub fn write_regret_csv<W: Write>(log: &MetricsLog, out: W) -> Result<()> {
    let rows: Vec<_> = regret_cells(log)
        .into_iter()
        .map(|c| (c.policy.as_str(), c.t_train_slots, c.n_channels, c.replications, c.mean_regret))
        .collect();
    write_rows(&rows, &["policy", "t_train_slots", "n_channels", "replications", "mean_regret"], out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalabilityPoint {
    pub policy: PolicyLabel,
    pub n_clients: u32,
    pub replications: usize,
    pub mean_latency_s: f64,
    pub mean_throughput_tps: f64,
}

pub fn scalability_points(log: &MetricsLog) -> Vec<ScalabilityPoint> {
    let mut groups: BTreeMap<(u32, PolicyLabel), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &log.replications {
        let g = groups.entry((r.n_clients, r.policy)).or_default();
        g.0.push(r.mean_latency_s);
        g.1.push(r.throughput_tps);
    }
    groups
        .into_iter()
        .map(|((n_clients, policy), (lat, tps))| ScalabilityPoint {
            policy,
            n_clients,
            replications: lat.len(),
            mean_latency_s: finite_mean(&lat),
            mean_throughput_tps: mean(&tps),
        })
        .collect()
}

pub fn write_scalability_csv<W: Write>(log: &MetricsLog, out: W) -> Result<()> {
    let rows: Vec<_> = scalability_points(log)
        .into_iter()
        .map(|p| (p.n_clients, p.policy.as_str(), p.replications, p.mean_latency_s, p.mean_throughput_tps))
        .collect();
    write_rows(&rows, &["n_clients", "policy", "replications", "mean_latency_s", "mean_throughput_tps"], out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GossipRow {
    pub n: u32,
    pub round: u32,
    pub analytic_uninformed: f64,
    pub mc_uninformed: f64,
    /// Rounds until the analytic uninformed fraction drops below the threshold.
    pub rounds: u32,
}

/// Analytic and Monte-Carlo trajectories per group size, up to the round
/// where the threshold is crossed. `threshold = None` uses `1/n`.
pub fn gossip_rows(n_list: &[u32], threshold: Option<f64>, mc_reps: u32, seed: u64) -> Result<Vec<GossipRow>> {
    let mut rows = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let rounds = match threshold {
            Some(t) => rounds_to_dissemination(n, t)?,
            None => crate::gossip::default_rounds(n)?,
        };
        let analytic = analytic_trajectory(n, rounds)?;
        let mc = monte_carlo_mean_uninformed(n, rounds, mc_reps, crate::seed::derive_seed(seed, i as u64))?;
        for t in 0..=rounds as usize {
            rows.push(GossipRow { n, round: t as u32, analytic_uninformed: analytic[t], mc_uninformed: mc[t], rounds });
        }
    }
    Ok(rows)
}

pub fn write_gossip_csv<W: Write>(rows: &[GossipRow], out: W) -> Result<()> {
    write_rows(rows, &["n", "round", "analytic_uninformed", "mc_uninformed", "rounds"], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gossip_rows_shape() {
        let rows = gossip_rows(&[5, 10, 50, 100], None, 20, 1).unwrap();
        let groups: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.n).collect();
        assert_eq!(groups.len(), 4);
        assert_eq!(rows.iter().filter(|r| r.n == 10).count(), 7);
        let mut buf = Vec::new();
        write_gossip_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,round,analytic_uninformed,mc_uninformed,rounds\n5,0,0.8,"), "{text}");
        assert!(!text.contains('\r'));
        assert!(gossip_rows(&[5], Some(1.0), 10, 0).is_err());
    }
}
