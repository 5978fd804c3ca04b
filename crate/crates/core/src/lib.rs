//! Discrete-time simulator of a Fabric-style permissioned blockchain running
//! over a vehicular (V2X) road network.
//!
//! Vehicles join the network, learn which channel to send their transactions
//! to with a Beta-Bernoulli bandit, and are scored against a brute-force
//! oracle. The crate is organised bottom-up:
//!
//! * [`geometry`]: Poisson scenes of roadside units and vehicles, dwell time.
//! * [`gossip`]: push-gossip block dissemination (recurrence and Monte-Carlo).
//! * [`consensus`]: per-peer faults, BFT quorum rounds, transaction latency.
//! * [`bandit`]: posteriors, epsilon-greedy and Thompson sampling, reward, regret.
//! * [`oracle`]: exhaustive optimal-channel solver under a latency cap.
//! * [`client`]: the per-vehicle join / train / operate / depart state machine.
//! * [`engine`]: scenario configuration, network construction, experiments.

pub mod bandit;
pub mod client;
pub mod consensus;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod gossip;
pub mod oracle;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
