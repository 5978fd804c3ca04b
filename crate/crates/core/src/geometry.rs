//! Spatial scene: roadside units (peers) and onboard units (vehicle clients)
//! placed by independent homogeneous Poisson point processes on an
//! `length_m x width_m` rectangle.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub length_m: f64,
    pub width_m: f64,
    /// RSUs per square metre.
    pub rsu_density: f64,
    /// OBUs per square metre.
    pub obu_density: f64,
    /// Radius of the network boundary disc, centred on the rectangle.
    pub network_radius_m: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            length_m: 2000.0,
            width_m: 2000.0,
            rsu_density: 2.5e-5,
            obu_density: 5.0e-5,
            network_radius_m: 1000.0,
            speed_min_mps: 5.0,
            speed_max_mps: 30.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length_m", self.length_m),
            ("width_m", self.width_m),
            ("network_radius_m", self.network_radius_m),
            ("speed_min_mps", self.speed_min_mps),
            ("speed_max_mps", self.speed_max_mps),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("rsu_density", self.rsu_density), ("obu_density", self.obu_density)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        if self.speed_min_mps > self.speed_max_mps {
            return Err(invalid("speed_min_mps exceeds speed_max_mps"));
        }
        Ok(())
    }

    pub fn area_m2(&self) -> f64 {
        self.length_m * self.width_m
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.length_m / 2.0, self.width_m / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObuState {
    pub position: (f64, f64),
    pub speed_mps: f64,
    pub heading_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialScene {
    pub rsu_positions: Vec<(f64, f64)>,
    pub obu_states: Vec<ObuState>,
}

impl SpatialScene {
    /// Index of the RSU closest to `point`, if any RSU exists.
    pub fn closest_rsu(&self, point: (f64, f64)) -> Option<usize> {
        self.rsu_positions
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, (x - point.0).powi(2) + (y - point.1).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Writes `node_type,x,y,speed,heading` rows. RSUs carry zero speed and heading.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_type", "x", "y", "speed", "heading"])?;
        for &(x, y) in &self.rsu_positions {
            w.serialize(("rsu", x, y, 0.0, 0.0))?;
        }
        for o in &self.obu_states {
            w.serialize(("obu", o.position.0, o.position.1, o.speed_mps, o.heading_rad))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let dist = Poisson::new(mean).expect("validated mean");
    dist.sample(rng) as usize
}

fn uniform_point<R: Rng>(cfg: &SceneConfig, rng: &mut R) -> (f64, f64) {
    (rng.random::<f64>() * cfg.length_m, rng.random::<f64>() * cfg.width_m)
}

/// Draws a vehicle: uniform position, speed uniform on the configured range,
/// heading uniform on `[0, 2pi)`.
pub fn sample_vehicle<R: Rng>(cfg: &SceneConfig, rng: &mut R) -> ObuState {
    let position = uniform_point(cfg, rng);
    let speed_mps = if cfg.speed_max_mps > cfg.speed_min_mps {
        rng.random_range(cfg.speed_min_mps..cfg.speed_max_mps)
    } else {
        cfg.speed_min_mps
    };
    let heading_rad = rng.random::<f64>() * TAU;
    ObuState { position, speed_mps, heading_rad }
}

/// Samples a scene. RSUs and OBUs come from independent streams derived from
/// `rng_seed`, so the RSU layout does not depend on the OBU density.
pub fn sample_scene(cfg: &SceneConfig, rng_seed: u64) -> Result<SpatialScene> {
    cfg.validate()?;
    let area = cfg.area_m2();

    let mut rng = rng_from_seed(derive_seed(rng_seed, 0));
    let n_rsu = poisson_count(cfg.rsu_density * area, &mut rng);
    let rsu_positions = (0..n_rsu).map(|_| uniform_point(cfg, &mut rng)).collect();

    let mut rng = rng_from_seed(derive_seed(rng_seed, 1));
    let n_obu = poisson_count(cfg.obu_density * area, &mut rng);
    let obu_states = (0..n_obu).map(|_| sample_vehicle(cfg, &mut rng)).collect();

    Ok(SpatialScene { rsu_positions, obu_states })
}

/// Time a vehicle at speed `speed_mps` needs to cross a network of radius
/// `network_radius_m`: `r / v`.
pub fn dwell_time(network_radius_m: f64, speed_mps: f64) -> Result<f64> {
    if !network_radius_m.is_finite() || network_radius_m <= 0.0 {
        return Err(invalid(format!("network radius must be positive and finite, got {network_radius_m}")));
    }
    if !speed_mps.is_finite() || speed_mps <= 0.0 {
        return Err(invalid(format!("speed must be positive and finite, got {speed_mps}")));
    }
    Ok(network_radius_m / speed_mps)
}
