//! Link budget and contact detection.
//!
//! Received power follows Friis free-space loss or the two-ray ground model
//! (with free-space below the crossover distance). A node pair is in contact
//! when its distance does not exceed the communication range, which is the
//! largest distance at which received power still meets the receiver
//! threshold.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Transmit power shared by both network kinds.
pub const DEFAULT_TX_POWER_DBM: f64 = 7.5;
/// 802.11b channel frequency.
pub const DEFAULT_FREQ_HZ: f64 = 2.4e9;
/// Threshold that puts the free-space range at ~100 m for 7.5 dBm at 2.4 GHz.
pub const DEFAULT_RX_THRESHOLD_DBM: f64 = -72.55;
pub const DEFAULT_ANTENNA_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationModel {
    FreeSpace,
    TwoRay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub freq_hz: f64,
    pub rx_threshold_dbm: f64,
    pub ant_height_tx_m: f64,
    pub ant_height_rx_m: f64,
    pub model: PropagationModel,
    /// Overrides the link budget entirely when set.
    pub explicit_range_m: Option<f64>,
}

impl RadioConfig {
    pub fn new(model: PropagationModel) -> Self {
        RadioConfig {
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            freq_hz: DEFAULT_FREQ_HZ,
            rx_threshold_dbm: DEFAULT_RX_THRESHOLD_DBM,
            ant_height_tx_m: DEFAULT_ANTENNA_HEIGHT_M,
            ant_height_rx_m: DEFAULT_ANTENNA_HEIGHT_M,
            model,
            explicit_range_m: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz.is_finite() && self.freq_hz > 0.0) {
            return Err(Error::config("freq_hz", "must be finite and > 0"));
        }
        for (field, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("tx_gain_db", self.tx_gain_db),
            ("rx_gain_db", self.rx_gain_db),
            ("rx_threshold_dbm", self.rx_threshold_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.model == PropagationModel::TwoRay {
            if !(self.ant_height_tx_m.is_finite() && self.ant_height_tx_m > 0.0) {
                return Err(Error::config("ant_height_tx_m", "must be > 0 for two-ray"));
            }
            if !(self.ant_height_rx_m.is_finite() && self.ant_height_rx_m > 0.0) {
                return Err(Error::config("ant_height_rx_m", "must be > 0 for two-ray"));
            }
        }
        if let Some(r) = self.explicit_range_m {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::config("explicit_range_m", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.freq_hz
    }

    /// Two-ray crossover distance `4π·ht·hr/λ`.
    pub fn crossover_distance(&self) -> f64 {
        4.0 * PI * self.ant_height_tx_m * self.ant_height_rx_m / self.wavelength()
    }

    fn eirp_plus_rx_gain(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_db + self.rx_gain_db
    }

    fn free_space_dbm(&self, d: f64) -> f64 {
        self.eirp_plus_rx_gain() + 20.0 * (self.wavelength() / (4.0 * PI * d)).log10()
    }

    fn two_ray_dbm(&self, d: f64) -> f64 {
        self.eirp_plus_rx_gain()
            + 20.0 * (self.ant_height_tx_m * self.ant_height_rx_m).log10()
            - 40.0 * d.log10()
    }
}

pub fn received_power(cfg: &RadioConfig, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("distance must be > 0, got {d}")));
    }
    Ok(match cfg.model {
        PropagationModel::FreeSpace => cfg.free_space_dbm(d),
        PropagationModel::TwoRay if d >= cfg.crossover_distance() => cfg.two_ray_dbm(d),
        PropagationModel::TwoRay => cfg.free_space_dbm(d),
    })
}

pub fn comm_range(cfg: &RadioConfig) -> Result<f64> {
    if let Some(r) = cfg.explicit_range_m {
        return Ok(r);
    }
    let margin = cfg.eirp_plus_rx_gain() - cfg.rx_threshold_dbm;
    let free_space = cfg.wavelength() / (4.0 * PI) * 10f64.powf(margin / 20.0);
    let r = match cfg.model {
        PropagationModel::FreeSpace => free_space,
        PropagationModel::TwoRay => {
            let dc = cfg.crossover_distance();
            // Both branches meet at dc, so the threshold crossing lies on the
            // two-ray branch exactly when the power at dc still clears it.
            if cfg.two_ray_dbm(dc) >= cfg.rx_threshold_dbm {
                let hh = (cfg.ant_height_tx_m * cfg.ant_height_rx_m).log10() * 20.0;
                10f64.powf((margin + hh) / 40.0)
            } else {
                free_space
            }
        }
    };
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(Error::NoCoverage {
            threshold_dbm: cfg.rx_threshold_dbm,
        })
    }
}

/// Unordered node pairs `(i, j)`, `i < j`, within distance `r`, sorted
/// ascending.
pub fn contact_pairs(positions: &[Vec3], r: f64) -> Vec<(usize, usize)> {
    if r <= 0.0 || positions.len() < GRID_MIN_NODES {
        return contact_pairs_brute(positions, r);
    }
    let r2 = r * r;
    let cell = |p: Vec3| {
        (
            (p.x / r).floor() as i64,
            (p.y / r).floor() as i64,
            (p.z / r).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in positions.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (i, &p) in positions.iter().enumerate() {
        let (cx, cy, cz) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j > i && p.dist_sq(positions[j]) <= r2 {
                            pairs.push((i, j));
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

const GRID_MIN_NODES: usize = 24;

fn contact_pairs_brute(positions: &[Vec3], r: f64) -> Vec<(usize, usize)> {
    let r2 = r * r;
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i].dist_sq(positions[j]) <= r2 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}
