//! JSON scenario files.
//!
//! Every field is optional except `network_kind`; anything omitted takes the
//! defaults of [`ScenarioConfig::table1`] (or its strategy variant when a
//! storage strategy or capacity is named). A file with `area_lengths_m`
//! describes a sweep, otherwise a single scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{CurveChoice, NetworkKind, ScenarioConfig, SweepSpec};
use crate::error::Error;
use crate::keying::{DigestKind, Strategy};
use crate::mobility::MobilityModel;
use crate::radio::PropagationModel;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", path.display())]
    NotFound { path: PathBuf },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config{}: {message}", origin(path))]
    Syntax {
        path: Option<PathBuf>,
        message: String,
    },

    #[error("invalid config: `{field}` {reason}")]
    Invalid { field: String, reason: String },
}

fn origin(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!(" {}", p.display()))
        .unwrap_or_default()
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { field, reason } => ConfigError::invalid(field, reason),
            Error::NoCoverage { .. } => ConfigError::invalid("rx_threshold_dbm", e.to_string()),
            Error::EmptyScenario => ConfigError::invalid("n", "must be >= 1"),
            other => ConfigError::invalid("scenario", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    FreshestReplace,
    ExpiredOnlyReplace,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnlimitedKeyword {
    Unlimited,
}

/// A key count, or `"unlimited"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Capacity {
    Entries(usize),
    Keyword(UnlimitedKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfKeyword {
    #[serde(rename = "inf")]
    Inf,
}

/// Seconds, or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ttl {
    Seconds(f64),
    Keyword(InfKeyword),
}

/// On-disk scenario description. Units are in the field names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_kind: Option<NetworkKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobility_model: Option<MobilityModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_length_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_lengths_m: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elevation_m: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_min_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pause_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm_mean_speed_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm_pitch_max_rad: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_gain_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_gain_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_threshold_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ant_height_tx_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ant_height_rx_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit_range_m: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<Capacity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybrid_k1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybrid_k2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_ttl_s: Option<Ttl>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stagger_key_expiry: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<DigestKind>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_dt_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_from_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Run(ScenarioConfig),
    Sweep(SweepSpec),
}

impl Scenario {
    pub fn base(&self) -> &ScenarioConfig {
        match self {
            Scenario::Run(c) => c,
            Scenario::Sweep(s) => &s.base,
        }
    }

    /// A single scenario becomes a one-length sweep.
    pub fn into_sweep(self) -> SweepSpec {
        match self {
            Scenario::Run(c) => SweepSpec {
                area_lengths: vec![c.bbox.x_len],
                base: c,
            },
            Scenario::Sweep(s) => s,
        }
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    load_file(path)?.resolve()
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ConfigError> {
    ScenarioFile::from_json(text, None)?.resolve()
}

pub fn load_file(path: &Path) -> Result<ScenarioFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::NotFound {
                path: path.to_path_buf(),
            }
        } else {
            ConfigError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    ScenarioFile::from_json(&text, Some(path))
}

impl ScenarioFile {
    pub fn from_json(text: &str, path: Option<&Path>) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: path.map(Path::to_path_buf),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// `self` with every field that `overrides` sets replaced.
    pub fn merge(&self, overrides: &ScenarioFile) -> ScenarioFile {
        let mut base = serde_json::to_value(self).expect("serializable");
        let top = serde_json::to_value(overrides).expect("serializable");
        if let (Value::Object(b), Value::Object(t)) = (&mut base, top) {
            for (k, v) in t {
                b.insert(k, v);
            }
        }
        serde_json::from_value(base).expect("merged fields come from valid files")
    }

    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let kind = self
            .network_kind
            .ok_or_else(|| ConfigError::invalid("network_kind", "is required (FANET or MANET)"))?;
        let model = self.mobility_model.unwrap_or(MobilityModel::GaussMarkov);
        let mut c = ScenarioConfig::table1(kind, model);

        let bounded = matches!(self.capacity, Some(Capacity::Entries(_)));
        if self.strategy.is_some() || bounded {
            let strategy = match self.strategy.unwrap_or(StrategyName::FreshestReplace) {
                StrategyName::FreshestReplace => Strategy::FreshestReplace,
                StrategyName::ExpiredOnlyReplace => Strategy::ExpiredOnlyReplace,
                StrategyName::Hybrid => {
                    let k = match self.capacity {
                        Some(Capacity::Entries(k)) => k,
                        _ => crate::engine::DEFAULT_STRATEGY_CAPACITY,
                    };
                    let k1 = self.hybrid_k1.unwrap_or_else(|| k - self.hybrid_k2.unwrap_or(k / 2).min(k));
                    let k2 = self.hybrid_k2.unwrap_or(k - k1.min(k));
                    Strategy::Hybrid { k1, k2 }
                }
            };
            c = c.with_strategy(strategy);
        } else if self.hybrid_k1.is_some() || self.hybrid_k2.is_some() {
            return Err(ConfigError::invalid("hybrid_k1", "needs \"strategy\": \"hybrid\""));
        }
        match self.capacity {
            Some(Capacity::Entries(k)) => c.capacity = Some(k),
            Some(Capacity::Keyword(UnlimitedKeyword::Unlimited)) => c.capacity = None,
            None => {}
        }

        if let Some(n) = self.n {
            c.n = n;
        }
        let length = match (self.area_length_m, &self.area_lengths_m) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "area_length_m",
                    "give either area_length_m or area_lengths_m, not both",
                ))
            }
            (Some(l), None) => l,
            (None, Some(ls)) => ls.first().copied().unwrap_or(c.bbox.x_len),
            (None, None) => c.bbox.x_len,
        };
        c = c.with_area_length(length);
        if let Some(z) = self.elevation_m {
            c.bbox.z_len = z;
        }

        let m = &mut c.mobility;
        let speeds_changed = self.v_min_mps.is_some() || self.v_max_mps.is_some();
        if let Some(v) = self.v_min_mps {
            m.v_min = v;
        }
        if let Some(v) = self.v_max_mps {
            m.v_max = v;
        }
        if speeds_changed {
            m.gm_mean_speed = 0.5 * (m.v_min + m.v_max);
        }
        set(&mut m.pause_s, self.pause_s);
        set(&mut m.gm_alpha, self.gm_alpha);
        set(&mut m.gm_mean_speed, self.gm_mean_speed_mps);
        set(&mut m.gm_pitch_max, self.gm_pitch_max_rad);

        let r = &mut c.radio;
        if let Some(p) = self.propagation {
            r.model = p;
        }
        set(&mut r.tx_power_dbm, self.tx_power_dbm);
        set(&mut r.tx_gain_db, self.tx_gain_db);
        set(&mut r.rx_gain_db, self.rx_gain_db);
        set(&mut r.freq_hz, self.freq_hz);
        set(&mut r.rx_threshold_dbm, self.rx_threshold_dbm);
        set(&mut r.ant_height_tx_m, self.ant_height_tx_m);
        set(&mut r.ant_height_rx_m, self.ant_height_rx_m);
        if self.explicit_range_m.is_some() {
            r.explicit_range_m = self.explicit_range_m;
        }

        match self.key_ttl_s {
            Some(Ttl::Seconds(s)) => c.key_ttl = s,
            Some(Ttl::Keyword(InfKeyword::Inf)) => c.key_ttl = f64::INFINITY,
            None => {}
        }
        set(&mut c.stagger_key_expiry, self.stagger_key_expiry);
        set(&mut c.curve, self.curve);
        set(&mut c.digest, self.digest);
        set(&mut c.duration, self.duration_s);
        set(&mut c.snapshot_dt, self.snapshot_dt_s);
        c.mobility.step_dt = c.snapshot_dt;
        set(&mut c.metrics_stride, self.metrics_stride);
        set(&mut c.metrics_from, self.metrics_from_s);
        set(&mut c.steady_window, self.steady_window_s);
        if let Some(seeds) = &self.seeds {
            c.seeds = seeds.clone();
        }

        match &self.area_lengths_m {
            Some(ls) => {
                let spec = SweepSpec {
                    base: c,
                    area_lengths: ls.clone(),
                };
                spec.validate()?;
                Ok(Scenario::Sweep(spec))
            }
            None => {
                c.validate()?;
                Ok(Scenario::Run(c))
            }
        }
    }

    /// A fully explicit file that resolves back to `cfg` (and, with
    /// `area_lengths`, to the matching sweep).
    pub fn canonical(cfg: &ScenarioConfig, area_lengths: Option<&[f64]>) -> ScenarioFile {
        let (strategy, k1, k2) = match cfg.strategy {
            Strategy::FreshestReplace => (StrategyName::FreshestReplace, None, None),
            Strategy::ExpiredOnlyReplace => (StrategyName::ExpiredOnlyReplace, None, None),
            Strategy::Hybrid { k1, k2 } => (StrategyName::Hybrid, Some(k1), Some(k2)),
        };
        let m = &cfg.mobility;
        let r = &cfg.radio;
        ScenarioFile {
            network_kind: Some(cfg.network_kind),
            mobility_model: Some(m.model),
            n: Some(cfg.n),
            area_length_m: area_lengths.is_none().then_some(cfg.bbox.x_len),
            area_lengths_m: area_lengths.map(<[f64]>::to_vec),
            elevation_m: Some(cfg.bbox.z_len),
            v_min_mps: Some(m.v_min),
            v_max_mps: Some(m.v_max),
            pause_s: Some(m.pause_s),
            gm_alpha: Some(m.gm_alpha),
            gm_mean_speed_mps: Some(m.gm_mean_speed),
            gm_pitch_max_rad: Some(m.gm_pitch_max),
            propagation: Some(r.model),
            tx_power_dbm: Some(r.tx_power_dbm),
            tx_gain_db: Some(r.tx_gain_db),
            rx_gain_db: Some(r.rx_gain_db),
            freq_hz: Some(r.freq_hz),
            rx_threshold_dbm: Some(r.rx_threshold_dbm),
            ant_height_tx_m: Some(r.ant_height_tx_m),
            ant_height_rx_m: Some(r.ant_height_rx_m),
            explicit_range_m: r.explicit_range_m,
            strategy: Some(strategy),
            capacity: Some(match cfg.capacity {
                Some(k) => Capacity::Entries(k),
                None => Capacity::Keyword(UnlimitedKeyword::Unlimited),
            }),
            hybrid_k1: k1,
            hybrid_k2: k2,
            key_ttl_s: Some(if cfg.key_ttl.is_finite() {
                Ttl::Seconds(cfg.key_ttl)
            } else {
                Ttl::Keyword(InfKeyword::Inf)
            }),
            stagger_key_expiry: Some(cfg.stagger_key_expiry),
            curve: Some(cfg.curve),
            digest: Some(cfg.digest),
            duration_s: Some(cfg.duration),
            snapshot_dt_s: Some(cfg.snapshot_dt),
            metrics_stride: Some(cfg.metrics_stride),
            metrics_from_s: Some(cfg.metrics_from),
            steady_window_s: Some(cfg.steady_window),
            seeds: Some(cfg.seeds.clone()),
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
