//! Prewired scenarios behind each evaluation figure.

use uavkey::config::{ScenarioFile, StrategyName};
use uavkey::engine::{default_area_lengths, NetworkKind};
use uavkey::mobility::MobilityModel;

pub struct Figure {
    pub title: &'static str,
    /// Metrics emitted, by base name.
    pub metrics: &'static [&'static str],
    /// Whether the figure needs per-snapshot path metrics.
    pub path_metrics: bool,
    pub scenarios: Vec<ScenarioFile>,
}

const MODELS: [MobilityModel; 2] = [MobilityModel::RandomWaypoint, MobilityModel::GaussMarkov];
const KINDS: [NetworkKind; 2] = [NetworkKind::FANET, NetworkKind::MANET];
const STRATEGIES: [StrategyName; 3] = [
    StrategyName::FreshestReplace,
    StrategyName::ExpiredOnlyReplace,
    StrategyName::Hybrid,
];

fn base(kind: NetworkKind, model: MobilityModel) -> ScenarioFile {
    ScenarioFile {
        network_kind: Some(kind),
        mobility_model: Some(model),
        area_lengths_m: Some(default_area_lengths()),
        ..ScenarioFile::default()
    }
}

/// FANET and MANET under both mobility models, unlimited storage.
fn comparison() -> Vec<ScenarioFile> {
    KINDS
        .iter()
        .flat_map(|&k| MODELS.iter().map(move |&m| base(k, m)))
        .collect()
}

/// FANET under each storage strategy and both mobility models.
fn strategies() -> Vec<ScenarioFile> {
    MODELS
        .iter()
        .flat_map(|&m| {
            STRATEGIES.iter().map(move |&s| ScenarioFile {
                strategy: Some(s),
                ..base(NetworkKind::FANET, m)
            })
        })
        .collect()
}

pub fn figure(number: u8) -> Option<Figure> {
    let (title, metrics, path_metrics, scenarios): (_, &'static [&'static str], _, _) = match number {
        2 => ("key-path existence probability", &["keypath_prob"], true, comparison()),
        3 => ("time to full key connectivity", &["ttfc_s"], false, comparison()),
        4 => ("intermediate DE steps", &["de_steps"], true, comparison()),
        5 => ("probability of visiting all other nodes", &["visit_all_fraction"], false, comparison()),
        6 => ("time to visit all other nodes", &["time_to_visit_all_s"], false, comparison()),
        7 => ("key-path probability per storage strategy", &["keypath_prob"], true, strategies()),
        8 => (
            "DE steps and path lengths per storage strategy",
            &["de_steps", "keypath_hops", "overall_path_len"],
            true,
            strategies(),
        ),
        _ => return None,
    };
    Some(Figure {
        title,
        metrics,
        path_metrics,
        scenarios,
    })
}
