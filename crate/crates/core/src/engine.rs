//! Single simulation runs and (area length × seed) sweeps.
//!
//! One snapshot, in order: move every node, rotate expired key pairs, find
//! contacts, tally neighbor counts, exchange records over each contact in
//! ascending pair order, purge expired table entries, update visit sets,
//! build the key graph, then measure. Snapshots are taken at
//! `t = k·snapshot_dt` for `k = 1..=duration/snapshot_dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keygraph::{build_key_graph, is_connected, Graph};
use crate::keying::{
    exchange, keygen, CurveParams, DigestKind, KeyPair, KeyTable, PublicKeyRecord, Strategy,
    VerifiedRecord,
};
use crate::metrics::{
    comm_density, comm_density_2d, comm_density_3d, keypath_stats, visit_metrics,
    DensityMoments, NeighborHistogram, SnapshotMetrics, VisitMetrics, VisitTracker,
};
use crate::mobility::{init_state, step, BoundingBox, MobilityConfig, MobilityModel};
use crate::par::{map_slice, ExecMode};
use crate::radio::{comm_range, contact_pairs, PropagationModel, RadioConfig};
use crate::rng::{substream, Purpose, SimRng};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    FANET,
    MANET,
}

impl NetworkKind {
    pub fn label(self) -> &'static str {
        match self {
            NetworkKind::FANET => "FANET",
            NetworkKind::MANET => "MANET",
        }
    }

    /// Box height: flying nodes share a 100 m slab, ground nodes a plane.
    pub fn default_elevation_m(self) -> f64 {
        match self {
            NetworkKind::FANET => 100.0,
            NetworkKind::MANET => 0.0,
        }
    }

    pub fn default_propagation(self) -> PropagationModel {
        match self {
            NetworkKind::FANET => PropagationModel::FreeSpace,
            NetworkKind::MANET => PropagationModel::TwoRay,
        }
    }

    pub fn default_speed_range(self) -> (f64, f64) {
        match self {
            NetworkKind::FANET => (0.0, 50.0),
            NetworkKind::MANET => (0.0, 20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveChoice {
    /// p = 17, group order 19. Only for demonstrations.
    Toy,
    #[default]
    Simulation,
}

impl CurveChoice {
    pub fn params(self) -> CurveParams {
        match self {
            CurveChoice::Toy => CurveParams::toy(),
            CurveChoice::Simulation => CurveParams::simulation(),
        }
    }
}

/// Height used for the 3D density of planar scenarios, so both density
/// axes exist for every run.
pub const REFERENCE_ELEVATION_M: f64 = 100.0;

pub const DEFAULT_NODES: usize = 100;
pub const DEFAULT_AREA_LENGTH_M: f64 = 1000.0;
pub const DEFAULT_DURATION_S: f64 = 1000.0;
pub const DEFAULT_SNAPSHOT_DT_S: f64 = 1.0;
pub const DEFAULT_SEEDS: u64 = 20;
pub const DEFAULT_STRATEGY_CAPACITY: usize = 10;
pub const DEFAULT_STRATEGY_TTL_S: f64 = 100.0;
pub const DEFAULT_STEADY_WINDOW_S: f64 = 100.0;

/// `[500, 600, ..., 1500]` m.
pub fn default_area_lengths() -> Vec<f64> {
    (5..=15).map(|k| k as f64 * 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network_kind: NetworkKind,
    pub n: usize,
    pub bbox: BoundingBox,
    pub mobility: MobilityConfig,
    pub radio: RadioConfig,
    /// Seconds, `f64::INFINITY` for keys that never expire.
    pub key_ttl: f64,
    /// Spread initial expiries uniformly over one TTL instead of expiring
    /// every node's first key at the same instant.
    pub stagger_key_expiry: bool,
    pub strategy: Strategy,
    /// `None` keeps every key offered; the strategy is then irrelevant.
    pub capacity: Option<usize>,
    pub curve: CurveChoice,
    pub digest: DigestKind,
    pub duration: f64,
    pub snapshot_dt: f64,
    /// Full key-path statistics every this many snapshots.
    pub metrics_stride: usize,
    /// Snapshots before this time are not measured (connectivity is still
    /// tracked for TTFC).
    pub metrics_from: f64,
    /// Run-level path metrics average the snapshots in this trailing window.
    pub steady_window: f64,
    pub seeds: Vec<u64>,
}

impl ScenarioConfig {
    /// Comparison defaults: 100 nodes, 1000 s, 1 s snapshots, seeds 1..=20,
    /// unlimited storage and non-expiring keys.
    pub fn table1(kind: NetworkKind, model: MobilityModel) -> Self {
        let (v_min, v_max) = kind.default_speed_range();
        let mut mobility = MobilityConfig::new(model, v_min, v_max);
        mobility.step_dt = DEFAULT_SNAPSHOT_DT_S;
        ScenarioConfig {
            network_kind: kind,
            n: DEFAULT_NODES,
            bbox: BoundingBox {
                x_len: DEFAULT_AREA_LENGTH_M,
                y_len: DEFAULT_AREA_LENGTH_M,
                z_len: kind.default_elevation_m(),
            },
            mobility,
            radio: RadioConfig::new(kind.default_propagation()),
            key_ttl: f64::INFINITY,
            stagger_key_expiry: false,
            strategy: Strategy::FreshestReplace,
            capacity: None,
            curve: CurveChoice::default(),
            digest: DigestKind::default(),
            duration: DEFAULT_DURATION_S,
            snapshot_dt: DEFAULT_SNAPSHOT_DT_S,
            metrics_stride: 1,
            metrics_from: 0.0,
            steady_window: DEFAULT_STEADY_WINDOW_S,
            seeds: (1..=DEFAULT_SEEDS).collect(),
        }
    }

    /// Strategy-run defaults: `k = 10` (Hybrid split 5/5) and a 100 s TTL.
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.capacity = Some(match strategy {
            Strategy::Hybrid { k1, k2 } => k1 + k2,
            _ => DEFAULT_STRATEGY_CAPACITY,
        });
        self.strategy = strategy;
        self.key_ttl = DEFAULT_STRATEGY_TTL_S;
        self
    }

    pub fn with_area_length(mut self, l: f64) -> Self {
        self.bbox.x_len = l;
        self.bbox.y_len = l;
        self
    }

    pub fn snapshot_count(&self) -> usize {
        (self.duration / self.snapshot_dt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be >= 1"));
        }
        self.bbox.validate()?;
        self.mobility.validate()?;
        if (self.mobility.step_dt - self.snapshot_dt).abs() > 1e-12 {
            return Err(Error::config("snapshot_dt_s", "mobility step must equal the snapshot interval"));
        }
        self.radio.validate()?;
        comm_range(&self.radio)?;
        if !(self.key_ttl > 0.0) {
            return Err(Error::config("key_ttl_s", "must be > 0 or \"inf\""));
        }
        if self.capacity == Some(0) {
            return Err(Error::config("capacity", "must be >= 1 or \"unlimited\""));
        }
        if self.capacity.is_some() {
            KeyTable::new(self.capacity, self.strategy)?;
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("duration_s", "must be finite and > 0"));
        }
        if !(self.snapshot_dt.is_finite() && self.snapshot_dt > 0.0) {
            return Err(Error::config("snapshot_dt_s", "must be finite and > 0"));
        }
        if self.snapshot_count() == 0 {
            return Err(Error::config("duration_s", "shorter than one snapshot interval"));
        }
        if self.metrics_stride == 0 {
            return Err(Error::config("metrics_stride", "must be >= 1"));
        }
        if !(self.metrics_from.is_finite() && self.metrics_from >= 0.0) {
            return Err(Error::config("metrics_from_s", "must be finite and >= 0"));
        }
        if !(self.steady_window > 0.0) {
            return Err(Error::config("steady_window_s", "must be > 0"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        Ok(())
    }

    /// Stable FNV-1a hash of every field, as hex.
    pub fn fingerprint(&self) -> String {
        format!("{:016x}", crate::keying::record::fnv1a(format!("{self:?}").as_bytes()))
    }

    /// Suffix distinguishing bounded-storage runs in metric names.
    pub fn strategy_tag(&self) -> Option<String> {
        self.capacity.map(|_| self.strategy.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub area_lengths: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.area_lengths.is_empty() {
            return Err(Error::config("area_lengths_m", "must not be empty"));
        }
        for &l in &self.area_lengths {
            self.base.clone().with_area_length(l).validate()?;
        }
        Ok(())
    }

    pub fn network_kind(&self) -> NetworkKind {
        self.base.network_kind
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub network_kind: NetworkKind,
    pub mobility_model: MobilityModel,
    pub area_length_m: f64,
    pub comm_range_m: f64,
    pub comm_density_2d: f64,
    pub comm_density_3d: f64,
    /// Every measured snapshot, in time order.
    pub snapshots: Vec<SnapshotMetrics>,
    pub ttfc_s: Option<f64>,
    pub visit: VisitMetrics,
    pub density: Option<DensityMoments>,
    pub neighbor_histogram: NeighborHistogram,
    pub path_violations: u64,
    pub steady_window: f64,
    pub duration: f64,
}

/// Run-level metric names in output order.
pub const RUN_METRICS: [&str; 12] = [
    "keypath_prob",
    "de_steps",
    "keypath_hops",
    "overall_path_len",
    "ttfc_s",
    "visit_all_fraction",
    "time_to_visit_all_s",
    "density_mean",
    "density_variance",
    "density_skewness",
    "density_excess_kurtosis",
    "path_inequality_violations",
];

impl RunResult {
    fn steady(&self) -> impl Iterator<Item = &SnapshotMetrics> {
        let from = self.duration - self.steady_window;
        self.snapshots.iter().filter(move |s| s.t > from + 1e-9)
    }

    fn steady_mean(&self, f: impl Fn(&SnapshotMetrics) -> Option<f64>) -> Option<f64> {
        let (sum, count) = self
            .steady()
            .filter_map(f)
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// Mean keypath probability over the trailing window.
    pub fn keypath_prob(&self) -> Option<f64> {
        self.steady_mean(|s| Some(s.keypath_prob))
    }

    pub fn de_steps(&self) -> Option<f64> {
        self.steady_mean(|s| s.avg_de_steps)
    }

    pub fn keypath_hops(&self) -> Option<f64> {
        self.steady_mean(|s| s.avg_keypath_hops)
    }

    pub fn overall_path_len(&self) -> Option<f64> {
        self.steady_mean(|s| s.avg_overall_len)
    }

    /// The density in the network's own dimensionality.
    pub fn native_density(&self) -> f64 {
        match self.network_kind {
            NetworkKind::FANET => self.comm_density_3d,
            NetworkKind::MANET => self.comm_density_2d,
        }
    }

    /// `(name, value)` for each entry of [`RUN_METRICS`].
    pub fn summary(&self) -> Vec<(&'static str, Option<f64>)> {
        let d = self.density.as_ref();
        let values = [
            self.keypath_prob(),
            self.de_steps(),
            self.keypath_hops(),
            self.overall_path_len(),
            self.ttfc_s,
            Some(self.visit.visit_all_fraction),
            self.visit.avg_time_to_visit_all,
            d.map(|d| d.mean),
            d.map(|d| d.variance),
            d.and_then(|d| d.skewness),
            d.and_then(|d| d.excess_kurtosis),
            Some(self.path_violations as f64),
        ];
        RUN_METRICS.iter().copied().zip(values).collect()
    }
}

/// Densities reported for a scenario: both axes always, the missing height
/// of planar boxes replaced by [`REFERENCE_ELEVATION_M`].
pub fn scenario_densities(bbox: &BoundingBox, r: f64, n: usize) -> Result<(f64, f64)> {
    let z = if bbox.is_3d() { bbox.z_len } else { REFERENCE_ELEVATION_M };
    Ok((
        comm_density_2d(bbox.x_len, bbox.y_len, r, n)?,
        comm_density_3d(bbox.x_len, bbox.y_len, z, r, n)?,
    ))
}

struct Node {
    mobility_rng: SimRng,
    keygen_rng: SimRng,
    signing_rng: SimRng,
    keypair: KeyPair,
    record: VerifiedRecord,
}

fn issue(
    owner: usize,
    kp: &KeyPair,
    curve: &CurveParams,
    digest: DigestKind,
    rng: &mut SimRng,
) -> Result<VerifiedRecord> {
    PublicKeyRecord::issue(owner, kp, curve, &digest, rng)?.verified(curve, &digest)
}

pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    run_with(cfg, seed, ExecMode::default())
}

pub fn run_with(cfg: &ScenarioConfig, seed: u64, mode: ExecMode) -> Result<RunResult> {
    cfg.validate()?;
    simulate(cfg, seed, mode).map_err(|e| Error::Run {
        area_length_m: cfg.bbox.x_len,
        seed,
        source: Box::new(e),
    })
}

fn simulate(cfg: &ScenarioConfig, seed: u64, mode: ExecMode) -> Result<RunResult> {
    let n = cfg.n;
    let r = comm_range(&cfg.radio)?;
    let curve = cfg.curve.params();
    let ttl = cfg.key_ttl;

    let mut states = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let mut mobility_rng = substream(seed, i, Purpose::Mobility);
        states.push(init_state(&cfg.bbox, &cfg.mobility, &mut mobility_rng));
        let mut keygen_rng = substream(seed, i, Purpose::KeyGen);
        let mut signing_rng = substream(seed, i, Purpose::Signing);
        let issued_at = if cfg.stagger_key_expiry && ttl.is_finite() {
            -substream(seed, i, Purpose::KeyPhase).random::<f64>() * ttl
        } else {
            0.0
        };
        let keypair = keygen(&curve, &mut keygen_rng, issued_at, ttl)?;
        let record = issue(i, &keypair, &curve, cfg.digest, &mut signing_rng)?;
        nodes.push(Node { mobility_rng, keygen_rng, signing_rng, keypair, record });
    }
    let mut tables = match cfg.capacity {
        None => vec![KeyTable::unlimited(); n],
        Some(_) => (0..n)
            .map(|i| KeyTable::new(cfg.capacity, cfg.strategy).map(|t| t.with_holder(i)))
            .collect::<Result<Vec<_>>>()?,
    };

    let mut tracker = VisitTracker::new(n);
    let mut histogram = NeighborHistogram::default();
    let mut degree = vec![0usize; n];
    let mut snapshots = Vec::new();
    let mut ttfc_s = None;
    let mut violations = 0;

    let steps = cfg.snapshot_count();
    for k in 1..=steps {
        let t = k as f64 * cfg.snapshot_dt;

        for (state, node) in states.iter_mut().zip(&mut nodes) {
            *state = step(state, &cfg.mobility, &cfg.bbox, &mut node.mobility_rng);
        }

        for (i, node) in nodes.iter_mut().enumerate() {
            if !node.keypair.is_valid(t) {
                // Next expiry is measured from the old one, so staggered
                // phases persist.
                let mut issued_at = node.keypair.expires_at;
                while issued_at + ttl <= t {
                    issued_at += ttl;
                }
                node.keypair = keygen(&curve, &mut node.keygen_rng, issued_at, ttl)?;
                node.record = issue(i, &node.keypair, &curve, cfg.digest, &mut node.signing_rng)?;
            }
        }

        let positions: Vec<_> = states.iter().map(|s| s.pos).collect();
        let pairs = contact_pairs(&positions, r);

        degree.fill(0);
        for &(i, j) in &pairs {
            degree[i] += 1;
            degree[j] += 1;
        }
        for &d in &degree {
            histogram.add(d);
        }

        for &(i, j) in &pairs {
            let (lo, hi) = tables.split_at_mut(j);
            exchange(
                &mut lo[i],
                &mut hi[0],
                nodes[i].record.clone(),
                nodes[j].record.clone(),
                t,
            )?;
        }

        if ttl.is_finite() {
            for table in &mut tables {
                table.purge_expired(t);
            }
        }

        tracker.update(&pairs, t);

        let measure = k % cfg.metrics_stride == 0 && n >= 2 && t >= cfg.metrics_from - 1e-9;
        if !measure && ttfc_s.is_some() {
            continue;
        }
        let keys: Vec<_> = nodes.iter().map(|node| node.keypair.public).collect();
        let key_g = build_key_graph(&tables, &keys, t);
        let connected = is_connected(&key_g);
        if connected && ttfc_s.is_none() {
            ttfc_s = Some(t);
        }

        if measure {
            let phys_g = Graph::from_edges(n, pairs.iter().copied());
            let stats = keypath_stats(&key_g, &phys_g, mode)?;
            violations += stats.path_violations;
            snapshots.push(SnapshotMetrics {
                t,
                keypath_prob: stats.keypath_prob,
                avg_de_steps: stats.avg_de_steps,
                avg_keypath_hops: stats.avg_keypath_hops,
                avg_overall_len: stats.avg_overall_len,
                fully_key_connected: connected,
                path_violations: stats.path_violations,
            });
        }
    }

    let (comm_density_2d, comm_density_3d) = scenario_densities(&cfg.bbox, r, n)?;
    debug_assert_eq!(
        comm_density(&cfg.bbox, r, n)?,
        if cfg.bbox.is_3d() { comm_density_3d } else { comm_density_2d }
    );
    let horizon = steps as f64 * cfg.snapshot_dt;
    Ok(RunResult {
        seed,
        network_kind: cfg.network_kind,
        mobility_model: cfg.mobility.model,
        area_length_m: cfg.bbox.x_len,
        comm_range_m: r,
        comm_density_2d,
        comm_density_3d,
        snapshots,
        ttfc_s,
        visit: visit_metrics(&tracker, horizon),
        density: histogram.moments().ok(),
        neighbor_histogram: histogram,
        path_violations: violations,
        steady_window: cfg.steady_window,
        duration: horizon,
    })
}

/// Seed-mean of every run metric at one area length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub area_length_m: f64,
    pub comm_density_2d: f64,
    pub comm_density_3d: f64,
    pub runs: usize,
    /// Means over the runs where each metric is defined.
    pub metrics: Vec<(String, Option<f64>)>,
}

impl AggregatePoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(m, _)| m == name).and_then(|(_, v)| *v)
    }

    pub fn native_density(&self, kind: NetworkKind) -> f64 {
        match kind {
            NetworkKind::FANET => self.comm_density_3d,
            NetworkKind::MANET => self.comm_density_2d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub network_kind: NetworkKind,
    pub mobility_model: MobilityModel,
    pub strategy_tag: Option<String>,
    /// Sorted by area length, then by position in the seed list.
    pub runs: Vec<RunResult>,
    pub aggregates: Vec<AggregatePoint>,
}

impl SweepResult {
    pub fn aggregate_at(&self, area_length_m: f64) -> Option<&AggregatePoint> {
        self.aggregates
            .iter()
            .find(|a| (a.area_length_m - area_length_m).abs() < 1e-9)
    }
}

pub fn aggregate(runs: &[RunResult]) -> Result<AggregatePoint> {
    let first = runs.first().ok_or_else(|| Error::domain("no runs to aggregate"))?;
    let summaries: Vec<_> = runs.iter().map(RunResult::summary).collect();
    let metrics = RUN_METRICS
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let vals: Vec<f64> = summaries.iter().filter_map(|s| s[m].1).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (name.to_string(), mean)
        })
        .collect();
    Ok(AggregatePoint {
        area_length_m: first.area_length_m,
        comm_density_2d: first.comm_density_2d,
        comm_density_3d: first.comm_density_3d,
        runs: runs.len(),
        metrics,
    })
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    sweep_with(spec, ExecMode::default())
}

/// Runs every (area length, seed) pair, in parallel across runs when `mode`
/// allows. The result order never depends on scheduling.
pub fn sweep_with(spec: &SweepSpec, mode: ExecMode) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, u64)> = spec
        .area_lengths
        .iter()
        .enumerate()
        .flat_map(|(a, &l)| spec.base.seeds.iter().map(move |&s| (a, l, s)))
        .collect();
    let outcomes = map_slice(mode, &jobs, |&(_, l, seed)| {
        // Runs already spread across workers; keep each one single-threaded.
        let inner = if jobs.len() > 1 { ExecMode::Sequential } else { mode };
        run_with(&spec.base.clone().with_area_length(l), seed, inner)
    });
    let runs = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let per_length = spec.base.seeds.len();
    let aggregates = runs
        .chunks(per_length)
        .map(aggregate)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        network_kind: spec.base.network_kind,
        mobility_model: spec.base.mobility.model,
        strategy_tag: spec.base.strategy_tag(),
        runs,
        aggregates,
    })
}
