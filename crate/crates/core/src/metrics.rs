//! Communication density and the evaluation metrics: key-path existence,
//! DE steps, overall path length, visit-all, time to full key connectivity,
//! and neighbor-count moments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keygraph::{bfs, Graph, HopMatrix};
use crate::mobility::BoundingBox;
use crate::par::{map_indices, ExecMode};

/// Expected node count inside one node's communication disk (planar box) or
/// sphere (3D box).
pub fn comm_density(bbox: &BoundingBox, r: f64, n: usize) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("range must be >= 0, got {r}")));
    }
    if n == 0 {
        return Err(Error::EmptyScenario);
    }
    if bbox.is_3d() {
        comm_density_3d(bbox.x_len, bbox.y_len, bbox.z_len, r, n)
    } else {
        comm_density_2d(bbox.x_len, bbox.y_len, r, n)
    }
}

/// `n·πr² / (X·Y)`.
pub fn comm_density_2d(x: f64, y: f64, r: f64, n: usize) -> Result<f64> {
    let area = x * y;
    if !(area > 0.0) {
        return Err(Error::domain("zero-area box"));
    }
    Ok(n as f64 * PI * r * r / area)
}

/// `n·(4/3)πr³ / (X·Y·Z)`.
pub fn comm_density_3d(x: f64, y: f64, z: f64, r: f64, n: usize) -> Result<f64> {
    let volume = x * y * z;
    if !(volume > 0.0) {
        return Err(Error::domain("zero-volume box has no 3D density"));
    }
    Ok(n as f64 * (4.0 / 3.0) * PI * r.powi(3) / volume)
}

/// Key-path statistics over all unordered node pairs of one snapshot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KeyPathStats {
    pub keypath_prob: f64,
    /// Over reachable pairs.
    pub avg_de_steps: Option<f64>,
    /// Over expanded pairs, the same set as `avg_overall_len`.
    pub avg_keypath_hops: Option<f64>,
    /// Over pairs whose every key hop has a physical route.
    pub avg_overall_len: Option<f64>,
    pub pairs: u64,
    pub reachable_pairs: u64,
    pub expanded_pairs: u64,
    /// Pairs whose physical expansion came out shorter than the key-path.
    pub path_violations: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct PairSums {
    reachable: u64,
    de: u64,
    expanded: u64,
    expanded_hops: u64,
    overall: u64,
    violations: u64,
}

impl PairSums {
    fn merge(self, o: PairSums) -> PairSums {
        PairSums {
            reachable: self.reachable + o.reachable,
            de: self.de + o.de,
            expanded: self.expanded + o.expanded,
            expanded_hops: self.expanded_hops + o.expanded_hops,
            overall: self.overall + o.overall,
            violations: self.violations + o.violations,
        }
    }
}

pub fn keypath_stats(key_g: &Graph, phys_g: &Graph, mode: ExecMode) -> Result<KeyPathStats> {
    let n = key_g.node_count();
    if n < 2 {
        return Err(Error::domain("key-path statistics need at least two nodes"));
    }
    if phys_g.node_count() != n {
        return Err(Error::domain("key and physical graphs differ in node count"));
    }
    let hops = HopMatrix::compute(phys_g, mode);
    // Integer partial sums per source: the reduction is exact, so both
    // execution modes agree bit for bit.
    let per_source = map_indices(mode, n, |s| {
        let tree = bfs(key_g, s);
        let mut acc = PairSums::default();
        for d in s + 1..n {
            let Some(path) = tree.path_to(d) else { continue };
            let h = path.hops() as u64;
            acc.reachable += 1;
            acc.de += h.saturating_sub(1);
            if let Some(len) = hops.expand(&path) {
                acc.expanded += 1;
                acc.expanded_hops += h;
                acc.overall += len as u64;
                if (len as u64) < h {
                    acc.violations += 1;
                }
            }
        }
        acc
    });
    let t = per_source.into_iter().fold(PairSums::default(), PairSums::merge);
    let pairs = (n * (n - 1) / 2) as u64;
    let mean = |sum: u64, count: u64| (count > 0).then(|| sum as f64 / count as f64);
    Ok(KeyPathStats {
        keypath_prob: t.reachable as f64 / pairs as f64,
        avg_de_steps: mean(t.de, t.reachable),
        avg_keypath_hops: mean(t.expanded_hops, t.expanded),
        avg_overall_len: mean(t.overall, t.expanded),
        pairs,
        reachable_pairs: t.reachable,
        expanded_pairs: t.expanded,
        path_violations: t.violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub t: f64,
    pub keypath_prob: f64,
    pub avg_de_steps: Option<f64>,
    pub avg_keypath_hops: Option<f64>,
    pub avg_overall_len: Option<f64>,
    pub fully_key_connected: bool,
    pub path_violations: u64,
}

/// Who each node has met so far, and when it first met everyone.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitTracker {
    n: usize,
    met: Vec<bool>,
    met_count: Vec<usize>,
    completion: Vec<Option<f64>>,
    last_t: f64,
}

impl VisitTracker {
    pub fn new(n: usize) -> Self {
        VisitTracker {
            n,
            met: vec![false; n * n],
            met_count: vec![0; n],
            completion: vec![None; n],
            last_t: f64::NEG_INFINITY,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_met(&self, i: usize, j: usize) -> bool {
        self.met[i * self.n + j]
    }

    pub fn met_count(&self, i: usize) -> usize {
        self.met_count[i]
    }

    pub fn completion(&self, i: usize) -> Option<f64> {
        self.completion[i]
    }

    /// Records the contacts of the snapshot at `t` (non-decreasing).
    pub fn update(&mut self, contacts: &[(usize, usize)], t: f64) {
        debug_assert!(t >= self.last_t, "snapshot times must not decrease");
        self.last_t = t;
        for &(i, j) in contacts {
            self.meet(i, j, t);
            self.meet(j, i, t);
        }
    }

    fn meet(&mut self, i: usize, j: usize, t: f64) {
        let slot = &mut self.met[i * self.n + j];
        if i == j || *slot {
            return;
        }
        *slot = true;
        self.met_count[i] += 1;
        if self.met_count[i] == self.n - 1 {
            self.completion[i] = Some(t);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitMetrics {
    pub visit_all_fraction: f64,
    pub avg_time_to_visit_all: Option<f64>,
}

/// Fraction of nodes that met everyone by `horizon`, and their mean
/// completion time.
pub fn visit_metrics(tracker: &VisitTracker, horizon: f64) -> VisitMetrics {
    let done: Vec<f64> = tracker
        .completion
        .iter()
        .filter_map(|c| c.filter(|&t| t <= horizon))
        .collect();
    let n = tracker.n.max(1) as f64;
    VisitMetrics {
        visit_all_fraction: done.len() as f64 / n,
        avg_time_to_visit_all: (!done.is_empty())
            .then(|| done.iter().sum::<f64>() / done.len() as f64),
    }
}

/// Earliest time whose flag is set.
pub fn ttfc(series: &[(f64, bool)]) -> Option<f64> {
    debug_assert!(series.windows(2).all(|w| w[0].0 < w[1].0));
    series.iter().find(|(_, ok)| *ok).map(|&(t, _)| t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMoments {
    pub mean: f64,
    /// Unbiased (n - 1) sample variance.
    pub variance: f64,
    /// `m3 / m2^1.5`; absent when the samples are constant.
    pub skewness: Option<f64>,
    /// `m4 / m2² - 3`; absent when the samples are constant.
    pub excess_kurtosis: Option<f64>,
    pub count: u64,
}

pub fn density_moments(samples: &[u32]) -> Result<DensityMoments> {
    let mut h = NeighborHistogram::default();
    for &s in samples {
        h.add(s as usize);
    }
    h.moments()
}

/// Counts of neighbor-count values; pools samples without storing them.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NeighborHistogram {
    counts: Vec<u64>,
}

impl NeighborHistogram {
    pub fn add(&mut self, value: usize) {
        if self.counts.len() <= value {
            self.counts.resize(value + 1, 0);
        }
        self.counts[value] += 1;
    }

    pub fn merge(&mut self, other: &NeighborHistogram) {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn moments(&self) -> Result<DensityMoments> {
        let count = self.total();
        if count < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {count}")));
        }
        let nf = count as f64;
        let weighted = || self.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        let mean = weighted().map(|(v, &c)| v as f64 * c as f64).sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for (v, &c) in weighted() {
            let d = v as f64 - mean;
            let d2 = d * d;
            m2 += c as f64 * d2;
            m3 += c as f64 * d2 * d;
            m4 += c as f64 * d2 * d2;
        }
        let variance = m2 / (nf - 1.0);
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        let spread = m2 > 1e-12 * mean.abs().max(1.0);
        Ok(DensityMoments {
            mean,
            variance,
            skewness: spread.then(|| m3 / m2.powf(1.5)),
            excess_kurtosis: spread.then(|| m4 / (m2 * m2) - 3.0),
            count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keygraph::{is_connected, shortest_path};
    use crate::rng::{substream, Purpose};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn density_closed_forms() {
        let planar = BoundingBox::new(1000.0, 1000.0, 0.0).unwrap();
        let d2 = comm_density(&planar, 100.0, 100).unwrap();
        assert!((d2 - PI).abs() / PI < 1e-9);
        let slab = BoundingBox::new(1000.0, 1000.0, 100.0).unwrap();
        let d3 = comm_density(&slab, 100.0, 100).unwrap();
        assert!((d3 - 4.0 / 3.0 * PI).abs() / (4.0 / 3.0 * PI) < 1e-9);
        assert_eq!(comm_density(&slab, 0.0, 100).unwrap(), 0.0);
        assert!(comm_density_3d(1000.0, 1000.0, 0.0, 100.0, 100).is_err());
        assert!(comm_density(&slab, 100.0, 0).is_err());
    }

    fn stats(key: &Graph, phys: &Graph) -> KeyPathStats {
        keypath_stats(key, phys, ExecMode::Sequential).unwrap()
    }

    #[test]
    fn keypath_stats_examples() {
        let k4 = Graph::complete(4);
        let s = stats(&k4, &k4);
        assert_eq!(s.keypath_prob, 1.0);
        assert_eq!(s.avg_de_steps, Some(0.0));

        let empty = Graph::new(4);
        let s = stats(&empty, &k4);
        assert_eq!(s.keypath_prob, 0.0);
        assert_eq!((s.avg_de_steps, s.avg_keypath_hops, s.avg_overall_len), (None, None, None));

        let path = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let s = stats(&path, &path);
        assert_eq!(s.keypath_prob, 1.0);
        assert!((s.avg_de_steps.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.avg_keypath_hops.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.avg_overall_len.unwrap() - 4.0 / 3.0).abs() < 1e-12);

        assert!(keypath_stats(&Graph::new(1), &Graph::new(1), ExecMode::Sequential).is_err());
    }

    #[test]
    fn key_hop_expands_over_physical_route() {
        // key edge 0-2 only; physically 0-1-2
        let key = Graph::from_edges(3, [(0, 2)]);
        let phys = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let s = stats(&key, &phys);
        assert!((s.keypath_prob - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.avg_keypath_hops, Some(1.0));
        assert_eq!(s.avg_overall_len, Some(2.0));
    }

    #[test]
    fn visit_examples() {
        let mut t = VisitTracker::new(2);
        t.update(&[(0, 1)], 5.0);
        assert_eq!((t.completion(0), t.completion(1)), (Some(5.0), Some(5.0)));
        let v = visit_metrics(&t, 1000.0);
        assert_eq!(v.visit_all_fraction, 1.0);
        assert_eq!(v.avg_time_to_visit_all, Some(5.0));

        let mut t = VisitTracker::new(3);
        t.update(&[], 1.0);
        assert_eq!(visit_metrics(&t, 1000.0), VisitMetrics { visit_all_fraction: 0.0, avg_time_to_visit_all: None });
        t.update(&[(0, 1)], 2.0);
        t.update(&[(0, 1)], 4.0);
        t.update(&[(0, 2)], 7.0);
        assert_eq!(t.completion(0), Some(7.0));
        assert_eq!(t.completion(1), None);
        let v = visit_metrics(&t, 6.0);
        assert_eq!(v.visit_all_fraction, 0.0);
    }

    #[test]
    fn ttfc_examples() {
        assert_eq!(ttfc(&[(0.0, true), (1.0, true)]), Some(0.0));
        let mut s: Vec<(f64, bool)> = (0..12).map(|t| (t as f64, false)).collect();
        s.push((12.0, true));
        s.push((13.0, false));
        assert_eq!(ttfc(&s), Some(12.0));
        assert_eq!(ttfc(&[(1.0, false), (2.0, false)]), None);
        assert_eq!(ttfc(&[]), None);
    }

    #[test]
    fn moment_examples() {
        let flat = density_moments(&[4, 4, 4, 4]).unwrap();
        assert_eq!(flat.variance, 0.0);
        assert_eq!((flat.skewness, flat.excess_kurtosis), (None, None));

        let m = density_moments(&[1, 2, 3]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.variance, 1.0);
        assert!(m.skewness.unwrap().abs() < 1e-12);
        // m2 = 2/3, m4 = 2/3 → 1.5 − 3
        assert!((m.excess_kurtosis.unwrap() + 1.5).abs() < 1e-12);

        assert!(density_moments(&[3]).is_err());
    }

    #[test]
    fn symmetric_binomial_is_nearly_normal() {
        let mut rng = substream(1, 0, Purpose::Mobility);
        let samples: Vec<u32> = (0..100_000)
            .map(|_| (0..100).filter(|_| rng.random::<bool>()).count() as u32)
            .collect();
        let m = density_moments(&samples).unwrap();
        assert!((m.mean - 50.0).abs() < 0.1);
        assert!(m.skewness.unwrap().abs() < 0.05, "{m:?}");
        assert!(m.excess_kurtosis.unwrap().abs() < 0.1, "{m:?}");
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..=10).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..=n * 2)
                .prop_map(move |e| Graph::from_edges(n, e))
        })
    }

    proptest! {
        #[test]
        fn prob_one_iff_connected(g in arb_graph()) {
            let s = stats(&g, &g);
            prop_assert_eq!(s.keypath_prob == 1.0, is_connected(&g));
        }

        #[test]
        fn stats_match_pairwise_paths(key in arb_graph(), seed in any::<u64>()) {
            let n = key.node_count();
            let mut rng = substream(seed, 0, Purpose::Mobility);
            let phys = Graph::from_edges(n, (0..n * 2).map(|_| (rng.random_range(0..n), rng.random_range(0..n))));
            let s = stats(&key, &phys);
            let seq = keypath_stats(&key, &phys, ExecMode::Parallel).unwrap();
            prop_assert_eq!(&s, &seq);
            let (mut reach, mut de, mut expanded, mut hops, mut overall) = (0u64, 0u64, 0u64, 0u64, 0u64);
            for a in 0..n {
                for b in a + 1..n {
                    if let Some(p) = shortest_path(&key, a, b) {
                        reach += 1;
                        de += crate::keygraph::de_steps(&p) as u64;
                        if let Some(len) = crate::keygraph::overall_path_len(&p, &phys) {
                            prop_assert!(len >= p.hops());
                            expanded += 1;
                            hops += p.hops() as u64;
                            overall += len as u64;
                        }
                    }
                }
            }
            prop_assert_eq!(s.reachable_pairs, reach);
            prop_assert_eq!(s.expanded_pairs, expanded);
            prop_assert_eq!(s.path_violations, 0);
            if reach > 0 {
                prop_assert!((s.avg_de_steps.unwrap() - de as f64 / reach as f64).abs() < 1e-12);
            }
            if expanded > 0 {
                prop_assert!((s.avg_keypath_hops.unwrap() - hops as f64 / expanded as f64).abs() < 1e-12);
                prop_assert!((s.avg_overall_len.unwrap() - overall as f64 / expanded as f64).abs() < 1e-12);
                prop_assert!(s.avg_overall_len.unwrap() >= s.avg_keypath_hops.unwrap());
            } else {
                prop_assert_eq!((s.avg_keypath_hops, s.avg_overall_len), (None, None));
            }
        }

        #[test]
        fn visit_sets_are_monotone(contacts in prop::collection::vec(prop::collection::vec((0usize..6, 0usize..6), 0..5), 1..20)) {
            let mut t = VisitTracker::new(6);
            let mut prev = vec![0; 6];
            for (k, snap) in contacts.iter().enumerate() {
                let pairs: Vec<(usize, usize)> = snap.iter().copied().filter(|(a, b)| a != b).collect();
                t.update(&pairs, k as f64);
                for i in 0..6 {
                    prop_assert!(t.met_count(i) >= prev[i]);
                    prop_assert_eq!(t.completion(i).is_some(), t.met_count(i) == 5);
                    prev[i] = t.met_count(i);
                }
            }
            let mut last = -1.0;
            for h in 0..25 {
                let f = visit_metrics(&t, h as f64).visit_all_fraction;
                prop_assert!(f >= last);
                last = f;
            }
        }

        #[test]
        fn ttfc_is_first_true(flags in prop::collection::vec(any::<bool>(), 0..40)) {
            let series: Vec<(f64, bool)> = flags.iter().enumerate().map(|(i, &f)| (i as f64 * 0.5, f)).collect();
            let oracle = series.iter().filter(|s| s.1).map(|s| s.0).fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
            prop_assert_eq!(ttfc(&series), oracle);
        }
    }
}
