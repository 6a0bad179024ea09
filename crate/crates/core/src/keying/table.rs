//! Bounded per-node store of other nodes' public-key records.
//!
//! Insertion order of rules:
//! 0. a record from an owner already in the table overwrites it in place;
//! 1. otherwise a free slot takes it;
//! 2. otherwise the strategy decides what (if anything) is evicted.
//!
//! Evictions pick the smallest `expires_at`; ties go to the entry stored or
//! refreshed longest ago, then to the lowest pair priority (see
//! [`KeyTable::with_holder`]), then to the lowest owner id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{NodeId, PublicKeyRecord, VerifiedRecord};
use super::curve::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// When full, evict the entry closest to expiry.
    FreshestReplace,
    /// When full, evict only an already-expired entry.
    ExpiredOnlyReplace,
    /// `k1` slots behave like `FreshestReplace`, `k2` like
    /// `ExpiredOnlyReplace`.
    Hybrid { k1: usize, k2: usize },
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::FreshestReplace => "freshest_replace".into(),
            Strategy::ExpiredOnlyReplace => "expired_only_replace".into(),
            Strategy::Hybrid { k1, k2 } => format!("hybrid_{k1}_{k2}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    /// Hybrid part 1: kept fresh by replacement.
    Rolling,
    /// Hybrid part 2 (and every slot of the other strategies' tables).
    Sticky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsertOutcome {
    Stored,
    Replaced(NodeId),
    RefreshedOwn,
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    record: PublicKeyRecord,
    part: Partition,
    /// Last insert or refresh.
    stored_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyTable {
    capacity: Option<usize>,
    strategy: Strategy,
    holder: Option<NodeId>,
    entries: BTreeMap<NodeId, Entry>,
}

impl KeyTable {
    /// `capacity = None` stores every key it is offered.
    pub fn new(capacity: Option<usize>, strategy: Strategy) -> Result<Self> {
        if let Strategy::Hybrid { k1, k2 } = strategy {
            if capacity != Some(k1 + k2) {
                return Err(Error::config(
                    "capacity",
                    format!("hybrid split {k1}+{k2} must equal the capacity {capacity:?}"),
                ));
            }
        }
        Ok(KeyTable {
            capacity,
            strategy,
            holder: None,
            entries: BTreeMap::new(),
        })
    }

    pub fn unlimited() -> Self {
        KeyTable {
            capacity: None,
            strategy: Strategy::FreshestReplace,
            holder: None,
            entries: BTreeMap::new(),
        }
    }

    /// Records which node owns this table. Full eviction ties are then
    /// broken by a pseudo-random priority symmetric in (holder, owner)
    /// instead of by owner id.
    pub fn with_holder(mut self, holder: NodeId) -> Self {
        self.holder = Some(holder);
        self
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, owner: NodeId) -> Option<&PublicKeyRecord> {
        self.entries.get(&owner).map(|e| &e.record)
    }

    pub fn partition_of(&self, owner: NodeId) -> Option<Partition> {
        self.entries.get(&owner).map(|e| e.part)
    }

    pub fn records(&self) -> impl Iterator<Item = &PublicKeyRecord> + '_ {
        self.entries.values().map(|e| &e.record)
    }

    /// True when the table holds `owner`'s record for exactly `key`, still
    /// valid at `now`.
    pub fn holds_valid(&self, owner: NodeId, key: &Point, now: f64) -> bool {
        self.get(owner)
            .is_some_and(|r| r.key == *key && r.is_valid(now))
    }

    pub fn part_counts(&self) -> (usize, usize) {
        let rolling = self
            .entries
            .values()
            .filter(|e| e.part == Partition::Rolling)
            .count();
        (rolling, self.entries.len() - rolling)
    }

    pub fn insert(&mut self, rec: VerifiedRecord, now: f64) -> Result<InsertOutcome> {
        if !rec.is_valid(now) {
            return Err(Error::RejectedRecord {
                owner: rec.owner,
                reason: "record already expired",
            });
        }
        let rec = rec.into_inner();
        if let Some(e) = self.entries.get_mut(&rec.owner) {
            e.record = rec;
            e.stored_at = now;
            return Ok(InsertOutcome::RefreshedOwn);
        }
        let Some(k) = self.capacity else {
            self.put(rec, Partition::Sticky, now);
            return Ok(InsertOutcome::Stored);
        };
        match self.strategy {
            Strategy::FreshestReplace => {
                if self.entries.len() < k {
                    self.put(rec, Partition::Sticky, now);
                    return Ok(InsertOutcome::Stored);
                }
                Ok(self.evict_into(self.oldest(|_| true), rec, Partition::Sticky, now))
            }
            Strategy::ExpiredOnlyReplace => {
                if self.entries.len() < k {
                    self.put(rec, Partition::Sticky, now);
                    return Ok(InsertOutcome::Stored);
                }
                Ok(self.evict_into(self.oldest(|e| !e.record.is_valid(now)), rec, Partition::Sticky, now))
            }
            Strategy::Hybrid { k1, k2 } => {
                let (rolling, sticky) = self.part_counts();
                if sticky < k2 {
                    self.put(rec, Partition::Sticky, now);
                    return Ok(InsertOutcome::Stored);
                }
                if rolling < k1 {
                    self.put(rec, Partition::Rolling, now);
                    return Ok(InsertOutcome::Stored);
                }
                let expired_sticky =
                    self.oldest(|e| e.part == Partition::Sticky && !e.record.is_valid(now));
                if expired_sticky.is_some() {
                    return Ok(self.evict_into(expired_sticky, rec, Partition::Sticky, now));
                }
                Ok(self.evict_into(self.oldest(|e| e.part == Partition::Rolling), rec, Partition::Rolling, now))
            }
        }
    }

    /// Drops every entry with `expires_at <= now`.
    pub fn purge_expired(&mut self, now: f64) -> usize {
        let before = self.entries.len();
        self.entries.retain(|_, e| e.record.is_valid(now));
        before - self.entries.len()
    }

    fn put(&mut self, rec: PublicKeyRecord, part: Partition, now: f64) {
        self.entries.insert(rec.owner, Entry { record: rec, part, stored_at: now });
    }

    fn oldest(&self, eligible: impl Fn(&Entry) -> bool) -> Option<NodeId> {
        // BTreeMap iterates by ascending owner; strict `<` keeps the lowest id
        // among full ties.
        let mut best: Option<((f64, f64, u64), NodeId)> = None;
        for (&owner, e) in &self.entries {
            if !eligible(e) {
                continue;
            }
            let key = (e.record.expires_at, e.stored_at, self.pair_priority(owner));
            if best.is_none_or(|(b, _)| key < b) {
                best = Some((key, owner));
            }
        }
        best.map(|(_, owner)| owner)
    }

    fn pair_priority(&self, owner: NodeId) -> u64 {
        let Some(h) = self.holder else { return 0 };
        let (a, b) = (h.min(owner) as u64, h.max(owner) as u64);
        // splitmix64 finalizer
        let mut z = (a << 32 | b).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn evict_into(
        &mut self,
        victim: Option<NodeId>,
        rec: PublicKeyRecord,
        part: Partition,
        now: f64,
    ) -> InsertOutcome {
        match victim {
            Some(v) => {
                self.entries.remove(&v);
                self.put(rec, part, now);
                InsertOutcome::Replaced(v)
            }
            None => InsertOutcome::Discarded,
        }
    }
}

/// One contact: `table_i` receives `rec_j` and `table_j` receives `rec_i`.
/// Both records are checked before either table changes.
pub fn exchange(
    table_i: &mut KeyTable,
    table_j: &mut KeyTable,
    rec_i: VerifiedRecord,
    rec_j: VerifiedRecord,
    now: f64,
) -> Result<(InsertOutcome, InsertOutcome)> {
    for r in [&rec_i, &rec_j] {
        if !r.is_valid(now) {
            return Err(Error::RejectedRecord {
                owner: r.owner,
                reason: "record already expired",
            });
        }
    }
    let into_i = table_i.insert(rec_j, now)?;
    let into_j = table_j.insert(rec_i, now)?;
    Ok((into_i, into_j))
}
