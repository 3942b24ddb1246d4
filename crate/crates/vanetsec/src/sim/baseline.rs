//! Routing baselines the secure mode is compared against: DSDV tables,
//! beacon-built neighbor sets, and the greedy geographic forwarding walk
//! shared by GPSR and BMFR.

use std::collections::BTreeMap;

/// One DSDV routing table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsdvEntry {
    pub seq: u32,
    pub hops: u32,
}

/// Destination-sequenced distance-vector table for one node.
#[derive(Debug, Clone)]
pub struct DsdvTable {
    self_id: u32,
    own_seq: u32,
    entries: BTreeMap<u32, DsdvEntry>,
}

impl DsdvTable {
    pub fn new(self_id: u32) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(self_id, DsdvEntry { seq: 0, hops: 0 });
        Self {
            self_id,
            own_seq: 0,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, dest: u32) -> bool {
        self.entries.contains_key(&dest)
    }

    /// Bump the own sequence number and return the full table as it goes on
    /// the air.
    pub fn advertise(&mut self) -> BTreeMap<u32, DsdvEntry> {
        self.own_seq += 2; // even numbers mark live routes
        self.entries
            .get_mut(&self.self_id)
            .expect("self entry always present")
            .seq = self.own_seq;
        self.entries.clone()
    }

    /// Merge a neighbor's full-table advertisement: prefer newer sequence
    /// numbers, then shorter routes.
    pub fn merge(&mut self, advert: &BTreeMap<u32, DsdvEntry>) {
        for (&dest, entry) in advert {
            if dest == self.self_id {
                continue;
            }
            let candidate = DsdvEntry {
                seq: entry.seq,
                hops: entry.hops + 1,
            };
            match self.entries.get(&dest) {
                Some(existing)
                    if existing.seq > candidate.seq
                        || (existing.seq == candidate.seq && existing.hops <= candidate.hops) => {}
                _ => {
                    self.entries.insert(dest, candidate);
                }
            }
        }
    }
}

/// Indices of nodes within `radius` of node `i`, excluding `i` itself.
pub fn neighbors(positions: &[f64], i: usize, radius: f64) -> Vec<usize> {
    positions
        .iter()
        .enumerate()
        .filter(|&(j, &p)| j != i && (p - positions[i]).abs() <= radius)
        .map(|(j, _)| j)
        .collect()
}

/// Greedy geographic walk from `src` to `dst`: each hop goes to the in-range
/// node closest to the destination, requiring strict progress. Returns the
/// hop count, or None at a local maximum (the packet is dropped there).
///
/// GPSR and BMFR both resolve to this rule on a one-dimensional road; they
/// differ only in the per-packet state each forwarder keeps.
pub fn greedy_route(positions: &[f64], src: usize, dst: usize, radius: f64) -> Option<u32> {
    if src == dst {
        return Some(0);
    }
    let mut current = src;
    let mut hops = 0u32;
    let goal = positions[dst];
    // A simple path never revisits a node, so node count bounds the walk.
    for _ in 0..positions.len() {
        if (positions[current] - goal).abs() <= radius {
            return Some(hops + 1);
        }
        let here = (positions[current] - goal).abs();
        let next = neighbors(positions, current, radius)
            .into_iter()
            .min_by(|&a, &b| {
                let da = (positions[a] - goal).abs();
                let db = (positions[b] - goal).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })?;
        if (positions[next] - goal).abs() >= here {
            return None; // local maximum
        }
        current = next;
        hops += 1;
    }
    None
}
