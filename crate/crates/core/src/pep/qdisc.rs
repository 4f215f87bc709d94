use std::collections::{BTreeMap, VecDeque};

use super::classifier::ClassId;
use crate::simcore::Packet;

/// Default per-band packet limits: band 0 (EF) and band 1 (best effort).
pub const DEFAULT_BAND_LIMITS: [usize; 2] = [100, 500];

#[derive(Debug, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Queued { band: usize },
    Dropped { band: usize, packet: Packet },
}

/// Strict-priority queue discipline with drop-tail FIFO bands.
///
/// Classes without a band mapping go to the last (lowest priority) band.
#[derive(Clone, Debug)]
pub struct PrioQdisc {
    bands: Vec<VecDeque<Packet>>,
    limits: Vec<usize>,
    drops: Vec<u64>,
    class_to_band: BTreeMap<ClassId, usize>,
    len: usize,
}

impl Default for PrioQdisc {
    fn default() -> Self {
        Self::new(&DEFAULT_BAND_LIMITS)
    }
}

impl PrioQdisc {
    pub fn new(limits: &[usize]) -> Self {
        assert!(!limits.is_empty(), "qdisc needs at least one band");
        PrioQdisc {
            bands: limits.iter().map(|_| VecDeque::new()).collect(),
            limits: limits.to_vec(),
            drops: vec![0; limits.len()],
            class_to_band: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn limits(&self) -> &[usize] {
        &self.limits
    }

    pub fn map_class(&mut self, class: ClassId, band: usize) {
        assert!(band < self.bands.len());
        self.class_to_band.insert(class, band);
    }

    pub fn unmap_class(&mut self, class: ClassId) -> bool {
        self.class_to_band.remove(&class).is_some()
    }

    pub fn class_map(&self) -> &BTreeMap<ClassId, usize> {
        &self.class_to_band
    }

    #[inline]
    pub fn band_for(&self, class: ClassId) -> usize {
        if self.class_to_band.is_empty() {
            return self.bands.len() - 1;
        }
        self.class_to_band.get(&class).copied().unwrap_or(self.bands.len() - 1)
    }

    #[inline]
    pub fn enqueue(&mut self, p: Packet, class: ClassId) -> EnqueueOutcome {
        let band = self.band_for(class);
        if self.bands[band].len() >= self.limits[band] {
            self.drops[band] += 1;
            return EnqueueOutcome::Dropped { band, packet: p };
        }
        self.bands[band].push_back(p);
        self.len += 1;
        EnqueueOutcome::Queued { band }
    }

    #[inline]
    pub fn dequeue(&mut self) -> Option<Packet> {
        if self.len == 0 {
            return None;
        }
        for band in &mut self.bands {
            if let Some(p) = band.pop_front() {
                self.len -= 1;
                return Some(p);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn band_len(&self, band: usize) -> usize {
        self.bands[band].len()
    }

    pub fn band_drops(&self, band: usize) -> u64 {
        self.drops[band]
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.iter().sum()
    }

    pub fn occupancy(&self) -> Vec<usize> {
        self.bands.iter().map(VecDeque::len).collect()
    }

    pub fn drops(&self) -> &[u64] {
        &self.drops
    }
}
