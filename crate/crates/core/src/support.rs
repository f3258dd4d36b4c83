//! Support sets: the ascending chunk ids whose status is still unknown.
//!
//! Sender and receiver keep identical support sets. A payload bit carries no
//! location; its chunk id is the next support-set location in ascending
//! order, so both sides must apply the same updates in the same order.

use alloc::vec::Vec;

use crate::bitmap::ChunkId;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SupportSet {
    locations: Vec<ChunkId>,
}

impl SupportSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from strictly ascending locations.
    pub fn from_sorted(locations: Vec<ChunkId>) -> Option<Self> {
        locations
            .windows(2)
            .all(|w| w[0] < w[1])
            .then_some(Self { locations })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn as_slice(&self) -> &[ChunkId] {
        &self.locations
    }

    pub fn iter(&self) -> impl Iterator<Item = ChunkId> + '_ {
        self.locations.iter().copied()
    }

    pub fn contains(&self, chunk: ChunkId) -> bool {
        self.locations.binary_search(&chunk).is_ok()
    }

    /// Locations in `[start, end)`.
    pub fn range(&self, start: ChunkId, end: u64) -> &[ChunkId] {
        let lo = self.locations.partition_point(|&l| l < start);
        let hi = self.locations.partition_point(|&l| (l as u64) < end);
        &self.locations[lo..hi.max(lo)]
    }

    fn purge_below(&mut self, floor: ChunkId) {
        let cut = self.locations.partition_point(|&l| l < floor);
        self.locations.drain(..cut);
    }

    fn push_range(&mut self, start: u64, end: u64) {
        debug_assert!(self.locations.last().is_none_or(|&l| (l as u64) < start));
        self.locations.extend((start..end).map(|l| l as ChunkId));
    }

    fn remove_sorted(&mut self, gone: &[ChunkId]) {
        if gone.is_empty() {
            return;
        }
        let mut k = 0;
        self.locations.retain(|&l| {
            while k < gone.len() && gone[k] < l {
                k += 1;
            }
            !(k < gone.len() && gone[k] == l)
        });
    }
}

impl FromIterator<ChunkId> for SupportSet {
    fn from_iter<I: IntoIterator<Item = ChunkId>>(iter: I) -> Self {
        let mut locations: Vec<ChunkId> = iter.into_iter().collect();
        locations.sort_unstable();
        locations.dedup();
        Self { locations }
    }
}

/// Live support set plus the window bookkeeping needed to update it.
///
/// `floor` is the largest offset processed so far (locations below it are
/// purged) and `covered_end` is one past the newest location ever covered by
/// a processed window. Locations at or beyond `covered_end` are *appended*
/// when a window first reaches them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportState {
    set: SupportSet,
    floor: Option<ChunkId>,
    covered_end: Option<u64>,
}

impl SupportState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State whose window `[offset, offset + n)` is fully covered and whose
    /// unknown locations are `set`.
    pub fn with_window(offset: ChunkId, n: usize, set: SupportSet) -> Self {
        Self {
            set,
            floor: Some(offset),
            covered_end: Some(offset as u64 + n as u64),
        }
    }

    pub fn set(&self) -> &SupportSet {
        &self.set
    }

    pub fn floor(&self) -> Option<ChunkId> {
        self.floor
    }

    pub fn covered_end(&self) -> Option<u64> {
        self.covered_end
    }

    fn append_start(&self, offset: ChunkId) -> u64 {
        match self.covered_end {
            Some(end) => end.max(offset as u64),
            None => offset as u64,
        }
    }

    /// Number of payload bits a message for window `[offset, offset + n)`
    /// carries, computed without mutating the state.
    pub fn expected_len(&self, offset: ChunkId, n: usize) -> usize {
        let end = offset as u64 + n as u64;
        let start = self.floor.map_or(offset, |f| f.max(offset));
        let retained = self.set.range(start, end).len();
        let appended = end.saturating_sub(self.append_start(offset));
        retained + appended as usize
    }

    /// Locations [`advance`](Self::advance) would return for this window,
    /// without mutating the state.
    pub fn peek(&self, offset: ChunkId, n: usize) -> Vec<ChunkId> {
        let end = offset as u64 + n as u64;
        let start = self.floor.map_or(offset, |f| f.max(offset));
        let mut locs = self.set.range(start, end).to_vec();
        locs.extend((self.append_start(offset)..end).map(|l| l as ChunkId));
        locs
    }

    /// Purges locations below `offset`, appends newly covered window
    /// locations and returns the locations carried by a message for this
    /// window, in ascending order.
    pub fn advance(&mut self, offset: ChunkId, n: usize) -> Vec<ChunkId> {
        let end = offset as u64 + n as u64;
        let floor = self.floor.map_or(offset, |f| f.max(offset));
        self.set.purge_below(floor);
        self.floor = Some(floor);
        let start = self.append_start(offset);
        if start < end {
            self.set.push_range(start, end);
            self.covered_end = Some(end);
        }
        self.set.range(floor, end).to_vec()
    }

    /// Drops the locations reported as buffered.
    pub fn remove_filled(&mut self, filled: &[ChunkId]) {
        self.set.remove_sorted(filled);
    }

    /// Splits `locations` by the reported `bits`, removes the filled ones and
    /// returns them.
    pub fn apply(&mut self, locations: &[ChunkId], bits: &[bool]) -> Vec<ChunkId> {
        debug_assert_eq!(locations.len(), bits.len());
        let filled: Vec<ChunkId> = locations
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b)
            .map(|(&l, _)| l)
            .collect();
        self.remove_filled(&filled);
        filled
    }
}
