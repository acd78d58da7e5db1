//! Sparse word-word co-occurrence counting.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io::{BufRead, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::TokenIdStream;
use crate::error::{Error, Result};

/// Size in bytes of one record in the binary format.
pub const RECORD_BYTES: usize = 16;

/// One nonzero cell `M[target][context]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CooccurRecord {
    pub target: u32,
    pub context: u32,
    pub value: f64,
}

impl CooccurRecord {
    pub fn new(target: u32, context: u32, value: f64) -> Self {
        CooccurRecord {
            target,
            context,
            value,
        }
    }

    #[inline]
    fn key(&self) -> u64 {
        (u64::from(self.target) << 32) | u64::from(self.context)
    }
}

/// Window parameters for [`count_cooccurrences`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowConfig {
    pub window: usize,
    pub symmetric: bool,
    /// Add `1/d` for a pair at distance `d` instead of 1.
    pub distance_weighting: bool,
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window: 15,
            symmetric: true,
            distance_weighting: true,
        }
    }
}

/// Sparse matrix of co-occurrence records sorted by `(target, context)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooccurSet {
    records: Vec<CooccurRecord>,
    row_totals: Vec<f64>,
}

impl CooccurSet {
    /// Build from records in any order. Duplicate cells are summed in input
    /// order; non-positive or non-finite values are rejected.
    pub fn from_records(mut records: Vec<CooccurRecord>) -> Result<Self> {
        for (n, r) in records.iter().enumerate() {
            if !(r.value.is_finite() && r.value > 0.0) {
                return Err(Error::parse(
                    n + 1,
                    format!("record ({}, {}) has invalid value {}", r.target, r.context, r.value),
                ));
            }
        }
        records.sort_by_key(CooccurRecord::key);
        records.dedup_by(|later, kept| {
            if later.key() == kept.key() {
                kept.value += later.value;
                true
            } else {
                false
            }
        });
        Ok(Self::from_sorted_unique(records))
    }

    fn from_sorted_unique(records: Vec<CooccurRecord>) -> Self {
        let rows = records.last().map_or(0, |r| r.target as usize + 1);
        let mut row_totals = vec![0.0; rows];
        for r in &records {
            row_totals[r.target as usize] += r.value;
        }
        CooccurSet {
            records,
            row_totals,
        }
    }

    pub fn records(&self) -> &[CooccurRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `M_i`, the sum of row `i`; zero for rows without records.
    pub fn row_total(&self, i: u32) -> f64 {
        self.row_totals.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `M_ij`, zero when absent.
    pub fn value(&self, i: u32, j: u32) -> f64 {
        let key = (u64::from(i) << 32) | u64::from(j);
        self.records
            .binary_search_by_key(&key, CooccurRecord::key)
            .map_or(0.0, |n| self.records[n].value)
    }

    /// Largest id referenced by any record, plus one.
    pub fn id_bound(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.target.max(r.context) as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn total(&self) -> f64 {
        self.records.iter().map(|r| r.value).sum()
    }
}

/// Slide a window over each segment of `stream` and accumulate pair weights.
///
/// For each position `p` and distance `d` in `1..=window` with `p - d` in the
/// same segment, the weight (1 or `1/d`) is added to `(id[p], id[p-d])` and,
/// when symmetric, to `(id[p-d], id[p])`.
pub fn count_cooccurrences(stream: &TokenIdStream, config: WindowConfig) -> Result<CooccurSet> {
    config.validate()?;
    let counts = count_range(stream, config, 0, stream.len());
    Ok(into_set(counts))
}

/// Count with `shards` independent workers over contiguous position ranges,
/// then merge.
///
/// Each shard owns the pairs whose later position falls in its range and
/// reads earlier tokens for left context, so no pair is lost or counted
/// twice. With raw counts the result equals [`count_cooccurrences`] exactly.
pub fn count_cooccurrences_sharded(
    stream: &TokenIdStream,
    config: WindowConfig,
    shards: usize,
) -> Result<CooccurSet> {
    config.validate()?;
    let shards = shards.max(1).min(stream.len().max(1));
    if shards == 1 {
        return count_cooccurrences(stream, config);
    }
    let step = stream.len().div_ceil(shards);
    let parts: Vec<CooccurSet> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..shards)
            .map(|s| {
                let start = s * step;
                let end = ((s + 1) * step).min(stream.len());
                scope.spawn(move || into_set(count_range(stream, config, start, end)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("counting shard panicked"))
            .collect()
    });
    Ok(merge(&parts))
}

fn count_range(
    stream: &TokenIdStream,
    config: WindowConfig,
    start: usize,
    end: usize,
) -> HashMap<u64, f64> {
    let ids = &stream.ids;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for (seg_start, seg_end) in stream.segments() {
        let lo = seg_start.max(start);
        let hi = seg_end.min(end);
        for p in lo..hi {
            let cur = u64::from(ids[p]);
            let reach = config.window.min(p - seg_start);
            for d in 1..=reach {
                let ctx = u64::from(ids[p - d]);
                let w = if config.distance_weighting {
                    1.0 / d as f64
                } else {
                    1.0
                };
                *counts.entry((cur << 32) | ctx).or_insert(0.0) += w;
                if config.symmetric {
                    *counts.entry((ctx << 32) | cur).or_insert(0.0) += w;
                }
            }
        }
    }
    counts
}

fn into_set(counts: HashMap<u64, f64>) -> CooccurSet {
    let mut records: Vec<CooccurRecord> = counts
        .into_iter()
        .map(|(k, value)| CooccurRecord::new((k >> 32) as u32, k as u32, value))
        .collect();
    records.sort_unstable_by_key(CooccurRecord::key);
    CooccurSet::from_sorted_unique(records)
}

/// Sum shards cell by cell with a k-way streaming merge. Values for a cell are
/// added in shard order.
pub fn merge(shards: &[CooccurSet]) -> CooccurSet {
    let mut heap = BinaryHeap::new();
    let mut cursors = vec![0usize; shards.len()];
    for (s, shard) in shards.iter().enumerate() {
        if let Some(r) = shard.records.first() {
            heap.push(Reverse((r.key(), s)));
        }
    }
    let mut out: Vec<CooccurRecord> = Vec::new();
    while let Some(Reverse((key, s))) = heap.pop() {
        let rec = shards[s].records[cursors[s]];
        match out.last_mut() {
            Some(last) if last.key() == key => last.value += rec.value,
            _ => out.push(rec),
        }
        cursors[s] += 1;
        if let Some(next) = shards[s].records.get(cursors[s]) {
            heap.push(Reverse((next.key(), s)));
        }
    }
    CooccurSet::from_sorted_unique(out)
}

/// `P(j | i) = M_ij / M_i`.
pub fn probability(set: &CooccurSet, i: u32, j: u32) -> Result<f64> {
    let total = set.row_total(i);
    if total <= 0.0 {
        return Err(Error::UndefinedRow(i));
    }
    Ok(set.value(i, j) / total)
}

/// Outcome of `P_iz / P_jz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// `P_jz == 0` while `P_iz > 0`.
    Infinite,
    /// Both probabilities are zero.
    Indeterminate,
}

pub fn probability_ratio(set: &CooccurSet, i: u32, j: u32, z: u32) -> Result<Ratio> {
    let p_iz = probability(set, i, z)?;
    let p_jz = probability(set, j, z)?;
    Ok(match (p_iz > 0.0, p_jz > 0.0) {
        (_, true) => Ratio::Finite(p_iz / p_jz),
        (true, false) => Ratio::Infinite,
        (false, false) => Ratio::Indeterminate,
    })
}

/// Permute `records` in place; the order depends only on `seed`.
pub fn shuffle_records(records: &mut [CooccurRecord], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
}

pub fn shuffle(set: &CooccurSet, seed: u64) -> Vec<CooccurRecord> {
    let mut records = set.records.clone();
    shuffle_records(&mut records, seed);
    records
}

/// Little-endian `(u32 target, u32 context, f64 value)` records, no header.
pub fn write_binary<W: Write>(records: &[CooccurRecord], mut out: W) -> Result<()> {
    let mut buf = [0u8; RECORD_BYTES];
    for r in records {
        buf[0..4].copy_from_slice(&r.target.to_le_bytes());
        buf[4..8].copy_from_slice(&r.context.to_le_bytes());
        buf[8..16].copy_from_slice(&r.value.to_le_bytes());
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Vec<CooccurRecord>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::parse(
            bytes.len() / RECORD_BYTES + 1,
            format!("truncated record: {} trailing bytes", bytes.len() % RECORD_BYTES),
        ));
    }
    Ok(bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| CooccurRecord {
            target: u32::from_le_bytes(c[0..4].try_into().unwrap()),
            context: u32::from_le_bytes(c[4..8].try_into().unwrap()),
            value: f64::from_le_bytes(c[8..16].try_into().unwrap()),
        })
        .collect())
}

/// `target context value` lines.
pub fn write_text<W: Write>(records: &[CooccurRecord], mut out: W) -> Result<()> {
    for r in records {
        writeln!(out, "{} {} {}", r.target, r.context, r.value)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<Vec<CooccurRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(' ').collect();
        let [t, c, v] = fields[..] else {
            return Err(Error::parse(n + 1, "expected `target context value`"));
        };
        let bad = |e: &dyn std::fmt::Display| Error::parse(n + 1, e.to_string());
        out.push(CooccurRecord {
            target: t.parse().map_err(|e| bad(&e))?,
            context: c.parse().map_err(|e| bad(&e))?,
            value: v.parse().map_err(|e| bad(&e))?,
        });
    }
    Ok(out)
}
