//! Fixed-width bin counters over the unit interval.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HistogramError {
    #[error("bins-log2 {0} outside 1..=63")]
    BadBinBits(u32),
    #[error("exponent range [{0}, {1}) is not a valid interval")]
    BadRange(u64, u64),
    #[error("cannot merge histograms with bins-log2 {0} and {1}")]
    KMismatch(u32, u32),
    #[error("exponent ranges [{0}, {1}) and [{2}, {3}) overlap")]
    RangeOverlap(u64, u64, u64, u64),
    #[error("exponent ranges [{0}, {1}) and [{2}, {3}) leave a gap")]
    RangeGap(u64, u64, u64, u64),
    #[error("malformed histogram data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// 2^k counters over [0,1) plus the exponent interval they cover.
/// A histogram for [j_start, j_end) is complete when total == j_end - j_start;
/// while a segment is still running the counts lag behind the range.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Histogram {
    k: u32,
    total: u64,
    j_start: u64,
    j_end: u64,
    counts: Vec<u64>,
}

impl Histogram {
    /// Allocates 2^k zero counters covering [j_start, j_end). Memory is
    /// 8 * 2^k bytes; allocation failure at large k is a fatal environment
    /// error, not a recoverable one.
    pub fn new(k: u32, j_start: u64, j_end: u64) -> Result<Self, HistogramError> {
        if !(1..=63).contains(&k) {
            return Err(HistogramError::BadBinBits(k));
        }
        if j_start > j_end {
            return Err(HistogramError::BadRange(j_start, j_end));
        }
        Ok(Histogram {
            k,
            total: 0,
            j_start,
            j_end,
            counts: vec![0; 1usize << k],
        })
    }

    /// Rebuilds a histogram from parts (checkpoint or JSON import).
    pub fn from_parts(
        k: u32,
        j_start: u64,
        j_end: u64,
        counts: Vec<u64>,
    ) -> Result<Self, HistogramError> {
        if !(1..=63).contains(&k) {
            return Err(HistogramError::BadBinBits(k));
        }
        if j_start > j_end {
            return Err(HistogramError::BadRange(j_start, j_end));
        }
        if counts.len() != 1usize << k {
            return Err(HistogramError::Malformed(format!(
                "expected {} counters, found {}",
                1usize << k,
                counts.len()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| HistogramError::Malformed("count total overflows u64".into()))?;
        Ok(Histogram {
            k,
            total,
            j_start,
            j_end,
            counts,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of bins, 2^k.
    pub fn bins(&self) -> u64 {
        1u64 << self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn range(&self) -> (u64, u64) {
        (self.j_start, self.j_end)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Increments one bin. An out-of-range bin is a logic fault upstream in
    /// the bin extraction, so it aborts rather than returning an error.
    #[inline]
    pub fn record(&mut self, bin: u64) {
        assert!(
            bin < self.bins(),
            "bin {bin} out of range for 2^{} bins",
            self.k
        );
        self.counts[bin as usize] += 1;
        self.total += 1;
    }

    /// Element-wise sum of two histograms over adjacent (or identical-k
    /// empty) exponent ranges. Overlaps are rejected to prevent double
    /// counting; gaps are rejected because the merged range must stay a
    /// single interval of binned exponents.
    pub fn merge(&self, other: &Histogram) -> Result<Histogram, HistogramError> {
        if self.k != other.k {
            return Err(HistogramError::KMismatch(self.k, other.k));
        }
        // A zero-width range carries no counts: identity.
        if self.j_start == self.j_end {
            return Ok(other.clone());
        }
        if other.j_start == other.j_end {
            return Ok(self.clone());
        }
        let (lo, hi) = if self.j_start <= other.j_start {
            (self, other)
        } else {
            (other, self)
        };
        if lo.j_end > hi.j_start {
            return Err(HistogramError::RangeOverlap(
                lo.j_start, lo.j_end, hi.j_start, hi.j_end,
            ));
        }
        if lo.j_end < hi.j_start {
            return Err(HistogramError::RangeGap(
                lo.j_start, lo.j_end, hi.j_start, hi.j_end,
            ));
        }
        let mut counts = lo.counts.clone();
        for (acc, &c) in counts.iter_mut().zip(&hi.counts) {
            *acc += c;
        }
        Ok(Histogram {
            k: self.k,
            total: lo.total + hi.total,
            j_start: lo.j_start,
            j_end: hi.j_end,
            counts,
        })
    }

    /// Writes `bin_index,count` lines with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), HistogramError> {
        writeln!(w, "bin_index,count")?;
        for (i, &c) in self.counts.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }

    /// Reads counts back from `write_csv` output. The exponent range is not
    /// part of the CSV, so the caller supplies it.
    pub fn read_csv<R: BufRead>(
        r: R,
        k: u32,
        j_start: u64,
        j_end: u64,
    ) -> Result<Self, HistogramError> {
        let mut counts = vec![0u64; 1usize << k];
        let mut lines = r.lines();
        match lines.next().transpose()? {
            Some(header) if header.trim() == "bin_index,count" => {}
            _ => return Err(HistogramError::Malformed("missing csv header".into())),
        }
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (idx, count) = line
                .split_once(',')
                .ok_or_else(|| HistogramError::Malformed(format!("bad csv line: {line}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| HistogramError::Malformed(format!("bad bin index: {idx}")))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| HistogramError::Malformed(format!("bad count: {count}")))?;
            if idx >= counts.len() {
                return Err(HistogramError::Malformed(format!(
                    "bin index {idx} out of range"
                )));
            }
            counts[idx] = count;
            seen += 1;
        }
        if seen != counts.len() {
            return Err(HistogramError::Malformed(format!(
                "expected {} rows, found {seen}",
                counts.len()
            )));
        }
        Self::from_parts(k, j_start, j_end, counts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("histogram serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, HistogramError> {
        let h: Histogram =
            serde_json::from_str(s).map_err(|e| HistogramError::Malformed(e.to_string()))?;
        // Re-derive the total instead of trusting the serialized field.
        Self::from_parts(h.k, h.j_start, h.j_end, h.counts)
    }
}
