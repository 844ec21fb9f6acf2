//! Versioned, CRC-protected checkpoint files for long segment runs.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "PW32"            4 bytes
//! format version          u16
//! bins-log2 k             u8
//! exponent j              u64   (last exponent already binned)
//! j_end                   u64   (segment end, exclusive)
//! limb count              u32
//! limbs of 3^j            u64 * count, least-significant first
//! histogram total         u64
//! bin counts              u64 * 2^k
//! extremes                min_prefix u64, max_prefix u64,
//!                         argmin_j u64, argmax_j u64
//! waring candidate count  u32
//! waring records          exponent u64, side u8, leading_run u32,
//!                         confirmed u8   (per record)
//! CRC-32                  u32 over all preceding bytes
//! ```
//!
//! The segment start is not stored: it is `j + 1 - total`, because every
//! exponent from the start through `j` has been binned exactly once.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::histogram::Histogram;
use crate::limb::LimbValue;
use crate::power::{
    ExtremesRecord, PowerState, WaringCandidate, WaringConfirmation, WaringSide,
};

pub const MAGIC: &[u8; 4] = b"PW32";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("checkpoint file truncated")]
    Truncated,
    #[error("checkpoint has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("checkpoint is internally inconsistent: {0}")]
    Corrupt(String),
}

/// A restartable snapshot of one segment run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub k: u32,
    /// Last exponent whose bin has been recorded.
    pub exponent: u64,
    /// Exclusive end of the segment.
    pub j_end: u64,
    /// 3^exponent.
    pub value: LimbValue,
    pub histogram: Histogram,
    pub extremes: ExtremesRecord,
    pub waring: Vec<WaringCandidate>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        encode_parts(
            self.k,
            self.exponent,
            self.j_end,
            &self.value,
            self.histogram.total(),
            self.histogram.counts(),
            &self.extremes,
            &self.waring,
        )
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 4 {
            return Err(CheckpointError::Truncated);
        }
        if &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < 4 + 2 + 4 {
            return Err(CheckpointError::Truncated);
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
        let computed = crc32(body);
        if stored != computed {
            return Err(CheckpointError::CrcMismatch { stored, computed });
        }

        let mut r = Reader::new(&body[4..]);
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let k = r.u8()? as u32;
        if !(1..=63).contains(&k) {
            return Err(CheckpointError::Corrupt(format!("bins-log2 {k}")));
        }
        let exponent = r.u64()?;
        let j_end = r.u64()?;
        let limb_count = r.u32()? as usize;
        let mut limbs = Vec::with_capacity(limb_count);
        for _ in 0..limb_count {
            limbs.push(r.u64()?);
        }
        let total = r.u64()?;
        let bins = 1usize << k;
        let mut counts = Vec::with_capacity(bins);
        for _ in 0..bins {
            counts.push(r.u64()?);
        }
        let extremes = ExtremesRecord {
            min_prefix: r.u64()?,
            max_prefix: r.u64()?,
            argmin_j: r.u64()?,
            argmax_j: r.u64()?,
        };
        let waring_count = r.u32()? as usize;
        let mut waring = Vec::with_capacity(waring_count);
        for _ in 0..waring_count {
            let exp = r.u64()?;
            let side = match r.u8()? {
                0 => WaringSide::Lower,
                1 => WaringSide::Upper,
                b => return Err(CheckpointError::Corrupt(format!("waring side byte {b}"))),
            };
            let leading_run = r.u32()? as u64;
            let confirmed = match r.u8()? {
                0 => WaringConfirmation::ScreenOnly,
                1 => WaringConfirmation::Violation,
                2 => WaringConfirmation::NonViolation,
                b => {
                    return Err(CheckpointError::Corrupt(format!(
                        "waring confirmation byte {b}"
                    )))
                }
            };
            waring.push(WaringCandidate {
                exponent: exp,
                side,
                leading_run,
                confirmed,
            });
        }
        if !r.is_empty() {
            return Err(CheckpointError::TrailingBytes(r.remaining()));
        }

        // Semantic validation: the CRC guards the bytes, these guard the
        // meaning.
        let value = LimbValue::from_raw_limbs(limbs)
            .ok_or_else(|| CheckpointError::Corrupt("non-canonical limbs".into()))?;
        let state = PowerState::from_parts(value, exponent)
            .ok_or_else(|| CheckpointError::Corrupt("value is not a plausible power of 3".into()))?;
        if exponent >= j_end {
            return Err(CheckpointError::Corrupt(format!(
                "exponent {exponent} not below segment end {j_end}"
            )));
        }
        if total < 1 || total > exponent {
            return Err(CheckpointError::Corrupt(format!(
                "total {total} incompatible with exponent {exponent}"
            )));
        }
        let j_start = exponent + 1 - total;
        let histogram = Histogram::from_parts(k, j_start, j_end, counts)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        if histogram.total() != total {
            return Err(CheckpointError::Corrupt(format!(
                "count sum {} does not match stored total {total}",
                histogram.total()
            )));
        }
        if extremes.is_empty()
            || extremes.min_prefix > extremes.max_prefix
            || extremes.argmin_j < j_start
            || extremes.argmin_j > exponent
            || extremes.argmax_j < j_start
            || extremes.argmax_j > exponent
        {
            return Err(CheckpointError::Corrupt("extremes out of range".into()));
        }
        if waring.iter().any(|c| c.exponent < j_start || c.exponent > exponent) {
            return Err(CheckpointError::Corrupt(
                "waring candidate outside segment".into(),
            ));
        }
        let value = state.into_value();
        Ok(Checkpoint {
            k,
            exponent,
            j_end,
            value,
            histogram,
            extremes,
            waring,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CheckpointError> {
        Self::decode(&fs::read(path)?)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn encode_parts(
    k: u32,
    exponent: u64,
    j_end: u64,
    value: &LimbValue,
    total: u64,
    counts: &[u64],
    extremes: &ExtremesRecord,
    waring: &[WaringCandidate],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + value.limbs().len() * 8 + counts.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(k as u8);
    out.extend_from_slice(&exponent.to_le_bytes());
    out.extend_from_slice(&j_end.to_le_bytes());
    out.extend_from_slice(&(value.limbs().len() as u32).to_le_bytes());
    for &limb in value.limbs() {
        out.extend_from_slice(&limb.to_le_bytes());
    }
    out.extend_from_slice(&total.to_le_bytes());
    for &c in counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&extremes.min_prefix.to_le_bytes());
    out.extend_from_slice(&extremes.max_prefix.to_le_bytes());
    out.extend_from_slice(&extremes.argmin_j.to_le_bytes());
    out.extend_from_slice(&extremes.argmax_j.to_le_bytes());
    out.extend_from_slice(&(waring.len() as u32).to_le_bytes());
    for c in waring {
        out.extend_from_slice(&c.exponent.to_le_bytes());
        out.push(match c.side {
            WaringSide::Lower => 0,
            WaringSide::Upper => 1,
        });
        out.extend_from_slice(&(c.leading_run as u32).to_le_bytes());
        out.push(match c.confirmed {
            WaringConfirmation::ScreenOnly => 0,
            WaringConfirmation::Violation => 1,
            WaringConfirmation::NonViolation => 2,
        });
    }
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Writes bytes to `<path>.tmp` and renames over the target, so a crash or
/// write failure never leaves a half-written checkpoint behind.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("ckpt.tmp");
    let result = (|| -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(CheckpointError::Io)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    fn remaining(&self) -> usize {
        self.buf.len()
    }
}

// CRC-32 (IEEE 802.3, reflected, init/xorout 0xFFFFFFFF), table-driven.
const CRC_TABLE: [u32; 256] = build_crc_table();

const fn build_crc_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut bit = 0;
        while bit < 8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            bit += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

pub fn crc32(data: &[u8]) -> u32 {
    let mut c = 0xFFFF_FFFFu32;
    for &b in data {
        c = CRC_TABLE[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}
