//! The shift-and-add stream of powers of three.
//!
//! A `PowerState` holds 3^j together with the exponent j. Read in binary,
//! the same digits spell (3/2)^j once the radix point is placed j positions
//! from the right, so the low j bits are the fractional part and the top k
//! of those are the bin index. Each step multiplies by three and moves the
//! radix point one position left.

use serde::{Deserialize, Serialize};

use crate::limb::LimbValue;

/// 3^j plus the exponent j, which doubles as the radix-point offset.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PowerState {
    value: LimbValue,
    exponent: u64,
}

impl PowerState {
    /// Fresh stream at j = 1 (value 3, binary 11).
    pub fn new() -> Self {
        PowerState {
            value: LimbValue::from_u64(3),
            exponent: 1,
        }
    }

    /// Rebuilds a state from parts, e.g. a checkpoint or a computed seed.
    /// The value must be a plausible 3^j: nonzero, odd, and wider than j bits
    /// (the integer part of (3/2)^j is at least one).
    pub fn from_parts(value: LimbValue, exponent: u64) -> Option<Self> {
        if exponent == 0 || value.bit(0) != 1 || value.bit_length() <= exponent {
            return None;
        }
        Some(PowerState { value, exponent })
    }

    pub fn value(&self) -> &LimbValue {
        &self.value
    }

    pub fn into_value(self) -> LimbValue {
        self.value
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Advances to 3^(j+1) and moves the radix point.
    #[inline]
    pub fn step(&mut self) {
        self.value.triple_in_place();
        self.exponent += 1;
    }

    /// Index of the bin hit by {(3/2)^j} among 2^k equal bins: the top k
    /// fractional bits, zero-padded on the right when j < k.
    #[inline]
    pub fn bin_index(&self, k: u32) -> u64 {
        self.value.extract_bits(self.exponent - 1, k)
    }

    /// Top 64 bits of the fractional part, i.e. floor({(3/2)^j} * 2^64).
    #[inline]
    pub fn frac_prefix64(&self) -> u64 {
        self.value.extract_bits(self.exponent - 1, 64)
    }
}

impl Default for PowerState {
    fn default() -> Self {
        Self::new()
    }
}

/// Running minimum and maximum of the 64-bit fraction prefixes, with the
/// exponents where they were attained. Ties keep the smallest exponent.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExtremesRecord {
    pub min_prefix: u64,
    pub max_prefix: u64,
    pub argmin_j: u64,
    pub argmax_j: u64,
}

impl ExtremesRecord {
    /// Empty record; `argmin_j == 0` marks "no samples yet" since real
    /// exponents start at 1.
    pub fn new() -> Self {
        ExtremesRecord {
            min_prefix: u64::MAX,
            max_prefix: 0,
            argmin_j: 0,
            argmax_j: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.argmin_j == 0
    }

    pub fn update(&mut self, state: &PowerState) {
        self.observe(state.frac_prefix64(), state.exponent());
    }

    fn observe(&mut self, prefix: u64, j: u64) {
        if self.is_empty() {
            self.min_prefix = prefix;
            self.max_prefix = prefix;
            self.argmin_j = j;
            self.argmax_j = j;
            return;
        }
        // Strict comparisons keep the earliest exponent on ties; segments
        // are scanned in increasing j.
        if prefix < self.min_prefix || (prefix == self.min_prefix && j < self.argmin_j) {
            self.min_prefix = prefix;
            self.argmin_j = j;
        }
        if prefix > self.max_prefix || (prefix == self.max_prefix && j < self.argmax_j) {
            self.max_prefix = prefix;
            self.argmax_j = j;
        }
    }

    /// Folds another record into this one.
    pub fn absorb(&mut self, other: &ExtremesRecord) {
        if other.is_empty() {
            return;
        }
        self.observe(other.min_prefix, other.argmin_j);
        self.observe(other.max_prefix, other.argmax_j);
    }

    /// max - min of the observed prefixes; 0 while empty.
    pub fn gap(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.max_prefix - self.min_prefix
        }
    }
}

impl Default for ExtremesRecord {
    fn default() -> Self {
        Self::new()
    }
}

/// Which side of the unit interval a screened exponent hugs.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaringSide {
    /// Fractional part starts with a run of zeros (near 0).
    Lower,
    /// Fractional part starts with a run of ones (near 1).
    Upper,
}

/// Outcome of the exact comparison behind a screened candidate.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaringConfirmation {
    ScreenOnly,
    Violation,
    NonViolation,
}

/// An exponent whose fractional part came close enough to 0 or 1 to warrant
/// the exact two-sided check (3/4)^j < {(3/2)^j} < 1 - (3/4)^j.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct WaringCandidate {
    pub exponent: u64,
    pub side: WaringSide,
    pub leading_run: u64,
    pub confirmed: WaringConfirmation,
}

/// Screening threshold: a violation at exponent j forces at least
/// ceil(0.4150375*j - 1) identical leading fractional bits, because the bit
/// after a run of length m bounds the distance to the nearest endpoint by
/// 2^-(m+1) while a violation bounds it by (3/4)^j, and
/// log2(4/3) = 0.4150375... (constant truncated, so the threshold is
/// conservative).
pub fn waring_screen_threshold(j: u64) -> u64 {
    (0.415_037_5 * j as f64 - 1.0).ceil() as u64
}

/// Cheap every-iteration screen for the two-sided inequality, applied for
/// j >= 8. Counts the run of identical leading fractional bits; if the run
/// reaches the conservative threshold, performs the exact limb comparison
/// and records the outcome. Returns `None` when the exponent is safely
/// inside the allowed band, which is the overwhelmingly common case.
pub fn waring_screen(state: &PowerState) -> Option<WaringCandidate> {
    let j = state.exponent();
    if j < 8 {
        return None;
    }
    let value = state.value();
    let top = value.bit(j - 1);
    let mut run = 1u64;
    while run < j && value.bit(j - 1 - run) == top {
        run += 1;
    }
    if run < waring_screen_threshold(j) {
        return None;
    }
    let side = if top == 0 {
        WaringSide::Lower
    } else {
        WaringSide::Upper
    };
    let confirmed = confirm_exact(state, side);
    Some(WaringCandidate {
        exponent: j,
        side,
        leading_run: run,
        confirmed,
    })
}

/// Exact check of the screened side. With m = 3^j mod 2^j:
/// lower violation  iff  m * 2^j <= 3^j          ({x} <= (3/4)^j)
/// upper violation  iff  m * 2^j + 3^j >= 2^(2j) ({x} >= 1 - (3/4)^j)
/// Both sides reduce to limb multiplies, adds and compares.
fn confirm_exact(state: &PowerState, side: WaringSide) -> WaringConfirmation {
    let j = state.exponent();
    let frac = state.value().low_bits(j);
    let scaled = frac.mul(&LimbValue::power_of_two(j));
    let violated = match side {
        WaringSide::Lower => scaled <= *state.value(),
        WaringSide::Upper => scaled.add(state.value()) >= LimbValue::power_of_two(2 * j),
    };
    if violated {
        WaringConfirmation::Violation
    } else {
        WaringConfirmation::NonViolation
    }
}
