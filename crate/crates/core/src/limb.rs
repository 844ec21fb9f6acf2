//! Arbitrary-precision non-negative integers stored as 63-bit limbs.
//!
//! Every limb is a 64-bit word of which only the low 63 bits carry payload.
//! The top bit is reserved: during a shift or an add it receives the overflow
//! out of the payload, which makes carry detection a branch-free `>> 63`.
//! Limbs are stored least-significant first and every public operation
//! returns a canonical value (all marker bits clear, no high zero limb except
//! for zero itself, which is a single zero limb).

use std::cmp::Ordering;
use std::fmt;

/// Payload bits per stored word.
pub const PAYLOAD_BITS: u64 = 63;
/// Mask selecting the payload of a word.
pub const PAYLOAD_MASK: u64 = (1u64 << PAYLOAD_BITS) - 1;

/// A non-negative integer in base 2^63, least-significant limb first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LimbValue {
    limbs: Vec<u64>,
}

impl LimbValue {
    pub fn zero() -> Self {
        LimbValue { limbs: vec![0] }
    }

    pub fn one() -> Self {
        LimbValue { limbs: vec![1] }
    }

    pub fn from_u64(x: u64) -> Self {
        if x <= PAYLOAD_MASK {
            LimbValue { limbs: vec![x] }
        } else {
            LimbValue {
                limbs: vec![x & PAYLOAD_MASK, x >> PAYLOAD_BITS],
            }
        }
    }

    pub fn from_u128(x: u128) -> Self {
        let mut limbs = Vec::new();
        let mut rest = x;
        loop {
            limbs.push((rest as u64) & PAYLOAD_MASK);
            rest >>= PAYLOAD_BITS;
            if rest == 0 {
                break;
            }
        }
        LimbValue { limbs }
    }

    /// 2^exp as a limb value.
    pub fn power_of_two(exp: u64) -> Self {
        let idx = (exp / PAYLOAD_BITS) as usize;
        let off = exp % PAYLOAD_BITS;
        let mut limbs = vec![0u64; idx + 1];
        limbs[idx] = 1u64 << off;
        LimbValue { limbs }
    }

    /// Reassembles a value from raw limbs (least-significant first).
    /// Returns `None` unless the limbs are canonical: payload-only words
    /// and no high zero limb except for a lone zero.
    pub fn from_raw_limbs(limbs: Vec<u64>) -> Option<Self> {
        if limbs.is_empty() || limbs.iter().any(|&w| w > PAYLOAD_MASK) {
            return None;
        }
        if limbs.len() > 1 && *limbs.last().unwrap() == 0 {
            return None;
        }
        Some(LimbValue { limbs })
    }

    pub fn is_zero(&self) -> bool {
        self.limbs == [0]
    }

    /// Raw limbs, least-significant first.
    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    /// Position of the highest set bit plus one; zero for the value zero.
    pub fn bit_length(&self) -> u64 {
        let top = *self.limbs.last().unwrap();
        if top == 0 {
            return 0; // canonical zero
        }
        (self.limbs.len() as u64 - 1) * PAYLOAD_BITS + (64 - top.leading_zeros() as u64)
    }

    /// Payload bit `i` (bit 0 is least significant); out-of-range reads as 0.
    #[inline]
    pub fn bit(&self, i: u64) -> u64 {
        let idx = (i / PAYLOAD_BITS) as usize;
        let off = i % PAYLOAD_BITS;
        match self.limbs.get(idx) {
            Some(&w) => (w >> off) & 1,
            None => 0,
        }
    }

    /// Packs bits `hi, hi-1, ..., hi-count+1` MSB-first into the low bits of
    /// a word. Positions past either end of the value read as zero, so a
    /// short fractional prefix comes back zero-padded on the right.
    pub fn extract_bits(&self, hi: u64, count: u32) -> u64 {
        assert!((1..=64).contains(&count), "bit count {count} outside 1..=64");
        let mut word = 0u64;
        for offset in 0..count as u64 {
            word <<= 1;
            if let Some(idx) = hi.checked_sub(offset) {
                word |= self.bit(idx);
            }
        }
        word
    }

    /// The low `count` bits as a value, i.e. `self mod 2^count`.
    pub fn low_bits(&self, count: u64) -> Self {
        let full = (count / PAYLOAD_BITS) as usize;
        let rem = count % PAYLOAD_BITS;
        let mut limbs: Vec<u64> = self.limbs.iter().take(full).copied().collect();
        if rem > 0 {
            let next = self.limbs.get(full).copied().unwrap_or(0);
            limbs.push(next & ((1u64 << rem) - 1));
        }
        if limbs.is_empty() {
            limbs.push(0);
        }
        let mut v = LimbValue { limbs };
        v.normalize();
        v
    }

    /// Doubles the value. A shift out of the top payload bit lands in the
    /// marker bit and is carried into the next limb.
    pub fn shift_left_1(&self) -> Self {
        let mut out = Vec::with_capacity(self.limbs.len() + 1);
        let mut carry = 0u64;
        for &limb in &self.limbs {
            let shifted = (limb << 1) | carry;
            carry = shifted >> PAYLOAD_BITS;
            out.push(shifted & PAYLOAD_MASK);
        }
        if carry != 0 {
            out.push(carry);
        }
        LimbValue { limbs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (long, short) = if self.limbs.len() >= other.limbs.len() {
            (&self.limbs, &other.limbs)
        } else {
            (&other.limbs, &self.limbs)
        };
        let mut out = Vec::with_capacity(long.len() + 1);
        let mut carry = 0u64;
        for (i, &a) in long.iter().enumerate() {
            let b = short.get(i).copied().unwrap_or(0);
            // a + b + carry <= 2^64 - 1: the marker bit is exactly the carry.
            let sum = a + b + carry;
            carry = sum >> PAYLOAD_BITS;
            out.push(sum & PAYLOAD_MASK);
        }
        if carry != 0 {
            out.push(carry);
        }
        LimbValue { limbs: out }
    }

    /// Schoolbook product; 126-bit partial products are split back into
    /// 63-bit limbs. Quadratic, used only for seeding.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut acc = vec![0u64; self.limbs.len() + other.limbs.len()];
        for (i, &a) in self.limbs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let mut carry: u128 = 0;
            for (j, &b) in other.limbs.iter().enumerate() {
                let cur = acc[i + j] as u128 + (a as u128) * (b as u128) + carry;
                acc[i + j] = (cur as u64) & PAYLOAD_MASK;
                carry = cur >> PAYLOAD_BITS;
            }
            let mut k = i + other.limbs.len();
            while carry != 0 {
                let cur = acc[k] as u128 + carry;
                acc[k] = (cur as u64) & PAYLOAD_MASK;
                carry = cur >> PAYLOAD_BITS;
                k += 1;
            }
        }
        let mut v = LimbValue { limbs: acc };
        v.normalize();
        v
    }

    /// Replaces the value with three times itself in a single forward pass:
    /// per limb, a shift (marker bit = shifted-out payload bit) followed by
    /// an add (marker bit = carry), each feeding its own one-bit carry into
    /// the next limb.
    pub fn triple_in_place(&mut self) {
        let mut shift_carry = 0u64;
        let mut add_carry = 0u64;
        for limb in &mut self.limbs {
            let doubled = (*limb << 1) | shift_carry;
            shift_carry = doubled >> PAYLOAD_BITS;
            let sum = (doubled & PAYLOAD_MASK) + *limb + add_carry;
            add_carry = sum >> PAYLOAD_BITS;
            *limb = sum & PAYLOAD_MASK;
        }
        let tail = shift_carry + add_carry;
        if tail != 0 {
            self.limbs.push(tail);
        }
    }

    /// Value as `u128` when it fits.
    pub fn to_u128(&self) -> Option<u128> {
        if self.bit_length() > 128 {
            return None;
        }
        let mut out: u128 = 0;
        for (i, &w) in self.limbs.iter().enumerate() {
            let sh = i as u32 * PAYLOAD_BITS as u32;
            if sh >= 128 {
                if w != 0 {
                    return None;
                }
                continue;
            }
            out |= (w as u128) << sh;
        }
        Some(out)
    }

    fn normalize(&mut self) {
        while self.limbs.len() > 1 && *self.limbs.last().unwrap() == 0 {
            self.limbs.pop();
        }
    }
}

impl Ord for LimbValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.limbs.len().cmp(&other.limbs.len()) {
            Ordering::Equal => self.limbs.iter().rev().cmp(other.limbs.iter().rev()),
            ord => ord,
        }
    }
}

impl PartialOrd for LimbValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Binary for LimbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for i in (0..self.bit_length()).rev() {
            f.write_str(if self.bit(i) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for LimbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LimbValue({:b})", self)
    }
}
