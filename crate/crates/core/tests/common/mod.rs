//! Shared test oracles, written independently of the library code paths.

#![allow(dead_code)]

use pw32::LimbValue;

/// Naive reference big integer in base 2^63, least-significant digit first.
/// Every operation goes through plain u128 arithmetic with no marker-bit
/// tricks, and multiplication assembles shifted partial products instead of
/// accumulating rows in place.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NaiveBig {
    digits: Vec<u64>, // each < 2^63
}

pub const BASE_BITS: u32 = 63;
const BASE: u128 = 1u128 << BASE_BITS;

impl NaiveBig {
    pub fn from_u64(x: u64) -> Self {
        let mut v = NaiveBig {
            digits: vec![(x as u128 % BASE) as u64, (x as u128 / BASE) as u64],
        };
        v.trim();
        v
    }

    pub fn from_digits(digits: Vec<u64>) -> Self {
        assert!(digits.iter().all(|&d| (d as u128) < BASE));
        let mut v = NaiveBig { digits };
        v.trim();
        v
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    fn trim(&mut self) {
        while self.digits.len() > 1 && *self.digits.last().unwrap() == 0 {
            self.digits.pop();
        }
        if self.digits.is_empty() {
            self.digits.push(0);
        }
    }

    pub fn add(&self, other: &NaiveBig) -> NaiveBig {
        let len = self.digits.len().max(other.digits.len());
        let mut out = Vec::with_capacity(len + 1);
        let mut carry: u128 = 0;
        for i in 0..len {
            let a = self.digits.get(i).copied().unwrap_or(0) as u128;
            let b = other.digits.get(i).copied().unwrap_or(0) as u128;
            let s = a + b + carry;
            out.push((s % BASE) as u64);
            carry = s / BASE;
        }
        if carry > 0 {
            out.push(carry as u64);
        }
        NaiveBig::from_digits(out)
    }

    pub fn double(&self) -> NaiveBig {
        let mut out = Vec::with_capacity(self.digits.len() + 1);
        let mut carry: u128 = 0;
        for &d in &self.digits {
            let s = 2 * d as u128 + carry;
            out.push((s % BASE) as u64);
            carry = s / BASE;
        }
        if carry > 0 {
            out.push(carry as u64);
        }
        NaiveBig::from_digits(out)
    }

    /// Shift by whole digits (multiply by 2^(63 * places)).
    fn shift_digits(&self, places: usize) -> NaiveBig {
        if self.is_zero() {
            return self.clone();
        }
        let mut digits = vec![0u64; places];
        digits.extend_from_slice(&self.digits);
        NaiveBig::from_digits(digits)
    }

    fn mul_single(&self, m: u64) -> NaiveBig {
        let mut out = Vec::with_capacity(self.digits.len() + 1);
        let mut carry: u128 = 0;
        for &d in &self.digits {
            let s = d as u128 * m as u128 + carry;
            out.push((s % BASE) as u64);
            carry = s / BASE;
        }
        while carry > 0 {
            out.push((carry % BASE) as u64);
            carry /= BASE;
        }
        NaiveBig::from_digits(out)
    }

    pub fn mul(&self, other: &NaiveBig) -> NaiveBig {
        let mut acc = NaiveBig::from_u64(0);
        for (i, &d) in other.digits.iter().enumerate() {
            acc = acc.add(&self.mul_single(d).shift_digits(i));
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.digits == [0]
    }

    /// Low `bits` bits, i.e. the value mod 2^bits.
    pub fn low_bits(&self, bits: u64) -> NaiveBig {
        let full = (bits / BASE_BITS as u64) as usize;
        let rem = bits % BASE_BITS as u64;
        let mut digits: Vec<u64> = self.digits.iter().take(full).copied().collect();
        if rem > 0 {
            let next = self.digits.get(full).copied().unwrap_or(0);
            digits.push(next & ((1u64 << rem) - 1));
        }
        if digits.is_empty() {
            digits.push(0);
        }
        NaiveBig::from_digits(digits)
    }

    /// 3^j by repeated addition: v <- v + v + v, a different code path from
    /// both the library's fused triple and its schoolbook multiply.
    pub fn pow3(j: u64) -> NaiveBig {
        let mut v = NaiveBig::from_u64(1);
        for _ in 0..j {
            v = v.add(&v).add(&v);
        }
        v
    }

    pub fn matches(&self, value: &LimbValue) -> bool {
        self.digits == value.limbs()
    }
}

/// Builds the same random value in both representations from one stream of
/// random bits: exactly `bits` bits with the top bit set.
pub fn random_pair(rng: &mut impl rand::Rng, bits: u64) -> (LimbValue, NaiveBig) {
    assert!(bits >= 1);
    let words = bits.div_ceil(BASE_BITS as u64) as usize;
    let mut digits: Vec<u64> = (0..words)
        .map(|_| rng.random::<u64>() & ((1u64 << BASE_BITS) - 1))
        .collect();
    let top_off = (bits - 1) % BASE_BITS as u64;
    let top = &mut digits[words - 1];
    *top &= (1u64 << (top_off + 1)) - 1; // clear above the target width
    *top |= 1u64 << top_off; // pin the exact bit length
    let value = LimbValue::from_raw_limbs(digits.clone()).expect("canonical by construction");
    (value, NaiveBig::from_digits(digits))
}
