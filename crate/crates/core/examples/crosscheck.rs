//! Full-scale independent recomputation: rebuilds the whole bin stream with
//! a base-2^32 bignum (different word size, carry scheme and bit extraction
//! from the library's 63-bit limbs) and compares every bin index, the final
//! histogram, and the statistic.

use pw32::{analyze, PowerState};

/// Base-2^32 digits, least significant first, u64 arithmetic throughout.
struct Wide32 {
    digits: Vec<u64>, // each < 2^32
}

impl Wide32 {
    fn new(x: u64) -> Self {
        Wide32 {
            digits: vec![x & 0xFFFF_FFFF, x >> 32],
        }
    }

    fn triple(&mut self) {
        let mut carry = 0u64;
        for d in &mut self.digits {
            let t = *d * 3 + carry; // < 3 * 2^32 + carry, fits u64
            *d = t & 0xFFFF_FFFF;
            carry = t >> 32;
        }
        while carry > 0 {
            self.digits.push(carry & 0xFFFF_FFFF);
            carry >>= 32;
        }
    }

    fn bit(&self, i: u64) -> u64 {
        match self.digits.get((i / 32) as usize) {
            Some(&d) => (d >> (i % 32)) & 1,
            None => 0,
        }
    }

    /// Top k bits of the low j bits, MSB first, right-padded with zeros.
    fn bin(&self, j: u64, k: u32) -> u64 {
        let mut out = 0u64;
        for step in 1..=k as u64 {
            out <<= 1;
            if j >= step {
                out |= self.bit(j - step);
            }
        }
        out
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(781_250);
    let k: u32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(18);

    let t0 = std::time::Instant::now();
    let mut reference = Wide32::new(3);
    let mut stream = PowerState::new();
    let mut counts = vec![0u64; 1 << k];
    let mut mismatches = 0u64;

    for j in 1..=n {
        let expected = reference.bin(j, k);
        let got = stream.bin_index(k);
        if expected != got {
            mismatches += 1;
            if mismatches <= 10 {
                println!("mismatch at j = {j}: reference {expected}, library {got}");
            }
        }
        counts[expected as usize] += 1;
        if j < n {
            reference.triple();
            stream.step();
        }
    }

    let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let r = 1u128 << k;
    let tau = (r * sum_sq - (n as u128) * (n as u128)) as f64 / n as f64;

    let hist = pw32::Histogram::from_parts(k, 1, n + 1, counts).unwrap();
    let analysis = analyze(&hist, 0.5, true).unwrap();
    println!(
        "n={n} k={k}: {mismatches} bin mismatches; independent tau = {tau:.3}, p = {:.5}, posterior lb = {:.5} ({:.0?})",
        analysis.p_value,
        analysis.posterior_lb,
        t0.elapsed()
    );
}
