//! Scans alternative readings of "which bits form the bin index" at the
//! desk scale, reporting tau and p for each. Only variant A reproduces the
//! documented first-40-iteration bins.

use pw32::{chi_square_pvalue, Histogram, PowerState};

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(781_250);
    let k: u32 = 18;

    let mut hists: Vec<(String, Histogram)> = [
        "A: bits j-1..j-k (top fractional, canonical)",
        "B: bits j+k-1..j (low integer bits)",
        "C: bits j..j-k+1 (shifted up one)",
        "D: bits j-2..j-k-1 (shifted down one)",
    ]
    .iter()
    .map(|name| (name.to_string(), Histogram::new(k, 1, n + 1).unwrap()))
    .collect();

    let mut s = PowerState::new();
    for j in 1..=n {
        let v = s.value();
        hists[0].1.record(v.extract_bits(j - 1, k));
        hists[1].1.record(v.extract_bits(j + k as u64 - 1, k));
        hists[2].1.record(v.extract_bits(j, k));
        hists[3].1.record(if j >= 2 { v.extract_bits(j - 2, k) } else { 0 });
        if j < n {
            s.step();
        }
    }

    for (name, h) in &hists {
        let tau = pw32::chi_square_stat(h).unwrap();
        let (p, _) = chi_square_pvalue(tau, h.bins() - 1).unwrap();
        println!("{name}: tau = {tau:.3}, p = {p:.5}");
    }
}
