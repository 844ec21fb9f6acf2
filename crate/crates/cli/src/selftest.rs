//! Built-in reference vectors: bit patterns of the first powers of three,
//! the first bins of the stream at 2^10 bins, and statistics spot values.

use pw32::{
    bayes_asymptotic_lower_bound, chi_square_pvalue, chi_square_stat, posterior_lower_bound,
    Histogram, LimbValue, PowerState,
};

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool) {
        self.total += 1;
        if ok {
            println!("selftest {name:<44} ok");
        } else {
            self.failed += 1;
            println!("selftest {name:<44} FAIL");
        }
    }
}

pub fn run_all() -> bool {
    let mut report = Report { failed: 0, total: 0 };

    // Powers of three, bit for bit.
    let expected_bits = [
        "11",
        "1001",
        "11011",
        "1010001",
        "11110011",
        "1011011001",
        "100010001011",
        "1100110100001",
        "100110011100011",
        "1110011010101001",
    ];
    let mut s = PowerState::new();
    let mut all = true;
    for (i, want) in expected_bits.iter().enumerate() {
        let got = format!("{:b}", s.value());
        if got != *want {
            println!("  3^{}: got {got}, want {want}", i + 1);
            all = false;
        }
        s.step();
    }
    report.check("powers 3^1..3^10 bit patterns", all);
    println!("  note: 3^6 = 729 = 1011011001b (the variant 1011011011b seen in one published table is not 729)");

    // Bin numbers with 2^10 bins for the first 40 iterations.
    let expected_bins = [512u64, 256, 384, 64, 608, 400, 88, 644, 454, 681, 509, 764];
    let mut s = PowerState::new();
    let mut bins = vec![s.bin_index(10)];
    for _ in 1..40 {
        s.step();
        bins.push(s.bin_index(10));
    }
    report.check("bins of iterations 1..12", bins[..12] == expected_bins);
    report.check("bin of iteration 39 is 901", bins[38] == 901);
    report.check("bin of iteration 40 is 328", bins[39] == 328);

    // Fractional-prefix extraction edge cases.
    report.check(
        "prefix of 3^1 at 10 bits is 512",
        LimbValue::from_u64(3).extract_bits(0, 10) == 512,
    );
    report.check(
        "prefix of 3^4 at 10 bits is 64",
        LimbValue::from_u64(81).extract_bits(3, 10) == 64,
    );

    // Statistics spot values.
    let skew = Histogram::from_parts(1, 1, 5, vec![3, 1]).unwrap();
    report.check(
        "tau of counts (3,1) is 1",
        chi_square_stat(&skew).unwrap() == 1.0,
    );

    let equal = Histogram::from_parts(4, 1, 165, vec![41; 16]).unwrap();
    let tau = chi_square_stat(&equal).unwrap();
    let (b_star, _) = bayes_asymptotic_lower_bound(tau, 16).unwrap();
    let posterior = posterior_lower_bound(b_star, 0.5).unwrap();
    report.check(
        "equal counts: tau 0, bound 1, posterior 1/2",
        tau == 0.0 && b_star == 1.0 && posterior == 0.5,
    );

    let (p, _) = chi_square_pvalue(2.0 * (20.0f64).ln(), 2).unwrap();
    report.check(
        "p-value closed form at two degrees of freedom",
        (p - 0.05).abs() < 1e-12,
    );

    let (b, rho) = bayes_asymptotic_lower_bound(2.0, 2).unwrap();
    report.check(
        "asymptotic bound at tau 2, two bins",
        (b - 0.8577638849607068).abs() < 1e-9 && (rho - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12,
    );

    println!(
        "selftest: {}/{} checks passed",
        report.total - report.failed,
        report.total
    );
    report.failed == 0
}
