//! One-off probe of the analysis numbers at the two desk scales.

use pw32::{analyze, run, wilson_hilferty_pvalue, RunConfig, SplitStrategy};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pairs: Vec<(u64, u32)> = if args.len() > 2 {
        vec![(args[1].parse().unwrap(), args[2].parse().unwrap())]
    } else {
        vec![(781_250, 18), (3_125_000, 20)]
    };
    for (n, k) in pairs {
        let mut cfg = RunConfig::new(n, k);
        cfg.workers = 2;
        cfg.split = SplitStrategy::Balanced;
        let t0 = std::time::Instant::now();
        let out = run(&cfg).unwrap();
        let a = analyze(&out.histogram, 0.5, true).unwrap();
        let wh = wilson_hilferty_pvalue(a.tau, a.df).unwrap();
        println!(
            "n={n} k={k} tau={:.3} df={} (tau-df)/sqrt(2df)={:.3} p={:.5} wh={:.5} b*={:.5} bfin={:?} c*={:?} post={:.5} elapsed={:.1?}",
            a.tau,
            a.df,
            (a.tau - a.df as f64) / (2.0 * a.df as f64).sqrt(),
            a.p_value,
            wh,
            a.b_star,
            a.b_finite,
            a.c_star,
            a.posterior_lb,
            t0.elapsed()
        );
    }
}
