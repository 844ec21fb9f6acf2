//! Splits the exponent range across workers, seeds each with a power of 3,
//! runs the segments (in parallel when the `parallel` feature is enabled),
//! merges the per-worker histograms and monitors, and produces the final
//! analysis bundle.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::{Histogram, HistogramError};
use crate::limb::LimbValue;
use crate::power::{waring_screen, ExtremesRecord, PowerState, WaringCandidate};
use crate::stats::{
    bayes_test, chi_square_test, PValueMethod, StatsError,
};

pub mod checkpoint;

use checkpoint::{encode_parts, write_atomic, Checkpoint, CheckpointError};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the exponent range is carved into worker segments.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum SplitStrategy {
    /// Equal-length contiguous segments.
    #[default]
    Even,
    /// Boundaries chosen so each segment does roughly the same bit work.
    /// Step j costs Theta(j), so a segment [a, b) costs ~ (b^2 - a^2)/2 and
    /// the balanced boundaries follow a square-root profile.
    Balanced,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Last exponent to bin; the run covers exponents 1..=n_total.
    pub n_total: u64,
    /// Bins-log2: the histogram has 2^k bins.
    pub k: u32,
    pub workers: usize,
    pub checkpoint_interval: u64,
    pub psi0: f64,
    pub split: SplitStrategy,
    /// Per-worker checkpoints land here when set.
    pub checkpoint_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(n_total: u64, k: u32) -> Self {
        RunConfig {
            n_total,
            k,
            workers: 1,
            checkpoint_interval: 1_000_000,
            psi0: 0.5,
            split: SplitStrategy::Even,
            checkpoint_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.n_total < 1 {
            return Err(OrchestratorError::Config("n must be at least 1".into()));
        }
        if !(1..=63).contains(&self.k) {
            return Err(OrchestratorError::Config(format!(
                "bins-log2 {} outside 1..=63",
                self.k
            )));
        }
        if self.workers < 1 {
            return Err(OrchestratorError::Config("workers must be at least 1".into()));
        }
        if self.checkpoint_interval < 1 {
            return Err(OrchestratorError::Config(
                "checkpoint interval must be at least 1".into(),
            ));
        }
        if !(self.psi0 > 0.0 && self.psi0 < 1.0) {
            return Err(OrchestratorError::Config(format!(
                "psi0 {} outside (0, 1)",
                self.psi0
            )));
        }
        Ok(())
    }
}

/// A half-open exponent range [j_start, j_end) owned by one worker.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Segment {
    pub j_start: u64,
    pub j_end: u64,
}

/// Carves [1, n_total+1) into at most `workers` non-empty contiguous
/// segments.
pub fn plan_segments(n_total: u64, workers: usize, split: SplitStrategy) -> Vec<Segment> {
    assert!(n_total >= 1 && workers >= 1);
    let w = (workers as u64).min(n_total);
    let lo = 1u64;
    let hi = n_total + 1;
    let mut bounds = Vec::with_capacity(w as usize + 1);
    bounds.push(lo);
    for i in 1..w {
        let raw = match split {
            SplitStrategy::Even => lo + ((hi - lo) as u128 * i as u128 / w as u128) as u64,
            SplitStrategy::Balanced => {
                let lo2 = (lo as f64) * (lo as f64);
                let hi2 = (hi as f64) * (hi as f64);
                (lo2 + (hi2 - lo2) * (i as f64) / (w as f64)).sqrt().round() as u64
            }
        };
        // Keep every segment non-empty and leave room for the rest.
        let prev = *bounds.last().unwrap();
        bounds.push(raw.clamp(prev + 1, hi - (w - i)));
    }
    bounds.push(hi);
    bounds
        .windows(2)
        .map(|pair| Segment {
            j_start: pair[0],
            j_end: pair[1],
        })
        .collect()
}

/// The union of the segments must be exactly [1, n_total + 1) with no
/// overlap; anything else is a planner bug, so this aborts.
pub fn verify_coverage(segments: &[Segment], n_total: u64) {
    assert!(!segments.is_empty(), "no segments planned");
    assert_eq!(segments[0].j_start, 1, "coverage must start at exponent 1");
    for pair in segments.windows(2) {
        assert_eq!(
            pair[0].j_end, pair[1].j_start,
            "segments must be contiguous"
        );
    }
    for seg in segments {
        assert!(seg.j_start < seg.j_end, "empty segment {seg:?}");
    }
    assert_eq!(
        segments.last().unwrap().j_end,
        n_total + 1,
        "coverage must end at n_total + 1"
    );
}

/// 3^j by binary exponentiation.
pub fn seed(j: u64) -> PowerState {
    assert!(j >= 1, "exponent must be at least 1");
    let mut acc = LimbValue::one();
    let mut base = LimbValue::from_u64(3);
    let mut e = j;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    PowerState::from_parts(acc, j).expect("3^j is always a valid power state")
}

/// Everything one worker produces for its segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentResult {
    pub histogram: Histogram,
    pub extremes: ExtremesRecord,
    pub waring: Vec<WaringCandidate>,
}

/// Steps one segment of the stream, recording bins and monitors. The seed
/// exponent is binned on construction; each `advance` step bins the next
/// exponent, up to but excluding `j_end`.
pub struct SegmentRunner {
    state: PowerState,
    histogram: Histogram,
    extremes: ExtremesRecord,
    waring: Vec<WaringCandidate>,
    j_end: u64,
}

impl SegmentRunner {
    pub fn new(k: u32, segment: Segment) -> Result<Self, OrchestratorError> {
        if segment.j_start < 1 || segment.j_start >= segment.j_end {
            return Err(OrchestratorError::Config(format!(
                "segment [{}, {}) is not a valid range",
                segment.j_start, segment.j_end
            )));
        }
        let state = seed(segment.j_start);
        let histogram = Histogram::new(k, segment.j_start, segment.j_end)?;
        let mut runner = SegmentRunner {
            state,
            histogram,
            extremes: ExtremesRecord::new(),
            waring: Vec::new(),
            j_end: segment.j_end,
        };
        runner.observe();
        Ok(runner)
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, OrchestratorError> {
        let state = PowerState::from_parts(ck.value, ck.exponent).ok_or_else(|| {
            OrchestratorError::Checkpoint(CheckpointError::Corrupt(
                "checkpoint state rejected".into(),
            ))
        })?;
        Ok(SegmentRunner {
            state,
            histogram: ck.histogram,
            extremes: ck.extremes,
            waring: ck.waring,
            j_end: ck.j_end,
        })
    }

    fn observe(&mut self) {
        self.histogram.record(self.state.bin_index(self.histogram.k()));
        self.extremes.update(&self.state);
        if let Some(candidate) = waring_screen(&self.state) {
            self.waring.push(candidate);
        }
    }

    /// Takes up to `max_steps` steps; returns how many were taken (fewer
    /// only when the segment completes).
    pub fn advance(&mut self, max_steps: u64) -> u64 {
        let mut taken = 0;
        while taken < max_steps && !self.is_complete() {
            self.state.step();
            self.observe();
            taken += 1;
        }
        taken
    }

    /// True once every exponent in [j_start, j_end) has been binned.
    pub fn is_complete(&self) -> bool {
        self.state.exponent() + 1 >= self.j_end
    }

    /// Last exponent already binned.
    pub fn exponent(&self) -> u64 {
        self.state.exponent()
    }

    /// Owned snapshot of the current progress.
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            k: self.histogram.k(),
            exponent: self.state.exponent(),
            j_end: self.j_end,
            value: self.state.value().clone(),
            histogram: self.histogram.clone(),
            extremes: self.extremes,
            waring: self.waring.clone(),
        }
    }

    /// Encodes and atomically replaces the checkpoint file at `path`.
    pub fn write_checkpoint(&self, path: &Path) -> Result<(), CheckpointError> {
        let bytes = encode_parts(
            self.histogram.k(),
            self.state.exponent(),
            self.j_end,
            self.state.value(),
            self.histogram.total(),
            self.histogram.counts(),
            &self.extremes,
            &self.waring,
        );
        write_atomic(path, &bytes)
    }

    /// Final results; the segment must be complete.
    pub fn into_result(self) -> SegmentResult {
        assert!(
            self.is_complete(),
            "segment [{}, {}) abandoned at exponent {}",
            self.histogram.range().0,
            self.j_end,
            self.state.exponent()
        );
        SegmentResult {
            histogram: self.histogram,
            extremes: self.extremes,
            waring: self.waring,
        }
    }
}

/// Runs one segment to completion, writing a checkpoint every
/// `checkpoint_interval` binned exponents (and once at the end) when a path
/// is given.
pub fn run_segment(
    k: u32,
    segment: Segment,
    checkpoint_interval: u64,
    checkpoint_path: Option<&Path>,
) -> Result<SegmentResult, OrchestratorError> {
    assert!(checkpoint_interval >= 1);
    let runner = SegmentRunner::new(k, segment)?;
    drive(runner, checkpoint_interval, checkpoint_path)
}

/// Continues a checkpointed segment to completion, refreshing the same
/// checkpoint file. The final output is bit-identical to an uninterrupted
/// run of the segment.
pub fn resume_segment(
    checkpoint_path: &Path,
    checkpoint_interval: u64,
) -> Result<SegmentResult, OrchestratorError> {
    assert!(checkpoint_interval >= 1);
    let ck = Checkpoint::read(checkpoint_path)?;
    let runner = SegmentRunner::from_checkpoint(ck)?;
    drive(runner, checkpoint_interval, Some(checkpoint_path))
}

fn drive(
    mut runner: SegmentRunner,
    checkpoint_interval: u64,
    checkpoint_path: Option<&Path>,
) -> Result<SegmentResult, OrchestratorError> {
    loop {
        runner.advance(checkpoint_interval);
        if let Some(path) = checkpoint_path {
            runner.write_checkpoint(path)?;
        }
        if runner.is_complete() {
            return Ok(runner.into_result());
        }
    }
}

/// Merged output of a full run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub histogram: Histogram,
    pub extremes: ExtremesRecord,
    pub waring: Vec<WaringCandidate>,
    pub segments: Vec<Segment>,
    pub elapsed: Duration,
}

/// Runs the whole range [1, n_total] according to the configuration and
/// merges the per-segment results in order. With the `parallel` feature and
/// more than one worker the segments run on the rayon pool; the merged
/// output is identical either way.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, OrchestratorError> {
    cfg.validate()?;
    let segments = plan_segments(cfg.n_total, cfg.workers, cfg.split);
    verify_coverage(&segments, cfg.n_total);
    if let Some(dir) = &cfg.checkpoint_dir {
        fs::create_dir_all(dir)?;
    }
    let started = Instant::now();
    let results = execute_segments(cfg, &segments)?;
    let elapsed = started.elapsed();

    let mut results = results.into_iter();
    let first = results.next().expect("at least one segment");
    let mut histogram = first.histogram;
    let mut extremes = first.extremes;
    let mut waring = first.waring;
    for res in results {
        histogram = histogram.merge(&res.histogram)?;
        extremes.absorb(&res.extremes);
        waring.extend(res.waring);
    }
    Ok(RunOutput {
        histogram,
        extremes,
        waring,
        segments,
        elapsed,
    })
}

pub fn worker_checkpoint_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("worker_{index:03}.ckpt"))
}

fn execute_segments(
    cfg: &RunConfig,
    segments: &[Segment],
) -> Result<Vec<SegmentResult>, OrchestratorError> {
    let job = |(index, segment): (usize, &Segment)| {
        let path = cfg
            .checkpoint_dir
            .as_ref()
            .map(|dir| worker_checkpoint_path(dir, index));
        run_segment(cfg.k, *segment, cfg.checkpoint_interval, path.as_deref())
    };
    #[cfg(feature = "parallel")]
    if cfg.workers > 1 {
        use rayon::prelude::*;
        return segments.par_iter().enumerate().map(job).collect();
    }
    segments.iter().enumerate().map(job).collect()
}

/// Full analysis bundle for a merged histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub n: u64,
    pub r: u64,
    pub tau: f64,
    pub df: u64,
    pub p_value: f64,
    pub method: PValueMethod,
    pub b_star: f64,
    pub rho_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_finite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    pub posterior_lb: f64,
    pub psi0: f64,
}

/// Runs the chi-squared test and the Bayes bounds over a histogram. The
/// posterior lower bound uses the finite-n Bayes bound when requested (it is
/// the exact bound), else the asymptotic one.
pub fn analyze(h: &Histogram, psi0: f64, include_finite: bool) -> Result<Analysis, StatsError> {
    let chi = chi_square_test(h)?;
    let bayes = bayes_test(h, psi0, include_finite)?;
    Ok(Analysis {
        n: h.total(),
        r: h.bins(),
        tau: chi.tau,
        df: chi.df,
        p_value: chi.p_value,
        method: chi.method,
        b_star: bayes.b_star,
        rho_star: bayes.rho_star,
        b_finite: bayes.b_finite,
        c_star: bayes.c_star,
        posterior_lb: bayes.posterior_lb,
        psi0: bayes.psi0,
    })
}

impl Analysis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_matches_streaming() {
        assert_eq!(seed(1).value().to_u128(), Some(3));
        assert_eq!(seed(10).value().to_u128(), Some(59_049));
        assert_eq!(format!("{:b}", seed(10).value()), "1110011010101001");
        assert_eq!(seed(13).value().to_u128(), Some(1_594_323));
        let mut s = PowerState::new();
        for _ in 1..300 {
            s.step();
        }
        assert_eq!(seed(300), s);
    }

    #[test]
    fn plan_even_segments_cover_range() {
        let segs = plan_segments(100, 7, SplitStrategy::Even);
        verify_coverage(&segs, 100);
        assert_eq!(segs.len(), 7);
        let segs = plan_segments(5, 16, SplitStrategy::Even);
        verify_coverage(&segs, 5);
        assert_eq!(segs.len(), 5); // capped at one exponent per worker
    }

    #[test]
    fn plan_balanced_segments_cover_range_and_shrink() {
        let segs = plan_segments(10_000, 4, SplitStrategy::Balanced);
        verify_coverage(&segs, 10_000);
        // later segments should be shorter: equal quadratic work
        let lens: Vec<u64> = segs.iter().map(|s| s.j_end - s.j_start).collect();
        assert!(lens.windows(2).all(|w| w[0] >= w[1]), "{lens:?}");
        // first boundary near n/2 (sqrt(1/4) profile)
        assert!((segs[0].j_end as i64 - 5_000).unsigned_abs() < 100);
    }

    #[test]
    fn single_exponent_segment() {
        let res = run_segment(
            10,
            Segment { j_start: 1, j_end: 2 },
            1_000,
            None,
        )
        .unwrap();
        assert_eq!(res.histogram.total(), 1);
        assert_eq!(res.histogram.counts()[512], 1);
    }

    #[test]
    fn segment_split_matches_full_run() {
        let full = run_segment(10, Segment { j_start: 1, j_end: 41 }, 1 << 20, None).unwrap();
        let left = run_segment(10, Segment { j_start: 1, j_end: 21 }, 1 << 20, None).unwrap();
        let right = run_segment(10, Segment { j_start: 21, j_end: 41 }, 1 << 20, None).unwrap();
        let merged = left.histogram.merge(&right.histogram).unwrap();
        assert_eq!(merged, full.histogram);
        let mut extremes = left.extremes;
        extremes.absorb(&right.extremes);
        assert_eq!(extremes, full.extremes);
    }

    #[test]
    fn run_merges_workers_deterministically() {
        let mut cfg = RunConfig::new(500, 12);
        let solo = run(&cfg).unwrap();
        cfg.workers = 3;
        let trio = run(&cfg).unwrap();
        assert_eq!(solo.histogram, trio.histogram);
        assert_eq!(solo.extremes, trio.extremes);
        assert_eq!(solo.waring, trio.waring);
        cfg.split = SplitStrategy::Balanced;
        let balanced = run(&cfg).unwrap();
        assert_eq!(solo.histogram, balanced.histogram);
    }

    #[test]
    fn checkpoint_resume_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("worker.ckpt");
        let seg = Segment { j_start: 1, j_end: 1_000 };

        let straight = run_segment(8, seg, 1 << 20, None).unwrap();

        // Simulate a kill at exponent ~500: run halfway, checkpoint, drop.
        let mut runner = SegmentRunner::new(8, seg).unwrap();
        runner.advance(499);
        assert_eq!(runner.exponent(), 500);
        runner.write_checkpoint(&path).unwrap();
        drop(runner);

        let resumed = resume_segment(&path, 100).unwrap();
        assert_eq!(resumed.histogram, straight.histogram);
        assert_eq!(resumed.extremes, straight.extremes);
        assert_eq!(resumed.waring, straight.waring);

        // The refreshed checkpoint on disk is the completed segment.
        let final_ck = Checkpoint::read(&path).unwrap();
        assert_eq!(final_ck.exponent, 999);
        assert_eq!(final_ck.histogram, straight.histogram);
    }

    #[test]
    fn resume_rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("worker.ckpt");
        let mut runner = SegmentRunner::new(6, Segment { j_start: 1, j_end: 50 }).unwrap();
        runner.advance(10);
        runner.write_checkpoint(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(resume_segment(&path, 10).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(0, 10).validate().is_err());
        assert!(RunConfig::new(10, 0).validate().is_err());
        assert!(RunConfig::new(10, 64).validate().is_err());
        let mut cfg = RunConfig::new(10, 10);
        cfg.psi0 = 1.0;
        assert!(cfg.validate().is_err());
        cfg.psi0 = 0.5;
        cfg.checkpoint_interval = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn analyze_equal_counts() {
        let h = Histogram::from_parts(3, 1, 81, vec![10; 8]).unwrap();
        let a = analyze(&h, 0.5, false).unwrap();
        assert_eq!(a.tau, 0.0);
        assert_eq!(a.b_star, 1.0);
        assert_eq!(a.posterior_lb, 0.5);
        assert!((a.p_value - 1.0).abs() < 1e-12);
        assert_eq!(a.df, 7);
        assert_eq!(a.n, 80);
        assert_eq!(a.r, 8);
    }

    #[test]
    fn analysis_json_round_trip() {
        let h = Histogram::from_parts(2, 1, 9, vec![3, 2, 2, 1]).unwrap();
        let a = analyze(&h, 0.5, true).unwrap();
        let js = a.to_json();
        assert_eq!(Analysis::from_json(&js).unwrap(), a);
        assert!(js.contains("\"method\": \"exact-gamma\""));
    }
}
