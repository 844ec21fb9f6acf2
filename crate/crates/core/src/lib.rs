//! Exact generation and statistical analysis of the binary fractional parts
//! of (3/2)^n.
//!
//! Powers of three are built by shift-and-add over 63-bit limbs; placing the
//! radix point j positions from the right reads 3^j as (3/2)^j, so the top
//! fractional bits index a histogram bin directly with no rounding anywhere.
//! On top of the stream sit a chi-squared uniformity test that stays usable
//! at millions of degrees of freedom, Bayes-factor lower bounds over the
//! symmetric Dirichlet class, and monitors for the near-0/near-1 inequality
//! band and the running extremes of the fractional parts.
//!
//! Work is split across workers by seeding each segment with its own power
//! of three; the `parallel` feature (on by default) runs segments on rayon,
//! and the sequential path is always available.

pub mod histogram;
pub mod limb;
pub mod orchestrator;
pub mod power;
pub mod stats;

pub use histogram::{Histogram, HistogramError};
pub use limb::LimbValue;
pub use orchestrator::{
    analyze, plan_segments, resume_segment, run, run_segment, seed, Analysis, OrchestratorError,
    RunConfig, RunOutput, Segment, SegmentResult, SegmentRunner, SplitStrategy,
};
pub use power::{
    waring_screen, ExtremesRecord, PowerState, WaringCandidate, WaringConfirmation, WaringSide,
};
pub use stats::{
    bayes_asymptotic_lower_bound, bayes_finite_lower_bound, chi_square_pvalue, chi_square_stat,
    chi_square_test, posterior_lower_bound, wilson_hilferty_pvalue, BayesResult, ChiSquareResult,
    PValueMethod, StatsError,
};
