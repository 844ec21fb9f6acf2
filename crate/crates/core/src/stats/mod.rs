//! Uniformity testing for binned counts: the chi-squared statistic with
//! p-values usable at extreme degrees of freedom, and Bayes-factor lower
//! bounds over the symmetric Dirichlet prior class with their posterior
//! probability bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::Histogram;

mod golden;
pub mod special;

use golden::golden_section_min;
use special::{ln_gamma_ratio, reg_gamma_upper, std_normal_upper, SpecialError};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("histogram has no observations")]
    EmptyHistogram,
    #[error("tau must be nonnegative, got {0}")]
    NegativeTau(f64),
    #[error("degrees of freedom must be at least 1")]
    BadDegreesOfFreedom,
    #[error("bin count must be at least 2")]
    TooFewBins,
    #[error("psi0 must lie strictly inside (0, 1), got {0}")]
    BadPrior(f64),
    #[error("Bayes factor bound must be nonnegative, got {0}")]
    NegativeBayesFactor(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// How a p-value was computed.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    ExactGamma,
    WilsonHilferty,
}

/// Chi-squared test outcome.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub tau: f64,
    pub df: u64,
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Bayes-factor lower bounds and the induced posterior lower bound for the
/// uniformity hypothesis.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct BayesResult {
    /// Large-n closed-form lower bound, in (0, 1].
    pub b_star: f64,
    /// Minimizer of the closed form.
    pub rho_star: f64,
    /// Exact finite-n infimum over the symmetric Dirichlet class, when
    /// computed.
    pub b_finite: Option<f64>,
    /// Location of the finite-n infimum.
    pub c_star: Option<f64>,
    /// Posterior lower bound b / (psi-odds + b) for the selected bound b
    /// (the finite-n bound when present, else the asymptotic one).
    pub posterior_lb: f64,
    pub psi0: f64,
}

/// tau = (r/n) * sum(x_i^2) - n, accumulated exactly in 128-bit integers
/// with a single floating division at the end.
pub fn chi_square_stat(h: &Histogram) -> Result<f64, StatsError> {
    let n = h.total();
    if n == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let sum_sq: u128 = h.counts().iter().map(|&c| (c as u128) * (c as u128)).sum();
    let r = h.bins() as u128;
    // Cauchy-Schwarz gives r * sum(x^2) >= n^2, so the numerator is exact
    // and nonnegative in integers.
    let numerator = r * sum_sq - (n as u128) * (n as u128);
    Ok(numerator as f64 / n as f64)
}

/// Degrees of freedom above which the cube-root normal approximation
/// replaces the exact regularized-gamma evaluation.
pub const WILSON_HILFERTY_DF_CUTOFF: u64 = 1_000_000;

/// P(chi2_df > tau). Exact via Q(df/2, tau/2) up to the cutoff; above it the
/// Wilson-Hilferty transform, whose absolute error is O(1/df), far below any
/// rejection threshold in use there.
pub fn chi_square_pvalue(tau: f64, df: u64) -> Result<(f64, PValueMethod), StatsError> {
    if tau.is_nan() || tau < 0.0 {
        return Err(StatsError::NegativeTau(tau));
    }
    if df < 1 {
        return Err(StatsError::BadDegreesOfFreedom);
    }
    if df <= WILSON_HILFERTY_DF_CUTOFF {
        let p = reg_gamma_upper(df as f64 / 2.0, tau / 2.0)?;
        Ok((p, PValueMethod::ExactGamma))
    } else {
        Ok((
            wilson_hilferty_pvalue(tau, df)?,
            PValueMethod::WilsonHilferty,
        ))
    }
}

/// The cube-root normal approximation on its own: (X/nu)^(1/3) is
/// approximately normal with mean 1 - 2/(9 nu) and variance 2/(9 nu).
/// Exposed so the approximation can be cross-checked against the exact
/// route at any degrees of freedom.
pub fn wilson_hilferty_pvalue(tau: f64, df: u64) -> Result<f64, StatsError> {
    if tau.is_nan() || tau < 0.0 {
        return Err(StatsError::NegativeTau(tau));
    }
    if df < 1 {
        return Err(StatsError::BadDegreesOfFreedom);
    }
    let nu = df as f64;
    let c = 2.0 / (9.0 * nu);
    let z = ((tau / nu).cbrt() - (1.0 - c)) / c.sqrt();
    Ok(std_normal_upper(z)?)
}

/// Convenience wrapper: statistic, degrees of freedom and p-value in one go.
pub fn chi_square_test(h: &Histogram) -> Result<ChiSquareResult, StatsError> {
    let tau = chi_square_stat(h)?;
    let df = h.bins() - 1;
    let (p_value, method) = chi_square_pvalue(tau, df)?;
    Ok(ChiSquareResult {
        tau,
        df,
        p_value,
        method,
    })
}

/// Closed-form infimum over rho in (0,1) of rho^(1-r) exp(-(1-rho^2) tau / 2).
/// For tau <= r - 1 the infimum is approached at rho -> 1 and equals 1;
/// otherwise it is attained at rho* = sqrt((r-1)/tau). Returns
/// (b_star, rho_star).
pub fn bayes_asymptotic_lower_bound(tau: f64, r: u64) -> Result<(f64, f64), StatsError> {
    if tau.is_nan() || tau < 0.0 {
        return Err(StatsError::NegativeTau(tau));
    }
    if r < 2 {
        return Err(StatsError::TooFewBins);
    }
    let rm1 = (r - 1) as f64;
    if tau <= rm1 {
        return Ok((1.0, 1.0));
    }
    let rho_star = (rm1 / tau).sqrt();
    let log_b = 0.5 * rm1 * (tau / rm1).ln() - 0.5 * (tau - rm1);
    Ok((log_b.exp(), rho_star))
}

/// Exact finite-n lower bound over the symmetric Dirichlet class:
///
///   inf over c > 0 of
///   Gamma(c+n) Gamma(c/r)^r (1/r)^n / (Gamma(c) prod_i Gamma(x_i + c/r))
///
/// evaluated in log space as
///
///   [ln Gamma(c+n) - ln Gamma(c)] - n ln r
///   - sum_i [ln Gamma(x_i + c/r) - ln Gamma(c/r)]
///
/// so the huge log-gammas never meet head-on. Bins are grouped by count
/// value, and empty bins contribute nothing, so each candidate c costs one
/// log-gamma ratio per distinct nonzero count rather than one per bin. The
/// infimum is located by golden-section search in log c over [1e-3, 1e12]
/// with tolerance 1e-6 in log c. Returns (b_finite, c_star).
pub fn bayes_finite_lower_bound(h: &Histogram) -> Result<(f64, f64), StatsError> {
    let n = h.total();
    if n == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let r = h.bins() as f64;
    let nf = n as f64;
    let ln_r = r.ln();

    let mut multiplicity: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in h.counts() {
        if c > 0 {
            *multiplicity.entry(c).or_insert(0) += 1;
        }
    }

    let log_bg = |ln_c: f64| -> f64 {
        let c = ln_c.exp();
        let c_over_r = c / r;
        let mut acc = ln_gamma_ratio(c, nf) - nf * ln_r;
        for (&count, &m) in &multiplicity {
            acc -= m as f64 * ln_gamma_ratio(c_over_r, count as f64);
        }
        acc
    };

    let (ln_c_star, log_b) = golden_section_min(log_bg, (1e-3f64).ln(), (1e12f64).ln(), 1e-6);
    Ok((log_b.exp(), ln_c_star.exp()))
}

/// P(H0 | x) >= (1 + ((1 - psi0)/psi0) / b)^(-1); for psi0 = 1/2 this is
/// b / (1 + b).
pub fn posterior_lower_bound(b: f64, psi0: f64) -> Result<f64, StatsError> {
    if !(psi0 > 0.0 && psi0 < 1.0) {
        return Err(StatsError::BadPrior(psi0));
    }
    if b.is_nan() || b < 0.0 {
        return Err(StatsError::NegativeBayesFactor(b));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    if b.is_infinite() {
        return Ok(1.0);
    }
    let odds = (1.0 - psi0) / psi0;
    Ok(b / (odds + b))
}

/// Full Bayesian summary for a histogram.
pub fn bayes_test(
    h: &Histogram,
    psi0: f64,
    include_finite: bool,
) -> Result<BayesResult, StatsError> {
    let tau = chi_square_stat(h)?;
    let (b_star, rho_star) = bayes_asymptotic_lower_bound(tau, h.bins())?;
    let (b_finite, c_star) = if include_finite {
        let (b, c) = bayes_finite_lower_bound(h)?;
        (Some(b), Some(c))
    } else {
        (None, None)
    };
    let selected = b_finite.unwrap_or(b_star);
    let posterior_lb = posterior_lower_bound(selected, psi0)?;
    Ok(BayesResult {
        b_star,
        rho_star,
        b_finite,
        c_star,
        posterior_lb,
        psi0,
    })
}
