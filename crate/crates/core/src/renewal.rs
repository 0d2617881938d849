//! Renewal-process view of a retransmission scheme.
//!
//! Successive messages take i.i.d. times `T_1, T_2, ...`, so the number of
//! messages delivered strictly before block `t`,
//! `N_t = max{k : T_1 + ... + T_k < t}`, is a renewal counting process and the
//! service process is `S_t = R·N_t`. This module estimates the moments of `T`,
//! the effective capacity `-(1/θt)·ln E{e^{-θ R N_t}}` (first-order expansion,
//! Gaussian approximation and direct Monte-Carlo) and the linear growth rates
//! of the first two cumulants of `N_t`.
//!
//! Every estimator takes a `seed`; trial `i` always draws from
//! `RngStream::new(seed, i)` and results are reduced in trial order, so
//! estimates are identical regardless of the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ProtocolError, ProtocolSpec, Scheme, TransmissionSampler};
use crate::rng::{derive_seed, RngStream};
use crate::stats::{self, linear_fit, quantile_sorted, Z95};

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

const BOOTSTRAP_TAG: u64 = 0xB007_5742;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("degenerate estimate: no renewal completed before t = {horizon} in any of {trials} trials; the horizon is too short")]
    Degenerate { horizon: u64, trials: usize },
    #[error("invalid estimator argument: {0}")]
    InvalidArgument(String),
}

/// Sample moments of the inter-renewal time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalStats {
    /// Sample mean of `T` (blocks).
    pub mu1: f64,
    /// Sample second moment `E{T²}` (blocks²).
    pub mu2: f64,
    /// Unbiased sample variance of `T` (blocks²).
    pub sigma2: f64,
    pub n_samples: usize,
    /// 95% half-width for `mu1`.
    pub ci_halfwidth_mu1: f64,
    /// 95% half-width for `sigma2` (normal theory using the fourth moment).
    pub ci_halfwidth_sigma2: f64,
}

impl RenewalStats {
    /// Exact stats of a law known in closed form (zero-width intervals).
    pub fn exact(mu1: f64, sigma2: f64) -> Self {
        RenewalStats {
            mu1,
            mu2: sigma2 + mu1 * mu1,
            sigma2,
            n_samples: 0,
            ci_halfwidth_mu1: 0.0,
            ci_halfwidth_sigma2: 0.0,
        }
    }

    /// Long-run rates of the first two cumulants of `N_t` implied by these
    /// moments, `(1/μ₁, σ²/μ₁³)`, with delta-method 95% half-widths.
    pub fn implied_cumulant_rates(&self) -> ImpliedRates {
        let a1 = 1.0 / self.mu1;
        let a2 = self.sigma2 / self.mu1.powi(3);
        let rel_mu = self.ci_halfwidth_mu1 / self.mu1;
        let rel_sigma2 = if self.sigma2 > 0.0 {
            self.ci_halfwidth_sigma2 / self.sigma2
        } else {
            0.0
        };
        ImpliedRates {
            a1,
            a1_ci_halfwidth: a1 * rel_mu,
            a2,
            a2_ci_halfwidth: a2 * (rel_sigma2.powi(2) + 9.0 * rel_mu.powi(2)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedRates {
    pub a1: f64,
    pub a1_ci_halfwidth: f64,
    pub a2: f64,
    pub a2_ci_halfwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcMethod {
    FirstOrder,
    MonteCarlo,
    GaussianApprox,
    PerfectCsi,
}

/// An effective-capacity value in bits/s/Hz per block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcEstimate {
    pub value: f64,
    pub method: EcMethod,
    pub theta: f64,
    /// 95% half-width; zero for closed forms.
    pub ci_halfwidth: f64,
    pub horizon: Option<u64>,
    pub trials: Option<usize>,
    /// The small-θ expansion went negative and was clamped to zero.
    pub clamped: bool,
}

impl EcEstimate {
    pub fn closed(value: f64, method: EcMethod, theta: f64) -> Self {
        EcEstimate {
            value,
            method,
            theta,
            ci_halfwidth: 0.0,
            horizon: None,
            trials: None,
            clamped: false,
        }
    }
}

/// Empirical growth rates of the mean and variance of `N_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantRates {
    pub a1_hat: f64,
    pub a2_hat: f64,
    pub a1_ci_halfwidth: f64,
    pub a2_ci_halfwidth: f64,
    /// Largest horizon in the regression grid.
    pub horizon: u64,
    /// Grid span is under 10× the longest observed inter-renewal time.
    pub ill_conditioned: bool,
}

/// Draws `trials` transmission times and summarizes them.
///
/// Sums are accumulated in integers, so the result is exact up to the final
/// divisions and independent of scheduling.
pub fn estimate_moments<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    trials: usize,
    seed: u64,
) -> Result<RenewalStats, EstimatorError> {
    if trials < 2 {
        return Err(EstimatorError::InvalidArgument(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    let durations: Vec<u64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            sampler
                .sample(&mut RngStream::new(seed, i))
                .map(|o| o.duration)
        })
        .collect::<Result<_, _>>()?;
    Ok(stats_from_durations(&durations))
}

/// Moments from an explicit sample of durations (at least two).
pub fn stats_from_durations(durations: &[u64]) -> RenewalStats {
    let n = durations.len();
    assert!(n >= 2, "need at least two durations");
    let nf = n as f64;
    let mut s1: u128 = 0;
    let mut s2: u128 = 0;
    for &d in durations {
        s1 += d as u128;
        s2 += (d as u128) * (d as u128);
    }
    let mu1 = s1 as f64 / nf;
    let mu2 = s2 as f64 / nf;
    // n·Σd² - (Σd)² is exact in u128 for any realistic sample.
    let centered = (n as u128) * s2 - s1 * s1;
    let sigma2 = centered as f64 / (nf * (nf - 1.0));
    let m4: f64 = durations
        .iter()
        .map(|&d| (d as f64 - mu1).powi(4))
        .sum::<f64>()
        / nf;
    let var_sigma2 = ((m4 - sigma2 * sigma2) / nf).max(0.0);
    RenewalStats {
        mu1,
        mu2,
        sigma2,
        n_samples: n,
        ci_halfwidth_mu1: Z95 * (sigma2 / nf).sqrt(),
        ci_halfwidth_sigma2: Z95 * var_sigma2.sqrt(),
    }
}

/// Moments of the deadline renewal time `T̂ = n + k·T_u` from single
/// HARQ-IR attempts.
///
/// Each attempt is observed for at most `T_u` blocks. With
/// `q = Pr{T > T_u}` the number of aborted messages is geometric and
/// independent of the successful attempt's length `n ~ T | T ≤ T_u`, so
/// `E{T̂} = E{n} + T_u·q/(1−q)` and `var(T̂) = var(n) + T_u²·q/(1−q)²`.
/// Unlike [`estimate_moments`] this stays cheap when `q` is close to one.
pub fn estimate_moments_deadline(
    spec: &ProtocolSpec,
    attempts: usize,
    seed: u64,
) -> Result<RenewalStats, EstimatorError> {
    let Some(deadline) = spec.deadline() else {
        return estimate_moments(spec, attempts, seed);
    };
    if spec.scheme() != Scheme::HarqIrDeadline {
        return Err(EstimatorError::InvalidArgument(
            "deadline moments need the harq_ir_deadline scheme".into(),
        ));
    }
    if attempts < 2 {
        return Err(EstimatorError::InvalidArgument(format!(
            "need at least 2 attempts, got {attempts}"
        )));
    }
    let single = spec.with_guard(deadline);
    let outcomes: Vec<Option<u64>> = (0..attempts as u64)
        .into_par_iter()
        .map(|i| single.sample_within(&mut RngStream::new(seed, i), deadline))
        .collect::<Result<_, _>>()?;
    let successes: Vec<u64> = outcomes.iter().flatten().copied().collect();
    let ns = successes.len();
    if ns < 2 {
        return Err(EstimatorError::Protocol(ProtocolError::GuardExceeded {
            guard: deadline * attempts as u64,
            rate: spec.rate(),
        }));
    }
    let within = stats_from_durations(&successes);
    let tu = deadline as f64;
    let q = 1.0 - ns as f64 / attempts as f64;
    let odds = q / (1.0 - q);
    let mu1 = within.mu1 + tu * odds;
    let sigma2 = within.sigma2 + tu * tu * q / (1.0 - q).powi(2);
    let var_q = q * (1.0 - q) / attempts as f64;
    let dmu_dq = tu / (1.0 - q).powi(2);
    let dsigma_dq = tu * tu * (1.0 + q) / (1.0 - q).powi(3);
    let se_mu = ((within.ci_halfwidth_mu1 / Z95).powi(2) + dmu_dq.powi(2) * var_q).sqrt();
    let se_sigma = ((within.ci_halfwidth_sigma2 / Z95).powi(2) + dsigma_dq.powi(2) * var_q).sqrt();
    Ok(RenewalStats {
        mu1,
        mu2: sigma2 + mu1 * mu1,
        sigma2,
        n_samples: attempts,
        ci_halfwidth_mu1: Z95 * se_mu,
        ci_halfwidth_sigma2: Z95 * se_sigma,
    })
}

#[derive(Debug, Clone, Copy)]
struct CountTrace {
    count: u64,
    longest: u64,
}

fn count_with_trace<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    horizon: u64,
    rng: &mut RngStream,
) -> Result<CountTrace, ProtocolError> {
    let mut elapsed = 0u64;
    let mut count = 0u64;
    let mut longest = 0u64;
    // A renewal counts only if it completes strictly before `horizon`,
    // i.e. its duration is at most horizon - 1 - elapsed.
    while elapsed + 1 < horizon {
        match sampler.sample_within(rng, horizon - 1 - elapsed)? {
            Some(d) => {
                elapsed += d;
                count += 1;
                longest = longest.max(d);
            }
            None => break,
        }
    }
    Ok(CountTrace { count, longest })
}

/// `N_t`: renewals completed strictly before block `horizon`.
pub fn count_renewals<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    horizon: u64,
    rng: &mut RngStream,
) -> Result<u64, EstimatorError> {
    if horizon < 1 {
        return Err(EstimatorError::InvalidArgument(
            "horizon must be >= 1".into(),
        ));
    }
    Ok(count_with_trace(sampler, horizon, rng)?.count)
}

/// `N_t` for trials `trial_range` of the stream family `seed`, in trial order.
pub fn renewal_counts<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    horizon: u64,
    trial_range: std::ops::Range<u64>,
    seed: u64,
) -> Result<Vec<u64>, EstimatorError> {
    if horizon < 1 {
        return Err(EstimatorError::InvalidArgument(
            "horizon must be >= 1".into(),
        ));
    }
    Ok(trial_range
        .into_par_iter()
        .map(|i| count_with_trace(sampler, horizon, &mut RngStream::new(seed, i)).map(|c| c.count))
        .collect::<Result<_, _>>()?)
}

/// `R/μ₁ − (R²σ²/(2μ₁³))·θ`, clamped at zero.
pub fn ec_first_order(rate: f64, stats: &RenewalStats, theta: f64) -> EcEstimate {
    let raw = rate / stats.mu1 - rate * rate * stats.sigma2 / (2.0 * stats.mu1.powi(3)) * theta;
    EcEstimate {
        value: raw.max(0.0),
        clamped: raw < 0.0,
        ..EcEstimate::closed(raw, EcMethod::FirstOrder, theta)
    }
}

/// Effective capacity under a Gaussian law for `N_t` with mean `t/μ₁` and
/// variance `σ²t/μ₁³`. Algebraically the same expression as the first-order
/// expansion, but exact in θ for that Gaussian; tagged separately.
pub fn ec_gaussian_approx(rate: f64, stats: &RenewalStats, theta: f64) -> EcEstimate {
    EcEstimate {
        method: EcMethod::GaussianApprox,
        ..ec_first_order(rate, stats, theta)
    }
}

/// Monte-Carlo effective capacity `-(1/θt)·ln E{e^{-θ R N_t}}`.
pub fn ec_monte_carlo<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    rate: f64,
    theta: f64,
    horizon: u64,
    trials: usize,
    seed: u64,
) -> Result<EcEstimate, EstimatorError> {
    let counts = renewal_counts(sampler, horizon, 0..trials as u64, seed)?;
    ec_from_counts(rate, theta, horizon, &counts, seed)
}

/// Effective capacity from already simulated counts `N_t`.
///
/// The expectation is taken in the log domain (max-shifted log-sum-exp).
/// The 95% interval is a percentile bootstrap over `BOOTSTRAP_RESAMPLES`
/// resamples drawn from a stream family derived from `seed`.
pub fn ec_from_counts(
    rate: f64,
    theta: f64,
    horizon: u64,
    counts: &[u64],
    seed: u64,
) -> Result<EcEstimate, EstimatorError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(EstimatorError::InvalidArgument(format!(
            "Monte-Carlo effective capacity needs theta > 0, got {theta}"
        )));
    }
    if counts.len() < 2 {
        return Err(EstimatorError::InvalidArgument(
            "need at least 2 trials".into(),
        ));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(EstimatorError::Degenerate {
            horizon,
            trials: counts.len(),
        });
    }
    let scale = theta * horizon as f64;
    let exponents: Vec<f64> = counts.iter().map(|&n| -theta * rate * n as f64).collect();
    let value = -stats::log_mean_exp(&exponents) / scale;

    // Bootstrap on shifted weights: resample means of e^{x - max}.
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|x| (x - shift).exp()).collect();
    let n = weights.len();
    let boot_seed = derive_seed(seed, BOOTSTRAP_TAG);
    let mut replicates: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(boot_seed, b);
            let mut acc = stats::CompensatedSum::new();
            for _ in 0..n {
                acc.add(weights[uniform_index(&mut rng, n)]);
            }
            -(shift + (acc.value() / n as f64).ln()) / scale
        })
        .collect();
    replicates.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&replicates, 0.025);
    let hi = quantile_sorted(&replicates, 0.975);
    Ok(EcEstimate {
        value,
        method: EcMethod::MonteCarlo,
        theta,
        ci_halfwidth: 0.5 * (hi - lo),
        horizon: Some(horizon),
        trials: Some(n),
        clamped: false,
    })
}

#[inline]
fn uniform_index(rng: &mut RngStream, n: usize) -> usize {
    // Lemire's multiply-shift; the bias is below 2^-32 for any n here.
    use rand::RngCore;
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Regresses the sample mean and variance of `N_t` on `t` over `t_grid`.
///
/// Each grid point uses its own stream family, so points are independent and
/// the slope uncertainty follows from the per-point standard errors.
pub fn estimate_cumulant_rates<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    t_grid: &[u64],
    trials: usize,
    seed: u64,
) -> Result<CumulantRates, EstimatorError> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EstimatorError::InvalidArgument(
            "t_grid must be strictly increasing with at least 2 points".into(),
        ));
    }
    if trials < 2 {
        return Err(EstimatorError::InvalidArgument(
            "need at least 2 trials".into(),
        ));
    }
    if t_grid[0] < 1 {
        return Err(EstimatorError::InvalidArgument(
            "horizons must be >= 1".into(),
        ));
    }
    let mut xs = Vec::with_capacity(t_grid.len());
    let mut means = Vec::with_capacity(t_grid.len());
    let mut vars = Vec::with_capacity(t_grid.len());
    let mut mean_se = Vec::with_capacity(t_grid.len());
    let mut var_se = Vec::with_capacity(t_grid.len());
    let mut longest = 0u64;
    for (g, &t) in t_grid.iter().enumerate() {
        let grid_seed = derive_seed(seed, g as u64);
        let traces: Vec<CountTrace> = (0..trials as u64)
            .into_par_iter()
            .map(|i| count_with_trace(sampler, t, &mut RngStream::new(grid_seed, i)))
            .collect::<Result<_, _>>()?;
        longest = longest.max(traces.iter().map(|c| c.longest).max().unwrap_or(0));
        let (m, v, n) = stats::mean_and_variance(traces.iter().map(|c| c.count as f64));
        let m4 = traces
            .iter()
            .map(|c| (c.count as f64 - m).powi(4))
            .sum::<f64>()
            / n as f64;
        xs.push(t as f64);
        means.push(m);
        vars.push(v);
        mean_se.push((v / n as f64).sqrt());
        var_se.push(((m4 - v * v) / n as f64).max(0.0).sqrt());
    }
    let slope_se = |se: &[f64]| {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        xs.iter()
            .zip(se)
            .map(|(x, s)| ((x - mx) * s).powi(2))
            .sum::<f64>()
            .sqrt()
            / sxx
    };
    let fit_mean = linear_fit(&xs, &means).expect("grid has distinct points");
    let fit_var = linear_fit(&xs, &vars).expect("grid has distinct points");
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    Ok(CumulantRates {
        a1_hat: fit_mean.slope,
        a2_hat: fit_var.slope,
        a1_ci_halfwidth: Z95 * slope_se(&mean_se),
        a2_ci_halfwidth: Z95 * slope_se(&var_se),
        horizon: t_grid[t_grid.len() - 1],
        ill_conditioned: span < 10 * longest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingModel, SnrConfig};
    use crate::protocol::TransmissionOutcome;

    fn fixed(
        d: u64,
    ) -> impl Fn(&mut RngStream) -> Result<TransmissionOutcome, ProtocolError> + Sync {
        move |_: &mut RngStream| Ok(TransmissionOutcome::single(d))
    }

    #[test]
    fn moments_of_constant_time() {
        let s = estimate_moments(&fixed(3), 100, 0).unwrap();
        assert_eq!(s.mu1, 3.0);
        assert_eq!(s.sigma2, 0.0);
        assert_eq!(s.mu2, 9.0);
        assert_eq!(s.ci_halfwidth_mu1, 0.0);
    }

    #[test]
    fn moments_reject_single_trial() {
        assert!(estimate_moments(&fixed(3), 1, 0).is_err());
    }

    #[test]
    fn moments_small_rate_limit() {
        let model = FadingModel::rayleigh(1.0).unwrap();
        let snr = SnrConfig::from_db(6.0).unwrap();
        let spec = ProtocolSpec::harq_ir(1e-4, snr, model).unwrap();
        let s = estimate_moments(&spec, 20_000, 1).unwrap();
        assert!(s.mu1 >= 1.0 && s.mu1 < 1.001);
        assert!(s.sigma2 < 1e-3);
    }

    #[test]
    fn strict_counting_boundaries() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(count_renewals(&fixed(1), 100, &mut rng).unwrap(), 99);
        assert_eq!(count_renewals(&fixed(1), 1, &mut rng).unwrap(), 0);
        for d in [2, 3, 5, 7] {
            for t in [d * 10, d * 37] {
                assert_eq!(count_renewals(&fixed(d), t, &mut rng).unwrap(), t / d - 1);
            }
            // Not a multiple: floor(t/d).
            assert_eq!(count_renewals(&fixed(d), d * 10 + 1, &mut rng).unwrap(), 10);
        }
        assert!(count_renewals(&fixed(1), 0, &mut rng).is_err());
    }

    #[test]
    fn first_order_examples() {
        let s = RenewalStats::exact(2.0, 1.0);
        assert!((ec_first_order(2.0, &s, 0.1).value - 0.975).abs() < 1e-15);
        assert_eq!(ec_first_order(2.0, &s, 0.0).value, 1.0);
        let flat = RenewalStats::exact(4.0, 0.0);
        for theta in [0.0, 0.1, 10.0] {
            assert_eq!(ec_first_order(3.0, &flat, theta).value, 0.75);
        }
    }

    #[test]
    fn first_order_clamps() {
        let s = RenewalStats::exact(2.0, 100.0);
        let e = ec_first_order(10.0, &s, 1.0);
        assert_eq!(e.value, 0.0);
        assert!(e.clamped);
        assert!(!ec_first_order(10.0, &s, 0.0).clamped);
    }

    #[test]
    fn gaussian_equals_first_order() {
        let s = RenewalStats::exact(3.3, 1.7);
        for theta in [0.0, 0.01, 0.3] {
            let a = ec_first_order(5.0, &s, theta);
            let b = ec_gaussian_approx(5.0, &s, theta);
            assert_eq!(a.value, b.value);
            assert_eq!(b.method, EcMethod::GaussianApprox);
        }
        assert_eq!(
            ec_gaussian_approx(2.0, &RenewalStats::exact(2.0, 0.0), 0.5).value,
            1.0
        );
    }

    #[test]
    fn monte_carlo_constant_time() {
        let t = 1000;
        let e = ec_monte_carlo(&fixed(1), 1.5, 0.01, t, 50, 0).unwrap();
        let want = 1.5 * (t - 1) as f64 / t as f64;
        assert!((e.value - want).abs() < 1e-12);
        assert_eq!(e.ci_halfwidth, 0.0);
        let e = ec_monte_carlo(&fixed(4), 2.0, 0.05, 40_000, 10, 0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-4);
    }

    #[test]
    fn monte_carlo_degenerate_horizon() {
        let r = ec_monte_carlo(&fixed(50), 1.0, 0.01, 20, 10, 0);
        assert!(matches!(r, Err(EstimatorError::Degenerate { .. })));
        assert!(ec_monte_carlo(&fixed(1), 1.0, 0.0, 20, 10, 0).is_err());
    }

    #[test]
    fn monte_carlo_survives_large_exponents() {
        // θ·R·N_t ≈ 5000 nats: a raw mean of e^{-θRN} would underflow.
        let e = ec_monte_carlo(&fixed(1), 5.0, 1.0, 1001, 10, 0).unwrap();
        assert!((e.value - 5.0 * 1000.0 / 1001.0).abs() < 1e-9);
    }

    #[test]
    fn split_and_merged_counts_are_identical() {
        let model = FadingModel::rayleigh(1.0).unwrap();
        let snr = SnrConfig::from_db(6.0).unwrap();
        let spec = ProtocolSpec::harq_ir(4.0, snr, model).unwrap();
        let full = renewal_counts(&spec, 500, 0..200, 7).unwrap();
        let mut merged = renewal_counts(&spec, 500, 0..100, 7).unwrap();
        merged.extend(renewal_counts(&spec, 500, 100..200, 7).unwrap());
        assert_eq!(full, merged);
        let a = ec_from_counts(4.0, 0.05, 500, &full, 7).unwrap();
        let b = ec_from_counts(4.0, 0.05, 500, &merged, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cumulant_rates_constant_time() {
        let r = estimate_cumulant_rates(&fixed(4), &[400, 800, 1200, 1600], 20, 0).unwrap();
        assert!((r.a1_hat - 0.25).abs() < 1e-12);
        assert!(r.a2_hat.abs() < 1e-12);
        assert!(!r.ill_conditioned);
        let r = estimate_cumulant_rates(&fixed(4), &[40, 50], 20, 0).unwrap();
        assert!(r.ill_conditioned);
        assert!(estimate_cumulant_rates(&fixed(4), &[50, 40], 20, 0).is_err());
        assert!(estimate_cumulant_rates(&fixed(4), &[50], 20, 0).is_err());
    }

    #[test]
    fn deadline_moments_match_direct_sampling() {
        let model = FadingModel::rayleigh(1.0).unwrap();
        let snr = SnrConfig::from_db(6.0).unwrap();
        let spec = ProtocolSpec::harq_ir_deadline(5.0, snr, model, Some(3)).unwrap();
        let direct = estimate_moments(&spec, 100_000, 1).unwrap();
        let split = estimate_moments_deadline(&spec, 100_000, 2).unwrap();
        let tol_mu = direct.ci_halfwidth_mu1 + split.ci_halfwidth_mu1;
        assert!((direct.mu1 - split.mu1).abs() < 1.5 * tol_mu);
        let tol_s = direct.ci_halfwidth_sigma2 + split.ci_halfwidth_sigma2;
        assert!((direct.sigma2 - split.sigma2).abs() < 1.5 * tol_s);
    }

    #[test]
    fn deadline_moments_hopeless_rate() {
        let model = FadingModel::rayleigh(1.0).unwrap();
        let snr = SnrConfig::from_db(6.0).unwrap();
        let spec = ProtocolSpec::harq_ir_deadline(40.0, snr, model, Some(2)).unwrap();
        assert!(estimate_moments_deadline(&spec, 1000, 1).is_err());
    }
}
