//! Reference curves and end-to-end QoS validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    ergodic_capacity, instantaneous_capacity, ChannelError, FadingModel, SnrConfig,
};
use crate::protocol::{ProtocolError, TransmissionSampler};
use crate::renewal::{EcEstimate, EcMethod, RenewalStats};
use crate::rng::RngStream;
use crate::stats::linear_fit;

/// Fraction of each queue trace discarded before sampling.
pub const WARM_UP_FRACTION: f64 = 0.2;
/// Minimum exceedance count for a threshold to enter the tail fit.
pub const MIN_TAIL_HITS: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Throughput without QoS constraints, `R/μ₁`.
pub fn throughput_zero_qos(rate: f64, mu1: f64) -> f64 {
    rate / mu1
}

/// Effective capacity with perfect CSI at the transmitter, which sends
/// `C = log2(1 + snr·z)` bits in every block:
/// `-(1/θ)·ln E{e^{-θC}}`.
pub fn ec_perfect_csi(
    model: &FadingModel,
    snr: SnrConfig,
    theta: f64,
) -> Result<EcEstimate, AnalysisError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!(
            "theta must be > 0, got {theta}"
        )));
    }
    // Factor out e^{-θ·c0} for the smallest capacity c0 in the support so
    // large θ cannot underflow, and use expm1 to keep precision as θ → 0.
    let c0 = instantaneous_capacity(support_floor(model), snr);
    let shifted =
        model.expectation(|z| (-theta * (instantaneous_capacity(z, snr) - c0)).exp_m1())?;
    let value = c0 - shifted.ln_1p() / theta;
    Ok(EcEstimate::closed(value, EcMethod::PerfectCsi, theta))
}

/// Smallest gain carrying positive probability.
fn support_floor(model: &FadingModel) -> f64 {
    match *model {
        FadingModel::Rayleigh { .. } => 0.0,
        FadingModel::Deterministic { gain } => gain,
        FadingModel::TwoPoint {
            gain_a,
            gain_b,
            prob_a,
        } => {
            if prob_a <= 0.0 {
                gain_b
            } else if prob_a >= 1.0 {
                gain_a
            } else {
                gain_a.min(gain_b)
            }
        }
    }
}

/// `var(log2(1 + snr·z))`, computed as the centered second moment.
pub fn capacity_variance(model: &FadingModel, snr: SnrConfig) -> Result<f64, AnalysisError> {
    let mean = ergodic_capacity(model, snr)?;
    Ok(model.expectation(|z| (instantaneous_capacity(z, snr) - mean).powi(2))?)
}

/// First-order expansion of [`ec_perfect_csi`]: `E{C} − var(C)·θ/2`.
pub fn ec_perfect_csi_expansion(
    model: &FadingModel,
    snr: SnrConfig,
    theta: f64,
) -> Result<EcEstimate, AnalysisError> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!(
            "theta must be >= 0, got {theta}"
        )));
    }
    let mean = ergodic_capacity(model, snr)?;
    let value = if theta == 0.0 {
        mean
    } else {
        mean - capacity_variance(model, snr)? * theta / 2.0
    };
    Ok(EcEstimate::closed(value, EcMethod::PerfectCsi, theta))
}

/// `R²σ²/μ₁³`, which tends to `var(C)` as the rate grows.
pub fn variance_ratio(rate: f64, stats: &RenewalStats) -> f64 {
    rate * rate * stats.sigma2 / stats.mu1.powi(3)
}

/// Stationary buffer-overflow statistics from a simulated queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueTrace {
    /// Bits arriving per block.
    pub arrival_rate: f64,
    pub tau_grid: Vec<f64>,
    /// `Pr{Q ≥ τ}` per threshold.
    pub overflow_prob: Vec<f64>,
    /// Post-warm-up samples with `Q ≥ τ`, per threshold.
    pub hits: Vec<u64>,
    /// Total post-warm-up samples.
    pub samples: u64,
    /// Decay exponent fitted on `ln Pr{Q ≥ τ}` (1/bits).
    pub theta_hat: f64,
    pub r_squared: f64,
    /// Thresholds that entered the fit.
    pub fit_points: usize,
    /// Mean inter-renewal time observed during the simulation.
    pub mu1_hat: f64,
    /// Arrival rate at or above the service rate `R/μ̂₁`.
    pub unstable: bool,
    /// Fewer than two thresholds had enough exceedances to fit.
    pub insufficient_tail: bool,
}

struct TrialTally {
    hist: Vec<u64>,
    blocks: u64,
    renewals: u64,
}

/// Simulates `Q_{n+1} = max(Q_n + a − R·1{renewal ends in block n}, 0)` and
/// fits the exponential decay of `Pr{Q ≥ τ}`.
///
/// Arrivals of `a` bits land every block; `R` bits leave when a message
/// decodes. The first `WARM_UP_FRACTION` of each trial is discarded. The fit
/// uses thresholds `τ > 0` with at least `MIN_TAIL_HITS` exceedances.
#[allow(clippy::too_many_arguments)]
pub fn simulate_queue_overflow<S: TransmissionSampler + ?Sized>(
    sampler: &S,
    rate: f64,
    arrival_rate: f64,
    horizon: u64,
    tau_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<QueueTrace, AnalysisError> {
    if !(arrival_rate > 0.0 && arrival_rate.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!(
            "arrival rate must be > 0, got {arrival_rate}"
        )));
    }
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidArgument(
            "tau grid must be non-empty and strictly increasing".into(),
        ));
    }
    if trials == 0 || horizon < 10 {
        return Err(AnalysisError::InvalidArgument(
            "need at least one trial and a horizon of 10 blocks".into(),
        ));
    }
    let warm_up = (horizon as f64 * WARM_UP_FRACTION).ceil() as u64;

    let tallies: Vec<TrialTally> = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<TrialTally, ProtocolError> {
            let mut rng = RngStream::new(seed, i);
            // hist[k]: samples whose level clears exactly k thresholds.
            let mut hist = vec![0u64; tau_grid.len() + 1];
            let mut queue = 0.0f64;
            let mut next_completion = sampler.sample(&mut rng)?.duration;
            let mut renewals = 0u64;
            for block in 1..=horizon {
                queue += arrival_rate;
                if block == next_completion {
                    queue = (queue - rate).max(0.0);
                    renewals += 1;
                    next_completion += sampler.sample(&mut rng)?.duration;
                }
                if block > warm_up {
                    hist[tau_grid.partition_point(|&t| t <= queue)] += 1;
                }
            }
            Ok(TrialTally {
                hist,
                blocks: horizon,
                renewals,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut hist = vec![0u64; tau_grid.len() + 1];
    let mut blocks = 0u64;
    let mut renewals = 0u64;
    for t in &tallies {
        for (h, c) in hist.iter_mut().zip(&t.hist) {
            *h += c;
        }
        blocks += t.blocks;
        renewals += t.renewals;
    }
    let samples: u64 = hist.iter().sum();
    // hits[j] = #{Q ≥ τ_j} = samples clearing more than j thresholds.
    let mut hits = vec![0u64; tau_grid.len()];
    let mut above = 0u64;
    for j in (0..tau_grid.len()).rev() {
        above += hist[j + 1];
        hits[j] = above;
    }
    let overflow_prob: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();

    let mu1_hat = if renewals > 0 {
        blocks as f64 / renewals as f64
    } else {
        f64::INFINITY
    };
    let unstable = arrival_rate >= rate / mu1_hat;

    let (xs, ys): (Vec<f64>, Vec<f64>) = tau_grid
        .iter()
        .zip(&hits)
        .zip(&overflow_prob)
        .filter(|((&tau, &h), _)| tau > 0.0 && h >= MIN_TAIL_HITS)
        .map(|((&tau, _), &p)| (tau, p.ln()))
        .unzip();
    let fit = if xs.len() >= 2 {
        linear_fit(&xs, &ys)
    } else {
        None
    };
    let insufficient_tail = fit.is_none();
    let (theta_hat, r_squared) = match fit {
        Some(f) if !unstable => ((-f.slope).max(0.0), f.r_squared),
        Some(f) => (0.0, f.r_squared),
        None => (0.0, 0.0),
    };

    Ok(QueueTrace {
        arrival_rate,
        tau_grid: tau_grid.to_vec(),
        overflow_prob,
        hits,
        samples,
        theta_hat,
        r_squared,
        fit_points: xs.len(),
        mu1_hat,
        unstable,
        insufficient_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{ProtocolSpec, TransmissionOutcome};

    fn snr6() -> SnrConfig {
        SnrConfig::from_db(6.0).unwrap()
    }

    #[test]
    fn zero_qos_examples() {
        assert_eq!(throughput_zero_qos(2.0, 2.0), 1.0);
        // Deterministic C = 2, R slightly below 3·C: three blocks.
        let s3 = SnrConfig::from_linear(3.0).unwrap();
        let spec =
            ProtocolSpec::harq_ir(5.9, s3, FadingModel::deterministic(1.0).unwrap()).unwrap();
        let mu1 = spec.sample(&mut RngStream::new(0, 0)).unwrap().duration as f64;
        assert!((throughput_zero_qos(5.9, mu1) - 5.9 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_csi_deterministic() {
        let m = FadingModel::deterministic(1.5).unwrap();
        let c = instantaneous_capacity(1.5, snr6());
        for theta in [1e-6, 0.01, 1.0, 50.0] {
            let v = ec_perfect_csi(&m, snr6(), theta).unwrap().value;
            assert!(
                (v - c).abs() < 1e-12 * c.max(1.0),
                "theta {theta}: {v} vs {c}"
            );
        }
    }

    #[test]
    fn perfect_csi_two_point_mixture() {
        let m = FadingModel::two_point(0.2, 3.0, 0.4).unwrap();
        let ca = instantaneous_capacity(0.2, snr6());
        let cb = instantaneous_capacity(3.0, snr6());
        let theta = 0.3;
        let want = -(0.4 * (-theta * ca).exp() + 0.6 * (-theta * cb).exp()).ln() / theta;
        let got = ec_perfect_csi(&m, snr6(), theta).unwrap().value;
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn perfect_csi_small_theta_is_ergodic() {
        let m = FadingModel::rayleigh(1.0).unwrap();
        let erg = ergodic_capacity(&m, snr6()).unwrap();
        let v = ec_perfect_csi(&m, snr6(), 1e-6).unwrap().value;
        assert!((v - erg).abs() < 1e-4, "{v} vs {erg}");
    }

    #[test]
    fn perfect_csi_monotone_and_jensen_bounded() {
        let m = FadingModel::rayleigh(1.0).unwrap();
        let erg = ergodic_capacity(&m, snr6()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let theta = 1e-4 * 1.6f64.powi(k);
            let v = ec_perfect_csi(&m, snr6(), theta).unwrap().value;
            assert!(v <= prev + 1e-12);
            assert!(v <= erg + 1e-12);
            prev = v;
        }
        assert!(ec_perfect_csi(&m, snr6(), 0.0).is_err());
    }

    #[test]
    fn perfect_csi_expansion_basics() {
        let det = FadingModel::deterministic(1.0).unwrap();
        let c = instantaneous_capacity(1.0, snr6());
        assert_eq!(
            ec_perfect_csi_expansion(&det, snr6(), 0.4).unwrap().value,
            c
        );
        let ray = FadingModel::rayleigh(1.0).unwrap();
        assert_eq!(
            ec_perfect_csi_expansion(&ray, snr6(), 0.0).unwrap().value,
            ergodic_capacity(&ray, snr6()).unwrap()
        );
    }

    #[test]
    fn perfect_csi_expansion_error_is_little_o() {
        let ray = FadingModel::rayleigh(1.0).unwrap();
        let mut ratios = Vec::new();
        let mut theta = 0.01;
        for _ in 0..5 {
            let exact = ec_perfect_csi(&ray, snr6(), theta).unwrap().value;
            let approx = ec_perfect_csi_expansion(&ray, snr6(), theta).unwrap().value;
            ratios.push((exact - approx).abs() / theta);
            theta /= 2.0;
        }
        for w in ratios.windows(2) {
            // Error is O(θ²), so the ratio should roughly halve.
            assert!(w[1] < 0.6 * w[0], "{ratios:?}");
        }
    }

    #[test]
    fn capacity_variance_two_point() {
        let m = FadingModel::two_point(0.2, 3.0, 0.4).unwrap();
        let ca = instantaneous_capacity(0.2, snr6());
        let cb = instantaneous_capacity(3.0, snr6());
        let want = 0.4 * 0.6 * (ca - cb).powi(2);
        assert!((capacity_variance(&m, snr6()).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn capacity_variance_rayleigh_6db() {
        // Independent quadrature (scipy.integrate.quad): 1.1042264408917428.
        let m = FadingModel::rayleigh(1.0).unwrap();
        let v = capacity_variance(&m, snr6()).unwrap();
        assert!((v - 1.104_226_440_891_742_8).abs() < 1e-8, "{v}");
    }

    #[test]
    fn variance_ratio_examples() {
        assert_eq!(variance_ratio(5.0, &RenewalStats::exact(3.0, 0.0)), 0.0);
        assert_eq!(variance_ratio(2.0, &RenewalStats::exact(2.0, 1.0)), 0.5);
    }

    #[test]
    fn queue_stays_empty_when_service_dominates() {
        let unit = |_: &mut RngStream| Ok(TransmissionOutcome::single(1));
        let tr = simulate_queue_overflow(&unit, 2.0, 1.5, 1000, &[0.5, 1.0, 2.0], 4, 0).unwrap();
        assert!(tr.overflow_prob.iter().all(|&p| p == 0.0));
        assert!(!tr.unstable);
        assert!(tr.insufficient_tail);
        assert_eq!(tr.mu1_hat, 1.0);
    }

    #[test]
    fn queue_flags_overload() {
        let two = |_: &mut RngStream| Ok(TransmissionOutcome::single(2));
        let tr =
            simulate_queue_overflow(&two, 2.0, 1.2, 10_000, &[1.0, 10.0, 100.0], 2, 0).unwrap();
        assert!(tr.unstable);
        assert_eq!(tr.theta_hat, 0.0);
    }

    #[test]
    fn queue_probabilities_non_increasing() {
        let spec = ProtocolSpec::harq_ir(3.0, snr6(), FadingModel::rayleigh(1.0).unwrap()).unwrap();
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 2.0).collect();
        let tr = simulate_queue_overflow(&spec, 3.0, 1.2, 50_000, &grid, 4, 3).unwrap();
        for w in tr.overflow_prob.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(!tr.unstable);
        assert!(tr.theta_hat > 0.0);
    }

    #[test]
    fn queue_rejects_bad_arguments() {
        let one = |_: &mut RngStream| Ok(TransmissionOutcome::single(1));
        assert!(simulate_queue_overflow(&one, 1.0, 0.0, 100, &[1.0], 1, 0).is_err());
        assert!(simulate_queue_overflow(&one, 1.0, 0.5, 100, &[2.0, 1.0], 1, 0).is_err());
        assert!(simulate_queue_overflow(&one, 1.0, 0.5, 100, &[], 1, 0).is_err());
    }
}
