//! Block-fading channel: per-block power gains and the capacities they induce.
//!
//! The gain `z = |h|²` is drawn independently for every block. Rayleigh
//! fading is sampled directly as an exponential variate, which has the same
//! law as the squared magnitude of a circularly symmetric complex Gaussian.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, QuadratureError};
use crate::rng::RngStream;
use crate::special::scaled_exp_integral_e1;

/// Relative tolerance for every quadrature over the gain distribution.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid fading model: {0}")]
    InvalidModel(String),
    #[error("invalid SNR: {0}")]
    InvalidSnr(String),
    #[error(transparent)]
    Integration(#[from] QuadratureError),
}

/// Distribution of the per-block power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    /// Exponentially distributed gain with the given mean.
    Rayleigh { mean_gain: f64 },
    /// Constant gain.
    Deterministic { gain: f64 },
    /// `gain_a` with probability `prob_a`, otherwise `gain_b`.
    TwoPoint {
        gain_a: f64,
        gain_b: f64,
        prob_a: f64,
    },
}

impl Default for FadingModel {
    fn default() -> Self {
        FadingModel::Rayleigh { mean_gain: 1.0 }
    }
}

impl FadingModel {
    pub fn rayleigh(mean_gain: f64) -> Result<Self, ChannelError> {
        let m = FadingModel::Rayleigh { mean_gain };
        m.validate()?;
        Ok(m)
    }

    pub fn deterministic(gain: f64) -> Result<Self, ChannelError> {
        let m = FadingModel::Deterministic { gain };
        m.validate()?;
        Ok(m)
    }

    pub fn two_point(gain_a: f64, gain_b: f64, prob_a: f64) -> Result<Self, ChannelError> {
        let m = FadingModel::TwoPoint {
            gain_a,
            gain_b,
            prob_a,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |msg: String| Err(ChannelError::InvalidModel(msg));
        match *self {
            FadingModel::Rayleigh { mean_gain } => {
                if !(mean_gain.is_finite() && mean_gain > 0.0) {
                    return bad(format!("rayleigh mean gain must be > 0, got {mean_gain}"));
                }
            }
            FadingModel::Deterministic { gain } => {
                if !(gain.is_finite() && gain >= 0.0) {
                    return bad(format!("deterministic gain must be >= 0, got {gain}"));
                }
            }
            FadingModel::TwoPoint {
                gain_a,
                gain_b,
                prob_a,
            } => {
                if !(gain_a.is_finite() && gain_a >= 0.0 && gain_b.is_finite() && gain_b >= 0.0) {
                    return bad(format!(
                        "two-point gains must be >= 0, got {gain_a} and {gain_b}"
                    ));
                }
                if !(0.0..=1.0).contains(&prob_a) {
                    return bad(format!(
                        "two-point probability must lie in [0, 1], got {prob_a}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// One i.i.d. draw of the block gain.
    #[inline]
    pub fn sample_gain(&self, rng: &mut RngStream) -> f64 {
        match *self {
            FadingModel::Rayleigh { mean_gain } => -mean_gain * rng.open_unit().ln(),
            FadingModel::Deterministic { gain } => gain,
            FadingModel::TwoPoint {
                gain_a,
                gain_b,
                prob_a,
            } => {
                // open_unit is in (0, 1], so prob_a = 1 always picks gain_a
                // and prob_a = 0 never does.
                if rng.open_unit() <= prob_a {
                    gain_a
                } else {
                    gain_b
                }
            }
        }
    }

    /// Whether every block gain is one of finitely many values.
    pub fn is_discrete(&self) -> bool {
        !matches!(self, FadingModel::Rayleigh { .. })
    }

    /// `E{f(z)}` over the gain distribution.
    ///
    /// Discrete models are summed exactly; Rayleigh uses adaptive quadrature
    /// over `[0, z_max]`, where `z_max` is pushed out until the weighted
    /// integrand is below `1e-15` of its peak.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64, ChannelError> {
        match *self {
            FadingModel::Deterministic { gain } => Ok(f(gain)),
            FadingModel::TwoPoint {
                gain_a,
                gain_b,
                prob_a,
            } => {
                // Skip zero-probability atoms so f is never asked for a
                // value it might not define.
                let mut total = 0.0;
                if prob_a > 0.0 {
                    total += prob_a * f(gain_a);
                }
                if prob_a < 1.0 {
                    total += (1.0 - prob_a) * f(gain_b);
                }
                Ok(total)
            }
            FadingModel::Rayleigh { mean_gain } => {
                let weighted = |z: f64| f(z) * (-z / mean_gain).exp() / mean_gain;
                let peak = (0..=200)
                    .map(|i| weighted(mean_gain * i as f64 * 0.1).abs())
                    .fold(0.0, f64::max);
                let mut z_max = mean_gain * (1e15f64).ln();
                while peak > 0.0 && weighted(z_max).abs() > 1e-15 * peak && z_max < 1e4 * mean_gain
                {
                    z_max *= 1.25;
                }
                let m = mean_gain;
                let pieces = [0.0, 0.25 * m, m, 4.0 * m, 12.0 * m, z_max];
                Ok(quadrature::integrate_pieces(
                    weighted,
                    &pieces,
                    QUADRATURE_REL_TOL,
                )?)
            }
        }
    }

    /// `Pr{log2(1 + snr·z) > rate}`: the probability that a single block
    /// carries a message of `rate` bits/s/Hz on its own.
    pub fn single_block_success_probability(&self, snr: SnrConfig, rate: f64) -> f64 {
        let threshold = (rate.exp2() - 1.0) / snr.linear();
        match *self {
            FadingModel::Rayleigh { mean_gain } => (-threshold.max(0.0) / mean_gain).exp(),
            FadingModel::Deterministic { gain } => {
                if instantaneous_capacity(gain, snr) > rate {
                    1.0
                } else {
                    0.0
                }
            }
            FadingModel::TwoPoint {
                gain_a,
                gain_b,
                prob_a,
            } => {
                let mut p = 0.0;
                if instantaneous_capacity(gain_a, snr) > rate {
                    p += prob_a;
                }
                if instantaneous_capacity(gain_b, snr) > rate {
                    p += 1.0 - prob_a;
                }
                p
            }
        }
    }
}

/// Average transmit SNR. Construct from dB or linear; everything downstream
/// consumes the linear value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrConfig {
    snr_db: f64,
    linear: f64,
}

impl SnrConfig {
    pub fn from_db(snr_db: f64) -> Result<Self, ChannelError> {
        if !snr_db.is_finite() {
            return Err(ChannelError::InvalidSnr(format!("{snr_db} dB")));
        }
        Ok(SnrConfig {
            snr_db,
            linear: 10f64.powf(snr_db / 10.0),
        })
    }

    pub fn from_linear(linear: f64) -> Result<Self, ChannelError> {
        if !(linear.is_finite() && linear > 0.0) {
            return Err(ChannelError::InvalidSnr(format!("linear SNR {linear}")));
        }
        Ok(SnrConfig {
            snr_db: 10.0 * linear.log10(),
            linear,
        })
    }

    pub fn db(&self) -> f64 {
        self.snr_db
    }

    #[inline]
    pub fn linear(&self) -> f64 {
        self.linear
    }
}

/// `log2(1 + snr·z)` in bits/s/Hz.
#[inline]
pub fn instantaneous_capacity(gain: f64, snr: SnrConfig) -> f64 {
    let x = snr.linear() * gain;
    if x < 1e-3 {
        x.ln_1p() / LN_2
    } else {
        (1.0 + x).log2()
    }
}

/// `E{log2(1 + snr·z)}`.
///
/// Rayleigh uses `e^{1/s}·E1(1/s)/ln 2` with `s = snr·mean_gain`.
pub fn ergodic_capacity(model: &FadingModel, snr: SnrConfig) -> Result<f64, ChannelError> {
    match *model {
        FadingModel::Rayleigh { mean_gain } => {
            let inv = 1.0 / (snr.linear() * mean_gain);
            Ok(scaled_exp_integral_e1(inv) / LN_2)
        }
        _ => model.expectation(|z| instantaneous_capacity(z, snr)),
    }
}
