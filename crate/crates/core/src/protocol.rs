//! Retransmission schemes and their random transmission times.
//!
//! A message of `R` bits/s/Hz is sent one subblock per fading block. Under
//! HARQ-IR the receiver accumulates `log2(1 + snr·z_i)` across blocks and
//! decodes at the first block `M` where the accumulated capacity strictly
//! exceeds `R`. Plain ARQ discards failed blocks, so each block succeeds on
//! its own or not at all. The deadline variant aborts a HARQ-IR message after
//! `T_u` blocks and starts a fresh one; the renewal time is the total time to
//! the first message that gets through.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{instantaneous_capacity, FadingModel, SnrConfig};
use crate::rng::RngStream;
use crate::stats::CompensatedSum;

pub const DEFAULT_MAX_BLOCKS_GUARD: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(
        "transmission exceeded the guard of {guard} blocks; the channel cannot carry rate {rate}"
    )]
    GuardExceeded { guard: u64, rate: f64 },
    #[error("invalid protocol parameters: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    HarqIr,
    PlainArq,
    HarqIrDeadline,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    scheme: Scheme,
    rate: f64,
    snr: SnrConfig,
    model: FadingModel,
    /// Maximum HARQ rounds per message; `None` is unbounded.
    deadline: Option<u64>,
    max_blocks_guard: u64,
}

/// Result of delivering one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionOutcome {
    /// Blocks from the start of transmission until a message decodes.
    pub duration: u64,
    /// Messages abandoned at the deadline before the successful one.
    pub failed_attempts: u64,
    /// Blocks spent on the successful message.
    pub within_attempt: u64,
}

impl TransmissionOutcome {
    pub fn single(duration: u64) -> Self {
        TransmissionOutcome {
            duration,
            failed_attempts: 0,
            within_attempt: duration,
        }
    }
}

impl ProtocolSpec {
    pub fn new(
        scheme: Scheme,
        rate: f64,
        snr: SnrConfig,
        model: FadingModel,
        deadline: Option<u64>,
    ) -> Result<Self, ProtocolError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ProtocolError::InvalidSpec(format!(
                "rate must be > 0, got {rate}"
            )));
        }
        if deadline == Some(0) {
            return Err(ProtocolError::InvalidSpec(
                "deadline must be at least one block".into(),
            ));
        }
        model
            .validate()
            .map_err(|e| ProtocolError::InvalidSpec(e.to_string()))?;
        Ok(ProtocolSpec {
            scheme,
            rate,
            snr,
            model,
            deadline,
            max_blocks_guard: DEFAULT_MAX_BLOCKS_GUARD,
        })
    }

    pub fn harq_ir(rate: f64, snr: SnrConfig, model: FadingModel) -> Result<Self, ProtocolError> {
        Self::new(Scheme::HarqIr, rate, snr, model, None)
    }

    pub fn plain_arq(rate: f64, snr: SnrConfig, model: FadingModel) -> Result<Self, ProtocolError> {
        Self::new(Scheme::PlainArq, rate, snr, model, None)
    }

    pub fn harq_ir_deadline(
        rate: f64,
        snr: SnrConfig,
        model: FadingModel,
        deadline: Option<u64>,
    ) -> Result<Self, ProtocolError> {
        Self::new(Scheme::HarqIrDeadline, rate, snr, model, deadline)
    }

    pub fn with_guard(mut self, max_blocks_guard: u64) -> Self {
        self.max_blocks_guard = max_blocks_guard.max(1);
        self
    }

    pub fn with_rate(mut self, rate: f64) -> Result<Self, ProtocolError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ProtocolError::InvalidSpec(format!(
                "rate must be > 0, got {rate}"
            )));
        }
        self.rate = rate;
        Ok(self)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn snr(&self) -> SnrConfig {
        self.snr
    }

    pub fn model(&self) -> &FadingModel {
        &self.model
    }

    pub fn deadline(&self) -> Option<u64> {
        self.deadline
    }

    pub fn max_blocks_guard(&self) -> u64 {
        self.max_blocks_guard
    }

    fn guard_error(&self) -> ProtocolError {
        ProtocolError::GuardExceeded {
            guard: self.max_blocks_guard,
            rate: self.rate,
        }
    }

    /// One HARQ-IR message, observed for at most `limit` blocks.
    /// Returns the decoding block, or `None` if still undecoded at `limit`.
    fn harq_attempt(&self, rng: &mut RngStream, limit: u64) -> Option<u64> {
        let mut acc = CompensatedSum::new();
        for block in 1..=limit {
            acc.add(instantaneous_capacity(
                self.model.sample_gain(rng),
                self.snr,
            ));
            if self.rate < acc.value() {
                return Some(block);
            }
        }
        None
    }

    fn arq_attempt(&self, rng: &mut RngStream, limit: u64) -> Option<u64> {
        (1..=limit)
            .find(|_| self.rate < instantaneous_capacity(self.model.sample_gain(rng), self.snr))
    }

    /// Draws a transmission time under HARQ-IR.
    pub fn sample_harq_ir(
        &self,
        rng: &mut RngStream,
    ) -> Result<TransmissionOutcome, ProtocolError> {
        self.harq_attempt(rng, self.max_blocks_guard)
            .map(TransmissionOutcome::single)
            .ok_or_else(|| self.guard_error())
    }

    /// Draws a transmission time under plain ARQ.
    pub fn sample_plain_arq(
        &self,
        rng: &mut RngStream,
    ) -> Result<TransmissionOutcome, ProtocolError> {
        self.arq_attempt(rng, self.max_blocks_guard)
            .map(TransmissionOutcome::single)
            .ok_or_else(|| self.guard_error())
    }

    /// Draws the time to the first successful message under a deadline.
    pub fn sample_deadline(
        &self,
        rng: &mut RngStream,
    ) -> Result<TransmissionOutcome, ProtocolError> {
        let Some(deadline) = self.deadline else {
            return self.sample_harq_ir(rng);
        };
        let mut elapsed = 0u64;
        let mut failed = 0u64;
        loop {
            let limit = deadline.min(self.max_blocks_guard - elapsed);
            match self.harq_attempt(rng, limit) {
                Some(n) => {
                    return Ok(TransmissionOutcome {
                        duration: elapsed + n,
                        failed_attempts: failed,
                        within_attempt: n,
                    })
                }
                None => {
                    elapsed += limit;
                    failed += 1;
                    if elapsed >= self.max_blocks_guard {
                        return Err(self.guard_error());
                    }
                }
            }
        }
    }

    /// Draws a transmission time under this spec's scheme.
    pub fn sample(&self, rng: &mut RngStream) -> Result<TransmissionOutcome, ProtocolError> {
        match self.scheme {
            Scheme::HarqIr => self.sample_harq_ir(rng),
            Scheme::PlainArq => self.sample_plain_arq(rng),
            Scheme::HarqIrDeadline => self.sample_deadline(rng),
        }
    }

    /// Draws a transmission time but stops observing after `budget` blocks.
    /// `Ok(None)` means the duration exceeds `budget`.
    pub fn sample_within(
        &self,
        rng: &mut RngStream,
        budget: u64,
    ) -> Result<Option<u64>, ProtocolError> {
        if budget == 0 {
            return Ok(None);
        }
        let limit = budget.min(self.max_blocks_guard);
        let found = match (self.scheme, self.deadline) {
            (Scheme::PlainArq, _) => self.arq_attempt(rng, limit),
            (Scheme::HarqIr, _) | (Scheme::HarqIrDeadline, None) => self.harq_attempt(rng, limit),
            (Scheme::HarqIrDeadline, Some(deadline)) => {
                let mut elapsed = 0u64;
                loop {
                    let remaining = limit - elapsed;
                    let window = deadline.min(remaining);
                    if let Some(n) = self.harq_attempt(rng, window) {
                        break Some(elapsed + n);
                    }
                    elapsed += window;
                    if elapsed >= limit {
                        break None;
                    }
                }
            }
        };
        match found {
            Some(d) => Ok(Some(d)),
            None if budget > self.max_blocks_guard => Err(self.guard_error()),
            None => Ok(None),
        }
    }
}

/// Anything that can draw i.i.d. inter-renewal times.
pub trait TransmissionSampler: Sync {
    fn sample(&self, rng: &mut RngStream) -> Result<TransmissionOutcome, ProtocolError>;

    /// Draws a duration, returning `None` once it is known to exceed
    /// `budget`. Implementors may stop drawing early.
    fn sample_within(
        &self,
        rng: &mut RngStream,
        budget: u64,
    ) -> Result<Option<u64>, ProtocolError> {
        let d = self.sample(rng)?.duration;
        Ok((d <= budget).then_some(d))
    }
}

impl TransmissionSampler for ProtocolSpec {
    fn sample(&self, rng: &mut RngStream) -> Result<TransmissionOutcome, ProtocolError> {
        ProtocolSpec::sample(self, rng)
    }

    fn sample_within(
        &self,
        rng: &mut RngStream,
        budget: u64,
    ) -> Result<Option<u64>, ProtocolError> {
        ProtocolSpec::sample_within(self, rng, budget)
    }
}

impl<F> TransmissionSampler for F
where
    F: Fn(&mut RngStream) -> Result<TransmissionOutcome, ProtocolError> + Sync,
{
    fn sample(&self, rng: &mut RngStream) -> Result<TransmissionOutcome, ProtocolError> {
        self(rng)
    }
}

/// Exact law of the HARQ-IR transmission time on a discrete channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    /// `pmf[m - 1] = Pr{T = m}` for `m = 1..=M_max`.
    pub pmf: Vec<f64>,
    /// `Pr{T > M_max}`.
    pub tail: f64,
    /// Set when `tail > 0.5`: `M_max` is too small to resolve the law.
    pub coarse: bool,
}

impl ExactDistribution {
    pub fn prob(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        self.pmf.get(m as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn prob_exceeds(&self, m: u64) -> f64 {
        let head: f64 = self.pmf.iter().take(m as usize).sum();
        1.0 - head
    }

    /// `(E{T}, var(T))`, or `None` if the tail carries mass.
    pub fn mean_and_variance(&self) -> Option<(f64, f64)> {
        if self.tail > 1e-14 {
            return None;
        }
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, p) in self.pmf.iter().enumerate() {
            let m = (i + 1) as f64;
            m1 += p * m;
            m2 += p * m * m;
        }
        Some((m1, m2 - m1 * m1))
    }
}

/// `Pr{T = 1..=M_max}` and `Pr{T > M_max}` for HARQ-IR on a two-point or
/// deterministic channel.
///
/// The accumulated capacity after `M` blocks depends only on how many of them
/// saw `gain_a`, so a dynamic program over that count is exact in `O(M_max²)`.
pub fn exact_transmission_time_distribution(
    spec: &ProtocolSpec,
    max_blocks: u64,
) -> Result<ExactDistribution, ProtocolError> {
    let (gain_a, gain_b, prob_a) = match *spec.model() {
        FadingModel::TwoPoint {
            gain_a,
            gain_b,
            prob_a,
        } => (gain_a, gain_b, prob_a),
        FadingModel::Deterministic { gain } => (gain, gain, 1.0),
        FadingModel::Rayleigh { .. } => {
            return Err(ProtocolError::InvalidSpec(
                "exact distribution needs a discrete fading model".into(),
            ))
        }
    };
    if max_blocks == 0 {
        return Err(ProtocolError::InvalidSpec("max_blocks must be >= 1".into()));
    }
    let cap_a = instantaneous_capacity(gain_a, spec.snr());
    let cap_b = instantaneous_capacity(gain_b, spec.snr());
    let rate = spec.rate();
    let decoded = |count_a: usize, blocks: usize| {
        rate < count_a as f64 * cap_a + (blocks - count_a) as f64 * cap_b
    };

    let mut pmf = Vec::with_capacity(max_blocks as usize);
    // pending[j]: probability of still being undecoded with j gain_a blocks.
    let mut pending = vec![1.0];
    for blocks in 1..=max_blocks as usize {
        let mut next = vec![0.0; blocks + 1];
        let mut done = 0.0;
        for (j, &p) in pending.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (count_a, weight) in [(j + 1, prob_a), (j, 1.0 - prob_a)] {
                let mass = p * weight;
                if decoded(count_a, blocks) {
                    done += mass;
                } else {
                    next[count_a] += mass;
                }
            }
        }
        pmf.push(done);
        pending = next;
    }
    let tail: f64 = pending.iter().sum();
    Ok(ExactDistribution {
        pmf,
        tail,
        coarse: tail > 0.5,
    })
}
