//! The seven sweep experiments.
//!
//! Every rate point reuses the same stream families (common random numbers),
//! so neighboring rows differ only through the rate. Monte-Carlo counts are
//! simulated once per row and shared by all θ columns.

use crate::analysis::{
    capacity_variance, ec_perfect_csi, simulate_queue_overflow, throughput_zero_qos, variance_ratio,
};
use crate::channel::SnrConfig;
use crate::protocol::ProtocolSpec;
use crate::renewal::{
    ec_first_order, ec_from_counts, estimate_moments, estimate_moments_deadline, renewal_counts,
    EstimatorError, RenewalStats,
};
use crate::rng::derive_seed;

use super::config::{DeadlineSpec, ExperimentConfig, ExperimentKind};
use super::output::SweepResult;
use super::ExperimentError;

const TAG_MOMENTS: u64 = 1;
const TAG_HARQ: u64 = 2;
const TAG_ARQ: u64 = 3;
const TAG_DEADLINE: u64 = 4;
const TAG_QUEUE: u64 = 5;
const TAG_CONVERGENCE: u64 = 6;

/// Relative change between `t` and `2t` above which a warning is issued.
const CONVERGENCE_TOLERANCE: f64 = 0.005;

pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::EcVsRate => run_ec_vs_rate(config),
        ExperimentKind::VarianceRatioVsRate => run_variance_ratio_vs_rate(config),
        ExperimentKind::MomentsVsRate => run_moments_vs_rate(config),
        ExperimentKind::EcVsRateThetas => run_ec_vs_rate_thetas(config),
        ExperimentKind::EcVsInverseMu => run_ec_vs_inverse_mu(config),
        ExperimentKind::EcVsRateDeadline => run_ec_vs_rate_deadline(config),
        ExperimentKind::QueueValidate => run_queue_validate(config),
    }
}

fn snr(config: &ExperimentConfig) -> Result<SnrConfig, ExperimentError> {
    Ok(SnrConfig::from_db(config.snr_db)?)
}

fn theta_label(theta: f64) -> String {
    format!("{theta}")
}

/// Counts `N_t` at the configured horizon and, when enabled, at `2t`.
struct Counts {
    at_t: Vec<u64>,
    at_2t: Option<Vec<u64>>,
}

fn simulate_counts(
    spec: &ProtocolSpec,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Counts, ExperimentError> {
    let trials = config.trials as u64;
    let at_t = renewal_counts(spec, config.horizon, 0..trials, seed)?;
    let at_2t = if config.check_convergence {
        Some(renewal_counts(
            spec,
            2 * config.horizon,
            0..trials,
            derive_seed(seed, TAG_CONVERGENCE),
        )?)
    } else {
        None
    };
    Ok(Counts { at_t, at_2t })
}

/// Monte-Carlo effective capacity and CI half-width for one column.
///
/// If no renewal completes within the horizon in any trial the throughput is
/// reported as 0 and a warning is recorded.
fn mc_cell(
    counts: &Counts,
    rate: f64,
    theta: f64,
    config: &ExperimentConfig,
    seed: u64,
    what: &str,
    warnings: &mut Vec<String>,
) -> Result<(f64, f64), ExperimentError> {
    let est = match ec_from_counts(rate, theta, config.horizon, &counts.at_t, seed) {
        Ok(e) => e,
        Err(EstimatorError::Degenerate { horizon, trials }) => {
            warnings.push(format!(
                "{what} at R = {rate}: no renewal before t = {horizon} in {trials} trials; reported as 0"
            ));
            return Ok((0.0, 0.0));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(c2) = &counts.at_2t {
        let h2 = 2 * config.horizon;
        if let Ok(e2) = ec_from_counts(rate, theta, h2, c2, seed) {
            let rel = (e2.value - est.value).abs() / est.value.abs();
            if rel >= CONVERGENCE_TOLERANCE {
                warnings.push(format!(
                    "{what} at R = {rate}, theta = {theta}: estimates at t = {} and {h2} differ by {:.3}%",
                    config.horizon,
                    100.0 * rel
                ));
            }
        }
    }
    Ok((est.value, est.ci_halfwidth))
}

fn first_order_cell(
    rate: f64,
    stats: &RenewalStats,
    theta: f64,
    what: &str,
    warnings: &mut Vec<String>,
) -> f64 {
    let fo = ec_first_order(rate, stats, theta);
    if fo.clamped {
        warnings.push(format!(
            "{what} first-order expansion at R = {rate}, theta = {theta} is negative ({}); clamped to 0",
            crate::experiments::format_number(ec_first_order_raw(rate, stats, theta))
        ));
    }
    fo.value
}

fn ec_first_order_raw(rate: f64, stats: &RenewalStats, theta: f64) -> f64 {
    rate / stats.mu1 - rate * rate * stats.sigma2 / (2.0 * stats.mu1.powi(3)) * theta
}

fn harq_moments(
    config: &ExperimentConfig,
    rate: f64,
    snr: SnrConfig,
) -> Result<(ProtocolSpec, RenewalStats), ExperimentError> {
    let spec = ProtocolSpec::harq_ir(rate, snr, config.model)?;
    let stats = estimate_moments(
        &spec,
        config.moment_trials,
        derive_seed(config.seed, TAG_MOMENTS),
    )?;
    Ok((spec, stats))
}

/// HARQ-IR and plain-ARQ effective capacity against the message rate at a
/// single θ, with the first-order expansion, zero-QoS throughput and the
/// perfect-CSI reference.
pub fn run_ec_vs_rate(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let theta = config.thetas()[0];
    let columns = [
        "rate",
        "mu1",
        "throughput_zero_qos",
        "ec_harq_first_order",
        "ec_harq_mc",
        "ec_harq_mc_ci",
        "ec_arq_mc",
        "ec_arq_mc_ci",
        "ec_perfect_csi",
    ];
    let mut out = SweepResult::new(config.experiment, columns.map(String::from).to_vec());
    let perfect = ec_perfect_csi(&config.model, snr, theta)?.value;
    let harq_seed = derive_seed(config.seed, TAG_HARQ);
    let arq_seed = derive_seed(config.seed, TAG_ARQ);
    for rate in config.rate_grid.points() {
        let (spec, stats) = harq_moments(config, rate, snr)?;
        let fo = first_order_cell(rate, &stats, theta, "HARQ-IR", &mut out.warnings);
        let counts = simulate_counts(&spec, config, harq_seed)?;
        let (harq, harq_ci) = mc_cell(
            &counts,
            rate,
            theta,
            config,
            harq_seed,
            "HARQ-IR",
            &mut out.warnings,
        )?;
        let arq = ProtocolSpec::plain_arq(rate, snr, config.model)?;
        let counts = simulate_counts(&arq, config, arq_seed)?;
        let (arq_v, arq_ci) = mc_cell(
            &counts,
            rate,
            theta,
            config,
            arq_seed,
            "ARQ",
            &mut out.warnings,
        )?;
        out.push_row(vec![
            rate,
            stats.mu1,
            throughput_zero_qos(rate, stats.mu1),
            fo,
            harq,
            harq_ci,
            arq_v,
            arq_ci,
            perfect,
        ]);
    }
    Ok(out)
}

/// Sample mean and variance of the HARQ-IR transmission time.
pub fn run_moments_vs_rate(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let columns = ["rate", "mu1", "mu1_ci", "sigma2", "sigma2_ci"];
    let mut out = SweepResult::new(config.experiment, columns.map(String::from).to_vec());
    for rate in config.rate_grid.points() {
        let (_, s) = harq_moments(config, rate, snr)?;
        out.push_row(vec![
            rate,
            s.mu1,
            s.ci_halfwidth_mu1,
            s.sigma2,
            s.ci_halfwidth_sigma2,
        ]);
    }
    Ok(out)
}

/// `R²σ²/μ₁³` against the rate, next to the constant `var(C)`.
pub fn run_variance_ratio_vs_rate(
    config: &ExperimentConfig,
) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let var_c = capacity_variance(&config.model, snr)?;
    let columns = ["rate", "variance_ratio", "var_c"];
    let mut out = SweepResult::new(config.experiment, columns.map(String::from).to_vec());
    for rate in config.rate_grid.points() {
        let (_, s) = harq_moments(config, rate, snr)?;
        out.push_row(vec![rate, variance_ratio(rate, &s), var_c]);
    }
    Ok(out)
}

/// `(ec, ci, first_order)` for one θ.
type ThetaCell = (f64, f64, f64);

/// One HARQ-IR row: `(stats, [(ec, ci, first_order)] per θ)`.
///
/// θ = 0 is the zero-QoS throughput `R/μ̂₁` with a delta-method interval.
fn harq_theta_row(
    config: &ExperimentConfig,
    rate: f64,
    snr: SnrConfig,
    thetas: &[f64],
    warnings: &mut Vec<String>,
) -> Result<(RenewalStats, Vec<ThetaCell>), ExperimentError> {
    let (spec, stats) = harq_moments(config, rate, snr)?;
    let seed = derive_seed(config.seed, TAG_HARQ);
    let counts = if thetas.iter().any(|&t| t > 0.0) {
        Some(simulate_counts(&spec, config, seed)?)
    } else {
        None
    };
    let mut cells = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        if theta == 0.0 {
            let tput = throughput_zero_qos(rate, stats.mu1);
            let ci = rate * stats.ci_halfwidth_mu1 / (stats.mu1 * stats.mu1);
            cells.push((tput, ci, tput));
            continue;
        }
        let counts = counts.as_ref().expect("simulated for positive theta");
        let (v, ci) = mc_cell(counts, rate, theta, config, seed, "HARQ-IR", warnings)?;
        let fo = first_order_cell(rate, &stats, theta, "HARQ-IR", warnings);
        cells.push((v, ci, fo));
    }
    Ok((stats, cells))
}

/// HARQ-IR effective capacity against the rate for several θ.
pub fn run_ec_vs_rate_thetas(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let thetas = config.thetas();
    let mut columns = vec!["rate".to_string(), "mu1".to_string()];
    for &t in &thetas {
        let l = theta_label(t);
        columns.push(format!("ec_theta_{l}"));
        columns.push(format!("ec_theta_{l}_ci"));
        columns.push(format!("ec_fo_theta_{l}"));
    }
    let mut out = SweepResult::new(config.experiment, columns);
    for rate in config.rate_grid.points() {
        let (stats, cells) = harq_theta_row(config, rate, snr, &thetas, &mut out.warnings)?;
        let mut row = vec![rate, stats.mu1];
        for (v, ci, fo) in cells {
            row.extend([v, ci, fo]);
        }
        out.push_row(row);
    }
    Ok(out)
}

/// HARQ-IR effective capacity against `1/μ̂₁`, parameterized by the rate.
pub fn run_ec_vs_inverse_mu(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let thetas = config.thetas();
    let mut columns = vec!["rate".to_string(), "inv_mu1".to_string()];
    for &t in &thetas {
        let l = theta_label(t);
        columns.push(format!("ec_theta_{l}"));
        columns.push(format!("ec_theta_{l}_ci"));
    }
    let mut out = SweepResult::new(config.experiment, columns);
    for rate in config.rate_grid.points() {
        let (stats, cells) = harq_theta_row(config, rate, snr, &thetas, &mut out.warnings)?;
        let mut row = vec![rate, 1.0 / stats.mu1];
        for (v, ci, _) in cells {
            row.extend([v, ci]);
        }
        out.push_row(row);
    }
    Ok(out)
}

/// Deadline-bounded HARQ-IR effective capacity, one column group per `T_u`.
pub fn run_ec_vs_rate_deadline(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let theta = config.thetas()[0];
    if config.thetas().len() > 1 {
        return Err(ExperimentError::Config(
            "ec_vs_rate_deadline takes exactly one theta".into(),
        ));
    }
    let mut columns = vec!["rate".to_string()];
    for d in &config.deadlines {
        let l = d.label();
        columns.push(format!("ec_tu_{l}"));
        columns.push(format!("ec_tu_{l}_ci"));
        columns.push(format!("ec_fo_tu_{l}"));
    }
    let mut out = SweepResult::new(config.experiment, columns);
    let mc_seed = derive_seed(config.seed, TAG_DEADLINE);
    let moment_seed = derive_seed(config.seed, TAG_MOMENTS);
    for rate in config.rate_grid.points() {
        let mut row = vec![rate];
        for d in &config.deadlines {
            let spec = match d {
                DeadlineSpec::Bounded(n) => {
                    ProtocolSpec::harq_ir_deadline(rate, snr, config.model, Some(*n))?
                }
                DeadlineSpec::Unbounded => ProtocolSpec::harq_ir(rate, snr, config.model)?,
            };
            let what = format!("T_u = {}", d.label());
            let counts = simulate_counts(&spec, config, mc_seed)?;
            let (v, ci) = mc_cell(
                &counts,
                rate,
                theta,
                config,
                mc_seed,
                &what,
                &mut out.warnings,
            )?;
            let fo = match estimate_moments_deadline(&spec, config.moment_trials, moment_seed) {
                Ok(stats) => first_order_cell(rate, &stats, theta, &what, &mut out.warnings),
                Err(EstimatorError::Protocol(e)) => {
                    out.warnings.push(format!(
                        "{what} at R = {rate}: too few decoded attempts for moments ({e}); first-order value is nan"
                    ));
                    f64::NAN
                }
                Err(e) => return Err(e.into()),
            };
            row.extend([v, ci, fo]);
        }
        out.push_row(row);
    }
    Ok(out)
}

/// Queue simulation fed at the first-order effective capacity for θ₀;
/// reports the overflow curve and the fitted decay exponent.
pub fn run_queue_validate(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let snr = snr(config)?;
    let thetas = config.thetas();
    if thetas.len() != 1 {
        return Err(ExperimentError::Config(
            "queue_validate takes exactly one theta".into(),
        ));
    }
    let theta0 = thetas[0];
    let q = &config.queue;
    let spec = ProtocolSpec::harq_ir(q.rate, snr, config.model)?;
    let stats = estimate_moments(
        &spec,
        q.moment_trials,
        derive_seed(config.seed, TAG_MOMENTS),
    )?;
    let fo = ec_first_order(q.rate, &stats, theta0);
    if fo.clamped {
        return Err(ExperimentError::Estimator(format!(
            "first-order effective capacity at R = {}, theta = {theta0} is not positive",
            q.rate
        )));
    }
    let tau_grid = q.tau_grid.points();
    let trace = simulate_queue_overflow(
        &spec,
        q.rate,
        fo.value,
        q.horizon,
        &tau_grid,
        q.trials,
        derive_seed(config.seed, TAG_QUEUE),
    )?;
    let columns = [
        "tau",
        "overflow_prob",
        "ln_overflow_prob",
        "hits",
        "theta_hat",
        "r_squared",
        "arrival_rate",
    ];
    let mut out = SweepResult::new(config.experiment, columns.map(String::from).to_vec());
    if trace.unstable {
        out.warnings.push(format!(
            "queue is unstable: arrival rate {} >= service rate {}",
            trace.arrival_rate,
            q.rate / trace.mu1_hat
        ));
    }
    if trace.insufficient_tail {
        out.warnings.push(format!(
            "fewer than two thresholds reached {} exceedances; no tail fit",
            crate::analysis::MIN_TAIL_HITS
        ));
    }
    for (j, &tau) in tau_grid.iter().enumerate() {
        let p = trace.overflow_prob[j];
        out.push_row(vec![
            tau,
            p,
            p.ln(),
            trace.hits[j] as f64,
            trace.theta_hat,
            trace.r_squared,
            trace.arrival_rate,
        ]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingModel;
    use crate::experiments::Grid;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: kind,
            rate_grid: Grid {
                start: 1.0,
                stop: 3.0,
                step: 1.0,
            },
            trials: 200,
            horizon: 500,
            moment_trials: 2000,
            check_convergence: false,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_point_grid_gives_one_row() {
        let mut c = small(ExperimentKind::EcVsRate);
        c.rate_grid = Grid {
            start: 2.0,
            stop: 2.0,
            step: 0.25,
        };
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.columns.len(), 9);
    }

    #[test]
    fn deterministic_moments_staircase() {
        // C = log2(1 + 3) = 2: μ₁ = min{M : 2M > R}.
        let mut c = small(ExperimentKind::MomentsVsRate);
        c.model = FadingModel::deterministic(1.0).unwrap();
        c.snr_db = 10.0 * 3f64.log10();
        c.rate_grid = Grid {
            start: 0.5,
            stop: 6.0,
            step: 0.5,
        };
        let r = run_experiment(&c).unwrap();
        for row in &r.rows {
            let want = (row[0] / 2.0).floor() + 1.0;
            assert_eq!(row[1], want, "rate {}", row[0]);
            assert_eq!(row[3], 0.0);
        }
    }

    #[test]
    fn variance_column_is_constant() {
        let r = run_experiment(&small(ExperimentKind::VarianceRatioVsRate)).unwrap();
        let v = r.column("var_c").unwrap();
        assert!(v.iter().all(|&x| x == v[0]));
    }

    #[test]
    fn theta_zero_column_is_zero_qos_throughput() {
        let mut c = small(ExperimentKind::EcVsRateThetas);
        c.theta = Some(vec![0.0, 0.01, 0.1]);
        let r = run_experiment(&c).unwrap();
        for row in &r.rows {
            assert_eq!(row[2], row[0] / row[1]);
        }
        let a = r.column("ec_theta_0.01").unwrap();
        let b = r.column("ec_theta_0.1").unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x >= y));
    }

    #[test]
    fn inverse_mu_in_unit_interval() {
        let r = run_experiment(&small(ExperimentKind::EcVsInverseMu)).unwrap();
        for x in r.column("inv_mu1").unwrap() {
            assert!(x > 0.0 && x <= 1.0);
        }
        assert_eq!(r.columns.len(), 2 + 2 * 3);
    }

    #[test]
    fn deadline_columns_and_degenerate_rows() {
        let mut c = small(ExperimentKind::EcVsRateDeadline);
        c.rate_grid = Grid {
            start: 2.0,
            stop: 14.0,
            step: 12.0,
        };
        c.deadlines = vec![DeadlineSpec::Bounded(1), DeadlineSpec::Unbounded];
        let r = run_experiment(&c).unwrap();
        assert_eq!(
            r.columns,
            [
                "rate",
                "ec_tu_1",
                "ec_tu_1_ci",
                "ec_fo_tu_1",
                "ec_tu_inf",
                "ec_tu_inf_ci",
                "ec_fo_tu_inf"
            ]
        );
        // One-block deadline at R = 14 almost never decodes.
        assert_eq!(r.rows[1][1], 0.0);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn sweeps_are_deterministic() {
        let c = small(ExperimentKind::EcVsRate);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
