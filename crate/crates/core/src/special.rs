//! Special functions needed for closed-form Rayleigh averages.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below 1, modified-Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 is only defined here for x > 0, got {x}");
    if x <= 1.0 {
        e1_series(x)
    } else {
        e1_continued_fraction_scaled(x) * (-x).exp()
    }
}

/// `e^x · E1(x)`, evaluated without overflow for large `x`.
pub fn scaled_exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 is only defined here for x > 0, got {x}");
    if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        e1_continued_fraction_scaled(x)
    }
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= -x / k;
        let contrib = term / k;
        sum += contrib;
        if contrib.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn e1_continued_fraction_scaled(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent implementation (scipy.special.exp1).
    const TABLE: &[(f64, f64)] = &[
        (1e-6, 13.23829589306249),
        (0.01, 4.037929576538113),
        (0.5, 0.5597735947761608),
        (1.0, 0.2193839343955205),
        (1.5, 0.10001958240663265),
        (2.0, 0.048900510708061125),
        (5.0, 0.0011482955912753257),
        (10.0, 4.156968929685325e-06),
        (30.0, 3.021552010688813e-15),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, want) in TABLE {
            let got = exp_integral_e1(x);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "E1({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn scaled_is_consistent() {
        for &(x, want) in TABLE {
            let got = scaled_exp_integral_e1(x) * (-x).exp();
            assert!(((got - want) / want).abs() < 1e-13);
        }
        // Large x: e^x E1(x) ~ 1/x.
        let x = 1e6;
        assert!((scaled_exp_integral_e1(x) * x - 1.0).abs() < 1e-5);
    }
}
