//! Statistical checks used by the tests and the command line.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub critical_value: f64,
    pub pass: bool,
}

/// Pearson goodness-of-fit of observed counts against the uniform law on
/// `categories` outcomes, at significance `alpha`. Outcomes that were never
/// observed count as zeros. Seeing more distinct outcomes than `categories`
/// fails outright.
pub fn chi_square_uniform<K: Eq + Hash>(
    counts: &HashMap<K, u64>,
    categories: u64,
    alpha: f64,
) -> ChiSquare {
    assert!(categories > 0, "need at least one category");
    let dof = categories - 1;
    if counts.len() as u64 > categories {
        return ChiSquare {
            statistic: f64::INFINITY,
            dof,
            critical_value: critical_value(dof, alpha),
            pass: false,
        };
    }
    let total: u64 = counts.values().sum();
    if dof == 0 || total == 0 {
        return ChiSquare {
            statistic: 0.0,
            dof,
            critical_value: critical_value(dof, alpha),
            pass: true,
        };
    }
    let expected = total as f64 / categories as f64;
    let seen: f64 = counts
        .values()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let unseen = (categories - counts.len() as u64) as f64 * expected;
    let statistic = seen + unseen;
    let critical = critical_value(dof, alpha);
    ChiSquare {
        statistic,
        dof,
        critical_value: critical,
        pass: statistic <= critical,
    }
}

/// Upper `alpha` quantile of the chi-square law with `dof` degrees of
/// freedom (0 for `dof = 0`).
pub fn critical_value(dof: u64, alpha: f64) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

/// Standard deviation of a frequency estimated from `n` Bernoulli(`p`) trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Sample correlation coefficient; 0 when either series is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}
