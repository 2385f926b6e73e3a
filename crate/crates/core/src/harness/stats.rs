//! Monte Carlo summaries, log-log rate fits and trend counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Mean with standard error and normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// `None` when fewer than two samples are available.
    pub stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

pub fn mc_aggregate(samples: &[f64]) -> Result<Aggregate> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Domain("cannot aggregate zero samples".into()));
    }
    let mean = pairwise_sum(samples) / n as f64;
    if n < 2 {
        return Ok(Aggregate { n, mean, stderr: None, ci_low: None, ci_high: None });
    }
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    Ok(Aggregate {
        n,
        mean,
        stderr: Some(se),
        ci_low: Some(mean - 1.96 * se),
        ci_high: Some(mean + 1.96 * se),
    })
}

/// `log gap = intercept + α log level`, fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Some gaps were non-positive and replaced by machine epsilon.
    pub floored: bool,
}

pub fn rate_fit(levels: &[f64], gaps: &[f64]) -> Result<RateFit> {
    if levels.len() != gaps.len() {
        return Err(Error::Domain(format!("{} levels but {} gaps", levels.len(), gaps.len())));
    }
    if levels.len() < 3 {
        return Err(Error::Domain(format!("rate fit needs at least 3 points, got {}", levels.len())));
    }
    if levels.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Domain("rate fit needs positive levels".into()));
    }
    let mut floored = false;
    let xs: Vec<f64> = levels.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = gaps
        .iter()
        .map(|&g| {
            if g > 0.0 {
                g.ln()
            } else {
                floored = true;
                f64::EPSILON.ln()
            }
        })
        .collect();
    let n = xs.len() as f64;
    let mx = pairwise_sum(&xs) / n;
    let my = pairwise_sum(&ys) / n;
    let sxx = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    let sxy = pairwise_sum(&xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect::<Vec<_>>());
    let syy = pairwise_sum(&ys.iter().map(|y| (y - my) * (y - my)).collect::<Vec<_>>());
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { alpha, intercept, r2, floored })
}

/// Number of steps along the schedule (coarse to fine) where the value goes up.
pub fn trend_violations(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}
