//! Weighted empirical distribution functions.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Right-continuous empirical CDF of weighted samples.
///
/// Returns the distinct sample values in ascending order, each paired with the
/// total normalized weight at or below it. Zero-weight samples still appear as
/// (flat) steps. The last probability is exactly 1.
pub fn weighted_cdf<I>(samples: I) -> Result<Vec<(f64, f64)>>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut samples: Vec<(f64, f64)> = samples.into_iter().collect();
    if samples.iter().any(|&(v, w)| v.is_nan() || !(w >= 0.0)) {
        return Err(Error::InvalidParameter {
            field: "cdf sample",
            reason: "values must be numbers, weights non-negative",
        });
    }
    // Stable sort keeps the grid order among equal values, so the running sum
    // below is reproducible.
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyPopulation);
    }
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut running = 0.0;
    for (value, weight) in samples {
        running += weight;
        match steps.last_mut() {
            Some(last) if last.0 == value => last.1 = running,
            _ => steps.push((value, running)),
        }
    }
    for step in &mut steps {
        step.1 /= running;
    }
    Ok(steps)
}

/// Evaluates a step CDF produced by [`weighted_cdf`] at `x`.
pub fn evaluate(cdf: &[(f64, f64)], x: f64) -> f64 {
    match cdf.partition_point(|&(v, _)| v <= x) {
        0 => 0.0,
        i => cdf[i - 1].1,
    }
}
