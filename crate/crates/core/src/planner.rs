//! Crossover fidelities and resource plans for reaching a target fidelity.
//!
//! Purifying n raw pairs of fidelity F in any arrangement yields
//! Fⁿ / (Fⁿ + (1−F)ⁿ) with joint success probability Fⁿ + (1−F)ⁿ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    Ok(())
}

fn check_count(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("leaf count must be at least 1".into()));
    }
    Ok(())
}

/// Fidelity after purifying `n` raw pairs of fidelity `f`.
pub fn fidelity_after_n(f: f64, n: u32) -> Result<f64> {
    check_unit(f)?;
    check_count(n)?;
    if f == 0.0 {
        return Ok(0.0);
    }
    // written via the odds ratio so large n does not underflow both powers
    Ok(1.0 / (1.0 + ((1.0 - f) / f).powi(n as i32)))
}

/// Joint success probability of purifying `n` raw pairs of fidelity `f`.
pub fn efficiency_after_n(f: f64, n: u32) -> Result<f64> {
    check_unit(f)?;
    check_count(n)?;
    Ok(f.powi(n as i32) + (1.0 - f).powi(n as i32))
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold fidelity {threshold} must lie strictly between 1/2 and 1"
        )));
    }
    Ok(())
}

/// Initial fidelity at which `n` raw pairs reach exactly `threshold`.
pub fn crossover_fidelity(threshold: f64, n: u32) -> Result<f64> {
    check_threshold(threshold)?;
    check_count(n)?;
    let x = (threshold / (1.0 - threshold)).powf(1.0 / n as f64);
    Ok(x / (1.0 + x))
}

/// Same crossover found by bisection on (1/2, 1).
pub fn crossover_fidelity_bisect(threshold: f64, n: u32, tolerance: f64) -> Result<f64> {
    check_threshold(threshold)?;
    check_count(n)?;
    let (mut lo, mut hi) = (0.5, 1.0);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if fidelity_after_n(mid, n)? < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub initial_fidelity: f64,
    pub threshold_fidelity: f64,
}

impl ThresholdQuery {
    pub fn new(initial_fidelity: f64, threshold_fidelity: f64) -> Self {
        ThresholdQuery {
            initial_fidelity,
            threshold_fidelity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub leaves: u32,
    pub final_fidelity: f64,
    pub cumulative_efficiency: f64,
    /// Raw pairs consumed on average when any failed round restarts the
    /// whole arrangement.
    pub expected_raw_pairs: f64,
}

impl Plan {
    fn for_leaves(f: f64, n: u32) -> Result<Plan> {
        let eta = efficiency_after_n(f, n)?;
        Ok(Plan {
            leaves: n,
            final_fidelity: fidelity_after_n(f, n)?,
            cumulative_efficiency: eta,
            expected_raw_pairs: n as f64 / eta,
        })
    }
}

fn log_odds(f: f64) -> f64 {
    (f / (1.0 - f)).ln()
}

/// Fewest raw pairs whose purification reaches the threshold.
pub fn minimal_plan(query: &ThresholdQuery) -> Result<Plan> {
    let f = query.initial_fidelity;
    check_unit(f)?;
    if f <= 0.5 {
        return Err(Error::Unpurifiable(f));
    }
    check_threshold(query.threshold_fidelity)?;
    let th = query.threshold_fidelity;
    if f >= th {
        return Plan::for_leaves(f, 1);
    }
    let estimate = (log_odds(th) / log_odds(f)).ceil().max(1.0);
    if estimate > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "fidelity {f} needs more than {} raw pairs",
            u32::MAX
        )));
    }
    let mut n = estimate as u32;
    // the ratio of logarithms can land a hair on either side of an integer
    while n > 1 && fidelity_after_n(f, n - 1)? >= th {
        n -= 1;
    }
    while fidelity_after_n(f, n)? < th {
        n += 1;
    }
    Plan::for_leaves(f, n)
}

/// One grid point of the fidelity and efficiency curves for 2, 3 and 4 raw
/// pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure4Row {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F1p")]
    pub f1p: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    pub eta1: f64,
    pub eta1p: f64,
    pub eta2: f64,
}

impl Figure4Row {
    pub const COLUMNS: [&'static str; 7] = ["F", "F1", "F1p", "F2", "eta1", "eta1p", "eta2"];

    pub fn values(&self) -> [f64; 7] {
        [self.f, self.f1, self.f1p, self.f2, self.eta1, self.eta1p, self.eta2]
    }
}

pub fn figure4_table(grid: &[f64]) -> Result<Vec<Figure4Row>> {
    grid.iter()
        .map(|&f| {
            Ok(Figure4Row {
                f,
                f1: fidelity_after_n(f, 2)?,
                f1p: fidelity_after_n(f, 3)?,
                f2: fidelity_after_n(f, 4)?,
                eta1: efficiency_after_n(f, 2)?,
                eta1p: efficiency_after_n(f, 3)?,
                eta2: efficiency_after_n(f, 4)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub leaves: u32,
    pub crossover: f64,
}

/// Crossovers for 1..=max_leaves raw pairs.
pub fn crossover_table(threshold: f64, max_leaves: u32) -> Result<Vec<CrossoverRow>> {
    (1..=max_leaves)
        .map(|n| {
            Ok(CrossoverRow {
                leaves: n,
                crossover: crossover_fidelity(threshold, n)?,
            })
        })
        .collect()
}
