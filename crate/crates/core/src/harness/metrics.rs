//! Per-estimate quality metrics and box-plot statistics.

use serde::{Deserialize, Serialize};

use super::stoi::stoi;
use crate::error::Result;
use crate::solvers::spectral_distance;
use crate::transforms::{Measurements, Signal, StftOperator};
use crate::unfolded::si_sdr;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    /// `None` when the clip is too short or silent for STOI.
    pub stoi: Option<f64>,
    /// `None` when undefined, e.g. an all-zero estimate.
    pub si_sdr: Option<f64>,
    pub spectral_distance: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn score(
    op: &StftOperator,
    r: &Measurements,
    reference: &Signal,
    estimate: &Signal,
) -> Result<Scores> {
    Ok(Scores {
        stoi: stoi(reference, estimate).ok().and_then(finite),
        si_sdr: si_sdr(&estimate.samples, &reference.samples)
            .ok()
            .and_then(finite),
        spectral_distance: spectral_distance(op, &estimate.samples, r)?,
    })
}

/// `q`-quantile of sorted data with linear interpolation between order
/// statistics (the usual "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n: usize,
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(BoxStats {
        median: quantile_sorted(&v, 0.5)?,
        q1: quantile_sorted(&v, 0.25)?,
        q3: quantile_sorted(&v, 0.75)?,
        n: v.len(),
    })
}
