//! Observation partitions of `[-π, π]`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition `-π = t_0 < t_1 < ... < t_m = π`.
///
/// `Regular(m)` has `m` equal cells (so `m + 1` points including both
/// endpoints); `Explicit` lists every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionSpec {
    Regular(usize),
    Explicit(Vec<f64>),
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PartitionSpec::Regular(0) => Err(Error::InvalidPartition(
                "a regular partition needs at least one cell".into(),
            )),
            PartitionSpec::Regular(_) => Ok(()),
            PartitionSpec::Explicit(points) => {
                if points.len() < 2 {
                    return Err(Error::InvalidPartition("fewer than two points".into()));
                }
                if points[0] != -PI || points[points.len() - 1] != PI {
                    return Err(Error::InvalidPartition(
                        "endpoints must be exactly -pi and pi".into(),
                    ));
                }
                for (i, w) in points.windows(2).enumerate() {
                    if !(w[1] > w[0]) {
                        return Err(Error::NonIncreasingTimes {
                            index: i + 1,
                            prev: w[0],
                            next: w[1],
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        match self {
            PartitionSpec::Regular(m) => *m,
            PartitionSpec::Explicit(p) => p.len().saturating_sub(1),
        }
    }

    /// All partition points, both endpoints included.
    pub fn points(&self) -> Vec<f64> {
        match self {
            PartitionSpec::Regular(m) => {
                let mut v: Vec<f64> = (0..=*m).map(|i| -PI + TAU * i as f64 / *m as f64).collect();
                v[*m] = PI;
                v
            }
            PartitionSpec::Explicit(p) => p.clone(),
        }
    }

    /// The partition norm: largest gap between consecutive points.
    pub fn norm(&self) -> f64 {
        match self {
            PartitionSpec::Regular(m) => TAU / *m as f64,
            PartitionSpec::Explicit(p) => p.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
        }
    }
}

/// Index of the closest partition point at or to the left of `t`.
pub(crate) fn left_index(points: &[f64], t: f64) -> usize {
    match points.partition_point(|&p| p <= t) {
        0 => 0,
        k => k - 1,
    }
}
