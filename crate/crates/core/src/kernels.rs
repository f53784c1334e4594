//! Dirichlet, rescaled Dirichlet and Fejér kernels, plus the numerical
//! checks of their integral bounds.
//!
//! Arguments are reduced to `(-π, π]` first. Near the removable
//! singularities (`|sin(t/2)| < 1e-8`) the kernels are evaluated from their
//! cosine series instead of the closed form.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::numeric::Compensated;
use crate::partition::{left_index, PartitionSpec};

const SINGULAR_BAND: f64 = 1e-8;

/// Number of harmonics per side, `N >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KernelOrder(usize);

impl KernelOrder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            Err(Error::ZeroOrder)
        } else {
            Ok(KernelOrder(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `2N + 1`, the number of harmonics in `D_N`.
    pub fn width(self) -> f64 {
        (2 * self.0 + 1) as f64
    }
}

impl TryFrom<usize> for KernelOrder {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        KernelOrder::new(n)
    }
}

/// Maps `t` into `(-π, π]`.
pub fn reduce_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `D_N(t) = Σ_{|l|≤N} e^{ilt}`.
pub fn dirichlet(n: KernelOrder, t: f64) -> f64 {
    let x = reduce_angle(t);
    let half = (0.5 * x).sin();
    let n = n.get();
    if half.abs() < SINGULAR_BAND {
        if x == 0.0 {
            return (2 * n + 1) as f64;
        }
        let mut acc = Compensated::default();
        acc.add(1.0);
        for l in 1..=n {
            acc.add(2.0 * (l as f64 * x).cos());
        }
        return acc.value();
    }
    ((n as f64 + 0.5) * x).sin() / half
}

/// `D_N(t) / (2N + 1)`; equals 1 at the origin.
pub fn dirichlet_rescaled(n: KernelOrder, t: f64) -> f64 {
    dirichlet(n, t) / n.width()
}

/// `F_N(t) = (1/N) (sin(Nt/2) / sin(t/2))²`, the Cesàro mean of
/// `D_0, ..., D_{N-1}`. Nonnegative with peak `N` at the origin.
pub fn fejer(n: KernelOrder, t: f64) -> f64 {
    let x = reduce_angle(t);
    let half = (0.5 * x).sin();
    let n = n.get();
    let nf = n as f64;
    if half.abs() < SINGULAR_BAND {
        if x == 0.0 {
            return nf;
        }
        let mut acc = Compensated::default();
        acc.add(1.0);
        for l in 1..n {
            acc.add(2.0 * (1.0 - l as f64 / nf) * (l as f64 * x).cos());
        }
        return acc.value().max(0.0);
    }
    let ratio = (0.5 * nf * x).sin() / half;
    ratio * ratio / nf
}

/// Composite-midpoint approximation of `∫_{-π}^{π} |D_N(s)|^r ds`.
///
/// Requires at least `10 (2N + 1)` points so every oscillation of the kernel
/// is resolved.
pub fn dirichlet_lr_mass(n: KernelOrder, r: f64, quadrature_points: usize) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::ExponentTooSmall(r));
    }
    let min_points = 10 * (2 * n.get() + 1);
    if quadrature_points < min_points {
        return Err(Error::invalid(
            "quadrature_points",
            quadrature_points,
            "need at least 10 points per harmonic, 10 (2N + 1)",
        ));
    }
    let h = TAU / quadrature_points as f64;
    let mut acc = Compensated::default();
    for k in 0..quadrature_points {
        let s = -PI + (k as f64 + 0.5) * h;
        acc.add(dirichlet(n, s).abs().powf(r));
    }
    Ok(acc.value() * h)
}

/// `5 + 2π^r / (r - 1)`, the constant in the discretized Dirichlet bound.
pub fn discretized_kernel_constant(r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::ExponentTooSmall(r));
    }
    Ok(5.0 + 2.0 * PI.powf(r) / (r - 1.0))
}

/// Slack in the discretized Dirichlet bound at `t`:
///
/// `5ρ + (2N+1)^{-1} Ȧ_r  -  ∫_{-π}^{t} |D̃_N(⌊t⌋ - ⌊s⌋)|^r ds`
///
/// where `⌊·⌋` projects onto the partition from the left and `ρ` is the
/// partition norm. The integrand is constant on each cell, so the integral is
/// a finite cell sum and is computed exactly up to rounding.
pub fn discretized_kernel_bound_gap(
    n: KernelOrder,
    r: f64,
    partition: &PartitionSpec,
    t: f64,
) -> Result<f64> {
    let constant = discretized_kernel_constant(r)?;
    if !(-PI..=PI).contains(&t) {
        return Err(Error::TimeOutOfRange { index: 0, value: t });
    }
    partition.validate()?;
    let points = partition.points();
    let t0 = points[left_index(&points, t)];

    let mut integral = Compensated::default();
    for cell in points.windows(2) {
        let (a, b) = (cell[0], cell[1]);
        if a >= t {
            break;
        }
        let len = b.min(t) - a;
        integral.add(len * dirichlet_rescaled(n, t0 - a).abs().powf(r));
    }
    let bound = 5.0 * partition.norm() + constant / n.width();
    Ok(bound - integral.value())
}
