//! Fourier coefficients of increments, sampled functions and jump records;
//! Bohr-convolution partial sums; Fejér-weighted trigonometric polynomials.
//!
//! All coefficient transforms share one accumulation kernel computing
//!
//! ```text
//! c(q) = (1/2π) Σ_i w_i e^{-i q t_i},   0 <= q <= Q
//! ```
//!
//! for real weights `w_i`, and fill negative indices by conjugation so the
//! resulting tables are exactly conjugate-symmetric. On regular grids the
//! phase `e^{-iq t_i}` advances by a fixed rotation, re-anchored with a
//! direct `sin_cos` every [`ANCHOR_BLOCK`] samples; on irregular grids every
//! phase is computed directly. Block partial sums are combined with
//! Neumaier compensation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::market_sim::JumpRecord;
use crate::numeric::CompensatedComplex;

/// Samples between direct phase evaluations on regular grids.
pub const ANCHOR_BLOCK: usize = 64;

/// Harmonics accumulated together in one pass over the data.
const LANES: usize = 4;

/// Relative deviation from a constant step under which a grid counts as
/// regular.
const REGULAR_TOL: f64 = 1e-12;

/// Complex Fourier coefficients `c(q)` for `q = -Q..=Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    q_max: usize,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    /// Builds a table from values ordered `q = -Q..=Q`.
    pub fn new(q_max: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * q_max + 1 {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: 2 * q_max + 1,
            });
        }
        Ok(CoefficientTable { q_max, values })
    }

    pub fn zeros(q_max: usize) -> Self {
        CoefficientTable {
            q_max,
            values: vec![Complex64::new(0.0, 0.0); 2 * q_max + 1],
        }
    }

    /// Builds a conjugate-symmetric table from `c(0), ..., c(Q)`.
    pub fn from_nonnegative(half: Vec<Complex64>) -> Result<Self> {
        let q_max = half
            .len()
            .checked_sub(1)
            .ok_or(Error::Empty("coefficients"))?;
        let mut values = Vec::with_capacity(2 * q_max + 1);
        values.extend(half[1..].iter().rev().map(|c| c.conj()));
        values.extend_from_slice(&half);
        Ok(CoefficientTable { q_max, values })
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    /// Values ordered `q = -Q..=Q`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, q: i64) -> Result<Complex64> {
        if q.unsigned_abs() as usize > self.q_max {
            return Err(Error::BandTooNarrow {
                requested: q,
                available: self.q_max,
            });
        }
        Ok(self.at(q))
    }

    #[inline]
    pub(crate) fn at(&self, q: i64) -> Complex64 {
        self.values[(q + self.q_max as i64) as usize]
    }

    /// `(q, c(q))` pairs in increasing `q`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let q_max = self.q_max as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - q_max, *c))
    }

    /// Largest `|c(-q) - conj(c(q))|` over the band.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (1..=self.q_max as i64)
            .map(|q| (self.at(-q) - self.at(q).conj()).norm())
            .chain(std::iter::once(self.at(0).im.abs()))
            .fold(0.0, f64::max)
    }

    /// The sub-table on `|q| <= q_max`.
    pub fn truncate(&self, q_max: usize) -> Result<Self> {
        if q_max > self.q_max {
            return Err(Error::BandTooNarrow {
                requested: q_max as i64,
                available: self.q_max,
            });
        }
        let off = self.q_max - q_max;
        Ok(CoefficientTable {
            q_max,
            values: self.values[off..off + 2 * q_max + 1].to_vec(),
        })
    }

    /// Largest `|c(q)|` over the band.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Elementwise `self - other` over the common band `|q| <= min(Q, Q')`.
    pub fn difference(&self, other: &CoefficientTable) -> CoefficientTable {
        let q_max = self.q_max.min(other.q_max);
        let values = (-(q_max as i64)..=q_max as i64)
            .map(|q| self.at(q) - other.at(q))
            .collect();
        CoefficientTable { q_max, values }
    }

    /// Elementwise `self + other` over the common band.
    pub fn sum(&self, other: &CoefficientTable) -> CoefficientTable {
        let q_max = self.q_max.min(other.q_max);
        let values = (-(q_max as i64)..=q_max as i64)
            .map(|q| self.at(q) + other.at(q))
            .collect();
        CoefficientTable { q_max, values }
    }

    pub fn scaled(&self, factor: f64) -> CoefficientTable {
        CoefficientTable {
            q_max: self.q_max,
            values: self.values.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Increments `δX_i = X_{t_{i+1}} - X_{t_i}` of a discretely observed path,
/// each stamped with its left endpoint `t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedIncrements {
    times: Vec<f64>,
    increments: Vec<f64>,
    step: Option<f64>,
}

impl ObservedIncrements {
    pub fn new(times: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if times.len() != increments.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: increments.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::Empty("observed increments"));
        }
        validate_times(&times)?;
        if let Some(index) = increments.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let step = regular_step(&times);
        Ok(ObservedIncrements {
            times,
            increments,
            step,
        })
    }

    /// Builds increments from consecutive observations `(t_k, X_k)`,
    /// `k = 0..=m`; the last time is the right endpoint of the last
    /// increment and is not itself a stamp.
    pub fn from_levels(times: &[f64], levels: &[f64]) -> Result<Self> {
        if times.len() != levels.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: levels.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::Empty("need at least two observations"));
        }
        validate_times(times)?;
        let increments = levels.windows(2).map(|w| w[1] - w[0]).collect();
        ObservedIncrements::new(times[..times.len() - 1].to_vec(), increments)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid step when the stamps are equally spaced.
    pub fn regular_step(&self) -> Option<f64> {
        self.step
    }

    /// Same stamps, increments multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ObservedIncrements {
            times: self.times.clone(),
            increments: self.increments.iter().map(|x| x * factor).collect(),
            step: self.step,
        }
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    for (index, &t) in times.iter().enumerate() {
        if !t.is_finite() || !(-PI..=PI).contains(&t) {
            return Err(Error::TimeOutOfRange { index, value: t });
        }
    }
    for (i, w) in times.windows(2).enumerate() {
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

fn regular_step(times: &[f64]) -> Option<f64> {
    let m = times.len();
    if m < 2 {
        return None;
    }
    let step = (times[m - 1] - times[0]) / (m - 1) as f64;
    let tol = REGULAR_TOL * step.max(1.0);
    times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (times[0] + step * i as f64)).abs() <= tol)
        .then_some(step)
}

/// `(1/2π) Σ_i w_i e^{-iqt_i}` for `q = 0..=q_max`.
pub(crate) fn accumulate(
    times: &[f64],
    weights: &[f64],
    step: Option<f64>,
    q_max: usize,
    exec: Execution,
) -> Vec<Complex64> {
    debug_assert_eq!(times.len(), weights.len());
    let groups = q_max / LANES + 1;
    let per_group = exec.map_indexed(groups, |g| {
        let q0 = g * LANES;
        match step {
            Some(step) => accumulate_regular(times, weights, step, q0),
            None => accumulate_direct(times, weights, q0),
        }
    });
    per_group
        .into_iter()
        .flatten()
        .take(q_max + 1)
        .map(|c| c / TAU)
        .collect()
}

fn accumulate_regular(times: &[f64], weights: &[f64], step: f64, q0: usize) -> [Complex64; LANES] {
    let mut rot_re = [0.0; LANES];
    let mut rot_im = [0.0; LANES];
    let mut freq = [0.0; LANES];
    for k in 0..LANES {
        freq[k] = (q0 + k) as f64;
        let (s, c) = (-freq[k] * step).sin_cos();
        rot_re[k] = c;
        rot_im[k] = s;
    }
    let mut outer = [CompensatedComplex::default(); LANES];
    for (bt, bw) in times.chunks(ANCHOR_BLOCK).zip(weights.chunks(ANCHOR_BLOCK)) {
        let mut z_re = [0.0; LANES];
        let mut z_im = [0.0; LANES];
        for k in 0..LANES {
            let (s, c) = (-freq[k] * bt[0]).sin_cos();
            z_re[k] = c;
            z_im[k] = s;
        }
        let mut p_re = [0.0; LANES];
        let mut p_im = [0.0; LANES];
        for &w in bw {
            for k in 0..LANES {
                p_re[k] += w * z_re[k];
                p_im[k] += w * z_im[k];
                let re = z_re[k] * rot_re[k] - z_im[k] * rot_im[k];
                let im = z_re[k] * rot_im[k] + z_im[k] * rot_re[k];
                z_re[k] = re;
                z_im[k] = im;
            }
        }
        for k in 0..LANES {
            outer[k].add(Complex64::new(p_re[k], p_im[k]));
        }
    }
    outer.map(|acc| acc.value())
}

fn accumulate_direct(times: &[f64], weights: &[f64], q0: usize) -> [Complex64; LANES] {
    let mut outer = [CompensatedComplex::default(); LANES];
    for (bt, bw) in times.chunks(ANCHOR_BLOCK).zip(weights.chunks(ANCHOR_BLOCK)) {
        let mut part = [Complex64::new(0.0, 0.0); LANES];
        for (&t, &w) in bt.iter().zip(bw) {
            for (k, p) in part.iter_mut().enumerate() {
                let (s, c) = (-((q0 + k) as f64) * t).sin_cos();
                *p += Complex64::new(w * c, w * s);
            }
        }
        for k in 0..LANES {
            outer[k].add(part[k]);
        }
    }
    outer.map(|acc| acc.value())
}

/// `c(q) = (1/2π) Σ_i e^{-iqt_i} δX_i` for `|q| <= q_max`: the discrete
/// Itô-Stieltjes coefficients of the observed path.
pub fn increment_coefficients(obs: &ObservedIncrements, q_max: usize) -> CoefficientTable {
    increment_coefficients_with(obs, q_max, Execution::default())
}

pub fn increment_coefficients_with(
    obs: &ObservedIncrements,
    q_max: usize,
    exec: Execution,
) -> CoefficientTable {
    let half = accumulate(&obs.times, &obs.increments, obs.step, q_max, exec);
    CoefficientTable::from_nonnegative(half).expect("nonempty band")
}

/// Left-Riemann approximation of `(1/2π) ∫_{-π}^{π} e^{-iqt} φ(t) dt` from
/// samples `φ(t_k)` on an increasing grid. The last sample only closes the
/// final cell.
pub fn function_coefficients(
    times: &[f64],
    values: &[f64],
    q_max: usize,
) -> Result<CoefficientTable> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: values.len(),
        });
    }
    if times.len() < 2 {
        return Err(Error::Empty("function samples"));
    }
    validate_times(times)?;
    if let Some(index) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let stamps = &times[..times.len() - 1];
    let weights: Vec<f64> = times
        .windows(2)
        .zip(values)
        .map(|(w, v)| v * (w[1] - w[0]))
        .collect();
    let half = accumulate(
        stamps,
        &weights,
        regular_step(stamps),
        q_max,
        Execution::default(),
    );
    CoefficientTable::from_nonnegative(half)
}

/// `c(q) = (1/2π) Σ_z e^{-iqz} ΔJ_z²` over the recorded jumps.
pub fn jump_coefficients(jumps: &JumpRecord, q_max: usize) -> CoefficientTable {
    let times: Vec<f64> = jumps.events().iter().map(|e| e.time).collect();
    let weights: Vec<f64> = jumps.events().iter().map(|e| e.size * e.size).collect();
    let half = accumulate(&times, &weights, None, q_max, Execution::default());
    CoefficientTable::from_nonnegative(half).expect("nonempty band")
}

/// Bohr-convolution partial sum `(1/(2N+1)) Σ_{|l|<=N} u(l) v(q-l)`.
///
/// `u` must cover `|l| <= N` and `v` must cover `|q - l| <= N + |q|`;
/// out-of-band access is an error.
pub fn bohr_partial(
    u: &CoefficientTable,
    v: &CoefficientTable,
    q: i64,
    n: usize,
) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if u.q_max < n {
        return Err(Error::BandTooNarrow {
            requested: n as i64,
            available: u.q_max,
        });
    }
    let needed = n as i64 + q.abs();
    if (v.q_max as i64) < needed {
        return Err(Error::BandTooNarrow {
            requested: needed,
            available: v.q_max,
        });
    }
    Ok(bohr_unchecked(u, v, q, n))
}

#[inline]
pub(crate) fn bohr_unchecked(
    u: &CoefficientTable,
    v: &CoefficientTable,
    q: i64,
    n: usize,
) -> Complex64 {
    let n_i = n as i64;
    let mut acc = CompensatedComplex::default();
    for l in -n_i..=n_i {
        acc.add(u.at(l) * v.at(q - l));
    }
    acc.value() / (2 * n + 1) as f64
}

/// Tolerance for conjugate symmetry: `|c(-l) - conj c(l)| <= ATOL + RTOL |c(l)|`.
pub const SYMMETRY_ATOL: f64 = 1e-12;
pub const SYMMETRY_RTOL: f64 = 1e-10;

fn check_symmetry(coeffs: &CoefficientTable, degree: usize) -> Result<()> {
    for l in 0..=degree as i64 {
        let c = coeffs.at(l);
        let deviation = if l == 0 {
            c.im.abs()
        } else {
            (coeffs.at(-l) - c.conj()).norm()
        };
        if deviation > SYMMETRY_ATOL + SYMMETRY_RTOL * c.norm() {
            return Err(Error::NotConjugateSymmetric { q: l, deviation });
        }
    }
    Ok(())
}

fn check_degree(coeffs: &CoefficientTable, degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(Error::ZeroOrder);
    }
    if degree > coeffs.q_max {
        return Err(Error::BandTooNarrow {
            requested: degree as i64,
            available: coeffs.q_max,
        });
    }
    check_symmetry(coeffs, degree)
}

/// `Σ_{|l|<=M} (1 - |l|/M) c(l) e^{ilt}`, which is real for
/// conjugate-symmetric coefficients.
pub fn fejer_polynomial(coeffs: &CoefficientTable, degree: usize, t: f64) -> Result<f64> {
    check_degree(coeffs, degree)?;
    fejer_unchecked(coeffs, degree, t)
}

/// [`fejer_polynomial`] over a grid of evaluation times.
pub fn fejer_polynomial_on_grid(
    coeffs: &CoefficientTable,
    degree: usize,
    ts: &[f64],
) -> Result<Vec<f64>> {
    check_degree(coeffs, degree)?;
    Execution::default().try_map_indexed(ts.len(), |i| fejer_unchecked(coeffs, degree, ts[i]))
}

fn fejer_unchecked(coeffs: &CoefficientTable, degree: usize, t: f64) -> Result<f64> {
    let m = degree as i64;
    let mf = degree as f64;
    let mut acc = CompensatedComplex::default();
    for l in -m..=m {
        let weight = 1.0 - l.unsigned_abs() as f64 / mf;
        if weight == 0.0 {
            continue;
        }
        acc.add(coeffs.at(l) * Complex64::from_polar(weight, l as f64 * t));
    }
    let z = acc.value();
    if z.im.abs() >= 1e-9 * (1.0 + z.re.abs()) {
        return Err(Error::ImaginaryResidue { t, residue: z.im });
    }
    Ok(z.re)
}
