//! Spot volatility and squared-jump reconstruction.
//!
//! From the increment coefficients `F(l)` of an observed path the volatility
//! coefficients are the Bohr-convolution partial sums
//!
//! ```text
//! c(q) = 2π/(2N+1) Σ_{|l|<=N} F(l) F(q-l)
//! ```
//!
//! and the spot path is the Fejér polynomial of degree `M` built on them.
//! Dividing that polynomial by `M/2π` localizes it on jumps instead, giving
//! the squared jump sizes.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fourier_series::{
    bohr_unchecked, fejer_polynomial_on_grid, function_coefficients, increment_coefficients_with,
    jump_coefficients, CoefficientTable, ObservedIncrements,
};
use crate::kernels::{dirichlet_rescaled, KernelOrder};
use crate::market_sim::{local_jump_mass_periodic, JumpRecord};
use crate::numeric::{linspace, CompensatedComplex};

/// Mixed tolerance used when comparing estimator outputs.
pub const ATOL: f64 = 1e-12;
pub const RTOL: f64 = 1e-10;

/// Cap on the default Bohr cutoff.
pub const MAX_DEFAULT_HARMONICS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    /// Bohr-convolution cutoff `N`.
    pub harmonics: usize,
    /// Fejér degree `M`.
    pub degree: usize,
    pub rescale_jumps: bool,
    #[serde(skip)]
    pub eval_grid: Vec<f64>,
}

impl EstimatorConfig {
    pub fn new(
        harmonics: usize,
        degree: usize,
        rescale_jumps: bool,
        eval_grid: Vec<f64>,
    ) -> Result<Self> {
        let cfg = EstimatorConfig {
            harmonics,
            degree,
            rescale_jumps,
            eval_grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `k` equally spaced evaluation points on `[-π, π]`.
    pub fn with_regular_grid(
        harmonics: usize,
        degree: usize,
        rescale_jumps: bool,
        points: usize,
    ) -> Result<Self> {
        Self::new(
            harmonics,
            degree,
            rescale_jumps,
            linspace(-std::f64::consts::PI, std::f64::consts::PI, points),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 || self.degree == 0 {
            return Err(Error::ZeroOrder);
        }
        if self.eval_grid.is_empty() {
            return Err(Error::Empty("evaluation grid"));
        }
        for (index, &t) in self.eval_grid.iter().enumerate() {
            if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&t) {
                return Err(Error::TimeOutOfRange { index, value: t });
            }
        }
        for (i, w) in self.eval_grid.windows(2).enumerate() {
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

    /// Width of the increment-coefficient band the estimate needs, `N + M`.
    pub fn required_band(&self) -> usize {
        self.harmonics + self.degree
    }
}

/// `min(⌊m/2⌋, 4096)`, at least 1.
pub fn default_harmonics(observations: usize) -> usize {
    (observations / 2).clamp(1, MAX_DEFAULT_HARMONICS)
}

/// `⌊c N^r⌋`, at least 1.
pub fn coupled_degree(harmonics: usize, c: f64, r: f64) -> usize {
    ((c * (harmonics as f64).powf(r)).floor() as usize).max(1)
}

/// Default `M` for a given `N`: `c = 1`, `r = 0.4`.
pub fn default_degree(harmonics: usize) -> usize {
    coupled_degree(harmonics, 1.0, 0.4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpotKind {
    Volatility,
    QuadraticJumps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotEstimate {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub config: EstimatorConfig,
    pub kind: SpotKind,
}

/// Volatility coefficients `c(q)` for `|q| <= q_max` with Bohr cutoff `N`.
pub fn estimate_coefficients(
    obs: &ObservedIncrements,
    harmonics: usize,
    q_max: usize,
) -> Result<CoefficientTable> {
    estimate_coefficients_with(obs, harmonics, q_max, Execution::default())
}

pub fn estimate_coefficients_with(
    obs: &ObservedIncrements,
    harmonics: usize,
    q_max: usize,
    exec: Execution,
) -> Result<CoefficientTable> {
    if harmonics == 0 {
        return Err(Error::ZeroOrder);
    }
    let incr = increment_coefficients_with(obs, harmonics + q_max, exec);
    coefficients_from_increments_with(&incr, harmonics, q_max, exec)
}

/// Volatility coefficients from precomputed increment coefficients, which
/// must cover `|l| <= N + q_max`. Lets one increment table serve a sweep
/// over `N`.
pub fn coefficients_from_increments(
    incr: &CoefficientTable,
    harmonics: usize,
    q_max: usize,
) -> Result<CoefficientTable> {
    coefficients_from_increments_with(incr, harmonics, q_max, Execution::default())
}

pub fn coefficients_from_increments_with(
    incr: &CoefficientTable,
    harmonics: usize,
    q_max: usize,
    exec: Execution,
) -> Result<CoefficientTable> {
    if harmonics == 0 {
        return Err(Error::ZeroOrder);
    }
    let needed = harmonics + q_max;
    if incr.q_max() < needed {
        return Err(Error::BandTooNarrow {
            requested: needed as i64,
            available: incr.q_max(),
        });
    }
    let half = exec.map_indexed(q_max + 1, |q| {
        TAU * bohr_unchecked(incr, incr, q as i64, harmonics)
    });
    CoefficientTable::from_nonnegative(half)
}

/// Brute-force expansion of the volatility coefficient:
/// `(1/2π) Σ_i Σ_j e^{-iqt_j} D̃_N(t_i - t_j) δX_i δX_j`.
///
/// Quadratic in the number of increments; used as an independent check on
/// [`estimate_coefficients`].
pub fn double_sum_oracle(obs: &ObservedIncrements, harmonics: usize, q: i64) -> Result<Complex64> {
    let n = KernelOrder::new(harmonics)?;
    let (t, x) = (obs.times(), obs.increments());
    let mut acc = CompensatedComplex::default();
    for j in 0..t.len() {
        let phase = Complex64::from_polar(x[j], -(q as f64) * t[j]);
        for i in 0..t.len() {
            acc.add(phase * (dirichlet_rescaled(n, t[i] - t[j]) * x[i]));
        }
    }
    Ok(acc.value() / TAU)
}

fn reconstruct(
    obs: &ObservedIncrements,
    config: &EstimatorConfig,
    scale: f64,
    kind: SpotKind,
) -> Result<SpotEstimate> {
    config.validate()?;
    let coeffs = estimate_coefficients(obs, config.harmonics, config.degree)?;
    let mut values = fejer_polynomial_on_grid(&coeffs, config.degree, &config.eval_grid)?;
    if scale != 1.0 {
        values.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(SpotEstimate {
        times: config.eval_grid.clone(),
        values,
        config: config.clone(),
        kind,
    })
}

/// Fejér reconstruction of the spot variance path.
pub fn estimate_spot_path(
    obs: &ObservedIncrements,
    config: &EstimatorConfig,
) -> Result<SpotEstimate> {
    if config.rescale_jumps {
        return Err(Error::invalid(
            "rescale_jumps",
            true,
            "use estimate_jump_squares for the rescaled estimator",
        ));
    }
    reconstruct(obs, config, 1.0, SpotKind::Volatility)
}

/// The same polynomial times `2π/M`, which converges to `ΔJ_t²`.
pub fn estimate_jump_squares(
    obs: &ObservedIncrements,
    config: &EstimatorConfig,
) -> Result<SpotEstimate> {
    if !config.rescale_jumps {
        return Err(Error::invalid(
            "rescale_jumps",
            false,
            "the squared-jump estimator needs rescale_jumps set",
        ));
    }
    reconstruct(
        obs,
        config,
        TAU / config.degree as f64,
        SpotKind::QuadraticJumps,
    )
}

/// Dispatches on `config.rescale_jumps`.
pub fn estimate(obs: &ObservedIncrements, config: &EstimatorConfig) -> Result<SpotEstimate> {
    if config.rescale_jumps {
        estimate_jump_squares(obs, config)
    } else {
        estimate_spot_path(obs, config)
    }
}

/// Estimated minus true volatility coefficients on `|q| <= q_max`. On paths
/// with jumps the result also carries the jump coefficients.
pub fn residual_diagnostic(
    obs: &ObservedIncrements,
    vol_times: &[f64],
    vol_values: &[f64],
    harmonics: usize,
    q_max: usize,
) -> Result<CoefficientTable> {
    let est = estimate_coefficients(obs, harmonics, q_max)?;
    let truth = function_coefficients(vol_times, vol_values, q_max)?;
    Ok(est.difference(&truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionCheck {
    pub error: f64,
    pub bound: f64,
}

impl InversionCheck {
    pub const SLACK: f64 = 1e-9;

    pub fn passed(&self) -> bool {
        self.error <= self.bound + Self::SLACK
    }
}

/// Compares the rescaled Fejér polynomial of the squared jumps,
/// `(2π/N) T_N[ΔΦ²](t)`, against `ΔΦ_t²` and returns the error together with
/// the bound `M_t(N^{-1/2}) + [Φ] π²/N`.
pub fn fejer_inversion_bound_check(
    jumps: &JumpRecord,
    harmonics: usize,
    t: f64,
) -> Result<InversionCheck> {
    let coeffs = jump_coefficients(jumps, harmonics);
    inversion_check_with(jumps, &coeffs, harmonics, &[t]).map(|mut v| v.remove(0))
}

pub(crate) fn inversion_check_with(
    jumps: &JumpRecord,
    coeffs: &CoefficientTable,
    harmonics: usize,
    ts: &[f64],
) -> Result<Vec<InversionCheck>> {
    for (index, &t) in ts.iter().enumerate() {
        if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&t) {
            return Err(Error::TimeOutOfRange { index, value: t });
        }
    }
    let n = harmonics as f64;
    let values = fejer_polynomial_on_grid(coeffs, harmonics, ts)?;
    let qv = jumps.quadratic_variation();
    let delta = n.sqrt().recip();
    ts.iter()
        .zip(values)
        .map(|(&t, v)| {
            let error = (TAU / n * v - jumps.squared_jump_at(t)).abs();
            let bound =
                local_jump_mass_periodic(jumps, t, delta)? + qv * std::f64::consts::PI.powi(2) / n;
            Ok(InversionCheck { error, bound })
        })
        .collect()
}
