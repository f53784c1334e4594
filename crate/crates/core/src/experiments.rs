//! Monte Carlo harness for the convergence behaviour of the estimator.
//!
//! Replicate `r` of a run with master seed `s` draws every random number from
//! `StreamKey::new(s, r)`, so replicates run in parallel and aggregate in
//! index order with results independent of the thread count.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    coefficients_from_increments_with, coupled_degree, estimate_coefficients, inversion_check_with,
    EstimatorConfig, SpotEstimate, SpotKind,
};
use crate::exec::Execution;
use crate::fourier_series::{
    fejer_polynomial, fejer_polynomial_on_grid, function_coefficients, increment_coefficients_with,
    jump_coefficients, CoefficientTable, ObservedIncrements,
};
use crate::kernels::reduce_angle;
use crate::market_sim::{
    simulate_path, JumpModelCpp, JumpRecord, MarkLaw, ModelSpec, VolatilityModel,
};
use crate::numeric::{circular_distance, linspace, mean_std, quantile};
use crate::partition::PartitionSpec;
use crate::rng::StreamKey;

/// Smallest replicate count accepted for a statistical sweep.
pub const MIN_REPLICATES: usize = 30;

/// Fejér degree as a function of the Bohr cutoff: `M(N) = ⌊c N^r⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub c: f64,
    pub r: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling { c: 1.0, r: 0.4 }
    }
}

impl Coupling {
    pub fn new(c: f64, r: f64) -> Result<Self> {
        let coupling = Coupling { c, r };
        coupling.validate()?;
        Ok(coupling)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(
                "coupling c",
                self.c,
                "must be finite and > 0",
            ));
        }
        if !(self.r > 0.0 && self.r < 0.5) {
            return Err(Error::invalid("coupling r", self.r, "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    pub fn degree(&self, harmonics: usize) -> usize {
        coupled_degree(harmonics, self.c, self.r)
    }
}

/// A sweep of the coefficient error over Bohr cutoffs `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub coupling: Coupling,
    pub grid: PartitionSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub jumps: Option<JumpModelCpp>,
    pub replicates: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_increasing_positive("n_values", &self.n_values)?;
        self.coupling.validate()?;
        self.grid.validate()?;
        self.model.build()?;
        if let Some(j) = &self.jumps {
            j.validate()?;
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(
                "replicates",
                self.replicates,
                "at least 30 are required",
            ));
        }
        Ok(())
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.n_values
            .iter()
            .map(|&n| self.coupling.degree(n))
            .collect()
    }
}

fn check_increasing_positive(name: &'static str, xs: &[usize]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Empty(name));
    }
    if xs[0] == 0 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            name,
            format!("{xs:?}"),
            "must be positive and strictly increasing",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub harmonics: usize,
    pub degree: usize,
    pub mean: f64,
    pub std: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `errors[k][r]` is the sup-error of replicate `r` at the `k`-th cutoff.
    pub errors: Vec<Vec<f64>>,
}

/// One replicate's sup-error at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateError {
    pub harmonics: usize,
    pub replicate: usize,
    pub error: f64,
}

impl SweepOutcome {
    /// Every `(N, replicate)` error in row order.
    pub fn replicate_errors(&self) -> impl Iterator<Item = ReplicateError> + '_ {
        self.rows.iter().zip(&self.errors).flat_map(|(row, errs)| {
            errs.iter()
                .enumerate()
                .map(move |(replicate, &error)| ReplicateError {
                    harmonics: row.harmonics,
                    replicate,
                    error,
                })
        })
    }

    /// Log-log fit of mean sup-error against `N`.
    pub fn rate_fit(&self) -> Result<RateFit> {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.harmonics as f64, r.mean))
            .collect();
        rate_regression(&points)
    }
}

fn summarize(harmonics: usize, degree: usize, errors: &[f64]) -> SweepRow {
    let (mean, std) = mean_std(errors);
    SweepRow {
        harmonics,
        degree,
        mean,
        std,
        std_err: std / (errors.len() as f64).sqrt(),
    }
}

/// Transposes per-replicate rows into per-setting columns.
fn transpose(per_replicate: Vec<Vec<f64>>, settings: usize) -> Vec<Vec<f64>> {
    (0..settings)
        .map(|k| per_replicate.iter().map(|row| row[k]).collect())
        .collect()
}

/// For every `N`: `sup_{|q| <= M(N)} |c(q) - F[V](q)|` per replicate, where
/// `F[V]` is the Riemann sum of the simulated spot variance plus, when jumps
/// are simulated, the squared-jump coefficients.
pub fn coefficient_error_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    coefficient_error_sweep_with(config, Execution::default())
}

pub fn coefficient_error_sweep_with(config: &SweepConfig, exec: Execution) -> Result<SweepOutcome> {
    config.validate()?;
    let model = config.model.build()?;
    let degrees = config.degrees();
    let per_replicate = exec.try_map_indexed(config.replicates, |r| {
        replicate_errors(config, &model, &degrees, r)
    })?;
    let errors = transpose(per_replicate, degrees.len());
    let rows = config
        .n_values
        .iter()
        .zip(&degrees)
        .zip(&errors)
        .map(|((&n, &m), e)| summarize(n, m, e))
        .collect();
    Ok(SweepOutcome { rows, errors })
}

fn replicate_errors(
    config: &SweepConfig,
    model: &VolatilityModel,
    degrees: &[usize],
    r: usize,
) -> Result<Vec<f64>> {
    let key = StreamKey::new(config.seed, r as u64);
    let path = simulate_path(model, config.jumps.as_ref(), &config.grid, key)?;
    let obs = path.observe()?;
    let m_max = degrees.iter().copied().max().unwrap_or(0);
    let band = config
        .n_values
        .iter()
        .zip(degrees)
        .map(|(n, m)| n + m)
        .max()
        .unwrap_or(0);
    let incr = increment_coefficients_with(&obs, band, Execution::Sequential);
    let mut truth = function_coefficients(&path.times, &path.spot_variance, m_max)?;
    if !path.jumps.is_empty() {
        truth = truth.sum(&jump_coefficients(&path.jumps, m_max));
    }
    config
        .n_values
        .iter()
        .zip(degrees)
        .map(|(&n, &m)| sup_error(&incr, &truth, n, m))
        .collect()
}

fn sup_error(
    incr: &CoefficientTable,
    truth: &CoefficientTable,
    harmonics: usize,
    degree: usize,
) -> Result<f64> {
    let est = coefficients_from_increments_with(incr, harmonics, degree, Execution::Sequential)?;
    Ok(est.difference(truth).sup_norm())
}

/// Least-squares line through `(log N, log error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `log error = intercept + slope log N` to `(N, error)` pairs.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::invalid(
            "rate regression points",
            points.len(),
            "at least 4 are required",
        ));
    }
    for &(n, e) in points {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("N", n, "must be finite and > 0"));
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::invalid("error", e, "must be finite and > 0"));
        }
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "N",
            "constant",
            "needs at least two distinct values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Threshold `τ(N)` defining the large-error event `sup-error >= τ(N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSchedule {
    /// The empirical `quantile` of the errors at the smallest `N`, scaled by
    /// `(N / N_min)^exponent`.
    Anchored {
        quantile: f64,
        exponent: f64,
    },
    Constant {
        tau: f64,
    },
    PerN {
        taus: Vec<f64>,
    },
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule::Anchored {
            quantile: 0.95,
            exponent: -0.25,
        }
    }
}

impl ThresholdSchedule {
    pub fn thresholds(&self, outcome: &SweepOutcome) -> Result<Vec<f64>> {
        let k = outcome.rows.len();
        let taus = match self {
            ThresholdSchedule::Anchored {
                quantile: p,
                exponent,
            } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid("quantile", p, "must lie in [0, 1]"));
                }
                let first = outcome.errors.first().ok_or(Error::Empty("sweep"))?;
                let anchor = quantile(first, *p);
                let n0 = outcome.rows[0].harmonics as f64;
                outcome
                    .rows
                    .iter()
                    .map(|r| anchor * (r.harmonics as f64 / n0).powf(*exponent))
                    .collect()
            }
            ThresholdSchedule::Constant { tau } => vec![*tau; k],
            ThresholdSchedule::PerN { taus } => {
                if taus.len() != k {
                    return Err(Error::LengthMismatch {
                        left: taus.len(),
                        right: k,
                    });
                }
                taus.clone()
            }
        };
        if let Some(t) = taus.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::invalid("threshold", t, "must be >= 0"));
        }
        Ok(taus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventFrequency {
    pub harmonics: usize,
    pub threshold: f64,
    pub frequency: f64,
}

/// Fraction of replicates whose sup-error reaches `τ(N)`, per `N`.
pub fn event_frequencies(
    outcome: &SweepOutcome,
    schedule: &ThresholdSchedule,
) -> Result<Vec<EventFrequency>> {
    let taus = schedule.thresholds(outcome)?;
    Ok(outcome
        .rows
        .iter()
        .zip(&outcome.errors)
        .zip(taus)
        .map(|((row, errs), tau)| EventFrequency {
            harmonics: row.harmonics,
            threshold: tau,
            frequency: errs.iter().filter(|&&e| e >= tau).count() as f64 / errs.len() as f64,
        })
        .collect())
}

/// Runs the sweep and reports [`event_frequencies`].
pub fn error_event_frequency(
    config: &SweepConfig,
    schedule: &ThresholdSchedule,
) -> Result<Vec<EventFrequency>> {
    event_frequencies(&coefficient_error_sweep(config)?, schedule)
}

/// Number of consecutive steps in `xs` that do not increase.
pub fn count_non_increasing(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] <= w[0]).count()
}

/// Holds `N` fixed and refines a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub harmonics: usize,
    #[serde(default)]
    pub coupling: Coupling,
    /// Regular cell counts, increasing, each dividing the last.
    pub cells: Vec<usize>,
    pub model: ModelSpec,
    pub replicates: usize,
    pub seed: u64,
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 {
            return Err(Error::ZeroOrder);
        }
        self.coupling.validate()?;
        check_increasing_positive("cells", &self.cells)?;
        let finest = *self.cells.last().unwrap_or(&0);
        if let Some(m) = self.cells.iter().find(|&&m| !finest.is_multiple_of(m)) {
            return Err(Error::invalid(
                "cells",
                m,
                "must divide the finest cell count",
            ));
        }
        self.model.build()?;
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(
                "replicates",
                self.replicates,
                "at least 30 are required",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementRow {
    pub cells: usize,
    pub mean: f64,
    pub std: f64,
    pub std_err: f64,
}

/// Mean sup-error over `|q| <= M(N)` on each grid. Every replicate simulates
/// once on the finest grid and observes the same path on the coarser ones.
pub fn refinement_sweep(config: &RefinementConfig) -> Result<Vec<RefinementRow>> {
    config.validate()?;
    let model = config.model.build()?;
    let n = config.harmonics;
    let m = config.coupling.degree(n);
    let finest = *config.cells.last().expect("validated");
    let per_replicate = Execution::default().try_map_indexed(config.replicates, |r| {
        let path = simulate_path(
            &model,
            None,
            &PartitionSpec::Regular(finest),
            StreamKey::new(config.seed, r as u64),
        )?;
        config
            .cells
            .iter()
            .map(|&cells| {
                let stride = finest / cells;
                let idx = (0..=cells).map(|i| i * stride);
                let times: Vec<f64> = idx.clone().map(|k| path.times[k]).collect();
                let levels: Vec<f64> = idx.clone().map(|k| path.price[k]).collect();
                let vol: Vec<f64> = idx.map(|k| path.spot_variance[k]).collect();
                let obs = ObservedIncrements::from_levels(&times, &levels)?;
                let incr = increment_coefficients_with(&obs, n + m, Execution::Sequential);
                let truth = function_coefficients(&times, &vol, m)?;
                sup_error(&incr, &truth, n, m)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let errors = transpose(per_replicate, config.cells.len());
    Ok(config
        .cells
        .iter()
        .zip(&errors)
        .map(|(&cells, e)| {
            let row = summarize(n, m, e);
            RefinementRow {
                cells,
                mean: row.mean,
                std: row.std,
                std_err: row.std_err,
            }
        })
        .collect())
}

/// Default degrees of the jump-recovery demo.
pub const DEMO_DEGREES: [usize; 4] = [10, 50, 100, 700];

/// Squared-jump recovery on one simulated jump-diffusion path
/// `dP = σ (sin t + 2) dW + dJ`, with `J` a compensated Poisson process of
/// unit jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecoveryConfig {
    pub degrees: Vec<usize>,
    pub harmonics: usize,
    pub cells: usize,
    pub eval_points: usize,
    pub intensity: f64,
    pub sigma: f64,
    /// Evaluation points at least this far from every jump count as off-jump.
    pub off_jump_distance: f64,
    pub seed: u64,
}

impl Default for JumpRecoveryConfig {
    fn default() -> Self {
        JumpRecoveryConfig {
            degrees: DEMO_DEGREES.to_vec(),
            harmonics: 16_384,
            cells: 100_000,
            eval_points: 2001,
            intensity: 2.0,
            sigma: 1.0,
            off_jump_distance: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub degree: usize,
    /// Estimate at each true jump time, in jump order.
    pub values_at_jumps: Vec<f64>,
    pub off_jump_max: f64,
    /// Fraction of off-jump evaluation points with value at most `0.15`.
    pub off_jump_within: f64,
    /// Median full width at half maximum of the peaks around the jumps;
    /// `2π` when a peak never falls to half its height.
    pub median_fwhm: f64,
    #[serde(skip)]
    pub off_jump_values: Vec<f64>,
}

/// Off-jump tolerance reported in [`DegreeSummary::off_jump_within`].
pub const OFF_JUMP_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecovery {
    pub config: JumpRecoveryConfig,
    pub jumps: JumpRecord,
    pub estimates: Vec<SpotEstimate>,
    pub summaries: Vec<DegreeSummary>,
}

/// Runs [`jump_recovery_with`] with the default parameters.
pub fn jump_recovery_experiment(degrees: &[usize], seed: u64) -> Result<JumpRecovery> {
    jump_recovery_with(&JumpRecoveryConfig {
        degrees: degrees.to_vec(),
        seed,
        ..JumpRecoveryConfig::default()
    })
}

pub fn jump_recovery_with(config: &JumpRecoveryConfig) -> Result<JumpRecovery> {
    if config.degrees.is_empty() {
        return Err(Error::Empty("degrees"));
    }
    if !(config.off_jump_distance > 0.0) {
        return Err(Error::invalid(
            "off_jump_distance",
            config.off_jump_distance,
            "must be > 0",
        ));
    }
    let model = VolatilityModel::SinusoidalShift(config.sigma);
    let jumps = JumpModelCpp::new(config.intensity, MarkLaw::Unit, true)?;
    let path = simulate_path(
        &model,
        Some(&jumps),
        &PartitionSpec::Regular(config.cells),
        StreamKey::new(config.seed, 0),
    )?;
    let obs = path.observe()?;
    let m_max = *config.degrees.iter().max().expect("nonempty");
    let coeffs = estimate_coefficients(&obs, config.harmonics, m_max)?;
    let grid = linspace(-PI, PI, config.eval_points);
    let jump_times: Vec<f64> = path.jumps.events().iter().map(|e| e.time).collect();

    let mut estimates = Vec::with_capacity(config.degrees.len());
    let mut summaries = Vec::with_capacity(config.degrees.len());
    for &degree in &config.degrees {
        let est_config = EstimatorConfig::new(config.harmonics, degree, true, grid.clone())?;
        let scale = TAU / degree as f64;
        let values: Vec<f64> = fejer_polynomial_on_grid(&coeffs, degree, &grid)?
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let values_at_jumps: Vec<f64> = fejer_polynomial_on_grid(&coeffs, degree, &jump_times)?
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let off_jump_values: Vec<f64> = grid
            .iter()
            .zip(&values)
            .filter(|(t, _)| {
                jump_times
                    .iter()
                    .all(|&z| circular_distance(**t, z) >= config.off_jump_distance)
            })
            .map(|(_, &v)| v)
            .collect();
        let off_jump_max = off_jump_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let off_jump_within = if off_jump_values.is_empty() {
            1.0
        } else {
            off_jump_values
                .iter()
                .filter(|&&v| v <= OFF_JUMP_TOLERANCE)
                .count() as f64
                / off_jump_values.len() as f64
        };
        let widths = jump_times
            .iter()
            .map(|&z| half_max_width(&coeffs, degree, z))
            .collect::<Result<Vec<f64>>>()?;
        summaries.push(DegreeSummary {
            degree,
            values_at_jumps,
            off_jump_max,
            off_jump_within,
            median_fwhm: if widths.is_empty() {
                f64::NAN
            } else {
                quantile(&widths, 0.5)
            },
            off_jump_values,
        });
        estimates.push(SpotEstimate {
            times: grid.clone(),
            values,
            config: est_config,
            kind: SpotKind::QuadraticJumps,
        });
    }
    Ok(JumpRecovery {
        config: config.clone(),
        jumps: path.jumps,
        estimates,
        summaries,
    })
}

/// Width of the region around `center` where the polynomial stays above
/// half its value at `center`, scanned in steps of `2π/(64 M)`.
fn half_max_width(coeffs: &CoefficientTable, degree: usize, center: f64) -> Result<f64> {
    let peak = fejer_polynomial(coeffs, degree, center)?;
    let step = TAU / (64.0 * degree as f64);
    let steps = (PI / step).ceil() as usize;
    let mut width = 0.0;
    for sign in [-1.0, 1.0] {
        let mut side = PI;
        for k in 1..=steps {
            let d = k as f64 * step;
            if fejer_polynomial(coeffs, degree, reduce_angle(center + sign * d))? < 0.5 * peak {
                side = d.min(PI);
                break;
            }
        }
        width += side;
    }
    Ok(width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionRow {
    pub set: usize,
    pub harmonics: usize,
    pub t: f64,
    pub error: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionSweep {
    pub rows: Vec<InversionRow>,
}

impl InversionSweep {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InversionRow> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

/// Checks the deterministic Fejér inversion bound for every jump set, cutoff
/// and evaluation time.
pub fn inversion_bound_sweep(
    sets: &[JumpRecord],
    n_values: &[usize],
    ts: &[f64],
) -> Result<InversionSweep> {
    let n_max = n_values.iter().copied().max().unwrap_or(0);
    if n_values.contains(&0) {
        return Err(Error::ZeroOrder);
    }
    let mut rows = Vec::with_capacity(sets.len() * n_values.len() * ts.len());
    for (set, jumps) in sets.iter().enumerate() {
        let coeffs = jump_coefficients(jumps, n_max);
        for &n in n_values {
            for (check, &t) in inversion_check_with(jumps, &coeffs, n, ts)?
                .into_iter()
                .zip(ts)
            {
                rows.push(InversionRow {
                    set,
                    harmonics: n,
                    t,
                    error: check.error,
                    bound: check.bound,
                    passed: check.passed(),
                });
            }
        }
    }
    Ok(InversionSweep { rows })
}
