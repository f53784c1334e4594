//! Ground-truth sample paths on `[-π, π]`: Euler–Maruyama diffusions,
//! compensated compound Poisson jumps, and their sum.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier_series::ObservedIncrements;
use crate::numeric::circular_distance;
use crate::partition::PartitionSpec;
use crate::rng::{Component, StreamKey};

/// Diffusion coefficient `σ(t, x)` of `dH = σ dW`.
#[derive(Clone)]
pub enum VolatilityModel {
    /// `σ ≡ c`.
    Constant(f64),
    /// `σ(t) = σ₀ (sin t + 2)`, so `σ ∈ [σ₀, 3σ₀]`.
    SinusoidalShift(f64),
    StateDependent(StateDependentVol),
}

impl fmt::Debug for VolatilityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolatilityModel::Constant(c) => write!(f, "Constant({c})"),
            VolatilityModel::SinusoidalShift(s) => write!(f, "SinusoidalShift({s})"),
            VolatilityModel::StateDependent(s) => write!(f, "StateDependent({})", s.label),
        }
    }
}

type SigmaFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A state-dependent coefficient with declared Lipschitz constant `L` in `x`
/// and linear growth constant `K`: `σ(t, x)² <= K² (1 + x²)`.
///
/// Both declarations are probed on a `(t, x)` lattice at construction and
/// the model is rejected if either fails there.
#[derive(Clone)]
pub struct StateDependentVol {
    label: String,
    sigma: Arc<SigmaFn>,
    lipschitz: f64,
    growth: f64,
}

impl StateDependentVol {
    /// Half-width of the `x` range probed at construction.
    pub const PROBE_RADIUS: f64 = 100.0;

    pub fn new(
        label: impl Into<String>,
        sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        growth: f64,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(
                "lipschitz",
                lipschitz,
                "must be finite and >= 0",
            ));
        }
        if !(growth >= 0.0 && growth.is_finite()) {
            return Err(Error::invalid("growth", growth, "must be finite and >= 0"));
        }
        let ts: Vec<f64> = (0..=32).map(|i| -PI + PI * i as f64 / 16.0).collect();
        let dx = 0.25;
        let xs: Vec<f64> = (0..=800)
            .map(|i| -Self::PROBE_RADIUS + dx * i as f64)
            .collect();
        for &t in &ts {
            let mut prev: Option<f64> = None;
            for &x in &xs {
                let s = sigma(t, x);
                if !s.is_finite() {
                    return Err(Error::invalid(
                        "sigma",
                        format!("sigma({t}, {x}) = {s}"),
                        "not finite",
                    ));
                }
                if s * s > growth * growth * (1.0 + x * x) * (1.0 + 1e-12) {
                    return Err(Error::invalid(
                        "sigma",
                        format!("sigma({t}, {x}) = {s}"),
                        "violates the linear growth bound",
                    ));
                }
                if let Some(p) = prev {
                    if (s - p).abs() > lipschitz * dx * (1.0 + 1e-9) + 1e-12 {
                        return Err(Error::invalid(
                            "sigma",
                            format!("near ({t}, {x})"),
                            "violates the declared Lipschitz constant",
                        ));
                    }
                }
                prev = Some(s);
            }
        }
        Ok(StateDependentVol {
            label: label.into(),
            sigma: Arc::new(sigma),
            lipschitz,
            growth,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }
}

impl VolatilityModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VolatilityModel::Constant(c) if !(c >= 0.0 && c.is_finite()) => Err(Error::invalid(
                "constant volatility",
                c,
                "must be finite and >= 0",
            )),
            VolatilityModel::SinusoidalShift(s) if !(s > 0.0 && s.is_finite()) => Err(
                Error::invalid("sinusoidal scale", s, "must be finite and > 0"),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        match self {
            VolatilityModel::Constant(c) => *c,
            VolatilityModel::SinusoidalShift(s) => s * (t.sin() + 2.0),
            VolatilityModel::StateDependent(m) => (m.sigma)(t, x),
        }
    }
}

/// Serializable description of a [`VolatilityModel`], also parsed from the
/// command line as `constant:C`, `sinshift:S0` or `tanh:A,B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Constant {
        c: f64,
    },
    SinShift {
        scale: f64,
    },
    /// `σ(t, x) = a + b tanh(x)`.
    Tanh {
        a: f64,
        b: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<VolatilityModel> {
        let model = match *self {
            ModelSpec::Constant { c } => VolatilityModel::Constant(c),
            ModelSpec::SinShift { scale } => VolatilityModel::SinusoidalShift(scale),
            ModelSpec::Tanh { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::invalid(
                        "tanh model",
                        format!("{a},{b}"),
                        "must be finite",
                    ));
                }
                VolatilityModel::StateDependent(StateDependentVol::new(
                    format!("tanh:{a},{b}"),
                    move |_, x| a + b * x.tanh(),
                    b.abs(),
                    a.abs() + b.abs(),
                )?)
            }
        };
        model.validate()?;
        Ok(model)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("model", s, "expected constant:C, sinshift:S0 or tanh:A,B");
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("constant", [c]) => Ok(ModelSpec::Constant { c: *c }),
            ("sinshift", [s]) => Ok(ModelSpec::SinShift { scale: *s }),
            ("tanh", [a, b]) => Ok(ModelSpec::Tanh { a: *a, b: *b }),
            _ => Err(bad()),
        }
    }
}

/// Bounded i.i.d. jump-size law with `|Y| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum MarkLaw {
    /// `Y ≡ 1`.
    Unit,
    /// `Y = ±1` with equal probability.
    Rademacher,
    /// Uniform on `[low, high] ⊂ [-1, 1]`.
    Uniform { low: f64, high: f64 },
}

impl MarkLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            MarkLaw::Unit => 1.0,
            MarkLaw::Rademacher => 0.0,
            MarkLaw::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    fn validate(&self) -> Result<()> {
        if let MarkLaw::Uniform { low, high } = *self {
            if !(-1.0..=1.0).contains(&low) || !(-1.0..=1.0).contains(&high) || !(low < high) {
                return Err(Error::invalid(
                    "uniform marks",
                    format!("[{low}, {high}]"),
                    "need -1 <= low < high <= 1",
                ));
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::Unit => 1.0,
            MarkLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MarkLaw::Uniform { low, high } => loop {
                let y = low + (high - low) * rng.random::<f64>();
                if y != 0.0 {
                    break y;
                }
            },
        }
    }
}

/// Compound Poisson jumps `Σ Y_n 1[τ_n <= t]`, optionally compensated by
/// `λ (t + π)` with `λ = λ̃ E[Y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpModelCpp {
    pub intensity: f64,
    pub marks: MarkLaw,
    #[serde(default = "default_true")]
    pub compensate: bool,
}

fn default_true() -> bool {
    true
}

impl JumpModelCpp {
    pub fn new(intensity: f64, marks: MarkLaw, compensate: bool) -> Result<Self> {
        let model = JumpModelCpp {
            intensity,
            marks,
            compensate,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::invalid(
                "jump intensity",
                self.intensity,
                "must be finite and > 0",
            ));
        }
        self.marks.validate()
    }

    /// Drift removed by compensation.
    pub fn compensator_rate(&self) -> f64 {
        if self.compensate {
            self.intensity * self.marks.mean()
        } else {
            0.0
        }
    }
}

impl FromStr for JumpModelCpp {
    type Err = Error;

    /// `lambda=2,marks=unit[,compensate=false]`; marks may be `unit`,
    /// `rademacher` or `uniform:LOW:HIGH`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason| Error::invalid("jumps", s, reason);
        let mut intensity = None;
        let mut marks = MarkLaw::Unit;
        let mut compensate = true;
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad("expected key=value pairs"))?;
            match k.trim() {
                "lambda" => {
                    intensity = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| bad("lambda is not a number"))?,
                    )
                }
                "marks" => {
                    marks = match v.trim().split(':').collect::<Vec<_>>().as_slice() {
                        ["unit"] => MarkLaw::Unit,
                        ["rademacher"] => MarkLaw::Rademacher,
                        ["uniform", lo, hi] => MarkLaw::Uniform {
                            low: lo.parse().map_err(|_| bad("bad uniform bound"))?,
                            high: hi.parse().map_err(|_| bad("bad uniform bound"))?,
                        },
                        _ => return Err(bad("marks must be unit, rademacher or uniform:LOW:HIGH")),
                    }
                }
                "compensate" => {
                    compensate = v
                        .trim()
                        .parse()
                        .map_err(|_| bad("compensate must be true or false"))?
                }
                _ => return Err(bad("unknown key")),
            }
        }
        JumpModelCpp::new(
            intensity.ok_or_else(|| bad("lambda is required"))?,
            marks,
            compensate,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// Exact (off-grid) jump times and sizes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpRecord {
    events: Vec<JumpEvent>,
}

impl JumpRecord {
    pub fn new(events: Vec<JumpEvent>) -> Result<Self> {
        for (index, e) in events.iter().enumerate() {
            if !e.time.is_finite() || !(-PI..=PI).contains(&e.time) {
                return Err(Error::TimeOutOfRange {
                    index,
                    value: e.time,
                });
            }
            if !e.size.is_finite() || e.size == 0.0 {
                return Err(Error::invalid(
                    "jump size",
                    e.size,
                    "must be finite and nonzero",
                ));
            }
        }
        for (i, w) in events.windows(2).enumerate() {
            if !(w[1].time > w[0].time) {
                return Err(Error::NonIncreasingTimes {
                    index: i + 1,
                    prev: w[0].time,
                    next: w[1].time,
                });
            }
        }
        Ok(JumpRecord { events })
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `[J] = Σ ΔJ²`.
    pub fn quadratic_variation(&self) -> f64 {
        self.events.iter().map(|e| e.size * e.size).sum()
    }

    /// `ΔJ_t²`: the squared size of a jump recorded exactly at `t`, else 0.
    pub fn squared_jump_at(&self, t: f64) -> f64 {
        self.events
            .iter()
            .find(|e| e.time == t)
            .map_or(0.0, |e| e.size * e.size)
    }
}

/// Simulated ground truth on a grid `t_0 = -π, ..., t_m = π`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    /// Continuous part `H`.
    pub diffusion: Vec<f64>,
    /// Jump part `J` sampled on the grid.
    pub jump_part: Vec<f64>,
    /// Log-price `P = H + J`.
    pub price: Vec<f64>,
    /// Spot variance `V = σ²(t, H_t)`.
    pub spot_variance: Vec<f64>,
    pub jumps: JumpRecord,
}

impl SamplePath {
    /// Every increment of `P` on the simulation grid.
    pub fn observe(&self) -> Result<ObservedIncrements> {
        ObservedIncrements::from_levels(&self.times, &self.price)
    }
}

/// Euler–Maruyama for `dH = σ(t, H) dW`, `H_{-π} = 0`. Returns `(H, V)` on
/// the grid points, with `V_i = σ²(t_i, H_i)`.
pub fn simulate_diffusion(
    model: &VolatilityModel,
    grid: &PartitionSpec,
    key: impl Into<StreamKey>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    model.validate()?;
    grid.validate()?;
    let times = grid.points();
    let mut rng = key.into().rng(Component::Diffusion);
    let mut h = Vec::with_capacity(times.len());
    let mut v = Vec::with_capacity(times.len());
    let mut x = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let s = model.sigma(t, x);
        h.push(x);
        v.push(s * s);
        if let Some(&next) = times.get(i + 1) {
            let z: f64 = StandardNormal.sample(&mut rng);
            x += s * (next - t).sqrt() * z;
        }
    }
    Ok((h, v))
}

/// Compound Poisson path on the grid plus its exact jump record. Arrivals
/// are cumulative exponential(λ̃) gaps starting from `-π`, truncated at `π`.
pub fn simulate_cpp(
    model: &JumpModelCpp,
    grid: &PartitionSpec,
    key: impl Into<StreamKey>,
) -> Result<(Vec<f64>, JumpRecord)> {
    model.validate()?;
    grid.validate()?;
    let times = grid.points();
    let mut rng = key.into().rng(Component::Jumps);
    let gaps = Exp::new(model.intensity)
        .map_err(|_| Error::invalid("jump intensity", model.intensity, "rejected"))?;
    let mut events = Vec::new();
    let mut tau = -PI;
    loop {
        tau += gaps.sample(&mut rng);
        if tau > PI {
            break;
        }
        events.push(JumpEvent {
            time: tau,
            size: model.marks.sample(&mut rng),
        });
    }
    let rate = model.compensator_rate();
    let mut j = Vec::with_capacity(times.len());
    let mut next = 0;
    let mut level = 0.0;
    for &t in &times {
        while next < events.len() && events[next].time <= t {
            level += events[next].size;
            next += 1;
        }
        j.push(level - rate * (t + PI));
    }
    Ok((j, JumpRecord::new(events)?))
}

pub fn combine_price(h: &[f64], j: &[f64]) -> Result<Vec<f64>> {
    if h.len() != j.len() {
        return Err(Error::LengthMismatch {
            left: h.len(),
            right: j.len(),
        });
    }
    Ok(h.iter().zip(j).map(|(a, b)| a + b).collect())
}

/// Diffusion plus optional jumps on one grid, all drawn from `key`.
pub fn simulate_path(
    model: &VolatilityModel,
    jumps: Option<&JumpModelCpp>,
    grid: &PartitionSpec,
    key: impl Into<StreamKey>,
) -> Result<SamplePath> {
    let key = key.into();
    let (diffusion, spot_variance) = simulate_diffusion(model, grid, key)?;
    let (jump_part, record) = match jumps {
        Some(jm) => simulate_cpp(jm, grid, key)?,
        None => (vec![0.0; diffusion.len()], JumpRecord::default()),
    };
    let price = combine_price(&diffusion, &jump_part)?;
    Ok(SamplePath {
        times: grid.points(),
        diffusion,
        jump_part,
        price,
        spot_variance,
        jumps: record,
    })
}

/// Increments of `P` between consecutive points of `coarse`, stamped at
/// their left endpoints. Each coarse point is snapped to the closest fine
/// grid point at or to its left.
pub fn subsample(path: &SamplePath, coarse: &PartitionSpec) -> Result<ObservedIncrements> {
    coarse.validate()?;
    let fine = &path.times;
    let (first, last) = match (fine.first(), fine.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Empty("sample path")),
    };
    let mut idx = Vec::with_capacity(coarse.cells() + 1);
    for t in coarse.points() {
        if t < first || t > last {
            return Err(Error::NotCovered { time: t });
        }
        let k = fine.partition_point(|&p| p <= t).saturating_sub(1);
        if idx.last() == Some(&k) {
            return Err(Error::NotCovered { time: t });
        }
        idx.push(k);
    }
    let times: Vec<f64> = idx.iter().map(|&k| fine[k]).collect();
    let levels: Vec<f64> = idx.iter().map(|&k| path.price[k]).collect();
    ObservedIncrements::from_levels(&times, &levels)
}

/// `M_t(δ) = Σ ΔJ_z²` over jumps with `0 < |t - z| < δ`.
pub fn local_jump_mass(jumps: &JumpRecord, t: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(local_mass_by(jumps, delta, |z| (t - z).abs()))
}

/// As [`local_jump_mass`] with distance measured around the circle, which
/// is the neighbourhood seen by the 2π-periodic Fejér kernel.
pub fn local_jump_mass_periodic(jumps: &JumpRecord, t: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(local_mass_by(jumps, delta, |z| circular_distance(t, z)))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < PI) {
        return Err(Error::invalid("delta", delta, "must lie in (0, pi)"));
    }
    Ok(())
}

fn local_mass_by(jumps: &JumpRecord, delta: f64, dist: impl Fn(f64) -> f64) -> f64 {
    jumps
        .events()
        .iter()
        .filter(|e| {
            let d = dist(e.time);
            d > 0.0 && d < delta
        })
        .map(|e| e.size * e.size)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_std;

    #[test]
    fn zero_constant_model_is_flat() {
        let (h, v) = simulate_diffusion(
            &VolatilityModel::Constant(0.0),
            &PartitionSpec::Regular(100),
            3,
        )
        .unwrap();
        assert!(h.iter().all(|&x| x == 0.0));
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sinusoidal_variance_range() {
        let (_, v) = simulate_diffusion(
            &VolatilityModel::SinusoidalShift(1.0),
            &PartitionSpec::Regular(5000),
            9,
        )
        .unwrap();
        assert!(v.iter().all(|&x| (1.0..=9.0).contains(&x)));
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        assert!(lo < 1.0 + 1e-6 && hi > 9.0 - 1e-6);
    }

    #[test]
    fn negative_constant_rejected() {
        assert!(simulate_diffusion(
            &VolatilityModel::Constant(-1.0),
            &PartitionSpec::Regular(10),
            1
        )
        .is_err());
        assert!(simulate_diffusion(
            &VolatilityModel::SinusoidalShift(0.0),
            &PartitionSpec::Regular(10),
            1
        )
        .is_err());
    }

    #[test]
    fn terminal_variance_matches_ito_isometry() {
        let c = 0.8;
        let n = 10_000;
        let finals: Vec<f64> = (0..n)
            .map(|r| {
                let (h, _) = simulate_diffusion(
                    &VolatilityModel::Constant(c),
                    &PartitionSpec::Regular(16),
                    StreamKey::new(5, r),
                )
                .unwrap();
                h[16]
            })
            .collect();
        let (_, sd) = mean_std(&finals);
        let target = 2.0 * PI * c * c;
        assert!(
            (sd * sd - target).abs() < 0.05 * target,
            "{} vs {target}",
            sd * sd
        );
    }

    #[test]
    fn growth_violation_rejected() {
        let r = StateDependentVol::new("quadratic", |_, x| 1.0 + x * x, 1e6, 10.0);
        assert!(r.is_err());
        let r = StateDependentVol::new("lip", |_, x| (3.0 * x).sin(), 1.0, 1.0);
        assert!(r.is_err());
        let ok = StateDependentVol::new("tanh", |_, x| 0.5 + 0.2 * x.tanh(), 0.2, 0.7);
        assert!(ok.is_ok());
    }

    #[test]
    fn model_spec_parsing() {
        assert_eq!(
            "constant:1.5".parse::<ModelSpec>().unwrap(),
            ModelSpec::Constant { c: 1.5 }
        );
        assert_eq!(
            "sinshift:1".parse::<ModelSpec>().unwrap(),
            ModelSpec::SinShift { scale: 1.0 }
        );
        assert_eq!(
            "tanh:0.5,0.2".parse::<ModelSpec>().unwrap(),
            ModelSpec::Tanh { a: 0.5, b: 0.2 }
        );
        assert!("heston:1".parse::<ModelSpec>().is_err());
        assert!("constant:x".parse::<ModelSpec>().is_err());
        assert!(ModelSpec::Tanh { a: 0.5, b: 0.2 }.build().is_ok());
    }

    #[test]
    fn jump_spec_parsing() {
        let j: JumpModelCpp = "lambda=2,marks=unit".parse().unwrap();
        assert_eq!(
            j,
            JumpModelCpp {
                intensity: 2.0,
                marks: MarkLaw::Unit,
                compensate: true
            }
        );
        let j: JumpModelCpp = "lambda=0.5,marks=uniform:-1:1,compensate=false"
            .parse()
            .unwrap();
        assert_eq!(
            j.marks,
            MarkLaw::Uniform {
                low: -1.0,
                high: 1.0
            }
        );
        assert!(!j.compensate);
        assert!("lambda=0,marks=unit".parse::<JumpModelCpp>().is_err());
        assert!("marks=unit".parse::<JumpModelCpp>().is_err());
        assert!("lambda=1,marks=gauss".parse::<JumpModelCpp>().is_err());
    }

    #[test]
    fn unit_uncompensated_staircase() {
        let model = JumpModelCpp::new(3.0, MarkLaw::Unit, false).unwrap();
        let grid = PartitionSpec::Regular(2000);
        let (j, rec) = simulate_cpp(&model, &grid, 11).unwrap();
        assert!(!rec.is_empty());
        assert!(rec.events().iter().all(|e| e.size == 1.0));
        assert_eq!(j[0], 0.0);
        assert_eq!(*j.last().unwrap(), rec.len() as f64);
        assert!(j
            .windows(2)
            .all(|w| w[1] - w[0] == 0.0 || w[1] - w[0] >= 1.0));
    }

    #[test]
    fn staircase_differences_match_record() {
        let model = JumpModelCpp::new(
            2.0,
            MarkLaw::Uniform {
                low: -1.0,
                high: 1.0,
            },
            false,
        )
        .unwrap();
        let grid = PartitionSpec::Regular(50_000);
        let pts = grid.points();
        let (j, rec) = simulate_cpp(&model, &grid, 4).unwrap();
        for e in rec.events() {
            let k = pts.partition_point(|&p| p < e.time);
            let alone = rec
                .events()
                .iter()
                .filter(|o| o.time > pts[k - 1] && o.time <= pts[k])
                .count()
                == 1;
            if alone {
                let d = j[k] - j[k - 1];
                assert!((d * d - e.size * e.size).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jump_count_mean_matches_poisson() {
        let lambda = 1.5;
        let model = JumpModelCpp::new(lambda, MarkLaw::Unit, true).unwrap();
        let grid = PartitionSpec::Regular(8);
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|r| {
                simulate_cpp(&model, &grid, StreamKey::new(77, r))
                    .unwrap()
                    .1
                    .len() as f64
            })
            .collect();
        let (mean, sd) = mean_std(&counts);
        let se = sd / (n as f64).sqrt();
        assert!((mean - 2.0 * PI * lambda).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn compensated_terminal_mean_is_zero() {
        let model = JumpModelCpp::new(2.0, MarkLaw::Unit, true).unwrap();
        let grid = PartitionSpec::Regular(8);
        let n = 10_000;
        let ends: Vec<f64> = (0..n)
            .map(|r| {
                *simulate_cpp(&model, &grid, StreamKey::new(78, r))
                    .unwrap()
                    .0
                    .last()
                    .unwrap()
            })
            .collect();
        let (mean, sd) = mean_std(&ends);
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn combine_examples() {
        let h = [0.0, 1.0, -2.0];
        let z = [0.0; 3];
        assert_eq!(combine_price(&h, &z).unwrap(), h.to_vec());
        assert_eq!(combine_price(&z, &h).unwrap(), h.to_vec());
        assert_eq!(
            combine_price(&h, &[1.0, 1.0, 1.0]).unwrap(),
            vec![1.0, 2.0, -1.0]
        );
        assert!(combine_price(&h, &[1.0]).is_err());
    }

    #[test]
    fn determinism() {
        let jm = JumpModelCpp::new(2.0, MarkLaw::Rademacher, true).unwrap();
        let a = simulate_path(
            &VolatilityModel::SinusoidalShift(1.0),
            Some(&jm),
            &PartitionSpec::Regular(500),
            42,
        )
        .unwrap();
        let b = simulate_path(
            &VolatilityModel::SinusoidalShift(1.0),
            Some(&jm),
            &PartitionSpec::Regular(500),
            42,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subsample_examples() {
        let path = simulate_path(
            &VolatilityModel::Constant(1.0),
            None,
            &PartitionSpec::Regular(64),
            8,
        )
        .unwrap();
        let same = subsample(&path, &PartitionSpec::Regular(64)).unwrap();
        assert_eq!(same, path.observe().unwrap());
        let half = subsample(&path, &PartitionSpec::Regular(32)).unwrap();
        for (k, d) in half.increments().iter().enumerate() {
            assert_eq!(*d, path.price[2 * k + 2] - path.price[2 * k]);
        }
        let coarse = PartitionSpec::Explicit(vec![-PI, -2.0, -0.3, 0.1, 1.9, PI]);
        let obs = subsample(&path, &coarse).unwrap();
        let total: f64 = obs.increments().iter().sum();
        assert!((total - (path.price[64] - path.price[0])).abs() < 1e-12);
    }

    #[test]
    fn subsample_rejects_uncovered() {
        let path = simulate_path(
            &VolatilityModel::Constant(1.0),
            None,
            &PartitionSpec::Regular(4),
            8,
        )
        .unwrap();
        assert!(matches!(
            subsample(&path, &PartitionSpec::Regular(16)),
            Err(Error::NotCovered { .. })
        ));
    }

    #[test]
    fn local_mass_examples() {
        let none = JumpRecord::default();
        assert_eq!(local_jump_mass(&none, 0.0, 0.5).unwrap(), 0.0);
        let one = JumpRecord::new(vec![JumpEvent {
            time: 0.3,
            size: 2.0,
        }])
        .unwrap();
        assert_eq!(local_jump_mass(&one, 0.3, 0.5).unwrap(), 0.0);
        let two = JumpRecord::new(vec![
            JumpEvent {
                time: 0.0,
                size: 1.0,
            },
            JumpEvent {
                time: 0.05,
                size: 2.0,
            },
        ])
        .unwrap();
        assert_eq!(local_jump_mass(&two, 0.0, 0.1).unwrap(), 4.0);
        assert!(local_jump_mass(&two, 0.0, 0.0).is_err());
        assert!(local_jump_mass(&two, 0.0, 4.0).is_err());
        let wrap = JumpRecord::new(vec![JumpEvent {
            time: 3.1,
            size: 1.0,
        }])
        .unwrap();
        assert_eq!(local_jump_mass(&wrap, -3.1, 0.2).unwrap(), 0.0);
        assert_eq!(local_jump_mass_periodic(&wrap, -3.1, 0.2).unwrap(), 1.0);
    }

    #[test]
    fn jump_record_validation() {
        assert!(JumpRecord::new(vec![JumpEvent {
            time: 4.0,
            size: 1.0
        }])
        .is_err());
        assert!(JumpRecord::new(vec![JumpEvent {
            time: 0.0,
            size: 0.0
        }])
        .is_err());
        assert!(JumpRecord::new(vec![
            JumpEvent {
                time: 0.5,
                size: 1.0
            },
            JumpEvent {
                time: 0.5,
                size: 1.0
            }
        ])
        .is_err());
    }
}
