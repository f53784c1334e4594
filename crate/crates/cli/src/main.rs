use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use spotvol::estimator::{
    default_degree, default_harmonics, estimate, estimate_coefficients, EstimatorConfig,
};
use spotvol::experiments::{
    coefficient_error_sweep, event_frequencies, inversion_bound_sweep, jump_recovery_with,
    JumpRecoveryConfig, SweepConfig, ThresholdSchedule,
};
use spotvol::market_sim::{simulate_path, JumpModelCpp, ModelSpec};
use spotvol::plot::LinePlot;
use spotvol::{io, PartitionSpec, StreamKey};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spotvol",
    version,
    about = "Fourier estimation of spot volatility and squared jumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a log-price path on a regular grid of [-pi, pi].
    Simulate {
        /// constant:C, sinshift:S or tanh:A,B
        #[arg(long)]
        model: ModelSpec,
        /// Compound Poisson jumps, e.g. lambda=2,marks=unit
        #[arg(long)]
        jumps: Option<JumpModelCpp>,
        /// Number of grid points, both endpoints included.
        #[arg(long)]
        grid_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Path CSV with columns t,H,J,P,V.
        #[arg(long)]
        out: PathBuf,
        /// Jump record CSV with columns tau,delta_j.
        #[arg(long)]
        jumps_out: Option<PathBuf>,
    },
    /// Estimate the spot variance (or squared jumps) from a price CSV.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Bohr cutoff N. Defaults to min(ticks/2, 4096).
        #[arg(long)]
        harmonics: Option<usize>,
        /// Fejer degree M. Defaults to floor(N^0.4).
        #[arg(long)]
        degree: Option<usize>,
        /// Scale by 2pi/M to recover squared jumps.
        #[arg(long)]
        rescale_jumps: bool,
        #[arg(long, default_value_t = 1001)]
        eval_points: usize,
        /// Output CSV with columns t,value; metadata goes to <out>.meta.json.
        #[arg(long)]
        out: PathBuf,
        /// Also write the estimated coefficients (q,re,im).
        #[arg(long)]
        coefficients: Option<PathBuf>,
        /// The input has no header row.
        #[arg(long)]
        no_header: bool,
    },
    /// Run a Monte Carlo coefficient-error sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Recover squared jumps of a simulated jump diffusion at several degrees.
    JumpsDemo {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        cells: usize,
        #[arg(long, default_value_t = 16_384)]
        harmonics: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 50, 100, 700])]
        degrees: Vec<usize>,
    },
    /// Check the Fejer inversion error bound for a jump record.
    InversionCheck {
        #[arg(long)]
        jumps: PathBuf,
        /// Comma list; `a,b,...,z` expands geometrically when b = 2a, else arithmetically.
        #[arg(long, default_value = "8,16,...,1024")]
        n_list: String,
        #[arg(long, default_value_t = 64)]
        t_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Invalid flag values detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A run that completed but whose check did not pass.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(EXIT_USAGE)
            } else if e.is::<CheckFailed>() {
                ExitCode::from(EXIT_CHECK_FAILED)
            } else {
                ExitCode::from(EXIT_ERROR)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            model,
            jumps,
            grid_points,
            seed,
            out,
            jumps_out,
        } => simulate(
            &model,
            jumps.as_ref(),
            grid_points,
            seed,
            &out,
            jumps_out.as_deref(),
        ),
        Command::Estimate {
            input,
            harmonics,
            degree,
            rescale_jumps,
            eval_points,
            out,
            coefficients,
            no_header,
        } => estimate_cmd(
            &input,
            harmonics,
            degree,
            rescale_jumps,
            eval_points,
            &out,
            coefficients.as_deref(),
            !no_header,
        ),
        Command::Sweep { config, out_dir } => sweep(&config, &out_dir),
        Command::JumpsDemo {
            out_dir,
            seed,
            cells,
            harmonics,
            degrees,
        } => jumps_demo(&out_dir, seed, cells, harmonics, degrees),
        Command::InversionCheck {
            jumps,
            n_list,
            t_points,
            out,
        } => inversion_check(&jumps, &n_list, t_points, &out),
    }
}

fn simulate(
    model: &ModelSpec,
    jumps: Option<&JumpModelCpp>,
    grid_points: usize,
    seed: u64,
    out: &Path,
    jumps_out: Option<&Path>,
) -> Result<()> {
    if grid_points < 2 {
        return Err(usage("--grid-points must be at least 2"));
    }
    let vol = model.build().map_err(|e| usage(e.to_string()))?;
    let grid = PartitionSpec::Regular(grid_points - 1);
    let path = simulate_path(&vol, jumps, &grid, StreamKey::new(seed, 0))?;
    io::write_path(out, &path).with_context(|| format!("writing {}", out.display()))?;
    if let Some(jf) = jumps_out {
        io::write_jumps(jf, &path.jumps).with_context(|| format!("writing {}", jf.display()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate_cmd(
    input: &Path,
    harmonics: Option<usize>,
    degree: Option<usize>,
    rescale_jumps: bool,
    eval_points: usize,
    out: &Path,
    coefficients: Option<&Path>,
    has_header: bool,
) -> Result<()> {
    let ticks = io::ingest_csv(input, has_header)
        .with_context(|| format!("reading {}", input.display()))?;
    let obs = ticks.observations()?;
    let n = harmonics.unwrap_or_else(|| default_harmonics(obs.len()));
    let m = degree.unwrap_or_else(|| default_degree(n));
    if n == 0 || m == 0 {
        return Err(usage("--harmonics and --degree must be positive"));
    }
    if m > n {
        return Err(usage(format!(
            "degree M = {m} exceeds harmonics N = {n}: the coefficients c(q) for |q| <= M need increment \
             coefficients up to N + M, beyond the band the cutoff controls; lower --degree to at most {n} \
             (the default is floor(N^0.4) = {}) or raise --harmonics",
            default_degree(n)
        )));
    }
    if eval_points < 2 {
        return Err(usage("--eval-points must be at least 2"));
    }
    let config = EstimatorConfig::with_regular_grid(n, m, rescale_jumps, eval_points)?;
    let est = estimate(&obs, &config)?;
    io::write_spot_estimate(out, &est).with_context(|| format!("writing {}", out.display()))?;
    if let Some(cf) = coefficients {
        io::write_coefficients(cf, &estimate_coefficients(&obs, n, m)?)?;
    }
    let meta = json!({
        "harmonics": n,
        "degree": m,
        "rescale_jumps": rescale_jumps,
        "kind": est.kind,
        "ticks": ticks.len(),
        "duplicates_collapsed": ticks.duplicates_collapsed,
        "rescale": ticks.rescale_info(),
    });
    io::write_json(sidecar(out, "meta.json"), &meta)?;
    Ok(())
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn sweep(config_path: &Path, out_dir: &Path) -> Result<()> {
    let config: SweepConfig =
        io::read_json(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    config.validate().map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(out_dir)?;
    let outcome = coefficient_error_sweep(&config)?;
    io::write_rows(out_dir.join("sweep.csv"), &outcome.rows)?;
    io::write_rows(out_dir.join("errors.csv"), outcome.replicate_errors())?;
    io::write_rows(
        out_dir.join("event_frequencies.csv"),
        event_frequencies(&outcome, &ThresholdSchedule::default())?,
    )?;
    let fit = if outcome.rows.len() >= 4 && outcome.rows.iter().all(|r| r.mean > 0.0) {
        Some(outcome.rate_fit()?)
    } else {
        None
    };
    io::write_json(
        out_dir.join("summary.json"),
        &json!({ "config": config, "rate_fit": fit }),
    )?;
    let points: Vec<(f64, f64)> = outcome
        .rows
        .iter()
        .map(|r| (r.harmonics as f64, r.mean))
        .collect();
    if points.iter().any(|p| p.1 > 0.0) {
        LinePlot::new("Mean sup-error of the coefficients", "N", "error")
            .log_log()
            .with_series("mean", points)
            .write(out_dir.join("error_vs_n.svg"))?;
    }
    Ok(())
}

fn jumps_demo(
    out_dir: &Path,
    seed: u64,
    cells: usize,
    harmonics: usize,
    degrees: Vec<usize>,
) -> Result<()> {
    if cells == 0 || harmonics == 0 || degrees.contains(&0) {
        return Err(usage("--cells, --harmonics and --degrees must be positive"));
    }
    fs::create_dir_all(out_dir)?;
    let config = JumpRecoveryConfig {
        degrees,
        harmonics,
        cells,
        seed,
        ..JumpRecoveryConfig::default()
    };
    let result = jump_recovery_with(&config)?;
    io::write_jumps(out_dir.join("jumps.csv"), &result.jumps)?;
    let mut plot = LinePlot::new("Rescaled Fejer estimate of squared jumps", "t", "estimate");
    for est in &result.estimates {
        let m = est.config.degree;
        io::write_spot_estimate(out_dir.join(format!("estimate_M{m}.csv")), est)?;
        plot = plot.with_series(
            format!("M = {m}"),
            est.times
                .iter()
                .copied()
                .zip(est.values.iter().copied())
                .collect(),
        );
    }
    plot.write(out_dir.join("estimates.svg"))?;
    io::write_json(
        out_dir.join("summary.json"),
        &json!({ "config": result.config, "jumps": result.jumps.len(), "degrees": result.summaries }),
    )?;
    Ok(())
}

/// Parses `8,16,32` or the shorthand `8,16,...,1024`.
fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| -> Result<usize> {
        p.parse::<usize>()
            .map_err(|_| usage(format!("--n-list: {p:?} is not a positive integer")))
    };
    let list = match parts.iter().position(|&p| p == "...") {
        None => parts.iter().map(|p| num(p)).collect::<Result<Vec<_>>>()?,
        Some(2) if parts.len() == 4 => {
            let (a, b, z) = (num(parts[0])?, num(parts[1])?, num(parts[3])?);
            if b <= a {
                return Err(usage("--n-list: a,b,...,z needs b > a"));
            }
            let mut out = vec![a];
            while let Some(&last) = out.last() {
                let next = if b == 2 * a { last * 2 } else { last + (b - a) };
                if next > z {
                    break;
                }
                out.push(next);
            }
            if out.last() != Some(&z) {
                return Err(usage(format!("--n-list: {z} is not reached from {a},{b}")));
            }
            out
        }
        Some(_) => return Err(usage("--n-list: the shorthand is a,b,...,z")),
    };
    if list.is_empty() || list.contains(&0) {
        bail!(usage("--n-list: values must be positive"));
    }
    Ok(list)
}

fn inversion_check(jumps_path: &Path, n_list: &str, t_points: usize, out: &Path) -> Result<()> {
    let ns = parse_n_list(n_list)?;
    if t_points < 2 {
        return Err(usage("--t-points must be at least 2"));
    }
    let jumps =
        io::read_jumps(jumps_path).with_context(|| format!("reading {}", jumps_path.display()))?;
    let ts = PartitionSpec::Regular(t_points - 1).points();
    let sweep = inversion_bound_sweep(std::slice::from_ref(&jumps), &ns, &ts)?;
    io::write_rows(out, &sweep.rows).with_context(|| format!("writing {}", out.display()))?;
    let failed = sweep.failures().count();
    if failed > 0 {
        return Err(CheckFailed(format!(
            "{failed} of {} points exceed the bound",
            sweep.rows.len()
        ))
        .into());
    }
    Ok(())
}
