//! CSV and JSON persistence, and tick-data ingestion.
//!
//! Floats are written in shortest round-trip form with a dot decimal
//! separator, so every table read back equals the one written.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SpotEstimate;
use crate::fourier_series::{CoefficientTable, ObservedIncrements};
use crate::market_sim::{JumpEvent, JumpRecord, SamplePath};

/// Writes any sequence of serializable records as a headed CSV table.
pub fn write_rows<T: Serialize>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a headed CSV table written by [`write_rows`].
pub fn read_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Serialize, Deserialize)]
struct CoefficientRow {
    q: i64,
    re: f64,
    im: f64,
}

/// Columns `q,re,im`.
pub fn write_coefficients(path: impl AsRef<Path>, table: &CoefficientTable) -> Result<()> {
    write_rows(
        path,
        table.iter().map(|(q, c)| CoefficientRow {
            q,
            re: c.re,
            im: c.im,
        }),
    )
}

pub fn read_coefficients(path: impl AsRef<Path>) -> Result<CoefficientTable> {
    let rows: Vec<CoefficientRow> = read_rows(path)?;
    let q_max = rows.len() / 2;
    for (k, row) in rows.iter().enumerate() {
        if row.q != k as i64 - q_max as i64 {
            return Err(Error::Parse {
                line: k as u64 + 2,
                message: format!("expected q = {}, found {}", k as i64 - q_max as i64, row.q),
            });
        }
    }
    CoefficientTable::new(
        q_max,
        rows.into_iter()
            .map(|r| Complex64::new(r.re, r.im))
            .collect(),
    )
}

#[derive(Serialize, Deserialize)]
struct SpotRow {
    t: f64,
    value: f64,
}

/// Columns `t,value`.
pub fn write_spot_estimate(path: impl AsRef<Path>, est: &SpotEstimate) -> Result<()> {
    write_rows(
        path,
        est.times
            .iter()
            .zip(&est.values)
            .map(|(&t, &value)| SpotRow { t, value }),
    )
}

pub fn read_spot_estimate(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Vec<SpotRow> = read_rows(path)?;
    Ok(rows.into_iter().map(|r| (r.t, r.value)).unzip())
}

#[derive(Serialize)]
struct PathRow {
    t: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "V")]
    v: f64,
}

/// Columns `t,H,J,P,V`: diffusion, jump part, log-price and spot variance.
pub fn write_path(path: impl AsRef<Path>, sample: &SamplePath) -> Result<()> {
    write_rows(
        path,
        (0..sample.times.len()).map(|i| PathRow {
            t: sample.times[i],
            h: sample.diffusion[i],
            j: sample.jump_part[i],
            p: sample.price[i],
            v: sample.spot_variance[i],
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct JumpRow {
    tau: f64,
    delta_j: f64,
}

/// Columns `tau,delta_j`.
pub fn write_jumps(path: impl AsRef<Path>, jumps: &JumpRecord) -> Result<()> {
    write_rows(
        path,
        jumps.events().iter().map(|e| JumpRow {
            tau: e.time,
            delta_j: e.size,
        }),
    )
}

pub fn read_jumps(path: impl AsRef<Path>) -> Result<JumpRecord> {
    let rows: Vec<JumpRow> = read_rows(path)?;
    JumpRecord::new(
        rows.into_iter()
            .map(|r| JumpEvent {
                time: r.tau,
                size: r.delta_j,
            })
            .collect(),
    )
}

/// Tick data on its own clock, mapped affinely onto `[-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    raw_times: Vec<f64>,
    log_prices: Vec<f64>,
    /// Number of rows dropped because a later row repeated their timestamp.
    pub duplicates_collapsed: usize,
}

/// Affine map metadata reported alongside estimates from tick data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleInfo {
    pub t0: f64,
    pub t1: f64,
    /// `(t1 - t0) / 2π`: estimates on the `[-π, π]` clock divided by this
    /// factor are per unit of the original clock.
    pub volatility_factor: f64,
}

impl TickSeries {
    pub fn new(raw_times: Vec<f64>, log_prices: Vec<f64>) -> Result<Self> {
        if raw_times.len() != log_prices.len() {
            return Err(Error::LengthMismatch {
                left: raw_times.len(),
                right: log_prices.len(),
            });
        }
        if raw_times.len() < 2 {
            return Err(Error::invalid(
                "ticks",
                raw_times.len(),
                "at least two are required",
            ));
        }
        for (i, w) in raw_times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NonIncreasingTimes {
                    index: i + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        if let Some(index) = raw_times
            .iter()
            .chain(&log_prices)
            .position(|x| !x.is_finite())
        {
            return Err(Error::NonFinite {
                index: index % raw_times.len(),
            });
        }
        Ok(TickSeries {
            raw_times,
            log_prices,
            duplicates_collapsed: 0,
        })
    }

    pub fn raw_times(&self) -> &[f64] {
        &self.raw_times
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    pub fn len(&self) -> usize {
        self.raw_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_times.is_empty()
    }

    pub fn rescale_info(&self) -> RescaleInfo {
        let (t0, t1) = (self.raw_times[0], self.raw_times[self.len() - 1]);
        RescaleInfo {
            t0,
            t1,
            volatility_factor: (t1 - t0) / TAU,
        }
    }

    /// Tick times on `[-π, π]`, endpoints exact. Data already on that
    /// interval is passed through unchanged.
    pub fn times(&self) -> Vec<f64> {
        let RescaleInfo { t0, t1, .. } = self.rescale_info();
        if t0 == -PI && t1 == PI {
            return self.raw_times.clone();
        }
        let n = self.len();
        let mut out: Vec<f64> = self
            .raw_times
            .iter()
            .map(|&s| -PI + TAU * ((s - t0) / (t1 - t0)))
            .collect();
        out[0] = -PI;
        out[n - 1] = PI;
        out
    }

    /// Log-price increments stamped at their left endpoints.
    pub fn observations(&self) -> Result<ObservedIncrements> {
        ObservedIncrements::from_levels(&self.times(), &self.log_prices)
    }
}

/// Reads `t,logprice` tick data. With a header, the price column is the one
/// named `logprice`, else `P`, else the second column; without one the
/// first two columns are used. Rows repeating the previous timestamp replace
/// its price.
pub fn ingest_csv(path: impl AsRef<Path>, has_header: bool) -> Result<TickSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = reader.records();
    let mut price_col = 1;
    if has_header {
        match records.next() {
            Some(header) => {
                let header = header?;
                price_col = header
                    .iter()
                    .position(|h| h == "logprice")
                    .or_else(|| header.iter().position(|h| h == "P"))
                    .unwrap_or(1);
            }
            None => return Err(Error::invalid("ticks", 0, "at least two are required")),
        }
    }
    let mut times: Vec<f64> = Vec::new();
    let mut prices: Vec<f64> = Vec::new();
    let mut duplicates = 0;
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {}", col + 1),
            })?;
            let x: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {raw:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("not finite: {raw:?}"),
                });
            }
            Ok(x)
        };
        let (t, p) = (field(0)?, field(price_col)?);
        match times.last() {
            Some(&prev) if t == prev => {
                *prices.last_mut().expect("paired") = p;
                duplicates += 1;
            }
            Some(&prev) if t < prev => {
                return Err(Error::Parse {
                    line,
                    message: format!("timestamp {t} precedes {prev}"),
                });
            }
            _ => {
                times.push(t);
                prices.push(p);
            }
        }
    }
    let mut series = TickSeries::new(times, prices)?;
    series.duplicates_collapsed = duplicates;
    Ok(series)
}
