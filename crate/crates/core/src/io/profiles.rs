//! Profile CSVs (one column per named series, one row per step) and deterministic
//! synthetic capacity-factor shapes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::netmodel::TimeIndex;

/// Reads a profile CSV with a header of series names and exactly `time.steps` rows.
/// Negative values are clipped to zero with a warning; NaN and non-numeric cells are
/// errors.
pub fn load_profiles(path: &Path, time: &TimeIndex) -> Result<BTreeMap<String, Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(file, time, &path.display().to_string())
}

pub fn read_profiles(
    reader: impl std::io::Read,
    time: &TimeIndex,
    origin: &str,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_owned(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err(parse_err("header row must name every column".into()));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(time.steps); header.len()];
    let mut clipped = vec![0usize; header.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let line = r + 2;
        if rec.len() != header.len() {
            return Err(parse_err(format!(
                "line {line}: {} cells, expected {}",
                rec.len(),
                header.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(format!(
                    "line {line}, column `{}`: `{cell}` is not a number",
                    header[c]
                ))
            })?;
            if v.is_nan() {
                return Err(parse_err(format!(
                    "line {line}, column `{}`: NaN",
                    header[c]
                )));
            }
            if v < 0.0 {
                clipped[c] += 1;
                cols[c].push(0.0);
            } else {
                cols[c].push(v);
            }
        }
    }
    let rows = cols[0].len();
    if rows != time.steps {
        return Err(parse_err(format!(
            "{rows} data rows, expected {} time steps",
            time.steps
        )));
    }
    for (name, n) in header.iter().zip(&clipped) {
        if *n > 0 {
            log::warn!("{origin}: {n} negative value(s) in `{name}` clipped to 0");
        }
    }
    Ok(header.into_iter().zip(cols).collect())
}

/// Writes series of equal length as a profile CSV (columns in map order).
pub fn write_profiles(path: &Path, series: &BTreeMap<String, Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let io = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    w.write_record(series.keys()).map_err(io)?;
    let n = series.values().map(Vec::len).max().unwrap_or(0);
    for t in 0..n {
        w.write_record(
            series
                .values()
                .map(|s| s.get(t).copied().unwrap_or(0.0).to_string()),
        )
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Solar,
    Wind,
}

/// Solar capacity factor quoted for the case studies.
pub const SOLAR_CF: f64 = 0.2731;
/// Wind capacity factor quoted for the case studies.
pub const WIND_CF: f64 = 0.4041;

/// Smallest wind output kept by the synthetic shape, so that an installed link always
/// has some power to cover its no-load losses.
const WIND_FLOOR: f64 = 0.05;

/// Deterministic per-unit profile with mean exactly `mean_cf` over the horizon.
/// Solar follows a clipped diurnal sine with slow day-to-day variation; wind is a sum
/// of incommensurate multi-day oscillations.
pub fn synthetic_capacity_factor(
    resource: Resource,
    time: &TimeIndex,
    mean_cf: f64,
) -> Result<Vec<f64>> {
    if !(mean_cf > 0.0 && mean_cf < 1.0) {
        return Err(Error::InvalidInput(format!(
            "capacity factor {mean_cf} outside (0, 1)"
        )));
    }
    let dt_h = time.step_seconds / 3600.0;
    let shape: Vec<f64> = (0..time.steps)
        .map(|t| {
            let hour = (t as f64 + 0.5) * dt_h;
            match resource {
                Resource::Solar => {
                    let h = hour % 24.0;
                    let day = (hour / 24.0).floor();
                    let sun = if (6.0..18.0).contains(&h) {
                        (PI * (h - 6.0) / 12.0).sin()
                    } else {
                        0.0
                    };
                    sun * (0.8 + 0.2 * (2.0 * PI * day / 5.3 + 1.0).sin())
                }
                Resource::Wind => {
                    let d = hour / 24.0;
                    0.55 + 0.25 * (2.0 * PI * d / 3.1).sin()
                        + 0.12 * (2.0 * PI * d / 1.37 + 2.0).sin()
                        + 0.06 * (2.0 * PI * hour / 17.0 + 0.5).sin()
                }
            }
        })
        .collect();
    let floor = match resource {
        Resource::Solar => 0.0,
        Resource::Wind => WIND_FLOOR,
    };
    let apply = |m: f64| -> Vec<f64> { shape.iter().map(|s| (m * s).clamp(floor, 1.0)).collect() };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean(&apply(hi)) < mean_cf {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidInput(format!(
                "horizon too short to reach capacity factor {mean_cf}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&apply(mid)) < mean_cf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(apply(0.5 * (lo + hi)))
}

/// VRE available at a bus with `capacity_mw` split between wind and solar.
pub fn blended_profile(
    time: &TimeIndex,
    capacity_mw: f64,
    wind_share: f64,
    solar_share: f64,
) -> Result<Vec<f64>> {
    let wind = synthetic_capacity_factor(Resource::Wind, time, WIND_CF)?;
    let solar = synthetic_capacity_factor(Resource::Solar, time, SOLAR_CF)?;
    Ok(wind
        .iter()
        .zip(&solar)
        .map(|(w, s)| capacity_mw * (wind_share * w + solar_share * s))
        .collect())
}
