//! Momentum grids and plot-ready output of device curves.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::devices::{avoid_thresholds, Device};
use crate::{Error, Result};

/// Inclusive linear momentum range, written `lo:hi:steps` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl KRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "range needs lo < hi, got {lo}:{hi}"
            )));
        }
        if lo <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "momenta must be positive, got lo = {lo}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "range needs at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { lo, hi, steps })
    }

    /// Grid points, with any point that lands on a threshold momentum
    /// nudged upward by a relative `1e-8`.
    pub fn points(&self, thresholds: &[f64]) -> Vec<f64> {
        let span = self.hi - self.lo;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let k = if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + span * i as f64 / last
                };
                avoid_thresholds(k, thresholds)
            })
            .collect()
    }
}

impl FromStr for KRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidParameter(format!("expected lo:hi:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let hi = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let steps = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        KRange::new(lo, hi, steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Everything needed to reproduce one device curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub device: Device,
    pub range: KRange,
    pub format: OutputFormat,
}

/// Probabilities for a wave incoming on the input line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: f64,
    #[serde(rename = "P21")]
    pub p21: f64,
    #[serde(rename = "R11")]
    pub r11: f64,
    #[serde(rename = "P31")]
    pub p31: f64,
    #[serde(rename = "P41", skip_serializing_if = "Option::is_none")]
    pub p41: Option<f64>,
}

fn device_thresholds(device: &Device) -> Vec<f64> {
    device
        .potentials()
        .iter()
        .filter(|&&u| u > 0.0)
        .map(|u| u.sqrt())
        .collect()
}

/// Evaluates the curve on the grid. Rows are computed in parallel but
/// returned in grid order.
pub fn sweep(device: &Device, range: &KRange) -> Result<Vec<SweepRow>> {
    range
        .points(&device_thresholds(device))
        .into_par_iter()
        .map(|k| {
            let (p21, r11, p31, p41) = device.input_probabilities(k)?;
            Ok(SweepRow {
                k,
                p21,
                r11,
                p31,
                p41,
            })
        })
        .collect()
}

/// 17 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with CRLF line endings and header `k,P21,R11,P31[,P41]`.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let with_drain = rows.first().is_some_and(|r| r.p41.is_some());
    let mut out = String::from(if with_drain {
        "k,P21,R11,P31,P41\r\n"
    } else {
        "k,P21,R11,P31\r\n"
    });
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_float(r.k),
            fmt_float(r.p21),
            fmt_float(r.r11),
            fmt_float(r.p31)
        );
        if let Some(p41) = r.p41 {
            let _ = write!(out, ",{}", fmt_float(p41));
        }
        out.push_str("\r\n");
    }
    out
}

pub fn to_json(rows: &[SweepRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialise")
}

pub fn render(spec: &SweepSpec) -> Result<String> {
    let rows = sweep(&spec.device, &spec.range)?;
    Ok(match spec.format {
        OutputFormat::Csv => to_csv(&rows),
        OutputFormat::Json => to_json(&rows),
    })
}
