//! Stand-alone commands: prox curves, run comparison and synthetic data export.

use std::fmt;
use std::path::Path;

use lrssc::data::{self, SynthParams};
use lrssc::metrics::wilcoxon_ranksum;
use lrssc::penalty::eval_scalar;
use lrssc::prox::prox_scalar;
use lrssc::{NumericProxSettings, PenaltySpec, ProxRequest};

use crate::error::{Category, CliError, CliResult};

/// `a:b:steps`, with `steps >= 2` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl std::str::FromStr for Range {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::input(format!("range must look like a:b:steps, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite() && min < max) || steps < 2 {
            return Err(CliError::input(format!(
                "range needs finite a < b and at least 2 steps, got '{s}'"
            )));
        }
        Ok(Self { min, max, steps })
    }
}

impl Range {
    /// Grid points; a range symmetric about 0 yields exactly mirrored values.
    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| (self.min * (last - i as f64) + self.max * i as f64) / last)
            .collect()
    }
}

/// CSV with columns `x,penalty,prox`.
pub fn cmd_prox_curve(spec: &PenaltySpec, lambda: f64, range: &Range) -> CliResult<String> {
    let settings = NumericProxSettings::default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "penalty", "prox"])?;
    for x in range.points() {
        let penalty = eval_scalar(spec, x)?;
        let prox = prox_scalar(&ProxRequest::new(*spec, x, lambda), &settings)?;
        w.write_record([x.to_string(), penalty.to_string(), prox.to_string()])?;
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| CliError::from(e.into_error()))?)
            .expect("ascii csv"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Acc,
    Nmi,
    F1,
}

impl Metric {
    pub fn column(self) -> &'static str {
        match self {
            Metric::Acc => "acc",
            Metric::Nmi => "nmi",
            Metric::F1 => "f1",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acc" => Ok(Metric::Acc),
            "nmi" => Ok(Metric::Nmi),
            "f1" => Ok(Metric::F1),
            _ => Err(CliError::input(format!(
                "metric must be acc, nmi or f1, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub metric: Metric,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p_value: f64,
    pub significant: bool,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        writeln!(f, "metric: {}", self.metric.column())?;
        writeln!(f, "a: n={} mean={}", self.a.len(), mean(&self.a))?;
        writeln!(f, "b: n={} mean={}", self.b.len(), mean(&self.b))?;
        writeln!(f, "p_value: {}", self.p_value)?;
        if self.significant {
            writeln!(
                f,
                "verdict: significant difference (p < {SIGNIFICANCE_LEVEL})"
            )
        } else {
            writeln!(
                f,
                "verdict: * no significant difference (p >= {SIGNIFICANCE_LEVEL})"
            )
        }
    }
}

/// Per-partition values of `metric` from a `results.csv` holding one grid point.
pub fn read_metric_column(path: &Path, metric: Metric) -> CliResult<Vec<f64>> {
    let ctx = |e: CliError| e.context(path.display());
    let mut r = csv::Reader::from_path(path).map_err(|e| ctx(e.into()))?;
    let headers = r.headers().map_err(|e| ctx(e.into()))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            ctx(CliError::new(
                Category::Data,
                format!("missing column '{name}'"),
            ))
        })
    };
    let (partition, value) = (col("partition")?, col(metric.column())?);
    let keys: Vec<usize> = ["lambda", "mu0", "delta", "n"]
        .iter()
        .map(|k| col(k))
        .collect::<CliResult<_>>()?;
    let mut point: Option<Vec<String>> = None;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| ctx(e.into()))?;
        if rec
            .get(partition)
            .and_then(|p| p.parse::<usize>().ok())
            .is_none()
        {
            continue;
        }
        let this: Vec<String> = keys.iter().map(|&k| rec[k].to_string()).collect();
        match &point {
            None => point = Some(this),
            Some(p) if *p != this => {
                return Err(ctx(CliError::input(
                    "file holds several grid points; compare runs with a single point",
                )))
            }
            _ => {}
        }
        let v: f64 = rec[value].parse().map_err(|_| {
            ctx(CliError::new(
                Category::Data,
                format!(
                    "row {}: bad {} value '{}'",
                    line + 2,
                    metric.column(),
                    &rec[value]
                ),
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Rank-sum test between the per-partition scores of two runs.
pub fn cmd_compare(a: &Path, b: &Path, metric: Metric) -> CliResult<CompareReport> {
    let va = read_metric_column(a, metric)?;
    let vb = read_metric_column(b, metric)?;
    let p_value = wilcoxon_ranksum(&va, &vb)?;
    Ok(CompareReport {
        metric,
        a: va,
        b: vb,
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
    })
}

/// Writes a synthetic dataset; `.csv` paths get CSV, anything else f64bin.
pub fn cmd_synth(params: &SynthParams, out: &Path) -> CliResult<()> {
    let ds = data::synth_union_of_subspaces(params)?;
    let is_csv = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        data::save_csv(&ds, out)?;
    } else {
        data::save_f64bin(&ds, out, true)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing_and_symmetry() {
        let r: Range = "-3:3:101".parse().unwrap();
        let pts = r.points();
        assert_eq!(pts.len(), 101);
        assert_eq!(pts[0], -3.0);
        assert_eq!(pts[100], 3.0);
        assert_eq!(pts[50], 0.0);
        for i in 0..101 {
            assert_eq!(pts[i], -pts[100 - i]);
        }
        assert!("1:0:5".parse::<Range>().is_err());
        assert!("0:1:1".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
    }
}
