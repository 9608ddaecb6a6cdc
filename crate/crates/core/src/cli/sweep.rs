//! Parameter sweeps: one simulation per (axis value, seed), run in parallel
//! and written in sorted order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{csv_writer, fmt_f};
use crate::chaining::{build_chain_mrp, sufficiency_check, ChainRoles, DecodeConvention};
use crate::error::{Error, Result};
use crate::feedback_lp::{latency_bounds, solve_uncoded_lp, ChannelTriple, DistortionTriple};
use crate::sim::{run_experiment, run_uncoded_profile, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// Erasure probability of user 0, 1 or 2.
    Eps(usize),
    /// Distortion of user 0, 1 or 2.
    D(usize),
    NSymbols,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps1" => Ok(Self::Eps(0)),
            "eps2" => Ok(Self::Eps(1)),
            "eps3" => Ok(Self::Eps(2)),
            "d1" => Ok(Self::D(0)),
            "d2" => Ok(Self::D(1)),
            "d3" => Ok(Self::D(2)),
            "n_symbols" | "N" => Ok(Self::NSymbols),
            _ => Err(Error::Parse(format!("unknown sweep axis {s:?}"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eps(u) => write!(f, "eps{}", u + 1),
            Self::D(u) => write!(f, "d{}", u + 1),
            Self::NSymbols => write!(f, "n_symbols"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SweepMeasure {
    /// The whole pipeline until every demand is met.
    #[default]
    Full,
    /// Only the systematic and network-coding phases, run to their natural
    /// end regardless of demands.
    Uncoded,
}

impl FromStr for SweepMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "uncoded" => Ok(Self::Uncoded),
            _ => Err(Error::Parse(format!("unknown measure {s:?}"))),
        }
    }
}

/// Analytical values written next to the measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    TStar,
    WPlus,
    /// Certified builder distortion with user 1 as builder.
    Boundary,
}

impl FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_star" => Ok(Self::TStar),
            "w_plus" => Ok(Self::WPlus),
            "boundary" => Ok(Self::Boundary),
            _ => Err(Error::Parse(format!("unknown comparison {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Keep `d = ε²` while an erasure rate varies.
    pub quadratic_d: bool,
    pub measure: SweepMeasure,
    pub comparisons: Vec<Comparison>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for &v in &self.values {
            self.point(v, 0)?;
        }
        Ok(())
    }

    /// Config for one grid point.
    pub fn point(&self, value: f64, seed: u64) -> Result<SimConfig> {
        let mut cfg = self.base.clone();
        cfg.seed = seed;
        cfg.trace = false;
        match self.axis {
            SweepAxis::Eps(u) => {
                let mut e = cfg.eps.get();
                e[u] = value;
                cfg.eps = ChannelTriple::new(e)?;
            }
            SweepAxis::D(u) => {
                let mut d = cfg.d.get();
                d[u] = value;
                cfg.d = DistortionTriple::new(d)?;
            }
            SweepAxis::NSymbols => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "n_symbols must be a positive integer, got {value}"
                    )));
                }
                cfg.n_symbols = value as u64;
            }
        }
        if self.quadratic_d {
            cfg.d = DistortionTriple::quadratic(&cfg.eps);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seeds as a comma-separated list of integers and inclusive ranges `a:b`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = |_| Error::Parse(format!("bad seed {part:?}"));
        match part.split_once(':') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(bad)?,
                    b.trim().parse().map_err(bad)?,
                );
                if b < a {
                    return Err(Error::InvalidInput(format!("seed range {part:?} is empty")));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(bad)?),
        }
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub n_symbols: u64,
    pub eps: [f64; 3],
    pub d: [f64; 3],
    /// Systematic plus network-coding slots over `N`.
    pub uncoded: Option<f64>,
    pub latency: Option<f64>,
    pub t_star: Option<f64>,
    pub w_plus: Option<f64>,
    pub boundary: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub value: f64,
    pub runs: usize,
    pub errors: usize,
    /// `(mean, standard error)` over successful runs.
    pub uncoded: Option<(f64, f64)>,
    pub latency: Option<(f64, f64)>,
    pub t_star: Option<f64>,
    pub w_plus: Option<f64>,
    pub boundary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Analytic {
    t_star: Option<f64>,
    w_plus: Option<f64>,
    boundary: Option<f64>,
}

fn analytic(cfg: &SimConfig, comparisons: &[Comparison]) -> Result<Analytic> {
    let mut a = Analytic::default();
    for c in comparisons {
        match c {
            Comparison::TStar => a.t_star = Some(solve_uncoded_lp(&cfg.eps)?.t_star),
            Comparison::WPlus => a.w_plus = Some(latency_bounds(&cfg.eps, &cfg.d).w_plus),
            Comparison::Boundary => {
                let d = cfg.d.get();
                let roles = ChainRoles::new(0, &cfg.eps, d)?;
                let [ei, ej, ek] = roles.role_eps(&cfg.eps);
                let model = build_chain_mrp(ei, ej, ek)?;
                let demands = d.map(|x| 1.0 - x);
                let rep = sufficiency_check(
                    &model,
                    &roles,
                    cfg.n_symbols,
                    demands,
                    DecodeConvention::default(),
                )?;
                a.boundary = Some(rep.d_i_boundary);
            }
        }
    }
    Ok(a)
}

fn mean_se(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

fn run_point(spec: &SweepSpec, value: f64, seed: u64) -> SweepRow {
    let mut row = SweepRow {
        value,
        seed,
        n_symbols: spec.base.n_symbols,
        eps: spec.base.eps.get(),
        d: spec.base.d.get(),
        uncoded: None,
        latency: None,
        t_star: None,
        w_plus: None,
        boundary: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let cfg = spec.point(value, seed)?;
        row.n_symbols = cfg.n_symbols;
        row.eps = cfg.eps.get();
        row.d = cfg.d.get();
        let a = analytic(&cfg, &spec.comparisons)?;
        (row.t_star, row.w_plus, row.boundary) = (a.t_star, a.w_plus, a.boundary);
        match spec.measure {
            SweepMeasure::Full => {
                let r = run_experiment(&cfg)?;
                row.uncoded = Some(r.uncoded_count());
                row.latency = Some(r.latency);
            }
            SweepMeasure::Uncoded => {
                let p = run_uncoded_profile(cfg.n_symbols, &cfg.eps, seed, false)?;
                row.uncoded = Some(p.uncoded_count());
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every (value, seed) point in parallel. A failing point becomes a row
/// with its error filled in; the others still run.
pub fn run_sweep(spec: &SweepSpec) -> SweepOutput {
    let points: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(v, s)| run_point(spec, v, s))
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)));

    let mut aggregate = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let value = rows[start].value;
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.value == value)
                .count();
        let group = &rows[start..end];
        let ok: Vec<&SweepRow> = group.iter().filter(|r| r.error.is_none()).collect();
        let pick = |f: fn(&SweepRow) -> Option<f64>| ok.iter().find_map(|r| f(r));
        aggregate.push(AggregateRow {
            value,
            runs: ok.len(),
            errors: group.len() - ok.len(),
            uncoded: mean_se(&ok.iter().filter_map(|r| r.uncoded).collect::<Vec<_>>()),
            latency: mean_se(&ok.iter().filter_map(|r| r.latency).collect::<Vec<_>>()),
            t_star: pick(|r| r.t_star),
            w_plus: pick(|r| r.w_plus),
            boundary: pick(|r| r.boundary),
        });
        start = end;
    }
    SweepOutput {
        axis: spec.axis,
        rows,
        aggregate,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub const ROW_COLUMNS: [&str; 15] = [
    "value", "seed", "N", "eps1", "eps2", "eps3", "d1", "d2", "d3", "uncoded", "latency", "t_star",
    "w_plus", "boundary", "error",
];

pub fn write_rows_csv(out: Box<dyn Write>, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(out, "sweep")?;
    w.write_record(ROW_COLUMNS)?;
    for r in rows {
        let mut rec = vec![fmt_f(r.value), r.seed.to_string(), r.n_symbols.to_string()];
        rec.extend(r.eps.iter().chain(&r.d).map(|&x| fmt_f(x)));
        rec.extend([r.uncoded, r.latency, r.t_star, r.w_plus, r.boundary].map(opt));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const AGGREGATE_COLUMNS: [&str; 11] = [
    "value",
    "runs",
    "errors",
    "uncoded_mean",
    "uncoded_se",
    "latency_mean",
    "latency_se",
    "t_star",
    "w_plus",
    "boundary",
    "uncoded_rel_err",
];

pub fn write_aggregate_csv(out: Box<dyn Write>, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv_writer(out, "sweep-aggregate")?;
    w.write_record(AGGREGATE_COLUMNS)?;
    for r in rows {
        let rel = match (r.uncoded, r.t_star) {
            (Some((m, _)), Some(t)) => Some((m - t) / t),
            _ => None,
        };
        let mut rec = vec![fmt_f(r.value), r.runs.to_string(), r.errors.to_string()];
        rec.extend(
            [
                r.uncoded.map(|x| x.0),
                r.uncoded.map(|x| x.1),
                r.latency.map(|x| x.0),
                r.latency.map(|x| x.1),
                r.t_star,
                r.w_plus,
                r.boundary,
                rel,
            ]
            .map(opt),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
