//! Command-line front end.
//!
//! Every subcommand writes CSV, to `--out` or standard output. The first
//! line of each file is a `#` comment naming the schema and its version;
//! the column order after it is fixed.

mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use sweep::{
    parse_seeds, run_sweep, write_aggregate_csv, write_rows_csv, AggregateRow, Comparison,
    SweepAxis, SweepMeasure, SweepOutput, SweepRow, SweepSpec,
};

use crate::absorbing_mrp::{canonicalize, Horizon, MrpSpec};
use crate::chaining::{distortion_boundary, BoundaryMode, ChainRoles, DecodeConvention};
use crate::error::{Error, Result};
use crate::feedback_lp::{optimality_report, ChannelTriple, DistortionTriple};
use crate::sim::{run_experiment, SimConfig, SimResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "erasure-bcast",
    version,
    about = "Three-user erasure broadcast with feedback: analysis and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected accumulated rewards of an absorbing Markov reward process.
    Mrp(MrpArgs),
    /// Pairing durations of the uncoded phase and the latency bounds.
    UncodedLp(UncodedLpArgs),
    /// Smallest certified builder distortion as the non-bottleneck rate varies.
    ChainRegion(ChainRegionArgs),
    /// One simulation run from a JSON config.
    Simulate(SimulateArgs),
    /// Simulations over a parameter grid and several seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct MrpArgs {
    /// File with the transition and reward matrices separated by a blank line.
    #[arg(long)]
    spec: PathBuf,
    /// Number of steps, or `inf`.
    #[arg(long)]
    horizon: Horizon,
    /// Initial distribution, comma separated.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UncodedLpArgs {
    /// Erasure probabilities `e1,e2,e3`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    eps: Vec<f64>,
    /// Distortions `d1,d2,d3`; defaults to the squares of the erasure rates.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    d: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChainRegionArgs {
    /// Builder (user 1) erasure probability.
    #[arg(long)]
    eps_i: f64,
    /// Erasure probability of the other target (user 3).
    #[arg(long)]
    eps_k: f64,
    /// Sweep of user 2's erasure probability as `start:stop:step`.
    #[arg(long)]
    sweep_eps_u: String,
    /// Block length for the floored bound.
    #[arg(long = "N", conflicts_with = "asymptotic")]
    n: Option<u64>,
    /// Drop the floor (infinite block length).
    #[arg(long)]
    asymptotic: bool,
    /// How the builder's decode count is averaged: `conditional` or `unconditional`.
    #[arg(long, default_value = "conditional")]
    convention: DecodeConvention,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-slot trace when the config enables it
    /// (default: `<out>.trace`, or standard error without `--out`).
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON config for everything the sweep does not vary.
    #[arg(long)]
    config: PathBuf,
    /// Parameter to vary: eps1..3, d1..3 or n_symbols.
    #[arg(long)]
    axis: SweepAxis,
    /// Values of the axis, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    values: Vec<f64>,
    /// Seeds: comma separated and/or inclusive ranges `a:b`. Empty for none.
    #[arg(long, default_value = "")]
    seeds: String,
    /// Keep the distortions at the squares of the erasure rates as they vary.
    #[arg(long)]
    quadratic_d: bool,
    /// `full` runs the whole pipeline; `uncoded` runs only the uncoded phases
    /// with the demand handler off.
    #[arg(long, default_value = "full")]
    measure: SweepMeasure,
    /// Analytical columns to fill: t_star, w_plus, boundary.
    #[arg(long, value_delimiter = ',', default_value = "t_star,w_plus")]
    compare: Vec<Comparison>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-value means and standard errors.
    #[arg(long)]
    aggregate: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 for bad input, 2 for numeric or
/// infeasibility failures.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Mrp(a) => mrp(a),
        Command::UncodedLp(a) => uncoded_lp(a),
        Command::ChainRegion(a) => chain_region(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    }
}

pub(crate) fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// CSV writer that first emits the schema comment line.
pub(crate) fn csv_writer(
    mut out: Box<dyn Write>,
    schema: &str,
) -> Result<csv::Writer<Box<dyn Write>>> {
    writeln!(out, "# erasure-bcast {schema} v{SCHEMA_VERSION}")?;
    Ok(csv::Writer::from_writer(out))
}

fn triple(values: &[f64], what: &str) -> Result<[f64; 3]> {
    values.try_into().map_err(|_| {
        Error::InvalidInput(format!(
            "{what} needs exactly three values, got {}",
            values.len()
        ))
    })
}

pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn mrp(a: MrpArgs) -> Result<()> {
    let spec = MrpSpec::from_file(&a.spec)?;
    let canonical = canonicalize(&spec)?;
    let summary = canonical.unscaled_rewards(a.horizon, a.prior.as_deref())?;
    let mut w = csv_writer(open_out(a.out.as_deref())?, "mrp")?;
    w.write_record(["state", "reward_horizon", "value"])?;
    let horizon = a.horizon.to_string();
    for (i, v) in summary.per_state.iter().enumerate() {
        w.write_record([(i + 1).to_string(), horizon.clone(), fmt_f(*v)])?;
    }
    if let Some(v) = summary.with_prior {
        w.write_record(["prior".to_string(), horizon, fmt_f(v)])?;
    }
    w.flush()?;
    Ok(())
}

fn uncoded_lp(a: UncodedLpArgs) -> Result<()> {
    let eps = ChannelTriple::new(triple(&a.eps, "--eps")?)?;
    let d = match &a.d {
        Some(d) => DistortionTriple::new(triple(d, "--d")?)?,
        None => DistortionTriple::quadratic(&eps),
    };
    let rep = optimality_report(&eps, &d)?;
    let s = &rep.solution;
    let mut w = csv_writer(open_out(a.out.as_deref())?, "uncoded-lp")?;
    w.write_record([
        "eps1", "eps2", "eps3", "t0", "t1", "t2", "t3", "t_star", "w_minus", "w_plus", "q_res1",
        "q_res2", "q_res3", "theorem2", "theorem3",
    ])?;
    let mut row: Vec<String> = eps.get().iter().map(|&x| fmt_f(x)).collect();
    row.push(fmt_f(s.t0));
    row.extend(s.t.iter().map(|&x| fmt_f(x)));
    row.push(fmt_f(s.t_star));
    row.push(fmt_f(rep.bounds.w_minus));
    row.push(fmt_f(rep.bounds.w_plus));
    row.extend(s.residual_queues.iter().map(|&x| fmt_f(x)));
    row.push(rep.early_finish_certified.to_string());
    row.push(rep.residual_queues_certified.to_string());
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("bad range {text:?}: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Parse(format!(
            "range {text:?} must be start:stop:step"
        )));
    };
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidInput(format!(
            "range {text:?} must have step > 0 and stop >= start"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
    if count > 1_000_000 {
        return Err(Error::InvalidInput(format!(
            "range {text:?} has too many points"
        )));
    }
    // Round away the drift of repeated addition so 0.1:0.3:0.1 ends at 0.3.
    Ok((0..count)
        .map(|i| {
            let x = start + i as f64 * step;
            (x * 1e12).round() / 1e12
        })
        .collect())
}

fn chain_region(a: ChainRegionArgs) -> Result<()> {
    let sweep = parse_range(&a.sweep_eps_u)?;
    let base = ChannelTriple::new([a.eps_i, sweep[0], a.eps_k])?;
    let roles = ChainRoles::with_excluded(0, 1)?;
    let mode = if a.asymptotic {
        BoundaryMode::Asymptotic
    } else {
        BoundaryMode::Finite(a.n.unwrap_or(1_000_000))
    };
    let points = distortion_boundary(&base, &roles, &sweep, |e| e * e, mode, a.convention)?;
    let mut w = csv_writer(open_out(a.out.as_deref())?, "chain-region")?;
    w.write_record([
        "eps_u",
        "d_hat_u",
        "e_reward_u",
        "e_reward_E",
        "d_i_boundary",
    ])?;
    for p in points {
        w.write_record(
            [
                p.eps_u,
                p.d_hat_u,
                p.e_reward_u,
                p.e_reward_e,
                p.d_i_boundary,
            ]
            .map(fmt_f),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub const SIMULATE_COLUMNS: [&str; 23] = [
    "seed",
    "N",
    "eps1",
    "eps2",
    "eps3",
    "d1",
    "d2",
    "d3",
    "slots_systematic",
    "slots_nc",
    "slots_tail",
    "latency",
    "w_plus",
    "dist1",
    "dist2",
    "dist3",
    "t_hat0",
    "t_hat1",
    "t_hat2",
    "t_hat3",
    "tail",
    "builder",
    "violations",
];

pub fn simulate_record(r: &SimResult) -> Vec<String> {
    let mut row = vec![r.seed.to_string(), r.n_symbols.to_string()];
    row.extend(r.eps.iter().chain(&r.d).map(|&x| fmt_f(x)));
    row.extend(
        [
            r.phase_slots.systematic,
            r.phase_slots.network_coding,
            r.phase_slots.tail,
        ]
        .map(|x| x.to_string()),
    );
    row.push(fmt_f(r.latency));
    row.push(fmt_f(r.outer_bound()));
    row.extend(r.users.iter().map(|u| fmt_f(u.distortion)));
    row.push(fmt_f(r.t_hat0));
    row.extend(r.t_hat.iter().map(|&x| fmt_f(x)));
    row.push(
        serde_json::to_value(r.tail)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
    );
    row.push(r.builder.map(|b| (b + 1).to_string()).unwrap_or_default());
    row.push(r.violations.len().to_string());
    row
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)?;
    let cfg = SimConfig::from_json(&text)?;
    let result = run_experiment(&cfg)?;
    if let Some(lines) = &result.trace {
        let mut out: Box<dyn Write> = match (&a.trace_out, &a.out) {
            (Some(p), _) => open_out(Some(p))?,
            (None, Some(o)) => {
                let mut p = o.clone().into_os_string();
                p.push(".trace");
                open_out(Some(Path::new(&p)))?
            }
            (None, None) => Box::new(io::stderr().lock()),
        };
        writeln!(out, "# erasure-bcast trace v{SCHEMA_VERSION}")?;
        writeln!(out, "t,state_or_phase,z1,z2,z3,action")?;
        for l in lines {
            writeln!(out, "{l}")?;
        }
        out.flush()?;
    }
    let mut w = csv_writer(open_out(a.out.as_deref())?, "simulate")?;
    w.write_record(SIMULATE_COLUMNS)?;
    w.write_record(simulate_record(&result))?;
    w.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)?;
    let base = SimConfig::from_json(&text)?;
    let spec = SweepSpec {
        base,
        axis: a.axis,
        values: a.values,
        seeds: parse_seeds(&a.seeds)?,
        quadratic_d: a.quadratic_d,
        measure: a.measure,
        comparisons: a.compare,
    };
    spec.validate()?;
    let out = run_sweep(&spec);
    write_rows_csv(open_out(a.out.as_deref())?, &out.rows)?;
    if let Some(p) = &a.aggregate {
        write_aggregate_csv(open_out(Some(p))?, &out.aggregate)?;
    }
    Ok(())
}
