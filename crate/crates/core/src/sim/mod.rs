//! Seeded simulation of the three-user erasure broadcast channel with
//! feedback.
//!
//! [`run_experiment`] executes the whole pipeline: a systematic phase, an
//! instantly decodable network-coding phase, then either the chaining
//! algorithm or an idealized channel-coding phase on what is left. As soon
//! as one user meets its target the remaining two are served by a two-user
//! scheme. Combinations are tracked as sets of symbol identifiers; two
//! combinations of the same pair are assumed independent, so decoding is
//! settled by counting equations.
//!
//! Every run is sequential and depends only on its seed.

mod chain;
mod engine;
mod phases;

use serde::{Deserialize, Serialize};

pub use chain::ChainStats;

use crate::error::{Error, Result};
use crate::feedback_lp::{latency_bounds, others, ChannelTriple, DistortionTriple};
use engine::Engine;
use phases::Exit;

/// How leftover queues are handled once network coding stops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailScheme {
    #[default]
    Chaining,
    PreprocessCoding,
}

impl std::str::FromStr for TailScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chaining" => Ok(Self::Chaining),
            "preprocess_coding" => Ok(Self::PreprocessCoding),
            _ => Err(Error::Parse(format!("unknown tail scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_symbols: u64,
    pub eps: ChannelTriple,
    pub d: DistortionTriple,
    pub seed: u64,
    #[serde(default)]
    pub tail_scheme: TailScheme,
    /// Suppress the opportunistic combinations during chaining.
    #[serde(default)]
    pub chaining_restricted: bool,
    /// Record one line per slot.
    #[serde(default)]
    pub trace: bool,
    /// Run the full consistency scan after every slot. Slow.
    #[serde(default)]
    pub check_invariants: bool,
}

impl SimConfig {
    pub fn new(n_symbols: u64, eps: ChannelTriple, d: DistortionTriple, seed: u64) -> Self {
        Self {
            n_symbols,
            eps,
            d,
            seed,
            tail_scheme: TailScheme::default(),
            chaining_restricted: false,
            trace: false,
            check_invariants: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 {
            return Err(Error::InvalidInput("n_symbols must be at least 1".into()));
        }
        if self.n_symbols > u64::from(u32::MAX) {
            return Err(Error::InvalidInput("n_symbols must fit in 32 bits".into()));
        }
        Ok(())
    }

    /// Symbols each user must reconstruct: `ceil(N (1 - d_u))`.
    pub fn targets(&self) -> [u64; 3] {
        std::array::from_fn(|u| symbols_for(self.n_symbols, 1.0 - self.d.d(u)))
    }
}

fn symbols_for(n: u64, fraction: f64) -> u64 {
    (n as f64 * fraction - 1e-9).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseSlots {
    pub systematic: u64,
    pub network_coding: u64,
    /// Everything after network coding: chaining, the two-user scheme and
    /// the idealized coding phase.
    pub tail: u64,
}

impl PhaseSlots {
    pub fn total(&self) -> u64 {
        self.systematic + self.network_coding + self.tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserOutcome {
    /// Fraction of the block left unreconstructed.
    pub distortion: f64,
    pub reconstructed: u64,
    /// Successful receptions while the user was still unsatisfied.
    pub receptions: u64,
    /// Slot at which the target was met.
    pub satisfied_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    AfterSystematic,
    AfterNetworkCoding,
}

/// Normalized queue sizes: index 0 is the chain-unlocking queue, index `m`
/// in 1..=7 the queue for user mask `m` (bit `u` for user `u`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueSnapshot {
    pub boundary: Boundary,
    pub slot: u64,
    pub sizes: [f64; 8],
}

/// Which scheme served the users after network coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// A user was satisfied before network coding stopped.
    None,
    Chaining,
    /// Chaining ran out of feed symbols and the coding phase finished.
    ChainingThenCoding,
    PreprocessCoding,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub seed: u64,
    pub n_symbols: u64,
    pub eps: [f64; 3],
    pub d: [f64; 3],
    pub phase_slots: PhaseSlots,
    /// Total slots over `N`.
    pub latency: f64,
    pub users: [UserOutcome; 3],
    /// Systematic slots over `N`.
    pub t_hat0: f64,
    /// Slots pairing each user's queue with the complementary pair queue,
    /// over `N`.
    pub t_hat: [f64; 3],
    /// Triple-combination slots over `N`.
    pub t_hat_triple: f64,
    pub snapshots: Vec<QueueSnapshot>,
    pub tail: TailKind,
    pub builder: Option<usize>,
    pub chain: ChainStats,
    /// Invariant violations found with `check_invariants` on.
    pub violations: Vec<String>,
    /// Whether the queues had a valid stopping shape when network coding
    /// stopped on its own.
    pub stopping_shape_ok: Option<bool>,
    pub trace: Option<Vec<String>>,
}

fn engine_for(cfg: &SimConfig, m: usize, target: [u64; 3]) -> Engine {
    let mut e = Engine::new(m, cfg.n_symbols, cfg.eps.get(), target, cfg.seed);
    e.checks = cfg.check_invariants;
    if cfg.trace {
        e.trace = Some(Vec::new());
    }
    e
}

fn outcomes(e: &Engine, base: [u64; 3]) -> [UserOutcome; 3] {
    std::array::from_fn(|u| {
        let got = e.recon[u] - base[u];
        UserOutcome {
            distortion: (1.0 - got as f64 / e.n as f64).clamp(0.0, 1.0),
            reconstructed: got,
            receptions: e.receptions[u],
            satisfied_at: e.satisfied_at[u],
        }
    })
}

/// Runs the full pipeline until every user meets its distortion target.
pub fn run_experiment(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let n = cfg.n_symbols;
    let mut e = engine_for(cfg, n as usize, cfg.targets());
    let mut combos = [0u64; 4];
    let mut snapshots = Vec::new();
    let mut stats = ChainStats::default();
    let mut tail = TailKind::None;
    let mut stopping_shape_ok = None;

    let mut exit = if e.active == engine::ALL {
        phases::run_systematic(&mut e, true)
    } else {
        Exit::Satisfied
    };
    let systematic = e.slot;
    snapshots.push(QueueSnapshot {
        boundary: Boundary::AfterSystematic,
        slot: e.slot,
        sizes: e.snapshot(),
    });
    if exit == Exit::Done {
        exit = phases::run_network_coding(&mut e, true, &mut combos);
    }
    let nc_end = e.slot;
    snapshots.push(QueueSnapshot {
        boundary: Boundary::AfterNetworkCoding,
        slot: e.slot,
        sizes: e.snapshot(),
    });

    if exit == Exit::Done {
        let ok = phases::stopping_shape_ok(&e);
        stopping_shape_ok = Some(ok);
        if !ok {
            e.violation("network coding stopped outside the stopping shape".into());
        }
        let builder = phases::tail_builder(&e);
        match (builder, cfg.tail_scheme) {
            (Some(b), TailScheme::Chaining) => {
                tail = TailKind::Chaining;
                match chain::run_chaining(&mut e, b, cfg.chaining_restricted, &mut stats) {
                    chain::ChainExit::Satisfied => {}
                    chain::ChainExit::Exhausted => {
                        tail = TailKind::ChainingThenCoding;
                        phases::run_preprocess(&mut e, &cfg.eps)?;
                    }
                }
            }
            (b, _) => {
                tail = TailKind::PreprocessCoding;
                e.builder = b;
                phases::run_preprocess(&mut e, &cfg.eps)?;
            }
        }
    }
    phases::run_fallback(&mut e)?;

    let nn = n as f64;
    Ok(SimResult {
        seed: cfg.seed,
        n_symbols: n,
        eps: cfg.eps.get(),
        d: cfg.d.get(),
        phase_slots: PhaseSlots {
            systematic,
            network_coding: nc_end - systematic,
            tail: e.slot - nc_end,
        },
        latency: e.slot as f64 / nn,
        users: outcomes(&e, [0; 3]),
        t_hat0: systematic as f64 / nn,
        t_hat: std::array::from_fn(|i| combos[i] as f64 / nn),
        t_hat_triple: combos[3] as f64 / nn,
        snapshots,
        tail,
        builder: e.builder,
        chain: stats,
        violations: std::mem::take(&mut e.violations),
        stopping_shape_ok,
        trace: e.trace.take(),
    })
}

impl SimResult {
    /// `w⁺` for this run's channel and distortions.
    pub fn outer_bound(&self) -> f64 {
        match (ChannelTriple::new(self.eps), DistortionTriple::new(self.d)) {
            (Ok(eps), Ok(d)) => latency_bounds(&eps, &d).w_plus,
            _ => f64::NAN,
        }
    }

    /// Systematic plus network-coding slots over `N`.
    pub fn uncoded_count(&self) -> f64 {
        (self.phase_slots.systematic + self.phase_slots.network_coding) as f64
            / self.n_symbols as f64
    }
}

/// Slot counts of the systematic and network-coding phases run to their
/// natural end, ignoring distortion targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncodedProfile {
    pub n_symbols: u64,
    pub seed: u64,
    pub systematic_slots: u64,
    /// Pairing slots by user, as in [`SimResult::t_hat`].
    pub pairing_slots: [u64; 3],
    pub triple_slots: u64,
    pub after_systematic: [f64; 8],
    pub after_network_coding: [f64; 8],
    pub stopping_shape_ok: bool,
    pub violations: Vec<String>,
}

impl UncodedProfile {
    pub fn t_hat0(&self) -> f64 {
        self.systematic_slots as f64 / self.n_symbols as f64
    }

    pub fn t_hat(&self) -> [f64; 3] {
        self.pairing_slots.map(|s| s as f64 / self.n_symbols as f64)
    }

    /// All uncoded and instantly decodable slots over `N`.
    pub fn uncoded_count(&self) -> f64 {
        let nc: u64 = self.pairing_slots.iter().sum::<u64>() + self.triple_slots;
        (self.systematic_slots + nc) as f64 / self.n_symbols as f64
    }
}

/// Runs only the systematic and network-coding phases, with the event
/// handler off, so their lengths can be compared with the uncoded LP.
pub fn run_uncoded_profile(
    n_symbols: u64,
    eps: &ChannelTriple,
    seed: u64,
    check_invariants: bool,
) -> Result<UncodedProfile> {
    let mut cfg = SimConfig::new(n_symbols, *eps, DistortionTriple::new([0.0; 3])?, seed);
    cfg.check_invariants = check_invariants;
    cfg.validate()?;
    let mut e = engine_for(&cfg, n_symbols as usize, cfg.targets());
    let mut combos = [0u64; 4];
    phases::run_systematic(&mut e, false);
    let systematic_slots = e.slot;
    let after_systematic = e.snapshot();
    phases::run_network_coding(&mut e, false, &mut combos);
    Ok(UncodedProfile {
        n_symbols,
        seed,
        systematic_slots,
        pairing_slots: [combos[0], combos[1], combos[2]],
        triple_slots: combos[3],
        after_systematic,
        after_network_coding: e.snapshot(),
        stopping_shape_ok: phases::stopping_shape_ok(&e),
        violations: std::mem::take(&mut e.violations),
    })
}

/// A chaining phase started from prepared queues: `feed` symbols needed by
/// the builder and target `j`, and `feed` needed by the builder and target
/// `k`. Each target already holds the other target's feed symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainScenario {
    /// Normalizing block length.
    pub n_symbols: u64,
    pub feed: u64,
    /// Erasure rates by user; the builder may have rate 1.
    pub eps: [f64; 3],
    /// Fraction of `N` each user must still reconstruct is `1 - d_hat[u]`.
    pub d_hat: [f64; 3],
    pub builder: usize,
    pub seed: u64,
    pub restricted: bool,
    pub check_invariants: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub slots: u64,
    /// Slots over `N`.
    pub latency: f64,
    pub users: [UserOutcome; 3],
    pub chain: ChainStats,
    /// Whether a feed queue ran dry and the coding phase finished the job.
    pub exhausted: bool,
    pub violations: Vec<String>,
}

impl ChainScenario {
    /// `feed = N`, unrestricted, no checks.
    pub fn new(n_symbols: u64, eps: [f64; 3], d_hat: [f64; 3], builder: usize, seed: u64) -> Self {
        Self {
            n_symbols,
            feed: n_symbols,
            eps,
            d_hat,
            builder,
            seed,
            restricted: false,
            check_invariants: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 || self.feed == 0 || 2 * self.feed > u64::from(u32::MAX) {
            return Err(Error::InvalidInput(
                "block and feed sizes must be positive and fit in 32 bits".into(),
            ));
        }
        if self.builder > 2 {
            return Err(Error::InvalidInput("builder must be 0, 1 or 2".into()));
        }
        let (j, k) = others(self.builder);
        if self.eps.iter().any(|e| !(0.0..=1.0).contains(e))
            || self.eps[j] >= 1.0
            || self.eps[k] >= 1.0
        {
            return Err(Error::InvalidInput(
                "targets need erasure rates in [0, 1), the builder in [0, 1]".into(),
            ));
        }
        if self.d_hat.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::InvalidInput("distortions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Runs chaining from the prepared queues, then the two-user scheme, until
/// every user meets its target.
pub fn run_chain_scenario(sc: &ChainScenario) -> Result<ScenarioResult> {
    sc.validate()?;
    let (i, (j, k)) = (sc.builder, others(sc.builder));
    let feed = sc.feed as usize;
    let mut e = Engine::new(2 * feed, sc.n_symbols, sc.eps, [u64::MAX; 3], sc.seed);
    e.checks = sc.check_invariants;
    for s in 0..feed as u32 {
        e.preload(s, 1 << k, 1 << i | 1 << j);
        e.preload(s + feed as u32, 1 << j, 1 << i | 1 << k);
    }
    let base = e.recon;
    let want: [u64; 3] = std::array::from_fn(|u| symbols_for(sc.n_symbols, 1.0 - sc.d_hat[u]));
    let limits = [2 * sc.feed, sc.feed, sc.feed];
    for (u, limit) in [(i, limits[0]), (j, limits[1]), (k, limits[2])] {
        if want[u] > limit {
            return Err(Error::Config(format!(
                "user {u} wants {} symbols but only {limit} are queued",
                want[u]
            )));
        }
    }
    e.target = std::array::from_fn(|u| base[u] + want[u]);
    e.settle_satisfied();
    let mut stats = ChainStats::default();
    let mut exhausted = false;
    if e.is_active(j) && e.is_active(k) {
        if let chain::ChainExit::Exhausted =
            chain::run_chaining(&mut e, i, sc.restricted, &mut stats)
        {
            exhausted = true;
            phases::run_preprocess(&mut e, &ChannelTriple::new(sc.eps)?)?;
        }
    }
    phases::run_fallback(&mut e)?;
    Ok(ScenarioResult {
        slots: e.slot,
        latency: e.slot as f64 / sc.n_symbols as f64,
        users: outcomes(&e, base),
        chain: stats,
        exhausted,
        violations: std::mem::take(&mut e.violations),
    })
}

#[cfg(test)]
mod tests;
