//! Breadth-first exploration engines.
//!
//! All three engines expand levels `0..=bound` and compute every flowpipe
//! and every jump with the same sequential primitives, so their results are
//! bitwise identical up to the order of states within a level.

mod agjh;
mod seq;
mod slots;
mod stats;
mod tpbfs;

use std::fmt;
use std::str::FromStr;

use crate::automaton::{HybridAutomaton, LocationId, SymbolicState};
use crate::postc::{prepare, Flowpipe, PreparedFlowpipe, ReachError, ReachParams};
use crate::postd::{post_d, Successor};

pub use agjh::{run_agjh, run_agjh_logged, SlotWrite};
pub use seq::run_seq;
pub use stats::{thread_cpu_time, RunStats};
pub use tpbfs::run_tpbfs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Seq,
    Agjh,
    Tpbfs,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Seq, Engine::Agjh, Engine::Tpbfs];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Seq => "seq",
            Engine::Agjh => "agjh",
            Engine::Tpbfs => "tpbfs",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seq" => Ok(Engine::Seq),
            "agjh" => Ok(Engine::Agjh),
            "tpbfs" => Ok(Engine::Tpbfs),
            _ => Err(format!("unknown engine `{s}` (expected seq, agjh or tpbfs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreOptions {
    /// Deepest BFS level to expand.
    pub bound: usize,
    /// Merge all images of one transition into a single successor.
    pub aggregate: bool,
    /// Drop successors whose bounds are dominated by an already computed Ω
    /// of the same location. Only honoured by the sequential engine.
    pub containment: bool,
    pub workers: usize,
    pub seed: u64,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            bound: 5,
            aggregate: true,
            containment: false,
            workers: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelEntry {
    pub level: usize,
    pub state: SymbolicState,
    pub flowpipe: Flowpipe,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub levels: Vec<Vec<LevelEntry>>,
    pub stats: RunStats,
}

/// Order-insensitive fingerprint of one level: `(location, Ω bounds)` per
/// state, sorted.
pub type LevelSignature = Vec<(LocationId, Vec<Vec<f64>>)>;

impl ReachResult {
    pub fn entries(&self) -> impl Iterator<Item = &LevelEntry> {
        self.levels.iter().flatten()
    }

    pub fn signature(&self) -> Vec<LevelSignature> {
        self.levels
            .iter()
            .map(|lvl| {
                let mut sig: LevelSignature = lvl
                    .iter()
                    .map(|e| {
                        (
                            e.state.loc,
                            e.flowpipe.omegas.iter().map(|o| o.bounds.clone()).collect(),
                        )
                    })
                    .collect();
                sig.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| cmp_bounds(&a.1, &b.1)));
                sig
            })
            .collect()
    }
}

fn cmp_bounds(a: &[Vec<f64>], b: &[Vec<f64>]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Largest bound difference between two signatures, or `None` if their
/// shapes (levels, locations, Ω counts) differ.
pub fn signature_distance(a: &[LevelSignature], b: &[LevelSignature]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (la, lb) in a.iter().zip(b) {
        if la.len() != lb.len() {
            return None;
        }
        for ((loc_a, oa), (loc_b, ob)) in la.iter().zip(lb) {
            if loc_a != loc_b || oa.len() != ob.len() {
                return None;
            }
            for (x, y) in oa.iter().flatten().zip(ob.iter().flatten()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Some(worst)
}

/// Runs `engine` with `opts`.
pub fn run(
    engine: Engine,
    ha: &HybridAutomaton,
    init: &SymbolicState,
    p: &ReachParams,
    opts: &ExploreOptions,
) -> Result<ReachResult, ReachError> {
    match engine {
        Engine::Seq => run_seq(ha, init, p, opts),
        Engine::Agjh => run_agjh(ha, init, p, opts),
        Engine::Tpbfs => run_tpbfs(ha, init, p, opts),
    }
}

/// Like [`prepare`], but a state already outside its invariant yields `None`
/// (an empty flowpipe) instead of an error.
pub(crate) fn prepare_or_skip(
    s: &SymbolicState,
    ha: &HybridAutomaton,
    p: &ReachParams,
) -> Result<Option<PreparedFlowpipe>, ReachError> {
    match prepare(s, ha, p) {
        Ok(pf) => Ok(Some(pf)),
        Err(ReachError::EmptyFlowpipe) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn empty_flowpipe(loc: LocationId) -> Flowpipe {
    Flowpipe {
        loc,
        omegas: Vec::new(),
        support_samples: 0,
        check_samples: 0,
    }
}

/// PostC followed by PostD for one state.
pub(crate) fn expand(
    s: &SymbolicState,
    ha: &HybridAutomaton,
    p: &ReachParams,
    aggregate: bool,
) -> Result<(Flowpipe, Vec<Successor>), ReachError> {
    let f = match prepare_or_skip(s, ha, p)? {
        Some(pf) => pf.run()?,
        None => empty_flowpipe(s.loc),
    };
    let succ = post_d(&f, ha, p.directions(), aggregate)?;
    Ok((f, succ))
}

pub(crate) fn outgoing_count(ha: &HybridAutomaton, loc: LocationId) -> u64 {
    ha.outgoing(loc).count() as u64
}
