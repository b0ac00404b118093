use std::collections::HashMap;
use std::time::Instant;

use super::stats::{thread_cpu_time, RunStats};
use super::{expand, outgoing_count, Engine, ExploreOptions, LevelEntry, ReachResult};
use crate::automaton::{HybridAutomaton, LocationId, SymbolicState};
use crate::geometry::TemplatePolytope;
use crate::postc::{ReachError, ReachParams};

const CONTAINMENT_TOL: f64 = 1e-9;

/// Single-threaded worklist exploration, level by level.
pub fn run_seq(
    ha: &HybridAutomaton,
    init: &SymbolicState,
    p: &ReachParams,
    opts: &ExploreOptions,
) -> Result<ReachResult, ReachError> {
    let wall = Instant::now();
    let mut stats = RunStats::new(Engine::Seq, 1);
    let mut levels = Vec::new();
    let mut seen: HashMap<LocationId, Vec<TemplatePolytope>> = HashMap::new();
    let mut frontier = vec![init.clone()];
    let mut level = 0;

    while !frontier.is_empty() && level <= opts.bound {
        let start = thread_cpu_time();
        let mut entries = Vec::with_capacity(frontier.len());
        let mut next = Vec::new();
        for s in frontier.drain(..) {
            let (f, succ) = expand(&s, ha, p, opts.aggregate)?;
            stats.post_c += 1;
            stats.post_d += 1;
            stats.support_samples += f.support_samples;
            stats.check_samples += f.check_samples;
            stats.jump_tasks += f.omegas.len() as u64 * outgoing_count(ha, f.loc);
            stats.successors += succ.len() as u64;
            if opts.containment {
                seen.entry(f.loc).or_default().extend(f.omegas.iter().cloned());
            }
            for sc in succ {
                let contained = opts.containment
                    && seen.get(&sc.state.loc).is_some_and(|known| {
                        known
                            .iter()
                            .any(|k| sc.bounds.dominated_by(k, CONTAINMENT_TOL))
                    });
                if !contained {
                    next.push(sc.state);
                }
            }
            entries.push(LevelEntry {
                level,
                state: s,
                flowpipe: f,
            });
        }
        stats
            .level_busy
            .push(vec![(thread_cpu_time() - start).as_secs_f64()]);
        stats.levels = level;
        levels.push(entries);
        frontier = next;
        level += 1;
    }
    stats.frontier_remaining = frontier.len();
    stats.finish(wall.elapsed());
    Ok(ReachResult { levels, stats })
}
