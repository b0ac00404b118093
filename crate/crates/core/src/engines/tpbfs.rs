use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, RwLock};
use std::time::Instant;

use super::slots::WorkerSlots;
use super::stats::{thread_cpu_time, RunStats};
use super::{empty_flowpipe, outgoing_count, prepare_or_skip, Engine, ExploreOptions, LevelEntry, ReachResult};
use crate::automaton::{HybridAutomaton, SymbolicState};
use crate::cost::flow_cost;
use crate::geometry::TemplatePolytope;
use crate::postc::{Flowpipe, PreparedFlowpipe, ReachError, ReachParams, ScanResult};
use crate::postd::{jump_task, jump_tasks, merge_successors};

/// Splits tasks into `n` contiguous chunks: task `i` goes to the worker
/// whose cost window `[w·per_core, (w+1)·per_core)` contains its start
/// offset. Returns the chunks and `per_core = ⌈Σcost / n⌉`.
pub(crate) fn chunk_by_cost(costs: &[u64], n: usize) -> (Vec<Range<usize>>, u64) {
    let total: u64 = costs.iter().sum();
    let unit = total == 0;
    let total = if unit { costs.len() as u64 } else { total };
    let per_core = total.div_ceil(n as u64).max(1);
    let mut chunks = vec![0..0; n];
    let mut offset = 0u64;
    let mut w_prev = 0;
    let mut start = 0;
    for (i, &c) in costs.iter().enumerate() {
        let w = ((offset / per_core) as usize).min(n - 1);
        if w != w_prev {
            chunks[w_prev] = start..i;
            for empty in chunks.iter_mut().take(w).skip(w_prev + 1) {
                *empty = i..i;
            }
            start = i;
            w_prev = w;
        }
        offset += if unit { 1 } else { c };
    }
    chunks[w_prev] = start..costs.len();
    for empty in chunks.iter_mut().skip(w_prev + 1) {
        *empty = costs.len()..costs.len();
    }
    (chunks, per_core)
}

/// One atomic PostC task. A scan whose negated normal is a template
/// direction also yields that direction's column.
#[derive(Debug, Clone, Copy)]
enum PostcTask {
    Scan { state: usize, k: usize, column: Option<usize> },
    Direction { state: usize, d: usize },
}

#[derive(Default)]
struct Plan {
    done: bool,
    level: usize,
    states: Vec<SymbolicState>,
    prepared: Vec<Option<PreparedFlowpipe>>,
    postc_tasks: Vec<PostcTask>,
    postc_chunks: Vec<Range<usize>>,
    scans: Vec<Vec<ScanResult>>,
    emitted: Vec<usize>,
    /// `columns[state][direction]`, filled by scans and direction tasks.
    columns: Vec<Vec<Vec<f64>>>,
    flowpipes: Vec<Flowpipe>,
    jump_tasks: Vec<(usize, usize, usize)>,
    jump_ranges: Vec<Range<usize>>,
    /// Execution order of `jump_tasks`; chunks index into this.
    jump_order: Vec<usize>,
    jump_chunks: Vec<Range<usize>>,
    jump_results: Vec<Option<TemplatePolytope>>,
    merge_chunks: Vec<Range<usize>>,
}

#[derive(Default)]
struct WorkerOut {
    scans: Vec<(usize, ScanResult, Option<Vec<f64>>)>,
    columns: Vec<(usize, Vec<f64>)>,
    jumps: Vec<(usize, Option<TemplatePolytope>)>,
    /// This worker's part of the next frontier.
    next: Vec<SymbolicState>,
    successors: u64,
    busy: f64,
    error: Option<ReachError>,
}

struct Leader {
    stats: RunStats,
    levels: Vec<Vec<LevelEntry>>,
    error: Option<ReachError>,
}

/// Task-parallel exploration: each level's PostC and PostD are split into
/// atomic tasks and distributed in contiguous chunks of equal predicted cost.
pub fn run_tpbfs(
    ha: &HybridAutomaton,
    init: &SymbolicState,
    p: &ReachParams,
    opts: &ExploreOptions,
) -> Result<ReachResult, ReachError> {
    let n = opts.workers.max(1);
    let wall = Instant::now();
    let plan = RwLock::new(Plan::default());
    let outs: WorkerSlots<WorkerOut> = WorkerSlots::new(n, WorkerOut::default);
    let abort = AtomicBool::new(false);
    let barrier = Barrier::new(n);
    let ndirs = p.directions().len();

    let mut leader = Leader {
        stats: RunStats::new(Engine::Tpbfs, n),
        levels: Vec::new(),
        error: None,
    };

    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut leader_ref = Some(&mut leader);
        for w in 0..n {
            let (plan, outs, abort, barrier) = (&plan, &outs, &abort, &barrier);
            let leader = if w == 0 { leader_ref.take() } else { None };
            handles.push(scope.spawn(move || {
                let mut leader = leader;
                let sync = || {
                    barrier.wait();
                    abort.load(Ordering::Acquire)
                };
                let fail = |e: ReachError, slot: &mut Option<ReachError>| {
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                    abort.store(true, Ordering::Release);
                };
                let mut level = 0usize;
                loop {
                    // Sequential prelude: gather the frontier, cost it and
                    // emit the invariant-scan tasks.
                    if let Some(ld) = leader.as_deref_mut() {
                        let mut pl = plan.write().expect("plan lock");
                        let frontier = if level == 0 {
                            vec![init.clone()]
                        } else {
                            let mut f = Vec::new();
                            for v in 0..n {
                                // SAFETY: workers are parked at the barrier.
                                let o = unsafe { outs.get(v) };
                                f.append(&mut o.next);
                            }
                            f
                        };
                        if frontier.is_empty() || level > opts.bound {
                            ld.stats.frontier_remaining = frontier.len();
                            pl.done = true;
                        } else if let Err(e) = build_postc_plan(&mut pl, ld, frontier, level, ha, p, n) {
                            fail(e, &mut ld.error);
                        }
                    }
                    if sync() || plan.read().expect("plan lock").done {
                        break;
                    }

                    let mut busy = 0.0;
                    // SAFETY: slot `w` is only touched by this worker during
                    // parallel phases and by the leader between barriers.
                    let me = |w: usize| unsafe { outs.get(w) };

                    // Invariant scans.
                    {
                        let pl = plan.read().expect("plan lock");
                        let out = me(w);
                        let range = pl.postc_chunks[w].clone();
                        let t0 = thread_cpu_time();
                        let mut ran = false;
                        for i in range {
                            let PostcTask::Scan { state, k, column } = pl.postc_tasks[i] else {
                                continue;
                            };
                            ran = true;
                            let pf = pl.prepared[state].as_ref().expect("scan task on prepared state");
                            let r = match column {
                                Some(_) => pf.scan_constraint_values(k).map(|(r, v)| (r, Some(v))),
                                None => pf.scan_constraint(k).map(|r| (r, None)),
                            };
                            match r {
                                Ok((r, v)) => out.scans.push((i, r, v)),
                                Err(e) => {
                                    fail(e, &mut out.error);
                                    break;
                                }
                            }
                        }
                        if ran {
                            busy += (thread_cpu_time() - t0).as_secs_f64();
                        }
                    }
                    if sync() {
                        break;
                    }
                    if leader.is_some() {
                        let mut pl = plan.write().expect("plan lock");
                        gather_scans(&mut pl, &outs, n, ndirs);
                    }
                    if sync() {
                        break;
                    }

                    // Template-direction sequences.
                    {
                        let pl = plan.read().expect("plan lock");
                        let out = me(w);
                        let range = pl.postc_chunks[w].clone();
                        let t0 = thread_cpu_time();
                        let mut ran = false;
                        for i in range {
                            let PostcTask::Direction { state, d } = pl.postc_tasks[i] else {
                                continue;
                            };
                            ran = true;
                            let pf = pl.prepared[state].as_ref().expect("direction task on prepared state");
                            match pf.direction_bounds(d, pl.emitted[state]) {
                                Ok(col) => out.columns.push((i, col)),
                                Err(e) => {
                                    fail(e, &mut out.error);
                                    break;
                                }
                            }
                        }
                        if ran {
                            busy += (thread_cpu_time() - t0).as_secs_f64();
                        }
                    }
                    if sync() {
                        break;
                    }
                    if let Some(ld) = leader.as_deref_mut() {
                        let mut pl = plan.write().expect("plan lock");
                        build_jump_tasks(&mut pl, ld, &outs, ha, n);
                    }
                    if sync() {
                        break;
                    }

                    // Jump tasks.
                    {
                        let pl = plan.read().expect("plan lock");
                        let out = me(w);
                        let range = pl.jump_chunks[w].clone();
                        if !range.is_empty() {
                            let t0 = thread_cpu_time();
                            for &i in &pl.jump_order[range] {
                                let (fp, t, om) = pl.jump_tasks[i];
                                match jump_task(&pl.flowpipes[fp], ha, t, om, p.directions()) {
                                    Ok(r) => out.jumps.push((i, r)),
                                    Err(e) => {
                                        fail(e, &mut out.error);
                                        break;
                                    }
                                }
                            }
                            busy += (thread_cpu_time() - t0).as_secs_f64();
                        }
                    }
                    if sync() {
                        break;
                    }
                    if leader.is_some() {
                        let mut pl = plan.write().expect("plan lock");
                        let mut results: Vec<Option<TemplatePolytope>> = vec![None; pl.jump_tasks.len()];
                        for v in 0..n {
                            // SAFETY: workers are parked at the barrier.
                            for (i, r) in unsafe { outs.get(v) }.jumps.drain(..) {
                                results[i] = r;
                            }
                        }
                        pl.jump_results = results;
                        let ones = vec![1u64; pl.flowpipes.len()];
                        pl.merge_chunks = chunk_by_cost(&ones, n).0;
                    }
                    if sync() {
                        break;
                    }

                    // Join images into successor states; worker `w` appends
                    // only to its own part of the next frontier.
                    {
                        let pl = plan.read().expect("plan lock");
                        let out = me(w);
                        let range = pl.merge_chunks[w].clone();
                        if !range.is_empty() {
                            let t0 = thread_cpu_time();
                            for fp in range {
                                let r = pl.jump_ranges[fp].clone();
                                let tasks: Vec<(usize, usize)> =
                                    pl.jump_tasks[r.clone()].iter().map(|&(_, t, om)| (t, om)).collect();
                                match merge_successors(ha, &tasks, pl.jump_results[r].to_vec(), opts.aggregate) {
                                    Ok(succ) => {
                                        out.successors += succ.len() as u64;
                                        out.next.extend(succ.into_iter().map(|s| s.state));
                                    }
                                    Err(e) => {
                                        fail(e, &mut out.error);
                                        break;
                                    }
                                }
                            }
                            busy += (thread_cpu_time() - t0).as_secs_f64();
                        }
                        out.busy = busy;
                    }
                    if sync() {
                        break;
                    }
                    if let Some(ld) = leader.as_deref_mut() {
                        let mut pl = plan.write().expect("plan lock");
                        let mut lvl_busy = vec![0.0; n];
                        for (v, b) in lvl_busy.iter_mut().enumerate() {
                            // SAFETY: workers are parked at the barrier.
                            *b = std::mem::take(&mut unsafe { outs.get(v) }.busy);
                        }
                        ld.stats.level_busy.push(lvl_busy);
                        ld.stats.levels = pl.level;
                        let states = std::mem::take(&mut pl.states);
                        let flowpipes = std::mem::take(&mut pl.flowpipes);
                        ld.levels.push(
                            states
                                .into_iter()
                                .zip(flowpipes)
                                .map(|(state, flowpipe)| LevelEntry {
                                    level: pl.level,
                                    state,
                                    flowpipe,
                                })
                                .collect(),
                        );
                    }
                    level += 1;
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });

    if let Some(e) = leader.error.take() {
        return Err(e);
    }
    for w in 0..n {
        // SAFETY: all workers have finished.
        let out = unsafe { outs.get(w) };
        if let Some(e) = out.error.take() {
            return Err(e);
        }
        leader.stats.successors += out.successors;
    }
    leader.stats.finish(wall.elapsed());
    Ok(ReachResult {
        levels: leader.levels,
        stats: leader.stats,
    })
}

fn build_postc_plan(
    pl: &mut Plan,
    ld: &mut Leader,
    frontier: Vec<SymbolicState>,
    level: usize,
    ha: &HybridAutomaton,
    p: &ReachParams,
    n: usize,
) -> Result<(), ReachError> {
    let ndirs = p.directions().len();
    let mut prepared = Vec::with_capacity(frontier.len());
    let mut estimates = Vec::with_capacity(frontier.len());
    for s in &frontier {
        let pf = prepare_or_skip(s, ha, p)?;
        let j = match &pf {
            Some(_) => flow_cost(s, ha, p)
                .map(|c| c.j)
                .unwrap_or(p.steps()),
            None => 0,
        };
        prepared.push(pf);
        estimates.push(j as u64);
    }
    let mut tasks = Vec::new();
    let mut costs = Vec::new();
    for (state, pf) in prepared.iter().enumerate() {
        let Some(pf) = pf else { continue };
        let mut covered = vec![false; ndirs];
        for k in 0..pf.invariant.len() {
            let column = pf.scan_direction(k).filter(|d| !covered[*d]);
            if let Some(d) = column {
                covered[d] = true;
            }
            tasks.push(PostcTask::Scan { state, k, column });
            costs.push(estimates[state]);
        }
        for d in (0..ndirs).filter(|d| !covered[*d]) {
            tasks.push(PostcTask::Direction { state, d });
            costs.push(estimates[state]);
        }
    }
    let total: u64 = costs.iter().sum();
    let (chunks, per_core) = chunk_by_cost(&costs, n);
    let assigned = chunks.iter().map(|r| costs[r.clone()].iter().sum()).collect();
    ld.stats.level_assigned_cost.push(assigned);
    ld.stats.level_tasks_per_core.push(if total == 0 { 0 } else { per_core });
    ld.stats.level_max_task_cost.push(costs.iter().copied().max().unwrap_or(0));

    *pl = Plan {
        done: false,
        level,
        scans: vec![Vec::new(); frontier.len()],
        columns: vec![vec![Vec::new(); ndirs]; frontier.len()],
        states: frontier,
        prepared,
        postc_tasks: tasks,
        postc_chunks: chunks,
        ..Plan::default()
    };
    Ok(())
}

fn gather_scans(pl: &mut Plan, outs: &WorkerSlots<WorkerOut>, n: usize, ndirs: usize) {
    let mut results: Vec<Option<(ScanResult, Option<Vec<f64>>)>> = vec![None; pl.postc_tasks.len()];
    for v in 0..n {
        // SAFETY: workers are parked at the barrier.
        for (i, r, col) in unsafe { outs.get(v) }.scans.drain(..) {
            results[i] = Some((r, col));
        }
    }
    let mut reused = Vec::new();
    for (task, r) in pl.postc_tasks.iter().zip(results) {
        if let PostcTask::Scan { state, column, .. } = *task {
            let (r, values) = r.expect("every scan task ran");
            pl.scans[state].push(r);
            if let (Some(d), Some(values)) = (column, values) {
                reused.push((state, d, values));
            }
        }
    }
    pl.emitted = pl
        .prepared
        .iter()
        .zip(&pl.scans)
        .map(|(pf, sc)| pf.as_ref().map_or(0, |pf| pf.emitted(sc)))
        .collect();
    for (state, d, mut values) in reused {
        values.truncate(pl.emitted[state]);
        debug_assert!(d < ndirs && values.len() == pl.emitted[state]);
        pl.columns[state][d] = values;
    }
}

fn build_jump_tasks(
    pl: &mut Plan,
    ld: &mut Leader,
    outs: &WorkerSlots<WorkerOut>,
    ha: &HybridAutomaton,
    n: usize,
) {
    for v in 0..n {
        // SAFETY: workers are parked at the barrier.
        for (i, c) in unsafe { outs.get(v) }.columns.drain(..) {
            if let PostcTask::Direction { state, d } = pl.postc_tasks[i] {
                pl.columns[state][d] = c;
            }
        }
    }
    let mut flowpipes = Vec::with_capacity(pl.states.len());
    for (s, pf) in pl.prepared.iter().enumerate() {
        let f = match pf {
            Some(pf) => pf.assemble(&pl.columns[s], &pl.scans[s]),
            None => empty_flowpipe(pl.states[s].loc),
        };
        ld.stats.post_c += 1;
        ld.stats.post_d += 1;
        ld.stats.support_samples += f.support_samples;
        ld.stats.check_samples += f.check_samples;
        ld.stats.jump_tasks += f.omegas.len() as u64 * outgoing_count(ha, f.loc);
        flowpipes.push(f);
    }
    let mut tasks = Vec::new();
    let mut ranges = Vec::with_capacity(flowpipes.len());
    for (fp, f) in flowpipes.iter().enumerate() {
        let start = tasks.len();
        tasks.extend(jump_tasks(f, ha).into_iter().map(|(t, om)| (fp, t, om)));
        ranges.push(start..tasks.len());
    }
    // Chunks are cut from a cyclic ordering of the task list.
    pl.jump_order = (0..n).flat_map(|r| (r..tasks.len()).step_by(n)).collect();
    let ones = vec![1u64; tasks.len()];
    pl.jump_chunks = chunk_by_cost(&ones, n).0;
    pl.jump_tasks = tasks;
    pl.jump_ranges = ranges;
    pl.flowpipes = flowpipes;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{gen_bouncing_ball, gen_circle};
    use crate::engines::{run_seq, signature_distance};
    use crate::geometry::TemplateDirections;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn chunks_examples() {
        let (c, per) = chunk_by_cost(&[5; 8], 4);
        assert_eq!(per, 10);
        assert_eq!(c, vec![0..2, 2..4, 4..6, 6..8]);
        let (c, _) = chunk_by_cost(&[], 3);
        assert_eq!(c, vec![0..0, 0..0, 0..0]);
        let (c, _) = chunk_by_cost(&[100, 1, 1], 3);
        assert_eq!(c, vec![0..1, 1..1, 1..3]);
        let (c, _) = chunk_by_cost(&[0, 0, 0, 0], 2);
        assert_eq!(c, vec![0..2, 2..4]);
    }

    proptest! {
        #[test]
        fn chunks_are_contiguous_and_balanced(
            costs in proptest::collection::vec(0u64..50, 0..40),
            n in 1usize..9,
        ) {
            let (chunks, per) = chunk_by_cost(&costs, n);
            prop_assert_eq!(chunks.len(), n);
            let mut next = 0;
            for c in &chunks {
                prop_assert_eq!(c.start, next);
                next = c.end;
            }
            prop_assert_eq!(next, costs.len());
            if costs.iter().sum::<u64>() > 0 {
                let max = costs.iter().copied().max().unwrap();
                for c in &chunks {
                    prop_assert!(costs[c.clone()].iter().sum::<u64>() <= per + max);
                }
            }
        }
    }

    fn params() -> ReachParams {
        ReachParams::new(10.0, 1e-2, Arc::new(TemplateDirections::boxed(2))).unwrap()
    }

    #[test]
    fn matches_sequential() {
        for ha in [gen_circle(), gen_bouncing_ball()] {
            let base = ExploreOptions {
                bound: 4,
                ..Default::default()
            };
            let s = run_seq(&ha, ha.init(), &params(), &base).unwrap();
            for workers in [1, 2, 4] {
                let t = run_tpbfs(&ha, ha.init(), &params(), &ExploreOptions { workers, ..base.clone() }).unwrap();
                assert_eq!(signature_distance(&t.signature(), &s.signature()), Some(0.0));
                assert_eq!(t.stats.post_c, s.stats.post_c);
                assert_eq!(t.stats.support_samples, s.stats.support_samples);
                assert_eq!(t.stats.check_samples, s.stats.check_samples);
                assert_eq!(t.stats.successors, s.stats.successors);
                assert_eq!(t.stats.levels, s.stats.levels);
                assert_eq!(t.stats.frontier_remaining, s.stats.frontier_remaining);
            }
        }
    }

    #[test]
    fn balance_contract_holds() {
        let ha = gen_circle();
        let p = ReachParams::new(10.0, 1e-2, Arc::new(TemplateDirections::octagonal(2))).unwrap();
        let r = run_tpbfs(&ha, ha.init(), &p, &ExploreOptions { bound: 3, workers: 4, ..Default::default() }).unwrap();
        for ((assigned, per), max) in r
            .stats
            .level_assigned_cost
            .iter()
            .zip(&r.stats.level_tasks_per_core)
            .zip(&r.stats.level_max_task_cost)
        {
            assert!(assigned.iter().all(|a| *a <= per + max));
            assert_eq!(assigned.iter().filter(|a| **a > 0).count(), 4);
        }
    }
}
