use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Barrier;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::slots::{SlotGrid, WorkerSlots};
use super::stats::{thread_cpu_time, RunStats};
use super::{expand, outgoing_count, Engine, ExploreOptions, LevelEntry, ReachResult};
use crate::automaton::{HybridAutomaton, SymbolicState};
use crate::postc::{ReachError, ReachParams};

/// One append to the write buffer, as recorded by the instrumented run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotWrite {
    pub level: usize,
    pub worker: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Default)]
struct WorkerOut {
    entries: Vec<LevelEntry>,
    level_busy: Vec<f64>,
    post_c: u64,
    support_samples: u64,
    check_samples: u64,
    jump_tasks: u64,
    successors: u64,
    writes: Vec<SlotWrite>,
    error: Option<ReachError>,
    frontier_remaining: usize,
    last_level: usize,
}

/// Stream of target rows for worker `w` at `level`.
fn row_stream(seed: u64, level: usize, w: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 24) | w as u64);
    rng
}

/// Lock-free parallel exploration with random scattering of successors
/// over the rows of a double-buffered `N × N` worklist.
pub fn run_agjh(
    ha: &HybridAutomaton,
    init: &SymbolicState,
    p: &ReachParams,
    opts: &ExploreOptions,
) -> Result<ReachResult, ReachError> {
    run_agjh_logged(ha, init, p, opts).map(|(r, _)| r)
}

/// [`run_agjh`] that also returns every write-buffer append.
pub fn run_agjh_logged(
    ha: &HybridAutomaton,
    init: &SymbolicState,
    p: &ReachParams,
    opts: &ExploreOptions,
) -> Result<(ReachResult, Vec<SlotWrite>), ReachError> {
    let n = opts.workers.max(1);
    let wall = Instant::now();
    let grid: SlotGrid<SymbolicState> = SlotGrid::new(n);
    // SAFETY: no worker is running yet.
    unsafe { grid.push(0, 0, 0, init.clone()) };
    let outs: WorkerSlots<WorkerOut> = WorkerSlots::new(n, WorkerOut::default);
    let counts: [Vec<AtomicU64>; 2] = [
        (0..n).map(|_| AtomicU64::new(0)).collect(),
        (0..n).map(|_| AtomicU64::new(0)).collect(),
    ];
    let failed = AtomicBool::new(false);
    let barrier = Barrier::new(n);

    std::thread::scope(|scope| {
        for w in 0..n {
            let (grid, outs, counts, failed, barrier) = (&grid, &outs, &counts, &failed, &barrier);
            scope.spawn(move || {
                // SAFETY: slot `w` is owned by this worker until the scope ends.
                let out = unsafe { outs.get(w) };
                let mut t = 0;
                let mut level = 0;
                loop {
                    // SAFETY: buffer `t` is the read buffer of this level and
                    // row `w` belongs to this worker.
                    let items = unsafe { grid.take_row(t, w) };
                    let mut written = 0u64;
                    let mut busy = 0.0;
                    if !items.is_empty() && !failed.load(Ordering::Relaxed) {
                        let mut rng = row_stream(opts.seed, level, w);
                        let start = thread_cpu_time();
                        for s in items {
                            match expand(&s, ha, p, opts.aggregate) {
                                Ok((f, succ)) => {
                                    out.post_c += 1;
                                    out.support_samples += f.support_samples;
                                    out.check_samples += f.check_samples;
                                    out.jump_tasks += f.omegas.len() as u64 * outgoing_count(ha, f.loc);
                                    out.successors += succ.len() as u64;
                                    for sc in succ {
                                        let row = rng.gen_range(0..n);
                                        // SAFETY: buffer `1 - t` is the write
                                        // buffer and column `w` is ours.
                                        unsafe { grid.push(1 - t, row, w, sc.state) };
                                        out.writes.push(SlotWrite { level, worker: w, row, col: w });
                                        written += 1;
                                    }
                                    out.entries.push(LevelEntry { level, state: s, flowpipe: f });
                                }
                                Err(e) => {
                                    out.error = Some(e);
                                    failed.store(true, Ordering::Relaxed);
                                    break;
                                }
                            }
                        }
                        busy = (thread_cpu_time() - start).as_secs_f64();
                    }
                    out.level_busy.push(busy);
                    counts[level % 2][w].store(written, Ordering::Relaxed);
                    barrier.wait();
                    let total: u64 = counts[level % 2].iter().map(|c| c.load(Ordering::Relaxed)).sum();
                    out.last_level = level;
                    if failed.load(Ordering::Relaxed) || total == 0 {
                        break;
                    }
                    if level == opts.bound {
                        out.frontier_remaining = total as usize;
                        break;
                    }
                    t = 1 - t;
                    level += 1;
                }
            });
        }
    });

    let mut stats = RunStats::new(Engine::Agjh, n);
    let mut levels: Vec<Vec<LevelEntry>> = Vec::new();
    let mut writes = Vec::new();
    for w in 0..outs.len() {
        // SAFETY: all workers have finished.
        let out = unsafe { outs.get(w) };
        if let Some(e) = out.error.take() {
            return Err(e);
        }
        stats.post_c += out.post_c;
        stats.post_d += out.post_c;
        stats.support_samples += out.support_samples;
        stats.check_samples += out.check_samples;
        stats.jump_tasks += out.jump_tasks;
        stats.successors += out.successors;
        stats.frontier_remaining = out.frontier_remaining;
        stats.levels = out.last_level;
        for (lvl, b) in out.level_busy.iter().enumerate() {
            if stats.level_busy.len() <= lvl {
                stats.level_busy.push(vec![0.0; n]);
            }
            stats.level_busy[lvl][w] = *b;
        }
        for e in out.entries.drain(..) {
            while levels.len() <= e.level {
                levels.push(Vec::new());
            }
            levels[e.level].push(e);
        }
        writes.append(&mut out.writes);
    }
    stats.finish(wall.elapsed());
    Ok((ReachResult { levels, stats }, writes))
}
