use std::time::Duration;

use super::Engine;

/// Counters and timings of one exploration run. Times are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub engine: Engine,
    pub workers: usize,
    /// Index of the deepest level that was expanded.
    pub levels: usize,
    pub post_c: u64,
    pub post_d: u64,
    /// Successor states produced by PostD, including those left unexpanded.
    pub successors: u64,
    pub total_posts: u64,
    pub support_samples: u64,
    pub check_samples: u64,
    pub jump_tasks: u64,
    /// Successors of the last expanded level that the bound cut off.
    pub frontier_remaining: usize,
    /// Thread CPU time spent on post operations, per worker.
    pub busy: Vec<f64>,
    /// `level_busy[level][worker]`.
    pub level_busy: Vec<Vec<f64>>,
    /// Task-parallel engine only: cost of PostC tasks assigned per worker.
    pub level_assigned_cost: Vec<Vec<u64>>,
    pub level_tasks_per_core: Vec<u64>,
    pub level_max_task_cost: Vec<u64>,
    pub wall: f64,
    pub utilization: f64,
}

impl RunStats {
    pub(crate) fn new(engine: Engine, workers: usize) -> Self {
        RunStats {
            engine,
            workers,
            levels: 0,
            post_c: 0,
            post_d: 0,
            successors: 0,
            total_posts: 0,
            support_samples: 0,
            check_samples: 0,
            jump_tasks: 0,
            frontier_remaining: 0,
            busy: vec![0.0; workers],
            level_busy: Vec::new(),
            level_assigned_cost: Vec::new(),
            level_tasks_per_core: Vec::new(),
            level_max_task_cost: Vec::new(),
            wall: 0.0,
            utilization: 0.0,
        }
    }

    pub(crate) fn finish(&mut self, wall: Duration) {
        self.wall = wall.as_secs_f64();
        self.total_posts = self.post_c + self.post_d;
        for lvl in &self.level_busy {
            for (b, x) in self.busy.iter_mut().zip(lvl) {
                *b += x;
            }
        }
        let total: f64 = self.busy.iter().sum();
        self.utilization = if self.wall > 0.0 {
            (total / (self.workers as f64 * self.wall)).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}

/// CPU time consumed by the calling thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}
