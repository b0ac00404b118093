//! Lock-free exclusive storage shared between the workers of one run.
//!
//! Neither type synchronizes anything by itself. Exclusivity comes from an
//! ownership discipline, with barriers separating the phases in which the
//! owner of a cell changes. Each unsafe method states the discipline it
//! relies on.

use std::cell::UnsafeCell;

#[repr(align(128))]
struct Padded<T>(UnsafeCell<T>);

/// Two buffers of an `n × n` grid of lists.
///
/// Within a level, worker `w` drains row `w` of the read buffer and appends
/// only to column `w` of the write buffer.
pub(crate) struct SlotGrid<T> {
    n: usize,
    cells: Vec<Padded<Vec<T>>>,
}

// SAFETY: cells are only reached through the unsafe methods below, whose
// callers guarantee that no cell is accessed by two threads without an
// intervening barrier.
unsafe impl<T: Send> Sync for SlotGrid<T> {}

impl<T> SlotGrid<T> {
    pub fn new(n: usize) -> Self {
        SlotGrid {
            n,
            cells: (0..2 * n * n).map(|_| Padded(UnsafeCell::new(Vec::new()))).collect(),
        }
    }

    fn idx(&self, buf: usize, row: usize, col: usize) -> usize {
        debug_assert!(buf < 2 && row < self.n && col < self.n);
        (buf * self.n + row) * self.n + col
    }

    /// Empties row `row` of buffer `buf`, columns in order.
    ///
    /// # Safety
    /// Only worker `row` may call this while buffer `buf` is the read buffer,
    /// and no thread may be writing to buffer `buf`.
    pub unsafe fn take_row(&self, buf: usize, row: usize) -> Vec<T> {
        let mut out = Vec::new();
        for col in 0..self.n {
            let cell = &mut *self.cells[self.idx(buf, row, col)].0.get();
            out.append(cell);
        }
        out
    }

    /// Appends to cell `(row, col)` of buffer `buf`.
    ///
    /// # Safety
    /// Only worker `col` may call this while buffer `buf` is the write
    /// buffer, or a single thread while no worker is running.
    pub unsafe fn push(&self, buf: usize, row: usize, col: usize, item: T) {
        (*self.cells[self.idx(buf, row, col)].0.get()).push(item);
    }
}

/// One exclusively owned value per worker.
pub(crate) struct WorkerSlots<T> {
    cells: Vec<Padded<T>>,
}

// SAFETY: see `get`.
unsafe impl<T: Send> Sync for WorkerSlots<T> {}

impl<T> WorkerSlots<T> {
    pub fn new(n: usize, init: impl Fn() -> T) -> Self {
        WorkerSlots {
            cells: (0..n).map(|_| Padded(UnsafeCell::new(init()))).collect(),
        }
    }

    /// # Safety
    /// During a parallel phase only worker `w` may call this for slot `w`;
    /// between barriers a single leader thread may access any slot. No two
    /// references to one slot may be alive at the same time.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn get(&self, w: usize) -> &mut T {
        &mut *self.cells[w].0.get()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Barrier;

    #[test]
    fn rows_and_columns_are_disjoint_across_threads() {
        let n = 4;
        let grid = SlotGrid::<(usize, usize)>::new(n);
        let barrier = Barrier::new(n);
        std::thread::scope(|s| {
            for w in 0..n {
                let (grid, barrier) = (&grid, &barrier);
                s.spawn(move || {
                    for row in 0..n {
                        unsafe { grid.push(1, row, w, (row, w)) };
                    }
                    barrier.wait();
                    let got = unsafe { grid.take_row(1, w) };
                    assert_eq!(got, (0..n).map(|c| (w, c)).collect::<Vec<_>>());
                });
            }
        });
    }
}
