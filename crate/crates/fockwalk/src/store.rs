//! Selective amplitude store for the density-matrix scheduler.
//!
//! The scheduler only ever touches five structural classes of entries,
//! addressed as a fully paired (diagonal) base coordinate plus a small
//! offset:
//!
//! * `Diag` — the paired entry itself; retained for output, read freely.
//! * `Single` — `+1` on one axis of one pair.
//! * `Double` — `+2` on the leading axis of one pair.
//! * `UpUp` — `+1` on the leading axes of two distinct pairs.
//! * `UpDown` — `+1` on the leading axis of one pair and `+1` on the
//!   trailing axis of a later pair.
//!
//! Diagonal entries live in a dense array; everything else lives in an
//! ordered map keyed by `(diagonal base, offset tag)`. In buffered mode each
//! off-diagonal entry is written exactly once and read exactly once, and the
//! read evicts it; the store turns any violation of that discipline into a
//! hard [`FockError::SchedulerBug`] rather than silently producing wrong
//! numbers. Cells are `width` complex lanes wide so the same store carries
//! plain amplitudes (`width = 1`), amplitudes bundled with their parameter
//! gradients (`width = 1 + D + D²`), or whole conditional blocks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::lattice::{linear_index, strides};
use crate::C64;

/// Structural offset from a paired base coordinate. Pair indices are
/// zero-based mode positions; `axis` is a zero-based interleaved axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OffsetTag {
    /// `+1` on the given interleaved axis.
    Single { axis: u8 },
    /// `+2` on the leading axis of the given pair.
    Double { pair: u8 },
    /// `+1` on the leading axes of pairs `lead` and `other` (`lead < other`).
    UpUp { lead: u8, other: u8 },
    /// `+1` on the leading axis of `lead`, `+1` on the trailing axis of
    /// `other` (`lead < other`).
    UpDown { lead: u8, other: u8 },
}

/// Address of a stored cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellRef {
    /// Paired entry, by linear offset into the dense diagonal array.
    Diag(usize),
    /// Off-diagonal entry: diagonal base (linear) plus offset tag.
    Off(usize, OffsetTag),
}

/// Write totals per offset class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OffsetCounts {
    pub diag: u64,
    pub single: u64,
    pub double: u64,
    pub up_up: u64,
    pub up_down: u64,
}

impl OffsetCounts {
    #[must_use]
    pub fn total(&self) -> u64 {
        self.diag + self.single + self.double + self.up_up + self.up_down
    }
}

/// Instrumented amplitude store. See the module docs for the discipline it
/// enforces.
#[derive(Debug)]
pub struct BufferedStore {
    mode_cutoffs: Vec<usize>,
    diag_strides: Vec<usize>,
    width: usize,
    /// When set, off-diagonal reads evict and the read/write-once discipline
    /// is enforced. When clear the store keeps everything (reference mode).
    buffered: bool,
    diag: Vec<C64>,
    diag_written: Vec<bool>,
    diag_live: usize,
    off: BTreeMap<(usize, OffsetTag), Vec<C64>>,
    counts: OffsetCounts,
    cells_written: u64,
    peak_cells: usize,
}

impl BufferedStore {
    /// `mode_cutoffs` bound the dense diagonal array; `width` is the number
    /// of complex lanes per cell (zero for dry bookkeeping runs).
    #[must_use]
    pub fn new(mode_cutoffs: &[usize], width: usize, buffered: bool) -> Self {
        let cells: usize = mode_cutoffs.iter().product();
        BufferedStore {
            mode_cutoffs: mode_cutoffs.to_vec(),
            diag_strides: strides(mode_cutoffs),
            width,
            buffered,
            diag: vec![C64::new(0.0, 0.0); cells * width],
            diag_written: vec![false; cells],
            diag_live: 0,
            off: BTreeMap::new(),
            counts: OffsetCounts::default(),
            cells_written: 0,
            peak_cells: 0,
        }
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn mode_cutoffs(&self) -> &[usize] {
        &self.mode_cutoffs
    }

    /// Linear diagonal offset of a mode-level coordinate.
    #[must_use]
    pub fn diag_lin(&self, n: &[usize]) -> usize {
        linear_index(n, &self.diag_strides)
    }

    /// Store a cell. Double writes are scheduler bugs.
    pub fn write(&mut self, cell: CellRef, payload: &[C64]) -> Result<()> {
        debug_assert_eq!(payload.len(), self.width);
        match cell {
            CellRef::Diag(lin) => {
                if self.diag_written[lin] {
                    return Err(FockError::SchedulerBug(format!(
                        "double write to diagonal cell {lin}"
                    )));
                }
                self.diag_written[lin] = true;
                self.diag_live += 1;
                self.diag[lin * self.width..(lin + 1) * self.width].copy_from_slice(payload);
                self.counts.diag += 1;
            }
            CellRef::Off(base, tag) => {
                if self.off.insert((base, tag), payload.to_vec()).is_some() {
                    return Err(FockError::SchedulerBug(format!(
                        "double write to off-diagonal cell {base}/{tag:?}"
                    )));
                }
                match tag {
                    OffsetTag::Single { .. } => self.counts.single += 1,
                    OffsetTag::Double { .. } => self.counts.double += 1,
                    OffsetTag::UpUp { .. } => self.counts.up_up += 1,
                    OffsetTag::UpDown { .. } => self.counts.up_down += 1,
                }
            }
        }
        self.cells_written += 1;
        self.peak_cells = self.peak_cells.max(self.live_cells());
        Ok(())
    }

    /// Read a cell without consuming it (diagonal reads, pivot-value peeks).
    /// Missing data is a scheduler bug.
    pub fn peek(&self, cell: CellRef) -> Result<&[C64]> {
        match cell {
            CellRef::Diag(lin) => {
                if !self.diag_written[lin] {
                    return Err(FockError::SchedulerBug(format!(
                        "peek of unwritten diagonal cell {lin}"
                    )));
                }
                Ok(&self.diag[lin * self.width..(lin + 1) * self.width])
            }
            CellRef::Off(base, tag) => self.off.get(&(base, tag)).map(Vec::as_slice).ok_or_else(|| {
                FockError::SchedulerBug(format!("peek of missing off-diagonal cell {base}/{tag:?}"))
            }),
        }
    }

    /// True when the cell is currently stored.
    #[must_use]
    pub fn contains(&self, cell: CellRef) -> bool {
        match cell {
            CellRef::Diag(lin) => self.diag_written[lin],
            CellRef::Off(base, tag) => self.off.contains_key(&(base, tag)),
        }
    }

    /// Consume an off-diagonal cell: in buffered mode this removes it, and a
    /// second read of the same cell (or a read of a never-written one)
    /// surfaces as a scheduler bug. In reference mode the value is read in
    /// place.
    pub fn read_evict(&mut self, base: usize, tag: OffsetTag) -> Result<Vec<C64>> {
        if self.buffered {
            self.off.remove(&(base, tag)).ok_or_else(|| {
                FockError::SchedulerBug(format!(
                    "read of missing off-diagonal cell {base}/{tag:?} (evicted twice or never written)"
                ))
            })
        } else {
            self.off.get(&(base, tag)).cloned().ok_or_else(|| {
                FockError::SchedulerBug(format!("read of never-written off-diagonal cell {base}/{tag:?}"))
            })
        }
    }

    /// Drop an off-diagonal cell that provably has no future reader.
    pub fn evict_unread(&mut self, base: usize, tag: OffsetTag) -> Result<()> {
        if !self.buffered {
            return Ok(());
        }
        self.off.remove(&(base, tag)).map(|_| ()).ok_or_else(|| {
            FockError::SchedulerBug(format!("eviction of missing off-diagonal cell {base}/{tag:?}"))
        })
    }

    /// Currently stored cells (diagonal plus off-diagonal).
    #[must_use]
    pub fn live_cells(&self) -> usize {
        self.diag_live + self.off.len()
    }

    /// High-water mark of [`Self::live_cells`] over the run so far.
    #[must_use]
    pub fn peak_cells(&self) -> usize {
        self.peak_cells
    }

    /// Total cells written (including the seed).
    #[must_use]
    pub fn cells_written(&self) -> u64 {
        self.cells_written
    }

    #[must_use]
    pub fn counts(&self) -> OffsetCounts {
        self.counts
    }

    #[must_use]
    pub fn off_diagonal_len(&self) -> usize {
        self.off.len()
    }

    #[must_use]
    pub fn diag_written_count(&self) -> usize {
        self.diag_live
    }

    /// Value lane of every diagonal cell, in row-major mode order. Unwritten
    /// cells read as zero.
    #[must_use]
    pub fn diag_values(&self) -> Vec<C64> {
        let cells = self.diag_written.len();
        let mut out = vec![C64::new(0.0, 0.0); cells];
        if self.width > 0 {
            for i in 0..cells {
                out[i] = self.diag[i * self.width];
            }
        }
        out
    }

    /// Full diagonal payload array (`cells × width`), row-major mode order.
    #[must_use]
    pub fn diag_payloads(&self) -> &[C64] {
        &self.diag
    }

    #[must_use]
    pub fn diag_written_flags(&self) -> &[bool] {
        &self.diag_written
    }
}
