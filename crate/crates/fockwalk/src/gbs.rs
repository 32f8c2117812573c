//! Diagonal-only density-matrix walk: detection probabilities without the
//! full tensor.
//!
//! The walk computes every fully paired entry `G[n1,n1,n2,n2,..]` — the
//! photon-number probabilities — while storing only a thin halo of
//! off-diagonal entries around the diagonal. It alternates two pivot groups
//! per pair-sum `S`:
//!
//! * **Diagonal pivots**: paired points `n` with `Σn = S`. Stepping one unit
//!   up any single axis produces the `Single` halo entries of `n`.
//! * **Off-diagonal pivots**: points one unit above the diagonal on the
//!   leading axis of pair `K` (`family K`), emitted only when every mode
//!   before `K` is zero. Stepping these produces the next diagonal entries
//!   plus the `Double`/`UpUp`/`UpDown` halo needed one pair-sum later.
//!
//! Each halo entry is written exactly once and read exactly once, so in
//! buffered mode a read evicts and the halo drains to zero by the end of the
//! run; [`BufferedStore`] turns any violation into a hard error. The write
//! and eviction rules below are the write-side mirror of the read rules, so
//! neither dangling entries nor missing reads can occur by construction —
//! a property the tests pin down by exact write counts per halo class.
//!
//! Ownership of shared halo entries follows the lowest bra-excess pair: of
//! the pivots that could produce an entry, the one whose family index is
//! smallest (with all earlier modes zero) writes it. This is why families
//! require leading zeros, and why the leading mode is special: walks that
//! need pivot self-values (displaced runs and gradient runs) cannot use a
//! leading-mode cutoff of 1, because the diagonal pivots that would seed its
//! `Single` halo are never emitted. Such runs are rejected up front.
//!
//! A total-photon variant replaces the per-mode box by the simplex
//! `Σn < n_max`. It keeps every halo entry (reference mode): the simplex
//! boundary makes "last reader" ownership ragged, and the simplex is small
//! enough that draining buys nothing.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::exec::Executor;
use crate::gaussian::{GaussianData, Representation};
use crate::grad::{bundle_width, GradTensor};
use crate::lattice::{indices_of_weight, interleave_pairs, strides, weight, RealTensor};
use crate::store::{BufferedStore, CellRef, OffsetCounts, OffsetTag};
use crate::walker::{Kernel, SqrtLut};
use crate::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// One scheduled pivot: a paired point, or a point one bra-step above it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Pivot {
    Diag { base: Vec<usize> },
    Off { base: Vec<usize>, family: usize },
}

impl Pivot {
    /// Interleaved lattice coordinates of the pivot.
    pub(crate) fn point(&self) -> Vec<usize> {
        match self {
            Pivot::Diag { base } => interleave_pairs(base),
            Pivot::Off { base, family } => {
                let mut p = interleave_pairs(base);
                p[2 * family] += 1;
                p
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GroupKind {
    Diag,
    OffDiag,
}

/// Pivots of one `(pair-sum, kind)` batch. Batches commit in plan order;
/// pivots within a batch are independent and may be computed in parallel.
#[derive(Debug, Clone)]
pub(crate) struct PivotGroup {
    pub pair_sum: usize,
    pub kind: GroupKind,
    pub pivots: Vec<Pivot>,
}

/// Per-mode-box pivot schedule: for each pair-sum, first the diagonal group
/// (lexicographic), then the off-diagonal group ordered lexicographically by
/// the full interleaved pivot coordinate.
pub(crate) fn plan_pivots(mode_cutoffs: &[usize]) -> Vec<PivotGroup> {
    let m = mode_cutoffs.len();
    let top: usize = mode_cutoffs.iter().map(|&c| c - 1).sum();
    let mut groups = Vec::new();
    for s in 0..top {
        let bases = indices_of_weight(s, mode_cutoffs);
        let diag: Vec<Pivot> = bases
            .iter()
            .filter(|n| n[0] + 1 < mode_cutoffs[0])
            .map(|n| Pivot::Diag { base: n.clone() })
            .collect();
        if !diag.is_empty() {
            groups.push(PivotGroup { pair_sum: s, kind: GroupKind::Diag, pivots: diag });
        }
        let mut off = Vec::new();
        for n in &bases {
            for k in 0..m {
                if n[..k].iter().any(|&v| v != 0) {
                    continue;
                }
                if n[k] + 1 >= mode_cutoffs[k] {
                    continue;
                }
                off.push(Pivot::Off { base: n.clone(), family: k });
            }
        }
        off.sort_by_key(Pivot::point);
        if !off.is_empty() {
            groups.push(PivotGroup { pair_sum: s, kind: GroupKind::OffDiag, pivots: off });
        }
    }
    groups
}

/// Total-photon schedule: same group structure over the simplex `Σn < n_max`,
/// with no per-mode write suppression (families still require leading zeros).
pub(crate) fn plan_pivots_global(modes: usize, n_max: usize) -> Vec<PivotGroup> {
    let box_shape = vec![n_max; modes];
    let mut groups = Vec::new();
    for s in 0..n_max {
        let bases = indices_of_weight(s, &box_shape);
        let diag: Vec<Pivot> = bases.iter().map(|n| Pivot::Diag { base: n.clone() }).collect();
        groups.push(PivotGroup { pair_sum: s, kind: GroupKind::Diag, pivots: diag });
        let mut off = Vec::new();
        for n in &bases {
            for k in 0..modes {
                if n[..k].iter().any(|&v| v != 0) {
                    continue;
                }
                off.push(Pivot::Off { base: n.clone(), family: k });
            }
        }
        off.sort_by_key(Pivot::point);
        groups.push(PivotGroup { pair_sum: s, kind: GroupKind::OffDiag, pivots: off });
    }
    groups
}

/// Closed-form size of [`plan_pivots`]: `(C1−1)·Π_{i>1} Ci` diagonal pivots
/// plus `Σ_K (C_K−1)·Π_{i>K} Ci` off-diagonal ones.
#[must_use]
pub fn planned_pivot_count(mode_cutoffs: &[usize]) -> u64 {
    let prod_after = |k: usize| -> u64 { mode_cutoffs[k + 1..].iter().map(|&c| c as u64).product() };
    let diag = (mode_cutoffs[0] as u64 - 1) * prod_after(0);
    let off: u64 =
        (0..mode_cutoffs.len()).map(|k| (mode_cutoffs[k] as u64 - 1) * prod_after(k)).sum();
    diag + off
}

/// Write totals per halo class for a full per-mode-box run, in closed form.
/// The dry run [`measure_written`] must reproduce these exactly.
#[must_use]
pub fn count_written(mode_cutoffs: &[usize]) -> OffsetCounts {
    let c: Vec<u64> = mode_cutoffs.iter().map(|&x| x as u64).collect();
    let m = c.len();
    let prod_except = |skip: &[usize]| -> u64 {
        (0..m).filter(|i| !skip.contains(i)).map(|i| c[i]).product()
    };
    let prod_after_except = |k: usize, skip: usize| -> u64 {
        (k + 1..m).filter(|&i| i != skip).map(|i| c[i]).product()
    };

    // Every diagonal entry is written exactly once (the seed plus one
    // off-diagonal pivot per remaining entry).
    let diag: u64 = c.iter().product();

    // Diagonal pivots: (C1−1)·Π_{i>0} Ci of them. The leading bra step is
    // unconditional; the leading ket step is suppressed on the last bra
    // column; later pairs step both ways inside their own cutoff.
    let diag_pivots = (c[0] - 1) * prod_except(&[0]);
    let mut single = diag_pivots + c[0].saturating_sub(2) * prod_except(&[0]);
    for j in 1..m {
        single += 2 * (c[0] - 1) * (c[j] - 1) * prod_except(&[0, j]);
    }

    let mut double = 0;
    let mut up_up = 0;
    for k in 0..m {
        double += c[k].saturating_sub(2) * (k + 1..m).map(|i| c[i]).product::<u64>();
        for j in k + 1..m {
            up_up += (c[k] - 1) * (c[j] - 1) * prod_after_except(k, j);
        }
    }

    OffsetCounts { diag, single, double, up_up, up_down: up_up }
}

/// Mode-box addressing shared by the planner and the store.
pub(crate) struct PlanSpace {
    pub mode_cutoffs: Vec<usize>,
    diag_strides: Vec<usize>,
}

impl PlanSpace {
    pub(crate) fn new(mode_cutoffs: &[usize]) -> Self {
        PlanSpace { mode_cutoffs: mode_cutoffs.to_vec(), diag_strides: strides(mode_cutoffs) }
    }

    pub(crate) fn diag_lin(&self, n: &[usize]) -> usize {
        crate::lattice::linear_index(n, &self.diag_strides)
    }
}

/// Write-gating regime: per-mode box or total-photon simplex.
pub(crate) enum WriteBounds<'a> {
    Local(&'a [usize]),
    /// Off-diagonal pivots write only while `Σn + 1 < n_max`.
    GlobalPairSum(usize),
}

/// Everything one pivot application touches, fully resolved to store cells.
pub(crate) struct PivotIo {
    pub point: Vec<usize>,
    /// The pivot's own cell (needed when the linear term or gradients are
    /// active).
    pub peek: CellRef,
    /// `(interleaved axis, cell, evicts)` for every axis with a nonzero
    /// pivot entry.
    pub reads: Vec<(usize, CellRef, bool)>,
    /// `(interleaved direction, target cell)`, ascending.
    pub writes: Vec<(usize, CellRef)>,
    /// Own cell to drop after application (last reader was never emitted).
    pub self_evict: Option<(usize, OffsetTag)>,
}

pub(crate) fn pivot_io(pivot: &Pivot, bounds: &WriteBounds<'_>, space: &PlanSpace) -> PivotIo {
    match pivot {
        Pivot::Diag { base: n } => {
            let m = n.len();
            let base_lin = space.diag_lin(n);
            let mut reads = Vec::new();
            let mut down = n.clone();
            for j in 0..m {
                if n[j] == 0 {
                    continue;
                }
                down[j] -= 1;
                let lin = space.diag_lin(&down);
                down[j] += 1;
                // One bra or ket step below the pair lands on the opposite
                // single of the lower base.
                reads.push((2 * j, CellRef::Off(lin, OffsetTag::Single { axis: (2 * j + 1) as u8 }), true));
                reads.push((2 * j + 1, CellRef::Off(lin, OffsetTag::Single { axis: (2 * j) as u8 }), true));
            }
            let mut writes = Vec::new();
            match bounds {
                WriteBounds::Local(c) => {
                    writes.push((0, CellRef::Off(base_lin, OffsetTag::Single { axis: 0 })));
                    if n[0] + 2 < c[0] {
                        writes.push((1, CellRef::Off(base_lin, OffsetTag::Single { axis: 1 })));
                    }
                    for j in 1..m {
                        if n[j] + 1 < c[j] {
                            writes.push((2 * j, CellRef::Off(base_lin, OffsetTag::Single { axis: (2 * j) as u8 })));
                            writes.push((2 * j + 1, CellRef::Off(base_lin, OffsetTag::Single { axis: (2 * j + 1) as u8 })));
                        }
                    }
                }
                WriteBounds::GlobalPairSum(_) => {
                    for a in 0..2 * m {
                        writes.push((a, CellRef::Off(base_lin, OffsetTag::Single { axis: a as u8 })));
                    }
                }
            }
            PivotIo {
                point: interleave_pairs(n),
                peek: CellRef::Diag(base_lin),
                reads,
                writes,
                self_evict: None,
            }
        }
        Pivot::Off { base: n, family } => {
            let m = n.len();
            let k = *family;
            let base_lin = space.diag_lin(n);
            let mut reads = Vec::new();
            // One bra step down is the paired point itself; the diagonal is
            // dense and retained, so this read never evicts.
            reads.push((2 * k, CellRef::Diag(base_lin), false));
            let mut down = n.clone();
            if n[k] > 0 {
                down[k] -= 1;
                let lin = space.diag_lin(&down);
                down[k] += 1;
                reads.push((2 * k + 1, CellRef::Off(lin, OffsetTag::Double { pair: k as u8 }), true));
            }
            for j in k + 1..m {
                if n[j] == 0 {
                    continue;
                }
                down[j] -= 1;
                let lin = space.diag_lin(&down);
                down[j] += 1;
                let lead = k as u8;
                let other = j as u8;
                reads.push((2 * j, CellRef::Off(lin, OffsetTag::UpDown { lead, other }), true));
                reads.push((2 * j + 1, CellRef::Off(lin, OffsetTag::UpUp { lead, other }), true));
            }

            let mut up = n.clone();
            up[k] += 1;
            let up_lin = space.diag_lin(&up);
            let mut writes = Vec::new();
            let mut self_evict = None;
            match bounds {
                WriteBounds::Local(c) => {
                    if n[k] + 2 < c[k] {
                        writes.push((2 * k, CellRef::Off(base_lin, OffsetTag::Double { pair: k as u8 })));
                    }
                    writes.push((2 * k + 1, CellRef::Diag(up_lin)));
                    for j in k + 1..m {
                        if n[j] + 1 < c[j] {
                            let lead = k as u8;
                            let other = j as u8;
                            writes.push((2 * j, CellRef::Off(base_lin, OffsetTag::UpUp { lead, other })));
                            writes.push((2 * j + 1, CellRef::Off(base_lin, OffsetTag::UpDown { lead, other })));
                        }
                    }
                    // The family-0 pivot on the last emitted bra column has
                    // no diagonal successor to consume its own cell.
                    if k == 0 && n[0] + 2 == c[0] {
                        self_evict = Some((base_lin, OffsetTag::Single { axis: 0 }));
                    }
                }
                WriteBounds::GlobalPairSum(n_max) => {
                    if weight(n) + 1 < *n_max {
                        writes.push((2 * k, CellRef::Off(base_lin, OffsetTag::Double { pair: k as u8 })));
                        writes.push((2 * k + 1, CellRef::Diag(up_lin)));
                        for j in k + 1..m {
                            let lead = k as u8;
                            let other = j as u8;
                            writes.push((2 * j, CellRef::Off(base_lin, OffsetTag::UpUp { lead, other })));
                            writes.push((2 * j + 1, CellRef::Off(base_lin, OffsetTag::UpDown { lead, other })));
                        }
                    }
                }
            }

            let mut point = interleave_pairs(n);
            point[2 * k] += 1;
            PivotIo { point, peek: CellRef::Off(base_lin, OffsetTag::Single { axis: (2 * k) as u8 }), reads, writes, self_evict }
        }
    }
}

/// Run totals. `curve` holds `(pivots applied, live cells)` after the seed
/// and after each completed pair-sum shell; in buffered mode it rises while
/// the halo grows and falls back to the bare diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunCounters {
    pub pivots_applied: u64,
    /// Writes per structural class (seed included under `diag`).
    pub writes: OffsetCounts,
    pub cells_written: u64,
    /// `cells_written × lane width` — the stored-complex-number budget.
    pub stored_complex: u64,
    pub peak_cells: u64,
    pub curve: Vec<(u64, u64)>,
}

struct PivotOutput {
    writes: Vec<(CellRef, Vec<C64>)>,
    evictions: Vec<(usize, OffsetTag)>,
    self_evict: Option<(usize, OffsetTag)>,
}

fn compute_pivot(
    kernel: Option<&Kernel<'_>>,
    store: &BufferedStore,
    io: PivotIo,
    width: usize,
) -> Result<PivotOutput> {
    let evictions: Vec<(usize, OffsetTag)> = io
        .reads
        .iter()
        .filter(|(_, _, evicts)| *evicts)
        .map(|(_, cell, _)| match cell {
            CellRef::Off(base, tag) => (*base, *tag),
            CellRef::Diag(_) => unreachable!("diagonal reads never evict"),
        })
        .collect();
    if width == 0 || io.writes.is_empty() {
        // Dry bookkeeping, or a terminal pivot with every write gated off:
        // no amplitude math to do.
        let writes = io.writes.into_iter().map(|(_, cell)| (cell, vec![zero(); width])).collect();
        return Ok(PivotOutput { writes, evictions, self_evict: io.self_evict });
    }
    let kernel = kernel.ok_or_else(|| {
        FockError::SchedulerBug("amplitude run driven without a kernel".into())
    })?;
    let own: Option<&[C64]> = if kernel.needs_pivot_value() { Some(store.peek(io.peek)?) } else { None };
    let d = io.point.len();
    let mut reads: Vec<Option<&[C64]>> = vec![None; d];
    for (axis, cell, _) in &io.reads {
        reads[*axis] = Some(store.peek(*cell)?);
    }
    let mut writes = Vec::with_capacity(io.writes.len());
    for (dir, cell) in &io.writes {
        let mut out = vec![zero(); width];
        kernel.write_to(&io.point, own, &reads, *dir, &mut out);
        writes.push((*cell, out));
    }
    Ok(PivotOutput { writes, evictions, self_evict: io.self_evict })
}

fn drive(
    params: Option<&GaussianData>,
    width: usize,
    plan: &[PivotGroup],
    space: &PlanSpace,
    bounds: &WriteBounds<'_>,
    buffered: bool,
    force_general: bool,
    exec: &(impl Executor + ?Sized),
) -> Result<(BufferedStore, RunCounters)> {
    let mut store = BufferedStore::new(&space.mode_cutoffs, width, buffered);
    let mut seed = vec![zero(); width];
    if width > 0 {
        seed[0] = params.expect("amplitude run needs parameters").g0;
    }
    let origin = vec![0usize; space.mode_cutoffs.len()];
    store.write(CellRef::Diag(space.diag_lin(&origin)), &seed)?;

    let lut_max = space.mode_cutoffs.iter().max().copied().unwrap_or(1) + 1;
    let lut = SqrtLut::with_max(lut_max);
    let kernel = params.map(|p| Kernel::from_params(p, width, &lut, force_general));

    let mut pivots_applied = 0u64;
    let mut curve = vec![(0u64, store.live_cells() as u64)];
    let mut groups = plan.iter().peekable();
    while let Some(group) = groups.next() {
        let frozen = &store;
        let outputs = exec.map(group.pivots.len(), &|i| {
            let io = pivot_io(&group.pivots[i], bounds, space);
            compute_pivot(kernel.as_ref(), frozen, io, width)
        });
        // Tag any store violation with the group it surfaced in; the class
        // and pair sum locate the schedule defect immediately.
        let annotate = |e: FockError| match e {
            FockError::SchedulerBug(msg) => FockError::SchedulerBug(format!(
                "{msg} (pair sum {}, {:?} group)",
                group.pair_sum, group.kind
            )),
            other => other,
        };
        for output in outputs {
            let output = output.map_err(annotate)?;
            pivots_applied += 1;
            for (base, tag) in &output.evictions {
                store.read_evict(*base, *tag).map_err(annotate)?;
            }
            for (cell, payload) in &output.writes {
                store.write(*cell, payload).map_err(annotate)?;
            }
            if let Some((base, tag)) = output.self_evict {
                store.evict_unread(base, tag).map_err(annotate)?;
            }
        }
        // Sample the curve once per completed pair-sum shell, not per group:
        // the groups inside one shell alternate between filling and draining
        // the halo, and the memory profile is the shell-boundary envelope.
        let shell_done = groups.peek().map_or(true, |g| g.pair_sum != group.pair_sum);
        if shell_done {
            curve.push((pivots_applied, store.live_cells() as u64));
        }
    }

    let counters = RunCounters {
        pivots_applied,
        writes: store.counts(),
        cells_written: store.cells_written(),
        stored_complex: store.cells_written() * width as u64,
        peak_cells: store.peak_cells() as u64,
        curve,
    };
    Ok((store, counters))
}

/// Walk options. `force_general` runs the displaced-form schedule even when
/// the linear term is exactly zero; results are bit-identical to the fast
/// path, which tests exploit.
#[derive(Debug, Clone, Copy)]
pub struct GbsOptions {
    pub buffered: bool,
    pub force_general: bool,
}

impl Default for GbsOptions {
    fn default() -> Self {
        GbsOptions { buffered: true, force_general: false }
    }
}

fn validate_local(
    params: &GaussianData,
    mode_cutoffs: &[usize],
    needs_pivot_value: bool,
) -> Result<()> {
    if params.representation != Representation::DensityMatrix {
        return Err(FockError::Validation(
            "the diagonal walk runs on density-matrix parameters; build them from the circuit's mixed state".into(),
        ));
    }
    if mode_cutoffs.len() != params.modes {
        return Err(FockError::Validation(format!(
            "{} cutoffs for {} modes",
            mode_cutoffs.len(),
            params.modes
        )));
    }
    if mode_cutoffs.iter().any(|&c| c == 0) {
        return Err(FockError::Validation("cutoffs must be at least 1".into()));
    }
    if needs_pivot_value && mode_cutoffs[0] == 1 {
        return Err(FockError::Validation(
            "a leading-mode cutoff of 1 cannot seed the halo that displaced or gradient walks read; \
             raise the first cutoff or reorder the modes"
                .into(),
        ));
    }
    Ok(())
}

fn finish_local(store: &BufferedStore, buffered: bool) -> Result<()> {
    let cells: usize = store.mode_cutoffs().iter().product();
    if store.diag_written_count() != cells {
        return Err(FockError::SchedulerBug(format!(
            "diagonal incomplete: {} of {cells} cells written",
            store.diag_written_count()
        )));
    }
    if buffered && store.off_diagonal_len() != 0 {
        return Err(FockError::SchedulerBug(format!(
            "{} halo cells left after the final group",
            store.off_diagonal_len()
        )));
    }
    Ok(())
}

/// Compute every detection probability in the per-mode box. Returns the
/// probability tensor (shape = the cutoffs) and run totals.
pub fn run_gbs(
    params: &GaussianData,
    mode_cutoffs: &[usize],
    opts: GbsOptions,
    exec: &(impl Executor + ?Sized),
) -> Result<(RealTensor, RunCounters)> {
    let needs_value = !params.b_is_zero() || opts.force_general;
    validate_local(params, mode_cutoffs, needs_value)?;
    let plan = plan_pivots(mode_cutoffs);
    let space = PlanSpace::new(mode_cutoffs);
    let (store, counters) = drive(
        Some(params),
        1,
        &plan,
        &space,
        &WriteBounds::Local(mode_cutoffs),
        opts.buffered,
        opts.force_general,
        exec,
    )?;
    finish_local(&store, opts.buffered)?;
    let data: Vec<f64> = store.diag_values().iter().map(|v| v.re).collect();
    Ok((RealTensor { shape: mode_cutoffs.to_vec(), data }, counters))
}

/// [`run_gbs`] with gradient bundles: every diagonal cell carries
/// `[value, ∂/∂b(0..D), ∂/∂A(0..D²)]` lanes, `D = 2·modes`. Gradient walks
/// always need pivot self-values, so the zero-linear-term shortcut does not
/// apply.
pub fn run_gbs_with_grad(
    params: &GaussianData,
    mode_cutoffs: &[usize],
    opts: GbsOptions,
    exec: &(impl Executor + ?Sized),
) -> Result<(GradTensor, RunCounters)> {
    validate_local(params, mode_cutoffs, true)?;
    let d = params.d();
    let plan = plan_pivots(mode_cutoffs);
    let space = PlanSpace::new(mode_cutoffs);
    let (store, counters) = drive(
        Some(params),
        bundle_width(d),
        &plan,
        &space,
        &WriteBounds::Local(mode_cutoffs),
        opts.buffered,
        opts.force_general,
        exec,
    )?;
    finish_local(&store, opts.buffered)?;
    let grad = GradTensor { cell_shape: mode_cutoffs.to_vec(), d, data: store.diag_payloads().to_vec() };
    Ok((grad, counters))
}

/// Detection probabilities for every pattern with total photons below
/// `n_max`, as `(pattern, probability)` rows in pair-sum-major, then
/// lexicographic, order.
pub fn run_gbs_global_cutoff(
    params: &GaussianData,
    n_max: usize,
    exec: &(impl Executor + ?Sized),
) -> Result<(Vec<(Vec<usize>, f64)>, RunCounters)> {
    if params.representation != Representation::DensityMatrix {
        return Err(FockError::Validation(
            "the diagonal walk runs on density-matrix parameters; build them from the circuit's mixed state".into(),
        ));
    }
    if n_max == 0 {
        return Err(FockError::Validation("total-photon bound must be at least 1".into()));
    }
    let m = params.modes;
    let box_shape = vec![n_max; m];
    let plan = plan_pivots_global(m, n_max);
    let space = PlanSpace::new(&box_shape);
    let (store, counters) = drive(
        Some(params),
        1,
        &plan,
        &space,
        &WriteBounds::GlobalPairSum(n_max),
        false,
        false,
        exec,
    )?;
    let values = store.diag_values();
    let mut rows = Vec::new();
    for s in 0..n_max {
        for n in indices_of_weight(s, &box_shape) {
            let lin = space.diag_lin(&n);
            if !store.diag_written_flags()[lin] {
                return Err(FockError::SchedulerBug(format!("simplex entry {n:?} never written")));
            }
            rows.push((n, values[lin].re));
        }
    }
    Ok((rows, counters))
}

/// Dry traversal of the full per-mode-box schedule: every write, read, and
/// eviction happens with zero-lane cells, so the counters and the buffered
/// discipline are exercised without any amplitude math.
pub fn measure_written(mode_cutoffs: &[usize]) -> Result<RunCounters> {
    if mode_cutoffs.is_empty() || mode_cutoffs.iter().any(|&c| c == 0) {
        return Err(FockError::Validation("cutoffs must be at least 1".into()));
    }
    let plan = plan_pivots(mode_cutoffs);
    let space = PlanSpace::new(mode_cutoffs);
    let (store, counters) = drive(
        None,
        0,
        &plan,
        &space,
        &WriteBounds::Local(mode_cutoffs),
        true,
        false,
        &crate::exec::SerialExecutor,
    )?;
    finish_local(&store, true)?;
    Ok(counters)
}
