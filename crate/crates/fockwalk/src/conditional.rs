//! Conditional non-Gaussian states: the unnormalized post-detection tensor
//! for every outcome on the detected modes, in one sweep.
//!
//! Modes are permuted so the undetected ones lead (each group keeps its
//! ascending order). The lattice then factors into *blocks*: a block is the
//! full tensor over the undetected axes at one fixed coordinate of the
//! detected axes. Detection outcomes are exactly the paired (diagonal)
//! detected coordinates, so the deliverable is every diagonal block and its
//! trace (the outcome probability).
//!
//! The walk runs at two granularities:
//!
//! 1. The leading diagonal block is filled densely over the undetected axes
//!    by the reference recurrence (detected coordinates pinned at zero).
//! 2. The diagonal-walk schedule for the *detected* coordinates is replayed
//!    verbatim at block granularity: the same pivot plan, the same halo
//!    classes, the same eviction discipline — with whole blocks as cells.
//!    Applying one coarse pivot materializes each of its target blocks
//!    completely: every cell of the pivot's own block acts as a fine pivot
//!    and writes the owned detected direction, which maps own-block cells
//!    onto target-block cells one-to-one.
//!
//! A fine pivot reads its undetected-axis neighbours from its own block, so
//! the own block is consulted unconditionally; this is why the leading
//! *detected* mode needs a cutoff of at least 2 regardless of displacement
//! (compare the displaced-only restriction of the plain diagonal walk).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::exec::Executor;
use crate::gaussian::{GaussianData, Representation};
use crate::gbs::{pivot_io, plan_pivots, GbsOptions, PlanSpace, WriteBounds};
use crate::grad::{bundle_width, GradTensor};
use crate::lattice::{
    dm_shape, indices_of_weight, interleave_pairs, last_nonzero, linear_index, strides, unravel,
};
use crate::store::{BufferedStore, CellRef, OffsetCounts};
use crate::walker::{Kernel, SqrtLut};
use crate::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// One detection outcome: the pattern on the detected modes (ascending
/// original order), its probability, and the unnormalized conditional tensor
/// over the undetected axes.
#[derive(Debug, Clone)]
pub struct ConditionalBlock {
    pub pattern: Vec<usize>,
    /// Trace of the block = probability of this outcome.
    pub trace: f64,
    /// Dense row-major tensor over the undetected interleaved axes.
    pub data: Vec<C64>,
}

/// All detection outcomes of one run, in row-major pattern order.
#[derive(Debug, Clone)]
pub struct ConditionalBatch {
    /// Detected modes, ascending, in original mode numbering.
    pub detected_modes: Vec<usize>,
    /// Undetected modes, ascending, in original mode numbering.
    pub undetected_modes: Vec<usize>,
    /// Interleaved shape of each block (`[Cu1, Cu1, Cu2, Cu2, ..]`).
    pub undetected_shape: Vec<usize>,
    pub blocks: Vec<ConditionalBlock>,
}

/// [`ConditionalBlock`] with gradient bundles. Lane order follows the
/// *original* mode numbering (the internal permutation is undone).
#[derive(Debug, Clone)]
pub struct ConditionalGradBlock {
    pub pattern: Vec<usize>,
    pub trace: f64,
    pub bundles: GradTensor,
}

#[derive(Debug, Clone)]
pub struct ConditionalGradBatch {
    pub detected_modes: Vec<usize>,
    pub undetected_modes: Vec<usize>,
    pub undetected_shape: Vec<usize>,
    pub blocks: Vec<ConditionalGradBlock>,
}

/// Run totals. Fine pivots are the unit of work: the leading-block fill plus
/// one per block cell per applied coarse pivot. Amplitude-level counters are
/// the block-level counters scaled by the block volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondCounters {
    pub pivots_applied: u64,
    pub step1_pivots: u64,
    pub coarse_pivots: u64,
    pub block_volume: u64,
    /// Amplitudes written per halo class of the detected-coordinate walk.
    pub writes: OffsetCounts,
    pub cells_written: u64,
    pub stored_complex: u64,
    pub peak_cells: u64,
    /// `(coarse pivots applied, live amplitudes)` per committed group.
    pub curve: Vec<(u64, u64)>,
}

struct Partition {
    /// order[i] = original mode at permuted position i.
    order: Vec<usize>,
    undetected: Vec<usize>,
    detected: Vec<usize>,
    sub_shape: Vec<usize>,
    sub_strides: Vec<usize>,
    block_vol: usize,
    det_cutoffs: Vec<usize>,
}

fn partition(mode_cutoffs: &[usize], detected_modes: &[usize]) -> Result<Partition> {
    let m = mode_cutoffs.len();
    if detected_modes.is_empty() {
        return Err(FockError::Validation(
            "no detected modes: the diagonal or full walk already covers this case".into(),
        ));
    }
    if detected_modes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FockError::Validation("detected modes must be strictly increasing".into()));
    }
    if *detected_modes.last().unwrap() >= m {
        return Err(FockError::Validation(format!(
            "detected mode {} out of range for {m} modes",
            detected_modes.last().unwrap()
        )));
    }
    if detected_modes.len() == m {
        return Err(FockError::Validation(
            "every mode is detected: the diagonal walk already computes these probabilities".into(),
        ));
    }
    if mode_cutoffs[detected_modes[0]] == 1 {
        return Err(FockError::Validation(
            "the leading detected mode needs a cutoff of at least 2: every conditional step reads \
             its halo blocks"
                .into(),
        ));
    }
    let detected = detected_modes.to_vec();
    let undetected: Vec<usize> = (0..m).filter(|i| !detected.contains(i)).collect();
    let mut order = undetected.clone();
    order.extend_from_slice(&detected);
    let sub_shape = dm_shape(&undetected.iter().map(|&i| mode_cutoffs[i]).collect::<Vec<_>>());
    let sub_strides = strides(&sub_shape);
    let block_vol = sub_shape.iter().product();
    let det_cutoffs: Vec<usize> = detected.iter().map(|&i| mode_cutoffs[i]).collect();
    Ok(Partition { order, undetected, detected, sub_shape, sub_strides, block_vol, det_cutoffs })
}

/// Dense recurrence fill of the leading diagonal block: detected coordinates
/// pinned at zero, trailing-ownership writes over the undetected axes only.
/// Returns the block payload and the pivot count.
fn fill_leading_block(
    kernel: &Kernel<'_>,
    g0: C64,
    part: &Partition,
    full_d: usize,
    w_lane: usize,
) -> (Vec<C64>, u64) {
    let sub = &part.sub_shape;
    let sub_d = sub.len();
    let vol = part.block_vol;
    let mut data = vec![zero(); vol * w_lane];
    data[0] = g0;
    let mut pivots = 0u64;
    let top: usize = sub.iter().map(|&c| c - 1).sum();
    let mut point = vec![0usize; full_d];
    for w in 0..top {
        let mut staged: Vec<(usize, Vec<C64>)> = Vec::new();
        for phi in indices_of_weight(w, sub) {
            let start = last_nonzero(&phi).unwrap_or(0);
            let dirs: Vec<usize> = (start..sub_d).filter(|&i| phi[i] + 1 < sub[i]).collect();
            if dirs.is_empty() {
                continue;
            }
            pivots += 1;
            point[..sub_d].copy_from_slice(&phi);
            let lin = linear_index(&phi, &part.sub_strides);
            let own = &data[lin * w_lane..(lin + 1) * w_lane];
            let mut reads: Vec<Option<&[C64]>> = vec![None; full_d];
            for u in 0..sub_d {
                if phi[u] > 0 {
                    let down = (lin - part.sub_strides[u]) * w_lane;
                    reads[u] = Some(&data[down..down + w_lane]);
                }
            }
            for &dir in &dirs {
                let mut out = vec![zero(); w_lane];
                kernel.write_to(&point, Some(own), &reads, dir, &mut out);
                staged.push((lin + part.sub_strides[dir], out));
            }
        }
        for (lin, payload) in staged {
            data[lin * w_lane..(lin + 1) * w_lane].copy_from_slice(&payload);
        }
    }
    (data, pivots)
}

fn count_leading_block_pivots(part: &Partition) -> u64 {
    let sub = &part.sub_shape;
    let sub_d = sub.len();
    let top: usize = sub.iter().map(|&c| c - 1).sum();
    let mut pivots = 0u64;
    for w in 0..top {
        for phi in indices_of_weight(w, sub) {
            let start = last_nonzero(&phi).unwrap_or(0);
            if (start..sub_d).any(|i| phi[i] + 1 < sub[i]) {
                pivots += 1;
            }
        }
    }
    pivots
}

struct CoarseOutput {
    writes: Vec<(CellRef, Vec<C64>)>,
    evictions: Vec<(usize, crate::store::OffsetTag)>,
    self_evict: Option<(usize, crate::store::OffsetTag)>,
}

struct CondRun {
    store: BufferedStore,
    counters: CondCounters,
}

fn drive_conditional(
    params: Option<&GaussianData>,
    w_lane: usize,
    mode_cutoffs: &[usize],
    detected_modes: &[usize],
    opts: GbsOptions,
    exec: &(impl Executor + ?Sized),
) -> Result<(Partition, Option<GaussianData>, CondRun)> {
    let part = partition(mode_cutoffs, detected_modes)?;
    let permuted = match params {
        Some(p) => {
            if p.representation != Representation::DensityMatrix {
                return Err(FockError::Validation(
                    "conditional walks run on density-matrix parameters".into(),
                ));
            }
            if mode_cutoffs.len() != p.modes {
                return Err(FockError::Validation(format!(
                    "{} cutoffs for {} modes",
                    mode_cutoffs.len(),
                    p.modes
                )));
            }
            Some(p.permute_modes(&part.order)?)
        }
        None => None,
    };

    let v2 = 2 * part.undetected.len();
    let full_d = v2 + 2 * part.detected.len();
    let lut_max = mode_cutoffs.iter().max().copied().unwrap_or(1) + 1;
    let lut = SqrtLut::with_max(lut_max);
    let kernel = permuted.as_ref().map(|p| Kernel::from_params(p, w_lane, &lut, opts.force_general));

    let block_w = part.block_vol * w_lane;
    let space = PlanSpace::new(&part.det_cutoffs);
    let mut store = BufferedStore::new(&part.det_cutoffs, block_w, opts.buffered);

    let (seed_block, step1_pivots) = match &kernel {
        Some(k) => fill_leading_block(k, permuted.as_ref().unwrap().g0, &part, full_d, w_lane),
        None => (Vec::new(), count_leading_block_pivots(&part)),
    };
    store.write(CellRef::Diag(0), &seed_block)?;

    // Fine pivots sweep each block in weight-major lexicographic order.
    let fine_order: Vec<(Vec<usize>, usize)> = {
        let top: usize = part.sub_shape.iter().map(|&c| c - 1).sum();
        let mut order = Vec::with_capacity(part.block_vol);
        for w in 0..=top {
            for phi in indices_of_weight(w, &part.sub_shape) {
                let lin = linear_index(&phi, &part.sub_strides);
                order.push((phi, lin));
            }
        }
        order
    };

    let plan = plan_pivots(&part.det_cutoffs);
    let bounds = WriteBounds::Local(&part.det_cutoffs);
    let mut coarse_applied = 0u64;
    let mut curve = vec![(0u64, (store.live_cells() * part.block_vol) as u64)];
    for group in &plan {
        let frozen = &store;
        let outputs = exec.map(group.pivots.len(), &|i| -> Result<CoarseOutput> {
            let io = pivot_io(&group.pivots[i], &bounds, &space);
            let evictions: Vec<(usize, crate::store::OffsetTag)> = io
                .reads
                .iter()
                .filter(|(_, _, evicts)| *evicts)
                .map(|(_, cell, _)| match cell {
                    CellRef::Off(base, tag) => (*base, *tag),
                    CellRef::Diag(_) => unreachable!("diagonal reads never evict"),
                })
                .collect();
            if w_lane == 0 {
                let writes = io.writes.into_iter().map(|(_, cell)| (cell, Vec::new())).collect();
                return Ok(CoarseOutput { writes, evictions, self_evict: io.self_evict });
            }
            let kernel = kernel.as_ref().expect("amplitude run needs parameters");
            let own = frozen.peek(io.peek)?;
            let mut det_reads: Vec<Option<&[C64]>> = vec![None; full_d - v2];
            for (axis, cell, _) in &io.reads {
                det_reads[*axis] = Some(frozen.peek(*cell)?);
            }
            let mut point = vec![0usize; full_d];
            point[v2..].copy_from_slice(&io.point);
            let mut writes: Vec<(CellRef, Vec<C64>)> = io
                .writes
                .iter()
                .map(|(_, cell)| (*cell, vec![zero(); block_w]))
                .collect();
            let mut reads: Vec<Option<&[C64]>> = vec![None; full_d];
            let mut out = vec![zero(); w_lane];
            for (phi, lin) in &fine_order {
                point[..v2].copy_from_slice(phi);
                for u in 0..v2 {
                    reads[u] = if phi[u] > 0 {
                        let down = (lin - part.sub_strides[u]) * w_lane;
                        Some(&own[down..down + w_lane])
                    } else {
                        None
                    };
                }
                for (l, det_read) in det_reads.iter().enumerate() {
                    reads[v2 + l] = det_read.map(|block| &block[lin * w_lane..(lin + 1) * w_lane]);
                }
                let own_cell = &own[lin * w_lane..(lin + 1) * w_lane];
                for (w_idx, (dir, _)) in io.writes.iter().enumerate() {
                    kernel.write_to(&point, Some(own_cell), &reads, v2 + dir, &mut out);
                    let dst = lin * w_lane;
                    writes[w_idx].1[dst..dst + w_lane].copy_from_slice(&out);
                }
            }
            Ok(CoarseOutput { writes, evictions, self_evict: io.self_evict })
        });
        for output in outputs {
            let output = output?;
            coarse_applied += 1;
            for (base, tag) in &output.evictions {
                store.read_evict(*base, *tag)?;
            }
            for (cell, payload) in &output.writes {
                store.write(cell.clone(), payload)?;
            }
            if let Some((base, tag)) = output.self_evict {
                store.evict_unread(base, tag)?;
            }
        }
        curve.push((coarse_applied, (store.live_cells() * part.block_vol) as u64));
    }

    let det_cells: usize = part.det_cutoffs.iter().product();
    if store.diag_written_count() != det_cells {
        return Err(FockError::SchedulerBug(format!(
            "conditional diagonal incomplete: {} of {det_cells} blocks written",
            store.diag_written_count()
        )));
    }
    if opts.buffered && store.off_diagonal_len() != 0 {
        return Err(FockError::SchedulerBug(format!(
            "{} halo blocks left after the final group",
            store.off_diagonal_len()
        )));
    }

    let bv = part.block_vol as u64;
    let counts = store.counts();
    let counters = CondCounters {
        pivots_applied: step1_pivots + coarse_applied * bv,
        step1_pivots,
        coarse_pivots: coarse_applied,
        block_volume: bv,
        writes: OffsetCounts {
            diag: counts.diag * bv,
            single: counts.single * bv,
            double: counts.double * bv,
            up_up: counts.up_up * bv,
            up_down: counts.up_down * bv,
        },
        cells_written: store.cells_written() * bv,
        stored_complex: store.cells_written() * bv * w_lane as u64,
        peak_cells: store.peak_cells() as u64 * bv,
        curve,
    };
    Ok((part, permuted, CondRun { store, counters }))
}

fn block_trace(payload: &[C64], part: &Partition, w_lane: usize) -> f64 {
    let undet_cutoffs: Vec<usize> = part.sub_shape.iter().step_by(2).copied().collect();
    let cells: usize = undet_cutoffs.iter().product();
    let mut trace = 0.0;
    for lin in 0..cells {
        let u = unravel(lin, &undet_cutoffs);
        let phi = interleave_pairs(&u);
        trace += payload[linear_index(&phi, &part.sub_strides) * w_lane].re;
    }
    trace
}

/// Compute every conditional block in the per-mode box. `mode_cutoffs` and
/// `detected_modes` use original mode numbering; `detected_modes` must be a
/// strictly increasing proper nonempty subset.
pub fn run_conditional(
    params: &GaussianData,
    mode_cutoffs: &[usize],
    detected_modes: &[usize],
    opts: GbsOptions,
    exec: &(impl Executor + ?Sized),
) -> Result<(ConditionalBatch, CondCounters)> {
    let (part, _, run) =
        drive_conditional(Some(params), 1, mode_cutoffs, detected_modes, opts, exec)?;
    let det_cells: usize = part.det_cutoffs.iter().product();
    let payloads = run.store.diag_payloads();
    let mut blocks = Vec::with_capacity(det_cells);
    for t_lin in 0..det_cells {
        let payload = &payloads[t_lin * part.block_vol..(t_lin + 1) * part.block_vol];
        blocks.push(ConditionalBlock {
            pattern: unravel(t_lin, &part.det_cutoffs),
            trace: block_trace(payload, &part, 1),
            data: payload.to_vec(),
        });
    }
    let batch = ConditionalBatch {
        detected_modes: part.detected.clone(),
        undetected_modes: part.undetected.clone(),
        undetected_shape: part.sub_shape.clone(),
        blocks,
    };
    Ok((batch, run.counters))
}

/// [`run_conditional`] with gradient bundles on every amplitude. The bundles
/// are re-indexed back to original mode numbering before they are returned.
pub fn run_conditional_with_grad(
    params: &GaussianData,
    mode_cutoffs: &[usize],
    detected_modes: &[usize],
    opts: GbsOptions,
    exec: &(impl Executor + ?Sized),
) -> Result<(ConditionalGradBatch, CondCounters)> {
    let d = params.d();
    let w_lane = bundle_width(d);
    let (part, _, run) =
        drive_conditional(Some(params), w_lane, mode_cutoffs, detected_modes, opts, exec)?;

    // axis_map[original axis] = permuted axis.
    let mut axis_map = vec![0usize; d];
    for (i, &orig_mode) in part.order.iter().enumerate() {
        axis_map[2 * orig_mode] = 2 * i;
        axis_map[2 * orig_mode + 1] = 2 * i + 1;
    }

    let det_cells: usize = part.det_cutoffs.iter().product();
    let payloads = run.store.diag_payloads();
    let mut blocks = Vec::with_capacity(det_cells);
    for t_lin in 0..det_cells {
        let payload = &payloads[t_lin * part.block_vol * w_lane..(t_lin + 1) * part.block_vol * w_lane];
        let mut data = vec![zero(); part.block_vol * w_lane];
        for cell in 0..part.block_vol {
            let src = &payload[cell * w_lane..(cell + 1) * w_lane];
            let dst = &mut data[cell * w_lane..(cell + 1) * w_lane];
            dst[0] = src[0];
            for a in 0..d {
                dst[1 + a] = src[1 + axis_map[a]];
            }
            for r in 0..d {
                for c in 0..d {
                    dst[1 + d + r * d + c] = src[1 + d + axis_map[r] * d + axis_map[c]];
                }
            }
        }
        blocks.push(ConditionalGradBlock {
            pattern: unravel(t_lin, &part.det_cutoffs),
            trace: block_trace(payload, &part, w_lane),
            bundles: GradTensor { cell_shape: part.sub_shape.clone(), d, data },
        });
    }
    let batch = ConditionalGradBatch {
        detected_modes: part.detected.clone(),
        undetected_modes: part.undetected.clone(),
        undetected_shape: part.sub_shape.clone(),
        blocks,
    };
    Ok((batch, run.counters))
}

/// Dry traversal: full block-level scheduling and eviction with zero-lane
/// payloads, no amplitude math. Counter semantics match [`run_conditional`].
pub fn measure_conditional(
    mode_cutoffs: &[usize],
    detected_modes: &[usize],
) -> Result<CondCounters> {
    if mode_cutoffs.is_empty() || mode_cutoffs.iter().any(|&c| c == 0) {
        return Err(FockError::Validation("cutoffs must be at least 1".into()));
    }
    let opts = GbsOptions::default();
    let (_, _, run) = drive_conditional(
        None,
        0,
        mode_cutoffs,
        detected_modes,
        opts,
        &crate::exec::SerialExecutor,
    )?;
    Ok(run.counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::SerialExecutor;
    use crate::gaussian::{circuit_density_params, CircuitSpec, CutoffMode, Squeeze};
    use crate::gbs::run_gbs;
    use crate::lattice::{CutoffSpec, DenseTensor};
    use crate::mat::CMat;
    use crate::walker::fill_full;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn splitter() -> CMat {
        let s = 1.0 / 2.0f64.sqrt();
        CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { c(-s, 0.0) } else { c(s, 0.0) })
    }

    fn two_mode_params(displaced: bool, cutoffs: Vec<usize>) -> GaussianData {
        let spec = CircuitSpec {
            modes: 2,
            squeeze: vec![Squeeze { r: 0.5, phase: 0.0 }, Squeeze { r: 0.5, phase: core::f64::consts::PI }],
            interferometer: Some(splitter()),
            loss: Some(vec![0.85, 0.95]),
            displacements: displaced.then(|| vec![c(0.2, -0.1), c(0.1, 0.15)]),
            cutoffs,
            detected_modes: vec![0, 1],
            cutoff_mode: CutoffMode::Local,
        };
        circuit_density_params(&spec).unwrap()
    }

    fn reference_tensor(params: &GaussianData, cutoffs: &[usize]) -> DenseTensor {
        let (rho, _) = fill_full(params, &CutoffSpec::Local(cutoffs.to_vec()), &SerialExecutor).unwrap();
        rho
    }

    #[test]
    fn blocks_match_reference_slices_trailing_detection() {
        let params = two_mode_params(true, vec![3, 3]);
        let (batch, _) =
            run_conditional(&params, &[3, 3], &[1], GbsOptions::default(), &SerialExecutor).unwrap();
        let rho = reference_tensor(&params, &[3, 3]);
        assert_eq!(batch.undetected_modes, vec![0]);
        assert_eq!(batch.undetected_shape, vec![3, 3]);
        for block in &batch.blocks {
            let p = block.pattern[0];
            for a in 0..3 {
                for b in 0..3 {
                    let lhs = block.data[a * 3 + b];
                    let rhs = rho.get(&[a, b, p, p]);
                    assert!((lhs - rhs).norm() < TOL, "pattern {p}, cell [{a},{b}]");
                }
            }
        }
    }

    #[test]
    fn blocks_match_reference_slices_leading_detection() {
        // Detecting mode 0 exercises the nontrivial permutation.
        let params = two_mode_params(true, vec![3, 4]);
        let (batch, _) =
            run_conditional(&params, &[3, 4], &[0], GbsOptions::default(), &SerialExecutor).unwrap();
        let rho = reference_tensor(&params, &[3, 4]);
        assert_eq!(batch.undetected_modes, vec![1]);
        for block in &batch.blocks {
            let p = block.pattern[0];
            for a in 0..4 {
                for b in 0..4 {
                    let lhs = block.data[a * 4 + b];
                    let rhs = rho.get(&[p, p, a, b]);
                    assert!((lhs - rhs).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn three_mode_middle_mode_undetected() {
        let spec = CircuitSpec {
            modes: 3,
            squeeze: vec![
                Squeeze { r: 0.4, phase: 0.3 },
                Squeeze { r: 0.3, phase: -0.2 },
                Squeeze { r: 0.5, phase: 1.0 },
            ],
            interferometer: None,
            loss: Some(vec![0.9, 1.0, 0.8]),
            displacements: Some(vec![c(0.1, 0.1), c(-0.2, 0.05), c(0.0, -0.1)]),
            cutoffs: vec![2, 3, 2],
            detected_modes: vec![0, 1, 2],
            cutoff_mode: CutoffMode::Local,
        };
        let params = circuit_density_params(&spec).unwrap();
        let (batch, _) =
            run_conditional(&params, &[2, 3, 2], &[0, 2], GbsOptions::default(), &SerialExecutor)
                .unwrap();
        let rho = reference_tensor(&params, &[2, 3, 2]);
        assert_eq!(batch.undetected_modes, vec![1]);
        for block in &batch.blocks {
            let (p0, p2) = (block.pattern[0], block.pattern[1]);
            for a in 0..3 {
                for b in 0..3 {
                    let lhs = block.data[a * 3 + b];
                    let rhs = rho.get(&[p0, p0, a, b, p2, p2]);
                    assert!((lhs - rhs).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn traces_are_the_detected_marginals() {
        let params = two_mode_params(true, vec![4, 4]);
        let (batch, _) =
            run_conditional(&params, &[4, 4], &[1], GbsOptions::default(), &SerialExecutor).unwrap();
        let (probs, _) = run_gbs(&params, &[4, 4], GbsOptions::default(), &SerialExecutor).unwrap();
        for block in &batch.blocks {
            let p = block.pattern[0];
            let marginal: f64 = (0..4).map(|u| probs.get(&[u, p])).sum();
            assert!((block.trace - marginal).abs() < TOL);
        }
        let total: f64 = batch.blocks.iter().map(|b| b.trace).sum();
        assert!(total <= 1.0 + 1e-10);
        assert!(total > 0.5);
    }

    #[test]
    fn blocks_are_hermitian() {
        let params = two_mode_params(true, vec![3, 3]);
        let (batch, _) =
            run_conditional(&params, &[3, 3], &[0], GbsOptions::default(), &SerialExecutor).unwrap();
        for block in &batch.blocks {
            for a in 0..3 {
                for b in 0..3 {
                    let v = block.data[a * 3 + b];
                    let sw = block.data[b * 3 + a];
                    assert!((v - sw.conj()).norm() < TOL);
                }
                let diag = block.data[a * 3 + a];
                assert!(diag.im.abs() < TOL);
                assert!(diag.re > -1e-12);
            }
        }
    }

    #[test]
    fn fine_pivot_count_closed_form_one_undetected() {
        // One undetected mode, equal cutoffs C over M modes:
        // C(C−1) leading-block pivots plus C² per coarse pivot.
        for (m, cfix) in [(2usize, 4usize), (3, 3)] {
            let cutoffs = vec![cfix; m];
            let detected: Vec<usize> = (1..m).collect();
            let counters = measure_conditional(&cutoffs, &detected).unwrap();
            let c = cfix as u64;
            let coarse = crate::gbs::planned_pivot_count(&vec![cfix; m - 1]);
            assert_eq!(counters.step1_pivots, c * (c - 1));
            assert_eq!(counters.coarse_pivots, coarse);
            assert_eq!(counters.pivots_applied, c * (c - 1) + c * c * coarse);
            assert_eq!(counters.block_volume, c * c);
        }
    }

    #[test]
    fn dry_counters_match_amplitude_run() {
        let params = two_mode_params(true, vec![3, 4]);
        let (_, wet) =
            run_conditional(&params, &[3, 4], &[1], GbsOptions::default(), &SerialExecutor).unwrap();
        let dry = measure_conditional(&[3, 4], &[1]).unwrap();
        assert_eq!(dry.pivots_applied, wet.pivots_applied);
        assert_eq!(dry.writes, wet.writes);
        assert_eq!(dry.cells_written, wet.cells_written);
        assert_eq!(dry.peak_cells, wet.peak_cells);
    }

    #[test]
    fn gradients_match_reference_with_permutation_undone() {
        let params = two_mode_params(true, vec![3, 3]);
        // Detect mode 0 so the internal permutation actually reorders lanes.
        let (batch, _) = run_conditional_with_grad(
            &params,
            &[3, 3],
            &[0],
            GbsOptions::default(),
            &SerialExecutor,
        )
        .unwrap();
        let (reference, _) = crate::walker::fill_full_with_grad(
            &params,
            &CutoffSpec::Local(vec![3, 3]),
            &SerialExecutor,
        )
        .unwrap();
        let dm = dm_shape(&[3, 3]);
        let dm_strides = strides(&dm);
        let d = 4;
        for block in &batch.blocks {
            let p = block.pattern[0];
            for a in 0..3usize {
                for b in 0..3usize {
                    let cell = a * 3 + b;
                    let ref_cell = linear_index(&[p, p, a, b], &dm_strides);
                    assert!((block.bundles.value(cell) - reference.value(ref_cell)).norm() < TOL);
                    for lane in 0..d {
                        let lhs = block.bundles.db(cell)[lane];
                        let rhs = reference.db(ref_cell)[lane];
                        assert!((lhs - rhs).norm() < TOL, "db lane {lane}");
                    }
                    // Raw ∂/∂A lanes are route-dependent across engines
                    // (symmetric matrix, different pivot directions); compare
                    // the transpose-symmetrized pairs.
                    let (ca, ra) = (block.bundles.da(cell), reference.da(ref_cell));
                    for r in 0..d {
                        for s in 0..d {
                            let lhs = ca[r * d + s] + ca[s * d + r];
                            let rhs = ra[r * d + s] + ra[s * d + r];
                            assert!((lhs - rhs).norm() < TOL, "dA pair ({r},{s})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn validation_covers_the_edge_cases() {
        let params = two_mode_params(false, vec![3, 3]);
        let opts = GbsOptions::default();
        // Empty and full detection sets point at the other walkers.
        assert!(run_conditional(&params, &[3, 3], &[], opts, &SerialExecutor).is_err());
        assert!(run_conditional(&params, &[3, 3], &[0, 1], opts, &SerialExecutor).is_err());
        // Out of range, unsorted, duplicate.
        assert!(run_conditional(&params, &[3, 3], &[2], opts, &SerialExecutor).is_err());
        assert!(run_conditional(&params, &[3, 3], &[1, 1], opts, &SerialExecutor).is_err());
        // Leading detected cutoff of 1 cannot host the halo blocks, even
        // without displacement.
        let params = two_mode_params(false, vec![1, 3]);
        let err = run_conditional(&params, &[1, 3], &[0], opts, &SerialExecutor).unwrap_err();
        assert!(matches!(err, FockError::Validation(_)));
        // A trailing-mode cutoff of 1 with detection on it is fine only if
        // its cutoff permits: cutoff 1 on the leading *detected* mode is the
        // gate, whichever original position it holds.
        let params = two_mode_params(false, vec![3, 1]);
        let err = run_conditional(&params, &[3, 1], &[1], opts, &SerialExecutor).unwrap_err();
        assert!(matches!(err, FockError::Validation(_)));
    }

    #[test]
    fn buffered_blocks_drain_and_peak_below_unbuffered() {
        let params = two_mode_params(true, vec![5, 5]);
        let (batch_b, buffered) =
            run_conditional(&params, &[5, 5], &[1], GbsOptions::default(), &SerialExecutor).unwrap();
        let (batch_u, unbuffered) = run_conditional(
            &params,
            &[5, 5],
            &[1],
            GbsOptions { buffered: false, force_general: false },
            &SerialExecutor,
        )
        .unwrap();
        for (b, u) in batch_b.blocks.iter().zip(&batch_u.blocks) {
            for (x, y) in b.data.iter().zip(&u.data) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        assert!(buffered.peak_cells < unbuffered.peak_cells);
        // Final live amplitudes: one block per detected pattern.
        assert_eq!(buffered.curve.last().unwrap().1, 5 * 25);
    }
}
