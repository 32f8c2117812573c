//! Reference walker: dense weight-ordered fills of the full lattice.
//!
//! Every amplitude obeys one recurrence. With `D` axes, kernel `A`, linear
//! term `b`, and `1_i` the unit step on axis `i`:
//!
//! ```text
//! G_{k+1_i} = (G_k · b_i + Σ_l √k_l · G_{k−1_l} · A_{il}) / √(k_i + 1)
//! ```
//!
//! Indices with any negative entry denote amplitude zero. A *pivot* is the
//! centre `k`: applying it reads the `D` down-neighbours (weight `|k| − 1`),
//! reads its own value when `b ≠ 0`, and writes up-neighbours (weight
//! `|k| + 1`). Walking shells in weight order therefore needs only one
//! vector addition and one `D × D` matrix–vector product per pivot against
//! a precomputed square-root table.
//!
//! The fill partitions write targets so each cell is written exactly once:
//! pivot `k` owns the directions at or after its last nonzero axis. For
//! undisplaced runs (`b = 0` exactly) amplitudes of odd weight vanish
//! identically, so the fill visits only odd-weight pivots and leaves the
//! zero shells unwritten — the checkerboard that roughly halves the pivot
//! count. Pivot batches within a shell are independent, so they are mapped
//! through an [`Executor`] and committed serially in plan order; results are
//! bit-identical for any thread count.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::exec::Executor;
use crate::gaussian::{GaussianData, Representation};
use crate::grad::{bundle_width, GradTensor};
use crate::lattice::{
    compositions, dm_shape, indices_of_weight, last_nonzero, linear_index, strides, weight,
    CutoffSpec, DenseTensor,
};
use crate::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Precomputed `√0 ..= √max`.
#[derive(Debug, Clone)]
pub(crate) struct SqrtLut {
    table: Vec<f64>,
}

impl SqrtLut {
    pub(crate) fn with_max(max: usize) -> Self {
        SqrtLut { table: (0..=max).map(|k| (k as f64).sqrt()).collect() }
    }

    #[inline]
    pub(crate) fn get(&self, k: usize) -> f64 {
        self.table[k]
    }
}

/// The recurrence kernel over `width` complex lanes per cell. Width 1 walks
/// plain amplitudes; width `1 + D + D²` co-walks the parameter derivatives
/// (see [`crate::grad`]), which follow the same linear recurrence plus two
/// source injections from the value lanes.
pub(crate) struct Kernel<'a> {
    pub a: &'a crate::mat::CMat,
    /// `None` skips the `b`-term entirely (exact-zero linear part).
    pub b: Option<&'a [C64]>,
    pub d: usize,
    pub width: usize,
    pub sqrt: &'a SqrtLut,
}

impl Kernel<'_> {
    pub(crate) fn from_params<'a>(
        params: &'a GaussianData,
        width: usize,
        sqrt: &'a SqrtLut,
        force_b_term: bool,
    ) -> Kernel<'a> {
        let use_b = force_b_term || !params.b_is_zero();
        Kernel {
            a: &params.a,
            b: if use_b { Some(params.b.as_slice()) } else { None },
            d: params.d(),
            width,
            sqrt,
        }
    }

    /// True when applying a pivot needs the pivot's own payload: either the
    /// `b`-term is active or gradient lanes need their value source.
    pub(crate) fn needs_pivot_value(&self) -> bool {
        self.b.is_some() || self.width > 1
    }

    /// Compute the payload written to `pivot + 1_dir`.
    ///
    /// `reads[l]` is the payload at `pivot − 1_l` (`None` ⇒ zero amplitude);
    /// entries for axes with `pivot[l] == 0` are never touched.
    pub(crate) fn write_to(
        &self,
        pivot: &[usize],
        pivot_payload: Option<&[C64]>,
        reads: &[Option<&[C64]>],
        dir: usize,
        out: &mut [C64],
    ) {
        debug_assert_eq!(out.len(), self.width);
        debug_assert!(pivot_payload.is_some() || !self.needs_pivot_value());
        out.fill(zero());
        if let (Some(b), Some(pp)) = (self.b, pivot_payload) {
            let bi = b[dir];
            for t in 0..self.width {
                out[t] += pp[t] * bi;
            }
        }
        for l in 0..self.d {
            if pivot[l] == 0 {
                continue;
            }
            if let Some(rp) = reads[l] {
                let coef = self.a.get(dir, l) * self.sqrt.get(pivot[l]);
                for t in 0..self.width {
                    out[t] += rp[t] * coef;
                }
            }
        }
        if self.width > 1 {
            // ∂/∂b_dir source: the pivot amplitude itself.
            if let Some(pp) = pivot_payload {
                out[1 + dir] += pp[0];
            }
            // ∂/∂A_{dir,s} source: √k_s times the read amplitude on axis s.
            let base = 1 + self.d + dir * self.d;
            for s in 0..self.d {
                if pivot[s] == 0 {
                    continue;
                }
                if let Some(rp) = reads[s] {
                    out[base + s] += rp[0] * self.sqrt.get(pivot[s]);
                }
            }
        }
        let inv = 1.0 / self.sqrt.get(pivot[dir] + 1);
        for t in 0..self.width {
            out[t] *= inv;
        }
    }
}

/// Dense fill in progress: a box of `width`-lane cells plus written flags,
/// so misordered schedules surface as hard errors instead of silent zeros.
#[derive(Debug, Clone)]
pub struct DenseFill {
    shape: Vec<usize>,
    strides: Vec<usize>,
    width: usize,
    data: Vec<C64>,
    written: Vec<bool>,
}

impl DenseFill {
    /// Allocate a zeroed box and write the seed payload at the origin.
    #[must_use]
    pub fn seeded(shape: &[usize], width: usize, seed: &[C64]) -> Self {
        let cells: usize = shape.iter().product();
        let mut fill = DenseFill {
            shape: shape.to_vec(),
            strides: strides(shape),
            width,
            data: vec![zero(); cells * width],
            written: vec![false; cells],
        };
        fill.data[..width].copy_from_slice(seed);
        fill.written[0] = true;
        fill
    }

    #[must_use]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn in_bounds(&self, k: &[usize]) -> bool {
        k.len() == self.shape.len() && k.iter().zip(&self.shape).all(|(&ki, &ci)| ki < ci)
    }

    fn lin(&self, k: &[usize]) -> usize {
        linear_index(k, &self.strides)
    }

    #[must_use]
    pub fn is_written(&self, k: &[usize]) -> bool {
        self.written[self.lin(k)]
    }

    #[must_use]
    pub fn payload(&self, k: &[usize]) -> &[C64] {
        let lin = self.lin(k);
        &self.data[lin * self.width..(lin + 1) * self.width]
    }

    fn write_checked(&mut self, lin: usize, payload: &[C64]) -> Result<()> {
        if self.written[lin] {
            return Err(FockError::SchedulerBug(format!("double write to dense cell {lin}")));
        }
        self.written[lin] = true;
        self.data[lin * self.width..(lin + 1) * self.width].copy_from_slice(payload);
        Ok(())
    }

    fn write_overwrite(&mut self, lin: usize, payload: &[C64]) {
        self.written[lin] = true;
        self.data[lin * self.width..(lin + 1) * self.width].copy_from_slice(payload);
    }

    #[must_use]
    pub fn written_cells(&self) -> usize {
        self.written.iter().filter(|&&w| w).count()
    }

    /// Finish a width-1 fill.
    #[must_use]
    pub fn into_tensor(self) -> DenseTensor {
        debug_assert_eq!(self.width, 1);
        DenseTensor { shape: self.shape, data: self.data }
    }

    /// Finish a gradient fill of parameter dimension `d`.
    #[must_use]
    pub fn into_grad(self, d: usize) -> GradTensor {
        debug_assert_eq!(self.width, bundle_width(d));
        GradTensor { cell_shape: self.shape, d, data: self.data }
    }
}

/// Run totals for a reference fill.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FillCounters {
    pub pivots_applied: u64,
    /// Cells stored, seed included.
    pub cells_written: u64,
    /// `cells_written × width`: complex numbers stored.
    pub stored_complex: u64,
    /// Allocation high-water mark in cells (the whole box for dense fills).
    pub peak_cells: u64,
}

fn axis_shape(params: &GaussianData, cutoff: &CutoffSpec) -> Result<Vec<usize>> {
    match cutoff {
        CutoffSpec::Local(cutoffs) => {
            if cutoffs.len() != params.modes {
                return Err(FockError::Validation(format!(
                    "{} cutoffs for {} modes",
                    cutoffs.len(),
                    params.modes
                )));
            }
            if cutoffs.iter().any(|&c| c == 0) {
                return Err(FockError::Validation("cutoffs must be at least 1".into()));
            }
            Ok(match params.representation {
                Representation::StateVector => cutoffs.clone(),
                Representation::DensityMatrix => dm_shape(cutoffs),
            })
        }
        CutoffSpec::GlobalWeight(w_max) => {
            if *w_max == 0 {
                return Err(FockError::Validation("global weight bound must be at least 1".into()));
            }
            // Any admitted index has every entry below w_max, so the box is
            // exact.
            Ok(vec![*w_max; params.d()])
        }
        CutoffSpec::ProbabilityMass(_) => Err(FockError::Validation(
            "probability-mass fills are map-backed; use fill_full".into(),
        )),
    }
}

/// Directions pivot `k` owns in the write partition: everything at or after
/// its last nonzero axis, clipped to the box.
fn owned_dirs<'a>(k: &'a [usize], shape: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
    let start = last_nonzero(k).unwrap_or(0);
    (start..k.len()).filter(move |&i| k[i] + 1 < shape[i])
}

/// Apply one pivot, writing every in-bounds up-neighbour. This is the public
/// single-step operation; missing read amplitudes are scheduler bugs.
pub fn apply_pivot(params: &GaussianData, fill: &mut DenseFill, pivot: &[usize]) -> Result<()> {
    apply_pivot_inner(params, fill, pivot, false)
}

/// [`apply_pivot`] for undisplaced runs: requires `b = 0` exactly and an
/// odd-weight pivot (even shells feed odd shells, which vanish identically),
/// and never touches the pivot's own amplitude.
pub fn apply_pivot_no_displacement(
    params: &GaussianData,
    fill: &mut DenseFill,
    pivot: &[usize],
) -> Result<()> {
    if !params.b_is_zero() {
        return Err(FockError::Validation(
            "undisplaced pivot application requires an exactly-zero linear term".into(),
        ));
    }
    if weight(pivot) % 2 == 0 {
        return Err(FockError::Validation(
            "undisplaced runs only apply odd-weight pivots; even-weight targets vanish".into(),
        ));
    }
    apply_pivot_inner(params, fill, pivot, true)
}

fn apply_pivot_inner(
    params: &GaussianData,
    fill: &mut DenseFill,
    pivot: &[usize],
    skip_pivot_value: bool,
) -> Result<()> {
    let d = params.d();
    if pivot.len() != d || !fill.in_bounds(pivot) {
        return Err(FockError::Validation(format!("pivot {pivot:?} outside the lattice box")));
    }
    let max_axis = pivot.iter().max().copied().unwrap_or(0);
    let sqrt = SqrtLut::with_max(max_axis + 1);
    let kernel = Kernel::from_params(params, fill.width(), &sqrt, false);

    let pivot_payload: Option<Vec<C64>> = if kernel.needs_pivot_value() && !skip_pivot_value {
        if !fill.is_written(pivot) {
            return Err(FockError::SchedulerBug(format!(
                "pivot {pivot:?} applied before its own amplitude was written"
            )));
        }
        Some(fill.payload(pivot).to_vec())
    } else {
        None
    };

    let mut reads: Vec<Option<Vec<C64>>> = vec![None; d];
    let mut down = pivot.to_vec();
    for l in 0..d {
        if pivot[l] == 0 {
            continue;
        }
        down[l] -= 1;
        if !fill.is_written(&down) {
            // In undisplaced mode the down-neighbours sit on the vanishing
            // parity and are legitimately unwritten zeros.
            if !skip_pivot_value {
                return Err(FockError::SchedulerBug(format!(
                    "read of unwritten amplitude at {down:?} while applying pivot {pivot:?}"
                )));
            }
        }
        reads[l] = Some(fill.payload(&down).to_vec());
        down[l] += 1;
    }

    let read_refs: Vec<Option<&[C64]>> = reads.iter().map(|r| r.as_deref()).collect();
    let mut out = vec![zero(); fill.width()];
    let mut up = pivot.to_vec();
    for i in 0..d {
        if pivot[i] + 1 >= fill.shape[i] {
            continue;
        }
        kernel.write_to(pivot, pivot_payload.as_deref(), &read_refs, i, &mut out);
        up[i] += 1;
        let lin = fill.lin(&up);
        fill.write_overwrite(lin, &out);
        up[i] -= 1;
    }
    Ok(())
}

struct PivotOutput {
    writes: Vec<(usize, Vec<C64>)>,
}

fn fill_dense(
    params: &GaussianData,
    shape: &[usize],
    weight_bound: Option<usize>,
    width: usize,
    exec: &(impl Executor + ?Sized),
) -> Result<(DenseFill, FillCounters)> {
    let d = params.d();
    debug_assert_eq!(shape.len(), d);
    let grad = width > 1;
    let checkered = params.b_is_zero() && !grad;

    let mut seed = vec![zero(); width];
    seed[0] = params.g0;
    let mut fill = DenseFill::seeded(shape, width, &seed);
    let box_cells: u64 = shape.iter().map(|&c| c as u64).product();
    let mut counters = FillCounters {
        pivots_applied: 0,
        cells_written: 1,
        stored_complex: width as u64,
        peak_cells: box_cells,
    };

    let max_entry = shape.iter().max().copied().unwrap_or(1);
    let sqrt = SqrtLut::with_max(max_entry + 1);
    let kernel = Kernel::from_params(params, width, &sqrt, false);

    // A total-weight bound admits strictly smaller weights only, so the last
    // pivot shell sits two below the bound (its writes land one below).
    let mut top_weight: usize = shape.iter().map(|&c| c - 1).sum();
    if let Some(bound) = weight_bound {
        top_weight = top_weight.min(bound - 1);
    }
    for w in 0..top_weight {
        if checkered && w % 2 == 0 {
            continue;
        }
        let pivots: Vec<Vec<usize>> = indices_of_weight(w, shape)
            .into_iter()
            .filter(|k| owned_dirs(k, shape).next().is_some())
            .collect();
        if pivots.is_empty() {
            continue;
        }
        let frozen = &fill;
        let outputs = exec.map(pivots.len(), &|idx| {
            let pivot = &pivots[idx];
            let pivot_payload = kernel.needs_pivot_value().then(|| frozen.payload(pivot));
            let mut reads: Vec<Option<&[C64]>> = vec![None; d];
            let mut down = pivot.clone();
            for l in 0..d {
                if pivot[l] == 0 {
                    continue;
                }
                down[l] -= 1;
                reads[l] = Some(frozen.payload(&down));
                down[l] += 1;
            }
            let mut writes = Vec::new();
            let mut up = pivot.clone();
            let mut out = vec![zero(); width];
            for i in owned_dirs(pivot, shape) {
                kernel.write_to(pivot, pivot_payload, &reads, i, &mut out);
                up[i] += 1;
                writes.push((frozen.lin(&up), out.clone()));
                up[i] -= 1;
            }
            PivotOutput { writes }
        });
        for output in outputs {
            counters.pivots_applied += 1;
            for (lin, payload) in output.writes {
                fill.write_checked(lin, &payload)?;
                counters.cells_written += 1;
                counters.stored_complex += width as u64;
            }
        }
    }
    Ok((fill, counters))
}

/// Fill every admitted amplitude under the cutoff. Local and global-weight
/// bounds produce a dense box; the probability-mass bound grows shell by
/// shell until the captured probability crosses the threshold and reports
/// the reached mass alongside.
pub fn fill_full(
    params: &GaussianData,
    cutoff: &CutoffSpec,
    exec: &(impl Executor + ?Sized),
) -> Result<(DenseTensor, FillCounters)> {
    if let CutoffSpec::ProbabilityMass(threshold) = cutoff {
        let (tensor, counters, _) = fill_probability_mass(params, *threshold)?;
        return Ok((tensor, counters));
    }
    let shape = axis_shape(params, cutoff)?;
    let bound = match cutoff {
        CutoffSpec::GlobalWeight(w_max) => Some(*w_max),
        _ => None,
    };
    let (fill, counters) = fill_dense(params, &shape, bound, 1, exec)?;
    Ok((fill.into_tensor(), counters))
}

/// [`fill_full`] with gradient bundles co-walked on every cell. Undisplaced
/// runs cannot use the checkerboard here: odd-weight cells carry vanishing
/// amplitudes but nonzero `∂/∂b` lanes.
pub fn fill_full_with_grad(
    params: &GaussianData,
    cutoff: &CutoffSpec,
    exec: &(impl Executor + ?Sized),
) -> Result<(GradTensor, FillCounters)> {
    if matches!(cutoff, CutoffSpec::ProbabilityMass(_)) {
        return Err(FockError::Validation(
            "probability-mass bounds are supported for plain fills only".into(),
        ));
    }
    let shape = axis_shape(params, cutoff)?;
    let bound = match cutoff {
        CutoffSpec::GlobalWeight(w_max) => Some(*w_max),
        _ => None,
    };
    let d = params.d();
    let (fill, counters) = fill_dense(params, &shape, bound, bundle_width(d), exec)?;
    Ok((fill.into_grad(d), counters))
}

/// Hard cap on probability-mass shell growth: weight shells past this point
/// mean the threshold is unreachable at double precision.
const MASS_SHELL_CAP: usize = 400;

/// Map-backed fill that stops once the captured probability reaches the
/// threshold. Returns the densified bounding box, the counters, and the mass
/// actually reached.
pub fn fill_probability_mass(
    params: &GaussianData,
    threshold: f64,
) -> Result<(DenseTensor, FillCounters, f64)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(FockError::Validation(
            "probability-mass threshold must lie strictly between 0 and 1".into(),
        ));
    }
    let d = params.d();
    let checkered = params.b_is_zero();
    let mut store: alloc::collections::BTreeMap<Vec<usize>, C64> = alloc::collections::BTreeMap::new();
    store.insert(vec![0; d], params.g0);
    let mut counters = FillCounters {
        pivots_applied: 0,
        cells_written: 1,
        stored_complex: 1,
        peak_cells: 1,
    };

    let mass_of = |store: &alloc::collections::BTreeMap<Vec<usize>, C64>, shell_w: usize| -> f64 {
        // Probability living on one completed weight shell.
        let mut mass = 0.0;
        for (k, v) in store.iter() {
            if weight(k) != shell_w {
                continue;
            }
            match params.representation {
                Representation::StateVector => mass += v.norm_sqr(),
                Representation::DensityMatrix => {
                    if k.chunks_exact(2).all(|p| p[0] == p[1]) {
                        mass += v.re;
                    }
                }
            }
        }
        mass
    };

    let mut mass = mass_of(&store, 0);
    let mut shell_w = 0usize;
    while mass < threshold {
        shell_w += 1;
        if shell_w > MASS_SHELL_CAP {
            return Err(FockError::NoConvergence(format!(
                "probability mass {mass:.12} after {MASS_SHELL_CAP} shells, threshold {threshold}"
            )));
        }
        if checkered && shell_w % 2 == 1 {
            continue; // odd shells vanish identically
        }
        let sqrt = SqrtLut::with_max(shell_w + 1);
        let kernel = Kernel::from_params(params, 1, &sqrt, false);
        let pivots = compositions(shell_w - 1, d);
        let mut staged: Vec<(Vec<usize>, C64)> = Vec::new();
        for pivot in &pivots {
            let pivot_payload: Option<&[C64]> = if kernel.needs_pivot_value() {
                Some(core::slice::from_ref(store.get(pivot).ok_or_else(|| {
                    FockError::SchedulerBug(format!("pivot {pivot:?} missing from mass fill"))
                })?))
            } else {
                None
            };
            let mut reads: Vec<Option<&[C64]>> = vec![None; d];
            let mut down = pivot.clone();
            for l in 0..d {
                if pivot[l] == 0 {
                    continue;
                }
                down[l] -= 1;
                // Absent cells sit on the vanishing parity and read as zero.
                reads[l] = store.get(&down).map(core::slice::from_ref);
                down[l] += 1;
            }
            counters.pivots_applied += 1;
            let mut out = [zero()];
            let mut up = pivot.clone();
            let start = last_nonzero(pivot).unwrap_or(0);
            for i in start..d {
                kernel.write_to(pivot, pivot_payload, &reads, i, &mut out);
                up[i] += 1;
                staged.push((up.clone(), out[0]));
                up[i] -= 1;
            }
        }
        for (k, v) in staged {
            if store.insert(k, v).is_some() {
                return Err(FockError::SchedulerBug("double write in mass fill".into()));
            }
            counters.cells_written += 1;
            counters.stored_complex += 1;
        }
        mass += mass_of(&store, shell_w);
    }
    counters.peak_cells = store.len() as u64;

    // Bound the box by the nonzero support: full shells write plenty of
    // exact zeros (parity, decoupled axes) that would inflate the output.
    let mut bounds = vec![1usize; d];
    for (k, v) in &store {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        for (b, &ki) in bounds.iter_mut().zip(k) {
            *b = (*b).max(ki + 1);
        }
    }
    let mut tensor = DenseTensor::zeros(&bounds);
    let st = strides(&bounds);
    for (k, v) in &store {
        if k.iter().zip(&bounds).all(|(&ki, &bi)| ki < bi) {
            tensor.data[linear_index(k, &st)] = *v;
        }
    }
    Ok((tensor, counters, mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::SerialExecutor;
    use crate::gaussian::{
        circuit_statevector_params, to_density_params, CircuitSpec, ComplexGaussianState,
        CutoffMode, Squeeze,
    };

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coherent_spec(alpha: C64) -> CircuitSpec {
        CircuitSpec {
            modes: 1,
            squeeze: vec![Squeeze { r: 0.0, phase: 0.0 }],
            interferometer: None,
            loss: None,
            displacements: Some(vec![alpha]),
            cutoffs: vec![8],
            detected_modes: vec![0],
            cutoff_mode: CutoffMode::Local,
        }
    }

    #[test]
    fn thermal_pivot_step_matches_hand_value() {
        // Occupation 1: seed 1/2, and the step across the pair writes the
        // one-photon probability 1/4.
        let params = to_density_params(&ComplexGaussianState::thermal(&[1.0])).unwrap();
        let seed = [params.g0];
        let mut fill = DenseFill::seeded(&[4, 4], 1, &seed);
        apply_pivot_no_displacement(&params, &mut fill, &[1, 0]).unwrap();
        assert!((fill.payload(&[1, 1])[0] - c(0.25, 0.0)).norm() < TOL);
        // All-dirs application also wrote [2, 0], which the kernel leaves at
        // zero for a thermal state (no anomalous diagonal coupling).
        assert!(fill.payload(&[2, 0])[0].norm() < TOL);
    }

    #[test]
    fn thermal_fill_matches_geometric_distribution() {
        let params = to_density_params(&ComplexGaussianState::thermal(&[1.0])).unwrap();
        let (tensor, counters) =
            fill_full(&params, &CutoffSpec::Local(vec![6]), &SerialExecutor).unwrap();
        for n in 0..6 {
            let p = tensor.get(&[n, n]);
            let expect = 0.5f64.powi(n as i32 + 1);
            assert!((p - c(expect, 0.0)).norm() < TOL, "p({n}) = {p}");
            // Off-diagonal entries of a thermal state vanish.
            if n + 1 < 6 {
                assert!(tensor.get(&[n + 1, n]).norm() < TOL);
            }
        }
        assert!(counters.pivots_applied > 0);
    }

    #[test]
    fn squeezed_statevector_fill_matches_closed_form() {
        let spec = CircuitSpec {
            modes: 1,
            squeeze: vec![Squeeze { r: 0.8, phase: 0.0 }],
            interferometer: None,
            loss: None,
            displacements: None,
            cutoffs: vec![10],
            detected_modes: vec![0],
            cutoff_mode: CutoffMode::Local,
        };
        let params = circuit_statevector_params(&spec).unwrap();
        let (psi, _) = fill_full(&params, &CutoffSpec::Local(vec![10]), &SerialExecutor).unwrap();
        let t = 0.8f64.tanh();
        let psi0 = 1.0 / 0.8f64.cosh().sqrt();
        // ψ_{2n} = tanh^n r · √(2n)! / (2^n n!) · ψ₀, odd entries vanish.
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for n in 0..5 {
            let expect = t.powi(n as i32) * fact(2 * n).sqrt() / (2.0f64.powi(n as i32) * fact(n)) * psi0;
            assert!((psi.get(&[2 * n]) - c(expect, 0.0)).norm() < 1e-10, "n = {n}");
            assert!(psi.get(&[2 * n + 1]).norm() < TOL);
        }
    }

    #[test]
    fn coherent_fill_is_poissonian() {
        let alpha = c(0.6, -0.3);
        let params = circuit_statevector_params(&coherent_spec(alpha)).unwrap();
        let (psi, counters) =
            fill_full(&params, &CutoffSpec::Local(vec![8]), &SerialExecutor).unwrap();
        let mut fact = 1.0f64;
        for n in 0..8 {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = (-alpha.norm_sqr() / 2.0).exp() * alpha.powu(n as u32) / fact.sqrt();
            assert!((psi.get(&[n]) - expect).norm() < 1e-10, "n = {n}");
        }
        // Displaced single-mode fill applies C − 1 pivots.
        assert_eq!(counters.pivots_applied, 7);
    }

    #[test]
    fn displaced_squeezed_state_is_normalized() {
        // Displacement and squeezing together exercise the cross term of the
        // seed amplitude; a conjugation slip there leaves Σ|ψ|² ≠ 1 while the
        // displacement-only and squeeze-only cases still pass.
        let u = crate::mat::CMat::from_fn(2, 2, |r, cc| {
            let s = core::f64::consts::FRAC_1_SQRT_2;
            if r == 1 && cc == 1 {
                c(-s, 0.0)
            } else {
                c(s, 0.0)
            }
        });
        let spec = CircuitSpec {
            modes: 2,
            squeeze: vec![Squeeze { r: 0.4, phase: 0.2 }, Squeeze { r: 0.3, phase: -0.5 }],
            interferometer: Some(u),
            loss: None,
            displacements: Some(vec![c(0.3, 0.1), c(0.0, -0.2)]),
            cutoffs: vec![4, 4],
            detected_modes: vec![0, 1],
            cutoff_mode: CutoffMode::Local,
        };
        let params = circuit_statevector_params(&spec).unwrap();
        let (psi, _) =
            fill_full(&params, &CutoffSpec::Local(vec![24, 24]), &SerialExecutor).unwrap();
        let mass: f64 = psi.data.iter().map(|z| z.norm_sqr()).sum();
        assert!((mass - 1.0).abs() < 1e-10, "total mass {mass}");
    }

    #[test]
    fn undisplaced_pivot_count_is_about_half() {
        for modes in 1..=2usize {
            for c_per in 2..=5usize {
                let spec = CircuitSpec {
                    modes,
                    squeeze: vec![Squeeze { r: 0.4, phase: 0.2 }; modes],
                    interferometer: None,
                    loss: None,
                    displacements: None,
                    cutoffs: vec![c_per; modes],
                    detected_modes: (0..modes).collect(),
                    cutoff_mode: CutoffMode::Local,
                };
                let params = circuit_statevector_params(&spec).unwrap();
                let cutoff = CutoffSpec::Local(vec![c_per; modes]);
                let (_, plain) = fill_full(&params, &cutoff, &SerialExecutor).unwrap();

                let mut displaced_spec = spec.clone();
                displaced_spec.displacements = Some(vec![c(0.2, 0.1); modes]);
                let displaced = circuit_statevector_params(&displaced_spec).unwrap();
                let (_, full) = fill_full(&displaced, &cutoff, &SerialExecutor).unwrap();

                let expect_full = (c_per as u64).pow(modes as u32)
                    - (c_per as u64).pow(modes as u32 - 1);
                assert_eq!(full.pivots_applied, expect_full);
                let twice = 2 * plain.pivots_applied;
                assert!(
                    twice.abs_diff(full.pivots_applied) <= 2,
                    "modes {modes} cutoff {c_per}: {} vs {}",
                    plain.pivots_applied,
                    full.pivots_applied
                );
            }
        }
    }

    #[test]
    fn density_fill_is_conjugate_outer_product_of_statevector() {
        let spec = CircuitSpec {
            modes: 2,
            squeeze: vec![Squeeze { r: 0.5, phase: 0.3 }, Squeeze { r: 0.3, phase: -0.4 }],
            interferometer: None,
            loss: None,
            displacements: Some(vec![c(0.2, 0.1), c(-0.1, 0.25)]),
            cutoffs: vec![4, 4],
            detected_modes: vec![0, 1],
            cutoff_mode: CutoffMode::Local,
        };
        let state = crate::gaussian::build_complex_state(&spec).unwrap();
        let sv = crate::gaussian::to_statevector_params(&state).unwrap();
        let dm = to_density_params(&state).unwrap();
        let cutoff = CutoffSpec::Local(vec![4, 4]);
        let (psi, _) = fill_full(&sv, &cutoff, &SerialExecutor).unwrap();
        let (rho, _) = fill_full(&dm, &cutoff, &SerialExecutor).unwrap();
        for m in 0..4 {
            for n in 0..4 {
                for p in 0..4 {
                    for q in 0..4 {
                        let lhs = rho.get(&[m, n, p, q]);
                        let rhs = psi.get(&[m, p]).conj() * psi.get(&[n, q]);
                        assert!((lhs - rhs).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn density_fill_is_hermitian_with_unit_trace_bound() {
        let spec = CircuitSpec {
            modes: 2,
            squeeze: vec![Squeeze { r: 0.6, phase: 0.0 }, Squeeze { r: 0.4, phase: 1.1 }],
            interferometer: None,
            loss: Some(vec![0.7, 0.9]),
            displacements: Some(vec![c(0.3, 0.0), c(0.0, -0.2)]),
            cutoffs: vec![4, 4],
            detected_modes: vec![0, 1],
            cutoff_mode: CutoffMode::Local,
        };
        let params = crate::gaussian::circuit_density_params(&spec).unwrap();
        let (rho, _) = fill_full(&params, &CutoffSpec::Local(vec![4, 4]), &SerialExecutor).unwrap();
        let mut trace = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                for p in 0..4 {
                    for q in 0..4 {
                        let v = rho.get(&[m, n, p, q]);
                        let sw = rho.get(&[n, m, q, p]);
                        assert!((v - sw.conj()).norm() < 1e-12);
                    }
                }
                let diag = rho.get(&[m, m, n, n]);
                assert!(diag.im.abs() < 1e-12);
                assert!(diag.re > -1e-14);
                trace += diag.re;
            }
        }
        assert!(trace <= 1.0 + 1e-10);
        assert!(trace > 0.5, "trace {trace} suspiciously small for C = 4");
    }

    #[test]
    fn global_weight_agrees_with_local_on_shared_indices() {
        let spec = coherent_spec(c(0.4, 0.2));
        let params = circuit_statevector_params(&spec).unwrap();
        let (local, _) = fill_full(&params, &CutoffSpec::Local(vec![6]), &SerialExecutor).unwrap();
        let (global, _) = fill_full(&params, &CutoffSpec::GlobalWeight(4), &SerialExecutor).unwrap();
        assert_eq!(global.shape, vec![4]);
        for n in 0..4 {
            assert!((global.get(&[n]) - local.get(&[n])).norm() < TOL);
        }
    }

    #[test]
    fn global_weight_is_strict_on_density_matrices() {
        // Bound 4 on a thermal pair: the weight-4 diagonal [2, 2] must stay
        // unwritten (exactly zero).
        let params = to_density_params(&ComplexGaussianState::thermal(&[1.0])).unwrap();
        let (rho, _) = fill_full(&params, &CutoffSpec::GlobalWeight(4), &SerialExecutor).unwrap();
        assert_eq!(rho.shape, vec![4, 4]);
        assert!((rho.get(&[1, 1]) - c(0.25, 0.0)).norm() < TOL);
        assert!(rho.get(&[2, 2]).norm() == 0.0);
    }

    #[test]
    fn probability_mass_thermal_stops_at_expected_shell() {
        // Occupation 1, threshold 0.999: cumulative 1 − 2^{−(n+1)} first
        // crosses at photon number 9.
        let params = to_density_params(&ComplexGaussianState::thermal(&[1.0])).unwrap();
        let (tensor, _, mass) = fill_probability_mass(&params, 0.999).unwrap();
        assert_eq!(tensor.shape, vec![10, 10]);
        assert!(mass >= 0.999);
        assert!((mass - (1.0 - 0.5f64.powi(10))).abs() < TOL);
    }

    #[test]
    fn probability_mass_coherent_statevector() {
        let params = circuit_statevector_params(&coherent_spec(c(0.5, 0.0))).unwrap();
        let (tensor, _, mass) = fill_probability_mass(&params, 0.99).unwrap();
        assert!(mass >= 0.99);
        // Values must agree with the dense fill on the shared box.
        let (dense, _) =
            fill_full(&params, &CutoffSpec::Local(vec![tensor.shape[0]]), &SerialExecutor).unwrap();
        for n in 0..tensor.shape[0] {
            assert!((tensor.get(&[n]) - dense.get(&[n])).norm() < TOL);
        }
    }

    #[test]
    fn probability_mass_rejects_unreachable_threshold() {
        // A state with a covariance hand-built to leak: threshold 1 − ε is
        // unreachable only at pathological precision, so use the validation
        // path instead: threshold must be < 1.
        let params = circuit_statevector_params(&coherent_spec(c(0.5, 0.0))).unwrap();
        assert!(fill_probability_mass(&params, 1.0).is_err());
        assert!(fill_probability_mass(&params, 0.0).is_err());
    }

    #[test]
    fn missing_read_is_scheduler_bug() {
        let params = circuit_statevector_params(&coherent_spec(c(0.5, 0.0))).unwrap();
        let seed = [params.g0];
        let mut fill = DenseFill::seeded(&[5], 1, &seed);
        // Pivot [2] needs the amplitude at [1] and its own value, neither
        // written yet.
        let err = apply_pivot(&params, &mut fill, &[2]).unwrap_err();
        assert!(err.is_internal());
    }

    #[test]
    fn gradient_fill_carries_zero_da_on_vanishing_parity() {
        // Undisplaced: odd cells have zero value and zero dA, but nonzero db.
        let spec = CircuitSpec {
            modes: 1,
            squeeze: vec![Squeeze { r: 0.5, phase: 0.0 }],
            interferometer: None,
            loss: None,
            displacements: None,
            cutoffs: vec![6],
            detected_modes: vec![0],
            cutoff_mode: CutoffMode::Local,
        };
        let params = circuit_statevector_params(&spec).unwrap();
        let (g, counters) =
            fill_full_with_grad(&params, &CutoffSpec::Local(vec![6]), &SerialExecutor).unwrap();
        assert_eq!(counters.stored_complex, counters.cells_written * 3);
        let one = 1usize; // cell [1]
        assert!(g.value(one).norm() < TOL);
        assert!(g.db(one)[0].norm() > 0.0, "δ-source must survive b = 0");
        assert!(g.da(one)[0].norm() < TOL);
        // Even cells: value nonzero, db zero by parity.
        assert!(g.value(2).norm() > 0.0);
        assert!(g.db(2)[0].norm() < TOL);
    }
}
