//! Gaussian circuit states and their recurrence parameters.
//!
//! States are tracked in the complex (ladder-operator) basis with the mode
//! operators ordered as `(a_1..a_M, a†_1..a†_M)`. The covariance is the
//! symmetrized second moment `σ_ij = ⟨{Δξ_i, Δξ_j†}⟩ / 2`, so the vacuum is
//! exactly `σ = ½·1` and the block swap `P` (annihilators ↔ creators) is the
//! only basis gymnastics the conversion formulas need. The quadrature
//! picture, where preferred, is one fixed unitary away:
//! `W = (1/√2)·[[1, i·1], [1, −i·1]]`, `σ_quad = W σ W†`; determinants and
//! purity are identical in both pictures.
//!
//! The conversion to Fock-recurrence parameters follows the closed forms
//!
//! ```text
//! σ± = σ ± ½·1
//! A = P σ₋ σ₊⁻¹              b = P σ₊⁻¹ μ
//! G₀ = exp(−½ μ̄† σ₊⁻¹ μ̄) / √det(σ₊)        (μ̄ = conj μ)
//! ```
//!
//! in the blocked basis, then interleaves the two index groups so that mode
//! `i` of a density matrix owns tensor axes `2i` and `2i+1`. The first axis
//! of each pair carries the conjugated parameters; fully paired entries are
//! detection probabilities. For pure states the blocked `A` is block
//! diagonal, `conj(A_ψ) ⊕ A_ψ`, and the state-vector parameters are read off
//! the trailing block.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{FockError, Result};
use crate::mat::CMat;
use crate::C64;

/// Covariance must stay Hermitian to this tolerance through the channel
/// pipeline.
pub const SIGMA_HERMITICITY_TOL: f64 = 1e-12;
/// Interferometers must satisfy `U†U = 1` to this tolerance.
pub const UNITARITY_TOL: f64 = 1e-12;
/// State-vector extraction demands purity within this tolerance of one, and
/// uses the same bound for the block-consistency checks.
pub const PURITY_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Per-mode squeezing: `a → a·cosh r + a†·e^{iφ}·sinh r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squeeze {
    pub r: f64,
    pub phase: f64,
}

/// Which lattice bound a run uses (see `CutoffSpec` for the geometric side).
#[derive(Debug, Clone, PartialEq)]
pub enum CutoffMode {
    /// Per-mode cutoffs from the `cutoffs` field.
    Local,
    /// Keep amplitudes with total photon number below the bound.
    GlobalPhotons(usize),
    /// Grow the lattice until this much probability is captured.
    ProbabilityMass(f64),
}

/// Declarative description of a noisy linear-optical circuit:
/// vacuum → per-mode squeezers → interferometer → per-mode loss →
/// displacements.
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub modes: usize,
    pub squeeze: Vec<Squeeze>,
    pub interferometer: Option<CMat>,
    /// Per-mode transmissivity `η ∈ [0, 1]`; `None` means lossless.
    pub loss: Option<Vec<f64>>,
    pub displacements: Option<Vec<C64>>,
    pub cutoffs: Vec<usize>,
    /// Zero-based mode ids, strictly increasing.
    pub detected_modes: Vec<usize>,
    pub cutoff_mode: CutoffMode,
}

impl CircuitSpec {
    /// Structural validation: field lengths, parameter ranges, unitarity.
    pub fn validate(&self) -> Result<()> {
        let m = self.modes;
        if m == 0 {
            return Err(FockError::Validation("circuit needs at least one mode".into()));
        }
        if self.squeeze.len() != m {
            return Err(FockError::Validation(format!(
                "squeeze parameters for {} modes, circuit has {m}",
                self.squeeze.len()
            )));
        }
        if self.cutoffs.len() != m {
            return Err(FockError::Validation(format!(
                "{} cutoffs for {m} modes",
                self.cutoffs.len()
            )));
        }
        if self.cutoffs.iter().any(|&c| c == 0) {
            return Err(FockError::Validation("cutoffs must be at least 1".into()));
        }
        if let Some(u) = &self.interferometer {
            if u.n_rows() != m || u.n_cols() != m {
                return Err(FockError::Validation(format!(
                    "interferometer is {}×{}, circuit has {m} modes",
                    u.n_rows(),
                    u.n_cols()
                )));
            }
            let defect = unitarity_defect(u);
            if defect > UNITARITY_TOL {
                return Err(FockError::Validation(format!(
                    "interferometer is not unitary (defect {defect:.3e}, tolerance {UNITARITY_TOL:.0e})"
                )));
            }
        }
        if let Some(etas) = &self.loss {
            if etas.len() != m {
                return Err(FockError::Validation(format!(
                    "{} transmissivities for {m} modes",
                    etas.len()
                )));
            }
            if etas.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
                return Err(FockError::Validation("transmissivities must lie in [0, 1]".into()));
            }
        }
        if let Some(d) = &self.displacements {
            if d.len() != m {
                return Err(FockError::Validation(format!("{} displacements for {m} modes", d.len())));
            }
        }
        if self.detected_modes.is_empty() {
            return Err(FockError::Validation("detected mode set must not be empty".into()));
        }
        if self.detected_modes.windows(2).any(|w| w[0] >= w[1])
            || *self.detected_modes.last().unwrap() >= m
        {
            return Err(FockError::Validation(
                "detected modes must be strictly increasing, zero-based, below the mode count".into(),
            ));
        }
        match self.cutoff_mode {
            CutoffMode::Local => {}
            CutoffMode::GlobalPhotons(n) => {
                if n == 0 {
                    return Err(FockError::Validation("global photon bound must be at least 1".into()));
                }
            }
            CutoffMode::ProbabilityMass(t) => {
                if !(t > 0.0 && t < 1.0) {
                    return Err(FockError::Validation(
                        "probability-mass threshold must lie strictly between 0 and 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when no mode sees loss below unit transmissivity.
    #[must_use]
    pub fn is_lossless(&self) -> bool {
        self.loss.as_ref().map_or(true, |etas| etas.iter().all(|&e| e == 1.0))
    }

    /// True when some displacement is nonzero.
    #[must_use]
    pub fn has_displacement(&self) -> bool {
        self.displacements
            .as_ref()
            .map_or(false, |d| d.iter().any(|a| a.re != 0.0 || a.im != 0.0))
    }
}

fn unitarity_defect(u: &CMat) -> f64 {
    let m = u.n_rows();
    let gram = u.adjoint().mul(u);
    let mut defect = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let expect = if i == j { c(1.0, 0.0) } else { zero() };
            defect = defect.max((gram.get(i, j) - expect).norm());
        }
    }
    defect
}

/// Gaussian state in the complex basis: `2M × 2M` covariance plus the first
/// moments `μ = (⟨a⟩, ⟨a†⟩)`.
#[derive(Debug, Clone)]
pub struct ComplexGaussianState {
    pub modes: usize,
    pub sigma: CMat,
    pub mu: Vec<C64>,
}

impl ComplexGaussianState {
    #[must_use]
    pub fn vacuum(modes: usize) -> Self {
        ComplexGaussianState {
            modes,
            sigma: CMat::identity(2 * modes).scale(c(0.5, 0.0)),
            mu: vec![zero(); 2 * modes],
        }
    }

    /// Product of single-mode thermal states with the given occupations.
    #[must_use]
    pub fn thermal(occupations: &[f64]) -> Self {
        let m = occupations.len();
        let sigma = CMat::from_fn(2 * m, 2 * m, |i, j| {
            if i == j {
                c(occupations[i % m] + 0.5, 0.0)
            } else {
                zero()
            }
        });
        ComplexGaussianState { modes: m, sigma, mu: vec![zero(); 2 * m] }
    }

    /// Apply per-mode squeezers.
    pub fn squeeze_each(&mut self, params: &[Squeeze]) {
        let m = self.modes;
        debug_assert_eq!(params.len(), m);
        if params.iter().all(|s| s.r == 0.0) {
            return;
        }
        let s = CMat::from_fn(2 * m, 2 * m, |i, j| {
            let (bi, mi) = (i / m, i % m);
            let (bj, mj) = (j / m, j % m);
            if mi != mj {
                return zero();
            }
            let p = params[mi];
            match (bi, bj) {
                (0, 0) | (1, 1) => c(p.r.cosh(), 0.0),
                (0, 1) => c(p.phase.cos(), p.phase.sin()) * p.r.sinh(),
                (1, 0) => c(p.phase.cos(), -p.phase.sin()) * p.r.sinh(),
                _ => unreachable!(),
            }
        });
        self.transform(&s);
    }

    /// Apply an `M × M` interferometer: `a_i → Σ_j U_ij a_j`.
    pub fn interferometer(&mut self, u: &CMat) {
        let m = self.modes;
        let mut t = CMat::zeros(2 * m, 2 * m);
        t.embed(0, 0, u);
        t.embed(m, m, &u.conj());
        self.transform(&t);
    }

    /// Per-mode pure loss: covariance contracts toward the vacuum,
    /// `σ → EσE + ½(1 − E²)` with `E = diag(√η) ⊕ diag(√η)`.
    pub fn loss(&mut self, etas: &[f64]) {
        let m = self.modes;
        debug_assert_eq!(etas.len(), m);
        let e: Vec<f64> = etas.iter().map(|&eta| eta.sqrt()).collect();
        let sigma = CMat::from_fn(2 * m, 2 * m, |i, j| {
            let mut v = self.sigma.get(i, j) * (e[i % m] * e[j % m]);
            if i == j {
                v += c(0.5 * (1.0 - e[i % m] * e[i % m]), 0.0);
            }
            v
        });
        self.sigma = sigma;
        for i in 0..2 * m {
            let scale = e[i % m];
            self.mu[i] = self.mu[i] * scale;
        }
    }

    /// Displace each mode: `a_i → a_i + α_i`.
    pub fn displace(&mut self, alphas: &[C64]) {
        let m = self.modes;
        debug_assert_eq!(alphas.len(), m);
        for i in 0..m {
            self.mu[i] += alphas[i];
            self.mu[m + i] += alphas[i].conj();
        }
    }

    fn transform(&mut self, s: &CMat) {
        self.sigma = s.mul(&self.sigma).mul(&s.adjoint());
        self.mu = s.mul_vec(&self.mu);
    }

    /// Largest Hermiticity violation of the covariance.
    #[must_use]
    pub fn hermiticity_defect(&self) -> f64 {
        self.sigma.hermiticity_defect()
    }

    /// `tr ρ² = 1/√det(2σ)`.
    pub fn purity(&self) -> Result<f64> {
        let two_sigma = self.sigma.scale(c(2.0, 0.0));
        let det = two_sigma.det()?;
        let root = det.sqrt();
        Ok((c(1.0, 0.0) / root).re)
    }

    /// Mean photon number of one mode, `⟨a†a⟩`.
    #[must_use]
    pub fn mean_photons(&self, mode: usize) -> f64 {
        let m = self.modes;
        let var = self.sigma.get(m + mode, m + mode).re - 0.5;
        var + self.mu[mode].norm_sqr()
    }

    /// Covariance in the quadrature picture, `W σ W†` with the fixed unitary
    /// `W = (1/√2)·[[1, i·1], [1, −i·1]]`.
    #[must_use]
    pub fn quadrature_sigma(&self) -> CMat {
        let m = self.modes;
        let inv_rt2 = 1.0 / 2.0f64.sqrt();
        let w = CMat::from_fn(2 * m, 2 * m, |i, j| {
            let (bi, mi) = (i / m, i % m);
            let (bj, mj) = (j / m, j % m);
            if mi != mj {
                return zero();
            }
            match (bi, bj) {
                (0, 0) | (1, 0) => c(inv_rt2, 0.0),
                (0, 1) => c(0.0, inv_rt2),
                (1, 1) => c(0.0, -inv_rt2),
                _ => unreachable!(),
            }
        });
        w.mul(&self.sigma).mul(&w.adjoint())
    }
}

/// Run the channel pipeline of a circuit from vacuum.
pub fn build_complex_state(spec: &CircuitSpec) -> Result<ComplexGaussianState> {
    spec.validate()?;
    let mut state = ComplexGaussianState::vacuum(spec.modes);
    state.squeeze_each(&spec.squeeze);
    if let Some(u) = &spec.interferometer {
        state.interferometer(u);
    }
    if let Some(etas) = &spec.loss {
        state.loss(etas);
    }
    if let Some(alphas) = &spec.displacements {
        state.displace(alphas);
    }
    let defect = state.hermiticity_defect();
    if defect > SIGMA_HERMITICITY_TOL {
        return Err(FockError::Validation(format!(
            "covariance lost Hermiticity (defect {defect:.3e})"
        )));
    }
    Ok(state)
}

/// Index representation the recurrence walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// One axis per mode; amplitudes of a pure state.
    StateVector,
    /// Two interleaved axes per mode; density-matrix entries.
    DensityMatrix,
}

/// Recurrence parameters: the quadratic kernel `A`, the linear term `b`, and
/// the seed amplitude `G₀` at the origin. For density matrices `A` and `b`
/// are stored in the interleaved axis order.
#[derive(Debug, Clone)]
pub struct GaussianData {
    pub representation: Representation,
    pub modes: usize,
    pub a: CMat,
    pub b: Vec<C64>,
    pub g0: C64,
}

impl GaussianData {
    pub fn new(representation: Representation, modes: usize, a: CMat, b: Vec<C64>, g0: C64) -> Result<Self> {
        let d = match representation {
            Representation::StateVector => modes,
            Representation::DensityMatrix => 2 * modes,
        };
        if a.n_rows() != d || a.n_cols() != d {
            return Err(FockError::Validation(format!(
                "kernel is {}×{}, expected {d}×{d}",
                a.n_rows(),
                a.n_cols()
            )));
        }
        if b.len() != d {
            return Err(FockError::Validation(format!("linear term has {} entries, expected {d}", b.len())));
        }
        Ok(GaussianData { representation, modes, a, b, g0 })
    }

    /// Number of tensor axes.
    #[must_use]
    pub fn d(&self) -> usize {
        match self.representation {
            Representation::StateVector => self.modes,
            Representation::DensityMatrix => 2 * self.modes,
        }
    }

    /// True when the linear term is exactly zero (undisplaced circuits set
    /// it to literal zeros, so this is a bitwise check, not a tolerance).
    #[must_use]
    pub fn b_is_zero(&self) -> bool {
        self.b.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Reorder modes so that `order[i]` becomes mode `i`. `order` must be a
    /// permutation of `0..modes`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<GaussianData> {
        let m = self.modes;
        if order.len() != m {
            return Err(FockError::Validation("mode permutation has wrong length".into()));
        }
        let mut seen = vec![false; m];
        for &o in order {
            if o >= m || seen[o] {
                return Err(FockError::Validation("mode permutation is not a permutation".into()));
            }
            seen[o] = true;
        }
        let axis_map: Vec<usize> = match self.representation {
            Representation::StateVector => order.to_vec(),
            Representation::DensityMatrix => {
                let mut map = Vec::with_capacity(2 * m);
                for &o in order {
                    map.push(2 * o);
                    map.push(2 * o + 1);
                }
                map
            }
        };
        let a = CMat::from_fn(axis_map.len(), axis_map.len(), |r, cidx| {
            self.a.get(axis_map[r], axis_map[cidx])
        });
        let b = axis_map.iter().map(|&ax| self.b[ax]).collect();
        GaussianData::new(self.representation, m, a, b, self.g0)
    }

    /// Power-iteration estimate of the spectral radius of `A`. Physical
    /// states keep it strictly below one; callers may surface a warning when
    /// the estimate crosses that line, but the recurrence itself stays
    /// well-defined.
    #[must_use]
    pub fn spectral_radius_estimate(&self) -> f64 {
        let d = self.d();
        let mut z: Vec<C64> = (0..d).map(|i| c(1.0 / (i + 1) as f64, 0.1 / (i + 2) as f64)).collect();
        let mut est = 0.0f64;
        for _ in 0..100 {
            let next = self.a.mul_vec(&z);
            let norm: f64 = next.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-300 {
                return 0.0;
            }
            est = norm / z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            z = next.iter().map(|v| *v / norm).collect();
        }
        est
    }
}

/// Interleaved axis → blocked position: axis `2i` is the leading index of
/// mode `i` (blocked position `i`), axis `2i+1` the trailing one (blocked
/// position `M + i`).
fn blocked_position(axis: usize, modes: usize) -> usize {
    if axis % 2 == 0 {
        axis / 2
    } else {
        modes + axis / 2
    }
}

fn block_swap_rows(x: &CMat, m: usize) -> CMat {
    CMat::from_fn(2 * m, 2 * m, |r, cc| {
        let src = if r < m { r + m } else { r - m };
        x.get(src, cc)
    })
}

struct BlockedParams {
    a: CMat,
    b: Vec<C64>,
    g0: C64,
}

fn blocked_density_params(state: &ComplexGaussianState) -> Result<BlockedParams> {
    let m = state.modes;
    let defect = state.hermiticity_defect();
    if defect > SIGMA_HERMITICITY_TOL {
        return Err(FockError::Validation(format!(
            "covariance is not Hermitian (defect {defect:.3e})"
        )));
    }
    let half = CMat::identity(2 * m).scale(c(0.5, 0.0));
    let sigma_p = state.sigma.add(&half);
    let sigma_m = state.sigma.sub(&half);
    let sigma_p_inv = sigma_p.inverse().map_err(|_| {
        FockError::Singular("degenerate covariance: σ + ½·1 is not invertible".into())
    })?;
    let a = block_swap_rows(&sigma_m.mul(&sigma_p_inv), m);

    let mu_is_zero = state.mu.iter().all(|v| v.re == 0.0 && v.im == 0.0);
    let (b, g0) = if mu_is_zero {
        // Undisplaced circuits short-circuit to an exactly-zero linear term
        // so walkers can take the parity-reduced path bit-reproducibly.
        let det = sigma_p.det()?;
        (vec![zero(); 2 * m], c(1.0, 0.0) / det.sqrt())
    } else {
        let b_raw = sigma_p_inv.mul_vec(&state.mu);
        let mut b = vec![zero(); 2 * m];
        for r in 0..2 * m {
            b[r] = b_raw[if r < m { r + m } else { r - m }];
        }
        // Vacuum overlap: the quadratic form pairs μ with itself, μ† (σ+½)⁻¹ μ.
        // The sandwich is real because σ+½ is Hermitian.
        let mut quad = zero();
        for i in 0..2 * m {
            quad += state.mu[i].conj() * b_raw[i];
        }
        let det = sigma_p.det()?;
        let g0 = (quad * c(-0.5, 0.0)).exp() / det.sqrt();
        (b, g0)
    };
    Ok(BlockedParams { a, b, g0 })
}

/// Density-matrix recurrence parameters of a Gaussian state, axes
/// interleaved per mode.
pub fn to_density_params(state: &ComplexGaussianState) -> Result<GaussianData> {
    let m = state.modes;
    let blocked = blocked_density_params(state)?;
    let a = CMat::from_fn(2 * m, 2 * m, |r, cc| {
        blocked.a.get(blocked_position(r, m), blocked_position(cc, m))
    });
    let b = (0..2 * m).map(|r| blocked.b[blocked_position(r, m)]).collect();
    GaussianData::new(Representation::DensityMatrix, m, a, b, blocked.g0)
}

/// State-vector recurrence parameters of a *pure* Gaussian state. Rejects
/// mixed states (purity must sit within [`PURITY_TOL`] of one) and checks
/// that the blocked density kernel really factors as `conj(A_ψ) ⊕ A_ψ`.
pub fn to_statevector_params(state: &ComplexGaussianState) -> Result<GaussianData> {
    let m = state.modes;
    let purity = state.purity()?;
    if (purity - 1.0).abs() > PURITY_TOL {
        return Err(FockError::Validation(format!(
            "state is mixed (purity {purity:.12}); a state-vector run needs a pure state — \
             drop the loss channel or use the density-matrix path"
        )));
    }
    let blocked = blocked_density_params(state)?;
    let a_psi = blocked.a.block(m, m, m, m);
    let mut defect = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            defect = defect.max((blocked.a.get(i, j) - a_psi.get(i, j).conj()).norm());
            defect = defect.max(blocked.a.get(i, m + j).norm());
            defect = defect.max(blocked.a.get(m + i, j).norm());
            defect = defect.max((blocked.b[i] - blocked.b[m + i].conj()).norm());
        }
    }
    if defect > PURITY_TOL {
        return Err(FockError::Validation(format!(
            "density kernel of a pure state failed to factor (defect {defect:.3e})"
        )));
    }
    let b_psi: Vec<C64> = blocked.b[m..].to_vec();
    if blocked.g0.re <= 0.0 || blocked.g0.im.abs() > PURITY_TOL {
        return Err(FockError::Validation(format!(
            "seed amplitude of a pure state must be real positive, got {:?}",
            blocked.g0
        )));
    }
    let psi0 = c(blocked.g0.re.sqrt(), 0.0);
    GaussianData::new(Representation::StateVector, m, a_psi, b_psi, psi0)
}

/// Convenience: density parameters straight from a circuit description.
pub fn circuit_density_params(spec: &CircuitSpec) -> Result<GaussianData> {
    to_density_params(&build_complex_state(spec)?)
}

/// Convenience: state-vector parameters straight from a circuit description.
pub fn circuit_statevector_params(spec: &CircuitSpec) -> Result<GaussianData> {
    to_statevector_params(&build_complex_state(spec)?)
}
