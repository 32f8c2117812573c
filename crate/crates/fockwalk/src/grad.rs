//! Gradient bundles: amplitudes carried together with their parameter
//! derivatives.
//!
//! A bundle holds `1 + D + D²` complex lanes per lattice cell — the
//! amplitude, `∂G/∂b_t` for each of the `D` linear-term entries, and
//! `∂G/∂A_{ts}` for each kernel entry, row-major. The derivatives satisfy
//! the same recurrence as the amplitudes except for two source injections at
//! the write direction `i`: the `b_i` derivative picks up the pivot value,
//! and the `A_{is}` derivative picks up `√k_s` times the read value on axis
//! `s`. The seed bundle is `(G₀, 0, …, 0)`: the seed amplitude is treated as
//! a constant of the walk, not a parameter.
//!
//! Walkers treat a bundle as an opaque lane vector, so one kernel serves
//! plain runs (width 1) and gradient runs (width `1 + D + D²`); the width is
//! also exactly the bookkeeping ratio by which a gradient run's stored
//! complex numbers exceed a plain run's.

use alloc::vec::Vec;

use crate::lattice::DenseTensor;
use crate::mat::CMat;
use crate::C64;

/// Lanes per cell for parameter dimension `d`.
#[must_use]
pub fn bundle_width(d: usize) -> usize {
    1 + d + d * d
}

/// Dense array of gradient bundles over a lattice box.
#[derive(Debug, Clone)]
pub struct GradTensor {
    pub cell_shape: Vec<usize>,
    /// Parameter dimension `D` (axes of the walked lattice).
    pub d: usize,
    /// `cells × (1 + d + d²)` lanes, cells row-major over `cell_shape`.
    pub data: Vec<C64>,
}

impl GradTensor {
    #[must_use]
    pub fn width(&self) -> usize {
        bundle_width(self.d)
    }

    #[must_use]
    pub fn cells(&self) -> usize {
        self.cell_shape.iter().product()
    }

    /// Amplitude lane of one cell.
    #[must_use]
    pub fn value(&self, cell: usize) -> C64 {
        self.data[cell * self.width()]
    }

    /// `∂G/∂b` lanes of one cell (`d` entries).
    #[must_use]
    pub fn db(&self, cell: usize) -> &[C64] {
        let w = self.width();
        &self.data[cell * w + 1..cell * w + 1 + self.d]
    }

    /// `∂G/∂A` lanes of one cell (`d²` entries, row-major `(t, s)`).
    #[must_use]
    pub fn da(&self, cell: usize) -> &[C64] {
        let w = self.width();
        &self.data[cell * w + 1 + self.d..(cell + 1) * w]
    }

    /// Just the amplitudes, as a plain tensor.
    #[must_use]
    pub fn value_tensor(&self) -> DenseTensor {
        let mut t = DenseTensor::zeros(&self.cell_shape);
        for i in 0..self.cells() {
            t.data[i] = self.value(i);
        }
        t
    }
}

/// Pull an upstream cotangent back onto the parameters.
///
/// `upstream[k] = ∂L/∂conj(G_k)` for every retained cell; the result is
/// `(∂L/∂conj(b), ∂L/∂conj(A))`, each entry `Σ_k upstream[k] ·
/// conj(bundle_k)`. The contraction is linear in `upstream` to rounding.
#[must_use]
pub fn contract_upstream(upstream: &[C64], bundles: &GradTensor) -> (Vec<C64>, CMat) {
    assert_eq!(upstream.len(), bundles.cells(), "upstream must cover every retained cell");
    let d = bundles.d;
    let mut db = alloc::vec![C64::new(0.0, 0.0); d];
    let mut da = alloc::vec![C64::new(0.0, 0.0); d * d];
    for (k, &up) in upstream.iter().enumerate() {
        if up.re == 0.0 && up.im == 0.0 {
            continue;
        }
        let cell_db = bundles.db(k);
        for t in 0..d {
            db[t] += up * cell_db[t].conj();
        }
        let cell_da = bundles.da(k);
        for ts in 0..d * d {
            da[ts] += up * cell_da[ts].conj();
        }
    }
    let da_mat = CMat::from_fn(d, d, |t, s| da[t * d + s]);
    (db, da_mat)
}
