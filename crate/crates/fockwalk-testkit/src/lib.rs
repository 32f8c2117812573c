//! Test support for the fockwalk workspace: seeded random circuits and
//! kernels, closed-form oracles for states with known Fock expansions,
//! finite-difference probes, and a least-squares slope fit for scaling
//! checks. Everything is deterministic given the seed.

use fockwalk::gaussian::{CircuitSpec, CutoffMode, GaussianData, Representation, Squeeze};
use fockwalk::mat::CMat;
use fockwalk::C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviate (Box–Muller on two uniforms).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Complex deviate with independent standard-normal parts.
pub fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

/// Haar-ish random unitary: complex Ginibre matrix orthonormalized by
/// modified Gram–Schmidt with one re-orthogonalization pass.
pub fn random_unitary(m: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut cols: Vec<Vec<C64>> = (0..m).map(|_| (0..m).map(|_| cnormal(rng)).collect()).collect();
    for j in 0..m {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: C64 =
                    cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let prev = cols[i].clone();
                for (x, p) in cols[j].iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    CMat::from_fn(m, m, |r, c| cols[c][r])
}

/// One seeded random circuit for cross-engine validation. Mode count cycles
/// through 1..=3, cutoffs sit in 2..=4, loss picks from {0.5, 0.8, 1.0}, and
/// odd cases carry displacements.
pub fn acceptance_circuit(case: usize) -> CircuitSpec {
    let mut rng = rng(0x5eed_0000 + case as u64);
    let modes = case % 3 + 1;
    let squeeze = (0..modes)
        .map(|_| Squeeze { r: 0.2 + 0.5 * rng.gen::<f64>(), phase: core::f64::consts::TAU * rng.gen::<f64>() })
        .collect();
    let etas = [0.5, 0.8, 1.0];
    let loss = (0..modes).map(|_| etas[rng.gen_range(0..3)]).collect();
    let displacements = (case % 2 == 1).then(|| {
        (0..modes).map(|_| C64::new(0.4 * normal(&mut rng), 0.4 * normal(&mut rng))).collect()
    });
    let cutoffs = (0..modes).map(|_| rng.gen_range(2..=4)).collect();
    CircuitSpec {
        modes,
        squeeze,
        interferometer: (modes > 1).then(|| random_unitary(modes, &mut rng)),
        loss: Some(loss),
        displacements,
        cutoffs,
        detected_modes: (0..modes).collect(),
        cutoff_mode: CutoffMode::Local,
    }
}

/// Random density-matrix kernel pair for derivative probes: symmetric `A`
/// rescaled well inside the unit spectral radius, dense `b`, unit seed. Not
/// a physical state — exactly what a finite-difference check wants, since
/// every entry can be perturbed independently.
pub fn random_kernel_pair(modes: usize, rng: &mut ChaCha8Rng) -> GaussianData {
    let d = 2 * modes;
    let raw = CMat::from_fn(d, d, |_, _| 0.5 * cnormal(rng));
    let sym = raw.add(&raw.transpose()).scale(C64::new(0.5, 0.0));
    // Crude spectral bound: scale by the max row sum.
    let row_sum = (0..d)
        .map(|r| (0..d).map(|c| sym.get(r, c).norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let a = sym.scale(C64::new(0.6 / row_sum.max(1.0), 0.0));
    let b = (0..d).map(|_| 0.3 * cnormal(rng)).collect();
    GaussianData::new(Representation::DensityMatrix, modes, a, b, C64::new(0.8, 0.0)).unwrap()
}

/// Copy of `params` with `A[r][c]` shifted by a real `delta`.
pub fn perturb_a(params: &GaussianData, r: usize, c: usize, delta: f64) -> GaussianData {
    let mut out = params.clone();
    out.a.set(r, c, out.a.get(r, c) + C64::new(delta, 0.0));
    out
}

/// Copy of `params` with `b[l]` shifted by a real `delta`.
pub fn perturb_b(params: &GaussianData, l: usize, delta: f64) -> GaussianData {
    let mut out = params.clone();
    out.b[l] += C64::new(delta, 0.0);
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// P(n) of a thermal mode with mean occupation `nbar`.
pub fn thermal_prob(nbar: f64, n: usize) -> f64 {
    nbar.powi(n as i32) / (nbar + 1.0).powi(n as i32 + 1)
}

/// Fock amplitude ⟨2n|ψ⟩ of a squeezed vacuum (odd amplitudes vanish).
pub fn squeezed_even_amp(r: f64, phase: f64, n: usize) -> C64 {
    let t = r.tanh();
    let half = C64::new(0.0, phase).exp() * t * (-0.5);
    let mut ratio = C64::new(1.0, 0.0); // (−e^{iφ} tanh r / 2)^n · √((2n)!) / n!
    for k in 1..=n {
        ratio = ratio * half * ((2 * k) as f64 * (2 * k - 1) as f64).sqrt() / k as f64;
    }
    ratio / r.cosh().sqrt()
}

/// P(n) of a coherent state (Poisson with mean |α|²).
pub fn coherent_prob(alpha: C64, n: usize) -> f64 {
    let mu = alpha.norm_sqr();
    let mut p = (-mu).exp();
    for k in 1..=n {
        p *= mu / k as f64;
    }
    p
}

/// Fock amplitude ⟨n,n|ψ⟩ of a two-mode squeezed vacuum.
pub fn tmsv_pair_amp(r: f64, phase: f64, n: usize) -> C64 {
    let factor = C64::new(0.0, phase).exp() * r.tanh();
    let mut amp = C64::new(1.0 / r.cosh(), 0.0);
    for _ in 0..n {
        amp *= factor;
    }
    amp
}
