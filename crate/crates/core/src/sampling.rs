//! Seeded random sampling: Haar-random unitaries, diagonal random-phase
//! unitaries, the fluctuating-phase dephasing ensemble, and the dephasing
//! strength fit.
//!
//! All randomness flows through [`SeededStream`]: a `(seed, stream_id)` pair
//! that deterministically selects an independent ChaCha substream, so every
//! draw is reproducible across runs and thread schedules and per-unitary
//! substreams can be assigned by counter.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::qudit::{DensityMatrix, Unitary};
use crate::randmeas::{correlator_exact, estimate_moments_calibrated, Observable};

/// Deterministic RNG handle: a 64-bit seed plus a 64-bit per-consumer counter.
///
/// Identical `(seed, stream_id)` pairs yield identical draws regardless of
/// evaluation order, which is what makes parallel per-setting sampling
/// reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SeededStream { seed, stream_id }
    }

    /// The stream with the same seed and a shifted counter; used to hand
    /// independent substreams to batches of consumers.
    pub fn offset(&self, delta: u64) -> Self {
        SeededStream {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(delta),
        }
    }

    /// Instantiate the RNG for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub(crate) fn standard_complex(rng: &mut impl RngCore) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw a Haar-distributed `d × d` unitary.
///
/// QR decomposition of a complex Ginibre matrix, with each column of Q
/// rephased by the conjugate phase of the corresponding R diagonal entry —
/// the standard exact-Haar construction.
pub fn sample_haar(d: usize, stream: &SeededStream) -> Result<Unitary> {
    haar_from_rng(d, &mut stream.rng())
}

/// Haar draw that consumes an existing RNG; lets callers interleave unitary
/// draws with other randomness on one stream.
pub fn haar_from_rng(d: usize, rng: &mut impl RngCore) -> Result<Unitary> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let ginibre = ComplexMatrix::from_fn(d, d, |_, _| standard_complex(rng));
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            (rjj / rjj.norm()).conj()
        } else {
            Complex64::ONE
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Unitary::new(q)
}

/// A vector of `d` phases in radians, one per computational mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("phases must be finite".into()));
        }
        Ok(PhaseVector(phases))
    }

    /// The diagonal unitary `Σ_i e^{iφ_i} |i⟩⟨i|`.
    pub fn unitary(&self) -> Unitary {
        let d = self.0.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (i, &phi) in self.0.iter().enumerate() {
            m[(i, i)] = Complex64::from_polar(1.0, phi);
        }
        Unitary::new(m).expect("diagonal phase matrix is unitary by construction")
    }
}

/// Draw a diagonal unitary with phases uniform on `[lo, hi]`.
///
/// A degenerate range `lo == hi` is allowed (e.g. `[0, 0]` gives the
/// identity); `hi < lo` is a domain error.
pub fn random_phase_unitary(d: usize, stream: &SeededStream, range: (f64, f64)) -> Result<Unitary> {
    Ok(random_phase_vector(d, &mut stream.rng(), range)?.unitary())
}

fn random_phase_vector(
    d: usize,
    rng: &mut impl RngCore,
    (lo, hi): (f64, f64),
) -> Result<PhaseVector> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(lo <= hi) {
        return Err(Error::Domain(format!("empty phase range [{lo}, {hi}]")));
    }
    // Scale a [0,1) draw rather than using a distribution object: the draw
    // count is then independent of the range, so streams stay aligned across
    // different ranges (the dephasing fit relies on this).
    let phases = (0..d).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
    PhaseVector::new(phases)
}

/// Equal mixture of `n` phase-perturbed maximally entangled vectors.
///
/// Each ensemble member applies independent uniform phases in
/// `[−φmax, φmax]` to every ket of each party:
/// `|ψ⟩ = (1/√d) Σ_i e^{i(θ^A_i + θ^B_i)} |ii⟩`.
///
/// The member phases consume draws from `stream` in a fixed order that does
/// not depend on `φmax`, so ensembles at different `φmax` built from the same
/// stream share their underlying uniform draws (they deform continuously as
/// `φmax` varies).
pub fn dephased_state(d: usize, phimax: f64, n: usize, stream: &SeededStream) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::Domain("ensemble size must be at least 1".into()));
    }
    if !(phimax >= 0.0) {
        return Err(Error::Domain(format!("φmax must be nonnegative, got {phimax}")));
    }
    let mut rng = stream.rng();
    // Accumulate the d×d block B_ij = mean_k e^{i(φ_i − φ_j)} with
    // φ_i = θ^A_i + θ^B_i; the full matrix lives on the |ii⟩⟨jj| entries.
    let mut block = ComplexMatrix::zeros(d, d);
    let mut phases = vec![0.0_f64; d];
    for _ in 0..n {
        for phi in phases.iter_mut() {
            let ua: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let ub: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            *phi = phimax * (ua + ub);
        }
        for i in 0..d {
            for j in 0..d {
                block[(i, j)] += Complex64::from_polar(1.0, phases[i] - phases[j]);
            }
        }
    }
    block /= Complex64::new((n * d) as f64, 0.0);
    let dd = d * d;
    let mut mat = ComplexMatrix::zeros(dd, dd);
    for i in 0..d {
        for j in 0..d {
            mat[(i * d + i, j * d + j)] = block[(i, j)];
        }
    }
    // Exact Hermitization: e^{iφ} + e^{-iφ} accumulation already pairs up,
    // but floating-point summation order leaves ~1e-16 asymmetry.
    let mat = (&mat + mat.adjoint()).scale(0.5);
    DensityMatrix::new(d, d, mat)
}

/// Result of [`fit_phimax`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhimaxFit {
    pub phimax: f64,
    /// Euclidean distance √(ΔS̄2² + ΔS̄4²) at the best grid point.
    pub distance: f64,
    /// Distance at every grid point, aligned with the input grid.
    pub grid_distances: Vec<f64>,
}

/// Fit the dephasing strength: scan `grid` for the `φmax` whose dephased
/// ensemble, measured with exactly the given unitary list, lands closest to
/// `target` in the (S̄2, S̄4) plane.
///
/// `ensemble_stream` seeds the ensemble phase draws; because the draws are
/// shared across grid values (see [`dephased_state`]), refitting moments that
/// were generated from the same stream recovers the generating `φmax` with
/// distance exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn fit_phimax(
    target: (f64, f64),
    unitaries: &[(Unitary, Unitary)],
    grid: &[f64],
    d: usize,
    observable: &Observable,
    n_ensemble: usize,
    ensemble_stream: &SeededStream,
    kappa4: f64,
) -> Result<PhimaxFit> {
    if grid.is_empty() {
        return Err(Error::EmptyData("φmax grid"));
    }
    if unitaries.is_empty() {
        return Err(Error::EmptyData("unitary list"));
    }
    let mut best: Option<(f64, f64)> = None;
    let mut grid_distances = Vec::with_capacity(grid.len());
    for &phimax in grid {
        let rho = dephased_state(d, phimax, n_ensemble, ensemble_stream)?;
        let xs: Result<Vec<f64>> = unitaries
            .iter()
            .map(|(ua, ub)| correlator_exact(&rho, ua, ub, observable))
            .collect();
        let est = estimate_moments_calibrated(&xs?, d, kappa4)?;
        let distance = ((est.s2 - target.0).powi(2) + (est.s4 - target.1).powi(2)).sqrt();
        grid_distances.push(distance);
        match best {
            Some((_, b)) if b <= distance => {}
            _ => best = Some((phimax, distance)),
        }
    }
    let (phimax, distance) = best.expect("grid is nonempty");
    Ok(PhimaxFit {
        phimax,
        distance,
        grid_distances,
    })
}
