//! Randomized-measurement correlators and moment estimation.
//!
//! One measurement setting applies local unitaries `U_a ⊗ U_b` to the state
//! and detects both parties in the computational basis with a fixed outcome
//! observable `M = diag(λ)`. The single-setting correlator is
//! `x = ⟨(U_a ⊗ U_b)† (M ⊗ M) (U_a ⊗ U_b)⟩`. Averaging powers of `x` over
//! Haar-random settings gives the moments `R̄_t = mean(x^t)`, from which the
//! second and fourth singular-value moments of the cross-correlation matrix
//! are estimated as
//!
//! ```text
//! S̄2 = (d+1)² R̄2
//! S̄4 = (d+1)² (d²+1)² / (9 (d−1)²) · R̄4
//! ```
//!
//! with standard errors from the sample variance of `x²` and `x⁴`. The
//! second-moment constant is exact for any observable normalized to
//! `Σλ = 0`, `Σλ² = d−1`; the fourth-moment constant is exact for d = 2 and
//! d = 3 but acquires a small observable- and state-dependent factor at
//! d ≥ 4, which [`calibrate_observable`] measures and
//! [`estimate_moments_calibrated`] divides out.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::correlation::{cross_correlation, direct_moments, MomentPair};
use crate::error::{Error, Result};
use crate::qudit::{gellmann_basis, DensityMatrix, Unitary};
use crate::sampling::{sample_haar, SeededStream};

/// Tolerance on the observable normalization sums.
pub const TOL_OBSERVABLE: f64 = 1e-10;
/// Tolerance on outcome probabilities summing to one.
pub const TOL_PROB_SUM: f64 = 1e-9;

/// Measurement observable: real eigenvalues assigned to the `d` computational
/// outcomes, normalized so that `Σλ = 0` and `Σλ² = d − 1`.
///
/// The normalization makes the second-moment estimator constant exact; see
/// the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    d: usize,
    lambda: Vec<f64>,
}

impl Observable {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        let d = lambda.len();
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let sum: f64 = lambda.iter().sum();
        if sum.abs() > TOL_OBSERVABLE {
            return Err(Error::InvalidObservable(format!(
                "eigenvalues must sum to zero, got {sum:.3e}"
            )));
        }
        let sq: f64 = lambda.iter().map(|l| l * l).sum();
        if (sq - (d as f64 - 1.0)).abs() > TOL_OBSERVABLE {
            return Err(Error::InvalidObservable(format!(
                "squared eigenvalues must sum to d−1 = {}, got {sq:.12}",
                d - 1
            )));
        }
        Ok(Self { d, lambda })
    }

    /// Default observable: eigenvalues linear in the outcome index,
    /// `λ_m = c (m − (d−1)/2)`, with `c` fixed by the normalization.
    /// At d = 2 this is `∓1/√2`.
    pub fn default_linear(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let centered: Vec<f64> = (0..d).map(|m| m as f64 - (d as f64 - 1.0) / 2.0).collect();
        let norm: f64 = centered.iter().map(|v| v * v).sum();
        let c = ((d as f64 - 1.0) / norm).sqrt();
        Self::new(centered.into_iter().map(|v| c * v).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// Largest |λ|²; every correlator satisfies |x| ≤ this.
    pub fn max_abs_sq(&self) -> f64 {
        self.lambda.iter().fold(0.0, |m, l| m.max(l * l))
    }
}

/// Measured data for one setting: the applied local unitaries plus either a
/// d×d coincidence-count matrix or an exact correlator value.
#[derive(Debug, Clone)]
pub struct SettingRecord {
    pub ua: Unitary,
    pub ub: Unitary,
    pub data: SettingData,
}

/// Counts are stored row-major: cell `(m, n)` at index `m·d + n`.
#[derive(Debug, Clone)]
pub enum SettingData {
    Counts(Vec<u64>),
    Exact(f64),
}

impl SettingRecord {
    pub fn total_counts(&self) -> Option<u64> {
        match &self.data {
            SettingData::Counts(c) => Some(c.iter().sum()),
            SettingData::Exact(_) => None,
        }
    }
}

/// Exact single-setting correlator
/// `Tr[ρ (U_a† M U_a) ⊗ (U_b† M U_b)]`.
///
/// Equivalently: apply `U_a ⊗ U_b` to the state, read out both parties in
/// the computational basis, and average `λ_m λ_n` over the outcome
/// distribution.
pub fn correlator_exact(
    rho: &DensityMatrix,
    ua: &Unitary,
    ub: &Unitary,
    obs: &Observable,
) -> Result<f64> {
    let d = obs.d();
    if rho.dim_a() != d || rho.dim_b() != d || ua.d() != d || ub.d() != d {
        return Err(Error::Shape(format!(
            "correlator needs matching dimensions: state {}x{}, unitaries {}/{}, observable {}",
            rho.dim_a(),
            rho.dim_b(),
            ua.d(),
            ub.d(),
            d
        )));
    }
    let ma = rotated_observable(ua, obs);
    let mb = rotated_observable(ub, obs);
    let m = rho.matrix();
    // Tr[(M_A ⊗ M_B) ρ] = Σ M_A[i,m] M_B[j,n] ρ[(m,n),(i,j)]
    let mut acc = Complex64::ZERO;
    for i in 0..d {
        for mm in 0..d {
            let a = ma[(i, mm)];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d {
                for nn in 0..d {
                    acc += a * mb[(j, nn)] * m[(mm * d + nn, i * d + j)];
                }
            }
        }
    }
    Ok(acc.re)
}

/// `U† diag(λ) U` — the observable conjugated into the rotated frame.
fn rotated_observable(u: &Unitary, obs: &Observable) -> DMatrix<Complex64> {
    let d = obs.d();
    // diag(λ)·U scales row m by λ_m; then U†·(that).
    let mut scaled = u.matrix().clone();
    for m in 0..d {
        let lm = Complex64::new(obs.eigenvalues()[m], 0.0);
        for c in 0..d {
            scaled[(m, c)] *= lm;
        }
    }
    u.matrix().adjoint() * scaled
}

/// Computational-basis outcome probabilities after applying `U_a ⊗ U_b`:
/// `p(m,n) = ⟨mn| (U_a ⊗ U_b) ρ (U_a ⊗ U_b)† |mn⟩`, row-major.
pub fn outcome_probabilities(
    rho: &DensityMatrix,
    ua: &Unitary,
    ub: &Unitary,
) -> Result<Vec<f64>> {
    let d = ua.d();
    if rho.dim_a() != d || rho.dim_b() != d || ub.d() != d {
        return Err(Error::Shape(format!(
            "probability evaluation needs matching dimensions, got state {}x{}, unitaries {}/{}",
            rho.dim_a(),
            rho.dim_b(),
            ua.d(),
            ub.d()
        )));
    }
    let a = ua.matrix();
    let b = ub.matrix();
    let m = rho.matrix();
    let mut probs = vec![0.0; d * d];
    // p(m,n) = Σ_{ij,kl} A[m,i] B[n,j] ρ[(i,j),(k,l)] conj(A[m,k] B[n,l])
    //        = v† ρ v with v = (A[m,:] ⊗ B[n,:])†; computed as w ρ w†.
    for om in 0..d {
        for on in 0..d {
            let mut acc = Complex64::ZERO;
            for i in 0..d {
                for j in 0..d {
                    let left = a[(om, i)] * b[(on, j)];
                    if left.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut inner = Complex64::ZERO;
                    for k in 0..d {
                        for l in 0..d {
                            inner += m[(i * d + j, k * d + l)] * (a[(om, k)] * b[(on, l)]).conj();
                        }
                    }
                    acc += left * inner;
                }
            }
            probs[om * d + on] = acc.re;
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > TOL_PROB_SUM {
        return Err(Error::Numeric(format!(
            "outcome probabilities sum to {total:.12}, expected 1"
        )));
    }
    Ok(probs)
}

/// Simulate finite coincidence counting for one setting: draws `n_events`
/// outcomes multinomially from the setting's outcome distribution.
pub fn simulate_counts(
    rho: &DensityMatrix,
    ua: &Unitary,
    ub: &Unitary,
    n_events: u64,
    stream: &SeededStream,
) -> Result<SettingRecord> {
    if n_events == 0 {
        return Err(Error::Domain("n_events must be at least 1".into()));
    }
    let probs = outcome_probabilities(rho, ua, ub)?;
    let counts = multinomial_draw(&probs, n_events, stream);
    Ok(SettingRecord {
        ua: ua.clone(),
        ub: ub.clone(),
        data: SettingData::Counts(counts),
    })
}

/// Multinomial sample via chained conditional binomials.
pub(crate) fn multinomial_draw(probs: &[f64], n_events: u64, stream: &SeededStream) -> Vec<u64> {
    let mut rng = stream.rng();
    let cells = probs.len();
    let mut counts = vec![0u64; cells];
    let mut remaining = n_events;
    let mut mass_left = 1.0_f64;
    for cell in 0..cells - 1 {
        if remaining == 0 {
            break;
        }
        let p = (probs[cell] / mass_left).clamp(0.0, 1.0);
        let draw = if p >= 1.0 {
            remaining
        } else {
            // Binomial::new only fails for p outside [0,1], excluded above.
            Binomial::new(remaining, p).expect("clamped probability").sample(&mut rng)
        };
        counts[cell] = draw;
        remaining -= draw;
        mass_left = (mass_left - probs[cell]).max(0.0);
    }
    counts[cells - 1] += remaining;
    counts
}

/// Empirical correlator `x̂ = Σ λ_m λ_n C_{m,n} / Σ C_{m,n}` from counts;
/// an exact record returns its stored value unchanged.
pub fn x_from_counts(record: &SettingRecord, obs: &Observable) -> Result<f64> {
    match &record.data {
        SettingData::Exact(x) => Ok(*x),
        SettingData::Counts(counts) => {
            let d = obs.d();
            if counts.len() != d * d {
                return Err(Error::Shape(format!(
                    "counts have {} cells, expected {}",
                    counts.len(),
                    d * d
                )));
            }
            let total: u64 = counts.iter().sum();
            if total == 0 {
                return Err(Error::EmptyData("counts total is zero"));
            }
            let lam = obs.eigenvalues();
            let mut acc = 0.0;
            for m in 0..d {
                for n in 0..d {
                    acc += lam[m] * lam[n] * counts[m * d + n] as f64;
                }
            }
            Ok(acc / total as f64)
        }
    }
}

/// Mean of `x^t` over the sample; `t` must be 2, 4, or 8.
pub fn moment_t(xs: &[f64], t: u32) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyData("correlator sample"));
    }
    if !matches!(t, 2 | 4 | 8) {
        return Err(Error::Domain(format!("moment order must be 2, 4, or 8, got {t}")));
    }
    Ok(xs.iter().map(|x| x.powi(t as i32)).sum::<f64>() / xs.len() as f64)
}

/// Moment estimates with standard errors from one randomized-measurement
/// sample.
///
/// `sigma_s2`/`sigma_s4` are standard deviations (square for the variances);
/// `kappa4` records the fourth-moment calibration factor that was divided
/// out (1 when uncalibrated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub s2: f64,
    pub s4: f64,
    pub sigma_s2: f64,
    pub sigma_s4: f64,
    pub n_tot: usize,
    pub kappa4: f64,
}

impl MomentEstimate {
    /// Assemble the estimate from pre-computed correlator moments
    /// `R̄2, R̄4, R̄8` over `n_tot` settings.
    pub fn from_r_moments(
        r2: f64,
        r4: f64,
        r8: f64,
        n_tot: usize,
        d: usize,
        kappa4: f64,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if n_tot == 0 {
            return Err(Error::EmptyData("correlator sample"));
        }
        if kappa4 <= 0.0 {
            return Err(Error::Domain(format!(
                "fourth-moment calibration must be positive, got {kappa4}"
            )));
        }
        let df = d as f64;
        let c2 = (df + 1.0).powi(2);
        let c4 = (df + 1.0).powi(2) * (df * df + 1.0).powi(2) / (9.0 * (df - 1.0).powi(2));
        let n = n_tot as f64;
        let var_s2 = c2 * c2 / n * (r4 - r2 * r2);
        let var_s4 = c4 * c4 / n * (r8 - r4 * r4);
        Ok(Self {
            s2: c2 * r2,
            s4: c4 * r4 / kappa4,
            sigma_s2: var_s2.max(0.0).sqrt(),
            sigma_s4: var_s4.max(0.0).sqrt() / kappa4,
            n_tot,
            kappa4,
        })
    }

    pub fn moments(&self) -> MomentPair {
        MomentPair {
            s2: self.s2,
            s4: self.s4,
        }
    }
}

/// Uncalibrated estimate (κ4 = 1) from raw correlator samples.
pub fn estimate_moments(xs: &[f64], d: usize) -> Result<MomentEstimate> {
    estimate_moments_calibrated(xs, d, 1.0)
}

/// Estimate with a fourth-moment calibration factor divided out of `S̄4`
/// and its standard error; see [`calibrate_observable`].
pub fn estimate_moments_calibrated(xs: &[f64], d: usize, kappa4: f64) -> Result<MomentEstimate> {
    let r2 = moment_t(xs, 2)?;
    let r4 = moment_t(xs, 4)?;
    let r8 = moment_t(xs, 8)?;
    MomentEstimate::from_r_moments(r2, r4, r8, xs.len(), d, kappa4)
}

/// Exact correlators of a state over `n` Haar-random settings.
///
/// Setting `i` draws its two unitaries from `stream.offset(2i)` and
/// `stream.offset(2i+1)`, so the ensemble is reproducible and independent of
/// evaluation order.
pub fn sweep_exact(
    rho: &DensityMatrix,
    obs: &Observable,
    n: usize,
    stream: &SeededStream,
) -> Result<Vec<f64>> {
    let d = obs.d();
    (0..n)
        .map(|i| {
            let ua = sample_haar(d, &stream.offset(2 * i as u64))?;
            let ub = sample_haar(d, &stream.offset(2 * i as u64 + 1))?;
            correlator_exact(rho, &ua, &ub, obs)
        })
        .collect()
}

/// Measured ratio between the moment estimators and the direct moments,
/// averaged over random reference states: `(κ2, κ4)`.
///
/// Each of the 20 reference states is an independent Haar-random pure state
/// of the full bipartite space; for each, the moment estimators run on
/// `n_samples` exact-correlator Haar settings and are divided by the state's
/// `direct_moments`. κ2 = 1 holds for any valid observable (the
/// normalization forces the second-moment constant); κ4 departs from 1 at
/// d ≥ 4 and the returned average is the divisor to store in configuration.
pub fn calibrate_observable(
    obs: &Observable,
    d: usize,
    n_samples: usize,
    stream: &SeededStream,
) -> Result<(f64, f64)> {
    if obs.d() != d {
        return Err(Error::InvalidObservable(format!(
            "observable has dimension {}, calibration requested at {d}",
            obs.d()
        )));
    }
    if n_samples == 0 {
        return Err(Error::EmptyData("calibration settings"));
    }
    const N_REF: usize = 20;
    let basis = gellmann_basis(d)?;
    let mut k2_sum = 0.0;
    let mut k4_sum = 0.0;
    for s in 0..N_REF {
        // Stream layout: state s uses offset 1e6·(s+1) for its state draw and
        // the following ids for its settings, keeping all draws disjoint.
        let base = stream.offset(1_000_000 * (s as u64 + 1));
        let rho = random_pure_bipartite(d, &base)?;
        let xs = sweep_exact(&rho, obs, n_samples, &base.offset(1))?;
        let est = estimate_moments(&xs, d)?;
        let truth = direct_moments(&cross_correlation(&rho, &basis)?);
        if truth.s2 <= 0.0 || truth.s4 <= 0.0 {
            return Err(Error::Numeric(
                "reference state has vanishing moments; cannot calibrate".into(),
            ));
        }
        k2_sum += est.s2 / truth.s2;
        k4_sum += est.s4 / truth.s4;
    }
    Ok((k2_sum / N_REF as f64, k4_sum / N_REF as f64))
}

/// Haar-random pure state on the full bipartite space (normalized complex
/// Gaussian vector).
pub fn random_pure_bipartite(d: usize, stream: &SeededStream) -> Result<DensityMatrix> {
    let mut rng = stream.rng();
    let v = nalgebra::DVector::from_iterator(
        d * d,
        (0..d * d).map(|_| crate::sampling::standard_complex(&mut rng)),
    );
    DensityMatrix::from_pure(d, d, &v)
}

/// Per-batch moment estimates over disjoint consecutive blocks of the
/// sample, reshuffling (seeded) and continuing whenever the requested
/// batches overrun the sample.
pub fn batch_distribution(
    xs: &[f64],
    d: usize,
    batch_size: usize,
    n_batches: usize,
    kappa4: f64,
    stream: &SeededStream,
) -> Result<Vec<MomentPair>> {
    if batch_size == 0 {
        return Err(Error::Domain("batch size must be positive".into()));
    }
    if xs.len() < batch_size {
        return Err(Error::Domain(format!(
            "sample of {} cannot fill a batch of {batch_size}",
            xs.len()
        )));
    }
    let mut pool: Vec<f64> = xs.to_vec();
    let mut cursor = 0usize;
    let mut reshuffles = 0u64;
    let mut out = Vec::with_capacity(n_batches);
    for _ in 0..n_batches {
        if cursor + batch_size > pool.len() {
            use rand::seq::SliceRandom;
            let mut rng = stream.offset(reshuffles).rng();
            reshuffles += 1;
            pool.shuffle(&mut rng);
            cursor = 0;
        }
        let batch = &pool[cursor..cursor + batch_size];
        cursor += batch_size;
        let est = estimate_moments_calibrated(batch, d, kappa4)?;
        out.push(est.moments());
    }
    Ok(out)
}
