//! Overcomplete state tomography from mutually unbiased bases with a
//! gauge-parametrized density matrix and (optionally weighted) chi-square
//! minimization.
//!
//! Both parties are projected onto every vector of every MUB; party B's
//! projector is complex-conjugated (the phase-conjugate arm of a
//! down-conversion source). The reconstruction searches over
//! `ρ_g = G²/Tr(G²)` with `G = c₀·1 + Σ_k c_k g_k` Hermitian — positive by
//! construction, so the fit never leaves the physical set — and minimizes
//!
//! ```text
//! χ² = Σ w_{αβ} (p^meas − p^pred)² / max(p^pred, 1e−12)
//! ```
//!
//! by seeded multi-start gradient descent (Barzilai–Borwein steps with
//! backtracking on a numerically differentiated objective).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{gellmann_basis, DensityMatrix, SuBasis};
use crate::sampling::SeededStream;

/// Probability floor inside chi-square denominators.
pub const EPS_P: f64 = 1e-12;
/// Orthonormality/unbiasedness tolerance for MUB construction.
pub const TOL_MUB: f64 = 1e-10;
/// Per-block normalization tolerance for probability tables.
pub const TOL_BLOCK_SUM: f64 = 1e-9;

/// A complete set of d+1 mutually unbiased bases at prime d; basis 0 is
/// computational, the rest are Wootters–Fields quadratic-phase bases (with
/// the usual X/Y special case at d = 2). Vectors are matrix columns.
#[derive(Debug, Clone)]
pub struct MubSet {
    d: usize,
    bases: Vec<DMatrix<Complex64>>,
}

impl MubSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    /// Basis α as a matrix of column vectors.
    pub fn basis(&self, alpha: usize) -> &DMatrix<Complex64> {
        &self.bases[alpha]
    }

    /// Vector `|m_{α,i}⟩`.
    pub fn vector(&self, alpha: usize, i: usize) -> DVector<Complex64> {
        self.bases[alpha].column(i).into_owned()
    }
}

/// Build the d+1 mutually unbiased bases for d ∈ {2, 3, 5, 7}.
pub fn mub_bases(d: usize) -> Result<MubSet> {
    if !matches!(d, 2 | 3 | 5 | 7) {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "complete MUB construction implemented for prime d in {2, 3, 5, 7}".into(),
        });
    }
    let mut bases = Vec::with_capacity(d + 1);
    bases.push(DMatrix::identity(d, d));
    if d == 2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        bases.push(DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        ));
        bases.push(DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(0.0, h),
                Complex64::new(0.0, -h),
            ],
        ));
    } else {
        let inv_sqrt = (d as f64).sqrt().recip();
        let omega = 2.0 * std::f64::consts::PI / d as f64;
        for a in 0..d {
            let m = DMatrix::from_fn(d, d, |k, i| {
                Complex64::from_polar(inv_sqrt, omega * ((a * k * k + i * k) % d) as f64)
            });
            bases.push(m);
        }
    }
    let set = MubSet { d, bases };
    validate_mubs(&set)?;
    Ok(set)
}

fn validate_mubs(set: &MubSet) -> Result<()> {
    let d = set.d;
    for (alpha, basis) in set.bases.iter().enumerate() {
        let gram = basis.adjoint() * basis;
        let residual = (&gram - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()));
        if residual > TOL_MUB {
            return Err(Error::Numeric(format!(
                "basis {alpha} orthonormality residual {residual:.3e}"
            )));
        }
    }
    for a in 0..set.bases.len() {
        for b in (a + 1)..set.bases.len() {
            let overlaps = set.bases[a].adjoint() * &set.bases[b];
            for z in overlaps.iter() {
                if (z.norm_sqr() - 1.0 / d as f64).abs() > TOL_MUB {
                    return Err(Error::Numeric(format!(
                        "bases {a},{b} unbiasedness residual {:.3e}",
                        (z.norm_sqr() - 1.0 / d as f64).abs()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Full probability table over settings `(α, β)` and outcomes `(i, j)`,
/// stored flat with index `((α·(d+1) + β)·d + i)·d + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    pub d: usize,
    pub values: Vec<f64>,
}

impl ProbTable {
    pub fn index(&self, alpha: usize, beta: usize, i: usize, j: usize) -> usize {
        ((alpha * (self.d + 1) + beta) * self.d + i) * self.d + j
    }

    pub fn get(&self, alpha: usize, beta: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(alpha, beta, i, j)]
    }
}

/// Predicted projection probabilities
/// `p_{α,β,i,j} = ⟨m_{α,i}| ⊗ ⟨m_{β,j}|* ρ |m_{α,i}⟩ |m_{β,j}⟩*`
/// (note the complex conjugation on party B).
pub fn predict_probs(rho: &DensityMatrix, mubs: &MubSet) -> Result<ProbTable> {
    let d = mubs.d();
    if rho.dim_a() != d || rho.dim_b() != d {
        return Err(Error::Shape(format!(
            "state is {}x{}, MUBs are for {d}",
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    let nb = d + 1;
    let m = rho.matrix();
    let mut values = vec![0.0; nb * nb * d * d];
    let mut idx = 0;
    for alpha in 0..nb {
        for beta in 0..nb {
            let mut block_sum = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let w = projection_vector(mubs, alpha, beta, i, j);
                    let mut acc = Complex64::ZERO;
                    for p in 0..d * d {
                        let wp = w[p].conj();
                        if wp.norm_sqr() == 0.0 {
                            continue;
                        }
                        for q in 0..d * d {
                            acc += wp * m[(p, q)] * w[q];
                        }
                    }
                    values[idx] = acc.re;
                    block_sum += acc.re;
                    idx += 1;
                }
            }
            if (block_sum - 1.0).abs() > TOL_BLOCK_SUM {
                return Err(Error::Numeric(format!(
                    "setting block ({alpha},{beta}) sums to {block_sum:.12}, expected 1"
                )));
            }
        }
    }
    Ok(ProbTable { d, values })
}

/// `|m_{α,i}⟩ ⊗ |m_{β,j}⟩*` as a length-d² vector.
fn projection_vector(
    mubs: &MubSet,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
) -> DVector<Complex64> {
    let d = mubs.d();
    let a = mubs.basis(alpha);
    let b = mubs.basis(beta);
    DVector::from_fn(d * d, |row, _| {
        let (p, q) = (row / d, row % d);
        a[(p, i)] * b[(q, j)].conj()
    })
}

/// Measured tomography data: per-setting outcome probabilities plus the
/// per-setting totals when the data came as counts (totals drive the
/// weighted objective; probability-only data weighs all settings equally).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomoData {
    d: usize,
    probs: Vec<f64>,
    totals: Option<Vec<f64>>,
}

impl TomoData {
    /// From raw coincidence counts, flat index `((α·(d+1)+β)·d+i)·d+j`.
    pub fn from_counts(d: usize, counts: &[u64]) -> Result<Self> {
        let nb = d + 1;
        let expected = nb * nb * d * d;
        if counts.len() != expected {
            return Err(Error::Shape(format!(
                "tomography counts need {expected} cells at d = {d}, got {}",
                counts.len()
            )));
        }
        let mut probs = vec![0.0; expected];
        let mut totals = vec![0.0; nb * nb];
        for block in 0..nb * nb {
            let lo = block * d * d;
            let hi = lo + d * d;
            let total: u64 = counts[lo..hi].iter().sum();
            if total == 0 {
                return Err(Error::EmptyData("tomography setting with zero counts"));
            }
            totals[block] = total as f64;
            for c in lo..hi {
                probs[c] = counts[c] as f64 / total as f64;
            }
        }
        Ok(Self {
            d,
            probs: probs.to_vec(),
            totals: Some(totals),
        })
    }

    /// From exact or externally normalized probabilities; each (α, β) block
    /// must sum to 1 within [`TOL_BLOCK_SUM`].
    pub fn from_probabilities(d: usize, probs: Vec<f64>) -> Result<Self> {
        let nb = d + 1;
        let expected = nb * nb * d * d;
        if probs.len() != expected {
            return Err(Error::Shape(format!(
                "tomography table needs {expected} cells at d = {d}, got {}",
                probs.len()
            )));
        }
        for block in 0..nb * nb {
            let sum: f64 = probs[block * d * d..(block + 1) * d * d].iter().sum();
            if (sum - 1.0).abs() > TOL_BLOCK_SUM {
                return Err(Error::Validation(format!(
                    "tomography block {block} sums to {sum:.12}, expected 1"
                )));
            }
        }
        Ok(Self {
            d,
            probs,
            totals: None,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn totals(&self) -> Option<&[f64]> {
        self.totals.as_deref()
    }

    /// Per-point weights `N_{αβ}/N̄` (all 1 without count information).
    fn point_weights(&self, weighted: bool) -> Vec<f64> {
        let d = self.d;
        let nb = d + 1;
        let n_points = self.probs.len();
        match (&self.totals, weighted) {
            (Some(totals), true) => {
                let mean = totals.iter().sum::<f64>() / totals.len() as f64;
                let mut w = vec![0.0; n_points];
                for block in 0..nb * nb {
                    for c in block * d * d..(block + 1) * d * d {
                        w[c] = totals[block] / mean;
                    }
                }
                w
            }
            _ => vec![1.0; n_points],
        }
    }
}

/// Simulate finite-count tomography: multinomial draws per setting block.
pub fn sample_tomo_counts(
    rho: &DensityMatrix,
    mubs: &MubSet,
    n_per_setting: u64,
    stream: &SeededStream,
) -> Result<TomoData> {
    if n_per_setting == 0 {
        return Err(Error::Domain("n_per_setting must be at least 1".into()));
    }
    let d = mubs.d();
    let nb = d + 1;
    let table = predict_probs(rho, mubs)?;
    let mut counts = vec![0u64; table.values.len()];
    for block in 0..nb * nb {
        let lo = block * d * d;
        let hi = lo + d * d;
        let drawn = crate::randmeas::multinomial_draw(
            &table.values[lo..hi],
            n_per_setting,
            &stream.offset(block as u64),
        );
        counts[lo..hi].copy_from_slice(&drawn);
    }
    TomoData::from_counts(d, &counts)
}

/// Real gauge coefficients `(c₀, c₁, …, c_{D²−1})` defining
/// `G = c₀·1 + Σ c_k g_k` on the D-dimensional global space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams(pub Vec<f64>);

impl GaugeParams {
    pub fn dim_global(&self) -> Result<usize> {
        let n = self.0.len();
        let dd = (n as f64).sqrt().round() as usize;
        if dd * dd != n || dd < 2 {
            return Err(Error::Shape(format!(
                "gauge parameter count {n} is not a square dimension"
            )));
        }
        Ok(dd)
    }
}

/// `ρ_g = G²/Tr(G²)` for Hermitian `G = c₀·1 + Σ c_k g_k`; positive
/// semidefinite with unit trace by construction. The global dimension D must
/// be a perfect square `d²`; the result is returned as a d × d bipartite
/// state.
pub fn rho_from_gauge(params: &GaugeParams, basis: &SuBasis) -> Result<DensityMatrix> {
    let dd = basis.d();
    if params.0.len() != dd * dd {
        return Err(Error::Shape(format!(
            "{} gauge parameters do not match global dimension {dd}",
            params.0.len()
        )));
    }
    let norm_sq: f64 = params.0.iter().map(|c| c * c).sum();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateGauge);
    }
    let d = (dd as f64).sqrt().round() as usize;
    if d * d != dd || d < 2 {
        return Err(Error::Shape(format!(
            "global dimension {dd} is not a bipartite square"
        )));
    }
    let g = gauge_matrix(params, basis);
    let g2 = &g * &g;
    let trace: f64 = (0..dd).map(|i| g2[(i, i)].re).sum();
    if trace <= 0.0 {
        return Err(Error::DegenerateGauge);
    }
    DensityMatrix::new(d, d, g2 / Complex64::new(trace, 0.0))
}

fn gauge_matrix(params: &GaugeParams, basis: &SuBasis) -> DMatrix<Complex64> {
    let dd = basis.d();
    let mut g = DMatrix::from_diagonal_element(dd, dd, Complex64::new(params.0[0], 0.0));
    for (k, &ck) in params.0.iter().enumerate().skip(1) {
        if ck == 0.0 {
            continue;
        }
        for &(i, j, v) in basis.nonzeros(k - 1) {
            g[(i, j)] += v * ck;
        }
    }
    g
}

/// Chi-square objective for a parameter vector against measured data.
///
/// Exposed for direct inspection (gauge-ray invariance, weighting
/// identities); [`reconstruct`] minimizes exactly this quantity.
pub fn chi_square(
    data: &TomoData,
    mubs: &MubSet,
    weighted: bool,
    params: &GaugeParams,
) -> Result<f64> {
    let obj = Objective::new(data, mubs, weighted)?;
    if params.0.len() != obj.n_params {
        return Err(Error::Shape(format!(
            "expected {} gauge parameters, got {}",
            obj.n_params,
            params.0.len()
        )));
    }
    Ok(obj.eval(&params.0).0)
}

/// Fit configuration; defaults match the reconstruction contract
/// (8 seeded starts, numerically differentiated descent).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    /// Objective value below which a start counts as converged.
    pub tol_chi2: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 4000,
            tol_chi2: 1e-10,
        }
    }
}

/// Reconstruction diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub chi2: f64,
    pub weighted: bool,
    pub iterations: usize,
    pub converged: bool,
    pub n_starts: usize,
    pub best_start: usize,
    /// Final objective of every start, in start order.
    pub start_chi2: Vec<f64>,
}

/// Reconstruct a density matrix from MUB tomography data.
///
/// Runs `n_starts` seeded descents from random gauge parameters and returns
/// the state from the best final objective plus a fit report. Convergence
/// failure of all starts is reported via the flag, never as an error — the
/// best candidate is still returned.
pub fn reconstruct(
    data: &TomoData,
    mubs: &MubSet,
    weighted: bool,
    cfg: &FitConfig,
    stream: &SeededStream,
) -> Result<(DensityMatrix, FitReport)> {
    if cfg.n_starts == 0 {
        return Err(Error::Domain("reconstruction needs at least one start".into()));
    }
    let obj = Objective::new(data, mubs, weighted)?;
    let mut best: Option<(f64, Vec<f64>, usize, usize)> = None;
    let mut start_chi2 = Vec::with_capacity(cfg.n_starts);
    for s in 0..cfg.n_starts {
        let mut rng = stream.offset(s as u64).rng();
        let mut init: Vec<f64> = (0..obj.n_params)
            .map(|k| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if k == 0 {
                    1.0 + 0.2 * z
                } else {
                    0.35 * z
                }
            })
            .collect();
        let norm = init.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in &mut init {
            *c /= norm;
        }
        let (chi2, params, iters) = obj.minimize(init, cfg.max_iters, cfg.tol_chi2);
        start_chi2.push(chi2);
        if best.as_ref().map_or(true, |(b, ..)| chi2 < *b) {
            best = Some((chi2, params, iters, s));
        }
    }
    let (chi2, params, iterations, best_start) = best.expect("at least one start ran");
    let basis = gellmann_basis(obj.dd)?;
    let rho = rho_from_gauge(&GaugeParams(params), &basis)?;
    Ok((
        rho,
        FitReport {
            chi2,
            weighted,
            iterations,
            converged: chi2 <= cfg.tol_chi2,
            n_starts: cfg.n_starts,
            best_start,
            start_chi2,
        },
    ))
}

/// Precomputed objective: projection vectors, their generator images, and
/// measured probabilities with weights.
struct Objective {
    dd: usize,
    n_params: usize,
    n_points: usize,
    basis: SuBasis,
    /// `w` per point, flattened (n_points × dd).
    w: Vec<Complex64>,
    /// `g_k w` per (point, generator), flattened (n_points × (n_params−1) × dd).
    gkw: Vec<Complex64>,
    measured: Vec<f64>,
    weights: Vec<f64>,
}

impl Objective {
    fn new(data: &TomoData, mubs: &MubSet, weighted: bool) -> Result<Self> {
        let d = mubs.d();
        if data.d() != d {
            return Err(Error::Shape(format!(
                "data dimension {} does not match MUB dimension {d}",
                data.d()
            )));
        }
        let dd = d * d;
        let basis = gellmann_basis(dd)?;
        let n_gens = dd * dd - 1;
        let nb = d + 1;
        let n_points = nb * nb * d * d;
        let mut w = vec![Complex64::ZERO; n_points * dd];
        let mut gkw = vec![Complex64::ZERO; n_points * n_gens * dd];
        let mut pt = 0;
        for alpha in 0..nb {
            for beta in 0..nb {
                for i in 0..d {
                    for j in 0..d {
                        let v = projection_vector(mubs, alpha, beta, i, j);
                        w[pt * dd..(pt + 1) * dd].copy_from_slice(v.as_slice());
                        for k in 0..n_gens {
                            let out = &mut gkw[(pt * n_gens + k) * dd..(pt * n_gens + k + 1) * dd];
                            for &(r, c, val) in basis.nonzeros(k) {
                                out[r] += val * v[c];
                            }
                        }
                        pt += 1;
                    }
                }
            }
        }
        Ok(Self {
            dd,
            n_params: dd * dd,
            n_points,
            basis,
            w,
            gkw,
            measured: data.probabilities().to_vec(),
            weights: data.point_weights(weighted),
        })
    }

    /// Objective value plus the per-point `G w` vectors and `‖G‖_F²` needed
    /// for cheap finite-difference probes.
    fn eval(&self, c: &[f64]) -> (f64, Vec<Complex64>, f64) {
        let dd = self.dd;
        let g = gauge_matrix(&GaugeParams(c.to_vec()), &self.basis);
        let t: f64 = dd as f64 * c[0] * c[0] + c[1..].iter().map(|v| v * v).sum::<f64>();
        let mut gw = vec![Complex64::ZERO; self.n_points * dd];
        let mut chi2 = 0.0;
        for pt in 0..self.n_points {
            let wpt = &self.w[pt * dd..(pt + 1) * dd];
            let out = &mut gw[pt * dd..(pt + 1) * dd];
            for r in 0..dd {
                let mut acc = Complex64::ZERO;
                for cidx in 0..dd {
                    acc += g[(r, cidx)] * wpt[cidx];
                }
                out[r] = acc;
            }
            let p = out.iter().map(|z| z.norm_sqr()).sum::<f64>() / t;
            chi2 += self.term(pt, p);
        }
        (chi2, gw, t)
    }

    #[inline]
    fn term(&self, pt: usize, p: f64) -> f64 {
        let diff = self.measured[pt] - p;
        self.weights[pt] * diff * diff / p.max(EPS_P)
    }

    /// Central-difference gradient, reusing the cached `G w` vectors: a probe
    /// of parameter k shifts `G w` by `±h·(g_k w)` (or `±h·w` for c₀) and
    /// `‖G‖_F²` by a closed-form amount, so no matrix rebuild is needed.
    fn gradient(&self, c: &[f64], gw: &[Complex64], t: f64) -> Vec<f64> {
        let dd = self.dd;
        let n_gens = self.n_params - 1;
        let mut grad = vec![0.0; self.n_params];
        for k in 0..self.n_params {
            let h = 1e-6 * (1.0 + c[k].abs());
            let (t_plus, t_minus) = if k == 0 {
                let ddf = dd as f64;
                (
                    t + 2.0 * h * ddf * c[0] + h * h * ddf,
                    t - 2.0 * h * ddf * c[0] + h * h * ddf,
                )
            } else {
                (t + 2.0 * h * c[k] + h * h, t - 2.0 * h * c[k] + h * h)
            };
            let mut chi_plus = 0.0;
            let mut chi_minus = 0.0;
            for pt in 0..self.n_points {
                let gwpt = &gw[pt * dd..(pt + 1) * dd];
                let dir: &[Complex64] = if k == 0 {
                    &self.w[pt * dd..(pt + 1) * dd]
                } else {
                    &self.gkw[(pt * n_gens + k - 1) * dd..(pt * n_gens + k) * dd]
                };
                let mut dot = 0.0;
                let mut dn2 = 0.0;
                let mut n0 = 0.0;
                for r in 0..dd {
                    dot += (gwpt[r].conj() * dir[r]).re;
                    dn2 += dir[r].norm_sqr();
                    n0 += gwpt[r].norm_sqr();
                }
                let n_plus = n0 + 2.0 * h * dot + h * h * dn2;
                let n_minus = n0 - 2.0 * h * dot + h * h * dn2;
                chi_plus += self.term(pt, n_plus / t_plus);
                chi_minus += self.term(pt, n_minus / t_minus);
            }
            grad[k] = (chi_plus - chi_minus) / (2.0 * h);
        }
        grad
    }

    /// Barzilai–Borwein descent with backtracking. Returns the best objective
    /// found, its parameters, and the iteration count.
    fn minimize(&self, init: Vec<f64>, max_iters: usize, tol: f64) -> (f64, Vec<f64>, usize) {
        let mut c = init;
        let (mut f, mut gw, mut t) = self.eval(&c);
        let mut grad = self.gradient(&c, &gw, t);
        let mut step = 1e-2;
        let mut stagnant = 0;
        let mut iters = 0;
        for iter in 0..max_iters {
            iters = iter + 1;
            if f <= tol {
                break;
            }
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < 1e-13 {
                break;
            }
            // Backtracking from the current proposal until the objective drops.
            let mut accepted = false;
            let mut trial_step = step;
            for _ in 0..40 {
                let cand: Vec<f64> = c
                    .iter()
                    .zip(&grad)
                    .map(|(ci, gi)| ci - trial_step * gi)
                    .collect();
                let (fc, gwc, tc) = self.eval(&cand);
                if fc < f {
                    let grad_new = self.gradient(&cand, &gwc, tc);
                    // BB2 step from the accepted displacement.
                    let mut sy = 0.0;
                    let mut yy = 0.0;
                    for k in 0..self.n_params {
                        let s = cand[k] - c[k];
                        let y = grad_new[k] - grad[k];
                        sy += s * y;
                        yy += y * y;
                    }
                    step = if yy > 0.0 && sy.abs() > 0.0 {
                        (sy.abs() / yy).clamp(1e-10, 1e3)
                    } else {
                        trial_step
                    };
                    if (f - fc).abs() < 1e-16 * (1.0 + f) {
                        stagnant += 1;
                    } else {
                        stagnant = 0;
                    }
                    c = cand;
                    f = fc;
                    gw = gwc;
                    t = tc;
                    grad = grad_new;
                    accepted = true;
                    break;
                }
                trial_step *= 0.5;
            }
            if !accepted || stagnant >= 5 {
                break;
            }
        }
        let _ = (gw, t);
        (f, c, iters)
    }
}
