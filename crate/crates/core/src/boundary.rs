//! Schmidt-number boundary curves in the (S2, S4) moment plane and point
//! classification against them.
//!
//! A state of Schmidt number ≤ r obeys `Σ ε_k ≤ C` with `C = r − 1/d` over
//! the singular values ε of its cross-correlation matrix. At fixed
//! `s2 = Σ ε²` the smallest fourth moment compatible with that bound is
//!
//! ```text
//! s4_min(s2) = (s2² + 2·q_min(s2)) / 3,
//! q_min(s2)  = min { Σ ε⁴ : ε ≥ 0, Σ ε ≤ C, Σ ε² = s2 }
//! ```
//!
//! so a measured point strictly below the r-curve cannot come from any
//! Schmidt-number-≤-r state: it certifies dimensionality r + 1.
//!
//! The minimizer is found by enumerating the stationary patterns of the
//! constrained problem. On the simplex-slack branch every positive component
//! is equal (k-level solutions); on the binding branch `Σ ε = C` the
//! stationarity cubic `4ε³ = 2λε + μ` admits at most two positive roots, so
//! optima put k components at one value and l at a smaller one. Both root
//! families are solved in closed form and the minimum over all candidates is
//! exact up to floating point; an independent penalty-descent minimizer
//! cross-checks this in the test suite.

use serde::{Deserialize, Serialize};

use crate::correlation::MomentPair;
use crate::error::{Error, Result};
use crate::qudit::DensityMatrix;
use crate::randmeas::MomentEstimate;
use crate::sampling::{haar_from_rng, SeededStream};

/// Tolerance used by [`region_check`]: a sampled point must not fall below
/// the curve by more than this.
pub const TOL_REGION: f64 = 1e-7;

/// Number of error-scale steps examined per curve by [`certify_point`].
const K_SIGMA_STEPS: usize = 64;

/// `Σ ε` budget for Schmidt number r at local dimension d.
pub fn trace_norm_bound(r: usize, d: usize) -> f64 {
    r as f64 - 1.0 / d as f64
}

/// Smallest `Σ ε⁴` over ε ∈ R^n with `ε ≥ 0`, `Σ ε ≤ c`, `Σ ε² = s2`.
fn min_quartic_sum(c: f64, n: usize, s2: f64) -> Result<f64> {
    if s2 <= 0.0 {
        return Ok(0.0);
    }
    let c2 = c * c;
    if s2 > c2 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "s2 = {s2} infeasible: exceeds the single-component maximum {c2}"
        )));
    }
    let s2 = s2.min(c2);
    let nf = n as f64;
    // Slack branch: all positive components equal. Feasible for k components
    // iff √(k·s2) ≤ c; Σε⁴ = s2²/k is smallest at the largest feasible k.
    if s2 * nf <= c2 {
        return Ok(s2 * s2 / nf);
    }
    let k_slack = (c2 / s2).floor() as usize; // ≥ 1, < n here
    let mut best = s2 * s2 / k_slack as f64;

    // Binding branch Σε = c: k components at a, l at b with 0 ≤ b ≤ a.
    for k in 1..n {
        for l in 1..=(n - k) {
            let (kf, lf) = (k as f64, l as f64);
            let disc = 4.0 * lf * kf * ((lf + kf) * s2 - c2);
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let denom = 2.0 * lf * (lf + kf);
            for sign in [1.0, -1.0] {
                let b = (2.0 * c * lf + sign * sq) / denom;
                if b < -1e-12 {
                    continue;
                }
                let b = b.max(0.0);
                let a = (c - lf * b) / kf;
                if a < 0.0 || a + 1e-12 < b {
                    continue;
                }
                let q = kf * a.powi(4) + lf * b.powi(4);
                if q < best {
                    best = q;
                }
            }
        }
    }
    Ok(best)
}

/// Exact lower boundary of the fourth moment at fixed `s2` for Schmidt
/// number r and local dimension d.
pub fn s4_min(r: usize, d: usize, s2: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if r < 1 || r > d {
        return Err(Error::Domain(format!(
            "Schmidt number {r} out of range 1..={d}"
        )));
    }
    let q = min_quartic_sum(trace_norm_bound(r, d), d * d - 1, s2)?;
    Ok((s2 * s2 + 2.0 * q) / 3.0)
}

/// Tabulated boundary for one Schmidt number: grid of `(s2, s4_min)` pairs
/// spanning `(0, C²]`, geometric near zero and linear beyond the all-equal
/// knee `C²/(d²−1)`, with the knee and endpoint on the grid exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryCurve {
    r: usize,
    d: usize,
    points: Vec<(f64, f64)>,
}

impl BoundaryCurve {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Largest representable `s2` (= C²).
    pub fn domain_max(&self) -> f64 {
        self.points.last().expect("curve is nonempty").0
    }

    /// Curve height at `s2` by linear interpolation; the flag reports that
    /// `s2` fell outside `(0, C²]` and the nearest endpoint was used.
    pub fn s4_at(&self, s2: f64) -> (f64, bool) {
        let pts = &self.points;
        if s2 <= 0.0 {
            return (0.0, s2 < 0.0);
        }
        if s2 >= self.domain_max() {
            return (pts.last().unwrap().1, s2 > self.domain_max());
        }
        let first = pts[0];
        if s2 <= first.0 {
            // Below the first grid point the curve is the near-origin
            // quadratic; a chord through the origin bounds it from above by
            // a negligible amount at the default grid density.
            return (first.1 * s2 / first.0, false);
        }
        let idx = pts.partition_point(|p| p.0 < s2);
        let (x0, y0) = pts[idx - 1];
        let (x1, y1) = pts[idx];
        let t = (s2 - x0) / (x1 - x0);
        (y0 + t * (y1 - y0), false)
    }
}

/// Compute the boundary curve for Schmidt number r at dimension d on a
/// `grid_size`-point grid.
pub fn boundary_curve(r: usize, d: usize, grid_size: usize) -> Result<BoundaryCurve> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if r < 1 || r > d {
        return Err(Error::Domain(format!(
            "Schmidt number {r} out of range 1..={d}"
        )));
    }
    if grid_size < 2 {
        return Err(Error::Domain(format!(
            "boundary grid needs at least 2 points, got {grid_size}"
        )));
    }
    let c = trace_norm_bound(r, d);
    let c2 = c * c;
    let n = d * d - 1;
    let knee = c2 / n as f64;

    let mut grid = Vec::with_capacity(grid_size + 2);
    let n_geo = grid_size / 2;
    let n_lin = grid_size - n_geo;
    // Geometric section (0, knee]: resolves the steeply curving low end.
    let lo = knee * 1e-6;
    for i in 0..n_geo {
        let t = i as f64 / (n_geo.max(2) - 1) as f64;
        grid.push(lo * (knee / lo).powf(t));
    }
    // Linear section [knee, C²].
    for i in 0..n_lin {
        let t = i as f64 / (n_lin.max(2) - 1) as f64;
        grid.push(knee + t * (c2 - knee));
    }
    grid.push(knee);
    grid.push(c2);
    grid.sort_by(|a, b| a.partial_cmp(b).expect("grid values are finite"));
    grid.dedup_by(|a, b| (*a - *b).abs() < f64::EPSILON * c2.max(1.0));

    let points = grid
        .into_iter()
        .map(|s2| s4_min(r, d, s2).map(|v| (s2, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurve { r, d, points })
}

/// Convenience: all certification curves r = 1..d−1 at one grid size.
pub fn certification_curves(d: usize, grid_size: usize) -> Result<Vec<BoundaryCurve>> {
    (1..d).map(|r| boundary_curve(r, d, grid_size)).collect()
}

/// Outcome of classifying one measured moment point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    /// Certified Schmidt number (1 when no curve is cleared).
    pub certified_r: usize,
    /// Curves the point cleared, ascending.
    pub cleared_curves: Vec<usize>,
    pub k_sigma: f64,
    pub point: MomentPair,
    /// Standard errors `(σ[S2], σ[S4])` the rectangle was built from.
    pub sigmas: (f64, f64),
    /// Set when the point's s2 exceeds even the largest curve's domain
    /// endpoint — no curve can be evaluated at the point itself, and every
    /// curve is cleared on the impossible-s2 rule alone.
    pub outside_domain: bool,
}

/// Classify a moment estimate against the certification curves.
///
/// The error rectangle `[s2 ± kσ2] × [s4 ± kσ4]` clears curve r when its
/// top-right corner stays strictly below the curve for every error scale
/// `k ∈ [0, k_sigma]` (the curve height is taken at the corner's s2, the
/// most favorable position for a Schmidt-number-≤-r explanation). Requiring
/// every intermediate scale — not just the endpoint — makes enlarging
/// `k_sigma` strictly harder, so the certified number is monotone
/// nonincreasing in `k_sigma`.
///
/// A corner whose s2 exceeds the curve's domain endpoint C² clears that
/// scale outright: Σε² ≤ (Σε)² ≤ C² for any state of Schmidt number ≤ r, so
/// such an s2 is unreachable no matter the s4.
pub fn certify_point(
    est: &MomentEstimate,
    d: usize,
    curves: &[BoundaryCurve],
    k_sigma: f64,
) -> Result<CertificationReport> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(k_sigma >= 0.0) {
        return Err(Error::Domain(format!("k_sigma must be nonnegative, got {k_sigma}")));
    }
    let mut by_r: Vec<Option<&BoundaryCurve>> = vec![None; d];
    for c in curves {
        if c.d() == d && c.r() >= 1 && c.r() < d {
            by_r[c.r()] = Some(c);
        }
    }
    for r in 1..d {
        if by_r[r].is_none() {
            return Err(Error::Domain(format!(
                "certification needs curves r = 1..{}, missing r = {r}",
                d - 1
            )));
        }
    }

    let outside = est.s2 > by_r[d - 1].expect("checked above").domain_max();

    let mut cleared = Vec::new();
    for r in 1..d {
        let curve = by_r[r].expect("checked above");
        let dom = curve.domain_max();
        let mut ok = true;
        for step in 0..=K_SIGMA_STEPS {
            let k = k_sigma * step as f64 / K_SIGMA_STEPS as f64;
            let s2_corner = est.s2 + k * est.sigma_s2;
            let s4_corner = est.s4 + k * est.sigma_s4;
            let pass = if s2_corner > dom {
                true // beyond C²: unreachable for Schmidt number ≤ r
            } else {
                let (bound, _) = curve.s4_at(s2_corner);
                s4_corner < bound
            };
            if !pass {
                ok = false;
                break;
            }
            if k_sigma == 0.0 {
                break;
            }
        }
        if ok {
            cleared.push(r);
        }
    }
    let certified_r = cleared.last().map_or(1, |&r| r + 1);
    Ok(CertificationReport {
        certified_r,
        cleared_curves: cleared,
        k_sigma,
        point: est.moments(),
        sigmas: (est.sigma_s2, est.sigma_s4),
        outside_domain: outside,
    })
}

/// Random mixed state of Schmidt number ≤ r: a mixture of up to
/// `max_components` pure states, each with Schmidt rank ≤ r (random
/// coefficients, Haar-random local bases).
pub fn random_schmidt_mixture(
    r: usize,
    d: usize,
    max_components: usize,
    stream: &SeededStream,
) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if r < 1 || r > d {
        return Err(Error::Domain(format!(
            "Schmidt rank {r} out of range 1..={d}"
        )));
    }
    if max_components == 0 {
        return Err(Error::Domain("mixture needs at least one component".into()));
    }
    use rand::Rng;
    let mut rng = stream.rng();
    let m = rng.gen_range(1..=max_components);
    let mut weights: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    let dim = d * d;
    let mut mat = nalgebra::DMatrix::zeros(dim, dim);
    for &w in &weights {
        let mut mu: Vec<f64> = (0..r).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let musum: f64 = mu.iter().sum();
        for v in &mut mu {
            *v /= musum;
        }
        let a = haar_from_rng(d, &mut rng)?;
        let b = haar_from_rng(d, &mut rng)?;
        let mut psi = nalgebra::DVector::zeros(dim);
        for (i, &mui) in mu.iter().enumerate() {
            let amp = mui.sqrt();
            for p in 0..d {
                for q in 0..d {
                    psi[p * d + q] += amp * a.matrix()[(p, i)] * b.matrix()[(q, i)];
                }
            }
        }
        let scaled = &psi * num_complex::Complex64::new(w.sqrt(), 0.0);
        mat += &scaled * scaled.adjoint();
    }
    DensityMatrix::new(d, d, mat)
}

/// Soundness sweep: sample `n_samples` random Schmidt-number-≤-r states,
/// compute their exact moments, and count any that fall below the r-curve
/// by more than [`TOL_REGION`]. The contract is a zero count.
pub fn region_check(r: usize, d: usize, n_samples: usize, stream: &SeededStream) -> Result<usize> {
    use crate::correlation::{cross_correlation, direct_moments};
    use crate::qudit::gellmann_basis;

    if n_samples < 1 {
        return Err(Error::Domain("region check needs at least one sample".into()));
    }
    let basis = gellmann_basis(d)?;
    let mut violations = 0;
    for i in 0..n_samples {
        let rho = random_schmidt_mixture(r, d, 4, &stream.offset(i as u64))?;
        let m = direct_moments(&cross_correlation(&rho, &basis)?);
        let c2 = trace_norm_bound(r, d).powi(2);
        let bound = s4_min(r, d, m.s2.min(c2))?;
        if m.s4 < bound - TOL_REGION {
            violations += 1;
        }
    }
    Ok(violations)
}
