//! Cross-correlation matrix of a bipartite state over su(d) generator pairs,
//! the trace-norm Schmidt-number criterion, and the closed-form second/fourth
//! Bloch-sphere moments.
//!
//! For a state ρ on C^d ⊗ C^d the cross-correlation matrix is the real
//! (d²−1)×(d²−1) matrix `X_kl = Tr(g_k ⊗ g_l ρ)`. Its singular values ε_k
//! carry everything this crate certifies from:
//!
//! * Schmidt number ≤ r implies `Σ_k ε_k ≤ r − 1/d`;
//! * the uniform Bloch-sphere moments reduce to `S2 = Σ ε²` and
//!   `S4 = ((Σ ε²)² + 2 Σ ε⁴)/3` (convention fixed by the exact sphere
//!   moment identities; see `direct_moments`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{DensityMatrix, SuBasis};

/// Imaginary residue allowed in `Tr(g_k ⊗ g_l ρ)` before realness is declared
/// violated.
pub const TOL_IMAG: f64 = 1e-8;
/// Singular values below this are clamped to zero to stabilize Σε⁴ sums and
/// boundary comparisons.
pub const SV_CLAMP: f64 = 1e-12;

/// Real cross-correlation matrix with cached singular values.
#[derive(Debug, Clone)]
pub struct CrossCorrelationMatrix {
    d: usize,
    x: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl CrossCorrelationMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Singular values in nonincreasing order, clamped at [`SV_CLAMP`].
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }
}

/// Compute `X_kl = Tr(g_k ⊗ g_l ρ)` over the given generator basis.
///
/// The contraction runs over generator nonzeros only (each generator has at
/// most d nonzero entries), which keeps soundness sweeps over 10⁴–10⁵ states
/// cheap. The result must be real within [`TOL_IMAG`]; the imaginary part is
/// checked and then discarded.
pub fn cross_correlation(rho: &DensityMatrix, basis: &SuBasis) -> Result<CrossCorrelationMatrix> {
    let d = basis.d();
    if rho.dim_a() != d || rho.dim_b() != d {
        return Err(Error::Shape(format!(
            "state has local dimensions {}x{}, basis expects {d}x{d}",
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    let n = basis.len();
    let m = rho.matrix();
    let mut x = DMatrix::zeros(n, n);
    let mut worst_im = 0.0_f64;
    for k in 0..n {
        for l in 0..n {
            // Tr[(g_k ⊗ g_l) ρ] = Σ (g_k)_{i m} (g_l)_{j n} ρ_{(m n), (i j)}
            let mut acc = num_complex::Complex64::ZERO;
            for &(i, mm, gk) in basis.nonzeros(k) {
                for &(j, nn, gl) in basis.nonzeros(l) {
                    acc += gk * gl * m[(mm * d + nn, i * d + j)];
                }
            }
            worst_im = worst_im.max(acc.im.abs());
            x[(k, l)] = acc.re;
        }
    }
    if worst_im > TOL_IMAG {
        return Err(Error::Numeric(format!(
            "cross-correlation has imaginary residue {worst_im:.3e} above {TOL_IMAG:.1e}"
        )));
    }
    let mut singular_values: Vec<f64> = x
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|&s| if s < SV_CLAMP { 0.0 } else { s })
        .collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    Ok(CrossCorrelationMatrix {
        d,
        x,
        singular_values,
    })
}

/// Trace norm `Σ_k ε_k` of the cross-correlation matrix.
pub fn trace_norm(x: &CrossCorrelationMatrix) -> f64 {
    x.singular_values.iter().sum()
}

/// Smallest Schmidt number compatible with a given trace norm: the smallest
/// integer `r` with `r − 1/d ≥ T`, clamped to `[1, d]`.
///
/// Any state whose cross-correlation trace norm is `T` must have Schmidt
/// number at least this value, because every smaller `r` violates the
/// criterion `Σ ε_k ≤ r − 1/d`.
pub fn certify_from_tracenorm(t: f64, d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("trace norm must be nonnegative, got {t}")));
    }
    // Snap within 1e-9 so trace norms that sit exactly on a bound (up to
    // floating-point representation of r − 1/d) do not round up a level.
    let r = (t + 1.0 / d as f64 - 1e-9).ceil() as i64;
    Ok(r.clamp(1, d as i64) as usize)
}

/// Second and fourth Bloch-sphere moments of a state, `(S2, S4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub s2: f64,
    pub s4: f64,
}

/// Closed-form moments from the singular values:
/// `S2 = Σ ε²`, `S4 = ((Σ ε²)² + 2 Σ ε⁴)/3`.
///
/// These equal the uniform-sphere integrals of the squared/fourth-power
/// correlations ⟨g_α ⊗ g_β⟩ with the normalization constants
/// `N₂ = (d²−1)²` and `N₄ = (d²−1)²(d²+1)²/9`, which follow from the exact
/// unit-sphere moment identities `E[α_i α_j] = δ_ij/n` and
/// `E[α_i α_j α_k α_l] = (δδ+δδ+δδ)/(n(n+2))` with `n = d²−1`.
pub fn direct_moments(x: &CrossCorrelationMatrix) -> MomentPair {
    let s2: f64 = x.singular_values.iter().map(|e| e * e).sum();
    let q: f64 = x.singular_values.iter().map(|e| e.powi(4)).sum();
    MomentPair {
        s2,
        s4: (s2 * s2 + 2.0 * q) / 3.0,
    }
}
