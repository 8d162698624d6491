//! Qudit domain types: density matrices, unitaries, and the orthonormal
//! su(d) generator basis.
//!
//! Generators follow a fixed canonical ordering (symmetric pairs by `(i, j)`
//! lexicographic, then antisymmetric pairs, then diagonal) so that serialized
//! cross-correlation matrices are reproducible across runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{hermiticity_residual, unitarity_residual, ComplexMatrix};

/// Hermiticity tolerance for density matrices and generators.
pub const TOL_HERM: f64 = 1e-10;
/// Orthonormality tolerance for the generator Gram matrix.
pub const TOL_ORTH: f64 = 1e-10;
/// Unitarity tolerance `max |U†U - 1|`.
pub const TOL_UNIT: f64 = 1e-10;
/// Positive-semidefiniteness tolerance: eigenvalues may dip to `-TOL_PSD`.
pub const TOL_PSD: f64 = 1e-9;
/// Trace tolerance `|Tr ρ - 1|`.
pub const TOL_TR: f64 = 1e-10;

/// Orthonormal basis of su(d): d²−1 traceless Hermitian generators with
/// `Tr(g_k g_l) = δ_kl`.
#[derive(Debug, Clone)]
pub struct SuBasis {
    d: usize,
    generators: Vec<ComplexMatrix>,
    /// Nonzero entries `(row, col, value)` per generator; the generators are
    /// sparse by construction and the correlation module contracts over
    /// nonzeros only.
    nonzeros: Vec<Vec<(usize, usize, Complex64)>>,
}

impl SuBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of generators, d²−1.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &ComplexMatrix {
        &self.generators[k]
    }

    pub(crate) fn nonzeros(&self, k: usize) -> &[(usize, usize, Complex64)] {
        &self.nonzeros[k]
    }
}

/// Build the canonical orthonormal su(d) generator basis.
///
/// Ordering: symmetric pair generators `(|i⟩⟨j| + |j⟩⟨i|)/√2` for `i < j` in
/// `(i, j)` lexicographic order, then the antisymmetric pairs
/// `i(|j⟩⟨i| − |i⟩⟨j|)/√2` in the same order, then the `d−1` diagonal
/// generators `diag(1, …, 1, −k, 0, …)/√(k(k+1))`.
pub fn gellmann_basis(d: usize) -> Result<SuBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut generators = Vec::with_capacity(d * d - 1);
    for i in 0..d {
        for j in (i + 1)..d {
            let mut g = ComplexMatrix::zeros(d, d);
            g[(i, j)] = inv_sqrt2;
            g[(j, i)] = inv_sqrt2;
            generators.push(g);
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut g = ComplexMatrix::zeros(d, d);
            g[(j, i)] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
            g[(i, j)] = Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
            generators.push(g);
        }
    }
    for k in 1..d {
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut g = ComplexMatrix::zeros(d, d);
        for i in 0..k {
            g[(i, i)] = Complex64::new(norm, 0.0);
        }
        g[(k, k)] = Complex64::new(-(k as f64) * norm, 0.0);
        generators.push(g);
    }
    let nonzeros = generators
        .iter()
        .map(|g| {
            let mut nz = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    if g[(i, j)] != Complex64::ZERO {
                        nz.push((i, j, g[(i, j)]));
                    }
                }
            }
            nz
        })
        .collect();
    Ok(SuBasis {
        d,
        generators,
        nonzeros,
    })
}

/// A d-dimensional unitary, checked to `TOL_UNIT` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    d: usize,
    mat: ComplexMatrix,
}

impl Unitary {
    /// Wrap a matrix, enforcing `max |U†U − 1| ≤ TOL_UNIT`.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(mat, TOL_UNIT)
    }

    /// Wrap a matrix with a caller-chosen unitarity tolerance (dataset
    /// ingestion accepts looser experimental residuals than fresh samples).
    pub fn with_tolerance(mat: ComplexMatrix, tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape(format!(
                "unitary must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let residual = unitarity_residual(&mat);
        if residual > tol {
            return Err(Error::NotUnitary { residual, tol });
        }
        Ok(Unitary {
            d: mat.nrows(),
            mat,
        })
    }

    pub fn identity(d: usize) -> Self {
        Unitary {
            d,
            mat: ComplexMatrix::identity(d, d),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// Bipartite density matrix on C^dim_a ⊗ C^dim_b, stored in the product basis
/// `|i⟩_A|j⟩_B ↔ index i·dim_b + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    mat: ComplexMatrix,
}

/// Residuals reported by [`DensityMatrix::validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationReport {
    pub herm_residual: f64,
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub herm_ok: bool,
    pub psd_ok: bool,
    pub trace_ok: bool,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.herm_ok && self.psd_ok && self.trace_ok
    }

    fn failure_message(&self) -> String {
        let mut parts = Vec::new();
        if !self.herm_ok {
            parts.push(format!("hermiticity residual {:.3e}", self.herm_residual));
        }
        if !self.psd_ok {
            parts.push(format!("minimum eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if !self.trace_ok {
            parts.push(format!("trace deviation {:.3e}", self.trace_deviation));
        }
        parts.join(", ")
    }
}

impl DensityMatrix {
    /// Wrap a matrix as a bipartite state, enforcing Hermiticity, positivity
    /// (eigenvalues ≥ −`TOL_PSD`), and unit trace.
    pub fn new(dim_a: usize, dim_b: usize, mat: ComplexMatrix) -> Result<Self> {
        if dim_a < 2 || dim_b < 2 {
            return Err(Error::InvalidDimension(dim_a.min(dim_b)));
        }
        let n = dim_a * dim_b;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Shape(format!(
                "density matrix must be {n}x{n} for local dimensions {dim_a}x{dim_b}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let rho = DensityMatrix { dim_a, dim_b, mat };
        let report = rho.validate();
        if !report.is_pass() {
            return Err(Error::InvalidDensity(report.failure_message()));
        }
        Ok(rho)
    }

    /// Construct the projector onto a (normalized) pure state vector.
    pub fn from_pure(dim_a: usize, dim_b: usize, psi: &DVector<Complex64>) -> Result<Self> {
        if psi.len() != dim_a * dim_b {
            return Err(Error::Shape(format!(
                "state vector length {} does not match {dim_a}x{dim_b}",
                psi.len()
            )));
        }
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::Domain("zero state vector".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        let mat = &v * v.adjoint();
        DensityMatrix::new(dim_a, dim_b, mat)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total Hilbert-space dimension dim_a·dim_b.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Reduced state on party A (partial trace over B).
    pub fn reduced_a(&self) -> ComplexMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut out = ComplexMatrix::zeros(da, da);
        for i in 0..da {
            for m in 0..da {
                let mut acc = Complex64::ZERO;
                for j in 0..db {
                    acc += self.mat[(i * db + j, m * db + j)];
                }
                out[(i, m)] = acc;
            }
        }
        out
    }

    /// Reduced state on party B (partial trace over A).
    pub fn reduced_b(&self) -> ComplexMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut out = ComplexMatrix::zeros(db, db);
        for j in 0..db {
            for n in 0..db {
                let mut acc = Complex64::ZERO;
                for i in 0..da {
                    acc += self.mat[(i * db + j, i * db + n)];
                }
                out[(j, n)] = acc;
            }
        }
        out
    }

    /// Residual report against the domain tolerances; never errors.
    pub fn validate(&self) -> ValidationReport {
        let herm_residual = hermiticity_residual(&self.mat);
        let trace_deviation = (self.mat.trace() - Complex64::ONE).norm();
        // Eigenvalues of the Hermitian part; symmetrizing keeps the solver
        // honest when the Hermiticity check itself is about to fail.
        let herm = (&self.mat + self.mat.adjoint()).scale(0.5);
        let eigs = herm.symmetric_eigenvalues();
        let min_eigenvalue = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        ValidationReport {
            herm_residual,
            min_eigenvalue,
            trace_deviation,
            herm_ok: herm_residual <= TOL_HERM,
            psd_ok: min_eigenvalue >= -TOL_PSD,
            trace_ok: trace_deviation <= TOL_TR,
        }
    }
}

/// The maximally entangled state `(1/√d) Σ_i |ii⟩` as a density matrix.
pub fn max_entangled_state(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut psi = DVector::zeros(d * d);
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        psi[i * d + i] = amp;
    }
    DensityMatrix::from_pure(d, d, &psi)
}

/// Conjugate a state by a local unitary pair: `(A ⊗ B) ρ (A ⊗ B)†`.
pub fn apply_local(rho: &DensityMatrix, a: &Unitary, b: &Unitary) -> Result<DensityMatrix> {
    if a.d() != rho.dim_a() || b.d() != rho.dim_b() {
        return Err(Error::Shape(format!(
            "local unitaries {}x{} do not match state dimensions {}x{}",
            a.d(),
            b.d(),
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    let k = a.matrix().kronecker(b.matrix());
    let mat = &k * &rho.mat * k.adjoint();
    // Construction preserves the invariants; revalidate anyway so numerical
    // drift cannot slip through silently.
    DensityMatrix::new(rho.dim_a, rho.dim_b, mat)
}

/// Convenience: maximally mixed state on C^dim_a ⊗ C^dim_b.
pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
    let n = dim_a * dim_b;
    let mat = ComplexMatrix::identity(n, n).scale(1.0 / n as f64);
    DensityMatrix::new(dim_a, dim_b, mat)
}

/// Uhlmann fidelity `(Tr √(√a b √a))²` between states on the same space.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim_a() != b.dim_a() || a.dim_b() != b.dim_b() {
        return Err(Error::Shape(format!(
            "fidelity needs matching spaces, got {}x{} vs {}x{}",
            a.dim_a(),
            a.dim_b(),
            b.dim_a(),
            b.dim_b()
        )));
    }
    let sa = psd_sqrt(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    let herm = (&inner + inner.adjoint()).scale(0.5);
    let tr: f64 = herm
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    Ok((tr * tr).min(1.0))
}

/// Principal square root of a Hermitian PSD matrix, with tiny negative
/// eigenvalues clamped to zero.
fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let se = ((m + m.adjoint()).scale(0.5)).symmetric_eigen();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lk = se.eigenvalues[k].max(0.0).sqrt();
        if lk == 0.0 {
            continue;
        }
        let v = se.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[i] * v[j].conj() * lk;
            }
        }
    }
    out
}

/// Hilbert–Schmidt Gram matrix `Tr(g_k g_l)` of a generator set.
pub fn gram_matrix(basis: &SuBasis) -> DMatrix<f64> {
    let n = basis.len();
    let mut gram = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let mut acc = Complex64::ZERO;
            for &(i, j, v) in basis.nonzeros(k) {
                // Tr(g_k g_l) = Σ_ij (g_k)_ij (g_l)_ji
                acc += v * basis.generator(l)[(j, i)];
            }
            gram[(k, l)] = acc.re;
        }
    }
    gram
}
