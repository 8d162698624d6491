//! File formats: versioned JSON schemas for states, measurement datasets,
//! tomography counts, and experiment configs, plus CSV emitters for the
//! plottable outputs (boundary curves, moment points, batch clouds,
//! correlator histograms).
//!
//! All JSON files carry a `schema_version` field so readers can reject
//! payloads written by an incompatible release. Complex matrices are stored
//! as nested arrays of `[re, im]` pairs (see [`crate::matrix`]).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{matrix_from_json, matrix_to_json, unitarity_residual};
use crate::qudit::{DensityMatrix, Unitary};
use crate::randmeas::{Observable, SettingData, SettingRecord};
use crate::tomography::TomoData;

/// Version stamped into every JSON file this module writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Ingestion accepts recorded unitaries up to this unitarity residual;
/// experimental calibration data is noisier than freshly sampled matrices.
pub const TOL_INGEST_UNITARY: f64 = 1e-6;

/// Serialize any value as pretty-printed JSON with a trailing newline.
/// Struct field order is preserved, so output bytes are deterministic.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Deserialize a JSON file; parse failures carry line/column context and
/// filesystem failures name the path.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn check_version(found: u32, what: &str) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Validation(format!(
            "{what}: schema_version {found} is not supported (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Density-matrix files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StateFile {
    schema_version: u32,
    dim_a: usize,
    dim_b: usize,
    matrix: Value,
}

/// Write a density matrix to a JSON file.
pub fn write_state(rho: &DensityMatrix, path: &Path) -> Result<()> {
    let file = StateFile {
        schema_version: SCHEMA_VERSION,
        dim_a: rho.dim_a(),
        dim_b: rho.dim_b(),
        matrix: matrix_to_json(rho.matrix()),
    };
    write_json(path, &file)
}

/// Read a density matrix from a JSON file, re-validating trace, hermiticity,
/// and positivity on the way in.
pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    let file: StateFile = read_json(path)?;
    check_version(file.schema_version, "state file")?;
    let mat = matrix_from_json(&file.matrix)?;
    DensityMatrix::new(file.dim_a, file.dim_b, mat)
}

// ---------------------------------------------------------------------------
// Randomized-measurement datasets
// ---------------------------------------------------------------------------

/// Free-form provenance attached to a dataset: the seed that generated it
/// (if simulated) and an arbitrary JSON blob of run parameters.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct DatasetMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
}

/// A validated randomized-measurement dataset: the observable spectrum, one
/// record per setting, and the worst unitarity residual seen during
/// ingestion (useful for judging calibration quality of recorded settings).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub d: usize,
    pub observable: Observable,
    pub records: Vec<SettingRecord>,
    pub metadata: DatasetMetadata,
    pub max_unitarity_residual: f64,
}

impl Dataset {
    /// Correlator values for every record: counts are converted through the
    /// observable spectrum, exact entries pass through unchanged.
    pub fn correlators(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| crate::randmeas::x_from_counts(r, &self.observable))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    schema_version: u32,
    d: usize,
    lambda: Vec<f64>,
    #[serde(default)]
    metadata: DatasetMetadata,
    records: Vec<RecordFile>,
}

#[derive(Serialize, Deserialize)]
struct RecordFile {
    ua: Value,
    ub: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
}

/// Write a dataset to a JSON file. Counts serialize as a d×d nested array
/// (outcome `m` on A indexes the row, `n` on B the column).
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let d = dataset.d;
    let records = dataset
        .records
        .iter()
        .map(|rec| {
            let (counts, x) = match &rec.data {
                SettingData::Counts(c) => {
                    let nested = (0..d)
                        .map(|m| c[m * d..(m + 1) * d].to_vec())
                        .collect::<Vec<_>>();
                    (Some(nested), None)
                }
                SettingData::Exact(v) => (None, Some(*v)),
            };
            RecordFile {
                ua: matrix_to_json(rec.ua.matrix()),
                ub: matrix_to_json(rec.ub.matrix()),
                counts,
                x,
            }
        })
        .collect();
    let file = DatasetFile {
        schema_version: SCHEMA_VERSION,
        d,
        lambda: dataset.observable.eigenvalues().to_vec(),
        metadata: dataset.metadata.clone(),
        records,
    };
    write_json(path, &file)
}

/// Read and validate a dataset file.
///
/// Every record's unitaries must be d×d with unitarity residual at most
/// [`TOL_INGEST_UNITARY`]; counts must form a d×d table; exactly one of
/// `counts`/`x` must be present. Validation failures name the offending
/// record index.
pub fn ingest(path: &Path) -> Result<Dataset> {
    let file: DatasetFile = read_json(path)?;
    check_version(file.schema_version, "dataset file")?;
    let d = file.d;
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let observable = Observable::new(file.lambda)?;
    if observable.d() != d {
        return Err(Error::Validation(format!(
            "dataset: lambda has {} entries but d = {d}",
            observable.d()
        )));
    }

    let mut records = Vec::with_capacity(file.records.len());
    let mut worst = 0.0_f64;
    for (idx, rec) in file.records.into_iter().enumerate() {
        let ua = ingest_unitary(&rec.ua, d, idx, "ua", &mut worst)?;
        let ub = ingest_unitary(&rec.ub, d, idx, "ub", &mut worst)?;
        let data = match (rec.counts, rec.x) {
            (Some(counts), None) => {
                if counts.len() != d || counts.iter().any(|row| row.len() != d) {
                    return Err(Error::Shape(format!(
                        "record {idx}: counts must be a {d}×{d} table"
                    )));
                }
                SettingData::Counts(counts.into_iter().flatten().collect())
            }
            (None, Some(x)) => SettingData::Exact(x),
            (Some(_), Some(_)) => {
                return Err(Error::Validation(format!(
                    "record {idx}: has both counts and an exact correlator"
                )));
            }
            (None, None) => {
                return Err(Error::Validation(format!(
                    "record {idx}: has neither counts nor an exact correlator"
                )));
            }
        };
        records.push(SettingRecord { ua, ub, data });
    }

    Ok(Dataset {
        d,
        observable,
        records,
        metadata: file.metadata,
        max_unitarity_residual: worst,
    })
}

fn ingest_unitary(
    value: &Value,
    d: usize,
    idx: usize,
    side: &str,
    worst: &mut f64,
) -> Result<Unitary> {
    let mat = matrix_from_json(value)
        .map_err(|e| Error::Validation(format!("record {idx}: {side}: {e}")))?;
    if mat.nrows() != d || mat.ncols() != d {
        return Err(Error::Shape(format!(
            "record {idx}: {side} is {}×{}, expected {d}×{d}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    let residual = unitarity_residual(&mat);
    *worst = worst.max(residual);
    Unitary::with_tolerance(mat, TOL_INGEST_UNITARY)
        .map_err(|e| Error::Validation(format!("record {idx}: {side}: {e}")))
}

// ---------------------------------------------------------------------------
// Tomography count files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TomoFile {
    schema_version: u32,
    d: usize,
    /// Nested as `counts[alpha][beta][i][j]` over the d+1 bases per side.
    counts: Vec<Vec<Vec<Vec<u64>>>>,
}

/// Write two-party mutually-unbiased-basis counts to a JSON file.
///
/// `counts` is flat with index `((α·(d+1) + β)·d + i)·d + j`, matching
/// [`TomoData::from_counts`].
pub fn write_tomo_counts(d: usize, counts: &[u64], path: &Path) -> Result<()> {
    let nb = d + 1;
    if counts.len() != nb * nb * d * d {
        return Err(Error::Shape(format!(
            "tomography counts: expected {} entries for d = {d}, found {}",
            nb * nb * d * d,
            counts.len()
        )));
    }
    let nested = (0..nb)
        .map(|alpha| {
            (0..nb)
                .map(|beta| {
                    (0..d)
                        .map(|i| {
                            (0..d)
                                .map(|j| counts[((alpha * nb + beta) * d + i) * d + j])
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let file = TomoFile {
        schema_version: SCHEMA_VERSION,
        d,
        counts: nested,
    };
    write_json(path, &file)
}

/// Read a tomography count file into a [`TomoData`] table.
pub fn read_tomo_counts(path: &Path) -> Result<TomoData> {
    let file: TomoFile = read_json(path)?;
    check_version(file.schema_version, "tomography file")?;
    let d = file.d;
    let nb = d + 1;
    if file.counts.len() != nb {
        return Err(Error::Shape(format!(
            "tomography file: expected {nb} A-side bases, found {}",
            file.counts.len()
        )));
    }
    let mut flat = Vec::with_capacity(nb * nb * d * d);
    for (alpha, block_a) in file.counts.iter().enumerate() {
        if block_a.len() != nb {
            return Err(Error::Shape(format!(
                "tomography file: basis block ({alpha}, ·) has {} B-side bases, expected {nb}",
                block_a.len()
            )));
        }
        for (beta, block) in block_a.iter().enumerate() {
            if block.len() != d || block.iter().any(|row| row.len() != d) {
                return Err(Error::Shape(format!(
                    "tomography file: basis block ({alpha}, {beta}) must be a {d}×{d} table"
                )));
            }
            flat.extend(block.iter().flatten().copied());
        }
    }
    TomoData::from_counts(d, &flat)
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Which bipartite state the pipeline prepares.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// Maximally entangled state of two d-level systems.
    Mes,
    /// Phase-averaged maximally entangled state: ensemble average over
    /// `ensemble` random phase profiles drawn uniformly from `[-phimax, phimax]`
    /// on each side.
    Dephased { phimax: f64, ensemble: usize },
    /// Load a density matrix from a state JSON file.
    File { path: String },
}

/// Which single-party observable spectrum the pipeline measures.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// Equally spaced eigenvalues, shifted and scaled to be traceless with
    /// Σλ² = d − 1.
    #[default]
    Linear,
    /// Explicit eigenvalue list (must satisfy the same two invariants).
    Eigenvalues { lambda: Vec<f64> },
}

impl ObservableSpec {
    /// Materialize the observable for local dimension `d`.
    pub fn build(&self, d: usize) -> Result<Observable> {
        match self {
            ObservableSpec::Linear => Observable::default_linear(d),
            ObservableSpec::Eigenvalues { lambda } => {
                let obs = Observable::new(lambda.clone())?;
                if obs.d() != d {
                    return Err(Error::InvalidObservable(format!(
                        "eigenvalue list has {} entries but d = {d}",
                        obs.d()
                    )));
                }
                Ok(obs)
            }
        }
    }
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_k_sigma() -> f64 {
    2.0
}
fn default_grid_size() -> usize {
    512
}
fn default_histogram_bins() -> usize {
    50
}

/// Everything needed to reproduce one end-to-end run: state preparation,
/// number of settings, events per setting (or exact mode), seed, optional
/// per-setting phase noise, observable, and analysis knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// Local dimension of each party.
    pub d: usize,
    /// State preparation.
    pub state: StateSpec,
    /// Number of Haar-random measurement settings.
    pub n_unitaries: usize,
    /// Coincidence events per setting; `None` evaluates exact correlators.
    #[serde(default)]
    pub n_events: Option<u64>,
    /// Master seed; every random choice in the run derives from it.
    pub seed: u64,
    /// When set, each setting is preceded by independent diagonal phase
    /// noise with phases uniform in `[-phase_noise, phase_noise]`.
    #[serde(default)]
    pub phase_noise: Option<f64>,
    #[serde(default)]
    pub observable: ObservableSpec,
    /// Number of standard deviations of headroom required for certification.
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
    /// Points per certification boundary curve.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Fourth-moment calibration override; defaults to the built-in constant
    /// for the linear observable (see [`crate::pipeline::default_kappa4`]).
    #[serde(default)]
    pub kappa4: Option<f64>,
    /// Batch size for the moment-cloud figure; defaults to
    /// `min(n_unitaries, 800)`.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
}

impl ExperimentConfig {
    /// Check field ranges that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        check_version(self.schema_version, "experiment config")?;
        if self.d < 2 {
            return Err(Error::InvalidDimension(self.d));
        }
        if self.n_unitaries == 0 {
            return Err(Error::Validation(
                "config: n_unitaries must be at least 1".into(),
            ));
        }
        if self.n_events == Some(0) {
            return Err(Error::Validation(
                "config: n_events must be at least 1 when present".into(),
            ));
        }
        if !(self.k_sigma >= 0.0) {
            return Err(Error::Validation(format!(
                "config: k_sigma must be nonnegative, got {}",
                self.k_sigma
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::Validation(
                "config: grid_size must be at least 2".into(),
            ));
        }
        if let Some(k) = self.kappa4 {
            if !(k > 0.0) {
                return Err(Error::Validation(format!(
                    "config: kappa4 override must be positive, got {k}"
                )));
            }
        }
        if self.batch_size == Some(0) {
            return Err(Error::Validation(
                "config: batch_size must be at least 1 when present".into(),
            ));
        }
        if self.histogram_bins == 0 {
            return Err(Error::Validation(
                "config: histogram_bins must be at least 1".into(),
            ));
        }
        match &self.state {
            StateSpec::Dephased { phimax, ensemble } => {
                if !(*phimax >= 0.0) {
                    return Err(Error::Validation(format!(
                        "config: dephased phimax must be nonnegative, got {phimax}"
                    )));
                }
                if *ensemble == 0 {
                    return Err(Error::Validation(
                        "config: dephased ensemble size must be at least 1".into(),
                    ));
                }
            }
            StateSpec::Mes | StateSpec::File { .. } => {}
        }
        Ok(())
    }
}

/// Read an experiment config from a JSON file and validate it.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = read_json(path)?;
    config.validate()?;
    Ok(config)
}

/// Write an experiment config to a JSON file.
pub fn write_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    write_json(path, config)
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

/// Write a boundary curve as `s2,s4_min` rows.
pub fn write_curve_csv(curve: &crate::boundary::BoundaryCurve, path: &Path) -> Result<()> {
    let mut out = String::from("s2,s4_min\n");
    for (s2, s4) in curve.points() {
        out.push_str(&format!("{s2},{s4}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a single moment estimate as one `s2,s4,sigma_s2,sigma_s4` row.
pub fn write_point_csv(est: &crate::randmeas::MomentEstimate, path: &Path) -> Result<()> {
    let mut out = String::from("s2,s4,sigma_s2,sigma_s4\n");
    out.push_str(&format!(
        "{},{},{},{}\n",
        est.s2, est.s4, est.sigma_s2, est.sigma_s4
    ));
    fs::write(path, out)?;
    Ok(())
}

/// Write a batch moment cloud as `s2,s4` rows.
pub fn write_batches_csv(batches: &[crate::correlation::MomentPair], path: &Path) -> Result<()> {
    let mut out = String::from("s2,s4\n");
    for pair in batches {
        out.push_str(&format!("{},{}\n", pair.s2, pair.s4));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Equal-width histogram of correlator samples.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bin `xs` into `n_bins` equal-width bins spanning the sample range.
    /// A constant sample is given a unit-width window around its value so
    /// the histogram stays well defined.
    pub fn build(xs: &[f64], n_bins: usize) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyData("histogram needs at least one sample"));
        }
        if n_bins == 0 {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("histogram input contains non-finite values".into()));
        }
        let mut lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0u64; n_bins];
        for &x in xs {
            let mut bin = ((x - lo) / width) as usize;
            if bin >= n_bins {
                bin = n_bins - 1; // right edge belongs to the last bin
            }
            counts[bin] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Counts rescaled so the tallest bin reads 1.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.counts.iter().max().copied().unwrap_or(0);
        if max == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / max as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Write a histogram as `bin_lo,bin_hi,count,normalized` rows, where the
/// `normalized` column is scaled so the tallest bin reads 1.
pub fn write_histogram_csv(hist: &Histogram, path: &Path) -> Result<()> {
    let mut out = String::from("bin_lo,bin_hi,count,normalized\n");
    let width = hist.bin_width();
    let normalized = hist.normalized();
    for (i, (&count, norm)) in hist.counts.iter().zip(normalized).enumerate() {
        let lo = hist.lo + i as f64 * width;
        let hi = if i + 1 == hist.counts.len() {
            hist.hi
        } else {
            hist.lo + (i + 1) as f64 * width
        };
        out.push_str(&format!("{lo},{hi},{count},{norm}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}
