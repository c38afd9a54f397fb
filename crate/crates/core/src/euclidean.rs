//! Euclidean embeddability: Gram matrices, PSD embedding, the square-root
//! link to negative type, the Gaussian-kernel probe, and power transforms.
//!
//! The Gram matrix of an m-point metric space (base point: the last point)
//! is positive semi-definite exactly when the space embeds in some R^k, and
//! its rank is the minimal such k. Negative type and Euclidean embeddability
//! are linked through the square-root transform: `(X, d)` is of negative type
//! exactly when `(X, sqrt(d))` is Euclidean.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::birkhoff::span_basis_one_perp;
use crate::error::{Error, Result};
use crate::matrices::{DistanceMatrix, GaugeMatrix};
use crate::spectral::{self, conditional_spectrum, sym_eigen};

/// Default relative tolerance for PSD verdicts and embeddings.
pub const DEFAULT_EMBED_TOL: f64 = 1e-9;

/// Gram matrix of an m-point space with the last point as base:
/// `(m-1) x (m-1)` with entries `(d(i, m)^2 + d(j, m)^2 - d(i, j)^2) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    /// Point count of the source space.
    m: usize,
    entries: DMatrix<f64>,
}

impl GramMatrix {
    pub fn new(m: usize, entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if m != rows + 1 {
            return Err(Error::DimensionMismatch(m, rows + 1));
        }
        let scale = entries.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for i in 0..rows {
            for j in (i + 1)..rows {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > 1e-12 * scale {
                    return Err(Error::NotSymmetric {
                        i: i + 1,
                        j: j + 1,
                        gap,
                    });
                }
            }
        }
        Ok(Self { m, entries })
    }

    /// Source point count (the matrix itself is (m-1) x (m-1)).
    pub fn m(&self) -> usize {
        self.m
    }

    /// The base point in 1-based indexing: always the last point.
    pub fn base_point(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Gram matrix of a distance matrix, base point last.
pub fn gram(d: &DistanceMatrix) -> GramMatrix {
    let m = d.n();
    assert!(m >= 2, "Gram construction needs at least two points");
    let base = m - 1;
    let entries = DMatrix::from_fn(m - 1, m - 1, |i, j| {
        let di = d.entry(i, base);
        let dj = d.entry(j, base);
        let dij = d.entry(i, j);
        0.5 * (di * di + dj * dj - dij * dij)
    });
    GramMatrix { m, entries }
}

/// Recover the distances from a Gram matrix:
/// `d(i, m)^2 = G_ii`, `d(i, j)^2 = G_ii + G_jj - 2 G_ij`. Squared distances
/// in [-1e-12, 0) are clamped to zero; anything lower is an error.
pub fn distances_from_gram(g: &GramMatrix) -> Result<DistanceMatrix> {
    let m = g.m();
    let sq = |value: f64, i: usize, j: usize| -> Result<f64> {
        if value < -1e-12 {
            return Err(Error::NegativeSquaredDistance {
                i: i + 1,
                j: j + 1,
                value,
            });
        }
        Ok(value.max(0.0).sqrt())
    };
    let mut rows = vec![vec![0.0; m]; m];
    for i in 0..m - 1 {
        let v = sq(g.entry(i, i), i, m - 1)?;
        rows[i][m - 1] = v;
        rows[m - 1][i] = v;
        for j in (i + 1)..m - 1 {
            let v = sq(g.entry(i, i) + g.entry(j, j) - 2.0 * g.entry(i, j), i, j)?;
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    DistanceMatrix::from_rows(&rows)
}

/// PSD verdict and numerical rank of a Gram matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdReport {
    pub is_psd: bool,
    pub rank: usize,
    /// Eigenvalues ascending.
    pub spectrum: Vec<f64>,
}

/// Eigenvalue-based PSD test: `is_psd` iff the smallest eigenvalue is at
/// least `-tol * max(1, largest)`; the rank counts eigenvalues above that
/// threshold.
pub fn psd_rank(g: &GramMatrix, tol: f64) -> PsdReport {
    let (spectrum, _) = sym_eigen(g.as_matrix());
    let max_eig = spectrum.last().copied().unwrap_or(0.0);
    let threshold = tol * max_eig.max(1.0);
    let min_eig = spectrum.first().copied().unwrap_or(0.0);
    PsdReport {
        is_psd: min_eig >= -threshold,
        rank: spectrum.iter().filter(|&&v| v > threshold).count(),
        spectrum,
    }
}

/// Point coordinates realizing a distance matrix in R^dim.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl Embedding {
    /// Pairwise distances of the embedded points.
    pub fn distance_matrix(&self) -> Result<DistanceMatrix> {
        let n = self.points.len();
        let g = GaugeMatrix::from_fn(n, |i, j| {
            self.points[i]
                .iter()
                .zip(&self.points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })?;
        DistanceMatrix::new(g)
    }
}

/// Embed a metric in Euclidean space through the spectral factorization of
/// its Gram matrix: `G = V L V^T`, points are rows of `V L^{1/2}` on the
/// eigenvalues above tolerance (others are clamped to zero), the base point
/// at the origin. Uses eigendecomposition rather than Cholesky so that
/// rank-deficient PSD matrices embed in their minimal dimension.
pub fn embed(d: &DistanceMatrix, tol: f64) -> Result<Embedding> {
    let g = gram(d);
    let (spectrum, vectors) = sym_eigen(g.as_matrix());
    let max_eig = spectrum.last().copied().unwrap_or(0.0);
    let threshold = tol * max_eig.max(1.0);
    if let Some(&min_eig) = spectrum.first() {
        if min_eig < -threshold {
            return Err(Error::NotEmbeddable { min_eig });
        }
    }
    // descending order puts the dominant axes first
    let kept: Vec<usize> = (0..spectrum.len())
        .rev()
        .filter(|&idx| spectrum[idx] > threshold)
        .collect();
    let dim = kept.len();
    let m = d.n();
    let mut points = vec![vec![0.0; dim]; m];
    for (axis, &idx) in kept.iter().enumerate() {
        let scale = spectrum[idx].sqrt();
        for i in 0..m - 1 {
            points[i][axis] = vectors[(i, idx)] * scale;
        }
    }
    Ok(Embedding { dim, points })
}

/// A metric is Euclidean exactly when its Gram matrix is PSD.
pub fn is_euclidean(d: &DistanceMatrix, tol: f64) -> bool {
    psd_rank(&gram(d), tol).is_psd
}

/// Log-spaced default grid for [`schoenberg_check`]: 17 points covering
/// [1e-3, 1e3]. A finite grid can only refute, never confirm.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..17)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 16.0))
        .collect()
}

/// Gaussian-kernel probe: for each lambda, the kernel
/// `K_ij = exp(-lambda d_ij^2)` must be conditionally positive semi-definite
/// on the zero-sum hyperplane. Returns the conjunction over the grid.
pub fn schoenberg_check(d: &DistanceMatrix, lambdas: &[f64], tol: f64) -> bool {
    assert!(
        !lambdas.is_empty(),
        "schoenberg_check needs at least one lambda"
    );
    let n = d.n();
    if n < 2 {
        return true;
    }
    let basis = span_basis_one_perp(n);
    lambdas.iter().all(|&lambda| {
        let kernel = DMatrix::from_fn(n, n, |i, j| {
            let dij = d.entry(i, j);
            (-lambda * dij * dij).exp()
        });
        let spectrum = conditional_spectrum(&kernel, &basis, f64::INFINITY)
            .expect("Householder basis is orthonormal");
        spectrum
            .eigenvalues
            .first()
            .map(|&min| min >= -tol)
            .unwrap_or(true)
    })
}

/// Agreement report for the square-root link.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqrtLinkReport {
    /// Is `(X, sqrt(d))` Euclidean?
    pub sqrt_euclidean: bool,
    /// Is `(X, d)` of negative type?
    pub negative_type: bool,
    pub agree: bool,
}

/// Evaluate both sides of the square-root link theorem: `(X, d^{1/2})` is
/// Euclidean iff `(X, d)` is of negative type. Disagreement is a numerical
/// red flag, never a valid state.
pub fn negative_type_sqrt_consistency(d: &DistanceMatrix, tol: f64) -> SqrtLinkReport {
    let sqrt_euclidean = is_euclidean(
        &d.power_transform(0.5).expect("exponent 1/2 is in range"),
        tol,
    );
    let negative_type = spectral::is_negative_type(d, tol).0;
    SqrtLinkReport {
        sqrt_euclidean,
        negative_type,
        agree: sqrt_euclidean == negative_type,
    }
}

/// For a Euclidean input, `d^c` with `0 < c <= 1` must stay Euclidean.
/// Errors if the input is not Euclidean in the first place.
pub fn power_preserves_euclidean_check(d: &DistanceMatrix, c: f64, tol: f64) -> Result<bool> {
    if !is_euclidean(d, tol) {
        return Err(Error::Precondition("input metric is not Euclidean".into()));
    }
    Ok(is_euclidean(&d.power_transform(c)?, tol))
}

/// The three computable faces of the Euclidean-equivalence theorem, for
/// cross-checks on corpora: the Gram PSD criterion (a decision procedure),
/// conditional negative semi-definiteness of the entrywise-squared matrix on
/// the zero-sum hyperplane, and the Gaussian-kernel grid probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceProbe {
    pub gram_psd: bool,
    pub squared_cond_nsd: bool,
    pub schoenberg: bool,
    /// Smallest conditional eigenvalue of the squared-distance matrix,
    /// reported for boundary diagnostics.
    pub squared_min_eig: f64,
}

pub fn euclidean_equivalence_probe(d: &DistanceMatrix, tol: f64) -> EquivalenceProbe {
    let gram_psd = is_euclidean(d, tol);
    let n = d.n();
    // the entrywise square is a gauge, not a metric; test it directly
    let squared = d.as_gauge().entrywise_sq();
    let (squared_cond_nsd, squared_min_eig) = if n < 2 {
        (true, 0.0)
    } else {
        let basis = span_basis_one_perp(n);
        let scale = spectral::spectral_radius(squared.as_matrix()).max(1.0);
        let spectrum = conditional_spectrum(squared.as_matrix(), &basis, f64::INFINITY)
            .expect("Householder basis is orthonormal");
        (
            spectrum.max_eig <= tol * scale,
            spectrum.eigenvalues.first().copied().unwrap_or(0.0),
        )
    };
    let schoenberg = schoenberg_check(d, &default_lambda_grid(), tol);
    EquivalenceProbe {
        gram_psd,
        squared_cond_nsd,
        schoenberg,
        squared_min_eig,
    }
}
