//! Kronecker product, vectorization, and conditional definiteness tests.
//!
//! The equality question for the two distances reduces to definiteness of
//! `DY (x) DX` on the span of the Birkhoff polytope, which factors through
//! the *conditional spectrum* of each matrix on the hyperplane orthogonal to
//! the all-ones vector. A distance matrix is of *negative type* when that
//! conditional spectrum is nonpositive; for such pairs the coupling maximum
//! is attained at a permutation matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::birkhoff::span_basis_one_perp;
use crate::error::{Error, Result};
use crate::matrices::DistanceMatrix;

/// Default relative tolerance for negative-type verdicts: an eigenvalue
/// counts as <= 0 when it is below `tol * max(1, spectral radius)`.
pub const DEFAULT_NEGTYPE_TOL: f64 = 1e-9;

/// Cap for the full (n-1)^2-dimensional tensor check; it is a validation
/// tool, the production path tests each factor instead.
pub const TENSOR_CHECK_CAP: usize = 12;

/// Kronecker product. For `a` of shape p x q and `b` of shape r x s the
/// result has shape pr x qs with block `a[i][j] * b` at block position (i, j).
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = a.shape();
    let (r, s) = b.shape();
    let mut out = DMatrix::zeros(p * r, q * s);
    for i in 0..p {
        for j in 0..q {
            let aij = a[(i, j)];
            for k in 0..r {
                for l in 0..s {
                    out[(i * r + k, j * s + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major flattening: stacks the columns of `a` on top of one another.
pub fn vectorize(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Both sides of the identity `tr(A^T B C D^T) = vec(A)^T (D (x) B) vec(C)`,
/// returned as (trace side, Kronecker side) for validation. Shapes must
/// satisfy A: p x q, B: p x r, C: r x s, D: q x s.
pub fn trace_kron_identity_check(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let (p, q) = a.shape();
    let (pb, r) = b.shape();
    let (rc, s) = c.shape();
    let (qd, sd) = d.shape();
    if pb != p || rc != r || qd != q || sd != s {
        return Err(Error::DimensionMismatch(p * q, pb * r));
    }
    let lhs = (a.transpose() * b * c * d.transpose()).trace();
    let rhs = (vectorize(a).transpose() * kron(d, b) * vectorize(c))[(0, 0)];
    Ok((lhs, rhs))
}

/// Eigenvalues ascending, eigenvector columns in matching order with the
/// first component of magnitude above 1e-12 made positive.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // guard against accumulated asymmetry from upstream products
    let symmetrized = (m + m.transpose()).map(|x| 0.5 * x);
    let decomp = symmetrized.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        decomp.eigenvalues[i]
            .partial_cmp(&decomp.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = decomp.eigenvectors.column(src).clone_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let (values, _) = sym_eigen(m);
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Spectrum of a symmetric matrix restricted to a subspace, with a witness
/// vector when the restriction has a positive direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionalSpectrum {
    /// Eigenvalues of `F^T A F`, ascending.
    pub eigenvalues: Vec<f64>,
    pub max_eig: f64,
    /// `F * (top eigenvector)`, unit length, sign fixed by the first nonzero
    /// component; present when `max_eig` exceeds the caller's tolerance.
    /// When F spans the hyperplane orthogonal to the all-ones vector the
    /// witness coordinates sum to zero and satisfy `w^T A w > 0`.
    pub witness: Option<Vec<f64>>,
}

/// Eigenvalues of `F^T A F` for an orthonormal basis F of a subspace.
/// `witness_tol` controls when a positive direction is materialized.
pub fn conditional_spectrum(
    a: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    witness_tol: f64,
) -> Result<ConditionalSpectrum> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if basis.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(a.nrows(), basis.nrows()));
    }
    let gram = basis.transpose() * basis;
    let dev = (&gram - DMatrix::identity(gram.nrows(), gram.ncols()))
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if dev > 1e-10 {
        return Err(Error::NotOrthonormal(dev));
    }
    let restricted = basis.transpose() * a * basis;
    let (values, vectors) = sym_eigen(&restricted);
    let max_eig = values.last().copied().unwrap_or(0.0);
    let witness = if !values.is_empty() && max_eig > witness_tol {
        let top = vectors.column(values.len() - 1);
        let mut w = basis * top;
        let norm = w.norm();
        if norm > 0.0 {
            w /= norm;
        }
        if let Some(first) = w.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                w.neg_mut();
            }
        }
        Some(w.iter().copied().collect())
    } else {
        None
    };
    Ok(ConditionalSpectrum {
        eigenvalues: values,
        max_eig,
        witness,
    })
}

/// Negative-type test: is the distance matrix conditionally negative
/// semi-definite on the hyperplane orthogonal to the all-ones vector?
///
/// The verdict is `max_eig <= tol * max(1, spectral radius)`; the spectrum
/// and (for a failing matrix) a positivity witness are returned either way.
pub fn is_negative_type(d: &DistanceMatrix, tol: f64) -> (bool, ConditionalSpectrum) {
    let n = d.n();
    if n < 2 {
        return (
            true,
            ConditionalSpectrum {
                eigenvalues: Vec::new(),
                max_eig: 0.0,
                witness: None,
            },
        );
    }
    let basis = span_basis_one_perp(n);
    let effective_tol = tol * spectral_radius(d.as_matrix()).max(1.0);
    let spectrum = conditional_spectrum(d.as_matrix(), &basis, effective_tol)
        .expect("Householder basis is orthonormal");
    (spectrum.max_eig <= effective_tol, spectrum)
}

/// Full tensor validation: when both factors are of negative type, the
/// restriction of `DY (x) DX` to the span of the Birkhoff polytope must be
/// positive semi-definite. Returns the verdict and the restricted spectrum.
pub fn tensor_cpsd_check(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    tol: f64,
) -> Result<(bool, Vec<f64>)> {
    let n = dx.n();
    if dy.n() != n {
        return Err(Error::DimensionMismatch(n, dy.n()));
    }
    if n > TENSOR_CHECK_CAP {
        return Err(Error::TensorCap {
            n,
            cap: TENSOR_CHECK_CAP,
        });
    }
    let (ok_x, _) = is_negative_type(dx, DEFAULT_NEGTYPE_TOL);
    if !ok_x {
        return Err(Error::Precondition(
            "first factor is not of negative type".into(),
        ));
    }
    let (ok_y, _) = is_negative_type(dy, DEFAULT_NEGTYPE_TOL);
    if !ok_y {
        return Err(Error::Precondition(
            "second factor is not of negative type".into(),
        ));
    }
    let f = span_basis_one_perp(n);
    let ff = kron(&f, &f);
    let restricted = ff.transpose() * kron(dy.as_matrix(), dx.as_matrix()) * ff;
    let (values, _) = sym_eigen(&restricted);
    let min_eig = values.first().copied().unwrap_or(0.0);
    Ok((min_eig >= -tol, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::matrices::GaugeMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn kron_identity_and_diagonal() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(kron(&i2, &i2), DMatrix::identity(4, 4));

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        let k = kron(&a, &b);
        assert_eq!(
            k,
            DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0, 6.0, 8.0]))
        );
    }

    /// Multisets agree after sorting, within an absolute tolerance.
    fn assert_multiset_eq(mut a: Vec<f64>, mut b: Vec<f64>, tol: f64) {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= tol, "{x} vs {y} beyond {tol}");
        }
    }

    #[test]
    fn kron_spectrum_is_pairwise_products() {
        let a = catalog::random_gauge(3, 11).into_matrix();
        let b = catalog::random_gauge(3, 12).into_matrix();
        let (sa, _) = sym_eigen(&a);
        let (sb, _) = sym_eigen(&b);
        let mut products = Vec::new();
        for x in &sa {
            for y in &sb {
                products.push(x * y);
            }
        }
        let (sk, _) = sym_eigen(&kron(&a, &b));
        assert_multiset_eq(sk, products, 1e-8);
    }

    #[test]
    fn vectorize_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(vectorize(&i2).as_slice(), &[1.0, 0.0, 0.0, 1.0]);

        // vec(a b^T) = b (x) a
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 4.0]);
        let outer = &a * b.transpose();
        assert_eq!(vectorize(&outer).as_slice(), &[3.0, 6.0, 4.0, 8.0]);
        let kron_ba = kron(
            &DMatrix::from_column_slice(2, 1, b.as_slice()),
            &DMatrix::from_column_slice(2, 1, a.as_slice()),
        );
        assert_eq!(vectorize(&outer).as_slice(), kron_ba.as_slice());

        assert!(vectorize(&DMatrix::<f64>::zeros(3, 2))
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn trace_kron_identity_on_identities() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let (lhs, rhs) = trace_kron_identity_check(&i2, &i2, &i2, &i2).unwrap();
        assert_eq!(lhs, 2.0);
        assert_eq!(rhs, 2.0);
    }

    #[test]
    fn trace_kron_identity_random() {
        for seed in 0..20u64 {
            let a = catalog::random_gauge(3, 4 * seed).into_matrix();
            let b = catalog::random_gauge(3, 4 * seed + 1).into_matrix();
            let c = catalog::random_gauge(3, 4 * seed + 2).into_matrix();
            let d = catalog::random_gauge(3, 4 * seed + 3).into_matrix();
            let (lhs, rhs) = trace_kron_identity_check(&a, &b, &c, &d).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditional_spectrum_negative_identity() {
        let a = DMatrix::<f64>::identity(4, 4).map(|x| -x);
        let f = span_basis_one_perp(4);
        let cs = conditional_spectrum(&a, &f, 1e-9).unwrap();
        for v in &cs.eigenvalues {
            assert_relative_eq!(*v, -1.0, max_relative = 1e-12);
        }
        assert!(cs.witness.is_none());
    }

    #[test]
    fn conditional_spectrum_equilateral_is_minus_one() {
        // all-ones off-diagonal = J - I; on the zero-sum hyperplane Jv = 0
        let a = GaugeMatrix::from_fn(5, |_, _| 1.0).unwrap();
        let f = span_basis_one_perp(5);
        let cs = conditional_spectrum(a.as_matrix(), &f, 1e-9).unwrap();
        for v in &cs.eigenvalues {
            assert_relative_eq!(*v, -1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn conditional_spectrum_rejects_skew_basis() {
        let a = DMatrix::<f64>::identity(3, 3);
        let skew = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            conditional_spectrum(&a, &skew, 1e-9),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn k32_is_not_negative_type_with_witness() {
        let (d, _) = catalog::k32_space();
        let (verdict, cs) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
        assert!(!verdict);
        assert!(cs.max_eig > 0.0);
        let w = DVector::from_vec(cs.witness.expect("failing test must produce a witness"));
        let ones_dot: f64 = w.iter().sum();
        assert!(ones_dot.abs() <= 1e-10);
        let q = (w.transpose() * d.as_matrix() * &w)[(0, 0)];
        assert!(q > 0.0);
    }

    #[test]
    fn small_spaces_are_negative_type() {
        for seed in 0..50u64 {
            for n in [2usize, 3] {
                let d = catalog::random_metric(n, seed);
                let (verdict, _) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
                assert!(verdict, "n = {n}, seed = {seed}");
            }
        }
    }

    #[test]
    fn mr_family_is_not_negative_type() {
        let d = catalog::mr_space(5).unwrap();
        let (verdict, _) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
        assert!(!verdict);
    }

    #[test]
    fn tensor_check_equilateral_pair_is_all_ones() {
        let eq = |v| {
            crate::matrices::DistanceMatrix::new(GaugeMatrix::from_fn(3, |_, _| v).unwrap())
                .unwrap()
        };
        let (ok, spectrum) = tensor_cpsd_check(&eq(1.0), &eq(1.0), 1e-9).unwrap();
        assert!(ok);
        for v in &spectrum {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn tensor_check_product_law_on_same_factor() {
        let d = catalog::random_metric(4, 99);
        let (verdict, cs) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
        assert!(verdict);
        let (_, spectrum) = tensor_cpsd_check(&d, &d, 1e-9).unwrap();
        let mut products = Vec::new();
        for x in &cs.eigenvalues {
            for y in &cs.eigenvalues {
                products.push(x * y);
            }
        }
        assert_multiset_eq(spectrum, products, 1e-8);
    }

    #[test]
    fn tensor_check_rejects_non_negative_type_input() {
        let (k32, _) = catalog::k32_space();
        let other = catalog::random_metric(5, 3);
        assert!(matches!(
            tensor_cpsd_check(&k32, &other, 1e-9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tensor_check_is_capped() {
        let big =
            crate::matrices::DistanceMatrix::new(GaugeMatrix::from_fn(13, |_, _| 1.0).unwrap())
                .unwrap();
        assert!(matches!(
            tensor_cpsd_check(&big, &big, 1e-9),
            Err(Error::TensorCap { n: 13, cap: 12 })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn mixed_product_property(seed in any::<u64>()) {
                let a = catalog::random_gauge(3, seed).into_matrix();
                let b = catalog::random_gauge(2, seed ^ 1).into_matrix();
                let c = catalog::random_gauge(3, seed ^ 2).into_matrix();
                let d = catalog::random_gauge(2, seed ^ 3).into_matrix();
                let lhs = kron(&a, &b) * kron(&c, &d);
                let rhs = kron(&(&a * &c), &(&b * &d));
                let scale = rhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                let dev = (&lhs - &rhs).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!(dev <= 1e-10 * scale);
            }

            #[test]
            fn vec_rank_one_identity(x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, y0 in -5.0f64..5.0, y1 in -5.0f64..5.0, y2 in -5.0f64..5.0) {
                let a = DVector::from_vec(vec![x0, x1]);
                let b = DVector::from_vec(vec![y0, y1, y2]);
                let outer = &a * b.transpose();
                let lhs = vectorize(&outer);
                let rhs = kron(
                    &DMatrix::from_column_slice(3, 1, b.as_slice()),
                    &DMatrix::from_column_slice(2, 1, a.as_slice()),
                );
                prop_assert_eq!(lhs.as_slice(), rhs.as_slice());
            }

            /// Conjugating by a permutation preserves the negative-type verdict.
            #[test]
            fn negative_type_is_isomorphism_invariant(seed in any::<u64>(), n in 2usize..7) {
                let d = catalog::random_metric(n, seed);
                let sigma = catalog::random_permutation(n, seed ^ 0xff);
                let dp = d.permute(&sigma).unwrap();
                let (v1, _) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
                let (v2, _) = is_negative_type(&dp, DEFAULT_NEGTYPE_TOL);
                prop_assert_eq!(v1, v2);
            }

            /// Scaling the metric scales the conditional spectrum and keeps the verdict.
            #[test]
            fn negative_type_scale_covariance(seed in any::<u64>(), n in 2usize..7, c in 0.5f64..2.0) {
                let d = catalog::random_metric(n, seed);
                let scaled = crate::matrices::DistanceMatrix::new(d.as_gauge().scale(c)).unwrap();
                let (v1, s1) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
                let (v2, s2) = is_negative_type(&scaled, DEFAULT_NEGTYPE_TOL);
                prop_assert_eq!(v1, v2);
                for (a, b) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
                    prop_assert!((c * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
                }
            }
        }
    }
}
