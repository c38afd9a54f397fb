//! Compensated (error-free-transformation) summation.
//!
//! Objective values in this crate are sums of up to n^4 products compared at
//! absolute tolerances near 1e-7, so every accumulation that feeds a
//! certificate goes through a Neumaier accumulator instead of a bare `+=`.

use nalgebra::DMatrix;

/// Neumaier variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of terms.
pub fn sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

/// Matrix product with a compensated accumulator per output entry.
pub fn mat_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "incompatible shapes for mat_mul");
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        let mut acc = KahanSum::new();
        for k in 0..a.ncols() {
            acc.add(a[(i, k)] * b[(k, j)]);
        }
        acc.value()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the small terms entirely
        let terms: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 10_000))
            .collect();
        let naive: f64 = terms.iter().sum();
        let comp = sum(terms.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-18);
    }

    #[test]
    fn mat_mul_matches_nalgebra_on_small_inputs() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let ours = mat_mul(&a, &b);
        let theirs = &a * &b;
        assert_eq!(ours, theirs);
    }
}
