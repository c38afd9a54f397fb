//! Named example spaces and seeded random generators for corpora and search.
//!
//! Randomness is ChaCha8 throughout, fixed here so corpora are reproducible
//! byte for byte across platforms. Every generator derives its stream from
//! `(seed, purpose)` via [`stream_rng`]; composite workloads derive sub-seeds
//! with [`derive_seed`] so trials are independent and order-free.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::birkhoff::{sinkhorn_normalize, Bistochastic};
use crate::error::{Error, Result};
use crate::matrices::{DistanceMatrix, GaugeMatrix, Permutation};

/// The fixed generator: ChaCha8 seeded by `seed` on stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stateless sub-seed derivation (splitmix64 of the pair), used to hand
/// independent seeds to per-trial generators.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_METRIC: u64 = 1;
const STREAM_CLOUD: u64 = 2;
const STREAM_GAUGE: u64 = 3;
const STREAM_PERMUTATION: u64 = 4;
const STREAM_BISTOCHASTIC: u64 = 5;

/// The strict-gap pair of gauged spaces: `f` is the all-ones off-diagonal
/// matrix, `g = -f`. Because `g` is invariant under every relabeling, the
/// quotient distance is `2 sqrt(1 - 1/n)` exactly, while the uniform coupling
/// realizes the strictly smaller distortion `sqrt(4 - 6/n + 2/n^2)`.
pub struct GaugedCounterexample {
    pub f: GaugeMatrix,
    pub g: GaugeMatrix,
    pub expected_quotient: f64,
    pub expected_coupling_bound: f64,
}

pub fn gauged_counterexample(n: usize) -> Result<GaugedCounterexample> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "the gauged strict-gap pair needs n >= 2, got {n}"
        )));
    }
    let f = GaugeMatrix::from_fn(n, |_, _| 1.0)?;
    let g = f.scale(-1.0);
    let nf = n as f64;
    Ok(GaugedCounterexample {
        f,
        g,
        expected_quotient: 2.0 * (1.0 - 1.0 / nf).sqrt(),
        expected_coupling_bound: (4.0 - 6.0 / nf + 2.0 / (nf * nf)).sqrt(),
    })
}

/// Shortest-path metric of the complete bipartite graph K_{3,2}, the smallest
/// metric space that is not of negative type, together with the classic
/// zero-sum witness eta = (1, 1, 1, -1, -2) for which eta^T D eta = 2.
pub fn k32_space() -> (DistanceMatrix, Vec<f64>) {
    let rows = vec![
        vec![0.0, 2.0, 2.0, 1.0, 1.0],
        vec![2.0, 0.0, 2.0, 1.0, 1.0],
        vec![2.0, 2.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 1.0, 0.0, 2.0],
        vec![1.0, 1.0, 1.0, 2.0, 0.0],
    ];
    let d = DistanceMatrix::from_rows(&rows).expect("K_{3,2} is a metric");
    (d, vec![1.0, 1.0, 1.0, -1.0, -2.0])
}

/// The (r+2)-point family: the first r points are mutually at distance 2,
/// every other pair at distance 1. Not of negative type for r > 4, which is
/// the required hypothesis.
pub fn mr_space(r: usize) -> Result<DistanceMatrix> {
    if r <= 4 {
        return Err(Error::Precondition(format!(
            "M_r is only guaranteed off negative type for r > 4, got r = {r}"
        )));
    }
    let g = GaugeMatrix::from_fn(r + 2, |i, j| if i < r && j < r { 2.0 } else { 1.0 })?;
    DistanceMatrix::new(g)
}

/// Pairwise Euclidean distances of n points drawn uniformly from the unit box
/// [0,1)^dim. Deterministic per seed.
pub fn random_point_cloud_metric(n: usize, dim: usize, seed: u64) -> DistanceMatrix {
    assert!(n >= 1 && dim >= 1, "need n >= 1 points in dim >= 1");
    let mut rng = stream_rng(seed, STREAM_CLOUD);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let g = GaugeMatrix::from_fn(n, |i, j| {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    })
    .expect("finite coordinates");
    DistanceMatrix::new(g).expect("Euclidean construction is a metric")
}

/// All-pairs shortest-path closure of a nonnegative symmetric gauge: the
/// standard metric repair. Idempotent on inputs that already are metrics.
pub fn metric_closure(g: &GaugeMatrix) -> Result<DistanceMatrix> {
    let n = g.n();
    let mut d = g.as_matrix().clone();
    if d.iter().any(|&x| x < 0.0) {
        return Err(Error::Precondition(
            "closure needs nonnegative entries".into(),
        ));
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    DistanceMatrix::new(GaugeMatrix::new(d)?)
}

/// Random n-point metric: a symmetric draw with entries in [0.1, 1.0]
/// repaired by shortest-path closure. The repair biases toward path-like
/// metrics but guarantees validity. Deterministic per seed.
pub fn random_metric(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = stream_rng(seed, STREAM_METRIC);
    let g = GaugeMatrix::from_fn(n, |_, _| rng.random_range(0.1..1.0)).expect("finite draw");
    metric_closure(&g).expect("draw is nonnegative")
}

/// Random gauge with entries uniform in [-1, 1]: test fodder for the gauged
/// (no-triangle-inequality) regime.
pub fn random_gauge(n: usize, seed: u64) -> GaugeMatrix {
    let mut rng = stream_rng(seed, STREAM_GAUGE);
    GaugeMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).expect("finite draw")
}

/// Uniformly random permutation (Fisher-Yates), deterministic per seed.
pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    let mut rng = stream_rng(seed, STREAM_PERMUTATION);
    let mut map: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        map.swap(i, j);
    }
    Permutation::from_zero_based(map).expect("shuffle is a bijection")
}

/// Random doubly stochastic matrix: a convex combination of up to n random
/// permutation matrices blended with a Sinkhorn-normalized positive matrix.
pub fn random_bistochastic(n: usize, seed: u64) -> Bistochastic {
    let mut rng = stream_rng(seed, STREAM_BISTOCHASTIC);
    let k = rng.random_range(1..=n);
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let noise_weight: f64 = rng.random_range(0.05..0.4);
    weights.push(noise_weight);
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut mix = DMatrix::zeros(n, n);
    for w in weights.iter().take(k) {
        let sigma = {
            let mut map: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                map.swap(i, j);
            }
            Permutation::from_zero_based(map).expect("bijection")
        };
        mix += sigma.matrix().map(|x| w * x);
    }
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.5..1.5));
    let noise = sinkhorn_normalize(raw, 10_000).expect("positive input");
    mix += noise.as_matrix().map(|x| weights[k] * x);
    Bistochastic::new(mix).expect("convex combination of couplings")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{quotient_distance, DEFAULT_ENUMERATION_CAP};
    use crate::birkhoff::distortion_objective;
    use crate::matrices::validate_metric;
    use crate::spectral::{is_negative_type, DEFAULT_NEGTYPE_TOL};
    use approx::assert_relative_eq;

    #[test]
    fn gauged_counterexample_formulas() {
        for n in 2..=8usize {
            let pair = gauged_counterexample(n).unwrap();
            let (d, _) = quotient_distance(&pair.f, &pair.g, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!((d - pair.expected_quotient).abs() <= 1e-12);
            let uniform = Bistochastic::uniform(n);
            let v = distortion_objective(&pair.f, &pair.g, &uniform).unwrap();
            assert!(
                (v - pair.expected_coupling_bound * pair.expected_coupling_bound).abs() <= 1e-12
            );
            assert!(pair.expected_coupling_bound < pair.expected_quotient);
        }
        assert!(gauged_counterexample(1).is_err());
    }

    #[test]
    fn gauged_counterexample_g_is_invariant() {
        let pair = gauged_counterexample(6).unwrap();
        let sigma = random_permutation(6, 17);
        assert_eq!(pair.g.permute(&sigma).unwrap(), pair.g);
    }

    #[test]
    fn gauged_counterexample_reference_values() {
        let two = gauged_counterexample(2).unwrap();
        assert_relative_eq!(
            two.expected_quotient,
            std::f64::consts::SQRT_2,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            two.expected_coupling_bound,
            1.5f64.sqrt(),
            max_relative = 1e-15
        );
        let five = gauged_counterexample(5).unwrap();
        assert_relative_eq!(
            five.expected_quotient,
            1.788_854_381_999_831_7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            five.expected_coupling_bound,
            2.88f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn k32_witness_values() {
        let (d, eta) = k32_space();
        assert_eq!(eta.iter().sum::<f64>(), 0.0);
        let n = d.n();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += eta[i] * eta[j] * d.entry(i, j);
            }
        }
        assert_eq!(quad, 2.0);
        assert!(validate_metric(d.as_gauge(), 1e-9).is_metric());
    }

    #[test]
    fn mr_space_shape_and_verdicts() {
        let d = mr_space(5).unwrap();
        assert_eq!(d.n(), 7);
        assert_eq!(d.entry(5, 6), 1.0);
        assert_eq!(d.entry(0, 1), 2.0);
        assert_eq!(d.entry(0, 6), 1.0);
        assert!(validate_metric(d.as_gauge(), 1e-9).is_metric());
        for r in 5..=8usize {
            let d = mr_space(r).unwrap();
            let (verdict, _) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
            assert!(!verdict, "M_{r} should fail the negative-type test");
        }
        assert!(mr_space(4).is_err());
    }

    #[test]
    fn point_clouds_are_metrics_and_reproducible() {
        for seed in 0..20u64 {
            let d = random_point_cloud_metric(6, 3, seed);
            assert!(validate_metric(d.as_gauge(), 1e-9).is_metric());
            assert!(crate::euclidean::is_euclidean(&d, 1e-9));
        }
        assert_eq!(
            random_point_cloud_metric(5, 2, 42),
            random_point_cloud_metric(5, 2, 42)
        );
    }

    #[test]
    fn random_metrics_are_valid_and_closure_is_idempotent() {
        for seed in 0..20u64 {
            let d = random_metric(6, seed);
            assert!(validate_metric(d.as_gauge(), 1e-9).is_metric());
            let again = metric_closure(d.as_gauge()).unwrap();
            assert_eq!(again, d);
        }
        assert_eq!(random_metric(5, 3), random_metric(5, 3));
    }

    #[test]
    fn four_point_random_metrics_are_negative_type() {
        for seed in 0..50u64 {
            let d = random_metric(4, seed);
            let (verdict, _) = is_negative_type(&d, DEFAULT_NEGTYPE_TOL);
            assert!(verdict, "seed {seed}");
        }
    }

    #[test]
    fn derived_seeds_spread() {
        let a = derive_seed(0, 0);
        let b = derive_seed(0, 1);
        let c = derive_seed(1, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(0, 0));
    }

    #[test]
    fn random_bistochastic_is_valid() {
        for seed in 0..20u64 {
            let b = random_bistochastic(5, seed);
            assert_eq!(b.n(), 5);
        }
        assert_eq!(random_bistochastic(4, 9), random_bistochastic(4, 9));
    }
}
