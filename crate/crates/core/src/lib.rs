//! Distances on n-point metric and gauged measure spaces.
//!
//! Two natural ways to compare n-point spaces carrying uniform weights:
//!
//! * the **quotient distance** `d_M`: minimize the scaled l2 difference of the
//!   gauge (or distance) matrices over all relabelings of the points — the
//!   transport-*map* (Monge) side, computed exactly by permutation enumeration
//!   ([`assignment::quotient_distance`]);
//! * the **coupling distance**: minimize the mean squared distortion over
//!   doubly stochastic couplings — the transport-*plan* (Kantorovich) side,
//!   an L2 Gromov-Wasserstein distance, lower-bounded here by Frank-Wolfe
//!   ascent over the Birkhoff polytope ([`birkhoff::distortion_distance`]).
//!
//! The coupling distance never exceeds the quotient distance (permutation
//! matrices are couplings). Equality is a quadratic maximization question on
//! the Birkhoff polytope: the maximum sits at a vertex whenever the quadratic
//! form is convex on the polytope's span, which holds when both distance
//! matrices are of *negative type* (conditionally negative semi-definite on
//! the hyperplane orthogonal to the all-ones vector). The [`spectral`] module
//! provides that test, [`euclidean`] links it to Euclidean embeddability via
//! Gram matrices and the square-root power transform, [`catalog`] generates
//! the named example spaces (the gauged strict-gap pair, the `K_{3,2}` graph
//! metric, the `M_r` family, random corpora), and [`search`] hunts for metric
//! pairs with a strict gap at n >= 5, where none is currently known.
//!
//! All computations are plain `f64` with compensated summation on every
//! objective accumulation; certificate logic is explicit about what is proved
//! (a strict-gap witness is a feasible coupling beating the exact permutation
//! maximum; a numerical-equality verdict proves nothing by itself).

pub mod assignment;
pub mod birkhoff;
pub mod catalog;
pub mod error;
pub mod euclidean;
pub mod io;
pub mod kahan;
pub mod matrices;
pub mod search;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use matrices::{DistanceMatrix, GaugeMatrix, MetricCheck, MetricViolation, Permutation};
