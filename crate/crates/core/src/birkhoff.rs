//! The coupling side: doubly stochastic matrices, the quadratic objective
//! `h(P) = tr(P^T DX P DY^T)`, Frank-Wolfe ascent over the Birkhoff polytope,
//! Birkhoff-von Neumann decomposition, and the equality/gap certificates.
//!
//! Maximizing a possibly indefinite quadratic over a polytope is nonconvex,
//! so [`frank_wolfe_max`] only ever produces a *lower* bound on the coupling
//! maximum. The certificate logic encodes the resulting asymmetry: a
//! [`Certificate::StrictGapWitness`] is rigorous (a feasible coupling beats
//! the exact permutation maximum), while "no gap found" proves nothing unless
//! both spaces are of negative type, in which case equality is a theorem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::{linear_assignment_max, max_perm_correlation, perm_correlation};
use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::kahan::{self, KahanSum};
use crate::matrices::{DistanceMatrix, GaugeMatrix, Permutation};
use crate::spectral;

/// Row/column sums must equal one within this tolerance.
pub const BISTOCHASTIC_TOL: f64 = 1e-12;

/// Default absolute tolerance separating NumericalEquality from a strict gap,
/// on the unnormalized correlation scale.
pub const DEFAULT_CERT_TOL: f64 = 1e-7;

/// Doubly stochastic n x n matrix. The measure-theoretic coupling of the two
/// uniform n-point measures is `entries / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Bistochastic {
    mat: DMatrix<f64>,
}

impl Bistochastic {
    /// Validate nonnegativity (entries below `-1e-12` are rejected, tiny
    /// negative roundoff is clamped to zero) and unit row/column sums.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        let mut clean = mat;
        for j in 0..n {
            for i in 0..n {
                let v = clean[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i: i + 1, j: j + 1 });
                }
                if v < -BISTOCHASTIC_TOL {
                    return Err(Error::NotBistochastic(format!(
                        "negative entry {v:e} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if v < 0.0 {
                    clean[(i, j)] = 0.0;
                }
            }
        }
        for i in 0..n {
            let r = kahan::sum((0..n).map(|j| clean[(i, j)]));
            if (r - 1.0).abs() > BISTOCHASTIC_TOL {
                return Err(Error::NotBistochastic(format!(
                    "row {} sums to {r}, expected 1",
                    i + 1
                )));
            }
        }
        for j in 0..n {
            let c = kahan::sum((0..n).map(|i| clean[(i, j)]));
            if (c - 1.0).abs() > BISTOCHASTIC_TOL {
                return Err(Error::NotBistochastic(format!(
                    "column {} sums to {c}, expected 1",
                    j + 1
                )));
            }
        }
        Ok(Self { mat: clean })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            mat: DMatrix::from_element(n, n, 1.0 / n as f64),
        }
    }

    pub fn from_permutation(sigma: &Permutation) -> Self {
        Self {
            mat: sigma.matrix(),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.mat[(i, j)]).collect())
            .collect()
    }
}

impl TryFrom<MatrixJson> for Bistochastic {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.entries.len() != m.n || m.entries.iter().any(|r| r.len() != m.n) {
            return Err(Error::Parse("bistochastic entries do not match n".into()));
        }
        let n = m.n;
        Bistochastic::new(DMatrix::from_fn(n, n, |i, j| m.entries[i][j]))
    }
}

impl From<Bistochastic> for MatrixJson {
    fn from(b: Bistochastic) -> Self {
        MatrixJson {
            n: b.n(),
            entries: b.rows(),
        }
    }
}

/// Alternately normalize rows and columns of a strictly positive matrix until
/// it is doubly stochastic within [`BISTOCHASTIC_TOL`].
pub fn sinkhorn_normalize(mut m: DMatrix<f64>, max_iters: usize) -> Result<Bistochastic> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    if !m.iter().all(|&x| x.is_finite() && x > 0.0) {
        return Err(Error::NotBistochastic(
            "Sinkhorn normalization needs strictly positive entries".into(),
        ));
    }
    for _ in 0..max_iters {
        for i in 0..n {
            let r: f64 = (0..n).map(|j| m[(i, j)]).sum();
            for j in 0..n {
                m[(i, j)] /= r;
            }
        }
        for j in 0..n {
            let c: f64 = (0..n).map(|i| m[(i, j)]).sum();
            for i in 0..n {
                m[(i, j)] /= c;
            }
        }
        let dev = (0..n)
            .map(|i| ((0..n).map(|j| m[(i, j)]).sum::<f64>() - 1.0).abs())
            .fold(0.0f64, f64::max);
        if dev <= BISTOCHASTIC_TOL * 0.1 {
            return Bistochastic::new(m);
        }
    }
    Bistochastic::new(m)
}

/// Trace form of the coupling objective for an arbitrary square matrix:
/// `tr(M^T DX M DY^T)`, with compensated accumulation throughout.
fn h_form(dx: &GaugeMatrix, dy: &GaugeMatrix, m: &DMatrix<f64>) -> f64 {
    let t = kahan::mat_mul(&kahan::mat_mul(dx.as_matrix(), m), dy.as_matrix());
    kahan::dot(m.as_slice(), t.as_slice())
}

/// Gradient of `h` at P for symmetric DX, DY: `2 DX P DY`.
fn h_gradient(dx: &GaugeMatrix, dy: &GaugeMatrix, p: &DMatrix<f64>) -> DMatrix<f64> {
    kahan::mat_mul(&kahan::mat_mul(dx.as_matrix(), p), dy.as_matrix()).map(|x| 2.0 * x)
}

/// Coupling objective `h(P) = sum_{i,j,k,l} DX_ij DY_kl p_ik p_jl`, computed
/// as the trace form `tr(P^T DX P DY^T)`. At a permutation matrix this equals
/// [`perm_correlation`] at that permutation.
pub fn h_objective(dx: &GaugeMatrix, dy: &GaugeMatrix, p: &Bistochastic) -> Result<f64> {
    if dx.n() != dy.n() {
        return Err(Error::DimensionMismatch(dx.n(), dy.n()));
    }
    if dx.n() != p.n() {
        return Err(Error::DimensionMismatch(dx.n(), p.n()));
    }
    Ok(h_form(dx, dy, p.as_matrix()))
}

/// Mean squared distortion of a coupling:
/// `(1/n^2) sum_{i,j,k,l} (f_ij - g_kl)^2 p_ik p_jl`, accumulated directly as
/// the quadruple sum. Algebraically this equals
/// `|f|^2 + |g|^2 - (2/n^2) h(f, g, P)`; the two routes are kept independent.
pub fn distortion_objective(f: &GaugeMatrix, g: &GaugeMatrix, p: &Bistochastic) -> Result<f64> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(n, g.n()));
    }
    if p.n() != n {
        return Err(Error::DimensionMismatch(n, p.n()));
    }
    let mut acc = KahanSum::new();
    for i in 0..n {
        for k in 0..n {
            let p_ik = p.entry(i, k);
            if p_ik == 0.0 {
                continue;
            }
            for j in 0..n {
                for l in 0..n {
                    let d = f.entry(i, j) - g.entry(k, l);
                    acc.add(d * d * p_ik * p.entry(j, l));
                }
            }
        }
    }
    Ok(acc.value() / (n * n) as f64)
}

/// Orthonormal basis of the hyperplane orthogonal to the all-ones vector,
/// as the n x (n-1) matrix of trailing columns of the Householder reflector
/// sending `1/sqrt(n)` to a signed first basis vector. Deterministic.
pub fn span_basis_one_perp(n: usize) -> DMatrix<f64> {
    assert!(n >= 2, "the zero-sum hyperplane needs n >= 2");
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    // v = x + e1 with x = 1/sqrt(n): the stable sign choice since x_1 > 0
    let mut v = vec![inv_sqrt_n; n];
    v[0] += 1.0;
    let vtv: f64 = v.iter().map(|x| x * x).sum();
    let mut basis = DMatrix::zeros(n, n - 1);
    for col in 1..n {
        for row in 0..n {
            let e = if row == col { 1.0 } else { 0.0 };
            basis[(row, col - 1)] = e - 2.0 * v[row] * v[col] / vtv;
        }
    }
    basis
}

/// Frank-Wolfe configuration. Restart 1 always starts at the exact optimal
/// permutation (found by enumeration, hence the cap), restart 2 at the
/// uniform coupling, and the rest at Sinkhorn-normalized random matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FwParams {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop a restart when the Frank-Wolfe gap `<grad h(P), S - P>` drops
    /// to this value.
    pub tol: f64,
    pub seed: u64,
    pub enumeration_cap: usize,
}

impl Default for FwParams {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 500,
            tol: 1e-9,
            seed: 0,
            enumeration_cap: crate::assignment::DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Per-restart trace entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FwRestart {
    pub start: String,
    pub iterations: usize,
    pub final_gap: f64,
    pub value: f64,
}

/// Result of the Frank-Wolfe ascent: the best feasible coupling found and a
/// per-restart trace. `value` is a lower bound on the Birkhoff maximum.
#[derive(Clone, Debug)]
pub struct FwOutcome {
    pub coupling: Bistochastic,
    pub value: f64,
    pub restarts: Vec<FwRestart>,
}

/// Closed-form maximization of `q(t) = c1 t + c2 t^2` over `t in [0, 1]`
/// (the objective gain along the segment `P + t (S - P)`). Returns the best
/// `t` and `q(t)`. When `c2 >= 0` the quadratic is convex along the segment
/// and the maximum is at an endpoint; when `c2 < 0` the interior critical
/// point competes with the endpoints.
fn line_search_max(c1: f64, c2: f64) -> (f64, f64) {
    let q = |t: f64| c1 * t + c2 * t * t;
    let mut best = (0.0, 0.0);
    let mut consider = |t: f64| {
        let v = q(t);
        if v > best.1 {
            best = (t, v);
        }
    };
    consider(1.0);
    if c2 < 0.0 {
        let t_int = -c1 / (2.0 * c2);
        if t_int > 0.0 && t_int < 1.0 {
            consider(t_int);
        }
    }
    best
}

enum StartPoint {
    Permutation(Permutation),
    Uniform,
    Random(usize),
}

fn run_restart(
    dx: &GaugeMatrix,
    dy: &GaugeMatrix,
    start: StartPoint,
    params: &FwParams,
) -> Result<(DMatrix<f64>, f64, FwRestart)> {
    let n = dx.n();
    let (label, mut p, mut best_value) = match start {
        StartPoint::Permutation(sigma) => {
            // evaluate the seed through the same summation as the enumeration
            // side so the reported value is never below the permutation max
            let v = perm_correlation(dx, dy, &sigma)?;
            ("permutation".to_string(), sigma.matrix(), v)
        }
        StartPoint::Uniform => {
            let m = Bistochastic::uniform(n).as_matrix().clone();
            let v = h_form(dx, dy, &m);
            ("uniform".to_string(), m, v)
        }
        StartPoint::Random(k) => {
            use rand::Rng;
            // streams below 1 << 32 belong to the catalog generators
            let mut rng = crate::catalog::stream_rng(params.seed, (1u64 << 32) + k as u64);
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.5..1.5));
            let m = sinkhorn_normalize(raw, 10_000)?.as_matrix().clone();
            let v = h_form(dx, dy, &m);
            (format!("random-{k}"), m, v)
        }
    };
    let mut best_p = p.clone();
    let mut iterations = 0usize;
    let mut final_gap = 0.0;
    for _ in 0..params.max_iters {
        iterations += 1;
        let grad = h_gradient(dx, dy, &p);
        let (sigma, _) = linear_assignment_max(&grad);
        let vertex = sigma.matrix();
        let direction = &vertex - &p;
        let gap = kahan::dot(grad.as_slice(), direction.as_slice());
        final_gap = gap;
        if gap <= params.tol {
            break;
        }
        let curvature = h_form(dx, dy, &direction);
        let (t, _) = line_search_max(gap, curvature);
        if t <= 0.0 {
            break;
        }
        p = &p + direction.map(|x| t * x);
        // affine steps preserve the marginals; only clip the sign roundoff
        p.apply(|x| {
            if *x < 0.0 {
                *x = 0.0;
            }
        });
        let value = h_form(dx, dy, &p);
        if value > best_value {
            best_value = value;
            best_p = p.clone();
        }
    }
    let trace = FwRestart {
        start: label,
        iterations,
        final_gap,
        value: best_value,
    };
    Ok((best_p, best_value, trace))
}

/// Maximize `h` over the Birkhoff polytope by multi-start Frank-Wolfe ascent.
///
/// Each iteration solves a linear assignment for the best vertex of the
/// linearized objective, then maximizes the 1-D quadratic along the segment
/// in closed form. Non-convergence is not an error: the returned value is a
/// valid lower bound regardless.
pub fn frank_wolfe_max(dx: &GaugeMatrix, dy: &GaugeMatrix, params: &FwParams) -> Result<FwOutcome> {
    let (_, sigma) = max_perm_correlation(dx, dy, params.enumeration_cap)?;
    frank_wolfe_from_seed(dx, dy, &sigma, params)
}

/// Frank-Wolfe ascent with a caller-provided permutation seed (avoids a
/// second enumeration when the caller already solved the permutation side).
pub fn frank_wolfe_from_seed(
    dx: &GaugeMatrix,
    dy: &GaugeMatrix,
    perm_seed: &Permutation,
    params: &FwParams,
) -> Result<FwOutcome> {
    let n = dx.n();
    if dy.n() != n {
        return Err(Error::DimensionMismatch(n, dy.n()));
    }
    if perm_seed.n() != n {
        return Err(Error::DimensionMismatch(n, perm_seed.n()));
    }
    if params.restarts == 0 || params.max_iters == 0 {
        return Err(Error::Precondition(
            "restarts and max_iters must be >= 1".into(),
        ));
    }
    let mut starts = vec![StartPoint::Permutation(perm_seed.clone())];
    if params.restarts >= 2 {
        starts.push(StartPoint::Uniform);
    }
    for k in 0..params.restarts.saturating_sub(2) {
        starts.push(StartPoint::Random(k));
    }
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    let mut traces = Vec::with_capacity(starts.len());
    for start in starts {
        let (p, value, trace) = run_restart(dx, dy, start, params)?;
        traces.push(trace);
        let better = match &best {
            None => true,
            Some((_, v)) => value > *v,
        };
        if better {
            best = Some((p, value));
        }
    }
    let (p, value) = best.expect("at least one restart");
    Ok(FwOutcome {
        coupling: Bistochastic::new(rebalance(p))?,
        value,
        restarts: traces,
    })
}

/// One row/column normalization cycle. Frank-Wolfe iterates keep unit
/// marginals up to accumulated roundoff; this pulls the residue back well
/// inside [`BISTOCHASTIC_TOL`] without disturbing exact couplings.
fn rebalance(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        let r = kahan::sum((0..n).map(|j| m[(i, j)]));
        if r > 0.0 {
            for j in 0..n {
                m[(i, j)] /= r;
            }
        }
    }
    for j in 0..n {
        let c = kahan::sum((0..n).map(|i| m[(i, j)]));
        if c > 0.0 {
            for i in 0..n {
                m[(i, j)] /= c;
            }
        }
    }
    m
}

/// Outcome of a quotient-vs-coupling comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    /// Both inputs are metrics of negative type: equality of the two
    /// distances is a theorem, not a numerical observation.
    EqualityByNegativeType,
    /// The ascent found no coupling beating the exact permutation maximum by
    /// more than `cert_tol`. Proves nothing by itself.
    NumericalEquality,
    /// A feasible coupling strictly beats the exact permutation maximum:
    /// `fw_value > perm_max + cert_tol`. Rigorous up to roundoff.
    StrictGapWitness,
    Inconclusive,
}

/// Configuration for [`distortion_distance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareConfig {
    pub enumeration_cap: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub fw_tol: f64,
    pub cert_tol: f64,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            enumeration_cap: crate::assignment::DEFAULT_ENUMERATION_CAP,
            restarts: 16,
            max_iters: 500,
            fw_tol: 1e-9,
            cert_tol: DEFAULT_CERT_TOL,
            seed: 0,
        }
    }
}

impl CompareConfig {
    fn fw_params(&self) -> FwParams {
        FwParams {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.fw_tol,
            seed: self.seed,
            enumeration_cap: self.enumeration_cap,
        }
    }
}

/// Solver metadata echoed into reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverMeta {
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub fw_tol: f64,
    pub cert_tol: f64,
    pub enumeration_cap: usize,
    pub restart_trace: Vec<FwRestart>,
}

/// Result of comparing the quotient distance with the coupling relaxation.
///
/// `delta_estimate` is an upper bound on the coupling distance (the exact
/// infimum may be lower than what the ascent found, never higher), and by
/// construction never exceeds `d_quotient`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub d_quotient: f64,
    pub delta_estimate: f64,
    pub perm_max: f64,
    pub fw_value: f64,
    /// `fw_value - perm_max`; positive beyond `cert_tol` means a strict gap.
    pub gap: f64,
    pub certificate: Certificate,
    /// Optimal permutation, 1-based.
    pub opt_permutation: Vec<usize>,
    pub fw_coupling: Bistochastic,
    pub solver: SolverMeta,
}

/// Compare the two distances on a pair of gauges: exact permutation side by
/// enumeration, coupling side by Frank-Wolfe, certificate per the outcome.
pub fn distortion_distance(
    f: &GaugeMatrix,
    g: &GaugeMatrix,
    config: &CompareConfig,
) -> Result<GapReport> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(n, g.n()));
    }
    let (perm_max, sigma) = max_perm_correlation(f, g, config.enumeration_cap)?;
    let fw = frank_wolfe_from_seed(f, g, &sigma, &config.fw_params())?;
    let nn = (n * n) as f64;
    let norms = f.l2_norm_sq() + g.l2_norm_sq();
    let d_quotient = (norms - 2.0 / nn * perm_max).max(0.0).sqrt();
    let delta_estimate = (norms - 2.0 / nn * fw.value).max(0.0).sqrt();
    let gap = fw.value - perm_max;

    let both_negative_type = [f, g].iter().all(|m| {
        DistanceMatrix::new((*m).clone())
            .map(|d| spectral::is_negative_type(&d, spectral::DEFAULT_NEGTYPE_TOL).0)
            .unwrap_or(false)
    });
    let certificate = if both_negative_type {
        Certificate::EqualityByNegativeType
    } else if gap.abs() <= config.cert_tol {
        Certificate::NumericalEquality
    } else if gap > config.cert_tol {
        Certificate::StrictGapWitness
    } else {
        Certificate::Inconclusive
    };

    let iterations = fw.restarts.iter().map(|r| r.iterations).sum();
    Ok(GapReport {
        n,
        d_quotient,
        delta_estimate,
        perm_max,
        fw_value: fw.value,
        gap,
        certificate,
        opt_permutation: sigma.to_one_based(),
        fw_coupling: fw.coupling,
        solver: SolverMeta {
            seed: config.seed,
            restarts: config.restarts,
            iterations,
            fw_tol: config.fw_tol,
            cert_tol: config.cert_tol,
            enumeration_cap: config.enumeration_cap,
            restart_trace: fw.restarts,
        },
    })
}

/// Birkhoff-von Neumann decomposition by greedy matching on the positive
/// support: each round finds a perfect matching among entries above `tol`
/// (via the exact assignment solver on the 0/1 indicator), subtracts the
/// minimum matched entry, and zeroes residue below `tol`. Terminates in at
/// most (n-1)^2 + 1 rounds; fails if some round has no perfect matching on
/// the support, which signals an invalid input.
pub fn bvn_decompose(p: &Bistochastic, tol: f64) -> Result<Vec<(f64, Permutation)>> {
    let n = p.n();
    let mut rem = p.as_matrix().clone();
    let mut terms: Vec<(f64, Permutation)> = Vec::new();
    let max_terms = (n - 1) * (n - 1) + 1;
    loop {
        let support_max = rem.iter().fold(0.0f64, |m, x| m.max(*x));
        if support_max <= tol {
            break;
        }
        if terms.len() >= max_terms {
            return Err(Error::NotBistochastic(format!(
                "decomposition did not terminate within {max_terms} terms"
            )));
        }
        let indicator = rem.map(|x| if x > tol { 1.0 } else { 0.0 });
        let (sigma, matched) = linear_assignment_max(&indicator);
        if matched < n as f64 - 0.5 {
            return Err(Error::NoPerfectMatching);
        }
        let weight = (0..n)
            .map(|i| rem[(i, sigma.apply(i))])
            .fold(f64::INFINITY, f64::min);
        for i in 0..n {
            let j = sigma.apply(i);
            rem[(i, j)] -= weight;
            if rem[(i, j)] < tol {
                rem[(i, j)] = 0.0;
            }
        }
        terms.push((weight, sigma));
    }
    Ok(terms)
}
