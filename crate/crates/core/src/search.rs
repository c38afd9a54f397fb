//! Randomized search for metric pairs where the coupling relaxation strictly
//! beats the permutation optimum at n >= 5 — no such pair is currently known.
//!
//! Every trial is reproducible: matrices and solver seeds derive from
//! `(seed, trial index)`, trials run independently (and concurrently), and
//! reports aggregate in trial order, so identical inputs produce byte-equal
//! JSON. A witness is only accepted when the gap survives recomputation of
//! both sides from the stored data.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::max_perm_correlation;
use crate::birkhoff::{distortion_distance, h_objective, Certificate, CompareConfig, GapReport};
use crate::catalog::{derive_seed, gauged_counterexample, random_metric};
use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::matrices::{DistanceMatrix, GaugeMatrix};
use crate::spectral::{is_negative_type, DEFAULT_NEGTYPE_TOL};

/// A gap must exceed this, and survive recomputation, to count as a witness.
pub const WITNESS_GAP_TOL: f64 = 1e-7;

/// Recomputed and stored gaps must agree this tightly.
pub const WITNESS_REPRO_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Only fire trials on pairs that fail the negative-type test (the only
    /// region where equality is not already a theorem).
    pub filter_negtype: bool,
    /// Append the gauged strict-gap pair as a positive control trial.
    pub inject_control: bool,
    pub compare: CompareConfig,
    /// Rejection-sampling budget per matrix when filtering.
    pub max_filter_attempts: usize,
    pub negtype_tol: f64,
}

impl SearchConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            filter_negtype: false,
            inject_control: false,
            compare: CompareConfig {
                seed,
                ..CompareConfig::default()
            },
            max_filter_attempts: 10_000,
            negtype_tol: DEFAULT_NEGTYPE_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessSeeds {
    pub x: u64,
    pub y: u64,
    pub fw: u64,
}

/// Full reproduction record for one strict-gap witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub trial: usize,
    pub control: bool,
    #[serde(rename = "fX")]
    pub f_x: MatrixJson,
    #[serde(rename = "fY")]
    pub f_y: MatrixJson,
    pub gap: f64,
    pub perm_max: f64,
    pub fw_value: f64,
    pub coupling: MatrixJson,
    /// Optimal permutation of the exact side, 1-based.
    pub perm: Vec<usize>,
    pub seeds: WitnessSeeds,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapBin {
    pub label: String,
    pub count: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FilterStats {
    pub attempts: usize,
    pub passed: usize,
}

impl FilterStats {
    pub fn pass_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.passed as f64 / self.attempts as f64
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchStats {
    pub certificates: BTreeMap<String, usize>,
    pub gap_histogram: Vec<GapBin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterStats>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub filter_negtype: bool,
    pub control: bool,
    pub witnesses: Vec<WitnessRecord>,
    pub stats: SearchStats,
}

fn certificate_name(c: Certificate) -> &'static str {
    match c {
        Certificate::EqualityByNegativeType => "EqualityByNegativeType",
        Certificate::NumericalEquality => "NumericalEquality",
        Certificate::StrictGapWitness => "StrictGapWitness",
        Certificate::Inconclusive => "Inconclusive",
    }
}

const GAP_EDGES: [(f64, &str); 8] = [
    (0.0, "<= 0"),
    (1e-12, "(0, 1e-12]"),
    (1e-10, "(1e-12, 1e-10]"),
    (1e-8, "(1e-10, 1e-8]"),
    (1e-7, "(1e-8, 1e-7]"),
    (1e-4, "(1e-7, 1e-4]"),
    (1e-1, "(1e-4, 1e-1]"),
    (f64::MAX, "> 1e-1"),
];

fn gap_bin(gap: f64) -> usize {
    GAP_EDGES
        .iter()
        .position(|(edge, _)| gap <= *edge)
        .unwrap_or(GAP_EDGES.len() - 1)
}

/// Keep only matrices failing the negative-type test; counts are returned so
/// pass rates per n can be reported.
pub fn filter_non_negative_type(
    matrices: impl IntoIterator<Item = DistanceMatrix>,
    tol: f64,
) -> (Vec<DistanceMatrix>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for d in matrices {
        stats.attempts += 1;
        if !is_negative_type(&d, tol).0 {
            stats.passed += 1;
            kept.push(d);
        }
    }
    (kept, stats)
}

struct TrialOutcome {
    certificate: Certificate,
    gap: f64,
    filter: FilterStats,
    witness: Option<WitnessRecord>,
}

/// Draw one matrix, optionally rejection-sampling for non-negative-type.
fn draw_matrix(
    n: usize,
    base_seed: u64,
    cfg: &SearchConfig,
) -> Result<(DistanceMatrix, u64, FilterStats)> {
    if !cfg.filter_negtype {
        return Ok((
            random_metric(n, base_seed),
            base_seed,
            FilterStats::default(),
        ));
    }
    let mut stats = FilterStats::default();
    for attempt in 0..cfg.max_filter_attempts {
        let seed = derive_seed(base_seed, attempt as u64);
        let d = random_metric(n, seed);
        stats.attempts += 1;
        if !is_negative_type(&d, cfg.negtype_tol).0 {
            stats.passed += 1;
            return Ok((d, seed, stats));
        }
    }
    Err(Error::FilterExhausted {
        n,
        attempts: cfg.max_filter_attempts,
    })
}

/// Re-derive both sides of a claimed gap from the stored matrices and
/// coupling; the claim must survive at [`WITNESS_GAP_TOL`] and reproduce the
/// stored gap within [`WITNESS_REPRO_TOL`].
fn verify_witness(f: &GaugeMatrix, g: &GaugeMatrix, report: &GapReport, cap: usize) -> bool {
    let Ok((perm_again, _)) = max_perm_correlation(f, g, cap) else {
        return false;
    };
    let Ok(h_again) = h_objective(f, g, &report.fw_coupling) else {
        return false;
    };
    let gap_again = h_again - perm_again;
    gap_again > WITNESS_GAP_TOL && (gap_again - report.gap).abs() <= WITNESS_REPRO_TOL
}

fn run_trial(
    trial: usize,
    control: bool,
    f: &GaugeMatrix,
    g: &GaugeMatrix,
    seeds: WitnessSeeds,
    filter: FilterStats,
    cfg: &SearchConfig,
) -> Result<TrialOutcome> {
    let compare = CompareConfig {
        seed: seeds.fw,
        ..cfg.compare.clone()
    };
    let report = distortion_distance(f, g, &compare)?;
    let witness = if report.certificate == Certificate::StrictGapWitness
        && report.gap > WITNESS_GAP_TOL
        && verify_witness(f, g, &report, compare.enumeration_cap)
    {
        Some(WitnessRecord {
            trial,
            control,
            f_x: MatrixJson::from_gauge(f),
            f_y: MatrixJson::from_gauge(g),
            gap: report.gap,
            perm_max: report.perm_max,
            fw_value: report.fw_value,
            coupling: MatrixJson {
                n: report.fw_coupling.n(),
                entries: report.fw_coupling.rows(),
            },
            perm: report.opt_permutation.clone(),
            seeds,
        })
    } else {
        None
    };
    Ok(TrialOutcome {
        certificate: report.certificate,
        gap: report.gap,
        filter,
        witness,
    })
}

/// Run `trials` random-pair comparisons at size n, plus an optional control
/// trial with the gauged strict-gap pair, and aggregate the certificates.
/// An empty witness list is the expected outcome for metric pairs.
pub fn counterexample_search(cfg: &SearchConfig) -> Result<SearchReport> {
    if cfg.n < 2 {
        return Err(Error::Precondition(format!(
            "search needs n >= 2, got {}",
            cfg.n
        )));
    }
    if cfg.n > cfg.compare.enumeration_cap {
        return Err(Error::EnumerationCap {
            n: cfg.n,
            cap: cfg.compare.enumeration_cap,
        });
    }

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let t = trial as u64;
            let sx = derive_seed(cfg.seed, 3 * t);
            let sy = derive_seed(cfg.seed, 3 * t + 1);
            let sfw = derive_seed(cfg.seed, 3 * t + 2);
            let (fx, seed_x, stats_x) = draw_matrix(cfg.n, sx, cfg)?;
            let (fy, seed_y, stats_y) = draw_matrix(cfg.n, sy, cfg)?;
            let filter = FilterStats {
                attempts: stats_x.attempts + stats_y.attempts,
                passed: stats_x.passed + stats_y.passed,
            };
            run_trial(
                trial,
                false,
                fx.as_gauge(),
                fy.as_gauge(),
                WitnessSeeds {
                    x: seed_x,
                    y: seed_y,
                    fw: sfw,
                },
                filter,
                cfg,
            )
        })
        .collect::<Result<_>>()?;

    let mut all = outcomes;
    if cfg.inject_control {
        let pair = gauged_counterexample(cfg.n)?;
        let sfw = derive_seed(cfg.seed, u64::MAX);
        all.push(run_trial(
            cfg.trials,
            true,
            &pair.f,
            &pair.g,
            WitnessSeeds {
                x: 0,
                y: 0,
                fw: sfw,
            },
            FilterStats::default(),
            cfg,
        )?);
    }

    let mut certificates: BTreeMap<String, usize> = BTreeMap::new();
    let mut bins = vec![0usize; GAP_EDGES.len()];
    let mut filter_total = FilterStats::default();
    let mut witnesses = Vec::new();
    for outcome in all {
        *certificates
            .entry(certificate_name(outcome.certificate).to_string())
            .or_insert(0) += 1;
        bins[gap_bin(outcome.gap)] += 1;
        filter_total.attempts += outcome.filter.attempts;
        filter_total.passed += outcome.filter.passed;
        if let Some(w) = outcome.witness {
            witnesses.push(w);
        }
    }
    witnesses.sort_by_key(|w| w.trial);

    Ok(SearchReport {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        filter_negtype: cfg.filter_negtype,
        control: cfg.inject_control,
        witnesses,
        stats: SearchStats {
            certificates,
            gap_histogram: GAP_EDGES
                .iter()
                .zip(&bins)
                .map(|((_, label), &count)| GapBin {
                    label: label.to_string(),
                    count,
                })
                .collect(),
            filter: if cfg.filter_negtype {
                Some(filter_total)
            } else {
                None
            },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn quick_config(n: usize, trials: usize, seed: u64) -> SearchConfig {
        let mut cfg = SearchConfig::new(n, trials, seed);
        cfg.compare.restarts = 3;
        cfg.compare.max_iters = 200;
        cfg
    }

    #[test]
    fn empty_run_produces_empty_report() {
        let report = counterexample_search(&quick_config(5, 0, 1)).unwrap();
        assert!(report.witnesses.is_empty());
        assert_eq!(report.trials, 0);
    }

    #[test]
    fn four_point_sanity_mode_finds_nothing() {
        let report = counterexample_search(&quick_config(4, 30, 7)).unwrap();
        assert!(report.witnesses.is_empty());
        assert_eq!(
            report
                .stats
                .certificates
                .get("EqualityByNegativeType")
                .copied()
                .unwrap_or(0),
            30
        );
    }

    #[test]
    fn control_injection_yields_exactly_one_witness() {
        let mut cfg = quick_config(5, 10, 3);
        cfg.inject_control = true;
        let report = counterexample_search(&cfg).unwrap();
        assert_eq!(report.witnesses.len(), 1);
        let w = &report.witnesses[0];
        assert!(w.control);
        assert_eq!(w.trial, 10);
        assert!(w.gap > WITNESS_GAP_TOL);
    }

    #[test]
    fn reports_are_deterministic() {
        let mut cfg = quick_config(5, 8, 42);
        cfg.inject_control = true;
        let a = serde_json::to_string(&counterexample_search(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&counterexample_search(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn witnesses_reverify_from_stored_data() {
        let mut cfg = quick_config(5, 0, 11);
        cfg.inject_control = true;
        let report = counterexample_search(&cfg).unwrap();
        let w = &report.witnesses[0];
        let f = w.f_x.to_gauge().unwrap();
        let g = w.f_y.to_gauge().unwrap();
        let (perm_max, _) = max_perm_correlation(&f, &g, cfg.compare.enumeration_cap).unwrap();
        let coupling = crate::birkhoff::Bistochastic::try_from(w.coupling.clone()).unwrap();
        let h = h_objective(&f, &g, &coupling).unwrap();
        assert!(((h - perm_max) - w.gap).abs() <= WITNESS_REPRO_TOL);
    }

    #[test]
    fn filter_passes_known_non_negative_type_spaces() {
        let (k32, _) = catalog::k32_space();
        let mr = catalog::mr_space(5).unwrap();
        let fours: Vec<_> = (0..10).map(|s| catalog::random_metric(4, s)).collect();
        let (kept, stats) = filter_non_negative_type(fours, DEFAULT_NEGTYPE_TOL);
        assert!(kept.is_empty());
        assert_eq!(stats.attempts, 10);
        assert_eq!(stats.passed, 0);

        let (kept, stats) =
            filter_non_negative_type([k32.clone(), mr.clone()], DEFAULT_NEGTYPE_TOL);
        assert_eq!(kept.len(), 2);
        assert_eq!(stats.passed, 2);
    }

    #[test]
    fn search_rejects_out_of_range_n() {
        assert!(counterexample_search(&quick_config(1, 5, 0)).is_err());
        assert!(counterexample_search(&quick_config(10, 5, 0)).is_err());
    }

    #[test]
    fn filtered_search_only_fires_on_non_negative_type_pairs() {
        let mut cfg = quick_config(5, 2, 21);
        cfg.filter_negtype = true;
        let report = counterexample_search(&cfg).unwrap();
        let filter = report.stats.filter.expect("filter stats recorded");
        assert_eq!(filter.passed, 4); // two matrices per trial
        assert!(filter.attempts >= filter.passed);
        // filtered pairs cannot carry the negative-type certificate
        assert_eq!(
            report.stats.certificates.get("EqualityByNegativeType"),
            None
        );
    }

    #[test]
    fn filter_exhaustion_is_an_error_not_a_hang() {
        // at n = 4 every draw is of negative type, so the filter starves
        let mut cfg = quick_config(4, 1, 5);
        cfg.filter_negtype = true;
        cfg.max_filter_attempts = 50;
        assert!(matches!(
            counterexample_search(&cfg),
            Err(Error::FilterExhausted { n: 4, attempts: 50 })
        ));
    }
}
