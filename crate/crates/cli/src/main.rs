//! Command-line surface for the npoint library: compare the two distances,
//! test negative type, embed metrics, emit catalog spaces, run the
//! counterexample search, and execute the verification suite.
//!
//! Exit codes: 0 success, 1 verification/assertion failure, 2 input or usage
//! error. Human output carries 9 significant digits; full precision lives in
//! the JSON reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use npoint::birkhoff::CompareConfig;
use npoint::catalog;
use npoint::euclidean;
use npoint::io;
use npoint::matrices::{DistanceMatrix, GaugeMatrix};
use npoint::search::{counterexample_search, SearchConfig};
use npoint::spectral;
use npoint::verify;

#[derive(Parser)]
#[command(
    name = "npoint",
    version,
    about = "Distances on n-point metric and gauged measure spaces"
)]
struct Cli {
    /// Worker threads (default: NPOINT_THREADS env var, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the exact quotient distance with the coupling relaxation
    Compare {
        /// First matrix (.json or .csv)
        file_a: PathBuf,
        /// Second matrix (.json or .csv)
        file_b: PathBuf,
        /// Accept gauges: skip metric validation of the inputs
        #[arg(long)]
        gauged: bool,
        /// Frank-Wolfe restarts (first two are the optimal permutation and
        /// the uniform coupling)
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Permutation enumeration cap
        #[arg(long, default_value_t = 9)]
        cap: usize,
        /// Write the full report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        /// Allow overwriting existing output files
        #[arg(long)]
        force: bool,
    },
    /// Test whether a metric is of negative type
    Negtype {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the conditional spectrum as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Embed a metric in Euclidean space, optionally after a power transform
    Embed {
        file: PathBuf,
        /// Entrywise exponent in (0, 1] applied before embedding
        #[arg(long)]
        power: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the point coordinates as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Emit a named or random space as matrix JSON
    Catalog {
        #[command(subcommand)]
        space: CatalogSpace,
    },
    /// Random search for strict-gap pairs at a fixed point count
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Only compare pairs that fail the negative-type test
        #[arg(long)]
        filter_negtype: bool,
        /// Inject the gauged strict-gap pair as a positive control trial
        #[arg(long)]
        control: bool,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 9)]
        cap: usize,
        /// Write the search report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Run the full verification suite and print a pass/fail table
    VerifyPaper {
        /// Write the outcomes as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GaugedPart {
    F,
    G,
}

#[derive(Subcommand)]
enum CatalogSpace {
    /// Shortest-path metric of the complete bipartite graph K_{3,2}
    K32 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// The (r+2)-point family that is not of negative type (r > 4)
    Mr {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// One side of the gauged strict-gap pair (f, or g = -f with --part g)
    Gauged {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = GaugedPart::F)]
        part: GaugedPart,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Random metric via shortest-path repair
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Pairwise distances of a random point cloud in the unit box
    Cloud {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

/// 9 significant digits for human-facing numbers.
fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=12).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("refusing to overwrite {} (pass --force)", path.display());
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_gauge(path: &Path) -> Result<GaugeMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let looks_json = path.extension().map(|e| e == "json").unwrap_or(false)
        || text.trim_start().starts_with('{');
    let parsed = if looks_json {
        io::gauge_from_json(&text)
    } else {
        io::gauge_from_csv(&text)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn load_metric(path: &Path) -> Result<DistanceMatrix> {
    let gauge = load_gauge(path)?;
    DistanceMatrix::new(gauge).with_context(|| format!("validating {}", path.display()))
}

fn emit_matrix(g: &GaugeMatrix, out: Option<&PathBuf>, force: bool) -> Result<()> {
    let json = io::gauge_to_json(g);
    match out {
        Some(path) => write_output(path, &json, force)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let from_env = std::env::var("NPOINT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(t) = threads.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn cmd_compare(
    file_a: &Path,
    file_b: &Path,
    gauged: bool,
    restarts: usize,
    seed: u64,
    cap: usize,
    json: Option<PathBuf>,
    force: bool,
) -> Result<ExitCode> {
    let (f, g) = if gauged {
        (load_gauge(file_a)?, load_gauge(file_b)?)
    } else {
        (
            load_metric(file_a)?.into_gauge(),
            load_metric(file_b)?.into_gauge(),
        )
    };
    let config = CompareConfig {
        restarts,
        seed,
        enumeration_cap: cap,
        ..CompareConfig::default()
    };
    let report = npoint::birkhoff::distortion_distance(&f, &g, &config)?;
    println!("n                  : {}", report.n);
    println!("quotient distance  : {}", sig9(report.d_quotient));
    println!(
        "coupling estimate  : {} (upper bound)",
        sig9(report.delta_estimate)
    );
    println!("permutation max    : {}", sig9(report.perm_max));
    println!("coupling max (FW)  : {}", sig9(report.fw_value));
    println!("gap                : {}", sig9(report.gap));
    println!("certificate        : {:?}", report.certificate);
    println!("optimal permutation: {:?}", report.opt_permutation);
    if let Some(path) = json {
        write_output(&path, &serde_json::to_string_pretty(&report)?, force)?;
        println!("report written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_negtype(file: &Path, tol: f64, json: Option<PathBuf>, force: bool) -> Result<ExitCode> {
    let d = load_metric(file)?;
    let (verdict, spectrum) = spectral::is_negative_type(&d, tol);
    println!(
        "{}",
        if verdict {
            "negative type"
        } else {
            "NOT negative type"
        }
    );
    let eigs: Vec<String> = spectrum.eigenvalues.iter().map(|v| sig9(*v)).collect();
    println!("conditional spectrum: [{}]", eigs.join(", "));
    println!("max eigenvalue      : {}", sig9(spectrum.max_eig));
    if let Some(w) = &spectrum.witness {
        let wv: Vec<String> = w.iter().map(|v| sig9(*v)).collect();
        println!("witness (zero-sum)  : [{}]", wv.join(", "));
        let mut quad = 0.0;
        for (i, wi) in w.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                quad += wi * wj * d.entry(i, j);
            }
        }
        println!("witness form value  : {}", sig9(quad));
    }
    if let Some(path) = json {
        write_output(&path, &serde_json::to_string_pretty(&spectrum)?, force)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_embed(
    file: &Path,
    power: Option<f64>,
    tol: f64,
    out: Option<PathBuf>,
    force: bool,
) -> Result<ExitCode> {
    let mut d = load_metric(file)?;
    if let Some(c) = power {
        d = d.power_transform(c)?;
    }
    match euclidean::embed(&d, tol) {
        Ok(embedding) => {
            println!("embeddable: dim = {}", embedding.dim);
            let json = serde_json::to_string_pretty(&embedding)?;
            match out {
                Some(path) => {
                    write_output(&path, &json, force)?;
                    println!("points written to {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(npoint::Error::NotEmbeddable { min_eig }) => {
            eprintln!(
                "not embeddable: Gram matrix has negative eigenvalue {}",
                sig9(min_eig)
            );
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_catalog(space: CatalogSpace) -> Result<ExitCode> {
    match space {
        CatalogSpace::K32 { out, force } => {
            let (d, _) = catalog::k32_space();
            emit_matrix(d.as_gauge(), out.as_ref(), force)?;
        }
        CatalogSpace::Mr { r, out, force } => {
            let d = catalog::mr_space(r)?;
            emit_matrix(d.as_gauge(), out.as_ref(), force)?;
        }
        CatalogSpace::Gauged {
            n,
            part,
            out,
            force,
        } => {
            let pair = catalog::gauged_counterexample(n)?;
            let m = match part {
                GaugedPart::F => pair.f,
                GaugedPart::G => pair.g,
            };
            emit_matrix(&m, out.as_ref(), force)?;
        }
        CatalogSpace::Random {
            n,
            seed,
            out,
            force,
        } => {
            if n < 2 {
                bail!("random metrics need n >= 2");
            }
            emit_matrix(
                catalog::random_metric(n, seed).as_gauge(),
                out.as_ref(),
                force,
            )?;
        }
        CatalogSpace::Cloud {
            n,
            dim,
            seed,
            out,
            force,
        } => {
            if n < 2 || dim < 1 {
                bail!("point clouds need n >= 2 and dim >= 1");
            }
            emit_matrix(
                catalog::random_point_cloud_metric(n, dim, seed).as_gauge(),
                out.as_ref(),
                force,
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_search(
    n: usize,
    trials: usize,
    seed: u64,
    filter_negtype: bool,
    control: bool,
    restarts: usize,
    cap: usize,
    out: Option<PathBuf>,
    force: bool,
) -> Result<ExitCode> {
    let mut cfg = SearchConfig::new(n, trials, seed);
    cfg.filter_negtype = filter_negtype;
    cfg.inject_control = control;
    cfg.compare.restarts = restarts;
    cfg.compare.enumeration_cap = cap;
    let report = counterexample_search(&cfg)?;
    println!("trials     : {}", report.trials);
    println!("witnesses  : {}", report.witnesses.len());
    for (name, count) in &report.stats.certificates {
        println!("  {name}: {count}");
    }
    if let Some(filter) = &report.stats.filter {
        println!(
            "filter     : {}/{} draws passed (rate {})",
            filter.passed,
            filter.attempts,
            sig9(filter.pass_rate())
        );
    }
    for w in &report.witnesses {
        println!(
            "witness at trial {}{}: gap {}",
            w.trial,
            if w.control { " (control)" } else { "" },
            sig9(w.gap)
        );
    }
    if let Some(path) = out {
        write_output(&path, &serde_json::to_string_pretty(&report)?, force)?;
        println!("report written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(json: Option<PathBuf>, force: bool) -> Result<ExitCode> {
    let outcomes = verify::run_all();
    println!("{:-<96}", "");
    for o in &outcomes {
        println!(
            "{} {:4} {:<55} {:>8} ms",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.label,
            o.millis
        );
        println!("          {}", o.details);
    }
    println!("{:-<96}", "");
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if let Some(path) = json {
        write_output(&path, &serde_json::to_string_pretty(&outcomes)?, force)?;
    }
    if failed == 0 {
        println!("all {} criteria passed", outcomes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} of {} criteria FAILED", outcomes.len());
        Ok(ExitCode::FAILURE)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Compare {
            file_a,
            file_b,
            gauged,
            restarts,
            seed,
            cap,
            json,
            force,
        } => cmd_compare(&file_a, &file_b, gauged, restarts, seed, cap, json, force),
        Command::Negtype {
            file,
            tol,
            json,
            force,
        } => cmd_negtype(&file, tol, json, force),
        Command::Embed {
            file,
            power,
            tol,
            out,
            force,
        } => cmd_embed(&file, power, tol, out, force),
        Command::Catalog { space } => cmd_catalog(space),
        Command::Search {
            n,
            trials,
            seed,
            filter_negtype,
            control,
            restarts,
            cap,
            out,
            force,
        } => cmd_search(
            n,
            trials,
            seed,
            filter_negtype,
            control,
            restarts,
            cap,
            out,
            force,
        ),
        Command::VerifyPaper { json, force } => cmd_verify(json, force),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // input, parse, and usage problems
            ExitCode::from(2)
        }
    }
}
