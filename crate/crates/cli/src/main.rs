//! Batch experiment driver over the moment-lift library: object and query
//! generation, slice-identity checking, moment recovery with optional
//! references, the (3,2,2) projected-covariance experiment, and the
//! reweighting demonstration.
//!
//! Every command is a pure function of its flags: identical invocations
//! produce byte-identical files. Exit codes: 0 success, 1 a check failed,
//! 2 unreadable or malformed input, 3 the request is outside the model.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use moment_lift::io::{load_json, save_json};
use moment_lift::{
    canonical_embed, estimate_full_moment, estimate_proj_moment, haar_rotation_from_rng,
    quadrature_full_moment, recover_full_moment, relative_residual, reweighted_estimate,
    sample_tilted_ensemble, Error, EstimatorMode, GaussianMixture, MomentEstimate, MomentQuery,
    QueryBatch, RngStream, RotationEnsemble,
};
use rand::Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "moment-lift",
    version,
    about = "Moment estimation and recovery experiments for randomly oriented, projected objects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Gaussian mixture object to a JSON file.
    GenObject {
        /// Ambient dimension n.
        #[arg(long)]
        n: usize,
        /// Number of mixture components.
        #[arg(long, default_value_t = 3)]
        components: usize,
        /// Emit a single centered component instead of a random mixture.
        #[arg(long)]
        centered: bool,
        /// Width of the centered component (only with --centered).
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a batch of random frequency query tuples to a JSON file.
    GenQueries {
        /// Moment order d (tuple length).
        #[arg(long)]
        d: usize,
        /// Dimension of each frequency vector.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Coordinates are drawn uniformly from [-range, range].
        #[arg(long, default_value_t = 2.0)]
        range: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate both sides of the slice identity on random (rotation,
    /// frequency) pairs and report the worst relative residual.
    SliceCheck {
        #[arg(long)]
        object: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum acceptable residual; exceeding it exits with code 1.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Optional per-trial CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover full moments from projected data, one CSV row per query
    /// tuple, optionally against a reference evaluation.
    Recover {
        #[arg(long)]
        object: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Slice dimension m; every tuple must satisfy d <= m.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Quadrature nodes for the reference (default 2048 for n=2, 48
        /// per axis for n=3).
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Reference::None)]
        reference: Reference,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The cryo-EM style experiment: recover full second moments of a
    /// 3-dimensional object from projected data at (n,m,d) = (3,2,2) and
    /// compare against the SO(3) quadrature reference.
    Kam {
        #[arg(long)]
        object: PathBuf,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for recoveries.csv, residuals.csv,
        /// summary.json, and plot_residuals.py.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate one projected moment three ways: Haar sampling, tilted
    /// sampling without correction, and tilted sampling with importance
    /// reweighting.
    Reweight {
        #[arg(long)]
        object: PathBuf,
        /// Tilt strength of the non-uniform viewing density.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Slice dimension of the projected query.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional JSON report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reference {
    /// No reference evaluation.
    None,
    /// Deterministic quadrature over the rotation group (n = 2 or 3).
    Quadrature,
    /// An independent Monte Carlo run with the same sample count.
    Montecarlo,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// MOMENT_LIFT_THREADS caps the worker pool. Results are identical at any
/// setting; the cap only controls resource use.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("MOMENT_LIFT_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid MOMENT_LIFT_THREADS value {value:?}"),
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Parse { .. } => 2,
        Error::Dimension(_)
        | Error::Validation(_)
        | Error::Model(_)
        | Error::OrderExceedsSlice { .. }
        | Error::UnsupportedGroup { .. } => 3,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::GenObject {
            n,
            components,
            centered,
            sigma,
            seed,
            out,
        } => {
            let obj = if centered {
                GaussianMixture::centered(n, sigma)?
            } else {
                GaussianMixture::random(n, components, RngStream::new(seed))?
            };
            save_json(&out, &obj)?;
            println!(
                "wrote {} ({}-dimensional, {} component{})",
                out.display(),
                n,
                obj.components().len(),
                if obj.components().len() == 1 { "" } else { "s" }
            );
            Ok(0)
        }
        Command::GenQueries {
            d,
            n,
            count,
            range,
            seed,
            out,
        } => {
            let batch = QueryBatch::random(d, n, count, range, RngStream::new(seed))?;
            save_json(&out, &batch)?;
            println!(
                "wrote {} ({} tuple{} of order {d} in dimension {n})",
                out.display(),
                count,
                if count == 1 { "" } else { "s" }
            );
            Ok(0)
        }
        Command::SliceCheck {
            object,
            trials,
            seed,
            tolerance,
            out,
        } => run_slice_check(&object, trials, seed, tolerance, out.as_deref()),
        Command::Recover {
            object,
            queries,
            m,
            samples,
            nodes,
            seed,
            reference,
            out,
        } => run_recover(&object, &queries, m, samples, nodes, seed, reference, out.as_deref()),
        Command::Kam {
            object,
            pairs,
            samples,
            nodes,
            seed,
            out,
        } => run_kam(&object, pairs, samples, nodes, seed, &out),
        Command::Reweight {
            object,
            kappa,
            samples,
            m,
            seed,
            out,
        } => run_reweight(&object, kappa, samples, m, seed, out.as_deref()),
    }
}

// ------------------------------------------------------------ commands --

#[derive(Serialize)]
struct SliceCheckRow {
    trial: usize,
    m: usize,
    residual: f64,
}

fn run_slice_check(
    object: &Path,
    trials: usize,
    seed: u64,
    tolerance: f64,
    out: Option<&Path>,
) -> Result<u8, Error> {
    let obj: GaussianMixture = load_json(object)?;
    let n = obj.dim();
    if n < 2 {
        return Err(Error::model(
            "the slice identity needs an ambient dimension of at least 2",
        ));
    }

    let mut rng = RngStream::new(seed).rng();
    let mut rows = Vec::with_capacity(trials);
    let mut max_residual = 0.0_f64;
    for trial in 0..trials {
        let m = rng.random_range(1..n);
        let r = haar_rotation_from_rng(n, &mut rng)?;
        let eta = moment_lift::FrequencyVector::from_slice(
            &(0..m).map(|_| rng.random_range(-2.5..2.5)).collect::<Vec<_>>(),
        )?;

        let lhs = obj.projected_fourier_eval(&r, &eta)?;
        let rhs = obj.fourier_eval(&r.apply_transpose(&canonical_embed(&eta, n)?)?)?;
        let residual = relative_residual(lhs, rhs);
        max_residual = max_residual.max(residual);
        rows.push(SliceCheckRow { trial, m, residual });
    }

    if let Some(path) = out {
        write_csv(path, &["trial", "m", "residual"], &rows)?;
    }
    let ok = max_residual <= tolerance;
    println!(
        "slice identity over {trials} trials: max residual {max_residual:.3e} \
         (tolerance {tolerance:.1e}) {}",
        if ok { "OK" } else { "FAILED" }
    );
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct RecoverRow {
    index: usize,
    query: String,
    value_re: f64,
    value_im: f64,
    std_error: f64,
    n_samples: usize,
    reference_re: Option<f64>,
    reference_im: Option<f64>,
    residual: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_recover(
    object: &Path,
    queries: &Path,
    m: usize,
    samples: usize,
    nodes: Option<usize>,
    seed: u64,
    reference: Reference,
    out: Option<&Path>,
) -> Result<u8, Error> {
    let obj: GaussianMixture = load_json(object)?;
    let batch: QueryBatch = load_json(queries)?;
    let n = obj.dim();
    let ens = RotationEnsemble::haar(n, samples, RngStream::new(seed))?;
    // The reference ensemble lives on a far-away stream so it shares no
    // randomness with the recovery ensemble.
    let reference_ens = match reference {
        Reference::Montecarlo => Some(RotationEnsemble::haar(
            n,
            samples,
            RngStream::with_stream(seed, 1 << 32),
        )?),
        _ => None,
    };
    let nodes = nodes.unwrap_or(if n == 2 { 2048 } else { 48 });

    let mut rows = Vec::with_capacity(batch.queries().len());
    for (index, query) in batch.iter().enumerate() {
        let report = match recover_full_moment(&obj, query, m, &ens) {
            Ok(report) => report,
            Err(err) => {
                eprintln!("error: query tuple {index}: {err}");
                return Ok(exit_code_for(&err));
            }
        };
        let reference_value = match reference {
            Reference::None => None,
            Reference::Quadrature => Some(quadrature_full_moment(&obj, query, nodes)?),
            Reference::Montecarlo => Some(
                estimate_full_moment(&obj, query, reference_ens.as_ref().expect("built above"))?
                    .value,
            ),
        };

        let coords: Vec<Vec<f64>> = query.freqs().iter().map(|f| f.as_slice().to_vec()).collect();
        let estimate = report.recovered;
        rows.push(RecoverRow {
            index,
            query: serde_json::to_string(&coords).expect("plain float arrays"),
            value_re: estimate.value.re,
            value_im: estimate.value.im,
            std_error: estimate.std_error,
            n_samples: estimate.n_samples,
            reference_re: reference_value.map(|v| v.re),
            reference_im: reference_value.map(|v| v.im),
            residual: reference_value.map(|v| relative_residual(estimate.value, v)),
        });
    }

    const HEADERS: &[&str] = &[
        "index",
        "query",
        "value_re",
        "value_im",
        "std_error",
        "n_samples",
        "reference_re",
        "reference_im",
        "residual",
    ];
    match out {
        Some(path) => write_csv(path, HEADERS, &rows)?,
        None => write_csv_to(std::io::stdout().lock(), HEADERS, &rows)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct KamRow {
    pair: usize,
    w1_x: f64,
    w1_y: f64,
    w1_z: f64,
    w2_x: f64,
    w2_y: f64,
    w2_z: f64,
    value_re: f64,
    value_im: f64,
    std_error: f64,
    oracle_re: f64,
    oracle_im: f64,
    residual: f64,
    within_tolerance: bool,
}

#[derive(Serialize)]
struct KamResidualRow {
    pair: usize,
    omega1_norm: f64,
    omega2_norm: f64,
    residual: f64,
}

#[derive(Serialize)]
struct KamSummary {
    pairs: usize,
    samples: usize,
    nodes: usize,
    seed: u64,
    max_residual: Option<f64>,
    median_residual: Option<f64>,
    fraction_within_tolerance: Option<f64>,
}

fn run_kam(
    object: &Path,
    pairs: usize,
    samples: usize,
    nodes: usize,
    seed: u64,
    out: &Path,
) -> Result<u8, Error> {
    let obj: GaussianMixture = load_json(object)?;
    if obj.dim() != 3 {
        return Err(Error::model(format!(
            "the projected-covariance experiment is fixed at (n,m,d) = (3,2,2); \
             the object is {}-dimensional",
            obj.dim()
        )));
    }
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.display().to_string(),
        source,
    })?;

    let mut rows = Vec::with_capacity(pairs);
    let mut residual_rows = Vec::with_capacity(pairs);
    let mut residuals = Vec::with_capacity(pairs);
    let mut within = 0usize;
    if pairs > 0 {
        let ens = RotationEnsemble::haar(3, samples, RngStream::new(seed))?;
        // Coordinates in [-sqrt(3), sqrt(3)] keep every |ω| at most 3.
        let batch = QueryBatch::random(
            2,
            3,
            pairs,
            3.0 / 3.0_f64.sqrt(),
            RngStream::with_stream(seed, 1),
        )?;
        for (pair, query) in batch.iter().enumerate() {
            let report = recover_full_moment(&obj, query, 2, &ens)?;
            let oracle = quadrature_full_moment(&obj, query, nodes)?;
            let estimate = report.recovered;
            let diff = estimate.value - oracle;
            let within_tolerance =
                diff.re.abs() <= 5.0 * estimate.std_error && diff.im.abs() <= 5.0 * estimate.std_error;
            within += within_tolerance as usize;
            let residual = relative_residual(estimate.value, oracle);
            residuals.push(residual);

            let w1 = query.freqs()[0].as_slice();
            let w2 = query.freqs()[1].as_slice();
            rows.push(KamRow {
                pair,
                w1_x: w1[0],
                w1_y: w1[1],
                w1_z: w1[2],
                w2_x: w2[0],
                w2_y: w2[1],
                w2_z: w2[2],
                value_re: estimate.value.re,
                value_im: estimate.value.im,
                std_error: estimate.std_error,
                oracle_re: oracle.re,
                oracle_im: oracle.im,
                residual,
                within_tolerance,
            });
            residual_rows.push(KamResidualRow {
                pair,
                omega1_norm: query.freqs()[0].norm(),
                omega2_norm: query.freqs()[1].norm(),
                residual,
            });
        }
    }

    residuals.sort_by(f64::total_cmp);
    let summary = KamSummary {
        pairs,
        samples,
        nodes,
        seed,
        max_residual: residuals.last().copied(),
        median_residual: (!residuals.is_empty()).then(|| residuals[residuals.len() / 2]),
        fraction_within_tolerance: (pairs > 0).then(|| within as f64 / pairs as f64),
    };

    write_csv(
        &out.join("recoveries.csv"),
        &[
            "pair",
            "w1_x",
            "w1_y",
            "w1_z",
            "w2_x",
            "w2_y",
            "w2_z",
            "value_re",
            "value_im",
            "std_error",
            "oracle_re",
            "oracle_im",
            "residual",
            "within_tolerance",
        ],
        &rows,
    )?;
    write_csv(
        &out.join("residuals.csv"),
        &["pair", "omega1_norm", "omega2_norm", "residual"],
        &residual_rows,
    )?;
    save_json(out.join("summary.json"), &summary)?;
    std::fs::write(out.join("plot_residuals.py"), PLOT_SCRIPT).map_err(|source| Error::Io {
        path: out.join("plot_residuals.py").display().to_string(),
        source,
    })?;

    match summary.fraction_within_tolerance {
        Some(fraction) => println!(
            "{pairs} pairs recovered: {:.0}% within 5 standard errors of the reference, \
             median residual {:.3e}",
            fraction * 100.0,
            summary.median_residual.unwrap_or(0.0)
        ),
        None => println!("0 pairs requested; wrote empty reports"),
    }
    println!("reports in {}", out.display());
    Ok(0)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Scatter recovery residuals against query frequency magnitudes.

Reads residuals.csv from the directory this script lives in and writes
residuals.png next to it. Requires matplotlib.
"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "residuals.csv"))))
if not rows:
    sys.exit("residuals.csv has no data rows")

w1 = [float(r["omega1_norm"]) for r in rows]
w2 = [float(r["omega2_norm"]) for r in rows]
res = [float(r["residual"]) for r in rows]

fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
for ax, x, label in ((axes[0], w1, r"$|\omega_1|$"), (axes[1], w2, r"$|\omega_2|$")):
    ax.scatter(x, res, s=18)
    ax.set_xlabel(label)
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
axes[0].set_ylabel("relative residual vs quadrature reference")
fig.tight_layout()
out = os.path.join(here, "residuals.png")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
"#;

#[derive(Serialize)]
struct ReweightReport {
    kappa: f64,
    samples: usize,
    seed: u64,
    m: usize,
    d: usize,
    query: Vec<Vec<f64>>,
    haar: MomentEstimate,
    tilted_unweighted: MomentEstimate,
    tilted_reweighted: MomentEstimate,
    /// |unweighted - haar| in units of the combined standard error.
    unweighted_deviation_sigma: f64,
    /// |reweighted - haar| in units of the combined standard error.
    reweighted_deviation_sigma: f64,
}

fn run_reweight(
    object: &Path,
    kappa: f64,
    samples: usize,
    m: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8, Error> {
    let obj: GaussianMixture = load_json(object)?;
    let n = obj.dim();
    let d = m.min(2);
    let query_batch = QueryBatch::random(d, m, 1, 1.5, RngStream::with_stream(seed, 1))?;
    let query: &MomentQuery = &query_batch.queries()[0];

    // The Haar ensemble and the tilted sampler share one stream: at κ = 0
    // the tilted sampler draws exactly the Haar sequence, which is what
    // makes the three estimates coincide bit for bit there.
    let haar_ens = RotationEnsemble::haar(n, samples, RngStream::new(seed))?;
    let tilted = sample_tilted_ensemble(n, kappa, samples, RngStream::new(seed))?;

    let mode = EstimatorMode::Projected { m };
    let haar = estimate_proj_moment(&obj, query, m, &haar_ens)?;
    let tilted_unweighted = estimate_proj_moment(&obj, query, m, &tilted.unweighted())?;
    let tilted_reweighted = reweighted_estimate(&obj, query, mode, &tilted)?;

    let report = ReweightReport {
        kappa,
        samples,
        seed,
        m,
        d,
        query: query.freqs().iter().map(|f| f.as_slice().to_vec()).collect(),
        unweighted_deviation_sigma: deviation_sigma(&tilted_unweighted, &haar),
        reweighted_deviation_sigma: deviation_sigma(&tilted_reweighted, &haar),
        haar,
        tilted_unweighted,
        tilted_reweighted,
    };

    match out {
        Some(path) => {
            save_json(path, &report)?;
            println!("wrote {}", path.display());
        }
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(|source| Error::Parse {
                path: "<stdout>".into(),
                source,
            })?;
            println!("{text}");
        }
    }
    println!(
        "uncorrected deviation {:.1}σ, reweighted deviation {:.1}σ",
        report.unweighted_deviation_sigma, report.reweighted_deviation_sigma
    );
    Ok(0)
}

/// Componentwise deviation between two estimates in units of their
/// combined standard error; 0/0 counts as no deviation.
fn deviation_sigma(a: &MomentEstimate, b: &MomentEstimate) -> f64 {
    let combined = (a.std_error * a.std_error + b.std_error * b.std_error).sqrt();
    let dev = (a.value.re - b.value.re).abs().max((a.value.im - b.value.im).abs());
    if dev == 0.0 {
        0.0
    } else {
        dev / combined
    }
}

// ------------------------------------------------------------- output --

/// Headers are written explicitly so that an empty report still carries
/// its schema.
fn write_csv<T: Serialize>(path: &Path, headers: &[&str], rows: &[T]) -> Result<(), Error> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(file, headers, rows).map_err(|err| match err {
        Error::Io { source, .. } => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

fn write_csv_to<W: std::io::Write, T: Serialize>(
    writer: W,
    headers: &[&str],
    rows: &[T],
) -> Result<(), Error> {
    let mut csv_writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    csv_writer.write_record(headers).map_err(csv_error)?;
    for row in rows {
        csv_writer.serialize(row).map_err(csv_error)?;
    }
    csv_writer.flush().map_err(|source| Error::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: std::io::Error::other(err),
    }
}
