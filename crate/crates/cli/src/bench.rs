use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use s2align::aligners::{AlignerConfig, Method};
use s2align::datagen::{generate_template, PatternFamily, PatternSpec, MIN_TEMPLATE_POINTS};
use s2align::so3::{geodesic_angle_deg, sample_rotations};
use serde::Serialize;

use crate::stats::loglog_slope;
use crate::{json_line, with_output, CliError};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Point counts to time.
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    pub sizes: Vec<usize>,
    /// Random rotations per size.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub rotations: u64,
    #[arg(long, value_delimiter = ',', default_value = "spmc,frs,hybrid")]
    pub method: Vec<Method>,
    /// Template family to resample.
    #[arg(long, default_value = "A1")]
    pub pattern: PatternFamily,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines file for the fitted slopes (default: stderr).
    #[arg(long)]
    pub slopes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_points: usize,
    pub method: String,
    pub rotation: usize,
    pub elapsed_seconds: f64,
    pub iterations: usize,
    pub geodesic_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slope {
    pub method: String,
    /// Least-squares slope of ln(elapsed) against ln(n_points) over every run.
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Empty when fewer than two sizes were timed.
    pub slopes: Vec<Slope>,
}

/// Times every method on rotated copies of a template resampled to each
/// size. Runs sequentially so timings do not compete for cores.
pub fn bench_scaling(args: &BenchArgs) -> Result<BenchReport, CliError> {
    if let Some(&n) = args.sizes.iter().find(|&&n| n < MIN_TEMPLATE_POINTS) {
        return Err(CliError::Usage(format!(
            "size {n} is below the minimum of {MIN_TEMPLATE_POINTS} points"
        )));
    }
    let config = AlignerConfig::default();
    let rotations = sample_rotations::<f64>(args.rotations as usize, args.seed ^ 0x4245_4e43);
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let template = generate_template::<f64>(&PatternSpec {
            family: args.pattern,
            n_points: n,
            seed: args.seed,
        })?;
        for (k, r) in rotations.iter().enumerate() {
            let source = template.rotated(r);
            for &method in &args.method {
                let start = Instant::now();
                let res = config.align(method, &template, &source)?;
                let elapsed = start.elapsed().as_secs_f64();
                rows.push(BenchRow {
                    n_points: n,
                    method: method.to_string(),
                    rotation: k + 1,
                    elapsed_seconds: elapsed,
                    iterations: res.iterations,
                    geodesic_error_deg: geodesic_angle_deg(&res.rotation, &r.transpose()),
                });
            }
        }
    }
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let slopes = if sizes.len() < 2 {
        Vec::new()
    } else {
        args.method
            .iter()
            .filter_map(|m| {
                let name = m.to_string();
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| r.method == name)
                    .map(|r| (r.n_points as f64, r.elapsed_seconds))
                    .collect();
                loglog_slope(&pts).map(|slope| Slope { method: name, slope })
            })
            .collect()
    };
    Ok(BenchReport { rows, slopes })
}

pub fn run(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let report = bench_scaling(args)?;
    with_output(args.out.as_ref(), out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in &report.rows {
            csv.serialize(r).map_err(|e| CliError::Data(e.to_string()))?;
        }
        csv.flush().map_err(|e| CliError::Data(e.to_string()))
    })?;
    with_output(args.slopes.as_ref(), err, |w| {
        for s in &report.slopes {
            json_line(w, s)?;
        }
        Ok(())
    })
}
