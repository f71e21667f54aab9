use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use s2align::aligners::{AlignerConfig, Method};
use s2align::datagen::{Manifest, ManifestEntry, PatternFamily, Stage};
use s2align::so3::{geodesic_angle_deg, S2PointSet};
use s2align::xyz::read_xyz;
use serde::{Deserialize, Serialize};

use crate::{json_line, with_output, CliError};

/// One alignment of one dataset configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: String,
    pub method: String,
    pub geodesic_error_deg: f64,
    /// Alignment wall time, file reading excluded.
    pub elapsed_seconds: f64,
    pub iterations: usize,
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Dataset root written by `generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// One or more of spmc, frs, hybrid.
    #[arg(long, value_delimiter = ',', default_value = "hybrid")]
    pub method: Vec<Method>,
    /// Only these pattern families.
    #[arg(long, value_delimiter = ',')]
    pub patterns: Vec<PatternFamily>,
    /// Only these stages.
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<Stage>,
    /// JSON-lines output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A configuration that could not be aligned.
#[derive(Debug, Clone)]
pub struct Failure {
    pub config_id: String,
    pub message: String,
}

pub fn select<'a>(manifest: &'a Manifest, patterns: &[PatternFamily], stages: &[Stage]) -> Vec<&'a ManifestEntry> {
    manifest
        .entries
        .iter()
        .filter(|e| patterns.is_empty() || patterns.contains(&e.pattern))
        .filter(|e| stages.is_empty() || stages.contains(&e.stage))
        .collect()
}

/// Aligns each entry with each method. Records keep the entry order,
/// methods innermost.
pub fn align_entries(
    root: &Path,
    entries: &[&ManifestEntry],
    methods: &[Method],
    config: &AlignerConfig,
) -> (Vec<RunRecord>, Vec<Failure>) {
    let results: Vec<Result<Vec<RunRecord>, Failure>> = entries
        .par_iter()
        .map(|entry| align_entry(root, entry, methods, config))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rs) => records.extend(rs),
            Err(f) => failures.push(f),
        }
    }
    (records, failures)
}

fn align_entry(
    root: &Path,
    entry: &ManifestEntry,
    methods: &[Method],
    config: &AlignerConfig,
) -> Result<Vec<RunRecord>, Failure> {
    let fail = |message: String| Failure {
        config_id: entry.config_id.clone(),
        message,
    };
    let load = |rel: &Path| -> Result<S2PointSet<f64>, Failure> {
        let pts = read_xyz(&root.join(rel)).map_err(|e| fail(e.to_string()))?;
        S2PointSet::new(pts).map_err(|e| fail(format!("{}: {e}", rel.display())))
    };
    let template = load(&entry.template)?;
    let source = load(&entry.source)?;
    let expected = entry.expected_estimate().map_err(|e| fail(e.to_string()))?;
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let res = config.align(method, &template, &source).map_err(|e| fail(e.to_string()))?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok(RunRecord {
                config_id: entry.config_id.clone(),
                method: method.to_string(),
                geodesic_error_deg: geodesic_angle_deg(&res.rotation, &expected),
                elapsed_seconds: elapsed,
                iterations: res.iterations,
                converged: res.converged,
            })
        })
        .collect()
}

pub fn run(args: &AlignArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let manifest = Manifest::load(&args.dataset)?;
    let entries = select(&manifest, &args.patterns, &args.stages);
    let (records, failures) = align_entries(&args.dataset, &entries, &args.method, &AlignerConfig::default());
    with_output(args.out.as_ref(), out, |w| {
        for r in &records {
            json_line(w, r)?;
        }
        Ok(())
    })?;
    for f in &failures {
        let _ = writeln!(err, "{}: {}", f.config_id, f.message);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "{} of {} configurations failed",
            failures.len(),
            entries.len()
        )))
    }
}
