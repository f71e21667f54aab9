use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use crate::stats::{quantile_sorted, sorted};
use crate::{io_error, with_output, CliError, RunRecord};

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// JSON-lines records from `align`; `-` or omitted reads stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error statistics for one method × pattern × stage group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub pattern: String,
    pub stage: String,
    pub count: usize,
    pub min_deg: f64,
    pub q1_deg: f64,
    pub median_deg: f64,
    pub q3_deg: f64,
    pub max_deg: f64,
    pub mean_iterations: f64,
    pub mean_elapsed_seconds: f64,
}

/// Splits `A3B5R17` into `("A3", "B5")`.
pub fn pattern_and_stage(config_id: &str) -> Option<(String, String)> {
    let b = config_id.find('B')?;
    let r = config_id.rfind('R')?;
    let (pattern, stage) = (&config_id[..b], &config_id[b..r]);
    let digits = |s: &str| s.len() > 1 && s[1..].bytes().all(|c| c.is_ascii_digit());
    (pattern.starts_with('A') && digits(pattern) && digits(stage) && digits(&config_id[r..]))
        .then(|| (pattern.to_string(), stage.to_string()))
}

fn sort_key(label: &str) -> (char, u64) {
    let mut chars = label.chars();
    let head = chars.next().unwrap_or(' ');
    (head, chars.as_str().parse().unwrap_or(u64::MAX))
}

pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>, CliError> {
    let mut groups: BTreeMap<(String, (char, u64), (char, u64)), (String, String, Vec<&RunRecord>)> = BTreeMap::new();
    for r in records {
        let (pattern, stage) = pattern_and_stage(&r.config_id)
            .ok_or_else(|| CliError::Data(format!("cannot parse configuration ID '{}'", r.config_id)))?;
        groups
            .entry((r.method.clone(), sort_key(&pattern), sort_key(&stage)))
            .or_insert_with(|| (pattern, stage, Vec::new()))
            .2
            .push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((method, _, _), (pattern, stage, rs))| {
            let errs = sorted(rs.iter().map(|r| r.geodesic_error_deg));
            let n = rs.len() as f64;
            let q = |p| quantile_sorted(&errs, p).expect("groups are nonempty");
            SummaryRow {
                method,
                pattern,
                stage,
                count: rs.len(),
                min_deg: errs[0],
                q1_deg: q(0.25),
                median_deg: q(0.5),
                q3_deg: q(0.75),
                max_deg: errs[errs.len() - 1],
                mean_iterations: rs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_elapsed_seconds: rs.iter().map(|r| r.elapsed_seconds).sum::<f64>() / n,
            }
        })
        .collect())
}

pub fn read_records(reader: impl BufRead, source: &str) -> Result<Vec<RunRecord>, CliError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord =
            serde_json::from_str(&line).map_err(|e| CliError::Data(format!("{source}:{}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_summary(w: &mut dyn Write, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    // Header even for an empty table.
    if rows.is_empty() {
        csv.write_record([
            "method",
            "pattern",
            "stage",
            "count",
            "min_deg",
            "q1_deg",
            "median_deg",
            "q3_deg",
            "max_deg",
            "mean_iterations",
            "mean_elapsed_seconds",
        ])
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    for r in rows {
        csv.serialize(r).map_err(|e| CliError::Data(e.to_string()))?;
    }
    csv.flush().map_err(|e| CliError::Data(e.to_string()))
}

pub fn run(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let records = match args.input.as_ref().filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            let f = File::open(path).map_err(|e| io_error(path, e))?;
            read_records(BufReader::new(f), &path.display().to_string())?
        }
        None => read_records(io::stdin().lock(), "stdin")?,
    };
    let rows = summarize(&records)?;
    with_output(args.out.as_ref(), out, |w| write_summary(w, &rows))
}
