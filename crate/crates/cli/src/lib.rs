//! The `s2align` command line: dataset generation, batch alignment,
//! scaling benchmarks, registration, image alignment and summary tables.

pub mod align;
pub mod bench;
pub mod eval;
pub mod generate;
pub mod register;
pub mod stats;

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use align::RunRecord;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "S2ALIGN_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments; exit code 1.
    Usage(String),
    /// Unreadable or inconsistent input data; exit code 2.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<s2align::Error> for CliError {
    fn from(e: s2align::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "s2align", version, about = "Correspondence-free rotation estimation on the sphere")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a benchmark dataset with templates, rotated sources and ground truth.
    Generate(generate::GenerateArgs),
    /// Align every source in a dataset and emit one JSON record per configuration.
    Align(align::AlignArgs),
    /// Time the aligners over growing point counts.
    BenchScaling(bench::BenchArgs),
    /// Register two 3D point clouds.
    Register(register::RegisterArgs),
    /// Estimate the rotation between two equirectangular images.
    ImageAlign(register::ImageAlignArgs),
    /// Summarize alignment records by method, pattern and stage.
    Eval(eval::EvalArgs),
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return 1;
        }
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Generate(a) => generate::run(a, out),
        Command::Align(a) => align::run(a, out, err),
        Command::BenchScaling(a) => bench::run(a, out, err),
        Command::Register(a) => register::run_register(a, out),
        Command::ImageAlign(a) => register::run_image_align(a, out),
        Command::Eval(a) => eval::run(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs `body` against `path`, or against `fallback` when no path is given.
/// File output goes to a temporary sibling that is renamed on success.
pub(crate) fn with_output(
    path: Option<&PathBuf>,
    fallback: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let Some(path) = path else {
        body(fallback)?;
        return fallback.flush().map_err(|e| CliError::Data(format!("stdout: {e}")));
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let file = File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let outcome = body(&mut w).and_then(|_| w.flush().map_err(|e| io_error(&tmp, e)));
    drop(w);
    match outcome {
        Ok(()) => std::fs::rename(&tmp, path).map_err(|e| io_error(path, e)),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub(crate) fn json_line<T: serde::Serialize>(w: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *w, value).map_err(|e| CliError::Data(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| CliError::Data(e.to_string()))
}
