use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use s2align::aligners::{AlignerConfig, Method};
use s2align::pcr::{read_cloud, register, Embedding, RegistrationOptions};
use s2align::sph_image::{estimate_rotation_images_with, read_image, DEFAULT_THRESHOLD};

use crate::{with_output, CliError};

#[derive(Debug, Clone, Args)]
pub struct RegisterArgs {
    /// Cloud to move (XYZ or PLY).
    #[arg(long)]
    pub source: PathBuf,
    /// Reference cloud (XYZ or PLY).
    #[arg(long)]
    pub target: PathBuf,
    /// Spherical embedding: egi or case.
    #[arg(long, default_value = "egi")]
    pub embedding: Embedding,
    /// spmc, frs or hybrid (default: spmc for CASE, hybrid for EGI).
    #[arg(long)]
    pub aligner: Option<Method>,
    /// Voxel edge for coarse translation voting, in scene units.
    #[arg(long, default_value_t = 0.2)]
    pub voxel_size: f64,
    /// The source is a partial view of the target.
    #[arg(long)]
    pub partial: bool,
    /// Neighborhood radius for EGI normals.
    #[arg(long)]
    pub radius: Option<f64>,
    /// JSON output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_register(args: &RegisterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = read_cloud(&args.source)?;
    let target = read_cloud(&args.target)?;
    let method = args.aligner.unwrap_or(match args.embedding {
        Embedding::Case => Method::Spmc,
        Embedding::Egi => Method::Hybrid,
    });
    let mut opts = RegistrationOptions::new(args.embedding, method);
    opts.voxel_size = args.voxel_size;
    opts.source_is_partial = args.partial;
    if let Some(r) = args.radius {
        opts.egi.radius = r;
    }
    let result = register(&source, &target, &opts)?;
    with_output(args.out.as_ref(), out, |w| {
        serde_json::to_writer_pretty(&mut *w, &result).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Data(e.to_string()))
    })
}

#[derive(Debug, Clone, Args)]
pub struct ImageAlignArgs {
    /// Reference image (PGM, PPM or CSV).
    #[arg(long)]
    pub template: PathBuf,
    /// Rotated image (PGM, PPM or CSV).
    #[arg(long)]
    pub source: PathBuf,
    /// Pixels at or above this intensity become points.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "hybrid")]
    pub method: Method,
    /// JSON output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_image_align(args: &ImageAlignArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let template = read_image(&args.template)?;
    let source = read_image(&args.source)?;
    let result = estimate_rotation_images_with(&template, &source, args.threshold, &AlignerConfig::default(), args.method)?;
    with_output(args.out.as_ref(), out, |w| {
        serde_json::to_writer_pretty(&mut *w, &result).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Data(e.to_string()))
    })
}
