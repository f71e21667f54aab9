use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use s2align::datagen::{
    build_dataset, standard_patterns, DatasetConfig, Manifest, NoiseModel, PatternFamily, Stage, MIN_TEMPLATE_POINTS,
};

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Pattern families, e.g. `A1,A3` or `small-islands` (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub patterns: Vec<PatternFamily>,
    /// Stages, e.g. `B1,B7` (default: B1 through B7).
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<Stage>,
    /// Random rotations per pattern and stage.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub rotations: u64,
    /// Points per template.
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Ambient)]
    pub noise: NoiseArg,
    /// Dataset root directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum NoiseArg {
    /// Isotropic 3D noise, renormalized.
    Ambient,
    /// Tangent-plane noise, renormalized.
    Tangent,
}

impl GenerateArgs {
    pub fn config(&self) -> Result<DatasetConfig, CliError> {
        if self.points < MIN_TEMPLATE_POINTS {
            return Err(CliError::Usage(format!(
                "--points must be at least {MIN_TEMPLATE_POINTS}"
            )));
        }
        let families = if self.patterns.is_empty() {
            PatternFamily::ALL.to_vec()
        } else {
            dedup(&self.patterns)
        };
        let stages = if self.stages.is_empty() {
            Stage::ALL.to_vec()
        } else {
            dedup(&self.stages)
        };
        let mut config = DatasetConfig::standard(self.points, self.rotations as usize, self.seed);
        config.patterns = standard_patterns(&families, self.points, self.seed);
        config.stages = stages;
        config.noise_model = match self.noise {
            NoiseArg::Ambient => NoiseModel::AmbientRenormalize,
            NoiseArg::Tangent => NoiseModel::Tangent,
        };
        Ok(config)
    }
}

fn dedup<T: PartialEq + Copy>(items: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for &i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

pub fn generate(args: &GenerateArgs) -> Result<Manifest, CliError> {
    Ok(build_dataset(&args.out, &args.config()?)?)
}

pub fn run(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let manifest = generate(args)?;
    writeln!(
        out,
        "wrote {} configurations to {}",
        manifest.entries.len(),
        args.out.display()
    )
    .map_err(|e| CliError::Data(e.to_string()))
}
