//! Command-line front end.
//!
//! Every command accepts `--config FILE` (a JSON object with the same keys as
//! the long flags, `-` replaced by `_`) and `--save-config FILE`, which
//! writes the fully resolved settings. Precedence, highest first: flags,
//! config file, the `BEAM_SEED` environment variable (seed only), built-in
//! defaults.

mod commands;
mod values;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::codebook::IdealMethod;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
pub use values::{Interval, SnrDb};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "BEAM_SEED";

#[derive(Debug, Parser)]
#[command(name = "hybrid-codebook", version, about = "Hybrid beamforming codeword and codebook design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design an ideal codeword and write it with its beam pattern
    DesignIdeal(DesignIdeal),
    /// Factor an ideal codeword into quantized analog and digital parts
    DesignPractical(DesignPractical),
    /// Build a hierarchical codebook
    BuildCodebook(BuildCodebook),
    /// Simulate hierarchical beam training over an SNR grid
    Simulate(Simulate),
    /// Sample the beam pattern of a codeword file
    Pattern(Pattern),
    /// Main-lobe MSE of PS-ICD and LS-ICD for several array sizes
    Table1(Table1),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Rect,
    Triangular,
    Step,
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ConfigFiles {
    /// Read settings from a JSON file; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the resolved settings to a JSON file
    #[arg(long, value_name = "FILE")]
    pub save_config: Option<PathBuf>,
}

macro_rules! settings {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
            #[command(flatten)]
            #[serde(skip)]
            pub files: ConfigFiles,
        }
    };
}

settings!(DesignIdeal {
    /// Ideal design method
    #[arg(long, value_enum)]
    method: IdealMethod,
    /// Antenna count
    #[arg(long)]
    n: usize,
    /// Coverage interval `lo:hi` in the cosine domain
    #[arg(long, allow_hyphen_values = true)]
    cover: Interval,
    /// Target magnitude profile
    #[arg(long, value_enum)]
    target: TargetKind,
    /// Plateau heights of the step target
    #[arg(long, value_delimiter = ',')]
    step_heights: Vec<f64>,
    /// Fraction of the coverage taken by the first step plateau
    #[arg(long)]
    step_split: f64,
    /// Steering grid size
    #[arg(long)]
    k: usize,
    /// PS-ICD phase updates
    #[arg(long)]
    rmax: usize,
    #[arg(long)]
    seed: u64,
    /// Codeword output (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Beam pattern output (CSV)
    #[arg(long)]
    pattern: PathBuf,
    /// Pattern sample count
    #[arg(long)]
    points: usize,
});

settings!(DesignPractical {
    /// Ideal codeword input (JSON)
    #[arg(long)]
    input: PathBuf,
    /// RF chain counts, comma separated
    #[arg(long, value_delimiter = ',')]
    nrf: Vec<usize>,
    /// Phase-shifter resolution in bits
    #[arg(long)]
    b: u32,
    /// Maximum outer iterations
    #[arg(long)]
    tmax: usize,
    #[arg(long)]
    seed: u64,
    /// Random initializations per RF chain count; seeds are seed, seed+1, ...
    #[arg(long)]
    seeds: usize,
    /// Hybrid codeword output (JSON); with several RF chain counts `-nrfK` is appended to the stem
    #[arg(long)]
    out: PathBuf,
    /// Per-run deviation report (CSV)
    #[arg(long)]
    report: PathBuf,
});

settings!(BuildCodebook {
    /// Antenna count
    #[arg(long)]
    n: usize,
    /// Hierarchical factor
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum)]
    method: IdealMethod,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    rmax: usize,
    #[arg(long)]
    seed: u64,
    /// RF chains; when set, every entry also gets a practical codeword
    #[arg(long)]
    nrf: usize,
    #[arg(long)]
    b: u32,
    #[arg(long)]
    tmax: usize,
    /// Codebook output (JSON)
    #[arg(long)]
    out: PathBuf,
});

settings!(Simulate {
    /// Transmit codebook (JSON)
    #[arg(long)]
    tx: PathBuf,
    /// Receive codebook (JSON); defaults to the transmit codebook
    #[arg(long)]
    rx: PathBuf,
    /// SNR points in dB, comma separated; `inf` and `-inf` are accepted
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Vec<SnrDb>,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Channel paths
    #[arg(long)]
    paths: usize,
    /// Train with the practical codewords
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    practical: bool,
    /// Draw path angles from the bottom-layer sector midpoints
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    on_grid: bool,
    /// Success-rate output (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Success-rate output (JSON)
    #[arg(long)]
    json: PathBuf,
    /// Include per-trial records in the JSON output
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    record_trials: bool,
});

settings!(Pattern {
    /// Codeword input: ideal or hybrid (JSON)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    points: usize,
    /// Pattern output (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Also report the main-lobe MSE against a rect target on this interval
    #[arg(long, allow_hyphen_values = true)]
    cover: Interval,
});

settings!(Table1 {
    /// Antenna counts, comma separated
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    rmax: usize,
    #[arg(long)]
    seed: u64,
    /// PS-ICD initializations per size; the median MSE is reported
    #[arg(long)]
    seeds: usize,
    /// Table output (CSV)
    #[arg(long)]
    out: PathBuf,
});

/// Stacks setting layers; keys present in later layers win.
fn layer<T: Serialize + DeserializeOwned>(layers: &[&T]) -> Result<T> {
    let mut merged = Map::new();
    for l in layers {
        if let Value::Object(m) = serde_json::to_value(l)? {
            merged.extend(m);
        }
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

/// Resolves flags against the config file, the seed variable and defaults,
/// and writes the result when `--save-config` is given.
fn resolve<T>(flags: &T, files: &ConfigFiles, defaults: T, env_seed: impl FnOnce(u64) -> T) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let env = match std::env::var(SEED_ENV) {
        Ok(s) => {
            let seed = s
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
            env_seed(seed)
        }
        Err(_) => T::default(),
    };
    let file: T = match &files.config {
        Some(path) => read_json(path)?,
        None => T::default(),
    };
    let resolved = layer(&[&defaults, &env, &file, flags])?;
    if let Some(path) = &files.save_config {
        write_json(path, &resolved)?;
    }
    Ok(resolved)
}

pub(crate) fn required<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("--{} is required", name.replace('_', "-"))))
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        Error::Io(_) | Error::Json(_) | Error::Format(_) => EXIT_IO,
        Error::SynthesisFailure(_) => EXIT_NUMERICAL,
        Error::Entry { source, .. } => exit_code(source),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DesignIdeal(a) => {
            let s = resolve(&a, &a.files, commands::design_ideal_defaults(), |seed| DesignIdeal { seed: Some(seed), ..Default::default() })?;
            commands::design_ideal(&s)
        }
        Command::DesignPractical(a) => {
            let s = resolve(&a, &a.files, commands::design_practical_defaults(), |seed| DesignPractical { seed: Some(seed), ..Default::default() })?;
            commands::design_practical(&s)
        }
        Command::BuildCodebook(a) => {
            let s = resolve(&a, &a.files, commands::build_codebook_defaults(), |seed| BuildCodebook { seed: Some(seed), ..Default::default() })?;
            commands::build_codebook(&s)
        }
        Command::Simulate(a) => {
            let s = resolve(&a, &a.files, commands::simulate_defaults(), |seed| Simulate { seed: Some(seed), ..Default::default() })?;
            commands::simulate(&s)
        }
        Command::Pattern(a) => {
            let s = resolve(&a, &a.files, commands::pattern_defaults(), |_| Pattern::default())?;
            commands::pattern(&s)
        }
        Command::Table1(a) => {
            let s = resolve(&a, &a.files, commands::table1_defaults(), |seed| Table1 { seed: Some(seed), ..Default::default() })?;
            commands::table1(&s)
        }
    }
}

/// Parses the process arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults() {
        let defaults = commands::table1_defaults();
        let file = Table1 { k: Some(64), rmax: Some(100), ..Default::default() };
        let flags = Table1 { k: Some(256), ..Default::default() };
        let r = layer(&[&defaults, &file, &flags]).unwrap();
        assert_eq!(r.k, Some(256));
        assert_eq!(r.rmax, Some(100));
        assert_eq!(r.sizes, defaults.sizes);
    }

    #[test]
    fn resolved_settings_round_trip() {
        let d = commands::simulate_defaults();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Simulate>(&text).unwrap(), d);
        let d = commands::design_ideal_defaults();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DesignIdeal>(&text).unwrap(), d);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<Table1>(r#"{"sizes": [16], "bogus": 1}"#).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Format("x".into())), EXIT_IO);
        let nested = Error::Entry { layer: 1, index: 0, source: Box::new(Error::SynthesisFailure("x".into())) };
        assert_eq!(exit_code(&nested), EXIT_NUMERICAL);
    }
}
