//! Command-line front end. Every subcommand writes its artifacts atomically:
//! output files appear only once fully written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::align::{self, AlignError, ScoreParams};
use crate::archspec::{load_spec_dir, ArchSpec, ArchSpecError, LayerAlphabet};
use crate::harness::{self, ExperimentConfig, HarnessError};
use crate::imageio::{self, ImageIoError, PgmEncoding, IDX_IMAGES_MAGIC};
use crate::neurn::{self, NeurnConfig, NeurnError, Padding};
use crate::patterns::{self, PatternConfig, PatternError, Weighting};
use crate::simmat::{self, ModelSelection, PerfTable, SimMatError, SimilarityMatrix, Variant};

macro_rules! fixture_version {
    () => {
        "fixtures-1"
    };
}

/// Version of the bundled layer alphabet, architecture specs and accuracy table.
pub const FIXTURE_VERSION: &str = fixture_version!();

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", fixture_version!(), ")");

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image { path: PathBuf, source: ImageIoError },

    #[error(transparent)]
    Neurn(#[from] NeurnError),

    #[error(transparent)]
    ArchSpec(#[from] ArchSpecError),

    #[error(transparent)]
    Align(#[from] AlignError),

    #[error(transparent)]
    Pattern(#[from] PatternError),

    #[error(transparent)]
    SimMat(#[from] SimMatError),

    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "neurn-kit", version = VERSION, about = "Patch-statistics normalization and architecture similarity tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// NeuRN image transform.
    #[command(subcommand)]
    Neurn(NeurnCommand),
    /// Needleman-Wunsch architecture alignment.
    #[command(subcommand)]
    Align(AlignCommand),
    /// Shared layer-pattern analysis.
    #[command(subcommand)]
    Patterns(PatternsCommand),
    /// Cosine similarity of models' accuracy vectors.
    Funcsim(FuncsimArgs),
    /// Synthetic domain-shift benchmark.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand, Debug)]
pub enum NeurnCommand {
    /// Transform a PGM image or an IDX image file.
    Apply(NeurnApplyArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingArg {
    Replicate,
    Reflect,
}

impl From<PaddingArg> for Padding {
    fn from(p: PaddingArg) -> Self {
        match p {
            PaddingArg::Replicate => Padding::Replicate,
            PaddingArg::Reflect => Padding::Reflect,
        }
    }
}

fn parse_k(s: &str) -> std::result::Result<usize, String> {
    let k: usize = s
        .parse()
        .map_err(|_| format!("k must be odd ≥ 3, got {s:?}"))?;
    if k < 3 || k.is_multiple_of(2) {
        return Err(format!("k must be odd ≥ 3, got {k}"));
    }
    Ok(k)
}

#[derive(Args, Debug)]
pub struct NeurnApplyArgs {
    /// Input PGM (P2 or P5) or IDX image file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output path; written in the input's format.
    #[arg(long)]
    pub output: PathBuf,
    /// Window side length (odd, at least 3).
    #[arg(long, default_value = "3", value_parser = parse_k)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "replicate")]
    pub padding: PaddingArg,
}

#[derive(Subcommand, Debug)]
pub enum AlignCommand {
    /// Pairwise similarity matrix over a directory of architecture specs.
    Matrix(AlignMatrixArgs),
}

#[derive(Args, Debug)]
pub struct SpecSource {
    /// Directory of architecture spec JSON files.
    #[arg(long)]
    pub specs: PathBuf,
    /// Layer alphabet JSON; the bundled alphabet when omitted.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
}

impl SpecSource {
    fn load(&self) -> Result<(LayerAlphabet, Vec<ArchSpec>)> {
        let alphabet = match &self.alphabet {
            Some(p) => LayerAlphabet::load(p)?,
            None => LayerAlphabet::bundled(),
        };
        let specs = load_spec_dir(&self.specs, &alphabet)?;
        if specs.len() < 2 {
            return Err(CliError::Usage(format!(
                "need at least 2 spec files in {}, found {}",
                self.specs.display(),
                specs.len()
            )));
        }
        Ok((alphabet, specs))
    }
}

#[derive(Args, Debug)]
pub struct AlignMatrixArgs {
    #[command(flatten)]
    pub source: SpecSource,
    #[arg(long = "match", default_value_t = 4, allow_hyphen_values = true)]
    pub match_score: i64,
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    pub mismatch: i64,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub gap: i64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write unnormalized integer scores.
    #[arg(long)]
    pub raw: bool,
    /// Order rows and columns by average-linkage clustering.
    #[arg(long)]
    pub cluster: bool,
}

#[derive(Subcommand, Debug)]
pub enum PatternsCommand {
    /// Patterns shared by the most models.
    Top(PatternsTopArgs),
    /// Pairwise pattern-similarity matrix.
    Matrix(PatternsMatrixArgs),
}

#[derive(Args, Debug)]
pub struct PatternsTopArgs {
    #[command(flatten)]
    pub source: SpecSource,
    /// Number of patterns to report.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Shortest pattern considered.
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingArg {
    Length,
    Uniform,
}

#[derive(Args, Debug)]
pub struct PatternsMatrixArgs {
    #[command(flatten)]
    pub source: SpecSource,
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
    #[arg(long, value_enum, default_value = "length")]
    pub weighting: WeightingArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub cluster: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantArg {
    Baseline,
    Neurn,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::Neurn => Variant::Neurn,
        }
    }
}

#[derive(Args, Debug)]
pub struct FuncsimArgs {
    /// Accuracy table CSV; the bundled table when omitted.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "baseline")]
    pub variant: VariantArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the neurn-minus-baseline matrix and print both means.
    #[arg(long)]
    pub diff: bool,
    /// Leave out models whose name ends in "(NAS)".
    #[arg(long)]
    pub exclude_nas: bool,
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Run one experiment and write report.json and summary.csv.
    Run(BenchRunArgs),
}

#[derive(Args, Debug)]
pub struct BenchRunArgs {
    /// Experiment config JSON; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a sibling temporary file and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes all files or none: on failure, files already written are removed.
fn write_all_or_none(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    for (i, (path, bytes)) in files.iter().enumerate() {
        if let Err(e) = write_atomic(path, bytes) {
            for (done, _) in &files[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(e);
        }
    }
    Ok(())
}

fn run_neurn_apply(args: &NeurnApplyArgs) -> Result<String> {
    let cfg = NeurnConfig::new(args.k, args.padding.into())?;
    let bytes = read(&args.input)?;
    let img_err = |source| CliError::Image {
        path: args.input.clone(),
        source,
    };
    let out = if bytes.starts_with(&IDX_IMAGES_MAGIC.to_be_bytes()) {
        let images = imageio::read_idx_images(&bytes).map_err(img_err)?;
        let transformed = neurn::transform_batch(&images, &cfg)?;
        imageio::write_idx_images(&transformed).map_err(img_err)?
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        let encoding = if bytes[1] == b'2' {
            PgmEncoding::Ascii
        } else {
            PgmEncoding::Binary
        };
        let img = imageio::read_pgm(&bytes).map_err(img_err)?;
        imageio::write_pgm(&neurn::transform(&img, &cfg)?, encoding).map_err(img_err)?
    } else {
        return Err(CliError::Usage(format!(
            "{}: not a PGM (P2/P5) or IDX image file",
            args.input.display()
        )));
    };
    write_atomic(&args.output, &out)?;
    Ok(format!("wrote {}", args.output.display()))
}

fn ordered(m: SimilarityMatrix, cluster: bool) -> SimilarityMatrix {
    if cluster {
        let order = simmat::cluster_order(&m);
        m.reordered(&order)
    } else {
        m
    }
}

fn run_align_matrix(args: &AlignMatrixArgs) -> Result<String> {
    let params = ScoreParams::new(args.match_score, args.mismatch, args.gap)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, specs) = args.source.load()?;
    let m = if args.raw {
        align::pairwise_raw_matrix(&specs, params)?
    } else {
        align::pairwise_matrix(&specs, params)?
    };
    let m = ordered(m, args.cluster);
    write_atomic(&args.out, m.to_csv_string().as_bytes())?;
    Ok(format!(
        "wrote {}x{} matrix to {}",
        m.len(),
        m.len(),
        args.out.display()
    ))
}

fn run_patterns_top(args: &PatternsTopArgs) -> Result<String> {
    if args.k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    let (alphabet, specs) = args.source.load()?;
    let top = patterns::top_common_patterns(&specs, args.k, args.min_len).map_err(|e| match e {
        PatternError::MinLenTooSmall(_) => CliError::Usage(e.to_string()),
        e => e.into(),
    })?;
    write_atomic(
        &args.out,
        patterns::top_patterns_csv(&top, &alphabet).as_bytes(),
    )?;
    Ok(format!(
        "wrote {} patterns to {}",
        top.len(),
        args.out.display()
    ))
}

fn run_patterns_matrix(args: &PatternsMatrixArgs) -> Result<String> {
    let weighting = match args.weighting {
        WeightingArg::Length => Weighting::Length,
        WeightingArg::Uniform => Weighting::Uniform,
    };
    let cfg =
        PatternConfig::new(args.min_len, weighting).map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, specs) = args.source.load()?;
    let m = ordered(patterns::pattern_matrix(&specs, cfg)?, args.cluster);
    write_atomic(&args.out, m.to_csv_string().as_bytes())?;
    Ok(format!(
        "wrote {}x{} matrix to {}",
        m.len(),
        m.len(),
        args.out.display()
    ))
}

fn run_funcsim(args: &FuncsimArgs) -> Result<String> {
    let table = match &args.table {
        Some(p) => PerfTable::load(p)?,
        None => PerfTable::bundled(),
    };
    let selection = if args.exclude_nas {
        ModelSelection::ExcludeNas
    } else {
        ModelSelection::All
    };
    if args.diff {
        let base = simmat::functional_similarity(&table, Variant::Baseline, selection)?;
        let neurn = simmat::functional_similarity(&table, Variant::Neurn, selection)?;
        let diff = simmat::difference_matrix(&neurn, &base)?;
        let mb = simmat::mean_offdiagonal(&base)?;
        let mn = simmat::mean_offdiagonal(&neurn)?;
        write_atomic(&args.out, diff.to_csv_string().as_bytes())?;
        Ok(format!(
            "baseline mean off-diagonal similarity: {mb:.6}\nneurn mean off-diagonal similarity: {mn:.6}\ndelta: {:+.6}",
            mn - mb
        ))
    } else {
        let variant: Variant = args.variant.into();
        let m = simmat::functional_similarity(&table, variant, selection)?;
        let mean = simmat::mean_offdiagonal(&m)?;
        write_atomic(&args.out, m.to_csv_string().as_bytes())?;
        Ok(format!("{variant} mean off-diagonal similarity: {mean:.6}"))
    }
}

fn run_bench(args: &BenchRunArgs) -> Result<String> {
    let cfg = match &args.config {
        Some(p) => {
            let bytes = read(p)?;
            let text = String::from_utf8_lossy(&bytes);
            ExperimentConfig::from_json(&text).map_err(|e| match e {
                HarnessError::Config { path, message } => {
                    CliError::Usage(format!("{}: field {path}: {message}", p.display()))
                }
                e => e.into(),
            })?
        }
        None => ExperimentConfig::default(),
    };
    let report = harness::run_experiment(&cfg)?;
    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    write_all_or_none(&[
        (args.out.join("report.json"), report.to_json().into_bytes()),
        (
            args.out.join("summary.csv"),
            report.summary_csv().into_bytes(),
        ),
    ])?;
    let mut msg = report.summary_csv();
    for w in report
        .baseline
        .warnings
        .iter()
        .chain(&report.neurn.warnings)
    {
        msg.push_str(&format!("warning: {w}\n"));
    }
    msg.push_str(&format!("wall time: {:.2?}", report.wall_time));
    Ok(msg)
}

/// Executes a parsed command and returns the text to print on success.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Neurn(NeurnCommand::Apply(a)) => run_neurn_apply(a),
        Command::Align(AlignCommand::Matrix(a)) => run_align_matrix(a),
        Command::Patterns(PatternsCommand::Top(a)) => run_patterns_top(a),
        Command::Patterns(PatternsCommand::Matrix(a)) => run_patterns_matrix(a),
        Command::Funcsim(a) => run_funcsim(a),
        Command::Bench(BenchCommand::Run(a)) => run_bench(a),
    }
}
