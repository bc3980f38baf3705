//! Command-line front end.

use crate::config::{Profile, Settings, DATASET_KEYS};
use crate::dataset::materialize_dataset;
use crate::error::{LabError, Result};
use crate::formats::{encode_ppm, read_file, read_ppm, write_file};
use crate::harness::{self, Progress};
use clap::{Args, Parser, Subcommand};
use cptlab_core::jpeg::{decode_jpeg, encode_jpeg_with, quant_table, scale_factor, TableMode, BASE_TABLE, STANDARD_CHROMA_TABLE};
use cptlab_core::QualityFactor;
use std::fmt::Write as _;
use std::path::PathBuf;

macro_rules! key_flags {
    ($name:ident { $($(#[doc = $doc:literal])* $field:ident $(: $kind:ident)?),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Args)]
        pub struct $name {
            $(
                $(#[doc = $doc])*
                #[arg(long, value_name = "VALUE" $(, num_args = 0..=1, default_missing_value = key_flags!(@missing $kind))?)]
                pub $field: Option<String>,
            )*
        }

        impl $name {
            /// `(key, value)` for every flag given on the command line.
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                out
            }
        }
    };
    (@missing bool) => { "true" };
}

key_flags!(DatasetFlags {
    /// Number of scenes to generate.
    scenes,
    /// Scene width in pixels.
    width,
    /// Scene height in pixels.
    height,
    /// Fewest heads per scene.
    min_heads,
    /// Most heads per scene.
    max_heads,
    /// Smallest head radius in pixels.
    min_radius,
    /// Largest head radius in pixels.
    max_radius,
    /// Period of the background texture in pixels.
    texture_scale,
    /// Relative train,val,test weights, e.g. 200,30,50.
    splits,
    /// Master seed of the scene generator.
    dataset_seed,
    /// Gaussian kernel sigma of the density maps.
    sigma,
    /// Comma-separated JPEG qualities to encode.
    qfs,
    /// Use the standard chroma base table instead of sharing the luma one.
    standard_chroma_table: bool,
    /// Chroma subsampling: 420 or 444.
    subsampling,
});

key_flags!(PlanFlags {
    /// Manifest of a dataset written by `gen`; generated in memory when unset.
    dataset_manifest,
    /// Training regime: CPT, NPT, SCRATCH, NO_FINETUNE or FIXED_PRETRAIN(q).
    mode,
    /// Strictly decreasing comma-separated qualities for CPT.
    curriculum,
    /// Quality of the pre-training stage.
    base_qf,
    /// Quality the run is evaluated at.
    target_qf,
    /// Comma-separated target qualities of a sweep.
    target_qfs,
    /// Comma-separated regimes of a sweep.
    methods,
    /// Comma-separated training seeds.
    seeds,
    /// AdamW learning rate.
    learning_rate,
    /// Per-epoch multiplicative learning rate decay.
    lr_decay,
    /// Decoupled weight decay.
    weight_decay,
    /// Epochs per stage.
    epochs,
    /// Images per optimizer step.
    batch_size,
    /// Split the epoch budget evenly across a curriculum's stages.
    equal_budget: bool,
});

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat `key = value` file applied before the flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, value_name = "N")]
    pub jobs: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Suppress progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Parser)]
#[command(name = "cptlab", version, about = "Compression-aware crowd counting lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic scenes and write originals, annotations, JPEGs and a manifest.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dataset: DatasetFlags,
    },
    /// Encode a binary PPM as a baseline JPEG.
    Encode {
        /// Quality factor, 1 to 100.
        #[arg(long)]
        qf: i64,
        /// Input PPM.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output JPEG.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Use the standard chroma base table.
        #[arg(long)]
        standard_chroma_table: bool,
        /// Chroma subsampling: 420 or 444.
        #[arg(long, default_value = "420")]
        subsampling: String,
    },
    /// Decode a JPEG written by `encode` into a binary PPM.
    Decode {
        /// Input JPEG.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output PPM.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Print the luma and chroma quantization tables of a quality factor.
    QuantTable {
        /// Quality factor, 1 to 100.
        #[arg(long)]
        qf: i64,
        /// Use the standard chroma base table.
        #[arg(long)]
        standard_chroma_table: bool,
        /// Do not clamp entries to 255.
        #[arg(long)]
        unclamped: bool,
    },
    /// Train one plan for each seed and evaluate it on the test split.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dataset: DatasetFlags,
        #[command(flatten)]
        plan: PlanFlags,
    },
    /// Train and evaluate every method at every target quality and seed.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dataset: DatasetFlags,
        #[command(flatten)]
        plan: PlanFlags,
    },
    /// Run the seven ablation regimes at the target quality.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dataset: DatasetFlags,
        #[command(flatten)]
        plan: PlanFlags,
    },
    /// Audit a sweep directory and write aggregates and trade-off data.
    Report {
        /// Directory holding `base.csv` (and optionally `counts.csv`).
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

/// Defaults, then the config file, then flags.
pub fn resolve(profile: Profile, common: &Common, flags: &[(&str, &str)]) -> Result<Settings> {
    let mut s = Settings::defaults(profile);
    if let Some(path) = &common.config {
        s.apply_file(path)?;
    }
    for (k, v) in flags {
        s.apply(k, v)?;
    }
    if let Some(j) = &common.jobs {
        s.apply("jobs", j)?;
    }
    s.validate()?;
    Ok(s)
}

fn quality(v: i64) -> Result<QualityFactor> {
    QualityFactor::new(v).map_err(|e| LabError::Config(format!("--qf: {e}")))
}

/// The text printed by `quant-table`.
pub fn quant_table_text(qf: QualityFactor, standard_chroma: bool, unclamped: bool) -> String {
    let mode = if unclamped { TableMode::Unclamped } else { TableMode::Baseline };
    let chroma_base = if standard_chroma { &STANDARD_CHROMA_TABLE } else { &BASE_TABLE };
    let mut s = format!("# qf={} scale={}\n", qf, scale_factor(qf));
    for (name, table) in [("luma", quant_table(qf, &BASE_TABLE, mode)), ("chroma", quant_table(qf, chroma_base, mode))] {
        writeln!(s, "{name}").unwrap();
        for row in table.chunks(8) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            writeln!(s, "{}", cells.join(" ")).unwrap();
        }
    }
    s
}

fn progress(common: &Common) -> Progress {
    if common.quiet {
        Progress::Quiet
    } else {
        Progress::Stderr
    }
}

fn all_pairs<'a>(d: &'a DatasetFlags, p: &'a PlanFlags) -> Vec<(&'static str, &'a str)> {
    let mut v = d.pairs();
    v.extend(p.pairs());
    v
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, dataset } => {
            let s = resolve(Profile::Gen, &common, &dataset.pairs())?;
            materialize_dataset(&s.dataset, &common.out, &s.qfs, &s.encoder, s.jobs)?;
            let mut keys: Vec<&str> = DATASET_KEYS.to_vec();
            keys.push("qfs");
            write_file(&common.out.join("config.txt"), s.render(&keys).as_bytes())
        }
        Command::Encode {
            qf,
            input,
            out,
            standard_chroma_table,
            subsampling,
        } => {
            let qf = quality(qf)?;
            let mut s = Settings::defaults(Profile::Gen);
            s.apply("subsampling", &subsampling)?;
            s.encoder.standard_chroma_table = standard_chroma_table;
            let image = read_ppm(&input)?;
            let bits = encode_jpeg_with(&image, qf, &s.encoder)?;
            write_file(&out, &bits)
        }
        Command::Decode { input, out } => {
            let bits = read_file(&input)?;
            let image = decode_jpeg(&bits).map_err(|source| LabError::Decode { path: input.clone(), source })?;
            if image.planes().len() != 3 {
                return Err(LabError::format(&input, 1, "only colour JPEGs can be written as PPM"));
            }
            write_file(&out, &encode_ppm(&image))
        }
        Command::QuantTable {
            qf,
            standard_chroma_table,
            unclamped,
        } => {
            print!("{}", quant_table_text(quality(qf)?, standard_chroma_table, unclamped));
            Ok(())
        }
        Command::Train { common, dataset, plan } => {
            let s = resolve(Profile::Train, &common, &all_pairs(&dataset, &plan))?;
            harness::train(&s, &common.out, progress(&common)).map(|_| ())
        }
        Command::Sweep { common, dataset, plan } => {
            let s = resolve(Profile::Sweep, &common, &all_pairs(&dataset, &plan))?;
            let r = harness::sweep(&s, &common.out, progress(&common))?;
            if !common.quiet {
                for a in &r.aggregate {
                    eprintln!(
                        "{} q{}: mae {:.4} ± {:.4}{}",
                        a.method,
                        a.qf,
                        a.mean_mae,
                        a.std_mae,
                        a.improvement_pct.map_or(String::new(), |p| format!(" (improvement {p:.2}%)"))
                    );
                }
            }
            Ok(())
        }
        Command::Ablate { common, dataset, plan } => {
            let s = resolve(Profile::Ablate, &common, &all_pairs(&dataset, &plan))?;
            harness::ablate(&s, &common.out, progress(&common)).map(|_| ())
        }
        Command::Report { input, out } => {
            let r = harness::report(&input, &out)?;
            println!(
                "{} base rows, {} runs audited against raw counts, {} trade-off files",
                r.base_rows,
                r.audited_runs,
                r.plot_files.len()
            );
            Ok(())
        }
    }
}

/// Parses `args`, runs, and returns the process exit code. Errors are
/// reported on one line.
pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cptlab: error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
