use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use polar_aug::bench::{self, ExperimentConfig, SystemKind};
use polar_aug::channel::SnrConvention;
use polar_aug::construction::CodeSpec;
use polar_aug::coupling::{build_setup, Exchange, System, DEFAULT_DESIGN_SNR_DB};

#[derive(Parser)]
#[command(name = "polar-aug", version, about = "Augmented polar codes: construction, BP simulation, complexity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code and write its spec file.
    Construct {
        #[command(flatten)]
        system: SystemArgs,
        /// Compact coupling-graph definition (TOML) to build.
        #[arg(long, conflicts_with_all = ["setup", "plain", "spec"])]
        graph: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a BER/FER sweep and write CSV.
    Simulate(SimulateArgs),
    /// Report processing-element count against the N = 4096 reference.
    Complexity {
        #[command(flatten)]
        system: SystemArgs,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Predefined setup 1, 2 or 3.
    #[arg(long, conflicts_with_all = ["plain", "spec"])]
    setup: Option<u8>,
    /// Plain polar code of length --n with --k information bits.
    #[arg(long, requires_all = ["n", "k"])]
    plain: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Spec file written by `construct`.
    #[arg(long, conflicts_with = "plain")]
    spec: Option<PathBuf>,
    /// Design Es/N0 in dB for the Bhattacharyya construction.
    #[arg(long, default_value_t = DEFAULT_DESIGN_SNR_DB, allow_negative_numbers = true)]
    design_snr: f64,
}

impl SystemArgs {
    fn build(&self) -> Result<Option<System>> {
        if let Some(id) = self.setup {
            return Ok(Some(System::Augmented(build_setup(id, self.design_snr)?)));
        }
        if self.plain {
            let (n, k) = (self.n.unwrap_or_default(), self.k.unwrap_or_default());
            return Ok(Some(System::Plain(CodeSpec::plain(levels_of(n)?, k, self.design_snr)?)));
        }
        if let Some(path) = &self.spec {
            return Ok(Some(bench::load_system(path)?));
        }
        Ok(None)
    }
}

fn levels_of(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        bail!("--n {n} is not a power of two");
    }
    Ok(n.trailing_zeros())
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    /// EbN0 or EsN0.
    #[arg(long)]
    convention: Option<SnrConvention>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    early_stop: bool,
    /// Decode augmented codes without auxiliary message exchange.
    #[arg(long)]
    uncoupled: bool,
    #[arg(long)]
    min_frame_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl SimulateArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::new(SystemKind::Setup1),
        };
        let sys = &self.system;
        if let Some(id) = sys.setup {
            cfg.system = match id {
                1 => SystemKind::Setup1,
                2 => SystemKind::Setup2,
                3 => SystemKind::Setup3,
                _ => bail!("unknown setup {id}; expected 1, 2 or 3"),
            };
        }
        if sys.plain {
            cfg.system = SystemKind::Plain;
            cfg.levels = Some(levels_of(sys.n.unwrap_or_default())?);
            cfg.k = sys.k;
        }
        if let Some(path) = &sys.spec {
            cfg.system = SystemKind::Custom;
            cfg.spec_path = Some(path.clone());
        }
        if sys.design_snr != DEFAULT_DESIGN_SNR_DB {
            cfg.design_snr_db = sys.design_snr;
        }
        if let Some(snr) = &self.snr {
            cfg.snr_db = snr.clone();
        }
        if let Some(c) = self.convention {
            cfg.convention = c;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if self.early_stop {
            cfg.early_stop = true;
        }
        if self.uncoupled {
            cfg.exchange = Exchange::Uncoupled;
        }
        if let Some(v) = self.min_frame_errors {
            cfg.min_frame_errors = v;
        }
        if let Some(v) = self.max_frames {
            cfg.max_frames = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(path) = &self.output {
            cfg.output = Some(path.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_or_print(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Construct { system, graph, output } => {
            let built = match graph {
                Some(path) => bench::load_coupling_def(&path)?,
                None => match system.build()? {
                    Some(s) => s,
                    None => bail!("choose --setup, --plain, --spec or --graph"),
                },
            };
            eprint!("{}", bench::construct_report(&built));
            write_or_print(output.as_ref(), &built.to_toml()?)?;
        }
        Command::Simulate(args) => {
            let cfg = args.config()?;
            if let Some(threads) = args.threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .context("configuring thread pool")?;
            }
            let (_, csv) = bench::simulate(&cfg)?;
            write_or_print(cfg.output.as_ref(), &csv)?;
        }
        Command::Complexity { system } => {
            let Some(built) = system.build()? else {
                bail!("choose --setup, --plain or --spec");
            };
            print!("{}", bench::complexity_report(&built)?);
        }
    }
    Ok(())
}
