//! Experiment configuration, CSV output and reports for the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bp::{self, DEFAULT_MAX_ITERS};
use crate::channel::{self, ChannelPoint, DecodeOptions, SimResult, SnrConvention, StopRule};
use crate::construction::CodeSpec;
use crate::coupling::{build_setup, CouplingDef, Exchange, System, DEFAULT_DESIGN_SNR_DB};
use crate::error::{config_err, Error, Result};

/// Processing elements of the reference length-4096 BP decoder.
pub const REFERENCE_PE_COUNT: u64 = 24576;

pub const CSV_COLUMNS: &str = "snr_db,convention,frames,bit_errors,frame_errors,ber,fer,avg_iters,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Plain,
    Setup1,
    Setup2,
    Setup3,
    /// A spec file written by `construct`.
    Custom,
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    /// Plain codes only: `log2(N)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    /// Plain codes only: information bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Custom systems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_path: Option<PathBuf>,
    #[serde(default)]
    pub design_snr_db: f64,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub convention: SnrConvention,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub early_stop: bool,
    #[serde(default)]
    pub exchange: Exchange,
    #[serde(default = "default_min_frame_errors")]
    pub min_frame_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_min_frame_errors() -> u64 {
    StopRule::default().min_frame_errors
}

fn default_max_frames() -> u64 {
    StopRule::default().max_frames
}

impl ExperimentConfig {
    pub fn new(system: SystemKind) -> Self {
        Self {
            system,
            levels: None,
            k: None,
            spec_path: None,
            design_snr_db: DEFAULT_DESIGN_SNR_DB,
            snr_db: Vec::new(),
            convention: SnrConvention::default(),
            max_iters: DEFAULT_MAX_ITERS,
            early_stop: false,
            exchange: Exchange::Coupled,
            min_frame_errors: default_min_frame_errors(),
            max_frames: default_max_frames(),
            seed: 0,
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Recovers the configuration embedded in a results file.
    pub fn from_csv_header(csv: &str) -> Result<Self> {
        let body: String = csv
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# "))
            .filter(|l| !l.starts_with("polar-aug"))
            .flat_map(|l| [l, "\n"])
            .collect();
        Self::from_toml(&body)
    }

    pub fn validate(&self) -> Result<()> {
        match self.system {
            SystemKind::Plain if self.levels.is_none() || self.k.is_none() => {
                return config_err("plain systems need `levels` and `k`");
            }
            SystemKind::Custom if self.spec_path.is_none() => {
                return config_err("custom systems need `spec_path`");
            }
            _ => {}
        }
        if self.max_iters == 0 {
            return config_err("max_iters must be positive");
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return config_err("stop rule limits must be positive");
        }
        if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return config_err(format!("SNR {bad} is not finite"));
        }
        if !self.design_snr_db.is_finite() {
            return config_err("design SNR must be finite");
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            min_frame_errors: self.min_frame_errors,
            max_frames: self.max_frames,
        }
    }

    pub fn decode_options(&self) -> DecodeOptions {
        DecodeOptions {
            max_iters: self.max_iters,
            early_stop: self.early_stop,
            exchange: self.exchange,
        }
    }

    pub fn build_system(&self) -> Result<System> {
        self.validate()?;
        match self.system {
            SystemKind::Plain => Ok(System::Plain(CodeSpec::plain(
                self.levels.unwrap_or_default(),
                self.k.unwrap_or_default(),
                self.design_snr_db,
            )?)),
            SystemKind::Setup1 => Ok(System::Augmented(build_setup(1, self.design_snr_db)?)),
            SystemKind::Setup2 => Ok(System::Augmented(build_setup(2, self.design_snr_db)?)),
            SystemKind::Setup3 => Ok(System::Augmented(build_setup(3, self.design_snr_db)?)),
            SystemKind::Custom => load_system(self.spec_path.as_deref().unwrap_or(Path::new(""))),
        }
    }
}

/// Reads a spec file written by `construct`.
pub fn load_system(path: &Path) -> Result<System> {
    System::from_toml(&std::fs::read_to_string(path)?)
}

/// Builds an augmented code from a compact coupling-graph definition file.
pub fn load_coupling_def(path: &Path) -> Result<System> {
    let def: CouplingDef =
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(System::Augmented(def.build()?))
}

/// Runs the configured sweep and renders the results file.
pub fn simulate(config: &ExperimentConfig) -> Result<(Vec<SimResult>, String)> {
    let system = config.build_system()?;
    let points: Vec<ChannelPoint> = config
        .snr_db
        .iter()
        .map(|&s| ChannelPoint::new(s, config.convention, system.rate()))
        .collect();
    let results = channel::run_sweep(
        &system,
        &points,
        config.stop_rule(),
        &config.decode_options(),
        config.seed,
    )?;
    let csv = render_csv(config, &system, &results)?;
    Ok((results, csv))
}

/// CSV with the full configuration as `# `-prefixed TOML lines, then one row
/// per point.
pub fn render_csv(config: &ExperimentConfig, system: &System, results: &[SimResult]) -> Result<String> {
    let mut out = String::new();
    let toml = toml::to_string(config).map_err(|e| Error::Parse(e.to_string()))?;
    let _ = writeln!(
        out,
        "# polar-aug simulate: N = {}, K = {}, rate = {}",
        system.total_n(),
        system.total_k(),
        system.rate()
    );
    for line in toml.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{CSV_COLUMNS}");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{:.6e},{:.3},{}",
            r.point.snr_db,
            r.point.convention,
            r.frames,
            r.bit_errors,
            r.frame_errors,
            r.ber(),
            r.fer(),
            r.avg_iters(),
            r.seed
        );
    }
    Ok(out)
}

/// Human-readable summary of a constructed system: sizes, rates and the
/// realized channel-partition thresholds.
pub fn construct_report(system: &System) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "N = {}, K = {}, rate = {}",
        system.total_n(),
        system.total_k(),
        system.rate()
    );
    let describe = |out: &mut String, label: String, c: &CodeSpec| {
        let fmt = |d: Option<f64>| d.map_or("-".to_string(), |v| format!("{v:.6e}"));
        let _ = writeln!(
            out,
            "{label}: N = {}, K = {}, semi = {}, frozen = {}, rate = {:.6}, delta1 = {}, delta2 = {}",
            c.n_total,
            c.k_info,
            c.semi_set.len(),
            c.frozen_set.len(),
            c.rate(),
            fmt(c.delta1),
            fmt(c.delta2)
        );
    };
    match system {
        System::Plain(c) => describe(&mut out, "code".into(), c),
        System::Augmented(a) => {
            for (i, c) in a.aux_codes.iter().enumerate() {
                describe(&mut out, format!("aux[{i}]"), c);
            }
            for (i, c) in a.inner_codes.iter().enumerate() {
                describe(&mut out, format!("inner[{i}]"), c);
            }
            for e in &a.edges {
                let _ = writeln!(
                    out,
                    "edge: aux[{}] -> inner[{}], count = {}, offset = {}",
                    e.aux_id, e.inner_id, e.count, e.offset
                );
            }
        }
    }
    out
}

/// Processing-element count of a system and its ratio to the reference.
pub fn complexity_report(system: &System) -> Result<String> {
    let lengths = system.code_lengths();
    let count = bp::pe_count(&lengths)?;
    Ok(format!(
        "code lengths = {lengths:?}\npe_count = {count}\nreference (N = 4096) = {REFERENCE_PE_COUNT}\nratio = {:.4}\n",
        count as f64 / REFERENCE_PE_COUNT as f64
    ))
}
