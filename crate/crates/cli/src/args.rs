use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use radix_topk::{
    AtomicsMode, BatchOptions, BufferPolicy, DType, EngineConfig, ScaleMode, ScalePolicy,
    SelectionOrder,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "rtk", version, about = "Radix top-k selection harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (RTK1) or batch container (RTKB).
    Gen(GenArgs),
    /// Select the top k of one or more datasets.
    Topk(TopkArgs),
    /// Sweep sizes, ranks, batch sizes and distributions.
    Bench(BenchArgs),
    /// Run the optimization ablation on a misaligned batch.
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Uniform,
    Normal,
    Zipf,
    Peaked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DTypeArg {
    F32,
    U32,
    F16,
}

impl From<DTypeArg> for DType {
    fn from(d: DTypeArg) -> Self {
        match d {
            DTypeArg::F32 => DType::F32,
            DTypeArg::U32 => DType::U32,
            DTypeArg::F16 => DType::F16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BufferArg {
    Naive,
    Efficient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AtomicsArg {
    Hierarchical,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Off,
    Always,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Largest,
    Smallest,
}

impl From<OrderArg> for SelectionOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Largest => SelectionOrder::Largest,
            OrderArg::Smallest => SelectionOrder::Smallest,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub dist: DistKind,
    /// Distribution parameters: uniform LOW HIGH, normal MEAN STD, zipf [S],
    /// peaked MASS MODES LOW HIGH.
    #[arg(allow_negative_numbers = true)]
    pub params: Vec<f64>,
    /// Element count, e.g. 1048576 or 2^20.
    #[arg(long, value_parser = parse_size, required_unless_present = "lengths")]
    pub n: Option<usize>,
    /// Comma-separated task lengths; writes a batch container instead.
    #[arg(long, value_delimiter = ',', value_parser = parse_size, conflicts_with = "n")]
    pub lengths: Option<Vec<usize>>,
    /// Zipf exponent.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "f32")]
    pub dtype: DTypeArg,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Digit width in bits; defaults to 12 for 32-bit values and 8 for f16.
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long, default_value_t = 1024)]
    pub block: usize,
    /// Worker count; RTK_WORKERS takes precedence when set.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub pack: usize,
    #[arg(long, value_enum, default_value = "efficient")]
    pub buffer: BufferArg,
    #[arg(long, value_enum, default_value = "hierarchical")]
    pub atomics: AtomicsArg,
    #[arg(long, value_enum, default_value = "on")]
    pub reschedule: Switch,
    #[arg(long, value_enum, default_value = "on")]
    pub pad: Switch,
    #[arg(long, value_enum, default_value = "off")]
    pub scale: ScaleArg,
    /// Adaptive scaling trigger: fraction of candidates left in the target
    /// bin after the first pass.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "largest")]
    pub order: OrderArg,
    /// Compare every result against the sort-based oracle.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

impl EngineArgs {
    pub fn workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var("RTK_WORKERS") {
            return v
                .trim()
                .parse()
                .with_context(|| format!("RTK_WORKERS={v:?} is not a worker count"));
        }
        Ok(self
            .grid
            .unwrap_or_else(|| EngineConfig::default().grid_size))
    }

    pub fn config(&self, dtype: DType) -> Result<EngineConfig> {
        let default_d = match dtype {
            DType::F16 => 8,
            _ => 12,
        };
        let cfg = EngineConfig::default()
            .with_digit_bits(self.d.unwrap_or(default_d))
            .with_block_size(self.block)
            .with_grid_size(self.workers()?)
            .with_pack_size(self.pack)
            .with_buffer_policy(match self.buffer {
                BufferArg::Naive => BufferPolicy::Naive,
                BufferArg::Efficient => BufferPolicy::FlushEfficient,
            })
            .with_atomics(match self.atomics {
                AtomicsArg::Hierarchical => AtomicsMode::Hierarchical,
                AtomicsArg::Global => AtomicsMode::Global,
            });
        cfg.validate(dtype.elem_bytes())?;
        Ok(cfg)
    }

    pub fn batch_options(&self) -> BatchOptions {
        BatchOptions {
            rescheduling: self.reschedule.on(),
            padding: self.pad.on(),
        }
    }

    pub fn scale_policy(&self) -> Result<ScalePolicy> {
        let mode = match self.scale {
            ScaleArg::Off => ScaleMode::Off,
            ScaleArg::Always => ScaleMode::Always,
            ScaleArg::Adaptive => ScaleMode::Adaptive,
        };
        Ok(ScalePolicy::new(mode, self.tau, self.seed)?)
    }

    pub fn order(&self) -> SelectionOrder {
        self.order.into()
    }
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    /// RTK1 datasets (several form one batch) or a single RTKB container.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Comma-separated ranks. Expressions such as n/2 refer to each task's
    /// length. One rank per task, or one for all.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<String>,
    /// Element type of an RTKB container, which does not record it.
    #[arg(long, value_enum, default_value = "f32")]
    pub dtype: DTypeArg,
    /// Write normalized results as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the run report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "2^21")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024,4096")]
    pub k: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub batch: Vec<usize>,
    /// uniform, normal, zipf, adversarial or peaked.
    #[arg(long, value_delimiter = ',', default_value = "uniform")]
    pub dist: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, value_enum, default_value = "f32")]
    pub dtype: DTypeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    /// Length of every task but the first, which is one shorter.
    #[arg(long, value_parser = parse_size, default_value = "2^20")]
    pub n: usize,
    #[arg(long, default_value_t = 2048)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

/// `1024`, `2^20` or `2^20-1`.
pub fn parse_size(s: &str) -> Result<usize> {
    let s = s.trim();
    let (body, minus) = match s.split_once('-') {
        Some((b, m)) => (
            b,
            m.trim()
                .parse::<usize>()
                .with_context(|| format!("bad size {s:?}"))?,
        ),
        None => (s, 0),
    };
    let value = match body.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base
                .trim()
                .parse()
                .with_context(|| format!("bad size {s:?}"))?;
            let exp: u32 = exp
                .trim()
                .parse()
                .with_context(|| format!("bad size {s:?}"))?;
            base.checked_pow(exp)
                .with_context(|| format!("size {s:?} overflows"))?
        }
        None => body
            .trim()
            .parse()
            .with_context(|| format!("bad size {s:?}"))?,
    };
    value
        .checked_sub(minus)
        .with_context(|| format!("size {s:?} is negative"))
}

/// A rank token: a size, `n`, or `n/DIVISOR`, resolved against `n`.
pub fn parse_rank(s: &str, n: usize) -> Result<usize> {
    let t = s.trim();
    if t == "n" {
        return Ok(n);
    }
    if let Some(div) = t.strip_prefix("n/") {
        let div = parse_size(div)?;
        if div == 0 {
            bail!("rank {s:?} divides by zero");
        }
        return Ok(n / div);
    }
    parse_size(t)
}
