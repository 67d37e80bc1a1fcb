use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use walklis::harness::Statistic;
use walklis::StepKind;

#[derive(Debug, Parser)]
#[command(name = "walklis", version, about = "Longest increasing subsequences of random walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one walk and write it as CSV or in the binary format
    Walk(WalkArgs),
    /// Exact longest non-decreasing subsequence of a sequence file or generated walk
    Lis(LisArgs),
    /// Check the multiscale local-time certificate on one generated walk
    Certify(CertifyArgs),
    /// Dyadic construction on simple walks stopped at 2^n
    Dyadic(DyadicArgs),
    /// Orthant entrance times and greedy chain tails
    Chain(ChainArgs),
    /// Scaling study of a statistic across walk sizes
    Scaling(ScalingArgs),
    /// Monte Carlo probes of concentration and tail estimates
    Probe(ProbeArgs),
}

/// Execution flags shared by every subcommand; not echoed, since they do
/// not change results.
#[derive(Debug, Args)]
pub struct Run {
    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TextFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    /// Step law: simple, lazy, uniform:a or normal
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Number of steps
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = WalkFormat::Csv)]
    pub format: WalkFormat,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Args, Serialize)]
pub struct LisArgs {
    /// Sequence file: whitespace-separated values, or one point of d values per line
    pub input: Option<PathBuf>,
    /// Step law of the generated walk when no file is given
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Number of steps of the generated walk
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the generated walk
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the indices of one longest subsequence
    #[arg(long)]
    pub witness: bool,
    /// Strictly increasing instead of non-decreasing (one dimension only)
    #[arg(long)]
    pub strict: bool,
    /// Also run the exhaustive oracle (at most 24 points)
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    pub format: TextFormat,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    /// One-dimensional step law
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Number of scales
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Refinement depth per scale
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Local-time constant, at least 2
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// Walk steps [default: 4^(m·k)]
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Args, Serialize)]
pub struct DyadicArgs {
    /// Order: walks are stopped at 2^n
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Step cap per walk; longer walks are counted as censored
    #[arg(long, default_value_t = 1 << 22)]
    pub cap: usize,
    /// Also compute the exact LIS of every stopped walk
    #[arg(long)]
    pub lis: bool,
    /// json: summary; csv: interval table of the first uncensored trial
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    pub format: TableFormat,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    /// Step law
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Dimension
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Entrance-time cap
    #[arg(long, default_value_t = 100_000)]
    pub cap: u64,
    /// Survival fit window LO,HI [default: 100,cap/10]
    #[arg(long)]
    pub window: Option<String>,
    /// Grid points in the fit window
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    /// Walk length; switches to the chain-length tail table
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma-separated ε grid for the tail table
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.4")]
    pub epsilon: Vec<f64>,
    /// Use the exact LIS instead of the greedy chain in the tail table
    #[arg(long)]
    pub exact: bool,
    /// json: fit or table; csv: samples (trial, tau, censored) or table rows
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    pub format: TableFormat,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    /// Comma-separated statistics: exact-lis, record-count, level-set, dyadic-A, greedy-chain
    #[arg(long, value_delimiter = ',', default_value = "exact-lis")]
    pub stat: Vec<Statistic>,
    /// Step law
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Walk sizes (positions): 2^a..2^b, or a comma list such as 1000,1e4,2^14
    #[arg(long)]
    pub sizes: String,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Step cap for dyadic-A stopped walks
    #[arg(long, default_value_t = 1 << 22)]
    pub cap: u64,
    /// Restrict the exponent fit to sizes in LO,HI
    #[arg(long)]
    pub window: Option<String>,
    /// Fail with exit code 2 unless every fitted slope lies in LO,HI
    #[arg(long)]
    pub slope_band: Option<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    /// sup_x P(x ≤ S(n) ≤ x+λ) against (λ+1)/√n for each --lambda; needs --n
    Petrov,
    /// P(max|S| ≥ λ√n) against 1/λ²; needs --n
    Max,
    /// P(LIS ≥ ℓN) against P(LIS ≥ N)^ℓ on walks of length 4^n; needs --n, --threshold
    Submult,
    /// Mean and tail of S_{m,k,0,0}; needs --m
    LocalTime,
    /// P(τ_{2^m} > n) against 12·2^m/√n; needs --m, --n
    Hitting,
    /// P(LIS < ε√n·log₂ n) and the mean LIS; needs --n, --epsilon
    TheoremLb,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    pub kind: ProbeKind,
    /// One-dimensional step law
    #[arg(long, default_value = "simple")]
    pub law: StepKind,
    /// Walk steps (petrov, max, hitting, theorem-lb) or order (submult)
    #[arg(long)]
    pub n: Option<u64>,
    /// Scale (local-time, hitting)
    #[arg(long)]
    pub m: Option<u32>,
    /// Comma-separated depths for local-time [default: 1..=m]
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Comma-separated λ values
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5,3")]
    pub lambda: Vec<f64>,
    /// Level N (submult)
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Power ℓ (submult)
    #[arg(long, default_value_t = 2)]
    pub ell: u64,
    /// ε (theorem-lb)
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub run: Run,
}
