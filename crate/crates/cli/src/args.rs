use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "clkit", version, about = "Cameron-Liebler sets in finite projective and affine spaces")]
pub struct Cli {
    /// Worker threads for parallel verification and search.
    #[arg(long, global = true, env = "CLKIT_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryKind {
    Pg,
    Ag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Ambient geometry: give either `--q`, or `--p` with an optional `--e`.
#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(long, value_enum)]
    pub geometry: GeometryKind,
    #[arg(long)]
    pub n: usize,
    /// Field order (a prime power up to 32).
    #[arg(long, conflicts_with_all = ["p", "e"], required_unless_present = "p")]
    pub q: Option<u64>,
    /// Field characteristic.
    #[arg(long)]
    pub p: Option<u32>,
    /// Extension degree.
    #[arg(long, requires = "p", default_value_t = 1)]
    pub e: u32,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrivialKind {
    Empty,
    Pencil,
    Hyperplane,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpreadMode {
    /// Desarguesian spread (PG) or all parallel spreads (AG).
    Constructed,
    /// Every spread, up to `--cap`.
    Enumerate,
    /// Seeded random spreads.
    Sample,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian binomial coefficient [b choose a]_q.
    Gauss {
        #[arg(long, allow_negative_numbers = true)]
        b: i64,
        #[arg(long, allow_negative_numbers = true)]
        a: i64,
        #[arg(long)]
        q: u64,
    },
    /// List every k-subspace with its ID.
    Enumerate {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        k: usize,
        /// Print only the count.
        #[arg(long)]
        count_only: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run every applicable Cameron-Liebler check on a k-set file.
    Verify {
        #[arg(long, short)]
        input: PathBuf,
        /// Spread file for the spread check; default is built-in spreads.
        #[arg(long)]
        spreads: Option<PathBuf>,
        /// Seed for sampled spreads.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// List every violation, not just the first.
        #[arg(long)]
        all_violations: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Write a trivial example as a k-set file.
    Trivial {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        k: usize,
        #[arg(long = "type", value_enum)]
        kind: TrivialKind,
        /// Point ID for pencils and unions.
        #[arg(long)]
        point: Option<u32>,
        /// Hyperplane ID for hyperplane sets and unions.
        #[arg(long)]
        hyperplane: Option<u32>,
        /// Write the complement instead.
        #[arg(long)]
        complement: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Restrict a k-set to a subspace, as a k-set of its local geometry.
    Restrict {
        #[arg(long, short)]
        input: PathBuf,
        /// Subspace ID of the frame.
        #[arg(long)]
        frame: u32,
        /// Dimension of the frame.
        #[arg(long)]
        frame_dim: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Affine k-set to its projective closure, or projective k-set to the
    /// affine space obtained by removing a hyperplane.
    Closure {
        #[arg(long, short)]
        input: PathBuf,
        /// Hyperplane ID removed from a projective input; default x0 = 0.
        #[arg(long)]
        hyperplane: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Write a list of spreads.
    Spread {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = SpreadMode::Constructed)]
        mode: SpreadMode,
        /// Stop enumerating after this many spreads.
        #[arg(long)]
        cap: Option<usize>,
        /// Number of sampled spreads.
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Evaluate counting identities and parameter formulas.
    Identity {
        #[command(subcommand)]
        which: IdentityCommand,
    },
    /// Decide whether a set with Cameron-Liebler restrictions is itself one.
    Glue {
        #[arg(long, short)]
        input: PathBuf,
        /// Dimension of the subspaces restricted to.
        #[arg(long)]
        t: usize,
    },
    /// Table of the parameter bounds over a grid.
    Bounds {
        /// Grid, e.g. `n=4..10 k=1..2 q=2,3,4,5`.
        #[arg(long, num_args = 1.., required = true)]
        grid: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Classify all Cameron-Liebler k-sets by row-space enumeration.
    Classify {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        k: usize,
        /// Node budget; required with `--stretch`.
        #[arg(long, env = "CLKIT_BUDGET")]
        budget: Option<u64>,
        /// Allow incidence ranks above 20, where completion is not expected.
        #[arg(long)]
        stretch: bool,
        /// Check the result against an exhaustive spread list.
        #[arg(long)]
        cross_validate: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print only the summary record.
        #[arg(long)]
        summary_only: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum IdentityCommand {
    /// The point/subspace counting identity at point `--point` and subspace
    /// `--subspace` of dimension `--dim` through it.
    PointSubspace {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        point: u32,
        #[arg(long)]
        subspace: u32,
        #[arg(long)]
        dim: usize,
    },
    /// Parameter recovered from the t-space restrictions through each
    /// k-subspace (or only `--at`); must equal the parameter.
    Restrictions {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        at: Option<u32>,
    },
    /// Admissible parameters `1 + C/d` derived from t-space restrictions.
    Admissible {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        t: u64,
        /// Test this parameter, e.g. `4/3`.
        #[arg(long)]
        x: Option<String>,
    },
    /// Number of possible parameters.
    Count {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        q: u64,
    },
}
