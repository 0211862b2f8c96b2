use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "profilekit", version, about = "Pointwise learning-profile analysis")]
pub struct Cli {
    /// JSON object whose keys supply flags missing from the command line.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a log and print its summary.
    Validate {
        /// Log directory or manifest path.
        log: PathBuf,
    },
    /// Profile of one point.
    Profile(ProfileArgs),
    /// Taxonomy of every point.
    Taxonomy(TaxonomyArgs),
    /// Mean softmax-profile distance between two or more run families.
    Distance(DistanceArgs),
    /// Pointwise accuracy gap between two run families.
    Gap(GapArgs),
    /// Select the most non-monotone points per class.
    Negset(NegsetArgs),
    /// Correlate subset accuracy with reference accuracy.
    NegsetEval(NegsetEvalArgs),
    /// Simulate an abstract learning model and check its properties.
    Theory {
        #[command(subcommand)]
        model: TheoryCommand,
    },
    /// Render CSV data to SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Number of grid points on the accuracy axis.
    #[arg(long, default_value_t = 50)]
    pub grid_len: usize,
    /// Gaussian smoothing width in checkpoints.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Skip smoothing.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Acc,
    Softmax,
    Entropy,
    Softacc,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Run directories, merged into one collection.
    #[arg(long = "log", required = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    /// Runs providing the accuracy axis, when the logged points are out of distribution.
    #[arg(long = "reference", num_args = 1..)]
    pub reference: Vec<PathBuf>,
    #[arg(long)]
    pub point: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Acc)]
    pub kind: KindArg,
    /// Negate the entropy profile.
    #[arg(long)]
    pub negate: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaxonomyArgs {
    #[arg(long = "log", required = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    #[arg(long = "reference", num_args = 1..)]
    pub reference: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Per-point CSV path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Label counts as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Tv,
    Kl,
    Cosine,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long = "a", num_args = 1..)]
    pub a: Vec<PathBuf>,
    #[arg(long = "b", num_args = 1..)]
    pub b: Vec<PathBuf>,
    /// Additional family as `NAME=DIR[,DIR...]`.
    #[arg(long = "family")]
    pub families: Vec<String>,
    #[arg(long, value_enum, default_value_t = MetricArg::Tv)]
    pub metric: MetricArg,
    /// Restrict to these point ids.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<usize>>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Heatmap SVG path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long = "a", required = true, num_args = 1..)]
    pub a: Vec<PathBuf>,
    #[arg(long = "b", required = true, num_args = 1..)]
    pub b: Vec<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NegsetArgs {
    #[arg(long = "pool", required = true, num_args = 1..)]
    pub pool: Vec<PathBuf>,
    #[arg(long = "reference", required = true, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// `point_id,0|1` CSV; every point passes if absent.
    #[arg(long)]
    pub filter: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Average per-run scores instead of scoring the pooled profile.
    #[arg(long)]
    pub per_run: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Free-form provenance string stored in the manifest.
    #[arg(long)]
    pub provenance: Option<String>,
    /// Manifest JSON path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NegsetEvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long = "log", required = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    #[arg(long = "reference", required = true, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Probit-transform both axes.
    #[arg(long)]
    pub probit: bool,
    /// Summary JSON path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `p,subset_accuracy` pairs.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Scatter SVG path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Random skill model; checks universality and accuracy monotonicity.
    Skill {
        #[arg(long, default_value_t = 100)]
        skills: usize,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Skills and difficulties are uniform on [-range, range].
        #[arg(long, default_value_t = 3.0)]
        range: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cell-centre approximation sweep and power-law fit.
    Manifold {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = TargetArg::Sine)]
        target: TargetArg,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32])]
        cells: Vec<usize>,
        /// Evaluation grid points per axis.
        #[arg(long)]
        eval_per_axis: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `n,max_error,bound` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random joint tables; checks the posterior monotonicity lemma.
    Bayes {
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 2)]
        observations: usize,
        #[arg(long, default_value_t = 5)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        models: usize,
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Curves of the first model.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random RBF regression; ranks queries by posterior variance.
    Gp {
        #[arg(long, default_value_t = 8)]
        train: usize,
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        length_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 1e-9)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// `Σ sin(3·x_i)`.
    Sine,
    /// `Σ x_i`.
    Linear,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
