use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "curvitopo",
    version,
    about = "Topology-aware morphology, metrics and losses for volumetric curvilinear structures"
)]
pub struct Cli {
    /// JSON file of default flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "CURVITOPO_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Soft skeletonization by iterated min/max pooling.
    Skeletonize(MorphArgs),
    /// Topological smoothing by iterated average pooling.
    Smooth(MorphArgs),
    /// Estimate the iteration count from the mean pixel radius of random slices.
    Mpr(MprArgs),
    /// Score predictions against ground truth.
    Metrics(MetricsArgs),
    /// Evaluate a loss and optionally write its gradient.
    LossEval(LossArgs),
    /// Compare loss gradients with central finite differences.
    GradCheck(GradCheckArgs),
    /// Topology-preserving 3D thinning of a binary volume.
    Thin(ThinArgs),
    /// Generate a synthetic phantom with its ground truth.
    Phantom(PhantomArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SliceArgs {
    /// Number of slices drawn.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Slice sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Axes whose planes may be drawn.
    #[arg(long, value_delimiter = ',', default_value = "x,y,z")]
    pub axes: Vec<String>,
    /// Slice binarization threshold (ignored with --otsu).
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Binarize slices at the volume's Otsu threshold.
    #[arg(long)]
    pub otsu: bool,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct MorphArgs {
    /// Input volume (.npy or .raw with a .json sidecar).
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Output volume.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Iteration count.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Take the iteration count from mpr over the input.
    #[arg(long)]
    pub auto_k: bool,
    /// Pooling window size (odd).
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Write the |input - output| difference histogram as CSV.
    #[arg(long, value_name = "FILE")]
    pub histogram: Option<PathBuf>,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Count only voxels where input or output is nonzero.
    #[arg(long)]
    pub support_only: bool,
    #[command(flatten)]
    pub slices: SliceArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct MprArgs {
    /// Input volumes; several produce a JSON array in input order.
    #[arg(long = "in", value_name = "FILE", num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub slices: SliceArgs,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct MetricsArgs {
    /// Predicted volumes.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pub pred: Vec<PathBuf>,
    /// Ground-truth volumes, one per prediction.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pub gt: Vec<PathBuf>,
    /// Soft-skeleton rounds for clDice.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Dilation radius of the rho-Dice tolerance.
    #[arg(long, default_value_t = 2.0)]
    pub rho: f64,
    /// Binarization threshold for set-based metrics.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Metrics to compute.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "dice,cldice,rho_dice,ari,betti"
    )]
    pub metrics: Vec<String>,
    /// Divide Betti errors by the voxel count.
    #[arg(long)]
    pub normalize_betti: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum LossName {
    Gats,
    Cldice,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct LossArgs {
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = LossName::Gats)]
    pub loss: LossName,
    /// Overlap weight; defaults to 0.5 for gats and 0.65 for cldice.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Iteration count.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Write d loss / d pred as a volume.
    #[arg(long, value_name = "FILE")]
    pub gradient_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct GradCheckArgs {
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// gats, cldice or sum-of-squares.
    #[arg(long, default_value = "gats")]
    pub loss: String,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Maximum relative error.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    /// Coordinates where both gradients are at most this are skipped.
    #[arg(long, default_value_t = 1e-6)]
    pub min_grad: f64,
    /// Check this many random coordinates (at least 64) instead of all.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Coordinate sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ThinArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Foreground threshold.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct PhantomArgs {
    /// JSON phantom specification.
    #[arg(long, value_name = "FILE", conflicts_with = "suite", required_unless_present_any = ["suite", "list"])]
    pub spec: Option<PathBuf>,
    /// Name of a built-in phantom (see --list).
    #[arg(long)]
    pub suite: Option<String>,
    /// List built-in phantoms and exit.
    #[arg(long)]
    pub list: bool,
    /// Output volume.
    #[arg(long, value_name = "FILE", required_unless_present = "list")]
    pub out: Option<PathBuf>,
    /// Also write the analytic centerline as a volume.
    #[arg(long, value_name = "FILE")]
    pub centerline_out: Option<PathBuf>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
