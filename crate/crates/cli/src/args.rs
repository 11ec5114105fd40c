use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "missview", version, about = "Missing-data profiling: statistics, glyph scenes, injection and an HTTP API")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print amount, joint and conditional missingness for a table.
    Stats(StatsArgs),
    /// Render a layout of the table to an SVG file.
    Render(RenderArgs),
    /// Inject seeded missingness or noise and write the result with a manifest.
    Synth(SynthArgs),
    /// Serve the HTTP API over a directory of tables.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Field delimiter; use `tab` for tab-separated files. Defaults to tab for
    /// `.tsv` inputs and comma otherwise.
    #[arg(long, value_name = "CHAR")]
    pub delimiter: Option<String>,
    /// Token marking a missing cell (repeatable). Defaults to NaN, NA and the
    /// empty string.
    #[arg(long = "missing-token", value_name = "TOKEN")]
    pub missing_tokens: Vec<String>,
    /// The first row holds data rather than column names.
    #[arg(long)]
    pub no_header: bool,
    /// Rename variables to A, B, ..., Z, AA, ...
    #[arg(long)]
    pub anonymize: bool,
    /// Drop a column by name before typing (repeatable).
    #[arg(long = "drop", value_name = "COLUMN")]
    pub drop_columns: Vec<String>,
    /// Force a column kind, e.g. `origin=categorical` (repeatable).
    #[arg(long = "kind", value_name = "COLUMN=KIND")]
    pub kinds: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Histogram bins for numeric variables.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Restrict conditional-missingness entries to this selected variable.
    #[arg(long, value_name = "VAR")]
    pub select: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Pairs listed in table mode, largest JM deviation first.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Linear,
    Radial,
    Heatmap,
    Pc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArcsArg {
    Selected,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BarScaleArg {
    Peak,
    Shared,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[arg(long, value_enum, default_value_t = LayoutArg::Linear)]
    pub layout: LayoutArg,
    /// Selected variable (required for the radial layout).
    #[arg(long, value_name = "VAR")]
    pub select: Option<String>,
    #[arg(long, value_enum, default_value_t = ArcsArg::Selected)]
    pub arcs: ArcsArg,
    /// Add a glyph strip above heatmap or parallel-coordinates views.
    #[arg(long)]
    pub attach_glyphs: bool,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Histogram bar scaling: each to its own peak, or red on the grey scale.
    #[arg(long, value_enum, default_value_t = BarScaleArg::Peak)]
    pub bar_scale: BarScaleArg,
    /// JSON style file with viewport, palette, font_size and show_labels.
    #[arg(long, env = "MISSVIEW_STYLE", value_name = "FILE")]
    pub style: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long, value_name = "FILE.svg")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = "MCAR SPEC: comma-separated NAME=RATE entries; `*` stands for every variable \
not named explicitly. Example: --mcar \"*=0.05,mpg=0.3\". Rates from --mcar and --cm may lie \
anywhere in [0, 1].")]
pub struct SynthArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// JSON injection plan.
    #[arg(long, value_name = "FILE.json", conflicts_with_all = ["mcar", "cm"], required_unless_present_any = ["mcar", "cm"])]
    pub plan: Option<PathBuf>,
    /// Random removal per variable, e.g. `A=0.5,B=0.5` or `*=0.1`.
    #[arg(long, value_name = "SPEC")]
    pub mcar: Option<String>,
    /// Remove RATE of X1's values for items with X2 outside its quartiles.
    #[arg(long, value_name = "X1,X2,RATE")]
    pub cm: Option<String>,
    /// Random seed (overrides the plan's seed when given with --plan).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output table path.
    #[arg(long, value_name = "FILE.csv")]
    pub out: PathBuf,
    /// Ground-truth manifest path.
    #[arg(long, value_name = "FILE.json")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of .csv and .tsv tables; ids are file stems.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Allow cross-origin requests only from this origin (repeatable).
    /// Without it every origin is allowed.
    #[arg(long = "cors-origin", value_name = "ORIGIN")]
    pub cors_origins: Vec<String>,
    /// Missing-value token for loaded tables (repeatable).
    #[arg(long = "missing-token", value_name = "TOKEN")]
    pub missing_tokens: Vec<String>,
}
