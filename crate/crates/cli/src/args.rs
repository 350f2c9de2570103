use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use strfix::concretizer::ConcretizationMode;
use strfix::pipeline::{RunConfig, SemanticMode, DEFAULT_DELTA, DEFAULT_K};
use strfix::ranker::{RankingMode, Weights};
use strfix::semantics::SemanticTypeList;
use strfix::Result;

#[derive(Debug, Parser)]
#[command(name = "strfix", version, about = "Detect and repair string errors in CSV columns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flag values outside the significant patterns of each column.
    Detect(TableArgs),
    /// Detect and suggest repairs.
    Repair {
        #[command(flatten)]
        table: TableArgs,
        /// Write the table with top repairs applied.
        #[arg(long, value_name = "OUT_CSV")]
        apply: Option<PathBuf>,
    },
    /// Repair the inputs of rows on which a formula fails.
    ExecRepair(ExecArgs),
    /// Inject synthetic errors into a clean table.
    Corrupt(CorruptArgs),
    /// Measure repair recall on corrupted tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Dictionary,
    Http,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticArg {
    Full,
    #[value(alias = "no_abstraction")]
    NoAbstraction,
    #[value(alias = "reuse_only")]
    ReuseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConcretizationArg {
    Learned,
    #[value(alias = "frequency_only")]
    FrequencyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankingArg {
    Heuristic,
    #[value(alias = "edit_distance")]
    EditDistance,
}

/// Pipeline settings shared by every command that repairs.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Coverage threshold for significant patterns.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Maximum number of learned patterns per column.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Minimum training accuracy of a constraint tree.
    #[arg(long, default_value_t = strfix::concretizer::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Ranking weights: edit distance, alphanumeric edits, distance to column, coverage.
    #[arg(long, value_name = "W1,W2,W3,W4", allow_hyphen_values = true)]
    pub weights: Option<Weights>,
    /// Suggestions reported per value.
    #[arg(long, default_value_t = 1)]
    pub top_n: usize,
    #[arg(long, value_enum, default_value_t = SemanticArg::Full)]
    pub semantic: SemanticArg,
    #[arg(long, value_enum, default_value_t = ConcretizationArg::Learned)]
    pub concretization: ConcretizationArg,
    #[arg(long, value_enum, default_value_t = RankingArg::Heuristic)]
    pub ranking: RankingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Treat empty strings as candidate errors.
    #[arg(long)]
    pub flag_empty: bool,
    /// Semantic oracle backend. `http` reads ORACLE_URL and ORACLE_KEY.
    #[arg(long, value_enum, default_value_t = OracleKind::Dictionary)]
    pub oracle: OracleKind,
    /// Dictionary directory (one JSON file per type) used instead of the bundled one.
    #[arg(long, value_name = "DIR")]
    pub dictionaries: Option<PathBuf>,
    /// Semantic type list: a JSON array or one name per line.
    #[arg(long, value_name = "FILE")]
    pub types: Option<PathBuf>,
    /// Include stage timings in the report.
    #[arg(long)]
    pub timings: bool,
    /// Worker threads for column pipelines (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl ConfigArgs {
    pub fn run_config(&self) -> Result<RunConfig> {
        let types = match &self.types {
            Some(p) => SemanticTypeList::parse(&std::fs::read_to_string(p)?)?,
            None => SemanticTypeList::default(),
        };
        let config = RunConfig {
            delta: self.delta,
            k: self.k,
            alpha: self.alpha,
            weights: self.weights.unwrap_or(Weights::HEURISTIC),
            top_n: self.top_n,
            oracle: match self.oracle {
                OracleKind::Dictionary => "dictionary",
                OracleKind::Http => "http",
                OracleKind::None => "none",
            }
            .into(),
            semantic: match self.semantic {
                SemanticArg::Full => SemanticMode::Full,
                SemanticArg::NoAbstraction => SemanticMode::NoAbstraction,
                SemanticArg::ReuseOnly => SemanticMode::ReuseOnly,
            },
            concretization: match self.concretization {
                ConcretizationArg::Learned => ConcretizationMode::Learned,
                ConcretizationArg::FrequencyOnly => ConcretizationMode::FrequencyOnly,
            },
            ranking: match self.ranking {
                RankingArg::Heuristic => RankingMode::Heuristic,
                RankingArg::EditDistance => RankingMode::EditDistance,
            },
            seed: self.seed,
            flag_empty: self.flag_empty,
            types,
            timings: self.timings,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Input CSV file.
    pub input: PathBuf,
    /// The input has no header row; columns are named col1..colm.
    #[arg(long)]
    pub no_header: bool,
    /// Only these columns (comma-separated names); default is every string column.
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Formula such as `=SEARCH("-", [@col1])`.
    #[arg(long, required_unless_present = "tasks")]
    pub formula: Option<String>,
    /// Input CSV file.
    #[arg(long, required_unless_present = "tasks", conflicts_with = "tasks")]
    pub input: Option<PathBuf>,
    /// JSON lines benchmark file of {formula, table, target_output_column}.
    #[arg(long, conflicts_with = "formula")]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub no_header: bool,
    /// Keep semantic masking in guided mode.
    #[arg(long)]
    pub guided_semantic: bool,
    /// Write the repaired table (guided mode) here.
    #[arg(long, value_name = "OUT_CSV")]
    pub apply: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CorruptArgs {
    #[arg(long = "in", value_name = "CLEAN_CSV")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIRTY_CSV")]
    pub out: PathBuf,
    /// Corruption log (JSON).
    #[arg(long, value_name = "LOG_JSON")]
    pub log: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability of corrupting a text cell.
    #[arg(long, default_value_t = strfix::corruptor::DEFAULT_CELL_PROBABILITY)]
    pub rate: f64,
    /// Enabled operations (comma-separated); default all.
    #[arg(long, value_delimiter = ',')]
    pub ops: Vec<String>,
    /// Only corrupt these columns.
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of dirty `NAME.csv` files, each with its `NAME.log.json`.
    #[arg(required_unless_present = "synthetic")]
    pub corpus: Option<PathBuf>,
    /// Generate and corrupt this many synthetic columns instead of reading a corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub synthetic: Option<usize>,
    /// Rows per synthetic column.
    #[arg(long, default_value_t = 80)]
    pub rows: usize,
    /// `sweep` runs the full system and every ablation.
    #[arg(long, default_value = "full")]
    pub mode: String,
    #[arg(long)]
    pub no_header: bool,
    /// Write the rows as JSON here; a text table always goes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}
