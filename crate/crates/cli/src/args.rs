use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mlaudit",
    version,
    about = "Audit checks for supervised ML applications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text, global = true)]
    pub format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Date of this run (YYYY-MM-DD); defaults to today in UTC. Case
    /// commands also use it as the event or query date.
    #[arg(long, global = true)]
    pub date: Option<NaiveDate>,

    /// Model identifier recorded in the report metadata.
    #[arg(long, global = true)]
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluation metrics from targets and predictions.
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// Data split and label integrity checks.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Model-level diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCmd),
    /// Requirements catalog evaluation.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Certification case lifecycle.
    #[command(subcommand)]
    Case(CaseCmd),
    /// Existing report documents.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON naming the target column and task.
    #[arg(long)]
    pub schema: PathBuf,
}

/// Where targets come from: a dataset plus schema, or a bare column file.
#[derive(Debug, Args)]
pub struct TargetArgs {
    #[arg(long, requires = "schema", conflicts_with = "actual")]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub schema: Option<PathBuf>,
    /// Targets as a JSON array or a CSV whose first column holds them.
    #[arg(long, required_unless_present = "data")]
    pub actual: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Random,
    Temporal,
    Kfold,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Split membership JSON.
    #[arg(
        long,
        conflicts_with = "strategy",
        required_unless_present = "strategy"
    )]
    pub split: Option<PathBuf>,
    /// Build the split instead of reading it.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train, validation and test ratios.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Defaults to the schema's temporal column.
    #[arg(long)]
    pub temporal_column: Option<String>,
    /// Save a built split to this file.
    #[arg(long)]
    pub split_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveArg {
    Roc,
    Pr,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    /// Confusion-matrix metrics, plus ROC and top-k when scores are given.
    Classify {
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long)]
        predictions: PathBuf,
        /// Number of classes when targets come from --actual.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1)]
        positive_class: usize,
        /// Positive-class scores for a threshold curve.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CurveArg::Roc)]
        curve: CurveArg,
        /// Per-class score matrix for top-k accuracy.
        #[arg(long, requires = "top_k")]
        score_matrix: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Regression error metrics.
    Regress {
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long)]
        predictions: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Duplicate rows shared between train, validation and test.
    Splits {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Round reals to this many decimals before comparing rows.
        #[arg(long)]
        rounding: Option<u32>,
    },
    /// Duplicate rows shared between folds.
    Folds {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        rounding: Option<u32>,
    },
    /// Clusters spread over several folds.
    Clusters {
        /// JSON mapping row id to cluster id.
        #[arg(long)]
        clusters: PathBuf,
        /// k-fold split membership JSON.
        #[arg(long)]
        split: PathBuf,
    },
    /// Features that reproduce the target on held-out rows.
    LabelLeak {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value_t = mlaudit_core::integrity::DEFAULT_LEAK_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = mlaudit_core::integrity::DEFAULT_LEAK_MARGIN)]
        margin: f64,
    },
    /// Whether the chosen metric suits the class balance.
    MetricFit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = mlaudit_core::integrity::DEFAULT_IMBALANCE_THRESHOLD)]
        imbalance_threshold: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCmd {
    /// Train/test performance gap.
    Overfit {
        #[arg(long, allow_hyphen_values = true)]
        train_value: f64,
        #[arg(long, allow_hyphen_values = true)]
        test_value: f64,
        /// Metric the values measure; decides which direction is better.
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = mlaudit_core::diagnostics::DEFAULT_OVERFIT_THRESHOLD)]
        threshold: f64,
    },
    /// Sweet spot of a capacity sweep.
    Sweep {
        #[arg(long)]
        sweep: PathBuf,
        /// Capacity of the delivered model, checked against the sweet spot.
        #[arg(long)]
        chosen_capacity: Option<f64>,
    },
    /// Declared loss against task and output layer.
    Loss {
        #[arg(long)]
        model: PathBuf,
    },
    /// Rows of a score matrix that are not probability vectors.
    ProbOutputs {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = mlaudit_core::diagnostics::DEFAULT_PROBABILITY_TOLERANCE)]
        tolerance: f64,
    },
    /// Measured metrics against minimum requirements.
    MinPerf {
        /// JSON array of {"metric", "op", "bound"}.
        #[arg(long)]
        requirements: PathBuf,
        /// JSON object of metric values, or a metrics report.
        #[arg(long)]
        measured: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCmd {
    /// Conformity decision for an assessment.
    Evaluate {
        /// Catalog JSON; the bundled sample catalog when omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        assessment: PathBuf,
        #[arg(long, conflicts_with = "impact", required_unless_present = "impact")]
        target_cl: Option<u8>,
        /// Impact assessment JSON to derive the target level from.
        #[arg(long)]
        impact: Option<PathBuf>,
    },
    /// Criticality level from an impact assessment.
    Cl {
        #[arg(long)]
        impact: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EventArg {
    CompleteGapAnalysis,
    HoldKickoff,
    CompleteDocReview,
    CompleteInterviews,
    CompleteInspection,
    DeliverReport,
    IssueCertificate,
    RecordMonitoringAudit,
    ModelChanged,
    StartRecertification,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeverityArg {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutcomeArg {
    Passed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Reduced,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum CaseCmd {
    /// Open a new case and write its event log.
    Init {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        scope: String,
        #[arg(long)]
        target_cl: u8,
        #[arg(long)]
        case_id: Option<String>,
        #[arg(long, value_enum, default_value_t = PathArg::Reduced)]
        recertification_path: PathArg,
        /// Replace an existing case file.
        #[arg(long)]
        force: bool,
    },
    /// Apply one event and rewrite the event log.
    Advance {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, value_enum)]
        event: EventArg,
        /// Conformity result (or a catalog report) for deliver-report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        severity: Option<SeverityArg>,
        #[arg(long, value_enum, default_value_t = OutcomeArg::Passed)]
        outcome: OutcomeArg,
    },
    /// Certificate status on the run date.
    Status {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = mlaudit_core::workflow::DEFAULT_MONITORING_GRACE_DAYS)]
        grace_days: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Re-render a JSON report.
    Render {
        #[arg(long)]
        input: PathBuf,
    },
}
