use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use mlaudit_core::report::{render_report, Format};

pub mod args;
mod commands;
mod inputs;

use args::{Cli, FormatArg};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Section check name and the subcommand that produces it.
pub const COMMAND_TABLE: &[(&str, &str)] = &[
    ("classification_metrics", "metrics classify"),
    ("roc_curve", "metrics classify"),
    ("top_k_accuracy", "metrics classify"),
    ("regression_metrics", "metrics regress"),
    ("split_disjoint", "check splits"),
    ("fold_disjoint", "check folds"),
    ("cluster_fold_assignment", "check clusters"),
    ("label_leakage", "check label-leak"),
    ("metric_appropriateness", "check metric-fit"),
    ("overfit_gap", "diagnose overfit"),
    ("capacity_sweep", "diagnose sweep"),
    ("loss_task_consistency", "diagnose loss"),
    ("probability_outputs", "diagnose prob-outputs"),
    ("min_performance", "diagnose min-perf"),
    ("conformity", "catalog evaluate"),
    ("criticality_level", "catalog cl"),
    ("case_init", "case init"),
    ("case_advance", "case advance"),
    ("certificate_status", "case status"),
];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(mlaudit_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<mlaudit_core::Error> for CliError {
    fn from(e: mlaudit_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return e.exit_code();
        }
    };
    let date = cli.date.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let report = match commands::execute(&cli, date) {
        Ok(report) => report,
        Err(e) => {
            let _ = writeln!(stderr, "mlaudit: {e}");
            return e.exit_code();
        }
    };
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    let rendered = render_report(&report, format);
    match &cli.out {
        Some(path) => {
            if let Err(e) = inputs::write_text(path, &rendered) {
                let _ = writeln!(stderr, "mlaudit: {e}");
                return e.exit_code();
            }
        }
        None => {
            if let Err(e) = stdout.write_all(rendered.as_bytes()) {
                let _ = writeln!(stderr, "mlaudit: {e}");
                return EXIT_INPUT;
            }
        }
    }
    report.exit_code()
}
