//! Experiment configs, suite execution, summaries, plots and acceptance
//! checks.

pub mod config;
pub mod suite;
pub mod summary;
pub mod svg;
pub mod verify;

pub use config::{preset, ExperimentConfig, SuiteParams, PRESETS, SCHEMA_VERSION};
pub use suite::{check_manifest, plot_style, run_suite, FileEntry, FileKind, RunManifest, MANIFEST_FILE};
pub use summary::{checkpoints, summarize, summary_csv, AgentSummary, Curve};
pub use svg::{render_curves, PlotStyle};
pub use verify::{run_all, run_criterion, Check, CriterionReport, CRITERIA};
