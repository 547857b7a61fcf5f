//! Declarative experiments: a JSON config names the corpora, mixing ratios,
//! seeds, budgets, training schedule, ABX tasks and probe. Each
//! (ratio, seed) cell lives in its own directory under `<out>/cells/` and
//! every stage (pretraining, training, each task, the probe) is written as
//! soon as it finishes, so an interrupted run resumes where it stopped.

mod awee;
mod config;
mod report;
mod run;

pub use awee::{read_embeddings, sidecar_path, write_embeddings};
pub use config::{Corpora, CorpusSource, ExperimentConfig, PresetPart, ProbeSpec, TaskKind, TaskSpec};
pub use report::{collect_rows, figure_tables, write_report, ReportFiles, ReportRow};
pub use run::{build_training_set, cell_name, evaluate_task, prepare_tasks, run_experiment, run_probe, sample_task, CellReport, RunSummary};
