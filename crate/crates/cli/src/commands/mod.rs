mod eval;
mod gen;
mod report;
mod select;
mod train;

use std::path::{Path, PathBuf};

pub use eval::{eval, EvalArgs, EvalSummary, ViewEval};
pub use gen::{gen, GenArgs, GenSummary};
pub use report::{report, ReportArgs, ReportRow};
pub use select::{select, FinalMetrics, SelectArgs};
pub use train::{train, TrainArgs};

use crate::error::{CliError, CliResult};

fn output_dir(explicit: &Option<PathBuf>, root: &Path, default_name: String) -> CliResult<PathBuf> {
    let dir = explicit.clone().unwrap_or_else(|| root.join(default_name));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::data(&dir, e))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::data(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_text(path, &(text + "\n"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e))
}

fn load_dataset(dir: &Path) -> CliResult<nbv_core::scenegen::Dataset> {
    nbv_core::scenegen::read_dataset(dir).map_err(CliError::core(format!("reading dataset {}", dir.display())))
}
