pub mod analyze;
pub mod closed_loop;
pub mod replay;
pub mod serve;
pub mod sim;

use std::path::{Path, PathBuf};

use crate::CliError;

/// Creates `dir` if needed and refuses one that already holds channel logs.
fn fresh_out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    let telemetry = dir.join("telemetry");
    if let Ok(entries) = std::fs::read_dir(&telemetry) {
        if entries
            .flatten()
            .any(|e| e.file_name().to_string_lossy().ends_with(".log"))
        {
            return Err(CliError::Usage(format!(
                "{} already holds channel logs; pick an empty output directory",
                telemetry.display()
            )));
        }
    }
    std::fs::create_dir_all(&telemetry)
        .map_err(|e| CliError::Usage(format!("output directory {}: {e}", dir.display())))?;
    Ok(telemetry)
}

/// Writes `contents` to `dir/name`, or prints it when there is no directory.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(CliError::runtime)?;
            std::fs::write(dir.join(name), contents).map_err(CliError::runtime)
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
