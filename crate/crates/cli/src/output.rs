use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use infousage_core::experiments::{ExperimentOutput, Table};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::Failure;

fn fs_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Filesystem(format!("{}: {e}", path.display()))
}

/// Creates the output directory and proves it is writable.
pub fn probe_output_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| fs_error(dir, e))?;
    let probe = dir.join(".infousage-write-probe");
    fs::write(&probe, b"").map_err(|e| fs_error(dir, format!("not writable ({e})")))?;
    fs::remove_file(&probe).map_err(|e| fs_error(&probe, e))
}

/// File stem for a table: the primary table is named after the experiment.
fn table_stem(output: &ExperimentOutput, index: usize) -> String {
    if index == 0 {
        output.experiment.clone()
    } else {
        format!("{}_{}", output.experiment, output.tables[index].name)
    }
}

/// `# key = value` metadata lines followed by a header row and data rows.
pub fn render_csv(table: &Table, config: &ExperimentConfig) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    writeln!(buf, "# experiment = {}", config.experiment).expect("vec write");
    writeln!(buf, "# table = {}", table.name).expect("vec write");
    writeln!(buf, "# seed = {}", config.seed).expect("vec write");
    writeln!(buf, "# replications = {}", config.replications).expect("vec write");
    for (k, v) in &config.params {
        writeln!(buf, "# {k} = {v}").expect("vec write");
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
    let csv_err = |e: csv::Error| Failure::Internal(format!("csv encoding: {e}"));
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Failure::Internal(format!("csv encoding: {e}")))
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    output: &'a ExperimentOutput,
    all_passed: bool,
}

pub fn render_json(output: &ExperimentOutput, config: &ExperimentConfig) -> Result<Vec<u8>, Failure> {
    let doc = JsonDocument { config, output, all_passed: output.all_passed() };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Failure::Internal(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes data files (and the plot, when requested); returns their paths.
pub fn write_artifacts(output: &ExperimentOutput, config: &ExperimentConfig) -> Result<Vec<PathBuf>, Failure> {
    let dir = &config.output_dir;
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    match config.format {
        crate::config::Format::Csv => {
            for (i, table) in output.tables.iter().enumerate() {
                files.push((dir.join(format!("{}.csv", table_stem(output, i))), render_csv(table, config)?));
            }
        }
        crate::config::Format::Json => {
            files.push((dir.join(format!("{}.json", output.experiment)), render_json(output, config)?));
        }
    }
    if config.emit_svg {
        if let (Some(plot), Some(table)) = (&output.plot, output.tables.first()) {
            let svg = crate::svg::render(plot, table, config);
            files.push((dir.join(format!("{}.svg", output.experiment)), svg.into_bytes()));
        }
    }
    for (path, bytes) in &files {
        fs::write(path, bytes).map_err(|e| fs_error(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
