//! Dataset CSV files: one column per input variable, then fitness,
//! verdict and source.

use std::path::Path;

use failscope::space::{Fitness, InputSpace, LabeledDataset, LabeledRow, Source, TestInput, Verdict};

use crate::{CliError, CliResult};

const TAIL: [&str; 3] = ["fitness", "verdict", "source"];

pub fn write_dataset(path: &Path, ds: &LabeledDataset) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::runtime)?;
    let space = ds.space();
    let mut header: Vec<&str> = space.names();
    header.extend(TAIL);
    w.write_record(&header).map_err(CliError::runtime)?;
    for row in ds.rows() {
        let mut rec: Vec<String> =
            row.input.values().iter().enumerate().map(|(i, v)| space.format_value(i, v)).collect();
        rec.push(format!("{:.16e}", row.fitness.0));
        rec.push(row.verdict().to_string());
        rec.push(row.source.to_string());
        w.write_record(&rec).map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

fn malformed(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: record {line}: {msg}", path.display()))
}

/// Read a dataset written by [`write_dataset`] over `space`.
pub fn read_dataset(path: &Path, space: &InputSpace) -> CliResult<LabeledDataset> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| malformed(path, 0, e))?.clone();
    let mut expected: Vec<&str> = space.names();
    expected.extend(TAIL);
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Config(format!(
            "{}: header does not match the subject's variables (expected {})",
            path.display(),
            expected.join(",")
        )));
    }
    let n = space.len();
    let mut ds = LabeledDataset::new(space.clone());
    for (k, rec) in r.records().enumerate() {
        let line = k + 1;
        let rec = rec.map_err(|e| malformed(path, line, e))?;
        if rec.len() != n + 3 {
            return Err(malformed(path, line, "wrong number of fields"));
        }
        let values = (0..n)
            .map(|i| space.parse_value(i, &rec[i]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(path, line, e))?;
        let fitness: f64 = rec[n].trim().parse().map_err(|e| malformed(path, line, e))?;
        if !fitness.is_finite() {
            return Err(malformed(path, line, "non-finite fitness"));
        }
        let verdict: Verdict = rec[n + 1].parse().map_err(|e| malformed(path, line, e))?;
        if verdict != Fitness(fitness).verdict() {
            return Err(malformed(path, line, "verdict disagrees with fitness"));
        }
        let source = match rec[n + 2].trim() {
            "executed" => Source::Executed,
            "predicted" => Source::Predicted,
            other => return Err(malformed(path, line, format!("unknown source `{other}`"))),
        };
        ds.push(LabeledRow { input: TestInput(values), fitness: Fitness(fitness), source })
            .map_err(|e| malformed(path, line, e))?;
    }
    Ok(ds)
}
