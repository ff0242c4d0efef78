use std::fs::File;
use std::io::Write;
use std::path::Path;

use xicor_core::Sample;

use crate::CliError;

/// Reads `x1,...,xd,y` rows. Fields are trimmed and parsed with Rust's
/// float grammar, so scientific notation is accepted and no locale applies.
pub fn read_sample(path: &Path, has_header: bool) -> Result<Sample, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1 + usize::from(has_header);
        let record = record.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "line {line}, column {}: '{field}' is not a number",
                        col + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() < 2 {
            return Err(CliError::Input(format!(
                "line {line}: need at least one covariate column and a response column"
            )));
        }
        rows.push(row);
    }
    Ok(Sample::from_rows(&rows)?)
}

/// Writes a sample as CSV with an `x1,...,xd,y` header. Values use the
/// shortest representation that parses back to the same bits.
pub fn write_sample(path: &Path, sample: &Sample) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    let header: Vec<String> = (1..=sample.d())
        .map(|k| format!("x{k}"))
        .chain(["y".to_string()])
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for i in 0..sample.n() {
        let fields: Vec<String> = sample
            .point(i)
            .iter()
            .chain([&sample.y()[i]])
            .map(|v| format!("{v:?}"))
            .collect();
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
