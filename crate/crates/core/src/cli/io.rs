//! CSV ingestion and output.

use std::io::{Read, Write};

use crate::model::Dataset;

use super::CliError;

/// Name of the ground-truth column; 0 marks contamination.
pub const LABEL_COLUMN: &str = "true_label";

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub no_header: bool,
    /// Column name or 0-based index of the response; defaults to the last
    /// column other than `true_label`.
    pub response: Option<String>,
}

fn parse_f64(field: &str, row: usize, col: usize) -> Result<f64, CliError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::parse(format!("row {row}, column {col}: `{field}` is not a number")))
}

/// Reads a dataset from CSV text.
pub fn read_dataset<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(!opts.no_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if opts.no_header {
        None
    } else {
        Some(
            rdr.headers()
                .map_err(|e| CliError::parse(format!("cannot read header: {e}")))?
                .iter()
                .map(str::to_string)
                .collect(),
        )
    };

    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(format!("malformed CSV: {e}")))?;
        records.push((k, rec));
    }
    let width = match (&header, records.first()) {
        (Some(h), _) => h.len(),
        (None, Some((_, r))) => r.len(),
        (None, None) => return Err(CliError::parse("empty input")),
    };

    let label_col = header
        .as_ref()
        .and_then(|h| h.iter().position(|c| c == LABEL_COLUMN));
    let response_col = match &opts.response {
        Some(spec) => match header.as_ref().and_then(|h| h.iter().position(|c| c == spec)) {
            Some(i) => i,
            None => spec
                .parse::<usize>()
                .ok()
                .filter(|&i| i < width)
                .ok_or_else(|| CliError::parse(format!("no response column `{spec}`")))?,
        },
        None => (0..width)
            .rev()
            .find(|&i| Some(i) != label_col)
            .ok_or_else(|| CliError::parse("no response column"))?,
    };
    if Some(response_col) == label_col {
        return Err(CliError::parse("the response cannot be the label column"));
    }
    let x_cols: Vec<usize> = (0..width)
        .filter(|&i| i != response_col && Some(i) != label_col)
        .collect();
    if x_cols.is_empty() {
        return Err(CliError::parse("at least one covariate column is required"));
    }

    let mut x = Vec::with_capacity(records.len() * x_cols.len());
    let mut y = Vec::with_capacity(records.len());
    let mut labels = label_col.map(|_| Vec::with_capacity(records.len()));
    let first_line = if opts.no_header { 1 } else { 2 };
    for (k, rec) in &records {
        let line = k + first_line;
        for &c in &x_cols {
            x.push(parse_f64(&rec[c], line, c + 1)?);
        }
        y.push(parse_f64(&rec[response_col], line, response_col + 1)?);
        if let (Some(c), Some(l)) = (label_col, labels.as_mut()) {
            let v = rec[c].trim().parse::<usize>().map_err(|_| {
                CliError::parse(format!("row {line}: label `{}` is not a non-negative integer", &rec[c]))
            })?;
            l.push(v);
        }
    }
    Dataset::from_row_major(x_cols.len(), x, y, labels).map_err(|e| CliError::parse(e.to_string()))
}

/// Writes `x_1..x_d, y[, true_label]`.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=ds.d()).map(|k| format!("x_{k}")).collect();
    header.push("y".into());
    if ds.true_labels().is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header).map_err(CliError::io)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.response(i).to_string());
        if let Some(l) = ds.true_labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}
