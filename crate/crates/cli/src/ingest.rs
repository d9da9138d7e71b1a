use std::io::Read;
use std::path::Path;

use distpred::learners::Dataset;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// Reads a headed CSV of numbers, taking `target` as the label column and
/// every other column as a feature.
///
/// Numbers use `.` as decimal point regardless of locale. Empty cells are
/// reported as missing values.
pub fn load_csv(path: impl AsRef<Path>, target: &str) -> CliResult<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, target)
}

pub fn read_csv(input: impl Read, target: &str) -> CliResult<Dataset> {
    let (header, rows) = read_table(input)?;
    let t = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| CliError::ingest(0, target, format!("no such column; header is [{}]", header.join(", "))))?;
    let features: Vec<String> = header.iter().enumerate().filter(|(j, _)| *j != t).map(|(_, h)| h.clone()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[t]).collect();
    let x = DMatrix::from_fn(rows.len(), features.len(), |i, j| rows[i][if j < t { j } else { j + 1 }]);
    let data = Dataset::new(x, y, features, target)?;
    log::info!("loaded {} rows with {} features and target `{target}`", data.n_rows(), data.n_features());
    Ok(data)
}

/// Header and numeric rows of a CSV with no label column singled out.
pub fn read_table(input: impl Read) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::ingest(0, "", format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::ingest(0, "", "missing header row"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::ingest(row, "", e.to_string()))?;
        if record.len() != header.len() {
            return Err(CliError::ingest(
                row,
                "",
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let values = record
            .iter()
            .zip(&header)
            .map(|(cell, col)| {
                if cell.is_empty() {
                    return Err(CliError::ingest(row, col, "missing value"));
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::ingest(row, col, format!("`{cell}` is not a finite number"))),
                }
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::ingest(1, "", "no data rows"));
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_file() {
        let d = read_csv("a, b ,y\n1,2,3\n4,5.5,6\n-7,8e-1,9\n".as_bytes(), "y").unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.y, vec![3.0, 6.0, 9.0]);
        assert_eq!(d.x[(2, 1)], 0.8);
    }

    #[test]
    fn target_in_the_middle() {
        let d = read_csv("a,y,b\n1,2,3\n".as_bytes(), "y").unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!((d.x[(0, 0)], d.x[(0, 1)], d.y[0]), (1.0, 3.0, 2.0));
    }

    #[test]
    fn problems_are_located() {
        let err = |src: &str| read_csv(src.as_bytes(), "y").unwrap_err();
        assert!(matches!(err("a,b\n1,2\n"), CliError::Ingest { row: 0, .. }));
        assert!(matches!(err("a,y\n1,2\n3,\n"), CliError::Ingest { row: 2, ref column, .. } if column == "y"));
        assert!(matches!(err("a,y\n1,2\nx,4\n"), CliError::Ingest { row: 2, ref column, .. } if column == "a"));
        assert!(matches!(err("a,y\n1,2,3\n"), CliError::Ingest { row: 1, .. }));
        assert!(matches!(err("a,y\n1,2\n3,1,5\n"), CliError::Ingest { row: 2, .. }));
        assert!(matches!(err("a,y\n1,1e999\n"), CliError::Ingest { row: 1, .. }));
        assert_eq!(read_csv("a,y\n1,2\n3,4".as_bytes(), "y").unwrap().n_rows(), 2);
    }

    #[test]
    fn comma_decimals_are_not_numbers() {
        assert!(read_csv("a;y\n1,5;2\n".as_bytes(), "y").is_err());
    }
}
