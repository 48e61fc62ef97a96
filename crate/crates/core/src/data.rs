//! Dataset ingestion from CSV.
//!
//! A header row is required and RFC-4180 quoting is honored. A column is
//! numeric iff every non-empty cell parses as a finite decimal number;
//! anything else (or an explicit override) makes it a label column. Empty
//! cells are recorded as missing and rejected later if the column is used.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV parse error{}: {message}", row.map(|r| format!(" at data row {r}")).unwrap_or_default())]
    Csv { row: Option<usize>, message: String },
    #[error("data row {row} has {got} fields, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("duplicate column name `{name}` in header")]
    DuplicateHeader { name: String },
    #[error("empty column name in header at position {position}")]
    EmptyHeader { position: usize },
    #[error("file contains a header but no data rows")]
    NoRows,
    #[error("unknown column `{name}` in --categorical")]
    UnknownOverride { name: String },
}

/// Declared kind of a dataset column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Label,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Label => "label",
        })
    }
}

/// Rectangular dataset: named columns of cells with detected kinds.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    /// column-major cells, trimmed
    cells: Vec<Vec<String>>,
    n_rows: usize,
}

impl Dataset {
    pub fn from_csv_path(
        path: impl AsRef<Path>,
        categorical_overrides: &[String],
    ) -> Result<Self, DataError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, categorical_overrides)
    }

    pub fn from_csv_str(text: &str, categorical_overrides: &[String]) -> Result<Self, DataError> {
        Self::from_reader(text.as_bytes(), categorical_overrides)
    }

    fn from_reader<R: Read>(reader: R, categorical_overrides: &[String]) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| DataError::Csv { row: None, message: e.to_string() })?
            .clone();
        let names: Vec<String> = headers.iter().map(str::to_string).collect();
        if let Some(pos) = names.iter().position(String::is_empty) {
            return Err(DataError::EmptyHeader { position: pos + 1 });
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateHeader { name: name.clone() });
            }
        }

        let p = names.len();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); p];
        let mut n_rows = 0usize;
        for record in rdr.records() {
            let record = record.map_err(|e| DataError::Csv {
                row: Some(n_rows + 1),
                message: e.to_string(),
            })?;
            n_rows += 1;
            if record.len() != p {
                return Err(DataError::Ragged { row: n_rows, expected: p, got: record.len() });
            }
            for (j, field) in record.iter().enumerate() {
                cells[j].push(field.to_string());
            }
        }
        if n_rows == 0 {
            return Err(DataError::NoRows);
        }

        let mut kinds: Vec<ColumnKind> = cells
            .iter()
            .map(|col| {
                let numeric = col
                    .iter()
                    .filter(|cell| !cell.is_empty())
                    .all(|cell| cell.parse::<f64>().is_ok_and(f64::is_finite));
                if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Label
                }
            })
            .collect();
        for name in categorical_overrides {
            match names.iter().position(|n| n == name) {
                Some(j) => kinds[j] = ColumnKind::Label,
                None => return Err(DataError::UnknownOverride { name: name.clone() }),
            }
        }

        Ok(Dataset { names, kinds, cells, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.kinds[col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Raw (trimmed) cells of a column.
    pub fn cells(&self, col: usize) -> &[String] {
        &self.cells[col]
    }

    /// 1-based rows whose cell is empty in this column.
    pub fn missing_rows(&self, col: usize) -> Vec<usize> {
        self.cells[col]
            .iter()
            .enumerate()
            .filter(|(_, cell)| cell.is_empty())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Parsed values of a numeric column. Call only after checking
    /// `missing_rows` is empty; panics on a label column.
    pub fn numeric_values(&self, col: usize) -> Vec<f64> {
        assert_eq!(self.kinds[col], ColumnKind::Numeric, "column `{}` is not numeric", self.names[col]);
        self.cells[col]
            .iter()
            .map(|cell| cell.parse::<f64>().expect("numeric kind guarantees parseable cells"))
            .collect()
    }

    /// Sorted distinct non-empty labels of a column.
    pub fn levels(&self, col: usize) -> Vec<String> {
        let set: BTreeSet<&str> = self.cells[col]
            .iter()
            .filter(|c| !c.is_empty())
            .map(String::as_str)
            .collect();
        set.into_iter().map(str::to_string).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_kinds_and_levels() {
        let ds = Dataset::from_csv_str("a,b,c\n1,x,2.5\n2,y,3.5\n3,x,4.5\n", &[]).unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Numeric);
        assert_eq!(ds.kind(1), ColumnKind::Label);
        assert_eq!(ds.kind(2), ColumnKind::Numeric);
        assert_eq!(ds.levels(1), vec!["x".to_string(), "y".to_string()]);
        assert_eq!(ds.numeric_values(2), vec![2.5, 3.5, 4.5]);
    }

    #[test]
    fn override_forces_label() {
        let ds = Dataset::from_csv_str("a,b\n1,1\n2,2\n", &["b".to_string()]).unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Numeric);
        assert_eq!(ds.kind(1), ColumnKind::Label);
    }

    #[test]
    fn unknown_override_rejected() {
        let err = Dataset::from_csv_str("a\n1\n", &["nope".to_string()]).unwrap_err();
        assert!(matches!(err, DataError::UnknownOverride { .. }));
    }

    #[test]
    fn ragged_row_names_row_number() {
        let err = Dataset::from_csv_str("a,b\n1,2\n3\n", &[]).unwrap_err();
        match err {
            DataError::Ragged { row, expected, got } => {
                assert_eq!((row, expected, got), (2, 2, 1));
            }
            other => panic!("expected ragged error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_header_rejected() {
        let err = Dataset::from_csv_str("a,a\n1,2\n", &[]).unwrap_err();
        assert!(matches!(err, DataError::DuplicateHeader { .. }));
    }

    #[test]
    fn missing_cells_reported_per_row() {
        let ds = Dataset::from_csv_str("a,b\n1,\n2,5\n,6\n", &[]).unwrap();
        assert_eq!(ds.missing_rows(0), vec![3]);
        assert_eq!(ds.missing_rows(1), vec![1]);
        // non-empty cells all parse, so both stay numeric
        assert_eq!(ds.kind(0), ColumnKind::Numeric);
    }

    #[test]
    fn quoted_fields_honored() {
        let ds = Dataset::from_csv_str("a,b\n\"1,5\",\"x \"\"y\"\"\"\n2,z\n", &[]).unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Label); // "1,5" is not a number
        assert_eq!(ds.cells(1)[0], "x \"y\"");
    }

    #[test]
    fn non_finite_cells_make_label() {
        let ds = Dataset::from_csv_str("a\ninf\n1\n", &[]).unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Label);
    }

    #[test]
    fn empty_data_rejected() {
        assert!(matches!(Dataset::from_csv_str("a,b\n", &[]), Err(DataError::NoRows)));
    }
}
