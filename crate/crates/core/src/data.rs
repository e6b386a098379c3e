//! Dataset container and CSV ingestion.
//!
//! Values are stored column-major: every algorithm in this crate sweeps one
//! variable at a time over all observations.

use std::path::Path;

use crate::error::{Error, Result};

/// Selects which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Last column of the file.
    Last,
    /// 0-based column index.
    Index(usize),
    /// Column name (requires a header row).
    Name(String),
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: LabelColumn::Last,
            has_header: true,
            delimiter: b',',
        }
    }
}

/// An n x p numeric matrix with per-row class labels.
///
/// Immutable after construction; safe to share across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Column-major values: `columns[j][i]` is variable j of observation i.
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    variable_names: Option<Vec<String>>,
    /// Original label strings in first-appearance order; `label_names[k]`
    /// is the raw label mapped to class index k.
    label_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset from column-major values and 0-based labels.
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || columns.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::LabelLengthMismatch {
                    labels: n,
                    rows: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row: i, column: j });
                }
            }
        }
        if class_count == 0 {
            return Err(Error::InvalidParameter("class_count must be >= 1".into()));
        }
        for &label in &labels {
            if label >= class_count {
                return Err(Error::LabelOutOfRange { label, class_count });
            }
        }
        let label_names = (0..class_count).map(|k| k.to_string()).collect();
        Ok(Dataset {
            columns,
            labels,
            class_count,
            variable_names: None,
            label_names,
        })
    }

    /// Build from row-major data.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = rows[0].len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    got: row.len(),
                    expected: p,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                columns[j].push(v);
            }
        }
        Dataset::from_columns(columns, labels, class_count)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn variable_names(&self) -> Option<&[String]> {
        self.variable_names.as_deref()
    }

    pub fn set_variable_names(&mut self, names: Vec<String>) {
        self.variable_names = Some(names);
    }

    /// Raw label string for a class index.
    pub fn label_name(&self, class: usize) -> &str {
        &self.label_names[class]
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn set_label_names(&mut self, names: Vec<String>) {
        self.label_names = names;
    }

    /// Number of members per class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.class_count];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Fails if any class in {0,..,K-1} has no members; fitting requires this.
    pub fn check_classes_nonempty(&self) -> Result<()> {
        for (k, &s) in self.class_sizes().iter().enumerate() {
            if s == 0 {
                return Err(Error::EmptyClass { class: k });
            }
        }
        Ok(())
    }

    /// Values of variable j restricted to one class.
    pub fn class_column(&self, class: usize, j: usize) -> Vec<f64> {
        self.columns[j]
            .iter()
            .zip(&self.labels)
            .filter(|(_, &c)| c == class)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Dataset restricted to a subset of row indices.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&i| c[i]).collect())
            .collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut d = Dataset::from_columns(columns, labels, self.class_count)?;
        d.variable_names = self.variable_names.clone();
        d.label_names = self.label_names.clone();
        Ok(d)
    }

    /// Per-variable within-class pooled standard deviation: each class is
    /// centred at its own mean, squared deviations are pooled with n - K
    /// degrees of freedom. Variables with zero pooled variance get divisor
    /// 1 so scaling stays well defined.
    pub fn pooled_within_class_sd(&self) -> Vec<f64> {
        let n = self.n();
        let k = self.class_count;
        let sizes = self.class_sizes();
        let denom = (n.saturating_sub(k)).max(1) as f64;
        (0..self.p())
            .map(|j| {
                let col = self.column(j);
                let mut means = vec![0.0; k];
                for (i, &v) in col.iter().enumerate() {
                    means[self.labels[i]] += v;
                }
                for (c, m) in means.iter_mut().enumerate() {
                    if sizes[c] > 0 {
                        *m /= sizes[c] as f64;
                    }
                }
                let ss: f64 = col
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let d = v - means[self.labels[i]];
                        d * d
                    })
                    .sum();
                let sd = (ss / denom).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// New dataset with each variable divided by the given positive divisor.
    pub fn scaled(&self, divisors: &[f64]) -> Result<Dataset> {
        if divisors.len() != self.p() {
            return Err(Error::DimensionMismatch {
                got: divisors.len(),
                expected: self.p(),
            });
        }
        let columns = self
            .columns
            .iter()
            .zip(divisors)
            .map(|(c, &d)| c.iter().map(|&v| v / d).collect())
            .collect();
        let mut out = Dataset::from_columns(columns, self.labels.clone(), self.class_count)?;
        out.variable_names = self.variable_names.clone();
        out.label_names = self.label_names.clone();
        Ok(out)
    }
}

/// Load a delimited text file into a [`Dataset`].
///
/// Raw labels are remapped to contiguous 0-based indices in order of first
/// appearance; the raw strings are retained for output.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
            }
            _ => Error::Csv(e),
        })?;

    let headers: Option<Vec<String>> = if options.has_header {
        Some(reader.headers()?.iter().map(|s| s.to_string()).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;

    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::DimensionMismatch {
                got: record.len(),
                expected: w,
            });
        }
        let li = match label_idx {
            Some(i) => i,
            None => {
                let i = resolve_label_column(&options.label_column, headers.as_deref(), w)?;
                label_idx = Some(i);
                i
            }
        };
        let mut row = Vec::with_capacity(w - 1);
        for (col, field) in record.iter().enumerate() {
            if col == li {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| Error::ParseCell {
                row: row_no,
                column: col,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: row_no,
                    column: col,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // First-appearance remap of raw labels to 0..K-1.
    let mut label_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(raw_labels.len());
    for raw in &raw_labels {
        let idx = match label_names.iter().position(|s| s == raw) {
            Some(i) => i,
            None => {
                label_names.push(raw.clone());
                label_names.len() - 1
            }
        };
        labels.push(idx);
    }

    let class_count = label_names.len();
    let mut dataset = Dataset::from_rows(&rows, labels, class_count)?;
    dataset.label_names = label_names;
    if let Some(h) = headers {
        let li = label_idx.expect("label index resolved");
        let names = h
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != li)
            .map(|(_, s)| s.clone())
            .collect();
        dataset.set_variable_names(names);
    }
    Ok(dataset)
}

fn resolve_label_column(
    selector: &LabelColumn,
    headers: Option<&[String]>,
    width: usize,
) -> Result<usize> {
    match selector {
        LabelColumn::Last => Ok(width - 1),
        LabelColumn::Index(i) => {
            if *i >= width {
                Err(Error::LabelColumnOutOfRange {
                    index: *i,
                    columns: width,
                })
            } else {
                Ok(*i)
            }
        }
        LabelColumn::Name(name) => headers
            .and_then(|h| h.iter().position(|s| s == name))
            .ok_or_else(|| Error::LabelColumnNotFound(name.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn remaps_labels_by_first_appearance() {
        let f = write_tmp("x,y\n1.0,a\n2.0,b\n3.0,a\n4.0,b\n");
        let d = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(d.n(), 4);
        assert_eq!(d.class_count(), 2);
        assert_eq!(d.labels(), &[0, 1, 0, 1]);
        assert_eq!(d.label_name(0), "a");
        assert_eq!(d.label_name(1), "b");
    }

    #[test]
    fn loads_iris_fixture() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/iris.csv");
        let d = load_csv(path, &CsvOptions::default()).unwrap();
        assert_eq!(d.n(), 150);
        assert_eq!(d.p(), 4);
        assert_eq!(d.class_count(), 3);
        assert_eq!(d.class_sizes(), vec![50, 50, 50]);
    }

    #[test]
    fn parse_error_names_cell() {
        let f = write_tmp("x,y\n1.0,a\n?,b\n");
        let err = load_csv(f.path(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::ParseCell { row, column, value } => {
                assert_eq!((row, column), (1, 0));
                assert_eq!(value, "?");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn label_column_by_name_and_index() {
        let f = write_tmp("cls,x\na,1.0\nb,2.0\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Name("cls".into()),
            ..CsvOptions::default()
        };
        let d = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d.p(), 1);
        assert_eq!(d.column(0), &[1.0, 2.0]);

        let opts = CsvOptions {
            label_column: LabelColumn::Index(0),
            ..CsvOptions::default()
        };
        let d2 = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d2.labels(), d.labels());
    }

    #[test]
    fn missing_label_column_name_errors() {
        let f = write_tmp("x,y\n1.0,a\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Name("nope".into()),
            ..CsvOptions::default()
        };
        assert!(matches!(
            load_csv(f.path(), &opts),
            Err(Error::LabelColumnNotFound(_))
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::from_columns(vec![vec![1.0, f64::NAN]], vec![0, 0], 1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 1, column: 0 }));
    }

    #[test]
    fn remap_stable_under_row_permutation_of_first_appearance() {
        // Same multiset of labels, different row order: mapping follows
        // first appearance in each file.
        let f1 = write_tmp("x,y\n1,a\n2,b\n");
        let f2 = write_tmp("x,y\n2,b\n1,a\n");
        let d1 = load_csv(f1.path(), &CsvOptions::default()).unwrap();
        let d2 = load_csv(f2.path(), &CsvOptions::default()).unwrap();
        assert_eq!(d1.label_name(0), "a");
        assert_eq!(d2.label_name(0), "b");
    }
}
