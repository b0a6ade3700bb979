//! The sensitive input: an `n × d` matrix, one row per individual.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Observation matrix with `n ≥ 2` rows and finite entries.
///
/// Stored column-major because every pairwise statistic walks columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    cols: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from column-major storage.
    pub fn from_columns(n: usize, d: usize, cols: Vec<f64>) -> Result<Self> {
        if cols.len() != n * d {
            return Err(Error::Dimension(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                cols.len()
            )));
        }
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 rows, got {n}")));
        }
        if d == 0 {
            return Err(Error::Data("need at least one column".into()));
        }
        if let Some(pos) = cols.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite entry at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { n, d, cols })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut cols = vec![0.0; n * d];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                cols[j * n + i] = v;
            }
        }
        Self::from_columns(n, d, cols)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col * self.n + row]
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[f64] {
        &self.cols[col * self.n..(col + 1) * self.n]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.d).map(|j| self.get(row, j)).collect()
    }

    /// Copy with `row` deleted.
    pub fn without_row(&self, row: usize) -> Result<Self> {
        let n = self.n - 1;
        let mut cols = Vec::with_capacity(n * self.d);
        for j in 0..self.d {
            let c = self.column(j);
            cols.extend_from_slice(&c[..row]);
            cols.extend_from_slice(&c[row + 1..]);
        }
        Self::from_columns(n, self.d, cols)
    }

    /// Copy with `row` replaced; the neighbouring-dataset relation.
    pub fn with_row_replaced(&self, row: usize, values: &[f64]) -> Result<Self> {
        if values.len() != self.d {
            return Err(Error::Dimension(format!(
                "replacement row has {} entries, expected {}",
                values.len(),
                self.d
            )));
        }
        let mut cols = self.cols.clone();
        for (j, &v) in values.iter().enumerate() {
            cols[j * self.n + row] = v;
        }
        Self::from_columns(self.n, self.d, cols)
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let cols = self.cols.iter().map(|&v| f(v)).collect();
        Self::from_columns(self.n, self.d, cols)
    }

    /// Reads comma-separated values. A first row that does not parse as
    /// numbers is treated as a header and skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::Data(format!("line {}: {e}", line + 1)));
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Data("no numeric rows".into()));
        }
        Self::from_rows(&rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            Error::Data(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for i in 0..self.n {
            wtr.write_record(self.row(i).iter().map(|v| format!("{v:e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let with = "a,b\n1,2\n3,4\n5,6\n";
        let without = "1,2\n3,4\n5,6\n";
        let a = DataMatrix::from_csv_reader(with.as_bytes()).unwrap();
        let b = DataMatrix::from_csv_reader(without.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 3);
        assert_eq!(a.d(), 2);
        assert_eq!(a.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(a.row(2), vec![5.0, 6.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DataMatrix::from_rows(&[[1.0, 2.0]]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(DataMatrix::from_rows(&[[1.0, f64::NAN], [1.0, 2.0]]).is_err());
        assert!(DataMatrix::from_csv_reader("1,2\nx,3\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let m = DataMatrix::from_rows(&[[0.1, -2.5], [3.25e-7, 4.0], [1e10, 0.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(DataMatrix::from_csv_reader(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn row_edits() {
        let m = DataMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let m2 = m.without_row(1).unwrap();
        assert_eq!(m2.column(0), &[1.0, 5.0]);
        let m3 = m.with_row_replaced(0, &[9.0, 9.0]).unwrap();
        assert_eq!(m3.row(0), vec![9.0, 9.0]);
        assert_eq!(m3.row(1), m.row(1));
    }
}
