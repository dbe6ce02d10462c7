//! Row-major sample matrices and CSV row streaming.

use std::io::Read;

use crate::error::{Error, Result};

/// `n × d` samples stored row-major.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DataMatrix {
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("data dimension must be positive".into()));
        }
        if !values.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: values.len().div_ceil(d) * d,
                got: values.len(),
            });
        }
        Ok(Self { d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::RowDimension {
                    row: i as u64,
                    expected: d,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(d, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.d.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::RowDimension {
                row: self.n() as u64,
                expected: self.d,
                got: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    /// Concatenates rows of `other` after `self`.
    pub fn concat(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(DataMatrix { d: self.d, values })
    }

    pub fn select(&self, indices: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        DataMatrix { d: self.d, values }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for r in self.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.n().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Streaming reader over a comma-separated file with a header row.
///
/// Each call to [`CsvRows::next`] parses one record; errors carry the
/// 1-based line number of the offending record.
pub struct CsvRows<R: Read> {
    reader: csv::Reader<R>,
    header: Vec<String>,
    record: csv::StringRecord,
    row: Vec<f64>,
}

impl<R: Read> CsvRows<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader
            .headers()
            .map_err(|e| Error::Format(format!("csv header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Format("csv header row is empty".into()));
        }
        Ok(Self {
            reader,
            header,
            record: csv::StringRecord::new(),
            row: Vec::new(),
        })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn d(&self) -> usize {
        self.header.len()
    }

    /// Next parsed row, or `None` at end of input.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<Result<&[f64]>> {
        match self.reader.read_record(&mut self.record) {
            Ok(false) => None,
            Err(e) => Some(Err(Error::Format(format!("csv: {e}")))),
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                if self.record.len() != self.header.len() {
                    return Some(Err(Error::Format(format!(
                        "line {line}: expected {} fields, got {}",
                        self.header.len(),
                        self.record.len()
                    ))));
                }
                self.row.clear();
                for field in self.record.iter() {
                    match field.parse::<f64>() {
                        Ok(v) if v.is_finite() => self.row.push(v),
                        _ => {
                            return Some(Err(Error::Format(format!(
                                "line {line}: '{field}' is not a finite number"
                            ))))
                        }
                    }
                }
                Some(Ok(&self.row))
            }
        }
    }
}

/// Reads a whole CSV file into memory.
pub fn read_csv<R: Read>(input: R) -> Result<DataMatrix> {
    let mut rows = CsvRows::new(input)?;
    let mut data = DataMatrix::new(rows.d(), Vec::new())?;
    while let Some(row) = rows.next() {
        data.push(row?)?;
    }
    Ok(data)
}

/// Writes samples as CSV with header `x1..xd`.
pub fn write_csv<W: std::io::Write>(data: &DataMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format(format!("csv write: {e}"));
    w.write_record((1..=data.d()).map(|i| format!("x{i}"))).map_err(io)?;
    for r in data.rows() {
        w.write_record(r.iter().map(|v| format!("{v:?}"))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Format(format!("csv write: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let data = DataMatrix::from_rows(&[[0.1, -2.5e-17], [1.0 / 3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn csv_errors_carry_lines() {
        let err = read_csv("a,b\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("line 3")), "{err:?}");
        let err = read_csv("a,b\n1,2\n3,zz\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("line 3")), "{err:?}");
        assert!(read_csv("a,b\n1,nan\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_body() {
        let data = read_csv("a,b,c\n".as_bytes()).unwrap();
        assert_eq!(data.n(), 0);
        assert_eq!(data.d(), 3);
    }
}
