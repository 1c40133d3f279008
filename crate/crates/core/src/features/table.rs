use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::vocab::IdVocabulary;
use crate::error::{Error, Result};
use crate::label::Label;

/// Labeled feature rows, one per window, persisted as
/// `label,f_0x100,dt_0x100,sd_0x100,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub vocab: IdVocabulary,
    pub x: DMatrix<f64>,
    pub labels: Vec<Label>,
}

impl FeatureTable {
    pub fn new(vocab: IdVocabulary, x: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if x.ncols() != vocab.dimension() {
            return Err(Error::DimensionMismatch {
                expected: vocab.dimension(),
                got: x.ncols(),
            });
        }
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: labels.len(),
            });
        }
        Ok(FeatureTable { vocab, x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureTable {
        let x = DMatrix::from_fn(indices.len(), self.x.ncols(), |r, c| self.x[(indices[r], c)]);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        FeatureTable {
            vocab: self.vocab.clone(),
            x,
            labels,
        }
    }

    /// Stacks `other` under `self`; vocabularies must agree.
    pub fn concat(&self, other: &FeatureTable) -> Result<FeatureTable> {
        if self.vocab != other.vocab {
            return Err(Error::invalid("cannot concatenate feature tables with different vocabularies"));
        }
        let n = self.len();
        let x = DMatrix::from_fn(n + other.len(), self.x.ncols(), |r, c| if r < n { self.x[(r, c)] } else { other.x[(r - n, c)] });
        let labels = self.labels.iter().chain(&other.labels).copied().collect();
        Ok(FeatureTable {
            vocab: self.vocab.clone(),
            x,
            labels,
        })
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["label".to_string()];
        header.extend(self.vocab.column_names());
        w.write_record(&header)?;
        for (r, label) in self.labels.iter().enumerate() {
            let mut record = Vec::with_capacity(header.len());
            record.push(label.as_str().to_string());
            // shortest round-trip representation
            record.extend(self.x.row(r).iter().map(|v| format!("{v:?}")));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(stream: R) -> Result<FeatureTable> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(stream);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("label") {
            return Err(Error::invalid("feature table must start with a label column"));
        }
        let names: Vec<&str> = headers.iter().skip(1).collect();
        let vocab = IdVocabulary::from_column_names(&names)?;
        let dim = vocab.dimension();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
            labels.push(record[0].parse::<Label>().map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?);
            for field in record.iter().skip(1) {
                let v: f64 = field.trim().parse().map_err(|_| Error::Row {
                    row,
                    message: format!("invalid number {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Row {
                        row,
                        message: format!("non-finite feature {field:?}"),
                    });
                }
                data.push(v);
            }
        }
        let x = DMatrix::from_row_slice(labels.len(), dim, &data);
        FeatureTable::new(vocab, x, labels)
    }
}
