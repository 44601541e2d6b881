use std::io::{Read, Write};

use super::{FeatureVector, FEATURE_NAMES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub features: FeatureVector,
    pub label: String,
}

impl LabeledFeatures {
    pub fn new(features: FeatureVector, label: impl Into<String>) -> Self {
        Self {
            features,
            label: label.into(),
        }
    }
}

/// One row per window: the seven feature columns, then `label`.
pub fn write_dataset_csv<W: Write>(out: W, rows: &[LabeledFeatures]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    w.write_record(&header)?;
    for row in rows {
        let mut record: Vec<String> = row.features.to_array().iter().map(|v| v.to_string()).collect();
        record.push(row.label.clone());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<LabeledFeatures>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label"]).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::config("dataset", format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut values = [0.0; 7];
        for (i, v) in values.iter_mut().enumerate() {
            *v = record[i].parse().map_err(|_| {
                Error::config(
                    format!("dataset row {} column {}", line + 1, FEATURE_NAMES[i]),
                    format!("not a number: {:?}", &record[i]),
                )
            })?;
        }
        rows.push(LabeledFeatures::new(FeatureVector::from_array(values), &record[7]));
    }
    Ok(rows)
}
