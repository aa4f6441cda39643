use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use super::{DataSource, Dataset, Embedding, Technique};
use crate::error::{Error, Result};

const LABEL_COLUMN: &str = "label";

/// Reads a dataset table: a header row, an optional `label` column and
/// numeric features in every other column.
///
/// Labels that all parse as non-negative integers are used as class ids;
/// otherwise the distinct strings are numbered in lexicographic order.
pub fn read_dataset_csv<R: Read>(id: &str, reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_col = headers.iter().position(|h| h == LABEL_COLUMN);
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            if Some(c) == label_col {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "row {}: column `{}` is not numeric: {field:?}",
                    line + 1,
                    &headers[c]
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let labels = label_col.map(|_| encode_labels(&raw_labels));
    Dataset::from_rows(id, &rows, labels, DataSource::NumericTable)
}

fn encode_labels(raw: &[String]) -> Vec<usize> {
    if let Ok(ids) = raw.iter().map(|s| s.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>() {
        return ids;
    }
    let names: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    let index: BTreeMap<&str, usize> = names.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
    raw.iter().map(|s| index[s.as_str()]).collect()
}

pub fn write_dataset_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("f{j}")).collect();
    if ds.labels().is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.points().row(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = ds.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Reads an `id,x,y` embedding table whose rows follow the dataset order.
pub fn read_embedding_csv<R: Read>(
    emb_id: &str,
    dataset_id: &str,
    technique: Technique,
    params: BTreeMap<String, String>,
    reader: R,
) -> Result<Embedding> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Structural(format!("embedding csv lacks column `{name}`")))
    };
    let (ci, cx, cy) = (col("id")?, col("x")?, col("y")?);
    let mut coords = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if let Ok(id) = record[ci].parse::<usize>() {
            if id != row {
                return Err(Error::Structural(format!(
                    "embedding csv row {row} has id {id}; rows must follow dataset order"
                )));
            }
        }
        let parse = |c: usize| -> Result<f64> {
            record[c]
                .parse()
                .map_err(|_| Error::Data(format!("row {row}: bad coordinate {:?}", &record[c])))
        };
        coords.push([parse(cx)?, parse(cy)?]);
    }
    Embedding::new(emb_id, dataset_id, coords, technique, params)
}

pub fn write_embedding_csv<W: Write>(emb: &Embedding, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "x", "y"])?;
    for (i, c) in emb.coords.iter().enumerate() {
        w.write_record([i.to_string(), c[0].to_string(), c[1].to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
