//! The CSV dialect shared by the generator, trainer, and detector: a header
//! row with `timestamp`, channel names (any order), and an optional `label`
//! column; one sample per line.

use crate::data::{channel_names, Label, LabeledStream, SampleRecord};
use crate::error::{Result, VaradeError};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn load_csv(path: &Path) -> Result<LabeledStream> {
    let file = std::fs::File::open(path)?;
    read_stream(BufReader::new(file))
}

/// Incremental reader over the dialect; each call to [`CsvReader::next_record`]
/// yields one parsed sample or a row-addressed format error.
pub struct CsvReader<R: BufRead> {
    reader: R,
    ts_idx: usize,
    label_idx: Option<usize>,
    value_idx: Vec<usize>,
    field_count: usize,
    row: usize,
    prev_ts: f64,
    pub has_label_column: bool,
}

impl<R: BufRead> CsvReader<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 {
            return Err(VaradeError::Format {
                row: 0,
                column: "-".into(),
                detail: "empty file, expected a header row".into(),
            });
        }
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        let ts_idx =
            cols.iter().position(|&c| c == "timestamp").ok_or_else(|| VaradeError::Format {
                row: 0,
                column: "timestamp".into(),
                detail: "missing timestamp column".into(),
            })?;
        let label_idx = cols.iter().position(|&c| c == "label");
        let names = channel_names();
        // header-driven mapping so column order never matters
        let mut value_idx = Vec::with_capacity(names.len());
        for name in &names {
            let idx = cols.iter().position(|c| c == name).ok_or_else(|| VaradeError::Format {
                row: 0,
                column: name.clone(),
                detail: "missing channel column".into(),
            })?;
            value_idx.push(idx);
        }
        for (i, col) in cols.iter().enumerate() {
            if i != ts_idx && Some(i) != label_idx && !names.iter().any(|n| n == col) {
                return Err(VaradeError::Format {
                    row: 0,
                    column: (*col).to_string(),
                    detail: "unknown column".into(),
                });
            }
        }
        Ok(CsvReader {
            reader,
            ts_idx,
            label_idx,
            value_idx,
            field_count: cols.len(),
            row: 0,
            prev_ts: f64::NEG_INFINITY,
            has_label_column: label_idx.is_some(),
        })
    }

    /// `Ok(None)` at end of input.
    pub fn next_record(&mut self) -> Result<Option<SampleRecord>> {
        let names = channel_names();
        loop {
            let mut line = String::new();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            self.row += 1;
            if line.trim().is_empty() {
                continue;
            }
            let row = self.row;
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != self.field_count {
                return Err(VaradeError::Format {
                    row,
                    column: "-".into(),
                    detail: format!("{} fields, header has {}", fields.len(), self.field_count),
                });
            }
            let timestamp: f64 =
                fields[self.ts_idx].parse().map_err(|_| VaradeError::Format {
                    row,
                    column: "timestamp".into(),
                    detail: format!("non-numeric cell '{}'", fields[self.ts_idx]),
                })?;
            if timestamp <= self.prev_ts {
                return Err(VaradeError::Format {
                    row,
                    column: "timestamp".into(),
                    detail: format!(
                        "timestamps must be strictly increasing ({} then {timestamp})",
                        self.prev_ts
                    ),
                });
            }
            self.prev_ts = timestamp;
            let mut values = Vec::with_capacity(names.len());
            for (name, &idx) in names.iter().zip(&self.value_idx) {
                let v: f32 = fields[idx].parse().map_err(|_| VaradeError::Format {
                    row,
                    column: name.clone(),
                    detail: format!("non-numeric cell '{}'", fields[idx]),
                })?;
                values.push(v);
            }
            let label = match self.label_idx {
                None => Label::Normal,
                Some(idx) => match fields[idx] {
                    "0" | "normal" => Label::Normal,
                    "1" | "anomaly" => Label::Anomaly,
                    other => {
                        return Err(VaradeError::Format {
                            row,
                            column: "label".into(),
                            detail: format!("unrecognized label '{other}'"),
                        });
                    }
                },
            };
            return Ok(Some(SampleRecord {
                timestamp,
                values,
                label,
            }));
        }
    }
}

pub fn read_stream<R: BufRead>(reader: R) -> Result<LabeledStream> {
    let mut csv = CsvReader::new(reader)?;
    let mut records = Vec::new();
    while let Some(record) = csv.next_record()? {
        records.push(record);
    }
    Ok(LabeledStream { records })
}

pub fn write_csv(path: &Path, stream: &LabeledStream, with_labels: bool) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let names = channel_names();
    write!(w, "timestamp")?;
    for n in &names {
        write!(w, ",{n}")?;
    }
    if with_labels {
        write!(w, ",label")?;
    }
    writeln!(w)?;
    for r in &stream.records {
        write!(w, "{}", r.timestamp)?;
        for v in &r.values {
            write!(w, ",{v}")?;
        }
        if with_labels {
            write!(w, ",{}", if r.label == Label::Anomaly { 1 } else { 0 })?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
