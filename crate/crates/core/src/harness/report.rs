//! Sweep rows and their CSV form.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "scheme",
    "detector",
    "csi",
    "snr_db",
    "trials_run",
    "bits",
    "bit_errors",
    "ber",
    "nmse_db",
    "wall_time_s",
    "seed",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: String,
    pub detector: String,
    pub csi: String,
    pub snr_db: f64,
    pub trials_run: u64,
    pub bits: u64,
    pub bit_errors: u64,
    /// `bit_errors / bits`, 0 when no bits were counted.
    pub ber: f64,
    pub nmse_db: Option<f64>,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl SweepRow {
    pub fn ber_of(bit_errors: u64, bits: u64) -> f64 {
        if bits == 0 {
            0.0
        } else {
            bit_errors as f64 / bits as f64
        }
    }

    fn fields(&self) -> [String; 12] {
        [
            self.scheme.clone(),
            self.detector.clone(),
            self.csi.clone(),
            format!("{:e}", self.snr_db),
            self.trials_run.to_string(),
            self.bits.to_string(),
            self.bit_errors.to_string(),
            format!("{:e}", self.ber),
            self.nmse_db.map_or(String::new(), |v| format!("{v:e}")),
            format!("{:e}", self.wall_time_s),
            self.seed.to_string(),
            self.config_hash.clone(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-run diagnostics, e.g. estimator non-convergence counts.
    pub notes: Vec<String>,
}

impl SweepResult {
    /// Orders rows by scheme, detector, CSI and SNR.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.scheme, &a.detector, &a.csi)
                .cmp(&(&b.scheme, &b.detector, &b.csi))
                .then(a.snr_db.total_cmp(&b.snr_db))
        });
    }

    pub fn extend(&mut self, other: SweepResult) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }

    pub fn find(&self, scheme: &str, detector: &str, snr_db: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.detector == detector && r.snr_db == snr_db)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_csv(&mut buf, self, "<memory>")?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// CSV without the wall-time column, for reproducibility comparisons.
    pub fn to_csv_string_without_timing(&self) -> Result<String> {
        let mut stripped = self.clone();
        stripped.rows.iter_mut().for_each(|r| r.wall_time_s = 0.0);
        stripped.to_csv_string()
    }
}

fn write_csv<W: Write>(out: W, result: &SweepResult, path: &str) -> Result<()> {
    let wrap = |source: csv::Error| Error::Csv {
        path: path.to_string(),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for row in &result.rows {
        w.write_record(row.fields()).map_err(wrap)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let name = path.display().to_string();
    let file = File::create(path).map_err(|source| Error::Io {
        path: name.clone(),
        source,
    })?;
    write_csv(file, result, &name)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("bad value in column '{}'", CSV_HEADER[i]),
    })
}

pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|source| Error::Csv {
        path: "<memory>".into(),
        source,
    })?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|source| Error::Csv {
            path: "<memory>".into(),
            source,
        })?;
        let nmse = rec.get(8).unwrap_or("");
        rows.push(SweepRow {
            scheme: field(&rec, 0, line)?,
            detector: field(&rec, 1, line)?,
            csi: field(&rec, 2, line)?,
            snr_db: field(&rec, 3, line)?,
            trials_run: field(&rec, 4, line)?,
            bits: field(&rec, 5, line)?,
            bit_errors: field(&rec, 6, line)?,
            ber: field(&rec, 7, line)?,
            nmse_db: if nmse.is_empty() { None } else { Some(field(&rec, 8, line)?) },
            wall_time_s: field(&rec, 9, line)?,
            seed: field(&rec, 10, line)?,
            config_hash: field(&rec, 11, line)?,
        });
    }
    Ok(SweepResult { rows, notes: Vec::new() })
}

pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text)
}
