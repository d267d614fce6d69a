//! File formats: capture CSV with its `.meta` sidecar, histogram CSV,
//! generic numeric tables and `key=value` reports.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats::GainHistogram;

pub const CAPTURE_HEADER: [&str; 2] = ["time_s", "volts"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_left", "bin_right", "density"];

/// Sidecar metadata for a capture file.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureMeta {
    pub sample_rate: f64,
    pub f_if: f64,
    pub description: String,
    pub seed: u64,
}

impl CaptureMeta {
    pub fn render(&self) -> String {
        let mut r = Report::new();
        r.push("sample_rate_hz", self.sample_rate);
        r.push("f_if_hz", self.f_if);
        r.push("description", self.description.replace(['\n', '\r'], " "));
        r.push("seed", self.seed);
        r.render()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let report = Report::parse(text, path)?;
        let missing = |key: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("missing key `{key}`"),
        };
        let number = |key: &str| -> Result<f64> {
            let (line, v) = report.find(key).ok_or_else(|| missing(key))?;
            v.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("`{key}` is not a number: {v}"),
            })
        };
        let sample_rate = number("sample_rate_hz")?;
        let f_if = number("f_if_hz")?;
        let (seed_line, seed) = report.find("seed").ok_or_else(|| missing("seed"))?;
        let seed = seed.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: seed_line,
            message: format!("`seed` is not an unsigned integer: {seed}"),
        })?;
        let description = report
            .find("description")
            .map(|(_, v)| v.to_string())
            .unwrap_or_default();
        for (line, key, _) in &report.lines {
            if !["sample_rate_hz", "f_if_hz", "description", "seed"].contains(&key.as_str()) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(CaptureMeta {
            sample_rate,
            f_if,
            description,
            seed,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Same rate and IF, as required to reference one capture to another.
    pub fn check_compatible(&self, other: &CaptureMeta) -> Result<()> {
        if self.sample_rate != other.sample_rate || self.f_if != other.f_if {
            return Err(Error::Incompatible(format!(
                "capture is {} Hz / IF {} Hz but baseline is {} Hz / IF {} Hz",
                self.sample_rate, self.f_if, other.sample_rate, other.f_if
            )));
        }
        Ok(())
    }
}

/// `capture.csv` → `capture.meta`.
pub fn meta_path(capture: &Path) -> PathBuf {
    capture.with_extension("meta")
}

/// Streams samples to a capture CSV, writing the sidecar up front.
pub struct CaptureWriter {
    out: csv::Writer<BufWriter<File>>,
    sample_rate: f64,
    index: u64,
}

impl CaptureWriter {
    pub fn create(path: &Path, meta: &CaptureMeta) -> Result<Self> {
        fs::write(meta_path(path), meta.render())?;
        let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        out.write_record(CAPTURE_HEADER)?;
        Ok(CaptureWriter {
            out,
            sample_rate: meta.sample_rate,
            index: 0,
        })
    }

    pub fn write_block(&mut self, volts: &[f64]) -> Result<()> {
        for v in volts {
            let t = self.index as f64 / self.sample_rate;
            self.out.write_record([t.to_string(), v.to_string()])?;
            self.index += 1;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        Ok(self.index)
    }
}

/// Streams a capture CSV back in blocks, checking the header and the
/// uniform time grid promised by the sidecar.
pub struct CaptureReader {
    path: PathBuf,
    records: csv::StringRecordsIntoIter<File>,
    meta: CaptureMeta,
    index: u64,
}

impl CaptureReader {
    pub fn open(path: &Path) -> Result<Self> {
        let meta = CaptureMeta::read(&meta_path(path))?;
        let mut reader = csv::Reader::from_path(path)?;
        if reader.headers()?.iter().ne(CAPTURE_HEADER) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`", CAPTURE_HEADER.join(",")),
            });
        }
        Ok(CaptureReader {
            path: path.to_path_buf(),
            records: reader.into_records(),
            meta,
            index: 0,
        })
    }

    pub fn meta(&self) -> &CaptureMeta {
        &self.meta
    }

    /// Up to `max` further samples, or `None` at end of file.
    pub fn next_block(&mut self, max: usize) -> Result<Option<Vec<f64>>> {
        let mut block = Vec::with_capacity(max.min(1 << 20));
        let period = 1.0 / self.meta.sample_rate;
        while block.len() < max {
            let Some(rec) = self.records.next() else { break };
            let rec = rec?;
            let line = self.index as usize + 2;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        path: self.path.clone(),
                        line,
                        message: format!(
                            "expected two numeric fields, got `{}`",
                            rec.iter().collect::<Vec<_>>().join(",")
                        ),
                    })
            };
            let (t, v) = (field(0)?, field(1)?);
            let expected = self.index as f64 * period;
            if (t - expected).abs() > 1e-3 * period + 1e-12 * expected.abs() {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!("time {t} s is off the {} Hz grid", self.meta.sample_rate),
                });
            }
            block.push(v);
            self.index += 1;
        }
        Ok(if block.is_empty() { None } else { Some(block) })
    }
}

pub fn write_capture(path: &Path, meta: &CaptureMeta, volts: &[f64]) -> Result<()> {
    let mut w = CaptureWriter::create(path, meta)?;
    w.write_block(volts)?;
    w.finish()?;
    Ok(())
}

pub fn read_capture(path: &Path) -> Result<(CaptureMeta, Vec<f64>)> {
    let mut r = CaptureReader::open(path)?;
    let mut all = Vec::new();
    while let Some(block) = r.next_block(1 << 16)? {
        all.extend(block);
    }
    Ok((r.meta.clone(), all))
}

pub fn write_histogram_csv(path: &Path, hist: &GainHistogram) -> Result<()> {
    let rows = hist
        .bin_edges
        .windows(2)
        .zip(&hist.densities)
        .map(|(w, &d)| vec![w[0], w[1], d]);
    write_table(path, &HISTOGRAM_HEADER, rows)
}

/// Reads a histogram CSV. The sample count is not stored in the file and is
/// reported as zero.
pub fn read_histogram_csv(path: &Path) -> Result<GainHistogram> {
    let (header, rows) = read_table(path)?;
    if header.iter().ne(HISTOGRAM_HEADER.iter()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", HISTOGRAM_HEADER.join(",")),
        });
    }
    let rows: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
    GainHistogram::from_rows(&rows, 0)
}

/// Numeric CSV with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Header and rows of a numeric CSV; every row must match the header width.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: Option<Vec<f64>> = rec.iter().map(|s| s.trim().parse().ok()).collect();
        match row {
            Some(r) if r.len() == header.len() => rows.push(r),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("expected {} numeric fields", header.len()),
                })
            }
        }
    }
    Ok((header, rows))
}

/// Ordered `key=value` lines. Blank lines separate blocks and `#` starts a
/// comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    /// (line number, key, value); line numbers are zero for built reports.
    pub lines: Vec<(usize, String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push((0, key.to_string(), value.to_string()));
        self
    }

    /// Blank separator between blocks.
    pub fn gap(&mut self) -> &mut Self {
        self.lines.push((0, String::new(), String::new()));
        self
    }

    /// First value for `key` with its line number.
    pub fn find(&self, key: &str) -> Option<(usize, &str)> {
        self.lines
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (_, k, v) in &self.lines {
            if !k.is_empty() {
                s.push_str(k);
                s.push('=');
                s.push_str(v);
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(self.render().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
            };
            lines.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Report { lines })
    }
}
