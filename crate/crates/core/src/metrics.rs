//! Metrics rows and the CSV sink.
//!
//! The schema is frozen: one row per episode, header below, floats printed
//! with 17 significant digits so they round-trip exactly. The wall-clock
//! column is last and is the only column excluded from determinism
//! comparisons.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CaraError, Result};
use crate::train::EpisodeMetrics;

/// Fixed CSV header.
pub const CSV_HEADER: &str = "episode,algo,seed,learning_rate,total_reward,mean_throughput_mbps,association_failures,collisions,wall_clock_s";

/// Formats a float with 17 significant digits (exact f64 round trip).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One metrics record as written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub algo: String,
    pub seed: u64,
    pub learning_rate: f64,
    pub total_reward: f64,
    pub mean_throughput_mbps: f64,
    pub association_failures: u64,
    pub collisions: u64,
    pub wall_clock_s: f64,
}

impl MetricsRow {
    pub fn new(algo: &str, seed: u64, learning_rate: f64, m: &EpisodeMetrics) -> Self {
        MetricsRow {
            episode: m.episode,
            algo: algo.to_string(),
            seed,
            learning_rate,
            total_reward: m.total_reward,
            mean_throughput_mbps: m.mean_throughput_mbps,
            association_failures: m.association_failures,
            collisions: m.collisions,
            wall_clock_s: m.wall_clock_s,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.6}",
            self.episode,
            self.algo,
            self.seed,
            format_float(self.learning_rate),
            format_float(self.total_reward),
            format_float(self.mean_throughput_mbps),
            self.association_failures,
            self.collisions,
            self.wall_clock_s,
        )
    }

    /// Parses one data row (tests and the resume comparison use this).
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = CSV_HEADER.split(',').count();
        if fields.len() != expected {
            return Err(CaraError::InvalidArgument(format!(
                "csv row has {} fields, expected {expected}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| CaraError::InvalidArgument(format!("bad csv float `{s}`")))
        };
        Ok(MetricsRow {
            episode: fields[0]
                .parse()
                .map_err(|_| CaraError::InvalidArgument(format!("bad episode `{}`", fields[0])))?,
            algo: fields[1].to_string(),
            seed: fields[2]
                .parse()
                .map_err(|_| CaraError::InvalidArgument(format!("bad seed `{}`", fields[2])))?,
            learning_rate: num(fields[3])?,
            total_reward: num(fields[4])?,
            mean_throughput_mbps: num(fields[5])?,
            association_failures: fields[6]
                .parse()
                .map_err(|_| CaraError::InvalidArgument(format!("bad count `{}`", fields[6])))?,
            collisions: fields[7]
                .parse()
                .map_err(|_| CaraError::InvalidArgument(format!("bad count `{}`", fields[7])))?,
            wall_clock_s: num(fields[8])?,
        })
    }
}

/// Streaming CSV writer; writes the header on creation and flushes per row,
/// so a crashing run still leaves complete rows behind.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write_row(&mut self, row: &MetricsRow) -> Result<()> {
        writeln!(self.out, "{}", row.to_csv())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Strips the wall-clock column from CSV text: the comparable prefix of
/// every line.
pub fn without_wall_clock(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| match l.rfind(',') {
            Some(pos) => &l[..pos],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [
            0.1 + 0.2,
            -1.234567890123456e-7,
            3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
        ] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn row_round_trips_through_csv() {
        let row = MetricsRow {
            episode: 12,
            algo: "maddpg".into(),
            seed: 3,
            learning_rate: 0.05,
            total_reward: -2.0000000000000004,
            mean_throughput_mbps: 123.45678901234567,
            association_failures: 7,
            collisions: 2,
            wall_clock_s: 0.25,
        };
        let line = row.to_csv();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        let parsed = MetricsRow::parse(&line).unwrap();
        assert_eq!(parsed.total_reward, row.total_reward);
        assert_eq!(parsed.mean_throughput_mbps, row.mean_throughput_mbps);
        assert_eq!(parsed.episode, row.episode);
    }

    #[test]
    fn wall_clock_stripping_keeps_the_rest() {
        let text = "a,b,c\n1,2,3\n";
        assert_eq!(without_wall_clock(text), "a,b\n1,2");
    }
}
