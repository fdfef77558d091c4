use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::ResultRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Csv => "results.csv",
            ReportFormat::Json => "results.json",
            ReportFormat::Plotdata => "results.dat",
        }
    }
}

/// CSV row: the record without its wall time, so reruns are byte-identical.
#[derive(Serialize)]
struct CsvRow<'a> {
    config_hash: &'a str,
    n: usize,
    delay_taps: usize,
    max_doppler: usize,
    p_delay: f64,
    p_doppler: f64,
    n_pilots: usize,
    snr_db: f64,
    mse: f64,
    support_rate: f64,
    overhead: usize,
    f_s_hz: f64,
    seed: u64,
    mse_per_entry: f64,
    mse_std_err: f64,
    mean_iterations: f64,
    trials: usize,
    failed_trials: usize,
}

impl<'a> From<&'a ResultRecord> for CsvRow<'a> {
    fn from(r: &'a ResultRecord) -> Self {
        Self {
            config_hash: &r.config_hash,
            n: r.n,
            delay_taps: r.delay_taps,
            max_doppler: r.max_doppler,
            p_delay: r.p_delay,
            p_doppler: r.p_doppler,
            n_pilots: r.n_pilots,
            snr_db: r.snr_db,
            mse: r.mse,
            support_rate: r.support_rate,
            overhead: r.overhead,
            f_s_hz: r.f_s_hz,
            seed: r.seed,
            mse_per_entry: r.mse_per_entry,
            mse_std_err: r.mse_std_err,
            mean_iterations: r.mean_iterations,
            trials: r.trials,
            failed_trials: r.failed_trials,
        }
    }
}

pub fn write_csv<W: Write>(records: &[ResultRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(CsvRow::from(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[ResultRecord], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    Ok(serde_json::from_reader(r)?)
}

/// One gnuplot data block per configuration (two blank lines apart), each
/// holding `snr_db mse` lines in sweep order.
pub fn write_plotdata<W: Write>(records: &[ResultRecord], mut w: W) -> Result<()> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.config_hash.as_str()) {
            order.push(&r.config_hash);
        }
    }
    for (b, hash) in order.iter().enumerate() {
        if b > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        let series: Vec<&ResultRecord> =
            records.iter().filter(|r| r.config_hash == *hash).collect();
        let h = series[0];
        writeln!(
            w,
            "# config {hash} N={} L={} Q={} p_d={} p_D={} N_p={}",
            h.n, h.delay_taps, h.max_doppler, h.p_delay, h.p_doppler, h.n_pilots
        )?;
        writeln!(w, "# snr_db mse")?;
        for r in series {
            writeln!(w, "{} {}", r.snr_db, r.mse)?;
        }
    }
    Ok(())
}

/// Writes `records` into `dir` (created if needed) and returns the file path.
pub fn emit_report(records: &[ResultRecord], format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::invalid("no records to report"));
    }
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format.file_name());
    let mut w = BufWriter::new(File::create(&path)?);
    match format {
        ReportFormat::Csv => write_csv(records, &mut w)?,
        ReportFormat::Json => write_json(records, &mut w)?,
        ReportFormat::Plotdata => write_plotdata(records, &mut w)?,
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(hash: &str, snr: f64) -> ResultRecord {
        ResultRecord {
            config_hash: hash.into(),
            n: 4096,
            delay_taps: 30,
            max_doppler: 7,
            p_delay: 0.2,
            p_doppler: 0.2,
            n_pilots: 16,
            snr_db: snr,
            mse: 1.5e-4 / (1.0 + snr),
            support_rate: 0.5,
            overhead: 537,
            f_s_hz: 3.515625e6,
            seed: 7,
            mse_per_entry: 1e-6,
            mse_std_err: 1e-5,
            mean_iterations: 3.25,
            trials: 100,
            failed_trials: 0,
            wall_time_s: 0.125,
        }
    }

    #[test]
    fn single_record_csv() {
        let mut buf = Vec::new();
        write_csv(&[record("abc", 20.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with(
            "config_hash,n,delay_taps,max_doppler,p_delay,p_doppler,n_pilots,snr_db,mse,support_rate,overhead,f_s_hz,seed,"
        ));
        assert!(!lines[0].contains("wall"));
        assert!(lines[1].starts_with("abc,4096,30,7,0.2,0.2,16,20.0,"));
    }

    #[test]
    fn json_round_trip() {
        let recs = vec![record("a", 0.0), record("b", 10.0)];
        let mut buf = Vec::new();
        write_json(&recs, &mut buf).unwrap();
        assert_eq!(read_json(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn plotdata_has_one_series_per_config() {
        let recs: Vec<ResultRecord> = ["x", "y"]
            .iter()
            .flat_map(|h| [0.0, 10.0, 20.0].map(|s| record(h, s)))
            .collect();
        let mut buf = Vec::new();
        write_plotdata(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let blocks: Vec<&str> = text.split("\n\n\n").collect();
        assert_eq!(blocks.len(), 2);
        for b in blocks {
            let points = b
                .lines()
                .filter(|l| !l.starts_with('#') && !l.is_empty())
                .count();
            assert_eq!(points, 3);
        }
    }

    #[test]
    fn emit_creates_files_and_rejects_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let p = emit_report(&[record("a", 1.0)], ReportFormat::Json, &out).unwrap();
        assert!(p.ends_with("results.json"));
        assert!(emit_report(&[], ReportFormat::Csv, &out).is_err());
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"").unwrap();
        assert!(emit_report(&[record("a", 1.0)], ReportFormat::Csv, &blocker).is_err());
    }
}
