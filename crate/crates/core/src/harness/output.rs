//! CSV and plot-data emission.
//!
//! Every file starts with comment lines carrying the config digest and the
//! full resolved configuration, then one header row. Floats use a fixed
//! `{:.6e}` format; missing values are empty fields.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const SWEEP_COLUMNS: [&str; 11] = [
    "series",
    "ebno_db",
    "sigma_w2",
    "mse_simulated",
    "mse_analytical",
    "si_floor",
    "ber",
    "bit_errors",
    "bits_counted",
    "config_digest",
    "seed",
];

/// One sweep point of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub series: String,
    pub ebno_db: f64,
    pub sigma_w2: f64,
    pub mse_simulated: Option<f64>,
    pub mse_analytical: Option<f64>,
    pub si_floor: Option<f64>,
    pub ber: Option<f64>,
    pub bit_errors: Option<u64>,
    pub bits_counted: Option<u64>,
    pub config_digest: String,
    pub seed: u64,
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.6e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn opt_int(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepRecord {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.series.clone(),
            fmt_float(self.ebno_db),
            fmt_float(self.sigma_w2),
            opt_float(self.mse_simulated),
            opt_float(self.mse_analytical),
            opt_float(self.si_floor),
            opt_float(self.ber),
            opt_int(self.bit_errors),
            opt_int(self.bits_counted),
            self.config_digest.clone(),
            self.seed.to_string(),
        ]
    }
}

/// Comment lines that precede every table.
pub fn preamble(config: &RunConfig) -> String {
    let mut out = format!(
        "# lpofdm {} {}\n# config_digest = {}\n",
        env!("CARGO_PKG_VERSION"),
        config.experiment.name(),
        config.digest()
    );
    for (k, v) in config.entries() {
        out.push_str(&format!("# cfg: {k} = {v}\n"));
    }
    out
}

/// Row-at-a-time CSV writer that flushes after every row, so an interrupted
/// sweep keeps every completed point.
pub struct CsvSink {
    out: Box<dyn Write>,
    path: PathBuf,
}

impl CsvSink {
    /// Writes to `path`, or to standard output when `path` is `None`.
    pub fn create(path: Option<&Path>, config: &RunConfig, columns: &[&str]) -> Result<Self> {
        let (out, path): (Box<dyn Write>, PathBuf) = match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| Error::io(p, e))?;
                (Box::new(BufWriter::new(file)), p.to_path_buf())
            }
            None => (Box::new(io::stdout()), PathBuf::from("<stdout>")),
        };
        let mut sink = Self { out, path };
        let text = format!("{}{}\n", preamble(config), columns.join(","));
        sink.write_flushed(&text)?;
        Ok(sink)
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        let line = format!("{}\n", fields.join(","));
        self.write_flushed(&line)
    }

    pub fn record(&mut self, record: &SweepRecord) -> Result<()> {
        self.row(&record.fields())
    }

    fn write_flushed(&mut self, text: &str) -> Result<()> {
        self.out
            .write_all(text.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes all records as one CSV file.
pub fn emit_csv(records: &[SweepRecord], config: &RunConfig, path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(Some(path), config, &SWEEP_COLUMNS)?;
    records.iter().try_for_each(|r| sink.record(r))
}

/// Gnuplot-style data: one block per series, blocks separated by two blank
/// lines so `index N` selects a series.
pub fn plotdata_text(records: &[SweepRecord], config: &RunConfig) -> String {
    let mut series: Vec<&str> = Vec::new();
    for r in records {
        if !series.contains(&r.series.as_str()) {
            series.push(&r.series);
        }
    }
    let dash = |x: Option<f64>| x.map_or_else(|| "-".to_string(), fmt_float);
    let mut out = preamble(config);
    for (i, name) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!(
            "# series {name}\n# ebno_db mse_simulated mse_analytical si_floor ber\n"
        ));
        for r in records.iter().filter(|r| r.series == *name) {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                fmt_float(r.ebno_db),
                dash(r.mse_simulated),
                dash(r.mse_analytical),
                dash(r.si_floor),
                dash(r.ber)
            ));
        }
    }
    out
}

pub fn emit_plotdata(records: &[SweepRecord], config: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, plotdata_text(records, config)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(series: &str, ebno: f64) -> SweepRecord {
        SweepRecord {
            series: series.into(),
            ebno_db: ebno,
            sigma_w2: 0.125,
            mse_simulated: Some(1.0 / 3.0),
            mse_analytical: None,
            si_floor: Some(0.0),
            ber: None,
            bit_errors: Some(12),
            bits_counted: None,
            config_digest: "abc".into(),
            seed: 9,
        }
    }

    #[test]
    fn row_format_is_fixed() {
        assert_eq!(
            record("mse", 5.0).fields().join(","),
            "mse,5.000000e0,1.250000e-1,3.333333e-1,,0.000000e0,,12,,abc,9"
        );
    }

    #[test]
    fn csv_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let cfg = RunConfig::default();
        emit_csv(&[record("a", 0.0), record("a", 1.0)], &cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], format!("# config_digest = {}", cfg.digest()));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], SWEEP_COLUMNS.join(","));
        assert_eq!(lines.len(), header + 3);
        // The file is itself a valid config.
        assert_eq!(RunConfig::parse(&text, &path).unwrap(), cfg);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = emit_csv(
            &[],
            &RunConfig::default(),
            Path::new("/nonexistent/dir/x.csv"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }

    #[test]
    fn plotdata_groups_series() {
        let text = plotdata_text(
            &[record("a", 0.0), record("b", 0.0), record("a", 1.0)],
            &RunConfig::default(),
        );
        let body = text.split("# series a\n").nth(1).unwrap();
        let (a, b) = body.split_once("\n\n\n# series b\n").unwrap();
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 2);
        assert_eq!(b.lines().filter(|l| !l.starts_with('#')).count(), 1);
    }
}
