//! Seeded experiments: MSE and BER sweeps, channel probes, bit-rate and
//! random-matrix tables, with CSV and plot-data output.
//!
//! Results depend only on the configuration and its seed. Monte-Carlo work
//! is split into batches with their own RNG streams
//! ([`seeds::stream_seed`]) and reduced in batch order, so output is
//! byte-identical for any thread count.

pub mod ber;
pub mod config;
pub mod mse;
pub mod output;
pub mod probe;
pub mod seeds;
pub mod sim;
pub mod tables;

use std::path::Path;

pub use ber::{ber_monotone, ebno_at_ber, run_ber_sweep, BerChain, BitCount, Csi};
pub use config::{ChannelKind, EqualizerKind, Experiment, RunConfig, Scenario};
pub use mse::{run_mse_sweep, MsePoint};
pub use output::{emit_csv, emit_plotdata, CsvSink, SweepRecord, SWEEP_COLUMNS};
pub use probe::{run_channel_probe, ProbeReport};
pub use tables::{bitrate_table, rm_table};

use crate::error::Result;

/// Runs `config.experiment`, writing CSV to `out` (standard output when
/// `None`) and, for sweeps, plot data to `plotdata`. The configuration is
/// validated before any file is created.
pub fn run(config: &RunConfig, out: Option<&Path>, plotdata: Option<&Path>) -> Result<()> {
    config.resolve()?;
    match config.experiment {
        Experiment::Mse | Experiment::Ber => {
            let mut sink = CsvSink::create(out, config, &SWEEP_COLUMNS)?;
            let emit = |r: &SweepRecord| sink.record(r);
            let records = if config.experiment == Experiment::Mse {
                run_mse_sweep(config, emit)?
            } else {
                run_ber_sweep(config, emit)?
            };
            if let Some(path) = plotdata {
                emit_plotdata(&records, config, path)?;
            }
        }
        Experiment::Probe => {
            let report = run_channel_probe(config)?;
            let mut sink = CsvSink::create(out, config, &probe::PROBE_COLUMNS)?;
            for row in &report.rows {
                sink.row(&row.fields())?;
            }
        }
        Experiment::Bitrate => {
            let rows = bitrate_table(config)?;
            let mut sink = CsvSink::create(out, config, &tables::BITRATE_COLUMNS)?;
            for row in &rows {
                sink.row(&row.fields())?;
            }
        }
        Experiment::RmCheck => {
            let rows = rm_table(config)?;
            let mut sink = CsvSink::create(out, config, &tables::RM_COLUMNS)?;
            for row in &rows {
                sink.row(&row.fields())?;
            }
        }
    }
    Ok(())
}
