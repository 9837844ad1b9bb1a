//! Deterministic tables: useful bit rates and the random-matrix check.

use super::config::{default_geometry, RunConfig};
use super::output::fmt_float;
use super::seeds::stream_rng;
use crate::error::{Error, Result};
use crate::estimator::verify_rm_property;
use crate::fec::{Modulation, CODE_RATE, TAIL_BITS};

pub const BITRATE_COLUMNS: [&str; 6] = [
    "L",
    "mod",
    "rate_bps",
    "ratio_to_first",
    "termination_factor",
    "terminated_rate_bps",
];

pub const RM_COLUMNS: [&str; 4] = ["L", "spread", "trials", "deviation"];

/// `data_subcarriers * bits * rate * (L - 1) / L / t_ofdm`.
pub fn useful_rate(
    data_subcarriers: usize,
    modulation: Modulation,
    code_rate: f64,
    len: usize,
    t_ofdm: f64,
) -> f64 {
    let l = len as f64;
    data_subcarriers as f64 * modulation.bits_per_symbol() as f64 * code_rate * (l - 1.0)
        / l
        / t_ofdm
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitrateRow {
    pub len: usize,
    pub modulation: Modulation,
    pub rate_bps: f64,
    /// Rate over the first length's rate, same modulation.
    pub ratio: f64,
    /// `K / (K + 6)` for one coded block of `frames_per_block` frames.
    pub termination_factor: f64,
}

impl BitrateRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.len.to_string(),
            self.modulation.name().into(),
            fmt_float(self.rate_bps),
            fmt_float(self.ratio),
            fmt_float(self.termination_factor),
            fmt_float(self.rate_bps * self.termination_factor),
        ]
    }
}

pub fn bitrate_table(config: &RunConfig) -> Result<Vec<BitrateRow>> {
    let scenario = config.resolve()?;
    let mut rows = Vec::new();
    for modulation in [Modulation::Qpsk, Modulation::Qam16] {
        let mut first = None;
        for &len in &config.bitrate_lengths {
            let l_f = if len == config.len {
                scenario.precode.l_f()
            } else {
                default_geometry(len)
                    .ok_or_else(|| Error::config(format!("no default geometry for L = {len}")))?
                    .0
            };
            if !config.data_subcarriers.is_multiple_of(l_f) {
                return Err(Error::config(format!("Lf = {l_f} does not tile the band")));
            }
            let rate = useful_rate(
                config.data_subcarriers,
                modulation,
                CODE_RATE,
                len,
                scenario.t_ofdm,
            );
            let base = *first.get_or_insert(rate);
            let coded = config.frames_per_block
                * (config.data_subcarriers / l_f)
                * (len - 1)
                * modulation.bits_per_symbol();
            let k = (coded / 2).saturating_sub(TAIL_BITS) as f64;
            rows.push(BitrateRow {
                len,
                modulation,
                rate_bps: rate,
                ratio: rate / base,
                termination_factor: k / (k + TAIL_BITS as f64),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmRow {
    pub len: usize,
    pub spread: f64,
    pub trials: usize,
    pub deviation: f64,
}

impl RmRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.len.to_string(),
            fmt_float(self.spread),
            self.trials.to_string(),
            fmt_float(self.deviation),
        ]
    }
}

/// Uniform powers, then `1 +- rm_spread`, for every length in `rm_lengths`.
pub fn rm_table(config: &RunConfig) -> Result<Vec<RmRow>> {
    config.resolve()?;
    let mut rows = Vec::new();
    for (idx, &len) in config.rm_lengths.iter().enumerate() {
        for (k, spread) in [0.0, config.rm_spread].into_iter().enumerate() {
            let mut rng = stream_rng(config.seed, idx as u64, k as u64);
            let order = len.trailing_zeros();
            rows.push(RmRow {
                len,
                spread,
                trials: config.rm_trials,
                deviation: verify_rm_property(
                    order,
                    config.pilot_index % len,
                    spread,
                    config.rm_trials,
                    &mut rng,
                ),
            });
        }
    }
    Ok(rows)
}
