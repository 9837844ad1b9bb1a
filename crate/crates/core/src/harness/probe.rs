//! Empirical channel autocorrelation against the closed form.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::RunConfig;
use super::output::fmt_float;
use super::seeds::stream_rng;
use crate::channel::{autocorrelation, freq_response, FadingGenerator};
use crate::error::{Error, Result};

pub const PROBE_COLUMNS: [&str; 7] = [
    "dn",
    "dq",
    "empirical_re",
    "empirical_im",
    "analytic_re",
    "analytic_im",
    "abs_dev",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub dn: usize,
    pub dq: usize,
    pub empirical: Complex64,
    pub analytic: Complex64,
    pub abs_dev: f64,
}

impl ProbeRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.dn.to_string(),
            self.dq.to_string(),
            fmt_float(self.empirical.re),
            fmt_float(self.empirical.im),
            fmt_float(self.analytic.re),
            fmt_float(self.analytic.im),
            fmt_float(self.abs_dev),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub draws: usize,
    pub rows: Vec<ProbeRow>,
    pub max_abs_dev: f64,
}

/// Estimates `R_HH(dn, dq) = E{H[n, q] H*[n - dn, q - dq]}` for
/// `0 <= dn <= probe_max_dn`, `0 <= dq <= probe_max_dq` from `subsets`
/// independent patches, each averaged over every pair it contains. Patches
/// step across the populated band.
pub fn run_channel_probe(config: &RunConfig) -> Result<ProbeReport> {
    let scenario = config.resolve()?;
    let (width, span) = (config.probe_max_dn + 1, config.probe_max_dq + 1);
    if width > config.data_subcarriers {
        return Err(Error::config(
            "probe patch is wider than the populated band",
        ));
    }
    let positions = config.data_subcarriers - width + 1;
    let generator = FadingGenerator::new(&scenario.doppler, span);
    let n_fft = scenario.cir.n_fft();
    let cells = width * span;
    let batches = config.subsets.div_ceil(config.batch_size);
    let sums: Vec<Vec<Complex64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(config.seed, 0, b as u64);
            let mut acc = vec![Complex64::new(0.0, 0.0); cells];
            let start = b * config.batch_size;
            let end = (start + config.batch_size).min(config.subsets);
            for i in start..end {
                let offset = scenario.first_subcarrier + (i * width) % positions;
                let gains = generator.generate(&scenario.cir, &mut rng);
                let h = freq_response(&gains, n_fft, offset, width);
                for dn in 0..width {
                    for dq in 0..span {
                        let mut s = Complex64::new(0.0, 0.0);
                        for n in dn..width {
                            for q in dq..span {
                                s += h.get(n, q) * h.get(n - dn, q - dq).conj();
                            }
                        }
                        acc[dn * span + dq] += s / ((width - dn) * (span - dq)) as f64;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); cells];
    for batch in sums {
        for (t, v) in total.iter_mut().zip(batch) {
            *t += v;
        }
    }
    let rows: Vec<ProbeRow> = (0..cells)
        .map(|c| {
            let (dn, dq) = (c / span, c % span);
            let empirical = total[c] / config.subsets as f64;
            let analytic = autocorrelation(
                dn as i64,
                dq as i64,
                &scenario.cir,
                &scenario.doppler,
                n_fft,
            );
            ProbeRow {
                dn,
                dq,
                empirical,
                analytic,
                abs_dev: (empirical - analytic).norm(),
            }
        })
        .collect();
    let max_abs_dev = rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
    Ok(ProbeReport {
        draws: config.subsets,
        rows,
        max_abs_dev,
    })
}
