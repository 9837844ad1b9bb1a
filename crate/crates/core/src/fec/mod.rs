//! Bit-level transmit and receive chain: coding, interleaving, mapping and
//! the Eb/No to noise-variance accounting.

mod conv;
mod interleave;
mod modulation;

pub use conv::{
    coded_len, conv_encode, viterbi_decode, CodeConfig, CODE_RATE, CONSTRAINT_LENGTH, GENERATORS,
    TAIL_BITS,
};
pub use interleave::Interleaver;
pub use modulation::Modulation;

use crate::precode::PrecodeConfig;

/// Operating point of a sweep: Eb/No and the matching per-chip noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub ebno_db: f64,
    pub sigma_w2: f64,
}

/// Energy lost to the cyclic prefix: `(n_fft + guard) / n_fft`.
pub fn guard_factor(n_fft: usize, guard: usize) -> f64 {
    (n_fft + guard) as f64 / n_fft as f64
}

/// Noise variance per complex chip for a given Eb/No:
///
/// `sigma_w^2 = P_data * overhead / (rate * bits_per_symbol * 10^(EbNo/10))`
///
/// where `P_data` is the power of one data symbol under the configured power
/// mode and `overhead` is a multiplicative energy penalty (usually
/// [`guard_factor`]; pass 1 to ignore the guard interval).
pub fn ebno_to_sigma(
    ebno_db: f64,
    modulation: Modulation,
    code_rate: f64,
    config: &PrecodeConfig,
    overhead: f64,
) -> f64 {
    assert!(ebno_db.is_finite(), "Eb/No must be finite");
    let ebno = 10f64.powf(ebno_db / 10.0);
    config.data_power() * overhead / (code_rate * modulation.bits_per_symbol() as f64 * ebno)
}

impl NoiseConfig {
    pub fn new(
        ebno_db: f64,
        modulation: Modulation,
        code_rate: f64,
        config: &PrecodeConfig,
        overhead: f64,
    ) -> Self {
        Self {
            ebno_db,
            sigma_w2: ebno_to_sigma(ebno_db, modulation, code_rate, config, overhead),
        }
    }
}
