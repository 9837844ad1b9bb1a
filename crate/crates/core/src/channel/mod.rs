//! WSSUS tapped-delay-line channel on the OFDM sample grid.
//!
//! Tap powers are quantized to FFT samples ([`quantize_profile`]); each tap
//! fades independently with Jakes temporal correlation ([`fading`]); the
//! per-subcarrier response is the DFT of the tap gains ([`freq_response`]).
//! [`autocorrelation`] is the matching closed form, normalized so that
//! `R_HH(0, 0) = 1`.

pub mod fading;
mod profile;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use fading::{generate_tap_gains, FadingGenerator, TapGains};
pub use profile::{quantize_profile, SampledCir, TapProfile};

use crate::bessel::j0;
use crate::precode::ChipGrid;

/// DVB-T elementary sample rate for 8 MHz channels (64/7 MHz).
pub const DVBT_SAMPLE_RATE: f64 = 64.0e6 / 7.0;
/// 2K-mode FFT size.
pub const DVBT_N_FFT: usize = 2048;
/// 1/4 guard interval in samples.
pub const DVBT_GUARD: usize = 512;
/// Total OFDM symbol duration, `(2048 + 512) / (64/7 MHz) = 280 us`.
pub const DVBT_T_OFDM: f64 = (DVBT_N_FFT + DVBT_GUARD) as f64 / DVBT_SAMPLE_RATE;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler frequency and symbol duration; `beta = f_d * t_ofdm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerParams {
    f_d: f64,
    t_ofdm: f64,
    beta: f64,
}

impl DopplerParams {
    pub fn new(f_d: f64, t_ofdm: f64) -> Self {
        Self {
            f_d,
            t_ofdm,
            beta: f_d * t_ofdm,
        }
    }

    /// Doppler for a terminal moving at `speed_kmh` with carrier `carrier_hz`.
    pub fn from_speed(speed_kmh: f64, carrier_hz: f64, t_ofdm: f64) -> Self {
        Self::new(doppler_from_speed(speed_kmh, carrier_hz), t_ofdm)
    }

    /// Forces the normalized Doppler; `f_d` is back-derived for reporting.
    pub fn with_beta(beta: f64, t_ofdm: f64) -> Self {
        Self {
            f_d: beta / t_ofdm,
            t_ofdm,
            beta,
        }
    }

    pub fn f_d(&self) -> f64 {
        self.f_d
    }

    pub fn t_ofdm(&self) -> f64 {
        self.t_ofdm
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `J0(2 pi beta dq)`.
    pub fn time_correlation(&self, delta_q: i64) -> f64 {
        j0(2.0 * PI * self.beta * delta_q as f64)
    }
}

/// `f_d = v / c * f_c`.
pub fn doppler_from_speed(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 / SPEED_OF_LIGHT * carrier_hz
}

/// Frequency response of `l_f` consecutive subcarriers starting at
/// `subcarrier_offset`, for every symbol of the gain sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandResponse {
    l_f: usize,
    num_symbols: usize,
    // [q][n]
    values: Vec<Complex64>,
}

impl SubbandResponse {
    pub fn l_f(&self) -> usize {
        self.l_f
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    /// `H[n, q]`.
    pub fn get(&self, n: usize, q: usize) -> Complex64 {
        assert!(n < self.l_f && q < self.num_symbols);
        self.values[q * self.l_f + n]
    }

    /// Symbols `frame * l_t .. (frame + 1) * l_t` as a subset grid.
    pub fn subset_grid(&self, frame: usize, l_t: usize) -> ChipGrid {
        assert!(
            (frame + 1) * l_t <= self.num_symbols,
            "frame {frame} outside response"
        );
        let mut grid = ChipGrid::zeros(self.l_f, l_t);
        for q in 0..l_t {
            for n in 0..self.l_f {
                grid.set(n, q, self.get(n, frame * l_t + q));
            }
        }
        grid
    }
}

/// `H[n, q] = sum_k gamma_q[k] exp(-2j pi (offset + n) k / n_fft)`, summed
/// directly over the non-zero taps.
pub fn freq_response(
    gains: &TapGains,
    n_fft: usize,
    subcarrier_offset: usize,
    l_f: usize,
) -> SubbandResponse {
    assert!(
        subcarrier_offset + l_f <= n_fft,
        "subcarriers {subcarrier_offset}..{} exceed FFT size {n_fft}",
        subcarrier_offset + l_f
    );
    let num_symbols = gains.num_symbols();
    let phasors: Vec<Vec<Complex64>> = gains
        .tap_indices()
        .iter()
        .map(|&k| {
            (0..l_f)
                .map(|n| dft_phasor((subcarrier_offset + n) * k, n_fft))
                .collect()
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); num_symbols * l_f];
    for (tap, ph) in phasors.iter().enumerate() {
        let seq = gains.sequence(tap);
        for q in 0..num_symbols {
            let g = seq[q];
            let row = &mut values[q * l_f..(q + 1) * l_f];
            for (h, p) in row.iter_mut().zip(ph) {
                *h += g * p;
            }
        }
    }
    SubbandResponse {
        l_f,
        num_symbols,
        values,
    }
}

// exp(-2j pi m / n), with m reduced mod n first to keep the angle small.
fn dft_phasor(m: usize, n: usize) -> Complex64 {
    let angle = -2.0 * PI * (m % n) as f64 / n as f64;
    Complex64::from_polar(1.0, angle)
}

/// Closed-form `R_HH(dn, dq) = sum_k rho_k exp(-2j pi dn k / n_fft) J0(2 pi beta dq)`.
pub fn autocorrelation(
    delta_n: i64,
    delta_q: i64,
    cir: &SampledCir,
    doppler: &DopplerParams,
    n_fft: usize,
) -> Complex64 {
    let freq: Complex64 = cir
        .taps()
        .map(|(k, rho)| {
            let angle = -2.0 * PI * (delta_n as f64) * (k as f64) / n_fft as f64;
            Complex64::from_polar(rho, angle)
        })
        .sum();
    freq * doppler.time_correlation(delta_q)
}

/// Channel coefficients `H[m][s][n][q]` of a run: `frames` frames of `l_t`
/// symbols, one entry per configured sub-band.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    l_f: usize,
    l_t: usize,
    frames: usize,
    subband_offsets: Vec<usize>,
    // [s] -> response over frames * l_t symbols
    responses: Vec<SubbandResponse>,
    seed: u64,
}

impl ChannelRealization {
    /// Draws one continuous fading realization spanning `frames * l_t`
    /// symbols and evaluates it on every sub-band.
    pub fn generate(
        cir: &SampledCir,
        generator: &FadingGenerator,
        l_f: usize,
        l_t: usize,
        subband_offsets: &[usize],
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut realization =
            Self::generate_with(cir, generator, l_f, l_t, subband_offsets, &mut rng);
        realization.seed = seed;
        realization
    }

    pub fn generate_with<R: rand::Rng + ?Sized>(
        cir: &SampledCir,
        generator: &FadingGenerator,
        l_f: usize,
        l_t: usize,
        subband_offsets: &[usize],
        rng: &mut R,
    ) -> Self {
        assert_eq!(
            generator.num_symbols() % l_t,
            0,
            "generator length must be a whole number of frames"
        );
        let gains = generator.generate(cir, rng);
        let n_fft = cir.n_fft();
        let responses = subband_offsets
            .iter()
            .map(|&off| freq_response(&gains, n_fft, off, l_f))
            .collect();
        Self {
            l_f,
            l_t,
            frames: generator.num_symbols() / l_t,
            subband_offsets: subband_offsets.to_vec(),
            responses,
            seed: 0,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn l_f(&self) -> usize {
        self.l_f
    }

    pub fn l_t(&self) -> usize {
        self.l_t
    }

    pub fn subbands(&self) -> usize {
        self.responses.len()
    }

    pub fn subband_offsets(&self) -> &[usize] {
        &self.subband_offsets
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `H_{m,s}[n, q]`.
    pub fn get(&self, m: usize, s: usize, n: usize, q: usize) -> Complex64 {
        assert!(m < self.frames && q < self.l_t);
        self.responses[s].get(n, m * self.l_t + q)
    }

    /// Channel of subset `[m, s]` as a chip grid.
    pub fn subset(&self, m: usize, s: usize) -> ChipGrid {
        self.responses[s].subset_grid(m, self.l_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dvbt_symbol_duration() {
        assert!((DVBT_T_OFDM - 280e-6).abs() < 1e-15);
    }

    #[test]
    fn speeds_map_to_tabulated_dopplers() {
        let fast = doppler_from_speed(120.0, 500e6);
        let slow = doppler_from_speed(20.0, 500e6);
        assert!((fast - 55.6).abs() / 55.6 < 1e-3, "{fast}");
        // the tabulated 9.3 Hz is rounded to one decimal
        assert_eq!(format!("{slow:.1}"), "9.3");
        let d = DopplerParams::from_speed(120.0, 500e6, DVBT_T_OFDM);
        assert_eq!(d.beta(), d.f_d() * d.t_ofdm());
    }

    #[test]
    fn beta_override() {
        let d = DopplerParams::with_beta(0.018, 280e-6);
        assert_eq!(d.beta(), 0.018);
        assert!((d.f_d() - 64.2857).abs() < 1e-3);
    }

    fn single_tap_gains(k: usize, g: Complex64, n_symbols: usize) -> TapGains {
        TapGains::from_sequences(vec![k], vec![vec![g; n_symbols]])
    }

    #[test]
    fn zero_delay_tap_is_flat() {
        let g = Complex64::new(0.3, -0.8);
        let gains = single_tap_gains(0, g, 3);
        let h = freq_response(&gains, 64, 5, 8);
        for q in 0..3 {
            for n in 0..8 {
                assert!((h.get(n, q) - g).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_delay_tap_walks_unit_circle() {
        let gains = single_tap_gains(1, Complex64::new(1.0, 0.0), 1);
        let h = freq_response(&gains, 4, 0, 4);
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        for (n, w) in want.iter().enumerate() {
            assert!((h.get(n, 0) - w).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_special_cases() {
        let cir = quantize_profile(&TapProfile::tu6(), DVBT_N_FFT, DVBT_SAMPLE_RATE).unwrap();
        let d = DopplerParams::new(55.6, DVBT_T_OFDM);
        assert!((autocorrelation(0, 0, &cir, &d, DVBT_N_FFT) - 1.0).norm() < 1e-12);
        for dq in 0..10 {
            let r = autocorrelation(0, dq, &cir, &d, DVBT_N_FFT);
            assert!((r - d.time_correlation(dq)).norm() < 1e-12);
        }
        // Hermitian symmetry.
        let a = autocorrelation(3, 2, &cir, &d, DVBT_N_FFT);
        let b = autocorrelation(-3, -2, &cir, &d, DVBT_N_FFT);
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn subband_past_fft_window_panics() {
        let gains = single_tap_gains(0, Complex64::new(1.0, 0.0), 1);
        freq_response(&gains, 16, 12, 8);
    }
}
