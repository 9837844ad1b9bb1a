//! Coded bit error rate of the full link.
//!
//! One codeword fills a block of `F` frames by `S` sub-bands. Transmit order:
//! convolutional code, random bit interleaver, Gray mapping, then a block
//! symbol interleaver (`F` rows) that sends consecutive symbols to different
//! frames, i.e. at least `L_t` OFDM symbols apart. Within a frame, symbol
//! `d * S + s` is data sequence `d` of sub-band `s`.
//!
//! Blocks are seeded independently of the Eb/No point (common random
//! numbers), so neighbouring points and the two CSI modes are compared on
//! identical channel, data and noise draws.
//!
//! The receiver estimates one coefficient per subset (or takes the true
//! subset average for the perfect-CSI baseline), equalizes, and demaps with
//! the estimate as if it were exact. The LLR noise level adds the expected
//! inter-code interference `P_avg (1 - sum R / L^2)` to the thermal noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ChannelKind, EqualizerKind, RunConfig, Scenario};
use super::mse::point_sigma_w2;
use super::output::SweepRecord;
use super::seeds::{run_seed, stream_seed};
use super::sim::{ChannelSampler, SubsetSimulator};
use crate::error::{Error, Result};
use crate::estimator::{
    equalize_despread, estimate_subset, subset_decorrelation, true_subset_average, Equalizer,
    SubsetObservation,
};
use crate::fec::{coded_len, conv_encode, viterbi_decode, Interleaver, TAIL_BITS};
use crate::precode::chip_demap;

/// Blocks simulated between two stopping checks; fixed so that the stopping
/// point does not depend on the thread count.
const WAVE: usize = 8;

const BIT_INTERLEAVER_TAG: u64 = 1;
// Point slot of the block streams; see `BerChain::simulate_point`.
const BLOCK_STREAM: u64 = 0;

/// Which channel coefficient the receiver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    Estimated,
    /// True subset average `(1/L) tr H`.
    Perfect,
}

impl Csi {
    pub fn series(self) -> &'static str {
        match self {
            Csi::Estimated => "estimated",
            Csi::Perfect => "perfect-csi",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitCount {
    pub errors: u64,
    pub bits: u64,
}

impl BitCount {
    pub fn ber(self) -> f64 {
        self.errors as f64 / self.bits as f64
    }
}

/// Transmitter and receiver for one run configuration.
pub struct BerChain {
    scenario: Scenario,
    sim: SubsetSimulator,
    sampler: ChannelSampler,
    offsets: Vec<usize>,
    frames: usize,
    bit_interleaver: Interleaver,
    symbol_interleaver: Interleaver,
    message_len: usize,
    /// Expected inter-code interference power per data sequence.
    interference: f64,
    equalizer: EqualizerKind,
}

impl BerChain {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let scenario = config.resolve()?;
        let pc = scenario.precode;
        let frames = config.frames_per_block;
        let per_frame = scenario.subbands * (pc.len() - 1);
        let coded = frames * per_frame * config.modulation.bits_per_symbol();
        if coded < coded_len(1) {
            return Err(Error::config("block too small for one coded bit"));
        }
        let message_len = coded / 2 - TAIL_BITS;
        let sim = SubsetSimulator::new(pc, config.modulation, config.pilot_mode)?;
        let decorrelation = match config.channel {
            ChannelKind::Fading => {
                subset_decorrelation(&pc, &scenario.cir, &scenario.doppler, config.n_fft)
            }
            ChannelKind::Identity => 0.0,
        };
        let avg_power = sim.powers().total_power() / pc.len() as f64;
        Ok(Self {
            sampler: ChannelSampler::new(config.channel, &scenario, frames),
            offsets: scenario.subband_offsets(),
            bit_interleaver: Interleaver::random(coded, run_seed(config.seed, BIT_INTERLEAVER_TAG)),
            symbol_interleaver: Interleaver::block(frames, per_frame),
            message_len,
            interference: avg_power * decorrelation,
            equalizer: config.equalizer,
            frames,
            sim,
            scenario,
        })
    }

    /// Information bits per block.
    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn symbol_interleaver(&self) -> &Interleaver {
        &self.symbol_interleaver
    }

    /// Transmits and decodes one block; returns bit errors among the message bits.
    pub fn simulate_block(&self, seed: u64, sigma_w2: f64, csi: Csi) -> BitCount {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modulation = self.sim.modulation();
        let pc = *self.sim.config();
        let (len, p) = (pc.len(), pc.pilot_index());
        let s_count = self.offsets.len();
        let per_frame = s_count * (len - 1);

        let message: Vec<u8> = (0..self.message_len)
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let coded = self.bit_interleaver.interleave(&conv_encode(&message));
        let symbols = modulation.map_symbols(&coded);
        let tx = self.symbol_interleaver.interleave(&symbols);
        let channel = self.sampler.block(&self.offsets, &mut rng);

        let data_power = self.sim.powers().power(if p == 0 { 1 } else { 0 });
        let disturbance = (sigma_w2 + self.interference) / data_power;
        let equalizer = match self.equalizer {
            EqualizerKind::ZeroForcing => Equalizer::ZeroForcing,
            EqualizerKind::Mmse => Equalizer::Mmse {
                noise_variance: disturbance,
            },
        };
        let sigma = sigma_w2.sqrt();
        let zero = Complex64::new(0.0, 0.0);
        let mut rx = vec![zero; tx.len()];
        let mut gain = vec![zero; tx.len()];
        let mut var = vec![1.0; tx.len()];
        let mut x = vec![zero; len];
        for m in 0..self.frames {
            for (s, grids) in channel.iter().enumerate() {
                let slot = |d: usize| m * per_frame + d * s_count + s;
                for (d, i) in (0..len).filter(|&i| i != p).enumerate() {
                    x[i] = tx[slot(d)];
                }
                x[p] = self.sim.draw_pilot(&mut rng);
                let w: Vec<Complex64> = (0..len)
                    .map(|_| crate::channel::fading::complex_gaussian(&mut rng) * sigma)
                    .collect();
                let h = &grids[m];
                let (z, _) = self.sim.receive(h, &x, &w);
                let h_hat = match csi {
                    Csi::Estimated => estimate_subset(
                        &SubsetObservation {
                            z: z.clone(),
                            pilot_symbol: x[p] * self.sim.powers().amplitude(p),
                        },
                        self.sim.code().column(p),
                    ),
                    Csi::Perfect => true_subset_average(&chip_demap(h, &pc)),
                };
                let out =
                    equalize_despread(&z, h_hat, self.sim.code(), self.sim.powers(), p, equalizer);
                let (g, v) = match equalizer.coefficient(h_hat) {
                    Some(c) => (c * h_hat, c.norm_sqr() * disturbance),
                    None => (zero, 1.0),
                };
                for (d, y) in out.into_iter().enumerate() {
                    let j = slot(d);
                    rx[j] = y;
                    gain[j] = g;
                    var[j] = v;
                }
            }
        }

        let rx = self.symbol_interleaver.deinterleave(&rx);
        let gain = self.symbol_interleaver.deinterleave(&gain);
        let var = self.symbol_interleaver.deinterleave(&var);
        let mut llrs = Vec::with_capacity(coded.len());
        for k in 0..rx.len() {
            modulation.demap_soft(&rx[k..=k], gain[k], var[k].max(1e-12), &mut llrs);
        }
        let decoded = viterbi_decode(&self.bit_interleaver.deinterleave(&llrs), self.message_len);
        let errors = decoded.iter().zip(&message).filter(|(a, b)| a != b).count();
        BitCount {
            errors: errors as u64,
            bits: self.message_len as u64,
        }
    }

    /// Simulates blocks until at least `min_blocks` blocks and
    /// `target_errors` errors have been seen, or `max_bits` bits counted.
    ///
    /// Block `b` has the same seed at every Eb/No point and for both CSI
    /// modes: the points of a sweep differ only in the noise scale.
    pub fn simulate_point(&self, config: &RunConfig, sigma_w2: f64, csi: Csi) -> BitCount {
        let mut total = BitCount::default();
        let mut next = 0usize;
        while total.bits < config.max_bits
            && (next < config.min_blocks || total.errors < config.target_errors)
        {
            let wave: Vec<BitCount> = (next..next + WAVE)
                .into_par_iter()
                .map(|b| self.simulate_block(block_seed(config.seed, b), sigma_w2, csi))
                .collect();
            for c in wave {
                total.errors += c.errors;
                total.bits += c.bits;
            }
            next += WAVE;
        }
        total
    }
}

/// Seed of block `b`, shared by every point of a sweep.
pub fn block_seed(master: u64, block: usize) -> u64 {
    stream_seed(master, BLOCK_STREAM, block as u64)
}

/// Runs the estimated-CSI series and, if configured, the perfect-CSI
/// baseline over the same blocks.
pub fn run_ber_sweep(
    config: &RunConfig,
    mut emit: impl FnMut(&SweepRecord) -> Result<()>,
) -> Result<Vec<SweepRecord>> {
    let chain = BerChain::new(config)?;
    let mut series = vec![Csi::Estimated];
    if config.perfect_csi_baseline {
        series.push(Csi::Perfect);
    }
    let mut records = Vec::new();
    for csi in series {
        for &ebno_db in &config.ebno_db {
            let sigma_w2 = point_sigma_w2(config, chain.scenario(), ebno_db);
            let count = chain.simulate_point(config, sigma_w2, csi);
            let record = SweepRecord {
                series: csi.series().into(),
                ebno_db,
                sigma_w2,
                mse_simulated: None,
                mse_analytical: None,
                si_floor: None,
                ber: Some(count.ber()),
                bit_errors: Some(count.errors),
                bits_counted: Some(count.bits),
                config_digest: chain.scenario().digest.clone(),
                seed: config.seed,
            };
            emit(&record)?;
            records.push(record);
        }
    }
    Ok(records)
}

fn series_points<'a>(records: &'a [SweepRecord], series: &str) -> Vec<&'a SweepRecord> {
    let mut pts: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.series == series && r.ber.is_some())
        .collect();
    pts.sort_by(|a, b| a.ebno_db.total_cmp(&b.ebno_db));
    pts
}

/// Eb/No at which `series` first crosses `target` BER, by linear
/// interpolation of `log10(BER)` in dB. A point without errors counts as
/// half an error.
pub fn ebno_at_ber(records: &[SweepRecord], series: &str, target: f64) -> Option<f64> {
    let log_ber = |r: &SweepRecord| {
        let bits = r.bits_counted.unwrap_or(1).max(1) as f64;
        r.ber.unwrap().max(0.5 / bits).log10()
    };
    let pts = series_points(records, series);
    let t = target.log10();
    for w in pts.windows(2) {
        let (a, b) = (log_ber(w[0]), log_ber(w[1]));
        if a >= t && b <= t {
            if a == b {
                return Some(w[0].ebno_db);
            }
            return Some(w[0].ebno_db + (a - t) / (a - b) * (w[1].ebno_db - w[0].ebno_db));
        }
    }
    None
}

/// True when no point's BER exceeds its predecessor's by more than the 95%
/// confidence half-width of their difference.
pub fn ber_monotone(records: &[SweepRecord], series: &str) -> bool {
    let se2 = |r: &SweepRecord| {
        let n = r.bits_counted.unwrap_or(1).max(1) as f64;
        let p = r.ber.unwrap().max(1.0 / n);
        p * (1.0 - p) / n
    };
    series_points(records, series).windows(2).all(|w| {
        let rise = w[1].ber.unwrap() - w[0].ber.unwrap();
        rise <= 1.96 * (se2(w[0]) + se2(w[1])).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::Modulation;

    fn identity(len: usize, modulation: Modulation) -> RunConfig {
        RunConfig {
            len,
            modulation,
            channel: ChannelKind::Identity,
            noise_variance: Some(0.0),
            frames_per_block: 2,
            data_subcarriers: 128,
            ..RunConfig::default()
        }
    }

    #[test]
    fn zero_noise_identity_chain_is_lossless() {
        for modulation in [Modulation::Qpsk, Modulation::Qam16] {
            for len in [16, 32, 64] {
                let chain = BerChain::new(&identity(len, modulation)).unwrap();
                for csi in [Csi::Estimated, Csi::Perfect] {
                    let c = chain.simulate_block(11, 0.0, csi);
                    assert_eq!(c.errors, 0, "{modulation:?} L={len} {csi:?}");
                    assert_eq!(c.bits, chain.message_len() as u64);
                }
            }
        }
    }

    #[test]
    fn adjacent_symbols_land_in_different_frames() {
        let chain = BerChain::new(&identity(16, Modulation::Qpsk)).unwrap();
        let il = chain.symbol_interleaver();
        let per_frame = il.len() / 2;
        let frame_of: Vec<usize> = {
            let mut f = vec![0; il.len()];
            for (j, &i) in il.permutation().iter().enumerate() {
                f[i] = j / per_frame;
            }
            f
        };
        assert!(frame_of.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn block_geometry() {
        let chain = BerChain::new(&identity(16, Modulation::Qam16)).unwrap();
        // 2 frames x 32 sub-bands x 15 symbols x 4 bits, rate 1/2, 6 tail bits.
        assert_eq!(chain.message_len(), 2 * 32 * 15 * 4 / 2 - 6);
    }

    #[test]
    fn blocks_are_reproducible() {
        let cfg = RunConfig {
            frames_per_block: 2,
            data_subcarriers: 256,
            ..RunConfig::default()
        };
        let chain = BerChain::new(&cfg).unwrap();
        let a = chain.simulate_block(5, 0.5, Csi::Estimated);
        let b = chain.simulate_block(5, 0.5, Csi::Estimated);
        assert_eq!(a, b);
        assert!(a.errors > 0);
    }

    fn rec(ebno: f64, errors: u64, bits: u64) -> SweepRecord {
        SweepRecord {
            series: "s".into(),
            ebno_db: ebno,
            sigma_w2: 0.0,
            mse_simulated: None,
            mse_analytical: None,
            si_floor: None,
            ber: Some(errors as f64 / bits as f64),
            bit_errors: Some(errors),
            bits_counted: Some(bits),
            config_digest: String::new(),
            seed: 0,
        }
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let recs = [rec(0.0, 100, 1000), rec(2.0, 1, 1000), rec(4.0, 0, 1000)];
        let x = ebno_at_ber(&recs, "s", 1e-2).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
        assert!(ebno_at_ber(&recs, "s", 0.5).is_none());
        assert!(ebno_at_ber(&recs, "other", 1e-2).is_none());
    }

    #[test]
    fn monotonicity_tolerates_noise_only() {
        let ok = [
            rec(0.0, 100, 10_000),
            rec(1.0, 104, 10_000),
            rec(2.0, 10, 10_000),
        ];
        assert!(ber_monotone(&ok, "s"));
        let bad = [rec(0.0, 100, 10_000), rec(1.0, 300, 10_000)];
        assert!(!ber_monotone(&bad, "s"));
    }
}
