//! One precoded subset through the frequency-domain channel and the estimator.

use num_complex::Complex64;
use rand::Rng;

use super::config::{ChannelKind, Scenario};
use crate::channel::{fading::complex_gaussian, freq_response, FadingGenerator, SampledCir};
use crate::error::Result;
use crate::estimator::{estimate_subset, true_subset_average, PilotMode, SubsetObservation};
use crate::fec::Modulation;
use crate::precode::{
    allocate_powers, build_walsh_hadamard, chip_demap, chip_map, precode, ChipGrid, PowerMatrix,
    PrecodeConfig, PrecodeMatrix,
};

/// Transmit vector and receiver noise of one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetInputs {
    /// Unit-power symbols; entry `p` is the unit-modulus pilot.
    pub x: Vec<Complex64>,
    /// Noise per chip, chip-linear order.
    pub w: Vec<Complex64>,
}

/// What the estimator produced for one subset, with its error split.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetOutcome {
    pub z: Vec<Complex64>,
    pub h_hat: Complex64,
    pub h_avg: Complex64,
    /// Data leakage onto the pilot sequence.
    pub si: Complex64,
    /// De-spread noise `c_p^H w / x_p`.
    pub noise: Complex64,
}

#[derive(Debug, Clone)]
pub struct SubsetSimulator {
    config: PrecodeConfig,
    code: PrecodeMatrix,
    powers: PowerMatrix,
    modulation: Modulation,
    pilot_mode: PilotMode,
}

impl SubsetSimulator {
    pub fn new(
        config: PrecodeConfig,
        modulation: Modulation,
        pilot_mode: PilotMode,
    ) -> Result<Self> {
        Ok(Self {
            code: build_walsh_hadamard(config.order())?,
            powers: allocate_powers(&config)?,
            config,
            modulation,
            pilot_mode,
        })
    }

    pub fn config(&self) -> &PrecodeConfig {
        &self.config
    }

    pub fn code(&self) -> &PrecodeMatrix {
        &self.code
    }

    pub fn powers(&self) -> &PowerMatrix {
        &self.powers
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Unit-modulus pilot for one subset.
    pub fn draw_pilot<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.pilot_mode.draw(1.0, rng)
    }

    /// Random data, a pilot, and `CN(0, sigma_w2)` noise.
    pub fn draw_inputs<R: Rng + ?Sized>(&self, sigma_w2: f64, rng: &mut R) -> SubsetInputs {
        let len = self.config.len();
        let order = 1usize << self.modulation.bits_per_symbol();
        let mut x: Vec<Complex64> = (0..len)
            .map(|_| self.modulation.point(rng.random_range(0..order)))
            .collect();
        x[self.config.pilot_index()] = self.draw_pilot(rng);
        let sigma = sigma_w2.sqrt();
        let w = (0..len).map(|_| complex_gaussian(rng) * sigma).collect();
        SubsetInputs { x, w }
    }

    /// Precoded and chip-mapped transmit grid.
    pub fn transmit(&self, x: &[Complex64]) -> ChipGrid {
        chip_map(&precode(x, &self.powers, &self.code), &self.config)
    }

    /// Received chips `z = H y + w`, chip-linear order, and the noiseless part.
    pub fn receive(
        &self,
        h: &ChipGrid,
        x: &[Complex64],
        w: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut grid = self.transmit(x);
        grid.hadamard_mul(h);
        let clean = chip_demap(&grid, &self.config);
        let z = clean.iter().zip(w).map(|(a, b)| a + b).collect();
        (z, clean)
    }

    /// Runs the estimator on one subset.
    pub fn observe(&self, h: &ChipGrid, inputs: &SubsetInputs) -> SubsetOutcome {
        let p = self.config.pilot_index();
        let pilot_symbol = inputs.x[p] * self.powers.amplitude(p);
        let pilot_code = self.code.column(p);
        let (z, clean) = self.receive(h, &inputs.x, &inputs.w);
        let h_avg = true_subset_average(&chip_demap(h, &self.config));
        let clean_est = estimate_subset(
            &SubsetObservation {
                z: clean,
                pilot_symbol,
            },
            pilot_code,
        );
        let noise = estimate_subset(
            &SubsetObservation {
                z: inputs.w.clone(),
                pilot_symbol,
            },
            pilot_code,
        );
        let obs = SubsetObservation { z, pilot_symbol };
        let h_hat = estimate_subset(&obs, pilot_code);
        SubsetOutcome {
            z: obs.z,
            h_hat,
            h_avg,
            si: clean_est - h_avg,
            noise,
        }
    }
}

/// Draws channel grids for subsets.
#[derive(Debug, Clone)]
pub enum ChannelSampler {
    Fading {
        cir: SampledCir,
        generator: FadingGenerator,
        l_f: usize,
        l_t: usize,
    },
    Identity {
        l_f: usize,
        l_t: usize,
        frames: usize,
    },
}

impl ChannelSampler {
    /// Sampler for independent blocks of `frames` frames.
    pub fn new(kind: ChannelKind, scenario: &Scenario, frames: usize) -> Self {
        let (l_f, l_t) = (scenario.precode.l_f(), scenario.precode.l_t());
        match kind {
            ChannelKind::Fading => ChannelSampler::Fading {
                cir: scenario.cir.clone(),
                generator: FadingGenerator::new(&scenario.doppler, frames * l_t),
                l_f,
                l_t,
            },
            ChannelKind::Identity => ChannelSampler::Identity { l_f, l_t, frames },
        }
    }

    /// One independent realization on the given sub-bands: `grids[s][m]`.
    pub fn block<R: Rng + ?Sized>(&self, offsets: &[usize], rng: &mut R) -> Vec<Vec<ChipGrid>> {
        match self {
            ChannelSampler::Fading {
                cir,
                generator,
                l_f,
                l_t,
            } => {
                let gains = generator.generate(cir, rng);
                let frames = generator.num_symbols() / l_t;
                offsets
                    .iter()
                    .map(|&off| {
                        let resp = freq_response(&gains, cir.n_fft(), off, *l_f);
                        (0..frames).map(|m| resp.subset_grid(m, *l_t)).collect()
                    })
                    .collect()
            }
            ChannelSampler::Identity { l_f, l_t, frames } => {
                let mut ones = ChipGrid::zeros(*l_f, *l_t);
                for n in 0..*l_f {
                    for q in 0..*l_t {
                        ones.set(n, q, Complex64::new(1.0, 0.0));
                    }
                }
                offsets
                    .iter()
                    .map(|_| vec![ones.clone(); *frames])
                    .collect()
            }
        }
    }

    /// One independent single-frame subset at `offset`.
    pub fn subset<R: Rng + ?Sized>(&self, offset: usize, rng: &mut R) -> ChipGrid {
        self.block(&[offset], rng).swap_remove(0).swap_remove(0)
    }
}
