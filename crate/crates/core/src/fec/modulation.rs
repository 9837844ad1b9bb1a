//! Gray-mapped QPSK and 16QAM with max-log soft demapping.
//!
//! Bit labels are MSB first. QPSK maps `(b0, b1)` to
//! `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`. 16QAM takes the in-phase level
//! from `(b0, b2)` and the quadrature level from `(b1, b3)`, each axis using
//! `(a, b) -> (1 - 2a)(3 - 2b)`, i.e. `00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3`,
//! scaled by `1 / sqrt(10)`.

use std::fmt::Write as _;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulation {
    #[default]
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Some(Modulation::Qpsk),
            "16qam" | "qam16" => Some(Modulation::Qam16),
            _ => None,
        }
    }

    /// Constellation point for the integer label (bit 0 = MSB).
    pub fn point(self, label: usize) -> Complex64 {
        match self {
            Modulation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let b0 = (label >> 1) & 1;
                let b1 = label & 1;
                Complex64::new(s * (1.0 - 2.0 * b0 as f64), s * (1.0 - 2.0 * b1 as f64))
            }
            Modulation::Qam16 => {
                let bit = |k: usize| ((label >> (3 - k)) & 1) as f64;
                let level = |a: f64, b: f64| (1.0 - 2.0 * a) * (3.0 - 2.0 * b);
                let s = 1.0 / 10f64.sqrt();
                Complex64::new(s * level(bit(0), bit(2)), s * level(bit(1), bit(3)))
            }
        }
    }

    pub fn constellation(self) -> Vec<Complex64> {
        (0..1 << self.bits_per_symbol())
            .map(|l| self.point(l))
            .collect()
    }

    /// Maps bits (0/1, MSB first per symbol) onto constellation points.
    pub fn map_symbols(self, bits: &[u8]) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        assert_eq!(bits.len() % bps, 0, "bit count must be a multiple of {bps}");
        bits.chunks_exact(bps)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
                self.point(label)
            })
            .collect()
    }

    /// Appends max-log LLRs (positive favours 0) for `symbols` observed as
    /// `gain * s + n` with `E|n|^2 = noise_var`.
    pub fn demap_soft(
        self,
        symbols: &[Complex64],
        gain: Complex64,
        noise_var: f64,
        llrs: &mut Vec<f64>,
    ) {
        let bps = self.bits_per_symbol();
        let points: Vec<Complex64> = self.constellation().into_iter().map(|p| p * gain).collect();
        let inv = 1.0 / noise_var.max(1e-300);
        let mut best0 = [f64::INFINITY; 4];
        let mut best1 = [f64::INFINITY; 4];
        for &y in symbols {
            best0[..bps].fill(f64::INFINITY);
            best1[..bps].fill(f64::INFINITY);
            for (label, p) in points.iter().enumerate() {
                let d = (y - p).norm_sqr();
                for k in 0..bps {
                    if (label >> (bps - 1 - k)) & 1 == 0 {
                        best0[k] = best0[k].min(d);
                    } else {
                        best1[k] = best1[k].min(d);
                    }
                }
            }
            for k in 0..bps {
                llrs.push((best1[k] - best0[k]) * inv);
            }
        }
    }

    /// `label re im` per line.
    pub fn to_text(self) -> String {
        let bps = self.bits_per_symbol();
        let mut out = String::new();
        for (label, p) in self.constellation().iter().enumerate() {
            let _ = writeln!(out, "{label:0bps$b} {:+.12} {:+.12}", p.re, p.im);
        }
        out
    }
}
