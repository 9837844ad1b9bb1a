//! Walsh-Hadamard linear precoding and 2D chip mapping.
//!
//! A subset of `L = L_f * L_t` cells (adjacent subcarriers by consecutive
//! OFDM symbols) carries one precoded block `Y = C P x`, where `C` is an
//! orthonormal Walsh-Hadamard matrix and `P` a diagonal amplitude matrix.
//! Linear chip `k` of a block lands on subcarrier `k / L_t`, symbol `k % L_t`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported Walsh-Hadamard order (`L = 4096`).
pub const MAX_ORDER: u32 = 12;

/// How data symbol powers relate to the pilot power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    /// Every data symbol has unit power; the pilot adds on top.
    UnitData,
    /// Total power per subset is `L`; data symbols share what the pilot leaves.
    #[default]
    TotalNormalized,
}

impl PowerMode {
    pub fn name(self) -> &'static str {
        match self {
            PowerMode::UnitData => "unit-data",
            PowerMode::TotalNormalized => "total-normalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit-data" | "unit" => Some(PowerMode::UnitData),
            "total-normalized" | "total" => Some(PowerMode::TotalNormalized),
            _ => None,
        }
    }
}

/// Spreading geometry and power allocation of one precoded subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecodeConfig {
    order_n: u32,
    l_f: usize,
    l_t: usize,
    pilot_index: usize,
    pilot_power: f64,
    power_mode: PowerMode,
}

impl PrecodeConfig {
    /// Validates and builds a configuration.
    ///
    /// `L = 2^order_n` must equal `l_f * l_t`, the pilot index must address one
    /// of the `L` sequences, and the pilot power must be positive (and below
    /// `L` under [`PowerMode::TotalNormalized`], otherwise no power is left
    /// for data).
    pub fn new(
        order_n: u32,
        l_f: usize,
        l_t: usize,
        pilot_index: usize,
        pilot_power: f64,
        power_mode: PowerMode,
    ) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order_n) {
            return Err(Error::config(format!(
                "precoding order {order_n} outside 1..={MAX_ORDER}"
            )));
        }
        let len = 1usize << order_n;
        if l_f == 0 || l_t == 0 || l_f * l_t != len {
            return Err(Error::config(format!(
                "spreading factors L_f={l_f} x L_t={l_t} do not multiply to L={len}"
            )));
        }
        if pilot_index >= len {
            return Err(Error::config(format!(
                "pilot index {pilot_index} out of range for L={len}"
            )));
        }
        if !(pilot_power.is_finite() && pilot_power > 0.0) {
            return Err(Error::config(format!(
                "pilot power must be positive, got {pilot_power}"
            )));
        }
        if power_mode == PowerMode::TotalNormalized && pilot_power >= len as f64 {
            return Err(Error::config(format!(
                "pilot power {pilot_power} leaves no data power with total normalization at L={len}"
            )));
        }
        Ok(Self {
            order_n,
            l_f,
            l_t,
            pilot_index,
            pilot_power,
            power_mode,
        })
    }

    /// Convenience constructor from `L` and the frequency spreading factor.
    pub fn with_geometry(
        len: usize,
        l_f: usize,
        pilot_power: f64,
        power_mode: PowerMode,
    ) -> Result<Self> {
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::config(format!("L={len} is not a power of two >= 2")));
        }
        if l_f == 0 || !len.is_multiple_of(l_f) {
            return Err(Error::config(format!("L_f={l_f} does not divide L={len}")));
        }
        Self::new(
            len.trailing_zeros(),
            l_f,
            len / l_f,
            0,
            pilot_power,
            power_mode,
        )
    }

    pub fn order(&self) -> u32 {
        self.order_n
    }

    /// Spreading length `L`.
    pub fn len(&self) -> usize {
        1 << self.order_n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn l_f(&self) -> usize {
        self.l_f
    }

    pub fn l_t(&self) -> usize {
        self.l_t
    }

    pub fn pilot_index(&self) -> usize {
        self.pilot_index
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power
    }

    pub fn power_mode(&self) -> PowerMode {
        self.power_mode
    }

    pub fn with_pilot_index(mut self, pilot_index: usize) -> Result<Self> {
        if pilot_index >= self.len() {
            return Err(Error::config(format!(
                "pilot index {pilot_index} out of range for L={}",
                self.len()
            )));
        }
        self.pilot_index = pilot_index;
        Ok(self)
    }

    /// Power of each data symbol under the configured mode.
    pub fn data_power(&self) -> f64 {
        match self.power_mode {
            PowerMode::UnitData => 1.0,
            PowerMode::TotalNormalized => {
                let l = self.len() as f64;
                (l - self.pilot_power) / (l - 1.0)
            }
        }
    }
}

/// Orthonormal `L x L` Walsh-Hadamard matrix; column `i` is sequence `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeMatrix {
    len: usize,
    // column-major: entries[i * len + k] = c_i[k]
    entries: Vec<f64>,
}

impl PrecodeMatrix {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Chip `k` of sequence `i`.
    pub fn entry(&self, k: usize, i: usize) -> f64 {
        self.entries[i * self.len + k]
    }

    /// Sequence `c_i` in chip-linear order.
    pub fn column(&self, i: usize) -> &[f64] {
        assert!(
            i < self.len,
            "code index {i} out of range for L={}",
            self.len
        );
        &self.entries[i * self.len..(i + 1) * self.len]
    }
}

/// Builds the Sylvester Walsh-Hadamard matrix of size `2^order_n`, scaled by
/// `1/sqrt(L)`, in natural (Hadamard) column order.
pub fn build_walsh_hadamard(order_n: u32) -> Result<PrecodeMatrix> {
    if !(1..=MAX_ORDER).contains(&order_n) {
        return Err(Error::config(format!(
            "Walsh-Hadamard order {order_n} outside 1..={MAX_ORDER}"
        )));
    }
    let len = 1usize << order_n;
    // Unscaled +-1 recursion H_{2m} = [[H_m, H_m], [H_m, -H_m]], row-major.
    let mut signs = vec![1i8; 1];
    let mut size = 1;
    while size < len {
        let next = size * 2;
        let mut grown = vec![0i8; next * next];
        for r in 0..size {
            for c in 0..size {
                let v = signs[r * size + c];
                grown[r * next + c] = v;
                grown[r * next + c + size] = v;
                grown[(r + size) * next + c] = v;
                grown[(r + size) * next + c + size] = -v;
            }
        }
        signs = grown;
        size = next;
    }
    let scale = 1.0 / (len as f64).sqrt();
    let mut entries = vec![0.0; len * len];
    for k in 0..len {
        for i in 0..len {
            entries[i * len + k] = f64::from(signs[k * len + i]) * scale;
        }
    }
    Ok(PrecodeMatrix { len, entries })
}

/// Diagonal amplitude matrix `P = diag(sqrt(P_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    amplitudes: Vec<f64>,
}

impl PowerMatrix {
    /// Builds from per-symbol powers `P_i`; all must be strictly positive.
    pub fn from_powers(powers: &[f64]) -> Result<Self> {
        if let Some(bad) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::config(format!("symbol power {bad} is not positive")));
        }
        Ok(Self {
            amplitudes: powers.iter().map(|p| p.sqrt()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `sqrt(P_i)`.
    pub fn amplitude(&self, i: usize) -> f64 {
        self.amplitudes[i]
    }

    pub fn power(&self, i: usize) -> f64 {
        self.amplitudes[i] * self.amplitudes[i]
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn total_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

/// Power matrix for `config`: `P_p` on the pilot, data powers per mode.
pub fn allocate_powers(config: &PrecodeConfig) -> Result<PowerMatrix> {
    let data = config.data_power();
    if !(data > 0.0) {
        return Err(Error::config(format!(
            "data power {data} is not positive for pilot power {}",
            config.pilot_power()
        )));
    }
    let powers: Vec<f64> = (0..config.len())
        .map(|i| {
            if i == config.pilot_index() {
                config.pilot_power()
            } else {
                data
            }
        })
        .collect();
    PowerMatrix::from_powers(&powers)
}

/// The `L_f x L_t` chip array of one subset; `[n][q]` is subcarrier `n`,
/// OFDM symbol `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipGrid {
    l_f: usize,
    l_t: usize,
    chips: Vec<Complex64>,
}

impl ChipGrid {
    pub fn zeros(l_f: usize, l_t: usize) -> Self {
        Self {
            l_f,
            l_t,
            chips: vec![Complex64::new(0.0, 0.0); l_f * l_t],
        }
    }

    pub fn l_f(&self) -> usize {
        self.l_f
    }

    pub fn l_t(&self) -> usize {
        self.l_t
    }

    pub fn get(&self, n: usize, q: usize) -> Complex64 {
        assert!(n < self.l_f && q < self.l_t, "cell ({n}, {q}) outside grid");
        self.chips[n * self.l_t + q]
    }

    pub fn set(&mut self, n: usize, q: usize, v: Complex64) {
        assert!(n < self.l_f && q < self.l_t, "cell ({n}, {q}) outside grid");
        self.chips[n * self.l_t + q] = v;
    }

    /// Multiplies every cell by the matching cell of `other` (the
    /// diagonal channel acting on a subset).
    pub fn hadamard_mul(&mut self, other: &ChipGrid) {
        assert_eq!((self.l_f, self.l_t), (other.l_f, other.l_t));
        for (a, b) in self.chips.iter_mut().zip(&other.chips) {
            *a *= b;
        }
    }
}

/// Places chip `k` on subcarrier `k / L_t`, symbol `k % L_t`: the first
/// `L_t` chips run along time on subcarrier 0, the next `L_t` on subcarrier 1.
pub fn chip_map(chips: &[Complex64], config: &PrecodeConfig) -> ChipGrid {
    assert_eq!(chips.len(), config.len(), "chip vector length must equal L");
    let mut grid = ChipGrid::zeros(config.l_f(), config.l_t());
    for (k, &c) in chips.iter().enumerate() {
        grid.set(k / config.l_t(), k % config.l_t(), c);
    }
    grid
}

/// Inverse of [`chip_map`].
pub fn chip_demap(grid: &ChipGrid, config: &PrecodeConfig) -> Vec<Complex64> {
    assert_eq!(
        (grid.l_f(), grid.l_t()),
        (config.l_f(), config.l_t()),
        "grid dimensions do not match configuration"
    );
    (0..config.len())
        .map(|k| grid.get(k / config.l_t(), k % config.l_t()))
        .collect()
}

/// In-place unnormalized fast Walsh-Hadamard transform in Sylvester order:
/// `v <- H v` with `H[k][i] = (-1)^popcount(k & i)`.
pub fn fwht(v: &mut [Complex64]) {
    let len = v.len();
    assert!(len.is_power_of_two(), "length {len} is not a power of two");
    let mut h = 1;
    while h < len {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `Y = C P x`, via the fast transform.
pub fn precode(x: &[Complex64], powers: &PowerMatrix, code: &PrecodeMatrix) -> Vec<Complex64> {
    let len = code.len();
    assert_eq!(x.len(), len, "symbol vector length must equal L");
    assert_eq!(powers.len(), len, "power matrix size must equal L");
    let scale = 1.0 / (len as f64).sqrt();
    let mut y: Vec<Complex64> = x
        .iter()
        .zip(powers.amplitudes())
        .map(|(&xi, &a)| xi * (a * scale))
        .collect();
    fwht(&mut y);
    y
}

/// De-precodes `z` by sequence `code_index`: returns `c_i^H z`.
pub fn deprecode(z: &[Complex64], code_index: usize, code: &PrecodeMatrix) -> Complex64 {
    assert_eq!(z.len(), code.len(), "chip vector length must equal L");
    code.column(code_index)
        .iter()
        .zip(z)
        .map(|(&c, &zk)| zk * c)
        .sum()
}

/// `C^H z`: de-precoding by every sequence. `C` is real and symmetric, so
/// this is the same transform as [`precode`].
pub fn deprecode_all(z: &[Complex64], code: &PrecodeMatrix) -> Vec<Complex64> {
    assert_eq!(z.len(), code.len(), "chip vector length must equal L");
    let scale = 1.0 / (code.len() as f64).sqrt();
    let mut out: Vec<Complex64> = z.iter().map(|&v| v * scale).collect();
    fwht(&mut out);
    out
}
