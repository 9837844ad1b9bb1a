//! Spread-pilot channel estimation and its closed-form mean square error.
//!
//! The pilot rides on one Walsh-Hadamard sequence `c_p` of every subset.
//! De-precoding the received chips by `c_p` and dividing by the known pilot
//! symbol yields one coefficient per subset:
//!
//! ```text
//! H_hat = (1/L) tr(H) + SI + w'
//! ```
//!
//! where `SI` is data leaking onto the pilot sequence when the channel is not
//! flat over the subset, and `w'` is de-spread noise with variance
//! `sigma_w^2 / P_p`.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{autocorrelation, DopplerParams, SampledCir};
use crate::precode::{
    build_walsh_hadamard, deprecode_all, PowerMatrix, PrecodeConfig, PrecodeMatrix,
};

/// Received chips of one subset together with the pilot symbol
/// `x_p = sqrt(P_p) * x[p]` known to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetObservation {
    pub z: Vec<Complex64>,
    pub pilot_symbol: Complex64,
}

/// One estimate and the subset-average channel it targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub h_hat: Complex64,
    pub h_true_avg: Complex64,
    pub subset_id: (usize, usize),
}

impl EstimateRecord {
    pub fn error(&self) -> Complex64 {
        self.h_hat - self.h_true_avg
    }
}

/// MSE split into self-interference and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBreakdown {
    pub si_variance: f64,
    pub noise_variance: f64,
    pub total: f64,
}

/// How the pilot symbol is chosen per subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotMode {
    /// `1 + 0j` on every subset.
    #[default]
    Fixed,
    /// Unit-modulus symbol with uniformly random phase per subset.
    RandomPhase,
}

impl PilotMode {
    /// Pilot symbol `sqrt(P_p) * x[p]` for one subset.
    pub fn draw<R: Rng + ?Sized>(self, pilot_power: f64, rng: &mut R) -> Complex64 {
        let amp = pilot_power.sqrt();
        match self {
            PilotMode::Fixed => Complex64::new(amp, 0.0),
            PilotMode::RandomPhase => {
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(amp, phase)
            }
        }
    }
}

/// `H_hat = c_p^H z / x_p`.
pub fn estimate_subset(obs: &SubsetObservation, pilot_code: &[f64]) -> Complex64 {
    assert!(
        obs.pilot_symbol.norm() > 0.0,
        "pilot symbol must be non-zero"
    );
    assert_eq!(
        obs.z.len(),
        pilot_code.len(),
        "chip vector length must equal L"
    );
    let despread: Complex64 = pilot_code.iter().zip(&obs.z).map(|(&c, &z)| z * c).sum();
    despread / obs.pilot_symbol
}

/// `(1/L) tr(H)`: the channel averaged over the subset.
pub fn true_subset_average(h_diag: &[Complex64]) -> Complex64 {
    assert!(!h_diag.is_empty());
    h_diag.iter().sum::<Complex64>() / h_diag.len() as f64
}

/// Single-coefficient equalizer applied after de-spreading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Equalizer {
    #[default]
    ZeroForcing,
    /// `conj(h) / (|h|^2 + noise_variance)`.
    Mmse { noise_variance: f64 },
}

impl Equalizer {
    /// Equalizer coefficient for the subset gain `h_hat`; `None` when zero
    /// forcing meets a zero gain.
    pub fn coefficient(self, h_hat: Complex64) -> Option<Complex64> {
        let power = h_hat.norm_sqr();
        match self {
            Equalizer::ZeroForcing if power == 0.0 => None,
            Equalizer::ZeroForcing => Some(h_hat.conj() / power),
            Equalizer::Mmse { noise_variance } => {
                let denom = power + noise_variance;
                if denom == 0.0 {
                    None
                } else {
                    Some(h_hat.conj() / denom)
                }
            }
        }
    }
}

/// De-spreads every data sequence and equalizes with the single subset
/// coefficient: `x_i = (c_i^H z) g / sqrt(P_i)` for `i != p`, in increasing
/// `i`. A zero-forcing equalizer facing `h_hat = 0` erases the subset (all
/// outputs zero).
pub fn equalize_despread(
    z: &[Complex64],
    h_hat: Complex64,
    code: &PrecodeMatrix,
    powers: &PowerMatrix,
    pilot_index: usize,
    equalizer: Equalizer,
) -> Vec<Complex64> {
    let len = code.len();
    assert_eq!(z.len(), len, "chip vector length must equal L");
    assert_eq!(powers.len(), len, "power matrix size must equal L");
    assert!(pilot_index < len);
    let Some(g) = equalizer.coefficient(h_hat) else {
        return vec![Complex64::new(0.0, 0.0); len - 1];
    };
    deprecode_all(z, code)
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| i != pilot_index)
        .map(|(i, despread)| despread * g / powers.amplitude(i))
        .collect()
}

/// `sum_{n,n',q,q'} R(n - n', q - q')` over an `l_f x l_t` subset, reduced to
/// a lag sum weighted by the number of pairs at each lag.
pub fn lag_weighted_sum(
    l_f: usize,
    l_t: usize,
    mut corr: impl FnMut(i64, i64) -> Complex64,
) -> Complex64 {
    let (lf, lt) = (l_f as i64, l_t as i64);
    let mut sum = Complex64::new(0.0, 0.0);
    for dn in -(lf - 1)..lf {
        let wn = (lf - dn.abs()) as f64;
        for dq in -(lt - 1)..lt {
            let wq = (lt - dq.abs()) as f64;
            sum += corr(dn, dq) * (wn * wq);
        }
    }
    sum
}

/// `1 - (1/L^2) sum R_HH`: the fraction of channel power not captured by the
/// subset average. Zero for a channel that is flat over the subset.
pub fn subset_decorrelation(
    config: &PrecodeConfig,
    cir: &SampledCir,
    doppler: &DopplerParams,
    n_fft: usize,
) -> f64 {
    let sum = lag_weighted_sum(config.l_f(), config.l_t(), |dn, dq| {
        autocorrelation(dn, dq, cir, doppler, n_fft)
    });
    assert!(
        sum.im.abs() <= 1e-10 * sum.norm().max(1.0),
        "correlation sum is not real: {sum}"
    );
    let l = config.len() as f64;
    // Rounding can push a perfectly flat channel a hair below zero.
    (1.0 - sum.re / (l * l)).max(0.0)
}

/// Self-interference variance `E|SI|^2 = (P_u / P_p)(1 - (1/L^2) sum R_HH)`,
/// with `P_u` the data symbol power (mean over data sequences).
pub fn si_variance_analytical(
    config: &PrecodeConfig,
    cir: &SampledCir,
    doppler: &DopplerParams,
    n_fft: usize,
) -> f64 {
    config.data_power() / config.pilot_power() * subset_decorrelation(config, cir, doppler, n_fft)
}

/// Closed-form estimator MSE: SI variance plus `sigma_w^2 / P_p`.
pub fn mse_analytical(
    config: &PrecodeConfig,
    cir: &SampledCir,
    doppler: &DopplerParams,
    n_fft: usize,
    sigma_w2: f64,
) -> MseBreakdown {
    assert!(sigma_w2 >= 0.0, "noise variance must be non-negative");
    let si_variance = si_variance_analytical(config, cir, doppler, n_fft);
    let noise_variance = sigma_w2 / config.pilot_power();
    MseBreakdown {
        si_variance,
        noise_variance,
        total: si_variance + noise_variance,
    }
}

/// Normalized Frobenius distance `||C_u P_u' C_u^H - P_bar (I - c_p c_p^H)|| / L`,
/// averaged over `trials` draws of the data powers.
///
/// Data powers are drawn uniformly in `1 +- power_spread` and `P_bar` is their
/// mean. With `power_spread = 0` the identity is exact for any orthonormal code.
pub fn verify_rm_property<R: Rng + ?Sized>(
    order_n: u32,
    pilot_index: usize,
    power_spread: f64,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let code = build_walsh_hadamard(order_n).expect("valid order");
    let len = code.len();
    assert!(pilot_index < len);
    assert!(trials > 0);
    let pilot = code.column(pilot_index);
    let mut total = 0.0;
    for _ in 0..trials {
        let powers: Vec<f64> = (0..len)
            .map(|i| {
                if i == pilot_index {
                    0.0
                } else {
                    1.0 + power_spread * (2.0 * rng.random::<f64>() - 1.0)
                }
            })
            .collect();
        let mean = powers.iter().sum::<f64>() / (len - 1) as f64;
        let mut frob = 0.0;
        for a in 0..len {
            for b in 0..len {
                let lhs: f64 = (0..len)
                    .filter(|&i| i != pilot_index)
                    .map(|i| code.entry(a, i) * powers[i] * code.entry(b, i))
                    .sum();
                let ident = if a == b { 1.0 } else { 0.0 };
                let rhs = mean * (ident - pilot[a] * pilot[b]);
                frob += (lhs - rhs).powi(2);
            }
        }
        total += frob.sqrt() / len as f64;
    }
    total / trials as f64
}
