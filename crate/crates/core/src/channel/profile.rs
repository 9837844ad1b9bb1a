//! Power-delay profiles and their quantization onto the FFT sample grid.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Tapped-delay-line profile: tap delays in microseconds and powers in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    name: String,
    delays_us: Vec<f64>,
    powers_db: Vec<f64>,
}

impl TapProfile {
    pub fn new(name: impl Into<String>, delays_us: Vec<f64>, powers_db: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if delays_us.is_empty() || delays_us.len() != powers_db.len() {
            return Err(Error::config(format!(
                "profile {name}: need matching non-empty delay and power lists ({} vs {})",
                delays_us.len(),
                powers_db.len()
            )));
        }
        if delays_us.iter().chain(&powers_db).any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "profile {name}: non-finite tap value"
            )));
        }
        if delays_us[0] < 0.0 {
            return Err(Error::config(format!("profile {name}: negative tap delay")));
        }
        if delays_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(format!(
                "profile {name}: tap delays must be strictly increasing"
            )));
        }
        Ok(Self {
            name,
            delays_us,
            powers_db,
        })
    }

    /// COST207 Typical Urban, 6 taps.
    pub fn tu6() -> Self {
        Self::new(
            "TU6",
            vec![0.0, 0.2, 0.5, 1.6, 2.3, 5.0],
            vec![-3.0, 0.0, -5.0, -6.0, -8.0, -10.0],
        )
        .expect("built-in profile is valid")
    }

    /// One tap at zero delay: a flat channel.
    pub fn single_tap() -> Self {
        Self::new("flat", vec![0.0], vec![0.0]).expect("built-in profile is valid")
    }

    /// Resolves a built-in profile by name (case-insensitive).
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tu6" => Some(Self::tu6()),
            "flat" | "single" => Some(Self::single_tap()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn delays_us(&self) -> &[f64] {
        &self.delays_us
    }

    pub fn powers_db(&self) -> &[f64] {
        &self.powers_db
    }

    pub fn max_delay_us(&self) -> f64 {
        *self.delays_us.last().expect("non-empty")
    }

    /// Parses the key-value profile format:
    ///
    /// ```text
    /// # comment
    /// name = TU6
    /// tap = 0.0, -3     # delay_us, power_db
    /// tap = 0.2, 0
    /// ```
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut name = None;
        let mut delays = Vec::new();
        let mut powers = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "tap" => {
                    let mut parts = value.split(',').map(str::trim);
                    let mut next = |what: &str| -> Result<f64> {
                        let field = parts
                            .next()
                            .ok_or_else(|| parse_err(format!("tap is missing {what}")))?;
                        field
                            .parse()
                            .map_err(|_| parse_err(format!("bad {what} {field:?}")))
                    };
                    delays.push(next("delay")?);
                    powers.push(next("power")?);
                    if parts.next().is_some() {
                        return Err(parse_err("tap takes exactly two values".into()));
                    }
                }
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            }
        }
        let name = name.unwrap_or_else(|| origin.display().to_string());
        Self::new(name, delays, powers)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Serializes to the format read by [`TapProfile::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("name = {}\n", self.name);
        for (d, p) in self.delays_us.iter().zip(&self.powers_db) {
            let _ = writeln!(out, "tap = {d}, {p}");
        }
        out
    }
}

/// Channel impulse response power on the FFT sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCir {
    rho: Vec<f64>,
    sample_period: f64,
}

impl SampledCir {
    /// Builds from explicit per-sample powers; they are normalized to sum to one.
    pub fn from_powers(rho: Vec<f64>, sample_period: f64) -> Result<Self> {
        if rho.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::config(
                "sample powers must be finite and non-negative",
            ));
        }
        let total: f64 = rho.iter().sum();
        if !(total > 0.0) {
            return Err(Error::config("impulse response has no power"));
        }
        Ok(Self {
            rho: rho.into_iter().map(|p| p / total).collect(),
            sample_period,
        })
    }

    /// `rho_k` for every sample `k` of the FFT window.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn n_fft(&self) -> usize {
        self.rho.len()
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// Non-zero samples as `(k, rho_k)`.
    pub fn taps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rho
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (k, *p))
    }

    /// Index of the last non-zero sample.
    pub fn max_delay_samples(&self) -> usize {
        self.taps().map(|(k, _)| k).last().unwrap_or(0)
    }
}

/// Rounds each tap delay to the nearest sample, converts dB to linear power,
/// sums colliding taps and normalizes the result to unit total power.
pub fn quantize_profile(
    profile: &TapProfile,
    n_fft: usize,
    sample_rate: f64,
) -> Result<SampledCir> {
    if !(sample_rate > 0.0) || n_fft == 0 {
        return Err(Error::config("sample rate and FFT size must be positive"));
    }
    let mut rho = vec![0.0; n_fft];
    for (&delay, &power_db) in profile.delays_us().iter().zip(profile.powers_db()) {
        let k = (delay * 1e-6 * sample_rate).round() as usize;
        if k >= n_fft {
            return Err(Error::config(format!(
                "tap at {delay} us falls at sample {k}, outside the {n_fft}-sample FFT window"
            )));
        }
        rho[k] += 10f64.powf(power_db / 10.0);
    }
    SampledCir::from_powers(rho, 1.0 / sample_rate)
}
