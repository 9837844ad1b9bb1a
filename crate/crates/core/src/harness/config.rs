//! Run configuration: a flat `key = value` text format shared by config files,
//! CSV headers and command-line overrides.
//!
//! ```text
//! # TU6 at 120 km/h, 8x8 subsets
//! L = 64
//! Lf = 8
//! speed = 120
//! ebno = 5:30:5
//! ```
//!
//! Unknown keys are errors. Every emitted CSV repeats the resolved
//! configuration as `# cfg: key = value` lines, and [`RunConfig::parse`]
//! accepts such a file directly, so an output can be re-run as its own config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::channel::{
    quantize_profile, DopplerParams, SampledCir, TapProfile, DVBT_GUARD, DVBT_N_FFT,
    DVBT_SAMPLE_RATE,
};
use crate::error::{Error, Result};
use crate::estimator::PilotMode;
use crate::fec::{guard_factor, Modulation};
use crate::precode::{PowerMode, PrecodeConfig};

const CFG_PREFIX: &str = "# cfg:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Experiment {
    #[default]
    Mse,
    Ber,
    Probe,
    Bitrate,
    RmCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mse => "mse",
            Experiment::Ber => "ber",
            Experiment::Probe => "probe",
            Experiment::Bitrate => "bitrate",
            Experiment::RmCheck => "rmcheck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mse" => Some(Experiment::Mse),
            "ber" => Some(Experiment::Ber),
            "probe" => Some(Experiment::Probe),
            "bitrate" => Some(Experiment::Bitrate),
            "rmcheck" => Some(Experiment::RmCheck),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EqualizerKind {
    #[default]
    ZeroForcing,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelKind {
    #[default]
    Fading,
    /// `H = 1` everywhere; isolates the bit chain.
    Identity,
}

/// Every knob of a run. Fields are public; [`RunConfig::resolve`] validates
/// them and builds the derived objects.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub len: usize,
    /// `None` picks the default geometry for `len`.
    pub l_f: Option<usize>,
    pub l_t: Option<usize>,
    pub pilot_power: f64,
    pub pilot_index: usize,
    pub power_mode: PowerMode,
    pub modulation: Modulation,
    /// Built-in profile name or path to a profile file.
    pub profile: String,
    pub speed_kmh: f64,
    /// Explicit Doppler; overrides `speed_kmh`.
    pub f_d: Option<f64>,
    /// Explicit normalized Doppler; overrides both of the above.
    pub beta_override: Option<f64>,
    pub carrier_hz: f64,
    pub n_fft: usize,
    pub guard: usize,
    pub sample_rate: f64,
    pub data_subcarriers: usize,
    pub ebno_db: Vec<f64>,
    /// Subsets per point (MSE) or channel draws (probe).
    pub subsets: usize,
    pub batch_size: usize,
    pub target_errors: u64,
    pub max_bits: u64,
    /// Blocks simulated per BER point before `target_errors` may stop it;
    /// errors within one block share a channel draw.
    pub min_blocks: usize,
    pub frames_per_block: usize,
    pub equalizer: EqualizerKind,
    pub pilot_mode: PilotMode,
    pub perfect_csi_baseline: bool,
    /// Charge the guard-interval energy to Eb/No.
    pub gi_in_ebno: bool,
    /// Fixed noise variance replacing the Eb/No-derived one.
    pub noise_variance: Option<f64>,
    pub channel: ChannelKind,
    pub probe_max_dn: usize,
    pub probe_max_dq: usize,
    pub rm_lengths: Vec<usize>,
    pub rm_spread: f64,
    pub rm_trials: usize,
    pub bitrate_lengths: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Mse,
            seed: 1,
            len: 16,
            l_f: None,
            l_t: None,
            pilot_power: 7.0,
            pilot_index: 0,
            power_mode: PowerMode::TotalNormalized,
            modulation: Modulation::Qpsk,
            profile: "TU6".into(),
            speed_kmh: 120.0,
            f_d: None,
            beta_override: None,
            carrier_hz: 500e6,
            n_fft: DVBT_N_FFT,
            guard: DVBT_GUARD,
            sample_rate: DVBT_SAMPLE_RATE,
            data_subcarriers: 1536,
            ebno_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            subsets: 100_000,
            batch_size: 1000,
            target_errors: 200,
            max_bits: 20_000_000,
            min_blocks: 32,
            frames_per_block: 10,
            equalizer: EqualizerKind::ZeroForcing,
            pilot_mode: PilotMode::Fixed,
            perfect_csi_baseline: false,
            gi_in_ebno: true,
            noise_variance: None,
            channel: ChannelKind::Fading,
            probe_max_dn: 8,
            probe_max_dq: 8,
            rm_lengths: vec![4, 16, 64],
            rm_spread: 0.2,
            rm_trials: 100,
            bitrate_lengths: vec![16, 32, 64],
        }
    }
}

/// `(L_f, L_t)` used when only `L` is given.
pub fn default_geometry(len: usize) -> Option<(usize, usize)> {
    match len {
        16 => Some((4, 4)),
        32 => Some((8, 4)),
        64 => Some((8, 8)),
        _ => None,
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_ebno_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let s = s.trim();
    let parse = |v: &str| -> std::result::Result<f64, String> {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad Eb/No value {v:?}"))
    };
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
        if !(step > 0.0) || b < a {
            return Err(format!("empty Eb/No range {s:?}"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        // Recompute each point from the start to avoid accumulated drift.
        (0..count).map(|i| a + step * i as f64).collect()
    } else {
        s.split(',')
            .map(parse)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty Eb/No grid".into());
    }
    Ok(grid)
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "auto".to_string(), ToString::to_string)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        fn real(key: &str, v: &str) -> std::result::Result<f64, String> {
            let x: f64 = num(key, v)?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("{key}: value must be finite"))
            }
        }
        fn opt<T>(
            v: &str,
            f: impl FnOnce(&str) -> std::result::Result<T, String>,
        ) -> std::result::Result<Option<T>, String> {
            if v == "auto" || v == "none" {
                Ok(None)
            } else {
                f(v).map(Some)
            }
        }
        fn flag(key: &str, v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("{key}: expected true or false, got {v:?}")),
            }
        }
        fn list(key: &str, v: &str) -> std::result::Result<Vec<usize>, String> {
            v.split(',').map(|x| num(key, x.trim())).collect()
        }
        let v = value.trim();
        match key {
            "experiment" => {
                self.experiment =
                    Experiment::parse(v).ok_or_else(|| format!("unknown experiment {v:?}"))?
            }
            "seed" => self.seed = num(key, v)?,
            "L" => self.len = num(key, v)?,
            "Lf" => self.l_f = opt(v, |v| num(key, v))?,
            "Lt" => self.l_t = opt(v, |v| num(key, v))?,
            "Pp" => self.pilot_power = real(key, v)?,
            "pilot_index" => self.pilot_index = num(key, v)?,
            "power_mode" => {
                self.power_mode =
                    PowerMode::parse(v).ok_or_else(|| format!("unknown power mode {v:?}"))?
            }
            "mod" => {
                self.modulation =
                    Modulation::parse(v).ok_or_else(|| format!("unknown modulation {v:?}"))?
            }
            "profile" => self.profile = v.to_string(),
            "speed" => self.speed_kmh = real(key, v)?,
            "f_d" => self.f_d = opt(v, |v| real(key, v))?,
            "beta_override" => self.beta_override = opt(v, |v| real(key, v))?,
            "carrier" => self.carrier_hz = real(key, v)?,
            "n_fft" => self.n_fft = num(key, v)?,
            "guard" => self.guard = num(key, v)?,
            "sample_rate" => self.sample_rate = real(key, v)?,
            "data_subcarriers" => self.data_subcarriers = num(key, v)?,
            "ebno" => self.ebno_db = parse_ebno_grid(v)?,
            "subsets" => self.subsets = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "target_errors" => self.target_errors = num(key, v)?,
            "max_bits" => self.max_bits = real(key, v)? as u64,
            "min_blocks" => self.min_blocks = num(key, v)?,
            "frames_per_block" => self.frames_per_block = num(key, v)?,
            "equalizer" => {
                self.equalizer = match v {
                    "zf" => EqualizerKind::ZeroForcing,
                    "mmse" => EqualizerKind::Mmse,
                    _ => return Err(format!("unknown equalizer {v:?}")),
                }
            }
            "pilot_mode" => {
                self.pilot_mode = match v {
                    "fixed" => PilotMode::Fixed,
                    "random" => PilotMode::RandomPhase,
                    _ => return Err(format!("unknown pilot mode {v:?}")),
                }
            }
            "baseline" => {
                self.perfect_csi_baseline = match v {
                    "perfect-csi" => true,
                    "none" => false,
                    _ => return Err(format!("unknown baseline {v:?}")),
                }
            }
            "gi_in_ebno" => self.gi_in_ebno = flag(key, v)?,
            "noise_variance" => self.noise_variance = opt(v, |v| real(key, v))?,
            "channel" => {
                self.channel = match v {
                    "fading" => ChannelKind::Fading,
                    "identity" => ChannelKind::Identity,
                    _ => return Err(format!("unknown channel {v:?}")),
                }
            }
            "probe_max_dn" => self.probe_max_dn = num(key, v)?,
            "probe_max_dq" => self.probe_max_dq = num(key, v)?,
            "rm_lengths" => self.rm_lengths = list(key, v)?,
            "rm_spread" => self.rm_spread = real(key, v)?,
            "rm_trials" => self.rm_trials = num(key, v)?,
            "bitrate_lengths" => self.bitrate_lengths = list(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. If the text contains
    /// `# cfg:` lines (a CSV written by this crate), only those are read.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let embedded = text.lines().any(|l| l.starts_with(CFG_PREFIX));
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = if embedded {
                match raw.strip_prefix(CFG_PREFIX) {
                    Some(rest) => rest,
                    None => continue,
                }
            } else {
                raw.split('#').next().unwrap_or("")
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            cfg.set(key.trim(), value).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// All settings in a fixed order, formatted so that [`RunConfig::set`]
    /// reads them back exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let eq = match self.equalizer {
            EqualizerKind::ZeroForcing => "zf",
            EqualizerKind::Mmse => "mmse",
        };
        let pilot = match self.pilot_mode {
            PilotMode::Fixed => "fixed",
            PilotMode::RandomPhase => "random",
        };
        let channel = match self.channel {
            ChannelKind::Fading => "fading",
            ChannelKind::Identity => "identity",
        };
        vec![
            ("experiment", self.experiment.name().into()),
            ("seed", self.seed.to_string()),
            ("L", self.len.to_string()),
            ("Lf", fmt_opt(&self.l_f)),
            ("Lt", fmt_opt(&self.l_t)),
            ("Pp", self.pilot_power.to_string()),
            ("pilot_index", self.pilot_index.to_string()),
            ("power_mode", self.power_mode.name().into()),
            ("mod", self.modulation.name().into()),
            ("profile", self.profile.clone()),
            ("speed", self.speed_kmh.to_string()),
            ("f_d", fmt_opt(&self.f_d)),
            ("beta_override", fmt_opt(&self.beta_override)),
            ("carrier", self.carrier_hz.to_string()),
            ("n_fft", self.n_fft.to_string()),
            ("guard", self.guard.to_string()),
            ("sample_rate", self.sample_rate.to_string()),
            ("data_subcarriers", self.data_subcarriers.to_string()),
            ("ebno", fmt_list(&self.ebno_db)),
            ("subsets", self.subsets.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("target_errors", self.target_errors.to_string()),
            ("max_bits", self.max_bits.to_string()),
            ("min_blocks", self.min_blocks.to_string()),
            ("frames_per_block", self.frames_per_block.to_string()),
            ("equalizer", eq.into()),
            ("pilot_mode", pilot.into()),
            (
                "baseline",
                if self.perfect_csi_baseline {
                    "perfect-csi"
                } else {
                    "none"
                }
                .into(),
            ),
            ("gi_in_ebno", self.gi_in_ebno.to_string()),
            ("noise_variance", fmt_opt(&self.noise_variance)),
            ("channel", channel.into()),
            ("probe_max_dn", self.probe_max_dn.to_string()),
            ("probe_max_dq", self.probe_max_dq.to_string()),
            ("rm_lengths", fmt_list(&self.rm_lengths)),
            ("rm_spread", self.rm_spread.to_string()),
            ("rm_trials", self.rm_trials.to_string()),
            ("bitrate_lengths", fmt_list(&self.bitrate_lengths)),
        ]
    }

    /// Canonical `key = value` text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hash.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Validates everything and builds the derived objects.
    pub fn resolve(&self) -> Result<Scenario> {
        let (l_f, l_t) = match (self.l_f, self.l_t) {
            (Some(f), Some(t)) => (f, t),
            (Some(f), None) if f > 0 && self.len.is_multiple_of(f) => (f, self.len / f),
            (None, Some(t)) if t > 0 && self.len.is_multiple_of(t) => (self.len / t, t),
            (None, None) => default_geometry(self.len).ok_or_else(|| {
                Error::config(format!(
                    "L = {} has no default geometry; give Lf or Lt",
                    self.len
                ))
            })?,
            _ => {
                return Err(Error::config(format!(
                    "spreading lengths do not divide L = {}",
                    self.len
                )))
            }
        };
        let precode =
            PrecodeConfig::with_geometry(self.len, l_f, self.pilot_power, self.power_mode)?
                .with_pilot_index(self.pilot_index)?;
        if precode.l_t() != l_t {
            return Err(Error::config(format!(
                "Lf = {l_f} and Lt = {l_t} do not multiply to L = {}",
                self.len
            )));
        }
        if self.n_fft == 0 || !(self.sample_rate > 0.0) {
            return Err(Error::config("FFT size and sample rate must be positive"));
        }
        let profile = match TapProfile::builtin(&self.profile) {
            Some(p) => p,
            None => TapProfile::load(&PathBuf::from(&self.profile))?,
        };
        let cir = quantize_profile(&profile, self.n_fft, self.sample_rate)?;
        if cir.max_delay_samples() > self.guard {
            return Err(Error::config(format!(
                "guard interval of {} samples is shorter than the channel ({} samples)",
                self.guard,
                cir.max_delay_samples()
            )));
        }
        let t_ofdm = (self.n_fft + self.guard) as f64 / self.sample_rate;
        let doppler = match (self.beta_override, self.f_d) {
            (Some(beta), _) => DopplerParams::with_beta(beta, t_ofdm),
            (None, Some(f_d)) => DopplerParams::new(f_d, t_ofdm),
            (None, None) => DopplerParams::from_speed(self.speed_kmh, self.carrier_hz, t_ofdm),
        };
        if !(doppler.beta() >= 0.0 && doppler.beta().is_finite()) {
            return Err(Error::config("Doppler must be finite and non-negative"));
        }
        if self.data_subcarriers == 0
            || self.data_subcarriers > self.n_fft
            || !self.data_subcarriers.is_multiple_of(l_f)
        {
            return Err(Error::config(format!(
                "{} data subcarriers cannot be tiled by Lf = {l_f} within {} subcarriers",
                self.data_subcarriers, self.n_fft
            )));
        }
        match self.experiment {
            Experiment::Mse | Experiment::Ber if self.ebno_db.is_empty() => {
                return Err(Error::config("empty Eb/No grid"))
            }
            Experiment::Mse | Experiment::Probe if self.subsets == 0 => {
                return Err(Error::config("subsets must be positive"))
            }
            Experiment::Ber if self.max_bits == 0 || self.frames_per_block == 0 => {
                return Err(Error::config(
                    "bit budget and frames per block must be positive",
                ))
            }
            Experiment::RmCheck if self.rm_trials == 0 => {
                return Err(Error::config("rm_trials must be positive"))
            }
            _ => {}
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if self.noise_variance.is_some_and(|v| v < 0.0) {
            return Err(Error::config("noise variance must be non-negative"));
        }
        for &len in self.rm_lengths.iter().chain(&self.bitrate_lengths) {
            if len < 2 || !len.is_power_of_two() {
                return Err(Error::config(format!("length {len} is not a power of two")));
            }
        }
        Ok(Scenario {
            precode,
            cir,
            doppler,
            overhead: if self.gi_in_ebno {
                guard_factor(self.n_fft, self.guard)
            } else {
                1.0
            },
            t_ofdm,
            first_subcarrier: (self.n_fft - self.data_subcarriers) / 2,
            subbands: self.data_subcarriers / l_f,
            digest: self.digest(),
        })
    }
}

/// Validated, derived view of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub precode: PrecodeConfig,
    pub cir: SampledCir,
    pub doppler: DopplerParams,
    /// Energy overhead charged to Eb/No.
    pub overhead: f64,
    pub t_ofdm: f64,
    /// Index of the lowest data subcarrier; the populated band is centred.
    pub first_subcarrier: usize,
    /// Sub-bands `S` per OFDM symbol.
    pub subbands: usize,
    pub digest: String,
}

impl Scenario {
    pub fn subband_offset(&self, s: usize) -> usize {
        self.first_subcarrier + s * self.precode.l_f()
    }

    pub fn subband_offsets(&self) -> Vec<usize> {
        (0..self.subbands).map(|s| self.subband_offset(s)).collect()
    }
}
