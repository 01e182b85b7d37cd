//! Interference generation and the per-hop channel laws of both two-hop models.
//!
//! Model 1: interference hits the relay and is known at the destination.
//! Model 2: interference hits the destination and is known at the source.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Transmit power of both the source and the relay.
pub const UNIT_POWER: f64 = 1.0;

/// Slack on the per-block power check.
const POWER_TOL: f64 = 1e-9;

/// Normalized frequency (cycles per channel use) of the sinusoidal interference.
pub const SINUSOID_FREQUENCY: f64 = 0.137;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Model {
    /// Interference at the relay, known at the destination.
    One,
    /// Interference at the destination, known at the source.
    Two,
}

impl From<Model> for u8 {
    fn from(m: Model) -> u8 {
        match m {
            Model::One => 1,
            Model::Two => 2,
        }
    }
}

impl TryFrom<u8> for Model {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Model::One),
            2 => Ok(Model::Two),
            _ => Err(Error::Config(format!("model must be 1 or 2, got {v}"))),
        }
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("model must be 1 or 2, got {s:?}")))?;
        v.try_into()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceKind {
    /// `amplitude·(1, …, 1)`
    Constant,
    /// iid `N(0, variance)`
    Gaussian,
    /// `amplitude·sin(2π f k + φ)`, random phase
    Sinusoid,
    /// iid uniform on `[−amplitude, amplitude)`
    Uniform,
}

impl InterferenceKind {
    pub const ALL: [InterferenceKind; 4] = [
        InterferenceKind::Constant,
        InterferenceKind::Gaussian,
        InterferenceKind::Sinusoid,
        InterferenceKind::Uniform,
    ];
}

impl FromStr for InterferenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(Self::Constant),
            "gaussian" => Ok(Self::Gaussian),
            "sinusoid" => Ok(Self::Sinusoid),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown interference kind {other:?}"))),
        }
    }
}

impl fmt::Display for InterferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Constant => "constant",
            Self::Gaussian => "gaussian",
            Self::Sinusoid => "sinusoid",
            Self::Uniform => "uniform",
        };
        f.write_str(s)
    }
}

/// Descriptor for the state sequence `S`.
///
/// `param` is the amplitude for constant, sinusoid and uniform kinds and the
/// variance for the gaussian kind. When `reseed` is false a run draws `S`
/// once and reuses it for every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSpec {
    pub kind: InterferenceKind,
    pub param: f64,
    #[serde(default = "default_reseed")]
    pub reseed: bool,
}

fn default_reseed() -> bool {
    true
}

impl InterferenceSpec {
    pub fn new(kind: InterferenceKind, param: f64) -> Self {
        Self { kind, param, reseed: true }
    }

    pub fn constant(amplitude: f64) -> Self {
        Self::new(InterferenceKind::Constant, amplitude)
    }

    pub fn gaussian(variance: f64) -> Self {
        Self::new(InterferenceKind::Gaussian, variance)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.param.is_finite() {
            return Err(Error::Config("interference parameter must be finite".into()));
        }
        if self.kind == InterferenceKind::Gaussian && self.param < 0.0 {
            return Err(Error::Config("gaussian interference variance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Parses `kind[:param]`, e.g. `gaussian:1e12` or `constant:1e6`.
impl FromStr for InterferenceSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, param) = match s.split_once(':') {
            Some((k, p)) => {
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad interference parameter in {s:?}")))?;
                (k, p)
            }
            None => (s, 0.0),
        };
        let spec = Self::new(kind.parse()?, param);
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for InterferenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.param)
    }
}

pub fn gen_interference<R: Rng + ?Sized>(spec: &InterferenceSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Input("interference length must be positive".into()));
    }
    spec.validate()?;
    let p = spec.param;
    Ok(match spec.kind {
        InterferenceKind::Constant => vec![p; n],
        InterferenceKind::Gaussian => {
            let normal = Normal::new(0.0, p.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
            (0..n).map(|_| normal.sample(rng)).collect()
        }
        InterferenceKind::Sinusoid => {
            let phase = rng.random_range(0.0..TAU);
            (0..n)
                .map(|k| p * (TAU * SINUSOID_FREQUENCY * k as f64 + phase).sin())
                .collect()
        }
        InterferenceKind::Uniform => {
            let amp = p.abs();
            if amp == 0.0 {
                vec![0.0; n]
            } else {
                (0..n).map(|_| rng.random_range(-amp..amp)).collect()
            }
        }
    })
}

/// Link SNRs `S1` (source→relay) and `S2` (relay→destination).
///
/// Noise variances are `1/S1` and `1/S2`; `noiseless` forces both noises to
/// zero for identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub s1: f64,
    pub s2: f64,
    #[serde(default)]
    pub noiseless: bool,
}

impl ChannelParams {
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        for (name, s) in [("S1", s1), ("S2", s2)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive finite SNR, got {s}")));
            }
        }
        Ok(Self { s1, s2, noiseless: false })
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }

    pub fn noise_variance_hop1(&self) -> f64 {
        1.0 / self.s1
    }

    pub fn noise_variance_hop2(&self) -> f64 {
        1.0 / self.s2
    }
}

/// Dithered mod-Λ encoders meet the power constraint on average; a single
/// block is bounded by the peak `a²/4 = 3·P` of the fundamental cube.
fn check_power(x: &[f64], power: f64, who: &str) -> Result<()> {
    let per_dim = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let peak = 3.0 * power;
    if per_dim.is_finite() && per_dim <= peak * (1.0 + POWER_TOL) {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{who} block power {per_dim} exceeds the fundamental-cube peak {peak}"
        )))
    }
}

fn awgn<R: Rng + ?Sized>(x: &[f64], variance: f64, noiseless: bool, rng: &mut R) -> Vec<f64> {
    if noiseless {
        return x.to_vec();
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("variance is positive");
    x.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Source → relay.
pub fn hop1<R: Rng + ?Sized>(
    model: Model,
    x1: &[f64],
    s: &[f64],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(x1.len(), s.len())?;
    check_power(x1, UNIT_POWER, "source")?;
    let clean: Vec<f64> = match model {
        Model::One => x1.iter().zip(s).map(|(x, s)| x + s).collect(),
        Model::Two => x1.to_vec(),
    };
    Ok(awgn(&clean, params.noise_variance_hop1(), params.noiseless, rng))
}

/// Relay → destination.
pub fn hop2<R: Rng + ?Sized>(
    model: Model,
    x2: &[f64],
    s: &[f64],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(x2.len(), s.len())?;
    check_power(x2, UNIT_POWER, "relay")?;
    let clean: Vec<f64> = match model {
        Model::One => x2.to_vec(),
        Model::Two => x2.iter().zip(s).map(|(x, s)| x + s).collect(),
    };
    Ok(awgn(&clean, params.noise_variance_hop2(), params.noiseless, rng))
}
