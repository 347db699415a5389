//! Per-branch fading gains, power profiles and additive noise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GabbaError, Result};
use crate::matrix::C64;

/// Fading distribution of one diversity branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FadingFamily {
    Rayleigh,
    Rice,
    Hoyt,
    Nakagami,
}

/// Fading family, severity `m` and mean power `Ω = E[|h|²]` of one branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchStat {
    pub family: FadingFamily,
    pub m: f64,
    pub omega: f64,
}

impl BranchStat {
    /// Hoyt below `m = 1`, Rayleigh at `m = 1`, Rice above.
    pub fn physical(m: f64, omega: f64) -> Result<Self> {
        let family = if m < 1.0 {
            FadingFamily::Hoyt
        } else if m == 1.0 {
            FadingFamily::Rayleigh
        } else {
            FadingFamily::Rice
        };
        BranchStat { family, m, omega }.validated()
    }

    /// Nakagami-m envelope with uniform phase.
    pub fn nakagami(m: f64, omega: f64) -> Result<Self> {
        BranchStat { family: FadingFamily::Nakagami, m, omega }.validated()
    }

    pub fn rayleigh(omega: f64) -> Result<Self> {
        BranchStat { family: FadingFamily::Rayleigh, m: 1.0, omega }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.m >= 0.5) || !self.m.is_finite() {
            return Err(GabbaError::OutOfRange(format!("fading severity m = {} must be >= 0.5", self.m)));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(GabbaError::OutOfRange(format!("mean power {} must be positive", self.omega)));
        }
        match self.family {
            FadingFamily::Hoyt if self.m > 1.0 => Err(GabbaError::OutOfRange("Hoyt needs m <= 1".into())),
            FadingFamily::Rice if self.m < 1.0 => Err(GabbaError::OutOfRange("Rice needs m >= 1".into())),
            _ => Ok(self),
        }
    }

    /// Same family and severity with a different mean power.
    pub fn with_omega(self, omega: f64) -> Self {
        BranchStat { omega, ..self }
    }
}

/// Hoyt shape `q = √((1 − 2√(m − m²)) / (2m − 1))` for `0.5 ≤ m ≤ 1`.
pub fn m_to_hoyt_q(m: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&m) {
        return Err(GabbaError::OutOfRange(format!("Hoyt mapping needs 0.5 <= m <= 1, got {m}")));
    }
    if m == 0.5 {
        return Ok(0.0);
    }
    Ok(((1.0 - 2.0 * (m - m * m).sqrt()) / (2.0 * m - 1.0)).max(0.0).sqrt())
}

/// Rice factor `k = √(m² − m) / (m − √(m² − m))` for `m ≥ 1`.
pub fn m_to_rice_k(m: f64) -> Result<f64> {
    if !(m >= 1.0) || !m.is_finite() {
        return Err(GabbaError::OutOfRange(format!("Rice mapping needs m >= 1, got {m}")));
    }
    let r = (m * m - m).sqrt();
    Ok(r / (m - r))
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform_phase(rng: &mut impl Rng) -> C64 {
    C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)
}

/// One complex gain drawn from `stat`.
pub fn sample_gain(stat: &BranchStat, rng: &mut impl Rng) -> C64 {
    let omega = stat.omega;
    match stat.family {
        FadingFamily::Rayleigh => C64::new(gaussian(rng), gaussian(rng)) * (omega / 2.0).sqrt(),
        FadingFamily::Rice => {
            let k = m_to_rice_k(stat.m).unwrap_or(0.0);
            let los = (omega * k / (1.0 + k)).sqrt();
            let diffuse = (omega / (2.0 * (1.0 + k))).sqrt();
            C64::new(los + diffuse * gaussian(rng), diffuse * gaussian(rng))
        }
        FadingFamily::Hoyt => {
            let q = m_to_hoyt_q(stat.m).unwrap_or(1.0);
            let si = (omega / (1.0 + q * q)).sqrt();
            let sq = q * si;
            C64::new(si * gaussian(rng), sq * gaussian(rng)) * uniform_phase(rng)
        }
        FadingFamily::Nakagami => {
            let gamma = Gamma::new(stat.m, omega / stat.m).expect("validated severity");
            let power: f64 = gamma.sample(rng);
            uniform_phase(rng) * power.sqrt()
        }
    }
}

/// `Ω_k = 2k/(K+1) · mean_power` for `k = 1..K`.
pub fn linear_profile(k: usize, mean_power: f64) -> Vec<f64> {
    (1..=k).map(|i| 2.0 * i as f64 / (k as f64 + 1.0) * mean_power).collect()
}

/// `m_k = 0.5 + 3.5(k−1)/(K−1)` for `k = 1..K`.
pub fn severity_profile(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(GabbaError::OutOfRange(format!("severity profile needs K >= 2, got {k}")));
    }
    Ok((0..k).map(|i| 0.5 + 3.5 * i as f64 / (k as f64 - 1.0)).collect())
}

/// Branches with severities rising over `[0.5, 4]` and powers falling
/// linearly, normalized so the powers sum to one.
pub fn mixed_severity_branches(k: usize) -> Result<Vec<BranchStat>> {
    let m = severity_profile(k)?;
    let mut omega = linear_profile(k, 1.0 / k as f64);
    omega.reverse();
    m.iter().zip(omega).map(|(&m, w)| BranchStat::physical(m, w)).collect()
}

/// Mean-power assignment across transmit branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PowerProfile {
    Equipower,
    /// `Ω_k = k/(K+1) · pmax`, the mean of the `k`-th order statistic of
    /// uniform powers on `[0, pmax]`.
    Linear { pmax: f64 },
}

impl PowerProfile {
    pub fn omegas(&self, k: usize) -> Vec<f64> {
        match *self {
            PowerProfile::Equipower => vec![1.0; k],
            PowerProfile::Linear { pmax } => linear_profile(k, pmax / 2.0),
        }
    }
}

impl fmt::Display for PowerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerProfile::Equipower => write!(f, "equipower"),
            PowerProfile::Linear { pmax } => write!(f, "linear:pmax={pmax}"),
        }
    }
}

fn parse_param(rest: &str, key: &str, whole: &str) -> Result<f64> {
    let value = rest
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| GabbaError::Config(format!("expected '{key}=<value>' in '{whole}'")))?;
    value.parse().map_err(|_| GabbaError::Config(format!("bad number in '{whole}'")))
}

impl FromStr for PowerProfile {
    type Err = GabbaError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "equipower" {
            return Ok(PowerProfile::Equipower);
        }
        if t == "linear" {
            return Ok(PowerProfile::Linear { pmax: 2.0 });
        }
        if let Some(rest) = t.strip_prefix("linear:") {
            let pmax = parse_param(rest, "pmax", s)?;
            if !(pmax > 0.0) {
                return Err(GabbaError::Config(format!("pmax must be positive in '{s}'")));
            }
            return Ok(PowerProfile::Linear { pmax });
        }
        Err(GabbaError::Config(format!("unknown power profile '{s}'")))
    }
}

/// Channel model named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    Rayleigh,
    Rice { m: f64 },
    Hoyt { m: f64 },
    Nakagami { m: f64 },
    /// Severity rising across branches with falling power.
    Mixed,
}

impl ChannelModel {
    /// Branch statistics for `n_t` branches under `profile`.
    pub fn branches(&self, n_t: usize, profile: PowerProfile) -> Result<Vec<BranchStat>> {
        let omegas = profile.omegas(n_t);
        match *self {
            ChannelModel::Mixed => mixed_severity_branches(n_t),
            _ => omegas
                .into_iter()
                .map(|w| match *self {
                    ChannelModel::Rayleigh => BranchStat::rayleigh(w),
                    ChannelModel::Rice { m } => BranchStat { family: FadingFamily::Rice, m, omega: w }.validated(),
                    ChannelModel::Hoyt { m } => BranchStat { family: FadingFamily::Hoyt, m, omega: w }.validated(),
                    ChannelModel::Nakagami { m } => BranchStat::nakagami(m, w),
                    ChannelModel::Mixed => unreachable!(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Rayleigh => write!(f, "rayleigh"),
            ChannelModel::Rice { m } => write!(f, "rice:m={m}"),
            ChannelModel::Hoyt { m } => write!(f, "hoyt:m={m}"),
            ChannelModel::Nakagami { m } => write!(f, "nakagami:m={m}"),
            ChannelModel::Mixed => write!(f, "mixed"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = GabbaError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let (name, rest) = t.split_once(':').unwrap_or((t.as_str(), ""));
        let model = match name {
            "rayleigh" if rest.is_empty() => ChannelModel::Rayleigh,
            "mixed" if rest.is_empty() => ChannelModel::Mixed,
            "rice" => ChannelModel::Rice { m: parse_param(rest, "m", s)? },
            "hoyt" => ChannelModel::Hoyt { m: parse_param(rest, "m", s)? },
            "nakagami" => ChannelModel::Nakagami { m: parse_param(rest, "m", s)? },
            _ => return Err(GabbaError::Config(format!("unknown channel model '{s}'"))),
        };
        model.branches(2, PowerProfile::Equipower).map_err(|e| GabbaError::Config(e.to_string()))?;
        Ok(model)
    }
}

/// Adds circular complex Gaussian noise of variance `n0` per sample.
pub fn add_awgn(signal: &[C64], n0: f64, rng: &mut impl Rng) -> Vec<C64> {
    if n0 == 0.0 {
        return signal.to_vec();
    }
    let sd = (n0 / 2.0).sqrt();
    signal.iter().map(|z| z + C64::new(sd * gaussian(rng), sd * gaussian(rng))).collect()
}

/// Deterministic generator for one `(stream, index)` pair under `seed`.
///
/// Streams keep SNR points apart and the index selects the trial, so every
/// trial draws the same numbers regardless of how trials are scheduled.
pub fn trial_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_maps() {
        assert_eq!(m_to_hoyt_q(1.0).unwrap(), 1.0);
        assert_eq!(m_to_rice_k(1.0).unwrap(), 0.0);
        assert!((m_to_rice_k(2.0).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!(m_to_hoyt_q(1.5).is_err());
        assert!(m_to_rice_k(0.7).is_err());
        for m in [1.5, 2.0, 4.0, 10.0] {
            let k = m_to_rice_k(m).unwrap();
            assert!(((1.0 + k).powi(2) / (1.0 + 2.0 * k) - m).abs() < 1e-9);
        }
    }

    #[test]
    fn profiles() {
        assert_eq!(linear_profile(1, 3.0), vec![3.0]);
        assert_eq!(linear_profile(3, 2.0), vec![1.0, 2.0, 3.0]);
        let m = severity_profile(8).unwrap();
        assert_eq!(severity_profile(2).unwrap(), vec![0.5, 4.0]);
        assert!((m[3] - 2.0).abs() < 1e-12);
        assert!((m.iter().sum::<f64>() / 8.0 - 2.25).abs() < 1e-12);
        assert!(severity_profile(1).is_err());
        let mixed = mixed_severity_branches(8).unwrap();
        assert!((mixed.iter().map(|b| b.omega).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(mixed.windows(2).all(|w| w[1].omega < w[0].omega && w[1].m > w[0].m));
    }

    #[test]
    fn parse_models() {
        assert_eq!("rayleigh".parse::<ChannelModel>().unwrap(), ChannelModel::Rayleigh);
        assert_eq!("rice:m=2".parse::<ChannelModel>().unwrap(), ChannelModel::Rice { m: 2.0 });
        assert_eq!("hoyt:m=0.7".parse::<ChannelModel>().unwrap(), ChannelModel::Hoyt { m: 0.7 });
        assert_eq!("nakagami:m=2.5".parse::<ChannelModel>().unwrap(), ChannelModel::Nakagami { m: 2.5 });
        assert!("hoyt:m=2".parse::<ChannelModel>().is_err());
        assert!("rice".parse::<ChannelModel>().is_err());
        assert!("gauss".parse::<ChannelModel>().is_err());
        assert_eq!("equipower".parse::<PowerProfile>().unwrap(), PowerProfile::Equipower);
        assert_eq!("linear:pmax=2".parse::<PowerProfile>().unwrap(), PowerProfile::Linear { pmax: 2.0 });
        assert!("linear:pmax=-1".parse::<PowerProfile>().is_err());
    }

    #[test]
    fn awgn_zero_is_identity() {
        let mut rng = trial_rng(1, 0, 0);
        let x = vec![C64::new(1.0, -2.0); 4];
        assert_eq!(add_awgn(&x, 0.0, &mut rng), x);
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, 1, 5).random();
        let b: f64 = trial_rng(7, 1, 5).random();
        let c: f64 = trial_rng(7, 1, 6).random();
        let d: f64 = trial_rng(7, 2, 5).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
