//! Gray-mapped M-PSK and square M-QAM.
//!
//! PSK places label `gray(m)` at angle `2πm/M`. QAM splits the label into an
//! in-phase half and a quadrature half, each Gray-coded along its own axis,
//! and scales the grid to unit average energy.

use std::fmt;
use std::str::FromStr;

use crate::error::{GabbaError, Result};
use crate::matrix::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Family {
    Psk,
    Qam,
}

/// A constellation family and its size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ModulationSpec {
    family: Family,
    m: usize,
}

fn gray(x: usize) -> usize {
    x ^ (x >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut x = g;
    while g > 0 {
        g >>= 1;
        x ^= g;
    }
    x
}

impl ModulationSpec {
    pub fn psk(m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(GabbaError::OutOfRange(format!("PSK order {m} must be a power of two >= 2")));
        }
        Ok(ModulationSpec { family: Family::Psk, m })
    }

    pub fn qam(m: usize) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() || m.trailing_zeros() % 2 != 0 {
            return Err(GabbaError::OutOfRange(format!("QAM order {m} must be an even power of two")));
        }
        Ok(ModulationSpec { family: Family::Qam, m })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    fn side(&self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    fn qam_step(&self) -> f64 {
        (1.5 / (self.m as f64 - 1.0)).sqrt()
    }

    /// Point carrying `label`, whose bits are read most significant first.
    pub fn point(&self, label: usize) -> C64 {
        match self.family {
            Family::Psk => {
                let idx = gray_inverse(label);
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * idx as f64 / self.m as f64)
            }
            Family::Qam => {
                let half = self.bits_per_symbol() / 2;
                let side = self.side();
                let level = |g: usize| (2 * gray_inverse(g)) as f64 - (side as f64 - 1.0);
                let d = self.qam_step();
                C64::new(level(label >> half) * d, level(label & (side - 1)) * d)
            }
        }
    }

    /// Hard nearest-point decision, returned as a label.
    pub fn decide(&self, z: C64) -> usize {
        match self.family {
            Family::Psk => {
                let step = 2.0 * std::f64::consts::PI / self.m as f64;
                let idx = (z.arg() / step).round().rem_euclid(self.m as f64) as usize % self.m;
                gray(idx)
            }
            Family::Qam => {
                let side = self.side();
                let d = self.qam_step();
                let axis = |x: f64| {
                    let i = ((x / d + side as f64 - 1.0) / 2.0).round();
                    gray(i.clamp(0.0, side as f64 - 1.0) as usize)
                };
                (axis(z.re) << (self.bits_per_symbol() / 2)) | axis(z.im)
            }
        }
    }

    /// Maps `log2 M` bits (values 0 or 1, most significant first) to a point.
    pub fn map(&self, bits: &[u8]) -> Result<C64> {
        let b = self.bits_per_symbol();
        if bits.len() != b {
            return Err(GabbaError::LengthMismatch { expected: b, got: bits.len() });
        }
        Ok(self.point(bits.iter().fold(0, |acc, &x| (acc << 1) | (x & 1) as usize)))
    }

    /// Nearest-point hard decision as bits, most significant first.
    pub fn demap(&self, z: C64) -> Vec<u8> {
        let label = self.decide(z);
        let b = self.bits_per_symbol();
        (0..b).rev().map(|i| ((label >> i) & 1) as u8).collect()
    }

    /// All points indexed by label.
    pub fn constellation(&self) -> Vec<C64> {
        (0..self.m).map(|l| self.point(l)).collect()
    }
}

impl fmt::Display for ModulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Psk => write!(f, "psk{}", self.m),
            Family::Qam => write!(f, "qam{}", self.m),
        }
    }
}

impl FromStr for ModulationSpec {
    type Err = GabbaError;

    /// Accepts `bpsk`, `qpsk`, `psk<M>` and `qam<M>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let order = |rest: &str| {
            rest.parse::<usize>().map_err(|_| GabbaError::Config(format!("unknown modulation '{s}'")))
        };
        match t.as_str() {
            "bpsk" => ModulationSpec::psk(2),
            "qpsk" => ModulationSpec::psk(4),
            _ if t.starts_with("psk") => ModulationSpec::psk(order(&t[3..])?),
            _ if t.starts_with("qam") => ModulationSpec::qam(order(&t[3..])?),
            _ => Err(GabbaError::Config(format!("unknown modulation '{s}'"))),
        }
    }
}

/// `d̄_k = 2|k/M − ⌊k/M⌉| + Σ_{i=2}^{log2 M} 2|k/2ⁱ − ⌊k/2ⁱ⌉|` for `k = 1..M−1`,
/// the mean Hamming distance between Gray labels `k` sectors apart.
pub fn psk_distance_spectrum(m: usize) -> Result<Vec<f64>> {
    if m < 2 || !m.is_power_of_two() {
        return Err(GabbaError::OutOfRange(format!("PSK order {m} must be a power of two >= 2")));
    }
    let bits = m.trailing_zeros() as i32;
    let term = |x: f64| 2.0 * (x - x.round()).abs();
    Ok((1..m)
        .map(|k| {
            let k = k as f64;
            term(k / m as f64) + (2..=bits).map(|i| term(k / 2f64.powi(i))).sum::<f64>()
        })
        .collect())
}

/// Number of positions where the two bit strings differ.
pub fn count_bit_errors(tx: &[u8], rx: &[u8]) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(GabbaError::LengthMismatch { expected: tx.len(), got: rx.len() });
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count())
}
