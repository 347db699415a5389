//! Exact average BER of full-rate linear space-time block codes over
//! independent fading branches, by moment generating functions inside a
//! finite-range angle integral.
//!
//! ```
//! use gabba::ber_analytics::{psk_ber, BerParams, QuadratureConfig};
//! use gabba::fading_sim::BranchStat;
//!
//! let params = BerParams::full_rate(vec![BranchStat::rayleigh(1.0).unwrap()], 1);
//! let ber = psk_ber(2, &params, 1.0, &QuadratureConfig::default()).unwrap();
//! assert!((ber - 0.5 * (1.0 - 0.5f64.sqrt())).abs() < 1e-9);
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GabbaError, Result};
use crate::fading_sim::{m_to_hoyt_q, m_to_rice_k, BranchStat, FadingFamily};
use crate::modem::psk_distance_spectrum;

/// Weights applied to uniformly spaced angle samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    /// Plain trapezoid, `h·(½f₀ + f₁ + … + ½f_n)`.
    Trapezoid,
    /// Trapezoid with end weights `3/8, 7/6, 23/24`, exact to `O(h⁴)`.
    #[default]
    EndCorrected,
}

impl QuadratureRule {
    fn weight(self, i: usize, n: usize) -> f64 {
        let edge = i.min(n - 1 - i);
        match (self, edge) {
            (QuadratureRule::Trapezoid, 0) => 0.5,
            (QuadratureRule::EndCorrected, 0) => 3.0 / 8.0,
            (QuadratureRule::EndCorrected, 1) => 7.0 / 6.0,
            (QuadratureRule::EndCorrected, 2) => 23.0 / 24.0,
            _ => 1.0,
        }
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = GabbaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trapezoid" => Ok(QuadratureRule::Trapezoid),
            "end-corrected" => Ok(QuadratureRule::EndCorrected),
            _ => Err(GabbaError::Config(format!("unknown quadrature rule '{s}'"))),
        }
    }
}

/// Uniformly spaced angles starting just above zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub points: usize,
    pub rule: QuadratureRule,
}

impl QuadratureConfig {
    pub fn with_points(points: usize) -> Self {
        QuadratureConfig { points, ..Self::default() }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { points: 5000, rule: QuadratureRule::default() }
    }
}

/// Lower end of every angle grid, keeping `sin²θ` away from zero.
const THETA_START: f64 = 1e-50;

/// Code rate, diversity order and per-transmit-branch statistics.
///
/// Branch `n` has mean SNR `Ω_n · snr`, where `snr` is the linear value
/// passed to the BER functions. Each branch is replicated across the
/// `n_r` receive antennas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerParams {
    pub rho: f64,
    pub eta: f64,
    pub n_r: usize,
    pub branches: Vec<BranchStat>,
}

impl BerParams {
    /// `ρ = η = 1`.
    pub fn full_rate(branches: Vec<BranchStat>, n_r: usize) -> Self {
        BerParams { rho: 1.0, eta: 1.0, n_r, branches }
    }

    pub fn n_t(&self) -> usize {
        self.branches.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) || !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(GabbaError::OutOfRange(format!("rho = {}, eta = {} must lie in (0, 1]", self.rho, self.eta)));
        }
        if self.n_r == 0 || self.branches.is_empty() {
            return Err(GabbaError::OutOfRange("at least one branch and one receive antenna are required".into()));
        }
        Ok(())
    }
}

/// MGF of the instantaneous SNR of one branch with mean SNR `gamma_bar`,
/// evaluated at `s ≤ 0`.
pub fn mgf(stat: &BranchStat, gamma_bar: f64, s: f64) -> Result<f64> {
    if s > 0.0 {
        return Err(GabbaError::OutOfRange(format!("MGF argument s = {s} must be <= 0")));
    }
    let x = s * gamma_bar;
    if stat.m == 1.0 || stat.family == FadingFamily::Rayleigh {
        return Ok(1.0 / (1.0 - x));
    }
    Ok(match stat.family {
        FadingFamily::Nakagami => (1.0 - x / stat.m).powf(-stat.m),
        FadingFamily::Hoyt => {
            let q = m_to_hoyt_q(stat.m)?;
            let c = 2.0 * x * q / (1.0 + q * q);
            1.0 / (1.0 - 2.0 * x + c * c).sqrt()
        }
        FadingFamily::Rice => {
            let k = m_to_rice_k(stat.m)?;
            let d = 1.0 + k - x;
            (1.0 + k) / d * (k * x / d).exp()
        }
        FadingFamily::Rayleigh => unreachable!(),
    })
}

/// Signed `(1/π)·∫₀^{π(1−δ)} Π_n μ_n(−g/(ρ sin²θ))^{η n_r} dθ`.
///
/// A negative upper limit yields a negative value.
pub fn mgf_integral(delta: f64, g: f64, params: &BerParams, snr: f64, quad: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    if quad.points < 100 {
        return Err(GabbaError::OutOfRange(format!("quadrature needs at least 100 points, got {}", quad.points)));
    }
    let upper = PI * (1.0 - delta);
    if upper == 0.0 {
        return Ok(0.0);
    }
    let n = quad.points;
    let step = (upper - THETA_START) / (n - 1) as f64;
    let power = params.eta * params.n_r as f64;
    let gammas: Vec<f64> = params.branches.iter().map(|b| b.omega * snr).collect();
    let integrand = |theta: f64| -> Result<f64> {
        let s = -g / (params.rho * theta.sin().powi(2));
        let mut prod = 1.0;
        for (b, &gb) in params.branches.iter().zip(&gammas) {
            prod *= mgf(b, gb, s)?.powf(power);
        }
        Ok(prod)
    };
    let mut sum = 0.0;
    for i in 0..n {
        let w = quad.rule.weight(i, n);
        sum += w * integrand(THETA_START + i as f64 * step)?;
    }
    Ok(step * sum / PI)
}

/// Average bit error probability of Gray-mapped M-PSK.
pub fn psk_ber(m: usize, params: &BerParams, snr: f64, quad: &QuadratureConfig) -> Result<f64> {
    let d = psk_distance_spectrum(m)?;
    let bits = m.trailing_zeros() as f64;
    let mut total = 0.0;
    for (idx, dk) in d.iter().enumerate() {
        let k = (idx + 1) as f64;
        let minus = (2.0 * k - 1.0) / m as f64;
        let plus = (2.0 * k + 1.0) / m as f64;
        let g = |delta: f64| (PI * delta).sin().powi(2);
        total += dk
            * (mgf_integral(minus, g(minus), params, snr, quad)? - mgf_integral(plus, g(plus), params, snr, quad)?);
    }
    Ok(total / (2.0 * bits))
}

/// Weights `(i, c_i)` of the angle integrals for bit position `k` (one-based)
/// of square M-QAM: `c_i = (−1)^⌊i·2^{k−1}/√M⌋ · (2^{k−1} − ⌊i·2^{k−1}/√M + ½⌋)`.
pub fn qam_coefficients(m: usize, k: usize) -> Vec<(usize, f64)> {
    let side = (m as f64).sqrt();
    let p = (1usize << (k - 1)) as f64;
    let count = ((1.0 - 1.0 / 2f64.powi(k as i32)) * side).round() as usize;
    (0..count)
        .map(|i| {
            let t = i as f64 * p / side;
            let sign = if t.floor() as i64 % 2 == 0 { 1.0 } else { -1.0 };
            (i, sign * (p - (t + 0.5).floor()))
        })
        .collect()
}

/// Average bit error probability of Gray-mapped square M-QAM.
pub fn qam_ber(m: usize, params: &BerParams, snr: f64, quad: &QuadratureConfig) -> Result<f64> {
    if m < 4 || !m.is_power_of_two() || m.trailing_zeros() % 2 != 0 {
        return Err(GabbaError::OutOfRange(format!("QAM order {m} must be an even power of two")));
    }
    let bits = m.trailing_zeros() as usize;
    let mut total = 0.0;
    for k in 1..=bits / 2 {
        for (i, c) in qam_coefficients(m, k) {
            let g = 3.0 * ((2 * i + 1) as f64).powi(2) / (2.0 * (m as f64 - 1.0));
            total += c * mgf_integral(0.5, g, params, snr, quad)?;
        }
    }
    // Each angle integral is normalized by π over [0, π/2]; the remaining
    // factor is 4 / (√M · log2 M).
    Ok(4.0 * total / ((m as f64).sqrt() * bits as f64))
}

/// Hard-decision throughput `ρ·b·(1 + p log2 p + (1−p) log2(1−p))` of `b`
/// bits per symbol over a binary symmetric channel with crossover `p`.
pub fn capacity(bits_per_symbol: usize, rho: f64, pbar: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&pbar) {
        return Err(GabbaError::OutOfRange(format!("crossover probability {pbar} outside [0, 0.5]")));
    }
    let h = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    let entropy = h(pbar) + h(1.0 - pbar);
    Ok((rho * bits_per_symbol as f64 * (1.0 - entropy)).max(0.0))
}

/// Mean of the `k`-th smallest of `K` uniform draws on `[0, pmax]`.
///
/// Equals `K!/((k−1)!(K−k)!) · pmax · ∫₀¹ x^k (1−x)^{K−k} dx` with the beta
/// integral `(K−k)!·k!/(K+1)!`, which collapses to `k/(K+1)·pmax`.
pub fn order_stat_mean(k: usize, total: usize, pmax: f64) -> Result<f64> {
    if k == 0 || k > total {
        return Err(GabbaError::OutOfRange(format!("order {k} outside 1..={total}")));
    }
    let ln_fact = |n: usize| (1..=n).map(|x| (x as f64).ln()).sum::<f64>();
    let prefactor = ln_fact(total) - ln_fact(k - 1) - ln_fact(total - k);
    let beta = ln_fact(total - k) + ln_fact(k) - ln_fact(total + 1);
    Ok((prefactor + beta).exp() * pmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh(n: usize) -> Vec<BranchStat> {
        vec![BranchStat::rayleigh(1.0).unwrap(); n]
    }

    #[test]
    fn mgf_examples() {
        let r = BranchStat::rayleigh(1.0).unwrap();
        assert!((mgf(&r, 1.0, -1.0).unwrap() - 0.5).abs() < 1e-15);
        let n = BranchStat::nakagami(2.0, 1.0).unwrap();
        assert!((mgf(&n, 2.0, -1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(mgf(&r, 1.0, 0.1).is_err());
        let hoyt = BranchStat::physical(1.0 - 1e-12, 1.0).unwrap();
        let rice = BranchStat::physical(1.0 + 1e-12, 1.0).unwrap();
        for s in [-0.1, -1.0, -5.0] {
            assert!((mgf(&hoyt, 1.0, s).unwrap() - 1.0 / (1.0 - s)).abs() < 1e-9);
            assert!((mgf(&rice, 1.0, s).unwrap() - 1.0 / (1.0 - s)).abs() < 1e-9);
        }
    }

    #[test]
    fn integral_edge_cases() {
        let p = BerParams::full_rate(rayleigh(1), 1);
        let q = QuadratureConfig::default();
        assert_eq!(mgf_integral(1.0, 1.0, &p, 1.0, &q).unwrap(), 0.0);
        let a = mgf_integral(0.5, 0.7, &p, 2.0, &q).unwrap();
        let b = mgf_integral(1.5, 0.7, &p, 2.0, &q).unwrap();
        assert!(a > 0.0 && (a + b).abs() < 1e-12);
        assert!(mgf_integral(0.5, 0.7, &p, 2.0, &QuadratureConfig::with_points(10)).is_err());
    }

    #[test]
    fn qam4_coefficients() {
        assert_eq!(qam_coefficients(4, 1), vec![(0, 1.0)]);
        assert!(qam_ber(8, &BerParams::full_rate(rayleigh(1), 1), 1.0, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn capacity_limits() {
        assert_eq!(capacity(3, 1.0, 0.0).unwrap(), 3.0);
        assert_eq!(capacity(3, 1.0, 0.5).unwrap(), 0.0);
        assert!((capacity(2, 1.0, 0.11).unwrap() - 1.0).abs() < 2e-3);
        assert!(capacity(2, 1.0, 0.6).is_err());
    }

    #[test]
    fn order_statistics() {
        assert!((order_stat_mean(1, 1, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((order_stat_mean(7, 7, 2.0).unwrap() - 7.0 / 8.0 * 2.0).abs() < 1e-12);
        assert!((order_stat_mean(3, 7, 1.0).unwrap() - 3.0 / 8.0).abs() < 1e-12);
        assert!(order_stat_mean(0, 7, 1.0).is_err());
        assert!(order_stat_mean(8, 7, 1.0).is_err());
    }
}
