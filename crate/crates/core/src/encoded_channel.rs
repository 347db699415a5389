//! Encoded channel matrices.
//!
//! For a GABBA block the received samples obey `r = C(s)·h = H₁·s ⊕ H₂·s*`,
//! where `H₁` and `H₂` are the upper halves of two manifold matrices grown
//! from the (zero padded) channel vector.
//!
//! ```
//! use gabba::encoded_channel::build_encoded_channel;
//! use gabba::matrix::C64;
//!
//! let h = [C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
//! let enc = build_encoded_channel(&h, 2).unwrap();
//! assert_eq!(enc.h2().row(0), &[C64::new(2.0, 0.0), C64::new(-1.0, 0.0)]);
//! ```

use crate::code_construction::{Generator, ManifoldPattern};
use crate::error::{GabbaError, Result};
use crate::matrix::{CMat, C64};

/// Pads `h` with zeros up to length `k`.
pub fn extend_channel(h: &[C64], k: usize) -> Result<Vec<C64>> {
    if k == 0 || !k.is_power_of_two() {
        return Err(GabbaError::Dimension(format!("block size {k} is not a power of two")));
    }
    if h.len() > k {
        return Err(GabbaError::OutOfRange(format!("{} channel gains exceed block size {k}", h.len())));
    }
    let mut out = h.to_vec();
    out.resize(k, C64::new(0.0, 0.0));
    Ok(out)
}

/// Swaps the two halves of `hplus`.
pub fn modify_channel<T: Clone>(hplus: &[T]) -> Result<Vec<T>> {
    if hplus.len() % 2 != 0 {
        return Err(GabbaError::Dimension(format!("odd channel length {}", hplus.len())));
    }
    let half = hplus.len() / 2;
    Ok(hplus[half..].iter().chain(&hplus[..half]).cloned().collect())
}

/// `[s; conj(s)]`.
pub fn augmented(s: &[C64]) -> Vec<C64> {
    s.iter().copied().chain(s.iter().map(|z| z.conj())).collect()
}

/// The two non-zero minors of the encoded channel matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedChannel {
    k: usize,
    h1: CMat,
    h2: CMat,
}

impl EncodedChannel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// `K/2 × K` minor acting on `s`.
    pub fn h1(&self) -> &CMat {
        &self.h1
    }

    /// `K/2 × K` minor acting on `conj(s)`.
    pub fn h2(&self) -> &CMat {
        &self.h2
    }
}

/// Builds `H₁` from the `H` manifold of `h⁺` and `H₂` from the `H̃`
/// manifold of the half-swapped `h°`.
pub fn build_encoded_channel(h: &[C64], k: usize) -> Result<EncodedChannel> {
    if k < 2 {
        return Err(GabbaError::Dimension(format!("block size {k} must be at least 2")));
    }
    let hplus = extend_channel(h, k)?;
    let hmod = modify_channel(&hplus)?;
    let half = k / 2;
    let h1 = ManifoldPattern::new(k, Generator::H)?.matrix(&hplus)?.block(0, half, 0, k);
    let h2 = ManifoldPattern::new(k, Generator::HTilde)?.matrix(&hmod)?.block(0, half, 0, k);
    Ok(EncodedChannel { k, h1, h2 })
}

/// `[H₁·s; H₂·conj(s)]` for an augmented vector `[s; conj(s)]`.
pub fn apply_encoded_channel(enc: &EncodedChannel, sbar: &[C64]) -> Result<Vec<C64>> {
    let k = enc.k;
    if sbar.len() != 2 * k {
        return Err(GabbaError::LengthMismatch { expected: 2 * k, got: sbar.len() });
    }
    let mut out = enc.h1.mul_vec(&sbar[..k]);
    out.extend(enc.h2.mul_vec(&sbar[k..]));
    Ok(out)
}

/// Largest off-diagonal-block modulus of `Hᴴ·H + H̃ᵀ·conj(H̃)` built on the full
/// manifolds, relative to the Frobenius norm of the sum.
pub fn quasi_orthogonality_residual(h: &[C64], k: usize) -> Result<f64> {
    let hplus = extend_channel(h, k)?;
    let hmod = modify_channel(&hplus)?;
    let full_h = ManifoldPattern::new(k, Generator::H)?.matrix(&hplus)?;
    let full_t = ManifoldPattern::new(k, Generator::HTilde)?.matrix(&hmod)?;
    let sum = full_h.adjoint().mul(&full_h).add(&full_t.transpose().mul(&full_t.conj()));
    let half = k / 2;
    let off = sum.block(0, half, half, k).max_abs().max(sum.block(half, k, 0, half).max_abs());
    let norm = sum.frobenius();
    Ok(if norm == 0.0 { 0.0 } else { off / norm })
}

/// Textual layout of both minors with entries such as `-h17`, rows separated
/// by newlines and the two minors separated by a blank line.
pub fn dump_minors(k: usize) -> Result<String> {
    let labels: Vec<(i8, usize)> = (1..=k).map(|i| (1, i)).collect();
    let swapped = modify_channel(&labels)?;
    let half = k / 2;
    let render = |pattern: &ManifoldPattern, src: &[(i8, usize)]| {
        (0..half)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let (idx, s) = pattern.cell(i, j);
                        let (s0, label) = src[idx];
                        format!("{}h{}", if s * s0 < 0 { "-" } else { "" }, label)
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let top = render(&ManifoldPattern::new(k, Generator::H)?, &labels);
    let bottom = render(&ManifoldPattern::new(k, Generator::HTilde)?, &swapped);
    Ok(format!("{top}\n\n{bottom}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn extend_pads_with_zeros() {
        assert_eq!(extend_channel(&[c(1.0), c(2.0)], 2).unwrap(), vec![c(1.0), c(2.0)]);
        assert_eq!(extend_channel(&[c(1.0), c(2.0), c(3.0)], 4).unwrap(), vec![c(1.0), c(2.0), c(3.0), c(0.0)]);
        assert_eq!(extend_channel(&[c(5.0)], 4).unwrap(), vec![c(5.0), c(0.0), c(0.0), c(0.0)]);
        assert!(extend_channel(&[c(1.0); 3], 2).is_err());
    }

    #[test]
    fn modify_swaps_halves() {
        assert_eq!(modify_channel(&[1, 2]).unwrap(), vec![2, 1]);
        assert_eq!(modify_channel(&[1, 2, 3, 4]).unwrap(), vec![3, 4, 1, 2]);
        assert_eq!(modify_channel(&modify_channel(&[1, 2, 3, 4]).unwrap()).unwrap(), vec![1, 2, 3, 4]);
        assert!(modify_channel(&[1, 2, 3]).is_err());
    }

    #[test]
    fn augmented_vectors() {
        let i = C64::new(0.0, 1.0);
        assert_eq!(augmented(&[c(1.0)]), vec![c(1.0), c(1.0)]);
        assert_eq!(augmented(&[i]), vec![i, -i]);
    }

    #[test]
    fn alamouti_encoded_channel() {
        let h = [C64::new(0.3, -1.0), C64::new(0.7, 0.2)];
        let s = [C64::new(1.0, 2.0), C64::new(-0.5, 0.25)];
        let enc = build_encoded_channel(&h, 2).unwrap();
        assert_eq!(enc.h1().row(0), &h);
        let r = apply_encoded_channel(&enc, &augmented(&s)).unwrap();
        assert!((r[0] - (h[0] * s[0] + h[1] * s[1])).norm() < 1e-15);
        assert!((r[1] - (h[1] * s[0].conj() - h[0] * s[1].conj())).norm() < 1e-15);
        assert_eq!(apply_encoded_channel(&enc, &augmented(&[c(0.0), c(0.0)])).unwrap(), vec![c(0.0); 2]);
        assert!(apply_encoded_channel(&enc, &[c(0.0)]).is_err());
    }

    #[test]
    fn dump_k2() {
        assert_eq!(dump_minors(2).unwrap(), "h1 h2\n\nh2 -h1");
    }
}
