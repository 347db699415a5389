//! Real scalar backends used by the nested decoder.
//!
//! The decoder is written once against [`Real`] and instantiated either with
//! `f64` or with [`Mp`], a binary floating-point number of selectable
//! precision backed by `astro-float`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use astro_float::{BigFloat, RoundingMode, Sign};
use num_traits::{Num, One, Zero};

/// Field operations required by the decoder chain.
pub trait Real:
    Num + Clone + Neg<Output = Self> + PartialOrd + Send + Sync + fmt::Debug + 'static
{
    /// Converts `x` exactly, allocating `bits` of mantissa where that is meaningful.
    fn from_f64_at(x: f64, bits: usize) -> Self;

    /// Nearest `f64` approximation.
    fn to_f64(&self) -> f64;

    /// `acc += a * b`.
    fn mul_add_to(acc: &mut Self, a: &Self, b: &Self) {
        *acc = acc.clone() + a.clone() * b.clone();
    }

    /// `acc -= a * b`.
    fn mul_sub_from(acc: &mut Self, a: &Self, b: &Self) {
        *acc = acc.clone() - a.clone() * b.clone();
    }

    /// `self / d` without consuming either operand.
    fn div_ref(&self, d: &Self) -> Self {
        self.clone() / d.clone()
    }
}

impl Real for f64 {
    fn from_f64_at(x: f64, _bits: usize) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn mul_add_to(acc: &mut Self, a: &Self, b: &Self) {
        *acc += a * b;
    }

    #[inline]
    fn mul_sub_from(acc: &mut Self, a: &Self, b: &Self) {
        *acc -= a * b;
    }

    #[inline]
    fn div_ref(&self, d: &Self) -> Self {
        self / d
    }
}

const RM: RoundingMode = RoundingMode::ToEven;
const EXACT_BITS: usize = 64;

/// Arbitrary-precision real number.
///
/// The result of a binary operation carries the larger of the two operand
/// precisions, so constants built with [`Zero`] or [`One`] adapt to whatever
/// they are combined with.
#[derive(Clone)]
pub struct Mp(BigFloat);

impl Mp {
    /// Mantissa length in bits.
    pub fn precision(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(EXACT_BITS)
    }

    fn joint(&self, other: &Mp) -> usize {
        self.precision().max(other.precision())
    }

    fn add_ref(&self, o: &Mp) -> Mp {
        Mp(self.0.add(&o.0, self.joint(o), RM))
    }

    fn sub_ref(&self, o: &Mp) -> Mp {
        Mp(self.0.sub(&o.0, self.joint(o), RM))
    }

    fn mul_ref(&self, o: &Mp) -> Mp {
        Mp(self.0.mul(&o.0, self.joint(o), RM))
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp({:e}, {} bits)", self.to_f64(), self.precision())
    }
}

impl Add for Mp {
    type Output = Mp;
    fn add(self, o: Mp) -> Mp {
        self.add_ref(&o)
    }
}

impl Sub for Mp {
    type Output = Mp;
    fn sub(self, o: Mp) -> Mp {
        self.sub_ref(&o)
    }
}

impl Mul for Mp {
    type Output = Mp;
    fn mul(self, o: Mp) -> Mp {
        self.mul_ref(&o)
    }
}

impl Div for Mp {
    type Output = Mp;
    fn div(self, o: Mp) -> Mp {
        self.div_ref(&o)
    }
}

impl Rem for Mp {
    type Output = Mp;
    fn rem(self, o: Mp) -> Mp {
        Mp(self.0.rem(&o.0))
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(self.0.neg())
    }
}

impl PartialEq for Mp {
    fn eq(&self, o: &Mp) -> bool {
        self.0 == o.0
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, o: &Mp) -> Option<Ordering> {
        self.0.partial_cmp(&o.0)
    }
}

impl Zero for Mp {
    fn zero() -> Mp {
        Mp(BigFloat::from_word(0, EXACT_BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Mp {
    fn one() -> Mp {
        Mp(BigFloat::from_word(1, EXACT_BITS))
    }
}

impl Num for Mp {
    type FromStrRadixErr = String;

    fn from_str_radix(s: &str, radix: u32) -> Result<Mp, String> {
        if radix != 10 {
            return Err(format!("unsupported radix {radix}"));
        }
        s.parse::<f64>()
            .map(|x| Mp::from_f64_at(x, EXACT_BITS))
            .map_err(|e| e.to_string())
    }
}

impl Real for Mp {
    fn from_f64_at(x: f64, bits: usize) -> Mp {
        Mp(BigFloat::from_f64(x, bits.max(EXACT_BITS)))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf() {
            return if self.0.is_inf_neg() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        let Some((words, _, sign, exponent, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let Some(&top) = words.last() else {
            return 0.0;
        };
        if top == 0 {
            return 0.0;
        }
        let next = if words.len() > 1 { words[words.len() - 2] } else { 0 };
        // Mantissa is a fraction in [0.5, 1) stored most significant word last.
        let frac = (top as f64 + next as f64 / 18_446_744_073_709_551_616.0)
            / 18_446_744_073_709_551_616.0;
        let magnitude = frac * 2f64.powi(exponent);
        if sign == Sign::Neg {
            -magnitude
        } else {
            magnitude
        }
    }

    fn mul_add_to(acc: &mut Mp, a: &Mp, b: &Mp) {
        let p = a.mul_ref(b);
        *acc = acc.add_ref(&p);
    }

    fn mul_sub_from(acc: &mut Mp, a: &Mp, b: &Mp) {
        let p = a.mul_ref(b);
        *acc = acc.sub_ref(&p);
    }

    fn div_ref(&self, d: &Mp) -> Mp {
        Mp(self.0.div(&d.0, self.joint(d), RM))
    }
}
