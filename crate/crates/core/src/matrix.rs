//! Dense row-major complex matrices over a [`Real`] scalar.

use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::Real;

/// Complex double-precision scalar.
pub type C64 = Complex<f64>;

/// Dense complex matrix stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Double-precision complex matrix.
pub type CMat = Mat<f64>;

/// Products at or above this inner size run row-parallel.
const PAR_THRESHOLD: usize = 32;

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn conj(&self) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: &Complex<T>) -> Self {
        let data = self.data.iter().map(|a| a.clone() * s.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// Divides every entry by the real number `d`.
    pub fn div_real(&self, d: &T) -> Self {
        let data = self.data.iter().map(|a| Complex::new(a.re.div_ref(d), a.im.div_ref(d))).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        self.product(other, false)
    }

    /// `selfᵀ · other`, without forming the transpose.
    pub fn transpose_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "inner dimensions differ");
        self.product(other, true)
    }

    fn product(&self, other: &Self, transpose_left: bool) -> Self {
        let (out_rows, inner) = if transpose_left { (self.cols, self.rows) } else { (self.rows, self.cols) };
        let n = other.cols;
        let mut out = Mat::zeros(out_rows, n);
        let left = |i: usize, k: usize| if transpose_left { self.get(k, i) } else { self.get(i, k) };
        let fill_row = |i: usize, row: &mut [Complex<T>]| {
            for k in 0..inner {
                let a = left(i, k);
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for (acc, b) in row.iter_mut().zip(other.row(k)) {
                    cmul_add(acc, a, b);
                }
            }
        };
        if inner >= PAR_THRESHOLD && n > 0 {
            out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| fill_row(i, row));
        } else if n > 0 {
            out.data.chunks_mut(n).enumerate().for_each(|(i, row)| fill_row(i, row));
        }
        out
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (a, b) in self.row(i).iter().zip(v) {
                    cmul_add(&mut acc, a, b);
                }
                acc
            })
            .collect()
    }

    /// `selfᵀ · v`.
    pub fn transpose_mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (k, b) in v.iter().enumerate() {
            for (acc, a) in out.iter_mut().zip(self.row(k)) {
                cmul_add(acc, a, b);
            }
        }
        out
    }

    /// Frobenius norm, evaluated in `f64`.
    pub fn frobenius(&self) -> f64 {
        vec_norm(&self.data)
    }

    /// Largest entry modulus, evaluated in `f64`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| cabs(z)).fold(0.0, f64::max)
    }

    /// Conversion to another scalar type at the given precision.
    pub fn convert<U: Real>(&self, bits: usize) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| lift(&to_c64(z), bits)).collect(),
        }
    }

    pub fn to_c64(&self) -> CMat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(to_c64).collect() }
    }
}

impl CMat {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// `acc += a · b` on complex numbers, reusing the scalar's fused helpers.
#[inline]
pub fn cmul_add<T: Real>(acc: &mut Complex<T>, a: &Complex<T>, b: &Complex<T>) {
    T::mul_add_to(&mut acc.re, &a.re, &b.re);
    T::mul_sub_from(&mut acc.re, &a.im, &b.im);
    T::mul_add_to(&mut acc.im, &a.re, &b.im);
    T::mul_add_to(&mut acc.im, &a.im, &b.re);
}

pub fn to_c64<T: Real>(z: &Complex<T>) -> C64 {
    C64::new(z.re.to_f64(), z.im.to_f64())
}

pub fn lift<T: Real>(z: &C64, bits: usize) -> Complex<T> {
    Complex::new(T::from_f64_at(z.re, bits), T::from_f64_at(z.im, bits))
}

pub fn cabs<T: Real>(z: &Complex<T>) -> f64 {
    to_c64(z).norm()
}

/// Euclidean norm, evaluated in `f64` with scaling against overflow.
pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> f64 {
    let parts: Vec<f64> = v.iter().map(cabs).collect();
    let scale = parts.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * parts.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
