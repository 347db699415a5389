//! Nested orthogonal decoder.
//!
//! The first stage splits the received block into two decoupled halves that
//! share one reduced channel matrix `M`. Each further stage multiplies every
//! working vector by `Mᵀ`, which makes `MᵀM` block-diagonal under a fixed
//! permutation, and halves the problem again. After `log2(K) − 1` stages every
//! symbol sits alone next to a real gain and is recovered by one division.
//!
//! Each stage squares the condition number of the working matrix, so the
//! chain loses accuracy quickly as `K` grows. Because the whole decoder is
//! linear and exact, its output must satisfy `M·ŝ = r̂` for both halves. The
//! residual of that identity is a noise-independent accuracy certificate.
//! [`decode`] runs in `f64` first and repeats the chain with more mantissa
//! bits until the certificate holds.
//!
//! ```
//! use gabba::code_construction::build_mother;
//! use gabba::matrix::C64;
//! use gabba::orthogonal_decoder::decode;
//!
//! let s = [C64::new(1.0, 0.5), C64::new(-0.25, 2.0)];
//! let h = vec![C64::new(0.8, -0.1), C64::new(0.3, 0.9)];
//! let x = build_mother(2).unwrap().encode(&s).unwrap();
//! let r = x.mul_vec(&h);
//! let out = decode(&[r], &[h], 2).unwrap();
//! assert!((out.estimates[0] - s[0]).norm() < 1e-12);
//! assert!((out.estimates[1] - s[1]).norm() < 1e-12);
//! ```

use num_complex::Complex;

use crate::code_construction::{Generator, ManifoldPattern};
use crate::encoded_channel::{build_encoded_channel, EncodedChannel};
use crate::error::{GabbaError, Result};
use crate::matrix::{lift, to_c64, vec_norm, CMat, Mat, C64};
use crate::scalar::{Mp, Real};

/// Relative residual `‖M·ŝ − r̂‖ / max(‖M‖·‖ŝ‖, ‖r̂‖)` accepted by [`decode`].
pub const CERTIFICATE_TOLERANCE: f64 = 1e-13;

/// Relative off-block residual above which a reduction is reported as a
/// structural failure.
pub const STRUCTURE_TOLERANCE: f64 = 1e-8;

/// Largest mantissa length tried before giving up.
pub const MAX_BITS: usize = 8192;

/// Mantissa bits reported for the `f64` backend.
pub const DOUBLE_BITS: usize = 53;

/// The two index sets that block-diagonalize `MᵀM`, zero-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPair {
    pub p0: Vec<usize>,
    pub p1: Vec<usize>,
}

impl PermutationPair {
    /// Both sets shifted to one-based indices.
    pub fn one_based(&self) -> (Vec<usize>, Vec<usize>) {
        (self.p0.iter().map(|x| x + 1).collect(), self.p1.iter().map(|x| x + 1).collect())
    }
}

/// `p(x) = (x + Σ_{n=1}^{⌈log2 N⌉−1} ⌊(x−1)/2ⁿ⌋) mod 2` for `x = 1..N`;
/// `p0` collects `p(x) = 1` and `p1` collects `p(x) = 0`.
pub fn permutation_indexes(n: usize) -> Result<PermutationPair> {
    if n < 2 || !n.is_power_of_two() {
        return Err(GabbaError::Dimension(format!("permutation size {n} must be a power of two >= 2")));
    }
    let depth = n.trailing_zeros() as usize;
    let (mut p0, mut p1) = (Vec::new(), Vec::new());
    for x in 1..=n {
        let parity = (1..depth).fold(x, |acc, j| acc + (x - 1) / (1 << j)) % 2;
        if parity == 1 {
            p0.push(x - 1);
        } else {
            p1.push(x - 1);
        }
    }
    Ok(PermutationPair { p0, p1 })
}

/// Matched filtering of one antenna's block into the two decoupled halves.
pub fn first_stage(r: &[C64], enc: &EncodedChannel) -> Result<(Vec<C64>, Vec<C64>)> {
    let k = enc.k();
    if r.len() != k {
        return Err(GabbaError::LengthMismatch { expected: k, got: r.len() });
    }
    let n = k / 2;
    let (top, bottom) = r.split_at(n);
    let combine = |j: usize| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            acc += enc.h1().get(i, j).conj() * top[i] + enc.h2().get(i, j) * bottom[i].conj();
        }
        acc
    };
    Ok(((0..n).map(combine).collect(), (n..k).map(combine).collect()))
}

/// A reduced channel matrix together with its reduction order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedChannel {
    pub order: usize,
    pub matrix: CMat,
}

/// First column of the order-1 reduced matrix `conj(½(H₁H₁ᴴ + H₂H₂ᴴ))`.
fn reduced_column(enc: &EncodedChannel) -> Vec<C64> {
    let n = enc.k() / 2;
    (0..n)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..enc.k() {
                acc += enc.h1().get(i, j) * enc.h1().get(0, j).conj();
                acc += enc.h2().get(i, j) * enc.h2().get(0, j).conj();
            }
            (acc * 0.5).conj()
        })
        .collect()
}

fn manifold_from_column(column: &[C64]) -> Result<CMat> {
    ManifoldPattern::new(column.len(), Generator::HTilde)?.matrix(column)
}

/// Order-1 reduced matrix, grown as the `H̃` manifold of its first column.
///
/// The dense products are available through [`reduce_channel_dense`].
pub fn reduce_channel(enc: &EncodedChannel) -> Result<ReducedChannel> {
    Ok(ReducedChannel { order: 1, matrix: manifold_from_column(&reduced_column(enc))? })
}

/// Which column half of the minors the dense reduced matrix is formed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    Upper,
    Lower,
}

/// `H₁[:,P]ᴴ·H₁[:,P] + H₂[:,P]ᵀ·conj(H₂[:,P])` for the chosen column half `P`.
pub fn reduce_channel_dense(enc: &EncodedChannel, partition: Partition) -> CMat {
    let k = enc.k();
    let n = k / 2;
    let (c0, c1) = match partition {
        Partition::Upper => (0, n),
        Partition::Lower => (n, k),
    };
    let a = enc.h1().block(0, n, c0, c1);
    let b = enc.h2().block(0, n, c0, c1);
    a.adjoint().mul(&a).add(&b.transpose().mul(&b.conj()))
}

/// Outcome of one reduction stage.
#[derive(Clone, Debug)]
pub struct Reduction<T> {
    /// `MᵀM` restricted to the `p0` rows and columns.
    pub h1: Mat<T>,
    /// `MᵀM` restricted to the `p1` rows and columns.
    pub h2: Mat<T>,
    /// Next-order reduced matrix `ℋ₁ᵀ·ℋ₂`.
    pub next: Mat<T>,
    /// Largest off-block modulus of `MᵀM` relative to its Frobenius norm.
    pub off_block: f64,
    /// `‖ℋ₁ᵀℋ₂ − ℋ₂ᵀℋ₁‖ / ‖ℋ₁ᵀℋ₂‖`.
    pub commutator: f64,
}

/// One reduction with the permutation pair of the matrix's own size.
pub fn higher_order_reduce<T: Real>(m: &Mat<T>, order: usize) -> Result<Reduction<T>> {
    let pair = permutation_indexes(m.rows())?;
    reduce_with(m, &pair.p0, &pair.p1, order)
}

fn reduce_with<T: Real>(m: &Mat<T>, q0: &[usize], q1: &[usize], order: usize) -> Result<Reduction<T>> {
    let gram = m.transpose_mul(m);
    let norm = gram.frobenius();
    let off = gram.select(q0, q1).max_abs().max(gram.select(q1, q0).max_abs());
    let off_block = if norm > 0.0 { off / norm } else { f64::INFINITY };
    if !(off_block <= STRUCTURE_TOLERANCE) {
        return Err(GabbaError::StructuralFailure { order, size: m.rows(), residual: off_block });
    }
    let h1 = gram.select(q0, q0);
    let h2 = gram.select(q1, q1);
    let next = h1.transpose_mul(&h2);
    let commutator = if h1.rows() > 1 {
        let other = h2.transpose_mul(&h1);
        let scale = next.frobenius();
        if scale > 0.0 {
            next.sub(&other).frobenius() / scale
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    };
    Ok(Reduction { h1, h2, next, off_block, commutator })
}

/// Symbol index (zero-based) carried by each raw decoder output.
pub fn symbol_order(k: usize) -> Result<Vec<usize>> {
    if k < 2 || !k.is_power_of_two() {
        return Err(GabbaError::Dimension(format!("block size {k} must be a power of two >= 2")));
    }
    let n = k / 2;
    let mut lists: Vec<Vec<usize>> = vec![(0..n).collect(), (n..k).collect()];
    if n >= 2 {
        let pair = permutation_indexes(n)?;
        let mut size = n;
        while size >= 2 {
            let (q0, q1) = (&pair.p0[..size / 2], &pair.p1[..size / 2]);
            lists = lists
                .iter()
                .flat_map(|l| [q0.iter().map(|&i| l[i]).collect(), q1.iter().map(|&i| l[i]).collect()])
                .collect();
            size /= 2;
        }
    }
    Ok(lists.into_iter().flatten().collect())
}

/// Working precision for the nested chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// `f64` first, then escalating mantissa lengths until certified.
    Auto,
    /// A single `f64` pass.
    Double,
    /// A single pass with the given mantissa length.
    Bits(usize),
}

/// Per-stage structural diagnostics recorded during decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct StageDiagnostics {
    /// Order of the reduced matrix entering the stage (1 for the first).
    pub order: usize,
    pub size: usize,
    pub off_block: f64,
    pub commutator: f64,
}

/// Soft estimates and bookkeeping of one decode.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Estimates ordered `s₁..s_K`.
    pub estimates: Vec<C64>,
    /// Estimates in raw decoder order; see [`symbol_order`].
    pub raw: Vec<C64>,
    /// Terminal real gain of the normalized chain.
    pub gain: f64,
    /// Relative gap between the two terminal gains.
    pub gain_mismatch: f64,
    /// Mantissa bits of the pass that produced the estimates.
    pub bits: usize,
    /// Accuracy certificate of the returned estimates.
    pub residual: f64,
    pub stages: Vec<StageDiagnostics>,
}

/// Aggregated first-stage quantities over all receive antennas.
#[derive(Clone, Debug)]
struct Prepared {
    k: usize,
    y1: Vec<C64>,
    y2: Vec<C64>,
    m: CMat,
}

fn prepare(received: &[Vec<C64>], channels: &[Vec<C64>], k: usize) -> Result<Prepared> {
    if k < 2 || !k.is_power_of_two() {
        return Err(GabbaError::Dimension(format!("block size {k} must be a power of two >= 2")));
    }
    if received.is_empty() {
        return Err(GabbaError::OutOfRange("at least one receive antenna is required".into()));
    }
    if received.len() != channels.len() {
        return Err(GabbaError::LengthMismatch { expected: received.len(), got: channels.len() });
    }
    if channels.iter().all(|h| h.iter().all(|g| g.norm_sqr() == 0.0)) {
        return Err(GabbaError::DegenerateChannel);
    }
    let n = k / 2;
    let mut y1 = vec![C64::new(0.0, 0.0); n];
    let mut y2 = vec![C64::new(0.0, 0.0); n];
    let mut column = vec![C64::new(0.0, 0.0); n];
    for (r, h) in received.iter().zip(channels) {
        let enc = build_encoded_channel(h, k)?;
        let (a, b) = first_stage(r, &enc)?;
        for i in 0..n {
            y1[i] += a[i];
            y2[i] += b[i];
        }
        for (acc, x) in column.iter_mut().zip(reduced_column(&enc)) {
            *acc += x;
        }
    }
    Ok(Prepared { k, y1, y2, m: manifold_from_column(&column)? })
}

struct ChainOutput {
    estimates: Vec<C64>,
    raw: Vec<C64>,
    gain: f64,
    gain_mismatch: f64,
    residual: f64,
    stages: Vec<StageDiagnostics>,
}

fn cdiv<T: Real>(z: &Complex<T>, d: &T) -> Complex<T> {
    Complex::new(z.re.div_ref(d), z.im.div_ref(d))
}

fn div_all<T: Real>(v: &[Complex<T>], d: &T) -> Vec<Complex<T>> {
    v.iter().map(|z| cdiv(z, d)).collect()
}

fn run_chain<T: Real>(prep: &Prepared, bits: usize) -> Result<ChainOutput> {
    let k = prep.k;
    let n = k / 2;
    let m0: Mat<T> = prep.m.convert(bits);
    let y1: Vec<Complex<T>> = prep.y1.iter().map(|z| lift(z, bits)).collect();
    let y2: Vec<Complex<T>> = prep.y2.iter().map(|z| lift(z, bits)).collect();

    let scale = T::from_f64_at(m0.frobenius(), bits);
    let mut m = m0.div_real(&scale);
    let mut vecs = vec![div_all(&y1, &scale), div_all(&y2, &scale)];
    let mut stages = Vec::new();
    let (g0, g1);

    if n == 1 {
        g0 = m.get(0, 0).re.clone();
        g1 = g0.clone();
    } else {
        let pair = permutation_indexes(n)?;
        let mut order = 1;
        loop {
            let size = m.rows();
            let (q0, q1) = (&pair.p0[..size / 2], &pair.p1[..size / 2]);
            let red = reduce_with(&m, q0, q1, order)?;
            stages.push(StageDiagnostics { order, size, off_block: red.off_block, commutator: red.commutator });
            let mut split = Vec::with_capacity(2 * vecs.len());
            for v in &vecs {
                let z = m.transpose_mul_vec(v);
                split.push(q0.iter().map(|&i| z[i].clone()).collect::<Vec<_>>());
                split.push(q1.iter().map(|&i| z[i].clone()).collect::<Vec<_>>());
            }
            if size == 2 {
                g0 = red.h1.get(0, 0).re.clone();
                g1 = red.h2.get(0, 0).re.clone();
                vecs = split;
                break;
            }
            let norm = red.next.frobenius();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(GabbaError::StructuralFailure { order: order + 1, size: size / 2, residual: f64::INFINITY });
            }
            let scale = T::from_f64_at(norm, bits);
            vecs = split
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let w = if i % 2 == 0 { red.h2.transpose_mul_vec(v) } else { red.h1.transpose_mul_vec(v) };
                    div_all(&w, &scale)
                })
                .collect();
            m = red.next.div_real(&scale);
            order += 1;
        }
    }

    if g0.is_zero() || g1.is_zero() {
        return Err(GabbaError::StructuralFailure { order: stages.len() + 1, size: 1, residual: f64::INFINITY });
    }
    let raw: Vec<Complex<T>> =
        vecs.iter().enumerate().map(|(i, v)| cdiv(&v[0], if i % 2 == 0 { &g0 } else { &g1 })).collect();
    let order = symbol_order(k)?;
    let mut est = vec![Complex::new(T::zero(), T::zero()); k];
    for (value, &idx) in raw.iter().zip(&order) {
        est[idx] = value.clone();
    }

    let residual = certificate(&m0, &y1, &y2, &est);
    let (a, b) = (g0.to_f64(), g1.to_f64());
    Ok(ChainOutput {
        estimates: est.iter().map(to_c64).collect(),
        raw: raw.iter().map(to_c64).collect(),
        gain: 0.5 * (a + b),
        gain_mismatch: (a - b).abs() / a.abs().max(b.abs()),
        residual,
        stages,
    })
}

fn certificate<T: Real>(m: &Mat<T>, y1: &[Complex<T>], y2: &[Complex<T>], est: &[Complex<T>]) -> f64 {
    let n = y1.len();
    let mut worst: f64 = 0.0;
    for (y, s) in [(y1, &est[..n]), (y2, &est[n..])] {
        let fitted = m.mul_vec(s);
        let diff: Vec<Complex<T>> = fitted.iter().zip(y).map(|(a, b)| a.clone() - b.clone()).collect();
        let num = vec_norm(&diff);
        let den = (m.frobenius() * vec_norm(s)).max(vec_norm(y));
        let rel = if num == 0.0 { 0.0 } else if den > 0.0 { num / den } else { f64::INFINITY };
        worst = worst.max(rel);
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

fn finish(out: ChainOutput, bits: usize) -> DecodeResult {
    DecodeResult {
        estimates: out.estimates,
        raw: out.raw,
        gain: out.gain,
        gain_mismatch: out.gain_mismatch,
        bits,
        residual: out.residual,
        stages: out.stages,
    }
}

/// First mantissa length tried after `f64` for block size `k`.
pub fn initial_bits(k: usize) -> usize {
    (2 * k).max(128).next_multiple_of(64)
}

/// Decodes one block received on `n_r` antennas.
///
/// `received[a]` holds the `K` samples of antenna `a` and `channels[a]` its
/// `n_t` channel gains.
pub fn decode(received: &[Vec<C64>], channels: &[Vec<C64>], k: usize) -> Result<DecodeResult> {
    decode_with(received, channels, k, Precision::Auto)
}

/// [`decode`] with an explicit precision policy.
pub fn decode_with(
    received: &[Vec<C64>],
    channels: &[Vec<C64>],
    k: usize,
    precision: Precision,
) -> Result<DecodeResult> {
    let prep = prepare(received, channels, k)?;
    match precision {
        Precision::Double => Ok(finish(run_chain::<f64>(&prep, DOUBLE_BITS)?, DOUBLE_BITS)),
        Precision::Bits(bits) => Ok(finish(run_chain::<Mp>(&prep, bits)?, bits)),
        Precision::Auto => {
            let mut last = match run_chain::<f64>(&prep, DOUBLE_BITS) {
                Ok(out) if out.residual <= CERTIFICATE_TOLERANCE => return Ok(finish(out, DOUBLE_BITS)),
                Ok(out) => GabbaError::PrecisionExhausted { bits: DOUBLE_BITS, residual: out.residual },
                Err(e @ GabbaError::StructuralFailure { .. }) => e,
                Err(e) => return Err(e),
            };
            let mut bits = initial_bits(k);
            while bits <= MAX_BITS {
                last = match run_chain::<Mp>(&prep, bits) {
                    Ok(out) if out.residual <= CERTIFICATE_TOLERANCE => return Ok(finish(out, bits)),
                    Ok(out) => GabbaError::PrecisionExhausted { bits, residual: out.residual },
                    Err(e @ GabbaError::StructuralFailure { .. }) => e,
                    Err(e) => return Err(e),
                };
                bits *= 2;
            }
            Err(last)
        }
    }
}

/// Flattened single-step combiners for every symbol.
#[derive(Clone, Debug)]
pub struct CombinerWeights {
    /// Row `k` holds `F_{k:1}`, one entry per stacked received sample.
    pub f1: CMat,
    /// Row `k` holds `F_{k:2}`.
    pub f2: CMat,
    /// Response of each symbol's combiner to that symbol sent alone.
    pub alpha: Vec<f64>,
    /// Total channel energy `Σ|h|²` over all antenna pairs.
    pub energy: f64,
}

impl CombinerWeights {
    /// `ŝ_k = F_{k:1}ᴴ·r + conj(r)ᵀ·F_{k:2}` on the antenna-stacked samples.
    pub fn apply(&self, received: &[Vec<C64>]) -> Vec<C64> {
        let r: Vec<C64> = received.iter().flatten().copied().collect();
        (0..self.f1.rows())
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                for (j, x) in r.iter().enumerate() {
                    acc += self.f1.get(k, j).conj() * x + x.conj() * self.f2.get(k, j);
                }
                acc
            })
            .collect()
    }
}

/// Recovers the combiners by decoding unit and imaginary-unit probes.
///
/// The decoder is linear in `(r, conj(r))`: probing with `e_j` gives
/// `a_j + b_j` and probing with `i·e_j` gives `i·(a_j − b_j)`.
pub fn combiner_weights(channels: &[Vec<C64>], k: usize) -> Result<CombinerWeights> {
    let n_r = channels.len();
    let total = k * n_r;
    let mut f1 = CMat::zeros(k, total);
    let mut f2 = CMat::zeros(k, total);
    let i = C64::new(0.0, 1.0);
    for j in 0..total {
        let probe = |value: C64| {
            let mut received = vec![vec![C64::new(0.0, 0.0); k]; n_r];
            received[j / k][j % k] = value;
            decode(&received, channels, k).map(|d| d.estimates)
        };
        let real = probe(C64::new(1.0, 0.0))?;
        let imag = probe(i)?;
        for s in 0..k {
            let a = 0.5 * (real[s] - i * imag[s]);
            let b = 0.5 * (real[s] + i * imag[s]);
            f1.set(s, j, a.conj());
            f2.set(s, j, b);
        }
    }
    let mut weights = CombinerWeights { f1, f2, alpha: Vec::new(), energy: 0.0 };
    weights.energy = channels.iter().flatten().map(|g| g.norm_sqr()).sum();
    let structure = crate::code_construction::build_mother(k)?;
    for s in 0..k {
        let mut unit = vec![C64::new(0.0, 0.0); k];
        unit[s] = C64::new(1.0, 0.0);
        let x = structure.encode(&unit)?;
        let received: Vec<Vec<C64>> = channels
            .iter()
            .map(|h| crate::encoded_channel::extend_channel(h, k).map(|hp| x.mul_vec(&hp)))
            .collect::<Result<_>>()?;
        weights.alpha.push(weights.apply(&received)[s].re);
    }
    Ok(weights)
}
