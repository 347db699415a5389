//! GABBA mother matrices as symbolic structures.
//!
//! A code entry is stored as `(raw index, sign, conjugation)` and never as an
//! expression tree. Checks such as density and completeness are therefore
//! exact, and instantiating a code with symbol values costs `O(K²)`.
//!
//! ```
//! use gabba::code_construction::build_mother;
//!
//! let c = build_mother(4).unwrap();
//! assert_eq!(c.dump().lines().nth(2), Some("-s3* s4* s1* -s2*"));
//! ```

use std::fmt;
use std::ops::Neg;

use crate::error::{GabbaError, Result};
use crate::matrix::{CMat, C64};

/// The three 2×2 block templates from which manifold matrices are grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `X(A, B) = [[A, B], [-B, A]]`.
    X,
    /// `H(A, B) = [[A, B], [B, -A]]`.
    H,
    /// `H̃(A, B) = [[A, -B], [B, A]]`.
    HTilde,
}

impl Generator {
    /// Which half of the vector feeds block `(bi, bj)` and with what sign.
    /// Returns `(takes_second_half, sign)`.
    fn block(self, bi: bool, bj: bool) -> (bool, i8) {
        match (self, bi, bj) {
            (_, false, false) => (false, 1),
            (Generator::X, false, true) | (Generator::H, false, true) => (true, 1),
            (Generator::HTilde, false, true) => (true, -1),
            (Generator::X, true, false) => (true, -1),
            (Generator::H, true, false) | (Generator::HTilde, true, false) => (true, 1),
            (Generator::H, true, true) => (false, -1),
            (_, true, true) => (false, 1),
        }
    }
}

/// Signed selection pattern of a manifold matrix: entry `(i, j)` equals
/// `sign · v[index]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldPattern {
    size: usize,
    cells: Vec<(usize, i8)>,
}

impl ManifoldPattern {
    /// Pattern of the manifold grown from a vector of length `size`.
    pub fn new(size: usize, generator: Generator) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(GabbaError::Dimension(format!("manifold length {size} is not a power of two")));
        }
        let mut cells = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                cells.push(Self::locate(size, generator, i, j));
            }
        }
        Ok(ManifoldPattern { size, cells })
    }

    fn locate(size: usize, generator: Generator, mut i: usize, mut j: usize) -> (usize, i8) {
        let mut n = size;
        let mut offset = 0;
        let mut sign = 1i8;
        while n > 1 {
            let h = n / 2;
            let (second, s) = generator.block(i >= h, j >= h);
            if second {
                offset += h;
            }
            sign *= s;
            i %= h;
            j %= h;
            n = h;
        }
        (offset, sign)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `(index, sign)` of entry `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> (usize, i8) {
        self.cells[i * self.size + j]
    }

    /// Instantiates the pattern with concrete values.
    pub fn apply<T: Clone + Neg<Output = T>>(&self, v: &[T]) -> Result<Vec<Vec<T>>> {
        if v.len() != self.size {
            return Err(GabbaError::LengthMismatch { expected: self.size, got: v.len() });
        }
        Ok((0..self.size)
            .map(|i| {
                (0..self.size)
                    .map(|j| {
                        let (idx, s) = self.cell(i, j);
                        if s > 0 {
                            v[idx].clone()
                        } else {
                            -v[idx].clone()
                        }
                    })
                    .collect()
            })
            .collect())
    }

    /// Instantiates the pattern as a complex matrix.
    pub fn matrix(&self, v: &[C64]) -> Result<CMat> {
        Ok(CMat::from_rows(&self.apply(v)?))
    }
}

/// Order-`log2 n` ABBA manifold of `v` under `generator`.
pub fn abba_manifold<T: Clone + Neg<Output = T>>(v: &[T], generator: Generator) -> Result<Vec<Vec<T>>> {
    ManifoldPattern::new(v.len(), generator)?.apply(v)
}

/// One entry of a symbolic code: `sign · s_raw_index`, conjugated when flagged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeEntry {
    /// One-based raw symbol index.
    pub raw_index: usize,
    pub sign: i8,
    pub conjugated: bool,
}

impl CodeEntry {
    pub fn symbol(raw_index: usize) -> Self {
        CodeEntry { raw_index, sign: 1, conjugated: false }
    }

    /// Hermitian partner of the entry (conjugation toggled, sign kept).
    pub fn conj(self) -> Self {
        CodeEntry { conjugated: !self.conjugated, ..self }
    }

    /// Value of the entry for the symbol vector `s` (zero-based storage).
    pub fn value(&self, s: &[C64]) -> C64 {
        let base = s[self.raw_index - 1];
        let v = if self.conjugated { base.conj() } else { base };
        if self.sign < 0 {
            -v
        } else {
            v
        }
    }
}

impl Neg for CodeEntry {
    type Output = CodeEntry;
    fn neg(self) -> CodeEntry {
        CodeEntry { sign: -self.sign, ..self }
    }
}

impl fmt::Display for CodeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}s{}{}",
            if self.sign < 0 { "-" } else { "" },
            self.raw_index,
            if self.conjugated { "*" } else { "" }
        )
    }
}

/// A K×K symbolic mother matrix together with the transmit columns kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingStructure {
    k: usize,
    entries: Vec<Vec<CodeEntry>>,
    selected_columns: Vec<usize>,
}

/// Smallest block size serving `n_t` transmit antennas.
pub fn block_size_for(n_t: usize) -> Result<usize> {
    if n_t == 0 {
        return Err(GabbaError::OutOfRange("n_t must be at least 1".into()));
    }
    Ok(n_t.next_power_of_two().max(2))
}

/// Builds `Y(Xⁿ⁻¹(s₁..s_{K/2}), Xⁿ⁻¹(s_{K/2+1}..s_K))` with
/// `Y(A, B) = [[A, B], [-Bᴴ, Aᴴ]]`.
pub fn build_mother(k: usize) -> Result<EncodingStructure> {
    if k < 2 || !k.is_power_of_two() {
        return Err(GabbaError::Dimension(format!("block size {k} must be a power of two >= 2")));
    }
    let half = k / 2;
    let lo: Vec<CodeEntry> = (1..=half).map(CodeEntry::symbol).collect();
    let hi: Vec<CodeEntry> = (half + 1..=k).map(CodeEntry::symbol).collect();
    let a = abba_manifold(&lo, Generator::X)?;
    let b = abba_manifold(&hi, Generator::X)?;
    let mut entries = vec![vec![CodeEntry::symbol(1); k]; k];
    for i in 0..half {
        for j in 0..half {
            entries[i][j] = a[i][j];
            entries[i][half + j] = b[i][j];
            entries[half + i][j] = -b[j][i].conj();
            entries[half + i][half + j] = a[j][i].conj();
        }
    }
    Ok(EncodingStructure { k, entries, selected_columns: (0..k).collect() })
}

impl EncodingStructure {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_t(&self) -> usize {
        self.selected_columns.len()
    }

    /// Zero-based indices of the transmit columns, strictly increasing.
    pub fn selected_columns(&self) -> &[usize] {
        &self.selected_columns
    }

    pub fn entry(&self, row: usize, col: usize) -> CodeEntry {
        self.entries[row][col]
    }

    /// Keeps the leftmost `n_t` columns of the mother matrix.
    pub fn puncture(&self, n_t: usize) -> Result<EncodingStructure> {
        if n_t == 0 || n_t > self.k {
            return Err(GabbaError::OutOfRange(format!("n_t = {n_t} outside 1..={}", self.k)));
        }
        Ok(EncodingStructure { selected_columns: (0..n_t).collect(), ..self.clone() })
    }

    /// Flips the sign of one mother entry. Used to exercise failure paths.
    pub fn with_flipped_sign(&self, row: usize, col: usize) -> EncodingStructure {
        let mut out = self.clone();
        out.entries[row][col] = -out.entries[row][col];
        out
    }

    /// Transmit matrix: rows are epochs, columns are the selected antennas.
    pub fn encode(&self, s: &[C64]) -> Result<CMat> {
        if s.len() != self.k {
            return Err(GabbaError::LengthMismatch { expected: self.k, got: s.len() });
        }
        Ok(CMat::from_fn(self.k, self.n_t(), |i, j| self.entries[i][self.selected_columns[j]].value(s)))
    }

    /// Every retained entry refers to a valid raw symbol.
    pub fn is_dense(&self) -> bool {
        self.entries
            .iter()
            .flat_map(|row| self.selected_columns.iter().map(move |&c| row[c]))
            .all(|e| (1..=self.k).contains(&e.raw_index) && e.sign != 0)
    }

    /// Raw indices in every row and every retained column are distinct, and
    /// for the full selection they form a permutation of `1..=K`.
    pub fn is_complete(&self) -> bool {
        let full = self.n_t() == self.k;
        let distinct = |idx: &mut Vec<usize>| {
            idx.sort_unstable();
            let n = idx.len();
            idx.dedup();
            idx.len() == n && (!full || idx.iter().copied().eq(1..=self.k))
        };
        let rows_ok = self.entries.iter().all(|row| {
            let mut idx: Vec<usize> = self.selected_columns.iter().map(|&c| row[c].raw_index).collect();
            distinct(&mut idx)
        });
        let cols_ok = self.selected_columns.iter().all(|&c| {
            let mut idx: Vec<usize> = self.entries.iter().map(|row| row[c].raw_index).collect();
            distinct(&mut idx)
        });
        rows_ok && cols_ok
    }

    /// One line per row, entries such as `-s3*` separated by spaces.
    pub fn dump(&self) -> String {
        self.entries
            .iter()
            .map(|row| {
                self.selected_columns.iter().map(|&c| row[c].to_string()).collect::<Vec<_>>().join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Quasi-orthogonality summary of `C·Cᴴ`.
#[derive(Clone, Debug)]
pub struct GramCheck {
    /// Upper-left `K/2 × K/2` block, equal to `A·Aᴴ + B·Bᴴ`.
    pub diagonal_block: CMat,
    /// Upper-right `K/2 × K/2` block, which should vanish.
    pub off_diagonal_block: CMat,
    /// Largest modulus in either off-diagonal block.
    pub residual: f64,
}

/// Forms `C·Cᴴ` for a full mother matrix and extracts its blocks.
pub fn gram_check(c: &CMat) -> Result<GramCheck> {
    let k = c.rows();
    if c.cols() != k || k < 2 || k % 2 != 0 {
        return Err(GabbaError::Dimension(format!("gram_check expects a square even matrix, got {}x{}", k, c.cols())));
    }
    let g = c.mul(&c.adjoint());
    let h = k / 2;
    let upper = g.block(0, h, h, k);
    let lower = g.block(h, k, 0, h);
    let residual = upper.max_abs().max(lower.max_abs());
    Ok(GramCheck { diagonal_block: g.block(0, h, 0, h), off_diagonal_block: upper, residual })
}
