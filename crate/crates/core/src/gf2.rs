//! Dense binary linear algebra over GF(2) for small matrices.
//!
//! Matrices are at most 8×8 and stored one row per byte, so every matrix is
//! a plain `Copy` value. Column `c` of a row lives in bit `c` of that byte.

use std::fmt;

use thiserror::Error;

/// Largest supported row or column count.
pub const MAX_DIM: usize = 8;

/// Largest `rows * cols` accepted by [`enumerate_matrices`].
pub const MAX_ENUMERATION_BITS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("invalid shape {rows}x{cols} (each dimension must be in 1..={MAX_DIM})")]
    InvalidShape { rows: usize, cols: usize },
    #[error("dimension mismatch: left operand has {left} columns, right operand has {right} rows")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular over GF(2)")]
    Singular,
    #[error(
        "cannot enumerate {rows}x{cols} matrices ({bits} bits exceeds {MAX_ENUMERATION_BITS})"
    )]
    EnumerationTooLarge {
        rows: usize,
        cols: usize,
        bits: usize,
    },
    #[error("entry must be 0 or 1, got {0:?}")]
    BadEntry(char),
    #[error("bit must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("malformed matrix text: {0}")]
    Parse(String),
}

fn check_shape(rows: usize, cols: usize) -> Result<(), Gf2Error> {
    if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
        return Err(Gf2Error::InvalidShape { rows, cols });
    }
    Ok(())
}

fn col_mask(cols: usize) -> u8 {
    if cols == 8 {
        0xff
    } else {
        (1u8 << cols) - 1
    }
}

/// A binary vector of length 1..=8.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gf2Vector {
    len: u8,
    bits: u8,
}

impl Gf2Vector {
    pub fn zeros(len: usize) -> Result<Self, Gf2Error> {
        check_shape(1, len)?;
        Ok(Self {
            len: len as u8,
            bits: 0,
        })
    }

    /// Builds a vector from entries; any nonzero entry is rejected.
    pub fn from_bits(entries: &[u8]) -> Result<Self, Gf2Error> {
        check_shape(1, entries.len())?;
        let mut bits = 0u8;
        for (i, &e) in entries.iter().enumerate() {
            match e {
                0 => {}
                1 => bits |= 1 << i,
                _ => return Err(Gf2Error::BadBit(e)),
            }
        }
        Ok(Self {
            len: entries.len() as u8,
            bits,
        })
    }

    /// Interprets `value` as a counter whose most significant bit is entry 0.
    pub fn from_counter(value: u8, len: usize) -> Result<Self, Gf2Error> {
        check_shape(1, len)?;
        let mut bits = 0u8;
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                bits |= 1 << i;
            }
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    /// Inverse of [`Gf2Vector::from_counter`].
    pub fn to_counter(self) -> u8 {
        let len = self.len as usize;
        (0..len).fold(0u8, |acc, i| (acc << 1) | self.get(i))
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn get(self, i: usize) -> u8 {
        assert!(
            i < self.len(),
            "index {i} out of range for length {}",
            self.len
        );
        (self.bits >> i) & 1
    }

    pub fn to_vec(self) -> Vec<u8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Concatenates `self` and `other`; the combined length must stay within 8.
    pub fn concat(self, other: Gf2Vector) -> Result<Self, Gf2Error> {
        let len = self.len() + other.len();
        check_shape(1, len)?;
        Ok(Self {
            len: len as u8,
            bits: self.bits | (other.bits << self.len),
        })
    }

    pub(crate) fn raw(self) -> u8 {
        self.bits
    }
}

impl fmt::Debug for Gf2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Vector(")?;
        for i in 0..self.len() {
            write!(f, "{}", self.get(i))?;
        }
        write!(f, ")")
    }
}

/// A binary matrix with 1..=8 rows and columns.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: u8,
    cols: u8,
    data: [u8; MAX_DIM],
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        check_shape(rows, cols)?;
        Ok(Self {
            rows: rows as u8,
            cols: cols as u8,
            data: [0; MAX_DIM],
        })
    }

    pub fn identity(n: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i] = 1 << i;
        }
        Ok(m)
    }

    /// Parses rows written as strings of `'0'`/`'1'`, e.g. `["0100", "1000"]`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map(|r| r.as_ref().trim().len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref().trim();
            if row.len() != cols {
                return Err(Gf2Error::Parse(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.data[r] |= 1 << c,
                    other => return Err(Gf2Error::BadEntry(other)),
                }
            }
        }
        Ok(m)
    }

    /// Builds the matrix whose row-major bit pattern, read as an integer with
    /// entry (0, 0) as the most significant bit, equals `counter`.
    pub fn from_counter(counter: u64, rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(rows, cols)?;
        let n = rows * cols;
        for k in 0..n {
            if (counter >> (n - 1 - k)) & 1 == 1 {
                m.data[k / cols] |= 1 << (k % cols);
            }
        }
        Ok(m)
    }

    /// Position of this matrix in [`enumerate_matrices`] order.
    pub fn counter(&self) -> u64 {
        let mut v = 0u64;
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                v = (v << 1) | u64::from(self.get(r, c));
            }
        }
        v
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn cols(&self) -> usize {
        self.cols as usize
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        assert!(
            r < self.rows() && c < self.cols(),
            "index ({r}, {c}) out of range"
        );
        (self.data[r] >> c) & 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(
            r < self.rows() && c < self.cols(),
            "index ({r}, {c}) out of range"
        );
        if value {
            self.data[r] |= 1 << c;
        } else {
            self.data[r] &= !(1 << c);
        }
    }

    pub fn row_string(&self, r: usize) -> String {
        (0..self.cols())
            .map(|c| if self.get(r, c) == 1 { '1' } else { '0' })
            .collect()
    }

    /// Modulo-2 matrix-vector product.
    pub fn mul_vec(&self, v: Gf2Vector) -> Result<Gf2Vector, Gf2Error> {
        if self.cols() != v.len() {
            return Err(Gf2Error::DimensionMismatch {
                left: self.cols(),
                right: v.len(),
            });
        }
        let mut out = 0u8;
        for r in 0..self.rows() {
            out |= (((self.data[r] & v.raw()).count_ones() & 1) as u8) << r;
        }
        Ok(Gf2Vector {
            len: self.rows,
            bits: out,
        })
    }

    /// Modulo-2 matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols() != rhs.rows() {
            return Err(Gf2Error::DimensionMismatch {
                left: self.cols(),
                right: rhs.rows(),
            });
        }
        let mut out = Gf2Matrix::zeros(self.rows(), rhs.cols())?;
        for r in 0..self.rows() {
            let mut acc = 0u8;
            for k in 0..self.cols() {
                if self.get(r, k) == 1 {
                    acc ^= rhs.data[k];
                }
            }
            out.data[r] = acc;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix {
            rows: self.cols,
            cols: self.rows,
            data: [0; MAX_DIM],
        };
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                if self.get(r, c) == 1 {
                    t.data[c] |= 1 << r;
                }
            }
        }
        t
    }

    /// Rank over GF(2) by row reduction.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<u8> = self.data[..self.rows()].to_vec();
        let mut rank = 0;
        for c in 0..self.cols() {
            let bit = 1u8 << c;
            let Some(p) = (rank..rows.len()).find(|&i| rows[i] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && *row & bit != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inverse over GF(2).
    pub fn inverse(&self) -> Result<Gf2Matrix, Gf2Error> {
        if self.rows != self.cols {
            return Err(Gf2Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let n = self.rows();
        let mut a = self.data;
        let mut inv = Gf2Matrix::identity(n)?.data;
        for c in 0..n {
            let bit = 1u8 << c;
            let p = (c..n)
                .find(|&i| a[i] & bit != 0)
                .ok_or(Gf2Error::Singular)?;
            a.swap(c, p);
            inv.swap(c, p);
            for i in 0..n {
                if i != c && a[i] & bit != 0 {
                    a[i] ^= a[c];
                    inv[i] ^= inv[c];
                }
            }
        }
        Ok(Gf2Matrix {
            rows: self.rows,
            cols: self.cols,
            data: inv,
        })
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols != below.cols {
            return Err(Gf2Error::DimensionMismatch {
                left: self.cols(),
                right: below.cols(),
            });
        }
        let rows = self.rows() + below.rows();
        let mut out = Gf2Matrix::zeros(rows, self.cols())?;
        out.data[..self.rows()].copy_from_slice(&self.data[..self.rows()]);
        out.data[self.rows()..rows].copy_from_slice(&below.data[..below.rows()]);
        Ok(out)
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_slice(&self, start: usize, end: usize) -> Result<Gf2Matrix, Gf2Error> {
        if start >= end || end > self.rows() {
            return Err(Gf2Error::InvalidShape {
                rows: end.saturating_sub(start),
                cols: self.cols(),
            });
        }
        let mut out = Gf2Matrix::zeros(end - start, self.cols())?;
        out.data[..end - start].copy_from_slice(&self.data[start..end]);
        Ok(out)
    }

    /// Text block: one row per line as `'0'`/`'1'` characters.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.rows() {
            s.push_str(&self.row_string(r));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Gf2Matrix, Gf2Error> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Gf2Error::Parse("empty matrix block".into()));
        }
        Gf2Matrix::from_rows(&rows)
    }

    fn mask_ok(&self) -> bool {
        let mask = col_mask(self.cols());
        self.data[..self.rows()].iter().all(|r| r & !mask == 0)
            && self.data[self.rows()..].iter().all(|&r| r == 0)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows()).map(|r| self.row_string(r)).collect();
        write!(f, "Gf2Matrix[{}]", rows.join(";"))
    }
}

impl fmt::Display for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Writes matrices as blank-line separated text blocks.
pub fn write_blocks(matrices: &[Gf2Matrix]) -> String {
    matrices
        .iter()
        .map(Gf2Matrix::to_text)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses blank-line separated matrix blocks.
pub fn parse_blocks(text: &str) -> Result<Vec<Gf2Matrix>, Gf2Error> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() {
            if !current.is_empty() {
                out.push(Gf2Matrix::from_rows(&current)?);
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(Gf2Matrix::from_rows(&current)?);
    }
    Ok(out)
}

/// Iterator over every `rows x cols` binary matrix, ascending by counter.
#[derive(Debug, Clone)]
pub struct MatrixEnumeration {
    rows: usize,
    cols: usize,
    next: u64,
    end: u64,
}

impl Iterator for MatrixEnumeration {
    type Item = Gf2Matrix;

    fn next(&mut self) -> Option<Gf2Matrix> {
        if self.next >= self.end {
            return None;
        }
        let m = Gf2Matrix::from_counter(self.next, self.rows, self.cols).ok()?;
        debug_assert!(m.mask_ok());
        self.next += 1;
        Some(m)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for MatrixEnumeration {}

/// All `2^(rows*cols)` matrices, starting from the all-zero matrix.
pub fn enumerate_matrices(rows: usize, cols: usize) -> Result<MatrixEnumeration, Gf2Error> {
    check_shape(rows, cols)?;
    let bits = rows * cols;
    if bits > MAX_ENUMERATION_BITS {
        return Err(Gf2Error::EnumerationTooLarge { rows, cols, bits });
    }
    Ok(MatrixEnumeration {
        rows,
        cols,
        next: 0,
        end: 1u64 << bits,
    })
}
