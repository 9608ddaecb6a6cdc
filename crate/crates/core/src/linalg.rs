//! Small dense real matrices.
//!
//! Everything in the analysis layer is at most about ten states wide, so the
//! kernel favours clarity over speed: row-major `Vec<f64>` storage, naive
//! triple-loop products, and Gaussian elimination with partial pivoting.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Pivots smaller than this (after partial pivoting) mark a matrix as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Dense row-major matrix of finite doubles.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    fn zip_with(&self, other: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn multiply(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "multiply: {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// `self^n` by repeated squaring; `self^0` is the identity.
    pub fn power(&self, n: u64) -> Result<Matrix> {
        self.require_square("power")?;
        let mut result = Matrix::identity(self.rows);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.multiply(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base)?;
            }
        }
        Ok(result)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix> {
        self.require_square("inverse")?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let (pivot_row, pivot_abs) =
                (col..n)
                    .map(|r| (r, a[(r, col)].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs < SINGULAR_PIVOT {
                return Err(Error::Singular { pivot: pivot_abs });
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] -= f * a[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn require_square(&self, op: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{op} needs a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    /// Copies the block with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len().max(1), cols.len().max(1));
        for (oi, &i) in rows.iter().enumerate() {
            for (oj, &j) in cols.iter().enumerate() {
                out[(oi, oj)] = self[(i, j)];
            }
        }
        out
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }
}

/// `sum_{i=0}^{n-2} Q^i A Q^{n-i-1}`; the tail whose norm vanishes when `Q`
/// is a contraction in some matrix norm.
pub fn geometric_tail(n: u64, a: &Matrix, q: &Matrix) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "geometric_tail needs n >= 2, got {n}"
        )));
    }
    if !a.is_square() || !q.is_square() || a.rows != q.rows {
        return Err(Error::DimensionMismatch(format!(
            "geometric_tail: A is {}x{}, Q is {}x{}",
            a.rows, a.cols, q.rows, q.cols
        )));
    }
    let powers = q_powers(q, n)?;
    let mut acc = Matrix::zeros(a.rows, a.cols);
    for i in 0..=(n - 2) as usize {
        let term = powers[i]
            .multiply(a)?
            .multiply(&powers[n as usize - i - 1])?;
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// `[Q^0, Q^1, ..., Q^upto]`.
pub(crate) fn q_powers(q: &Matrix, upto: u64) -> Result<Vec<Matrix>> {
    let mut powers = Vec::with_capacity(upto as usize + 1);
    powers.push(Matrix::identity(q.rows));
    for k in 1..=upto as usize {
        let next = powers[k - 1].multiply(q)?;
        powers.push(next);
    }
    Ok(powers)
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Text form: a `rows cols` header line, then one line of space-separated
/// entries per row. Entries carry 17 significant digits.
impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad dimension {t:?}")))
            })
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!(
                "header must be `rows cols`, got {header:?}"
            )));
        };
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {}", r + 1)))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad entry {t:?}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {cols}",
                    r + 1,
                    row.len()
                )));
            }
            data.extend(row);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content {extra:?}")));
        }
        Matrix::new(rows, cols, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_times_m() {
        let a = m(&[&[1.5, -2.0], &[0.25, 7.0]]);
        assert_eq!(Matrix::identity(2).multiply(&a).unwrap(), a);
    }

    #[test]
    fn swap_is_involution() {
        let p = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(p.multiply(&p).unwrap(), Matrix::identity(2));
        assert_eq!(p.power(2).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn multiply_rejects_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(a.multiply(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn power_edge_cases() {
        let a = m(&[&[0.2, 0.3], &[0.1, 0.9]]);
        assert_eq!(a.power(1).unwrap(), a);
        assert_eq!(a.power(0).unwrap(), Matrix::identity(2));
        assert!(Matrix::zeros(2, 3).power(2).is_err());
    }

    #[test]
    fn hadamard_cases() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(a.hadamard(&b).unwrap(), m(&[&[5.0, 12.0], &[21.0, 32.0]]));
        assert_eq!(
            Matrix::zeros(2, 2).hadamard(&a).unwrap(),
            Matrix::zeros(2, 2)
        );
        assert!(Matrix::zeros(2, 3).hadamard(&Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn inverse_cases() {
        let d = m(&[&[2.0, 0.0], &[0.0, 4.0]]);
        assert_eq!(d.inverse().unwrap(), m(&[&[0.5, 0.0], &[0.0, 0.25]]));
        assert_eq!(Matrix::identity(3).inverse().unwrap(), Matrix::identity(3));
        assert!(matches!(
            m(&[&[1.0, 1.0], &[1.0, 1.0]]).inverse(),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn inverse_needs_pivoting() {
        let a = m(&[&[0.0, 1.0], &[2.0, 3.0]]);
        let inv = a.inverse().unwrap();
        assert!(inv.multiply(&a).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn geometric_tail_small_cases() {
        let a = m(&[&[0.3, 0.1], &[0.0, 0.5]]);
        let q = m(&[&[0.4, 0.2], &[0.1, 0.6]]);
        let g2 = geometric_tail(2, &a, &q).unwrap();
        assert!(g2.max_abs_diff(&a.multiply(&q).unwrap()) < 1e-15);

        let g3 = geometric_tail(3, &m(&[&[1.0]]), &m(&[&[0.5]])).unwrap();
        assert!((g3[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(geometric_tail(1, &a, &q).is_err());
    }

    #[test]
    fn geometric_tail_scalar_decays() {
        let one = m(&[&[1.0]]);
        let half = m(&[&[0.5]]);
        let mut prev = f64::INFINITY;
        for n in 4..40u64 {
            let g = geometric_tail(n, &one, &half).unwrap()[(0, 0)];
            let expected = (n - 1) as f64 * 0.5f64.powi(n as i32 - 1);
            assert!((g - expected).abs() < 1e-15);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn text_round_trip() {
        let a = m(&[&[1.0 / 3.0, -2.5e-7], &[1e10, 0.1]]);
        let back: Matrix = a.to_string().parse().unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn parse_errors() {
        assert!("2 2\n1 2\n3".parse::<Matrix>().is_err());
        assert!("2 2\n1 2\n3 x".parse::<Matrix>().is_err());
        assert!("1 1\n1\n2".parse::<Matrix>().is_err());
        assert!("1 1\nNaN".parse::<Matrix>().is_err());
    }
}
