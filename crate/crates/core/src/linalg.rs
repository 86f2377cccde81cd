//! Exact integer and rational linear algebra.
//!
//! Coboundary and incidence matrices in this crate have small integer
//! entries, so ranks and kernels are computed exactly. Elimination runs in
//! `i128` with overflow checks and restarts over `BigInt` if an intermediate
//! value ever leaves that range. A floating SVD rank is kept as a cross-check.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`,
    /// scaled by `sign`.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &IntMatrix, sign: i64) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                let v = block.get(r, c);
                if v != 0 {
                    let idx = (r0 + r) * self.cols + c0 + c;
                    self.data[idx] += sign * v;
                }
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Exact product. Panics on shape mismatch.
    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b != 0 {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(blocks: &[IntMatrix], cols: usize) -> IntMatrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            assert_eq!(b.cols, cols, "column mismatch in vstack");
            data.extend_from_slice(&b.data);
        }
        IntMatrix { rows, cols, data }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) as f64)
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        rank_i128(self).unwrap_or_else(|| rank_bigint(self))
    }

    /// Rank from singular values above `tol`.
    pub fn rank_float(&self, tol: f64) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let svd = self.to_f64().svd(false, false);
        svd.singular_values.iter().filter(|s| **s > tol).count()
    }

    /// Basis of the right kernel over the rationals.
    pub fn null_space(&self) -> Vec<Vec<BigRational>> {
        let rows: Vec<Vec<BigRational>> = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .map(|&v| BigRational::from_integer(BigInt::from(v)))
                    .collect()
            })
            .collect();
        rational_null_space(&rows, self.cols)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

// Row-sparse fraction-free elimination. Only rows with a nonzero entry in the
// pivot column are touched, and every updated row is divided by the gcd of its
// entries, which keeps magnitudes small for 0/±1 inputs.
fn rank_i128(m: &IntMatrix) -> Option<usize> {
    let mut rows: Vec<Vec<i128>> = (0..m.rows)
        .map(|r| m.row(r).iter().map(|&v| v as i128).collect())
        .filter(|row: &Vec<i128>| row.iter().any(|&v| v != 0))
        .collect();
    let mut rank = 0;
    for c in 0..m.cols {
        if rows.is_empty() {
            break;
        }
        let pivot = rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row[c] != 0)
            .min_by_key(|(_, row)| row.iter().filter(|&&v| v != 0).count())
            .map(|(i, _)| i);
        let Some(p) = pivot else { continue };
        let prow = rows.swap_remove(p);
        let a = prow[c];
        for row in rows.iter_mut() {
            let b = row[c];
            if b == 0 {
                continue;
            }
            let mut g = 0i128;
            for j in c..m.cols {
                let v = a.checked_mul(row[j])?.checked_sub(b.checked_mul(prow[j])?)?;
                row[j] = v;
                g = g.gcd(&v);
            }
            if g > 1 {
                for v in row[c..].iter_mut() {
                    *v /= g;
                }
            }
        }
        rows.retain(|row| row.iter().any(|&v| v != 0));
        rank += 1;
    }
    Some(rank)
}

fn rank_bigint(m: &IntMatrix) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|r| m.row(r).iter().map(|&v| BigInt::from(v)).collect())
        .filter(|row: &Vec<BigInt>| row.iter().any(|v| !v.is_zero()))
        .collect();
    let mut rank = 0;
    for c in 0..m.cols {
        let Some(p) = rows.iter().position(|row| !row[c].is_zero()) else {
            continue;
        };
        let prow = rows.swap_remove(p);
        let a = prow[c].clone();
        for row in rows.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let b = row[c].clone();
            let mut g = BigInt::zero();
            for j in c..m.cols {
                row[j] = &a * &row[j] - &b * &prow[j];
                g = g.gcd(&row[j]);
            }
            if g > BigInt::one() {
                for v in row[c..].iter_mut() {
                    *v = &*v / &g;
                }
            }
        }
        rows.retain(|row| row.iter().any(|v| !v.is_zero()));
        rank += 1;
    }
    rank
}

/// Reduced row echelon form over Q, returning the pivot columns.
pub fn rref(rows: &mut [Vec<BigRational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut pr = 0;
    for c in 0..cols {
        if pr >= rows.len() {
            break;
        }
        let Some(found) = (pr..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(pr, found);
        let inv = rows[pr][c].recip();
        for v in rows[pr].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = rows[pr].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pr || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v = &*v - &factor * p;
                }
            }
        }
        pivots.push(c);
        pr += 1;
    }
    pivots
}

/// Rank over Q by rational row reduction. Slow; used as an oracle.
pub fn rational_rank(m: &IntMatrix) -> usize {
    let mut rows: Vec<Vec<BigRational>> = (0..m.rows)
        .map(|r| {
            m.row(r)
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect();
    rref(&mut rows, m.cols).len()
}

/// Kernel basis of a rational matrix given by rows with `cols` columns.
pub fn rational_null_space(rows: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
    let mut a = rows.to_vec();
    let pivots = rref(&mut a, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![BigRational::zero(); cols];
            v[fc] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][fc].clone();
            }
            v
        })
        .collect()
}

/// Applies an integer matrix to a rational vector.
pub fn apply_rational(m: &IntMatrix, v: &[BigRational]) -> Vec<BigRational> {
    assert_eq!(m.cols(), v.len());
    (0..m.rows())
        .map(|r| {
            m.row(r)
                .iter()
                .zip(v)
                .filter(|(a, _)| **a != 0)
                .fold(BigRational::zero(), |acc, (a, x)| {
                    acc + BigRational::from_integer(BigInt::from(*a)) * x
                })
        })
        .collect()
}

/// Parses `"3"`, `"-3/4"` and similar.
pub fn parse_rational(text: &str) -> crate::Result<BigRational> {
    text.trim()
        .parse::<BigRational>()
        .map_err(|e| crate::Error::Parse(format!("`{text}` is not a rational number: {e}")))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => q.to_f64().unwrap_or(f64::NAN),
    }
}

pub fn rational_abs_max(v: &[BigRational]) -> BigRational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(IntMatrix::identity(5).rank(), 5);
        assert_eq!(IntMatrix::zeros(3, 4).rank(), 0);
        assert_eq!(IntMatrix::zeros(0, 4).rank(), 0);
        assert_eq!(IntMatrix::zeros(4, 0).rank(), 0);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = IntMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 2, 1]]);
        assert_eq!(m.rank(), 2);
        assert_eq!(rational_rank(&m), 2);
        assert_eq!(m.rank_float(1e-9), 2);
    }

    #[test]
    fn bigint_fallback_agrees() {
        let m = IntMatrix::from_rows(&[
            vec![1, -1, 0, 0],
            vec![0, 1, -1, 0],
            vec![0, 0, 1, -1],
            vec![-1, 0, 0, 1],
        ]);
        assert_eq!(rank_bigint(&m), 3);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn null_space_of_pairwise_sum_incidence() {
        // 4 inputs summed pairwise into 2 outputs.
        let m = IntMatrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 0, 1, 1]]);
        let ns = m.null_space();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(apply_rational(&m, v).iter().all(Zero::is_zero));
        }
        // basis vectors have the shape (t, -t, s, -s)
        for v in &ns {
            assert_eq!(v[0], -v[1].clone());
            assert_eq!(v[2], -v[3].clone());
        }
    }

    #[test]
    fn product_and_transpose() {
        let a = IntMatrix::from_rows(&[vec![1, 2], vec![0, -1]]);
        let b = IntMatrix::from_rows(&[vec![3], vec![4]]);
        assert_eq!(a.mul(&b), IntMatrix::from_rows(&[vec![11], vec![-4]]));
        assert_eq!(a.transpose().get(1, 0), 2);
    }
}
