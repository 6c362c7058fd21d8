//! Row-major dense matrices and LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

/// Square or rectangular dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged row {i}");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn copy_from(&mut self, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.copy_from_slice(&other.data);
    }

    /// `out = self * x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = selfᵀ * y`
    pub fn mul_transpose_vec(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Raised when a pivot falls below the singularity threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub column: usize,
}

/// An owned factorization for repeated solves.
pub struct LuFactor {
    lu: DenseMatrix,
    pivots: Pivots,
}

/// Relative pivot magnitude below which the matrix is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-13;

impl LuFactor {
    pub fn factor(mut a: DenseMatrix) -> Result<Self, Singular> {
        let pivots = factor_in_place(&mut a)?;
        Ok(Self { lu: a, pivots })
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        lu_solve(&self.lu, &self.pivots, b, x);
    }
}

/// Row permutation and nonzero profile of a factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pivots {
    /// Row `k` of the factors is row `perm[k]` of the input.
    pub perm: Vec<usize>,
    /// First stored column of each factor row (the L part starts here).
    start: Vec<usize>,
    /// One past the last stored column of each factor row (U part).
    end: Vec<usize>,
}

/// Factors `a` in place as `PA = LU`.
///
/// Each row's first and last nonzero columns are tracked, and column `k` is
/// searched only down to the last row whose first nonzero sits at or before
/// `k`. Rows past that limit are never swapped and never filled at or before
/// column `k`. Work stays inside the profile of the matrix, so banded matrices
/// factor in time proportional to `n·b²` rather than `n³`.
pub fn factor_in_place(a: &mut DenseMatrix) -> Result<Pivots, Singular> {
    let n = a.rows;
    assert_eq!(n, a.cols, "LU needs a square matrix");
    let mut scale = 1.0_f64;
    let mut start = vec![n; n];
    let mut end = vec![0; n];
    for (i, row) in a.data.chunks_exact(n.max(1)).enumerate() {
        for (j, x) in row.iter().enumerate() {
            if *x != 0.0 {
                start[i] = start[i].min(j);
                end[i] = j + 1;
                scale = scale.max(x.abs());
            }
        }
    }
    let threshold = PIVOT_TOLERANCE * scale;
    // reach[k]: one past the last row with a nonzero at or before column k.
    let mut reach = vec![0; n];
    for (i, &f) in start.iter().enumerate() {
        if f < n {
            reach[f] = i + 1;
        }
    }
    for k in 1..n {
        reach[k] = reach[k].max(reach[k - 1]);
    }
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let rows_end = reach[k].max(k + 1);
        let (mut p, mut best) = (k, a[(k, k)].abs());
        for i in k + 1..rows_end {
            let v = a[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > threshold) {
            return Err(Singular { column: k });
        }
        if p != k {
            let (head, tail) = a.data.split_at_mut(p * n);
            head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
            perm.swap(k, p);
            start.swap(k, p);
            end.swap(k, p);
        }
        let stop = end[k].max(k + 1);
        let (upper, lower) = a.data.split_at_mut((k + 1) * n);
        let pivot_row = &upper[k * n..];
        let inv = 1.0 / pivot_row[k];
        let lower = &mut lower[..(rows_end - k - 1) * n];
        for (row, e) in lower.chunks_exact_mut(n).zip(&mut end[k + 1..]) {
            let l = row[k];
            if l == 0.0 {
                continue;
            }
            let l = l * inv;
            row[k] = l;
            for (r, u) in row[k + 1..stop].iter_mut().zip(&pivot_row[k + 1..stop]) {
                *r -= l * u;
            }
            *e = (*e).max(stop);
        }
    }
    for (k, s) in start.iter_mut().enumerate() {
        *s = (*s).min(k);
    }
    Ok(Pivots { perm, start, end })
}

/// Solves with factors produced by [`factor_in_place`].
pub fn lu_solve(lu: &DenseMatrix, pivots: &Pivots, b: &[f64], x: &mut [f64]) {
    let n = lu.rows;
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    for (k, &p) in pivots.perm.iter().enumerate() {
        x[k] = b[p];
    }
    for i in 0..n {
        let s0 = pivots.start[i];
        let row = lu.row(i);
        let s: f64 = row[s0..i].iter().zip(&x[s0..i]).map(|(l, y)| l * y).sum();
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let e = pivots.end[i].max(i + 1);
        let row = lu.row(i);
        let s: f64 = row[i + 1..e].iter().zip(&x[i + 1..e]).map(|(u, y)| u * y).sum();
        x[i] = (x[i] - s) / row[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system_with_pivoting() {
        // Zero leading entry forces a row swap.
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let b = [3.0, 2.0, 4.0];
        let lu = LuFactor::factor(a.clone()).unwrap();
        let mut x = [0.0; 3];
        lu.solve(&b, &mut x);
        let mut r = [0.0; 3];
        a.mul_vec(&x, &mut r);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-14);
        }
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(LuFactor::factor(a).is_err());
    }

    #[test]
    fn transpose_product() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let mut out = [0.0; 2];
        a.mul_transpose_vec(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-4.0, -4.0]);
    }
}
