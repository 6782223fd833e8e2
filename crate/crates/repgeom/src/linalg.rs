//! Dense exact linear algebra over the finite fields of [`crate::field`].
//!
//! Everything here is deterministic: pivots are chosen by first-hit
//! row-major scan, so reduced echelon forms and nullspace bases are
//! reproducible across runs.

use crate::field::{Fp, Fq};
use std::fmt;

/// Scalar interface shared by `Fp` and `Fq`.
///
/// A `Desc` value pins down the field an element lives in, which lets
/// matrices be constructed empty and keeps mixed-field bugs loud.
pub trait Scalar: Copy + PartialEq + fmt::Debug {
    type Desc: Copy + PartialEq + fmt::Debug;
    fn desc(&self) -> Self::Desc;
    fn zero(d: Self::Desc) -> Self;
    fn one(d: Self::Desc) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn inv(self) -> Option<Self>;
    fn is_zero(&self) -> bool;
}

impl Scalar for Fp {
    type Desc = u8;
    fn desc(&self) -> u8 {
        self.prime()
    }
    fn zero(p: u8) -> Self {
        Fp::zero(p)
    }
    fn one(p: u8) -> Self {
        Fp::one(p)
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn inv(self) -> Option<Self> {
        Fp::inv(self)
    }
    fn is_zero(&self) -> bool {
        Fp::is_zero(*self)
    }
}

impl Scalar for Fq {
    type Desc = (u8, u8);
    fn desc(&self) -> (u8, u8) {
        (self.prime(), self.degree())
    }
    fn zero((p, d): (u8, u8)) -> Self {
        Fq::zero(p, d)
    }
    fn one((p, d): (u8, u8)) -> Self {
        Fq::one(p, d)
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn inv(self) -> Option<Self> {
        Fq::inv(self)
    }
    fn is_zero(&self) -> bool {
        Fq::is_zero(*self)
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<F: Scalar> {
    desc: F::Desc,
    rows: usize,
    cols: usize,
    a: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zero(desc: F::Desc, rows: usize, cols: usize) -> Self {
        Mat { desc, rows, cols, a: vec![F::zero(desc); rows * cols] }
    }

    pub fn identity(desc: F::Desc, n: usize) -> Self {
        let mut m = Mat::zero(desc, n, n);
        for i in 0..n {
            m[(i, i)] = F::one(desc);
        }
        m
    }

    pub fn from_rows(desc: F::Desc, rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut a = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for x in &row {
                assert!(x.desc() == desc, "field mismatch");
            }
            a.extend(row);
        }
        Mat { desc, rows: r, cols: c, a }
    }

    pub fn from_fn(desc: F::Desc, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Mat::zero(desc, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn desc(&self) -> F::Desc {
        self.desc
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert!(self.desc == rhs.desc && self.rows == rhs.rows && self.cols == rhs.cols);
        let a = self.a.iter().zip(&rhs.a).map(|(&x, &y)| x.add(y)).collect();
        Mat { desc: self.desc, rows: self.rows, cols: self.cols, a }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert!(self.desc == rhs.desc && self.rows == rhs.rows && self.cols == rhs.cols);
        let a = self.a.iter().zip(&rhs.a).map(|(&x, &y)| x.sub(y)).collect();
        Mat { desc: self.desc, rows: self.rows, cols: self.cols, a }
    }

    pub fn scale(&self, c: F) -> Self {
        let a = self.a.iter().map(|&x| x.mul(c)).collect();
        Mat { desc: self.desc, rows: self.rows, cols: self.cols, a }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert!(self.desc == rhs.desc, "field mismatch");
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out: Mat<F> = Mat::zero(self.desc, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)].add(aik.mul(rhs[(k, j)]));
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        assert_eq!(self.rows, self.cols, "pow needs a square matrix");
        let mut acc = Mat::identity(self.desc, self.rows);
        for _ in 0..e {
            acc = acc.matmul(self);
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.desc, self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<G: Scalar>(&self, desc: G::Desc, f: impl Fn(F) -> G) -> Mat<G> {
        let a = self.a.iter().map(|&x| f(x)).collect();
        Mat { desc, rows: self.rows, cols: self.cols, a }
    }

    /// Reduced row echelon form; returns the pivot column for each
    /// pivot row.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, pr);
            let inv = m[(r, c)].inv().expect("nonzero scalar");
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].mul(inv);
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)];
                    for j in c..m.cols {
                        let s = f.mul(m[(r, j)]);
                        m[(i, j)] = m[(i, j)].sub(s);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right nullspace, returned as rows of a matrix.
    pub fn nullspace(&self) -> Mat<F> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Mat::zero(self.desc, free.len(), self.cols);
        for (bi, &fc) in free.iter().enumerate() {
            basis[(bi, fc)] = F::one(self.desc);
            for (pi, &pc) in pivots.iter().enumerate() {
                basis[(bi, pc)] = r[(pi, fc)].neg();
            }
        }
        basis
    }

    /// Solve self * x = b for a single solution, if consistent.
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Mat::zero(self.desc, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, self.cols)] = b[i];
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // inconsistent
        }
        let mut x = vec![F::zero(self.desc); self.cols];
        for (pi, &pc) in pivots.iter().enumerate() {
            x[pc] = r[(pi, self.cols)];
        }
        Some(x)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Stack another matrix below this one.
    pub fn vstack(&self, other: &Self) -> Self {
        assert!(self.desc == other.desc && self.cols == other.cols);
        let mut a = self.a.clone();
        a.extend_from_slice(&other.a);
        Mat { desc: self.desc, rows: self.rows + other.rows, cols: self.cols, a }
    }
}

impl<F: Scalar> std::ops::Index<(usize, usize)> for Mat<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.a[i * self.cols + j]
    }
}

impl<F: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.a[i * self.cols + j]
    }
}

impl<F: Scalar + fmt::Display> fmt::Debug for Mat<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Rank of a matrix given by u8 codes over a tabulated small field.
/// `data` is row-major and is consumed as scratch.
pub fn coded_rank(t: &crate::field::SmallFieldTable, data: &mut [u8], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if pr != rank {
            let (lo, hi) = data.split_at_mut(pr * cols);
            lo[rank * cols..rank * cols + cols].swap_with_slice(&mut hi[..cols]);
        }
        let pinv = t.inv(data[rank * cols + c]);
        for j in c..cols {
            data[rank * cols + j] = t.mul(data[rank * cols + j], pinv);
        }
        for i in (rank + 1)..rows {
            let f = data[i * cols + c];
            if f != 0 {
                for j in c..cols {
                    let s = t.mul(f, data[rank * cols + j]);
                    data[i * cols + j] = t.sub(data[i * cols + j], s);
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SmallFieldTable;

    fn f3(v: i64) -> Fp {
        Fp::new(v, 3)
    }

    #[test]
    fn rank_and_rref() {
        let m = Mat::from_rows(3, vec![
            vec![f3(1), f3(2), f3(0)],
            vec![f3(2), f3(2), f3(0)],
            vec![f3(0), f3(0), f3(0)],
        ]);
        assert_eq!(m.rank(), 2);
        let (r, p) = m.rref();
        assert_eq!(p, vec![0, 1]);
        assert_eq!(r[(0, 0)], f3(1));
        assert_eq!(r[(0, 1)], f3(0));
    }

    #[test]
    fn nullspace_is_killed() {
        let m = Mat::from_rows(3, vec![
            vec![f3(1), f3(1), f3(1)],
            vec![f3(0), f3(1), f3(2)],
        ]);
        let ns = m.nullspace();
        assert_eq!(ns.nrows(), 1);
        for b in 0..ns.nrows() {
            for i in 0..m.nrows() {
                let mut acc = Fp::zero(3);
                for j in 0..m.ncols() {
                    acc = acc + m[(i, j)] * ns[(b, j)];
                }
                assert!(acc.is_zero());
            }
        }
    }

    #[test]
    fn solve_consistent_system() {
        let m = Mat::from_rows(3, vec![vec![f3(1), f3(2)], vec![f3(0), f3(1)]]);
        let x = m.solve(&[f3(0), f3(1)]).unwrap();
        // check m x = b
        assert_eq!(m[(0, 0)] * x[0] + m[(0, 1)] * x[1], f3(0));
        assert_eq!(m[(1, 0)] * x[0] + m[(1, 1)] * x[1], f3(1));
        // inconsistent system
        let s = Mat::from_rows(3, vec![vec![f3(1), f3(1)], vec![f3(2), f3(2)]]);
        assert!(s.solve(&[f3(1), f3(0)]).is_none());
    }

    #[test]
    fn matmul_pow() {
        let n = Mat::from_rows(3, vec![vec![f3(0), f3(1)], vec![f3(0), f3(0)]]);
        assert!(!n.is_zero());
        assert!(n.pow(2).is_zero());
        let id = Mat::identity(3, 2);
        assert_eq!(id.matmul(&n), n);
    }

    #[test]
    fn coded_rank_matches_mat_rank() {
        let t = SmallFieldTable::new(3, 2);
        // a 4x4 with known rank over F_9
        let desc = (3u8, 2u8);
        let g = Fq::generator(3, 2);
        let one = Fq::one(3, 2);
        let m = Mat::from_rows(desc, vec![
            vec![one, g, Fq::zero(3, 2), one],
            vec![g, g * g, Fq::zero(3, 2), g],
            vec![one, one, one, one],
            vec![Fq::zero(3, 2), Fq::zero(3, 2), Fq::zero(3, 2), Fq::zero(3, 2)],
        ]);
        // row 1 = g * row 0, so rank is 2
        assert_eq!(m.rank(), 2);
        let mut codes: Vec<u8> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| t.encode(m[(i, j)]))
            .collect();
        assert_eq!(coded_rank(&t, &mut codes, 4, 4), 2);
    }
}
