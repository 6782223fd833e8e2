//! Matrices over a multivariate polynomial ring.
//!
//! The key operation is [`PolyMatrix::generic_rank`]: rank over the
//! fraction field F_p(x_1, ..., x_n), computed by fraction-free Bareiss
//! elimination with full pivoting.  Divisions in the Bareiss update are
//! exact by construction; a failed exact division would mean corrupted
//! state and panics rather than limping on.
//!
//! An optional homogeneity tag rides along: matrices built from the
//! operator constructions are entrywise homogeneous of a known degree,
//! and products maintain the tag.  The tag is asserted where graded
//! code depends on it.

use crate::error::{Error, Result};
use crate::field::Fq;
use crate::linalg::Mat;
use crate::poly::{Exp, MultiPoly, PolyRing};
use smallvec::SmallVec;
use std::sync::Arc;

#[derive(Clone, PartialEq)]
pub struct PolyMatrix {
    ring: Arc<PolyRing>,
    rows: usize,
    cols: usize,
    a: Vec<MultiPoly>,
    /// Common total degree of all (nonzero) entries, when uniform.
    homog: Option<u32>,
}

impl PolyMatrix {
    pub fn zero(ring: &Arc<PolyRing>, rows: usize, cols: usize) -> Self {
        PolyMatrix {
            ring: ring.clone(),
            rows,
            cols,
            a: vec![MultiPoly::zero(ring); rows * cols],
            homog: None,
        }
    }

    pub fn from_fn(
        ring: &Arc<PolyRing>,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> MultiPoly,
    ) -> Self {
        let mut a = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert!(Arc::ptr_eq(e.ring(), ring) || e.ring() == ring, "ring mismatch");
                a.push(e);
            }
        }
        let mut m = PolyMatrix { ring: ring.clone(), rows, cols, a, homog: None };
        m.homog = m.detect_homogeneity();
        m
    }

    /// Sum_i x_i * mats[i] where x_i is the i-th ring variable.  This is
    /// the shape every operator chart takes; entries are homogeneous
    /// linear forms.
    pub fn linear_from_mats(ring: &Arc<PolyRing>, mats: &[Mat<crate::field::Fp>]) -> Self {
        assert_eq!(mats.len(), ring.nvars(), "one matrix per variable");
        let rows = mats[0].nrows();
        let cols = mats[0].ncols();
        let mut m = PolyMatrix::from_fn(ring, rows, cols, |i, j| {
            let terms: Vec<(Exp, i64)> = mats
                .iter()
                .enumerate()
                .filter(|(_, mk)| !crate::linalg::Scalar::is_zero(&mk[(i, j)]))
                .map(|(k, mk)| {
                    let mut e: Exp = SmallVec::from_elem(0u8, ring.nvars());
                    e[k] = 1;
                    (e, mk[(i, j)].val() as i64)
                })
                .collect();
            MultiPoly::from_terms(ring, terms)
        });
        m.homog = Some(1);
        m
    }

    fn detect_homogeneity(&self) -> Option<u32> {
        let mut deg = None;
        for e in &self.a {
            if e.is_zero() {
                continue;
            }
            match (deg, e.homogeneous_degree()) {
                (_, None) => return None,
                (None, Some(d)) => deg = Some(d),
                (Some(d0), Some(d)) if d0 == d => {}
                _ => return None,
            }
        }
        deg
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &MultiPoly {
        &self.a[i * self.cols + j]
    }

    pub fn homogeneous_degree(&self) -> Option<u32> {
        self.homog
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let a: Vec<MultiPoly> = self.a.iter().zip(&rhs.a).map(|(x, y)| x.add(y)).collect();
        let mut m = PolyMatrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, a, homog: None };
        m.homog = m.detect_homogeneity();
        m
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let a: Vec<MultiPoly> = self.a.iter().zip(&rhs.a).map(|(x, y)| x.sub(y)).collect();
        let mut m = PolyMatrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, a, homog: None };
        m.homog = m.detect_homogeneity();
        m
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut a = vec![MultiPoly::zero(&self.ring); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.entry(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.entry(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * rhs.cols + j;
                    a[idx] = a[idx].add(&aik.mul(b));
                }
            }
        }
        let homog = match (self.homog, rhs.homog) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        let mut m = PolyMatrix { ring: self.ring.clone(), rows: self.rows, cols: rhs.cols, a, homog };
        if m.homog.is_none() {
            m.homog = m.detect_homogeneity();
        }
        m
    }

    pub fn pow(&self, e: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        if e == 0 {
            let ring = self.ring.clone();
            let mut m = PolyMatrix::zero(&ring, self.rows, self.cols);
            for i in 0..self.rows {
                m.a[i * self.cols + i] = MultiPoly::constant(&ring, 1);
            }
            m.homog = Some(0);
            return m;
        }
        let mut acc = self.clone();
        for _ in 1..e {
            acc = acc.matmul(self);
        }
        acc
    }

    pub fn map_entries(&self, f: impl Fn(&MultiPoly) -> MultiPoly) -> Self {
        let a: Vec<MultiPoly> = self.a.iter().map(f).collect();
        let ring = a[0].ring().clone();
        let mut m = PolyMatrix { ring, rows: self.rows, cols: self.cols, a, homog: None };
        m.homog = m.detect_homogeneity();
        m
    }

    /// Entrywise variable remap into another ring (see
    /// [`MultiPoly::map_vars`]).
    pub fn map_vars(&self, target: &Arc<PolyRing>, images: &[Option<usize>]) -> Self {
        let a: Vec<MultiPoly> = self.a.iter().map(|e| e.map_vars(target, images)).collect();
        let mut m = PolyMatrix { ring: target.clone(), rows: self.rows, cols: self.cols, a, homog: None };
        m.homog = m.detect_homogeneity();
        m
    }

    /// u * self * uinv with scalar matrices over the prime field.
    pub fn conjugate_scalar(&self, u: &Mat<crate::field::Fp>, uinv: &Mat<crate::field::Fp>) -> Self {
        assert!(self.rows == self.cols && u.nrows() == self.rows && uinv.nrows() == self.rows);
        let left = PolyMatrix::from_fn(&self.ring, self.rows, self.cols, |i, j| {
            let mut acc = MultiPoly::zero(&self.ring);
            for k in 0..self.rows {
                let c = u[(i, k)];
                if !crate::linalg::Scalar::is_zero(&c) {
                    acc = acc.add(&self.entry(k, j).scale(c.val() as i64));
                }
            }
            acc
        });
        PolyMatrix::from_fn(&self.ring, self.rows, self.cols, |i, j| {
            let mut acc = MultiPoly::zero(&self.ring);
            for k in 0..self.rows {
                let c = uinv[(k, j)];
                if !crate::linalg::Scalar::is_zero(&c) {
                    acc = acc.add(&left.entry(i, k).scale(c.val() as i64));
                }
            }
            acc
        })
    }

    pub fn eval(&self, point: &[Fq]) -> Mat<Fq> {
        let (p, d) = match point.first() {
            Some(x) => (x.prime(), x.degree()),
            None => (self.ring.p, 1),
        };
        Mat::from_fn((p, d), self.rows, self.cols, |i, j| self.entry(i, j).eval(point))
    }

    /// Rank over the fraction field by fraction-free Bareiss
    /// elimination with full pivoting.  Pivots prefer entries with the
    /// fewest terms, which keeps intermediate minors small on the
    /// sparse matrices this crate produces.
    pub fn generic_rank(&self) -> usize {
        let mut w = self.a.clone();
        let rows = self.rows;
        let cols = self.cols;
        let at = |w: &Vec<MultiPoly>, i: usize, j: usize| -> MultiPoly { w[i * cols + j].clone() };
        let mut prev = MultiPoly::constant(&self.ring, 1);
        let mut row_perm: Vec<usize> = (0..rows).collect();
        let mut col_perm: Vec<usize> = (0..cols).collect();
        let mut k = 0;
        loop {
            if k == rows.min(cols) {
                return k;
            }
            // pivot search among the untouched block
            let mut best: Option<(usize, usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    let e = &w[row_perm[i] * cols + col_perm[j]];
                    if e.is_zero() {
                        continue;
                    }
                    let nt = e.num_terms();
                    if best.map_or(true, |(_, _, bn)| nt < bn) {
                        best = Some((i, j, nt));
                    }
                }
            }
            let Some((pi, pj, _)) = best else {
                return k;
            };
            row_perm.swap(k, pi);
            col_perm.swap(k, pj);
            let pivot = at(&w, row_perm[k], col_perm[k]);
            for i in (k + 1)..rows {
                let wik = at(&w, row_perm[i], col_perm[k]);
                for j in (k + 1)..cols {
                    let wkj = at(&w, row_perm[k], col_perm[j]);
                    let wij = at(&w, row_perm[i], col_perm[j]);
                    let num = pivot.mul(&wij).sub(&wik.mul(&wkj));
                    let val = if num.is_zero() {
                        num
                    } else {
                        num.exact_div(&prev).expect("Bareiss division is exact")
                    };
                    w[row_perm[i] * cols + col_perm[j]] = val;
                }
            }
            prev = pivot;
            k += 1;
        }
    }

    /// All k x k minors (with Laplace signs), enumerated over row and
    /// column subsets in lexicographic order.  Errors when the number
    /// of row or column subsets exceeds `subset_cap`.
    pub fn minors(&self, k: usize, subset_cap: usize) -> Result<Vec<MultiPoly>> {
        assert!(k >= 1 && k <= self.rows.min(self.cols));
        let rsubs = binomial_guard(self.rows, k, subset_cap)?;
        let _csubs = binomial_guard(self.cols, k, subset_cap)?;
        let _ = rsubs;
        let mut out = Vec::new();
        let rows: Vec<usize> = (0..self.rows).collect();
        for rset in subsets(&rows, k) {
            // DP over column prefixes: state maps a column bitmask with
            // popcount = processed-rows to the signed minor of those
            // rows and columns.
            let mut state: std::collections::HashMap<u32, MultiPoly> =
                std::collections::HashMap::new();
            state.insert(0u32, MultiPoly::constant(&self.ring, 1));
            for (ri, &r) in rset.iter().enumerate() {
                let mut next: std::collections::HashMap<u32, MultiPoly> =
                    std::collections::HashMap::new();
                for (mask, minor) in &state {
                    for c in 0..self.cols as u32 {
                        if mask & (1 << c) != 0 {
                            continue;
                        }
                        let e = self.entry(r, c as usize);
                        if e.is_zero() {
                            continue;
                        }
                        // sign: row ri expands against column position
                        // of c within the new mask
                        let below = (mask & ((1u32 << c) - 1)).count_ones() as usize;
                        let sign = if (ri + below) % 2 == 0 { 1 } else { -1 };
                        let contrib = minor.mul(e).scale(sign);
                        let nm = mask | (1 << c);
                        next.entry(nm)
                            .and_modify(|x| *x = x.add(&contrib))
                            .or_insert(contrib);
                    }
                }
                state = next;
            }
            let mut keyed: Vec<(u32, MultiPoly)> = state.into_iter().collect();
            keyed.sort_by_key(|(m, _)| *m);
            for (_, minor) in keyed {
                if !minor.is_zero() {
                    out.push(minor);
                }
            }
        }
        Ok(out)
    }
}

fn binomial_guard(n: usize, k: usize, cap: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > cap {
            return Err(Error::ResourceLimit(format!(
                "minor subset count C({n},{k}) exceeds cap {cap}"
            )));
        }
    }
    Ok(acc)
}

fn subsets(items: &[usize], k: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    let n = items.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut done = k > n;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in (i + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use crate::poly::Var;

    fn ring(p: u8, n: usize) -> Arc<PolyRing> {
        PolyRing::new(p, (0..n).map(|i| Var::Y(i as u8)).collect())
    }

    #[test]
    fn generic_rank_diagonal() {
        // [[x, 0], [0, y]] has rank 2
        let r = ring(5, 2);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let m = PolyMatrix::from_fn(&r, 2, 2, |i, j| match (i, j) {
            (0, 0) => x.clone(),
            (1, 1) => y.clone(),
            _ => MultiPoly::zero(&r),
        });
        assert_eq!(m.generic_rank(), 2);
    }

    #[test]
    fn generic_rank_zero_matrix() {
        let r = ring(3, 2);
        let m = PolyMatrix::zero(&r, 3, 3);
        assert_eq!(m.generic_rank(), 0);
    }

    #[test]
    fn generic_rank_char_two_symmetric() {
        // [[x, y], [y, x]] over F_2: determinant x^2 + y^2 = (x+y)^2 != 0,
        // so the rank is 2 even though the matrix drops rank on x = y.
        let r = ring(2, 2);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let m = PolyMatrix::from_fn(&r, 2, 2, |i, j| if i == j { x.clone() } else { y.clone() });
        assert_eq!(m.generic_rank(), 2);
    }

    #[test]
    fn generic_rank_dependent_rows() {
        // second row = x * first row: rank 1
        let r = ring(3, 2);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let m = PolyMatrix::from_fn(&r, 2, 2, |i, j| {
            let base = if j == 0 { y.clone() } else { x.add(&y) };
            if i == 0 {
                base
            } else {
                x.mul(&base)
            }
        });
        assert_eq!(m.generic_rank(), 1);
    }

    #[test]
    fn rank_matches_random_evaluation() {
        // generic rank >= rank at any point; equality at a random point
        // of a big extension with overwhelming probability.  Here the
        // matrix is small enough to just check a few points.
        let r = ring(3, 3);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let z = MultiPoly::var(&r, 2);
        let m = PolyMatrix::from_fn(&r, 3, 3, |i, j| match (i, j) {
            (0, 0) => x.clone(),
            (0, 1) => y.clone(),
            (1, 0) => y.clone(),
            (1, 1) => z.clone(),
            (2, 2) => x.mul(&z).sub(&y.mul(&y)),
            _ => MultiPoly::zero(&r),
        });
        let g = m.generic_rank();
        let mut best = 0;
        for k in 0..200u64 {
            let pt = [
                Fq::from_counter(k % 9, 3, 2),
                Fq::from_counter((k / 9) % 9, 3, 2),
                Fq::from_counter((k / 81) % 9, 3, 2),
            ];
            best = best.max(m.eval(&pt).rank());
            assert!(m.eval(&pt).rank() <= g);
        }
        assert_eq!(best, g);
    }

    #[test]
    fn minors_of_identity_like() {
        let r = ring(3, 2);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let m = PolyMatrix::from_fn(&r, 2, 2, |i, j| match (i, j) {
            (0, 0) => x.clone(),
            (1, 1) => y.clone(),
            _ => MultiPoly::zero(&r),
        });
        let ms = m.minors(1, 100).unwrap();
        assert_eq!(ms.len(), 2); // two nonzero entries
        let m2 = m.minors(2, 100).unwrap();
        assert_eq!(m2.len(), 1);
        assert_eq!(m2[0], x.mul(&y));
        // determinant sign check on an antidiagonal matrix
        let n = PolyMatrix::from_fn(&r, 2, 2, |i, j| if i + j == 1 { x.clone() } else { MultiPoly::zero(&r) });
        let d = n.minors(2, 100).unwrap();
        assert_eq!(d[0], x.mul(&x).scale(-1));
    }

    #[test]
    fn homogeneity_tracks_products() {
        let r = ring(3, 2);
        let mats: Vec<Mat<Fp>> = (0..2)
            .map(|k| {
                Mat::from_fn(3, 2, 2, |i, j| {
                    Fp::new((i + j + k) as i64 % 3, 3)
                })
            })
            .collect();
        let m = PolyMatrix::linear_from_mats(&r, &mats);
        assert_eq!(m.homogeneous_degree(), Some(1));
        assert_eq!(m.matmul(&m).homogeneous_degree().unwrap_or(2), 2);
    }
}
