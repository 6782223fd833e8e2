//! Kernel and cokernel bundle data on projective support varieties,
//! Hilbert functions, and K-theory class reconstruction.
//!
//! A chart matrix with entrywise homogeneous entries of degree `j`
//! defines a graded map `(S_d)^m -> (S_{d+j})^m` over the polynomial
//! ring `S = F_p[y_0, ..., y_{n-1}]` in each degree `d`.  The graded
//! pieces of its kernel, image, and cokernel are finite-dimensional
//! vector spaces whose dimensions eventually follow a polynomial in
//! `d` -- the Hilbert polynomial of the corresponding sheaf on
//! `P^{n-1}`.  From the polynomial the sheaf's rank, degree, and class
//! in `K_0(P^{n-1}) = Z[O(0)] + ... + Z[O(n-1)]` are reconstructed by
//! exact rational arithmetic; on a projective line the full splitting
//! type is read off from minimal generator degrees.
//!
//! All bundle-level computation happens on section charts
//! ([`crate::theta::section_chart`]): one variable per subgroup basis
//! element, so `n` is the subgroup rank rather than its order.

use crate::error::{Error, Result};
use crate::field::Fp;
use crate::grouplat::ElabLattice;
use crate::jordan::{decide_constant_jrank, DecisionLimits, Method};
use crate::linalg::{Mat, Scalar};
use crate::modrep::ModuleRep;
use crate::polymat::PolyMatrix;
use crate::theta::section_chart;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Largest entry count of a single degreewise map matrix.
const MAX_MAP_ENTRIES: usize = 8_000_000;

/// Which graded piece of the chart map a table holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    Kernel,
    Image,
    Cokernel,
}

impl fmt::Display for PieceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceKind::Kernel => write!(f, "ker"),
            PieceKind::Image => write!(f, "im"),
            PieceKind::Cokernel => write!(f, "coker"),
        }
    }
}

/// Exponent tuples of total degree `d` in `n` variables, in descending
/// lexicographic order.  The order is fixed: every degreewise matrix
/// and basis in this module indexes monomials through it.
fn monomials(n: usize, d: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 1 {
            prefix.push(d as u32);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e as u32);
            rec(n - 1, d - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

fn usize_binom(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..b as u128 {
        acc = acc * (a as u128 - i) / (i + 1);
    }
    acc as usize
}

fn big_binom(a: usize, b: usize) -> BigInt {
    if b > a {
        return BigInt::from(0);
    }
    let mut acc = BigInt::from(1);
    for i in 0..b {
        acc = acc * BigInt::from(a - i) / BigInt::from(i + 1);
    }
    acc
}

fn big_factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

/// Monomial basis and index lookup for one degree.
struct DegreeCtx {
    monos: Vec<Vec<u32>>,
    index: BTreeMap<Vec<u32>, usize>,
}

impl DegreeCtx {
    fn new(n: usize, d: usize) -> Self {
        let monos = monomials(n, d);
        let index = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        DegreeCtx { monos, index }
    }

    fn dim(&self) -> usize {
        self.monos.len()
    }
}

/// Dimensions of the graded pieces of one chart map, degree by degree,
/// with per-degree bases and minimal generator counts.
///
/// The table owns a copy of its chart so it can extend itself to
/// higher degrees on demand; a degree is never silently truncated.
pub struct GradedPieceTable {
    chart: PolyMatrix,
    kind: PieceKind,
    power: u32,
    nvars: usize,
    msize: usize,
    h: Vec<usize>,
    /// Kernel vectors (source coordinates) or image spans (target
    /// coordinates) as matrix rows; empty with the right column count
    /// for cokernel tables.
    bases: Vec<Mat<Fp>>,
    /// Count of new minimal module generators appearing in each
    /// degree; identically zero for cokernel tables.
    new_gens: Vec<usize>,
    ctxs: Vec<DegreeCtx>,
}

impl GradedPieceTable {
    pub fn kind(&self) -> PieceKind {
        self.kind
    }

    /// Homogeneous degree of the chart entries.
    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Size of the (square) chart matrix.
    pub fn module_size(&self) -> usize {
        self.msize
    }

    pub fn max_degree(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self, d: usize) -> usize {
        self.h[d]
    }

    pub fn h_table(&self) -> &[usize] {
        &self.h
    }

    /// Basis of the degree-`d` piece as matrix rows (kernel vectors in
    /// source coordinates, image spans in target coordinates).
    pub fn basis(&self, d: usize) -> &Mat<Fp> {
        &self.bases[d]
    }

    /// `(degree, count)` pairs for every degree contributing new
    /// minimal generators, up to the computed bound.
    pub fn generator_degrees(&self) -> Vec<(usize, usize)> {
        self.new_gens
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(d, &c)| (d, c))
            .collect()
    }

    /// Default degree bound for this chart's shape.
    fn default_cap(&self) -> usize {
        self.power as usize * self.msize + self.nvars + 4
    }

    fn ctx(&mut self, d: usize) -> &DegreeCtx {
        while self.ctxs.len() <= d {
            self.ctxs.push(DegreeCtx::new(self.nvars, self.ctxs.len()));
        }
        &self.ctxs[d]
    }

    /// The degreewise map matrix `(S_d)^m -> (S_{d+j})^m` over F_p.
    /// Coordinates are slot-major: index `k * dim S_d + s` is monomial
    /// `s` in slot `k`.
    fn map_matrix(&mut self, d: usize) -> Result<Mat<Fp>> {
        let j = self.power as usize;
        let m = self.msize;
        let p = self.chart.ring().p;
        self.ctx(d + j);
        let dim_src = self.ctxs[d].dim();
        let dim_tgt = self.ctxs[d + j].dim();
        let rows = m * dim_tgt;
        let cols = m * dim_src;
        if rows.saturating_mul(cols) > MAX_MAP_ENTRIES {
            return Err(Error::ResourceLimit(format!(
                "degree-{d} map matrix has {rows} x {cols} entries"
            )));
        }
        let mut mat = Mat::zero(p, rows, cols);
        for k in 0..m {
            for s in 0..dim_src {
                let col = k * dim_src + s;
                for i in 0..m {
                    let entry = self.chart.entry(i, k);
                    if entry.is_zero() {
                        continue;
                    }
                    for (exp, c) in entry.terms() {
                        let mut tgt: Vec<u32> = self.ctxs[d].monos[s].clone();
                        for (v, &e) in exp.iter().enumerate() {
                            tgt[v] += e as u32;
                        }
                        let t = self.ctxs[d + j].index[&tgt];
                        let row = i * dim_tgt + t;
                        mat[(row, col)] = mat[(row, col)] + Fp::new(*c as i64, p);
                    }
                }
            }
        }
        Ok(mat)
    }

    /// Multiply each basis row of degree `d - 1` by each variable,
    /// landing in the degree-`d` coordinate space.
    fn lift_by_variables(&mut self, d: usize) -> Mat<Fp> {
        let p = self.chart.ring().p;
        let m = self.msize;
        let n = self.nvars;
        self.ctx(d);
        let dim_lo = self.ctxs[d - 1].dim();
        let dim_hi = self.ctxs[d].dim();
        let prev = &self.bases[d - 1];
        let mut out = Mat::zero(p, prev.nrows() * n, m * dim_hi);
        for r in 0..prev.nrows() {
            for l in 0..n {
                let orow = r * n + l;
                for k in 0..m {
                    for s in 0..dim_lo {
                        let v = prev[(r, k * dim_lo + s)];
                        if Scalar::is_zero(&v) {
                            continue;
                        }
                        let mut mono = self.ctxs[d - 1].monos[s].clone();
                        mono[l] += 1;
                        let t = self.ctxs[d].index[&mono];
                        out[(orow, k * dim_hi + t)] = out[(orow, k * dim_hi + t)] + v;
                    }
                }
            }
        }
        out
    }

    /// Compute the table entry for one degree (which must be the next
    /// uncomputed one) and the count of new generators in it.
    fn push_degree(&mut self, d: usize) -> Result<()> {
        debug_assert_eq!(d, self.h.len());
        let j = self.power as usize;
        let m = self.msize;
        let p = self.chart.ring().p;
        self.ctx(d);
        let dim_d = self.ctxs[d].dim();
        let (h, basis) = match self.kind {
            PieceKind::Kernel => {
                let mm = self.map_matrix(d)?;
                let null = mm.nullspace();
                (null.nrows(), null)
            }
            PieceKind::Image => {
                if d < j {
                    (0, Mat::zero(p, 0, m * dim_d))
                } else {
                    let mm = self.map_matrix(d - j)?;
                    let (r, pivots) = mm.transpose().rref();
                    let rank = pivots.len();
                    let mut basis = Mat::zero(p, rank, m * dim_d);
                    for i in 0..rank {
                        for c in 0..m * dim_d {
                            basis[(i, c)] = r[(i, c)];
                        }
                    }
                    (rank, basis)
                }
            }
            PieceKind::Cokernel => {
                let im = if d < j { 0 } else { self.map_matrix(d - j)?.rank() };
                (m * dim_d - im, Mat::zero(p, 0, m * dim_d))
            }
        };
        let gens = match self.kind {
            PieceKind::Cokernel => 0,
            _ => {
                if d == 0 {
                    h
                } else {
                    let lifted = self.lift_by_variables(d);
                    let span = lifted.rank();
                    // The lifted vectors must land inside the new
                    // degree's piece; a failure here means the graded
                    // structure is corrupted.
                    assert!(
                        basis.vstack(&lifted).rank() == h,
                        "S_1-multiples escaped the degree-{d} piece"
                    );
                    h - span
                }
            }
        };
        self.h.push(h);
        self.bases.push(basis);
        self.new_gens.push(gens);
        Ok(())
    }

    /// Signed `n`-th finite difference of `h` ending at degree `d`;
    /// zero exactly when the last `n + 1` values fit a polynomial of
    /// degree below `n`.
    fn nth_difference(&self, d: usize) -> i64 {
        let n = self.nvars;
        let mut acc: i64 = 0;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            acc += sign * usize_binom(n, k) as i64 * self.h[d - k] as i64;
        }
        acc
    }

    /// Extend the table so that degree `d_new` is computed.
    pub fn extend_to(&mut self, d_new: usize) -> Result<()> {
        while self.max_degree() < d_new {
            self.push_degree(self.h.len())?;
        }
        Ok(())
    }
}

/// Build the graded piece table of a chart map.
///
/// With `degree_to = Some(d)` the table runs exactly through degree
/// `d`.  With `None` it runs until the dimension sequence has followed
/// a polynomial of degree below `nvars` for `nvars + 2` consecutive
/// steps, capped at `j * m + n + 4`; consumers that need more degrees
/// extend the table explicitly, so the early stop only saves work.
pub fn graded_pieces(
    chart: &PolyMatrix,
    kind: PieceKind,
    degree_to: Option<usize>,
) -> Result<GradedPieceTable> {
    if chart.nrows() != chart.ncols() {
        return Err(Error::InvalidInput(format!(
            "chart matrix must be square, got {} x {}",
            chart.nrows(),
            chart.ncols()
        )));
    }
    let power = match chart.homogeneous_degree() {
        Some(j) => j,
        None if chart.is_zero() => 1,
        None => {
            return Err(Error::InvalidInput(
                "graded pieces need an entrywise homogeneous chart".into(),
            ))
        }
    };
    let mut table = GradedPieceTable {
        chart: chart.clone(),
        kind,
        power,
        nvars: chart.ring().nvars(),
        msize: chart.nrows(),
        h: Vec::new(),
        bases: Vec::new(),
        new_gens: Vec::new(),
        ctxs: Vec::new(),
    };
    let n = table.nvars;
    match degree_to {
        Some(d) => table.extend_to(d)?,
        None => {
            let cap = table.default_cap();
            let floor = power as usize + n + 1;
            let mut streak = 0usize;
            let mut d = 0usize;
            loop {
                table.push_degree(d)?;
                if d >= n {
                    if table.nth_difference(d) == 0 {
                        streak += 1;
                    } else {
                        streak = 0;
                    }
                }
                if d >= floor && streak >= n + 2 {
                    break;
                }
                if d >= cap {
                    break;
                }
                d += 1;
            }
        }
    }
    Ok(table)
}

/// Hilbert function table with its fitted polynomial and the rank and
/// degree of the corresponding sheaf on `P^{n-1}`.
#[derive(Clone, Debug)]
pub struct HilbertData {
    /// Ambient variable count `n` (the sheaf lives on `P^{n-1}`).
    pub nvars: usize,
    /// Graded piece dimensions for `d = 0..=max_degree`.
    pub h: Vec<usize>,
    /// Least degree from which `h` agrees with the polynomial.
    pub stabilization: usize,
    /// Polynomial coefficients in the power basis, ascending; length
    /// at most `n` (degree at most `n - 1`), trailing zeros trimmed.
    pub coeffs: Vec<BigRational>,
    /// Generic fiber dimension: `(n-1)! *` leading coefficient when
    /// the polynomial has full degree `n - 1`, zero otherwise.
    pub rank: i64,
    /// First subleading invariant: `(n-2)! *` the degree-`n-2`
    /// coefficient after subtracting `rank` copies of the structure
    /// sheaf polynomial.
    pub degree: i64,
}

impl HilbertData {
    pub fn eval(&self, d: i64) -> BigRational {
        let x = BigRational::from_integer(BigInt::from(d));
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn eval_usize(&self, d: usize) -> Option<usize> {
        let v = self.eval(d as i64);
        if v.is_integer() && !v.is_negative() {
            v.to_integer().to_usize()
        } else {
            None
        }
    }
}

/// Solve a dense square rational system in place; `None` if singular.
fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / inv.clone();
            for c in col..n {
                let v = a[r][c].clone() - f.clone() * a[col][c].clone();
                a[r][c] = v;
            }
            b[r] = b[r].clone() - f * b[col].clone();
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for i in 0..n {
        x[i] = b[i].clone() / a[i][i].clone();
    }
    Some(x)
}

/// Coefficients (power basis, ascending) of `binom(d + n - 1, n - 1)`
/// as a polynomial in `d`: the Hilbert polynomial of the structure
/// sheaf of `P^{n-1}`.
fn structure_sheaf_coeffs(n: usize) -> Vec<BigRational> {
    // prod_{t=1}^{n-1} (d + t) / (n-1)!
    let mut poly: Vec<BigInt> = vec![BigInt::from(1)];
    for t in 1..n {
        let mut next = vec![BigInt::from(0); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c * BigInt::from(t);
            next[k + 1] += c;
        }
        poly = next;
    }
    let fact = big_factorial(n - 1);
    poly.into_iter()
        .map(|c| BigRational::new(c, fact.clone()))
        .collect()
}

fn rational_to_i64(v: &BigRational, what: &str) -> Result<i64> {
    if !v.is_integer() {
        return Err(Error::NonIntegralClass(format!("{what} = {v} is not an integer")));
    }
    v.to_integer()
        .to_i64()
        .ok_or_else(|| Error::NonIntegralClass(format!("{what} = {v} overflows i64")))
}

/// Fit the Hilbert polynomial of a table, extending the table as
/// needed until the fit holds on a tail of at least `2n + 1` degrees.
///
/// The polynomial is interpolated through the top `n` values, its
/// agreement interval located, and the result accepted only when the
/// interval covers the interpolation points plus `n + 1` more; the
/// table is extended (up to four times the default degree bound) when
/// the margin is short, and the final failure is an honest
/// [`Error::NotStabilized`].
pub fn hilbert_polynomial(table: &mut GradedPieceTable) -> Result<HilbertData> {
    let n = table.nvars();
    let hard_cap = 4 * table.default_cap() + 16;
    loop {
        let dmax = table.max_degree();
        if dmax + 1 >= 2 * n + 1 {
            // Interpolate through the top n points.
            let pts: Vec<usize> = (dmax + 1 - n..=dmax).collect();
            let a: Vec<Vec<BigRational>> = pts
                .iter()
                .map(|&d| {
                    let mut pw = BigInt::from(1);
                    (0..n)
                        .map(|_| {
                            let v = BigRational::from_integer(pw.clone());
                            pw *= BigInt::from(d);
                            v
                        })
                        .collect()
                })
                .collect();
            let b: Vec<BigRational> = pts
                .iter()
                .map(|&d| BigRational::from_integer(BigInt::from(table.h(d))))
                .collect();
            let mut coeffs =
                solve_rational(a, b).expect("Vandermonde system is nonsingular");
            while coeffs.last().is_some_and(|c| c.is_zero()) {
                coeffs.pop();
            }
            let hd = HilbertData {
                nvars: n,
                h: table.h_table().to_vec(),
                stabilization: 0,
                coeffs,
                rank: 0,
                degree: 0,
            };
            let mut d0 = dmax + 1;
            for d in (0..=dmax).rev() {
                if hd.eval(d as i64)
                    == BigRational::from_integer(BigInt::from(table.h(d)))
                {
                    d0 = d;
                } else {
                    break;
                }
            }
            if dmax + 1 - d0 >= 2 * n + 1 {
                return finish_hilbert(hd, d0);
            }
        }
        if table.max_degree() >= hard_cap {
            return Err(Error::NotStabilized { computed_to: table.max_degree() });
        }
        let next = (2 * (table.max_degree() + 1) + 8).min(hard_cap);
        table.extend_to(next)?;
    }
}

fn finish_hilbert(mut hd: HilbertData, d0: usize) -> Result<HilbertData> {
    let n = hd.nvars;
    hd.stabilization = d0;
    let fact_top = big_factorial(n - 1);
    hd.rank = if hd.coeffs.len() == n {
        let v = hd.coeffs[n - 1].clone() * BigRational::from_integer(fact_top);
        rational_to_i64(&v, "sheaf rank")?
    } else {
        0
    };
    hd.degree = if n >= 2 {
        let chi = structure_sheaf_coeffs(n);
        let r = BigRational::from_integer(BigInt::from(hd.rank));
        let mut q = vec![BigRational::zero(); n];
        for (k, c) in hd.coeffs.iter().enumerate() {
            q[k] = c.clone();
        }
        for (k, c) in chi.iter().enumerate() {
            q[k] -= r.clone() * c.clone();
        }
        if !q[n - 1].is_zero() {
            return Err(Error::NonIntegralClass(
                "rank subtraction left a full-degree term".into(),
            ));
        }
        let v = q[n - 2].clone() * BigRational::from_integer(big_factorial(n - 2));
        rational_to_i64(&v, "sheaf degree")?
    } else {
        0
    };
    Ok(hd)
}

/// An element of `K_0(P^{n-1})` in the line bundle basis
/// `[O(0)], ..., [O(n-1)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K0Vector {
    n: usize,
    c: Vec<i64>,
}

/// Roll every class `[O(i)]` with `i >= n` down into the basis range
/// using the rank-`n` Koszul relation
/// `sum_{k=0}^{n} (-1)^k binom(n, k) [O(i-k)] = 0`.
fn reduce_classes(n: usize, entries: &[(usize, i64)]) -> Vec<i64> {
    let top = entries.iter().map(|&(i, _)| i).max().unwrap_or(0);
    let mut buf = vec![0i64; top.max(n - 1) + 1];
    for &(i, c) in entries {
        buf[i] += c;
    }
    for i in (n..buf.len()).rev() {
        let c = buf[i];
        if c == 0 {
            continue;
        }
        buf[i] = 0;
        for k in 1..=n {
            let sign: i64 = if k % 2 == 1 { 1 } else { -1 };
            buf[i - k] += sign * usize_binom(n, k) as i64 * c;
        }
    }
    buf.truncate(n);
    buf
}

impl K0Vector {
    pub fn new(n: usize, coeffs: Vec<i64>) -> Self {
        assert!(n >= 1 && coeffs.len() == n, "coefficient count must equal n");
        K0Vector { n, c: coeffs }
    }

    pub fn zero(n: usize) -> Self {
        K0Vector::new(n, vec![0; n])
    }

    /// The class `[O(i)]`, reduced into the basis if `i >= n`.
    pub fn line(n: usize, i: usize) -> Self {
        K0Vector { n, c: reduce_classes(n, &[(i, 1)]) }
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.c
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        K0Vector::new(self.n, self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        K0Vector::new(self.n, self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: i64) -> Self {
        K0Vector::new(self.n, self.c.iter().map(|a| a * s).collect())
    }

    /// Rank of the class: the sum of the basis coefficients.
    pub fn rank(&self) -> i64 {
        self.c.iter().sum()
    }

    /// Degree (first Chern number) of the class.
    pub fn degree(&self) -> i64 {
        self.c.iter().enumerate().map(|(i, &v)| i as i64 * v).sum()
    }

    /// Tensor with `O(t)`: shift every basis class up by `t` and
    /// reduce back into the basis.
    pub fn twist(&self, t: u32) -> Self {
        let entries: Vec<(usize, i64)> =
            self.c.iter().enumerate().map(|(i, &v)| (i + t as usize, v)).collect();
        K0Vector { n: self.n, c: reduce_classes(self.n, &entries) }
    }

    /// Image under restriction to a linear `P^{n'-1}` inside
    /// `P^{n-1}`: each `[O(i)]` restricts to `[O(i)]`, reduced by the
    /// smaller Koszul relation.  Independent of the chosen embedding.
    pub fn restrict(&self, n_sub: usize) -> Result<Self> {
        if n_sub == 0 || n_sub > self.n {
            return Err(Error::InvalidInput(format!(
                "cannot restrict a P^{} class to ambient rank {n_sub}",
                self.n - 1
            )));
        }
        let entries: Vec<(usize, i64)> =
            self.c.iter().enumerate().map(|(i, &v)| (i, v)).collect();
        Ok(K0Vector { n: n_sub, c: reduce_classes(n_sub, &entries) })
    }
}

impl fmt::Display for K0Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, &v) in self.c.iter().enumerate() {
            if v == 0 {
                continue;
            }
            if wrote {
                write!(f, " {} ", if v < 0 { "-" } else { "+" })?;
            } else if v < 0 {
                write!(f, "-")?;
            }
            let a = v.abs();
            if a != 1 {
                write!(f, "{a}")?;
            }
            write!(f, "[O({i})]")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Internal solver shared by [`k0_class`] and the tests: reconstruct
/// integer coefficients from the Hilbert polynomial's values at
/// `d = 0..n-1`, using `chi(O(i)(d)) = binom(d + i + n - 1, n - 1)`.
fn k0_from_values(n: usize, values: &[BigRational]) -> Result<K0Vector> {
    assert_eq!(values.len(), n);
    let a: Vec<Vec<BigRational>> = (0..n)
        .map(|d| {
            (0..n)
                .map(|i| BigRational::from_integer(big_binom(d + i + n - 1, n - 1)))
                .collect()
        })
        .collect();
    let sol = solve_rational(a, values.to_vec())
        .expect("line bundle Hilbert polynomials are linearly independent");
    let mut c = Vec::with_capacity(n);
    for (i, v) in sol.iter().enumerate() {
        c.push(rational_to_i64(v, &format!("coefficient of [O({i})]"))?);
    }
    Ok(K0Vector::new(n, c))
}

/// Class of a sheaf in `K_0(P^{n-1})` from its Hilbert polynomial.
/// Both sides are polynomials of degree below `n`, so agreement at the
/// `n` sample points `d = 0..n-1` is agreement everywhere.
pub fn k0_class(hd: &HilbertData) -> Result<K0Vector> {
    let n = hd.nvars;
    let values: Vec<BigRational> = (0..n).map(|d| hd.eval(d as i64)).collect();
    k0_from_values(n, &values)
}

/// Splitting type of a kernel or image bundle on a projective line:
/// the multiset of twists `a_i` with the sheaf isomorphic to
/// `O(a_1) + ... + O(a_rank)`, sorted descending.
///
/// Graded submodules of free modules over `F_p[y_0, y_1]` are free, so
/// the minimal generator degrees `b_i` determine the splitting via
/// `a_i = -b_i`.  Generators are collected until their count reaches
/// the sheaf rank; overshoot means the input was not such a table.
pub fn splitting_type_p1(table: &mut GradedPieceTable, hd: &HilbertData) -> Result<Vec<i64>> {
    if table.nvars() != 2 {
        return Err(Error::InvalidInput(format!(
            "splitting type needs a rank-2 chart (projective line), got {} variables",
            table.nvars()
        )));
    }
    if table.kind() == PieceKind::Cokernel {
        return Err(Error::InvalidInput(
            "cokernel pieces need not be locally free; no splitting type".into(),
        ));
    }
    let rank = hd.rank;
    if rank < 0 {
        return Err(Error::InvalidInput(format!("negative sheaf rank {rank}")));
    }
    let rank = rank as usize;
    let hard_cap = 4 * table.default_cap() + hd.degree.unsigned_abs() as usize + 16;
    let mut bs: Vec<i64> = Vec::new();
    let mut d = 0usize;
    while bs.len() < rank {
        if d > table.max_degree() {
            if d > hard_cap {
                return Err(Error::NotStabilized { computed_to: table.max_degree() });
            }
            table.extend_to(d)?;
        }
        let gens = table.new_gens[d];
        for _ in 0..gens {
            bs.push(d as i64);
        }
        if bs.len() > rank {
            return Err(Error::InvalidInput(format!(
                "found {} generators for a rank-{rank} sheaf; graded module is not free",
                bs.len()
            )));
        }
        d += 1;
    }
    let mut a: Vec<i64> = bs.iter().map(|&b| -b).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    let total: i64 = a.iter().sum();
    if total != hd.degree {
        return Err(Error::InvalidInput(format!(
            "splitting degrees sum to {total}, Hilbert data says {}",
            hd.degree
        )));
    }
    Ok(a)
}

/// One maximal chart's bundle class within a family.
#[derive(Clone, Debug)]
pub struct FamilyClass {
    /// Lattice member index of the maximal subgroup.
    pub member: usize,
    pub class: K0Vector,
    pub hilbert: HilbertData,
}

/// Restriction of two maximal charts' classes to their meet; stored
/// only when the two restrictions agree (a mismatch aborts the family).
#[derive(Clone, Debug)]
pub struct FamilyMeet {
    /// Lattice member indices of the two maximals and their meet.
    pub a: usize,
    pub b: usize,
    pub member: usize,
    pub class: K0Vector,
}

/// Bundle classes of one module over every maximal chart, with the
/// pairwise restriction checks that glue them into a family.
#[derive(Clone, Debug)]
pub struct K0Family {
    pub power: u32,
    pub kind: PieceKind,
    pub classes: Vec<FamilyClass>,
    pub meets: Vec<FamilyMeet>,
}

/// Compute the family of K-theory classes of a module's kernel, image,
/// or cokernel sheaves over all maximal charts of a lattice, checking
/// pairwise compatibility under restriction to chart intersections.
///
/// The module must have constant `j`-rank on the flat locus (the class
/// of a non-bundle is not defined); a quick seeded sampling gate
/// rejects obvious non-constancy before any table is built.  Charts
/// are processed in lattice order, which is deterministic for a given
/// group construction.
pub fn k0_family(
    lat: &Arc<ElabLattice>,
    m: &ModuleRep,
    power: u32,
    kind: PieceKind,
) -> Result<K0Family> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b30_6661);
    let gate = decide_constant_jrank(
        m,
        lat,
        power,
        Method::Sampled { trials: 60, max_degree: 2 },
        &DecisionLimits::default(),
        &mut rng,
    )?;
    if !gate.is_constant() {
        return Err(Error::NonConstantModule(format!(
            "power-{power} rank is not constant on the flat locus; \
             kernel and cokernel classes are only defined for constant modules \
             ({:?})",
            gate.status
        )));
    }
    let mut classes = Vec::new();
    for &em in lat.maximals() {
        let chart = section_chart(m, lat.member(em), power)?;
        let mut table = graded_pieces(&chart, kind, None)?;
        let hd = hilbert_polynomial(&mut table)?;
        let class = k0_class(&hd)?;
        classes.push(FamilyClass { member: em, class, hilbert: hd });
    }
    let mut meets = Vec::new();
    for &(ai, bi, c) in lat.maximal_intersections() {
        let Some(cm) = c else { continue };
        let rank_c = lat.member(cm).rank();
        if rank_c == 0 {
            continue;
        }
        let ra = classes[ai].class.restrict(rank_c)?;
        let rb = classes[bi].class.restrict(rank_c)?;
        if ra != rb {
            return Err(Error::InvalidInput(format!(
                "bundle class family is incompatible: members {} and {} restrict \
                 differently to member {cm} ({ra} vs {rb})",
                classes[ai].member, classes[bi].member
            )));
        }
        meets.push(FamilyMeet {
            a: classes[ai].member,
            b: classes[bi].member,
            member: cm,
            class: ra,
        });
    }
    Ok(K0Family { power, kind, classes, meets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplat::{elementary_abelian_lattice, GroupTable};
    use crate::modrep;
    use crate::theta::PiPoint;
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn big(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    /// Kernel table, Hilbert data, and class of one module on the
    /// first maximal chart of its group's lattice.
    fn chart_setup(
        group: GroupTable,
        p: u8,
        module: impl Fn(&Arc<GroupTable>) -> ModuleRep,
        power: u32,
        kind: PieceKind,
    ) -> (GradedPieceTable, HilbertData, K0Vector) {
        let g = Arc::new(group);
        let lat = elementary_abelian_lattice(&g, p).unwrap();
        let m = module(&g);
        let sub = lat.member(lat.maximals()[0]);
        let chart = section_chart(&m, sub, power).unwrap();
        let mut table = graded_pieces(&chart, kind, None).unwrap();
        let hd = hilbert_polynomial(&mut table).unwrap();
        let class = k0_class(&hd).unwrap();
        (table, hd, class)
    }

    #[test]
    fn monomial_bases_are_complete_and_ordered() {
        for n in 1..=4usize {
            for d in 0..=5usize {
                let ms = monomials(n, d);
                assert_eq!(ms.len(), usize_binom(d + n - 1, n - 1));
                for m in &ms {
                    assert_eq!(m.iter().sum::<u32>(), d as u32);
                }
                let mut sorted = ms.clone();
                sorted.sort_by(|a, b| b.cmp(a));
                assert_eq!(ms, sorted, "descending lex order");
            }
        }
        assert_eq!(monomials(3, 2)[0], vec![2, 0, 0]);
        assert_eq!(monomials(3, 2).last().unwrap(), &vec![0, 0, 2]);
    }

    #[test]
    fn trivial_module_kernel_is_the_whole_space() {
        let (table, hd, class) = chart_setup(
            GroupTable::klein4(),
            2,
            |g| modrep::trivial_module(g, 2).unwrap(),
            1,
            PieceKind::Kernel,
        );
        for d in 0..=table.max_degree() {
            assert_eq!(table.h(d), d + 1);
        }
        assert_eq!(hd.rank, 1);
        assert_eq!(hd.degree, 0);
        assert_eq!(class, K0Vector::line(2, 0));
    }

    #[test]
    fn radical_square_quotient_kernel_and_splitting() {
        let g = Arc::new(GroupTable::elementary_abelian(3, 2).unwrap());
        let lat = elementary_abelian_lattice(&g, 3).unwrap();
        let m = modrep::radical_square_quotient_module(&g, 3).unwrap();
        let sub = lat.member(lat.maximals()[0]);
        let chart = section_chart(&m, sub, 1).unwrap();
        let mut table = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
        for d in 0..=table.max_degree() {
            assert_eq!(table.h(d), 2 * (d + 1), "kernel misses only the socle generator");
        }
        assert_eq!(table.generator_degrees(), vec![(0, 2)]);
        let hd = hilbert_polynomial(&mut table).unwrap();
        assert_eq!(hd.rank, 2);
        assert_eq!(hd.degree, 0);
        assert_eq!(k0_class(&hd).unwrap(), K0Vector::new(2, vec![2, 0]));
        assert_eq!(splitting_type_p1(&mut table, &hd).unwrap(), vec![0, 0]);
        // The polynomial reproduces the table from the stabilization
        // degree on.
        for d in hd.stabilization..=table.max_degree() {
            assert_eq!(hd.eval_usize(d), Some(table.h(d)));
        }
    }

    #[test]
    fn image_and_cokernel_close_the_euler_identities() {
        let g = Arc::new(GroupTable::elementary_abelian(3, 2).unwrap());
        let lat = elementary_abelian_lattice(&g, 3).unwrap();
        let m = modrep::radical_square_quotient_module(&g, 3).unwrap();
        let sub = lat.member(lat.maximals()[0]);
        let chart = section_chart(&m, sub, 1).unwrap();
        let msize = m.dim() as i64;

        let mut kt = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
        let mut it = graded_pieces(&chart, PieceKind::Image, None).unwrap();
        let mut ct = graded_pieces(&chart, PieceKind::Cokernel, None).unwrap();
        // Exactness in coordinates: rank-nullity degree by degree, and
        // image + cokernel fill the target.
        let top = kt.max_degree().min(it.max_degree().saturating_sub(1));
        for d in 0..=top {
            assert_eq!(kt.h(d) + it.h(d + 1), 3 * (d + 1));
        }
        for t in 0..=it.max_degree().min(ct.max_degree()) {
            assert_eq!(it.h(t) + ct.h(t), 3 * (t + 1));
        }
        // The image module is generated by the chart columns, all in
        // degree 1.
        assert_eq!(it.generator_degrees(), vec![(1, 1)]);

        let kh = hilbert_polynomial(&mut kt).unwrap();
        let ih = hilbert_polynomial(&mut it).unwrap();
        let ch = hilbert_polynomial(&mut ct).unwrap();
        let kcl = k0_class(&kh).unwrap();
        let icl = k0_class(&ih).unwrap();
        let ccl = k0_class(&ch).unwrap();
        assert_eq!(icl, K0Vector::new(2, vec![2, -1]));
        assert_eq!(ccl, K0Vector::new(2, vec![1, 1]));
        // 0 -> ker -> O^m -> im(1) -> 0 and 0 -> im -> O^m -> coker -> 0.
        let free = K0Vector::line(2, 0).scale(msize);
        assert_eq!(kcl.add(&icl.twist(1)), free);
        assert_eq!(icl.add(&ccl), free);
        // Twisted form: inside O(1)^m the image and cokernel sum to
        // the twisted free class.
        assert_eq!(
            icl.twist(1).add(&ccl.twist(1)),
            K0Vector::line(2, 1).scale(msize)
        );
    }

    #[test]
    fn euler_additivity_for_the_free_module() {
        let g = Arc::new(GroupTable::elementary_abelian(3, 2).unwrap());
        let lat = elementary_abelian_lattice(&g, 3).unwrap();
        let m = modrep::regular_module(&g, 3).unwrap();
        let sub = lat.member(lat.maximals()[0]);
        for j in 1..=2u32 {
            let chart = section_chart(&m, sub, j).unwrap();
            let mut kt = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
            let mut it = graded_pieces(&chart, PieceKind::Image, None).unwrap();
            let mut ct = graded_pieces(&chart, PieceKind::Cokernel, None).unwrap();
            let kcl = k0_class(&hilbert_polynomial(&mut kt).unwrap()).unwrap();
            let icl = k0_class(&hilbert_polynomial(&mut it).unwrap()).unwrap();
            let ccl = k0_class(&hilbert_polynomial(&mut ct).unwrap()).unwrap();
            let free = K0Vector::line(2, 0).scale(9);
            assert_eq!(kcl.add(&icl.twist(j)), free, "power {j}");
            assert_eq!(icl.add(&ccl), free, "power {j}");
        }
    }

    #[test]
    fn splitting_of_the_free_module_kernel() {
        let g = Arc::new(GroupTable::elementary_abelian(3, 2).unwrap());
        let lat = elementary_abelian_lattice(&g, 3).unwrap();
        let m = modrep::regular_module(&g, 3).unwrap();
        let sub = lat.member(lat.maximals()[0]);
        let chart = section_chart(&m, sub, 1).unwrap();
        let generic = chart.generic_rank();
        let mut table = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
        let hd = hilbert_polynomial(&mut table).unwrap();
        assert_eq!(hd.rank as usize, m.dim() - generic);
        let a = splitting_type_p1(&mut table, &hd).unwrap();
        assert_eq!(a.len(), hd.rank as usize);
        assert_eq!(a.iter().sum::<i64>(), hd.degree);
        // A splitting reproduces the Hilbert table wherever all
        // summands contribute.
        for d in hd.stabilization..=table.max_degree() {
            let from_split: i64 = a.iter().map(|&ai| (d as i64 + ai + 1).max(0)).sum();
            assert_eq!(from_split, table.h(d) as i64);
        }
    }

    #[test]
    fn hilbert_rank_matches_fiber_ranks() {
        let cases: Vec<(GroupTable, u8, fn(&Arc<GroupTable>) -> ModuleRep)> = vec![
            (GroupTable::klein4(), 2, |g| modrep::regular_module(g, 2).unwrap()),
            (GroupTable::elementary_abelian(3, 2).unwrap(), 3, |g| {
                modrep::radical_square_quotient_module(g, 3).unwrap()
            }),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for (group, p, module) in cases {
            let g = Arc::new(group);
            let lat = Arc::new(elementary_abelian_lattice(&g, p).unwrap());
            let m = module(&g);
            let em = lat.maximals()[0];
            let chart = section_chart(&m, lat.member(em), 1).unwrap();
            let mut table = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
            let hd = hilbert_polynomial(&mut table).unwrap();
            for d in 1..=2u8 {
                for _ in 0..5 {
                    let xi = PiPoint::random_flat(&lat, em, d, &mut rng).unwrap();
                    let act = m.radical_action(lat.member(em), xi.coeffs()).unwrap();
                    assert_eq!(m.dim() - act.rank(), hd.rank as usize);
                }
            }
        }
    }

    #[test]
    fn line_bundle_classes_from_hilbert_values() {
        // h(d) = d + 2 is O(1) on the projective line.
        let v = k0_from_values(2, &[big(2), big(3)]).unwrap();
        assert_eq!(v, K0Vector::line(2, 1));
        // h(d) = 2(d + 1) is the trivial rank-2 bundle.
        let v = k0_from_values(2, &[big(2), big(4)]).unwrap();
        assert_eq!(v, K0Vector::new(2, vec![2, 0]));
        // A non-integral solution is rejected: h(d) = d + 3/2.
        let bad = k0_from_values(2, &[BigRational::new(BigInt::from(3), BigInt::from(2)), BigRational::new(BigInt::from(5), BigInt::from(2))]);
        assert!(matches!(bad, Err(Error::NonIntegralClass(_))));
    }

    #[test]
    fn restriction_and_twist_identities() {
        // [O(1)] restricts to [O(1)].
        assert_eq!(K0Vector::line(3, 1).restrict(2).unwrap(), K0Vector::line(2, 1));
        // [O(2)] on the plane restricts to 2[O(1)] - [O(0)] on the line.
        assert_eq!(
            K0Vector::line(3, 2).restrict(2).unwrap(),
            K0Vector::new(2, vec![-1, 2])
        );
        // Restriction to the same ambient space is the identity.
        let v = K0Vector::new(3, vec![2, -1, 3]);
        assert_eq!(v.restrict(3).unwrap(), v);
        // Twisting walks the line bundle ladder and reduces at the top.
        assert_eq!(K0Vector::line(2, 0).twist(1), K0Vector::line(2, 1));
        assert_eq!(K0Vector::line(2, 1).twist(1), K0Vector::new(2, vec![-1, 2]));
        // Rank and degree of the reduced [O(2)].
        let o2 = K0Vector::new(2, vec![-1, 2]);
        assert_eq!(o2.rank(), 1);
        assert_eq!(o2.degree(), 2);
        assert_eq!(format!("{}", o2), "-[O(0)] + 2[O(1)]");
    }

    #[test]
    fn class_is_independent_of_the_subgroup_basis() {
        let g = Arc::new(GroupTable::elementary_abelian(3, 2).unwrap());
        let lat = elementary_abelian_lattice(&g, 3).unwrap();
        let sub = lat.member(lat.maximals()[0]);
        let b = sub.basis().to_vec();
        let swapped = sub.with_basis(&g, 3, &[b[1], b[0]]).unwrap();
        let mixed = sub.with_basis(&g, 3, &[g.mul(b[0], b[1]), b[1]]).unwrap();
        for module in [
            modrep::regular_module(&g, 3).unwrap(),
            modrep::radical_square_quotient_module(&g, 3).unwrap(),
        ] {
            let mut classes = Vec::new();
            for basis in [sub, &swapped, &mixed] {
                let chart = section_chart(&module, basis, 1).unwrap();
                let mut table = graded_pieces(&chart, PieceKind::Kernel, None).unwrap();
                let hd = hilbert_polynomial(&mut table).unwrap();
                classes.push(k0_class(&hd).unwrap());
            }
            assert_eq!(classes[0], classes[1]);
            assert_eq!(classes[0], classes[2]);
        }
    }

    #[test]
    fn family_of_the_free_module_over_heisenberg() {
        let g = Arc::new(GroupTable::heisenberg(3).unwrap());
        let lat = Arc::new(elementary_abelian_lattice(&g, 3).unwrap());
        let m = modrep::regular_module(&g, 3).unwrap();
        let fam = k0_family(&lat, &m, 1, PieceKind::Kernel).unwrap();
        assert_eq!(fam.classes.len(), 4, "four maximal charts");
        for c in &fam.classes[1..] {
            assert_eq!(c.class, fam.classes[0].class);
        }
        assert_eq!(fam.meets.len(), 6, "all pairs meet in the center");
        let center = fam.meets[0].member;
        for meet in &fam.meets {
            assert_eq!(meet.member, center);
            assert_eq!(meet.class, fam.meets[0].class);
        }
        assert_eq!(fam.meets[0].class.rank(), fam.classes[0].class.rank());
    }

    #[test]
    fn family_rejects_a_nonconstant_module() {
        let g = Arc::new(GroupTable::klein4());
        let lat = Arc::new(elementary_abelian_lattice(&g, 2).unwrap());
        let gen = g.generators()[0];
        let m = modrep::cyclic_coset_module(&g, 2, gen).unwrap();
        match k0_family(&lat, &m, 1, PieceKind::Kernel) {
            Err(Error::NonConstantModule(_)) => {}
            Err(e) => panic!("wrong error: {e}"),
            Ok(_) => panic!("non-constant module must not produce a family"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Twisting commutes with restriction.
        #[test]
        fn twist_and_restrict_commute(
            n in 2usize..5,
            coeffs in proptest::collection::vec(-4i64..5, 4),
            t in 0u32..4,
            pick in 0usize..4,
        ) {
            let v = K0Vector::new(n, coeffs[..n].to_vec());
            let n_sub = 1 + pick % n;
            let a = v.twist(t).restrict(n_sub).unwrap();
            let b = v.restrict(n_sub).unwrap().twist(t);
            prop_assert_eq!(a, b);
        }

        /// Restriction preserves rank; twisting shears degree by rank.
        #[test]
        fn rank_and_degree_transforms(
            n in 2usize..5,
            coeffs in proptest::collection::vec(-4i64..5, 4),
            t in 0u32..4,
        ) {
            let v = K0Vector::new(n, coeffs[..n].to_vec());
            prop_assert_eq!(v.restrict(1).unwrap().rank(), v.rank());
            let w = v.twist(t);
            prop_assert_eq!(w.rank(), v.rank());
            prop_assert_eq!(w.degree(), v.degree() + t as i64 * v.rank());
        }
    }
}
