//! Sparse multivariate polynomials over F_p with the graded reverse
//! lexicographic order.
//!
//! Terms are kept sorted in decreasing grevlex order with no zero
//! coefficients, so equality of polynomials is equality of the term
//! vectors.  The monomial order is fixed crate-wide: every consumer
//! (Bareiss elimination, Buchberger, normal forms) assumes grevlex.

use crate::error::Error;
use crate::field::{Fp, Fq};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Exponent vector; length always equals the ring's variable count.
pub type Exp = SmallVec<[u8; 12]>;

/// Variable tags.  The tag records what a variable means so that
/// substitution maps between charts can be checked, not guessed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Var {
    /// Coordinate dual to (g - e) for the group element with this index.
    X(u32),
    /// Chart coordinate for the i-th subgroup basis element (s_E chart).
    Y(u8),
    /// Coordinate in the product basis of the augmentation ideal,
    /// indexed by a packed exponent code local to the chart.
    Z(u32),
    /// Auxiliary variable (radical-membership adjunction).
    T(u8),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x_{i}"),
            Var::Y(i) => write!(f, "y{}", i + 1),
            Var::Z(i) => write!(f, "z{i}"),
            Var::T(i) => write!(f, "t{i}"),
        }
    }
}

/// A polynomial ring descriptor: characteristic and ordered variables.
#[derive(PartialEq, Eq, Debug)]
pub struct PolyRing {
    pub p: u8,
    pub vars: Vec<Var>,
}

impl PolyRing {
    pub fn new(p: u8, vars: Vec<Var>) -> Arc<PolyRing> {
        assert!(crate::field::is_supported_prime(p));
        let mut seen = vars.clone();
        seen.sort_by_key(|v| format!("{v:?}"));
        seen.dedup();
        assert_eq!(seen.len(), vars.len(), "duplicate variables in ring");
        Arc::new(PolyRing { p, vars })
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, v: Var) -> Option<usize> {
        self.vars.iter().position(|&w| w == v)
    }
}

fn same_ring(a: &Arc<PolyRing>, b: &Arc<PolyRing>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Graded reverse lexicographic comparison of exponent vectors.
pub fn grevlex(a: &Exp, b: &Exp) -> Ordering {
    let da: u32 = a.iter().map(|&x| x as u32).sum();
    let db: u32 = b.iter().map(|&x| x as u32).sum();
    match da.cmp(&db) {
        Ordering::Equal => {}
        o => return o,
    }
    // ties: the rightmost differing exponent decides, smaller wins
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => {}
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    ring: Arc<PolyRing>,
    /// (exponent vector, coefficient) sorted in strictly decreasing
    /// grevlex order, coefficients in 1..p-1.
    terms: Vec<(Exp, u8)>,
}

impl MultiPoly {
    pub fn zero(ring: &Arc<PolyRing>) -> Self {
        MultiPoly { ring: ring.clone(), terms: Vec::new() }
    }

    pub fn constant(ring: &Arc<PolyRing>, c: i64) -> Self {
        let c = Fp::new(c, ring.p);
        if c.is_zero() {
            return Self::zero(ring);
        }
        let e: Exp = SmallVec::from_elem(0u8, ring.nvars());
        MultiPoly { ring: ring.clone(), terms: vec![(e, c.val())] }
    }

    pub fn var(ring: &Arc<PolyRing>, idx: usize) -> Self {
        assert!(idx < ring.nvars());
        let mut e: Exp = SmallVec::from_elem(0u8, ring.nvars());
        e[idx] = 1;
        MultiPoly { ring: ring.clone(), terms: vec![(e, 1)] }
    }

    pub fn monomial(ring: &Arc<PolyRing>, e: Exp, c: i64) -> Self {
        assert_eq!(e.len(), ring.nvars());
        let c = Fp::new(c, ring.p);
        if c.is_zero() {
            return Self::zero(ring);
        }
        MultiPoly { ring: ring.clone(), terms: vec![(e, c.val())] }
    }

    /// Build from arbitrary (exponent, coefficient) pairs, normalizing.
    pub fn from_terms(ring: &Arc<PolyRing>, terms: Vec<(Exp, i64)>) -> Self {
        let raw: Vec<(Exp, u8)> = terms
            .into_iter()
            .map(|(e, c)| {
                assert_eq!(e.len(), ring.nvars());
                (e, Fp::new(c, ring.p).val())
            })
            .collect();
        Self::normalize(ring.clone(), raw)
    }

    fn normalize(ring: Arc<PolyRing>, mut raw: Vec<(Exp, u8)>) -> Self {
        raw.sort_unstable_by(|a, b| grevlex(&b.0, &a.0));
        let p = ring.p as u16;
        let mut out: Vec<(Exp, u8)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            match out.last_mut() {
                Some((le, lc)) if *le == e => {
                    *lc = ((*lc as u16 + c as u16) % p) as u8;
                }
                _ => out.push((e, c % p as u8)),
            }
        }
        out.retain(|(_, c)| *c != 0);
        MultiPoly { ring, terms: out }
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Exp, u8)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn leading(&self) -> Option<(&Exp, u8)> {
        self.terms.first().map(|(e, c)| (e, *c))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().map(|&x| x as u32).sum())
            .max()
    }

    /// Some(d) when every term has total degree d.  The zero polynomial
    /// is homogeneous of every degree; it reports None here and callers
    /// treat it as compatible with anything.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.iter().map(|(e, _)| e.iter().map(|&x| x as u32).sum::<u32>());
        let first = it.next()?;
        if it.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.iter().all(|(e, _)| e.iter().all(|&x| x == 0))
    }

    pub fn constant_value(&self) -> Option<Fp> {
        if self.is_zero() {
            return Some(Fp::zero(self.ring.p));
        }
        if self.is_constant() {
            return Some(Fp::new(self.terms[0].1 as i64, self.ring.p));
        }
        None
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert!(same_ring(&self.ring, &rhs.ring), "ring mismatch");
        // merge two sorted term lists
        let p = self.ring.p as u16;
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < rhs.terms.len() {
            match grevlex(&self.terms[i].0, &rhs.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(rhs.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = (self.terms[i].1 as u16 + rhs.terms[j].1 as u16) % p;
                    if c != 0 {
                        out.push((self.terms[i].0.clone(), c as u8));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&rhs.terms[j..]);
        MultiPoly { ring: self.ring.clone(), terms: out }
    }

    pub fn neg(&self) -> Self {
        let p = self.ring.p;
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), p - c)).collect();
        MultiPoly { ring: self.ring.clone(), terms }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, c: i64) -> Self {
        let c = Fp::new(c, self.ring.p);
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, k)| (e.clone(), (Fp::new(*k as i64, self.ring.p) * c).val()))
            .collect();
        MultiPoly { ring: self.ring.clone(), terms }
    }

    /// Multiply by a single term.
    pub fn mul_term(&self, e: &Exp, c: u8) -> Self {
        if c == 0 {
            return Self::zero(&self.ring);
        }
        let p = self.ring.p as u16;
        let terms = self
            .terms
            .iter()
            .map(|(te, tc)| {
                let mut ne = te.clone();
                for (a, b) in ne.iter_mut().zip(e.iter()) {
                    *a = a.checked_add(*b).expect("exponent overflow");
                }
                (ne, ((*tc as u16 * c as u16) % p) as u8)
            })
            .collect();
        // multiplying by a monomial preserves strict grevlex order
        MultiPoly { ring: self.ring.clone(), terms }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert!(same_ring(&self.ring, &rhs.ring), "ring mismatch");
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(&self.ring);
        }
        let mut raw: Vec<(Exp, u8)> = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        let p = self.ring.p as u16;
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = ea.clone();
                for (a, b) in e.iter_mut().zip(eb.iter()) {
                    *a = a.checked_add(*b).expect("exponent overflow");
                }
                raw.push((e, ((*ca as u16 * *cb as u16) % p) as u8));
            }
        }
        Self::normalize(self.ring.clone(), raw)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(&self.ring, 1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Evaluate at a point with coordinates in F_{p^d}.
    pub fn eval(&self, point: &[Fq]) -> Fq {
        assert_eq!(point.len(), self.ring.nvars(), "point dimension mismatch");
        let (p, d) = match point.first() {
            Some(x) => (x.prime(), x.degree()),
            None => (self.ring.p, 1),
        };
        assert_eq!(p, self.ring.p, "characteristic mismatch");
        let mut acc = Fq::zero(p, d);
        for (e, c) in &self.terms {
            let mut t = Fq::from_int(*c as i64, p, d);
            for (i, &ei) in e.iter().enumerate() {
                if ei > 0 {
                    t = t * point[i].pow(ei as u64);
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Remap variables into another ring.  `images[i]` is the target
    /// variable index for variable i, or None to substitute zero.
    /// Distinct kept variables must map to distinct targets.
    pub fn map_vars(&self, target: &Arc<PolyRing>, images: &[Option<usize>]) -> Self {
        assert_eq!(images.len(), self.ring.nvars());
        assert_eq!(target.p, self.ring.p);
        let mut raw: Vec<(Exp, u8)> = Vec::new();
        'terms: for (e, c) in &self.terms {
            let mut ne: Exp = SmallVec::from_elem(0u8, target.nvars());
            for (i, &ei) in e.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                match images[i] {
                    Some(t) => ne[t] = ne[t].checked_add(ei).expect("exponent overflow"),
                    None => continue 'terms, // term killed by x -> 0
                }
            }
            raw.push((ne, *c));
        }
        Self::normalize(target.clone(), raw)
    }

    /// Substitute a polynomial for one variable, keeping the ring.
    pub fn subst_var(&self, idx: usize, image: &MultiPoly) -> Self {
        assert!(same_ring(&self.ring, &image.ring), "ring mismatch");
        let mut acc = Self::zero(&self.ring);
        for (e, c) in &self.terms {
            let mut t = Self::constant(&self.ring, *c as i64);
            let mut rest = e.clone();
            let ei = rest[idx];
            rest[idx] = 0;
            t = t.mul_term(&rest, 1);
            if ei > 0 {
                t = t.mul(&image.pow(ei as u32));
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Raise every variable to the q-th power (x_i -> x_i^q).
    /// In characteristic p with q a power of p this is the ring map
    /// induced by the Frobenius on coordinates.
    pub fn stretch_exponents(&self, q: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let ne: Exp = e
                    .iter()
                    .map(|&x| {
                        let v = x as u32 * q;
                        u8::try_from(v).expect("exponent overflow")
                    })
                    .collect();
                (ne, *c)
            })
            .collect();
        // x -> x^q is monotone for grevlex: degrees scale uniformly and
        // tie-breaks compare scaled vectors with the same outcome.
        MultiPoly { ring: self.ring.clone(), terms }
    }

    /// Multivariate division: returns the normal form of self modulo
    /// the divisors (full reduction of every term).
    pub fn normal_form(&self, divisors: &[&MultiPoly]) -> Self {
        for d in divisors {
            assert!(same_ring(&self.ring, &d.ring), "ring mismatch");
            assert!(!d.is_zero(), "division by zero polynomial");
        }
        let p = self.ring.p;
        let mut work = self.clone();
        let mut remainder: Vec<(Exp, u8)> = Vec::new();
        'outer: while let Some((lt_e, lt_c)) = work.leading() {
            let lt_e = lt_e.clone();
            for d in divisors {
                let (de, dc) = d.leading().unwrap();
                if divides(de, &lt_e) {
                    let mut qe = lt_e.clone();
                    for (a, b) in qe.iter_mut().zip(de.iter()) {
                        *a -= b;
                    }
                    let qc = Fp::new(lt_c as i64, p) * Fp::new(dc as i64, p).inv().unwrap();
                    work = work.sub(&d.mul_term(&qe, qc.val()));
                    continue 'outer;
                }
            }
            // leading term irreducible: move it to the remainder
            remainder.push((lt_e.clone(), lt_c));
            work.terms.remove(0);
        }
        // remainder was collected in decreasing order already
        MultiPoly { ring: self.ring.clone(), terms: remainder }
    }

    /// Exact division; errors if the quotient does not exist.
    pub fn exact_div(&self, divisor: &MultiPoly) -> Result<Self, Error> {
        assert!(same_ring(&self.ring, &divisor.ring), "ring mismatch");
        if self.is_zero() {
            return Ok(Self::zero(&self.ring));
        }
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let p = self.ring.p;
        let mut work = self.clone();
        let mut quot: Vec<(Exp, u8)> = Vec::new();
        let (de, dc) = {
            let (e, c) = divisor.leading().unwrap();
            (e.clone(), c)
        };
        let dc_inv = Fp::new(dc as i64, p).inv().unwrap();
        while let Some((lt_e, lt_c)) = work.leading() {
            if !divides(&de, lt_e) {
                return Err(Error::InexactDivision);
            }
            let mut qe = lt_e.clone();
            for (a, b) in qe.iter_mut().zip(de.iter()) {
                *a -= b;
            }
            let qc = (Fp::new(lt_c as i64, p) * dc_inv).val();
            quot.push((qe.clone(), qc));
            work = work.sub(&divisor.mul_term(&qe, qc));
        }
        Ok(MultiPoly { ring: self.ring.clone(), terms: quot })
    }
}

pub fn divides(d: &Exp, m: &Exp) -> bool {
    d.iter().zip(m.iter()).all(|(a, b)| a <= b)
}

pub fn exp_lcm(a: &Exp, b: &Exp) -> Exp {
    a.iter().zip(b.iter()).map(|(&x, &y)| x.max(y)).collect()
}

// Display writes terms in stored (decreasing) order: "2*x_1^2*x_3 + 1".
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let is_const = e.iter().all(|&x| x == 0);
            if *c != 1 || is_const {
                write!(f, "{c}")?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut first = true;
            for (i, &ei) in e.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.ring.vars[i])?;
                if ei > 1 {
                    write!(f, "^{ei}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring2() -> Arc<PolyRing> {
        PolyRing::new(3, vec![Var::Y(0), Var::Y(1)])
    }

    fn ring3(p: u8) -> Arc<PolyRing> {
        PolyRing::new(p, vec![Var::Y(0), Var::Y(1), Var::Y(2)])
    }

    #[test]
    fn grevlex_orders_degree_first() {
        let e = |v: &[u8]| -> Exp { SmallVec::from_slice(v) };
        assert_eq!(grevlex(&e(&[2, 0]), &e(&[1, 0])), Ordering::Greater);
        // same degree: x^2 > xy > y^2 in grevlex on (x, y)
        assert_eq!(grevlex(&e(&[2, 0]), &e(&[1, 1])), Ordering::Greater);
        assert_eq!(grevlex(&e(&[1, 1]), &e(&[0, 2])), Ordering::Greater);
        // classic grevlex vs lex separation: x*z vs y^2 with vars (x,y,z):
        // grevlex puts y^2 above x*z (rightmost difference z: 1 > 0)
        assert_eq!(grevlex(&e(&[0, 2, 0]), &e(&[1, 0, 1])), Ordering::Greater);
    }

    #[test]
    fn arithmetic_normalizes() {
        let r = ring2();
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let f = x.add(&y).pow(2); // x^2 + 2xy + y^2 over F_3
        assert_eq!(f.num_terms(), 3);
        let g = f.sub(&f);
        assert!(g.is_zero());
        // (x+y) + 2(x+y) = 3(x+y) = 0 over F_3
        let h = x.add(&y).add(&x.add(&y).scale(2));
        assert!(h.is_zero());
    }

    #[test]
    fn eval_matches_expansion() {
        let r = ring2();
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let f = x.mul(&x).add(&x.mul(&y).scale(2)).add(&MultiPoly::constant(&r, 1));
        let pt = [Fq::from_int(2, 3, 1), Fq::from_int(1, 3, 1)];
        // 4 + 4 + 1 = 9 = 0 mod 3
        assert!(f.eval(&pt).is_zero());
    }

    #[test]
    fn normal_form_reduces_fully() {
        let r = ring2();
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        // reduce x^2 y + y modulo {x^2}: every multiple of x^2 drops
        let f = x.pow(2).mul(&y).add(&y);
        let d = x.pow(2);
        let nf = f.normal_form(&[&d]);
        assert_eq!(nf, y);
    }

    #[test]
    fn exact_division_roundtrip() {
        let r = ring3(5);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let z = MultiPoly::var(&r, 2);
        let g = x.add(&y.scale(2)).add(&z.mul(&z));
        let h = x.mul(&y).add(&MultiPoly::constant(&r, 3));
        let f = g.mul(&h);
        assert_eq!(f.exact_div(&g).unwrap(), h);
        assert_eq!(f.exact_div(&h).unwrap(), g);
        assert!(f.add(&MultiPoly::constant(&r, 1)).exact_div(&g).is_err());
    }

    #[test]
    fn map_vars_kills_and_renames() {
        let src = PolyRing::new(3, vec![Var::X(4), Var::X(7), Var::X(9)]);
        let dst = PolyRing::new(3, vec![Var::Y(0), Var::Y(1)]);
        let f = MultiPoly::from_terms(
            &src,
            vec![
                (SmallVec::from_slice(&[1, 1, 0]), 1), // x4 x7
                (SmallVec::from_slice(&[0, 0, 2]), 2), // 2 x9^2
                (SmallVec::from_slice(&[2, 0, 0]), 1), // x4^2
            ],
        );
        // x4 -> y1, x7 -> 0, x9 -> y2
        let g = f.map_vars(&dst, &[Some(0), None, Some(1)]);
        let y1 = MultiPoly::var(&dst, 0);
        let y2 = MultiPoly::var(&dst, 1);
        assert_eq!(g, y2.pow(2).scale(2).add(&y1.pow(2)));
    }

    #[test]
    fn stretch_is_frobenius_compatible() {
        // f(x^p) evaluated at a equals f evaluated at a^p
        let r = ring2();
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let f = x.mul(&y).scale(2).add(&x.pow(2)).add(&y);
        let g = f.stretch_exponents(3);
        for k in 0..81 {
            let a = Fq::from_counter(k % 9, 3, 2);
            let b = Fq::from_counter(k / 9, 3, 2);
            let lhs = g.eval(&[a, b]);
            let rhs = f.eval(&[a.pow(3), b.pow(3)]);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn subst_var_expands() {
        let r = ring2();
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        // substitute x -> y + 1 in x^2: (y+1)^2 = y^2 + 2y + 1
        let f = x.pow(2);
        let img = y.add(&MultiPoly::constant(&r, 1));
        let g = f.subst_var(0, &img);
        assert_eq!(g, y.pow(2).add(&y.scale(2)).add(&MultiPoly::constant(&r, 1)));
    }
}
