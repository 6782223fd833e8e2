//! Exact arithmetic in small finite fields.
//!
//! Two element types cover everything the rest of the crate needs:
//! [`Fp`] for prime fields (p <= 31) and [`Fq`] for extensions
//! F_{p^d} with d <= 8.  Both are small `Copy` values that carry their
//! field parameters, so mixed-field arithmetic is caught by assertion
//! instead of producing silent garbage.
//!
//! Extension fields are built over a fixed irreducible polynomial per
//! (p, d): the first monic irreducible of degree d in a deterministic
//! enumeration.  The choice is cached process-wide, so two `Fq` values
//! with equal (p, d) always live in literally the same field.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;
use std::sync::OnceLock;

/// Primes accepted as module characteristics.
pub const SMALL_PRIMES: [u8; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

/// Largest supported extension degree.
pub const MAX_EXT_DEGREE: u8 = 8;

pub fn is_supported_prime(p: u8) -> bool {
    SMALL_PRIMES.contains(&p)
}

/// Element of the prime field F_p.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    v: u8,
    p: u8,
}

impl Fp {
    pub fn new(v: i64, p: u8) -> Self {
        debug_assert!(is_supported_prime(p), "unsupported prime {p}");
        Fp {
            v: v.rem_euclid(p as i64) as u8,
            p,
        }
    }

    pub fn zero(p: u8) -> Self {
        Fp { v: 0, p }
    }

    pub fn one(p: u8) -> Self {
        Fp { v: 1, p }
    }

    pub fn val(self) -> u8 {
        self.v
    }

    pub fn prime(self) -> u8 {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.v == 0
    }

    pub fn inv(self) -> Option<Fp> {
        if self.v == 0 {
            return None;
        }
        // p - 2 fits in u8 and the loop is at most 30 steps; a table
        // would not be faster at these sizes.
        Some(self.pow((self.p - 2) as u64))
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl std::ops::Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "prime field mismatch");
        let mut v = self.v + rhs.v;
        if v >= self.p {
            v -= self.p;
        }
        Fp { v, p: self.p }
    }
}

impl std::ops::Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "prime field mismatch");
        let v = if self.v >= rhs.v {
            self.v - rhs.v
        } else {
            self.v + self.p - rhs.v
        };
        Fp { v, p: self.p }
    }
}

impl std::ops::Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "prime field mismatch");
        Fp {
            v: ((self.v as u16 * rhs.v as u16) % self.p as u16) as u8,
            p: self.p,
        }
    }
}

impl std::ops::Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp::zero(self.p) - self
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

// ---------------------------------------------------------------------------
// Fixed irreducible polynomials.
// ---------------------------------------------------------------------------

/// Modulus registry key -> coefficients c_0..c_{d-1} of the monic
/// irreducible x^d + c_{d-1} x^{d-1} + ... + c_0 defining F_{p^d}.
fn modulus_registry() -> &'static Mutex<HashMap<(u8, u8), [u8; 8]>> {
    static REG: OnceLock<Mutex<HashMap<(u8, u8), [u8; 8]>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Lower coefficients of the fixed degree-d irreducible over F_p.
///
/// Deterministic: candidates are enumerated by the base-p value of
/// (c_0, ..., c_{d-1}) and the first irreducible wins.
pub fn field_modulus(p: u8, d: u8) -> [u8; 8] {
    assert!(is_supported_prime(p), "unsupported prime {p}");
    assert!((1..=MAX_EXT_DEGREE).contains(&d), "extension degree {d} out of range");
    if d == 1 {
        return [0; 8];
    }
    let mut reg = modulus_registry().lock().unwrap();
    if let Some(m) = reg.get(&(p, d)) {
        return *m;
    }
    let found = find_irreducible(p, d);
    reg.insert((p, d), found);
    found
}

fn find_irreducible(p: u8, d: u8) -> [u8; 8] {
    let pd = (p as u64).pow(d as u32);
    for k in 0..pd {
        let mut c = [0u8; 8];
        let mut t = k;
        for ci in c.iter_mut().take(d as usize) {
            *ci = (t % p as u64) as u8;
            t /= p as u64;
        }
        if is_irreducible(&c, p, d) {
            return c;
        }
    }
    unreachable!("irreducible polynomials of every degree exist over F_p")
}

/// Rabin's test: f monic of degree d is irreducible over F_p iff
/// x^{p^d} == x (mod f) and gcd(x^{p^{d/r}} - x, f) = 1 for every prime
/// divisor r of d.
fn is_irreducible(low: &[u8; 8], p: u8, d: u8) -> bool {
    // Only called with d >= 2; degree-1 monics are units away from x - c.
    let d = d as usize;
    let xq = |e: u32| -> Vec<u8> {
        // x^(p^e) mod f by repeated p-th powering of x.
        let mut acc = vec![0u8; d];
        acc[1] = 1; // the polynomial x
        for _ in 0..e {
            acc = dense_pow_mod(&acc, p as u64, low, p, d);
        }
        acc
    };
    let x_poly = {
        let mut x = vec![0u8; d];
        x[1] = 1;
        x
    };
    if xq(d as u32) != x_poly {
        return false;
    }
    let mut m = d;
    let mut prime_divs = Vec::new();
    let mut r = 2;
    while r * r <= m {
        if m % r == 0 {
            prime_divs.push(r);
            while m % r == 0 {
                m /= r;
            }
        }
        r += 1;
    }
    if m > 1 {
        prime_divs.push(m);
    }
    for r in prime_divs {
        let g = xq((d / r) as u32);
        let mut diff = g.clone();
        diff[1] = (diff[1] + p - 1) % p; // g - x
        if !dense_gcd_is_one(&diff, low, p, d) {
            return false;
        }
    }
    true
}

/// (a(x))^e mod (x^d + low) over F_p, a given by d coefficients.
fn dense_pow_mod(a: &[u8], e: u64, low: &[u8; 8], p: u8, d: usize) -> Vec<u8> {
    let mut result = vec![0u8; d];
    result[0] = 1;
    let mut base = a.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = dense_mul_mod(&result, &base, low, p, d);
        }
        base = dense_mul_mod(&base, &base, low, p, d);
        e >>= 1;
    }
    result
}

fn dense_mul_mod(a: &[u8], b: &[u8], low: &[u8; 8], p: u8, d: usize) -> Vec<u8> {
    let mut wide = vec![0u32; 2 * d];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            wide[i + j] += ai as u32 * bj as u32;
        }
    }
    for w in wide.iter_mut() {
        *w %= p as u32;
    }
    // reduce x^k = -low for k >= d
    for k in (d..2 * d).rev() {
        let c = wide[k];
        if c == 0 {
            continue;
        }
        wide[k] = 0;
        for (i, &li) in low.iter().enumerate().take(d) {
            if li != 0 {
                let sub = (c * li as u32) % p as u32;
                let idx = k - d + i;
                wide[idx] = (wide[idx] + p as u32 - sub) % p as u32;
            }
        }
    }
    wide[..d].iter().map(|&w| w as u8).collect()
}

fn dense_gcd_is_one(a: &[u8], low: &[u8; 8], p: u8, d: usize) -> bool {
    // gcd of a with f = x^d + low, computed on dense coefficient vectors.
    let mut f = vec![0u8; d + 1];
    f[..d].copy_from_slice(&low[..d]);
    f[d] = 1;
    let mut g = a.to_vec();
    let mut f = f;
    loop {
        let gd = poly_deg(&g);
        match gd {
            None => return poly_deg(&f) == Some(0),
            Some(0) => return true,
            Some(gd) => {
                let fd = match poly_deg(&f) {
                    None => return gd == 0,
                    Some(x) => x,
                };
                if fd < gd {
                    std::mem::swap(&mut f, &mut g);
                    continue;
                }
                // f -= lead(f)/lead(g) * x^(fd-gd) * g
                let lg_inv = Fp::new(g[gd] as i64, p).inv().unwrap().val();
                let c = (f[fd] as u16 * lg_inv as u16 % p as u16) as u8;
                let shift = fd - gd;
                for i in 0..=gd {
                    let sub = (c as u16 * g[i] as u16 % p as u16) as u8;
                    f[i + shift] = ((f[i + shift] as u16 + p as u16 - sub as u16) % p as u16) as u8;
                }
            }
        }
    }
}

fn poly_deg(a: &[u8]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

// ---------------------------------------------------------------------------
// Extension field elements.
// ---------------------------------------------------------------------------

/// Element of F_{p^d}, stored as coefficients of 1, a, ..., a^{d-1}
/// where a is a root of the fixed irreducible from [`field_modulus`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fq {
    p: u8,
    d: u8,
    c: [u8; 8],
}

impl Fq {
    pub fn zero(p: u8, d: u8) -> Self {
        assert!(is_supported_prime(p) && (1..=MAX_EXT_DEGREE).contains(&d));
        Fq { p, d, c: [0; 8] }
    }

    pub fn one(p: u8, d: u8) -> Self {
        let mut x = Fq::zero(p, d);
        x.c[0] = 1;
        x
    }

    /// The class of the adjoined root a (equals 0 when d = 1 would make
    /// no sense, so d >= 2 is required).
    pub fn generator(p: u8, d: u8) -> Self {
        assert!(d >= 2, "the prime field has no adjoined generator");
        let mut x = Fq::zero(p, d);
        x.c[1] = 1;
        x
    }

    pub fn from_fp(x: Fp, d: u8) -> Self {
        let mut r = Fq::zero(x.prime(), d);
        r.c[0] = x.val();
        r
    }

    pub fn from_int(v: i64, p: u8, d: u8) -> Self {
        Fq::from_fp(Fp::new(v, p), d)
    }

    /// Decode a counter in 0..p^d into a field element (base-p digits).
    pub fn from_counter(k: u64, p: u8, d: u8) -> Self {
        let mut x = Fq::zero(p, d);
        let mut t = k;
        for i in 0..d as usize {
            x.c[i] = (t % p as u64) as u8;
            t /= p as u64;
        }
        debug_assert_eq!(t, 0, "counter out of range");
        x
    }

    pub fn to_counter(self) -> u64 {
        let mut k = 0u64;
        for i in (0..self.d as usize).rev() {
            k = k * self.p as u64 + self.c[i] as u64;
        }
        k
    }

    pub fn prime(self) -> u8 {
        self.p
    }

    pub fn degree(self) -> u8 {
        self.d
    }

    pub fn coeffs(self) -> [u8; 8] {
        self.c
    }

    pub fn is_zero(self) -> bool {
        self.c == [0; 8]
    }

    /// Lift into the degree-d2 extension of the same prime field.
    /// Only the canonical embedding of the prime field is defined, so
    /// the source must have all coefficients above degree 0 zero or be
    /// in F_p already.
    pub fn lift(self, d2: u8) -> Fq {
        if self.d == d2 {
            return self;
        }
        assert!(
            self.c[1..].iter().all(|&x| x == 0),
            "only prime-field elements embed canonically across degrees"
        );
        let mut r = Fq::zero(self.p, d2);
        r.c[0] = self.c[0];
        r
    }

    /// The element as a prime-field value, if it lies in F_p.
    pub fn as_fp(self) -> Option<Fp> {
        if self.c[1..].iter().all(|&x| x == 0) {
            Some(Fp::new(self.c[0] as i64, self.p))
        } else {
            None
        }
    }

    pub fn field_order(self) -> u64 {
        (self.p as u64).pow(self.d as u32)
    }

    pub fn inv(self) -> Option<Fq> {
        if self.is_zero() {
            return None;
        }
        Some(self.pow(self.field_order() - 2))
    }

    pub fn pow(self, mut e: u64) -> Fq {
        let mut base = self;
        let mut acc = Fq::one(self.p, self.d);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Frobenius x -> x^{p^e}.
    pub fn frobenius(self, e: u32) -> Fq {
        let e = e % self.d as u32;
        if e == 0 {
            return self;
        }
        self.pow((self.p as u64).pow(e))
    }
}

impl std::ops::Add for Fq {
    type Output = Fq;
    fn add(self, rhs: Fq) -> Fq {
        assert!(self.p == rhs.p && self.d == rhs.d, "field mismatch");
        let mut c = [0u8; 8];
        for i in 0..self.d as usize {
            let mut v = self.c[i] + rhs.c[i];
            if v >= self.p {
                v -= self.p;
            }
            c[i] = v;
        }
        Fq { p: self.p, d: self.d, c }
    }
}

impl std::ops::Sub for Fq {
    type Output = Fq;
    fn sub(self, rhs: Fq) -> Fq {
        assert!(self.p == rhs.p && self.d == rhs.d, "field mismatch");
        let mut c = [0u8; 8];
        for i in 0..self.d as usize {
            let v = if self.c[i] >= rhs.c[i] {
                self.c[i] - rhs.c[i]
            } else {
                self.c[i] + self.p - rhs.c[i]
            };
            c[i] = v;
        }
        Fq { p: self.p, d: self.d, c }
    }
}

impl std::ops::Mul for Fq {
    type Output = Fq;
    fn mul(self, rhs: Fq) -> Fq {
        assert!(self.p == rhs.p && self.d == rhs.d, "field mismatch");
        let d = self.d as usize;
        if d == 1 {
            return Fq {
                p: self.p,
                d: self.d,
                c: {
                    let mut c = [0u8; 8];
                    c[0] = ((self.c[0] as u16 * rhs.c[0] as u16) % self.p as u16) as u8;
                    c
                },
            };
        }
        let low = field_modulus(self.p, self.d);
        let mut wide = [0u32; 16];
        for i in 0..d {
            if self.c[i] == 0 {
                continue;
            }
            for j in 0..d {
                wide[i + j] += self.c[i] as u32 * rhs.c[j] as u32;
            }
        }
        let p32 = self.p as u32;
        for w in wide.iter_mut() {
            *w %= p32;
        }
        for k in (d..2 * d).rev() {
            let c = wide[k];
            if c == 0 {
                continue;
            }
            wide[k] = 0;
            for (i, &li) in low.iter().enumerate().take(d) {
                if li != 0 {
                    let sub = (c * li as u32) % p32;
                    wide[k - d + i] = (wide[k - d + i] + p32 - sub) % p32;
                }
            }
        }
        let mut c = [0u8; 8];
        for i in 0..d {
            c[i] = wide[i] as u8;
        }
        Fq { p: self.p, d: self.d, c }
    }
}

impl std::ops::Neg for Fq {
    type Output = Fq;
    fn neg(self) -> Fq {
        Fq::zero(self.p, self.d) - self
    }
}

impl fmt::Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d == 1 || self.c[1..].iter().all(|&x| x == 0) {
            return write!(f, "{}", self.c[0]);
        }
        let mut first = true;
        for i in (0..self.d as usize).rev() {
            if self.c[i] == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, self.c[i]) {
                (0, v) => write!(f, "{v}")?,
                (1, 1) => write!(f, "a")?,
                (1, v) => write!(f, "{v}a")?,
                (i, 1) => write!(f, "a^{i}")?,
                (i, v) => write!(f, "{v}a^{i}")?,
            }
        }
        Ok(())
    }
}

/// Iterate over every element of F_{p^d} in counter order.
pub fn all_field_elements(p: u8, d: u8) -> impl Iterator<Item = Fq> {
    let n = (p as u64).pow(d as u32);
    (0..n).map(move |k| Fq::from_counter(k, p, d))
}

// ---------------------------------------------------------------------------
// Table-driven arithmetic for exhaustive sweeps.
// ---------------------------------------------------------------------------

/// Flat lookup tables for a field of order q <= 256, indexing elements
/// by their counter code.  Exhaustive point sweeps work on these codes
/// and never touch `Fq` in the inner loop.
pub struct SmallFieldTable {
    pub p: u8,
    pub d: u8,
    pub q: usize,
    pub add: Vec<u8>,
    pub sub: Vec<u8>,
    pub mul: Vec<u8>,
    pub neg: Vec<u8>,
    pub inv: Vec<u8>,
}

impl SmallFieldTable {
    pub fn new(p: u8, d: u8) -> Self {
        let q = (p as u64).pow(d as u32);
        assert!(q <= 256, "field too large for table-driven arithmetic");
        let q = q as usize;
        let elems: Vec<Fq> = all_field_elements(p, d).collect();
        let mut add = vec![0u8; q * q];
        let mut sub = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        let mut neg = vec![0u8; q];
        let mut inv = vec![0u8; q];
        for i in 0..q {
            neg[i] = (-elems[i]).to_counter() as u8;
            inv[i] = match elems[i].inv() {
                Some(x) => x.to_counter() as u8,
                None => 0,
            };
            for j in 0..q {
                add[i * q + j] = (elems[i] + elems[j]).to_counter() as u8;
                sub[i * q + j] = (elems[i] - elems[j]).to_counter() as u8;
                mul[i * q + j] = (elems[i] * elems[j]).to_counter() as u8;
            }
        }
        SmallFieldTable { p, d, q, add, sub, mul, neg, inv }
    }

    #[inline(always)]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline(always)]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.sub[a as usize * self.q + b as usize]
    }

    #[inline(always)]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q + b as usize]
    }

    #[inline(always)]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    pub fn decode(&self, a: u8) -> Fq {
        Fq::from_counter(a as u64, self.p, self.d)
    }

    pub fn encode(&self, x: Fq) -> u8 {
        assert!(x.prime() == self.p && x.degree() == self.d);
        x.to_counter() as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_arithmetic() {
        let a = Fp::new(5, 7);
        let b = Fp::new(4, 7);
        assert_eq!((a + b).val(), 2);
        assert_eq!((a - b).val(), 1);
        assert_eq!((a * b).val(), 6);
        assert_eq!(a.inv().unwrap().val(), 3); // 5*3 = 15 = 1 mod 7
        assert!(Fp::zero(7).inv().is_none());
    }

    #[test]
    fn modulus_is_irreducible_and_fixed() {
        // F_4 = F_2[a]/(a^2+a+1): the only irreducible quadratic over F_2.
        assert_eq!(field_modulus(2, 2)[..2], [1, 1]);
        // Repeated calls return the identical polynomial.
        assert_eq!(field_modulus(3, 4), field_modulus(3, 4));
    }

    #[test]
    fn extension_field_is_a_field() {
        for (p, d) in [(2u8, 2u8), (2, 3), (3, 2), (5, 2), (2, 8), (31, 2)] {
            let q = (p as u64).pow(d as u32);
            // every nonzero element has a working inverse
            for k in 1..q.min(200) {
                let x = Fq::from_counter(k, p, d);
                let xi = x.inv().unwrap();
                assert_eq!(x * xi, Fq::one(p, d), "inverse failed in F_{p}^{d}");
            }
        }
    }

    #[test]
    fn multiplicative_group_order() {
        // the unit group of F_9 has order 8
        let mut seen = std::collections::HashSet::new();
        for x in all_field_elements(3, 2) {
            if !x.is_zero() {
                seen.insert(x.pow(8));
            }
        }
        assert_eq!(seen.len(), 1);
        assert!(seen.contains(&Fq::one(3, 2)));
    }

    #[test]
    fn frobenius_has_order_d() {
        for (p, d) in [(2u8, 4u8), (3, 3), (5, 2)] {
            for k in 0..(p as u64).pow(d as u32).min(100) {
                let x = Fq::from_counter(k, p, d);
                // frobenius iterated d times is the identity
                let mut y = x;
                for _ in 0..d {
                    y = y.frobenius(1);
                }
                assert_eq!(x, y);
                // and x^p equals frobenius(1)
                assert_eq!(x.pow(p as u64), x.frobenius(1));
            }
        }
        // frobenius is not the identity for d > 1: some element moves
        let moved = all_field_elements(2, 3).any(|x| x.frobenius(1) != x);
        assert!(moved);
    }

    #[test]
    fn counter_roundtrip() {
        for k in 0..81 {
            assert_eq!(Fq::from_counter(k, 3, 4).to_counter(), k);
        }
    }

    #[test]
    fn small_field_table_matches_fq() {
        let t = SmallFieldTable::new(3, 2);
        for i in 0..9u8 {
            for j in 0..9u8 {
                let a = t.decode(i);
                let b = t.decode(j);
                assert_eq!(t.decode(t.add(i, j)), a + b);
                assert_eq!(t.decode(t.sub(i, j)), a - b);
                assert_eq!(t.decode(t.mul(i, j)), a * b);
            }
            if i != 0 {
                assert_eq!(t.decode(t.inv(i)), t.decode(i).inv().unwrap());
            }
        }
    }

    #[test]
    fn lift_embeds_prime_field() {
        let x = Fq::from_int(2, 3, 1);
        let y = x.lift(2);
        assert_eq!(y.degree(), 2);
        assert_eq!(y + y + y, Fq::zero(3, 2));
    }
}
