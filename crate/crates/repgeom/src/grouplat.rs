//! Finite groups as multiplication tables, and the poset of nontrivial
//! elementary abelian p-subgroups with its conjugation action.
//!
//! Groups arrive as explicit tables, permutation generators, matrix
//! generators over F_p, or builtin families.  Elements are indexed
//! 0..n-1 with 0 the identity; generator words are retained so that
//! module code can extend a representation from generator matrices to
//! the whole group deterministically.
//!
//! Conjugation convention: g^x = x g x^{-1}, so (E^x)^y = E^{yx}.

use crate::error::{Error, Result};
use crate::field::{is_supported_prime, Fp};
use crate::linalg::Mat;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

pub const DEFAULT_ORDER_CAP: usize = 50_000;
/// Largest order for which the dense n*n multiplication table is
/// materialized; beyond this the memory cost (4 bytes per pair) is not
/// worth supporting at desk scale.
pub const DENSE_TABLE_CAP: usize = 4_096;

#[derive(Clone)]
pub struct GroupTable {
    n: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    orders: Vec<u32>,
    generators: Vec<usize>,
    /// words[g] = generator-index sequence multiplying to g (left to right).
    words: Vec<Vec<usize>>,
    /// Per-element matrices over F_p when built from matrix generators.
    matrices: Option<Vec<Mat<Fp>>>,
    matrix_prime: Option<u8>,
}

impl GroupTable {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.n + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    /// x g x^{-1}
    #[inline]
    pub fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(x, g), self.inv(x))
    }

    pub fn element_order(&self, a: usize) -> u32 {
        self.orders[a]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn word(&self, g: usize) -> &[usize] {
        &self.words[g]
    }

    pub fn matrices(&self) -> Option<&[Mat<Fp>]> {
        self.matrices.as_deref()
    }

    pub fn matrix_prime(&self) -> Option<u8> {
        self.matrix_prime
    }

    pub fn power(&self, g: usize, e: u32) -> usize {
        let mut acc = 0usize;
        for _ in 0..e {
            acc = self.mul(acc, g);
        }
        acc
    }

    /// Validate and wrap an explicit multiplication table.  Index 0
    /// must be the identity; associativity is checked on all triples.
    pub fn from_table(table: &[Vec<u32>]) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::NotAGroup("empty table".into()));
        }
        if n > 512 {
            return Err(Error::ResourceLimit(format!(
                "explicit table of order {n} exceeds the associativity-check budget"
            )));
        }
        let mut mul = vec![0u32; n * n];
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotAGroup(format!("row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if v as usize >= n {
                    return Err(Error::NotAGroup(format!("entry ({i},{j}) out of range")));
                }
                mul[i * n + j] = v;
            }
        }
        for g in 0..n {
            if mul[g] as usize != g || mul[g * n] as usize != g {
                return Err(Error::NotAGroup("index 0 is not a two-sided identity".into()));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ij = mul[i * n + j] as usize;
                for k in 0..n {
                    let jk = mul[j * n + k] as usize;
                    if mul[ij * n + k] != mul[i * n + jk] {
                        return Err(Error::NonAssociative { i, j, k });
                    }
                }
            }
        }
        Self::finish(n, mul, None, None)
    }

    fn finish(
        n: usize,
        mul: Vec<u32>,
        matrices: Option<Vec<Mat<Fp>>>,
        matrix_prime: Option<u8>,
    ) -> Result<Self> {
        let mut inv = vec![u32::MAX; n];
        for g in 0..n {
            for h in 0..n {
                if mul[g * n + h] == 0 && mul[h * n + g] == 0 {
                    inv[g] = h as u32;
                    break;
                }
            }
            if inv[g] == u32::MAX {
                return Err(Error::NotInvertible { g });
            }
        }
        let mut orders = vec![0u32; n];
        for g in 0..n {
            let mut acc = g;
            let mut ord = 1u32;
            while acc != 0 {
                acc = mul[acc * n + g] as usize;
                ord += 1;
            }
            orders[g] = ord;
        }
        let mut gt = GroupTable {
            n,
            mul,
            inv,
            orders,
            generators: Vec::new(),
            words: Vec::new(),
            matrices,
            matrix_prime,
        };
        gt.pick_generators_and_words();
        Ok(gt)
    }

    /// Greedy generating set (smallest indices first) plus BFS words.
    fn pick_generators_and_words(&mut self) {
        let n = self.n;
        let mut gens: Vec<usize> = Vec::new();
        let mut span = vec![false; n];
        span[0] = true;
        let mut span_count = 1;
        while span_count < n {
            let g = (0..n).find(|&g| !span[g]).unwrap();
            gens.push(g);
            // close the current span under the new generator set
            let mut frontier: Vec<usize> = (0..n).filter(|&h| span[h]).collect();
            while let Some(h) = frontier.pop() {
                for &k in &gens {
                    let hk = self.mul(h, k);
                    if !span[hk] {
                        span[hk] = true;
                        span_count += 1;
                        frontier.push(hk);
                    }
                }
            }
        }
        // BFS words in the chosen generators
        let mut words: Vec<Option<Vec<usize>>> = vec![None; n];
        words[0] = Some(Vec::new());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(h) = queue.pop_front() {
            for (gi, &g) in gens.iter().enumerate() {
                let hg = self.mul(h, g);
                if words[hg].is_none() {
                    let mut w = words[h].clone().unwrap();
                    w.push(gi);
                    words[hg] = Some(w);
                    queue.push_back(hg);
                }
            }
        }
        self.generators = gens;
        self.words = words.into_iter().map(|w| w.expect("generators span")).collect();
    }

    /// Close permutation generators (as images of 0..degree-1) into a
    /// full table.
    pub fn from_permutations(degree: usize, gens: &[Vec<u32>]) -> Result<Self> {
        Self::from_permutations_with_cap(degree, gens, DEFAULT_ORDER_CAP)
    }

    pub fn from_permutations_with_cap(
        degree: usize,
        gens: &[Vec<u32>],
        cap: usize,
    ) -> Result<Self> {
        for g in gens {
            if g.len() != degree {
                return Err(Error::InvalidInput("permutation length != degree".into()));
            }
            let mut seen = vec![false; degree];
            for &v in g {
                if v as usize >= degree || seen[v as usize] {
                    return Err(Error::InvalidInput("not a permutation".into()));
                }
                seen[v as usize] = true;
            }
        }
        let id: Vec<u32> = (0..degree as u32).collect();
        let compose = |a: &Vec<u32>, b: &Vec<u32>| -> Vec<u32> {
            // (a then b): x -> b[a[x]]
            a.iter().map(|&x| b[x as usize]).collect()
        };
        let elems = close_elements(id, gens, compose, cap)?;
        table_from_closed(&elems, None, None)
    }

    /// Close invertible matrix generators over F_p into a full table,
    /// retaining the per-element matrices.
    pub fn from_matrices(p: u8, dim: usize, gens: &[Mat<Fp>]) -> Result<Self> {
        Self::from_matrices_with_cap(p, dim, gens, DEFAULT_ORDER_CAP)
    }

    pub fn from_matrices_with_cap(
        p: u8,
        dim: usize,
        gens: &[Mat<Fp>],
        cap: usize,
    ) -> Result<Self> {
        if !is_supported_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        for (gi, g) in gens.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator {gi} is {}x{}, expected {dim}x{dim}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            if g.rank() != dim {
                return Err(Error::NotInvertible { g: gi });
            }
        }
        let key = |m: &Mat<Fp>| -> Vec<u8> {
            let mut k = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    k.push(m[(i, j)].val());
                }
            }
            k
        };
        let id = Mat::<Fp>::identity(p, dim);
        let gen_keys: Vec<(Vec<u8>, Mat<Fp>)> =
            gens.iter().map(|g| (key(g), g.clone())).collect();
        // closure on matrix keys
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut elems: Vec<Mat<Fp>> = Vec::new();
        index.insert(key(&id), 0);
        elems.push(id);
        let mut qh = 0usize;
        while qh < elems.len() {
            let cur = elems[qh].clone();
            qh += 1;
            for (_, g) in &gen_keys {
                let prod = cur.matmul(g);
                let k = key(&prod);
                if !index.contains_key(&k) {
                    if elems.len() >= cap {
                        return Err(Error::OrderCapExceeded { cap });
                    }
                    index.insert(k, elems.len());
                    elems.push(prod);
                }
            }
        }
        let n = elems.len();
        if n > DENSE_TABLE_CAP {
            return Err(Error::ResourceLimit(format!(
                "group of order {n} exceeds the dense-table guard {DENSE_TABLE_CAP}"
            )));
        }
        let mut mul = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let prod = elems[i].matmul(&elems[j]);
                mul[i * n + j] = index[&key(&prod)] as u32;
            }
        }
        GroupTable::finish(n, mul, Some(elems), Some(p))
    }

    pub fn elementary_abelian(p: u8, r: usize) -> Result<Self> {
        if !is_supported_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        let n = (p as usize).checked_pow(r as u32).filter(|&n| n <= DENSE_TABLE_CAP);
        let Some(n) = n else {
            return Err(Error::ResourceLimit(format!(
                "p^r exceeds the dense-table guard {DENSE_TABLE_CAP}"
            )));
        };
        let pu = p as usize;
        let mut mul = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let (mut a, mut b, mut out, mut w) = (i, j, 0usize, 1usize);
                for _ in 0..r {
                    out += ((a + b) % pu) * w;
                    a /= pu;
                    b /= pu;
                    w *= pu;
                }
                mul[i * n + j] = out as u32;
            }
        }
        GroupTable::finish(n, mul, None, None)
    }

    pub fn klein4() -> Self {
        Self::elementary_abelian(2, 2).expect("klein4 is supported")
    }

    /// Upper unitriangular 3x3 matrices over F_p, built from the two
    /// elementary generators so the natural matrices ride along.
    pub fn heisenberg(p: u8) -> Result<Self> {
        if !is_supported_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        let e12 = Mat::from_fn(p, 3, 3, |i, j| {
            Fp::new(((i == j) || (i == 0 && j == 1)) as i64, p)
        });
        let e23 = Mat::from_fn(p, 3, 3, |i, j| {
            Fp::new(((i == j) || (i == 1 && j == 2)) as i64, p)
        });
        Self::from_matrices(p, 3, &[e12, e23])
    }

    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("dihedral(n) needs n >= 2".into()));
        }
        let rot: Vec<u32> = (0..n).map(|i| ((i + 1) % n) as u32).collect();
        let refl: Vec<u32> = (0..n).map(|i| ((n - i) % n) as u32).collect();
        Self::from_permutations(n, &[rot, refl])
    }

    pub fn alternating4() -> Self {
        // (0 1 2) and (0 1)(2 3)
        let c3 = vec![1u32, 2, 0, 3];
        let d2 = vec![1u32, 0, 3, 2];
        Self::from_permutations(4, &[c3, d2]).expect("A4 closes at order 12")
    }

    pub fn symmetric3() -> Self {
        let c3 = vec![1u32, 2, 0];
        let t = vec![1u32, 0, 2];
        Self::from_permutations(3, &[c3, t]).expect("S3 closes at order 6")
    }
}

fn close_elements<T: Clone>(
    identity: T,
    gens: &[T],
    compose: impl Fn(&T, &T) -> T,
    cap: usize,
) -> Result<Vec<T>>
where
    T: std::hash::Hash + Eq,
{
    let mut index: HashMap<T, usize> = HashMap::new();
    let mut elems: Vec<T> = Vec::new();
    index.insert(identity.clone(), 0);
    elems.push(identity);
    let mut qh = 0usize;
    while qh < elems.len() {
        let cur = elems[qh].clone();
        qh += 1;
        for g in gens {
            let prod = compose(&cur, g);
            if !index.contains_key(&prod) {
                if elems.len() >= cap {
                    return Err(Error::OrderCapExceeded { cap });
                }
                index.insert(prod.clone(), elems.len());
                elems.push(prod);
            }
        }
    }
    Ok(elems)
}

fn table_from_closed<T: Clone + std::hash::Hash + Eq>(
    elems: &[T],
    matrices: Option<Vec<Mat<Fp>>>,
    matrix_prime: Option<u8>,
) -> Result<GroupTable>
where
    T: PermLike,
{
    let n = elems.len();
    if n > DENSE_TABLE_CAP {
        return Err(Error::ResourceLimit(format!(
            "group of order {n} exceeds the dense-table guard {DENSE_TABLE_CAP}"
        )));
    }
    let index: HashMap<&T, usize> = elems.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut mul = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            let prod = elems[i].compose(&elems[j]);
            mul[i * n + j] = *index
                .get(&prod)
                .ok_or_else(|| Error::NotAGroup("closure not closed".into()))?
                as u32;
        }
    }
    GroupTable::finish(n, mul, matrices, matrix_prime)
}

trait PermLike: Sized {
    fn compose(&self, other: &Self) -> Self;
}

impl PermLike for Vec<u32> {
    fn compose(&self, other: &Self) -> Self {
        self.iter().map(|&x| other[x as usize]).collect()
    }
}

/// A subgroup flagged elementary abelian, with a chosen ordered basis
/// and exponent coordinates for every element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    elements: Vec<usize>,
    rank: usize,
    basis: Vec<usize>,
    /// (element, exponent vector in the basis), sorted by element index.
    coords: Vec<(usize, Vec<u8>)>,
}

impl Subgroup {
    /// Build from a closed set of elements forming an elementary
    /// abelian p-group inside `g`.  The basis is chosen greedily by
    /// element index; coordinates enumerate all exponent tuples.
    pub fn from_elements(g: &GroupTable, p: u8, elements: &[usize]) -> Result<Self> {
        let mut elems: Vec<usize> = elements.to_vec();
        elems.sort_unstable();
        elems.dedup();
        if elems.first() != Some(&0) {
            return Err(Error::NotAGroup("subgroup must contain the identity".into()));
        }
        for &a in &elems {
            if a != 0 && g.element_order(a) != p as u32 {
                return Err(Error::NotAGroup(format!(
                    "element {a} has order {} != {p}",
                    g.element_order(a)
                )));
            }
            for &b in &elems {
                if g.mul(a, b) != g.mul(b, a) {
                    return Err(Error::NotAGroup(format!("elements {a},{b} do not commute")));
                }
                if elems.binary_search(&g.mul(a, b)).is_err() {
                    return Err(Error::NotAGroup("set not closed under multiplication".into()));
                }
            }
        }
        // greedy basis
        let mut basis: Vec<usize> = Vec::new();
        let mut span: BTreeSet<usize> = BTreeSet::from([0]);
        for &h in &elems {
            if span.contains(&h) {
                continue;
            }
            basis.push(h);
            let prev: Vec<usize> = span.iter().copied().collect();
            for s in prev {
                let mut acc = s;
                for _ in 1..p {
                    acc = g.mul(acc, h);
                    span.insert(acc);
                }
            }
        }
        Self::with_basis_impl(g, p, elems, basis)
    }

    /// The same subgroup with a caller-chosen ordered basis.
    pub fn with_basis(&self, g: &GroupTable, p: u8, basis: &[usize]) -> Result<Self> {
        for b in basis {
            if self.elements.binary_search(b).is_err() {
                return Err(Error::InvalidInput(format!("basis element {b} not in subgroup")));
            }
        }
        Self::with_basis_impl(g, p, self.elements.clone(), basis.to_vec())
    }

    fn with_basis_impl(
        g: &GroupTable,
        p: u8,
        elems: Vec<usize>,
        basis: Vec<usize>,
    ) -> Result<Self> {
        let r = basis.len();
        let pr = (p as usize).pow(r as u32);
        if pr != elems.len() {
            return Err(Error::NotAGroup(format!(
                "basis of size {r} cannot generate {} elements",
                elems.len()
            )));
        }
        let mut coord_of: HashMap<usize, Vec<u8>> = HashMap::new();
        for code in 0..pr {
            let mut c = code;
            let mut exps = vec![0u8; r];
            let mut elem = 0usize;
            for i in 0..r {
                exps[i] = (c % p as usize) as u8;
                c /= p as usize;
                elem = g.mul(elem, g.power(basis[i], exps[i] as u32));
            }
            if coord_of.insert(elem, exps).is_some() {
                return Err(Error::NotAGroup("basis is not independent".into()));
            }
        }
        let coords: Vec<(usize, Vec<u8>)> = elems
            .iter()
            .map(|&e| {
                coord_of
                    .get(&e)
                    .map(|c| (e, c.clone()))
                    .ok_or_else(|| Error::NotAGroup("basis does not generate".into()))
            })
            .collect::<Result<_>>()?;
        Ok(Subgroup { elements: elems, rank: r, basis, coords })
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn contains(&self, g: usize) -> bool {
        self.elements.binary_search(&g).is_ok()
    }

    pub fn coords_of(&self, g: usize) -> Option<&[u8]> {
        self.coords
            .binary_search_by_key(&g, |(e, _)| *e)
            .ok()
            .map(|i| self.coords[i].1.as_slice())
    }

    /// Non-identity elements ordered lexicographically by exponent
    /// vector; this is the canonical ordering of the J_E basis vectors
    /// g - e and of the variables x_g.
    pub fn nonidentity_by_exponent(&self) -> Vec<usize> {
        let mut v: Vec<(Vec<u8>, usize)> = self
            .coords
            .iter()
            .filter(|(e, _)| *e != 0)
            .map(|(e, c)| (c.clone(), *e))
            .collect();
        v.sort();
        v.into_iter().map(|(_, e)| e).collect()
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|e| other.contains(*e))
    }
}

/// The poset of nontrivial elementary abelian p-subgroups.
pub struct ElabLattice {
    group: Arc<GroupTable>,
    p: u8,
    members: Vec<Subgroup>,
    /// All strict inclusion pairs (sub-index, super-index).
    edges: Vec<(usize, usize)>,
    maximals: Vec<usize>,
    /// For each maximal pair (i < j, indices into `maximals`): member
    /// index of the intersection when nontrivial.
    max_intersections: Vec<(usize, usize, Option<usize>)>,
}

pub fn elementary_abelian_lattice(group: &Arc<GroupTable>, p: u8) -> Result<ElabLattice> {
    if !is_supported_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    if group.order() % p as usize != 0 {
        return Err(Error::PrimeDoesNotDivideOrder { p, order: group.order() });
    }
    let g = group.as_ref();
    let n = g.order();
    let order_p: Vec<usize> = (0..n).filter(|&x| g.element_order(x) == p as u32).collect();

    // grow subgroups rank by rank; key = sorted element list
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut layer: Vec<Vec<usize>> = Vec::new();
    for &x in &order_p {
        let mut cyc: Vec<usize> = (0..p as u32).map(|e| g.power(x, e)).collect();
        cyc.sort_unstable();
        if seen.insert(cyc.clone()) {
            layer.push(cyc);
        }
    }
    let mut all: Vec<Vec<usize>> = layer.clone();
    while !layer.is_empty() {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for s in &layer {
            for &x in &order_p {
                if s.binary_search(&x).is_ok() {
                    continue;
                }
                if !s.iter().all(|&a| g.mul(a, x) == g.mul(x, a)) {
                    continue;
                }
                // product set s * <x>, size p * |s|
                let mut bigger: Vec<usize> = Vec::with_capacity(s.len() * p as usize);
                for &a in s {
                    let mut acc = a;
                    bigger.push(a);
                    for _ in 1..p {
                        acc = g.mul(acc, x);
                        bigger.push(acc);
                    }
                }
                bigger.sort_unstable();
                if seen.insert(bigger.clone()) {
                    next.push(bigger);
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all.sort();
    let members: Vec<Subgroup> = all
        .iter()
        .map(|elems| Subgroup::from_elements(g, p, elems))
        .collect::<Result<_>>()?;

    let mut edges = Vec::new();
    for i in 0..members.len() {
        for j in 0..members.len() {
            if i != j
                && members[i].order() < members[j].order()
                && members[i].is_subset_of(&members[j])
            {
                edges.push((i, j));
            }
        }
    }
    let maximals: Vec<usize> = (0..members.len())
        .filter(|&i| edges.iter().all(|&(a, _)| a != i))
        .collect();
    let mut max_intersections = Vec::new();
    let member_index = |elems: &[usize]| -> Option<usize> {
        members.iter().position(|m| m.elements() == elems)
    };
    for a in 0..maximals.len() {
        for b in (a + 1)..maximals.len() {
            let ea = &members[maximals[a]];
            let eb = &members[maximals[b]];
            let common: Vec<usize> = ea
                .elements()
                .iter()
                .copied()
                .filter(|e| eb.contains(*e))
                .collect();
            let idx = if common.len() > 1 { member_index(&common) } else { None };
            max_intersections.push((a, b, idx));
        }
    }
    Ok(ElabLattice { group: group.clone(), p, members, edges, maximals, max_intersections })
}

impl ElabLattice {
    pub fn group(&self) -> &Arc<GroupTable> {
        &self.group
    }

    pub fn prime(&self) -> u8 {
        self.p
    }

    pub fn members(&self) -> &[Subgroup] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Subgroup {
        &self.members[i]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn maximals(&self) -> &[usize] {
        &self.maximals
    }

    pub fn maximal_intersections(&self) -> &[(usize, usize, Option<usize>)] {
        &self.max_intersections
    }

    pub fn member_index(&self, elements: &[usize]) -> Option<usize> {
        let mut sorted = elements.to_vec();
        sorted.sort_unstable();
        self.members.iter().position(|m| m.elements() == sorted)
    }

    pub fn containing_maximals(&self, idx: usize) -> Vec<usize> {
        self.maximals
            .iter()
            .copied()
            .filter(|&m| m == idx || self.members[idx].is_subset_of(&self.members[m]))
            .collect()
    }

    /// The lattice of a subgroup sigma of the same group: the members
    /// contained in sigma, with poset data recomputed.  Member data and
    /// element indexing are shared with the parent.
    pub fn sublattice(&self, sigma: &[usize]) -> Result<ElabLattice> {
        let g = self.group.as_ref();
        let mut s: Vec<usize> = sigma.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.binary_search(&0).is_err() {
            return Err(Error::NotAGroup("subgroup must contain the identity".into()));
        }
        for &a in &s {
            if s.binary_search(&g.inv(a)).is_err() {
                return Err(Error::NotAGroup(format!("inverse of {a} missing")));
            }
            for &b in &s {
                if s.binary_search(&g.mul(a, b)).is_err() {
                    return Err(Error::NotAGroup(format!("product {a}*{b} escapes the set")));
                }
            }
        }
        let members: Vec<Subgroup> = self
            .members
            .iter()
            .filter(|m| m.elements().iter().all(|e| s.binary_search(e).is_ok()))
            .cloned()
            .collect();
        if members.is_empty() {
            return Err(Error::PrimeDoesNotDivideOrder { p: self.p, order: s.len() });
        }
        let mut edges = Vec::new();
        for i in 0..members.len() {
            for j in 0..members.len() {
                if i != j
                    && members[i].order() < members[j].order()
                    && members[i].is_subset_of(&members[j])
                {
                    edges.push((i, j));
                }
            }
        }
        let maximals: Vec<usize> = (0..members.len())
            .filter(|&i| edges.iter().all(|&(a, _)| a != i))
            .collect();
        let mut max_intersections = Vec::new();
        for a in 0..maximals.len() {
            for b in (a + 1)..maximals.len() {
                let ea = &members[maximals[a]];
                let eb = &members[maximals[b]];
                let common: Vec<usize> = ea
                    .elements()
                    .iter()
                    .copied()
                    .filter(|e| eb.contains(*e))
                    .collect();
                let idx = if common.len() > 1 {
                    members.iter().position(|m| m.elements() == common)
                } else {
                    None
                };
                max_intersections.push((a, b, idx));
            }
        }
        Ok(ElabLattice {
            group: self.group.clone(),
            p: self.p,
            members,
            edges,
            maximals,
            max_intersections,
        })
    }

    /// E^x with the element bijection g -> x g x^{-1}.  The conjugate
    /// subgroup keeps the lattice's stored basis, which need not be the
    /// image of E's basis.
    pub fn conjugate(&self, idx: usize, x: usize) -> Result<(usize, Vec<(usize, usize)>)> {
        let e = self
            .members
            .get(idx)
            .ok_or_else(|| Error::InvalidInput(format!("no lattice member {idx}")))?;
        let g = self.group.as_ref();
        let bij: Vec<(usize, usize)> =
            e.elements().iter().map(|&h| (h, g.conj(h, x))).collect();
        let image: Vec<usize> = bij.iter().map(|&(_, h)| h).collect();
        let target = self
            .member_index(&image)
            .ok_or_else(|| Error::NotAGroup("conjugate left the lattice".into()))?;
        Ok((target, bij))
    }
}
