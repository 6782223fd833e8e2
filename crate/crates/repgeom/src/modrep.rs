//! Modules over a group algebra given by generator matrices, and the
//! augmentation-ideal data of elementary abelian subgroups.
//!
//! A module is validated as an honest representation at load time: the
//! per-element matrices are extended from the generators along stored
//! words and the homomorphism property is checked on the full table.
//! Groups beyond the dense-table guard never reach this code, so eager
//! materialization is cheap and keeps later lookups allocation-free.
//!
//! For an elementary abelian subgroup E of rank r, [`RadicalBasis`]
//! fixes the basis {g - e} of J_E indexed by non-identity elements in
//! exponent-lexicographic order, computes coordinates of every power
//! J_E^j, and normalizes a basis of the annihilator of J_E^2 dual to
//! the chosen subgroup basis.  Those forms project J_E onto J_E/J_E^2
//! and decide flatness of points.

use crate::error::{Error, Result};
use crate::field::{is_supported_prime, Fp, Fq};
use crate::grouplat::{GroupTable, Subgroup};
use crate::linalg::{Mat, Scalar};
use std::sync::Arc;

#[derive(Clone)]
pub struct ModuleRep {
    group: Arc<GroupTable>,
    p: u8,
    dim: usize,
    mats: Vec<Mat<Fp>>,
}

impl ModuleRep {
    /// Extend generator matrices to the whole group and validate the
    /// homomorphism property on every pair of elements.
    pub fn load(group: &Arc<GroupTable>, gen_matrices: &[Mat<Fp>]) -> Result<Self> {
        let gens = group.generators();
        if gen_matrices.len() != gens.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generator matrices for {} generators",
                gen_matrices.len(),
                gens.len()
            )));
        }
        if gen_matrices.is_empty() {
            return Err(Error::InvalidInput("trivial group needs no module loader".into()));
        }
        let p = gen_matrices[0].desc();
        if !is_supported_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        let dim = gen_matrices[0].nrows();
        for (i, m) in gen_matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim || m.desc() != p {
                return Err(Error::DimensionMismatch(format!("generator matrix {i}")));
            }
            if m.rank() != dim {
                return Err(Error::NotInvertible { g: gens[i] });
            }
        }
        let n = group.order();
        let mut mats: Vec<Mat<Fp>> = Vec::with_capacity(n);
        for g in 0..n {
            let mut acc = Mat::<Fp>::identity(p, dim);
            for &gi in group.word(g) {
                acc = acc.matmul(&gen_matrices[gi]);
            }
            mats.push(acc);
        }
        for g in 0..n {
            for h in 0..n {
                if mats[g].matmul(&mats[h]) != mats[group.mul(g, h)] {
                    return Err(Error::RelationViolation { g, h });
                }
            }
        }
        Ok(ModuleRep { group: group.clone(), p, dim, mats })
    }

    pub fn group(&self) -> &Arc<GroupTable> {
        &self.group
    }

    pub fn prime(&self) -> u8 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, g: usize) -> &Mat<Fp> {
        &self.mats[g]
    }

    /// rho(g) - I over F_p.
    pub fn action_minus_identity(&self, g: usize) -> Mat<Fp> {
        self.mats[g].sub(&Mat::identity(self.p, self.dim))
    }

    /// rho(g) with entries lifted into F_{p^d}.
    pub fn matrix_ext(&self, g: usize, d: u8) -> Mat<Fq> {
        let p = self.p;
        Mat::from_fn((p, d), self.dim, self.dim, |i, j| {
            Fq::from_fp(self.mats[g][(i, j)], d)
        })
    }

    /// Sum_g a_g (rho(g) - I) over F_{p^d}, with `a` indexed by the
    /// non-identity elements of E in exponent order.
    pub fn radical_action(&self, e: &Subgroup, a: &[Fq]) -> Result<Mat<Fq>> {
        let elems = e.nonidentity_by_exponent();
        if a.len() != elems.len() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector length {} != {} non-identity elements",
                a.len(),
                elems.len()
            )));
        }
        let d = a.iter().map(|x| x.degree()).max().unwrap_or(1);
        let desc = (self.p, d);
        let mut acc = Mat::<Fq>::zero(desc, self.dim, self.dim);
        let id = Mat::<Fq>::identity(desc, self.dim);
        for (&g, &coef) in elems.iter().zip(a.iter()) {
            if Scalar::is_zero(&coef) {
                continue;
            }
            let coef = coef.lift(d);
            let m = self.matrix_ext(g, d).sub(&id).scale(coef);
            acc = acc.add(&m);
        }
        Ok(acc)
    }

    /// Same over the prime field.
    pub fn radical_action_fp(&self, e: &Subgroup, a: &[Fp]) -> Result<Mat<Fp>> {
        let aq: Vec<Fq> = a.iter().map(|&x| Fq::from_fp(x, 1)).collect();
        let m = self.radical_action(e, &aq)?;
        Ok(Mat::from_fn(self.p, self.dim, self.dim, |i, j| {
            m[(i, j)].as_fp().expect("degree-1 entries")
        }))
    }
}

/// Block-diagonal sum of two modules over the same group.
pub fn direct_sum(a: &ModuleRep, b: &ModuleRep) -> Result<ModuleRep> {
    if !Arc::ptr_eq(&a.group, &b.group) || a.p != b.p {
        return Err(Error::InvalidInput("direct sum needs one group and one prime".into()));
    }
    let (da, db) = (a.dim, b.dim);
    let gens = a.group.generators().to_vec();
    let gm: Vec<Mat<Fp>> = gens
        .iter()
        .map(|&g| {
            Mat::from_fn(a.p, da + db, da + db, |i, j| {
                if i < da && j < da {
                    a.mats[g][(i, j)]
                } else if i >= da && j >= da {
                    b.mats[g][(i - da, j - da)]
                } else {
                    Fp::new(0, a.p)
                }
            })
        })
        .collect();
    ModuleRep::load(&a.group, &gm)
}

/// The one-dimensional module with every generator acting as 1.
pub fn trivial_module(group: &Arc<GroupTable>, p: u8) -> Result<ModuleRep> {
    let gm: Vec<Mat<Fp>> = group
        .generators()
        .iter()
        .map(|_| Mat::identity(p, 1))
        .collect();
    ModuleRep::load(group, &gm)
}

/// The regular representation k[G]: rho(g) permutes the element basis
/// by left multiplication.
pub fn regular_module(group: &Arc<GroupTable>, p: u8) -> Result<ModuleRep> {
    let n = group.order();
    let gm: Vec<Mat<Fp>> = group
        .generators()
        .iter()
        .map(|&g| {
            Mat::from_fn(p, n, n, |i, j| Fp::new((group.mul(g, j) == i) as i64, p))
        })
        .collect();
    ModuleRep::load(group, &gm)
}

/// The defining matrix module of a matrix-generated group.
pub fn natural_module(group: &Arc<GroupTable>) -> Result<ModuleRep> {
    let mats = group
        .matrices()
        .ok_or_else(|| Error::InvalidInput("group was not built from matrices".into()))?;
    let gm: Vec<Mat<Fp>> = group.generators().iter().map(|&g| mats[g].clone()).collect();
    ModuleRep::load(group, &gm)
}

/// k[G / <g>] as a left module: the quotient of the regular module by
/// the left ideal generated by g - e.  Basis: left cosets, represented
/// by their smallest element, ascending.
pub fn cyclic_coset_module(group: &Arc<GroupTable>, p: u8, g: usize) -> Result<ModuleRep> {
    let ord = group.element_order(g) as usize;
    if ord == 1 {
        return regular_module(group, p);
    }
    let n = group.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for x in 0..n {
        if coset_of[x] != usize::MAX {
            continue;
        }
        let c = reps.len();
        reps.push(x);
        let mut acc = x;
        for _ in 0..ord {
            coset_of[acc] = c;
            acc = group.mul(acc, g);
        }
    }
    let m = reps.len();
    let gm: Vec<Mat<Fp>> = group
        .generators()
        .iter()
        .map(|&h| {
            Mat::from_fn(p, m, m, |i, j| {
                Fp::new((coset_of[group.mul(h, reps[j])] == i) as i64, p)
            })
        })
        .collect();
    ModuleRep::load(group, &gm)
}

/// kE / J_E^2 for an elementary abelian group: dimension r + 1 with
/// basis (1, class of g_1 - e, ..., class of g_r - e).
pub fn radical_square_quotient_module(group: &Arc<GroupTable>, p: u8) -> Result<ModuleRep> {
    let r = group.generators().len();
    for &g in group.generators() {
        if group.element_order(g) != p as u32 {
            return Err(Error::InvalidInput("group is not elementary abelian of exponent p".into()));
        }
    }
    if group.order() != (p as usize).pow(r as u32) {
        return Err(Error::InvalidInput("group is not elementary abelian".into()));
    }
    let gm: Vec<Mat<Fp>> = (0..r)
        .map(|i| {
            Mat::from_fn(p, r + 1, r + 1, |row, col| {
                let mut v = (row == col) as i64;
                if row == i + 1 && col == 0 {
                    v += 1;
                }
                Fp::new(v, p)
            })
        })
        .collect();
    ModuleRep::load(group, &gm)
}

/// Augmentation-ideal data of one elementary abelian subgroup.
pub struct RadicalBasis {
    subgroup: Subgroup,
    p: u8,
    /// Non-identity elements in exponent order; v_i = elements[i] - e.
    elements: Vec<usize>,
    /// powers[j-1] = row basis of J^j in J coordinates, j = 1..=nilp.
    powers: Vec<Mat<Fp>>,
    /// Annihilator of J^2, normalized so row i is dual to v_{g_i}.
    ann2: Mat<Fp>,
}

impl RadicalBasis {
    pub fn new(group: &GroupTable, e: &Subgroup, p: u8) -> Result<Self> {
        let r = e.rank();
        let elements = e.nonidentity_by_exponent();
        let nj = elements.len(); // p^r - 1
        // local index: 0 = identity, 1 + position otherwise
        let mut loc = std::collections::HashMap::new();
        loc.insert(0usize, 0usize);
        for (i, &g) in elements.iter().enumerate() {
            loc.insert(g, i + 1);
        }
        let ga = nj + 1;
        let mul_ga = |a: &[Fp], g: usize| -> Vec<Fp> {
            // multiply group-algebra vector by the element g
            let mut out = vec![Fp::new(0, p); ga];
            for (li, &c) in a.iter().enumerate() {
                if Scalar::is_zero(&c) {
                    continue;
                }
                let gl = if li == 0 { 0 } else { elements[li - 1] };
                let prod = group.mul(g, gl);
                let pl = loc[&prod];
                out[pl] = out[pl] + c;
            }
            out
        };
        let to_j_coords = |a: &[Fp]| -> Vec<Fp> {
            // valid for augmentation-zero vectors: drop the identity slot
            a[1..].to_vec()
        };
        let from_j_coords = |v: &[Fp]| -> Vec<Fp> {
            let mut a = vec![Fp::new(0, p); ga];
            let mut s = Fp::new(0, p);
            for (i, &c) in v.iter().enumerate() {
                a[i + 1] = c;
                s = s + c;
            }
            a[0] = Fp::new(0, p) - s;
            a
        };

        let nilp = r * (p as usize - 1) + 1;
        let mut powers: Vec<Mat<Fp>> = Vec::with_capacity(nilp);
        powers.push(Mat::identity(p, nj));
        for _j in 2..=nilp {
            let prev = powers.last().unwrap();
            let mut rows: Vec<Vec<Fp>> = Vec::new();
            for bi in 0..prev.nrows() {
                let w = from_j_coords(prev.row(bi));
                for &g in &elements {
                    // (g - e) * w
                    let gw = mul_ga(&w, g);
                    let diff: Vec<Fp> = gw.iter().zip(w.iter()).map(|(&x, &y)| x - y).collect();
                    rows.push(to_j_coords(&diff));
                }
            }
            let stacked = if rows.is_empty() {
                Mat::zero(p, 0, nj)
            } else {
                Mat::from_rows(p, rows)
            };
            let (rref, pivots) = stacked.rref();
            let basis_rows: Vec<Vec<Fp>> =
                (0..pivots.len()).map(|i| rref.row(i).to_vec()).collect();
            powers.push(if basis_rows.is_empty() {
                Mat::zero(p, 0, nj)
            } else {
                Mat::from_rows(p, basis_rows)
            });
        }

        // annihilator of J^2, normalized dual to the subgroup basis
        let j2 = &powers[1.min(powers.len() - 1)];
        let ann_raw = if j2.nrows() == 0 {
            Mat::identity(p, nj)
        } else {
            j2.nullspace()
        };
        if ann_raw.nrows() != r {
            return Err(Error::DimensionMismatch(format!(
                "annihilator of J^2 has dimension {} != rank {r}",
                ann_raw.nrows()
            )));
        }
        // column position of each basis generator g_i in J coordinates
        let basis_pos: Vec<usize> = e
            .basis()
            .iter()
            .map(|b| elements.iter().position(|g| g == b).expect("basis element listed"))
            .collect();
        let pairing = Mat::from_fn(p, r, r, |i, j| ann_raw[(i, basis_pos[j])]);
        let mut ann_rows: Vec<Vec<Fp>> = Vec::with_capacity(r);
        for i in 0..r {
            // solve pairing^T c = delta_i, then row_i = sum c_k ann_raw[k]
            let rhs: Vec<Fp> = (0..r).map(|k| Fp::new((k == i) as i64, p)).collect();
            let c = pairing
                .transpose()
                .solve(&rhs)
                .ok_or_else(|| Error::DimensionMismatch("degenerate J/J^2 pairing".into()))?;
            let mut row = vec![Fp::new(0, p); nj];
            for (k, &ck) in c.iter().enumerate() {
                for (m, slot) in row.iter_mut().enumerate() {
                    *slot = *slot + ck * ann_raw[(k, m)];
                }
            }
            ann_rows.push(row);
        }
        let ann2 = Mat::from_rows(p, ann_rows);

        Ok(RadicalBasis { subgroup: e.clone(), p, elements, powers, ann2 })
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn prime(&self) -> u8 {
        self.p
    }

    /// Non-identity elements in exponent order (the J basis indexing).
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn dim_j(&self) -> usize {
        self.elements.len()
    }

    /// Row basis of J^j in J coordinates.  j >= 1; beyond the
    /// nilpotency degree the basis is empty.
    pub fn power_basis(&self, j: usize) -> Result<Mat<Fp>> {
        if j < 1 {
            return Err(Error::InvalidInput("radical power j must be >= 1".into()));
        }
        if j <= self.powers.len() {
            Ok(self.powers[j - 1].clone())
        } else {
            Ok(Mat::zero(self.p, 0, self.dim_j()))
        }
    }

    /// Normalized annihilator forms of J^2: row i is dual to g_i - e.
    pub fn ann_j2(&self) -> &Mat<Fp> {
        &self.ann2
    }

    /// Coordinates of a J-vector in J/J^2 w.r.t. the basis classes of
    /// g_i - e: simply the annihilator forms applied to the vector.
    pub fn j_mod_j2_coords(&self, v: &[Fp]) -> Vec<Fp> {
        let r = self.ann2.nrows();
        (0..r)
            .map(|i| {
                v.iter()
                    .enumerate()
                    .fold(Fp::new(0, self.p), |acc, (k, &c)| acc + self.ann2[(i, k)] * c)
            })
            .collect()
    }

    /// Same over an extension field.
    pub fn j_mod_j2_coords_ext(&self, v: &[Fq]) -> Vec<Fq> {
        let r = self.ann2.nrows();
        let d = v.iter().map(|x| x.degree()).max().unwrap_or(1);
        (0..r)
            .map(|i| {
                v.iter().enumerate().fold(Fq::zero(self.p, d), |acc, (k, &c)| {
                    acc + Fq::from_fp(self.ann2[(i, k)], d) * c
                })
            })
            .collect()
    }

    /// A point of J_E is flat iff it lies outside J_E^2, i.e. some
    /// annihilator form is nonzero on it.
    pub fn is_flat(&self, v: &[Fq]) -> bool {
        self.j_mod_j2_coords_ext(v).iter().any(|c| !c.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplat::elementary_abelian_lattice;

    fn arc(g: GroupTable) -> Arc<GroupTable> {
        Arc::new(g)
    }

    fn fp(v: i64, p: u8) -> Fp {
        Fp::new(v, p)
    }

    #[test]
    fn regular_module_of_klein4_is_permutations() {
        let g = arc(GroupTable::klein4());
        let m = regular_module(&g, 2).unwrap();
        assert_eq!(m.dim(), 4);
        for x in 0..4 {
            let mat = m.matrix(x);
            for i in 0..4 {
                let ones = (0..4).filter(|&j| !Scalar::is_zero(&mat[(i, j)])).count();
                assert_eq!(ones, 1);
            }
        }
    }

    #[test]
    fn trivial_module_valid_for_any_group() {
        for g in [arc(GroupTable::symmetric3()), arc(GroupTable::heisenberg(3).unwrap())] {
            let m = trivial_module(&g, 3).unwrap();
            assert_eq!(m.dim(), 1);
        }
    }

    #[test]
    fn natural_heisenberg_module_loads() {
        let g = arc(GroupTable::heisenberg(3).unwrap());
        let m = natural_module(&g).unwrap();
        assert_eq!(m.dim(), 3);
    }

    #[test]
    fn relation_violation_is_reported() {
        // klein4 generators must commute; these matrices do not
        let g = arc(GroupTable::klein4());
        let a = Mat::from_rows(2, vec![vec![fp(1, 2), fp(1, 2)], vec![fp(0, 2), fp(1, 2)]]);
        let b = Mat::from_rows(2, vec![vec![fp(1, 2), fp(0, 2)], vec![fp(1, 2), fp(1, 2)]]);
        match ModuleRep::load(&g, &[a, b]) {
            Err(Error::RelationViolation { .. }) => {}
            other => panic!("expected relation violation, got {:?}", other.map(|m| m.dim())),
        }
    }

    #[test]
    fn singular_generator_rejected() {
        let g = arc(GroupTable::klein4());
        let z = Mat::<Fp>::zero(2, 2, 2);
        let id = Mat::<Fp>::identity(2, 2);
        match ModuleRep::load(&g, &[z, id]) {
            Err(Error::NotInvertible { .. }) => {}
            other => panic!("expected NotInvertible, got {:?}", other.map(|m| m.dim())),
        }
    }

    fn full_subgroup(g: &GroupTable, p: u8) -> Subgroup {
        let all: Vec<usize> = (0..g.order()).collect();
        Subgroup::from_elements(g, p, &all).unwrap()
    }

    #[test]
    fn radical_power_dimensions_p2() {
        let g = GroupTable::klein4();
        let e = full_subgroup(&g, 2);
        let rb = RadicalBasis::new(&g, &e, 2).unwrap();
        assert_eq!(rb.dim_j(), 3);
        assert_eq!(rb.power_basis(1).unwrap().nrows(), 3);
        assert_eq!(rb.power_basis(2).unwrap().nrows(), 1);
        assert_eq!(rb.power_basis(3).unwrap().nrows(), 0);
        // J^2 is spanned by (g1-e)(g2-e) = v_{g1g2} - v_{g1} - v_{g2}
        let j2 = rb.power_basis(2).unwrap();
        let row: Vec<u8> = (0..3).map(|k| j2[(0, k)].val()).collect();
        assert_eq!(row, vec![1, 1, 1]);
    }

    #[test]
    fn radical_power_dimensions_p3() {
        let g = GroupTable::elementary_abelian(3, 2).unwrap();
        let e = full_subgroup(&g, 3);
        let rb = RadicalBasis::new(&g, &e, 3).unwrap();
        assert_eq!(rb.dim_j(), 8);
        let dims: Vec<usize> = (1..=5)
            .map(|j| rb.power_basis(j).unwrap().nrows())
            .collect();
        assert_eq!(dims, vec![8, 6, 3, 1, 0]);
    }

    #[test]
    fn rank1_radical_chain() {
        let g = GroupTable::elementary_abelian(3, 1).unwrap();
        let e = full_subgroup(&g, 3);
        let rb = RadicalBasis::new(&g, &e, 3).unwrap();
        let dims: Vec<usize> = (1..=3)
            .map(|j| rb.power_basis(j).unwrap().nrows())
            .collect();
        assert_eq!(dims, vec![2, 1, 0]);
    }

    #[test]
    fn annihilator_is_dual_to_basis_and_kills_j2() {
        for (g, p) in [
            (GroupTable::klein4(), 2u8),
            (GroupTable::elementary_abelian(3, 2).unwrap(), 3u8),
        ] {
            let e = full_subgroup(&g, p);
            let rb = RadicalBasis::new(&g, &e, p).unwrap();
            let r = e.rank();
            // dual pairing against basis vectors
            for (i, b) in e.basis().iter().enumerate() {
                let pos = rb.elements().iter().position(|x| x == b).unwrap();
                let mut v = vec![fp(0, p); rb.dim_j()];
                v[pos] = fp(1, p);
                let coords = rb.j_mod_j2_coords(&v);
                for (k, c) in coords.iter().enumerate() {
                    assert_eq!(c.val(), (k == i) as u8);
                }
            }
            // kills every J^2 basis vector
            let j2 = rb.power_basis(2).unwrap();
            for row in 0..j2.nrows() {
                let coords = rb.j_mod_j2_coords(j2.row(row));
                assert!(coords.iter().all(|c| Scalar::is_zero(c)));
            }
            assert_eq!(rb.ann_j2().nrows(), r);
        }
    }

    #[test]
    fn quotient_map_formula_for_products() {
        // the class of (g1^c1 g2^c2 - e) in J/J^2 is c1 x1 + c2 x2
        let g = GroupTable::elementary_abelian(3, 2).unwrap();
        let e = full_subgroup(&g, 3);
        let rb = RadicalBasis::new(&g, &e, 3).unwrap();
        for (pos, &elem) in rb.elements().iter().enumerate() {
            let c = e.coords_of(elem).unwrap().to_vec();
            let mut v = vec![fp(0, 3); rb.dim_j()];
            v[pos] = fp(1, 3);
            let got: Vec<u8> = rb.j_mod_j2_coords(&v).iter().map(|x| x.val()).collect();
            assert_eq!(got, c, "element {elem}");
        }
    }

    #[test]
    fn radical_action_examples() {
        // klein4 regular representation: a = e_g gives rank 2, square 0
        let g = arc(GroupTable::klein4());
        let l = elementary_abelian_lattice(&g, 2).unwrap();
        let e = l.member(*l.maximals().first().unwrap()).clone();
        let m = regular_module(&g, 2).unwrap();
        for k in 0..3 {
            let mut a = vec![fp(0, 2); 3];
            a[k] = fp(1, 2);
            let n = m.radical_action_fp(&e, &a).unwrap();
            assert_eq!(n.rank(), 2);
            assert!(n.matmul(&n).is_zero());
        }
        // zero vector gives the zero matrix
        let z = m.radical_action_fp(&e, &vec![fp(0, 2); 3]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn radical_action_is_p_nilpotent_and_linear() {
        let g = arc(GroupTable::elementary_abelian(3, 2).unwrap());
        let l = elementary_abelian_lattice(&g, 3).unwrap();
        let e = l.member(*l.maximals().first().unwrap()).clone();
        let m = regular_module(&g, 3).unwrap();
        let mut seed = 7u64;
        let mut rngv = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as i64
        };
        for _ in 0..20 {
            let a: Vec<Fp> = (0..8).map(|_| fp(rngv(), 3)).collect();
            let b: Vec<Fp> = (0..8).map(|_| fp(rngv(), 3)).collect();
            let na = m.radical_action_fp(&e, &a).unwrap();
            let nb = m.radical_action_fp(&e, &b).unwrap();
            assert!(na.pow(3).is_zero());
            let sum: Vec<Fp> = a.iter().zip(&b).map(|(&x, &y)| x + y).collect();
            assert_eq!(m.radical_action_fp(&e, &sum).unwrap(), na.add(&nb));
        }
    }

    #[test]
    fn subgroup_radical_square_is_intersection() {
        // for E' inside E: J_{E'}^2 = J_{E'} meet J_E^2
        let g = arc(GroupTable::heisenberg(3).unwrap());
        let l = elementary_abelian_lattice(&g, 3).unwrap();
        let emax_idx = *l.maximals().first().unwrap();
        let emax = l.member(emax_idx).clone();
        let rb_max = RadicalBasis::new(&g, &emax, 3).unwrap();
        // pick a rank-1 subgroup inside emax
        let sub_idx = (0..l.members().len())
            .find(|&i| l.member(i).rank() == 1 && l.member(i).is_subset_of(&emax))
            .unwrap();
        let esub = l.member(sub_idx).clone();
        let rb_sub = RadicalBasis::new(&g, &esub, 3).unwrap();
        // embed J_{E'} coordinates into J_E coordinates
        let embed = |v: &[Fp]| -> Vec<Fp> {
            let mut out = vec![fp(0, 3); rb_max.dim_j()];
            for (i, &c) in v.iter().enumerate() {
                let gel = rb_sub.elements()[i];
                let pos = rb_max.elements().iter().position(|&x| x == gel).unwrap();
                out[pos] = c;
            }
            out
        };
        // rows of embedded J_{E'} and of J_E^2
        let sub_j1 = rb_sub.power_basis(1).unwrap();
        let sub_rows: Vec<Vec<Fp>> = (0..sub_j1.nrows()).map(|i| embed(sub_j1.row(i))).collect();
        let max_j2 = rb_max.power_basis(2).unwrap();
        // intersection of row spaces via nullspace of [U^T | -W^T]
        let u = Mat::from_rows(3, sub_rows);
        let stacked = {
            let ut = u.transpose();
            let wt = max_j2.transpose().scale(fp(-1, 3));
            let mut rows: Vec<Vec<Fp>> = Vec::new();
            for i in 0..ut.nrows() {
                let mut row = ut.row(i).to_vec();
                row.extend_from_slice(wt.row(i));
                rows.push(row);
            }
            Mat::from_rows(3, rows)
        };
        let ns = stacked.nullspace();
        let mut inter_rows: Vec<Vec<Fp>> = Vec::new();
        for i in 0..ns.nrows() {
            let alpha = &ns.row(i)[..u.nrows()];
            let mut x = vec![fp(0, 3); rb_max.dim_j()];
            for (k, &ak) in alpha.iter().enumerate() {
                for (c, slot) in x.iter_mut().enumerate() {
                    *slot = *slot + ak * u[(k, c)];
                }
            }
            inter_rows.push(x);
        }
        let inter = Mat::from_rows(3, inter_rows);
        // expected: embedded J_{E'}^2
        let sub_j2 = rb_sub.power_basis(2).unwrap();
        let exp_rows: Vec<Vec<Fp>> = (0..sub_j2.nrows()).map(|i| embed(sub_j2.row(i))).collect();
        let expected = Mat::from_rows(3, exp_rows);
        // compare row spaces via rref
        assert_eq!(inter.rank(), expected.rank());
        let (r1, _) = inter.rref();
        let (r2, _) = expected.rref();
        for i in 0..expected.rank() {
            assert_eq!(r1.row(i), r2.row(i));
        }
    }

    #[test]
    fn flatness_detects_j2_points() {
        let g = GroupTable::klein4();
        let e = full_subgroup(&g, 2);
        let rb = RadicalBasis::new(&g, &e, 2).unwrap();
        // the J^2 vector (1,1,1) is not flat
        let v: Vec<Fq> = [1u8, 1, 1].iter().map(|&x| Fq::from_int(x as i64, 2, 2)).collect();
        assert!(!rb.is_flat(&v));
        // a basis vector is flat
        let w: Vec<Fq> = [1u8, 0, 0].iter().map(|&x| Fq::from_int(x as i64, 2, 2)).collect();
        assert!(rb.is_flat(&w));
    }

    #[test]
    fn coset_module_of_klein4() {
        let g = arc(GroupTable::klein4());
        let l = elementary_abelian_lattice(&g, 2).unwrap();
        let e = l.member(*l.maximals().first().unwrap()).clone();
        let g1 = e.basis()[0];
        let m = cyclic_coset_module(&g, 2, g1).unwrap();
        assert_eq!(m.dim(), 2);
        // g1 acts trivially on the cosets
        assert_eq!(m.matrix(g1), &Mat::<Fp>::identity(2, 2));
    }

    #[test]
    fn radical_square_quotient_module_shape() {
        let g = arc(GroupTable::elementary_abelian(3, 2).unwrap());
        let m = radical_square_quotient_module(&g, 3).unwrap();
        assert_eq!(m.dim(), 3);
        // every non-identity element acts with (rho(g) - I) of rank 1
        for x in 1..g.order() {
            assert_eq!(m.action_minus_identity(x).rank(), 1);
        }
    }

    #[test]
    fn direct_sum_dimensions() {
        let g = arc(GroupTable::klein4());
        let a = trivial_module(&g, 2).unwrap();
        let b = regular_module(&g, 2).unwrap();
        let s = direct_sum(&a, &b).unwrap();
        assert_eq!(s.dim(), 5);
    }
}
