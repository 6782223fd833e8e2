//! Groebner bases over F_p in graded reverse lexicographic order.
//!
//! The implementation is a plain Buchberger loop with the product and
//! chain criteria, a deterministic pair-selection strategy (smallest
//! lcm in grevlex), and hard resource caps that surface as
//! [`Error::ResourceLimit`] instead of silently grinding forever.
//!
//! Two decision procedures sit on top:
//!
//! * [`ideal_membership`]: normal form against a Groebner basis.
//! * [`vanishes_on_variety`]: does a polynomial vanish on the common
//!   zero locus of a homogeneous system over the algebraic closure?
//!   For homogeneous input this is decided on the affine slice
//!   `f = 1` (the zero locus is a cone, so missing the slice means
//!   vanishing identically); the general fallback adjoins an inverse
//!   variable.  Both reduce to testing whether an ideal is the unit
//!   ideal, where the Buchberger loop exits as soon as any constant
//!   appears.

use crate::error::{Error, Result};
use crate::poly::{grevlex, Exp, MultiPoly, PolyRing, Var};
use std::collections::BTreeSet;
use std::sync::Arc;

pub const DEFAULT_MAX_DEGREE: u32 = 40;
pub const DEFAULT_MAX_PAIRS: usize = 200_000;

/// Key that orders exponent vectors compatibly with grevlex when
/// compared as plain tuples: (total degree, reversed complemented
/// entries).
fn grevlex_key(e: &Exp) -> (u32, Vec<u8>) {
    let deg: u32 = e.iter().map(|&x| x as u32).sum();
    let rev: Vec<u8> = e.iter().rev().map(|&x| 255 - x).collect();
    (deg, rev)
}

fn exp_lcm(a: &Exp, b: &Exp) -> Exp {
    a.iter().zip(b.iter()).map(|(&x, &y)| x.max(y)).collect()
}

fn exp_divides(d: &Exp, m: &Exp) -> bool {
    d.iter().zip(m.iter()).all(|(&x, &y)| x <= y)
}

fn exp_coprime(a: &Exp, b: &Exp) -> bool {
    a.iter().zip(b.iter()).all(|(&x, &y)| x == 0 || y == 0)
}

fn make_monic(f: &MultiPoly) -> MultiPoly {
    let (_, c) = f.leading().expect("monic of zero polynomial");
    let p = f.ring().p;
    let inv = crate::field::Fp::new(c as i64, p).inv().expect("unit").val();
    f.scale(inv as i64)
}

fn lt(f: &MultiPoly) -> &Exp {
    f.leading().expect("nonzero polynomial").0
}

fn s_polynomial(f: &MultiPoly, g: &MultiPoly) -> MultiPoly {
    let (ef, eg) = (lt(f), lt(g));
    let l = exp_lcm(ef, eg);
    let uf: Exp = l.iter().zip(ef.iter()).map(|(&a, &b)| a - b).collect();
    let ug: Exp = l.iter().zip(eg.iter()).map(|(&a, &b)| a - b).collect();
    f.mul_term(&uf, 1).sub(&g.mul_term(&ug, 1))
}

/// Buchberger's algorithm.  Returns the reduced Groebner basis, sorted
/// by leading monomial (ascending grevlex), with monic elements.  If a
/// constant is ever produced the unit basis `[1]` is returned at once.
pub fn buchberger(gens: &[MultiPoly], max_degree: u32, max_pairs: usize) -> Result<Vec<MultiPoly>> {
    let mut basis: Vec<MultiPoly> = Vec::new();
    let ring: Option<&Arc<PolyRing>> = gens.iter().find(|g| !g.is_zero()).map(|g| g.ring());
    let Some(ring) = ring else {
        return Ok(Vec::new());
    };
    for g in gens {
        if g.is_zero() {
            continue;
        }
        if g.is_constant() {
            return Ok(vec![MultiPoly::constant(ring, 1)]);
        }
        let m = make_monic(g);
        if !basis.contains(&m) {
            basis.push(m);
        }
    }

    // pair queue keyed by (lcm grevlex key, i, j); BTreeSet pops the
    // smallest lcm first (normal selection strategy)
    type Key = ((u32, Vec<u8>), usize, usize);
    let mut queue: BTreeSet<Key> = BTreeSet::new();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let l = exp_lcm(lt(&basis[i]), lt(&basis[j]));
            queue.insert((grevlex_key(&l), i, j));
        }
    }
    let mut done: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut processed = 0usize;

    while let Some(key) = queue.iter().next().cloned() {
        queue.remove(&key);
        let (_, i, j) = key;
        done.insert((i, j));
        processed += 1;
        if processed > max_pairs {
            return Err(Error::ResourceLimit(format!(
                "Groebner pair budget {max_pairs} exhausted"
            )));
        }
        let l = {
            let (ei, ej) = (lt(&basis[i]), lt(&basis[j]));
            if exp_coprime(ei, ej) {
                continue; // product criterion
            }
            exp_lcm(ei, ej)
        };
        // chain criterion: k with lt_k | lcm and both (i,k), (j,k) done
        let mut chained = false;
        for k in 0..basis.len() {
            if k == i || k == j {
                continue;
            }
            if exp_divides(lt(&basis[k]), &l) {
                let a = (i.min(k), i.max(k));
                let b = (j.min(k), j.max(k));
                if done.contains(&a) && done.contains(&b) {
                    chained = true;
                    break;
                }
            }
        }
        if chained {
            continue;
        }
        let s = s_polynomial(&basis[i], &basis[j]);
        let refs: Vec<&MultiPoly> = basis.iter().collect();
        let r = s.normal_form(&refs);
        if r.is_zero() {
            continue;
        }
        if r.is_constant() {
            return Ok(vec![MultiPoly::constant(ring, 1)]);
        }
        let r = make_monic(&r);
        if r.leading().unwrap().0.iter().map(|&x| x as u32).sum::<u32>() > max_degree {
            return Err(Error::ResourceLimit(format!(
                "Groebner element degree exceeds cap {max_degree}"
            )));
        }
        let newi = basis.len();
        basis.push(r);
        for k in 0..newi {
            let l = exp_lcm(lt(&basis[k]), lt(&basis[newi]));
            queue.insert((grevlex_key(&l), k, newi));
        }
    }

    Ok(reduce_basis(basis))
}

/// Interreduction: drop elements whose leading monomial is divisible by
/// another leading monomial, then replace each element by its normal
/// form against the rest.  Output is monic and sorted by leading
/// monomial.
fn reduce_basis(mut basis: Vec<MultiPoly>) -> Vec<MultiPoly> {
    // minimal basis
    let mut keep = vec![true; basis.len()];
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if i != j && keep[i] && keep[j] && exp_divides(lt(&basis[j]), lt(&basis[i])) {
                if lt(&basis[j]) == lt(&basis[i]) && j > i {
                    continue; // identical leading terms: keep the earlier
                }
                keep[i] = false;
            }
        }
    }
    let mut minimal: Vec<MultiPoly> = basis
        .drain(..)
        .zip(keep)
        .filter_map(|(f, k)| k.then_some(f))
        .collect();
    // tail reduction
    let snapshot = minimal.clone();
    for i in 0..minimal.len() {
        let others: Vec<&MultiPoly> = snapshot
            .iter()
            .enumerate()
            .filter_map(|(j, f)| (j != i).then_some(f))
            .collect();
        let r = minimal[i].normal_form(&others);
        if !r.is_zero() {
            minimal[i] = make_monic(&r);
        }
    }
    minimal.retain(|f| !f.is_zero());
    minimal.sort_by(|a, b| grevlex(lt(a), lt(b)));
    minimal.dedup();
    minimal
}

/// Membership of `f` in the ideal generated by a Groebner basis.
pub fn ideal_membership(f: &MultiPoly, groebner_basis: &[MultiPoly]) -> bool {
    if f.is_zero() {
        return true;
    }
    let refs: Vec<&MultiPoly> = groebner_basis.iter().collect();
    f.normal_form(&refs).is_zero()
}

/// Is the ideal generated by `gens` the unit ideal?
pub fn is_unit_ideal(gens: &[MultiPoly], max_degree: u32, max_pairs: usize) -> Result<bool> {
    let gb = buchberger(gens, max_degree, max_pairs)?;
    Ok(gb.len() == 1 && gb[0].is_constant() && !gb[0].is_zero())
}

/// Does `f` vanish on the common zero locus of `gens` over the
/// algebraic closure?  Equivalently, radical membership.
///
/// When every generator and `f` are homogeneous the locus is a cone,
/// and vanishing is decided by testing whether the slice `f = 1` meets
/// the cone: f vanishes iff `gens + (f - 1)` is the unit ideal.  The
/// inhomogeneous fallback adjoins t and tests `gens + (1 - t f)`.
pub fn vanishes_on_variety(
    f: &MultiPoly,
    gens: &[MultiPoly],
    max_degree: u32,
    max_pairs: usize,
) -> Result<bool> {
    if f.is_zero() {
        return Ok(true);
    }
    if f.is_constant() {
        // nonzero constant vanishes only on the empty variety
        return is_unit_ideal(gens, max_degree, max_pairs);
    }
    let homogeneous = f.homogeneous_degree().is_some()
        && gens.iter().all(|g| g.homogeneous_degree().is_some());
    if homogeneous {
        let ring = f.ring();
        let one = MultiPoly::constant(ring, 1);
        let mut sys: Vec<MultiPoly> = gens.to_vec();
        sys.push(f.sub(&one));
        return is_unit_ideal(&sys, max_degree, max_pairs);
    }
    // Rabinowitsch: f in radical(I) iff I + (1 - t f) is the unit ideal
    let ring = f.ring();
    let mut vars: Vec<Var> = ring.vars.clone();
    let tvar = {
        let mut k = 0u8;
        while vars.contains(&Var::T(k)) {
            k += 1;
        }
        Var::T(k)
    };
    vars.push(tvar);
    let ext = PolyRing::new(ring.p, vars);
    let images: Vec<Option<usize>> = (0..ring.nvars()).map(Some).collect();
    let mut sys: Vec<MultiPoly> = gens.iter().map(|g| g.map_vars(&ext, &images)).collect();
    let t = MultiPoly::var(&ext, ext.nvars() - 1);
    let one = MultiPoly::constant(&ext, 1);
    sys.push(one.sub(&t.mul(&f.map_vars(&ext, &images))));
    is_unit_ideal(&sys, max_degree, max_pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring2(p: u8) -> Arc<PolyRing> {
        PolyRing::new(p, vec![Var::Y(0), Var::Y(1)])
    }

    fn x(r: &Arc<PolyRing>) -> MultiPoly {
        MultiPoly::var(r, 0)
    }

    fn y(r: &Arc<PolyRing>) -> MultiPoly {
        MultiPoly::var(r, 1)
    }

    #[test]
    fn gb_of_linear_pair_is_coordinates() {
        // (x + y, x - y) = (x, y) over F_5
        let r = ring2(5);
        let gb = buchberger(&[x(&r).add(&y(&r)), x(&r).sub(&y(&r))], 40, 1000).unwrap();
        assert_eq!(gb.len(), 2);
        assert!(gb.contains(&x(&r)));
        assert!(gb.contains(&y(&r)));
    }

    #[test]
    fn gb_detects_unit_ideal_early() {
        let r = ring2(5);
        let one = MultiPoly::constant(&r, 1);
        let gb = buchberger(&[x(&r), x(&r).add(&one)], 40, 1000).unwrap();
        assert_eq!(gb, vec![one]);
    }

    #[test]
    fn gb_classic_three_element_basis() {
        // (x^2 + y^2, xy) over F_7 has reduced basis {xy, x^2 + y^2, y^3}
        let r = ring2(7);
        let g1 = x(&r).mul(&x(&r)).add(&y(&r).mul(&y(&r)));
        let g2 = x(&r).mul(&y(&r));
        let gb = buchberger(&[g1.clone(), g2.clone()], 40, 1000).unwrap();
        let y3 = y(&r).mul(&y(&r)).mul(&y(&r));
        assert_eq!(gb.len(), 3);
        assert!(gb.contains(&g1));
        assert!(gb.contains(&g2));
        assert!(gb.contains(&y3));
    }

    #[test]
    fn gb_is_idempotent() {
        let r = ring2(3);
        let g1 = x(&r).mul(&x(&r)).add(&y(&r));
        let g2 = y(&r).mul(&y(&r));
        let gb = buchberger(&[g1, g2], 40, 1000).unwrap();
        let gb2 = buchberger(&gb, 40, 1000).unwrap();
        assert_eq!(gb, gb2);
    }

    #[test]
    fn membership_basics() {
        let r = ring2(5);
        let gb = buchberger(&[y(&r)], 40, 1000).unwrap();
        assert!(ideal_membership(&y(&r).mul(&y(&r)), &gb));
        assert!(!ideal_membership(&x(&r), &gb));
        assert!(ideal_membership(&MultiPoly::zero(&r), &gb));
    }

    #[test]
    fn radical_membership_by_inverse_variable() {
        // V(x^2, x^3 + x^2) = {x = 0}: x is in the radical, y is not.
        // The mixed-degree generator forces the inverse-variable path.
        let r = ring2(5);
        let x2 = x(&r).mul(&x(&r));
        let gens = [x2.clone(), x2.add(&x(&r).mul(&x2))];
        assert!(vanishes_on_variety(&x(&r), &gens, 40, 10_000).unwrap());
        assert!(!vanishes_on_variety(&y(&r), &gens, 40, 10_000).unwrap());
    }

    #[test]
    fn vanishing_on_homogeneous_cone() {
        let r = ring2(5);
        // V(xy) is the union of the axes: x vanishes on one component only
        assert!(!vanishes_on_variety(&x(&r), &[x(&r).mul(&y(&r))], 40, 10_000).unwrap());
        // V(x^2, xy, y^2) = {0}: every linear form vanishes
        let sq = [
            x(&r).mul(&x(&r)),
            x(&r).mul(&y(&r)),
            y(&r).mul(&y(&r)),
        ];
        assert!(vanishes_on_variety(&x(&r).add(&y(&r)), &sq, 40, 10_000).unwrap());
        // V(x^2) is the y-axis: x vanishes on it, y does not
        let xsq = [x(&r).mul(&x(&r))];
        assert!(vanishes_on_variety(&x(&r), &xsq, 40, 10_000).unwrap());
        assert!(!vanishes_on_variety(&y(&r), &xsq, 40, 10_000).unwrap());
    }

    #[test]
    fn membership_implies_radical_membership() {
        let r = ring2(3);
        let gens = [x(&r).mul(&y(&r)), y(&r).mul(&y(&r))];
        let f = x(&r).mul(&y(&r)).mul(&x(&r)); // x^2 y in the ideal
        let gb = buchberger(&gens, 40, 10_000).unwrap();
        assert!(ideal_membership(&f, &gb));
        assert!(vanishes_on_variety(&f, &gens, 40, 10_000).unwrap());
    }

    #[test]
    fn pair_cap_surfaces_as_resource_limit() {
        let r = ring2(5);
        let g1 = x(&r).mul(&x(&r)).add(&y(&r));
        let g2 = y(&r).mul(&y(&r)).add(&x(&r));
        match buchberger(&[g1, g2], 40, 0) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
    }
}
