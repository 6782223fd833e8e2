//! The universal operator attached to a module over the elementary
//! abelian subgroup lattice.
//!
//! For a subgroup E with nonidentity elements g (ordered by exponent
//! vector, see [`Subgroup::nonidentity_by_exponent`]) the chart matrix
//! is
//!
//! ```text
//!     Theta_{E,M} = sum_g x_g (rho(g) - I)
//! ```
//!
//! a dim(M) x dim(M) matrix of linear forms in one variable per
//! nonidentity element.  A [`ThetaFamily`] holds one chart per maximal
//! member of the lattice; the charts glue: on the intersection of two
//! maximals, setting the variables of the elements outside the
//! intersection to zero yields the same matrix from either side.  The
//! constructor verifies this.
//!
//! Specializing the variables at a point a (a choice of coefficient
//! for each nonidentity element, over a finite extension of the prime
//! field) recovers the action of sum a_g (g - e) on M.  Points whose
//! radical class is nonzero mod J^2 are *flat*: the corresponding
//! operator generates a free rank-one summand action, and Jordan types
//! along flat points are the geometric invariant the rest of the crate
//! studies.
//!
//! The *z-coordinates* ([`ZChart`]) re-express the same operator in
//! the product basis t^b = prod (g_i - e)^{b_i} of the augmentation
//! ideal: Theta = sum_b z_b N^b with N_i = rho(g_i) - I.  The change
//! of coordinates is triangular with binomial entries and its inverse
//! is explicit, so the two pictures convert losslessly in both
//! directions.  In z-coordinates the forms cutting out J^2 are the
//! unit-index variables z_{e_i}, which makes the exact constancy
//! decision in the `jordan` module a radical-membership question for
//! plain variables.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Fp, Fq};
use crate::grouplat::{ElabLattice, Subgroup};
use crate::linalg::{Mat, Scalar};
use crate::modrep::{ModuleRep, RadicalBasis};
use crate::poly::{MultiPoly, PolyRing, Var};
use crate::polymat::PolyMatrix;

/// One chart of the family: the operator over a single maximal
/// elementary abelian subgroup, in that subgroup's x-variables.
pub struct ThetaChart {
    /// Lattice member index of the maximal subgroup.
    member: usize,
    /// Group element index per variable, in exponent-lex order.
    elements: Vec<usize>,
    ring: Arc<PolyRing>,
    /// The operator itself (degree-one entries).
    lin: PolyMatrix,
    /// `lin` raised to the family's power.
    mat: PolyMatrix,
    rb: RadicalBasis,
}

impl ThetaChart {
    pub fn member(&self) -> usize {
        self.member
    }

    /// Group element indices in variable order.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    /// The operator matrix (first power).
    pub fn operator(&self) -> &PolyMatrix {
        &self.lin
    }

    /// The operator raised to the family's power.
    pub fn matrix(&self) -> &PolyMatrix {
        &self.mat
    }

    pub fn radical_basis(&self) -> &RadicalBasis {
        &self.rb
    }
}

/// The operator over every maximal chart of a lattice, glued.
pub struct ThetaFamily {
    lattice: Arc<ElabLattice>,
    module: Arc<ModuleRep>,
    power: u32,
    charts: Vec<ThetaChart>,
}

impl ThetaFamily {
    /// Build the family of `Theta^power` charts for a module over the
    /// lattice of its group.  `power` must lie in `1..=p-1` so that a
    /// single Jordan block of size p has nonzero power.
    pub fn new(
        lattice: &Arc<ElabLattice>,
        module: &Arc<ModuleRep>,
        power: u32,
    ) -> Result<ThetaFamily> {
        let p = lattice.prime();
        if module.prime() != p {
            return Err(Error::DimensionMismatch(format!(
                "module over F_{} but lattice at p = {}",
                module.prime(),
                p
            )));
        }
        if module.group().order() != lattice.group().order() {
            return Err(Error::DimensionMismatch(
                "module and lattice must come from the same group".into(),
            ));
        }
        if power == 0 || power >= p as u32 {
            return Err(Error::InvalidInput(format!(
                "operator power must lie in 1..={}, got {power}",
                p - 1
            )));
        }
        let mut charts = Vec::with_capacity(lattice.maximals().len());
        for &m in lattice.maximals() {
            charts.push(build_chart(lattice, module, m, power)?);
        }
        let fam = ThetaFamily { lattice: lattice.clone(), module: module.clone(), power, charts };
        fam.verify_compatibility()?;
        Ok(fam)
    }

    pub fn lattice(&self) -> &Arc<ElabLattice> {
        &self.lattice
    }

    pub fn module(&self) -> &Arc<ModuleRep> {
        &self.module
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn charts(&self) -> &[ThetaChart] {
        &self.charts
    }

    /// Index of the first chart whose maximal contains the given
    /// lattice member.
    pub fn chart_for_member(&self, member: usize) -> Result<usize> {
        let sub = self
            .lattice
            .members()
            .get(member)
            .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
        self.charts
            .iter()
            .position(|c| sub.is_subset_of(self.lattice.member(c.member)))
            .ok_or_else(|| Error::InvalidInput("member lies in no maximal chart".into()))
    }

    /// On the overlap of two charts, killing the variables of elements
    /// outside the intersection must give the same matrix from either
    /// side.  Violations indicate a broken module, so this runs once at
    /// construction.
    fn verify_compatibility(&self) -> Result<()> {
        for &(a, b, inter) in self.lattice.maximal_intersections() {
            let Some(c) = inter else { continue };
            let ca = &self.charts[a];
            let cb = &self.charts[b];
            let common = self.lattice.member(c);
            let ring = member_ring(self.lattice.prime(), common);
            let elems = common.nonidentity_by_exponent();
            let ma = ca.mat.map_vars(&ring, &restriction_images(&ca.elements, &elems));
            let mb = cb.mat.map_vars(&ring, &restriction_images(&cb.elements, &elems));
            if !ma.sub(&mb).is_zero() {
                return Err(Error::InvalidInput(format!(
                    "charts {a} and {b} disagree on their overlap",
                )));
            }
        }
        Ok(())
    }

    /// Evaluate the family at a point of some member's coefficient
    /// space.  The point is routed through the first chart containing
    /// its member; by compatibility the choice does not matter.
    pub fn specialize(&self, pt: &PiPoint) -> Result<Mat<Fq>> {
        let chart = &self.charts[self.chart_for_member(pt.member)?];
        let sub = self.lattice.member(pt.member);
        let elems = sub.nonidentity_by_exponent();
        let d = pt.degree;
        let p = self.lattice.prime();
        let point: Vec<Fq> = chart
            .elements
            .iter()
            .map(|g| match elems.iter().position(|h| h == g) {
                Some(i) => pt.coeffs[i],
                None => Fq::zero(p, d),
            })
            .collect();
        Ok(chart.mat.eval(&point))
    }

    /// Whether the operator itself (first power) has vanishing p-th
    /// power on every chart, as a matrix of polynomials.
    pub fn p_nilpotent(&self) -> bool {
        let p = self.lattice.prime() as u32;
        self.charts.iter().all(|c| c.lin.pow(p).is_zero())
    }

    /// Conjugation equivariance: relabelling the variables of chart E
    /// along g -> x g x^{-1} and conjugating by the action of x must
    /// give the chart of E^x.  Checked for the first power on every
    /// chart; powers follow formally.
    pub fn check_equivariance(&self, x: usize) -> Result<bool> {
        let group = self.lattice.group().clone();
        let u = self.module.matrix(x).clone();
        let uinv = self.module.matrix(group.inv(x)).clone();
        for chart in &self.charts {
            let (target_member, bij) = self.lattice.conjugate(chart.member, x)?;
            let target = self
                .charts
                .iter()
                .find(|c| c.member == target_member)
                .ok_or_else(|| Error::InvalidInput("conjugate of a maximal is not a chart".into()))?;
            let images: Vec<Option<usize>> = chart
                .elements
                .iter()
                .map(|g| {
                    let gx = bij.iter().find(|(a, _)| a == g).map(|&(_, b)| b).unwrap();
                    target.elements.iter().position(|h| *h == gx)
                })
                .collect();
            if images.iter().any(|i| i.is_none()) {
                return Err(Error::InvalidInput("conjugation did not permute the chart".into()));
            }
            let relabeled = chart.lin.map_vars(&target.ring, &images);
            let conjugated = relabeled.conjugate_scalar(&u, &uinv);
            if !conjugated.sub(&target.lin).is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The family restricted to an arbitrary lattice member, in that
    /// member's own x-ring: variables of elements outside the member
    /// are set to zero in a containing chart.
    pub fn restrict_to(&self, member: usize) -> Result<(Arc<PolyRing>, PolyMatrix)> {
        let chart = &self.charts[self.chart_for_member(member)?];
        let sub = self.lattice.member(member);
        let ring = member_ring(self.lattice.prime(), sub);
        let elems = sub.nonidentity_by_exponent();
        let mat = chart.mat.map_vars(&ring, &restriction_images(&chart.elements, &elems));
        Ok((ring, mat))
    }

    /// Pull back a chart along the linear section that supports a
    /// point on the subgroup's basis elements only: x_{g_i} = y_i and
    /// all other variables zero.  The result lives in a ring with one
    /// Y-variable per basis element.
    pub fn pullback_section(&self, chart_idx: usize) -> PolyMatrix {
        let chart = &self.charts[chart_idx];
        let sub = self.lattice.member(chart.member);
        let r = sub.rank() as usize;
        let vars: Vec<Var> = (0..r).map(|i| Var::Y(i as u8)).collect();
        let ring = PolyRing::new(self.lattice.prime(), vars);
        let images: Vec<Option<usize>> = chart
            .elements
            .iter()
            .map(|g| sub.basis().iter().position(|b| b == g))
            .collect();
        chart.mat.map_vars(&ring, &images)
    }

    /// The Frobenius twist: substitute x -> x^{p^e} in every entry.
    /// Specializing the twist at a point a equals specializing the
    /// original at the componentwise p^e-th power of a.
    pub fn frobenius_twist(&self, e: u32) -> ThetaFamily {
        let q = (self.lattice.prime() as u32).pow(e);
        let charts = self
            .charts
            .iter()
            .map(|c| ThetaChart {
                member: c.member,
                elements: c.elements.clone(),
                ring: c.ring.clone(),
                lin: c.lin.map_entries(|f| f.stretch_exponents(q)),
                mat: c.mat.map_entries(|f| f.stretch_exponents(q)),
                rb: RadicalBasis::new(
                    self.lattice.group(),
                    self.lattice.member(c.member),
                    self.lattice.prime(),
                )
                .expect("radical basis already built once"),
            })
            .collect();
        ThetaFamily {
            lattice: self.lattice.clone(),
            module: self.module.clone(),
            power: self.power,
            charts,
        }
    }
}

fn build_chart(
    lattice: &Arc<ElabLattice>,
    module: &Arc<ModuleRep>,
    member: usize,
    power: u32,
) -> Result<ThetaChart> {
    let sub = lattice.member(member);
    let elements = sub.nonidentity_by_exponent();
    let ring = member_ring(lattice.prime(), sub);
    let mats: Vec<Mat<Fp>> =
        elements.iter().map(|&g| module.action_minus_identity(g)).collect();
    let lin = PolyMatrix::linear_from_mats(&ring, &mats);
    let mat = if power == 1 { lin.clone() } else { lin.pow(power) };
    let rb = RadicalBasis::new(lattice.group(), sub, lattice.prime())?;
    Ok(ThetaChart { member, elements, ring, lin, mat, rb })
}

/// The x-variable ring of a lattice member: one variable per
/// nonidentity element, in exponent-lex order.
pub fn member_ring(p: u8, sub: &Subgroup) -> Arc<PolyRing> {
    let n = sub.order() - 1;
    let vars: Vec<Var> = (0..n).map(|i| Var::X(i as u32)).collect();
    PolyRing::new(p, vars)
}

/// Variable images for restricting a chart to a subset of elements:
/// chart variable of element g maps to the position of g in `sub_elems`
/// when present, otherwise to zero.
fn restriction_images(chart_elems: &[usize], sub_elems: &[usize]) -> Vec<Option<usize>> {
    chart_elems
        .iter()
        .map(|g| sub_elems.iter().position(|h| h == g))
        .collect()
}

/// A point of a member's coefficient space over F_{p^d}: one
/// coefficient per nonidentity element, in exponent-lex order.  The
/// point is *flat* when its class mod J^2 is nonzero, i.e. when the
/// specialized operator generates a flat k[t]/t^p-module structure.
pub struct PiPoint {
    member: usize,
    coeffs: Vec<Fq>,
    degree: u8,
    flat: bool,
}

impl PiPoint {
    pub fn new(lattice: &ElabLattice, member: usize, coeffs: &[Fq]) -> Result<PiPoint> {
        let sub = lattice
            .members()
            .get(member)
            .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
        if coeffs.len() != sub.order() - 1 {
            return Err(Error::DimensionMismatch(format!(
                "member has {} nonidentity elements, point has {} coefficients",
                sub.order() - 1,
                coeffs.len()
            )));
        }
        let p = lattice.prime();
        let degree = coeffs.iter().map(|c| c.degree()).max().unwrap_or(1);
        let coeffs: Vec<Fq> = coeffs.iter().map(|c| c.lift(degree)).collect();
        // The class mod J^2 of sum a_g (g - e) has linear coordinate i
        // equal to sum_g a_g c_i(g) with c(g) the exponent coordinates
        // of g; the point is flat iff some coordinate is nonzero.
        let elems = sub.nonidentity_by_exponent();
        let flat = (0..sub.rank()).any(|i| {
            let mut acc = Fq::zero(p, degree);
            for (k, &g) in elems.iter().enumerate() {
                let c = sub.coords_of(g).expect("member element has coordinates")[i];
                acc = acc + Fq::from_int(c as i64, p, degree) * coeffs[k];
            }
            !acc.is_zero()
        });
        Ok(PiPoint { member, coeffs, degree, flat })
    }

    /// Uniformly random coefficients over F_{p^d} on the given member.
    pub fn random(
        lattice: &ElabLattice,
        member: usize,
        d: u8,
        rng: &mut impl Rng,
    ) -> Result<PiPoint> {
        let sub = lattice
            .members()
            .get(member)
            .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
        let p = lattice.prime();
        let q = (p as u64).pow(d as u32);
        let coeffs: Vec<Fq> = (0..sub.order() - 1)
            .map(|_| Fq::from_counter(rng.gen_range(0..q), p, d))
            .collect();
        PiPoint::new(lattice, member, &coeffs)
    }

    /// Rejection-sample until the point is flat.
    pub fn random_flat(
        lattice: &ElabLattice,
        member: usize,
        d: u8,
        rng: &mut impl Rng,
    ) -> Result<PiPoint> {
        loop {
            let pt = PiPoint::random(lattice, member, d, rng)?;
            if pt.flat {
                return Ok(pt);
            }
        }
    }

    pub fn member(&self) -> usize {
        self.member
    }

    pub fn coeffs(&self) -> &[Fq] {
        &self.coeffs
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    /// The point carried to the conjugate member along g -> x g x^{-1}:
    /// the coefficient of g^x on E^x is the coefficient of g on E.
    pub fn conjugate(&self, lattice: &ElabLattice, x: usize) -> Result<PiPoint> {
        let (target, bij) = lattice.conjugate(self.member, x)?;
        let src = lattice.member(self.member).nonidentity_by_exponent();
        let dst = lattice.member(target).nonidentity_by_exponent();
        let coeffs: Vec<Fq> = dst
            .iter()
            .map(|h| {
                let g = bij.iter().find(|&&(_, b)| b == *h).map(|&(a, _)| a).unwrap();
                self.coeffs[src.iter().position(|e| *e == g).unwrap()]
            })
            .collect();
        PiPoint::new(lattice, target, &coeffs)
    }
}

/// The operator of one subgroup in product-basis coordinates:
/// `Theta = sum_b z_b N^b` over nonzero exponent tuples b in
/// [0, p-1]^rank, where N_i is the action of g_i - e for the i-th
/// basis element.  Many N^b vanish, so this form is much sparser than
/// the x-chart on modules of small Loewy length.
pub struct ZChart {
    ring: Arc<PolyRing>,
    /// Exponent tuple per variable, lex order (matches the exponent-lex
    /// element order of the subgroup, so z and x use the same index
    /// space).
    codes: Vec<Vec<u8>>,
    mat: PolyMatrix,
    /// Positions of the unit tuples e_1..e_r: the variables that cut
    /// out J^2.
    ann_vars: Vec<usize>,
}

impl ZChart {
    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn codes(&self) -> &[Vec<u8>] {
        &self.codes
    }

    pub fn matrix(&self) -> &PolyMatrix {
        &self.mat
    }

    pub fn ann_var_positions(&self) -> &[usize] {
        &self.ann_vars
    }
}

/// Build the z-coordinate chart of `Theta^power` for a module on one
/// subgroup.
pub fn theta_z_chart(module: &ModuleRep, sub: &Subgroup, power: u32) -> Result<ZChart> {
    let p = module.prime();
    if power == 0 || power >= p as u32 {
        return Err(Error::InvalidInput(format!(
            "operator power must lie in 1..={}, got {power}",
            p - 1
        )));
    }
    let r = sub.rank() as usize;
    let elems = sub.nonidentity_by_exponent();
    let codes: Vec<Vec<u8>> = elems
        .iter()
        .map(|&g| sub.coords_of(g).expect("chart element has coordinates").to_vec())
        .collect();
    let n: Vec<Mat<Fp>> =
        sub.basis().iter().map(|&g| module.action_minus_identity(g)).collect();
    let mats: Vec<Mat<Fp>> = codes
        .iter()
        .map(|beta| {
            let mut acc = Mat::identity(p, module.dim());
            for i in 0..r {
                for _ in 0..beta[i] {
                    acc = acc.matmul(&n[i]);
                }
            }
            acc
        })
        .collect();
    let vars: Vec<Var> = (0..codes.len()).map(|i| Var::Z(i as u32)).collect();
    let ring = PolyRing::new(p, vars);
    let lin = PolyMatrix::linear_from_mats(&ring, &mats);
    let mat = if power == 1 { lin } else { lin.pow(power) };
    let ann_vars: Vec<usize> = (0..r)
        .map(|i| {
            codes
                .iter()
                .position(|c| {
                    c.iter().enumerate().all(|(k, &v)| if k == i { v == 1 } else { v == 0 })
                })
                .expect("unit tuple present")
        })
        .collect();
    Ok(ZChart { ring, codes, mat, ann_vars })
}

/// The operator restricted to the linear section of a subgroup's
/// coefficient space spanned by its basis elements: `sum_i y_i N_i`
/// with one variable per basis element, raised to `power`.  Bundle and
/// K-theory computations happen on this chart; it sees exactly the
/// points with support on the basis, which meet every flat orbit.
pub fn section_chart(module: &ModuleRep, sub: &Subgroup, power: u32) -> Result<PolyMatrix> {
    let p = module.prime();
    if power == 0 || power >= p as u32 {
        return Err(Error::InvalidInput(format!(
            "operator power must lie in 1..={}, got {power}",
            p - 1
        )));
    }
    let mats: Vec<Mat<Fp>> =
        sub.basis().iter().map(|&g| module.action_minus_identity(g)).collect();
    let vars: Vec<Var> = (0..sub.rank()).map(|i| Var::Y(i as u8)).collect();
    let ring = PolyRing::new(p, vars);
    let lin = PolyMatrix::linear_from_mats(&ring, &mats);
    Ok(if power == 1 { lin } else { lin.pow(power) })
}

fn binom_mod(n: u8, k: u8, p: u8) -> u8 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k as u64 {
        acc = acc * (n as u64 - i) / (i + 1);
    }
    (acc % p as u64) as u8
}

/// Convert element coefficients (x-coordinates, exponent-lex order) to
/// product-basis coefficients: `z_b = sum_{c >= b} binom(c, b) x_c`.
pub fn z_from_x_coords(sub: &Subgroup, x: &[Fq]) -> Vec<Fq> {
    let elems = sub.nonidentity_by_exponent();
    assert_eq!(x.len(), elems.len());
    let codes: Vec<&[u8]> =
        elems.iter().map(|&g| sub.coords_of(g).expect("coords")).collect();
    let p = sub_prime(x);
    transform(&codes, x, |b, c| {
        if b.iter().zip(c).all(|(bi, ci)| bi <= ci) {
            b.iter().zip(c).map(|(&bi, &ci)| binom_mod(ci, bi, p)).fold(1u64, |a, v| a * v as u64)
                % p as u64
        } else {
            0
        }
    })
}

/// Inverse conversion: `x_c = sum_{b >= c} (-1)^{|b|-|c|} binom(b, c) z_b`.
pub fn x_from_z_coords(sub: &Subgroup, z: &[Fq]) -> Vec<Fq> {
    let elems = sub.nonidentity_by_exponent();
    assert_eq!(z.len(), elems.len());
    let codes: Vec<&[u8]> =
        elems.iter().map(|&g| sub.coords_of(g).expect("coords")).collect();
    let p = sub_prime(z);
    transform(&codes, z, |c, b| {
        if c.iter().zip(b).all(|(ci, bi)| ci <= bi) {
            let sign: i64 = b
                .iter()
                .zip(c)
                .map(|(&bi, &ci)| (bi - ci) as i64)
                .sum::<i64>();
            let m = b
                .iter()
                .zip(c)
                .map(|(&bi, &ci)| binom_mod(bi, ci, p) as u64)
                .fold(1u64, |a, v| a * v)
                % p as u64;
            if sign % 2 == 0 {
                m
            } else {
                (p as u64 - m % p as u64) % p as u64
            }
        } else {
            0
        }
    })
}

fn sub_prime(v: &[Fq]) -> u8 {
    v.first().map(|c| c.prime()).unwrap_or(2)
}

fn transform(
    codes: &[&[u8]],
    input: &[Fq],
    coeff: impl Fn(&[u8], &[u8]) -> u64,
) -> Vec<Fq> {
    let p = sub_prime(input);
    let d = input.iter().map(|c| c.degree()).max().unwrap_or(1);
    codes
        .iter()
        .map(|row| {
            let mut acc = Fq::zero(p, d);
            for (col, codc) in codes.iter().enumerate() {
                let m = coeff(row, codc) as i64;
                if m % p as i64 != 0 {
                    acc = acc + input[col].lift(d) * Fq::from_int(m, p, d);
                }
            }
            acc
        })
        .collect()
}

/// The linear forms on a member's x-coordinates that cut out J^2: the
/// i-th form evaluates a radical class to its i-th coefficient mod
/// J^2.  In z-coordinates these are the unit-index variables.
pub fn ann_linear_forms(ring: &Arc<PolyRing>, rb: &RadicalBasis) -> Vec<MultiPoly> {
    let ann = rb.ann_j2();
    (0..ann.nrows())
        .map(|i| {
            let mut f = MultiPoly::zero(ring);
            for k in 0..ann.ncols() {
                let c = ann[(i, k)];
                if !Scalar::is_zero(&c) {
                    f = f.add(&MultiPoly::var(ring, k).scale(c.val() as i64));
                }
            }
            f
        })
        .collect()
}
