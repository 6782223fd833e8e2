//! Jordan types of specialized operators and the constant-type
//! decision procedures.
//!
//! A specialized operator N = Theta(xi) is p-nilpotent, so the module
//! splits into Jordan blocks of sizes at most p; the multiset of block
//! sizes is the *local Jordan type* at the point xi.  The type is
//! determined by the rank profile r_s = rank(N^s): the number of
//! blocks of size exactly s is r_{s-1} - 2 r_s + r_{s+1}.
//!
//! A module has *constant j-rank* when rank(Theta(xi)^j) takes the
//! same value at every flat point of every maximal chart, over every
//! field extension, and *constant Jordan type* when that holds for
//! each j = 1..p-1.  Two decision procedures are provided:
//!
//! * **exact** — on each maximal chart, in z-coordinates: let g be the
//!   generic rank of Theta^j (fraction-free elimination).  The locus
//!   of rank < g is cut out by the ideal I of g x g minors, and the
//!   flat locus is the complement of the zero set of the unit-index
//!   variables z_{e_i}.  Rank is constant on the flat locus iff each
//!   z_{e_i} lies in the radical of I, decided by Groebner bases over
//!   F_p (conclusive over the algebraic closure).  Chart generic ranks
//!   must also agree with each other.  Non-constancy is reported with
//!   a concrete flat witness found by small-field search.
//! * **sampled** — evaluate the rank at random flat points over
//!   extensions of bounded degree; any rank below the generic rank is
//!   a witness.  Sampling can certify non-constancy but only gives
//!   evidence for constancy; the verdict records which method ran.
//!
//! Exhaustive sweeps over *all* flat points of a small field (with
//! first nonzero coordinate normalized to 1, harmless because Jordan
//! types are scale-invariant) run in a table-coded u8 domain and are
//! used to cross-check the exact decision on small charts.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Fq, SmallFieldTable};
use crate::grouplat::{ElabLattice, Subgroup};
use crate::linalg::{coded_rank, Mat, Scalar};
use crate::groebner;
use crate::modrep::{ModuleRep, RadicalBasis};
use crate::poly::MultiPoly;
use crate::theta::{theta_z_chart, PiPoint};

/// A partition of dim M into blocks of size at most p, together with
/// the rank profile that produced it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JordanType {
    /// Block sizes, descending.
    partition: Vec<u32>,
    /// r_s = rank(N^s) for s = 0..=p; r_0 = dim, r_p = 0.
    profile: Vec<usize>,
}

impl JordanType {
    /// Reconstruct the partition from a rank profile r_0..r_p.  The
    /// multiplicity of block size s is r_{s-1} - 2 r_s + r_{s+1}
    /// (taking r_{p+1} = 0); every multiplicity must be nonnegative
    /// and r_p must vanish.
    pub fn from_rank_profile(p: u8, profile: &[usize]) -> Result<JordanType> {
        if profile.len() != p as usize + 1 {
            return Err(Error::InvalidInput(format!(
                "rank profile needs {} entries, got {}",
                p as usize + 1,
                profile.len()
            )));
        }
        if profile[p as usize] != 0 {
            return Err(Error::PNilpotenceFailed);
        }
        let r = |s: usize| -> i64 {
            if s > p as usize {
                0
            } else {
                profile[s] as i64
            }
        };
        let mut partition = Vec::new();
        for s in (1..=p as usize).rev() {
            let m = r(s - 1) - 2 * r(s) + r(s + 1);
            if m < 0 {
                return Err(Error::InvalidInput(format!(
                    "profile is not the rank sequence of a nilpotent map (m_{s} = {m})"
                )));
            }
            for _ in 0..m {
                partition.push(s as u32);
            }
        }
        Ok(JordanType { partition, profile: profile.to_vec() })
    }

    /// Block sizes, largest first.
    pub fn blocks(&self) -> &[u32] {
        &self.partition
    }

    pub fn rank_profile(&self) -> &[usize] {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.profile[0]
    }

    pub fn multiplicity(&self, size: u32) -> usize {
        self.partition.iter().filter(|&&b| b == size).count()
    }

    /// The type of a direct sum: blocks merged, profiles added.
    pub fn union(&self, other: &JordanType) -> JordanType {
        assert_eq!(self.profile.len(), other.profile.len(), "types at different primes");
        let mut partition: Vec<u32> =
            self.partition.iter().chain(&other.partition).copied().collect();
        partition.sort_unstable_by(|a, b| b.cmp(a));
        let profile =
            self.profile.iter().zip(&other.profile).map(|(a, b)| a + b).collect();
        JordanType { partition, profile }
    }
}

impl fmt::Display for JordanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.partition.is_empty() {
            return write!(f, "[]");
        }
        let mut i = 0;
        while i < self.partition.len() {
            let b = self.partition[i];
            let run = self.partition[i..].iter().take_while(|&&x| x == b).count();
            write!(f, "[{b}]")?;
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Jordan type of an explicitly given p-nilpotent matrix.
pub fn jordan_type(n: &Mat<Fq>, p: u8) -> Result<JordanType> {
    if n.nrows() != n.ncols() {
        return Err(Error::DimensionMismatch("Jordan type needs a square matrix".into()));
    }
    let dim = n.nrows();
    let mut profile = vec![dim];
    let mut cur = n.clone();
    for s in 1..=p as usize {
        let r = cur.rank();
        profile.push(r);
        if r == 0 {
            profile.resize(p as usize + 1, 0);
            break;
        }
        if s == p as usize {
            return Err(Error::PNilpotenceFailed);
        }
        cur = cur.matmul(n);
    }
    JordanType::from_rank_profile(p, &profile)
}

/// The local Jordan type of a module at a point: the type of the
/// specialized operator sum a_g (rho(g) - I).
pub fn local_jordan_type(
    m: &ModuleRep,
    lat: &ElabLattice,
    xi: &PiPoint,
    require_flat: bool,
) -> Result<JordanType> {
    if require_flat && !xi.is_flat() {
        return Err(Error::NotFlat);
    }
    let act = m.radical_action(lat.member(xi.member()), xi.coeffs())?;
    jordan_type(&act, m.prime())
}

/// Which symbolic chart carries the generic-point computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenericChart {
    /// All coordinates of the subgroup (z-coordinates; same generic
    /// ranks as the x-chart, related by an invertible linear change).
    Full,
    /// The linear section supported on the subgroup's basis elements
    /// only, one variable per basis element.
    Section,
}

/// Jordan type at the generic point of a subgroup's coefficient space,
/// from fraction-free generic ranks of symbolic powers.
pub fn generic_jordan_type(
    m: &ModuleRep,
    sub: &Subgroup,
    via: GenericChart,
) -> Result<JordanType> {
    let p = m.prime();
    let theta = match via {
        GenericChart::Full => theta_z_chart(m, sub, 1)?.matrix().clone(),
        GenericChart::Section => crate::theta::section_chart(m, sub, 1)?,
    };
    let mut profile = vec![m.dim()];
    let mut cur = theta.clone();
    for s in 1..=p as usize {
        let r = cur.generic_rank();
        profile.push(r);
        if r == 0 {
            profile.resize(p as usize + 1, 0);
            break;
        }
        if s == p as usize {
            return Err(Error::PNilpotenceFailed);
        }
        cur = cur.matmul(&theta);
    }
    JordanType::from_rank_profile(p, &profile)
}

/// A flat point witnessing non-constancy, with the data needed to
/// re-verify it independently.
#[derive(Clone, Debug)]
pub struct Witness {
    /// Lattice member index of the chart carrying the point.
    pub member: usize,
    /// Coefficients per nonidentity element, exponent-lex order.
    pub coeffs: Vec<Fq>,
    /// rank(Theta(xi)^j) at the witness.
    pub rank: usize,
    /// The rank it fails to match (the largest chart generic rank).
    pub expected_rank: usize,
    /// Full local Jordan type at the witness.
    pub jordan: JordanType,
}

#[derive(Clone, Debug)]
pub enum VerdictStatus {
    Constant {
        rank: usize,
        /// Filled by the full Jordan-type decision.
        jordan: Option<JordanType>,
    },
    NonConstant {
        witness: Witness,
    },
    Unknown {
        reason: String,
    },
}

/// How a decision was (requested to be) made.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Groebner-certified, conclusive over the algebraic closure.
    Exact,
    /// Random flat points; conclusive only for non-constancy.
    Sampled { trials: usize, max_degree: u8 },
}

pub const DEFAULT_SAMPLE_TRIALS: usize = 200;
pub const DEFAULT_SAMPLE_DEGREE: u8 = 3;

#[derive(Clone, Debug)]
pub struct ConstancyVerdict {
    pub status: VerdictStatus,
    /// The method that actually produced the status (exact decisions
    /// fall back to sampling when resource limits bite).
    pub method: Method,
}

impl ConstancyVerdict {
    pub fn is_constant(&self) -> bool {
        matches!(self.status, VerdictStatus::Constant { .. })
    }

    pub fn is_non_constant(&self) -> bool {
        matches!(self.status, VerdictStatus::NonConstant { .. })
    }
}

/// Resource caps for the exact decision and witness searches.
#[derive(Clone, Debug)]
pub struct DecisionLimits {
    /// Cap on row-subset enumeration when generating minors.
    pub minor_cap: usize,
    pub groebner_max_degree: u32,
    pub groebner_max_pairs: usize,
    /// Largest number of normalized points enumerated exhaustively
    /// when searching for a witness over the prime field.
    pub witness_exhaustive_cap: u64,
    /// Random trials per extension degree when searching beyond it.
    pub witness_trials: usize,
    pub witness_degree_cap: u8,
}

impl Default for DecisionLimits {
    fn default() -> Self {
        DecisionLimits {
            minor_cap: 200_000,
            groebner_max_degree: crate::groebner::DEFAULT_MAX_DEGREE,
            groebner_max_pairs: crate::groebner::DEFAULT_MAX_PAIRS,
            witness_exhaustive_cap: 2_000_000,
            witness_trials: 2_000,
            witness_degree_cap: 3,
        }
    }
}

/// rank(Theta(xi)^j) at one point, by direct evaluation.
pub fn jrank_at(m: &ModuleRep, lat: &ElabLattice, xi: &PiPoint, j: u32) -> Result<usize> {
    let act = m.radical_action(lat.member(xi.member()), xi.coeffs())?;
    Ok(act.pow(j).rank())
}

struct ChartData {
    member: usize,
    z: crate::theta::ZChart,
    generic_rank: usize,
}

/// Decide whether rank(Theta(xi)^j) is the same at every flat point of
/// every maximal chart.  See the module docs for the two methods; the
/// exact method falls back to sampling when a resource cap is hit, and
/// returns Unknown rather than guessing when even that is inconclusive.
pub fn decide_constant_jrank(
    m: &ModuleRep,
    lat: &ElabLattice,
    j: u32,
    method: Method,
    limits: &DecisionLimits,
    rng: &mut impl Rng,
) -> Result<ConstancyVerdict> {
    let p = m.prime();
    if j == 0 || j >= p as u32 {
        return Err(Error::InvalidInput(format!(
            "power must lie in 1..={}, got {j}",
            p - 1
        )));
    }
    let mut charts = Vec::with_capacity(lat.maximals().len());
    for &mx in lat.maximals() {
        let z = theta_z_chart(m, lat.member(mx), j)?;
        let generic_rank = z.matrix().generic_rank();
        charts.push(ChartData { member: mx, z, generic_rank });
    }
    let g_max = charts.iter().map(|c| c.generic_rank).max().unwrap();
    let g_min_chart = charts.iter().min_by_key(|c| c.generic_rank).unwrap();

    // Charts with different generic ranks: any flat point realizing
    // the smaller chart's generic rank already disagrees with the
    // larger chart.
    if g_min_chart.generic_rank != g_max {
        let target = g_min_chart.generic_rank;
        let found =
            find_flat_with_rank(m, lat, g_min_chart.member, j, target, limits, rng)?;
        return match found {
            Some(xi) => {
                let jordan = local_jordan_type(m, lat, &xi, true)?;
                Ok(ConstancyVerdict {
                    status: VerdictStatus::NonConstant {
                        witness: Witness {
                            member: xi.member(),
                            coeffs: xi.coeffs().to_vec(),
                            rank: target,
                            expected_rank: g_max,
                            jordan,
                        },
                    },
                    method,
                })
            }
            None => Ok(ConstancyVerdict {
                status: VerdictStatus::Unknown {
                    reason: format!(
                        "chart generic ranks differ ({} vs {g_max}) but no witness \
                         realizing the smaller rank was found within the search caps",
                        g_min_chart.generic_rank
                    ),
                },
                method,
            }),
        };
    }
    let g = g_max;

    match method {
        Method::Sampled { trials, max_degree } => {
            sampled_scan(m, lat, &charts, j, g, trials, max_degree, method, rng)
        }
        Method::Exact => {
            for c in &charts {
                if c.generic_rank == 0 {
                    continue;
                }
                let minors = match c.z.matrix().minors(c.generic_rank, limits.minor_cap) {
                    Ok(v) => dedup_polys(v),
                    Err(Error::ResourceLimit(what)) => {
                        return exact_fallback(m, lat, &charts, j, g, limits, what, rng)
                    }
                    Err(e) => return Err(e),
                };
                for &pos in c.z.ann_var_positions() {
                    let f = MultiPoly::var(c.z.ring(), pos);
                    let vanishes = match groebner::vanishes_on_variety(
                        &f,
                        &minors,
                        limits.groebner_max_degree,
                        limits.groebner_max_pairs,
                    ) {
                        Ok(v) => v,
                        Err(Error::ResourceLimit(what)) => {
                            return exact_fallback(m, lat, &charts, j, g, limits, what, rng)
                        }
                        Err(e) => return Err(e),
                    };
                    if !vanishes {
                        // Certified non-constant; produce a point.
                        let found =
                            find_flat_below_rank(m, lat, c.member, j, g, limits, rng)?;
                        return match found {
                            Some(xi) => {
                                let rank = jrank_at(m, lat, &xi, j)?;
                                let jordan = local_jordan_type(m, lat, &xi, true)?;
                                Ok(ConstancyVerdict {
                                    status: VerdictStatus::NonConstant {
                                        witness: Witness {
                                            member: xi.member(),
                                            coeffs: xi.coeffs().to_vec(),
                                            rank,
                                            expected_rank: g,
                                            jordan,
                                        },
                                    },
                                    method: Method::Exact,
                                })
                            }
                            None => Ok(ConstancyVerdict {
                                status: VerdictStatus::Unknown {
                                    reason: "rank drop on the flat locus is certified \
                                             algebraically, but no witness exists within \
                                             the field-degree search cap"
                                        .into(),
                                },
                                method: Method::Exact,
                            }),
                        };
                    }
                }
            }
            Ok(ConstancyVerdict {
                status: VerdictStatus::Constant { rank: g, jordan: None },
                method: Method::Exact,
            })
        }
    }
}

/// Decide constant Jordan type: constant j-rank for every j = 1..p-1.
/// A constant verdict carries the full generic Jordan type.
pub fn decide_constant_jordan_type(
    m: &ModuleRep,
    lat: &ElabLattice,
    method: Method,
    limits: &DecisionLimits,
    rng: &mut impl Rng,
) -> Result<ConstancyVerdict> {
    let p = m.prime();
    let mut profile = vec![m.dim()];
    let mut worst_method = method;
    for j in 1..p as u32 {
        let v = decide_constant_jrank(m, lat, j, method, limits, rng)?;
        match v.status {
            VerdictStatus::Constant { rank, .. } => {
                profile.push(rank);
                if let Method::Sampled { .. } = v.method {
                    worst_method = v.method;
                }
            }
            _ => return Ok(v),
        }
    }
    profile.push(0);
    let jordan = JordanType::from_rank_profile(p, &profile)?;
    Ok(ConstancyVerdict {
        status: VerdictStatus::Constant { rank: profile[1], jordan: Some(jordan) },
        method: worst_method,
    })
}

fn sampled_scan(
    m: &ModuleRep,
    lat: &ElabLattice,
    charts: &[ChartData],
    j: u32,
    g: usize,
    trials: usize,
    max_degree: u8,
    record: Method,
    rng: &mut impl Rng,
) -> Result<ConstancyVerdict> {
    let per_degree = trials.div_ceil(max_degree as usize).max(1);
    for c in charts {
        for d in 1..=max_degree {
            for _ in 0..per_degree {
                let xi = PiPoint::random_flat(lat, c.member, d, rng)?;
                let rank = jrank_at(m, lat, &xi, j)?;
                if rank != g {
                    let jordan = local_jordan_type(m, lat, &xi, true)?;
                    return Ok(ConstancyVerdict {
                        status: VerdictStatus::NonConstant {
                            witness: Witness {
                                member: xi.member(),
                                coeffs: xi.coeffs().to_vec(),
                                rank,
                                expected_rank: g,
                                jordan,
                            },
                        },
                        method: record,
                    });
                }
            }
        }
    }
    Ok(ConstancyVerdict {
        status: VerdictStatus::Constant { rank: g, jordan: None },
        method: record,
    })
}

fn exact_fallback(
    m: &ModuleRep,
    lat: &ElabLattice,
    charts: &[ChartData],
    j: u32,
    g: usize,
    limits: &DecisionLimits,
    what: String,
    rng: &mut impl Rng,
) -> Result<ConstancyVerdict> {
    let fallback = Method::Sampled {
        trials: limits.witness_trials,
        max_degree: limits.witness_degree_cap,
    };
    let v = sampled_scan(
        m,
        lat,
        charts,
        j,
        g,
        limits.witness_trials,
        limits.witness_degree_cap,
        fallback,
        rng,
    )?;
    if v.is_non_constant() {
        return Ok(v);
    }
    Ok(ConstancyVerdict {
        status: VerdictStatus::Unknown {
            reason: format!(
                "exact decision hit a resource limit ({what}); sampling found no \
                 counterexample"
            ),
        },
        method: fallback,
    })
}

fn dedup_polys(v: Vec<MultiPoly>) -> Vec<MultiPoly> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for f in v {
        let key: Vec<(Vec<u8>, u8)> =
            f.terms().iter().map(|(e, c)| (e.to_vec(), *c)).collect();
        if seen.insert(key) {
            out.push(f);
        }
    }
    out
}

// ---------------------------------------------------------------------
// Exhaustive sweeps in the table-coded domain.

/// One chart prepared for bulk evaluation over a small field: the
/// element matrices in sparse coded form plus the flatness forms.
struct CodedChart {
    table: SmallFieldTable,
    q: u64,
    dim: usize,
    nvars: usize,
    /// Per variable: nonzero entries of rho(g) - I as (flat index,
    /// coded value).
    sparse: Vec<Vec<(usize, u8)>>,
    /// Row i: the coefficient of variable c in the form z_{e_i}; a
    /// point is flat iff some form is nonzero on it.
    ann_rows: Vec<Vec<u8>>,
}

impl CodedChart {
    fn new(m: &ModuleRep, sub: &Subgroup, d: u8) -> Result<CodedChart> {
        let p = m.prime();
        let q = (p as u64).pow(d as u32);
        if q > 256 {
            return Err(Error::ResourceLimit(format!(
                "exhaustive sweep needs a field of at most 256 elements, got {q}"
            )));
        }
        let table = SmallFieldTable::new(p, d);
        let dim = m.dim();
        let elems = sub.nonidentity_by_exponent();
        let mut sparse = Vec::with_capacity(elems.len());
        for &g in &elems {
            let n = m.action_minus_identity(g);
            let mut nz = Vec::new();
            for i in 0..dim {
                for jj in 0..dim {
                    let v = n[(i, jj)];
                    if !Scalar::is_zero(&v) {
                        nz.push((i * dim + jj, v.val()));
                    }
                }
            }
            sparse.push(nz);
        }
        let r = sub.rank() as usize;
        let mut ann_rows = vec![vec![0u8; elems.len()]; r];
        for (c, &g) in elems.iter().enumerate() {
            let coords = sub.coords_of(g).expect("chart element has coordinates");
            for i in 0..r {
                ann_rows[i][c] = coords[i];
            }
        }
        Ok(CodedChart { table, q, dim, nvars: elems.len(), sparse, ann_rows })
    }

    fn is_flat(&self, alpha: &[u8]) -> bool {
        self.ann_rows.iter().any(|row| {
            let mut acc = 0u8;
            for (c, &coef) in row.iter().enumerate() {
                if coef != 0 && alpha[c] != 0 {
                    acc = self.table.add(acc, self.table.mul(coef, alpha[c]));
                }
            }
            acc != 0
        })
    }

    fn accumulate(&self, alpha: &[u8], out: &mut [u8]) {
        out.fill(0);
        for (c, &a) in alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if a == 1 {
                for &(idx, v) in &self.sparse[c] {
                    out[idx] = self.table.add(out[idx], v);
                }
            } else {
                for &(idx, v) in &self.sparse[c] {
                    out[idx] = self.table.add(out[idx], self.table.mul(a, v));
                }
            }
        }
    }

    fn matmul(&self, a: &[u8], b: &[u8], out: &mut [u8]) {
        let n = self.dim;
        out.fill(0);
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                if aik == 0 {
                    continue;
                }
                for jj in 0..n {
                    let bkj = b[k * n + jj];
                    if bkj != 0 {
                        out[i * n + jj] =
                            self.table.add(out[i * n + jj], self.table.mul(aik, bkj));
                    }
                }
            }
        }
    }

    /// Full rank profile r_0..r_p of the matrix in `c`, using the
    /// provided scratch buffers.
    fn rank_profile(
        &self,
        p: u8,
        c: &[u8],
        pw: &mut Vec<u8>,
        tmp: &mut Vec<u8>,
        rk: &mut Vec<u8>,
        profile: &mut Vec<usize>,
    ) -> Result<()> {
        profile.clear();
        profile.push(self.dim);
        pw.clear();
        pw.extend_from_slice(c);
        for s in 1..=p as usize {
            rk.clear();
            rk.extend_from_slice(pw);
            let r = coded_rank(&self.table, rk, self.dim, self.dim);
            profile.push(r);
            if r == 0 {
                profile.resize(p as usize + 1, 0);
                return Ok(());
            }
            if s == p as usize {
                return Err(Error::PNilpotenceFailed);
            }
            tmp.resize(self.dim * self.dim, 0);
            self.matmul(pw, c, tmp);
            std::mem::swap(pw, tmp);
        }
        Ok(())
    }

    /// rank of the j-th power of the matrix in `c`.
    fn rank_power(&self, c: &[u8], j: u32, pw: &mut Vec<u8>, tmp: &mut Vec<u8>) -> usize {
        pw.clear();
        pw.extend_from_slice(c);
        for _ in 1..j {
            tmp.resize(self.dim * self.dim, 0);
            self.matmul(pw, c, tmp);
            std::mem::swap(pw, tmp);
        }
        coded_rank(&self.table, pw, self.dim, self.dim)
    }
}

/// Visit every vector over F_q (q = table size) with first nonzero
/// coordinate equal to 1; the visitor returns false to stop early.
fn for_each_normalized(
    q: u64,
    nvars: usize,
    mut visit: impl FnMut(&[u8]) -> Result<bool>,
) -> Result<()> {
    let mut digits = vec![0u8; nvars];
    for first in 0..nvars {
        digits.iter_mut().for_each(|d| *d = 0);
        digits[first] = 1;
        'odometer: loop {
            if !visit(&digits)? {
                return Ok(());
            }
            let mut i = nvars;
            while i > first + 1 {
                i -= 1;
                if (digits[i] as u64) < q - 1 {
                    digits[i] += 1;
                    digits[i + 1..].iter_mut().for_each(|d| *d = 0);
                    continue 'odometer;
                }
            }
            break;
        }
    }
    Ok(())
}

/// Number of vectors with first nonzero coordinate 1, i.e.
/// (q^nvars - 1)/(q - 1).
fn normalized_count(q: u64, nvars: usize) -> u128 {
    let mut total: u128 = 0;
    let mut pw: u128 = 1;
    for _ in 0..nvars {
        total += pw;
        pw *= q as u128;
    }
    total
}

/// Exhaustive Jordan types over all flat points of one member at one
/// extension degree.
#[derive(Clone, Debug)]
pub struct TypeSweep {
    pub member: usize,
    pub degree: u8,
    /// Normalized points visited (flat and non-flat).
    pub points: u64,
    pub flat_points: u64,
    pub counts: BTreeMap<JordanType, u64>,
}

pub fn sweep_local_types(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    d: u8,
    cap: u64,
) -> Result<TypeSweep> {
    let sub = lat
        .members()
        .get(member)
        .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
    let chart = CodedChart::new(m, sub, d)?;
    let total = normalized_count(chart.q, chart.nvars);
    if total > cap as u128 {
        return Err(Error::ResourceLimit(format!(
            "sweep would visit {total} points (cap {cap})"
        )));
    }
    let p = m.prime();
    let mut cbuf = vec![0u8; chart.dim * chart.dim];
    let (mut pw, mut tmp, mut rk) = (Vec::new(), Vec::new(), Vec::new());
    let mut profile = Vec::new();
    let mut by_profile: Vec<(Vec<usize>, u64)> = Vec::new();
    let mut points = 0u64;
    let mut flat_points = 0u64;
    for_each_normalized(chart.q, chart.nvars, |alpha| {
        points += 1;
        if !chart.is_flat(alpha) {
            return Ok(true);
        }
        flat_points += 1;
        chart.accumulate(alpha, &mut cbuf);
        chart.rank_profile(p, &cbuf, &mut pw, &mut tmp, &mut rk, &mut profile)?;
        match by_profile.iter_mut().find(|(pr, _)| pr == &profile) {
            Some((_, n)) => *n += 1,
            None => by_profile.push((profile.clone(), 1)),
        }
        Ok(true)
    })?;
    let mut counts = BTreeMap::new();
    for (pr, n) in by_profile {
        counts.insert(JordanType::from_rank_profile(p, &pr)?, n);
    }
    Ok(TypeSweep { member, degree: d, points, flat_points, counts })
}

/// Exhaustive j-power ranks over all flat points of one member at one
/// extension degree.
#[derive(Clone, Debug)]
pub struct RankSweep {
    pub member: usize,
    pub degree: u8,
    pub points: u64,
    pub flat_points: u64,
    pub counts: BTreeMap<usize, u64>,
}

pub fn sweep_jranks(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    j: u32,
    d: u8,
    cap: u64,
) -> Result<RankSweep> {
    let sub = lat
        .members()
        .get(member)
        .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
    let chart = CodedChart::new(m, sub, d)?;
    let total = normalized_count(chart.q, chart.nvars);
    if total > cap as u128 {
        return Err(Error::ResourceLimit(format!(
            "sweep would visit {total} points (cap {cap})"
        )));
    }
    let mut cbuf = vec![0u8; chart.dim * chart.dim];
    let (mut pw, mut tmp) = (Vec::new(), Vec::new());
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut points = 0u64;
    let mut flat_points = 0u64;
    for_each_normalized(chart.q, chart.nvars, |alpha| {
        points += 1;
        if !chart.is_flat(alpha) {
            return Ok(true);
        }
        flat_points += 1;
        chart.accumulate(alpha, &mut cbuf);
        let r = chart.rank_power(&cbuf, j, &mut pw, &mut tmp);
        *counts.entry(r).or_insert(0) += 1;
        Ok(true)
    })?;
    Ok(RankSweep { member, degree: d, points, flat_points, counts })
}

/// Search for a flat point with rank(Theta^j) strictly below `bound`:
/// exhaustively over the prime field, then randomly over extensions.
fn find_flat_below_rank(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    j: u32,
    bound: usize,
    limits: &DecisionLimits,
    rng: &mut impl Rng,
) -> Result<Option<PiPoint>> {
    find_flat_matching(m, lat, member, j, &|r| r < bound, limits, rng)
}

/// Search for a flat point with rank(Theta^j) exactly `target`.
fn find_flat_with_rank(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    j: u32,
    target: usize,
    limits: &DecisionLimits,
    rng: &mut impl Rng,
) -> Result<Option<PiPoint>> {
    find_flat_matching(m, lat, member, j, &|r| r == target, limits, rng)
}

fn find_flat_matching(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    j: u32,
    want: &dyn Fn(usize) -> bool,
    limits: &DecisionLimits,
    rng: &mut impl Rng,
) -> Result<Option<PiPoint>> {
    let sub = lat.member(member);
    let p = m.prime();
    // Exhaustive over the prime field first (witnesses there are the
    // most readable).
    let chart = CodedChart::new(m, sub, 1)?;
    if normalized_count(chart.q, chart.nvars) <= limits.witness_exhaustive_cap as u128 {
        let mut cbuf = vec![0u8; chart.dim * chart.dim];
        let (mut pw, mut tmp) = (Vec::new(), Vec::new());
        let mut hit: Option<Vec<u8>> = None;
        for_each_normalized(chart.q, chart.nvars, |alpha| {
            if !chart.is_flat(alpha) {
                return Ok(true);
            }
            chart.accumulate(alpha, &mut cbuf);
            if want(chart.rank_power(&cbuf, j, &mut pw, &mut tmp)) {
                hit = Some(alpha.to_vec());
                return Ok(false);
            }
            Ok(true)
        })?;
        if let Some(alpha) = hit {
            let coeffs: Vec<Fq> = alpha.iter().map(|&a| chart.table.decode(a)).collect();
            return Ok(Some(PiPoint::new(lat, member, &coeffs)?));
        }
    }
    for d in 2..=limits.witness_degree_cap {
        for _ in 0..limits.witness_trials {
            let xi = PiPoint::random_flat(lat, member, d, rng)?;
            if want(jrank_at(m, lat, &xi, j)?) {
                return Ok(Some(xi));
            }
        }
    }
    // Random retries over the prime field in case the exhaustive pass
    // was skipped by the cap.
    if normalized_count((p as u64).pow(1), sub.order() - 1) > limits.witness_exhaustive_cap as u128
    {
        for _ in 0..limits.witness_trials {
            let xi = PiPoint::random_flat(lat, member, 1, rng)?;
            if want(jrank_at(m, lat, &xi, j)?) {
                return Ok(Some(xi));
            }
        }
    }
    Ok(None)
}

/// Observed ranks of Theta(v)^j for random v in the radical stratum
/// J^h minus J^{h+1}.  The flat stratum is h = 1.  This samples the
/// stronger stratified constancy condition; it is evidence only.
pub fn sample_stratum_ranks(
    m: &ModuleRep,
    lat: &ElabLattice,
    member: usize,
    h: usize,
    j: u32,
    trials: usize,
    d: u8,
    rng: &mut impl Rng,
) -> Result<BTreeMap<usize, u64>> {
    let sub = lat
        .members()
        .get(member)
        .ok_or_else(|| Error::InvalidInput(format!("no lattice member {member}")))?;
    let p = m.prime();
    let rb = RadicalBasis::new(lat.group(), sub, p)?;
    let basis_h = rb.power_basis(h)?;
    if basis_h.nrows() == 0 {
        return Err(Error::InvalidInput(format!("radical power {h} is zero")));
    }
    let basis_h1 = rb.power_basis(h + 1)?;
    let lift = |mat: &Mat<crate::field::Fp>| -> Mat<Fq> {
        Mat::from_fn((p, d), mat.nrows(), mat.ncols(), |i, jj| Fq::from_fp(mat[(i, jj)], d))
    };
    let bh = lift(&basis_h);
    let bh1 = lift(&basis_h1);
    let rank_h1 = bh1.rank();
    let q = (p as u64).pow(d as u32);
    let mut counts = BTreeMap::new();
    for _ in 0..trials {
        // random combination of J^h basis rows, rejected when it
        // falls into J^{h+1}
        let v;
        let mut guard = 0;
        loop {
            let coefs: Vec<Fq> =
                (0..bh.nrows()).map(|_| Fq::from_counter(rng.gen_range(0..q), p, d)).collect();
            let mut w = vec![Fq::zero(p, d); bh.ncols()];
            for (k, c) in coefs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for col in 0..bh.ncols() {
                    w[col] = w[col] + *c * bh[(k, col)];
                }
            }
            let stacked = bh1.vstack(&Mat::from_rows((p, d), vec![w.clone()]));
            if stacked.rank() > rank_h1 {
                v = w;
                break;
            }
            guard += 1;
            if guard > 200 {
                return Err(Error::ResourceLimit(
                    "could not sample outside the deeper radical stratum".into(),
                ));
            }
        }
        let act = m.radical_action(sub, &v)?;
        let r = act.pow(j).rank();
        *counts.entry(r).or_insert(0) += 1;
    }
    Ok(counts)
}
