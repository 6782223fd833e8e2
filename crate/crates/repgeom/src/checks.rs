//! Named verification checks over modules and operators, used by the
//! command-line `verify` command and the acceptance suite.
//!
//! Each check has a stable dotted identifier naming the property it
//! verifies (for example `theta.p_nilpotence`).  A check runs against
//! a [`CheckEnv`] -- one group with its subgroup lattice and a corpus
//! of named modules -- and reports pass, fail, unknown (a resource cap
//! stopped the decision), or skip (the property does not apply to this
//! environment).  Reports carry no timing or other nondeterministic
//! data, so a fixed environment and seed always produce identical
//! output.

use crate::error::{Error, Result};
use crate::field::{Fp, Fq};
use crate::grouplat::{elementary_abelian_lattice, ElabLattice, GroupTable};
use crate::jordan::{
    decide_constant_jrank, jrank_at, sweep_local_types, DecisionLimits, Method, VerdictStatus,
};
use crate::linalg::Mat;
use crate::modrep::{
    cyclic_coset_module, natural_module, radical_square_quotient_module, regular_module,
    trivial_module, ModuleRep, RadicalBasis,
};
use crate::polymat::PolyMatrix;
use crate::sheafk::{
    graded_pieces, hilbert_polynomial, k0_class, k0_family, splitting_type_p1, K0Vector,
    PieceKind,
};
use crate::springer::{ell_lattice, exp_nilpotent, log_unipotent, rank_compare};
use crate::theta::{section_chart, PiPoint, ThetaFamily};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A resource cap stopped the decision before an answer.
    Unknown,
    /// The property does not apply to this environment.
    Skip,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Unknown => "unknown",
            CheckStatus::Skip => "skip",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

/// Exit code a report set maps to: failures dominate, then resource
/// limits; skips are harmless.
pub fn exit_code(reports: &[CheckReport]) -> i32 {
    if reports.iter().any(|r| r.status == CheckStatus::Fail) {
        1
    } else if reports.iter().any(|r| r.status == CheckStatus::Unknown) {
        3
    } else {
        0
    }
}

#[derive(Clone, Debug)]
pub struct VerifySettings {
    /// Seed for every randomized sub-check; fixed seed, fixed report.
    pub seed: u64,
    /// Random points per module for sampled identities.
    pub samples: usize,
    /// Largest extension degree sampled points draw from.
    pub max_degree: u8,
    /// The regular representation joins the corpus only below this
    /// group order.
    pub regular_order_cap: usize,
    /// Point cap for exhaustive sweeps.
    pub sweep_cap: u64,
    pub limits: DecisionLimits,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            seed: 0x7265_7067,
            samples: 25,
            max_degree: 2,
            regular_order_cap: 32,
            sweep_cap: 5_000_000,
            limits: DecisionLimits::default(),
        }
    }
}

#[derive(Clone)]
pub struct NamedModule {
    pub name: String,
    pub module: Arc<ModuleRep>,
}

/// One group with its lattice and module corpus; every check runs
/// against this.
pub struct CheckEnv {
    group: Arc<GroupTable>,
    p: u8,
    lattice: Arc<ElabLattice>,
    corpus: Vec<NamedModule>,
    settings: VerifySettings,
}

/// The default module corpus for a group: the trivial module always;
/// the regular representation below the order cap; the defining matrix
/// module when the group carries matrices over F_p; the radical-square
/// quotient for elementary abelian groups; and the cyclic coset module
/// of the first order-p generator.
pub fn standard_corpus(
    group: &Arc<GroupTable>,
    p: u8,
    settings: &VerifySettings,
) -> Result<Vec<NamedModule>> {
    let mut corpus = Vec::new();
    let mut push = |name: &str, m: ModuleRep| {
        corpus.push(NamedModule { name: name.to_string(), module: Arc::new(m) })
    };
    push("trivial", trivial_module(group, p)?);
    if group.order() <= settings.regular_order_cap {
        push("regular", regular_module(group, p)?);
    }
    if group.matrices().is_some() && group.matrix_prime() == Some(p) {
        push("natural", natural_module(group)?);
    }
    if let Ok(m) = radical_square_quotient_module(group, p) {
        push("radical_square_quotient", m);
    }
    if let Some(&g) = group
        .generators()
        .iter()
        .find(|&&g| group.element_order(g) == p as u32)
    {
        push("cyclic_coset", cyclic_coset_module(group, p, g)?);
    }
    Ok(corpus)
}

pub const CHECK_IDS: &[&str] = &[
    "lattice.structure",
    "radical.quotient_map",
    "theta.p_nilpotence",
    "theta.specialization",
    "theta.equivariance",
    "theta.restriction",
    "jordan.free_type",
    "jordan.constancy_witness",
    "bundle.graded_exactness",
    "bundle.splitting",
    "bundle.basis_independence",
    "bundle.k0_family",
    "springer.exp_log",
    "springer.kills_j2",
    "springer.one_param",
    "springer.rank_compare",
];

type CheckResult = Result<(CheckStatus, String)>;

impl CheckEnv {
    /// Build the environment with the standard corpus.
    pub fn new(group: Arc<GroupTable>, p: u8, settings: VerifySettings) -> Result<CheckEnv> {
        let corpus = standard_corpus(&group, p, &settings)?;
        Self::with_corpus(group, p, settings, corpus)
    }

    /// Build the environment around an explicit corpus.
    pub fn with_corpus(
        group: Arc<GroupTable>,
        p: u8,
        settings: VerifySettings,
        corpus: Vec<NamedModule>,
    ) -> Result<CheckEnv> {
        let lattice = Arc::new(elementary_abelian_lattice(&group, p)?);
        for m in &corpus {
            if m.module.prime() != p {
                return Err(Error::InvalidInput(format!(
                    "module {} has prime {}, environment has {p}",
                    m.name,
                    m.module.prime()
                )));
            }
        }
        Ok(CheckEnv { group, p, lattice, corpus, settings })
    }

    pub fn group(&self) -> &Arc<GroupTable> {
        &self.group
    }

    pub fn lattice(&self) -> &Arc<ElabLattice> {
        &self.lattice
    }

    pub fn corpus(&self) -> &[NamedModule] {
        &self.corpus
    }

    pub fn settings(&self) -> &VerifySettings {
        &self.settings
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.settings.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    /// Run every check, in registry order.
    pub fn run_all(&self) -> Vec<CheckReport> {
        CHECK_IDS.iter().map(|id| self.run(id)).collect()
    }

    /// Run one check by identifier.
    pub fn run(&self, id: &str) -> CheckReport {
        let (id, answer) = match id {
            "lattice.structure" => ("lattice.structure", self.lattice_structure()),
            "radical.quotient_map" => ("radical.quotient_map", self.radical_quotient_map()),
            "theta.p_nilpotence" => ("theta.p_nilpotence", self.theta_p_nilpotence()),
            "theta.specialization" => ("theta.specialization", self.theta_specialization()),
            "theta.equivariance" => ("theta.equivariance", self.theta_equivariance()),
            "theta.restriction" => ("theta.restriction", self.theta_restriction()),
            "jordan.free_type" => ("jordan.free_type", self.jordan_free_type()),
            "jordan.constancy_witness" => {
                ("jordan.constancy_witness", self.jordan_constancy_witness())
            }
            "bundle.graded_exactness" => {
                ("bundle.graded_exactness", self.bundle_graded_exactness())
            }
            "bundle.splitting" => ("bundle.splitting", self.bundle_splitting()),
            "bundle.basis_independence" => {
                ("bundle.basis_independence", self.bundle_basis_independence())
            }
            "bundle.k0_family" => ("bundle.k0_family", self.bundle_k0_family()),
            "springer.exp_log" => ("springer.exp_log", self.springer_exp_log()),
            "springer.kills_j2" => ("springer.kills_j2", self.springer_kills_j2()),
            "springer.one_param" => ("springer.one_param", self.springer_one_param()),
            "springer.rank_compare" => ("springer.rank_compare", self.springer_rank_compare()),
            other => {
                return CheckReport {
                    id: "unknown",
                    status: CheckStatus::Fail,
                    detail: format!("no check named {other}"),
                }
            }
        };
        let (status, detail) = match answer {
            Ok(pair) => pair,
            Err(Error::ResourceLimit(msg)) => {
                (CheckStatus::Unknown, format!("resource limit: {msg}"))
            }
            Err(Error::NotStabilized { computed_to }) => (
                CheckStatus::Unknown,
                format!("series not stabilized by degree {computed_to}"),
            ),
            Err(e) => (CheckStatus::Fail, e.to_string()),
        };
        CheckReport { id, status, detail }
    }

    // ----- lattice ---------------------------------------------------

    fn lattice_structure(&self) -> CheckResult {
        let lat = &self.lattice;
        let g = self.group.as_ref();
        for (i, sub) in lat.members().iter().enumerate() {
            if lat.containing_maximals(i).is_empty() {
                return fail(format!("member {i} lies under no maximal member"));
            }
            if sub.rank() == 0 {
                return fail(format!("member {i} is trivial"));
            }
        }
        for &mx in lat.maximals() {
            for (i, other) in lat.members().iter().enumerate() {
                if i != mx && lat.member(mx).is_subset_of(other) {
                    return fail(format!("maximal {mx} is contained in member {i}"));
                }
            }
        }
        // Conjugation preserves rank, acts by the recorded bijection,
        // and composes contravariantly: (E^x)^y = E^(yx).
        for &x in g.generators() {
            for i in 0..lat.members().len() {
                let (t, bij) = lat.conjugate(i, x)?;
                if lat.member(t).rank() != lat.member(i).rank() {
                    return fail(format!("conjugation by {x} changes the rank of member {i}"));
                }
                for &(a, b) in &bij {
                    if g.conj(a, x) != b {
                        return fail(format!("bijection of member {i} under {x} is wrong"));
                    }
                }
            }
        }
        let gens = g.generators();
        for &x in gens {
            for &y in gens {
                for i in 0..lat.members().len() {
                    let (t1, _) = lat.conjugate(i, x)?;
                    let (t2, _) = lat.conjugate(t1, y)?;
                    let (direct, _) = lat.conjugate(i, g.mul(y, x))?;
                    if t2 != direct {
                        return fail(format!(
                            "conjugation of member {i} by {x} then {y} misses member {direct}"
                        ));
                    }
                }
            }
        }
        pass(format!(
            "members={} maximals={} conjugations checked for {} generators",
            lat.members().len(),
            lat.maximals().len(),
            gens.len()
        ))
    }

    // ----- radical ---------------------------------------------------

    /// The class of g - e in J/J^2 equals the exponent coordinates of
    /// g in the subgroup basis, for every element of every member.
    fn radical_quotient_map(&self) -> CheckResult {
        let mut elements = 0usize;
        for sub in self.lattice.members() {
            let rb = RadicalBasis::new(self.group.as_ref(), sub, self.p)?;
            let elems = sub.nonidentity_by_exponent();
            for (k, &g) in elems.iter().enumerate() {
                let mut unit = vec![Fp::new(0, self.p); elems.len()];
                unit[k] = Fp::new(1, self.p);
                let got = rb.j_mod_j2_coords(&unit);
                let want: Vec<Fp> = sub
                    .coords_of(g)
                    .expect("member element has coordinates")
                    .iter()
                    .map(|&c| Fp::new(c as i64, self.p))
                    .collect();
                if got != want {
                    return fail(format!(
                        "element {g} of a rank-{} member maps to {:?}, expected {:?}",
                        sub.rank(),
                        got,
                        want
                    ));
                }
                elements += 1;
            }
        }
        pass(format!(
            "{} elements across {} members match their exponent coordinates",
            elements,
            self.lattice.members().len()
        ))
    }

    // ----- theta -----------------------------------------------------

    fn theta_p_nilpotence(&self) -> CheckResult {
        let mut names = Vec::new();
        for nm in &self.corpus {
            let fam = ThetaFamily::new(&self.lattice, &nm.module, 1)?;
            if !fam.p_nilpotent() {
                return fail(format!("operator family of {} has nonzero p-th power", nm.name));
            }
            names.push(nm.name.as_str());
        }
        pass(format!("symbolic p-th power vanishes for: {}", names.join(", ")))
    }

    fn theta_specialization(&self) -> CheckResult {
        let mut rng = self.rng(2);
        let mut points = 0usize;
        for nm in &self.corpus {
            let fam = ThetaFamily::new(&self.lattice, &nm.module, 1)?;
            let mut count = 0usize;
            'outer: loop {
                for member in 0..self.lattice.members().len() {
                    for d in 1..=self.settings.max_degree {
                        if count >= self.settings.samples {
                            break 'outer;
                        }
                        let pt = PiPoint::random(&self.lattice, member, d, &mut rng)?;
                        let spec = fam.specialize(&pt)?;
                        let direct = nm
                            .module
                            .radical_action(self.lattice.member(member), pt.coeffs())?;
                        for i in 0..spec.nrows() {
                            for j in 0..spec.ncols() {
                                if spec[(i, j)] != direct[(i, j)].lift(pt.degree()) {
                                    return fail(format!(
                                        "module {}, member {member}: specialization \
                                         disagrees with the radical action",
                                        nm.name
                                    ));
                                }
                            }
                        }
                        count += 1;
                    }
                }
            }
            points += count;
        }
        pass(format!(
            "{points} random points agree across {} modules",
            self.corpus.len()
        ))
    }

    fn theta_equivariance(&self) -> CheckResult {
        for nm in &self.corpus {
            let fam = ThetaFamily::new(&self.lattice, &nm.module, 1)?;
            for &x in self.group.generators() {
                if !fam.check_equivariance(x)? {
                    return fail(format!(
                        "module {}: conjugation by generator {x} breaks equivariance",
                        nm.name
                    ));
                }
            }
        }
        pass(format!(
            "{} generators centralize the family of every module",
            self.group.generators().len()
        ))
    }

    fn theta_restriction(&self) -> CheckResult {
        for nm in &self.corpus {
            let fam = ThetaFamily::new(&self.lattice, &nm.module, 1)?;
            for member in 0..self.lattice.members().len() {
                let (ring, restricted) = fam.restrict_to(member)?;
                let mats: Vec<Mat<Fp>> = self
                    .lattice
                    .member(member)
                    .nonidentity_by_exponent()
                    .iter()
                    .map(|&g| nm.module.action_minus_identity(g))
                    .collect();
                let direct = PolyMatrix::linear_from_mats(&ring, &mats);
                if !restricted.sub(&direct).is_zero() {
                    return fail(format!(
                        "module {}: restriction to member {member} differs from the \
                         direct construction",
                        nm.name
                    ));
                }
            }
        }
        pass(format!(
            "all {} members agree with direct construction for every module",
            self.lattice.members().len()
        ))
    }

    // ----- jordan ----------------------------------------------------

    /// The regular representation restricts to a free module on every
    /// chart, so every flat point must show blocks of size p only.
    fn jordan_free_type(&self) -> CheckResult {
        let Some(nm) = self.corpus.iter().find(|m| m.name == "regular") else {
            return skip("corpus has no regular representation".into());
        };
        let dim = nm.module.dim();
        let blocks = vec![self.p as u32; dim / self.p as usize];
        let mut flat_total = 0u64;
        for &mx in self.lattice.maximals() {
            let sweep =
                sweep_local_types(&nm.module, &self.lattice, mx, 1, self.settings.sweep_cap)?;
            for (ty, n) in &sweep.counts {
                if ty.blocks() != blocks.as_slice() {
                    return fail(format!(
                        "member {mx}: {n} flat points have type {:?}, expected all \
                         blocks of size {}",
                        ty.blocks(),
                        self.p
                    ));
                }
            }
            flat_total += sweep.flat_points;
        }
        pass(format!(
            "{flat_total} flat prime-field points across {} charts all have {} blocks \
             of size {}",
            self.lattice.maximals().len(),
            dim / self.p as usize,
            self.p
        ))
    }

    /// Constancy verdicts are self-consistent: a constant verdict's
    /// rank matches sampled points, and a non-constant verdict's
    /// witness really deviates.
    fn jordan_constancy_witness(&self) -> CheckResult {
        let mut lines = Vec::new();
        for nm in &self.corpus {
            let mut rng = self.rng(8);
            let verdict = decide_constant_jrank(
                &nm.module,
                &self.lattice,
                1,
                Method::Sampled {
                    trials: self.settings.samples.max(60),
                    max_degree: self.settings.max_degree,
                },
                &self.settings.limits,
                &mut rng,
            )?;
            match verdict.status {
                VerdictStatus::Constant { rank, .. } => {
                    for member in 0..self.lattice.members().len() {
                        for _ in 0..3 {
                            let pt = PiPoint::random_flat(
                                &self.lattice,
                                member,
                                1,
                                &mut rng,
                            )?;
                            let r = jrank_at(&nm.module, &self.lattice, &pt, 1)?;
                            if r != rank {
                                return fail(format!(
                                    "module {}: constant verdict rank {rank} but a flat \
                                     point of member {member} has rank {r}",
                                    nm.name
                                ));
                            }
                        }
                    }
                    lines.push(format!("{}: constant rank {rank}", nm.name));
                }
                VerdictStatus::NonConstant { witness } => {
                    let pt =
                        PiPoint::new(&self.lattice, witness.member, &witness.coeffs)?;
                    if !pt.is_flat() {
                        return fail(format!("module {}: witness is not flat", nm.name));
                    }
                    let r = jrank_at(&nm.module, &self.lattice, &pt, 1)?;
                    if r != witness.rank || r == witness.expected_rank {
                        return fail(format!(
                            "module {}: witness rank {r} does not certify deviation \
                             from {}",
                            nm.name, witness.expected_rank
                        ));
                    }
                    lines.push(format!(
                        "{}: witness rank {} vs generic {}",
                        nm.name, witness.rank, witness.expected_rank
                    ));
                }
                VerdictStatus::Unknown { reason } => {
                    return Ok((
                        CheckStatus::Unknown,
                        format!("module {}: {reason}", nm.name),
                    ));
                }
            }
        }
        pass(lines.join("; "))
    }

    // ----- bundle ----------------------------------------------------

    /// Kernel, image, and cokernel dimensions close the rank-nullity
    /// identities degree by degree, and the fitted polynomials
    /// reproduce the tables.
    fn bundle_graded_exactness(&self) -> CheckResult {
        let mx = self.first_maximal_member();
        let sub = self.lattice.member(mx);
        let n = sub.rank() as usize;
        let mut lines = Vec::new();
        for nm in &self.corpus {
            let m = nm.module.dim();
            let chart = section_chart(&nm.module, sub, 1)?;
            let mut ker = graded_pieces(&chart, PieceKind::Kernel, None)?;
            let mut im = graded_pieces(&chart, PieceKind::Image, None)?;
            let coker = graded_pieces(&chart, PieceKind::Cokernel, None)?;
            let top = ker.max_degree().min(im.max_degree()).min(coker.max_degree());
            im.extend_to(top + 1)?;
            for d in 0..=top {
                let full = m * monomial_count(n, d);
                if ker.h(d) + im.h(d + 1) != full {
                    return fail(format!(
                        "module {}: kernel {} + image {} misses {} at degree {d}",
                        nm.name,
                        ker.h(d),
                        im.h(d + 1),
                        full
                    ));
                }
                if im.h(d) + coker.h(d) != full {
                    return fail(format!(
                        "module {}: image {} + cokernel {} misses {} at degree {d}",
                        nm.name,
                        im.h(d),
                        coker.h(d),
                        full
                    ));
                }
            }
            let hk = hilbert_polynomial(&mut ker)?;
            for d in hk.stabilization..=ker.max_degree() {
                if hk.eval_usize(d) != Some(ker.h(d)) {
                    return fail(format!(
                        "module {}: kernel polynomial misses the table at degree {d}",
                        nm.name
                    ));
                }
            }
            lines.push(format!("{}: kernel rank {}", nm.name, hk.rank));
        }
        pass(format!("chart of member {mx}: {}", lines.join("; ")))
    }

    /// On a rank-2 chart the kernel is a sum of line bundles whose
    /// degrees reproduce both the class and the dimension table.
    fn bundle_splitting(&self) -> CheckResult {
        let mx = self.first_maximal_member();
        let sub = self.lattice.member(mx);
        if sub.rank() != 2 {
            return skip(format!("first maximal member has rank {}", sub.rank()));
        }
        let mut lines = Vec::new();
        for nm in &self.corpus {
            let chart = section_chart(&nm.module, sub, 1)?;
            let mut table = graded_pieces(&chart, PieceKind::Kernel, None)?;
            let hd = hilbert_polynomial(&mut table)?;
            let split = splitting_type_p1(&mut table, &hd)?;
            let total: i64 = split.iter().sum();
            if split.len() as i64 != hd.rank || total != hd.degree {
                return fail(format!(
                    "module {}: splitting {:?} does not reproduce rank {} degree {}",
                    nm.name, split, hd.rank, hd.degree
                ));
            }
            for d in hd.stabilization..=table.max_degree() {
                let expect: i64 =
                    split.iter().map(|&a| (d as i64 + a + 1).max(0)).sum();
                if expect != table.h(d) as i64 {
                    return fail(format!(
                        "module {}: splitting {:?} misses the table at degree {d}",
                        nm.name, split
                    ));
                }
            }
            lines.push(format!("{}: {:?}", nm.name, split));
        }
        pass(format!("kernel splittings on member {mx}: {}", lines.join("; ")))
    }

    /// The kernel class does not depend on which basis of the
    /// subgroup parameterizes the chart.
    fn bundle_basis_independence(&self) -> CheckResult {
        let mx = self.first_maximal_member();
        let sub = self.lattice.member(mx);
        if sub.rank() < 2 {
            return skip("maximal members have rank 1".into());
        }
        let b = sub.basis().to_vec();
        let mut swapped = b.clone();
        swapped.swap(0, 1);
        let mut sheared = b.clone();
        sheared[0] = self.group.mul(b[0], b[1]);
        let bases = [b, swapped, sheared];
        let mut checked = Vec::new();
        for nm in &self.corpus {
            if nm.name != "regular" && nm.name != "radical_square_quotient" {
                continue;
            }
            let mut classes: Vec<K0Vector> = Vec::new();
            for basis in &bases {
                let resub = sub.with_basis(self.group.as_ref(), self.p, basis)?;
                let chart = section_chart(&nm.module, &resub, 1)?;
                let mut table = graded_pieces(&chart, PieceKind::Kernel, None)?;
                let hd = hilbert_polynomial(&mut table)?;
                classes.push(k0_class(&hd)?);
            }
            if classes[1] != classes[0] || classes[2] != classes[0] {
                return fail(format!(
                    "module {}: classes differ across bases: {}, {}, {}",
                    nm.name, classes[0], classes[1], classes[2]
                ));
            }
            checked.push(format!("{}: {}", nm.name, classes[0]));
        }
        if checked.is_empty() {
            return skip("corpus has no module scoped for this comparison".into());
        }
        pass(format!("{} bases agree; {}", bases.len(), checked.join("; ")))
    }

    /// Kernel classes across charts restrict compatibly to chart
    /// overlaps, and kernel, image, and cokernel classes close the
    /// Euler identities.
    fn bundle_k0_family(&self) -> CheckResult {
        let mut lines = Vec::new();
        let mut skipped = Vec::new();
        for nm in &self.corpus {
            let fam = match k0_family(&self.lattice, &nm.module, 1, PieceKind::Kernel) {
                Ok(f) => f,
                Err(Error::NonConstantModule(_)) => {
                    skipped.push(nm.name.clone());
                    continue;
                }
                Err(e) => return Err(e),
            };
            let m = nm.module.dim() as i64;
            for fc in &fam.classes {
                let sub = self.lattice.member(fc.member);
                let n = sub.rank() as usize;
                let chart = section_chart(&nm.module, sub, 1)?;
                let mut im = graded_pieces(&chart, PieceKind::Image, None)?;
                let hi = hilbert_polynomial(&mut im)?;
                let icl = k0_class(&hi)?;
                let mut coker = graded_pieces(&chart, PieceKind::Cokernel, None)?;
                let hc = hilbert_polynomial(&mut coker)?;
                let ccl = k0_class(&hc)?;
                let free = K0Vector::line(n, 0).scale(m);
                if fc.class.add(&icl.twist(1)) != free {
                    return fail(format!(
                        "module {}, member {}: kernel {} + twisted image {} is not {}",
                        nm.name,
                        fc.member,
                        fc.class,
                        icl.twist(1),
                        free
                    ));
                }
                if icl.add(&ccl) != free {
                    return fail(format!(
                        "module {}, member {}: image {} + cokernel {} is not {}",
                        nm.name, fc.member, icl, ccl, free
                    ));
                }
            }
            lines.push(format!(
                "{}: {} charts, {} overlaps",
                nm.name,
                fam.classes.len(),
                fam.meets.len()
            ));
        }
        if lines.is_empty() {
            return skip(format!(
                "no corpus module has constant rank (skipped: {})",
                skipped.join(", ")
            ));
        }
        if !skipped.is_empty() {
            lines.push(format!("skipped non-constant: {}", skipped.join(", ")));
        }
        pass(lines.join("; "))
    }

    // ----- springer --------------------------------------------------

    /// None when the exp/log comparison applies to this group.
    fn springer_obstruction(&self) -> Option<String> {
        let Some(mats) = self.group.matrices() else {
            return Some("group was not built from matrices".into());
        };
        if self.group.matrix_prime() != Some(self.p) {
            return Some("matrix entries live over a different prime".into());
        }
        if self.p as usize <= mats[0].nrows() {
            return Some(format!(
                "matrix size {} is not below p = {}",
                mats[0].nrows(),
                self.p
            ));
        }
        None
    }

    fn springer_exp_log(&self) -> CheckResult {
        if let Some(why) = self.springer_obstruction() {
            return skip(why);
        }
        let ell = ell_lattice(&self.lattice)?;
        let mats = self.group.matrices().unwrap();
        let mut elements = 0usize;
        for &mx in self.lattice.maximals() {
            for g in self.lattice.member(mx).nonidentity_by_exponent() {
                let log = log_unipotent(&mats[g], self.p)?;
                if exp_nilpotent(&log, self.p)? != mats[g] {
                    return fail(format!("exp does not invert log on element {g}"));
                }
                elements += 1;
            }
        }
        pass(format!(
            "round trips hold for {elements} elements over {} members of the log image",
            ell.members().len()
        ))
    }

    fn springer_kills_j2(&self) -> CheckResult {
        if let Some(why) = self.springer_obstruction() {
            return skip(why);
        }
        let ell = ell_lattice(&self.lattice)?;
        let g = self.group.as_ref();
        let mut patterns = 0usize;
        for &mx in self.lattice.maximals() {
            let sub = self.lattice.member(mx);
            let basis = sub.basis();
            for i in 0..basis.len() {
                for j in i..basis.len() {
                    // (b_i - e)(b_j - e) = b_i b_j - b_i - b_j + e;
                    // coincident factors merge coefficients.
                    let mut coeffs = vec![Fq::zero(self.p, 1); sub.order() - 1];
                    let mut add = |elem: usize, v: i64| {
                        let pos = sub
                            .nonidentity_by_exponent()
                            .iter()
                            .position(|&x| x == elem)
                            .expect("product stays in the member");
                        coeffs[pos] = coeffs[pos] + Fq::from_int(v, self.p, 1);
                    };
                    add(g.mul(basis[i], basis[j]), 1);
                    add(basis[i], -1);
                    add(basis[j], -1);
                    if !ell.ell_point(mx, &coeffs)?.matrix().is_zero() {
                        return fail(format!(
                            "pattern ({i}, {j}) on member {mx} has nonzero image"
                        ));
                    }
                    patterns += 1;
                }
            }
        }
        pass(format!("{patterns} quadratic patterns vanish"))
    }

    fn springer_one_param(&self) -> CheckResult {
        if let Some(why) = self.springer_obstruction() {
            return skip(why);
        }
        let ell = ell_lattice(&self.lattice)?;
        let mut rng = self.rng(14);
        let p = self.p;
        let q2 = (p as u64).pow(2);
        let nonzero = |rng: &mut ChaCha8Rng| loop {
            let x = Fq::from_counter(rng.gen_range(0..q2), p, 2);
            if !x.is_zero() {
                return x;
            }
        };
        for &mx in self.lattice.maximals() {
            let sub = self.lattice.member(mx);
            let r = sub.rank() as usize;
            // Axis: every component is a Frobenius power of the
            // coordinate times the first basis log.
            let a = nonzero(&mut rng);
            let mut axis = vec![Fq::zero(p, 2); r];
            axis[0] = a;
            let tuple = ell.ell_r_point(mx, &axis, 3)?;
            let l0 = ell.members()[mx].basis_logs()[0].map((p, 2), |x| Fq::from_fp(x, 2));
            for (i, psi) in tuple.psis().iter().enumerate() {
                if *psi != l0.scale(a.frobenius(i as u32)) {
                    return fail(format!("axis component {i} on member {mx} is wrong"));
                }
            }
            // Semilinearity under scaling, and prefix truncation.
            for _ in 0..self.settings.samples.min(8) {
                let s = nonzero(&mut rng);
                let c: Vec<Fq> =
                    (0..r).map(|_| Fq::from_counter(rng.gen_range(0..q2), p, 2)).collect();
                let scaled: Vec<Fq> = c.iter().map(|&x| s * x).collect();
                let base = ell.ell_r_point(mx, &c, 2)?;
                let moved = ell.ell_r_point(mx, &scaled, 2)?;
                for i in 0..2 {
                    if moved.psis()[i] != base.psis()[i].scale(s.frobenius(i as u32)) {
                        return fail(format!(
                            "scaling by a unit misses weight p^{i} on member {mx}"
                        ));
                    }
                }
                let short = ell.ell_r_point(mx, &c, 1)?;
                if short.psis() != &base.psis()[..1] {
                    return fail(format!("tuple truncation fails on member {mx}"));
                }
            }
        }
        // Restriction along a subgroup inclusion matches coordinate
        // induction.
        let mut restrictions = 0usize;
        for (mi, sub) in self.lattice.members().iter().enumerate() {
            if sub.rank() != 1 {
                continue;
            }
            let Some(&mx) = self
                .lattice
                .containing_maximals(mi)
                .iter()
                .find(|&&m| m != mi)
            else {
                continue;
            };
            let big = self.lattice.member(mx);
            let coords = big
                .coords_of(sub.basis()[0])
                .expect("subgroup element has coordinates");
            let c = nonzero(&mut rng);
            let induced: Vec<Fq> =
                coords.iter().map(|&ai| Fq::from_int(ai as i64, p, 2) * c).collect();
            let small = ell.ell_r_point(mi, &[c], 2)?;
            let large = ell.ell_r_point(mx, &induced, 2)?;
            if small.psis() != large.psis() {
                return fail(format!(
                    "restriction from member {mx} to member {mi} moves the tuple"
                ));
            }
            restrictions += 1;
        }
        pass(format!(
            "axes, weights, truncation on {} maximal members; {restrictions} restrictions",
            self.lattice.maximals().len()
        ))
    }

    /// Group-side and Lie-side ranks agree at every flat prime-field
    /// point supported on an element together with a central element.
    fn springer_rank_compare(&self) -> CheckResult {
        if let Some(why) = self.springer_obstruction() {
            return skip(why);
        }
        let nat = natural_module(&self.group)?;
        let g = self.group.as_ref();
        let central =
            |w: usize| g.generators().iter().all(|&x| g.conj(w, x) == w);
        let p = self.p;
        let jmax = 2.min(p as u32 - 1).max(1);
        let mut checked = 0u64;
        for &mx in self.lattice.maximals() {
            let sub = self.lattice.member(mx);
            let elems = sub.nonidentity_by_exponent();
            for (p1, _) in elems.iter().enumerate() {
                for (p2, &w2) in elems.iter().enumerate() {
                    if p1 == p2 || !central(w2) {
                        continue;
                    }
                    for a1 in 0..p as i64 {
                        for a2 in 0..p as i64 {
                            if a1 == 0 && a2 == 0 {
                                continue;
                            }
                            let mut coeffs = vec![Fq::zero(p, 1); elems.len()];
                            coeffs[p1] = Fq::from_int(a1, p, 1);
                            coeffs[p2] = Fq::from_int(a2, p, 1);
                            let xi = PiPoint::new(&self.lattice, mx, &coeffs)?;
                            if !xi.is_flat() {
                                continue;
                            }
                            for j in 1..=jmax {
                                let rc = rank_compare(&nat, &self.lattice, &xi, j)?;
                                if !rc.equal {
                                    return fail(format!(
                                        "member {mx}, coefficients ({a1}, {a2}) at \
                                         positions ({p1}, {p2}), power {j}: group rank \
                                         {} vs lie rank {}",
                                        rc.rank_group, rc.rank_lie
                                    ));
                                }
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
        if checked == 0 {
            return skip("no maximal member carries a central direction".into());
        }
        pass(format!(
            "{checked} flat section points agree for powers 1..={jmax}"
        ))
    }

    fn first_maximal_member(&self) -> usize {
        self.lattice.maximals()[0]
    }
}

fn pass(detail: String) -> CheckResult {
    Ok((CheckStatus::Pass, detail))
}

fn fail(detail: String) -> CheckResult {
    Ok((CheckStatus::Fail, detail))
}

fn skip(detail: String) -> CheckResult {
    Ok((CheckStatus::Skip, detail))
}

/// Number of degree-d monomials in n variables.
fn monomial_count(n: usize, d: usize) -> usize {
    // C(d + n - 1, n - 1)
    let mut num = 1usize;
    let mut den = 1usize;
    for k in 1..n {
        num *= d + k;
        den *= k;
    }
    num / den
}
