//! Command-line driver: builds groups and modules from specs, runs the
//! lattice/operator/Jordan/bundle/comparison commands, and emits
//! versioned JSON reports.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 configuration
//! or input could not be parsed, 3 a resource cap left the answer
//! unknown (a report is still emitted).

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use repgeom::checks::{exit_code, CheckEnv, CheckReport, NamedModule, VerifySettings, CHECK_IDS};
use repgeom::error::Error;
use repgeom::field::Fp;
use repgeom::grouplat::{elementary_abelian_lattice, ElabLattice, GroupTable};
use repgeom::jordan::{
    decide_constant_jordan_type, decide_constant_jrank, sweep_local_types, ConstancyVerdict,
    DecisionLimits, JordanType, Method, VerdictStatus,
};
use repgeom::linalg::Mat;
use repgeom::modrep::{
    cyclic_coset_module, natural_module, radical_square_quotient_module, regular_module,
    trivial_module, ModuleRep,
};
use repgeom::sheafk::{
    graded_pieces, hilbert_polynomial, k0_class, k0_family, splitting_type_p1, HilbertData,
    K0Vector, PieceKind,
};
use repgeom::theta::{section_chart, ThetaFamily};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "repgeom",
    version,
    about = "Geometric invariants of finite-group representations: \
             subgroup lattices, nilpotent operator families, Jordan types, \
             vector-bundle data, and exp/log comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Group spec: builtin name (klein4, elementary_abelian(p,r),
    /// heisenberg(p), dihedral(n), alternating(4), symmetric(3)) or a
    /// JSON/TOML file with a table, permutation, or matrix presentation
    #[arg(long, global = true)]
    group: Option<String>,

    /// Module spec: builtin name (trivial, regular, natural,
    /// radical_square_quotient, cyclic_coset[(gen-index)]) or a
    /// JSON/TOML file {"dim": m, "generators": [[row-major entries]..]}
    #[arg(long, global = true)]
    module: Option<String>,

    /// Field characteristic; may be omitted when the group spec
    /// implies it
    #[arg(long, global = true)]
    prime: Option<u8>,

    /// Operator power j (1 <= j < p)
    #[arg(short = 'j', long = "power", global = true)]
    j: Option<u32>,

    /// Decision method for constancy commands
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,

    /// Groebner degree cap for exact decisions
    #[arg(long, global = true)]
    degree_bound: Option<u32>,

    /// Trial count for sampled decisions and witness searches
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Largest field extension degree used by sweeps and sampling
    #[arg(long, global = true)]
    ext_cap: Option<u8>,

    /// RNG seed; the same config and seed give byte-identical reports
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent checks
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// TOML file supplying defaults for any of the flags above
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Enumerate elementary abelian subgroups with inclusions,
    /// maximal members, and their pairwise meets
    Lattice,
    /// Dump the operator family symbolically and check nilpotence,
    /// equivariance, and restriction naturality
    Theta,
    /// Sweep local Jordan types over the flat points of each maximal
    /// chart
    Jordan,
    /// Decide whether j-ranks and the full Jordan type are constant
    /// on the flat locus
    Cjt,
    /// Graded kernel pieces per maximal chart: dimension table,
    /// Hilbert polynomial, splitting type, and K-theory class
    Bundle,
    /// Exp/log comparison suite for matrix groups of class below p
    Springer,
    /// Run the full named property suite
    Verify,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Lattice => "lattice",
            Cmd::Theta => "theta",
            Cmd::Jordan => "jordan",
            Cmd::Cjt => "cjt",
            Cmd::Bundle => "bundle",
            Cmd::Springer => "springer",
            Cmd::Verify => "verify",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Exact,
    Sampled,
}

/// Flag values accepted from a TOML config file; command-line flags
/// override anything set here.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    group: Option<String>,
    module: Option<String>,
    prime: Option<u8>,
    j: Option<u32>,
    method: Option<String>,
    #[serde(alias = "degree-bound")]
    degree_bound: Option<u32>,
    samples: Option<usize>,
    #[serde(alias = "ext-cap")]
    ext_cap: Option<u8>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

/// Fully resolved job parameters.
struct Job {
    command: Cmd,
    group_spec: String,
    module_spec: Option<String>,
    group: Arc<GroupTable>,
    lattice: Arc<ElabLattice>,
    p: u8,
    j: u32,
    method: MethodArg,
    limits: DecisionLimits,
    samples: usize,
    ext_cap: u8,
    seed: u64,
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let job = resolve(cli)?;
    let answer = execute(&job);
    let (payload, code) = match answer {
        Ok(pair) => pair,
        Err(e) => match classify(&e) {
            Some(code) => {
                let status = if code == 3 { "unknown" } else { "fail" };
                (json!({ "status": status, "reason": e.to_string() }), code)
            }
            None => return Err(e.into()),
        },
    };
    let report = json!({
        "schema": 1,
        "command": job.command.name(),
        "group": job.group_spec,
        "module": job.module_spec,
        "prime": job.p,
        "seed": job.seed,
        "report": payload,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&report)?);
    match &job.out {
        Some(path) => std::fs::write(path, &text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(code)
}

/// Exit code for a library error surfacing from a command, or None
/// when it should be treated as a configuration error.
fn classify(e: &Error) -> Option<u8> {
    match e {
        Error::ResourceLimit(_) | Error::NotStabilized { .. } => Some(3),
        Error::PNilpotenceFailed | Error::NotFlat => Some(1),
        _ => None,
    }
}

fn resolve(cli: Cli) -> anyhow::Result<Job> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let method = match cli.method {
        Some(m) => m,
        None => match file.method.as_deref() {
            None => MethodArg::Exact,
            Some("exact") => MethodArg::Exact,
            Some("sampled") => MethodArg::Sampled,
            Some(other) => bail!("config method must be exact or sampled, got {other}"),
        },
    };
    let group_spec = cli
        .group
        .or(file.group)
        .ok_or_else(|| anyhow!("--group is required (flag or config)"))?;
    let (group, implied) = build_group(&group_spec)?;
    let p = match (cli.prime.or(file.prime), implied) {
        (Some(flag), Some(imp)) if flag != imp => {
            bail!("--prime {flag} contradicts the group spec (implies {imp})")
        }
        (Some(flag), _) => flag,
        (None, Some(imp)) => imp,
        (None, None) => bail!("--prime is required for this group spec"),
    };
    if !is_prime(p) {
        bail!("--prime must be prime, got {p}");
    }
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut limits = DecisionLimits::default();
    if let Some(d) = cli.degree_bound.or(file.degree_bound) {
        limits.groebner_max_degree = d;
    }
    let samples = cli.samples.or(file.samples).unwrap_or(100);
    let ext_cap = cli.ext_cap.or(file.ext_cap).unwrap_or(2).max(1);
    limits.witness_trials = samples.max(limits.witness_trials);
    limits.witness_degree_cap = ext_cap.max(limits.witness_degree_cap);
    let lattice = Arc::new(elementary_abelian_lattice(&group, p)?);
    Ok(Job {
        command: cli.command,
        group_spec,
        module_spec: cli.module.or(file.module),
        group,
        lattice,
        p,
        j: cli.j.or(file.j).unwrap_or(1),
        method,
        limits,
        samples,
        ext_cap,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out: cli.out.or(file.out),
    })
}

fn is_prime(p: u8) -> bool {
    p >= 2 && (2..p).all(|d| p % d != 0)
}

// ----- group and module specs ----------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PermSpec {
    degree: usize,
    generators: Vec<Vec<u32>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatSpec {
    prime: u8,
    dim: usize,
    generators: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    table: Option<Vec<Vec<u32>>>,
    permutations: Option<PermSpec>,
    matrices: Option<MatSpec>,
}

/// Build a group from a builtin name or a spec file; the second
/// component is the prime the spec itself implies, if any.
fn build_group(spec: &str) -> anyhow::Result<(Arc<GroupTable>, Option<u8>)> {
    if let Some((name, args)) = parse_call(spec) {
        let g = match (name, args.as_slice()) {
            ("klein4", []) => return Ok((Arc::new(GroupTable::klein4()), Some(2))),
            ("elementary_abelian", [p, r]) => {
                let p = u8::try_from(*p).context("prime out of range")?;
                return Ok((
                    Arc::new(GroupTable::elementary_abelian(p, *r as usize)?),
                    Some(p),
                ));
            }
            ("heisenberg", [p]) => {
                let p = u8::try_from(*p).context("prime out of range")?;
                return Ok((Arc::new(GroupTable::heisenberg(p)?), Some(p)));
            }
            ("dihedral", [n]) => GroupTable::dihedral(*n as usize)?,
            ("alternating", [4]) => GroupTable::alternating4(),
            ("symmetric", [3]) => GroupTable::symmetric3(),
            _ => bail!("unknown builtin group {spec}"),
        };
        return Ok((Arc::new(g), None));
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("group spec {spec} is neither a builtin name nor an existing file");
    }
    let file: GroupFile = read_spec_file(path)?;
    let given = [
        file.table.is_some(),
        file.permutations.is_some(),
        file.matrices.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given != 1 {
        bail!("group file must give exactly one of table, permutations, matrices");
    }
    if let Some(table) = file.table {
        return Ok((Arc::new(GroupTable::from_table(&table)?), None));
    }
    if let Some(perm) = file.permutations {
        let g = GroupTable::from_permutations(perm.degree, &perm.generators)?;
        return Ok((Arc::new(g), None));
    }
    let mats = file.matrices.unwrap();
    let gens: Vec<Mat<Fp>> = mats
        .generators
        .iter()
        .map(|entries| square_matrix(mats.prime, mats.dim, entries))
        .collect::<anyhow::Result<_>>()?;
    let g = GroupTable::from_matrices(mats.prime, mats.dim, &gens)?;
    Ok((Arc::new(g), Some(mats.prime)))
}

/// Parse "name" or "name(a,b)" with small nonnegative integer
/// arguments; None when the string does not look like a builtin call.
fn parse_call(spec: &str) -> Option<(&str, Vec<u64>)> {
    let body = spec.trim();
    if body.chars().next().is_none_or(|c| !c.is_ascii_alphabetic()) {
        return None;
    }
    match body.split_once('(') {
        None => body
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
            .then_some((body, Vec::new())),
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')')?;
            let args: Option<Vec<u64>> = inner
                .split(',')
                .map(|a| a.trim().parse::<u64>().ok())
                .collect();
            Some((name, args?))
        }
    }
}

fn read_spec_file<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).with_context(|| format!("parsing {} as TOML", path.display()))
    } else {
        serde_json::from_str(&text)
            .with_context(|| format!("parsing {} as JSON", path.display()))
    }
}

fn square_matrix(p: u8, dim: usize, entries: &[i64]) -> anyhow::Result<Mat<Fp>> {
    if entries.len() != dim * dim {
        bail!("matrix needs {} row-major entries, got {}", dim * dim, entries.len());
    }
    Ok(Mat::from_fn(p, dim, dim, |i, j| Fp::new(entries[i * dim + j], p)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleFile {
    dim: usize,
    generators: Vec<Vec<i64>>,
}

fn build_module(job: &Job, spec: &str) -> anyhow::Result<ModuleRep> {
    let group = &job.group;
    let p = job.p;
    match spec {
        "trivial" => return Ok(trivial_module(group, p)?),
        "regular" => return Ok(regular_module(group, p)?),
        "natural" => return Ok(natural_module(group)?),
        "radical_square_quotient" => return Ok(radical_square_quotient_module(group, p)?),
        _ => {}
    }
    if let Some(("cyclic_coset", args)) = parse_call(spec) {
        let g = match args.as_slice() {
            [] => *group
                .generators()
                .iter()
                .find(|&&g| group.element_order(g) == p as u32)
                .ok_or_else(|| anyhow!("no generator of order {p} for cyclic_coset"))?,
            [k] => *group
                .generators()
                .get(*k as usize)
                .ok_or_else(|| anyhow!("generator index {k} out of range"))?,
            _ => bail!("cyclic_coset takes at most one generator index"),
        };
        return Ok(cyclic_coset_module(group, p, g)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("module spec {spec} is neither a builtin name nor an existing file");
    }
    let file: ModuleFile = read_spec_file(path)?;
    let gens: Vec<Mat<Fp>> = file
        .generators
        .iter()
        .map(|entries| square_matrix(p, file.dim, entries))
        .collect::<anyhow::Result<_>>()?;
    Ok(ModuleRep::load(group, &gens)?)
}

fn required_module(job: &Job) -> anyhow::Result<Arc<ModuleRep>> {
    let spec = job
        .module_spec
        .as_deref()
        .ok_or_else(|| anyhow!("--module is required for this command"))?;
    Ok(Arc::new(build_module(job, spec)?))
}

// ----- command execution ----------------------------------------------

enum CmdError {
    Lib(Error),
    Config(anyhow::Error),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Lib(e)
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Config(e)
    }
}

fn execute(job: &Job) -> Result<(Value, u8), Error> {
    match dispatch(job) {
        Ok(pair) => Ok(pair),
        Err(CmdError::Lib(e)) => Err(e),
        Err(CmdError::Config(e)) => Err(Error::InvalidInput(format!("{e:#}"))),
    }
}

fn dispatch(job: &Job) -> Result<(Value, u8), CmdError> {
    match job.command {
        Cmd::Lattice => cmd_lattice(job),
        Cmd::Theta => cmd_theta(job),
        Cmd::Jordan => cmd_jordan(job),
        Cmd::Cjt => cmd_cjt(job),
        Cmd::Bundle => cmd_bundle(job),
        Cmd::Springer => cmd_springer(job),
        Cmd::Verify => cmd_verify(job),
    }
}

fn verify_settings(job: &Job) -> VerifySettings {
    VerifySettings {
        seed: job.seed,
        samples: job.samples.min(1000),
        max_degree: job.ext_cap,
        limits: job.limits.clone(),
        ..VerifySettings::default()
    }
}

fn check_env(job: &Job) -> Result<CheckEnv, CmdError> {
    let settings = verify_settings(job);
    match &job.module_spec {
        Some(spec) => {
            let module = Arc::new(build_module(job, spec)?);
            let name = module_name(spec);
            let corpus = vec![NamedModule { name, module }];
            Ok(CheckEnv::with_corpus(job.group.clone(), job.p, settings, corpus)?)
        }
        None => Ok(CheckEnv::new(job.group.clone(), job.p, settings)?),
    }
}

/// Corpus name for a module spec: builtin names pass through, file
/// paths contribute their stem.
fn module_name(spec: &str) -> String {
    let path = Path::new(spec);
    if path.exists() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string())
    } else {
        match parse_call(spec) {
            Some((name, _)) => name.to_string(),
            None => spec.to_string(),
        }
    }
}

fn report_values(reports: &[CheckReport]) -> Vec<Value> {
    reports
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "status": r.status.to_string(),
                "detail": r.detail,
            })
        })
        .collect()
}

fn run_checks(env: &CheckEnv, ids: &[&'static str]) -> Vec<CheckReport> {
    use rayon::prelude::*;
    ids.par_iter().map(|id| env.run(id)).collect()
}

fn cmd_verify(job: &Job) -> Result<(Value, u8), CmdError> {
    let env = check_env(job)?;
    let reports = run_checks(&env, CHECK_IDS);
    let code = exit_code(&reports) as u8;
    let status = match code {
        0 => "pass",
        3 => "unknown",
        _ => "fail",
    };
    Ok((
        json!({ "status": status, "checks": report_values(&reports) }),
        code,
    ))
}

fn cmd_springer(job: &Job) -> Result<(Value, u8), CmdError> {
    let env = check_env(job)?;
    let ids: Vec<&'static str> = CHECK_IDS
        .iter()
        .copied()
        .filter(|id| id.starts_with("springer."))
        .collect();
    let reports = run_checks(&env, &ids);
    let code = exit_code(&reports) as u8;
    let status = match code {
        0 => "pass",
        3 => "unknown",
        _ => "fail",
    };
    Ok((
        json!({ "status": status, "checks": report_values(&reports) }),
        code,
    ))
}

fn cmd_lattice(job: &Job) -> Result<(Value, u8), CmdError> {
    let lat = &job.lattice;
    let members: Vec<Value> = lat
        .members()
        .iter()
        .enumerate()
        .map(|(i, sub)| {
            json!({
                "index": i,
                "rank": sub.rank(),
                "order": sub.order(),
                "basis": sub.basis(),
                "elements": sub.elements(),
            })
        })
        .collect();
    let meets: Vec<Value> = lat
        .maximal_intersections()
        .iter()
        .map(|&(a, b, c)| json!({ "a": a, "b": b, "meet": c }))
        .collect();
    let mut by_rank = std::collections::BTreeMap::<usize, usize>::new();
    for sub in lat.members() {
        *by_rank.entry(sub.rank()).or_insert(0) += 1;
    }
    let counts: Vec<Value> = by_rank
        .iter()
        .map(|(r, n)| json!({ "rank": r, "members": n }))
        .collect();
    Ok((
        json!({
            "group_order": job.group.order(),
            "members": members,
            "inclusions": lat.edges(),
            "maximals": lat.maximals(),
            "maximal_meets": meets,
            "counts_by_rank": counts,
        }),
        0,
    ))
}

fn cmd_theta(job: &Job) -> Result<(Value, u8), CmdError> {
    let module = required_module(job)?;
    let fam = ThetaFamily::new(&job.lattice, &module, job.j)?;
    let mut charts = Vec::new();
    for chart in fam.charts() {
        let member = chart.member();
        let vars: Vec<String> = chart
            .elements()
            .iter()
            .map(|&g| format!("x_{g}@E{member}"))
            .collect();
        let op = chart.operator();
        let rows: Vec<Value> = (0..op.nrows())
            .map(|i| {
                let row: Vec<Value> = (0..op.ncols())
                    .map(|k| {
                        let terms: Vec<Value> = op
                            .entry(i, k)
                            .terms()
                            .iter()
                            .map(|(e, c)| json!({ "exponents": e.as_slice(), "coeff": c }))
                            .collect();
                        Value::Array(terms)
                    })
                    .collect();
                Value::Array(row)
            })
            .collect();
        charts.push(json!({
            "member": member,
            "variables": vars,
            "operator": rows,
        }));
    }
    let p_nilpotent = fam.p_nilpotent();
    let mut equivariance = Vec::new();
    let mut equivariant_all = true;
    for &x in job.group.generators() {
        let ok = fam.check_equivariance(x)?;
        equivariant_all &= ok;
        equivariance.push(json!({ "generator": x, "holds": ok }));
    }
    let mut natural_all = true;
    let mut naturality = Vec::new();
    for member in 0..job.lattice.members().len() {
        let (ring, restricted) = fam.restrict_to(member)?;
        let mats: Vec<Mat<Fp>> = job
            .lattice
            .member(member)
            .nonidentity_by_exponent()
            .iter()
            .map(|&g| module.action_minus_identity(g))
            .collect();
        let direct = repgeom::polymat::PolyMatrix::linear_from_mats(&ring, &mats);
        let ok = restricted.sub(&direct).is_zero();
        natural_all &= ok;
        naturality.push(json!({ "member": member, "holds": ok }));
    }
    let ok = p_nilpotent && equivariant_all && natural_all;
    Ok((
        json!({
            "power": job.j,
            "module_dim": module.dim(),
            "charts": charts,
            "p_nilpotent": p_nilpotent,
            "equivariance": equivariance,
            "naturality": naturality,
            "status": if ok { "pass" } else { "fail" },
        }),
        if ok { 0 } else { 1 },
    ))
}

fn jordan_type_value(t: &JordanType) -> Value {
    json!({ "blocks": t.blocks(), "rank_profile": t.rank_profile() })
}

fn cmd_jordan(job: &Job) -> Result<(Value, u8), CmdError> {
    let module = required_module(job)?;
    let mut charts = Vec::new();
    let mut any_unknown = false;
    for &mx in job.lattice.maximals() {
        for d in 1..=job.ext_cap {
            match sweep_local_types(&module, &job.lattice, mx, d, 6_000_000) {
                Ok(sweep) => {
                    // The most nondegenerate observed type: maximal
                    // rank profile in lexicographic order.
                    let generic = sweep
                        .counts
                        .keys()
                        .max_by(|a, b| a.rank_profile().cmp(b.rank_profile()));
                    let types: Vec<Value> = sweep
                        .counts
                        .iter()
                        .map(|(t, n)| {
                            json!({
                                "blocks": t.blocks(),
                                "rank_profile": t.rank_profile(),
                                "points": n,
                            })
                        })
                        .collect();
                    charts.push(json!({
                        "member": mx,
                        "field_degree": d,
                        "points": sweep.points,
                        "flat_points": sweep.flat_points,
                        "types": types,
                        "generic": generic.map(jordan_type_value),
                        "constant_on_chart": sweep.counts.len() <= 1,
                    }));
                }
                Err(Error::ResourceLimit(msg)) => {
                    any_unknown = true;
                    charts.push(json!({
                        "member": mx,
                        "field_degree": d,
                        "status": "unknown",
                        "reason": msg,
                    }));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok((
        json!({ "module_dim": module.dim(), "charts": charts }),
        if any_unknown { 3 } else { 0 },
    ))
}

fn method_for(job: &Job) -> Method {
    match job.method {
        MethodArg::Exact => Method::Exact,
        MethodArg::Sampled => Method::Sampled {
            trials: job.samples,
            max_degree: job.ext_cap,
        },
    }
}

fn method_value(m: Method) -> Value {
    match m {
        Method::Exact => json!({ "kind": "exact" }),
        Method::Sampled { trials, max_degree } => {
            json!({ "kind": "sampled", "trials": trials, "max_degree": max_degree })
        }
    }
}

fn verdict_value(v: &ConstancyVerdict) -> Value {
    let status = match &v.status {
        VerdictStatus::Constant { rank, jordan } => json!({
            "verdict": "constant",
            "rank": rank,
            "jordan": jordan.as_ref().map(jordan_type_value),
        }),
        VerdictStatus::NonConstant { witness } => json!({
            "verdict": "non_constant",
            "witness": {
                "member": witness.member,
                "coefficients": witness.coeffs.iter().map(|c| c.to_string())
                    .collect::<Vec<_>>(),
                "field_degree": witness.coeffs.first().map(|c| c.degree()).unwrap_or(1),
                "rank": witness.rank,
                "generic_rank": witness.expected_rank,
                "jordan": jordan_type_value(&witness.jordan),
            },
        }),
        VerdictStatus::Unknown { reason } => json!({
            "verdict": "unknown",
            "reason": reason,
        }),
    };
    json!({ "status": status, "method": method_value(v.method) })
}

fn cmd_cjt(job: &Job) -> Result<(Value, u8), CmdError> {
    use rand_chacha::rand_core::SeedableRng;
    let module = required_module(job)?;
    let method = method_for(job);
    let mut any_unknown = false;
    let mut jranks = Vec::new();
    for j in 1..job.p as u32 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(job.seed ^ j as u64);
        let v = decide_constant_jrank(&module, &job.lattice, j, method, &job.limits, &mut rng)?;
        any_unknown |= matches!(v.status, VerdictStatus::Unknown { .. });
        jranks.push(json!({ "j": j, "result": verdict_value(&v) }));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(job.seed);
    let full = decide_constant_jordan_type(&module, &job.lattice, method, &job.limits, &mut rng)?;
    any_unknown |= matches!(full.status, VerdictStatus::Unknown { .. });
    Ok((
        json!({
            "module_dim": module.dim(),
            "jordan_type": verdict_value(&full),
            "jranks": jranks,
        }),
        if any_unknown { 3 } else { 0 },
    ))
}

fn hilbert_value(hd: &HilbertData) -> Value {
    json!({
        "coefficients": hd.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "rank": hd.rank,
        "degree": hd.degree,
        "stabilization": hd.stabilization,
    })
}

fn k0_value(v: &K0Vector) -> Value {
    json!({ "coefficients": v.coeffs(), "display": v.to_string() })
}

fn cmd_bundle(job: &Job) -> Result<(Value, u8), CmdError> {
    let module = required_module(job)?;
    let mut charts = Vec::new();
    for &mx in job.lattice.maximals() {
        let sub = job.lattice.member(mx);
        let chart = section_chart(&module, sub, job.j)?;
        let mut table = graded_pieces(&chart, PieceKind::Kernel, None)?;
        let hd = hilbert_polynomial(&mut table)?;
        let class = k0_class(&hd)?;
        let splitting = if sub.rank() == 2 {
            Some(splitting_type_p1(&mut table, &hd)?)
        } else {
            None
        };
        let h: Vec<usize> = (0..=table.max_degree()).map(|d| table.h(d)).collect();
        charts.push(json!({
            "member": mx,
            "chart_rank": sub.rank(),
            "piece": "kernel",
            "h_table": h,
            "hilbert": hilbert_value(&hd),
            "splitting": splitting,
            "k0": k0_value(&class),
        }));
    }
    let family = match k0_family(&job.lattice, &module, job.j, PieceKind::Kernel) {
        Ok(fam) => {
            let meets: Vec<Value> = fam
                .meets
                .iter()
                .map(|m| {
                    json!({
                        "a": m.a,
                        "b": m.b,
                        "meet": m.member,
                        "class": k0_value(&m.class),
                    })
                })
                .collect();
            json!({ "constant": true, "compatible": true, "meets": meets })
        }
        Err(Error::NonConstantModule(reason)) => {
            json!({ "constant": false, "compatible": Value::Null, "reason": reason })
        }
        Err(e) => return Err(e.into()),
    };
    Ok((
        json!({
            "power": job.j,
            "module_dim": module.dim(),
            "charts": charts,
            "family": family,
        }),
        0,
    ))
}
