//! Command-line front end: parses tree/vector/sequence files, dispatches
//! engine and certificate operations, and emits deterministic reports.
//!
//! Exit codes: 0 success, 1 input error (malformed file, out-of-range node,
//! infeasible request), 2 assertion failure (solver mismatch under
//! `--method both`, failing certificates, axiom violations).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bairesum::cert::{
    check_block, check_decay, forge_with_base_size, singular_witness, unconditionality_sample,
    upper_l2_sample, BlockSequence, CertError, DecayCertificate,
};
use bairesum::fileio::{
    norm_result_json, ratio_json, read_sequence, read_tree, read_vector, to_canonical_string,
    write_tree, write_vector, InputError,
};
use bairesum::forest_enum::all_forests;
use bairesum::norm::{
    candidate_segments, family_objective, incomparable_families, norm_pair,
    t0_norm, t0_norm_bruteforce, t2_norm, t2_norm_bruteforce, EngineError, Evaluator,
};
use bairesum::numeric::{decimal_sqrt_string, rat, ValueSq};
use bairesum::oracle::{oracle_for_selector, validate_oracle, BranchNormOracle, OracleError};
use bairesum::project::{project_branch, project_interval, project_segment};
use bairesum::segment::{convex_hull_segment, Branch, RangeInterval};
use bairesum::tree::{bfs_enumeration, FiniteTree, NodeId, TreeError};
use bairesum::vector::TreeVector;

#[derive(Parser)]
#[command(
    name = "bairesum",
    version,
    about = "Exact family and segment norms of tree-indexed vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Branch-norm model: c0 | l1 | l2 | lp:<num>/<den>
    #[arg(long, global = true, default_value = "l2")]
    basis: String,
    /// Solver for norm commands
    #[arg(long, global = true, value_enum, default_value_t = Method::Dp)]
    method: Method,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,
    /// Family-enumeration budget for brute-force evaluation
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: u64,
    /// Comparison tolerance for inexact models (decimal, e.g. 1e-12)
    #[arg(long, global = true, default_value = "1e-12")]
    tolerance: String,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Dp,
    Brute,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Family norm of a vector (supremum over incomparable segment families)
    Norm(NormArgs),
    /// Segment norm of a vector (supremum over single segments)
    #[command(name = "t0norm")]
    T0norm(NormArgs),
    /// Project a vector onto a segment, a branch, or an enumeration interval
    Project(ProjectArgs),
    /// Construct a normalized vector whose segment norm is at most epsilon
    Witness(WitnessArgs),
    /// Forge a decaying block sequence of disjoint flat antichain vectors
    Forge(ForgeArgs),
    /// Verify block positioning and the decay condition for a sequence
    Certify(SequenceArgs),
    /// Sample subset-sum ratios of a block sequence against the 3x bound
    #[command(name = "uncond-report")]
    UncondReport(SampleArgs),
    /// Sample combination/l2 ratios and the l1-incompatibility probe
    #[command(name = "upper-l2-report")]
    UpperL2Report(SampleArgs),
    /// Run the built-in solver cross-check suite on small forests
    #[command(name = "oracle-check")]
    OracleCheck,
    /// Probe a branch-norm model against its axioms
    #[command(name = "validate-oracle")]
    ValidateOracle(ValidateArgs),
    /// Time the solver on large random instances; emits CSV
    Bench(BenchArgs),
    /// Write a standard tree file
    #[command(name = "gen-tree")]
    GenTree(GenTreeArgs),
}

#[derive(Args)]
struct NormArgs {
    /// Tree file
    #[arg(long)]
    tree: PathBuf,
    /// Vector file
    #[arg(long)]
    vector: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("target").required(true).multiple(false))]
struct ProjectArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    vector: PathBuf,
    /// Comma-separated node ids of a chain (interior nodes may be omitted)
    #[arg(long, group = "target")]
    segment: Option<String>,
    /// Deepest node of the branch to project onto
    #[arg(long, group = "target")]
    branch: Option<NodeId>,
    /// Closed position interval lo:hi under the breadth-first enumeration
    #[arg(long, group = "target")]
    interval: Option<String>,
    /// Write the projected vector here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Target segment-norm bound, a rational p/q with 0 < p/q <= 1
    #[arg(long)]
    epsilon: String,
    /// Write the witness vector here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForgeArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Number of vectors in the sequence
    #[arg(long)]
    length: usize,
    /// Size of the first antichain block (a positive perfect square)
    #[arg(long, default_value_t = 4)]
    k0: u64,
    /// Directory for the vector files plus sequence.json
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SequenceArgs {
    #[arg(long)]
    tree: PathBuf,
    /// JSON array of vector file paths, relative to the sequence file
    #[arg(long)]
    sequence: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    sequence: PathBuf,
    /// Force JSON output (the default; kept for script compatibility)
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Largest branch depth probed
    #[arg(long, default_value_t = 6)]
    depth: u32,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    nodes: usize,
    #[arg(long, default_value_t = 10_000)]
    support: usize,
    #[arg(long, default_value_t = 3)]
    reps: u32,
}

#[derive(Args)]
struct GenTreeArgs {
    /// full-binary:<depth> or random:<nodes>:<seed>
    #[arg(long)]
    kind: String,
    #[arg(long)]
    out: PathBuf,
}

// ---------------------------------------------------------------------------
// Error mapping
// ---------------------------------------------------------------------------

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    fn assertion(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> CliError {
        CliError::input(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> CliError {
        CliError::input(e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> CliError {
        CliError::input(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> CliError {
        match e {
            EngineError::BudgetExceeded { .. } | EngineError::AccumulatorMissing { .. } => {
                CliError::input(e.to_string())
            }
            _ => CliError::assertion(e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> CliError {
        match e {
            CertError::NotNormalized { .. }
            | CertError::NotBlock { .. }
            | CertError::VerificationFailed { .. } => CliError::assertion(e.to_string()),
            CertError::Engine(inner) => CliError::from(inner),
            _ => CliError::input(e.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Small parsers
// ---------------------------------------------------------------------------

fn parse_ratio(flag: &str, s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let (n, d) = match s.find('/') {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, "1"),
    };
    let bad = || CliError::input(format!("flag --{flag}: not a rational p/q: {s:?}"));
    let num: BigInt = n.trim().parse().map_err(|_| bad())?;
    let den: BigInt = d.trim().parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(CliError::input(format!("flag --{flag}: zero denominator")));
    }
    Ok(BigRational::new(num, den))
}

fn parse_decimal(flag: &str, s: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::input(format!("flag --{flag}: not a decimal number: {s:?}"));
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (mant, neg) = match mant.strip_prefix('-') {
        Some(rest) => (rest, true),
        None => (mant.strip_prefix('+').unwrap_or(mant), false),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from(num);
    if scale >= 0 {
        r *= BigRational::from(ten.pow(scale as u32));
    } else {
        r /= BigRational::from(ten.pow(scale.unsigned_abs()));
    }
    Ok(if neg { -r } else { r })
}

fn parse_interval(s: &str) -> Result<RangeInterval, CliError> {
    let bad = || CliError::input(format!("flag --interval: expected lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(CliError::input(format!(
            "flag --interval: endpoints out of order: {lo} > {hi}"
        )));
    }
    Ok(RangeInterval::new(lo, hi))
}

fn parse_node_list(s: &str) -> Result<Vec<NodeId>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim().parse::<NodeId>().map_err(|_| {
                CliError::input(format!("flag --segment: not a node id: {part:?}"))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn emit(output: Output, report: &Value) {
    match output {
        Output::Json => print!("{}", to_canonical_string(report)),
        Output::Text => {
            if let Value::Object(map) = report {
                for (k, v) in map {
                    println!("{k}: {}", scalar_text(v));
                }
            } else {
                println!("{}", scalar_text(report));
            }
        }
    }
}

fn value_sq_fields(prefix: &str, value: &ValueSq, out: &mut serde_json::Map<String, Value>) {
    out.insert(
        format!("{prefix}_sq"),
        if value.exact {
            ratio_json(&value.sq)
        } else {
            Value::Null
        },
    );
    out.insert(
        format!("{prefix}_approx"),
        json!(decimal_sqrt_string(&value.sq, 12)),
    );
}

fn ratios_json(rs: &[BigRational]) -> Value {
    Value::Array(rs.iter().map(ratio_json).collect())
}

fn ranges_json(seq: &BlockSequence) -> Value {
    Value::Array(
        seq.ranges()
            .iter()
            .map(|r| json!([r.lo, r.hi]))
            .collect(),
    )
}

fn decay_json(cert: &DecayCertificate) -> Value {
    let records: Vec<Value> = cert
        .records
        .iter()
        .map(|r| {
            let mut obj = serde_json::Map::new();
            obj.insert("n".to_owned(), json!(r.n));
            value_sq_fields("t0", &r.t0, &mut obj);
            obj.insert("bound_sq".to_owned(), ratio_json(&r.bound_sq));
            obj.insert("bound_exact".to_owned(), json!(r.bound_exact));
            obj.insert("mode".to_owned(), json!(r.mode.as_str()));
            obj.insert("holds".to_owned(), json!(r.holds));
            Value::Object(obj)
        })
        .collect();
    json!({
        "oracle": cert.oracle,
        "holds": cert.holds,
        "records": records,
    })
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

struct Ctx {
    oracle: Box<dyn BranchNormOracle>,
    method: Method,
    seed: u64,
    trials: u64,
    budget: u64,
    tolerance: BigRational,
    output: Output,
}

fn load(tree_path: &Path, vector_path: &Path) -> Result<(FiniteTree, TreeVector), CliError> {
    let tree = read_tree(tree_path)?;
    let vector = read_vector(vector_path, &tree)?;
    Ok((tree, vector))
}

fn values_agree(a: &ValueSq, b: &ValueSq, tol: &BigRational) -> bool {
    if a.exact && b.exact {
        a.sq == b.sq
    } else {
        (&a.sq - &b.sq).abs() <= *tol
    }
}

fn run_norm(ctx: &Ctx, args: &NormArgs, family_norm: bool) -> Result<(), CliError> {
    let (tree, vector) = load(&args.tree, &args.vector)?;
    let oracle = ctx.oracle.as_ref();

    let (value, witness): (ValueSq, Vec<Vec<NodeId>>) = if family_norm {
        let dp = || -> Result<_, EngineError> { t2_norm(&tree, &vector, oracle) };
        let brute =
            || -> Result<_, EngineError> { t2_norm_bruteforce(&tree, &vector, oracle, ctx.budget) };
        match ctx.method {
            Method::Dp => {
                let r = dp()?;
                (r.value, r.family.node_lists())
            }
            Method::Brute => {
                let r = brute()?;
                (r.value, r.family.node_lists())
            }
            Method::Both => {
                let d = dp()?;
                let b = brute()?;
                if !values_agree(&d.value, &b.value, &ctx.tolerance) {
                    return Err(CliError::assertion(format!(
                        "solver mismatch: dp value_sq {} vs brute value_sq {}",
                        d.value.sq, b.value.sq
                    )));
                }
                (d.value, d.family.node_lists())
            }
        }
    } else {
        let dp = || -> Result<_, EngineError> { t0_norm(&tree, &vector, oracle) };
        let brute = || -> Result<_, EngineError> { t0_norm_bruteforce(&tree, &vector, oracle) };
        let to_witness = |seg: Option<bairesum::segment::Segment>| -> Vec<Vec<NodeId>> {
            seg.map(|s| vec![s.nodes().to_vec()]).unwrap_or_default()
        };
        match ctx.method {
            Method::Dp => {
                let r = dp()?;
                (r.value, to_witness(r.segment))
            }
            Method::Brute => {
                let r = brute()?;
                (r.value, to_witness(r.segment))
            }
            Method::Both => {
                let d = dp()?;
                let b = brute()?;
                if !values_agree(&d.value, &b.value, &ctx.tolerance) {
                    return Err(CliError::assertion(format!(
                        "solver mismatch: dp value_sq {} vs brute value_sq {}",
                        d.value.sq, b.value.sq
                    )));
                }
                (d.value, to_witness(d.segment))
            }
        }
    };

    emit(ctx.output, &norm_result_json(&value, Some(&witness)));
    Ok(())
}

fn run_project(ctx: &Ctx, args: &ProjectArgs) -> Result<(), CliError> {
    let (tree, vector) = load(&args.tree, &args.vector)?;
    let projected = if let Some(spec) = &args.segment {
        let ids = parse_node_list(spec)?;
        let seg = convex_hull_segment(&tree, &ids)?;
        project_segment(&vector, &seg)
    } else if let Some(v) = args.branch {
        let branch = Branch::to_node(&tree, v)?;
        project_branch(&vector, &branch)
    } else if let Some(spec) = &args.interval {
        let interval = parse_interval(spec)?;
        let enumeration = bfs_enumeration(&tree);
        project_interval(&vector, &enumeration, interval)
    } else {
        unreachable!("clap enforces the target group");
    };
    match &args.out {
        Some(path) => write_vector(path, &projected)?,
        None => emit(ctx.output, &bairesum::fileio::vector_to_json(&projected)),
    }
    Ok(())
}

fn run_witness(ctx: &Ctx, args: &WitnessArgs) -> Result<(), CliError> {
    let tree = read_tree(&args.tree)?;
    let epsilon = parse_ratio("epsilon", &args.epsilon)?;
    let oracle = ctx.oracle.as_ref();
    let witness = singular_witness(&tree, oracle, &epsilon, ctx.budget)?;
    let (t2, t0) = norm_pair(&tree, &witness, oracle)?;

    let mut obj = serde_json::Map::new();
    obj.insert("epsilon".to_owned(), ratio_json(&epsilon));
    obj.insert("oracle".to_owned(), json!(oracle.name()));
    obj.insert("support".to_owned(), json!(witness.support_len()));
    value_sq_fields("t2", &t2, &mut obj);
    value_sq_fields("t0", &t0, &mut obj);
    if let Some(path) = &args.out {
        write_vector(path, &witness)?;
        obj.insert("vector".to_owned(), json!(path.display().to_string()));
    }
    emit(ctx.output, &Value::Object(obj));
    Ok(())
}

fn run_forge(ctx: &Ctx, args: &ForgeArgs) -> Result<(), CliError> {
    let tree = read_tree(&args.tree)?;
    let oracle = ctx.oracle.as_ref();
    let seq = forge_with_base_size(&tree, args.length, ctx.seed, args.k0)?;
    let decay = check_decay(&tree, oracle, &seq)?;

    let mut obj = serde_json::Map::new();
    obj.insert("length".to_owned(), json!(seq.len()));
    obj.insert("k0".to_owned(), json!(args.k0));
    obj.insert("seed".to_owned(), json!(ctx.seed));
    obj.insert(
        "sizes".to_owned(),
        json!(seq
            .vectors()
            .iter()
            .map(TreeVector::support_len)
            .collect::<Vec<_>>()),
    );
    obj.insert("ranges".to_owned(), ranges_json(&seq));
    obj.insert("decay".to_owned(), decay_json(&decay));

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::input(format!("{}: cannot create directory: {e}", dir.display()))
        })?;
        let mut names = Vec::with_capacity(seq.len());
        for (n, w) in seq.vectors().iter().enumerate() {
            let name = format!("w{n}.json");
            write_vector(&dir.join(&name), w)?;
            names.push(name);
        }
        bairesum::fileio::write_json(&dir.join("sequence.json"), &json!(names))?;
        obj.insert("files".to_owned(), json!(names));
    }
    emit(ctx.output, &Value::Object(obj));
    if !decay.holds {
        return Err(CliError::assertion("forged sequence fails its decay check"));
    }
    Ok(())
}

fn load_sequence(
    ctx: &Ctx,
    tree_path: &Path,
    seq_path: &Path,
) -> Result<(FiniteTree, BlockSequence), CliError> {
    let tree = read_tree(tree_path)?;
    let vectors = read_sequence(seq_path, &tree)?;
    let enumeration = bfs_enumeration(&tree);
    let seq = check_block(&tree, ctx.oracle.as_ref(), vectors, enumeration)?;
    Ok((tree, seq))
}

fn run_certify(ctx: &Ctx, args: &SequenceArgs) -> Result<(), CliError> {
    let (tree, seq) = load_sequence(ctx, &args.tree, &args.sequence)?;
    let decay = check_decay(&tree, ctx.oracle.as_ref(), &seq)?;
    let report = json!({
        "length": seq.len(),
        "ranges": ranges_json(&seq),
        "decay": decay_json(&decay),
        "holds": decay.holds,
    });
    emit(ctx.output, &report);
    if !decay.holds {
        return Err(CliError::assertion("decay certificate failed"));
    }
    Ok(())
}

fn run_uncond(ctx: &Ctx, args: &SampleArgs) -> Result<(), CliError> {
    let (tree, seq) = load_sequence(ctx, &args.tree, &args.sequence)?;
    let output = if args.json { Output::Json } else { ctx.output };
    let report = unconditionality_sample(&tree, ctx.oracle.as_ref(), &seq, ctx.trials, ctx.seed)?;

    let mut obj = serde_json::Map::new();
    obj.insert("oracle".to_owned(), json!(report.oracle));
    obj.insert("trials".to_owned(), json!(report.trials));
    obj.insert("seed".to_owned(), json!(report.seed));
    value_sq_fields("max_ratio", &report.max_ratio, &mut obj);
    obj.insert(
        "attaining_coeffs".to_owned(),
        ratios_json(&report.attaining_coeffs),
    );
    obj.insert(
        "attaining_subset".to_owned(),
        json!(report.attaining_subset),
    );
    obj.insert("threshold_sq".to_owned(), ratio_json(&report.threshold_sq));
    obj.insert("violations".to_owned(), json!(report.violations));
    obj.insert("exact".to_owned(), json!(report.exact));
    obj.insert("note".to_owned(), json!(report.note));
    emit(output, &Value::Object(obj));

    if report.violations > 0 {
        return Err(CliError::assertion(format!(
            "{} of {} sampled subsets exceeded the squared threshold {}",
            report.violations, report.trials, report.threshold_sq
        )));
    }
    Ok(())
}

fn run_upper_l2(ctx: &Ctx, args: &SampleArgs) -> Result<(), CliError> {
    let (tree, seq) = load_sequence(ctx, &args.tree, &args.sequence)?;
    let output = if args.json { Output::Json } else { ctx.output };
    let report = upper_l2_sample(&tree, ctx.oracle.as_ref(), &seq, ctx.trials, ctx.seed)?;

    let mut obj = serde_json::Map::new();
    obj.insert("oracle".to_owned(), json!(report.oracle));
    obj.insert("trials".to_owned(), json!(report.trials));
    obj.insert("seed".to_owned(), json!(report.seed));
    value_sq_fields("max_ratio", &report.max_ratio, &mut obj);
    obj.insert(
        "attaining_coeffs".to_owned(),
        ratios_json(&report.attaining_coeffs),
    );
    value_sq_fields("l1_probe", &report.l1_probe, &mut obj);
    obj.insert(
        "l1_probe_below_one".to_owned(),
        json!(report.l1_probe_below_one),
    );
    obj.insert("exact".to_owned(), json!(report.exact));
    obj.insert("note".to_owned(), json!(report.note));
    emit(output, &Value::Object(obj));
    Ok(())
}

/// Deterministic vector battery for the self-check suite.
fn battery(tree: &FiniteTree, rng: &mut ChaCha8Rng) -> Vec<TreeVector> {
    use rand::Rng;
    let n = tree.len();
    let mut out = Vec::new();
    for _ in 0..6 {
        let pairs: Vec<(NodeId, BigRational)> = (0..n)
            .filter_map(|v| {
                let num = rng.random_range(-5i64..=5);
                let den = rng.random_range(1i64..=3);
                (num != 0).then(|| (v as NodeId, rat(num, den)))
            })
            .collect();
        out.push(TreeVector::new(pairs).expect("distinct nodes"));
    }
    out
}

fn run_oracle_check(ctx: &Ctx) -> Result<(), CliError> {
    let oracles: Vec<Box<dyn BranchNormOracle>> = vec![
        oracle_for_selector("c0")?,
        oracle_for_selector("l1")?,
        oracle_for_selector("l2")?,
        oracle_for_selector("lp:3/2")?,
    ];
    let forests = all_forests(5);
    let mut norm_checks = 0u64;
    let mut failures: Vec<String> = Vec::new();

    for (ti, tree) in forests.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ (ti as u64).wrapping_mul(0x9e37));
        for z in battery(tree, &mut rng) {
            for oracle in &oracles {
                let dp = t2_norm(tree, &z, oracle.as_ref())?;
                let brute = t2_norm_bruteforce(tree, &z, oracle.as_ref(), ctx.budget)?;
                norm_checks += 1;
                if !values_agree(&dp.value, &brute.value, &ctx.tolerance) {
                    failures.push(format!(
                        "forest {ti}, model {}: dp {} vs brute {}",
                        oracle.name(),
                        dp.value.sq,
                        brute.value.sq
                    ));
                }
                let (t2, t0) = norm_pair(tree, &z, oracle.as_ref())?;
                norm_checks += 1;
                if t0.sq > t2.sq {
                    failures.push(format!(
                        "forest {ti}, model {}: segment norm exceeds family norm",
                        oracle.name()
                    ));
                }
                let replay = family_objective(tree, &z, oracle.as_ref(), &dp.family);
                norm_checks += 1;
                if replay.sq != dp.value.sq {
                    failures.push(format!(
                        "forest {ti}, model {}: witness does not reproduce the value",
                        oracle.name()
                    ));
                }
            }
        }
    }

    let mut validations = Vec::new();
    for oracle in &oracles {
        let report = validate_oracle(oracle.as_ref(), 5, 40, ctx.seed);
        if !report.passed() {
            for v in &report.violations {
                failures.push(format!("model {}: {}", report.oracle, v.detail));
            }
        }
        validations.push(report.oracle.clone());
    }

    let report = json!({
        "forests": forests.len(),
        "oracles": validations,
        "norm_checks": norm_checks,
        "failures": failures,
    });
    emit(ctx.output, &report);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::assertion(format!(
            "{} self-check failures",
            failures.len()
        )))
    }
}

fn run_validate_oracle(ctx: &Ctx, args: &ValidateArgs) -> Result<(), CliError> {
    let samples = u32::try_from(ctx.trials.min(1_000_000)).unwrap_or(u32::MAX);
    let report = validate_oracle(ctx.oracle.as_ref(), args.depth, samples, ctx.seed);
    let value = serde_json::to_value(&report).expect("report serializes");
    emit(ctx.output, &value);
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::assertion(format!(
            "model {} violated {} axiom checks",
            report.oracle,
            report.violations.len()
        )))
    }
}

/// Nodes the subtree solver touches: the ancestor closure of the support.
fn closure_size(tree: &FiniteTree, support: impl Iterator<Item = NodeId>) -> usize {
    let mut seen = vec![false; tree.len()];
    let mut count = 0usize;
    for v in support {
        let mut walk = Some(v);
        while let Some(u) = walk {
            if seen[u as usize] {
                break;
            }
            seen[u as usize] = true;
            count += 1;
            walk = tree.parent(u);
        }
    }
    count
}

fn run_bench(ctx: &Ctx, args: &BenchArgs) -> Result<(), CliError> {
    use rand::Rng;
    if args.nodes == 0 || args.support == 0 || args.support > args.nodes {
        return Err(CliError::input(
            "bench requires 0 < support <= nodes".to_string(),
        ));
    }
    println!("op,nodes,support,seed,rep,wall_ms,work");
    for rep in 0..args.reps {
        let seed = ctx.seed.wrapping_add(rep as u64);
        let tree = FiniteTree::random(args.nodes, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1ac);
        let picked = rand::seq::index::sample(&mut rng, args.nodes, args.support);
        let pairs: Vec<(NodeId, BigRational)> = picked
            .iter()
            .map(|v| {
                (
                    v as NodeId,
                    rat(rng.random_range(1i64..=9), rng.random_range(1i64..=4)),
                )
            })
            .collect();
        let z = TreeVector::new(pairs).expect("sampled nodes are distinct");
        let work = closure_size(&tree, z.support());
        let start = Instant::now();
        let ev = Evaluator::new(&tree, ctx.oracle.as_ref(), z.support())?;
        let out = ev.evaluate(&z, false)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        // Touch the result so the measured call cannot be elided.
        assert!(!out.t2.sq.is_negative());
        println!(
            "t2_dp,{},{},{},{},{:.3},{}",
            args.nodes, args.support, seed, rep, ms, work
        );
    }

    // Small exhaustive instance: work = number of enumerated families.
    let tree = FiniteTree::random(12, ctx.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0xfeed);
    let pairs: Vec<(NodeId, BigRational)> = (0..8)
        .map(|v| (v as NodeId, rat(rng.random_range(1i64..=9), 1)))
        .collect();
    let z = TreeVector::new(pairs).expect("distinct nodes");
    let mins: Vec<NodeId> = candidate_segments(&tree, &z)?
        .iter()
        .map(|&(a, _)| a)
        .collect();
    let start = Instant::now();
    let brute = t2_norm_bruteforce(&tree, &z, ctx.oracle.as_ref(), ctx.budget)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    assert!(!brute.value.sq.is_negative());
    let mut families = 0u64;
    for fam in incomparable_families(&tree, &mins, ctx.budget) {
        fam?;
        families += 1;
    }
    println!("t2_brute,12,8,{},0,{:.3},{}", ctx.seed, ms, families);
    Ok(())
}

fn run_gen_tree(ctx: &Ctx, args: &GenTreeArgs) -> Result<(), CliError> {
    let bad = || {
        CliError::input(format!(
            "flag --kind: expected full-binary:<depth> or random:<nodes>:<seed>, got {:?}",
            args.kind
        ))
    };
    let parts: Vec<&str> = args.kind.split(':').collect();
    let tree = match parts.as_slice() {
        ["full-binary", d] => {
            let depth: u32 = d.parse().map_err(|_| bad())?;
            if depth == 0 {
                return Err(CliError::input("flag --kind: depth must be at least 1"));
            }
            FiniteTree::full_binary(depth)
        }
        ["random", n, s] => {
            let n: usize = n.parse().map_err(|_| bad())?;
            let s: u64 = s.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(CliError::input("flag --kind: node count must be at least 1"));
            }
            FiniteTree::random(n, s)
        }
        _ => return Err(bad()),
    };
    write_tree(&args.out, &tree)?;
    emit(
        ctx.output,
        &json!({
            "kind": args.kind,
            "nodes": tree.len(),
            "out": args.out.display().to_string(),
        }),
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        oracle: oracle_for_selector(&cli.basis)?,
        method: cli.method,
        seed: cli.seed,
        trials: cli.trials,
        budget: cli.budget,
        tolerance: parse_decimal("tolerance", &cli.tolerance)?,
        output: cli.output,
    };
    if ctx.tolerance.is_negative() {
        return Err(CliError::input("flag --tolerance: must be nonnegative"));
    }
    match &cli.command {
        Command::Norm(args) => run_norm(&ctx, args, true),
        Command::T0norm(args) => run_norm(&ctx, args, false),
        Command::Project(args) => run_project(&ctx, args),
        Command::Witness(args) => run_witness(&ctx, args),
        Command::Forge(args) => run_forge(&ctx, args),
        Command::Certify(args) => run_certify(&ctx, args),
        Command::UncondReport(args) => run_uncond(&ctx, args),
        Command::UpperL2Report(args) => run_upper_l2(&ctx, args),
        Command::OracleCheck => run_oracle_check(&ctx),
        Command::ValidateOracle(args) => run_validate_oracle(&ctx, args),
        Command::Bench(args) => run_bench(&ctx, args),
        Command::GenTree(args) => run_gen_tree(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
