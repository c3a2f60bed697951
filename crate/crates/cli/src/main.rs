//! Deterministic command-line front end: builds groups, angle reports,
//! averaged-iteration certificates, criterion verdicts and expander
//! reports as machine-readable JSON.
//!
//! Exit codes: 0 on success, 2 when a report carries a
//! hypothesis-failure verdict (not certified / observe only), 1 on
//! errors (with a structured diagnostic on stderr).

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Deserialize;

use robust_t::coset_spectra;
use robust_t::criterion::{self, EvaluateOptions, Verdict};
use robust_t::expander_forge::{self, ExportFormat};
use robust_t::finite_group::{self, GeneratedPair, GroupTable};
use robust_t::group_algebra;
use robust_t::projection_lab::{self, CertificateMode, NormedSpace, ProjectionFamily};

#[derive(Parser)]
#[command(
    name = "robust-t",
    about = "Spectral certificates for averaged projections and robust Banach property (T)"
)]
struct Cli {
    /// Master seed; all randomness is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout (atomic write).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on group orders admitted to dense-matrix work.
    #[arg(long, global = true)]
    dense_cap: Option<usize>,
    /// Cap on enumerated Cayley-graph vertices.
    #[arg(long, global = true)]
    cayley_cap: Option<usize>,
    /// Worker threads (also capped by ROBUST_T_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML config file mirroring the global flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Global settings after merging defaults, the config file and flags.
struct RunConfig {
    seed: u64,
    out: Option<PathBuf>,
    dense_cap: usize,
    cayley_cap: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    dense_cap: Option<usize>,
    cayley_cap: Option<usize>,
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build finite groups and write their multiplication tables.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Angle and Schatten data of a generating subgroup pair.
    Angle {
        #[command(subcommand)]
        action: AngleAction,
    },
    /// Iterate the averaged operator of a projection family.
    Iterate(IterateArgs),
    /// Evaluate a generator scheme into a certification verdict.
    Criterion(CriterionArgs),
    /// Build a congruence quotient, its Cayley graph and spectral data.
    Expander(ExpanderArgs),
}

#[derive(Subcommand)]
enum GroupAction {
    /// Construct a named group and emit {order, mul, generators}.
    Build(GroupBuildArgs),
}

#[derive(Args)]
struct GroupBuildArgs {
    #[arg(long, value_enum)]
    kind: GroupKind,
    /// Prime parameter for heisenberg/product.
    #[arg(long)]
    q: Option<u64>,
    /// Letters for sym.
    #[arg(long)]
    n: Option<usize>,
    /// Half-order for dihedral (order 2m).
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupKind {
    Heisenberg,
    Product,
    Sym,
    Dihedral,
}

#[derive(Subcommand)]
enum AngleAction {
    /// Full angle report of a generating pair.
    Report(AngleReportArgs),
}

#[derive(Args)]
struct AngleReportArgs {
    #[arg(long, value_enum)]
    group: PairChoice,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    /// Group JSON file (for --group custom).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Generator label for K1 (custom groups).
    #[arg(long)]
    k1: Option<String>,
    /// Generator label for K2 (custom groups).
    #[arg(long)]
    k2: Option<String>,
    /// Schatten exponents, comma separated.
    #[arg(long, default_value = "2,3,4")]
    r: String,
    /// Dump the defect operator matrix as CSV.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairChoice {
    Heisenberg,
    Product,
    Sym,
    Dihedral,
    Custom,
}

#[derive(Args)]
struct IterateArgs {
    /// Projection family JSON file.
    #[arg(long)]
    family: PathBuf,
    #[arg(long, default_value_t = 200)]
    max_n: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct CriterionArgs {
    /// Scheme JSON file.
    #[arg(long, conflicts_with_all = ["steinberg", "kms", "links"])]
    scheme: Option<PathBuf>,
    /// Steinberg layout: N M Q.
    #[arg(long, num_args = 3, value_names = ["N", "M", "Q"])]
    steinberg: Option<Vec<u64>>,
    /// Kac-Moody-Steinberg: GRAPH_FILE Q.
    #[arg(long, num_args = 2, value_names = ["GRAPH", "Q"], conflicts_with_all = ["steinberg", "links"])]
    kms: Option<Vec<String>>,
    /// Link spectra file (requires --n).
    #[arg(long, conflicts_with = "steinberg")]
    links: Option<PathBuf>,
    /// Number of generators for --links.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c_prime: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Schatten exponents, comma separated.
    #[arg(long, default_value = "2,3,4")]
    r_grid: String,
    #[arg(long, default_value_t = 1.0)]
    type_constant: f64,
    #[arg(long, default_value_t = 1.0)]
    cotype_constant: f64,
}

#[derive(Args)]
struct ExpanderArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: u32,
    #[arg(long)]
    k: usize,
    /// Poincaré heuristic exponents, comma separated (empty to skip).
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long)]
    export_dot: Option<PathBuf>,
    #[arg(long)]
    export_csv: Option<PathBuf>,
    #[arg(long)]
    export_json: Option<PathBuf>,
    /// Only build and measure the gap; skip Poincaré work.
    #[arg(long)]
    skip_poincare: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let diagnostic = diagnostic_json(&err);
            eprintln!("{}", output::render(&diagnostic).trim_end());
            ExitCode::from(1)
        }
    }
}

fn diagnostic_json(err: &anyhow::Error) -> serde_json::Value {
    let code = err
        .downcast_ref::<robust_t::Error>()
        .map(|e| e.code())
        .unwrap_or("cli");
    let context: Vec<String> = err.chain().skip(1).map(|c| c.to_string()).collect();
    serde_json::json!({
        "code": code,
        "message": err.to_string(),
        "context": context,
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let file_config: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let config = RunConfig {
        seed: cli.seed.or(file_config.seed).unwrap_or(0),
        out: cli.out.clone().or(file_config.out),
        dense_cap: cli
            .dense_cap
            .or(file_config.dense_cap)
            .unwrap_or(group_algebra::DENSE_MATRIX_CAP),
        cayley_cap: cli
            .cayley_cap
            .or(file_config.cayley_cap)
            .unwrap_or(expander_forge::DEFAULT_VERTEX_CAP),
    };

    let mut threads = cli.threads.or(file_config.threads);
    if let Ok(env_cap) = std::env::var("ROBUST_T_THREADS") {
        let cap: usize = env_cap
            .parse()
            .map_err(|_| anyhow!("ROBUST_T_THREADS must be an integer, got {env_cap:?}"))?;
        threads = Some(threads.map_or(cap, |t| t.min(cap)));
    }
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Group { action } => match action {
            GroupAction::Build(args) => group_build(&config, args),
        },
        Command::Angle { action } => match action {
            AngleAction::Report(args) => angle_report(&config, args),
        },
        Command::Iterate(args) => iterate(&config, args),
        Command::Criterion(args) => criterion_run(&config, args),
        Command::Expander(args) => expander(&config, args),
    }
}

fn parse_float_list(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            let t = t.trim();
            if t == "inf" {
                Ok(f64::INFINITY)
            } else {
                t.parse::<f64>().map_err(|_| anyhow!("bad number {t:?}"))
            }
        })
        .collect()
}

fn group_build(config: &RunConfig, args: GroupBuildArgs) -> anyhow::Result<ExitCode> {
    let group = build_group(args.kind, args.q, args.n, args.m)?;
    if group.order() > config.dense_cap {
        bail!(robust_t::Error::DenseCapExceeded {
            order: group.order(),
            cap: config.dense_cap
        });
    }
    eprintln!("built group of order {}", group.order());
    output::emit(&group.to_json(), config.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn build_group(
    kind: GroupKind,
    q: Option<u64>,
    n: Option<usize>,
    m: Option<usize>,
) -> anyhow::Result<GroupTable> {
    let group = match kind {
        GroupKind::Heisenberg => {
            finite_group::heisenberg(q.ok_or_else(|| anyhow!("--kind heisenberg needs --q"))?)?
        }
        GroupKind::Product => finite_group::elementary_abelian_pair(
            q.ok_or_else(|| anyhow!("--kind product needs --q"))?,
        )?,
        GroupKind::Sym => {
            finite_group::symmetric(n.ok_or_else(|| anyhow!("--kind sym needs --n"))?)?
        }
        GroupKind::Dihedral => {
            finite_group::dihedral(m.ok_or_else(|| anyhow!("--kind dihedral needs --m"))?)?
        }
    };
    Ok(group)
}

fn load_pair(config: &RunConfig, args: &AngleReportArgs) -> anyhow::Result<GeneratedPair> {
    match args.group {
        PairChoice::Heisenberg => Ok(finite_group::heisenberg_pair(
            args.q
                .ok_or_else(|| anyhow!("--group heisenberg needs --q"))?,
        )?),
        PairChoice::Product => Ok(finite_group::elementary_abelian_factor_pair(
            args.q.ok_or_else(|| anyhow!("--group product needs --q"))?,
        )?),
        PairChoice::Sym => Ok(finite_group::symmetric_reflection_pair()?),
        PairChoice::Dihedral => Ok(finite_group::dihedral_reflection_pair(
            args.m
                .ok_or_else(|| anyhow!("--group dihedral needs --m"))?,
        )?),
        PairChoice::Custom => {
            let path = args
                .file
                .as_ref()
                .ok_or_else(|| anyhow!("--group custom needs --file"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading group {}", path.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let group = GroupTable::from_json(&value)?;
            if group.order() > config.dense_cap {
                bail!(robust_t::Error::DenseCapExceeded {
                    order: group.order(),
                    cap: config.dense_cap
                });
            }
            let label1 = args
                .k1
                .as_deref()
                .ok_or_else(|| anyhow!("custom group needs --k1"))?;
            let label2 = args
                .k2
                .as_deref()
                .ok_or_else(|| anyhow!("custom group needs --k2"))?;
            let g1 = group
                .generator(label1)
                .ok_or_else(|| anyhow!("no generator labeled {label1:?}"))?;
            let g2 = group
                .generator(label2)
                .ok_or_else(|| anyhow!("no generator labeled {label2:?}"))?;
            let k1 = finite_group::closure(&group, &[g1])?;
            let k2 = finite_group::closure(&group, &[g2])?;
            Ok(GeneratedPair { group, k1, k2 })
        }
    }
}

fn angle_report(config: &RunConfig, args: AngleReportArgs) -> anyhow::Result<ExitCode> {
    let r_values = parse_float_list(&args.r)?;
    let pair = load_pair(config, &args)?;
    let report =
        coset_spectra::angle_report(&pair.group, &pair.k1, &pair.k2, &r_values, config.dense_cap)?;
    if let Some(path) = &args.dump_matrix {
        let k1f = group_algebra::averaging_idempotent(&pair.group, &pair.k1)?;
        let k2f = group_algebra::averaging_idempotent(&pair.group, &pair.k2)?;
        let whole =
            finite_group::Subgroup::new(&pair.group, (0..pair.group.order() as u32).collect())?;
        let k12f = group_algebra::averaging_idempotent(&pair.group, &whole)?;
        let diff = group_algebra::convolve(&pair.group, &k1f, &k2f)?.minus(&k12f)?;
        let m = group_algebra::regular_rep(&pair.group, &diff)?;
        let mut buf = Vec::new();
        group_algebra::matrix_to_csv(&m, &mut buf)?;
        output::write_atomic(path, &buf)?;
    }
    eprintln!(
        "hilbert_cos = {:.6}, eta2 = {:.6}, {} nontrivial singular values ({})",
        report.hilbert_cos,
        report.eta2,
        report.nontrivial_singular_values.len(),
        if report.oracle_used {
            "oracle"
        } else {
            "spectrum only"
        },
    );
    output::emit(&report.to_json(), config.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
struct FamilyFile {
    space: SpaceRepr,
    projections: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    meets: Vec<MeetRepr>,
}

#[derive(Deserialize)]
struct SpaceRepr {
    dim: usize,
    #[serde(default)]
    p: Option<serde_json::Value>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct MeetRepr {
    i: usize,
    j: usize,
    matrix: Vec<Vec<f64>>,
}

fn parse_matrix(rows: &[Vec<f64>], dim: usize) -> anyhow::Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        bail!("matrix must be {dim}x{dim}");
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn parse_family(text: &str, seed: u64) -> anyhow::Result<ProjectionFamily> {
    let file: FamilyFile = serde_json::from_str(text)?;
    let space = match (&file.space.weights, &file.space.p) {
        (Some(w), _) => NormedSpace::weighted2(w.clone())?,
        (None, Some(p)) => {
            let p = match p {
                serde_json::Value::Number(n) => n
                    .as_f64()
                    .ok_or_else(|| anyhow!("space.p must be a number or \"inf\""))?,
                serde_json::Value::String(s) if s == "inf" => f64::INFINITY,
                _ => bail!("space.p must be a number or \"inf\""),
            };
            NormedSpace::lp(file.space.dim, p)?
        }
        (None, None) => NormedSpace::euclidean(file.space.dim),
    };
    let dim = space.dim();
    let projections: Vec<DMatrix<f64>> = file
        .projections
        .iter()
        .map(|rows| parse_matrix(rows, dim))
        .collect::<anyhow::Result<_>>()?;
    let mut meets = BTreeMap::new();
    for m in &file.meets {
        meets.insert((m.i, m.j), parse_matrix(&m.matrix, dim)?);
    }
    let meets = if meets.is_empty() { None } else { Some(meets) };
    Ok(ProjectionFamily::new(space, projections, meets, seed)?)
}

fn iterate(config: &RunConfig, args: IterateArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.family)
        .with_context(|| format!("reading family {}", args.family.display()))?;
    let family = parse_family(&text, config.seed)?;
    let cert = projection_lab::iterate_averaged(&family, args.max_n, args.tol, config.seed)?;
    eprintln!(
        "mode = {:?}, beta = {:.6}, iterates = {}",
        cert.mode, cert.beta, cert.iterates_checked
    );
    let code = match cert.mode {
        CertificateMode::Certified => ExitCode::SUCCESS,
        CertificateMode::ObserveOnly => ExitCode::from(2),
    };
    output::emit(&cert.to_json(), config.out.as_deref())?;
    Ok(code)
}

#[derive(Deserialize)]
struct KmsGraphFile {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

fn criterion_run(config: &RunConfig, args: CriterionArgs) -> anyhow::Result<ExitCode> {
    let scheme = if let Some(path) = &args.scheme {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scheme {}", path.display()))?;
        criterion::GeneratorScheme::from_json(&serde_json::from_str(&text)?)?
    } else if let Some(spec) = &args.steinberg {
        let [n, m, q]: [u64; 3] = spec
            .as_slice()
            .try_into()
            .map_err(|_| anyhow!("--steinberg needs N M Q"))?;
        criterion::steinberg_scheme(n as usize, m as usize, q)?
    } else if let Some(spec) = &args.kms {
        let path = Path::new(&spec[0]);
        let q: u64 = spec[1]
            .parse()
            .map_err(|_| anyhow!("bad prime {:?}", spec[1]))?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading graph {}", path.display()))?;
        let graph: KmsGraphFile = serde_json::from_str(&text)?;
        criterion::kac_moody_steinberg_scheme(graph.vertices, &graph.edges, q)?
    } else if let Some(path) = &args.links {
        let n = args.n.ok_or_else(|| anyhow!("--links needs --n"))?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading links {}", path.display()))?;
        let table = coset_spectra::ingest_link_spectra(&serde_json::from_str(&text)?)?;
        criterion::GeneratorScheme::from_link_table(n, &table)?
    } else {
        bail!("one of --scheme, --steinberg, --kms, --links is required");
    };

    let options = EvaluateOptions {
        epsilon: args.epsilon,
        c_prime: args.c_prime,
        r_grid: parse_float_list(&args.r_grid)?,
        type_constant: args.type_constant,
        cotype_constant: args.cotype_constant,
        ..EvaluateOptions::default()
    };
    let report = criterion::evaluate(&scheme, &options)?;

    // Inequality chain for the human reader.
    eprintln!(
        "cos_max = {:.6} vs threshold 1/(8N-11) = {:.6} (N = {}): {}",
        report.cos_max_hilbert,
        report.threshold,
        report.n_generators,
        match report.verdict {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not certified",
        }
    );
    if let Some(s) = &report.s_constants {
        eprintln!("s1 = {:.6}, s2 = {:.6}, s0 = {:.6}", s.s1, s.s2, s.s0);
    }
    if let Some(failed) = &report.failed_inequality {
        eprintln!("failed: {failed}");
    }
    let admissible = report
        .class_params
        .iter()
        .filter(|c| match c {
            criterion::BanachClassDescriptor::TypeCotype { admissible, .. } => *admissible,
            _ => true,
        })
        .count();
    eprintln!(
        "{} classes, {} admissible",
        report.class_params.len(),
        admissible
    );

    let code = match report.verdict {
        Verdict::Certified => ExitCode::SUCCESS,
        Verdict::NotCertified => ExitCode::from(2),
    };
    output::emit(&report.to_json(), config.out.as_deref())?;
    Ok(code)
}

fn expander(config: &RunConfig, args: ExpanderArgs) -> anyhow::Result<ExitCode> {
    let quotient = expander_forge::build_quotient(args.n, args.q, args.k, config.cayley_cap)?;
    let cayley = quotient.cayley_graph()?;
    eprintln!(
        "order = {}, valency = {}, {} degenerate generators dropped",
        quotient.order(),
        cayley.graph.max_degree(),
        quotient.generating_set.degenerate_dropped
    );

    let mut report = if args.skip_poincare {
        let gap = expander_forge::spectral_gap(&cayley.graph, config.seed)?;
        serde_json::json!({
            "order": quotient.order(),
            "valency": cayley.graph.max_degree(),
            "gap": gap,
            "diameter": cayley.graph.diameter_from_origin()?,
        })
    } else {
        let p_values = parse_float_list(&args.p)?;
        let poincare = expander_forge::poincare_constants(
            &cayley.graph,
            &p_values,
            config.seed,
            args.restarts,
        )?;
        poincare.to_json(quotient.order())
    };
    report["degenerate_generators_dropped"] =
        serde_json::json!(quotient.generating_set.degenerate_dropped);

    if let Some(path) = &args.export_dot {
        output::write_atomic(
            path,
            expander_forge::export_cayley(&cayley, ExportFormat::Dot).as_bytes(),
        )?;
    }
    if let Some(path) = &args.export_csv {
        output::write_atomic(
            path,
            expander_forge::export_cayley(&cayley, ExportFormat::CsvEdges).as_bytes(),
        )?;
    }
    if let Some(path) = &args.export_json {
        output::write_atomic(
            path,
            expander_forge::export_cayley(&cayley, ExportFormat::Json).as_bytes(),
        )?;
    }
    output::emit(&report, config.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
