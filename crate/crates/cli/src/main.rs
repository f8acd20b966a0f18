use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bookembed::encoder::{self, DedupPolicy, FactProfile, SymmetryRule};
use bookembed::family::{self, DEFAULT_SIZE_CAP};
use bookembed::graph::{GraphView, SimpleGraph};
use bookembed::layout::{self, BookEmbedding};
use bookembed::solver::{self, BackendConfig, SolveStatus, SplitJob};
use bookembed::{GadgetGraph, PlaneGraph, RestrictionProfile, SubproblemSpec, VarMap};

#[derive(Parser)]
#[command(name = "bookembed", version, about = "Book-embedding experiments on planar gadget graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph of the gadget family and write it in text form.
    Gen(GenArgs),
    /// Encode p-page embeddability of a graph as DIMACS CNF plus a variable map.
    Encode(EncodeArgs),
    /// Run the SAT backend on a CNF file.
    Solve(SolveArgs),
    /// Write (and optionally solve) the subproblem split of a gadget instance.
    Split(SplitArgs),
    /// Check a book embedding against a graph.
    Verify { graph: PathBuf, embedding: PathBuf },
    /// Report forbidden configurations and patterns in an embedding.
    Analyze(AnalyzeArgs),
    /// Print structural statistics of a graph.
    Stats { graph: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Qk,
    QkContracted,
    Gn,
    Final,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyKind,
    #[arg(long)]
    k: usize,
    /// Number of gadget copies for `gn` and `final`.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Same as `--family qk-contracted` when used with `qk`.
    #[arg(long)]
    contract: bool,
    /// Vertex cap for `final`.
    #[arg(long, default_value_t = DEFAULT_SIZE_CAP)]
    cap: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileName {
    None,
    Fact1,
    Fact2,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum, default_value = "none")]
    profile: ProfileName,
    /// `none`, `all`, or a comma-separated list of rule names
    /// (first-vertex, terminal-order, reversal, first-edge-page, second-edge-pages, k4).
    #[arg(long, default_value = "none")]
    symmetry: String,
    /// For the fact1 profile: require A and B adjacent in the linear order
    /// instead of first and last.
    #[arg(long)]
    fact1_adjacent: bool,
}

#[derive(Args)]
struct EncodeArgs {
    graph: PathBuf,
    #[arg(long)]
    pages: usize,
    #[command(flatten)]
    profile: ProfileArgs,
    /// `none` or comma-separated terminal indices that lie between A and B.
    #[arg(long)]
    subproblem: Option<SubproblemSpec>,
    #[arg(short, long)]
    output: PathBuf,
    /// Variable map path; defaults to `<output>.map`.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Sat,
    Unsat,
}

#[derive(Args)]
struct BackendArgs {
    /// Per-job timeout in seconds.
    #[arg(long, default_value_t = 3600.0)]
    timeout: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
}

#[derive(Args)]
struct SolveArgs {
    cnf: PathBuf,
    /// Variable map; defaults to `<cnf>.map` when that file exists.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Write the decoded embedding here (needs the map).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DedupName {
    None,
    FirstTerminal,
}

#[derive(Args)]
struct SplitArgs {
    graph: PathBuf,
    #[arg(long)]
    pages: usize,
    #[arg(long)]
    max_between: usize,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "none")]
    dedup: DedupName,
    /// Only run these jobs (comma-separated names); default is all.
    #[arg(long)]
    only: Option<String>,
    /// Run the jobs with the backend after writing the manifest.
    #[arg(long)]
    solve: bool,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    embedding: PathBuf,
    /// Scan for the configurations no valid 3-page embedding contains.
    #[arg(long)]
    lemma1: bool,
    /// Report the largest rainbow, twist and necklace among the edges.
    #[arg(long)]
    patterns: bool,
}

/// Exit codes: 1 for an `--expect` mismatch, 3 for backend failures.
#[derive(Debug)]
enum Failure {
    Mismatch(String),
    Backend(anyhow::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Mismatch(m) => write!(f, "expectation failed: {m}"),
            Failure::Backend(e) => write!(f, "backend failure: {e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bookembed: {e:#}");
            match e.downcast_ref::<Failure>() {
                Some(Failure::Mismatch(_)) => ExitCode::from(1),
                Some(Failure::Backend(_)) => ExitCode::from(3),
                None => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Encode(a) => encode(a),
        Command::Solve(a) => solve(a),
        Command::Split(a) => split(a),
        Command::Verify { graph, embedding } => verify(&graph, &embedding),
        Command::Analyze(a) => analyze(a),
        Command::Stats { graph } => stats(&graph),
    }
}

fn read_graph(path: &Path) -> Result<PlaneGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PlaneGraph::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_embedding(path: &Path) -> Result<BookEmbedding> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BookEmbedding::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn gen(a: GenArgs) -> Result<()> {
    let g = match (a.family, a.contract) {
        (FamilyKind::Qk, false) => family::build_qk(a.k)?.graph,
        (FamilyKind::Qk, true) | (FamilyKind::QkContracted, _) => family::build_qk_contracted(a.k)?.graph,
        (FamilyKind::Gn, _) => family::build_base_gn(a.k, a.n)?.graph,
        (FamilyKind::Final, _) => family::build_final_g(a.k, a.n, a.cap)?,
    };
    write(&a.output, &g.serialize())?;
    println!("{} vertices={} edges={}", g.name(), g.vertex_count(), g.edge_count());
    Ok(())
}

fn parse_symmetry(spec: &str) -> Result<Vec<SymmetryRule>> {
    match spec.trim() {
        "none" | "" => Ok(Vec::new()),
        "all" => Ok(SymmetryRule::ALL.to_vec()),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<SymmetryRule>().map_err(anyhow::Error::msg))
            .collect(),
    }
}

fn build_profile(
    g: &PlaneGraph,
    args: &ProfileArgs,
    subproblem: Option<SubproblemSpec>,
    force_first_vertex: bool,
) -> Result<RestrictionProfile> {
    let mut rules = parse_symmetry(&args.symmetry)?;
    if force_first_vertex && !rules.contains(&SymmetryRule::FirstVertex) {
        log::info!("subproblem pins assume A first; enabling the first-vertex rule");
        rules.push(SymmetryRule::FirstVertex);
    }
    let needs_roles = !rules.is_empty() || args.profile != ProfileName::None || subproblem.is_some();
    let mut p = if needs_roles {
        let gadget = GadgetGraph::from_roles(g.clone()).context("the requested profile needs pole/terminal roles")?;
        RestrictionProfile::for_gadget(&gadget)
    } else {
        RestrictionProfile::none()
    };
    for r in rules {
        p = p.with_rule(r);
    }
    match args.profile {
        ProfileName::None => {}
        ProfileName::Fact1 => p = p.with_fact(FactProfile::Fact1),
        ProfileName::Fact2 => p = p.with_fact(FactProfile::Fact2),
    }
    p.fact1_linear_adjacent = args.fact1_adjacent;
    if let Some(s) = subproblem {
        p = p.with_subproblem(s);
    }
    Ok(p)
}

fn encode(a: EncodeArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let force = a.subproblem.is_some();
    let profile = build_profile(&g, &a.profile, a.subproblem, force)?;
    let (cnf, map) = bookembed::encode(&g, a.pages, &profile)?;
    let file = fs::File::create(&a.output).with_context(|| format!("writing {}", a.output.display()))?;
    solver::write_dimacs(&cnf, file)?;
    let map_path = a.map.unwrap_or_else(|| with_suffix(&a.output, ".map"));
    write(&map_path, &map.to_text())?;
    println!(
        "variables={} clauses={} sigma={} phi={} chi={}",
        cnf.variable_count(),
        cnf.clause_count(),
        map.sigma_count(),
        map.phi_count(),
        map.chi_count()
    );
    Ok(())
}

fn backend_config(b: &BackendArgs) -> Result<BackendConfig> {
    if !(b.timeout > 0.0 && b.timeout.is_finite()) {
        bail!("--timeout must be a positive number of seconds");
    }
    BackendConfig::from_env(Duration::from_secs_f64(b.timeout), b.jobs)
        .map_err(|e| Failure::Backend(e.into()).into())
}

fn check_expect(expect: Option<Expect>, status: &SolveStatus) -> Result<()> {
    let ok = match expect {
        None => true,
        Some(Expect::Sat) => status.is_sat(),
        Some(Expect::Unsat) => status.is_unsat(),
    };
    if ok {
        Ok(())
    } else {
        let want = if expect == Some(Expect::Sat) { "sat" } else { "unsat" };
        Err(Failure::Mismatch(format!("expected {want}, got {status}")).into())
    }
}

/// Decodes a model and re-validates it against its own edge set.
fn decode_checked(map: &VarMap, model: &[bool]) -> Result<BookEmbedding> {
    let emb = encoder::decode_model(map, model)?;
    let g = SimpleGraph::new(map.vertices().iter().copied(), map.edges().iter().map(|e| (e.u(), e.v())))?;
    let violations = layout::validate_embedding(&g, &emb)?;
    if let Some(v) = violations.first() {
        bail!("decoded embedding is invalid: {v}");
    }
    Ok(emb)
}

fn solve(a: SolveArgs) -> Result<()> {
    let config = backend_config(&a.backend)?;
    let text = fs::File::open(&a.cnf).with_context(|| format!("reading {}", a.cnf.display()))?;
    let cnf = solver::parse_dimacs(text)?;
    let map_path = a.map.clone().or_else(|| {
        let p = with_suffix(&a.cnf, ".map");
        p.exists().then_some(p)
    });
    let outcome = solver::run_backend_file(&a.cnf, cnf.variable_count(), &config, None)
        .map_err(|e| Failure::Backend(e.into()))?;
    if let Some(model) = outcome.status.model() {
        if let Some(i) = cnf.first_falsified(model) {
            return Err(Failure::Backend(anyhow::anyhow!("backend model falsifies clause {i}")).into());
        }
    }
    println!("status {}", outcome.status.label());
    println!("seconds {:.3}", outcome.wall_time.as_secs_f64());
    if let (Some(model), Some(out)) = (outcome.status.model(), &a.output) {
        let Some(map_path) = map_path else {
            bail!("decoding a model needs --map or `<cnf>.map`");
        };
        let map = VarMap::parse(&fs::read_to_string(&map_path)?)?;
        let emb = decode_checked(&map, model)?;
        write(out, &emb.serialize())?;
    }
    check_expect(a.backend.expect, &outcome.status)
}

fn job_name(spec: &SubproblemSpec) -> String {
    if spec.between.is_empty() {
        "sub-none".into()
    } else {
        let parts: Vec<String> = spec.between.iter().map(|i| i.to_string()).collect();
        format!("sub-{}", parts.join("-"))
    }
}

fn split(a: SplitArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let gadget = GadgetGraph::from_roles(g.clone())?;
    let base_profile = build_profile(&g, &a.profile, None, true)?;
    let policy = match a.dedup {
        DedupName::None => DedupPolicy::None,
        DedupName::FirstTerminal => DedupPolicy::FirstTerminalLeads,
    };
    let mut specs = encoder::enumerate_subproblems(&gadget, a.max_between, policy);
    if let Some(only) = &a.only {
        let wanted: Vec<&str> = only.split(',').map(str::trim).collect();
        specs.retain(|s| wanted.contains(&job_name(s).as_str()));
        if specs.len() != wanted.len() {
            bail!("--only names a job that is not in the split");
        }
    }
    fs::create_dir_all(&a.output)?;
    let (base, map) = bookembed::encode(&g, a.pages, &base_profile)?;
    write(&a.output.join("base.map"), &map.to_text())?;
    let mut manifest = format!(
        "# graph {} pages {} max-between {} symmetry {} profile {} dedup {}\n# jobs {}\n",
        a.graph.display(),
        a.pages,
        a.max_between,
        a.profile.symmetry,
        ProfileName::to_possible_value(&a.profile.profile).map_or("?".into(), |v| v.get_name().to_owned()),
        DedupName::to_possible_value(&a.dedup).map_or("?".into(), |v| v.get_name().to_owned()),
        specs.len()
    );
    let mut jobs = Vec::with_capacity(specs.len());
    for spec in &specs {
        let mut extra = encoder::CnfFormula::new(base.variable_count());
        encoder::pin_subproblem(spec, &map, &base_profile, &mut extra)?;
        let name = job_name(spec);
        let note = format!("encode {} --pages {} --symmetry {} --subproblem {}", a.graph.display(), a.pages, a.profile.symmetry, spec);
        manifest.push_str(&format!("job {name} between={spec}\n"));
        jobs.push(SplitJob { name, extra, note });
    }
    write(&a.output.join("manifest.txt"), &manifest)?;
    println!("jobs {}", jobs.len());
    if !a.solve {
        return Ok(());
    }
    let config = backend_config(&a.backend)?;
    let outcome = solver::solve_split(&base, &jobs, &config, Some(&a.output)).map_err(|e| Failure::Backend(e.into()))?;
    print!("{}", outcome.summary());
    if let Some(model) = outcome.aggregate.status.model() {
        let emb = decode_checked(&map, model)?;
        write(&a.output.join("embedding.emb"), &emb.serialize())?;
    }
    check_expect(a.backend.expect, &outcome.aggregate.status)
}

fn verify(graph: &Path, embedding: &Path) -> Result<()> {
    let g = read_graph(graph)?;
    let emb = read_embedding(embedding)?;
    let violations = layout::validate_embedding(&g, &emb)?;
    if violations.is_empty() {
        println!("valid");
    } else {
        println!("invalid: {} violations", violations.len());
        for v in &violations {
            println!("{v}");
        }
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let emb = read_embedding(&a.embedding)?;
    let g = SimpleGraph::new(emb.order.vertices().iter().copied(), emb.pages.keys().map(|e| (e.u(), e.v())))?;
    let violations = layout::validate_embedding(&g, &emb)?;
    println!("same-page-crossings {}", violations.len());
    if a.lemma1 {
        let reports = layout::lemma1_scan(&g, &emb)?;
        println!("lemma1 {}", reports.len());
        for r in &reports {
            println!("{r}");
        }
    }
    if a.patterns {
        let p = layout::largest_patterns(&emb.order, &g.edge_list())?;
        println!("rainbow {}", p.rainbow);
        println!("twist {}", p.twist);
        println!("necklace {}", p.necklace);
    }
    Ok(())
}

fn stats(path: &Path) -> Result<()> {
    let g = read_graph(path)?;
    println!("name {}", g.name());
    println!("vertices {}", g.vertex_count());
    println!("edges {}", g.edge_count());
    println!("faces {}", g.face_count());
    println!("maximal_planar {}", g.is_maximal_planar());
    println!("biconnected {}", g.is_biconnected());
    println!("k4_subgraphs {}", g.k4_list().len());
    if let Ok(gadget) = GadgetGraph::from_roles(g) {
        println!("terminals {}", gadget.terminals.len());
        match family::dq_distance(&gadget) {
            Ok(d) => println!("dq {d}"),
            Err(e) => println!("dq n/a ({e})"),
        }
    }
    Ok(())
}
