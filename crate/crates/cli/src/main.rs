//! matctl: generate structured descriptor networks, select driver nodes for
//! controllability and performance, verify certificates, and reproduce the
//! numerical-study experiments.
//!
//! Exit codes: 0 success/pass, 1 certificate fail, 2 usage, 3 generation
//! failure, 4 unsolvable system, 5 infeasible input budget.

mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use matsel::constraints::{certify_input_set, ConstraintSystem};
use matsel::metrics::{
    as_objective, coherence, convergence_error, MetricConfig, MetricKind, WeightedGraph,
};
use matsel::select::{
    min_input_set, min_input_set_strong, select_joint, select_joint_modular, select_tradeoff,
    GreedyParams, SelectionResult, TradeoffIndex,
};
use matsel::structmat::FieldConfig;
use matsel::sysmodel::{
    augment_with_inputs, consensus_graph, consensus_system, double_integrator_system,
    free_parameter_system, random_geometric_network, DescriptorSystem, Graph,
};
use matsel::ModelError;

use experiments::ExperimentSpec;
use output::{write_json, Envelope, RunMeta};

const EXIT_CERT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_GENERATION: u8 = 3;
const EXIT_UNSOLVABLE: u8 = 4;
const EXIT_INFEASIBLE_K: u8 = 5;

#[derive(Parser)]
#[command(
    name = "matctl",
    version,
    about = "driver-node selection for structured descriptor networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random geometric network (and optionally a system file)
    Gen(GenArgs),
    /// Select a minimum input set for structural controllability
    MinInputs(MinInputsArgs),
    /// Select up to k inputs maximizing a metric under controllability
    Select(SelectArgs),
    /// Greedy performance/controllability trade-off
    Tradeoff(TradeoffArgs),
    /// Check the controllability certificate of a system + input set
    Verify(VerifyArgs),
    /// Reproduce the numerical-study experiments (CSV + SVG)
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemKindArg {
    Consensus,
    DoubleIntegrator,
    Free,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymmetrizeArg {
    Mutual,
    Union,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Convergence,
    Coherence,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Degree,
    Random,
}

fn default_seed() -> u64 {
    std::env::var("MATCTL_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

#[derive(Args)]
struct GenArgs {
    /// Number of network nodes
    #[arg(long)]
    n: usize,
    /// Target mean out-degree of the directed geometric graph
    #[arg(long, default_value_t = 3.0)]
    degree: f64,
    /// Upper bound of the per-node communication range
    #[arg(long, default_value_t = 600.0)]
    range_max: f64,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    /// Graph JSON output path
    #[arg(long, default_value = "network.json")]
    out: PathBuf,
    /// Also write a descriptor system of this kind
    #[arg(long, value_enum)]
    system: Option<SystemKindArg>,
    /// System JSON output path
    #[arg(long, default_value = "system.json")]
    system_out: PathBuf,
    /// How to close the directed link rule into an undirected graph
    #[arg(long, value_enum, default_value = "mutual")]
    symmetrize: SymmetrizeArg,
}

#[derive(Args)]
struct MinInputsArgs {
    /// System JSON file
    #[arg(long)]
    system: PathBuf,
    /// Use the strongly-connected greedy fast path (connectivity verified)
    #[arg(long)]
    assume_strong: bool,
    /// Run a heuristic baseline instead of the matroid intersection
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    system: PathBuf,
    /// Input budget
    #[arg(long)]
    k: usize,
    /// Performance metric (consensus systems)
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Comma-separated modular weights over the eligible ground set
    #[arg(long)]
    modular_weights: Option<String>,
    /// Metric evaluation time
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Monte-Carlo draws per marginal estimate (default scales with k, n)
    #[arg(long)]
    samples: Option<usize>,
    /// Continuous-greedy step override (default 1/(9 k^2))
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long)]
    system: PathBuf,
    /// Trade-off weight on the controllability indices
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    modular_weights: Option<String>,
    /// Use the strongly-connected index c(S) instead of c1 + c2
    #[arg(long)]
    strong: bool,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    system: PathBuf,
    /// Comma-separated input states, e.g. "0,3,7"
    #[arg(long, default_value = "")]
    inputs: String,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// fig1 (minimum input sets) or fig2 (convergence error vs budget)
    #[arg(long)]
    id: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = default_seed())]
    seed: u64,
    #[arg(long, default_value = "experiments")]
    out_dir: PathBuf,
    /// Override the size sweep (fig1), e.g. "10,20,30,40"
    #[arg(long)]
    sizes: Option<String>,
    /// Override the budget sweep (fig2), e.g. "4,6,8,10"
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long)]
    degree: Option<f64>,
    /// Monte-Carlo draws per continuous-greedy marginal estimate
    #[arg(long)]
    cg_samples: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(map_error(&e))
        }
    }
}

fn map_error(e: &CliError) -> u8 {
    match e {
        CliError::Usage(_) => EXIT_USAGE,
        CliError::Io(_) => EXIT_USAGE,
        CliError::Model(ModelError::NoIndependentMatching) => EXIT_UNSOLVABLE,
        CliError::Model(ModelError::KTooSmall { .. }) => EXIT_INFEASIBLE_K,
        CliError::Model(ModelError::TooFewNodes(_))
        | CliError::Model(ModelError::DegreeBisection { .. })
        | CliError::Model(ModelError::EmptyGraph)
        | CliError::Model(ModelError::NotUndirected) => EXIT_GENERATION,
        CliError::Model(_) => EXIT_USAGE,
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(std::io::Error),
    Model(ModelError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::MinInputs(a) => cmd_min_inputs(a),
        Cmd::Select(a) => cmd_select(a),
        Cmd::Tradeoff(a) => cmd_tradeoff(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Experiment(a) => cmd_experiment(a),
    }
}

fn load_system(path: &PathBuf) -> Result<DescriptorSystem, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad system file: {e}")))
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("bad index {tok:?}: {e}")))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad weight {tok:?}: {e}")))
        })
        .collect()
}

fn emit_selection(
    res: &SelectionResult,
    meta: RunMeta,
    out: Option<&PathBuf>,
    format: FormatArg,
) -> Result<(), CliError> {
    match format {
        FormatArg::Json => {
            let env = Envelope { meta, result: res };
            let text = serde_json::to_string_pretty(&env).expect("serializable");
            match out {
                Some(p) => std::fs::write(p, text + "\n")?,
                None => println!("{text}"),
            }
        }
        FormatArg::Csv => {
            let states = res
                .s
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let pass = res
                .certificate
                .as_ref()
                .map(|c| c.passed().to_string())
                .unwrap_or_else(|| "".into());
            let text = format!(
                "algorithm,size,objective,certificate_pass,seed,inputs\n{},{},{:.9},{},{},{}\n",
                res.algorithm,
                res.s.len(),
                res.objective,
                pass,
                res.seed,
                states
            );
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, CliError> {
    if a.n < 2 {
        return Err(CliError::Usage(format!(
            "--n must be at least 2, got {}",
            a.n
        )));
    }
    let net = random_geometric_network(a.n, a.degree, a.range_max, a.seed)?;
    let (graph, sym_note) = match a.symmetrize {
        SymmetrizeArg::Mutual => (net.graph.symmetrize_mutual(), "mutual"),
        SymmetrizeArg::Union => (net.graph.symmetrize_union(), "union"),
        SymmetrizeArg::None => (net.graph.clone(), "none"),
    };
    let meta = RunMeta::new(
        a.seed,
        &format!(
            "gen n={} degree={} range={} sym={}",
            a.n, a.degree, a.range_max, sym_note
        ),
    )
    .note(format!(
        "achieved mean out-degree {:.4}",
        net.achieved_degree
    ))
    .note(format!("square side {:.4}", net.side))
    .note(format!("symmetrization: {sym_note}"));
    write_json(
        &a.out,
        &Envelope {
            meta: meta.clone(),
            result: &graph,
        },
    )?;
    println!(
        "wrote {} (n = {}, achieved mean degree {:.3})",
        a.out.display(),
        a.n,
        net.achieved_degree
    );
    if let Some(kind) = a.system {
        let sys = match kind {
            SystemKindArg::Consensus => consensus_system(&graph)?,
            SystemKindArg::DoubleIntegrator => double_integrator_system(&graph),
            SystemKindArg::Free => free_parameter_system(&graph),
        };
        write_json(&a.system_out, &Envelope { meta, result: &sys })?;
        println!("wrote {} ({} states)", a.system_out.display(), sys.n);
    }
    Ok(ExitCode::SUCCESS)
}

/// Graph/system files are wrapped in a meta envelope; accept both wrapped
/// and bare forms.
fn load_graph_or_system(path: &PathBuf) -> Result<DescriptorSystem, CliError> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(env) = serde_json::from_str::<serde_json::Value>(&text) {
        let body = env.get("result").cloned().unwrap_or(env);
        if let Ok(sys) = serde_json::from_value::<DescriptorSystem>(body.clone()) {
            return Ok(sys);
        }
        if let Ok(graph) = serde_json::from_value::<Graph>(body) {
            return Ok(consensus_system(&graph)?);
        }
    }
    load_system(path)
}

fn cmd_min_inputs(a: MinInputsArgs) -> Result<ExitCode, CliError> {
    let sys = load_graph_or_system(&a.system)?;
    let cfg = FieldConfig::with_seed(a.seed);
    let cs = ConstraintSystem::build(&sys, &cfg)?;
    let res = match a.baseline {
        Some(b) => baseline_min_inputs(&cs, b, a.seed)?,
        None => {
            if a.assume_strong {
                min_input_set_strong(&cs)?
            } else {
                min_input_set(&cs)?
            }
        }
    };
    let pass = res
        .certificate
        .as_ref()
        .map(|c| c.passed())
        .unwrap_or(false);
    let meta = RunMeta::new(a.seed, &format!("min-inputs {}", a.system.display()));
    emit_selection(&res, meta, a.out.as_ref(), a.format)?;
    eprintln!("|S| = {} certificate pass: {pass}", res.s.len());
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CERT_FAIL)
    })
}

fn baseline_min_inputs(
    cs: &ConstraintSystem,
    which: BaselineArg,
    seed: u64,
) -> Result<SelectionResult, CliError> {
    let eligible = cs.eligible.clone();
    let mut order: Vec<usize> = eligible.clone();
    match which {
        BaselineArg::Degree => {
            let g = cs.sys.state_graph();
            order.sort_by_key(|&v| (std::cmp::Reverse(g.total_degree(v)), v));
        }
        BaselineArg::Random => {
            let mut st = matsel::structmat::Stream::new(seed ^ 0x626c696e);
            for i in (1..order.len()).rev() {
                let j = st.next_below(i as u64 + 1) as usize;
                order.swap(i, j);
            }
        }
    }
    let feasible = |m: usize| -> bool {
        let mut s: Vec<usize> = order[..m].to_vec();
        s.sort_unstable();
        cs.rho1(&s) == 2 * cs.sys.n - cs.zeta && cs.rho2_complete(&s)
    };
    let mut size = order.len();
    let mut found = false;
    for m in 0..=order.len() {
        if feasible(m) {
            size = m;
            found = true;
            break;
        }
    }
    let mut s: Vec<usize> = order[..size].to_vec();
    s.sort_unstable();
    let certificate = certify_input_set(&cs.sys, &s, &cs.cfg, 20)?;
    Ok(SelectionResult {
        objective: s.len() as f64,
        trace: vec![format!(
            "baseline order prefix {} of {} (feasible: {found})",
            size,
            order.len()
        )],
        certificate: Some(certificate),
        algorithm: match which {
            BaselineArg::Degree => "baseline/degree".into(),
            BaselineArg::Random => "baseline/random".into(),
        },
        s,
        seed,
    })
}

fn metric_objective(
    sys: &DescriptorSystem,
    metric: MetricArg,
    t: f64,
    seed: u64,
) -> Result<
    (
        matsel::metrics::SubmodularObjective,
        WeightedGraph,
        MetricConfig,
    ),
    CliError,
> {
    let graph = consensus_graph(sys)
        .ok_or_else(|| CliError::Usage("metric objectives need a consensus-form system".into()))?;
    let wg = WeightedGraph::random_weights(&graph, seed);
    let mcfg = MetricConfig {
        t,
        x0_seed: seed,
        ..MetricConfig::default()
    };
    let kind = match metric {
        MetricArg::Convergence => MetricKind::Convergence,
        MetricArg::Coherence => MetricKind::Coherence,
    };
    Ok((as_objective(kind, &wg, &mcfg), wg, mcfg))
}

fn cmd_select(a: SelectArgs) -> Result<ExitCode, CliError> {
    let sys = load_graph_or_system(&a.system)?;
    let cfg = FieldConfig::with_seed(a.seed);
    let cs = ConstraintSystem::build(&sys, &cfg)?;
    let res = if let Some(w) = &a.modular_weights {
        let weights = parse_f64_list(w)?;
        if weights.len() != cs.eligible.len() {
            return Err(CliError::Usage(format!(
                "need {} weights (one per eligible input), got {}",
                cs.eligible.len(),
                weights.len()
            )));
        }
        map_k_error(select_joint_modular(&cs, &weights, a.k))?
    } else {
        let metric = a
            .metric
            .ok_or_else(|| CliError::Usage("pass --metric or --modular-weights".into()))?;
        let (objective, wg, mcfg) = metric_objective(&sys, metric, a.t, a.seed)?;
        let params = GreedyParams {
            samples: a.samples,
            delta: a.delta,
            seed: a.seed,
            ..GreedyParams::default()
        };
        let mut res = map_k_error(select_joint(&cs, &objective, a.k, &params))?;
        let realized = match metric {
            MetricArg::Convergence => convergence_error(&wg, &res.s, &mcfg),
            MetricArg::Coherence => coherence(&wg, &res.s).unwrap_or(f64::INFINITY),
        };
        res.trace
            .push(format!("realized metric value {realized:.9}"));
        res
    };
    let pass = res
        .certificate
        .as_ref()
        .map(|c| c.passed())
        .unwrap_or(false);
    let meta = RunMeta::new(a.seed, &format!("select k={} {}", a.k, a.system.display()));
    emit_selection(&res, meta, a.out.as_ref(), a.format)?;
    eprintln!("selected {:?} certificate pass: {pass}", res.s);
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CERT_FAIL)
    })
}

fn map_k_error(r: Result<SelectionResult, ModelError>) -> Result<SelectionResult, CliError> {
    r.map_err(|e| {
        if let ModelError::KTooSmall { k, min_k } = &e {
            eprintln!("infeasible budget: k = {k} but the smallest feasible k is {min_k}");
        }
        CliError::Model(e)
    })
}

fn cmd_tradeoff(a: TradeoffArgs) -> Result<ExitCode, CliError> {
    let sys = load_graph_or_system(&a.system)?;
    let cfg = FieldConfig::with_seed(a.seed);
    let cs = ConstraintSystem::build(&sys, &cfg)?;
    let objective = if let Some(w) = &a.modular_weights {
        let weights = parse_f64_list(w)?;
        if weights.len() != cs.eligible.len() {
            return Err(CliError::Usage(format!(
                "need {} weights, got {}",
                cs.eligible.len(),
                weights.len()
            )));
        }
        matsel::metrics::SubmodularObjective::modular(weights)
    } else if let Some(metric) = a.metric {
        metric_objective(&sys, metric, a.t, a.seed)?.0
    } else {
        matsel::metrics::SubmodularObjective::constant(cs.eligible.len(), 0.0)
    };
    let index = if a.strong {
        TradeoffIndex::Strong
    } else {
        TradeoffIndex::General
    };
    let mut res = select_tradeoff(&cs, &objective, a.eta, a.k, index)?;
    // objective decomposition
    let ground: Vec<usize> = res
        .s
        .iter()
        .map(|st| cs.eligible.binary_search(st).expect("selected from ground"))
        .collect();
    let f_val = objective.evaluate(&ground);
    let decomposition = if a.strong {
        let c = cs.gci_strong(&res.s);
        format!("f = {f_val:.9}, c = {c}, eta = {}", a.eta)
    } else {
        let c1 = cs.gci_c1(&res.s);
        let c2 = cs.gci_c2(&res.s);
        format!("f = {f_val:.9}, c1 = {c1}, c2 = {c2}, eta = {}", a.eta)
    };
    res.trace.push(decomposition.clone());
    let meta = RunMeta::new(a.seed, &format!("tradeoff eta={} k={}", a.eta, a.k));
    emit_selection(&res, meta, a.out.as_ref(), a.format)?;
    eprintln!("{decomposition}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode, CliError> {
    let sys = load_graph_or_system(&a.system)?;
    let inputs = parse_usize_list(&a.inputs)?;
    let aug = augment_with_inputs(&sys, &inputs)?;
    let cfg = FieldConfig::with_seed(a.seed);
    let cert = matsel::constraints::controllability_certificate(&aug, &cfg, 20)?;
    let meta = RunMeta::new(a.seed, &format!("verify {}", a.system.display()));
    let env = Envelope {
        meta,
        result: &cert,
    };
    let text = serde_json::to_string_pretty(&env).expect("serializable");
    match &a.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    eprintln!(
        "rank(A|B): {} pencil: {} failure bound {:.3e}",
        cert.rank_ab_ok, cert.pencil_ok, cert.failure_bound
    );
    Ok(if cert.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CERT_FAIL)
    })
}

fn cmd_experiment(a: ExperimentArgs) -> Result<ExitCode, CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut spec = match a.id.as_str() {
        "fig1" => ExperimentSpec::fig1(a.seed, a.trials, a.out_dir.clone()),
        "fig2" => ExperimentSpec::fig2(a.seed, a.trials, a.out_dir.clone()),
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment {other:?} (expected fig1 or fig2)"
            )))
        }
    };
    if let Some(sizes) = &a.sizes {
        spec.sizes = parse_usize_list(sizes)?;
    }
    if let Some(ks) = &a.k_range {
        spec.k_range = parse_usize_list(ks)?;
    }
    if let Some(d) = a.degree {
        spec.degree = d;
    }
    if let Some(s) = a.cg_samples {
        spec.cg_samples = s;
    }
    if let Some(t) = a.threads {
        spec.threads = t;
    }
    let out = experiments::run(&spec)?;
    println!("rows: {}", out.rows.len());
    for (x, method, value) in &out.means {
        println!("  {} {:>10}: {:.4}", x, method, value);
    }
    println!("csv: {}", out.csv_path);
    println!("svg: {}", out.svg_path);
    Ok(ExitCode::SUCCESS)
}
