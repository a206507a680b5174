//! Reproduction harness for the numerical study: minimum input sets across
//! network sizes (fig1) and convergence error against the input budget
//! (fig2), each against degree-based and random baselines, with CSV and SVG
//! artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use matsel::constraints::{certify_input_set, ConstraintSystem};
use matsel::metrics::{as_objective, convergence_error, MetricConfig, MetricKind, WeightedGraph};
use matsel::select::{min_input_set, select_joint, GreedyParams};
use matsel::structmat::{FieldConfig, Stream};
use matsel::sysmodel::{consensus_system, Graph};
use matsel::ModelError;

use crate::output::{fnv1a, write_json, LinePlot, RunMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Fig1,
    Fig2,
}

/// How the directed geometric link rule is closed into the undirected
/// consensus network, and which graph the degree bisection measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Keep mutual arc pairs; bisection targets the closed graph's mean
    /// undirected degree.
    MutualClosedDegree,
    /// Keep every arc as an edge; bisection targets the directed mean
    /// out-degree.
    UnionDirectedDegree,
}

/// Geometric consensus network under the chosen closure semantics:
/// positions uniform in a bisected square, ranges uniform on [0, range_max],
/// arc (i, j) when i lies within j's range.
fn geometric_consensus_graph(
    n: usize,
    target: f64,
    range_max: f64,
    seed: u64,
    closure: Closure,
) -> Result<Graph, String> {
    let mut st = Stream::new(seed ^ 0x67656f6d);
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (st.next_f64(), st.next_f64())).collect();
    let range: Vec<f64> = (0..n).map(|_| st.next_f64() * range_max).collect();

    let build = |side: f64| -> Graph {
        let mut g = Graph::directed(n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dx = (pos[i].0 - pos[j].0) * side;
                let dy = (pos[i].1 - pos[j].1) * side;
                if (dx * dx + dy * dy).sqrt() <= range[j] {
                    g.add_edge(i, j);
                }
            }
        }
        g
    };
    let close = |g: &Graph| -> Graph {
        match closure {
            Closure::MutualClosedDegree => g.symmetrize_mutual(),
            Closure::UnionDirectedDegree => g.symmetrize_union(),
        }
    };
    let measure = |g: &Graph, closed: &Graph| -> f64 {
        match closure {
            Closure::MutualClosedDegree => 2.0 * closed.undirected_edges().len() as f64 / n as f64,
            Closure::UnionDirectedDegree => g.mean_out_degree(),
        }
    };

    let target = target.min((n - 1) as f64);
    let mut lo = 1e-9;
    let mut hi = range_max * 2.0 * (n as f64).sqrt();
    let mut achieved = f64::NAN;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let g = build(mid);
        let closed = close(&g);
        let d = measure(&g, &closed);
        achieved = d;
        if (d - target).abs() <= 0.10 * target.max(1e-12) {
            return Ok(closed);
        }
        if d > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(format!(
        "degree bisection failed (achieved {achieved:.3}, target {target:.3})"
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    /// Network sizes (fig1 sweep).
    pub sizes: Vec<usize>,
    pub degree: f64,
    pub range_max: f64,
    /// Input budgets (fig2 sweep).
    pub k_range: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub t: f64,
    /// Monte-Carlo draws per marginal estimate in the continuous greedy.
    pub cg_samples: usize,
    pub threads: usize,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn fig1(seed: u64, trials: usize, out_dir: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            id: ExperimentId::Fig1,
            sizes: vec![10, 20, 30, 40],
            degree: 3.0,
            range_max: 600.0,
            k_range: vec![],
            trials,
            seed,
            t: 1.0,
            cg_samples: 12,
            threads: default_threads(),
            out_dir,
        }
    }

    pub fn fig2(seed: u64, trials: usize, out_dir: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            id: ExperimentId::Fig2,
            sizes: vec![20],
            degree: 2.0,
            range_max: 600.0,
            k_range: vec![4, 6, 8, 10],
            trials,
            seed,
            t: 1.0,
            cg_samples: 12,
            threads: default_threads(),
            out_dir,
        }
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|v| v.get().min(8))
        .unwrap_or(1)
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    /// fig1: network size; fig2: input budget k.
    pub x: usize,
    pub method: &'static str,
    pub trial: usize,
    pub seed: u64,
    /// fig1: selected input count; fig2: realized convergence error.
    pub value: f64,
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub rows: Vec<Row>,
    pub means: Vec<(usize, String, f64)>,
    pub csv_path: String,
    pub svg_path: String,
}

pub const METHODS: [&str; 3] = ["submodular", "degree", "random"];

fn trial_seed(base: u64, x: usize, trial: usize) -> u64 {
    let tag = format!("{base}:{x}:{trial}");
    fnv1a(tag.as_bytes())
}

/// Matroid feasibility of an input set: the zero-mode rank condition hits
/// its ceiling and every cycle class is covered. This is the same sufficient
/// condition the optimizer certifies; the randomized certificate is attached
/// to the outputs that report it.
fn matroid_feasible(cs: &ConstraintSystem, s: &[usize]) -> bool {
    cs.rho1(s) == 2 * cs.sys.n - cs.zeta && cs.rho2_complete(s)
}

/// Smallest prefix of `order` that reaches feasibility, by bisection
/// (feasibility is monotone along the prefix chain). None when even the
/// whole order fails.
fn min_feasible_prefix(cs: &ConstraintSystem, order: &[usize]) -> Option<usize> {
    let feasible = |m: usize| -> bool {
        let mut s: Vec<usize> = order[..m].to_vec();
        s.sort_unstable();
        matroid_feasible(cs, &s)
    };
    if !feasible(order.len()) {
        return None;
    }
    let mut lo = 0; // infeasible (empty set never covers a nonempty requirement)
    let mut hi = order.len(); // feasible
    if feasible(0) {
        return Some(0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn degree_order(g: &Graph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.total_degree(v)), v));
    order
}

fn random_order(n: usize, seed: u64) -> Vec<usize> {
    let mut st = Stream::new(seed ^ 0x72616e64);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = st.next_below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    order
}

pub fn run(spec: &ExperimentSpec) -> std::io::Result<ExperimentOutput> {
    fs::create_dir_all(&spec.out_dir)?;
    let rows = match spec.id {
        ExperimentId::Fig1 => run_fig1(spec),
        ExperimentId::Fig2 => run_fig2(spec),
    };

    let xs: Vec<usize> = match spec.id {
        ExperimentId::Fig1 => spec.sizes.clone(),
        ExperimentId::Fig2 => spec.k_range.clone(),
    };
    let mut means = Vec::new();
    for &x in &xs {
        for method in METHODS {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.x == x && r.method == method && r.status == "ok")
                .map(|r| r.value)
                .collect();
            if !vals.is_empty() {
                means.push((x, method.to_string(), mean(&vals)));
            }
        }
    }

    let tag = match spec.id {
        ExperimentId::Fig1 => "fig1",
        ExperimentId::Fig2 => "fig2",
    };
    let csv_path = spec.out_dir.join(format!("{tag}.csv"));
    let svg_path = spec.out_dir.join(format!("{tag}.svg"));
    write_csv(&csv_path, spec, &rows)?;
    write_svg(&svg_path, spec, &means)?;

    let meta = RunMeta::new(
        spec.seed,
        &serde_json::to_string(spec).expect("spec serializable"),
    )
    .note(match spec.id {
        ExperimentId::Fig1 => {
            "closure: mutual arcs kept, bisection targets the closed undirected mean degree"
        }
        ExperimentId::Fig2 => {
            "closure: union of arcs, bisection targets the directed mean out-degree"
        }
    })
    .note(format!(
        "cg marginal samples per estimate: {}",
        spec.cg_samples
    ));
    let out = ExperimentOutput {
        spec: spec.clone(),
        rows,
        means,
        csv_path: csv_path.display().to_string(),
        svg_path: svg_path.display().to_string(),
    };
    write_json(
        &spec.out_dir.join(format!("{tag}.json")),
        &crate::output::Envelope { meta, result: &out },
    )?;
    Ok(out)
}

fn mean(vals: &[f64]) -> f64 {
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Run one closure per (x, trial) pair on a small thread pool, preserving
/// deterministic row order.
fn parallel_trials<F>(xs: &[usize], trials: usize, threads: usize, job: F) -> Vec<Row>
where
    F: Fn(usize, usize, u64) -> Vec<Row> + Sync,
{
    let tasks: Vec<(usize, usize)> = xs
        .iter()
        .flat_map(|&x| (0..trials).map(move |t| (x, t)))
        .collect();
    let results: Mutex<Vec<(usize, Vec<Row>)>> = Mutex::new(Vec::new());
    let next: Mutex<usize> = Mutex::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1) {
            scope.spawn(|| loop {
                let idx = {
                    let mut guard = next.lock().unwrap();
                    if *guard >= tasks.len() {
                        break;
                    }
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let (x, trial) = tasks[idx];
                let rows = job(x, trial, trial_seed_base(&tasks, idx));
                results.lock().unwrap().push((idx, rows));
            });
        }
    });
    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(idx, _)| *idx);
    collected.into_iter().flat_map(|(_, rows)| rows).collect()
}

fn trial_seed_base(tasks: &[(usize, usize)], idx: usize) -> u64 {
    let (x, t) = tasks[idx];
    ((x as u64) << 32) ^ t as u64
}

fn run_fig1(spec: &ExperimentSpec) -> Vec<Row> {
    parallel_trials(&spec.sizes, spec.trials, spec.threads, |n, trial, _| {
        let seed = trial_seed(spec.seed, n, trial);
        let fail = |status: &str| -> Vec<Row> {
            METHODS
                .iter()
                .map(|m| Row {
                    x: n,
                    method: m,
                    trial,
                    seed,
                    value: f64::NAN,
                    status: status.to_string(),
                })
                .collect()
        };
        let g = match geometric_consensus_graph(
            n,
            spec.degree,
            spec.range_max,
            seed,
            Closure::MutualClosedDegree,
        ) {
            Ok(g) => g,
            Err(e) => return fail(&format!("generation failed: {e}")),
        };
        let sys = match consensus_system(&g) {
            Ok(sys) => sys,
            Err(e) => return fail(&format!("degenerate graph: {e}")),
        };
        let cs = match ConstraintSystem::build(&sys, &FieldConfig::with_seed(seed)) {
            Ok(cs) => cs,
            Err(e) => return fail(&format!("constraint build failed: {e}")),
        };

        let mut rows = Vec::with_capacity(3);
        match min_input_set(&cs) {
            Ok(res) => {
                let ok = res
                    .certificate
                    .as_ref()
                    .map(|c| c.passed())
                    .unwrap_or(false);
                rows.push(Row {
                    x: n,
                    method: "submodular",
                    trial,
                    seed,
                    value: res.s.len() as f64,
                    status: if ok {
                        "ok".into()
                    } else {
                        "cert-failed".into()
                    },
                });
            }
            Err(e) => rows.push(Row {
                x: n,
                method: "submodular",
                trial,
                seed,
                value: f64::NAN,
                status: format!("error: {e}"),
            }),
        }
        for (method, order) in [
            ("degree", degree_order(&g)),
            ("random", random_order(n, seed)),
        ] {
            match min_feasible_prefix(&cs, &order) {
                Some(m) => {
                    let mut s: Vec<usize> = order[..m].to_vec();
                    s.sort_unstable();
                    let cert = certify_input_set(&cs.sys, &s, &cs.cfg, 20);
                    let ok = cert.map(|c| c.passed()).unwrap_or(false);
                    rows.push(Row {
                        x: n,
                        method,
                        trial,
                        seed,
                        value: m as f64,
                        status: if ok {
                            "ok".into()
                        } else {
                            "cert-failed".into()
                        },
                    });
                }
                None => rows.push(Row {
                    x: n,
                    method,
                    trial,
                    seed,
                    value: f64::NAN,
                    status: "infeasible".into(),
                }),
            }
        }
        rows
    })
}

fn run_fig2(spec: &ExperimentSpec) -> Vec<Row> {
    let n = spec.sizes[0];
    parallel_trials(&spec.k_range, spec.trials, spec.threads, |k, trial, _| {
        // one network per trial index, shared across budgets
        let seed = trial_seed(spec.seed, n, trial);
        let fail = |status: &str| -> Vec<Row> {
            METHODS
                .iter()
                .map(|m| Row {
                    x: k,
                    method: m,
                    trial,
                    seed,
                    value: f64::NAN,
                    status: status.to_string(),
                })
                .collect()
        };
        let g = match geometric_consensus_graph(
            n,
            spec.degree,
            spec.range_max,
            seed,
            Closure::UnionDirectedDegree,
        ) {
            Ok(g) => g,
            Err(e) => return fail(&format!("generation failed: {e}")),
        };
        let sys = match consensus_system(&g) {
            Ok(sys) => sys,
            Err(e) => return fail(&format!("degenerate graph: {e}")),
        };
        let cs = match ConstraintSystem::build(&sys, &FieldConfig::with_seed(seed)) {
            Ok(cs) => cs,
            Err(e) => return fail(&format!("constraint build failed: {e}")),
        };
        let wg = WeightedGraph::random_weights(&g, seed);
        let mcfg = MetricConfig {
            t: spec.t,
            x0_seed: seed,
            ..MetricConfig::default()
        };
        let objective = as_objective(MetricKind::Convergence, &wg, &mcfg);
        let error_of = |s: &[usize]| convergence_error(&wg, s, &mcfg);

        let mut rows = Vec::with_capacity(3);
        let params = GreedyParams {
            samples: Some(spec.cg_samples),
            seed,
            ..GreedyParams::default()
        };
        match select_joint(&cs, &objective, k, &params) {
            Ok(res) => {
                let ok = res
                    .certificate
                    .as_ref()
                    .map(|c| c.passed())
                    .unwrap_or(false);
                rows.push(Row {
                    x: k,
                    method: "submodular",
                    trial,
                    seed,
                    value: error_of(&res.s),
                    status: if ok {
                        "ok".into()
                    } else {
                        "cert-failed".into()
                    },
                });
            }
            Err(ModelError::KTooSmall { min_k, .. }) => rows.push(Row {
                x: k,
                method: "submodular",
                trial,
                seed,
                value: f64::NAN,
                status: format!("infeasible k (need {min_k})"),
            }),
            Err(e) => rows.push(Row {
                x: k,
                method: "submodular",
                trial,
                seed,
                value: f64::NAN,
                status: format!("error: {e}"),
            }),
        }
        for (method, order) in [
            ("degree", degree_order(&g)),
            ("random", random_order(n, seed)),
        ] {
            let mut s: Vec<usize> = order[..k.min(n)].to_vec();
            s.sort_unstable();
            rows.push(Row {
                x: k,
                method,
                trial,
                seed,
                value: error_of(&s),
                status: "ok".into(),
            });
        }
        rows
    })
}

fn write_csv(path: &Path, spec: &ExperimentSpec, rows: &[Row]) -> std::io::Result<()> {
    let xname = match spec.id {
        ExperimentId::Fig1 => "n",
        ExperimentId::Fig2 => "k",
    };
    let vname = match spec.id {
        ExperimentId::Fig1 => "input_count",
        ExperimentId::Fig2 => "error",
    };
    let mut out = format!("{xname},method,trial,seed,{vname},status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.x,
            r.method,
            r.trial,
            r.seed,
            if r.value.is_nan() {
                "".to_string()
            } else {
                format!("{:.9}", r.value)
            },
            r.status
        ));
    }
    fs::write(path, out)
}

fn write_svg(
    path: &Path,
    spec: &ExperimentSpec,
    means: &[(usize, String, f64)],
) -> std::io::Result<()> {
    let (title, x_label, y_label) = match spec.id {
        ExperimentId::Fig1 => (
            "Minimum input set size vs network size",
            "network size n",
            "mean selected inputs",
        ),
        ExperimentId::Fig2 => (
            "Convergence error vs input budget",
            "input budget k",
            "mean convergence error",
        ),
    };
    let series = METHODS
        .iter()
        .map(|m| {
            let pts: Vec<(f64, f64)> = means
                .iter()
                .filter(|(_, method, _)| method == m)
                .map(|&(x, _, v)| (x as f64, v))
                .collect();
            (m.to_string(), pts)
        })
        .collect();
    let plot = LinePlot {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        series,
    };
    fs::write(path, plot.render())
}
