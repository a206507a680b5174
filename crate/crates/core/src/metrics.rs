//! Performance metrics over weighted consensus networks: pinned-consensus
//! simulation through the matrix exponential, convergence error, network
//! coherence, and wrappers that turn the supermodular nonincreasing metrics
//! into monotone nondecreasing submodular objectives.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::structmat::Stream;
use crate::sysmodel::Graph;
use crate::ModelError;

/// Undirected graph with positive edge weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub base: Graph,
    /// Canonical (i < j) edge keys.
    pub weights: BTreeMap<(usize, usize), f64>,
}

impl WeightedGraph {
    /// Weights drawn uniformly from (0, 1], one fixed draw per seed, so the
    /// metric is a deterministic set function within a run.
    pub fn random_weights(base: &Graph, seed: u64) -> WeightedGraph {
        let mut st = Stream::new(seed ^ 0x77656967);
        let mut weights = BTreeMap::new();
        for (i, j) in base.undirected_edges() {
            weights.insert((i, j), 1.0 - st.next_f64());
        }
        WeightedGraph {
            base: base.clone(),
            weights,
        }
    }

    pub fn unit_weights(base: &Graph) -> WeightedGraph {
        let weights = base
            .undirected_edges()
            .into_iter()
            .map(|e| (e, 1.0))
            .collect();
        WeightedGraph {
            base: base.clone(),
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Weighted Laplacian, dense row-major.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.n();
        let mut l = vec![0.0; n * n];
        for (&(i, j), &w) in &self.weights {
            l[i * n + i] += w;
            l[j * n + j] += w;
            l[i * n + j] -= w;
            l[j * n + i] -= w;
        }
        l
    }
}

/// Evaluation-time settings for the convergence-error metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Evaluation time.
    pub t: f64,
    /// Norm order, 1 <= p < infinity.
    pub p: f64,
    /// Pinned input value.
    pub x_star: f64,
    /// Seed for the uniform random initial state.
    pub x0_seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            t: 1.0,
            p: 2.0,
            x_star: 1.0,
            x0_seed: 0,
        }
    }
}

impl MetricConfig {
    pub fn initial_state(&self, n: usize) -> Vec<f64> {
        let mut st = Stream::new(self.x0_seed ^ 0x78302020);
        (0..n).map(|_| st.next_f64()).collect()
    }
}

// ---------------------------------------------------------------------------
// dense f64 helpers

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            let av = a[i * n + l];
            if av == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += av * b[l * n + j];
            }
        }
    }
    out
}

fn mat_vec(a: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
        .collect()
}

/// Solve A X = B in place via LU with partial pivoting; None when singular
/// to working precision.
fn solve(a: &[f64], b: &[f64], n: usize, ncols: usize) -> Option<Vec<f64>> {
    let mut lu = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (pivot, mag) = (col..n)
            .map(|r| (r, lu[r * n + col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if mag < 1e-12 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                lu.swap(col * n + c, pivot * n + c);
            }
            for c in 0..ncols {
                x.swap(col * ncols + c, pivot * ncols + c);
            }
        }
        let inv = 1.0 / lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = 0.0;
            for c in col + 1..n {
                lu[r * n + c] -= factor * lu[col * n + c];
            }
            for c in 0..ncols {
                x[r * ncols + c] -= factor * x[col * ncols + c];
            }
        }
    }
    for col in (0..n).rev() {
        let inv = 1.0 / lu[col * n + col];
        for c in 0..ncols {
            x[col * ncols + c] *= inv;
        }
        for r in 0..col {
            let factor = lu[r * n + col];
            for c in 0..ncols {
                x[r * ncols + c] -= factor * x[col * ncols + c];
            }
        }
    }
    Some(x)
}

/// Matrix exponential by order-13 Pade approximation with scaling and
/// squaring.
pub(crate) fn expm(a: &[f64], n: usize) -> Vec<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scale = 1.0 / (1u64 << s) as f64;
    let a1: Vec<f64> = a.iter().map(|&v| v * scale).collect();

    let ident: Vec<f64> = {
        let mut i = vec![0.0; n * n];
        for d in 0..n {
            i[d * n + d] = 1.0;
        }
        i
    };
    let a2 = mat_mul(&a1, &a1, n);
    let a4 = mat_mul(&a2, &a2, n);
    let a6 = mat_mul(&a4, &a2, n);

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Vec<f64> {
        (0..n * n)
            .map(|i| c6 * a6[i] + c4 * a4[i] + c2 * a2[i] + c0 * ident[i])
            .collect()
    };
    let w1 = lin(B[13], B[11], B[9], 0.0);
    let inner = mat_mul(&a6, &w1, n);
    let w2 = lin(B[7], B[5], B[3], B[1]);
    let u_pre: Vec<f64> = (0..n * n).map(|i| inner[i] + w2[i]).collect();
    let u = mat_mul(&a1, &u_pre, n);

    let z1 = lin(B[12], B[10], B[8], 0.0);
    let inner_v = mat_mul(&a6, &z1, n);
    let z2 = lin(B[6], B[4], B[2], B[0]);
    let v: Vec<f64> = (0..n * n).map(|i| inner_v[i] + z2[i]).collect();

    let vm_u: Vec<f64> = (0..n * n).map(|i| v[i] - u[i]).collect();
    let vp_u: Vec<f64> = (0..n * n).map(|i| v[i] + u[i]).collect();
    let mut r = solve(&vm_u, &vp_u, n, n).expect("Pade denominator singular");
    for _ in 0..s {
        r = mat_mul(&r, &r, n);
    }
    r
}

// ---------------------------------------------------------------------------
// metrics

/// Pinned consensus state at time `t`: inputs hold `x_star`, the remaining
/// states relax under the grounded Laplacian. With an empty input set the
/// whole network evolves freely.
pub fn simulate_consensus(
    g: &WeightedGraph,
    s: &[usize],
    x0: &[f64],
    x_star: f64,
    t: f64,
) -> Vec<f64> {
    let n = g.n();
    assert_eq!(x0.len(), n);
    let pinned = {
        let mut p = vec![false; n];
        for &i in s {
            p[i] = true;
        }
        p
    };
    let followers: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
    let nf = followers.len();
    let l = g.laplacian();
    let mut lff = vec![0.0; nf * nf];
    for (ri, &i) in followers.iter().enumerate() {
        for (ci, &j) in followers.iter().enumerate() {
            lff[ri * nf + ci] = -t * l[i * n + j];
        }
    }
    let e = expm(&lff, nf);
    let dev: Vec<f64> = followers.iter().map(|&i| x0[i] - x_star).collect();
    let moved = mat_vec(&e, &dev, nf);
    let mut out = vec![x_star; n];
    for (ri, &i) in followers.iter().enumerate() {
        out[i] = x_star + moved[ri];
    }
    out
}

/// `||x(t) - x_star 1||_p` for a nonempty input set. With `s` empty, the
/// free system's deviation from its own average (the wrapper's
/// normalization baseline).
pub fn convergence_error(g: &WeightedGraph, s: &[usize], cfg: &MetricConfig) -> f64 {
    convergence_error_power(g, s, cfg).powf(1.0 / cfg.p)
}

/// Sum of per-node deviations to the p-th power: the p-norm raised to p.
/// This is the supermodular form of the error (the outer 1/p root breaks
/// supermodularity), it splits additively over connected components, and
/// x -> x^(1/p) is strictly increasing, so both forms rank input sets
/// identically.
pub fn convergence_error_power(g: &WeightedGraph, s: &[usize], cfg: &MetricConfig) -> f64 {
    let n = g.n();
    let x0 = cfg.initial_state(n);
    if s.is_empty() {
        let x = simulate_consensus(g, &[], &x0, 0.0, cfg.t);
        let avg = x0.iter().sum::<f64>() / n as f64;
        x.iter().map(|&v| (v - avg).abs().powf(cfg.p)).sum()
    } else {
        let x = simulate_consensus(g, s, &x0, cfg.x_star, cfg.t);
        x.iter().map(|&v| (v - cfg.x_star).abs().powf(cfg.p)).sum()
    }
}

/// Steady-state mean-square deviation under white process noise:
/// `trace(Lff^{-1}) / (2 n)` over the follower block. Zero when every node
/// is an input; an error when some follower is disconnected from the inputs.
/// The normalization is a fixed positive constant per instance, so it never
/// changes which input set wins.
pub fn coherence(g: &WeightedGraph, s: &[usize]) -> Result<f64, ModelError> {
    if s.is_empty() {
        return Err(ModelError::EmptyInputSet);
    }
    let n = g.n();
    let pinned = {
        let mut p = vec![false; n];
        for &i in s {
            p[i] = true;
        }
        p
    };
    let followers: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
    let nf = followers.len();
    if nf == 0 {
        return Ok(0.0);
    }
    let l = g.laplacian();
    let mut lff = vec![0.0; nf * nf];
    for (ri, &i) in followers.iter().enumerate() {
        for (ci, &j) in followers.iter().enumerate() {
            lff[ri * nf + ci] = l[i * n + j];
        }
    }
    let ident: Vec<f64> = {
        let mut m = vec![0.0; nf * nf];
        for d in 0..nf {
            m[d * nf + d] = 1.0;
        }
        m
    };
    let inv = solve(&lff, &ident, nf, nf).ok_or(ModelError::UnboundedVariance)?;
    let trace: f64 = (0..nf).map(|d| inv[d * nf + d]).sum();
    if !trace.is_finite() || trace < 0.0 {
        return Err(ModelError::UnboundedVariance);
    }
    Ok(trace / (2.0 * n as f64))
}

type EvalFn = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// Monotone submodular set objective on ground `0..n`.
#[derive(Clone)]
pub struct SubmodularObjective {
    pub n: usize,
    pub monotone: bool,
    /// Component decomposition `f(S) = sum_i f_i(S & V_i)` when the metric
    /// splits over connected components.
    pub components: Option<Vec<Vec<usize>>>,
    eval: EvalFn,
}

impl SubmodularObjective {
    pub fn from_fn(n: usize, eval: impl Fn(&[usize]) -> f64 + Send + Sync + 'static) -> Self {
        SubmodularObjective {
            n,
            monotone: true,
            components: None,
            eval: Arc::new(eval),
        }
    }

    /// Weighted coverage: element e covers `covers[e]`; f(S) = total weight
    /// of covered items.
    pub fn coverage(n: usize, covers: Vec<Vec<usize>>, item_weights: Vec<f64>) -> Self {
        assert_eq!(covers.len(), n);
        SubmodularObjective {
            n,
            monotone: true,
            components: None,
            eval: Arc::new(move |s: &[usize]| {
                let mut hit = vec![false; item_weights.len()];
                for &e in s {
                    for &it in &covers[e] {
                        hit[it] = true;
                    }
                }
                hit.iter()
                    .zip(&item_weights)
                    .filter(|(&h, _)| h)
                    .map(|(_, &w)| w)
                    .sum()
            }),
        }
    }

    pub fn modular(weights: Vec<f64>) -> Self {
        let n = weights.len();
        SubmodularObjective {
            n,
            monotone: true,
            components: None,
            eval: Arc::new(move |s: &[usize]| s.iter().map(|&e| weights[e]).sum()),
        }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        SubmodularObjective {
            n,
            monotone: true,
            components: None,
            eval: Arc::new(move |_| value),
        }
    }

    pub fn evaluate(&self, s: &[usize]) -> f64 {
        (self.eval)(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Convergence,
    Coherence,
}

/// Reward wrapper over a supermodular nonincreasing cost: per connected
/// component, `f_c(S_c) = C_c - cost_c(S_c)` with `f_c(empty) = 0` and
/// `C_c = max(baseline, 2 max_v cost_c({v}))`. The doubled singleton cap
/// makes every Def-style submodularity instance through the empty set hold
/// outright (the marginal of v at the empty set is at least C_c/2, while any
/// later marginal is at most the smallest singleton cost), and the metric
/// literature gives the nonempty instances. Scaling C_c never changes the
/// argmax.
pub fn as_objective(
    metric: MetricKind,
    g: &WeightedGraph,
    cfg: &MetricConfig,
) -> SubmodularObjective {
    let comps = g.base.weak_components();
    let mut per_comp: Vec<(Vec<usize>, WeightedGraph, f64)> = Vec::new();
    for comp in &comps {
        let sub = induced_weighted(g, comp);
        let baseline = match metric {
            MetricKind::Convergence => convergence_error_power(&sub, &[], cfg),
            MetricKind::Coherence => 0.0,
        };
        let max_singleton = (0..comp.len())
            .map(|v| component_cost(metric, &sub, &[v], cfg))
            .fold(0.0, f64::max);
        let cap = baseline.max(2.0 * max_singleton);
        per_comp.push((comp.clone(), sub, cap));
    }
    let metric_kind = metric;
    let cfg = cfg.clone();
    let decomposition = (comps.len() > 1).then(|| comps.clone());
    let mut obj = SubmodularObjective::from_fn(g.n(), move |s: &[usize]| {
        let mut total = 0.0;
        for (comp, sub, cap) in &per_comp {
            let local: Vec<usize> = s
                .iter()
                .filter_map(|&v| comp.binary_search(&v).ok())
                .collect();
            if local.is_empty() {
                continue;
            }
            total += cap - component_cost(metric_kind, sub, &local, &cfg);
        }
        total
    });
    obj.components = decomposition;
    obj
}

fn component_cost(metric: MetricKind, sub: &WeightedGraph, s: &[usize], cfg: &MetricConfig) -> f64 {
    match metric {
        MetricKind::Convergence => convergence_error_power(sub, s, cfg),
        MetricKind::Coherence => coherence(sub, s).unwrap_or(f64::INFINITY),
    }
}

fn induced_weighted(g: &WeightedGraph, nodes: &[usize]) -> WeightedGraph {
    let mut base = Graph::undirected(nodes.len());
    let mut weights = BTreeMap::new();
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            if a < b {
                let w = g.weight(i, j);
                if w > 0.0 {
                    base.add_edge(a, b);
                    weights.insert((a, b), w);
                }
            }
        }
    }
    WeightedGraph { base, weights }
}
