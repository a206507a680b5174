//! Input-set selection algorithms: minimum input set via matroid
//! intersection over the dual constraint matroids, the strongly-connected
//! greedy fast path, continuous greedy over the multilinear relaxation with
//! swap rounding, exact selection for modular objectives, and the
//! performance/controllability trade-off greedy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::constraints::{
    build_matroids, certify_input_set, Certificate, ConstraintSystem, ControllabilityMatroids,
};
use crate::matroid::{complement, max_cardinality_intersection, max_weight_common_basis, Matroid};
pub use crate::metrics::SubmodularObjective;
use crate::structmat::Stream;
use crate::sysmodel::is_strongly_connected;
use crate::ModelError;

/// Outcome of a selection run. `s` holds state indices; ground-set sizes and
/// iteration details go to `trace`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub s: Vec<usize>,
    pub objective: f64,
    pub certificate: Option<Certificate>,
    pub algorithm: String,
    pub trace: Vec<String>,
    pub seed: u64,
}

const CERT_Z_SAMPLES: usize = 20;

/// Minimum-size input set for structural controllability: a maximum common
/// independent set of the dual constraint matroids, complemented.
pub fn min_input_set(cs: &ConstraintSystem) -> Result<SelectionResult, ModelError> {
    let m1_star = cs.m1().dual();
    let m2_star = cs.m2().dual();
    let r = max_cardinality_intersection(&m1_star, &m2_star)?;
    let ground_s = complement(cs.eligible.len(), &r);
    let s: Vec<usize> = ground_s.iter().map(|&g| cs.eligible[g]).collect();
    let certificate = certify_input_set(&cs.sys, &s, &cs.cfg, CERT_Z_SAMPLES)?;
    Ok(SelectionResult {
        objective: s.len() as f64,
        trace: vec![
            format!("ground {} non-input set {}", cs.eligible.len(), r.len()),
            format!("certificate pass: {}", certificate.passed()),
        ],
        certificate: Some(certificate),
        algorithm: "min-input-set/matroid-intersection".into(),
        s,
        seed: cs.cfg.seed,
    })
}

/// Strongly-connected fast path: one ascending-index greedy pass over the
/// single remaining matroid constraint, exactly one independence query per
/// ground element. The pass keeps at least one input (the all-states set is
/// never independent in the dual once an input is required for the pencil
/// side).
pub fn min_input_set_strong(cs: &ConstraintSystem) -> Result<SelectionResult, ModelError> {
    if !is_strongly_connected(&cs.sys.state_graph()) {
        return Err(ModelError::NotStronglyConnected);
    }
    let m1_star = cs.m1().dual();
    let ground = cs.eligible.len();
    let mut r: Vec<usize> = Vec::new();
    let mut trace = Vec::with_capacity(ground);
    for g in 0..ground {
        let mut candidate = r.clone();
        candidate.push(g);
        let take = candidate.len() < ground && m1_star.is_independent(&candidate);
        trace.push(format!("query {g}: keep-out={take}"));
        if take {
            r = candidate;
        }
    }
    let ground_s = complement(ground, &r);
    let s: Vec<usize> = ground_s.iter().map(|&g| cs.eligible[g]).collect();
    let certificate = certify_input_set(&cs.sys, &s, &cs.cfg, CERT_Z_SAMPLES)?;
    Ok(SelectionResult {
        objective: s.len() as f64,
        trace,
        certificate: Some(certificate),
        algorithm: "min-input-set/strong-greedy".into(),
        s,
        seed: cs.cfg.seed,
    })
}

/// Fractional point in the common base polytope with its build trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionalPoint {
    pub y: Vec<f64>,
    /// (common basis, step width) pairs whose weighted incidence sums to y.
    pub basis_trace: Vec<(Vec<usize>, f64)>,
}

/// Tuning knobs for the continuous greedy stage.
#[derive(Debug, Clone)]
pub struct GreedyParams {
    /// Step width; defaults to 1/(9 k^2).
    pub delta: Option<f64>,
    /// Monte-Carlo draws per marginal estimate; defaults to
    /// ceil(10 k^2 ln(n+1)). Ignored below the exact-enumeration cutoff.
    pub samples: Option<usize>,
    /// Ground-set size up to which marginals are computed by exact
    /// enumeration over the support of y.
    pub exact_cutoff: usize,
    pub seed: u64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        GreedyParams {
            delta: None,
            samples: None,
            exact_cutoff: 12,
            seed: 0,
        }
    }
}

/// Memoizing wrapper so repeated set evaluations during marginal estimation
/// stay cheap. Keys are bitmasks; ground sets above 64 skip the cache.
struct Memo<'a> {
    f: &'a SubmodularObjective,
    cache: HashMap<u64, f64>,
}

impl<'a> Memo<'a> {
    fn new(f: &'a SubmodularObjective) -> Self {
        Memo {
            f,
            cache: HashMap::new(),
        }
    }

    fn eval_mask(&mut self, mask: u64) -> f64 {
        if let Some(&v) = self.cache.get(&mask) {
            return v;
        }
        let set: Vec<usize> = (0..64).filter(|&i| mask >> i & 1 == 1).collect();
        let v = self.f.evaluate(&set);
        self.cache.insert(mask, v);
        v
    }

    fn eval_set(&mut self, set: &[usize]) -> f64 {
        if self.f.n <= 64 {
            let mask = set.iter().fold(0u64, |m, &i| m | 1 << i);
            self.eval_mask(mask)
        } else {
            self.f.evaluate(set)
        }
    }
}

/// Expected marginal gains `E[f(R + j) - f(R - j)]` (the multilinear
/// gradient) for R drawn by including each i independently with probability
/// y_i, by exact enumeration over the support. For modular objectives this
/// is the weight itself, so the direction step recovers the exact optimum.
#[allow(clippy::needless_range_loop)]
fn exact_marginals(memo: &mut Memo, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let support: Vec<usize> = (0..n).filter(|&i| y[i] > 0.0 && y[i] < 1.0).collect();
    let fixed: u64 = (0..n).filter(|&i| y[i] >= 1.0).fold(0, |m, i| m | 1 << i);
    let mut omega = vec![0.0; n];
    for mask in 0u64..1 << support.len() {
        let mut prob = 1.0;
        let mut rmask = fixed;
        for (b, &i) in support.iter().enumerate() {
            if mask >> b & 1 == 1 {
                prob *= y[i];
                rmask |= 1 << i;
            } else {
                prob *= 1.0 - y[i];
            }
        }
        if prob == 0.0 {
            continue;
        }
        let base = memo.eval_mask(rmask);
        for j in 0..n {
            if rmask >> j & 1 == 1 {
                omega[j] += prob * (base - memo.eval_mask(rmask & !(1 << j)));
            } else {
                omega[j] += prob * (memo.eval_mask(rmask | 1 << j) - base);
            }
        }
    }
    omega
}

#[allow(clippy::needless_range_loop)]
fn sampled_marginals(memo: &mut Memo, y: &[f64], samples: usize, st: &mut Stream) -> Vec<f64> {
    let n = y.len();
    let mut omega = vec![0.0; n];
    for _ in 0..samples {
        let r: Vec<usize> = (0..n).filter(|&i| st.next_f64() < y[i]).collect();
        let base = memo.eval_set(&r);
        for j in 0..n {
            if r.binary_search(&j).is_ok() {
                let without: Vec<usize> = r.iter().copied().filter(|&v| v != j).collect();
                omega[j] += base - memo.eval_set(&without);
            } else {
                let mut rj = r.clone();
                rj.push(j);
                rj.sort_unstable();
                omega[j] += memo.eval_set(&rj) - base;
            }
        }
    }
    for o in omega.iter_mut() {
        *o /= samples as f64;
    }
    omega
}

/// Continuous greedy over the common base polytope: delta = 1/(9 k^2) steps,
/// each moving toward the maximum-weight common basis under the estimated
/// marginal gains. Returns y(1) with the full basis trace.
pub fn continuous_greedy(
    f: &SubmodularObjective,
    m1_hat: &Matroid,
    m2_hat: &Matroid,
    k: usize,
    params: &GreedyParams,
) -> Result<FractionalPoint, ModelError> {
    let n = m1_hat.ground_size();
    assert_eq!(f.n, n, "objective ground mismatch");
    let delta = params.delta.unwrap_or(1.0 / (9.0 * (k * k) as f64));
    let samples = params
        .samples
        .unwrap_or_else(|| (10.0 * (k * k) as f64 * ((n + 1) as f64).ln()).ceil() as usize)
        .max(1);
    let mut st = Stream::new(params.seed ^ 0x63677265);
    let mut memo = Memo::new(f);

    let mut y = vec![0.0; n];
    let mut basis_trace = Vec::new();
    let mut t = 0.0;
    while t < 1.0 - 1e-12 {
        let step = delta.min(1.0 - t);
        let omega = if n <= params.exact_cutoff {
            exact_marginals(&mut memo, &y)
        } else {
            sampled_marginals(&mut memo, &y, samples, &mut st)
        };
        let basis = max_weight_common_basis(m1_hat, m2_hat, &omega)?;
        for &i in &basis {
            y[i] = (y[i] + step).min(1.0);
        }
        basis_trace.push((basis, step));
        t += step;
    }
    Ok(FractionalPoint { y, basis_trace })
}

/// Monte-Carlo estimate of the multilinear relaxation F(y) = E[f(R)], with
/// its standard error.
pub fn multilinear_estimate(
    f: &SubmodularObjective,
    y: &[f64],
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut st = Stream::new(seed ^ 0x6d756c74);
    let n = y.len();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let r: Vec<usize> = (0..n).filter(|&i| st.next_f64() < y[i]).collect();
        let v = f.evaluate(&r);
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

/// Exact multilinear relaxation by enumeration over the fractional support.
pub fn multilinear_exact(f: &SubmodularObjective, y: &[f64]) -> f64 {
    let n = y.len();
    let support: Vec<usize> = (0..n).filter(|&i| y[i] > 0.0 && y[i] < 1.0).collect();
    assert!(
        support.len() <= 26,
        "support too large for exact enumeration"
    );
    let fixed: Vec<usize> = (0..n).filter(|&i| y[i] >= 1.0).collect();
    let mut total = 0.0;
    for mask in 0u64..1 << support.len() {
        let mut prob = 1.0;
        let mut set = fixed.clone();
        for (b, &i) in support.iter().enumerate() {
            if mask >> b & 1 == 1 {
                prob *= y[i];
                set.push(i);
            } else {
                prob *= 1.0 - y[i];
            }
        }
        if prob == 0.0 {
            continue;
        }
        set.sort_unstable();
        total += prob * f.evaluate(&set);
    }
    total
}

/// Randomized swap rounding over the traced bases: repeatedly merge the two
/// heaviest bases by element swaps that keep both sides common bases; when
/// no simultaneous swap pair exists, keep one whole basis with probability
/// proportional to weight. The output is always a common basis.
pub fn swap_round(
    point: &FractionalPoint,
    m1_hat: &Matroid,
    m2_hat: &Matroid,
    seed: u64,
) -> Vec<usize> {
    assert!(!point.basis_trace.is_empty(), "empty basis trace");
    let mut st = Stream::new(seed ^ 0x73776170);
    let is_common_basis =
        |b: &[usize]| -> bool { m1_hat.is_independent(b) && m2_hat.is_independent(b) };

    // merge queue ordered by weight (heaviest first), deterministic on ties
    let mut pool: Vec<(f64, Vec<usize>)> = point
        .basis_trace
        .iter()
        .map(|(b, w)| (*w, b.clone()))
        .collect();
    while pool.len() > 1 {
        pool.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let (w1, mut b1) = pool.remove(0);
        let (w2, mut b2) = pool.remove(0);
        loop {
            if b1 == b2 {
                break;
            }
            let only1: Vec<usize> = b1.iter().copied().filter(|v| !b2.contains(v)).collect();
            let only2: Vec<usize> = b2.iter().copied().filter(|v| !b1.contains(v)).collect();
            let mut swap: Option<(usize, usize)> = None;
            'outer: for &i in &only1 {
                for &j in &only2 {
                    let c1 = swapped_sorted(&b1, i, j);
                    let c2 = swapped_sorted(&b2, j, i);
                    if is_common_basis(&c1) && is_common_basis(&c2) {
                        swap = Some((i, j));
                        break 'outer;
                    }
                }
            }
            match swap {
                Some((i, j)) => {
                    if st.next_f64() < w1 / (w1 + w2) {
                        b2 = swapped_sorted(&b2, j, i);
                    } else {
                        b1 = swapped_sorted(&b1, i, j);
                    }
                }
                None => {
                    // no simultaneous exchange: keep one side outright
                    if st.next_f64() < w1 / (w1 + w2) {
                        b2 = b1.clone();
                    } else {
                        b1 = b2.clone();
                    }
                }
            }
        }
        pool.push((w1 + w2, b1));
    }
    pool.pop().expect("nonempty pool").1
}

fn swapped_sorted(b: &[usize], out: usize, inn: usize) -> Vec<usize> {
    let mut v: Vec<usize> = b.iter().copied().filter(|&x| x != out).collect();
    v.push(inn);
    v.sort_unstable();
    v
}

/// Joint performance/controllability selection: continuous greedy on the
/// extended matroid pair, swap rounding, certificate. The objective is over
/// ground indices into `cs.eligible`; the result reports state indices.
pub fn select_joint(
    cs: &ConstraintSystem,
    f: &SubmodularObjective,
    k: usize,
    params: &GreedyParams,
) -> Result<SelectionResult, ModelError> {
    let m = build_matroids(cs, k)?;
    select_joint_with(
        cs,
        &m,
        &m.m1_hat,
        &m.m2_hat,
        f,
        k,
        params,
        "select-joint/cg-swap",
    )
}

/// Strongly-connected variant: only the rank-side matroid constrains the
/// selection, so the pair is (M1-hat, U_k).
pub fn select_joint_strong(
    cs: &ConstraintSystem,
    f: &SubmodularObjective,
    k: usize,
    params: &GreedyParams,
) -> Result<SelectionResult, ModelError> {
    if !is_strongly_connected(&cs.sys.state_graph()) {
        return Err(ModelError::NotStronglyConnected);
    }
    let m = build_matroids(cs, k)?;
    let u_k = Matroid::uniform(cs.eligible.len(), k);
    select_joint_with(cs, &m, &m.m1_hat, &u_k, f, k, params, "select-joint/strong")
}

#[allow(clippy::too_many_arguments)]
fn select_joint_with(
    cs: &ConstraintSystem,
    m: &ControllabilityMatroids,
    left: &Matroid,
    right: &Matroid,
    f: &SubmodularObjective,
    k: usize,
    params: &GreedyParams,
    tag: &str,
) -> Result<SelectionResult, ModelError> {
    let point = continuous_greedy(f, left, right, k, params)?;
    let ground = swap_round(&point, left, right, params.seed);
    let s: Vec<usize> = ground.iter().map(|&g| m.eligible[g]).collect();
    let certificate = certify_input_set(&cs.sys, &s, &cs.cfg, CERT_Z_SAMPLES)?;
    let sum_y: f64 = point.y.iter().sum();
    Ok(SelectionResult {
        objective: f.evaluate(&ground),
        trace: vec![
            format!("k={k} r1={} r2={}", m.r1, m.r2),
            format!("cg steps {} sum(y) {:.6}", point.basis_trace.len(), sum_y),
            format!("certificate pass: {}", certificate.passed()),
        ],
        certificate: Some(certificate),
        algorithm: tag.into(),
        s,
        seed: params.seed,
    })
}

/// Exact optimum for modular objectives via weighted matroid intersection
/// over the extended pair.
pub fn select_joint_modular(
    cs: &ConstraintSystem,
    weights: &[f64],
    k: usize,
) -> Result<SelectionResult, ModelError> {
    let m = build_matroids(cs, k)?;
    assert_eq!(weights.len(), m.eligible.len(), "weights over ground set");
    let ground = max_weight_common_basis(&m.m1_hat, &m.m2_hat, weights)?;
    let s: Vec<usize> = ground.iter().map(|&g| m.eligible[g]).collect();
    let certificate = certify_input_set(&cs.sys, &s, &cs.cfg, CERT_Z_SAMPLES)?;
    let objective: f64 = ground.iter().map(|&g| weights[g]).sum();
    Ok(SelectionResult {
        objective,
        trace: vec![
            format!("k={k} r1={} r2={}", m.r1, m.r2),
            format!("certificate pass: {}", certificate.passed()),
        ],
        certificate: Some(certificate),
        algorithm: "select-joint/modular-exact".into(),
        s,
        seed: cs.cfg.seed,
    })
}

/// Which controllability index the trade-off greedy adds to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffIndex {
    /// c1 + c2 (general systems)
    General,
    /// c (strongly connected fast path)
    Strong,
}

/// Greedy maximization of `f(S) + eta * gci(S)` under `|S| <= k`; ties break
/// to the smallest ground index. Works even when k cannot reach
/// controllability; the certificate is attached for information.
pub fn select_tradeoff(
    cs: &ConstraintSystem,
    f: &SubmodularObjective,
    eta: f64,
    k: usize,
    index: TradeoffIndex,
) -> Result<SelectionResult, ModelError> {
    if index == TradeoffIndex::Strong && !is_strongly_connected(&cs.sys.state_graph()) {
        return Err(ModelError::NotStronglyConnected);
    }
    let ground = cs.eligible.len();
    assert_eq!(f.n, ground, "objective ground mismatch");
    let gci = |ground_set: &[usize]| -> f64 {
        let states: Vec<usize> = ground_set.iter().map(|&g| cs.eligible[g]).collect();
        match index {
            TradeoffIndex::General => (cs.gci_c1(&states) + cs.gci_c2(&states)) as f64,
            TradeoffIndex::Strong => cs.gci_strong(&states) as f64,
        }
    };
    let mut s_ground: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut current = f.evaluate(&[]) + eta * gci(&[]);
    for round in 0..k.min(ground) {
        let mut best: Option<(f64, usize)> = None;
        for v in 0..ground {
            if s_ground.binary_search(&v).is_ok() {
                continue;
            }
            let mut cand = s_ground.clone();
            cand.push(v);
            cand.sort_unstable();
            let val = f.evaluate(&cand) + eta * gci(&cand);
            let better = match best {
                None => true,
                Some((bv, _)) => val > bv + 1e-12,
            };
            if better {
                best = Some((val, v));
            }
        }
        let Some((val, v)) = best else { break };
        s_ground.push(v);
        s_ground.sort_unstable();
        trace.push(format!("round {round}: add {v} objective {val:.6}"));
        current = val;
    }
    let states: Vec<usize> = s_ground.iter().map(|&g| cs.eligible[g]).collect();
    let certificate = certify_input_set(&cs.sys, &states, &cs.cfg, CERT_Z_SAMPLES)?;
    Ok(SelectionResult {
        objective: current,
        trace,
        certificate: Some(certificate),
        algorithm: match index {
            TradeoffIndex::General => "tradeoff/greedy-c1c2".into(),
            TradeoffIndex::Strong => "tradeoff/greedy-strong".into(),
        },
        s: states,
        seed: cs.cfg.seed,
    })
}
