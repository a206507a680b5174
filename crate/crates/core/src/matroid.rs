//! Matroid oracles and intersection algorithms.
//!
//! A [`Matroid`] answers independence and rank queries for one of several
//! realizations: uniform, linear (over a cached generic field substitution),
//! partition, union, dual, or an arbitrary rank function. The generic
//! algorithms — greedy rank, matroid-partition augmentation for unions,
//! maximum-cardinality and maximum-weight matroid intersection — consume only
//! the oracle interface.

use std::fmt;
use std::sync::Arc;

use crate::structmat::{self, rank_of_columns, FieldConfig, Stream, StructuredMatrix};
use crate::{MatroidError, StructError};

type RankFn = Arc<dyn Fn(&[usize]) -> usize + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Uniform {
        k: usize,
    },
    Linear(LinearRep),
    Partition {
        /// Class id per element; `None` marks a loop.
        class_of: Arc<Vec<Option<usize>>>,
        n_classes: usize,
    },
    Union(Arc<Matroid>, Arc<Matroid>),
    Dual(Arc<Matroid>),
    RankDefined(RankFn),
}

#[derive(Clone)]
struct LinearRep {
    /// One coherent generic point, cached at construction: all independence
    /// queries against this oracle see the same substitution.
    cols: Arc<Vec<Vec<u64>>>,
    prime: u64,
    source: Option<Arc<(StructuredMatrix, FieldConfig)>>,
}

/// Independence/rank oracle over ground set `0..ground_size`.
#[derive(Clone)]
pub struct Matroid {
    n: usize,
    repr: Repr,
}

impl fmt::Debug for Matroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Uniform { k } => format!("uniform(k={k})"),
            Repr::Linear(_) => "linear".into(),
            Repr::Partition { n_classes, .. } => format!("partition({n_classes} classes)"),
            Repr::Union(..) => "union".into(),
            Repr::Dual(_) => "dual".into(),
            Repr::RankDefined(_) => "rank-defined".into(),
        };
        write!(f, "Matroid(n={}, {kind})", self.n)
    }
}

impl Matroid {
    pub fn uniform(n: usize, k: usize) -> Matroid {
        Matroid {
            n,
            repr: Repr::Uniform { k },
        }
    }

    /// Free matroid: everything independent.
    pub fn free(n: usize) -> Matroid {
        Matroid::uniform(n, n)
    }

    /// Column matroid of a structured matrix, using one cached generic
    /// substitution so queries are mutually consistent.
    pub fn linear(m: &StructuredMatrix, cfg: &FieldConfig) -> Result<Matroid, StructError> {
        cfg.validate()?;
        let mut stream = Stream::new(cfg.seed ^ 0x6c69_6e65_6172);
        let dense = structmat::substitute(m, cfg, &mut stream)?;
        let cols: Vec<Vec<u64>> = (0..m.cols).map(|c| dense.column(c)).collect();
        Ok(Matroid {
            n: m.cols,
            repr: Repr::Linear(LinearRep {
                cols: Arc::new(cols),
                prime: cfg.prime,
                source: Some(Arc::new((m.clone(), cfg.clone()))),
            }),
        })
    }

    /// Column matroid of explicit field vectors (already substituted).
    pub fn linear_dense(cols: Vec<Vec<u64>>, prime: u64) -> Matroid {
        Matroid {
            n: cols.len(),
            repr: Repr::Linear(LinearRep {
                cols: Arc::new(cols),
                prime,
                source: None,
            }),
        }
    }

    /// Fresh substitution for a linear oracle built from a structured matrix.
    pub fn redraw(&self, bump: u64) -> Result<Matroid, StructError> {
        match &self.repr {
            Repr::Linear(rep) => match &rep.source {
                Some(src) => {
                    let (m, cfg) = (&src.0, &src.1);
                    let cfg2 = FieldConfig {
                        seed: cfg.seed.wrapping_add(bump.wrapping_mul(0x9e37_79b9)),
                        ..cfg.clone()
                    };
                    Matroid::linear(m, &cfg2)
                }
                None => Ok(self.clone()),
            },
            _ => Ok(self.clone()),
        }
    }

    /// Partition matroid with capacity one per class; `None` entries are loops.
    pub fn partition(class_of: Vec<Option<usize>>) -> Matroid {
        let n_classes = class_of.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
        Matroid {
            n: class_of.len(),
            repr: Repr::Partition {
                class_of: Arc::new(class_of),
                n_classes,
            },
        }
    }

    /// Matroid defined by a rank function satisfying the rank axioms.
    pub fn from_rank_fn(
        n: usize,
        rank: impl Fn(&[usize]) -> usize + Send + Sync + 'static,
    ) -> Matroid {
        Matroid {
            n,
            repr: Repr::RankDefined(Arc::new(rank)),
        }
    }

    /// Dual matroid: rank satisfies `rank*(X) = rank(V - X) + |X| - rank(V)`.
    pub fn dual(&self) -> Matroid {
        // dual(dual(M)) = M; unwrap to keep queries cheap
        if let Repr::Dual(inner) = &self.repr {
            return (**inner).clone();
        }
        Matroid {
            n: self.n,
            repr: Repr::Dual(Arc::new(self.clone())),
        }
    }

    /// Matroid union on a common ground set. Independence is decided by the
    /// matroid-partition augmenting algorithm, never the exponential min
    /// formula.
    pub fn union(a: &Matroid, b: &Matroid) -> Result<Matroid, MatroidError> {
        if a.n != b.n {
            return Err(MatroidError::GroundMismatch(a.n, b.n));
        }
        Ok(Matroid {
            n: a.n,
            repr: Repr::Union(Arc::new(a.clone()), Arc::new(b.clone())),
        })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    fn assert_subset(&self, x: &[usize]) {
        debug_assert!(
            x.windows(2).all(|w| w[0] < w[1]),
            "subset must be sorted and deduplicated"
        );
        if let Some(&bad) = x.iter().find(|&&e| e >= self.n) {
            panic!("element {bad} outside ground set of size {}", self.n);
        }
    }

    pub fn is_independent(&self, x: &[usize]) -> bool {
        self.assert_subset(x);
        match &self.repr {
            Repr::Uniform { k } => x.len() <= *k,
            Repr::Linear(rep) => {
                let cols: Vec<&[u64]> = x.iter().map(|&j| rep.cols[j].as_slice()).collect();
                rank_of_columns(&cols, rep.prime) == x.len()
            }
            Repr::Partition {
                class_of,
                n_classes,
            } => {
                let mut used = vec![false; *n_classes];
                for &e in x {
                    match class_of[e] {
                        None => return false,
                        Some(c) => {
                            if used[c] {
                                return false;
                            }
                            used[c] = true;
                        }
                    }
                }
                true
            }
            Repr::Union(a, b) => union_partitionable(a, b, x),
            Repr::Dual(inner) => {
                let comp = complement(self.n, x);
                inner.rank(&comp) == inner.rank_full()
            }
            Repr::RankDefined(f) => f(x) == x.len(),
        }
    }

    pub fn rank(&self, x: &[usize]) -> usize {
        self.assert_subset(x);
        match &self.repr {
            Repr::Uniform { k } => x.len().min(*k),
            Repr::Linear(rep) => {
                let cols: Vec<&[u64]> = x.iter().map(|&j| rep.cols[j].as_slice()).collect();
                rank_of_columns(&cols, rep.prime)
            }
            Repr::Partition {
                class_of,
                n_classes,
            } => {
                let mut used = vec![false; *n_classes];
                let mut r = 0;
                for &e in x {
                    if let Some(c) = class_of[e] {
                        if !used[c] {
                            used[c] = true;
                            r += 1;
                        }
                    }
                }
                r
            }
            Repr::Union(a, b) => {
                let (x1, x2) = union_partition(a, b, x);
                x1.len() + x2.len()
            }
            Repr::Dual(inner) => {
                let comp = complement(self.n, x);
                inner.rank(&comp) + x.len() - inner.rank_full()
            }
            Repr::RankDefined(f) => f(x),
        }
    }

    /// Greedy rank through the independence oracle only: scan in ascending
    /// index order, keep elements preserving independence. Used as a
    /// cross-check of the kind-specific `rank`.
    pub fn rank_greedy(&self, x: &[usize]) -> usize {
        let mut kept: Vec<usize> = Vec::new();
        for &e in x {
            kept.push(e);
            if !self.is_independent(&kept) {
                kept.pop();
            }
        }
        kept.len()
    }

    pub fn rank_full(&self) -> usize {
        let all: Vec<usize> = (0..self.n).collect();
        self.rank(&all)
    }

    pub fn is_basis(&self, x: &[usize]) -> bool {
        x.len() == self.rank_full() && self.is_independent(x)
    }
}

pub fn complement(n: usize, x: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &e in x {
        inside[e] = true;
    }
    (0..n).filter(|&e| !inside[e]).collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Matroid-partition augmentation: place the elements of `x` into two color
/// classes kept independent in `a` and `b`, reshuffling along a shortest
/// exchange sequence when a direct placement fails. Returns the maximal
/// placement.
fn union_partition(a: &Matroid, b: &Matroid, x: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut x1: Vec<usize> = Vec::new();
    let mut x2: Vec<usize> = Vec::new();
    for &e in x {
        try_place(a, b, &mut x1, &mut x2, e);
    }
    (x1, x2)
}

fn union_partitionable(a: &Matroid, b: &Matroid, x: &[usize]) -> bool {
    let mut x1: Vec<usize> = Vec::new();
    let mut x2: Vec<usize> = Vec::new();
    for &e in x {
        if !try_place(a, b, &mut x1, &mut x2, e) {
            return false;
        }
    }
    true
}

/// Attempt to place `e`, possibly evicting current occupants along a shortest
/// augmenting sequence of the exchange digraph. Classes are mutated on
/// success.
fn try_place(a: &Matroid, b: &Matroid, x1: &mut Vec<usize>, x2: &mut Vec<usize>, e: usize) -> bool {
    use std::collections::{BTreeMap, BTreeSet, VecDeque};

    let insertable = |cls: &[usize], m: &Matroid, v: usize| -> bool {
        let mut t = cls.to_vec();
        t.push(v);
        m.is_independent(&sorted(t))
    };
    let exchange = |cls: &[usize], m: &Matroid, out: usize, inn: usize| -> bool {
        let mut t: Vec<usize> = cls.iter().copied().filter(|&u| u != out).collect();
        t.push(inn);
        m.is_independent(&sorted(t))
    };

    // BFS over elements; parent arc (u -> v) records that u can take v's slot.
    let placed: Vec<(usize, u8)> = x1
        .iter()
        .map(|&u| (u, 1u8))
        .chain(x2.iter().map(|&u| (u, 2u8)))
        .collect();
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(e);
    let mut visited: BTreeSet<usize> = [e].into();

    while let Some(u) = queue.pop_front() {
        let direct = if !x1.contains(&u) && insertable(x1, a, u) {
            Some(1u8)
        } else if !x2.contains(&u) && insertable(x2, b, u) {
            Some(2u8)
        } else {
            None
        };
        if let Some(cls) = direct {
            apply_chain(x1, x2, &parent, u, cls);
            return true;
        }
        let u_class = if x1.contains(&u) {
            1u8
        } else if x2.contains(&u) {
            2u8
        } else {
            0u8
        };
        for &(v, vc) in &placed {
            // u can only take a slot in a class it is not already part of
            if visited.contains(&v) || vc == u_class {
                continue;
            }
            let ok = match vc {
                1 => exchange(x1, a, v, u),
                _ => exchange(x2, b, v, u),
            };
            if ok {
                visited.insert(v);
                parent.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    false
}

/// Walk the BFS parents back from `last` (inserted into `cls`), shifting each
/// predecessor into the slot its child vacated.
fn apply_chain(
    x1: &mut Vec<usize>,
    x2: &mut Vec<usize>,
    parent: &std::collections::BTreeMap<usize, usize>,
    last: usize,
    cls: u8,
) {
    let mut cur = last;
    let mut dest = cls;
    loop {
        let vacated = if parent.contains_key(&cur) {
            let pc = if x1.contains(&cur) { 1u8 } else { 2u8 };
            match pc {
                1 => x1.retain(|&u| u != cur),
                _ => x2.retain(|&u| u != cur),
            }
            Some(pc)
        } else {
            None
        };
        match dest {
            1 => x1.push(cur),
            _ => x2.push(cur),
        }
        match (parent.get(&cur), vacated) {
            (Some(&p), Some(pc)) => {
                cur = p;
                dest = pc;
            }
            _ => break,
        }
    }
    x1.sort_unstable();
    x2.sort_unstable();
}

/// Exchange digraph for a common independent set `R`: arc (i -> j) when
/// `R - i + j` stays independent in `m1`, arc (j -> i) when it stays
/// independent in `m2` (i in R, j outside). `x1`/`x2` collect the elements
/// addable to `R` in `m1`/`m2` alone.
struct ExchangeGraph {
    arcs_out: Vec<Vec<usize>>,
    x1: Vec<usize>,
    x2: Vec<usize>,
}

fn build_exchange_graph(m1: &Matroid, m2: &Matroid, r: &[bool]) -> ExchangeGraph {
    let n = r.len();
    let inside: Vec<usize> = (0..n).filter(|&v| r[v]).collect();
    let outside: Vec<usize> = (0..n).filter(|&v| !r[v]).collect();

    let mut arcs_out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut x1 = Vec::new();
    let mut x2 = Vec::new();

    let with = |add: usize| -> Vec<usize> {
        let mut t = inside.clone();
        t.push(add);
        sorted(t)
    };
    let swapped = |out: usize, inn: usize| -> Vec<usize> {
        let mut t: Vec<usize> = inside.iter().copied().filter(|&u| u != out).collect();
        t.push(inn);
        sorted(t)
    };

    for &j in &outside {
        let w = with(j);
        if m1.is_independent(&w) {
            x1.push(j);
        }
        if m2.is_independent(&w) {
            x2.push(j);
        }
    }
    for &i in &inside {
        for &j in &outside {
            let sw = swapped(i, j);
            if m1.is_independent(&sw) {
                arcs_out[i].push(j);
            }
            if m2.is_independent(&sw) {
                arcs_out[j].push(i);
            }
        }
    }
    for a in &mut arcs_out {
        a.sort_unstable();
    }
    ExchangeGraph { arcs_out, x1, x2 }
}

/// Shortest X1-X2 path, then lexicographically smallest vertex sequence.
/// None when X2 is unreachable from X1.
fn shortest_augmenting_path(g: &ExchangeGraph, n: usize) -> Option<Vec<usize>> {
    if g.x1.is_empty() || g.x2.is_empty() {
        return None;
    }
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, outs) in g.arcs_out.iter().enumerate() {
        for &v in outs {
            rev[v].push(u);
        }
    }
    const INF: usize = usize::MAX;
    let mut dist = vec![INF; n];
    let mut queue = std::collections::VecDeque::new();
    for &t in &g.x2 {
        dist[t] = 0;
        queue.push_back(t);
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if dist[u] == INF {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let start =
        g.x1.iter()
            .copied()
            .filter(|&v| dist[v] != INF)
            .min_by_key(|&v| (dist[v], v))?;
    let mut path = vec![start];
    let mut cur = start;
    while dist[cur] > 0 {
        let next = g.arcs_out[cur]
            .iter()
            .copied()
            .filter(|&v| dist[v] + 1 == dist[cur])
            .min()
            .expect("BFS distance structure broken");
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Maximum-cardinality common independent set by shortest augmenting paths
/// in the exchange digraph. Deterministic: shortest path, then smallest
/// vertex sequence.
pub fn max_cardinality_intersection(
    m1: &Matroid,
    m2: &Matroid,
) -> Result<Vec<usize>, MatroidError> {
    if m1.ground_size() != m2.ground_size() {
        return Err(MatroidError::GroundMismatch(
            m1.ground_size(),
            m2.ground_size(),
        ));
    }
    let n = m1.ground_size();
    let mut r = vec![false; n];
    while let Some(path) = {
        let g = build_exchange_graph(m1, m2, &r);
        shortest_augmenting_path(&g, n)
    } {
        for v in path {
            r[v] = !r[v];
        }
    }
    Ok((0..n).filter(|&v| r[v]).collect())
}

/// Maximum-weight common basis via weighted augmentation: each round augments
/// along a minimum-cost (then fewest-arc) path, which keeps the intermediate
/// sets extreme among common independent sets of their size.
pub fn max_weight_common_basis(
    m1: &Matroid,
    m2: &Matroid,
    w: &[f64],
) -> Result<Vec<usize>, MatroidError> {
    if m1.ground_size() != m2.ground_size() {
        return Err(MatroidError::GroundMismatch(
            m1.ground_size(),
            m2.ground_size(),
        ));
    }
    let n = m1.ground_size();
    assert_eq!(w.len(), n, "weight vector length mismatch");
    let r1 = m1.rank_full();
    let r2 = m2.rank_full();
    let target = r1.max(r2);
    if r1 != r2 {
        let found = max_cardinality_intersection(m1, m2)?.len();
        return Err(MatroidError::NoCommonBasis {
            found,
            need: target,
        });
    }

    let mut r = vec![false; n];
    for _round in 0..target {
        let g = build_exchange_graph(m1, m2, &r);
        match min_cost_augmenting_path(&g, &r, w, n) {
            Some(path) => {
                for v in path {
                    r[v] = !r[v];
                }
            }
            None => {
                let found = (0..n).filter(|&v| r[v]).count();
                return Err(MatroidError::NoCommonBasis {
                    found,
                    need: target,
                });
            }
        }
    }
    Ok((0..n).filter(|&v| r[v]).collect())
}

/// Bellman-Ford over the exchange digraph with vertex costs `-w` outside R
/// and `+w` inside R, relaxing on (cost, length) lexicographically.
fn min_cost_augmenting_path(
    g: &ExchangeGraph,
    r: &[bool],
    w: &[f64],
    n: usize,
) -> Option<Vec<usize>> {
    const EPS: f64 = 1e-12;
    let cost = |v: usize| if r[v] { w[v] } else { -w[v] };
    let mut dist = vec![f64::INFINITY; n];
    let mut len = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    for &s in &g.x1 {
        dist[s] = cost(s);
        len[s] = 0;
    }
    for _ in 0..=n {
        let mut improved = false;
        for u in 0..n {
            if dist[u].is_infinite() {
                continue;
            }
            for &v in &g.arcs_out[u] {
                let nd = dist[u] + cost(v);
                let nl = len[u] + 1;
                if nd < dist[v] - EPS || ((nd - dist[v]).abs() <= EPS && nl < len[v]) {
                    dist[v] = nd;
                    len[v] = nl;
                    parent[v] = u;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let end =
        g.x2.iter()
            .copied()
            .filter(|&v| dist[v].is_finite())
            .min_by(|&a, &b| {
                dist[a]
                    .partial_cmp(&dist[b])
                    .unwrap()
                    .then(len[a].cmp(&len[b]))
                    .then(a.cmp(&b))
            })?;
    let mut path = vec![end];
    let mut cur = end;
    while parent[cur] != usize::MAX {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
