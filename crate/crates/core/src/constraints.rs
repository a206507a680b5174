//! Controllability matroids, graph controllability indices, and randomized
//! certificates.
//!
//! The zero-mode condition `rank(A|B) = n` becomes the rank function
//! `rho1(S) = rank(M([I|Q_A|0]) v M([I|T_A|T_B(S)])) - rank(M([I|Q_A]) v
//! M([I|T_A]))`. The union of the two column matroids is itself a linear
//! matroid: stack one generic substitution of each block matrix with fresh
//! column scalings on the second layer. Contracting the fixed (I and A)
//! columns once leaves a small residual matrix whose column ranks evaluate
//! rho1 in one short elimination per query.
//!
//! The pencil-side condition becomes a partition matroid: each cycle class of
//! the base auxiliary graph is a slot, and a candidate input state belongs to
//! the slot of the cycle class that reaches its surrogate vertex.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auxgraph::{add_input_edges, build_base_graph, cycle_class_reach, AuxGraph, Vertex};
use crate::matroid::Matroid;
use crate::structmat::{
    self, gf, rank_gf_in_place, rank_of_columns, DenseFieldMatrix, FieldConfig, Stream,
    StructuredMatrix,
};
use crate::sysmodel::{augment_with_inputs, AugmentedSystem, DescriptorSystem};
use crate::ModelError;

/// Shared evaluation core: the contracted rho1 representation, the base
/// auxiliary graph, and the cycle-class partition for rho2.
pub struct ConstraintSystem {
    pub sys: DescriptorSystem,
    pub cfg: FieldConfig,
    /// Ground states eligible as inputs, ascending; matroid ground indices
    /// point into this list.
    pub eligible: Vec<usize>,
    /// rank(M([I|Q_A]) v M([I|T_A])): the constant subtrahend of rho1 and
    /// the additive constant of the strong-case controllability index.
    pub zeta: usize,
    pub base_graph: AuxGraph,
    /// Residual column per state after contracting the fixed columns.
    residual: Arc<Vec<Vec<u64>>>,
    prime: u64,
    /// Cycle-class slot per state (None: no cycle class reaches it).
    slot_of: Vec<Option<usize>>,
    /// Total number of cycle classes (the full connectivity requirement).
    pub n_cycle_classes: usize,
}

/// Forward-eliminate the first `n_fixed` columns; returns their rank and the
/// residuals of the remaining columns on the pivot-free rows.
fn contract_columns(
    a: &mut [u64],
    rows: usize,
    cols: usize,
    n_fixed: usize,
    p: u64,
) -> (usize, Vec<Vec<u64>>) {
    let mut rank = 0;
    for col in 0..n_fixed {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if pr != rank {
            for c in 0..cols {
                a.swap(rank * cols + c, pr * cols + c);
            }
        }
        let inv = gf::inv(a[rank * cols + col], p);
        for r in rank + 1..rows {
            let factor = a[r * cols + col];
            if factor == 0 {
                continue;
            }
            let scale = gf::mul(factor, inv, p);
            for c in col..cols {
                let sub = gf::mul(scale, a[rank * cols + c], p);
                a[r * cols + c] = gf::sub(a[r * cols + c], sub, p);
            }
        }
        rank += 1;
    }
    let residual = (n_fixed..cols)
        .map(|c| (rank..rows).map(|r| a[r * cols + c]).collect())
        .collect();
    (rank, residual)
}

impl ConstraintSystem {
    pub fn build(
        sys: &DescriptorSystem,
        cfg: &FieldConfig,
    ) -> Result<ConstraintSystem, ModelError> {
        cfg.validate()?;
        let n = sys.n;
        let p = cfg.prime;
        let mut st = Stream::new(cfg.seed ^ 0x72686f31);

        // layer 1: [I | Q_A | 0], fixed only
        // layer 2: [I | T_A | T_B(V)] substituted, columns freshly scaled
        let rows = 2 * n;
        let cols = 3 * n;
        let mut m = vec![0u64; rows * cols];
        for i in 0..n {
            m[i * cols + i] = 1;
        }
        for (&(r, c), v) in &sys.a.fixed {
            m[r * cols + (n + c)] = StructuredMatrix::reduce_mod(v, p)?;
        }
        let mut layer2 = vec![0u64; n * cols];
        for i in 0..n {
            layer2[i * cols + i] = 1;
        }
        for &(r, c) in &sys.a.free {
            layer2[r * cols + (n + c)] = st.next_nonzero(p);
        }
        for i in 0..n {
            layer2[i * cols + (2 * n + i)] = st.next_nonzero(p);
        }
        for c in 0..cols {
            let scale = st.next_nonzero(p);
            for r in 0..n {
                let v = layer2[r * cols + c];
                if v != 0 {
                    m[(n + r) * cols + c] = gf::mul(v, scale, p);
                }
            }
        }
        // reorder: fixed columns (I, A blocks) first, B columns last, which
        // they already are
        let (zeta, residual) = contract_columns(&mut m, rows, cols, 2 * n, p);

        let base_graph = build_base_graph(sys)?;
        let reach = cycle_class_reach(&base_graph);
        let slot_of: Vec<Option<usize>> =
            (0..n).map(|i| reach.reaching[i].first().copied()).collect();

        Ok(ConstraintSystem {
            sys: sys.clone(),
            cfg: cfg.clone(),
            eligible: sys.eligible_inputs(),
            zeta,
            base_graph,
            residual: Arc::new(residual),
            prime: p,
            slot_of,
            n_cycle_classes: reach.n_cycle_classes,
        })
    }

    /// rho1 over an arbitrary state set: rank of the residual columns.
    pub fn rho1(&self, s: &[usize]) -> usize {
        let cols: Vec<&[u64]> = s.iter().map(|&i| self.residual[i].as_slice()).collect();
        rank_of_columns(&cols, self.prime)
    }

    /// rho2 over an arbitrary state set: distinct cycle-class slots hit.
    pub fn rho2(&self, s: &[usize]) -> usize {
        let mut seen = vec![false; self.n_cycle_classes];
        let mut count = 0;
        for &i in s {
            if let Some(c) = self.slot_of[i] {
                if !seen[c] {
                    seen[c] = true;
                    count += 1;
                }
            }
        }
        count
    }

    /// All cycle classes covered: the reachability condition holds.
    pub fn rho2_complete(&self, s: &[usize]) -> bool {
        self.rho2(s) == self.n_cycle_classes
    }

    /// Map ground indices back to state indices.
    pub fn ground_states(&self, ground: &[usize]) -> Vec<usize> {
        ground.iter().map(|&g| self.eligible[g]).collect()
    }

    /// M1 on the eligible ground: the linear matroid of residual columns.
    pub fn m1(&self) -> Matroid {
        let cols: Vec<Vec<u64>> = self
            .eligible
            .iter()
            .map(|&i| self.residual[i].clone())
            .collect();
        Matroid::linear_dense(cols, self.prime)
    }

    /// M2 on the eligible ground: the cycle-class partition matroid.
    pub fn m2(&self) -> Matroid {
        let class_of: Vec<Option<usize>> = self.eligible.iter().map(|&i| self.slot_of[i]).collect();
        Matroid::partition(class_of)
    }

    /// The strong-case controllability index `c(S) = zeta + rho1(S)`, with
    /// the constant and the matroid part exposed separately.
    pub fn gci_strong(&self, s: &[usize]) -> usize {
        self.zeta + self.rho1(s)
    }

    /// `c1(S) = rho1(V - S) + |S|` over the full state set.
    pub fn gci_c1(&self, s: &[usize]) -> usize {
        let comp = crate::matroid::complement(self.sys.n, s);
        self.rho1(&comp) + s.len()
    }

    /// `c2(S)`: states whose surrogate reaches the input vertices of the
    /// full auxiliary graph.
    pub fn gci_c2(&self, s: &[usize]) -> usize {
        if s.is_empty() {
            return 0;
        }
        let n = self.sys.n;
        let ghat = add_input_edges(&self.base_graph, s);
        let mut targets = Vec::with_capacity(2 * s.len());
        for &i in &ghat.s {
            targets.push(Vertex::UT(i).id(n));
            targets.push(Vertex::UQ(i).id(n));
        }
        let reach = ghat.reaches_set(&targets);
        (0..n).filter(|&i| reach[Vertex::WT(i).id(n)]).count()
    }
}

/// The six oracles of the controllability constraint set, over ground
/// indices into `eligible`.
pub struct ControllabilityMatroids {
    pub eligible: Vec<usize>,
    pub m1: Matroid,
    pub m2: Matroid,
    pub m1_star: Matroid,
    pub m2_star: Matroid,
    pub m1_hat: Matroid,
    pub m2_hat: Matroid,
    pub r1: usize,
    pub r2: usize,
    pub k: usize,
}

/// Elongation `M v U_q`: rank min(|X|, rank(X) + q). Cross-checked against
/// the generic union construction in tests.
pub fn elongate(m: &Matroid, q: usize) -> Matroid {
    let inner = m.clone();
    Matroid::from_rank_fn(m.ground_size(), move |x| (inner.rank(x) + q).min(x.len()))
}

/// Build all six oracles for a budget of `k` inputs.
pub fn build_matroids(
    cs: &ConstraintSystem,
    k: usize,
) -> Result<ControllabilityMatroids, ModelError> {
    let m1 = cs.m1();
    let m2 = cs.m2();
    let r1 = m1.rank_full();
    let r2 = m2.rank_full();
    let min_k = r1.max(r2);
    if k < min_k {
        return Err(ModelError::KTooSmall { k, min_k });
    }
    if k > cs.eligible.len() {
        return Err(ModelError::KTooSmall {
            k,
            min_k: cs.eligible.len(),
        });
    }
    let m1_star = m1.dual();
    let m2_star = m2.dual();
    let m1_hat = elongate(&m1, k - r1);
    let m2_hat = elongate(&m2, k - r2);
    Ok(ControllabilityMatroids {
        eligible: cs.eligible.clone(),
        m1,
        m2,
        m1_star,
        m2_star,
        m1_hat,
        m2_hat,
        r1,
        r2,
        k,
    })
}

/// Randomized structural-controllability certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub rank_ab_ok: bool,
    pub pencil_ok: bool,
    pub z_samples: Vec<u64>,
    /// Probability bound on a wrong verdict, recorded with every pass.
    pub failure_bound: f64,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.rank_ab_ok && self.pencil_ok
    }
}

/// Substitute the augmented system and check both rank conditions: the
/// zero-mode rank `rank(A|B) = n` and the pencil condition at `z_count`
/// random points plus z = 0, decided structurally through the reachable-
/// subspace quotient (all nonzero modes of the shifted pair must be
/// reachable, equivalently the quotient map is nilpotent).
pub fn controllability_certificate(
    aug: &AugmentedSystem,
    cfg: &FieldConfig,
    z_count: usize,
) -> Result<Certificate, ModelError> {
    cfg.validate().map_err(crate::MatroidError::Struct)?;
    let n = aug.base.n;
    let p = cfg.prime;
    let mut rank_ab_ok = false;
    let mut pencil_ok = false;
    let mut z_samples = Vec::new();
    let mut notes = Vec::new();

    for trial in 0..cfg.trials {
        let mut st = Stream::new(cfg.seed ^ 0x63657274 ^ ((trial as u64) << 40));
        let da = structmat::substitute(&aug.base.a, cfg, &mut st.fork(1))
            .map_err(crate::MatroidError::Struct)?;
        let df = structmat::substitute(&aug.base.f, cfg, &mut st.fork(2))
            .map_err(crate::MatroidError::Struct)?;
        let db = structmat::substitute(&aug.b, cfg, &mut st.fork(3))
            .map_err(crate::MatroidError::Struct)?;

        // rank [A | B] = n
        let mut ab = vec![0u64; n * 2 * n];
        for r in 0..n {
            for c in 0..n {
                ab[r * 2 * n + c] = da.get(r, c);
                ab[r * 2 * n + n + c] = db.get(r, c);
            }
        }
        let trial_ab = rank_gf_in_place(&mut ab, n, 2 * n, p) == n;
        rank_ab_ok |= trial_ab;

        // direct pencil samples at z = 0 and z_count random points
        let mut zs = Vec::with_capacity(z_count + 1);
        zs.push(0u64);
        for _ in 0..z_count {
            zs.push(st.next_below(p));
        }
        let mut samples_ok = true;
        for &z in &zs {
            let mut mz = vec![0u64; n * 2 * n];
            for r in 0..n {
                for c in 0..n {
                    let azf = gf::sub(da.get(r, c), gf::mul(z, df.get(r, c), p), p);
                    mz[r * 2 * n + c] = azf;
                    mz[r * 2 * n + n + c] = db.get(r, c);
                }
            }
            if rank_gf_in_place(&mut mz, n, 2 * n, p) < n {
                samples_ok = false;
                break;
            }
        }
        if trial == 0 {
            z_samples = zs;
        }

        // structural check of the all-z condition
        let structural = pencil_structurally_ok(&da, &df, &db, p, &mut st.fork(4), &mut notes);
        pencil_ok |= samples_ok && structural;
    }

    let deg_per_trial = (n * n + n * (z_count + 1)) as f64;
    let failure_bound = (deg_per_trial / p as f64).powi(cfg.trials as i32);
    Ok(Certificate {
        rank_ab_ok,
        pencil_ok,
        z_samples,
        failure_bound,
        notes,
    })
}

/// `rank((A - zF)|B) = n` for all z: no left vector annihilates both a
/// shifted pencil and B. With an invertible shift A - z0 F this reduces to
/// the pair (M, N) = ((A - z0 F)^{-1} F, (A - z0 F)^{-1} B) having no
/// unreachable nonzero mode: M must be nilpotent on the quotient by the
/// M-invariant closure of im(N).
fn pencil_structurally_ok(
    da: &DenseFieldMatrix,
    df: &DenseFieldMatrix,
    db: &DenseFieldMatrix,
    p: u64,
    st: &mut Stream,
    notes: &mut Vec<String>,
) -> bool {
    let n = da.rows;
    // B already spanning: nothing to check
    let bcols: Vec<Vec<u64>> = (0..n).map(|c| db.column(c)).collect();
    let bref: Vec<&[u64]> = bcols.iter().map(|v| v.as_slice()).collect();
    if rank_of_columns(&bref, p) == n {
        return true;
    }

    // find an invertible shift
    let mut inv_shift: Option<Vec<u64>> = None;
    let mut z0 = 0;
    for _ in 0..8 {
        let z = st.next_nonzero(p);
        let mut azf = vec![0u64; n * n];
        for r in 0..n {
            for c in 0..n {
                azf[r * n + c] = gf::sub(da.get(r, c), gf::mul(z, df.get(r, c), p), p);
            }
        }
        if let Some(inv) = invert_gf(&azf, n, p) {
            inv_shift = Some(inv);
            z0 = z;
            break;
        }
    }
    let Some(inv) = inv_shift else {
        notes.push("degenerate pencil: no invertible shift found; reporting fail".into());
        return false;
    };
    let _ = z0;

    let m = mat_mul(&inv, &matrix_entries(df), n, p);
    let nb = mat_mul(&inv, &matrix_entries(db), n, p);

    // M-invariant closure of im(N)
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut frontier: Vec<Vec<u64>> = (0..n).map(|c| column(&nb, n, c)).collect();
    loop {
        let mut grew = false;
        for v in std::mem::take(&mut frontier) {
            if add_to_basis(&mut basis, v.clone(), p) {
                grew = true;
                frontier.push(mat_vec(&m, &v, n, p));
            }
        }
        if !grew || basis.len() == n {
            break;
        }
    }
    if basis.len() == n {
        return true;
    }
    // quotient nilpotency: M^n maps everything into the closure
    let mn = mat_pow(&m, n, n, p);
    for c in 0..n {
        let v = column(&mn, n, c);
        let mut probe = basis.clone();
        if add_to_basis(&mut probe, v, p) {
            return false;
        }
    }
    true
}

fn matrix_entries(d: &DenseFieldMatrix) -> Vec<u64> {
    d.entries.clone()
}

fn column(m: &[u64], n: usize, c: usize) -> Vec<u64> {
    (0..n).map(|r| m[r * n + c]).collect()
}

fn mat_mul(a: &[u64], b: &[u64], n: usize, p: u64) -> Vec<u64> {
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for l in 0..n {
            let av = a[i * n + l];
            if av == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = gf::add(out[i * n + j], gf::mul(av, b[l * n + j], p), p);
            }
        }
    }
    out
}

fn mat_vec(m: &[u64], v: &[u64], n: usize, p: u64) -> Vec<u64> {
    (0..n)
        .map(|r| {
            let mut acc = 0u64;
            for c in 0..n {
                acc = gf::add(acc, gf::mul(m[r * n + c], v[c], p), p);
            }
            acc
        })
        .collect()
}

fn mat_pow(m: &[u64], mut e: usize, n: usize, p: u64) -> Vec<u64> {
    let mut base = m.to_vec();
    let mut acc: Vec<u64> = {
        let mut i = vec![0u64; n * n];
        for d in 0..n {
            i[d * n + d] = 1;
        }
        i
    };
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base, n, p);
        }
        base = mat_mul(&base, &base, n, p);
        e >>= 1;
    }
    acc
}

fn invert_gf(a: &[u64], n: usize, p: u64) -> Option<Vec<u64>> {
    let mut work = vec![0u64; n * 2 * n];
    for r in 0..n {
        for c in 0..n {
            work[r * 2 * n + c] = a[r * n + c];
        }
        work[r * 2 * n + n + r] = 1;
    }
    for col in 0..n {
        let pr = (col..n).find(|&r| work[r * 2 * n + col] != 0)?;
        if pr != col {
            for c in 0..2 * n {
                work.swap(col * 2 * n + c, pr * 2 * n + c);
            }
        }
        let inv = gf::inv(work[col * 2 * n + col], p);
        for c in 0..2 * n {
            work[col * 2 * n + c] = gf::mul(work[col * 2 * n + c], inv, p);
        }
        for r in 0..n {
            if r != col && work[r * 2 * n + col] != 0 {
                let factor = work[r * 2 * n + col];
                for c in 0..2 * n {
                    let sub = gf::mul(factor, work[col * 2 * n + c], p);
                    work[r * 2 * n + c] = gf::sub(work[r * 2 * n + c], sub, p);
                }
            }
        }
    }
    let mut out = vec![0u64; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = work[r * 2 * n + n + c];
        }
    }
    Some(out)
}

/// Incremental elimination basis; true when v was independent and added.
fn add_to_basis(basis: &mut Vec<Vec<u64>>, mut v: Vec<u64>, p: u64) -> bool {
    // reduce v against rows kept in echelon form (leading index, scaled to 1)
    for b in basis.iter() {
        let lead = b.iter().position(|&x| x != 0).unwrap();
        if v[lead] != 0 {
            let factor = v[lead];
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi = gf::sub(*vi, gf::mul(factor, *bi, p), p);
            }
        }
    }
    match v.iter().position(|&x| x != 0) {
        None => false,
        Some(lead) => {
            let inv = gf::inv(v[lead], p);
            for vi in v.iter_mut() {
                *vi = gf::mul(*vi, inv, p);
            }
            // keep rows sorted by leading index for stable reduction
            let pos = basis
                .iter()
                .position(|b| b.iter().position(|&x| x != 0).unwrap() > lead)
                .unwrap_or(basis.len());
            basis.insert(pos, v);
            true
        }
    }
}

/// Certificate for an input set on a system, through the augmented form.
pub fn certify_input_set(
    sys: &DescriptorSystem,
    s: &[usize],
    cfg: &FieldConfig,
    z_count: usize,
) -> Result<Certificate, ModelError> {
    let aug = augment_with_inputs(sys, s)?;
    controllability_certificate(&aug, cfg, z_count)
}
