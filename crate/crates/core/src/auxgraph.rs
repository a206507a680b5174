//! Auxiliary-graph machinery for the matrix-pencil rank condition.
//!
//! From an augmented system this module builds the rational matrix Omega,
//! finds an independent matching (rows J independent in Omega with a perfect
//! matching on the helper bipartite graph H), completes J with the input rows
//! J1, computes `Omega Omega_{J u J1}^{-1}` exactly over the rationals, and
//! assembles the typed directed graph whose reachability structure certifies
//! `rank((A - zF)|B) = n` for almost all free parameters. A formal
//! cycle-coefficient verifier covers the degenerate cases.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::structmat::StructuredMatrix;
use crate::sysmodel::{augment_with_inputs, AugmentedSystem, DescriptorSystem, SystemKind};
use crate::ModelError;

/// Typed vertex of the auxiliary graph. State indices run over `0..n`, input
/// slots over `0..k` (one per state here, since B is a square diagonal
/// pattern).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    WT(usize),
    WQ(usize),
    XT(usize),
    XQ(usize),
    UT(usize),
    UQ(usize),
}

impl Vertex {
    pub fn id(&self, n: usize) -> usize {
        match *self {
            Vertex::WT(i) => i,
            Vertex::WQ(i) => n + i,
            Vertex::XT(i) => 2 * n + i,
            Vertex::XQ(i) => 3 * n + i,
            Vertex::UT(i) => 4 * n + i,
            Vertex::UQ(i) => 5 * n + i,
        }
    }

    pub fn from_id(id: usize, n: usize) -> Vertex {
        match id / n {
            0 => Vertex::WT(id % n),
            1 => Vertex::WQ(id % n),
            2 => Vertex::XT(id % n),
            3 => Vertex::XQ(id % n),
            4 => Vertex::UT(id % n),
            _ => Vertex::UQ(id % n),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Vertex::WT(i) => format!("wT{i}"),
            Vertex::WQ(i) => format!("wQ{i}"),
            Vertex::XT(i) => format!("xT{i}"),
            Vertex::XQ(i) => format!("xQ{i}"),
            Vertex::UT(i) => format!("uT{i}"),
            Vertex::UQ(i) => format!("uQ{i}"),
        }
    }
}

/// Row labels of Omega: w rows carry the fixed `Q_A - Q_F` block plus the
/// free T support, x rows the state identity, u rows the input identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    W(usize),
    X(usize),
    U(usize),
}

/// The matrix of the pencil construction, kept exact: fixed part
/// `[[Q_A - Q_F | 0], [I | 0], [0 | I]]` with the free T-support recorded on
/// the w rows.
#[derive(Debug, Clone)]
pub struct OmegaMatrix {
    pub n: usize,
    pub k: usize,
    pub entries: StructuredMatrix,
    pub row_labels: Vec<RowLabel>,
}

/// Build Omega for the input-augmented form (its Q_B block is zero).
pub fn build_omega(aug: &AugmentedSystem) -> OmegaMatrix {
    let n = aug.base.n;
    let k = n;
    let mut m = StructuredMatrix::new(2 * n + k, n + k);
    for r in 0..n {
        for c in 0..n {
            let v = aug.base.a.fixed_at(r, c) - aug.base.f.fixed_at(r, c);
            if !v.is_zero() {
                m.set_fixed(r, c, v);
            }
        }
    }
    for &(r, c) in aug.base.a.free.iter().chain(aug.base.f.free.iter()) {
        m.set_free(r, c);
    }
    for i in 0..n {
        m.set_fixed_int(n + i, i, 1);
    }
    for i in 0..k {
        m.set_fixed_int(2 * n + i, n + i, 1);
    }
    let mut row_labels = Vec::with_capacity(2 * n + k);
    row_labels.extend((0..n).map(RowLabel::W));
    row_labels.extend((0..n).map(RowLabel::X));
    row_labels.extend((0..k).map(RowLabel::U));
    OmegaMatrix {
        n,
        k,
        entries: m,
        row_labels,
    }
}

/// Matching partner of each w row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPartner {
    /// m(w_i^T) = w_i^Q
    OwnW,
    /// m(w_i^T) = x_c^Q
    X(usize),
}

#[derive(Debug, Clone)]
pub struct IndependentMatching {
    pub partner: Vec<MatchPartner>,
    /// Row indices into Omega (w row i, or x row n + c), ascending.
    pub j_rows: Vec<usize>,
}

impl IndependentMatching {
    fn from_partners(n: usize, partner: Vec<MatchPartner>) -> IndependentMatching {
        let mut j_rows: Vec<usize> = partner
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                MatchPartner::OwnW => i,
                MatchPartner::X(c) => n + c,
            })
            .collect();
        j_rows.sort_unstable();
        IndependentMatching { partner, j_rows }
    }

    pub fn x_in_j(&self, n: usize, c: usize) -> bool {
        self.j_rows.binary_search(&(n + c)).is_ok()
    }

    pub fn w_in_j(&self, i: usize) -> bool {
        matches!(self.partner[i], MatchPartner::OwnW)
    }
}

type RatMatrix = Vec<Vec<BigRational>>;

fn rat_zero(rows: usize, cols: usize) -> RatMatrix {
    vec![vec![BigRational::zero(); cols]; rows]
}

/// Gauss-Jordan inverse; None when singular.
#[allow(clippy::needless_range_loop)]
fn rat_invert(a: &RatMatrix) -> Option<RatMatrix> {
    let n = a.len();
    let mut work: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !work[r][col].is_zero())?;
        work.swap(col, pivot);
        let inv = work[col][col].recip();
        for c in col..2 * n {
            work[col][c] = &work[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let factor = work[r][col].clone();
                for c in col..2 * n {
                    let sub = &factor * &work[col][c];
                    work[r][c] -= sub;
                }
            }
        }
    }
    Some(work.into_iter().map(|row| row[n..].to_vec()).collect())
}

fn rat_rank(a: &RatMatrix) -> usize {
    let mut w: Vec<Vec<BigRational>> = a.to_vec();
    crate::structmat::rational_rank(&mut w)
}

/// Exact fixed row of Omega restricted to the state columns.
fn omega_state_row(omega: &OmegaMatrix, row: usize) -> Vec<BigRational> {
    (0..omega.n)
        .map(|c| omega.entries.fixed_at(row, c))
        .collect()
}

/// Free support of the w rows: positions (row, state column) from T_A and
/// T_F.
fn t_support(omega: &OmegaMatrix) -> Vec<(usize, usize)> {
    omega
        .entries
        .free
        .iter()
        .copied()
        .filter(|&(r, c)| r < omega.n && c < omega.n)
        .collect()
}

/// Find a perfect matching on H whose induced J rows are linearly
/// independent in Omega. Constructor systems carry a canonical matching
/// (validated, then used); custom systems run the matroid-intersection
/// search over the transversal and row matroids.
pub fn find_independent_matching(
    omega: &OmegaMatrix,
    kind: SystemKind,
) -> Result<IndependentMatching, ModelError> {
    if let Some(hint) = canonical_partners(omega, kind) {
        if let Some(m) = validate_partners(omega, hint) {
            return Ok(m);
        }
    }
    general_independent_matching(omega)
}

/// Canonical matching for the constructor systems: a w row with a nonzero
/// fixed diagonal in Omega... more precisely, rows whose own-w choice keeps J
/// triangular. Consensus edge rows (zero F diagonal) pair with their own
/// diagonal free weight; every other row matches its own w.
fn canonical_partners(omega: &OmegaMatrix, kind: SystemKind) -> Option<Vec<MatchPartner>> {
    let n = omega.n;
    match kind {
        SystemKind::Free | SystemKind::DoubleIntegrator => Some(vec![MatchPartner::OwnW; n]),
        SystemKind::Consensus => Some(
            (0..n)
                .map(|i| {
                    if omega.entries.is_free(i, i) {
                        MatchPartner::X(i)
                    } else {
                        MatchPartner::OwnW
                    }
                })
                .collect(),
        ),
        SystemKind::Custom => None,
    }
}

/// Check the H-edge and independence conditions for a candidate matching.
fn validate_partners(
    omega: &OmegaMatrix,
    partner: Vec<MatchPartner>,
) -> Option<IndependentMatching> {
    let n = omega.n;
    let mut used_x = vec![false; n];
    for (i, p) in partner.iter().enumerate() {
        if let MatchPartner::X(c) = p {
            // H edge (w_i^T, x_c^Q) exists only on a free T entry at (i, c)
            if !omega.entries.is_free(i, *c) || used_x[*c] {
                return None;
            }
            used_x[*c] = true;
        }
    }
    let m = IndependentMatching::from_partners(n, partner);
    let rows: RatMatrix = m
        .j_rows
        .iter()
        .map(|&r| {
            if r < n {
                omega_state_row(omega, r)
            } else {
                let mut e = vec![BigRational::zero(); n];
                e[r - n] = BigRational::one();
                e
            }
        })
        .collect();
    (rat_rank(&rows) == n).then_some(m)
}

/// Matroid-intersection search for J: the transversal matroid of H against
/// the exact linear matroid of Omega's first 2n rows.
fn general_independent_matching(omega: &OmegaMatrix) -> Result<IndependentMatching, ModelError> {
    use crate::matroid::{max_cardinality_intersection, Matroid};

    let n = omega.n;
    let support = t_support(omega);
    // tokens[row] = w indices this row can represent
    let mut tokens: Vec<Vec<usize>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        tokens.push(vec![i]);
    }
    for c in 0..n {
        let owners: Vec<usize> = support
            .iter()
            .filter(|&&(_, cc)| cc == c)
            .map(|&(r, _)| r)
            .collect();
        tokens.push(owners);
    }

    let tokens_for_transversal = tokens.clone();
    let transversal = Matroid::from_rank_fn(2 * n, move |x: &[usize]| {
        bipartite_matching_size(&tokens_for_transversal, x, n)
    });

    let rows: Vec<Vec<BigRational>> = (0..2 * n)
        .map(|r| {
            if r < n {
                omega_state_row(omega, r)
            } else {
                let mut e = vec![BigRational::zero(); n];
                e[r - n] = BigRational::one();
                e
            }
        })
        .collect();
    let rows_for_rank = rows.clone();
    let row_matroid = Matroid::from_rank_fn(2 * n, move |x: &[usize]| {
        let sel: RatMatrix = x.iter().map(|&r| rows_for_rank[r].clone()).collect();
        rat_rank(&sel)
    });

    let j = max_cardinality_intersection(&transversal, &row_matroid)?;
    if j.len() < n {
        return Err(ModelError::NoIndependentMatching);
    }
    // recover the matching: assign each selected row a distinct w index
    let assignment = bipartite_matching(&tokens, &j, n);
    let mut partner = vec![MatchPartner::OwnW; n];
    for (&row, owner) in j.iter().zip(assignment.iter()) {
        let w = owner.expect("perfect matching on selected rows");
        if row >= n {
            partner[w] = MatchPartner::X(row - n);
        } else {
            debug_assert_eq!(row, w);
        }
    }
    Ok(IndependentMatching::from_partners(n, partner))
}

fn bipartite_matching_size(tokens: &[Vec<usize>], rows: &[usize], n_tokens: usize) -> usize {
    bipartite_matching(tokens, rows, n_tokens)
        .iter()
        .flatten()
        .count()
}

/// Kuhn augmenting matching: per selected row, its matched w token.
fn bipartite_matching(
    tokens: &[Vec<usize>],
    rows: &[usize],
    n_tokens: usize,
) -> Vec<Option<usize>> {
    let mut token_owner: Vec<Option<usize>> = vec![None; n_tokens]; // -> index into rows
    fn try_assign(
        ri: usize,
        tokens: &[Vec<usize>],
        rows: &[usize],
        token_owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &t in &tokens[rows[ri]] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            match token_owner[t] {
                None => {
                    token_owner[t] = Some(ri);
                    return true;
                }
                Some(other) => {
                    if try_assign(other, tokens, rows, token_owner, seen) {
                        token_owner[t] = Some(ri);
                        return true;
                    }
                }
            }
        }
        false
    }
    for ri in 0..rows.len() {
        let mut seen = vec![false; n_tokens];
        try_assign(ri, tokens, rows, &mut token_owner, &mut seen);
    }
    let mut out = vec![None; rows.len()];
    for (t, owner) in token_owner.iter().enumerate() {
        if let Some(ri) = owner {
            out[*ri] = Some(t);
        }
    }
    out
}

/// Complete J with the input rows J1 = u and compute the exact state block
/// of `Omega Omega_{J u J1}^{-1}` (the B-block is untouched: zero off the u
/// rows, identity on them).
pub fn complete_and_invert(
    omega: &OmegaMatrix,
    matching: &IndependentMatching,
) -> Result<(Vec<usize>, RatMatrix), ModelError> {
    let n = omega.n;
    let psi: RatMatrix = matching
        .j_rows
        .iter()
        .map(|&r| {
            if r < n {
                omega_state_row(omega, r)
            } else {
                let mut e = vec![BigRational::zero(); n];
                e[r - n] = BigRational::one();
                e
            }
        })
        .collect();
    let psi_inv = rat_invert(&psi).ok_or(ModelError::CompletionFailed)?;
    // omega_tilde rows for w and x (u rows are trivially the B identity)
    let mut tilde = rat_zero(2 * n, n);
    for (r, row) in tilde.iter_mut().enumerate() {
        let orow = if r < n {
            omega_state_row(omega, r)
        } else {
            let mut e = vec![BigRational::zero(); n];
            e[r - n] = BigRational::one();
            e
        };
        for (jpos, cell) in row.iter_mut().enumerate() {
            let mut acc = BigRational::zero();
            for (t, coeff) in orow.iter().enumerate() {
                if !coeff.is_zero() && !psi_inv[t][jpos].is_zero() {
                    acc += coeff * &psi_inv[t][jpos];
                }
            }
            *cell = acc;
        }
    }
    let j1: Vec<usize> = (2 * n..2 * n + omega.k).collect();
    Ok((j1, tilde))
}

/// The auxiliary graph over typed vertices, together with everything needed
/// to answer reachability and coefficient questions.
#[derive(Debug, Clone)]
pub struct AuxGraph {
    pub n: usize,
    pub arcs: BTreeSet<(usize, usize)>,
    pub matching: IndependentMatching,
    pub j1_rows: Vec<usize>,
    /// Exact `Omega Omega_{J u J1}^{-1}` state block, rows w then x, columns
    /// indexed by the sorted J rows.
    pub omega_tilde: RatMatrix,
    /// Vertices `v^Q` with a nonzero J1 column: the u^Q family for the
    /// augmented form.
    pub s_minus: Vec<usize>,
    /// Input set whose u arcs are present (empty in the base graph G').
    pub s: Vec<usize>,
}

impl AuxGraph {
    pub fn vertex_count(&self) -> usize {
        6 * self.n
    }

    pub fn out_arcs(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count()];
        for &(a, b) in &self.arcs {
            out[a].push(b);
        }
        out
    }

    fn in_arcs(&self) -> Vec<Vec<usize>> {
        let mut inn = vec![Vec::new(); self.vertex_count()];
        for &(a, b) in &self.arcs {
            inn[b].push(a);
        }
        inn
    }

    /// Vertices that can reach some vertex of `targets` along the arcs.
    pub fn reaches_set(&self, targets: &[usize]) -> Vec<bool> {
        let inn = self.in_arcs();
        let mut seen = vec![false; self.vertex_count()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &t in targets {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &u in &inn[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Vertices lying on some directed cycle: members of a nontrivial
    /// strongly connected class, or self-loop vertices.
    pub fn cycle_vertices(&self) -> Vec<bool> {
        let cond = condense_digraph(self.vertex_count(), self.arcs.iter().copied());
        let mut on_cycle = vec![false; self.vertex_count()];
        for class in &cond.classes {
            if class.len() >= 2 {
                for &v in class {
                    on_cycle[v] = true;
                }
            }
        }
        for &(a, b) in &self.arcs {
            if a == b {
                on_cycle[a] = true;
            }
        }
        on_cycle
    }
}

/// Base auxiliary graph G': the arc families that do not depend on the input
/// set.
pub fn build_base_graph(sys: &DescriptorSystem) -> Result<AuxGraph, ModelError> {
    let aug = augment_with_inputs(sys, &[])?;
    let omega = build_omega(&aug);
    let matching = find_independent_matching(&omega, sys.kind)?;
    let (j1, tilde) = complete_and_invert(&omega, &matching)?;
    let n = omega.n;

    let mut arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let vid = |v: Vertex| v.id(n);

    // free T entries: matched pairs reverse the arc
    for (r, c) in t_support(&omega) {
        if matching.partner[r] == MatchPartner::X(c) {
            arcs.insert((vid(Vertex::XT(c)), vid(Vertex::WT(r))));
        } else {
            arcs.insert((vid(Vertex::WT(r)), vid(Vertex::XT(c))));
        }
    }
    // w pairs
    for i in 0..n {
        if matching.w_in_j(i) {
            arcs.insert((vid(Vertex::WQ(i)), vid(Vertex::WT(i))));
        } else {
            arcs.insert((vid(Vertex::WT(i)), vid(Vertex::WQ(i))));
        }
    }
    // x pairs
    for c in 0..n {
        if matching.x_in_j(n, c) {
            arcs.insert((vid(Vertex::XQ(c)), vid(Vertex::XT(c))));
        } else {
            arcs.insert((vid(Vertex::XT(c)), vid(Vertex::XQ(c))));
        }
    }
    // Q-to-Q arcs from the nonzero pattern of omega_tilde: rows outside J,
    // columns inside J (rows with a nonzero J1 column are excluded; for this
    // construction those are exactly the u rows, which are not present
    // here).
    let jset: BTreeSet<usize> = matching.j_rows.iter().copied().collect();
    #[allow(clippy::needless_range_loop)]
    for r in 0..2 * n {
        if jset.contains(&r) {
            continue;
        }
        let from = if r < n {
            Vertex::WQ(r)
        } else {
            Vertex::XQ(r - n)
        };
        for (jpos, &jrow) in matching.j_rows.iter().enumerate() {
            if tilde[r][jpos].is_zero() {
                continue;
            }
            let to = if jrow < n {
                Vertex::WQ(jrow)
            } else {
                Vertex::XQ(jrow - n)
            };
            arcs.insert((vid(from), vid(to)));
        }
    }

    let s_minus = (0..omega.k).map(|i| Vertex::UQ(i).id(n)).collect();
    Ok(AuxGraph {
        n,
        arcs,
        matching,
        j1_rows: j1,
        omega_tilde: tilde,
        s_minus,
        s: Vec::new(),
    })
}

/// The full graph for input set `s`: adds the u pair arcs and the
/// `w^T -> u^T` arcs of the selected states. Pure: the base graph is
/// unchanged.
pub fn add_input_edges(base: &AuxGraph, s: &[usize]) -> AuxGraph {
    let n = base.n;
    let mut g = base.clone();
    for i in 0..n {
        g.arcs.insert((Vertex::UT(i).id(n), Vertex::UQ(i).id(n)));
    }
    let mut sv: Vec<usize> = s.to_vec();
    sv.sort_unstable();
    sv.dedup();
    for &i in &sv {
        g.arcs.insert((Vertex::WT(i).id(n), Vertex::UT(i).id(n)));
    }
    g.s = sv;
    g
}

/// Pencil-side reachability condition: every vertex on a cycle of the base
/// graph reaches some input surrogate `w_i^T, i in S`.
pub fn reachability_satisfied(g_hat: &AuxGraph, s: &[usize]) -> bool {
    let n = g_hat.n;
    let targets: Vec<usize> = s.iter().map(|&i| Vertex::WT(i).id(n)).collect();
    let reach = g_hat.reaches_set(&targets);
    g_hat
        .cycle_vertices()
        .iter()
        .enumerate()
        .all(|(v, &on)| !on || reach[v])
}

/// Strongly-connected-component condensation of an arbitrary digraph:
/// class ids in reverse topological order of discovery, class-level arcs,
/// and the classes without incoming arcs.
#[derive(Debug, Clone)]
pub struct Condensation {
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub dag_arcs: BTreeSet<(usize, usize)>,
    pub source_classes: Vec<usize>,
}

pub fn condense_digraph(nv: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Condensation {
    let arcs: Vec<(usize, usize)> = arcs.into_iter().collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in &arcs {
        adj[a].push(b);
    }
    // iterative Tarjan
    let mut index = vec![usize::MAX; nv];
    let mut low = vec![0usize; nv];
    let mut on_stack = vec![false; nv];
    let mut stack: Vec<usize> = Vec::new();
    let mut class_of = vec![usize::MAX; nv];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for root in 0..nv {
        if index[root] != usize::MAX {
            continue;
        }
        // call stack of (vertex, child cursor)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            if *cursor < adj[v].len() {
                let w = adj[v][*cursor];
                *cursor += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let id = classes.len();
                    let mut members = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        class_of[w] = id;
                        members.push(w);
                        if w == v {
                            break;
                        }
                    }
                    members.sort_unstable();
                    classes.push(members);
                }
            }
        }
    }

    let mut dag_arcs = BTreeSet::new();
    for &(a, b) in &arcs {
        let (ca, cb) = (class_of[a], class_of[b]);
        if ca != cb {
            dag_arcs.insert((ca, cb));
        }
    }
    let mut has_incoming = vec![false; classes.len()];
    for &(_, cb) in &dag_arcs {
        has_incoming[cb] = true;
    }
    let source_classes = (0..classes.len()).filter(|&c| !has_incoming[c]).collect();
    Condensation {
        class_of,
        classes,
        dag_arcs,
        source_classes,
    }
}

pub fn condense(g: &AuxGraph) -> Condensation {
    condense_digraph(g.vertex_count(), g.arcs.iter().copied())
}

/// For each nontrivial (cycle-carrying) class of the base graph, the set of
/// states whose surrogate `w_i^T` it reaches. Feeds the partition matroid of
/// the connectivity constraint.
pub struct CycleClassReach {
    pub n_cycle_classes: usize,
    /// `reaching[i]`: sorted cycle-class ids that reach `WT(i)`
    pub reaching: Vec<Vec<usize>>,
}

pub fn cycle_class_reach(base: &AuxGraph) -> CycleClassReach {
    let n = base.n;
    let cond = condense(base);
    let mut cycle_classes: Vec<usize> = cond
        .classes
        .iter()
        .enumerate()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(id, _)| id)
        .collect();
    for &(a, b) in &base.arcs {
        if a == b && !cycle_classes.contains(&cond.class_of[a]) {
            cycle_classes.push(cond.class_of[a]);
        }
    }
    cycle_classes.sort_unstable();

    let out = base.out_arcs();
    let mut reaching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (slot, &cls) in cycle_classes.iter().enumerate() {
        let mut seen = vec![false; base.vertex_count()];
        let mut queue: VecDeque<usize> = cond.classes[cls].iter().copied().collect();
        for &v in &cond.classes[cls] {
            seen[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        for i in 0..n {
            if seen[Vertex::WT(i).id(n)] {
                reaching[i].push(slot);
            }
        }
    }
    CycleClassReach {
        n_cycle_classes: cycle_classes.len(),
        reaching,
    }
}

/// Formal symbols of the cycle-coefficient assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GammaSymbol {
    R(usize),
    C(usize),
    Unit,
}

/// Integer combination of formal symbols per arc; arcs outside the table
/// carry the zero sum.
#[derive(Debug, Clone, Default)]
pub struct GammaAssignment {
    pub coeffs: BTreeMap<(usize, usize), BTreeMap<GammaSymbol, i64>>,
}

impl GammaAssignment {
    pub fn arc_sum(&self, arc: (usize, usize)) -> BTreeMap<GammaSymbol, i64> {
        self.coeffs.get(&arc).cloned().unwrap_or_default()
    }
}

fn single(sym: GammaSymbol, coeff: i64) -> BTreeMap<GammaSymbol, i64> {
    let mut m = BTreeMap::new();
    m.insert(sym, coeff);
    m
}

/// Coefficient table: w pairs carry r symbols (negated when matched), x
/// pairs carry c symbols (negated when the x row is in J), free-entry arcs
/// carry a unit (negated when matched). Everything else is zero.
pub fn gamma_coefficients(g: &AuxGraph) -> GammaAssignment {
    let n = g.n;
    let mut out = GammaAssignment::default();
    for &(a, b) in &g.arcs {
        let va = Vertex::from_id(a, n);
        let vb = Vertex::from_id(b, n);
        let sum = match (va, vb) {
            (Vertex::WT(i), Vertex::WQ(j)) if i == j => single(GammaSymbol::R(i), 1),
            (Vertex::WQ(i), Vertex::WT(j)) if i == j => single(GammaSymbol::R(i), -1),
            (Vertex::XT(i), Vertex::XQ(j)) if i == j => single(GammaSymbol::C(i), 1),
            (Vertex::XQ(i), Vertex::XT(j)) if i == j => single(GammaSymbol::C(i), -1),
            (Vertex::WT(_), Vertex::XT(_)) => single(GammaSymbol::Unit, 1),
            (Vertex::XT(_), Vertex::WT(_)) => single(GammaSymbol::Unit, -1),
            _ => BTreeMap::new(),
        };
        if !sum.is_empty() {
            out.coeffs.insert((a, b), sum);
        }
    }
    out
}

pub const CYCLE_BUDGET: usize = 1_000_000;

/// Verify that every simple cycle of the subgraph on vertices not reaching
/// V- sums to the zero formal combination. Vacuously true when that
/// subgraph is acyclic.
pub fn cycle_sum_check(g_hat: &AuxGraph, gamma: &GammaAssignment) -> Result<bool, ModelError> {
    let reach_minus = g_hat.reaches_set(&g_hat.s_minus);
    let keep: Vec<bool> = reach_minus.iter().map(|&r| !r).collect();
    let sub_arcs: Vec<(usize, usize)> = g_hat
        .arcs
        .iter()
        .copied()
        .filter(|&(a, b)| keep[a] && keep[b])
        .collect();
    let cycles = enumerate_simple_cycles(g_hat.vertex_count(), &sub_arcs, CYCLE_BUDGET)?;
    for cycle in &cycles {
        let mut total: BTreeMap<GammaSymbol, i64> = BTreeMap::new();
        for w in 0..cycle.len() {
            let arc = (cycle[w], cycle[(w + 1) % cycle.len()]);
            for (sym, coef) in gamma.arc_sum(arc) {
                *total.entry(sym).or_insert(0) += coef;
            }
        }
        if total.values().any(|&v| v != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Johnson-style enumeration of simple cycles (as vertex lists without the
/// repeated endpoint). Errors past `cap` cycles.
pub fn enumerate_simple_cycles(
    nv: usize,
    arcs: &[(usize, usize)],
    cap: usize,
) -> Result<Vec<Vec<usize>>, ModelError> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in arcs {
        adj[a].push(b);
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    let mut cycles: Vec<Vec<usize>> = Vec::new();

    // restrict to vertices >= start, DFS with blocking
    fn unblock(v: usize, blocked: &mut [bool], block_map: &mut [BTreeSet<usize>]) {
        blocked[v] = false;
        let deps: Vec<usize> = block_map[v].iter().copied().collect();
        block_map[v].clear();
        for w in deps {
            if blocked[w] {
                unblock(w, blocked, block_map);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn circuit(
        v: usize,
        start: usize,
        adj: &[Vec<usize>],
        blocked: &mut [bool],
        block_map: &mut [BTreeSet<usize>],
        path: &mut Vec<usize>,
        cycles: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<bool, ModelError> {
        let mut found = false;
        path.push(v);
        blocked[v] = true;
        for &w in &adj[v] {
            if w < start {
                continue;
            }
            if w == start {
                cycles.push(path.clone());
                if cycles.len() > cap {
                    return Err(ModelError::CycleBudgetExceeded(cycles.len()));
                }
                found = true;
            } else if !blocked[w] && circuit(w, start, adj, blocked, block_map, path, cycles, cap)?
            {
                found = true;
            }
        }
        if found {
            unblock(v, blocked, block_map);
        } else {
            for &w in &adj[v] {
                if w >= start {
                    block_map[w].insert(v);
                }
            }
        }
        path.pop();
        Ok(found)
    }

    let mut blocked = vec![false; nv];
    let mut block_map: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nv];
    let mut path = Vec::new();
    for start in 0..nv {
        for b in blocked.iter_mut() {
            *b = false;
        }
        for m in block_map.iter_mut() {
            m.clear();
        }
        circuit(
            start,
            start,
            &adj,
            &mut blocked,
            &mut block_map,
            &mut path,
            &mut cycles,
            cap,
        )?;
        debug_assert!(path.is_empty());
    }
    Ok(cycles)
}

/// DOT rendering of the graph with vertex-type coloring and condensation
/// class annotations. Debug aid, not a stable format.
pub fn to_dot(g: &AuxGraph) -> String {
    let cond = condense(g);
    let mut s = String::from("digraph aux {\n  rankdir=LR;\n");
    for id in 0..g.vertex_count() {
        let v = Vertex::from_id(id, g.n);
        let color = match v {
            Vertex::WT(_) => "lightblue",
            Vertex::WQ(_) => "steelblue",
            Vertex::XT(_) => "palegreen",
            Vertex::XQ(_) => "seagreen",
            Vertex::UT(_) => "khaki",
            Vertex::UQ(_) => "gold",
        };
        let used = g.arcs.iter().any(|&(a, b)| a == id || b == id);
        if used {
            s.push_str(&format!(
                "  {} [label=\"{} [{}]\", style=filled, fillcolor={}];\n",
                id,
                v.label(),
                cond.class_of[id],
                color
            ));
        }
    }
    for &(a, b) in &g.arcs {
        s.push_str(&format!("  {a} -> {b};\n"));
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::{
        consensus_system, double_integrator_system, free_parameter_system, Graph,
    };

    fn path_graph(n: usize) -> Graph {
        let mut g = Graph::undirected(n);
        for i in 0..n - 1 {
            g.add_edge(i, i + 1);
        }
        g
    }

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn omega_layout_free_system() {
        let mut g = Graph::directed(2);
        g.add_edge(0, 1);
        let sys = free_parameter_system(&g);
        let aug = augment_with_inputs(&sys, &[]).unwrap();
        let om = build_omega(&aug);
        // fixed: [[-I | 0], [I | 0], [0 | I]]
        assert_eq!(om.entries.fixed_at(0, 0), rat(-1));
        assert_eq!(om.entries.fixed_at(1, 1), rat(-1));
        assert_eq!(om.entries.fixed_at(2, 0), rat(1));
        assert_eq!(om.entries.fixed_at(4, 2), rat(1));
        assert!(om.entries.is_free(1, 0)); // T_A support
        assert_eq!(om.row_labels[0], RowLabel::W(0));
        assert_eq!(om.row_labels[2], RowLabel::X(0));
        assert_eq!(om.row_labels[4], RowLabel::U(0));
    }

    #[test]
    fn omega_consensus_path_blocks() {
        let sys = consensus_system(&path_graph(2)).unwrap();
        let aug = augment_with_inputs(&sys, &[]).unwrap();
        let om = build_omega(&aug);
        // w rows: [-I K; K_I 0]: node rows carry -1 diag and incidence column
        assert_eq!(om.entries.fixed_at(0, 0), rat(-1));
        assert_eq!(om.entries.fixed_at(0, 2), rat(1));
        assert_eq!(om.entries.fixed_at(1, 2), rat(-1));
        // edge row: K_I in node columns, no F part
        assert_eq!(om.entries.fixed_at(2, 0), rat(1));
        assert_eq!(om.entries.fixed_at(2, 1), rat(-1));
        assert!(om.entries.is_free(2, 2));
    }

    #[test]
    fn omega_double_integrator_w_rows() {
        let g = Graph::directed(1);
        let sys = double_integrator_system(&g);
        let aug = augment_with_inputs(&sys, &[]).unwrap();
        let om = build_omega(&aug);
        // w rows fixed = [-1 1; 0 -1]
        assert_eq!(om.entries.fixed_at(0, 0), rat(-1));
        assert_eq!(om.entries.fixed_at(0, 1), rat(1));
        assert!(om.entries.fixed_at(1, 0).is_zero());
        assert_eq!(om.entries.fixed_at(1, 1), rat(-1));
    }

    #[test]
    fn canonical_matchings_validate() {
        // consensus: edge rows match their own diagonal weight column
        let sys = consensus_system(&path_graph(3)).unwrap();
        let om = build_omega(&augment_with_inputs(&sys, &[]).unwrap());
        let m = find_independent_matching(&om, sys.kind).unwrap();
        assert_eq!(m.partner[0], MatchPartner::OwnW);
        assert_eq!(m.partner[3], MatchPartner::X(3));
        assert_eq!(m.partner[4], MatchPartner::X(4));

        // double integrator and free: every w matched to its own w^Q
        let g = Graph::directed(2);
        let sys = double_integrator_system(&g);
        let om = build_omega(&augment_with_inputs(&sys, &[]).unwrap());
        let m = find_independent_matching(&om, sys.kind).unwrap();
        assert!(m.partner.iter().all(|&p| p == MatchPartner::OwnW));

        let mut gf = Graph::directed(3);
        gf.add_edge(0, 1);
        gf.add_edge(1, 2);
        let sys = free_parameter_system(&gf);
        let om = build_omega(&augment_with_inputs(&sys, &[]).unwrap());
        let m = find_independent_matching(&om, sys.kind).unwrap();
        assert!(m.partner.iter().all(|&p| p == MatchPartner::OwnW));
    }

    #[test]
    fn general_matching_agrees_on_constructors() {
        let sys = consensus_system(&path_graph(3)).unwrap();
        let om = build_omega(&augment_with_inputs(&sys, &[]).unwrap());
        let m = general_independent_matching(&om).unwrap();
        // whatever matching is found, its J rows must be independent and n
        assert_eq!(m.j_rows.len(), sys.n);
        assert!(validate_partners(&om, m.partner.clone()).is_some());
    }

    #[test]
    fn free_parameter_omega_tilde_closed_form() {
        let mut g = Graph::directed(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let sys = free_parameter_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let n = 3;
        // state block [[I], [-I]]
        for r in 0..n {
            for c in 0..n {
                let expect_w = if r == c { rat(1) } else { rat(0) };
                let expect_x = if r == c { rat(-1) } else { rat(0) };
                assert_eq!(base.omega_tilde[r][c], expect_w);
                assert_eq!(base.omega_tilde[n + r][c], expect_x);
            }
        }
    }

    #[test]
    fn free_parameter_base_arcs_match_derived_family() {
        let mut g = Graph::directed(2);
        g.add_edge(0, 1);
        let sys = free_parameter_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let n = 2;
        let a = |v: Vertex| v.id(n);
        let expected: BTreeSet<(usize, usize)> = [
            (a(Vertex::WQ(0)), a(Vertex::WT(0))),
            (a(Vertex::WQ(1)), a(Vertex::WT(1))),
            (a(Vertex::WT(1)), a(Vertex::XT(0))), // free entry at row 1, col 0
            (a(Vertex::XT(0)), a(Vertex::XQ(0))),
            (a(Vertex::XT(1)), a(Vertex::XQ(1))),
            (a(Vertex::XQ(0)), a(Vertex::WQ(0))),
            (a(Vertex::XQ(1)), a(Vertex::WQ(1))),
        ]
        .into();
        assert_eq!(base.arcs, expected);
    }

    #[test]
    fn consensus_omega_tilde_closed_form_path2() {
        let sys = consensus_system(&path_graph(2)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        // J columns: w0, w1 (nodes), x2 (edge). Expected state block:
        //   w node rows: identity
        //   w edge row:  [-K_I | K_I K] = [-1, 1 | 2]
        //   x node rows: [-I | K] = [[-1, 0, 1], [0, -1, -1]]
        //   x edge row:  unit at edge column
        let t = &base.omega_tilde;
        assert_eq!(t[0], vec![rat(1), rat(0), rat(0)]);
        assert_eq!(t[1], vec![rat(0), rat(1), rat(0)]);
        assert_eq!(t[2], vec![rat(-1), rat(1), rat(2)]);
        assert_eq!(t[3], vec![rat(-1), rat(0), rat(1)]);
        assert_eq!(t[4], vec![rat(0), rat(-1), rat(-1)]);
        assert_eq!(t[5], vec![rat(0), rat(0), rat(1)]);
    }

    #[test]
    fn double_integrator_omega_tilde_closed_form() {
        let mut g = Graph::directed(2);
        g.add_edge(0, 1);
        let sys = double_integrator_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let n = 4;
        // state block [[I], [-Psi_inv]] with Psi = [[-I, I], [0, -I]],
        // Psi_inv = [[-I, -I], [0, -I]]: x rows = [[-I, -I], [0, -I]].
        for r in 0..n {
            for c in 0..n {
                let expect_w = if r == c { rat(1) } else { rat(0) };
                assert_eq!(base.omega_tilde[r][c], expect_w, "w row {r} col {c}");
            }
        }
        let nn = 2;
        for r in 0..nn {
            for c in 0..nn {
                let d = if r == c { rat(-1) } else { rat(0) };
                assert_eq!(base.omega_tilde[n + r][c], d); // xi rows, xi cols: -I
                assert_eq!(base.omega_tilde[n + r][nn + c], d); // xi rows, zeta cols: -I
                assert!(base.omega_tilde[n + nn + r][c].is_zero()); // zeta rows, xi cols: 0
                assert_eq!(base.omega_tilde[n + nn + r][nn + c], d); // zeta rows, zeta cols: -I
            }
        }
    }

    #[test]
    fn input_edges_are_pure_and_counted() {
        let mut g = Graph::directed(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let sys = free_parameter_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let before = base.arcs.len();
        let with1 = add_input_edges(&base, &[1]);
        assert_eq!(base.arcs.len(), before);
        // n u-pair arcs plus one wT -> uT arc
        assert_eq!(with1.arcs.len(), before + 3 + 1);
        let with2 = add_input_edges(&base, &[0, 2]);
        assert_eq!(with2.arcs.len(), before + 3 + 2);
    }

    #[test]
    fn condensation_shapes() {
        // two disjoint 2-cycles: 2 classes, both sources
        let arcs = [(0, 1), (1, 0), (2, 3), (3, 2)];
        let c = condense_digraph(4, arcs);
        assert_eq!(c.classes.len(), 2);
        assert_eq!(c.source_classes.len(), 2);

        // chain of three singletons: 3 classes, 1 source
        let arcs = [(0, 1), (1, 2)];
        let c = condense_digraph(3, arcs);
        assert_eq!(c.classes.len(), 3);
        assert_eq!(c.source_classes.len(), 1);
        assert_eq!(c.class_of.len(), 3);
    }

    #[test]
    fn consensus_node_vertices_not_on_cycles() {
        let sys = consensus_system(&path_graph(3)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        let on = base.cycle_vertices();
        let n = sys.n;
        for i in 0..3 {
            assert!(!on[Vertex::XT(i).id(n)]);
            assert!(!on[Vertex::WT(i).id(n)]);
            assert!(!on[Vertex::WQ(i).id(n)]);
        }
        // edge-state vertices do lie on cycles
        for e in 3..5 {
            assert!(on[Vertex::XQ(e).id(n)]);
            assert!(on[Vertex::WT(e).id(n)]);
        }
    }

    #[test]
    fn reachability_acyclic_always_true() {
        // single node: base graph is a tree of pair arcs, no cycles
        let g = Graph::directed(1);
        let sys = free_parameter_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let ghat = add_input_edges(&base, &[]);
        assert!(reachability_satisfied(&ghat, &[]));
    }

    #[test]
    fn consensus_reachability_matches_component_coverage() {
        // two components: an edge {0,1} and an edge {2,3}
        let mut g = Graph::undirected(4);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        let sys = consensus_system(&g).unwrap();
        let base = build_base_graph(&sys).unwrap();
        for s in [vec![0usize], vec![2], vec![3]] {
            let ghat = add_input_edges(&base, &s);
            assert!(!reachability_satisfied(&ghat, &s), "S = {s:?}");
        }
        for s in [vec![0usize, 2], vec![1, 3], vec![0, 1, 2]] {
            let ghat = add_input_edges(&base, &s);
            assert!(reachability_satisfied(&ghat, &s), "S = {s:?}");
        }
    }

    #[test]
    fn reachability_monotone_in_s() {
        let sys = consensus_system(&path_graph(4)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        let mut st = crate::structmat::Stream::new(17);
        for _ in 0..20 {
            let mut s: Vec<usize> = (0..4).filter(|_| st.next_below(2) == 1).collect();
            let ghat = add_input_edges(&base, &s);
            if reachability_satisfied(&ghat, &s) {
                s.push(st.next_below(4) as usize);
                s.sort_unstable();
                s.dedup();
                let g2 = add_input_edges(&base, &s);
                assert!(reachability_satisfied(&g2, &s));
            }
        }
    }

    #[test]
    fn gamma_table_cases() {
        let mut g = Graph::directed(2);
        g.add_edge(0, 1);
        let sys = free_parameter_system(&g);
        let base = build_base_graph(&sys).unwrap();
        let gamma = gamma_coefficients(&base);
        let n = 2;
        // matched w pair: arc (wQ0 -> wT0) carries -r_0
        let arc = (Vertex::WQ(0).id(n), Vertex::WT(0).id(n));
        assert_eq!(gamma.arc_sum(arc), single(GammaSymbol::R(0), -1));
        // free-entry arc wT1 -> xT0 (unmatched): +1 unit
        let arc = (Vertex::WT(1).id(n), Vertex::XT(0).id(n));
        assert_eq!(gamma.arc_sum(arc), single(GammaSymbol::Unit, 1));
        // x pair with x not in J: arc (xT -> xQ) carries +c
        let arc = (Vertex::XT(0).id(n), Vertex::XQ(0).id(n));
        assert_eq!(gamma.arc_sum(arc), single(GammaSymbol::C(0), 1));
        // Q-to-Q arcs carry zero
        let arc = (Vertex::XQ(0).id(n), Vertex::WQ(0).id(n));
        assert!(gamma.arc_sum(arc).is_empty());
    }

    #[test]
    fn gamma_matched_free_entry_is_negative_unit() {
        // consensus: edge row matched to its own x column gives xT -> wT with -1
        let sys = consensus_system(&path_graph(2)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        let gamma = gamma_coefficients(&base);
        let n = 3;
        let arc = (Vertex::XT(2).id(n), Vertex::WT(2).id(n));
        assert!(base.arcs.contains(&arc));
        assert_eq!(gamma.arc_sum(arc), single(GammaSymbol::Unit, -1));
        // matched x pair: xQ -> xT carries -c
        let arc = (Vertex::XQ(2).id(n), Vertex::XT(2).id(n));
        assert_eq!(gamma.arc_sum(arc), single(GammaSymbol::C(2), -1));
    }

    #[test]
    fn cycle_enumeration_basics() {
        let arcs = vec![(0, 1), (1, 0), (1, 2), (2, 1)];
        let cycles = enumerate_simple_cycles(3, &arcs, 100).unwrap();
        assert_eq!(cycles.len(), 2);
        let arcs = vec![(0, 0)];
        let cycles = enumerate_simple_cycles(1, &arcs, 100).unwrap();
        assert_eq!(cycles, vec![vec![0]]);
    }

    #[test]
    fn cycle_budget_enforced() {
        // complete digraph on 7 vertices has > 100 simple cycles
        let mut arcs = Vec::new();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    arcs.push((i, j));
                }
            }
        }
        assert!(matches!(
            enumerate_simple_cycles(7, &arcs, 100),
            Err(ModelError::CycleBudgetExceeded(_))
        ));
    }

    #[test]
    fn cycle_sum_check_on_consensus_with_cover() {
        let sys = consensus_system(&path_graph(3)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        let s = vec![0usize];
        let ghat = add_input_edges(&base, &s);
        let gamma = gamma_coefficients(&ghat);
        // every cycle vertex reaches u through wT0, so the non-reaching
        // subgraph is acyclic and the check passes vacuously
        assert!(cycle_sum_check(&ghat, &gamma).unwrap());
    }

    #[test]
    fn cycle_sum_check_detects_nonzero_cycle() {
        // hand-built graph: a 2-cycle between wT0 and xT0 where only one arc
        // carries a unit coefficient
        let sys_g = {
            let mut g = Graph::directed(2);
            g.add_edge(0, 1);
            g
        };
        let sys = free_parameter_system(&sys_g);
        let base = build_base_graph(&sys).unwrap();
        let n = base.n;
        let mut fake = base.clone();
        fake.arcs.clear();
        fake.s = vec![];
        fake.arcs.insert((Vertex::WT(0).id(n), Vertex::XT(0).id(n)));
        fake.arcs.insert((Vertex::XT(0).id(n), Vertex::WT(0).id(n)));
        let mut gamma = GammaAssignment::default();
        gamma.coeffs.insert(
            (Vertex::WT(0).id(n), Vertex::XT(0).id(n)),
            single(GammaSymbol::Unit, 1),
        );
        // reverse arc deliberately left at zero: the cycle sums to +1
        assert!(!cycle_sum_check(&fake, &gamma).unwrap());

        // balanced assignment: +r then -r cancels
        let mut gamma2 = GammaAssignment::default();
        gamma2.coeffs.insert(
            (Vertex::WT(0).id(n), Vertex::XT(0).id(n)),
            single(GammaSymbol::R(0), 1),
        );
        gamma2.coeffs.insert(
            (Vertex::XT(0).id(n), Vertex::WT(0).id(n)),
            single(GammaSymbol::R(0), -1),
        );
        assert!(cycle_sum_check(&fake, &gamma2).unwrap());
    }

    #[test]
    fn dot_export_mentions_types() {
        let sys = consensus_system(&path_graph(2)).unwrap();
        let base = build_base_graph(&sys).unwrap();
        let dot = to_dot(&base);
        assert!(dot.starts_with("digraph aux {"));
        assert!(dot.contains("wT"));
        assert!(dot.contains("->"));
    }
}
