//! Model types: general rooted parametrization (root marginal + directed
//! per-edge conditionals) and the symmetric parametrization (per-edge
//! alpha-values, uniform node marginals), plus exact small-set
//! marginalization and i.i.d. sampling.

use rand::Rng;
use thiserror::Error;

use crate::rng::stream;

/// One full assignment over `{+1, -1}^n`, stored as `i8` values.
pub type Assignment = Vec<i8>;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("edge ({0}, {1}) creates a cycle")]
    CycleDetected(usize, usize),
    #[error("node {0} is not reachable from the root")]
    Disconnected(usize),
    #[error("probability {value} out of [0,1] at {field}")]
    ProbabilityOutOfRange { field: String, value: f64 },
    #[error("expected {expected} edges for {n} nodes, got {got}")]
    WrongEdgeCount { n: usize, expected: usize, got: usize },
    #[error("node index {0} out of range for n={1}")]
    NodeOutOfRange(usize, usize),
    #[error("assignment has {got} entries, model has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("assignment entry {0} is not +1 or -1")]
    BadAssignmentValue(i8),
    #[error("node {0} has more than one parent")]
    DuplicateChild(usize),
    #[error("alpha {0} out of [-1,1]")]
    AlphaOutOfRange(f64),
}

/// Index helpers: outcome value `+1` maps to table index 0, `-1` to index 1.
#[inline]
pub(crate) fn vidx(x: i8) -> usize {
    if x == 1 {
        0
    } else {
        1
    }
}

#[inline]
pub(crate) fn vval(idx: usize) -> i8 {
    if idx == 0 {
        1
    } else {
        -1
    }
}

/// Exact joint distribution of an (ordered) pair of binary variables.
/// `p[a][b]` is the probability of the first variable taking `vval(a)` and
/// the second taking `vval(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMarginal {
    pub p: [[f64; 2]; 2],
}

impl PairwiseMarginal {
    pub fn new(p: [[f64; 2]; 2]) -> Self {
        PairwiseMarginal { p }
    }

    /// Total-mass and nonnegativity invariant check (1e-12 tolerance).
    pub fn is_valid(&self) -> bool {
        let s: f64 = self.p.iter().flatten().sum();
        (s - 1.0).abs() <= 1e-12 && self.p.iter().flatten().all(|&v| v >= 0.0)
    }

    /// Marginal of the first variable: `[P(+1), P(-1)]`.
    pub fn first(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
    }

    /// Marginal of the second variable: `[P(+1), P(-1)]`.
    pub fn second(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
    }

    /// `P(first = second)`.
    pub fn agree(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }

    /// `2 P(first = second) - 1`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.agree() - 1.0
    }

    /// Conditional of the second variable given the first:
    /// `rows[a][b] = P(second = vval(b) | first = vval(a))`, 0 when the
    /// conditioning value has zero mass.
    pub fn cond_second_given_first(&self) -> [[f64; 2]; 2] {
        let f = self.first();
        let mut c = [[0.0; 2]; 2];
        for a in 0..2 {
            if f[a] > 0.0 {
                for b in 0..2 {
                    c[a][b] = self.p[a][b] / f[a];
                }
            }
        }
        c
    }

    /// Same pair with the variable order swapped.
    pub fn transpose(&self) -> PairwiseMarginal {
        PairwiseMarginal::new([[self.p[0][0], self.p[1][0]], [self.p[0][1], self.p[1][1]]])
    }
}

/// A binary tree-structured Bayesnet: a spanning tree rooted at node 0,
/// a root marginal, and one directed conditional per edge.
///
/// The joint factorizes as the root marginal times the product over edges
/// `(parent, child)` of `P(child | parent)`, where `q_pp = P(child = +1 |
/// parent = +1)` and `q_pm = P(child = +1 | parent = -1)`. Degenerate
/// conditionals (0 or 1) are legal; assignments off the support get
/// probability 0 (log-density -inf).
///
/// Models are immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub n: usize,
    /// `(parent, child)` pairs; any order, rooted at node 0.
    pub edges: Vec<(usize, usize)>,
    /// `P(X_root = +1)`.
    pub root_prob: f64,
    /// `(q_pp, q_pm)` per edge, aligned with `edges`.
    pub cond: Vec<(f64, f64)>,
}

impl TreeModel {
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        root_prob: f64,
        cond: Vec<(f64, f64)>,
    ) -> Result<Self, ModelError> {
        let m = TreeModel { n, edges, root_prob, cond };
        m.validate()?;
        Ok(m)
    }

    /// Checks the full type invariant: spanning rooted tree, all
    /// probabilities in range.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n == 0 {
            return Err(ModelError::WrongEdgeCount { n: 0, expected: 0, got: self.edges.len() });
        }
        if self.edges.len() != self.n - 1 || self.cond.len() != self.edges.len() {
            return Err(ModelError::WrongEdgeCount {
                n: self.n,
                expected: self.n - 1,
                got: self.edges.len(),
            });
        }
        check_prob("root_prob", self.root_prob)?;
        let mut parent = vec![usize::MAX; self.n];
        for (idx, &(p, c)) in self.edges.iter().enumerate() {
            if p >= self.n {
                return Err(ModelError::NodeOutOfRange(p, self.n));
            }
            if c >= self.n {
                return Err(ModelError::NodeOutOfRange(c, self.n));
            }
            if c == 0 || parent[c] != usize::MAX {
                // Node 0 gaining a parent, or any node gaining two, means the
                // edge set cannot be a tree rooted at 0.
                return Err(if c == 0 {
                    ModelError::CycleDetected(p, c)
                } else {
                    ModelError::DuplicateChild(c)
                });
            }
            parent[c] = p;
            let (qpp, qpm) = self.cond[idx];
            check_prob(&format!("edge ({p}, {c}) q_pp"), qpp)?;
            check_prob(&format!("edge ({p}, {c}) q_pm"), qpm)?;
        }
        // Every non-root node has exactly one parent here; the structure is a
        // tree iff walking parents from each node reaches the root (no cycle).
        let mut state = vec![0u8; self.n]; // 0 unseen, 1 on stack, 2 done
        state[0] = 2;
        for start in 1..self.n {
            if state[start] == 2 {
                continue;
            }
            let mut v = start;
            let mut trail = Vec::new();
            loop {
                if state[v] == 2 {
                    break;
                }
                if state[v] == 1 {
                    return Err(ModelError::CycleDetected(parent[v], v));
                }
                if parent[v] == usize::MAX {
                    return Err(ModelError::Disconnected(start));
                }
                state[v] = 1;
                trail.push(v);
                v = parent[v];
            }
            for t in trail {
                state[t] = 2;
            }
        }
        Ok(())
    }

    /// Parent of each node (`usize::MAX` for the root).
    pub fn parents(&self) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.n];
        for &(p, c) in &self.edges {
            parent[c] = p;
        }
        parent
    }

    /// Nodes in breadth-first order from the root; parents precede children.
    pub fn topo_order(&self) -> Vec<usize> {
        let mut children = vec![Vec::new(); self.n];
        for &(p, c) in &self.edges {
            children[p].push(c);
        }
        for ch in &mut children {
            ch.sort_unstable();
        }
        let mut order = Vec::with_capacity(self.n);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &children[v] {
                queue.push_back(c);
            }
        }
        order
    }

    /// Conditional `(q_pp, q_pm)` per node for its incoming edge, indexed by
    /// child; the root slot is unused.
    pub(crate) fn cond_by_child(&self) -> Vec<(f64, f64)> {
        let mut by_child = vec![(0.0, 0.0); self.n];
        for (idx, &(_, c)) in self.edges.iter().enumerate() {
            by_child[c] = self.cond[idx];
        }
        by_child
    }

    /// Exact single-node marginals `[P(+1), P(-1)]` for every node.
    pub fn node_marginals(&self) -> Vec<[f64; 2]> {
        let parent = self.parents();
        let by_child = self.cond_by_child();
        let mut marg = vec![[0.0; 2]; self.n];
        for v in self.topo_order() {
            if v == 0 {
                marg[0] = [self.root_prob, 1.0 - self.root_prob];
            } else {
                let pm = marg[parent[v]];
                let (qpp, qpm) = by_child[v];
                let p1 = qpp * pm[0] + qpm * pm[1];
                marg[v] = [p1, pm[0] * (1.0 - qpp) + pm[1] * (1.0 - qpm)];
            }
        }
        marg
    }

    /// Log-probability (nats) of a full assignment; `-inf` off the support.
    pub fn log_density(&self, x: &[i8]) -> Result<f64, ModelError> {
        if x.len() != self.n {
            return Err(ModelError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        for &v in x {
            if v != 1 && v != -1 {
                return Err(ModelError::BadAssignmentValue(v));
            }
        }
        let mut ld = ln_or_neg_inf(if x[0] == 1 { self.root_prob } else { 1.0 - self.root_prob });
        for (idx, &(p, c)) in self.edges.iter().enumerate() {
            let (qpp, qpm) = self.cond[idx];
            let q1 = if x[p] == 1 { qpp } else { qpm };
            ld += ln_or_neg_inf(if x[c] == 1 { q1 } else { 1.0 - q1 });
        }
        Ok(ld)
    }

    /// Draws `count` i.i.d. assignments. The root is sampled first, then each
    /// node in breadth-first order from its parent's conditional; one uniform
    /// draw per node per sample, so output is fully determined by `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Assignment> {
        let order = self.topo_order();
        let parent = self.parents();
        let by_child = self.cond_by_child();
        let mut rng = stream(seed, &[]);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut x = vec![0i8; self.n];
            for &v in &order {
                let p1 = if v == 0 {
                    self.root_prob
                } else {
                    let (qpp, qpm) = by_child[v];
                    if x[parent[v]] == 1 {
                        qpp
                    } else {
                        qpm
                    }
                };
                x[v] = if rng.random::<f64>() < p1 { 1 } else { -1 };
            }
            out.push(x);
        }
        out
    }

    /// Undirected adjacency of the tree.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(p, c) in &self.edges {
            adj[p].push(c);
            adj[c].push(p);
        }
        adj
    }

    /// Exact joint distribution of the variables in `s` (2..=16 entries are
    /// practical; the cost is `2^|s|` clamped sum-product passes over the
    /// spanning subtree connecting `s`). The returned vector has length
    /// `2^|s|`, indexed so that `s[0]` varies slowest and value `+1` sorts
    /// before `-1` (index bit 0 for `+1`, 1 for `-1`).
    pub fn joint_marginal(&self, s: &[usize]) -> Result<Vec<f64>, ModelError> {
        for &v in s {
            if v >= self.n {
                return Err(ModelError::NodeOutOfRange(v, self.n));
            }
        }
        let k = s.len();
        if k == 0 {
            return Ok(vec![1.0]);
        }
        let marg = self.node_marginals();
        let parent = self.parents();
        let by_child = self.cond_by_child();
        // Depths for path walking.
        let mut depth = vec![0usize; self.n];
        for v in self.topo_order() {
            if v != 0 {
                depth[v] = depth[parent[v]] + 1;
            }
        }
        // Hull: union of the pairwise paths between nodes of s.
        let mut in_hull = vec![false; self.n];
        in_hull[s[0]] = true;
        for &b in &s[1..] {
            let (mut u, mut v) = (s[0], b);
            while depth[u] > depth[v] {
                in_hull[u] = true;
                u = parent[u];
            }
            while depth[v] > depth[u] {
                in_hull[v] = true;
                v = parent[v];
            }
            while u != v {
                in_hull[u] = true;
                in_hull[v] = true;
                u = parent[u];
                v = parent[v];
            }
            in_hull[u] = true;
        }
        // Root the hull subtree at its shallowest node and orient away from
        // it; each directed hull edge gets a conditional table
        // `cond[x_from][x_to]`, reversing the stored conditional when the
        // edge points from child to parent.
        let top = (0..self.n).filter(|&v| in_hull[v]).min_by_key(|&v| depth[v]).unwrap();
        let adj = self.adjacency();
        let mut hull_children: Vec<Vec<(usize, [[f64; 2]; 2])>> = vec![Vec::new(); self.n];
        let mut post = Vec::new(); // hull nodes, parents after children
        let mut stack = vec![top];
        let mut seen = vec![false; self.n];
        seen[top] = true;
        let mut pre = Vec::new();
        while let Some(v) = stack.pop() {
            pre.push(v);
            for &w in &adj[v] {
                if in_hull[w] && !seen[w] {
                    seen[w] = true;
                    let table = if parent[w] == v {
                        let (qpp, qpm) = by_child[w];
                        [[qpp, 1.0 - qpp], [qpm, 1.0 - qpm]]
                    } else {
                        // w is the tree-parent of v: reverse P(v|w) using the
                        // exact node marginals; zero-mass conditioning -> 0.
                        let (qpp, qpm) = by_child[v];
                        let fwd = [[qpp, 1.0 - qpp], [qpm, 1.0 - qpm]];
                        let mut rev = [[0.0; 2]; 2];
                        for xv in 0..2 {
                            if marg[v][xv] > 0.0 {
                                for xw in 0..2 {
                                    rev[xv][xw] = marg[w][xw] * fwd[xw][xv] / marg[v][xv];
                                }
                            }
                        }
                        rev
                    };
                    hull_children[v].push((w, table));
                    stack.push(w);
                }
            }
        }
        post.extend(pre.iter().rev().copied());
        // Position of each node of s in the output index.
        let mut s_pos = vec![usize::MAX; self.n];
        for (t, &v) in s.iter().enumerate() {
            s_pos[v] = t;
        }
        let mut out = vec![0.0; 1usize << k];
        let mut f = vec![[0.0f64; 2]; self.n];
        for idx in 0..(1usize << k) {
            let clamped = |v: usize| -> Option<usize> {
                if s_pos[v] == usize::MAX {
                    None
                } else {
                    Some((idx >> (k - 1 - s_pos[v])) & 1)
                }
            };
            for &v in &post {
                for xv in 0..2 {
                    let mut val = 1.0;
                    for &(c, table) in &hull_children[v] {
                        let mut sum = 0.0;
                        for xc in 0..2 {
                            if clamped(c).map(|want| want == xc).unwrap_or(true) {
                                sum += table[xv][xc] * f[c][xc];
                            }
                        }
                        val *= sum;
                    }
                    f[v][xv] = val;
                }
            }
            let mut total = 0.0;
            for xt in 0..2 {
                if clamped(top).map(|want| want == xt).unwrap_or(true) {
                    total += marg[top][xt] * f[top][xt];
                }
            }
            out[idx] = total;
        }
        Ok(out)
    }

    /// Exact 2x2 marginal of `(X_i, X_j)`.
    pub fn pair_marginal(&self, i: usize, j: usize) -> Result<PairwiseMarginal, ModelError> {
        if i == j {
            return Err(ModelError::NodeOutOfRange(j, self.n));
        }
        let joint = self.joint_marginal(&[i, j])?;
        Ok(PairwiseMarginal::new([[joint[0], joint[1]], [joint[2], joint[3]]]))
    }

    /// Converts the symmetric parametrization: root marginal 1/2 and
    /// `q_pp = (1 + alpha) / 2`, `q_pm = (1 - alpha) / 2` per edge.
    pub fn from_symmetric(sym: &SymmetricTreeModel) -> Result<TreeModel, ModelError> {
        sym.validate()?;
        // Orient the undirected tree away from node 0.
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sym.n];
        for (idx, &(i, j)) in sym.edges.iter().enumerate() {
            adj[i].push((j, sym.alpha[idx]));
            adj[j].push((i, sym.alpha[idx]));
        }
        let mut edges = Vec::with_capacity(sym.n.saturating_sub(1));
        let mut cond = Vec::with_capacity(sym.n.saturating_sub(1));
        let mut seen = vec![false; sym.n];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(w, a) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    edges.push((v, w));
                    cond.push(((1.0 + a) / 2.0, (1.0 - a) / 2.0));
                    queue.push_back(w);
                }
            }
        }
        TreeModel::new(sym.n, edges, 0.5, cond)
    }
}

/// A symmetric tree-structured Ising model: every node marginal is uniform
/// and each undirected edge `(i, j)` carries `alpha = 2 P(X_i = X_j) - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTreeModel {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub alpha: Vec<f64>,
}

impl SymmetricTreeModel {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, alpha: Vec<f64>) -> Result<Self, ModelError> {
        let m = SymmetricTreeModel { n, edges, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n == 0 || self.edges.len() != self.n - 1 || self.alpha.len() != self.edges.len() {
            return Err(ModelError::WrongEdgeCount {
                n: self.n,
                expected: self.n.saturating_sub(1),
                got: self.edges.len(),
            });
        }
        for &a in &self.alpha {
            if !(-1.0..=1.0).contains(&a) {
                return Err(ModelError::AlphaOutOfRange(a));
            }
        }
        let mut uf = UnionFind::new(self.n);
        for &(i, j) in &self.edges {
            if i >= self.n {
                return Err(ModelError::NodeOutOfRange(i, self.n));
            }
            if j >= self.n {
                return Err(ModelError::NodeOutOfRange(j, self.n));
            }
            if !uf.union(i, j) {
                return Err(ModelError::CycleDetected(i, j));
            }
        }
        Ok(())
    }
}

fn check_prob(field: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ModelError::ProbabilityOutOfRange { field: field.to_string(), value: v })
    }
}

#[inline]
fn ln_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Union-find with path compression and union by rank.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns false when `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Groups as sorted lists, ordered by smallest member.
    pub fn groups(&mut self, n: usize) -> Vec<Vec<usize>> {
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..n {
            let r = self.find(v);
            by_root.entry(r).or_default().push(v);
        }
        let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> TreeModel {
        TreeModel::new(3, vec![(0, 1), (1, 2)], 0.6, vec![(0.7, 0.2), (0.9, 0.1)]).unwrap()
    }

    #[test]
    fn validate_accepts_uniform_path() {
        TreeModel::new(3, vec![(0, 1), (1, 2)], 0.5, vec![(0.5, 0.5), (0.5, 0.5)]).unwrap();
    }

    #[test]
    fn validate_rejects_cycle() {
        let m = TreeModel {
            n: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
            root_prob: 0.5,
            cond: vec![(0.5, 0.5); 3],
        };
        assert!(matches!(m.validate(), Err(ModelError::WrongEdgeCount { .. })));
        let m = TreeModel {
            n: 4,
            edges: vec![(0, 1), (2, 3), (3, 2)],
            root_prob: 0.5,
            cond: vec![(0.5, 0.5); 3],
        };
        // 2 and 3 parent each other, forming a cycle disjoint from the root.
        assert!(matches!(m.validate(), Err(ModelError::CycleDetected(_, _))));
        let m = TreeModel {
            n: 4,
            edges: vec![(0, 1), (2, 3), (3, 10)],
            root_prob: 0.5,
            cond: vec![(0.5, 0.5); 3],
        };
        assert!(matches!(m.validate(), Err(ModelError::NodeOutOfRange(10, 4))));
    }

    #[test]
    fn validate_rejects_bad_probability() {
        let m = TreeModel {
            n: 2,
            edges: vec![(0, 1)],
            root_prob: 0.5,
            cond: vec![(1.3, 0.5)],
        };
        assert!(matches!(m.validate(), Err(ModelError::ProbabilityOutOfRange { .. })));
    }

    #[test]
    fn validate_rejects_disconnected_cycle_component() {
        // 0-1 plus a 2<->3 cycle is caught as a duplicate child / cycle.
        let m = TreeModel {
            n: 4,
            edges: vec![(0, 1), (2, 3), (1, 3)],
            root_prob: 0.5,
            cond: vec![(0.5, 0.5); 3],
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn log_density_matches_hand_product() {
        let m = TreeModel::new(1, vec![], 0.5, vec![]).unwrap();
        assert!((m.log_density(&[1]).unwrap() - 0.5f64.ln()).abs() < 1e-15);

        let copy = TreeModel::new(2, vec![(0, 1)], 0.5, vec![(1.0, 0.0)]).unwrap();
        assert!((copy.log_density(&[1, 1]).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(copy.log_density(&[1, -1]).unwrap(), f64::NEG_INFINITY);

        let m = chain3();
        let expect = (0.6f64 * 0.3 * 0.1).ln();
        assert!((m.log_density(&[1, -1, 1]).unwrap() - expect).abs() < 1e-12);

        assert!(matches!(
            m.log_density(&[1, 1]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn deterministic_model_samples_all_ones() {
        let m = TreeModel::new(3, vec![(0, 1), (1, 2)], 1.0, vec![(1.0, 0.0), (1.0, 0.0)]).unwrap();
        for x in m.sample(9, 50) {
            assert_eq!(x, vec![1, 1, 1]);
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let m = chain3();
        assert_eq!(m.sample(1234, 100), m.sample(1234, 100));
        assert_ne!(m.sample(1234, 100), m.sample(1235, 100));
    }

    #[test]
    fn sample_frequencies_match_exact_pair_marginal() {
        let m = TreeModel::new(2, vec![(0, 1)], 0.5, vec![(0.9, 0.1)]).unwrap();
        let samples = m.sample(7, 1_000_000);
        let agree = samples.iter().filter(|x| x[0] == x[1]).count() as f64 / 1e6;
        assert!((agree - 0.9).abs() < 0.01);
    }

    #[test]
    fn pair_marginal_adjacent_matches_direct_product() {
        let m = TreeModel::new(2, vec![(0, 1)], 0.5, vec![(0.75, 0.25)]).unwrap();
        let pm = m.pair_marginal(0, 1).unwrap();
        let expect = [[0.375, 0.125], [0.125, 0.375]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((pm.p[a][b] - expect[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pair_marginal_composes_alpha_along_paths() {
        let sym = SymmetricTreeModel::new(3, vec![(0, 1), (1, 2)], vec![0.5, 0.5]).unwrap();
        let m = TreeModel::from_symmetric(&sym).unwrap();
        let pm = m.pair_marginal(0, 2).unwrap();
        assert!((pm.alpha() - 0.25).abs() < 1e-14);
        assert!((pm.agree() - 0.625).abs() < 1e-14);
    }

    #[test]
    fn all_half_conditionals_give_independent_uniform_pairs() {
        let m = TreeModel::new(4, vec![(0, 1), (1, 2), (2, 3)], 0.5, vec![(0.5, 0.5); 3]).unwrap();
        let pm = m.pair_marginal(0, 3).unwrap();
        for row in pm.p {
            for v in row {
                assert!((v - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn from_symmetric_boundary_alphas() {
        let sym = SymmetricTreeModel::new(2, vec![(0, 1)], vec![1.0]).unwrap();
        let m = TreeModel::from_symmetric(&sym).unwrap();
        assert_eq!(m.cond[0], (1.0, 0.0));
        let sym = SymmetricTreeModel::new(2, vec![(0, 1)], vec![0.0]).unwrap();
        let m = TreeModel::from_symmetric(&sym).unwrap();
        assert_eq!(m.cond[0], (0.5, 0.5));
        let sym = SymmetricTreeModel::new(2, vec![(0, 1)], vec![0.5]).unwrap();
        let m = TreeModel::from_symmetric(&sym).unwrap();
        assert_eq!(m.cond[0], (0.75, 0.25));
        assert!((m.pair_marginal(0, 1).unwrap().alpha() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn joint_marginal_agrees_with_full_enumeration() {
        // Random-ish fixed model on 5 nodes with a branch.
        let m = TreeModel::new(
            5,
            vec![(0, 1), (1, 2), (1, 3), (3, 4)],
            0.3,
            vec![(0.8, 0.1), (0.6, 0.4), (0.9, 0.2), (0.35, 0.75)],
        )
        .unwrap();
        let s = [4usize, 0, 2];
        let joint = m.joint_marginal(&s).unwrap();
        let mut brute = vec![0.0; 8];
        for bits in 0..(1u32 << 5) {
            let x: Vec<i8> = (0..5).map(|v| if bits >> v & 1 == 0 { 1 } else { -1 }).collect();
            let p = m.log_density(&x).unwrap().exp();
            let mut idx = 0;
            for (t, &v) in s.iter().enumerate() {
                idx |= (vidx(x[v])) << (s.len() - 1 - t);
            }
            brute[idx] += p;
        }
        for (a, b) in joint.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }
}
