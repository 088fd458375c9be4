//! Learning tree models from samples: pair counting, plug-in statistics,
//! maximum-spanning-tree structure search, and empirical-marginal
//! consistency checks.

use thiserror::Error;

use crate::measures::{mutual_information, DiscreteDist};
use crate::model::{vidx, ModelError, PairwiseMarginal, SymmetricTreeModel, TreeModel, UnionFind};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no samples provided")]
    NoSamples,
    #[error("sample {index} has {got} values, expected {expected}")]
    WidthMismatch { index: usize, expected: usize, got: usize },
    #[error("sample {index} contains value {value}, expected +1 or -1")]
    BadValue { index: usize, value: i8 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnMode {
    General,
    Symmetric,
}

/// Empirical pair statistics over a sample set, counted once and shared by
/// all downstream estimators.
///
/// Counting uses one bitmap per node (bit t set when sample t has value +1
/// at that node), so each pair count is a word-parallel popcount pass.
#[derive(Debug, Clone)]
pub struct PairCountTable {
    pub n: usize,
    pub m: usize,
    /// Count of samples with value +1 per node.
    pub plus: Vec<u64>,
    /// `n11[i][j]` (j > i, flattened) = samples with +1 at both i and j.
    n11: Vec<u64>,
}

fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // Row-major upper triangle without diagonal.
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl PairCountTable {
    pub fn from_samples(n: usize, samples: &[Vec<i8>]) -> Result<Self, LearnError> {
        if samples.is_empty() {
            return Err(LearnError::NoSamples);
        }
        let m = samples.len();
        let words = m.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for (t, s) in samples.iter().enumerate() {
            if s.len() != n {
                return Err(LearnError::WidthMismatch { index: t, expected: n, got: s.len() });
            }
            for (i, &v) in s.iter().enumerate() {
                match v {
                    1 => bits[i * words + t / 64] |= 1u64 << (t % 64),
                    -1 => {}
                    other => return Err(LearnError::BadValue { index: t, value: other }),
                }
            }
        }
        let plus: Vec<u64> = (0..n)
            .map(|i| bits[i * words..(i + 1) * words].iter().map(|w| w.count_ones() as u64).sum())
            .collect();
        let mut n11 = vec![0u64; n * (n.saturating_sub(1)) / 2];
        for i in 0..n {
            let bi = &bits[i * words..(i + 1) * words];
            for j in i + 1..n {
                let bj = &bits[j * words..(j + 1) * words];
                n11[pair_slot(n, i, j)] = bi
                    .iter()
                    .zip(bj)
                    .map(|(a, b)| (a & b).count_ones() as u64)
                    .sum();
            }
        }
        Ok(PairCountTable { n, m, plus, n11 })
    }

    /// Empirical P(+1) for one node.
    pub fn node_plus_freq(&self, i: usize) -> f64 {
        self.plus[i] as f64 / self.m as f64
    }

    /// Empirical joint over an unordered pair, indexed `(value_i, value_j)`.
    pub fn pair_marginal(&self, i: usize, j: usize) -> PairwiseMarginal {
        let (a, b, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        let m = self.m as f64;
        let n11 = self.n11[pair_slot(self.n, a, b)] as f64 / m;
        let pa = self.plus[a] as f64 / m;
        let pb = self.plus[b] as f64 / m;
        let p = [[n11, pa - n11], [pb - n11, 1.0 - pa - pb + n11]];
        let p = [
            [p[0][0].max(0.0), p[0][1].max(0.0)],
            [p[1][0].max(0.0), p[1][1].max(0.0)],
        ];
        if flip {
            PairwiseMarginal::new(p).transpose()
        } else {
            PairwiseMarginal::new(p)
        }
    }
}

/// Plug-in mutual information (nats) of an empirical pair.
pub fn plugin_mi(table: &PairCountTable, i: usize, j: usize) -> f64 {
    mutual_information(&table.pair_marginal(i, j))
}

/// Empirical agreement statistic `2 freq(X_i = X_j) - 1`.
pub fn alpha_hat(table: &PairCountTable, i: usize, j: usize) -> f64 {
    table.pair_marginal(i, j).alpha()
}

/// Maximum (weight) spanning tree of the complete graph given per-pair
/// weights. Ties are broken deterministically by sorting candidate edges by
/// `(-weight, i, j)`. Returns edges as `(i, j)` with `i < j`.
pub fn kruskal_max_st(n: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            cand.push((weight(i, j), i, j));
        }
    }
    cand.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in cand {
        if uf.union(i, j) {
            edges.push((i, j));
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    edges
}

/// A learned model: structure plus the empirical statistics needed to
/// instantiate either parametrization.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub n: usize,
    pub mode: LearnMode,
    /// Spanning-tree edges, `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Empirical pair marginal for each selected edge.
    pub edge_marginals: Vec<PairwiseMarginal>,
    /// Edge weight used by the structure search (MI or |alpha-hat|).
    pub weights: Vec<f64>,
    /// Empirical P(+1) per node.
    pub node_prob: Vec<f64>,
}

impl LearnedModel {
    /// Directed general model rooted at node 0, with conditionals read off
    /// the empirical edge marginals.
    pub fn to_tree_model(&self) -> Result<TreeModel, ModelError> {
        let mut adj = vec![Vec::new(); self.n];
        for (idx, &(i, j)) in self.edges.iter().enumerate() {
            adj[i].push((j, idx));
            adj[j].push((i, idx));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut cond = Vec::with_capacity(self.edges.len());
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            let mut nbrs = adj[v].clone();
            nbrs.sort();
            for (w, idx) in nbrs {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                let m = &self.edge_marginals[idx];
                // Stored marginal is indexed (smaller node, larger node);
                // orient it as (parent v, child w).
                let oriented = if self.edges[idx].0 == v { m.clone() } else { m.transpose() };
                let c = oriented.cond_second_given_first();
                edges.push((v, w));
                cond.push((c[0][0], c[1][0]));
                queue.push_back(w);
            }
        }
        TreeModel::new(self.n, edges, self.node_prob[0], cond)
    }

    /// Symmetric model with per-edge empirical agreement statistics.
    pub fn to_symmetric_model(&self) -> Result<SymmetricTreeModel, ModelError> {
        let alpha = self.edge_marginals.iter().map(|m| m.alpha()).collect();
        SymmetricTreeModel::new(self.n, self.edges.clone(), alpha)
    }
}

fn build_learned(table: &PairCountTable, mode: LearnMode) -> LearnedModel {
    let n = table.n;
    let weight_of = |i: usize, j: usize| match mode {
        LearnMode::General => plugin_mi(table, i, j),
        LearnMode::Symmetric => alpha_hat(table, i, j).abs(),
    };
    let edges = kruskal_max_st(n, weight_of);
    let edge_marginals = edges.iter().map(|&(i, j)| table.pair_marginal(i, j)).collect();
    let weights = edges.iter().map(|&(i, j)| weight_of(i, j)).collect();
    let node_prob = (0..n).map(|i| table.node_plus_freq(i)).collect();
    LearnedModel { n, mode, edges, edge_marginals, weights, node_prob }
}

/// Structure + parameter learning with plug-in mutual information weights.
pub fn chow_liu(n: usize, samples: &[Vec<i8>]) -> Result<LearnedModel, LearnError> {
    let table = PairCountTable::from_samples(n, samples)?;
    Ok(build_learned(&table, LearnMode::General))
}

/// Structure + parameter learning with |agreement| weights, for models
/// assumed to have uniform node marginals.
pub fn chow_liu_symmetric(n: usize, samples: &[Vec<i8>]) -> Result<LearnedModel, LearnError> {
    let table = PairCountTable::from_samples(n, samples)?;
    Ok(build_learned(&table, LearnMode::Symmetric))
}

/// Counts empirical pair statistics; exposed separately so callers can reuse
/// one table across estimators.
pub fn count_pairs(n: usize, samples: &[Vec<i8>]) -> Result<PairCountTable, LearnError> {
    PairCountTable::from_samples(n, samples)
}

/// Which local-consistency guarantee to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyOrder {
    /// All (or sampled) 3-node subsets, slack constant 1/10.
    Three,
    /// All (or sampled) 4-node subsets, slack constant 1e-20, plus the
    /// small-probability overshoot condition.
    FourStrong,
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest ratio of observed deviation to allowed deviation.
    pub worst_ratio: f64,
    /// `(subset, event mask, true mass, empirical mass)` of the worst case.
    pub worst_case: Option<(Vec<usize>, u64, f64, f64)>,
}

/// Checks whether empirical subset masses track the true model masses at the
/// `eps^2 / n` scale used by the learning guarantees: for each checked
/// subset S and event W, the deviation must be at most
/// `slack * max(sqrt(P(W) eps^2 / n), eps^2 / n)`.
///
/// Exhaustive over subsets and events when `n <= 12`; otherwise checks
/// `10_000` random (subset, event) pairs drawn from `seed`.
pub fn check_consistency(
    model: &TreeModel,
    samples: &[Vec<i8>],
    eps: f64,
    order: ConsistencyOrder,
    seed: u64,
) -> Result<ConsistencyReport, LearnError> {
    let n = model.n;
    let k = match order {
        ConsistencyOrder::Three => 3,
        ConsistencyOrder::FourStrong => 4,
    };
    let slack = match order {
        ConsistencyOrder::Three => 0.1,
        ConsistencyOrder::FourStrong => 1e-20,
    };
    if samples.is_empty() {
        return Err(LearnError::NoSamples);
    }
    let m = samples.len() as f64;
    let rate = eps * eps / n as f64;

    let mut report = ConsistencyReport {
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
        worst_case: None,
    };

    let mut check_subset = |subset: &[usize], masks: &mut dyn Iterator<Item = u64>| {
        let joint = model.joint_marginal(subset).expect("valid subset");
        // Empirical joint over the subset.
        let mut emp = vec![0.0; joint.len()];
        for s in samples {
            let mut idx = 0usize;
            for (t, &node) in subset.iter().enumerate() {
                idx |= vidx(s[node]) << (k - 1 - t);
            }
            emp[idx] += 1.0;
        }
        for e in emp.iter_mut() {
            *e /= m;
        }
        for mask in masks {
            let mut truth = 0.0;
            let mut obs = 0.0;
            for cell in 0..1u64 << k {
                if mask >> cell & 1 == 1 {
                    truth += joint[cell as usize];
                    obs += emp[cell as usize];
                }
            }
            let allowed = slack * (truth * rate).sqrt().max(rate);
            let dev = (obs - truth).abs();
            let mut ratio = if allowed > 0.0 { dev / allowed } else if dev > 0.0 { f64::INFINITY } else { 0.0 };
            if let ConsistencyOrder::FourStrong = order {
                // Rare events must not be reported with large excess mass.
                if truth < rate && truth > 0.0 && obs > 0.0 {
                    let lhs = obs * (rate / truth).ln();
                    if lhs > rate {
                        ratio = ratio.max(lhs / rate);
                    }
                }
            }
            report.checked += 1;
            if ratio > 1.0 {
                report.violations += 1;
            }
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_case = Some((subset.to_vec(), mask, truth, obs));
            }
        }
    };

    if n <= 12 {
        let mut subset = vec![0usize; k];
        enumerate_subsets(n, k, &mut subset, 0, 0, &mut |s| {
            let cells = 1u64 << k;
            // Skip the trivial empty and full events.
            let mut masks = (1..(1u64 << cells) - 1).collect::<Vec<_>>().into_iter();
            check_subset(s, &mut masks);
        });
    } else {
        let mut rng = stream(seed, &[0x636f6e73]);
        use rand::Rng;
        for _ in 0..10_000 {
            let mut subset = Vec::with_capacity(k);
            while subset.len() < k {
                let v = rng.random_range(0..n);
                if !subset.contains(&v) {
                    subset.push(v);
                }
            }
            subset.sort_unstable();
            let cells = 1u64 << k;
            let mask = rng.random_range(1..(1u64 << cells) - 1);
            check_subset(&subset, &mut std::iter::once(mask));
        }
    }
    Ok(report)
}

fn enumerate_subsets(
    n: usize,
    k: usize,
    buf: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        f(buf);
        return;
    }
    for v in start..n {
        buf[depth] = v;
        enumerate_subsets(n, k, buf, depth + 1, v + 1, f);
    }
}

/// Convenience: canonical joint of a learned general model over a subset.
pub fn learned_joint(
    model: &LearnedModel,
    subset: &[usize],
) -> Result<DiscreteDist, ModelError> {
    let tm = model.to_tree_model()?;
    let probs = tm.joint_marginal(subset)?;
    Ok(DiscreteDist::from_joint(subset.len(), probs).expect("normalized joint"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_samples() -> Vec<Vec<i8>> {
        // 8 samples over 3 nodes; node 2 copies node 0, node 1 mixed.
        vec![
            vec![1, 1, 1],
            vec![1, -1, 1],
            vec![1, 1, 1],
            vec![-1, -1, -1],
            vec![-1, 1, -1],
            vec![-1, -1, -1],
            vec![1, 1, 1],
            vec![-1, -1, -1],
        ]
    }

    #[test]
    fn pair_counts_match_direct_tally() {
        let s = toy_samples();
        let t = PairCountTable::from_samples(3, &s).unwrap();
        assert_eq!(t.m, 8);
        assert_eq!(t.plus, vec![4, 4, 4]);
        let m02 = t.pair_marginal(0, 2);
        assert_eq!(m02.p, [[0.5, 0.0], [0.0, 0.5]]);
        let m01 = t.pair_marginal(0, 1);
        // (0,1) pairs: (+,+) x3, (+,-) x1, (-,+) x1, (-,-) x3.
        assert_eq!(m01.p, [[0.375, 0.125], [0.125, 0.375]]);
        // Order flip transposes.
        assert_eq!(t.pair_marginal(1, 0).p, m01.transpose().p);
    }

    #[test]
    fn bitmap_counting_matches_naive_on_random_data() {
        use rand::Rng;
        let mut rng = stream(7, &[1]);
        let n = 9;
        let m = 517; // crosses word boundaries
        let samples: Vec<Vec<i8>> = (0..m)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let t = PairCountTable::from_samples(n, &samples).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let mut counts = [[0u64; 2]; 2];
                for s in &samples {
                    counts[vidx(s[i])][vidx(s[j])] += 1;
                }
                let got = t.pair_marginal(i, j);
                for a in 0..2 {
                    for b in 0..2 {
                        let want = counts[a][b] as f64 / m as f64;
                        assert!((got.p[a][b] - want).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn kruskal_prefers_heavy_edges_with_deterministic_ties() {
        // 4 nodes, all weights equal: ties resolve to the lexicographically
        // first acyclic picks (0,1), (0,2), (0,3).
        let star = kruskal_max_st(4, |_, _| 1.0);
        assert_eq!(star, vec![(0, 1), (0, 2), (0, 3)]);
        let path = kruskal_max_st(4, |i, j| if j == i + 1 { 2.0 } else { 1.0 });
        assert_eq!(path, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn chow_liu_recovers_a_strong_chain() {
        let model = TreeModel::new(
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4)],
            0.5,
            vec![(0.9, 0.1); 4],
        )
        .unwrap();
        let samples = model.sample(11, 40_000);
        let learned = chow_liu(5, &samples).unwrap();
        // Edges come out in weight order; compare as sets.
        let mut got = learned.edges.clone();
        got.sort_unstable();
        assert_eq!(got, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let sym = chow_liu_symmetric(5, &samples).unwrap();
        let mut got_sym = sym.edges.clone();
        got_sym.sort_unstable();
        assert_eq!(got_sym, got);
        // Parameter estimates land near the truth.
        let tm = learned.to_tree_model().unwrap();
        assert!((tm.root_prob - 0.5).abs() < 0.02);
        for &(qpp, qpm) in &tm.cond {
            assert!((qpp - 0.9).abs() < 0.02, "qpp={qpp}");
            assert!((qpm - 0.1).abs() < 0.02, "qpm={qpm}");
        }
        let sm = sym.to_symmetric_model().unwrap();
        for &a in &sm.alpha {
            assert!((a - 0.8).abs() < 0.03);
        }
    }

    #[test]
    fn learned_tree_model_is_rooted_at_zero() {
        let samples = toy_samples();
        let learned = chow_liu(3, &samples).unwrap();
        let tm = learned.to_tree_model().unwrap();
        assert_eq!(tm.parents()[0], usize::MAX);
        assert!((tm.root_prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn consistency_passes_on_faithful_samples_and_fails_on_foreign_ones() {
        let model = TreeModel::new(
            6,
            vec![(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)],
            0.4,
            vec![(0.85, 0.2), (0.7, 0.35), (0.6, 0.4), (0.95, 0.3), (0.5, 0.15)],
        )
        .unwrap();
        let m = 60_000;
        // Large enough that the 1/10-slack deviation bound holds with room
        // to spare at this sample size, small enough that a wrong model's
        // masses (off by ~0.1 and more) still violate it.
        let eps = 0.5;
        let samples = model.sample(5, m);
        let rep = check_consistency(&model, &samples, eps, ConsistencyOrder::Three, 1).unwrap();
        assert_eq!(rep.violations, 0, "worst {:?}", rep.worst_case);
        assert!(rep.checked > 0);

        // Samples from a very different model must violate.
        let other = TreeModel::new(
            6,
            vec![(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)],
            0.9,
            vec![(0.1, 0.9); 5],
        )
        .unwrap();
        let bad = other.sample(5, m);
        let rep = check_consistency(&model, &bad, eps, ConsistencyOrder::Three, 1).unwrap();
        assert!(rep.violations > 0);
    }

    #[test]
    fn empty_samples_are_rejected() {
        assert!(matches!(chow_liu(3, &[]), Err(LearnError::NoSamples)));
    }
}
