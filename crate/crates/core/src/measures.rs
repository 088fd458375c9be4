//! Distances between discrete distributions (total variation, Hellinger,
//! KL), mutual information, pairwise-strength measures, and the small
//! Markov-chain reassembly constructors used to quantify the cost of
//! structural mistakes.
//!
//! Conventions used throughout: `0 * ln 0 = 0`, and any conditional
//! probability whose conditioning event has zero mass is taken to be 0.

use thiserror::Error;

use crate::model::{vval, PairwiseMarginal};

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("distributions have different outcome sets")]
    OutcomeMismatch,
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("duplicate outcome label")]
    DuplicateLabel,
    #[error("shared node marginals differ by {0} (tolerance 1e-9)")]
    SharedMarginalMismatch(f64),
    #[error("expected a joint over {expected} variables, got {got}")]
    WrongArity { expected: usize, got: usize },
}

/// A distribution over an explicit finite set of `{+1,-1}` tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    pub labels: Vec<Vec<i8>>,
    pub probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(labels: Vec<Vec<i8>>, probs: Vec<f64>) -> Result<Self, MeasureError> {
        for &p in &probs {
            if p < 0.0 {
                return Err(MeasureError::NegativeProbability(p));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(MeasureError::NotNormalized(sum));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeasureError::DuplicateLabel);
        }
        Ok(DiscreteDist { labels, probs })
    }

    /// Canonical labels for a joint over `k` binary variables: the first
    /// variable varies slowest and `+1` sorts before `-1`, matching
    /// [`crate::model::TreeModel::joint_marginal`].
    pub fn from_joint(k: usize, probs: Vec<f64>) -> Result<Self, MeasureError> {
        if probs.len() != 1 << k {
            return Err(MeasureError::WrongArity { expected: 1 << k, got: probs.len() });
        }
        let labels = (0..1usize << k)
            .map(|idx| (0..k).map(|t| vval((idx >> (k - 1 - t)) & 1)).collect())
            .collect();
        DiscreteDist::new(labels, probs)
    }

    pub fn arity(&self) -> usize {
        self.labels.first().map(|l| l.len()).unwrap_or(0)
    }

    /// Reorders the variables of a canonical joint: output variable `t` is
    /// input variable `perm[t]`.
    pub fn permute_vars(&self, perm: &[usize]) -> DiscreteDist {
        let k = self.arity();
        assert_eq!(perm.len(), k);
        let mut probs = vec![0.0; self.probs.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut out = 0usize;
            for (t, &src) in perm.iter().enumerate() {
                out |= ((idx >> (k - 1 - src)) & 1) << (k - 1 - t);
            }
            probs[out] = p;
        }
        DiscreteDist::from_joint(k, probs).expect("permutation preserves normalization")
    }

    fn check_same_outcomes(&self, other: &DiscreteDist) -> Result<(), MeasureError> {
        if self.labels == other.labels {
            Ok(())
        } else {
            Err(MeasureError::OutcomeMismatch)
        }
    }
}

impl From<&PairwiseMarginal> for DiscreteDist {
    fn from(m: &PairwiseMarginal) -> Self {
        DiscreteDist::from_joint(2, vec![m.p[0][0], m.p[0][1], m.p[1][0], m.p[1][1]])
            .expect("pair marginal is normalized")
    }
}

/// Total variation distance: half the l1 difference.
pub fn tv(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, MeasureError> {
    p.check_same_outcomes(q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Squared Hellinger distance: `1 - sum sqrt(p q)`, clamped to `[0, 1]`.
pub fn hellinger_sq(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, MeasureError> {
    p.check_same_outcomes(q)?;
    let bc: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

/// Hellinger distance, the square root of [`hellinger_sq`].
pub fn hellinger(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, MeasureError> {
    hellinger_sq(p, q).map(f64::sqrt)
}

/// KL divergence in nats; `+inf` where `p` has mass and `q` does not.
pub fn kl(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, MeasureError> {
    p.check_same_outcomes(q)?;
    let mut sum = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b > 0.0 {
                sum += a * (a / b).ln();
            } else {
                return Ok(f64::INFINITY);
            }
        }
    }
    Ok(sum.max(0.0))
}

/// Mutual information (nats) of a pair: KL from the product of its
/// single-node marginals to the joint. Always finite for a valid marginal.
pub fn mutual_information(m: &PairwiseMarginal) -> f64 {
    let fi = m.first();
    let fj = m.second();
    let mut sum = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let pab = m.p[a][b];
            if pab > 0.0 {
                sum += pab * (pab / (fi[a] * fj[b])).ln();
            }
        }
    }
    sum.max(0.0)
}

/// Conditional mutual information `I(X_u; X_v | X_w)` (nats) of a canonical
/// 8-outcome joint over `(X_u, X_v, X_w)`.
pub fn conditional_mi(joint3: &DiscreteDist) -> Result<f64, MeasureError> {
    if joint3.arity() != 3 || joint3.probs.len() != 8 {
        return Err(MeasureError::WrongArity { expected: 3, got: joint3.arity() });
    }
    let p = |u: usize, v: usize, w: usize| joint3.probs[(u << 2) | (v << 1) | w];
    let mut sum = 0.0;
    for w in 0..2 {
        let pw: f64 = (0..4).map(|uv| p(uv >> 1, uv & 1, w)).sum();
        if pw == 0.0 {
            continue;
        }
        for u in 0..2 {
            for v in 0..2 {
                let puvw = p(u, v, w);
                if puvw > 0.0 {
                    let puw = p(u, 0, w) + p(u, 1, w);
                    let pvw = p(0, v, w) + p(1, v, w);
                    sum += puvw * (puvw * pw / (puw * pvw)).ln();
                }
            }
        }
    }
    Ok(sum.max(0.0))
}

fn shared_check(left: [f64; 2], right: [f64; 2]) -> Result<(), MeasureError> {
    let diff = (left[0] - right[0]).abs().max((left[1] - right[1]).abs());
    if diff > 1e-9 {
        return Err(MeasureError::SharedMarginalMismatch(diff));
    }
    Ok(())
}

/// The Markov chain a - b - c assembled from its two edge marginals:
/// `joint(a, b, c) = m_ab(a, b) * m_bc(c | b)`. The two inputs must agree on
/// the marginal of the shared middle variable within 1e-9.
pub fn chain3(
    m_ab: &PairwiseMarginal,
    m_bc: &PairwiseMarginal,
) -> Result<DiscreteDist, MeasureError> {
    shared_check(m_ab.second(), m_bc.first())?;
    let cond = m_bc.cond_second_given_first();
    let mut probs = vec![0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                probs[(a << 2) | (b << 1) | c] = m_ab.p[a][b] * cond[b][c];
            }
        }
    }
    normalize_chain(&mut probs);
    DiscreteDist::from_joint(3, probs)
}

/// The Markov chain a - b - c - d from its three edge marginals.
pub fn chain4(
    m_ab: &PairwiseMarginal,
    m_bc: &PairwiseMarginal,
    m_cd: &PairwiseMarginal,
) -> Result<DiscreteDist, MeasureError> {
    shared_check(m_ab.second(), m_bc.first())?;
    shared_check(m_bc.second(), m_cd.first())?;
    let cond_bc = m_bc.cond_second_given_first();
    let cond_cd = m_cd.cond_second_given_first();
    let mut probs = vec![0.0; 16];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    probs[(a << 3) | (b << 2) | (c << 1) | d] =
                        m_ab.p[a][b] * cond_bc[b][c] * cond_cd[c][d];
                }
            }
        }
    }
    normalize_chain(&mut probs);
    DiscreteDist::from_joint(4, probs)
}

/// Chain products of near-1e-9-mismatched marginals can drift off total mass
/// 1 by more than the DiscreteDist tolerance; renormalize the tiny residue.
fn normalize_chain(probs: &mut [f64]) {
    let s: f64 = probs.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 1e-15 {
        for p in probs.iter_mut() {
            *p /= s;
        }
    }
}

/// The reassembly over `(i, j, k)` that hangs `j` off `k` and links `i`
/// directly to `k`: the Markov chain i - k - j presented in `(i, j, k)`
/// variable order, built from the marginals on `(i, k)` and `(j, k)`.
///
/// This is the three-node distribution produced by mistaking `(i, k)` for a
/// tree edge when the true path is i - j - k.
pub fn swap_middle(
    m_ik: &PairwiseMarginal,
    m_jk: &PairwiseMarginal,
) -> Result<DiscreteDist, MeasureError> {
    // chain3 over (i, k, j), then reorder variables to (i, j, k).
    let ikj = chain3(m_ik, &m_jk.transpose())?;
    Ok(ikj.permute_vars(&[0, 2, 1]))
}

/// Product of the two single-node marginals of a pair.
pub fn make_independent(m: &PairwiseMarginal) -> PairwiseMarginal {
    let fi = m.first();
    let fj = m.second();
    PairwiseMarginal::new([
        [fi[0] * fj[0], fi[0] * fj[1]],
        [fi[1] * fj[0], fi[1] * fj[1]],
    ])
}

/// Scalar summaries of one pair distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMeasures {
    /// Smallest single-value mass among the two node marginals.
    pub minmrg: f64,
    /// `min(P(equal), P(unequal))`.
    pub mindiag: f64,
    /// Smaller of the two conditional-probability discrepancies
    /// `|P(X=1|Y=1) - P(X=1|Y=-1)|` (both directions).
    pub mindisc: f64,
    /// Squared Hellinger distance to the independent coupling.
    pub i_h2: f64,
    /// `2 P(equal) - 1`; meaningful for symmetric pairs, stored for all.
    pub alpha: f64,
    /// Mutual information in nats.
    pub mi: f64,
}

/// Computes all six pairwise-strength summaries.
pub fn pair_measures(m: &PairwiseMarginal) -> PairMeasures {
    let fi = m.first();
    let fj = m.second();
    let minmrg = fi[0].min(fi[1]).min(fj[0]).min(fj[1]);
    let agree = m.agree();
    let mindiag = agree.min(1.0 - agree);
    let ci = m.cond_second_given_first(); // second | first
    let cj = m.transpose().cond_second_given_first(); // first | second
    let mindisc = (cj[0][0] - cj[1][0]).abs().min((ci[0][0] - ci[1][0]).abs());
    let ind = make_independent(m);
    let i_h2 = hellinger_sq(&DiscreteDist::from(m), &DiscreteDist::from(&ind))
        .expect("same canonical outcomes");
    PairMeasures {
        minmrg,
        mindiag,
        mindisc,
        i_h2,
        alpha: m.alpha(),
        mi: mutual_information(m),
    }
}

/// The symmetric pair with the given alpha: uniform node marginals and
/// `P(equal) = (1 + alpha) / 2`.
pub fn sym_pair(alpha: f64) -> PairwiseMarginal {
    let eq = (1.0 + alpha) / 4.0;
    let ne = (1.0 - alpha) / 4.0;
    PairwiseMarginal::new([[eq, ne], [ne, eq]])
}

/// The three comparison pairs for a symmetric edge with value `alpha`:
/// independent (alpha 0), deterministic (alpha `sign(alpha)`, with
/// `sign(0) = +1`), and estimated (alpha `alpha_hat`).
pub fn symmetric_constructions(
    alpha: f64,
    alpha_hat: f64,
) -> (PairwiseMarginal, PairwiseMarginal, PairwiseMarginal) {
    let det = if alpha >= 0.0 { 1.0 } else { -1.0 };
    (sym_pair(0.0), sym_pair(det), sym_pair(alpha_hat))
}
