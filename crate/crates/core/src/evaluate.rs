//! Comparing two models: exact distances by full enumeration (small n) and
//! a sampled total-variation estimator for larger n.

use rand::Rng;
use thiserror::Error;

use crate::model::{vval, ModelError, TreeModel};
use crate::rng::stream;

/// Exact enumeration is limited to this many nodes (2^22 outcomes).
pub const EXACT_MAX_NODES: usize = 22;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("models have different node counts: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("exact evaluation supports at most {EXACT_MAX_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_sizes(p: &TreeModel, q: &TreeModel) -> Result<usize, EvalError> {
    if p.n != q.n {
        return Err(EvalError::SizeMismatch(p.n, q.n));
    }
    Ok(p.n)
}

fn for_each_outcome(n: usize, mut f: impl FnMut(&[i8])) {
    let mut buf = vec![0i8; n];
    for idx in 0..1usize << n {
        for t in 0..n {
            buf[t] = vval((idx >> (n - 1 - t)) & 1);
        }
        f(&buf);
    }
}

/// Exact total variation distance by enumerating all `2^n` outcomes.
pub fn tv_exact(p: &TreeModel, q: &TreeModel) -> Result<f64, EvalError> {
    let n = check_sizes(p, q)?;
    if n > EXACT_MAX_NODES {
        return Err(EvalError::TooLarge(n));
    }
    let mut sum = 0.0;
    let mut err: Result<(), ModelError> = Ok(());
    for_each_outcome(n, |x| {
        if err.is_err() {
            return;
        }
        match (p.log_density(x), q.log_density(x)) {
            (Ok(lp), Ok(lq)) => sum += (lp.exp() - lq.exp()).abs(),
            (Err(e), _) | (_, Err(e)) => err = Err(e),
        }
    });
    err?;
    Ok(0.5 * sum)
}

/// Exact Hellinger distance by enumerating all `2^n` outcomes.
pub fn hellinger_exact(p: &TreeModel, q: &TreeModel) -> Result<f64, EvalError> {
    let n = check_sizes(p, q)?;
    if n > EXACT_MAX_NODES {
        return Err(EvalError::TooLarge(n));
    }
    let mut bc = 0.0;
    let mut err: Result<(), ModelError> = Ok(());
    for_each_outcome(n, |x| {
        if err.is_err() {
            return;
        }
        match (p.log_density(x), q.log_density(x)) {
            // sqrt(p q) = exp((ln p + ln q) / 2); exp(-inf) = 0 handles
            // off-support outcomes of either model.
            (Ok(lp), Ok(lq)) => bc += (0.5 * (lp + lq)).exp(),
            (Err(e), _) | (_, Err(e)) => err = Err(e),
        }
    });
    err?;
    Ok((1.0 - bc).clamp(0.0, 1.0).sqrt())
}

/// A sampled total-variation estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
}

/// Estimates `TV(P, Q)` as `(1/2) E_P |1 - Q(X)/P(X)|` over `count` samples
/// drawn from `p` using `seed`. The ratio is formed in log space; outcomes
/// off the support of `q` contribute `|1 - 0| = 1` to the average. Outcomes
/// off the support of `p` cannot be drawn from `p`, so the estimator stays
/// well defined for degenerate models.
pub fn tv_mc(p: &TreeModel, q: &TreeModel, seed: u64, count: usize) -> Result<TvEstimate, EvalError> {
    let n = check_sizes(p, q)?;
    if count == 0 {
        return Err(EvalError::NoSamples);
    }
    let mut rng = stream(seed, &[]);
    let order = p.topo_order();
    let parents = p.parents();
    let cond = p.cond_by_child();
    let mut x = vec![0i8; n];
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..count {
        // Draw one sample from p, accumulating ln p(x) on the fly.
        let mut lp = 0.0;
        for &v in &order {
            let p1 = if v == 0 {
                p.root_prob
            } else {
                let (qpp, qpm) = cond[v];
                if x[parents[v]] == 1 {
                    qpp
                } else {
                    qpm
                }
            };
            if rng.random::<f64>() < p1 {
                x[v] = 1;
                lp += p1.ln();
            } else {
                x[v] = -1;
                lp += (1.0 - p1).ln();
            }
        }
        let lq = q.log_density(&x)?;
        let term = if lq == f64::NEG_INFINITY {
            1.0
        } else {
            (1.0 - (lq - lp).exp()).abs()
        };
        sum += term;
        sumsq += term * term;
    }
    let m = count as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0);
    Ok(TvEstimate {
        value: 0.5 * mean,
        stderr: 0.5 * (var / m).sqrt(),
        samples_used: count,
    })
}
