//! Library side of the command-line harness: experiment configuration,
//! the parallel experiment runner, and report formatting. Kept as a library
//! so integration tests can drive the experiment without shelling out.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use treelearn::learner::LearnError;
use treelearn::rng::derive_seed;
use treelearn::{chow_liu, generate_hard, tv_mc, EvalError, HardInstanceConfig, ModelError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    ModelFormat(#[from] treelearn::io::IoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hierarchy(#[from] treelearn::HierarchyError),
}

/// Experiment parameters, parsed from a flat `key=value` text file with
/// keys `n`, `m_list` (comma-separated), `instances`, `runs`, `mc_samples`,
/// `seed`. `#` lines and blank lines are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m_list: Vec<usize>,
    pub instances: usize,
    pub runs: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut n = None;
        let mut m_list: Option<Vec<usize>> = None;
        let mut instances = None;
        let mut runs = None;
        let mut mc_samples = None;
        let mut seed = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| CliError::Config(format!("line {}: bad {what} `{value}`", i + 1));
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad("n"))?),
                "m_list" => {
                    let parsed: Result<Vec<usize>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    m_list = Some(parsed.map_err(|_| bad("m_list"))?);
                }
                "instances" => instances = Some(value.parse().map_err(|_| bad("instances"))?),
                "runs" => runs = Some(value.parse().map_err(|_| bad("runs"))?),
                "mc_samples" => mc_samples = Some(value.parse().map_err(|_| bad("mc_samples"))?),
                "seed" => seed = Some(value.parse().map_err(|_| bad("seed"))?),
                other => return Err(CliError::Config(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| CliError::Config(format!("missing key `{k}`"));
        let cfg = ExperimentConfig {
            n: n.ok_or_else(|| missing("n"))?,
            m_list: m_list.ok_or_else(|| missing("m_list"))?,
            instances: instances.ok_or_else(|| missing("instances"))?,
            runs: runs.ok_or_else(|| missing("runs"))?,
            mc_samples: mc_samples.ok_or_else(|| missing("mc_samples"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        };
        if cfg.n < 2 || cfg.m_list.is_empty() || cfg.instances == 0 || cfg.runs == 0
            || cfg.mc_samples == 0
        {
            return Err(CliError::Config("all counts must be positive, n >= 2".into()));
        }
        Ok(cfg)
    }

    /// The geometric sample-size ladder `floor(1000 * 100^(t/9))`, t = 0..9.
    pub fn full_ladder() -> Vec<usize> {
        (0..10)
            .map(|t| (1000.0 * 100f64.powf(t as f64 / 9.0)).floor() as usize)
            .collect()
    }
}

/// Results for one generated instance at one sample size.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub n: usize,
    pub m: usize,
    pub instance_index: usize,
    pub instance_seed: u64,
    /// Drawn (normal, strong, weak) edge proportions of the instance.
    pub p: [f64; 3],
    pub run_tv_estimates: Vec<f64>,
    /// Second largest of the run estimates.
    pub eps_hat_p: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
    /// Per sample size: max of `eps_hat_p` over instances.
    pub aggregates: Vec<(usize, f64)>,
    /// Smallest c with eps_hat(m) <= c * sqrt(n ln n / m) for all m.
    pub fitted_c: f64,
}

/// Second largest value (largest when there is only one).
pub fn second_largest(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted[1.min(sorted.len() - 1)]
}

/// Runs the full experiment grid. Seeds are derived from the master seed by
/// position: the instance generator uses tags `[m_index, instance]`, each
/// run's training samples use `[m_index, instance, run, 0]` and its
/// evaluation stream `[m_index, instance, run, 1]`, so any sub-grid
/// reproduces the same numbers. Tasks run in parallel at (instance, run)
/// granularity on the current rayon pool; `progress` lines go to stderr.
pub fn run_experiment(
    config: &ExperimentConfig,
    progress: bool,
) -> Result<ExperimentOutcome, CliError> {
    let cfg = config.clone();
    // One task per (m, instance, run).
    let mut tasks = Vec::new();
    for (m_idx, &m) in cfg.m_list.iter().enumerate() {
        for instance in 0..cfg.instances {
            for run in 0..cfg.runs {
                tasks.push((m_idx, m, instance, run));
            }
        }
    }
    let results: Result<Vec<((usize, usize, usize), f64)>, CliError> = tasks
        .par_iter()
        .map(|&(m_idx, m, instance, run)| {
            let instance_seed = derive_seed(cfg.seed, &[m_idx as u64, instance as u64]);
            let hard = generate_hard(&HardInstanceConfig { n: cfg.n, m, seed: instance_seed });
            let sample_seed =
                derive_seed(cfg.seed, &[m_idx as u64, instance as u64, run as u64, 0]);
            let eval_seed =
                derive_seed(cfg.seed, &[m_idx as u64, instance as u64, run as u64, 1]);
            let samples = hard.model.sample(sample_seed, m);
            let learned = chow_liu(cfg.n, &samples)?;
            let q = learned.to_tree_model()?;
            let est = tv_mc(&hard.model, &q, eval_seed, cfg.mc_samples)?;
            if progress {
                eprintln!(
                    "m={m} instance={instance} run={run} tv={:.6} (stderr {:.6})",
                    est.value, est.stderr
                );
            }
            Ok(((m_idx, instance, run), est.value))
        })
        .collect();
    let mut by_key = std::collections::BTreeMap::new();
    for (key, tv) in results? {
        by_key.insert(key, tv);
    }

    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    for (m_idx, &m) in cfg.m_list.iter().enumerate() {
        let mut m_max = f64::NEG_INFINITY;
        for instance in 0..cfg.instances {
            let instance_seed = derive_seed(cfg.seed, &[m_idx as u64, instance as u64]);
            let hard = generate_hard(&HardInstanceConfig { n: cfg.n, m, seed: instance_seed });
            let run_tv_estimates: Vec<f64> =
                (0..cfg.runs).map(|run| by_key[&(m_idx, instance, run)]).collect();
            let eps_hat_p = second_largest(&run_tv_estimates);
            m_max = m_max.max(eps_hat_p);
            records.push(ExperimentRecord {
                n: cfg.n,
                m,
                instance_index: instance,
                instance_seed,
                p: hard.p,
                run_tv_estimates,
                eps_hat_p,
            });
        }
        aggregates.push((m, m_max));
    }
    let fitted_c = fitted_constant(cfg.n, &aggregates);
    Ok(ExperimentOutcome { config: cfg, records, aggregates, fitted_c })
}

/// Smallest c such that every aggregate satisfies
/// `eps_hat(m) <= c * sqrt(n ln n / m)`.
pub fn fitted_constant(n: usize, aggregates: &[(usize, f64)]) -> f64 {
    let nlnn = n as f64 * (n as f64).ln();
    aggregates
        .iter()
        .map(|&(m, e)| e / (nlnn / m as f64).sqrt())
        .fold(0.0, f64::max)
}

impl ExperimentOutcome {
    /// Per-run results, header `n,m,instance,seed,run,tv_estimate`.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("n,m,instance,seed,run,tv_estimate\n");
        for r in &self.records {
            for (run, tv) in r.run_tv_estimates.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.n, r.m, r.instance_index, r.instance_seed, run, tv
                );
            }
        }
        out
    }

    /// Per-instance summary with the drawn edge-type proportions.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("n,m,instance,seed,p_normal,p_strong,p_weak,eps_hat\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n, r.m, r.instance_index, r.instance_seed, r.p[0], r.p[1], r.p[2], r.eps_hat_p
            );
        }
        out
    }

    /// Plot data: per sample size the aggregate estimate and the fitted
    /// reference curve `c * sqrt(n ln n / m)`.
    pub fn plot_csv(&self) -> String {
        let nlnn = self.config.n as f64 * (self.config.n as f64).ln();
        let mut out = String::from("m,eps_hat,reference\n");
        for &(m, e) in &self.aggregates {
            let reference = self.fitted_c * (nlnn / m as f64).sqrt();
            let _ = writeln!(out, "{m},{e},{reference}");
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.config.n);
        for &(m, e) in &self.aggregates {
            let _ = writeln!(out, "m = {m}: eps_hat = {e}");
        }
        let _ = writeln!(out, "fitted c = {}", self.fitted_c);
        out
    }
}

/// Rebuilds the learner-facing view of a serialized model so the layering
/// commands can run on model files: edges, their exact pair marginals, and
/// node marginals.
pub fn learned_view_of_tree_model(
    model: &treelearn::TreeModel,
) -> Result<treelearn::LearnedModel, CliError> {
    let mut edge_marginals = Vec::with_capacity(model.edges.len());
    let mut edges = Vec::with_capacity(model.edges.len());
    for &(i, j) in &model.edges {
        let (a, b) = (i.min(j), i.max(j));
        let m = model.pair_marginal(a, b)?;
        edges.push((a, b));
        edge_marginals.push(m);
    }
    let weights = edge_marginals
        .iter()
        .map(treelearn::mutual_information)
        .collect();
    let node_prob = model.node_marginals().iter().map(|m| m[0]).collect();
    Ok(treelearn::LearnedModel {
        n: model.n,
        mode: treelearn::LearnMode::General,
        edges,
        edge_marginals,
        weights,
        node_prob,
    })
}

/// Symmetric analogue of [`learned_view_of_tree_model`].
pub fn learned_view_of_symmetric_model(
    model: &treelearn::SymmetricTreeModel,
) -> treelearn::LearnedModel {
    let edges: Vec<(usize, usize)> =
        model.edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    let edge_marginals: Vec<_> = model.alpha.iter().map(|&a| treelearn::sym_pair(a)).collect();
    let weights = model.alpha.iter().map(|a| a.abs()).collect();
    treelearn::LearnedModel {
        n: model.n,
        mode: treelearn::LearnMode::Symmetric,
        edges,
        edge_marginals,
        weights,
        node_prob: vec![0.5; model.n],
    }
}

/// Human-readable layering report.
pub fn hierarchy_text(report: &treelearn::HierarchyReport) -> String {
    let mut out = String::new();
    let mode = match report.mode {
        treelearn::LayerMode::Symmetric => "symmetric",
        treelearn::LayerMode::General => "general",
    };
    let _ = writeln!(out, "layering mode={mode} n={} eps={}", report.n, report.eps);
    for e in &report.edge_layers {
        let m = &e.measures;
        let _ = writeln!(
            out,
            "edge ({}, {}): {} [minmrg={:.6} mindiag={:.6} mindisc={:.6} i_h2={:.6} alpha={:.6}]",
            e.edge.0,
            e.edge.1,
            e.label.as_str(),
            m.minmrg,
            m.mindiag,
            m.mindisc,
            m.i_h2,
            m.alpha
        );
    }
    let empty = report.empty_bands();
    if empty.is_empty() {
        let _ = writeln!(out, "empty bands: none");
    } else {
        let names: Vec<&str> = empty.iter().map(|l| l.as_str()).collect();
        let _ = writeln!(out, "empty bands: {}", names.join(", "));
    }
    for p in &report.partitions {
        let groups: Vec<String> = p
            .groups
            .iter()
            .map(|g| {
                let ids: Vec<String> = g.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", ids.join(" "))
            })
            .collect();
        let _ = writeln!(out, "{}: {}", p.level.as_str(), groups.join(" "));
    }
    out
}

/// Machine-readable layering report: one row per edge.
pub fn hierarchy_csv(report: &treelearn::HierarchyReport) -> String {
    let mut out = String::from("i,j,label,minmrg,mindiag,mindisc,i_h2,alpha,mi\n");
    for e in &report.edge_layers {
        let m = &e.measures;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.edge.0, e.edge.1, e.label.as_str(), m.minmrg, m.mindiag, m.mindisc, m.i_h2,
            m.alpha, m.mi
        );
    }
    out
}

/// Diagnostic additions to the text report.
pub fn diagnostic_text(diag: &treelearn::DiagnosticReport) -> String {
    let mut out = hierarchy_text(&diag.hierarchy);
    for (p, name) in [
        (&diag.cities, "cities"),
        (&diag.countries, "countries"),
        (&diag.continents, "continents"),
    ] {
        let groups: Vec<String> = p
            .groups
            .iter()
            .map(|g| {
                let ids: Vec<String> = g.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", ids.join(" "))
            })
            .collect();
        let _ = writeln!(out, "{name}: {}", groups.join(" "));
    }
    for ((i, j), label) in &diag.true_edge_labels {
        let _ = writeln!(out, "true edge ({i}, {j}): {}", label.as_str());
    }
    let biased: Vec<String> = diag.biased.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "biased nodes: [{}]", biased.join(" "));
    let trails: Vec<String> =
        diag.t_trails.iter().map(|(i, j)| format!("({i}, {j})")).collect();
    let _ = writeln!(out, "trails: [{}]", trails.join(" "));
    let _ = writeln!(
        out,
        "parallel: {} highway pairs, {} railway pairs, {} mismatches",
        diag.parallel.highway_pairs.len(),
        diag.parallel.railway_pairs.len(),
        diag.parallel.mismatches.len()
    );
    out
}
