//! Tree-structured binary Ising models (equivalently, binary tree-structured
//! Bayesian networks): representation, sampling, exact marginalization,
//! learning from samples via the Chow-Liu maximum-spanning-tree algorithm
//! (plug-in mutual-information weights, or |alpha| weights for the symmetric
//! parametrization), distance evaluation (total variation, Hellinger; exact
//! and Monte-Carlo), edge-strength layering certificates, and random /
//! adversarial instance generation for sample-complexity experiments.
//!
//! All randomness flows through seedable ChaCha8 streams (see [`rng`]) so
//! every result in this crate is reproducible bit-for-bit from a seed.

pub mod evaluate;
pub mod hierarchy;
pub mod instances;
pub mod io;
pub mod learner;
pub mod measures;
pub mod model;
pub mod rng;

pub use evaluate::{hellinger_exact, tv_exact, tv_mc, EvalError, TvEstimate, EXACT_MAX_NODES};
pub use hierarchy::{
    biased_nodes, classify_general, classify_symmetric, convex_hull, diagnose_general,
    diagnose_symmetric, match_parallel, merge_cities, select_t_trails, DiagnosticReport,
    EdgeLayer, HierarchyError, HierarchyReport, Label, LayerMode, LayerThresholds,
    NodePartition, ParallelReport, PartitionLevel,
};
pub use instances::{generate_hard, random_symmetric, random_tree, AlphaLaw, EdgeType,
    HardInstance, HardInstanceConfig};
pub use learner::{
    alpha_hat, check_consistency, chow_liu, chow_liu_symmetric, count_pairs, kruskal_max_st,
    plugin_mi, ConsistencyOrder, ConsistencyReport, LearnMode, LearnedModel, PairCountTable,
};
pub use measures::{
    chain3, chain4, conditional_mi, hellinger, hellinger_sq, kl, make_independent,
    mutual_information, pair_measures, swap_middle, sym_pair, symmetric_constructions,
    DiscreteDist, PairMeasures,
};
pub use model::{Assignment, ModelError, PairwiseMarginal, SymmetricTreeModel, TreeModel};
