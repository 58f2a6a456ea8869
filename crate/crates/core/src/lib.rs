//! Learning-based interference alignment for wireless networks.
//!
//! The crate covers the whole pipeline: topology and conflict-graph modeling,
//! instance generators, classical coloring baselines, exact linear algebra,
//! scheme certification, the sequential coloring environment, a graph neural
//! policy, PPO training, and experiment drivers.

pub mod coloring;
pub mod env;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod linalg;
pub mod policy;
pub mod ppo;
pub mod rng;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use coloring::{exact_chromatic, greedy_sli, tabucol, ChromaticResult, Coloring, FractionalColoring};
pub use error::{Error, Result};
pub use graph::{
    build_conflict_graph, closed_in_neighborhood, merge_split_coloring, node_splitting_graph,
    ConflictGraph, Neighborhood, TopologyInstance,
};
pub use linalg::{binary_vectors, mds_default, mds_generator, rank_exact, rank_gfp, FamilyKind, VectorFamily};
pub use verify::{
    check_coloring, check_decodability, check_fractional_local_coloring, check_local_coloring,
    check_matrix_rank_reduction, dof, neighborhood_ranks, verify_scheme, Dof, Mode, Scheme,
    VectorAssignment,
};
pub use generators::{
    generate, generate_dataset, generate_wireless, label_dataset, DatasetRecord, DemandRule, Family,
    GenSpec, Instance, Threshold, WirelessConfig,
};
pub use env::{
    k_selector, run_episode, Env, EnvConfig, EnvMode, Episode, SelectorConfig, Selection, StepOutcome,
    VertexState,
};
pub use policy::{
    ExhaustivePolicy, GreedyDefer, LearnedPolicy, Observation, Policy, PolicyParams, RandomPolicy,
};
pub use ppo::{
    collect_rollouts, evaluate_best_of_n, ppo_update, train, BestOf, CurveRow, RolloutBatch, TrainConfig,
    Trainer,
};
pub use experiments::{
    run_table, transfer_eval, verify_all, Aggregate, ExperimentRecord, Method, RunConfig, TableOutput,
    TransferCell, VerifyReport,
};
