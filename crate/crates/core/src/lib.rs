//! Simulation and estimation for Poisson-driven random connection models.

pub mod boundary;
pub mod error;
pub mod estimate;
pub mod estimators;
pub mod explorer;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod irreducibility;
pub mod marks;
pub mod model;
pub mod parallel;
pub mod phi_lambda;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod scaling;
pub mod unionfind;

pub use boundary::{coupled_boundary_graphs, deletion_stability_statistic, vertex_split_counts, BoundaryStats, CoupledGraphs, SplitCounts};
pub use error::{RcmError, Result};
pub use estimate::{Estimate, Tally};
pub use estimators::{
    cluster_representative_count, cluster_size_pmf, estimate_kappa_explorer, estimate_kappa_window, estimate_theta,
    kappa_sweep_and_convexity, mr_derivative, nu_bound_check, reweight_estimate, sample_cluster_records, ClusterRecord,
    Payload, SweepOptions, SweepResult, WeightedSample,
};
pub use explorer::{explore_cluster, explore_typical, ClusterSample, ExplorationLimits};
pub use geometry::{BoundaryMode, Window};
pub use irreducibility::{
    build_kernel_matrix, check_irreducible, check_minimal_conditions, IrreducibilityReport, KernelMatrix, MarkGrid,
    MinimalConditions, Verdict,
};
pub use graph::{build_graph, build_graph_with, BoundaryCondition, GraphSample};
pub use marks::MarkDistribution;
pub use model::{ConnectionKind, ConnectionModel, Envelope, MarkKernel, Profile, SpatialFactor};
pub use phi_lambda::{PhiLambda, QuadratureSpec};
pub use rng::{EdgeUniforms, RngStream};
pub use scaling::{scaling_coupled_sweep, CouplingWeights, ScalingLevel};
pub use sampling::{sample_poisson, thin, PointConfiguration, ResourceCaps};
