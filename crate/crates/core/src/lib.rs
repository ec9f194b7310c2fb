//! Sparse biregular sign matrices: sampling, ℓp-spread and RIP checks,
//! a kernel attack on ℓ2-spread, and spectral identity checks.
pub mod attack;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod rip;
pub mod spectral;
pub mod spread;

pub use attack::{
    attack, attack_ball, attack_with, build_tree_vector, lp_ratio_witness, project_to_kernel, AttackOptions,
    CompressibleWitness, LpRatioWitness, Projection, ProjectionMethod, TreeVector,
};
pub use ensemble::{
    sample_biregular, sample_biregular_with, sample_left_regular, BipartiteGraph, EnsembleParams, SamplerConfig,
    SignedBiregularMatrix, SignedMatrix, SparseVector,
};
pub use error::{Error, ErrorClass, Result};
pub use rip::{
    certify_rip, explicit_pipeline, probe_rip, rip_bounds_from_expansion, rip_violations, weak_l2_bound,
    PipelineReport, ProbeMode, ProbeOptions, RipCertificate, RipProbe, WeakL2Constants,
};
pub use spectral::{singular_extremes, SpectrumMethod, SpectrumReport};
pub use spread::{best_k_sparse_error, distortion, DistortionValue, SparseApprox, SpreadQuery};

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
