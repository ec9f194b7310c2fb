//! Graph-theoretic checks and constructions: acyclic balls, bicycle-freeness,
//! unique expansion, the peeling matching and right-degree bounding.

pub mod ball;
pub mod bicycle;
pub mod degrees;
pub mod expansion;
pub mod peel;
pub mod tree;

pub use ball::{acyclic_depths, find_acyclic_ball, maximal_acyclic_roots, TreeBall};
pub use bicycle::{is_bicycle_free, BicycleReport, UndirectedGraph, Vertex};
pub use degrees::bound_right_degrees;
pub use expansion::{
    max_set_size, predicted_unique_expansion, verify_expansion, verify_unique_expansion,
    worst_unique_deficit, ExpansionCertificate, ExpansionMode, ExpansionProperty,
    DEFAULT_EXPANSION_C,
};
pub use peel::{check_matching, peel_matching, PeelMatching};
pub use tree::{explicit_tree_graph, predicted_image_norm_pow, SignedTree, TreeImage};
