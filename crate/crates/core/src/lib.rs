//! Planar gadget graphs, SAT encodings of book embeddings, and independent
//! validation of the embeddings a solver returns.

pub mod encoder;
pub mod family;
pub mod graph;
pub mod layout;
pub mod solver;

pub use encoder::{encode, CnfFormula, RestrictionProfile, SubproblemSpec, VarMap};
pub use family::{build_base_gn, build_final_g, build_qk, build_qk_contracted, dq_distance, GadgetGraph};
pub use graph::{Edge, Face, GraphError, PlaneGraph, RoleTag, VertexId};
pub use layout::BookEmbedding;
pub use solver::{BackendConfig, SolveOutcome, SolveStatus};
