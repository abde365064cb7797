//! Simulation and optimization of universal multiport interferometer meshes.
//!
//! The crate models rectangular, redundant rectangular, triangular and
//! permuting rectangular meshes of Mach-Zehnder interferometers (MZIs),
//! samples their phases from the Haar measure, injects beamsplitter
//! fabrication errors, and trains them toward target unitaries (or general
//! matrices in an SVD arrangement) with exact adjoint gradients.

pub mod analysis;
pub mod decompose;
pub mod error;
pub mod haar;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use linalg::{gram_schmidt_haar, is_unitary, mse_cost, random_unit_columns, ComplexMatrix, RealMatrix};
pub use mesh::{
    forward, mesh_unitary, mzi_matrix, permuting_spec, propagate_fields, rectangular_spec,
    triangular_spec, Architecture, BeamsplitterErrors, Layer, Mesh, MeshSpec, PhaseParams,
};
pub use rng::SeededRng;
pub use analysis::{bandsize, error_map, Bandsize, Quantity};
pub use decompose::{clements_decompose, clements_mesh};
pub use haar::{haar_initialize, haar_sensitivity, sensitivity_reachable, uniform_initialize, SensitivityMap};
pub use train::{train_svd, train_unitary, SvdModel, TrainConfig, TrainTrace};
