//! Two-phase torsion problems on star-shaped domains: interface-fitted
//! finite elements, rigidity shape derivatives, Neumann-to-Dirichlet
//! spectra, moving-plane sweeps and two-conductivity diagnostics.

pub mod acceptance;
pub mod error;
pub mod fem;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod ntd;
pub mod radial;
pub mod report;
pub mod shape;
pub mod sweep;
pub mod twosigma;

pub use error::{Error, Result};
pub use field::{BoundaryField, FemField};
pub use geometry::{StarBoundary, TwoPhaseConfig};
pub use mesh::{generate_mesh, Mesh};

/// Dense kernels run sequentially so results do not depend on scheduling;
/// `threads` sizes the pool for independent tasks (0 means one thread).
pub fn init_parallelism(threads: usize) {
    faer::set_global_parallelism(faer::Par::Seq);
    // A pool that already exists is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
}
