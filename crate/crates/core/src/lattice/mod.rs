//! Discrete calculus and geometry on finite windows of `Z^N`.

mod calculus;
mod cube;
mod field;
mod snapshot;
mod window;

pub use calculus::{diff, div, grad, laplacian, laplacian_at, shift, DiffKind};
pub use cube::{
    boundary_faces, boundary_flux, boundary_sites, cube_sites, normal, normal_star, omega,
    stokes_sum, BoundaryFace, CubeKind, CubeSpec,
};
pub use field::Field;
pub use snapshot::{read_snapshot, write_snapshot};
pub use window::{Boundary, LatticeWindow};
