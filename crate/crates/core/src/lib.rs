//! Radial discretization of the attractive–repulsive interaction energy
//!
//! ```text
//! E[ρ] = ½ ∬ ρ(x) (|x - y|^α + |x - y|^{-λ}) ρ(y) dx dy,   0 ≤ ρ ≤ 1,   ∫ρ = m,
//! ```
//!
//! with tools to evaluate ball potentials, minimize over radial densities and
//! measure the stability estimates behind "large-mass minimizers are balls".

pub mod cli;
pub mod density;
pub mod energy;
pub mod error;
pub mod quadrature;
pub mod radial_kernel;
pub mod solver;
pub mod stats;
pub mod verify;

pub use density::{
    asymmetry, bathtub_fill, competitor, make_profile, overlap_with_shifted_ball, BallSpec, ProfileKind,
    RadialGrid, RadialProfile, ShellPattern,
};
pub use energy::{interaction, potential_of_density, total_energy, EnergyBreakdown, EnergyModel, KernelMatrix};
pub use error::{FlockError, Result};
pub use radial_kernel::{KernelParams, QuadratureSpec};
