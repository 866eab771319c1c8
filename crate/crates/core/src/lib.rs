//! Bound states and dynamics of quantum emitters coupled to a coupled-cavity
//! waveguide in the single-excitation manifold.

pub mod analysis;
pub mod bound;
pub mod chebyshev;
pub mod dynamics;
pub mod error;
pub mod green;
pub mod io;
mod lapack;
pub mod model;
pub mod roots;
pub mod spectrum;

pub use analysis::{dominant_frequency, SpectralPeak};
pub use bound::{
    find_bics, find_bocs, region_scan, BocSearch, BoundKind, BoundState, ScanGrid, ScanOptions,
};
pub use chebyshev::ChebyshevPropagator;
pub use dynamics::{evolve, EvolveOptions, ProjectionBasis, Propagator, Trajectory};
pub use error::{Error, Result};
pub use green::{BandSide, PoleFunctionValue, Regime, SelfEnergyValue};
pub use model::{
    build_hamiltonian, check_light_cone, required_cavities, sector_energy, ChainHamiltonian,
    EmitterArray, LatticeParams, ParityState, Sector, SingleExcitationState,
};
pub use spectrum::Spectrum;
