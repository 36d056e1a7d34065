//! Quench dynamics in a Su-Schrieffer-Heeger chain with an embedded block of
//! complex on-site potentials.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] builds the chain Hamiltonian and its symmetry diagnostics.
//! * [`spectral`] diagonalises it into a biorthogonal eigensystem and sweeps
//!   spectra across the hopping ratio `v/w`.
//! * [`dynamics`] prepares edge states and evolves them, either through the
//!   eigensystem or through a step propagator.
//! * [`observables`] reduces states to densities, bipartite norms and
//!   localization classes.
//! * [`experiment`] ties everything into named scenarios that write CSV and
//!   graymap files.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod observables;
pub mod propagator;
pub mod spectral;

pub use num_complex::Complex64;

pub use dynamics::{
    evolve_propagator, evolve_spectral, initial_edge_state, run_quench, EdgeSide, QuenchSpec,
    StateVector, Trajectory,
};
pub use error::{Error, Result};
pub use lattice::{
    build_hamiltonian, edge_correction, is_pt_symmetric, perturbation_matrix, HamiltonianMatrix,
    LatticeConfig, Region,
};
pub use observables::{
    bipartite_norms, center_of_mass, classify_side, reflection_ratio, site_density, BipartiteSplit,
    Side,
};
pub use spectral::{
    eigendecompose, ep_locate, match_branches, spectrum_sweep, zero_mode_report, Eigensystem,
    EpLocation, SpectrumSweepRow, SweepOptions, ZeroModeReport,
};
