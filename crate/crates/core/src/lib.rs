//! Desk-scale digital twin of a flux-tunable transmon processor: Hamiltonian
//! extraction, dispersive readout, flux-line pre-distortion, two-qubit gate
//! calibration and randomized benchmarking.

pub mod device;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod flux;
pub mod fluxmap;
pub mod numeric;
pub mod rb;
pub mod readout;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{
    build_hamiltonian, build_real_hamiltonian, diagonalize, dressed_observables, josephson_energy,
    BareLabel, ChainParams, DressedObservables, DressedSpectrum, FluxPoint, Hamiltonian,
    TransmonParams,
};
