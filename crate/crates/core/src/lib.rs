//! Fourier analysis on finite abelian groups and the density-increment
//! machinery for counting three-term progressions: Bohr sets, large
//! spectra, the Katz-Koester iteration, Croot-Sisask almost periodicity,
//! progression-free constructions, and exact brute-force oracles for each.

pub mod almost_periodic;
pub mod bohr;
pub mod config;
pub mod constructions;
pub mod error;
pub mod fourier;
pub mod group;
pub mod io;
pub mod kk;
pub mod oracle;
pub mod par;
pub mod roth;
pub mod sets;
pub mod spectra;
pub mod suite;

pub use bohr::{BohrSet, BohrSpec, RegularBohr, RegularityCertificate};
pub use config::{CsMode, RunConfig};
pub use error::{Error, Result};
pub use fourier::{convolve, fourier, inverse_fourier, FourierCoeffs, FourierPath};
pub use group::{DensityFn, DualElement, Element, Group, Subset};
