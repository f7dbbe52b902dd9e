//! Single-excitation dynamics of a two-level giant atom coupled at three
//! sites to a dynamically modulated coupled-resonator waveguide.
//!
//! The crate provides three mutually cross-validating propagation backends —
//! real-space integration of the working equations ([`real`]), Bloch-mode
//! evolution under the three-region coupling approximation ([`kspace`]), and
//! the collective-variable reduction ([`reduced`]) — together with a
//! closed-form stationary-state solver ([`boundstate`]), trajectory analysis
//! ([`analysis`]), and a reproducible experiment runner ([`runner`]).
//!
//! All rates are in units of the inter-resonator hopping `eta`, all times in
//! units of `eta⁻¹`. Integration is fixed-step fourth-order Runge-Kutta, so
//! identical configurations reproduce byte-identical output files.
//!
//! ```
//! use crow::model::{ExcitationSpec, LatticeSpec, ModelParams};
//!
//! let params = ModelParams::default();
//! let lattice = LatticeSpec { m_min: -64, m_max: 63, d: 64 };
//! let exc = ExcitationSpec::InitialWavepacket { m0: -30, delta_m: 6.0, k0: -0.5 };
//! let packet = crow::model::build_wavepacket(&lattice, &exc).unwrap();
//! assert!((packet.norm_sqr() - 1.0).abs() < 1e-12);
//!
//! let modes = crow::kspace::bloch_transform(&packet, lattice.d).unwrap();
//! assert!((modes.norm_sqr() - 1.0).abs() < 1e-10);
//! ```

pub mod analysis;
pub mod boundstate;
pub mod config;
pub mod error;
pub mod kspace;
pub mod model;
mod ode;
pub mod output;
pub mod real;
pub mod reduced;
pub mod runner;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{Backend, ExcitationSpec, IntegratorConfig, LatticeSpec, ModelParams};
pub use trajectory::Trajectory;
