//! Swendsen-Wang cluster dynamics on disordered Ising models over finite
//! boxes of Z^d: a simulation and exact-analysis laboratory.
//!
//! What lives where:
//!
//! * [`lattice`] — finite-box geometry: canonical vertex/edge indexing,
//!   vertex and edge boundaries, sub-cubes, central reflection, faces,
//!   coordinate parity.
//! * [`disorder`] — quenched coupling fields: i.i.d. sampling, the
//!   frustrated coupling construction inside a cube (`build_gadget`),
//!   verification and scanning, the coupling-field file format.
//! * [`model`] — Hamiltonian, exact Gibbs weights on tiny boxes, edge
//!   classification, constant-sign clusters and their boundary surfaces,
//!   the gadget reflection map.
//! * [`dynamics`] — the two-step chain itself, with a strict draw-order
//!   contract for seeded reproducibility and a documented replica seed
//!   derivation.
//! * [`spectral`] — exact transition matrices by enumeration,
//!   stationarity/reversibility checks, spectra, autocorrelations, and a
//!   deflated power iteration.
//! * [`observables`] — magnetization, accordance, the shell events, and
//!   time-series estimators with batch-means errors.
//! * [`bounds`] — the closed-form constants and tail bounds behind the
//!   slow-relaxation argument.
//! * [`harness`] — config files, CSV series, run manifests, the CLI, and
//!   the canned experiments.
//!
//! The `examples/` directory has one runnable walkthrough per capability;
//! start with `cargo run --example exact_kernel`.

pub mod bounds;
pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod spectral;

pub use error::{Result, SwError};
