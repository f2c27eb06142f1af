//! Parallel mass-spring simulation of soft, rigid, multi-material and
//! actuated lattices.
//!
//! A [`model::Scene`] holds masses, Hookean springs, actuation groups and
//! contact planes. [`lattice`] builds scenes from triangle meshes,
//! [`engine::Engine`] steps them with explicit Euler, Verlet or RK4 in serial
//! or slot-reservation parallel mode, and [`analysis`] measures energies and
//! frequencies against beam theory and modal analysis.
//!
//! [`io`] reads and writes versioned JSON scenes, [`validate`] bundles the
//! beam, energy and natural-frequency suites, [`bench`] measures spring
//! throughput, [`steer`] serves a running engine over TCP and [`cli`] backs
//! the `springsim` binary.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod engine;
pub mod io;
pub mod lattice;
pub mod model;
pub mod steer;
pub mod validate;

pub type Vec3 = nalgebra::Vector3<f64>;
