//! Delay-coupled oscillator lattices on the periodic torus.
//!
//! Stuart-Landau and FitzHugh-Nagumo nodes coupled through two delayed,
//! unidirectional edges per node. The crate covers exact and large-delay
//! spectra of steady states and plane waves, a fixed-step DDE integrator with
//! per-edge delays, and the componentwise time-shift transformation that turns
//! a synchronous orbit into an arbitrary spatio-temporal pattern.

pub mod config;
pub mod dde;
pub mod fhn;
pub mod io;
pub mod lambertw;
pub mod lattice;
pub mod pattern;
pub mod roots;
pub mod sl;

pub use lattice::{
    enumerate_modes, DelayMap, Edge, FhnParams, LatticeError, LatticeSpec, ModelParams, SlParams,
    WaveVector,
};
