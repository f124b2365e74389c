//! Simulation and analysis of time-bin interferometers built from fiber
//! loops, in the language of tensor networks.
//!
//! A train of Fock-state time bins couples through one or more fiber loops
//! via static beam-splitter couplers. The sequential structure of that
//! process makes the output state a matrix product state, which this crate
//! constructs exactly ([`mps::build_single_loop`]) or with controlled bond
//! truncation for multi-loop stacks ([`mps::build_sequential`]). On top of
//! the state sit entanglement and correlation observables
//! ([`observables`]), a classical photon-counting sampler ([`sampler`]), a
//! brute-force dense reference backend ([`oracle`]), and a graph-level
//! analysis of contraction cost via treewidth bounds ([`graph`]).

pub mod arch;
pub mod error;
pub mod fock;
pub mod graph;
pub mod mps;
pub mod observables;
pub mod oracle;
pub mod sampler;
pub mod tensor;

pub use arch::{ArchKind, ArchitectureSpec};
pub use error::SimError;
pub use fock::{CouplerSpec, CouplerTensor, FockDim};
pub use mps::{CanonicalMps, Mps};
pub use tensor::{ComplexTensor, SvdResult, TensorError, C64};
