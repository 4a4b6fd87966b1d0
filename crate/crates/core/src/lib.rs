//! Dense operator algebra and second-order propagators for small atom-field
//! models.
//!
//! The crate has four layers:
//!
//! * [`space`] / [`operator`] / [`expm`]: truncated tensor-product bases,
//!   dense complex operators, ladder constructions, and a Pade
//!   scaling-and-squaring matrix exponential;
//! * [`propagators`]: second-order Magnus and Dyson propagators from a
//!   time-dependent interaction by trapezoid quadrature, plus a midpoint
//!   stepping oracle;
//! * [`driven`]: the exactly solvable single-mode model driven by a
//!   classical current, with closed forms for every propagator;
//! * [`fermi`]: the two-atom emission-absorption model whose excitation
//!   amplitude is causal under the Magnus series, with analytic and
//!   discrete-mode numeric paths.

pub mod driven;
pub mod error;
pub mod expm;
pub mod fermi;
pub mod operator;
pub mod propagators;
pub mod space;

pub use error::{Error, Result};
pub use expm::matrix_exponential;
pub use operator::{
    atom_lowering, atom_raising, commutator, mode_annihilation, mode_creation,
    transition_amplitude, Operator,
};
pub use propagators::{
    dyson2_propagator, magnus2_exponential_propagator, magnus2_pieces,
    magnus2_series_propagator, stepping_propagator, unitarity_defect, MagnusPieces, TimeGrid,
};
pub use space::{build_space, AtomState, Branch, ModeFrequency, Space, SpaceDescriptor, StateVector};
