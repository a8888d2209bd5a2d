//! Noisy variational quantum optimization at desk scale.
//!
//! The crate simulates parametric quantum circuits as dense density matrices,
//! attaches realistic noise channels to every gate, and provides the
//! gradient estimators (symmetric logarithmic derivative, log-derivative and
//! Hadamard test), quantum Fisher information, error bounds and stochastic
//! gradient descent needed to study how noise and shot noise interact during
//! hybrid optimization.
//!
//! Basis convention: qubit 0 is the most significant bit of a basis index.

pub mod ansatz;
pub mod bounds;
pub mod channels;
mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod optimizer;
pub mod pauli;
pub mod rng;
pub mod state;

pub use error::{Error, Result};

pub use ansatz::{build_qaoa, ising_ring, transverse_mixer, GateNoise, NoisyGate, ParametricCircuit, QaoaSpec};
pub use channels::KrausChannel;
pub use estimators::{BaselinePolicy, EstimatorKind, GradientSample, SldResult};
pub use pauli::{Pauli, PauliString, PauliSum};
pub use state::{DensityMatrix, PureState};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

/// Default upper limit on the register size for dense realization.
pub const DEFAULT_QUBIT_CAP: usize = 12;
