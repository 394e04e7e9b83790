//! `coolnet` — simulation and analysis of a local-control cooling and
//! state-transfer protocol on spin networks.
//!
//! The library builds Heisenberg Hamiltonians on weighted coupling graphs,
//! runs the swap-staged download/upload unitaries on a dense full-register
//! statevector, certifies ergodicity of the induced channels on the
//! uncontrolled region, constructs polar-decomposition decoders, and
//! evaluates cooling rates and transfer fidelities.
//!
//! Conventions used throughout (asserted in tests):
//! * subsystem ordering: factor 0 is the most significant part of the
//!   flattened index;
//! * spin convention: `|0⟩` is spin-down with `Z|0⟩ = -|0⟩`, so the
//!   excitation number operator literally counts `|1⟩`s;
//! * vectorization of density matrices is column-stacking.

pub mod channel;
pub mod cli;
pub mod coding;
pub mod cooling;
pub mod error;
pub mod linalg;
pub mod network;
pub mod protocol;
pub mod states;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, StateVector};
pub use network::{RegisterLayout, SpinNetwork};
pub use channel::{ChannelDiagnostics, QuantumChannel};
pub use protocol::{DecompositionResult, Direction, ProtocolConfig};
pub use coding::CodeMap;
pub use cooling::CoolingTrace;
