//! Central numerical tolerances. Library code and tests read the same
//! constants so they cannot drift apart.

/// Unitarity: `‖U†U − I‖_F` must stay below this.
pub const UNITARITY: f64 = 1e-10;

/// Hermiticity: entrywise `max|A − A†|` must stay below this.
pub const HERMITICITY: f64 = 1e-12;

/// Trace normalization of density matrices.
pub const TRACE: f64 = 1e-10;

/// Negative-eigenvalue slack for positive semidefinite checks.
pub const PSD: f64 = 1e-10;

/// Eigendecomposition reconstruction residual, relative to `‖·‖_F`.
pub const EIG_RESIDUAL: f64 = 1e-10;

/// Degeneracy gap for declaring the superoperator eigenvalue 1 nondegenerate.
pub const SPECTRAL_GAP: f64 = 1e-9;

/// Purity defect tolerated for a "pure" channel fixed point.
pub const PURE_FIXED_POINT: f64 = 1e-9;

/// Singular values below this count as zero in polar decompositions.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Maximum deviation of the controller factor from `|0⟩_C` after a swap
/// stage before the decomposition aborts.
pub const C_FACTOR_PURITY: f64 = 1e-8;

/// Values of `1 − η` below this are considered at the numerical floor.
pub const ETA_FLOOR: f64 = 1e-13;

/// Default cap on the full-register qubit count (system + memory).
pub const REGISTER_CAP: usize = 22;

/// Default cap on the network size for dense Hamiltonian construction.
pub const NETWORK_CAP: usize = 10;

/// Default cap on the uncontrolled dimension for superoperator spectra.
pub const UNCONTROLLED_DIM_CAP: usize = 64;
