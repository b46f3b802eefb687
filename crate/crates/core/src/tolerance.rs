//! Shared numerical tolerances.

/// Tolerances used by structural checks throughout the crate.
///
/// Library code and tests read the same record so a threshold is only ever
/// stated once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Generic structural check (commutation, orthogonality, ...).
    pub structural: f64,
    /// Normalization of pure states.
    pub normalization: f64,
    /// Hermiticity and unit trace of density matrices.
    pub density: f64,
    /// Smallest admissible eigenvalue of a density matrix.
    pub min_eigenvalue: f64,
    /// Projector idempotence / completeness.
    pub projector: f64,
    /// Normalization of probability distributions.
    pub distribution: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        structural: 1e-9,
        normalization: 1e-12,
        density: 1e-10,
        min_eigenvalue: -1e-9,
        projector: 1e-10,
        distribution: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Crate-wide defaults.
pub const TOL: Tolerances = Tolerances::DEFAULT;
