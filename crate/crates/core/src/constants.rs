//! Physical constants shared by every module.
//!
//! All conversions between power spectral density, noise temperature, and
//! photon quanta go through these values, so every module agrees bit-for-bit.

use serde::{Deserialize, Serialize};

/// Fixed CODATA constants used throughout the workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Boltzmann constant [J/K].
    pub k_b: f64,
    /// Reduced Planck constant [J s].
    pub hbar: f64,
}

/// The single set of constants used by the library.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    k_b: 1.380_649e-23,
    hbar: 1.054_571_817e-34,
};

/// Boltzmann constant [J/K].
pub const K_B: f64 = CODATA.k_b;

/// Reduced Planck constant [J s].
pub const HBAR: f64 = CODATA.hbar;

/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_codata() {
        assert_eq!(K_B, 1.380_649e-23);
        assert_eq!(HBAR, 1.054_571_817e-34);
        assert_eq!(CODATA.k_b, K_B);
        assert_eq!(CODATA.hbar, HBAR);
    }
}
