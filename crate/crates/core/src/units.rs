//! Conversions between laboratory units and Hartree atomic units.
//!
//! Everything inside the library is in atomic units (ħ = mₑ = e = 1): lengths
//! in bohr, energies in hartree, masses in electron masses and angular
//! frequencies in inverse atomic time units.

use std::f64::consts::PI;

/// Atomic unit of time in seconds (CODATA).
pub const AU_TIME_S: f64 = 2.418_884_326_5e-17;

/// Unified atomic mass unit in electron masses (CODATA).
pub const AMU_IN_ME: f64 = 1_822.888_486;

/// Hartree in wavenumbers (cm⁻¹), only used for human-readable output.
pub const HARTREE_IN_CM1: f64 = 219_474.631_36;

/// Trap angular frequency in atomic units for a trap frequency `ν` in kHz.
pub fn omega_from_khz(nu_khz: f64) -> f64 {
    2.0 * PI * nu_khz * 1.0e3 * AU_TIME_S
}

/// Inverse of [`omega_from_khz`].
pub fn khz_from_omega(omega: f64) -> f64 {
    omega / (2.0 * PI * 1.0e3 * AU_TIME_S)
}

/// Reduced mass of two identical atoms of mass `mass_u` (in u), in
/// electron masses.
pub fn reduced_mass_identical(mass_u: f64) -> f64 {
    0.5 * mass_u * AMU_IN_ME
}

/// Harmonic length `sqrt(1/(μω))` in bohr.
pub fn harmonic_length(mu: f64, omega: f64) -> f64 {
    (1.0 / (mu * omega)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_frequency() {
        let w = omega_from_khz(10.0);
        assert!((khz_from_omega(w) - 10.0).abs() < 1e-12);
        // 2π · 10⁴ Hz · τ_au
        assert!((w - 1.519_829_6e-12).abs() < 1e-18);
    }

    #[test]
    fn lithium6_reduced_mass() {
        let mu = reduced_mass_identical(6.015_122_8);
        assert!((mu - 5_482.449_047).abs() < 1e-5);
    }
}
