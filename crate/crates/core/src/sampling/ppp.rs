use std::f64::consts::SQRT_2;

use rand::Rng;

use super::sample_lifetime;

/// Exponential rate of the extremal intensity `√2 e^{-√2 x} dx`.
pub const PPP_RATE: f64 = SQRT_2;

/// Atoms of the Poisson point process with intensity `√2 e^{-√2 x} dx`
/// restricted to `[floor, ∞)`, in decreasing order.
///
/// The map `x ↦ e^{-√2 x}` sends the process to a unit-rate process on
/// `(0, ∞)`, so the atoms are `-ln(Γ_i)/√2` for the arrival times `Γ_i` of a
/// standard Poisson process, stopped once `Γ_i` exceeds `e^{-√2 floor}`.
/// The atom count is Poisson with mean `e^{-√2 floor}`; very negative floors
/// therefore produce very many atoms.
pub fn sample_exponential_ppp<R: Rng + ?Sized>(floor: f64, rng: &mut R) -> Vec<f64> {
    let limit = (-PPP_RATE * floor).exp();
    let mut atoms = Vec::new();
    let mut gamma = 0.0;
    loop {
        gamma += sample_lifetime(rng);
        if gamma > limit {
            break;
        }
        atoms.push(-gamma.ln() / PPP_RATE);
    }
    atoms
}
