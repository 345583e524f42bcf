use std::f64::consts::SQRT_2;

use super::LimitError;
use crate::sampling::{sample_exponential_ppp, RngStream};

/// Cluster law attached to each atom of the limiting extremal process.
pub trait Decoration {
    /// Offsets `Δ_j` of one cluster relative to its atom.
    fn sample(&self, rng: &mut RngStream) -> Vec<f64>;
}

/// A single point at the atom itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrivialDecoration;

impl Decoration for TrivialDecoration {
    fn sample(&self, _rng: &mut RngStream) -> Vec<f64> {
        vec![0.0]
    }
}

fn shift_for(z_proxy: f64, c: f64) -> Result<f64, LimitError> {
    if !(z_proxy > 0.0 && z_proxy.is_finite()) || !(c > 0.0 && c.is_finite()) {
        return Err(LimitError::InvalidArgument(format!(
            "z proxy and C must be positive (got z = {z_proxy}, C = {c})"
        )));
    }
    Ok((c * z_proxy).ln() / SQRT_2)
}

/// Atoms `p_i + ln(C·z)/√2` of the shifted `√2 e^{-√2x}dx` process that lie
/// above `floor`, in decreasing order, without decoration.
pub fn sample_limit_extremal_atoms(
    z_proxy: f64,
    c: f64,
    floor: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>, LimitError> {
    let shift = shift_for(z_proxy, c)?;
    if !floor.is_finite() {
        return Err(LimitError::InvalidArgument(format!("floor must be finite (got {floor})")));
    }
    let mut atoms = sample_exponential_ppp(floor - shift, rng);
    atoms.iter_mut().for_each(|p| *p += shift);
    Ok(atoms)
}

/// Decorated process: every atom above `floor` carries a cluster drawn from
/// `decoration`. Returned points are sorted decreasingly; cluster points may
/// fall below the floor.
pub fn sample_decorated_extremal_process<D: Decoration + ?Sized>(
    z_proxy: f64,
    c: f64,
    floor: f64,
    decoration: &D,
    rng: &mut RngStream,
) -> Result<Vec<f64>, LimitError> {
    let atoms = sample_limit_extremal_atoms(z_proxy, c, floor, rng)?;
    let mut points = Vec::with_capacity(atoms.len());
    for p in atoms {
        points.extend(decoration.sample(rng).into_iter().map(|d| p + d));
    }
    points.sort_by(|a, b| b.total_cmp(a));
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ks_two_sample;
    use crate::sampling::{sample_stable_positive, StableMethod, StableSpec};

    #[test]
    fn unit_shift_mean_count() {
        let mut rng = RngStream::new(1, 0);
        let n = 400_000;
        let total: usize = (0..n)
            .map(|_| sample_limit_extremal_atoms(1.0, 1.0, 0.0, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn doubling_z_shifts_atoms() {
        let floor = -1.0;
        let a = sample_limit_extremal_atoms(1.0, 1.0, floor, &mut RngStream::new(2, 0)).unwrap();
        let b = sample_limit_extremal_atoms(2.0, 1.0, floor + 2f64.ln() / SQRT_2, &mut RngStream::new(2, 0))
            .unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - 2f64.ln() / SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_arguments() {
        let mut rng = RngStream::new(3, 0);
        assert!(sample_limit_extremal_atoms(0.0, 1.0, 0.0, &mut rng).is_err());
        assert!(sample_limit_extremal_atoms(1.0, -1.0, 0.0, &mut rng).is_err());
        assert!(sample_limit_extremal_atoms(1.0, 1.0, f64::NEG_INFINITY, &mut rng).is_err());
    }

    #[test]
    fn trivial_decoration_keeps_atoms() {
        let a = sample_limit_extremal_atoms(1.5, 2.0, -2.0, &mut RngStream::new(4, 0)).unwrap();
        let b = sample_decorated_extremal_process(1.5, 2.0, -2.0, &TrivialDecoration, &mut RngStream::new(4, 0))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_sum_is_positive_stable() {
        // z = C = 1: Σ e^{βp_i} over the atoms is √2/β-stable with unit scale;
        // the mass below the floor is replaced by its mean
        let beta = 2.0;
        let alpha = SQRT_2 / beta;
        let floor = -5.0;
        let tail = SQRT_2 * ((beta - SQRT_2) * floor).exp() / (beta - SQRT_2);
        let mut rng = RngStream::new(5, 0);
        let n = 20_000;
        let sums: Vec<f64> = (0..n)
            .map(|_| {
                let atoms = sample_limit_extremal_atoms(1.0, 1.0, floor, &mut rng).unwrap();
                atoms.iter().map(|p| (beta * p).exp()).sum::<f64>() + tail
            })
            .collect();
        let spec = StableSpec::new(alpha, 1.0).unwrap();
        let mut rng = RngStream::new(6, 0);
        let direct: Vec<f64> = (0..n)
            .map(|_| sample_stable_positive(&spec, StableMethod::Direct, &mut rng))
            .collect();
        assert!(ks_two_sample(&sums, &direct).p_value > 0.01);
    }
}
