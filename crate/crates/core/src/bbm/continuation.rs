use crate::numerics::LogSumExp;
use crate::sampling::{gaussian_increment, sample_lifetime, OffspringDistribution, RngStream};

/// Runs independent branching Brownian motions from given starting points
/// for a fixed duration and accumulates `ln Σ e^{β X_v}` over the particles
/// alive at the end, for several β at once.
///
/// Nothing is stored per particle, so this extends a realization far beyond
/// what fits in a genealogy. By the branching and memoryless properties,
/// continuing every particle alive at `t` with a fresh Exp(1) clock yields
/// `N(t + Δ)` with the correct law given the past.
#[derive(Debug)]
pub struct Continuation<'a> {
    offspring: &'a OffspringDistribution,
    betas: Vec<f64>,
    sums: Vec<LogSumExp>,
    max_position: f64,
    particles: u64,
    stack: Vec<(f64, f64)>,
}

impl<'a> Continuation<'a> {
    pub fn new(offspring: &'a OffspringDistribution, betas: &[f64]) -> Self {
        Self {
            offspring,
            betas: betas.to_vec(),
            sums: vec![LogSumExp::new(); betas.len()],
            max_position: f64::NEG_INFINITY,
            particles: 0,
            stack: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.sums.iter_mut().for_each(|s| *s = LogSumExp::new());
        self.max_position = f64::NEG_INFINITY;
        self.particles = 0;
    }

    /// Adds the end-of-run particles descending from one particle at
    /// `position` that runs for `duration`.
    pub fn extend(&mut self, position: f64, duration: f64, rng: &mut RngStream) {
        debug_assert!(duration >= 0.0);
        let binary = self.offspring.is_binary();
        let mut stack = std::mem::take(&mut self.stack);
        stack.push((duration, position));
        while let Some((mut remaining, mut x)) = stack.pop() {
            // follow the first child in place, stack the siblings
            loop {
                let life = sample_lifetime(rng);
                if life >= remaining {
                    let end = x + gaussian_increment(remaining, rng);
                    self.record(end);
                    break;
                }
                x += gaussian_increment(life, rng);
                remaining -= life;
                if binary {
                    stack.push((remaining, x));
                    continue;
                }
                let k = self.offspring.sample(rng);
                if k == 0 {
                    break;
                }
                for _ in 1..k {
                    stack.push((remaining, x));
                }
            }
        }
        self.stack = stack;
    }

    #[inline]
    fn record(&mut self, end: f64) {
        if let ([sum], [beta]) = (&mut self.sums[..], &self.betas[..]) {
            sum.add(beta * end);
        } else {
            for (sum, &beta) in self.sums.iter_mut().zip(&self.betas) {
                sum.add(beta * end);
            }
        }
        self.max_position = self.max_position.max(end);
        self.particles += 1;
    }

    /// `ln Σ e^{β X_v}` for the `i`-th configured β.
    pub fn log_sum(&self, i: usize) -> f64 {
        self.sums[i].value()
    }

    pub fn particle_count(&self) -> u64 {
        self.particles
    }

    pub fn max_position(&self) -> f64 {
        self.max_position
    }
}
