use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::realization::{ParticleRecord, Realization, Snapshot, SnapshotEntry};
use super::SimError;
use crate::sampling::{gaussian_increment, sample_lifetime, OffspringDistribution, RngStream};

/// Five million particles alive at once: horizon 15 leaves ample margin.
pub const DEFAULT_PARTICLE_CAP: usize = 5_000_000;

/// Killing line `x = slope·t + offset`.
///
/// Only checked at snapshot times and at death, so a path that crosses and
/// comes back between checks survives. Meant for variance-reduction runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barrier {
    pub slope: f64,
    pub offset: f64,
}

impl Barrier {
    fn above(&self, t: f64, x: f64) -> bool {
        x > self.slope * t + self.offset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    /// Sorted, within `[0, horizon]`.
    pub snapshot_times: Vec<f64>,
    pub offspring: OffspringDistribution,
    pub particle_cap: usize,
    pub barrier: Option<Barrier>,
}

impl SimConfig {
    pub fn new(horizon: f64, snapshot_times: Vec<f64>, offspring: OffspringDistribution) -> Self {
        Self {
            horizon,
            snapshot_times,
            offspring,
            particle_cap: DEFAULT_PARTICLE_CAP,
            barrier: None,
        }
    }

    pub fn binary(horizon: f64, snapshot_times: Vec<f64>) -> Self {
        Self::new(horizon, snapshot_times, OffspringDistribution::binary())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid(format!("horizon must be positive and finite (got {})", self.horizon));
        }
        if self.particle_cap == 0 {
            return invalid("particle_cap must be at least 1".into());
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.horizon).contains(&t) {
                return invalid(format!(
                    "snapshot time {t} lies outside [0, {}]",
                    self.horizon
                ));
            }
        }
        if self.snapshot_times.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("snapshot_times must be strictly increasing".into());
        }
        if let Some(b) = self.barrier {
            if !(b.slope.is_finite() && b.offset.is_finite()) {
                return invalid("barrier slope and offset must be finite".into());
            }
        }
        Ok(())
    }
}

/// Pending end of a lifetime. Ordered so the max-heap pops the earliest
/// time first, ties broken by the smaller particle index.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Event {
    time: f64,
    particle: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.particle.cmp(&self.particle))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Simulator<'a> {
    config: &'a SimConfig,
    particles: Vec<ParticleRecord>,
    snapshots: Vec<Snapshot>,
    events: BinaryHeap<Event>,
    alive: usize,
}

impl Simulator<'_> {
    /// Creates particle `idx`, draws its lifetime and realises its path at
    /// every snapshot time inside the lifetime, then at its end.
    fn spawn(
        &mut self,
        parent: Option<usize>,
        rank: u32,
        depth: u32,
        birth_time: f64,
        birth_position: f64,
        rng: &mut RngStream,
    ) {
        let idx = self.particles.len();
        let horizon = self.config.horizon;
        let death = birth_time + sample_lifetime(rng);
        let times = &self.config.snapshot_times;
        let mut j = times.partition_point(|&s| s < birth_time);
        let mut t = birth_time;
        let mut x = birth_position;
        let mut killed_at = None;
        while j < times.len() && times[j] < death {
            let s = times[j];
            x += gaussian_increment(s - t, rng);
            t = s;
            if self.config.barrier.is_some_and(|b| b.above(s, x)) {
                killed_at = Some(s);
                break;
            }
            self.snapshots[j].entries.push(SnapshotEntry {
                particle: idx,
                position: x,
            });
            j += 1;
        }
        let death_time = match killed_at {
            Some(s) => Some(s),
            None => {
                let end = death.min(horizon);
                x += gaussian_increment(end - t, rng);
                if death <= horizon {
                    if self.config.barrier.is_some_and(|b| b.above(death, x)) {
                        killed_at = Some(death);
                    }
                    Some(death)
                } else {
                    None
                }
            }
        };
        self.particles.push(ParticleRecord {
            parent,
            rank,
            depth,
            birth_time,
            death_time,
            birth_position,
            death_position: x,
            child_count: None,
            first_child: 0,
            killed: killed_at.is_some(),
        });
        if let Some(time) = death_time {
            self.events.push(Event {
                time,
                particle: idx,
            });
        }
        self.alive += 1;
    }
}

/// Runs one replication.
///
/// Events are processed in global time order. If more than
/// `config.particle_cap` particles are ever alive at once, the run stops and
/// the partial realization is returned with `truncated()` set; snapshots
/// after the stopping time are then incomplete.
pub fn simulate(config: &SimConfig, rng: &mut RngStream) -> Result<Realization, SimError> {
    config.validate()?;
    let mut sim = Simulator {
        config,
        particles: Vec::new(),
        snapshots: config.snapshot_times.iter().map(|&t| Snapshot::new(t)).collect(),
        events: BinaryHeap::new(),
        alive: 0,
    };
    sim.spawn(None, 0, 0, 0.0, 0.0, rng);
    let mut extinct_at = None;
    let mut truncated = false;
    while let Some(Event { time, particle }) = sim.events.pop() {
        sim.alive -= 1;
        let (children, position, depth) = {
            let p = &sim.particles[particle];
            let k = if p.killed {
                0
            } else {
                config.offspring.sample(rng)
            };
            (k, p.death_position, p.depth)
        };
        let first_child = sim.particles.len();
        {
            let p = &mut sim.particles[particle];
            p.child_count = Some(children);
            p.first_child = first_child;
        }
        for rank in 1..=children {
            sim.spawn(Some(particle), rank, depth + 1, time, position, rng);
        }
        if sim.alive == 0 {
            extinct_at = Some(time);
            break;
        }
        if sim.alive > config.particle_cap {
            truncated = true;
            break;
        }
    }
    Ok(Realization {
        particles: sim.particles,
        snapshots: sim.snapshots,
        horizon: config.horizon,
        extinct_at,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(config: &SimConfig, seed: u64) -> Realization {
        simulate(config, &mut RngStream::new(seed, 0)).unwrap()
    }

    /// Structural invariants every realization must satisfy.
    fn assert_consistent(r: &Realization) {
        let ps = r.particles();
        assert_eq!(ps[0].parent, None);
        assert_eq!((ps[0].birth_time, ps[0].birth_position), (0.0, 0.0));
        for (i, p) in ps.iter().enumerate() {
            for c in p.children() {
                let child = &ps[c];
                assert_eq!(child.parent, Some(i));
                assert_eq!(child.depth, p.depth + 1);
                assert_eq!(Some(child.birth_time), p.death_time);
                assert_eq!(child.birth_position, p.death_position);
            }
            if let Some(parent) = p.parent {
                assert!(parent < i);
                assert!(p.children().all(|c| c > i));
            }
        }
        if r.truncated() {
            return;
        }
        for snap in r.snapshots() {
            let alive: Vec<usize> = (0..ps.len())
                .filter(|&i| ps[i].alive_at(snap.time) && !(ps[i].killed && ps[i].death_time == Some(snap.time)))
                .collect();
            let listed: Vec<usize> = snap.entries.iter().map(|e| e.particle).collect();
            assert_eq!(listed, alive, "snapshot at {}", snap.time);
            if ps.iter().all(|p| !p.killed) {
                let branched: i64 = ps
                    .iter()
                    .filter(|p| p.death_time.is_some_and(|d| d <= snap.time))
                    .map(|p| p.child_count.unwrap() as i64 - 1)
                    .sum();
                assert_eq!(branched, snap.len() as i64 - 1);
            }
        }
    }

    #[test]
    fn time_zero_snapshot_holds_the_ancestor() {
        let r = run(&SimConfig::binary(1.0, vec![0.0, 1.0]), 3);
        assert_eq!(r.alive_at(0.0).unwrap().entries, vec![SnapshotEntry { particle: 0, position: 0.0 }]);
    }

    #[test]
    fn horizon_inside_first_lifetime() {
        let config = SimConfig::binary(1e-6, vec![5e-7, 1e-6]);
        for seed in 0..20 {
            let r = run(&config, seed);
            if r.particles()[0].death_time.is_none() {
                assert_eq!(r.particles().len(), 1);
                assert_eq!(r.alive_at(1e-6).unwrap().len(), 1);
                assert!(r.survived());
            }
            assert_consistent(&r);
        }
    }

    #[test]
    fn genealogy_is_consistent() {
        let config = SimConfig::binary(4.0, vec![0.0, 1.0, 2.5, 4.0]);
        for seed in 0..20 {
            assert_consistent(&run(&config, seed));
        }
    }

    #[test]
    fn same_seed_same_realization() {
        let config = SimConfig::binary(3.0, vec![1.0, 3.0]);
        let a = run(&config, 11);
        let b = run(&config, 11);
        assert_eq!(a.particles(), b.particles());
        assert_eq!(a.snapshots(), b.snapshots());
        let c = simulate(&config, &mut RngStream::new(11, 1)).unwrap();
        assert_ne!(a.particles(), c.particles());
    }

    #[test]
    fn cap_truncates() {
        let mut config = SimConfig::binary(12.0, vec![12.0]);
        config.particle_cap = 50;
        let r = run(&config, 1);
        assert!(r.truncated());
        assert_consistent(&r);
    }

    #[test]
    fn extinction_empties_later_snapshots() {
        let offspring = OffspringDistribution::new([(0, 1.0 / 3.0), (3, 2.0 / 3.0)]).unwrap();
        let config = SimConfig::new(3.0, vec![1.0, 2.0, 3.0], offspring);
        let mut extinct = 0;
        for seed in 0..200 {
            let r = run(&config, seed);
            assert_consistent(&r);
            if let Some(t) = r.extinct_at() {
                extinct += 1;
                assert!(!r.survived());
                for snap in r.snapshots().iter().filter(|s| s.time >= t) {
                    assert!(snap.is_empty());
                }
            }
        }
        assert!(extinct > 0);
    }

    #[test]
    fn barrier_removes_particles_above_the_line() {
        let mut config = SimConfig::binary(3.0, vec![0.5, 1.0, 2.0, 3.0]);
        config.barrier = Some(Barrier { slope: 0.0, offset: 0.3 });
        let mut killed = 0;
        for seed in 0..30 {
            let r = run(&config, seed);
            assert_consistent(&r);
            for snap in r.snapshots() {
                assert!(snap.positions().all(|x| x <= 0.3));
            }
            for p in r.particles().iter().filter(|p| p.killed) {
                killed += 1;
                assert_eq!(p.child_count.unwrap_or(0), 0);
                assert!(p.death_position > 0.3);
            }
        }
        assert!(killed > 0);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SimConfig::binary(0.0, vec![]),
            SimConfig::binary(f64::INFINITY, vec![]),
            SimConfig::binary(1.0, vec![2.0]),
            SimConfig::binary(1.0, vec![0.5, 0.5]),
            SimConfig { particle_cap: 0, ..SimConfig::binary(1.0, vec![]) },
        ];
        for config in bad {
            assert!(matches!(simulate(&config, &mut RngStream::new(0, 0)), Err(SimError::InvalidConfig(_))));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_runs_are_consistent(seed in any::<u64>(), horizon in 0.1f64..3.0, cuts in 1usize..5) {
            let mut times: Vec<f64> = (0..cuts).map(|i| horizon * i as f64 / cuts as f64).collect();
            times.push(horizon);
            let r = run(&SimConfig::binary(horizon, times), seed);
            assert_consistent(&r);
            let last = r.alive_at(horizon).unwrap();
            prop_assert_eq!(last.len(), r.particles().iter().filter(|p| p.death_time.is_none()).count());
        }
    }
}
