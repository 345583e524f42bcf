use super::{same_time, SimError};

/// One node of the genealogy.
///
/// The Ulam-Harris label is implicit: `rank` is the 1-based position among
/// siblings (0 for the ancestor) and [`Realization::label`] rebuilds the full
/// label from the parent chain. Children of a particle occupy the contiguous
/// indices `first_child .. first_child + child_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleRecord {
    pub parent: Option<usize>,
    pub rank: u32,
    pub depth: u32,
    pub birth_time: f64,
    /// `None` while alive at the horizon.
    pub death_time: Option<f64>,
    pub birth_position: f64,
    /// Position at death, or at the horizon for survivors.
    pub death_position: f64,
    /// Set once the death event has been processed.
    pub child_count: Option<u32>,
    pub first_child: usize,
    /// Removed by the optional killing barrier rather than by branching.
    pub killed: bool,
}

impl ParticleRecord {
    pub fn children(&self) -> std::ops::Range<usize> {
        let k = self.child_count.unwrap_or(0) as usize;
        self.first_child..self.first_child + k
    }

    /// `b_u <= t < d_u`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.birth_time <= t && self.death_time.map_or(true, |d| t < d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotEntry {
    pub particle: usize,
    pub position: f64,
}

/// The population alive at time `time`, ordered by particle index.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub entries: Vec<SnapshotEntry>,
}

impl Snapshot {
    pub fn new(time: f64) -> Self {
        Self {
            time,
            entries: Vec::new(),
        }
    }

    /// Builds a free-standing snapshot from positions, numbering particles
    /// `0..n`. Used for statistics on hand-made populations.
    pub fn from_positions(time: f64, positions: &[f64]) -> Self {
        Self {
            time,
            entries: positions
                .iter()
                .enumerate()
                .map(|(particle, &position)| SnapshotEntry { particle, position })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.position)
    }
}

/// A simulated genealogy together with its snapshots.
#[derive(Clone, Debug)]
pub struct Realization {
    pub(crate) particles: Vec<ParticleRecord>,
    pub(crate) snapshots: Vec<Snapshot>,
    pub(crate) horizon: f64,
    pub(crate) extinct_at: Option<f64>,
    pub(crate) truncated: bool,
}

impl Realization {
    pub fn particles(&self) -> &[ParticleRecord] {
        &self.particles
    }

    pub fn particle(&self, u: usize) -> Result<&ParticleRecord, SimError> {
        self.particles.get(u).ok_or(SimError::InvalidParticle(u))
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn extinct_at(&self) -> Option<f64> {
        self.extinct_at
    }

    pub fn survived(&self) -> bool {
        self.extinct_at.is_none()
    }

    /// Set when the particle cap stopped the simulation early.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// The stored snapshot at `t`. Positions at times that were not
    /// requested before simulating cannot be produced.
    pub fn alive_at(&self, t: f64) -> Result<&Snapshot, SimError> {
        self.snapshots
            .iter()
            .find(|s| same_time(s.time, t))
            .ok_or(SimError::MissingSnapshot(t))
    }

    /// Ulam-Harris label of `u`; the ancestor has the empty label.
    pub fn label(&self, u: usize) -> Result<Vec<u32>, SimError> {
        let mut p = self.particle(u)?;
        let mut label = Vec::with_capacity(p.depth as usize);
        while let Some(parent) = p.parent {
            label.push(p.rank);
            p = &self.particles[parent];
        }
        label.reverse();
        Ok(label)
    }

    /// The ancestor `v` of `u` with `b_v <= s < d_v`.
    pub fn ancestor_at(&self, u: usize, s: f64) -> Result<usize, SimError> {
        let mut p = self.particle(u)?;
        if !(s >= 0.0) || p.death_time.is_some_and(|d| s >= d) {
            return Err(SimError::NoAncestor { particle: u, time: s });
        }
        let mut v = u;
        while p.birth_time > s {
            // the root is born at 0 <= s, so the chain always ends
            v = p.parent.expect("non-root particle has a parent");
            p = &self.particles[v];
        }
        Ok(v)
    }

    /// Index of the last common ancestor of `u != v`: the particle whose
    /// label is the longest common prefix of both labels.
    pub fn last_common_ancestor(&self, u: usize, v: usize) -> Result<usize, SimError> {
        if u == v {
            return Err(SimError::SameParticle(u));
        }
        let (mut a, mut b) = (u, v);
        let mut pa = self.particle(a)?;
        let mut pb = self.particle(b)?;
        while pa.depth > pb.depth {
            a = pa.parent.expect("deeper particle has a parent");
            pa = &self.particles[a];
        }
        while pb.depth > pa.depth {
            b = pb.parent.expect("deeper particle has a parent");
            pb = &self.particles[b];
        }
        while a != b {
            a = pa.parent.expect("distinct particles at equal depth have parents");
            b = pb.parent.expect("distinct particles at equal depth have parents");
            pa = &self.particles[a];
            pb = &self.particles[b];
        }
        Ok(a)
    }

    /// Death time `d_{u∧v}` of the last common ancestor of `u != v`.
    pub fn lca_death_time(&self, u: usize, v: usize) -> Result<f64, SimError> {
        let w = self.last_common_ancestor(u, v)?;
        // a common ancestor of two distinct particles has branched
        Ok(self.particles[w]
            .death_time
            .expect("a branching particle has a death time"))
    }

    /// For every particle, the number of its descendants (itself included)
    /// present in the snapshot at `t`.
    pub fn descendant_counts(&self, t: f64) -> Result<Vec<u64>, SimError> {
        let snap = self.alive_at(t)?;
        let mut counts = vec![0u64; self.particles.len()];
        for e in &snap.entries {
            counts[e.particle] += 1;
        }
        // children always have larger indices than their parent
        for u in (1..self.particles.len()).rev() {
            if let Some(p) = self.particles[u].parent {
                counts[p] += counts[u];
            }
        }
        Ok(counts)
    }

    /// `Σ_{u≠v ∈ N(t)} f(d_{u∧v})` over ordered pairs, by aggregating at every
    /// branch point: a particle with children holding `n_1, …, n_k`
    /// descendants at `t` is the last common ancestor of
    /// `(Σ n_i)² − Σ n_i²` ordered pairs.
    pub fn pair_functional<F: Fn(f64) -> f64>(&self, t: f64, f: F) -> Result<f64, SimError> {
        let counts = self.descendant_counts(t)?;
        let mut total = 0.0;
        for p in &self.particles {
            let Some(d) = p.death_time else { continue };
            if d > t || p.child_count.unwrap_or(0) < 2 {
                continue;
            }
            let (mut s, mut s2) = (0.0f64, 0.0f64);
            for c in p.children() {
                let n = counts[c] as f64;
                s += n;
                s2 += n * n;
            }
            let pairs = s * s - s2;
            if pairs > 0.0 {
                total += f(d) * pairs;
            }
        }
        Ok(total)
    }

    /// Same quantity by direct enumeration of ordered pairs, `O(n(t)²)`.
    pub fn pair_functional_pairwise<F: Fn(f64) -> f64>(
        &self,
        t: f64,
        f: F,
    ) -> Result<f64, SimError> {
        let snap = self.alive_at(t)?;
        let mut total = 0.0;
        for (i, a) in snap.entries.iter().enumerate() {
            for (j, b) in snap.entries.iter().enumerate() {
                if i != j {
                    total += f(self.lca_death_time(a.particle, b.particle)?);
                }
            }
        }
        Ok(total)
    }

    /// `n(t) + #{childless deaths in (s, t]}`, the number of lines alive at
    /// some time in `[s, t]` when a branching particle is continued by one
    /// of its children. Its mean is `e^t + μ(0)(e^t − e^s)`.
    pub fn lineage_count(&self, s: f64, t: f64) -> Result<u64, SimError> {
        let alive = self.alive_at(t)?.len() as u64;
        let childless = self
            .particles
            .iter()
            .filter(|p| {
                p.child_count == Some(0)
                    && !p.killed
                    && p.death_time.is_some_and(|d| d > s && d <= t)
            })
            .count() as u64;
        Ok(alive + childless)
    }

    /// Number of particles whose death event falls in `(0, t]`.
    pub fn deaths_by(&self, t: f64) -> usize {
        self.particles
            .iter()
            .filter(|p| p.child_count.is_some() && p.death_time.is_some_and(|d| d <= t))
            .count()
    }
}
