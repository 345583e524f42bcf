//! Tab-separated dump of a realization.
//!
//! `particles`: one row per particle in index order with columns
//! [`PARTICLE_COLUMNS`]. The label is the dot-separated Ulam-Harris label
//! (empty for the ancestor), the parent is empty for the ancestor, and
//! `death_time`/`child_count` are empty for particles alive at the horizon.
//!
//! `snapshots`: one row per snapshot entry, ordered by time then particle
//! index, with columns [`SNAPSHOT_COLUMNS`].
//!
//! Floats use Rust's shortest round-trip formatting.

use std::io::{self, Write};

use super::Realization;

pub const PARTICLE_COLUMNS: [&str; 9] = [
    "index",
    "label",
    "parent",
    "birth_time",
    "death_time",
    "birth_position",
    "death_position",
    "child_count",
    "killed",
];

pub const SNAPSHOT_COLUMNS: [&str; 3] = ["time", "particle", "position"];

pub fn write_particles<W: Write>(real: &Realization, out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", PARTICLE_COLUMNS.join("\t"))?;
    for (i, p) in real.particles().iter().enumerate() {
        let label = real
            .label(i)
            .expect("index from enumerate is valid")
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(".");
        let opt = |v: Option<String>| v.unwrap_or_default();
        writeln!(
            out,
            "{}\t{}\t{}\t{:?}\t{}\t{:?}\t{:?}\t{}\t{}",
            i,
            label,
            opt(p.parent.map(|v| v.to_string())),
            p.birth_time,
            opt(p.death_time.map(|d| format!("{d:?}"))),
            p.birth_position,
            p.death_position,
            opt(p.child_count.map(|c| c.to_string())),
            u8::from(p.killed),
        )?;
    }
    Ok(())
}

pub fn write_snapshots<W: Write>(real: &Realization, out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", SNAPSHOT_COLUMNS.join("\t"))?;
    for snap in real.snapshots() {
        for e in &snap.entries {
            writeln!(out, "{:?}\t{}\t{:?}", snap.time, e.particle, e.position)?;
        }
    }
    Ok(())
}
