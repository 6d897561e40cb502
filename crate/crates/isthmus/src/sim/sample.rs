//! Observation sampling: every probing observer scans every block on its
//! own interval, with per-(observer, block) phase jitter, consulting the
//! ground truth and degrading successes through the hit-rate and loss
//! knobs.
//!
//! Sampling is parallel per observer with per-observer RNG streams derived
//! from the seed, so parallel and serial runs are byte-identical.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{BlockId, Observation, ObservationState};
use crate::sim::{InjectionKind, ResolvedInjection, SimSpec};

/// One emitted sample in compact form; `vp` indexes `SampleStream::vp_ids`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRow {
    pub time: i64,
    pub vp: u16,
    pub block: u32,
    pub up: bool,
}

/// A sampled observation stream, sorted by (time, observer, block).
#[derive(Debug, Clone)]
pub struct SampleStream {
    pub vp_ids: Vec<String>,
    pub rows: Vec<SampleRow>,
}

impl SampleStream {
    pub fn to_observations(&self) -> Vec<Observation> {
        self.rows
            .iter()
            .map(|r| Observation {
                time: r.time,
                vp: self.vp_ids[r.vp as usize].clone(),
                block: BlockId::new(r.block).expect("sampled blocks are valid"),
                state: if r.up {
                    ObservationState::Up
                } else {
                    ObservationState::Down
                },
            })
            .collect()
    }

    /// Write the stream in the observation interchange format:
    /// `time_unix<TAB>vp_id<TAB>block<TAB>state`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                r.time,
                self.vp_ids[r.vp as usize],
                BlockId::new(r.block).expect("sampled blocks are valid"),
                if r.up { "U" } else { "D" }
            )?;
        }
        Ok(())
    }
}

/// Interval lists answering "is this (observer, target) pair severed at t"
/// and "is this node powered off at t" without materializing graphs.
struct SeveranceIndex {
    /// Per observer slot: target block -> down intervals.
    narrow: Vec<HashMap<u32, Vec<(i64, i64)>>>,
    /// Per observer slot: intervals during which everything except the
    /// listed co-islanded blocks is down.
    broad: Vec<Vec<(i64, i64, Vec<u32>)>>,
    /// Target block -> inactive intervals (outages).
    outages: HashMap<u32, Vec<(i64, i64)>>,
    /// Per observer slot: intervals during which the observer itself is off.
    vp_off: Vec<Vec<(i64, i64)>>,
}

fn hits(intervals: &[(i64, i64)], t: i64) -> bool {
    intervals.iter().any(|&(s, e)| s <= t && t < e)
}

impl SeveranceIndex {
    fn build(spec: &SimSpec, probing_vps: &[usize]) -> Self {
        let homes: Vec<u32> = probing_vps
            .iter()
            .map(|&i| spec.vps[i].home().prefix24())
            .collect();
        let mut idx = SeveranceIndex {
            narrow: vec![HashMap::new(); probing_vps.len()],
            broad: vec![Vec::new(); probing_vps.len()],
            outages: HashMap::new(),
            vp_off: vec![Vec::new(); probing_vps.len()],
        };
        for inj in &spec.injections {
            let span = (inj.start, inj.end);
            match inj.kind {
                InjectionKind::Peninsula | InjectionKind::CountryFilter => {
                    idx.add_severed_pairs(inj, &homes, span);
                }
                InjectionKind::Island => {
                    let victims: Vec<u32> = inj.victims.iter().map(|b| b.prefix24()).collect();
                    for (slot, home) in homes.iter().enumerate() {
                        if victims.contains(home) {
                            idx.broad[slot].push((span.0, span.1, victims.clone()));
                        } else {
                            for &v in &victims {
                                idx.narrow[slot].entry(v).or_default().push(span);
                            }
                        }
                    }
                }
                InjectionKind::Outage => {
                    for v in &inj.victims {
                        idx.outages.entry(v.prefix24()).or_default().push(span);
                    }
                    for (slot, home) in homes.iter().enumerate() {
                        if inj.victims.iter().any(|b| b.prefix24() == *home) {
                            idx.vp_off[slot].push(span);
                        }
                    }
                }
            }
        }
        idx
    }

    fn add_severed_pairs(&mut self, inj: &ResolvedInjection, homes: &[u32], span: (i64, i64)) {
        let victims: Vec<u32> = inj.victims.iter().map(|b| b.prefix24()).collect();
        let severed: Vec<u32> = inj.severed_homes.iter().map(|b| b.prefix24()).collect();
        for (slot, home) in homes.iter().enumerate() {
            if severed.contains(home) {
                for &v in &victims {
                    self.narrow[slot].entry(v).or_default().push(span);
                }
            }
            if victims.contains(home) {
                for &s in &severed {
                    self.narrow[slot].entry(s).or_default().push(span);
                }
            }
        }
    }

    /// Oracle-side truth for one probe, before loss modeling. `None` means
    /// the observer itself is off and emits nothing.
    fn probe_truth(
        &self,
        slot: usize,
        home: u32,
        target: u32,
        target_base_up: bool,
        t: i64,
    ) -> Option<bool> {
        if hits(&self.vp_off[slot], t) {
            return None;
        }
        if target == home {
            return Some(true); // self-reachability for an active node
        }
        if !target_base_up || hits(self.outages.get(&target).map_or(&[][..], |v| v), t) {
            return Some(false);
        }
        if let Some(iv) = self.narrow[slot].get(&target) {
            if hits(iv, t) {
                return Some(false);
            }
        }
        for (s, e, except) in &self.broad[slot] {
            if *s <= t && t < *e && !except.contains(&target) {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Sample the observation streams of every probing observer. Deterministic
/// for a fixed (spec, seed); independent of thread count.
pub fn sample_stream(spec: &SimSpec, seed: u64) -> Result<SampleStream> {
    let probing_vps: Vec<usize> = (0..spec.vps.len())
        .filter(|&i| spec.vps[i].probing.is_some())
        .collect();
    let vp_ids: Vec<String> = probing_vps
        .iter()
        .map(|&i| spec.vps[i].vp.vp_id.clone())
        .collect();

    let index = SeveranceIndex::build(spec, &probing_vps);
    let base = &spec.scenario.base;

    // Per-target static facts, indexed by node order.
    let node_blocks: Vec<u32> = base.nodes().iter().map(|n| n.block.prefix24()).collect();
    let node_active: Vec<bool> = base.nodes().iter().map(|n| n.active).collect();

    let per_vp: Vec<Vec<SampleRow>> = probing_vps
        .par_iter()
        .enumerate()
        .map(|(slot, &vp_idx)| {
            let placed = &spec.vps[vp_idx];
            let model = placed.probing.expect("probing observers have a model");
            let home = placed.home().prefix24();
            let home_idx = spec
                .scenario
                .base
                .node_idx(placed.home())
                .expect("observer homes are scenario nodes");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(slot as u64 + 1);
            let lossless = model.target_hit_rate >= 1.0 && model.packet_loss <= 0.0;
            let mut rows = Vec::new();
            for (node, &target) in node_blocks.iter().enumerate() {
                let phase = if model.jitter {
                    rng.gen_range(0..model.interval_s)
                } else {
                    0
                };
                // static reachability from the base topology
                let base_up =
                    node_active[node] && (node == home_idx || base.has_edge(home_idx, node));
                let mut t = spec.start + phase;
                while t < spec.start + spec.horizon_s {
                    match index.probe_truth(slot, home, target, base_up, t) {
                        None => {}
                        Some(false) => rows.push(SampleRow {
                            time: t,
                            vp: slot as u16,
                            block: target,
                            up: false,
                        }),
                        Some(true) => {
                            let up = lossless
                                || (0..=model.retries).any(|_| {
                                    rng.gen_bool(model.target_hit_rate)
                                        && !rng.gen_bool(model.packet_loss)
                                });
                            rows.push(SampleRow {
                                time: t,
                                vp: slot as u16,
                                block: target,
                                up,
                            });
                        }
                    }
                    t += model.interval_s;
                }
            }
            rows
        })
        .collect();

    let mut rows: Vec<SampleRow> = per_vp.into_iter().flatten().collect();
    rows.sort_unstable_by_key(|r| (r.time, r.vp, r.block));
    Ok(SampleStream { vp_ids, rows })
}

/// The spec-level operation: sample and materialize full observations.
pub fn sample_observations(spec: &SimSpec, seed: u64) -> Result<Vec<Observation>> {
    Ok(sample_stream(spec, seed)?.to_observations())
}
