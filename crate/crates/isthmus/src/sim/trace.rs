//! Synthetic traceroutes: abstract three-segment paths (source network,
//! transit, target network) sufficient for halt-location classification.
//!
//! Reachable (observer, destination) pairs succeed with the last hop inside
//! the destination block. Severed pairs halt with `unreachable` or `loop`
//! records truncated at or before the target AS per the campaign's outcome
//! quotas (or the injection's declared breakpoint), or produce `gap` records
//! that downstream analysis discards.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{format_addr, parse_addr, BlockId, Prefix};
use crate::sim::{quotas, Breakpoint, SimSpec, TraceMix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltKind {
    Success,
    Unreachable,
    Loop,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracerouteHop {
    #[serde(with = "addr_string")]
    pub addr: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asn: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Prefix>,
}

/// One synthesized traceroute; `hops` lists the responsive hops in order,
/// so the last entry is the last responsive hop before the halt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracerouteRecord {
    pub time: i64,
    pub vp: String,
    #[serde(with = "addr_string")]
    pub dst: u32,
    pub halt: HaltKind,
    pub hops: Vec<TracerouteHop>,
}

impl TracerouteRecord {
    pub fn dst_block(&self) -> BlockId {
        BlockId::containing(self.dst)
    }

    pub fn last_hop(&self) -> Option<&TracerouteHop> {
        self.hops.last()
    }
}

mod addr_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(addr: &u32, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_addr(*addr))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
        let text = String::deserialize(d)?;
        parse_addr(&text).map_err(serde::de::Error::custom)
    }
}

/// Write records as JSON lines.
pub fn write_traceroutes<W: Write>(records: &[TracerouteRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Read JSON-line records, skipping blank lines.
pub fn read_traceroutes(text: &str) -> Result<Vec<TracerouteRecord>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Synthesize every campaign in the spec. Deterministic for fixed
/// (spec, seed): outcome quotas are assigned in trace order, so the seed
/// only perturbs in-block address choices.
pub fn synthesize_traceroutes(spec: &SimSpec, seed: u64) -> Result<Vec<TracerouteRecord>> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xace);

    let vp_homes: BTreeMap<String, BlockId> = spec
        .vps
        .iter()
        .map(|p| (p.vp.vp_id.clone(), p.home()))
        .collect();

    let mut out = Vec::new();
    for campaign in &spec.campaigns {
        let mut vp_ids: Vec<String> = Vec::new();
        if let Some(gname) = &campaign.group {
            vp_ids.extend(
                spec.vps
                    .iter()
                    .filter(|p| p.group.as_deref() == Some(gname))
                    .map(|p| p.vp.vp_id.clone()),
            );
        }
        vp_ids.extend(campaign.vps.iter().cloned());
        let targets = super::resolve_selector(&campaign.targets, &vp_homes)?;

        // First pass: fixed (vp, dst, reachable) tuples in trace order.
        let mut planned: Vec<(String, BlockId, bool)> = Vec::new();
        let g = spec.scenario.graph_at(campaign.time)?;
        for (i, vp_id) in vp_ids.iter().enumerate() {
            let vp_node = spec.scenario.vp_node(vp_id)?;
            for j in 0..campaign.per_vp {
                let target = targets[(i * campaign.per_vp as usize + j as usize) % targets.len()];
                let target_node = g.node_idx(target)?;
                let up = crate::oracle::observe(&g, vp_node, target_node)?
                    == crate::model::ObservationState::Up;
                planned.push((vp_id.clone(), target, up));
            }
        }

        // Outcome quotas over the failed traces.
        let failed = planned.iter().filter(|(_, _, up)| !up).count();
        let mix = campaign
            .mix
            .unwrap_or_else(|| default_mix(spec, campaign.time));
        let q = quotas(&[mix.at_target_as, mix.before_target_as, mix.gap], failed);
        let (mut n_at, mut n_before) = (q[0], q[1]);

        let mut fail_seq = 0usize;
        for (vp_id, target, up) in planned {
            let home = vp_homes[&vp_id];
            let dst = target.base_addr() + rng.gen_range(1..255);
            let record = if up {
                TracerouteRecord {
                    time: campaign.time,
                    vp: vp_id,
                    dst,
                    halt: HaltKind::Success,
                    hops: vec![
                        hop(spec, home.base_addr() + 1),
                        transit_hop(spec),
                        hop(spec, dst),
                    ],
                }
            } else {
                let outcome = if n_at > 0 {
                    n_at -= 1;
                    Outcome::AtTargetAs
                } else if n_before > 0 {
                    n_before -= 1;
                    Outcome::BeforeTargetAs
                } else {
                    Outcome::Gap
                };
                let halt = match outcome {
                    Outcome::Gap => HaltKind::Gap,
                    _ if fail_seq.is_multiple_of(2) => HaltKind::Unreachable,
                    _ => HaltKind::Loop,
                };
                fail_seq += 1;
                let mut hops = vec![hop(spec, home.base_addr() + 1), transit_hop(spec)];
                if outcome == Outcome::AtTargetAs {
                    hops.push(target_as_hop(spec, target)?);
                }
                TracerouteRecord {
                    time: campaign.time,
                    vp: vp_id,
                    dst,
                    halt,
                    hops,
                }
            };
            out.push(record);
        }
    }
    Ok(out)
}

#[derive(PartialEq, Clone, Copy)]
enum Outcome {
    AtTargetAs,
    BeforeTargetAs,
    Gap,
}

fn default_mix(spec: &SimSpec, time: i64) -> TraceMix {
    // honor an injection-declared breakpoint active at campaign time
    let bp = spec
        .injections
        .iter()
        .find(|inj| inj.start <= time && time < inj.end && inj.breakpoint.is_some())
        .and_then(|inj| inj.breakpoint);
    match bp {
        Some(Breakpoint::AtTargetAs) => TraceMix {
            at_target_as: 1.0,
            before_target_as: 0.0,
            gap: 0.0,
        },
        Some(Breakpoint::BeforeTargetAs) | None => TraceMix {
            at_target_as: 0.0,
            before_target_as: 1.0,
            gap: 0.0,
        },
    }
}

fn hop(spec: &SimSpec, addr: u32) -> TracerouteHop {
    let origin = spec.origin_of(BlockId::containing(addr));
    TracerouteHop {
        addr,
        asn: origin.map(|e| e.asn),
        prefix: origin.map(|e| e.prefix),
    }
}

/// A hop inside a synthetic transit network that no scenario prefix covers
/// unless the configuration routes it explicitly.
fn transit_hop(spec: &SimSpec) -> TracerouteHop {
    hop(spec, 0xc6120001) // 198.18.0.1
}

/// A hop in the target's AS but outside the target's routed prefix: some
/// other prefix announced by the same origin.
fn target_as_hop(spec: &SimSpec, target: BlockId) -> Result<TracerouteHop> {
    let origin = spec.origin_of(target).ok_or_else(|| {
        Error::config(format!("no routed prefix covers campaign target {target}"))
    })?;
    let sibling = spec
        .prefixes
        .iter()
        .find(|e| e.asn == origin.asn && e.prefix != origin.prefix)
        .ok_or_else(|| {
            Error::config(format!(
                "target AS {} needs a second routed prefix for at-AS halts",
                origin.asn
            ))
        })?;
    Ok(hop(spec, sibling.prefix.base() + 1))
}
