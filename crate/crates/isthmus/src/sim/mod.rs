//! Synthetic ground truth: scenario configuration, fault injection, and
//! sampling of observation streams under configurable probing and loss
//! models.
//!
//! A scenario starts from either an explicit edge list (small fixtures) or a
//! full mesh at block granularity (reachability is end to end, so no router
//! topology is modeled). Injections become timed deltas on that base world.
//! Everything is deterministic for a fixed (config, seed).

mod sample;
mod trace;

pub use sample::{sample_observations, sample_stream, SampleRow, SampleStream};
pub use trace::{
    read_traceroutes, synthesize_traceroutes, write_traceroutes, HaltKind, TracerouteHop,
    TracerouteRecord,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockId, Prefix, TimeBinning, VantagePoint};
use crate::oracle::{Delta, ReachabilityGraph, Scenario, TopologyChange};

/// Probing schedule and loss model for one observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbingModel {
    /// Seconds between probes of one block by one observer.
    pub interval_s: i64,
    /// Probability the probed address responds given the block is reachable.
    pub target_hit_rate: f64,
    /// Probability an otherwise-successful probe is lost in flight.
    pub packet_loss: f64,
    /// Additional probe attempts after a failed one.
    #[serde(default)]
    pub retries: u32,
    /// Random per-(observer, block) phase in [0, interval). Disable to pin
    /// every probe to the round boundary.
    #[serde(default = "default_true")]
    pub jitter: bool,
}

fn default_true() -> bool {
    true
}

impl ProbingModel {
    pub fn validate(&self) -> Result<()> {
        if self.interval_s <= 0 {
            return Err(Error::config("probing interval must be positive"));
        }
        for (name, p) in [
            ("target_hit_rate", self.target_hit_rate),
            ("packet_loss", self.packet_loss),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} {p} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Trinocular-like: frequent scans with a curated hitlist.
    pub fn trinocular() -> Self {
        ProbingModel {
            interval_s: 660,
            target_hit_rate: 0.95,
            packet_loss: 0.0,
            retries: 0,
            jitter: true,
        }
    }

    /// Atlas-like: 5-minute pings with retransmissions.
    pub fn atlas() -> Self {
        ProbingModel {
            interval_s: 300,
            target_hit_rate: 0.99,
            packet_loss: 0.01,
            retries: 2,
            jitter: true,
        }
    }

    /// Ark-like: daily probes of one random address per block.
    pub fn ark() -> Self {
        ProbingModel {
            interval_s: 86_400,
            target_hit_rate: 1.0 / 6.0,
            packet_loss: 0.0,
            retries: 0,
            jitter: true,
        }
    }

    /// Perfect observer: the stream equals oracle truth at probe times.
    pub fn lossless(interval_s: i64) -> Self {
        ProbingModel {
            interval_s,
            target_hit_rate: 1.0,
            packet_loss: 0.0,
            retries: 0,
            jitter: true,
        }
    }
}

/// Where a synthesized failed traceroute is truncated relative to the
/// target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakpoint {
    AtTargetAs,
    BeforeTargetAs,
}

/// Which blocks (or observer homes) an injection hits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VictimSelector {
    #[serde(default)]
    pub blocks: Vec<BlockId>,
    #[serde(default)]
    pub ranges: Vec<BlockRange>,
    /// Victims named by the observers living on them.
    #[serde(default)]
    pub vps: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    pub first: BlockId,
    pub count: u32,
}

impl BlockRange {
    pub fn blocks(&self) -> Result<Vec<BlockId>> {
        (0..self.count).map(|i| self.first.offset(i)).collect()
    }
}

/// The observers a peninsula severs the victims from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeveredFrom {
    #[serde(default)]
    pub vps: Vec<String>,
    #[serde(default)]
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    Peninsula,
    Island,
    Outage,
    CountryFilter,
}

/// One injected fault, applied at `start` for `duration_s` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSpec {
    pub kind: InjectionKind,
    pub victims: VictimSelector,
    #[serde(default)]
    pub severed_from: SeveredFrom,
    /// For country_filter: victims stay reachable only from this country.
    #[serde(default)]
    pub country: Option<String>,
    pub start: i64,
    pub duration_s: i64,
    /// Default truncation point for failed traceroutes synthesized against
    /// this injection; campaign mixes override it.
    #[serde(default)]
    pub breakpoint: Option<Breakpoint>,
}

/// A batch of synthesized traceroutes from a named observer group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracerouteCampaign {
    /// Observer group issuing the traces (see `vp_groups`), or...
    #[serde(default)]
    pub group: Option<String>,
    /// ...an explicit list of observer ids.
    #[serde(default)]
    pub vps: Vec<String>,
    #[serde(default = "one")]
    pub per_vp: u32,
    pub time: i64,
    pub targets: VictimSelector,
    /// Outcome quotas for traces whose (observer, target) pair is severed:
    /// exact counts are assigned by largest remainder in trace order.
    #[serde(default)]
    pub mix: Option<TraceMix>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMix {
    #[serde(default)]
    pub at_target_as: f64,
    #[serde(default)]
    pub before_target_as: f64,
    #[serde(default)]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesConfig {
    #[serde(default)]
    pub blocks: Vec<BlockId>,
    #[serde(default)]
    pub ranges: Vec<BlockRange>,
    #[serde(default)]
    pub inactive: Vec<BlockId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgesConfig {
    /// `{"mesh": true}`: full mesh over all nodes.
    Mesh(bool),
    /// `{"explicit": [["10.0.0.0/24", "10.0.1.0/24"], ...]}`.
    Explicit(Vec<(BlockId, BlockId)>),
}

impl Default for EdgesConfig {
    fn default() -> Self {
        EdgesConfig::Mesh(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpConfig {
    pub vp_id: String,
    #[serde(default)]
    pub country: Option<String>,
    /// Home block; omitted means auto-placement on a free block.
    #[serde(default)]
    pub block: Option<BlockId>,
    #[serde(default)]
    pub probing: Option<ProbingAssignment>,
}

/// Per-observer probing: the scenario default, a custom model, or none at
/// all (the observer only appears in traceroute campaigns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbingAssignment {
    Named(ProbingName),
    Model(ProbingModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbingName {
    Default,
    None,
    Trinocular,
    Atlas,
    Ark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpGroupConfig {
    pub name: String,
    pub count: u32,
    #[serde(default)]
    pub country: Option<String>,
    pub first_block: BlockId,
    #[serde(default)]
    pub probing: Option<ProbingAssignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbingConfig {
    #[serde(default)]
    pub default: Option<ProbingModel>,
    /// Keyed by observer id or group name.
    #[serde(default)]
    pub overrides: BTreeMap<String, ProbingAssignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedPrefixEntry {
    pub prefix: Prefix,
    pub asn: u32,
}

/// The scenario configuration document (also the fixture format): node and
/// edge sections, timed deltas (the injections), observer placements, and
/// simulator options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub binning: Option<BinningConfig>,
    pub start: i64,
    pub horizon_s: i64,
    pub nodes: NodesConfig,
    #[serde(default)]
    pub edges: EdgesConfig,
    #[serde(default)]
    pub prefixes: Vec<RoutedPrefixEntry>,
    #[serde(default)]
    pub vps: Vec<VpConfig>,
    #[serde(default)]
    pub vp_groups: Vec<VpGroupConfig>,
    #[serde(default)]
    pub probing: ProbingConfig,
    #[serde(default, alias = "injections")]
    pub deltas: Vec<InjectionSpec>,
    #[serde(default)]
    pub traceroutes: Vec<TracerouteCampaign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningConfig {
    #[serde(default = "default_window")]
    pub window_s: i64,
    #[serde(default)]
    pub epoch: i64,
}

fn default_window() -> i64 {
    660
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A placed observer with its resolved probing model.
#[derive(Debug, Clone)]
pub struct PlacedVp {
    pub vp: VantagePoint,
    pub group: Option<String>,
    pub probing: Option<ProbingModel>,
}

impl PlacedVp {
    pub fn home(&self) -> BlockId {
        self.vp
            .home_block
            .expect("placed observers always have a home block")
    }
}

/// An injection with every reference resolved to blocks.
#[derive(Debug, Clone)]
pub struct ResolvedInjection {
    pub kind: InjectionKind,
    pub victims: Vec<BlockId>,
    /// Home blocks of the observers severed from the victims (peninsula and
    /// country_filter kinds).
    pub severed_homes: Vec<BlockId>,
    pub start: i64,
    pub end: i64,
    pub breakpoint: Option<Breakpoint>,
}

/// A fully compiled simulation: the ground-truth scenario plus sampling and
/// campaign options.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub name: String,
    pub binning: TimeBinning,
    pub start: i64,
    pub horizon_s: i64,
    pub scenario: Scenario,
    pub vps: Vec<PlacedVp>,
    pub prefixes: Vec<RoutedPrefixEntry>,
    pub injections: Vec<ResolvedInjection>,
    pub campaigns: Vec<TracerouteCampaign>,
}

impl SimSpec {
    pub fn placed(&self, vp_id: &str) -> Option<&PlacedVp> {
        self.vps.iter().find(|p| p.vp.vp_id == vp_id)
    }

    /// Longest routed prefix covering a block, with its origin ASN.
    pub fn origin_of(&self, block: BlockId) -> Option<RoutedPrefixEntry> {
        self.prefixes
            .iter()
            .filter(|e| e.prefix.covers_block(block))
            .max_by_key(|e| e.prefix.length())
            .copied()
    }
}

fn resolve_selector(
    sel: &VictimSelector,
    vp_homes: &BTreeMap<String, BlockId>,
) -> Result<Vec<BlockId>> {
    let mut out = Vec::new();
    out.extend(sel.blocks.iter().copied());
    for r in &sel.ranges {
        out.extend(r.blocks()?);
    }
    for vp in &sel.vps {
        let home = vp_homes
            .get(vp)
            .ok_or_else(|| Error::config(format!("victim selector names unknown observer {vp}")))?;
        out.push(*home);
    }
    if out.is_empty() {
        return Err(Error::config("victim selector matches no blocks"));
    }
    Ok(out)
}

/// Compile a configuration into a runnable simulation. Deterministic for a
/// fixed (config, seed); the seed only drives auto-placement of observers
/// that did not pin a home block.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<SimSpec> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let binning = match &config.binning {
        Some(b) => TimeBinning::new(b.window_s, b.epoch)?,
        None => TimeBinning::default(),
    };
    if config.horizon_s <= 0 {
        return Err(Error::config("horizon_s must be positive"));
    }

    // Collect nodes: explicit blocks, ranges, then observer homes.
    let mut blocks: Vec<BlockId> = Vec::new();
    let mut seen: BTreeSet<BlockId> = BTreeSet::new();
    let push = |b: BlockId, blocks: &mut Vec<BlockId>, seen: &mut BTreeSet<BlockId>| {
        if seen.insert(b) {
            blocks.push(b);
        }
    };
    for b in &config.nodes.blocks {
        push(*b, &mut blocks, &mut seen);
    }
    for r in &config.nodes.ranges {
        for b in r.blocks()? {
            push(b, &mut blocks, &mut seen);
        }
    }
    for vp in &config.vps {
        if let Some(b) = vp.block {
            push(b, &mut blocks, &mut seen);
        }
    }
    let mut group_homes: BTreeMap<String, Vec<BlockId>> = BTreeMap::new();
    for g in &config.vp_groups {
        let homes: Vec<BlockId> = (0..g.count)
            .map(|i| g.first_block.offset(i))
            .collect::<Result<_>>()?;
        for b in &homes {
            push(*b, &mut blocks, &mut seen);
        }
        group_homes.insert(g.name.clone(), homes);
    }
    if blocks.is_empty() {
        return Err(Error::config("scenario has no blocks"));
    }

    // Auto-place observers without a pinned home on distinct free blocks.
    let mut taken: BTreeSet<BlockId> = config.vps.iter().filter_map(|v| v.block).collect();
    for homes in group_homes.values() {
        taken.extend(homes.iter().copied());
    }
    let mut free: Vec<BlockId> = blocks
        .iter()
        .filter(|b| !taken.contains(b))
        .copied()
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    free.shuffle(&mut rng);

    let resolve_probing = |assignment: Option<&ProbingAssignment>| -> Result<Option<ProbingModel>> {
        let model = match assignment {
            None | Some(ProbingAssignment::Named(ProbingName::Default)) => Some(
                config
                    .probing
                    .default
                    .unwrap_or_else(ProbingModel::trinocular),
            ),
            Some(ProbingAssignment::Named(ProbingName::None)) => None,
            Some(ProbingAssignment::Named(ProbingName::Trinocular)) => {
                Some(ProbingModel::trinocular())
            }
            Some(ProbingAssignment::Named(ProbingName::Atlas)) => Some(ProbingModel::atlas()),
            Some(ProbingAssignment::Named(ProbingName::Ark)) => Some(ProbingModel::ark()),
            Some(ProbingAssignment::Model(m)) => Some(*m),
        };
        if let Some(m) = &model {
            m.validate()?;
        }
        Ok(model)
    };

    let mut vps: Vec<PlacedVp> = Vec::new();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    for v in &config.vps {
        if !ids.insert(v.vp_id.clone()) {
            return Err(Error::config(format!("duplicate observer id {}", v.vp_id)));
        }
        let home = match v.block {
            Some(b) => b,
            None => free
                .pop()
                .ok_or_else(|| Error::config("not enough free blocks to place observers"))?,
        };
        let assignment = v
            .probing
            .clone()
            .or_else(|| config.probing.overrides.get(&v.vp_id).cloned());
        vps.push(PlacedVp {
            vp: VantagePoint {
                vp_id: v.vp_id.clone(),
                country: v.country.clone(),
                home_block: Some(home),
            },
            group: None,
            probing: resolve_probing(assignment.as_ref())?,
        });
    }
    for g in &config.vp_groups {
        let assignment = g
            .probing
            .clone()
            .or_else(|| config.probing.overrides.get(&g.name).cloned());
        let probing = resolve_probing(assignment.as_ref())?;
        for (i, home) in group_homes[&g.name].iter().enumerate() {
            let vp_id = format!("{}-{:03}", g.name, i);
            if !ids.insert(vp_id.clone()) {
                return Err(Error::config(format!("duplicate observer id {vp_id}")));
            }
            vps.push(PlacedVp {
                vp: VantagePoint {
                    vp_id,
                    country: g.country.clone(),
                    home_block: Some(home.to_owned()),
                },
                group: Some(g.name.clone()),
                probing,
            });
        }
    }

    let vp_homes: BTreeMap<String, BlockId> =
        vps.iter().map(|p| (p.vp.vp_id.clone(), p.home())).collect();

    // Resolve injections.
    let mut injections = Vec::new();
    for inj in &config.deltas {
        if inj.duration_s <= 0 {
            return Err(Error::config("injection duration must be positive"));
        }
        let victims = resolve_selector(&inj.victims, &vp_homes)?;
        for v in &victims {
            if !seen.contains(v) {
                return Err(Error::config(format!(
                    "injection victim {v} is not a scenario block"
                )));
            }
        }
        let severed_homes: Vec<BlockId> = match inj.kind {
            InjectionKind::Peninsula => {
                let mut homes = Vec::new();
                for vp in &inj.severed_from.vps {
                    homes.push(*vp_homes.get(vp).ok_or_else(|| {
                        Error::config(format!("severed_from names unknown observer {vp}"))
                    })?);
                }
                for gname in &inj.severed_from.groups {
                    let members = group_homes.get(gname).ok_or_else(|| {
                        Error::config(format!("severed_from names unknown group {gname}"))
                    })?;
                    homes.extend(members.iter().copied());
                }
                if homes.is_empty() {
                    return Err(Error::config("peninsula injection severs no observers"));
                }
                let severed: BTreeSet<BlockId> = homes.iter().copied().collect();
                if !vps.iter().any(|p| !severed.contains(&p.home())) {
                    return Err(Error::config(
                        "peninsula injection leaves no reachable observer; that is an outage",
                    ));
                }
                homes
            }
            InjectionKind::CountryFilter => {
                let country = inj
                    .country
                    .as_deref()
                    .ok_or_else(|| Error::config("country_filter injection needs a country"))?;
                vps.iter()
                    .filter(|p| p.vp.country.as_deref() != Some(country))
                    .map(|p| p.home())
                    .collect()
            }
            InjectionKind::Island | InjectionKind::Outage => Vec::new(),
        };
        injections.push(ResolvedInjection {
            kind: inj.kind,
            victims,
            severed_homes,
            start: inj.start,
            end: inj.start + inj.duration_s,
            breakpoint: inj.breakpoint,
        });
    }

    // Base graph and oracle deltas.
    let inactive: BTreeSet<BlockId> = config.nodes.inactive.iter().copied().collect();
    let nodes: Vec<crate::oracle::Node> = blocks
        .iter()
        .map(|b| {
            let origin = config
                .prefixes
                .iter()
                .filter(|e| e.prefix.covers_block(*b))
                .max_by_key(|e| e.prefix.length());
            crate::oracle::Node {
                block: *b,
                active: !inactive.contains(b),
                asn: origin.map(|e| e.asn),
                prefix: origin.map(|e| e.prefix),
            }
        })
        .collect();
    let base = match &config.edges {
        EdgesConfig::Mesh(true) => ReachabilityGraph::full_mesh(nodes)?,
        EdgesConfig::Mesh(false) => ReachabilityGraph::explicit(nodes, &[])?,
        EdgesConfig::Explicit(pairs) => ReachabilityGraph::explicit(nodes, pairs)?,
    };
    let deltas: Vec<Delta> = injections
        .iter()
        .map(|inj| Delta {
            start: inj.start,
            end: inj.end,
            change: match inj.kind {
                InjectionKind::Peninsula | InjectionKind::CountryFilter => TopologyChange::Sever(
                    inj.victims
                        .iter()
                        .flat_map(|v| inj.severed_homes.iter().map(move |h| (*v, *h)))
                        .collect(),
                ),
                InjectionKind::Island => TopologyChange::Isolate(inj.victims.clone()),
                InjectionKind::Outage => TopologyChange::Deactivate(inj.victims.clone()),
            },
        })
        .collect();
    let placement: BTreeMap<String, BlockId> = vp_homes.clone();
    let scenario = Scenario::new(base, deltas, placement)?;

    for campaign in &config.traceroutes {
        if campaign.group.is_none() && campaign.vps.is_empty() {
            return Err(Error::config("traceroute campaign names no observers"));
        }
        if let Some(g) = &campaign.group {
            if !group_homes.contains_key(g) {
                return Err(Error::config(format!(
                    "traceroute campaign names unknown group {g}"
                )));
            }
        }
        for vp in &campaign.vps {
            if !vp_homes.contains_key(vp) {
                return Err(Error::config(format!(
                    "traceroute campaign names unknown observer {vp}"
                )));
            }
        }
        resolve_selector(&campaign.targets, &vp_homes)?;
    }

    Ok(SimSpec {
        name: config.name.clone(),
        binning,
        start: config.start,
        horizon_s: config.horizon_s,
        scenario,
        vps,
        prefixes: config.prefixes.clone(),
        injections,
        campaigns: config.traceroutes.clone(),
    })
}

/// Split a total into integer quotas proportional to `weights`, by largest
/// remainder; ties resolve in field order.
pub(crate) fn quotas(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || total == 0 {
        let mut q = vec![0; weights.len()];
        if let Some(first) = q.first_mut() {
            *first = total;
        }
        return q;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = q.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for i in 0..total - assigned {
        q[order[i % order.len()]] += 1;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn mesh_config(n: u32, vps: &[(&str, u32)]) -> ScenarioConfig {
        ScenarioConfig {
            name: "test".into(),
            binning: None,
            start: 0,
            horizon_s: 6 * 660,
            nodes: NodesConfig {
                blocks: vec![],
                ranges: vec![BlockRange {
                    first: BlockId::new(0x0a0000).unwrap(),
                    count: n,
                }],
                inactive: vec![],
            },
            edges: EdgesConfig::default(),
            prefixes: vec![],
            vps: vps
                .iter()
                .map(|(id, b)| VpConfig {
                    vp_id: id.to_string(),
                    country: None,
                    block: Some(BlockId::new(0x0a0000 + b).unwrap()),
                    probing: None,
                })
                .collect(),
            vp_groups: vec![],
            probing: ProbingConfig::default(),
            deltas: vec![],
            traceroutes: vec![],
        }
    }

    #[test]
    fn mesh_scenario_all_corefull() {
        let config = mesh_config(100, &[("A", 0), ("B", 1)]);
        let spec = generate_scenario(&config, 1).unwrap();
        for t in [0i64, 1000, 3000] {
            let g = spec.scenario.graph_at(t).unwrap();
            let labels = oracle::truth_labels(&g);
            assert!(labels
                .labels
                .iter()
                .all(|&l| l == oracle::TruthLabel::CoreFull));
        }
    }

    #[test]
    fn peninsula_injection_labels() {
        let mut config = mesh_config(100, &[("A", 0), ("B", 1), ("C", 2)]);
        let victim = BlockId::new(0x0a0000 + 50).unwrap();
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::Peninsula,
            victims: VictimSelector {
                blocks: vec![victim],
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom {
                vps: vec!["B".into(), "C".into()],
                groups: vec![],
            },
            country: None,
            start: 660,
            duration_s: 2 * 660,
            breakpoint: None,
        });
        let spec = generate_scenario(&config, 1).unwrap();
        let g = spec.scenario.graph_at(660).unwrap();
        let labels = oracle::truth_labels(&g);
        let vi = g.node_idx(victim).unwrap();
        assert_eq!(labels.label_of(vi), oracle::TruthLabel::Peninsula);
        let g = spec.scenario.graph_at(659).unwrap();
        assert_eq!(
            oracle::truth_labels(&g).label_of(vi),
            oracle::TruthLabel::CoreFull
        );
    }

    #[test]
    fn country_filter_injection_end_to_end() {
        use crate::detect::{country_detect, Quarantine, RoundTable};

        let mut config = mesh_config(20, &[("us1", 0), ("us2", 1), ("de1", 2), ("jp1", 3)]);
        for (vp, country) in config.vps.iter_mut().zip(["US", "US", "DE", "JP"]) {
            vp.country = Some(country.to_string());
        }
        config.probing.default = Some(ProbingModel::lossless(660));
        let victims = vec![
            BlockId::new(0x0a0000 + 10).unwrap(),
            BlockId::new(0x0a0000 + 11).unwrap(),
        ];
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::CountryFilter,
            victims: VictimSelector {
                blocks: victims.clone(),
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom::default(),
            country: Some("US".into()),
            start: 2 * 660,
            duration_s: 3 * 660,
            breakpoint: None,
        });
        let spec = generate_scenario(&config, 6).unwrap();
        // only the foreign observers lose their edges to the victims
        assert_eq!(spec.injections[0].severed_homes.len(), 2);

        let stream = crate::sim::sample_stream(&spec, 6).unwrap();
        let table = RoundTable::from_rows(&stream.rows, &stream.vp_ids, spec.binning).unwrap();
        let countries: BTreeMap<String, Option<String>> = spec
            .vps
            .iter()
            .map(|p| (p.vp.vp_id.clone(), p.vp.country.clone()))
            .collect();
        let detection = country_detect(&table, &countries, &Quarantine::none());
        assert_eq!(detection.events.len(), 2);
        for ev in &detection.events {
            assert!(victims.contains(&ev.block));
            assert_eq!(ev.country, "US");
            assert_eq!((ev.start_round, ev.end_round), (2, 4));
        }
        assert!(detection.singleton_events.is_empty());
    }

    #[test]
    fn island_injection_labels() {
        let mut config = mesh_config(50, &[("A", 0), ("B", 1), ("C", 2)]);
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::Island,
            victims: VictimSelector {
                blocks: vec![],
                ranges: vec![],
                vps: vec!["C".into()],
            },
            severed_from: SeveredFrom::default(),
            country: None,
            start: 0,
            duration_s: 660,
            breakpoint: None,
        });
        let spec = generate_scenario(&config, 1).unwrap();
        let g = spec.scenario.graph_at(0).unwrap();
        let ci = g.node_idx(BlockId::new(0x0a0002).unwrap()).unwrap();
        assert_eq!(
            oracle::truth_labels(&g).label_of(ci),
            oracle::TruthLabel::AddressIsland
        );
    }

    #[test]
    fn peninsula_must_leave_a_survivor() {
        let mut config = mesh_config(10, &[("A", 0), ("B", 1)]);
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::Peninsula,
            victims: VictimSelector {
                blocks: vec![BlockId::new(0x0a0005).unwrap()],
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom {
                vps: vec!["A".into(), "B".into()],
                groups: vec![],
            },
            country: None,
            start: 0,
            duration_s: 660,
            breakpoint: None,
        });
        assert!(generate_scenario(&config, 1).is_err());
    }

    #[test]
    fn unknown_references_are_config_errors() {
        let mut config = mesh_config(10, &[("A", 0)]);
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::Outage,
            victims: VictimSelector {
                blocks: vec![BlockId::new(0xffff00).unwrap()],
                ranges: vec![],
                vps: vec![],
            },
            severed_from: SeveredFrom::default(),
            country: None,
            start: 0,
            duration_s: 660,
            breakpoint: None,
        });
        assert!(generate_scenario(&config, 1).is_err());

        let mut config = mesh_config(10, &[("A", 0)]);
        config.deltas.push(InjectionSpec {
            kind: InjectionKind::Island,
            victims: VictimSelector {
                blocks: vec![],
                ranges: vec![],
                vps: vec!["Z".into()],
            },
            severed_from: SeveredFrom::default(),
            country: None,
            start: 0,
            duration_s: 660,
            breakpoint: None,
        });
        assert!(generate_scenario(&config, 1).is_err());
    }

    #[test]
    fn auto_placement_is_seeded_and_distinct() {
        let mut config = mesh_config(20, &[]);
        for i in 0..5 {
            config.vps.push(VpConfig {
                vp_id: format!("vp{i}"),
                country: None,
                block: None,
                probing: None,
            });
        }
        let a = generate_scenario(&config, 42).unwrap();
        let b = generate_scenario(&config, 42).unwrap();
        let homes_a: Vec<BlockId> = a.vps.iter().map(|p| p.home()).collect();
        let homes_b: Vec<BlockId> = b.vps.iter().map(|p| p.home()).collect();
        assert_eq!(homes_a, homes_b);
        let uniq: BTreeSet<BlockId> = homes_a.iter().copied().collect();
        assert_eq!(uniq.len(), homes_a.len());
        let c = generate_scenario(&config, 43).unwrap();
        let homes_c: Vec<BlockId> = c.vps.iter().map(|p| p.home()).collect();
        assert_ne!(homes_a, homes_c);
    }

    #[test]
    fn quota_assignment_is_exact() {
        assert_eq!(quotas(&[21.0, 68.0, 5.0], 94), vec![21, 68, 5]);
        assert_eq!(quotas(&[1.0, 1.0], 3), vec![2, 1]);
        assert_eq!(quotas(&[0.0, 0.0], 4), vec![4, 0]);
        assert_eq!(quotas(&[1.0, 2.0, 3.0], 0), vec![0, 0, 0]);
        let q = quotas(&[0.22, 0.73, 0.05], 200);
        assert_eq!(q.iter().sum::<usize>(), 200);
    }
}
