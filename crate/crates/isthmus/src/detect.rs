//! The detection algorithms: Taitao (peninsulas), Chiloe (islands, dense and
//! sparse variants), and country-level peninsulas.
//!
//! Taitao flags a block in a round when the valid observations disagree:
//! `0 < |up| < |observed|`. Chiloe flags an observer as islanded in a round
//! when it sees half or more of the observable world as down:
//! `0 <= |up blocks| < |down blocks|`.
//!
//! Both run as pure folds over a `RoundTable`, so evaluation order never
//! changes the result. Island detection runs first; rounds in which an
//! observer is islanded have that observer's outbound observations
//! quarantined away from Taitao input, so connectivity problems near an
//! observer do not reflect on the intended destinations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockId, Observation, ObservationState, RoundClass, RoundKind, TimeBinning};

/// Maps vantage-point ids to dense indices so round state fits in a u64 mask.
#[derive(Debug, Clone, Default)]
pub struct VpRegistry {
    ids: Vec<String>,
    index: HashMap<String, u16>,
}

impl VpRegistry {
    pub fn from_ids<I: IntoIterator<Item = String>>(ids: I) -> Result<Self> {
        let mut uniq: Vec<String> = ids.into_iter().collect();
        uniq.sort();
        uniq.dedup();
        if uniq.len() > 64 {
            return Err(Error::data(format!(
                "at most 64 vantage points per round table, got {}",
                uniq.len()
            )));
        }
        let index = uniq
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u16))
            .collect();
        Ok(VpRegistry { ids: uniq, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: u16) -> &str {
        &self.ids[idx as usize]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn idx(&self, id: &str) -> Option<u16> {
        self.index.get(id).copied()
    }

    /// Vantage-point ids named by the set bits of `mask`, sorted.
    pub fn mask_ids(&self, mask: u64) -> BTreeSet<String> {
        (0..self.ids.len() as u16)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.ids[i as usize].clone())
            .collect()
    }

    pub fn full_mask(&self) -> u64 {
        if self.ids.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.ids.len()) - 1
        }
    }
}

/// Collapsed per-(block, round) observation state: which observers had valid
/// observations, and which of those saw the block up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundCell {
    pub block: BlockId,
    pub round: i64,
    pub up: u64,
    pub observed: u64,
}

impl RoundCell {
    pub fn kind(&self) -> RoundKind {
        kind_of(self.up, self.observed)
    }

    /// The cell as seen by a subset of the observers.
    pub fn restricted(&self, subset: u64) -> RoundCell {
        RoundCell {
            up: self.up & subset,
            observed: self.observed & subset,
            ..*self
        }
    }
}

pub fn kind_of(up: u64, observed: u64) -> RoundKind {
    if observed == 0 {
        RoundKind::Unmeasured
    } else if up == 0 {
        RoundKind::AllDown
    } else if up == observed {
        RoundKind::AllUp
    } else {
        RoundKind::Disagreement
    }
}

/// All observations of a dataset, binned and collapsed. Cells are sorted by
/// (block, round).
#[derive(Debug, Clone)]
pub struct RoundTable {
    pub vps: VpRegistry,
    pub cells: Vec<RoundCell>,
    /// Same-round duplicates where one observer reported both up and down;
    /// up wins, but each occurrence is recorded here.
    pub duplicate_conflicts: usize,
}

impl RoundTable {
    pub fn build(observations: &[Observation], binning: TimeBinning) -> Result<Self> {
        let vps = VpRegistry::from_ids(observations.iter().map(|o| o.vp.clone()))?;
        // (block, round, vp) -> up?/down? seen
        let mut keyed: Vec<(u32, i64, u16, bool)> = Vec::with_capacity(observations.len());
        for o in observations {
            if o.state == ObservationState::Unmeasured {
                continue; // never counts toward the valid-observation set
            }
            let vp = vps.idx(&o.vp).expect("registry covers all observation vps");
            keyed.push((
                o.block.prefix24(),
                binning.bin_time(o.time),
                vp,
                o.state == ObservationState::Up,
            ));
        }
        Ok(RoundTable::collapse(keyed, vps))
    }

    /// Build from compact sampler rows; `vp_ids` is indexed by row vp slots.
    pub fn from_rows(
        rows: &[crate::sim::SampleRow],
        vp_ids: &[String],
        binning: TimeBinning,
    ) -> Result<Self> {
        let present: Vec<bool> = {
            let mut seen = vec![false; vp_ids.len()];
            for r in rows {
                seen[r.vp as usize] = true;
            }
            seen
        };
        let vps = VpRegistry::from_ids(
            vp_ids
                .iter()
                .enumerate()
                .filter(|(i, _)| present[*i])
                .map(|(_, id)| id.clone()),
        )?;
        let remap: Vec<u16> = vp_ids
            .iter()
            .map(|id| vps.idx(id).unwrap_or(u16::MAX))
            .collect();
        let keyed: Vec<(u32, i64, u16, bool)> = rows
            .iter()
            .map(|r| {
                (
                    r.block,
                    binning.bin_time(r.time),
                    remap[r.vp as usize],
                    r.up,
                )
            })
            .collect();
        Ok(RoundTable::collapse(keyed, vps))
    }

    fn collapse(mut keyed: Vec<(u32, i64, u16, bool)>, vps: VpRegistry) -> Self {
        keyed.sort_unstable();
        let mut cells: Vec<RoundCell> = Vec::new();
        let mut conflicts = 0usize;
        let mut i = 0;
        while i < keyed.len() {
            let (block, round, _, _) = keyed[i];
            let mut up = 0u64;
            let mut down = 0u64;
            while i < keyed.len() && keyed[i].0 == block && keyed[i].1 == round {
                let (_, _, vp, is_up) = keyed[i];
                if is_up {
                    up |= 1 << vp;
                } else {
                    down |= 1 << vp;
                }
                i += 1;
            }
            conflicts += (up & down).count_ones() as usize; // up wins
            cells.push(RoundCell {
                block: BlockId::new(block).expect("prefix24 already validated"),
                round,
                up,
                observed: up | down,
            });
        }
        RoundTable {
            vps,
            cells,
            duplicate_conflicts: conflicts,
        }
    }

    /// Cells grouped per block (cells are already block-major).
    pub fn blocks(&self) -> impl Iterator<Item = &[RoundCell]> {
        BlockRuns { cells: &self.cells }
    }

    pub fn round_class(&self, cell: &RoundCell) -> RoundClass {
        RoundClass::new(self.vps.mask_ids(cell.up), self.vps.mask_ids(cell.observed))
            .expect("up mask is a subset of observed mask")
    }
}

struct BlockRuns<'a> {
    cells: &'a [RoundCell],
}

impl<'a> Iterator for BlockRuns<'a> {
    type Item = &'a [RoundCell];

    fn next(&mut self) -> Option<&'a [RoundCell]> {
        let first = self.cells.first()?;
        let end = self
            .cells
            .iter()
            .position(|c| c.block != first.block)
            .unwrap_or(self.cells.len());
        let (head, tail) = self.cells.split_at(end);
        self.cells = tail;
        Some(head)
    }
}

/// Classify one round of observations for one block. The caller guarantees
/// the slice shares a block and a round. Conflicting duplicate states for
/// one observer collapse to up; the second element counts those conflicts.
pub fn taitao_classify(observations: &[Observation]) -> Result<(RoundClass, usize)> {
    if let Some(first) = observations.first() {
        if observations.iter().any(|o| o.block != first.block) {
            return Err(Error::data(
                "taitao_classify: observations span multiple blocks",
            ));
        }
    }
    let mut up: BTreeSet<String> = BTreeSet::new();
    let mut down: BTreeSet<String> = BTreeSet::new();
    for o in observations {
        match o.state {
            ObservationState::Up => {
                up.insert(o.vp.clone());
            }
            ObservationState::Down => {
                down.insert(o.vp.clone());
            }
            ObservationState::Unmeasured => {}
        }
    }
    let conflicts = up.intersection(&down).count();
    let observed: BTreeSet<String> = up.union(&down).cloned().collect();
    Ok((RoundClass::new(up, observed)?, conflicts))
}

/// A coalesced run of disagreement rounds for one block with a stable up-set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeninsulaEvent {
    pub block: BlockId,
    pub start_round: i64,
    /// Inclusive.
    pub end_round: i64,
    pub up_set: BTreeSet<String>,
    /// Union of the valid observers over the event's rounds.
    pub observed_set: BTreeSet<String>,
}

impl PeninsulaEvent {
    pub fn rounds(&self) -> i64 {
        self.end_round - self.start_round + 1
    }
}

/// Rounds each observer spends island-flagged, keyed by round. Observations
/// from these (observer, round) pairs are excluded from Taitao input.
#[derive(Debug, Clone, Default)]
pub struct Quarantine {
    by_round: HashMap<i64, u64>,
}

impl Quarantine {
    pub fn none() -> Self {
        Quarantine::default()
    }

    pub fn from_island_events(events: &[IslandEvent], vps: &VpRegistry) -> Self {
        let mut by_round: HashMap<i64, u64> = HashMap::new();
        for ev in events {
            if let Some(vp) = vps.idx(&ev.vp) {
                for round in ev.start_round..=ev.end_round {
                    *by_round.entry(round).or_insert(0) |= 1 << vp;
                }
            }
        }
        Quarantine { by_round }
    }

    pub fn mask(&self, round: i64) -> u64 {
        self.by_round.get(&round).copied().unwrap_or(0)
    }

    pub fn vp_rounds(&self) -> usize {
        self.by_round
            .values()
            .map(|m| m.count_ones() as usize)
            .sum()
    }
}

/// Coalesce classified rounds for one block into peninsula events: maximal
/// runs of consecutive disagreement rounds with an identical up-set. Any
/// change of up-set, gap in rounds, or other class closes the event.
pub fn taitao_events(
    block_cells: &[RoundCell],
    vps: &VpRegistry,
    quarantine: &Quarantine,
) -> Vec<PeninsulaEvent> {
    let mut events = Vec::new();
    let mut open: Option<(i64, i64, u64, u64)> = None; // start, end, up, observed-union
    for cell in block_cells {
        let q = quarantine.mask(cell.round);
        let cell = cell.restricted(!q);
        let disagg = cell.kind() == RoundKind::Disagreement;
        open = match open {
            Some((start, end, up, obs)) if disagg && cell.round == end + 1 && cell.up == up => {
                Some((start, cell.round, up, obs | cell.observed))
            }
            Some((start, end, up, obs)) => {
                events.push(make_event(block_cells[0].block, start, end, up, obs, vps));
                disagg.then_some((cell.round, cell.round, cell.up, cell.observed))
            }
            None => disagg.then_some((cell.round, cell.round, cell.up, cell.observed)),
        };
    }
    if let Some((start, end, up, obs)) = open {
        events.push(make_event(block_cells[0].block, start, end, up, obs, vps));
    }
    events
}

fn make_event(
    block: BlockId,
    start: i64,
    end: i64,
    up: u64,
    observed: u64,
    vps: &VpRegistry,
) -> PeninsulaEvent {
    PeninsulaEvent {
        block,
        start_round: start,
        end_round: end,
        up_set: vps.mask_ids(up),
        observed_set: vps.mask_ids(observed),
    }
}

/// Run Taitao over a whole table: events ordered by block then start.
pub fn taitao_detect(table: &RoundTable, quarantine: &Quarantine) -> Vec<PeninsulaEvent> {
    let mut events = Vec::new();
    for block_cells in table.blocks() {
        events.extend(taitao_events(block_cells, &table.vps, quarantine));
    }
    events
}

/// Per-round reachable/unreachable block counts for one observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundCount {
    pub round: i64,
    pub up: u64,
    pub down: u64,
}

impl RoundCount {
    pub fn reachable_fraction(&self) -> f64 {
        self.up as f64 / (self.up + self.down) as f64
    }
}

/// A coalesced island event for one observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandEvent {
    pub vp: String,
    pub start_round: i64,
    /// Inclusive.
    pub end_round: i64,
    pub min_reachable_fraction: f64,
    /// Some round in the event had zero reachable blocks.
    pub address_island: bool,
}

impl IslandEvent {
    pub fn rounds(&self) -> i64 {
        self.end_round - self.start_round + 1
    }
}

/// Chiloe output: accepted islands plus flagged runs that were demoted to
/// suspected peninsulas because they persisted without the reachable
/// fraction collapsing toward zero.
#[derive(Debug, Clone, Default)]
pub struct ChiloeOutcome {
    pub islands: Vec<IslandEvent>,
    pub demoted: Vec<IslandEvent>,
}

/// Island detection for one observer. Rounds satisfying `up < down` are
/// flagged and consecutive flagged rounds coalesce into one event. Events
/// longer than one round must additionally have their minimum reachable
/// fraction within `address_island_eps`, otherwise the event is demoted to a
/// suspected peninsula. Rounds with zero observed blocks are skipped.
pub fn chiloe(vp: &str, counts: &[RoundCount], address_island_eps: f64) -> ChiloeOutcome {
    let mut out = ChiloeOutcome::default();
    let mut open: Option<(i64, i64, f64, bool)> = None;
    let close = |ev: (i64, i64, f64, bool), out: &mut ChiloeOutcome| {
        let (start, end, min_frac, addr) = ev;
        let event = IslandEvent {
            vp: vp.to_string(),
            start_round: start,
            end_round: end,
            min_reachable_fraction: min_frac,
            address_island: addr,
        };
        if end > start && min_frac > address_island_eps {
            out.demoted.push(event);
        } else {
            out.islands.push(event);
        }
    };
    for c in counts {
        if c.up + c.down == 0 {
            continue; // skipped, not flagged; also breaks any open run
        }
        let flagged = c.up < c.down;
        let frac = c.reachable_fraction();
        open = match open {
            Some((start, end, min_frac, addr)) if flagged && c.round == end + 1 => {
                Some((start, c.round, min_frac.min(frac), addr || c.up == 0))
            }
            Some(ev) => {
                close(ev, &mut out);
                flagged.then_some((c.round, c.round, frac, c.up == 0))
            }
            None => flagged.then_some((c.round, c.round, frac, c.up == 0)),
        };
    }
    if let Some(ev) = open {
        close(ev, &mut out);
    }
    out
}

/// Derive per-observer round counts from a round table, excluding each
/// observer's own home block so that a host reaching only itself scores a
/// reachable fraction of zero.
pub fn vp_round_counts(
    table: &RoundTable,
    home_blocks: &BTreeMap<String, BlockId>,
) -> BTreeMap<String, Vec<RoundCount>> {
    let mut homes: HashMap<u16, BlockId> = HashMap::new();
    for (vp, block) in home_blocks {
        if let Some(idx) = table.vps.idx(vp) {
            homes.insert(idx, *block);
        }
    }
    let mut acc: BTreeMap<(u16, i64), (u64, u64)> = BTreeMap::new();
    for cell in &table.cells {
        let mut m = cell.observed;
        while m != 0 {
            let vp = m.trailing_zeros() as u16;
            m &= m - 1;
            if homes.get(&vp) == Some(&cell.block) {
                continue;
            }
            let slot = acc.entry((vp, cell.round)).or_insert((0, 0));
            if cell.up & (1 << vp) != 0 {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
        }
    }
    let mut out: BTreeMap<String, Vec<RoundCount>> = BTreeMap::new();
    for ((vp, round), (up, down)) in acc {
        out.entry(table.vps.id(vp).to_string())
            .or_default()
            .push(RoundCount { round, up, down });
    }
    out
}

/// Run Chiloe for every observer in the table.
pub fn chiloe_detect(
    table: &RoundTable,
    home_blocks: &BTreeMap<String, BlockId>,
    address_island_eps: f64,
) -> ChiloeOutcome {
    let mut out = ChiloeOutcome::default();
    for (vp, counts) in vp_round_counts(table, home_blocks) {
        let mut one = chiloe(&vp, &counts, address_island_eps);
        out.islands.append(&mut one.islands);
        out.demoted.append(&mut one.demoted);
    }
    out.islands
        .sort_by(|a, b| (&a.vp, a.start_round).cmp(&(&b.vp, b.start_round)));
    out.demoted
        .sort_by(|a, b| (&a.vp, a.start_round).cmp(&(&b.vp, b.start_round)));
    out
}

/// Verdict of the sparse (few-targets) island check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SparseVerdict {
    /// Zero successes to every probed target across the window.
    Island {
        probed: usize,
        expected: usize,
        /// Expected targets that were never probed in the window (coverage
        /// note; unprobed targets stay out of the denominator).
        unprobed: Vec<String>,
    },
    NotIsland,
    /// No probes at all in the window: distinct from "not an island".
    Indeterminate,
}

/// Per-target probe tally for one observer over one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TargetTally {
    pub probes: u64,
    pub successes: u64,
}

/// Stricter-than-Chiloe island rule for observers that scan only a few named
/// targets: islanded iff zero successes to all probed targets across the
/// window.
pub fn chiloe_sparse(
    results: &BTreeMap<String, TargetTally>,
    expected_targets: &[String],
) -> SparseVerdict {
    let probed: Vec<&String> = results
        .iter()
        .filter(|(_, t)| t.probes > 0)
        .map(|(k, _)| k)
        .collect();
    if probed.is_empty() {
        return SparseVerdict::Indeterminate;
    }
    if results.values().any(|t| t.successes > 0) {
        return SparseVerdict::NotIsland;
    }
    let probed_set: BTreeSet<&String> = probed.iter().copied().collect();
    let unprobed: Vec<String> = expected_targets
        .iter()
        .filter(|t| !probed_set.contains(t))
        .cloned()
        .collect();
    SparseVerdict::Island {
        probed: probed.len(),
        expected: expected_targets.len(),
        unprobed,
    }
}

/// Per-round country-peninsula check result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountryCheck {
    /// Up-set equals exactly the valid observers of this country (two or
    /// more of them), with at least one foreign observer reporting down.
    Match(String),
    /// Same equality, but the country fielded only one valid observer; kept
    /// apart because a single observer cannot distinguish a country filter
    /// from an observer-local problem.
    Singleton(String),
    NoMatch,
}

/// Evaluate the country-peninsula condition for one (block, round) cell:
/// the up-set must equal the set of valid same-country observers while at
/// least one foreign observer reports down. Observers with unknown country
/// count as foreign witnesses and never form a country set.
pub fn country_peninsula(
    cell: &RoundCell,
    vps: &VpRegistry,
    countries: &BTreeMap<String, Option<String>>,
) -> CountryCheck {
    if cell.kind() != RoundKind::Disagreement {
        return CountryCheck::NoMatch;
    }
    // country of every up observer must be the same and known
    let mut up_country: Option<&str> = None;
    let mut m = cell.up;
    while m != 0 {
        let vp = m.trailing_zeros() as u16;
        m &= m - 1;
        match countries.get(vps.id(vp)).and_then(|c| c.as_deref()) {
            Some(c) if up_country.is_none() || up_country == Some(c) => up_country = Some(c),
            _ => return CountryCheck::NoMatch,
        }
    }
    let Some(country) = up_country else {
        return CountryCheck::NoMatch;
    };

    // every valid observer of that country must be in the up-set
    let mut domestic_observed = 0u32;
    let mut foreign_observed = 0u32;
    let mut m = cell.observed;
    while m != 0 {
        let vp = m.trailing_zeros() as u16;
        let bit = 1u64 << vp;
        m &= m - 1;
        let vp_country = countries.get(vps.id(vp)).and_then(|c| c.as_deref());
        if vp_country == Some(country) {
            domestic_observed += 1;
            if cell.up & bit == 0 {
                return CountryCheck::NoMatch; // a domestic observer saw it down
            }
        } else {
            foreign_observed += 1;
        }
    }
    if foreign_observed == 0 {
        return CountryCheck::NoMatch;
    }
    if domestic_observed >= 2 {
        CountryCheck::Match(country.to_string())
    } else {
        CountryCheck::Singleton(country.to_string())
    }
}

/// A span of rounds in which a block answered exactly its own country.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryPeninsulaEvent {
    pub block: BlockId,
    pub country: String,
    pub start_round: i64,
    pub end_round: i64,
}

#[derive(Debug, Clone, Default)]
pub struct CountryDetection {
    pub events: Vec<CountryPeninsulaEvent>,
    /// Matches backed by a single domestic observer, recorded separately.
    pub singleton_events: Vec<CountryPeninsulaEvent>,
}

/// Detect country peninsulas across the table, coalescing consecutive
/// same-country rounds per block.
pub fn country_detect(
    table: &RoundTable,
    countries: &BTreeMap<String, Option<String>>,
    quarantine: &Quarantine,
) -> CountryDetection {
    let mut out = CountryDetection::default();
    for block_cells in table.blocks() {
        let block = block_cells[0].block;
        // (country, singleton?) per matched round
        let mut open: Option<(String, bool, i64, i64)> = None;
        for cell in block_cells {
            let cell = cell.restricted(!quarantine.mask(cell.round));
            let check = country_peninsula(&cell, &table.vps, countries);
            let matched = match check {
                CountryCheck::Match(c) => Some((c, false)),
                CountryCheck::Singleton(c) => Some((c, true)),
                CountryCheck::NoMatch => None,
            };
            open = match (open, matched) {
                (Some((oc, os, start, end)), Some((c, s)))
                    if oc == c && os == s && cell.round == end + 1 =>
                {
                    Some((oc, os, start, cell.round))
                }
                (prev, cur) => {
                    if let Some((oc, os, start, end)) = prev {
                        push_country_event(&mut out, block, oc, os, start, end);
                    }
                    cur.map(|(c, s)| (c, s, cell.round, cell.round))
                }
            };
        }
        if let Some((oc, os, start, end)) = open {
            push_country_event(&mut out, block, oc, os, start, end);
        }
    }
    out
}

fn push_country_event(
    out: &mut CountryDetection,
    block: BlockId,
    country: String,
    singleton: bool,
    start: i64,
    end: i64,
) {
    let ev = CountryPeninsulaEvent {
        block,
        country,
        start_round: start,
        end_round: end,
    };
    if singleton {
        out.singleton_events.push(ev);
    } else {
        out.events.push(ev);
    }
}

/// Full two-pass detection: Chiloe first, then Taitao with the islanded
/// observer-rounds quarantined.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub peninsulas: Vec<PeninsulaEvent>,
    pub islands: Vec<IslandEvent>,
    pub demoted_islands: Vec<IslandEvent>,
    pub quarantined_vp_rounds: usize,
    pub duplicate_conflicts: usize,
}

pub fn detect_all(
    table: &RoundTable,
    home_blocks: &BTreeMap<String, BlockId>,
    address_island_eps: f64,
) -> DetectionReport {
    let chi = chiloe_detect(table, home_blocks, address_island_eps);
    let quarantine = Quarantine::from_island_events(&chi.islands, &table.vps);
    let peninsulas = taitao_detect(table, &quarantine);
    DetectionReport {
        peninsulas,
        islands: chi.islands,
        demoted_islands: chi.demoted,
        quarantined_vp_rounds: quarantine.vp_rounds(),
        duplicate_conflicts: table.duplicate_conflicts,
    }
}
