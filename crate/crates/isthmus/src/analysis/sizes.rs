//! Peninsula sizing: cross-block grouping of events, the peninsula-prefix
//! fraction, and the heat-map bins behind the size figures.
//!
//! Events group by (start timebin, duration timebin, up-set) in one-hour
//! bins; matching start, duration, and observing sites across blocks is what
//! ties the blocks of one routing event together.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::routing::{lpm, RoutedPrefix, RoutingTable};
use crate::detect::PeninsulaEvent;
use crate::error::{Error, Result};
use crate::model::{BlockId, TimeBinning};

pub const GROUP_BIN_S: i64 = 3600;

/// Fraction-bin upper edges for the heat map, documented in report headers:
/// (0, .05], (.05, .1], (.1, .25], (.25, .5], (.5, .75], (.75, 1), plus an
/// exact bin for whole-prefix events.
pub const FRACTION_BIN_EDGES: [f64; 6] = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0];

pub fn fraction_bin(f: f64) -> usize {
    if f >= 1.0 {
        return FRACTION_BIN_EDGES.len(); // whole prefix
    }
    FRACTION_BIN_EDGES
        .iter()
        .position(|edge| f <= *edge)
        .unwrap_or(FRACTION_BIN_EDGES.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub start_bin: i64,
    pub duration_bin: i64,
    pub up_set: BTreeSet<String>,
}

/// One grouped peninsula: the blocks whose events share a group key.
#[derive(Debug, Clone)]
pub struct GroupedPeninsula {
    pub key: GroupKey,
    /// (block, event duration seconds) pairs, one per member event.
    pub members: Vec<(BlockId, i64)>,
}

impl GroupedPeninsula {
    pub fn blocks(&self) -> BTreeSet<BlockId> {
        self.members.iter().map(|(b, _)| *b).collect()
    }
}

/// Group events across blocks by identical (start bin, duration bin, up-set)
/// in one-hour bins.
pub fn group_peninsulas(events: &[PeninsulaEvent], binning: TimeBinning) -> Vec<GroupedPeninsula> {
    let mut groups: BTreeMap<GroupKey, Vec<(BlockId, i64)>> = BTreeMap::new();
    for ev in events {
        let start_s = binning.round_start(ev.start_round);
        let duration_s = ev.rounds() * binning.window_s;
        let key = GroupKey {
            start_bin: start_s.div_euclid(GROUP_BIN_S),
            duration_bin: duration_s.div_euclid(GROUP_BIN_S),
            up_set: ev.up_set.clone(),
        };
        groups.entry(key).or_default().push((ev.block, duration_s));
    }
    groups
        .into_iter()
        .map(|(key, members)| GroupedPeninsula { key, members })
        .collect()
}

/// Fraction of a routed prefix's measurable blocks participating in one
/// grouped event. `None` when fewer than two of the group's blocks fall in
/// the prefix (single-block noise) or when the prefix has no measurable
/// blocks.
pub fn peninsula_prefix_fraction(
    group: &GroupedPeninsula,
    prefix: RoutedPrefix,
    measurable_blocks: &BTreeSet<BlockId>,
) -> Option<f64> {
    let in_prefix = group
        .blocks()
        .iter()
        .filter(|b| prefix.prefix.covers_block(**b))
        .count();
    if in_prefix < 2 {
        return None;
    }
    let measurable = measurable_blocks
        .iter()
        .filter(|b| prefix.prefix.covers_block(**b))
        .count();
    if measurable == 0 {
        return None;
    }
    Some(in_prefix as f64 / measurable as f64)
}

/// One heat-map cell: prefix length x fraction bin, counting grouped
/// (event, prefix) pairs and their block-time weight in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub prefix_length: u8,
    pub fraction_bin: usize,
    pub count: u64,
    pub blocktime_s: f64,
}

/// Assemble the size heat map: every grouped event is matched to routed
/// prefixes by longest-prefix match of its member blocks, the prefix
/// fraction is computed against the measurable set, and cells accumulate
/// counts plus block-time weights.
pub fn size_heatmap(
    groups: &[GroupedPeninsula],
    table: &RoutingTable,
    measurable_blocks: &BTreeSet<BlockId>,
) -> Result<Vec<HeatmapCell>> {
    if table.is_empty() {
        return Err(Error::data("empty routing table"));
    }
    let mut cells: BTreeMap<(u8, usize), (u64, f64)> = BTreeMap::new();
    for group in groups {
        // partition this group's members by covering prefix
        let mut by_prefix: BTreeMap<RoutedPrefix, Vec<(BlockId, i64)>> = BTreeMap::new();
        for (block, dur) in &group.members {
            if let Some(entry) = lpm(table, *block) {
                by_prefix.entry(entry).or_default().push((*block, *dur));
            }
        }
        for (entry, members) in by_prefix {
            let sub = GroupedPeninsula {
                key: group.key.clone(),
                members,
            };
            if let Some(fraction) = peninsula_prefix_fraction(&sub, entry, measurable_blocks) {
                let weight: f64 = sub.members.iter().map(|(_, d)| *d as f64).sum();
                let slot = cells
                    .entry((entry.prefix.length(), fraction_bin(fraction)))
                    .or_insert((0, 0.0));
                slot.0 += 1;
                slot.1 += weight;
            }
        }
    }
    Ok(cells
        .into_iter()
        .map(
            |((prefix_length, fraction_bin), (count, blocktime_s))| HeatmapCell {
                prefix_length,
                fraction_bin,
                count,
                blocktime_s,
            },
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(block: u32, start_round: i64, rounds: i64, up: &[&str]) -> PeninsulaEvent {
        let up_set: BTreeSet<String> = up.iter().map(|s| s.to_string()).collect();
        let mut observed = up_set.clone();
        observed.insert("ZZZ".to_string());
        PeninsulaEvent {
            block: BlockId::new(block).unwrap(),
            start_round,
            end_round: start_round + rounds - 1,
            up_set,
            observed_set: observed,
        }
    }

    fn entry(p: &str, asn: u32) -> RoutedPrefix {
        RoutedPrefix {
            prefix: p.parse().unwrap(),
            asn,
        }
    }

    #[test]
    fn grouping_by_start_duration_upset() {
        let binning = TimeBinning::default();
        let events = vec![
            event(1, 100, 3, &["W"]),
            event(2, 100, 3, &["W"]),
            event(3, 100, 3, &["C"]), // different up-set
            event(4, 200, 3, &["W"]), // different start hour
            event(5, 101, 3, &["W"]), // same hour bin as rounds 100..: check
        ];
        let groups = group_peninsulas(&events, binning);
        // round 100 starts at 66000s = hour bin 18; round 101 at 66660 also 18;
        // round 200 starts at 132000 = hour 36
        let big = groups
            .iter()
            .find(|g| g.members.len() == 3)
            .expect("blocks 1,2,5 share a group");
        assert_eq!(big.key.up_set, ["W".to_string()].into());
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn prefix_fraction_arithmetic() {
        // 128 of 256 measurable /24s of a /16 in one grouped event: 0.5
        let members: Vec<(BlockId, i64)> = (0..128)
            .map(|i| (BlockId::new(0x0a0100 + i).unwrap(), 660))
            .collect();
        let group = GroupedPeninsula {
            key: GroupKey {
                start_bin: 0,
                duration_bin: 0,
                up_set: BTreeSet::new(),
            },
            members,
        };
        let measurable: BTreeSet<BlockId> = (0..256)
            .map(|i| BlockId::new(0x0a0100 + i).unwrap())
            .collect();
        let f = peninsula_prefix_fraction(&group, entry("10.1.0.0/16", 1), &measurable).unwrap();
        assert!((f - 0.5).abs() < 1e-12);

        // whole-prefix event
        let f = peninsula_prefix_fraction(
            &group,
            entry("10.1.0.0/17", 1),
            &measurable.iter().copied().take(128).collect(),
        )
        .unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert_eq!(fraction_bin(f), FRACTION_BIN_EDGES.len());

        // single-block events are excluded
        let single = GroupedPeninsula {
            key: group.key.clone(),
            members: vec![(BlockId::new(0x0a0100).unwrap(), 660)],
        };
        assert_eq!(
            peninsula_prefix_fraction(&single, entry("10.1.0.0/16", 1), &measurable),
            None
        );

        // no measurable blocks: skip
        assert_eq!(
            peninsula_prefix_fraction(&group, entry("10.1.0.0/16", 1), &BTreeSet::new()),
            None
        );
    }

    #[test]
    fn heatmap_counts_and_weights() {
        let binning = TimeBinning::default();
        let events: Vec<PeninsulaEvent> = (0..4)
            .map(|i| event(0x0a0100 + i, 100, 2, &["W"]))
            .collect();
        let groups = group_peninsulas(&events, binning);
        let table = RoutingTable::from_entries([entry("10.1.0.0/16", 7)]);
        let measurable: BTreeSet<BlockId> = (0..8)
            .map(|i| BlockId::new(0x0a0100 + i).unwrap())
            .collect();
        let cells = size_heatmap(&groups, &table, &measurable).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].prefix_length, 16);
        assert_eq!(cells[0].count, 1);
        assert_eq!(cells[0].fraction_bin, fraction_bin(0.5));
        assert!((cells[0].blocktime_s - 4.0 * 2.0 * 660.0).abs() < 1e-9);
    }

    #[test]
    fn fraction_bins_cover_range() {
        assert_eq!(fraction_bin(0.01), 0);
        assert_eq!(fraction_bin(0.05), 0);
        assert_eq!(fraction_bin(0.07), 1);
        assert_eq!(fraction_bin(0.2), 2);
        assert_eq!(fraction_bin(0.5), 3);
        assert_eq!(fraction_bin(0.6), 4);
        assert_eq!(fraction_bin(0.9), 5);
        assert_eq!(fraction_bin(1.0), 6);
    }
}
