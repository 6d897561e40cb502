//! The sparse-confirmation comparison harness: long-lived events from a
//! dense detector stream are checked against infrequent independent
//! observations, producing the sites-up x {conflicting, all-down, all-up}
//! agreement table and folding it into confusion counts under strict and
//! loose rules.
//!
//! The cell semantics are a declarative rule table, so the strict/loose
//! variants are data rather than code. The sparse observer's negative
//! results are untrustworthy for single-probe reasons, so an all-up column
//! against a dense all-up row is a true negative rather than a missed
//! detection.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::detect::{kind_of, RoundTable};
use crate::error::{Error, Result};
use crate::model::{BlockId, Observation, ObservationState, RoundKind, TimeBinning};

use super::confusion::ConfusionCounts;

/// Comparison thresholds with the published defaults; all sweepable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArkThresholds {
    /// Minimum per-observer uptime fraction for a block to be "reliable".
    pub reliable_uptime: f64,
    /// Blocks with more than this many distinct disagreeing up-sets are
    /// flaky and excluded.
    pub flaky_combos: usize,
    /// Only events at least this long are compared.
    pub long_event_s: i64,
    /// Minimum independent observations within an event's span.
    pub confirmations: usize,
}

impl Default for ArkThresholds {
    fn default() -> Self {
        ArkThresholds {
            reliable_uptime: 0.85,
            flaky_combos: 10,
            long_event_s: 18_000,
            confirmations: 3,
        }
    }
}

/// Row of the agreement table: how the dense detector saw the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DetectorRow {
    AllDown,
    SitesUp(u32),
    AllUp,
}

/// Column: how the sparse observations within the event span look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ArkColumn {
    Conflicting,
    AllDown,
    AllUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellOutcome {
    Tp,
    Fp,
    Fn,
    Tn,
    Discard,
}

/// One rule: what a (row, column) cell means under each counting variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellRule {
    pub row: DetectorRow,
    pub column: ArkColumn,
    pub strict: CellOutcome,
    pub loose: CellOutcome,
}

/// The published cell semantics for a detector with `v` observers. The
/// loose variant discards the sites-up = v-1 all-up cell, where a single
/// dissenting observer usually indicates a problem near that observer.
pub fn default_rules(v: u32) -> Vec<CellRule> {
    use ArkColumn::*;
    use CellOutcome::*;
    let mut rules = vec![
        CellRule {
            row: DetectorRow::AllDown,
            column: Conflicting,
            strict: Fn,
            loose: Fn,
        },
        CellRule {
            row: DetectorRow::AllDown,
            column: AllDown,
            strict: Tn,
            loose: Tn,
        },
        CellRule {
            row: DetectorRow::AllDown,
            column: AllUp,
            strict: Fn,
            loose: Fn,
        },
        CellRule {
            row: DetectorRow::AllUp,
            column: Conflicting,
            strict: Tn,
            loose: Tn,
        },
        CellRule {
            row: DetectorRow::AllUp,
            column: AllDown,
            strict: Tn,
            loose: Tn,
        },
        CellRule {
            row: DetectorRow::AllUp,
            column: AllUp,
            strict: Tn,
            loose: Tn,
        },
    ];
    for u in 1..v {
        let last = u == v - 1;
        rules.push(CellRule {
            row: DetectorRow::SitesUp(u),
            column: Conflicting,
            strict: Tp,
            loose: Tp,
        });
        rules.push(CellRule {
            row: DetectorRow::SitesUp(u),
            column: AllDown,
            strict: Tp,
            loose: Tp,
        });
        rules.push(CellRule {
            row: DetectorRow::SitesUp(u),
            column: AllUp,
            strict: Fp,
            loose: if last { Discard } else { Fp },
        });
    }
    rules
}

/// Event counts per (row, column) cell.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AgreementTable {
    pub cells: BTreeMap<(DetectorRow, ArkColumn), u64>,
    pub observers: u32,
}

impl AgreementTable {
    pub fn count(&self, row: DetectorRow, column: ArkColumn) -> u64 {
        self.cells.get(&(row, column)).copied().unwrap_or(0)
    }

    fn fold(&self, rules: &[CellRule], loose: bool) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for rule in rules {
            let n = self.count(rule.row, rule.column);
            let outcome = if loose { rule.loose } else { rule.strict };
            match outcome {
                CellOutcome::Tp => c.tp += n,
                CellOutcome::Fp => c.fp += n,
                CellOutcome::Fn => c.fn_ += n,
                CellOutcome::Tn => c.tn += n,
                CellOutcome::Discard => {}
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArkCell {
    pub row: DetectorRow,
    pub column: ArkColumn,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArkComparison {
    pub table_counts: Vec<ArkCell>,
    pub strict: ConfusionCounts,
    pub loose: ConfusionCounts,
    pub shared_blocks: usize,
    pub excluded_unreliable: usize,
    pub excluded_flaky: usize,
    pub excluded_never_active: usize,
    pub skipped_unconfirmed: usize,
    #[serde(skip)]
    pub table: AgreementTable,
}

/// Compare long-lived events from the dense table against sparse
/// observations of the same blocks.
pub fn ark_comparison(
    dense: &RoundTable,
    binning: TimeBinning,
    sparse: &[Observation],
    thresholds: &ArkThresholds,
) -> Result<ArkComparison> {
    let v = dense.vps.len() as u32;

    // Sparse observations per block, time-sorted, unmeasured dropped.
    let mut sparse_by_block: HashMap<BlockId, Vec<(i64, bool)>> = HashMap::new();
    for o in sparse {
        match o.state {
            ObservationState::Up => sparse_by_block
                .entry(o.block)
                .or_default()
                .push((o.time, true)),
            ObservationState::Down => sparse_by_block
                .entry(o.block)
                .or_default()
                .push((o.time, false)),
            ObservationState::Unmeasured => {}
        }
    }
    for v in sparse_by_block.values_mut() {
        v.sort_unstable();
    }

    // Per-block filters over the dense table.
    let mut excluded_unreliable = 0usize;
    let mut excluded_flaky = 0usize;
    let mut excluded_never_active = 0usize;
    let mut shared: Vec<&[crate::detect::RoundCell]> = Vec::new();
    for block_cells in dense.blocks() {
        let block = block_cells[0].block;
        let Some(sparse_obs) = sparse_by_block.get(&block) else {
            continue;
        };

        // never-active targets: the sparse observer never reached it at all
        if !sparse_obs.iter().any(|(_, up)| *up) {
            excluded_never_active += 1;
            continue;
        }
        // reliable: every dense observer saw it up at least the threshold
        // fraction of its own valid observations
        let mut up_counts = [0u64; 64];
        let mut obs_counts = [0u64; 64];
        for cell in block_cells {
            let mut m = cell.observed;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                obs_counts[i] += 1;
                if cell.up & (1 << i) != 0 {
                    up_counts[i] += 1;
                }
            }
        }
        let unreliable = (0..v as usize).any(|i| {
            obs_counts[i] > 0
                && (up_counts[i] as f64 / obs_counts[i] as f64) < thresholds.reliable_uptime
        });
        if unreliable {
            excluded_unreliable += 1;
            continue;
        }
        // flaky: too many distinct disagreeing observer combinations
        let combos: BTreeSet<u64> = block_cells
            .iter()
            .filter(|c| c.kind() == RoundKind::Disagreement)
            .map(|c| c.up)
            .collect();
        if combos.len() > thresholds.flaky_combos {
            excluded_flaky += 1;
            continue;
        }
        shared.push(block_cells);
    }
    if shared.is_empty() {
        return Err(Error::data(
            "no shared blocks between the dense and sparse streams",
        ));
    }
    let shared_blocks = shared.len();

    // Events: maximal runs of constant (kind, up-set) per block; compare the
    // long ones against the sparse observations within their span.
    let mut table = AgreementTable {
        cells: BTreeMap::new(),
        observers: v,
    };
    let mut skipped_unconfirmed = 0usize;
    for block_cells in shared {
        let block = block_cells[0].block;
        let sparse_obs = &sparse_by_block[&block];
        let mut open: Option<(RoundKind, u64, i64, i64)> = None;
        let mut events: Vec<(RoundKind, u64, i64, i64)> = Vec::new();
        for cell in block_cells {
            let kind = kind_of(cell.up, cell.observed);
            open = match open {
                Some((k, up, start, end))
                    if k == kind
                        && cell.round == end + 1
                        && (k != RoundKind::Disagreement || up == cell.up) =>
                {
                    Some((k, up, start, cell.round))
                }
                Some(ev) => {
                    events.push(ev);
                    Some((kind, cell.up, cell.round, cell.round))
                }
                None => Some((kind, cell.up, cell.round, cell.round)),
            };
        }
        events.extend(open);

        for (kind, up, start, end) in events {
            if kind == RoundKind::Unmeasured {
                continue;
            }
            let start_s = binning.round_start(start);
            let end_s = binning.round_start(end + 1);
            if end_s - start_s < thresholds.long_event_s {
                continue;
            }
            let in_span: Vec<bool> = sparse_obs
                .iter()
                .filter(|(t, _)| *t >= start_s && *t < end_s)
                .map(|(_, up)| *up)
                .collect();
            if in_span.len() < thresholds.confirmations {
                skipped_unconfirmed += 1;
                continue;
            }
            let column = match (in_span.iter().any(|u| *u), in_span.iter().any(|u| !*u)) {
                (true, true) => ArkColumn::Conflicting,
                (false, _) => ArkColumn::AllDown,
                (true, false) => ArkColumn::AllUp,
            };
            let row = match kind {
                RoundKind::AllDown => DetectorRow::AllDown,
                RoundKind::AllUp => DetectorRow::AllUp,
                RoundKind::Disagreement => DetectorRow::SitesUp(up.count_ones()),
                RoundKind::Unmeasured => unreachable!(),
            };
            *table.cells.entry((row, column)).or_insert(0) += 1;
        }
    }

    let rules = default_rules(v);
    let strict = table.fold(&rules, false);
    let loose = table.fold(&rules, true);
    let table_counts = table
        .cells
        .iter()
        .map(|(&(row, column), &count)| ArkCell { row, column, count })
        .collect();
    Ok(ArkComparison {
        table_counts,
        strict,
        loose,
        shared_blocks,
        excluded_unreliable,
        excluded_flaky,
        excluded_never_active,
        skipped_unconfirmed,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockId, TimeBinning};

    fn obs(time: i64, vp: &str, block: u32, up: bool) -> Observation {
        Observation {
            time,
            vp: vp.to_string(),
            block: BlockId::new(block).unwrap(),
            state: if up {
                ObservationState::Up
            } else {
                ObservationState::Down
            },
        }
    }

    /// Dense stream: 6 observers, `rounds` rounds; `down` names the
    /// observers that see the block down during [ev_start, ev_end).
    fn dense_stream(
        block: u32,
        rounds: i64,
        down: &[&str],
        ev: std::ops::Range<i64>,
    ) -> Vec<Observation> {
        let vps = ["A", "B", "C", "D", "E", "F"];
        let mut v = Vec::new();
        for r in 0..rounds {
            for vp in vps {
                let is_down = down.contains(&vp) && ev.contains(&r);
                v.push(obs(r * 660, vp, block, !is_down));
            }
        }
        v
    }

    #[test]
    fn strict_and_loose_differ_exactly_by_the_v_minus_1_row() {
        let mut table = AgreementTable {
            cells: BTreeMap::new(),
            observers: 6,
        };
        table
            .cells
            .insert((DetectorRow::SitesUp(5), ArkColumn::AllUp), 201);
        table
            .cells
            .insert((DetectorRow::SitesUp(1), ArkColumn::AllUp), 15);
        table
            .cells
            .insert((DetectorRow::SitesUp(2), ArkColumn::Conflicting), 13);
        table
            .cells
            .insert((DetectorRow::AllDown, ArkColumn::Conflicting), 6);
        let rules = default_rules(6);
        let strict = table.fold(&rules, false);
        let loose = table.fold(&rules, true);
        assert_eq!(
            strict.fp - loose.fp,
            table.count(DetectorRow::SitesUp(5), ArkColumn::AllUp)
        );
        assert_eq!(strict.tp, loose.tp);
        assert_eq!(strict.fn_, loose.fn_);
    }

    #[test]
    fn published_table_folds_to_published_counts() {
        // the sites-up x column counts behind the published confusion matrix
        let mut table = AgreementTable {
            cells: BTreeMap::new(),
            observers: 6,
        };
        let conflicting = [20u64, 13, 13, 26, 83];
        let alldown = [6u64, 5, 1, 4, 13];
        let allup = [15u64, 11, 5, 19, 201];
        for u in 1..=5u32 {
            table.cells.insert(
                (DetectorRow::SitesUp(u), ArkColumn::Conflicting),
                conflicting[u as usize - 1],
            );
            table.cells.insert(
                (DetectorRow::SitesUp(u), ArkColumn::AllDown),
                alldown[u as usize - 1],
            );
            table.cells.insert(
                (DetectorRow::SitesUp(u), ArkColumn::AllUp),
                allup[u as usize - 1],
            );
        }
        table
            .cells
            .insert((DetectorRow::AllDown, ArkColumn::Conflicting), 6);
        table
            .cells
            .insert((DetectorRow::AllDown, ArkColumn::AllDown), 97);
        table
            .cells
            .insert((DetectorRow::AllDown, ArkColumn::AllUp), 6);
        table
            .cells
            .insert((DetectorRow::AllUp, ArkColumn::Conflicting), 491_120);
        table
            .cells
            .insert((DetectorRow::AllUp, ArkColumn::AllDown), 90);
        table
            .cells
            .insert((DetectorRow::AllUp, ArkColumn::AllUp), 1_485_394);
        let rules = default_rules(6);
        let strict = table.fold(&rules, false);
        assert_eq!(strict.tp, 184);
        assert_eq!(strict.fp, 251);
        assert_eq!(strict.fn_, 12);
        let loose = table.fold(&rules, true);
        assert_eq!(loose.fp, 50); // 251 minus the 201 five-up cases
    }

    #[test]
    fn long_peninsula_confirmed_by_sparse_conflict() {
        // a 30-round (5.5h) peninsula: A..C down, D..F up. The horizon is
        // long enough that the block stays above the reliability threshold.
        let mut dense = dense_stream(1, 300, &["A", "B", "C"], 10..40);
        dense.extend(dense_stream(2, 300, &[], 0..0)); // healthy block
        let table = RoundTable::build(&dense, TimeBinning::default()).unwrap();
        // sparse: 5 probes inside the span, mixed results; block 2 all up
        let mut sparse = Vec::new();
        for (i, t) in [11, 15, 20, 25, 35].iter().enumerate() {
            sparse.push(obs(t * 660, "ark-0", 1, i % 2 == 0));
            sparse.push(obs(t * 660, "ark-0", 2, true));
        }
        // block 1 also needs one success somewhere to not be "never active"
        sparse.push(obs(5 * 660, "ark-0", 1, true));
        let cmp = ark_comparison(
            &table,
            TimeBinning::default(),
            &sparse,
            &ArkThresholds::default(),
        )
        .unwrap();
        assert_eq!(
            cmp.table
                .count(DetectorRow::SitesUp(3), ArkColumn::Conflicting),
            1
        );
        assert_eq!(cmp.strict.tp, 1);
        assert_eq!(cmp.strict.fn_, 0);
    }

    #[test]
    fn unreliable_blocks_are_excluded_from_every_category() {
        // observer A sees the block down 40% of the quarter
        let dense = dense_stream(1, 100, &["A"], 0..40);
        let table = RoundTable::build(&dense, TimeBinning::default()).unwrap();
        let sparse: Vec<Observation> = (0..20).map(|i| obs(i * 2000, "ark-0", 1, true)).collect();
        let err = ark_comparison(
            &table,
            TimeBinning::default(),
            &sparse,
            &ArkThresholds::default(),
        );
        // the only block is excluded, so the shared set is empty
        assert!(err.is_err());
    }

    #[test]
    fn too_few_confirmations_skips_the_event() {
        let dense = dense_stream(1, 300, &["A", "B"], 10..40);
        let table = RoundTable::build(&dense, TimeBinning::default()).unwrap();
        let sparse = vec![
            obs(12 * 660, "ark-0", 1, true),
            obs(20 * 660, "ark-0", 1, false),
            obs(5 * 660, "ark-0", 1, true), // outside the span
        ];
        let cmp = ark_comparison(
            &table,
            TimeBinning::default(),
            &sparse,
            &ArkThresholds::default(),
        )
        .unwrap();
        assert_eq!(cmp.strict.tp, 0);
        assert!(cmp.skipped_unconfirmed >= 1);
    }
}
