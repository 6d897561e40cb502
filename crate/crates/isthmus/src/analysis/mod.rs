//! Aggregate analyses over classified observation streams: block-time
//! fractions, vantage-point subset convergence, significance testing,
//! duration distributions, prefix sizing, halt classification, site
//! similarity, confusion metrics, and the sparse-confirmation comparison
//! harness.
//!
//! Every operation is a pure fold; partial aggregates merge associatively,
//! so parallel and serial evaluation agree exactly.

mod ark;
mod confusion;
mod durations;
mod halts;
mod routing;
mod similarity;
mod sizes;
mod ttest;

pub use ark::{
    ark_comparison, AgreementTable, ArkCell, ArkColumn, ArkComparison, ArkThresholds, CellOutcome,
    CellRule, DetectorRow,
};
pub use confusion::{confusion_metrics, ConfusionCounts, ConfusionMetrics};
pub use durations::{duration_distributions, DurationCdfs};
pub use halts::{classify_halts, halt_classification, HaltClass, HaltPosition, HaltSummary};
pub use routing::{lpm, lpm_linear_scan, RoutedPrefix, RoutingTable};
pub use similarity::{similarity_matrix, PairCounts, SimilarityMatrix};
pub use sizes::{
    group_peninsulas, peninsula_prefix_fraction, size_heatmap, GroupKey, GroupedPeninsula,
    HeatmapCell, FRACTION_BIN_EDGES,
};
pub use ttest::{one_sample_ttest, TTestOutcome};

use itertools::Itertools;
use rayon::prelude::*;

use crate::detect::{kind_of, RoundCell, RoundTable};
use crate::error::{Error, Result};
use crate::model::RoundKind;

/// Fractions of measured block-time classified all-up, all-down, and
/// disagreement. The three sum to 1 over rounds with a nonempty observed
/// set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockTimeFractions {
    pub all_up: f64,
    pub all_down: f64,
    pub disagreement: f64,
    /// Number of (block, round) cells behind the fractions.
    pub measured_cells: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassCounts {
    all_up: u64,
    all_down: u64,
    disagreement: u64,
}

impl ClassCounts {
    fn add(&mut self, kind: RoundKind, n: u64) {
        match kind {
            RoundKind::AllUp => self.all_up += n,
            RoundKind::AllDown => self.all_down += n,
            RoundKind::Disagreement => self.disagreement += n,
            RoundKind::Unmeasured => {}
        }
    }

    fn total(&self) -> u64 {
        self.all_up + self.all_down + self.disagreement
    }

    fn fractions(&self) -> Result<BlockTimeFractions> {
        let total = self.total();
        if total == 0 {
            return Err(Error::data("no measured rounds"));
        }
        let t = total as f64;
        Ok(BlockTimeFractions {
            all_up: self.all_up as f64 / t,
            all_down: self.all_down as f64 / t,
            disagreement: self.disagreement as f64 / t,
            measured_cells: total,
        })
    }
}

/// Block-time fractions over all measured cells of the table. With
/// `min_event_rounds > 1`, runs of a single class shorter than the minimum
/// are left out of the accounting entirely (numerator and denominator), the
/// way figure-style summaries count only events of at least an hour.
pub fn blocktime_fractions(
    table: &RoundTable,
    min_event_rounds: i64,
) -> Result<BlockTimeFractions> {
    blocktime_fractions_subset(table, table.vps.full_mask(), min_event_rounds)
}

/// Fractions as a subset of observers would have seen them: each cell is
/// restricted to the subset before classification.
pub fn blocktime_fractions_subset(
    table: &RoundTable,
    subset: u64,
    min_event_rounds: i64,
) -> Result<BlockTimeFractions> {
    let mut counts = ClassCounts::default();
    if min_event_rounds <= 1 {
        for cell in &table.cells {
            counts.add(kind_of(cell.up & subset, cell.observed & subset), 1);
        }
    } else {
        for block_cells in table.blocks() {
            for (kind, run) in runs_of(block_cells, subset) {
                if run >= min_event_rounds {
                    counts.add(kind, run as u64);
                }
            }
        }
    }
    counts.fractions()
}

/// Maximal runs of consecutive rounds sharing a class kind for one block.
fn runs_of(block_cells: &[RoundCell], subset: u64) -> Vec<(RoundKind, i64)> {
    let mut out = Vec::new();
    let mut open: Option<(RoundKind, i64, i64)> = None; // kind, start, end
    for cell in block_cells {
        let kind = kind_of(cell.up & subset, cell.observed & subset);
        open = match open {
            Some((k, start, end)) if k == kind && cell.round == end + 1 => {
                Some((k, start, cell.round))
            }
            Some((k, start, end)) => {
                out.push((k, end - start + 1));
                Some((kind, cell.round, cell.round))
            }
            None => Some((kind, cell.round, cell.round)),
        };
    }
    if let Some((k, start, end)) = open {
        out.push((k, end - start + 1));
    }
    out
}

/// Per-subset fractions for every k-of-V observer combination.
#[derive(Debug, Clone)]
pub struct SubsetConvergence {
    pub k: usize,
    /// One entry per combination, keyed by the observer mask.
    pub per_subset: Vec<(u64, BlockTimeFractions)>,
}

impl SubsetConvergence {
    pub fn mean(&self, f: impl Fn(&BlockTimeFractions) -> f64) -> f64 {
        self.per_subset.iter().map(|(_, fr)| f(fr)).sum::<f64>() / self.per_subset.len() as f64
    }

    pub fn stddev(&self, f: impl Fn(&BlockTimeFractions) -> f64) -> f64 {
        let mean = self.mean(&f);
        let var = self
            .per_subset
            .iter()
            .map(|(_, fr)| (f(fr) - mean).powi(2))
            .sum::<f64>()
            / self.per_subset.len() as f64;
        var.sqrt()
    }
}

/// Reclassify the dataset under every subset of exactly `k` observers.
pub fn subset_convergence(table: &RoundTable, k: usize) -> Result<SubsetConvergence> {
    let v = table.vps.len();
    if k < 2 || k > v {
        return Err(Error::data(format!("subset size {k} outside 2..={v}")));
    }
    let masks: Vec<u64> = (0..v as u16)
        .combinations(k)
        .map(|combo| combo.iter().fold(0u64, |m, i| m | (1 << i)))
        .collect();
    let per_subset: Vec<(u64, BlockTimeFractions)> = masks
        .par_iter()
        .map(|&mask| Ok((mask, blocktime_fractions_subset(table, mask, 1)?)))
        .collect::<Result<_>>()?;
    Ok(SubsetConvergence { k, per_subset })
}

/// The ten ways to split six observers into complementary triples, as
/// (mask, complement-mask) pairs; general over V even.
pub fn complementary_halves(v: usize) -> Vec<(u64, u64)> {
    assert!(v.is_multiple_of(2) && (2..=64).contains(&v));
    let full: u64 = if v == 64 { u64::MAX } else { (1 << v) - 1 };
    let mut out = Vec::new();
    for combo in (0..v as u16).combinations(v / 2) {
        let mask = combo.iter().fold(0u64, |m, i| m | (1 << i));
        let comp = full & !mask;
        if mask & 1 != 0 {
            // fix observer 0 on the left side so each partition appears once
            out.push((mask, comp));
        }
    }
    out
}

/// One complementary observer split tested across datasets.
#[derive(Debug, Clone)]
pub struct HalfPairTest {
    pub left: u64,
    pub right: u64,
    pub outcome: TTestOutcome,
}

/// The subset-equivalence procedure: for every complementary half-split of
/// the observer set, take each dataset's difference in disagreement
/// fraction between the two halves and t-test whether the mean difference
/// exceeds zero. No rejections means any half is statistically as good as
/// its complement.
pub fn paired_halves_ttest(tables: &[&RoundTable], confidence: f64) -> Result<Vec<HalfPairTest>> {
    let first = tables.first().ok_or_else(|| Error::data("no datasets"))?;
    let v = first.vps.len();
    if tables.iter().any(|t| t.vps.len() != v) {
        return Err(Error::data("datasets must share an observer count"));
    }
    if !v.is_multiple_of(2) {
        return Err(Error::data("paired halves need an even observer count"));
    }
    let mut out = Vec::new();
    for (left, right) in complementary_halves(v) {
        let samples: Vec<f64> = tables
            .iter()
            .map(|t| {
                let a = blocktime_fractions_subset(t, left, 1)?;
                let b = blocktime_fractions_subset(t, right, 1)?;
                Ok(a.disagreement - b.disagreement)
            })
            .collect::<Result<_>>()?;
        out.push(HalfPairTest {
            left,
            right,
            outcome: one_sample_ttest(&samples, 0.0, confidence)?,
        });
    }
    Ok(out)
}
