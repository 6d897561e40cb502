//! Pairwise site similarity, conditioned on rounds where the pair carries
//! information: agreement counts toward similarity only when at least one
//! other observer disagrees with the pair's shared state.

use std::collections::BTreeMap;

use crate::detect::RoundTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    /// Pair agrees up, someone else disagrees.
    pub p1: u64,
    /// Pair agrees down, someone else disagrees.
    pub p0: u64,
    /// Pair disagrees with each other.
    pub dstar: u64,
}

impl PairCounts {
    /// (P1 + P0) / (P1 + P0 + D*); undefined when no qualifying rounds.
    pub fn similarity(&self) -> Option<f64> {
        let denom = self.p1 + self.p0 + self.dstar;
        (denom > 0).then(|| (self.p1 + self.p0) as f64 / denom as f64)
    }
}

/// Counts and scores per unordered observer pair, keyed by (id, id) with the
/// smaller id first.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub pairs: BTreeMap<(String, String), PairCounts>,
}

impl SimilarityMatrix {
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.pairs.get(&key).and_then(|c| c.similarity())
    }
}

/// Compute S for every unordered pair across all cells. Needs at least
/// three observers, since the conditioning asks whether "some other"
/// observer disagrees.
pub fn similarity_matrix(table: &RoundTable) -> Result<SimilarityMatrix> {
    let v = table.vps.len();
    if v < 3 {
        return Err(Error::data(format!(
            "similarity needs >=3 observers, got {v}"
        )));
    }
    let mut counts: Vec<PairCounts> = vec![PairCounts::default(); v * v];
    for cell in &table.cells {
        let obs = cell.observed;
        let up = cell.up;
        for a in 0..v as u16 {
            let abit = 1u64 << a;
            if obs & abit == 0 {
                continue;
            }
            for b in (a + 1)..v as u16 {
                let bbit = 1u64 << b;
                if obs & bbit == 0 {
                    continue;
                }
                let slot = &mut counts[a as usize * v + b as usize];
                let a_up = up & abit != 0;
                let b_up = up & bbit != 0;
                if a_up != b_up {
                    slot.dstar += 1;
                } else {
                    // does any other valid observer disagree with the pair?
                    let others = obs & !(abit | bbit);
                    let others_up = up & others;
                    let disagreeing = if a_up {
                        others & !others_up != 0
                    } else {
                        others_up != 0
                    };
                    if disagreeing {
                        if a_up {
                            slot.p1 += 1;
                        } else {
                            slot.p0 += 1;
                        }
                    }
                }
            }
        }
    }
    let mut pairs = BTreeMap::new();
    for a in 0..v {
        for b in (a + 1)..v {
            pairs.insert(
                (
                    table.vps.id(a as u16).to_string(),
                    table.vps.id(b as u16).to_string(),
                ),
                counts[a * v + b],
            );
        }
    }
    Ok(SimilarityMatrix { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockId, Observation, ObservationState, TimeBinning};

    fn obs(round: i64, vp: &str, up: bool) -> Observation {
        Observation {
            time: round * 660,
            vp: vp.to_string(),
            block: BlockId::new(1).unwrap(),
            state: if up {
                ObservationState::Up
            } else {
                ObservationState::Down
            },
        }
    }

    fn table(v: &[Observation]) -> RoundTable {
        RoundTable::build(v, TimeBinning::default()).unwrap()
    }

    #[test]
    fn formula_arithmetic() {
        // A,B: one agreeing-up round vs dissenter, one agreeing-down round
        // vs dissenter, one round disagreeing: S = 2/3
        let v = vec![
            obs(0, "A", true),
            obs(0, "B", true),
            obs(0, "C", false),
            obs(1, "A", false),
            obs(1, "B", false),
            obs(1, "C", true),
            obs(2, "A", true),
            obs(2, "B", false),
            obs(2, "C", true),
        ];
        let m = similarity_matrix(&table(&v)).unwrap();
        let c = m.pairs[&("A".to_string(), "B".to_string())];
        assert_eq!((c.p1, c.p0, c.dstar), (1, 1, 1));
        assert!((m.score("A", "B").unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.score("B", "A").unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unanimous_rounds_leave_pairs_undefined() {
        let v = vec![
            obs(0, "A", true),
            obs(0, "B", true),
            obs(0, "C", true),
            obs(1, "A", false),
            obs(1, "B", false),
            obs(1, "C", false),
        ];
        let m = similarity_matrix(&table(&v)).unwrap();
        assert_eq!(m.score("A", "B"), None);
    }

    #[test]
    fn agreeing_pair_against_dissenter_scores_one() {
        let mut v = Vec::new();
        for r in 0..5 {
            v.push(obs(r, "A", true));
            v.push(obs(r, "B", true));
            v.push(obs(r, "C", false));
        }
        let m = similarity_matrix(&table(&v)).unwrap();
        assert_eq!(m.score("A", "B"), Some(1.0));
    }

    #[test]
    fn always_disagreeing_scores_zero() {
        let mut v = Vec::new();
        for r in 0..10 {
            v.push(obs(r, "A", true));
            v.push(obs(r, "B", false));
            v.push(obs(r, "C", true));
        }
        let m = similarity_matrix(&table(&v)).unwrap();
        let c = m.pairs[&("A".to_string(), "B".to_string())];
        assert_eq!((c.p1, c.p0, c.dstar), (0, 0, 10));
        assert_eq!(m.score("A", "B"), Some(0.0));
    }

    #[test]
    fn symmetric_and_bounded() {
        let mut v = Vec::new();
        for r in 0..50i64 {
            for (i, vp) in ["A", "B", "C", "D"].iter().enumerate() {
                v.push(obs(r, vp, !(r as usize + i).is_multiple_of(3)));
            }
        }
        let m = similarity_matrix(&table(&v)).unwrap();
        for (a, b) in m.pairs.keys() {
            if let Some(s) = m.score(a, b) {
                assert!((0.0..=1.0).contains(&s));
                assert_eq!(m.score(a, b), m.score(b, a));
            }
        }
    }

    #[test]
    fn fewer_than_three_observers_is_an_error() {
        let v = vec![obs(0, "A", true), obs(0, "B", false)];
        assert!(similarity_matrix(&table(&v)).is_err());
    }
}
