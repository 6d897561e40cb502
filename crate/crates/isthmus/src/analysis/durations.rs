//! Duration distributions: the event-count CDF and the time-weighted CDF
//! (each event weighted by its share of total event time).

use crate::error::{Error, Result};

/// Both CDFs as sorted (duration, cumulative fraction) points; one point per
/// distinct duration, cumulative over events with duration <= the point.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationCdfs {
    pub count: Vec<(f64, f64)>,
    pub time_weighted: Vec<(f64, f64)>,
}

impl DurationCdfs {
    /// Cumulative count fraction at `d` (fraction of events no longer than d).
    pub fn count_at(&self, d: f64) -> f64 {
        cdf_at(&self.count, d)
    }

    /// Cumulative time fraction at `d`.
    pub fn time_at(&self, d: f64) -> f64 {
        cdf_at(&self.time_weighted, d)
    }
}

fn cdf_at(points: &[(f64, f64)], d: f64) -> f64 {
    points
        .iter()
        .take_while(|(dur, _)| *dur <= d)
        .last()
        .map_or(0.0, |(_, c)| *c)
}

pub fn duration_distributions(durations_s: &[f64]) -> Result<DurationCdfs> {
    if durations_s.is_empty() {
        return Err(Error::data("no events"));
    }
    if durations_s.iter().any(|d| *d <= 0.0 || !d.is_finite()) {
        return Err(Error::data("event durations must be positive"));
    }
    let mut sorted = durations_s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();

    let mut count = Vec::new();
    let mut time_weighted = Vec::new();
    let mut seen = 0.0f64;
    let mut time_seen = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let d = sorted[i];
        while i < sorted.len() && sorted[i] == d {
            seen += 1.0;
            time_seen += sorted[i];
            i += 1;
        }
        count.push((d, seen / n));
        time_weighted.push((d, time_seen / total));
    }
    Ok(DurationCdfs {
        count,
        time_weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nine_short_one_long() {
        // events {1h x9, 10h x1}: count CDF 0.9 at 1h; time-weighted 9/19
        let mut d = vec![3600.0; 9];
        d.push(36_000.0);
        let cdfs = duration_distributions(&d).unwrap();
        assert!((cdfs.count_at(3600.0) - 0.9).abs() < 1e-12);
        assert!((cdfs.time_at(3600.0) - 9.0 / 19.0).abs() < 1e-12);
        assert_eq!(cdfs.count_at(36_000.0), 1.0);
        assert_eq!(cdfs.time_at(36_000.0), 1.0);
    }

    #[test]
    fn single_event_steps_to_one() {
        let cdfs = duration_distributions(&[1234.0]).unwrap();
        assert_eq!(cdfs.count, vec![(1234.0, 1.0)]);
        assert_eq!(cdfs.time_weighted, vec![(1234.0, 1.0)]);
    }

    #[test]
    fn empty_and_nonpositive_are_errors() {
        assert!(duration_distributions(&[]).is_err());
        assert!(duration_distributions(&[0.0]).is_err());
        assert!(duration_distributions(&[-5.0]).is_err());
    }

    #[test]
    fn heavy_tail_mass() {
        // 7% of events at >=5h hold ~90% of the time
        let mut d = vec![1800.0; 930];
        d.extend(vec![216_000.0; 70]);
        let cdfs = duration_distributions(&d).unwrap();
        assert!(cdfs.count_at(18_000.0) >= 0.90);
        assert!(cdfs.time_at(18_000.0) <= 0.10);
    }

    #[test]
    fn cdf_properties_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(1..200);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..1e6)).collect();
            let cdfs = duration_distributions(&d).unwrap();
            for cdf in [&cdfs.count, &cdfs.time_weighted] {
                assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-9);
                for w in cdf.windows(2) {
                    assert!(w[0].0 < w[1].0);
                    assert!(w[0].1 <= w[1].1 + 1e-12);
                }
            }
            // the time-weighted CDF never exceeds the count CDF: weighting
            // by duration shifts mass toward longer events
            for (i, (d_i, c_i)) in cdfs.count.iter().enumerate() {
                let t_i = cdfs.time_weighted[i].1;
                assert!(t_i <= c_i + 1e-9, "at {d_i}: time {t_i} > count {c_i}");
            }
        }
    }
}
