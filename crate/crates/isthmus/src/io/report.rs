//! Report emission: CSV with self-describing headers and gnuplot-style
//! whitespace-column data for the figure-shaped outputs. Every report
//! begins with comment lines echoing the effective configuration so a run
//! can be reproduced from its outputs.

use std::io::Write;

use crate::analysis::{
    BlockTimeFractions, DurationCdfs, HeatmapCell, SimilarityMatrix, SubsetConvergence,
    FRACTION_BIN_EDGES,
};
use crate::error::Result;

/// Comment header lines: tool tag plus the effective configuration.
pub fn write_header<W: Write>(mut w: W, what: &str, config_echo: &str) -> Result<()> {
    writeln!(w, "# isthmus {what}")?;
    for line in config_echo.lines() {
        writeln!(w, "# config: {line}")?;
    }
    Ok(())
}

pub fn write_fractions_csv<W: Write>(
    mut w: W,
    f: &BlockTimeFractions,
    config_echo: &str,
) -> Result<()> {
    write_header(&mut w, "block-time fractions", config_echo)?;
    writeln!(w, "class,fraction,measured_cells")?;
    writeln!(w, "all_up,{:.9},{}", f.all_up, f.measured_cells)?;
    writeln!(w, "all_down,{:.9},{}", f.all_down, f.measured_cells)?;
    writeln!(w, "disagreement,{:.9},{}", f.disagreement, f.measured_cells)?;
    Ok(())
}

/// Per-k convergence: gnuplot columns
/// `k n_subsets mean_all_down sd mean_disagreement sd mean_all_up sd`.
pub fn write_convergence_dat<W: Write>(
    mut w: W,
    per_k: &[SubsetConvergence],
    config_echo: &str,
) -> Result<()> {
    write_header(&mut w, "vp-subset convergence", config_echo)?;
    writeln!(w, "# k n_subsets mean_all_down sd_all_down mean_disagreement sd_disagreement mean_all_up sd_all_up")?;
    for conv in per_k {
        writeln!(
            w,
            "{} {} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
            conv.k,
            conv.per_subset.len(),
            conv.mean(|f| f.all_down),
            conv.stddev(|f| f.all_down),
            conv.mean(|f| f.disagreement),
            conv.stddev(|f| f.disagreement),
            conv.mean(|f| f.all_up),
            conv.stddev(|f| f.all_up),
        )?;
    }
    Ok(())
}

/// Every subset's fractions, for distribution-style plots: gnuplot columns
/// `k subset_mask all_down disagreement all_up`.
pub fn write_convergence_points<W: Write>(
    mut w: W,
    per_k: &[SubsetConvergence],
    config_echo: &str,
) -> Result<()> {
    write_header(&mut w, "vp-subset fraction points", config_echo)?;
    writeln!(w, "# k subset_mask all_down disagreement all_up")?;
    for conv in per_k {
        for (mask, f) in &conv.per_subset {
            writeln!(
                w,
                "{} {:#x} {:.9} {:.9} {:.9}",
                conv.k, mask, f.all_down, f.disagreement, f.all_up
            )?;
        }
    }
    Ok(())
}

/// Duration CDFs: gnuplot columns `duration_s count_cdf time_weighted_cdf`.
pub fn write_durations_dat<W: Write>(
    mut w: W,
    cdfs: &DurationCdfs,
    config_echo: &str,
) -> Result<()> {
    write_header(&mut w, "event duration distributions", config_echo)?;
    writeln!(w, "# duration_s count_cdf time_weighted_cdf")?;
    for (i, (d, c)) in cdfs.count.iter().enumerate() {
        writeln!(w, "{} {:.9} {:.9}", d, c, cdfs.time_weighted[i].1)?;
    }
    Ok(())
}

/// Size heat map: gnuplot columns
/// `prefix_length fraction_bin fraction_bin_label count blocktime_s`.
pub fn write_sizes_dat<W: Write>(mut w: W, cells: &[HeatmapCell], config_echo: &str) -> Result<()> {
    write_header(&mut w, "peninsula size heat map", config_echo)?;
    let labels: Vec<String> = FRACTION_BIN_EDGES
        .iter()
        .map(|e| {
            if *e >= 1.0 {
                "<1.0".to_string()
            } else {
                format!("<={e}")
            }
        })
        .chain(std::iter::once("=1.0".to_string()))
        .collect();
    writeln!(w, "# fraction bins: {}", labels.join(" | "))?;
    writeln!(
        w,
        "# prefix_length fraction_bin fraction_bin_label count blocktime_s"
    )?;
    for c in cells {
        writeln!(
            w,
            "{} {} {} {} {:.0}",
            c.prefix_length, c.fraction_bin, labels[c.fraction_bin], c.count, c.blocktime_s
        )?;
    }
    Ok(())
}

pub fn write_similarity_csv<W: Write>(
    mut w: W,
    matrix: &SimilarityMatrix,
    config_echo: &str,
) -> Result<()> {
    write_header(&mut w, "site similarity", config_echo)?;
    writeln!(w, "vp_a,vp_b,p1,p0,dstar,similarity")?;
    for ((a, b), c) in &matrix.pairs {
        match c.similarity() {
            Some(s) => writeln!(w, "{a},{b},{},{},{},{:.6}", c.p1, c.p0, c.dstar, s)?,
            None => writeln!(w, "{a},{b},{},{},{},undefined", c.p1, c.p0, c.dstar)?,
        }
    }
    Ok(())
}
