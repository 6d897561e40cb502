//! File ingestion and emission: observation streams, routing tables,
//! observer metadata, allocation tables, and detector event files.
//!
//! Ingest never drops silently: every reader returns an `IngestReport` whose
//! counts satisfy read = kept + dropped, with a per-reason histogram.

pub mod report;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::analysis::{RoutedPrefix, RoutingTable};
use crate::detect::{CountryPeninsulaEvent, IslandEvent, PeninsulaEvent};
use crate::error::{Error, Result};
use crate::model::{BlockId, Observation, ObservationState, TimeBinning, VantagePoint};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub records_read: u64,
    pub records_kept: u64,
    pub drop_reasons: BTreeMap<String, u64>,
}

impl IngestReport {
    pub fn records_dropped(&self) -> u64 {
        self.drop_reasons.values().sum()
    }

    fn keep(&mut self) {
        self.records_read += 1;
        self.records_kept += 1;
    }

    fn drop(&mut self, reason: impl Into<String>) {
        self.records_read += 1;
        *self.drop_reasons.entry(reason.into()).or_insert(0) += 1;
    }
}

/// Observation interchange format: tab-separated
/// `time_unix  vp_id  block  state` with state in {U, D, ?};
/// `#`-prefixed lines are comments.
pub fn read_observations_tsv<R: BufRead>(r: R) -> Result<(Vec<Observation>, IngestReport)> {
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_obs_line(line) {
            Ok(o) => {
                report.keep();
                out.push(o);
            }
            Err(e) => report.drop(e.to_string()),
        }
    }
    Ok((out, report))
}

fn parse_obs_line(line: &str) -> Result<Observation> {
    let mut f = line.split('\t');
    let (time, vp, block, state) = match (f.next(), f.next(), f.next(), f.next(), f.next()) {
        (Some(t), Some(v), Some(b), Some(s), None) => (t, v, b, s),
        _ => return Err(Error::parse("expected 4 tab-separated columns")),
    };
    Ok(Observation {
        time: time
            .parse()
            .map_err(|_| Error::parse(format!("bad time {time:?}")))?,
        vp: vp.to_string(),
        block: block.parse()?,
        state: ObservationState::from_token(state)?,
    })
}

pub fn write_observations_tsv<W: Write>(obs: &[Observation], mut w: W) -> Result<()> {
    for o in obs {
        writeln!(w, "{}\t{}\t{}\t{}", o.time, o.vp, o.block, o.state.token())?;
    }
    Ok(())
}

/// One Atlas-style ping result line: the probe measured `dst_addr` at
/// `timestamp` with a list of per-packet results.
#[derive(Debug, Deserialize)]
struct AtlasPing {
    prb_id: u64,
    timestamp: i64,
    dst_addr: String,
    result: Vec<AtlasPacket>,
}

#[derive(Debug, Deserialize)]
struct AtlasPacket {
    #[serde(default)]
    rtt: Option<f64>,
    #[serde(default, rename = "x")]
    _timeout: Option<String>,
}

/// Atlas-style ping JSON lines: each probe result becomes one observation,
/// up when any packet answered, down when all failed.
pub fn read_observations_atlas_json<R: BufRead>(r: R) -> Result<(Vec<Observation>, IngestReport)> {
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ping: AtlasPing = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                report.drop(format!("bad json: {e}"));
                continue;
            }
        };
        let addr = match crate::model::parse_addr(&ping.dst_addr) {
            Ok(a) => a,
            Err(_) => {
                report.drop("bad dst_addr");
                continue;
            }
        };
        if ping.result.is_empty() {
            report.drop("empty result list");
            continue;
        }
        let up = ping.result.iter().any(|p| p.rtt.is_some());
        report.keep();
        out.push(Observation {
            time: ping.timestamp,
            vp: format!("atlas-{}", ping.prb_id),
            block: BlockId::containing(addr),
            state: if up {
                ObservationState::Up
            } else {
                ObservationState::Down
            },
        });
    }
    Ok((out, report))
}

/// Routing table: text lines `prefix/len<TAB>origin_asn` (any whitespace
/// accepted). Duplicate (prefix, len) keeps the first entry and counts a
/// conflict.
pub fn read_routing_table<R: BufRead>(r: R) -> Result<(RoutingTable, IngestReport)> {
    let mut table = RoutingTable::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split_whitespace();
        let parsed: Result<RoutedPrefix> = match (f.next(), f.next(), f.next()) {
            (Some(p), Some(asn), None) => (|| {
                Ok(RoutedPrefix {
                    prefix: p.parse()?,
                    asn: asn
                        .parse()
                        .map_err(|_| Error::parse(format!("bad asn {asn:?}")))?,
                })
            })(),
            _ => Err(Error::parse("expected `prefix/len asn`")),
        };
        match parsed {
            Ok(entry) => {
                if table.insert(entry) {
                    report.keep();
                } else {
                    report.drop("duplicate prefix (first entry kept)");
                }
            }
            Err(e) => report.drop(e.to_string()),
        }
    }
    Ok((table, report))
}

pub fn write_routing_table<W: Write>(entries: &[RoutedPrefix], mut w: W) -> Result<()> {
    for e in entries {
        writeln!(w, "{}\t{}", e.prefix, e.asn)?;
    }
    Ok(())
}

/// Observer metadata: `vp_id<TAB>country<TAB>home_block`, with `??` for an
/// unknown country and `-` for no home block.
pub fn read_vp_metadata<R: BufRead>(r: R) -> Result<(Vec<VantagePoint>, IngestReport)> {
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        match (f.next(), f.next(), f.next()) {
            (Some(id), Some(country), Some(home)) => {
                let home_block = if home == "-" {
                    None
                } else {
                    match home.parse() {
                        Ok(b) => Some(b),
                        Err(e) => {
                            report.drop(format!("bad home block: {e}"));
                            continue;
                        }
                    }
                };
                report.keep();
                out.push(VantagePoint {
                    vp_id: id.to_string(),
                    country: (country != "??").then(|| country.to_string()),
                    home_block,
                });
            }
            _ => report.drop("expected 3 tab-separated columns"),
        }
    }
    Ok((out, report))
}

pub fn write_vp_metadata<W: Write>(vps: &[VantagePoint], mut w: W) -> Result<()> {
    for vp in vps {
        writeln!(
            w,
            "{}\t{}\t{}",
            vp.vp_id,
            vp.country.as_deref().unwrap_or("??"),
            vp.home_block
                .map_or_else(|| "-".to_string(), |b| b.to_string())
        )?;
    }
    Ok(())
}

/// Allocation table: CSV lines `category,entity,addresses`; the special
/// entity `TOTAL` carries the category denominator.
#[derive(Debug, Clone, Default)]
pub struct AllocationTable {
    pub categories: BTreeMap<String, (BTreeMap<String, u64>, Option<u64>)>,
}

pub fn read_allocations_csv<R: BufRead>(r: R) -> Result<(AllocationTable, IngestReport)> {
    let mut out = AllocationTable::default();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            report.drop("expected `category,entity,addresses`");
            continue;
        }
        let Ok(count) = parts[2].parse::<u64>() else {
            report.drop(format!("bad count {:?}", parts[2]));
            continue;
        };
        report.keep();
        let slot = out.categories.entry(parts[0].to_string()).or_default();
        if parts[1] == "TOTAL" {
            slot.1 = Some(count);
        } else {
            slot.0.insert(parts[1].to_string(), count);
        }
    }
    Ok((out, report))
}

/// Peninsula events: `block  start_unix  duration_s  up_set(csv)
/// observed_set(csv)`, ordered by block then start.
pub fn write_peninsula_events<W: Write>(
    events: &[PeninsulaEvent],
    binning: TimeBinning,
    mut w: W,
) -> Result<()> {
    for ev in events {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            ev.block,
            binning.round_start(ev.start_round),
            ev.rounds() * binning.window_s,
            csv(&ev.up_set),
            csv(&ev.observed_set),
        )?;
    }
    Ok(())
}

fn csv(set: &std::collections::BTreeSet<String>) -> String {
    set.iter().cloned().collect::<Vec<_>>().join(",")
}

pub fn read_peninsula_events<R: BufRead>(
    r: R,
    binning: TimeBinning,
) -> Result<(Vec<PeninsulaEvent>, IngestReport)> {
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            report.drop("expected 5 tab-separated columns");
            continue;
        }
        let parsed = (|| -> Result<PeninsulaEvent> {
            let block: BlockId = f[0].parse()?;
            let start: i64 = f[1]
                .parse()
                .map_err(|_| Error::parse(format!("bad start {:?}", f[1])))?;
            let duration: i64 = f[2]
                .parse()
                .map_err(|_| Error::parse(format!("bad duration {:?}", f[2])))?;
            if duration <= 0 {
                return Err(Error::parse("duration must be positive"));
            }
            Ok(PeninsulaEvent {
                block,
                start_round: binning.bin_time(start),
                end_round: binning.bin_time(start + duration - 1),
                up_set: f[3]
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
                observed_set: f[4]
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            })
        })();
        match parsed {
            Ok(ev) => {
                report.keep();
                out.push(ev);
            }
            Err(e) => report.drop(e.to_string()),
        }
    }
    Ok((out, report))
}

/// Event durations in seconds straight from an event file (column 3),
/// for duration-distribution analysis.
pub fn read_event_durations<R: BufRead>(r: R) -> Result<(Vec<f64>, IngestReport)> {
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split('\t').nth(2).and_then(|d| d.parse::<f64>().ok()) {
            Some(d) if d > 0.0 => {
                report.keep();
                out.push(d);
            }
            _ => report.drop("bad duration column"),
        }
    }
    Ok((out, report))
}

/// Island events: `vp  start_unix  duration_s  min_reachable_fraction
/// address_island`.
pub fn write_island_events<W: Write>(
    events: &[IslandEvent],
    binning: TimeBinning,
    mut w: W,
) -> Result<()> {
    for ev in events {
        writeln!(
            w,
            "{}\t{}\t{}\t{:.6}\t{}",
            ev.vp,
            binning.round_start(ev.start_round),
            ev.rounds() * binning.window_s,
            ev.min_reachable_fraction,
            if ev.address_island { 1 } else { 0 },
        )?;
    }
    Ok(())
}

/// Country events: `block  start_unix  duration_s  country`.
pub fn write_country_events<W: Write>(
    events: &[CountryPeninsulaEvent],
    binning: TimeBinning,
    mut w: W,
) -> Result<()> {
    for ev in events {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            ev.block,
            binning.round_start(ev.start_round),
            (ev.end_round - ev.start_round + 1) * binning.window_s,
            ev.country,
        )?;
    }
    Ok(())
}
