//! Traceroute halt-location classification: does a failed trace stop at the
//! target's AS and routed prefix, or before reaching them?

use serde::Serialize;

use crate::analysis::routing::RoutingTable;
use crate::error::{Error, Result};
use crate::model::Prefix;
use crate::sim::{HaltKind, TracerouteRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltPosition {
    At,
    Before,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaltClass {
    pub as_position: HaltPosition,
    pub prefix_position: HaltPosition,
    /// Last responsive hop had no covering routed prefix; classified Before
    /// with this annotation.
    pub unmapped: bool,
}

/// Classify a single failed trace against its target AS and prefix via
/// longest-prefix match of the last responsive hop. Gap halts are discarded
/// (`None`); calling this on a successful trace is a usage error.
pub fn halt_classification(
    trace: &TracerouteRecord,
    target_asn: u32,
    target_prefix: Prefix,
    table: &RoutingTable,
) -> Result<Option<HaltClass>> {
    match trace.halt {
        HaltKind::Success => return Err(Error::data("halt_classification expects a failed trace")),
        HaltKind::Gap => return Ok(None),
        HaltKind::Unreachable | HaltKind::Loop => {}
    }
    let mapped = trace.last_hop().and_then(|hop| table.lookup_addr(hop.addr));
    let class = match mapped {
        Some(entry) => HaltClass {
            as_position: if entry.asn == target_asn {
                HaltPosition::At
            } else {
                HaltPosition::Before
            },
            prefix_position: if entry.prefix == target_prefix {
                HaltPosition::At
            } else {
                HaltPosition::Before
            },
            unmapped: false,
        },
        None => HaltClass {
            as_position: HaltPosition::Before,
            prefix_position: HaltPosition::Before,
            unmapped: true,
        },
    };
    Ok(Some(class))
}

/// Bulk classification against targets derived from each trace's
/// destination block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HaltSummary {
    pub at_as: u64,
    pub before_as: u64,
    pub at_prefix: u64,
    pub before_prefix: u64,
    pub unmapped: u64,
    pub discarded_gaps: u64,
    pub successes: u64,
    /// Failed traces whose destination has no routed prefix: no target to
    /// classify against.
    pub unrouted_targets: u64,
}

pub fn classify_halts(traces: &[TracerouteRecord], table: &RoutingTable) -> Result<HaltSummary> {
    let mut out = HaltSummary::default();
    for trace in traces {
        if trace.halt == HaltKind::Success {
            out.successes += 1;
            continue;
        }
        let Some(target) = table.lookup_block(trace.dst_block()) else {
            out.unrouted_targets += 1;
            continue;
        };
        match halt_classification(trace, target.asn, target.prefix, table)? {
            None => out.discarded_gaps += 1,
            Some(class) => {
                match class.as_position {
                    HaltPosition::At => out.at_as += 1,
                    HaltPosition::Before => out.before_as += 1,
                }
                match class.prefix_position {
                    HaltPosition::At => out.at_prefix += 1,
                    HaltPosition::Before => out.before_prefix += 1,
                }
                if class.unmapped {
                    out.unmapped += 1;
                }
            }
        }
    }
    Ok(out)
}
