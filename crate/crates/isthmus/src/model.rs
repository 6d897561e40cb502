//! Shared domain types: /24 blocks, routed prefixes, vantage points,
//! observations, and time binning.
//!
//! Everything here is an immutable value type, safe to share across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An IPv4 /24 measurement block, stored as the base address shifted right
/// by 8 bits (so the value is always below 2^24).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BlockId {
    prefix24: u32,
}

impl BlockId {
    pub fn new(prefix24: u32) -> Result<Self> {
        if prefix24 >= 1 << 24 {
            return Err(Error::parse(format!(
                "block value {prefix24:#x} exceeds 24 bits"
            )));
        }
        Ok(BlockId { prefix24 })
    }

    /// The /24 containing an arbitrary IPv4 address.
    pub fn containing(addr: u32) -> Self {
        BlockId {
            prefix24: addr >> 8,
        }
    }

    pub fn prefix24(&self) -> u32 {
        self.prefix24
    }

    /// Base address of the block (last octet zero).
    pub fn base_addr(&self) -> u32 {
        self.prefix24 << 8
    }

    /// Next consecutive /24. Wraps within 24 bits.
    pub fn offset(&self, n: u32) -> Result<Self> {
        BlockId::new(self.prefix24 + n)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.base_addr();
        write!(
            f,
            "{}.{}.{}.0/24",
            a >> 24,
            (a >> 16) & 0xff,
            (a >> 8) & 0xff
        )
    }
}

impl FromStr for BlockId {
    type Err = Error;

    /// Accepts dotted-quad form with an optional `/24` suffix
    /// (`80.245.176.0/24`), or the hex form used in dataset names:
    /// 8 hex digits for the base address (`50f5b000`, low octet ignored)
    /// or 6 hex digits for the 24-bit value itself (`50f5b0`).
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::parse("empty block"));
        }
        if !text.contains('.') {
            let ok_hex = text.chars().all(|c| c.is_ascii_hexdigit());
            if ok_hex && text.len() == 8 {
                let addr = u32::from_str_radix(text, 16)
                    .map_err(|_| Error::parse(format!("bad hex block {text:?}")))?;
                return Ok(BlockId::containing(addr));
            }
            if ok_hex && text.len() == 6 {
                let p = u32::from_str_radix(text, 16)
                    .map_err(|_| Error::parse(format!("bad hex block {text:?}")))?;
                return BlockId::new(p);
            }
            return Err(Error::parse(format!("unrecognized block {text:?}")));
        }
        let quad = text.strip_suffix("/24").unwrap_or(text);
        let addr = parse_dotted_quad(quad)?;
        if addr & 0xff != 0 {
            return Err(Error::parse(format!(
                "block {text:?} has nonzero host octet"
            )));
        }
        if text.contains('/') && !text.ends_with("/24") {
            return Err(Error::parse(format!("block {text:?} must be a /24")));
        }
        Ok(BlockId::containing(addr))
    }
}

impl TryFrom<String> for BlockId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BlockId> for String {
    fn from(b: BlockId) -> String {
        b.to_string()
    }
}

fn parse_dotted_quad(text: &str) -> Result<u32> {
    let mut octets = [0u32; 4];
    let mut n = 0;
    for part in text.split('.') {
        if n == 4 {
            return Err(Error::parse(format!(
                "address {text:?} has too many octets"
            )));
        }
        octets[n] = part
            .parse::<u32>()
            .ok()
            .filter(|v| *v <= 255)
            .ok_or_else(|| Error::parse(format!("bad octet {part:?} in {text:?}")))?;
        n += 1;
    }
    if n != 4 {
        return Err(Error::parse(format!("address {text:?} has too few octets")));
    }
    Ok((octets[0] << 24) | (octets[1] << 16) | (octets[2] << 8) | octets[3])
}

/// Format an IPv4 address as dotted quad.
pub fn format_addr(addr: u32) -> String {
    format!(
        "{}.{}.{}.{}",
        addr >> 24,
        (addr >> 16) & 0xff,
        (addr >> 8) & 0xff,
        addr & 0xff
    )
}

/// Parse a dotted-quad IPv4 address.
pub fn parse_addr(text: &str) -> Result<u32> {
    parse_dotted_quad(text.trim())
}

/// A routed IPv4 prefix. All bits of `base` below `32 - length` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prefix {
    base: u32,
    length: u8,
}

impl Prefix {
    pub fn new(base: u32, length: u8) -> Result<Self> {
        if length > 32 {
            return Err(Error::parse(format!("prefix length {length} out of range")));
        }
        if base & !Self::mask(length) != 0 {
            return Err(Error::parse(format!(
                "prefix base {} has bits set below /{length}",
                format_addr(base)
            )));
        }
        Ok(Prefix { base, length })
    }

    fn mask(length: u8) -> u32 {
        if length == 0 {
            0
        } else {
            u32::MAX << (32 - length)
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn length(&self) -> u8 {
        self.length
    }

    pub fn covers_addr(&self, addr: u32) -> bool {
        addr & Self::mask(self.length) == self.base
    }

    pub fn covers_block(&self, block: BlockId) -> bool {
        self.covers_addr(block.base_addr())
    }

    /// Number of /24 blocks spanned (1 for /24 and longer).
    pub fn block_span(&self) -> u64 {
        if self.length >= 24 {
            1
        } else {
            1u64 << (24 - self.length)
        }
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", format_addr(self.base), self.length)
    }
}

impl FromStr for Prefix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (addr, len) = text
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::parse(format!("prefix {text:?} missing /length")))?;
        let base = parse_dotted_quad(addr)?;
        let length: u8 = len
            .parse()
            .map_err(|_| Error::parse(format!("bad prefix length {len:?}")))?;
        Prefix::new(base, length)
    }
}

impl TryFrom<String> for Prefix {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Prefix> for String {
    fn from(p: Prefix) -> String {
        p.to_string()
    }
}

/// An observer host issuing reachability probes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VantagePoint {
    pub vp_id: String,
    /// ISO-3166 alpha-2 code; `None` when unknown.
    pub country: Option<String>,
    pub home_block: Option<BlockId>,
}

/// One reachability sample. `Unmeasured` never counts toward the set of
/// valid observations for a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservationState {
    Up,
    Down,
    Unmeasured,
}

impl ObservationState {
    pub fn token(&self) -> &'static str {
        match self {
            ObservationState::Up => "U",
            ObservationState::Down => "D",
            ObservationState::Unmeasured => "?",
        }
    }

    pub fn from_token(tok: &str) -> Result<Self> {
        match tok {
            "U" => Ok(ObservationState::Up),
            "D" => Ok(ObservationState::Down),
            "?" => Ok(ObservationState::Unmeasured),
            other => Err(Error::parse(format!("unknown state token {other:?}"))),
        }
    }
}

/// One (vantage point, block, time, state) reachability sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub time: i64,
    pub vp: String,
    pub block: BlockId,
    pub state: ObservationState,
}

/// Fixed wall-clock bins aligned to a configurable epoch. Observations from
/// different observers are compared within the same bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBinning {
    pub window_s: i64,
    pub epoch: i64,
}

impl Default for TimeBinning {
    fn default() -> Self {
        TimeBinning {
            window_s: 660,
            epoch: 0,
        }
    }
}

impl TimeBinning {
    pub fn new(window_s: i64, epoch: i64) -> Result<Self> {
        if window_s <= 0 {
            return Err(Error::config(format!(
                "binning window {window_s} must be positive"
            )));
        }
        Ok(TimeBinning { window_s, epoch })
    }

    /// Round index containing `time`. Monotone nondecreasing in `time`,
    /// constant within a window; negative times yield negative indices.
    pub fn bin_time(&self, time: i64) -> i64 {
        (time - self.epoch).div_euclid(self.window_s)
    }

    /// Start time of round `index`.
    pub fn round_start(&self, index: i64) -> i64 {
        self.epoch + index * self.window_s
    }
}

/// Convenience free function mirroring `TimeBinning::bin_time`.
pub fn bin_time(time: i64, binning: TimeBinning) -> i64 {
    binning.bin_time(time)
}

pub fn parse_block(text: &str) -> Result<BlockId> {
    text.parse()
}

pub fn format_block(block: BlockId) -> String {
    block.to_string()
}

/// How one round of observations for one block splits across observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundKind {
    AllUp,
    AllDown,
    Disagreement,
    Unmeasured,
}

/// Classified round: the up-set and observed-set for one (block, round),
/// with the kind derived from them so the class invariants hold by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundClass {
    up_set: BTreeSet<String>,
    observed_set: BTreeSet<String>,
}

impl RoundClass {
    pub fn new(up_set: BTreeSet<String>, observed_set: BTreeSet<String>) -> Result<Self> {
        if !up_set.is_subset(&observed_set) {
            return Err(Error::data("up_set must be a subset of observed_set"));
        }
        Ok(RoundClass {
            up_set,
            observed_set,
        })
    }

    pub fn kind(&self) -> RoundKind {
        if self.observed_set.is_empty() {
            RoundKind::Unmeasured
        } else if self.up_set.is_empty() {
            RoundKind::AllDown
        } else if self.up_set.len() == self.observed_set.len() {
            RoundKind::AllUp
        } else {
            RoundKind::Disagreement
        }
    }

    pub fn up_set(&self) -> &BTreeSet<String> {
        &self.up_set
    }

    pub fn observed_set(&self) -> &BTreeSet<String> {
        &self.observed_set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_time_examples() {
        let b = TimeBinning::default();
        assert_eq!(b.bin_time(660), 1); // boundary lands in the next bin
        assert_eq!(b.bin_time(659), 0);
        // frozen from the integer-division oracle: 1508630032 div 660
        assert_eq!(b.bin_time(1_508_630_032), 2_285_803);
        assert_eq!(b.bin_time(0), 0);
        assert_eq!(b.bin_time(-1), -1);
    }

    #[test]
    fn bin_time_monotone_and_constant_within_window() {
        let b = TimeBinning::new(300, 120).unwrap();
        let mut last = i64::MIN;
        for t in -1000..2000 {
            let r = b.bin_time(t);
            assert!(r >= last);
            last = r;
            assert_eq!(b.bin_time(b.round_start(r)), r);
            assert_eq!(b.bin_time(b.round_start(r) + 299), r);
        }
    }

    #[test]
    fn block_parse_formats() {
        let b: BlockId = "80.245.176.0/24".parse().unwrap();
        assert_eq!(b.prefix24(), 0x50f5b0);
        let hex: BlockId = "50f5b000".parse().unwrap();
        assert_eq!(hex, b);
        let short: BlockId = "50f5b0".parse().unwrap();
        assert_eq!(short, b);
        assert_eq!(format_block(b), "80.245.176.0/24");

        let rt: BlockId = "1.2.3.0/24".parse().unwrap();
        assert_eq!(format_block(rt).parse::<BlockId>().unwrap(), rt);
    }

    #[test]
    fn block_parse_rejects_malformed() {
        assert!("1.2.3.4.5".parse::<BlockId>().is_err());
        assert!("1.2.3.7".parse::<BlockId>().is_err()); // nonzero host octet
        assert!("1.2.3.0/16".parse::<BlockId>().is_err());
        assert!("hello".parse::<BlockId>().is_err());
        assert!("".parse::<BlockId>().is_err());
        let err = "1.2.999.0".parse::<BlockId>().unwrap_err().to_string();
        assert!(
            err.contains("999"),
            "error should name the offending token: {err}"
        );
    }

    #[test]
    fn prefix_invariants() {
        assert!(Prefix::new(0x0a000000, 8).is_ok());
        assert!(Prefix::new(0x0a000001, 8).is_err()); // low bits set
        assert!(Prefix::new(0, 33).is_err());
        let p: Prefix = "10.1.0.0/16".parse().unwrap();
        assert!(p.covers_block("10.1.2.0/24".parse().unwrap()));
        assert!(!p.covers_block("10.2.2.0/24".parse().unwrap()));
        let all: Prefix = "0.0.0.0/0".parse().unwrap();
        assert!(all.covers_addr(0xffffffff));
        assert_eq!(p.block_span(), 256);
    }

    proptest::proptest! {
        #[test]
        fn block_text_round_trips(v in 0u32..(1 << 24)) {
            let block = BlockId::new(v).unwrap();
            let text = format_block(block);
            proptest::prop_assert_eq!(parse_block(&text).unwrap(), block);
            // hex dataset form round-trips too
            let hex = format!("{:08x}", block.base_addr());
            proptest::prop_assert_eq!(parse_block(&hex).unwrap(), block);
        }

        #[test]
        fn binning_is_monotone(
            a in -1_000_000i64..2_000_000_000,
            delta in 0i64..1_000_000,
            window in 1i64..100_000,
            epoch in -10_000i64..10_000,
        ) {
            let binning = TimeBinning::new(window, epoch).unwrap();
            let (ra, rb) = (binning.bin_time(a), binning.bin_time(a + delta));
            proptest::prop_assert!(ra <= rb);
            // constant within the window containing a
            let start = binning.round_start(ra);
            proptest::prop_assert!(start <= a && a < start + window);
            proptest::prop_assert_eq!(binning.bin_time(start), ra);
            proptest::prop_assert_eq!(binning.bin_time(start + window - 1), ra);
        }
    }

    #[test]
    fn round_class_partition() {
        let set = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let c = RoundClass::new(set(&["a"]), set(&["a", "b"])).unwrap();
        assert_eq!(c.kind(), RoundKind::Disagreement);
        let c = RoundClass::new(set(&["a", "b"]), set(&["a", "b"])).unwrap();
        assert_eq!(c.kind(), RoundKind::AllUp);
        let c = RoundClass::new(set(&[]), set(&["a"])).unwrap();
        assert_eq!(c.kind(), RoundKind::AllDown);
        let c = RoundClass::new(set(&[]), set(&[])).unwrap();
        assert_eq!(c.kind(), RoundKind::Unmeasured);
        assert!(RoundClass::new(set(&["x"]), set(&["y"])).is_err());
    }
}
