//! Routing-table storage and longest-prefix match over a binary trie.

use serde::{Deserialize, Serialize};

use crate::model::{BlockId, Prefix};

/// One routing-table entry: prefix plus origin ASN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoutedPrefix {
    pub prefix: Prefix,
    pub asn: u32,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: [Option<Box<TrieNode>>; 2],
    entry: Option<u32>, // index into entries
}

/// Routed prefixes organized for longest-prefix lookup. Inserting a
/// duplicate (prefix, length) keeps the first entry and counts a conflict.
#[derive(Debug, Clone, Default)]
pub struct RoutingTable {
    root: TrieNode,
    entries: Vec<RoutedPrefix>,
    conflicts: usize,
}

impl RoutingTable {
    pub fn new() -> Self {
        RoutingTable::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = RoutedPrefix>) -> Self {
        let mut t = RoutingTable::new();
        for e in entries {
            t.insert(e);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Duplicate (prefix, length) insertions observed so far.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    pub fn entries(&self) -> &[RoutedPrefix] {
        &self.entries
    }

    /// Returns false when the slot was already occupied (first entry wins).
    pub fn insert(&mut self, entry: RoutedPrefix) -> bool {
        let mut node = &mut self.root;
        for i in 0..entry.prefix.length() {
            let bit = ((entry.prefix.base() >> (31 - i)) & 1) as usize;
            node = node.children[bit].get_or_insert_with(Box::default);
        }
        if node.entry.is_some() {
            self.conflicts += 1;
            return false;
        }
        node.entry = Some(self.entries.len() as u32);
        self.entries.push(entry);
        true
    }

    /// The longest routed prefix covering an address.
    pub fn lookup_addr(&self, addr: u32) -> Option<RoutedPrefix> {
        let mut best = self.root.entry;
        let mut node = &self.root;
        for i in 0..32 {
            let bit = ((addr >> (31 - i)) & 1) as usize;
            match &node.children[bit] {
                Some(child) => {
                    node = child;
                    if node.entry.is_some() {
                        best = node.entry;
                    }
                }
                None => break,
            }
        }
        best.map(|i| self.entries[i as usize])
    }

    /// Longest prefix covering a /24 block's base address.
    pub fn lookup_block(&self, block: BlockId) -> Option<RoutedPrefix> {
        self.lookup_addr(block.base_addr())
    }
}

/// The longest entry whose prefix covers the block; none if uncovered.
pub fn lpm(table: &RoutingTable, block: BlockId) -> Option<RoutedPrefix> {
    table.lookup_block(block)
}

/// Reference implementation for oracle testing: scan every entry.
pub fn lpm_linear_scan(entries: &[RoutedPrefix], addr: u32) -> Option<RoutedPrefix> {
    entries
        .iter()
        .filter(|e| e.prefix.covers_addr(addr))
        .max_by_key(|e| e.prefix.length())
        .copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn entry(p: &str, asn: u32) -> RoutedPrefix {
        RoutedPrefix {
            prefix: p.parse().unwrap(),
            asn,
        }
    }

    #[test]
    fn longest_wins() {
        let t = RoutingTable::from_entries([entry("10.0.0.0/8", 1), entry("10.1.0.0/16", 2)]);
        let hit = lpm(&t, "10.1.2.0/24".parse().unwrap()).unwrap();
        assert_eq!(hit.asn, 2);
        assert_eq!(hit.prefix.length(), 16);
        let hit = lpm(&t, "10.2.2.0/24".parse().unwrap()).unwrap();
        assert_eq!(hit.asn, 1);
        assert!(lpm(&t, "11.0.0.0/24".parse().unwrap()).is_none());
    }

    #[test]
    fn duplicate_keeps_first_and_counts() {
        let mut t = RoutingTable::new();
        assert!(t.insert(entry("10.0.0.0/8", 1)));
        assert!(!t.insert(entry("10.0.0.0/8", 7)));
        assert_eq!(t.conflicts(), 1);
        assert_eq!(t.len(), 1);
        assert_eq!(lpm(&t, "10.0.0.0/24".parse().unwrap()).unwrap().asn, 1);
    }

    #[test]
    fn default_route_and_host_routes() {
        let t = RoutingTable::from_entries([entry("0.0.0.0/0", 1), entry("192.0.2.0/24", 2)]);
        assert_eq!(t.lookup_addr(0x01020304).unwrap().asn, 1);
        assert_eq!(t.lookup_addr(0xc0000201).unwrap().asn, 2);
    }

    #[test]
    fn trie_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut entries = Vec::new();
        for _ in 0..5000 {
            let length = rng.gen_range(8..=24u8);
            let base = (rng.gen::<u32>() >> (32 - length)) << (32 - length);
            if let Ok(prefix) = Prefix::new(base, length) {
                entries.push(RoutedPrefix {
                    prefix,
                    asn: rng.gen_range(1..65000),
                });
            }
        }
        let table = RoutingTable::from_entries(entries.iter().copied());
        // dedup the reference set the same way: first entry wins
        let mut seen = std::collections::HashSet::new();
        let reference: Vec<RoutedPrefix> = entries
            .iter()
            .filter(|e| seen.insert(e.prefix))
            .copied()
            .collect();
        for _ in 0..5000 {
            let addr = rng.gen::<u32>();
            assert_eq!(table.lookup_addr(addr), lpm_linear_scan(&reference, addr));
        }
    }
}
