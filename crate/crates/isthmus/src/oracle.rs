//! Ground-truth model: a bidirectional-reachability graph over blocks, its
//! connected components, the majority core, and per-node truth labels.
//!
//! Edges are undirected because reachability is defined bidirectionally;
//! strong connectivity therefore coincides with undirected connectivity.
//! Graphs are immutable snapshots; a `Scenario` materializes one per query
//! time, so all operations here are pure.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockId, ObservationState, Prefix};

/// One block-granularity node of the reachability graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub block: BlockId,
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asn: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Prefix>,
}

/// Edge storage. Small fixture graphs list edges explicitly; synthetic
/// scenarios start from a full mesh and only track severed pairs, which keeps
/// 10k-node worlds tractable.
#[derive(Debug, Clone, PartialEq, Eq)]
enum EdgeSet {
    Explicit(HashSet<(usize, usize)>),
    FullMeshExcept(HashSet<(usize, usize)>),
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// An immutable snapshot of who can bidirectionally route to whom.
/// Self-reachability is implicit for active nodes; no self-loops are stored.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    nodes: Vec<Node>,
    index: HashMap<BlockId, usize>,
    edges: EdgeSet,
}

impl ReachabilityGraph {
    pub fn explicit(nodes: Vec<Node>, edge_blocks: &[(BlockId, BlockId)]) -> Result<Self> {
        let mut g = ReachabilityGraph::with_edges(nodes, EdgeSet::Explicit(HashSet::new()))?;
        let mut set = HashSet::with_capacity(edge_blocks.len());
        for (a, b) in edge_blocks {
            let (ia, ib) = (g.node_idx(*a)?, g.node_idx(*b)?);
            if ia == ib {
                return Err(Error::data(format!("self-loop edge on {a}")));
            }
            set.insert(pair(ia, ib));
        }
        g.edges = EdgeSet::Explicit(set);
        Ok(g)
    }

    /// Full mesh over the given nodes, minus the listed severed pairs.
    pub fn full_mesh(nodes: Vec<Node>) -> Result<Self> {
        ReachabilityGraph::with_edges(nodes, EdgeSet::FullMeshExcept(HashSet::new()))
    }

    fn with_edges(nodes: Vec<Node>, edges: EdgeSet) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.block, i).is_some() {
                return Err(Error::data(format!("duplicate node {}", n.block)));
            }
        }
        Ok(ReachabilityGraph {
            nodes,
            index,
            edges,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_idx(&self, block: BlockId) -> Result<usize> {
        self.index
            .get(&block)
            .copied()
            .ok_or_else(|| Error::UnknownNode(block.to_string()))
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.nodes[idx].active
    }

    pub fn active_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.active).count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        match &self.edges {
            EdgeSet::Explicit(set) => set.contains(&pair(a, b)),
            EdgeSet::FullMeshExcept(removed) => !removed.contains(&pair(a, b)),
        }
    }

    pub fn sever(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        match &mut self.edges {
            EdgeSet::Explicit(set) => {
                set.remove(&pair(a, b));
            }
            EdgeSet::FullMeshExcept(removed) => {
                removed.insert(pair(a, b));
            }
        }
    }

    /// Cut every edge between `victims` and the rest of the graph, keeping
    /// edges among the victims themselves.
    pub fn isolate(&mut self, victims: &BTreeSet<usize>) {
        match &mut self.edges {
            EdgeSet::Explicit(set) => {
                set.retain(|(a, b)| victims.contains(a) == victims.contains(b));
            }
            EdgeSet::FullMeshExcept(removed) => {
                for &v in victims {
                    for other in 0..self.nodes.len() {
                        if !victims.contains(&other) && other != v {
                            removed.insert(pair(v, other));
                        }
                    }
                }
            }
        }
    }

    pub fn deactivate(&mut self, idx: usize) {
        self.nodes[idx].active = false;
    }

    /// Pairs severed relative to a full mesh that touch `node` (both ends
    /// listed, active or not). Empty for explicit graphs.
    fn removed_neighbors(&self, node: usize) -> Vec<usize> {
        match &self.edges {
            EdgeSet::Explicit(_) => Vec::new(),
            EdgeSet::FullMeshExcept(removed) => removed
                .iter()
                .filter_map(|&(a, b)| {
                    if a == node {
                        Some(b)
                    } else if b == node {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect(),
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        if let EdgeSet::Explicit(set) = &self.edges {
            for &(a, b) in set {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }
}

/// Partition of the active nodes into connected components.
#[derive(Debug, Clone)]
pub struct Components {
    /// Each component's node indices, sorted; components ordered by their
    /// smallest member for determinism.
    pub sets: Vec<Vec<usize>>,
    /// Component index per node; `None` for inactive nodes.
    pub of_node: Vec<Option<usize>>,
}

/// Connected components of the reachability graph restricted to active
/// nodes. Every active node lands in exactly one component.
pub fn connected_components(g: &ReachabilityGraph) -> Components {
    let n = g.nodes.len();
    let mut of_node = vec![None; n];
    let mut sets = Vec::new();

    match &g.edges {
        EdgeSet::Explicit(_) => {
            let adj = g.adjacency();
            for start in 0..n {
                if !g.is_active(start) || of_node[start].is_some() {
                    continue;
                }
                let comp_idx = sets.len();
                let mut comp = Vec::new();
                let mut queue = VecDeque::from([start]);
                of_node[start] = Some(comp_idx);
                while let Some(u) = queue.pop_front() {
                    comp.push(u);
                    for &v in &adj[u] {
                        if g.is_active(v) && of_node[v].is_none() {
                            of_node[v] = Some(comp_idx);
                            queue.push_back(v);
                        }
                    }
                }
                comp.sort_unstable();
                sets.push(comp);
            }
        }
        EdgeSet::FullMeshExcept(_) => {
            // BFS on the complement of the removed set: neighbors of u are
            // all remaining nodes except those explicitly severed from u.
            let mut remaining: BTreeSet<usize> = (0..n).filter(|&i| g.is_active(i)).collect();
            while let Some(&start) = remaining.iter().next() {
                remaining.remove(&start);
                let comp_idx = sets.len();
                let mut comp = Vec::new();
                let mut queue = VecDeque::from([start]);
                of_node[start] = Some(comp_idx);
                while let Some(u) = queue.pop_front() {
                    comp.push(u);
                    let blocked: HashSet<usize> = g.removed_neighbors(u).into_iter().collect();
                    let next: Vec<usize> = remaining
                        .iter()
                        .copied()
                        .filter(|v| !blocked.contains(v))
                        .collect();
                    for v in next {
                        remaining.remove(&v);
                        of_node[v] = Some(comp_idx);
                        queue.push_back(v);
                    }
                }
                comp.sort_unstable();
                sets.push(comp);
            }
        }
    }
    sets.sort_by_key(|c| c[0]);
    for (new_idx, comp) in sets.iter().enumerate() {
        for &node in comp {
            of_node[node] = Some(new_idx);
        }
    }
    Components { sets, of_node }
}

/// The unique component holding a strict majority of active nodes, if any.
/// "Exactly half" does not qualify.
pub fn internet_core(g: &ReachabilityGraph) -> Option<Vec<usize>> {
    let comps = connected_components(g);
    let total = g.active_count();
    core_index(&comps, total).map(|i| comps.sets[i].clone())
}

/// Index of the majority component within `comps`, if one exists.
pub fn core_index(comps: &Components, active_total: usize) -> Option<usize> {
    comps.sets.iter().position(|c| 2 * c.len() > active_total)
}

/// Truth label for one node at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TruthLabel {
    /// In the core with a direct edge to every other core member.
    CoreFull,
    /// In the core but missing a direct edge to some core member.
    Peninsula,
    /// Active, outside the core, in a component of two or more nodes.
    Island,
    /// Active and able to reach only itself.
    AddressIsland,
    /// Inactive.
    Out,
}

/// Labels for every node plus a flag set when no component holds a majority
/// (the core has fragmented and every active node is an island of some kind).
#[derive(Debug, Clone)]
pub struct TruthAssignment {
    pub labels: Vec<TruthLabel>,
    pub fragmented: bool,
}

impl TruthAssignment {
    pub fn label_of(&self, idx: usize) -> TruthLabel {
        self.labels[idx]
    }
}

/// Label every node of the graph. Exactly one label per node.
pub fn truth_labels(g: &ReachabilityGraph) -> TruthAssignment {
    let comps = connected_components(g);
    truth_labels_with(g, &comps)
}

/// As `truth_labels` but reusing a component partition already computed for
/// this graph.
pub fn truth_labels_with(g: &ReachabilityGraph, comps: &Components) -> TruthAssignment {
    let total = g.active_count();
    let core = core_index(comps, total);
    let core_set: Option<HashSet<usize>> = core.map(|ci| comps.sets[ci].iter().copied().collect());

    let mut labels = Vec::with_capacity(g.nodes.len());
    for idx in 0..g.nodes.len() {
        if !g.is_active(idx) {
            labels.push(TruthLabel::Out);
            continue;
        }
        let comp_idx = comps.of_node[idx].expect("active node must have a component");
        let comp_size = comps.sets[comp_idx].len();
        // A node that can reach only itself is an address island, even in
        // the degenerate one-node world where it is technically a majority.
        let label = if comp_size == 1 {
            TruthLabel::AddressIsland
        } else {
            match (&core, &core_set) {
                (Some(ci), Some(core_set)) if *ci == comp_idx => {
                    if core_full(g, idx, core_set) {
                        TruthLabel::CoreFull
                    } else {
                        TruthLabel::Peninsula
                    }
                }
                _ => TruthLabel::Island,
            }
        };
        labels.push(label);
    }
    TruthAssignment {
        labels,
        fragmented: core.is_none(),
    }
}

fn core_full(g: &ReachabilityGraph, idx: usize, core_set: &HashSet<usize>) -> bool {
    match &g.edges {
        EdgeSet::FullMeshExcept(_) => !g
            .removed_neighbors(idx)
            .iter()
            .any(|m| core_set.contains(m)),
        EdgeSet::Explicit(set) => {
            let degree_in_core = set
                .iter()
                .filter(|&&(a, b)| {
                    (a == idx && core_set.contains(&b)) || (b == idx && core_set.contains(&a))
                })
                .count();
            degree_in_core == core_set.len() - 1
        }
    }
}

/// Oracle-side measurement: what a probe from `vp_node` to `target_node`
/// would report. Never `Unmeasured`; loss is the simulator's job.
pub fn observe(
    g: &ReachabilityGraph,
    vp_node: usize,
    target_node: usize,
) -> Result<ObservationState> {
    if vp_node >= g.nodes.len() || target_node >= g.nodes.len() {
        return Err(Error::UnknownNode(format!(
            "index {}",
            vp_node.max(target_node)
        )));
    }
    let up =
        g.is_active(target_node) && (vp_node == target_node || g.has_edge(vp_node, target_node));
    Ok(if up {
        ObservationState::Up
    } else {
        ObservationState::Down
    })
}

/// Entities (RIRs, countries) controlling a strict majority of an address
/// space. An empty result means no single entity can secede with the core.
pub fn majority_control(
    allocations: &BTreeMap<String, u64>,
    total: u64,
) -> Result<Vec<(String, f64)>> {
    if total == 0 {
        return Err(Error::data("majority_control: total address count is zero"));
    }
    if let Some((name, &count)) = allocations.iter().max_by_key(|(_, &c)| c) {
        if count > total {
            return Err(Error::data(format!(
                "majority_control: {name} has {count} addresses but total is only {total}"
            )));
        }
    }
    let mut out: Vec<(String, f64)> = allocations
        .iter()
        .filter(|(_, &c)| 2 * c > total)
        .map(|(name, &c)| (name.clone(), c as f64 / total as f64))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Largest share in an allocation map, for reporting.
pub fn max_share(allocations: &BTreeMap<String, u64>, total: u64) -> Option<(String, f64)> {
    if total == 0 {
        return None;
    }
    allocations
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(name, &c)| (name.clone(), c as f64 / total as f64))
}

/// A timed change to the world: applied at `start`, reverted at `end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyChange {
    /// Remove specific edges.
    Sever(Vec<(BlockId, BlockId)>),
    /// Cut the victims off from everything else, keeping internal edges.
    Isolate(Vec<BlockId>),
    /// Power the victims off entirely.
    Deactivate(Vec<BlockId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub start: i64,
    pub end: i64,
    pub change: TopologyChange,
}

/// A time-varying world: base graph, timed deltas, and the mapping from
/// vantage points to the nodes hosting them.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub base: ReachabilityGraph,
    pub deltas: Vec<Delta>,
    pub vp_placement: BTreeMap<String, BlockId>,
}

impl Scenario {
    pub fn new(
        base: ReachabilityGraph,
        mut deltas: Vec<Delta>,
        vp_placement: BTreeMap<String, BlockId>,
    ) -> Result<Self> {
        for d in &deltas {
            if d.start >= d.end {
                return Err(Error::config(format!(
                    "delta starting at {} must end after it starts",
                    d.start
                )));
            }
        }
        for block in vp_placement.values() {
            base.node_idx(*block)?;
        }
        deltas.sort_by_key(|d| (d.start, d.end));
        Ok(Scenario {
            base,
            deltas,
            vp_placement,
        })
    }

    /// Materialize the world as of time `t`.
    pub fn graph_at(&self, t: i64) -> Result<ReachabilityGraph> {
        let mut g = self.base.clone();
        for d in &self.deltas {
            if d.start <= t && t < d.end {
                apply_change(&mut g, &d.change)?;
            }
        }
        Ok(g)
    }

    /// Node index hosting the named vantage point.
    pub fn vp_node(&self, vp_id: &str) -> Result<usize> {
        let block = self
            .vp_placement
            .get(vp_id)
            .ok_or_else(|| Error::UnknownNode(format!("vantage point {vp_id}")))?;
        self.base.node_idx(*block)
    }
}

fn apply_change(g: &mut ReachabilityGraph, change: &TopologyChange) -> Result<()> {
    match change {
        TopologyChange::Sever(pairs) => {
            for (a, b) in pairs {
                let (ia, ib) = (g.node_idx(*a)?, g.node_idx(*b)?);
                g.sever(ia, ib);
            }
        }
        TopologyChange::Isolate(victims) => {
            let set: BTreeSet<usize> = victims
                .iter()
                .map(|b| g.node_idx(*b))
                .collect::<Result<_>>()?;
            g.isolate(&set);
        }
        TopologyChange::Deactivate(victims) => {
            for b in victims {
                let idx = g.node_idx(*b)?;
                g.deactivate(idx);
            }
        }
    }
    Ok(())
}
