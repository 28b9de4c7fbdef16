//! Deterministic sensor-network simulator. Officer nodes inject share
//! packets that travel to the aggregator in two phases: a TTL-limited
//! random walk that disperses the shares, then min-hop forwarding along
//! BFS distances. A synchronous tick model with per-node FIFO queues
//! stands in for the MAC layer; one relay takes one tick.

mod compare;
mod sim;

pub use compare::{run_comparison, write_plot_data, ComparisonCell};
pub use sim::{AbsorbedShare, Census, DeliveredReport, Metrics, RelayTally, Simulator};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub type NodeId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("topology needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("aggregator id {0} is not a node")]
    UnknownAggregator(NodeId),
    #[error("node {0} cannot reach the aggregator")]
    Disconnected(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} has no neighbors, cannot inject")]
    IsolatedNode(NodeId),
    #[error("cannot inject at the aggregator itself")]
    InjectAtAggregator,
    #[error("invalid simulation config: {reason}")]
    BadConfig { reason: &'static str },
    #[error("line {line}: invalid topology file: {msg}")]
    BadTopologyFile { line: usize, msg: String },
}

/// Static radio network: nodes join by Euclidean proximity.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<(NodeId, f64, f64)>,
    radio_range: f64,
    aggregator: NodeId,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
    connected: bool,
}

impl Topology {
    pub fn aggregator(&self) -> NodeId {
        self.aggregator
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn nodes(&self) -> &[(NodeId, f64, f64)] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Every node can reach the aggregator.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        self.adjacency.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.adjacency.contains_key(&id)
    }

    /// Longest min-hop distance from any node to the aggregator.
    pub fn hop_diameter(&self) -> u32 {
        self.minhop().hops.values().filter_map(|h| *h).max().unwrap_or(0)
    }

    /// BFS distances toward the aggregator plus, per node, the set of
    /// neighbors one hop closer.
    pub fn minhop(&self) -> MinHopTable {
        let mut hops: BTreeMap<NodeId, Option<u32>> =
            self.adjacency.keys().map(|&n| (n, None)).collect();
        hops.insert(self.aggregator, Some(0));
        let mut frontier = VecDeque::from([self.aggregator]);
        while let Some(v) = frontier.pop_front() {
            let dv = hops[&v].expect("visited nodes have distances");
            for &u in &self.adjacency[&v] {
                if hops[&u].is_none() {
                    hops.insert(u, Some(dv + 1));
                    frontier.push_back(u);
                }
            }
        }
        let next_hops = self
            .adjacency
            .iter()
            .map(|(&n, neighbors)| {
                let set: Vec<NodeId> = match hops[&n] {
                    Some(d) if d > 0 => neighbors
                        .iter()
                        .copied()
                        .filter(|u| hops[u] == Some(d - 1))
                        .collect(),
                    _ => Vec::new(),
                };
                (n, set)
            })
            .collect();
        MinHopTable { hops, next_hops }
    }

    /// Plain-text form readable by [`parse_topology_file`].
    pub fn to_text(&self) -> String {
        let mut out = format!("range {}\naggregator {}\n", self.radio_range, self.aggregator);
        for &(id, x, y) in &self.nodes {
            out.push_str(&format!("{id} {x} {y}\n"));
        }
        out
    }
}

/// Routing state shared by every node: hop counts to the aggregator
/// (None = unreachable) and the min-hop next-hop sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MinHopTable {
    pub hops: BTreeMap<NodeId, Option<u32>>,
    pub next_hops: BTreeMap<NodeId, Vec<NodeId>>,
}

/// Builds the adjacency by range threshold. Refuses topologies where
/// some node cannot reach the aggregator unless `allow_disconnected`.
pub fn build_topology(
    nodes: &[(NodeId, f64, f64)],
    radio_range: f64,
    aggregator: NodeId,
    allow_disconnected: bool,
) -> Result<Topology, NetError> {
    if nodes.len() < 2 {
        return Err(NetError::TooFewNodes(nodes.len()));
    }
    let mut seen = BTreeSet::new();
    for &(id, _, _) in nodes {
        if !seen.insert(id) {
            return Err(NetError::DuplicateNode(id));
        }
    }
    if !seen.contains(&aggregator) {
        return Err(NetError::UnknownAggregator(aggregator));
    }
    let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> =
        nodes.iter().map(|&(id, _, _)| (id, Vec::new())).collect();
    for (i, &(a, ax, ay)) in nodes.iter().enumerate() {
        for &(b, bx, by) in &nodes[i + 1..] {
            let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            if d <= radio_range {
                adjacency.get_mut(&a).expect("node known").push(b);
                adjacency.get_mut(&b).expect("node known").push(a);
            }
        }
    }
    for neighbors in adjacency.values_mut() {
        neighbors.sort_unstable();
    }

    let mut topo = Topology {
        nodes: nodes.to_vec(),
        radio_range,
        aggregator,
        adjacency,
        connected: false,
    };
    let table = topo.minhop();
    topo.connected = table.hops.values().all(|h| h.is_some());
    if !topo.connected && !allow_disconnected {
        let stranded = table
            .hops
            .iter()
            .find(|(_, h)| h.is_none())
            .map(|(&n, _)| n)
            .expect("some node is unreachable");
        return Err(NetError::Disconnected(stranded));
    }
    Ok(topo)
}

/// Parses the topology text format: a `range R` line, an `aggregator ID`
/// line, and one `id x y` line per node, in any order; `#` comments and
/// blank lines are ignored.
pub fn parse_topology_file(text: &str, allow_disconnected: bool) -> Result<Topology, NetError> {
    let bad = |line: usize, msg: String| NetError::BadTopologyFile { line, msg };
    let mut range: Option<f64> = None;
    let mut aggregator: Option<NodeId> = None;
    let mut nodes: Vec<(NodeId, f64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "range" => {
                if fields.len() != 2 {
                    return Err(bad(line, "range line needs one value".into()));
                }
                let r: f64 = fields[1]
                    .parse()
                    .map_err(|_| bad(line, format!("invalid range `{}`", fields[1])))?;
                if !(r >= 0.0) {
                    return Err(bad(line, "range must be non-negative".into()));
                }
                range = Some(r);
            }
            "aggregator" => {
                if fields.len() != 2 {
                    return Err(bad(line, "aggregator line needs one id".into()));
                }
                aggregator = Some(fields[1].parse().map_err(|_| {
                    bad(line, format!("invalid aggregator id `{}`", fields[1]))
                })?);
            }
            _ => {
                if fields.len() != 3 {
                    return Err(bad(line, format!("node line needs `id x y`, found {} fields", fields.len())));
                }
                let id: NodeId = fields[0]
                    .parse()
                    .map_err(|_| bad(line, format!("invalid node id `{}`", fields[0])))?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| bad(line, format!("invalid x `{}`", fields[1])))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| bad(line, format!("invalid y `{}`", fields[2])))?;
                nodes.push((id, x, y));
            }
        }
    }
    let range = range.ok_or_else(|| bad(1, "missing `range R` line".into()))?;
    let aggregator = aggregator.ok_or_else(|| bad(1, "missing `aggregator ID` line".into()))?;
    build_topology(&nodes, range, aggregator, allow_disconnected)
}

/// Routing phase of a share packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    RandomWalk,
    MinHop,
}

/// Transport strategy under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RoutingMode {
    /// Split into shares, disperse by random walk, then min-hop.
    Randomized,
    /// Single unsplit packet straight down the min-hop tree.
    ShortestPath,
}

impl RoutingMode {
    pub fn label(self) -> &'static str {
        match self {
            RoutingMode::Randomized => "randomized",
            RoutingMode::ShortestPath => "shortest_path",
        }
    }
}

/// Knobs for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Random-walk hop budget per share packet.
    pub ttl_init: u32,
    pub threshold: u8,
    pub shares: u8,
    /// Packets each node can forward per tick.
    pub mac_service_rate: usize,
    /// Reports injected per tick across all sources.
    pub load: f64,
    pub duration: crate::model::Tick,
    pub routing_mode: RoutingMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let fail = |reason| Err(NetError::BadConfig { reason });
        if self.threshold == 0 || self.shares == 0 || self.threshold > self.shares {
            return fail("need 1 <= threshold <= shares");
        }
        if self.mac_service_rate == 0 {
            return fail("mac_service_rate must be positive");
        }
        if !(self.load >= 0.0) || !self.load.is_finite() {
            return fail("load must be non-negative and finite");
        }
        if self.duration < 1 {
            return fail("duration must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> Topology {
        // A - B - C spaced 1.0 apart, range 1.0
        build_topology(&[(1, 0.0, 0.0), (2, 1.0, 0.0), (3, 2.0, 0.0)], 1.0, 3, false).unwrap()
    }

    #[test]
    fn collinear_nodes_form_path_graph() {
        let t = path3();
        assert_eq!(t.neighbors(1), &[2]);
        assert_eq!(t.neighbors(2), &[1, 3]);
        assert_eq!(t.neighbors(3), &[2]);
        assert!(t.is_connected());
    }

    #[test]
    fn zero_range_is_disconnected() {
        let nodes = [(1, 0.0, 0.0), (2, 1.0, 0.0)];
        assert_eq!(
            build_topology(&nodes, 0.0, 1, false).unwrap_err(),
            NetError::Disconnected(2)
        );
        let t = build_topology(&nodes, 0.0, 1, true).unwrap();
        assert!(!t.is_connected());
        assert!(t.neighbors(1).is_empty());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nodes: Vec<(NodeId, f64, f64)> = (0..30)
            .map(|i| (i, rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let t = build_topology(&nodes, 0.3, 0, true).unwrap();
        for a in t.node_ids() {
            for &b in t.neighbors(a) {
                assert!(t.neighbors(b).contains(&a), "{a} <-> {b}");
            }
        }
    }

    #[test]
    fn duplicate_and_unknown_ids_rejected() {
        assert_eq!(
            build_topology(&[(1, 0.0, 0.0), (1, 1.0, 0.0)], 1.0, 1, false).unwrap_err(),
            NetError::DuplicateNode(1)
        );
        assert_eq!(
            build_topology(&[(1, 0.0, 0.0), (2, 1.0, 0.0)], 1.0, 9, false).unwrap_err(),
            NetError::UnknownAggregator(9)
        );
    }

    /// Connectivity must agree with an independent union-find pass.
    #[test]
    fn connectivity_matches_union_find_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..8 {
            let nodes: Vec<(NodeId, f64, f64)> = (0..50)
                .map(|i| (i, rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            let range = 0.25;
            let topo = build_topology(&nodes, range, 0, true).unwrap();

            let mut parent: Vec<usize> = (0..nodes.len()).collect();
            fn find(parent: &mut Vec<usize>, x: usize) -> usize {
                if parent[x] != x {
                    let r = find(parent, parent[x]);
                    parent[x] = r;
                }
                parent[x]
            }
            for i in 0..nodes.len() {
                for j in (i + 1)..nodes.len() {
                    let (_, ax, ay) = nodes[i];
                    let (_, bx, by) = nodes[j];
                    if ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() <= range {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri] = rj;
                    }
                }
            }
            let root0 = find(&mut parent, 0);
            let all_reach_aggregator =
                (0..nodes.len()).all(|i| find(&mut parent, i) == root0);
            assert_eq!(topo.is_connected(), all_reach_aggregator, "case {case}");
        }
    }

    #[test]
    fn minhop_basics_on_path() {
        let t = path3();
        let table = t.minhop();
        assert_eq!(table.hops[&3], Some(0));
        assert_eq!(table.hops[&2], Some(1));
        assert_eq!(table.hops[&1], Some(2));
        assert_eq!(table.next_hops[&1], vec![2]);
        assert_eq!(table.next_hops[&2], vec![3]);
        assert!(table.next_hops[&3].is_empty());
        assert_eq!(t.hop_diameter(), 2);
    }

    /// Hop counts must match an independent relaxation-style shortest
    /// path computation.
    #[test]
    fn minhop_matches_relaxation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nodes: Vec<(NodeId, f64, f64)> = (0..50)
            .map(|i| (i, rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let topo = build_topology(&nodes, 0.3, 7, true).unwrap();
        let table = topo.minhop();

        // Bellman-Ford style: relax edges until a fixed point
        let inf = u32::MAX;
        let mut dist: BTreeMap<NodeId, u32> = topo.node_ids().map(|n| (n, inf)).collect();
        dist.insert(7, 0);
        loop {
            let mut changed = false;
            for a in topo.node_ids() {
                for &b in topo.neighbors(a) {
                    if dist[&b] != inf && dist[&b] + 1 < dist[&a] {
                        dist.insert(a, dist[&b] + 1);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for n in topo.node_ids() {
            let expected = (dist[&n] != inf).then_some(dist[&n]);
            assert_eq!(table.hops[&n], expected, "node {n}");
        }
        // next-hop sets: exactly the neighbors one step closer
        for n in topo.node_ids() {
            if let Some(d) = table.hops[&n] {
                if d > 0 {
                    let expect: Vec<NodeId> = topo
                        .neighbors(n)
                        .iter()
                        .copied()
                        .filter(|u| dist[u] == d - 1)
                        .collect();
                    assert_eq!(table.next_hops[&n], expect);
                }
            }
        }
    }

    #[test]
    fn topology_file_round_trip() {
        let t = path3();
        let text = t.to_text();
        let back = parse_topology_file(&text, false).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn topology_file_errors_are_line_numbered() {
        let err = parse_topology_file("range 1.0\naggregator 3\n1 0.0\n", false).unwrap_err();
        assert!(matches!(err, NetError::BadTopologyFile { line: 3, .. }));
        let err = parse_topology_file("aggregator 3\n1 0.0 0.0\n3 0.5 0.0\n", false).unwrap_err();
        assert!(matches!(err, NetError::BadTopologyFile { line: 1, .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig {
            seed: 0,
            ttl_init: 4,
            threshold: 2,
            shares: 3,
            mac_service_rate: 1,
            load: 0.5,
            duration: 100,
            routing_mode: RoutingMode::Randomized,
        };
        assert!(c.validate().is_ok());
        c.threshold = 4;
        assert!(c.validate().is_err());
        c.threshold = 2;
        c.mac_service_rate = 0;
        assert!(c.validate().is_err());
        c.mac_service_rate = 1;
        c.duration = 0;
        assert!(c.validate().is_err());
    }
}
