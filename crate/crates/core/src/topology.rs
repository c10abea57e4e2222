//! Physical device model: coupling graph, logical-to-physical mappings and
//! deterministic chain embedding.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::ParseError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("physical qubit {qubit} out of range for {num_physical} qubits")]
    OutOfRange { qubit: usize, num_physical: usize },
    #[error("self-loop on physical qubit {0}")]
    SelfLoop(usize),
    #[error("no simple path of {length} coupled qubits exists")]
    NoChainFound { length: usize },
    #[error("no path between physical qubits {0} and {1}")]
    Disconnected(usize, usize),
    #[error("mapping is not injective: physical qubit {0} used twice")]
    NotInjective(usize),
    #[error("unknown topology `{0}`")]
    UnknownTopology(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Undirected coupling graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingGraph {
    num_physical: usize,
    adjacency: Vec<BTreeSet<usize>>,
}

impl CouplingGraph {
    pub fn new(
        num_physical: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let mut adjacency = vec![BTreeSet::new(); num_physical];
        for (a, b) in edges {
            for q in [a, b] {
                if q >= num_physical {
                    return Err(TopologyError::OutOfRange {
                        qubit: q,
                        num_physical,
                    });
                }
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Ok(Self {
            num_physical,
            adjacency,
        })
    }

    /// Path graph 0 - 1 - ... - (n-1).
    pub fn linear_chain(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("chain edges are in range")
    }

    /// 27-qubit heavy-hex coupling map of IBM Falcon r4 devices.
    pub fn falcon27() -> Self {
        const EDGES: [(usize, usize); 28] = [
            (0, 1),
            (1, 2),
            (1, 4),
            (2, 3),
            (3, 5),
            (4, 7),
            (5, 8),
            (6, 7),
            (7, 10),
            (8, 9),
            (8, 11),
            (10, 12),
            (11, 14),
            (12, 13),
            (12, 15),
            (13, 14),
            (14, 16),
            (15, 18),
            (16, 19),
            (17, 18),
            (18, 21),
            (19, 20),
            (19, 22),
            (21, 23),
            (22, 25),
            (23, 24),
            (24, 25),
            (25, 26),
        ];
        Self::new(27, EDGES).expect("static edges are valid")
    }

    pub fn num_physical(&self) -> usize {
        self.num_physical
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[q].iter().copied()
    }

    fn check(&self, q: usize) -> Result<(), TopologyError> {
        if q >= self.num_physical {
            Err(TopologyError::OutOfRange {
                qubit: q,
                num_physical: self.num_physical,
            })
        } else {
            Ok(())
        }
    }

    pub fn are_coupled(&self, a: usize, b: usize) -> Result<bool, TopologyError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.adjacency[a].contains(&b))
    }

    /// Unchecked variant for indices already known to be in range.
    pub(crate) fn coupled(&self, a: usize, b: usize) -> bool {
        a < self.num_physical && self.adjacency[a].contains(&b)
    }

    /// First simple path of `length` vertices found by depth-first search,
    /// trying start vertices and neighbours in ascending index order.
    pub fn find_chain(&self, length: usize) -> Result<Vec<usize>, TopologyError> {
        if length == 0 || length > self.num_physical {
            return Err(TopologyError::NoChainFound { length });
        }
        let mut path = Vec::with_capacity(length);
        let mut used = vec![false; self.num_physical];
        for start in 0..self.num_physical {
            path.push(start);
            used[start] = true;
            if self.extend_chain(&mut path, &mut used, length) {
                return Ok(path);
            }
            path.pop();
            used[start] = false;
        }
        Err(TopologyError::NoChainFound { length })
    }

    fn extend_chain(&self, path: &mut Vec<usize>, used: &mut [bool], length: usize) -> bool {
        if path.len() == length {
            return true;
        }
        let last = *path.last().expect("path is never empty here");
        for next in self.neighbors(last) {
            if used[next] {
                continue;
            }
            used[next] = true;
            path.push(next);
            if self.extend_chain(path, used, length) {
                return true;
            }
            path.pop();
            used[next] = false;
        }
        false
    }

    /// Shortest path from `from` to `to` inclusive. BFS visits neighbours in
    /// ascending order, so ties resolve towards lower indices.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Vec<usize>, TopologyError> {
        self.check(from)?;
        self.check(to)?;
        let mut prev = vec![usize::MAX; self.num_physical];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for n in self.neighbors(v) {
                if prev[n] == usize::MAX {
                    prev[n] = v;
                    queue.push_back(n);
                }
            }
        }
        if prev[to] == usize::MAX {
            return Err(TopologyError::Disconnected(from, to));
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        Ok(path)
    }
}

/// Parses `physical <n>` followed by `edge a b` lines; `#` starts a comment.
pub fn parse_topology(text: &str) -> Result<CouplingGraph, TopologyError> {
    let mut num_physical = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = crate::circuit::text_content(raw);
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let num = |w: &str| {
            w.parse::<usize>()
                .map_err(|_| ParseError::new(line_no, format!("bad integer `{w}`")))
        };
        match (num_physical, words.as_slice()) {
            (None, ["physical", n]) => num_physical = Some(num(n)?),
            (None, _) => {
                return Err(ParseError::new(line_no, "expected header `physical <n>`").into())
            }
            (Some(n), ["edge", a, b]) => {
                let (a, b) = (num(a)?, num(b)?);
                if a >= n || b >= n {
                    return Err(ParseError::new(
                        line_no,
                        format!("edge {a}-{b} out of range for {n} qubits"),
                    )
                    .into());
                }
                if a == b {
                    return Err(ParseError::new(line_no, format!("self-loop on {a}")).into());
                }
                edges.push((a, b));
            }
            (Some(_), _) => {
                return Err(
                    ParseError::new(line_no, format!("expected `edge a b`, got `{line}`")).into(),
                )
            }
        }
    }
    let n = num_physical.ok_or_else(|| ParseError::new(0, "missing `physical` header"))?;
    CouplingGraph::new(n, edges)
}

pub fn write_topology(graph: &CouplingGraph) -> String {
    let mut out = format!("physical {}\n", graph.num_physical());
    for (a, b) in graph.edges() {
        out.push_str(&format!("edge {a} {b}\n"));
    }
    out
}

/// Resolves the CLI shorthands `chain:<n>` and `falcon27`; anything else is
/// returned as `None` so the caller can treat it as a file path.
pub fn builtin_topology(spec: &str) -> Result<Option<CouplingGraph>, TopologyError> {
    if spec == "falcon27" {
        return Ok(Some(CouplingGraph::falcon27()));
    }
    if let Some(n) = spec.strip_prefix("chain:") {
        let n: usize = n
            .parse()
            .map_err(|_| TopologyError::UnknownTopology(spec.to_string()))?;
        if n == 0 {
            return Err(TopologyError::UnknownTopology(spec.to_string()));
        }
        return Ok(Some(CouplingGraph::linear_chain(n)));
    }
    Ok(None)
}

/// Injective assignment of logical qubits to physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mapping {
    physical: Vec<usize>,
}

impl Mapping {
    pub fn new(physical: Vec<usize>) -> Result<Self, TopologyError> {
        let mut seen = BTreeSet::new();
        for &p in &physical {
            if !seen.insert(p) {
                return Err(TopologyError::NotInjective(p));
            }
        }
        Ok(Self { physical })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            physical: (0..n).collect(),
        }
    }

    /// Physical qubit holding logical qubit `logical`.
    pub fn physical(&self, logical: usize) -> usize {
        self.physical[logical]
    }

    pub fn len(&self) -> usize {
        self.physical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.physical.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.physical
    }

    /// Logical qubit currently on `physical`, if any.
    pub fn logical_at(&self, physical: usize) -> Option<usize> {
        self.physical.iter().position(|&p| p == physical)
    }

    /// Exchanges the logical qubits sitting on physical `a` and `b`.
    pub(crate) fn swap_physical(&mut self, a: usize, b: usize) {
        for p in &mut self.physical {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_queries() {
        let g = CouplingGraph::linear_chain(3);
        assert!(g.are_coupled(0, 1).unwrap());
        assert!(!g.are_coupled(0, 2).unwrap());
        assert!(g.are_coupled(0, 3).is_err());
        let empty = CouplingGraph::new(4, []).unwrap();
        assert!(!empty.are_coupled(1, 2).unwrap());
    }

    #[test]
    fn chain_edges() {
        assert_eq!(CouplingGraph::linear_chain(3).edges(), vec![(0, 1), (1, 2)]);
        assert!(CouplingGraph::linear_chain(1).edges().is_empty());
        assert_eq!(CouplingGraph::linear_chain(6).edges().len(), 5);
    }

    #[test]
    fn find_chain_cases() {
        let g = CouplingGraph::linear_chain(6);
        assert_eq!(g.find_chain(6).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        let cycle = CouplingGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(cycle.find_chain(4).unwrap(), vec![0, 1, 2, 3]);
        let star = CouplingGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(
            star.find_chain(4),
            Err(TopologyError::NoChainFound { length: 4 })
        );
        assert_eq!(star.find_chain(3).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn falcon_has_long_chains() {
        let g = CouplingGraph::falcon27();
        assert_eq!(g.edges().len(), 28);
        let chain = g.find_chain(8).unwrap();
        assert!(chain.windows(2).all(|w| g.are_coupled(w[0], w[1]).unwrap()));
    }

    #[test]
    fn shortest_path_prefers_low_indices() {
        let cycle = CouplingGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(cycle.shortest_path(0, 2).unwrap(), vec![0, 1, 2]);
        let split = CouplingGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(split.shortest_path(0, 3).is_err());
    }

    #[test]
    fn topology_file() {
        let g = parse_topology("physical 3 # three\nedge 0 1\n\nedge 2 1\n").unwrap();
        assert_eq!(g, CouplingGraph::linear_chain(3));
        assert_eq!(parse_topology(&write_topology(&g)).unwrap(), g);
        assert!(parse_topology("edge 0 1").is_err());
        assert!(parse_topology("physical 2\nedge 0 2").is_err());
        assert!(parse_topology("physical 2\nedge 1 1").is_err());
        assert!(parse_topology("physical 2\nvertex 1").is_err());
    }

    #[test]
    fn builtins() {
        assert_eq!(
            builtin_topology("chain:4").unwrap(),
            Some(CouplingGraph::linear_chain(4))
        );
        assert!(builtin_topology("chain:x").is_err());
        assert_eq!(builtin_topology("dev.txt").unwrap(), None);
    }

    #[test]
    fn mapping_rejects_collisions() {
        assert_eq!(
            Mapping::new(vec![0, 2, 0]),
            Err(TopologyError::NotInjective(0))
        );
        let mut m = Mapping::new(vec![3, 1, 2]).unwrap();
        m.swap_physical(1, 3);
        assert_eq!(m.as_slice(), &[1, 3, 2]);
        assert_eq!(m.logical_at(2), Some(2));
        assert_eq!(m.logical_at(0), None);
    }
}
