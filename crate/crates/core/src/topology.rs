//! Undirected, connected communication graphs over `N` agents.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Complete,
    Ring,
    Star,
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyKind::Complete => "complete",
            TopologyKind::Ring => "ring",
            TopologyKind::Star => "star",
            TopologyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(TopologyKind::Complete),
            "ring" => Ok(TopologyKind::Ring),
            "star" => Ok(TopologyKind::Star),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(Error::Topology(format!("unknown topology `{other}`"))),
        }
    }
}

/// Communication graph. Adjacency lists are sorted and exclude self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    n_agents: usize,
    kind: TopologyKind,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    pub fn complete(n_agents: usize) -> Result<Self> {
        let edges = (0..n_agents)
            .flat_map(|i| ((i + 1)..n_agents).map(move |j| (i, j)))
            .collect::<Vec<_>>();
        Self::build(n_agents, TopologyKind::Complete, &edges)
    }

    pub fn ring(n_agents: usize) -> Result<Self> {
        let edges = if n_agents < 2 {
            Vec::new()
        } else {
            (0..n_agents).map(|i| (i, (i + 1) % n_agents)).collect()
        };
        Self::build(n_agents, TopologyKind::Ring, &edges)
    }

    pub fn star(n_agents: usize, center: usize) -> Result<Self> {
        if center >= n_agents {
            return Err(Error::AgentOutOfRange {
                index: center,
                n_agents,
            });
        }
        let edges = (0..n_agents)
            .filter(|&i| i != center)
            .map(|i| (center, i))
            .collect::<Vec<_>>();
        Self::build(n_agents, TopologyKind::Star, &edges)
    }

    pub fn custom(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::build(n_agents, TopologyKind::Custom, edges)
    }

    /// Named constructor used by the CLI; stars are centered at agent 0.
    pub fn from_kind(kind: TopologyKind, n_agents: usize) -> Result<Self> {
        match kind {
            TopologyKind::Complete => Self::complete(n_agents),
            TopologyKind::Ring => Self::ring(n_agents),
            TopologyKind::Star => Self::star(n_agents, 0),
            TopologyKind::Custom => Err(Error::Topology(
                "custom topologies need an explicit edge list".into(),
            )),
        }
    }

    fn build(n_agents: usize, kind: TopologyKind, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::Topology("at least one agent is required".into()));
        }
        let mut adjacency = vec![Vec::new(); n_agents];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n_agents {
                    return Err(Error::AgentOutOfRange { index: v, n_agents });
                }
            }
            if a == b {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let topo = Self {
            n_agents,
            kind,
            adjacency,
        };
        if !topo.is_connected() {
            return Err(Error::Topology(format!("{kind} graph is not connected")));
        }
        Ok(topo)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_agents];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn is_complete(&self) -> bool {
        self.adjacency.iter().all(|adj| adj.len() + 1 == self.n_agents)
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check(i)?;
        Ok(self.adjacency[i].len())
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// `{i} ∪ adjacent(i)` in ascending agent order. Merges reduce over this
    /// list in order, so the order is part of the reproducibility contract.
    pub fn neighborhood(&self, i: usize) -> Result<Vec<usize>> {
        self.check(i)?;
        let adj = &self.adjacency[i];
        let mut out = Vec::with_capacity(adj.len() + 1);
        let split = adj.partition_point(|&j| j < i);
        out.extend_from_slice(&adj[..split]);
        out.push(i);
        out.extend_from_slice(&adj[split..]);
        Ok(out)
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.n_agents {
            return Err(Error::AgentOutOfRange {
                index: i,
                n_agents: self.n_agents,
            });
        }
        Ok(())
    }
}
