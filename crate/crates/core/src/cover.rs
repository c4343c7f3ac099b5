//! Clusters, sparse covers, layered covers and network decompositions,
//! plus the versioned `SLPYCOV1` cache format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Magic first line of a cover cache file.
pub const COVER_MAGIC: &str = "SLPYCOV1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterId {
    pub level: u32,
    pub root: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSlot {
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub terminal: bool,
}

/// A cluster with its (Steiner) tree. Tree participants that are not
/// members are relays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: ClusterId,
    pub color: usize,
    /// Sorted member (terminal) set.
    pub members: Vec<NodeId>,
    pub tree: BTreeMap<NodeId, TreeSlot>,
}

impl Cluster {
    pub fn singleton(level: u32, color: usize, v: NodeId) -> Self {
        let mut tree = BTreeMap::new();
        tree.insert(v, TreeSlot { parent: None, depth: 0, terminal: true });
        Cluster { id: ClusterId { level, root: v }, color, members: vec![v], tree }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn depth(&self) -> u32 {
        self.tree.values().map(|s| s.depth).max().unwrap_or(0)
    }

    /// Weighted distance from the root along the tree, per tree node.
    pub fn tree_distances(&self, g: &Graph) -> BTreeMap<NodeId, u64> {
        let mut dist = BTreeMap::new();
        let mut order: Vec<(&NodeId, &TreeSlot)> = self.tree.iter().collect();
        order.sort_by_key(|(_, s)| s.depth);
        for (&v, s) in order {
            let d = match s.parent {
                None => 0,
                Some(p) => {
                    let w = g.edge_between(p, v).map_or(1, |e| g.edges()[e].w);
                    dist.get(&p).copied().unwrap_or(0) + w
                }
            };
            dist.insert(v, d);
        }
        dist
    }

    /// Deepest weighted tree distance; the hop depth on unit graphs.
    pub fn radius(&self, g: &Graph) -> u64 {
        self.tree_distances(g).into_values().max().unwrap_or(0)
    }

    /// Children lists derived from parent pointers.
    pub fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut ch: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&v, s) in &self.tree {
            if let Some(p) = s.parent {
                ch.entry(p).or_default().push(v);
            }
        }
        ch
    }

    /// Undirected tree edges as `(min, max)` pairs.
    pub fn tree_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.tree.iter().filter_map(|(&v, s)| s.parent.map(|p| (p.min(v), p.max(v))))
    }
}

/// A sparse `d`-cover: every node's `d`-ball lies in some cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub scale: u64,
    pub clusters: Vec<Cluster>,
}

impl Cover {
    /// Cluster indices containing each node (as member).
    pub fn memberships(&self, n: usize) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); n];
        for (i, c) in self.clusters.iter().enumerate() {
            for &v in &c.members {
                m[v].push(i);
            }
        }
        m
    }

    pub fn max_depth(&self) -> u32 {
        self.clusters.iter().map(Cluster::depth).max().unwrap_or(0)
    }

    pub fn max_radius(&self, g: &Graph) -> u64 {
        self.clusters.iter().map(|c| c.radius(g)).max().unwrap_or(0)
    }

    /// Measured stretch: deepest weighted tree over the scale.
    pub fn stretch(&self, g: &Graph) -> f64 {
        self.max_radius(g) as f64 / self.scale.max(1) as f64
    }
}

/// Covers at scales `B^0 .. B^top` with parent-cluster links.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredCover {
    pub base: u64,
    pub levels: Vec<Cover>,
    /// `parents[j][i]`: index in level `j+1` of the parent of cluster `i` of level `j`.
    pub parents: Vec<Vec<Option<usize>>>,
}

impl LayeredCover {
    pub fn top(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn scale(&self, j: usize) -> u64 {
        self.base.saturating_pow(j as u32)
    }

    /// Writes the versioned cache format: magic line then JSON.
    pub fn to_cache(&self) -> Result<String> {
        Ok(format!("{COVER_MAGIC}\n{}\n", serde_json::to_string(self)?))
    }

    pub fn from_cache(text: &str) -> Result<Self> {
        let (magic, body) = text.split_once('\n').unwrap_or((text, ""));
        if magic.trim() != COVER_MAGIC {
            return Err(Error::Parse { line: 1, msg: format!("expected `{COVER_MAGIC}` header") });
        }
        serde_json::from_str(body).map_err(|e| Error::Parse { line: 2 + e.line().saturating_sub(1), msg: e.to_string() })
    }
}

/// A colored vertex partition into separated clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub separation: u64,
    /// Clusters of each color.
    pub colors: Vec<Vec<Cluster>>,
}

impl Decomposition {
    pub fn color_of(&self, n: usize) -> Vec<Vec<usize>> {
        let mut c = vec![Vec::new(); n];
        for (col, cl) in self.colors.iter().enumerate() {
            for cluster in cl {
                for &v in &cluster.members {
                    c[v].push(col);
                }
            }
        }
        c
    }

    pub fn max_depth(&self) -> u32 {
        self.colors.iter().flatten().map(Cluster::depth).max().unwrap_or(0)
    }
}

/// Number of trees (per the given clusters) that use each undirected edge.
pub fn edge_tree_multiplicity<'a>(clusters: impl IntoIterator<Item = &'a Cluster>) -> BTreeMap<(NodeId, NodeId), usize> {
    let mut m = BTreeMap::new();
    for c in clusters {
        for e in c.tree_edges() {
            *m.entry(e).or_insert(0) += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip_and_magic() {
        let lc = LayeredCover {
            base: 4,
            levels: vec![Cover { scale: 1, clusters: vec![Cluster::singleton(0, 0, 0)] }],
            parents: vec![],
        };
        let text = lc.to_cache().unwrap();
        assert!(text.starts_with("SLPYCOV1\n"));
        assert_eq!(LayeredCover::from_cache(&text).unwrap(), lc);
        assert!(LayeredCover::from_cache("SLPYCOV0\n{}").is_err());
        assert!(LayeredCover::from_cache("SLPYCOV1\n{not json").is_err());
    }
}
