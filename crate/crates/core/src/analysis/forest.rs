//! Binary forest mirroring how alternating paths are joined.
//!
//! Leaves are OPT-edges; each non-final ALG-edge becomes an internal node
//! whose two children are the trees of the paths it joins. Final edges add
//! no node: the tree of the closed path simply stands for the cycle.

use serde::Serialize;

use crate::instance::RequestId;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum NodeRole {
    /// An OPT-edge, by index into the optimal matching's events.
    Leaf {
        opt_index: usize,
        i: RequestId,
        j: RequestId,
    },
    /// A non-final ALG-edge, by its creation order.
    Internal { seq: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestNode {
    pub role: NodeRole,
    /// Cost of the edge this node stands for.
    pub weight: f64,
    pub children: Option<(NodeId, NodeId)>,
    pub parent: Option<NodeId>,
    /// Total weight of the subtree rooted here.
    pub subtree_weight: f64,
    /// Total weight of the leaves of that subtree.
    pub leaf_weight: f64,
    pub leaf_count: usize,
}

impl ForestNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Forest {
    nodes: Vec<ForestNode>,
}

impl Forest {
    pub(crate) fn add_leaf(&mut self, opt_index: usize, i: RequestId, j: RequestId, weight: f64) -> NodeId {
        self.nodes.push(ForestNode {
            role: NodeRole::Leaf { opt_index, i, j },
            weight,
            children: None,
            parent: None,
            subtree_weight: weight,
            leaf_weight: weight,
            leaf_count: 1,
        });
        self.nodes.len() - 1
    }

    pub(crate) fn join(&mut self, seq: usize, weight: f64, left: NodeId, right: NodeId) -> NodeId {
        let id = self.nodes.len();
        let (l, r) = (&self.nodes[left], &self.nodes[right]);
        let node = ForestNode {
            role: NodeRole::Internal { seq },
            weight,
            children: Some((left, right)),
            parent: None,
            subtree_weight: weight + l.subtree_weight + r.subtree_weight,
            leaf_weight: l.leaf_weight + r.leaf_weight,
            leaf_count: l.leaf_count + r.leaf_count,
        };
        self.nodes[left].parent = Some(id);
        self.nodes[right].parent = Some(id);
        self.nodes.push(node);
        id
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ForestNode {
        &self.nodes[id]
    }

    pub fn roots(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].parent.is_none())
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Nodes of the subtree rooted at `root`, parents before children.
    pub fn subtree(&self, root: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            out.push(v);
            if let Some((l, r)) = self.nodes[v].children {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// Every node has zero or two children and aggregates add up.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1e-300);
        self.nodes.iter().all(|n| match n.children {
            None => n.leaf_count == 1 && close(n.subtree_weight, n.weight),
            Some((l, r)) => {
                let (l, r) = (&self.nodes[l], &self.nodes[r]);
                n.leaf_count == l.leaf_count + r.leaf_count
                    && close(n.leaf_weight, l.leaf_weight + r.leaf_weight)
                    && close(n.subtree_weight, n.weight + l.subtree_weight + r.subtree_weight)
            }
        })
    }
}
