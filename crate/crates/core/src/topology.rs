//! Full Steiner topologies rooted at a terminal, the heap-indexed binary family
//! and cherries.

use crate::error::{Error, Result};

/// Dense node identifier. The binary family uses heap indices directly.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Terminal,
    Steiner,
}

/// Largest supported depth of the binary family.
pub const MAX_BINARY_DEPTH: u32 = 20;

/// A full Steiner topology: terminals have degree 1, Steiner points degree 3.
///
/// The tree is rooted at a terminal. Each non-root node has a parent and the
/// children of a Steiner point keep the order in which its neighbours were
/// listed (parent removed). That order is the default "first, second"
/// ordering used by constructions driven by angle data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullTopology {
    kinds: Vec<NodeKind>,
    adjacency: Vec<Vec<NodeId>>,
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    /// Pre-order from the root.
    order: Vec<NodeId>,
}

impl FullTopology {
    /// Builds and validates a topology from node kinds and per-node neighbour lists.
    pub fn new(kinds: Vec<NodeKind>, adjacency: Vec<Vec<NodeId>>, root: NodeId) -> Result<Self> {
        let n = kinds.len();
        if adjacency.len() != n {
            return Err(Error::InvalidTopology(format!(
                "{} kinds but {} adjacency lists",
                n,
                adjacency.len()
            )));
        }
        if root >= n || kinds[root] != NodeKind::Terminal {
            return Err(Error::InvalidTopology(format!(
                "root {root} is not a terminal"
            )));
        }
        let mut degree_sum = 0;
        for (v, nbrs) in adjacency.iter().enumerate() {
            let want = match kinds[v] {
                NodeKind::Terminal => 1,
                NodeKind::Steiner => 3,
            };
            if nbrs.len() != want {
                return Err(Error::InvalidTopology(format!(
                    "node {v} ({:?}) has degree {}, expected {want}",
                    kinds[v],
                    nbrs.len()
                )));
            }
            for &w in nbrs {
                if w >= n || w == v {
                    return Err(Error::InvalidTopology(format!(
                        "node {v} has invalid neighbour {w}"
                    )));
                }
                if adjacency[w].iter().filter(|&&x| x == v).count() != 1
                    || nbrs.iter().filter(|&&x| x == w).count() != 1
                {
                    return Err(Error::InvalidTopology(format!(
                        "edge {v}-{w} is not listed exactly once on both ends"
                    )));
                }
            }
            degree_sum += nbrs.len();
        }
        let n_terminals = kinds.iter().filter(|&&k| k == NodeKind::Terminal).count();
        if n_terminals < 2 {
            return Err(Error::InvalidTopology("fewer than two terminals".into()));
        }
        if degree_sum / 2 + 1 != n {
            return Err(Error::InvalidTopology(format!(
                "{} edges on {} nodes is not a tree",
                degree_sum / 2,
                n
            )));
        }
        if n_terminals >= 2 && n - n_terminals != n_terminals.saturating_sub(2) {
            return Err(Error::InvalidTopology(format!(
                "{} Steiner points for {} terminals",
                n - n_terminals,
                n_terminals
            )));
        }

        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            let kids: Vec<NodeId> = adjacency[v]
                .iter()
                .copied()
                .filter(|&w| Some(w) != parent[v])
                .collect();
            for &w in &kids {
                if seen[w] {
                    return Err(Error::InvalidTopology("cycle detected".into()));
                }
                seen[w] = true;
                parent[w] = Some(v);
            }
            for &w in kids.iter().rev() {
                stack.push(w);
            }
            children[v] = kids;
        }
        if order.len() != n {
            return Err(Error::InvalidTopology("graph is disconnected".into()));
        }
        Ok(Self {
            kinds,
            adjacency,
            root,
            parent,
            children,
            order,
        })
    }

    /// Builds a topology from an undirected edge list. Neighbour order follows the edge order.
    pub fn from_edges(kinds: Vec<NodeKind>, edges: &[(NodeId, NodeId)], root: NodeId) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); kinds.len()];
        for &(a, b) in edges {
            if a >= kinds.len() || b >= kinds.len() {
                return Err(Error::InvalidTopology(format!("edge {a}-{b} out of range")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Self::new(kinds, adjacency, root)
    }

    /// Same tree rooted at a different terminal.
    pub fn rerooted(&self, root: NodeId) -> Result<Self> {
        Self::new(self.kinds.clone(), self.adjacency.clone(), root)
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_terminals(&self) -> usize {
        self.terminals().count()
    }

    pub fn n_steiner(&self) -> usize {
        self.node_count() - self.n_terminals()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn kind(&self, v: NodeId) -> NodeKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.kinds[v] == NodeKind::Terminal
    }

    pub fn is_steiner(&self, v: NodeId) -> bool {
        self.kinds[v] == NodeKind::Steiner
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    /// The single neighbour of the root terminal.
    pub fn root_child(&self) -> NodeId {
        self.children[self.root][0]
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).filter(|&v| self.is_terminal(v))
    }

    pub fn steiner_points(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).filter(|&v| self.is_steiner(v))
    }

    /// Nodes in pre-order from the root (parents before children).
    pub fn preorder(&self) -> &[NodeId] {
        &self.order
    }

    /// Nodes with children before parents.
    pub fn postorder(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.order.iter().rev().copied()
    }

    /// Edges as `(child, parent)` pairs, one per non-root node, in pre-order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.order
            .iter()
            .filter_map(|&v| self.parent[v].map(|p| (v, p)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.node_count() - 1
    }

    /// Terminals in the subtree hanging below `v` (including `v` itself).
    pub fn subtree_terminals(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if self.is_terminal(u) && u != self.root {
                out.push(u);
            }
            stack.extend(self.children[u].iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Turns terminal `t` into a Steiner point joined to two new terminals.
    /// Returns the new topology and the ids of the two new terminals.
    /// When `t` is the root, the first new terminal becomes the root.
    pub fn split_terminal(&self, t: NodeId) -> Result<(Self, [NodeId; 2])> {
        if t >= self.node_count() || !self.is_terminal(t) {
            return Err(Error::NotATerminal(t));
        }
        let n = self.node_count();
        let (t1, t2) = (n, n + 1);
        let mut kinds = self.kinds.clone();
        kinds[t] = NodeKind::Steiner;
        kinds.push(NodeKind::Terminal);
        kinds.push(NodeKind::Terminal);
        let mut adjacency = self.adjacency.clone();
        adjacency[t].push(t1);
        adjacency[t].push(t2);
        adjacency.push(vec![t]);
        adjacency.push(vec![t]);
        let root = if t == self.root { t1 } else { self.root };
        Ok((Self::new(kinds, adjacency, root)?, [t1, t2]))
    }
}

/// Heap index `i ≥ 1` of the binary family: children of `i` are `2i` and `2i+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeapIndex(u64);

impl HeapIndex {
    pub fn new(i: u64) -> Result<Self> {
        if i == 0 {
            return Err(Error::InvalidParameter("heap indices start at 1".into()));
        }
        Ok(Self(i))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `⌊log₂ i⌋`.
    pub fn level(self) -> u32 {
        63 - self.0.leading_zeros()
    }

    pub fn parent(self) -> u64 {
        self.0 / 2
    }

    /// Running balance `a_j(i)` for `j = 0..=level`: walking the binary digits
    /// of `i` below the leading one from the most significant end, a `1`
    /// (left turn) adds one and a `0` (right turn) subtracts one.
    pub fn turn_exponents(self) -> Vec<i32> {
        let h = self.level();
        let mut out = Vec::with_capacity(h as usize + 1);
        let mut acc = 0i32;
        out.push(acc);
        for j in 1..=h {
            let bit = (self.0 >> (h - j)) & 1;
            acc += if bit == 1 { 1 } else { -1 };
            out.push(acc);
        }
        out
    }

    /// `a_{h(i)}(i)`, the exponent of ω on the edge into `i`.
    pub fn last_exponent(self) -> i32 {
        let h = self.level();
        let ones = (self.0 & ((1u64 << h) - 1)).count_ones() as i32;
        2 * ones - h as i32
    }
}

/// The complete binary topology with `2^k + 1` terminals: root terminal 0,
/// Steiner points `1..2^k`, leaf terminals `2^k..2^{k+1}`, edges `(i, ⌊i/2⌋)`.
pub fn complete_binary_topology(k: u32) -> Result<FullTopology> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "k = 0 gives a two-node tree; k must be at least 1".into(),
        ));
    }
    if k > MAX_BINARY_DEPTH {
        return Err(Error::KTooLarge { k });
    }
    let n = 1usize << (k + 1);
    let first_leaf = 1usize << k;
    let mut kinds = vec![NodeKind::Steiner; n];
    kinds[0] = NodeKind::Terminal;
    for kind in kinds.iter_mut().skip(first_leaf) {
        *kind = NodeKind::Terminal;
    }
    let mut adjacency = Vec::with_capacity(n);
    adjacency.push(vec![1]);
    for i in 1..n {
        let p = i / 2;
        if i < first_leaf {
            adjacency.push(vec![p, 2 * i, 2 * i + 1]);
        } else {
            adjacency.push(vec![p]);
        }
    }
    FullTopology::new(kinds, adjacency, 0)
}

/// Two terminals sharing a Steiner point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cherry {
    pub steiner: NodeId,
    pub terminals: [NodeId; 2],
    /// Set when `n = 3`: the single Steiner point pairs with any two of its
    /// three terminals, so every pair is listed.
    pub ambiguous: bool,
}

impl Cherry {
    pub fn validate(&self, topology: &FullTopology) -> bool {
        topology.is_steiner(self.steiner)
            && self.terminals[0] != self.terminals[1]
            && self.terminals.iter().all(|&t| {
                topology.is_terminal(t) && topology.neighbors(self.steiner).contains(&t)
            })
    }
}

/// All cherries of the topology. Empty when `n < 3`.
pub fn cherries(topology: &FullTopology) -> Vec<Cherry> {
    let ambiguous = topology.n_terminals() == 3;
    let mut out = Vec::new();
    for s in topology.steiner_points() {
        let mut ts: Vec<NodeId> = topology
            .neighbors(s)
            .iter()
            .copied()
            .filter(|&t| topology.is_terminal(t))
            .collect();
        ts.sort_unstable();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                out.push(Cherry {
                    steiner: s,
                    terminals: [ts[i], ts[j]],
                    ambiguous,
                });
            }
        }
    }
    out
}
