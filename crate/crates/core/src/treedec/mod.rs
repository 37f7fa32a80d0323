//! Tree decompositions: construction by min-fill elimination, validation,
//! rooting and binarization.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::graph::Graph;

mod elimination;
mod incidence;

pub use elimination::{
    decompose, decompose_exact, decomposition_from_order, min_fill_order, EXACT_MAX_VERTICES,
};
pub use incidence::{build_graph, build_joint_graph, IncidenceGraph, Vertex};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("decomposition has no bags")]
    NoBags,
    #[error("bag tree is not a tree")]
    NotATree,
    #[error("root {0} is not a node")]
    BadRoot(NodeId),
    #[error("bag {node} mentions vertex {vertex}, which is not in the graph")]
    UnknownVertex { node: NodeId, vertex: usize },
    #[error("vertex {0} occurs in no bag")]
    MissingVertex(usize),
    #[error("edge {0}-{1} is covered by no bag")]
    UncoveredEdge(usize, usize),
    #[error("bags containing vertex {0} are not connected")]
    Disconnected(usize),
}

/// Bags indexed by node id, tree edges between nodes, and an optional root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(NodeId, NodeId)>,
    pub root: Option<NodeId>,
}

/// Parent/child view of a rooted decomposition.
#[derive(Clone, Debug)]
pub struct Rooted {
    pub root: NodeId,
    pub parent: Vec<Option<NodeId>>,
    /// Children in increasing id order.
    pub children: Vec<Vec<NodeId>>,
    /// Children before parents; siblings in increasing id order.
    pub postorder: Vec<NodeId>,
}

impl TreeDecomposition {
    /// A single bag holding every vertex.
    pub fn trivial(n: usize) -> Self {
        TreeDecomposition {
            bags: alloc::vec![(0..n).collect()],
            edges: Vec::new(),
            root: Some(0),
        }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Largest bag size minus one (0 for empty bags).
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    fn tree_adjacency(&self) -> Result<Vec<Vec<NodeId>>, Violation> {
        let n = self.bags.len();
        if n == 0 {
            return Err(Violation::NoBags);
        }
        if self.edges.len() != n - 1 {
            return Err(Violation::NotATree);
        }
        let mut adj = alloc::vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(Violation::NotATree);
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(adj)
    }

    /// Deterministic DOT rendering of the bag tree; `label` names vertices.
    pub fn to_dot(&self, label: impl Fn(usize) -> String) -> String {
        let mut s = String::from("graph decomposition {\n");
        for (node, bag) in self.bags.iter().enumerate() {
            let names: Vec<String> = bag.iter().map(|&v| label(v).replace('"', "\\\"")).collect();
            let _ = writeln!(s, "  n{node} [label=\"{}\"];", names.join(", "));
        }
        for (a, b) in &self.edges {
            let _ = writeln!(s, "  n{a} -- n{b};");
        }
        s.push_str("}\n");
        s
    }

    /// Parent/child structure from the root (node 0 if unrooted).
    pub fn rooted(&self) -> Result<Rooted, Violation> {
        let adj = self.tree_adjacency()?;
        let n = self.bags.len();
        let root = self.root.unwrap_or(0);
        if root >= n {
            return Err(Violation::BadRoot(root));
        }
        let mut parent = alloc::vec![None; n];
        let mut children = alloc::vec![Vec::new(); n];
        let mut seen = alloc::vec![false; n];
        let mut bfs = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            bfs.push(x);
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    children[x].push(y);
                    queue.push_back(y);
                }
            }
        }
        if bfs.len() != n {
            return Err(Violation::NotATree);
        }
        // iterative postorder
        let mut postorder = Vec::with_capacity(n);
        let mut stack = alloc::vec![(root, 0usize)];
        while let Some((x, i)) = stack.pop() {
            if i < children[x].len() {
                stack.push((x, i + 1));
                stack.push((children[x][i], 0));
            } else {
                postorder.push(x);
            }
        }
        Ok(Rooted {
            root,
            parent,
            children,
            postorder,
        })
    }

    /// Checks vertex coverage, edge coverage and running intersection,
    /// reporting the first violated condition in that order.
    pub fn validate(&self, g: &Graph) -> Result<(), Violation> {
        let n = self.bags.len();
        self.tree_adjacency()?;
        if let Some(r) = self.root {
            if r >= n {
                return Err(Violation::BadRoot(r));
            }
        }
        let mut occurrences: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); g.len()];
        for (node, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if v >= g.len() {
                    return Err(Violation::UnknownVertex { node, vertex: v });
                }
                occurrences[v].push(node);
            }
        }
        for list in &mut occurrences {
            list.dedup();
        }
        if let Some(v) = occurrences.iter().position(Vec::is_empty) {
            return Err(Violation::MissingVertex(v));
        }
        let sorted: Vec<Vec<usize>> = self
            .bags
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        for (u, v) in g.edges() {
            let (small, other) = if occurrences[u].len() <= occurrences[v].len() {
                (u, v)
            } else {
                (v, u)
            };
            if !occurrences[small]
                .iter()
                .any(|&node| sorted[node].binary_search(&other).is_ok())
            {
                return Err(Violation::UncoveredEdge(u, v));
            }
        }
        // A vertex's nodes induce a subtree iff they span |nodes| - 1 tree edges.
        let mut shared_edges = alloc::vec![0usize; g.len()];
        for &(a, b) in &self.edges {
            for_each_common(&sorted[a], &sorted[b], |v| shared_edges[v] += 1);
        }
        for v in 0..g.len() {
            if shared_edges[v] + 1 != occurrences[v].len() {
                return Err(Violation::Disconnected(v));
            }
        }
        Ok(())
    }

    /// Roots the tree (at its root, or node 0) and splits every node with
    /// more than two children into a chain of copies of its bag. Existing
    /// node ids are kept; copies are appended.
    pub fn root_and_binarize(&self) -> Result<TreeDecomposition, Violation> {
        let rooted = self.rooted()?;
        let mut bags = self.bags.clone();
        let mut edges = Vec::with_capacity(self.edges.len());
        for node in 0..self.bags.len() {
            let kids = &rooted.children[node];
            let mut holder = node;
            let mut rest: &[NodeId] = kids;
            while rest.len() > 2 {
                edges.push((holder, rest[0]));
                let copy = bags.len();
                bags.push(self.bags[node].clone());
                edges.push((holder, copy));
                holder = copy;
                rest = &rest[1..];
            }
            for &k in rest {
                edges.push((holder, k));
            }
        }
        Ok(TreeDecomposition {
            bags,
            edges,
            root: Some(rooted.root),
        })
    }

    /// For every vertex of a graph with `n` vertices, the topmost node whose
    /// bag contains it (`None` if it occurs nowhere).
    pub fn topmost_nodes(&self, rooted: &Rooted, n: usize) -> Vec<Option<NodeId>> {
        let mut top = alloc::vec![None; n];
        for (node, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                let kept = rooted.parent[node].is_some_and(|p| self.bags[p].contains(&v));
                if !kept {
                    top[v] = Some(node);
                }
            }
        }
        top
    }
}

fn for_each_common(a: &[usize], b: &[usize], mut f: impl FnMut(usize)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    #[test]
    fn path_and_triangle_widths() {
        let t = decompose(&path(7));
        assert_eq!(t.validate(&path(7)), Ok(()));
        assert_eq!(t.width(), 1);
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let t = decompose(&tri);
        assert_eq!(t.validate(&tri), Ok(()));
        assert_eq!(t.width(), 2);
    }

    #[test]
    fn missing_edge_is_reported() {
        let g = path(3);
        let t = TreeDecomposition {
            bags: vec![vec![0, 1], vec![2]],
            edges: vec![(0, 1)],
            root: None,
        };
        assert_eq!(t.validate(&g), Err(Violation::UncoveredEdge(1, 2)));
    }

    #[test]
    fn running_intersection_is_reported() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 3)]);
        // vertex 0 in nodes 0 and 2, which are separated by node 1
        let t = TreeDecomposition {
            bags: vec![vec![0, 1], vec![1, 2], vec![0, 3]],
            edges: vec![(0, 1), (1, 2)],
            root: None,
        };
        assert_eq!(t.validate(&g), Err(Violation::Disconnected(0)));
    }

    #[test]
    fn missing_vertex_and_shape_errors() {
        let g = path(3);
        let t = TreeDecomposition {
            bags: vec![vec![0, 1]],
            edges: vec![],
            root: None,
        };
        assert_eq!(t.validate(&g), Err(Violation::MissingVertex(2)));
        let cyc = TreeDecomposition {
            bags: vec![vec![0, 1], vec![1, 2], vec![1]],
            edges: vec![(0, 1), (1, 2), (2, 0)],
            root: None,
        };
        assert_eq!(cyc.validate(&g), Err(Violation::NotATree));
    }

    #[test]
    fn star_is_binarized() {
        let g = Graph::from_edges(6, (1..6).map(|i| (0, i)));
        let t = TreeDecomposition {
            bags: vec![
                vec![0],
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![0, 4],
                vec![0, 5],
            ],
            edges: (1..6).map(|i| (0, i)).collect(),
            root: Some(0),
        };
        assert_eq!(t.validate(&g), Ok(()));
        let b = t.root_and_binarize().unwrap();
        assert_eq!(b.validate(&g), Ok(()));
        assert_eq!(b.width(), t.width());
        let r = b.rooted().unwrap();
        assert!(r.children.iter().all(|c| c.len() <= 2));
        assert_eq!(b.len(), 6 + 3);
    }

    #[test]
    fn binary_tree_is_unchanged() {
        let t = TreeDecomposition {
            bags: vec![vec![0], vec![0, 1], vec![0, 2]],
            edges: vec![(0, 1), (0, 2)],
            root: Some(0),
        };
        let b = t.root_and_binarize().unwrap();
        assert_eq!(b.bags, t.bags);
        let mut e = b.edges.clone();
        e.sort_unstable();
        assert_eq!(e, t.edges);
    }

    #[test]
    fn topmost_nodes() {
        let t = TreeDecomposition {
            bags: vec![vec![0], vec![0, 1], vec![1, 2]],
            edges: vec![(0, 1), (1, 2)],
            root: Some(0),
        };
        let r = t.rooted().unwrap();
        assert_eq!(t.topmost_nodes(&r, 3), vec![Some(0), Some(1), Some(2)]);
        assert_eq!(r.postorder, vec![2, 1, 0]);
    }
}
