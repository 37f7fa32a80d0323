use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{NodeId, TreeDecomposition};
use crate::graph::Graph;

/// Largest graph [`decompose_exact`] accepts.
pub const EXACT_MAX_VERTICES: usize = 15;

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Min-fill elimination order, ties broken by smallest vertex id. Also
/// returns, for each eliminated vertex, its neighbours at elimination time.
pub fn min_fill_order(g: &Graph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = g.len();
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| g.neighbors(v).iter().copied().collect())
        .collect();
    let mut fill: Vec<usize> = (0..n).map(|v| fill_in(&adj, v)).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (fill[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut higher = Vec::with_capacity(n);
    let mut touched = BTreeSet::new();
    while let Some((_, v)) = queue.pop_first() {
        let nbrs: Vec<usize> = core::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        touched.clear();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                    touched.insert(a);
                    touched.insert(b);
                }
            }
        }
        let mut affected: BTreeSet<usize> = nbrs.iter().copied().collect();
        for &a in &touched {
            affected.extend(adj[a].iter().copied());
        }
        for u in affected {
            if queue.remove(&(fill[u], u)) {
                fill[u] = fill_in(&adj, u);
                queue.insert((fill[u], u));
            }
        }
        order.push(v);
        higher.push(nbrs);
    }
    (order, higher)
}

/// Tree decomposition from an elimination order: one bag per vertex holding
/// the vertex and its later neighbours in the filled graph. Bags contained in
/// their parent are merged away; components are chained under the last bag.
pub fn decomposition_from_order(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let n = g.len();
    assert_eq!(order.len(), n, "order must list every vertex once");
    if n == 0 {
        return TreeDecomposition {
            bags: alloc::vec![Vec::new()],
            edges: Vec::new(),
            root: Some(0),
        };
    }
    let mut pos = alloc::vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| g.neighbors(v).iter().copied().collect())
        .collect();
    let mut higher: Vec<Vec<usize>> = Vec::with_capacity(n);
    for &v in order {
        let nbrs: Vec<usize> = core::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        higher.push(nbrs);
    }
    from_higher(order, &pos, higher)
}

fn from_higher(order: &[usize], pos: &[usize], higher: Vec<Vec<usize>>) -> TreeDecomposition {
    let n = order.len();
    let mut bags: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut parent: Vec<Option<NodeId>> = Vec::with_capacity(n);
    for (i, &v) in order.iter().enumerate() {
        let mut bag = higher[i].clone();
        bag.push(v);
        bag.sort_unstable();
        parent.push(higher[i].iter().map(|&u| pos[u]).min());
        bags.push(bag);
    }
    // merge bags contained in their parent's bag
    let last = n - 1;
    let mut alias: Vec<NodeId> = (0..n).collect();
    for i in 0..last {
        if let Some(p) = parent[i] {
            if is_subset(&bags[i], &bags[p]) {
                alias[i] = p;
            }
        }
    }
    fn resolve(alias: &[NodeId], mut x: NodeId) -> NodeId {
        while alias[x] != x {
            x = alias[x];
        }
        x
    }
    let mut new_id = alloc::vec![usize::MAX; n];
    let mut out_bags = Vec::new();
    for i in 0..n {
        if alias[i] == i {
            new_id[i] = out_bags.len();
            out_bags.push(core::mem::take(&mut bags[i]));
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        if alias[i] != i {
            continue;
        }
        let p = match parent[i] {
            Some(p) => resolve(&alias, p),
            None if i == last => continue,
            None => last,
        };
        edges.push((new_id[p], new_id[i]));
    }
    TreeDecomposition {
        bags: out_bags,
        edges,
        root: Some(new_id[last]),
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Min-fill heuristic decomposition; always valid, not necessarily optimal.
pub fn decompose(g: &Graph) -> TreeDecomposition {
    if g.is_empty() {
        return decomposition_from_order(g, &[]);
    }
    let (order, higher) = min_fill_order(g);
    let mut pos = alloc::vec![0; g.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    from_higher(&order, &pos, higher)
}

/// Optimal-width decomposition by branch and bound over elimination orders,
/// for graphs of at most [`EXACT_MAX_VERTICES`] vertices.
pub fn decompose_exact(g: &Graph) -> Option<TreeDecomposition> {
    let n = g.len();
    if n > EXACT_MAX_VERTICES {
        return None;
    }
    if n == 0 {
        return Some(decompose(g));
    }
    let (heuristic, _) = min_fill_order(g);
    let mut search = Search {
        n,
        best: order_width(g, &heuristic),
        best_order: heuristic,
        seen: alloc::vec![u8::MAX; 1 << n],
        stack: Vec::with_capacity(n),
    };
    let mut adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    search.run(&mut adj, 0, 0);
    Some(decomposition_from_order(g, &search.best_order))
}

/// Width of the decomposition an elimination order induces.
fn order_width(g: &Graph, order: &[usize]) -> usize {
    decomposition_from_order(g, order).width()
}

struct Search {
    n: usize,
    best: usize,
    best_order: Vec<usize>,
    seen: Vec<u8>,
    stack: Vec<usize>,
}

impl Search {
    fn run(&mut self, adj: &mut [u32], eliminated: u32, width: usize) {
        let n = self.n;
        if eliminated.count_ones() as usize == n {
            if width < self.best {
                self.best = width;
                self.best_order = self.stack.clone();
            }
            return;
        }
        if width >= self.best || self.seen[eliminated as usize] as usize <= width {
            return;
        }
        self.seen[eliminated as usize] = width as u8;
        let live = |v: usize| eliminated >> v & 1 == 0;
        let min_degree = (0..n)
            .filter(|&v| live(v))
            .map(|v| adj[v].count_ones() as usize)
            .min()
            .unwrap_or(0);
        if width.max(min_degree) >= self.best {
            return;
        }
        for v in (0..n).filter(|&v| live(v)) {
            let nb = adj[v];
            let w = width.max(nb.count_ones() as usize);
            if w >= self.best {
                continue;
            }
            let saved: Vec<u32> = adj.to_vec();
            for u in 0..n {
                if nb >> u & 1 == 1 {
                    adj[u] = (adj[u] | nb) & !(1 << u) & !(1 << v);
                }
            }
            adj[v] = 0;
            self.stack.push(v);
            self.run(adj, eliminated | 1 << v, w);
            self.stack.pop();
            adj.copy_from_slice(&saved);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_has_width_two() {
        let g = Graph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6)));
        let t = decompose(&g);
        assert_eq!(t.validate(&g), Ok(()));
        assert_eq!(t.width(), 2);
        assert_eq!(decompose_exact(&g).unwrap().width(), 2);
    }

    #[test]
    fn grid_exact_beats_or_matches_heuristic() {
        // 3x3 grid, treewidth 3
        let idx = |r: usize, c: usize| r * 3 + c;
        let mut edges = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                if c + 1 < 3 {
                    edges.push((idx(r, c), idx(r, c + 1)));
                }
                if r + 1 < 3 {
                    edges.push((idx(r, c), idx(r + 1, c)));
                }
            }
        }
        let g = Graph::from_edges(9, edges);
        let exact = decompose_exact(&g).unwrap();
        assert_eq!(exact.validate(&g), Ok(()));
        assert_eq!(exact.width(), 3);
        assert!(decompose(&g).width() >= 3);
    }

    #[test]
    fn disconnected_and_empty_graphs() {
        let g = Graph::from_edges(5, [(0, 1), (3, 4)]);
        let t = decompose(&g);
        assert_eq!(t.validate(&g), Ok(()));
        assert_eq!(t.width(), 1);
        let e = Graph::new(0);
        let t = decompose(&e);
        assert_eq!(t.len(), 1);
        assert_eq!(t.validate(&e), Ok(()));
    }

    #[test]
    fn exact_refuses_large_graphs() {
        assert!(decompose_exact(&Graph::new(EXACT_MAX_VERTICES + 1)).is_none());
    }
}
