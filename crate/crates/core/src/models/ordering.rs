//! Reverse Cuthill-McKee node ordering.

use std::collections::VecDeque;

use crate::models::graph::GraphSpec;

/// Order `perm` with `perm[k]` = original node placed at position `k`.
///
/// Each connected component is traversed breadth-first from a minimum-degree
/// node, visiting neighbours by ascending degree; the concatenated order is
/// then reversed.
pub fn rcm_ordering(g: &GraphSpec) -> Vec<usize> {
    let adj = g.adjacency();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let n = g.num_nodes;
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (deg[v], v));
    let mut queue = VecDeque::new();
    for &start in &by_degree {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !seen[u]).collect();
            next.sort_by_key(|&u| (deg[u], u));
            for u in next {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Bandwidth `max |pos(i) - pos(j)|` over edges under `order`.
pub fn bandwidth_under(g: &GraphSpec, order: &[usize]) -> usize {
    let mut pos = vec![0; g.num_nodes];
    for (k, &o) in order.iter().enumerate() {
        pos[o] = k;
    }
    g.edges.iter().map(|e| pos[e.i].abs_diff(pos[e.j])).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::graph::Edge;

    fn is_perm(p: &[usize]) -> bool {
        let mut s = p.to_vec();
        s.sort_unstable();
        s.iter().enumerate().all(|(k, &v)| k == v)
    }

    #[test]
    fn complete_and_star() {
        let n = 5;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge { i, j, length: 1.0 });
            }
        }
        let g = GraphSpec::new(n, edges).unwrap();
        let p = rcm_ordering(&g);
        assert!(is_perm(&p));
        assert_eq!(bandwidth_under(&g, &p), n - 1);

        let star = GraphSpec::new(6, (1..6).map(|j| Edge { i: 0, j, length: 1.0 }).collect()).unwrap();
        assert!(is_perm(&rcm_ordering(&star)));
    }

    #[test]
    fn disconnected_components() {
        let g = GraphSpec::new(
            4,
            vec![Edge { i: 0, j: 2, length: 1.0 }, Edge { i: 1, j: 3, length: 1.0 }],
        )
        .unwrap();
        let p = rcm_ordering(&g);
        assert!(is_perm(&p));
        assert_eq!(bandwidth_under(&g, &p), 1);
    }
}
