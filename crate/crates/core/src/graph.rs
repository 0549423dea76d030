//! Undirected communication graphs between agents.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Undirected graph on `n` agents stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Builds a graph from index pairs. Self-loops and duplicate edges are
    /// ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    /// Every agent talks to every other agent.
    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Self { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// First vertex not reachable from vertex 0, if any.
    pub fn unreachable(&self) -> Option<usize> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    pub fn is_connected(&self) -> bool {
        self.unreachable().is_none()
    }

    /// Metropolis-Hastings weights `1 / (1 + max(deg_i, deg_j))` for every
    /// edge, listed per agent as `(neighbor, weight)`.
    ///
    /// The resulting consensus matrix is symmetric and doubly stochastic on any
    /// connected graph.
    pub fn metropolis_weights(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.len())
            .map(|i| {
                self.adjacency[i]
                    .iter()
                    .map(|&j| {
                        let d = self.degree(i).max(self.degree(j));
                        (j, 1.0 / (1.0 + d as f64))
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_weights() {
        let g = CommGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let w = g.metropolis_weights();
        assert_eq!(w[0], vec![(1, 1.0 / 3.0)]);
        assert_eq!(w[1], vec![(0, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        // Row sums below one leave a positive self-weight.
        for row in &w {
            assert!(row.iter().map(|(_, x)| x).sum::<f64>() < 1.0);
        }
    }

    #[test]
    fn detects_disconnection() {
        let g = CommGraph::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(g.unreachable(), Some(2));
        assert!(CommGraph::complete(4).is_connected());
    }

    #[test]
    fn ignores_duplicates_and_loops() {
        let g = CommGraph::from_edges(2, &[(0, 1), (1, 0), (1, 1)]);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
    }
}
