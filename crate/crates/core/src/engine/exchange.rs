use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::CommGraph;

/// Inbox of one agent: `(sender, payload)` pairs.
pub type Inbox<T> = Vec<(usize, T)>;

/// Synchronous message passing over a communication graph with seeded,
/// per-message drops and a fixed delivery delay.
#[derive(Debug, Clone)]
pub struct Exchange<T> {
    neighbors: Vec<Vec<usize>>,
    drop_probability: f64,
    delay: usize,
    in_flight: VecDeque<Vec<Inbox<T>>>,
    rng: ChaCha8Rng,
}

impl<T: Clone> Exchange<T> {
    pub fn new(graph: &CommGraph, drop_probability: f64, delay: usize, rng: ChaCha8Rng) -> Self {
        Self {
            neighbors: (0..graph.len()).map(|i| graph.neighbors(i).to_vec()).collect(),
            drop_probability,
            delay,
            in_flight: VecDeque::with_capacity(delay + 1),
            rng,
        }
    }

    pub fn agents(&self) -> usize {
        self.neighbors.len()
    }

    /// Publishes one payload per agent and returns the inboxes due this round.
    ///
    /// With zero delay the inboxes hold exactly what the neighbours published
    /// in this call, i.e. their state from the end of the previous round.
    pub fn round(&mut self, outbox: &[T]) -> Vec<Inbox<T>> {
        let n = self.neighbors.len();
        let mut inboxes: Vec<Inbox<T>> = (0..n).map(|i| Vec::with_capacity(self.neighbors[i].len())).collect();
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            for &j in nbrs {
                if self.drop_probability > 0.0 && self.rng.random::<f64>() < self.drop_probability {
                    continue;
                }
                inboxes[i].push((j, outbox[j].clone()));
            }
        }
        self.in_flight.push_back(inboxes);
        if self.in_flight.len() > self.delay {
            self.in_flight.pop_front().expect("non-empty queue")
        } else {
            (0..n).map(|_| Vec::new()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    fn path3() -> CommGraph {
        CommGraph::from_edges(3, &[(0, 1), (1, 2)])
    }

    #[test]
    fn immediate_delivery() {
        let mut ex = Exchange::new(&path3(), 0.0, 0, ChaCha8Rng::seed_from_u64(1));
        let inbox = ex.round(&[10, 20, 30]);
        assert_eq!(inbox[0], vec![(1, 20)]);
        assert_eq!(inbox[1], vec![(0, 10), (2, 30)]);
        assert_eq!(inbox[2], vec![(1, 20)]);
    }

    #[test]
    fn delayed_delivery_is_fifo() {
        let mut ex = Exchange::new(&path3(), 0.0, 2, ChaCha8Rng::seed_from_u64(1));
        assert!(ex.round(&[1, 1, 1]).iter().all(Vec::is_empty));
        assert!(ex.round(&[2, 2, 2]).iter().all(Vec::is_empty));
        assert_eq!(ex.round(&[3, 3, 3])[0], vec![(1, 1)]);
        assert_eq!(ex.round(&[4, 4, 4])[0], vec![(1, 2)]);
    }

    #[test]
    fn full_drop_empties_inboxes() {
        let mut ex = Exchange::new(&path3(), 1.0, 0, ChaCha8Rng::seed_from_u64(1));
        for _ in 0..5 {
            assert!(ex.round(&[1, 2, 3]).iter().all(Vec::is_empty));
        }
    }

    #[test]
    fn drops_are_seeded() {
        let run = |seed| {
            let mut ex = Exchange::new(&path3(), 0.5, 0, ChaCha8Rng::seed_from_u64(seed));
            (0..20).map(|_| ex.round(&[1, 2, 3])).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
    }
}
