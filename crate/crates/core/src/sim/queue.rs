use std::collections::VecDeque;

use arrayvec::ArrayVec;

use crate::model::{Bits, ClassId, CompatibilityGraph};
use crate::transition::TransitionType;

/// An item leaving the system after being matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Departure {
    pub class: ClassId,
    pub arrival_slot: u64,
    pub departure_slot: u64,
}

impl Departure {
    /// Slots spent unmatched; zero when matched on arrival.
    pub fn wait(&self) -> u64 {
        self.departure_slot - self.arrival_slot
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub transition: TransitionType,
    /// Between two and four departures, or none on `+/+`.
    pub departures: ArrayVec<Departure, 4>,
    /// The incoming customer joined the customer queue.
    pub customer_queued: bool,
    /// The incoming server joined the server queue.
    pub server_queued: bool,
}

/// Unmatched customers and servers in arrival order.
///
/// Each side is stored as one FIFO of arrival slots per class, plus a mask
/// of the classes currently present. The longest-waiting compatible item of
/// an incoming class is the smallest head among its compatible, non-empty
/// class queues, found in `O(degree)` without scanning the queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    customers: Vec<VecDeque<u64>>,
    servers: Vec<VecDeque<u64>>,
    customer_present: u64,
    server_present: u64,
    customer_len: usize,
    server_len: usize,
}

impl QueueState {
    pub fn new(graph: &CompatibilityGraph) -> Self {
        QueueState {
            customers: vec![VecDeque::new(); graph.customer_count()],
            servers: vec![VecDeque::new(); graph.server_count()],
            customer_present: 0,
            server_present: 0,
            customer_len: 0,
            server_len: 0,
        }
    }

    /// Builds a state from class sequences ordered oldest first. Item `p`
    /// of each sequence gets arrival slot `p`.
    pub fn from_sequences(
        graph: &CompatibilityGraph,
        customers: &[usize],
        servers: &[usize],
    ) -> Self {
        let mut state = QueueState::new(graph);
        for (slot, &i) in customers.iter().enumerate() {
            state.push_customer(i, slot as u64);
        }
        for (slot, &k) in servers.iter().enumerate() {
            state.push_server(k, slot as u64);
        }
        state
    }

    /// Number of unmatched customers (equal to the number of unmatched
    /// servers in any reachable state).
    pub fn len(&self) -> usize {
        self.customer_len
    }

    pub fn is_empty(&self) -> bool {
        self.customer_len == 0 && self.server_len == 0
    }

    pub fn customer_mask(&self) -> u64 {
        self.customer_present
    }

    pub fn server_mask(&self) -> u64 {
        self.server_present
    }

    /// Customer classes, oldest first.
    pub fn customer_sequence(&self) -> Vec<usize> {
        merge(&self.customers)
    }

    /// Server classes, oldest first.
    pub fn server_sequence(&self) -> Vec<usize> {
        merge(&self.servers)
    }

    /// Equal queue lengths and no compatible customer-server pair waiting.
    pub fn satisfies_invariants(&self, graph: &CompatibilityGraph) -> bool {
        self.customer_len == self.server_len
            && Bits(self.customer_present).all(|i| graph.servers_of(i) & self.server_present == 0)
    }

    /// Applies one arrival of a class-`customer` customer and a
    /// class-`server` server at `slot`:
    ///
    /// 1. the customer takes the longest-waiting compatible server, if any;
    /// 2. the server takes the longest-waiting compatible customer, if any;
    /// 3. if neither was matched and they are compatible, they pair up;
    /// 4. whoever is left joins the back of its queue.
    pub fn step(
        &mut self,
        graph: &CompatibilityGraph,
        customer: usize,
        server: usize,
        slot: u64,
    ) -> StepOutcome {
        let mut departures = ArrayVec::new();

        let customer_match = oldest(
            &self.servers,
            graph.servers_of(customer) & self.server_present,
        );
        if let Some(k) = customer_match {
            let arrival_slot = self.pop_server(k);
            departures.push(Departure {
                class: ClassId::server(k),
                arrival_slot,
                departure_slot: slot,
            });
            departures.push(Departure {
                class: ClassId::customer(customer),
                arrival_slot: slot,
                departure_slot: slot,
            });
        }

        let server_match = oldest(
            &self.customers,
            graph.customers_of(server) & self.customer_present,
        );
        if let Some(i) = server_match {
            let arrival_slot = self.pop_customer(i);
            departures.push(Departure {
                class: ClassId::customer(i),
                arrival_slot,
                departure_slot: slot,
            });
            departures.push(Departure {
                class: ClassId::server(server),
                arrival_slot: slot,
                departure_slot: slot,
            });
        }

        let compatible = graph.are_compatible(customer, server);
        let transition =
            TransitionType::classify(customer_match.is_some(), server_match.is_some(), compatible);

        let mut customer_queued = false;
        let mut server_queued = false;
        match transition {
            TransitionType::KeepKeep => {
                departures.push(Departure {
                    class: ClassId::customer(customer),
                    arrival_slot: slot,
                    departure_slot: slot,
                });
                departures.push(Departure {
                    class: ClassId::server(server),
                    arrival_slot: slot,
                    departure_slot: slot,
                });
            }
            TransitionType::MinusMinus => {}
            TransitionType::ReplaceKeep => {
                self.push_customer(customer, slot);
                customer_queued = true;
            }
            TransitionType::KeepReplace => {
                self.push_server(server, slot);
                server_queued = true;
            }
            TransitionType::PlusPlus => {
                self.push_customer(customer, slot);
                self.push_server(server, slot);
                customer_queued = true;
                server_queued = true;
            }
        }

        StepOutcome {
            transition,
            departures,
            customer_queued,
            server_queued,
        }
    }

    fn push_customer(&mut self, i: usize, slot: u64) {
        self.customers[i].push_back(slot);
        self.customer_present |= 1 << i;
        self.customer_len += 1;
    }

    fn push_server(&mut self, k: usize, slot: u64) {
        self.servers[k].push_back(slot);
        self.server_present |= 1 << k;
        self.server_len += 1;
    }

    fn pop_customer(&mut self, i: usize) -> u64 {
        let slot = self.customers[i].pop_front().expect("class present");
        if self.customers[i].is_empty() {
            self.customer_present &= !(1 << i);
        }
        self.customer_len -= 1;
        slot
    }

    fn pop_server(&mut self, k: usize) -> u64 {
        let slot = self.servers[k].pop_front().expect("class present");
        if self.servers[k].is_empty() {
            self.server_present &= !(1 << k);
        }
        self.server_len -= 1;
        slot
    }
}

/// Class in `candidates` whose head item arrived first.
fn oldest(queues: &[VecDeque<u64>], candidates: u64) -> Option<usize> {
    Bits(candidates).min_by_key(|&c| queues[c].front().copied().unwrap_or(u64::MAX))
}

fn merge(queues: &[VecDeque<u64>]) -> Vec<usize> {
    let mut items: Vec<(u64, usize)> = queues
        .iter()
        .enumerate()
        .flat_map(|(class, q)| q.iter().map(move |&slot| (slot, class)))
        .collect();
    items.sort_unstable();
    items.into_iter().map(|(_, class)| class).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn worked_example_transition() {
        // c = (1, 2, 1), d = (D, D, D), arrival (2, C)
        let g = presets::path_graph();
        let mut state = QueueState::from_sequences(&g, &[0, 1, 0], &[3, 3, 3]);
        assert!(state.satisfies_invariants(&g));
        let out = state.step(&g, 1, 2, 10);
        assert_eq!(out.transition, TransitionType::ReplaceKeep);
        assert_eq!(state.customer_sequence(), vec![0, 0, 1]);
        assert_eq!(state.server_sequence(), vec![3, 3, 3]);
        assert!(out.customer_queued && !out.server_queued);
        let waits: Vec<_> = out.departures.iter().map(|d| (d.class, d.wait())).collect();
        assert_eq!(
            waits,
            vec![(ClassId::customer(1), 9), (ClassId::server(2), 0)]
        );
    }

    #[test]
    fn single_pair_matches_together() {
        let m = presets::single_pair();
        let mut state = QueueState::new(m.graph());
        let out = state.step(m.graph(), 0, 0, 0);
        assert_eq!(out.transition, TransitionType::KeepKeep);
        assert!(state.is_empty());
        assert_eq!(out.departures.len(), 2);
    }

    #[test]
    fn n_graph_incompatible_pair_waits() {
        let g = presets::n_graph();
        let mut state = QueueState::new(&g);
        let out = state.step(&g, 1, 0, 0);
        assert_eq!(out.transition, TransitionType::PlusPlus);
        assert_eq!(state.customer_sequence(), vec![1]);
        assert_eq!(state.server_sequence(), vec![0]);
        assert!(out.departures.is_empty());

        // 1 arrives with B: customer 1 takes waiting A, B takes waiting 2
        let out = state.step(&g, 0, 1, 3);
        assert_eq!(out.transition, TransitionType::MinusMinus);
        assert!(state.is_empty());
        let total_wait: u64 = out.departures.iter().map(Departure::wait).sum();
        assert_eq!(total_wait, 6);
    }

    #[test]
    fn oldest_compatible_item_wins() {
        // servers waiting: D (slot 0), C (slot 1); customer 3 is compatible with both
        let g = presets::path_graph();
        let mut state = QueueState::from_sequences(&g, &[0, 0], &[3, 2]);
        assert!(state.satisfies_invariants(&g));
        let out = state.step(&g, 2, 0, 5);
        assert_eq!(out.transition, TransitionType::MinusMinus);
        assert_eq!(state.server_sequence(), vec![2]);
        assert_eq!(state.customer_sequence(), vec![0]);
    }
}
