use super::classes::{bit, Bits, ClassId, ClassSet, Side, MAX_CLASSES};
use crate::error::{Error, Result};

/// Bipartite compatibility graph between customer classes and server classes.
///
/// Adjacency is stored as one bitmask per class, so the neighbourhood of a
/// whole set is a handful of ORs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityGraph {
    /// `𝒦_i` for each customer class `i`.
    customer_adj: Vec<u64>,
    /// `ℐ_k` for each server class `k`.
    server_adj: Vec<u64>,
}

impl CompatibilityGraph {
    /// Builds a graph from `(customer, server)` edges. Duplicate edges are
    /// ignored. Fails unless the graph is connected.
    pub fn new(
        customers: usize,
        servers: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if customers == 0 || servers == 0 {
            return Err(Error::EmptySide);
        }
        if customers + servers > MAX_CLASSES {
            return Err(Error::TooManyClasses {
                customers,
                servers,
                limit: MAX_CLASSES,
            });
        }
        let mut customer_adj = vec![0u64; customers];
        let mut server_adj = vec![0u64; servers];
        for (i, k) in edges {
            if i >= customers || k >= servers {
                return Err(Error::EdgeOutOfRange {
                    customer: i,
                    server: k,
                });
            }
            customer_adj[i] |= bit(k);
            server_adj[k] |= bit(i);
        }
        let graph = CompatibilityGraph {
            customer_adj,
            server_adj,
        };
        let components = graph.components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    /// Complete bipartite graph `K_{I,K}`.
    pub fn complete(customers: usize, servers: usize) -> Result<Self> {
        let edges = (0..customers).flat_map(|i| (0..servers).map(move |k| (i, k)));
        Self::new(customers, servers, edges.collect::<Vec<_>>())
    }

    #[inline]
    pub fn customer_count(&self) -> usize {
        self.customer_adj.len()
    }

    #[inline]
    pub fn server_count(&self) -> usize {
        self.server_adj.len()
    }

    pub fn class_count(&self) -> usize {
        self.customer_count() + self.server_count()
    }

    pub fn count(&self, side: Side) -> usize {
        match side {
            Side::Customer => self.customer_count(),
            Side::Server => self.server_count(),
        }
    }

    /// The set `ℐ ∪ 𝒦` of all classes.
    pub fn all_classes(&self) -> ClassSet {
        ClassSet::from_masks(
            low_mask(self.customer_count()),
            low_mask(self.server_count()),
        )
    }

    #[inline]
    pub fn are_compatible(&self, customer: usize, server: usize) -> bool {
        self.customer_adj[customer] & bit(server) != 0
    }

    /// Bitmask of `𝒦_i`.
    #[inline]
    pub fn servers_of(&self, customer: usize) -> u64 {
        self.customer_adj[customer]
    }

    /// Bitmask of `ℐ_k`.
    #[inline]
    pub fn customers_of(&self, server: usize) -> u64 {
        self.server_adj[server]
    }

    /// `𝒦(A ∩ ℐ)`: server classes compatible with at least one customer class of `set`.
    pub fn compatible_servers(&self, set: ClassSet) -> ClassSet {
        let mask = set
            .customers()
            .fold(0u64, |acc, i| acc | self.customer_adj[i]);
        ClassSet::from_masks(0, mask)
    }

    /// `ℐ(A ∩ 𝒦)`: customer classes compatible with at least one server class of `set`.
    pub fn compatible_customers(&self, set: ClassSet) -> ClassSet {
        let mask = set.servers().fold(0u64, |acc, k| acc | self.server_adj[k]);
        ClassSet::from_masks(mask, 0)
    }

    /// No edge joins the customer part of `set` to its server part.
    pub fn is_independent(&self, set: ClassSet) -> bool {
        self.compatible_servers(set).server_mask() & set.server_mask() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.customer_adj
            .iter()
            .enumerate()
            .flat_map(|(i, &adj)| Bits(adj).map(move |k| (i, k)))
    }

    /// Same graph with the roles of customers and servers exchanged.
    pub fn mirrored(&self) -> CompatibilityGraph {
        CompatibilityGraph {
            customer_adj: self.server_adj.clone(),
            server_adj: self.customer_adj.clone(),
        }
    }

    fn components(&self) -> Vec<ClassSet> {
        let mut seen = ClassSet::EMPTY;
        let mut components = Vec::new();
        for start in self.all_classes().iter() {
            if seen.contains(start) {
                continue;
            }
            let mut component = ClassSet::EMPTY.with(start);
            let mut stack = vec![start];
            while let Some(class) = stack.pop() {
                let neighbours = match class.side {
                    Side::Customer => Bits(self.customer_adj[class.index])
                        .map(ClassId::server)
                        .collect::<Vec<_>>(),
                    Side::Server => Bits(self.server_adj[class.index])
                        .map(ClassId::customer)
                        .collect(),
                };
                for next in neighbours {
                    if !component.contains(next) {
                        component = component.with(next);
                        stack.push(next);
                    }
                }
            }
            seen = seen.union(component);
            components.push(component);
        }
        components
    }
}

#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}
