use super::classes::{bit, ClassSet};
use super::graph::{low_mask, CompatibilityGraph};
use crate::error::{Error, Result};

/// Default cap on the number of enumerated sets.
pub const DEFAULT_SET_CAP: usize = 1 << 22;

/// Enumerates `Ind ∪ {∅}`: the empty set plus every independent set of the
/// graph with at least one customer class and at least one server class.
///
/// The result is sorted by cardinality (ties broken by masks), so every
/// subset of a listed set appears before it.
///
/// Customer classes are added depth-first in index order; a branch is cut as
/// soon as its customers are compatible with every server class, since no
/// extension of it can carry a server. Each surviving customer set `C`
/// contributes every non-empty subset of `𝒦 ∖ 𝒦(C)`.
pub fn enumerate_independent_sets(graph: &CompatibilityGraph, cap: usize) -> Result<Vec<ClassSet>> {
    let all_servers = low_mask(graph.server_count());
    let mut out = vec![ClassSet::EMPTY];
    let mut stack: Vec<(usize, u64, u64)> = Vec::new();
    // (next customer to consider, customer mask, blocked server mask)
    for first in 0..graph.customer_count() {
        stack.push((first + 1, bit(first), graph.servers_of(first)));
    }
    while let Some((next, customers, blocked)) = stack.pop() {
        let free = all_servers & !blocked;
        if free == 0 {
            continue;
        }
        let mut sub = free;
        while sub != 0 {
            if out.len() >= cap {
                return Err(Error::CountLimitExceeded { cap });
            }
            out.push(ClassSet::from_masks(customers, sub));
            sub = (sub - 1) & free;
        }
        for i in next..graph.customer_count() {
            stack.push((i + 1, customers | bit(i), blocked | graph.servers_of(i)));
        }
    }
    out.sort_unstable_by_key(|s| (s.len(), s.customer_mask(), s.server_mask()));
    Ok(out)
}
