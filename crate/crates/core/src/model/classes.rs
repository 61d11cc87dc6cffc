use std::fmt;

/// Hard limit on `I + K`, so that a [`ClassSet`] fits in two machine words
/// with room to spare and all set algebra is branch-free.
pub const MAX_CLASSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Customer,
    Server,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Customer => Side::Server,
            Side::Server => Side::Customer,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Customer => "customer",
            Side::Server => "server",
        }
    }
}

/// A customer or server class, indexed densely from 0 within its side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId {
    pub side: Side,
    pub index: usize,
}

impl ClassId {
    pub fn customer(index: usize) -> Self {
        ClassId {
            side: Side::Customer,
            index,
        }
    }

    pub fn server(index: usize) -> Self {
        ClassId {
            side: Side::Server,
            index,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Customer => write!(f, "c{}", self.index),
            Side::Server => write!(f, "s{}", self.index),
        }
    }
}

/// A subset of customer and server classes, stored as one bitmask per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ClassSet {
    customers: u64,
    servers: u64,
}

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet {
        customers: 0,
        servers: 0,
    };

    pub const fn from_masks(customers: u64, servers: u64) -> Self {
        ClassSet { customers, servers }
    }

    pub fn from_indices(
        customers: impl IntoIterator<Item = usize>,
        servers: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut set = ClassSet::EMPTY;
        for i in customers {
            set.customers |= bit(i);
        }
        for k in servers {
            set.servers |= bit(k);
        }
        set
    }

    #[inline]
    pub fn customer_mask(self) -> u64 {
        self.customers
    }

    #[inline]
    pub fn server_mask(self) -> u64 {
        self.servers
    }

    /// `A ∩ ℐ`, as a set.
    #[inline]
    pub fn customer_part(self) -> ClassSet {
        ClassSet::from_masks(self.customers, 0)
    }

    /// `A ∩ 𝒦`, as a set.
    #[inline]
    pub fn server_part(self) -> ClassSet {
        ClassSet::from_masks(0, self.servers)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.customers == 0 && self.servers == 0
    }

    /// True when both sides are non-empty.
    #[inline]
    pub fn is_two_sided(self) -> bool {
        self.customers != 0 && self.servers != 0
    }

    #[inline]
    pub fn len(self) -> usize {
        (self.customers.count_ones() + self.servers.count_ones()) as usize
    }

    #[inline]
    pub fn contains(self, class: ClassId) -> bool {
        match class.side {
            Side::Customer => self.contains_customer(class.index),
            Side::Server => self.contains_server(class.index),
        }
    }

    #[inline]
    pub fn contains_customer(self, i: usize) -> bool {
        self.customers & bit(i) != 0
    }

    #[inline]
    pub fn contains_server(self, k: usize) -> bool {
        self.servers & bit(k) != 0
    }

    #[inline]
    pub fn with(self, class: ClassId) -> ClassSet {
        match class.side {
            Side::Customer => ClassSet::from_masks(self.customers | bit(class.index), self.servers),
            Side::Server => ClassSet::from_masks(self.customers, self.servers | bit(class.index)),
        }
    }

    #[inline]
    pub fn without(self, class: ClassId) -> ClassSet {
        match class.side {
            Side::Customer => self.without_customer(class.index),
            Side::Server => self.without_server(class.index),
        }
    }

    #[inline]
    pub fn without_customer(self, i: usize) -> ClassSet {
        ClassSet::from_masks(self.customers & !bit(i), self.servers)
    }

    #[inline]
    pub fn without_server(self, k: usize) -> ClassSet {
        ClassSet::from_masks(self.customers, self.servers & !bit(k))
    }

    #[inline]
    pub fn union(self, other: ClassSet) -> ClassSet {
        ClassSet::from_masks(
            self.customers | other.customers,
            self.servers | other.servers,
        )
    }

    #[inline]
    pub fn intersection(self, other: ClassSet) -> ClassSet {
        ClassSet::from_masks(
            self.customers & other.customers,
            self.servers & other.servers,
        )
    }

    #[inline]
    pub fn difference(self, other: ClassSet) -> ClassSet {
        ClassSet::from_masks(
            self.customers & !other.customers,
            self.servers & !other.servers,
        )
    }

    #[inline]
    pub fn is_subset(self, other: ClassSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Swaps the roles of customers and servers.
    #[inline]
    pub fn mirrored(self) -> ClassSet {
        ClassSet::from_masks(self.servers, self.customers)
    }

    pub fn customers(self) -> Bits {
        Bits(self.customers)
    }

    pub fn servers(self) -> Bits {
        Bits(self.servers)
    }

    /// Customers first, then servers, each in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = ClassId> {
        self.customers()
            .map(ClassId::customer)
            .chain(self.servers().map(ClassId::server))
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, class) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{class}")?;
        }
        f.write_str("}")
    }
}

#[inline]
pub(crate) fn bit(index: usize) -> u64 {
    debug_assert!(index < 64);
    1u64 << index
}

/// Iterator over the set bits of a mask, lowest first.
#[derive(Debug, Clone, Copy)]
pub struct Bits(pub u64);

impl Iterator for Bits {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let index = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(index)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Bits {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = ClassSet::from_indices([0, 2], [1]);
        let b = ClassSet::from_indices([2], [1, 3]);
        assert_eq!(a.union(b), ClassSet::from_indices([0, 2], [1, 3]));
        assert_eq!(a.intersection(b), ClassSet::from_indices([2], [1]));
        assert_eq!(a.difference(b), ClassSet::from_indices([0], []));
        assert_eq!(a.len(), 3);
        assert!(a.is_two_sided());
        assert!(!a.customer_part().is_two_sided());
        assert!(a.contains(ClassId::server(1)));
        assert!(!a.contains(ClassId::server(0)));
        assert_eq!(
            a.without(ClassId::customer(0)).with(ClassId::customer(0)),
            a
        );
        assert_eq!(a.mirrored().mirrored(), a);
        assert_eq!(a.to_string(), "{c0,c2,s1}");
    }

    #[test]
    fn bits_iterates_in_order() {
        assert_eq!(Bits(0b1010_0101).collect::<Vec<_>>(), vec![0, 2, 5, 7]);
        assert_eq!(Bits(1 << 63).collect::<Vec<_>>(), vec![63]);
        assert_eq!(Bits(0).count(), 0);
    }
}
