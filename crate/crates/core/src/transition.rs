use std::fmt;
use std::ops::{Index, IndexMut};

/// Effect of one arriving customer-server pair on the two queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionType {
    /// Both incoming items are matched with waiting items; both queues shrink.
    MinusMinus,
    /// The customer waits, the server takes a waiting customer.
    ReplaceKeep,
    /// The customer takes a waiting server, the server waits.
    KeepReplace,
    /// Neither finds a waiting partner; they are matched with each other.
    KeepKeep,
    /// Neither finds a partner; both queues grow.
    PlusPlus,
}

impl TransitionType {
    pub const ALL: [TransitionType; 5] = [
        TransitionType::MinusMinus,
        TransitionType::ReplaceKeep,
        TransitionType::KeepReplace,
        TransitionType::KeepKeep,
        TransitionType::PlusPlus,
    ];

    /// Classifies an arrival from whether each incoming item finds a
    /// compatible waiting item and whether the two are compatible.
    pub fn classify(customer_finds: bool, server_finds: bool, pair_compatible: bool) -> Self {
        match (customer_finds, server_finds) {
            (true, true) => TransitionType::MinusMinus,
            (false, true) => TransitionType::ReplaceKeep,
            (true, false) => TransitionType::KeepReplace,
            (false, false) if pair_compatible => TransitionType::KeepKeep,
            (false, false) => TransitionType::PlusPlus,
        }
    }

    /// Short symbol, customer queue first: `-/-`, `±/=`, `=/±`, `=/=`, `+/+`.
    pub fn symbol(self) -> &'static str {
        match self {
            TransitionType::MinusMinus => "-/-",
            TransitionType::ReplaceKeep => "±/=",
            TransitionType::KeepReplace => "=/±",
            TransitionType::KeepKeep => "=/=",
            TransitionType::PlusPlus => "+/+",
        }
    }

    /// ASCII column name used in CSV output.
    pub fn column(self) -> &'static str {
        match self {
            TransitionType::MinusMinus => "minus/minus",
            TransitionType::ReplaceKeep => "pm/equal",
            TransitionType::KeepReplace => "equal/pm",
            TransitionType::KeepKeep => "equal/equal",
            TransitionType::PlusPlus => "plus/plus",
        }
    }

    /// Change in the common queue length.
    pub fn length_change(self) -> i64 {
        match self {
            TransitionType::MinusMinus => -1,
            TransitionType::PlusPlus => 1,
            _ => 0,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TransitionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One value per transition type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerTransition<T>(pub [T; 5]);

impl<T> Index<TransitionType> for PerTransition<T> {
    type Output = T;
    fn index(&self, t: TransitionType) -> &T {
        &self.0[t.slot()]
    }
}

impl<T> IndexMut<TransitionType> for PerTransition<T> {
    fn index_mut(&mut self, t: TransitionType) -> &mut T {
        &mut self.0[t.slot()]
    }
}

impl<T: Copy> PerTransition<T> {
    pub fn iter(&self) -> impl Iterator<Item = (TransitionType, T)> + '_ {
        TransitionType::ALL.iter().map(move |&t| (t, self[t]))
    }
}

impl PerTransition<f64> {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `P(-/-) − P(+/+)`: zero for any policy that keeps the system stable.
    pub fn balance_residual(&self) -> f64 {
        self[TransitionType::MinusMinus] - self[TransitionType::PlusPlus]
    }
}
