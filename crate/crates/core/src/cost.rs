//! Saturating costs with a distinguished infeasible value.

use core::cmp::Ordering;
use core::fmt;
use core::ops::Add;

/// A value in `[0, TOP]`. `Top` marks unsafe or losing states and absorbs
/// addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cost {
    Finite(u32),
    Top,
}

impl Cost {
    pub const ZERO: Cost = Cost::Finite(0);

    pub fn is_top(self) -> bool {
        matches!(self, Cost::Top)
    }

    pub fn is_finite(self) -> bool {
        !self.is_top()
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Cost::Finite(c) => Some(c),
            Cost::Top => None,
        }
    }

    /// Packed 32-bit cell with `u32::MAX` standing for `Top`.
    pub fn pack(self) -> u32 {
        match self {
            Cost::Finite(c) => {
                debug_assert!(c != u32::MAX, "finite cost collides with TOP");
                c
            }
            Cost::Top => u32::MAX,
        }
    }

    pub fn unpack(cell: u32) -> Cost {
        if cell == u32::MAX {
            Cost::Top
        } else {
            Cost::Finite(cell)
        }
    }
}

impl Add for Cost {
    type Output = Cost;

    /// Finite sums that do not fit in 32 bits saturate to `Top`. Game
    /// construction rejects weights for which this could happen.
    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => match a.checked_add(b) {
                Some(s) if s != u32::MAX => Cost::Finite(s),
                _ => Cost::Top,
            },
            _ => Cost::Top,
        }
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.cmp(b),
            (Cost::Finite(_), Cost::Top) => Ordering::Less,
            (Cost::Top, Cost::Finite(_)) => Ordering::Greater,
            (Cost::Top, Cost::Top) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(c) => write!(f, "{c}"),
            Cost::Top => f.write_str("TOP"),
        }
    }
}
