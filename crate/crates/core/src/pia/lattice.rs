use std::fmt;

use serde::Serialize;

use super::PiaError;
use crate::taskgraph::TgNode;

/// Default representation of ∞.
pub const DEFAULT_UPPER_BOUND: u64 = (1 << 31) - 1;

/// Closed interval of phases. Any `lb > ub` is bottom; the canonical bottom
/// is `[1,0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PhaseInterval {
    pub lb: u64,
    pub ub: u64,
}

impl PhaseInterval {
    pub const BOTTOM: PhaseInterval = PhaseInterval { lb: 1, ub: 0 };

    /// A non-bottom interval, or bottom when `lb > ub`.
    pub fn new(lb: u64, ub: u64) -> Self {
        if lb > ub {
            Self::BOTTOM
        } else {
            PhaseInterval { lb, ub }
        }
    }

    pub fn point(p: u64) -> Self {
        PhaseInterval { lb: p, ub: p }
    }

    pub fn is_bottom(self) -> bool {
        self.lb > self.ub
    }

    pub fn join(self, other: Self) -> Self {
        match (self.is_bottom(), other.is_bottom()) {
            (true, _) => other,
            (_, true) => self,
            _ => PhaseInterval { lb: self.lb.min(other.lb), ub: self.ub.max(other.ub) },
        }
    }

    pub fn meet(self, other: Self) -> Self {
        if self.is_bottom() || other.is_bottom() {
            return Self::BOTTOM;
        }
        Self::new(self.lb.max(other.lb), self.ub.min(other.ub))
    }

    /// Containment order.
    pub fn leq(self, other: Self) -> bool {
        self.is_bottom() || (!other.is_bottom() && other.lb <= self.lb && self.ub <= other.ub)
    }

    /// Whether the two intervals share at least one phase.
    pub fn overlaps(self, other: Self) -> bool {
        !self.is_bottom()
            && !other.is_bottom()
            && ((self.lb <= other.ub && other.ub <= self.ub) || (other.lb <= self.ub && self.ub <= other.ub))
    }
}

/// Arithmetic context: the value standing for ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PiaLattice {
    pub upper: u64,
}

impl Default for PiaLattice {
    fn default() -> Self {
        PiaLattice { upper: DEFAULT_UPPER_BOUND }
    }
}

impl PiaLattice {
    pub fn new(upper: u64) -> Self {
        assert!(upper >= 1, "lattice upper bound must be at least 1");
        PiaLattice { upper }
    }

    pub fn top(&self) -> PhaseInterval {
        PhaseInterval { lb: 0, ub: self.upper }
    }

    fn sat(&self, v: u64) -> u64 {
        v.min(self.upper)
    }

    fn sat_add(&self, a: u64, b: u64) -> u64 {
        if a >= self.upper || b >= self.upper {
            self.upper
        } else {
            self.sat(a.saturating_add(b))
        }
    }

    fn sat_mul(&self, c: u64, a: u64) -> u64 {
        if c == 0 || a == 0 {
            0
        } else if a >= self.upper {
            self.upper
        } else {
            self.sat(c.saturating_mul(a))
        }
    }

    pub fn scale(&self, c: u64, a: PhaseInterval) -> PhaseInterval {
        if a.is_bottom() {
            return a;
        }
        PhaseInterval { lb: self.sat_mul(c, a.lb), ub: self.sat_mul(c, a.ub) }
    }

    pub fn add(&self, a: PhaseInterval, b: PhaseInterval) -> PhaseInterval {
        if a.is_bottom() || b.is_bottom() {
            return PhaseInterval::BOTTOM;
        }
        PhaseInterval { lb: self.sat_add(a.lb, b.lb), ub: self.sat_add(a.ub, b.ub) }
    }

    /// Componentwise growth from `a` to `b`. ∞ − ∞ is 0 and ∞ − k is ∞.
    pub fn delta(&self, a: PhaseInterval, b: PhaseInterval) -> Result<PhaseInterval, PiaError> {
        if a.is_bottom() || b.is_bottom() {
            return Ok(PhaseInterval::BOTTOM);
        }
        let sub = |x: u64, y: u64| match (x >= self.upper, y >= self.upper) {
            (true, true) => Some(0),
            (false, true) => Some(self.upper),
            _ => y.checked_sub(x),
        };
        match (sub(a.lb, b.lb), sub(a.ub, b.ub)) {
            (Some(lb), Some(ub)) => Ok(PhaseInterval { lb, ub }),
            _ => Err(PiaError::NegativeDelta { from: a, to: b }),
        }
    }

    /// Widening with thresholds `[lbt, ubt]`.
    pub fn widen(&self, old: PhaseInterval, new: PhaseInterval, lbt: u64, ubt: u64) -> PhaseInterval {
        if old.is_bottom() {
            return new;
        }
        if new.is_bottom() {
            return old;
        }
        let lb = if new.lb < old.lb { lbt } else { old.lb };
        let ub = if new.ub > old.ub { ubt } else { old.ub };
        PhaseInterval { lb, ub }
    }

    /// Header interval of a loop entered with `pi0` whose first back edge
    /// brings `pi1`.
    pub fn accelerate_loop(
        &self,
        pi0: PhaseInterval,
        pi1: PhaseInterval,
        trip_count: Option<u64>,
    ) -> Result<PhaseInterval, PiaError> {
        match trip_count {
            Some(tc) => {
                if pi0.is_bottom() || pi1.is_bottom() {
                    return Ok(pi0.join(pi1));
                }
                // Growth vectors may have lb > ub, so combine componentwise.
                let d = self.delta(pi0, pi1)?;
                let last = PhaseInterval::new(
                    self.sat_add(pi0.lb, self.sat_mul(tc, d.lb)),
                    self.sat_add(pi0.ub, self.sat_mul(tc, d.ub)),
                );
                Ok(pi0.join(last))
            }
            None => Ok(self.widen(pi0, pi1, 0, self.upper)),
        }
    }

    pub fn transfer(&self, node: &TgNode, input: PhaseInterval) -> PhaseInterval {
        if input.is_bottom() || !node.changes_phase() {
            input
        } else {
            self.add(input, PhaseInterval::point(1))
        }
    }

    pub fn display(&self, pi: PhaseInterval) -> Shown {
        Shown { pi, upper: self.upper }
    }
}

/// Interval display with ∞ spelled `inf`.
pub struct Shown {
    pi: PhaseInterval,
    upper: u64,
}

impl fmt::Display for Shown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pi.is_bottom() {
            return f.write_str("bot");
        }
        let b = |v: u64| if v >= self.upper { "inf".to_string() } else { v.to_string() };
        write!(f, "[{},{}]", b(self.pi.lb), b(self.pi.ub))
    }
}
