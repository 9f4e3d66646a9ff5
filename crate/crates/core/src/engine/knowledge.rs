//! Known values of `beta` that no rule derives: a small, closed list.

use crate::poltype::PolType;
use crate::rational::{ratio, Rational};

/// g = 2 types with `beta >= 1/2` (all others have `beta < 1/2`).
const G2_AT_LEAST_HALF: [[u64; 2]; 8] = [
    [1, 1],
    [1, 2],
    [1, 3],
    [1, 4],
    [1, 5],
    [1, 6],
    [2, 2],
    [2, 4],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnowledgeBase {
    enabled: bool,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::standard()
    }
}

impl KnowledgeBase {
    /// The facts `beta(1,3) = 2/3`, `beta(1,8) <= 3/8`, `beta(1,2^{(g-1)}) = 1`,
    /// `beta(2,4^{(g-1)}) = 1/2`, `beta(1,m,m^2) = 1/m`, and the g = 2 list.
    pub fn standard() -> Self {
        Self { enabled: true }
    }

    /// No facts at all; the engine then relies on rules and the volume barrier.
    pub fn empty() -> Self {
        Self { enabled: false }
    }

    /// `beta(D)` when it is known exactly.
    pub fn exact(&self, d: &PolType) -> Option<Rational> {
        if !self.enabled || d.len() < 2 {
            return None;
        }
        let p = d.parts();
        let tail = &p[1..];
        if p[0] == 1 && tail.iter().all(|&x| x == 2) {
            return Some(ratio(1, 1));
        }
        if p[0] == 2 && tail.iter().all(|&x| x == 4) {
            return Some(ratio(1, 2));
        }
        if p == [1, 3] {
            return Some(ratio(2, 3));
        }
        if p.len() == 3 && p[0] == 1 && p[1].checked_mul(p[1]) == Some(p[2]) {
            return Some(ratio(1, p[1]));
        }
        None
    }

    /// Upper bounds that are known without being exact.
    pub fn upper(&self, d: &PolType) -> Option<Rational> {
        if self.enabled && d.parts() == [1, 8] {
            return Some(ratio(3, 8));
        }
        None
    }

    /// A lower bound on `beta(D)` beyond the volume barrier.
    pub fn lower(&self, d: &PolType) -> Option<Rational> {
        if let Some(v) = self.exact(d) {
            return Some(v);
        }
        if self.enabled && d.len() == 2 && G2_AT_LEAST_HALF.iter().any(|q| q == d.parts()) {
            return Some(ratio(1, 2));
        }
        None
    }
}
