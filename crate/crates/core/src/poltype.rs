//! Polarization types: divisibility chains `d_1 | d_2 | ... | d_g`.
//!
//! A type is the elementary-divisor data of the finite group
//! `K(L) = (Z/d_1 + ... + Z/d_g)^2`. Products of types correspond to direct
//! sums of these groups and are computed prime by prime on exponent
//! multisets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

use crate::arith::{factorize, valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("a polarization type needs at least one part")]
    Empty,
    #[error("part {index} is {value}, parts must be positive")]
    NonPositive { index: usize, value: i128 },
    #[error("chain violation: {prev} does not divide {next} (positions {index} and {next_index})", next_index = index + 1)]
    ChainViolation { index: usize, prev: u64, next: u64 },
    #[error("cannot parse type {0:?}, expected e.g. [1,2,14]")]
    Parse(String),
}

/// A polarization type `(d_1, ..., d_g)` with `d_i | d_{i+1}`.
///
/// Leading 1-parts are significant: `(1,6,6)` has length 3.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolType {
    parts: Vec<u64>,
}

impl PolType {
    /// Validates a list of signed parts (`make_type`).
    pub fn new(parts: &[i64]) -> Result<Self, TypeError> {
        let mut out = Vec::with_capacity(parts.len());
        for (index, &p) in parts.iter().enumerate() {
            if p < 1 {
                return Err(TypeError::NonPositive {
                    index,
                    value: p as i128,
                });
            }
            out.push(p as u64);
        }
        Self::from_parts(out)
    }

    pub fn from_parts(parts: Vec<u64>) -> Result<Self, TypeError> {
        if parts.is_empty() {
            return Err(TypeError::Empty);
        }
        if let Some(index) = parts.iter().position(|&p| p == 0) {
            return Err(TypeError::NonPositive { index, value: 0 });
        }
        for (index, w) in parts.windows(2).enumerate() {
            if w[1] % w[0] != 0 {
                return Err(TypeError::ChainViolation {
                    index,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        Ok(Self { parts })
    }

    /// `(1, ..., 1)` of length `g`.
    pub fn principal(g: usize) -> Self {
        assert!(g >= 1);
        Self { parts: vec![1; g] }
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    /// `lambda(D)`, the number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> u64 {
        self.parts[0]
    }

    pub fn last(&self) -> u64 {
        *self.parts.last().unwrap()
    }

    /// `d_i` with 1-based indexing, matching the usual notation.
    pub fn d(&self, i: usize) -> u64 {
        self.parts[i - 1]
    }

    /// `chi(D) = prod d_i`.
    pub fn chi(&self) -> BigUint {
        self.parts.iter().map(|&p| BigUint::from(p)).product()
    }

    /// `|D| = sum d_i`.
    pub fn weight(&self) -> u128 {
        self.parts.iter().map(|&p| p as u128).sum()
    }

    /// `(d_1, D / d_1)`; the second component starts with 1.
    pub fn primitive_split(&self) -> (u64, PolType) {
        let n = self.parts[0];
        let parts = self.parts.iter().map(|&p| p / n).collect();
        (n, PolType { parts })
    }

    pub fn scaled(&self, n: u64) -> PolType {
        assert!(n >= 1);
        PolType {
            parts: self.parts.iter().map(|&p| p * n).collect(),
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.parts[0] == 1
    }

    /// True for `(1^{(g-1)}, d)`.
    pub fn is_one_d(&self) -> bool {
        self.parts[..self.len() - 1].iter().all(|&p| p == 1)
    }

    /// Primes dividing `chi(D)`, ascending.
    pub fn primes(&self) -> Vec<u64> {
        factorize(self.last()).into_iter().map(|(p, _)| p).collect()
    }

    /// Exponents of `p` in each part; ascending because of the chain condition.
    pub fn exponents(&self, p: u64) -> Vec<u32> {
        self.parts.iter().map(|&d| valuation(d, p)).collect()
    }

    fn from_exponents(len: usize, per_prime: &[(u64, Vec<u32>)]) -> PolType {
        let mut parts = vec![1u64; len];
        for (p, exps) in per_prime {
            debug_assert_eq!(exps.len(), len);
            for (slot, &e) in parts.iter_mut().zip(exps) {
                *slot *= p.pow(e);
            }
        }
        PolType { parts }
    }

    /// The type of the direct sum of the two associated groups.
    pub fn product(&self, other: &PolType) -> PolType {
        let primes: BTreeSet<u64> = self.primes().into_iter().chain(other.primes()).collect();
        let len = self.len() + other.len();
        let per_prime: Vec<(u64, Vec<u32>)> = primes
            .into_iter()
            .map(|p| {
                let mut e = self.exponents(p);
                e.extend(other.exponents(p));
                e.sort_unstable();
                (p, e)
            })
            .collect();
        PolType::from_exponents(len, &per_prime)
    }

    /// All unordered decompositions `D = D1 x D2` with both lengths at least one.
    ///
    /// Each pair is returned once, as `(D1, D2)` with `D1 <= D2` under
    /// [`pair_order`]; the list is sorted by that order.
    pub fn factorizations(&self) -> Vec<(PolType, PolType)> {
        let g = self.len();
        let mut seen = BTreeSet::new();
        if g < 2 {
            return Vec::new();
        }
        let primes = self.primes();
        let exps: Vec<Vec<u32>> = primes.iter().map(|&p| self.exponents(p)).collect();
        for g1 in 1..=g / 2 {
            // Per prime, the distinct size-g1 sub-multisets and their complements.
            let splits: Vec<Vec<(Vec<u32>, Vec<u32>)>> =
                exps.iter().map(|e| multiset_splits(e, g1)).collect();
            let mut idx = vec![0usize; primes.len()];
            loop {
                let left: Vec<(u64, Vec<u32>)> = primes
                    .iter()
                    .zip(&splits)
                    .zip(&idx)
                    .map(|((&p, s), &i)| (p, s[i].0.clone()))
                    .collect();
                let right: Vec<(u64, Vec<u32>)> = primes
                    .iter()
                    .zip(&splits)
                    .zip(&idx)
                    .map(|((&p, s), &i)| (p, s[i].1.clone()))
                    .collect();
                let a = PolType::from_exponents(g1, &left);
                let b = PolType::from_exponents(g - g1, &right);
                seen.insert(canonical_pair(a, b));
                // odometer over primes
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < splits[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
        let mut out: Vec<_> = seen.into_iter().map(|k| (k.0 .1, k.1 .1)).collect();
        out.sort_by(|x, y| pair_order(&x.0, &y.0).then(pair_order(&x.1, &y.1)));
        out
    }
}

/// Order used for canonical pairs: shorter types first, then lexicographic parts.
pub fn pair_order(a: &PolType, b: &PolType) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.parts.cmp(&b.parts))
}

type Keyed = ((usize, PolType), (usize, PolType));

fn canonical_pair(a: PolType, b: PolType) -> Keyed {
    if pair_order(&a, &b).is_le() {
        ((a.len(), a), (b.len(), b))
    } else {
        ((b.len(), b), (a.len(), a))
    }
}

/// Distinct ways of choosing `k` elements of the sorted multiset `e`,
/// returned as (chosen, complement), both sorted.
fn multiset_splits(e: &[u32], k: usize) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &x in e {
        *counts.entry(x).or_default() += 1;
    }
    let values: Vec<(u32, usize)> = counts.into_iter().collect();
    let mut out = Vec::new();
    let mut take = vec![0usize; values.len()];
    fn rec(
        values: &[(u32, usize)],
        i: usize,
        left: usize,
        take: &mut Vec<usize>,
        out: &mut Vec<(Vec<u32>, Vec<u32>)>,
    ) {
        if i == values.len() {
            if left == 0 {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (&(v, c), &t) in values.iter().zip(take.iter()) {
                    a.extend(std::iter::repeat_n(v, t));
                    b.extend(std::iter::repeat_n(v, c - t));
                }
                out.push((a, b));
            }
            return;
        }
        let (_, c) = values[i];
        for t in 0..=c.min(left) {
            take[i] = t;
            rec(values, i + 1, left - t, take, out);
        }
        take[i] = 0;
    }
    rec(&values, 0, k, &mut take, &mut out);
    out
}

/// All types of length `g` with `chi_min <= chi <= chi_max`, lexicographic on parts.
pub fn enumerate_types(g: usize, chi_min: u128, chi_max: u128) -> Vec<PolType> {
    let mut out = Vec::new();
    if g == 0 || chi_min > chi_max {
        return out;
    }
    let mut cur = Vec::with_capacity(g);
    fn rec(
        g: usize,
        prev: u64,
        prod: u128,
        lo: u128,
        hi: u128,
        cur: &mut Vec<u64>,
        out: &mut Vec<PolType>,
    ) {
        let pos = cur.len();
        if pos == g {
            if prod >= lo {
                out.push(PolType { parts: cur.clone() });
            }
            return;
        }
        let remaining = (g - pos) as u32;
        let mut d = prev;
        loop {
            // every later part is at least d
            match (d as u128)
                .checked_pow(remaining)
                .and_then(|x| x.checked_mul(prod))
            {
                Some(x) if x <= hi => {}
                _ => break,
            }
            cur.push(d);
            rec(g, d, prod * d as u128, lo, hi, cur, out);
            cur.pop();
            d += prev;
        }
    }
    rec(g, 1, 1, chi_min, chi_max, &mut cur, &mut out);
    out
}

/// All types of length `g` whose largest part is at most `dmax`, lexicographic.
pub fn enumerate_types_by_max_part(g: usize, dmax: u64) -> Vec<PolType> {
    let mut out = Vec::new();
    if g == 0 || dmax == 0 {
        return out;
    }
    let mut cur = Vec::with_capacity(g);
    fn rec(g: usize, prev: u64, dmax: u64, cur: &mut Vec<u64>, out: &mut Vec<PolType>) {
        if cur.len() == g {
            out.push(PolType { parts: cur.clone() });
            return;
        }
        let mut d = prev;
        while d <= dmax {
            cur.push(d);
            rec(g, d, dmax, cur, out);
            cur.pop();
            d += prev;
        }
    }
    rec(g, 1, dmax, &mut cur, &mut out);
    out
}

impl fmt::Display for PolType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for PolType {
    type Err = TypeError;

    /// Accepts the canonical `[1,2,14]`, tolerating spaces and a missing bracket pair.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = match (t.strip_prefix('['), t.strip_suffix(']')) {
            (Some(_), Some(_)) => &t[1..t.len() - 1],
            (None, None) => t,
            _ => return Err(TypeError::Parse(s.to_string())),
        };
        if inner.trim().is_empty() {
            return Err(TypeError::Empty);
        }
        let parts = inner
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<i64>()
                    .map_err(|_| TypeError::Parse(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        PolType::new(&parts)
    }
}

impl serde::Serialize for PolType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PolType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
