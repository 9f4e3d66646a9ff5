//! The certificate search.
//!
//! Order of attempts for a claim on `D`: elliptic curves, known facts, the
//! lower barrier, scaling to the primitive part, the direct rules, and finally
//! product decompositions. The first rule that succeeds wins, and within a
//! rule the lexicographically least parameter vector, so results do not depend
//! on the memo state or on thread scheduling.

use std::collections::{BTreeSet, HashMap};
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::rules::{self, barrier_for, kclosed_requirement, scale_child_claim};
use super::{BoundValue, Certificate, Claim, KnowledgeBase, Outcome, Relation, Rule, SearchBudget};
use crate::arith::iroot;
use crate::poltype::PolType;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("threshold must satisfy 0 < t <= 1, got {0}")]
    ThresholdOutOfRange(String),
}

type MemoKey = (PolType, Relation, Rational, usize);

/// Certificate search with a shared, thread-safe memo.
#[derive(Debug)]
pub struct Engine {
    kb: KnowledgeBase,
    budget: SearchBudget,
    experimental: bool,
    memo: RwLock<HashMap<MemoKey, Outcome>>,
    best_memo: RwLock<HashMap<PolType, BoundValue>>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(SearchBudget::default())
    }
}

/// Threshold `p/q` in machine integers for the closed-form solvers.
#[derive(Debug, Clone, Copy)]
struct Frac {
    p: u128,
    q: u128,
    strict: bool,
}

impl Frac {
    fn of(claim: &Claim) -> Option<Self> {
        Some(Self {
            p: claim.threshold.numer().to_u128()?,
            q: claim.threshold.denom().to_u128()?,
            strict: claim.relation == Relation::Lt,
        })
    }

    /// `x / y` admitted by the claim.
    fn admits(self, x: u128, y: u128) -> Option<bool> {
        let lhs = x.checked_mul(self.q)?;
        let rhs = y.checked_mul(self.p)?;
        Some(if self.strict { lhs < rhs } else { lhs <= rhs })
    }

    /// Least `M >= 1` with `a / (b M)` admitted.
    fn min_denominator_factor(self, a: u128, b: u128) -> Option<u128> {
        let num = a.checked_mul(self.q)?;
        let den = b.checked_mul(self.p)?;
        let m = if self.strict {
            num / den + 1
        } else {
            num.div_ceil(den)
        };
        Some(m.max(1))
    }

    /// Greatest `M` with `M / b` admitted.
    fn max_numerator(self, b: u128) -> Option<u128> {
        let x = b.checked_mul(self.p)?;
        Some(if self.strict {
            x.checked_sub(1)? / self.q
        } else {
            x / self.q
        })
    }
}

impl Engine {
    pub fn new(budget: SearchBudget) -> Self {
        Self {
            kb: KnowledgeBase::standard(),
            budget,
            experimental: false,
            memo: RwLock::new(HashMap::new()),
            best_memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_knowledge(mut self, kb: KnowledgeBase) -> Self {
        self.kb = kb;
        self
    }

    /// Enables the open general `A_i` bound. Its certificates never verify.
    pub fn with_experimental(mut self, on: bool) -> Self {
        self.experimental = on;
        self
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn certify(&self, d: &PolType, claim: &Claim) -> Result<Outcome, EngineError> {
        if !claim.is_well_formed() {
            return Err(EngineError::ThresholdOutOfRange(format_rational(
                &claim.threshold,
            )));
        }
        Ok(self.certify_at(d, claim, self.budget.depth_max))
    }

    fn certify_at(&self, d: &PolType, claim: &Claim, depth: usize) -> Outcome {
        let eff = depth.min(d.len() - 1);
        let key = (d.clone(), claim.relation, claim.threshold.clone(), eff);
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return hit.clone();
        }
        let out = self.search(d, claim, eff);
        self.memo.write().unwrap().insert(key, out.clone());
        out
    }

    fn search(&self, d: &PolType, claim: &Claim, depth: usize) -> Outcome {
        let leaf = |rule, params, bound| {
            Outcome::Certified(Certificate::leaf(
                d.clone(),
                claim.clone(),
                rule,
                params,
                bound,
            ))
        };

        if d.len() == 1 {
            let b = rules::rule_elliptic(d).expect("length one");
            return if claim.admits(&b) {
                leaf(Rule::Elliptic, vec![], b)
            } else {
                Outcome::Impossible(format!("beta{d} = {} exactly", format_rational(b.value())))
            };
        }
        if let Some(v) = self.kb.exact(d) {
            return if claim.admits_value(&v) {
                leaf(Rule::Fact, vec![], BoundValue::new(v, false))
            } else {
                Outcome::Impossible(format!("beta{d} = {} exactly", format_rational(&v)))
            };
        }
        if let Some(v) = self.kb.upper(d) {
            if claim.admits_value(&v) {
                return leaf(Rule::Fact, vec![], BoundValue::new(v, false));
            }
        }
        if barrier_for(d, claim, &self.kb) {
            return Outcome::Impossible(format!(
                "beta{d} is at least the threshold {}",
                format_rational(&claim.threshold)
            ));
        }

        let (n, prim) = d.primitive_split();
        if n > 1 {
            let child_claim = scale_child_claim(n, claim);
            return match self.certify_at(&prim, &child_claim, depth) {
                Outcome::Certified(child) => Outcome::Certified(
                    rules::rule_scale(d, claim.clone(), child).expect("scale child matches"),
                ),
                Outcome::Impossible(why) => {
                    Outcome::Impossible(format!("after scaling by {n}: {why}"))
                }
                Outcome::Unknown => Outcome::Unknown,
            };
        }

        if let Ok(b) = rules::rule_1d(d) {
            if claim.admits(&b) {
                let m = rules::oned_root(d).expect("shape checked");
                return leaf(Rule::OneD, vec![m], b);
            }
        }
        if let Some((k, b)) = self.try_kclosed(d, claim) {
            return leaf(Rule::KClosed, vec![k], b);
        }
        if let Some(params) = self.try_flag(d, claim) {
            let (ks, m) = params.split_at(params.len() - 1);
            let b = rules::rule_flag(d, ks, m[0]).expect("solver emits valid parameters");
            debug_assert!(claim.admits(&b));
            return leaf(Rule::Flag, params, b);
        }
        if let Some((k1, m)) = self.try_ccd(d, claim) {
            let b = rules::rule_1ccd(d, k1, m).expect("solver emits valid parameters");
            debug_assert!(claim.admits(&b));
            return leaf(Rule::Ccd, vec![k1, m], b);
        }
        if let Ok(b) = rules::rule_bpf(d) {
            if claim.admits(&b) {
                return leaf(Rule::Bpf, vec![], b);
            }
        }
        let trivial = rules::rule_trivial();
        if claim.admits(&trivial) {
            return leaf(Rule::Trivial, vec![], trivial);
        }

        if depth > 0 {
            for (a, b) in d.factorizations().into_iter().take(self.budget.factor_cap) {
                let Outcome::Certified(c1) = self.certify_at(&a, claim, depth - 1) else {
                    continue;
                };
                let Outcome::Certified(c2) = self.certify_at(&b, claim, depth - 1) else {
                    continue;
                };
                return Outcome::Certified(
                    rules::rule_product(d, claim.clone(), c1, c2).expect("factorization"),
                );
            }
        }

        if self.experimental {
            if let Some((a, b)) = self.try_conjectural(d, claim) {
                return leaf(Rule::Conjectural, a, b);
            }
        }
        Outcome::Unknown
    }

    fn try_kclosed(&self, d: &PolType, claim: &Claim) -> Option<(u64, BoundValue)> {
        let g = d.len();
        let p = claim.threshold.numer().clone();
        let q = claim.threshold.denom().clone();
        let d1 = BigInt::from(d.first());
        let dd = BigInt::from(d.d(g - 1));
        // least k with 1/(d_1 + k d_{g-1}) admitted
        let gap = &q - &p * &d1;
        let step = &p * &dd;
        let k = match claim.relation {
            Relation::Lt if gap < BigInt::zero() => BigInt::zero(),
            Relation::Lt => gap / &step + 1,
            Relation::Le if gap <= BigInt::zero() => BigInt::zero(),
            Relation::Le => (gap + &step - 1) / &step,
        };
        let k = k.to_u64()?;
        let b = rules::rule_kclosed(d, k).ok()?;
        claim.admits(&b).then_some((k, b))
    }

    /// Lexicographically least admissible `(k_1, ..., k_{g-2}, M)`.
    fn try_flag(&self, d: &PolType, claim: &Claim) -> Option<Vec<u64>> {
        let f = Frac::of(claim)?;
        let g = d.len();
        let mut best: Option<Vec<u64>> = None;
        let mut consider = |ks: &[u64], cap: Option<u128>| -> Option<()> {
            let m = flag_min_m(d, ks, f)?;
            if cap.is_some_and(|c| m > c) {
                return None;
            }
            let mut params = ks.to_vec();
            params.push(u64::try_from(m).ok()?);
            if best.as_ref().is_none_or(|b| params < *b) {
                best = Some(params);
            }
            Some(())
        };
        let mut ks = vec![1u64; g - 2];
        loop {
            if consider(&ks, Some(self.budget.m_max as u128)).is_some() {
                break;
            }
            if !odometer(&mut ks, self.budget.k_max) {
                break;
            }
        }
        for seed in flag_seeds(d) {
            consider(&seed, None);
        }
        best
    }

    fn try_ccd(&self, d: &PolType, claim: &Claim) -> Option<(u64, u64)> {
        if d.len() != 3 || d.first() != 1 {
            return None;
        }
        let f = Frac::of(claim)?;
        let c = d.d(2) as u128;
        let dg = d.last() as u128;
        let hi = f.max_numerator(dg)?;
        for k1 in 1..=self.budget.k_max {
            let l = c * k1 as u128;
            if l <= 1 {
                continue;
            }
            let l = l - 1;
            if !f.admits(1, l)? {
                continue;
            }
            let lo = f.min_denominator_factor(l, c)?;
            // k_1 = 1 is the seeded choice and is not capped
            if lo <= hi && (k1 == 1 || lo <= self.budget.m_max as u128) {
                return Some((k1, u64::try_from(lo).ok()?));
            }
        }
        None
    }

    fn try_conjectural(&self, d: &PolType, claim: &Claim) -> Option<(Vec<u64>, BoundValue)> {
        let g = d.len() as u32;
        for m in 2..=self.budget.k_max {
            let a: Vec<u64> = (1..g)
                .map(|i| m.checked_pow(g - i))
                .collect::<Option<_>>()?;
            if let Ok(b) = rules::rule_conjectural(d, &a) {
                if claim.admits(&b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Strongest bound the rules give for `D` within the budget.
    pub fn best_bound(&self, d: &PolType) -> BoundValue {
        if let Some(b) = self.best_memo.read().unwrap().get(d) {
            return b.clone();
        }
        let b = self.best_uncached(d);
        self.best_memo.write().unwrap().insert(d.clone(), b.clone());
        b
    }

    fn best_uncached(&self, d: &PolType) -> BoundValue {
        if d.len() == 1 {
            return rules::rule_elliptic(d).expect("length one");
        }
        if let Some(v) = self.kb.exact(d) {
            return BoundValue::new(v, false);
        }
        let (n, prim) = d.primitive_split();
        if n > 1 {
            return self.best_bound(&prim).scaled_down(n);
        }
        let mut cands: Vec<BoundValue> = vec![rules::rule_trivial()];
        if let Some(v) = self.kb.upper(d) {
            cands.push(BoundValue::new(v, false));
        }
        cands.extend(rules::rule_1d(d).ok());
        cands.extend(rules::rule_bpf(d).ok());
        let mut k = 0u64;
        while rules::rule_kclosed(d, k + 1).is_ok() {
            k += 1;
        }
        cands.extend(rules::rule_kclosed(d, k).ok());

        let g = d.len();
        let mut flag_try = |ks: &[u64], cap: Option<u64>| {
            for m in flag_m_candidates(d, ks, cap) {
                cands.extend(rules::rule_flag(d, ks, m).ok());
            }
        };
        let mut ks = vec![1u64; g - 2];
        loop {
            flag_try(&ks, Some(self.budget.m_max));
            if !odometer(&mut ks, self.budget.k_max) {
                break;
            }
        }
        for seed in flag_seeds(d) {
            flag_try(&seed, None);
        }
        if g == 3 && d.first() == 1 {
            let c = d.d(2);
            for k1 in 1..=self.budget.k_max {
                let l = c * k1;
                if l <= 1 {
                    continue;
                }
                let star = iroot(&(BigUint::from(l - 1) * BigUint::from(d.last() / c)), 2);
                let star = star.to_u64().unwrap_or(u64::MAX - 1);
                for m in [star, star + 1] {
                    if m >= 1 && (k1 == 1 || m <= self.budget.m_max) {
                        cands.extend(rules::rule_1ccd(d, k1, m).ok());
                    }
                }
            }
        }
        for (a, b) in d.factorizations().into_iter().take(self.budget.factor_cap) {
            let (ba, bb) = (self.best_bound(&a), self.best_bound(&b));
            cands.push(BoundValue::combine_max(&[&ba, &bb]));
        }
        let mut best = cands.pop().expect("trivial bound present");
        for c in cands {
            if c.at_least_as_strong(&best) {
                best = c;
            }
        }
        best
    }

    /// Best bound together with a certificate for `beta(D) <= best`.
    pub fn best_certificate(&self, d: &PolType) -> (BoundValue, Outcome) {
        let b = self.best_bound(d);
        let claim = if b.is_strict() {
            Claim::lt(b.value().clone())
        } else {
            Claim::le(b.value().clone())
        };
        let out = self.certify(d, &claim).expect("best bound lies in (0, 1]");
        (b, out)
    }
}

/// Next vector of `[1, k_max]^n` in lexicographic order.
fn odometer(ks: &mut [u64], k_max: u64) -> bool {
    for i in (0..ks.len()).rev() {
        if ks[i] < k_max {
            ks[i] += 1;
            return true;
        }
        ks[i] = 1;
    }
    false
}

/// `M_2, ..., M_g` as `u128`, index `i` holding `M_i`.
fn flag_ms_u128(d: &PolType, ks: &[u64]) -> Option<Vec<u128>> {
    let g = d.len();
    let dd = d.d(g - 1) as u128;
    let mut prefix = vec![1u128; g - 1];
    for j in 1..=g - 2 {
        let r = dd / d.d(j) as u128;
        prefix[j] = prefix[j - 1].checked_add(r.checked_mul(ks[j - 1] as u128)?)?;
    }
    let mut ms = vec![0u128; g + 1];
    for i in 2..=g {
        ms[i] = prefix[g - i];
    }
    Some(ms)
}

/// Least `M` for which the flag bound with these `k`'s is admitted, if any.
fn flag_min_m(d: &PolType, ks: &[u64], f: Frac) -> Option<u128> {
    let g = d.len();
    let ms = flag_ms_u128(d, ks)?;
    for i in 2..g {
        let den = (d.d(g - i) as u128).checked_mul(ms[i])?;
        if !f.admits(ms[i + 1], den)? {
            return None;
        }
    }
    let lo = f.min_denominator_factor(ms[2], d.d(g - 1) as u128)?;
    let hi = f.max_numerator(d.last() as u128)?;
    (lo <= hi).then_some(lo)
}

/// `M` near the balance point `sqrt(M_2 d_g / d_{g-1})`.
fn flag_m_candidates(d: &PolType, ks: &[u64], cap: Option<u64>) -> Vec<u64> {
    let g = d.len();
    let ms = rules::flag_ms(d, ks);
    let m2 = BigUint::try_from(&ms[2]).expect("positive");
    let star = iroot(&(m2 * BigUint::from(d.last() / d.d(g - 1))), 2)
        .to_u64()
        .unwrap_or(u64::MAX - 1);
    let mut out = BTreeSet::new();
    for m in [star, star + 1] {
        let m = m.max(1);
        out.insert(cap.map_or(m, |c| m.min(c)));
    }
    out.into_iter().collect()
}

/// Closed-form `k` choices that reproduce the known explicit bounds, exempt from the box caps.
fn flag_seeds(d: &PolType) -> Vec<Vec<u64>> {
    let g = d.len();
    let mut seeds = BTreeSet::new();
    if g < 3 {
        return Vec::new();
    }
    let dd = d.d(g - 1);
    // kclosed chain: k_i = k prod_{j<i} (1 + k d_{g-1}/d_j)
    let mut k = 1u64;
    loop {
        let ok = BigUint::from(d.last()) >= kclosed_requirement(d, k);
        let mut ks = Vec::with_capacity(g - 2);
        let mut acc = Some(k);
        for i in 1..=g - 2 {
            let Some(cur) = acc else { break };
            ks.push(cur);
            acc = (dd / d.d(i))
                .checked_mul(k)
                .and_then(|x| x.checked_add(1))
                .and_then(|x| x.checked_mul(cur));
        }
        if ks.len() == g - 2 {
            seeds.insert(ks);
        }
        if !ok || k > 1 << 20 {
            break;
        }
        k += 1;
    }
    // (1^{(n-1)}, 2^{(n')}, d) with n' >= 1: doubling then ones
    let p = d.parts();
    let n = p.iter().take_while(|&&x| x == 1).count() + 1;
    let twos = p[n - 1..g - 1].iter().take_while(|&&x| x == 2).count();
    if twos >= 1 && n + twos == g {
        let ks = (1..=g - 2)
            .map(|i| if i < n { 1u64 << (i - 1).min(62) } else { 1 })
            .collect();
        seeds.insert(ks);
    }
    // (1^{(g-1)}, d): A_i = m^{g-i} and A_i = m^{g-i} + ... + 1
    if d.is_one_d() {
        let m = iroot(&BigUint::from(d.last()), g as u32)
            .to_u64()
            .unwrap_or(1);
        let pw = |e: u32| m.checked_pow(e);
        if m >= 2 {
            let ks: Option<Vec<u64>> = (1..=g as u32 - 2)
                .map(|i| Some(pw(i)? - pw(i - 1)?))
                .collect();
            seeds.extend(ks);
        }
        let ks: Option<Vec<u64>> = (1..=g as u32 - 2).map(pw).collect();
        seeds.extend(ks);
    }
    seeds.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::verify;
    use crate::rational::ratio;

    fn t(p: &[i64]) -> PolType {
        PolType::new(p).unwrap()
    }

    fn engine() -> Engine {
        Engine::default()
    }

    fn certified(e: &Engine, d: &PolType, claim: Claim) -> Certificate {
        match e.certify(d, &claim).unwrap() {
            Outcome::Certified(c) => {
                verify(&c).unwrap();
                c
            }
            other => panic!("{d} {claim}: {other:?}"),
        }
    }

    #[test]
    fn certify_examples() {
        let e = engine();
        let c = certified(&e, &t(&[1, 1, 30]), Claim::lt(ratio(1, 2)));
        assert_eq!((c.rule, c.bound.value().clone()), (Rule::OneD, ratio(1, 3)));
        assert!(matches!(
            e.certify(&t(&[2, 4, 4]), &Claim::lt(ratio(1, 2))).unwrap(),
            Outcome::Impossible(_)
        ));
        let c = certified(&e, &t(&[1, 2, 14]), Claim::lt(ratio(1, 2)));
        assert_eq!((c.rule, c.params.clone()), (Rule::Flag, vec![1, 4]));
        assert_eq!(c.bound.value(), &ratio(3, 8));
    }

    #[test]
    fn doubling_seed_reproduced() {
        // (1, 2, d) with d >= 10: seed k = (1), M = 2^2 + 1 - 1 = 4
        for d in (10..=40).step_by(2) {
            let dt = t(&[1, 2, d]);
            let f = Frac::of(&Claim::lt(ratio(1, 2))).unwrap();
            assert!(flag_min_m(&dt, &[1], f).is_some(), "{dt}");
        }
        assert!(flag_seeds(&t(&[1, 2, 2, 12])).contains(&vec![1, 1]));
        assert!(flag_seeds(&t(&[1, 1, 2, 2, 20])).contains(&vec![1, 2, 1]));
        // m = 5 for d = 1000, g = 4
        assert!(flag_seeds(&t(&[1, 1, 1, 1000])).contains(&vec![4, 20]));
        assert!(flag_seeds(&t(&[1, 1, 1, 1000])).contains(&vec![5, 25]));
    }

    #[test]
    fn invalid_threshold() {
        let e = engine();
        assert!(e.certify(&t(&[1, 3]), &Claim::lt(ratio(3, 2))).is_err());
        assert!(e
            .certify(&t(&[1, 3]), &Claim::lt(Rational::zero()))
            .is_err());
    }

    #[test]
    fn scale_only_for_non_primitive() {
        let e = engine();
        let c = certified(&e, &t(&[2, 6]), Claim::le(ratio(1, 3)));
        assert_eq!(c.rule, Rule::Scale);
        assert_eq!(c.bound.value(), &ratio(1, 3));
        let c = certified(&e, &t(&[3, 3]), Claim::lt(ratio(1, 2)));
        assert_eq!(c.rule_path(), "scale(oned)");
        let c = certified(&e, &t(&[2, 4, 8]), Claim::lt(ratio(1, 2)));
        assert_eq!(c.rule_path(), "scale(fact)");
    }

    #[test]
    fn products() {
        let e = engine();
        let c = certified(&e, &t(&[1, 6, 6]), Claim::le(ratio(1, 3)));
        assert_eq!(c.rule, Rule::Product);
        assert_eq!(c.bound.value(), &ratio(1, 3));
        // 1, m, m^2 is an exact fact; without facts the product route still reaches 1/m
        let bare = Engine::default().with_knowledge(KnowledgeBase::empty());
        for m in 2..=6u64 {
            let c = certified(
                &bare,
                &t(&[1, m as i64, (m * m) as i64]),
                Claim::le(ratio(1, m)),
            );
            assert_eq!(c.rule, Rule::Product, "{m}");
        }
    }

    #[test]
    fn monotone_in_threshold() {
        let e = engine();
        for d in crate::poltype::enumerate_types(3, 8, 64) {
            let mut seen = false;
            for den in (2..=12u64).rev() {
                let ok = e
                    .certify(&d, &Claim::lt(ratio(1, den)))
                    .unwrap()
                    .is_certified();
                assert!(!seen || ok, "{d} lost certification at 1/{den}");
                seen |= ok;
            }
        }
    }

    #[test]
    fn best_bounds() {
        let e = engine();
        assert_eq!(
            e.best_bound(&t(&[1, 1, 1000])),
            BoundValue::new(ratio(1, 10), false)
        );
        let (b, out) = e.best_certificate(&t(&[1, 1, 8000]));
        assert_eq!(b.value(), &ratio(1, 20));
        verify(out.certificate().unwrap()).unwrap();
        let b = e.best_bound(&t(&[1, 6, 6]));
        assert_eq!(b.value(), &ratio(1, 3));
    }

    #[test]
    fn experimental_rule_is_opt_in() {
        let e = Engine::default().with_experimental(true);
        let d = t(&[1, 2, 2, 2, 12]);
        let plain = Engine::default()
            .certify(&d, &Claim::lt(ratio(1, 2)))
            .unwrap();
        let exp = e.certify(&d, &Claim::lt(ratio(1, 2))).unwrap();
        if let Outcome::Certified(c) = exp {
            if c.rule == Rule::Conjectural {
                assert!(!plain.is_certified());
                assert!(verify(&c).is_err());
            }
        }
    }
}
