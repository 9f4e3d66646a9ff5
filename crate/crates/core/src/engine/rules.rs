//! The bound rules, each a pure function of the type and its parameters.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use thiserror::Error;

use super::{BoundValue, Certificate, Claim, KnowledgeBase, Relation, Rule};
use crate::arith::{geometric_sum, iroot};
use crate::poltype::PolType;
use crate::rational::{ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule needs a different number of parts")]
    WrongLength,
    #[error("type does not have the shape the rule requires")]
    WrongShape,
    #[error("rule condition fails")]
    ConditionFails,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("child certificate does not match what the rule consumes")]
    ChildMismatch,
    #[error("pair is not a factorization of the type")]
    NotAFactorization,
}

fn q(n: &BigInt, d: &BigInt) -> Rational {
    Rational::new(n.clone(), d.clone())
}

/// `beta(d) = 1/d` on elliptic curves.
pub fn rule_elliptic(d: &PolType) -> Result<BoundValue, RuleError> {
    if d.len() != 1 {
        return Err(RuleError::WrongLength);
    }
    Ok(BoundValue::new(ratio(1, d.first()), false))
}

/// The claim a scale node asks of the primitive part `D / d_1`.
pub fn scale_child_claim(d1: u64, claim: &Claim) -> Claim {
    let t = &claim.threshold * ratio(d1, 1);
    if t > Rational::one() {
        Claim::le(Rational::one())
    } else {
        Claim::new(claim.relation, t)
    }
}

/// `beta(n D') = beta(D') / n`.
pub fn rule_scale(d: &PolType, claim: Claim, child: Certificate) -> Result<Certificate, RuleError> {
    let (n, prim) = d.primitive_split();
    if n == 1 || child.ty != prim || child.claim != scale_child_claim(n, &claim) {
        return Err(RuleError::ChildMismatch);
    }
    let bound = child.bound.scaled_down(n);
    Ok(Certificate {
        ty: d.clone(),
        claim,
        rule: Rule::Scale,
        params: vec![n],
        bound,
        children: vec![child],
    })
}

/// `M_i = 1 + sum_{j <= g-i} (d_{g-1}/d_j) k_j` for `2 <= i <= g` (index `i` of the result).
pub fn flag_ms(d: &PolType, ks: &[u64]) -> Vec<BigInt> {
    let g = d.len();
    let dd = d.d(g - 1);
    let mut ms = vec![BigInt::zero(); g + 1];
    for (i, m) in ms.iter_mut().enumerate().skip(2) {
        *m = BigInt::one();
        for j in 1..=g - i {
            *m += BigInt::from(dd / d.d(j)) * BigInt::from(ks[j - 1]);
        }
    }
    ms
}

/// The flag bound for `(k_1, ..., k_{g-2}, M)`.
pub fn rule_flag(d: &PolType, ks: &[u64], m: u64) -> Result<BoundValue, RuleError> {
    let g = d.len();
    if g < 2 {
        return Err(RuleError::WrongLength);
    }
    if ks.len() != g - 2 || m == 0 || ks.contains(&0) {
        return Err(RuleError::BadParams(format!(
            "expected {} positive k's and M >= 1",
            g - 2
        )));
    }
    let ms = flag_ms(d, ks);
    let big = |x: u64| BigInt::from(x);
    let mut best = q(&ms[2], &(big(d.d(g - 1)) * big(m)));
    for i in 2..g {
        best = best.max(q(&ms[i + 1], &(big(d.d(g - i)) * &ms[i])));
    }
    best = best.max(ratio(m, d.last()));
    Ok(BoundValue::new(best, false))
}

/// `(d_1 + k d_{g-1}) prod_{j<g} (1 + k d_{g-1}/d_j)`.
pub fn kclosed_requirement(d: &PolType, k: u64) -> BigUint {
    let g = d.len();
    let dd = d.d(g - 1);
    let mut need = BigUint::from(d.first()) + BigUint::from(k) * BigUint::from(dd);
    for j in 1..g {
        need *= BigUint::one() + BigUint::from(k) * BigUint::from(dd / d.d(j));
    }
    need
}

/// `beta(D) <= 1/(d_1 + k d_{g-1})` when `d_g` is large enough.
pub fn rule_kclosed(d: &PolType, k: u64) -> Result<BoundValue, RuleError> {
    let g = d.len();
    if g < 2 {
        if k == 0 {
            return Ok(BoundValue::new(ratio(1, d.first()), false));
        }
        return Err(RuleError::WrongLength);
    }
    if BigUint::from(d.last()) < kclosed_requirement(d, k) {
        return Err(RuleError::ConditionFails);
    }
    let den = BigInt::from(d.first()) + BigInt::from(k) * BigInt::from(d.d(g - 1));
    Ok(BoundValue::new(Rational::new(BigInt::one(), den), false))
}

/// `m = floor(d^{1/g})` for `(1^{(g-1)}, d)`.
pub fn oned_root(d: &PolType) -> Result<u64, RuleError> {
    if !d.is_one_d() {
        return Err(RuleError::WrongShape);
    }
    let m = iroot(&BigUint::from(d.last()), d.len() as u32);
    Ok(u64::try_from(m).expect("root fits"))
}

/// `beta(1^{(g-1)}, d) <= 1/m`, strict once `d >= m^g + ... + 1`.
pub fn rule_1d(d: &PolType) -> Result<BoundValue, RuleError> {
    let m = oned_root(d)?;
    let threshold = geometric_sum(&BigUint::from(m), d.len() as u32);
    Ok(BoundValue::new(
        ratio(1, m),
        BigUint::from(d.last()) >= threshold,
    ))
}

/// `(1, c, c d)`: `max{1/(c k_1 - 1), (c k_1 - 1)/(c M), M/(c d)}`.
pub fn rule_1ccd(d: &PolType, k1: u64, m: u64) -> Result<BoundValue, RuleError> {
    if d.len() != 3 || d.first() != 1 {
        return Err(RuleError::WrongShape);
    }
    let c = d.d(2);
    let base = c
        .checked_mul(k1)
        .ok_or_else(|| RuleError::BadParams("c k_1 overflows".into()))?;
    if base <= 1 || m == 0 {
        return Err(RuleError::BadParams("need c k_1 - 1 > 0 and M >= 1".into()));
    }
    let l = base - 1;
    let v = ratio(1, l)
        .max(Rational::new(
            BigInt::from(l),
            BigInt::from(c) * BigInt::from(m),
        ))
        .max(ratio(m, d.last()));
    Ok(BoundValue::new(v, false))
}

/// Basepoint freeness once `|D| >= 2 lambda(D)`.
pub fn rule_bpf(d: &PolType) -> Result<BoundValue, RuleError> {
    if d.weight() < 2 * d.len() as u128 {
        return Err(RuleError::ConditionFails);
    }
    Ok(BoundValue::new(ratio(1, 1), true))
}

/// `beta <= 1`.
pub fn rule_trivial() -> BoundValue {
    BoundValue::new(ratio(1, 1), false)
}

/// Parameters recorded on a product node: `[lambda(D1), D1..., D2...]`.
pub fn product_params(d1: &PolType, d2: &PolType) -> Vec<u64> {
    let mut p = vec![d1.len() as u64];
    p.extend_from_slice(d1.parts());
    p.extend_from_slice(d2.parts());
    p
}

/// `beta(D1 x D2) <= max{beta(D1), beta(D2)}`; both children carry the parent claim.
pub fn rule_product(
    d: &PolType,
    claim: Claim,
    c1: Certificate,
    c2: Certificate,
) -> Result<Certificate, RuleError> {
    if c1.ty.len() + c2.ty.len() != d.len() || c1.ty.product(&c2.ty) != *d {
        return Err(RuleError::NotAFactorization);
    }
    if c1.claim != claim || c2.claim != claim {
        return Err(RuleError::ChildMismatch);
    }
    let bound = BoundValue::combine_max(&[&c1.bound, &c2.bound]);
    let params = product_params(&c1.ty, &c2.ty);
    Ok(Certificate {
        ty: d.clone(),
        claim,
        rule: Rule::Product,
        params,
        bound,
        children: vec![c1, c2],
    })
}

/// The open bound `max{A_g/(d_1 A_{g-1}), ..., A_2/(d_{g-1} A_1), A_1/d_g}`, `A_g = 1`.
pub fn rule_conjectural(d: &PolType, a: &[u64]) -> Result<BoundValue, RuleError> {
    let g = d.len();
    if g < 2 || a.len() != g - 1 || a.contains(&0) {
        return Err(RuleError::BadParams(format!(
            "expected {} positive A's",
            g - 1
        )));
    }
    let mut aa = a.to_vec();
    aa.push(1);
    // aa[i - 1] = A_i
    let mut v = ratio(aa[0], d.last());
    for i in 1..g {
        v = v.max(Rational::new(
            BigInt::from(aa[i]),
            BigInt::from(d.d(g - i)) * BigInt::from(aa[i - 1]),
        ));
    }
    Ok(BoundValue::new(v, false))
}

/// True when `beta(D) < t` cannot hold: `t^g chi <= 1`, or a known lower bound reaches `t`.
pub fn lower_barrier(d: &PolType, t: &Rational, kb: &KnowledgeBase) -> bool {
    barrier_for(d, &Claim::lt(t.clone()), kb)
}

pub(crate) fn barrier_for(d: &PolType, claim: &Claim, kb: &KnowledgeBase) -> bool {
    if super::below_volume_barrier(d, claim) {
        return true;
    }
    match (kb.lower(d), claim.relation) {
        (Some(lo), Relation::Lt) => lo >= claim.threshold,
        (Some(lo), Relation::Le) => lo > claim.threshold,
        (None, _) => false,
    }
}
