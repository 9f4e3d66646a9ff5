//! Independent re-check of a certificate tree.
//!
//! Nothing here calls into the rule functions or the search: every formula,
//! the fact table and the factorization test are re-derived locally, the
//! last one through the Smith form of `diag(D1, D2)`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

use super::{BoundValue, Certificate, Claim, Relation, Rule};
use crate::rational::Rational;
use crate::zlinalg::{invariant_factors, IntMatrix};

/// Why a node was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    ThresholdOutOfRange,
    BoundOutOfRange,
    ClaimNotEstablished,
    BadParams,
    WrongChildCount,
    WrongShape,
    ConditionFails,
    BoundMismatch { expected: String },
    UnknownFact,
    NotAFactorization,
    ChildTypeMismatch,
    ChildClaimMismatch,
    Untrusted,
}

impl Reason {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Reason::ThresholdOutOfRange => "threshold_out_of_range",
            Reason::BoundOutOfRange => "bound_out_of_range",
            Reason::ClaimNotEstablished => "claim_not_established",
            Reason::BadParams => "bad_params",
            Reason::WrongChildCount => "wrong_child_count",
            Reason::WrongShape => "wrong_shape",
            Reason::ConditionFails => "condition_fails",
            Reason::BoundMismatch { .. } => "bound_mismatch",
            Reason::UnknownFact => "unknown_fact",
            Reason::NotAFactorization => "not_a_factorization",
            Reason::ChildTypeMismatch => "child_type_mismatch",
            Reason::ChildClaimMismatch => "child_claim_mismatch",
            Reason::Untrusted => "untrusted_rule",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::BoundMismatch { expected } => {
                write!(f, "bound_mismatch (recomputed {expected})")
            }
            other => f.write_str(other.code()),
        }
    }
}

/// A rejected node, addressed by child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {}: {reason}", path_text(.path))]
pub struct VerifyError {
    pub path: Vec<usize>,
    pub reason: Reason,
}

fn path_text(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".into();
    }
    path.iter().map(|i| format!("/{i}")).collect()
}

pub fn verify(cert: &Certificate) -> Result<(), VerifyError> {
    let mut path = Vec::new();
    check(cert, &mut path).map_err(|reason| VerifyError { path, reason })
}

pub fn is_valid(cert: &Certificate) -> bool {
    verify(cert).is_ok()
}

fn frac(n: u64, d: u64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn one() -> Rational {
    Rational::one()
}

fn establishes(claim: &Claim, b: &BoundValue) -> bool {
    let (v, t) = (b.value(), &claim.threshold);
    match claim.relation {
        Relation::Lt => v < t || (v == t && b.is_strict()),
        Relation::Le => v <= t,
    }
}

/// On error `path` is left pointing at the offending node.
fn check(c: &Certificate, path: &mut Vec<usize>) -> Result<(), Reason> {
    let t = &c.claim.threshold;
    if !t.is_positive() || *t > one() {
        return Err(Reason::ThresholdOutOfRange);
    }
    if !c.bound.value().is_positive() || *c.bound.value() > one() {
        return Err(Reason::BoundOutOfRange);
    }
    if !establishes(&c.claim, &c.bound) {
        return Err(Reason::ClaimNotEstablished);
    }
    let leaf_children = if matches!(c.rule, Rule::Scale) {
        1
    } else if matches!(c.rule, Rule::Product) {
        2
    } else {
        0
    };
    if c.children.len() != leaf_children {
        return Err(Reason::WrongChildCount);
    }
    let expected = match c.rule {
        Rule::Scale | Rule::Product => {
            let e = structural(c)?;
            for (i, child) in c.children.iter().enumerate() {
                path.push(i);
                check(child, path)?;
                path.pop();
            }
            e
        }
        _ => leaf_value(c)?,
    };
    if expected != c.bound {
        return Err(Reason::BoundMismatch {
            expected: expected.to_string(),
        });
    }
    Ok(())
}

fn no_params(c: &Certificate) -> Result<(), Reason> {
    if c.params.is_empty() {
        Ok(())
    } else {
        Err(Reason::BadParams)
    }
}

fn leaf_value(c: &Certificate) -> Result<BoundValue, Reason> {
    let d = c.ty.parts();
    let g = d.len();
    let last = *d.last().expect("types are non-empty");
    let weak = |v: Rational| BoundValue::new(v, false);
    match c.rule {
        Rule::Fact => {
            no_params(c)?;
            fact(d).map(weak).ok_or(Reason::UnknownFact)
        }
        Rule::Elliptic => {
            no_params(c)?;
            if g != 1 {
                return Err(Reason::WrongShape);
            }
            Ok(weak(frac(1, d[0])))
        }
        Rule::Trivial => {
            no_params(c)?;
            Ok(weak(one()))
        }
        Rule::Bpf => {
            no_params(c)?;
            let w: u128 = d.iter().map(|&x| x as u128).sum();
            if w < 2 * g as u128 {
                return Err(Reason::ConditionFails);
            }
            Ok(BoundValue::new(one(), true))
        }
        Rule::OneD => {
            let [m] = c.params[..] else {
                return Err(Reason::BadParams);
            };
            if d[..g - 1].iter().any(|&x| x != 1) {
                return Err(Reason::WrongShape);
            }
            let (mb, db) = (BigUint::from(m), BigUint::from(last));
            let e = g as u32;
            if m == 0 || Pow::pow(&mb, e) > db || Pow::pow(&(&mb + 1u32), e) <= db {
                return Err(Reason::BadParams);
            }
            let mut sum = BigUint::zero();
            let mut pw = BigUint::one();
            for _ in 0..=g {
                sum += &pw;
                pw *= &mb;
            }
            Ok(BoundValue::new(frac(1, m), db >= sum))
        }
        Rule::KClosed => {
            let [k] = c.params[..] else {
                return Err(Reason::BadParams);
            };
            if g < 2 {
                return Err(Reason::WrongShape);
            }
            let dd = d[g - 2];
            let base = BigUint::from(d[0]) + BigUint::from(k) * BigUint::from(dd);
            let need = d[..g - 1].iter().fold(base.clone(), |acc, &dj| {
                acc * (BigUint::from(k) * BigUint::from(dd / dj) + 1u32)
            });
            if BigUint::from(last) < need {
                return Err(Reason::ConditionFails);
            }
            Ok(weak(Rational::new(BigInt::one(), BigInt::from(base))))
        }
        Rule::Flag => {
            if g < 2 || c.params.len() != g - 1 || c.params.contains(&0) {
                return Err(Reason::BadParams);
            }
            let dd = d[g - 2];
            let (ks, m) = (&c.params[..g - 2], c.params[g - 2]);
            // mm[i] = M_i, built downwards from M_g = 1
            let mut mm = vec![BigInt::zero(); g + 1];
            mm[g] = BigInt::one();
            for i in (2..g).rev() {
                let j = g - i;
                mm[i] = &mm[i + 1] + BigInt::from(dd / d[j - 1]) * BigInt::from(ks[j - 1]);
            }
            let mut terms = vec![
                frac(m, last),
                Rational::new(mm[2].clone(), BigInt::from(dd) * BigInt::from(m)),
            ];
            for i in 2..g {
                terms.push(Rational::new(
                    mm[i + 1].clone(),
                    BigInt::from(d[g - i - 1]) * &mm[i],
                ));
            }
            Ok(weak(terms.into_iter().max().expect("non-empty")))
        }
        Rule::Ccd => {
            let [k1, m] = c.params[..] else {
                return Err(Reason::BadParams);
            };
            if g != 3 || d[0] != 1 {
                return Err(Reason::WrongShape);
            }
            let cc = BigInt::from(d[1]);
            let l: BigInt = &cc * BigInt::from(k1) - 1;
            if !l.is_positive() || m == 0 {
                return Err(Reason::BadParams);
            }
            let terms = [
                Rational::new(BigInt::one(), l.clone()),
                Rational::new(l, &cc * BigInt::from(m)),
                frac(m, last),
            ];
            Ok(weak(terms.into_iter().max().expect("non-empty")))
        }
        Rule::Conjectural => Err(Reason::Untrusted),
        Rule::Scale | Rule::Product => unreachable!("structural rules handled by the caller"),
    }
}

fn structural(c: &Certificate) -> Result<BoundValue, Reason> {
    let d = c.ty.parts();
    match c.rule {
        Rule::Scale => {
            let [n] = c.params[..] else {
                return Err(Reason::BadParams);
            };
            if n < 2 || n != d[0] {
                return Err(Reason::BadParams);
            }
            let child = &c.children[0];
            let reduced: Vec<u64> = d.iter().map(|&x| x / n).collect();
            if child.ty.parts() != reduced.as_slice() {
                return Err(Reason::ChildTypeMismatch);
            }
            let nt = &c.claim.threshold * frac(n, 1);
            let want = if nt > one() {
                Claim::new(Relation::Le, one())
            } else {
                Claim::new(c.claim.relation, nt)
            };
            if child.claim != want {
                return Err(Reason::ChildClaimMismatch);
            }
            Ok(BoundValue::new(
                child.bound.value() / frac(n, 1),
                child.bound.is_strict(),
            ))
        }
        Rule::Product => {
            let p = &c.params;
            let l1 = *p.first().ok_or(Reason::BadParams)? as usize;
            if l1 == 0 || l1 >= d.len() || p.len() != 1 + d.len() {
                return Err(Reason::BadParams);
            }
            let (d1, d2) = (&p[1..=l1], &p[l1 + 1..]);
            let (a, b) = (&c.children[0], &c.children[1]);
            if a.ty.parts() != d1 || b.ty.parts() != d2 {
                return Err(Reason::ChildTypeMismatch);
            }
            let diag: Vec<u64> = d1.iter().chain(d2).copied().collect();
            let inv = invariant_factors(&IntMatrix::diag(&diag));
            if inv
                .iter()
                .map(|x| x.magnitude().clone())
                .ne(d.iter().map(|&x| BigUint::from(x)))
            {
                return Err(Reason::NotAFactorization);
            }
            if a.claim != c.claim || b.claim != c.claim {
                return Err(Reason::ChildClaimMismatch);
            }
            let v = a.bound.value().max(b.bound.value()).clone();
            let strict = [&a.bound, &b.bound]
                .iter()
                .filter(|x| *x.value() == v)
                .all(|x| x.is_strict());
            Ok(BoundValue::new(v, strict))
        }
        _ => unreachable!("leaf rules handled by the caller"),
    }
}

/// The exactly known values and the one bare upper bound, recomputed here on purpose.
fn fact(d: &[u64]) -> Option<Rational> {
    if d.len() < 2 {
        return None;
    }
    match d {
        [1, rest @ ..] if rest.iter().all(|&x| x == 2) => Some(one()),
        [2, rest @ ..] if rest.iter().all(|&x| x == 4) => Some(frac(1, 2)),
        [1, 3] => Some(frac(2, 3)),
        [1, 8] => Some(frac(3, 8)),
        &[1, m, mm] if BigUint::from(m) * BigUint::from(m) == BigUint::from(mm) => Some(frac(1, m)),
        _ => None,
    }
}
