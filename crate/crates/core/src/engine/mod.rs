//! Certified upper bounds on `beta(D)`.
//!
//! A claim is `beta(D) < t` or `beta(D) <= t`. [`Engine::certify`] searches
//! the bound rules for a [`Certificate`] of a claim; [`verify`] re-checks a
//! certificate without touching the search code.

mod certificate;
mod knowledge;
pub mod rules;
mod search;
mod verify;

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poltype::PolType;
use crate::rational::{format_rational, ratio, Rational};

pub use certificate::CertificateFormatError;
pub use knowledge::KnowledgeBase;
pub use search::{Engine, EngineError};
pub use verify::{is_valid, verify, Reason, VerifyError};

/// `beta <= value` (or `beta < value` when `strict`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundValue {
    value: Rational,
    strict: bool,
}

impl BoundValue {
    pub fn new(value: Rational, strict: bool) -> Self {
        Self { value, strict }
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Within the range `0 < value <= 1` that any `beta` satisfies.
    pub fn in_range(&self) -> bool {
        self.value.is_positive() && self.value <= Rational::one()
    }

    /// Divides the value by `n`, keeping strictness.
    pub fn scaled_down(&self, n: u64) -> Self {
        Self {
            value: &self.value / ratio(n, 1),
            strict: self.strict,
        }
    }

    /// True when this bound proves `beta < s`.
    pub fn proves_below(&self, s: &Rational) -> bool {
        self.value < *s || (self.value == *s && self.strict)
    }

    /// True when `self` is at least as strong as `other`.
    pub fn at_least_as_strong(&self, other: &BoundValue) -> bool {
        self.value < other.value || (self.value == other.value && (self.strict || !other.strict))
    }

    /// `max` with the product strictness rule: strict iff every input attaining the max is strict.
    pub fn combine_max(items: &[&BoundValue]) -> BoundValue {
        let value = items
            .iter()
            .map(|b| b.value.clone())
            .max()
            .expect("at least one bound");
        let strict = items.iter().filter(|b| b.value == value).all(|b| b.strict);
        BoundValue { value, strict }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}",
            if self.strict { "<" } else { "<=" },
            format_rational(&self.value)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Lt,
    Le,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "lt",
            Relation::Le => "le",
        })
    }
}

impl FromStr for Relation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lt" | "<" => Ok(Relation::Lt),
            "le" | "<=" => Ok(Relation::Le),
            other => Err(format!("unknown relation {other:?}, expected lt or le")),
        }
    }
}

/// `beta(D) < threshold` or `beta(D) <= threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Claim {
    pub relation: Relation,
    pub threshold: Rational,
}

impl Claim {
    pub fn new(relation: Relation, threshold: Rational) -> Self {
        Self {
            relation,
            threshold,
        }
    }

    pub fn lt(threshold: Rational) -> Self {
        Self::new(Relation::Lt, threshold)
    }

    pub fn le(threshold: Rational) -> Self {
        Self::new(Relation::Le, threshold)
    }

    /// Thresholds live in `(0, 1]`.
    pub fn is_well_formed(&self) -> bool {
        self.threshold.is_positive() && self.threshold <= Rational::one()
    }

    /// Does the bound establish this claim?
    pub fn admits(&self, b: &BoundValue) -> bool {
        match self.relation {
            Relation::Lt => b.proves_below(&self.threshold),
            Relation::Le => b.value <= self.threshold,
        }
    }

    /// Does a non-strict value `v` establish this claim?
    pub fn admits_value(&self, v: &Rational) -> bool {
        match self.relation {
            Relation::Lt => *v < self.threshold,
            Relation::Le => *v <= self.threshold,
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::Lt => "<",
            Relation::Le => "<=",
        };
        write!(f, "{op} {}", format_rational(&self.threshold))
    }
}

/// Rule identifiers, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Fact,
    Scale,
    Elliptic,
    OneD,
    KClosed,
    Flag,
    Ccd,
    Bpf,
    Trivial,
    Product,
    /// The open general `A_i` bound; never accepted by [`verify`].
    Conjectural,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::Fact,
        Rule::Scale,
        Rule::Elliptic,
        Rule::OneD,
        Rule::KClosed,
        Rule::Flag,
        Rule::Ccd,
        Rule::Bpf,
        Rule::Trivial,
        Rule::Product,
        Rule::Conjectural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Fact => "fact",
            Rule::Scale => "scale",
            Rule::Elliptic => "elliptic",
            Rule::OneD => "oned",
            Rule::KClosed => "kclosed",
            Rule::Flag => "flag",
            Rule::Ccd => "ccd",
            Rule::Bpf => "bpf",
            Rule::Trivial => "trivial",
            Rule::Product => "product",
            Rule::Conjectural => "conjectural",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// A tree of rule applications establishing `claim` for `ty`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub ty: PolType,
    pub claim: Claim,
    pub rule: Rule,
    pub params: Vec<u64>,
    pub bound: BoundValue,
    pub children: Vec<Certificate>,
}

impl Certificate {
    pub fn leaf(
        ty: PolType,
        claim: Claim,
        rule: Rule,
        params: Vec<u64>,
        bound: BoundValue,
    ) -> Self {
        Self {
            ty,
            claim,
            rule,
            params,
            bound,
            children: Vec::new(),
        }
    }

    /// Compact rule summary such as `product(scale(bpf),oned)`.
    pub fn rule_path(&self) -> String {
        if self.children.is_empty() {
            return self.rule.name().to_string();
        }
        let inner: Vec<String> = self.children.iter().map(Certificate::rule_path).collect();
        format!("{}({})", self.rule.name(), inner.join(","))
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(Certificate::node_count)
            .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Certified(Certificate),
    /// The claim is false: below the volume barrier or contradicting a known exact value.
    Impossible(String),
    /// Budget exhausted; says nothing about `beta`.
    Unknown,
}

impl Outcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Outcome::Certified(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Outcome::Certified(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Certified(_) => "certified",
            Outcome::Impossible(_) => "impossible",
            Outcome::Unknown => "unknown",
        }
    }
}

/// Search limits; overridable through `BETA_CERTIFY_BUDGET`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchBudget {
    pub k_max: u64,
    pub m_max: u64,
    pub depth_max: usize,
    pub factor_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            k_max: 16,
            m_max: 64,
            depth_max: 8,
            factor_cap: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad budget override {0:?}: expected comma-separated k_max=, M_max=, depth_max=, factor_cap= with positive values")]
pub struct BudgetError(pub String);

impl SearchBudget {
    pub const ENV_VAR: &'static str = "BETA_CERTIFY_BUDGET";

    /// Applies `key=value` overrides, e.g. `k_max=8,M_max=32`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, BudgetError> {
        let err = || BudgetError(spec.to_string());
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item.split_once('=').ok_or_else(err)?;
            let v: u64 = val.trim().parse().map_err(|_| err())?;
            if v == 0 {
                return Err(err());
            }
            match key.trim() {
                "k_max" => self.k_max = v,
                "M_max" | "m_max" => self.m_max = v,
                "depth_max" => self.depth_max = v as usize,
                "factor_cap" => self.factor_cap = v as usize,
                _ => return Err(err()),
            }
        }
        Ok(self)
    }

    /// Defaults with the environment override applied, if any.
    pub fn from_env() -> Result<Self, BudgetError> {
        match std::env::var(Self::ENV_VAR) {
            Ok(s) => Self::default().with_overrides(&s),
            Err(_) => Ok(Self::default()),
        }
    }
}

/// Geometric consequences of a bound on a general member of the moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Implications {
    pub basepoint_free: bool,
    pub projectively_normal: bool,
    pub torelli_surjective: bool,
}

/// Thresholds 1, 1/2 and `(g-1)/g`; each flag needs the strict inequality.
pub fn implications(b: &BoundValue, g: usize) -> Implications {
    assert!(g >= 1);
    Implications {
        basepoint_free: b.proves_below(&Rational::one()),
        projectively_normal: b.proves_below(&ratio(1, 2)),
        torelli_surjective: g >= 2 && b.proves_below(&ratio(g as u64 - 1, g as u64)),
    }
}

/// `t^g chi(D) <= 1` (strict claims) or `< 1` (non-strict claims).
pub fn below_volume_barrier(d: &PolType, claim: &Claim) -> bool {
    let vol = claim.threshold.pow(d.len() as i32) * crate::rational::from_biguint(&d.chi());
    match claim.relation {
        Relation::Lt => vol <= Rational::one(),
        Relation::Le => vol < Rational::one(),
    }
}
