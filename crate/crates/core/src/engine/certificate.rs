//! The JSON tree document for certificates.
//!
//! ```json
//! {"type":"[1,2,14]","relation":"lt","threshold":{"num":1,"den":2},
//!  "rule":"flag","params":[1,4],"bound":{"num":3,"den":8,"strict":false},"children":[]}
//! ```
//!
//! Integers that do not fit in a `u64` are written as decimal strings.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BoundValue, Certificate, Claim, Relation, Rule};
use crate::poltype::PolType;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateFormatError {
    #[error("malformed certificate JSON: {0}")]
    Json(String),
    #[error("bad type {0:?}")]
    Type(String),
    #[error("unknown rule {0:?}")]
    Rule(String),
    #[error("bad rational {0}/{1}")]
    Rational(String, String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Small(u64),
    Big(String),
}

impl Num {
    fn of(n: &BigInt) -> Self {
        n.to_u64()
            .map_or_else(|| Num::Big(n.to_string()), Num::Small)
    }

    fn to_big(&self) -> Option<BigInt> {
        match self {
            Num::Small(v) => Some(BigInt::from(*v)),
            Num::Big(s) => s.parse().ok(),
        }
    }

    fn text(&self) -> String {
        match self {
            Num::Small(v) => v.to_string(),
            Num::Big(s) => s.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Frac {
    num: Num,
    den: Num,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundDoc {
    num: Num,
    den: Num,
    strict: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Node {
    #[serde(rename = "type")]
    ty: String,
    relation: Relation,
    threshold: Frac,
    rule: String,
    params: Vec<u64>,
    bound: BoundDoc,
    children: Vec<Node>,
}

fn rational(num: &Num, den: &Num) -> Result<Rational, CertificateFormatError> {
    let bad = || CertificateFormatError::Rational(num.text(), den.text());
    let (n, d) = (num.to_big().ok_or_else(bad)?, den.to_big().ok_or_else(bad)?);
    if d.is_zero() || n.is_negative() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

impl Node {
    fn of(c: &Certificate) -> Self {
        Node {
            ty: c.ty.to_string(),
            relation: c.claim.relation,
            threshold: Frac {
                num: Num::of(c.claim.threshold.numer()),
                den: Num::of(c.claim.threshold.denom()),
            },
            rule: c.rule.name().to_string(),
            params: c.params.clone(),
            bound: BoundDoc {
                num: Num::of(c.bound.value().numer()),
                den: Num::of(c.bound.value().denom()),
                strict: c.bound.is_strict(),
            },
            children: c.children.iter().map(Node::of).collect(),
        }
    }

    fn into_certificate(self) -> Result<Certificate, CertificateFormatError> {
        let ty: PolType = self
            .ty
            .parse()
            .map_err(|_| CertificateFormatError::Type(self.ty.clone()))?;
        let rule: Rule = self
            .rule
            .parse()
            .map_err(|_| CertificateFormatError::Rule(self.rule.clone()))?;
        let threshold = rational(&self.threshold.num, &self.threshold.den)?;
        let value = rational(&self.bound.num, &self.bound.den)?;
        let children = self
            .children
            .into_iter()
            .map(Node::into_certificate)
            .collect::<Result<_, _>>()?;
        Ok(Certificate {
            ty,
            claim: Claim::new(self.relation, threshold),
            rule,
            params: self.params,
            bound: BoundValue::new(value, self.bound.strict),
            children,
        })
    }
}

impl Certificate {
    /// Compact single-line JSON; byte-identical for equal certificates.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Node::of(self)).expect("serializable")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&Node::of(self)).expect("serializable")
    }

    /// Parses the document without checking any mathematics; see [`super::verify`].
    pub fn from_json(s: &str) -> Result<Self, CertificateFormatError> {
        let node: Node =
            serde_json::from_str(s).map_err(|e| CertificateFormatError::Json(e.to_string()))?;
        node.into_certificate()
    }
}
