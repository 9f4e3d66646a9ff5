//! Exact certification of upper bounds on the basepoint-freeness threshold
//! `beta(D)` of polarization types, with an integer-lattice oracle for the
//! explicit line bundles behind the flag bound.
//!
//! - [`poltype`]: divisibility chains, type products and factorizations.
//! - [`zlinalg`]: Smith normal form, Pfaffians, alternating forms.
//! - [`oracle`]: the product-of-elliptic-curves model and its line bundles.
//! - [`engine`]: bound rules, certificate search and the independent verifier.
//! - [`report`]: sweeps, theorem replays and asymptotic tables.

pub mod arith;
pub mod engine;
pub mod oracle;
pub mod par;
pub mod poltype;
pub mod rational;
pub mod report;
pub mod zlinalg;

pub use engine::{Certificate, Claim, Engine, Outcome, Relation, SearchBudget};
pub use poltype::PolType;
pub use rational::Rational;
