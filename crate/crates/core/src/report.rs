//! Sweeps over type ranges, theorem replays and the asymptotic table.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::arith::iroot;
use crate::engine::{BoundValue, Claim, Engine, Outcome, Relation};
use crate::par::Execution;
use crate::poltype::{enumerate_types, enumerate_types_by_max_part, PolType};
use crate::rational::{format_rational, from_biguint, ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("empty or infeasible range: {0}")]
    Infeasible(String),
    #[error("unknown theorem {0:?}; expected thm6.1, prop5.4-1 or prop5.4-3")]
    UnknownTheorem(String),
    #[error("{0}")]
    Threshold(String),
    #[error("malformed prefix: {0}")]
    Prefix(String),
}

/// One certified (or not) type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub ty: PolType,
    pub claim: Claim,
    pub outcome: Outcome,
}

impl SweepRow {
    pub fn bound(&self) -> Option<&BoundValue> {
        self.outcome.certificate().map(|c| &c.bound)
    }

    pub fn rule_path(&self) -> String {
        self.outcome
            .certificate()
            .map(|c| c.rule_path())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub certified: usize,
    pub impossible: usize,
    pub unknown: usize,
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "certified {}, impossible {}, unknown {}",
            self.certified, self.impossible, self.unknown
        )
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "type",
    "chi",
    "weight",
    "target",
    "outcome",
    "bound_num",
    "bound_den",
    "strict",
    "rule_path",
];

impl SweepReport {
    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for r in &self.rows {
            match r.outcome {
                Outcome::Certified(_) => c.certified += 1,
                Outcome::Impossible(_) => c.impossible += 1,
                Outcome::Unknown => c.unknown += 1,
            }
        }
        c
    }

    pub fn uncertified(&self) -> Vec<PolType> {
        self.rows
            .iter()
            .filter(|r| !r.outcome.is_certified())
            .map(|r| r.ty.clone())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let (num, den, strict) = match r.bound() {
                Some(b) => (
                    b.value().numer().to_string(),
                    b.value().denom().to_string(),
                    b.is_strict().to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                r.ty.to_string(),
                r.ty.chi().to_string(),
                r.ty.weight().to_string(),
                format_rational(&r.claim.threshold),
                r.outcome.label().to_string(),
                num,
                den,
                strict,
                r.rule_path(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Certifies `claim_for(D)` for every type, keeping input order.
pub fn sweep_with(
    engine: &Engine,
    types: &[PolType],
    exec: Execution,
    claim_for: impl Fn(&PolType) -> Claim + Sync + Send,
) -> SweepReport {
    let rows = exec.map(types, |d| {
        let claim = claim_for(d);
        let outcome = engine
            .certify(d, &claim)
            .expect("claims built here are well formed");
        SweepRow {
            ty: d.clone(),
            claim,
            outcome,
        }
    });
    SweepReport { rows }
}

/// All types of length `g` with `chi_min <= chi <= chi_max`, certified against one claim.
pub fn sweep(
    engine: &Engine,
    g: usize,
    chi_min: u128,
    chi_max: u128,
    claim: &Claim,
    exec: Execution,
) -> Result<SweepReport, ReportError> {
    if g == 0 || chi_min > chi_max || chi_max == 0 {
        return Err(ReportError::Infeasible(format!(
            "g={g}, chi in [{chi_min}, {chi_max}]"
        )));
    }
    if !claim.is_well_formed() {
        return Err(ReportError::Threshold(format!(
            "target must lie in (0, 1], got {}",
            format_rational(&claim.threshold)
        )));
    }
    let types = enumerate_types(g, chi_min, chi_max);
    Ok(sweep_with(engine, &types, exec, |_| claim.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremName {
    /// `beta < 1/2` once `chi >= 2^{2g-1}`, except `(2, 4, ..., 4)`.
    LargeChiHalf,
    /// `beta <= g/(g+1)` once `|D| >= 2g`.
    WeightNonStrict,
    /// `beta < (g-1)/g` once `|D| >= 2g`, with a short exception list.
    WeightStrict,
}

impl FromStr for TheoremName {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thm6.1" => Ok(TheoremName::LargeChiHalf),
            "prop5.4-1" => Ok(TheoremName::WeightNonStrict),
            "prop5.4-3" => Ok(TheoremName::WeightStrict),
            other => Err(ReportError::UnknownTheorem(other.to_string())),
        }
    }
}

impl fmt::Display for TheoremName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremName::LargeChiHalf => "thm6.1",
            TheoremName::WeightNonStrict => "prop5.4-1",
            TheoremName::WeightStrict => "prop5.4-3",
        })
    }
}

impl TheoremName {
    pub fn claim(self, g: usize) -> Claim {
        let g = g as u64;
        match self {
            TheoremName::LargeChiHalf => Claim::lt(ratio(1, 2)),
            TheoremName::WeightNonStrict => Claim::le(ratio(g, g + 1)),
            TheoremName::WeightStrict => Claim::lt(ratio(g - 1, g)),
        }
    }

    /// Does `D` fall under the statement's hypothesis?
    pub fn applies(self, d: &PolType) -> bool {
        let g = d.len();
        match self {
            TheoremName::LargeChiHalf => d.chi() >= BigUint::one() << (2 * g - 1),
            TheoremName::WeightNonStrict | TheoremName::WeightStrict => d.weight() >= 2 * g as u128,
        }
    }

    /// The types the statement excludes.
    pub fn exceptions(self, g: usize) -> Vec<PolType> {
        let mk = |p: Vec<u64>| PolType::from_parts(p).expect("valid chain");
        // (1, ..., 1, 2, g) only exists for even g
        let ones_then = |tail: &[u64]| {
            let mut p = vec![1u64; g - tail.len()];
            p.extend_from_slice(tail);
            PolType::from_parts(p).ok()
        };
        let g64 = g as u64;
        let mut out = match self {
            TheoremName::LargeChiHalf => {
                let mut p = vec![4u64; g];
                p[0] = 2;
                vec![mk(p)]
            }
            TheoremName::WeightNonStrict => vec![],
            TheoremName::WeightStrict => match g {
                0 | 1 => vec![],
                2 => [[1, 3], [1, 4], [1, 5], [1, 6], [2, 2], [2, 4]]
                    .iter()
                    .map(|p| mk(p.to_vec()))
                    .collect(),
                3 => [[1, 1, 4], [1, 1, 5], [1, 1, 6], [1, 3, 3]]
                    .iter()
                    .map(|p| mk(p.to_vec()))
                    .collect(),
                _ => [
                    ones_then(&[g64 + 1]),
                    ones_then(&[g64 + 2]),
                    ones_then(&[2, g64]),
                ]
                .into_iter()
                .flatten()
                .collect(),
            },
        };
        out.sort();
        out
    }
}

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub name: TheoremName,
    pub g: usize,
    pub dmax: u64,
    pub sweep: SweepReport,
    /// Listed exceptions inside the swept range.
    pub expected_exceptions: Vec<PolType>,
    /// Uncertified types, listed or not.
    pub uncertified: Vec<PolType>,
    /// Uncertified types outside the exception list.
    pub failures: Vec<PolType>,
    /// Listed exceptions that nevertheless got a certificate.
    pub certified_exceptions: Vec<PolType>,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty() && self.certified_exceptions.is_empty()
    }
}

/// Replays a statement over all types of length `g` with `d_g <= dmax`
/// satisfying its hypothesis (and `chi <= chi_max` when given).
pub fn replay_theorem(
    engine: &Engine,
    name: TheoremName,
    g: usize,
    dmax: u64,
    chi_max: Option<u128>,
    exec: Execution,
) -> Result<TheoremReport, ReportError> {
    if g == 0 || dmax == 0 || (name == TheoremName::WeightStrict && g < 2) {
        return Err(ReportError::Infeasible(format!(
            "{name} with g={g}, dmax={dmax}"
        )));
    }
    let types: Vec<PolType> = enumerate_types_by_max_part(g, dmax)
        .into_iter()
        .filter(|d| name.applies(d))
        .filter(|d| chi_max.is_none_or(|c| d.chi() <= BigUint::from(c)))
        .collect();
    let claim = name.claim(g);
    let sweep = sweep_with(engine, &types, exec, |_| claim.clone());
    let listed = name.exceptions(g);
    let expected_exceptions: Vec<PolType> = listed
        .iter()
        .filter(|d| types.contains(d))
        .cloned()
        .collect();
    let uncertified = sweep.uncertified();
    let failures = uncertified
        .iter()
        .filter(|d| !listed.contains(d))
        .cloned()
        .collect();
    let certified_exceptions = sweep
        .rows
        .iter()
        .filter(|r| r.outcome.is_certified() && listed.contains(&r.ty))
        .map(|r| r.ty.clone())
        .collect();
    Ok(TheoremReport {
        name,
        g,
        dmax,
        sweep,
        expected_exceptions,
        uncertified,
        failures,
        certified_exceptions,
    })
}

/// Best certified bound against the volume lower bound `chi^{-1/g}`.
#[derive(Debug, Clone)]
pub struct AsymptoticRow {
    pub ty: PolType,
    pub upper: BoundValue,
    pub outcome: Outcome,
    /// `(upper * chi^{1/g})^g = upper^g * chi`, exact.
    pub ratio_pow: Rational,
}

impl AsymptoticRow {
    /// `chi^{-1/g}` when it is rational.
    pub fn exact_lower(&self) -> Option<Rational> {
        let chi = self.ty.chi();
        let g = self.ty.len() as u32;
        let r = iroot(&chi, g);
        (r.pow(g) == chi).then(|| Rational::new(1.into(), r.into()))
    }

    /// Decimal lower bound, for display.
    pub fn lower_f64(&self) -> f64 {
        let chi = self.ty.chi().to_f64().unwrap_or(f64::INFINITY);
        chi.powf(-1.0 / self.ty.len() as f64)
    }

    /// Decimal ratio, for display.
    pub fn ratio_f64(&self) -> f64 {
        crate::rational::to_f64(&self.ratio_pow).powf(1.0 / self.ty.len() as f64)
    }

    /// Exact test of `upper * chi^{1/g} <= r`.
    pub fn ratio_at_most(&self, r: &Rational) -> bool {
        self.ratio_pow <= r.pow(self.ty.len() as i32)
    }
}

pub fn asymptotic_row(engine: &Engine, d: &PolType) -> AsymptoticRow {
    let (upper, outcome) = engine.best_certificate(d);
    let ratio_pow = upper.value().pow(d.len() as i32) * from_biguint(&d.chi());
    AsymptoticRow {
        ty: d.clone(),
        upper,
        outcome,
        ratio_pow,
    }
}

/// Rows for `prefix ++ [d_g]` over each `d_g`.
pub fn asymptotic_table(
    engine: &Engine,
    prefix: &[u64],
    dgs: &[u64],
    exec: Execution,
) -> Result<Vec<AsymptoticRow>, ReportError> {
    if prefix.is_empty() {
        return Err(ReportError::Prefix("prefix must be non-empty".into()));
    }
    let types = dgs
        .iter()
        .map(|&dg| {
            let mut p = prefix.to_vec();
            p.push(dg);
            PolType::from_parts(p)
                .map_err(|e| ReportError::Prefix(format!("{prefix:?} with d_g = {dg}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(exec.map(&types, |d| asymptotic_row(engine, d)))
}

/// Convenience for summaries: `rel t` as text.
pub fn claim_text(c: &Claim) -> String {
    let op = if c.relation == Relation::Lt {
        "<"
    } else {
        "<="
    };
    format!("beta {op} {}", format_rational(&c.threshold))
}
