//! Explicit line bundles `L = sum a_i F_i + c Gamma` on `E_1 x ... x E_g`,
//! realized as integer alternating forms on the period lattice.
//!
//! Model: `E_g = C / (Z + Z tau)` and `E_i = C / (Z + Z k_i tau)` with `tau = i`;
//! the isogeny `f_i : E_i -> E_g` is induced by the identity of `C`, so its
//! kernel is `Z/k_i`. The lattice basis is `(e_1, f_1, ..., e_g, f_g)` with
//! `e_i = 1` and `f_i = k_i tau` (`k_g = 1`). `F_i` pulls back a point of
//! `E_i`; `Gamma` pulls back the graph-type divisor through
//! `S(x) = x_g - sum_{i<g} f_i(x_i)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::engine::BoundValue;
use crate::poltype::PolType;
use crate::rational::Rational;
use crate::zlinalg::{self, AlternatingForm, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("divisibility hypothesis fails: {0}")]
    DivisibilityViolation(String),
    #[error("degenerate bundle (chi = 0)")]
    DegenerateBundle,
    #[error("bundle is not ample")]
    NotAmple,
}

impl From<LinalgError> for OracleError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Degenerate => OracleError::DegenerateBundle,
            other => OracleError::InvalidSpec(other.to_string()),
        }
    }
}

/// `(g, k_1..k_{g-1}, a_1..a_g, c)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LineBundleSpec {
    pub g: usize,
    pub k: Vec<u64>,
    pub a: Vec<i64>,
    pub c: i64,
}

/// `chis[i] = chi(L|X_i)` for `i = 0..g-1`, `X_i` the product of the first `g - i` curves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagData {
    pub chis: Vec<BigInt>,
}

impl LineBundleSpec {
    pub fn new(k: Vec<u64>, a: Vec<i64>, c: i64) -> Result<Self, OracleError> {
        let g = a.len();
        let spec = Self { g, k, a, c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.g < 2 {
            return Err(OracleError::InvalidSpec(format!(
                "g must be at least 2, got {}",
                self.g
            )));
        }
        if self.a.len() != self.g {
            return Err(OracleError::InvalidSpec(format!(
                "expected {} a-values, got {}",
                self.g,
                self.a.len()
            )));
        }
        if self.k.len() != self.g - 1 {
            return Err(OracleError::InvalidSpec(format!(
                "expected {} k-values, got {}",
                self.g - 1,
                self.k.len()
            )));
        }
        if self.k.contains(&0) {
            return Err(OracleError::InvalidSpec("k-values must be positive".into()));
        }
        Ok(())
    }

    /// `k_i` with `k_g = 1`, 1-based.
    pub fn k_at(&self, i: usize) -> u64 {
        if i == self.g {
            1
        } else {
            self.k[i - 1]
        }
    }

    fn big_a(&self, i: usize) -> BigInt {
        BigInt::from(self.a[i - 1])
    }

    /// Checks the hypotheses of the closed formulas and returns `(a, b, N, d)`.
    fn formula_data(&self) -> Result<(BigInt, BigInt, Rational, BigInt), OracleError> {
        self.validate()?;
        let g = self.g;
        let c = BigInt::from(self.c);
        if c.is_zero() {
            return Err(OracleError::DivisibilityViolation(
                "c must be nonzero".into(),
            ));
        }
        for i in 1..=g - 2 {
            let ai = self.big_a(i);
            if ai.is_zero() || !(&c % &ai).is_zero() {
                return Err(OracleError::DivisibilityViolation(format!(
                    "a_{i} = {ai} does not divide c = {c}"
                )));
            }
        }
        for i in [g - 1, g] {
            if !(self.big_a(i) % &c).is_zero() {
                return Err(OracleError::DivisibilityViolation(format!(
                    "c = {c} does not divide a_{i}"
                )));
            }
        }
        let a = self.big_a(g - 1) / &c;
        let b = self.big_a(g) / &c;
        let mut n = BigInt::one();
        for i in 1..=g - 2 {
            n += &c / self.big_a(i) * BigInt::from(self.k_at(i));
        }
        let d = &a * &b * &n + &b * BigInt::from(self.k_at(g - 1)) + &a;
        Ok((a, b, Rational::from_integer(n), d))
    }
}

impl fmt::Display for LineBundleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "g={}; k=[{}]; a=[{}]; c={}",
            self.g,
            join(self.k.iter().map(ToString::to_string).collect()),
            join(self.a.iter().map(ToString::to_string).collect()),
            self.c
        )
    }
}

impl FromStr for LineBundleSpec {
    type Err = OracleError;

    /// Parses the dump form `g=3; k=[1,1]; a=[1,2,2]; c=2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| OracleError::InvalidSpec(format!("{m} in {s:?}"));
        let (mut g, mut k, mut a, mut c) = (None, None, None, None);
        for field in s.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, val) = field.split_once('=').ok_or_else(|| bad("missing '='"))?;
            let val = val.trim();
            let list = |v: &str| -> Result<Vec<i64>, OracleError> {
                let inner = v
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| bad("expected [..]"))?;
                if inner.trim().is_empty() {
                    return Ok(Vec::new());
                }
                inner
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| bad("bad integer")))
                    .collect()
            };
            match key.trim() {
                "g" => g = Some(val.parse::<usize>().map_err(|_| bad("bad g"))?),
                "k" => k = Some(list(val)?),
                "a" => a = Some(list(val)?),
                "c" => c = Some(val.parse::<i64>().map_err(|_| bad("bad c"))?),
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        let (g, k, a, c) = (
            g.ok_or_else(|| bad("missing g"))?,
            k.ok_or_else(|| bad("missing k"))?,
            a.ok_or_else(|| bad("missing a"))?,
            c.ok_or_else(|| bad("missing c"))?,
        );
        if k.iter().any(|&x| x < 1) {
            return Err(bad("k-values must be positive"));
        }
        let spec = LineBundleSpec {
            g,
            k: k.into_iter().map(|x| x as u64).collect(),
            a,
            c,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Coordinates of `S(x)` in the basis `(1, tau)` of the lattice of `E_g`.
fn gamma_coords(spec: &LineBundleSpec) -> Vec<(BigInt, BigInt)> {
    let g = spec.g;
    let mut out = Vec::with_capacity(2 * g);
    for i in 1..=g {
        let sign = if i == g {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        out.push((sign.clone(), BigInt::zero()));
        out.push((BigInt::zero(), sign * BigInt::from(spec.k_at(i))));
    }
    out
}

/// Form of `F_i` (1-based).
pub fn fiber_form(g: usize, i: usize) -> AlternatingForm {
    let mut f = AlternatingForm::zero(2 * g);
    f.add_entry(2 * (i - 1), 2 * (i - 1) + 1, &BigInt::one());
    f
}

/// Form of `Gamma`.
pub fn gamma_form(spec: &LineBundleSpec) -> AlternatingForm {
    let s = gamma_coords(spec);
    let n = 2 * spec.g;
    let mut f = AlternatingForm::zero(n);
    for x in 0..n {
        for y in x + 1..n {
            let ((p, q), (r, t)) = (&s[x], &s[y]);
            let v = p * t - q * r;
            if !v.is_zero() {
                f.add_entry(x, y, &v);
            }
        }
    }
    f
}

/// `sum a_i E_{F_i} + c E_Gamma`.
pub fn chern_form(spec: &LineBundleSpec) -> AlternatingForm {
    let mut f = gamma_form(spec).scaled(&BigInt::from(spec.c));
    for i in 1..=spec.g {
        let a = spec.big_a(i);
        if !a.is_zero() {
            f.add_entry(2 * (i - 1), 2 * (i - 1) + 1, &a);
        }
    }
    f
}

/// `chi(L)` on the lattice path: the Pfaffian of the Chern form.
pub fn chi_lattice(spec: &LineBundleSpec) -> BigInt {
    zlinalg::pfaffian(&chern_form(spec))
}

/// `a_1 ... a_{g-2} c^2 d`.
pub fn chi_formula(spec: &LineBundleSpec) -> Result<BigInt, OracleError> {
    let (_, _, _, d) = spec.formula_data()?;
    let c = BigInt::from(spec.c);
    let prefix: BigInt = (1..=spec.g - 2).map(|i| spec.big_a(i)).product();
    Ok(prefix * &c * &c * d)
}

/// Invariant factors of `{|a_1|, ..., |a_{g-2}|, |c|, |c d|}`.
pub fn type_formula(spec: &LineBundleSpec) -> Result<PolType, OracleError> {
    let (_, _, _, d) = spec.formula_data()?;
    if d.is_zero() {
        return Err(OracleError::DegenerateBundle);
    }
    let c = BigInt::from(spec.c);
    let mut parts: Vec<BigInt> = (1..=spec.g - 2).map(|i| spec.big_a(i).abs()).collect();
    parts.push(c.abs());
    parts.push((&c * &d).abs());
    let s = zlinalg::invariant_factors(&zlinalg::IntMatrix::diag_big(&parts));
    let parts = s
        .iter()
        .map(|x| {
            x.to_u64()
                .ok_or_else(|| OracleError::InvalidSpec("type part exceeds u64".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolType::from_parts(parts).expect("invariant factors form a chain"))
}

/// Elementary divisors of the Chern form; no hypotheses on `a`, `c`.
pub fn type_oracle(spec: &LineBundleSpec) -> Result<PolType, OracleError> {
    spec.validate()?;
    Ok(zlinalg::alternating_divisors(&chern_form(spec))?)
}

/// Lattice path: Pfaffians of the form restricted to the first `g - i` factors.
pub fn flag_chis(spec: &LineBundleSpec) -> Result<FlagData, OracleError> {
    spec.validate()?;
    let form = chern_form(spec);
    let chis = (0..spec.g)
        .map(|i| {
            let idx: Vec<usize> = (0..2 * (spec.g - i)).collect();
            zlinalg::pfaffian(&form.restrict(&idx))
        })
        .collect();
    Ok(FlagData { chis })
}

/// Closed-form path: `chi(L|X_i) = a_1 ... a_{g-i} N_i` for `i >= 1`, and
/// [`chi_formula`] (or `prod a_j` when `c = 0`) for `X_0`.
pub fn flag_chis_formula(spec: &LineBundleSpec) -> Result<FlagData, OracleError> {
    spec.validate()?;
    let g = spec.g;
    let c = BigInt::from(spec.c);
    let mut chis = Vec::with_capacity(g);
    chis.push(if c.is_zero() {
        (1..=g).map(|j| spec.big_a(j)).product()
    } else {
        chi_formula(spec)?
    });
    for i in 1..g {
        let mut n = BigInt::one();
        let mut prefix = BigInt::one();
        for j in 1..=g - i {
            let aj = spec.big_a(j);
            if aj.is_zero() || !(&c % &aj).is_zero() {
                return Err(OracleError::DivisibilityViolation(format!(
                    "a_{j} = {aj} does not divide c = {c}"
                )));
            }
            n += &c / &aj * BigInt::from(spec.k_at(j));
            prefix *= aj;
        }
        chis.push(prefix * n);
    }
    Ok(FlagData { chis })
}

/// Ample iff every flag Euler characteristic is positive.
pub fn is_ample(spec: &LineBundleSpec) -> Result<bool, OracleError> {
    Ok(flag_chis(spec)?.chis.iter().all(Signed::is_positive))
}

/// `R(x, y) = E(x, J y)` at `tau = i`, with `J e_j = f_j / k_j`, `J f_j = -k_j e_j`.
pub fn hermitian_form(spec: &LineBundleSpec) -> Vec<Vec<Rational>> {
    let e = chern_form(spec);
    let n = 2 * spec.g;
    // columns of J
    let mut j_cols: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; n];
    for idx in 0..spec.g {
        let k = BigInt::from(spec.k_at(idx + 1));
        j_cols[2 * idx][2 * idx + 1] = Rational::new(BigInt::one(), k.clone());
        j_cols[2 * idx + 1][2 * idx] = Rational::from_integer(-k);
    }
    let mut r = vec![vec![Rational::zero(); n]; n];
    for (x, row) in r.iter_mut().enumerate() {
        for (cell, col) in row.iter_mut().zip(&j_cols) {
            let mut acc = Rational::zero();
            for (z, coef) in col.iter().enumerate() {
                if !coef.is_zero() {
                    acc += coef * Rational::from_integer(e.get(x, z).clone());
                }
            }
            *cell = acc;
        }
    }
    r
}

/// Ampleness via positive-definiteness of the Hermitian form.
pub fn is_ample_hermitian(spec: &LineBundleSpec) -> bool {
    zlinalg::is_positive_definite(&hermitian_form(spec))
}

/// `max chi(L|X_{i+1}) / chi(L|X_i)` with `chi(L|X_g) = 1`, as a non-strict bound.
pub fn flag_bound(spec: &LineBundleSpec) -> Result<BoundValue, OracleError> {
    let chis = flag_chis(spec)?.chis;
    if !chis.iter().all(Signed::is_positive) {
        return Err(OracleError::NotAmple);
    }
    let mut best = Rational::zero();
    for i in 0..spec.g {
        let next = if i + 1 < spec.g {
            chis[i + 1].clone()
        } else {
            BigInt::one()
        };
        let r = Rational::new(next, chis[i].clone());
        if r > best {
            best = r;
        }
    }
    Ok(BoundValue::new(best, false))
}

/// The bundle realizing the flag bound for `D` with parameters `(ks, M)`:
/// `a_i = d_i` (i <= g-2), `a_{g-1} = r d_{g-1}`, `a_g = q d_{g-1}`, `c = d_{g-1}`,
/// with `d_g / d_{g-1} = M q + r` and `k_{g-1} = M - r M_2 >= 1`.
pub fn flag_construction(d: &PolType, ks: &[u64], m: u64) -> LineBundleSpec {
    let g = d.len();
    assert!(g >= 2 && ks.len() == g - 2 && m >= 1);
    let dgm1 = d.d(g - 1) as i128;
    let quotient = (d.last() / d.d(g - 1)) as i128;
    let m2: i128 = 1
        + (1..=g - 2)
            .map(|j| (dgm1 / d.d(j) as i128) * ks[j - 1] as i128)
            .sum::<i128>();
    let m = m as i128;
    // largest r <= (M - 1) / M_2 with r = quotient (mod M)
    let r_max = (m - 1).div_euclid(m2);
    let r = r_max - (r_max - quotient).rem_euclid(m);
    let q = (quotient - r) / m;
    let k_last = m - r * m2;
    debug_assert!(k_last >= 1);
    let mut a: Vec<i64> = (1..=g - 2).map(|j| d.d(j) as i64).collect();
    a.push((r * dgm1) as i64);
    a.push((q * dgm1) as i64);
    let mut k = ks.to_vec();
    k.push(k_last as u64);
    LineBundleSpec {
        g,
        k,
        a,
        c: dgm1 as i64,
    }
}
