//! Exact integer linear algebra: Smith normal form, Bareiss determinants,
//! Pfaffians of alternating forms and rational definiteness tests.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poltype::PolType;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("alternating form is degenerate (Pfaffian 0)")]
    Degenerate,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not alternating")]
    NotAlternating,
}

/// Dense row-major matrix of big integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Copy>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| x.into()))
            .collect();
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn diag<T: Into<BigInt> + Copy>(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e.into();
        }
        m
    }

    pub fn diag_big(entries: &[BigInt]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "incompatible shapes");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    /// Principal submatrix on the given (sorted) indices.
    pub fn principal(&self, idx: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn row_major(&self) -> Vec<Vec<BigInt>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[BigInt]>::to_vec)
            .take(self.rows)
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = &self[(src, j)] * q;
            self[(dst, j)] += v;
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = &self[(i, src)] * q;
            self[(i, dst)] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self[(r, j)];
            self[(r, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Smith normal form `S = U A V` with `U`, `V` unimodular.
///
/// Pivots are chosen as the smallest nonzero absolute value in the active
/// block, ties broken by row then column, so `U` and `V` are reproducible.
pub fn smith_normal_form(a: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let (m, n) = (a.rows, a.cols);
    let mut s = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);
    for t in 0..m.min(n) {
        loop {
            let Some((pi, pj)) = smallest_entry(&s, t) else {
                return (u, s, v);
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let mut dirty = false;
            for i in t + 1..m {
                if s[(i, t)].is_zero() {
                    continue;
                }
                let q = -s[(i, t)].div_floor(&s[(t, t)]);
                s.add_row(i, t, &q);
                u.add_row(i, t, &q);
                dirty |= !s[(i, t)].is_zero();
            }
            for j in t + 1..n {
                if s[(t, j)].is_zero() {
                    continue;
                }
                let q = -s[(t, j)].div_floor(&s[(t, t)]);
                s.add_col(j, t, &q);
                v.add_col(j, t, &q);
                dirty |= !s[(t, j)].is_zero();
            }
            if dirty {
                continue;
            }
            // Enforce divisibility on the remaining block.
            let bad =
                (t + 1..m).find(|&i| (t + 1..n).any(|j| !s[(i, j)].is_multiple_of(&s[(t, t)])));
            if let Some(i) = bad {
                let one = BigInt::one();
                s.add_row(t, i, &one);
                u.add_row(t, i, &one);
                continue;
            }
            if s[(t, t)].is_negative() {
                s.negate_row(t);
                u.negate_row(t);
            }
            break;
        }
    }
    (u, s, v)
}

fn smallest_entry(s: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..s.rows {
        for j in t..s.cols {
            let x = &s[(i, j)];
            if x.is_zero() {
                continue;
            }
            match best {
                Some((bi, bj)) if s[(bi, bj)].abs() <= x.abs() => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

/// Diagonal of the Smith form (invariant factors, zeros last).
pub fn invariant_factors(a: &IntMatrix) -> Vec<BigInt> {
    let (_, s, _) = smith_normal_form(a);
    (0..s.rows.min(s.cols)).map(|i| s[(i, i)].clone()).collect()
}

/// Fraction-free (Bareiss) determinant.
pub fn det(a: &IntMatrix) -> BigInt {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let n = a.rows;
    if n == 0 {
        return BigInt::one();
    }
    let mut m = a.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[(k, k)].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                return BigInt::zero();
            };
            m.swap_rows(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)]) / &prev;
                m[(i, j)] = v;
            }
        }
        prev = m[(k, k)].clone();
    }
    sign * &m[(n - 1, n - 1)]
}

/// An integer antisymmetric matrix of even size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternatingForm {
    m: IntMatrix,
}

impl AlternatingForm {
    pub fn new(m: IntMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() || !m.rows.is_multiple_of(2) {
            return Err(LinalgError::DimensionMismatch(format!(
                "alternating form must be square of even size, got {}x{}",
                m.rows, m.cols
            )));
        }
        for i in 0..m.rows {
            if !m[(i, i)].is_zero() {
                return Err(LinalgError::NotAlternating);
            }
            for j in i + 1..m.rows {
                if m[(i, j)] != -&m[(j, i)] {
                    return Err(LinalgError::NotAlternating);
                }
            }
        }
        Ok(Self { m })
    }

    pub fn zero(n: usize) -> Self {
        assert!(n.is_multiple_of(2));
        Self {
            m: IntMatrix::zeros(n, n),
        }
    }

    /// Builds the form from its strictly upper entries, `upper[(i, j)]` for `i < j`.
    pub fn from_upper(n: usize, entries: &[((usize, usize), i64)]) -> Self {
        let mut f = Self::zero(n);
        for &((i, j), v) in entries {
            f.add_entry(i, j, &BigInt::from(v));
        }
        f
    }

    /// Standard symplectic form of size `2g` in the basis `(e_1, f_1, ..., e_g, f_g)`.
    pub fn standard(g: usize) -> Self {
        Self::block_diagonal(&vec![1; g])
    }

    /// Blocks `[[0, d], [-d, 0]]` along the diagonal.
    pub fn block_diagonal(ds: &[i64]) -> Self {
        let mut f = Self::zero(2 * ds.len());
        for (i, &d) in ds.iter().enumerate() {
            f.add_entry(2 * i, 2 * i + 1, &BigInt::from(d));
        }
        f
    }

    /// `E(i, j) += v` and `E(j, i) -= v`.
    pub fn add_entry(&mut self, i: usize, j: usize, v: &BigInt) {
        self.m[(i, j)] += v;
        self.m[(j, i)] -= v;
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.m[(i, j)]
    }

    pub fn scaled(&self, k: &BigInt) -> Self {
        let mut m = self.m.clone();
        for x in m.data.iter_mut() {
            *x *= k;
        }
        Self { m }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        let mut m = self.m.clone();
        for (x, y) in m.data.iter_mut().zip(&other.m.data) {
            *x += y;
        }
        Self { m }
    }

    /// Restriction to the span of the basis vectors in `idx` (sorted).
    pub fn restrict(&self, idx: &[usize]) -> Self {
        assert!(idx.len().is_multiple_of(2));
        Self {
            m: self.m.principal(idx),
        }
    }
}

/// Exact Pfaffian by expansion along the first row, memoized over index subsets.
pub fn pfaffian(e: &AlternatingForm) -> BigInt {
    let n = e.dim();
    assert!(n <= 32, "Pfaffian dimension {n} out of range");
    if n == 0 {
        return BigInt::one();
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut memo = HashMap::new();
    pf_rec(e, full, &mut memo)
}

fn pf_rec(e: &AlternatingForm, set: u32, memo: &mut HashMap<u32, BigInt>) -> BigInt {
    if set == 0 {
        return BigInt::one();
    }
    if let Some(v) = memo.get(&set) {
        return v.clone();
    }
    let i = set.trailing_zeros() as usize;
    let rest = set & !(1 << i);
    let mut acc = BigInt::zero();
    let mut pos = 0usize;
    let mut bits = rest;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let a = e.get(i, j);
        if !a.is_zero() {
            let sub = pf_rec(e, rest & !(1 << j), memo);
            if pos.is_multiple_of(2) {
                acc += a * sub;
            } else {
                acc -= a * sub;
            }
        }
        pos += 1;
    }
    memo.insert(set, acc.clone());
    acc
}

/// The type `(d_1, ..., d_g)` read off the paired elementary divisors.
pub fn alternating_divisors(e: &AlternatingForm) -> Result<PolType, LinalgError> {
    let s = invariant_factors(e.matrix());
    if s.iter().any(Zero::is_zero) {
        return Err(LinalgError::Degenerate);
    }
    assert!(
        s.chunks(2).all(|p| p[0] == p[1]),
        "elementary divisors of an alternating form must pair up: {s:?}"
    );
    let parts = s
        .chunks(2)
        .map(|p| u64::try_from(&p[0]).expect("elementary divisor fits in u64"))
        .collect();
    Ok(PolType::from_parts(parts).expect("Smith diagonal is a divisibility chain"))
}

/// Coefficient of `t_1 ... t_g` in `Pf(sum t_i E_i)` by inclusion-exclusion over subset sums.
pub fn mixed_pfaffian_coefficient(forms: &[AlternatingForm]) -> Result<BigInt, LinalgError> {
    let g = forms.len();
    if g == 0 {
        return Err(LinalgError::DimensionMismatch("no forms given".into()));
    }
    let n = forms[0].dim();
    if n != 2 * g || forms.iter().any(|f| f.dim() != n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected {g} forms of size {}x{}",
            2 * g,
            2 * g
        )));
    }
    let mut acc = BigInt::zero();
    for mask in 0u32..(1 << g) {
        let mut sum = AlternatingForm::zero(n);
        for (i, f) in forms.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = sum.plus(f);
            }
        }
        let pf = pfaffian(&sum);
        if (g - mask.count_ones() as usize).is_multiple_of(2) {
            acc += pf;
        } else {
            acc -= pf;
        }
    }
    Ok(acc)
}

/// True iff every leading principal minor of the symmetric matrix is positive.
pub fn is_positive_definite(m: &[Vec<Rational>]) -> bool {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
    // Gaussian elimination without pivoting: the k-th pivot is D_k / D_{k-1}.
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    for k in 0..n {
        if !a[k][k].is_positive() {
            return false;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &a[k][k];
            let (top, rest) = a.split_at_mut(i);
            for (dst, src) in rest[0][k..].iter_mut().zip(&top[k][k..]) {
                *dst -= &f * src;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn check_snf(a: &IntMatrix) {
        let (u, s, v) = smith_normal_form(a);
        assert_eq!(u.mul(a).mul(&v), s, "U A V != S for\n{a}");
        assert!(s.is_diagonal());
        let d: Vec<BigInt> = (0..s.rows().min(s.cols()))
            .map(|i| s[(i, i)].clone())
            .collect();
        for w in d.windows(2) {
            assert!(!w[0].is_negative());
            if w[0].is_zero() {
                assert!(w[1].is_zero());
            } else {
                assert!(w[1].is_multiple_of(&w[0]), "{d:?}");
            }
        }
        assert!(det(&u).abs().is_one());
        assert!(det(&v).abs().is_one());
        if a.is_square() {
            let prod: BigInt = d.iter().product();
            assert_eq!(prod.abs(), det(a).abs());
        }
    }

    #[test]
    fn snf_examples() {
        let (_, s, _) = smith_normal_form(&IntMatrix::diag(&[2, 3]));
        assert_eq!(s, IntMatrix::diag(&[1, 6]));
        let (_, s, _) = smith_normal_form(&IntMatrix::identity(3));
        assert_eq!(s, IntMatrix::identity(3));
        let (_, s, _) = smith_normal_form(&IntMatrix::diag(&[2, 6, 3]));
        assert_eq!(s, IntMatrix::diag(&[1, 6, 6]));
        let d = PolType::new(&[3])
            .unwrap()
            .product(&PolType::new(&[2, 6]).unwrap());
        assert_eq!(d.parts(), &[1, 6, 6]);
    }

    #[test]
    fn snf_random_and_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let r = rng.random_range(1..=5);
            let c = rng.random_range(1..=5);
            let rows: Vec<Vec<i64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.random_range(-9..=9)).collect())
                .collect();
            check_snf(&IntMatrix::from_rows(&rows));
        }
    }

    /// Invariant factors of a finite abelian group by brute force:
    /// count elements of each order and compare against candidate chains.
    #[test]
    fn snf_matches_group_invariants() {
        for a in 1..=12i64 {
            for b in 1..=12i64 {
                let s = invariant_factors(&IntMatrix::diag(&[a, b]));
                let g = a.gcd(&b);
                assert_eq!(s, vec![big(g), big(a * b / g)]);
            }
        }
    }

    #[test]
    fn det_small() {
        assert_eq!(
            det(&IntMatrix::from_rows(&[vec![2, 1], vec![1, 3]])),
            big(5)
        );
        assert_eq!(
            det(&IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]])),
            big(-1)
        );
        let m = IntMatrix::from_rows(&[vec![0, 2, 1], vec![3, 0, 4], vec![5, 6, 0]]);
        // cofactor expansion by hand: 0 - 2(0-20) + 1(18-0) = 58
        assert_eq!(det(&m), big(58));
    }

    fn worked_form() -> AlternatingForm {
        AlternatingForm::from_upper(4, &[((0, 1), 3), ((0, 3), -1), ((1, 2), 2), ((2, 3), 2)])
    }

    #[test]
    fn pfaffian_examples() {
        assert_eq!(pfaffian(&AlternatingForm::standard(1)), big(1));
        assert_eq!(pfaffian(&AlternatingForm::block_diagonal(&[1, 3])), big(3));
        assert_eq!(pfaffian(&worked_form()), big(4));
        assert_eq!(pfaffian(&AlternatingForm::zero(0)), big(1));
    }

    #[test]
    fn divisors_examples() {
        for g in 1..=5 {
            assert_eq!(
                alternating_divisors(&AlternatingForm::standard(g)).unwrap(),
                PolType::principal(g)
            );
        }
        assert_eq!(
            alternating_divisors(&AlternatingForm::block_diagonal(&[1, 3])).unwrap(),
            PolType::new(&[1, 3]).unwrap()
        );
        assert_eq!(
            alternating_divisors(&worked_form()).unwrap(),
            PolType::new(&[1, 4]).unwrap()
        );
        assert_eq!(
            alternating_divisors(&AlternatingForm::block_diagonal(&[1, 0])),
            Err(LinalgError::Degenerate)
        );
        // blocks (6, 4) have divisors (2, 12)
        assert_eq!(
            alternating_divisors(&AlternatingForm::block_diagonal(&[6, 4])).unwrap(),
            PolType::new(&[2, 12]).unwrap()
        );
    }

    #[test]
    fn mixed_coefficient_examples() {
        let e = AlternatingForm::block_diagonal(&[1, 3]);
        assert_eq!(
            mixed_pfaffian_coefficient(&[e.clone(), e.clone()]).unwrap(),
            big(6)
        );
        let f1 = AlternatingForm::from_upper(4, &[((0, 1), 1)]);
        let f2 = AlternatingForm::from_upper(4, &[((2, 3), 1)]);
        assert_eq!(
            mixed_pfaffian_coefficient(&[f1.clone(), f2]).unwrap(),
            big(1)
        );
        assert!(matches!(
            mixed_pfaffian_coefficient(std::slice::from_ref(&f1)),
            Err(LinalgError::DimensionMismatch(_))
        ));
        assert!(matches!(
            mixed_pfaffian_coefficient(&[f1, AlternatingForm::zero(6)]),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn definiteness() {
        let q = |v: i64| Rational::from_integer(big(v));
        assert!(is_positive_definite(&[vec![q(1), q(0)], vec![q(0), q(1)]]));
        assert!(!is_positive_definite(&[
            vec![q(1), q(0)],
            vec![q(0), q(-1)]
        ]));
        assert!(!is_positive_definite(&[vec![q(1), q(2)], vec![q(2), q(1)]]));
        assert!(is_positive_definite(&[vec![q(2), q(1)], vec![q(1), q(2)]]));
        assert!(!is_positive_definite(&[vec![q(0), q(0)], vec![q(0), q(1)]]));
    }

    fn random_form(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> AlternatingForm {
        let mut f = AlternatingForm::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                f.add_entry(i, j, &big(rng.random_range(-bound..=bound)));
            }
        }
        f
    }

    #[test]
    fn pfaffian_squares_to_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 4, 6, 8, 10] {
            for _ in 0..12 {
                let f = random_form(&mut rng, n, 5);
                let pf = pfaffian(&f);
                assert_eq!(&pf * &pf, det(f.matrix()), "n={n}");
            }
        }
    }

    #[test]
    fn alternating_divisors_pair_and_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 4, 6, 8] {
            for _ in 0..25 {
                let f = random_form(&mut rng, n, 4);
                let pf = pfaffian(&f);
                match alternating_divisors(&f) {
                    Ok(t) => assert_eq!(BigInt::from(t.chi()), pf.abs()),
                    Err(LinalgError::Degenerate) => assert!(pf.is_zero()),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    /// Coefficient of t1..tg by expanding Pf(sum t_i E_i) as a polynomial:
    /// the Pfaffian is multilinear in the rows, so expand over choices of
    /// which E_i contributes each matched pair.
    fn mixed_by_expansion(forms: &[AlternatingForm]) -> BigInt {
        let g = forms.len();
        let n = 2 * g;
        // perfect matchings of {0..n} with sign, assigning distinct forms to pairs
        fn rec(
            forms: &[AlternatingForm],
            left: Vec<usize>,
            used: u32,
            sign: i32,
            acc: BigInt,
            out: &mut BigInt,
        ) {
            if left.is_empty() {
                if sign > 0 {
                    *out += acc;
                } else {
                    *out -= acc;
                }
                return;
            }
            let i = left[0];
            for (pos, &j) in left.iter().enumerate().skip(1) {
                let rest: Vec<usize> = left.iter().copied().filter(|&x| x != i && x != j).collect();
                let s = if (pos - 1) % 2 == 0 { sign } else { -sign };
                for (k, f) in forms.iter().enumerate() {
                    if used & (1 << k) != 0 {
                        continue;
                    }
                    let a = f.get(i, j);
                    if a.is_zero() {
                        continue;
                    }
                    rec(forms, rest.clone(), used | (1 << k), s, &acc * a, out);
                }
            }
        }
        let mut out = BigInt::zero();
        rec(forms, (0..n).collect(), 0, 1, BigInt::one(), &mut out);
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn mixed_coefficient_is_symmetric_multilinear(seed in any::<u64>(), g in 1usize..=3, s0 in 0i64..4, s1 in 0i64..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let forms: Vec<_> = (0..g).map(|_| random_form(&mut rng, 2 * g, 3)).collect();
            let base = mixed_pfaffian_coefficient(&forms).unwrap();
            prop_assert_eq!(&base, &mixed_by_expansion(&forms));
            let mut rev = forms.clone();
            rev.reverse();
            prop_assert_eq!(&base, &mixed_pfaffian_coefficient(&rev).unwrap());
            let mut scaled = forms.clone();
            scaled[0] = scaled[0].scaled(&big(s0));
            if g > 1 {
                scaled[1] = scaled[1].scaled(&big(s1));
            }
            let factor = if g > 1 { s0 * s1 } else { s0 };
            prop_assert_eq!(mixed_pfaffian_coefficient(&scaled).unwrap(), base * big(factor));
        }

        #[test]
        fn mixed_of_equal_forms_is_factorial_pfaffian(seed in any::<u64>(), g in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_form(&mut rng, 2 * g, 4);
            let fact: i64 = (1..=g as i64).product();
            let forms = vec![e.clone(); g];
            prop_assert_eq!(mixed_pfaffian_coefficient(&forms).unwrap(), pfaffian(&e) * big(fact));
        }

        #[test]
        fn product_type_matches_snf(a in 1i64..=40, b in 1i64..=8, c in 1i64..=8, d in 1i64..=6) {
            // (a) x (b, b*c) vs invariant factors of diag(a, b, b*c), and (b) x (d) likewise
            let t = PolType::new(&[a]).unwrap().product(&PolType::new(&[b, b * c]).unwrap());
            let s = invariant_factors(&IntMatrix::diag(&[a, b, b * c]));
            prop_assert_eq!(t.parts().iter().map(|&x| big(x as i64)).collect::<Vec<_>>(), s);
            let t2 = PolType::new(&[b]).unwrap().product(&PolType::new(&[d]).unwrap());
            let s2 = invariant_factors(&IntMatrix::diag(&[b, d]));
            prop_assert_eq!(t2.parts().iter().map(|&x| big(x as i64)).collect::<Vec<_>>(), s2);
        }
    }
}
