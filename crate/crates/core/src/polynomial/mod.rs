//! Exact sparse polynomials in the three correlations `a = s_12`,
//! `b = s_13`, `c = s_23`, with rational coefficients.

mod identities;
mod phi;
mod univariate;

pub use identities::{
    check_derivative_identity, check_edge_reduction, check_stein_reduction, IdentityCheck, IdentitySuite,
};
pub use phi::{moment_polynomial, phi_polynomial, symbolic_correlation, two_d_phi, MAX_PHI_DEGREE};
pub use univariate::UnivariatePolynomial;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::elliptope::CorrelationPoint;
use crate::scalar::{rational_to_string, Scalar};

/// One of the three correlation indeterminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    A,
    B,
    C,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::A, Var::B, Var::C];

    pub fn index(self) -> usize {
        match self {
            Var::A => 0,
            Var::B => 1,
            Var::C => 2,
        }
    }

    pub fn name(self) -> char {
        ['a', 'b', 'c'][self.index()]
    }
}

/// Exponents `(i, j, k)` of `a^i b^j c^k`, ordered graded-lexicographically:
/// lower total degree first, then higher powers of `a`, then of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial(pub [u32; 3]);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `a, b, c`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentPolynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

impl MomentPolynomial {
    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::default();
        p.add_term(Monomial([0, 0, 0]), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut exps = [0; 3];
        exps[v.index()] = 1;
        let mut p = Self::default();
        p.add_term(Monomial(exps), BigRational::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ([u32; 3], BigRational)>) -> Self {
        let mut p = Self::default();
        for (exps, coeff) in terms {
            p.add_term(Monomial(exps), coeff);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += coeff;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, coeff);
            }
        }
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exps: [u32; 3]) -> BigRational {
        self.terms.get(&Monomial(exps)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        self.coefficient([0, 0, 0])
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::default();
        }
        Self { terms: self.terms.iter().map(|(m, c)| (*m, c * factor)).collect() }
    }

    pub fn differentiate(&self, v: Var) -> Self {
        let idx = v.index();
        let mut out = Self::default();
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut exps = m.0;
            exps[idx] -= 1;
            out.add_term(Monomial(exps), c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Evaluates at a point over any scalar ring; exact for rational points.
    pub fn evaluate<S: Scalar>(&self, point: &CorrelationPoint<S>) -> S {
        let degree = self.terms.keys().map(|m| *m.0.iter().max().unwrap()).max().unwrap_or(0) as usize;
        let powers = |x: &S| {
            let mut table = Vec::with_capacity(degree + 1);
            table.push(S::one());
            for i in 1..=degree {
                let next = table[i - 1].clone() * x.clone();
                table.push(next);
            }
            table
        };
        let (pa, pb, pc) = (powers(&point.a), powers(&point.b), powers(&point.c));
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let [i, j, k] = m.0;
            let term = S::from_rational(c) * pa[i as usize].clone() * pb[j as usize].clone() * pc[k as usize].clone();
            acc = acc + term;
        }
        acc
    }

    /// Substitutes a univariate polynomial in `t` for each indeterminate.
    pub fn compose(&self, subs: [&UnivariatePolynomial; 3]) -> UnivariatePolynomial {
        let degree = self.terms.keys().map(|m| *m.0.iter().max().unwrap()).max().unwrap_or(0) as usize;
        let tables: Vec<Vec<UnivariatePolynomial>> = subs
            .iter()
            .map(|s| {
                let mut table = vec![UnivariatePolynomial::one()];
                for i in 1..=degree {
                    table.push(&table[i - 1] * *s);
                }
                table
            })
            .collect();
        let mut acc = UnivariatePolynomial::zero();
        for (m, c) in &self.terms {
            let [i, j, k] = m.0;
            let term = &(&tables[0][i as usize] * &tables[1][j as usize]) * &tables[2][k as usize];
            acc = &acc + &term.scale(c);
        }
        acc
    }

    /// Swaps indeterminates according to `perm`: the result has
    /// `new[perm[v]] = old[v]` in every monomial.
    pub fn rename(&self, perm: [Var; 3]) -> Self {
        let mut out = Self::default();
        for (m, c) in &self.terms {
            let mut exps = [0; 3];
            for (v, target) in perm.iter().enumerate() {
                exps[target.index()] = m.0[v];
            }
            out.add_term(Monomial(exps), c.clone());
        }
        out
    }

    /// Float evaluator with coefficients rounded once.
    pub fn compile(&self) -> CompiledPolynomial {
        CompiledPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.0.map(|e| e as usize), c.to_f64().unwrap_or(f64::NAN))).collect(),
            max_power: self.terms.keys().map(|m| *m.0.iter().max().unwrap() as usize).max().unwrap_or(0),
        }
    }

    /// JSON list of `[i, j, k, numerator, denominator]` records.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| json!([m.0[0], m.0[1], m.0[2], big_number(c.numer()), big_number(c.denom())]))
                .collect(),
        )
    }

    pub fn from_json(value: &Value) -> Option<Self> {
        let mut p = Self::default();
        for record in value.as_array()? {
            let rec = record.as_array()?;
            if rec.len() != 5 {
                return None;
            }
            let e = |idx: usize| rec[idx].as_u64().and_then(|x| u32::try_from(x).ok());
            let n = |idx: usize| -> Option<BigInt> {
                match &rec[idx] {
                    Value::Number(num) => num.to_string().parse().ok(),
                    _ => None,
                }
            };
            let den = n(4)?;
            if den.is_zero() {
                return None;
            }
            p.add_term(Monomial([e(0)?, e(1)?, e(2)?]), BigRational::new(n(3)?, den));
        }
        Some(p)
    }
}

fn big_number(n: &BigInt) -> Value {
    Value::Number(n.to_string().parse().expect("integer literal is a valid JSON number"))
}

/// Canonical text form: `coeff*a^i*b^j*c^k` terms joined by ` + ` (or ` - `)
/// in graded-lexicographic order; unit coefficients and exponents are elided.
impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let magnitude = c.abs();
            if idx == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            let mut factors = Vec::new();
            if !magnitude.is_one() || m.degree() == 0 {
                factors.push(rational_to_string(&magnitude));
            }
            for v in Var::ALL {
                match m.0[v.index()] {
                    0 => {}
                    1 => factors.push(v.name().to_string()),
                    e => factors.push(format!("{}^{}", v.name(), e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

/// Float form of a [`MomentPolynomial`] for scans and descent.
#[derive(Debug, Clone)]
pub struct CompiledPolynomial {
    terms: Vec<([usize; 3], f64)>,
    max_power: usize,
}

impl CompiledPolynomial {
    pub fn eval(&self, a: f64, b: f64, c: f64) -> f64 {
        let n = self.max_power + 1;
        let mut pa = [1.0f64; 64];
        let mut pb = [1.0f64; 64];
        let mut pc = [1.0f64; 64];
        if n > 64 {
            return self
                .terms
                .iter()
                .map(|(e, k)| k * a.powi(e[0] as i32) * b.powi(e[1] as i32) * c.powi(e[2] as i32))
                .sum();
        }
        for i in 1..n {
            pa[i] = pa[i - 1] * a;
            pb[i] = pb[i - 1] * b;
            pc[i] = pc[i - 1] * c;
        }
        self.terms.iter().map(|(e, k)| k * pa[e[0]] * pb[e[1]] * pc[e[2]]).sum()
    }

    pub fn eval_point(&self, p: &CorrelationPoint<f64>) -> f64 {
        self.eval(p.a, p.b, p.c)
    }
}

impl Add for MomentPolynomial {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for MomentPolynomial {
    type Output = Self;

    fn sub(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
        self
    }
}

impl Add for &MomentPolynomial {
    type Output = MomentPolynomial;

    fn add(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl Sub for &MomentPolynomial {
    type Output = MomentPolynomial;

    fn sub(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c);
        }
        out
    }
}

impl Neg for MomentPolynomial {
    type Output = Self;

    fn neg(self) -> Self {
        Self { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Mul for MomentPolynomial {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul for &MomentPolynomial {
    type Output = MomentPolynomial;

    fn mul(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        let mut out = MomentPolynomial::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let exps = [ma.0[0] + mb.0[0], ma.0[1] + mb.0[1], ma.0[2] + mb.0[2]];
                out.add_term(Monomial(exps), ca * cb);
            }
        }
        out
    }
}

impl Zero for MomentPolynomial {
    fn zero() -> Self {
        Self::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for MomentPolynomial {
    fn one() -> Self {
        Self::constant(BigRational::one())
    }
}

impl Scalar for MomentPolynomial {
    fn from_rational(r: &BigRational) -> Self {
        Self::constant(r.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn q(n: i64) -> BigRational {
        rational(n, 1)
    }

    #[test]
    fn graded_lex_order_and_text() {
        let p = MomentPolynomial::from_terms([
            ([1, 1, 1], q(8)),
            ([0, 0, 2], q(2)),
            ([2, 0, 0], q(2)),
            ([0, 0, 0], q(1)),
            ([0, 2, 0], q(2)),
        ]);
        assert_eq!(p.to_string(), "1 + 2*a^2 + 2*b^2 + 2*c^2 + 8*a*b*c");
        let n = MomentPolynomial::from_terms([([0, 1, 0], rational(-1, 2)), ([1, 0, 0], q(1))]);
        assert_eq!(n.to_string(), "a - 1/2*b");
        assert_eq!(MomentPolynomial::zero().to_string(), "0");
        assert_eq!((-MomentPolynomial::one()).to_string(), "-1");
    }

    #[test]
    fn derivatives() {
        let a2 = MomentPolynomial::from_terms([([0, 0, 0], q(1)), ([2, 0, 0], q(2))]);
        assert_eq!(a2.differentiate(Var::A), MomentPolynomial::from_terms([([1, 0, 0], q(4))]));
        let abc = MomentPolynomial::from_terms([([1, 1, 1], q(8))]);
        assert_eq!(abc.differentiate(Var::B), MomentPolynomial::from_terms([([1, 0, 1], q(8))]));
        assert!(MomentPolynomial::constant(q(5)).differentiate(Var::C).is_zero());
    }

    #[test]
    fn no_stored_zeros() {
        let a = MomentPolynomial::var(Var::A);
        let diff = a.clone() - a;
        assert!(diff.is_zero());
        assert_eq!(diff.num_terms(), 0);
    }

    #[test]
    fn json_round_trip_with_big_coefficients() {
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        let p =
            MomentPolynomial::from_terms([([0, 0, 0], BigRational::from_integer(big)), ([0, 1, 2], rational(-3, 7))]);
        let json = p.to_json();
        assert_eq!(json.to_string(), "[[0,0,0,123456789012345678901234567890,1],[0,1,2,-3,7]]");
        assert_eq!(MomentPolynomial::from_json(&json), Some(p));
    }

    #[test]
    fn compiled_matches_exact() {
        let p = MomentPolynomial::from_terms([([0, 0, 0], q(1)), ([3, 1, 0], rational(5, 2)), ([0, 2, 4], q(-7))]);
        let point = CorrelationPoint::new(rational(1, 3), rational(-1, 2), rational(3, 4));
        let exact = p.evaluate(&point);
        let f = p.compile().eval(1.0 / 3.0, -0.5, 0.75);
        assert!((f - exact.to_f64().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rename_swaps_variables() {
        let p = MomentPolynomial::from_terms([([2, 1, 0], q(3))]);
        let r = p.rename([Var::A, Var::C, Var::B]);
        assert_eq!(r, MomentPolynomial::from_terms([([2, 0, 1], q(3))]));
    }
}
