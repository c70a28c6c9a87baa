//! Complete commutative strong bimonoids used as weight algebras.
//!
//! A strong bimonoid is a semiring without distributivity: `(A, +, 0)` and
//! `(A, ·, 1)` are commutative monoids and `0` annihilates. Nothing in this
//! crate relies on distributivity, so the non-distributive algebras
//! (`pr1`, `pr2`, the tropical and arctic bimonoids) are first-class.
//!
//! Summation is only ever taken over finite families; callers materialize
//! finite index sets through enumeration bounds.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("mixed algebras: `{0}` and `{1}`")]
    Mixed(String, String),
    #[error("malformed weight literal `{literal}` for algebra `{algebra}`")]
    Malformed { algebra: String, literal: String },
    #[error("weight `{literal}` lies outside the carrier of `{algebra}`")]
    OutOfCarrier { algebra: String, literal: String },
    #[error("unknown algebra `{0}`")]
    Unknown(String),
    #[error("algebra `{0}` is not commutative and cannot be used as a weight algebra")]
    NonCommutative(String),
    #[error("algebra `lattice` needs a join/meet table")]
    MissingLattice,
    #[error("invalid lattice table: {0}")]
    Lattice(String),
}

/// Rationals extended with both infinities. The derived order puts
/// `NegInf < Fin(_) < PosInf`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    NegInf,
    Fin(BigRational),
    PosInf,
}

impl Ext {
    fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            // the carriers never mix the two infinities
            (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
            _ => Ext::NegInf,
        }
    }

    fn zero() -> Ext {
        Ext::Fin(BigRational::zero())
    }
}

/// A carrier element. Which variant is valid depends on the algebra.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Rat(BigRational),
    Ext(Ext),
    Nat(BigUint),
    /// Index into a finite lattice's element list.
    Elem(usize),
}

/// A non-empty finite lattice given by explicit join and meet tables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteLattice {
    elements: Vec<String>,
    join: Vec<Vec<usize>>,
    meet: Vec<Vec<usize>>,
    bottom: usize,
    top: usize,
}

impl FiniteLattice {
    /// Builds a lattice from an element list and row-major tables.
    ///
    /// Checks commutativity and associativity of both tables, the existence
    /// of the identities, that the join identity annihilates under meet,
    /// absorption and distributivity.
    pub fn new(
        elements: Vec<String>,
        join: Vec<Vec<usize>>,
        meet: Vec<Vec<usize>>,
    ) -> Result<Self, AlgebraError> {
        let n = elements.len();
        if n == 0 {
            return Err(AlgebraError::Lattice("no elements".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(AlgebraError::Lattice(format!("duplicate element `{e}`")));
            }
        }
        for (name, table) in [("join", &join), ("meet", &meet)] {
            if table.len() != n || table.iter().any(|row| row.len() != n) {
                return Err(AlgebraError::Lattice(format!("{name} table is not {n}x{n}")));
            }
            if table.iter().flatten().any(|&v| v >= n) {
                return Err(AlgebraError::Lattice(format!("{name} table has an unknown element")));
            }
            for a in 0..n {
                for b in 0..n {
                    if table[a][b] != table[b][a] {
                        return Err(AlgebraError::Lattice(format!(
                            "{name} is not commutative on ({}, {})",
                            elements[a], elements[b]
                        )));
                    }
                    for c in 0..n {
                        if table[table[a][b]][c] != table[a][table[b][c]] {
                            return Err(AlgebraError::Lattice(format!(
                                "{name} is not associative on ({}, {}, {})",
                                elements[a], elements[b], elements[c]
                            )));
                        }
                    }
                }
            }
        }
        let identity = |table: &Vec<Vec<usize>>| (0..n).find(|&e| (0..n).all(|a| table[e][a] == a));
        let bottom = identity(&join)
            .ok_or_else(|| AlgebraError::Lattice("join has no identity".into()))?;
        let top = identity(&meet)
            .ok_or_else(|| AlgebraError::Lattice("meet has no identity".into()))?;
        if (0..n).any(|a| meet[bottom][a] != bottom) {
            return Err(AlgebraError::Lattice("bottom does not annihilate under meet".into()));
        }
        for a in 0..n {
            for b in 0..n {
                if join[a][meet[a][b]] != a || meet[a][join[a][b]] != a {
                    return Err(AlgebraError::Lattice(format!(
                        "absorption fails on ({}, {})",
                        elements[a], elements[b]
                    )));
                }
                for c in 0..n {
                    if meet[a][join[b][c]] != join[meet[a][b]][meet[a][c]] {
                        return Err(AlgebraError::Lattice(format!(
                            "not distributive on ({}, {}, {})",
                            elements[a], elements[b], elements[c]
                        )));
                    }
                }
            }
        }
        Ok(FiniteLattice { elements, join, meet, bottom, top })
    }

    /// Parses the table file format:
    ///
    /// ```text
    /// elements bot a b top
    /// join
    /// bot a   b   top
    /// ...
    /// meet
    /// ...
    /// ```
    pub fn parse(text: &str) -> Result<Self, AlgebraError> {
        let mut elements: Option<Vec<String>> = None;
        let mut section: Option<&str> = None;
        let mut join_rows = Vec::new();
        let mut meet_rows = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            match words.next() {
                Some("elements") => elements = Some(words.map(str::to_owned).collect()),
                Some("join") if words.clone().next().is_none() => section = Some("join"),
                Some("meet") if words.clone().next().is_none() => section = Some("meet"),
                _ => {
                    let elems = elements
                        .as_ref()
                        .ok_or_else(|| AlgebraError::Lattice("`elements` must come first".into()))?;
                    let row = line
                        .split_whitespace()
                        .map(|w| {
                            elems.iter().position(|e| e == w).ok_or_else(|| {
                                AlgebraError::Lattice(format!("unknown element `{w}`"))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    match section {
                        Some("join") => join_rows.push(row),
                        Some("meet") => meet_rows.push(row),
                        _ => {
                            return Err(AlgebraError::Lattice(format!(
                                "row outside a join/meet section: `{line}`"
                            )))
                        }
                    }
                }
            }
        }
        let elements = elements.ok_or_else(|| AlgebraError::Lattice("missing `elements`".into()))?;
        FiniteLattice::new(elements, join_rows, meet_rows)
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }
}

/// The shipped weight algebras.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Bimonoid {
    /// `({0,1}, ∨, ∧, 0, 1)`
    Boolean,
    /// `(ℚ≥0, +, ·, 0, 1)`
    Probability,
    /// `([0,1], max, ·, 0, 1)`
    Viterbi,
    /// `(ℚ ∪ {∞}, min, +, ∞, 0)`
    Tropical,
    /// `(ℚ ∪ {−∞}, max, +, −∞, 0)`
    Arctic,
    /// `([0,1], a + b − ab, ·, 0, 1)`
    Pr1,
    /// `([0,1], min(a + b, 1), ·, 0, 1)`
    Pr2,
    /// `(ℚ≥0 ∪ {∞}, +, min, 0, ∞)`
    TropicalBimonoid,
    /// `(ℚ≤0 ∪ {−∞}, +, max, 0, −∞)`; non-positive so that `0` annihilates under max.
    ArcticBimonoid,
    /// `(ℕ, lcm, gcd, 1, 0)`
    LcmGcd,
    Lattice(Arc<FiniteLattice>),
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn in_unit(q: &BigRational) -> bool {
    !q.is_negative() && *q <= BigRational::one()
}

impl Bimonoid {
    /// Every algebra that needs no extra data.
    pub fn builtins() -> Vec<Bimonoid> {
        vec![
            Bimonoid::Boolean,
            Bimonoid::Probability,
            Bimonoid::Viterbi,
            Bimonoid::Tropical,
            Bimonoid::Arctic,
            Bimonoid::Pr1,
            Bimonoid::Pr2,
            Bimonoid::TropicalBimonoid,
            Bimonoid::ArcticBimonoid,
            Bimonoid::LcmGcd,
        ]
    }

    pub fn by_name(name: &str) -> Result<Bimonoid, AlgebraError> {
        Ok(match name {
            "boolean" | "bool" => Bimonoid::Boolean,
            "probability" | "prob" => Bimonoid::Probability,
            "viterbi" => Bimonoid::Viterbi,
            "tropical" => Bimonoid::Tropical,
            "arctic" => Bimonoid::Arctic,
            "pr1" => Bimonoid::Pr1,
            "pr2" => Bimonoid::Pr2,
            "tropical-bimonoid" => Bimonoid::TropicalBimonoid,
            "arctic-bimonoid" => Bimonoid::ArcticBimonoid,
            "lcm-gcd" => Bimonoid::LcmGcd,
            "lattice" => return Err(AlgebraError::MissingLattice),
            "formal-languages" | "language" | "lcp" | "longest-common-prefix" => {
                return Err(AlgebraError::NonCommutative(name.to_owned()))
            }
            other => return Err(AlgebraError::Unknown(other.to_owned())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Bimonoid::Boolean => "boolean",
            Bimonoid::Probability => "probability",
            Bimonoid::Viterbi => "viterbi",
            Bimonoid::Tropical => "tropical",
            Bimonoid::Arctic => "arctic",
            Bimonoid::Pr1 => "pr1",
            Bimonoid::Pr2 => "pr2",
            Bimonoid::TropicalBimonoid => "tropical-bimonoid",
            Bimonoid::ArcticBimonoid => "arctic-bimonoid",
            Bimonoid::LcmGcd => "lcm-gcd",
            Bimonoid::Lattice(_) => "lattice",
        }
    }

    pub fn zero(&self) -> Value {
        match self {
            Bimonoid::Boolean => Value::Bool(false),
            Bimonoid::Probability | Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2 => {
                Value::Rat(BigRational::zero())
            }
            Bimonoid::Tropical => Value::Ext(Ext::PosInf),
            Bimonoid::Arctic => Value::Ext(Ext::NegInf),
            Bimonoid::TropicalBimonoid | Bimonoid::ArcticBimonoid => Value::Ext(Ext::zero()),
            Bimonoid::LcmGcd => Value::Nat(BigUint::one()),
            Bimonoid::Lattice(l) => Value::Elem(l.bottom),
        }
    }

    pub fn one(&self) -> Value {
        match self {
            Bimonoid::Boolean => Value::Bool(true),
            Bimonoid::Probability | Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2 => {
                Value::Rat(BigRational::one())
            }
            Bimonoid::Tropical | Bimonoid::Arctic => Value::Ext(Ext::zero()),
            Bimonoid::TropicalBimonoid => Value::Ext(Ext::PosInf),
            Bimonoid::ArcticBimonoid => Value::Ext(Ext::NegInf),
            Bimonoid::LcmGcd => Value::Nat(BigUint::zero()),
            Bimonoid::Lattice(l) => Value::Elem(l.top),
        }
    }

    pub fn is_zero(&self, v: &Value) -> bool {
        *v == self.zero()
    }

    /// Whether `v` lies in this algebra's carrier.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Bimonoid::Boolean, Value::Bool(_)) => true,
            (Bimonoid::Probability, Value::Rat(q)) => !q.is_negative(),
            (Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2, Value::Rat(q)) => in_unit(q),
            (Bimonoid::Tropical, Value::Ext(e)) => *e != Ext::NegInf,
            (Bimonoid::Arctic, Value::Ext(e)) => *e != Ext::PosInf,
            (Bimonoid::TropicalBimonoid, Value::Ext(e)) => match e {
                Ext::Fin(q) => !q.is_negative(),
                Ext::PosInf => true,
                Ext::NegInf => false,
            },
            (Bimonoid::ArcticBimonoid, Value::Ext(e)) => match e {
                Ext::Fin(q) => !q.is_positive(),
                Ext::NegInf => true,
                Ext::PosInf => false,
            },
            (Bimonoid::LcmGcd, Value::Nat(_)) => true,
            (Bimonoid::Lattice(l), Value::Elem(i)) => *i < l.elements.len(),
            _ => false,
        }
    }

    /// Additive combination. Both operands must lie in the carrier.
    pub fn plus(&self, a: &Value, b: &Value) -> Value {
        match (self, a, b) {
            (Bimonoid::Boolean, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x || *y),
            (Bimonoid::Probability, Value::Rat(x), Value::Rat(y)) => Value::Rat(x + y),
            (Bimonoid::Viterbi, Value::Rat(x), Value::Rat(y)) => Value::Rat(x.max(y).clone()),
            (Bimonoid::Pr1, Value::Rat(x), Value::Rat(y)) => Value::Rat(x + y - x * y),
            (Bimonoid::Pr2, Value::Rat(x), Value::Rat(y)) => {
                Value::Rat((x + y).min(BigRational::one()))
            }
            (Bimonoid::Tropical, Value::Ext(x), Value::Ext(y)) => Value::Ext(x.min(y).clone()),
            (Bimonoid::Arctic, Value::Ext(x), Value::Ext(y)) => Value::Ext(x.max(y).clone()),
            (Bimonoid::TropicalBimonoid | Bimonoid::ArcticBimonoid, Value::Ext(x), Value::Ext(y)) => {
                Value::Ext(x.add(y))
            }
            (Bimonoid::LcmGcd, Value::Nat(x), Value::Nat(y)) => Value::Nat(x.lcm(y)),
            (Bimonoid::Lattice(l), Value::Elem(x), Value::Elem(y)) => Value::Elem(l.join(*x, *y)),
            _ => panic!("operands {a:?}, {b:?} are not in the carrier of {}", self.name()),
        }
    }

    /// Multiplicative combination. Both operands must lie in the carrier.
    pub fn times(&self, a: &Value, b: &Value) -> Value {
        match (self, a, b) {
            (Bimonoid::Boolean, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x && *y),
            (
                Bimonoid::Probability | Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2,
                Value::Rat(x),
                Value::Rat(y),
            ) => Value::Rat(x * y),
            (Bimonoid::Tropical | Bimonoid::Arctic, Value::Ext(x), Value::Ext(y)) => {
                Value::Ext(x.add(y))
            }
            (Bimonoid::TropicalBimonoid, Value::Ext(x), Value::Ext(y)) => Value::Ext(x.min(y).clone()),
            (Bimonoid::ArcticBimonoid, Value::Ext(x), Value::Ext(y)) => Value::Ext(x.max(y).clone()),
            (Bimonoid::LcmGcd, Value::Nat(x), Value::Nat(y)) => Value::Nat(x.gcd(y)),
            (Bimonoid::Lattice(l), Value::Elem(x), Value::Elem(y)) => Value::Elem(l.meet(*x, *y)),
            _ => panic!("operands {a:?}, {b:?} are not in the carrier of {}", self.name()),
        }
    }

    /// Sum of a finite family; the empty family sums to zero.
    pub fn sum<'a>(&self, family: impl IntoIterator<Item = &'a Value>) -> Value {
        family.into_iter().fold(self.zero(), |acc, v| self.plus(&acc, v))
    }

    /// Product of a finite family; the empty family multiplies to one.
    pub fn product<'a>(&self, family: impl IntoIterator<Item = &'a Value>) -> Value {
        family.into_iter().fold(self.one(), |acc, v| self.times(&acc, v))
    }

    /// Parses a weight literal: `p/q`, integers, decimals, `inf`, `-inf`,
    /// `true`/`false`, or a lattice element name.
    pub fn parse_value(&self, literal: &str) -> Result<Value, AlgebraError> {
        let malformed = || AlgebraError::Malformed {
            algebra: self.name().to_owned(),
            literal: literal.to_owned(),
        };
        let lit = literal.trim();
        let value = match self {
            Bimonoid::Boolean => match lit {
                "true" | "1" => Value::Bool(true),
                "false" | "0" => Value::Bool(false),
                _ => return Err(malformed()),
            },
            Bimonoid::Probability | Bimonoid::Viterbi | Bimonoid::Pr1 | Bimonoid::Pr2 => {
                Value::Rat(parse_rational(lit).ok_or_else(malformed)?)
            }
            Bimonoid::Tropical
            | Bimonoid::Arctic
            | Bimonoid::TropicalBimonoid
            | Bimonoid::ArcticBimonoid => match lit {
                "inf" | "+inf" | "∞" => Value::Ext(Ext::PosInf),
                "-inf" | "-∞" => Value::Ext(Ext::NegInf),
                _ => Value::Ext(Ext::Fin(parse_rational(lit).ok_or_else(malformed)?)),
            },
            Bimonoid::LcmGcd => Value::Nat(lit.parse::<BigUint>().map_err(|_| malformed())?),
            Bimonoid::Lattice(l) => {
                Value::Elem(l.elements.iter().position(|e| e == lit).ok_or_else(malformed)?)
            }
        };
        if self.contains(&value) {
            Ok(value)
        } else {
            Err(AlgebraError::OutOfCarrier {
                algebra: self.name().to_owned(),
                literal: literal.to_owned(),
            })
        }
    }

    pub fn format_value(&self, v: &Value) -> String {
        match v {
            Value::Bool(b) => b.to_string(),
            Value::Rat(q) => format_rational(q),
            Value::Ext(Ext::PosInf) => "inf".to_owned(),
            Value::Ext(Ext::NegInf) => "-inf".to_owned(),
            Value::Ext(Ext::Fin(q)) => format_rational(q),
            Value::Nat(n) => n.to_string(),
            Value::Elem(i) => match self {
                Bimonoid::Lattice(l) => l.elements[*i].clone(),
                _ => format!("#{i}"),
            },
        }
    }
}

impl fmt::Display for Bimonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn parse_rational(lit: &str) -> Option<BigRational> {
    if let Some((p, q)) = lit.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = lit.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let int_part: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            digits => digits.parse().ok()?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().ok()?;
        let magnitude = BigRational::new(int_part * &scale + frac_part, scale);
        return Some(if negative { -magnitude } else { magnitude });
    }
    lit.parse::<BigInt>().ok().map(BigRational::from_integer)
}

fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A carrier value tagged with its algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weight {
    algebra: Bimonoid,
    value: Value,
}

impl Weight {
    pub fn new(algebra: Bimonoid, value: Value) -> Result<Weight, AlgebraError> {
        if algebra.contains(&value) {
            Ok(Weight { algebra, value })
        } else {
            Err(AlgebraError::OutOfCarrier {
                literal: algebra.format_value(&value),
                algebra: algebra.name().to_owned(),
            })
        }
    }

    /// Wraps a value already known to be in the carrier.
    pub(crate) fn from_parts(algebra: &Bimonoid, value: Value) -> Weight {
        debug_assert!(algebra.contains(&value));
        Weight { algebra: algebra.clone(), value }
    }

    pub fn zero(algebra: &Bimonoid) -> Weight {
        Weight { value: algebra.zero(), algebra: algebra.clone() }
    }

    pub fn one(algebra: &Bimonoid) -> Weight {
        Weight { value: algebra.one(), algebra: algebra.clone() }
    }

    pub fn parse(algebra: &Bimonoid, literal: &str) -> Result<Weight, AlgebraError> {
        Ok(Weight { value: algebra.parse_value(literal)?, algebra: algebra.clone() })
    }

    pub fn algebra(&self) -> &Bimonoid {
        &self.algebra
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.algebra.is_zero(&self.value)
    }

    fn same_algebra(&self, other: &Weight) -> Result<(), AlgebraError> {
        if self.algebra == other.algebra {
            Ok(())
        } else {
            Err(AlgebraError::Mixed(self.algebra.name().into(), other.algebra.name().into()))
        }
    }

    pub fn plus(&self, other: &Weight) -> Result<Weight, AlgebraError> {
        self.same_algebra(other)?;
        Ok(Weight::from_parts(&self.algebra, self.algebra.plus(&self.value, &other.value)))
    }

    pub fn times(&self, other: &Weight) -> Result<Weight, AlgebraError> {
        self.same_algebra(other)?;
        Ok(Weight::from_parts(&self.algebra, self.algebra.times(&self.value, &other.value)))
    }

    /// Sums a finite family of weights of one algebra. An empty family needs
    /// the algebra passed explicitly, so it is taken from `algebra`.
    pub fn sum<'a>(
        algebra: &Bimonoid,
        family: impl IntoIterator<Item = &'a Weight>,
    ) -> Result<Weight, AlgebraError> {
        let mut acc = Weight::zero(algebra);
        for w in family {
            acc = acc.plus(w)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.algebra.format_value(&self.value))
    }
}

/// Shorthand for an exact rational `n/d`.
pub fn ratio(n: i64, d: i64) -> BigRational {
    rat(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(alg: &Bimonoid, lit: &str) -> Weight {
        Weight::parse(alg, lit).unwrap()
    }

    #[test]
    fn tropical_plus_is_min_and_times_is_addition() {
        let t = Bimonoid::Tropical;
        assert_eq!(w(&t, "3").plus(&w(&t, "5")).unwrap(), w(&t, "3"));
        assert_eq!(w(&t, "3").times(&w(&t, "5")).unwrap(), w(&t, "8"));
        assert_eq!(Weight::parse(&t, "inf").unwrap(), Weight::zero(&t));
    }

    #[test]
    fn pr2_plus_saturates_at_one() {
        let p = Bimonoid::Pr2;
        assert_eq!(w(&p, "7/10").plus(&w(&p, "6/10")).unwrap(), w(&p, "1"));
        assert_eq!(w(&p, "1/2").times(&w(&p, "1/3")).unwrap(), w(&p, "1/6"));
        let halves = vec![w(&p, "1/2"); 3];
        assert_eq!(Weight::sum(&p, &halves).unwrap(), w(&p, "1"));
    }

    #[test]
    fn empty_and_singleton_sums() {
        for alg in Bimonoid::builtins() {
            assert_eq!(Weight::sum(&alg, []).unwrap(), Weight::zero(&alg));
            let one = Weight::one(&alg);
            assert_eq!(Weight::sum(&alg, [&one]).unwrap(), one);
        }
    }

    #[test]
    fn mixed_algebras_are_rejected() {
        let a = Weight::one(&Bimonoid::Pr1);
        let b = Weight::one(&Bimonoid::Pr2);
        assert!(matches!(a.plus(&b), Err(AlgebraError::Mixed(..))));
        assert!(matches!(a.times(&b), Err(AlgebraError::Mixed(..))));
        assert!(Weight::sum(&Bimonoid::Pr1, [&a, &b]).is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(w(&Bimonoid::Pr2, "1/3").to_string(), "1/3");
        assert_eq!(w(&Bimonoid::Probability, "0.25").to_string(), "1/4");
        assert_eq!(w(&Bimonoid::Arctic, "-inf"), Weight::zero(&Bimonoid::Arctic));
        assert!(matches!(
            Weight::parse(&Bimonoid::Viterbi, "3/2"),
            Err(AlgebraError::OutOfCarrier { .. })
        ));
        assert!(matches!(
            Weight::parse(&Bimonoid::Viterbi, "x/2"),
            Err(AlgebraError::Malformed { .. })
        ));
        assert!(Weight::parse(&Bimonoid::Tropical, "-inf").is_err());
        assert!(Weight::parse(&Bimonoid::TropicalBimonoid, "-1").is_err());
        assert!(Weight::parse(&Bimonoid::ArcticBimonoid, "1").is_err());
        assert!(Weight::parse(&Bimonoid::Probability, "1/0").is_err());
        assert_eq!(w(&Bimonoid::LcmGcd, "12").to_string(), "12");
    }

    #[test]
    fn non_commutative_algebras_are_rejected_by_name() {
        assert!(matches!(Bimonoid::by_name("lcp"), Err(AlgebraError::NonCommutative(_))));
        assert!(matches!(Bimonoid::by_name("nope"), Err(AlgebraError::Unknown(_))));
        for alg in Bimonoid::builtins() {
            assert_eq!(Bimonoid::by_name(alg.name()).unwrap(), alg);
        }
    }

    #[test]
    fn diamond_lattice() {
        let text = "elements bot a b top\n\
                    join\n bot a b top\n a a top top\n b top b top\n top top top top\n\
                    meet\n bot bot bot bot\n bot a bot a\n bot bot b b\n bot a b top\n";
        let l = Bimonoid::Lattice(Arc::new(FiniteLattice::parse(text).unwrap()));
        assert_eq!(w(&l, "a").plus(&w(&l, "b")).unwrap(), w(&l, "top"));
        assert_eq!(w(&l, "a").times(&w(&l, "b")).unwrap(), Weight::zero(&l));
        assert_eq!(Weight::one(&l).to_string(), "top");
    }

    #[test]
    fn broken_lattice_tables_are_rejected() {
        let text = "elements x y\njoin\nx y\nx y\nmeet\nx x\nx y\n";
        assert!(FiniteLattice::parse(text).is_err());
    }

    #[test]
    fn the_pentagon_is_rejected() {
        // 0 < a < b < 1, 0 < c < 1
        let text = "elements 0 a b c 1
join
0 a b c 1
a a b 1 1
b b b 1 1
c 1 1 c 1
1 1 1 1 1
meet
0 0 0 0 0
0 a a 0 a
0 a b 0 b
0 0 0 c c
0 a b c 1
";
        let e = FiniteLattice::parse(text).unwrap_err().to_string();
        assert!(e.contains("distributive"), "{e}");
    }
}
