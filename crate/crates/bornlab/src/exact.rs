//! Exact rational and quadratic-extension arithmetic.
//!
//! `QuadRational` is an element a + b·√2 of the field ℚ(√2), stored as two
//! reduced big rationals. Two rationally independent directions are exactly
//! what is needed to realize an additive function with unequal slopes (the
//! discontinuous two-slope pathology) and to tag outcome probabilities as
//! exactly rational or exactly irrational. All arithmetic here is exact; the
//! only lossy operation is the explicit embedding into `f64`.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational with reduced representation and positive
/// denominator (both maintained by the underlying implementation).
pub type Rational = BigRational;

/// Small-integer rational literal.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses the scenario-file rational syntax `p/q` (or a bare integer `p`).
pub fn parse_rational(text: &str) -> Result<Rational> {
    let trimmed = text.trim();
    Rational::from_str(trimmed).map_err(|e| Error::InvalidSpec(format!("bad rational {trimmed:?}: {e}")))
}

/// Exact element a + b·√2 of ℚ(√2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadRational {
    a: Rational,
    b: Rational,
}

impl QuadRational {
    pub fn new(a: Rational, b: Rational) -> Self {
        Self { a, b }
    }

    pub fn from_rational(a: Rational) -> Self {
        Self { a, b: Rational::zero() }
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn sqrt2() -> Self {
        Self::new(Rational::zero(), rat(1, 1))
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &Rational {
        &self.b
    }

    /// True when the √2 coefficient vanishes, i.e. the value lies in ℚ.
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Exact scaling by a rational coefficient.
    pub fn scale(&self, q: &Rational) -> Self {
        Self::new(&self.a * q, &self.b * q)
    }

    /// Embedding into `f64`. Exact for the rational part up to rounding of
    /// the two component conversions; the result is within a few ulp of the
    /// true real value at desk scale.
    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }
}

impl Add for QuadRational {
    type Output = QuadRational;
    fn add(self, rhs: QuadRational) -> QuadRational {
        QuadRational::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl<'a> Add<&'a QuadRational> for &QuadRational {
    type Output = QuadRational;
    fn add(self, rhs: &'a QuadRational) -> QuadRational {
        QuadRational::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Sub for QuadRational {
    type Output = QuadRational;
    fn sub(self, rhs: QuadRational) -> QuadRational {
        QuadRational::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl<'a> Sub<&'a QuadRational> for &QuadRational {
    type Output = QuadRational;
    fn sub(self, rhs: &'a QuadRational) -> QuadRational {
        QuadRational::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Neg for QuadRational {
    type Output = QuadRational;
    fn neg(self) -> QuadRational {
        QuadRational::new(-self.a, -self.b)
    }
}

impl fmt::Display for QuadRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            return write!(f, "{}*sqrt2", self.b);
        }
        if self.b.is_negative() {
            write!(f, "{} - {}*sqrt2", self.a, -self.b.clone())
        } else {
            write!(f, "{} + {}*sqrt2", self.a, self.b)
        }
    }
}

impl FromStr for QuadRational {
    type Err = Error;

    /// Parses the scenario-file syntax `p/q + r/s*sqrt2`, along with the
    /// degenerate forms `p/q`, `r/s*sqrt2` and `sqrt2`, with optional signs.
    fn from_str(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::InvalidSpec("empty quadratic literal".into()));
        }
        let mut a = Rational::zero();
        let mut b = Rational::zero();
        // Split into signed terms; a '+'/'-' inside a term can only be leading.
        let mut terms: Vec<String> = Vec::new();
        let mut current = String::new();
        for (i, c) in compact.chars().enumerate() {
            if (c == '+' || c == '-') && i > 0 {
                terms.push(std::mem::take(&mut current));
                if c == '-' {
                    current.push('-');
                }
            } else {
                current.push(c);
            }
        }
        terms.push(current);
        for term in terms.iter().filter(|t| !t.is_empty()) {
            if let Some(head) = term.strip_suffix("sqrt2") {
                let coeff = head.strip_suffix('*').unwrap_or(head);
                let q = match coeff {
                    "" | "+" => rat(1, 1),
                    "-" => rat(-1, 1),
                    other => parse_rational(other)?,
                };
                b += q;
            } else {
                a += parse_rational(term)?;
            }
        }
        Ok(QuadRational::new(a, b))
    }
}

/// The exact kind of an outcome probability: either a rational number or an
/// element of ℚ(√2) with a nonzero √2 coefficient (hence irrational).
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityTag {
    Rational(Rational),
    Irrational(QuadRational),
}

impl ProbabilityTag {
    pub fn rational(value: Rational) -> Self {
        ProbabilityTag::Rational(value)
    }

    pub fn irrational(value: QuadRational) -> Result<Self> {
        if value.is_rational() {
            return Err(Error::InvalidTags(format!(
                "irrational tag must have nonzero sqrt2 coefficient, got {value}"
            )));
        }
        Ok(ProbabilityTag::Irrational(value))
    }

    /// Builds a tag from an exact value, classifying by the √2 coefficient.
    pub fn from_exact(value: QuadRational) -> Self {
        if value.is_rational() {
            ProbabilityTag::Rational(value.rational_part().clone())
        } else {
            ProbabilityTag::Irrational(value)
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ProbabilityTag::Rational(_))
    }

    /// The exact tagged value as an element of ℚ(√2).
    pub fn exact(&self) -> QuadRational {
        match self {
            ProbabilityTag::Rational(q) => QuadRational::from_rational(q.clone()),
            ProbabilityTag::Irrational(x) => x.clone(),
        }
    }

    /// The real embedding of the tagged probability.
    pub fn embedding(&self) -> f64 {
        self.exact().to_f64()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let q = QuadRational::from_str(text)?;
        Ok(Self::from_exact(q))
    }
}

impl fmt::Display for ProbabilityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityTag::Rational(q) => write!(f, "{q}"),
            ProbabilityTag::Irrational(x) => write!(f, "{x}"),
        }
    }
}

/// A tag set is consistent when the real embeddings sum to 1 within 1e-12.
pub fn tags_consistent(tags: &[ProbabilityTag]) -> bool {
    let total: f64 = tags.iter().map(|t| t.embedding()).sum();
    (total - 1.0).abs() <= 1e-12
}

/// Exact sum of a tag set.
pub fn tags_exact_sum(tags: &[ProbabilityTag]) -> QuadRational {
    tags.iter().fold(QuadRational::zero(), |acc, t| acc + t.exact())
}
