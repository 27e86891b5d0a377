//! Exact arithmetic: arbitrary-precision rationals and real numbers of the
//! form `r + c₁√q₁ + c₂√q₂` with rational `r, cᵢ, qᵢ`.
//!
//! Regularity parameters that come out of perturbation re-bounding contain
//! square roots; comparing them by floating point would reintroduce exactly
//! the tie ambiguity the certification layer is built to avoid, so the sign of
//! a surd is decided by repeated squaring instead.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

pub type Rational = BigRational;

/// `p/q` as a rational. Panics when `q == 0`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_usize(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Extremely small or large magnitudes: fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// `⌈r⌉` as an `i64`; panics if it does not fit.
pub fn ceil_i64(r: &Rational) -> i64 {
    r.ceil()
        .to_integer()
        .to_i64()
        .expect("ceiling out of i64 range")
}

/// `⌊r⌋` as an `i64`; panics if it does not fit.
pub fn floor_i64(r: &Rational) -> i64 {
    r.floor()
        .to_integer()
        .to_i64()
        .expect("floor out of i64 range")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"3"`, `"-1/4"`, `"0.25"`, `"1e-4"`, `"2.5E3"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err("bad numerator"))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err("bad denominator"))?;
        if q.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err("unexpected character"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value =
        Rational::from_integer(BigInt::from_str(&digits).map_err(|_| err("no digits"))?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Serde adapter writing a rational as the string `"p/q"` (or `"p"`).
pub mod rational_str {
    use super::*;
    use serde::{Deserialize, Deserializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` as a list of `"p/q"` strings.
pub mod rational_vec_str {
    use super::*;
    use serde::{Deserialize, Deserializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Exact square root of a non-negative rational when it is a perfect square.
pub fn rational_sqrt_exact(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer();
    let d = q.denom();
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Rational::new(rn, rd))
    } else {
        None
    }
}

/// A real number `rational + Σ coef·√radicand` with at most two distinct
/// radicands. Every constructor keeps the representation normalised: perfect
/// squares are folded into the rational part, equal radicands are merged and
/// zero terms dropped, so structural equality is value equality for the
/// shapes produced in this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surd {
    rational: Rational,
    roots: Vec<(Rational, Rational)>,
}

impl Surd {
    pub fn zero() -> Self {
        Surd::from(Rational::zero())
    }

    pub fn one() -> Self {
        Surd::from(Rational::one())
    }

    /// `√q`; panics on a negative radicand.
    pub fn sqrt(q: Rational) -> Self {
        Surd::term(Rational::one(), q)
    }

    /// `c·√q`; panics on a negative radicand.
    pub fn term(c: Rational, q: Rational) -> Self {
        assert!(!q.is_negative(), "square root of negative rational {q}");
        let mut s = Surd::zero();
        s.push_root(c, q);
        s
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn roots(&self) -> &[(Rational, Rational)] {
        &self.roots
    }

    /// The value as a rational, if it has no irrational part.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.roots.is_empty().then_some(&self.rational)
    }

    fn try_push_root(&mut self, c: Rational, q: Rational) -> bool {
        if c.is_zero() || q.is_zero() {
            return true;
        }
        if let Some(r) = rational_sqrt_exact(&q) {
            self.rational += c * r;
            return true;
        }
        if let Some(pos) = self.roots.iter().position(|(_, rq)| *rq == q) {
            self.roots[pos].0 += c;
            if self.roots[pos].0.is_zero() {
                self.roots.remove(pos);
            }
            return true;
        }
        if self.roots.len() >= 2 {
            return false;
        }
        self.roots.push((c, q));
        self.roots.sort_by(|a, b| a.1.cmp(&b.1));
        true
    }

    fn push_root(&mut self, c: Rational, q: Rational) {
        assert!(
            self.try_push_root(c, q),
            "surd arithmetic supports at most two distinct radicands"
        );
    }

    /// Sum, or `None` if the result would need more than two radicands.
    pub fn checked_add(&self, other: &Surd) -> Option<Surd> {
        let mut s = self.clone();
        s.rational += &other.rational;
        for (c, q) in &other.roots {
            if !s.try_push_root(c.clone(), q.clone()) {
                return None;
            }
        }
        Some(s)
    }

    /// Sum; panics if the result would need more than two radicands.
    pub fn add(&self, other: &Surd) -> Surd {
        self.checked_add(other)
            .expect("surd arithmetic supports at most two distinct radicands")
    }

    pub fn sub(&self, other: &Surd) -> Surd {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Surd {
        Surd {
            rational: -self.rational.clone(),
            roots: self
                .roots
                .iter()
                .map(|(c, q)| (-c.clone(), q.clone()))
                .collect(),
        }
    }

    pub fn add_rational(&self, r: &Rational) -> Surd {
        let mut s = self.clone();
        s.rational += r;
        s
    }

    pub fn scale(&self, m: &Rational) -> Surd {
        if m.is_zero() {
            return Surd::zero();
        }
        Surd {
            rational: &self.rational * m,
            roots: self.roots.iter().map(|(c, q)| (c * m, q.clone())).collect(),
        }
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> Ordering {
        let sgn = |r: &Rational| r.cmp(&Rational::zero());
        match self.roots.as_slice() {
            [] => sgn(&self.rational),
            [(b, p)] => sign_one(&self.rational, b, p),
            [(b, p), (c, q)] => {
                let a = &self.rational;
                // Sign of the irrational part b√p + c√q.
                let s = sign_sum_of_two_roots(b, p, c, q);
                let sa = sgn(a);
                if sa == Ordering::Equal {
                    return s;
                }
                if s == Ordering::Equal || s == sa {
                    return sa;
                }
                // Opposite signs: compare a² with (b√p + c√q)² = b²p + c²q + 2bc√(pq).
                let lhs = a * a - b * b * p - c * c * q;
                let t = sign_one(&lhs, &(-(b * c) * rat_int(2)), &(p * q));
                match t {
                    Ordering::Greater => sa,
                    Ordering::Less => s,
                    Ordering::Equal => Ordering::Equal,
                }
            }
            _ => unreachable!("normalised surds carry at most two radicands"),
        }
    }

    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        self.add_rational(&-r.clone()).signum()
    }

    pub fn to_f64(&self) -> f64 {
        self.rational.to_f64().unwrap_or(0.0)
            + self
                .roots
                .iter()
                .map(|(c, q)| to_f64(c) * to_f64(q).sqrt())
                .sum::<f64>()
    }

    /// `⌊self⌋`, exactly.
    pub fn floor(&self) -> i64 {
        if let Some(r) = self.as_rational() {
            return floor_i64(r);
        }
        let mut z = self.to_f64().floor() as i64;
        while self.cmp_rational(&rat_int(z)) == Ordering::Less {
            z -= 1;
        }
        while self.cmp_rational(&rat_int(z + 1)) != Ordering::Less {
            z += 1;
        }
        z
    }

    /// `⌈self⌉`, exactly.
    pub fn ceil(&self) -> i64 {
        -self.neg().floor()
    }

    /// `min(self, r)`.
    pub fn min_rational(&self, r: &Rational) -> Surd {
        if self.cmp_rational(r) == Ordering::Greater {
            Surd::from(r.clone())
        } else {
            self.clone()
        }
    }

    /// `max(self, r)`.
    pub fn max_rational(&self, r: &Rational) -> Surd {
        if self.cmp_rational(r) == Ordering::Less {
            Surd::from(r.clone())
        } else {
            self.clone()
        }
    }
}

/// Sign of `a + b√p` for `p ≥ 0`.
fn sign_one(a: &Rational, b: &Rational, p: &Rational) -> Ordering {
    let zero = Rational::zero();
    let sa = a.cmp(&zero);
    let sb = if p.is_zero() {
        Ordering::Equal
    } else {
        b.cmp(&zero)
    };
    if sb == Ordering::Equal {
        return sa;
    }
    if sa == Ordering::Equal || sa == sb {
        return sb;
    }
    match (a * a).cmp(&(b * b * p)) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => Ordering::Equal,
    }
}

/// Sign of `b√p + c√q` for `p, q ≥ 0`.
fn sign_sum_of_two_roots(b: &Rational, p: &Rational, c: &Rational, q: &Rational) -> Ordering {
    let zero = Rational::zero();
    let sb = if p.is_zero() {
        Ordering::Equal
    } else {
        b.cmp(&zero)
    };
    let sc = if q.is_zero() {
        Ordering::Equal
    } else {
        c.cmp(&zero)
    };
    if sb == Ordering::Equal {
        return sc;
    }
    if sc == Ordering::Equal || sb == sc {
        return sb;
    }
    match (b * b * p).cmp(&(c * c * q)) {
        Ordering::Greater => sb,
        Ordering::Less => sc,
        Ordering::Equal => Ordering::Equal,
    }
}

impl From<Rational> for Surd {
    fn from(r: Rational) -> Self {
        Surd {
            rational: r,
            roots: Vec::new(),
        }
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rational)?;
        for (c, q) in &self.roots {
            if c.is_negative() {
                write!(f, " - {}*sqrt({})", -c.clone(), q)?;
            } else {
                write!(f, " + {}*sqrt({})", c, q)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Surd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
