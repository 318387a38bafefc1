//! Quadratic irrationals `(P + √D)/Q` and their plus / minus continued fractions.
//!
//! A [`QuadSurd`] is always kept in the canonical form attached to the primitive
//! minimal polynomial `aX² + bX + c` (`a > 0`) of the number it represents:
//! `D = b² - 4ac` and `(P, Q) = (-b, 2a)` for the larger root or `(b, -2a)` for
//! the smaller one. Two surds are therefore equal iff they represent the same
//! real number, and `Q | D - P²` always holds, which keeps the continued
//! fraction recurrences integral.
//!
//! All order comparisons are done with exact integer arithmetic.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{check_discriminant, gcd3, int, is_perfect_square, Int};
use crate::error::{Error, Result};

/// A quadratic irrational `(P + √D)/Q` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    p: Int,
    q: Int,
    d: Int,
}

/// A primitive quadratic polynomial `aX² + bX + c` with `a > 0` and a
/// positive non-square discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadPoly {
    pub a: Int,
    pub b: Int,
    pub c: Int,
}

impl QuadPoly {
    pub fn new(a: Int, b: Int, c: Int) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::Domain(format!("leading coefficient must be positive, got {a}")));
        }
        if !gcd3(&a, &b, &c).is_one() {
            return Err(Error::Domain(format!("polynomial ({a}, {b}, {c}) is not primitive")));
        }
        let poly = QuadPoly { a, b, c };
        check_discriminant(&poly.discriminant())?;
        Ok(poly)
    }

    pub fn discriminant(&self) -> Int {
        &self.b * &self.b - int(4) * &self.a * &self.c
    }
}

impl fmt::Display for QuadPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}X^2 + {}X + {}", self.a, self.b, self.c)
    }
}

/// Sign of `(num + sign·√d) / den` compared with zero; `d` must be a non-square.
fn sign_of(num: &Int, root_sign: i8, den: &Int, d: &Int) -> Ordering {
    let numerator = if root_sign > 0 {
        // num + √d
        if !num.is_negative() {
            Ordering::Greater
        } else {
            d.cmp(&(num * num))
        }
    } else if !num.is_positive() {
        Ordering::Less
    } else {
        (num * num).cmp(d)
    };
    if den.is_negative() {
        numerator.reverse()
    } else {
        numerator
    }
}

impl QuadSurd {
    /// `(P + √D)/Q` for a valid discriminant `D`, brought to canonical form.
    pub fn new(p: Int, q: Int, d: Int) -> Result<Self> {
        check_discriminant(&d)?;
        Self::from_radicand(p, q, d)
    }

    /// `(P + √n)/Q` for any positive non-square radicand `n`; the canonical
    /// discriminant is that of the number's primitive minimal polynomial.
    pub fn from_radicand(p: Int, q: Int, n: Int) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if !n.is_positive() || is_perfect_square(&n) {
            return Err(Error::Domain(format!("radicand {n} must be a positive non-square")));
        }
        // (QX - P)² = n
        let a = &q * &q;
        let b = int(-2) * &p * &q;
        let c = &p * &p - &n;
        let g = gcd3(&a, &b, &c);
        let poly = QuadPoly { a: a / &g, b: b / &g, c: c / &g };
        let d = poly.discriminant();
        let surd = if q.is_positive() {
            QuadSurd { p: -&poly.b, q: int(2) * &poly.a, d }
        } else {
            QuadSurd { p: poly.b.clone(), q: int(-2) * &poly.a, d }
        };
        Ok(surd)
    }

    /// `√n` written as `(0 + √(4n))/2`.
    pub fn sqrt_of(n: Int) -> Result<Self> {
        Self::from_radicand(Int::zero(), Int::one(), n)
    }

    /// The larger root `(-b + √D)/(2a)` of a primitive polynomial.
    pub fn from_poly(f: &QuadPoly) -> Self {
        QuadSurd { p: -&f.b, q: int(2) * &f.a, d: f.discriminant() }
    }

    /// The primitive minimal polynomial, leading coefficient positive.
    pub fn to_poly(&self) -> QuadPoly {
        let a = self.q.abs() / 2;
        let b = if self.q.is_positive() { -&self.p } else { self.p.clone() };
        let c = (&self.p * &self.p - &self.d) / (int(2) * self.q.abs());
        QuadPoly { a, b, c }
    }

    /// Built from step recurrences that are known to preserve the canonical form.
    fn from_parts(p: Int, q: Int, d: Int) -> Self {
        debug_assert!((&d - &p * &p).is_multiple_of(&q));
        QuadSurd { p, q, d }
    }

    pub fn p(&self) -> &Int {
        &self.p
    }

    pub fn q(&self) -> &Int {
        &self.q
    }

    pub fn d(&self) -> &Int {
        &self.d
    }

    /// Compare the number with an integer `k`.
    pub fn cmp_int(&self, k: &Int) -> Ordering {
        sign_of(&(&self.p - k * &self.q), 1, &self.q, &self.d)
    }

    /// Compare the conjugate `(P - √D)/Q` with an integer `k`.
    pub fn conjugate_cmp_int(&self, k: &Int) -> Ordering {
        sign_of(&(&self.p - k * &self.q), -1, &self.q, &self.d)
    }

    pub fn floor(&self) -> Int {
        let root = self.d.sqrt();
        if self.q.is_positive() {
            (&self.p + root).div_floor(&self.q)
        } else {
            // (-P - √D)/|Q| and ⌊-P - √D⌋ = -P - ⌊√D⌋ - 1 for irrational √D
            let num: Int = -&self.p - root - 1;
            num.div_floor(&-&self.q)
        }
    }

    pub fn ceil(&self) -> Int {
        self.floor() + 1
    }

    /// `w > 1` and `-1 < w' < 0`.
    pub fn is_reduced(&self) -> bool {
        self.cmp_int(&Int::one()) == Ordering::Greater
            && self.conjugate_cmp_int(&int(-1)) == Ordering::Greater
            && self.conjugate_cmp_int(&Int::zero()) == Ordering::Less
    }

    /// `w > 1` and `0 < w' < 1`.
    pub fn is_m_reduced(&self) -> bool {
        self.cmp_int(&Int::one()) == Ordering::Greater
            && self.conjugate_cmp_int(&Int::zero()) == Ordering::Greater
            && self.conjugate_cmp_int(&Int::one()) == Ordering::Less
    }

    /// One step of the ordinary expansion: `(⌊w⌋, 1/(w - ⌊w⌋))`.
    pub fn step_plus(&self) -> (Int, QuadSurd) {
        let digit = self.floor();
        let p = &digit * &self.q - &self.p;
        let q = (&self.d - &p * &p) / &self.q;
        (digit, QuadSurd::from_parts(p, q, self.d.clone()))
    }

    /// One step of the minus expansion: `(⌈w⌉, 1/(⌈w⌉ - w))`.
    pub fn step_minus(&self) -> (Int, QuadSurd) {
        let digit = self.ceil();
        let p = &digit * &self.q - &self.p;
        let q = (&p * &p - &self.d) / &self.q;
        (digit, QuadSurd::from_parts(p, q, self.d.clone()))
    }

    pub fn step(&self, kind: CfKind) -> (Int, QuadSurd) {
        match kind {
            CfKind::Plus => self.step_plus(),
            CfKind::Minus => self.step_minus(),
        }
    }

    /// `-1/w'`, whose ordinary expansion is the reversed period of a reduced `w`.
    pub fn neg_inv_conjugate(&self) -> QuadSurd {
        let q = (&self.d - &self.p * &self.p) / &self.q;
        QuadSurd::from_parts(self.p.clone(), q, self.d.clone())
    }

    /// Floating-point value, for display only.
    pub fn approx(&self) -> f64 {
        let d = self.d.to_f64().unwrap_or(f64::NAN);
        (self.p.to_f64().unwrap_or(f64::NAN) + d.sqrt()) / self.q.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+√{})/{}", self.p, self.d, self.q)
    }
}

#[derive(Serialize, Deserialize)]
struct SurdRepr {
    #[serde(rename = "P")]
    p: String,
    #[serde(rename = "Q")]
    q: String,
    #[serde(rename = "D")]
    d: String,
}

impl Serialize for QuadSurd {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SurdRepr { p: self.p.to_string(), q: self.q.to_string(), d: self.d.to_string() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuadSurd {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Self, De::Error> {
        use serde::de::Error as _;
        let repr = SurdRepr::deserialize(deserializer)?;
        let parse = |s: &str| s.parse::<Int>().map_err(De::Error::custom);
        QuadSurd::new(parse(&repr.p)?, parse(&repr.q)?, parse(&repr.d)?).map_err(De::Error::custom)
    }
}

/// Which continued-fraction algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfKind {
    /// `a₁ + 1/(a₂ + …)`, digits `⌊w⌋`.
    Plus,
    /// `b₁ - 1/(b₂ - …)`, digits `⌈w⌉`.
    Minus,
}

/// Serialize a digit word as a JSON integer array.
pub fn serialize_word<S: Serializer>(word: &[Int], serializer: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::{Error as _, SerializeSeq};
    let mut seq = serializer.serialize_seq(Some(word.len()))?;
    for digit in word {
        let v = digit.to_i64().ok_or_else(|| S::Error::custom(format!("digit {digit} exceeds i64")))?;
        seq.serialize_element(&v)?;
    }
    seq.end()
}

pub fn deserialize_word<'de, De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Vec<Int>, De::Error> {
    Ok(Vec::<i64>::deserialize(deserializer)?.into_iter().map(Int::from).collect())
}

pub fn serialize_words<S: Serializer>(words: &[Vec<Int>], serializer: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Word<'a>(&'a [Int]);
    impl Serialize for Word<'_> {
        fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_word(self.0, serializer)
        }
    }
    let mut seq = serializer.serialize_seq(Some(words.len()))?;
    for w in words {
        seq.serialize_element(&Word(w))?;
    }
    seq.end()
}

pub fn deserialize_words<'de, De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Vec<Vec<Int>>, De::Error> {
    Ok(Vec::<Vec<i64>>::deserialize(deserializer)?
        .into_iter()
        .map(|w| w.into_iter().map(Int::from).collect())
        .collect())
}

/// An eventually periodic continued fraction: preperiod followed by a
/// minimal period repeated forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfExpansion {
    pub kind: CfKind,
    #[serde(serialize_with = "serialize_word", deserialize_with = "deserialize_word")]
    pub preperiod: Vec<Int>,
    #[serde(serialize_with = "serialize_word", deserialize_with = "deserialize_word")]
    pub period: Vec<Int>,
}

/// Period statistics. `digit_sum` is only defined for plus expansions,
/// `large_digits` (digits ≥ 3) only for minus expansions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodStats {
    pub length: usize,
    pub digit_sum: Option<Int>,
    pub large_digits: Option<usize>,
}

impl CfExpansion {
    pub fn is_purely_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    pub fn stats(&self) -> PeriodStats {
        stats(self)
    }
}

/// Smallest `n` such that the word is `n`-periodic and `n` divides its length.
pub fn minimal_period(word: &[Int]) -> &[Int] {
    let len = word.len();
    for n in 1..=len {
        if len % n == 0 && (n..len).all(|i| word[i] == word[i - n]) {
            return &word[..n];
        }
    }
    word
}

/// The lexicographically least rotation; the canonical name of a cycle.
pub fn canonical_rotation(word: &[Int]) -> Vec<Int> {
    (0..word.len())
        .map(|i| rotate(word, i))
        .min()
        .unwrap_or_default()
}

fn rotate(word: &[Int], shift: usize) -> Vec<Int> {
    word[shift..].iter().chain(&word[..shift]).cloned().collect()
}

/// Iterates the step map until a `(P, Q)` state repeats.
pub fn expand(w: &QuadSurd, kind: CfKind) -> Result<CfExpansion> {
    let (digits, _, start) = trace(w, kind);
    let period_digits = &digits[start..];
    let period = minimal_period(period_digits).to_vec();
    if period.len() != period_digits.len() {
        return Err(Error::InvariantViolation(format!(
            "state cycle of {w} is not minimal: {} states, digit period {}",
            period_digits.len(),
            period.len()
        )));
    }
    if kind == CfKind::Minus && period.iter().any(|b| *b < int(2)) {
        return Err(Error::InvariantViolation(format!(
            "minus period of {w} has a digit below 2: {period:?}"
        )));
    }
    Ok(CfExpansion { kind, preperiod: digits[..start].to_vec(), period })
}

/// Digits, visited states, and the index where the cycle starts.
pub(crate) fn trace(w: &QuadSurd, kind: CfKind) -> (Vec<Int>, Vec<QuadSurd>, usize) {
    let mut seen: HashMap<QuadSurd, usize> = HashMap::new();
    let mut digits = Vec::new();
    let mut states = Vec::new();
    let mut current = w.clone();
    loop {
        if let Some(&start) = seen.get(&current) {
            return (digits, states, start);
        }
        seen.insert(current.clone(), states.len());
        let (digit, next) = current.step(kind);
        digits.push(digit);
        states.push(current);
        current = next;
    }
}

pub fn stats(e: &CfExpansion) -> PeriodStats {
    let length = e.period.len();
    match e.kind {
        CfKind::Plus => PeriodStats {
            length,
            digit_sum: Some(e.period.iter().sum()),
            large_digits: None,
        },
        CfKind::Minus => PeriodStats {
            length,
            digit_sum: None,
            large_digits: Some(e.period.iter().filter(|b| **b >= int(3)).count()),
        },
    }
}

/// A 2×2 integer matrix `(p q; r s)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodMatrix {
    pub p: Int,
    pub q: Int,
    pub r: Int,
    pub s: Int,
}

impl PeriodMatrix {
    pub fn identity() -> Self {
        PeriodMatrix { p: Int::one(), q: Int::zero(), r: Int::zero(), s: Int::one() }
    }

    pub fn digit(a: &Int) -> Self {
        PeriodMatrix { p: a.clone(), q: Int::one(), r: Int::one(), s: Int::zero() }
    }

    pub fn mul(&self, o: &PeriodMatrix) -> PeriodMatrix {
        PeriodMatrix {
            p: &self.p * &o.p + &self.q * &o.r,
            q: &self.p * &o.q + &self.q * &o.s,
            r: &self.r * &o.p + &self.s * &o.r,
            s: &self.r * &o.q + &self.s * &o.s,
        }
    }

    pub fn det(&self) -> Int {
        &self.p * &self.s - &self.q * &self.r
    }

    pub fn trace(&self) -> Int {
        &self.p + &self.s
    }
}

/// Left-to-right product of `(a 1; 1 0)` over the word.
pub fn period_matrix(word: &[Int]) -> Result<PeriodMatrix> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(word
        .iter()
        .fold(PeriodMatrix::identity(), |m, a| m.mul(&PeriodMatrix::digit(a))))
}

/// 2×2 matrix over 𝔽₂, row-major bits `[p, q, r, s]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct F2Matrix([u8; 4]);

impl F2Matrix {
    pub const I: F2Matrix = F2Matrix([1, 0, 0, 1]);
    /// Image of an odd digit matrix.
    pub const O: F2Matrix = F2Matrix([1, 1, 1, 0]);
    /// Image of an even digit matrix.
    pub const E: F2Matrix = F2Matrix([0, 1, 1, 0]);
    pub const O2: F2Matrix = F2Matrix([0, 1, 1, 1]);

    pub fn mul(self, o: F2Matrix) -> F2Matrix {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        F2Matrix([(a * e + b * g) & 1, (a * f + b * h) & 1, (c * e + d * g) & 1, (c * f + d * h) & 1])
    }

    pub fn of_digit(a: &Int) -> F2Matrix {
        if a.is_odd() {
            F2Matrix::O
        } else {
            F2Matrix::E
        }
    }
}

/// Whether the 𝔽₂ image of the word's digit-matrix product lies in `{I, O, O²}`.
pub fn matrix_parity_class(word: &[Int]) -> Result<bool> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let m = word
        .iter()
        .fold(F2Matrix::I, |m, a| m.mul(F2Matrix::of_digit(a)));
    Ok([F2Matrix::I, F2Matrix::O, F2Matrix::O2].contains(&m))
}

/// Palindromic shapes an ambiguous period can take, up to rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguousShape {
    /// `[c₁, …, c_{l-1}, c_l, c_{l-1}, …, c₁]`, odd length.
    OddPalindrome,
    /// `[c₁, …, c_l, c_l, …, c₁]`, even length.
    EvenPalindrome,
    /// `[c₀, c₁, …, c_l, c_{l+1}, c_l, …, c₁]`, even length.
    OffsetPalindrome,
    None,
}

fn is_palindrome(word: &[Int]) -> bool {
    word.iter().eq(word.iter().rev())
}

/// Does the word itself (not a rotation) read as a full palindrome?
pub fn is_full_palindrome(word: &[Int]) -> bool {
    is_palindrome(word)
}

/// Does the word itself read as `c₀` followed by a palindrome?
pub fn is_offset_palindrome(word: &[Int]) -> bool {
    !word.is_empty() && is_palindrome(&word[1..])
}

/// Classify a period by searching all of its rotations.
pub fn ambiguous_shape(period: &[Int]) -> AmbiguousShape {
    let n = period.len();
    if n == 0 {
        return AmbiguousShape::None;
    }
    let rotations: Vec<Vec<Int>> = (0..n).map(|i| rotate(period, i)).collect();
    let full = rotations.iter().any(|r| is_palindrome(r));
    if n % 2 == 1 {
        return if full { AmbiguousShape::OddPalindrome } else { AmbiguousShape::None };
    }
    if full {
        AmbiguousShape::EvenPalindrome
    } else if rotations.iter().any(|r| is_offset_palindrome(r)) {
        AmbiguousShape::OffsetPalindrome
    } else {
        AmbiguousShape::None
    }
}

/// The reversed word is a rotation of the word.
pub fn is_reversal_invariant(word: &[Int]) -> bool {
    let rev: Vec<Int> = word.iter().rev().cloned().collect();
    canonical_rotation(&rev) == canonical_rotation(word)
}
