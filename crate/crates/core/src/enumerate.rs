//! Reduced and m-reduced numbers of a discriminant, their cycles, calibers
//! and class numbers.
//!
//! Every element is written `w = (B + √D)/(2a)` with minimal polynomial
//! `aX² - BX + c`. In those coordinates
//!
//! * `w` is reduced iff `c < 0` and `|a + c| < B`; so `B < √D` and `a`
//!   runs over divisors of `(D - B²)/4`.
//! * `w` is m-reduced iff `a, c > 0` and `a + c < B`. Writing
//!   `s = a + c`, `k = B - s ≥ 1`, `d = a - c` gives `D = 2sk + k² + d²`,
//!   so `k² + d² < D` and `s` is determined by `(k, d)`.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{check_discriminant, gcd3, int, Int};
use crate::error::{Error, Result};
use crate::surd::{canonical_rotation, deserialize_words, serialize_words, CfKind, QuadSurd};

/// Serialize a big integer as a JSON number (must fit in `i64`).
pub(crate) mod int_number {
    use super::Int;
    use num_traits::ToPrimitive;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Int, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        s.serialize_i64(v.to_i64().ok_or_else(|| S::Error::custom(format!("{v} exceeds i64")))?)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Int, D::Error> {
        Ok(Int::from(i64::deserialize(d)?))
    }
}

/// One cycle of the plus or minus shift map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cycle {
    /// Members in shift order, starting at the one whose digit word is `word`.
    pub members: Vec<QuadSurd>,
    /// The lexicographically least rotation of the period.
    #[serde(serialize_with = "crate::surd::serialize_word")]
    pub word: Vec<Int>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn digit_sum(&self) -> Int {
        self.word.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminantProfile {
    #[serde(rename = "D", with = "int_number")]
    pub d: Int,
    pub kappa: u64,
    pub kappa_plus: u64,
    pub h: u64,
    pub h_plus: u64,
    #[serde(serialize_with = "serialize_words", deserialize_with = "deserialize_words")]
    pub cycles_plus: Vec<Vec<Int>>,
    #[serde(serialize_with = "serialize_words", deserialize_with = "deserialize_words")]
    pub cycles_minus: Vec<Vec<Int>>,
}

fn sorted(mut v: Vec<QuadSurd>) -> Vec<QuadSurd> {
    v.sort_by(|x, y| (x.q(), x.p()).cmp(&(y.q(), y.p())));
    v
}

/// `Q(D)`: all reduced quadratic irrationals of discriminant `D`, sorted by `(Q, P)`.
pub fn enumerate_reduced(d: &Int) -> Result<Vec<QuadSurd>> {
    check_discriminant(d)?;
    let root = d.sqrt();
    let mut out = Vec::new();
    let mut b = if d.is_odd() { Int::one() } else { int(2) };
    while b <= root {
        let n: Int = (d - &b * &b) / 4;
        let mut x = Int::one();
        while &x * &x <= n {
            if n.is_multiple_of(&x) {
                let y = &n / &x;
                for (a, c_abs) in [(&x, &y), (&y, &x)] {
                    if (a - c_abs).abs() < b && gcd3(a, &b, c_abs).is_one() {
                        out.push(QuadSurd::new(b.clone(), int(2) * a, d.clone())?);
                    }
                    if x == y {
                        break;
                    }
                }
            }
            x += 1;
        }
        b += 2;
    }
    Ok(sorted(out))
}

/// `Q⁺(D)`: all m-reduced quadratic irrationals of discriminant `D`, sorted by `(Q, P)`.
pub fn enumerate_m_reduced(d: &Int) -> Result<Vec<QuadSurd>> {
    check_discriminant(d)?;
    let mut out = Vec::new();
    let mut k = Int::one();
    while &k * &k < *d {
        let rest = d - &k * &k;
        let two_k = int(2) * &k;
        let below: Int = &rest - 1;
        let dmax = below.sqrt();
        let mut diff = -dmax.clone();
        while diff <= dmax {
            let num = &rest - &diff * &diff;
            if num.is_multiple_of(&two_k) {
                let s = &num / &two_k;
                if s > diff.abs() && (&s - &diff).is_even() {
                    let a: Int = (&s + &diff) / 2;
                    let c: Int = (&s - &diff) / 2;
                    let b = &s + &k;
                    if gcd3(&a, &b, &c).is_one() {
                        out.push(QuadSurd::new(b, int(2) * a, d.clone())?);
                    }
                }
            }
            diff += 1;
        }
        k += 1;
    }
    Ok(sorted(out))
}

pub fn enumerate(d: &Int, kind: CfKind) -> Result<Vec<QuadSurd>> {
    match kind {
        CfKind::Plus => enumerate_reduced(d),
        CfKind::Minus => enumerate_m_reduced(d),
    }
}

/// Partition a set closed under the shift map into its cycles, sorted by word.
pub fn partition(set: &[QuadSurd], kind: CfKind) -> Result<Vec<Cycle>> {
    let index: HashMap<&QuadSurd, usize> = set.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut visited = vec![false; set.len()];
    let mut cycles = Vec::new();
    for start in 0..set.len() {
        if visited[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut digits = Vec::new();
        let mut current = set[start].clone();
        loop {
            let i = *index.get(&current).ok_or_else(|| {
                Error::InvariantViolation(format!("shift map leaves the enumerated set at {current}"))
            })?;
            if visited[i] {
                if i != start {
                    return Err(Error::InvariantViolation(format!(
                        "shift map is not injective: {current} reached twice"
                    )));
                }
                break;
            }
            visited[i] = true;
            let (digit, next) = current.step(kind);
            digits.push(digit);
            members.push(current);
            current = next;
        }
        let word = canonical_rotation(&digits);
        let shift = (0..digits.len())
            .find(|&i| digits[i..].iter().chain(&digits[..i]).eq(word.iter()))
            .unwrap_or(0);
        members.rotate_left(shift);
        cycles.push(Cycle { members, word });
    }
    cycles.sort_by(|x, y| x.word.cmp(&y.word));
    Ok(cycles)
}

/// `R(D)` (plus) or `R⁺(D)` (minus) as explicit cycles.
pub fn classes(d: &Int, kind: CfKind) -> Result<Vec<Cycle>> {
    partition(&enumerate(d, kind)?, kind)
}

fn count(n: usize) -> u64 {
    n as u64
}

/// Calibers and class numbers, with `κ` and `κ⁺` computed both as direct
/// cardinalities and as sums over the plus cycles.
pub fn profile(d: &Int) -> Result<DiscriminantProfile> {
    let reduced = enumerate_reduced(d)?;
    let m_reduced = enumerate_m_reduced(d)?;
    let plus = partition(&reduced, CfKind::Plus)?;
    let minus = partition(&m_reduced, CfKind::Minus)?;

    let kappa_by_cycles: usize = plus.iter().map(|c| c.word.len()).sum();
    if kappa_by_cycles != reduced.len() {
        return Err(Error::InvariantViolation(format!(
            "D={d}: |Q(D)| = {} but cycle lengths sum to {kappa_by_cycles}",
            reduced.len()
        )));
    }
    let kappa_plus_by_cycles: Int = plus.iter().map(Cycle::digit_sum).sum();
    if kappa_plus_by_cycles != Int::from(m_reduced.len()) {
        return Err(Error::InvariantViolation(format!(
            "D={d}: |Q+(D)| = {} but plus-cycle digit sums total {kappa_plus_by_cycles}",
            m_reduced.len()
        )));
    }

    Ok(DiscriminantProfile {
        d: d.clone(),
        kappa: count(reduced.len()),
        kappa_plus: count(m_reduced.len()),
        h: count(plus.len()),
        h_plus: count(minus.len()),
        cycles_plus: plus.into_iter().map(|c| c.word).collect(),
        cycles_minus: minus.into_iter().map(|c| c.word).collect(),
    })
}

/// All valid discriminants in `[lo, hi]`.
pub fn discriminants_in(lo: u64, hi: u64) -> Vec<Int> {
    (lo..=hi)
        .map(Int::from)
        .filter(crate::arith::is_valid_discriminant)
        .collect()
}

/// Residue of a count modulo 4.
pub fn mod4(n: &Int) -> u8 {
    n.mod_floor(&int(4)).to_u8().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(p: i64, q: i64, d: i64) -> QuadSurd {
        QuadSurd::new(int(p), int(q), int(d)).unwrap()
    }

    fn w(digits: &[i64]) -> Vec<Int> {
        digits.iter().map(|&x| int(x)).collect()
    }

    /// The (a, B) grid scan: B ≡ D (mod 2), 1 ≤ B ≤ ⌊√D⌋, √D - B < 2a < √D + B.
    fn brute_reduced(d: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        let root = (d as f64).sqrt();
        for b in 1..=root as i64 {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            for a in 1..=(root as i64 + 1) {
                let two_a = 2 * a;
                // exact: (√D - B < 2a) ⇔ D < (2a + B)², (2a < √D + B) ⇔ (2a - B)² < D or 2a ≤ B
                let lower = d < (two_a + b).pow(2);
                let upper = two_a <= b || (two_a - b).pow(2) < d;
                if !(lower && upper) || (b * b - d) % (4 * a) != 0 {
                    continue;
                }
                let c = (b * b - d) / (4 * a);
                if gcd(gcd(a, b), c.abs()) == 1 {
                    out.push((b, two_a));
                }
            }
        }
        out.sort_by_key(|&(p, q)| (q, p));
        out
    }

    /// m-reduced scan over (a, B) with B > √D and (B - 2a)² < D, a + c ≤ (D-1)/2.
    fn brute_m_reduced(d: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for a in 1..=(d - 1) / 2 {
            for b in 1..=(2 * a + d) {
                if b * b <= d || (b - 2 * a).pow(2) >= d || (b * b - d) % (4 * a) != 0 {
                    continue;
                }
                let c = (b * b - d) / (4 * a);
                if a + c <= (d - 1) / 2 && gcd(gcd(a, b), c) == 1 {
                    out.push((b, 2 * a));
                }
            }
        }
        out.sort_by_key(|&(p, q)| (q, p));
        out
    }

    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }

    fn coords(v: &[QuadSurd]) -> Vec<(i64, i64)> {
        v.iter().map(|x| (x.p().to_i64().unwrap(), x.q().to_i64().unwrap())).collect()
    }

    #[test]
    fn reduced_examples() {
        assert_eq!(enumerate_reduced(&int(5)).unwrap(), vec![s(1, 2, 5)]);
        assert_eq!(enumerate_reduced(&int(45)).unwrap(), vec![s(5, 2, 45), s(5, 10, 45)]);
        assert_eq!(
            enumerate_reduced(&int(40)).unwrap(),
            vec![s(6, 2, 40), s(4, 4, 40), s(2, 6, 40), s(4, 6, 40)]
        );
        assert!(matches!(enumerate_reduced(&int(7)), Err(Error::InvalidDiscriminant(_))));
    }

    #[test]
    fn m_reduced_examples() {
        assert_eq!(enumerate_m_reduced(&int(5)).unwrap(), vec![s(3, 2, 5)]);
        assert_eq!(enumerate_m_reduced(&int(40)).unwrap().len(), 10);
        assert_eq!(enumerate_m_reduced(&int(21)).unwrap().len(), 4);
        assert!(enumerate_m_reduced(&int(16)).is_err());
    }

    #[test]
    fn enumerators_match_grid_scans() {
        for d in discriminants_in(5, 700) {
            let di = d.to_i64().unwrap();
            let reduced = enumerate_reduced(&d).unwrap();
            assert_eq!(coords(&reduced), brute_reduced(di), "Q({di})");
            assert!(reduced.iter().all(QuadSurd::is_reduced));
            let m = enumerate_m_reduced(&d).unwrap();
            assert_eq!(coords(&m), brute_m_reduced(di), "Q+({di})");
            assert!(m.iter().all(QuadSurd::is_m_reduced));
        }
    }

    #[test]
    fn class_examples() {
        let plus40 = classes(&int(40), CfKind::Plus).unwrap();
        let words: Vec<_> = plus40.iter().map(|c| c.word.clone()).collect();
        assert_eq!(words, vec![w(&[1, 1, 2]), w(&[6])]);
        let plus45 = classes(&int(45), CfKind::Plus).unwrap();
        assert_eq!(plus45.len(), 1);
        assert_eq!(plus45[0].word, w(&[1, 5]));
        let minus5 = classes(&int(5), CfKind::Minus).unwrap();
        assert_eq!(minus5.len(), 1);
        assert_eq!(minus5[0].word, w(&[3]));
    }

    #[test]
    fn cycle_members_start_at_canonical_rotation() {
        for c in classes(&int(40), CfKind::Plus).unwrap() {
            let e = crate::surd::expand(&c.members[0], CfKind::Plus).unwrap();
            assert_eq!(e.period, c.word);
        }
    }

    #[test]
    fn profile_examples() {
        let p40 = profile(&int(40)).unwrap();
        assert_eq!((p40.kappa, p40.kappa_plus, p40.h, p40.h_plus), (4, 10, 2, 2));
        assert_eq!(profile(&int(45)).unwrap().kappa, 2);
        assert_eq!(profile(&int(48)).unwrap().kappa, 2);
        let p21 = profile(&int(21)).unwrap();
        assert_eq!((p21.kappa, p21.kappa_plus), (2, 4));
        assert_eq!(p21.cycles_plus, vec![w(&[1, 3])]);
        let p13 = profile(&int(13)).unwrap();
        assert_eq!(p13.kappa, 1);
        let p52 = profile(&int(52)).unwrap();
        assert_eq!(p52.kappa, 5);
        assert_eq!(p52.cycles_plus, vec![w(&[1, 1, 1, 1, 6])]);
    }

    #[test]
    fn profile_json_shape() {
        let p = profile(&int(40)).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        println!("{json}");
        assert!(json.starts_with(r#"{"D":40,"kappa":4,"kappa_plus":10,"h":2,"h_plus":2,"cycles_plus":[[1,1,2],[6]],"cycles_minus":"#));
        let back: DiscriminantProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn shift_map_is_a_bijection() {
        for d in discriminants_in(5, 400) {
            for kind in [CfKind::Plus, CfKind::Minus] {
                let set = enumerate(&d, kind).unwrap();
                let mut image: Vec<QuadSurd> = set.iter().map(|x| x.step(kind).1).collect();
                image = sorted(image);
                assert_eq!(image, set, "D={d} {kind:?}");
            }
        }
    }

    #[test]
    fn parity_of_plus_cycles_is_uniform() {
        for d in discriminants_in(5, 1500) {
            let cycles = classes(&d, CfKind::Plus).unwrap();
            let parity = cycles[0].len() % 2;
            assert!(cycles.iter().all(|c| c.len() % 2 == parity), "D={d}");
        }
    }
}
