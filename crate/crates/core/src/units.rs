//! Fundamental units, conductors, the unit index and the class number
//! formula for non-maximal orders.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{check_discriminant, factorize, gcd3, int, is_valid_discriminant, kronecker, Int};
use crate::enumerate;
use crate::error::{Error, Result};
use crate::surd::{expand, period_matrix, CfKind, QuadSurd};

/// `ε_D = (t + u√D)/2` with `t² - D·u² = 4·norm`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FundamentalUnit {
    #[serde(with = "decimal")]
    pub t: Int,
    #[serde(with = "decimal")]
    pub u: Int,
    pub norm: i8,
}

pub(crate) mod decimal {
    use super::Int;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Int, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Int, D::Error> {
        use serde::de::Error;
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

/// `D = f²·D₀` with `D₀` fundamental.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConductorSplit {
    pub d0: Int,
    pub f: Int,
}

/// The reduced number `(b + √D)/2` of the principal form, `b` the largest
/// integer below `√D` with `b ≡ D (mod 2)`.
pub fn principal_surd(d: &Int) -> Result<QuadSurd> {
    check_discriminant(d)?;
    let mut b = d.sqrt();
    if (&b - d).is_odd() {
        b -= 1;
    }
    QuadSurd::new(b, int(2), d.clone())
}

/// Fundamental unit read off the period matrix `(p q; r s)` of the principal
/// cycle: `t = p + s`, `u = gcd(r, s - p, q)`, norm `= det = (-1)^l`.
pub fn fundamental_unit(d: &Int) -> Result<FundamentalUnit> {
    let omega = principal_surd(d)?;
    let e = expand(&omega, CfKind::Plus)?;
    if !e.is_purely_periodic() {
        return Err(Error::InvariantViolation(format!("principal surd {omega} is not reduced")));
    }
    let m = period_matrix(&e.period)?;
    let u = gcd3(&m.r, &(&m.s - &m.p), &m.q);
    let t = m.trace();
    let norm: i8 = if e.period.len() % 2 == 0 { 1 } else { -1 };
    if m.det() != int(norm as i64) {
        return Err(Error::InvariantViolation(format!("D={d}: det of period matrix is not (-1)^l")));
    }
    if &t * &t - d * &u * &u != int(4 * norm as i64) {
        return Err(Error::InvariantViolation(format!(
            "D={d}: t={t}, u={u} does not solve t^2 - D u^2 = {}",
            4 * norm
        )));
    }
    Ok(FundamentalUnit { t, u, norm })
}

fn squarefree(n: &Int) -> bool {
    factorize(n).iter().all(|(_, e)| *e == 1)
}

pub fn is_fundamental(d: &Int) -> bool {
    if !is_valid_discriminant(d) {
        return false;
    }
    match d.mod_floor(&int(4)).to_u8().unwrap() {
        1 => squarefree(d),
        0 => {
            let m: Int = d / 4;
            matches!(m.mod_floor(&int(4)).to_u8().unwrap(), 2 | 3) && squarefree(&m)
        }
        _ => false,
    }
}

pub fn conductor_split(d: &Int) -> Result<ConductorSplit> {
    check_discriminant(d)?;
    let mut square_root = Int::one();
    let mut core = Int::one();
    for (p, e) in factorize(d) {
        square_root *= p.pow(e / 2);
        if e % 2 == 1 {
            core *= p;
        }
    }
    let split = if core.mod_floor(&int(4)).is_one() {
        ConductorSplit { d0: core, f: square_root }
    } else {
        // D ≡ 0 (mod 4) forces an even square part here
        ConductorSplit { d0: int(4) * core, f: square_root / 2 }
    };
    debug_assert!(is_fundamental(&split.d0));
    debug_assert_eq!(&split.f * &split.f * &split.d0, *d);
    Ok(split)
}

/// Iteration cap for the unit-index search: `⌈6·f·log₂ D₀⌉`.
pub fn mu_search_cap(d0: &Int, f: &Int) -> u64 {
    let log2 = d0.bits() as f64; // ≥ log₂ D₀
    (6.0 * f.to_f64().unwrap_or(f64::MAX) * log2).ceil() as u64
}

/// Smallest `μ ≥ 1` with `f | u_μ`, where `ε_{D₀}^μ = (t_μ + u_μ√D₀)/2`.
pub fn unit_index_mu(d0: &Int, f: &Int) -> Result<u64> {
    if !is_fundamental(d0) {
        return Err(Error::Precondition(format!("{d0} is not a fundamental discriminant")));
    }
    if !f.is_positive() {
        return Err(Error::Precondition(format!("conductor must be positive, got {f}")));
    }
    let base = fundamental_unit(d0)?;
    let cap = mu_search_cap(d0, f);
    let (mut t, mut u) = (base.t.clone(), base.u.clone());
    let mut k = 1u64;
    while !u.is_multiple_of(f) {
        if k >= cap {
            return Err(Error::InvariantViolation(format!(
                "unit index search for D0={d0}, f={f} exceeded {cap} iterations"
            )));
        }
        let next_t: Int = (&base.t * &t + d0 * &base.u * &u) / 2;
        let next_u: Int = (&base.t * &u + &base.u * &t) / 2;
        t = next_t;
        u = next_u;
        k += 1;
    }

    if !f.is_one() {
        let direct = fundamental_unit(&(f * f * d0))?;
        if direct.t != t || direct.u != &u / f {
            return Err(Error::InvariantViolation(format!(
                "D0={d0}, f={f}: ε^{k} = ({t}, {u}) disagrees with the order's unit ({}, {})",
                direct.t, direct.u
            )));
        }
    }
    Ok(k)
}

/// `h(D) = h(D₀)·f/μ·∏_{p|f}(1 - χ_{D₀}(p)/p)`, evaluated exactly.
pub fn class_number_formula(d: &Int, h_d0: u64) -> Result<u64> {
    let ConductorSplit { d0, f } = conductor_split(d)?;
    let mu = unit_index_mu(&d0, &f)?;
    let mut value = BigRational::from_integer(Int::from(h_d0) * &f) / BigRational::from_integer(Int::from(mu));
    for (p, _) in factorize(&f) {
        let chi = kronecker(&d0, &p);
        value *= BigRational::one() - BigRational::new(int(chi as i64), p);
    }
    if !value.is_integer() || !value.is_positive() {
        return Err(Error::InvariantViolation(format!(
            "class number formula for D={d} gives {value}, not a positive integer"
        )));
    }
    value
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::InvariantViolation(format!("class number {value} out of range")))
}

/// The formula with `h(D₀)` counted from the cycles of `D₀`.
pub fn class_number_via_formula(d: &Int) -> Result<u64> {
    let ConductorSplit { d0, .. } = conductor_split(d)?;
    let h_d0 = enumerate::classes(&d0, CfKind::Plus)?.len() as u64;
    class_number_formula(d, h_d0)
}
