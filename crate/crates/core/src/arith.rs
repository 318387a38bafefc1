//! Exact integer primitives: square roots, primality, quadratic symbols,
//! sums of two squares and small factorizations.
//!
//! Everything is arbitrary precision. Fundamental-unit coefficients grow
//! exponentially in the square root of the discriminant, so no fixed-width
//! shortcut is taken anywhere.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;

/// Largest bound for which Miller-Rabin with the first twelve prime bases
/// is known to be deterministic (Sorenson-Webster, 2015).
pub const PRIMALITY_BOUND: &str = "3317044064679887385961981";

const MR_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn int(v: i64) -> Int {
    Int::from(v)
}

/// Floor square root. Fails on negative input.
pub fn isqrt(n: &Int) -> Result<Int> {
    if n.is_negative() {
        return Err(Error::Domain(format!("isqrt of negative number {n}")));
    }
    Ok(n.sqrt())
}

pub fn is_perfect_square(n: &Int) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

/// `D > 0`, `D ≡ 0, 1 (mod 4)` and not a perfect square.
pub fn is_valid_discriminant(d: &Int) -> bool {
    d.is_positive() && {
        let r = d.mod_floor(&int(4));
        (r.is_zero() || r.is_one()) && !is_perfect_square(d)
    }
}

pub(crate) fn check_discriminant(d: &Int) -> Result<()> {
    if is_valid_discriminant(d) {
        Ok(())
    } else {
        Err(Error::InvalidDiscriminant(d.clone()))
    }
}

fn low_bits(n: &Int, modulus: i64) -> i64 {
    n.mod_floor(&int(modulus)).to_i64().unwrap()
}

fn kronecker_two(a: &Int) -> i32 {
    // (a|2): 0 for even a, +1 for a ≡ ±1 (mod 8), -1 for a ≡ ±3 (mod 8)
    match low_bits(a, 8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

/// The Kronecker symbol `(a | n)` for arbitrary integers.
pub fn kronecker(a: &Int, n: &Int) -> i32 {
    if n.is_zero() {
        return if a.abs().is_one() { 1 } else { 0 };
    }
    if a.is_even() && n.is_even() {
        return 0;
    }

    let mut a = a.clone();
    let mut b = n.clone();
    let mut k = 1i32;

    let v = b.trailing_zeros().unwrap_or(0);
    b >>= v;
    if v % 2 == 1 {
        k = kronecker_two(&a);
    }
    if b.is_negative() {
        b = -b;
        if a.is_negative() {
            k = -k;
        }
    }

    // b is odd and positive from here on.
    loop {
        if a.is_zero() {
            return if b.is_one() { k } else { 0 };
        }
        let v = a.trailing_zeros().unwrap_or(0);
        a >>= v;
        if v % 2 == 1 && matches!(low_bits(&b, 8), 3 | 5) {
            k = -k;
        }
        // reciprocity, with two's-complement residues for negative a
        if low_bits(&a, 4) == 3 && low_bits(&b, 4) == 3 {
            k = -k;
        }
        let r = a.abs();
        a = b.mod_floor(&r);
        b = r;
    }
}

fn small_prime_divisor(n: &Int) -> Option<bool> {
    for p in MR_BASES {
        let p = Int::from(p);
        if *n == p {
            return Some(true);
        }
        if n.is_multiple_of(&p) {
            return Some(false);
        }
    }
    None
}

/// Deterministic primality for `n < PRIMALITY_BOUND`; larger inputs are refused.
pub fn is_prime(n: &Int) -> Result<bool> {
    if *n < int(2) {
        return Ok(false);
    }
    if let Some(answer) = small_prime_divisor(n) {
        return Ok(answer);
    }
    let bound: Int = PRIMALITY_BOUND.parse().unwrap();
    if *n >= bound {
        return Err(Error::PrimalityBound(n.clone()));
    }

    let n_minus_one: Int = n - 1;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'bases: for base in MR_BASES {
        let mut x = Int::from(base).modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x).mod_floor(n);
            if x == n_minus_one {
                continue 'bases;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Primality for machine-sized inputs, which are always inside the proven range.
pub fn is_prime_u64(n: u64) -> bool {
    is_prime(&Int::from(n)).expect("u64 inputs are below the deterministic bound")
}

/// All primes `p <= limit`, ascending.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &is_p)| is_p)
        .map(|(i, _)| i as u64)
        .collect()
}

/// The unique `(x, y)` with `x² + y² = p` and `0 < x < y`, for a prime `p ≡ 1 (mod 4)`.
pub fn two_squares(p: &Int) -> Result<(Int, Int)> {
    if !is_prime(p)? || low_bits(p, 4) != 1 {
        return Err(Error::Precondition(format!(
            "two_squares needs a prime p = 1 (mod 4), got {p}"
        )));
    }
    let half: Int = p / 2;
    let limit = half.sqrt();
    let mut x = Int::one();
    while x <= limit {
        let rest = p - &x * &x;
        if is_perfect_square(&rest) {
            return Ok((x, rest.sqrt()));
        }
        x += 1;
    }
    unreachable!("Fermat: every prime p = 1 (mod 4) is a sum of two squares")
}

/// Prime factorization by trial division as `(prime, exponent)` pairs, ascending.
/// Intended for conductor extraction at desk scale.
pub fn factorize(n: &Int) -> Vec<(Int, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    if n.is_zero() {
        return out;
    }
    let mut p = int(2);
    while &p * &p <= n {
        if n.is_multiple_of(&p) {
            let mut e = 0;
            while n.is_multiple_of(&p) {
                n /= &p;
                e += 1;
            }
            out.push((p.clone(), e));
        }
        p += if p == int(2) { 1 } else { 2 };
    }
    if n > Int::one() {
        out.push((n, 1));
    }
    out
}

pub fn gcd3(a: &Int, b: &Int, c: &Int) -> Int {
    a.gcd(b).gcd(c)
}
