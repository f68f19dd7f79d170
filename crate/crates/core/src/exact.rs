//! Exact determinants of root-of-unity matrices by modular elimination and CRT.
//!
//! A matrix with entries `w^e` (`w = exp(2πi/d)`) is reduced modulo primes
//! `p ≡ 1 (mod d)`, where `w` maps to a primitive `d`-th root of unity in `F_p`.
//! When the residue does not depend on which primitive root is chosen, the
//! determinant is fixed by every Galois automorphism and is a rational integer,
//! which the Chinese remainder theorem then recovers exactly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    // deterministic Miller–Rabin for n < 3.3e24
    let mut dd = n - 1;
    let mut s = 0;
    while dd.is_multiple_of(2) {
        dd /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, dd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = x * x % n;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Primitive `d`-th root of unity modulo `p` (requires `d | p − 1`).
fn primitive_root_of_unity(d: usize, p: u64) -> u64 {
    let factors = prime_factors(d);
    for x in 2..p {
        let r = pow_mod(x, (p - 1) / d as u64, p);
        if factors.iter().all(|&q| pow_mod(r, (d / q) as u64, p) != 1) {
            return r;
        }
    }
    unreachable!("no primitive root of unity modulo {p}")
}

/// Primes `p ≡ 1 (mod d)` descending from just below 2^31.
fn primes_for(d: usize) -> impl Iterator<Item = u64> {
    let d = d as u64;
    let mut candidate = ((1u64 << 31) / d) * d + 1;
    std::iter::from_fn(move || loop {
        candidate -= d;
        if candidate < 3 {
            return None;
        }
        if is_prime(candidate) {
            return Some(candidate);
        }
    })
}

/// Determinant modulo `p` of an `n × n` matrix given by its residues (row-major).
fn det_mod(mut a: Vec<u64>, n: usize, p: u64) -> u64 {
    let mut det = 1u64;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| a[r * n + col] != 0) else {
            return 0;
        };
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = (p - det) % p;
        }
        let pv = a[col * n + col];
        det = det * pv % p;
        let inv = pow_mod(pv, p - 2, p);
        for r in col + 1..n {
            let f = a[r * n + col] * inv % p;
            if f == 0 {
                continue;
            }
            for k in col..n {
                let sub = f * a[col * n + k] % p;
                a[r * n + k] = (a[r * n + k] + p - sub) % p;
            }
        }
    }
    det
}

/// Outcome of an exact determinant computation.
#[derive(Debug, Clone)]
pub struct ExactDeterminant {
    /// `None` when some prime showed Galois-dependent residues, i.e. the determinant is not rational.
    pub value: Option<BigInt>,
    pub primes_used: usize,
    pub galois_invariant: bool,
}

/// Exact determinant of the `n × n` matrix with entries `w^{exponents[r*n+c]}`.
///
/// `log2_bound` bounds `log2 |det|` (for example from Hadamard's inequality).
pub fn root_of_unity_determinant(d: usize, n: usize, exponents: &[usize], log2_bound: f64) -> ExactDeterminant {
    assert_eq!(exponents.len(), n * n);
    let units: Vec<usize> = (1..d).filter(|&j| gcd(j, d) == 1).collect();
    let mut modulus = BigInt::one();
    let mut value = BigInt::zero();
    let mut primes_used = 0;
    let target_bits = log2_bound.max(0.0) + 2.0;
    for p in primes_for(d) {
        let r = primitive_root_of_unity(d, p);
        let powers: Vec<u64> = (0..d).map(|e| pow_mod(r, e as u64, p)).collect();
        let mut residue = None;
        for &j in &units {
            let entries = exponents.iter().map(|&e| powers[(e * j) % d]).collect();
            let det = det_mod(entries, n, p);
            match residue {
                None => residue = Some(det),
                Some(prev) if prev != det => {
                    return ExactDeterminant { value: None, primes_used: primes_used + 1, galois_invariant: false };
                }
                _ => {}
            }
        }
        let residue = BigInt::from(residue.unwrap_or(0));
        // combine x ≡ value (mod modulus) with x ≡ residue (mod p)
        let pb = BigInt::from(p);
        let m_mod_p = (&modulus % &pb).to_u64_digits().1.first().copied().unwrap_or(0);
        let inv = BigInt::from(pow_mod(m_mod_p, p - 2, p));
        let diff = ((&residue - &value) % &pb + &pb) % &pb;
        let k = (diff * inv) % &pb;
        value += &modulus * k;
        modulus *= &pb;
        primes_used += 1;
        if modulus.bits() as f64 > target_bits {
            break;
        }
    }
    // symmetric representative
    let half: BigInt = &modulus >> 1usize;
    if value > half {
        value -= &modulus;
    }
    ExactDeterminant { value: Some(value), primes_used, galois_invariant: true }
}

/// `value mod m` in `[0, m)`.
pub fn big_mod(value: &BigInt, m: u64) -> u64 {
    let mb = BigInt::from(m);
    let r = ((value % &mb) + &mb) % &mb;
    r.to_u64_digits().1.first().copied().unwrap_or(0)
}

/// `log10 |value|`, or `-inf` for zero.
pub fn log10_abs(value: &BigInt) -> f64 {
    if value.is_zero() {
        return f64::NEG_INFINITY;
    }
    let s = value.abs().to_string();
    let lead: f64 = s[..s.len().min(15)].parse().unwrap_or(1.0);
    lead.log10() + (s.len() - s.len().min(15)) as f64
}
