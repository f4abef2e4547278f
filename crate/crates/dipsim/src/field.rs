//! Finite-field arithmetic: prime fields with a runtime modulus and binary
//! extension fields GF(2^k) for k up to 64.

use std::fmt::Debug;

/// Arithmetic over a field whose parameters live in the context value.
pub trait Field: Copy + Send + Sync + Debug {
    type Elem: Copy + Eq + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn inv(&self, a: Self::Elem) -> Option<Self::Elem>;
    /// Embeds an integer; prime fields reduce it, binary fields keep the low k bits.
    fn embed(&self, x: u64) -> Self::Elem;
    /// Number of elements, saturating at `u64::MAX` for GF(2^64).
    fn order(&self) -> u64;

    fn pow(&self, mut a: Self::Elem, mut e: u64) -> Self::Elem {
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    fn product<I: IntoIterator<Item = Self::Elem>>(&self, it: I) -> Self::Elem {
        it.into_iter().fold(self.one(), |acc, x| self.mul(acc, x))
    }

    fn sum<I: IntoIterator<Item = Self::Elem>>(&self, it: I) -> Self::Elem {
        it.into_iter().fold(self.zero(), |acc, x| self.add(acc, x))
    }
}

/// Integers modulo a prime `p < 2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Returns `None` unless `p` is a prime below 2^63.
    pub fn new(p: u64) -> Option<Self> {
        (p < 1 << 63 && is_prime(p)).then_some(Self { p })
    }

    /// Smallest prime field with at least `min_order` elements.
    pub fn at_least(min_order: u64) -> Option<Self> {
        next_prime(min_order).and_then(Self::new)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Bits needed to write any element.
    pub fn bits(&self) -> u8 {
        crate::engine::width(self.p - 1)
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }
    fn inv(&self, a: u64) -> Option<u64> {
        (!a.is_multiple_of(self.p)).then(|| self.pow(a % self.p, self.p - 2))
    }
    fn embed(&self, x: u64) -> u64 {
        x % self.p
    }
    fn order(&self) -> u64 {
        self.p
    }
}

/// GF(2^k) with elements stored in the low `k` bits of a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinaryField {
    k: u32,
    /// Modulus without its leading x^k term.
    low: u64,
}

impl BinaryField {
    /// Uses the numerically smallest irreducible polynomial of degree `k`.
    pub fn new(k: u32) -> Option<Self> {
        if k == 0 || k > 64 {
            return None;
        }
        let top = 1u128 << k;
        (1u64..)
            .step_by(2)
            .find(|&low| is_irreducible(top | low as u128, k))
            .map(|low| Self { k, low })
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn modulus_poly(&self) -> u128 {
        (1u128 << self.k) | self.low as u128
    }

    fn mask(&self) -> u64 {
        if self.k == 64 {
            u64::MAX
        } else {
            (1u64 << self.k) - 1
        }
    }
}

impl Field for BinaryField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        poly_mod(clmul(a, b), self.modulus_poly(), self.k) as u64
    }
    fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        // a^(2^k - 2)
        let mut acc = 1u64;
        let mut sq = a;
        for _ in 1..self.k {
            sq = self.mul(sq, sq);
            acc = self.mul(acc, sq);
        }
        Some(acc)
    }
    fn embed(&self, x: u64) -> u64 {
        x & self.mask()
    }
    fn order(&self) -> u64 {
        if self.k == 64 {
            u64::MAX
        } else {
            1u64 << self.k
        }
    }
}

fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let a = a as u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn degree(x: u128) -> i32 {
    127 - x.leading_zeros() as i32
}

fn poly_mod(mut x: u128, f: u128, k: u32) -> u128 {
    while x != 0 && degree(x) >= k as i32 {
        x ^= f << (degree(x) - k as i32);
    }
    x
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_mod(a, b, degree(b) as u32);
        a = b;
        b = r;
    }
    a
}

fn is_irreducible(f: u128, k: u32) -> bool {
    // Ben-Or: no factor of degree i <= k/2 divides f.
    let x = 2u128;
    let mut t = x;
    for _ in 0..k / 2 {
        let t64 = t as u64;
        t = poly_mod(clmul(t64, t64), f, k);
        if poly_gcd(f, t ^ x) != 1 {
            return false;
        }
    }
    true
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        acc
    };
    'outer: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`, if one fits below 2^63.
pub fn next_prime(n: u64) -> Option<u64> {
    (n.max(2)..1u64 << 63).find(|&c| is_prime(c))
}

/// `base^exp`, or `None` on overflow.
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..40).filter(|&x| is_prime(x)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(65537));
        assert!(!is_prime(65535));
        assert_eq!(next_prime(65536), Some(65537));
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to 2,3,5,7
    }

    #[test]
    fn prime_field_inverse() {
        let f = PrimeField::new(101).unwrap();
        for a in 1..101 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        assert_eq!(f.inv(0), None);
        assert_eq!(f.sub(3, 5), 99);
    }

    #[test]
    fn binary_field_known_moduli() {
        assert_eq!(BinaryField::new(8).unwrap().modulus_poly(), 0x11b);
        assert_eq!(BinaryField::new(2).unwrap().modulus_poly(), 0b111);
        // x^64 + x^4 + x^3 + x + 1
        assert_eq!(BinaryField::new(64).unwrap().modulus_poly(), (1u128 << 64) | 0x1b);
    }

    #[test]
    fn binary_field_group_laws() {
        for k in [1, 3, 9, 15, 64] {
            let f = BinaryField::new(k).unwrap();
            let xs = [1u64, 2, 3, 0x5a5a, u64::MAX - 7].map(|x| f.embed(x));
            for &a in &xs {
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "k={k} a={a}");
                }
                for &b in &xs {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &xs {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn small_binary_field_is_a_field() {
        let f = BinaryField::new(4).unwrap();
        let nonzero: Vec<u64> = (1..16).collect();
        for &a in &nonzero {
            let mut seen: Vec<u64> = nonzero.iter().map(|&b| f.mul(a, b)).collect();
            seen.sort_unstable();
            assert_eq!(seen, nonzero);
        }
    }
}
