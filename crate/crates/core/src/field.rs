//! Arithmetic in GF(2^m) for 1 <= m <= 16.
//!
//! Elements are bitmasks over the polynomial basis `1, x, ..., x^(m-1)`.
//! Every context uses the fixed modulus from [`MODULUS_TABLE`]; for
//! m >= 2 these are the Conway polynomials, so `x` is a primitive element
//! and the power-of-generator map between nested fields is a ring
//! homomorphism.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FieldError;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

/// Built-in moduli, indexed by degree. Bit `i` is the coefficient of `x^i`.
///
/// | m | polynomial |
/// |---|------------|
/// | 1 | x |
/// | 2 | x^2 + x + 1 |
/// | 3 | x^3 + x + 1 |
/// | 4 | x^4 + x + 1 |
/// | 5 | x^5 + x^2 + 1 |
/// | 6 | x^6 + x^4 + x^3 + x + 1 |
/// | 7 | x^7 + x + 1 |
/// | 8 | x^8 + x^4 + x^3 + x^2 + 1 |
/// | 9 | x^9 + x^4 + 1 |
/// | 10 | x^10 + x^6 + x^5 + x^3 + x^2 + x + 1 |
/// | 11 | x^11 + x^2 + 1 |
/// | 12 | x^12 + x^7 + x^6 + x^5 + x^3 + x + 1 |
/// | 13 | x^13 + x^4 + x^3 + x + 1 |
/// | 14 | x^14 + x^7 + x^5 + x^3 + 1 |
/// | 15 | x^15 + x^5 + x^4 + x^2 + 1 |
/// | 16 | x^16 + x^5 + x^3 + x^2 + 1 |
pub const MODULUS_TABLE: [u32; 17] = [
    0,
    0b10,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b101_1011,
    0b1000_0011,
    0b1_0001_1101,
    (1 << 9) | (1 << 4) | 1,
    (1 << 10) | (1 << 6) | (1 << 5) | (1 << 3) | (1 << 2) | (1 << 1) | 1,
    (1 << 11) | (1 << 2) | 1,
    (1 << 12) | (1 << 7) | (1 << 6) | (1 << 5) | (1 << 3) | (1 << 1) | 1,
    (1 << 13) | (1 << 4) | (1 << 3) | (1 << 1) | 1,
    (1 << 14) | (1 << 7) | (1 << 5) | (1 << 3) | 1,
    (1 << 15) | (1 << 5) | (1 << 4) | (1 << 2) | 1,
    (1 << 16) | (1 << 5) | (1 << 3) | (1 << 2) | 1,
];

/// A field element as a bitmask. Only meaningful together with its [`FieldCtx`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn bits(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, FieldError> {
        let t = s.trim().trim_start_matches("0x");
        u16::from_str_radix(t, 16)
            .map(FieldElement)
            .map_err(|_| FieldError::Parse(s.to_string()))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:x}", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FieldElement::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Carry-less product of two polynomials of degree < 16.
#[inline]
fn clmul(a: u32, b: u32) -> u32 {
    let mut r = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            r ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    r
}

/// Reduce a polynomial of degree < 2m modulo `modulus` (degree m).
#[inline]
fn reduce(mut r: u32, modulus: u32, m: u32) -> u32 {
    let mut top = 31 - r.leading_zeros().min(31);
    while r != 0 && top >= m {
        if r & (1 << top) != 0 {
            r ^= modulus << (top - m);
        }
        if top == 0 {
            break;
        }
        top -= 1;
    }
    r
}

/// Slow schoolbook multiplication, used to build the tables and as a test oracle.
pub fn poly_mul_mod(a: u32, b: u32, modulus: u32, m: u32) -> u32 {
    reduce(clmul(a, b), modulus, m)
}

/// Irreducibility over GF(2) by trial division by every polynomial of degree <= m/2.
pub fn is_irreducible(poly: u32) -> bool {
    if poly < 2 {
        return false;
    }
    let m = 31 - poly.leading_zeros();
    for d in 1..=m / 2 {
        for div in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_rem(poly, div) == 0 {
                return false;
            }
        }
    }
    true
}

fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = 31 - b.leading_zeros();
    while a != 0 {
        let da = 31 - a.leading_zeros();
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// GF(2^m) with log/exp tables and, for m <= 8, a full multiplication table.
#[derive(Clone)]
pub struct FieldCtx {
    degree: u32,
    modulus: u32,
    generator: FieldElement,
    exp: Vec<u16>,
    log: Vec<u32>,
    mul_table: Option<Vec<u16>>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("degree", &self.degree)
            .field("modulus", &format_args!("{:#x}", self.modulus))
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

impl FieldCtx {
    /// Build GF(2^m) from the fixed table.
    pub fn new(m: u32) -> Result<Self, FieldError> {
        if m == 0 || m > MAX_DEGREE {
            return Err(FieldError::UnsupportedDegree(m));
        }
        let modulus = MODULUS_TABLE[m as usize];
        let size = 1usize << m;
        let order = (size - 1) as u64;

        // Smallest element of full multiplicative order; `x` for every Conway modulus.
        let factors = prime_factors(order);
        let slow_pow = |a: u32, mut e: u64| {
            let mut r = 1u32;
            let mut b = a;
            while e > 0 {
                if e & 1 == 1 {
                    r = poly_mul_mod(r, b, modulus, m);
                }
                b = poly_mul_mod(b, b, modulus, m);
                e >>= 1;
            }
            r
        };
        let generator = (1..size as u32)
            .find(|&g| {
                slow_pow(g, order) == 1 && factors.iter().all(|&p| slow_pow(g, order / p) != 1)
            })
            .ok_or(FieldError::UnsupportedDegree(m))?;

        let mut exp = vec![0u16; 2 * (size - 1).max(1)];
        let mut log = vec![0u32; size];
        let mut x = 1u32;
        for i in 0..(size - 1).max(1) {
            exp[i] = x as u16;
            log[x as usize] = i as u32;
            x = poly_mul_mod(x, generator, modulus, m);
        }
        let period = (size - 1).max(1);
        for i in period..exp.len() {
            exp[i] = exp[i - period];
        }

        let mut ctx = FieldCtx {
            degree: m,
            modulus,
            generator: FieldElement(generator as u16),
            exp,
            log,
            mul_table: None,
        };
        if m <= 8 {
            let mut t = vec![0u16; size * size];
            for a in 0..size {
                for b in 0..size {
                    t[(a << m) | b] = ctx.mul_slow(a as u32, b as u32) as u16;
                }
            }
            ctx.mul_table = Some(t);
        }
        Ok(ctx)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let period = (self.size() - 1) as u32;
        let l = (self.log[a as usize] + self.log[b as usize]) % period.max(1);
        self.exp[l as usize] as u32
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    #[inline]
    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    /// Number of elements, 2^m.
    #[inline]
    pub fn size(&self) -> usize {
        1usize << self.degree
    }

    /// Order of the multiplicative group, 2^m - 1.
    #[inline]
    pub fn mult_order(&self) -> u64 {
        (self.size() - 1) as u64
    }

    #[inline]
    pub fn contains(&self, a: FieldElement) -> bool {
        (a.0 as usize) < self.size()
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size()).map(|i| FieldElement(i as u16))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (1..self.size()).map(|i| FieldElement(i as u16))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.mul_table {
            Some(t) => FieldElement(t[((a.0 as usize) << self.degree) | b.0 as usize]),
            None => FieldElement(self.mul_slow(a.0 as u32, b.0 as u32) as u16),
        }
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let period = self.mult_order() as u32;
        if period == 1 {
            return Ok(FieldElement::ONE);
        }
        let l = self.log[a.0 as usize];
        Ok(FieldElement(self.exp[((period - l) % period) as usize]))
    }

    /// `a^e` for a signed exponent; `0^e` is 0 for e > 0 and an error for e < 0.
    pub fn pow(&self, a: FieldElement, e: i64) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return match e {
                0 => Ok(FieldElement::ONE),
                e if e > 0 => Ok(FieldElement::ZERO),
                _ => Err(FieldError::ZeroInverse),
            };
        }
        let period = self.mult_order() as i64;
        let l = self.log[a.0 as usize] as i64;
        let k = (l * e.rem_euclid(period)).rem_euclid(period);
        Ok(FieldElement(self.exp[k as usize]))
    }

    /// Discrete logarithm to the base of the fixed generator.
    pub fn log(&self, a: FieldElement) -> Result<u64, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.log[a.0 as usize] as u64)
    }

    /// `generator^k`.
    pub fn exp(&self, k: u64) -> FieldElement {
        FieldElement(self.exp[(k % self.mult_order()) as usize])
    }

    /// Multiplicative order of a non-zero element.
    pub fn element_order(&self, a: FieldElement) -> Result<u64, FieldError> {
        let l = self.log(a)?;
        let n = self.mult_order();
        Ok(n / gcd(n, l))
    }

    /// The absolute Frobenius `x -> x^2`.
    #[inline]
    pub fn frobenius(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    /// `x -> x^(2^k)`.
    pub fn frobenius_pow(&self, a: FieldElement, k: u32) -> FieldElement {
        (0..k).fold(a, |x, _| self.frobenius(x))
    }

    /// The involution `x -> x^q` of GF(q^2), q = 2^(m/2).
    pub fn sigma(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if !self.degree.is_multiple_of(2) {
            return Err(FieldError::OddDegree(self.degree));
        }
        Ok(self.frobenius_pow(a, self.degree / 2))
    }

    /// Norm to the fixed field of sigma: `a^(q+1)`.
    pub fn norm(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        let s = self.sigma(a)?;
        Ok(self.mul(a, s))
    }

    /// Trace to the fixed field of sigma: `a + a^q`.
    pub fn trace(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        let s = self.sigma(a)?;
        Ok(self.add(a, s))
    }

    /// Image of `a` under the embedding `src -> dst` sending
    /// `src.generator` to `dst.generator^((2^M - 1)/(2^m - 1))`.
    pub fn embed(src: &FieldCtx, dst: &FieldCtx, a: FieldElement) -> Result<FieldElement, FieldError> {
        if !dst.degree.is_multiple_of(src.degree) {
            return Err(FieldError::NonDividing { src: src.degree, dst: dst.degree });
        }
        if !src.contains(a) {
            return Err(FieldError::InvalidElement(a.0, src.degree));
        }
        if a.is_zero() {
            return Ok(FieldElement::ZERO);
        }
        let step = dst.mult_order() / src.mult_order();
        let k = src.log(a)?;
        Ok(dst.exp(k * step))
    }

    /// The whole embedding as a lookup table indexed by source bits.
    pub fn embedding_table(src: &FieldCtx, dst: &FieldCtx) -> Result<Vec<FieldElement>, FieldError> {
        src.elements().map(|a| FieldCtx::embed(src, dst, a)).collect()
    }

    /// Square root; unique in characteristic 2.
    pub fn sqrt(&self, a: FieldElement) -> FieldElement {
        self.frobenius_pow(a, self.degree - 1)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(m: u32) -> FieldCtx {
        FieldCtx::new(m).unwrap()
    }

    #[test]
    fn degree_range() {
        assert!(matches!(FieldCtx::new(0), Err(FieldError::UnsupportedDegree(0))));
        assert!(matches!(FieldCtx::new(17), Err(FieldError::UnsupportedDegree(17))));
        for m in 1..=16 {
            assert_eq!(gf(m).degree(), m);
        }
    }

    #[test]
    fn small_moduli() {
        assert_eq!(gf(1).modulus(), 0b10);
        assert_eq!(gf(1).generator(), FieldElement::ONE);
        assert_eq!(gf(2).modulus(), 0b111);
    }

    #[test]
    fn table_is_irreducible() {
        for m in 1..=16 {
            assert!(is_irreducible(MODULUS_TABLE[m]), "degree {m}");
        }
    }

    #[test]
    fn generator_has_full_order_by_powering() {
        for m in 1..=12 {
            let f = gf(m);
            let g = f.generator();
            let mut x = g;
            let mut k = 1u64;
            while x != FieldElement::ONE {
                x = f.mul(x, g);
                k += 1;
            }
            assert_eq!(k, f.mult_order(), "degree {m}");
        }
        // GF(16): order 15
        let f = gf(4);
        assert_eq!(f.element_order(f.generator()).unwrap(), 15);
    }

    #[test]
    fn gf4_examples() {
        let f = gf(2);
        let w = FieldElement(0b10);
        assert_eq!(f.mul(w, w), FieldElement(0b11));
        for a in f.elements() {
            assert_eq!(f.mul(a, FieldElement::ONE), a);
        }
        assert_eq!(f.inv(w).unwrap(), FieldElement(0b11));
        assert!(matches!(f.inv(FieldElement::ZERO), Err(FieldError::ZeroInverse)));
    }

    #[test]
    fn table_multiplication_matches_schoolbook() {
        for m in [3, 6, 8, 11, 16] {
            let f = gf(m);
            let step = if m > 8 { 97 } else { 1 };
            for a in (0..f.size() as u32).step_by(step) {
                for b in (0..f.size() as u32).step_by(step) {
                    assert_eq!(
                        f.mul(FieldElement(a as u16), FieldElement(b as u16)).0 as u32,
                        poly_mul_mod(a, b, f.modulus(), m)
                    );
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for m in 1..=4 {
            let f = gf(m);
            for a in f.elements() {
                assert_eq!(f.add(a, a), FieldElement::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
                }
                for b in f.elements() {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn frobenius_stability() {
        for m in 1..=8 {
            let f = gf(m);
            for a in f.elements() {
                assert_eq!(f.frobenius_pow(a, m), a);
                assert_eq!(f.pow(a, f.size() as i64).unwrap(), a);
            }
        }
    }

    #[test]
    fn sigma_properties() {
        assert!(matches!(gf(3).sigma(FieldElement::ONE), Err(FieldError::OddDegree(3))));
        let f = gf(4);
        for a in f.elements() {
            assert_eq!(f.sigma(f.sigma(a).unwrap()).unwrap(), a);
        }
        // q = 2: sigma(g) = g^2 on GF(4)
        let f = gf(2);
        let g = f.generator();
        assert_eq!(f.sigma(g).unwrap(), f.mul(g, g));
        // n-th iterate of the absolute Frobenius is sigma on GF(2^(2n))
        for n in 1..=4 {
            let f = gf(2 * n);
            for a in f.elements() {
                assert_eq!(f.sigma(a).unwrap(), f.frobenius_pow(a, n));
            }
        }
    }

    #[test]
    fn fixed_field_of_sigma_is_embedded_subfield() {
        for n in 1..=3 {
            let small = gf(n);
            let big = gf(2 * n);
            let image: std::collections::BTreeSet<_> =
                small.elements().map(|a| FieldCtx::embed(&small, &big, a).unwrap()).collect();
            let fixed: std::collections::BTreeSet<_> =
                big.elements().filter(|&a| big.sigma(a).unwrap() == a).collect();
            assert_eq!(image, fixed);
            assert_eq!(fixed.len(), 1 << n);
        }
    }

    #[test]
    fn norm_and_trace_fibres_at_q4() {
        let p = gf(4);
        let q = 4usize;
        assert_eq!(p.norm(FieldElement::ZERO).unwrap(), FieldElement::ZERO);
        assert_eq!(p.trace(FieldElement::ZERO).unwrap(), FieldElement::ZERO);
        let mut nfib = std::collections::BTreeMap::new();
        let mut tfib = std::collections::BTreeMap::new();
        for a in p.elements() {
            let n = p.norm(a).unwrap();
            let t = p.trace(a).unwrap();
            assert_eq!(p.sigma(n).unwrap(), n);
            assert_eq!(p.sigma(t).unwrap(), t);
            *nfib.entry(n).or_insert(0usize) += 1;
            *tfib.entry(t).or_insert(0usize) += 1;
            for b in p.elements() {
                assert_eq!(p.norm(p.mul(a, b)).unwrap(), p.mul(p.norm(a).unwrap(), p.norm(b).unwrap()));
                assert_eq!(p.trace(p.add(a, b)).unwrap(), p.add(t, p.trace(b).unwrap()));
            }
        }
        assert_eq!(nfib.len(), q);
        for (c, count) in &nfib {
            assert_eq!(*count, if c.is_zero() { 1 } else { q + 1 });
        }
        assert_eq!(tfib.len(), q);
        assert!(tfib.values().all(|&c| c == q));
    }

    #[test]
    fn embedding_is_a_ring_homomorphism() {
        let small = gf(2);
        let big = gf(4);
        assert_eq!(FieldCtx::embed(&small, &big, FieldElement::ONE).unwrap(), FieldElement::ONE);
        for a in small.elements() {
            for b in small.elements() {
                let e = |x| FieldCtx::embed(&small, &big, x).unwrap();
                assert_eq!(e(small.mul(a, b)), big.mul(e(a), e(b)));
                assert_eq!(e(small.add(a, b)), big.add(e(a), e(b)));
            }
        }
        let gf2 = gf(1);
        for a in gf2.elements() {
            assert_eq!(FieldCtx::embed(&gf2, &small, a).unwrap(), a);
        }
        assert!(matches!(
            FieldCtx::embed(&gf(3), &gf(4), FieldElement::ONE),
            Err(FieldError::NonDividing { src: 3, dst: 4 })
        ));
    }

    #[test]
    fn every_dividing_pair_is_compatible() {
        for b in 2..=16u32 {
            let big = gf(b);
            for a in (1..b).filter(|a| b % a == 0) {
                let small = gf(a);
                let e = FieldCtx::embedding_table(&small, &big).unwrap();
                // additive on a basis and multiplicative on the generator suffices
                let g = small.generator();
                for x in small.elements().take(64) {
                    assert_eq!(e[small.mul(x, g).0 as usize], big.mul(e[x.0 as usize], e[g.0 as usize]));
                    for y in small.elements().take(64) {
                        assert_eq!(e[small.add(x, y).0 as usize], big.add(e[x.0 as usize], e[y.0 as usize]));
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_chains_compose() {
        for chain in [[1u32, 2, 4], [1, 3, 6], [2, 4, 8], [1, 2, 8]] {
            let f: Vec<_> = chain.iter().map(|&m| gf(m)).collect();
            for a in f[0].elements() {
                let via = FieldCtx::embed(&f[1], &f[2], FieldCtx::embed(&f[0], &f[1], a).unwrap()).unwrap();
                assert_eq!(via, FieldCtx::embed(&f[0], &f[2], a).unwrap());
            }
        }
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(FieldElement(0xab).to_hex(), "ab");
        assert_eq!(FieldElement::from_hex("ab").unwrap(), FieldElement(0xab));
        assert!(FieldElement::from_hex("zz").is_err());
    }
}
