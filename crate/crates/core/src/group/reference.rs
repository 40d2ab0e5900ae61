//! Independently built reference groups used as recognition targets.
//!
//! Both models use only the field module: no tables are shared with
//! [`crate::unitary::UnitaryCtx`].

use std::fmt;

use crate::error::GroupError;
use crate::field::{gcd, FieldCtx, FieldElement};
use crate::group::{Group, SubgroupHandle};
use crate::unitary::{psl2_order, psu3_order};

/// PSL2(q) = SL2(q) for even q, as 2x2 matrices `[a, b, c, d]`.
pub struct Psl2 {
    q: u32,
    f: FieldCtx,
    elements: Vec<[u8; 4]>,
}

impl fmt::Debug for Psl2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psl2(q={})", self.q)
    }
}

impl Psl2 {
    /// q = 2^n with 1 <= n <= 4.
    pub fn new(n: u32) -> Result<Self, GroupError> {
        if n == 0 || n > 4 {
            return Err(GroupError::UnsupportedExponent(n));
        }
        let f = FieldCtx::new(n)?;
        let mut elements = Vec::new();
        for a in f.elements() {
            for b in f.elements() {
                for c in f.elements() {
                    for d in f.elements() {
                        if f.add(f.mul(a, d), f.mul(b, c)) == FieldElement::ONE {
                            elements.push([a.0 as u8, b.0 as u8, c.0 as u8, d.0 as u8]);
                        }
                    }
                }
            }
        }
        elements.sort_unstable();
        let q = 1 << n;
        debug_assert_eq!(elements.len() as u64, psl2_order(q as u64));
        Ok(Psl2 { q, f, elements })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn field(&self) -> &FieldCtx {
        &self.f
    }

    pub fn elements(&self) -> &[[u8; 4]] {
        &self.elements
    }

    pub fn handle(&self) -> SubgroupHandle<[u8; 4]> {
        SubgroupHandle::from_elements(Vec::new(), self.elements.clone())
    }

    pub fn matrix(&self, m: [FieldElement; 4]) -> [u8; 4] {
        m.map(|x| x.0 as u8)
    }

    /// [[1, b], [0, 1]].
    pub fn upper(&self, b: FieldElement) -> [u8; 4] {
        [1, b.0 as u8, 0, 1]
    }

    /// diag(l, l^-1).
    pub fn diag(&self, l: FieldElement) -> Result<[u8; 4], GroupError> {
        Ok([l.0 as u8, 0, 0, self.f.inv(l)?.0 as u8])
    }

    /// [[0, 1], [1, 0]].
    pub fn antidiag(&self) -> [u8; 4] {
        [0, 1, 1, 0]
    }

    fn fm(&self, a: u8, b: u8) -> u8 {
        self.f.mul(FieldElement(a as u16), FieldElement(b as u16)).0 as u8
    }
}

impl Group for Psl2 {
    type Elem = [u8; 4];

    fn identity(&self) -> [u8; 4] {
        [1, 0, 0, 1]
    }

    fn mul(&self, x: &[u8; 4], y: &[u8; 4]) -> [u8; 4] {
        [
            self.fm(x[0], y[0]) ^ self.fm(x[1], y[2]),
            self.fm(x[0], y[1]) ^ self.fm(x[1], y[3]),
            self.fm(x[2], y[0]) ^ self.fm(x[3], y[2]),
            self.fm(x[2], y[1]) ^ self.fm(x[3], y[3]),
        ]
    }

    /// Determinant one and characteristic two: the adjugate.
    fn inv(&self, x: &[u8; 4]) -> [u8; 4] {
        [x[3], x[1], x[2], x[0]]
    }

    fn describe(&self, x: &[u8; 4]) -> String {
        format!("{:x},{:x},{:x},{:x}", x[0], x[1], x[2], x[3])
    }
}

/// PSU3(q) for the identity Hermitian form `sum x_i sigma(y_i)`, enumerated
/// from orthonormal frames. Only q <= 4 is supported (62400 elements).
pub struct Psu3Identity {
    q: u32,
    p: FieldCtx,
    centre: Vec<u8>,
    elements: Vec<[u8; 9]>,
}

impl fmt::Debug for Psu3Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psu3Identity(q={})", self.q)
    }
}

impl Psu3Identity {
    pub const MAX_EXPONENT: u32 = 2;

    pub fn new(n: u32) -> Result<Self, GroupError> {
        if n == 0 || n > Self::MAX_EXPONENT {
            return Err(GroupError::UnsupportedExponent(n));
        }
        let q = 1u32 << n;
        let p = FieldCtx::new(2 * n)?;
        let size = p.size() as u16;
        let norm_one: Vec<FieldElement> = p
            .nonzero()
            .filter(|&c| p.pow(c, q as i64 + 1).unwrap() == FieldElement::ONE)
            .collect();
        let centre: Vec<u8> = norm_one
            .iter()
            .filter(|&&c| p.pow(c, 3).unwrap() == FieldElement::ONE)
            .map(|c| c.0 as u8)
            .collect();
        let mut me = Psu3Identity { q, p, centre, elements: Vec::new() };
        let p = &me.p;
        let sigma = |x: FieldElement| p.pow(x, q as i64).unwrap();
        let herm = |x: &[FieldElement; 3], y: &[FieldElement; 3]| {
            (0..3).fold(FieldElement::ZERO, |acc, i| p.add(acc, p.mul(x[i], sigma(y[i]))))
        };
        let mut unit: Vec<[FieldElement; 3]> = Vec::new();
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    let x = [FieldElement(a), FieldElement(b), FieldElement(c)];
                    if herm(&x, &x) == FieldElement::ONE {
                        unit.push(x);
                    }
                }
            }
        }
        let mut elements = Vec::new();
        for r0 in &unit {
            for r1 in unit.iter().filter(|r1| herm(r0, r1).is_zero()) {
                // sigma of the cross product is orthogonal to r0 and r1
                let cross = [
                    p.add(p.mul(r0[1], r1[2]), p.mul(r0[2], r1[1])),
                    p.add(p.mul(r0[2], r1[0]), p.mul(r0[0], r1[2])),
                    p.add(p.mul(r0[0], r1[1]), p.mul(r0[1], r1[0])),
                ];
                let w = cross.map(sigma);
                for &c in &norm_one {
                    let r2 = w.map(|x| p.mul(c, x));
                    let m = [r0[0], r0[1], r0[2], r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]]
                        .map(|x| x.0 as u8);
                    if me.det(&m) == 1 {
                        elements.push(me.canon(m));
                    }
                }
            }
        }
        elements.sort_unstable();
        elements.dedup();
        debug_assert_eq!(elements.len() as u64, psu3_order(q as u64));
        me.elements = elements;
        Ok(me)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn d(&self) -> u64 {
        gcd(3, self.q as u64 + 1)
    }

    pub fn elements(&self) -> &[[u8; 9]] {
        &self.elements
    }

    pub fn handle(&self) -> SubgroupHandle<[u8; 9]> {
        SubgroupHandle::from_elements(Vec::new(), self.elements.clone())
    }

    /// `sigma(M)^T M = I` and `det M = 1`.
    pub fn is_member(&self, m: &[u8; 9]) -> bool {
        let s = |x: u8| self.p.pow(FieldElement(x as u16), self.q as i64).unwrap().0 as u8;
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0u8;
                for k in 0..3 {
                    acc ^= self.fm(s(m[3 * k + i]), m[3 * k + j]);
                }
                if acc != u8::from(i == j) {
                    return false;
                }
            }
        }
        self.det(m) == 1
    }

    fn fm(&self, a: u8, b: u8) -> u8 {
        self.p.mul(FieldElement(a as u16), FieldElement(b as u16)).0 as u8
    }

    fn det(&self, m: &[u8; 9]) -> u8 {
        let f = |a, b| self.fm(a, b);
        f(m[0], f(m[4], m[8]) ^ f(m[5], m[7]))
            ^ f(m[1], f(m[3], m[8]) ^ f(m[5], m[6]))
            ^ f(m[2], f(m[3], m[7]) ^ f(m[4], m[6]))
    }

    fn canon(&self, m: [u8; 9]) -> [u8; 9] {
        self.centre
            .iter()
            .map(|&c| m.map(|x| self.fm(c, x)))
            .min()
            .unwrap_or(m)
    }
}

impl Group for Psu3Identity {
    type Elem = [u8; 9];

    fn identity(&self) -> [u8; 9] {
        self.canon([1, 0, 0, 0, 1, 0, 0, 0, 1])
    }

    fn mul(&self, a: &[u8; 9], b: &[u8; 9]) -> [u8; 9] {
        let mut r = [0u8; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[3 * i + j] =
                    self.fm(a[3 * i], b[j]) ^ self.fm(a[3 * i + 1], b[3 + j]) ^ self.fm(a[3 * i + 2], b[6 + j]);
            }
        }
        self.canon(r)
    }

    /// `M^-1 = sigma(M)^T`.
    fn inv(&self, a: &[u8; 9]) -> [u8; 9] {
        let s = |x: u8| self.p.pow(FieldElement(x as u16), self.q as i64).unwrap().0 as u8;
        let mut r = [0u8; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[3 * i + j] = s(a[3 * j + i]);
            }
        }
        self.canon(r)
    }

    fn describe(&self, a: &[u8; 9]) -> String {
        a.iter().map(|x| format!("{x:x}")).collect::<Vec<_>>().join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::closure;

    #[test]
    fn psl2_orders() {
        for (n, want) in [(1, 6), (2, 60), (3, 504), (4, 4080)] {
            let g = Psl2::new(n).unwrap();
            assert_eq!(g.elements().len() as u64, want);
        }
    }

    #[test]
    fn psl2_structural_equation() {
        for n in 1..=4 {
            let g = Psl2::new(n).unwrap();
            let x = g.mul(&g.antidiag(), &g.upper(FieldElement::ONE));
            assert_eq!(g.pow(&x, 3), g.identity());
        }
    }

    #[test]
    fn psl2_inverse_and_closure() {
        let g = Psl2::new(2).unwrap();
        for x in g.elements() {
            assert_eq!(g.mul(x, &g.inv(x)), g.identity());
        }
        let gens = [g.upper(FieldElement::ONE), g.antidiag(), g.diag(FieldElement(2)).unwrap()];
        assert_eq!(closure(&g, &gens, 100).unwrap().order(), 60);
    }

    #[test]
    fn psu3_identity_orders() {
        let g = Psu3Identity::new(1).unwrap();
        assert_eq!(g.elements().len(), 72);
        assert!(g.elements().iter().all(|m| g.is_member(m)));
        let g = Psu3Identity::new(2).unwrap();
        assert_eq!(g.elements().len(), 62_400);
        assert!(g.elements().iter().step_by(101).all(|m| g.is_member(m)));
        assert!(Psu3Identity::new(3).is_err());
    }

    #[test]
    fn psu3_identity_is_closed() {
        let g = Psu3Identity::new(1).unwrap();
        let h = g.handle();
        for a in g.elements() {
            assert_eq!(g.mul(a, &g.inv(a)), g.identity());
            for b in g.elements() {
                assert!(h.contains(&g.mul(a, b)));
            }
        }
    }
}
