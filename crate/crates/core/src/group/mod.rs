//! Generic finite-group machinery: closure, centralisers, normalisers, orbits,
//! quotients and the Frobenius test.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::hash::Hash;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::EngineError;

pub mod recognize;
pub mod reference;

pub use recognize::{recognize, RecognitionResult, RecognitionTag, Recognizer};

/// Default closure cap, 2^23 elements.
pub const DEFAULT_CAP: usize = 1 << 23;

/// Closure cap from `UBL_CAP`, falling back to [`DEFAULT_CAP`].
pub fn cap_from_env() -> usize {
    std::env::var("UBL_CAP")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c >= 1)
        .unwrap_or(DEFAULT_CAP)
}

/// A finite group with cheap copyable elements.
pub trait Group: Sync {
    type Elem: Copy + Eq + Ord + Hash + Debug + Send + Sync;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;

    /// Human-readable form used in witnesses.
    fn describe(&self, a: &Self::Elem) -> String {
        format!("{a:?}")
    }

    fn is_identity(&self, a: &Self::Elem) -> bool {
        *a == self.identity()
    }

    /// `x^g = g^-1 x g`.
    fn conj(&self, x: &Self::Elem, g: &Self::Elem) -> Self::Elem {
        self.mul(&self.mul(&self.inv(g), x), g)
    }

    /// `[x, y] = x^-1 y^-1 x y`.
    fn commutator(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem {
        let xi = self.inv(x);
        let yi = self.inv(y);
        self.mul(&self.mul(&xi, &yi), &self.mul(x, y))
    }

    fn commutes(&self, x: &Self::Elem, y: &Self::Elem) -> bool {
        self.mul(x, y) == self.mul(y, x)
    }

    fn pow(&self, x: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = *x;
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn order(&self, x: &Self::Elem) -> u64 {
        let one = self.identity();
        let mut y = *x;
        let mut k = 1;
        while y != one {
            y = self.mul(&y, x);
            k += 1;
        }
        k
    }
}

/// A subgroup stored as its sorted element list, with optional generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubgroupHandle<E> {
    gens: Vec<E>,
    elems: Vec<E>,
}

impl<E: Copy + Ord> SubgroupHandle<E> {
    /// Wrap a set already known to be a subgroup.
    pub fn from_elements(gens: Vec<E>, mut elems: Vec<E>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        SubgroupHandle { gens, elems }
    }

    pub fn order(&self) -> u64 {
        self.elems.len() as u64
    }

    pub fn elements(&self) -> &[E] {
        &self.elems
    }

    pub fn generators(&self) -> &[E] {
        &self.gens
    }

    pub fn contains(&self, x: &E) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubgroupHandle<E>) -> bool {
        self.elems.iter().all(|x| other.contains(x))
    }

    pub fn same_elements(&self, other: &SubgroupHandle<E>) -> bool {
        self.elems == other.elems
    }

    pub fn intersection(&self, other: &SubgroupHandle<E>) -> SubgroupHandle<E> {
        let elems = self.elems.iter().copied().filter(|x| other.contains(x)).collect();
        SubgroupHandle { gens: Vec::new(), elems }
    }

    /// Generators if known, otherwise every element.
    pub fn generating_set(&self) -> &[E] {
        if self.gens.is_empty() {
            &self.elems
        } else {
            &self.gens
        }
    }
}

/// Result of a capped closure.
#[derive(Clone, Debug)]
pub enum Closure<E> {
    Complete(SubgroupHandle<E>),
    /// The cap was hit; the elements found so far.
    Partial(Vec<E>),
}

/// Breadth-first closure of `gens` under right multiplication.
pub fn closure_bounded<G: Group>(g: &G, gens: &[G::Elem], cap: usize) -> Closure<G::Elem> {
    let one = g.identity();
    let gens: Vec<G::Elem> = gens.iter().copied().filter(|x| *x != one).collect();
    let mut seen: FxHashSet<G::Elem> = FxHashSet::default();
    let mut order = vec![one];
    seen.insert(one);
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for s in &gens {
            let y = g.mul(&x, s);
            if seen.insert(y) {
                if order.len() >= cap {
                    return Closure::Partial(order);
                }
                order.push(y);
            }
        }
    }
    Closure::Complete(SubgroupHandle::from_elements(gens, order))
}

/// Exact closure, or [`EngineError::CapExceeded`].
pub fn closure<G: Group>(g: &G, gens: &[G::Elem], cap: usize) -> Result<SubgroupHandle<G::Elem>, EngineError> {
    match closure_bounded(g, gens, cap) {
        Closure::Complete(h) => Ok(h),
        Closure::Partial(_) => Err(EngineError::CapExceeded { cap }),
    }
}

/// Pointwise centraliser of `targets` inside `ambient`.
pub fn centralizer<G: Group>(g: &G, ambient: &[G::Elem], targets: &[G::Elem]) -> SubgroupHandle<G::Elem> {
    let elems: Vec<G::Elem> = ambient
        .par_iter()
        .copied()
        .filter(|x| targets.iter().all(|t| g.commutes(x, t)))
        .collect();
    SubgroupHandle::from_elements(Vec::new(), elems)
}

/// Setwise normaliser of the subgroup `target` inside `ambient`.
pub fn normalizer<G: Group>(
    g: &G,
    ambient: &[G::Elem],
    target: &SubgroupHandle<G::Elem>,
) -> SubgroupHandle<G::Elem> {
    let gens = target.generating_set();
    let elems: Vec<G::Elem> = ambient
        .par_iter()
        .copied()
        .filter(|x| gens.iter().all(|s| target.contains(&g.conj(s, x))))
        .collect();
    SubgroupHandle::from_elements(Vec::new(), elems)
}

/// `target` is normalised by every generator of `ambient`.
pub fn is_normal<G: Group>(g: &G, ambient: &SubgroupHandle<G::Elem>, target: &SubgroupHandle<G::Elem>) -> bool {
    let tg = target.generating_set();
    ambient
        .generating_set()
        .iter()
        .all(|x| tg.iter().all(|s| target.contains(&g.conj(s, x))))
}

pub fn is_abelian<G: Group>(g: &G, h: &SubgroupHandle<G::Elem>) -> bool {
    let s = h.generating_set();
    s.iter().all(|x| s.iter().all(|y| g.commutes(x, y)))
}

/// Set-closed under multiplication (for finite sets this makes it a subgroup).
pub fn is_closed<G: Group>(g: &G, set: &SubgroupHandle<G::Elem>) -> bool {
    let e = set.elements();
    e.par_iter().all(|x| e.iter().all(|y| set.contains(&g.mul(x, y))))
}

/// Orbit partition of `points` under the group generated by `gens`, of order
/// `actor_order`; the action is a right action `act(point, element)`. Every
/// orbit size is checked to divide `actor_order`.
pub fn orbits<P, E, F>(points: &[P], gens: &[E], actor_order: u64, act: F) -> Result<Vec<Vec<P>>, EngineError>
where
    P: Copy + Ord + Hash,
    F: Fn(&P, &E) -> P,
{
    let mut seen: FxHashSet<P> = FxHashSet::default();
    let mut out = Vec::new();
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    for &p in &sorted {
        if seen.contains(&p) {
            continue;
        }
        seen.insert(p);
        let mut orbit = vec![p];
        let mut queue = VecDeque::from([p]);
        while let Some(x) = queue.pop_front() {
            for s in gens {
                let y = act(&x, s);
                if seen.insert(y) {
                    orbit.push(y);
                    queue.push_back(y);
                }
            }
        }
        orbit.sort_unstable();
        if !actor_order.is_multiple_of(orbit.len() as u64) {
            return Err(EngineError::Lagrange { orbit: orbit.len(), actor: actor_order as usize });
        }
        out.push(orbit);
    }
    Ok(out)
}

/// Conjugacy classes of `h` under conjugation by itself.
pub fn conjugacy_classes<G: Group>(g: &G, h: &SubgroupHandle<G::Elem>) -> Result<Vec<Vec<G::Elem>>, EngineError> {
    orbits(h.elements(), h.generating_set(), h.order(), |x, s| g.conj(x, s))
}

/// The quotient of a finite group by a normal subgroup, with each coset
/// represented by its least element.
pub struct Quotient<'a, G: Group> {
    base: &'a G,
    rep: FxHashMap<G::Elem, G::Elem>,
    identity: G::Elem,
}

impl<'a, G: Group> Quotient<'a, G> {
    /// `ambient` must contain `normal` and be closed; `normal` must be normal in it.
    pub fn new(base: &'a G, ambient: &SubgroupHandle<G::Elem>, normal: &SubgroupHandle<G::Elem>) -> Self {
        let mut rep: FxHashMap<G::Elem, G::Elem> = FxHashMap::default();
        for x in ambient.elements() {
            if rep.contains_key(x) {
                continue;
            }
            let coset: Vec<G::Elem> = normal.elements().iter().map(|n| base.mul(x, n)).collect();
            let m = *coset.iter().min().expect("non-empty coset");
            for y in coset {
                rep.insert(y, m);
            }
        }
        let identity = rep[&base.identity()];
        Quotient { base, rep, identity }
    }

    pub fn project(&self, x: &G::Elem) -> G::Elem {
        self.rep[x]
    }

    /// Image of a subgroup as a handle of coset representatives.
    pub fn image(&self, h: &SubgroupHandle<G::Elem>) -> SubgroupHandle<G::Elem> {
        let gens = h.generators().iter().map(|x| self.project(x)).collect();
        let elems = h.elements().iter().map(|x| self.project(x)).collect();
        SubgroupHandle::from_elements(gens, elems)
    }
}

impl<G: Group> Group for Quotient<'_, G> {
    type Elem = G::Elem;

    fn identity(&self) -> G::Elem {
        self.identity
    }

    fn mul(&self, a: &G::Elem, b: &G::Elem) -> G::Elem {
        self.rep[&self.base.mul(a, b)]
    }

    fn inv(&self, a: &G::Elem) -> G::Elem {
        self.rep[&self.base.inv(a)]
    }

    fn describe(&self, a: &G::Elem) -> String {
        self.base.describe(a)
    }
}

/// Outcome of a Frobenius test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrobeniusReport {
    pub is_frobenius: bool,
    pub group_order: u64,
    pub kernel_order: u64,
    /// Why the test failed.
    pub reason: Option<String>,
    /// `(x, k)`: x outside the kernel fixing the non-trivial kernel element k.
    pub witness: Option<(String, String)>,
}

/// `group` is a Frobenius group with kernel `kernel`: the kernel is a proper,
/// non-trivial normal subgroup and no element outside it centralises a
/// non-trivial kernel element.
pub fn is_frobenius<G: Group>(
    g: &G,
    group: &SubgroupHandle<G::Elem>,
    kernel: &SubgroupHandle<G::Elem>,
) -> FrobeniusReport {
    let mut rep = FrobeniusReport {
        is_frobenius: false,
        group_order: group.order(),
        kernel_order: kernel.order(),
        reason: None,
        witness: None,
    };
    if kernel.order() <= 1 || kernel.order() >= group.order() {
        rep.reason = Some("kernel is trivial or the whole group".into());
        return rep;
    }
    if !kernel.is_subset_of(group) || !is_normal(g, group, kernel) {
        rep.reason = Some("kernel is not a normal subgroup".into());
        return rep;
    }
    let one = g.identity();
    let found = group
        .elements()
        .par_iter()
        .filter(|x| !kernel.contains(x))
        .find_map_first(|x| {
            kernel
                .elements()
                .iter()
                .find(|k| **k != one && g.commutes(x, k))
                .map(|k| (*x, *k))
        });
    match found {
        Some((x, k)) => {
            rep.reason = Some("an element outside the kernel fixes a kernel element".into());
            rep.witness = Some((g.describe(&x), g.describe(&k)));
        }
        None => rep.is_frobenius = true,
    }
    rep
}

/// Invariant factors of a finite abelian group given as a handle, computed
/// from the counts of elements of each prime-power order.
pub fn abelian_invariants<G: Group>(g: &G, h: &SubgroupHandle<G::Elem>) -> Vec<u64> {
    // For each prime p, the number of solutions of x^(p^k) = 1 determines the
    // partition of the p-part.
    let n = h.order();
    let mut primes = Vec::new();
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            primes.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    let mut factors: Vec<u64> = Vec::new();
    for p in primes {
        // r_k = log_p |{x : x^(p^k) = 1}|
        let mut r = vec![0u32];
        let mut pk = 1u64;
        loop {
            pk *= p;
            let count = h.elements().iter().filter(|x| g.is_identity(&g.pow(x, pk))).count() as u64;
            let mut e = 0;
            let mut c = count;
            while c > 1 {
                c /= p;
                e += 1;
            }
            if e == *r.last().unwrap() {
                break;
            }
            r.push(e);
        }
        // number of cyclic factors of order >= p^k is r_k - r_{k-1}
        let k_max = r.len() - 1;
        let mut parts: Vec<u64> = Vec::new();
        for k in 1..=k_max {
            let at_least_k = r[k] - r[k - 1];
            let at_least_next = if k < k_max { r[k + 1] - r[k] } else { 0 };
            for _ in 0..(at_least_k - at_least_next) {
                parts.push(p.pow(k as u32));
            }
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        // merge into invariant factors
        for (i, part) in parts.into_iter().enumerate() {
            if i < factors.len() {
                factors[i] *= part;
            } else {
                factors.push(part);
            }
        }
    }
    factors.sort_unstable();
    factors
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Z/n under addition.
    struct Cyclic(u32);

    impl Group for Cyclic {
        type Elem = u32;
        fn identity(&self) -> u32 {
            0
        }
        fn mul(&self, a: &u32, b: &u32) -> u32 {
            (a + b) % self.0
        }
        fn inv(&self, a: &u32) -> u32 {
            (self.0 - a) % self.0
        }
    }

    /// Permutations of {0..n} as arrays; composition `(a*b)(i) = b(a(i))`.
    struct Sym;

    impl Group for Sym {
        type Elem = [u8; 4];
        fn identity(&self) -> [u8; 4] {
            [0, 1, 2, 3]
        }
        fn mul(&self, a: &[u8; 4], b: &[u8; 4]) -> [u8; 4] {
            a.map(|i| b[i as usize])
        }
        fn inv(&self, a: &[u8; 4]) -> [u8; 4] {
            let mut r = [0; 4];
            for (i, &x) in a.iter().enumerate() {
                r[x as usize] = i as u8;
            }
            r
        }
    }

    #[test]
    fn closure_of_identity_and_cyclic() {
        let c = Cyclic(12);
        assert_eq!(closure(&c, &[0], 10).unwrap().order(), 1);
        assert_eq!(closure(&c, &[8], 10).unwrap().order(), 3);
        assert_eq!(closure(&c, &[8, 3], 20).unwrap().order(), 12);
        assert!(matches!(closure(&c, &[1], 5), Err(EngineError::CapExceeded { cap: 5 })));
        match closure_bounded(&c, &[1], 5) {
            Closure::Partial(p) => assert_eq!(p.len(), 5),
            Closure::Complete(_) => panic!("expected partial closure"),
        }
    }

    #[test]
    fn symmetric_group_basics() {
        let s = Sym;
        let s4 = closure(&s, &[[1, 0, 2, 3], [1, 2, 3, 0]], 100).unwrap();
        assert_eq!(s4.order(), 24);
        let a4 = closure(&s, &[[1, 2, 0, 3], [0, 2, 3, 1]], 100).unwrap();
        assert_eq!(a4.order(), 12);
        assert!(is_normal(&s, &s4, &a4));
        let v4 = closure(&s, &[[1, 0, 3, 2], [2, 3, 0, 1]], 100).unwrap();
        assert!(is_abelian(&s, &v4));
        assert_eq!(abelian_invariants(&s, &v4), vec![2, 2]);
        assert_eq!(normalizer(&s, s4.elements(), &v4).order(), 24);
        let t = [1, 0, 2, 3];
        assert_eq!(centralizer(&s, s4.elements(), &[t]).order(), 4);
        assert_eq!(centralizer(&s, s4.elements(), &[s.identity()]).order(), 24);
        assert_eq!(conjugacy_classes(&s, &s4).unwrap().len(), 5);
        // A4 = V4 x| C3 is Frobenius with kernel V4; S4 with kernel A4 is not
        assert!(is_frobenius(&s, &a4, &v4).is_frobenius);
        let r = is_frobenius(&s, &s4, &a4);
        assert!(!r.is_frobenius && r.witness.is_some());
        // S4 / V4 = S3
        let quo = Quotient::new(&s, &s4, &v4);
        let img = quo.image(&s4);
        assert_eq!(img.order(), 6);
        let c3 = quo.image(&closure(&s, &[[1, 2, 0, 3]], 10).unwrap());
        assert!(is_frobenius(&quo, &img, &c3).is_frobenius);
    }

    #[test]
    fn orbits_on_points() {
        let s = Sym;
        let d = closure(&s, &[[1, 0, 2, 3]], 10).unwrap();
        let orbs = orbits(&[0u8, 1, 2, 3], d.generating_set(), d.order(), |p, g| g[*p as usize]).unwrap();
        assert_eq!(orbs, vec![vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn orbits_reject_non_divisors() {
        // claimed order 3, but the generator acts as a transposition
        let err = orbits(&[0u8, 1], &[1u32], 3, |p, _| 1 - p).unwrap_err();
        assert_eq!(err, EngineError::Lagrange { orbit: 2, actor: 3 });
    }

    #[test]
    fn invariants_of_cyclic_products() {
        let c = Cyclic(12);
        let h = closure(&c, &[1], 20).unwrap();
        assert_eq!(abelian_invariants(&c, &h), vec![12]);
        let one = closure(&c, &[0], 20).unwrap();
        assert_eq!(abelian_invariants(&c, &one), Vec::<u64>::new());
    }
}
