//! Recognition of PSL2(q'), PSU3(q') and Frobenius groups with odd abelian
//! kernel and cyclic complement of order 4.
//!
//! PSL2 and PSU3 are recognised by an explicit isomorphism: generators of the
//! input are mapped into an independently built reference group and the map is
//! extended along the Cayley graph, checking every edge.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;
use serde_json::{json, Value};

use crate::group::reference::{Psl2, Psu3Identity};
use crate::group::{
    abelian_invariants, closure, conjugacy_classes, is_abelian, is_closed, is_frobenius, Group, SubgroupHandle,
};
use crate::unitary::{psl2_order, psu3_order};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RecognitionTag {
    PSL2,
    PSU3,
    FrobeniusOddKernelC4,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecognitionResult {
    pub tag: RecognitionTag,
    pub q: Option<u64>,
    pub order: u64,
    pub evidence: BTreeMap<String, Value>,
}

impl RecognitionResult {
    fn new(tag: RecognitionTag, q: Option<u64>, order: u64) -> Self {
        RecognitionResult { tag, q, order, evidence: BTreeMap::new() }
    }

    /// PSU3(q) established by equality with an ambient group already known to be PSU3(q).
    pub fn ambient_psu3(q: u64, order: u64, method: &str) -> Self {
        let mut r = RecognitionResult::new(RecognitionTag::PSU3, Some(q), order);
        r.evidence.insert("method".into(), json!(method));
        r
    }

    pub fn is_simple_branch(&self) -> bool {
        matches!(self.tag, RecognitionTag::PSL2 | RecognitionTag::PSU3)
    }
}

/// A target group for generator-map extension, with cached class data.
struct Reference<R: Group> {
    group: R,
    elements: Vec<R::Elem>,
    /// (representative, element order) per conjugacy class.
    class_reps: Vec<(R::Elem, u64)>,
    orders: FxHashMap<R::Elem, u64>,
}

impl<R: Group> Reference<R> {
    fn build(group: R, elements: Vec<R::Elem>) -> Self {
        let gens = find_generating_pair(&group, &elements, 0xC0FFEE).expect("reference group is 2-generated");
        let handle = SubgroupHandle::from_elements(gens, elements.clone());
        let classes = conjugacy_classes(&group, &handle).expect("class sizes divide the order");
        let orders: FxHashMap<R::Elem, u64> = elements.iter().map(|x| (*x, group.order(x))).collect();
        let class_reps = classes.iter().map(|c| (c[0], orders[&c[0]])).collect();
        Reference { group, elements, class_reps, orders }
    }
}

/// Search for a pair generating the whole of `elements` (seeded, deterministic).
pub fn find_generating_pair<G: Group>(g: &G, elements: &[G::Elem], seed: u64) -> Option<Vec<G::Elem>> {
    let n = elements.len();
    if n == 1 {
        return Some(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // favour high-order first elements: they shrink the candidate search
    let mut by_order: Vec<(u64, G::Elem)> = elements.iter().map(|x| (g.order(x), *x)).collect();
    by_order.sort_unstable_by(|a, b| b.cmp(a));
    let top = by_order[0].0;
    let firsts: Vec<G::Elem> = by_order.iter().take_while(|p| p.0 == top).map(|p| p.1).collect();
    for _ in 0..400 {
        let x = *firsts.choose(&mut rng)?;
        let y = *elements.choose(&mut rng)?;
        if let Ok(h) = closure(g, &[x, y], n) {
            if h.order() as usize == n {
                return Some(vec![x, y]);
            }
        }
    }
    None
}

/// Orders of short words in the generators: an isomorphism invariant of the tuple.
fn word_signature<G: Group>(g: &G, x: &G::Elem, y: &G::Elem) -> [u64; 4] {
    let xy = g.mul(x, y);
    let x2y = g.mul(x, &xy);
    let xyi = g.mul(x, &g.inv(y));
    let xyxyy = g.mul(&xy, &g.mul(&xy, y));
    [g.order(&xy), g.order(&x2y), g.order(&xyi), g.order(&xyxyy)]
}

/// Extend `gens -> images` to a map on `src` by walking the Cayley graph.
/// Returns the full map only if it is a well-defined bijective homomorphism.
fn extend_map<S: Group, R: Group>(
    s: &S,
    src: &SubgroupHandle<S::Elem>,
    gens: &[S::Elem],
    r: &R,
    images: &[R::Elem],
) -> Option<FxHashMap<S::Elem, R::Elem>> {
    let n = src.order() as usize;
    let mut map: FxHashMap<S::Elem, R::Elem> = FxHashMap::default();
    let mut used: FxHashMap<R::Elem, S::Elem> = FxHashMap::default();
    map.insert(s.identity(), r.identity());
    used.insert(r.identity(), s.identity());
    let mut queue = vec![s.identity()];
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head];
        head += 1;
        let fx = map[&x];
        for (gen, img) in gens.iter().zip(images) {
            let y = s.mul(&x, gen);
            let fy = r.mul(&fx, img);
            match map.get(&y) {
                Some(prev) => {
                    if *prev != fy {
                        return None;
                    }
                }
                None => {
                    if used.contains_key(&fy) {
                        return None;
                    }
                    map.insert(y, fy);
                    used.insert(fy, y);
                    queue.push(y);
                }
            }
        }
    }
    (map.len() == n).then_some(map)
}

/// Try to build an isomorphism from `src` (generated by `gens`) onto `reference`.
fn find_isomorphism<S: Group, R: Group>(
    s: &S,
    src: &SubgroupHandle<S::Elem>,
    gens: &[S::Elem],
    reference: &Reference<R>,
) -> Option<(Vec<R::Elem>, usize)> {
    if src.order() as usize != reference.elements.len() {
        return None;
    }
    let r = &reference.group;
    let ords: Vec<u64> = gens.iter().map(|x| s.order(x)).collect();
    let mut attempts = 0usize;
    match gens {
        [] => Some((Vec::new(), 0)),
        [x] => {
            for (rep, o) in &reference.class_reps {
                if *o == ords[0] {
                    attempts += 1;
                    if extend_map(s, src, gens, r, &[*rep]).is_some() {
                        return Some((vec![*rep], attempts));
                    }
                }
            }
            let _ = x;
            None
        }
        [x, y, rest @ ..] => {
            let sig = word_signature(s, x, y);
            let rest_sigs: Vec<([u64; 4], u64)> =
                rest.iter().map(|z| (word_signature(s, x, z), s.order(z))).collect();
            for (rx, o) in &reference.class_reps {
                if *o != ords[0] {
                    continue;
                }
                let ys: Vec<R::Elem> = reference
                    .elements
                    .iter()
                    .copied()
                    .filter(|ry| reference.orders[ry] == ords[1] && word_signature(r, rx, ry) == sig)
                    .collect();
                let rest_cands: Vec<Vec<R::Elem>> = rest_sigs
                    .iter()
                    .map(|(zs, zo)| {
                        reference
                            .elements
                            .iter()
                            .copied()
                            .filter(|rz| reference.orders[rz] == *zo && word_signature(r, rx, rz) == *zs)
                            .collect()
                    })
                    .collect();
                for ry in &ys {
                    let mut stack: Vec<R::Elem> = vec![*rx, *ry];
                    if let Some(found) =
                        extend_rest(s, src, gens, reference, &rest_cands, &mut stack, &mut attempts)
                    {
                        return Some((found, attempts));
                    }
                }
            }
            None
        }
    }
}

fn extend_rest<S: Group, R: Group>(
    s: &S,
    src: &SubgroupHandle<S::Elem>,
    gens: &[S::Elem],
    reference: &Reference<R>,
    rest_cands: &[Vec<R::Elem>],
    stack: &mut Vec<R::Elem>,
    attempts: &mut usize,
) -> Option<Vec<R::Elem>> {
    let depth = stack.len() - 2;
    if depth == rest_cands.len() {
        *attempts += 1;
        return extend_map(s, src, gens, &reference.group, stack).map(|_| stack.clone());
    }
    for c in &rest_cands[depth] {
        stack.push(*c);
        if let Some(f) = extend_rest(s, src, gens, reference, rest_cands, stack, attempts) {
            return Some(f);
        }
        stack.pop();
    }
    None
}

/// Recognition with cached reference groups and a per-element-set result cache.
#[derive(Default)]
pub struct Recognizer {
    psl2: [OnceLock<Reference<Psl2>>; 5],
    psu3: [OnceLock<Reference<Psu3Identity>>; 3],
    cache: Mutex<FxHashMap<(u64, u64), Vec<(Vec<u8>, RecognitionResult)>>>,
}

impl Recognizer {
    pub fn new() -> Self {
        Self::default()
    }

    fn psl2_ref(&self, n: u32) -> &Reference<Psl2> {
        self.psl2[n as usize].get_or_init(|| {
            let g = Psl2::new(n).expect("supported exponent");
            let e = g.elements().to_vec();
            Reference::build(g, e)
        })
    }

    fn psu3_ref(&self, n: u32) -> &Reference<Psu3Identity> {
        self.psu3[n as usize].get_or_init(|| {
            let g = Psu3Identity::new(n).expect("supported exponent");
            let e = g.elements().to_vec();
            Reference::build(g, e)
        })
    }

    /// Recognise the subgroup `h` of `g`.
    pub fn recognize<G: Group>(&self, g: &G, h: &SubgroupHandle<G::Elem>) -> RecognitionResult {
        let key_bytes = format!("{:?}", h.elements()).into_bytes();
        let key = (h.order(), fxhash_bytes(&key_bytes));
        if let Some(bucket) = self.cache.lock().unwrap().get(&key) {
            if let Some((_, r)) = bucket.iter().find(|(k, _)| *k == key_bytes) {
                return r.clone();
            }
        }
        let r = self.recognize_uncached(g, h);
        self.cache.lock().unwrap().entry(key).or_default().push((key_bytes, r.clone()));
        r
    }

    fn recognize_uncached<G: Group>(&self, g: &G, h: &SubgroupHandle<G::Elem>) -> RecognitionResult {
        let order = h.order();
        let mut failures: Vec<Value> = Vec::new();
        let gens = self.source_generators(g, h);
        for n in 1..=4u32 {
            let q = 1u64 << n;
            if psl2_order(q) == order {
                match gens.as_ref().and_then(|gs| find_isomorphism(g, h, gs, self.psl2_ref(n)).map(|m| (gs, m))) {
                    Some((gs, (imgs, attempts))) => {
                        let reference = &self.psl2_ref(n).group;
                        return iso_result(RecognitionTag::PSL2, q, order, g, gs, reference, &imgs, attempts);
                    }
                    None => failures.push(json!({"candidate": format!("PSL2({q})"), "result": "no isomorphism found"})),
                }
            }
            if psu3_order(q) == order {
                if n > Psu3Identity::MAX_EXPONENT {
                    failures.push(json!({"candidate": format!("PSU3({q})"), "result": "no reference model at this size"}));
                    continue;
                }
                match gens.as_ref().and_then(|gs| find_isomorphism(g, h, gs, self.psu3_ref(n)).map(|m| (gs, m))) {
                    Some((gs, (imgs, attempts))) => {
                        let reference = &self.psu3_ref(n).group;
                        return iso_result(RecognitionTag::PSU3, q, order, g, gs, reference, &imgs, attempts);
                    }
                    None => failures.push(json!({"candidate": format!("PSU3({q})"), "result": "no isomorphism found"})),
                }
            }
        }
        if let Some(r) = frobenius_c4(g, h) {
            return r;
        }
        let mut r = RecognitionResult::new(RecognitionTag::Other, None, order);
        if !failures.is_empty() {
            r.evidence.insert("order_matches".into(), Value::Array(failures));
        }
        r
    }

    fn source_generators<G: Group>(&self, g: &G, h: &SubgroupHandle<G::Elem>) -> Option<Vec<G::Elem>> {
        let own = h.generators();
        if !own.is_empty() && own.len() <= 3 {
            return Some(own.to_vec());
        }
        find_generating_pair(g, h.elements(), 0x5EED)
    }
}

fn fxhash_bytes(b: &[u8]) -> u64 {
    use std::hash::{BuildHasher, BuildHasherDefault};
    BuildHasherDefault::<rustc_hash::FxHasher>::default().hash_one(b)
}

#[allow(clippy::too_many_arguments)]
fn iso_result<G: Group, R: Group>(
    tag: RecognitionTag,
    q: u64,
    order: u64,
    g: &G,
    gens: &[G::Elem],
    r: &R,
    imgs: &[R::Elem],
    attempts: usize,
) -> RecognitionResult {
    let mut res = RecognitionResult::new(tag, Some(q), order);
    let map: Vec<Value> = gens
        .iter()
        .zip(imgs)
        .map(|(x, y)| json!({"from": g.describe(x), "to": r.describe(y)}))
        .collect();
    res.evidence.insert("generator_map".into(), Value::Array(map));
    res.evidence.insert("candidate_maps_tried".into(), json!(attempts));
    res.evidence.insert("edges_checked".into(), json!(order * gens.len() as u64));
    res
}

/// Frobenius group whose kernel is the set of odd-order elements, abelian of
/// index 4, with a cyclic complement of order 4.
fn frobenius_c4<G: Group>(g: &G, h: &SubgroupHandle<G::Elem>) -> Option<RecognitionResult> {
    let order = h.order();
    if order % 4 != 0 || (order / 4) % 2 == 0 || order <= 4 {
        return None;
    }
    let odd: Vec<G::Elem> = h.elements().iter().copied().filter(|x| g.order(x) % 2 == 1).collect();
    if odd.len() as u64 != order / 4 {
        return None;
    }
    let kernel = SubgroupHandle::from_elements(Vec::new(), odd);
    if !is_closed(g, &kernel) || !is_abelian(g, &kernel) {
        return None;
    }
    let c = *h.elements().iter().find(|x| g.order(x) == 4)?;
    let frob = is_frobenius(g, h, &kernel);
    if !frob.is_frobenius {
        return None;
    }
    let c2 = g.mul(&c, &c);
    let inverted = kernel.elements().iter().all(|a| g.conj(a, &c2) == g.inv(a));
    let mut r = RecognitionResult::new(RecognitionTag::FrobeniusOddKernelC4, None, order);
    r.evidence.insert("kernel_order".into(), json!(kernel.order()));
    r.evidence.insert("kernel_invariants".into(), json!(abelian_invariants(g, &kernel)));
    r.evidence.insert("complement".into(), json!(g.describe(&c)));
    r.evidence.insert("kernel_inverted_by_complement_square".into(), json!(inverted));
    Some(r)
}

/// One-shot recognition without a shared cache.
pub fn recognize<G: Group>(g: &G, h: &SubgroupHandle<G::Elem>) -> RecognitionResult {
    Recognizer::new().recognize(g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::reference::Psl2;

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

    #[test]
    fn cyclic_of_order_four_is_other() {
        let c = Cyclic(4);
        let h = closure(&c, &[1], 10).unwrap();
        assert_eq!(recognize(&c, &h).tag, RecognitionTag::Other);
    }

    #[test]
    fn psl2_recognises_itself_from_other_generators() {
        for n in 1..=3 {
            let g = Psl2::new(n).unwrap();
            let gens = [g.upper(crate::field::FieldElement::ONE), g.antidiag(), g.diag(g.field().generator()).unwrap()];
            let h = closure(&g, &gens, 10_000).unwrap();
            let r = recognize(&g, &h);
            assert_eq!(r.tag, RecognitionTag::PSL2, "n={n}");
            assert_eq!(r.q, Some(1 << n));
        }
    }

    #[test]
    fn cyclic_of_order_sixty_is_not_psl2() {
        let c = Cyclic(60);
        let h = closure(&c, &[1], 100).unwrap();
        let r = recognize(&c, &h);
        assert_eq!(r.tag, RecognitionTag::Other);
        assert!(r.evidence.contains_key("order_matches"));
    }

    #[test]
    fn frobenius_of_order_twenty() {
        // AGL1(5): x -> ax + b, a in GF(5)*, as pairs (a, b)
        struct Agl;
        impl Group for Agl {
            type Elem = (u8, u8);
            fn identity(&self) -> (u8, u8) {
                (1, 0)
            }
            // apply x first then y
            fn mul(&self, x: &(u8, u8), y: &(u8, u8)) -> (u8, u8) {
                ((x.0 * y.0) % 5, (y.0 * x.1 + y.1) % 5)
            }
            fn inv(&self, x: &(u8, u8)) -> (u8, u8) {
                let ai = (1..5).find(|a| (a * x.0) % 5 == 1).unwrap();
                (ai, (5 - (ai * x.1) % 5) % 5)
            }
        }
        let h = closure(&Agl, &[(2, 0), (1, 1)], 100).unwrap();
        assert_eq!(h.order(), 20);
        let r = recognize(&Agl, &h);
        assert_eq!(r.tag, RecognitionTag::FrobeniusOddKernelC4);
        assert_eq!(r.evidence["kernel_invariants"], json!([5]));
    }
}
