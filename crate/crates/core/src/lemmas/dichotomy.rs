//! The subgroups <u, v> for u of order 4 in U: Frobenius or simple.

use rand::seq::SliceRandom;
use rustc_hash::FxHashMap;
use serde::Serialize;
use serde_json::json;

use crate::group::{closure, closure_bounded, Closure, Group, RecognitionResult, RecognitionTag, SubgroupHandle};
use crate::lemmas::{stream, Workbench, SUBGROUP_SAMPLES};
use crate::report::{CheckReport, Mode};
use crate::unitary::GroupElement;

/// Closures up to this size are attempted before the orbit computation.
const FIRST_CAP: usize = 2_000;

/// Classification of <x, v>.
#[derive(Clone, Debug, Serialize)]
pub struct UvClass {
    pub generator: GroupElement,
    pub result: RecognitionResult,
    /// Elements, when the closure completed below the ambient order.
    #[serde(skip)]
    pub elements: Option<SubgroupHandle<GroupElement>>,
    pub capped: bool,
}

impl UvClass {
    pub fn is_simple(&self) -> bool {
        self.result.is_simple_branch()
    }
}

/// Orbit of the point `point_of(1)` under <gens>, and the Schreier
/// generators of its stabiliser.
fn orbit_schreier(
    wb: &Workbench,
    gens: &[GroupElement],
    point_of: impl Fn(&GroupElement) -> u64,
) -> (u64, Vec<GroupElement>) {
    let ctx = wb.ctx();
    let one = ctx.identity();
    let mut transversal: FxHashMap<u64, GroupElement> = FxHashMap::default();
    transversal.insert(point_of(&one), one);
    let mut queue = vec![one];
    let mut head = 0;
    let mut schreier: Vec<GroupElement> = Vec::new();
    while head < queue.len() {
        let t = queue[head];
        head += 1;
        for g in gens {
            let tg = ctx.mul(&t, g);
            let p = point_of(&tg);
            match transversal.get(&p) {
                Some(tp) => {
                    let s = ctx.mul(&tg, &ctx.inv(tp));
                    if s != one {
                        schreier.push(s);
                    }
                }
                None => {
                    transversal.insert(p, tg);
                    queue.push(tg);
                }
            }
        }
    }
    (transversal.len() as u64, schreier)
}

/// Orbit length of the point B under <gens> and the order of <gens> cap B.
///
/// The stabiliser is a subgroup of B; its order is the length of its orbit
/// on the point Bv times the order of the point stabiliser, a subgroup of H.
pub fn borel_stabiliser(wb: &Workbench, gens: &[GroupElement]) -> (u64, u64) {
    let ctx = wb.ctx();
    let v = ctx.named().v;
    let (orbit, mut schreier) = orbit_schreier(wb, gens, |x| ctx.coset_label(x));
    // a few random Schreier generators usually generate the whole stabiliser
    schreier.shuffle(&mut wb.rng(stream::STABILISER));
    let mut k = 4usize;
    loop {
        let sub = &schreier[..k.min(schreier.len())];
        let (orbit_v, mut inner) = orbit_schreier(wb, sub, |x| ctx.coset_label(&ctx.mul(&v, x)));
        inner.sort_unstable();
        inner.dedup();
        let inner_order = closure(ctx, &inner, ctx.order_h() as usize).expect("subgroup of H").order();
        let order = orbit_v * inner_order;
        if order == ctx.order_b() || k >= schreier.len() {
            return (orbit, order);
        }
        k *= 4;
    }
}

/// Close <x, v> and recognise it. Larger subgroups get their order from the
/// orbit of B and its stabiliser; one containing B and v is all of G
/// (it contains B u BvB).
pub fn classify_uv(wb: &Workbench, x: GroupElement) -> UvClass {
    let ctx = wb.ctx();
    let v = ctx.named().v;
    let gens = [x, v];
    let order_g = ctx.order_g();
    let complete = |h: SubgroupHandle<GroupElement>| {
        let whole = h.order() == order_g;
        let mut result = wb.recognizer().recognize(ctx, &h);
        if whole && result.tag != RecognitionTag::PSU3 {
            result = RecognitionResult::ambient_psu3(wb.q(), order_g, "equals the ambient group");
        }
        result.evidence.insert("equals_ambient".into(), json!(whole));
        let elements = (!whole).then_some(h);
        UvClass { generator: x, result, elements, capped: false }
    };
    if let Closure::Complete(h) = closure_bounded(ctx, &gens, FIRST_CAP.min(wb.cfg().cap)) {
        return complete(h);
    }
    let (orbit, stab) = borel_stabiliser(wb, &gens);
    let order = orbit * stab;
    if stab == ctx.order_b() {
        let mut result = RecognitionResult::ambient_psu3(wb.q(), order, "contains B and v");
        result.evidence.insert("equals_ambient".into(), json!(order == order_g));
        return UvClass { generator: x, result, elements: None, capped: false };
    }
    if order as usize <= wb.cfg().cap {
        if let Closure::Complete(h) = closure_bounded(ctx, &gens, order as usize + 1) {
            return complete(h);
        }
    }
    let mut result = RecognitionResult::ambient_psu3(wb.q(), order, "undecided");
    result.tag = RecognitionTag::Other;
    result.q = None;
    UvClass { generator: x, result, elements: None, capped: true }
}

fn order_four_elements(wb: &Workbench, r: &mut CheckReport, salt: u64) -> Vec<GroupElement> {
    let ctx = wb.ctx();
    let mut all: Vec<GroupElement> = wb.u().elements().iter().copied().filter(|x| ctx.order(x) == 4).collect();
    r.detail("order_four_elements", all.len());
    if wb.cfg().mode != Mode::Exhaustive && all.len() > SUBGROUP_SAMPLES {
        let mut rng = wb.rng(salt);
        all = all.choose_multiple(&mut rng, SUBGROUP_SAMPLES).copied().collect();
        all.sort_unstable();
        r.note(format!("{SUBGROUP_SAMPLES} order-4 elements of U sampled"));
    }
    all
}

fn below_range(wb: &Workbench, r: &mut CheckReport) -> bool {
    if wb.q() < 4 {
        r.note("not applicable at q = 2: G is solvable there");
        true
    } else {
        false
    }
}

/// <u, v> is a Frobenius group with odd abelian kernel and cyclic complement
/// <u>, or PSU3(q') for some q'.
pub fn check_lemma8(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("lemma8");
    if below_range(wb, &mut r) {
        return r.finish(start);
    }
    let us = order_four_elements(wb, &mut r, stream::LEMMA8);
    let v = ctx.named().v;
    let (mut frob, mut simple, mut other) = (0u64, 0u64, 0u64);
    let mut branch_orders = std::collections::BTreeMap::<String, u64>::new();
    for u in &us {
        let c = classify_uv(wb, *u);
        if c.capped {
            r.mark_cap_exceeded(&format!("<{u}, v>"), wb.cfg().cap);
            continue;
        }
        let label = match (c.result.tag, c.result.q) {
            (RecognitionTag::PSU3, Some(q)) => format!("PSU3({q})"),
            (t, _) => format!("{t:?}:{}", c.result.order),
        };
        *branch_orders.entry(label).or_default() += 1;
        match c.result.tag {
            RecognitionTag::FrobeniusOddKernelC4 => {
                frob += 1;
                let h = c.elements.as_ref().expect("complete closure");
                let u2 = ctx.mul(u, u);
                let kernel: Vec<&GroupElement> = h.elements().iter().filter(|a| ctx.order(a) % 2 == 1).collect();
                let inverted = kernel.iter().all(|a| ctx.conj(a, &u2) == ctx.inv(a) && ctx.conj(a, &v) == ctx.inv(a));
                r.check("kernel_inverted_by_u^2_and_v", inverted, || format!("u = {u}"));
            }
            RecognitionTag::PSU3 => simple += 1,
            _ => {
                other += 1;
                r.witness(format!("u = {u}: <u, v> of order {} unrecognised", c.result.order));
            }
        }
    }
    r.claim("dichotomy", us.len() as u64, other, None);
    r.detail("frobenius_branch", frob);
    r.detail("simple_branch", simple);
    r.detail("branches", branch_orders);
    r.finish(start)
}

/// For each u, at most one of the subgroups <uz, v> (z in Z) is not simple.
pub fn check_lemma9(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("lemma9");
    if below_range(wb, &mut r) {
        return r.finish(start);
    }
    let us = order_four_elements(wb, &mut r, stream::LEMMA9);
    let z = wb.z();
    let mut classes: std::collections::BTreeMap<GroupElement, UvClass> = Default::default();
    let mut worst = 0usize;
    let mut violations = 0u64;
    for u in &us {
        let mut nonsimple: Vec<Vec<GroupElement>> = Vec::new();
        for zz in z.elements() {
            let x = ctx.mul(u, zz);
            let c = classes.entry(x).or_insert_with(|| classify_uv(wb, x));
            if c.capped {
                r.mark_cap_exceeded(&format!("<{x}, v>"), wb.cfg().cap);
                continue;
            }
            if !c.is_simple() {
                if let Some(h) = c.elements.as_ref() {
                    nonsimple.push(h.elements().to_vec());
                }
            }
        }
        // <uz, v> can coincide for different z (z = u^2 gives <u^-1, v>)
        nonsimple.sort_unstable();
        nonsimple.dedup();
        worst = worst.max(nonsimple.len());
        if nonsimple.len() > 1 {
            violations += 1;
            r.witness(format!("u = {u}: {} distinct non-simple subgroups", nonsimple.len()));
        }
    }
    r.claim("at_most_one_non_simple", us.len() as u64, violations, None);
    r.detail("max_non_simple_per_u", worst);
    r.detail("subgroups_classified", classes.len());
    r.note("non-simple subgroups are counted as distinct subgroups, not per z");
    r.finish(start)
}
