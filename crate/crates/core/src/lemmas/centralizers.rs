//! Centralisers and normalisers of the torus pieces H0, H1 and of v.

use rayon::prelude::*;

use crate::group::{centralizer, closure, normalizer, Group, RecognitionTag, SubgroupHandle};
use crate::lemmas::{stream, Ambient, Workbench};
use crate::report::CheckReport;
use crate::unitary::GroupElement;

/// Points of G/B fixed by `t`.
fn fixed_points(wb: &Workbench, t: &GroupElement) -> Vec<u64> {
    let ctx = wb.ctx();
    (0..ctx.coset_count())
        .into_par_iter()
        .filter(|&l| ctx.coset_label(&ctx.mul(&ctx.coset_rep(l), t)) == l)
        .collect()
}

/// H<v>, the stabiliser of the pair {B, Bv} in G/B.
fn h_with_v(wb: &Workbench) -> SubgroupHandle<GroupElement> {
    let nm = wb.ctx().named();
    closure(wb.ctx(), &[nm.h_gen, nm.v], usize::MAX).expect("uncapped closure")
}

fn product_set(wb: &Workbench, a: &SubgroupHandle<GroupElement>, b: &SubgroupHandle<GroupElement>) -> SubgroupHandle<GroupElement> {
    let ctx = wb.ctx();
    let elems = a.elements().iter().flat_map(|x| b.elements().iter().map(move |y| ctx.mul(x, y))).collect();
    SubgroupHandle::from_elements(Vec::new(), elems)
}

/// C_G(t) = H for t in H0#, C_B(v) = H1, B cap B^v = H and N_G(H) = H<v>.
pub fn check_lemma3(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("lemma3");
    let one = ctx.identity();
    let v = ctx.named().v;
    let h = wb.h();
    let hv = h_with_v(wb);
    let inf = ctx.order_u();
    let h0s: Vec<GroupElement> = wb.h0().elements().iter().copied().filter(|x| *x != one).collect();
    let amb = wb.ambient(stream::LEMMA3);
    r.detail("centraliser_scan", amb.label());

    if h0s.is_empty() {
        r.note("H0 is trivial at q = 2; the centraliser claim is vacuous");
    }
    for t in &h0s {
        match &amb {
            Ambient::Full(all) => {
                let c = centralizer(ctx, all, &[*t]);
                r.check("C_G(t)=H", c.same_elements(h), || format!("t = {t}: |C_G(t)| = {}", c.order()));
            }
            Ambient::Sample(s) => {
                let bad: Vec<&GroupElement> = s.iter().filter(|x| ctx.commutes(x, t) && !h.contains(x)).collect();
                r.claim("C_G(t)=H", s.len() as u64, bad.len() as u64, bad.first().map(|x| format!("t = {t}, x = {x}")));
            }
            Ambient::Skipped => {}
        }
        // fixed points {B, Bv} force C_G(t) <= H<v>; v inverts t
        let fp = fixed_points(wb, t);
        r.check("fixed_points_of_t", fp == vec![0, inf], || format!("t = {t}: {fp:?}"));
        let c = centralizer(ctx, hv.elements(), &[*t]);
        r.check("C_H<v>(t)=H", c.same_elements(h), || format!("t = {t}: |C| = {}", c.order()));
    }
    if let Ambient::Skipped = amb {
        r.note("algebraic mode: C_G(t) = H follows from the fixed points of t on G/B and C_H<v>(t) = H");
    }

    let b = wb.b();
    let cbv = centralizer(ctx, b.elements(), &[v]);
    r.check("C_B(v)=H1", cbv.same_elements(wb.h1()), || format!("|C_B(v)| = {}", cbv.order()));
    let bbv = SubgroupHandle::from_elements(
        Vec::new(),
        b.elements().iter().copied().filter(|x| ctx.conj(x, &v).is_upper_triangular()).collect(),
    );
    r.check("B_cap_B^v=H", bbv.same_elements(h), || format!("|B cap B^v| = {}", bbv.order()));

    r.expect_eq("order_H<v>", hv.order(), 2 * h.order());
    if h.order() == 1 {
        r.note("H is trivial at q = 2; N_G(H) = G there and the normaliser claim is not applicable");
    } else {
        match &amb {
            Ambient::Full(all) => {
                let n = normalizer(ctx, all, h);
                r.check("N_G(H)=H<v>", n.same_elements(&hv), || format!("|N_G(H)| = {}", n.order()));
            }
            Ambient::Sample(s) => {
                let bad: Vec<&GroupElement> = s
                    .iter()
                    .filter(|x| h.generating_set().iter().all(|g| h.contains(&ctx.conj(g, x))) && !hv.contains(x))
                    .collect();
                r.claim("N_G(H)=H<v>", s.len() as u64, bad.len() as u64, bad.first().map(|x| format!("x = {x}")));
            }
            Ambient::Skipped => {
                let fp = fixed_points(wb, &ctx.named().h_gen);
                r.check("fixed_points_of_H", fp == vec![0, inf], || format!("{fp:?}"));
                r.note("algebraic mode: N_G(H) <= H<v> follows from the two fixed points of H on G/B");
            }
        }
        let normal = hv.elements().iter().all(|x| h.generating_set().iter().all(|g| h.contains(&ctx.conj(g, x))));
        r.check("H<v>_normalises_H", normal, || "an element of H<v> moves H".into());
    }
    r.finish(start)
}

/// L = <Z, H0, v> is PSL2(q), C_G(H1) = H1 x L and N_G(<t>) = C_G(H1) for t in H1#.
pub fn check_lemma4(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("lemma4");
    let one = ctx.identity();
    let l = wb.l();
    let h1 = wb.h1();
    let rec = wb.recognizer().recognize(ctx, l);
    r.detail("L_recognition", &rec);
    r.check("L_is_PSL2(q)", rec.tag == RecognitionTag::PSL2 && rec.q == Some(wb.q()), || {
        format!("{:?} q = {:?}", rec.tag, rec.q)
    });
    r.expect_eq("order_L", l.order(), crate::unitary::psl2_order(wb.q()));

    if h1.order() == 1 {
        r.note("H1 is trivial at q = 2; C_G(H1) = G there and the centraliser claims are not applicable");
        return r.finish(start);
    }
    // direct product H1 x L
    let commute = h1.generating_set().iter().all(|x| l.generating_set().iter().all(|y| ctx.commutes(x, y)));
    r.check("H1_centralises_L", commute, || "a generator of H1 moves L".into());
    let meet = h1.intersection(l);
    r.expect_eq("order_H1_cap_L", meet.order(), 1);
    let hl = product_set(wb, h1, l);
    r.expect_eq("order_H1xL", hl.order(), h1.order() * l.order());

    let amb = wb.ambient(stream::LEMMA4);
    r.detail("centraliser_scan", amb.label());
    let h1g = ctx.named().h1_gen;
    match &amb {
        Ambient::Full(all) => {
            let c = centralizer(ctx, all, &[h1g]);
            r.check("C_G(H1)=H1xL", c.same_elements(&hl), || format!("|C_G(H1)| = {}", c.order()));
        }
        Ambient::Sample(s) => {
            let bad: Vec<&GroupElement> = s.iter().filter(|x| ctx.commutes(x, &h1g) && !hl.contains(x)).collect();
            r.claim("C_G(H1)=H1xL", s.len() as u64, bad.len() as u64, bad.first().map(|x| format!("x = {x}")));
        }
        Ambient::Skipped => r.note("algebraic mode: C_G(H1) <= H1 x L is not scanned"),
    }

    for t in h1.elements().iter().filter(|x| **x != one) {
        let tt = closure(ctx, &[*t], usize::MAX).expect("uncapped closure");
        let normalises = |x: &GroupElement| tt.contains(&ctx.conj(t, x));
        match &amb {
            Ambient::Full(all) => {
                let n = SubgroupHandle::from_elements(Vec::new(), all.par_iter().copied().filter(normalises).collect());
                r.check("N_G(<t>)=C_G(H1)", n.same_elements(&hl), || format!("t = {t}: |N| = {}", n.order()));
            }
            Ambient::Sample(s) => {
                let bad: Vec<&GroupElement> = s.iter().filter(|x| normalises(x) && !hl.contains(x)).collect();
                r.claim("N_G(<t>)=C_G(H1)", s.len() as u64, bad.len() as u64, bad.first().map(|x| format!("t = {t}, x = {x}")));
            }
            Ambient::Skipped => {}
        }
        let inside = hl.elements().iter().all(normalises);
        r.check("H1xL_normalises_<t>", inside, || format!("t = {t}"));
    }
    r.finish(start)
}
