//! Borel structure, strong embedding and the structural equation.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::field::{gcd, FieldElement};
use crate::group::{
    centralizer, closure, is_abelian, is_frobenius, is_normal, orbits, Group, Quotient, SubgroupHandle,
};
use crate::lemmas::{stream, Scan, Workbench};
use crate::report::CheckReport;
use crate::unitary::{psu3_order, GroupElement};

/// Orders, U-structure, the torus splitting and the Frobenius actions inside B.
pub fn check_prop3(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let q = wb.q();
    let d = gcd(3, q + 1);
    let mut r = wb.report("prop3");
    r.detail("d", d);

    // orders
    r.expect_eq("order_U", wb.u().order(), q.pow(3));
    r.expect_eq("order_Z", wb.z().order(), q);
    r.expect_eq("order_H", wb.h().order(), (q * q - 1) / d);
    r.expect_eq("order_H0", wb.h0().order(), q - 1);
    r.expect_eq("order_H1", wb.h1().order(), (q + 1) / d);
    r.expect_eq("order_B", wb.b().order(), q.pow(3) * (q * q - 1) / d);
    match wb.plan(ctx.order_g()) {
        Scan::Skip => r.note("order_G: enumeration of G skipped in algebraic mode"),
        _ if ctx.order_g() > 8_000_000 => r.note("order_G: G too large to enumerate"),
        _ => {
            let (distinct, non_members) = enumerate_group(wb);
            r.expect_eq("order_G", distinct, q.pow(3) * (q * q - 1) * (q.pow(3) + 1) / d);
            r.claim("enumerated_elements_unitary", distinct, non_members, None);
        }
    }
    r.expect_eq("order_G_formula_vs_ctx", ctx.order_g(), psu3_order(q));

    // U is a Sylow 2-subgroup of class 2 and exponent 4 with
    // Z(U) = U' = Phi(U) = Omega_1(U) = Z
    let u = wb.u();
    let z = wb.z();
    let ue = u.elements();
    let centre = centralizer(ctx, ue, u.generating_set());
    let commutators: Vec<GroupElement> = {
        let mut c: Vec<GroupElement> =
            ue.par_iter().flat_map_iter(|x| ue.iter().map(move |y| ctx.commutator(x, y))).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let derived = closure(ctx, &commutators, usize::MAX).expect("uncapped");
    let mut phi_gens: Vec<GroupElement> = ue.iter().map(|x| ctx.mul(x, x)).collect();
    phi_gens.extend_from_slice(&commutators);
    phi_gens.sort_unstable();
    phi_gens.dedup();
    let frattini = closure(ctx, &phi_gens, usize::MAX).expect("uncapped");
    let inv_set: Vec<GroupElement> = ue.iter().copied().filter(|x| ctx.is_identity(&ctx.mul(x, x))).collect();
    let omega1 = closure(ctx, &inv_set, usize::MAX).expect("uncapped");
    r.detail("order_Z(U)", centre.order());
    r.detail("order_U'", derived.order());
    r.detail("order_Phi(U)", frattini.order());
    r.detail("order_Omega1(U)", omega1.order());
    r.check("Z(U)=Z", centre.same_elements(z), || format!("|Z(U)| = {}", centre.order()));
    r.check("U'=Z", derived.same_elements(z), || format!("|U'| = {}", derived.order()));
    r.check("Phi(U)=Z", frattini.same_elements(z), || format!("|Phi(U)| = {}", frattini.order()));
    r.check("Omega1(U)=Z", omega1.same_elements(z), || format!("|Omega1(U)| = {}", omega1.order()));
    let orders: Vec<u64> = ue.iter().map(|x| ctx.order(x)).collect();
    let exponent = orders.iter().copied().max().unwrap_or(1);
    let bad_orders = orders.iter().filter(|&&o| 4 % o != 0).count() as u64;
    r.claim("orders_divide_4", ue.len() as u64, bad_orders, None);
    r.expect_eq("exponent_U", exponent, 4);
    let class_two = !is_abelian(ctx, u) && derived.is_subset_of(&centre);
    r.check("class_2", class_two, || "U abelian or U' not central".into());
    r.check("U_normal_in_B", is_normal(ctx, wb.b(), u), || "U not normal in B".into());
    let uh = u.intersection(wb.h());
    r.expect_eq("order_U_cap_H", uh.order(), 1);
    r.check("U_Sylow_in_G", (ctx.order_g() / u.order()) % 2 == 1, || "index of U is even".into());
    let h_gen_order = ctx.order(&ctx.named().h_gen);
    r.expect_eq("H_cyclic_generator_order", h_gen_order, wb.h().order());

    // H = H0 x H1, H1 = C_H(Z), coprime orders
    let (h, h0, h1) = (wb.h(), wb.h0(), wb.h1());
    r.expect_eq("order_H0_cap_H1", h0.intersection(h1).order(), 1);
    r.check("H0_H1_commute", ctx.commutes(&ctx.named().h0_gen, &ctx.named().h1_gen), || "H0, H1 do not commute".into());
    r.expect_eq("order_H0_times_H1", h0.order() * h1.order(), h.order());
    let c_h_z = centralizer(ctx, h.elements(), z.generating_set());
    r.check("H1=C_H(Z)", c_h_z.same_elements(h1), || format!("|C_H(Z)| = {}", c_h_z.order()));
    r.expect_eq("gcd_H0_H1", gcd(h0.order(), h1.order()), 1);

    // U x| H0 Frobenius, H0 transitive on Z#
    let zsharp: Vec<GroupElement> = z.elements().iter().copied().filter(|x| !ctx.is_identity(x)).collect();
    if h0.order() > 1 {
        let mut gens = u.generators().to_vec();
        gens.push(ctx.named().h0_gen);
        let uh0 = closure(ctx, &gens, usize::MAX).expect("uncapped");
        let fr = is_frobenius(ctx, &uh0, u);
        r.check("UH0_Frobenius_kernel_U", fr.is_frobenius, || format!("{:?}", fr));
    } else {
        r.note("H0 is trivial at q = 2, so U x| H0 = U is not a Frobenius group; only transitivity is checked");
    }
    match orbits(&zsharp, &[ctx.named().h0_gen], h0.order(), |x, g| ctx.conj(x, g)) {
        Ok(o) => r.expect_eq("H0_orbits_on_Z#", o.len(), 1),
        Err(e) => r.check("H0_orbits_on_Z#", false, || e.to_string()),
    }

    // B/Z Frobenius with kernel U/Z; H-orbits on (U/Z)#
    let quo = Quotient::new(ctx, wb.b(), z);
    let bz = quo.image(wb.b());
    let uz = quo.image(u);
    if h.order() > 1 {
        let fr = is_frobenius(&quo, &bz, &uz);
        r.check("B/Z_Frobenius_kernel_U/Z", fr.is_frobenius, || format!("{:?}", fr));
    } else {
        r.note("H is trivial at q = 2, so B/Z = U/Z is not a Frobenius group; only the orbit count is checked");
    }
    let points: Vec<GroupElement> = uz.elements().iter().copied().filter(|x| !quo.is_identity(x)).collect();
    match orbits(&points, &[ctx.named().h_gen], h.order(), |x, g| quo.conj(x, &quo.project(g))) {
        Ok(o) => {
            let want = if (q - 1).is_multiple_of(3) { 1 } else { 3 };
            r.detail("H_orbit_sizes_on_(U/Z)#", o.iter().map(|x| x.len()).collect::<Vec<_>>());
            r.expect_eq("H_orbits_on_(U/Z)#", o.len(), want);
        }
        Err(e) => r.check("H_orbits_on_(U/Z)#", false, || e.to_string()),
    }
    r.finish(start)
}

/// Count distinct enumerated elements and non-members, over every rank.
fn enumerate_group(wb: &Workbench) -> (u64, u64) {
    let ctx = wb.ctx();
    let bits = ctx.entry_bits();
    let mut keys: Vec<u64> = (0..ctx.order_g())
        .into_par_iter()
        .map(|i| ctx.unrank(i).expect("rank in range").pack(bits) as u64)
        .collect();
    let non_members = (0..ctx.order_g())
        .into_par_iter()
        .filter(|&i| !ctx.is_member(&ctx.unrank(i).expect("rank in range")))
        .count() as u64;
    keys.par_sort_unstable();
    keys.dedup();
    (keys.len() as u64, non_members)
}

/// `|B cap B^g|` for g given together with its inverse.
fn borel_intersection(wb: &Workbench, g: &GroupElement) -> u64 {
    let ctx = wb.ctx();
    let gi = ctx.inv(g);
    // b in B^g  <=>  g b g^-1 in B
    wb.b().elements().iter().filter(|b| ctx.conj_first_column_in_b(&gi, g, b)).count() as u64
}

/// `|B cap B^g|` is odd (and equal to |H|) for every g outside B.
pub fn check_strong_embedding(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("strong-embedding");
    let b = wb.b();
    let v = ctx.named().v;
    let h_order = wb.h().order();

    // fast mode: B cap B^v = H, which has odd order
    let k_elems: Vec<GroupElement> = b.elements().iter().copied().filter(|x| ctx.conj(x, &v).is_upper_triangular()).collect();
    let k = SubgroupHandle::from_elements(Vec::new(), k_elems);
    let fast = k.order();
    r.detail("fast_order_B_cap_B^v", fast);
    r.check("fast_B_cap_B^v=H", k.same_elements(wb.h()), || format!("|B cap B^v| = {fast}"));
    r.check("fast_odd", fast % 2 == 1, || format!("|B cap B^v| = {fast}"));

    let outside = ctx.order_g() - ctx.order_b();
    let plan = wb.plan(outside);
    let ranks: Vec<u64> = match plan {
        Scan::All => (ctx.order_b()..ctx.order_g()).collect(),
        Scan::Sample(n) => wb.sample_ranks(stream::STRONG, n, ctx.order_b(), ctx.order_g()),
        Scan::Skip => {
            r.note("outside elements not scanned in algebraic mode; only g = v was checked");
            Vec::new()
        }
    };
    // B^g depends only on the right coset Bg; memoise per coset when the direct scan is too large.
    let direct = (ranks.len() as u64).saturating_mul(b.order()) <= 200_000_000;
    if !direct && !ranks.is_empty() {
        r.note("intersections computed once per right coset Bg, since B^(bg) = B^g");
    }
    let mut memo: FxHashMap<u64, u64> = FxHashMap::default();
    let counts: Vec<(u64, u64)> = if direct {
        ranks
            .par_iter()
            .map(|&i| (i, borel_intersection(wb, &ctx.unrank(i).expect("rank in range"))))
            .collect()
    } else {
        let mut labels: Vec<u64> = ranks.iter().map(|&i| ctx.coset_label(&ctx.unrank(i).expect("rank"))).collect();
        labels.sort_unstable();
        labels.dedup();
        let per: Vec<(u64, u64)> = labels
            .par_iter()
            .map(|&l| (l, borel_intersection(wb, &ctx.coset_rep(l))))
            .collect();
        memo.extend(per);
        ranks
            .iter()
            .map(|&i| (i, memo[&ctx.coset_label(&ctx.unrank(i).expect("rank"))]))
            .collect()
    };
    let mut odd_bad = 0;
    let mut eq_bad = 0;
    let mut first_bad: Option<String> = None;
    for &(i, c) in &counts {
        if c % 2 == 0 {
            odd_bad += 1;
            first_bad.get_or_insert_with(|| format!("g = {} has |B cap B^g| = {c}", ctx.unrank(i).unwrap()));
        }
        if c != h_order || c != fast {
            eq_bad += 1;
        }
    }
    let n = counts.len() as u64;
    r.claim("odd_intersection", n, odd_bad, first_bad);
    r.claim("intersection_equals_fast_mode", n, eq_bad, None);
    r.detail("outside_elements_scanned", n);
    r.detail("scan", match plan {
        Scan::All => "all elements outside B",
        Scan::Sample(_) => "seeded sample of elements outside B",
        Scan::Skip => "g = v only",
    });
    r.finish(start)
}

/// Exactly one z in Z# satisfies (vz)^3 = 1, and it is u0.
pub fn check_eq6(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("eq6");
    let v = ctx.named().v;
    let one = ctx.identity();
    let zsharp: Vec<GroupElement> = wb.z().elements().iter().copied().filter(|x| *x != one).collect();
    let sols: Vec<GroupElement> = zsharp
        .iter()
        .copied()
        .filter(|z| ctx.pow(&ctx.mul(&v, z), 3) == one)
        .collect();
    r.detail("Z#_size", zsharp.len());
    r.detail("solutions", sols.iter().map(|s| s.to_hex()).collect::<Vec<_>>());
    r.expect_eq("solution_count", sols.len(), 1);
    let u0 = ctx.named().u0;
    r.check("solution_is_u0", sols == vec![u0], || format!("solutions {sols:?}"));
    let u01 = ctx.u_elem(FieldElement::ZERO, FieldElement::ONE).expect("u(0,1) is valid");
    r.detail("u0_is_u(0,1)", u0 == u01);
    let others_fail = zsharp.iter().filter(|z| **z != u0).all(|z| ctx.pow(&ctx.mul(&v, z), 3) != one);
    r.check("other_z_fail", others_fail, || "another z solves (vz)^3 = 1".into());
    let vu0 = ctx.mul(&v, &u0);
    r.check("(vu0)^2=u0v", ctx.mul(&vu0, &vu0) == ctx.mul(&u0, &v), || "(vu0)^2 != u0 v".into());
    r.check(
        "vu0v=u0vu0",
        ctx.mul(&vu0, &v) == ctx.mul(&ctx.mul(&u0, &v), &u0),
        || "v u0 v != u0 v u0".into(),
    );
    let s3 = closure(ctx, &[u0, v], 1000).map(|h| h.order()).unwrap_or(0);
    r.expect_eq("order_<u0,v>", s3, 6);
    r.finish(start)
}

/// `v t v = u0^(h_t^-1) h_t^2 v u0^(h_t^-1)` for every t in Z#.
pub fn check_eq7(wb: &Workbench) -> CheckReport {
    let start = wb.clock();
    let ctx = wb.ctx();
    let mut r = wb.report("eq7");
    let v = ctx.named().v;
    let u0 = ctx.named().u0;
    let one = ctx.identity();
    let h0 = wb.h0().elements();
    let mut bad_unique = 0;
    let mut bad_eq = 0;
    let mut wit = None;
    let zsharp: Vec<GroupElement> = wb.z().elements().iter().copied().filter(|x| *x != one).collect();
    for t in &zsharp {
        let hs: Vec<&GroupElement> = h0.iter().filter(|h| ctx.conj(&u0, h) == *t).collect();
        let [ht] = hs.as_slice() else {
            bad_unique += 1;
            wit.get_or_insert_with(|| format!("t = {t}: {} candidates for h_t", hs.len()));
            continue;
        };
        let hti = ctx.inv(ht);
        let z5 = ctx.conj(&u0, &hti);
        let lhs = ctx.mul(&ctx.mul(&v, t), &v);
        let rhs = ctx.mul(&ctx.mul(&ctx.mul(&z5, &ctx.mul(ht, ht)), &v), &z5);
        if lhs != rhs {
            bad_eq += 1;
            wit.get_or_insert_with(|| format!("t = {t}: vtv = {lhs}, rhs = {rhs}"));
        }
    }
    let n = zsharp.len() as u64;
    r.claim("h_t_unique", n, bad_unique, wit.clone());
    r.claim("vtv_identity", n, bad_eq, wit);
    r.finish(start)
}
