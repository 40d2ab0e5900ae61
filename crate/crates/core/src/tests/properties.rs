use proptest::prelude::*;

use crate::recon::{L2Model, Letter};
use crate::tower::TowerSpec;
use crate::{BruhatCoord, FieldCtx, FieldElement, Group, UnitaryCtx};

fn field_and_elems(k: usize) -> impl Strategy<Value = (u32, Vec<u16>)> {
    (1u32..=16).prop_flat_map(move |m| (Just(m), prop::collection::vec(0u16..=(((1u32 << m) - 1) as u16), k)))
}

fn group_and_ranks(k: usize) -> impl Strategy<Value = (u32, Vec<u64>)> {
    (1u32..=4).prop_flat_map(move |n| {
        let order = UnitaryCtx::new(n).unwrap().order_g();
        (Just(n), prop::collection::vec(0..order, k))
    })
}

fn letter() -> impl Strategy<Value = (u8, u16)> {
    (0u8..3, any::<u16>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn field_axioms((m, xs) in field_and_elems(3)) {
        let f = FieldCtx::new(m).unwrap();
        let [a, b, c] = [FieldElement(xs[0]), FieldElement(xs[1]), FieldElement(xs[2])];
        prop_assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(a, a), FieldElement(0));
        prop_assert_eq!(f.mul(a, FieldElement(1)), a);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement(1));
            prop_assert_eq!(f.exp(f.log(a).unwrap()), a);
        } else {
            prop_assert!(f.inv(a).is_err());
        }
        // squaring is additive and multiplicative
        prop_assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
        prop_assert_eq!(f.frobenius(f.mul(a, b)), f.mul(f.frobenius(a), f.frobenius(b)));
        prop_assert_eq!(f.frobenius_pow(a, m), a);
    }

    #[test]
    fn subfield_embedding_is_a_ring_map(big in 1u32..=16, ys in prop::collection::vec(any::<u16>(), 2)) {
        let divisors: Vec<u32> = (1..=big).filter(|d| big % d == 0).collect();
        let small = divisors[ys[0] as usize % divisors.len()];
        let (s, b) = (FieldCtx::new(small).unwrap(), FieldCtx::new(big).unwrap());
        let mask = ((1u32 << small) - 1) as u16;
        let (x, y) = (FieldElement(ys[0] & mask), FieldElement(ys[1] & mask));
        let e = |a| FieldCtx::embed(&s, &b, a).unwrap();
        prop_assert_eq!(e(s.mul(x, y)), b.mul(e(x), e(y)));
        prop_assert_eq!(e(s.add(x, y)), b.add(e(x), e(y)));
    }

    #[test]
    fn group_axioms_on_ranked_elements((n, ranks) in group_and_ranks(3)) {
        let ctx = UnitaryCtx::new(n).unwrap();
        let [a, b, c] = [0, 1, 2].map(|i| ctx.unrank(ranks[i]).unwrap());
        prop_assert!(ctx.is_member(&a) && ctx.is_canonical(&a));
        prop_assert_eq!(ctx.mul(&a, &ctx.mul(&b, &c)), ctx.mul(&ctx.mul(&a, &b), &c));
        prop_assert_eq!(ctx.mul(&a, &ctx.inv(&a)), ctx.identity());
        prop_assert_eq!(ctx.mul(&ctx.identity(), &a), a);
        let ab = ctx.mul(&a, &b);
        prop_assert!(ctx.is_member(&ab) && ctx.is_canonical(&ab));
        prop_assert_eq!(ctx.inv(&ab), ctx.mul(&ctx.inv(&b), &ctx.inv(&a)));
    }

    #[test]
    fn rank_and_bruhat_round_trip((n, ranks) in group_and_ranks(1)) {
        let ctx = UnitaryCtx::new(n).unwrap();
        let g = ctx.unrank(ranks[0]).unwrap();
        prop_assert_eq!(ctx.rank(&g).unwrap(), ranks[0]);
        let c = ctx.bruhat_decompose(&g).unwrap();
        prop_assert_eq!(ctx.bruhat_recompose(&c).unwrap(), g);
        prop_assert_eq!(matches!(c, BruhatCoord::Borel { .. }), g.is_upper_triangular());
    }

    #[test]
    fn coset_label_is_constant_on_right_cosets((n, ranks) in group_and_ranks(2), ui in any::<u64>(), li in any::<u16>()) {
        let ctx = UnitaryCtx::new(n).unwrap();
        let g = ctx.unrank(ranks[0]).unwrap();
        let u = ctx.u_from_index(ui % ctx.order_u());
        let lambda = ctx.big_field().exp(li as u64);
        let b = ctx.mul(&u, &ctx.h_elem(lambda).unwrap());
        prop_assert_eq!(ctx.coset_label(&ctx.mul(&b, &g)), ctx.coset_label(&g));
        let l = ctx.coset_label(&g);
        prop_assert_eq!(ctx.coset_label(&ctx.coset_rep(l)), l);
    }

    #[test]
    fn tower_embedding_is_a_homomorphism(i in 0u64..72, j in 0u64..72) {
        let spec = TowerSpec::new(&[1, 3]).unwrap();
        let (small, big) = (spec.stage(0), spec.stage(1));
        let (a, b) = (small.unrank(i).unwrap(), small.unrank(j).unwrap());
        let e = |x| spec.embed(0, 1, &x).unwrap();
        prop_assert_eq!(e(small.mul(&a, &b)), big.mul(&e(a), &e(b)));
        prop_assert!(big.is_member(&e(a)));
    }

    #[test]
    fn recon_words_agree_with_matrices(n in 1u32..=4, raw in prop::collection::vec(letter(), 1..12)) {
        let model = L2Model::new(n).unwrap();
        let ctx = UnitaryCtx::new(n).unwrap();
        let q = model.q() as u16;
        let letters: Vec<Letter> = raw
            .iter()
            .map(|&(k, x)| match k {
                0 => Letter::Z(FieldElement(x % q)),
                1 => Letter::H(FieldElement(1 + x % (q - 1).max(1))),
                _ => Letter::V,
            })
            .collect();
        let word = model.eval(&letters).unwrap();
        let mut product = ctx.identity();
        for a in &letters {
            product = ctx.mul(&product, &model.to_matrix(&ctx, &model.eval(&[*a]).unwrap()));
        }
        prop_assert_eq!(model.to_matrix(&ctx, &word), product);
    }
}
