use crate::group::closure;
use crate::lemmas::{borel_stabiliser, classify_uv, Config, RequestedMode, Workbench};
use crate::recon::check_recon;
use crate::tower::{run_tower, TowerSpec};
use crate::{Error, Group, TowerError};

fn run_all(wb: &Workbench) {
    for r in wb.run_all() {
        println!("{}", r.to_json_line());
        assert!(r.pass, "{} failed at q = {}: {:?}", r.check, wb.q(), r.witnesses);
        assert!(!r.cap_exceeded);
    }
}

#[test]
fn every_check_passes_at_q2() {
    run_all(&Workbench::auto(1).unwrap());
}

#[test]
fn every_check_passes_at_q4() {
    run_all(&Workbench::auto(2).unwrap());
}

#[test]
fn every_check_passes_at_q8_sampled() {
    let cfg = Config::resolve(8, RequestedMode::Sampled, Some(20_000), Some(11), crate::group::DEFAULT_CAP, false).unwrap();
    run_all(&Workbench::new(3, cfg).unwrap());
}

#[test]
fn stabiliser_order_matches_closure() {
    for n in [2, 3] {
        let wb = Workbench::auto(n).unwrap();
        let ctx = wb.ctx();
        let v = ctx.named().v;
        let us: Vec<_> = wb.u().elements().iter().copied().filter(|x| ctx.order(x) == 4).take(12).collect();
        for u in us {
            let (orbit, stab) = borel_stabiliser(&wb, &[u, v]);
            let full = closure(ctx, &[u, v], ctx.order_g() as usize + 1).unwrap();
            assert_eq!(orbit * stab, full.order(), "q = {}, u = {u}", wb.q());
            let c = classify_uv(&wb, u);
            assert!(!c.capped);
            assert_eq!(c.result.order, full.order());
        }
    }
}

#[test]
fn recon_passes_for_every_q() {
    for n in 1..=3 {
        let r = check_recon(n, &Config::for_q(1 << n)).unwrap();
        assert!(r.pass, "q = {}: {:?}", 1 << n, r.witnesses);
    }
}

#[test]
fn odd_chain_passes_and_even_chain_is_rejected() {
    let spec = TowerSpec::new(&[1, 3]).unwrap();
    let reports = run_tower(&spec, &Config::for_q(8));
    assert!(reports.len() >= 3);
    for r in &reports {
        assert!(r.pass, "{} {:?}: {:?}", r.check, r.stage, r.witnesses);
    }
    for chain in [&[1, 2][..], &[2, 4], &[1, 2, 4]] {
        assert!(matches!(TowerSpec::new(chain), Err(TowerError::EvenRelativeDegree { .. })), "{chain:?}");
    }
    assert!(matches!(TowerSpec::new(&[2, 3]), Err(TowerError::NonDividing { .. })));
    assert!(matches!(TowerSpec::parse("1,x"), Err(Error::Config(_))));
    assert_eq!(TowerSpec::parse(" 1, 3").unwrap().exponents(), &[1, 3]);
}
