//! One executable check per structural claim about U3(q) and its Borel
//! subgroup. Every check returns a [`CheckReport`].
//!
//! Scan sizes follow one rule: a set with at most [`SAMPLE_THRESHOLD`]
//! elements is scanned completely; a larger set is scanned completely in
//! exhaustive mode, sampled with a seeded generator in sampled mode, and
//! skipped (with a note) in algebraic mode.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::group::{closure, orbits, Group, Recognizer, SubgroupHandle};
use crate::report::{CheckReport, Mode};
use crate::unitary::{GroupElement, UnitaryCtx};

mod centralizers;
mod dichotomy;
mod involutions;
mod structure;

pub use centralizers::{check_lemma3, check_lemma4};
pub use dichotomy::{borel_stabiliser, check_lemma8, check_lemma9, classify_uv, UvClass};
pub use involutions::{check_lemma1, check_lemma2, check_lemma5, check_lemma6};
pub use structure::{check_eq6, check_eq7, check_prop3, check_strong_embedding};

/// Sets up to this size are always scanned completely.
pub const SAMPLE_THRESHOLD: u64 = 100_000;
/// Default number of sampled elements.
pub const DEFAULT_SAMPLES: u64 = 100_000;
/// Number of order-4 elements examined when the subgroup checks are sampled.
pub const SUBGROUP_SAMPLES: usize = 50;

/// Check identifiers in the order `verify all` runs them.
pub const ALL_CHECKS: [&str; 13] = [
    "strong-embedding",
    "prop3",
    "lemma1",
    "lemma2",
    "lemma3",
    "lemma4",
    "lemma5",
    "lemma6",
    "eq6",
    "eq7",
    "lemma7",
    "lemma8",
    "lemma9",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestedMode {
    #[default]
    Auto,
    Exhaustive,
    Sampled,
    Algebraic,
}

/// Resolved run parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub mode: Mode,
    pub samples: u64,
    pub seed: u64,
    pub cap: usize,
    pub timing: bool,
}

/// Seed used when none is given.
pub fn default_seed(q: u32) -> u64 {
    0x5EED_0000 + q as u64
}

impl Config {
    /// `auto` is exhaustive for q <= 4, sampled for q = 8 and algebraic for q = 16.
    pub fn resolve(
        q: u32,
        requested: RequestedMode,
        samples: Option<u64>,
        seed: Option<u64>,
        cap: usize,
        timing: bool,
    ) -> Result<Config, Error> {
        let mode = match requested {
            RequestedMode::Auto => match q {
                0..=4 => Mode::Exhaustive,
                8 => Mode::Sampled,
                _ => Mode::Algebraic,
            },
            RequestedMode::Exhaustive => Mode::Exhaustive,
            RequestedMode::Sampled => Mode::Sampled,
            RequestedMode::Algebraic => Mode::Algebraic,
        };
        if mode == Mode::Exhaustive && q > 8 {
            return Err(Error::Config(format!("exhaustive mode needs q <= 8, got q = {q}")));
        }
        let samples = samples.unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        if cap == 0 {
            return Err(Error::Config("closure cap must be positive".into()));
        }
        Ok(Config { mode, samples, seed: seed.unwrap_or_else(|| default_seed(q)), cap, timing })
    }

    pub fn for_q(q: u32) -> Config {
        Config::resolve(q, RequestedMode::Auto, None, None, crate::group::DEFAULT_CAP, false)
            .expect("auto mode is valid for every supported q")
    }

    /// The seed as reported: absent in exhaustive mode.
    pub fn report_seed(&self) -> Option<u64> {
        (self.mode != Mode::Exhaustive).then_some(self.seed)
    }
}

/// How a set of a given size is scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scan {
    All,
    Sample(u64),
    Skip,
}

/// Elements of G to scan: all of them, a seeded sample, or nothing.
pub enum Ambient<'a> {
    Full(&'a [GroupElement]),
    Sample(Vec<GroupElement>),
    Skipped,
}

impl Ambient<'_> {
    pub fn elements(&self) -> &[GroupElement] {
        match self {
            Ambient::Full(e) => e,
            Ambient::Sample(e) => e,
            Ambient::Skipped => &[],
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, Ambient::Full(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Ambient::Full(_) => "all of G",
            Ambient::Sample(_) => "seeded sample of G",
            Ambient::Skipped => "skipped",
        }
    }
}

/// A `UnitaryCtx` with its run configuration and lazily built subgroups.
pub struct Workbench {
    ctx: UnitaryCtx,
    cfg: Config,
    recognizer: Recognizer,
    u: OnceLock<SubgroupHandle<GroupElement>>,
    z: OnceLock<SubgroupHandle<GroupElement>>,
    h: OnceLock<SubgroupHandle<GroupElement>>,
    h0: OnceLock<SubgroupHandle<GroupElement>>,
    h1: OnceLock<SubgroupHandle<GroupElement>>,
    b: OnceLock<SubgroupHandle<GroupElement>>,
    l: OnceLock<SubgroupHandle<GroupElement>>,
    whole: OnceLock<Option<SubgroupHandle<GroupElement>>>,
    involutions: OnceLock<Vec<GroupElement>>,
}

impl Workbench {
    pub fn new(n: u32, cfg: Config) -> Result<Self, Error> {
        Ok(Self::from_ctx(UnitaryCtx::new(n)?, cfg))
    }

    /// Auto-mode workbench for q = 2^n.
    pub fn auto(n: u32) -> Result<Self, Error> {
        Self::new(n, Config::for_q(1 << n))
    }

    pub fn from_ctx(ctx: UnitaryCtx, cfg: Config) -> Self {
        Workbench {
            ctx,
            cfg,
            recognizer: Recognizer::new(),
            u: OnceLock::new(),
            z: OnceLock::new(),
            h: OnceLock::new(),
            h0: OnceLock::new(),
            h1: OnceLock::new(),
            b: OnceLock::new(),
            l: OnceLock::new(),
            whole: OnceLock::new(),
            involutions: OnceLock::new(),
        }
    }

    pub fn ctx(&self) -> &UnitaryCtx {
        &self.ctx
    }

    pub fn cfg(&self) -> &Config {
        &self.cfg
    }

    pub fn recognizer(&self) -> &Recognizer {
        &self.recognizer
    }

    pub fn q(&self) -> u64 {
        self.ctx.q() as u64
    }

    fn sub<'a>(&'a self, cell: &'a OnceLock<SubgroupHandle<GroupElement>>, gens: Vec<GroupElement>) -> &'a SubgroupHandle<GroupElement> {
        cell.get_or_init(|| closure(&self.ctx, &gens, usize::MAX).expect("uncapped closure"))
    }

    pub fn u(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.u, self.ctx.named().u_gens.clone())
    }

    pub fn z(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.z, self.ctx.named().z_gens.clone())
    }

    pub fn h(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.h, vec![self.ctx.named().h_gen])
    }

    pub fn h0(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.h0, vec![self.ctx.named().h0_gen])
    }

    pub fn h1(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.h1, vec![self.ctx.named().h1_gen])
    }

    pub fn b(&self) -> &SubgroupHandle<GroupElement> {
        self.sub(&self.b, self.ctx.borel_generators())
    }

    /// L = closure(Z, H0, v).
    pub fn l(&self) -> &SubgroupHandle<GroupElement> {
        let nm = self.ctx.named();
        let mut gens = nm.z_gens.clone();
        gens.push(nm.h0_gen);
        gens.push(nm.v);
        self.sub(&self.l, gens)
    }

    /// The whole group, when the current mode scans it completely.
    pub fn whole(&self) -> Option<&SubgroupHandle<GroupElement>> {
        self.whole
            .get_or_init(|| {
                (self.plan(self.ctx.order_g()) == Scan::All).then(|| {
                    let elems: Vec<GroupElement> = self.ctx.elements().collect();
                    SubgroupHandle::from_elements(self.ctx.group_generators(), elems)
                })
            })
            .as_ref()
    }

    /// All involutions of G, as the conjugacy class of u0 (sorted).
    pub fn involutions(&self) -> &[GroupElement] {
        self.involutions.get_or_init(|| {
            let gens = self.ctx.group_generators();
            let orbs = orbits(&[self.ctx.named().u0], &gens, self.ctx.order_g(), |x, g| self.ctx.conj(x, g))
                .expect("class size divides |G|");
            orbs.into_iter().next().unwrap_or_default()
        })
    }

    pub fn plan(&self, size: u64) -> Scan {
        match self.cfg.mode {
            Mode::Exhaustive => Scan::All,
            _ if size <= SAMPLE_THRESHOLD => Scan::All,
            Mode::Sampled => Scan::Sample(self.cfg.samples),
            Mode::Algebraic => Scan::Skip,
        }
    }

    /// Seeded generator for one named stream; streams keep checks independent.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        r.set_stream(stream);
        r
    }

    /// Uniform sample of ranks in `[lo, hi)`.
    pub fn sample_ranks(&self, stream: u64, n: u64, lo: u64, hi: u64) -> Vec<u64> {
        let mut rng = self.rng(stream);
        (0..n).map(|_| rng.gen_range(lo..hi)).collect()
    }

    /// Elements of G to scan for universally quantified claims over G.
    pub fn ambient(&self, stream: u64) -> Ambient<'_> {
        match self.plan(self.ctx.order_g()) {
            Scan::All => Ambient::Full(self.whole().expect("whole group is built for full scans").elements()),
            Scan::Sample(n) => Ambient::Sample(
                self.sample_ranks(stream, n, 0, self.ctx.order_g())
                    .into_iter()
                    .map(|i| self.ctx.unrank(i).expect("rank in range"))
                    .collect(),
            ),
            Scan::Skip => Ambient::Skipped,
        }
    }

    pub fn report(&self, check: &str) -> CheckReport {
        CheckReport::new(check, self.q(), self.cfg.mode, self.cfg.report_seed())
    }

    pub fn clock(&self) -> Option<Instant> {
        self.cfg.timing.then(Instant::now)
    }

    pub fn run_check(&self, id: &str) -> Result<CheckReport, Error> {
        Ok(match id {
            "strong-embedding" => check_strong_embedding(self),
            "prop3" => check_prop3(self),
            "lemma1" => check_lemma1(self),
            "lemma2" => check_lemma2(self),
            "lemma3" => check_lemma3(self),
            "lemma4" => check_lemma4(self),
            "lemma5" => check_lemma5(self),
            "lemma6" => check_lemma6(self),
            "eq6" => check_eq6(self),
            "eq7" => check_eq7(self),
            "lemma7" => crate::tower::check_lemma7_top(self),
            "lemma8" => check_lemma8(self),
            "lemma9" => check_lemma9(self),
            other => return Err(Error::Config(format!("unknown check {other:?}"))),
        })
    }

    /// Every check in [`ALL_CHECKS`] order.
    pub fn run_all(&self) -> Vec<CheckReport> {
        ALL_CHECKS.iter().map(|id| self.run_check(id).expect("known id")).collect()
    }
}

/// Lemma number to check id.
pub fn lemma_check_id(k: u32) -> Option<&'static str> {
    match k {
        1 => Some("lemma1"),
        2 => Some("lemma2"),
        3 => Some("lemma3"),
        4 => Some("lemma4"),
        5 => Some("lemma5"),
        6 => Some("lemma6"),
        7 => Some("lemma7"),
        8 => Some("lemma8"),
        9 => Some("lemma9"),
        _ => None,
    }
}

/// Stream identifiers for the seeded generator.
pub(crate) mod stream {
    pub const STRONG: u64 = 1;
    pub const LEMMA1: u64 = 2;
    pub const LEMMA3: u64 = 3;
    pub const LEMMA4: u64 = 4;
    pub const LEMMA5: u64 = 5;
    pub const LEMMA6: u64 = 6;
    pub const LEMMA8: u64 = 8;
    pub const LEMMA9: u64 = 9;
    pub const TOWER: u64 = 11;
    pub const STABILISER: u64 = 12;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_modes() {
        assert_eq!(Config::for_q(4).mode, Mode::Exhaustive);
        assert_eq!(Config::for_q(8).mode, Mode::Sampled);
        assert_eq!(Config::for_q(16).mode, Mode::Algebraic);
        assert!(Config::resolve(16, RequestedMode::Exhaustive, None, None, 10, false).is_err());
        assert!(Config::resolve(4, RequestedMode::Sampled, Some(0), None, 10, false).is_err());
        let c = Config::resolve(8, RequestedMode::Sampled, Some(5), Some(7), 10, false).unwrap();
        assert_eq!((c.samples, c.seed, c.report_seed()), (5, 7, Some(7)));
        assert_eq!(Config::for_q(4).report_seed(), None);
    }

    #[test]
    fn scan_plan() {
        let wb = Workbench::auto(3).unwrap();
        assert_eq!(wb.plan(10), Scan::All);
        assert_eq!(wb.plan(5_515_776), Scan::Sample(DEFAULT_SAMPLES));
        let wb = Workbench::auto(4).unwrap();
        assert_eq!(wb.plan(5_515_776), Scan::Skip);
    }

    #[test]
    fn sampling_is_reproducible() {
        let wb = Workbench::auto(3).unwrap();
        assert_eq!(wb.sample_ranks(1, 10, 0, 1000), wb.sample_ranks(1, 10, 0, 1000));
        assert_ne!(wb.sample_ranks(1, 10, 0, 1000), wb.sample_ranks(2, 10, 0, 1000));
    }

    #[test]
    fn involution_class_sizes() {
        for (n, want) in [(1u32, 9usize), (2, 195), (3, 3591)] {
            let wb = Workbench::auto(n).unwrap();
            assert_eq!(wb.involutions().len(), want);
        }
    }

    #[test]
    fn unknown_check_is_a_config_error() {
        let wb = Workbench::auto(1).unwrap();
        assert!(matches!(wb.run_check("lemma12"), Err(Error::Config(_))));
        assert_eq!(lemma_check_id(10), None);
    }
}
