//! The subgroup L = Z H0 <v> Z rebuilt from words over GF(q) alone. The only
//! non-Borel relation used is v t v = z5 h_t^2 v z5 (t in Z#), which expresses
//! every product through the structural involution u0.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, ReconError};
use crate::field::{FieldCtx, FieldElement};
use crate::group::reference::Psl2;
use crate::group::Group;
use crate::lemmas::Config;
use crate::report::CheckReport;
use crate::unitary::{GroupElement, UnitaryCtx};

/// Longest letter sequence accepted by [`L2Model::eval`].
pub const MAX_STEPS: u32 = 32;

/// Normal forms: z(z) h(h) in the Borel part, z(z1) h(h) v z(z2) outside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LWord {
    Small { z: FieldElement, h: FieldElement },
    Big { z1: FieldElement, h: FieldElement, z2: FieldElement },
}

impl fmt::Display for LWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LWord::Small { z, h } => write!(f, "z({}) h({})", z.to_hex(), h.to_hex()),
            LWord::Big { z1, h, z2 } => write!(f, "z({}) h({}) v z({})", z1.to_hex(), h.to_hex(), z2.to_hex()),
        }
    }
}

/// Generators of L.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    Z(FieldElement),
    H(FieldElement),
    V,
}

/// Multiplication of L from the Borel relations and the relation for v t v.
pub struct L2Model {
    f: FieldCtx,
    b0: FieldElement,
    /// For t in GF(q)#: (lambda_t, b5) with t = u0^h(lambda_t) and z5 = z(b5).
    conj: Vec<(FieldElement, FieldElement)>,
}

impl fmt::Debug for L2Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("L2Model").field("q", &self.q()).field("u0", &self.b0).finish()
    }
}

impl L2Model {
    /// Model for q = 2^n with u0 = z(b0).
    pub fn with_u0(n: u32, b0: FieldElement) -> Result<Self, ReconError> {
        let f = FieldCtx::new(n)?;
        if b0.is_zero() || !f.contains(b0) {
            return Err(ReconError::MissingConjugator(format!("u0 parameter {}", b0.to_hex())));
        }
        let mut conj = vec![(FieldElement::ZERO, FieldElement::ZERO); f.size()];
        for t in f.nonzero() {
            // h_t: the unique lambda in GF(q)* with h^-1 u0 h = z(lambda^-2 b0) = z(t)
            let found: Vec<FieldElement> =
                f.nonzero().filter(|&l| f.mul(f.inv(f.mul(l, l)).expect("non-zero"), b0) == t).collect();
            if found.len() != 1 {
                return Err(ReconError::MissingConjugator(t.to_hex()));
            }
            let l = found[0];
            // z5 = u0^(h_t^-1) = z(lambda^2 b0)
            conj[t.0 as usize] = (l, f.mul(f.mul(l, l), b0));
        }
        Ok(L2Model { f, b0, conj })
    }

    /// Model with u0 read off the matrix group.
    pub fn new(n: u32) -> Result<Self, Error> {
        let ctx = UnitaryCtx::new(n)?;
        let top = ctx.named().u0.entry(0, 2);
        let b0 = ctx
            .small_field()
            .elements()
            .find(|&b| ctx.embed_q(b) == top)
            .ok_or_else(|| ReconError::MissingConjugator("u0 outside Z".into()))?;
        Ok(L2Model::with_u0(n, b0)?)
    }

    pub fn q(&self) -> u64 {
        self.f.size() as u64
    }

    pub fn field(&self) -> &FieldCtx {
        &self.f
    }

    pub fn u0(&self) -> FieldElement {
        self.b0
    }

    /// (lambda_t, b5) for the relation v z(t) v = z(b5) h(lambda_t)^2 v z(b5).
    pub fn conjugator(&self, t: FieldElement) -> Option<(FieldElement, FieldElement)> {
        (!t.is_zero()).then(|| self.conj[t.0 as usize])
    }

    pub fn order(&self) -> u64 {
        let q = self.q();
        q * (q * q - 1)
    }

    pub fn elements(&self) -> Vec<LWord> {
        let f = &self.f;
        let mut out = Vec::with_capacity(self.order() as usize);
        for h in f.nonzero() {
            for z in f.elements() {
                out.push(LWord::Small { z, h });
                for z2 in f.elements() {
                    out.push(LWord::Big { z1: z, h, z2 });
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn sq(&self, x: FieldElement) -> FieldElement {
        self.f.mul(x, x)
    }

    fn inv_f(&self, x: FieldElement) -> FieldElement {
        self.f.inv(x).expect("non-zero torus parameter")
    }

    /// Right multiplication by one letter.
    pub fn step(&self, w: LWord, a: Letter) -> LWord {
        let f = &self.f;
        match (w, a) {
            (LWord::Small { z, h }, Letter::Z(b)) => LWord::Small { z: f.add(z, f.mul(self.sq(h), b)), h },
            (LWord::Small { z, h }, Letter::H(m)) => LWord::Small { z, h: f.mul(h, m) },
            (LWord::Small { z, h }, Letter::V) => LWord::Big { z1: z, h, z2: FieldElement::ZERO },
            (LWord::Big { z1, h, z2 }, Letter::Z(b)) => LWord::Big { z1, h, z2: f.add(z2, b) },
            (LWord::Big { z1, h, z2 }, Letter::H(m)) => {
                let mi = self.inv_f(m);
                LWord::Big { z1, h: f.mul(h, mi), z2: f.mul(self.sq(mi), z2) }
            }
            (LWord::Big { z1, h, z2 }, Letter::V) if z2.is_zero() => LWord::Small { z: z1, h },
            (LWord::Big { z1, h, z2 }, Letter::V) => {
                let (lt, b5) = self.conj[z2.0 as usize];
                LWord::Big { z1: f.add(z1, f.mul(self.sq(h), b5)), h: f.mul(h, self.sq(lt)), z2: b5 }
            }
        }
    }

    /// Letters spelling a normal form.
    pub fn letters(&self, w: &LWord) -> Vec<Letter> {
        match *w {
            LWord::Small { z, h } => vec![Letter::Z(z), Letter::H(h)],
            LWord::Big { z1, h, z2 } => vec![Letter::Z(z1), Letter::H(h), Letter::V, Letter::Z(z2)],
        }
    }

    /// Normal form of a letter sequence.
    pub fn eval(&self, letters: &[Letter]) -> Result<LWord, ReconError> {
        if letters.len() > MAX_STEPS as usize {
            return Err(ReconError::StepBound(MAX_STEPS));
        }
        for l in letters {
            match *l {
                Letter::H(m) if m.is_zero() => return Err(FieldError::ZeroInverse.into()),
                Letter::Z(x) | Letter::H(x) if !self.f.contains(x) => {
                    return Err(FieldError::InvalidElement(x.0, self.f.degree()).into())
                }
                _ => {}
            }
        }
        Ok(letters.iter().fold(self.identity(), |w, l| self.step(w, *l)))
    }

    /// The matrix of a word in U3(q).
    pub fn to_matrix(&self, ctx: &UnitaryCtx, w: &LWord) -> GroupElement {
        self.letters(w).iter().fold(ctx.identity(), |m, l| {
            let x = match *l {
                Letter::Z(b) => ctx.z_elem(b),
                Letter::H(m) => ctx.h_elem(ctx.embed_q(m)).expect("non-zero"),
                Letter::V => ctx.named().v,
            };
            ctx.mul(&m, &x)
        })
    }

    /// The image in PSL2(q): z(b) -> [[1, b], [0, 1]], h(l) -> diag(l, 1/l), v -> antidiag.
    pub fn to_psl2(&self, p: &Psl2, w: &LWord) -> [u8; 4] {
        self.letters(w).iter().fold(p.identity(), |m, l| {
            let x = match *l {
                Letter::Z(b) => p.upper(b),
                Letter::H(m) => p.diag(m).expect("non-zero"),
                Letter::V => p.antidiag(),
            };
            p.mul(&m, &x)
        })
    }

    /// Multiplication table as CSV rows `left,right,product`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "product"])?;
        let els = self.elements();
        for a in &els {
            for b in &els {
                w.write_record([a.to_string(), b.to_string(), self.mul(a, b).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl Group for L2Model {
    type Elem = LWord;

    fn identity(&self) -> LWord {
        LWord::Small { z: FieldElement::ZERO, h: FieldElement::ONE }
    }

    fn mul(&self, a: &LWord, b: &LWord) -> LWord {
        self.letters(b).iter().fold(*a, |w, l| self.step(w, *l))
    }

    fn inv(&self, a: &LWord) -> LWord {
        let f = &self.f;
        match *a {
            LWord::Small { z, h } => {
                let hi = self.inv_f(h);
                LWord::Small { z: f.mul(self.sq(hi), z), h: hi }
            }
            LWord::Big { z1, h, z2 } => {
                let seq = [Letter::Z(z2), Letter::V, Letter::H(self.inv_f(h)), Letter::Z(z1)];
                seq.iter().fold(self.identity(), |w, l| self.step(w, *l))
            }
        }
    }

    fn describe(&self, a: &LWord) -> String {
        a.to_string()
    }
}

/// Pairs (left, right) to compare; all of them, or a seeded sample.
fn pair_indices(n: usize, limit: u64, seed: u64) -> (Vec<(usize, usize)>, bool) {
    if (n as u64) * (n as u64) <= limit {
        ((0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect(), true)
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ((0..limit).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect(), false)
    }
}

/// Compare the word multiplication with U3(q) matrices and with PSL2(q).
pub fn check_recon(n: u32, cfg: &Config) -> Result<CheckReport, Error> {
    let start = cfg.timing.then(std::time::Instant::now);
    let model = L2Model::new(n)?;
    let ctx = UnitaryCtx::new(n)?;
    let p = Psl2::new(n)?;
    let mut r = CheckReport::new("recon-l2", model.q(), cfg.mode, cfg.report_seed());
    let els = model.elements();
    r.expect_eq("order_L", els.len() as u64, model.order());
    r.detail("u0", model.u0().to_hex());

    let mats: Vec<GroupElement> = els.par_iter().map(|w| model.to_matrix(&ctx, w)).collect();
    let mut distinct = mats.clone();
    distinct.sort_unstable();
    distinct.dedup();
    r.expect_eq("matrix_map_injective", distinct.len(), els.len());
    let imgs: Vec<[u8; 4]> = els.iter().map(|w| model.to_psl2(&p, w)).collect();

    // all |L|^2 pairs at q <= 8
    let (pairs, full) = pair_indices(els.len(), 300_000, cfg.seed);
    if !full {
        r.note("product comparison on seeded pairs");
    }
    let index = |w: &LWord| els.binary_search(w).expect("normal form");
    let products: Vec<LWord> = pairs.par_iter().map(|(a, b)| model.mul(&els[*a], &els[*b])).collect();
    let bad_matrix: Vec<usize> = (0..pairs.len())
        .into_par_iter()
        .filter(|&i| {
            let (a, b) = pairs[i];
            mats[index(&products[i])] != ctx.mul(&mats[a], &mats[b])
        })
        .collect();
    r.claim(
        "table_equals_matrix_oracle",
        pairs.len() as u64,
        bad_matrix.len() as u64,
        bad_matrix.first().map(|&i| format!("{} * {}", els[pairs[i].0], els[pairs[i].1])),
    );
    let bad_psl2 = (0..pairs.len())
        .into_par_iter()
        .filter(|&i| {
            let (a, b) = pairs[i];
            imgs[index(&products[i])] != p.mul(&imgs[a], &imgs[b])
        })
        .count() as u64;
    r.claim("map_to_PSL2_is_homomorphism", pairs.len() as u64, bad_psl2, None);
    let mut pimgs = imgs.clone();
    pimgs.sort_unstable();
    pimgs.dedup();
    r.expect_eq("map_to_PSL2_bijective", pimgs.len() as u64, crate::unitary::psl2_order(model.q()));

    // associativity: every triple at q <= 4, seeded triples above
    let m = els.len();
    let triples: Vec<(usize, usize, usize)> = if (m as u64).pow(3) <= 1_000_000 {
        (0..m).flat_map(|a| (0..m).flat_map(move |b| (0..m).map(move |c| (a, b, c)))).collect()
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA550C);
        r.note("associativity on seeded triples");
        (0..cfg.samples.min(100_000)).map(|_| (rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m))).collect()
    };
    let non_assoc = triples
        .par_iter()
        .filter(|(a, b, c)| {
            let (x, y, z) = (&els[*a], &els[*b], &els[*c]);
            model.mul(&model.mul(x, y), z) != model.mul(x, &model.mul(y, z))
        })
        .count() as u64;
    r.claim("associative", triples.len() as u64, non_assoc, None);
    let bad_inv = els.iter().filter(|x| model.mul(x, &model.inv(x)) != model.identity()).count() as u64;
    r.claim("inverses", els.len() as u64, bad_inv, None);

    // the relation itself, against matrices
    let v = ctx.named().v;
    let bad_rel = model
        .field()
        .nonzero()
        .filter(|&t| {
            let (lt, b5) = model.conjugator(t).expect("non-zero");
            let h = ctx.h_elem(ctx.embed_q(lt)).expect("non-zero");
            let lhs = ctx.mul(&ctx.mul(&v, &ctx.z_elem(t)), &v);
            let z5 = ctx.z_elem(b5);
            let rhs = [ctx.mul(&h, &h), v, z5].iter().fold(z5, |m, x| ctx.mul(&m, x));
            lhs != rhs
        })
        .count() as u64;
    r.claim("vtv_relation_in_matrices", model.q() - 1, bad_rel, None);
    Ok(r.finish(start))
}
