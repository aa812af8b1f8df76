//! Rewriting a contracted conjugate of `r ∈ G ∗ H` into a contracted
//! conjugate of `a⁻ˡ·r·aˡ` in the kernel of a leaf-homomorphism.

use std::fmt::Write as _;

use crate::amalgam::{contract, ContractedConjugate, Engine, Piece, PieceSequence, StepKind, TraceStep};
use crate::error::{Error, Result};
use crate::leafops::KernelPresentation;
use crate::presentation::{Factor, TreeProduct};
use crate::words::Word;

/// Full log of one run.
#[derive(Clone, Debug)]
pub struct RewriteTrace {
    /// Contracted conjugate of the input in the base presentation.
    pub input: ContractedConjugate,
    pub ell: i64,
    pub steps: Vec<TraceStep>,
    /// Contracted conjugate over the kernel tree.
    pub output: ContractedConjugate,
}

/// 64-bit FNV-1a.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RewriteTrace {
    /// `STEP <kind> <before-hash> <after-hash>` lines, then the output.
    pub fn serialize(&self, kp: &KernelPresentation) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let _ = writeln!(out, "STEP {} {:016x} {:016x}", s.kind.name(), fnv1a(&s.before), fnv1a(&s.after));
        }
        let tree = kp.tree();
        let _ = writeln!(out, "OUTPUT {}", self.output.pieces.serialize(tree));
        let _ = writeln!(out, "TREE {}", tree.format_selection(&self.output.minimal_tree));
        let _ = writeln!(out, "CONJUGATOR {}", tree.format(&self.output.conjugator));
        out
    }

    /// Base-presentation conjugator `W` with `W⁻¹·a⁻ˡ·r·aˡ·W = expand(output)`.
    pub fn witness(&self, kp: &KernelPresentation) -> Word {
        let shift = Word::gen_power(kp.gen(), self.ell);
        self.input.conjugator.conjugate_by(&shift).mul(&kp.expand(&self.output.conjugator))
    }
}

/// Pieces of `r` in `G ∗ H`: maximal runs of letters from one factor.
pub fn syllables(tp: &TreeProduct, r: &Word) -> Vec<Piece> {
    let mut out: Vec<Piece> = vec![];
    for &l in r.letters() {
        let f = tp.factor_of(l.gen());
        match out.last_mut() {
            Some(p) if p.factor == f => p.word = p.word.mul(&Word::letter(l)),
            _ => out.push(Piece { factor: f, word: Word::letter(l) }),
        }
    }
    out
}

/// Running-index rewriting piece by piece; pieces in the leaf may become trivial.
fn rewrite_pieces(kp: &KernelPresentation, pieces: &[Piece], ell: i64) -> Result<Vec<Piece>> {
    let phi: i64 = pieces.iter().map(|p| p.word.exponent_sum(kp.gen())).sum();
    if phi != 0 {
        return Err(Error::NotInKernel(phi));
    }
    let whole = Word::product(pieces.iter().map(|p| &p.word));
    let need = kp.required_window(&whole, ell);
    let have = kp.window();
    if need.0 < have.0 || need.1 > have.1 {
        return Err(Error::Window { lo: need.0.min(have.0), hi: need.1.max(have.1) });
    }
    let tree = kp.tree();
    let mut lambda = 0;
    let mut out = Vec::with_capacity(pieces.len());
    for p in pieces {
        let start = lambda;
        let word = kp.rewrite_from(&p.word, &mut lambda, ell)?;
        let factor = match (word.first(), p.factor) {
            (Some(l), _) => tree.factor_of(l.gen()),
            (None, Factor::Vertex(v)) if v == kp.leaf() => Factor::Vertex(0),
            (None, f) => {
                return Err(Error::Invalid(format!("piece of {} vanished at index {start}", kp.base().factor_tag(f))));
            }
        };
        out.push(Piece { factor, word });
    }
    Ok(out)
}

/// The running-index automaton followed by trivial-piece deletion and
/// merging of pieces that become adjacent.
pub fn step1_rewrite(kp: &KernelPresentation, r: &Word, ell: i64) -> Result<PieceSequence> {
    let raw = rewrite_pieces(kp, &syllables(kp.base(), r), ell)?;
    let mut engine = Engine::new(kp.tree(), raw, Word::identity());
    engine.normalize(StepKind::MergeH);
    Ok(PieceSequence(engine.pieces().to_vec()))
}

/// Step 2 and Step 3 to their joint fixed point over the kernel tree.
pub fn step23_normalize(kp: &KernelPresentation, pieces: PieceSequence) -> Result<(ContractedConjugate, Vec<TraceStep>)> {
    let mut engine = Engine::new(kp.tree(), pieces.0, Word::identity());
    let tree = engine.run()?;
    let (pieces, conjugator, steps) = engine.into_parts();
    Ok((ContractedConjugate { pieces: PieceSequence(pieces), minimal_tree: tree, conjugator }, steps))
}

/// Contracts `r` in the base, rewrites into the kernel shifted by `ell`, and
/// normalizes there.
pub fn run_algorithm1(kp: &KernelPresentation, r: &Word, ell: i64) -> Result<RewriteTrace> {
    let base = kp.base();
    let input = contract(base, r)?;
    let raw = rewrite_pieces(kp, input.pieces.pieces(), ell)?;
    let tree = kp.tree();
    let mut steps = vec![TraceStep {
        kind: StepKind::Step1,
        before: input.pieces.serialize(base),
        after: PieceSequence(raw.clone()).serialize(tree),
        pieces_before: input.length(),
        pieces_after: raw.len(),
    }];
    let mut engine = Engine::new(tree, raw, Word::identity());
    engine.normalize(StepKind::MergeH);
    let minimal_tree = engine.run()?;
    let (pieces, conjugator, tail) = engine.into_parts();
    steps.extend(tail);
    let output = ContractedConjugate { pieces: PieceSequence(pieces), minimal_tree, conjugator };
    if output.length() > input.length() {
        return Err(Error::Invalid(format!(
            "kernel rewrite has {} pieces, more than the {} of the input",
            output.length(),
            input.length()
        )));
    }
    Ok(RewriteTrace { input, ell, steps, output })
}

/// Lexicographic pair `(‖r‖ − |T|, σ(T))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measure {
    pub excess: i64,
    pub boundary: usize,
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.excess, self.boundary)
    }
}

pub fn measure_of(tp: &TreeProduct, cc: &ContractedConjugate) -> Result<Measure> {
    let sub = tp.restrict(&cc.minimal_tree, false)?;
    Ok(Measure { excess: cc.length() as i64 - cc.minimal_tree.len() as i64, boundary: sub.boundary_length() })
}

pub fn measure(tp: &TreeProduct, r: &Word) -> Result<Measure> {
    measure_of(tp, &contract(tp, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgam::{check_contracted, is_trivial};
    use crate::presentation::TreeProduct;

    const GENUS2: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nedge A:a^-1 b^-1 a b = B:d^-1 c^-1 d c order=0\n";
    const ABAB: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nhfactor { gens = [ h, k ] }\nedge A:a b a^-1 b = B:c d order=0\n";

    fn tp(s: &str) -> TreeProduct {
        TreeProduct::parse(s).unwrap()
    }

    fn kernel(t: &TreeProduct, window: (i64, i64)) -> KernelPresentation {
        KernelPresentation::build(t, 0, t.alphabet().gen("a").unwrap(), window).unwrap()
    }

    fn sound(kp: &KernelPresentation, r: &Word, tr: &RewriteTrace) -> bool {
        let base = kp.base();
        let shift = Word::gen_power(kp.gen(), tr.ell);
        let target = r.conjugate_by(&shift).conjugate_by(&tr.witness(kp));
        is_trivial(base, &target.mul(&kp.expand(&tr.output.pieces.product()).inverse())).unwrap()
    }

    #[test]
    fn step1_examples() {
        let t = tp(ABAB);
        let kp = kernel(&t, (-1, 1));
        let r = t.parse_word("b a b a^-1").unwrap();
        assert_eq!(step1_rewrite(&kp, &r, 0).unwrap().serialize(kp.tree()), "A:b$0 b$-1");
        let r = t.parse_word("c d").unwrap();
        assert_eq!(step1_rewrite(&kp, &r, 1).unwrap().serialize(kp.tree()), "B$1:c$1 d$1");
        let r = t.parse_word("h a k a^-1").unwrap();
        assert_eq!(step1_rewrite(&kp, &r, 0).unwrap().serialize(kp.tree()), "H:h$0 k$-1");
        let r = t.parse_word("h a k a^-1 c").unwrap();
        assert_eq!(step1_rewrite(&kp, &r, 0).unwrap().serialize(kp.tree()), "H:h$0 k$-1 | B$0:c$0");
        assert!(matches!(step1_rewrite(&kp, &t.parse_word("a a c a^-1 a^-1").unwrap(), 0), Err(Error::Window { .. })));
    }

    #[test]
    fn genus_two_run_is_sound() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c a^-1 d").unwrap();
        let mut kp = kernel(&t, (0, 0));
        let cc = contract(&t, &r).unwrap();
        kp.widen(kp.required_window(&cc.pieces.product(), 0)).unwrap();
        let tr = run_algorithm1(&kp, &r, 0).unwrap();
        assert!(check_contracted(kp.tree(), &tr.output.pieces, &tr.output.minimal_tree).is_empty());
        assert!(tr.output.length() <= tr.input.length());
        assert!(sound(&kp, &r, &tr));
        assert!(tr.steps.iter().all(|s| s.pieces_after <= s.pieces_before));
        let text = tr.serialize(&kp);
        assert!(text.starts_with("STEP Step1 "));
        assert!(text.contains("OUTPUT "));
    }

    #[test]
    fn shift_by_ell_shifts_indices() {
        let t = tp(ABAB);
        let r = t.parse_word("c h a d k a^-1").unwrap();
        let kp = kernel(&t, (-2, 4));
        let t0 = run_algorithm1(&kp, &r, 0).unwrap();
        let t3 = run_algorithm1(&kp, &r, 3).unwrap();
        let shifted: Vec<Piece> = t0
            .output
            .pieces
            .pieces()
            .iter()
            .map(|p| {
                let word = kp.shift_kernel(&p.word, 3).unwrap();
                Piece { factor: kp.tree().factor_of(word.first().unwrap().gen()), word }
            })
            .collect();
        assert_eq!(t3.output.pieces.0, shifted);
        assert!(sound(&kp, &r, &t0) && sound(&kp, &r, &t3));
    }

    #[test]
    fn step2_replaces_leaf_edge_power() {
        // c$0 d$0 equals b$-1 b$0 in the kernel, so the B$0 piece moves to the centre
        let t = tp(ABAB);
        let kp = kernel(&t, (-1, 1));
        let w = kp.rewrite(&t.parse_word("c d h a c a^-1 h").unwrap(), 0).unwrap();
        let pieces = crate::amalgam::PieceSequence(syllables(kp.tree(), &w));
        let (cc, steps) = step23_normalize(&kp, pieces).unwrap();
        assert!(steps.iter().any(|s| s.kind == StepKind::Step2Replace));
        assert!(check_contracted(kp.tree(), &cc.pieces, &cc.minimal_tree).is_empty());
        let lhs = w.conjugate_by(&cc.conjugator);
        assert!(is_trivial(kp.tree(), &lhs.mul(&cc.pieces.product().inverse())).unwrap());
    }

    #[test]
    fn already_contracted_is_fixed() {
        let t = tp(ABAB);
        let kp = kernel(&t, (-1, 1));
        let w = kp.rewrite(&t.parse_word("c h a c a^-1 h").unwrap(), 0).unwrap();
        let pieces = crate::amalgam::PieceSequence(syllables(kp.tree(), &w));
        let (cc, steps) = step23_normalize(&kp, pieces.clone()).unwrap();
        assert!(steps.is_empty());
        assert_eq!(cc.length(), pieces.len());
    }

    #[test]
    fn measures() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c").unwrap();
        assert_eq!(measure(&t, &r).unwrap(), Measure { excess: 0, boundary: 8 });
        assert!(matches!(measure(&t, &t.parse_word("a b").unwrap()), Err(Error::SingleFactor(_))));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0xcbf29ce484222325);
        assert_eq!(fnv1a("a"), 0xaf63dc4c8601ec8c);
    }
}
