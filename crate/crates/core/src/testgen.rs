//! Seeded random fixtures: valid tree-products, leaf cases with a zero-sum
//! leaf generator, and relators with a contracted conjugate.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algorithm1::{measure_of, run_algorithm1};
use crate::amalgam::{check_contracted, contract, is_trivial, minimal_tree};
use crate::leafops::KernelPresentation;
use crate::presentation::{Builder, Edge, TreeProduct};
use crate::words::{cyclic_reduce, free_reduce, is_proper_power, Gen, Letter, Word};

const ATTEMPTS: usize = 10_000;

/// Freely reduced word of exactly `len` letters over `gens`.
pub fn random_word<R: Rng>(rng: &mut R, gens: &[Gen], len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::new(*gens.choose(rng).expect("nonempty alphabet"), rng.gen());
        if letters.last() != Some(&l.inv()) {
            letters.push(l);
        }
    }
    Word::from_letters(&letters)
}

/// Cyclically reduced non-power of length `len` using every generator of
/// `required`, letters drawn from `gens`.
fn edge_word<R: Rng>(rng: &mut R, gens: &[Gen], required: &[Gen], len: usize, accept: impl Fn(&Word) -> bool) -> Word {
    for _ in 0..ATTEMPTS {
        let w = random_word(rng, gens, len);
        if w.is_cyclically_reduced()
            && required.iter().all(|&g| w.contains_gen(g))
            && is_proper_power(&w).map(|p| p.k == 1).unwrap_or(false)
            && accept(&w)
        {
            return w;
        }
    }
    panic!("no edge-word found for the requested constraints")
}

/// A valid tree-product plus a leaf generator whose exponent sum in the leaf
/// edge-word is zero and which occurs in it.
#[derive(Clone, Debug)]
pub struct LeafCase {
    pub tp: TreeProduct,
    pub leaf: usize,
    pub gen: Gen,
}

/// Random tree on `size` vertices; the vertex with `d` edges gets `d + 1`
/// indexed generators (at least two) and its `j`-th edge-word uses exactly the
/// generators of index `j` and `j + 1`, which keeps every vertex staggered.
/// Leaves may get a third generator. With `with_h`, `H` has one or two generators.
pub fn random_tree_product<R: Rng>(rng: &mut R, size: usize, with_h: bool) -> TreeProduct {
    random_case(rng, size, with_h, false).tp
}

/// Like [`random_tree_product`] with `size ≥ 2`, fixing a leaf generator for
/// a leaf-homomorphism.
pub fn random_leaf_case<R: Rng>(rng: &mut R, size: usize, with_h: bool) -> LeafCase {
    random_case(rng, size.max(2), with_h, true)
}

fn random_case<R: Rng>(rng: &mut R, size: usize, with_h: bool, leaf_case: bool) -> LeafCase {
    let size = size.max(1);
    let parents: Vec<usize> = (1..size).map(|i| rng.gen_range(0..i)).collect();
    let mut incident: Vec<Vec<usize>> = vec![vec![]; size];
    for (e, &p) in parents.iter().enumerate() {
        incident[p].push(e);
        incident[e + 1].push(e);
    }
    let mut b = Builder::new();
    let mut gens: Vec<Vec<Gen>> = vec![];
    for (v, inc) in incident.iter().enumerate() {
        let vi = b.add_vertex(&format!("V{v}")).expect("fresh tag");
        let extra = usize::from(inc.len() == 1 && rng.gen_bool(0.4));
        let count = (inc.len() + 1).max(2) + extra;
        let gs = (0..count)
            .map(|i| {
                let y = Some(if inc.len() == 1 { 0 } else { i as i64 });
                b.add_gen(vi, &format!("x{v}_{i}"), false, y).expect("fresh name")
            })
            .collect();
        gens.push(gs);
    }
    if with_h {
        for i in 0..rng.gen_range(1..=2) {
            b.add_h_gen(&format!("h{i}")).expect("fresh name");
        }
    }
    let leaves: Vec<usize> = (0..size).filter(|&v| incident[v].len() == 1).collect();
    let case_leaf = if leaf_case { leaves.choose(rng).copied() } else { None };
    let mut words: Vec<[Option<(Word, i64)>; 2]> = vec![[None, None]; parents.len()];
    for v in 0..size {
        for (j, &e) in incident[v].iter().enumerate() {
            let side = usize::from(e + 1 != v);
            let w = if incident[v].len() == 1 {
                let len = rng.gen_range(2..=5);
                if Some(v) == case_leaf {
                    let a = gens[v][0];
                    edge_word(rng, &gens[v], &gens[v][..2], len.max(3) + 1, |w| w.exponent_sum(a) == 0)
                } else {
                    edge_word(rng, &gens[v], &gens[v][..1], len, |_| true)
                }
            } else {
                let window = &gens[v][j..j + 2];
                let len = rng.gen_range(2..=4);
                edge_word(rng, window, window, len, |_| true)
            };
            words[e][side] = Some((w, j as i64));
        }
    }
    for (e, &p) in parents.iter().enumerate() {
        let [child, parent] = words[e].clone();
        let ((cw, co), (pw, po)) = (child.expect("child end"), parent.expect("parent end"));
        b.add_edge(Edge { left: p, right: e + 1, left_word: pw, right_word: cw, left_order: po, right_order: co });
    }
    let tp = b.build();
    debug_assert!(tp.validate().is_empty(), "{:?}", tp.validate());
    let leaf = case_leaf.unwrap_or(0);
    let gen = gens[leaf][0];
    LeafCase { tp, leaf, gen }
}

/// Random word over all generators with a contracted conjugate.
pub fn random_relator<R: Rng>(rng: &mut R, tp: &TreeProduct, max_len: usize) -> Word {
    let all: Vec<Gen> = (0..tp.alphabet().len() as Gen).collect();
    for _ in 0..ATTEMPTS {
        let len = rng.gen_range(2..=max_len.max(2));
        let w = random_word(rng, &all, len);
        if contract(tp, &w).is_ok() {
            return w;
        }
    }
    panic!("no relator with a contracted conjugate found")
}

/// Random relator with exponent sum zero in `case.gen` whose minimal tree has
/// at least two vertices.
pub fn random_kernel_relator<R: Rng>(rng: &mut R, case: &LeafCase, max_len: usize) -> Word {
    let all: Vec<Gen> = (0..case.tp.alphabet().len() as Gen).collect();
    for _ in 0..ATTEMPTS {
        let len = rng.gen_range(2..=max_len.max(2));
        let w = random_word(rng, &all, len);
        let s = w.exponent_sum(case.gen);
        let cut = rng.gen_range(0..=w.len());
        let (head, tail) = w.letters().split_at(cut);
        let fixed = Word::from_letters(head).mul(&Word::gen_power(case.gen, -s)).mul(&Word::from_letters(tail));
        if contract(&case.tp, &fixed).is_ok_and(|cc| cc.minimal_tree.len() >= 2) {
            return fixed;
        }
    }
    panic!("no kernel relator with a contracted conjugate found")
}

/// Outcome of [`check_rewrite`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewriteCheck {
    pub input_length: usize,
    pub output_length: usize,
    /// The minimal tree is the whole presentation and the generator survives
    /// in the cyclic core of the leaf edge-word; the measure was compared.
    pub measure_checked: bool,
}

fn leaf_edge_word(case: &LeafCase) -> Result<Word, String> {
    let e = case.tp.leaf_edge(case.leaf).map_err(|e| e.to_string())?;
    Ok(case.tp.edges()[e].word_at(case.leaf).clone())
}

/// Runs the kernel rewrite and checks the contracted-conjugate properties,
/// the length bound, the translation round trip and, when applicable, the
/// strict decrease of the measure.
pub fn check_rewrite(case: &LeafCase, r: &Word, ell: i64) -> Result<RewriteCheck, String> {
    let tp = &case.tp;
    let show = || format!("{}relator {} ell {ell}", tp.serialize(), tp.format(r));
    let cc = contract(tp, r).map_err(|e| format!("contract: {e}\n{}", show()))?;
    let mut kp = KernelPresentation::build(tp, case.leaf, case.gen, (0, 0)).map_err(|e| e.to_string())?;
    kp.widen(kp.required_window(&cc.pieces.product(), ell)).map_err(|e| e.to_string())?;
    let tr = run_algorithm1(&kp, r, ell).map_err(|e| format!("rewrite: {e}\n{}", show()))?;
    let ktree = kp.tree();
    let problems = check_contracted(ktree, &tr.output.pieces, &tr.output.minimal_tree);
    if !problems.is_empty() {
        return Err(format!("output not contracted: {problems:?}\n{}", show()));
    }
    if tr.output.length() > tr.input.length() {
        return Err(format!("length grew {} -> {}\n{}", tr.input.length(), tr.output.length(), show()));
    }
    let shifted = r.conjugate_by(&Word::gen_power(case.gen, ell)).conjugate_by(&tr.witness(&kp));
    let back = shifted.mul(&kp.expand(&tr.output.pieces.product()).inverse());
    if !is_trivial(tp, &back).map_err(|e| e.to_string())? {
        return Err(format!("translation round trip is nontrivial\n{}", show()));
    }
    let p = leaf_edge_word(case)?;
    let measure_checked =
        tr.input.minimal_tree.len() == tp.size() && cyclic_reduce(&p).core.contains_gen(case.gen);
    if measure_checked {
        let before = measure_of(tp, &tr.input).map_err(|e| e.to_string())?;
        let after = measure_of(ktree, &tr.output).map_err(|e| e.to_string())?;
        if after >= before {
            return Err(format!("measure did not decrease: {before} -> {after}\n{}", show()));
        }
    }
    Ok(RewriteCheck { input_length: tr.input.length(), output_length: tr.output.length(), measure_checked })
}

/// Minimal trees of `u·r·u⁻¹` for every `u` agree with that of `r`.
pub fn check_minimal_tree_invariance(tp: &TreeProduct, r: &Word, conjugators: &[Word]) -> Result<(), String> {
    let base = minimal_tree(tp, r).map_err(|e| e.to_string())?;
    for u in conjugators {
        let t = minimal_tree(tp, &r.conjugate_by(u)).map_err(|e| e.to_string())?;
        if t != base {
            return Err(format!(
                "{}relator {} conjugator {}: {} vs {}",
                tp.serialize(),
                tp.format(r),
                tp.format(u),
                tp.format_selection(&base),
                tp.format_selection(&t)
            ));
        }
    }
    Ok(())
}

/// Every realized slice edge-word is shorter than the leaf edge-word and
/// equals its kernel rewrite; the generator map `g$i ↦ a⁻ⁱ·g·aⁱ` round-trips
/// on every kernel generator and on `words`. Returns the number of slices.
pub fn check_kernel_structure(case: &LeafCase, window: (i64, i64), words: &[Word]) -> Result<usize, String> {
    let tp = &case.tp;
    let kp = KernelPresentation::build(tp, case.leaf, case.gen, window).map_err(|e| e.to_string())?;
    let p = leaf_edge_word(case)?;
    let a = case.gen;
    let mut slices = 0;
    for i in window.0..=window.1 {
        let pi = kp.edge_word(i).ok_or_else(|| format!("slice {i} has no edge"))?;
        if pi.len() >= p.len() {
            return Err(format!("|p_{i}| = {} is not below |p| = {}", pi.len(), p.len()));
        }
        if kp.rewrite(&p, i).map_err(|e| e.to_string())? != *pi {
            return Err(format!("p_{i} differs from the rewrite of p"));
        }
        if kp.expand(pi) != p.conjugate_by(&Word::gen_power(a, i)) {
            return Err(format!("expansion of p_{i} is not a^-{i} p a^{i}"));
        }
        slices += 1;
    }
    for k in 0..kp.tree().alphabet().len() as Gen {
        let (g, i) = kp.origin(k);
        let img = kp.expand(&Word::letter(Letter::new(k, false)));
        if img != Word::letter(Letter::new(g, false)).conjugate_by(&Word::gen_power(a, i)) {
            return Err(format!("generator {} does not expand to a conjugate", kp.tree().alphabet().name(k)));
        }
        if kp.rewrite(&img, 0).map_err(|e| e.to_string())? != Word::letter(Letter::new(k, false)) {
            return Err(format!("generator {} does not round-trip", kp.tree().alphabet().name(k)));
        }
    }
    for w in words {
        let Ok(kw) = kp.rewrite(w, 0) else { continue };
        if kp.expand(&kw) != *w {
            return Err(format!("{} does not round-trip", tp.format(w)));
        }
    }
    Ok(slices)
}

/// `Some(k)` with `w = pᵏ` for the unique candidate `k` in `-|w|..=|w|`.
pub fn oracle_power_membership(w: &Word, p: &Word) -> Option<i64> {
    let n = w.len() as i64 + 1;
    (-n..=n).find(|&k| free_reduce(p.pow(k).letters()) == *w)
}

/// The largest `k` such that some root repeated `k` times gives `w`, by
/// trying every cyclic-core prefix whose length divides the core length.
pub fn oracle_proper_power(w: &Word) -> i64 {
    let cr = cyclic_reduce(w);
    let core = cr.core.letters();
    let n = core.len();
    (1..=n)
        .filter(|&d| n.is_multiple_of(d))
        .find(|&d| (0..n).all(|i| core[i] == core[i % d]))
        .map_or(1, |d| (n / d) as i64)
}

/// Largest `k` with a nonvanishing `k×k` minor, by cofactor expansion.
pub fn oracle_rank(rows: &[Vec<i64>]) -> usize {
    fn det(a: &[Vec<i64>]) -> i128 {
        if a.is_empty() {
            return 1;
        }
        (0..a.len())
            .map(|j| {
                let minor: Vec<Vec<i64>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * i128::from(a[0][j]) * det(&minor)
            })
            .sum()
    }
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (k - 1..n)
            .flat_map(|last| {
                subsets(last, k - 1).into_iter().map(move |mut s| {
                    s.push(last);
                    s
                })
            })
            .collect()
    }
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    for k in (1..=r.min(c)).rev() {
        for rs in subsets(r, k) {
            for cs in subsets(c, k) {
                let sub: Vec<Vec<i64>> = rs.iter().map(|&i| cs.iter().map(|&j| rows[i][j]).collect()).collect();
                if det(&sub) != 0 {
                    return k;
                }
            }
        }
    }
    0
}
