//! Root extraction, leaf basis changes, leaf-homomorphisms and their kernels.
//!
//! Transformations keep generator ids: the generator at id `k` of the output
//! is the image of the generator at id `k` of the input, so a word of the
//! input is moved to the output by substituting the forward map.

use std::collections::{BTreeMap, BTreeSet};

use crate::amalgam::contract;
use crate::eqsystems::{build_matrix, ExponentMatrix};
use crate::error::{Error, Result};
use crate::presentation::{BasisMap, Builder, Edge, Factor, TreeProduct};
use crate::words::{cyclic_reduce, split_conjugate, Gen, Letter, Word};

/// Target generators of leaf groups with their nonzero root exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RootPlan {
    targets: BTreeMap<Gen, i64>,
    fresh: BTreeMap<Gen, String>,
}

impl RootPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// `gen = root^n`; the root is named `gen$r` unless renamed.
    pub fn with(mut self, gen: Gen, n: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Degenerate("root exponent must be nonzero".into()));
        }
        self.targets.insert(gen, n);
        Ok(self)
    }

    pub fn named(mut self, gen: Gen, name: &str) -> Self {
        self.fresh.insert(gen, name.to_string());
        self
    }

    pub fn targets(&self) -> &BTreeMap<Gen, i64> {
        &self.targets
    }
}

/// A transformed tree-product and the map from old generators to new words.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub tp: TreeProduct,
    pub map: BasisMap,
}

impl Transformed {
    /// Rewrites a word of the source presentation.
    pub fn apply(&self, w: &Word) -> Word {
        self.map.apply(w)
    }

    /// Runs `next` on the output and composes the maps.
    fn then(self, next: Transformed) -> Transformed {
        let forward = self
            .tp
            .generators()
            .iter()
            .enumerate()
            .filter_map(|(g, _)| {
                let g = g as Gen;
                let once = self.map.forward.get(&g).cloned().unwrap_or_else(|| Word::gen_power(g, 1));
                let twice = next.map.apply(&once);
                (twice != Word::gen_power(g, 1)).then_some((g, twice))
            })
            .collect();
        let mut backward = next.map.backward.clone();
        for (g, w) in &self.map.backward {
            backward.insert(*g, next.map.apply_inverse(w));
        }
        Transformed { tp: next.tp, map: BasisMap { forward, backward } }
    }

    fn identity(tp: &TreeProduct) -> Transformed {
        Transformed { tp: tp.clone(), map: BasisMap::identity() }
    }
}

/// Rebuilds `tp` with renamed generators and substituted edge-words.
fn rebuild(tp: &TreeProduct, rename: &BTreeMap<Gen, String>, forward: &BTreeMap<Gen, Word>) -> Result<TreeProduct> {
    let mut b = Builder::new();
    for v in tp.vertices() {
        b.add_vertex(&v.tag)?;
    }
    for (g, info) in tp.generators().iter().enumerate() {
        let name = rename.get(&(g as Gen)).cloned().unwrap_or_else(|| info.name.clone());
        match info.factor {
            Factor::Vertex(v) => b.add_gen(v, &name, info.stabilizing, info.y_index)?,
            Factor::H => b.add_h_gen(&name)?,
        };
    }
    let subst = |w: &Word| w.substitute(|g| forward.get(&g).cloned().unwrap_or_else(|| Word::gen_power(g, 1)));
    for e in tp.edges() {
        b.add_edge(Edge { left_word: subst(&e.left_word), right_word: subst(&e.right_word), ..e.clone() });
    }
    Ok(b.build())
}

fn validation_summary(tp: &TreeProduct) -> Option<String> {
    let v = tp.validate();
    (!v.is_empty()).then(|| v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
}

fn leaf_of(tp: &TreeProduct, g: Gen) -> Result<usize> {
    match tp.factor_of(g) {
        Factor::Vertex(v) if tp.is_leaf(v) => Ok(v),
        _ => Err(Error::Selection(format!("`{}` is not a generator of a leaf group", tp.alphabet().name(g)))),
    }
}

/// Distinct letters of the cyclic core of the leaf's edge-word, in order of first occurrence.
fn core_letters(tp: &TreeProduct, leaf: usize) -> Result<(Word, Vec<Gen>)> {
    let e = tp.leaf_edge(leaf)?;
    let p = tp.edges()[e].word_at(leaf).clone();
    let core = cyclic_reduce(&p).core;
    let mut seen = vec![];
    for l in core.letters() {
        if !seen.contains(&l.gen()) {
            seen.push(l.gen());
        }
    }
    Ok((p, seen))
}

/// Adjoins roots `ã` with `a = ãⁿ` for every target `a`.
pub fn root_product(tp: &TreeProduct, plan: &RootPlan) -> Result<Transformed> {
    let mut rename = BTreeMap::new();
    let mut forward = BTreeMap::new();
    for (&g, &n) in &plan.targets {
        let leaf = leaf_of(tp, g)?;
        let (p, letters) = core_letters(tp, leaf)?;
        if letters.len() < 2 {
            return Err(Error::Root(format!(
                "the cyclic core of {} in {} has fewer than two basis letters",
                tp.format(&p),
                tp.vertex(leaf).tag
            )));
        }
        let name = plan.fresh.get(&g).cloned().unwrap_or_else(|| format!("{}$r", tp.alphabet().name(g)));
        rename.insert(g, name);
        if n != 1 {
            forward.insert(g, Word::gen_power(g, n));
        }
    }
    let out = rebuild(tp, &rename, &forward)?;
    if let Some(err) = validation_summary(&out) {
        return Err(Error::Root(err));
    }
    Ok(Transformed { tp: out, map: BasisMap { forward, backward: BTreeMap::new() } })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IsoKind {
    /// `b̄ = b·aⁿ`
    RightMul,
    /// `b̄ = aⁿ·b`
    LeftMul,
}

/// Basis change `b ↦ b̄` inside one leaf group; `b̄` keeps the name of `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafIso {
    kind: IsoKind,
    a: Gen,
    b: Gen,
    n: i64,
}

impl LeafIso {
    pub fn new(kind: IsoKind, a: Gen, b: Gen, n: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Degenerate("leaf isomorphism exponent must be nonzero".into()));
        }
        if a == b {
            return Err(Error::Degenerate("leaf isomorphism needs two distinct generators".into()));
        }
        Ok(LeafIso { kind, a, b, n })
    }

    pub fn kind(&self) -> IsoKind {
        self.kind
    }
}

pub fn leaf_iso(tp: &TreeProduct, iso: &LeafIso) -> Result<Transformed> {
    let (a, b, n) = (iso.a, iso.b, iso.n);
    let leaf = leaf_of(tp, a)?;
    if tp.factor_of(b) != Factor::Vertex(leaf) {
        return Err(Error::Iso("both generators must lie in the same leaf".into()));
    }
    if tp.generator(a).stabilizing != tp.generator(b).stabilizing {
        return Err(Error::Iso("generators differ in stabilizing class".into()));
    }
    let (bw, an) = (Word::gen_power(b, 1), Word::gen_power(a, n));
    let (old_b, new_b) = match iso.kind {
        IsoKind::RightMul => (bw.mul(&an.inverse()), bw.mul(&an)),
        IsoKind::LeftMul => (an.inverse().mul(&bw), an.mul(&bw)),
    };
    let forward = BTreeMap::from([(b, old_b)]);
    let backward = BTreeMap::from([(b, new_b)]);
    let out = rebuild(tp, &BTreeMap::new(), &forward)?;
    if let Some(err) = validation_summary(&out) {
        return Err(Error::Iso(err));
    }
    Ok(Transformed { tp: out, map: BasisMap { forward, backward } })
}

/// Tries `b·aⁿ` first, then `aⁿ·b`.
fn leaf_iso_either(tp: &TreeProduct, a: Gen, b: Gen, n: i64) -> Result<Transformed> {
    match leaf_iso(tp, &LeafIso::new(IsoKind::RightMul, a, b, n)?) {
        Ok(t) => Ok(t),
        Err(first) => leaf_iso(tp, &LeafIso::new(IsoKind::LeftMul, a, b, n)?).map_err(|second| {
            Error::Iso(format!("neither kind validates: {first}; {second}"))
        }),
    }
}

/// The outcome of preparing a leaf for a leaf-homomorphism.
#[derive(Clone, Debug)]
pub enum Prepared {
    /// The kernel generator vanished from the edge-word's cyclic core.
    ShorterBoundary { transformed: Transformed, relator: Word, before: usize, after: usize },
    /// `gen` has exponent sum zero in both the edge-word and the relator.
    Ready { transformed: Transformed, relator: Word, gen: Gen },
    /// The relator has nonzero exponent sum in `gen`; the matrix rows are the
    /// edge-word and the relator, the columns `gen` and `partner`.
    FullRank { transformed: Transformed, relator: Word, gen: Gen, partner: Gen, matrix: ExponentMatrix },
}

impl Prepared {
    pub fn name(&self) -> &'static str {
        match self {
            Prepared::ShorterBoundary { .. } => "ShorterBoundary",
            Prepared::Ready { .. } => "Ready",
            Prepared::FullRank { .. } => "FullRank",
        }
    }

    pub fn transformed(&self) -> &Transformed {
        match self {
            Prepared::ShorterBoundary { transformed, .. }
            | Prepared::Ready { transformed, .. }
            | Prepared::FullRank { transformed, .. } => transformed,
        }
    }
}

/// `a = ãᵐ` followed by `b̃ = b·ãᵏ` (or `ãᵏ·b`), which zeroes the `ã`-sum of
/// any word with `a`-sum `k` and `b`-sum `m`.
fn root_and_shear(tp: &TreeProduct, a: Gen, b: Gen, m: i64, k: i64) -> Result<Transformed> {
    let rooted = root_product(tp, &RootPlan::new().with(a, m)?)?;
    let sheared = leaf_iso_either(&rooted.tp, a, b, k)?;
    Ok(rooted.then(sheared))
}

/// Moves the leaf into a position where a leaf-homomorphism applies, shortens
/// its boundary, or exposes a full-rank exponent matrix.
pub fn prepare_leaf(tp: &TreeProduct, leaf: usize, r: &Word) -> Result<Prepared> {
    if !tp.is_leaf(leaf) {
        return Err(Error::Selection(format!("{} is not a leaf", tp.vertex(leaf).tag)));
    }
    let (p, letters) = core_letters(tp, leaf)?;
    let letters: Vec<Gen> = letters.into_iter().filter(|&g| !tp.generator(g).stabilizing).collect();
    if letters.len() < 2 {
        return Err(Error::PrimitiveEdge(tp.format(&p)));
    }
    let ps = |g: Gen| p.exponent_sum(g);
    let rs = |g: Gen| r.exponent_sum(g);
    let before = tp.boundary_length();
    let finish = |t: Transformed, a: Gen, b: Gen| -> Result<Prepared> {
        let p2 = t.tp.edges()[t.tp.leaf_edge(leaf)?].word_at(leaf).clone();
        let r2 = t.apply(r);
        let after = t.tp.boundary_length();
        if !cyclic_reduce(&p2).core.contains_gen(a) {
            return Ok(Prepared::ShorterBoundary { transformed: t, relator: r2, before, after });
        }
        if r2.exponent_sum(a) == 0 {
            return Ok(Prepared::Ready { transformed: t, relator: r2, gen: a });
        }
        let matrix = build_matrix(&[p2, r2.clone()], &[a, b]);
        Ok(Prepared::FullRank { transformed: t, relator: r2, gen: a, partner: b, matrix })
    };
    if let Some(&a) = letters.iter().find(|&&g| ps(g) == 0) {
        if rs(a) == 0 {
            return finish(Transformed::identity(tp), a, a);
        }
        if let Some(&b) = letters.iter().find(|&&g| ps(g) != 0) {
            return finish(Transformed::identity(tp), a, b);
        }
        let &b = letters.iter().find(|&&g| g != a).expect("two letters");
        if rs(b) == 0 {
            return finish(Transformed::identity(tp), b, a);
        }
        let t = root_and_shear(tp, a, b, rs(b), rs(a))?;
        return finish(t, a, b);
    }
    let (a, b) = (letters[0], letters[1]);
    let t = root_and_shear(tp, a, b, ps(b), ps(a))?;
    finish(t, a, b)
}

/// Checks that a leaf-homomorphism for `a` exists and returns the edge-word.
fn check_leaf_gen(tp: &TreeProduct, leaf: usize, a: Gen) -> Result<Word> {
    if tp.factor_of(a) != Factor::Vertex(leaf) {
        return Err(Error::NotHomomorphism(format!(
            "`{}` is not a generator of {}",
            tp.alphabet().name(a),
            tp.vertex(leaf).tag
        )));
    }
    if !tp.is_leaf(leaf) {
        return Err(Error::NotHomomorphism(format!("{} is not a leaf", tp.vertex(leaf).tag)));
    }
    let p = tp.edges()[tp.leaf_edge(leaf)?].word_at(leaf).clone();
    if !p.contains_gen(a) {
        return Err(Error::NotHomomorphism(format!("`{}` does not occur in {}", tp.alphabet().name(a), tp.format(&p))));
    }
    if p.exponent_sum(a) != 0 {
        return Err(Error::NotHomomorphism(format!(
            "`{}` has exponent sum {} in {}",
            tp.alphabet().name(a),
            p.exponent_sum(a),
            tp.format(&p)
        )));
    }
    Ok(p)
}

/// The map to ℤ sending `a` to 1 and every other generator to 0.
pub fn leaf_homomorphism(tp: &TreeProduct, leaf: usize, a: Gen, w: &Word) -> Result<i64> {
    check_leaf_gen(tp, leaf, a)?;
    Ok(w.exponent_sum(a))
}

/// Least and greatest value of the running index over all prefixes.
pub fn index_profile(w: &Word, a: Gen) -> (i64, i64) {
    let (mut lambda, mut lo, mut hi) = (0i64, 0i64, 0i64);
    for l in w.letters() {
        if l.gen() == a {
            lambda -= l.sign();
            lo = lo.min(lambda);
            hi = hi.max(lambda);
        }
    }
    (lo, hi)
}

fn indexed(name: &str, i: i64) -> String {
    format!("{name}${i}")
}

/// Finite window of the kernel of a leaf-homomorphism, realized as a
/// tree-product `K` with free factor `H̃`.
///
/// The central vertex keeps the leaf's tag and carries `b$j = a⁻ʲ·b·aʲ`;
/// slice `i` holds copies `V$i` of the other vertices with generators
/// `x$i = a⁻ⁱ·x·aⁱ`, and `H̃` holds `h$i`.
#[derive(Clone, Debug)]
pub struct KernelPresentation {
    base: TreeProduct,
    leaf: usize,
    gen: Gen,
    window: (i64, i64),
    tree: TreeProduct,
    origin: Vec<(Gen, i64)>,
    lookup: BTreeMap<(Gen, i64), Gen>,
    slices: Vec<Option<i64>>,
}

impl KernelPresentation {
    pub fn build(tp: &TreeProduct, leaf: usize, a: Gen, window: (i64, i64)) -> Result<Self> {
        let p = check_leaf_gen(tp, leaf, a)?;
        let (lo, hi) = window;
        if lo > hi {
            return Err(Error::Degenerate(format!("empty window {lo}..{hi}")));
        }
        let (pmin, pmax) = index_profile(&p, a);
        let mut b = Builder::new();
        let mut origin = vec![];
        let mut lookup = BTreeMap::new();
        let mut slices = vec![None];
        let mut record = |g: Gen, base: Gen, i: i64, origin: &mut Vec<(Gen, i64)>| {
            debug_assert_eq!(g as usize, origin.len());
            origin.push((base, i));
            lookup.insert((base, i), g);
        };
        let center = b.add_vertex(&tp.vertex(leaf).tag)?;
        for &g in &tp.vertex(leaf).gens {
            if g == a {
                continue;
            }
            let info = tp.generator(g);
            for j in lo + pmin..=hi + pmax {
                let y = if info.stabilizing { None } else { Some(j) };
                let k = b.add_gen(center, &indexed(&info.name, j), info.stabilizing, y)?;
                record(k, g, j, &mut origin);
            }
        }
        let mut vertex_at = BTreeMap::new();
        for i in lo..=hi {
            for (v, vert) in tp.vertices().iter().enumerate() {
                if v == leaf {
                    continue;
                }
                let nv = b.add_vertex(&indexed(&vert.tag, i))?;
                vertex_at.insert((v, i), nv);
                slices.push(Some(i));
                for &g in &vert.gens {
                    let info = tp.generator(g);
                    let k = b.add_gen(nv, &indexed(&info.name, i), info.stabilizing, info.y_index)?;
                    record(k, g, i, &mut origin);
                }
            }
        }
        for i in lo..=hi {
            for &h in tp.h_gens() {
                let k = b.add_h_gen(&indexed(&tp.generator(h).name, i))?;
                record(k, h, i, &mut origin);
            }
        }
        let mut kp = KernelPresentation {
            base: tp.clone(),
            leaf,
            gen: a,
            window,
            tree: Builder::new().build(),
            origin,
            lookup,
            slices,
        };
        for i in lo..=hi {
            let p_i = kp.rewrite_closed(&p, i)?;
            for e in tp.edges() {
                let shift = |w: &Word| kp.shift_base(w, i);
                if e.touches(leaf) {
                    let nb = e.other(leaf);
                    b.add_edge(Edge {
                        left: center,
                        right: vertex_at[&(nb, i)],
                        left_word: p_i.clone(),
                        right_word: shift(e.word_at(nb))?,
                        left_order: i,
                        right_order: e.order_at(nb),
                    });
                } else {
                    b.add_edge(Edge {
                        left: vertex_at[&(e.left, i)],
                        right: vertex_at[&(e.right, i)],
                        left_word: shift(&e.left_word)?,
                        right_word: shift(&e.right_word)?,
                        left_order: e.left_order,
                        right_order: e.right_order,
                    });
                }
            }
        }
        kp.tree = b.build();
        Ok(kp)
    }

    /// Rebuilds over the union of the current and the requested window.
    pub fn widen(&mut self, window: (i64, i64)) -> Result<()> {
        let (lo, hi) = (self.window.0.min(window.0), self.window.1.max(window.1));
        if (lo, hi) != self.window {
            *self = Self::build(&self.base, self.leaf, self.gen, (lo, hi))?;
        }
        Ok(())
    }

    pub fn base(&self) -> &TreeProduct {
        &self.base
    }

    pub fn tree(&self) -> &TreeProduct {
        &self.tree
    }

    pub fn leaf(&self) -> usize {
        self.leaf
    }

    pub fn gen(&self) -> Gen {
        self.gen
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    /// Slice of a kernel vertex; `None` for the central vertex and `H̃`.
    pub fn slice_of(&self, node: usize) -> Option<i64> {
        self.slices.get(node).copied().flatten()
    }

    /// Base generator and index of a kernel generator.
    pub fn origin(&self, g: Gen) -> (Gen, i64) {
        self.origin[g as usize]
    }

    pub fn kernel_gen(&self, base: Gen, i: i64) -> Option<Gen> {
        self.lookup.get(&(base, i)).copied()
    }

    /// Kernel vertex holding the copy of base vertex `v` in slice `i`.
    pub fn vertex_copy(&self, v: usize, i: i64) -> Option<usize> {
        if v == self.leaf {
            return Some(0);
        }
        let tag = indexed(&self.base.vertex(v).tag, i);
        self.tree.vertex_index(&tag).ok()
    }

    fn shift_base(&self, w: &Word, i: i64) -> Result<Word> {
        let letters = w
            .letters()
            .iter()
            .map(|l| {
                self.kernel_gen(l.gen(), i)
                    .map(|k| Letter::new(k, l.is_inverse()))
                    .ok_or(Error::Window { lo: i, hi: i })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::from_letters(&letters))
    }

    /// Adds `k` to every index of a kernel word.
    pub fn shift_kernel(&self, w: &Word, k: i64) -> Result<Word> {
        let letters = w
            .letters()
            .iter()
            .map(|l| {
                let (g, i) = self.origin(l.gen());
                self.kernel_gen(g, i + k)
                    .map(|x| Letter::new(x, l.is_inverse()))
                    .ok_or(Error::Window { lo: self.window.0 + k.min(0), hi: self.window.1 + k.max(0) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::from_letters(&letters))
    }

    /// Slice window that `rewrite(w, ell)` needs.
    pub fn required_window(&self, w: &Word, ell: i64) -> (i64, i64) {
        let (lo, hi) = index_profile(w, self.gen);
        (lo + ell, hi + ell)
    }

    fn rewrite_closed(&self, w: &Word, ell: i64) -> Result<Word> {
        let mut lambda = 0;
        let out = self.rewrite_from(w, &mut lambda, ell)?;
        if lambda != 0 {
            return Err(Error::NotInKernel(-lambda));
        }
        Ok(out)
    }

    /// Running-index rewriting of `w` into `a⁻ᵉˡˡ·w·aᵉˡˡ`; `lambda` carries the
    /// index across calls.
    pub fn rewrite_from(&self, w: &Word, lambda: &mut i64, ell: i64) -> Result<Word> {
        let mut out = Vec::with_capacity(w.len());
        let start = *lambda;
        for l in w.letters() {
            if l.gen() == self.gen {
                *lambda -= l.sign();
                continue;
            }
            match self.kernel_gen(l.gen(), *lambda + ell) {
                Some(k) => out.push(Letter::new(k, l.is_inverse())),
                None => {
                    let (lo, hi) = index_profile(w, self.gen);
                    let need = (lo + start + ell, hi + start + ell);
                    return Err(Error::Window { lo: need.0.min(self.window.0), hi: need.1.max(self.window.1) });
                }
            }
        }
        Ok(Word::from_letters(&out))
    }

    /// Rewrites an element of the kernel, conjugated by `a^ell`.
    pub fn rewrite(&self, w: &Word, ell: i64) -> Result<Word> {
        let phi = w.exponent_sum(self.gen);
        if phi != 0 {
            return Err(Error::NotInKernel(phi));
        }
        self.rewrite_closed(w, ell)
    }

    /// `g$i ↦ a⁻ⁱ·g·aⁱ`.
    pub fn expand(&self, w: &Word) -> Word {
        Word::product(
            w.letters()
                .iter()
                .map(|l| {
                    let (g, i) = self.origin(l.gen());
                    let x = Word::letter(Letter::new(g, l.is_inverse()));
                    x.conjugate_by(&Word::gen_power(self.gen, i))
                })
                .collect::<Vec<_>>()
                .iter(),
        )
    }

    /// Edge-word of the central vertex towards slice `i`.
    pub fn edge_word(&self, i: i64) -> Option<&Word> {
        let e = self.tree.incident_edges(0).find(|&e| self.slice_of(self.tree.edges()[e].other(0)) == Some(i))?;
        Some(self.tree.edges()[e].word_at(0))
    }

    /// Presentation text followed by `# translate <kernel> <base> <index>` lines.
    pub fn serialize(&self) -> String {
        let mut out = format!(
            "# kernel of {} at {} over slices {}..{}\n",
            self.base.alphabet().name(self.gen),
            self.base.vertex(self.leaf).tag,
            self.window.0,
            self.window.1
        );
        out.push_str(&self.tree.serialize());
        for (k, &(g, i)) in self.origin.iter().enumerate() {
            out.push_str(&format!(
                "# translate {} {} {}\n",
                self.tree.alphabet().name(k as Gen),
                self.base.alphabet().name(g),
                i
            ));
        }
        out
    }
}

/// Reads the `# translate` lines of a serialized kernel.
pub fn parse_translations(text: &str) -> Result<Vec<(String, String, i64)>> {
    let mut out = vec![];
    for (n, line) in text.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix("# translate ") else { continue };
        let parts: Vec<&str> = rest.split_whitespace().collect();
        let [k, g, i] = parts[..] else {
            return Err(Error::Parse(format!("line {}: malformed translation", n + 1)));
        };
        let i = i.parse().map_err(|_| Error::Parse(format!("line {}: bad index `{i}`", n + 1)))?;
        out.push((k.to_string(), g.to_string(), i));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    /// The kernel rewrite meets at most one slice.
    Reduction { slice: Option<i64> },
    /// The kernel rewrite meets the listed slices.
    Fan { slices: Vec<i64> },
}

/// Classifies `a` by the slices met by the minimal tree of `r` in the kernel.
pub fn classify_generator(tp: &TreeProduct, leaf: usize, a: Gen, r: &Word) -> Result<Classification> {
    let phi = leaf_homomorphism(tp, leaf, a, r)?;
    if phi != 0 {
        return Err(Error::NotInKernel(phi));
    }
    let (lo, hi) = index_profile(r, a);
    let kp = KernelPresentation::build(tp, leaf, a, (lo, hi))?;
    let kr = kp.rewrite(r, 0)?;
    let slices: BTreeSet<i64> = match contract(kp.tree(), &kr) {
        Ok(cc) => cc.minimal_tree.iter().filter_map(|v| kp.slice_of(v)).collect(),
        Err(Error::Trivial) => BTreeSet::new(),
        Err(Error::SingleFactor(tag)) => kp.tree().vertex_index(&tag).ok().and_then(|v| kp.slice_of(v)).into_iter().collect(),
        Err(e) => return Err(e),
    };
    Ok(if slices.len() <= 1 {
        Classification::Reduction { slice: slices.into_iter().next() }
    } else {
        Classification::Fan { slices: slices.into_iter().collect() }
    })
}

/// Letters of `p` that are not `a`, so `|p_i| = |p| − #a`.
pub fn expected_edge_length(p: &Word, a: Gen) -> usize {
    p.letters().iter().filter(|l| l.gen() != a).count()
}

/// Is `p` of the form `v⁻¹·x^{±1}·v`?
pub fn is_primitive_edge(p: &Word) -> bool {
    split_conjugate(p).1.len() == 1
}
