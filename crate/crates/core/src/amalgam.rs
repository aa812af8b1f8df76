//! Word problem and contracted conjugates in `G ∗ H`.
//!
//! An element is written as a closed path in the tree of factors, starting
//! and ending at the root vertex, with one syllable per visited node. A
//! backtrack `u → v → u` whose middle syllable lies in the edge subgroup is
//! folded into `u`. The element is trivial iff the fully folded path is the
//! bare root.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::presentation::{Factor, SubtreeSelection, TreeProduct};
use crate::words::{free_reduce, power_membership, split_conjugate, Word};

/// A nonempty word in one factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub factor: Factor,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PieceSequence(pub Vec<Piece>);

impl PieceSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.0
    }

    /// Concatenation of all pieces.
    pub fn product(&self) -> Word {
        Word::product(self.0.iter().map(|p| &p.word))
    }

    /// `TAG:word | TAG:word`.
    pub fn serialize(&self, tp: &TreeProduct) -> String {
        serialize_pieces(tp, &self.0)
    }
}

fn serialize_pieces(tp: &TreeProduct, pieces: &[Piece]) -> String {
    if pieces.is_empty() {
        return "(empty)".into();
    }
    let mut out = String::new();
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        let _ = write!(out, "{}:{}", tp.factor_tag(p.factor), tp.format(&p.word));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalForm {
    Trivial,
    Pieces(PieceSequence),
}

impl NormalForm {
    pub fn is_trivial(&self) -> bool {
        matches!(self, NormalForm::Trivial)
    }
}

/// If `word` (at node `v`) lies in the subgroup of the edge `v-u`, its image at `u`.
fn push_across(tp: &TreeProduct, v: usize, u: usize, word: &Word) -> Result<Option<Word>> {
    let h = tp.h_node();
    if v == h || u == h {
        return Ok(word.is_empty().then(Word::identity));
    }
    let e = tp.edge_between(v, u).ok_or_else(|| Error::Invalid("path step without edge".into()))?;
    let edge = &tp.edges()[e];
    Ok(power_membership(word, edge.word_at(v))?.map(|k| edge.word_at(u).pow(k)))
}

fn syllables(tp: &TreeProduct, w: &Word) -> Vec<(usize, Word)> {
    let mut out: Vec<(usize, Vec<crate::words::Letter>)> = vec![];
    for &l in w.letters() {
        let node = tp.node_of(tp.factor_of(l.gen()));
        match out.last_mut() {
            Some((n, ls)) if *n == node => ls.push(l),
            _ => out.push((node, vec![l])),
        }
    }
    out.into_iter().map(|(n, ls)| (n, free_reduce(&ls))).collect()
}

struct LoopStack<'a> {
    tp: &'a TreeProduct,
    stack: Vec<(usize, Word)>,
}

impl LoopStack<'_> {
    fn push(&mut self, node: usize, g: Word) -> Result<()> {
        match self.stack.last_mut() {
            Some((n, w)) if *n == node => *w = w.mul(&g),
            _ => self.stack.push((node, g)),
        }
        while self.stack.len() >= 3 {
            let n = self.stack.len();
            if self.stack[n - 3].0 != self.stack[n - 1].0 {
                break;
            }
            let (v, u) = (self.stack[n - 2].0, self.stack[n - 1].0);
            match push_across(self.tp, v, u, &self.stack[n - 2].1)? {
                Some(img) => {
                    let (_, g3) = self.stack.pop().expect("len>=3");
                    self.stack.pop();
                    let top = &mut self.stack.last_mut().expect("len>=1").1;
                    *top = top.mul(&img).mul(&g3);
                }
                None => break,
            }
        }
        Ok(())
    }
}

/// Folded closed path at `root`; node `h_node()` stands for `H`.
pub fn reduce_loop(tp: &TreeProduct, w: &Word, root: usize) -> Result<Vec<(usize, Word)>> {
    let topo = tp.topology()?;
    let mut ls = LoopStack { tp, stack: Vec::with_capacity(2 * w.len() + 2) };
    ls.push(root, Word::identity())?;
    let mut cur = root;
    for (node, g) in syllables(tp, w) {
        let path = topo.path(cur, node);
        for &mid in path.iter().skip(1).take(path.len().saturating_sub(2)) {
            ls.push(mid, Word::identity())?;
        }
        ls.push(node, g)?;
        cur = node;
    }
    let path = topo.path(cur, root);
    for &mid in path.iter().skip(1) {
        ls.push(mid, Word::identity())?;
    }
    Ok(ls.stack)
}

/// Syllables of the folded root path; trivial iff `w = 1` in `G ∗ H`.
pub fn normal_form(tp: &TreeProduct, w: &Word) -> Result<NormalForm> {
    let stack = reduce_loop(tp, w, 0)?;
    if stack.len() == 1 && stack[0].1.is_empty() {
        return Ok(NormalForm::Trivial);
    }
    Ok(NormalForm::Pieces(PieceSequence(
        stack
            .into_iter()
            .filter(|(_, g)| !g.is_empty())
            .map(|(n, g)| Piece { factor: tp.factor_of_node(n), word: g })
            .collect(),
    )))
}

pub fn is_trivial(tp: &TreeProduct, w: &Word) -> Result<bool> {
    Ok(normal_form(tp, w)?.is_trivial())
}

/// The element of factor `f` equal to `w`, if any.
pub fn element_in_factor(tp: &TreeProduct, w: &Word, f: Factor) -> Result<Option<Word>> {
    let stack = reduce_loop(tp, w, tp.node_of(f))?;
    Ok((stack.len() == 1).then(|| stack.into_iter().next().expect("len 1").1))
}

pub fn element_in_vertex(tp: &TreeProduct, w: &Word, v: usize) -> Result<Option<Word>> {
    element_in_factor(tp, w, Factor::Vertex(v))
}

/// Representation of an element that depends only on the element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<(usize, Word)>);

fn shortlex_less(a: &Word, b: &Word) -> bool {
    (a.len(), a.letters()) < (b.len(), b.letters())
}

/// Folded root path with every non-root syllable replaced by the shortlex
/// least representative of its coset `⟨c⟩ g`, carrying `c`-powers leftward.
pub fn canonical_form(tp: &TreeProduct, w: &Word) -> Result<CanonicalForm> {
    let mut stack = reduce_loop(tp, w, 0)?;
    let h = tp.h_node();
    for i in (1..stack.len()).rev() {
        let (node, prev) = (stack[i].0, stack[i - 1].0);
        if node == h || prev == h {
            continue;
        }
        let e = &tp.edges()[tp.edge_between(node, prev).expect("adjacent")];
        let (c, cp) = (e.word_at(node), e.word_at(prev));
        let (v, core) = split_conjugate(c);
        let g = stack[i].1.clone();
        let bound = ((2 * g.len() + 2 * v.len()) / core.len().max(1) + 1) as i64;
        let (ci, cinv) = (c.clone(), c.inverse());
        let (mut best, mut best_k) = (g.clone(), 0i64);
        let (mut up, mut down) = (g.clone(), g.clone());
        for k in 1..=bound {
            up = cinv.mul(&up);
            if shortlex_less(&up, &best) {
                best = up.clone();
                best_k = k;
            }
            down = ci.mul(&down);
            if shortlex_less(&down, &best) {
                best = down.clone();
                best_k = -k;
            }
        }
        if best_k != 0 {
            stack[i].1 = best;
            let carry = cp.pow(best_k);
            stack[i - 1].1 = stack[i - 1].1.mul(&carry);
        }
    }
    Ok(CanonicalForm(stack))
}

/// Kinds of logged rewriting steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Step1,
    DropTrivial,
    MergeH,
    Step2Replace,
    Step2DropLeaf,
    Step3Merge,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Step1 => "Step1",
            StepKind::DropTrivial => "DropTrivial",
            StepKind::MergeH => "MergeH",
            StepKind::Step2Replace => "Step2Replace",
            StepKind::Step2DropLeaf => "Step2DropLeaf",
            StepKind::Step3Merge => "Step3Merge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub before: String,
    pub after: String,
    pub pieces_before: usize,
    pub pieces_after: usize,
}

/// Result of contraction: `conjugator⁻¹ · w · conjugator = product of pieces`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractedConjugate {
    pub pieces: PieceSequence,
    pub minimal_tree: SubtreeSelection,
    pub conjugator: Word,
}

impl ContractedConjugate {
    /// Number of pieces.
    pub fn length(&self) -> usize {
        self.pieces.len()
    }
}

const MAX_ROUNDS: usize = 100_000;

/// Cyclic piece sequence under the Step-2/Step-3 rewriting loop.
pub struct Engine<'a> {
    tp: &'a TreeProduct,
    pieces: Vec<Piece>,
    conj: Word,
    trace: Vec<TraceStep>,
}

impl<'a> Engine<'a> {
    /// `conj⁻¹ · element · conj = product of pieces`.
    pub fn new(tp: &'a TreeProduct, pieces: Vec<Piece>, conj: Word) -> Self {
        Engine { tp, pieces, conj, trace: vec![] }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn conjugator(&self) -> &Word {
        &self.conj
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    pub fn into_parts(self) -> (Vec<Piece>, Word, Vec<TraceStep>) {
        (self.pieces, self.conj, self.trace)
    }

    pub fn serialize(&self) -> String {
        serialize_pieces(self.tp, &self.pieces)
    }

    fn log(&mut self, kind: StepKind, before: String, n_before: usize) {
        let after = self.serialize();
        self.trace.push(TraceStep { kind, before, after, pieces_before: n_before, pieces_after: self.pieces.len() });
    }

    /// Moves the first `k` pieces to the end.
    pub fn rotate_left(&mut self, k: usize) {
        if k == 0 || self.pieces.is_empty() {
            return;
        }
        let head = Word::product(self.pieces[..k].iter().map(|p| &p.word));
        self.conj = self.conj.mul(&head);
        self.pieces.rotate_left(k);
    }

    fn rotate_right_one(&mut self) {
        let last = self.pieces.last().expect("nonempty").word.clone();
        self.conj = self.conj.mul(&last.inverse());
        self.pieces.rotate_right(1);
    }

    /// Deletes empty pieces and merges cyclically adjacent same-factor pieces.
    pub fn normalize(&mut self, merge_kind: StepKind) {
        loop {
            if let Some(i) = self.pieces.iter().position(|p| p.word.is_empty()) {
                let (before, n) = (self.serialize(), self.pieces.len());
                self.pieces.remove(i);
                self.log(StepKind::DropTrivial, before, n);
                continue;
            }
            let n = self.pieces.len();
            if n >= 2 {
                if let Some(i) = (0..n - 1).find(|&i| self.pieces[i].factor == self.pieces[i + 1].factor) {
                    let before = self.serialize();
                    let next = self.pieces.remove(i + 1);
                    self.pieces[i].word = self.pieces[i].word.mul(&next.word);
                    let kind = if next.factor == Factor::H { StepKind::MergeH } else { merge_kind };
                    self.log(kind, before, n);
                    continue;
                }
                if self.pieces[0].factor == self.pieces[n - 1].factor {
                    let before = self.serialize();
                    self.rotate_right_one();
                    let next = self.pieces.remove(1);
                    self.pieces[0].word = self.pieces[0].word.mul(&next.word);
                    let kind = if next.factor == Factor::H { StepKind::MergeH } else { merge_kind };
                    self.log(kind, before, n);
                    continue;
                }
            }
            break;
        }
    }

    /// Minimal subtree spanned by the vertex pieces.
    pub fn span(&self) -> BTreeSet<usize> {
        span_of(self.tp, self.pieces.iter().filter_map(|p| match p.factor {
            Factor::Vertex(v) => Some(v),
            Factor::H => None,
        }))
    }

    fn check_not_single(&self) -> Result<BTreeSet<usize>> {
        let span = self.span();
        if self.pieces.is_empty() {
            return Err(Error::Trivial);
        }
        let has_h = self.pieces.iter().any(|p| p.factor == Factor::H);
        if self.pieces.len() <= 1 || (span.len() <= 1 && !has_h) {
            let tag = match span.iter().next() {
                Some(&v) => self.tp.vertex(v).tag.clone(),
                None => "H".into(),
            };
            return Err(Error::SingleFactor(tag));
        }
        Ok(span)
    }

    /// A Step-2 candidate: piece index, leaf, neighbor, exponent.
    fn step2_candidate(&self, span: &BTreeSet<usize>, skip_blocked: bool) -> Result<Option<(usize, usize, usize, i64)>> {
        for leaf in leaves_by_tag(self.tp, span) {
            let nb = tree_neighbor(self.tp, span, leaf);
            let e = &self.tp.edges()[self.tp.edge_between(leaf, nb).expect("adjacent")];
            let p = e.word_at(leaf);
            for (i, piece) in self.pieces.iter().enumerate() {
                if piece.factor != Factor::Vertex(leaf) {
                    continue;
                }
                if let Some(k) = power_membership(&piece.word, p)? {
                    if skip_blocked && span.len() == 2 && self.blocked(i, leaf, nb) {
                        continue;
                    }
                    return Ok(Some((i, leaf, nb, k)));
                }
            }
        }
        Ok(None)
    }

    /// With two vertices, moving an isolated piece would only move the violation.
    fn blocked(&self, i: usize, leaf: usize, nb: usize) -> bool {
        let n = self.pieces.len();
        let at_nb = |j: usize| self.pieces[j].factor == Factor::Vertex(nb);
        let merges = at_nb((i + n - 1) % n) || at_nb((i + 1) % n);
        let others = self.pieces.iter().enumerate().any(|(j, p)| j != i && p.factor == Factor::Vertex(leaf));
        !merges && others
    }

    /// Step 2 to its fixed point. Returns whether anything changed.
    pub fn step2(&mut self) -> Result<bool> {
        let mut changed = false;
        for _ in 0..MAX_ROUNDS {
            let span = self.check_not_single()?;
            let Some((i, leaf, nb, k)) = self.step2_candidate(&span, true)? else {
                return Ok(changed);
            };
            let (before, n) = (self.serialize(), self.pieces.len());
            let e = &self.tp.edges()[self.tp.edge_between(leaf, nb).expect("adjacent")];
            self.pieces[i] = Piece { factor: Factor::Vertex(nb), word: e.word_at(nb).pow(k) };
            self.log(StepKind::Step2Replace, before, n);
            self.normalize(StepKind::Step2Replace);
            let new_span = self.span();
            if new_span.len() < span.len() {
                let s = self.serialize();
                let m = self.pieces.len();
                self.log(StepKind::Step2DropLeaf, s, m);
            }
            changed = true;
        }
        Err(Error::Invalid("rewriting loop did not stabilise".into()))
    }

    /// One pass of Step 3 over the leaves. Returns whether a merge happened.
    pub fn step3(&mut self) -> Result<bool> {
        let span = self.check_not_single()?;
        for leaf in leaves_by_tag(self.tp, &span) {
            let nb = tree_neighbor(self.tp, &span, leaf);
            let e = &self.tp.edges()[self.tp.edge_between(leaf, nb).expect("adjacent")];
            let (p, q) = (e.word_at(leaf).clone(), e.word_at(nb).clone());
            let n = self.pieces.len();
            let tau: Vec<usize> = (0..n).filter(|&i| self.pieces[i].factor == Factor::Vertex(leaf)).collect();
            let m = tau.len();
            for j in 0..m {
                let start = tau[j];
                let end = if j + 1 < m { tau[j + 1] } else { tau[0] + n };
                let run = Word::product((start + 1..end).map(|i| &self.pieces[i % n].word));
                let Some(inner) = element_in_vertex(self.tp, &run, nb)? else { continue };
                let Some(k) = power_membership(&inner, &q)? else { continue };
                if m == 1 {
                    return Err(Error::SingleFactor(self.tp.vertex(leaf).tag.clone()));
                }
                let before = self.serialize();
                self.rotate_left(start);
                let len = end - start;
                let merged = Word::product(
                    [&self.pieces[0].word, &p.pow(k), &self.pieces[len].word],
                );
                self.pieces.splice(0..=len, [Piece { factor: Factor::Vertex(leaf), word: merged }]);
                self.log(StepKind::Step3Merge, before, n);
                self.normalize(StepKind::Step3Merge);
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Runs Step 2 and Step 3 to a joint fixed point, then rotates to the
    /// least serialization.
    pub fn run(&mut self) -> Result<SubtreeSelection> {
        self.normalize(StepKind::Step2Replace);
        for _ in 0..MAX_ROUNDS {
            let count = self.pieces.len();
            self.step2()?;
            if self.step3()? {
                debug_assert!(self.pieces.len() < count || count == 0);
                continue;
            }
            let span = self.check_not_single()?;
            if let Some((i, leaf, _, _)) = self.step2_candidate(&span, false)? {
                return Err(Error::Uncontractible(format!(
                    "piece {} at {} is an edge-word power between factors other than its neighbour",
                    self.tp.format(&self.pieces[i].word),
                    self.tp.vertex(leaf).tag
                )));
            }
            self.canonical_rotation();
            return Ok(SubtreeSelection(span));
        }
        Err(Error::Invalid("rewriting loop did not stabilise".into()))
    }

    fn canonical_rotation(&mut self) {
        let n = self.pieces.len();
        let best = (0..n)
            .min_by_key(|&k| {
                let (a, b) = self.pieces.split_at(k);
                let rotated: Vec<Piece> = b.iter().chain(a.iter()).cloned().collect();
                serialize_pieces(self.tp, &rotated)
            })
            .unwrap_or(0);
        self.rotate_left(best);
    }
}

/// Minimal subtree containing `vs`.
pub fn span_of(tp: &TreeProduct, vs: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let vs: BTreeSet<usize> = vs.into_iter().collect();
    let Some(&first) = vs.iter().next() else { return BTreeSet::new() };
    let Ok(topo) = tp.topology() else { return vs };
    let mut out = BTreeSet::new();
    for &v in &vs {
        out.extend(topo.path(first, v));
    }
    out
}

/// Leaves of the subtree `span`, ordered by tag.
pub fn leaves_by_tag(tp: &TreeProduct, span: &BTreeSet<usize>) -> Vec<usize> {
    if span.len() < 2 {
        return vec![];
    }
    let mut ls: Vec<usize> = span
        .iter()
        .copied()
        .filter(|&v| tp.edges().iter().filter(|e| e.touches(v) && span.contains(&e.other(v))).count() == 1)
        .collect();
    ls.sort_by(|&a, &b| tp.vertex(a).tag.cmp(&tp.vertex(b).tag));
    ls
}

fn tree_neighbor(tp: &TreeProduct, span: &BTreeSet<usize>, leaf: usize) -> usize {
    tp.edges()
        .iter()
        .find(|e| e.touches(leaf) && span.contains(&e.other(leaf)))
        .map(|e| e.other(leaf))
        .expect("leaf of a subtree with at least two vertices")
}

/// Cyclic syllable sequence with `conj⁻¹ · w · conj = product`.
struct CyclicLoop {
    items: Vec<(usize, Word)>,
    conj: Word,
}

impl CyclicLoop {
    fn rotate_left(&mut self, k: usize) {
        if k == 0 {
            return;
        }
        let head = Word::product(self.items[..k].iter().map(|(_, g)| g));
        self.conj = self.conj.mul(&head);
        self.items.rotate_left(k);
    }

    /// Folds every cyclic backtrack through an edge subgroup.
    fn fold(&mut self, tp: &TreeProduct) -> Result<()> {
        loop {
            let n = self.items.len();
            if n >= 2 && self.items[0].0 == self.items[n - 1].0 {
                let (node, last) = self.items.pop().expect("n>=2");
                self.conj = self.conj.mul(&last.inverse());
                self.items[0] = (node, last.mul(&self.items[0].1));
                continue;
            }
            if n < 2 {
                return Ok(());
            }
            let mut folded = false;
            for i in 0..n {
                let (prev, next) = ((i + n - 1) % n, (i + 1) % n);
                if self.items[prev].0 != self.items[next].0 {
                    continue;
                }
                let Some(img) = push_across(tp, self.items[i].0, self.items[prev].0, &self.items[i].1)? else {
                    continue;
                };
                self.rotate_left(prev);
                let merged = if n == 2 {
                    self.items[0].1.mul(&img)
                } else {
                    self.items[0].1.mul(&img).mul(&self.items[2].1)
                };
                let node = self.items[0].0;
                self.items.drain(0..n.min(3));
                self.items.insert(0, (node, merged));
                folded = true;
                break;
            }
            if !folded {
                return Ok(());
            }
        }
    }
}

/// Edge-word at `v` towards `u`, `None` across the trivial edge to `H`.
fn edge_word_towards(tp: &TreeProduct, v: usize, u: usize) -> Option<&Word> {
    let h = tp.h_node();
    if v == h || u == h {
        return None;
    }
    tp.edge_between(v, u).map(|e| tp.edges()[e].word_at(v))
}

/// `(s, t)` with `g = leftˢ · rightᵗ`.
fn split_double_coset(g: &Word, left: Option<&Word>, right: Option<&Word>) -> Result<Option<(i64, i64)>> {
    match (left, right) {
        (None, None) => Ok(g.is_empty().then_some((0, 0))),
        (None, Some(r)) => Ok(power_membership(g, r)?.map(|t| (0, t))),
        (Some(l), None) => Ok(power_membership(g, l)?.map(|s| (s, 0))),
        (Some(l), Some(r)) => {
            let core = split_conjugate(l).1.len().max(1);
            let bound = ((g.len() + 4 * (l.len() + r.len())) / core + 2) as i64;
            let linv = l.inverse();
            let (mut up, mut down) = (g.clone(), g.clone());
            if let Some(t) = power_membership(g, r)? {
                return Ok(Some((0, t)));
            }
            for s in 1..=bound {
                up = linv.mul(&up);
                if let Some(t) = power_membership(&up, r)? {
                    return Ok(Some((s, t)));
                }
                down = l.mul(&down);
                if let Some(t) = power_membership(&down, r)? {
                    return Ok(Some((-s, t)));
                }
            }
            Ok(None)
        }
    }
}

/// Pushes the largest compatible set of pass-through syllables into their
/// edge subgroups; the number of survivors is a conjugacy invariant.
fn absorb_pass_through(tp: &TreeProduct, cl: &mut CyclicLoop) -> Result<()> {
    let n = cl.items.len();
    let node = |i: usize| cl.items[i % n].0;
    let mut split = vec![None; n];
    for i in 0..n {
        let (prev, next) = (node(i + n - 1), node(i + 1));
        if prev == next || node(i) == tp.h_node() {
            continue;
        }
        let (l, r) = (edge_word_towards(tp, node(i), prev), edge_word_towards(tp, node(i), next));
        split[i] = split_double_coset(&cl.items[i].1, l, r)?;
    }
    let Some(z) = (0..n).find(|&i| split[i].is_none()) else {
        return Ok(());
    };
    // dp over the path z+1 .. z+n-1; state = whether the previous syllable empties
    let order: Vec<usize> = (1..n).map(|q| (z + q) % n).collect();
    let mut best = vec![[i64::MIN; 2]; order.len() + 1];
    let mut from = vec![[0usize; 2]; order.len() + 1];
    best[0] = [0, i64::MIN];
    for (q, &i) in order.iter().enumerate() {
        for prev_state in 0..2 {
            let base = best[q][prev_state];
            if base == i64::MIN {
                continue;
            }
            if base > best[q + 1][0] {
                best[q + 1][0] = base;
                from[q + 1][0] = prev_state;
            }
            if let Some((s, _)) = split[i] {
                let ok = prev_state == 0 || split[order[q - 1]].map(|(_, t)| t) == Some(-s);
                if ok && base + 1 > best[q + 1][1] {
                    best[q + 1][1] = base + 1;
                    from[q + 1][1] = prev_state;
                }
            }
        }
    }
    let mut state = if best[order.len()][1] > best[order.len()][0] { 1 } else { 0 };
    let mut chosen = vec![false; n];
    for q in (1..=order.len()).rev() {
        chosen[order[q - 1]] = state == 1;
        state = from[q][state];
    }
    // carry k on the edge after syllable i: gᵢ ↦ gᵢ·R⁻ᵏ, gᵢ₊₁ ↦ Lᵏ·gᵢ₊₁
    let mut carry = vec![0i64; n];
    for i in 0..n {
        if let (true, Some((s, t))) = (chosen[i], split[i]) {
            carry[(i + n - 1) % n] = -s;
            carry[i] = t;
        }
    }
    let old: Vec<(usize, Word)> = cl.items.clone();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let mut g = old[i].1.clone();
        if let Some(l) = edge_word_towards(tp, old[i].0, old[prev].0) {
            g = l.pow(carry[prev]).mul(&g);
        }
        if let Some(r) = edge_word_towards(tp, old[i].0, old[(i + 1) % n].0) {
            g = g.mul(&r.pow(-carry[i]));
        }
        cl.items[i].1 = g;
    }
    if let Some(l) = edge_word_towards(tp, old[0].0, old[n - 1].0) {
        cl.conj = cl.conj.mul(&l.pow(-carry[n - 1]));
    }
    debug_assert!((0..n).all(|i| !chosen[i] || cl.items[i].1.is_empty()));
    Ok(())
}

/// Cyclically reduced piece sequence of a conjugate of `w` and the conjugator.
pub fn cyclic_pieces(tp: &TreeProduct, w: &Word) -> Result<(Vec<Piece>, Word)> {
    let mut cl = CyclicLoop { items: reduce_loop(tp, w, 0)?, conj: Word::identity() };
    cl.fold(tp)?;
    if cl.items.len() == 1 {
        let (node, g) = &cl.items[0];
        if g.is_empty() {
            return Err(Error::Trivial);
        }
        return Err(Error::SingleFactor(tp.factor_tag(tp.factor_of_node(*node)).to_string()));
    }
    absorb_pass_through(tp, &mut cl)?;
    let pieces = cl
        .items
        .into_iter()
        .filter(|(_, g)| !g.is_empty())
        .map(|(n, g)| Piece { factor: tp.factor_of_node(n), word: g })
        .collect();
    Ok((pieces, cl.conj))
}

/// Computes a contracted conjugate of `w`.
pub fn contract(tp: &TreeProduct, w: &Word) -> Result<ContractedConjugate> {
    contract_traced(tp, w).map(|(cc, _)| cc)
}

pub fn contract_traced(tp: &TreeProduct, w: &Word) -> Result<(ContractedConjugate, Vec<TraceStep>)> {
    let (pieces, conj) = cyclic_pieces(tp, w)?;
    let mut engine = Engine::new(tp, pieces, conj);
    let tree = engine.run()?;
    let (pieces, conjugator, trace) = engine.into_parts();
    Ok((ContractedConjugate { pieces: PieceSequence(pieces), minimal_tree: tree, conjugator }, trace))
}

pub fn minimal_tree(tp: &TreeProduct, w: &Word) -> Result<SubtreeSelection> {
    Ok(contract(tp, w)?.minimal_tree)
}

/// Violations of the three defining properties, empty if none.
pub fn check_contracted(tp: &TreeProduct, pieces: &PieceSequence, tree: &SubtreeSelection) -> Vec<String> {
    let mut out = vec![];
    let ps = pieces.pieces();
    for (i, p) in ps.iter().enumerate() {
        if p.word.is_empty() {
            out.push(format!("piece {i} is trivial"));
        }
        if p.word.letters().iter().any(|l| tp.factor_of(l.gen()) != p.factor) {
            out.push(format!("piece {i} mixes factors"));
        }
        if let Factor::Vertex(v) = p.factor {
            if !tree.contains(v) {
                out.push(format!("piece {i} lies outside the minimal tree"));
            }
        }
    }
    let n = ps.len();
    if n >= 2 {
        for i in 0..n {
            if ps[i].factor == ps[(i + 1) % n].factor {
                out.push(format!("pieces {i} and {} share a factor", (i + 1) % n));
            }
        }
    }
    let span = span_of(tp, ps.iter().filter_map(|p| match p.factor {
        Factor::Vertex(v) => Some(v),
        Factor::H => None,
    }));
    if span != tree.0 {
        out.push("minimal tree differs from the span of the pieces".into());
    }
    for leaf in leaves_by_tag(tp, &tree.0) {
        let nb = tree_neighbor(tp, &tree.0, leaf);
        let e = &tp.edges()[tp.edge_between(leaf, nb).expect("adjacent")];
        for (i, p) in ps.iter().enumerate() {
            if p.factor == Factor::Vertex(leaf) && matches!(power_membership(&p.word, e.word_at(leaf)), Ok(Some(_))) {
                out.push(format!("piece {i} is a power of the edge-word of leaf {}", tp.vertex(leaf).tag));
            }
        }
    }
    out
}

/// Extended integer for branch limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Limit {
    NegInf,
    Finite(i64),
    PosInf,
}

impl std::fmt::Display for Limit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Limit::NegInf => f.write_str("-inf"),
            Limit::Finite(k) => write!(f, "{k}"),
            Limit::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchLimits {
    pub alpha: Limit,
    pub omega: Limit,
    /// The minimal tree meets no branch.
    pub unconstrained: bool,
}

/// α is the least and ω the greatest index of a branch met by the minimal tree.
pub fn branch_limits(tp: &TreeProduct, branches: &[(i64, SubtreeSelection)], w: &Word) -> Result<BranchLimits> {
    for (i, (_, a)) in branches.iter().enumerate() {
        for (_, b) in &branches[i + 1..] {
            if a.0.intersection(&b.0).next().is_some() {
                return Err(Error::Selection("branches share a vertex".into()));
            }
        }
    }
    let tree = minimal_tree(tp, w)?;
    let met: Vec<i64> = branches.iter().filter(|(_, b)| b.iter().any(|v| tree.contains(v))).map(|(i, _)| *i).collect();
    Ok(match (met.iter().min(), met.iter().max()) {
        (Some(&lo), Some(&hi)) => BranchLimits { alpha: Limit::Finite(lo), omega: Limit::Finite(hi), unconstrained: false },
        _ => BranchLimits { alpha: Limit::PosInf, omega: Limit::NegInf, unconstrained: true },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Letter;
    use proptest::prelude::*;

    const GENUS2: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nedge A:a^-1 b^-1 a b = B:d^-1 c^-1 d c order=0\n";
    const EX12: &str = "vertex A { gens = [ a ] }\nvertex B { gens = [ b, c, d ] }\nedge A:a^2 = B:b c b c d^2\n";
    const PATH3: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c@0, e@1 ] }\nvertex C { gens = [ f, k ] }\nhfactor { gens = [ h ] }\n\
                         edge A:a b a^-1 b = B:c order=0\nedge B:e = C:f k f^-1 k^2 order=1,0\n";

    fn tp(s: &str) -> TreeProduct {
        TreeProduct::parse(s).unwrap()
    }

    #[test]
    fn edge_relation_is_trivial() {
        for src in [GENUS2, EX12, PATH3] {
            let g = tp(src);
            for e in g.edges() {
                let w = e.left_word.mul(&e.right_word.inverse());
                assert!(is_trivial(&g, &w).unwrap());
                assert!(!is_trivial(&g, &e.left_word).unwrap());
            }
        }
    }

    #[test]
    fn genus_two_product_of_commutators() {
        let g = tp(GENUS2);
        // [a,b] [c,d] with [x,y] = x⁻¹y⁻¹xy; [c,d] = ([d,c])⁻¹ is the inverse of q
        let w = g.parse_word("a^-1 b^-1 a b c^-1 d^-1 c d").unwrap();
        assert!(is_trivial(&g, &w).unwrap());
        let w = g.parse_word("a c").unwrap();
        assert!(!is_trivial(&g, &w).unwrap());
    }

    #[test]
    fn proper_power_amalgam_two_syllables() {
        let g = tp(EX12);
        let w = g.parse_word("a d").unwrap();
        match normal_form(&g, &w).unwrap() {
            NormalForm::Pieces(p) => assert_eq!(p.len(), 2),
            NormalForm::Trivial => panic!("a d is not trivial"),
        }
        // non-maximal edge groups are handled exactly
        let w = g.parse_word("a^4 d^-2 c^-1 b^-1 c^-1 b^-1 d^-2 c^-1 b^-1 c^-1 b^-1").unwrap();
        assert!(is_trivial(&g, &w).unwrap());
    }

    #[test]
    fn contract_genus_two() {
        let g = tp(GENUS2);
        let w = g.parse_word("a c").unwrap();
        let cc = contract(&g, &w).unwrap();
        assert_eq!(cc.pieces.serialize(&g), "A:a | B:c");
        assert_eq!(cc.minimal_tree, SubtreeSelection::new([0, 1]));
        for x in ["b", "d^2 a", "a^-1 b^-1 a b", "c d^-1 c"] {
            let u = g.parse_word(x).unwrap();
            let conj = w.conjugate_by(&u);
            let c2 = contract(&g, &conj).unwrap();
            assert_eq!(c2.pieces, cc.pieces);
            let lhs = conj.conjugate_by(&c2.conjugator);
            assert!(is_trivial(&g, &lhs.mul(&c2.pieces.product().inverse())).unwrap());
        }
    }

    #[test]
    fn contract_path_excludes_unused_leaf() {
        let g = tp(PATH3);
        let w = g.parse_word("a e h").unwrap();
        let cc = contract(&g, &w).unwrap();
        assert_eq!(cc.minimal_tree, SubtreeSelection::new([0, 1]));
        assert!(check_contracted(&g, &cc.pieces, &cc.minimal_tree).is_empty());
    }

    #[test]
    fn contract_errors() {
        let g = tp(GENUS2);
        let p = g.edges()[0].left_word.clone();
        assert!(matches!(contract(&g, &p), Err(Error::SingleFactor(_))));
        assert!(matches!(contract(&g, &Word::identity()), Err(Error::Trivial)));
        let w = g.parse_word("c^-1 a b c").unwrap();
        assert!(matches!(contract(&g, &w), Err(Error::SingleFactor(t)) if t == "A"));
        // leaf edge power is pushed across and merges: p·c ~ q·c in B
        let w = g.parse_word("a^-1 b^-1 a b c").unwrap();
        assert!(matches!(contract(&g, &w), Err(Error::SingleFactor(t)) if t == "B"));
    }

    #[test]
    fn step3_merges_runs_in_edge_group() {
        // A <- B -> C; the run between the two C pieces is a power of C's partner word in B
        let g = tp(PATH3);
        let w = g.parse_word("f e k a").unwrap();
        let cc = contract(&g, &w).unwrap();
        assert_eq!(cc.length(), 2);
        assert_eq!(cc.minimal_tree, SubtreeSelection::new([0, 1, 2]));
        assert!(check_contracted(&g, &cc.pieces, &cc.minimal_tree).is_empty());
        let lhs = w.conjugate_by(&cc.conjugator);
        assert!(is_trivial(&g, &lhs.mul(&cc.pieces.product().inverse())).unwrap());
    }

    #[test]
    fn isolated_edge_power_between_h_pieces() {
        let g = tp("vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nhfactor { gens = [ h ] }\nedge A:a b = B:c d\n");
        let w = g.parse_word("h a b h a h c").unwrap();
        assert!(matches!(contract(&g, &w), Err(Error::Uncontractible(_))));
    }

    #[test]
    fn pass_through_edge_piece_is_absorbed() {
        let g = tp(PATH3);
        let w = g.parse_word("a^-1 c^-1 a f c a").unwrap();
        let cc = contract(&g, &w).unwrap();
        assert_eq!(cc.length(), 2);
    }

    #[test]
    fn branch_limit_cases() {
        let g = tp("vertex X { gens = [ x@0, y@1, z@2 ] }\nvertex L1 { gens = [ a, b ] }\nvertex L2 { gens = [ c, d ] }\n\
                    vertex L3 { gens = [ e, f ] }\nedge X:x = L1:a b order=0\nedge X:y = L2:c d order=1,0\nedge X:z = L3:e f order=2,0\n");
        let br = vec![
            (1, SubtreeSelection::new([1])),
            (3, SubtreeSelection::new([2])),
            (4, SubtreeSelection::new([3])),
        ];
        let w = g.parse_word("c x").unwrap();
        let bl = branch_limits(&g, &br, &w).unwrap();
        assert_eq!((bl.alpha, bl.omega), (Limit::Finite(3), Limit::Finite(3)));
        let w = g.parse_word("a e").unwrap();
        let bl = branch_limits(&g, &br, &w).unwrap();
        assert_eq!((bl.alpha, bl.omega), (Limit::Finite(1), Limit::Finite(4)));
        let g2 = tp(PATH3);
        let w = g2.parse_word("a e h").unwrap();
        let bl = branch_limits(&g2, &[(0, SubtreeSelection::new([2]))], &w).unwrap();
        assert!(bl.unconstrained);
        assert_eq!((bl.alpha, bl.omega), (Limit::PosInf, Limit::NegInf));
    }

    #[test]
    fn canonical_form_identifies_equal_elements() {
        let g = tp(GENUS2);
        let p = g.edges()[0].left_word.clone();
        let q = g.edges()[0].right_word.clone();
        let x = g.parse_word("a c").unwrap();
        let y = g.parse_word("a").unwrap().mul(&p).mul(&q.inverse()).mul(&g.parse_word("c").unwrap());
        assert_eq!(canonical_form(&g, &x).unwrap(), canonical_form(&g, &y).unwrap());
        let z = g.parse_word("c a").unwrap();
        assert_ne!(canonical_form(&g, &x).unwrap(), canonical_form(&g, &z).unwrap());
    }

    fn arb_word(ngens: u32, max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((0..ngens, any::<bool>()).prop_map(|(g, i)| Letter::new(g, i)), 0..max)
            .prop_map(|l| free_reduce(&l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn triviality_is_conjugation_invariant(w in arb_word(5, 12), u in arb_word(5, 8)) {
            let g = tp(PATH3);
            let conj = u.mul(&w).mul(&u.inverse());
            prop_assert_eq!(is_trivial(&g, &w).unwrap(), is_trivial(&g, &conj).unwrap());
            prop_assert!(is_trivial(&g, &w.mul(&w.inverse())).unwrap());
        }

        #[test]
        fn canonical_form_respects_relations(w in arb_word(4, 10), k in -2i64..3, pos in 0usize..10) {
            let g = tp(GENUS2);
            let e = &g.edges()[0];
            let rel = e.left_word.pow(k).mul(&e.right_word.pow(-k));
            let cut = pos.min(w.len());
            let (l, r) = w.letters().split_at(cut);
            let w2 = free_reduce(&[l, rel.letters(), r].concat());
            prop_assert_eq!(canonical_form(&g, &w).unwrap(), canonical_form(&g, &w2).unwrap());
        }

        #[test]
        fn contraction_is_conjugation_invariant(w in arb_word(7, 10), u in arb_word(7, 8)) {
            let g = tp(PATH3);
            let conj = w.conjugate_by(&u);
            match (contract(&g, &w), contract(&g, &conj)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a.minimal_tree, &b.minimal_tree);
                    prop_assert_eq!(a.length(), b.length());
                    prop_assert!(check_contracted(&g, &a.pieces, &a.minimal_tree).is_empty());
                    let lhs = w.conjugate_by(&a.conjugator);
                    prop_assert!(is_trivial(&g, &lhs.mul(&a.pieces.product().inverse())).unwrap());
                }
                (Err(a), Err(b)) => prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b)),
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|c| c.pieces), b.map(|c| c.pieces)),
            }
        }
    }
}
