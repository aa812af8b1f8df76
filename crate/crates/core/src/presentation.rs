//! Tree-products of free groups.
//!
//! All generators of all vertex groups and of the free factor `H` share one
//! [`Alphabet`], so words over the whole product need no translation. Vertex
//! `0` is the root used by the word-problem machinery; `H` hangs off it by a
//! trivial edge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::words::{cyclic_reduce, is_proper_power, is_valid_name, split_conjugate, Alphabet, Gen, Word};

/// The free factor a generator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Vertex(usize),
    H,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub factor: Factor,
    pub stabilizing: bool,
    pub y_index: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub tag: String,
    pub gens: Vec<Gen>,
}

/// Edge relation `left_word = right_word`. Each end carries its own order key
/// inside the staggered set of that end's vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub left: usize,
    pub right: usize,
    pub left_word: Word,
    pub right_word: Word,
    pub left_order: i64,
    pub right_order: i64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.left {
            self.right
        } else {
            self.left
        }
    }

    pub fn word_at(&self, v: usize) -> &Word {
        if v == self.left {
            &self.left_word
        } else {
            &self.right_word
        }
    }

    pub fn order_at(&self, v: usize) -> i64 {
        if v == self.left {
            self.left_order
        } else {
            self.right_order
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.left == v || self.right == v
    }
}

/// Rooted view of the tree. Node `n = |V|` stands for `H`.
#[derive(Clone, Debug)]
pub struct Topology {
    pub adj: Vec<Vec<(usize, usize)>>,
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl Topology {
    /// Node sequence from `u` to `v`, both inclusive.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let (mut a, mut b) = (u, v);
        let mut head = vec![];
        let mut tail = vec![];
        while self.depth[a] > self.depth[b] {
            head.push(a);
            a = self.parent[a].expect("non-root");
        }
        while self.depth[b] > self.depth[a] {
            tail.push(b);
            b = self.parent[b].expect("non-root");
        }
        while a != b {
            head.push(a);
            tail.push(b);
            a = self.parent[a].expect("non-root");
            b = self.parent[b].expect("non-root");
        }
        head.push(a);
        head.extend(tail.into_iter().rev());
        head
    }
}

/// A tree of free groups with cyclic edge relations, plus a free factor `H`.
#[derive(Clone, Debug)]
pub struct TreeProduct {
    alphabet: Alphabet,
    gens: Vec<Generator>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    h_gens: Vec<Gen>,
    topology: Option<Topology>,
}

impl PartialEq for TreeProduct {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.gens == other.gens
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.h_gens == other.h_gens
    }
}

/// Incremental construction; words refer to generators added earlier.
#[derive(Clone, Debug, Default)]
pub struct Builder {
    alphabet: Alphabet,
    gens: Vec<Generator>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    h_gens: Vec<Gen>,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vertex_index(&self, tag: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.tag == tag)
    }

    pub fn add_vertex(&mut self, tag: &str) -> Result<usize> {
        if !is_valid_name(tag) || tag == "H" {
            return Err(Error::Parse(format!("invalid vertex tag `{tag}`")));
        }
        if self.vertex_index(tag).is_some() {
            return Err(Error::Parse(format!("duplicate vertex `{tag}`")));
        }
        self.vertices.push(Vertex { tag: tag.to_string(), gens: vec![] });
        Ok(self.vertices.len() - 1)
    }

    fn owner_tag(&self, f: Factor) -> &str {
        match f {
            Factor::Vertex(v) => &self.vertices[v].tag,
            Factor::H => "H",
        }
    }

    fn add(&mut self, name: &str, factor: Factor, stabilizing: bool, y_index: Option<i64>) -> Result<Gen> {
        if let Some(g) = self.alphabet.lookup(name) {
            let first = self.owner_tag(self.gens[g as usize].factor).to_string();
            let second = self.owner_tag(factor).to_string();
            return Err(Error::Alphabet(format!(
                "generator `{name}` declared in both {first} and {second}"
            )));
        }
        let g = self.alphabet.insert(name)?;
        self.gens.push(Generator { name: name.to_string(), factor, stabilizing, y_index });
        Ok(g)
    }

    pub fn add_gen(&mut self, vertex: usize, name: &str, stabilizing: bool, y_index: Option<i64>) -> Result<Gen> {
        let g = self.add(name, Factor::Vertex(vertex), stabilizing, y_index)?;
        self.vertices[vertex].gens.push(g);
        Ok(g)
    }

    pub fn add_h_gen(&mut self, name: &str) -> Result<Gen> {
        let g = self.add(name, Factor::H, false, None)?;
        self.h_gens.push(g);
        Ok(g)
    }

    pub fn add_edge(&mut self, edge: Edge) {
        self.edges.push(edge);
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        self.alphabet.parse_word(text)
    }

    pub fn build(self) -> TreeProduct {
        let topology = compute_topology(self.vertices.len(), &self.edges);
        TreeProduct {
            alphabet: self.alphabet,
            gens: self.gens,
            vertices: self.vertices,
            edges: self.edges,
            h_gens: self.h_gens,
            topology,
        }
    }
}

fn compute_topology(n: usize, edges: &[Edge]) -> Option<Topology> {
    if n == 0 || edges.len() + 1 != n {
        return None;
    }
    let mut adj = vec![vec![]; n + 1];
    for (i, e) in edges.iter().enumerate() {
        if e.left == e.right || e.left >= n || e.right >= n {
            return None;
        }
        adj[e.left].push((e.right, i));
        adj[e.right].push((e.left, i));
    }
    let mut parent = vec![None; n + 1];
    let mut parent_edge = vec![None; n + 1];
    let mut depth = vec![usize::MAX; n + 1];
    depth[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &adj[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                parent[v] = Some(u);
                parent_edge[v] = Some(e);
                queue.push_back(v);
            }
        }
    }
    if depth[..n].contains(&usize::MAX) {
        return None;
    }
    parent[n] = Some(0);
    depth[n] = 1;
    Some(Topology { adj, parent, parent_edge, depth })
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoVertices,
    NotATree(String),
    EmptyVertex(String),
    EmptyEdgeWord { edge: usize },
    ForeignLetter { edge: usize, vertex: String, word: String },
    ProperPower { vertex: String, word: String, k: i64 },
    NotConjugateForm { vertex: String, word: String },
    StabilizingWithIndex { gen: String },
    DuplicateOrder { vertex: String, order: i64 },
    Staggering { vertex: String, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVertices => write!(f, "presentation has no vertices"),
            Violation::NotATree(d) => write!(f, "graph is not a tree: {d}"),
            Violation::EmptyVertex(t) => write!(f, "vertex {t} has an empty basis"),
            Violation::EmptyEdgeWord { edge } => write!(f, "edge {edge} has an empty edge-word"),
            Violation::ForeignLetter { edge, vertex, word } => {
                write!(f, "edge {edge}: edge-word {word} uses generators outside vertex {vertex}")
            }
            Violation::ProperPower { vertex, word, k } => {
                write!(f, "edge-word {word} is a proper power (k={k}) in vertex {vertex}")
            }
            Violation::NotConjugateForm { vertex, word } => write!(
                f,
                "edge-word {word} in vertex {vertex} is not a stabilizing conjugate of a non-stabilizing cyclic word"
            ),
            Violation::StabilizingWithIndex { gen } => {
                write!(f, "stabilizing generator {gen} carries a y-index")
            }
            Violation::DuplicateOrder { vertex, order } => {
                write!(f, "vertex {vertex} has two edge-words with order key {order}")
            }
            Violation::Staggering { vertex, detail } => {
                write!(f, "edge-words of vertex {vertex} are not staggered: {detail}")
            }
        }
    }
}

/// Options relaxing validation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Skip the proper-power check only.
    pub allow_nonmaximal: bool,
}

/// α/ω table of an ordered family of edge-words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaggerReport {
    pub bounds: Vec<(i64, i64)>,
    pub staggered: bool,
}

/// Computes min/max y-index per word and checks strict increase of both
/// sequences. `words` must already be sorted by order key.
pub fn validate_staggered(y_index: impl Fn(Gen) -> Option<i64>, words: &[Word]) -> Result<StaggerReport> {
    let mut bounds = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        let ys: Vec<i64> = w.letters().iter().filter_map(|l| y_index(l.gen())).collect();
        match (ys.iter().min(), ys.iter().max()) {
            (Some(&lo), Some(&hi)) => bounds.push((lo, hi)),
            _ => return Err(Error::Staggering(format!("edge-word #{i} uses no indexed generator"))),
        }
    }
    let staggered = strictly_staggered(&bounds);
    Ok(StaggerReport { bounds, staggered })
}

/// Both columns of an α/ω table strictly increase.
pub fn strictly_staggered(bounds: &[(i64, i64)]) -> bool {
    bounds.windows(2).all(|p| p[0].0 < p[1].0 && p[0].1 < p[1].1)
}

/// A set of vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubtreeSelection(pub BTreeSet<usize>);

impl SubtreeSelection {
    pub fn new(vs: impl IntoIterator<Item = usize>) -> Self {
        SubtreeSelection(vs.into_iter().collect())
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// Generator substitution `old gen ↦ word in the new basis`, with inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisMap {
    pub forward: BTreeMap<Gen, Word>,
    pub backward: BTreeMap<Gen, Word>,
}

impl BasisMap {
    pub fn identity() -> Self {
        BasisMap { forward: BTreeMap::new(), backward: BTreeMap::new() }
    }

    pub fn apply(&self, w: &Word) -> Word {
        w.substitute(|g| self.forward.get(&g).cloned().unwrap_or_else(|| Word::gen_power(g, 1)))
    }

    pub fn apply_inverse(&self, w: &Word) -> Word {
        w.substitute(|g| self.backward.get(&g).cloned().unwrap_or_else(|| Word::gen_power(g, 1)))
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().all(|(&g, w)| *w == Word::gen_power(g, 1))
    }
}

impl TreeProduct {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn generator(&self, g: Gen) -> &Generator {
        &self.gens[g as usize]
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn factor_of(&self, g: Gen) -> Factor {
        self.gens[g as usize].factor
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn h_gens(&self) -> &[Gen] {
        &self.h_gens
    }

    /// Number of vertex groups.
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// Node index of `H` in [`Topology`].
    pub fn h_node(&self) -> usize {
        self.vertices.len()
    }

    pub fn node_of(&self, f: Factor) -> usize {
        match f {
            Factor::Vertex(v) => v,
            Factor::H => self.h_node(),
        }
    }

    pub fn factor_of_node(&self, node: usize) -> Factor {
        if node == self.h_node() {
            Factor::H
        } else {
            Factor::Vertex(node)
        }
    }

    pub fn factor_tag(&self, f: Factor) -> &str {
        match f {
            Factor::Vertex(v) => &self.vertices[v].tag,
            Factor::H => "H",
        }
    }

    pub fn vertex_index(&self, tag: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v.tag == tag)
            .ok_or_else(|| Error::Selection(format!("unknown vertex `{tag}`")))
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        self.alphabet.parse_word(text)
    }

    pub fn format(&self, w: &Word) -> String {
        self.alphabet.format(w)
    }

    pub fn is_tree(&self) -> bool {
        self.topology.is_some()
    }

    pub fn topology(&self) -> Result<&Topology> {
        self.topology.as_ref().ok_or_else(|| Error::Invalid("vertex/edge graph is not a tree".into()))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.touches(v)).count()
    }

    pub fn incident_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.touches(v)).map(|(i, _)| i)
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.left == u && e.right == v) || (e.left == v && e.right == u))
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.vertices.len() >= 2 && self.degree(v) == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.is_leaf(v)).collect()
    }

    /// The edge at a leaf.
    pub fn leaf_edge(&self, leaf: usize) -> Result<usize> {
        if !self.is_leaf(leaf) {
            return Err(Error::Selection(format!("{} is not a leaf", self.vertices[leaf].tag)));
        }
        Ok(self.incident_edges(leaf).next().expect("leaf has an edge"))
    }

    /// Edge-words of `v` sorted by order key, with the key.
    pub fn edge_words_at(&self, v: usize) -> Vec<(i64, &Word)> {
        let mut out: Vec<(i64, &Word)> =
            self.incident_edges(v).map(|i| (self.edges[i].order_at(v), self.edges[i].word_at(v))).collect();
        out.sort_by_key(|(o, _)| *o);
        out
    }

    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(ValidateOptions::default())
    }

    /// Collects every violated invariant; empty means valid.
    pub fn validate_with(&self, opts: ValidateOptions) -> Vec<Violation> {
        let mut out = vec![];
        if self.vertices.is_empty() {
            out.push(Violation::NoVertices);
            return out;
        }
        if self.topology.is_none() {
            out.push(Violation::NotATree(format!(
                "{} vertices, {} edges, or disconnected",
                self.vertices.len(),
                self.edges.len()
            )));
        }
        for v in &self.vertices {
            if v.gens.is_empty() {
                out.push(Violation::EmptyVertex(v.tag.clone()));
            }
        }
        for g in &self.gens {
            if g.stabilizing && g.y_index.is_some() {
                out.push(Violation::StabilizingWithIndex { gen: g.name.clone() });
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for side in [e.left, e.right] {
                let w = e.word_at(side);
                let tag = self.vertices.get(side).map(|v| v.tag.clone()).unwrap_or_default();
                if w.is_empty() {
                    out.push(Violation::EmptyEdgeWord { edge: i });
                    continue;
                }
                if w.letters().iter().any(|l| self.factor_of(l.gen()) != Factor::Vertex(side)) {
                    out.push(Violation::ForeignLetter { edge: i, vertex: tag.clone(), word: self.format(w) });
                    continue;
                }
                if !opts.allow_nonmaximal {
                    if let Ok(pp) = is_proper_power(w) {
                        if pp.k > 1 {
                            out.push(Violation::ProperPower { vertex: tag.clone(), word: self.format(w), k: pp.k });
                        }
                    }
                }
                if !self.is_conjugate_form(w) {
                    out.push(Violation::NotConjugateForm { vertex: tag.clone(), word: self.format(w) });
                }
            }
        }
        for (vi, v) in self.vertices.iter().enumerate() {
            let words = self.edge_words_at(vi);
            if words.is_empty() {
                continue;
            }
            let mut seen = BTreeSet::new();
            for (o, _) in &words {
                if !seen.insert(*o) {
                    out.push(Violation::DuplicateOrder { vertex: v.tag.clone(), order: *o });
                }
            }
            let ws: Vec<Word> = words.iter().map(|(_, w)| (*w).clone()).collect();
            match validate_staggered(|g| self.gens[g as usize].y_index, &ws) {
                Ok(rep) if !rep.staggered => out.push(Violation::Staggering {
                    vertex: v.tag.clone(),
                    detail: format!("α/ω bounds {:?} not strictly increasing", rep.bounds),
                }),
                Ok(_) => {}
                Err(e) => out.push(Violation::Staggering { vertex: v.tag.clone(), detail: e.to_string() }),
            }
        }
        out
    }

    /// `w = v⁻¹ g v` with `v` stabilizing and `g` non-stabilizing.
    pub fn is_conjugate_form(&self, w: &Word) -> bool {
        let (v, g) = split_conjugate(w);
        v.letters().iter().all(|l| self.gens[l.gen() as usize].stabilizing)
            && g.letters().iter().all(|l| !self.gens[l.gen() as usize].stabilizing)
    }

    /// Sum of cyclic-core lengths of the leaf edge-words.
    pub fn boundary_length(&self) -> usize {
        self.leaves()
            .into_iter()
            .map(|l| {
                let e = self.leaf_edge(l).expect("leaf");
                cyclic_reduce(self.edges[e].word_at(l)).core.len()
            })
            .sum()
    }

    /// Checks that `sel` is a nonempty set of vertices inducing a subtree.
    pub fn check_selection(&self, sel: &SubtreeSelection) -> Result<()> {
        let n = self.vertices.len();
        if sel.is_empty() {
            return Err(Error::Selection("empty selection".into()));
        }
        if let Some(v) = sel.iter().find(|&v| v >= n) {
            return Err(Error::Selection(format!("vertex index {v} out of range")));
        }
        let comps = self.components_of(&sel.0);
        if comps.len() != 1 {
            return Err(Error::Selection("selection does not induce a connected subtree".into()));
        }
        Ok(())
    }

    /// Connected components of the subgraph induced by `keep`, ordered by least vertex.
    pub fn components_of(&self, keep: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut comps = vec![];
        for &start in keep {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(u) = stack.pop() {
                comp.insert(u);
                for e in &self.edges {
                    if e.touches(u) {
                        let w = e.other(u);
                        if keep.contains(&w) && seen.insert(w) {
                            stack.push(w);
                        }
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// Vertex sets of the components of `G ⊖ sel`.
    pub fn subtract_vertices(&self, sel: &SubtreeSelection) -> Result<Vec<BTreeSet<usize>>> {
        self.check_selection(sel)?;
        let rest: BTreeSet<usize> = (0..self.vertices.len()).filter(|v| !sel.contains(*v)).collect();
        Ok(self.components_of(&rest))
    }

    /// `G ⊖ sel` as a list of tree-products without `H`.
    pub fn subtract(&self, sel: &SubtreeSelection) -> Result<Vec<TreeProduct>> {
        self.subtract_vertices(sel)?
            .into_iter()
            .map(|c| self.restrict(&SubtreeSelection(c), false))
            .collect()
    }

    /// A branch leaves exactly one component behind.
    pub fn is_branch(&self, sel: &SubtreeSelection) -> Result<bool> {
        Ok(self.subtract_vertices(sel)?.len() == 1)
    }

    /// Subtree-product on `sel`, optionally keeping `H`. Generator names are kept.
    pub fn restrict(&self, sel: &SubtreeSelection, keep_h: bool) -> Result<TreeProduct> {
        self.check_selection(sel)?;
        let mut b = Builder::new();
        let mut map = BTreeMap::new();
        for v in sel.iter() {
            let nv = b.add_vertex(&self.vertices[v].tag)?;
            map.insert(v, nv);
            for &g in &self.vertices[v].gens {
                let info = &self.gens[g as usize];
                b.add_gen(nv, &info.name, info.stabilizing, info.y_index)?;
            }
        }
        if keep_h {
            for &g in &self.h_gens {
                b.add_h_gen(&self.gens[g as usize].name)?;
            }
        }
        for e in &self.edges {
            if let (Some(&l), Some(&r)) = (map.get(&e.left), map.get(&e.right)) {
                let lw = b.translate(self, &e.left_word)?;
                let rw = b.translate(self, &e.right_word)?;
                b.add_edge(Edge {
                    left: l,
                    right: r,
                    left_word: lw,
                    right_word: rw,
                    left_order: e.left_order,
                    right_order: e.right_order,
                });
            }
        }
        Ok(b.build())
    }

    /// Rewrites a word of `other` into this presentation by generator name.
    pub fn translate(&self, other: &TreeProduct, w: &Word) -> Result<Word> {
        translate_by_name(&self.alphabet, other.alphabet(), w)
    }

    /// Conjugates the basis of every leaf so that its edge-word becomes
    /// cyclically reduced. Generator names are kept; the map sends each old
    /// generator to its expression in the new basis.
    pub fn rebase_cyclic(&self) -> (TreeProduct, BasisMap) {
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        let mut out = self.clone();
        let rebase_at: Vec<usize> = if self.vertices.len() <= 2 {
            (0..self.vertices.len()).filter(|&v| self.degree(v) == 1).collect()
        } else {
            self.leaves()
        };
        for v in rebase_at {
            let e = self.incident_edges(v).next().expect("degree one");
            let (conj, core) = split_conjugate(self.edges[e].word_at(v));
            if conj.is_empty() {
                continue;
            }
            // new x' = conj⁻¹ x conj, so old x = conj x' conj⁻¹ (conj is fixed)
            for &g in &self.vertices[v].gens {
                let x = Word::gen_power(g, 1);
                forward.insert(g, x.conjugate_by(&conj.inverse()));
                backward.insert(g, x.conjugate_by(&conj));
            }
            let ed = &mut out.edges[e];
            if ed.left == v {
                ed.left_word = core;
            } else {
                ed.right_word = core;
            }
        }
        (out, BasisMap { forward, backward })
    }

    /// Generators of `H` and of every vertex in `sel`.
    pub fn in_subfactor(&self, sel: &SubtreeSelection, w: &Word) -> bool {
        w.letters().iter().all(|l| match self.factor_of(l.gen()) {
            Factor::H => true,
            Factor::Vertex(v) => sel.contains(v),
        })
    }

    pub fn parse_selection(&self, text: &str) -> Result<SubtreeSelection> {
        let mut s = BTreeSet::new();
        for t in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            s.insert(self.vertex_index(t)?);
        }
        let sel = SubtreeSelection(s);
        self.check_selection(&sel)?;
        Ok(sel)
    }

    pub fn format_selection(&self, sel: &SubtreeSelection) -> String {
        sel.iter().map(|v| self.vertices[v].tag.as_str()).collect::<Vec<_>>().join(",")
    }

    /// Parses the presentation file format.
    pub fn parse(text: &str) -> Result<TreeProduct> {
        parse_tree_product(text)
    }

    /// Serializes to the presentation file format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let annotate = v.gens.iter().any(|&g| {
                let info = &self.gens[g as usize];
                !info.stabilizing && info.y_index != Some(0)
            });
            let items: Vec<String> = v
                .gens
                .iter()
                .map(|&g| {
                    let info = &self.gens[g as usize];
                    let mut s = info.name.clone();
                    if info.stabilizing {
                        s.push_str(":stab");
                    }
                    if let Some(y) = info.y_index {
                        if annotate || info.stabilizing {
                            s.push_str(&format!("@{y}"));
                        }
                    }
                    s
                })
                .collect();
            out.push_str(&format!("vertex {} {{ gens = [ {} ] }}\n", v.tag, items.join(", ")));
        }
        if !self.h_gens.is_empty() {
            let items: Vec<&str> = self.h_gens.iter().map(|&g| self.gens[g as usize].name.as_str()).collect();
            out.push_str(&format!("hfactor {{ gens = [ {} ] }}\n", items.join(", ")));
        }
        for e in &self.edges {
            let order = if e.left_order == e.right_order {
                e.left_order.to_string()
            } else {
                format!("{},{}", e.left_order, e.right_order)
            };
            out.push_str(&format!(
                "edge {}:{} = {}:{} order={}\n",
                self.vertices[e.left].tag,
                self.format(&e.left_word),
                self.vertices[e.right].tag,
                self.format(&e.right_word),
                order
            ));
        }
        out
    }
}

impl Builder {
    pub fn translate(&self, other: &TreeProduct, w: &Word) -> Result<Word> {
        translate_by_name(&self.alphabet, other.alphabet(), w)
    }
}

fn translate_by_name(to: &Alphabet, from: &Alphabet, w: &Word) -> Result<Word> {
    let mut out = Vec::with_capacity(w.len());
    for l in w.letters() {
        let g = to.gen(from.name(l.gen()))?;
        out.push(crate::words::Letter::new(g, l.is_inverse()));
    }
    Ok(Word::from_letters(&out))
}

fn parse_gen_list(body: &str, line: usize) -> Result<Vec<(String, bool, Option<i64>)>> {
    let err = |m: &str| Error::Parse(format!("line {line}: {m}"));
    let body = body.trim();
    let inner = body
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| err("expected `{ gens = [ ... ] }`"))?
        .trim();
    let list = inner
        .strip_prefix("gens")
        .map(str::trim_start)
        .and_then(|s| s.strip_prefix('='))
        .map(str::trim)
        .and_then(|s| s.strip_prefix('['))
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err("expected `gens = [ ... ]`"))?;
    let mut out = vec![];
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (head, y) = match item.split_once('@') {
            Some((h, y)) => (h, Some(y.trim().parse::<i64>().map_err(|_| err(&format!("bad y-index in `{item}`")))?)),
            None => (item, None),
        };
        let (name, stab) = match head.split_once(':') {
            Some((n, "stab")) => (n.trim(), true),
            Some(_) => return Err(err(&format!("bad generator flag in `{item}`"))),
            None => (head.trim(), false),
        };
        out.push((name.to_string(), stab, y));
    }
    Ok(out)
}

fn parse_tree_product(text: &str) -> Result<TreeProduct> {
    // gather statements; a block may span lines until its closing brace
    let mut statements: Vec<(usize, String)> = vec![];
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match pending.as_mut() {
            Some((_, acc)) => {
                acc.push(' ');
                acc.push_str(line);
            }
            None => pending = Some((i + 1, line.to_string())),
        }
        let (_, acc) = pending.as_ref().expect("set above");
        let opens = acc.matches('{').count();
        let closes = acc.matches('}').count();
        if opens == closes {
            statements.push(pending.take().expect("set above"));
        }
    }
    if let Some((l, _)) = pending {
        return Err(Error::Parse(format!("line {l}: unterminated block")));
    }

    let mut b = Builder::new();
    let mut edges: Vec<(usize, String)> = vec![];
    for (line, st) in statements {
        let (kw, rest) = st.split_once(char::is_whitespace).unwrap_or((st.as_str(), ""));
        match kw {
            "vertex" => {
                let rest = rest.trim();
                let (tag, body) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| Error::Parse(format!("line {line}: expected `vertex <tag> {{ ... }}`")))?;
                let v = b.add_vertex(tag)?;
                let gens = parse_gen_list(body, line)?;
                let annotated = gens.iter().any(|(_, _, y)| y.is_some());
                for (name, stab, y) in gens {
                    let y = if annotated || stab { y } else { Some(0) };
                    b.add_gen(v, &name, stab, y)?;
                }
            }
            "hfactor" => {
                for (name, stab, y) in parse_gen_list(rest, line)? {
                    if stab || y.is_some() {
                        return Err(Error::Parse(format!("line {line}: H generators take no flags")));
                    }
                    b.add_h_gen(&name)?;
                }
            }
            "edge" => edges.push((line, rest.to_string())),
            other => return Err(Error::Parse(format!("line {line}: unknown statement `{other}`"))),
        }
    }
    for (line, rest) in edges {
        let err = |m: String| Error::Parse(format!("line {line}: {m}"));
        let (body, order) = match rest.rsplit_once("order=") {
            Some((body, o)) => (body, o.trim()),
            None => (rest.as_str(), "0"),
        };
        let parse_i = |s: &str| s.trim().parse::<i64>().map_err(|_| err(format!("bad order key `{s}`")));
        let (lo, ro) = match order.split_once(',') {
            Some((l, r)) => (parse_i(l)?, parse_i(r)?),
            None => {
                let o = parse_i(order)?;
                (o, o)
            }
        };
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| err("expected `A:word = B:word`".into()))?;
        let side = |s: &str| -> Result<(usize, Word)> {
            let (tag, word) = s.trim().split_once(':').ok_or_else(|| err(format!("expected `TAG:word` in `{s}`")))?;
            let v = b.vertex_index(tag.trim()).ok_or_else(|| err(format!("unknown vertex `{tag}`")))?;
            Ok((v, b.parse_word(word)?))
        };
        let (l, lw) = side(lhs)?;
        let (r, rw) = side(rhs)?;
        b.add_edge(Edge { left: l, right: r, left_word: lw, right_word: rw, left_order: lo, right_order: ro });
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const GENUS2: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nedge A:a^-1 b^-1 a b = B:d^-1 c^-1 d c order=0\n";

    fn tp(s: &str) -> TreeProduct {
        TreeProduct::parse(s).unwrap()
    }

    #[test]
    fn genus_two_is_valid() {
        let g = tp(GENUS2);
        assert!(g.validate().is_empty(), "{:?}", g.validate());
        assert_eq!(g.size(), 2);
        assert_eq!(g.boundary_length(), 8);
        assert_eq!(g.leaves(), vec![0, 1]);
    }

    #[test]
    fn nonmaximal_edge_word_is_reported() {
        let g = tp("vertex A { gens = [ a ] }\nvertex B { gens = [ b, c, d ] }\nedge A:a^2 = B:b c b c d^2\n");
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("edge-word a^2 is a proper power"));
        assert!(g.validate_with(ValidateOptions { allow_nonmaximal: true }).is_empty());
    }

    #[test]
    fn singleton_has_no_leaves() {
        let g = tp("vertex A { gens = [ a, b ] }\n");
        assert!(g.validate().is_empty());
        assert!(g.leaves().is_empty());
        assert_eq!(g.boundary_length(), 0);
    }

    #[test]
    fn path_boundary_length() {
        let g = tp("vertex A { gens = [ a, b ] }\nvertex B { gens = [ c@0, e@1 ] }\nvertex C { gens = [ f, g, k ] }\n\
                    edge A:a b = B:c order=0\nedge B:e = C:f g k order=1,0\n");
        assert!(g.validate().is_empty(), "{:?}", g.validate());
        assert_eq!(g.boundary_length(), 5);
    }

    #[test]
    fn three_interval_staggered_set() {
        let names = ["a0", "b1", "c1", "a2", "a3", "b3", "c3", "b4", "c4", "a5", "a6"];
        let ys = [0, 1, 1, 2, 3, 3, 3, 4, 4, 5, 6];
        let alpha = Alphabet::from_names(names).unwrap();
        let y = |g: Gen| Some(ys[g as usize]);
        let words: Vec<Word> = ["a0 b1 c1^-1 a0 a3^-1", "a2 b3 c3^-1 a2 a5^-1", "a3 b4 c4^-1 a3 a6^-1"]
            .iter()
            .map(|s| alpha.parse_word(s).unwrap())
            .collect();
        let rep = validate_staggered(y, &words).unwrap();
        assert!(rep.staggered);
        assert_eq!(rep.bounds, vec![(0, 3), (2, 5), (3, 6)]);
        let swapped = [words[0].clone(), words[2].clone(), words[1].clone()];
        assert!(!validate_staggered(y, &swapped).unwrap().staggered);
        let noind = alpha.parse_word("a0").unwrap();
        assert!(validate_staggered(|_| None, &[noind]).is_err());
    }

    #[test]
    fn subtraction() {
        let g = tp("vertex A { gens = [ a, b ] }\nvertex B { gens = [ c@0, e@1 ] }\nvertex C { gens = [ f, k ] }\n\
                    edge A:a b = B:c order=0\nedge B:e = C:f k order=1,0\n");
        let sel = g.parse_selection("B").unwrap();
        let comps = g.subtract(&sel).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].vertex(0).tag, "A");
        assert_eq!(comps[1].vertex(0).tag, "C");
        let sel = g.parse_selection("A").unwrap();
        let comps = g.subtract(&sel).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].size(), 2);
        assert!(comps[0].validate().is_empty());
        assert!(g.is_branch(&sel).unwrap());
        assert!(g.parse_selection("A,C").is_err());
    }

    #[test]
    fn star_subtraction() {
        let g = tp("vertex X { gens = [ x@0, y@1, z@2 ] }\nvertex L1 { gens = [ a, b ] }\nvertex L2 { gens = [ c, d ] }\n\
                    vertex L3 { gens = [ e, f ] }\nedge X:x = L1:a b order=0\nedge X:y = L2:c d order=1,0\nedge X:z = L3:e f order=2,0\n");
        assert!(g.validate().is_empty(), "{:?}", g.validate());
        let comps = g.subtract(&g.parse_selection("X").unwrap()).unwrap();
        assert_eq!(comps.len(), 3);
        assert!(comps.iter().all(|c| c.size() == 1));
    }

    #[test]
    fn rebase_conjugated_edge_word() {
        let g = tp("vertex A { gens = [ a, b, x:stab ] }\nvertex B { gens = [ c, d ] }\nedge A:x^-1 a b x = B:c d\n");
        assert!(g.validate().is_empty(), "{:?}", g.validate());
        let (h, map) = g.rebase_cyclic();
        assert_eq!(h.format(&h.edges()[0].left_word), "a b");
        let a = g.parse_word("a").unwrap();
        assert_eq!(h.format(&map.apply(&a)), "x a x^-1");
        // automorphism: images of relation words reduce to the new relations
        assert_eq!(map.apply(&g.edges()[0].left_word), h.edges()[0].left_word);
        for &gen in &g.vertex(0).gens {
            let w = Word::gen_power(gen, 1);
            assert_eq!(map.apply_inverse(&map.apply(&w)), w);
        }
        assert_eq!(h.boundary_length(), g.boundary_length());
        let (_, id) = h.rebase_cyclic();
        assert!(id.is_identity());
    }

    #[test]
    fn serialization_round_trips() {
        let src = "vertex A { gens = [ a, b, x:stab ] }\nvertex B { gens = [ c@0, e@1 ] }\nvertex C { gens = [ f, k ] }\n\
                   hfactor { gens = [ h ] }\nedge A:x^-1 a b x = B:c order=0\nedge B:e = C:f k order=1,0\n";
        let g = tp(src);
        let s = g.serialize();
        assert_eq!(s, src);
        assert_eq!(tp(&s), g);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(TreeProduct::parse("vertex A { gens = [ a ] }\nvertex B { gens = [ a ] }"), Err(Error::Alphabet(_))));
        assert!(matches!(TreeProduct::parse("vertx A"), Err(Error::Parse(_))));
        assert!(matches!(TreeProduct::parse("vertex A { gens = [ a ]"), Err(Error::Parse(_))));
        assert!(matches!(TreeProduct::parse("vertex A { gens = [ a ] }\nedge A:a = Q:a"), Err(Error::Parse(_))));
    }

    #[test]
    fn tree_shape_violations() {
        let g = tp("vertex A { gens = [ a ] }\nvertex B { gens = [ b ] }\n");
        assert!(matches!(g.validate()[0], Violation::NotATree(_)));
        let g = tp("vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nedge A:a b = B:c\nedge A:b a = B:d\n");
        assert!(g.validate().iter().any(|v| matches!(v, Violation::NotATree(_))));
    }
}
