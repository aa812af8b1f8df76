//! Bounded search for products of conjugates of `r^{±1}` equal to a target,
//! with certificates that are re-checked by the word problem.
//!
//! Absence of a certificate never means non-membership; every report says so.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;

use crate::amalgam::{canonical_form, contract, is_trivial, minimal_tree};
use crate::eqsystems::{integer_rank, ExponentMatrix};
use crate::error::{Error, Result};
use crate::presentation::{SubtreeSelection, TreeProduct};
use crate::words::{Gen, Letter, Word};

const BATCH: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_factors: usize,
    pub max_conjugator_length: usize,
    /// Cap on distinct stored partial products per level.
    pub max_states: usize,
}

impl SearchBudget {
    pub fn new(max_factors: usize, max_conjugator_length: usize, max_states: usize) -> Result<Self> {
        if max_factors == 0 || max_conjugator_length == 0 || max_states == 0 {
            return Err(Error::Degenerate("search budget entries must be positive".into()));
        }
        Ok(SearchBudget { max_factors, max_conjugator_length, max_states })
    }
}

/// One factor `u·r^sign·u⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConjugateFactor {
    pub conjugator: Word,
    /// `+1` or `-1`.
    pub sign: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureCertificate {
    pub target: Word,
    pub relator: Word,
    pub factors: Vec<ConjugateFactor>,
}

impl ClosureCertificate {
    /// `Π u_i·r^{e_i}·u_i⁻¹` in listed order.
    pub fn product(&self) -> Word {
        let (r, ri) = (self.relator.clone(), self.relator.inverse());
        let mut out = Word::identity();
        for f in &self.factors {
            let rel = if f.sign > 0 { &r } else { &ri };
            out = out.mul(&f.conjugator.mul(rel).mul(&f.conjugator.inverse()));
        }
        out
    }

    pub fn serialize(&self, tp: &TreeProduct) -> String {
        let mut out = format!("target: {}\nrelator: {}\n", tp.format(&self.target), tp.format(&self.relator));
        for (i, f) in self.factors.iter().enumerate() {
            let s = if f.sign > 0 { '+' } else { '-' };
            out.push_str(&format!("factor {}: {s} {}\n", i + 1, tp.format(&f.conjugator)));
        }
        out
    }

    /// Lines other than `target:`, `relator:` and `factor <n>:` are rejected;
    /// `#` starts a comment.
    pub fn parse(tp: &TreeProduct, text: &str) -> Result<Self> {
        let cert_err = |m: String| Error::Certificate(m);
        let (mut target, mut relator, mut factors) = (None, None, vec![]);
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, body) = line.split_once(':').ok_or_else(|| cert_err(format!("line {}: missing `:`", no + 1)))?;
            let body = body.trim();
            match head.trim() {
                "target" => target = Some(tp.parse_word(body)?),
                "relator" => relator = Some(tp.parse_word(body)?),
                h => {
                    let n = h
                        .strip_prefix("factor")
                        .and_then(|n| n.trim().parse::<usize>().ok())
                        .ok_or_else(|| cert_err(format!("line {}: unknown field `{h}`", no + 1)))?;
                    if n != factors.len() + 1 {
                        return Err(cert_err(format!("line {}: factor {n} out of sequence", no + 1)));
                    }
                    let (sign, word) = match body.split_at(body.len().min(1)) {
                        ("+", w) => (1, w),
                        ("-", w) => (-1, w),
                        _ => return Err(cert_err(format!("line {}: factor sign must be + or -", no + 1))),
                    };
                    factors.push(ConjugateFactor { conjugator: tp.parse_word(word.trim())?, sign });
                }
            }
        }
        Ok(ClosureCertificate {
            target: target.ok_or_else(|| cert_err("missing `target:` line".into()))?,
            relator: relator.ok_or_else(|| cert_err("missing `relator:` line".into()))?,
            factors,
        })
    }
}

fn check_alphabet(tp: &TreeProduct, w: &Word) -> Result<()> {
    let n = tp.alphabet().len() as Gen;
    match w.letters().iter().find(|l| l.gen() >= n) {
        Some(l) => Err(Error::Alphabet(format!("generator id {} is not in the presentation", l.gen()))),
        None => Ok(()),
    }
}

/// Recomputes the product and decides `target⁻¹·Π = 1` with the word problem.
pub fn verify_certificate(tp: &TreeProduct, cert: &ClosureCertificate) -> Result<bool> {
    check_alphabet(tp, &cert.target)?;
    check_alphabet(tp, &cert.relator)?;
    for f in &cert.factors {
        check_alphabet(tp, &f.conjugator)?;
        if f.sign != 1 && f.sign != -1 {
            return Ok(false);
        }
    }
    is_trivial(tp, &cert.target.inverse().mul(&cert.product()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Distinct conjugates `u·r^{±1}·u⁻¹` within the length bound.
    pub conjugates: usize,
    /// Stored states per level, level 0 first.
    pub states: Vec<usize>,
    /// A level hit `max_states` before its enumeration finished.
    pub truncated: bool,
    /// Factor counts skipped because the abelianized equation has no solution.
    pub pruned: Vec<usize>,
    pub lookups: usize,
}

impl fmt::Display for SearchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        write!(
            f,
            "conjugates={} states=[{}] truncated={} pruned=[{}] lookups={}",
            self.conjugates,
            list(&self.states),
            self.truncated,
            list(&self.pruned),
            self.lookups
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(ClosureCertificate, SearchStats),
    NotFoundWithinBudget(SearchStats),
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&ClosureCertificate> {
        match self {
            SearchOutcome::Found(c, _) => Some(c),
            SearchOutcome::NotFoundWithinBudget(_) => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchOutcome::Found(_, s) | SearchOutcome::NotFoundWithinBudget(s) => s,
        }
    }
}

struct Conjugate {
    conjugator: Word,
    len: usize,
    sign: i64,
    element: Word,
}

#[derive(Clone)]
struct State {
    sum: i64,
    total: usize,
    combo: Vec<u32>,
    word: Word,
}

struct Level {
    states: Vec<State>,
    index: HashMap<(i64, u128), usize>,
    truncated: bool,
}

/// Reusable search state for one relator; levels are built on demand and
/// shared across targets.
pub struct ClosureSearch<'a> {
    tp: &'a TreeProduct,
    relator: Word,
    budget: SearchBudget,
    conjugates: Vec<Conjugate>,
    /// `by_len[l]..by_len[l+1]` are the conjugates with `|u| = l`.
    by_len: Vec<usize>,
    levels: Vec<Level>,
    relation_rows: Vec<Vec<i64>>,
    relation_rank: usize,
}

fn element_key(tp: &TreeProduct, w: &Word) -> Result<u128> {
    let cf = canonical_form(tp, w)?;
    let mut lo = DefaultHasher::new();
    cf.hash(&mut lo);
    let mut hi = DefaultHasher::new();
    0xa5u8.hash(&mut hi);
    cf.hash(&mut hi);
    Ok((u128::from(hi.finish()) << 64) | u128::from(lo.finish()))
}

/// All freely reduced words of length `len`, ordered by their text.
fn reduced_words(tp: &TreeProduct, gens: &[Gen], len: usize) -> Vec<(String, Word)> {
    let letters: Vec<Letter> = gens.iter().flat_map(|&g| [Letter::new(g, false), Letter::new(g, true)]).collect();
    let mut layer = vec![Vec::<Letter>::new()];
    for _ in 0..len {
        layer = layer
            .into_iter()
            .flat_map(|w| {
                let last = w.last().copied();
                letters
                    .iter()
                    .filter(|&&l| last != Some(l.inv()))
                    .map(|&l| {
                        let mut n = w.clone();
                        n.push(l);
                        n
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let mut out: Vec<(String, Word)> = layer
        .into_iter()
        .map(|ls| {
            let w = Word::from_letters(&ls);
            (tp.format(&w), w)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Nontrivial freely reduced words of length `1..=max_len` over `gens`,
/// shortest first.
pub fn all_reduced_words(tp: &TreeProduct, gens: &[Gen], max_len: usize) -> Vec<Word> {
    (1..=max_len).flat_map(|l| reduced_words(tp, gens, l).into_iter().map(|(_, w)| w)).collect()
}

fn exponent_row(tp: &TreeProduct, w: &Word) -> Vec<i64> {
    (0..tp.alphabet().len() as Gen).map(|g| w.exponent_sum(g)).collect()
}

impl<'a> ClosureSearch<'a> {
    pub fn new(tp: &'a TreeProduct, relator: &Word, budget: SearchBudget) -> Result<Self> {
        check_alphabet(tp, relator)?;
        let relation_rows: Vec<Vec<i64>> = tp
            .edges()
            .iter()
            .map(|e| {
                let (p, q) = (exponent_row(tp, &e.left_word), exponent_row(tp, &e.right_word));
                p.iter().zip(&q).map(|(x, y)| x - y).collect()
            })
            .collect();
        let relation_rank = integer_rank(&ExponentMatrix::from_rows(relation_rows.clone(), tp.alphabet().len())?);
        let identity = State { sum: 0, total: 0, combo: vec![], word: Word::identity() };
        let mut index = HashMap::new();
        index.insert((0, element_key(tp, &Word::identity())?), 0);
        Ok(ClosureSearch {
            tp,
            relator: relator.clone(),
            budget,
            conjugates: vec![],
            by_len: vec![],
            levels: vec![Level { states: vec![identity], index, truncated: false }],
            relation_rows,
            relation_rank,
        })
    }

    /// Whether `ab(target) = n·ab(r)` modulo the abelianized edge relations over ℚ.
    fn abelian_solvable(&self, target: &Word, n: i64) -> Result<bool> {
        let (t, r) = (exponent_row(self.tp, target), exponent_row(self.tp, &self.relator));
        let diff: Vec<i64> = t.iter().zip(&r).map(|(x, y)| x - n * y).collect();
        if diff.iter().all(|&x| x == 0) {
            return Ok(true);
        }
        let mut rows = self.relation_rows.clone();
        rows.push(diff);
        Ok(integer_rank(&ExponentMatrix::from_rows(rows, self.tp.alphabet().len())?) == self.relation_rank)
    }

    fn build_conjugates(&mut self) -> Result<()> {
        if !self.conjugates.is_empty() {
            return Ok(());
        }
        let gens: Vec<Gen> = (0..self.tp.alphabet().len() as Gen).collect();
        let (r, ri) = (self.relator.clone(), self.relator.inverse());
        let mut candidates = vec![];
        for len in 0..=self.budget.max_conjugator_length {
            for (_, u) in reduced_words(self.tp, &gens, len) {
                for sign in [1i64, -1] {
                    let rel = if sign > 0 { &r } else { &ri };
                    let element = u.mul(rel).mul(&u.inverse());
                    candidates.push(Conjugate { conjugator: u.clone(), len, sign, element });
                }
            }
        }
        let tp = self.tp;
        let keys: Vec<u128> =
            candidates.par_iter().map(|c| element_key(tp, &c.element)).collect::<Result<Vec<_>>>()?;
        let mut level = Level { states: vec![], index: HashMap::new(), truncated: false };
        let mut by_len = vec![0; self.budget.max_conjugator_length + 2];
        for (c, key) in candidates.into_iter().zip(keys) {
            if level.index.contains_key(&(c.sign, key)) {
                continue;
            }
            let id = self.conjugates.len();
            level.index.insert((c.sign, key), id);
            level.states.push(State { sum: c.sign, total: c.len, combo: vec![id as u32], word: c.element.clone() });
            by_len[c.len + 1] = id + 1;
            self.conjugates.push(c);
        }
        for l in 1..by_len.len() {
            by_len[l] = by_len[l].max(by_len[l - 1]);
        }
        self.by_len = by_len;
        if level.states.len() > self.budget.max_states {
            level.states.truncate(self.budget.max_states);
            level.index.retain(|_, v| *v < self.budget.max_states);
            level.truncated = true;
        }
        self.levels.push(level);
        Ok(())
    }

    /// Level `m` in the order (total length, factor indices).
    fn build_level(&mut self, m: usize) -> Result<()> {
        if m >= 1 {
            self.build_conjugates()?;
        }
        while self.levels.len() <= m {
            let prev = self.levels.last().expect("level 0 exists");
            let mut order: Vec<usize> = (0..prev.states.len()).collect();
            order.sort_by(|&a, &b| prev.states[a].combo.cmp(&prev.states[b].combo));
            let max_len = self.budget.max_conjugator_length;
            let cap = self.budget.max_states;
            let tp = self.tp;
            let mut level = Level { states: vec![], index: HashMap::new(), truncated: prev.truncated };
            let mut batch: Vec<(usize, usize)> = Vec::with_capacity(BATCH);
            let mut full = false;
            let last_total = prev.states.iter().map(|s| s.total).max().unwrap_or(0) + max_len;
            let flush = |batch: &mut Vec<(usize, usize)>, level: &mut Level| -> Result<bool> {
                let words: Vec<(State, u128)> = batch
                    .par_iter()
                    .map(|&(p, c)| {
                        let (s, conj) = (&prev.states[p], &self.conjugates[c]);
                        let word = s.word.mul(&conj.element);
                        let key = element_key(tp, &word)?;
                        let mut combo = s.combo.clone();
                        combo.push(c as u32);
                        Ok((State { sum: s.sum + conj.sign, total: s.total + conj.len, combo, word }, key))
                    })
                    .collect::<Result<Vec<_>>>()?;
                batch.clear();
                for (state, key) in words {
                    if level.states.len() >= cap {
                        level.truncated = true;
                        return Ok(true);
                    }
                    let slot = (state.sum, key);
                    if let std::collections::hash_map::Entry::Vacant(e) = level.index.entry(slot) {
                        e.insert(level.states.len());
                        level.states.push(state);
                    }
                }
                Ok(false)
            };
            'outer: for t in 0..=last_total {
                for &p in &order {
                    let pt = prev.states[p].total;
                    if pt > t || t - pt > max_len {
                        continue;
                    }
                    let l = t - pt;
                    for c in self.by_len[l]..self.by_len[l + 1] {
                        batch.push((p, c));
                        if batch.len() == BATCH && flush(&mut batch, &mut level)? {
                            full = true;
                            break 'outer;
                        }
                    }
                }
            }
            if !full && !batch.is_empty() {
                flush(&mut batch, &mut level)?;
            }
            self.levels.push(level);
        }
        Ok(())
    }

    fn stats(&self) -> SearchStats {
        SearchStats {
            conjugates: self.conjugates.len(),
            states: self.levels.iter().map(|l| l.states.len()).collect(),
            truncated: self.levels.iter().any(|l| l.truncated),
            ..SearchStats::default()
        }
    }

    fn certificate(&self, target: &Word, combo: &[u32]) -> ClosureCertificate {
        ClosureCertificate {
            target: target.clone(),
            relator: self.relator.clone(),
            factors: combo
                .iter()
                .map(|&i| {
                    let c = &self.conjugates[i as usize];
                    ConjugateFactor { conjugator: c.conjugator.clone(), sign: c.sign }
                })
                .collect(),
        }
    }

    /// Certificates are ranked by factor count, total conjugator length, then
    /// per-factor shortlex order of the conjugator text with `+` before `-`.
    pub fn search(&mut self, target: &Word) -> Result<SearchOutcome> {
        check_alphabet(self.tp, target)?;
        let mut pruned = vec![];
        let mut lookups = 0;
        if is_trivial(self.tp, target)? {
            let cert = self.certificate(target, &[]);
            return Ok(SearchOutcome::Found(cert, SearchStats { lookups, ..self.stats() }));
        }
        for k in 1..=self.budget.max_factors {
            let ns: Vec<i64> = (-(k as i64)..=k as i64)
                .filter(|n| (n - k as i64) % 2 == 0)
                .filter_map(|n| self.abelian_solvable(target, n).map(|ok| ok.then_some(n)).transpose())
                .collect::<Result<_>>()?;
            if ns.is_empty() {
                pruned.push(k);
                continue;
            }
            let left = k.div_ceil(2);
            let right = k - left;
            self.build_level(left)?;
            let (lv, rv) = (&self.levels[left], &self.levels[right]);
            let tp = self.tp;
            let keys: Vec<u128> =
                rv.states.par_iter().map(|s| element_key(tp, &target.mul(&s.word.inverse()))).collect::<Result<_>>()?;
            lookups += keys.len();
            let mut best: Option<(usize, Vec<u32>)> = None;
            for (rs, key) in rv.states.iter().zip(keys) {
                for &n in &ns {
                    let Some(&li) = lv.index.get(&(n - rs.sum, key)) else {
                        continue;
                    };
                    let ls = &lv.states[li];
                    let cand = (ls.total + rs.total, [ls.combo.as_slice(), rs.combo.as_slice()].concat());
                    if best.as_ref().is_none_or(|b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
            if let Some((_, combo)) = best {
                let cert = self.certificate(target, &combo);
                if !verify_certificate(self.tp, &cert)? {
                    return Err(Error::Certificate("hash collision produced an invalid certificate".into()));
                }
                return Ok(SearchOutcome::Found(cert, SearchStats { pruned, lookups, ..self.stats() }));
            }
        }
        Ok(SearchOutcome::NotFoundWithinBudget(SearchStats { pruned, lookups, ..self.stats() }))
    }
}

pub fn search_membership(tp: &TreeProduct, r: &Word, target: &Word, budget: SearchBudget) -> Result<SearchOutcome> {
    ClosureSearch::new(tp, r, budget)?.search(target)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hypotheses {
    Hold,
    Violated(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub subtree: SubtreeSelection,
    pub hypotheses: Hypotheses,
    /// Set when the relator is trivial or conjugate into one factor; no search ran.
    pub refused: Option<String>,
    pub samples: usize,
    /// Samples shown to die in the quotient.
    pub kills: Vec<ClosureCertificate>,
    pub not_found: usize,
    pub stats: SearchStats,
}

impl ProbeReport {
    pub fn serialize(&self, tp: &TreeProduct) -> String {
        let mut out = String::from("probe: one-sided; no kill found is not a proof of embedding\n");
        out.push_str(&format!("subtree: {}\n", tp.format_selection(&self.subtree)));
        match &self.hypotheses {
            Hypotheses::Hold => out.push_str("hypotheses: hold\n"),
            Hypotheses::Violated(why) => out.push_str(&format!("hypotheses: violated ({})\n", why.join("; "))),
        }
        if let Some(why) = &self.refused {
            out.push_str(&format!("refused: {why}\n"));
            return out;
        }
        out.push_str(&format!("samples: {}\nkills: {}\nnot-found: {}\n", self.samples, self.kills.len(), self.not_found));
        out.push_str(&format!("stats: {}\n", self.stats));
        for cert in &self.kills {
            out.push_str("kill:\n");
            for line in cert.serialize(tp).lines() {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out
    }
}

/// Searches for each sample in `⟨⟨r⟩⟩`; a hit shows `S ∗ H` does not embed.
pub fn probe_embedding(
    tp: &TreeProduct,
    subtree: &SubtreeSelection,
    r: &Word,
    budget: SearchBudget,
    samples: &[Word],
) -> Result<ProbeReport> {
    tp.check_selection(subtree)?;
    for w in samples {
        if !tp.in_subfactor(subtree, w) {
            return Err(Error::Sample(format!("{} is not in the subtree factor", tp.format(w))));
        }
        if is_trivial(tp, w)? {
            return Err(Error::Sample(format!("{} is trivial", tp.format(w))));
        }
    }
    let mut report = ProbeReport {
        subtree: subtree.clone(),
        hypotheses: Hypotheses::Hold,
        refused: None,
        samples: samples.len(),
        kills: vec![],
        not_found: 0,
        stats: SearchStats::default(),
    };
    let mut violated: Vec<String> = tp.validate().iter().map(ToString::to_string).collect();
    match contract(tp, r) {
        Ok(_) => {
            let t = minimal_tree(tp, r)?;
            if !t.iter().any(|v| subtree.contains(v)) {
                violated.push("minimal tree misses the subtree".into());
            }
            if t.iter().all(|v| subtree.contains(v)) {
                violated.push("minimal tree lies inside the subtree".into());
            }
        }
        Err(e @ (Error::Trivial | Error::SingleFactor(_))) => {
            report.hypotheses = Hypotheses::Violated(vec![e.to_string()]);
            report.refused = Some(format!("precondition failed: {e}"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    }
    if !violated.is_empty() {
        report.hypotheses = Hypotheses::Violated(violated);
    }
    let mut search = ClosureSearch::new(tp, r, budget)?;
    let mut stats = SearchStats::default();
    for w in samples {
        let outcome = search.search(w)?;
        let s = outcome.stats();
        stats.conjugates = s.conjugates;
        stats.states = s.states.clone();
        stats.truncated |= s.truncated;
        stats.lookups += s.lookups;
        stats.pruned.extend(&s.pruned);
        match outcome {
            SearchOutcome::Found(cert, _) => report.kills.push(cert),
            SearchOutcome::NotFoundWithinBudget(_) => report.not_found += 1,
        }
    }
    stats.pruned.sort_unstable();
    stats.pruned.dedup();
    report.stats = stats;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE: &str = "vertex A { gens = [ a ] }\nvertex B { gens = [ b, c, d ] }\nedge A:a^2 = B:b c b c d^2\n";
    const GENUS2: &str = "vertex A { gens = [ a, b ] }\nvertex B { gens = [ c, d ] }\nedge A:a^-1 b^-1 a b = B:d^-1 c^-1 d c\n";

    fn tp(s: &str) -> TreeProduct {
        TreeProduct::parse(s).unwrap()
    }

    fn oracle_cert(t: &TreeProduct) -> ClosureCertificate {
        let w = |s: &str| t.parse_word(s).unwrap();
        ClosureCertificate {
            target: w("d d"),
            relator: w("a c^-1 b^-1"),
            factors: vec![
                ConjugateFactor { conjugator: w("c^-1 b^-1 c^-1 b^-1"), sign: 1 },
                ConjugateFactor { conjugator: w("c^-1 b^-1"), sign: 1 },
            ],
        }
    }

    #[test]
    fn oracle_certificate_verifies_and_tampering_fails() {
        let t = tp(EXAMPLE);
        let cert = oracle_cert(&t);
        assert!(verify_certificate(&t, &cert).unwrap());
        let mut bad = cert.clone();
        bad.factors[1].sign = -1;
        assert!(!verify_certificate(&t, &bad).unwrap());
        let empty = ClosureCertificate { factors: vec![], ..cert.clone() };
        assert!(!verify_certificate(&t, &empty).unwrap());
        let text = cert.serialize(&t);
        assert_eq!(ClosureCertificate::parse(&t, &text).unwrap(), cert);
        assert!(text.contains("factor 2: + c^-1 b^-1\n"));
    }

    #[test]
    fn finds_two_factor_certificate() {
        let t = tp(EXAMPLE);
        let r = t.parse_word("a c^-1 b^-1").unwrap();
        let target = t.parse_word("d^2").unwrap();
        let out = search_membership(&t, &r, &target, SearchBudget::new(4, 4, 1_000_000).unwrap()).unwrap();
        let cert = out.certificate().expect("certificate");
        assert_eq!(cert.factors.len(), 2);
        assert!(verify_certificate(&t, cert).unwrap());
        assert_eq!(out.stats().pruned, vec![1]);
    }

    #[test]
    fn relator_itself_and_trivial_target() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c").unwrap();
        let b = SearchBudget::new(2, 2, 1000).unwrap();
        let cert = search_membership(&t, &r, &r, b).unwrap().certificate().cloned().unwrap();
        assert_eq!(cert.factors, vec![ConjugateFactor { conjugator: Word::identity(), sign: 1 }]);
        let one = t.parse_word("a^-1 b^-1 a b c^-1 d^-1 c d").unwrap();
        assert!(search_membership(&t, &r, &one, b).unwrap().certificate().unwrap().factors.is_empty());
    }

    #[test]
    fn genus_two_generator_not_found() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c").unwrap();
        let target = t.parse_word("a").unwrap();
        let out = search_membership(&t, &r, &target, SearchBudget::new(4, 6, 1_000_000).unwrap()).unwrap();
        assert!(matches!(out, SearchOutcome::NotFoundWithinBudget(_)));
        assert_eq!(out.stats().pruned, vec![1, 2, 3, 4]);
    }

    #[test]
    fn commutator_target_searches_levels() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c").unwrap();
        let target = t.parse_word("a b a^-1 b^-1").unwrap();
        let b = SearchBudget::new(2, 2, 5000).unwrap();
        let out = search_membership(&t, &r, &target, b).unwrap();
        assert!(matches!(out, SearchOutcome::NotFoundWithinBudget(_)));
        assert!(out.stats().lookups > 0);
        assert_eq!(out, search_membership(&t, &r, &target, b).unwrap());
    }

    #[test]
    fn probe_outcomes() {
        let t = tp(EXAMPLE);
        let r = t.parse_word("a c^-1 b^-1").unwrap();
        let sel = t.parse_selection("B").unwrap();
        let rep = probe_embedding(&t, &sel, &r, SearchBudget::new(2, 4, 100_000).unwrap(), &[t.parse_word("d d").unwrap()])
            .unwrap();
        assert_eq!(rep.kills.len(), 1);
        assert!(matches!(rep.hypotheses, Hypotheses::Violated(_)));
        let into_a = t.parse_word("b a b^-1").unwrap();
        let rep = probe_embedding(&t, &sel, &into_a, SearchBudget::new(1, 1, 10).unwrap(), &[]).unwrap();
        assert!(rep.refused.is_some());
        assert!(probe_embedding(&t, &sel, &r, SearchBudget::new(1, 1, 10).unwrap(), &[t.parse_word("a").unwrap()]).is_err());
    }

    #[test]
    fn genus_two_probe_has_no_kills() {
        let t = tp(GENUS2);
        let r = t.parse_word("a c").unwrap();
        let sel = t.parse_selection("A").unwrap();
        let gens = [t.alphabet().gen("a").unwrap(), t.alphabet().gen("b").unwrap()];
        let samples = all_reduced_words(&t, &gens, 3);
        assert_eq!(samples.len(), 4 + 12 + 36);
        let rep = probe_embedding(&t, &sel, &r, SearchBudget::new(3, 5, 50_000).unwrap(), &samples).unwrap();
        assert_eq!(rep.hypotheses, Hypotheses::Hold);
        assert!(rep.kills.is_empty());
        assert!(rep.serialize(&t).starts_with("probe: one-sided"));
    }

    #[test]
    fn budget_must_be_positive() {
        assert!(SearchBudget::new(0, 1, 1).is_err());
    }
}
