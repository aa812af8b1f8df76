//! Words in finitely generated free groups.
//!
//! A [`Word`] is always freely reduced. Letters refer to generators by index
//! into an [`Alphabet`]; the alphabet only matters for parsing and printing.

use std::collections::HashMap;
use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};

/// Index of a generator inside an [`Alphabet`].
pub type Gen = u32;

/// A generator occurrence with sign. Ordered by generator index, then
/// positive before inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    gen: Gen,
    inverse: bool,
}

impl Letter {
    pub const fn new(gen: Gen, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    pub const fn pos(gen: Gen) -> Self {
        Letter::new(gen, false)
    }

    pub const fn neg(gen: Gen) -> Self {
        Letter::new(gen, true)
    }

    pub fn gen(self) -> Gen {
        self.gen
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    /// +1 or -1.
    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inv(self) -> Self {
        Letter::new(self.gen, !self.inverse)
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

/// Freely reduces an arbitrary letter sequence.
pub fn free_reduce(letters: &[Letter]) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&l.inv()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Word(out)
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    /// `gen^k`.
    pub fn gen_power(gen: Gen, k: i64) -> Self {
        let l = Letter::new(gen, k < 0);
        Word(vec![l; k.unsigned_abs() as usize])
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        free_reduce(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut cancel = 0;
        let (a, b) = (&self.0, &other.0);
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == b[cancel].inv() {
            cancel += 1;
        }
        let mut out = Vec::with_capacity(a.len() + b.len() - 2 * cancel);
        out.extend_from_slice(&a[..a.len() - cancel]);
        out.extend_from_slice(&b[cancel..]);
        Word(out)
    }

    pub fn product<'a>(words: impl IntoIterator<Item = &'a Word>) -> Word {
        words.into_iter().fold(Word::identity(), |acc, w| acc.mul(w))
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `u⁻¹ · self · u`.
    pub fn conjugate_by(&self, u: &Word) -> Word {
        u.inverse().mul(self).mul(u)
    }

    pub fn exponent_sum(&self, gen: Gen) -> i64 {
        self.0.iter().filter(|l| l.gen == gen).map(|l| l.sign()).sum()
    }

    pub fn contains_gen(&self, gen: Gen) -> bool {
        self.0.iter().any(|l| l.gen == gen)
    }

    /// Applies the homomorphism determined by `image` on letters of positive sign.
    pub fn substitute(&self, mut image: impl FnMut(Gen) -> Word) -> Word {
        let mut out = Word::identity();
        for l in &self.0 {
            let w = image(l.gen);
            out = out.mul(&if l.inverse { w.inverse() } else { w });
        }
        out
    }

    /// Cyclic rotation: letters `k..` followed by `..k`.
    pub fn rotate(&self, k: usize) -> Word {
        let n = self.0.len();
        if n == 0 {
            return self.clone();
        }
        let k = k % n;
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[k..]);
        v.extend_from_slice(&self.0[..k]);
        free_reduce(&v)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => self.0.len() == 1 || f != l.inv(),
            _ => true,
        }
    }
}

impl Mul for &Word {
    type Output = Word;
    fn mul(self, rhs: &Word) -> Word {
        Word::mul(self, rhs)
    }
}

/// Literal split `w = v⁻¹ · g · v` with `g` cyclically reduced.
pub fn split_conjugate(w: &Word) -> (Word, Word) {
    let l = w.letters();
    let n = l.len();
    let mut k = 0;
    while 2 * k + 1 < n && l[k] == l[n - 1 - k].inv() {
        k += 1;
    }
    let v = Word(l[n - k..].to_vec());
    let g = Word(l[k..n - k].to_vec());
    (v, g)
}

/// Result of [`cyclic_reduce`]: `conjugator⁻¹ · core · conjugator = w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicReduction {
    pub core: Word,
    pub conjugator: Word,
}

/// Cyclically reduces `w`. Among the minimal-length conjugates (the rotations
/// of the literal cyclic core) the lexicographically least one is returned.
pub fn cyclic_reduce(w: &Word) -> CyclicReduction {
    let (v, g) = split_conjugate(w);
    let n = g.len();
    let mut best = 0;
    for k in 1..n {
        if rotation_less(g.letters(), k, best) {
            best = k;
        }
    }
    // rotate(g, k) = h⁻¹ g h with h = g[..k]
    let head = Word(g.letters()[..best].to_vec());
    CyclicReduction {
        core: g.rotate(best),
        conjugator: head.inverse().mul(&v),
    }
}

fn rotation_less(g: &[Letter], a: usize, b: usize) -> bool {
    let n = g.len();
    for i in 0..n {
        let (x, y) = (g[(a + i) % n], g[(b + i) % n]);
        if x != y {
            return x < y;
        }
    }
    false
}

/// `w = root^k` with `k` maximal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProperPower {
    pub root: Word,
    pub k: i64,
}

/// Finds the maximal `k` and root `u` with `w = uᵏ`; `k = 1` means `w` is not
/// a proper power. Uses the period of the cyclic core (failure function).
pub fn is_proper_power(w: &Word) -> Result<ProperPower> {
    if w.is_empty() {
        return Err(Error::Degenerate("proper-power test of the empty word".into()));
    }
    let (v, g) = split_conjugate(w);
    let s = g.letters();
    let n = s.len();
    let mut fail = vec![0usize; n + 1];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    let period = n - fail[n];
    let (h, k) = if n % period == 0 {
        (Word(s[..period].to_vec()), (n / period) as i64)
    } else {
        (g.clone(), 1)
    };
    let root = h.conjugate_by(&v);
    debug_assert_eq!(&root.pow(k), w);
    Ok(ProperPower { root, k })
}

/// Returns `k` with `w = pᵏ`, or `None`.
pub fn power_membership(w: &Word, p: &Word) -> Result<Option<i64>> {
    if p.is_empty() {
        return Err(Error::Degenerate("cyclic subgroup of the empty word".into()));
    }
    if w.is_empty() {
        return Ok(Some(0));
    }
    let (v, g) = split_conjugate(p);
    let rest = w.len() as i64 - 2 * v.len() as i64;
    if rest <= 0 || rest % g.len() as i64 != 0 {
        return Ok(None);
    }
    let k = rest / g.len() as i64;
    // pᵏ = v⁻¹ gᵏ v without cancellation; compare in place
    let sign_matches = |k: i64| {
        let gk = if k > 0 { g.clone() } else { g.inverse() };
        let vi = v.inverse();
        let expect = vi
            .letters()
            .iter()
            .chain(std::iter::repeat_n(gk.letters(), k.unsigned_abs() as usize).flatten())
            .chain(v.letters().iter());
        expect.eq(w.letters().iter())
    };
    if sign_matches(k) {
        Ok(Some(k))
    } else if sign_matches(-k) {
        Ok(Some(-k))
    } else {
        Ok(None)
    }
}

/// Generator names, interned in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Gen>,
}

/// `[A-Za-z][A-Za-z0-9_]*` optionally followed by `$<int>` or `$r` segments
/// (the derived-name scheme used for roots and kernel copies).
pub fn is_valid_name(name: &str) -> bool {
    let mut parts = name.split('$');
    let base = parts.next().unwrap_or("");
    let mut chars = base.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic());
    if !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    parts.all(|seg| {
        seg == "r" || {
            let digits = seg.strip_prefix('-').unwrap_or(seg);
            !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
        }
    })
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Alphabet with the given names, in order.
    pub fn from_names<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut a = Alphabet::new();
        for n in names {
            a.insert(n.as_ref())?;
        }
        Ok(a)
    }

    /// Alphabet of every name mentioned in `texts`, sorted by name.
    pub fn from_words<S: AsRef<str>>(texts: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut names = Vec::new();
        for t in texts {
            for tok in t.as_ref().split_whitespace() {
                let name = tok.split('^').next().unwrap_or(tok);
                names.push(name.to_string());
            }
        }
        names.sort();
        names.dedup();
        Alphabet::from_names(names)
    }

    pub fn insert(&mut self, name: &str) -> Result<Gen> {
        if !is_valid_name(name) {
            return Err(Error::Parse(format!("invalid generator name `{name}`")));
        }
        if self.index.contains_key(name) {
            return Err(Error::Alphabet(format!("duplicate generator `{name}`")));
        }
        let g = self.names.len() as Gen;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), g);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<Gen> {
        self.index.get(name).copied()
    }

    pub fn gen(&self, name: &str) -> Result<Gen> {
        self.lookup(name)
            .ok_or_else(|| Error::Alphabet(format!("unknown generator `{name}`")))
    }

    pub fn name(&self, g: Gen) -> &str {
        &self.names[g as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Parses word syntax without reducing.
    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let k: i64 = e
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?;
                    if k == 0 {
                        return Err(Error::Parse(format!("zero exponent in `{tok}`")));
                    }
                    (n, k)
                }
                None => (tok, 1),
            };
            let g = self.gen(name)?;
            let l = Letter::new(g, exp < 0);
            out.extend(std::iter::repeat_n(l, exp.unsigned_abs() as usize));
        }
        Ok(out)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Ok(free_reduce(&self.parse_letters(text)?))
    }

    /// Formats letters in word syntax, collapsing runs into powers.
    pub fn format_letters(&self, letters: &[Letter]) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < letters.len() {
            let l = letters[i];
            let mut j = i;
            while j < letters.len() && letters[j] == l {
                j += 1;
            }
            let k = (j - i) as i64 * l.sign();
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(self.name(l.gen));
            if k != 1 {
                out.push('^');
                out.push_str(&k.to_string());
            }
            i = j;
        }
        if out.is_empty() {
            out.push('1');
        }
        out
    }

    pub fn format(&self, w: &Word) -> String {
        self.format_letters(w.letters())
    }

    pub fn display<'a>(&'a self, w: &'a Word) -> DisplayWord<'a> {
        DisplayWord { alphabet: self, word: w }
    }
}

pub struct DisplayWord<'a> {
    alphabet: &'a Alphabet,
    word: &'a Word,
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alphabet.format(self.word))
    }
}
