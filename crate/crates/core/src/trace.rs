//! Trace monoids `M(Σ, I)`: cliques, Cartier-Foata normal forms, left
//! divisibility, the Möbius polynomial and the Möbius transform on cliques.
//!
//! Letters are indexed `0..n` and cliques are bitmasks over letter indices, so
//! alphabets are limited to 64 letters.

use std::collections::HashMap;
use std::fmt;

use num_traits::Num;
use thiserror::Error;

use crate::poly::Poly;

pub const MAX_LETTERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("ReflexivePair: letter {0:?} cannot be independent of itself")]
    ReflexivePair(String),
    #[error("UnknownLetter: {0:?}")]
    UnknownLetter(String),
    #[error("DuplicateLetter: {0:?}")]
    DuplicateLetter(String),
    #[error("alphabet has {0} letters, at most {MAX_LETTERS} are supported")]
    TooManyLetters(usize),
    #[error("NonPositiveWeight: letter {0:?}")]
    NonPositiveWeight(String),
    #[error("NotADivisor: the first trace does not left-divide the second")]
    NotADivisor,
    #[error("NoRootInUnitInterval: the polynomial has no root in (0, 1]")]
    NoRootInUnitInterval,
}

/// A set of pairwise independent letters, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Clique(pub u64);

impl Clique {
    pub const EMPTY: Clique = Clique(0);

    pub fn singleton(a: usize) -> Self {
        Clique(1 << a)
    }

    pub fn from_letters(letters: &[usize]) -> Self {
        Clique(letters.iter().fold(0, |m, &a| m | (1 << a)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, a: usize) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn is_subset(self, other: Clique) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member letter indices in increasing order.
    pub fn letters(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let a = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(a)
            }
        })
    }

    fn sort_key(self) -> (usize, Vec<usize>) {
        (self.len(), self.letters().collect())
    }
}

impl fmt::Debug for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.letters()).finish()
    }
}

/// Letters together with the independence relation `I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<String>,
    /// `independent[a]` is the mask of letters independent of `a`.
    independent: Vec<u64>,
    irreducible: bool,
}

impl Alphabet {
    /// Validates letter names and independence pairs.
    pub fn new<S: AsRef<str>>(letters: &[S], pairs: &[(S, S)]) -> Result<Self, TraceError> {
        let names: Vec<String> = letters.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(TraceError::DuplicateLetter(name.clone()));
            }
        }
        let mut idx_pairs = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index
                .get(a)
                .ok_or_else(|| TraceError::UnknownLetter(a.to_string()))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| TraceError::UnknownLetter(b.to_string()))?;
            idx_pairs.push((ia, ib));
        }
        Self::from_indices(names, &idx_pairs)
    }

    pub fn from_indices(letters: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self, TraceError> {
        let n = letters.len();
        if n > MAX_LETTERS {
            return Err(TraceError::TooManyLetters(n));
        }
        let mut independent = vec![0u64; n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(TraceError::UnknownLetter(format!("#{}", a.max(b))));
            }
            if a == b {
                return Err(TraceError::ReflexivePair(letters[a].clone()));
            }
            independent[a] |= 1 << b;
            independent[b] |= 1 << a;
        }
        let mut alphabet = Alphabet {
            letters,
            independent,
            irreducible: false,
        };
        alphabet.irreducible = alphabet.dependence_graph_connected();
        Ok(alphabet)
    }

    /// Free monoid on the given letters (`I = ∅`).
    pub fn free<S: AsRef<str>>(letters: &[S]) -> Self {
        Alphabet::new(letters, &[]).expect("distinct letters")
    }

    fn dependence_graph_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let mut seen = 1u64;
        let mut stack = vec![0usize];
        while let Some(a) = stack.pop() {
            let next = self.dependent_mask(a) & !seen;
            seen |= next;
            stack.extend(Clique(next).letters());
        }
        seen == self.full_mask()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.letters.is_empty()
    }

    /// The dependence graph `(Σ, R)` is connected.
    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn name(&self, a: usize) -> &str {
        &self.letters[a]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l == name)
    }

    pub fn full_mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn independent(&self, a: usize, b: usize) -> bool {
        self.independent[a] >> b & 1 == 1
    }

    pub fn independent_mask(&self, a: usize) -> u64 {
        self.independent[a]
    }

    /// Letters dependent on `a`, including `a` itself.
    pub fn dependent_mask(&self, a: usize) -> u64 {
        self.full_mask() & !self.independent[a]
    }

    /// Independence pairs `(a, b)` with `a < b`.
    pub fn independence_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| ((a + 1)..self.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| self.independent(a, b))
            .collect()
    }

    pub fn is_clique(&self, c: Clique) -> bool {
        c.letters().all(|a| c.0 & !(1 << a) & !self.independent[a] == 0)
    }

    /// All cliques including `ε`, ordered by size then lexicographically on
    /// member indices.
    pub fn cliques(&self) -> Vec<Clique> {
        let mut out = vec![Clique::EMPTY];
        let mut frontier = vec![Clique::EMPTY];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for c in frontier {
                let start = 64 - c.0.leading_zeros() as usize;
                for a in start..self.len() {
                    if c.letters().all(|b| self.independent(a, b)) {
                        next.push(Clique(c.0 | 1 << a));
                    }
                }
            }
            out.extend(next.iter().copied());
            frontier = next;
        }
        out.sort_by_key(|c| c.sort_key());
        out
    }

    /// `c1 → c2`: every letter of `c2` depends on some letter of `c1`.
    pub fn is_normal_pair(&self, c1: Clique, c2: Clique) -> bool {
        c2.letters().all(|b| self.dependent_mask(b) & c1.0 != 0)
    }

    /// `c ∥ d`: disjoint, and their union is a clique.
    pub fn parallel(&self, c: Clique, d: Clique) -> bool {
        c.0 & d.0 == 0 && self.is_clique(Clique(c.0 | d.0))
    }

    pub fn letter(&self, name: &str) -> Result<usize, TraceError> {
        self.index_of(name)
            .ok_or_else(|| TraceError::UnknownLetter(name.to_string()))
    }

    /// Maps letter names to indices.
    pub fn word<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, TraceError> {
        names.iter().map(|s| self.letter(s.as_ref())).collect()
    }

    /// Splits a string into letters when every letter name is one character.
    pub fn parse_word(&self, s: &str) -> Result<Vec<usize>, TraceError> {
        s.chars().map(|ch| self.letter(&ch.to_string())).collect()
    }

    pub fn normal_form(&self, word: &[usize]) -> Result<Trace, TraceError> {
        let mut t = Trace::empty();
        for &a in word {
            if a >= self.len() {
                return Err(TraceError::UnknownLetter(format!("#{a}")));
            }
            t.push_letter(self, a);
        }
        Ok(t)
    }

    pub fn concat(&self, x: &Trace, y: &Trace) -> Trace {
        let mut out = x.clone();
        for a in y.word() {
            out.push_letter(self, a);
        }
        out
    }

    /// `x ≤ y` in the left divisibility order.
    pub fn left_divides(&self, x: &Trace, y: &Trace) -> bool {
        self.left_quotient(x, y).is_ok()
    }

    /// The unique `z` with `y = x z`.
    ///
    /// Letters of `x` are pulled out of `y` one at a time: a letter left-divides
    /// a trace iff it belongs to the first clique of its normal form.
    pub fn left_quotient(&self, x: &Trace, y: &Trace) -> Result<Trace, TraceError> {
        let mut rest = y.clone();
        for a in x.word() {
            if !rest.cliques.first().is_some_and(|c| c.contains(a)) {
                return Err(TraceError::NotADivisor);
            }
            rest = rest.remove_first_letter(self, a);
        }
        Ok(rest)
    }

    /// Coefficients of `μ_λ(t) = Σ_γ λ(γ)(-1)^{|γ|} t^{|γ|}`.
    pub fn mobius_polynomial<T>(&self, weights: &[T]) -> Result<Poly<T>, TraceError>
    where
        T: Clone + Num + PartialOrd + std::ops::Neg<Output = T>,
    {
        assert_eq!(weights.len(), self.len(), "one weight per letter");
        for (a, w) in weights.iter().enumerate() {
            if *w <= T::zero() {
                return Err(TraceError::NonPositiveWeight(self.letters[a].clone()));
            }
        }
        let max = self.cliques().iter().map(|c| c.len()).max().unwrap_or(0);
        let mut coeffs = vec![T::zero(); max + 1];
        for c in self.cliques() {
            let w = c
                .letters()
                .fold(T::one(), |acc, a| acc * weights[a].clone());
            let term = if c.len() % 2 == 0 { w } else { -w };
            coeffs[c.len()] = coeffs[c.len()].clone() + term;
        }
        Ok(Poly::new(coeffs))
    }

    /// Counting-valuation Möbius polynomial.
    pub fn counting_mobius_polynomial(&self) -> Poly<crate::poly::Rational> {
        let ones = vec![crate::poly::rational(1, 1); self.len()];
        self.mobius_polynomial(&ones).expect("unit weights are positive")
    }

    pub fn clique_digraph(&self) -> CliqueDigraph {
        let vertices: Vec<Clique> = self.cliques().into_iter().filter(|c| !c.is_empty()).collect();
        let successors = vertices
            .iter()
            .map(|&c| {
                vertices
                    .iter()
                    .enumerate()
                    .filter(|&(_, &d)| self.is_normal_pair(c, d))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        CliqueDigraph {
            vertices,
            successors,
        }
    }

    /// Alphabet `Σ \ {a}` with the induced independence; the second component
    /// maps new letter indices to old ones.
    pub fn without_letter(&self, a: usize) -> (Alphabet, Vec<usize>) {
        let keep: Vec<usize> = (0..self.len()).filter(|&b| b != a).collect();
        let names = keep.iter().map(|&b| self.letters[b].clone()).collect();
        let pairs: Vec<(usize, usize)> = self
            .independence_pairs()
            .into_iter()
            .filter(|&(x, y)| x != a && y != a)
            .map(|(x, y)| {
                (
                    keep.iter().position(|&k| k == x).unwrap(),
                    keep.iter().position(|&k| k == y).unwrap(),
                )
            })
            .collect();
        (Alphabet::from_indices(names, &pairs).expect("induced relation"), keep)
    }

    pub fn clique_label(&self, c: Clique) -> String {
        if c.is_empty() {
            return "ε".to_string();
        }
        c.letters().map(|a| self.letters[a].as_str()).collect()
    }

    pub fn trace_label(&self, t: &Trace) -> String {
        if t.is_empty() {
            return "ε".to_string();
        }
        t.cliques.iter().map(|&c| self.clique_label(c)).collect()
    }
}

/// Trace in Cartier-Foata normal form: non-empty cliques with consecutive
/// normal pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace {
    cliques: Vec<Clique>,
}

impl Trace {
    pub fn empty() -> Self {
        Trace::default()
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).sum()
    }

    pub fn height(&self) -> usize {
        self.cliques.len()
    }

    pub fn first_clique(&self) -> Clique {
        self.cliques.first().copied().unwrap_or(Clique::EMPTY)
    }

    /// Letters occurring in the trace.
    pub fn content(&self) -> Clique {
        Clique(self.cliques.iter().fold(0, |m, c| m | c.0))
    }

    pub fn letter_count(&self, a: usize) -> usize {
        self.cliques.iter().filter(|c| c.contains(a)).count()
    }

    /// Linearization: cliques in order, letters ascending within each clique.
    pub fn word(&self) -> Vec<usize> {
        self.cliques.iter().flat_map(|c| c.letters()).collect()
    }

    /// Appends a letter: it lands one level above the highest dependent letter.
    pub fn push_letter(&mut self, alphabet: &Alphabet, a: usize) {
        let dep = alphabet.dependent_mask(a);
        let level = self
            .cliques
            .iter()
            .rposition(|c| c.0 & dep != 0)
            .map_or(0, |i| i + 1);
        if level == self.cliques.len() {
            self.cliques.push(Clique::singleton(a));
        } else {
            self.cliques[level].0 |= 1 << a;
        }
    }

    fn remove_first_letter(&self, alphabet: &Alphabet, a: usize) -> Trace {
        let mut word = self.word();
        let pos = word.iter().position(|&b| b == a).expect("letter present");
        word.remove(pos);
        alphabet.normal_form(&word).expect("letters already validated")
    }

    pub fn is_normal(&self, alphabet: &Alphabet) -> bool {
        self.cliques.iter().all(|c| !c.is_empty() && alphabet.is_clique(*c))
            && self
                .cliques
                .windows(2)
                .all(|w| alphabet.is_normal_pair(w[0], w[1]))
    }
}

/// Non-empty cliques with normal-pair edges.
#[derive(Clone, Debug)]
pub struct CliqueDigraph {
    pub vertices: Vec<Clique>,
    pub successors: Vec<Vec<usize>>,
}

impl CliqueDigraph {
    pub fn has_edge(&self, c: Clique, d: Clique) -> bool {
        let (Some(i), Some(j)) = (
            self.vertices.iter().position(|&v| v == c),
            self.vertices.iter().position(|&v| v == d),
        ) else {
            return false;
        };
        self.successors[i].contains(&j)
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }
}

/// The cliques of an alphabet with constant-time lookup of their position.
#[derive(Clone, Debug)]
pub struct CliqueIndex {
    cliques: Vec<Clique>,
    position: HashMap<Clique, usize>,
}

impl CliqueIndex {
    pub fn new(alphabet: &Alphabet) -> Self {
        let cliques = alphabet.cliques();
        let position = cliques.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        CliqueIndex { cliques, position }
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn position(&self, c: Clique) -> Option<usize> {
        self.position.get(&c).copied()
    }

    /// `h(γ) = Σ_{γ' ⊇ γ} (-1)^{|γ'|-|γ|} f(γ')`.
    pub fn mobius_transform<T: Clone + Num>(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.len());
        self.cliques
            .iter()
            .map(|&g| {
                let mut acc = T::zero();
                for (j, &g2) in self.cliques.iter().enumerate() {
                    if g.is_subset(g2) {
                        if (g2.len() - g.len()) % 2 == 0 {
                            acc = acc + f[j].clone();
                        } else {
                            acc = acc - f[j].clone();
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// `f(γ) = Σ_{γ' ⊇ γ} h(γ')`, the inverse of [`Self::mobius_transform`].
    pub fn mobius_inverse<T: Clone + Num>(&self, h: &[T]) -> Vec<T> {
        assert_eq!(h.len(), self.len());
        self.cliques
            .iter()
            .map(|&g| {
                self.cliques
                    .iter()
                    .enumerate()
                    .filter(|&(_, &g2)| g.is_subset(g2))
                    .fold(T::zero(), |acc, (j, _)| acc + h[j].clone())
            })
            .collect()
    }
}

/// Smallest positive root of a Möbius polynomial; must lie in `(0, 1]`.
pub fn smallest_root_monoid(mu: &Poly<crate::poly::Rational>) -> Result<f64, TraceError> {
    let sf = mu.squarefree().to_f64();
    match crate::roots::smallest_positive_root(&sf, 1.0) {
        Some(r) if r > 0.0 && r <= 1.0 => Ok(r),
        _ => Err(TraceError::NoRootInUnitInterval),
    }
}
