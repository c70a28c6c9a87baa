//! Weighted string homomorphisms given by one monomial per symbol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::algebra::{AlgebraError, Bimonoid, Weight};
use crate::grammar::{show_word, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error("symbol `{0}` is not in the source alphabet")]
    Foreign(String),
    #[error("no image for source symbol `{0}`")]
    Partial(String),
    #[error("image of `{symbol}` uses `{target}`, which is not in the target alphabet")]
    OutsideTarget { symbol: String, target: String },
    #[error("homomorphism is not alphabetic: `{0}` has an image longer than one symbol")]
    NotAlphabetic(String),
    #[error("alphabet mismatch: `{0}` is produced by the inner homomorphism but not mapped by the outer one")]
    AlphabetMismatch(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `μ.w`, a weighted language with at most one support word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    word: Word,
    weight: Weight,
}

impl Monomial {
    /// A zero weight normalizes to the canonical `0.ε`.
    pub fn new(word: Word, weight: Weight) -> Monomial {
        if weight.is_zero() {
            Monomial { word: Vec::new(), weight }
        } else {
            Monomial { word, weight }
        }
    }

    pub fn one(algebra: &Bimonoid) -> Monomial {
        Monomial { word: Vec::new(), weight: Weight::one(algebra) }
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn is_zero(&self) -> bool {
        self.weight.is_zero()
    }

    /// Concatenation of words, product of weights.
    pub fn concat(&self, other: &Monomial) -> Result<Monomial, AlgebraError> {
        let weight = self.weight.times(&other.weight)?;
        let mut word = self.word.clone();
        word.extend(other.word.iter().cloned());
        Ok(Monomial::new(word, weight))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}).{}", self.weight, show_word(&self.word))
    }
}

/// A finite weighted language; absent words weigh zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedLanguage {
    algebra: Bimonoid,
    weights: BTreeMap<Word, Weight>,
}

impl WeightedLanguage {
    pub fn empty(algebra: &Bimonoid) -> Self {
        WeightedLanguage { algebra: algebra.clone(), weights: BTreeMap::new() }
    }

    pub fn get(&self, w: &[String]) -> Weight {
        self.weights.get(w).cloned().unwrap_or_else(|| Weight::zero(&self.algebra))
    }

    /// Adds `weight` to the entry of `w`.
    pub fn add(&mut self, w: Word, weight: &Weight) -> Result<(), AlgebraError> {
        let sum = self.get(&w).plus(weight)?;
        if sum.is_zero() {
            self.weights.remove(&w);
        } else {
            self.weights.insert(w, sum);
        }
        Ok(())
    }

    /// Words with non-zero weight, in canonical order.
    pub fn support(&self) -> impl Iterator<Item = (&Word, &Weight)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `ĝ: Δ* → (Γ* → 𝒜)` induced by one monomial per source symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedHom {
    algebra: Bimonoid,
    source: BTreeSet<String>,
    target: BTreeSet<String>,
    table: BTreeMap<String, Monomial>,
}

impl WeightedHom {
    pub fn new(
        algebra: Bimonoid,
        source: BTreeSet<String>,
        target: BTreeSet<String>,
        table: BTreeMap<String, Monomial>,
    ) -> Result<Self, HomError> {
        for s in &source {
            let m = table.get(s).ok_or_else(|| HomError::Partial(s.clone()))?;
            if *m.weight.algebra() != algebra {
                return Err(AlgebraError::Mixed(algebra.name().into(), m.weight.algebra().name().into()).into());
            }
            if let Some(t) = m.word.iter().find(|t| !target.contains(*t)) {
                return Err(HomError::OutsideTarget { symbol: s.clone(), target: t.clone() });
            }
        }
        if let Some(extra) = table.keys().find(|k| !source.contains(*k)) {
            return Err(HomError::Foreign(extra.clone()));
        }
        Ok(WeightedHom { algebra, source, target, table })
    }

    /// An unweighted (boolean) homomorphism from a symbol-to-word map.
    pub fn unweighted(
        source: BTreeSet<String>,
        target: BTreeSet<String>,
        map: impl IntoIterator<Item = (String, Word)>,
    ) -> Result<Self, HomError> {
        let one = Weight::one(&Bimonoid::Boolean);
        let table = map.into_iter().map(|(s, w)| (s, Monomial::new(w, one.clone()))).collect();
        WeightedHom::new(Bimonoid::Boolean, source, target, table)
    }

    pub fn identity(algebra: &Bimonoid, alphabet: &BTreeSet<String>) -> Self {
        let one = Weight::one(algebra);
        let table = alphabet.iter().map(|s| (s.clone(), Monomial::new(vec![s.clone()], one.clone()))).collect();
        WeightedHom { algebra: algebra.clone(), source: alphabet.clone(), target: alphabet.clone(), table }
    }

    pub fn algebra(&self) -> &Bimonoid {
        &self.algebra
    }

    pub fn source(&self) -> &BTreeSet<String> {
        &self.source
    }

    pub fn target(&self) -> &BTreeSet<String> {
        &self.target
    }

    pub fn image_of(&self, symbol: &str) -> Option<&Monomial> {
        self.table.get(symbol)
    }

    pub fn table(&self) -> &BTreeMap<String, Monomial> {
        &self.table
    }

    pub fn is_alphabetic(&self) -> bool {
        self.table.values().all(|m| m.word.len() <= 1)
    }

    /// `ĥ(u)`: images concatenated, weights multiplied.
    pub fn apply(&self, u: &[String]) -> Result<Monomial, HomError> {
        let mut word = Vec::new();
        let mut values = Vec::with_capacity(u.len());
        for s in u {
            let m = self.table.get(s).ok_or_else(|| HomError::Foreign(s.clone()))?;
            values.push(m.weight.value().clone());
            word.extend(m.word.iter().cloned());
        }
        let weight = Weight::new(self.algebra.clone(), self.algebra.product(&values))?;
        Ok(Monomial::new(word, weight))
    }

    /// `h(L)(w) = Σ_{u ∈ L} L(u) · ĥ(u)(w)` over a finite weighted family.
    pub fn image_weighted<'a>(
        &self,
        language: impl IntoIterator<Item = (&'a Word, &'a Weight)>,
    ) -> Result<WeightedLanguage, HomError> {
        let mut out = WeightedLanguage::empty(&self.algebra);
        for (u, lw) in language {
            let m = self.apply(u)?;
            if !m.is_zero() {
                out.add(m.word.clone(), &lw.times(&m.weight)?)?;
            }
        }
        Ok(out)
    }

    /// `h(L)` for an unweighted finite language, each word counted once.
    pub fn image<'a>(&self, words: impl IntoIterator<Item = &'a Word>) -> Result<WeightedLanguage, HomError> {
        let one = Weight::one(&self.algebra);
        let mut out = WeightedLanguage::empty(&self.algebra);
        for u in words {
            let m = self.apply(u)?;
            if !m.is_zero() {
                out.add(m.word.clone(), &one.times(&m.weight)?)?;
            }
        }
        Ok(out)
    }

    /// Parses the dump format produced by `Display`.
    pub fn parse(algebra: &Bimonoid, text: &str) -> Result<Self, HomError> {
        let mut table = BTreeMap::new();
        let mut target = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let syntax = |msg: &str| HomError::Syntax { line: n + 1, msg: msg.to_owned() };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (sym, rest) = line.split_once(" -> ").ok_or_else(|| syntax("expected `σ -> 'word' @ weight`"))?;
            let rest = rest.trim();
            let rest = rest.strip_prefix('\'').ok_or_else(|| syntax("image word must be quoted"))?;
            let (w, rest) = rest.split_once('\'').ok_or_else(|| syntax("unterminated image word"))?;
            let weight = match rest.trim().strip_prefix('@') {
                Some(lit) => Weight::parse(algebra, lit.trim())?,
                None if rest.trim().is_empty() => Weight::one(algebra),
                None => return Err(syntax("expected `@ weight`")),
            };
            let w = crate::grammar::word(w);
            target.extend(w.iter().cloned());
            table.insert(sym.trim().to_owned(), Monomial::new(w, weight));
        }
        let source = table.keys().cloned().collect();
        WeightedHom::new(algebra.clone(), source, target, table)
    }
}

impl fmt::Display for WeightedHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, m) in &self.table {
            writeln!(f, "{s} -> '{}' @ {}", m.word.join(" "), m.weight)?;
        }
        Ok(())
    }
}

/// `h₁ ∘ h₂` for an alphabetic weighted `h₁` and an alphabetic `h₂`.
///
/// `h₂` is either boolean (its weights are ignored) or over the same algebra
/// as `h₁`, in which case its weights are multiplied in.
pub fn compose_alphabetic(h1: &WeightedHom, h2: &WeightedHom) -> Result<WeightedHom, HomError> {
    for h in [h1, h2] {
        if let Some((s, _)) = h.table.iter().find(|(_, m)| m.word.len() > 1) {
            return Err(HomError::NotAlphabetic(s.clone()));
        }
    }
    let weighted_inner = h2.algebra == h1.algebra;
    if !weighted_inner && h2.algebra != Bimonoid::Boolean {
        return Err(AlgebraError::Mixed(h1.algebra.name().into(), h2.algebra.name().into()).into());
    }
    let mut table = BTreeMap::new();
    for (s, inner) in &h2.table {
        if let Some(t) = inner.word.iter().find(|t| !h1.source.contains(*t)) {
            return Err(HomError::AlphabetMismatch(t.clone()));
        }
        let outer = if inner.is_zero() {
            Monomial::new(Vec::new(), Weight::zero(&h1.algebra))
        } else {
            h1.apply(&inner.word)?
        };
        let m = if weighted_inner { Monomial::new(Vec::new(), inner.weight.clone()).concat(&outer)? } else { outer };
        table.insert(s.clone(), m);
    }
    WeightedHom::new(h1.algebra.clone(), h2.source.clone(), h1.target.clone(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::word;

    fn set(s: &str) -> BTreeSet<String> {
        word(s).into_iter().collect()
    }

    fn small() -> WeightedHom {
        let p = Bimonoid::Pr2;
        let w = |l: &str| Weight::parse(&p, l).unwrap();
        let table = [
            ("x".to_string(), Monomial::new(word("a"), w("1/2"))),
            ("y".to_string(), Monomial::new(word(""), w("1/3"))),
            ("z".to_string(), Monomial::new(word("a"), w("1"))),
        ]
        .into_iter()
        .collect();
        WeightedHom::new(p, set("x y z"), set("a"), table).unwrap()
    }

    #[test]
    fn application_multiplies_and_concatenates() {
        let h = small();
        assert_eq!(h.apply(&word("x y x")).unwrap().to_string(), "(1/12).a a");
        assert_eq!(h.apply(&[]).unwrap(), Monomial::one(&Bimonoid::Pr2));
        assert!(matches!(h.apply(&word("q")), Err(HomError::Foreign(_))));
    }

    #[test]
    fn image_adds_colliding_words() {
        let h = small();
        let lang = [word("x"), word("z y")];
        let img = h.image(&lang).unwrap();
        // 1/2 ⊕₂ 1/3
        assert_eq!(img.get(&word("a")).to_string(), "5/6");
        assert!(h.image(&[]).unwrap().is_empty());
    }

    #[test]
    fn zero_weights_normalize() {
        let m = Monomial::new(word("a b"), Weight::zero(&Bimonoid::Probability));
        assert!(m.word().is_empty());
    }

    #[test]
    fn composition_with_identity_is_pointwise_equal() {
        let h = small();
        let id = WeightedHom::identity(&Bimonoid::Boolean, h.source());
        assert_eq!(compose_alphabetic(&h, &id).unwrap().table(), h.table());
    }

    #[test]
    fn composition_checks_alphabets() {
        let h = small();
        let inner = WeightedHom::unweighted(set("p"), set("w"), [("p".to_string(), word("w"))]).unwrap();
        assert!(matches!(compose_alphabetic(&h, &inner), Err(HomError::AlphabetMismatch(_))));
        let long = WeightedHom::unweighted(set("p"), set("x"), [("p".to_string(), word("x x"))]).unwrap();
        assert!(matches!(compose_alphabetic(&h, &long), Err(HomError::NotAlphabetic(_))));
    }

    #[test]
    fn dump_round_trips() {
        let h = small();
        assert_eq!(WeightedHom::parse(&Bimonoid::Pr2, &h.to_string()).unwrap(), h);
    }
}
