//! Finite state automata with word-labelled transitions.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::grammar::{show_word, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsaError {
    #[error("state `{0}` is declared twice")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("`{0}` is both a state and a symbol")]
    StateSymbolClash(String),
    #[error("transition label symbol `{0}` is not in the alphabet")]
    Foreign(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub label: Word,
    pub to: usize,
}

/// `ℳ = (Q, Δ, q₀, F, T)` with `T ⊆ Q × Δ* × Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsa {
    states: Vec<String>,
    alphabet: BTreeSet<String>,
    initial: usize,
    finals: BTreeSet<usize>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

impl Fsa {
    pub fn new(
        states: Vec<String>,
        alphabet: BTreeSet<String>,
        initial: &str,
        finals: &[String],
        transitions: Vec<(String, Word, String)>,
    ) -> Result<Self, FsaError> {
        let mut index = HashMap::new();
        for (i, q) in states.iter().enumerate() {
            if index.insert(q.clone(), i).is_some() {
                return Err(FsaError::DuplicateState(q.clone()));
            }
            if alphabet.contains(q) {
                return Err(FsaError::StateSymbolClash(q.clone()));
            }
        }
        let find = |q: &str| index.get(q).copied().ok_or_else(|| FsaError::UnknownState(q.to_owned()));
        let initial = find(initial)?;
        let finals = finals.iter().map(|q| find(q)).collect::<Result<_, _>>()?;
        let mut ts = Vec::with_capacity(transitions.len());
        let mut outgoing = vec![Vec::new(); states.len()];
        for (p, label, q) in transitions {
            if let Some(s) = label.iter().find(|s| !alphabet.contains(*s)) {
                return Err(FsaError::Foreign(s.clone()));
            }
            let t = Transition { from: find(&p)?, label, to: find(&q)? };
            outgoing[t.from].push(ts.len());
            ts.push(t);
        }
        Ok(Fsa { states, alphabet, initial, finals, transitions: ts, outgoing })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Whether some run spells `w`. Foreign symbols simply make it fail.
    pub fn accepts(&self, w: &[String]) -> bool {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut queue = VecDeque::from([(self.initial, 0usize)]);
        while let Some((q, pos)) = queue.pop_front() {
            if !seen.insert((q, pos)) {
                continue;
            }
            if pos == w.len() && self.finals.contains(&q) {
                return true;
            }
            for &t in &self.outgoing[q] {
                let t = &self.transitions[t];
                if w[pos..].starts_with(&t.label) {
                    queue.push_back((t.to, pos + t.label.len()));
                }
            }
        }
        false
    }

    /// `L(ℳ) ∩ Δ^{≤max_len}`, breadth-first over `(state, word)` pairs.
    pub fn enumerate_language(&self, max_len: usize) -> BTreeSet<Word> {
        self.enumerate_pruned(max_len, |_| true)
    }

    /// Accepted words of length at most `max_len` whose every prefix
    /// reached along the way satisfies `keep`. Words are explored
    /// breadth-first; a prefix failing `keep` is not extended.
    pub fn enumerate_pruned(&self, max_len: usize, keep: impl Fn(&[String]) -> bool) -> BTreeSet<Word> {
        let mut out = BTreeSet::new();
        let mut seen: HashSet<(usize, Word)> = HashSet::new();
        let mut queue = VecDeque::from([(self.initial, Vec::<String>::new())]);
        while let Some((q, w)) = queue.pop_front() {
            if !seen.insert((q, w.clone())) {
                continue;
            }
            if self.finals.contains(&q) {
                out.insert(w.clone());
            }
            for &t in &self.outgoing[q] {
                let t = &self.transitions[t];
                if w.len() + t.label.len() > max_len {
                    continue;
                }
                let mut next = w.clone();
                next.extend(t.label.iter().cloned());
                if keep(&next) {
                    queue.push_back((t.to, next));
                }
            }
        }
        out
    }

    /// No state has two distinct transitions whose labels share a first
    /// symbol, and no label is empty.
    pub fn is_deterministic(&self) -> bool {
        // exploded chains get private fresh states, so two labels with a
        // common first symbol always branch nondeterministically
        for q in 0..self.states.len() {
            let mut by_first: HashMap<&str, usize> = HashMap::new();
            for &t in &self.outgoing[q] {
                let label = &self.transitions[t].label;
                match label.first() {
                    None => return false,
                    Some(s) => {
                        if by_first.insert(s.as_str(), t).is_some() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Parses the dump produced by `Display`. The `states` line is optional;
    /// without it states are numbered in order of first mention.
    pub fn parse(text: &str) -> Result<Self, FsaError> {
        let mut states: Vec<String> = Vec::new();
        let mut alphabet = BTreeSet::new();
        let mut initial = None;
        let mut finals = Vec::new();
        let mut transitions = Vec::new();
        let note = |q: &str, states: &mut Vec<String>| {
            if !states.iter().any(|s| s == q) {
                states.push(q.to_owned());
            }
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |msg: &str| FsaError::Syntax { line: n + 1, msg: msg.to_owned() };
            if let Some(rest) = line.strip_prefix("initial ") {
                let q = rest.trim();
                note(q, &mut states);
                initial = Some(q.to_owned());
            } else if let Some(rest) = line.strip_prefix("final") {
                for q in rest.split_whitespace() {
                    note(q, &mut states);
                    finals.push(q.to_owned());
                }
            } else if let Some(rest) = line.strip_prefix("states") {
                for q in rest.split_whitespace() {
                    note(q, &mut states);
                }
            } else if let Some(rest) = line.strip_prefix("alphabet") {
                alphabet.extend(rest.split_whitespace().map(str::to_owned));
            } else {
                let (p, rest) = line.split_once(" -- ").ok_or_else(|| syntax("expected `q -- tokens --> q'`"))?;
                let (label, q) = rest.rsplit_once("-->").ok_or_else(|| syntax("missing `-->`"))?;
                let label: Word = label.split_whitespace().filter(|s| *s != "ε").map(str::to_owned).collect();
                note(p.trim(), &mut states);
                note(q.trim(), &mut states);
                alphabet.extend(label.iter().cloned());
                transitions.push((p.trim().to_owned(), label, q.trim().to_owned()));
            }
        }
        let initial = initial.ok_or(FsaError::Syntax { line: 0, msg: "missing `initial` line".into() })?;
        Fsa::new(states, alphabet, &initial, &finals, transitions)
    }
}

impl fmt::Display for Fsa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states {}", self.states.join(" "))?;
        writeln!(f, "alphabet {}", self.alphabet.iter().cloned().collect::<Vec<_>>().join(" "))?;
        writeln!(f, "initial {}", self.states[self.initial])?;
        let finals: Vec<&str> = self.finals.iter().map(|&q| self.states[q].as_str()).collect();
        writeln!(f, "final {}", finals.join(" "))?;
        for t in &self.transitions {
            writeln!(f, "{} -- {} --> {}", self.states[t.from], show_word(&t.label), self.states[t.to])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::word;

    fn abc(labels: &[(&str, &str, &str)], finals: &[&str]) -> Fsa {
        let mut states: Vec<String> = Vec::new();
        for (p, _, q) in labels {
            for s in [p, q] {
                if !states.iter().any(|x| x == s) {
                    states.push(s.to_string());
                }
            }
        }
        if states.is_empty() {
            states.push("q0".into());
        }
        Fsa::new(
            states,
            ["a", "b"].iter().map(|s| s.to_string()).collect(),
            "q0",
            &finals.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            labels.iter().map(|(p, l, q)| (p.to_string(), word(l), q.to_string())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn word_labels() {
        let m = abc(&[("q0", "a b", "qf")], &["qf"]);
        assert!(m.accepts(&word("a b")));
        assert!(!m.accepts(&word("a")));
        assert!(!m.accepts(&word("a b z")));
        assert!(m.is_deterministic());
    }

    #[test]
    fn star_enumeration() {
        let m = abc(&[("q0", "a", "q0")], &["q0"]);
        let lang = m.enumerate_language(2);
        assert_eq!(lang, [word(""), word("a"), word("a a")].into_iter().collect());
        let none = abc(&[("q0", "a", "q0")], &[]);
        assert!(none.enumerate_language(3).is_empty());
        for n in 0..4 {
            assert!(m.enumerate_language(n).is_subset(&m.enumerate_language(n + 1)));
        }
    }

    #[test]
    fn determinism() {
        assert!(!abc(&[("q0", "a", "q1"), ("q0", "a", "q2")], &[]).is_deterministic());
        assert!(abc(&[], &[]).is_deterministic());
        assert!(!abc(&[("q0", "a b", "q1"), ("q0", "a", "q2")], &[]).is_deterministic());
    }

    #[test]
    fn dump_round_trip() {
        let m = abc(&[("q0", "a b", "q1"), ("q1", "b", "q0")], &["q1"]);
        let back = Fsa::parse(&m.to_string()).unwrap();
        assert_eq!(back, m);
    }
}
