//! Exhaustive, bounded checks of the constructions against independent
//! oracles, reported as data.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::dyck::{dyck_words, partition_grammar, bounded_language, BracketAlphabet, DyckError, MdgOptions};
use crate::exec::Exec;
use crate::generator::{rule_close, rule_open, CsDecomposition, Decoding, GenError};
use crate::grammar::{show_word, Derivation, Enumerator, WeightedMcfg, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Truncated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Truncated => "truncated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub input: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub property: String,
    pub parameters: BTreeMap<String, String>,
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
    pub truncated: bool,
    pub status: Status,
    pub notes: Vec<String>,
}

impl Report {
    fn new(property: &str, parameters: &[(&str, String)]) -> Report {
        Report {
            property: property.to_owned(),
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            checked: 0,
            mismatches: Vec::new(),
            truncated: false,
            status: Status::Pass,
            notes: Vec::new(),
        }
    }

    fn mismatch(&mut self, input: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) {
        self.mismatches.push(Mismatch { input: input.into(), expected: expected.into(), actual: actual.into() });
    }

    fn finish(mut self) -> Report {
        self.status = if !self.mismatches.is_empty() {
            Status::Fail
        } else if self.truncated {
            Status::Truncated
        } else {
            Status::Pass
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(f, "{} [{}]: {} ({} checked)", self.property, params.join(", "), self.status, self.checked)?;
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        for m in &self.mismatches {
            writeln!(f, "  {}: expected {}, got {}", m.input, m.expected, m.actual)?;
        }
        Ok(())
    }
}

/// Knobs for the end-to-end checks. The mutation switches deliberately
/// break one ingredient so that tests can see the check fail.
#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    pub exec: Exec,
    /// Merge the first two cells of the generator partition.
    pub corrupt_partition: bool,
    /// Decode without the linked-component and re-encoding checks.
    pub unchecked_decoding: bool,
}

/// All words over `alphabet` of length at most `max_len`, shortest first.
pub fn words_up_to(alphabet: &BTreeSet<String>, max_len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |a| {
                    let mut v = w.clone();
                    v.push(a.clone());
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn check_theorem(g: &WeightedMcfg, max_word_len: usize, bracket_bound: usize) -> Result<Report, GenError> {
    check_theorem_with(g, max_word_len, bracket_bound, CheckOptions::default())
}

/// `⟦G⟧(w) = h(R ∩ mD)(w)` for every word of length at most `max_word_len`.
pub fn check_theorem_with(
    g: &WeightedMcfg,
    max_word_len: usize,
    bracket_bound: usize,
    opts: CheckOptions,
) -> Result<Report, GenError> {
    let mut report = Report::new(
        "weighted-cs-representation",
        &[("max_word_len", max_word_len.to_string()), ("bracket_bound", bracket_bound.to_string())],
    );
    let mut dec = CsDecomposition::new(g)?;
    if opts.corrupt_partition && dec.brackets.cells().len() >= 2 {
        dec = dec.with_brackets(dec.brackets.with_merged_cells(0, 1)?);
        report.notes.push("partition corrupted: first two cells merged".into());
    }
    if dec.empty {
        report.notes.push("the grammar generates the empty language".into());
    }
    let direct = g.semantics_table(max_word_len)?;
    let cs = dec.cs_table(max_word_len, bracket_bound, opts.exec)?;
    if direct.truncated {
        report.notes.push("direct semantics truncated: some word has infinitely many derivations".into());
    }
    match dec.required_bracket_bound(max_word_len)? {
        Some(b) if b > bracket_bound => {
            report.notes.push(format!("bracket bound {bracket_bound} is below the required {b}"));
        }
        Some(b) => report.notes.push(format!("required bracket bound {b}")),
        None => report.notes.push("no finite bracket bound covers all encodings".into()),
    }
    report.truncated = direct.truncated || cs.truncated;
    for w in words_up_to(g.terminals(), max_word_len) {
        let (a, b) = (direct.get(&w), cs.get(&w));
        report.checked += 1;
        if a != b {
            report.mismatch(show_word(&w), a.to_string(), b.to_string());
        }
    }
    Ok(report.finish())
}

/// The bijections between source derivations, `G_𝔹` words and derivations,
/// and `R ∩ mD`, up to a derivation height.
pub fn check_bijection(g: &WeightedMcfg, max_height: usize) -> Result<Report, GenError> {
    check_bijection_with(g, max_height, CheckOptions::default())
}

pub fn check_bijection_with(g: &WeightedMcfg, max_height: usize, opts: CheckOptions) -> Result<Report, GenError> {
    let mut report = Report::new("derivation-bracket-bijection", &[("max_height", max_height.to_string())]);
    let dec = CsDecomposition::new(g)?;
    let mode = if opts.unchecked_decoding { Decoding::Unchecked } else { Decoding::Checked };
    if opts.unchecked_decoding {
        report.notes.push("decoding consistency checks disabled".into());
    }
    let sep = &dec.pipeline.separation;
    let gb = dec.boolean_grammar();
    let ds = g.enumerate_derivations(g.initial(), max_height)?;
    let term = |d: &Derivation| d.term(g);
    let mut encodings: HashMap<Word, Derivation> = HashMap::new();
    let mut bound = 0;
    let mut yield_bound = 0;
    for d in &ds {
        report.checked += 1;
        let lifted = dec.pipeline.lift(d)?;
        if dec.pipeline.lower(&lifted) != *d {
            report.mismatch(term(d), "lift then lower is the identity", term(&dec.pipeline.lower(&lifted)));
        }
        let wb = sep.encode(&lifted)?;
        match sep.to_deriv(&wb) {
            Ok(back) if back == lifted => {}
            Ok(back) => report.mismatch(show_word(&wb), lifted.term(gb), back.term(gb)),
            Err(e) => report.mismatch(show_word(&wb), lifted.term(gb), e.to_string()),
        }
        let u = dec.to_brackets(&lifted)?;
        bound = bound.max(u.len());
        let y = g.yield_of(d)?.remove(0);
        yield_bound = yield_bound.max(y.len());
        let projected = dec.hom.apply(&u)?.word().clone();
        if projected != wb {
            report.mismatch(show_word(&u), show_word(&wb), show_word(&projected));
        }
        match dec.from_brackets_with(&u, mode) {
            Ok(back) if back == lifted => {}
            Ok(back) => report.mismatch(show_word(&u), lifted.term(gb), back.term(gb)),
            Err(e) => report.mismatch(show_word(&u), lifted.term(gb), e.to_string()),
        }
        if let Some(other) = encodings.insert(u.clone(), d.clone()) {
            report.mismatch(show_word(&u), format!("only {}", term(d)), format!("also {}", term(&other)));
        }
        for m in linked_mutants(&dec, &lifted, &u) {
            if let Ok(back) = dec.from_brackets_with(&m, mode) {
                report.mismatch(show_word(&m), "rejection", back.term(gb));
            }
        }
    }
    // {u ∈ R ∩ mD} against {toBrackets(d)} under the same length filters
    if bound > 0 {
        let members = dec.accepted_members(bound, yield_bound, None, opts.exec);
        let found: BTreeSet<Word> = members.iter().map(|(u, _)| dec.brackets.render(u)).collect();
        let start = gb.nt_id(gb.initial()).expect("initial exists");
        let costs: Vec<usize> = (0..gb.productions().len())
            .map(|r| {
                let c = &gb.production(r).comp;
                2 * c.fanout() + 2 * c.terminal_count()
            })
            .collect();
        let all = Enumerator::new(gb, Some((costs, bound))).run(start, bound / 4 + 1)?;
        let mut expected = BTreeSet::new();
        for d in &all {
            let u = dec.to_brackets(d)?;
            if u.len() <= bound && dec.hom.apply(&u)?.word().iter().filter(|s| g.terminals().contains(*s)).count() <= yield_bound {
                expected.insert(u);
            }
        }
        for u in found.difference(&expected) {
            report.mismatch(show_word(u), "an encoding of a derivation", "a member of R ∩ mD only");
        }
        for u in expected.difference(&found) {
            report.mismatch(show_word(u), "a member of R ∩ mD", "missing");
        }
        for u in &found {
            report.checked += 1;
            match dec.from_brackets_with(u, mode).map(|d| dec.to_brackets(&d)) {
                Ok(Ok(again)) if again == *u => {}
                Ok(Ok(again)) => report.mismatch(show_word(u), show_word(u), show_word(&again)),
                Ok(Err(e)) | Err(e) => report.mismatch(show_word(u), show_word(u), e.to_string()),
            }
        }
        report.notes.push(format!("{} words in R ∩ mD up to length {bound}", found.len()));
    }
    Ok(report.finish())
}

// Encodings with one non-initial component of a node re-labelled to the
// same component of a sibling rule: brackets stay well nested, but linked
// components now disagree.
fn linked_mutants(dec: &CsDecomposition, d: &Derivation, u: &[String]) -> Vec<Word> {
    let gb = dec.boolean_grammar();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    d.visit(&mut |n| {
        let p = gb.production(n.rule);
        if p.comp.fanout() < 2 || !seen.insert(n.rule) {
            return;
        }
        for &other in gb.rules_for(&p.lhs) {
            let q = gb.production(other);
            if other == n.rule {
                continue;
            }
            for j in 1..p.comp.fanout().min(q.comp.fanout()) {
                let (o, c) = (rule_open(&p.id, j), rule_close(&p.id, j));
                if let Some(at) = u.iter().position(|s| *s == o) {
                    let close = u.iter().skip(at).position(|s| *s == c).map(|k| k + at);
                    let mut m = u.to_vec();
                    m[at] = rule_open(&q.id, j);
                    if let Some(k) = close {
                        m[k] = rule_close(&q.id, j);
                    }
                    out.push(m);
                }
            }
        }
    });
    out
}

/// Membership against the relabelled bounded language of `G_𝔓`.
pub fn check_dyck_oracle(ba: &BracketAlphabet, r: usize, max_len: usize) -> Result<Report, DyckError> {
    let mut report =
        Report::new("dyck-membership-oracle", &[("rank", r.to_string()), ("max_len", max_len.to_string())]);
    let (g, relabel) = partition_grammar(ba, r, MdgOptions::default())?;
    let oracle: BTreeSet<Word> = bounded_language(&g, max_len)
        .iter()
        .map(|w| relabel.apply(w).expect("relabelling is total").word().clone())
        .collect();
    let decided: BTreeSet<Word> =
        dyck_words(ba, max_len).into_iter().filter(|w| ba.is_member(w).expect("alphabet symbols")).collect();
    report.checked = oracle.union(&decided).count();
    for w in decided.difference(&oracle) {
        report.mismatch(show_word(w), "not generated by the grammar", "accepted by the decision procedure");
    }
    for w in oracle.difference(&decided) {
        report.mismatch(show_word(w), "accepted by the decision procedure", "rejected");
    }
    report.notes.push(format!("{} members up to length {max_len}", decided.len()));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, word};

    const ABCD: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/abcd.mcfg"));

    #[test]
    fn words_are_listed_shortest_first() {
        let ab: BTreeSet<String> = word("a b").into_iter().collect();
        let ws = words_up_to(&ab, 2);
        assert_eq!(ws.len(), 7);
        assert_eq!(ws[0], Word::new());
        assert_eq!(ws[6], word("b b"));
    }

    #[test]
    fn cs_semantics_on_abcd() {
        let g = parse_grammar(ABCD).unwrap();
        let r = check_theorem_with(&g, 4, 44, CheckOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        assert!(r.passed(), "{r}");
        let bad = check_theorem_with(&g, 2, 32, CheckOptions { corrupt_partition: true, ..Default::default() }).unwrap();
        assert_eq!(bad.status, Status::Fail);
    }

    #[test]
    fn bijection_and_its_mutation() {
        let g = parse_grammar(ABCD).unwrap();
        let r = check_bijection(&g, 3).unwrap();
        assert!(r.passed(), "{r}");
        let r1 = check_bijection(&g, 1).unwrap();
        assert!(r1.passed());
        assert_eq!(r1.checked, 0);
        let bad = check_bijection_with(&g, 3, CheckOptions { unchecked_decoding: true, ..Default::default() }).unwrap();
        assert_eq!(bad.status, Status::Fail);
    }

    #[test]
    fn json_shape() {
        let g = parse_grammar(ABCD).unwrap();
        let r = check_bijection(&g, 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "pass");
        assert_eq!(v["checked"], 0);
    }
}
