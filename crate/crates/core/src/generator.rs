//! The weighted Chomsky-Schützenberger decomposition `⟦G⟧ = h(R ∩ mD)`:
//! generator alphabet and partition, `toBrackets`/`fromBrackets`, the
//! generator automaton and the projection homomorphism.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::algebra::{AlgebraError, Bimonoid, Weight};
use crate::automata::{Fsa, FsaError};
use crate::dyck::{is_dyck_brackets, Bracket, BracketAlphabet, DyckError, Membership};
use crate::exec::Exec;
use crate::grammar::{Derivation, Enumerator, GrammarError, Growth, Token, WeightedMcfg, Word};
use crate::homomorphism::{compose_alphabetic, HomError, Monomial, WeightedHom};
use crate::transform::{Pipeline, TransformError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("cannot decode bracket word at position {pos}: {msg}")]
    Decode { pos: usize, msg: String },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Dyck(#[from] DyckError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Fsa(#[from] FsaError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// How strictly `from_brackets` validates its input. `Unchecked` skips the
/// linked-component and re-encoding checks; it exists for mutation tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoding {
    Checked,
    Unchecked,
}

pub fn rule_open(id: &str, j: usize) -> String {
    format!("[{id}.{}", j + 1)
}

pub fn rule_close(id: &str, j: usize) -> String {
    format!("]{id}.{}", j + 1)
}

pub fn terminal_open(t: &str) -> String {
    format!("[t:{t}.1")
}

pub fn terminal_close(t: &str) -> String {
    format!("]t:{t}.1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Opener {
    Rule(usize, usize),
    Terminal(usize),
}

/// A weighted grammar together with everything needed to run it as
/// `h(R ∩ mD)`.
#[derive(Clone, Debug)]
pub struct CsDecomposition {
    pub source: WeightedMcfg,
    /// Preprocessing and weight separation; holds `G_𝔹` and `wts_G`.
    pub pipeline: Pipeline,
    pub brackets: BracketAlphabet,
    pub automaton: Fsa,
    /// `hom_{G_𝔹}`, erasing every bracket except opening terminal brackets.
    pub hom: WeightedHom,
    /// `h = wts_G ∘ hom_{G_𝔹}`.
    pub projection: WeightedHom,
    /// Set when the source generates nothing; the automaton then accepts nothing.
    pub empty: bool,
    openers: Vec<Opener>,
    rule_base: Vec<usize>,
    term_index: BTreeMap<String, usize>,
    // per automaton state, its single-symbol transitions
    moves: Vec<Vec<(Bracket, usize)>>,
    finals: Vec<bool>,
}

impl CsDecomposition {
    pub fn new(g: &WeightedMcfg) -> Result<Self, GenError> {
        let pipeline = Pipeline::new(g)?;
        CsDecomposition::from_pipeline(pipeline)
    }

    /// Rebuilds the derived parts around a replacement partition; the
    /// alphabet must keep its symbols. Used to check that a corrupted
    /// partition is noticed.
    pub fn with_brackets(&self, brackets: BracketAlphabet) -> Self {
        CsDecomposition { brackets, ..self.clone() }
    }

    fn from_pipeline(pipeline: Pipeline) -> Result<Self, GenError> {
        let gb = &pipeline.separation.boolean_grammar;
        let mut opening = Vec::new();
        let mut closing = Vec::new();
        let mut cells = Vec::new();
        let mut names = Vec::new();
        let mut openers = Vec::new();
        let mut rule_base = Vec::new();
        for (r, p) in gb.productions().iter().enumerate() {
            rule_base.push(opening.len());
            let mut cell = Vec::new();
            for j in 0..p.comp.fanout() {
                cell.push(opening.len());
                opening.push(rule_open(&p.id, j));
                closing.push(rule_close(&p.id, j));
                openers.push(Opener::Rule(r, j));
            }
            cells.push(cell);
            names.push(p.id.clone());
        }
        let terminals: Vec<String> = gb.terminals().iter().cloned().collect();
        let mut term_index = BTreeMap::new();
        for (k, t) in terminals.iter().enumerate() {
            term_index.insert(t.clone(), opening.len());
            cells.push(vec![opening.len()]);
            names.push(format!("t:{t}"));
            opening.push(terminal_open(t));
            closing.push(terminal_close(t));
            openers.push(Opener::Terminal(k));
        }
        let brackets = BracketAlphabet::new(opening, closing, cells, names)?;

        let map = brackets.symbols().into_iter().map(|s| {
            let image = match brackets.bracket(&s) {
                Some(Bracket::Open(i)) => match openers[i] {
                    Opener::Terminal(k) => vec![terminals[k].clone()],
                    Opener::Rule(..) => Vec::new(),
                },
                _ => Vec::new(),
            };
            (s, image)
        });
        let hom = WeightedHom::unweighted(brackets.symbols(), gb.terminals().clone(), map)?;
        let projection = compose_alphabetic(&pipeline.separation.weight_hom, &hom)?;

        let mut dec = CsDecomposition {
            empty: gb.rules_for(gb.initial()).is_empty(),
            source: pipeline.source.clone(),
            brackets,
            automaton: Fsa::new(vec!["start".into()], BTreeSet::new(), "start", &[], Vec::new())?,
            hom,
            projection,
            openers,
            rule_base,
            term_index,
            moves: Vec::new(),
            finals: Vec::new(),
            pipeline,
        };
        dec.automaton = dec.generator_automaton()?;
        dec.index_automaton();
        Ok(dec)
    }

    pub fn boolean_grammar(&self) -> &WeightedMcfg {
        &self.pipeline.separation.boolean_grammar
    }

    fn open_of_rule(&self, rule: usize, j: usize) -> Bracket {
        Bracket::Open(self.rule_base[rule] + j)
    }

    fn open_of_terminal(&self, t: &str) -> Bracket {
        Bracket::Open(self.term_index[t])
    }

    /// The generator automaton, determinized from an automaton over item
    /// positions: `start`, "k items of component j of ρ read", "inside the
    /// k-th terminal item", and `final`. Closing a component returns to every
    /// position right after a variable that the component can stand for; on
    /// well-nested words the matching bracket on the stack singles out the
    /// right one, since no rule repeats a right-hand side nonterminal.
    fn generator_automaton(&self) -> Result<Fsa, GenError> {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
        enum Item {
            Start,
            Pos(usize, usize, usize),
            Mid(usize, usize, usize),
            Final,
        }
        let gb = self.boolean_grammar();
        let comps = |r: usize| gb.production(r).comp.components();
        // sites to continue at after closing component j of a rule of `nt`
        let mut returns: BTreeMap<(usize, usize), BTreeSet<Item>> = BTreeMap::new();
        for r in 0..gb.productions().len() {
            for (j, comp) in comps(r).iter().enumerate() {
                for (k, item) in comp.iter().enumerate() {
                    if let Token::Var { arg, comp } = item {
                        let b = gb.rhs_ids(r)[*arg];
                        returns.entry((b, *comp)).or_default().insert(Item::Pos(r, j, k + 1));
                    }
                }
            }
        }
        let start_nt = gb.nt_id(gb.initial()).expect("initial exists");
        let step = |from: Item, b: Bracket| -> Vec<Item> {
            match from {
                Item::Start => match self.openers_of(b) {
                    Some(Opener::Rule(r, 0)) if gb.lhs_id(r) == start_nt => vec![Item::Pos(r, 0, 0)],
                    _ => vec![],
                },
                Item::Pos(r, j, k) => {
                    let comp = &comps(r)[j];
                    match (comp.get(k), b) {
                        (None, Bracket::Close(_)) if b == close_of(self.open_of_rule(r, j)) => {
                            let lhs = gb.lhs_id(r);
                            let mut out: Vec<Item> =
                                returns.get(&(lhs, j)).map(|s| s.iter().copied().collect()).unwrap_or_default();
                            if lhs == start_nt && j == 0 {
                                out.push(Item::Final);
                            }
                            out
                        }
                        (Some(Token::Terminal(t)), Bracket::Open(_)) if b == self.open_of_terminal(t) => {
                            vec![Item::Mid(r, j, k)]
                        }
                        (Some(Token::Var { arg, comp }), Bracket::Open(_)) => match self.openers_of(b) {
                            Some(Opener::Rule(r2, j2))
                                if j2 == *comp && gb.lhs_id(r2) == gb.rhs_ids(r)[*arg] =>
                            {
                                vec![Item::Pos(r2, j2, 0)]
                            }
                            _ => vec![],
                        },
                        _ => vec![],
                    }
                }
                Item::Mid(r, j, k) => match &comps(r)[j][k] {
                    Token::Terminal(t) if b == close_of(self.open_of_terminal(t)) => vec![Item::Pos(r, j, k + 1)],
                    _ => vec![],
                },
                Item::Final => vec![],
            }
        };
        let symbols: Vec<Bracket> = (0..self.brackets.opening().len())
            .flat_map(|i| [Bracket::Open(i), Bracket::Close(i)])
            .collect();
        let mut index: BTreeMap<BTreeSet<Item>, usize> = BTreeMap::new();
        let mut order: Vec<BTreeSet<Item>> = Vec::new();
        let init: BTreeSet<Item> = [Item::Start].into_iter().collect();
        index.insert(init.clone(), 0);
        order.push(init);
        let mut edges: Vec<(usize, Bracket, usize)> = Vec::new();
        let mut next = 0;
        while next < order.len() {
            let here = order[next].clone();
            for &b in &symbols {
                let to: BTreeSet<Item> = here.iter().flat_map(|&it| step(it, b)).collect();
                if to.is_empty() {
                    continue;
                }
                let id = *index.entry(to.clone()).or_insert_with(|| {
                    order.push(to);
                    order.len() - 1
                });
                edges.push((next, b, id));
            }
            next += 1;
        }
        let name = |i: usize| if i == 0 { "start".to_owned() } else { format!("q{i}") };
        let states: Vec<String> = (0..order.len()).map(name).collect();
        let finals: Vec<String> =
            order.iter().enumerate().filter(|(_, s)| s.contains(&Item::Final)).map(|(i, _)| name(i)).collect();
        let transitions = edges
            .into_iter()
            .map(|(p, b, q)| (name(p), vec![self.brackets.symbol(b).to_owned()], name(q)))
            .collect();
        Ok(Fsa::new(states, self.brackets.symbols(), "start", &finals, transitions)?)
    }

    fn openers_of(&self, b: Bracket) -> Option<Opener> {
        match b {
            Bracket::Open(i) => Some(self.openers[i]),
            Bracket::Close(_) => None,
        }
    }

    fn index_automaton(&mut self) {
        let m = &self.automaton;
        let mut moves = vec![Vec::new(); m.states().len()];
        for t in m.transitions() {
            if let [s] = t.label.as_slice() {
                if let Some(b) = self.brackets.bracket(s) {
                    moves[t.from].push((b, t.to));
                }
            }
        }
        for mv in moves.iter_mut() {
            mv.sort();
        }
        self.finals = (0..m.states().len()).map(|q| m.finals().contains(&q)).collect();
        self.moves = moves;
    }

    /// Bracket encoding of a `G_𝔹` derivation from the initial symbol.
    pub fn to_brackets(&self, d: &Derivation) -> Result<Word, GenError> {
        let gb = self.boolean_grammar();
        gb.check(d, Some(gb.initial()))?;
        let mut t = self.encode(d);
        Ok(self.brackets.render(&t.remove(0)))
    }

    /// Tuple-valued encoding of a `G_𝔹` derivation from any nonterminal.
    pub fn to_brackets_tuple(&self, d: &Derivation) -> Result<Vec<Word>, GenError> {
        self.boolean_grammar().check(d, None)?;
        Ok(self.encode(d).iter().map(|c| self.brackets.render(c)).collect())
    }

    /// Encoding of a derivation of the source grammar.
    pub fn encode_source(&self, d: &Derivation) -> Result<Word, GenError> {
        let lifted = self.pipeline.lift(d)?;
        self.to_brackets(&lifted)
    }

    fn encode(&self, d: &Derivation) -> Vec<Vec<Bracket>> {
        let p = self.boolean_grammar().production(d.rule);
        let kids: Vec<Vec<Vec<Bracket>>> = d.children.iter().map(|c| self.encode(c)).collect();
        p.comp
            .components()
            .iter()
            .enumerate()
            .map(|(j, comp)| {
                let open = self.open_of_rule(d.rule, j);
                let mut out = vec![open];
                for item in comp {
                    match item {
                        Token::Terminal(t) => {
                            let o = self.open_of_terminal(t);
                            out.push(o);
                            out.push(close_of(o));
                        }
                        Token::Var { arg, comp } => out.extend_from_slice(&kids[*arg][*comp]),
                    }
                }
                out.push(close_of(open));
                out
            })
            .collect()
    }

    pub fn from_brackets(&self, w: &[String]) -> Result<Derivation, GenError> {
        self.from_brackets_with(w, Decoding::Checked)
    }

    /// Decodes a word of `R ∩ mD` into its `G_𝔹` derivation.
    pub fn from_brackets_with(&self, w: &[String], mode: Decoding) -> Result<Derivation, GenError> {
        let b = self.brackets.tokenize(w)?;
        let err = |pos: usize, msg: String| GenError::Decode { pos, msg };
        if !is_dyck_brackets(&b) {
            return Err(err(0, "brackets are not well nested".into()));
        }
        if b.is_empty() {
            return Err(err(0, "empty word".into()));
        }
        let mut mate = vec![0; b.len()];
        let mut stack = Vec::new();
        for (i, x) in b.iter().enumerate() {
            match x {
                Bracket::Open(_) => stack.push(i),
                Bracket::Close(_) => {
                    let o = stack.pop().expect("Dyck word");
                    mate[o] = i;
                    mate[i] = o;
                }
            }
        }
        if mate[0] != b.len() - 1 {
            return Err(err(mate[0] + 1, "word is not a single bracketed component".into()));
        }
        let gb = self.boolean_grammar();
        let start = gb.nt_id(gb.initial()).expect("initial exists");
        let d = self.decode(&b, &mate, &[(0, b.len())], start, mode)?;
        if mode == Decoding::Checked {
            let again = self.encode(&d);
            if again[0] != b {
                return Err(err(0, "re-encoding the decoded derivation gives a different word".into()));
            }
        }
        Ok(d)
    }

    fn decode(
        &self,
        w: &[Bracket],
        mate: &[usize],
        segs: &[(usize, usize)],
        nt: usize,
        mode: Decoding,
    ) -> Result<Derivation, GenError> {
        let gb = self.boolean_grammar();
        let err = |pos: usize, msg: String| GenError::Decode { pos, msg };
        let show = |pos: usize| self.brackets.symbol(w[pos]).to_owned();
        let (s0, _) = segs[0];
        let rule = match w[s0] {
            Bracket::Open(i) => match self.openers[i] {
                Opener::Rule(r, 0) => r,
                _ => return Err(err(s0, format!("`{}` does not open a first rule component", show(s0)))),
            },
            Bracket::Close(_) => return Err(err(s0, format!("unexpected `{}`", show(s0)))),
        };
        let p = gb.production(rule);
        if mode == Decoding::Checked {
            if gb.lhs_id(rule) != nt {
                return Err(err(s0, format!("rule {} does not rewrite {}", p.id, gb.nonterminals()[nt].0)));
            }
            for (j, &(s, _)) in segs.iter().enumerate() {
                if w[s] != self.open_of_rule(rule, j) {
                    return Err(err(
                        s,
                        format!("linked component {} opens with `{}`, expected `{}`", j + 1, show(s), rule_open(&p.id, j)),
                    ));
                }
            }
        }
        if segs.len() != p.comp.fanout() {
            return Err(err(s0, format!("rule {} has {} components, found {}", p.id, p.comp.fanout(), segs.len())));
        }
        let mut kids: Vec<Vec<Option<(usize, usize)>>> =
            gb.rhs_ids(rule).iter().map(|&b| vec![None; gb.nonterminals()[b].1]).collect();
        for (comp, &(s, e)) in p.comp.components().iter().zip(segs) {
            let mut pos = s + 1;
            for item in comp {
                if pos >= e - 1 {
                    return Err(err(pos, format!("component of rule {} ends early", p.id)));
                }
                match item {
                    Token::Terminal(t) => {
                        let o = self.open_of_terminal(t);
                        if w[pos] != o || w[pos + 1] != close_of(o) {
                            return Err(err(pos, format!("expected terminal {t} of rule {}, found `{}`", p.id, show(pos))));
                        }
                        pos += 2;
                    }
                    Token::Var { arg, comp } => {
                        if !matches!(w[pos], Bracket::Open(_)) {
                            return Err(err(pos, format!("unexpected `{}`", show(pos))));
                        }
                        kids[*arg][*comp] = Some((pos, mate[pos] + 1));
                        pos = mate[pos] + 1;
                    }
                }
            }
            if pos != e - 1 {
                return Err(err(pos, format!("trailing symbols in a component of rule {}", p.id)));
            }
        }
        let children = kids
            .iter()
            .zip(gb.rhs_ids(rule))
            .map(|(segs, &b)| {
                let segs: Vec<(usize, usize)> = segs.iter().map(|s| s.expect("non-deleting rule")).collect();
                self.decode(w, mate, &segs, b, mode)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Derivation { rule, children })
    }

    /// Decodes a bracket word straight to a derivation of the source grammar.
    pub fn decode_source(&self, w: &[String]) -> Result<Derivation, GenError> {
        Ok(self.pipeline.lower(&self.from_brackets(w)?))
    }

    /// Length of the bracket encoding of a `G_𝔹` derivation.
    pub fn encoding_len(&self, d: &Derivation) -> usize {
        let gb = self.boolean_grammar();
        let mut n = 0;
        d.visit(&mut |x| n += node_cost(gb, x.rule));
        n
    }

    /// The longest encoding of a derivation whose word has length at most
    /// `max_len`; `None` if such derivations are unbounded in number.
    pub fn required_bracket_bound(&self, max_len: usize) -> Result<Option<usize>, GenError> {
        let prepared = &self.pipeline.prepared;
        let growth = Growth::analyze(prepared);
        if growth.pumpable() {
            return Ok(None);
        }
        let Some(start) = prepared.nt_id(prepared.initial()) else { return Ok(Some(0)) };
        let height = growth.height_bound(max_len).max(1);
        let ds = Enumerator::new(prepared, Some((prepared.terminal_costs(), max_len))).run(start, height)?;
        Ok(Some(ds.iter().map(|d| self.encoding_len(d)).max().unwrap_or(0)))
    }

    /// Words of `R ∩ mD` of length at most `max_bracket_len` whose projection
    /// has length at most `max_word_len` (or equals `target`), with their
    /// projections. Candidates come from the automaton, pruned by
    /// well-nestedness and projection; membership is decided afterwards.
    pub fn accepted_members(
        &self,
        max_bracket_len: usize,
        max_word_len: usize,
        target: Option<&[String]>,
        exec: Exec,
    ) -> Vec<(Vec<Bracket>, Monomial)> {
        let candidates = self.candidates(max_bracket_len, max_word_len, target);
        let verdicts = exec.map_init(&candidates, || Membership::new(&self.brackets), |m, u| m.check(u));
        candidates
            .into_iter()
            .zip(verdicts)
            .filter(|(_, ok)| *ok)
            .map(|(u, _)| {
                let proj = self.projection.apply(&self.brackets.render(&u)).expect("projection is total");
                (u, proj)
            })
            .collect()
    }

    fn candidates(&self, max_len: usize, max_word_len: usize, target: Option<&[String]>) -> Vec<Vec<Bracket>> {
        struct Search<'a> {
            d: &'a CsDecomposition,
            max_len: usize,
            max_word_len: usize,
            target: Option<&'a [String]>,
            word: Vec<Bracket>,
            stack: Vec<usize>,
            projected: usize,
            out: Vec<Vec<Bracket>>,
        }
        impl Search<'_> {
            fn go(&mut self, q: usize) {
                if self.d.finals[q] && self.stack.is_empty() && self.target.is_none_or(|t| t.len() == self.projected) {
                    self.out.push(self.word.clone());
                }
                for &(b, to) in &self.d.moves[q] {
                    if self.word.len() + 1 > self.max_len {
                        break;
                    }
                    let mut pushed = None;
                    let mut popped = None;
                    let mut emitted = false;
                    match b {
                        Bracket::Open(i) => {
                            if self.word.len() + 1 + self.stack.len() + 1 > self.max_len {
                                continue;
                            }
                            let image = self.d.projection.image_of(&self.d.brackets.opening()[i]);
                            if let Some(t) = image.and_then(|m| m.word().first()) {
                                let ok = match self.target {
                                    Some(tw) => tw.get(self.projected) == Some(t),
                                    None => self.projected < self.max_word_len,
                                };
                                if !ok {
                                    continue;
                                }
                                emitted = true;
                            }
                            pushed = Some(i);
                        }
                        Bracket::Close(i) => {
                            if self.stack.last() != Some(&i) {
                                continue;
                            }
                            popped = Some(i);
                        }
                    }
                    if let Some(i) = pushed {
                        self.stack.push(i);
                    }
                    if popped.is_some() {
                        self.stack.pop();
                    }
                    if emitted {
                        self.projected += 1;
                    }
                    self.word.push(b);
                    self.go(to);
                    self.word.pop();
                    if emitted {
                        self.projected -= 1;
                    }
                    if let Some(i) = popped {
                        self.stack.push(i);
                    }
                    if pushed.is_some() {
                        self.stack.pop();
                    }
                }
            }
        }
        let mut s = Search {
            d: self,
            max_len,
            max_word_len,
            target,
            word: Vec::new(),
            stack: Vec::new(),
            projected: 0,
            out: Vec::new(),
        };
        s.go(self.automaton.initial());
        s.out
    }

    /// `h(R ∩ mD)(w)` restricted to bracket words of length at most
    /// `max_bracket_len`.
    pub fn weighted_cs_semantics(&self, w: &[String], max_bracket_len: usize, exec: Exec) -> Result<CsResult, GenError> {
        let members = self.accepted_members(max_bracket_len, w.len(), Some(w), exec);
        let weights: Vec<Weight> = members.iter().map(|(_, m)| m.weight().clone()).collect();
        let truncated = match self.required_bracket_bound(w.len())? {
            Some(b) => b > max_bracket_len,
            None => true,
        };
        Ok(CsResult {
            weight: Weight::sum(self.source.algebra(), &weights)?,
            encodings: members.len(),
            truncated,
        })
    }

    /// `h(R ∩ mD)` on every word of length at most `max_word_len`, from one
    /// enumeration of bracket words.
    pub fn cs_table(&self, max_word_len: usize, max_bracket_len: usize, exec: Exec) -> Result<CsTable, GenError> {
        let alg = self.source.algebra().clone();
        let mut weights: BTreeMap<Word, Weight> = BTreeMap::new();
        let members = self.accepted_members(max_bracket_len, max_word_len, None, exec);
        for (_, m) in &members {
            if m.is_zero() {
                continue;
            }
            let e = weights.entry(m.word().clone()).or_insert_with(|| Weight::zero(&alg));
            *e = e.plus(m.weight())?;
        }
        let truncated = match self.required_bracket_bound(max_word_len)? {
            Some(b) => b > max_bracket_len,
            None => true,
        };
        Ok(CsTable { algebra: alg, weights, encodings: members.len(), truncated })
    }
}

fn close_of(b: Bracket) -> Bracket {
    match b {
        Bracket::Open(i) => Bracket::Close(i),
        c => c,
    }
}

// brackets contributed by one node: its own pair per component and a pair per
// terminal occurrence, markers included
fn node_cost(gb: &WeightedMcfg, rule: usize) -> usize {
    let c = &gb.production(rule).comp;
    2 * c.fanout() + 2 * c.terminal_count()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsResult {
    pub weight: Weight,
    pub encodings: usize,
    /// Some encoding of the word may be longer than the bracket bound.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct CsTable {
    pub algebra: Bimonoid,
    pub weights: BTreeMap<Word, Weight>,
    pub encodings: usize,
    pub truncated: bool,
}

impl CsTable {
    pub fn get(&self, w: &[String]) -> Weight {
        self.weights.get(w).cloned().unwrap_or_else(|| Weight::zero(&self.algebra))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, word};

    const ABCD: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/abcd.mcfg"));

    fn abcd() -> CsDecomposition {
        CsDecomposition::new(&parse_grammar(ABCD).unwrap()).unwrap()
    }

    #[test]
    fn one_rule_grammar() {
        let g = parse_grammar("algebra boolean\nstart S\nrule p: S -> ['a']()\n").unwrap();
        let d = CsDecomposition::new(&g).unwrap();
        let u = d.to_brackets(&Derivation::leaf(0)).unwrap();
        assert_eq!(u, word("[p.1 [t:p^1.1 ]t:p^1.1 [t:a.1 ]t:a.1 ]p.1"));
        assert_eq!(d.from_brackets(&u).unwrap(), Derivation::leaf(0));
        assert!(d.automaton.accepts(&u));
    }

    #[test]
    fn alphabet_shape() {
        let d = abcd();
        let sizes: Vec<usize> = d.brackets.cells().iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 4);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 1 + 13);
        assert_eq!(d.brackets.dimension(), 2);
        assert!(d.automaton.is_deterministic());
        let m = d.projection.image_of("[t:r2^1.1").unwrap();
        assert_eq!(m.weight().to_string(), "1/2");
        assert!(m.word().is_empty());
    }

    #[test]
    fn projection_and_round_trip() {
        let d = abcd();
        let gb = d.boolean_grammar();
        for der in gb.enumerate_derivations(gb.initial(), 4).unwrap() {
            let u = d.to_brackets(&der).unwrap();
            let y = gb.yield_of(&der).unwrap().remove(0);
            assert_eq!(d.hom.apply(&u).unwrap().word(), &y);
            assert!(d.automaton.accepts(&u));
            assert!(d.brackets.is_member(&u).unwrap());
            assert_eq!(d.from_brackets(&u).unwrap(), der);
        }
    }

    #[test]
    fn cs_semantics_of_abcd() {
        let d = abcd();
        let r = d.weighted_cs_semantics(&word("a c"), 40, Exec::Sequential).unwrap();
        assert_eq!(r.weight.to_string(), "1/6");
        assert!(!r.truncated);
        let r = d.weighted_cs_semantics(&[], 40, Exec::Sequential).unwrap();
        assert_eq!(r.weight.to_string(), "1/3");
        let r = d.weighted_cs_semantics(&word("b a"), 40, Exec::Sequential).unwrap();
        assert!(r.weight.is_zero());
    }

    #[test]
    fn mixing_linked_components_is_rejected() {
        let d = abcd();
        let gb = d.boolean_grammar();
        let der = gb.enumerate_derivations(gb.initial(), 3).unwrap().into_iter().find(|x| x.size() == 4).unwrap();
        let u = d.to_brackets(&der).unwrap();
        // swap the second component of the A node to the other A rule
        let a_rule = &gb.production(der.children[0].rule).id;
        let other = gb
            .rules_for(&gb.production(der.children[0].rule).lhs)
            .iter()
            .map(|&r| gb.production(r).id.clone())
            .find(|id| id != a_rule)
            .unwrap();
        let mutated: Word = u
            .iter()
            .map(|s| {
                if *s == rule_open(a_rule, 1) {
                    rule_open(&other, 1)
                } else if *s == rule_close(a_rule, 1) {
                    rule_close(&other, 1)
                } else {
                    s.clone()
                }
            })
            .collect();
        assert!(d.from_brackets(&mutated).is_err());
        assert_eq!(d.from_brackets_with(&mutated, Decoding::Unchecked).unwrap(), der);
    }
}
