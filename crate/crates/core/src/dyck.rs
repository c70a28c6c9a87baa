//! Dyck and congruence multiple Dyck languages: `split`, the recursive
//! membership test, the multiple Dyck grammar `G_Δ` and its relabelled
//! variant `G_𝔓` for a given partition.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::algebra::{Bimonoid, Weight};
use crate::grammar::{show_word, GrammarError, RuleSpec, Token, WeightedMcfg, Word};
use crate::homomorphism::WeightedHom;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DyckError {
    #[error("symbol `{0}` is not in the bracket alphabet")]
    Foreign(String),
    #[error("`{0}` is not a Dyck word")]
    NotDyck(String),
    #[error("invalid bracket alphabet: {0}")]
    Alphabet(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("rank {r} is smaller than the maximal sort {k}")]
    RankTooSmall { r: usize, k: usize },
    #[error("rank {r} and maximal sort {k} exceed the desk-scale limit of 2; pass the override to proceed")]
    Guard { r: usize, k: usize },
    #[error("more than {0} rules; raise the rule cap to proceed")]
    TooManyRules(usize),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bracket {
    Open(usize),
    Close(usize),
}

/// Opening symbols `Σ`, their closing partners `Σ̄`, and a partition of `Σ`
/// into cells of linked symbols. Each cell lists its symbols in a fixed
/// enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketAlphabet {
    opening: Vec<String>,
    closing: Vec<String>,
    cells: Vec<Vec<usize>>,
    cell_names: Vec<String>,
    cell_of: Vec<usize>,
    lookup: HashMap<String, Bracket>,
}

impl BracketAlphabet {
    /// `cells` holds indices into `opening`; `closing[i]` is the partner of
    /// `opening[i]`.
    pub fn new(
        opening: Vec<String>,
        closing: Vec<String>,
        cells: Vec<Vec<usize>>,
        cell_names: Vec<String>,
    ) -> Result<Self, DyckError> {
        let bad = |msg: String| Err(DyckError::Alphabet(msg));
        if opening.len() != closing.len() {
            return bad("opening and closing symbols differ in number".into());
        }
        if cells.len() != cell_names.len() {
            return bad("every cell needs a name".into());
        }
        let mut lookup = HashMap::new();
        for (i, (o, c)) in opening.iter().zip(&closing).enumerate() {
            if o.is_empty() || c.is_empty() || o.contains(char::is_whitespace) || c.contains(char::is_whitespace) {
                return bad(format!("bad symbol name `{o}`/`{c}`"));
            }
            if lookup.insert(o.clone(), Bracket::Open(i)).is_some() {
                return bad(format!("symbol `{o}` occurs twice"));
            }
            if lookup.insert(c.clone(), Bracket::Close(i)).is_some() {
                return bad(format!("symbol `{c}` occurs twice"));
            }
        }
        let mut cell_of = vec![usize::MAX; opening.len()];
        for (k, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return bad(format!("cell {} is empty", cell_names[k]));
            }
            for &i in cell {
                if i >= opening.len() {
                    return bad(format!("cell {} refers to an unknown symbol", cell_names[k]));
                }
                if cell_of[i] != usize::MAX {
                    return bad(format!("symbol `{}` lies in two cells", opening[i]));
                }
                cell_of[i] = k;
            }
        }
        if let Some(i) = cell_of.iter().position(|&c| c == usize::MAX) {
            return bad(format!("symbol `{}` lies in no cell", opening[i]));
        }
        Ok(BracketAlphabet { opening, closing, cells, cell_names, cell_of, lookup })
    }

    /// Closing symbols are the opening names prefixed with `~`.
    pub fn with_default_closers(opening: Vec<String>, cells: Vec<Vec<usize>>) -> Result<Self, DyckError> {
        let closing = opening.iter().map(|o| format!("~{o}")).collect();
        let names = (1..=cells.len()).map(|i| format!("p{i}")).collect();
        BracketAlphabet::new(opening, closing, cells, names)
    }

    /// Every symbol in its own cell.
    pub fn singletons(opening: Vec<String>, closing: Option<Vec<String>>) -> Result<Self, DyckError> {
        let n = opening.len();
        let closing = closing.unwrap_or_else(|| opening.iter().map(|o| format!("~{o}")).collect());
        let names = (1..=n).map(|i| format!("p{i}")).collect();
        BracketAlphabet::new(opening, closing, (0..n).map(|i| vec![i]).collect(), names)
    }

    /// Parses a partition file:
    ///
    /// ```text
    /// symbols ( < [ [[
    /// close ) > ] ]]      # optional; default closers are `~(` etc.
    /// cell ( <
    /// cell [ [[
    /// ```
    pub fn parse(text: &str) -> Result<Self, DyckError> {
        let mut opening: Option<Vec<String>> = None;
        let mut closing: Option<Vec<String>> = None;
        let mut cells: Vec<(usize, Vec<String>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = match raw.find(" #") {
                Some(i) => &raw[..i],
                None if raw.trim_start().starts_with('#') => "",
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let kw = words.next().expect("non-empty line");
            let rest: Vec<String> = words.map(str::to_owned).collect();
            match kw {
                "symbols" => opening = Some(rest),
                "close" => closing = Some(rest),
                "cell" => cells.push((n + 1, rest)),
                other => return Err(DyckError::Syntax { line: n + 1, msg: format!("unknown directive `{other}`") }),
            }
        }
        let opening = opening.ok_or(DyckError::Syntax { line: 0, msg: "missing `symbols` line".into() })?;
        let closing = closing.unwrap_or_else(|| opening.iter().map(|o| format!("~{o}")).collect());
        let cells = cells
            .into_iter()
            .map(|(line, syms)| {
                syms.iter()
                    .map(|s| {
                        opening.iter().position(|o| o == s).ok_or_else(|| DyckError::Syntax {
                            line,
                            msg: format!("`{s}` is not a declared symbol"),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let names = (1..=cells.len()).map(|i| format!("p{i}")).collect();
        BracketAlphabet::new(opening, closing, cells, names)
    }

    pub fn opening(&self) -> &[String] {
        &self.opening
    }

    pub fn closing(&self) -> &[String] {
        &self.closing
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_names(&self) -> &[String] {
        &self.cell_names
    }

    pub fn cell_of(&self, opening: usize) -> usize {
        self.cell_of[opening]
    }

    pub fn dimension(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn symbol(&self, b: Bracket) -> &str {
        match b {
            Bracket::Open(i) => &self.opening[i],
            Bracket::Close(i) => &self.closing[i],
        }
    }

    pub fn bracket(&self, symbol: &str) -> Option<Bracket> {
        self.lookup.get(symbol).copied()
    }

    /// All symbols of `Σ ∪ Σ̄`.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.opening.iter().chain(&self.closing).cloned().collect()
    }

    pub fn tokenize(&self, w: &[String]) -> Result<Vec<Bracket>, DyckError> {
        w.iter().map(|s| self.bracket(s).ok_or_else(|| DyckError::Foreign(s.clone()))).collect()
    }

    pub fn render(&self, w: &[Bracket]) -> Word {
        w.iter().map(|&b| self.symbol(b).to_owned()).collect()
    }

    /// A copy with two cells merged into one, used by mutation tests.
    pub fn with_merged_cells(&self, a: usize, b: usize) -> Result<Self, DyckError> {
        let (lo, hi) = (a.min(b), a.max(b));
        let mut cells = self.cells.clone();
        let moved = cells.remove(hi);
        cells[lo].extend(moved);
        let mut names = self.cell_names.clone();
        let gone = names.remove(hi);
        names[lo] = format!("{}+{gone}", names[lo]);
        BracketAlphabet::new(self.opening.clone(), self.closing.clone(), cells, names)
    }

    pub fn is_dyck(&self, w: &[String]) -> Result<bool, DyckError> {
        Ok(is_dyck_brackets(&self.tokenize(w)?))
    }

    /// Shortest non-empty Dyck factors of a Dyck word.
    pub fn split(&self, w: &[String]) -> Result<Vec<Word>, DyckError> {
        let b = self.tokenize(w)?;
        if !is_dyck_brackets(&b) {
            return Err(DyckError::NotDyck(show_word(w)));
        }
        Ok(split_brackets(&b).into_iter().map(|(s, e)| w[s..e].to_vec()).collect())
    }

    /// Membership in `mD_c(Σ, 𝔓)`.
    pub fn is_member(&self, w: &[String]) -> Result<bool, DyckError> {
        Ok(Membership::new(self).check(&self.tokenize(w)?))
    }

    /// Membership with a line-by-line log of the recursive calls.
    pub fn is_member_traced(&self, w: &[String]) -> Result<(bool, Trace), DyckError> {
        let b = self.tokenize(w)?;
        let mut trace = Trace { events: Vec::new() };
        let result = traced(self, &b, 0, &mut trace);
        Ok((result, trace))
    }
}

impl fmt::Display for BracketAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "symbols {}", self.opening.join(" "))?;
        writeln!(f, "close {}", self.closing.join(" "))?;
        for cell in &self.cells {
            let syms: Vec<&str> = cell.iter().map(|&i| self.opening[i].as_str()).collect();
            writeln!(f, "cell {}", syms.join(" "))?;
        }
        Ok(())
    }
}

pub(crate) fn is_dyck_brackets(w: &[Bracket]) -> bool {
    let mut stack = Vec::new();
    for &b in w {
        match b {
            Bracket::Open(i) => stack.push(i),
            Bracket::Close(i) => {
                if stack.pop() != Some(i) {
                    return false;
                }
            }
        }
    }
    stack.is_empty()
}

/// `(start, end)` ranges of the shortest non-empty Dyck factors; the input
/// must be a Dyck word.
pub(crate) fn split_brackets(w: &[Bracket]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, b) in w.iter().enumerate() {
        match b {
            Bracket::Open(_) => depth += 1,
            Bracket::Close(_) => {
                depth -= 1;
                if depth == 0 {
                    out.push((start, i + 1));
                    start = i + 1;
                }
            }
        }
    }
    out
}

/// Set partitions of the factor indices whose blocks are exactly the cells:
/// each block holds one factor per symbol of one cell. Blocks are listed by
/// least element, partners in lexicographic order.
fn cell_partitions(ba: &BracketAlphabet, sigma: &[usize]) -> Vec<Vec<Vec<usize>>> {
    // quick reject: within a cell every symbol must occur equally often
    let mut counts = vec![0usize; ba.opening.len()];
    for &s in sigma {
        counts[s] += 1;
    }
    for cell in &ba.cells {
        let c = counts[cell[0]];
        if cell.iter().any(|&s| counts[s] != c) {
            return Vec::new();
        }
    }
    fn go(
        ba: &BracketAlphabet,
        sigma: &[usize],
        used: &mut Vec<bool>,
        blocks: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        let Some(first) = used.iter().position(|u| !u) else {
            out.push(blocks.clone());
            return;
        };
        let cell = &ba.cells[ba.cell_of[sigma[first]]];
        let others: Vec<usize> = cell.iter().copied().filter(|&s| s != sigma[first]).collect();
        used[first] = true;
        let mut chosen = vec![first];
        pick(ba, sigma, used, &others, &mut chosen, blocks, out);
        used[first] = false;
    }
    fn pick(
        ba: &BracketAlphabet,
        sigma: &[usize],
        used: &mut Vec<bool>,
        others: &[usize],
        chosen: &mut Vec<usize>,
        blocks: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if chosen.len() == others.len() + 1 {
            let mut block = chosen.clone();
            block.sort_unstable();
            blocks.push(block);
            go(ba, sigma, used, blocks, out);
            blocks.pop();
            return;
        }
        // candidates for every remaining symbol, smallest combined choice first
        let want = others[chosen.len() - 1];
        for i in chosen[0] + 1..sigma.len() {
            if !used[i] && sigma[i] == want {
                used[i] = true;
                chosen.push(i);
                pick(ba, sigma, used, others, chosen, blocks, out);
                chosen.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(ba, sigma, &mut vec![false; sigma.len()], &mut Vec::new(), &mut out);
    for p in out.iter_mut() {
        p.sort();
    }
    out.sort();
    out.dedup();
    out
}

/// Memoized membership; one instance may check many words.
pub struct Membership<'a> {
    ba: &'a BracketAlphabet,
    memo: HashMap<Vec<Bracket>, bool>,
    counts: Vec<usize>,
}

impl<'a> Membership<'a> {
    pub fn new(ba: &'a BracketAlphabet) -> Self {
        Membership { ba, memo: HashMap::new(), counts: vec![0; ba.opening.len()] }
    }

    pub fn check(&mut self, w: &[Bracket]) -> bool {
        if w.is_empty() {
            return true;
        }
        if !is_dyck_brackets(w) || !self.balanced(w) {
            return false;
        }
        if let Some(&hit) = self.memo.get(w) {
            return hit;
        }
        let pieces = split_brackets(w);
        let sigma: Vec<usize> = pieces
            .iter()
            .map(|&(s, _)| match w[s] {
                Bracket::Open(i) => i,
                Bracket::Close(_) => unreachable!("Dyck factors start with an opening symbol"),
            })
            .collect();
        let result = cell_partitions(self.ba, &sigma).iter().any(|partition| {
            partition.iter().all(|block| {
                let inner: Vec<Bracket> = block.iter().flat_map(|&i| w[pieces[i].0 + 1..pieces[i].1 - 1].iter().copied()).collect();
                self.check(&inner)
            })
        });
        self.memo.insert(w.to_vec(), result);
        result
    }

    // Every member uses the symbols of a cell equally often.
    fn balanced(&mut self, w: &[Bracket]) -> bool {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for b in w {
            if let Bracket::Open(i) = b {
                self.counts[*i] += 1;
            }
        }
        self.ba.cells.iter().all(|cell| cell.iter().all(|&s| self.counts[s] == self.counts[cell[0]]))
    }

    pub fn check_word(&mut self, w: &[String]) -> Result<bool, DyckError> {
        let b = self.ba.tokenize(w)?;
        Ok(self.check(&b))
    }
}

/// One step of a traced run, at a recursion depth, tagged with the
/// algorithm line it reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub depth: usize,
    pub line: Option<u8>,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            let indent = "    ".repeat(e.depth);
            match e.line {
                Some(l) => writeln!(f, "{indent}l.{l}: {}", e.text)?,
                None => writeln!(f, "{indent}{}", e.text)?,
            }
        }
        Ok(())
    }
}

fn show(ba: &BracketAlphabet, w: &[Bracket]) -> String {
    show_word(&ba.render(w))
}

fn show_set(blocks: &[Vec<usize>]) -> String {
    let inner: Vec<String> = blocks
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("{{{}}}", inner.join(", "))
}

// Unmemoized run that evaluates every block of a partition, so the log
// shows each recursive call.
fn traced(ba: &BracketAlphabet, w: &[Bracket], depth: usize, trace: &mut Trace) -> bool {
    let mut emit = |depth: usize, line: Option<u8>, text: String| trace.events.push(TraceEvent { depth, line, text });
    if depth == 0 {
        emit(0, None, format!("isMember({})", show(ba, w)));
    }
    if w.is_empty() {
        emit(depth, Some(2), "return 1".into());
        return true;
    }
    if !is_dyck_brackets(w) {
        emit(depth, Some(3), "return 0".into());
        return false;
    }
    let pieces = split_brackets(w);
    let sigma: Vec<usize> = pieces
        .iter()
        .map(|&(s, _)| match w[s] {
            Bracket::Open(i) => i,
            Bracket::Close(_) => unreachable!(),
        })
        .collect();
    let sig: Vec<String> = sigma.iter().enumerate().map(|(i, &s)| format!("σ{} = {}", i + 1, ba.opening[s])).collect();
    let us: Vec<String> = pieces
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| format!("u{} = {}", i + 1, show(ba, &w[s + 1..e - 1])))
        .collect();
    emit(depth, Some(4), format!("{}, {}", sig.join(", "), us.join(", ")));
    let partitions = cell_partitions(ba, &sigma);
    let all: Vec<String> = partitions.iter().map(|p| show_set(p)).collect();
    emit(depth, Some(5), if all.is_empty() { "I = ∅".into() } else { format!("I = {{{}}}", all.join(", ")) });
    for partition in &partitions {
        trace.events.push(TraceEvent { depth, line: Some(6), text: format!("I = {}", show_set(partition)) });
        let mut b = true;
        for block in partition {
            let idx: Vec<String> = block.iter().enumerate().map(|(n, i)| format!("i{} = {}", n + 1, i + 1)).collect();
            trace.events.push(TraceEvent { depth, line: Some(8), text: format!("k = {}, {}", block.len(), idx.join(", ")) });
            let inner: Vec<Bracket> =
                block.iter().flat_map(|&i| w[pieces[i].0 + 1..pieces[i].1 - 1].iter().copied()).collect();
            let before = u8::from(b);
            trace.events.push(TraceEvent {
                depth,
                line: Some(9),
                text: format!("b = {before} · isMember({})", show(ba, &inner)),
            });
            let r = traced(ba, &inner, depth + 1, trace);
            b = b && r;
            trace.events.push(TraceEvent {
                depth,
                line: Some(9),
                text: format!("b = {before} · {} = {}", u8::from(r), u8::from(b)),
            });
        }
        if b {
            trace.events.push(TraceEvent { depth, line: Some(11), text: "return 1".into() });
            return true;
        }
    }
    trace.events.push(TraceEvent { depth, line: Some(13), text: "return 0".into() });
    false
}

/// All Dyck words over `Σ ∪ Σ̄` of length at most `max_len`, sorted.
pub fn dyck_words(ba: &BracketAlphabet, max_len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = dyck_bracket_words(ba, max_len).iter().map(|w| ba.render(w)).collect();
    out.sort();
    out
}

/// Same as `dyck_words`, without rendering, by depth-first extension with a
/// stack.
pub fn dyck_bracket_words(ba: &BracketAlphabet, max_len: usize) -> Vec<Vec<Bracket>> {
    fn go(n: usize, max_len: usize, cur: &mut Vec<Bracket>, stack: &mut Vec<usize>, out: &mut Vec<Vec<Bracket>>) {
        if stack.is_empty() {
            out.push(cur.clone());
        }
        if let Some(&top) = stack.last() {
            cur.push(Bracket::Close(top));
            stack.pop();
            go(n, max_len, cur, stack, out);
            stack.push(top);
            cur.pop();
        }
        if max_len - cur.len() >= stack.len() + 2 {
            for i in 0..n {
                cur.push(Bracket::Open(i));
                stack.push(i);
                go(n, max_len, cur, stack, out);
                stack.pop();
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(ba.opening.len(), max_len, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Limits for `multiple_dyck_grammar`.
#[derive(Clone, Copy, Debug)]
pub struct MdgOptions {
    pub max_rules: usize,
    /// Lift the `r, k ≤ 2` desk-scale guard.
    pub allow_large: bool,
}

impl Default for MdgOptions {
    fn default() -> Self {
        MdgOptions { max_rules: 10_000, allow_large: false }
    }
}

pub fn open_name(delta: &str, i: usize) -> String {
    format!("{delta}[{}]", i + 1)
}

pub fn close_name(delta: &str, i: usize) -> String {
    format!("~{delta}[{}]", i + 1)
}

fn nt(s: usize) -> String {
    format!("A{s}")
}

/// The multiple Dyck grammar `G_Δ` over a sorted alphabet, with rank bound `r`.
///
/// Besides the three rule families, nullary rules `A_s → [ε, …, ε]()` are
/// included; without them no derivation would terminate.
pub fn multiple_dyck_grammar(delta: &[(String, usize)], r: usize, opts: MdgOptions) -> Result<WeightedMcfg, DyckError> {
    let k = delta.iter().map(|(_, s)| *s).max().unwrap_or(0).max(1);
    if let Some((d, _)) = delta.iter().find(|(_, s)| *s == 0) {
        return Err(DyckError::Alphabet(format!("symbol `{d}` has sort 0")));
    }
    if r < k && !delta.is_empty() {
        return Err(DyckError::RankTooSmall { r, k });
    }
    if (r > 2 || k > 2) && !opts.allow_large {
        return Err(DyckError::Guard { r, k });
    }
    let one = Weight::one(&Bimonoid::Boolean);
    let mut rules: Vec<RuleSpec> = Vec::new();
    let mut seen: HashSet<(String, Vec<Vec<Token>>, Vec<String>)> = HashSet::new();
    let mut push = |rules: &mut Vec<RuleSpec>, id: String, lhs: String, components: Vec<Vec<Token>>, rhs: Vec<String>| {
        if seen.insert((lhs.clone(), components.clone(), rhs.clone())) {
            rules.push(RuleSpec { id, lhs, components, rhs, weight: one.clone() });
        }
    };

    // (i) linear, non-deleting, terminal-free functions
    let mut n_i = 0;
    for rank in 0..=r {
        for arg_sorts in sort_tuples(rank, k) {
            let vars: Vec<Token> = arg_sorts
                .iter()
                .enumerate()
                .flat_map(|(a, &s)| (0..s).map(move |c| Token::Var { arg: a, comp: c }))
                .collect();
            let rhs: Vec<String> = arg_sorts.iter().map(|&s| nt(s)).collect();
            for s in 1..=k {
                for perm in permutations(&vars) {
                    for cuts in compositions(perm.len(), s) {
                        let mut comps = Vec::with_capacity(s);
                        let mut at = 0;
                        for len in cuts {
                            comps.push(perm[at..at + len].to_vec());
                            at += len;
                        }
                        n_i += 1;
                        push(&mut rules, format!("i{n_i}"), nt(s), comps, rhs.clone());
                        if rules.len() > opts.max_rules {
                            return Err(DyckError::TooManyRules(opts.max_rules));
                        }
                    }
                }
            }
        }
    }
    // (ii) one bracketing rule per symbol
    for (d, s) in delta {
        let comps = (0..*s)
            .map(|i| {
                vec![
                    Token::Terminal(open_name(d, i)),
                    Token::Var { arg: 0, comp: i },
                    Token::Terminal(close_name(d, i)),
                ]
            })
            .collect();
        push(&mut rules, format!("ii:{d}"), nt(*s), comps, vec![nt(*s)]);
    }
    // (iii) padding with sort-1 bracket pairs
    let unary: Vec<&str> = delta.iter().filter(|(_, s)| *s == 1).map(|(d, _)| d.as_str()).collect();
    for s in 1..=k {
        let mut choices: Vec<Vec<Vec<Token>>> = vec![Vec::new()];
        for i in 0..s {
            let x = Token::Var { arg: 0, comp: i };
            let mut options = vec![vec![x.clone()]];
            for d in &unary {
                let pair = [Token::Terminal(open_name(d, 0)), Token::Terminal(close_name(d, 0))];
                options.push(vec![x.clone(), pair[0].clone(), pair[1].clone()]);
                options.push(vec![pair[0].clone(), pair[1].clone(), x.clone()]);
            }
            choices = choices
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |o| {
                        let mut p = prefix.clone();
                        p.push(o.clone());
                        p
                    })
                })
                .collect();
        }
        for (n, comps) in choices.into_iter().enumerate() {
            push(&mut rules, format!("iii:{s}.{}", n + 1), nt(s), comps, vec![nt(s)]);
            if rules.len() > opts.max_rules {
                return Err(DyckError::TooManyRules(opts.max_rules));
            }
        }
    }
    let terminals: Vec<String> = delta
        .iter()
        .flat_map(|(d, s)| (0..*s).flat_map(move |i| [open_name(d, i), close_name(d, i)]))
        .collect();
    let sorts: Vec<(String, usize)> = (1..=k).map(|s| (nt(s), s)).collect();
    Ok(WeightedMcfg::new(Bimonoid::Boolean, &nt(1), rules, &sorts, &terminals)?)
}

fn sort_tuples(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=k).map(move |s| {
                    let mut t = t.clone();
                    t.push(s);
                    t
                })
            })
            .collect();
    }
    out
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Ordered ways to write `n` as a sum of `parts` non-negative numbers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// `G_𝔓` for a partition: `G_Δ` over the cells (sorted by size) together with
/// the relabelling that sends `𝔭^{[i]}` to the i-th symbol of cell `𝔭`.
pub fn partition_grammar(
    ba: &BracketAlphabet,
    r: usize,
    opts: MdgOptions,
) -> Result<(WeightedMcfg, WeightedHom), DyckError> {
    if r < ba.dimension() {
        return Err(DyckError::RankTooSmall { r, k: ba.dimension() });
    }
    let delta: Vec<(String, usize)> =
        ba.cell_names.iter().zip(&ba.cells).map(|(n, c)| (n.clone(), c.len())).collect();
    let g = multiple_dyck_grammar(&delta, r, opts)?;
    let mut map = Vec::new();
    for (name, cell) in ba.cell_names.iter().zip(&ba.cells) {
        for (i, &sym) in cell.iter().enumerate() {
            map.push((open_name(name, i), vec![ba.opening[sym].clone()]));
            map.push((close_name(name, i), vec![ba.closing[sym].clone()]));
        }
    }
    let relabel = WeightedHom::unweighted(g.terminals().clone(), ba.symbols(), map).expect("relabelling is total");
    Ok((g, relabel))
}

/// The words of `L(G)` of length at most `max_len`, for a non-deleting grammar,
/// computed as a least fixpoint over bounded tuples.
pub fn bounded_language(g: &WeightedMcfg, max_len: usize) -> BTreeSet<Word> {
    let n = g.nonterminals().len();
    // per nonterminal: tuples bucketed by total length
    let mut all: Vec<Vec<Vec<Vec<Word>>>> = vec![vec![Vec::new(); max_len + 1]; n];
    let mut known: Vec<HashSet<Vec<Word>>> = vec![HashSet::new(); n];
    let mut fresh: Vec<Vec<Vec<Vec<Word>>>> = vec![vec![Vec::new(); max_len + 1]; n];
    let mut first = true;
    // group rules by right-hand side so child combinations are built once
    let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for rule in 0..g.productions().len() {
        groups.entry(g.rhs_ids(rule).to_vec()).or_default().push(rule);
    }
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = groups.into_iter().collect();
    groups.sort();
    loop {
        let mut next: Vec<Vec<Vec<Vec<Word>>>> = vec![vec![Vec::new(); max_len + 1]; n];
        let mut changed = false;
        for (rhs, rules) in &groups {
            if !first && rhs.is_empty() {
                continue;
            }
            let mut emit = |args: &[&Vec<Word>], used: usize| {
                let owned: Vec<Vec<Word>> = args.iter().map(|a| (*a).clone()).collect();
                for &rule in rules {
                    let p = g.production(rule);
                    let total = used + p.comp.terminal_count();
                    if total > max_len {
                        continue;
                    }
                    let out = p.comp.apply_unchecked(&owned);
                    let a = g.lhs_id(rule);
                    if known[a].insert(out.clone()) {
                        next[a][total].push(out);
                        changed = true;
                    }
                }
            };
            if rhs.is_empty() {
                emit(&[], 0);
                continue;
            }
            // semi-naive: the first fresh argument sits at position `p`
            for p in 0..rhs.len() {
                combine(rhs, p, 0, &all, &fresh, max_len, &mut Vec::new(), 0, &mut emit);
            }
        }
        first = false;
        for a in 0..n {
            for len in 0..=max_len {
                let f = std::mem::take(&mut fresh[a][len]);
                all[a][len].extend(f);
            }
        }
        fresh = next;
        if !changed {
            break;
        }
    }
    let s = g.nt_id(g.initial()).expect("initial exists");
    all[s].iter().flatten().chain(fresh[s].iter().flatten()).map(|t| t[0].clone()).collect()
}

#[allow(clippy::too_many_arguments)]
fn combine<'t>(
    rhs: &[usize],
    fresh_at: usize,
    pos: usize,
    all: &'t [Vec<Vec<Vec<Word>>>],
    fresh: &'t [Vec<Vec<Vec<Word>>>],
    max_len: usize,
    args: &mut Vec<&'t Vec<Word>>,
    used: usize,
    emit: &mut impl FnMut(&[&Vec<Word>], usize),
) {
    if pos == rhs.len() {
        emit(args, used);
        return;
    }
    let b = rhs[pos];
    let sources: Vec<&'t Vec<Vec<Vec<Word>>>> = if pos < fresh_at {
        vec![&all[b]]
    } else if pos == fresh_at {
        vec![&fresh[b]]
    } else {
        vec![&all[b], &fresh[b]]
    };
    for src in sources {
        for len in 0..=max_len - used {
            for t in &src[len] {
                args.push(t);
                combine(rhs, fresh_at, pos + 1, all, fresh, max_len, args, used + len, emit);
                args.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::word;

    const CELLS: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/linked.cells"));

    fn linked() -> BracketAlphabet {
        BracketAlphabet::parse(CELLS).unwrap()
    }

    #[test]
    fn dyck_verdicts() {
        let ba = linked();
        assert!(ba.is_dyck(&word("[[ ( ) ]] < > ( )")).unwrap());
        assert!(!ba.is_dyck(&word("( [[ ) ]] < > ( )")).unwrap());
        assert!(ba.is_dyck(&[]).unwrap());
        assert!(matches!(ba.is_dyck(&word("x")), Err(DyckError::Foreign(_))));
    }

    #[test]
    fn split_examples() {
        let ba = linked();
        assert_eq!(ba.split(&word("[[ ( ) ]] [ < > ]")).unwrap(), vec![word("[[ ( ) ]]"), word("[ < > ]")]);
        assert_eq!(ba.split(&word("( ) < >")).unwrap(), vec![word("( )"), word("< >")]);
        assert!(ba.split(&[]).unwrap().is_empty());
        assert!(matches!(ba.split(&word("( ]")), Err(DyckError::NotDyck(_))));
    }

    #[test]
    fn membership_examples() {
        let ba = linked();
        assert!(ba.is_member(&word("[[ ( ) ]] [ < > ]")).unwrap());
        assert!(!ba.is_member(&word("[[ ( ) ]] < [ ] >")).unwrap());
        assert!(ba.is_member(&word("[[ ( ) ]] [ ] [[ ]] [ < > ]")).unwrap());
        assert!(ba.is_member(&[]).unwrap());
    }

    #[test]
    fn partitions_of_the_second_trace() {
        let ba = linked();
        // σ = ⟦ [ ⟦ [
        let sigma = vec![3, 2, 3, 2];
        assert_eq!(cell_partitions(&ba, &sigma), vec![vec![vec![0, 1], vec![2, 3]], vec![vec![0, 3], vec![1, 2]]]);
    }

    #[test]
    fn first_trace_line_by_line() {
        let ba = linked();
        let (ok, trace) = ba.is_member_traced(&word("[[ ( ) ]] [ < > ]")).unwrap();
        assert!(ok);
        let expected = "\
isMember([[ ( ) ]] [ < > ])
l.4: σ1 = [[, σ2 = [, u1 = ( ), u2 = < >
l.5: I = {{{1,2}}}
l.6: I = {{1,2}}
l.8: k = 2, i1 = 1, i2 = 2
l.9: b = 1 · isMember(( ) < >)
    l.4: σ1 = (, σ2 = <, u1 = ε, u2 = ε
    l.5: I = {{{1,2}}}
    l.6: I = {{1,2}}
    l.8: k = 2, i1 = 1, i2 = 2
    l.9: b = 1 · isMember(ε)
        l.2: return 1
    l.9: b = 1 · 1 = 1
    l.11: return 1
l.9: b = 1 · 1 = 1
l.11: return 1
";
        assert_eq!(trace.to_string(), expected);
    }

    #[test]
    fn second_trace_tries_both_partitions() {
        let ba = linked();
        let (ok, trace) = ba.is_member_traced(&word("[[ ( ) ]] [ ] [[ ]] [ < > ]")).unwrap();
        assert!(ok);
        let top: Vec<String> =
            trace.events.iter().filter(|e| e.depth == 0 && e.line == Some(6)).map(|e| e.text.clone()).collect();
        assert_eq!(top, vec!["I = {{1,2}, {3,4}}", "I = {{1,4}, {2,3}}"]);
        let zeros = trace.events.iter().filter(|e| e.depth == 1 && e.line == Some(13)).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn mdg_small_cases() {
        let g = multiple_dyck_grammar(&[("d".into(), 1)], 1, MdgOptions::default()).unwrap();
        let unary: Vec<String> = g
            .productions()
            .iter()
            .filter(|p| p.id.starts_with('i') && !p.id.starts_with("ii"))
            .map(|p| format!("{}({})", p.comp, p.rhs.join(",")))
            .collect();
        assert_eq!(unary, vec!["[](".to_string() + ")", "[x1.1](A1)".to_string()]);
        for w in bounded_language(&g, 8) {
            assert!(w.iter().all(|s| s == "d[1]" || s == "~d[1]"));
            let ba = BracketAlphabet::new(vec!["d[1]".into()], vec!["~d[1]".into()], vec![vec![0]], vec!["d".into()]).unwrap();
            assert!(ba.is_dyck(&w).unwrap());
        }
        let g2 = multiple_dyck_grammar(&[("d".into(), 2)], 2, MdgOptions::default()).unwrap();
        assert!(g2.productions().iter().any(|p| p.comp.to_string() == "['d[1]' x1.1 '~d[1]' ; 'd[2]' x1.2 '~d[2]']"));
        assert!(matches!(multiple_dyck_grammar(&[("d".into(), 2)], 1, MdgOptions::default()), Err(DyckError::RankTooSmall { .. })));
        assert!(matches!(multiple_dyck_grammar(&[("d".into(), 3)], 3, MdgOptions::default()), Err(DyckError::Guard { .. })));
    }

    #[test]
    fn partition_grammar_relabels_in_cell_order() {
        let ba = linked();
        let (g, relabel) = partition_grammar(&ba, 2, MdgOptions::default()).unwrap();
        assert_eq!(relabel.image_of("p1[1]").unwrap().word(), &word("("));
        assert_eq!(relabel.image_of("p1[2]").unwrap().word(), &word("<"));
        assert_eq!(relabel.image_of("~p2[2]").unwrap().word(), &word("]]"));
        assert!(bounded_language(&g, 0).contains(&Vec::new()));
    }

    #[test]
    fn dyck_word_enumeration_counts() {
        let ba = BracketAlphabet::singletons(vec!["a".into()], None).unwrap();
        // Catalan numbers 1, 1, 2, 5
        assert_eq!(dyck_words(&ba, 6).len(), 1 + 1 + 2 + 5);
    }
}
