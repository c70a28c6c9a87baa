//! Sorted alphabets, composition representations, weighted MCFGs, derivations
//! and bounded weighted semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::algebra::{AlgebraError, Bimonoid, FiniteLattice, Weight};

/// A word is a sequence of symbol names.
pub type Word = Vec<String>;
/// A string tuple, the value of a sort-`s` nonterminal.
pub type Tuple = Vec<Word>;

/// Splits a whitespace-separated token string into a word.
pub fn word(text: &str) -> Word {
    text.split_whitespace().map(str::to_owned).collect()
}

pub fn show_word(w: &[String]) -> String {
    if w.is_empty() {
        "ε".to_owned()
    } else {
        w.join(" ")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("rule {rule}: {msg}")]
    Sort { rule: String, msg: String },
    #[error("rule {rule}: variable {var} occurs more than once, the composition is not linear")]
    NonLinear { rule: String, var: String },
    #[error("rule {rule}: weight is zero")]
    ZeroWeight { rule: String },
    #[error("initial nonterminal {0} must have sort 1, found {1}")]
    InitialSort(String, usize),
    #[error("duplicate rule id `{0}`")]
    DuplicateId(String),
    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("ill-sorted derivation at position {pos}: {msg}")]
    IllSorted { pos: String, msg: String },
    #[error("malformed derivation: {0}")]
    Derivation(String),
    #[error("argument mismatch: {0}")]
    Arity(String),
    #[error("enumeration exceeded {0} derivations; lower the bound")]
    TooMany(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// A token of a composition component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Terminal(String),
    /// `x_{arg+1}^{comp+1}`; both indices are zero-based.
    Var { arg: usize, comp: usize },
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Terminal(t) => write!(f, "'{t}'"),
            Token::Var { arg, comp } => write!(f, "x{}.{}", arg + 1, comp + 1),
        }
    }
}

/// `[u₁, …, u_s]` over argument sorts `s₁ … s_ℓ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompositionRep {
    arg_sorts: Vec<usize>,
    components: Vec<Vec<Token>>,
}

impl CompositionRep {
    /// Checks that every variable respects the argument sorts.
    pub fn new(arg_sorts: Vec<usize>, components: Vec<Vec<Token>>) -> Result<Self, String> {
        for tok in components.iter().flatten() {
            if let Token::Var { arg, comp } = tok {
                match arg_sorts.get(*arg) {
                    None => return Err(format!("{tok} refers to argument {} of {}", arg + 1, arg_sorts.len())),
                    Some(&s) if *comp >= s => {
                        return Err(format!("{tok} exceeds the sort {s} of argument {}", arg + 1))
                    }
                    _ => {}
                }
            }
        }
        Ok(CompositionRep { arg_sorts, components })
    }

    pub fn arg_sorts(&self) -> &[usize] {
        &self.arg_sorts
    }

    pub fn components(&self) -> &[Vec<Token>] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn fanout(&self) -> usize {
        self.components.len()
    }

    fn var_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for tok in self.components.iter().flatten() {
            if let Token::Var { arg, comp } = tok {
                *counts.entry((*arg, *comp)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// The first variable occurring twice, if any.
    pub fn repeated_var(&self) -> Option<Token> {
        let counts = self.var_counts();
        let mut repeated: Vec<_> = counts.into_iter().filter(|(_, c)| *c > 1).map(|(v, _)| v).collect();
        repeated.sort();
        repeated.first().map(|&(arg, comp)| Token::Var { arg, comp })
    }

    pub fn is_linear(&self) -> bool {
        self.repeated_var().is_none()
    }

    pub fn is_nondeleting(&self) -> bool {
        let counts = self.var_counts();
        self.arg_sorts
            .iter()
            .enumerate()
            .all(|(i, &s)| (0..s).all(|j| counts.contains_key(&(i, j))))
    }

    pub fn is_terminal_free(&self) -> bool {
        self.components.iter().flatten().all(|t| matches!(t, Token::Var { .. }))
    }

    pub fn terminal_count(&self) -> usize {
        self.components.iter().flatten().filter(|t| matches!(t, Token::Terminal(_))).count()
    }

    /// The string function of the composition.
    pub fn apply(&self, args: &[Tuple]) -> Result<Tuple, GrammarError> {
        if args.len() != self.arg_sorts.len() {
            return Err(GrammarError::Arity(format!(
                "expected {} arguments, got {}",
                self.arg_sorts.len(),
                args.len()
            )));
        }
        for (i, (arg, &s)) in args.iter().zip(&self.arg_sorts).enumerate() {
            if arg.len() != s {
                return Err(GrammarError::Arity(format!(
                    "argument {} has {} components, expected {s}",
                    i + 1,
                    arg.len()
                )));
            }
        }
        Ok(self.apply_unchecked(args))
    }

    pub(crate) fn apply_unchecked(&self, args: &[Tuple]) -> Tuple {
        self.components
            .iter()
            .map(|comp| {
                let mut out = Vec::new();
                for tok in comp {
                    match tok {
                        Token::Terminal(t) => out.push(t.clone()),
                        Token::Var { arg, comp } => out.extend(args[*arg][*comp].iter().cloned()),
                    }
                }
                out
            })
            .collect()
    }
}

impl fmt::Display for CompositionRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("[-]");
        }
        let comps: Vec<String> = self
            .components
            .iter()
            .map(|c| c.iter().map(Token::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", comps.join(" ; "))
    }
}

/// `A → f(A₁, …, A_ℓ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Production {
    pub id: String,
    pub lhs: String,
    pub comp: CompositionRep,
    pub rhs: Vec<String>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}({})", self.id, self.lhs, self.comp, self.rhs.join(", "))
    }
}

/// Input to grammar construction; argument sorts are filled in from the
/// nonterminal sorts.
#[derive(Clone, Debug)]
pub struct RuleSpec {
    pub id: String,
    pub lhs: String,
    pub components: Vec<Vec<Token>>,
    pub rhs: Vec<String>,
    pub weight: Weight,
}

/// A weighted MCFG `(N, Δ, S, P, μ)`. The unweighted case uses the boolean
/// algebra with every weight one.
#[derive(Clone, Debug)]
pub struct WeightedMcfg {
    algebra: Bimonoid,
    lattice_source: Option<String>,
    initial: String,
    nonterminals: Vec<(String, usize)>,
    terminals: BTreeSet<String>,
    productions: Vec<Production>,
    weights: Vec<Weight>,
    nt_index: HashMap<String, usize>,
    id_index: HashMap<String, usize>,
    lhs_idx: Vec<usize>,
    rhs_idx: Vec<Vec<usize>>,
    by_lhs: Vec<Vec<usize>>,
}

pub type Mcfg = WeightedMcfg;

impl WeightedMcfg {
    pub fn new(
        algebra: Bimonoid,
        initial: &str,
        rules: Vec<RuleSpec>,
        declared_sorts: &[(String, usize)],
        declared_terminals: &[String],
    ) -> Result<Self, GrammarError> {
        let mut order: Vec<String> = vec![initial.to_owned()];
        let mut sorts: HashMap<String, usize> = HashMap::new();
        let seen = |name: &str, order: &mut Vec<String>| {
            if !order.iter().any(|n| n == name) {
                order.push(name.to_owned());
            }
        };
        for r in &rules {
            seen(&r.lhs, &mut order);
            for b in &r.rhs {
                seen(b, &mut order);
            }
        }
        for (name, _) in declared_sorts {
            seen(name, &mut order);
        }
        for r in &rules {
            match sorts.get(&r.lhs) {
                Some(&s) if s != r.components.len() => {
                    return Err(GrammarError::Sort {
                        rule: r.id.clone(),
                        msg: format!("{} has sort {s} but the rule has fan-out {}", r.lhs, r.components.len()),
                    })
                }
                _ => {
                    sorts.insert(r.lhs.clone(), r.components.len());
                }
            }
        }
        for (name, s) in declared_sorts {
            match sorts.get(name) {
                Some(&t) if t != *s => {
                    return Err(GrammarError::Sort {
                        rule: format!("nonterminal {name}"),
                        msg: format!("declared sort {s} conflicts with rule fan-out {t}"),
                    })
                }
                _ => {
                    sorts.insert(name.clone(), *s);
                }
            }
        }
        // nonterminals that never occur on a left-hand side get the smallest
        // sort consistent with their uses
        for r in &rules {
            for (i, b) in r.rhs.iter().enumerate() {
                if sorts.contains_key(b) && (rules.iter().any(|q| &q.lhs == b) || declared_sorts.iter().any(|(n, _)| n == b)) {
                    continue;
                }
                let used = r
                    .components
                    .iter()
                    .flatten()
                    .filter_map(|t| match t {
                        Token::Var { arg, comp } if *arg == i => Some(comp + 1),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(0);
                let entry = sorts.entry(b.clone()).or_insert(0);
                *entry = (*entry).max(used);
            }
        }
        let initial_sort = *sorts.entry(initial.to_owned()).or_insert(1);
        if initial_sort != 1 {
            return Err(GrammarError::InitialSort(initial.to_owned(), initial_sort));
        }

        let nonterminals: Vec<(String, usize)> = order.iter().map(|n| (n.clone(), sorts[n])).collect();
        let nt_index: HashMap<String, usize> =
            nonterminals.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();

        let mut terminals: BTreeSet<String> = declared_terminals.iter().cloned().collect();
        let mut productions = Vec::with_capacity(rules.len());
        let mut weights = Vec::with_capacity(rules.len());
        let mut id_index = HashMap::new();
        for r in rules {
            if id_index.insert(r.id.clone(), productions.len()).is_some() {
                return Err(GrammarError::DuplicateId(r.id));
            }
            if *r.weight.algebra() != algebra {
                return Err(AlgebraError::Mixed(algebra.name().into(), r.weight.algebra().name().into()).into());
            }
            if r.weight.is_zero() {
                return Err(GrammarError::ZeroWeight { rule: r.id });
            }
            let arg_sorts: Vec<usize> = r.rhs.iter().map(|b| sorts[b]).collect();
            let comp = CompositionRep::new(arg_sorts, r.components)
                .map_err(|msg| GrammarError::Sort { rule: r.id.clone(), msg })?;
            if let Some(var) = comp.repeated_var() {
                return Err(GrammarError::NonLinear { rule: r.id, var: var.to_string() });
            }
            for tok in comp.components().iter().flatten() {
                if let Token::Terminal(t) = tok {
                    terminals.insert(t.clone());
                }
            }
            productions.push(Production { id: r.id, lhs: r.lhs, comp, rhs: r.rhs });
            weights.push(r.weight);
        }
        let lhs_idx: Vec<usize> = productions.iter().map(|p| nt_index[&p.lhs]).collect();
        let rhs_idx: Vec<Vec<usize>> =
            productions.iter().map(|p| p.rhs.iter().map(|b| nt_index[b]).collect()).collect();
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, &a) in lhs_idx.iter().enumerate() {
            by_lhs[a].push(i);
        }
        Ok(WeightedMcfg {
            algebra,
            lattice_source: None,
            initial: initial.to_owned(),
            nonterminals,
            terminals,
            productions,
            weights,
            nt_index,
            id_index,
            lhs_idx,
            rhs_idx,
            by_lhs,
        })
    }

    pub fn algebra(&self) -> &Bimonoid {
        &self.algebra
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn nonterminals(&self) -> &[(String, usize)] {
        &self.nonterminals
    }

    pub fn sort_of(&self, nt: &str) -> Option<usize> {
        self.nt_index.get(nt).map(|&i| self.nonterminals[i].1)
    }

    pub fn terminals(&self) -> &BTreeSet<String> {
        &self.terminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, i: usize) -> &Production {
        &self.productions[i]
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn production_index(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Production indices with the given left-hand side.
    pub fn rules_for(&self, nt: &str) -> &[usize] {
        match self.nt_index.get(nt) {
            Some(&a) => &self.by_lhs[a],
            None => &[],
        }
    }

    pub(crate) fn nt_id(&self, nt: &str) -> Option<usize> {
        self.nt_index.get(nt).copied()
    }

    pub(crate) fn lhs_id(&self, rule: usize) -> usize {
        self.lhs_idx[rule]
    }

    pub(crate) fn rhs_ids(&self, rule: usize) -> &[usize] {
        &self.rhs_idx[rule]
    }

    pub(crate) fn rules_by_id(&self, nt: usize) -> &[usize] {
        &self.by_lhs[nt]
    }

    pub fn fanout(&self) -> usize {
        self.productions.iter().map(|p| p.comp.fanout()).max().unwrap_or(0)
    }

    pub fn rank(&self) -> usize {
        self.productions.iter().map(|p| p.comp.rank()).max().unwrap_or(0)
    }

    pub fn is_nondeleting(&self) -> bool {
        self.productions.iter().all(|p| p.comp.is_nondeleting())
    }

    pub fn lattice_source(&self) -> Option<&str> {
        self.lattice_source.as_deref()
    }

    pub(crate) fn with_lattice_source(mut self, source: Option<String>) -> Self {
        self.lattice_source = source;
        self
    }

    /// Rebuilds the rule list as specs, e.g. to derive a new grammar.
    pub fn rule_specs(&self) -> Vec<RuleSpec> {
        self.productions
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| RuleSpec {
                id: p.id.clone(),
                lhs: p.lhs.clone(),
                components: p.comp.components().to_vec(),
                rhs: p.rhs.clone(),
                weight: w.clone(),
            })
            .collect()
    }

    /// The yield of a derivation rooted at any nonterminal.
    pub fn yield_of(&self, d: &Derivation) -> Result<Tuple, GrammarError> {
        self.check(d, None)?;
        Ok(self.eval(d))
    }

    pub(crate) fn eval(&self, d: &Derivation) -> Tuple {
        let args: Vec<Tuple> = d.children.iter().map(|c| self.eval(c)).collect();
        self.productions[d.rule].comp.apply_unchecked(&args)
    }

    /// `μ̂(d)`: the product of the rule weights over all positions.
    pub fn derivation_weight(&self, d: &Derivation) -> Result<Weight, GrammarError> {
        self.check(d, None)?;
        Ok(self.weight_unchecked(d))
    }

    pub(crate) fn weight_unchecked(&self, d: &Derivation) -> Weight {
        let mut values = Vec::new();
        d.visit(&mut |n| values.push(self.weights[n.rule].value().clone()));
        Weight::from_parts(&self.algebra, self.algebra.product(&values))
    }

    /// Checks that `d` is well-sorted, optionally rooted at `root`.
    pub fn check(&self, d: &Derivation, root: Option<&str>) -> Result<(), GrammarError> {
        fn go(g: &WeightedMcfg, d: &Derivation, pos: &mut Vec<usize>) -> Result<(), GrammarError> {
            let p = g.productions.get(d.rule).ok_or_else(|| GrammarError::IllSorted {
                pos: show_position(pos),
                msg: format!("no rule with index {}", d.rule),
            })?;
            if d.children.len() != p.rhs.len() {
                return Err(GrammarError::IllSorted {
                    pos: show_position(pos),
                    msg: format!("{} has rank {} but {} children", p.id, p.rhs.len(), d.children.len()),
                });
            }
            for (i, c) in d.children.iter().enumerate() {
                let child = g.productions.get(c.rule).ok_or_else(|| GrammarError::IllSorted {
                    pos: show_position(pos),
                    msg: format!("no rule with index {}", c.rule),
                })?;
                if child.lhs != p.rhs[i] {
                    return Err(GrammarError::IllSorted {
                        pos: show_position(pos),
                        msg: format!(
                            "child {} of {} is {} with left-hand side {}, expected {}",
                            i + 1,
                            p.id,
                            child.id,
                            child.lhs,
                            p.rhs[i]
                        ),
                    });
                }
                pos.push(i + 1);
                go(g, c, pos)?;
                pos.pop();
            }
            Ok(())
        }
        if let Some(root) = root {
            let p = self.productions.get(d.rule).ok_or_else(|| GrammarError::IllSorted {
                pos: "ε".into(),
                msg: format!("no rule with index {}", d.rule),
            })?;
            if p.lhs != root {
                return Err(GrammarError::IllSorted {
                    pos: "ε".into(),
                    msg: format!("root {} has left-hand side {}, expected {root}", p.id, p.lhs),
                });
            }
        }
        go(self, d, &mut Vec::new())
    }

    /// All well-sorted derivations from `nt` of height at most `max_height`,
    /// in canonical order.
    pub fn enumerate_derivations(&self, nt: &str, max_height: usize) -> Result<Vec<Derivation>, GrammarError> {
        let a = self.nt_id(nt).ok_or_else(|| GrammarError::UnknownNonterminal(nt.to_owned()))?;
        Enumerator::new(self, None).run(a, max_height)
    }

    /// `D_G(w)` restricted to height at most `max_height`.
    pub fn derivations_of(&self, w: &[String], max_height: usize) -> Result<Vec<Derivation>, GrammarError> {
        let a = self.nt_id(&self.initial).expect("initial is always a nonterminal");
        let costs = self.is_nondeleting().then(|| (self.terminal_costs(), w.len()));
        let target = vec![w.to_vec()];
        Ok(Enumerator::new(self, costs)
            .run(a, max_height)?
            .into_iter()
            .filter(|d| self.eval(d) == target)
            .collect())
    }

    pub(crate) fn terminal_costs(&self) -> Vec<usize> {
        self.productions.iter().map(|p| p.comp.terminal_count()).collect()
    }

    /// `⟦G⟧(w)` summed over derivations of height at most `max_height`.
    ///
    /// The result is flagged as truncated when a yield-preserving cycle
    /// exists or when `max_height` is below the height that provably covers
    /// every derivation of a word of this length.
    pub fn weighted_semantics(&self, w: &[String], max_height: usize) -> Result<SemanticsResult, GrammarError> {
        let growth = Growth::analyze(self);
        let ds = self.derivations_of(w, max_height)?;
        let weights: Vec<Weight> = ds.iter().map(|d| self.weight_unchecked(d)).collect();
        Ok(SemanticsResult {
            weight: Weight::sum(&self.algebra, &weights)?,
            truncated: growth.pumpable() || max_height < growth.height_bound(w.len()),
            derivations: ds.len(),
        })
    }

    /// `⟦G⟧(w)` with the height bound chosen by the exactness analysis.
    pub fn semantics(&self, w: &[String]) -> Result<SemanticsResult, GrammarError> {
        let growth = Growth::analyze(self);
        self.weighted_semantics(w, growth.height_for(w.len(), self.nonterminals.len()))
    }

    /// `⟦G⟧` on every word of length at most `max_len`, from one enumeration.
    pub fn semantics_table(&self, max_len: usize) -> Result<SemanticsTable, GrammarError> {
        let growth = Growth::analyze(self);
        let height = growth.height_for(max_len, self.nonterminals.len());
        let a = self.nt_id(&self.initial).expect("initial is always a nonterminal");
        let costs = self.is_nondeleting().then(|| (self.terminal_costs(), max_len));
        let mut sums: BTreeMap<Word, Weight> = BTreeMap::new();
        let ds = Enumerator::new(self, costs).run(a, height)?;
        let count = ds.len();
        for d in ds {
            let mut y = self.eval(&d);
            let w = y.pop().expect("initial has sort 1");
            if w.len() > max_len {
                continue;
            }
            let mu = self.weight_unchecked(&d);
            let entry = sums.entry(w).or_insert_with(|| Weight::zero(&self.algebra));
            *entry = entry.plus(&mu)?;
        }
        Ok(SemanticsTable {
            algebra: self.algebra.clone(),
            weights: sums,
            truncated: growth.pumpable(),
            height,
            derivations: count,
        })
    }
}

/// Result of a bounded semantics query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticsResult {
    pub weight: Weight,
    pub truncated: bool,
    pub derivations: usize,
}

/// `⟦G⟧` restricted to short words; absent words weigh zero.
#[derive(Clone, Debug)]
pub struct SemanticsTable {
    pub algebra: Bimonoid,
    pub weights: BTreeMap<Word, Weight>,
    pub truncated: bool,
    pub height: usize,
    pub derivations: usize,
}

impl SemanticsTable {
    pub fn get(&self, w: &[String]) -> Weight {
        self.weights.get(w).cloned().unwrap_or_else(|| Weight::zero(&self.algebra))
    }
}

impl fmt::Display for WeightedMcfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.algebra, &self.lattice_source) {
            (Bimonoid::Lattice(_), Some(src)) => writeln!(f, "algebra lattice {src}")?,
            (alg, _) => writeln!(f, "algebra {}", alg.name())?,
        }
        writeln!(f, "start {}", self.initial)?;
        if !self.terminals.is_empty() {
            let ts: Vec<&str> = self.terminals.iter().map(String::as_str).collect();
            writeln!(f, "terminals {}", ts.join(" "))?;
        }
        for (i, (name, sort)) in self.nonterminals.iter().enumerate() {
            if self.by_lhs[i].is_empty() && name != &self.initial {
                writeln!(f, "nonterminal {name}/{sort}")?;
            }
        }
        let one = Weight::one(&self.algebra);
        for (p, w) in self.productions.iter().zip(&self.weights) {
            write!(f, "rule {p}")?;
            if *w != one {
                write!(f, " @ {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A derivation tree; node labels are production indices of one grammar.
///
/// The derived order equals the lexicographic order of the pre-order
/// (position, production index) listings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Derivation {
    pub rule: usize,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn leaf(rule: usize) -> Self {
        Derivation { rule, children: Vec::new() }
    }

    pub fn node(rule: usize, children: Vec<Derivation>) -> Self {
        Derivation { rule, children }
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Derivation::height).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Derivation)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    /// Relabels every node through `f`.
    pub fn map(&self, f: &impl Fn(usize) -> usize) -> Derivation {
        Derivation { rule: f(self.rule), children: self.children.iter().map(|c| c.map(f)).collect() }
    }

    /// Pre-order `(position, rule index)` pairs; positions are 1-based.
    pub fn positions(&self) -> Vec<(Vec<usize>, usize)> {
        fn go(d: &Derivation, pos: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
            out.push((pos.clone(), d.rule));
            for (i, c) in d.children.iter().enumerate() {
                pos.push(i + 1);
                go(c, pos, out);
                pos.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// `pos id` lines, root position written `ε`.
    pub fn listing(&self, g: &WeightedMcfg) -> String {
        self.positions()
            .into_iter()
            .map(|(pos, r)| format!("{} {}\n", show_position(&pos), g.productions[r].id))
            .collect()
    }

    /// Term notation `r1(r2(r4), r5)`.
    pub fn term(&self, g: &WeightedMcfg) -> String {
        let id = &g.productions[self.rule].id;
        if self.children.is_empty() {
            id.clone()
        } else {
            let kids: Vec<String> = self.children.iter().map(|c| c.term(g)).collect();
            format!("{id}({})", kids.join(", "))
        }
    }

    /// Parses either term notation or a position listing.
    pub fn parse(g: &WeightedMcfg, text: &str) -> Result<Derivation, GrammarError> {
        let trimmed = text.trim();
        let d = if trimmed.lines().filter(|l| !l.trim().is_empty()).count() > 1
            || trimmed.starts_with('ε')
        {
            parse_listing(g, trimmed)?
        } else {
            parse_term(g, trimmed)?
        };
        g.check(&d, None)?;
        Ok(d)
    }
}

pub fn show_position(pos: &[usize]) -> String {
    if pos.is_empty() {
        "ε".to_owned()
    } else {
        pos.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
    }
}

fn rule_index(g: &WeightedMcfg, id: &str) -> Result<usize, GrammarError> {
    g.production_index(id).ok_or_else(|| GrammarError::UnknownRule(id.to_owned()))
}

fn parse_term(g: &WeightedMcfg, text: &str) -> Result<Derivation, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let d = term_at(g, &chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(GrammarError::Derivation(format!("trailing input at character {pos}")));
    }
    Ok(d)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn term_at(g: &WeightedMcfg, chars: &[char], pos: &mut usize) -> Result<Derivation, GrammarError> {
    skip_ws(chars, pos);
    let start = *pos;
    let mut depth = 0usize;
    while *pos < chars.len() {
        match chars[*pos] {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            '(' | ')' if depth == 0 => break,
            ',' if depth == 0 => break,
            c if c.is_whitespace() && depth == 0 => break,
            _ => {}
        }
        *pos += 1;
    }
    let id: String = chars[start..*pos].iter().collect();
    if id.is_empty() {
        return Err(GrammarError::Derivation(format!("expected a rule id at character {start}")));
    }
    let rule = rule_index(g, &id)?;
    skip_ws(chars, pos);
    let mut children = Vec::new();
    if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        skip_ws(chars, pos);
        if chars.get(*pos) == Some(&')') {
            *pos += 1;
        } else {
            loop {
                children.push(term_at(g, chars, pos)?);
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(GrammarError::Derivation(format!("expected `,` or `)` at character {pos}"))),
                }
            }
        }
    }
    Ok(Derivation { rule, children })
}

fn parse_listing(g: &WeightedMcfg, text: &str) -> Result<Derivation, GrammarError> {
    let mut labels: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (pos, id) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| GrammarError::Derivation(format!("expected `<position> <rule>` in `{line}`")))?;
        let pos: Vec<usize> = if pos == "ε" || pos == "-" {
            Vec::new()
        } else {
            pos.split('.')
                .map(|s| match s.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(GrammarError::Derivation(format!("bad position `{pos}`"))),
                })
                .collect::<Result<_, _>>()?
        };
        let rule = rule_index(g, id.trim())?;
        if labels.insert(pos.clone(), rule).is_some() {
            return Err(GrammarError::Derivation(format!("position {} listed twice", show_position(&pos))));
        }
    }
    fn build(
        g: &WeightedMcfg,
        labels: &mut BTreeMap<Vec<usize>, usize>,
        pos: &mut Vec<usize>,
    ) -> Result<Derivation, GrammarError> {
        let rule = labels
            .remove(pos.as_slice())
            .ok_or_else(|| GrammarError::Derivation(format!("position {} is missing", show_position(pos))))?;
        let mut children = Vec::new();
        for i in 1..=g.productions[rule].rhs.len() {
            pos.push(i);
            children.push(build(g, labels, pos)?);
            pos.pop();
        }
        Ok(Derivation { rule, children })
    }
    let d = build(g, &mut labels, &mut Vec::new())?;
    if let Some(pos) = labels.keys().next() {
        return Err(GrammarError::Derivation(format!("position {} is outside the tree", show_position(pos))));
    }
    Ok(d)
}

const ENUMERATION_LIMIT: usize = 2_000_000;

/// Bottom-up enumeration bounded by height and an additive cost budget.
pub(crate) struct Enumerator<'g> {
    g: &'g WeightedMcfg,
    costs: Vec<usize>,
    budget: usize,
    min_cost: Vec<usize>,
    memo: HashMap<(usize, usize, usize), std::rc::Rc<Vec<(Derivation, usize)>>>,
    produced: usize,
}

impl<'g> Enumerator<'g> {
    /// `costs`: per-production cost and the total budget; `None` means
    /// height-only enumeration.
    pub(crate) fn new(g: &'g WeightedMcfg, costs: Option<(Vec<usize>, usize)>) -> Self {
        let (costs, budget) = costs.unwrap_or_else(|| (vec![0; g.productions.len()], 0));
        let min_cost = min_costs(g, &costs);
        Enumerator { g, costs, budget, min_cost, memo: HashMap::new(), produced: 0 }
    }

    pub(crate) fn run(mut self, nt: usize, max_height: usize) -> Result<Vec<Derivation>, GrammarError> {
        let budget = self.budget;
        let trees = self.gen(nt, max_height, budget)?;
        let mut out: Vec<Derivation> = trees.iter().map(|(d, _)| d.clone()).collect();
        out.sort();
        Ok(out)
    }

    fn gen(&mut self, nt: usize, h: usize, budget: usize) -> Result<std::rc::Rc<Vec<(Derivation, usize)>>, GrammarError> {
        if let Some(hit) = self.memo.get(&(nt, h, budget)) {
            return Ok(hit.clone());
        }
        let mut out = Vec::new();
        if h > 0 {
            for &rule in self.g.rules_by_id(nt) {
                let rhs = self.g.rhs_ids(rule);
                let floor: usize = self.costs[rule].saturating_add(rhs.iter().map(|&b| self.min_cost[b]).fold(0, usize::saturating_add));
                if floor > budget {
                    continue;
                }
                let mut partial: Vec<(Vec<Derivation>, usize)> = vec![(Vec::new(), self.costs[rule])];
                for (k, &b) in rhs.iter().enumerate() {
                    let later: usize = rhs[k + 1..].iter().map(|&c| self.min_cost[c]).fold(0, usize::saturating_add);
                    let mut next = Vec::new();
                    for (kids, used) in partial {
                        if used.saturating_add(later) > budget {
                            continue;
                        }
                        let room = budget - used - later;
                        let subs = self.gen(b, h - 1, room)?;
                        for (sub, c) in subs.iter() {
                            let mut kids2 = kids.clone();
                            kids2.push(sub.clone());
                            next.push((kids2, used + c));
                        }
                        self.produced += subs.len();
                        if self.produced > ENUMERATION_LIMIT {
                            return Err(GrammarError::TooMany(ENUMERATION_LIMIT));
                        }
                    }
                    partial = next;
                }
                for (children, cost) in partial {
                    out.push((Derivation { rule, children }, cost));
                }
            }
        }
        let out = std::rc::Rc::new(out);
        self.memo.insert((nt, h, budget), out.clone());
        Ok(out)
    }
}

/// Least total cost of a derivation from each nonterminal (`usize::MAX` if
/// unproductive).
pub(crate) fn min_costs(g: &WeightedMcfg, costs: &[usize]) -> Vec<usize> {
    let mut m = vec![usize::MAX; g.nonterminals.len()];
    loop {
        let mut changed = false;
        for rule in 0..g.productions.len() {
            let total = g.rhs_ids(rule).iter().map(|&b| m[b]).fold(costs[rule], usize::saturating_add);
            let a = g.lhs_id(rule);
            if total < m[a] {
                m[a] = total;
                changed = true;
            }
        }
        if !changed {
            return m;
        }
    }
}

/// Yield-growth analysis on the non-deleting form, used to decide which
/// height bound covers every derivation of a bounded-length word.
#[derive(Clone, Debug)]
pub struct Growth {
    nd: WeightedMcfg,
    costs: Vec<usize>,
    min_yield: Vec<usize>,
    pumpable: bool,
}

impl Growth {
    pub fn analyze(g: &WeightedMcfg) -> Growth {
        let nd = crate::transform::to_nondeleting(g);
        let costs = nd.terminal_costs();
        let min_yield = min_costs(&nd, &costs);
        let pumpable = has_free_cycle(&nd, &costs, &min_yield);
        Growth { nd, costs, min_yield, pumpable }
    }

    /// Whether some nonterminal can reach itself without the yield growing,
    /// so that some words have infinitely many derivations.
    pub fn pumpable(&self) -> bool {
        self.pumpable
    }

    /// The largest height of a derivation whose yield has length at most
    /// `max_len`; 0 if there is none. Meaningless when `pumpable`.
    pub fn height_bound(&self, max_len: usize) -> usize {
        if self.pumpable {
            return usize::MAX;
        }
        let n = self.nd.nonterminals.len();
        let Some(start) = self.nd.nt_id(self.nd.initial()) else { return 0 };
        // exact[a]: least yield of a derivation of exactly the current height
        // upto[a]: least yield of a derivation of at most the current height
        let mut exact = vec![usize::MAX; n];
        let mut upto = vec![usize::MAX; n];
        let mut best = 0;
        for h in 1.. {
            let mut next = vec![usize::MAX; n];
            for rule in 0..self.nd.productions.len() {
                let rhs = self.nd.rhs_ids(rule);
                let a = self.nd.lhs_id(rule);
                let cand = if rhs.is_empty() {
                    if h == 1 { self.costs[rule] } else { usize::MAX }
                } else {
                    (0..rhs.len())
                        .map(|i| {
                            rhs.iter().enumerate().fold(self.costs[rule], |acc, (j, &b)| {
                                acc.saturating_add(if i == j { exact[b] } else { upto[b] })
                            })
                        })
                        .min()
                        .unwrap_or(usize::MAX)
                };
                next[a] = next[a].min(cand);
            }
            exact = next;
            for a in 0..n {
                upto[a] = upto[a].min(exact[a]);
            }
            if exact[start] <= max_len {
                best = h;
            }
            // a derivation of height h+1 contains one of exact height h
            if exact.iter().all(|&e| e > max_len) && h > 1 {
                return best;
            }
            if h > n * (max_len + 2) + 2 {
                return best;
            }
        }
        unreachable!()
    }

    /// Height used for bounded queries: exact bound if available, otherwise
    /// a heuristic bound whose results are flagged as truncated.
    pub fn height_for(&self, max_len: usize, nonterminals: usize) -> usize {
        if self.pumpable {
            max_len + nonterminals + 1
        } else {
            self.height_bound(max_len).max(1)
        }
    }

    pub fn min_yield(&self, nt: &str) -> Option<usize> {
        self.nd.nt_id(nt).map(|a| self.min_yield[a])
    }
}

fn has_free_cycle(g: &WeightedMcfg, costs: &[usize], m: &[usize]) -> bool {
    let n = g.nonterminals.len();
    let mut edges = vec![Vec::new(); n];
    for rule in 0..g.productions.len() {
        let rhs = g.rhs_ids(rule);
        if rhs.iter().any(|&b| m[b] == usize::MAX) {
            continue;
        }
        for (i, &b) in rhs.iter().enumerate() {
            let others = rhs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &c)| m[c]).sum::<usize>();
            if costs[rule] + others == 0 {
                edges[g.lhs_id(rule)].push(b);
            }
        }
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    fn dfs(v: usize, edges: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &edges[v] {
            if state[w] == 1 || (state[w] == 0 && dfs(w, edges, state)) {
                return true;
            }
        }
        state[v] = 2;
        false
    }
    (0..n).any(|v| state[v] == 0 && dfs(v, &edges, &mut state))
}

/// Parses a grammar file; a lattice table path is resolved against the
/// current directory.
pub fn parse_grammar(text: &str) -> Result<WeightedMcfg, GrammarError> {
    parse_grammar_in(text, Path::new("."))
}

/// Reads and parses a grammar file, resolving lattice paths next to it.
pub fn load_grammar(path: &Path) -> Result<WeightedMcfg, GrammarError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GrammarError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_grammar_in(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_grammar_in(text: &str, base: &Path) -> Result<WeightedMcfg, GrammarError> {
    let mut algebra: Option<(Bimonoid, Option<String>)> = None;
    let mut start: Option<String> = None;
    let mut declared_terms = Vec::new();
    let mut declared_sorts = Vec::new();
    let mut raw_rules: Vec<(usize, RawRule)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: String| GrammarError::Syntax { line: line_no, msg };
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match kw {
            "algebra" => {
                if algebra.is_some() {
                    return Err(syntax("algebra declared twice".into()));
                }
                let mut parts = rest.split_whitespace();
                let name = parts.next().ok_or_else(|| syntax("missing algebra name".into()))?;
                if name == "lattice" {
                    let file = parts.next().ok_or_else(|| syntax("`algebra lattice` needs a table file".into()))?;
                    let path = base.join(file);
                    let table = std::fs::read_to_string(&path).map_err(|e| GrammarError::Io {
                        path: path.display().to_string(),
                        msg: e.to_string(),
                    })?;
                    let lattice = FiniteLattice::parse(&table)?;
                    algebra = Some((Bimonoid::Lattice(std::sync::Arc::new(lattice)), Some(file.to_owned())));
                } else {
                    algebra = Some((Bimonoid::by_name(name)?, None));
                }
            }
            "start" => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(syntax("`start` takes exactly one nonterminal".into()));
                }
                start = Some(rest.to_owned());
            }
            "terminals" => declared_terms.extend(rest.split_whitespace().map(|t| unquote(t).to_owned())),
            "nonterminal" => {
                for decl in rest.split_whitespace() {
                    let (name, sort) = decl
                        .rsplit_once('/')
                        .ok_or_else(|| syntax(format!("expected `Name/sort`, got `{decl}`")))?;
                    let sort = sort.parse().map_err(|_| syntax(format!("bad sort in `{decl}`")))?;
                    declared_sorts.push((name.to_owned(), sort));
                }
            }
            "rule" => raw_rules.push((line_no, parse_rule(rest).map_err(syntax)?)),
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    let (algebra, lattice_source) = algebra.unwrap_or((Bimonoid::Boolean, None));
    let start = start
        .or_else(|| raw_rules.first().map(|(_, r)| r.lhs.clone()))
        .ok_or(GrammarError::Syntax { line: 0, msg: "no `start` and no rules".into() })?;
    let mut rules = Vec::new();
    for (line, r) in raw_rules {
        let weight = match &r.weight {
            Some(lit) => Weight::parse(&algebra, lit).map_err(|e| match e {
                AlgebraError::Malformed { .. } | AlgebraError::OutOfCarrier { .. } => {
                    GrammarError::Syntax { line, msg: e.to_string() }
                }
                other => other.into(),
            })?,
            None => Weight::one(&algebra),
        };
        rules.push(RuleSpec { id: r.id, lhs: r.lhs, components: r.components, rhs: r.rhs, weight });
    }
    Ok(WeightedMcfg::new(algebra, &start, rules, &declared_sorts, &declared_terms)?.with_lattice_source(lattice_source))
}

struct RawRule {
    id: String,
    lhs: String,
    components: Vec<Vec<Token>>,
    rhs: Vec<String>,
    weight: Option<String>,
}

fn strip_comment(line: &str) -> &str {
    // `#` inside quotes or nonterminal names (`A#2`) is not a comment
    let mut quote = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, '#') if i == 0 || line[..i].ends_with(char::is_whitespace) => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(t: &str) -> &str {
    let t = t.trim();
    if t.len() >= 2 && ((t.starts_with('\'') && t.ends_with('\'')) || (t.starts_with('"') && t.ends_with('"'))) {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

fn parse_rule(text: &str) -> Result<RawRule, String> {
    let (id, body) = text.split_once(':').ok_or("expected `rule <id>: <NT> -> ...`")?;
    let id = id.trim();
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(format!("bad rule id `{id}`"));
    }
    let (lhs, body) = body.split_once("->").ok_or("expected `->`")?;
    let lhs = lhs.trim();
    if lhs.is_empty() || lhs.contains(char::is_whitespace) {
        return Err(format!("bad left-hand side `{lhs}`"));
    }
    let body = body.trim_start();
    if !body.starts_with('[') {
        return Err("expected `[` to open the composition".into());
    }
    // find the `]` closing the composition, skipping quoted terminals
    let mut quote = None;
    let mut close = None;
    for (i, c) in body.char_indices().skip(1) {
        match (quote, c) {
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, ']') => {
                close = Some(i);
                break;
            }
            _ => {}
        }
    }
    let close = close.ok_or("unterminated composition")?;
    let components = parse_components(&body[1..close])?;
    let rest = body[close + 1..].trim_start();
    if !rest.starts_with('(') {
        return Err("expected `(` after the composition".into());
    }
    let end = rest.find(')').ok_or("unterminated right-hand side")?;
    let rhs = split_top_level(&rest[1..end])?;
    let tail = rest[end + 1..].trim();
    let weight = if tail.is_empty() {
        None
    } else if let Some(w) = tail.strip_prefix('@') {
        let w = w.trim();
        if w.is_empty() {
            return Err("missing weight after `@`".into());
        }
        Some(w.to_owned())
    } else {
        return Err(format!("unexpected `{tail}` after the right-hand side"));
    };
    Ok(RawRule { id: id.to_owned(), lhs: lhs.to_owned(), components, rhs, weight })
}

fn split_top_level(text: &str) -> Result<Vec<String>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    out.push(cur);
    out.into_iter()
        .map(|s| {
            let s = s.trim();
            if s.is_empty() || s.contains(char::is_whitespace) {
                Err(format!("bad right-hand side nonterminal `{s}`"))
            } else {
                Ok(s.to_owned())
            }
        })
        .collect()
}

fn parse_components(text: &str) -> Result<Vec<Vec<Token>>, String> {
    if text.trim() == "-" {
        return Ok(Vec::new());
    }
    let mut comps = vec![Vec::new()];
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ';' {
            comps.push(Vec::new());
            i += 1;
        } else if c == '\'' || c == '"' {
            let end = chars[i + 1..].iter().position(|&d| d == c).ok_or("unterminated terminal")?;
            let t: String = chars[i + 1..i + 1 + end].iter().collect();
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(format!("bad terminal '{t}'"));
            }
            comps.last_mut().expect("non-empty").push(Token::Terminal(t));
            i += end + 2;
        } else {
            let end = chars[i..].iter().position(|d| d.is_whitespace() || *d == ';').map_or(chars.len(), |e| i + e);
            let tok: String = chars[i..end].iter().collect();
            i = end;
            if tok == "ε" {
                continue;
            }
            let var = tok
                .strip_prefix('x')
                .and_then(|v| v.split_once('.'))
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .filter(|&(a, b)| a >= 1 && b >= 1)
                .ok_or_else(|| format!("expected a quoted terminal or a variable `x<i>.<j>`, got `{tok}`"))?;
            comps.last_mut().expect("non-empty").push(Token::Var { arg: var.0 - 1, comp: var.1 - 1 });
        }
    }
    Ok(comps)
}
