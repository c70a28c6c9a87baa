//! Grammar transformations: pruning, the non-deleting normal form,
//! rhs-distinctness, weight separation and its inverse decoding.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::algebra::{Bimonoid, Weight};
use crate::grammar::{Derivation, GrammarError, RuleSpec, Token, WeightedMcfg, Word};
use crate::homomorphism::{Monomial, WeightedHom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("rule {0} is deleting; apply the non-deleting normal form first")]
    Deleting(String),
    #[error("rule {0} has fan-out 0 and cannot carry a marker; lift fan-out 0 first")]
    FanoutZero(String),
    #[error("marker `{0}` collides with a terminal")]
    MarkerCollision(String),
    #[error("cannot decode at token {pos}: {msg}")]
    Decode { pos: usize, msg: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

fn rebuild(g: &WeightedMcfg, rules: Vec<RuleSpec>) -> WeightedMcfg {
    let terms: Vec<String> = g.terminals().iter().cloned().collect();
    WeightedMcfg::new(g.algebra().clone(), g.initial(), rules, &[], &terms)
        .expect("transformations preserve well-formedness")
        .with_lattice_source(g.lattice_source().map(str::to_owned))
}

/// Productive nonterminals: those with at least one finite subderivation.
pub fn productive(g: &WeightedMcfg) -> BTreeSet<String> {
    let mut done: BTreeSet<String> = BTreeSet::new();
    loop {
        let before = done.len();
        for p in g.productions() {
            if p.rhs.iter().all(|b| done.contains(b)) {
                done.insert(p.lhs.clone());
            }
        }
        if done.len() == before {
            return done;
        }
    }
}

/// Removes unproductive nonterminals and every rule mentioning one. If the
/// initial nonterminal is unproductive the result has no rules at all.
pub fn prune_unproductive(g: &WeightedMcfg) -> WeightedMcfg {
    prune_unproductive_traced(g).0
}

/// Also returns, per kept rule, its index in `g`.
pub fn prune_unproductive_traced(g: &WeightedMcfg) -> (WeightedMcfg, Vec<usize>) {
    let ok = productive(g);
    let keep: Vec<usize> = (0..g.productions().len())
        .filter(|&i| {
            let p = g.production(i);
            ok.contains(&p.lhs) && p.rhs.iter().all(|b| ok.contains(b))
        })
        .collect();
    let specs = g.rule_specs();
    let rules = keep.iter().map(|&i| specs[i].clone()).collect();
    (rebuild(g, rules), keep)
}

/// Removes rules whose left-hand side is unreachable from the initial symbol.
pub fn prune_unreachable_traced(g: &WeightedMcfg) -> (WeightedMcfg, Vec<usize>) {
    let mut reach: BTreeSet<&str> = BTreeSet::new();
    let mut queue = vec![g.initial()];
    while let Some(a) = queue.pop() {
        if reach.insert(a) {
            for &r in g.rules_for(a) {
                queue.extend(g.production(r).rhs.iter().map(String::as_str));
            }
        }
    }
    let keep: Vec<usize> = (0..g.productions().len()).filter(|&i| reach.contains(g.production(i).lhs.as_str())).collect();
    let specs = g.rule_specs();
    let rules = keep.iter().map(|&i| specs[i].clone()).collect();
    (rebuild(g, rules), keep)
}

/// Whether the grammar generates nothing.
pub fn is_empty_language(g: &WeightedMcfg) -> bool {
    !productive(g).contains(g.initial())
}

fn psi_name(nt: &str, psi: &BTreeSet<usize>) -> String {
    let idx: Vec<String> = psi.iter().map(|j| (j + 1).to_string()).collect();
    format!("{nt}[{}]", idx.join(","))
}

fn psi_rule_id(id: &str, psi: &BTreeSet<usize>) -> String {
    if psi.is_empty() {
        id.to_owned()
    } else {
        psi_name(id, psi)
    }
}

/// The non-deleting normal form: nonterminals `A[Ψ]` where `Ψ` lists the
/// deleted components; the initial symbol becomes `S[]`.
pub fn to_nondeleting(g: &WeightedMcfg) -> WeightedMcfg {
    to_nondeleting_traced(g).0
}

/// Also returns, per produced rule, the index of the rule of `g` it stems from.
pub fn to_nondeleting_traced(g: &WeightedMcfg) -> (WeightedMcfg, Vec<usize>) {
    let (pruned, kept) = prune_unproductive_traced(g);
    let start = (pruned.initial().to_owned(), BTreeSet::new());
    let mut seen: BTreeSet<(String, BTreeSet<usize>)> = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut rules = Vec::new();
    let mut origin = Vec::new();
    while let Some((a, psi)) = queue.pop_front() {
        for &r in pruned.rules_for(&a) {
            let p = pruned.production(r);
            let kept_comps: Vec<&Vec<Token>> =
                p.comp.components().iter().enumerate().filter(|(j, _)| !psi.contains(j)).map(|(_, c)| c).collect();
            let used: BTreeSet<(usize, usize)> = kept_comps
                .iter()
                .flat_map(|c| c.iter())
                .filter_map(|t| match t {
                    Token::Var { arg, comp } => Some((*arg, *comp)),
                    _ => None,
                })
                .collect();
            let mut rhs = Vec::new();
            let mut renumber: HashMap<(usize, usize), usize> = HashMap::new();
            for (i, (b, &s)) in p.rhs.iter().zip(p.comp.arg_sorts()).enumerate() {
                let child_psi: BTreeSet<usize> = (0..s).filter(|j| !used.contains(&(i, *j))).collect();
                let mut next = 0;
                for j in (0..s).filter(|j| used.contains(&(i, *j))) {
                    renumber.insert((i, j), next);
                    next += 1;
                }
                rhs.push(psi_name(b, &child_psi));
                if seen.insert((b.clone(), child_psi.clone())) {
                    queue.push_back((b.clone(), child_psi));
                }
            }
            let components = kept_comps
                .into_iter()
                .map(|c| {
                    c.iter()
                        .map(|t| match t {
                            Token::Var { arg, comp } => Token::Var { arg: *arg, comp: renumber[&(*arg, *comp)] },
                            other => other.clone(),
                        })
                        .collect()
                })
                .collect();
            rules.push(RuleSpec {
                id: psi_rule_id(&p.id, &psi),
                lhs: psi_name(&a, &psi),
                components,
                rhs,
                weight: pruned.weight(r).clone(),
            });
            origin.push(kept[r]);
        }
    }
    let terms: Vec<String> = g.terminals().iter().cloned().collect();
    let initial = psi_name(g.initial(), &BTreeSet::new());
    let nd = WeightedMcfg::new(g.algebra().clone(), &initial, rules, &[], &terms)
        .expect("normal form is well-formed")
        .with_lattice_source(g.lattice_source().map(str::to_owned));
    (nd, origin)
}

/// Renames repeated right-hand side nonterminals: the k-th occurrence of `B`
/// in one rule becomes `B#k`, whose rules are copies of `B`'s with ids `id#k`.
pub fn make_rhs_distinct(g: &WeightedMcfg) -> WeightedMcfg {
    make_rhs_distinct_traced(g).0
}

pub fn make_rhs_distinct_traced(g: &WeightedMcfg) -> (WeightedMcfg, Vec<usize>) {
    let mut rules = g.rule_specs();
    let mut origin: Vec<usize> = (0..rules.len()).collect();
    let mut copies: BTreeSet<(String, usize)> = BTreeSet::new();
    for r in rules.iter_mut() {
        let mut count: HashMap<String, usize> = HashMap::new();
        for b in r.rhs.iter_mut() {
            let k = count.entry(b.clone()).or_insert(0);
            *k += 1;
            if *k > 1 {
                copies.insert((b.clone(), *k));
                *b = format!("{b}#{k}");
            }
        }
    }
    let originals = rules.clone();
    for (b, k) in copies {
        for (i, r) in originals.iter().enumerate().filter(|(_, r)| r.lhs == b) {
            rules.push(RuleSpec { id: format!("{}#{k}", r.id), lhs: format!("{b}#{k}"), ..r.clone() });
            origin.push(i);
        }
    }
    (rebuild(g, rules), origin)
}

/// Turns every sort-0 nonterminal into sort 1 with an empty component and
/// threads it into the first component of its parents, so that every rule
/// has a component to carry a marker. Yields are unchanged.
pub fn lift_fanout_zero(g: &WeightedMcfg) -> WeightedMcfg {
    let zero: BTreeSet<&str> = g.nonterminals().iter().filter(|(_, s)| *s == 0).map(|(n, _)| n.as_str()).collect();
    if zero.is_empty() {
        return g.clone();
    }
    let rules = g
        .rule_specs()
        .into_iter()
        .map(|mut r| {
            if r.components.is_empty() {
                r.components.push(Vec::new());
            }
            for (i, b) in r.rhs.iter().enumerate() {
                if zero.contains(b.as_str()) {
                    r.components[0].push(Token::Var { arg: i, comp: 0 });
                }
            }
            r
        })
        .collect();
    rebuild(g, rules)
}

/// `G_𝔹`, `wts_G` and the production correspondence (by index).
#[derive(Clone, Debug)]
pub struct SeparationResult {
    pub source: WeightedMcfg,
    pub boolean_grammar: WeightedMcfg,
    /// Marker name ↦ (rule index, zero-based component).
    pub markers: BTreeMap<String, (usize, usize)>,
    pub weight_hom: WeightedHom,
}

pub fn marker(id: &str, component: usize) -> String {
    format!("{id}^{}", component + 1)
}

/// Separates the weights of a non-deleting grammar.
pub fn boolean_part(g: &WeightedMcfg) -> Result<SeparationResult, TransformError> {
    let mut markers = BTreeMap::new();
    for (i, p) in g.productions().iter().enumerate() {
        if !p.comp.is_nondeleting() {
            return Err(TransformError::Deleting(p.id.clone()));
        }
        if p.comp.fanout() == 0 {
            return Err(TransformError::FanoutZero(p.id.clone()));
        }
        for j in 0..p.comp.fanout() {
            let m = marker(&p.id, j);
            if g.terminals().contains(&m) || markers.insert(m.clone(), (i, j)).is_some() {
                return Err(TransformError::MarkerCollision(m));
            }
        }
    }
    let bool_one = Weight::one(&Bimonoid::Boolean);
    let rules: Vec<RuleSpec> = g
        .productions()
        .iter()
        .map(|p| RuleSpec {
            id: p.id.clone(),
            lhs: p.lhs.clone(),
            components: p
                .comp
                .components()
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let mut out = vec![Token::Terminal(marker(&p.id, j))];
                    out.extend(c.iter().cloned());
                    out
                })
                .collect(),
            rhs: p.rhs.clone(),
            weight: bool_one.clone(),
        })
        .collect();
    let sorts: Vec<(String, usize)> = g.nonterminals().to_vec();
    let mut gamma: Vec<String> = g.terminals().iter().cloned().collect();
    gamma.extend(markers.keys().cloned());
    let boolean_grammar = WeightedMcfg::new(Bimonoid::Boolean, g.initial(), rules, &sorts, &gamma)?;

    let alg = g.algebra();
    let one = Weight::one(alg);
    let mut table = BTreeMap::new();
    for t in g.terminals() {
        table.insert(t.clone(), Monomial::new(vec![t.clone()], one.clone()));
    }
    for (m, &(rule, j)) in &markers {
        let w = if j == 0 { g.weight(rule).clone() } else { one.clone() };
        table.insert(m.clone(), Monomial::new(Vec::new(), w));
    }
    let weight_hom = WeightedHom::new(alg.clone(), gamma.into_iter().collect(), g.terminals().clone(), table)
        .expect("weight homomorphism is total");
    Ok(SeparationResult { source: g.clone(), boolean_grammar, markers, weight_hom })
}

impl SeparationResult {
    /// `(yield ∘ f)(d)`: the `G_𝔹` word of a source derivation.
    pub fn encode(&self, d: &Derivation) -> Result<Word, GrammarError> {
        self.source.check(d, Some(self.source.initial()))?;
        Ok(self.boolean_grammar.eval(d).pop().expect("initial has sort 1"))
    }

    /// Decodes a word of `L(G_𝔹)` into its source derivation.
    pub fn to_deriv(&self, w: &[String]) -> Result<Derivation, TransformError> {
        to_deriv(self, w)
    }
}

/// Recovers the source derivation of a `G_𝔹` word by following markers.
pub fn to_deriv(sep: &SeparationResult, w: &[String]) -> Result<Derivation, TransformError> {
    struct Node {
        rule: usize,
        children: Vec<Option<usize>>,
        visited: Vec<bool>,
    }
    struct Decoder<'a> {
        sep: &'a SeparationResult,
        w: &'a [String],
        cursor: usize,
        nodes: Vec<Node>,
    }
    impl Decoder<'_> {
        fn err(&self, msg: String) -> TransformError {
            TransformError::Decode { pos: self.cursor, msg }
        }

        // descend(π, j): `node` is None for a fresh position expecting `nt`
        fn descend(&mut self, node: Option<usize>, nt: &str, j: usize) -> Result<usize, TransformError> {
            let sym = self.w.get(self.cursor).ok_or_else(|| self.err(format!("word ends, expected a marker of {nt}")))?;
            let &(rule, comp) =
                self.sep.markers.get(sym).ok_or_else(|| self.err(format!("`{sym}` is not a marker")))?;
            let g = &self.sep.source;
            let p = g.production(rule);
            if p.lhs != nt {
                return Err(self.err(format!("marker `{sym}` belongs to {}, expected a rule of {nt}", p.lhs)));
            }
            if comp != j {
                return Err(self.err(format!("marker `{sym}` opens component {}, expected {}", comp + 1, j + 1)));
            }
            let id = match node {
                None => {
                    self.nodes.push(Node {
                        rule,
                        children: vec![None; p.rhs.len()],
                        visited: vec![false; p.comp.fanout()],
                    });
                    self.nodes.len() - 1
                }
                Some(id) => {
                    if self.nodes[id].rule != rule {
                        let first = &g.production(self.nodes[id].rule).id;
                        return Err(self.err(format!("marker `{sym}` disagrees with rule {first} chosen earlier")));
                    }
                    id
                }
            };
            if std::mem::replace(&mut self.nodes[id].visited[j], true) {
                return Err(self.err(format!("component {} of {} visited twice", j + 1, p.id)));
            }
            self.cursor += 1;
            for tok in &p.comp.components()[j] {
                match tok {
                    Token::Terminal(t) => {
                        if self.w.get(self.cursor) != Some(t) {
                            let found = self.w.get(self.cursor).map_or("end of word".to_owned(), |s| format!("`{s}`"));
                            return Err(self.err(format!("expected terminal `{t}` of {}, found {found}", p.id)));
                        }
                        self.cursor += 1;
                    }
                    Token::Var { arg, comp } => {
                        let child = self.nodes[id].children[*arg];
                        let got = self.descend(child, &p.rhs[*arg], *comp)?;
                        self.nodes[id].children[*arg] = Some(got);
                    }
                }
            }
            Ok(id)
        }

        fn build(&self, id: usize) -> Derivation {
            let n = &self.nodes[id];
            Derivation {
                rule: n.rule,
                children: n.children.iter().map(|c| self.build(c.expect("checked complete"))).collect(),
            }
        }
    }

    let mut dec = Decoder { sep, w, cursor: 0, nodes: Vec::new() };
    let root = dec.descend(None, sep.source.initial(), 0)?;
    if dec.cursor != w.len() {
        return Err(dec.err("trailing symbols after the derivation".into()));
    }
    for n in &dec.nodes {
        let id = &sep.source.production(n.rule).id;
        if n.visited.iter().any(|v| !v) || n.children.iter().any(Option::is_none) {
            return Err(TransformError::Decode { pos: w.len(), msg: format!("rule {id} is not fully expanded") });
        }
    }
    Ok(dec.build(root))
}

/// The preprocessing chain applied before separation: pruning of
/// unproductive rules, the non-deleting normal form, rhs-distinctness and
/// fan-out-0 lifting.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub source: WeightedMcfg,
    pub prepared: WeightedMcfg,
    /// Per prepared rule, the source rule it stems from.
    pub origin: Vec<usize>,
    pub separation: SeparationResult,
    lift_index: HashMap<(String, usize), usize>,
}

impl Pipeline {
    pub fn new(g: &WeightedMcfg) -> Result<Pipeline, TransformError> {
        let (pruned, o0) = prune_unproductive_traced(g);
        let (nd, o1) = to_nondeleting_traced(&pruned);
        let (distinct, o2) = make_rhs_distinct_traced(&nd);
        let prepared = lift_fanout_zero(&distinct);
        let origin: Vec<usize> = o2.iter().map(|&i| o0[o1[i]]).collect();
        let separation = boolean_part(&prepared)?;
        let lift_index = (0..prepared.productions().len())
            .map(|i| ((prepared.production(i).lhs.clone(), origin[i]), i))
            .collect();
        Ok(Pipeline { source: g.clone(), prepared, origin, separation, lift_index })
    }

    /// Maps a derivation of the prepared grammar back to the source.
    pub fn lower(&self, d: &Derivation) -> Derivation {
        d.map(&|r| self.origin[r])
    }

    /// Maps a source derivation from the initial symbol to the prepared grammar.
    pub fn lift(&self, d: &Derivation) -> Result<Derivation, GrammarError> {
        self.source.check(d, Some(self.source.initial()))?;
        fn go(p: &Pipeline, d: &Derivation, nt: &str) -> Result<Derivation, GrammarError> {
            let r = *p.lift_index.get(&(nt.to_owned(), d.rule)).ok_or_else(|| GrammarError::IllSorted {
                pos: "ε".into(),
                msg: format!("no prepared rule of {nt} for {}", p.source.production(d.rule).id),
            })?;
            let rhs = &p.prepared.production(r).rhs;
            let children = d.children.iter().zip(rhs).map(|(c, b)| go(p, c, b)).collect::<Result<_, _>>()?;
            Ok(Derivation { rule: r, children })
        }
        go(self, d, self.prepared.initial())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, word};

    const ABCD: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/abcd.mcfg"));

    #[test]
    fn pruning() {
        let g = parse_grammar(ABCD).unwrap();
        assert_eq!(prune_unproductive(&g).productions(), g.productions());
        let extra = format!("{ABCD}rule c: C -> [x1.1](C)\nrule s: S -> [x1.1 x2.1](A, C)\n");
        let pruned = prune_unproductive(&parse_grammar(&extra).unwrap());
        assert_eq!(pruned.productions().len(), 5);
        assert!(pruned.sort_of("C").is_none());
        let dead = parse_grammar("start S\nrule s: S -> [x1.1](C)\nrule c: C -> [x1.1](C)").unwrap();
        assert!(is_empty_language(&dead));
        assert!(prune_unproductive(&dead).rules_for("S").is_empty());
    }

    #[test]
    fn nondeleting_form_of_small_grammar() {
        let g = parse_grammar("start S\nrule s: S -> [x1.1](A)\nrule a: A -> ['a' ; 'b']()").unwrap();
        let nd = to_nondeleting(&g);
        assert!(nd.is_nondeleting());
        assert_eq!(nd.initial(), "S[]");
        assert_eq!(nd.sort_of("A[2]"), Some(1));
        let p = nd.production(nd.production_index("a[2]").unwrap());
        assert_eq!(p.lhs, "A[2]");
        assert_eq!(p.comp.to_string(), "['a']");
    }

    #[test]
    fn nondeleting_form_of_example_is_a_renaming() {
        let g = parse_grammar(ABCD).unwrap();
        let nd = to_nondeleting(&g);
        assert_eq!(nd.productions().len(), 5);
        for (i, q) in g.productions().iter().enumerate() {
            let k = nd.production_index(&q.id).unwrap();
            let p = nd.production(k);
            assert_eq!(p.lhs, format!("{}[]", q.lhs));
            assert_eq!(p.comp, q.comp);
            assert_eq!(nd.weight(k), g.weight(i));
        }
    }

    #[test]
    fn rhs_distinct() {
        let g = parse_grammar("start S\nrule s: S -> [x1.1 x2.1](A, A)\nrule a: A -> ['a']()").unwrap();
        let d = make_rhs_distinct(&g);
        assert_eq!(d.production(0).rhs, vec!["A".to_string(), "A#2".to_string()]);
        assert_eq!(d.production(d.production_index("a#2").unwrap()).lhs, "A#2");
        assert_eq!(make_rhs_distinct(&d).to_string(), d.to_string());
        assert_eq!(d.semantics(&word("a a")).unwrap().weight, Weight::one(&Bimonoid::Boolean));
        let ex = parse_grammar(ABCD).unwrap();
        assert_eq!(make_rhs_distinct(&ex).productions(), ex.productions());
    }

    #[test]
    fn separation_of_the_example() {
        let g = parse_grammar(ABCD).unwrap();
        let sep = boolean_part(&g).unwrap();
        let gb = &sep.boolean_grammar;
        assert_eq!(gb.terminals().len(), 13);
        let r2 = gb.production(1);
        assert_eq!(r2.comp.to_string(), "['r2^1' 'a' x1.1 ; 'r2^2' 'c' x1.2]");
        assert_eq!(gb.production(3).comp.to_string(), "['r4^1' ; 'r4^2']");
        assert_eq!(sep.weight_hom.image_of("r2^1").unwrap().to_string(), "(1/2).ε");
        assert_eq!(sep.weight_hom.image_of("a").unwrap().to_string(), "(1).a");
        assert_eq!(sep.weight_hom.image_of("r2^2").unwrap().to_string(), "(1).ε");
    }

    #[test]
    fn to_deriv_example() {
        let g = parse_grammar(ABCD).unwrap();
        let sep = boolean_part(&g).unwrap();
        let w = word("r1^1 r2^1 a r4^1 r5^1 r2^2 c r4^2 r5^2");
        let d = sep.to_deriv(&w).unwrap();
        assert_eq!(d.term(&g), "r1(r2(r4), r5)");
        assert_eq!(sep.encode(&d).unwrap(), w);
        assert_eq!(sep.weight_hom.apply(&w).unwrap().to_string(), "(1/6).a c");
        let bad = word("r1^1 r4^1 r5^1 r4^2 r5^2 a");
        assert!(matches!(sep.to_deriv(&bad), Err(TransformError::Decode { .. })));
        let mixed = word("r1^1 r2^1 a r4^1 r5^1 r4^2 r5^2");
        assert!(sep.to_deriv(&mixed).is_err());
    }

    #[test]
    fn boolean_part_rejects_deleting_rules() {
        let g = parse_grammar("start S\nrule s: S -> [x1.1](A)\nrule a: A -> ['a' ; 'b']()").unwrap();
        assert!(matches!(boolean_part(&g), Err(TransformError::Deleting(_))));
        let clash = parse_grammar("start S\nrule s: S -> ['s^1']()").unwrap();
        assert!(matches!(boolean_part(&clash), Err(TransformError::MarkerCollision(_))));
    }

    #[test]
    fn pipeline_lifts_and_lowers() {
        let g = parse_grammar("start S\nrule s: S -> [x1.1 x2.1](A, A)\nrule t: S -> ['t'](A, A)\nrule a: A -> ['a' ; 'b']()").unwrap();
        let p = Pipeline::new(&g).unwrap();
        for d in g.enumerate_derivations("S", 3).unwrap() {
            let up = p.lift(&d).unwrap();
            assert_eq!(p.lower(&up), d);
            assert_eq!(p.prepared.eval(&up), g.eval(&d));
        }
    }
}
