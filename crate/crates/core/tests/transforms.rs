mod common;

use std::collections::BTreeSet;

use wmcfg::grammar::Growth;
use wmcfg::transform::{boolean_part, make_rhs_distinct, prune_unproductive, to_nondeleting, Pipeline};
use wmcfg::verify::words_up_to;
use wmcfg::{parse_grammar, word, Derivation, WeightedMcfg};

fn assert_same_semantics(a: &WeightedMcfg, b: &WeightedMcfg, max_len: usize) {
    let ta = a.semantics_table(max_len).unwrap();
    let tb = b.semantics_table(max_len).unwrap();
    assert!(!ta.truncated && !tb.truncated);
    let sigma: BTreeSet<String> = a.terminals().union(b.terminals()).cloned().collect();
    for w in words_up_to(&sigma, max_len) {
        assert_eq!(ta.get(&w), tb.get(&w), "{w:?}");
    }
}

#[test]
fn normal_form_of_deleting_grammars() {
    for name in ["deleting1.mcfg", "deleting2.mcfg"] {
        let g = common::grammar(name);
        assert!(!g.is_nondeleting(), "{name}");
        let nd = to_nondeleting(&g);
        assert!(nd.is_nondeleting(), "{name}");
        assert!(nd.fanout() <= g.fanout(), "{name}");
        assert_eq!(nd.initial(), format!("{}[]", g.initial()));
        assert_same_semantics(&g, &nd, 6);
    }
}

#[test]
fn normal_form_keeps_rule_weights() {
    let g = common::grammar("deleting2.mcfg");
    let nd = to_nondeleting(&g);
    for (i, p) in nd.productions().iter().enumerate() {
        let base = p.id.split('[').next().unwrap();
        let src = g.production_index(base).unwrap();
        assert_eq!(nd.weight(i), g.weight(src), "{}", p.id);
    }
}

#[test]
fn rhs_distinct_preserves_semantics() {
    let g = parse_grammar(
        "algebra probability\nstart S\n\
         rule s: S -> [x1.1 x2.1](A, A) @ 1\n\
         rule a: A -> ['a']() @ 1/2\n\
         rule b: A -> ['b' x1.1](A) @ 1/4\n",
    )
    .unwrap();
    let d = make_rhs_distinct(&g);
    assert!(d.productions().iter().all(|p| p.rhs.iter().collect::<BTreeSet<_>>().len() == p.rhs.len()));
    assert_same_semantics(&g, &d, 6);
    assert_eq!(make_rhs_distinct(&d).to_string(), d.to_string());
}

#[test]
fn pruning_reports_the_empty_language() {
    let g = parse_grammar("algebra probability\nstart S\nrule s: S -> [x1.1](C) @ 1\nrule c: C -> [x1.1](C) @ 1\n").unwrap();
    let p = prune_unproductive(&g);
    assert!(p.productions().is_empty());
    let t = g.semantics_table(4).unwrap();
    assert!(t.weights.is_empty());
}

#[test]
fn separation_weight_identity() {
    for name in ["abcd.mcfg", "anbn.mcfg", "anbmanbm.mcfg"] {
        let g = common::grammar(name);
        let sep = boolean_part(&g).unwrap();
        for d in g.enumerate_derivations(g.initial(), 4).unwrap() {
            let u = sep.encode(&d).unwrap();
            let m = sep.weight_hom.apply(&u).unwrap();
            assert_eq!(m.word(), &g.yield_of(&d).unwrap()[0], "{name}");
            assert_eq!(m.weight(), &g.derivation_weight(&d).unwrap(), "{name}");
        }
    }
}

#[test]
fn to_deriv_round_trips_up_to_height_four() {
    for name in ["abcd.mcfg", "anbn.mcfg", "anbmanbm.mcfg", "deleting1.mcfg", "deleting2.mcfg"] {
        let p = Pipeline::new(&common::grammar(name)).unwrap();
        let src = &p.source;
        let ds = src.enumerate_derivations(src.initial(), 4).unwrap();
        assert!(!ds.is_empty(), "{name}");
        let mut seen = BTreeSet::new();
        for d in ds {
            let lifted = p.lift(&d).unwrap();
            assert_eq!(p.lower(&lifted), d);
            let u = p.separation.encode(&lifted).unwrap();
            assert!(seen.insert(u.clone()), "{name}: encoding not injective");
            assert_eq!(p.separation.to_deriv(&u).unwrap(), lifted, "{name}");
        }
    }
}

#[test]
fn to_deriv_rejects_inconsistent_markers() {
    let g = common::grammar("abcd.mcfg");
    let sep = boolean_part(&g).unwrap();
    let d = sep.to_deriv(&word("r1^1 r2^1 a r4^1 r5^1 r2^2 c r4^2 r5^2")).unwrap();
    assert_eq!(d, Derivation::node(0, vec![Derivation::node(1, vec![Derivation::leaf(3)]), Derivation::leaf(4)]));
    assert!(sep.to_deriv(&word("r1^1 r4^1")).is_err());
    assert!(sep.to_deriv(&word("r1^1 r2^1 a r4^1 r5^1 r2^2 c r4^2")).is_err());
    assert!(sep.to_deriv(&word("r1^1 r2^1 a r4^1 r5^1 r4^2 c r2^2 r5^2")).is_err());
}

#[test]
fn weight_separation_image_matches_semantics() {
    let g = common::grammar("abcd.mcfg");
    let sep = boolean_part(&g).unwrap();
    let lb = sep.boolean_grammar.semantics_table(20).unwrap();
    assert!(!lb.truncated);
    let image = sep.weight_hom.image(lb.weights.keys()).unwrap();
    let direct = g.semantics_table(6).unwrap();
    for w in words_up_to(g.terminals(), 6) {
        assert_eq!(image.get(&w), direct.get(&w), "{w:?}");
    }
}

#[test]
fn growth_analysis_of_the_test_grammars() {
    for name in ["abcd.mcfg", "anbn.mcfg", "anbmanbm.mcfg"] {
        assert!(!Growth::analyze(&common::grammar(name)).pumpable(), "{name}");
    }
    let cyclic = parse_grammar("algebra probability\nstart S\nrule u: S -> [x1.1](S) @ 1/2\nrule a: S -> ['a']() @ 1/2\n").unwrap();
    assert!(Growth::analyze(&cyclic).pumpable());
    assert!(cyclic.semantics(&word("a")).unwrap().truncated);
}
