mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use wmcfg::dyck::{dyck_words, BracketAlphabet, DyckError};
use wmcfg::verify::{check_dyck_oracle, words_up_to};
use wmcfg::{word, Word};

fn linked() -> BracketAlphabet {
    common::cells("linked.cells")
}

fn members(ba: &BracketAlphabet, max_len: usize) -> Vec<Word> {
    dyck_words(ba, max_len).into_iter().filter(|w| ba.is_member(w).unwrap()).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn reference_verdicts() {
    let ba = linked();
    assert!(ba.is_dyck(&word("[[ ( ) ]] < > ( )")).unwrap());
    assert!(!ba.is_dyck(&word("( [[ ) ]] < > ( )")).unwrap());
    assert!(ba.is_member(&word("[[ ( ) ]] [ < > ]")).unwrap());
    assert!(ba.is_member(&word("( ) < >")).unwrap());
    assert!(!ba.is_member(&word("[[ ( ) ]] < [ ] >")).unwrap());
    assert!(ba.is_member(&word("[[ ( ) ]] [ ] [[ ]] [ < > ]")).unwrap());
}

#[test]
fn members_are_dyck_words() {
    let ba = linked();
    assert!(ba.is_member(&[]).unwrap());
    for w in words_up_to(&ba.symbols(), 4) {
        if ba.is_member(&w).unwrap() {
            assert!(ba.is_dyck(&w).unwrap(), "{w:?}");
        }
    }
}

#[test]
fn foreign_symbols_are_errors() {
    let ba = linked();
    assert!(matches!(ba.is_member(&word("( x )")), Err(DyckError::Foreign(_))));
    assert!(matches!(ba.split(&word("( ( )")), Err(DyckError::NotDyck(_))));
}

#[test]
fn concatenation_closure() {
    let ba = linked();
    let ms = members(&ba, 6);
    for u in &ms {
        for v in &ms {
            let uv: Word = u.iter().chain(v).cloned().collect();
            assert!(ba.is_member(&uv).unwrap(), "{uv:?}");
        }
    }
}

#[test]
fn permutation_closure_of_split_pieces() {
    let ba = linked();
    let ms = members(&ba, 8);
    let split: Vec<Vec<Word>> = ms.iter().map(|w| ba.split(w).unwrap()).collect();
    let mut tried = 0;
    for (i, u) in split.iter().enumerate() {
        for v in split.iter().skip(i) {
            let pieces: Vec<&Word> = u.iter().chain(v).collect();
            if pieces.len() > 5 || pieces.len() < 2 || pieces.iter().map(|p| p.len()).sum::<usize>() > 10 {
                continue;
            }
            for perm in permutations(pieces.len()) {
                let w: Word = perm.iter().flat_map(|&k| pieces[k].iter().cloned()).collect();
                assert!(ba.is_member(&w).unwrap(), "{w:?}");
                tried += 1;
            }
        }
    }
    assert!(tried > 1000, "{tried}");
}

#[test]
fn singleton_cells_collapse_to_dyck() {
    let one = BracketAlphabet::singletons(vec!["a".into()], None).unwrap();
    let two = BracketAlphabet::singletons(vec!["a".into(), "b".into()], None).unwrap();
    let four = common::cells("singletons.cells");
    for (ba, all_up_to) in [(&one, 10), (&two, 8), (&four, 5)] {
        for w in words_up_to(&ba.symbols(), all_up_to) {
            assert_eq!(ba.is_member(&w).unwrap(), ba.is_dyck(&w).unwrap(), "{w:?}");
        }
        for w in dyck_words(ba, 10) {
            assert!(ba.is_member(&w).unwrap(), "{w:?}");
        }
    }
}

#[test]
fn split_inverts_concatenation() {
    let ba = linked();
    for w in dyck_words(&ba, 8) {
        let pieces = ba.split(&w).unwrap();
        let glued: Word = pieces.concat();
        assert_eq!(glued, w);
        for p in &pieces {
            assert!(!p.is_empty());
            assert_eq!(ba.split(p).unwrap(), vec![p.clone()]);
        }
        assert_eq!(ba.split(&glued).unwrap(), pieces);
    }
}

#[test]
fn oracle_on_the_linked_example() {
    let r = check_dyck_oracle(&linked(), 2, 8).unwrap();
    assert!(r.passed(), "{r}");
}

#[test]
fn oracle_on_singletons_equals_dyck() {
    let ba = common::cells("singletons.cells");
    let r = check_dyck_oracle(&ba, 2, 8).unwrap();
    assert!(r.passed(), "{r}");
    // rank 1 cannot concatenate two A1 subtrees
    let narrow = check_dyck_oracle(&ba, 1, 8).unwrap();
    assert!(!narrow.passed());
    let ms: BTreeSet<Word> = members(&ba, 8).into_iter().collect();
    let dyck: BTreeSet<Word> = dyck_words(&ba, 8).into_iter().collect();
    assert_eq!(ms, dyck);
}

#[test]
fn oracle_on_the_empty_alphabet() {
    let ba = BracketAlphabet::singletons(vec![], None).unwrap();
    let r = check_dyck_oracle(&ba, 1, 8).unwrap();
    assert!(r.passed(), "{r}");
    assert_eq!(members(&ba, 8), vec![Word::new()]);
}

#[test]
fn partition_file_round_trip() {
    let ba = linked();
    assert_eq!(BracketAlphabet::parse(&ba.to_string()).unwrap(), ba);
    assert_eq!(ba.dimension(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_words_member_implies_dyck(w in proptest::collection::vec(
        proptest::sample::select(vec!["(", ")", "<", ">", "[", "]", "[[", "]]"]), 0..12)) {
        let ba = linked();
        let w: Word = w.into_iter().map(str::to_owned).collect();
        if ba.is_member(&w).unwrap() {
            prop_assert!(ba.is_dyck(&w).unwrap());
        }
    }
}
