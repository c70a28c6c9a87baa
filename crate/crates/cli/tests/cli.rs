use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn wmcfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmcfg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn weight_of_a_c_and_of_the_empty_word() {
    let g = data("abcd.mcfg");
    let o = wmcfg(&["weight", &g, "--", "a", "c"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1/6\n");
    let o = wmcfg(&["weight", &g, "--"]);
    assert_eq!(stdout(&o), "1/3\n");
    let o = wmcfg(&["weight", &g, "--", "a c"]);
    assert_eq!(stdout(&o), "1/6\n");
}

#[test]
fn membership_exit_codes() {
    let cells = data("linked.cells");
    let o = wmcfg(&["dyck-member", &cells, "--", "[[", "(", ")", "]]", "[", "<", ">", "]"]);
    assert_eq!(o.status.code(), Some(0));
    let o = wmcfg(&["dyck-member", &cells, "--", "[[ ( ) ]] < [ ] >"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wmcfg(&["dyck-member", &cells, "--", "[[ x ]]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn membership_trace_is_printed() {
    let o = wmcfg(&["dyck-member", "--trace", &data("linked.cells"), "--", "[[ ( ) ]] [ < > ]"]);
    let text = stdout(&o);
    assert!(text.starts_with("isMember([[ ( ) ]] [ < > ])\nl.4: σ1 = [[, σ2 = [, u1 = ( ), u2 = < >\n"));
    assert!(text.ends_with("l.11: return 1\nmember\n"));
}

#[test]
fn split_prints_one_factor_per_line() {
    let o = wmcfg(&["split", &data("linked.cells"), "--", "[[ ( ) ]] [ < > ]"]);
    assert_eq!(stdout(&o), "[[ ( ) ]]\n[ < > ]\n");
}

#[test]
fn parse_errors_exit_with_two() {
    assert_eq!(wmcfg(&["weight", "missing.mcfg", "--", "a"]).status.code(), Some(2));
    assert_eq!(wmcfg(&["no-such-command"]).status.code(), Some(2));
    let o = wmcfg(&["separate", &data("deleting1.mcfg")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--normalize"));
}

#[test]
fn bracket_round_trip_through_the_binary() {
    let g = data("abcd.mcfg");
    let o = wmcfg(&["to-brackets", &g, "r1(r2(r4), r5)"]);
    assert_eq!(o.status.code(), Some(0));
    let brackets = stdout(&o);
    let o = wmcfg(&["from-brackets", &g, "--", brackets.trim()]);
    assert_eq!(stdout(&o), "ε r1\n1 r2\n1.1 r4\n2 r5\n");
    let o = wmcfg(&["from-brackets", &g, "--", "[r1.1 ]r1.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn to_deriv_decodes_the_marker_word() {
    let o = wmcfg(&["to-deriv", &data("abcd.mcfg"), "--", "r1^1 r2^1 a r4^1 r5^1 r2^2 c r4^2 r5^2"]);
    assert_eq!(stdout(&o), "ε r1\n1 r2\n1.1 r4\n2 r5\n");
}

#[test]
fn separate_lists_marker_weights() {
    let o = wmcfg(&["separate", &data("abcd.mcfg")]);
    let text = stdout(&o);
    assert!(text.contains("rule r2: A -> ['r2^1' 'a' x1.1 ; 'r2^2' 'c' x1.2](A)"));
    assert!(text.contains("r2^1 -> '' @ 1/2"));
}

#[test]
fn decompose_prints_all_three_parts() {
    let text = stdout(&wmcfg(&["decompose", &data("abcd.mcfg")]));
    for part in ["# brackets", "cell [r2.1 [r2.2", "# automaton", "initial start", "# projection", "[t:r2^1.1 -> '' @ 1/2"] {
        assert!(text.contains(part), "{part}");
    }
}

#[test]
fn mdg_over_one_symbol() {
    let text = stdout(&wmcfg(&["mdg", "--rank", "1", "--", "d:1"]));
    assert!(text.contains("rule ii:d: A1 -> ['d[1]' x1.1 '~d[1]'](A1)"));
    assert_eq!(wmcfg(&["mdg", "--rank", "1", "--", "d:2"]).status.code(), Some(2));
}

#[test]
fn verify_exit_codes_and_json() {
    let g = data("anbmanbm.mcfg");
    let o = wmcfg(&["--json", "verify", &g, "--max-len", "4", "--bijection-height", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["inputs"]["max_len"], 4);
    assert_eq!(v["result"][0]["status"], "pass");
    assert_eq!(v["result"][1]["property"], "derivation-bracket-bijection");
    let o = wmcfg(&["verify", &data("abcd.mcfg"), "--max-len", "4", "--bracket-bound", "20"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn truncated_weight_exits_with_three() {
    let o = wmcfg(&["weight", &data("abcd.mcfg"), "--max-height", "1", "--", "a c"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn json_envelope_for_weight() {
    let o = wmcfg(&["weight", "--json", &data("abcd.mcfg"), "--", "a c"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "weight");
    assert_eq!(v["inputs"]["word"], serde_json::json!(["a", "c"]));
    assert_eq!(v["result"]["weight"], "1/6");
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        vec!["decompose".to_string(), data("anbmanbm.mcfg")],
        vec!["derivations".to_string(), data("anbn.mcfg"), "--".into(), "a a b b".into()],
        vec!["--json".to_string(), "verify".into(), data("anbn.mcfg"), "--max-len".into(), "4".into()],
    ] {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(wmcfg(&a).stdout, wmcfg(&a).stdout, "{args:?}");
    }
}
