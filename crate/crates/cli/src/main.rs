use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};
use wmcfg::dyck::{multiple_dyck_grammar, partition_grammar, BracketAlphabet, MdgOptions};
use wmcfg::exec::Exec;
use wmcfg::generator::CsDecomposition;
use wmcfg::grammar::{load_grammar, show_word, Growth};
use wmcfg::transform::{boolean_part, to_nondeleting, SeparationResult, TransformError};
use wmcfg::verify::{check_bijection_with, check_theorem_with, CheckOptions, Report, Status};
use wmcfg::{Derivation, WeightedMcfg, Word};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const INVALID: u8 = 2;
const TRUNCATED: u8 = 3;

#[derive(Parser)]
#[command(name = "wmcfg", version, about = "Weighted MCFGs, multiple Dyck languages and their bracket decomposition")]
struct Cli {
    /// Print a JSON envelope {command, inputs, result} instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WordArg {
    /// Tokens after `--`; each argument is further split on whitespace.
    #[arg(last = true, allow_hyphen_values = true)]
    tokens: Vec<String>,
}

impl WordArg {
    fn word(&self) -> Word {
        self.tokens.iter().flat_map(|t| t.split_whitespace()).map(str::to_owned).collect()
    }
}

#[derive(Subcommand)]
enum Command {
    /// ⟦G⟧(w), the sum of the weights of all derivations of w.
    Weight {
        grammar: PathBuf,
        /// Derivation height bound; defaults to one that covers every derivation.
        #[arg(long)]
        max_height: Option<usize>,
        #[command(flatten)]
        word: WordArg,
    },
    /// Every derivation of w with its weight, in canonical order.
    Derivations {
        grammar: PathBuf,
        #[arg(long)]
        max_height: Option<usize>,
        #[command(flatten)]
        word: WordArg,
    },
    /// The unweighted marker grammar and the weight homomorphism.
    Separate {
        grammar: PathBuf,
        /// Apply the non-deleting normal form first.
        #[arg(long)]
        normalize: bool,
    },
    /// Decodes a word of the marker grammar into a derivation listing.
    ToDeriv {
        grammar: PathBuf,
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        word: WordArg,
    },
    /// Bracket alphabet with partition, generator automaton and projection.
    Decompose { grammar: PathBuf },
    /// Encodes a derivation (listing or term, file or `-` for stdin) as brackets.
    ToBrackets { grammar: PathBuf, derivation: String },
    /// Decodes a bracket word into a derivation listing.
    FromBrackets {
        grammar: PathBuf,
        #[command(flatten)]
        word: WordArg,
    },
    /// Membership in the congruence multiple Dyck language of a partition file.
    DyckMember {
        cells: PathBuf,
        /// Print the call log of the decision procedure.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        word: WordArg,
    },
    /// Splits a Dyck word into its shortest non-empty Dyck factors.
    Split {
        cells: PathBuf,
        #[command(flatten)]
        word: WordArg,
    },
    /// Multiple Dyck grammar over `name:sort` symbols, or over a partition file.
    Mdg {
        /// Rank bound; defaults to max(2, largest sort).
        #[arg(long)]
        rank: Option<usize>,
        /// Use the cells of this partition file as the sorted alphabet.
        #[arg(long)]
        cells: Option<PathBuf>,
        /// Lift the default size guard.
        #[arg(long)]
        allow_large: bool,
        #[command(flatten)]
        symbols: WordArg,
    },
    /// Compares ⟦G⟧ with h(R ∩ mD) on every short word.
    Verify {
        grammar: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        /// Longest bracket word considered; defaults to the exact sufficient bound.
        #[arg(long)]
        bracket_bound: Option<usize>,
        /// Also check the derivation/bracket-word bijection up to this height.
        #[arg(long)]
        bijection_height: Option<usize>,
        #[arg(long)]
        sequential: bool,
    },
}

struct Outcome {
    text: String,
    result: Json,
    code: u8,
}

impl Outcome {
    fn ok(text: String, result: Json) -> Outcome {
        Outcome { text, result, code: OK }
    }
}

type Fallible<T> = Result<T, String>;

fn grammar(path: &Path) -> Fallible<WeightedMcfg> {
    load_grammar(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn cells(path: &Path) -> Fallible<BracketAlphabet> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    BracketAlphabet::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn shown(w: &[String]) -> String {
    if w.is_empty() {
        "ε".into()
    } else {
        show_word(w)
    }
}

fn listing_json(d: &Derivation, g: &WeightedMcfg) -> Json {
    let rows: Vec<Json> = d
        .positions()
        .into_iter()
        .map(|(pos, r)| json!({"position": wmcfg::grammar::show_position(&pos), "rule": g.production(r).id}))
        .collect();
    json!({"term": d.term(g), "listing": rows})
}

fn report_outcome(reports: Vec<Report>) -> Outcome {
    let text: String = reports.iter().map(|r| r.to_string()).collect();
    let code = if reports.iter().any(|r| r.status == Status::Fail) {
        NEGATIVE
    } else if reports.iter().any(|r| r.status == Status::Truncated) {
        TRUNCATED
    } else {
        OK
    };
    let result = serde_json::to_value(&reports).expect("reports serialize");
    Outcome { text, result, code }
}

fn separate(g: &WeightedMcfg) -> Fallible<SeparationResult> {
    boolean_part(g).map_err(|e| match e {
        TransformError::Deleting(_) => format!("{e} (pass --normalize)"),
        e => e.to_string(),
    })
}

fn height_for(g: &WeightedMcfg, n: usize, given: Option<usize>) -> usize {
    given.unwrap_or_else(|| Growth::analyze(g).height_for(n, g.nonterminals().len()))
}

fn run(cmd: &Command) -> Fallible<Outcome> {
    Ok(match cmd {
        Command::Weight { grammar: path, max_height, word } => {
            let g = grammar(path)?;
            let w = word.word();
            let h = height_for(&g, w.len(), *max_height);
            let r = g.weighted_semantics(&w, h).map_err(|e| e.to_string())?;
            let mut out = Outcome::ok(
                format!("{}\n", r.weight),
                json!({"weight": r.weight.to_string(), "derivations": r.derivations, "max_height": h, "truncated": r.truncated}),
            );
            if r.truncated {
                eprintln!("warning: derivations higher than {h} were not enumerated; the weight may be incomplete");
                out.code = TRUNCATED;
            }
            out
        }
        Command::Derivations { grammar: path, max_height, word } => {
            let g = grammar(path)?;
            let w = word.word();
            let h = height_for(&g, w.len(), *max_height);
            let ds = g.derivations_of(&w, h).map_err(|e| e.to_string())?;
            let mut text = String::new();
            let mut rows = Vec::new();
            for d in &ds {
                let mu = g.derivation_weight(d).map_err(|e| e.to_string())?;
                writeln!(text, "{} @ {mu}", d.term(&g)).unwrap();
                let mut row = listing_json(d, &g);
                row["weight"] = json!(mu.to_string());
                rows.push(row);
            }
            Outcome::ok(text, json!({"derivations": rows, "max_height": h}))
        }
        Command::Separate { grammar: path, normalize } => {
            let mut g = grammar(path)?;
            if *normalize {
                g = to_nondeleting(&g);
            }
            let sep = separate(&g)?;
            let mut text = sep.boolean_grammar.to_string();
            text.push_str("\n# weight homomorphism\n");
            text.push_str(&sep.weight_hom.to_string());
            let table: Vec<Json> = sep
                .weight_hom
                .table()
                .iter()
                .map(|(s, m)| json!({"symbol": s, "word": m.word(), "weight": m.weight().to_string()}))
                .collect();
            Outcome::ok(text, json!({"grammar": sep.boolean_grammar.to_string(), "weights": table}))
        }
        Command::ToDeriv { grammar: path, normalize, word } => {
            let mut g = grammar(path)?;
            if *normalize {
                g = to_nondeleting(&g);
            }
            let sep = separate(&g)?;
            let d = sep.to_deriv(&word.word()).map_err(|e| e.to_string())?;
            Outcome::ok(d.listing(&g), listing_json(&d, &g))
        }
        Command::Decompose { grammar: path } => {
            let g = grammar(path)?;
            let d = CsDecomposition::new(&g).map_err(|e| e.to_string())?;
            let text = format!(
                "# brackets\n{}\n# automaton\n{}\n# projection\n{}",
                d.brackets, d.automaton, d.projection
            );
            if d.empty {
                eprintln!("warning: the grammar generates nothing; the automaton accepts nothing");
            }
            Outcome::ok(
                text,
                json!({
                    "brackets": d.brackets.to_string(),
                    "dimension": d.brackets.dimension(),
                    "automaton": d.automaton.to_string(),
                    "deterministic": d.automaton.is_deterministic(),
                    "projection": d.projection.to_string(),
                    "empty": d.empty,
                }),
            )
        }
        Command::ToBrackets { grammar: path, derivation } => {
            let g = grammar(path)?;
            let text = if derivation == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
                s
            } else if Path::new(derivation).is_file() {
                fs::read_to_string(derivation).map_err(|e| format!("{derivation}: {e}"))?
            } else {
                derivation.clone()
            };
            let der = Derivation::parse(&g, &text).map_err(|e| e.to_string())?;
            let d = CsDecomposition::new(&g).map_err(|e| e.to_string())?;
            let u = d.encode_source(&der).map_err(|e| e.to_string())?;
            Outcome::ok(format!("{}\n", shown(&u)), json!({"brackets": u}))
        }
        Command::FromBrackets { grammar: path, word } => {
            let g = grammar(path)?;
            let d = CsDecomposition::new(&g).map_err(|e| e.to_string())?;
            let der = d.decode_source(&word.word()).map_err(|e| e.to_string())?;
            Outcome::ok(der.listing(&g), listing_json(&der, &g))
        }
        Command::DyckMember { cells: path, trace, word } => {
            let ba = cells(path)?;
            let w = word.word();
            let (member, log) = if *trace {
                let (b, t) = ba.is_member_traced(&w).map_err(|e| e.to_string())?;
                (b, Some(t.to_string()))
            } else {
                (ba.is_member(&w).map_err(|e| e.to_string())?, None)
            };
            let mut text = log.clone().unwrap_or_default();
            writeln!(text, "{}", if member { "member" } else { "not a member" }).unwrap();
            Outcome {
                text,
                result: json!({"member": member, "trace": log}),
                code: if member { OK } else { NEGATIVE },
            }
        }
        Command::Split { cells: path, word } => {
            let ba = cells(path)?;
            let pieces = ba.split(&word.word()).map_err(|e| e.to_string())?;
            let text: String = pieces.iter().map(|p| format!("{}\n", show_word(p))).collect();
            Outcome::ok(text, json!({"pieces": pieces}))
        }
        Command::Mdg { rank, cells: path, allow_large, symbols } => {
            let opts = MdgOptions { allow_large: *allow_large, ..MdgOptions::default() };
            if let Some(path) = path {
                let ba = cells(path)?;
                let r = rank.unwrap_or(ba.dimension().max(2));
                let (g, relabel) = partition_grammar(&ba, r, opts).map_err(|e| e.to_string())?;
                let text = format!("{g}\n# relabelling\n{relabel}");
                Outcome::ok(text, json!({"grammar": g.to_string(), "relabelling": relabel.to_string(), "rank": r}))
            } else {
                let mut delta = Vec::new();
                for s in symbols.word() {
                    let (name, sort) = s.rsplit_once(':').ok_or_else(|| format!("expected name:sort, got `{s}`"))?;
                    let sort: usize = sort.parse().map_err(|_| format!("bad sort in `{s}`"))?;
                    delta.push((name.to_owned(), sort));
                }
                let k = delta.iter().map(|(_, s)| *s).max().unwrap_or(1);
                let r = rank.unwrap_or(k.max(2));
                let g = multiple_dyck_grammar(&delta, r, opts).map_err(|e| e.to_string())?;
                Outcome::ok(g.to_string(), json!({"grammar": g.to_string(), "rank": r}))
            }
        }
        Command::Verify { grammar: path, max_len, bracket_bound, bijection_height, sequential } => {
            let g = grammar(path)?;
            let exec = if *sequential { Exec::Sequential } else { Exec::default() };
            let opts = CheckOptions { exec, ..CheckOptions::default() };
            let bound = match bracket_bound {
                Some(b) => *b,
                None => {
                    let d = CsDecomposition::new(&g).map_err(|e| e.to_string())?;
                    match d.required_bracket_bound(*max_len).map_err(|e| e.to_string())? {
                        Some(b) => b,
                        None => return Err("no finite bracket bound exists for this grammar; pass --bracket-bound".into()),
                    }
                }
            };
            let mut reports = vec![check_theorem_with(&g, *max_len, bound, opts).map_err(|e| e.to_string())?];
            if let Some(h) = bijection_height {
                reports.push(check_bijection_with(&g, *h, opts).map_err(|e| e.to_string())?);
            }
            report_outcome(reports)
        }
    })
}

fn inputs(cmd: &Command) -> (&'static str, Json) {
    let path = |p: &Path| json!(p.display().to_string());
    match cmd {
        Command::Weight { grammar, max_height, word } => {
            ("weight", json!({"grammar": path(grammar), "max_height": max_height, "word": word.word()}))
        }
        Command::Derivations { grammar, max_height, word } => {
            ("derivations", json!({"grammar": path(grammar), "max_height": max_height, "word": word.word()}))
        }
        Command::Separate { grammar, normalize } => {
            ("separate", json!({"grammar": path(grammar), "normalize": normalize}))
        }
        Command::ToDeriv { grammar, normalize, word } => {
            ("to-deriv", json!({"grammar": path(grammar), "normalize": normalize, "word": word.word()}))
        }
        Command::Decompose { grammar } => ("decompose", json!({"grammar": path(grammar)})),
        Command::ToBrackets { grammar, derivation } => {
            ("to-brackets", json!({"grammar": path(grammar), "derivation": derivation}))
        }
        Command::FromBrackets { grammar, word } => {
            ("from-brackets", json!({"grammar": path(grammar), "word": word.word()}))
        }
        Command::DyckMember { cells, trace, word } => {
            ("dyck-member", json!({"cells": path(cells), "trace": trace, "word": word.word()}))
        }
        Command::Split { cells, word } => ("split", json!({"cells": path(cells), "word": word.word()})),
        Command::Mdg { rank, cells, allow_large, symbols } => (
            "mdg",
            json!({"rank": rank, "cells": cells.as_deref().map(path), "allow_large": allow_large, "symbols": symbols.word()}),
        ),
        Command::Verify { grammar, max_len, bracket_bound, bijection_height, sequential } => (
            "verify",
            json!({
                "grammar": path(grammar),
                "max_len": max_len,
                "bracket_bound": bracket_bound,
                "bijection_height": bijection_height,
                "sequential": sequential,
            }),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = inputs(&cli.command);
    match run(&cli.command) {
        Ok(out) => {
            if cli.json {
                let envelope = json!({"command": name, "inputs": args, "result": out.result});
                println!("{}", serde_json::to_string_pretty(&envelope).expect("json"));
            } else {
                print!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(INVALID)
        }
    }
}
