#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

pub const EXAMPLE_PROBLEM: &str = include_str!("../../../../data/example1.problem");
pub const EXAMPLE_PROOF: &str = include_str!("../../../../data/example1.proof");
pub const BIZARRE_PROBLEM: &str = include_str!("../../../../data/bizarre.problem");
pub const BIZARRE_PROOF: &str = include_str!("../../../../data/bizarre.proof");
pub const BIZARRE2_PROBLEM: &str = include_str!("../../../../data/bizarre2.problem");

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn treeitp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeitp"))
        .args(args)
        .env_remove("TREEITP_BUDGET")
        .output()
        .expect("binary runs")
}

/// Single-edit corruptions of the example proof: `(name, from, to)`.
/// Each replaces the first occurrence of `from` after the line starting
/// with the anchor, so edits stay local to one step.
pub const MUTATIONS: &[(&str, &str, &str, &str)] = &[
    ("flip instance literal", "(inst inst1", "(<= (g (h b)) b)))", "(> (g (h b)) b)))"),
    ("instance term changed", "(inst inst1", ":terms (b)", ":terms ((h b))"),
    ("second instance term changed", "(inst inst2", ":terms ((h b))", ":terms (b)"),
    ("flip congruence instance literal", "(inst inst3", "(not (= (f (g (h b))) (f b)))))", "(= (f (g (h b))) (f b))))"),
    ("wrong pivot", "(res r0", ":pivot (forall ((x Real)) (<= (g (h x)) x))", ":pivot (<= (g (h b)) b)"),
    ("swapped edge at instantiation", "(res r0", ":pos phi1 :neg inst1", ":pos inst1 :neg phi1"),
    ("swapped edge at r3", "(res r3", ":pos r2 :neg r1", ":pos r1 :neg r2"),
    ("swapped edge at root", "(res bot", ":pos r3 :neg r5", ":pos r5 :neg r3"),
    ("wrong antecedent", "(res r1", ":neg tricho", ":neg inst1"),
    ("congruence over other function", "(lemma cong", ":cong f ((g (h b))) (b)", ":cong g ((h b)) (b)"),
    ("trichotomy over other terms", "(lemma tricho", ":tricho (g (h b)) b", ":tricho (g (h b)) (h b)"),
    ("trichotomy replaced by bogus bound sum", "(lemma tricho", ":tricho (g (h b)) b", ":farkas ((1 (<= (g (h b)) b)) (1 (>= (g (h b)) b)))"),
    ("input moved to other partition", "(input phi2", ":partition 2", ":partition 3"),
    ("strict input inequality", "(input phi1", "(<= (g (h x)) x)", "(< (g (h x)) x)"),
    ("root step removed", "(res bot", "(res bot :pos r3 :neg r5 :pivot (= (g (h b)) b))", ""),
    ("flipped pivot sign", "(res r5", ":pivot (= (f (g (h b))) (f b))", ":pivot (not (= (f (g (h b))) (f b)))"),
    ("root pivot on other literal", "(res bot", ":pivot (= (g (h b)) b)", ":pivot (= (f (g (h b))) (f b))"),
    ("dangling antecedent", "(res r2", ":neg inst2", ":neg inst9"),
    ("antecedent from other partition", "(res r4", ":pos phi3", ":pos phi2"),
    ("instance conclusion altered", "(inst inst1", "(<= (g (h b)) b)))", "(<= (g (h b)) (h b))))"),
];

/// The example proof with one mutation applied.
pub fn mutate(anchor: &str, from: &str, to: &str) -> String {
    let start = EXAMPLE_PROOF.find(anchor).expect("anchor present");
    let offset = EXAMPLE_PROOF[start..].find(from).expect("mutation site present");
    let at = start + offset;
    format!("{}{}{}", &EXAMPLE_PROOF[..at], to, &EXAMPLE_PROOF[at + from.len()..])
}
