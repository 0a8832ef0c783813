//! The four-node path-reachability instance used throughout the tests and
//! the `smallinstance` experiment.

use crate::core::KnowledgeBase;
use crate::datalog::{facts, FactSet};

pub const PROGRAM: &str = "\
Path(X,Y) :- Edge(X,Y).
Path(X,Z) :- Edge(X,Y), Path(Y,Z).
";

/// Sender 1: four edges plus four stored `Path` shortcuts.
pub const SENDER_FACTS: [&str; 8] = [
    "Edge(a,b)", "Edge(a,c)", "Edge(b,c)", "Edge(c,d)",
    "Path(a,b)", "Path(b,c)", "Path(c,d)", "Path(b,d)",
];

pub fn edges() -> FactSet {
    facts(["Edge(a,b)", "Edge(a,c)", "Edge(b,c)", "Edge(c,d)"])
}

pub fn sender_text() -> String {
    let mut text = PROGRAM.to_string();
    for f in SENDER_FACTS {
        text.push_str(f);
        text.push_str(".\n");
    }
    text
}

pub fn sender() -> KnowledgeBase {
    KnowledgeBase::parse(&sender_text(), "sender 1").expect("example parses")
}

/// Receiver 2: `Edge(a,c)` replaced by `Edge(d,a)`.
pub fn receiver_2() -> FactSet {
    let mut f: FactSet = facts(SENDER_FACTS);
    f.remove(&"Edge(a,c)".parse().expect("atom"));
    f.insert("Edge(d,a)".parse().expect("atom"));
    f
}

/// Receiver 2′: identical to the sender.
pub fn receiver_2_prime() -> FactSet {
    facts(SENDER_FACTS)
}

/// Receiver 3: the edges plus two shortcuts.
pub fn receiver_3() -> FactSet {
    let mut f = edges();
    f.extend(facts(["Path(a,d)", "Path(b,d)"]));
    f
}

/// The three receivers with their labels.
pub fn receivers() -> Vec<(&'static str, FactSet)> {
    vec![
        ("2", receiver_2()),
        ("2'", receiver_2_prime()),
        ("3", receiver_3()),
    ]
}
