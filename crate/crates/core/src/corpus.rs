//! The bundled example models.

use crate::asm::StochasticAsm;
use crate::automaton::AbstractQuantumAutomaton;
use crate::dsl::{load, Model, SourceDoc};

/// `(file name, source text)` for every bundled model.
pub const FILES: &[(&str, &str)] = &[
    ("cleaner.qaut", include_str!("../corpus/cleaner.qaut")),
    ("entangler.qaut", include_str!("../corpus/entangler.qaut")),
    ("teleportation.qaut", include_str!("../corpus/teleportation.qaut")),
    ("coin.qaut", include_str!("../corpus/coin.qaut")),
];

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(name, _)| *name == file).map(|(_, text)| *text)
}

pub fn model(file: &str) -> Model {
    let text = source(file).unwrap_or_else(|| panic!("no bundled model `{file}`"));
    let doc = SourceDoc::new(file, text);
    match load(&doc) {
        Ok(m) => m,
        Err(d) => panic!("bundled model is invalid:\n{}", doc.render(&d)),
    }
}

fn automaton(file: &str) -> AbstractQuantumAutomaton {
    match model(file) {
        Model::Automaton(a) => a,
        Model::Machine(_) => panic!("`{file}` is a machine"),
    }
}

pub fn cleaner() -> AbstractQuantumAutomaton {
    automaton("cleaner.qaut")
}

pub fn entangler() -> AbstractQuantumAutomaton {
    automaton("entangler.qaut")
}

pub fn teleportation() -> AbstractQuantumAutomaton {
    automaton("teleportation.qaut")
}

pub fn coin() -> StochasticAsm {
    match model("coin.qaut") {
        Model::Machine(m) => m,
        Model::Automaton(_) => panic!("`coin.qaut` is an automaton"),
    }
}

/// The three quantum automata.
pub fn automata() -> Vec<AbstractQuantumAutomaton> {
    vec![cleaner(), entangler(), teleportation()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_loads() {
        for (name, _) in FILES {
            model(name);
        }
        assert_eq!(teleportation().graph().out_arcs("m").unwrap().len(), 4);
        assert_eq!(coin().snapshots().len(), 2);
    }
}
