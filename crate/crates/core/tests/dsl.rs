use qaut::dsl::{self, Model, SourceDoc};
use qaut::linalg::{Complex, ComplexMatrix};
use qaut::random;
use qaut::{corpus, AbstractQuantumAutomaton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reload(text: &str) -> Model {
    match dsl::load(&SourceDoc::new("roundtrip", text)) {
        Ok(m) => m,
        Err(d) => panic!("{}\n{text}", SourceDoc::new("roundtrip", text).render(&d)),
    }
}

fn assert_same_automaton(a: &AbstractQuantumAutomaton, b: &AbstractQuantumAutomaton) {
    assert_eq!(a.name(), b.name());
    assert_eq!(a.dim(), b.dim());
    assert_eq!(a.graph(), b.graph());
    for (node, op) in a.ops() {
        let other = b.op(node).expect("node kept");
        assert_eq!(op.kraus().outcomes(), other.kraus().outcomes());
        for (x, y) in op.kraus().blocks().iter().zip(other.kraus().blocks()) {
            assert_eq!(x.entries(), y.entries(), "node {node}");
        }
    }
}

#[test]
fn random_automata_round_trip_exactly() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let dim = r.random_range(1..=4);
        let nodes = r.random_range(2..=6);
        let extra = r.random_range(0..=4);
        let a = random::random_automaton(&mut r, dim, nodes, extra);
        let text = dsl::serialize_automaton(&a);
        let Model::Automaton(b) = reload(&text) else {
            panic!("automaton reloaded as machine")
        };
        assert_same_automaton(&a, &b);
        assert_eq!(dsl::serialize_automaton(&b), text);
    }
}

#[test]
fn random_machines_round_trip_exactly() {
    let mut r = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let nodes = r.random_range(2..=5);
        let snaps = r.random_range(1..=4);
        let extra = r.random_range(0..=3);
        let m = random::random_asm(&mut r, nodes, snaps, extra);
        let text = dsl::serialize_machine(&m);
        let Model::Machine(back) = reload(&text) else {
            panic!("machine reloaded as automaton")
        };
        assert_eq!(back, m);
        assert_eq!(dsl::serialize_machine(&back), text);
    }
}

#[test]
fn corpus_serialization_is_a_fixed_point() {
    for (file, _) in corpus::FILES {
        let once = dsl::serialize(&corpus::model(file));
        let twice = dsl::serialize(&reload(&once));
        assert_eq!(once, twice, "{file}");
    }
}

#[test]
fn single_token_mutations_are_diagnosed_on_their_line() {
    let mut r = ChaCha8Rng::seed_from_u64(13);
    let mut mutants = 0;
    for (file, text) in corpus::FILES {
        let (tokens, lex) = dsl::tokenize(text);
        assert!(lex.is_empty());
        for _ in 0..50 {
            let t = &tokens[r.random_range(0..tokens.len() - 1)];
            let start = t.span.offset;
            let mutated = format!("{}@{}", &text[..start], &text[start + t.span.len..]);
            let diags = dsl::load(&SourceDoc::new(*file, mutated)).expect_err("mutant must be rejected");
            assert!(
                diags.iter().any(|d| d.line() == t.span.line),
                "{file}: `{:?}` at line {}: {diags:?}",
                t.kind,
                t.span.line
            );
            mutants += 1;
        }
    }
    assert_eq!(mutants, 50 * corpus::FILES.len());
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    random::gaussian_matrix(r, rows, cols)
}

fn eval(text: &str) -> ComplexMatrix {
    let e = dsl::parse_expr(text).unwrap_or_else(|d| panic!("{text}: {d:?}"));
    dsl::eval_matrix(&e, false).unwrap_or_else(|d| panic!("{text}: {d:?}"))
}

#[test]
fn expressions_match_direct_matrix_algebra() {
    let mut r = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let (n, m) = (r.random_range(1..=3), r.random_range(1..=3));
        let a = random_matrix(&mut r, n, m);
        let b = random_matrix(&mut r, m, n);
        let c = random_matrix(&mut r, n, m);
        let (ta, tb, tc) = (dsl::format_matrix(&a), dsl::format_matrix(&b), dsl::format_matrix(&c));
        assert_eq!(eval(&ta), a);
        assert_eq!(eval(&format!("kron({ta}, {tb})")), a.kron(&b));
        assert_eq!(eval(&format!("matmul({ta}, {tb})")), a.matmul(&b).unwrap());
        assert_eq!(eval(&format!("adjoint({ta})")), a.adjoint());
        assert_eq!(eval(&format!("sum({ta}, {tc})")), &a + &c);
        assert_eq!(eval(&format!("scale(2i, {ta})")), a.scale(Complex::new(0.0, 2.0)));
        assert_eq!(
            eval(&format!("matmul(adjoint({tb}), kron(identity(1), adjoint({ta})))")),
            b.adjoint().matmul(&a.adjoint()).unwrap()
        );
    }
}

#[test]
fn named_gates_and_scalars() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = eval("H");
    let expected = ComplexMatrix::from_real(&[&[s, s], &[s, -s]]);
    assert!(h.max_abs_diff(&expected).unwrap() < 1e-15);
    assert_eq!(eval("matmul(X, X)"), ComplexMatrix::identity(2));
    let phase = eval("[[exp(i*pi/2)]]");
    assert!((phase[(0, 0)] - Complex::new(0.0, 1.0)).norm() < 1e-15);
    assert_eq!(eval("CNOT").shape(), (4, 4));
}
