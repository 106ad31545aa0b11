//! Syntax tree for `.qaut` sources. Every element keeps its source span.

use super::lexer::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
}

impl<T> Spanned<T> {
    pub fn new(value: T, span: Span) -> Self {
        Self { value, span }
    }
}

pub type Name = Spanned<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Automaton,
    Machine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecAst {
    pub kind: ModelKind,
    pub name: Name,
    pub items: Vec<Item>,
}

impl SpecAst {
    pub fn nodes(&self) -> impl Iterator<Item = &NodeDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Node(n) => Some(n),
            _ => None,
        })
    }

    pub fn arcs(&self) -> impl Iterator<Item = &ArcDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Arc(a) => Some(a),
            _ => None,
        })
    }

    pub fn ops(&self) -> impl Iterator<Item = &OpDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Op(o) => Some(o),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Dim(Spanned<usize>),
    Snapshots(Spanned<Vec<Name>>),
    Node(NodeDecl),
    Arc(ArcDecl),
    Op(OpDecl),
    Prob(ProbDecl),
    Map(MapDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecl {
    pub name: Name,
    pub initial: bool,
    pub terminal: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcDecl {
    pub id: Name,
    pub dom: Name,
    pub codom: Name,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpDecl {
    pub node: Name,
    pub blocks: Vec<(Name, Expr)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbDecl {
    pub node: Name,
    pub snapshot: Name,
    pub entries: Vec<(Name, Scalar)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDecl {
    pub arc: Name,
    pub entries: Vec<(Name, Name)>,
    pub span: Span,
}

/// Named matrix constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedMatrix {
    H,
    X,
    Y,
    Z,
    Cnot,
}

impl NamedMatrix {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "H" => Self::H,
            "X" => Self::X,
            "Y" => Self::Y,
            "Z" => Self::Z,
            "CNOT" => Self::Cnot,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// Row-major literal.
    Literal(Vec<Vec<Scalar>>),
    Identity(Spanned<usize>),
    Kron(Vec<Expr>),
    Matmul(Vec<Expr>),
    Adjoint(Box<Expr>),
    Scale(Scalar, Box<Expr>),
    Sum(Vec<Expr>),
    Named(NamedMatrix),
    /// `|v⟩⟨v|` of a (rescaled) column vector; only meaningful for states.
    Pure(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub kind: ScalarKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarFn {
    Sqrt,
    Exp,
    Cos,
    Sin,
}

impl ScalarFn {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sqrt" => Self::Sqrt,
            "exp" => Self::Exp,
            "cos" => Self::Cos,
            "sin" => Self::Sin,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKind {
    Real(f64),
    Imag(f64),
    Pi,
    Neg(Box<Scalar>),
    Add(Box<Scalar>, Box<Scalar>),
    Sub(Box<Scalar>, Box<Scalar>),
    Mul(Box<Scalar>, Box<Scalar>),
    Div(Box<Scalar>, Box<Scalar>),
    Call(ScalarFn, Box<Scalar>),
}
