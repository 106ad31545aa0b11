//! Recursive-descent parser for `.qaut` sources.
//!
//! Errors inside a declaration are reported and the parser skips ahead to
//! the next declaration keyword at the same nesting level, so one pass can
//! report several independent problems.

use super::ast::*;
use super::diagnostic::Diagnostic;
use super::lexer::{tokenize, Span, Token, TokenKind};
use super::SourceDoc;

const ITEM_KEYWORDS: &[&str] = &["dim", "node", "arc", "op", "snapshots", "prob", "map"];

/// Marker for "a diagnostic has been recorded".
struct Fail;

type PResult<T> = Result<T, Fail>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    diags: Vec<Diagnostic>,
}

pub fn parse(doc: &SourceDoc) -> Result<SpecAst, Vec<Diagnostic>> {
    let (tokens, lex_diags) = tokenize(&doc.text);
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
        diags: lex_diags,
    };
    let ast = p.file();
    match ast {
        Some(ast) if p.diags.is_empty() => Ok(ast),
        _ => {
            let mut d = p.diags;
            d.sort_by_key(|d| d.span.offset);
            Err(d)
        }
    }
}

/// Parses a standalone matrix expression, e.g. an initial state given on
/// the command line.
pub fn parse_expr(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let (tokens, lex_diags) = tokenize(text);
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
        diags: lex_diags,
    };
    let e = p.expr();
    if e.is_ok() && !p.at(&TokenKind::Eof) {
        let t = p.peek().clone();
        p.error_at(&t, format!("unexpected {} after expression", t.kind));
    }
    match e {
        Ok(e) if p.diags.is_empty() => Ok(e),
        _ => Err(p.diags),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn at_item_keyword(&self) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if ITEM_KEYWORDS.contains(&s.as_str()))
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        match t.kind {
            TokenKind::LBrace => self.depth += 1,
            TokenKind::RBrace => self.depth = self.depth.saturating_sub(1),
            TokenKind::Eof => return t,
            _ => {}
        }
        self.pos += 1;
        t
    }

    fn error_at(&mut self, tok: &Token, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(tok.span, message, tok.lexeme.clone()));
    }

    fn error_span(&mut self, span: Span, lexeme: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(span, message, lexeme));
    }

    fn expect(&mut self, kind: TokenKind, context: &str) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            let t = self.peek().clone();
            self.error_at(&t, format!("expected {kind} {context}, found {}", t.kind));
            Err(Fail)
        }
    }

    fn expect_word(&mut self, word: &str, context: &str) -> PResult<Token> {
        if self.at_ident(word) {
            Ok(self.bump())
        } else {
            let t = self.peek().clone();
            self.error_at(&t, format!("expected `{word}` {context}, found {}", t.kind));
            Err(Fail)
        }
    }

    /// Skips to the next declaration at nesting level `level`, or to the
    /// `}` closing that level.
    fn synchronize(&mut self, level: usize) {
        loop {
            if self.at(&TokenKind::Eof) {
                return;
            }
            if self.depth == level && (self.at_item_keyword() || self.at(&TokenKind::RBrace)) {
                return;
            }
            if self.depth < level {
                return;
            }
            self.bump();
        }
    }

    fn file(&mut self) -> Option<SpecAst> {
        let head = self.peek().clone();
        let kind = match &head.kind {
            TokenKind::Ident(s) if s == "automaton" => ModelKind::Automaton,
            TokenKind::Ident(s) if s == "machine" => ModelKind::Machine,
            _ => {
                self.error_at(&head, format!("expected `automaton` or `machine`, found {}", head.kind));
                return None;
            }
        };
        self.bump();
        let name = self.name("as the model name").ok()?;
        self.expect(TokenKind::LBrace, "to open the model body").ok()?;
        let level = self.depth;
        let mut items = Vec::new();
        loop {
            if self.at(&TokenKind::RBrace) && self.depth == level {
                self.bump();
                break;
            }
            if self.at(&TokenKind::Eof) {
                let t = self.peek().clone();
                self.error_at(&t, "unexpected end of file: model body is not closed");
                return None;
            }
            match self.item(kind) {
                Ok(item) => items.push(item),
                Err(Fail) => {
                    self.synchronize(level);
                    if self.depth < level {
                        break;
                    }
                    // synchronize stops without consuming; skip a stray token
                    // that can start neither a declaration nor the closing brace.
                }
            }
        }
        if !self.at(&TokenKind::Eof) {
            let t = self.peek().clone();
            self.error_at(&t, format!("unexpected {} after the model body", t.kind));
        }
        Some(SpecAst { kind, name, items })
    }

    fn name(&mut self, context: &str) -> PResult<Name> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Ident(s) if !ITEM_KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Spanned::new(s.clone(), t.span))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Spanned::new(s.clone(), t.span))
            }
            _ => {
                self.error_at(&t, format!("expected a name {context}, found {}", t.kind));
                Err(Fail)
            }
        }
    }

    fn item(&mut self, kind: ModelKind) -> PResult<Item> {
        let t = self.peek().clone();
        let word = match &t.kind {
            TokenKind::Ident(s) if ITEM_KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => {
                self.error_at(&t, format!("expected a declaration, found {}", t.kind));
                self.bump();
                return Err(Fail);
            }
        };
        let allowed = match kind {
            ModelKind::Automaton => ["dim", "node", "arc", "op"].contains(&word.as_str()),
            ModelKind::Machine => ["snapshots", "node", "arc", "prob", "map"].contains(&word.as_str()),
        };
        if !allowed {
            let what = if kind == ModelKind::Automaton { "an automaton" } else { "a machine" };
            self.error_at(&t, format!("`{word}` declarations are not allowed in {what}"));
            self.bump();
            return Err(Fail);
        }
        self.bump();
        match word.as_str() {
            "dim" => self.dim_decl(),
            "node" => self.node_decl(t.span),
            "arc" => self.arc_decl(t.span),
            "op" => self.op_decl(t.span),
            "snapshots" => self.snapshots_decl(t.span),
            "prob" => self.prob_decl(t.span),
            "map" => self.map_decl(t.span),
            _ => unreachable!(),
        }
    }

    fn integer(&mut self, context: &str) -> PResult<Spanned<usize>> {
        let t = self.peek().clone();
        if let TokenKind::Number(v) = t.kind {
            if v.fract() == 0.0 && (0.0..1e15).contains(&v) && !t.lexeme.contains(['.', 'e', 'E']) {
                self.bump();
                return Ok(Spanned::new(v as usize, t.span));
            }
        }
        self.error_at(&t, format!("expected a non-negative integer {context}, found {}", t.kind));
        Err(Fail)
    }

    fn dim_decl(&mut self) -> PResult<Item> {
        self.expect(TokenKind::Eq, "after `dim`")?;
        Ok(Item::Dim(self.integer("for the dimension")?))
    }

    fn node_decl(&mut self, start: Span) -> PResult<Item> {
        let name = self.name("after `node`")?;
        let mut initial = false;
        let mut terminal = false;
        let mut end = name.span;
        loop {
            if self.at_ident("initial") {
                end = self.bump().span;
                initial = true;
            } else if self.at_ident("terminal") {
                end = self.bump().span;
                terminal = true;
            } else {
                break;
            }
        }
        Ok(Item::Node(NodeDecl {
            name,
            initial,
            terminal,
            span: start.to(end),
        }))
    }

    fn arc_decl(&mut self, start: Span) -> PResult<Item> {
        let id = self.name("for the arc id")?;
        self.expect(TokenKind::Colon, "after the arc id")?;
        let dom = self.name("for the arc source")?;
        self.expect(TokenKind::Arrow, "between arc endpoints")?;
        let codom = self.name("for the arc target")?;
        let span = start.to(codom.span);
        Ok(Item::Arc(ArcDecl { id, dom, codom, span }))
    }

    fn op_decl(&mut self, start: Span) -> PResult<Item> {
        let node = self.name("after `op`")?;
        self.expect(TokenKind::LBrace, "to open the operation block")?;
        let mut blocks = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            self.expect_word("K", "to start a Kraus block")?;
            self.expect(TokenKind::LParen, "after `K`")?;
            let label = self.name("for the outcome label")?;
            self.expect(TokenKind::RParen, "after the outcome label")?;
            self.expect(TokenKind::Eq, "after `K(...)`")?;
            let e = self.expr()?;
            blocks.push((label, e));
        }
        let end = self.bump().span;
        Ok(Item::Op(OpDecl {
            node,
            blocks,
            span: start.to(end),
        }))
    }

    fn snapshots_decl(&mut self, start: Span) -> PResult<Item> {
        self.expect(TokenKind::LBrace, "after `snapshots`")?;
        let mut names = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            names.push(self.name("in the snapshot list")?);
            if self.at(&TokenKind::Comma) {
                self.bump();
            }
        }
        let end = self.bump().span;
        Ok(Item::Snapshots(Spanned::new(names, start.to(end))))
    }

    fn prob_decl(&mut self, start: Span) -> PResult<Item> {
        self.expect(TokenKind::LParen, "after `prob`")?;
        let node = self.name("for the node")?;
        self.expect(TokenKind::Comma, "between node and snapshot")?;
        let snapshot = self.name("for the snapshot")?;
        self.expect(TokenKind::RParen, "after the snapshot")?;
        self.expect(TokenKind::LBrace, "to open the probability table")?;
        let mut entries = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let arc = self.name("for the arc")?;
            self.expect(TokenKind::Colon, "after the arc")?;
            let p = self.scalar()?;
            entries.push((arc, p));
            if self.at(&TokenKind::Comma) {
                self.bump();
            }
        }
        let end = self.bump().span;
        Ok(Item::Prob(ProbDecl {
            node,
            snapshot,
            entries,
            span: start.to(end),
        }))
    }

    fn map_decl(&mut self, start: Span) -> PResult<Item> {
        self.expect(TokenKind::LParen, "after `map`")?;
        let arc = self.name("for the arc")?;
        self.expect(TokenKind::RParen, "after the arc")?;
        self.expect(TokenKind::LBrace, "to open the snapshot map")?;
        let mut entries = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let from = self.name("for the source snapshot")?;
            self.expect(TokenKind::Arrow, "in the snapshot map")?;
            let to = self.name("for the target snapshot")?;
            entries.push((from, to));
            if self.at(&TokenKind::Comma) {
                self.bump();
            }
        }
        let end = self.bump().span;
        Ok(Item::Map(MapDecl {
            arc,
            entries,
            span: start.to(end),
        }))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::LBracket => self.literal(),
            TokenKind::Ident(word) => {
                if let Some(named) = NamedMatrix::from_name(word) {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Named(named),
                        span: t.span,
                    });
                }
                let word = word.clone();
                match word.as_str() {
                    "identity" => {
                        self.bump();
                        self.expect(TokenKind::LParen, "after `identity`")?;
                        let k = self.integer("for the identity size")?;
                        if k.value == 0 {
                            self.error_span(k.span, "0", "identity size must be positive");
                            return Err(Fail);
                        }
                        let end = self.expect(TokenKind::RParen, "to close `identity(`")?.span;
                        Ok(Expr {
                            kind: ExprKind::Identity(k),
                            span: t.span.to(end),
                        })
                    }
                    "kron" | "matmul" | "sum" => {
                        self.bump();
                        let (args, end) = self.expr_args(&word)?;
                        if args.len() < 2 && word != "sum" {
                            self.error_at(&t, format!("`{word}` needs at least two arguments"));
                            return Err(Fail);
                        }
                        let kind = match word.as_str() {
                            "kron" => ExprKind::Kron(args),
                            "matmul" => ExprKind::Matmul(args),
                            _ => ExprKind::Sum(args),
                        };
                        Ok(Expr {
                            kind,
                            span: t.span.to(end),
                        })
                    }
                    "adjoint" | "pure" => {
                        self.bump();
                        self.expect(TokenKind::LParen, &format!("after `{word}`"))?;
                        let inner = self.expr()?;
                        let end = self.expect(TokenKind::RParen, &format!("to close `{word}(`"))?.span;
                        let inner = Box::new(inner);
                        Ok(Expr {
                            kind: if word == "adjoint" {
                                ExprKind::Adjoint(inner)
                            } else {
                                ExprKind::Pure(inner)
                            },
                            span: t.span.to(end),
                        })
                    }
                    "scale" => {
                        self.bump();
                        self.expect(TokenKind::LParen, "after `scale`")?;
                        let s = self.scalar()?;
                        self.expect(TokenKind::Comma, "after the scale factor")?;
                        let inner = self.expr()?;
                        let end = self.expect(TokenKind::RParen, "to close `scale(`")?.span;
                        Ok(Expr {
                            kind: ExprKind::Scale(s, Box::new(inner)),
                            span: t.span.to(end),
                        })
                    }
                    _ => {
                        self.error_at(&t, format!("unknown matrix expression `{word}`"));
                        self.bump();
                        Err(Fail)
                    }
                }
            }
            _ => {
                self.error_at(&t, format!("expected a matrix expression, found {}", t.kind));
                Err(Fail)
            }
        }
    }

    fn expr_args(&mut self, word: &str) -> PResult<(Vec<Expr>, Span)> {
        self.expect(TokenKind::LParen, &format!("after `{word}`"))?;
        let mut args = vec![self.expr()?];
        while self.at(&TokenKind::Comma) {
            self.bump();
            args.push(self.expr()?);
        }
        let end = self.expect(TokenKind::RParen, &format!("to close `{word}(`"))?.span;
        Ok((args, end))
    }

    /// `[[a, b], [c, d]]`. An unterminated bracket is reported at the
    /// bracket itself.
    fn literal(&mut self) -> PResult<Expr> {
        let open = self.bump();
        let mut rows = Vec::new();
        loop {
            let row_open = self.peek().clone();
            if row_open.kind != TokenKind::LBracket {
                self.error_at(&row_open, format!("expected `[` to start a matrix row, found {}", row_open.kind));
                return Err(Fail);
            }
            self.bump();
            let mut row = vec![self.scalar()?];
            loop {
                match self.peek().kind {
                    TokenKind::Comma => {
                        self.bump();
                        row.push(self.scalar()?);
                    }
                    TokenKind::RBracket => {
                        self.bump();
                        break;
                    }
                    _ => {
                        self.error_at(&row_open, "unclosed `[` in matrix row");
                        return Err(Fail);
                    }
                }
            }
            rows.push(row);
            match self.peek().kind {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RBracket => {
                    let end = self.bump().span;
                    return Ok(Expr {
                        kind: ExprKind::Literal(rows),
                        span: open.span.to(end),
                    });
                }
                _ => {
                    self.error_at(&open, "unclosed `[` in matrix literal");
                    return Err(Fail);
                }
            }
        }
    }

    fn scalar(&mut self) -> PResult<Scalar> {
        let mut lhs = self.scalar_term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => ScalarKind::Add as fn(_, _) -> _,
                TokenKind::Minus => ScalarKind::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.scalar_term()?;
            let span = lhs.span.to(rhs.span);
            lhs = Scalar {
                kind: op(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
    }

    fn scalar_term(&mut self) -> PResult<Scalar> {
        let mut lhs = self.scalar_unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => ScalarKind::Mul as fn(_, _) -> _,
                TokenKind::Slash => ScalarKind::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.scalar_unary()?;
            let span = lhs.span.to(rhs.span);
            lhs = Scalar {
                kind: op(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
    }

    fn scalar_unary(&mut self) -> PResult<Scalar> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Minus => {
                self.bump();
                let inner = self.scalar_unary()?;
                let span = t.span.to(inner.span);
                Ok(Scalar {
                    kind: ScalarKind::Neg(Box::new(inner)),
                    span,
                })
            }
            TokenKind::Plus => {
                self.bump();
                self.scalar_unary()
            }
            _ => self.scalar_atom(),
        }
    }

    fn scalar_atom(&mut self) -> PResult<Scalar> {
        let t = self.peek().clone();
        let kind = match &t.kind {
            TokenKind::Number(v) => ScalarKind::Real(*v),
            TokenKind::Imag(v) => ScalarKind::Imag(*v),
            TokenKind::Ident(s) if s == "i" => ScalarKind::Imag(1.0),
            TokenKind::Ident(s) if s == "pi" => ScalarKind::Pi,
            TokenKind::Ident(s) if ScalarFn::from_name(s).is_some() => {
                let f = ScalarFn::from_name(s).expect("checked");
                self.bump();
                self.expect(TokenKind::LParen, &format!("after `{s}`"))?;
                let arg = self.scalar()?;
                let end = self.expect(TokenKind::RParen, "to close the function call")?.span;
                return Ok(Scalar {
                    kind: ScalarKind::Call(f, Box::new(arg)),
                    span: t.span.to(end),
                });
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.scalar()?;
                self.expect(TokenKind::RParen, "to close `(`")?;
                return Ok(inner);
            }
            _ => {
                self.error_at(&t, format!("expected a number, found {}", t.kind));
                return Err(Fail);
            }
        };
        self.bump();
        Ok(Scalar { kind, span: t.span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> SourceDoc {
        SourceDoc::new("test.qaut", text)
    }

    const MINIMAL: &str = "automaton tiny {\n  dim = 2\n  node a initial\n  node b terminal\n  arc x: a -> b\n  op a { K(\"x\") = identity(2) }\n}\n";

    #[test]
    fn minimal_automaton() {
        let ast = parse(&doc(MINIMAL)).unwrap();
        assert_eq!(ast.kind, ModelKind::Automaton);
        assert_eq!(ast.name.value, "tiny");
        assert_eq!(ast.nodes().count(), 2);
        assert_eq!(ast.arcs().count(), 1);
        let node_b = ast.nodes().nth(1).unwrap();
        assert!(node_b.terminal && !node_b.initial);
        assert_eq!((node_b.name.span.line, node_b.name.span.col), (4, 8));
    }

    #[test]
    fn unbalanced_bracket_reports_once_at_bracket() {
        let text = "automaton t {\n  dim = 2\n  node a initial\n  node b terminal\n  arc x: a -> b\n  op a { K(\"x\") = [[1, 0], [0, 1] }\n}\n";
        let diags = parse(&doc(text)).unwrap_err();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!((diags[0].line(), diags[0].col()), (6, 19));
        assert_eq!(diags[0].lexeme, "[");
    }

    #[test]
    fn recovery_reports_independent_errors() {
        let text = "automaton t {\n  dim = two\n  node a initial\n  arc x a -> b\n  node b terminal\n}\n";
        let diags = parse(&doc(text)).unwrap_err();
        let lines: Vec<usize> = diags.iter().map(|d| d.line()).collect();
        assert_eq!(lines, vec![2, 4]);
    }

    #[test]
    fn complex_scalars() {
        let e = parse_expr("[[0.5-0.5i, i], [-2i, 1/sqrt(2)]]").unwrap();
        let ExprKind::Literal(rows) = e.kind else { panic!() };
        assert_eq!(rows.len(), 2);
        assert!(matches!(rows[0][1].kind, ScalarKind::Imag(v) if v == 1.0));
        assert!(matches!(rows[1][0].kind, ScalarKind::Neg(_)));
    }

    #[test]
    fn machine_blocks() {
        let text = r#"machine coin {
  snapshots { s0, s1 }
  node n0 initial
  node t terminal
  arc h: n0 -> t
  arc l: n0 -> t
  prob(n0, s0) { h: 0.5, l: 0.5 }
  prob(n0, s1) { h: 0.5 l: 0.5 }
  map(h) { s0 -> s1, s1 -> s1 }
  map(l) { s0 -> s0 s1 -> s0 }
}"#;
        let ast = parse(&doc(text)).unwrap();
        assert_eq!(ast.kind, ModelKind::Machine);
        assert_eq!(ast.items.len(), 9);
    }

    #[test]
    fn wrong_declaration_kind() {
        let text = "machine m {\n  dim = 2\n}\n";
        let diags = parse(&doc(text)).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line(), 2);
    }

    #[test]
    fn missing_closing_brace() {
        let diags = parse(&doc("automaton t {\n  dim = 2\n")).unwrap_err();
        assert!(diags[0].message.contains("not closed"));
    }

    #[test]
    fn trailing_tokens() {
        let diags = parse_expr("H H").unwrap_err();
        assert_eq!(diags[0].col(), 3);
    }
}
