//! Evaluation of scalar and matrix expressions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::ast::{Expr, ExprKind, NamedMatrix, Scalar, ScalarFn, ScalarKind};
use super::diagnostic::Diagnostic;
use super::lexer::Span;
use crate::linalg::{Complex, ComplexMatrix};
use crate::quantum::DensityOperator;

fn diag(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(span, message, "")
}

pub fn eval_scalar(s: &Scalar) -> Result<Complex, Diagnostic> {
    let v = match &s.kind {
        ScalarKind::Real(v) => Complex::new(*v, 0.0),
        ScalarKind::Imag(v) => Complex::new(0.0, *v),
        ScalarKind::Pi => Complex::new(PI, 0.0),
        ScalarKind::Neg(a) => -eval_scalar(a)?,
        ScalarKind::Add(a, b) => eval_scalar(a)? + eval_scalar(b)?,
        ScalarKind::Sub(a, b) => eval_scalar(a)? - eval_scalar(b)?,
        ScalarKind::Mul(a, b) => eval_scalar(a)? * eval_scalar(b)?,
        ScalarKind::Div(a, b) => {
            let d = eval_scalar(b)?;
            if d == Complex::new(0.0, 0.0) {
                return Err(diag(s.span, "division by zero"));
            }
            eval_scalar(a)? / d
        }
        ScalarKind::Call(f, a) => {
            let x = eval_scalar(a)?;
            match f {
                ScalarFn::Sqrt => x.sqrt(),
                ScalarFn::Exp => x.exp(),
                ScalarFn::Cos => x.cos(),
                ScalarFn::Sin => x.sin(),
            }
        }
    };
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(diag(s.span, "number is not finite"));
    }
    Ok(v)
}

/// Evaluates a scalar that must be real (up to `tol` in the imaginary part).
pub fn eval_real(s: &Scalar, tol: f64) -> Result<f64, Diagnostic> {
    let v = eval_scalar(s)?;
    if v.im.abs() > tol {
        return Err(diag(s.span, format!("expected a real number, got imaginary part {}", v.im)));
    }
    Ok(v.re)
}

fn named(m: NamedMatrix) -> ComplexMatrix {
    let r = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex::new(re, im);
    match m {
        NamedMatrix::H => ComplexMatrix::from_real(&[&[r, r], &[r, -r]]),
        NamedMatrix::X => ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]),
        NamedMatrix::Y => {
            ComplexMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).expect("2x2")
        }
        NamedMatrix::Z => ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]),
        NamedMatrix::Cnot => ComplexMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]),
    }
}

fn shape(m: &ComplexMatrix) -> String {
    format!("{}×{}", m.rows(), m.cols())
}

/// Evaluates a matrix expression. `pure(...)` is accepted only when
/// `allow_pure` is set.
pub fn eval_matrix(e: &Expr, allow_pure: bool) -> Result<ComplexMatrix, Diagnostic> {
    match &e.kind {
        ExprKind::Literal(rows) => {
            let cols = rows[0].len();
            if rows.iter().any(|r| r.len() != cols) {
                return Err(diag(e.span, "matrix rows have different lengths"));
            }
            let mut data = Vec::with_capacity(rows.len() * cols);
            for r in rows {
                for s in r {
                    data.push(eval_scalar(s)?);
                }
            }
            ComplexMatrix::from_vec(rows.len(), cols, data).map_err(|err| diag(e.span, err.to_string()))
        }
        ExprKind::Identity(k) => Ok(ComplexMatrix::identity(k.value)),
        ExprKind::Named(m) => Ok(named(*m)),
        ExprKind::Kron(args) => {
            let mut acc = eval_matrix(&args[0], false)?;
            for a in &args[1..] {
                acc = acc.kron(&eval_matrix(a, false)?);
            }
            Ok(acc)
        }
        ExprKind::Matmul(args) => {
            let mut acc = eval_matrix(&args[0], false)?;
            for a in &args[1..] {
                let rhs = eval_matrix(a, false)?;
                acc = acc.matmul(&rhs).map_err(|_| {
                    diag(a.span, format!("cannot multiply {} by {}", shape(&acc), shape(&rhs)))
                })?;
            }
            Ok(acc)
        }
        ExprKind::Sum(args) => {
            let mut acc = eval_matrix(&args[0], false)?;
            for a in &args[1..] {
                let rhs = eval_matrix(a, false)?;
                if rhs.shape() != acc.shape() {
                    return Err(diag(a.span, format!("cannot add {} to {}", shape(&rhs), shape(&acc))));
                }
                acc = &acc + &rhs;
            }
            Ok(acc)
        }
        ExprKind::Adjoint(a) => Ok(eval_matrix(a, false)?.adjoint()),
        ExprKind::Scale(s, a) => Ok(eval_matrix(a, false)?.scale(eval_scalar(s)?)),
        ExprKind::Pure(a) => {
            if !allow_pure {
                return Err(diag(e.span, "`pure(...)` describes a state, not an operator"));
            }
            let v = eval_matrix(a, false)?;
            if !v.is_column() {
                return Err(diag(a.span, format!("`pure` expects a column vector, got {}", shape(&v))));
            }
            let rho = DensityOperator::pure_with(&v, 0.0, true).map_err(|err| diag(a.span, err.to_string()))?;
            Ok(rho.into_matrix())
        }
    }
}

/// Evaluates a square operator on a `dim`-dimensional space.
pub fn eval_operator(e: &Expr, dim: usize) -> Result<ComplexMatrix, Diagnostic> {
    let m = eval_matrix(e, false)?;
    if m.shape() != (dim, dim) {
        return Err(diag(e.span, format!("{} operator in {dim}-dim context", shape(&m))));
    }
    Ok(m)
}

/// Evaluates a state: a density matrix, `pure(v)`, or a bare column vector
/// (which is normalized).
pub fn eval_state(e: &Expr, dim: usize, tol: f64) -> Result<DensityOperator, Diagnostic> {
    let m = eval_matrix(e, true)?;
    if m.shape() == (dim, 1) {
        return DensityOperator::pure_with(&m, tol, true).map_err(|err| diag(e.span, err.to_string()));
    }
    if m.shape() != (dim, dim) {
        return Err(diag(e.span, format!("{} state in {dim}-dim context", shape(&m))));
    }
    DensityOperator::new(m, tol).map_err(|err| diag(e.span, format!("not a density operator: {err}")))
}
