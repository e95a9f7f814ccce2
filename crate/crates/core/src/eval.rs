//! Evaluation of compile-time expressions.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::syntax::{BinOp, Builtin, Expr, ExprKind, UnOp};
use crate::value::Value;

/// Largest exponent accepted by integer `^` (for bases other than -1, 0, 1).
const MAX_INT_EXPONENT: u64 = 1 << 16;
/// Largest number of elements a range literal may produce.
const MAX_RANGE_LEN: u64 = 1 << 24;

/// Why an evaluation step stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Fault {
    /// A fresh error to report.
    Diag(Diagnostic),
    /// The root cause has already been reported; stop quietly.
    Reported,
}

impl From<Diagnostic> for Fault {
    fn from(d: Diagnostic) -> Self {
        Fault::Diag(d)
    }
}

impl Fault {
    pub fn into_diagnostic(self) -> Option<Diagnostic> {
        match self {
            Fault::Diag(d) => Some(d),
            Fault::Reported => None,
        }
    }
}

pub type EvalResult<T> = Result<T, Fault>;

/// Name lookup used during evaluation.
pub trait Bindings {
    fn lookup_value(&mut self, name: &str, span: SourceSpan) -> EvalResult<Value>;
}

fn err(code: Code, msg: impl Into<String>, span: SourceSpan) -> Fault {
    Fault::Diag(Diagnostic::error(code, msg, span))
}

fn e010(msg: impl Into<String>, span: SourceSpan) -> Fault {
    err(Code::E010, msg, span)
}

/// `ceil(log2(n))` computed exactly from the bit length of `n - 1`.
/// Returns `None` for `n < 1`.
pub fn ceil_log2_exact(n: &BigInt) -> Option<u64> {
    if n.sign() != Sign::Plus {
        return None;
    }
    Some((n - 1u32).bits())
}

/// `floor(log2(n))` computed exactly. Returns `None` for `n < 1`.
pub fn floor_log2_exact(n: &BigInt) -> Option<u64> {
    if n.sign() != Sign::Plus {
        return None;
    }
    Some(n.bits() - 1)
}

/// `ceil(log2(x))` through double-precision arithmetic.
pub fn ceil_log2_float(x: f64) -> f64 {
    x.log2().ceil()
}

/// log2 of a positive big integer as a double, valid beyond the f64 range.
fn bigint_log2(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).log2()
    } else {
        let shift = bits - 64;
        let top: BigInt = n >> shift;
        top.to_f64().unwrap().log2() + shift as f64
    }
}

fn to_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => i.to_f64(),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn finite(f: f64, span: SourceSpan) -> EvalResult<Value> {
    if f.is_finite() {
        Ok(Value::Float(f))
    } else {
        Err(e010("arithmetic result is not a finite number", span))
    }
}

fn float_to_int(f: f64, span: SourceSpan) -> EvalResult<BigInt> {
    BigInt::from_f64(f).ok_or_else(|| e010("cannot convert a non-finite number to an integer", span))
}

/// Evaluates `expr` against `scope`.
pub fn eval(expr: &Expr, scope: &mut dyn Bindings) -> EvalResult<Value> {
    let span = expr.span;
    match &expr.kind {
        ExprKind::Int(i) => Ok(Value::Int(i.clone())),
        ExprKind::Float(f) => Ok(Value::Float(*f)),
        ExprKind::Str(s) => Ok(Value::Str(s.clone())),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Ident(name) => scope.lookup_value(name, span),
        ExprKind::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                out.push(eval(it, scope)?);
            }
            make_array(out, span)
        }
        ExprKind::Unary(op, a) => {
            let v = eval(a, scope)?;
            match (op, v) {
                (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
                (UnOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, v) => Err(e010(format!("cannot negate a {} value", v.kind_name()), span)),
                (UnOp::Not, v) => Err(e010(format!("`!` expects bool, found {}", v.kind_name()), span)),
            }
        }
        ExprKind::Binary(op, a, b) => {
            if matches!(op, BinOp::And | BinOp::Or) {
                let lhs = expect_bool(eval(a, scope)?, op, a.span)?;
                if (*op == BinOp::And && !lhs) || (*op == BinOp::Or && lhs) {
                    return Ok(Value::Bool(lhs));
                }
                return Ok(Value::Bool(expect_bool(eval(b, scope)?, op, b.span)?));
            }
            let lhs = eval(a, scope)?;
            let rhs = eval(b, scope)?;
            binary(*op, lhs, rhs, span)
        }
        ExprKind::Range { start, step, end } => {
            let s = expect_int(eval(start, scope)?, "range start", start.span)?;
            let st = expect_int(eval(step, scope)?, "range step", step.span)?;
            let e = expect_int(eval(end, scope)?, "range end", end.span)?;
            range(&s, &st, &e, span)
        }
        ExprKind::Call(func, args) => call(*func, args, scope, span),
        ExprKind::Index(a, i) => {
            let arr = eval(a, scope)?;
            let idx = expect_int(eval(i, scope)?, "index", i.span)?;
            match arr {
                Value::Array(items) => idx
                    .to_usize()
                    .and_then(|k| items.get(k).cloned())
                    .ok_or_else(|| {
                        err(
                            Code::E002,
                            format!("index {idx} out of bounds for array of length {}", items.len()),
                            i.span,
                        )
                    }),
                v => Err(e010(format!("cannot index a {} value", v.kind_name()), a.span)),
            }
        }
    }
}

/// Builds an array value, enforcing homogeneity and no nesting.
pub fn make_array(items: Vec<Value>, span: SourceSpan) -> EvalResult<Value> {
    if let Some(first) = items.first() {
        let Some(kind) = first.kind() else {
            return Err(e010("arrays cannot be nested", span));
        };
        if let Some(bad) = items.iter().find(|v| v.kind() != Some(kind)) {
            return Err(e010(
                format!(
                    "array elements must all be {}, found {}",
                    kind.as_str(),
                    bad.kind_name()
                ),
                span,
            ));
        }
    }
    Ok(Value::Array(items))
}

/// End-exclusive range `start, start+step, ...` strictly below `end`.
pub fn range(start: &BigInt, step: &BigInt, end: &BigInt, span: SourceSpan) -> EvalResult<Value> {
    if step.sign() != Sign::Plus {
        return Err(e010(format!("range step must be positive, found {step}"), span));
    }
    let len = range_len(start, step, end);
    if len > BigInt::from(MAX_RANGE_LEN) {
        return Err(e010(format!("range of {len} elements is too large"), span));
    }
    let mut out = Vec::new();
    let mut x = start.clone();
    while &x < end {
        out.push(Value::Int(x.clone()));
        x += step;
    }
    Ok(Value::Array(out))
}

/// `max(0, ceil((end - start) / step))` for a positive step.
pub fn range_len(start: &BigInt, step: &BigInt, end: &BigInt) -> BigInt {
    let diff = end - start;
    if diff.sign() != Sign::Plus {
        BigInt::zero()
    } else {
        diff.div_ceil(step)
    }
}

fn expect_bool(v: Value, op: &BinOp, span: SourceSpan) -> EvalResult<bool> {
    match v {
        Value::Bool(b) => Ok(b),
        v => Err(e010(
            format!("`{}` expects bool operands, found {}", op.as_str(), v.kind_name()),
            span,
        )),
    }
}

fn expect_int(v: Value, what: &str, span: SourceSpan) -> EvalResult<BigInt> {
    match v {
        Value::Int(i) => Ok(i),
        v => Err(e010(format!("{what} must be an int, found {}", v.kind_name()), span)),
    }
}

fn numeric_cmp(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        _ => to_f64(a)?.partial_cmp(&to_f64(b)?),
    }
}

fn values_equal(a: &Value, b: &Value, span: SourceSpan) -> EvalResult<bool> {
    match (a, b) {
        (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
            Ok(numeric_cmp(a, b) == Some(std::cmp::Ordering::Equal))
        }
        (Value::Str(x), Value::Str(y)) => Ok(x == y),
        (Value::Bool(x), Value::Bool(y)) => Ok(x == y),
        (Value::Clock(x), Value::Clock(y)) => Ok(x == y),
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Ok(false);
            }
            for (p, q) in x.iter().zip(y) {
                if !values_equal(p, q, span)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Err(e010(
            format!("cannot compare {} with {}", a.kind_name(), b.kind_name()),
            span,
        )),
    }
}

fn binary(op: BinOp, a: Value, b: Value, span: SourceSpan) -> EvalResult<Value> {
    use Value::*;
    match op {
        BinOp::Eq => return Ok(Bool(values_equal(&a, &b, span)?)),
        BinOp::Ne => return Ok(Bool(!values_equal(&a, &b, span)?)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&a, &b) {
                (Int(_) | Float(_), Int(_) | Float(_)) => numeric_cmp(&a, &b),
                _ => None,
            }
            .ok_or_else(|| {
                e010(
                    format!(
                        "`{}` expects numeric operands, found {} and {}",
                        op.as_str(),
                        a.kind_name(),
                        b.kind_name()
                    ),
                    span,
                )
            })?;
            let r = match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            };
            return Ok(Bool(r));
        }
        _ => {}
    }
    if op == BinOp::Add {
        if let (Str(x), Str(y)) = (&a, &b) {
            return Ok(Str(format!("{x}{y}")));
        }
    }
    let bad = || {
        e010(
            format!(
                "`{}` expects numeric operands, found {} and {}",
                op.as_str(),
                a.kind_name(),
                b.kind_name()
            ),
            span,
        )
    };
    match (&a, &b) {
        (Int(x), Int(y)) => match op {
            BinOp::Add => Ok(Int(x + y)),
            BinOp::Sub => Ok(Int(x - y)),
            BinOp::Mul => Ok(Int(x * y)),
            BinOp::Div => {
                if y.is_zero() {
                    return Err(e010("division by zero", span));
                }
                let (q, r) = x.div_rem(y);
                if r.is_zero() {
                    Ok(Int(q))
                } else {
                    finite(to_f64(&a).unwrap_or(f64::NAN) / to_f64(&b).unwrap_or(f64::NAN), span)
                }
            }
            BinOp::Pow => int_pow(x, y, span),
            _ => Err(bad()),
        },
        (Int(_) | Float(_), Int(_) | Float(_)) => {
            let (x, y) = (to_f64(&a).unwrap_or(f64::INFINITY), to_f64(&b).unwrap_or(f64::INFINITY));
            match op {
                BinOp::Add => finite(x + y, span),
                BinOp::Sub => finite(x - y, span),
                BinOp::Mul => finite(x * y, span),
                BinOp::Div => {
                    if y == 0.0 {
                        Err(e010("division by zero", span))
                    } else {
                        finite(x / y, span)
                    }
                }
                BinOp::Pow => finite(x.powf(y), span),
                _ => Err(bad()),
            }
        }
        _ => Err(bad()),
    }
}

fn int_pow(base: &BigInt, exp: &BigInt, span: SourceSpan) -> EvalResult<Value> {
    if exp.is_negative() {
        if base.is_zero() {
            return Err(e010("division by zero", span));
        }
        let b = base.to_f64().unwrap_or(f64::INFINITY);
        let e = exp.to_f64().unwrap_or(f64::NEG_INFINITY);
        return finite(b.powf(e), span);
    }
    if base.is_zero() || base.is_one() {
        return Ok(Value::Int(if exp.is_zero() { BigInt::one() } else { base.clone() }));
    }
    if *base == BigInt::from(-1) {
        return Ok(Value::Int(if exp.is_even() { BigInt::one() } else { base.clone() }));
    }
    match exp.to_u64() {
        Some(e) if e <= MAX_INT_EXPONENT => Ok(Value::Int(num_traits::pow::pow(base.clone(), e as usize))),
        _ => Err(e010(format!("exponent {exp} is too large"), span)),
    }
}

fn call(func: Builtin, args: &[Expr], scope: &mut dyn Bindings, span: SourceSpan) -> EvalResult<Value> {
    let arity_ok = match func {
        Builtin::Min | Builtin::Max => !args.is_empty(),
        _ => args.len() == 1,
    };
    if !arity_ok {
        return Err(e010(
            format!("wrong number of arguments to `{}`: {}", func.as_str(), args.len()),
            span,
        ));
    }
    match func {
        Builtin::Ceil | Builtin::Floor => {
            // exact path for ceil/floor(log2(<int>))
            if let ExprKind::Call(Builtin::Log2, inner) = &args[0].kind {
                if inner.len() == 1 {
                    let v = eval(&inner[0], scope)?;
                    if let Value::Int(n) = &v {
                        let r = if func == Builtin::Ceil {
                            ceil_log2_exact(n)
                        } else {
                            floor_log2_exact(n)
                        };
                        return r.map(Value::int).ok_or_else(|| {
                            e010(format!("log2 of non-positive number {n}"), args[0].span)
                        });
                    }
                    let f = log(Builtin::Log2, v, args[0].span)?;
                    return round(func, f, span);
                }
            }
            let v = eval(&args[0], scope)?;
            round(func, v, span)
        }
        Builtin::Log2 | Builtin::Log10 => {
            let v = eval(&args[0], scope)?;
            log(func, v, span)
        }
        Builtin::Abs => match eval(&args[0], scope)? {
            Value::Int(i) => Ok(Value::Int(i.abs())),
            Value::Float(f) => Ok(Value::Float(f.abs())),
            v => Err(e010(format!("`abs` expects a number, found {}", v.kind_name()), span)),
        },
        Builtin::Min | Builtin::Max => {
            let mut best: Option<Value> = None;
            let mut any_float = false;
            for a in args {
                let v = eval(a, scope)?;
                if !matches!(v, Value::Int(_) | Value::Float(_)) {
                    return Err(e010(
                        format!("`{}` expects numbers, found {}", func.as_str(), v.kind_name()),
                        a.span,
                    ));
                }
                any_float |= matches!(v, Value::Float(_));
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let ord = numeric_cmp(&v, &b).unwrap_or(std::cmp::Ordering::Equal);
                        let take = if func == Builtin::Min { ord.is_lt() } else { ord.is_gt() };
                        if take {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            let best = best.expect("non-empty");
            if any_float {
                Ok(Value::Float(to_f64(&best).unwrap_or(f64::NAN)))
            } else {
                Ok(best)
            }
        }
        Builtin::Assert => {
            let v = eval(&args[0], scope)?;
            check_assert(v, args[0].span)?;
            Ok(Value::Bool(true))
        }
    }
}

/// Evaluates an assertion: ok on `true`, E007 on `false`, E010 otherwise.
pub fn check_assert(v: Value, span: SourceSpan) -> EvalResult<()> {
    match v {
        Value::Bool(true) => Ok(()),
        Value::Bool(false) => Err(err(Code::E007, "assertion failed", span)),
        v => Err(e010(
            format!("assertion expects a bool, found {}", v.kind_name()),
            span,
        )),
    }
}

/// `assert(expr)` as a statement.
pub fn eval_assert(expr: &Expr, scope: &mut dyn Bindings) -> EvalResult<()> {
    let v = eval(expr, scope)?;
    check_assert(v, expr.span)
}

fn log(func: Builtin, v: Value, span: SourceSpan) -> EvalResult<Value> {
    let positive = match &v {
        Value::Int(i) => i.is_positive(),
        Value::Float(f) => *f > 0.0,
        _ => {
            return Err(e010(
                format!("`{}` expects a number, found {}", func.as_str(), v.kind_name()),
                span,
            ))
        }
    };
    if !positive {
        return Err(e010(format!("{} of non-positive number {v}", func.as_str()), span));
    }
    let l2 = match &v {
        Value::Int(i) => bigint_log2(i),
        Value::Float(f) => f.log2(),
        _ => unreachable!(),
    };
    let r = match (func, &v) {
        (Builtin::Log2, _) => l2,
        (_, Value::Float(f)) => f.log10(),
        (_, Value::Int(i)) if i.bits() <= 1000 => i.to_f64().unwrap().log10(),
        _ => l2 * std::f64::consts::LOG10_2,
    };
    finite(r, span)
}

fn round(func: Builtin, v: Value, span: SourceSpan) -> EvalResult<Value> {
    match v {
        Value::Int(i) => Ok(Value::Int(i)),
        Value::Float(f) => {
            let r = if func == Builtin::Ceil { f.ceil() } else { f.floor() };
            Ok(Value::Int(float_to_int(r, span)?))
        }
        v => Err(e010(
            format!("`{}` expects a number, found {}", func.as_str(), v.kind_name()),
            span,
        )),
    }
}
