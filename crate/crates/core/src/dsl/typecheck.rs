//! Type checking. Three kinds of value exist: scalars, linear-combination
//! lists and tuples. Local functions are first order and monomorphic: the
//! parameter type is fixed by the first application.

use std::fmt;

use super::ast::{Expr, NeuronProgram, Pattern};
use super::error::DslError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Scalar,
    List,
    Tuple(Vec<Type>),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Scalar => f.write_str("real"),
            Type::List => f.write_str("linComb"),
            Type::Tuple(ts) => {
                let parts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", parts.join(" * "))
            }
        }
    }
}

impl Type {
    pub fn quintuple() -> Type {
        Type::Tuple(vec![Type::Scalar; 5])
    }
}

/// A program together with the type of every node, indexed by pre-order id.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub program: NeuronProgram,
    pub node_types: Vec<Type>,
}

impl TypedProgram {
    pub fn type_of(&self, id: usize) -> &Type {
        &self.node_types[id]
    }
}

pub fn typecheck(p: &NeuronProgram) -> Result<TypedProgram, DslError> {
    let mut ck = Checker { types: vec![None; p.node_count()] };
    let mut env = Vec::new();
    let t = ck.infer(&p.body, 0, &mut env)?;
    if t != Type::quintuple() {
        return Err(DslError::Type(format!(
            "a neuron must return a quintuple of reals, found {t}"
        )));
    }
    let node_types = ck
        .types
        .into_iter()
        .map(|t| t.expect("every node is typed"))
        .collect();
    Ok(TypedProgram { program: p.clone(), node_types })
}

#[derive(Clone)]
enum Entry<'a> {
    Value(Type),
    Function {
        param: &'a str,
        body: &'a Expr,
        body_id: usize,
        scope_len: usize,
        param_ty: Option<Type>,
        result: Option<Type>,
    },
}

struct Checker {
    types: Vec<Option<Type>>,
}

fn mismatch(what: &str, expected: &Type, found: &Type) -> DslError {
    DslError::Type(format!("{what}: expected {expected}, found {found}"))
}

impl Checker {
    fn infer<'a>(
        &mut self,
        e: &'a Expr,
        id: usize,
        env: &mut Vec<(&'a str, Entry<'a>)>,
    ) -> Result<Type, DslError> {
        let first = id + 1;
        let t = match e {
            Expr::Const(_) => Type::Scalar,
            Expr::Param(p) => {
                if p.is_list() {
                    Type::List
                } else {
                    Type::Scalar
                }
            }
            Expr::Bias => Type::List,
            Expr::Var(name) => match lookup(env, name) {
                Some(Entry::Value(t)) => t.clone(),
                Some(Entry::Function { .. }) => {
                    return Err(DslError::Type(format!("function `{name}` used as a value")))
                }
                None => return Err(DslError::FreeVariable(name.clone())),
            },
            Expr::Bin(op, a, b) => {
                let ta = self.infer(a, first, env)?;
                let tb = self.infer(b, first + a.node_count(), env)?;
                let what = format!("operand of `{}`", op.symbol());
                if ta != Type::Scalar {
                    return Err(mismatch(&what, &Type::Scalar, &ta));
                }
                if tb != Type::Scalar {
                    return Err(mismatch(&what, &Type::Scalar, &tb));
                }
                Type::Scalar
            }
            Expr::Act(f, a) => {
                let ta = self.infer(a, first, env)?;
                if ta != Type::Scalar {
                    return Err(mismatch(&format!("argument of {}", f.name()), &Type::Scalar, &ta));
                }
                Type::Scalar
            }
            Expr::Lc(i, a) => {
                let ta = self.infer(a, first, env)?;
                if ta != Type::List {
                    return Err(mismatch(&format!("argument of lc{i}"), &Type::List, &ta));
                }
                Type::Scalar
            }
            Expr::Cons(h, tl) => {
                let th = self.infer(h, first, env)?;
                let tt = self.infer(tl, first + h.node_count(), env)?;
                if th != Type::Scalar {
                    return Err(mismatch("head of cons", &Type::Scalar, &th));
                }
                if tt != Type::List {
                    return Err(mismatch("tail of cons", &Type::List, &tt));
                }
                Type::List
            }
            Expr::Tuple(es) => {
                if es.len() != 2 && es.len() != 5 {
                    return Err(DslError::Type(format!(
                        "tuples must be pairs or quintuples, found arity {}",
                        es.len()
                    )));
                }
                let mut ts = Vec::with_capacity(es.len());
                let mut next = first;
                for x in es {
                    ts.push(self.infer(x, next, env)?);
                    next += x.node_count();
                }
                Type::Tuple(ts)
            }
            Expr::Case(s, pat, body) => {
                let ts = self.infer(s, first, env)?;
                let mark = env.len();
                match pat {
                    Pattern::Var(v) => env.push((v.as_str(), Entry::Value(ts))),
                    Pattern::Tuple(vs) => {
                        let Type::Tuple(parts) = &ts else {
                            return Err(DslError::Type(format!(
                                "tuple pattern of arity {} against {ts}",
                                vs.len()
                            )));
                        };
                        if parts.len() != vs.len() {
                            return Err(DslError::Type(format!(
                                "tuple pattern of arity {} against {ts}",
                                vs.len()
                            )));
                        }
                        for (v, t) in vs.iter().zip(parts) {
                            env.push((v.as_str(), Entry::Value(t.clone())));
                        }
                    }
                }
                let tb = self.infer(body, first + s.node_count(), env);
                env.truncate(mark);
                tb?
            }
            Expr::Let { name, param, body, rest } => {
                let mark = env.len();
                env.push((
                    name.as_str(),
                    Entry::Function {
                        param: param.as_str(),
                        body: body.as_ref(),
                        body_id: first,
                        scope_len: mark,
                        param_ty: None,
                        result: None,
                    },
                ));
                let tr = self.infer(rest, first + body.node_count(), env);
                let entry = env[mark].1.clone();
                env.truncate(mark);
                let tr = tr?;
                if let Entry::Function { param_ty: None, .. } = entry {
                    // never applied: check the body at the default scalar type
                    env.push((param.as_str(), Entry::Value(Type::Scalar)));
                    let r = self.infer(body, first, env);
                    env.truncate(mark);
                    r?;
                }
                tr
            }
            Expr::Apply(name, arg) => {
                let ta = self.infer(arg, first, env)?;
                let Some(pos) = env.iter().rposition(|(n, _)| *n == name.as_str()) else {
                    return Err(DslError::FreeVariable(name.clone()));
                };
                let Entry::Function { param, body, body_id, scope_len, param_ty, result } =
                    env[pos].1.clone()
                else {
                    return Err(DslError::Type(format!("`{name}` is not a function")));
                };
                match (&param_ty, &result) {
                    (Some(pt), Some(rt)) => {
                        if *pt != ta {
                            return Err(mismatch(&format!("argument of `{name}`"), pt, &ta));
                        }
                        rt.clone()
                    }
                    _ => {
                        let mut inner: Vec<(&'a str, Entry<'a>)> = env[..scope_len].to_vec();
                        inner.push((param, Entry::Value(ta.clone())));
                        let rt = self.infer(body, body_id, &mut inner)?;
                        if let Entry::Function { param_ty, result, .. } = &mut env[pos].1 {
                            *param_ty = Some(ta);
                            *result = Some(rt.clone());
                        }
                        rt
                    }
                }
            }
        };
        if self.types[id].is_none() {
            self.types[id] = Some(t.clone());
        }
        Ok(t)
    }
}

fn lookup<'e, 'a>(env: &'e [(&'a str, Entry<'a>)], name: &str) -> Option<&'e Entry<'a>> {
    env.iter().rev().find(|(n, _)| *n == name).map(|(_, e)| e)
}
