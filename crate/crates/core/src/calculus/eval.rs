//! Call-by-value interpreter for core programs.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::builtins::{builtins, spine, Builtin};
use super::{CType, CoreProgram, Def, Term};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("index {index} out of bounds for an array of length {len}")]
    OutOfBounds { index: i64, len: usize },
    #[error("access to a freed array")]
    UseAfterFree,
    #[error("joining arrays that are not adjacent slices of one buffer")]
    NonAdjacentJoin,
    #[error("reading an element that was never written")]
    UnsetRef,
    #[error("`{0}` has no runtime implementation")]
    NoRuntime(String),
    #[error("no `main` definition")]
    NoMain,
    #[error("step limit exhausted")]
    OutOfFuel,
    #[error("evaluation nested too deeply")]
    TooDeep,
    #[error("stuck: {0}")]
    Stuck(String),
}

impl RuntimeError {
    pub fn class(&self) -> &'static str {
        match self {
            RuntimeError::OutOfBounds { .. } => "OutOfBounds",
            RuntimeError::UseAfterFree => "UseAfterFree",
            RuntimeError::NonAdjacentJoin => "NonAdjacentJoin",
            RuntimeError::UnsetRef => "UnsetRef",
            RuntimeError::NoRuntime(_) => "NoRuntime",
            RuntimeError::NoMain => "NoMain",
            RuntimeError::OutOfFuel => "OutOfFuel",
            RuntimeError::TooDeep => "TooDeep",
            RuntimeError::Stuck(_) => "Stuck",
        }
    }
}

#[derive(Debug)]
pub struct Buffer {
    slots: Vec<Option<Value>>,
    freed: bool,
}

#[derive(Clone, Debug)]
pub struct View {
    buf: Rc<RefCell<Buffer>>,
    offset: usize,
    len: usize,
}

#[derive(Clone, Debug)]
pub enum RefTarget {
    Cell(Rc<RefCell<Option<Value>>>),
    Slot(Rc<RefCell<Buffer>>, usize),
}

#[derive(Clone)]
pub struct Closure {
    param: String,
    body: Rc<Term>,
    env: Env,
}

#[derive(Clone)]
pub enum Value {
    Int(i64),
    Con(String, Vec<Value>),
    Closure(Rc<Closure>),
    Prim(String, Vec<Value>),
    Token,
    Array(View),
    Ref(RefTarget),
    Pack(Box<Value>, Box<Value>),
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Con(c, a) if c == "(,)" => write!(f, "({}, {})", a[0], a[1]),
            Value::Con(c, a) if a.is_empty() => write!(f, "{c}"),
            Value::Con(c, a) => {
                write!(f, "{c}")?;
                for v in a {
                    match v {
                        Value::Con(_, x) if !x.is_empty() && !matches!(v, Value::Con(c, _) if c == "(,)") => {
                            write!(f, " ({v})")?
                        }
                        _ => write!(f, " {v}")?,
                    }
                }
                Ok(())
            }
            Value::Closure(_) | Value::Prim(..) => write!(f, "<function>"),
            Value::Token => write!(f, "<token>"),
            Value::Array(v) => write!(f, "<array of {}>", v.len),
            Value::Ref(_) => write!(f, "<ref>"),
            Value::Pack(_, v) => write!(f, "{v}"),
        }
    }
}

/// Persistent environment.
#[derive(Clone, Default)]
pub struct Env(Option<Rc<EnvNode>>);

struct EnvNode {
    name: String,
    value: Slot,
    next: Env,
}

#[derive(Clone)]
enum Slot {
    Value(Value),
    /// A recursive binding, tied after its closure is built.
    Knot(Rc<RefCell<Option<Value>>>),
}

impl Env {
    fn bind(&self, name: &str, value: Value) -> Env {
        Env(Some(Rc::new(EnvNode { name: name.into(), value: Slot::Value(value), next: self.clone() })))
    }

    fn lookup(&self, name: &str) -> Option<Value> {
        let mut cur = &self.0;
        while let Some(n) = cur {
            if n.name == name {
                return match &n.value {
                    Slot::Value(v) => Some(v.clone()),
                    Slot::Knot(k) => k.borrow().clone(),
                };
            }
            cur = &n.next.0;
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: u64,
    /// Replace every token by unit, to show evidence carries no information.
    pub erase_tokens: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 0, max_steps: 50_000_000, erase_tokens: false }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub value: String,
    pub output: Vec<String>,
}

struct Machine<'a> {
    defs: BTreeMap<&'a str, &'a Def>,
    globals: RefCell<BTreeMap<String, Value>>,
    prims: BTreeMap<String, Builtin>,
    config: RunConfig,
    rng: ChaCha8Rng,
    output: Vec<String>,
    steps: u64,
    depth: usize,
}

type R<T> = Result<T, RuntimeError>;

fn unit() -> Value {
    Value::Con("()".into(), vec![])
}

fn boolean(b: bool) -> Value {
    Value::Con(if b { "True" } else { "False" }.into(), vec![])
}

impl<'a> Machine<'a> {
    /// A runtime value of an evidence type.
    fn evidence(&self, t: &CType) -> Value {
        match t {
            CType::Token(..) if self.config.erase_tokens => unit(),
            CType::Token(..) => Value::Token,
            CType::Con(n, a) => Value::Con(n.clone(), a.iter().map(|x| self.evidence(x)).collect()),
            _ => unit(),
        }
    }

    fn global(&mut self, name: &str) -> R<Value> {
        if let Some(v) = self.globals.borrow().get(name) {
            return Ok(v.clone());
        }
        if let Some(d) = self.defs.get(name).copied() {
            let v = self.eval(&d.body, &Env::default())?;
            self.globals.borrow_mut().insert(name.into(), v.clone());
            return Ok(v);
        }
        match self.prims.get(name) {
            Some(b) if b.arity == 0 => self.prim(name, vec![]),
            Some(_) => Ok(Value::Prim(name.into(), vec![])),
            None => Err(RuntimeError::Stuck(format!("unbound `{name}`"))),
        }
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.config.max_steps {
            Err(RuntimeError::OutOfFuel)
        } else {
            Ok(())
        }
    }

    fn eval(&mut self, t: &Term, env: &Env) -> R<Value> {
        self.tick()?;
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(RuntimeError::TooDeep);
        }
        let r = self.step(t, env);
        self.depth -= 1;
        r
    }

    fn step(&mut self, t: &Term, env: &Env) -> R<Value> {
        match t {
            Term::Var(x, _) => match env.lookup(x) {
                Some(v) => Ok(v),
                None => self.global(x),
            },
            Term::Con(c, _) => Ok(match c.as_str() {
                "(,)" | "Ur" => Value::Prim(format!("con:{c}"), vec![]),
                _ => Value::Con(c.clone(), vec![]),
            }),
            Term::Lit(n) => Ok(Value::Int(*n)),
            Term::Lam(x, _, _, b) => {
                Ok(Value::Closure(Rc::new(Closure { param: x.clone(), body: Rc::new((**b).clone()), env: env.clone() })))
            }
            Term::TyLam(_, b) => self.eval(b, env),
            Term::App(f, a) => {
                let fv = self.eval(f, env)?;
                let av = self.eval(a, env)?;
                self.apply(fv, av)
            }
            Term::Pack { ev, val, .. } => {
                let e = self.eval(ev, env)?;
                let v = self.eval(val, env)?;
                Ok(Value::Pack(Box::new(e), Box::new(v)))
            }
            Term::Unpack { ev, var, rhs, body, .. } => match self.eval(rhs, env)? {
                Value::Pack(e, v) => self.eval(body, &env.bind(ev, *e).bind(var, *v)),
                other => Err(RuntimeError::Stuck(format!("unpacking {other}"))),
            },
            Term::Case { scrut, alts, .. } => {
                let v = self.eval(scrut, env)?;
                let Value::Con(c, fields) = &v else {
                    return Err(RuntimeError::Stuck(format!("case on {v}")));
                };
                let alt = alts
                    .iter()
                    .find(|a| &a.con == c)
                    .ok_or_else(|| RuntimeError::Stuck(format!("no alternative for {c}")))?;
                let mut env = env.clone();
                for (x, f) in alt.vars.iter().zip(fields) {
                    env = env.bind(x, f.clone());
                }
                self.eval(&alt.body, &env)
            }
            Term::Let { rec: false, var, rhs, body, .. } => {
                let v = self.eval(rhs, env)?;
                self.eval(body, &env.bind(var, v))
            }
            Term::Let { rec: true, var, rhs, body, .. } => {
                let knot = Rc::new(RefCell::new(None));
                let inner = Env(Some(Rc::new(EnvNode { name: var.clone(), value: Slot::Knot(knot.clone()), next: env.clone() })));
                let v = self.eval(rhs, &inner)?;
                *knot.borrow_mut() = Some(v.clone());
                self.eval(body, &env.bind(var, v))
            }
        }
    }

    fn apply(&mut self, f: Value, a: Value) -> R<Value> {
        match f {
            Value::Closure(c) => {
                let env = c.env.bind(&c.param, a);
                self.eval(&c.body, &env)
            }
            Value::Prim(name, mut args) => {
                args.push(a);
                let arity = match name.as_str() {
                    "con:(,)" => 2,
                    "con:Ur" => 1,
                    n => self.prims[n].arity,
                };
                if args.len() < arity {
                    Ok(Value::Prim(name, args))
                } else {
                    self.prim(&name, args)
                }
            }
            other => Err(RuntimeError::Stuck(format!("applying {other}"))),
        }
    }

    /// Evidence for the result of primitive `name`.
    fn result_evidence(&self, name: &str) -> Value {
        let (_, res) = spine(&self.prims[name].scheme.ty);
        match res {
            CType::Exists(_, _, e) => self.evidence(e),
            _ => unit(),
        }
    }

    /// Evidence for the continuation passed as argument `i` of `name`.
    fn argument_evidence(&self, name: &str, i: usize) -> Value {
        let (args, _) = spine(&self.prims[name].scheme.ty);
        let mut t = args[i];
        if let CType::Forall(_, b) = t {
            t = b;
        }
        match t {
            CType::Arrow(e, _, _) => self.evidence(e),
            _ => unit(),
        }
    }

    fn packed(&self, name: &str, v: Value) -> Value {
        Value::Pack(Box::new(self.result_evidence(name)), Box::new(v))
    }

    fn prim(&mut self, name: &str, args: Vec<Value>) -> R<Value> {
        let int = |v: &Value| match v {
            Value::Int(n) => Ok(*n),
            other => Err(RuntimeError::Stuck(format!("expected an integer, got {other}"))),
        };
        let arr = |v: &Value| match v {
            Value::Array(view) => {
                if view.buf.borrow().freed {
                    Err(RuntimeError::UseAfterFree)
                } else {
                    Ok(view.clone())
                }
            }
            other => Err(RuntimeError::Stuck(format!("expected an array, got {other}"))),
        };
        let index = |view: &View, i: i64| {
            if i < 0 || i as usize >= view.len {
                Err(RuntimeError::OutOfBounds { index: i, len: view.len })
            } else {
                Ok(view.offset + i as usize)
            }
        };
        match name {
            "con:(,)" => return Ok(Value::Con("(,)".into(), args)),
            "con:Ur" => return Ok(Value::Con("Ur".into(), args)),
            "dupL" => return Ok(Value::Con("(,)".into(), vec![args[0].clone(), args[0].clone()])),
            "dropL" => return Ok(unit()),
            _ => {}
        }
        if !self.prims[name].runtime {
            return Err(RuntimeError::NoRuntime(name.into()));
        }
        // args[0] is the evidence argument.
        let a = &args[1..];
        let ur = |v: Value| Value::Con("Ur".into(), vec![v]);
        Ok(match name {
            "+" | "-" | "*" => {
                let (x, y) = (int(&a[0])?, int(&a[1])?);
                Value::Int(match name {
                    "+" => x.wrapping_add(y),
                    "-" => x.wrapping_sub(y),
                    _ => x.wrapping_mul(y),
                })
            }
            "<" | "<=" | ">" | ">=" | "==" => {
                let (x, y) = (int(&a[0])?, int(&a[1])?);
                boolean(match name {
                    "<" => x < y,
                    "<=" => x <= y,
                    ">" => x > y,
                    ">=" => x >= y,
                    _ => x == y,
                })
            }
            "const" => a[0].clone(),
            "new" | "newPArray" => {
                let n = int(&a[0])?;
                if n < 0 {
                    return Err(RuntimeError::OutOfBounds { index: n, len: 0 });
                }
                let buf = Rc::new(RefCell::new(Buffer { slots: vec![None; n as usize], freed: false }));
                self.packed(name, Value::Array(View { buf, offset: 0, len: n as usize }))
            }
            "write" => {
                let view = arr(&a[0])?;
                let i = index(&view, int(&a[1])?)?;
                view.buf.borrow_mut().slots[i] = Some(a[2].clone());
                self.packed(name, unit())
            }
            "read" => {
                let view = arr(&a[0])?;
                let i = index(&view, int(&a[1])?)?;
                let v = view.buf.borrow().slots[i].clone().ok_or(RuntimeError::UnsetRef)?;
                self.packed(name, ur(v))
            }
            "free" => {
                let view = arr(&a[0])?;
                view.buf.borrow_mut().freed = true;
                unit()
            }
            "length" => Value::Int(arr(&a[0])?.len as i64),
            "newRef" => self.packed(name, Value::Ref(RefTarget::Cell(Rc::new(RefCell::new(None))))),
            "readRef" | "writeRef" | "freeRef" => {
                let Value::Ref(target) = &a[0] else {
                    return Err(RuntimeError::Stuck(format!("expected a reference, got {}", a[0])));
                };
                match name {
                    "readRef" => {
                        let v = match target {
                            RefTarget::Cell(c) => c.borrow().clone(),
                            RefTarget::Slot(b, i) => {
                                let b = b.borrow();
                                if b.freed {
                                    return Err(RuntimeError::UseAfterFree);
                                }
                                b.slots[*i].clone()
                            }
                        };
                        self.packed(name, ur(v.ok_or(RuntimeError::UnsetRef)?))
                    }
                    "writeRef" => {
                        match target {
                            RefTarget::Cell(c) => *c.borrow_mut() = Some(a[1].clone()),
                            RefTarget::Slot(b, i) => {
                                let mut b = b.borrow_mut();
                                if b.freed {
                                    return Err(RuntimeError::UseAfterFree);
                                }
                                b.slots[*i] = Some(a[1].clone());
                            }
                        }
                        self.packed(name, unit())
                    }
                    _ => unit(),
                }
            }
            "lend" | "lendMut" => {
                let view = arr(&a[0])?;
                let i = index(&view, int(&a[1])?)?;
                let k = a[2].clone();
                let ev = self.argument_evidence(name, 3);
                let k = self.apply(k, ev)?;
                let r = self.apply(k, Value::Ref(RefTarget::Slot(view.buf.clone(), i)))?;
                let Value::Pack(_, r) = r else {
                    return Err(RuntimeError::Stuck(format!("borrow continuation returned {r}")));
                };
                self.packed(name, *r)
            }
            "split" => {
                let view = arr(&a[0])?;
                let i = int(&a[1])?;
                if i < 0 || i as usize > view.len {
                    return Err(RuntimeError::OutOfBounds { index: i, len: view.len });
                }
                let i = i as usize;
                let l = View { buf: view.buf.clone(), offset: view.offset, len: i };
                let r = View { buf: view.buf.clone(), offset: view.offset + i, len: view.len - i };
                self.packed(name, ur(Value::Con("(,)".into(), vec![Value::Array(l), Value::Array(r)])))
            }
            "join" => {
                let (l, r) = (arr(&a[0])?, arr(&a[1])?);
                if !Rc::ptr_eq(&l.buf, &r.buf) || l.offset + l.len != r.offset {
                    return Err(RuntimeError::NonAdjacentJoin);
                }
                self.packed(name, ur(Value::Array(View { buf: l.buf.clone(), offset: l.offset, len: l.len + r.len })))
            }
            "linearly" => {
                let tok = self.argument_evidence(name, 1);
                self.apply(a[0].clone(), tok)?
            }
            "fillShuffled" => {
                let view = arr(&a[0])?;
                let mut xs: Vec<i64> = (0..view.len as i64).collect();
                xs.shuffle(&mut self.rng);
                let mut b = view.buf.borrow_mut();
                for (k, x) in xs.into_iter().enumerate() {
                    b.slots[view.offset + k] = Some(Value::Int(x));
                }
                drop(b);
                self.packed(name, unit())
            }
            "printArray" => {
                let view = arr(&a[0])?;
                let b = view.buf.borrow();
                let items: Vec<String> = b.slots[view.offset..view.offset + view.len]
                    .iter()
                    .map(|s| s.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "_".into()))
                    .collect();
                drop(b);
                self.output.push(format!("[{}]", items.join(", ")));
                self.packed(name, unit())
            }
            other => return Err(RuntimeError::NoRuntime(other.into())),
        })
    }
}

/// Nesting limit of the evaluator; `STACK_BYTES` is sized to hold it.
const MAX_DEPTH: usize = 100_000;
const STACK_BYTES: usize = 1 << 30;

/// Run `main`, applying it to its evidence. Evaluation happens on a
/// dedicated thread with a large stack.
pub fn eval_main(p: &CoreProgram, config: &RunConfig) -> Result<RunResult, (RuntimeError, Vec<String>)> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || eval_main_here(p, config))
            .expect("spawn evaluator thread")
            .join()
            .expect("evaluator thread panicked")
    })
}

fn eval_main_here(p: &CoreProgram, config: &RunConfig) -> Result<RunResult, (RuntimeError, Vec<String>)> {
    let mut m = Machine {
        defs: p.defs.iter().map(|d| (d.name.as_str(), d)).collect(),
        globals: RefCell::new(BTreeMap::new()),
        prims: builtins(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        config: config.clone(),
        output: vec![],
        steps: 0,
        depth: 0,
    };
    let r = (|| {
        let main = *m.defs.get("main").ok_or(RuntimeError::NoMain)?;
        let f = m.global("main")?;
        let CType::Arrow(ev, _, _) = &main.scheme.ty else {
            return Err(RuntimeError::Stuck("main takes no evidence".into()));
        };
        let ev = m.evidence(ev);
        m.apply(f, ev)
    })();
    match r {
        Ok(v) => Ok(RunResult { value: v.to_string(), output: m.output }),
        Err(e) => Err((e, m.output)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{c_arrow, c_unit, CScheme};
    use crate::constraint::Mult;

    fn main_of(body: Term, ty: CType) -> CoreProgram {
        let body = Term::Lam("%z".into(), Mult::One, c_unit(), Box::new(body));
        CoreProgram { defs: vec![Def { name: "main".into(), scheme: CScheme::mono(c_arrow(c_unit(), Mult::One, ty)), body }] }
    }

    fn call(f: &str, args: Vec<Term>) -> Term {
        args.into_iter().fold(Term::app(Term::var(f), Term::unit()), Term::app)
    }

    #[test]
    fn arithmetic() {
        let p = main_of(call("+", vec![Term::Lit(1), Term::Lit(2)]), CType::Con("Int".into(), vec![]));
        assert_eq!(eval_main(&p, &RunConfig::default()).unwrap().value, "3");
    }

    #[test]
    fn missing_runtime_is_reported() {
        let p = main_of(call("useC", vec![]), CType::Con("Int".into(), vec![]));
        assert_eq!(eval_main(&p, &RunConfig::default()).unwrap_err().0.class(), "NoRuntime");
    }

    #[test]
    fn array_views() {
        let cfg = RunConfig::default();
        let mut m = Machine {
            defs: BTreeMap::new(),
            globals: RefCell::new(BTreeMap::new()),
            prims: builtins(),
            rng: ChaCha8Rng::seed_from_u64(1),
            config: cfg,
            output: vec![],
            steps: 0,
            depth: 0,
        };
        let Value::Pack(_, arr) = m.prim("new", vec![unit(), Value::Int(4)]).unwrap() else { panic!() };
        m.prim("fillShuffled", vec![unit(), (*arr).clone()]).unwrap();
        let Value::Pack(_, halves) = m.prim("split", vec![unit(), (*arr).clone(), Value::Int(1)]).unwrap() else {
            panic!()
        };
        let Value::Con(_, ur) = *halves else { panic!() };
        let Value::Con(_, lr) = ur[0].clone() else { panic!() };
        assert!(matches!(&lr[1], Value::Array(v) if v.offset == 1 && v.len == 3));
        assert_eq!(
            m.prim("read", vec![unit(), lr[0].clone(), Value::Int(1)]).unwrap_err(),
            RuntimeError::OutOfBounds { index: 1, len: 1 }
        );
        assert_eq!(m.prim("join", vec![unit(), lr[1].clone(), lr[0].clone()]).unwrap_err(), RuntimeError::NonAdjacentJoin);
        assert!(m.prim("join", vec![unit(), lr[0].clone(), lr[1].clone()]).is_ok());
        m.prim("printArray", vec![unit(), (*arr).clone()]).unwrap();
        let mut seen: Vec<i64> = m.output[0]
            .trim_matches(|c| c == '[' || c == ']')
            .split(", ")
            .map(|s| s.parse().unwrap())
            .collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        m.prim("free", vec![unit(), (*arr).clone()]).unwrap();
        assert_eq!(m.prim("read", vec![unit(), (*arr).clone(), Value::Int(0)]).unwrap_err(), RuntimeError::UseAfterFree);
        let Value::Pack(_, fresh) = m.prim("new", vec![unit(), Value::Int(1)]).unwrap() else { panic!() };
        assert_eq!(m.prim("read", vec![unit(), (*fresh).clone(), Value::Int(0)]).unwrap_err(), RuntimeError::UnsetRef);
    }
}
