use super::*;
use crate::prelude::prelude;
use crate::syntax::{parse_program, pretty_program};

fn corpus(path: &str) -> String {
    let p = format!("{}/../../corpus/{path}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{p}: {e}"))
}

fn check(src: &str) -> Result<Vec<Binding>, String> {
    let prog = parse_program(src).map_err(|e| e.to_string())?;
    let mut bs = infer(&prog, &prelude()).map_err(|e| e.class().to_string())?;
    for b in &mut bs {
        usage_check(b).map_err(|e| e.class().to_string())?;
    }
    Ok(bs)
}

fn find<'a>(d: &'a Deriv, pred: &dyn Fn(&Deriv) -> bool) -> Option<&'a Deriv> {
    if pred(d) {
        return Some(d);
    }
    d.children().into_iter().find_map(|c| find(c, pred))
}

fn var_named<'a>(d: &'a Deriv, name: &str) -> &'a Deriv {
    find(d, &|d| matches!(&d.node, Node::Var { name: n, .. } if n == name)).unwrap()
}

#[test]
fn identity_lambda() {
    let bs = check("idl :: a -o a\nidl = \\x -> x\n").unwrap();
    let d = &bs[0].body;
    assert_eq!(d.rule(), "Abs");
    assert_eq!(d.ty.to_string(), "a -o a");
    let Node::Abs { mult, body, .. } = &d.node else { panic!() };
    assert_eq!(*mult, Mult::One);
    assert_eq!(body.rule(), "Var");
    assert_eq!(body.usage.get("x"), Some(&Mult::One));
    assert!(d.usage.is_empty());
}

#[test]
fn read_is_instantiated_at_the_unpacked_skolem() {
    let src = "r :: Linearly =o Int\nr = \
               let pack arr = (new 3 :: exists n. UArray Int n * RW n) in \
               let pack (Ur x) = read arr 0 in let () = free arr in x\n";
    let bs = check(src).unwrap();
    let read = var_named(&bs[0].body, "read");
    let Node::Var { inst, wanted, .. } = &read.node else { panic!() };
    assert_eq!(inst[0].to_string(), "Int");
    assert!(inst[1].to_string().starts_with("n#"), "{}", inst[1]);
    assert_eq!(wanted.len(), 1);
    assert_eq!(wanted[0].1.to_string(), format!("Read {}", inst[1]));
}

#[test]
fn read2_derivation() {
    let bs = check(&corpus("accept/read2.lql")).unwrap();
    let read = var_named(&bs[0].body, "read");
    let Node::Var { inst, .. } = &read.node else { panic!() };
    assert_eq!(inst[1], Type::Var("n".into()));
}

#[test]
fn swap_split_introduces_two_skolems() {
    let bs = check(&corpus("accept/swap.lql")).unwrap();
    let split = var_named(&bs[0].body, "split");
    let Node::Var { inst, .. } = &split.node else { panic!() };
    assert_eq!(inst[1], Type::Var("n".into()));
    let unpack = find(&bs[0].body, &|d| {
        matches!(&d.node, Node::Unpack { rhs, .. } if rhs.to_json().to_string().contains("split"))
    })
    .unwrap();
    let Node::Unpack { imp, .. } = &unpack.node else { panic!() };
    assert_eq!(imp.skolems.len(), 2);
    assert!(imp.skolems[0].starts_with("l#") && imp.skolems[1].starts_with("r#"));
    assert_eq!(imp.assume.len(), 5);
}

#[test]
fn bad_overuses_the_package() {
    assert_eq!(check(&corpus("reject/bad.lql")).unwrap_err(), "LinearVariableOverused");
}

#[test]
fn unrestricted_argument_may_be_duplicated() {
    let bs = check(&corpus("accept/g_dup.lql")).unwrap();
    let g = bs.iter().find(|b| b.name == "g").unwrap();
    let Node::Abs { body, .. } = &g.body.node else { panic!() };
    assert_eq!(body.usage.get("x"), Some(&Mult::Many));
}

#[test]
fn badtoo_passes_the_oracle() {
    assert!(check(&corpus("reject/badToo.lql")).is_ok());
}

#[test]
fn every_corpus_program_passes_the_oracle_except_bad() {
    for dir in ["accept", "reject"] {
        for e in std::fs::read_dir(format!("{}/../../corpus/{dir}", env!("CARGO_MANIFEST_DIR"))).unwrap() {
            let p = e.unwrap().path();
            if p.extension().and_then(|x| x.to_str()) != Some("lql") {
                continue;
            }
            let name = p.file_name().unwrap().to_str().unwrap().to_string();
            let r = check(&std::fs::read_to_string(&p).unwrap());
            if name == "bad.lql" {
                assert!(r.is_err());
            } else {
                assert!(r.is_ok(), "{name}: {r:?}");
            }
        }
    }
}

#[test]
fn linear_errors() {
    let unused = "f :: Int -o (Ur Int) -o Int\nf x u = x\n";
    assert_eq!(check(unused).unwrap_err(), "LinearVariableUnused");
    let branch = "f :: Ur Int -o Bool -> Ur Int\nf u b = if b then u else Ur 1\n";
    assert_eq!(check(branch).unwrap_err(), "BranchUsageMismatch");
    let over = "f :: Ur Int -o (Ur Int, Ur Int)\nf u = (u, u)\n";
    assert_eq!(check(over).unwrap_err(), "LinearVariableOverused");
}

#[test]
fn type_errors() {
    assert_eq!(check("f :: Int\nf = g\n").unwrap_err(), "UnboundVariable");
    assert_eq!(check("f :: Int\nf = True\n").unwrap_err(), "UnificationFailure");
    assert_eq!(check("f = 1\n").unwrap_err(), "MissingSignature");
    assert_eq!(check("main = pack 1\n").unwrap_err(), "AmbiguousInstantiation");
    assert_eq!(check("main = free\n").unwrap_err(), "AmbiguousInstantiation");
}

#[test]
fn app_usage_scales_the_argument() {
    fn walk(d: &Deriv) {
        if let Node::App { fun, arg, mult, .. } = &d.node {
            let mut expect = fun.usage.clone();
            for (k, m) in &arg.usage {
                let m = mult.mul(*m);
                expect.entry(k.clone()).and_modify(|x| *x = x.add(m)).or_insert(m);
            }
            assert_eq!(d.usage, expect);
        }
        d.children().into_iter().for_each(walk);
    }
    for f in ["accept/quicksort.lql", "accept/swap.lql", "accept/linearly.lql"] {
        for b in check(&corpus(f)).unwrap() {
            walk(&b.body);
        }
    }
}

#[test]
fn reinference_is_deterministic() {
    for f in ["accept/quicksort.lql", "accept/shadowing.lql", "accept/read2.lql"] {
        let src = corpus(f);
        let a: Vec<_> = check(&src).unwrap().iter().map(|b| b.to_json()).collect();
        let printed = pretty_program(&parse_program(&src).unwrap());
        let b: Vec<_> = check(&printed).unwrap().iter().map(|b| b.to_json()).collect();
        assert_eq!(a, b, "{f}");
    }
}
