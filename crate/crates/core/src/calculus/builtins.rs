//! Core types of the primitive operations.

use std::collections::BTreeMap;

use super::{CScheme, CType};
use crate::elaborate::{token_builtins, translate_scheme};
use crate::prelude::prelude;

#[derive(Clone, Debug)]
pub struct Builtin {
    pub scheme: CScheme,
    /// Arguments taken before the primitive runs, evidence included.
    pub arity: usize,
    pub runtime: bool,
}

fn arity(t: &CType) -> usize {
    match t {
        CType::Arrow(_, _, r) => 1 + arity(r),
        _ => 0,
    }
}

/// The argument types and result type of a primitive, in order.
pub fn spine(t: &CType) -> (Vec<&CType>, &CType) {
    match t {
        CType::Arrow(a, _, r) => {
            let (mut args, res) = spine(r);
            args.insert(0, a);
            (args, res)
        }
        t => (vec![], t),
    }
}

pub fn builtins() -> BTreeMap<String, Builtin> {
    let mut out: BTreeMap<String, Builtin> = prelude()
        .entries
        .into_iter()
        .map(|(n, e)| {
            let scheme = translate_scheme(&e.scheme);
            (n, Builtin { arity: arity(&scheme.ty), scheme, runtime: e.runtime })
        })
        .collect();
    for (n, scheme) in token_builtins() {
        out.insert(n.into(), Builtin { arity: arity(&scheme.ty), scheme, runtime: true });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evidence_comes_first() {
        let b = builtins();
        assert_eq!(b["read"].arity, 3);
        assert_eq!(b["read"].scheme.to_string(), "(forall (a n) (-o (tok Read n) (-> (PArray (AtomRef a) n) (-> Int (exists () (Ur a) (tok Read n))))))");
        assert_eq!(b["+"].arity, 3);
        assert_eq!(b["linearly"].arity, 2);
        assert_eq!(b["dupL"].arity, 1);
        assert!(!b["useC"].runtime);
    }

    #[test]
    fn borrowing_continuations_are_polymorphic() {
        let b = builtins();
        let (args, _) = spine(&b["lendMut"].scheme.ty);
        assert!(matches!(args[3], CType::Forall(vs, _) if vs == &["p".to_string()]));
    }
}
