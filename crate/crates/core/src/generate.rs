//! Wanted-constraint generation from typing derivations.

use std::collections::BTreeMap;

use crate::constraint::{Given, Mult, SiteAtom, SitedWanted};
use crate::oracle::{Binding, Deriv, ImplInfo, Node};
use crate::syntax::Span;
use crate::types::CSpec;

fn simple(spec: &CSpec, sites: &[String]) -> SitedWanted {
    SitedWanted::Simple(
        spec.iter()
            .zip(sites)
            .map(|((m, a), s)| SiteAtom { site: s.clone(), mult: *m, atom: a.clone() })
            .collect(),
    )
}

pub fn givens(imp: &ImplInfo) -> Vec<Given> {
    imp.assume
        .iter()
        .zip(&imp.givens)
        .map(|((m, a), n)| Given { name: n.clone(), mult: *m, atom: a.clone() })
        .collect()
}

fn implication(mult: Mult, imp: &ImplInfo, body: SitedWanted) -> SitedWanted {
    SitedWanted::Impl { mult, id: imp.id.clone(), assume: givens(imp), body: Box::new(body) }
}

/// The wanted constraint of a derivation.
pub fn generate(d: &Deriv) -> SitedWanted {
    match &d.node {
        Node::Var { wanted, sites, .. } => simple(wanted, sites),
        Node::Con { .. } | Node::Lit(_) => SitedWanted::empty(),
        Node::Abs { body, .. } => generate(body),
        Node::App { fun, arg, mult, imp } => {
            let c2 = generate(arg);
            let c2 = match imp {
                Some(i) => implication(Mult::One, i, c2),
                None => c2,
            };
            SitedWanted::tensor(generate(fun), c2.scale(*mult))
        }
        Node::Pack { body, payload, sites, .. } => SitedWanted::tensor(generate(body), simple(payload, sites)),
        Node::Unpack { rhs, body, imp, .. } => {
            SitedWanted::tensor(generate(rhs), implication(Mult::One, imp, generate(body)))
        }
        Node::Let { mult, rhs, body, .. } => SitedWanted::tensor(generate(rhs).scale(*mult), generate(body)),
        // The implication comes first so that it is solved while the outer
        // givens are still available behind its own.
        Node::LetSig { mult, rhs, body, imp, .. } => {
            SitedWanted::tensor(implication(*mult, imp, generate(rhs)), generate(body))
        }
        Node::Case { mult, scrut, alts } => {
            let branches = alts
                .iter()
                .rev()
                .map(|a| generate(&a.body))
                .reduce(|acc, c| SitedWanted::with(c, acc))
                .expect("case has alternatives");
            SitedWanted::tensor(generate(scrut).scale(*mult), branches)
        }
    }
}

/// The obligation of a top-level binding: `ω·(Q ⇒ C)` for a signed binding,
/// the bare `C` for an unsigned `main`.
pub fn top_level_obligation(b: &Binding, c: SitedWanted) -> SitedWanted {
    match &b.scheme {
        Some(_) => implication(Mult::Many, &b.imp, c),
        None => c,
    }
}

pub fn binding_obligation(b: &Binding) -> SitedWanted {
    top_level_obligation(b, generate(&b.body))
}

/// Source positions of every site and implication id in a binding.
pub fn span_index(b: &Binding) -> BTreeMap<String, Span> {
    fn walk(d: &Deriv, out: &mut BTreeMap<String, Span>) {
        match &d.node {
            Node::Var { sites, .. } | Node::Pack { sites, .. } => {
                for s in sites {
                    out.insert(s.clone(), d.span);
                }
            }
            Node::App { imp: Some(i), .. } | Node::Unpack { imp: i, .. } | Node::LetSig { imp: i, .. } => {
                out.insert(i.id.clone(), d.span);
            }
            _ => {}
        }
        d.children().into_iter().for_each(|c| walk(c, out));
    }
    let mut out = BTreeMap::from([(b.imp.id.clone(), b.span)]);
    walk(&b.body, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Atom, SimpleConstraint, Wanted};
    use crate::oracle::{infer, usage_check};
    use crate::prelude::prelude;
    use crate::syntax::parse_program;

    fn obligations(src: &str) -> Vec<(String, SitedWanted)> {
        let prog = parse_program(src).unwrap();
        let mut bs = infer(&prog, &prelude()).unwrap();
        bs.iter_mut()
            .map(|b| {
                usage_check(b).unwrap();
                (b.name.clone(), binding_obligation(b))
            })
            .collect()
    }

    fn c() -> Atom {
        Atom::nullary("C")
    }

    fn body(w: &SitedWanted) -> Wanted {
        match w {
            SitedWanted::Impl { body, .. } => body.erase(),
            _ => panic!("not an implication"),
        }
    }

    #[test]
    fn var_site_emits_its_constraint() {
        let o = obligations("x :: C =o Int\nx = useC\n");
        assert_eq!(body(&o[0].1), Wanted::atom(Mult::One, c()));
    }

    #[test]
    fn neglecting_scales_the_ignored_argument() {
        // const's second arrow is unrestricted: ε ⊗ ε ⊗ ω·(1·C) = ω·C.
        let o = obligations("neglecting :: C =o Int\nneglecting = const 10 useC\n");
        assert_eq!(body(&o[0].1), Wanted::Simple(SimpleConstraint::unrestricted(c())));
    }

    #[test]
    fn dithering_combines_branches_with_with() {
        let o = obligations("d :: C =o Bool -> Int\nd x = if x then useC else 10\n");
        assert_eq!(body(&o[0].1), Wanted::with(Wanted::atom(Mult::One, c()), Wanted::empty()));
    }

    #[test]
    fn overusing_top_level_obligation() {
        let o = obligations("overusing :: C =o (Int, Int)\noverusing = (useC, useC)\n");
        let expect = Wanted::implication(
            Mult::Many,
            SimpleConstraint::linear(c()),
            Wanted::tensor(Wanted::atom(Mult::One, c()), Wanted::atom(Mult::One, c())),
        );
        assert_eq!(o[0].1.erase(), expect);
        assert_eq!(o[0].1.to_string(), "ω·({U: [], L: [C]} ⇒ ({U: [], L: [C]} ⊗ {U: [], L: [C]}))");
    }

    #[test]
    fn unconstrained_binding_is_an_empty_implication() {
        let o = obligations("k :: Int\nk = 1\n");
        assert_eq!(
            o[0].1.erase(),
            Wanted::implication(Mult::Many, SimpleConstraint::empty(), Wanted::empty())
        );
    }

    #[test]
    fn linearly_argument_becomes_an_implication() {
        let o = obligations("main = linearly (let pack a = (new 1 :: exists n. UArray Int n * RW n) in let () = free a in Ur ())\n");
        let w = o[0].1.erase();
        match &w {
            Wanted::Impl(Mult::One, q, _) => assert_eq!(q, &SimpleConstraint::linear(Atom::linearly())),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn sites_are_unique_and_stable() {
        let src = std::fs::read_to_string(format!("{}/../../corpus/accept/quicksort.lql", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let a = obligations(&src);
        let b = obligations(&src);
        assert_eq!(a, b);
        let mut all = vec![];
        for (_, w) in &a {
            all.extend(w.sites().into_iter().map(|s| s.site.clone()));
        }
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        assert!(n > 10);
    }
}
