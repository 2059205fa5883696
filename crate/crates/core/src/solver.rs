//! The deterministic, guess-free constraint solver.
//!
//! Givens live in three contexts: unrestricted `U`, duplicable `D` and linear
//! `L`. `D` and `L` are lists whose front is the most recent given. Every
//! atomic wanted is solved by exactly one of three rules, and the solver
//! records which given served it.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::constraint::{Atom, Given, Mult, SiteAtom, SiteId, SitedWanted};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Source {
    U,
    D,
    L,
}

/// A given with its evidence name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Named {
    pub atom: Atom,
    pub name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GivenContext {
    pub u: Vec<Named>,
    pub d: Vec<Named>,
    pub l: Vec<Named>,
}

impl GivenContext {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Classify givens as an implication would, prepending in order.
    pub fn assume(&self, givens: &[Given]) -> GivenContext {
        let mut ctx = self.clone();
        let mut d = vec![];
        let mut l = vec![];
        for g in givens {
            let n = Named { atom: g.atom.clone(), name: g.name.clone() };
            match g.mult {
                Mult::Many => ctx.u.push(n),
                Mult::One if g.atom.is_duplicable() => d.push(n),
                Mult::One => l.push(n),
            }
        }
        d.append(&mut ctx.d);
        l.append(&mut ctx.l);
        ctx.d = d;
        ctx.l = l;
        ctx
    }
}

/// Which given each wanted site was solved with.
pub type EvidenceMap = BTreeMap<SiteId, (Source, String)>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("case branches consume different linear constraints: [{}] versus [{}]", join(.left), join(.right))]
    BranchMismatch { left: Vec<Atom>, right: Vec<Atom> },
    #[error("linear assumption(s) [{}] are never consumed", join(.atoms))]
    UnconsumedLinear { atoms: Vec<Atom>, id: String },
    #[error("constraint `{atom}` is not available")]
    NotInScope { atom: Atom, site: SiteId },
    #[error("linear constraint `{atom}` is used more than once")]
    LinearOveruse { atom: Atom, site: SiteId },
    #[error("constraint `{atom}` is available both unrestrictedly and linearly; refusing to guess")]
    Ambiguous { atom: Atom, site: SiteId },
    #[error("constraint `{atom}` is needed unrestrictedly but only available linearly")]
    LinearForMany { atom: Atom, site: SiteId },
}

fn join(xs: &[Atom]) -> String {
    xs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

impl SolveError {
    pub fn class(&self) -> &'static str {
        match self {
            SolveError::BranchMismatch { .. } => "BranchMismatch",
            SolveError::UnconsumedLinear { .. } => "UnconsumedLinear",
            SolveError::NotInScope { .. } => "NotInScope",
            SolveError::LinearOveruse { .. } => "LinearOveruse",
            SolveError::Ambiguous { .. } => "Ambiguous",
            SolveError::LinearForMany { .. } => "LinearForMany",
        }
    }

    /// The site or implication the error is attributed to, if any.
    pub fn location(&self) -> Option<&str> {
        match self {
            SolveError::BranchMismatch { .. } => None,
            SolveError::UnconsumedLinear { id, .. } => Some(id),
            SolveError::NotInScope { site, .. }
            | SolveError::LinearOveruse { site, .. }
            | SolveError::Ambiguous { site, .. }
            | SolveError::LinearForMany { site, .. } => Some(site),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// Use the most recent linear given (the only behaviour in normal builds).
    #[default]
    MostRecent,
    /// Use the oldest linear given. Exists to demonstrate order sensitivity.
    #[cfg(feature = "test-hooks")]
    Oldest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub leftover: Vec<Named>,
    pub evidence: EvidenceMap,
    pub trace: Vec<String>,
}

pub struct Solver {
    selection: Selection,
    evidence: EvidenceMap,
    trace: Vec<String>,
    depth: usize,
    /// Atoms consumed so far, to tell an overuse from a missing constraint.
    consumed: Vec<Atom>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

fn show(l: &[Named]) -> String {
    format!("[{}]", l.iter().map(|n| n.atom.to_string()).collect::<Vec<_>>().join(", "))
}

struct Step<'a>(&'a SitedWanted);

impl fmt::Display for Step<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SitedWanted::Impl { mult, id, assume, .. } => {
                let a: Vec<String> = assume.iter().map(|g| format!("{}{}", if g.mult == Mult::Many { "ω·" } else { "" }, g.atom)).collect();
                write!(f, "{mult}·({}) {id}", a.join(", "))
            }
            c => write!(f, "{c}"),
        }
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver { selection: Selection::MostRecent, evidence: BTreeMap::new(), trace: vec![], depth: 0, consumed: vec![] }
    }

    pub fn with_selection(selection: Selection) -> Self {
        Solver { selection, ..Self::new() }
    }

    /// Solve `c` under `ctx`, returning the unconsumed linear givens.
    pub fn solve(mut self, ctx: &GivenContext, c: &SitedWanted) -> Result<Solution, (SolveError, Vec<String>)> {
        match self.go(ctx, ctx.l.clone(), c) {
            Ok(l) => Ok(Solution { leftover: l, evidence: self.evidence, trace: self.trace }),
            Err(e) => {
                self.trace.push(format!("error {}: {e}", e.class()));
                Err((e, self.trace))
            }
        }
    }

    fn log(&mut self, rule: &str, what: String, before: &[Named], after: &[Named]) {
        let pad = "  ".repeat(self.depth);
        self.trace.push(format!("{pad}{rule} {what} | L: {} -> {}", show(before), show(after)));
    }

    fn go(&mut self, ctx: &GivenContext, l: Vec<Named>, c: &SitedWanted) -> Result<Vec<Named>, SolveError> {
        match c {
            SitedWanted::Simple(atoms) => {
                let mut l = l;
                for a in atoms {
                    l = self.atomic(ctx, l, a)?;
                }
                Ok(l)
            }
            SitedWanted::Tensor(a, b) => {
                let before = l.clone();
                self.depth += 1;
                let mid = self.go(ctx, l, a)?;
                let out = self.go(ctx, mid, b)?;
                self.depth -= 1;
                self.log("S-MULT", Step(c).to_string(), &before, &out);
                Ok(out)
            }
            SitedWanted::With(a, b) => {
                self.depth += 1;
                let la = self.go(ctx, l.clone(), a)?;
                let lb = self.go(ctx, l.clone(), b)?;
                self.depth -= 1;
                let key = |v: &[Named]| {
                    let mut x: Vec<Atom> = v.iter().map(|n| n.atom.clone()).collect();
                    x.sort();
                    x
                };
                let (ka, kb) = (key(&la), key(&lb));
                if ka != kb {
                    return Err(SolveError::BranchMismatch { left: ka, right: kb });
                }
                self.log("S-ADD", Step(c).to_string(), &l, &la);
                Ok(la)
            }
            SitedWanted::Impl { mult: Mult::One, id, assume, body } => {
                let inner = ctx.assume(assume);
                let local: Vec<&str> = assume.iter().map(|g| g.name.as_str()).collect();
                let mut l_in: Vec<Named> = inner.l.iter().filter(|n| local.contains(&n.name.as_str())).cloned().collect();
                l_in.extend(l.iter().cloned());
                self.log("S-IMPLONE", Step(c).to_string(), &l, &l_in);
                self.depth += 1;
                let out = self.go(&inner, l_in, body)?;
                self.depth -= 1;
                // The leftover must be drawn from what came in. Givens are
                // compared by identity: an outer `Read n` left behind in
                // place of the assumed one still leaks the assumption.
                let left: Vec<Atom> = out.iter().filter(|n| !l.contains(n)).map(|n| n.atom.clone()).collect();
                if !left.is_empty() {
                    return Err(SolveError::UnconsumedLinear { atoms: left, id: id.clone() });
                }
                Ok(out)
            }
            SitedWanted::Impl { mult: Mult::Many, id, assume, body } => {
                let own = GivenContext { u: ctx.u.clone(), d: vec![], l: vec![] }.assume(assume);
                self.log("S-IMPLMANY", Step(c).to_string(), &l, &own.l);
                self.depth += 1;
                let out = self.go(&own, own.l.clone(), body)?;
                self.depth -= 1;
                if !out.is_empty() {
                    return Err(SolveError::UnconsumedLinear {
                        atoms: out.iter().map(|n| n.atom.clone()).collect(),
                        id: id.clone(),
                    });
                }
                Ok(l)
            }
        }
    }

    fn pick(&self, l: &[Named], q: &Atom) -> Option<usize> {
        match self.selection {
            Selection::MostRecent => l.iter().position(|n| &n.atom == q),
            #[cfg(feature = "test-hooks")]
            Selection::Oldest => l.iter().rposition(|n| &n.atom == q),
        }
    }

    fn atomic(&mut self, ctx: &GivenContext, mut l: Vec<Named>, w: &SiteAtom) -> Result<Vec<Named>, SolveError> {
        let q = &w.atom;
        let in_u = ctx.u.iter().find(|n| &n.atom == q);
        let in_l = self.pick(&l, q);
        let in_d = ctx.d.iter().find(|n| &n.atom == q);
        let err_site = || w.site.clone();
        let what = format!("{}·{q} @{}", w.mult, w.site);
        if let Some(u) = in_u {
            if in_l.is_some() || in_d.is_some() {
                return Err(SolveError::Ambiguous { atom: q.clone(), site: err_site() });
            }
            self.evidence.insert(w.site.clone(), (Source::U, u.name.clone()));
            self.log("ATOM-U", what, &l, &l);
            return Ok(l);
        }
        if w.mult == Mult::Many {
            if in_l.is_some() || in_d.is_some() {
                return Err(SolveError::LinearForMany { atom: q.clone(), site: err_site() });
            }
            return Err(self.missing(q, err_site()));
        }
        if let Some(i) = in_l {
            let before = l.clone();
            let n = l.remove(i);
            self.evidence.insert(w.site.clone(), (Source::L, n.name));
            self.consumed.push(q.clone());
            self.log("ATOM-ONE", what, &before, &l);
            return Ok(l);
        }
        if let Some(d) = in_d {
            self.evidence.insert(w.site.clone(), (Source::D, d.name.clone()));
            self.log("ATOM-DUP", what, &l, &l);
            return Ok(l);
        }
        Err(self.missing(q, err_site()))
    }

    fn missing(&self, q: &Atom, site: SiteId) -> SolveError {
        if self.consumed.contains(q) {
            SolveError::LinearOveruse { atom: q.clone(), site }
        } else {
            SolveError::NotInScope { atom: q.clone(), site }
        }
    }
}

/// Solve with most-recent selection.
pub fn solve(ctx: &GivenContext, c: &SitedWanted) -> Result<Solution, SolveError> {
    Solver::new().solve(ctx, c).map_err(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{SimpleConstraint, Wanted};

    fn named(a: Atom, n: &str) -> Named {
        Named { atom: a, name: n.into() }
    }

    fn c() -> Atom {
        Atom::nullary("C")
    }

    fn sited(w: Wanted) -> SitedWanted {
        SitedWanted::from_plain(&w, "t")
    }

    fn read_n() -> Atom {
        Atom::new("Read", vec![crate::types::Type::Var("n".into())])
    }

    #[test]
    fn overusing_fails() {
        let ctx = GivenContext { l: vec![named(c(), "z")], ..Default::default() };
        let w = Wanted::tensor(Wanted::atom(Mult::One, c()), Wanted::atom(Mult::One, c()));
        assert_eq!(solve(&ctx, &sited(w)).unwrap_err().class(), "LinearOveruse");
    }

    #[test]
    fn dithering_branch_mismatch() {
        let ctx = GivenContext { l: vec![named(c(), "z")], ..Default::default() };
        let w = Wanted::with(Wanted::atom(Mult::One, c()), Wanted::empty());
        assert_eq!(solve(&ctx, &sited(w)).unwrap_err().class(), "BranchMismatch");
    }

    #[test]
    fn assumption_immediately_consumed() {
        let w = Wanted::implication(Mult::One, SimpleConstraint::linear(c()), Wanted::atom(Mult::One, c()));
        let s = solve(&GivenContext::empty(), &sited(w)).unwrap();
        assert!(s.leftover.is_empty());
        assert_eq!(s.evidence.get("t.0#0"), Some(&(Source::L, "%t/0".to_string())));
    }

    #[test]
    fn ambiguous_unrestricted_and_linear() {
        let ctx = GivenContext { l: vec![named(c(), "z")], ..Default::default() };
        let w = Wanted::implication(Mult::One, SimpleConstraint::unrestricted(c()), Wanted::atom(Mult::One, c()));
        assert_eq!(solve(&ctx, &sited(w)).unwrap_err().class(), "Ambiguous");
    }

    #[test]
    fn atomic_rules() {
        let ctx = GivenContext { l: vec![named(read_n(), "r")], ..Default::default() };
        let s = solve(&ctx, &sited(Wanted::atom(Mult::One, read_n()))).unwrap();
        assert!(s.leftover.is_empty());

        let ctx = GivenContext { u: vec![named(c(), "u")], l: vec![named(c(), "z")], ..Default::default() };
        assert_eq!(solve(&ctx, &sited(Wanted::atom(Mult::One, c()))).unwrap_err().class(), "Ambiguous");

        let ctx = GivenContext { d: vec![named(Atom::linearly(), "lin")], ..Default::default() };
        let e = solve(&ctx, &sited(Wanted::atom(Mult::Many, Atom::linearly()))).unwrap_err();
        assert_eq!(e.class(), "LinearForMany");
        let s = solve(&ctx, &sited(Wanted::atom(Mult::One, Atom::linearly()))).unwrap();
        assert_eq!(s.evidence.values().next(), Some(&(Source::D, "lin".to_string())));

        let e = solve(&GivenContext::empty(), &sited(Wanted::atom(Mult::One, c()))).unwrap_err();
        assert_eq!(e.class(), "NotInScope");
    }

    #[test]
    fn most_recent_linear_given_is_used() {
        let write_n = Atom::new("Write", vec![crate::types::Type::Var("n".into())]);
        let ctx = GivenContext {
            l: vec![
                named(read_n(), "local_r"),
                named(write_n.clone(), "local_w"),
                named(read_n(), "outer_r"),
                named(write_n.clone(), "outer_w"),
            ],
            ..Default::default()
        };
        let w = Wanted::Simple(SimpleConstraint::new([], [read_n(), write_n]));
        let s = solve(&ctx, &sited(w)).unwrap();
        let names: Vec<&str> = s.leftover.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, vec!["outer_r", "outer_w"]);
    }

    #[test]
    fn leaked_assumption_is_caught_by_identity() {
        // Consuming the outer `C` instead of the assumed one leaves a `C`
        // behind that is the assumption itself.
        let ctx = GivenContext { l: vec![named(c(), "outer")], ..Default::default() };
        let w = Wanted::implication(Mult::One, SimpleConstraint::linear(c()), Wanted::atom(Mult::One, c()));
        let s = solve(&ctx, &sited(w.clone())).unwrap();
        assert_eq!(s.leftover, vec![named(c(), "outer")]);
        #[cfg(feature = "test-hooks")]
        {
            let e = Solver::with_selection(Selection::Oldest).solve(&ctx, &sited(w)).unwrap_err().0;
            assert_eq!(e.class(), "UnconsumedLinear");
        }
    }

    #[test]
    fn implmany_sees_only_its_own_linear_assumptions() {
        let ctx = GivenContext { l: vec![named(c(), "z")], ..Default::default() };
        let w = Wanted::implication(Mult::Many, SimpleConstraint::empty(), Wanted::atom(Mult::One, c()));
        assert_eq!(solve(&ctx, &sited(w)).unwrap_err().class(), "NotInScope");
        let w = Wanted::implication(Mult::Many, SimpleConstraint::linear(c()), Wanted::empty());
        assert_eq!(solve(&ctx, &sited(w)).unwrap_err().class(), "UnconsumedLinear");
    }

    #[test]
    fn unused_duplicable_givens_are_weakened() {
        let w = Wanted::implication(Mult::One, SimpleConstraint::linear(Atom::linearly()), Wanted::empty());
        assert!(solve(&GivenContext::empty(), &sited(w)).is_ok());
    }

    #[test]
    fn solving_is_deterministic() {
        let ctx = GivenContext { l: vec![named(c(), "z")], ..Default::default() };
        let w = sited(Wanted::tensor(
            Wanted::implication(Mult::One, SimpleConstraint::linear(c()), Wanted::atom(Mult::One, c())),
            Wanted::atom(Mult::One, c()),
        ));
        let a = Solver::new().solve(&ctx, &w).unwrap();
        let b = Solver::new().solve(&ctx, &w).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.iter().any(|t| t.contains("S-IMPLONE")));
    }
}
