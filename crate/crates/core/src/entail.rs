//! Complete, exponential decision procedures for entailment in the atomic
//! domain where only `Linearly` is duplicable. Used as ground truth when
//! testing the solver.

use std::collections::{BTreeMap, HashMap};

use crate::constraint::{Atom, Mult, SimpleConstraint, Wanted};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_atoms: usize,
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_atoms: 16, max_depth: 12, max_nodes: 200_000 }
    }
}

/// The search gave up; the answer is unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("inconclusive")]
pub struct Inconclusive;

/// `Q1 ⊩ Q2` by search: every linear demand of `Q2` is met by consuming a
/// linear given, by an unrestricted given, or (for duplicable atoms) by
/// copying one already consumed. Whatever is left of `Q1.L` must be
/// discardable.
pub fn entails_simple(q1: &SimpleConstraint, q2: &SimpleConstraint) -> bool {
    if !q2.u().is_subset(q1.u()) {
        return false;
    }
    fn go(q1: &SimpleConstraint, supply: &mut Vec<Atom>, copied: &mut Vec<Atom>, demand: &[Atom]) -> bool {
        let Some((q, rest)) = demand.split_first() else {
            return supply.iter().all(Atom::is_duplicable);
        };
        if q1.u().contains(q) && go(q1, supply, copied, rest) {
            return true;
        }
        if let Some(i) = supply.iter().position(|a| a == q) {
            let a = supply.remove(i);
            let dup = a.is_duplicable();
            if dup {
                copied.push(a.clone());
            }
            let ok = go(q1, supply, copied, rest);
            if dup {
                copied.pop();
            }
            supply.insert(i, a);
            if ok {
                return true;
            }
        }
        q.is_duplicable() && copied.contains(q) && go(q1, supply, copied, rest)
    }
    go(q1, &mut q1.l().to_vec(), &mut vec![], q2.l())
}

/// `Q ⊢ C`, complete up to the node budget.
pub fn entails_wanted(q: &SimpleConstraint, c: &Wanted, budget: OracleBudget) -> Result<bool, Inconclusive> {
    let mut atoms = q.atoms();
    atoms.extend(c.atoms());
    if atoms.len() > budget.max_atoms || c.depth() > budget.max_depth {
        return Err(Inconclusive);
    }
    Search { budget, nodes: 0, memo: HashMap::new() }.wanted(q, c)
}

struct Search {
    budget: OracleBudget,
    nodes: usize,
    memo: HashMap<(SimpleConstraint, usize), bool>,
}

impl Search {
    fn wanted(&mut self, q: &SimpleConstraint, c: &Wanted) -> Result<bool, Inconclusive> {
        let key = (q.clone(), c as *const Wanted as usize);
        if let Some(r) = self.memo.get(&key) {
            return Ok(*r);
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(Inconclusive);
        }
        let r = match c {
            Wanted::Simple(q2) => entails_simple(q, q2),
            Wanted::With(a, b) => self.wanted(q, a)? && self.wanted(q, b)?,
            Wanted::Impl(Mult::One, q1, body) => self.wanted(&q.tensor(q1), body)?,
            Wanted::Impl(Mult::Many, q1, body) => {
                q.is_duplicable() && self.wanted(&SimpleConstraint::new(q.u().iter().cloned(), []).tensor(q1), body)?
            }
            Wanted::Tensor(a, b) => {
                let mut found = false;
                for (l, r) in splits(q) {
                    if self.wanted(&l, a)? && self.wanted(&r, b)? {
                        found = true;
                        break;
                    }
                }
                found
            }
        };
        self.memo.insert(key, r);
        Ok(r)
    }
}

/// Every way to share `Q` between two sides: `U` goes to both, each linear
/// atom to one side, duplicable ones possibly to both.
pub fn splits(q: &SimpleConstraint) -> Vec<(SimpleConstraint, SimpleConstraint)> {
    let counts: Vec<(Atom, usize)> = q.l_counts().into_iter().collect();
    let mut out = vec![(vec![], vec![])];
    for (a, n) in &counts {
        let mut next = vec![];
        for (l, r) in &out {
            for k in 0..=*n {
                let mut choices = vec![(k, n - k)];
                if a.is_duplicable() {
                    // Shared copies: `k` on the left, and the right also
                    // receives between one and `k` of them again.
                    for extra in 1..=k {
                        choices.push((k, n - k + extra));
                    }
                }
                for (kl, kr) in choices {
                    let mut l2: Vec<Atom> = l.clone();
                    let mut r2: Vec<Atom> = r.clone();
                    l2.extend(std::iter::repeat_n(a.clone(), kl));
                    r2.extend(std::iter::repeat_n(a.clone(), kr));
                    next.push((l2, r2));
                }
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|(l, r)| (SimpleConstraint::new(q.u().iter().cloned(), l), SimpleConstraint::new(q.u().iter().cloned(), r)))
        .collect()
}

/// A closed form of `entails_simple`, for cross-checking.
pub fn entails_simple_closed(q1: &SimpleConstraint, q2: &SimpleConstraint) -> bool {
    if !q2.u().is_subset(q1.u()) {
        return false;
    }
    let supply = q1.l_counts();
    let demand = q2.l_counts();
    let mut all: BTreeMap<&Atom, ()> = BTreeMap::new();
    supply.keys().chain(demand.keys()).for_each(|a| {
        all.insert(a, ());
    });
    all.keys().all(|a| {
        let s = supply.get(*a).copied().unwrap_or(0);
        let d = demand.get(*a).copied().unwrap_or(0);
        if a.is_duplicable() {
            d == 0 || s > 0 || q1.u().contains(*a)
        } else if q1.u().contains(*a) {
            d >= s
        } else {
            d == s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> Atom {
        Atom::nullary("C")
    }

    fn lin() -> Atom {
        Atom::linearly()
    }

    fn q(u: &[Atom], l: &[Atom]) -> SimpleConstraint {
        SimpleConstraint::new(u.iter().cloned(), l.iter().cloned())
    }

    fn ok(q: &SimpleConstraint, c: &Wanted) -> bool {
        entails_wanted(q, c, OracleBudget::default()).unwrap()
    }

    #[test]
    fn simple_examples() {
        assert!(entails_simple(&q(&[], &[c()]), &q(&[], &[c()])));
        assert!(!entails_simple(&q(&[], &[c()]), &SimpleConstraint::empty()));
        assert!(entails_simple(&q(&[], &[lin()]), &SimpleConstraint::empty()));
        assert!(entails_simple(&q(&[], &[lin()]), &q(&[], &[lin(), lin()])));
        assert!(!entails_simple(&q(&[], &[lin()]), &q(&[lin()], &[])));
        assert!(entails_simple(&q(&[c()], &[c()]), &q(&[], &[c(), c(), c()])));
        assert!(!entails_simple(&q(&[c()], &[c(), c()]), &q(&[], &[c()])));
    }

    #[test]
    fn wanted_examples() {
        let one_c = q(&[], &[c()]);
        assert!(ok(&one_c, &Wanted::atom(Mult::One, c())));
        let amb1 = Wanted::implication(Mult::One, SimpleConstraint::unrestricted(c()), Wanted::atom(Mult::One, c()));
        assert!(ok(&one_c, &amb1));
        assert!(!ok(&one_c, &Wanted::with(Wanted::atom(Mult::One, c()), Wanted::empty())));
        let twice = Wanted::tensor(Wanted::atom(Mult::One, c()), Wanted::atom(Mult::One, c()));
        assert!(!ok(&one_c, &twice));
        assert!(ok(&q(&[], &[lin()]), &Wanted::tensor(Wanted::atom(Mult::One, lin()), Wanted::atom(Mult::One, lin()))));
        // An unrestricted implication cannot see linear givens, even duplicable ones.
        let many = Wanted::implication(Mult::Many, SimpleConstraint::empty(), Wanted::atom(Mult::One, lin()));
        assert!(!ok(&q(&[], &[lin()]), &many));
        assert!(ok(&q(&[lin()], &[]), &many));
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let mut w = Wanted::atom(Mult::One, c());
        for _ in 0..6 {
            w = Wanted::tensor(w.clone(), w);
        }
        let big = q(&[], &vec![c(); 64]);
        let tight = OracleBudget { max_atoms: 4, max_depth: 12, max_nodes: 50 };
        assert_eq!(entails_wanted(&big, &w, tight), Err(Inconclusive));
    }

    #[test]
    fn splits_cover_duplication() {
        let s = splits(&q(&[], &[lin()]));
        assert!(s.contains(&(q(&[], &[lin()]), q(&[], &[lin()]))));
        assert!(s.contains(&(q(&[], &[]), q(&[], &[lin()]))));
        assert_eq!(splits(&q(&[], &[c(), c()])).len(), 3);
    }
}
