//! Executable metatheory: exhaustive and randomized checks of the entailment
//! relation and the solver, shared by the unit tests and the acceptance suite.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::{Atom, Mult, SimpleConstraint, SitedWanted, Wanted};
use crate::entail::{entails_simple, entails_wanted, OracleBudget};
use crate::solver::{GivenContext, Named, Solver};

/// `C`, `C'` and `Linearly`.
pub fn small_alphabet() -> Vec<Atom> {
    vec![Atom::nullary("C"), Atom::nullary("C'"), Atom::linearly()]
}

fn multisets(alphabet: &[Atom], max: usize) -> Vec<Vec<Atom>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<(usize, Vec<Atom>)> = vec![(0, vec![])];
    for _ in 0..max {
        let mut next = vec![];
        for (start, m) in &frontier {
            for (i, a) in alphabet.iter().enumerate().skip(*start) {
                let mut m2 = m.clone();
                m2.push(a.clone());
                out.push(m2.clone());
                next.push((i, m2));
            }
        }
        frontier = next;
    }
    out
}

/// Every simple constraint with at most `max` atoms in each component.
pub fn enumerate_simple(alphabet: &[Atom], max: usize) -> Vec<SimpleConstraint> {
    let mut us = vec![];
    for mask in 0u32..(1 << alphabet.len()) {
        let u: Vec<Atom> = alphabet.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a.clone()).collect();
        if u.len() <= max {
            us.push(u);
        }
    }
    let ls = multisets(alphabet, max);
    let mut out = vec![];
    for u in &us {
        for l in &ls {
            out.push(SimpleConstraint::new(u.clone(), l.clone()));
        }
    }
    out
}

/// Constraints over [`small_alphabet`] with at most six linear copies of each
/// atom, encoded densely: `U` as a bitmask, then the three counts.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Code(usize);

const MAX_COUNT: usize = 7;
const CODES: usize = 8 * MAX_COUNT * MAX_COUNT * MAX_COUNT;

impl Code {
    fn of(q: &SimpleConstraint, alphabet: &[Atom]) -> Code {
        let mut mask = 0;
        let mut counts = [0usize; 3];
        for (i, a) in alphabet.iter().enumerate() {
            if q.u().contains(a) {
                mask |= 1 << i;
            }
            counts[i] = q.l().iter().filter(|b| *b == a).count();
        }
        Code::pack(mask, counts)
    }

    fn pack(mask: usize, c: [usize; 3]) -> Code {
        Code(mask + 8 * (c[0] + MAX_COUNT * (c[1] + MAX_COUNT * c[2])))
    }

    fn parts(self) -> (usize, [usize; 3]) {
        let rest = self.0 / 8;
        (self.0 % 8, [rest % MAX_COUNT, (rest / MAX_COUNT) % MAX_COUNT, rest / (MAX_COUNT * MAX_COUNT)])
    }

    fn tensor(self, o: Code) -> Code {
        let ((m1, c1), (m2, c2)) = (self.parts(), o.parts());
        Code::pack(m1 | m2, [c1[0] + c2[0], c1[1] + c2[1], c1[2] + c2[2]])
    }

    fn many(self) -> Code {
        let (m, c) = self.parts();
        let lin = (0..3).filter(|i| c[*i] > 0).fold(0, |acc, i| acc | (1 << i));
        Code::pack(m | lin, [0; 3])
    }

    fn decode(self, alphabet: &[Atom]) -> SimpleConstraint {
        let (m, c) = self.parts();
        SimpleConstraint::new(
            (0..3).filter(|i| m & (1 << i) != 0).map(|i| alphabet[i].clone()).collect::<Vec<_>>(),
            (0..3).flat_map(|i| std::iter::repeat_n(alphabet[i].clone(), c[i])).collect::<Vec<_>>(),
        )
    }
}

/// Memoized `entails_simple` over codes.
struct Table {
    alphabet: Vec<Atom>,
    cache: Vec<i8>,
}

impl Table {
    fn ent(&mut self, a: Code, b: Code) -> bool {
        let slot = &mut self.cache[a.0 * CODES + b.0];
        if *slot < 0 {
            *slot = entails_simple(&a.decode(&self.alphabet), &b.decode(&self.alphabet)) as i8;
        }
        *slot == 1
    }
}

/// Violations of each numbered requirement on the entailment relation, over
/// every constraint with at most three atoms per component drawn from
/// [`small_alphabet`]. Keys are the requirement numbers checked.
pub fn entailment_requirements() -> BTreeMap<u32, usize> {
    let alphabet = small_alphabet();
    let qs = enumerate_simple(&alphabet, 3);
    let all: Vec<Code> = qs.iter().map(|q| Code::of(q, &alphabet)).collect();
    let mut t = Table { alphabet: alphabet.clone(), cache: vec![-1; CODES * CODES] };
    let empty = Code::pack(0, [0; 3]);
    let dup = |c: Code| {
        let (_, n) = c.parts();
        // Only the third atom, `Linearly`, is duplicable.
        n[0] == 0 && n[1] == 0
    };
    let mut pairs = vec![];
    for &a in &all {
        for &b in &all {
            if t.ent(a, b) {
                pairs.push((a, b));
            }
        }
    }
    let mut v: BTreeMap<u32, usize> = [1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12].into_iter().map(|k| (k, 0)).collect();
    let mut bump = |k: u32, ok: bool| {
        if !ok {
            *v.get_mut(&k).unwrap() += 1;
        }
    };

    for &q in &all {
        bump(1, t.ent(q, q));
        if t.ent(q, empty) {
            bump(4, dup(q));
        }
    }

    // Requirement 2 compares what `Q ⊗ Q2` and `Q ⊗ Q1` entail, as bitsets over `all`.
    let mut reach: HashMap<Code, Vec<bool>> = HashMap::new();
    let mut reach_of = |t: &mut Table, q: Code| -> Vec<bool> {
        reach.entry(q).or_insert_with(|| all.iter().map(|q3| t.ent(q, *q3)).collect()).clone()
    };
    for &q in &all {
        for &(q1, q2) in &pairs {
            let via2 = reach_of(&mut t, q.tensor(q2));
            let via1 = reach_of(&mut t, q.tensor(q1));
            bump(2, via2.iter().zip(&via1).all(|(b2, b1)| !*b2 || *b1));
        }
    }

    for &(a, a2) in &pairs {
        for &(b, b2) in &pairs {
            bump(5, t.ent(a.tensor(b), a2.tensor(b2)));
        }
    }

    for &(q1, q2) in &pairs {
        bump(8, t.ent(q1.many(), q2));
        for &q in &all {
            bump(9, t.ent(q.many().tensor(q1), q2));
        }
        if dup(q2) {
            bump(12, dup(q1));
        }
    }

    for (qi, &q) in all.iter().enumerate() {
        for a in &alphabet {
            for rho in [Mult::One, Mult::Many] {
                let target = SimpleConstraint::scaled(rho, a.clone());
                for pi in [Mult::One, Mult::Many] {
                    let scaled = SimpleConstraint::scaled(pi.mul(rho), a.clone());
                    let qq = &qs[qi];
                    if entails_simple(qq, &target) {
                        bump(6, entails_simple(&qq.scale(pi), &scaled));
                    }
                    if entails_simple(qq, &scaled) {
                        // Some Q' with π·Q' = Q entails ρ·q. This holds only up
                        // to a discardable residue: a linear `Linearly` may sit
                        // beside `ω·Q'`.
                        let ok = match pi {
                            Mult::One => entails_simple(qq, &target),
                            Mult::Many => {
                                dup(q)
                                    && preimages_of_many(&SimpleConstraint::new(qq.u().iter().cloned(), []))
                                        .iter()
                                        .any(|q2| entails_simple(q2, &target))
                            }
                        };
                        bump(7, ok);
                    }
                }
            }
        }
    }

    for a in alphabet.iter().filter(|a| a.is_duplicable()) {
        let one = Code::of(&SimpleConstraint::linear(a.clone()), &alphabet);
        bump(10, t.ent(one, one.tensor(one)));
        bump(11, t.ent(one, empty));
    }
    v
}

/// All `Q'` (with at most one copy of each linear atom) such that `ω·Q' = q`.
fn preimages_of_many(q: &SimpleConstraint) -> Vec<SimpleConstraint> {
    let atoms: Vec<Atom> = q.u().iter().cloned().collect();
    let mut out = vec![];
    for lin in 0u32..(1 << atoms.len()) {
        for keep in 0u32..(1 << atoms.len()) {
            let l: Vec<Atom> = atoms.iter().enumerate().filter(|(i, _)| lin & (1 << i) != 0).map(|(_, a)| a.clone()).collect();
            let u: Vec<Atom> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| keep & (1 << i) != 0 || lin & (1 << i) == 0)
                .map(|(_, a)| a.clone())
                .collect();
            out.push(SimpleConstraint::new(u, l));
        }
    }
    out
}

/// How many pairs the search-based and closed-form simple entailment
/// disagree on, over the enumerated constraints.
pub fn closed_form_disagreements() -> usize {
    let all = enumerate_simple(&small_alphabet(), 3);
    let mut n = 0;
    for a in &all {
        for b in &all {
            if entails_simple(a, b) != crate::entail::entails_simple_closed(a, b) {
                n += 1;
            }
        }
    }
    n
}

/// `C`, `C'`, `C''` and `Linearly`.
pub fn fuzz_alphabet() -> Vec<Atom> {
    vec![Atom::nullary("C"), Atom::nullary("C'"), Atom::nullary("C''"), Atom::linearly()]
}

fn pick<'a, T>(rng: &mut impl Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

fn mult(rng: &mut impl Rng) -> Mult {
    if rng.gen_bool(0.7) {
        Mult::One
    } else {
        Mult::Many
    }
}

pub fn random_simple(rng: &mut impl Rng, alphabet: &[Atom], max: usize) -> SimpleConstraint {
    let nu = rng.gen_range(0..=max.min(2));
    let nl = rng.gen_range(0..=max);
    SimpleConstraint::new(
        (0..nu).map(|_| pick(rng, alphabet).clone()).collect::<Vec<_>>(),
        (0..nl).map(|_| pick(rng, alphabet).clone()).collect::<Vec<_>>(),
    )
}

pub fn random_wanted(rng: &mut impl Rng, alphabet: &[Atom], depth: usize) -> Wanted {
    if depth == 0 || rng.gen_bool(0.3) {
        let n = rng.gen_range(0..=2);
        let mut q = SimpleConstraint::empty();
        for _ in 0..n {
            q = q.tensor(&SimpleConstraint::scaled(mult(rng), pick(rng, alphabet).clone()));
        }
        return Wanted::Simple(q);
    }
    match rng.gen_range(0..3) {
        0 => Wanted::tensor(random_wanted(rng, alphabet, depth - 1), random_wanted(rng, alphabet, depth - 1)),
        1 => Wanted::with(random_wanted(rng, alphabet, depth - 1), random_wanted(rng, alphabet, depth - 1)),
        _ => Wanted::implication(mult(rng), random_simple(rng, alphabet, 2), random_wanted(rng, alphabet, depth - 1)),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FuzzStats {
    pub trials: usize,
    /// Instances where the property's premise held.
    pub exercised: usize,
    pub violations: usize,
    pub inconclusive: usize,
}

impl FuzzStats {
    pub fn inconclusive_rate(&self) -> f64 {
        if self.exercised == 0 {
            0.0
        } else {
            self.inconclusive as f64 / self.exercised as f64
        }
    }
}

fn multiset_sub(small: &[Atom], big: &[Atom]) -> bool {
    let mut big: Vec<&Atom> = big.iter().collect();
    small.iter().all(|a| match big.iter().position(|b| *b == a) {
        Some(i) => {
            big.swap_remove(i);
            true
        }
        None => false,
    })
}

/// A random well-formed given context: duplicable atoms go to `D`.
pub fn random_context(rng: &mut impl Rng, alphabet: &[Atom]) -> GivenContext {
    let mut ctx = GivenContext::empty();
    let mut k = 0;
    let mut name = || {
        k += 1;
        format!("g{k}")
    };
    for _ in 0..rng.gen_range(0..=2) {
        let a = pick(rng, alphabet).clone();
        if !ctx.u.iter().any(|n| n.atom == a) {
            ctx.u.push(Named { atom: a, name: name() });
        }
    }
    for _ in 0..rng.gen_range(0..=4) {
        let a = pick(rng, alphabet).clone();
        let n = Named { atom: a, name: name() };
        if n.atom.is_duplicable() {
            ctx.d.push(n);
        } else {
            ctx.l.push(n);
        }
    }
    ctx
}

/// Whenever the solver succeeds, its leftover is part of its input and the
/// oracle confirms `(U, D ⊎ L_in) ⊢ C ⊗ (∅, L_out)`.
pub fn solver_soundness(trials: usize, seed: u64, budget: OracleBudget) -> FuzzStats {
    let alphabet = fuzz_alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = FuzzStats { trials, ..Default::default() };
    for _ in 0..trials {
        let ctx = random_context(&mut rng, &alphabet);
        let c = random_wanted(&mut rng, &alphabet, 3);
        let sited = SitedWanted::from_plain(&c, "f");
        let Ok(sol) = Solver::new().solve(&ctx, &sited) else { continue };
        st.exercised += 1;
        let l_in: Vec<Atom> = ctx.l.iter().map(|n| n.atom.clone()).collect();
        let l_out: Vec<Atom> = sol.leftover.iter().map(|n| n.atom.clone()).collect();
        if !multiset_sub(&l_out, &l_in) {
            st.violations += 1;
            continue;
        }
        let given = SimpleConstraint::new(
            ctx.u.iter().map(|n| n.atom.clone()),
            ctx.d.iter().chain(&ctx.l).map(|n| n.atom.clone()),
        );
        let goal = Wanted::tensor(c, Wanted::Simple(SimpleConstraint::new([], l_out)));
        match entails_wanted(&given, &goal, budget) {
            Ok(true) => {}
            Ok(false) => st.violations += 1,
            Err(_) => st.inconclusive += 1,
        }
    }
    st
}

/// Scaling preserves entailment: `Q ⊢ C` implies `π·Q ⊢ π·C`.
pub fn scaling(trials: usize, seed: u64, budget: OracleBudget) -> FuzzStats {
    let alphabet = fuzz_alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = FuzzStats { trials, ..Default::default() };
    for _ in 0..trials {
        let pi = mult(&mut rng);
        let q = random_simple(&mut rng, &alphabet, 3);
        let c = random_wanted(&mut rng, &alphabet, 3);
        match entails_wanted(&q, &c, budget) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(_) => {
                st.inconclusive += 1;
                continue;
            }
        }
        st.exercised += 1;
        match entails_wanted(&q.scale(pi), &c.scale(pi), budget) {
            Ok(true) => {}
            Ok(false) => st.violations += 1,
            Err(_) => st.inconclusive += 1,
        }
    }
    st
}

/// Inversion of scaling: `Q ⊢ π·C` implies `Q = π·Q' ⊗ Q_D` with
/// `Q' ⊢ C` and `Q_D` discardable.
pub fn scaling_inversion(trials: usize, seed: u64, budget: OracleBudget) -> FuzzStats {
    let alphabet = fuzz_alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = FuzzStats { trials, ..Default::default() };
    for _ in 0..trials {
        let pi = if rng.gen_bool(0.5) { Mult::One } else { Mult::Many };
        // Unrestricted givens make the premise hold more often.
        let mut q = random_simple(&mut rng, &alphabet, 3);
        if pi == Mult::Many && rng.gen_bool(0.6) {
            q = SimpleConstraint::new(q.atoms(), q.l().iter().filter(|a| a.is_duplicable()).cloned().collect::<Vec<_>>());
        }
        let c = random_wanted(&mut rng, &alphabet, 3);
        match entails_wanted(&q, &c.scale(pi), budget) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(_) => {
                st.inconclusive += 1;
                continue;
            }
        }
        st.exercised += 1;
        let witness = match pi {
            Mult::One => Some(q.clone()),
            Mult::Many if q.is_duplicable() => Some(SimpleConstraint::new(q.u().iter().cloned(), [])),
            Mult::Many => None,
        };
        let ok = match witness {
            None => Ok(false),
            Some(w) => entails_wanted(&w, &c, budget),
        };
        match ok {
            Ok(true) => {}
            Ok(false) => st.violations += 1,
            Err(_) => st.inconclusive += 1,
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_sizes() {
        let all = enumerate_simple(&small_alphabet(), 3);
        assert_eq!(all.len(), 8 * 20);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
    }

    #[test]
    fn search_and_closed_form_agree() {
        assert_eq!(closed_form_disagreements(), 0);
    }

    #[test]
    fn solver_is_sound_on_a_small_sample() {
        let st = solver_soundness(200, 1, OracleBudget::default());
        assert_eq!(st.violations, 0, "{st:?}");
        assert!(st.exercised > 20, "{st:?}");
    }

    #[test]
    fn scaling_on_a_small_sample() {
        let st = scaling(100, 2, OracleBudget::default());
        assert_eq!(st.violations, 0, "{st:?}");
        let st = scaling_inversion(100, 3, OracleBudget::default());
        assert_eq!(st.violations, 0, "{st:?}");
    }
}

#[cfg(test)]
mod exhaustive {
    #[test]
    fn entailment_requirements_hold() {
        let v = super::entailment_requirements();
        assert!(v.values().all(|n| *n == 0), "{v:?}");
    }

    #[test]
    fn full_fuzz_budgets() {
        use crate::entail::OracleBudget;
        let st = super::solver_soundness(1000, 7, OracleBudget::default());
        assert_eq!(st.violations, 0, "{st:?}");
        assert!(st.inconclusive_rate() < 0.05, "{st:?}");
        for st in [super::scaling(500, 8, OracleBudget::default()), super::scaling_inversion(500, 9, OracleBudget::default())] {
            assert_eq!(st.violations, 0, "{st:?}");
            println!("{st:?}");
        }
        println!("{st:?}");
    }
}
