//! Random surface programs for end-to-end testing of the checker,
//! elaborator, core lint and evaluator.
//!
//! Two families: runnable array and reference programs built around
//! `linearly`, and abstract programs that only shuffle `C` constraints
//! through signatures, `giveC` and local definitions. Generated programs
//! are well-formed by construction as far as the generator can tell; the
//! checker has the final word.

use std::fmt::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pipeline::first_error;

#[derive(Clone, Debug)]
pub struct FuzzProgram {
    pub source: String,
    /// Uses only builtins with a runtime implementation and defines `main`.
    pub runnable: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl Gen {
    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn lit(&mut self) -> i64 {
        self.rng.gen_range(0..10)
    }

    // Runnable family.

    fn helper(&mut self, k: usize) -> String {
        let mut out = format!("helper{k} :: RW n =o UArray Int n -> () * RW n\nhelper{k} arr =\n");
        for _ in 0..self.rng.gen_range(1..=4) {
            let i = self.rng.gen_range(0..5);
            let v = self.lit();
            match self.rng.gen_range(0..5) {
                0 => {
                    let val = if self.rng.gen_bool(0.5) { v.to_string() } else { "length arr".into() };
                    writeln!(out, "  let pack () = (if length arr > {i} then write arr {i} ({val}) else pack ()) in").unwrap();
                }
                1 => {
                    let side = *self.pick(&["l", "r"]);
                    writeln!(
                        out,
                        "  let pack () = (if length arr >= {i} then\n      let pack (Ur (l, r)) = split arr {i} in\n      let pack () = (if length {side} > 0 then write {side} 0 {v} else pack ()) in\n      let pack (Ur _) = (join l r :: exists . Ur (UArray Int n) * RW n) in\n      pack ()\n    else pack () :: () * RW n) in"
                    )
                    .unwrap();
                }
                2 => {
                    let go = self.fresh("go");
                    writeln!(
                        out,
                        "  letw {go} :: RW n =o Int -> () * RW n = \\i ->\n    if i >= length arr then pack ()\n    else let pack () = write arr i (i * {v}) in {go} (i + 1) in\n  let pack () = {go} {i} in"
                    )
                    .unwrap();
                }
                3 if k > 1 => {
                    let j = self.rng.gen_range(1..k);
                    writeln!(out, "  let pack () = helper{j} arr in").unwrap();
                }
                _ => {
                    writeln!(
                        out,
                        "  let pack () = (if length arr > {i} then lendMut arr {i} (\\e -> writeRef e {v}) else pack ()) in"
                    )
                    .unwrap();
                }
            }
        }
        out.push_str("  pack ()\n");
        out
    }

    fn int_expr(&mut self, ints: &[String]) -> String {
        if ints.is_empty() || self.rng.gen_bool(0.3) {
            self.lit().to_string()
        } else {
            let x = self.pick(ints).clone();
            match self.rng.gen_range(0..3) {
                0 => x,
                1 => format!("{x} + {}", self.lit()),
                _ => format!("{x} * {}", self.lit()),
            }
        }
    }

    fn runnable(&mut self) -> String {
        let helpers = self.rng.gen_range(0..=3);
        let mut out = String::new();
        for k in 1..=helpers {
            out.push_str(&self.helper(k));
            out.push('\n');
        }
        out.push_str("main :: Ur Int\nmain = linearly (\n");
        let mut live: Vec<(String, i64)> = vec![];
        let mut ints: Vec<String> = vec![];
        let new_array = |g: &mut Gen, out: &mut String, live: &mut Vec<(String, i64)>| {
            let a = g.fresh("a");
            let n = g.rng.gen_range(1..=6);
            writeln!(out, "  let pack {a} = new {n} in\n  let pack () = fillShuffled {a} in").unwrap();
            live.push((a, n));
        };
        new_array(self, &mut out, &mut live);
        // `case ... of { Ur x ->` blocks still open at the end.
        let mut closers = 0;
        for _ in 0..self.rng.gen_range(2..=10) {
            let (a, n) = self.pick(&live).clone();
            let i = self.rng.gen_range(0..n);
            match self.rng.gen_range(0..10) {
                0 => new_array(self, &mut out, &mut live),
                1 => {
                    let x = self.fresh("x");
                    writeln!(out, "  let pack (Ur {x}) = read {a} {i} in").unwrap();
                    ints.push(x);
                }
                2 => {
                    let e = self.int_expr(&ints);
                    writeln!(out, "  let pack () = write {a} {i} ({e}) in").unwrap();
                }
                3 if helpers > 0 => {
                    let k = self.rng.gen_range(1..=helpers);
                    writeln!(out, "  let pack () = helper{k} {a} in").unwrap();
                }
                4 => writeln!(out, "  let pack () = printArray {a} in").unwrap(),
                5 => {
                    let x = self.fresh("x");
                    writeln!(out, "  let pack (Ur {x}) = lend {a} {i} (\\e -> readRef e) in").unwrap();
                    ints.push(x);
                }
                6 => {
                    let c = self.int_expr(&ints);
                    let (e1, e2) = (self.int_expr(&ints), self.int_expr(&ints));
                    let j = self.rng.gen_range(0..n);
                    writeln!(out, "  let pack () = (if {c} > {} then write {a} {i} ({e1}) else write {a} {j} ({e2})) in", self.lit())
                        .unwrap();
                }
                7 if live.len() > 1 => {
                    writeln!(out, "  let () = free {a} in").unwrap();
                    live.retain(|(b, _)| b != &a);
                }
                8 => {
                    let (r, x) = (self.fresh("r"), self.fresh("x"));
                    let e = self.int_expr(&ints);
                    writeln!(
                        out,
                        "  let pack {r} = newRef in\n  let pack () = writeRef {r} ({e}) in\n  let pack (Ur {x}) = readRef {r} in\n  let () = freeRef {r} in"
                    )
                    .unwrap();
                    ints.push(x);
                }
                _ => {
                    let (b, x, v) = (self.fresh("b"), self.fresh("x"), self.fresh("v"));
                    let m = self.rng.gen_range(1..=4);
                    let j = self.rng.gen_range(0..m);
                    writeln!(
                        out,
                        "  case linearly (let pack {b} = new {m} in let pack () = fillShuffled {b} in let pack (Ur {v}) = read {b} {j} in let () = free {b} in Ur {v}) of {{ Ur {x} ->"
                    )
                    .unwrap();
                    ints.push(x);
                    closers += 1;
                }
            }
        }
        for (a, _) in &live {
            writeln!(out, "  let () = free {a} in").unwrap();
        }
        let total = if ints.is_empty() { "0".to_string() } else { ints.join(" + ") };
        format!("{out}  Ur ({total}){})\n", " }".repeat(closers))
    }

    // Abstract family.

    /// An expression of type `Int` using exactly `demand` linear `C`s
    /// through linear positions only, calling earlier functions.
    fn linear_expr(&mut self, demand: usize, fns: &[(String, Sig)], depth: usize) -> String {
        if demand == 0 {
            let zero: Vec<&(String, Sig)> = fns.iter().filter(|(_, s)| *s == Sig::Linear(0)).collect();
            if !zero.is_empty() && self.rng.gen_bool(0.3) {
                return zero[self.rng.gen_range(0..zero.len())].0.clone();
            }
            return self.lit().to_string();
        }
        if demand == 1 && (depth > 3 || self.rng.gen_bool(0.4)) {
            let ones: Vec<&(String, Sig)> = fns.iter().filter(|(_, s)| *s == Sig::Linear(1)).collect();
            if !ones.is_empty() && self.rng.gen_bool(0.5) {
                return ones[self.rng.gen_range(0..ones.len())].0.clone();
            }
            return "useC".into();
        }
        match self.rng.gen_range(0..4) {
            0 => {
                let k = self.rng.gen_range(0..=demand);
                let (a, b) = (self.linear_expr(k, fns, depth + 1), self.linear_expr(demand - k, fns, depth + 1));
                format!("addL ({a}) ({b})")
            }
            1 => {
                let a = self.linear_expr(demand, fns, depth + 1);
                let b = self.linear_expr(demand, fns, depth + 1);
                format!("if {} > {} then {a} else {b}", self.lit(), self.lit())
            }
            2 => {
                let x = self.fresh("x");
                let a = self.linear_expr(demand, fns, depth + 1);
                format!("let {x} = {a} in addL {x} {}", self.lit())
            }
            _ => {
                let h = self.fresh("h");
                let a = self.linear_expr(1, fns, depth + 1);
                let rest = self.linear_expr(demand - 1, fns, depth + 1);
                format!("letw {h} :: C =o Int = {a} in addL {h} ({rest})")
            }
        }
    }

    /// An expression with `C` available unrestrictedly.
    fn many_expr(&mut self, fns: &[(String, Sig)], depth: usize) -> String {
        if depth > 3 || self.rng.gen_bool(0.3) {
            if !fns.is_empty() && self.rng.gen_bool(0.5) {
                return self.pick(fns).0.clone();
            }
            return if self.rng.gen_bool(0.5) { "useC".into() } else { self.lit().to_string() };
        }
        let (a, b) = (self.many_expr(fns, depth + 1), self.many_expr(fns, depth + 1));
        match self.rng.gen_range(0..3) {
            0 => format!("{a} + ({b})"),
            1 => format!("const ({a}) ({b})"),
            _ => format!("if {} > {} then {a} else {b}", self.lit(), self.lit()),
        }
    }

    fn abstract_program(&mut self) -> String {
        let mut out = String::from("addL :: Int -o Int -o Int\naddL x y = x + y\n");
        let mut fns: Vec<(String, Sig)> = vec![];
        for k in 1..=self.rng.gen_range(1..=5) {
            let name = format!("f{k}");
            let (sig, body) = match self.rng.gen_range(0..3) {
                0 => {
                    let d = self.rng.gen_range(0..=3);
                    (Sig::Linear(d), self.linear_expr(d, &fns, 0))
                }
                1 => (Sig::Many, self.many_expr(&fns, 0)),
                _ => {
                    let callable: Vec<(String, Sig)> = fns.clone();
                    (Sig::Linear(0), format!("giveC ({})", self.many_expr(&callable, 0)))
                }
            };
            let ty = match sig {
                Sig::Linear(0) => "Int".to_string(),
                Sig::Linear(1) => "C =o Int".to_string(),
                Sig::Linear(d) => format!("({}) =o Int", vec!["C"; d].join(", ")),
                Sig::Many => "many C =o Int".to_string(),
            };
            writeln!(out, "\n{name} :: {ty}\n{name} = {body}").unwrap();
            fns.push((name, sig));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sig {
    Linear(usize),
    Many,
}

/// Candidate programs, in a fixed order for a given seed.
pub fn candidates(seed: u64) -> impl Iterator<Item = FuzzProgram> {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 };
    std::iter::from_fn(move || {
        g.fresh = 0;
        let runnable = g.rng.gen_bool(0.6);
        let source = if runnable { g.runnable() } else { g.abstract_program() };
        Some(FuzzProgram { source, runnable })
    })
}

#[derive(Clone, Debug, Default)]
pub struct FuzzCorpus {
    pub accepted: Vec<FuzzProgram>,
    pub rejected: usize,
}

impl FuzzCorpus {
    pub fn runnable(&self) -> impl Iterator<Item = &FuzzProgram> {
        self.accepted.iter().filter(|p| p.runnable)
    }
}

/// Generate until `runnable` accepted runnable programs and `total`
/// accepted programs overall have been collected.
pub fn accepted_programs(seed: u64, total: usize, runnable: usize) -> FuzzCorpus {
    let mut c = FuzzCorpus::default();
    let mut runnable_seen = 0;
    for p in candidates(seed) {
        if c.accepted.len() >= total && runnable_seen >= runnable {
            break;
        }
        let wanted = if p.runnable { runnable_seen < runnable || c.accepted.len() < total } else { c.accepted.len() - runnable_seen < total.saturating_sub(runnable) };
        if !wanted {
            continue;
        }
        match first_error(&p.source) {
            None => {
                runnable_seen += p.runnable as usize;
                c.accepted.push(p);
            }
            Some(_) => c.rejected += 1,
        }
    }
    c
}
