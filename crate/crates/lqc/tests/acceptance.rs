//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use lqc_core::calculus::RunConfig;
use lqc_core::entail::{entails_wanted, OracleBudget};
use lqc_core::fuzz::accepted_programs;
use lqc_core::pipeline::{check, check_with, elaborate_and_lint, run};
use lqc_core::properties::{entailment_requirements, scaling, scaling_inversion, solver_soundness};
use lqc_core::solver::Selection;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(kind);
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lql"))
        .collect();
    v.sort();
    v
}

fn lqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqc")).args(args).output().expect("spawn lqc")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn corpus_verdicts() -> Outcome {
    let mut bad = vec![];
    let mut n = 0;
    let limit = Duration::from_secs(1);
    for (kind, code) in [("accept", 0), ("reject", 1)] {
        for p in corpus(kind) {
            n += 1;
            let t = Instant::now();
            let out = lqc(&["check", p.to_str().unwrap()]);
            let took = t.elapsed();
            let stderr = String::from_utf8_lossy(&out.stderr);
            if out.status.code() != Some(code) {
                bad.push(format!("{}: exit {:?}", p.display(), out.status.code()));
            }
            if code == 1 {
                let class = read(&p.with_extension("expected")).trim().to_string();
                if !stderr.contains(&format!("error[{class}]")) {
                    bad.push(format!("{}: expected {class}, got {}", p.display(), stderr.trim()));
                }
            }
            if took >= limit {
                bad.push(format!("{}: took {took:?}", p.display()));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{n} files"))
    } else {
        Err(bad.join("; "))
    }
}

fn elaboration_lints() -> Outcome {
    let mut failures = vec![];
    let accepted = corpus("accept");
    for p in &accepted {
        if let Err(d) = elaborate_and_lint(&read(p)) {
            failures.push(format!("{}: {}", p.display(), d));
        }
    }
    let fz = accepted_programs(42, 220, 120);
    if fz.accepted.len() < 200 {
        failures.push(format!("only {} fuzz programs accepted", fz.accepted.len()));
    }
    for (i, prog) in fz.accepted.iter().enumerate() {
        if let Err(d) = elaborate_and_lint(&prog.source) {
            failures.push(format!("fuzz #{i}: {d}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} corpus + {} fuzz programs lint", accepted.len(), fz.accepted.len()))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn vm_safety() -> Outcome {
    let fz = accepted_programs(7, 220, 120);
    let mut n = 0;
    for prog in fz.runnable() {
        n += 1;
        if let Err((d, _)) = run(&prog.source, &RunConfig { seed: 3, ..Default::default() }) {
            return Err(format!("{d}\n{}", prog.source));
        }
    }
    Ok(format!("{n} runnable fuzz programs ran without runtime errors"))
}

fn stats_outcome(s: lqc_core::properties::FuzzStats, check_rate: bool) -> Outcome {
    let msg = format!(
        "{} trials, {} exercised, {} violations, {:.1}% inconclusive",
        s.trials,
        s.exercised,
        s.violations,
        100.0 * s.inconclusive_rate()
    );
    if s.violations == 0 && (!check_rate || s.inconclusive_rate() < 0.05) && s.exercised > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn solver_sound() -> Outcome {
    stats_outcome(solver_soundness(1000, 2024, OracleBudget::default()), true)
}

fn incompleteness_witnesses() -> Outcome {
    let mut notes = vec![];
    for name in ["ambiguous1", "ambiguous2"] {
        let src = read(&Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../corpus/reject/{name}.lql")));
        let bs = check(&src).map_err(|d| format!("{name}: {d}"))?;
        let b = bs.iter().find(|b| b.binding.name == name).ok_or(format!("{name}: binding missing"))?;
        let c = b.obligation.erase();
        let oracle = entails_wanted(&Default::default(), &c, OracleBudget::default());
        if oracle != Ok(true) {
            return Err(format!("{name}: oracle says {oracle:?} for {c}"));
        }
        match b.diagnostic() {
            Some(d) if d.class == "Ambiguous" => notes.push(format!("{name}: entailed, solver rejects")),
            other => return Err(format!("{name}: solver outcome {other:?}")),
        }
    }
    Ok(notes.join(", "))
}

fn requirements() -> Outcome {
    let r = entailment_requirements();
    let want = [1, 2, 5, 8, 9, 10, 11];
    let missing: Vec<_> = want.iter().filter(|k| !r.contains_key(k)).collect();
    let violations: usize = want.iter().filter_map(|k| r.get(k)).sum();
    let msg = format!("requirements {want:?}: {violations} violations");
    if missing.is_empty() && violations == 0 {
        Ok(msg)
    } else {
        Err(format!("{msg}, unchecked {missing:?}"))
    }
}

fn scaling_lemmas() -> Outcome {
    let a = stats_outcome(scaling(500, 11, OracleBudget::default()), false);
    let b = stats_outcome(scaling_inversion(500, 12, OracleBudget::default()), false);
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(format!("scaling: {a}; inversion: {b}")),
        (a, b) => Err(format!("scaling: {a:?}; inversion: {b:?}")),
    }
}

fn swap_program(i: usize, j: usize) -> String {
    let src = read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/accept/swap.lql"));
    let def = &src[..src.find("main ::").expect("swap corpus has main")];
    let mut main = String::from("main :: Ur ()\nmain = linearly (\n  let pack arr = new 8 in\n");
    for k in 0..8 {
        main += &format!("  let pack () = write arr {k} {} in\n", 100 + k);
    }
    main += &format!("  let pack () = swap arr {i} {j} in\n  let pack () = printArray arr in\n  let () = free arr in\n  Ur ())\n");
    format!("{def}{main}")
}

fn runtime_correctness() -> Outcome {
    let qs = read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/accept/quicksort.lql"));
    let r = run(&qs, &RunConfig { seed: 7, ..Default::default() }).map_err(|(d, _)| d.to_string())?;
    let printed: Vec<i64> = r
        .output
        .last()
        .and_then(|l| l.strip_prefix('[')?.strip_suffix(']').map(str::to_string))
        .map(|l| l.split(", ").filter_map(|x| x.parse().ok()).collect())
        .unwrap_or_default();
    let mut sorted = printed.clone();
    sorted.sort_unstable();
    if printed != sorted || sorted != (0..64).collect::<Vec<i64>>() {
        return Err(format!("quicksort printed {:?}", r.output));
    }
    let mut mismatches = vec![];
    for i in 0..8 {
        for j in 0..8 {
            let mut a: Vec<i64> = (100..108).collect();
            a.swap(i, j);
            let want = format!("[{}]", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
            match run(&swap_program(i, j), &RunConfig::default()) {
                Ok(r) if r.output == [want.clone()] => {}
                Ok(r) => mismatches.push(format!("({i},{j}): {:?} vs {want}", r.output)),
                Err((d, _)) => mismatches.push(format!("({i},{j}): {d}")),
            }
        }
    }
    if mismatches.is_empty() {
        Ok("quicksort sorted; swap matches on all 64 index pairs".into())
    } else {
        Err(format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]))
    }
}

fn ordering_regression() -> Outcome {
    let src = read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/accept/shadowing.lql"));
    let verdict = |sel| match check_with(&src, sel) {
        Ok(bs) => bs.iter().find_map(|b| b.diagnostic()).map(|d| d.class),
        Err(d) => Some(d.class),
    };
    let recent = verdict(Selection::MostRecent);
    let oldest = verdict(Selection::Oldest);
    match (&recent, &oldest) {
        (None, Some(c)) => Ok(format!("most-recent accepts, oldest-first rejects with {c}")),
        _ => Err(format!("most-recent: {recent:?}, oldest-first: {oldest:?}")),
    }
}

fn determinism() -> Outcome {
    let mut files = corpus("accept");
    files.extend(corpus("reject"));
    let mut runs = 0;
    for p in &files {
        for cmd in ["check", "trace", "elaborate"] {
            let f = p.to_str().unwrap();
            let (a, b) = (lqc(&[cmd, f]), lqc(&[cmd, f]));
            runs += 1;
            if a.stdout != b.stdout || a.stderr != b.stderr || a.status != b.status {
                return Err(format!("`lqc {cmd} {f}` differs between runs"));
            }
        }
    }
    Ok(format!("{runs} command pairs byte-identical"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 corpus verdicts", corpus_verdicts),
        ("2 elaborated programs pass core lint", elaboration_lints),
        ("3 solver soundness against the oracle", solver_sound),
        ("4 guess-free incompleteness witnesses", incompleteness_witnesses),
        ("5 entailment requirements", requirements),
        ("6 scaling and its inversion", scaling_lemmas),
        ("7 runtime correctness", runtime_correctness),
        ("8 most-recent selection regression", ordering_regression),
        ("9 determinism", determinism),
        ("vm safety of fuzzed programs", vm_safety),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        match f() {
            Ok(m) => println!("PASS {name}: {m} ({:.2?})", t.elapsed()),
            Err(m) => {
                failed += 1;
                println!("FAIL {name}: {m}");
            }
        }
    }
    println!("{} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
