use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel).to_str().unwrap().to_string()
}

fn lqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqc")).args(args).output().unwrap()
}

fn lqc_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lqc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lqc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn overusing_is_rejected_with_location_and_class() {
    let f = corpus("reject/overusing.lql");
    let out = lqc(&["check", &f]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.starts_with(&format!("{f}:3:")), "{err}");
    assert!(err.contains("error[LinearOveruse]"), "{err}");
}

#[test]
fn read2_is_accepted() {
    let out = lqc(&["check", &corpus("accept/read2.lql")]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out.stderr.is_empty());
}

#[test]
fn quicksort_run_prints_sorted_array() {
    let out = lqc(&["run", &corpus("accept/quicksort.lql"), "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let expected: Vec<String> = (0..64).map(|i| i.to_string()).collect();
    assert_eq!(text(&out.stdout), format!("[{}]\nUr ()\n", expected.join(", ")));
}

#[test]
fn runtime_errors_are_user_errors() {
    let p = temp_file(
        "oob.lql",
        "main :: Ur ()\nmain = linearly (\n  let pack arr = new 4 in\n  let pack () = write arr 0 1 in\n  let pack (Ur v) = read arr 10 in\n  let () = free arr in\n  Ur ())\n",
    );
    let out = lqc(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error[OutOfBounds]"));
}

#[test]
fn parse_errors_and_missing_files_exit_one() {
    let p = temp_file("broken.lql", "main = (\n");
    let out = lqc(&["check", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(":2:1: error[ParseError]"));
    assert_eq!(lqc(&["check", "/nonexistent/file.lql"]).status.code(), Some(1));
}

#[test]
fn dump_json_has_the_documented_fields() {
    let out = lqc(&["check", "--dump-json", &corpus("accept/swap.lql")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bindings = v.as_array().unwrap();
    assert_eq!(bindings.len(), 2);
    let swap = &bindings[0];
    assert_eq!(swap["binding"], "swap");
    assert!(swap["constraint"].is_string());
    assert!(!swap["sites"].as_array().unwrap().is_empty());
    for s in swap["sites"].as_array().unwrap() {
        assert!(s["given"].is_string(), "every site is solved: {s}");
    }
    assert!(swap["trace"].as_array().unwrap().iter().any(|t| t.as_str().unwrap().contains("ATOM-ONE")));
}

#[test]
fn dump_derivation_prints_every_binding() {
    let out = lqc(&["check", "--dump-derivation", &corpus("accept/g_dup.lql")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn trace_of_a_rejected_program_ends_in_the_error() {
    let out = lqc(&["trace", &corpus("reject/dithering.lql")]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("== dithering\n"), "{stdout}");
    assert!(stdout.trim_end().ends_with("error BranchMismatch: case branches consume different linear constraints: [] versus [C]"));
}

#[test]
fn constraints_lists_one_line_per_binding() {
    let out = lqc(&["constraints", &corpus("reject/overusing.lql")]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("overusing: ω·("));
}

#[test]
fn elaborated_corpus_passes_standalone_lint() {
    for f in ["g_dup", "give_ok", "linearly", "notNeglecting", "quicksort", "read2", "shadowing", "swap"] {
        let out = lqc(&["elaborate", &corpus(&format!("accept/{f}.lql"))]);
        assert_eq!(out.status.code(), Some(0), "{f}");
        let p = temp_file(&format!("{f}.core"), &text(&out.stdout));
        let lint = lqc(&["lint", p.to_str().unwrap()]);
        assert_eq!(lint.status.code(), Some(0), "{f}: {}", text(&lint.stderr));
    }
}

#[test]
fn elaborate_json_lists_definitions() {
    let out = lqc(&["elaborate", "--json", &corpus("accept/read2.lql")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let defs = v["defs"].as_array().unwrap();
    assert!(defs.iter().all(|d| d["name"].is_string() && d["type"].is_string() && d["body"].is_string()));
}

#[test]
fn lint_rejects_a_duplicated_token() {
    let p = temp_file(
        "dup.core",
        "(def f (forall () (-o (tok C) (app Pair (tok C) (tok C))))\n  (\\ x 1 (tok C) (((@ Pair (tok C) (tok C)) x) x)))\n",
    );
    let out = lqc(&["lint", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("error[LintLinearity]"), "{}", text(&out.stderr));
}

#[test]
fn oracle_decides_entailment_from_stdin() {
    let q = r#"{"given": {"U": [], "L": ["C"]}, "wanted": {"Simple": {"U": [], "L": ["C"]}}}"#;
    assert_eq!(text(&lqc_stdin(&["oracle"], q).stdout), "true\n");
    let q = r#"{"given": {"U": [], "L": ["C"]}, "wanted": {"Tensor": [{"Simple": {"U": [], "L": ["C"]}}, {"Simple": {"U": [], "L": ["C"]}}]}}"#;
    assert_eq!(text(&lqc_stdin(&["oracle"], q).stdout), "false\n");
    let out = lqc_stdin(&["oracle", "--max-fuel", "1"], q);
    assert_eq!(text(&out.stdout), "inconclusive\n");
    assert_eq!(lqc_stdin(&["oracle"], "{}").status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for f in ["accept/quicksort.lql", "reject/ambiguous2.lql"] {
        for cmd in ["check", "trace", "elaborate", "constraints"] {
            let (a, b) = (lqc(&[cmd, &corpus(f)]), lqc(&[cmd, &corpus(f)]));
            assert_eq!(a.stdout, b.stdout, "{cmd} {f}");
            assert_eq!(a.stderr, b.stderr, "{cmd} {f}");
        }
    }
}
