//! Source text to solved bindings, with uniform diagnostics.

use std::fmt;

use serde_json::json;

use crate::calculus::{eval_main, lint_program, CoreProgram, RunConfig, RunResult};
use crate::constraint::SitedWanted;
use crate::elaborate::elaborate_binding;
use crate::generate::{binding_obligation, span_index};
use crate::oracle::{infer, usage_check, Binding};
use crate::prelude::prelude;
use crate::solver::{GivenContext, Selection, Solution, SolveError, Solver};
use crate::syntax::{parse_program, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub class: String,
    pub message: String,
}

impl Diagnostic {
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: error[{}]: {}", self.span.line, self.span.col, self.class, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.span, self.class, self.message)
    }
}

pub struct CheckedBinding {
    pub binding: Binding,
    pub obligation: SitedWanted,
    pub outcome: Result<Solution, SolveError>,
    pub trace: Vec<String>,
}

impl CheckedBinding {
    pub fn diagnostic(&self) -> Option<Diagnostic> {
        let e = self.outcome.as_ref().err()?;
        let spans = span_index(&self.binding);
        let span = e.location().and_then(|l| spans.get(l).copied()).unwrap_or(self.binding.span);
        Some(Diagnostic { span, class: e.class().into(), message: format!("in `{}`: {e}", self.binding.name) })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sites: Vec<_> = self
            .obligation
            .sites()
            .into_iter()
            .map(|s| {
                let ev = self.outcome.as_ref().ok().and_then(|sol| sol.evidence.get(&s.site));
                json!({
                    "site": s.site,
                    "mult": s.mult.to_string(),
                    "atom": s.atom.to_string(),
                    "source": ev.map(|(src, _)| format!("{src:?}")),
                    "given": ev.map(|(_, n)| n.clone()),
                })
            })
            .collect();
        json!({
            "binding": self.binding.name,
            "constraint": self.obligation.to_string(),
            "sites": sites,
            "trace": self.trace,
        })
    }
}

pub fn front_end(src: &str) -> Result<Vec<Binding>, Diagnostic> {
    let prog = parse_program(src).map_err(|e| Diagnostic {
        span: Span { line: e.line, col: e.col },
        class: "ParseError".into(),
        message: e.to_string(),
    })?;
    let mut bs = infer(&prog, &prelude())
        .map_err(|e| Diagnostic { span: e.span(), class: e.class().into(), message: e.to_string() })?;
    for b in &mut bs {
        usage_check(b).map_err(|e| Diagnostic { span: e.span(), class: e.class().into(), message: e.to_string() })?;
    }
    Ok(bs)
}

pub fn check_with(src: &str, selection: Selection) -> Result<Vec<CheckedBinding>, Diagnostic> {
    Ok(front_end(src)?
        .into_iter()
        .map(|binding| {
            let obligation = binding_obligation(&binding);
            let (outcome, trace) = match Solver::with_selection(selection).solve(&GivenContext::empty(), &obligation) {
                Ok(s) => {
                    let t = s.trace.clone();
                    (Ok(s), t)
                }
                Err((e, t)) => (Err(e), t),
            };
            CheckedBinding { binding, obligation, outcome, trace }
        })
        .collect())
}

pub fn check(src: &str) -> Result<Vec<CheckedBinding>, Diagnostic> {
    check_with(src, Selection::MostRecent)
}

/// The first error in a program, if any.
pub fn first_error(src: &str) -> Option<Diagnostic> {
    match check(src) {
        Err(d) => Some(d),
        Ok(bs) => bs.iter().find_map(|b| b.diagnostic()),
    }
}

fn whole_file(class: &str, message: String) -> Diagnostic {
    Diagnostic { span: Span { line: 1, col: 1 }, class: class.into(), message }
}

/// Check, then translate every binding into the core language.
pub fn elaborate(src: &str) -> Result<CoreProgram, Diagnostic> {
    let bs = check(src)?;
    if let Some(d) = bs.iter().find_map(|b| b.diagnostic()) {
        return Err(d);
    }
    let mut defs = vec![];
    for b in &bs {
        let sol = b.outcome.as_ref().expect("checked");
        let def = elaborate_binding(&b.binding, &sol.evidence).map_err(|e| Diagnostic {
            span: b.binding.span,
            class: e.class().into(),
            message: e.to_string(),
        })?;
        defs.push(def);
    }
    Ok(CoreProgram { defs })
}

/// Elaborate and lint; a lint failure here is a bug in the checker or elaborator.
pub fn elaborate_and_lint(src: &str) -> Result<CoreProgram, Diagnostic> {
    let p = elaborate(src)?;
    lint_program(&p).map_err(|e| whole_file(e.class(), e.to_string()))?;
    Ok(p)
}

/// Outcome of running a program: the rendered value and printed lines, or
/// a runtime error after some output.
pub fn run(src: &str, config: &RunConfig) -> Result<RunResult, (Diagnostic, Vec<String>)> {
    let p = elaborate_and_lint(src).map_err(|d| (d, vec![]))?;
    eval_main(&p, config).map_err(|(e, out)| (whole_file(e.class(), e.to_string()), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_dir(d: &str) -> Vec<(String, String)> {
        let dir = format!("{}/../../corpus/{d}", env!("CARGO_MANIFEST_DIR"));
        let mut out: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().and_then(|x| x.to_str()) == Some("lql"))
            .map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn accepted_programs_check() {
        for (p, src) in corpus_dir("accept") {
            assert_eq!(first_error(&src), None, "{p}");
        }
    }

    #[test]
    fn rejected_programs_fail_with_the_expected_class() {
        for (p, src) in corpus_dir("reject") {
            let want = std::fs::read_to_string(p.replace(".lql", ".expected")).unwrap();
            let got = first_error(&src).unwrap_or_else(|| panic!("{p} accepted"));
            assert_eq!(got.class, want.trim(), "{p}: {got}");
        }
    }

    #[test]
    fn accepted_programs_elaborate_to_well_typed_core() {
        for (p, src) in corpus_dir("accept") {
            if let Err(d) = elaborate_and_lint(&src) {
                let core = elaborate(&src).map(|c| c.to_string()).unwrap_or_default();
                panic!("{p}: {d}\n{core}");
            }
        }
    }

    #[test]
    fn quicksort_sorts() {
        let src = std::fs::read_to_string(format!("{}/../../corpus/accept/quicksort.lql", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let r = run(&src, &RunConfig { seed: 7, ..Default::default() }).unwrap_or_else(|(d, _)| panic!("{d}"));
        let want: Vec<String> = (0..64).map(|i| i.to_string()).collect();
        assert_eq!(r.output, vec![format!("[{}]", want.join(", "))]);
        assert_eq!(r.value, "Ur ()");
        let erased = run(&src, &RunConfig { seed: 7, erase_tokens: true, ..Default::default() }).unwrap();
        assert_eq!((erased.value, erased.output), (r.value, r.output));
    }

    #[test]
    fn diagnostic_points_at_the_offending_use() {
        let d = first_error("overusing :: C =o (Int, Int)\noverusing = (useC, useC)\n").unwrap();
        assert_eq!((d.span.line, d.span.col), (2, 20));
        assert_eq!(d.render("f.lql"), format!("f.lql:2:20: error[LinearOveruse]: {}", d.message));
    }
}
