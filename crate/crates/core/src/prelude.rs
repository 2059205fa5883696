//! Builtin signatures.

use std::collections::BTreeMap;

use crate::syntax::parse_scheme;
use crate::types::Scheme;

/// `(name, signature, has a runtime implementation)`
const SIGNATURES: &[(&str, &str, bool)] = &[
    ("new", "Linearly =o Int -> exists n. UArray a n * RW n", true),
    ("newPArray", "Linearly =o Int -> exists n. PArray a n * RW n", true),
    ("write", "RW n =o UArray a n -> Int -> a -> () * RW n", true),
    ("read", "Read n =o UArray a n -> Int -> Ur a * Read n", true),
    ("free", "RW n =o UArray a n -> ()", true),
    ("newRef", "Linearly =o exists n. AtomRef a n * RW n", true),
    ("readRef", "Read n =o AtomRef a n -> Ur a * Read n", true),
    ("writeRef", "RW n =o AtomRef a n -> a -> () * RW n", true),
    ("freeRef", "RW n =o AtomRef a n -> ()", true),
    ("length", "PArray a n -> Int", true),
    ("lend", "Read n =o PArray a n -> Int -> (forall p. Read p =o a p -> r * Read p) -o r * Read n", true),
    ("lendMut", "RW n =o PArray a n -> Int -> (forall p. RW p =o a p -> r * RW p) -o r * RW n", true),
    (
        "split",
        "RW n =o PArray a n -> Int -> exists l r. Ur (PArray a l, PArray a r) * (RW l, RW r, Slices n l r)",
        true,
    ),
    ("join", "(Slices n l r, RW r, RW l) =o PArray a l -> PArray a r -> Ur (PArray a n) * RW n", true),
    ("linearly", "(Linearly =o Ur r) -o Ur r", true),
    ("fillShuffled", "RW n =o UArray Int n -> () * RW n", true),
    ("printArray", "Read n =o UArray Int n -> () * Read n", true),
    ("useC", "C =o Int", false),
    ("giveC", "(C => Int) -o Int", false),
    ("const", "a -o b -> a", true),
    ("+", "Int -> Int -> Int", true),
    ("-", "Int -> Int -> Int", true),
    ("*", "Int -> Int -> Int", true),
    ("<", "Int -> Int -> Bool", true),
    ("<=", "Int -> Int -> Bool", true),
    (">", "Int -> Int -> Bool", true),
    (">=", "Int -> Int -> Bool", true),
    ("==", "Int -> Int -> Bool", true),
];

#[derive(Clone, Debug)]
pub struct PreludeEntry {
    pub scheme: Scheme,
    /// Abstract test signatures have no runtime.
    pub runtime: bool,
}

#[derive(Clone, Debug)]
pub struct SignatureTable {
    pub entries: BTreeMap<String, PreludeEntry>,
}

impl SignatureTable {
    pub fn get(&self, name: &str) -> Option<&PreludeEntry> {
        self.entries.get(name)
    }
}

/// Close a signature over its free type variables, in alphabetical order.
pub fn generalize(mut s: Scheme) -> Scheme {
    let free = s.free_vars();
    for v in free {
        if !s.vars.contains(&v) {
            s.vars.push(v);
        }
    }
    s
}

pub fn prelude() -> SignatureTable {
    let entries = SIGNATURES
        .iter()
        .map(|(name, sig, runtime)| {
            let scheme = parse_scheme(sig).unwrap_or_else(|e| panic!("prelude signature of {name}: {e}"));
            (name.to_string(), PreludeEntry { scheme: generalize(scheme), runtime: *runtime })
        })
        .collect();
    SignatureTable { entries }
}

/// The source text of a prelude signature.
pub fn signature_text(name: &str) -> Option<&'static str> {
    SIGNATURES.iter().find(|(n, _, _)| *n == name).map(|(_, s, _)| *s)
}
