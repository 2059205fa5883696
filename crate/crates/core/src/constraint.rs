//! Multiplicities, atoms, simple constraints `Q = (U, L)` and wanted constraints `C`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::Type;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mult {
    One,
    Many,
}

impl Mult {
    pub fn add(self, _other: Mult) -> Mult {
        Mult::Many
    }

    pub fn mul(self, other: Mult) -> Mult {
        match self {
            Mult::One => other,
            Mult::Many => Mult::Many,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Mult::One => "1",
            Mult::Many => "ω",
        }
    }
}

impl fmt::Display for Mult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub const LINEARLY: &str = "Linearly";

/// An atomic constraint: a class name applied to types.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Type>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Type>) -> Atom {
        Atom { name: name.into(), args }
    }

    pub fn nullary(name: impl Into<String>) -> Atom {
        Atom::new(name, Vec::new())
    }

    pub fn linearly() -> Atom {
        Atom::nullary(LINEARLY)
    }

    /// Membership in the duplicable set; only `Linearly` qualifies.
    pub fn is_duplicable(&self) -> bool {
        self.name == LINEARLY && self.args.is_empty()
    }

    pub fn map_types(&self, f: &mut impl FnMut(&Type) -> Type) -> Atom {
        Atom { name: self.name.clone(), args: self.args.iter().map(&mut *f).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for a in &self.args {
            write!(f, " {}", a.display_atomic())?;
        }
        Ok(())
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Atom, D::Error> {
        let text = String::deserialize(d)?;
        let mut words = text.split_whitespace();
        let name = words.next().ok_or_else(|| serde::de::Error::custom("empty atom"))?;
        let args = words.map(|w| Type::Var(w.to_string())).collect();
        Ok(Atom::new(name, args))
    }
}

/// A simple constraint: unrestricted atoms `U` (a set) and linear atoms `L` (a multiset).
///
/// Both parts are kept sorted, so derived equality is equality modulo
/// associativity, commutativity, the unit, and idempotence of `ω·q`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimpleConstraint {
    u: BTreeSet<Atom>,
    l: Vec<Atom>,
}

impl SimpleConstraint {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(u: impl IntoIterator<Item = Atom>, l: impl IntoIterator<Item = Atom>) -> Self {
        let mut l: Vec<Atom> = l.into_iter().collect();
        l.sort();
        SimpleConstraint { u: u.into_iter().collect(), l }
    }

    /// `1·q`
    pub fn linear(q: Atom) -> Self {
        Self::new([], [q])
    }

    /// `ω·q`
    pub fn unrestricted(q: Atom) -> Self {
        Self::new([q], [])
    }

    pub fn scaled(pi: Mult, q: Atom) -> Self {
        match pi {
            Mult::One => Self::linear(q),
            Mult::Many => Self::unrestricted(q),
        }
    }

    pub fn from_scaled(items: impl IntoIterator<Item = (Mult, Atom)>) -> Self {
        let mut q = Self::empty();
        for (m, a) in items {
            q = q.tensor(&Self::scaled(m, a));
        }
        q
    }

    pub fn u(&self) -> &BTreeSet<Atom> {
        &self.u
    }

    pub fn l(&self) -> &[Atom] {
        &self.l
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty() && self.l.is_empty()
    }

    pub fn tensor(&self, other: &SimpleConstraint) -> SimpleConstraint {
        let u = self.u.union(&other.u).cloned();
        let l = self.l.iter().chain(other.l.iter()).cloned();
        SimpleConstraint::new(u, l)
    }

    pub fn scale(&self, pi: Mult) -> SimpleConstraint {
        match pi {
            Mult::One => self.clone(),
            Mult::Many => SimpleConstraint::new(self.u.iter().chain(self.l.iter()).cloned(), []),
        }
    }

    /// Every linear atom is duplicable.
    pub fn is_duplicable(&self) -> bool {
        self.l.iter().all(Atom::is_duplicable)
    }

    /// Linear atoms with their multiplicities.
    pub fn l_counts(&self) -> BTreeMap<Atom, usize> {
        let mut m = BTreeMap::new();
        for a in &self.l {
            *m.entry(a.clone()).or_insert(0) += 1;
        }
        m
    }

    /// All distinct atoms mentioned anywhere.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.u.iter().chain(self.l.iter()).cloned().collect()
    }

    /// Atoms as a scaled list, `U` first, each part in canonical order.
    pub fn scaled_atoms(&self) -> Vec<(Mult, Atom)> {
        self.u
            .iter()
            .map(|a| (Mult::Many, a.clone()))
            .chain(self.l.iter().map(|a| (Mult::One, a.clone())))
            .collect()
    }
}

fn join_atoms<'a>(it: impl Iterator<Item = &'a Atom>) -> String {
    it.map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for SimpleConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{U: [{}], L: [{}]}}", join_atoms(self.u.iter()), join_atoms(self.l.iter()))
    }
}

#[derive(Serialize, Deserialize)]
struct QJson {
    #[serde(rename = "U", default)]
    u: Vec<Atom>,
    #[serde(rename = "L", default)]
    l: Vec<Atom>,
}

impl Serialize for SimpleConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QJson { u: self.u.iter().cloned().collect(), l: self.l.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimpleConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = QJson::deserialize(d)?;
        Ok(SimpleConstraint::new(j.u, j.l))
    }
}

/// Wanted constraints.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Wanted {
    Simple(SimpleConstraint),
    Tensor(Box<Wanted>, Box<Wanted>),
    With(Box<Wanted>, Box<Wanted>),
    Impl(Mult, SimpleConstraint, Box<Wanted>),
}

impl Wanted {
    pub fn empty() -> Wanted {
        Wanted::Simple(SimpleConstraint::empty())
    }

    pub fn atom(pi: Mult, q: Atom) -> Wanted {
        Wanted::Simple(SimpleConstraint::scaled(pi, q))
    }

    pub fn tensor(a: Wanted, b: Wanted) -> Wanted {
        Wanted::Tensor(Box::new(a), Box::new(b))
    }

    pub fn with(a: Wanted, b: Wanted) -> Wanted {
        Wanted::With(Box::new(a), Box::new(b))
    }

    pub fn implication(pi: Mult, q: SimpleConstraint, c: Wanted) -> Wanted {
        Wanted::Impl(pi, q, Box::new(c))
    }

    pub fn scale(&self, pi: Mult) -> Wanted {
        match (pi, self) {
            (Mult::One, c) => c.clone(),
            (Mult::Many, Wanted::Simple(q)) => Wanted::Simple(q.scale(Mult::Many)),
            (Mult::Many, Wanted::Tensor(a, b)) | (Mult::Many, Wanted::With(a, b)) => {
                Wanted::tensor(a.scale(pi), b.scale(pi))
            }
            (Mult::Many, Wanted::Impl(rho, q, c)) => Wanted::Impl(pi.mul(*rho), q.clone(), c.clone()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Wanted::Simple(_) => 0,
            Wanted::Tensor(a, b) | Wanted::With(a, b) => 1 + a.depth().max(b.depth()),
            Wanted::Impl(_, _, c) => 1 + c.depth(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        match self {
            Wanted::Simple(q) => q.atoms(),
            Wanted::Tensor(a, b) | Wanted::With(a, b) => {
                let mut s = a.atoms();
                s.extend(b.atoms());
                s
            }
            Wanted::Impl(_, q, c) => {
                let mut s = q.atoms();
                s.extend(c.atoms());
                s
            }
        }
    }
}

impl fmt::Display for Wanted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wanted::Simple(q) => write!(f, "{q}"),
            Wanted::Tensor(a, b) => write!(f, "({a} ⊗ {b})"),
            Wanted::With(a, b) => write!(f, "({a} & {b})"),
            Wanted::Impl(pi, q, c) => write!(f, "{pi}·({q} ⇒ {c})"),
        }
    }
}

/// Stable identifier of one wanted atom occurrence, derived from its position in the program.
pub type SiteId = String;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SiteAtom {
    pub site: SiteId,
    /// Multiplicity after scaling by the enclosing context.
    pub mult: Mult,
    pub atom: Atom,
}

/// A given brought into scope by an implication, with its evidence name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Given {
    pub name: String,
    pub mult: Mult,
    pub atom: Atom,
}

/// A wanted constraint whose atom occurrences carry site identifiers and
/// whose implication assumptions carry evidence names, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SitedWanted {
    Simple(Vec<SiteAtom>),
    Tensor(Box<SitedWanted>, Box<SitedWanted>),
    With(Box<SitedWanted>, Box<SitedWanted>),
    Impl { mult: Mult, id: String, assume: Vec<Given>, body: Box<SitedWanted> },
}

impl SitedWanted {
    pub fn empty() -> SitedWanted {
        SitedWanted::Simple(Vec::new())
    }

    pub fn tensor(a: SitedWanted, b: SitedWanted) -> SitedWanted {
        match (a, b) {
            (SitedWanted::Simple(x), b) if x.is_empty() => b,
            (a, SitedWanted::Simple(y)) if y.is_empty() => a,
            (a, b) => SitedWanted::Tensor(Box::new(a), Box::new(b)),
        }
    }

    pub fn with(a: SitedWanted, b: SitedWanted) -> SitedWanted {
        SitedWanted::With(Box::new(a), Box::new(b))
    }

    pub fn scale(self, pi: Mult) -> SitedWanted {
        match (pi, self) {
            (Mult::One, c) => c,
            (Mult::Many, SitedWanted::Simple(xs)) => SitedWanted::Simple(
                xs.into_iter().map(|s| SiteAtom { mult: Mult::Many, ..s }).collect(),
            ),
            (Mult::Many, SitedWanted::Tensor(a, b)) | (Mult::Many, SitedWanted::With(a, b)) => {
                SitedWanted::tensor(a.scale(pi), b.scale(pi))
            }
            (Mult::Many, SitedWanted::Impl { id, assume, body, .. }) => {
                SitedWanted::Impl { mult: Mult::Many, id, assume, body }
            }
        }
    }

    /// Forget sites and names.
    pub fn erase(&self) -> Wanted {
        match self {
            SitedWanted::Simple(xs) => Wanted::Simple(SimpleConstraint::from_scaled(
                xs.iter().map(|s| (s.mult, s.atom.clone())),
            )),
            SitedWanted::Tensor(a, b) => Wanted::tensor(a.erase(), b.erase()),
            SitedWanted::With(a, b) => Wanted::with(a.erase(), b.erase()),
            SitedWanted::Impl { mult, assume, body, .. } => Wanted::implication(
                *mult,
                SimpleConstraint::from_scaled(assume.iter().map(|g| (g.mult, g.atom.clone()))),
                body.erase(),
            ),
        }
    }

    /// Attach path-derived sites and names to a plain wanted constraint.
    pub fn from_plain(c: &Wanted, prefix: &str) -> SitedWanted {
        match c {
            Wanted::Simple(q) => SitedWanted::Simple(
                q.scaled_atoms()
                    .into_iter()
                    .enumerate()
                    .map(|(i, (m, a))| SiteAtom { site: format!("{prefix}#{i}"), mult: m, atom: a })
                    .collect(),
            ),
            Wanted::Tensor(a, b) => SitedWanted::Tensor(
                Box::new(Self::from_plain(a, &format!("{prefix}.0"))),
                Box::new(Self::from_plain(b, &format!("{prefix}.1"))),
            ),
            Wanted::With(a, b) => SitedWanted::With(
                Box::new(Self::from_plain(a, &format!("{prefix}.0"))),
                Box::new(Self::from_plain(b, &format!("{prefix}.1"))),
            ),
            Wanted::Impl(m, q, body) => SitedWanted::Impl {
                mult: *m,
                id: prefix.to_string(),
                assume: q
                    .scaled_atoms()
                    .into_iter()
                    .enumerate()
                    .map(|(i, (m, a))| Given { name: format!("%{prefix}/{i}"), mult: m, atom: a })
                    .collect(),
                body: Box::new(Self::from_plain(body, &format!("{prefix}.0"))),
            },
        }
    }

    pub fn sites(&self) -> Vec<&SiteAtom> {
        let mut out = Vec::new();
        self.collect_sites(&mut out);
        out
    }

    fn collect_sites<'a>(&'a self, out: &mut Vec<&'a SiteAtom>) {
        match self {
            SitedWanted::Simple(xs) => out.extend(xs.iter()),
            SitedWanted::Tensor(a, b) | SitedWanted::With(a, b) => {
                a.collect_sites(out);
                b.collect_sites(out);
            }
            SitedWanted::Impl { body, .. } => body.collect_sites(out),
        }
    }
}

impl fmt::Display for SitedWanted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.erase().fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> Atom {
        Atom::nullary("C")
    }

    #[test]
    fn semiring_table() {
        use Mult::*;
        for a in [One, Many] {
            for b in [One, Many] {
                assert_eq!(a.add(b), Many);
                assert_eq!(a.mul(b), b.mul(a));
                for x in [One, Many] {
                    assert_eq!(a.mul(b).mul(x), a.mul(b.mul(x)));
                    assert_eq!(a.mul(b.add(x)), a.mul(b).add(a.mul(x)));
                }
            }
            assert_eq!(One.mul(a), a);
        }
        assert_eq!(One.mul(Many), Many);
        assert_eq!(Many.mul(One), Many);
    }

    #[test]
    fn scaling_simple() {
        let read_n = Atom::new("Read", vec![Type::Var("n".into())]);
        let q = SimpleConstraint::linear(read_n.clone());
        assert_eq!(q.scale(Mult::Many), SimpleConstraint::unrestricted(read_n));
        let w = SimpleConstraint::unrestricted(c());
        assert_eq!(w.tensor(&w), w);
        assert_eq!(SimpleConstraint::empty().tensor(&q), q);
    }

    #[test]
    fn scaling_wanted() {
        let a = Wanted::atom(Mult::One, c());
        let w = Wanted::with(a.clone(), Wanted::empty());
        assert_eq!(
            w.scale(Mult::Many),
            Wanted::tensor(Wanted::atom(Mult::Many, c()), Wanted::empty())
        );
        assert_eq!(w.scale(Mult::One), w);
        let imp = Wanted::implication(Mult::One, SimpleConstraint::empty(), a.clone());
        assert_eq!(
            imp.scale(Mult::Many),
            Wanted::implication(Mult::Many, SimpleConstraint::empty(), a)
        );
    }

    #[test]
    fn rendering() {
        let q = SimpleConstraint::new([c()], [Atom::linearly(), c()]);
        assert_eq!(q.to_string(), "{U: [C], L: [C, Linearly]}");
        assert!(!q.is_duplicable());
        assert!(SimpleConstraint::new([c()], [Atom::linearly()]).is_duplicable());
    }

    #[test]
    fn json_round_trip() {
        let q = SimpleConstraint::new([c()], [Atom::linearly()]);
        let w = Wanted::implication(Mult::One, q.clone(), Wanted::atom(Mult::One, c()));
        let text = serde_json::to_string(&w).unwrap();
        let back: Wanted = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
    }
}
