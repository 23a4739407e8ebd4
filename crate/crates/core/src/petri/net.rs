use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{is_identifier, Atom, Expr};
use crate::model::ValidationReport;

/// Orders ids so that numeric suffixes compare numerically (`P2 < P10`).
pub fn cmp_ids(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u128>) {
        let digits = s.bytes().rev().take_while(u8::is_ascii_digit).count();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub id: String,
    pub name: String,
    /// 0 means unbounded.
    pub capacity: u32,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub name: String,
    pub guard: Option<Expr>,
    pub silent: bool,
    /// Ordered call arguments. When absent the input-arc variables are used
    /// in order of first appearance.
    pub params: Option<Vec<String>>,
    /// Post-condition text carried through to generated test code.
    pub annotation: Option<String>,
    pub position: Position,
}

/// One element of an arc inscription.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pattern {
    Var(String),
    Const(Atom),
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::Const(Atom::Symbol(s)) => write!(f, "'{s}'"),
            Pattern::Const(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: String,
    pub source: String,
    pub target: String,
    /// Empty inscription moves the Default token.
    pub inscription: Vec<Pattern>,
}

impl Arc {
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.inscription.iter().filter_map(|p| match p {
            Pattern::Var(v) => Some(v.as_str()),
            Pattern::Const(_) => None,
        })
    }
}

/// A tuple of atoms; the empty tuple is the Default token.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token(pub Vec<Atom>);

impl Token {
    pub fn default_token() -> Token {
        Token(Vec::new())
    }

    pub fn is_default(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("Default");
        }
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrTNet {
    pub id: String,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
    pub init: Vec<(String, Token)>,
}

impl PrTNet {
    pub fn place(&self, id: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.id == id)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    /// Input arcs of `t` in id order.
    pub fn input_arcs(&self, t: &str) -> Vec<&Arc> {
        let mut arcs: Vec<_> = self.arcs.iter().filter(|a| a.target == t).collect();
        arcs.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        arcs
    }

    /// Output arcs of `t` in id order.
    pub fn output_arcs(&self, t: &str) -> Vec<&Arc> {
        let mut arcs: Vec<_> = self.arcs.iter().filter(|a| a.source == t).collect();
        arcs.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        arcs
    }

    /// Variables bound by the input arcs of `t`, in order of first appearance.
    pub fn input_variables(&self, t: &str) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for arc in self.input_arcs(t) {
            for v in arc.variables() {
                if !seen.iter().any(|s| s == v) {
                    seen.push(v.to_string());
                }
            }
        }
        seen
    }

    /// Ordered call arguments for `t`.
    pub fn call_params(&self, t: &Transition) -> Vec<String> {
        t.params.clone().unwrap_or_else(|| self.input_variables(&t.id))
    }

    /// Elements sorted by id and the initial declaration sorted by
    /// (place, token).
    pub fn normalized(mut self) -> PrTNet {
        self.places.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        self.transitions.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        self.arcs.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        self.init
            .sort_by(|a, b| cmp_ids(&a.0, &b.0).then_with(|| a.1.cmp(&b.1)));
        self
    }

    pub fn is_place(&self, id: &str) -> bool {
        self.place(id).is_some()
    }

    pub fn is_transition(&self, id: &str) -> bool {
        self.transition(id).is_some()
    }
}

/// Structural check of a net: ids, arc endpoints, variable closure and
/// initial-marking capacities.
pub fn compile_net(net: &PrTNet) -> ValidationReport {
    let mut r = ValidationReport::default();
    let dup = |kind: &str, ids: Vec<&str>, r: &mut ValidationReport| {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                r.error(
                    "duplicate-id",
                    format!("{kind} {id}"),
                    format!("{kind} id `{id}` is used more than once"),
                );
            }
        }
    };
    dup("place", net.places.iter().map(|p| p.id.as_str()).collect(), &mut r);
    dup(
        "transition",
        net.transitions.iter().map(|t| t.id.as_str()).collect(),
        &mut r,
    );
    dup("arc", net.arcs.iter().map(|a| a.id.as_str()).collect(), &mut r);

    let places: HashSet<&str> = net.places.iter().map(|p| p.id.as_str()).collect();
    let transitions: HashSet<&str> = net.transitions.iter().map(|t| t.id.as_str()).collect();
    for id in places.intersection(&transitions) {
        r.error(
            "ambiguous-id",
            format!("node {id}"),
            format!("`{id}` names both a place and a transition"),
        );
    }

    for arc in &net.arcs {
        let loc = format!("arc {}", arc.id);
        let mut dangling = false;
        for end in [&arc.source, &arc.target] {
            if !places.contains(end.as_str()) && !transitions.contains(end.as_str()) {
                r.error("dangling-arc", &loc, format!("endpoint `{end}` does not exist"));
                dangling = true;
            }
        }
        if dangling {
            continue;
        }
        let src_place = places.contains(arc.source.as_str());
        let dst_place = places.contains(arc.target.as_str());
        if src_place == dst_place {
            r.error(
                "nonbipartite-arc",
                &loc,
                format!(
                    "arc connects `{}` to `{}`, which are the same kind of node",
                    arc.source, arc.target
                ),
            );
        }
        for p in &arc.inscription {
            if let Pattern::Var(v) = p {
                if !is_identifier(v) {
                    r.error("bad-inscription", &loc, format!("`{v}` is not a valid variable name"));
                }
            }
        }
    }

    for t in &net.transitions {
        let loc = format!("transition {}", t.id);
        let bound: BTreeSet<String> = net.input_variables(&t.id).into_iter().collect();
        if let Some(g) = &t.guard {
            for v in g.free_vars() {
                if !bound.contains(&v) {
                    r.error(
                        "unbound-guard-variable",
                        &loc,
                        format!("guard variable `{v}` is not bound by any input arc"),
                    );
                }
            }
        }
        for arc in net.output_arcs(&t.id) {
            for v in arc.variables() {
                if !bound.contains(v) {
                    r.error(
                        "unbound-output-variable",
                        &loc,
                        format!("output arc {} uses `{v}`, which no input arc binds", arc.id),
                    );
                }
            }
        }
        for v in t.params.iter().flatten() {
            if !bound.contains(v) {
                r.error(
                    "unbound-param",
                    &loc,
                    format!("call parameter `{v}` is not bound by any input arc"),
                );
            }
        }
    }

    let mut counts: HashMap<&str, u32> = HashMap::new();
    for (p, _) in &net.init {
        if !places.contains(p.as_str()) {
            r.error(
                "unknown-place",
                format!("init {p}"),
                format!("initial token in missing place `{p}`"),
            );
        }
        *counts.entry(p.as_str()).or_default() += 1;
    }
    for place in &net.places {
        let n = counts.get(place.id.as_str()).copied().unwrap_or(0);
        if place.capacity > 0 && n > place.capacity {
            r.error(
                "capacity-exceeded",
                format!("place {}", place.id),
                format!("{n} initial tokens exceed capacity {}", place.capacity),
            );
        }
    }
    r
}

pub(crate) fn fmt_pattern_list(items: &[Pattern]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}
