//! Token-game semantics: binding enumeration and firing.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::marking::Marking;
use super::net::{cmp_ids, Arc, Pattern, PrTNet, Token};
use crate::expr::{eval_expr, Binding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("transition `{0}` is not enabled under the given binding")]
    NotEnabled(String),
    #[error("firing `{transition}` would exceed the capacity of place `{place}`")]
    CapacityExceeded { transition: String, place: String },
    #[error("no transition `{0}`")]
    UnknownTransition(String),
}

impl FireError {
    pub fn code(&self) -> &'static str {
        match self {
            FireError::NotEnabled(_) => "not-enabled",
            FireError::CapacityExceeded { .. } => "capacity-exceeded",
            FireError::UnknownTransition(_) => "unknown-transition",
        }
    }
}

fn unify(pattern: &[Pattern], token: &Token, binding: &Binding) -> Option<Binding> {
    if pattern.len() != token.0.len() {
        return None;
    }
    let mut b = binding.clone();
    for (p, atom) in pattern.iter().zip(&token.0) {
        match p {
            Pattern::Const(c) if c == atom => {}
            Pattern::Const(_) => return None,
            Pattern::Var(v) => match b.get(v) {
                Some(bound) if bound == atom => {}
                Some(_) => return None,
                None => {
                    b.insert(v.clone(), atom.clone());
                }
            },
        }
    }
    Some(b)
}

fn instantiate(pattern: &[Pattern], binding: &Binding) -> Option<Token> {
    pattern
        .iter()
        .map(|p| match p {
            Pattern::Const(c) => Some(c.clone()),
            Pattern::Var(v) => binding.get(v).cloned(),
        })
        .collect::<Option<Vec<_>>>()
        .map(Token)
}

fn candidate_bindings(arcs: &[&Arc], m: &Marking, binding: Binding, out: &mut BTreeSet<Binding>) {
    let Some((arc, rest)) = arcs.split_first() else {
        out.insert(binding);
        return;
    };
    // Distinct token values only: duplicates would yield the same binding.
    for (token, _) in m.tokens(&arc.source) {
        if let Some(b) = unify(&arc.inscription, token, &binding) {
            candidate_bindings(rest, m, b, out);
        }
    }
}

/// Fires `t` under `binding`, checking enabledness and capacities.
pub fn fire(net: &PrTNet, m: &Marking, t: &str, binding: &Binding) -> Result<Marking, FireError> {
    let trans = net
        .transition(t)
        .ok_or_else(|| FireError::UnknownTransition(t.to_string()))?;
    let not_enabled = || FireError::NotEnabled(t.to_string());

    let inputs = net.input_arcs(t);
    let vars: BTreeSet<&str> = inputs.iter().flat_map(|a| a.variables()).collect();
    if binding.len() != vars.len() || !binding.keys().all(|k| vars.contains(k.as_str())) {
        return Err(not_enabled());
    }

    let mut next = m.clone();
    for arc in &inputs {
        let token = instantiate(&arc.inscription, binding).ok_or_else(not_enabled)?;
        if !next.remove(&arc.source, &token) {
            return Err(not_enabled());
        }
    }
    if let Some(g) = &trans.guard {
        if !matches!(eval_expr(g, binding), Ok(true)) {
            return Err(not_enabled());
        }
    }
    let mut touched = Vec::new();
    for arc in net.output_arcs(t) {
        let token = instantiate(&arc.inscription, binding).ok_or_else(not_enabled)?;
        next.add(&arc.target, token, 1);
        touched.push(arc.target.as_str());
    }
    for p in touched {
        if let Some(place) = net.place(p) {
            if place.capacity > 0 && next.place_total(p) > place.capacity {
                return Err(FireError::CapacityExceeded {
                    transition: t.to_string(),
                    place: p.to_string(),
                });
            }
        }
    }
    Ok(next)
}

/// All enabled (transition, binding) pairs, sorted by transition id and then
/// binding. Guard evaluation errors count as false, and firings that would
/// exceed a place capacity are not enabled.
pub fn enabled(net: &PrTNet, m: &Marking) -> Vec<(String, Binding)> {
    enabled_with_successors(net, m)
        .into_iter()
        .map(|(t, b, _)| (t, b))
        .collect()
}

/// Like [`enabled`], also returning the marking each firing produces.
pub fn enabled_with_successors(net: &PrTNet, m: &Marking) -> Vec<(String, Binding, Marking)> {
    let mut ids: Vec<&str> = net.transitions.iter().map(|t| t.id.as_str()).collect();
    ids.sort_by(|a, b| cmp_ids(a, b));
    let mut out = Vec::new();
    let mut arc_cache: HashMap<&str, Vec<&Arc>> = HashMap::new();
    for t in ids {
        let arcs = arc_cache.entry(t).or_insert_with(|| net.input_arcs(t));
        let mut candidates = BTreeSet::new();
        candidate_bindings(arcs, m, Binding::new(), &mut candidates);
        for b in candidates {
            if let Ok(next) = fire(net, m, t, &b) {
                out.push((t.to_string(), b, next));
            }
        }
    }
    out
}
