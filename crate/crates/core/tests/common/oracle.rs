//! Brute-force reachability written without the library's firing code.

use std::collections::{BTreeMap, HashMap};

use atcg_core::expr::{Atom, CmpOp, Expr};
use atcg_core::petri::{Marking, Pattern, PrTNet};

pub type State = BTreeMap<String, BTreeMap<Vec<Atom>, u32>>;

pub fn state_of(m: &Marking) -> State {
    let mut s = State::new();
    for (p, tokens) in m.to_map() {
        for t in tokens {
            *s.entry(p.clone()).or_default().entry(t.0).or_default() += 1;
        }
    }
    s
}

fn initial(net: &PrTNet) -> State {
    let mut s = State::new();
    for (p, t) in &net.init {
        *s.entry(p.clone()).or_default().entry(t.0.clone()).or_default() += 1;
    }
    s
}

fn text(a: &Atom) -> Option<&str> {
    match a {
        Atom::Symbol(s) | Atom::Text(s) => Some(s),
        _ => None,
    }
}

fn value(e: &Expr, env: &BTreeMap<String, Atom>) -> Option<Atom> {
    match e {
        Expr::Var(v) => env.get(v).cloned(),
        Expr::Lit(a) => Some(a.clone()),
        _ => None,
    }
}

/// `None` is an evaluation error, which disables the firing.
fn holds(e: &Expr, env: &BTreeMap<String, Atom>) -> Option<bool> {
    match e {
        Expr::Cmp(op, l, r) => {
            let (l, r) = (value(l, env)?, value(r, env)?);
            let eq = match (text(&l), text(&r)) {
                (Some(a), Some(b)) => a == b,
                _ => l == r,
            };
            match (op, &l, &r) {
                (CmpOp::Eq, _, _) => Some(eq),
                (CmpOp::Ne, _, _) => Some(!eq),
                (CmpOp::Lt, Atom::Int(a), Atom::Int(b)) => Some(a < b),
                (CmpOp::Le, Atom::Int(a), Atom::Int(b)) => Some(a <= b),
                (CmpOp::Gt, Atom::Int(a), Atom::Int(b)) => Some(a > b),
                (CmpOp::Ge, Atom::Int(a), Atom::Int(b)) => Some(a >= b),
                _ => None,
            }
        }
        Expr::And(l, r) => match holds(l, env)? {
            false => Some(false),
            true => holds(r, env),
        },
        Expr::Or(l, r) => match holds(l, env)? {
            true => Some(true),
            false => holds(r, env),
        },
        Expr::Not(x) => holds(x, env).map(|b| !b),
        Expr::Var(_) | Expr::Lit(_) => match value(e, env)? {
            Atom::Bool(b) => Some(b),
            _ => None,
        },
    }
}

fn take(s: &mut State, place: &str, token: &[Atom]) -> bool {
    let Some(bag) = s.get_mut(place) else { return false };
    let Some(n) = bag.get_mut(token) else { return false };
    *n -= 1;
    if *n == 0 {
        bag.remove(token);
    }
    if bag.is_empty() {
        s.remove(place);
    }
    true
}

/// Every successor state: try each input arc against each remaining token.
pub fn successors(net: &PrTNet, s: &State) -> Vec<State> {
    let mut out = Vec::new();
    for t in &net.transitions {
        let inputs: Vec<_> = net.arcs.iter().filter(|a| a.target == t.id).collect();
        let outputs: Vec<_> = net.arcs.iter().filter(|a| a.source == t.id).collect();
        let mut stack = vec![(0usize, s.clone(), BTreeMap::<String, Atom>::new())];
        while let Some((i, rest, env)) = stack.pop() {
            if i == inputs.len() {
                if let Some(g) = &t.guard {
                    if holds(g, &env) != Some(true) {
                        continue;
                    }
                }
                let mut next = rest;
                for a in &outputs {
                    let token: Vec<Atom> = a
                        .inscription
                        .iter()
                        .map(|p| match p {
                            Pattern::Const(c) => c.clone(),
                            Pattern::Var(v) => env[v].clone(),
                        })
                        .collect();
                    *next.entry(a.target.clone()).or_default().entry(token).or_default() += 1;
                }
                let over = net.places.iter().any(|p| {
                    p.capacity > 0
                        && outputs.iter().any(|a| a.target == p.id)
                        && next.get(&p.id).map_or(0, |b| b.values().sum::<u32>()) > p.capacity
                });
                if !over {
                    out.push(next);
                }
                continue;
            }
            let arc = inputs[i];
            let tokens: Vec<Vec<Atom>> = rest
                .get(&arc.source)
                .map(|b| b.keys().cloned().collect())
                .unwrap_or_default();
            for tok in tokens {
                if tok.len() != arc.inscription.len() {
                    continue;
                }
                let mut env2 = env.clone();
                let ok = arc.inscription.iter().zip(&tok).all(|(p, a)| match p {
                    Pattern::Const(c) => c == a,
                    Pattern::Var(v) => env2.entry(v.clone()).or_insert_with(|| a.clone()) == a,
                });
                if !ok {
                    continue;
                }
                let mut rest2 = rest.clone();
                take(&mut rest2, &arc.source, &tok);
                stack.push((i + 1, rest2, env2));
            }
        }
    }
    out
}

fn explore(net: &PrTNet, s: State, left: usize, seen: &mut HashMap<State, usize>) {
    if seen.get(&s).is_some_and(|&best| best >= left) {
        return;
    }
    seen.insert(s.clone(), left);
    if left == 0 {
        return;
    }
    for n in successors(net, &s) {
        explore(net, n, left - 1, seen);
    }
}

/// All states within `depth` firings of the initial one.
pub fn reachable(net: &PrTNet, depth: usize) -> Vec<State> {
    let mut seen = HashMap::new();
    explore(net, initial(net), depth, &mut seen);
    let mut v: Vec<State> = seen.into_keys().collect();
    v.sort();
    v
}
