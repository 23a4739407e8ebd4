//! Random small nets for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Atom, CmpOp, Expr};
use crate::petri::{Arc, Pattern, Place, Position, PrTNet, Token, Transition};

fn atom(rng: &mut impl Rng) -> Atom {
    match rng.random_range(0..10) {
        0 => Atom::Symbol("UID".into()),
        1 => Atom::Text("a \"b\" <c> é".into()),
        _ => Atom::Int(rng.random_range(0..3)),
    }
}

/// A net with at most 6 places, 6 transitions and 3 initial tokens. Every
/// place holds either Default tokens or 1-tuples; every transition has an
/// input arc.
pub fn random_net(rng: &mut impl Rng) -> PrTNet {
    let n_places = rng.random_range(1..=6);
    let n_trans = rng.random_range(1..=6);
    let data: Vec<bool> = (0..n_places).map(|_| rng.random_bool(0.5)).collect();
    let places = (0..n_places)
        .map(|i| Place {
            id: format!("p{}", i + 1),
            name: format!("place {}", i + 1),
            capacity: if rng.random_bool(0.15) { 2 } else { 0 },
            position: Position {
                x: 30 + 195 * i as i64,
                y: 105,
            },
        })
        .collect::<Vec<_>>();

    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    let mut arc_id = 0;
    let mut push_arc = |arcs: &mut Vec<Arc>, source: String, target: String, inscription: Vec<Pattern>| {
        arc_id += 1;
        arcs.push(Arc {
            id: format!("a{arc_id}"),
            source,
            target,
            inscription,
        });
    };
    for t in 0..n_trans {
        let tid = format!("t{}", t + 1);
        let mut vars = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let p = rng.random_range(0..n_places);
            let ins = if !data[p] {
                vec![]
            } else if rng.random_bool(0.7) {
                let v = format!("x{}", vars.len() + 1);
                vars.push(v.clone());
                vec![Pattern::Var(v)]
            } else {
                vec![Pattern::Const(Atom::Int(rng.random_range(0..3)))]
            };
            push_arc(&mut arcs, places[p].id.clone(), tid.clone(), ins);
        }
        for _ in 0..rng.random_range(0..=2) {
            let p = rng.random_range(0..n_places);
            let ins = if !data[p] {
                vec![]
            } else if !vars.is_empty() && rng.random_bool(0.7) {
                vec![Pattern::Var(vars[rng.random_range(0..vars.len())].clone())]
            } else {
                vec![Pattern::Const(atom(rng))]
            };
            push_arc(&mut arcs, tid.clone(), places[p].id.clone(), ins);
        }
        let guard = (!vars.is_empty() && rng.random_bool(0.4)).then(|| {
            let v = Expr::var(vars[rng.random_range(0..vars.len())].clone());
            let op = [CmpOp::Lt, CmpOp::Ne, CmpOp::Ge][rng.random_range(0..3)];
            let g = Expr::cmp(op, v, Expr::int(rng.random_range(0..3)));
            if rng.random_bool(0.3) {
                Expr::not(g)
            } else {
                g
            }
        });
        transitions.push(Transition {
            id: tid.clone(),
            name: format!("op{}", t + 1),
            guard,
            silent: rng.random_bool(0.1),
            params: None,
            annotation: rng.random_bool(0.2).then(|| "done = true".to_string()),
            position: Position {
                x: 127 + 195 * t as i64,
                y: 200,
            },
        });
    }

    let init = (0..rng.random_range(1..=3))
        .map(|_| {
            let p = rng.random_range(0..n_places);
            let token = if data[p] {
                Token(vec![atom(rng)])
            } else {
                Token::default()
            };
            (places[p].id.clone(), token)
        })
        .collect();
    PrTNet {
        id: "random".into(),
        places,
        transitions,
        arcs,
        init,
    }
    .normalized()
}

pub fn random_net_seeded(seed: u64) -> PrTNet {
    random_net(&mut ChaCha8Rng::seed_from_u64(seed))
}
