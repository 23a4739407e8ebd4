//! Bundled example models and nets.

pub const LOGIN_MODEL: &str = include_str!("../fixtures/login.xml");
pub const ALT_MODEL: &str = include_str!("../fixtures/alt.xml");
pub const PAR_MODEL: &str = include_str!("../fixtures/par.xml");
pub const VENDING_MODEL: &str = include_str!("../fixtures/vending.xml");

/// Coffee machine net with nine reachable states.
pub const COFFEE_NET: &str = include_str!("../fixtures/coffee.pnml");
/// Coffee machine net with an arc to a missing transition.
pub const DANGLING_NET: &str = include_str!("../fixtures/dangling.pnml");

pub const MODELS: &[(&str, &str)] = &[
    ("login", LOGIN_MODEL),
    ("alt", ALT_MODEL),
    ("par", PAR_MODEL),
    ("vending", VENDING_MODEL),
];

pub const NETS: &[(&str, &str)] = &[("coffee", COFFEE_NET)];
