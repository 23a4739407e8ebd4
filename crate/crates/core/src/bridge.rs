//! Wire types of the HTTP simulation bridge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::Binding;
use crate::petri::{PrTNet, TestTree, VertexKind};
use crate::sim::SimSession;

/// Header selecting a simulation session.
pub const SESSION_HEADER: &str = "x-atcg-session";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceDto {
    pub id: String,
    pub name: String,
    pub x: i64,
    pub y: i64,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionDto {
    pub id: String,
    pub name: String,
    pub x: i64,
    pub y: i64,
    pub silent: bool,
    pub guard: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcDto {
    pub id: String,
    pub source: String,
    pub target: String,
    pub inscription: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDto {
    pub id: String,
    pub places: Vec<PlaceDto>,
    pub transitions: Vec<TransitionDto>,
    pub arcs: Vec<ArcDto>,
}

impl NetDto {
    pub fn from_net(net: &PrTNet) -> NetDto {
        NetDto {
            id: net.id.clone(),
            places: net
                .places
                .iter()
                .map(|p| PlaceDto {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    x: p.position.x,
                    y: p.position.y,
                    capacity: p.capacity,
                })
                .collect(),
            transitions: net
                .transitions
                .iter()
                .map(|t| TransitionDto {
                    id: t.id.clone(),
                    name: t.name.clone(),
                    x: t.position.x,
                    y: t.position.y,
                    silent: t.silent,
                    guard: t.guard.as_ref().map(ToString::to_string),
                })
                .collect(),
            arcs: net
                .arcs
                .iter()
                .map(|a| ArcDto {
                    id: a.id.clone(),
                    source: a.source.clone(),
                    target: a.target.clone(),
                    inscription: crate::petri::fmt_pattern_list(&a.inscription),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiringDto {
    pub transition: String,
    /// `name(a1, a2)`.
    pub call: String,
    pub binding: BTreeMap<String, String>,
}

fn binding_strings(b: &Binding) -> BTreeMap<String, String> {
    b.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDto {
    /// Place id to its tokens, one entry per token.
    pub marking: BTreeMap<String, Vec<String>>,
    pub enabled: Vec<FiringDto>,
    pub history: Vec<FiringDto>,
}

impl StateDto {
    pub fn from_session(s: &SimSession) -> StateDto {
        let firing = |(t, b): &(String, Binding)| FiringDto {
            transition: t.clone(),
            call: s.call_text(t, b),
            binding: binding_strings(b),
        };
        StateDto {
            marking: s
                .current()
                .to_map()
                .into_iter()
                .map(|(p, ts)| (p, ts.iter().map(ToString::to_string).collect()))
                .collect(),
            enabled: s.enabled().iter().map(firing).collect(),
            history: s.history().iter().map(firing).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FireRequest {
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNodeDto {
    /// `m<state>`.
    pub state: String,
    /// Firing that led here; `None` at the root.
    pub firing: Option<FiringDto>,
    pub kind: VertexKind,
    /// Enabled-list indices that replay the path from the initial marking.
    pub choices: Vec<usize>,
    pub marking: BTreeMap<String, Vec<String>>,
    pub children: Vec<TreeNodeDto>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDto {
    pub root: TreeNodeDto,
    pub truncated: bool,
}

impl TreeDto {
    pub fn from_tree(tree: &TestTree, net: &PrTNet) -> TreeDto {
        let sim = SimSession::new(net.clone());
        fn node(tree: &TestTree, sim: &SimSession, v: usize, choices: Vec<usize>) -> TreeNodeDto {
            let vx = &tree.vertices[v];
            let children = vx
                .children
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let mut path = choices.clone();
                    path.push(i);
                    node(tree, sim, c, path)
                })
                .collect();
            TreeNodeDto {
                state: format!("m{}", vx.state),
                firing: vx.firing.as_ref().map(|(t, b)| FiringDto {
                    transition: t.clone(),
                    call: sim.call_text(t, b),
                    binding: binding_strings(b),
                }),
                kind: vx.kind,
                choices,
                marking: vx
                    .marking
                    .to_map()
                    .into_iter()
                    .map(|(p, ts)| (p, ts.iter().map(ToString::to_string).collect()))
                    .collect(),
                children,
            }
        }
        TreeDto {
            root: node(tree, &sim, 0, Vec::new()),
            truncated: tree.truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestsDto {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDto {
    pub code: String,
    pub message: String,
}
