//! Reachability graph and round-trip test tree.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::firing::enabled_with_successors;
use super::marking::{Marking, MarkingKey};
use super::net::PrTNet;
use crate::expr::Binding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub max_depth: usize,
    pub max_states: usize,
    /// Loop budget used when building nets; exploration ignores it.
    pub loop_unroll: Option<u32>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_depth: 20,
            max_states: 10_000,
            loop_unroll: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub transition: String,
    pub binding: Binding,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachGraph {
    /// States in breadth-first discovery order; state 0 is the initial one.
    pub states: Vec<Marking>,
    pub edges: Vec<Edge>,
    pub initial: usize,
    /// Set when depth or state bounds stopped the exploration early.
    pub truncated: bool,
}

impl ReachGraph {
    pub fn index(&self) -> HashMap<MarkingKey, usize> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, m)| (m.canonical(), i))
            .collect()
    }
}

/// Breadth-first closure from the initial marking.
pub fn reach_graph(net: &PrTNet, bounds: &Bounds) -> ReachGraph {
    let initial = Marking::initial(net);
    let mut index = HashMap::from([(initial.canonical(), 0usize)]);
    let mut g = ReachGraph {
        states: vec![initial],
        edges: Vec::new(),
        initial: 0,
        truncated: false,
    };
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((s, depth)) = queue.pop_front() {
        let succ = enabled_with_successors(net, &g.states[s]);
        if depth >= bounds.max_depth {
            g.truncated |= !succ.is_empty();
            continue;
        }
        for (t, b, next) in succ {
            let key = next.canonical();
            let to = match index.get(&key) {
                Some(&i) => i,
                None if g.states.len() >= bounds.max_states => {
                    g.truncated = true;
                    continue;
                }
                None => {
                    let i = g.states.len();
                    index.insert(key, i);
                    g.states.push(next);
                    queue.push_back((i, depth + 1));
                    i
                }
            };
            g.edges.push(Edge {
                from: s,
                transition: t,
                binding: b,
                to,
            });
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Interior,
    /// Marking repeats one on the path from the root.
    RoundTrip,
    /// Nothing enabled.
    Dead,
    /// Cut at the depth bound.
    DepthLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub parent: Option<usize>,
    /// Firing that produced this vertex; `None` for the root.
    pub firing: Option<(String, Binding)>,
    pub marking: Marking,
    /// State label (`m<state>`), shared with the reachability graph.
    pub state: usize,
    pub depth: usize,
    pub children: Vec<usize>,
    pub kind: VertexKind,
}

/// Round-trip path tree. Vertices are stored in depth-first preorder, so
/// index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTree {
    pub vertices: Vec<TreeVertex>,
    pub truncated: bool,
}

impl TestTree {
    pub fn root(&self) -> &TreeVertex {
        &self.vertices[0]
    }

    /// Firings from the root down to `v`.
    pub fn path(&self, v: usize) -> Vec<(String, Binding)> {
        let mut out = Vec::new();
        let mut cur = Some(v);
        while let Some(i) = cur {
            let vx = &self.vertices[i];
            if let Some(f) = &vx.firing {
                out.push(f.clone());
            }
            cur = vx.parent;
        }
        out.reverse();
        out
    }

    /// State labels from the root down to `v`.
    pub fn state_path(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = Some(v);
        while let Some(i) = cur {
            out.push(self.vertices[i].state);
            cur = self.vertices[i].parent;
        }
        out.reverse();
        out
    }
}

struct TreeBuilder<'a> {
    net: &'a PrTNet,
    bounds: &'a Bounds,
    labels: HashMap<MarkingKey, usize>,
    tree: TestTree,
}

impl TreeBuilder<'_> {
    fn label(&mut self, m: &Marking) -> usize {
        let next = self.labels.len();
        *self.labels.entry(m.canonical()).or_insert(next)
    }

    fn expand(&mut self, v: usize, ancestors: &mut Vec<MarkingKey>) {
        let vx = &self.tree.vertices[v];
        let key = vx.marking.canonical();
        if vx.parent.is_some() && ancestors.contains(&key) {
            self.tree.vertices[v].kind = VertexKind::RoundTrip;
            return;
        }
        let succ = enabled_with_successors(self.net, &vx.marking);
        if succ.is_empty() {
            self.tree.vertices[v].kind = VertexKind::Dead;
            return;
        }
        let depth = vx.depth;
        if depth >= self.bounds.max_depth {
            self.tree.vertices[v].kind = VertexKind::DepthLimit;
            self.tree.truncated = true;
            return;
        }
        ancestors.push(key);
        for (t, b, next) in succ {
            if self.tree.vertices.len() >= self.bounds.max_states {
                self.tree.truncated = true;
                break;
            }
            let child = self.tree.vertices.len();
            let state = self.label(&next);
            self.tree.vertices.push(TreeVertex {
                parent: Some(v),
                firing: Some((t, b)),
                marking: next,
                state,
                depth: depth + 1,
                children: Vec::new(),
                kind: VertexKind::Interior,
            });
            self.tree.vertices[v].children.push(child);
            self.expand(child, ancestors);
        }
        ancestors.pop();
    }
}

/// Depth-first round-trip tree. A vertex is a leaf when its marking equals an
/// ancestor's, when nothing is enabled, or at the depth bound. State labels
/// follow the breadth-first numbering of [`reach_graph`]; markings the graph
/// did not reach get fresh labels after those.
pub fn test_tree(net: &PrTNet, bounds: &Bounds) -> TestTree {
    let graph = reach_graph(net, bounds);
    let labels = graph.index();
    let initial = Marking::initial(net);
    let mut b = TreeBuilder {
        net,
        bounds,
        labels,
        tree: TestTree {
            vertices: Vec::new(),
            truncated: false,
        },
    };
    let state = b.label(&initial);
    b.tree.vertices.push(TreeVertex {
        parent: None,
        firing: None,
        marking: initial,
        state,
        depth: 0,
        children: Vec::new(),
        kind: VertexKind::Interior,
    });
    b.expand(0, &mut Vec::new());
    b.tree
}
