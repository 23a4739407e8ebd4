//! Compiles a validated design model into a PrT net.
//!
//! The pipeline is node construction ([`build_nodes`]), the node relationship
//! table ([`build_nrt`]), the combined-fragment tree ([`build_cfn`]) and
//! assembly ([`assemble_net`]).
//!
//! Each message becomes a node: control place in, transition, control place
//! out. Message arguments are read from data places named after the
//! receiving operation's parameters through read-arc pairs, and argument
//! values are seeded into those places in the initial marking. Guard
//! variables that are not call parameters are read from the data place of
//! the same name.
//!
//! Fragments expand as follows (E entry place, X exit place, tau a silent
//! transition):
//!
//! | operator | expansion |
//! |----------|-----------|
//! | `alt`    | each operand runs E→X; its guard is conjoined onto its first transition; a guardless operand gets `not (g1 or ...)`; an empty operand is a guarded tau E→X |
//! | `opt`    | `alt` over the body and an empty else |
//! | `loop`   | body E→Xb, tau-back Xb→E on `g`, tau-exit Xb→X on `not g`; an optional budget place bounds tau-back |
//! | `par`    | tau-fork E→(operand entries), tau-join (operand exits)→X |
//! | `break`  | `alt` whose guarded body exits to the final place of the net |

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Atom, Expr};
use crate::model::{
    operation_index, validate_model, ClassModel, DesignModel, FragmentOperator, SeqElement, SequenceModel,
    ValidationReport,
};
use crate::petri::{cmp_ids, Arc, Pattern, Place, Position, PrTNet, Token, Transition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetgenError {
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("model-shape: {0}")]
    ModelShape(String),
    #[error("unbound-guard-variable: guard of `{transition}` uses `{variable}`, which no input arc binds")]
    UnboundGuardVariable { transition: String, variable: String },
    #[error("id-collision: `{0}` is used for two net elements")]
    IdCollision(String),
}

impl NetgenError {
    pub fn code(&self) -> &'static str {
        match self {
            NetgenError::Invalid(_) => "invalid-model",
            NetgenError::ModelShape(_) => "model-shape",
            NetgenError::UnboundGuardVariable { .. } => "unbound-guard-variable",
            NetgenError::IdCollision(_) => "id-collision",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetgenOptions {
    /// Overrides every loop's budget of back-iterations.
    pub loop_unroll: Option<u32>,
}

/// One message compiled to its net fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub message_ref: String,
    pub in_place: String,
    pub out_place: String,
    pub transition: String,
    pub in_arc: String,
    pub out_arc: String,
    /// Data tokens the message reads: (data place, token).
    pub tokens: Vec<(String, Token)>,
    pub operation: String,
    pub params: Vec<String>,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
}

/// One node per message in document order, descending into fragments.
pub fn build_nodes(sm: &SequenceModel, cm: &ClassModel) -> Result<Vec<Node>, NetgenError> {
    let ops = operation_index(cm, sm);
    let mut nodes = Vec::new();
    for (i, m) in sm.messages().into_iter().enumerate() {
        let k = i + 1;
        let op = ops
            .get(&m.id)
            .ok_or_else(|| NetgenError::ModelShape(format!("message `{}` does not resolve to an operation", m.id)))?;
        if op.params.len() != m.args.len() {
            return Err(NetgenError::ModelShape(format!(
                "message `{}` has the wrong number of arguments",
                m.id
            )));
        }
        let tokens = op
            .params
            .iter()
            .zip(&m.args)
            .map(|(p, a)| (p.name.clone(), Token(vec![a.clone()])))
            .collect();
        nodes.push(Node {
            id: format!("N{k}"),
            message_ref: m.id.clone(),
            in_place: format!("P{}", 2 * k - 1),
            out_place: format!("P{}", 2 * k),
            transition: format!("T{k}"),
            in_arc: format!("A{}", 2 * k - 1),
            out_arc: format!("A{}", 2 * k),
            tokens,
            operation: op.name.clone(),
            params: op.params.iter().map(|p| p.name.clone()).collect(),
            pre: op.pre.clone(),
            post: op.post.clone(),
        });
    }
    Ok(nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Sequence,
    FragmentEntry,
    FragmentExit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub node: String,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NrtRow {
    pub node: String,
    pub predecessors: Vec<Link>,
    pub successors: Vec<Link>,
}

/// Node relationship table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nrt {
    pub rows: Vec<NrtRow>,
    pub association_edges: Vec<(String, String)>,
}

impl Nrt {
    pub fn row(&self, node: &str) -> Option<&NrtRow> {
        self.rows.iter().find(|r| r.node == node)
    }

    pub fn links(&self) -> impl Iterator<Item = (&str, &Link)> {
        self.rows
            .iter()
            .flat_map(|r| r.successors.iter().map(move |l| (r.node.as_str(), l)))
    }
}

/// Flow summary of a body: nodes that can run first, nodes that can run
/// last (tagged with whether they leave a fragment), and whether the body
/// can be skipped entirely.
struct Flow {
    firsts: Vec<String>,
    lasts: Vec<(String, bool)>,
    nullable: bool,
}

struct NrtBuilder<'a> {
    node_of: &'a HashMap<String, String>,
    links: Vec<(String, String, Relation)>,
}

impl NrtBuilder<'_> {
    fn link(&mut self, from: &str, to: &str, rel: Relation) {
        if !self.links.iter().any(|(a, b, _)| a == from && b == to) {
            self.links.push((from.to_string(), to.to_string(), rel));
        }
    }

    fn body(&mut self, body: &[SeqElement]) -> Flow {
        let mut firsts = Vec::new();
        let mut pending: Vec<(String, bool)> = Vec::new();
        let mut nullable = true;
        for el in body {
            let (flow, is_fragment) = match el {
                SeqElement::Message(m) => {
                    let n = self.node_of[&m.id].clone();
                    (
                        Flow {
                            firsts: vec![n.clone()],
                            lasts: vec![(n, false)],
                            nullable: false,
                        },
                        false,
                    )
                }
                SeqElement::Fragment(f) => {
                    let mut fl = Flow {
                        firsts: vec![],
                        lasts: vec![],
                        nullable: matches!(f.operator, FragmentOperator::Opt | FragmentOperator::Break),
                    };
                    for op in &f.operands {
                        let inner = self.body(&op.body);
                        if f.operator == FragmentOperator::Loop {
                            for (l, _) in &inner.lasts {
                                for first in &inner.firsts {
                                    self.link(l, first, Relation::FragmentEntry);
                                }
                            }
                        }
                        fl.firsts.extend(inner.firsts);
                        fl.nullable |= inner.nullable;
                        if f.operator != FragmentOperator::Break {
                            fl.lasts.extend(inner.lasts.into_iter().map(|(n, _)| (n, true)));
                        }
                    }
                    (fl, true)
                }
            };
            for (p, exits) in &pending {
                for first in &flow.firsts {
                    let rel = if *exits {
                        Relation::FragmentExit
                    } else if is_fragment {
                        Relation::FragmentEntry
                    } else {
                        Relation::Sequence
                    };
                    self.link(p, first, rel);
                }
            }
            if nullable {
                firsts.extend(flow.firsts.iter().cloned());
            }
            nullable &= flow.nullable;
            if flow.nullable {
                pending.extend(flow.lasts);
            } else {
                pending = flow.lasts;
            }
        }
        Flow {
            firsts,
            lasts: pending,
            nullable,
        }
    }
}

/// Builds predecessor/successor rows from the message order and fragment
/// structure, plus association edges between linked nodes whose classes are
/// associated.
pub fn build_nrt(nodes: &[Node], cm: &ClassModel, sm: &SequenceModel) -> Nrt {
    let node_of: HashMap<String, String> = nodes.iter().map(|n| (n.message_ref.clone(), n.id.clone())).collect();
    let mut b = NrtBuilder {
        node_of: &node_of,
        links: Vec::new(),
    };
    b.body(&sm.body);

    let mut rows: Vec<NrtRow> = nodes
        .iter()
        .map(|n| NrtRow {
            node: n.id.clone(),
            predecessors: vec![],
            successors: vec![],
        })
        .collect();
    let pos: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    for (from, to, rel) in &b.links {
        rows[pos[from.as_str()]].successors.push(Link {
            node: to.clone(),
            relation: *rel,
        });
        rows[pos[to.as_str()]].predecessors.push(Link {
            node: from.clone(),
            relation: *rel,
        });
    }
    for r in &mut rows {
        r.successors.sort_by(|a, b| cmp_ids(&a.node, &b.node));
        r.predecessors.sort_by(|a, b| cmp_ids(&a.node, &b.node));
    }

    let messages: HashMap<&str, &crate::model::Message> =
        sm.messages().into_iter().map(|m| (m.id.as_str(), m)).collect();
    let class_of = |lifeline: &str| sm.lifeline(lifeline).map(|l| l.class_name.as_str());
    let mut association_edges = Vec::new();
    for n in nodes {
        let row = &rows[pos[n.id.as_str()]];
        for succ in &row.successors {
            let a = messages[n.message_ref.as_str()];
            let b = messages[nodes[pos[succ.node.as_str()]].message_ref.as_str()];
            if let (Some(ca), Some(cb)) = (class_of(&a.to), class_of(&b.from)) {
                if cm.associated(ca, cb) {
                    association_edges.push((n.id.clone(), succ.node.clone()));
                }
            }
        }
    }
    Nrt {
        rows,
        association_edges,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfFragment {
    pub id: String,
    pub operator: FragmentOperator,
    pub guards: Vec<Option<Expr>>,
    pub operands: Vec<Vec<CfVertex>>,
    pub loop_min: Option<u32>,
    pub loop_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CfVertex {
    Leaf(String),
    Fragment(CfFragment),
}

/// Combined-fragment tree; the root is an implicit sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfTree {
    pub root: Vec<CfVertex>,
}

impl CfTree {
    /// Leaf node ids in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        fn walk<'a>(vs: &'a [CfVertex], out: &mut Vec<&'a str>) {
            for v in vs {
                match v {
                    CfVertex::Leaf(n) => out.push(n),
                    CfVertex::Fragment(f) => f.operands.iter().for_each(|o| walk(o, out)),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn fragment_ids(&self) -> Vec<&str> {
        fn walk<'a>(vs: &'a [CfVertex], out: &mut Vec<&'a str>) {
            for v in vs {
                if let CfVertex::Fragment(f) = v {
                    out.push(&f.id);
                    f.operands.iter().for_each(|o| walk(o, out));
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

/// Mirrors the sequence body's nesting over node ids.
pub fn build_cfn(sm: &SequenceModel, nodes: &[Node]) -> CfTree {
    let node_of: HashMap<&str, &str> = nodes.iter().map(|n| (n.message_ref.as_str(), n.id.as_str())).collect();
    fn convert(body: &[SeqElement], node_of: &HashMap<&str, &str>) -> Vec<CfVertex> {
        body.iter()
            .map(|el| match el {
                SeqElement::Message(m) => CfVertex::Leaf(node_of[m.id.as_str()].to_string()),
                SeqElement::Fragment(f) => CfVertex::Fragment(CfFragment {
                    id: f.id.clone(),
                    operator: f.operator,
                    guards: f.operands.iter().map(|o| o.guard.clone()).collect(),
                    operands: f.operands.iter().map(|o| convert(&o.body, node_of)).collect(),
                    loop_min: f.loop_min,
                    loop_max: f.loop_max,
                }),
            })
            .collect()
    }
    CfTree {
        root: convert(&sm.body, &node_of),
    }
}

const FINAL_ORDER: usize = usize::MAX;

struct Assembler<'a> {
    nodes: HashMap<&'a str, &'a Node>,
    options: NetgenOptions,
    /// Allocation order of every control place key; the smallest order in a
    /// fused class names the class.
    order: HashMap<String, usize>,
    parent: HashMap<String, String>,
    next_fresh: usize,
    transitions: Vec<Transition>,
    guards: HashMap<String, Expr>,
    arcs: Vec<Arc>,
    next_arc: usize,
    init: Vec<(String, Token)>,
    budget_places: Vec<String>,
    tau_counts: HashMap<String, usize>,
}

impl<'a> Assembler<'a> {
    fn fresh(&mut self) -> String {
        let key = format!("#{}", self.next_fresh);
        self.order.insert(key.clone(), self.next_fresh);
        self.next_fresh += 1;
        key
    }

    fn find(&mut self, p: &str) -> String {
        let mut cur = p.to_string();
        while let Some(next) = self.parent.get(&cur) {
            if *next == cur {
                break;
            }
            cur = next.clone();
        }
        if cur != p {
            self.parent.insert(p.to_string(), cur.clone());
        }
        cur
    }

    fn fuse(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (keep, drop) = if self.order[&ra] <= self.order[&rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent.insert(drop, keep);
    }

    fn arc(&mut self, source: &str, target: &str, inscription: Vec<Pattern>) {
        self.next_arc += 1;
        self.arcs.push(Arc {
            id: format!("A{}", self.next_arc),
            source: source.to_string(),
            target: target.to_string(),
            inscription,
        });
    }

    fn tau(&mut self, fragment: &str, guard: Option<Expr>, inputs: &[&str], outputs: &[&str]) -> String {
        let k = self.tau_counts.entry(fragment.to_string()).or_default();
        *k += 1;
        let id = format!("tau_{fragment}_{k}");
        self.transitions.push(Transition {
            id: id.clone(),
            name: id.clone(),
            guard: None,
            silent: true,
            params: Some(vec![]),
            annotation: None,
            position: Position::default(),
        });
        if let Some(g) = guard {
            self.guards.insert(id.clone(), g);
        }
        for p in inputs {
            self.arc(p, &id, vec![]);
        }
        for p in outputs {
            self.arc(&id, p, vec![]);
        }
        id
    }

    fn conjoin(&mut self, transition: &str, guard: Expr) {
        let merged = match self.guards.remove(transition) {
            Some(existing) => Expr::and(guard, existing),
            None => guard,
        };
        self.guards.insert(transition.to_string(), merged);
    }

    fn seq(&mut self, items: &[CfVertex], entry: &str, fin: &str) -> String {
        let mut cur = entry.to_string();
        for v in items {
            cur = self.vertex(v, &cur, fin);
        }
        cur
    }

    fn guarded(&mut self, fragment: &str, items: &[CfVertex], guard: Option<Expr>, entry: &str, fin: &str) -> String {
        match (guard, items.first()) {
            (None, _) => self.seq(items, entry, fin),
            (Some(g), Some(CfVertex::Leaf(n))) => {
                let t = self.nodes[n.as_str()].transition.clone();
                self.conjoin(&t, g);
                self.seq(items, entry, fin)
            }
            (Some(g), _) => {
                let start = self.fresh();
                self.tau(fragment, Some(g), &[entry], &[&start]);
                self.seq(items, &start, fin)
            }
        }
    }

    fn vertex(&mut self, v: &CfVertex, entry: &str, fin: &str) -> String {
        let f = match v {
            CfVertex::Leaf(n) => {
                let node = self.nodes[n.as_str()];
                self.fuse(entry, &node.in_place);
                return node.out_place.clone();
            }
            CfVertex::Fragment(f) => f,
        };
        let exit = self.fresh();
        match f.operator {
            FragmentOperator::Alt | FragmentOperator::Opt | FragmentOperator::Break => {
                let mut operands: Vec<(Option<Expr>, &[CfVertex], bool)> = f
                    .guards
                    .iter()
                    .zip(&f.operands)
                    .map(|(g, body)| (g.clone(), body.as_slice(), f.operator == FragmentOperator::Break))
                    .collect();
                if f.operator != FragmentOperator::Alt {
                    operands.push((None, &[], false));
                }
                let sibling_guards: Vec<Expr> = operands.iter().filter_map(|(g, _, _)| g.clone()).collect();
                let else_guard = sibling_guards.into_iter().reduce(Expr::or).map(Expr::not);
                for (guard, body, to_final) in operands {
                    let guard = if guard.is_some() { guard } else { else_guard.clone() };
                    let target = if to_final { fin.to_string() } else { exit.clone() };
                    if body.is_empty() {
                        self.tau(&f.id, guard, &[entry], &[&target]);
                    } else {
                        let out = self.guarded(&f.id, body, guard, entry, fin);
                        self.fuse(&out, &target);
                    }
                }
            }
            FragmentOperator::Loop => {
                let guard = f.guards.first().cloned().flatten();
                let body_exit = self.seq(&f.operands[0], entry, fin);
                let budget = self.options.loop_unroll.or(f.loop_max.map(|m| m.saturating_sub(1)));
                let back = self.tau(&f.id, guard.clone(), &[&body_exit], &[entry]);
                if let Some(k) = budget {
                    let place = format!("budget_{}", f.id);
                    self.arc(&place, &back, vec![]);
                    for _ in 0..k {
                        self.init.push((place.clone(), Token::default()));
                    }
                    self.budget_places.push(place);
                }
                self.tau(&f.id, guard.map(Expr::not), &[&body_exit], &[&exit]);
            }
            FragmentOperator::Par => {
                let starts: Vec<String> = f.operands.iter().map(|_| self.fresh()).collect();
                let start_refs: Vec<&str> = starts.iter().map(String::as_str).collect();
                self.tau(&f.id, None, &[entry], &start_refs);
                let mut ends = Vec::new();
                for ((guard, body), start) in f.guards.iter().zip(&f.operands).zip(&starts) {
                    ends.push(self.guarded(&f.id, body, guard.clone(), start, fin));
                }
                let end_refs: Vec<&str> = ends.iter().map(String::as_str).collect();
                self.tau(&f.id, None, &end_refs, &[&exit]);
            }
        }
        exit
    }
}

/// Joins the nodes into one net: sequence-related nodes share places,
/// fragments expand per the operator table, and the initial marking holds a
/// Default token in the start place plus the seeded data tokens.
pub fn assemble_net(
    nodes: &[Node],
    nrt: &Nrt,
    tree: &CfTree,
    model_name: &str,
    options: NetgenOptions,
) -> Result<PrTNet, NetgenError> {
    let mut a = Assembler {
        nodes: nodes.iter().map(|n| (n.id.as_str(), n)).collect(),
        options,
        order: HashMap::new(),
        parent: HashMap::new(),
        next_fresh: 0,
        transitions: Vec::new(),
        guards: HashMap::new(),
        arcs: Vec::new(),
        next_arc: 2 * nodes.len(),
        init: Vec::new(),
        budget_places: Vec::new(),
        tau_counts: HashMap::new(),
    };
    let start = a.fresh();
    for n in nodes {
        for p in [&n.in_place, &n.out_place] {
            let k = a.next_fresh;
            a.order.insert(p.clone(), k);
            a.next_fresh += 1;
        }
    }
    let fin = "#final".to_string();
    a.order.insert(fin.clone(), FINAL_ORDER);

    let mut data_places: Vec<String> = Vec::new();
    for n in nodes {
        a.transitions.push(Transition {
            id: n.transition.clone(),
            name: n.operation.clone(),
            guard: None,
            silent: false,
            params: Some(n.params.clone()),
            annotation: n.post.as_ref().map(ToString::to_string),
            position: Position::default(),
        });
        if let Some(pre) = &n.pre {
            a.guards.insert(n.transition.clone(), pre.clone());
        }
        a.arcs.push(Arc {
            id: n.in_arc.clone(),
            source: n.in_place.clone(),
            target: n.transition.clone(),
            inscription: vec![],
        });
        a.arcs.push(Arc {
            id: n.out_arc.clone(),
            source: n.transition.clone(),
            target: n.out_place.clone(),
            inscription: vec![],
        });
        for (place, token) in &n.tokens {
            if !data_places.contains(place) {
                data_places.push(place.clone());
            }
            if !a.init.iter().any(|(p, t)| p == place && t == token) {
                a.init.push((place.clone(), token.clone()));
            }
        }
        for p in &n.params {
            let var = vec![Pattern::Var(p.clone())];
            a.arc(p, &n.transition, var.clone());
            a.arc(&n.transition, p, var);
        }
    }

    for (from, link) in nrt.links() {
        if link.relation == Relation::Sequence {
            let (out, inp) = (
                a.nodes[from].out_place.clone(),
                a.nodes[link.node.as_str()].in_place.clone(),
            );
            a.fuse(&out, &inp);
        }
    }
    let end = a.seq(&tree.root, &start, &fin);
    a.fuse(&end, &fin);

    // Guard variables that are not call parameters read their data place.
    let mut guard_ids: Vec<String> = a.guards.keys().cloned().collect();
    guard_ids.sort_by(|x, y| cmp_ids(x, y));
    for t in &guard_ids {
        let guard = a.guards[t].clone();
        let params: BTreeSet<String> = a
            .transitions
            .iter()
            .find(|x| x.id == *t)
            .and_then(|x| x.params.clone())
            .unwrap_or_default()
            .into_iter()
            .collect();
        for v in guard.free_vars() {
            if params.contains(&v) {
                continue;
            }
            if !data_places.contains(&v) {
                return Err(NetgenError::UnboundGuardVariable {
                    transition: t.clone(),
                    variable: v,
                });
            }
            let var = vec![Pattern::Var(v.clone())];
            a.arc(&v, t, var.clone());
            a.arc(t, &v, var);
        }
        if let Some(tr) = a.transitions.iter_mut().find(|x| x.id == *t) {
            tr.guard = Some(guard);
        }
    }

    // Name fused control-place classes P1, P2, ... by allocation order.
    let keys: Vec<String> = a.order.keys().cloned().collect();
    let mut roots: Vec<String> = keys
        .iter()
        .map(|k| a.find(k))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    roots.sort_by_key(|r| a.order[r]);
    let names: HashMap<String, String> = roots
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), format!("P{}", i + 1)))
        .collect();
    let mut rename = HashMap::new();
    for k in &keys {
        let root = a.find(k);
        rename.insert(k.clone(), names[&root].clone());
    }
    let start_id = rename[&start].clone();

    let mut places: Vec<Place> = roots
        .iter()
        .enumerate()
        .map(|(i, r)| Place {
            id: names[r].clone(),
            name: names[r].clone(),
            capacity: 0,
            position: Position {
                x: 30 + 195 * i as i64,
                y: 105,
            },
        })
        .collect();
    for (i, d) in data_places.iter().enumerate() {
        places.push(Place {
            id: d.clone(),
            name: d.clone(),
            capacity: 0,
            position: Position {
                x: 30 + 195 * i as i64,
                y: 300,
            },
        });
    }
    for (i, b) in a.budget_places.iter().enumerate() {
        places.push(Place {
            id: b.clone(),
            name: b.clone(),
            capacity: 0,
            position: Position {
                x: 30 + 195 * i as i64,
                y: 30,
            },
        });
    }

    let mut seen = HashSet::new();
    for id in places.iter().map(|p| &p.id).chain(a.transitions.iter().map(|t| &t.id)) {
        if !seen.insert(id.clone()) {
            return Err(NetgenError::IdCollision(id.clone()));
        }
    }

    let mut arcs = a.arcs;
    for arc in &mut arcs {
        if let Some(r) = rename.get(&arc.source) {
            arc.source = r.clone();
        }
        if let Some(r) = rename.get(&arc.target) {
            arc.target = r.clone();
        }
    }

    // Transitions sit between the control places they connect.
    let place_x: HashMap<&str, i64> = places.iter().map(|p| (p.id.as_str(), p.position.x)).collect();
    let control: HashSet<&str> = names.values().map(String::as_str).collect();
    let mut transitions = a.transitions;
    for t in &mut transitions {
        let xs: Vec<i64> = arcs
            .iter()
            .filter_map(|arc| {
                let other = if arc.target == t.id {
                    &arc.source
                } else if arc.source == t.id {
                    &arc.target
                } else {
                    return None;
                };
                control.contains(other.as_str()).then(|| place_x[other.as_str()])
            })
            .collect();
        let (lo, hi) = (
            xs.iter().min().copied().unwrap_or(0),
            xs.iter().max().copied().unwrap_or(0),
        );
        t.position = Position {
            x: (lo + hi) / 2,
            y: if t.silent { 180 } else { 105 },
        };
    }

    let mut init = vec![(start_id, Token::default())];
    init.extend(a.init);
    Ok(PrTNet {
        id: model_name.to_string(),
        places,
        transitions,
        arcs,
        init,
    }
    .normalized())
}

/// Full pipeline: validate, then build nodes, table, tree and net.
pub fn compile_model(model: &DesignModel, options: NetgenOptions) -> Result<PrTNet, NetgenError> {
    let report = validate_model(&model.classes, &model.sequence);
    if !report.is_clean() {
        return Err(NetgenError::Invalid(report));
    }
    let nodes = build_nodes(&model.sequence, &model.classes)?;
    let nrt = build_nrt(&nodes, &model.classes, &model.sequence);
    let tree = build_cfn(&model.sequence, &nodes);
    assemble_net(&nodes, &nrt, &tree, &model.name, options)
}

/// Data tokens seeded for a model, in seeding order.
pub fn seeded_tokens(nodes: &[Node]) -> Vec<(String, Atom)> {
    let mut out: Vec<(String, Atom)> = Vec::new();
    for n in nodes {
        for (p, t) in &n.tokens {
            let a = t.0[0].clone();
            if !out.iter().any(|(q, b)| q == p && *b == a) {
                out.push((p.clone(), a));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ingest::parse_design_model;
    use crate::petri::{compile_net, enabled, test_tree, Bounds, Marking};
    use crate::pnml::init_line;

    fn model(src: &str) -> DesignModel {
        parse_design_model(src.as_bytes()).unwrap()
    }

    fn net(src: &str) -> PrTNet {
        compile_model(&model(src), NetgenOptions::default()).unwrap()
    }

    #[test]
    fn login_nodes_are_numbered_in_message_order() {
        let m = model(fixtures::LOGIN_MODEL);
        let nodes = build_nodes(&m.sequence, &m.classes).unwrap();
        let ids: Vec<_> = nodes
            .iter()
            .map(|n| (n.id.as_str(), n.transition.as_str(), n.in_place.as_str()))
            .collect();
        assert_eq!(ids, [("N1", "T1", "P1"), ("N2", "T2", "P3"), ("N3", "T3", "P5")]);
        assert_eq!(nodes[2].tokens.len(), 2);
        let mut element_ids = HashSet::new();
        for n in &nodes {
            for id in [&n.in_place, &n.out_place, &n.transition, &n.in_arc, &n.out_arc] {
                assert!(element_ids.insert(id.clone()), "{id} reused");
            }
        }
    }

    #[test]
    fn login_net_shape_and_init() {
        let n = net(fixtures::LOGIN_MODEL);
        assert!(compile_net(&n).is_clean());
        assert_eq!(n.transitions.len(), 3);
        assert_eq!(init_line(&n).unwrap(), "INIT name(UID), password(PSWD)");
        let xs: Vec<i64> = n
            .places
            .iter()
            .filter(|p| p.position.y == 105)
            .map(|p| p.position.x)
            .collect();
        assert_eq!(xs, [30, 225, 420, 615]);
    }

    #[test]
    fn login_starts_with_one_enabled_pair() {
        let n = net(fixtures::LOGIN_MODEL);
        let en = enabled(&n, &Marking::initial(&n));
        let expected: crate::expr::Binding = [("name".to_string(), Atom::Symbol("UID".into()))].into();
        assert_eq!(en, vec![("T1".to_string(), expected)]);
    }

    #[test]
    fn sequence_links_form_a_chain() {
        let m = model(fixtures::LOGIN_MODEL);
        let nodes = build_nodes(&m.sequence, &m.classes).unwrap();
        let nrt = build_nrt(&nodes, &m.classes, &m.sequence);
        let links: Vec<_> = nrt.links().map(|(a, l)| (a, l.node.as_str(), l.relation)).collect();
        assert_eq!(
            links,
            [("N1", "N2", Relation::Sequence), ("N2", "N3", Relation::Sequence)]
        );
        assert!(nrt.association_edges.is_empty());
    }

    #[test]
    fn nrt_is_symmetric() {
        for (_, src) in fixtures::MODELS {
            let m = model(src);
            let nodes = build_nodes(&m.sequence, &m.classes).unwrap();
            let nrt = build_nrt(&nodes, &m.classes, &m.sequence);
            for (a, l) in nrt.links() {
                let back = nrt.row(&l.node).unwrap();
                assert!(back
                    .predecessors
                    .iter()
                    .any(|p| p.node == a && p.relation == l.relation));
            }
        }
    }

    #[test]
    fn alt_entry_has_fragment_entry_successors() {
        let m = model(fixtures::ALT_MODEL);
        let nodes = build_nodes(&m.sequence, &m.classes).unwrap();
        let nrt = build_nrt(&nodes, &m.classes, &m.sequence);
        let succ: Vec<_> = nrt
            .row("N1")
            .unwrap()
            .successors
            .iter()
            .map(|l| (l.node.as_str(), l.relation))
            .collect();
        assert_eq!(succ, [("N2", Relation::FragmentEntry), ("N3", Relation::FragmentEntry)]);
    }

    #[test]
    fn alt_entry_place_branches_with_guards() {
        let n = net(fixtures::ALT_MODEL);
        let entry = &n
            .arcs
            .iter()
            .find(|a| a.source == "T1" && a.target.starts_with('P'))
            .unwrap()
            .target;
        let outgoing: Vec<&str> = n
            .arcs
            .iter()
            .filter(|a| &a.source == entry)
            .map(|a| a.target.as_str())
            .collect();
        assert_eq!(outgoing, ["T2", "T3"]);
        assert_eq!(n.transition("T2").unwrap().guard.as_ref().unwrap().to_string(), "x > 0");
        assert_eq!(
            n.transition("T3").unwrap().guard.as_ref().unwrap().to_string(),
            "not x > 0"
        );
    }

    #[test]
    fn cf_tree_mirrors_nesting() {
        let m = model(fixtures::VENDING_MODEL);
        let nodes = build_nodes(&m.sequence, &m.classes).unwrap();
        let tree = build_cfn(&m.sequence, &nodes);
        assert_eq!(tree.leaves().len(), nodes.len());
        assert_eq!(tree.fragment_ids(), ["choice", "wait", "extra", "stop"]);
    }

    #[test]
    fn nested_fragments_compile_cleanly() {
        let n = net(fixtures::VENDING_MODEL);
        let report = compile_net(&n);
        assert!(report.is_clean(), "{report}");
        assert!(n.transitions.iter().any(|t| t.silent));
    }

    #[test]
    fn loop_budget_bounds_iterations() {
        let m = model(fixtures::VENDING_MODEL);
        let count_ticks = |opts| {
            let n = compile_model(&m, opts).unwrap();
            let tree = test_tree(&n, &Bounds::default());
            (1..tree.vertices.len())
                .map(|v| tree.path(v).iter().filter(|(t, _)| t == "T3").count())
                .max()
                .unwrap()
        };
        assert_eq!(count_ticks(NetgenOptions::default()), 3);
        assert_eq!(count_ticks(NetgenOptions { loop_unroll: Some(0) }), 1);
    }

    #[test]
    fn guard_on_unknown_variable_is_rejected() {
        let src = fixtures::ALT_MODEL.replace("x &gt; 0", "y &gt; 0");
        let m = model(&src);
        let err = compile_model(&m, NetgenOptions::default()).unwrap_err();
        assert_eq!(err.code(), "unbound-guard-variable");
    }

    #[test]
    fn invalid_model_is_refused() {
        let src = fixtures::LOGIN_MODEL.replace(
            "<arg>PSWD</arg>\n    </message>\n    <message id=\"m3\"",
            "</message>\n    <message id=\"m3\"",
        );
        let err = compile_model(&model(&src), NetgenOptions::default()).unwrap_err();
        assert_eq!(err.code(), "invalid-model");
    }

    #[test]
    fn data_place_named_like_a_control_place_collides() {
        let src = fixtures::ALT_MODEL
            .replace("name=\"x\"", "name=\"P1\"")
            .replace("x &gt; 0", "P1 &gt; 0");
        let err = compile_model(&model(&src), NetgenOptions::default()).unwrap_err();
        assert_eq!(err.code(), "id-collision");
    }
}
