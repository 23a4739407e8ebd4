//! Scenarios from a test tree and the model-level test text.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::expr::{Atom, Binding};
use crate::petri::{PrTNet, TestTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringRecord {
    pub transition: String,
    pub name: String,
    pub args: Vec<Atom>,
    pub silent: bool,
    pub binding: Binding,
}

impl FiringRecord {
    /// `name(a1, a2)`.
    pub fn call(&self) -> String {
        let args: Vec<String> = self.args.iter().map(ToString::to_string).collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub firings: Vec<FiringRecord>,
    /// State labels along the path, one more than `firings`.
    pub states: Vec<usize>,
    /// Tree vertex the scenario ends at.
    pub vertex: usize,
    /// Not a strict prefix of another scenario.
    pub maximal: bool,
    /// Post-condition annotations of the fired transitions, in order.
    pub oracles: Vec<String>,
}

impl Scenario {
    /// `m0->T1->m1->...`.
    pub fn trace(&self) -> String {
        let mut out = format!("m{}", self.states[0]);
        for (f, s) in self.firings.iter().zip(&self.states[1..]) {
            let _ = write!(out, "->{}->m{s}", f.transition);
        }
        out
    }

    pub fn calls(&self) -> Vec<String> {
        self.firings
            .iter()
            .filter(|f| !f.silent)
            .map(FiringRecord::call)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub net_id: String,
    pub scenarios: Vec<Scenario>,
}

impl TestSuite {
    pub fn maximal(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().filter(|s| s.maximal)
    }

    /// The suite restricted to maximal scenarios.
    pub fn maximal_suite(&self) -> TestSuite {
        TestSuite {
            net_id: self.net_id.clone(),
            scenarios: self.maximal().cloned().collect(),
        }
    }
}

/// One scenario per non-root vertex, in the tree's depth-first preorder.
pub fn scenarios(tree: &TestTree, net: &PrTNet) -> TestSuite {
    let record = |(t, b): (String, Binding)| {
        let trans = net.transition(&t);
        let (name, silent, args) = match trans {
            Some(tr) => (
                tr.name.clone(),
                tr.silent,
                net.call_params(tr).iter().filter_map(|p| b.get(p).cloned()).collect(),
            ),
            None => (t.clone(), false, Vec::new()),
        };
        FiringRecord {
            transition: t,
            name,
            args,
            silent,
            binding: b,
        }
    };
    let scenarios = (1..tree.vertices.len())
        .map(|v| {
            let firings: Vec<FiringRecord> = tree.path(v).into_iter().map(record).collect();
            let oracles = firings
                .iter()
                .filter_map(|f| net.transition(&f.transition)?.annotation.clone())
                .collect();
            Scenario {
                firings,
                states: tree.state_path(v),
                vertex: v,
                maximal: tree.vertices[v].children.is_empty(),
                oracles,
            }
        })
        .collect();
    TestSuite {
        net_id: net.id.clone(),
        scenarios,
    }
}

/// The `Model-Level Tests` block, one numbered line per scenario.
pub fn format_model_tests(suite: &TestSuite, maximal_only: bool) -> String {
    let mut out = String::from("Model-Level Tests\n");
    let chosen = suite.scenarios.iter().filter(|s| !maximal_only || s.maximal);
    for (i, s) in chosen.enumerate() {
        let line = format!("{}. {}", i + 1, s.calls().join(", "));
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

/// `Sc<n>\t<trace>` per scenario.
pub fn format_traces(suite: &TestSuite, maximal_only: bool) -> String {
    let mut out = String::new();
    let chosen = suite.scenarios.iter().filter(|s| !maximal_only || s.maximal);
    for (i, s) in chosen.enumerate() {
        let _ = writeln!(out, "Sc{}\t{}", i + 1, s.trace());
    }
    out
}
