//! Design-model domain types (classes, operations, sequence flows with
//! combined fragments) and cross-model validation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{Atom, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationDef {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub attributes: Vec<Param>,
    pub operations: Vec<OperationDef>,
}

impl ClassDef {
    pub fn operation(&self, name: &str) -> Option<&OperationDef> {
        self.operations.iter().find(|o| o.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub from: String,
    pub to: String,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub classes: Vec<ClassDef>,
    pub associations: Vec<Association>,
}

impl ClassModel {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// True when an association links the two classes in either direction.
    pub fn associated(&self, a: &str, b: &str) -> bool {
        self.associations
            .iter()
            .any(|x| (x.from == a && x.to == b) || (x.from == b && x.to == a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lifeline {
    pub id: String,
    pub display_name: String,
    pub class_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub from: String,
    pub to: String,
    pub operation: String,
    pub args: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentOperator {
    Alt,
    Opt,
    Loop,
    Break,
    Par,
}

impl FragmentOperator {
    pub fn keyword(self) -> &'static str {
        match self {
            FragmentOperator::Alt => "alt",
            FragmentOperator::Opt => "opt",
            FragmentOperator::Loop => "loop",
            FragmentOperator::Break => "break",
            FragmentOperator::Par => "par",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "alt" => FragmentOperator::Alt,
            "opt" => FragmentOperator::Opt,
            "loop" => FragmentOperator::Loop,
            "break" => FragmentOperator::Break,
            "par" => FragmentOperator::Par,
            _ => return None,
        })
    }
}

impl fmt::Display for FragmentOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operand {
    pub guard: Option<Expr>,
    pub body: Vec<SeqElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedFragment {
    pub id: String,
    pub operator: FragmentOperator,
    pub operands: Vec<Operand>,
    pub loop_min: Option<u32>,
    pub loop_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeqElement {
    Message(Message),
    Fragment(CombinedFragment),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceModel {
    pub name: String,
    pub lifelines: Vec<Lifeline>,
    pub body: Vec<SeqElement>,
}

impl SequenceModel {
    pub fn lifeline(&self, id: &str) -> Option<&Lifeline> {
        self.lifelines.iter().find(|l| l.id == id)
    }

    /// All messages in document order, descending into fragments.
    pub fn messages(&self) -> Vec<&Message> {
        fn walk<'a>(body: &'a [SeqElement], out: &mut Vec<&'a Message>) {
            for el in body {
                match el {
                    SeqElement::Message(m) => out.push(m),
                    SeqElement::Fragment(f) => {
                        for op in &f.operands {
                            walk(&op.body, out);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    /// All fragments in document order (outer before inner).
    pub fn fragments(&self) -> Vec<&CombinedFragment> {
        fn walk<'a>(body: &'a [SeqElement], out: &mut Vec<&'a CombinedFragment>) {
            for el in body {
                if let SeqElement::Fragment(f) = el {
                    out.push(f);
                    for op in &f.operands {
                        walk(&op.body, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    /// Resolves the operation a message invokes on its receiver.
    pub fn target_operation<'a>(&self, cm: &'a ClassModel, m: &Message) -> Option<&'a OperationDef> {
        let receiver = self.lifeline(&m.to)?;
        cm.class(&receiver.class_name)?.operation(&m.operation)
    }
}

/// Structural plus behavioural input to net generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignModel {
    pub name: String,
    pub classes: ClassModel,
    pub sequence: SequenceModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error(&mut self, code: &str, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            code: code.into(),
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn warn(&mut self, code: &str, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            code: code.into(),
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn has_error(&self, code: &str) -> bool {
        self.errors.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

fn report_duplicates<'a>(
    report: &mut ValidationReport,
    code: &str,
    location: &str,
    what: &str,
    names: impl IntoIterator<Item = &'a str>,
) {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            report.error(code, location, format!("duplicate {what} `{n}`"));
        }
    }
}

/// Checks every class-model and sequence-model invariant. Lifelines typed by
/// a class absent from the class model are treated as external actors: they
/// may send messages but cannot receive them.
pub fn validate_model(cm: &ClassModel, sm: &SequenceModel) -> ValidationReport {
    let mut r = ValidationReport::default();

    report_duplicates(
        &mut r,
        "duplicate-class",
        "classes",
        "class",
        cm.classes.iter().map(|c| c.name.as_str()),
    );
    for c in &cm.classes {
        let loc = format!("class {}", c.name);
        report_duplicates(
            &mut r,
            "duplicate-attribute",
            &loc,
            "attribute",
            c.attributes.iter().map(|a| a.name.as_str()),
        );
        report_duplicates(
            &mut r,
            "duplicate-operation",
            &loc,
            "operation",
            c.operations.iter().map(|o| o.name.as_str()),
        );
        let attrs: BTreeSet<&str> = c.attributes.iter().map(|a| a.name.as_str()).collect();
        for op in &c.operations {
            let loc = format!("{}.{}", c.name, op.name);
            report_duplicates(
                &mut r,
                "duplicate-param",
                &loc,
                "parameter",
                op.params.iter().map(|p| p.name.as_str()),
            );
            if let Some(pre) = &op.pre {
                for v in pre.free_vars() {
                    if !attrs.contains(v.as_str()) && !op.params.iter().any(|p| p.name == v) {
                        r.error(
                            "pre-free-variable",
                            &loc,
                            format!("pre-condition mentions `{v}`, which is neither a parameter nor an attribute"),
                        );
                    }
                }
            }
        }
    }
    for a in &cm.associations {
        let loc = format!("association {}->{}", a.from, a.to);
        for end in [&a.from, &a.to] {
            if cm.class(end).is_none() {
                r.error("unknown-association-class", &loc, format!("no class named `{end}`"));
            }
        }
        if a.from == a.to && a.label.is_none() {
            r.error(
                "unlabeled-self-association",
                &loc,
                "self-association must carry a label",
            );
        }
    }

    report_duplicates(
        &mut r,
        "duplicate-lifeline",
        "sequence",
        "lifeline",
        sm.lifelines.iter().map(|l| l.id.as_str()),
    );
    if sm.body.is_empty() {
        r.error("empty-body", format!("sequence {}", sm.name), "sequence body is empty");
    }
    let mut ids = Vec::new();
    check_body(cm, sm, &sm.body, &mut r, &mut ids);
    report_duplicates(
        &mut r,
        "duplicate-element-id",
        "sequence",
        "element id",
        ids.iter().map(String::as_str),
    );
    r
}

fn check_body(
    cm: &ClassModel,
    sm: &SequenceModel,
    body: &[SeqElement],
    r: &mut ValidationReport,
    ids: &mut Vec<String>,
) {
    for el in body {
        match el {
            SeqElement::Message(m) => {
                ids.push(m.id.clone());
                check_message(cm, sm, m, r);
            }
            SeqElement::Fragment(f) => {
                ids.push(f.id.clone());
                check_fragment(f, r);
                for op in &f.operands {
                    check_body(cm, sm, &op.body, r, ids);
                }
            }
        }
    }
}

fn check_message(cm: &ClassModel, sm: &SequenceModel, m: &Message, r: &mut ValidationReport) {
    let loc = format!("message {}", m.id);
    let from = sm.lifeline(&m.from);
    let to = sm.lifeline(&m.to);
    for (end, ll) in [(&m.from, from), (&m.to, to)] {
        if ll.is_none() {
            r.error("unknown-lifeline", &loc, format!("no lifeline with id `{end}`"));
        }
    }
    let Some(to) = to else { return };
    let Some(class) = cm.class(&to.class_name) else {
        r.error(
            "unknown-receiver-class",
            &loc,
            format!(
                "receiver lifeline `{}` has class `{}`, which is not defined",
                to.id, to.class_name
            ),
        );
        return;
    };
    let Some(op) = class.operation(&m.operation) else {
        r.error(
            "unknown-operation",
            &loc,
            format!("class `{}` has no operation `{}`", class.name, m.operation),
        );
        return;
    };
    if op.params.len() != m.args.len() {
        r.error(
            "arity-mismatch",
            &loc,
            format!(
                "`{}` takes {} argument(s), message passes {}",
                op.name,
                op.params.len(),
                m.args.len()
            ),
        );
    }
    if let Some(from) = from {
        if cm.class(&from.class_name).is_some() && !cm.associated(&from.class_name, &to.class_name) {
            r.warn(
                "unassociated-message",
                &loc,
                format!(
                    "classes `{}` and `{}` share no association",
                    from.class_name, to.class_name
                ),
            );
        }
    }
}

fn check_fragment(f: &CombinedFragment, r: &mut ValidationReport) {
    use FragmentOperator::*;
    let loc = format!("fragment {}", f.id);
    let n = f.operands.len();
    match f.operator {
        Opt | Loop | Break if n != 1 => r.error(
            "operand-count",
            &loc,
            format!("`{}` takes exactly one operand, found {n}", f.operator),
        ),
        Alt | Par if n < 2 => r.error(
            "operand-count",
            &loc,
            format!("`{}` takes at least two operands, found {n}", f.operator),
        ),
        _ => {}
    }
    if f.operator == Alt && f.operands.iter().filter(|o| o.guard.is_none()).count() > 1 {
        r.error("multiple-else", &loc, "at most one alt operand may omit its guard");
    }
    if f.operator != Loop && (f.loop_min.is_some() || f.loop_max.is_some()) {
        r.error("loop-bounds", &loc, "loop bounds are only allowed on loop fragments");
    }
    if let (Some(lo), Some(hi)) = (f.loop_min, f.loop_max) {
        if lo > hi {
            r.error("loop-bounds", &loc, format!("loopMin {lo} exceeds loopMax {hi}"));
        }
    }
    for (k, op) in f.operands.iter().enumerate() {
        let implicit_else = f.operator == Alt && op.guard.is_none();
        if op.body.is_empty() && !implicit_else {
            r.error("empty-operand", &loc, format!("operand {} is empty", k + 1));
        }
    }
}

/// Looks up, for every message, the resolved operation. Only meaningful on a
/// model that validated cleanly.
pub(crate) fn operation_index<'a>(cm: &'a ClassModel, sm: &SequenceModel) -> HashMap<String, &'a OperationDef> {
    sm.messages()
        .into_iter()
        .filter_map(|m| Some((m.id.clone(), sm.target_operation(cm, m)?)))
        .collect()
}
