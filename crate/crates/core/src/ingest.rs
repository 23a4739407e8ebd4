//! Reader for the design-model XML format.
//!
//! ```text
//! <model name>
//!   <classes>
//!     <class name>
//!       <attribute name type?/>*
//!       <operation name>
//!         <param name type?/>*
//!         <pre>EXPR</pre>?  <post>EXPR</post>?
//!       </operation>*
//!     </class>+
//!   </classes>
//!   <associations> <association from to label?/>* </associations>
//!   <sequence name>
//!     <lifeline id name class/>+
//!     ( <message id from to operation> <arg>ATOM</arg>* </message>
//!     | <fragment id operator loopMin? loopMax?>
//!         <operand guard?> ... </operand>+
//!       </fragment> )+
//!   </sequence>
//! </model>
//! ```
//!
//! Unknown elements or attributes are rejected. Cardinality of lists is left
//! to [`crate::model::validate_model`].

use std::collections::HashSet;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::expr::{parse_expr, Atom, Expr};
use crate::model::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("XML error at {line}:{col}: {message}")]
    Xml { line: u32, col: u32, message: String },
    #[error("{code} at {line}:{col}: {message}")]
    Schema {
        code: &'static str,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("duplicate id `{id}` at {line}:{col}")]
    DuplicateId { id: String, line: u32, col: u32 },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Xml { .. } => "xml",
            IngestError::Schema { code, .. } => code,
            IngestError::DuplicateId { .. } => "duplicate-id",
        }
    }
}

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
    ids: HashSet<String>,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn schema(&self, node: Node, code: &'static str, message: impl Into<String>) -> IngestError {
        let pos = self.doc.text_pos_at(node.range().start);
        IngestError::Schema {
            code,
            line: pos.row,
            col: pos.col,
            message: message.into(),
        }
    }

    fn attrs(&self, node: Node, required: &[&str], optional: &[&str]) -> Result<(), IngestError> {
        for a in node.attributes() {
            if !required.contains(&a.name()) && !optional.contains(&a.name()) {
                return Err(self.schema(
                    node,
                    "unknown-attribute",
                    format!("<{}> has no attribute `{}`", node.tag_name().name(), a.name()),
                ));
            }
        }
        for r in required {
            if node.attribute(*r).is_none() {
                return Err(self.schema(
                    node,
                    "missing-attribute",
                    format!("<{}> requires attribute `{r}`", node.tag_name().name()),
                ));
            }
        }
        Ok(())
    }

    fn attr(&self, node: Node, name: &str) -> String {
        node.attribute(name).unwrap_or_default().to_string()
    }

    fn claim_id(&mut self, node: Node, id: &str) -> Result<(), IngestError> {
        if !self.ids.insert(id.to_string()) {
            let pos = self.doc.text_pos_at(node.range().start);
            return Err(IngestError::DuplicateId {
                id: id.to_string(),
                line: pos.row,
                col: pos.col,
            });
        }
        Ok(())
    }

    /// Element children, rejecting stray non-whitespace text.
    fn children(&self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, IngestError> {
        let mut out = Vec::new();
        for c in node.children() {
            if c.is_element() {
                out.push(c);
            } else if c.is_text() && !c.text().unwrap_or_default().trim().is_empty() {
                return Err(self.schema(
                    c,
                    "unexpected-text",
                    format!("<{}> must not contain text", node.tag_name().name()),
                ));
            }
        }
        Ok(out)
    }

    fn unknown(&self, node: Node, parent: &str) -> IngestError {
        self.schema(
            node,
            "unknown-element",
            format!("<{}> is not allowed inside <{parent}>", node.tag_name().name()),
        )
    }

    fn text_leaf(&self, node: Node) -> Result<String, IngestError> {
        self.attrs(node, &[], &[])?;
        if node.children().any(|c| c.is_element()) {
            return Err(self.schema(
                node,
                "unexpected-element",
                format!("<{}> holds text only", node.tag_name().name()),
            ));
        }
        Ok(node.text().unwrap_or_default().trim().to_string())
    }

    fn expr(&self, node: Node, text: &str) -> Result<Expr, IngestError> {
        parse_expr(text).map_err(|e| self.schema(node, "bad-expression", e.to_string()))
    }

    fn param(&self, node: Node) -> Result<Param, IngestError> {
        self.attrs(node, &["name"], &["type"])?;
        if !self.children(node)?.is_empty() {
            return Err(self.schema(node, "unexpected-element", "parameters have no children"));
        }
        Ok(Param {
            name: self.attr(node, "name"),
            type_name: self.attr(node, "type"),
        })
    }

    fn operation(&self, node: Node<'a, 'input>) -> Result<OperationDef, IngestError> {
        self.attrs(node, &["name"], &[])?;
        let mut op = OperationDef {
            name: self.attr(node, "name"),
            params: vec![],
            pre: None,
            post: None,
        };
        for c in self.children(node)? {
            match c.tag_name().name() {
                "param" => op.params.push(self.param(c)?),
                "pre" if op.pre.is_none() => op.pre = Some(self.expr(c, &self.text_leaf(c)?)?),
                "post" if op.post.is_none() => op.post = Some(self.expr(c, &self.text_leaf(c)?)?),
                "pre" | "post" => return Err(self.schema(c, "duplicate-element", "repeated constraint")),
                _ => return Err(self.unknown(c, "operation")),
            }
        }
        Ok(op)
    }

    fn class(&self, node: Node<'a, 'input>) -> Result<ClassDef, IngestError> {
        self.attrs(node, &["name"], &[])?;
        let mut class = ClassDef {
            name: self.attr(node, "name"),
            attributes: vec![],
            operations: vec![],
        };
        for c in self.children(node)? {
            match c.tag_name().name() {
                "attribute" => class.attributes.push(self.param(c)?),
                "operation" => class.operations.push(self.operation(c)?),
                _ => return Err(self.unknown(c, "class")),
            }
        }
        Ok(class)
    }

    fn message(&mut self, node: Node<'a, 'input>) -> Result<Message, IngestError> {
        self.attrs(node, &["id", "from", "to", "operation"], &[])?;
        let id = self.attr(node, "id");
        self.claim_id(node, &id)?;
        let mut args = Vec::new();
        for c in self.children(node)? {
            if c.tag_name().name() != "arg" {
                return Err(self.unknown(c, "message"));
            }
            let text = self.text_leaf(c)?;
            args.push(Atom::parse(&text).map_err(|e| self.schema(c, "bad-atom", e.to_string()))?);
        }
        Ok(Message {
            id,
            from: self.attr(node, "from"),
            to: self.attr(node, "to"),
            operation: self.attr(node, "operation"),
            args,
        })
    }

    fn bound(&self, node: Node, name: &str) -> Result<Option<u32>, IngestError> {
        node.attribute(name)
            .map(|v| {
                v.trim().parse::<u32>().map_err(|_| {
                    self.schema(
                        node,
                        "bad-attribute",
                        format!("`{name}` must be a non-negative integer"),
                    )
                })
            })
            .transpose()
    }

    fn fragment(&mut self, node: Node<'a, 'input>) -> Result<CombinedFragment, IngestError> {
        self.attrs(node, &["id", "operator"], &["loopMin", "loopMax"])?;
        let id = self.attr(node, "id");
        self.claim_id(node, &id)?;
        let op_text = self.attr(node, "operator");
        let operator = FragmentOperator::from_keyword(&op_text)
            .ok_or_else(|| self.schema(node, "bad-attribute", format!("unknown fragment operator `{op_text}`")))?;
        let mut operands = Vec::new();
        for c in self.children(node)? {
            if c.tag_name().name() != "operand" {
                return Err(self.unknown(c, "fragment"));
            }
            self.attrs(c, &[], &["guard"])?;
            let guard = c.attribute("guard").map(|g| self.expr(c, g)).transpose()?;
            let body = self.body(c, "operand")?;
            operands.push(Operand { guard, body });
        }
        Ok(CombinedFragment {
            id,
            operator,
            operands,
            loop_min: self.bound(node, "loopMin")?,
            loop_max: self.bound(node, "loopMax")?,
        })
    }

    fn body(&mut self, node: Node<'a, 'input>, parent: &str) -> Result<Vec<SeqElement>, IngestError> {
        let mut body = Vec::new();
        for c in self.children(node)? {
            match c.tag_name().name() {
                "message" => body.push(SeqElement::Message(self.message(c)?)),
                "fragment" => body.push(SeqElement::Fragment(self.fragment(c)?)),
                _ => return Err(self.unknown(c, parent)),
            }
        }
        Ok(body)
    }

    fn sequence(&mut self, node: Node<'a, 'input>) -> Result<SequenceModel, IngestError> {
        self.attrs(node, &["name"], &[])?;
        let mut lifelines = Vec::new();
        let mut rest = Vec::new();
        for c in self.children(node)? {
            if c.tag_name().name() == "lifeline" {
                if !rest.is_empty() {
                    return Err(self.schema(c, "misplaced-element", "lifelines must precede the sequence body"));
                }
                self.attrs(c, &["id", "name", "class"], &[])?;
                let id = self.attr(c, "id");
                self.claim_id(c, &id)?;
                lifelines.push(Lifeline {
                    id,
                    display_name: self.attr(c, "name"),
                    class_name: self.attr(c, "class"),
                });
            } else {
                rest.push(c);
            }
        }
        let mut body = Vec::new();
        for c in rest {
            match c.tag_name().name() {
                "message" => body.push(SeqElement::Message(self.message(c)?)),
                "fragment" => body.push(SeqElement::Fragment(self.fragment(c)?)),
                _ => return Err(self.unknown(c, "sequence")),
            }
        }
        Ok(SequenceModel {
            name: self.attr(node, "name"),
            lifelines,
            body,
        })
    }

    fn model(&mut self, root: Node<'a, 'input>) -> Result<DesignModel, IngestError> {
        if root.tag_name().name() != "model" {
            return Err(self.schema(root, "unknown-element", "root element must be <model>"));
        }
        self.attrs(root, &["name"], &[])?;
        let mut classes = None;
        let mut associations = None;
        let mut sequence = None;
        for c in self.children(root)? {
            match c.tag_name().name() {
                "classes" if classes.is_none() => {
                    self.attrs(c, &[], &[])?;
                    let mut list = Vec::new();
                    for k in self.children(c)? {
                        if k.tag_name().name() != "class" {
                            return Err(self.unknown(k, "classes"));
                        }
                        list.push(self.class(k)?);
                    }
                    classes = Some(list);
                }
                "associations" if associations.is_none() => {
                    self.attrs(c, &[], &[])?;
                    let mut list = Vec::new();
                    for a in self.children(c)? {
                        if a.tag_name().name() != "association" {
                            return Err(self.unknown(a, "associations"));
                        }
                        self.attrs(a, &["from", "to"], &["label"])?;
                        list.push(Association {
                            from: self.attr(a, "from"),
                            to: self.attr(a, "to"),
                            label: a.attribute("label").map(str::to_string),
                        });
                    }
                    associations = Some(list);
                }
                "sequence" if sequence.is_none() => sequence = Some(self.sequence(c)?),
                "classes" | "associations" | "sequence" => {
                    return Err(self.schema(
                        c,
                        "duplicate-element",
                        format!("<{}> may appear once", c.tag_name().name()),
                    ))
                }
                _ => return Err(self.unknown(c, "model")),
            }
        }
        let Some(classes) = classes else {
            return Err(self.schema(root, "missing-classes", "<model> requires a <classes> element"));
        };
        let Some(sequence) = sequence else {
            return Err(self.schema(root, "missing-sequence", "<model> requires a <sequence> element"));
        };
        Ok(DesignModel {
            name: self.attr(root, "name"),
            classes: ClassModel {
                classes,
                associations: associations.unwrap_or_default(),
            },
            sequence,
        })
    }
}

/// Parses a design-model document (UTF-8) into a [`DesignModel`].
pub fn parse_design_model(input: &[u8]) -> Result<DesignModel, IngestError> {
    let text = std::str::from_utf8(input).map_err(|e| IngestError::Xml {
        line: 1,
        col: 1,
        message: format!("input is not UTF-8: {e}"),
    })?;
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        IngestError::Xml {
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })?;
    let mut reader = Reader {
        doc: &doc,
        ids: HashSet::new(),
    };
    reader.model(doc.root_element())
}

/// Parses a design-model document into its class and sequence models.
pub fn parse_model_xml(input: &[u8]) -> Result<(ClassModel, SequenceModel), IngestError> {
    parse_design_model(input).map(|m| (m.classes, m.sequence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn login_fixture_shape() {
        let (cm, sm) = parse_model_xml(fixtures::LOGIN_MODEL.as_bytes()).unwrap();
        assert_eq!(cm.classes.len(), 1);
        let login = &cm.classes[0];
        assert_eq!(login.name, "login");
        let ops: Vec<_> = login.operations.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(ops, ["enterName", "enterPassword", "login"]);
        let msgs = sm.messages();
        assert_eq!(msgs.len(), 3);
        assert_eq!(msgs[2].args, [Atom::Symbol("UID".into()), Atom::Symbol("PSWD".into())]);
    }

    #[test]
    fn missing_sequence() {
        let xml = r#"<model name="m"><classes><class name="A"/></classes></model>"#;
        let err = parse_model_xml(xml.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "missing-sequence");
    }

    #[test]
    fn xml_syntax_error_has_position() {
        let err = parse_model_xml(b"<model name=\"m\">\n  <classes>\n</model>").unwrap_err();
        match err {
            IngestError::Xml { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violations() {
        let unknown_el = r#"<model name="m"><classes/><bogus/><sequence name="s"/></model>"#;
        assert_eq!(
            parse_model_xml(unknown_el.as_bytes()).unwrap_err().code(),
            "unknown-element"
        );
        let unknown_attr = r#"<model name="m" color="red"><classes/><sequence name="s"/></model>"#;
        assert_eq!(
            parse_model_xml(unknown_attr.as_bytes()).unwrap_err().code(),
            "unknown-attribute"
        );
        let missing_attr = r#"<model name="m"><classes><class/></classes><sequence name="s"/></model>"#;
        assert_eq!(
            parse_model_xml(missing_attr.as_bytes()).unwrap_err().code(),
            "missing-attribute"
        );
        let bad_guard = r#"<model name="m"><classes/><sequence name="s">
            <fragment id="f" operator="opt"><operand guard="x >"/></fragment></sequence></model>"#;
        assert_eq!(
            parse_model_xml(bad_guard.as_bytes()).unwrap_err().code(),
            "bad-expression"
        );
    }

    #[test]
    fn duplicate_ids() {
        let xml = r#"<model name="m"><classes/><sequence name="s">
            <lifeline id="a" name="A" class="A"/>
            <message id="a" from="a" to="a" operation="f"/>
            </sequence></model>"#;
        assert_eq!(parse_model_xml(xml.as_bytes()).unwrap_err().code(), "duplicate-id");
    }

    #[test]
    fn whitespace_is_insignificant() {
        let compact: String = fixtures::LOGIN_MODEL
            .lines()
            .map(str::trim)
            .collect::<Vec<_>>()
            .join("");
        assert_eq!(
            parse_design_model(compact.as_bytes()).unwrap(),
            parse_design_model(fixtures::LOGIN_MODEL.as_bytes()).unwrap()
        );
    }

    /// Independent walk over the raw XML: count operands of every `alt`
    /// fragment without going through the reader.
    fn alt_operand_counts_by_hand(xml: &str) -> Vec<usize> {
        let doc = Document::parse(xml).unwrap();
        doc.descendants()
            .filter(|n| n.has_tag_name("fragment") && n.attribute("operator") == Some("alt"))
            .map(|n| n.children().filter(|c| c.has_tag_name("operand")).count())
            .collect()
    }

    #[test]
    fn alt_fragment_operands() {
        let by_hand = alt_operand_counts_by_hand(fixtures::ALT_MODEL);
        assert_eq!(by_hand, [2]);
        let (_, sm) = parse_model_xml(fixtures::ALT_MODEL.as_bytes()).unwrap();
        let frags = sm.fragments();
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].operator, FragmentOperator::Alt);
        assert_eq!(frags[0].operands.len(), by_hand[0]);
        assert!(frags[0].operands[0].guard.is_some());
        assert!(frags[0].operands[1].guard.is_none());
    }

    #[test]
    fn parsing_is_deterministic() {
        for src in fixtures::MODELS {
            assert_eq!(
                parse_design_model(src.1.as_bytes()),
                parse_design_model(src.1.as_bytes())
            );
        }
    }
}
