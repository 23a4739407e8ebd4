//! Reader and writer for the PrT-net PNML dialect.
//!
//! The dialect carries a `tokenclass`, an optional `labels` block holding
//! the `INIT` line for data tokens, and `place` elements with position,
//! name, initial marking and capacity. Transitions (with guard, call
//! parameters and post-condition annotation) and arcs (with inscriptions)
//! follow the same nested-`value` style. Output is ISO-8859-1; characters
//! outside that range are written as character references.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::expr::{is_identifier, parse_expr, Atom};
use crate::petri::{cmp_ids, fmt_pattern_list, Arc, Pattern, Place, Position, PrTNet, Token, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmlError {
    #[error("XML error at {line}:{col}: {message}")]
    Xml { line: u32, col: u32, message: String },
    #[error("{code} at {line}:{col}: {message}")]
    Dialect {
        code: &'static str,
        line: u32,
        col: u32,
        message: String,
    },
}

impl PnmlError {
    pub fn code(&self) -> &'static str {
        match self {
            PnmlError::Xml { .. } => "xml",
            PnmlError::Dialect { code, .. } => code,
        }
    }
}

fn escape_text(s: &str, out: &mut String) {
    let mut prev = ['\0', '\0'];
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' if prev == [']', ']'] => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c if (c as u32) > 0xFF => {
                let _ = write!(out, "&#{};", c as u32);
            }
            c => out.push(c),
        }
        prev = [prev[1], c];
    }
}

fn escape_attr(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c if (c as u32) > 0xFF => {
                let _ = write!(out, "&#{};", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn value_block(out: &mut String, indent: &str, tag: &str, value: &str) {
    let _ = writeln!(out, "{indent}<{tag}>");
    let _ = write!(out, "{indent}  <value>");
    escape_text(value, out);
    out.push_str("</value>\n");
    let _ = writeln!(out, "{indent}</{tag}>");
}

fn position_block(out: &mut String, indent: &str, p: Position) {
    let _ = writeln!(out, "{indent}<graphics>");
    let _ = writeln!(out, "{indent}  <position y=\"{}.0\" x=\"{}.0\"/>", p.y, p.x);
    let _ = writeln!(out, "{indent}</graphics>");
}

fn marking_text(tokens: &[&Token]) -> String {
    tokens.iter().map(|t| format!("{t},")).collect()
}

/// The `INIT p(a,...), q(...)` line for the data tokens of the initial
/// declaration, or `None` when there are none.
pub fn init_line(net: &PrTNet) -> Option<String> {
    let items: Vec<String> = net
        .init
        .iter()
        .filter(|(_, t)| !t.is_default())
        .map(|(p, t)| format!("{p}{t}"))
        .collect();
    (!items.is_empty()).then(|| format!("INIT {}", items.join(", ")))
}

/// Serializes a net. Elements are emitted sorted by id.
pub fn write_pnml(net: &PrTNet) -> Vec<u8> {
    let net = net.clone().normalized();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"ISO-8859-1\"?>\n<pnml>\n");
    let _ = writeln!(out, "  <net type=\"PrT net\" id=\"{}\">", escape_attr(&net.id));
    out.push_str("    <tokenclass id=\"Default\" blue=\"0\" green=\"0\" red=\"0\" enabled=\"true\"/>\n");
    if let Some(line) = init_line(&net) {
        out.push_str("    <labels border=\"true\" height=\"13\" width=\"539\" y=\"316\" x=\"83\">\n");
        out.push_str("      <text>");
        escape_text(&line, &mut out);
        out.push_str("</text>\n    </labels>\n");
    }
    let i = "      ";
    for p in &net.places {
        let _ = writeln!(out, "    <place id=\"{}\">", escape_attr(&p.id));
        position_block(&mut out, i, p.position);
        value_block(&mut out, i, "name", &p.name);
        let tokens: Vec<&Token> = net.init.iter().filter(|(q, _)| *q == p.id).map(|(_, t)| t).collect();
        value_block(&mut out, i, "initialMarking", &marking_text(&tokens));
        value_block(&mut out, i, "capacity", &p.capacity.to_string());
        out.push_str("    </place>\n");
    }
    for t in &net.transitions {
        let silent = if t.silent { " silent=\"true\"" } else { "" };
        let _ = writeln!(out, "    <transition id=\"{}\"{silent}>", escape_attr(&t.id));
        position_block(&mut out, i, t.position);
        value_block(&mut out, i, "name", &t.name);
        let guard = t.guard.as_ref().map(ToString::to_string).unwrap_or_default();
        value_block(&mut out, i, "guard", &guard);
        if let Some(params) = &t.params {
            value_block(&mut out, i, "params", &params.join(","));
        }
        if let Some(note) = &t.annotation {
            value_block(&mut out, i, "annotation", note);
        }
        out.push_str("    </transition>\n");
    }
    for a in &net.arcs {
        let _ = writeln!(
            out,
            "    <arc id=\"{}\" source=\"{}\" target=\"{}\">",
            escape_attr(&a.id),
            escape_attr(&a.source),
            escape_attr(&a.target)
        );
        value_block(&mut out, i, "inscription", &fmt_pattern_list(&a.inscription));
        out.push_str("    </arc>\n");
    }
    out.push_str("  </net>\n</pnml>\n");
    // Every char above U+00FF was escaped, so this is a plain Latin-1 encode.
    out.chars().map(|c| c as u32 as u8).collect()
}

/// Splits on `sep` outside parentheses and quotes.
fn split_top_level(s: &str, sep: char) -> Option<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' && q == '"' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if quote.is_some() || depth != 0 {
        return None;
    }
    parts.push(&s[start..]);
    Some(parts)
}

fn parse_atoms(s: &str) -> Option<Vec<Atom>> {
    split_top_level(s, ',')?
        .into_iter()
        .map(|a| Atom::parse(a).ok())
        .collect()
}

fn parse_pattern(item: &str) -> Option<Pattern> {
    let item = item.trim();
    if let Some(inner) = item.strip_prefix('\'').and_then(|r| r.strip_suffix('\'')) {
        return is_identifier(inner).then(|| Pattern::Const(Atom::Symbol(inner.to_string())));
    }
    match Atom::parse(item).ok()? {
        Atom::Symbol(v) => Some(Pattern::Var(v)),
        a => Some(Pattern::Const(a)),
    }
}

/// Parses a comma-joined inscription (`x,'UID',3`).
pub fn parse_inscription(s: &str) -> Option<Vec<Pattern>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    split_top_level(s, ',')?.into_iter().map(parse_pattern).collect()
}

/// Parses an initialMarking value (`Default,(UID),`).
pub fn parse_marking(s: &str) -> Option<Vec<Token>> {
    let mut rest = s.trim();
    let mut out = Vec::new();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("Default") {
            out.push(Token::default());
            rest = r.trim_start();
        } else if rest.starts_with('(') {
            let close = matching_paren(rest)?;
            out.push(Token(parse_atoms(&rest[1..close])?));
            rest = rest[close + 1..].trim_start();
        } else {
            return None;
        }
        rest = rest.strip_prefix(',')?.trim_start();
    }
    Some(out)
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' && q == '"' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses an `INIT` line into (place, token) pairs.
pub fn parse_init_line(s: &str) -> Option<Vec<(String, Token)>> {
    let body = s.trim().strip_prefix("INIT")?;
    if !body.is_empty() && !body.starts_with(char::is_whitespace) {
        return None;
    }
    let body = body.trim();
    if body.is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    for item in split_top_level(body, ',')? {
        let item = item.trim();
        let open = item.find('(')?;
        let place = item[..open].trim();
        if place.is_empty() || matching_paren(&item[open..])? != item.len() - open - 1 {
            return None;
        }
        let atoms = parse_atoms(&item[open + 1..item.len() - 1])?;
        if atoms.is_empty() {
            return None;
        }
        out.push((place.to_string(), Token(atoms)));
    }
    Some(out)
}

fn decode(input: &[u8]) -> Result<String, PnmlError> {
    let head: String = input.iter().take(200).map(|&b| b as char).collect();
    let latin1 = head
        .find("?>")
        .map(|end| head[..end].to_ascii_lowercase())
        .is_some_and(|decl| decl.contains("iso-8859-1") || decl.contains("latin1"));
    if latin1 {
        Ok(input.iter().map(|&b| b as char).collect())
    } else {
        String::from_utf8(input.to_vec()).map_err(|e| PnmlError::Xml {
            line: 1,
            col: 1,
            message: format!("input is not UTF-8: {e}"),
        })
    }
}

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn err(&self, node: Node, code: &'static str, message: impl Into<String>) -> PnmlError {
        let pos = self.doc.text_pos_at(node.range().start);
        PnmlError::Dialect {
            code,
            line: pos.row,
            col: pos.col,
            message: message.into(),
        }
    }

    fn elements(&self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, PnmlError> {
        let mut out = Vec::new();
        for c in node.children() {
            if c.is_element() {
                out.push(c);
            } else if c.is_text() && !c.text().unwrap_or_default().trim().is_empty() {
                return Err(self.err(
                    c,
                    "unexpected-text",
                    format!("<{}> holds no text", node.tag_name().name()),
                ));
            }
        }
        Ok(out)
    }

    fn attrs(&self, node: Node, allowed: &[&str], required: &[&str]) -> Result<(), PnmlError> {
        for a in node.attributes() {
            if !allowed.contains(&a.name()) {
                return Err(self.err(
                    node,
                    "unknown-attribute",
                    format!("<{}> has no attribute `{}`", node.tag_name().name(), a.name()),
                ));
            }
        }
        for r in required {
            if node.attribute(*r).is_none() {
                return Err(self.err(
                    node,
                    "missing-attribute",
                    format!("<{}> requires `{r}`", node.tag_name().name()),
                ));
            }
        }
        Ok(())
    }

    fn unknown(&self, node: Node, parent: &str) -> PnmlError {
        self.err(
            node,
            "unknown-element",
            format!("<{}> is not allowed inside <{parent}>", node.tag_name().name()),
        )
    }

    /// Text of the single `<value>` child of `node`.
    fn value(&self, node: Node<'a, 'input>) -> Result<String, PnmlError> {
        self.attrs(node, &[], &[])?;
        let kids = self.elements(node)?;
        match kids.as_slice() {
            [v] if v.has_tag_name("value") => {
                self.attrs(*v, &[], &[])?;
                if v.children().any(|c| c.is_element()) {
                    return Err(self.err(*v, "unknown-element", "<value> holds text only"));
                }
                Ok(v.text().unwrap_or_default().to_string())
            }
            _ => Err(self.err(
                node,
                "bad-value",
                format!("<{}> needs exactly one <value>", node.tag_name().name()),
            )),
        }
    }

    fn position(&self, node: Node<'a, 'input>) -> Result<Position, PnmlError> {
        self.attrs(node, &[], &[])?;
        let kids = self.elements(node)?;
        let [pos] = kids.as_slice() else {
            return Err(self.err(node, "bad-graphics", "<graphics> needs exactly one <position>"));
        };
        if !pos.has_tag_name("position") {
            return Err(self.unknown(*pos, "graphics"));
        }
        self.attrs(*pos, &["x", "y"], &["x", "y"])?;
        let coord = |name: &str| -> Result<i64, PnmlError> {
            let raw = pos.attribute(name).unwrap_or_default();
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| self.err(*pos, "bad-position", format!("`{name}` is not a number")))?;
            if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
                return Err(self.err(*pos, "bad-position", format!("`{name}` must be integral")));
            }
            Ok(v as i64)
        };
        Ok(Position {
            x: coord("x")?,
            y: coord("y")?,
        })
    }

    fn place(&self, node: Node<'a, 'input>) -> Result<(Place, Vec<Token>), PnmlError> {
        self.attrs(node, &["id"], &["id"])?;
        let id = node.attribute("id").unwrap_or_default().to_string();
        let mut place = Place {
            name: id.clone(),
            id,
            capacity: 0,
            position: Position::default(),
        };
        let mut tokens = Vec::new();
        for c in self.elements(node)? {
            match c.tag_name().name() {
                "graphics" => place.position = self.position(c)?,
                "name" => place.name = self.value(c)?,
                "initialMarking" => {
                    tokens = parse_marking(&self.value(c)?)
                        .ok_or_else(|| self.err(c, "bad-marking", "malformed initial marking"))?
                }
                "capacity" => {
                    place.capacity = self
                        .value(c)?
                        .trim()
                        .parse()
                        .map_err(|_| self.err(c, "bad-capacity", "capacity must be a non-negative integer"))?
                }
                _ => return Err(self.unknown(c, "place")),
            }
        }
        Ok((place, tokens))
    }

    fn transition(&self, node: Node<'a, 'input>) -> Result<Transition, PnmlError> {
        self.attrs(node, &["id", "silent"], &["id"])?;
        let id = node.attribute("id").unwrap_or_default().to_string();
        let silent = match node.attribute("silent") {
            None | Some("false") => false,
            Some("true") => true,
            Some(_) => return Err(self.err(node, "bad-attribute", "`silent` must be true or false")),
        };
        let mut t = Transition {
            name: id.clone(),
            id,
            guard: None,
            silent,
            params: None,
            annotation: None,
            position: Position::default(),
        };
        for c in self.elements(node)? {
            match c.tag_name().name() {
                "graphics" => t.position = self.position(c)?,
                "name" => t.name = self.value(c)?,
                "guard" => {
                    let text = self.value(c)?;
                    if !text.trim().is_empty() {
                        t.guard = Some(parse_expr(&text).map_err(|e| self.err(c, "bad-guard", e.to_string()))?);
                    }
                }
                "params" => {
                    let text = self.value(c)?;
                    let params: Vec<String> = if text.trim().is_empty() {
                        Vec::new()
                    } else {
                        text.split(',').map(|p| p.trim().to_string()).collect()
                    };
                    if let Some(bad) = params.iter().find(|p| !is_identifier(p)) {
                        return Err(self.err(c, "bad-params", format!("`{bad}` is not an identifier")));
                    }
                    t.params = Some(params);
                }
                "annotation" => t.annotation = Some(self.value(c)?),
                _ => return Err(self.unknown(c, "transition")),
            }
        }
        Ok(t)
    }

    fn arc(&self, node: Node<'a, 'input>) -> Result<Arc, PnmlError> {
        self.attrs(node, &["id", "source", "target"], &["id", "source", "target"])?;
        let mut inscription = Vec::new();
        for c in self.elements(node)? {
            match c.tag_name().name() {
                "inscription" => {
                    inscription = parse_inscription(&self.value(c)?)
                        .ok_or_else(|| self.err(c, "bad-inscription", "malformed inscription"))?
                }
                _ => return Err(self.unknown(c, "arc")),
            }
        }
        Ok(Arc {
            id: node.attribute("id").unwrap_or_default().to_string(),
            source: node.attribute("source").unwrap_or_default().to_string(),
            target: node.attribute("target").unwrap_or_default().to_string(),
            inscription,
        })
    }

    fn net(&self, root: Node<'a, 'input>) -> Result<PrTNet, PnmlError> {
        if !root.has_tag_name("pnml") {
            return Err(self.err(root, "unknown-element", "root element must be <pnml>"));
        }
        self.attrs(root, &[], &[])?;
        let kids = self.elements(root)?;
        let [net_node] = kids.as_slice() else {
            return Err(self.err(root, "bad-net", "<pnml> must contain exactly one <net>"));
        };
        if !net_node.has_tag_name("net") {
            return Err(self.unknown(*net_node, "pnml"));
        }
        self.attrs(*net_node, &["type", "id"], &["type", "id"])?;
        if net_node.attribute("type") != Some("PrT net") {
            return Err(self.err(*net_node, "bad-net", "net type must be `PrT net`"));
        }
        let mut net = PrTNet {
            id: net_node.attribute("id").unwrap_or_default().to_string(),
            ..Default::default()
        };
        let mut init_line: Option<(Node, String)> = None;
        let mut marked: Vec<(String, Token)> = Vec::new();
        for c in self.elements(*net_node)? {
            match c.tag_name().name() {
                "tokenclass" => {
                    self.attrs(c, &["id", "blue", "green", "red", "enabled"], &["id"])?;
                    if c.attribute("id") != Some("Default") {
                        return Err(self.err(c, "bad-tokenclass", "only the Default token class is supported"));
                    }
                }
                "labels" if init_line.is_none() => {
                    self.attrs(c, &["border", "height", "width", "x", "y"], &[])?;
                    let kids = self.elements(c)?;
                    let [text] = kids.as_slice() else {
                        return Err(self.err(c, "bad-init-line", "<labels> needs exactly one <text>"));
                    };
                    if !text.has_tag_name("text") {
                        return Err(self.unknown(*text, "labels"));
                    }
                    init_line = Some((c, text.text().unwrap_or_default().to_string()));
                }
                "place" => {
                    let (p, tokens) = self.place(c)?;
                    marked.extend(tokens.into_iter().map(|t| (p.id.clone(), t)));
                    net.places.push(p);
                }
                "transition" => net.transitions.push(self.transition(c)?),
                "arc" => net.arcs.push(self.arc(c)?),
                _ => return Err(self.unknown(c, "net")),
            }
        }

        let mut data_from_marking: BTreeMap<&str, Vec<&Token>> = BTreeMap::new();
        for (p, t) in &marked {
            if !t.is_default() {
                data_from_marking.entry(p).or_default().push(t);
            }
        }
        if let Some((node, line)) = &init_line {
            let decl = parse_init_line(line).ok_or_else(|| self.err(*node, "bad-init-line", "malformed INIT line"))?;
            let mut from_line: BTreeMap<&str, Vec<&Token>> = BTreeMap::new();
            for (p, t) in &decl {
                if net.place(p).is_none() {
                    return Err(self.err(*node, "bad-init-line", format!("INIT names unknown place `{p}`")));
                }
                from_line.entry(p).or_default().push(t);
            }
            for v in from_line.values_mut().chain(data_from_marking.values_mut()) {
                v.sort();
            }
            if from_line != data_from_marking {
                return Err(self.err(*node, "bad-init-line", "INIT line disagrees with the place markings"));
            }
        }
        net.init = marked;
        net.places.sort_by(|a, b| cmp_ids(&a.id, &b.id));
        Ok(net.normalized())
    }
}

/// Parses a PNML document in the dialect written by [`write_pnml`].
pub fn read_pnml(doc: &[u8]) -> Result<PrTNet, PnmlError> {
    let text = decode(doc)?;
    let parsed = Document::parse(&text).map_err(|e| {
        let pos = e.pos();
        PnmlError::Xml {
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })?;
    Reader { doc: &parsed }.net(parsed.root_element())
}
