//! Test-script rendering from text templates.
//!
//! A template file holds three blocks separated by `---` lines: a header, a
//! fixture block whose `{{tests}}` line receives the per-test expansions, and
//! the per-test block. `{{net}}` works in every block and `{{n}}` in the
//! per-test block. A line holding `{{calls}}` or `{{oracleComments}}` is
//! repeated once per call or annotation, and dropped when there are none.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::expr::Atom;
use crate::testgen::{Scenario, TestSuite};

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("unknown-template: no template `{0}`")]
    UnknownTemplate(String),
    #[error("bad-template: {0}")]
    BadTemplate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CodegenError {
    pub fn code(&self) -> &'static str {
        match self {
            CodegenError::UnknownTemplate(_) => "unknown-template",
            CodegenError::BadTemplate(_) => "bad-template",
            CodegenError::Io { .. } => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    /// Extension of rendered files.
    pub ext: String,
    pub header: String,
    pub fixture_block: String,
    pub per_test_block: String,
}

const FIXTURE_STYLE: &str = include_str!("../templates/fixture-style.cs.tmpl");

impl Template {
    pub fn parse(id: &str, ext: &str, text: &str) -> Result<Template, CodegenError> {
        let mut blocks = vec![String::new()];
        for line in text.lines() {
            if line.trim_end() == "---" {
                blocks.push(String::new());
            } else {
                let b = blocks.last_mut().unwrap();
                b.push_str(line);
                b.push('\n');
            }
        }
        let [header, fixture_block, per_test_block]: [String; 3] = blocks.try_into().map_err(|b: Vec<String>| {
            CodegenError::BadTemplate(format!("`{id}` has {} blocks, expected 3", b.len()))
        })?;
        if !fixture_block.contains("{{tests}}") {
            return Err(CodegenError::BadTemplate(format!(
                "`{id}` fixture block lacks {{{{tests}}}}"
            )));
        }
        Ok(Template {
            id: id.to_string(),
            ext: ext.to_string(),
            header,
            fixture_block,
            per_test_block,
        })
    }

    pub fn fixture_style() -> Template {
        Template::parse("fixture-style", "cs", FIXTURE_STYLE).expect("built-in template parses")
    }
}

/// Loads `<id>.<ext>.tmpl`.
pub fn load_template(path: &Path) -> Result<Template, CodegenError> {
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
    let stem = file
        .strip_suffix(".tmpl")
        .ok_or_else(|| CodegenError::BadTemplate(format!("{file}: template files end in .tmpl")))?;
    let (id, ext) = stem
        .rsplit_once('.')
        .ok_or_else(|| CodegenError::BadTemplate(format!("{file}: expected <id>.<ext>.tmpl")))?;
    let text = std::fs::read_to_string(path).map_err(|source| CodegenError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Template::parse(id, ext, &text)
}

#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut r = TemplateRegistry {
            templates: BTreeMap::new(),
        };
        r.register(Template::fixture_style());
        r
    }
}

impl TemplateRegistry {
    /// Adds or replaces a template.
    pub fn register(&mut self, t: Template) {
        self.templates.insert(t.id.clone(), t);
    }

    /// Registers every `*.tmpl` file in `dir`.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), CodegenError> {
        let io = |source| CodegenError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "tmpl"))
            .collect();
        paths.sort();
        for p in paths {
            self.register(load_template(&p)?);
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render(&self, suite: &TestSuite, template_id: &str) -> Result<RenderedScript, CodegenError> {
        let t = self
            .get(template_id)
            .ok_or_else(|| CodegenError::UnknownTemplate(template_id.to_string()))?;
        Ok(render_with(suite, t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedScript {
    pub file_name: String,
    pub body: String,
}

/// Renders with the built-in registry.
pub fn render(suite: &TestSuite, template_id: &str) -> Result<RenderedScript, CodegenError> {
    TemplateRegistry::default().render(suite, template_id)
}

/// Source-code form of an argument: symbols become string literals.
pub fn code_literal(a: &Atom) -> String {
    match a {
        Atom::Symbol(s) => Atom::Text(s.clone()).to_string(),
        a => a.to_string(),
    }
}

fn code_calls(s: &Scenario) -> Vec<String> {
    s.firings
        .iter()
        .filter(|f| !f.silent)
        .map(|f| {
            let args: Vec<String> = f.args.iter().map(code_literal).collect();
            format!("{}({})", f.name, args.join(", "))
        })
        .collect()
}

fn expand(block: &str, net: &str, n: Option<usize>, calls: &[String], oracles: &[String]) -> String {
    let mut out = String::new();
    for line in block.split_inclusive('\n') {
        let line = line.replace("{{net}}", net);
        let line = match n {
            Some(n) => line.replace("{{n}}", &n.to_string()),
            None => line,
        };
        let (key, items) = if line.contains("{{calls}}") {
            ("{{calls}}", calls)
        } else if line.contains("{{oracleComments}}") {
            ("{{oracleComments}}", oracles)
        } else {
            out.push_str(&line);
            continue;
        };
        for item in items {
            out.push_str(&line.replace(key, item));
        }
    }
    out
}

/// One per-test expansion per scenario, in suite order, inside the fixture.
pub fn render_with(suite: &TestSuite, t: &Template) -> RenderedScript {
    let net = &suite.net_id;
    let mut tests = String::new();
    for (i, s) in suite.scenarios.iter().enumerate() {
        tests.push_str(&expand(&t.per_test_block, net, Some(i + 1), &code_calls(s), &s.oracles));
    }
    let mut body = expand(&t.header, net, None, &[], &[]);
    for line in expand(&t.fixture_block, net, None, &[], &[]).split_inclusive('\n') {
        if line.trim() == "{{tests}}" {
            body.push_str(&tests);
        } else {
            body.push_str(&line.replace("{{tests}}", tests.trim()));
        }
    }
    RenderedScript {
        file_name: format!("{net}Tester_RT.{}", t.ext),
        body,
    }
}
