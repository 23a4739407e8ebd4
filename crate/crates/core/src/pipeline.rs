//! Loading a net from either a design model or a PNML file.

use thiserror::Error;

use crate::ingest::{parse_design_model, IngestError};
use crate::model::ValidationReport;
use crate::netgen::{compile_model, NetgenError, NetgenOptions};
use crate::petri::{compile_net, PrTNet};
use crate::pnml::{read_pnml, PnmlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Model(#[from] IngestError),
    #[error(transparent)]
    Net(#[from] PnmlError),
    #[error(transparent)]
    Netgen(#[from] NetgenError),
    #[error("net does not compile:\n{0}")]
    Compile(ValidationReport),
}

impl LoadError {
    /// Parse failures versus model or net errors.
    pub fn is_parse(&self) -> bool {
        matches!(self, LoadError::Model(_) | LoadError::Net(_))
    }
}

/// True when the document's root element is `<model>`.
pub fn is_model(doc: &[u8]) -> bool {
    let text = String::from_utf8_lossy(doc);
    let mut rest = text.as_ref();
    loop {
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix("<?").or_else(|| rest.strip_prefix("<!")) {
            let end = if r.starts_with("--") {
                r.find("-->").map(|i| i + 3)
            } else {
                r.find('>').map(|i| i + 1)
            };
            match end {
                Some(i) => rest = &r[i..],
                None => return false,
            }
        } else {
            return rest.starts_with("<model")
                && rest[6..].starts_with(|c: char| c.is_whitespace() || c == '>' || c == '/');
        }
    }
}

/// Compiles a design model, or reads and checks a net.
pub fn load_net(doc: &[u8], options: NetgenOptions) -> Result<PrTNet, LoadError> {
    if is_model(doc) {
        return Ok(compile_model(&parse_design_model(doc)?, options)?);
    }
    let net = read_pnml(doc)?;
    let report = compile_net(&net);
    if !report.is_clean() {
        return Err(LoadError::Compile(report));
    }
    Ok(net)
}
