//! Async client for the simulation bridge.

use atcg_core::bridge::{ErrorDto, FireRequest, NetDto, StateDto, TestsDto, TreeDto, SESSION_HEADER};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{code}: {message}")]
    Api { code: String, message: String },
}

impl ClientError {
    pub fn code(&self) -> &str {
        match self {
            ClientError::Transport(_) => "transport",
            ClientError::Api { code, .. } => code,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    session: Option<String>,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            session: None,
            http: reqwest::Client::new(),
        }
    }

    /// Uses a named session instead of the shared anonymous one.
    pub fn with_session(mut self, id: impl Into<String>) -> Client {
        self.session = Some(id.into());
        self
    }

    fn request(&self, method: reqwest::Method, path: &str) -> reqwest::RequestBuilder {
        let r = self.http.request(method, format!("{}{path}", self.base));
        match &self.session {
            Some(s) => r.header(SESSION_HEADER, s),
            None => r,
        }
    }

    async fn send<T: DeserializeOwned>(&self, r: reqwest::RequestBuilder) -> Result<T, ClientError> {
        let resp = r.send().await?;
        if resp.status().is_success() {
            return Ok(resp.json().await?);
        }
        let e: ErrorDto = resp.json().await?;
        Err(ClientError::Api {
            code: e.code,
            message: e.message,
        })
    }

    pub async fn net(&self) -> Result<NetDto, ClientError> {
        self.send(self.request(reqwest::Method::GET, "/net")).await
    }

    pub async fn state(&self) -> Result<StateDto, ClientError> {
        self.send(self.request(reqwest::Method::GET, "/state")).await
    }

    pub async fn fire(&self, index: usize) -> Result<StateDto, ClientError> {
        self.send(
            self.request(reqwest::Method::POST, "/fire")
                .json(&FireRequest { index }),
        )
        .await
    }

    pub async fn reset(&self) -> Result<StateDto, ClientError> {
        self.send(self.request(reqwest::Method::POST, "/reset")).await
    }

    pub async fn undo(&self) -> Result<StateDto, ClientError> {
        self.send(self.request(reqwest::Method::POST, "/undo")).await
    }

    pub async fn tree(&self, max_depth: Option<usize>) -> Result<TreeDto, ClientError> {
        let path = match max_depth {
            Some(d) => format!("/tree?maxDepth={d}"),
            None => "/tree".to_string(),
        };
        self.send(self.request(reqwest::Method::GET, &path)).await
    }

    pub async fn tests(&self, all: bool) -> Result<TestsDto, ClientError> {
        self.send(self.request(reqwest::Method::GET, &format!("/tests?all={all}")))
            .await
    }
}
