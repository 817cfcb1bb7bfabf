// SPDX-License-Identifier: MIT
use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("node name must not be empty")]
    EmptyNodeName,
    #[error("edge endpoint `{0}` is not a declared node")]
    UndeclaredEndpoint(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("temporal variable {0} lies outside the window [{1}, {2}]")]
    OutsideWindow(String, i32, i32),
    #[error("template enumeration exceeded the cap of {cap} (counted {counted})")]
    OverCap { cap: usize, counted: usize },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("treatment and outcome must differ (got `{0}` twice)")]
    DegenerateQuery(String),
    #[error("treatment is not an ancestor of the outcome")]
    NotAncestor,
    #[error("the micro causal effect is not identifiable by adjustment")]
    NotIdentifiable,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("malformed regression: {0}")]
    MalformedRegression(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("insufficient rows: {rows} rows for {columns} columns")]
    InsufficientRows { rows: usize, columns: usize },
    #[error("no stable coefficient draw after {0} attempts")]
    Unstable(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
