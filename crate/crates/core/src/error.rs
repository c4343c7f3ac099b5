use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid input: {0}")]
    Spec(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("message of protocol `{protocol}` (tag {tag}) uses {bits} bits, budget is {budget}")]
    BitBudget { protocol: String, tag: u8, bits: u32, budget: u32 },
    #[error("edge {from}->{to} carries {count} messages in one round, megaround width is {width}")]
    ChannelOversubscribed { from: usize, to: usize, count: usize, width: usize },
    #[error("round limit {limit} exceeded")]
    Timeout { limit: u64 },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("construction failure: {0}")]
    Construction(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
