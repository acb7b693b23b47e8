use tokcol::Error;

pub const MISMATCH: u8 = 1;
pub const USAGE: u8 = 2;
pub const TIMEOUT: u8 = 3;
pub const BANDWIDTH: u8 = 4;
pub const NO_DECISION: u8 = 5;
pub const VERIFY: u8 = 6;
pub const IO: u8 = 7;
pub const INTERNAL: u8 = 70;

/// A command outcome other than success.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

pub fn code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::InfeasibleAssignment(_) | Error::InvalidConfig(_) => USAGE,
        Error::Parse(_) | Error::Io(_) | Error::Json(_) => IO,
        Error::BandwidthViolation { .. } => BANDWIDTH,
        Error::InternalInvariant { .. } => INTERNAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(code_for(&e), e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if let Some(t) = e.downcast_ref::<Error>() {
            return Failure::new(code_for(t), format!("{e:#}"));
        }
        if e.downcast_ref::<std::io::Error>().is_some()
            || e.downcast_ref::<toml::de::Error>().is_some()
            || e.downcast_ref::<csv::Error>().is_some()
            || e.downcast_ref::<serde_json::Error>().is_some()
        {
            return Failure::new(IO, format!("{e:#}"));
        }
        Failure::new(INTERNAL, format!("{e:#}"))
    }
}

pub type CmdResult = Result<(), Failure>;
