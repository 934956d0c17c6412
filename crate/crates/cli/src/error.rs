use std::fmt;
use std::path::Path;

use bt_core::{Error, ErrorClass};

/// Failure of a command, carrying enough context to pick an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, config, or command line.
    Parse(String),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn parse(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Parse(format!("{}: {msg}", path.display()))
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// 1 internal, 2 validation, 3 config/parse/io.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 3,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Internal => 1,
            },
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn variant_name(e: &Error) -> String {
    let inner = match e {
        Error::Replication { source, .. } => source.as_ref(),
        other => other,
    };
    let dbg = format!("{inner:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "ParseError: {m}"),
            CliError::Io(m) => write!(f, "IoError: {m}"),
            CliError::Core(e) => {
                let name = variant_name(e);
                let msg = e.to_string();
                if msg.contains(&name) {
                    write!(f, "{msg}")
                } else {
                    write!(f, "{name}: {msg}")
                }
            }
        }
    }
}
