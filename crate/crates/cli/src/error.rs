use std::fmt;

/// Usage errors exit with 1, data errors with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    /// The reader of our stdout went away (e.g. `| head`); not a failure.
    BrokenPipe,
}

fn io_error(e: &std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        CliError::BrokenPipe
    } else {
        CliError::Data(e.to_string())
    }
}

fn csv_error(e: &csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(io) => io_error(io),
        _ => CliError::Data(e.to_string()),
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::BrokenPipe => 0,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::BrokenPipe => write!(f, "broken pipe"),
        }
    }
}

impl From<aberrant::Error> for CliError {
    fn from(e: aberrant::Error) -> Self {
        use aberrant::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidSweep(_) => CliError::Usage(e.to_string()),
            E::Io(ref io) => io_error(io),
            E::Csv(ref c) => csv_error(c),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io_error(&e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        csv_error(&e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        match e.io_error_kind() {
            Some(std::io::ErrorKind::BrokenPipe) => CliError::BrokenPipe,
            _ => CliError::Data(e.to_string()),
        }
    }
}
