//! CLI failure modes, one variant per exit code.

use std::fmt;

/// Anything a subcommand can fail with. The variant fixes the process
/// exit code, so callers can script against the contract:
///
/// - 2: bad flags, unreadable/invalid config, unparseable records
/// - 3: the data itself is missing or unusable (empty data root)
/// - 4: a pipeline artifact (shards, checkpoint) is absent or corrupt
/// - 5: a checkpoint that does not match the active config
/// - 1: verification failures and everything else
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Artifact(String),
    Mismatch(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Artifact(_) => 4,
            CliError::Mismatch(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(m)
        | CliError::Data(m)
        | CliError::Artifact(m)
        | CliError::Mismatch(m)
        | CliError::Other(m)) = self;
        f.write_str(m)
    }
}

impl std::error::Error for CliError {}
