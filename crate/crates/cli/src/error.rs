use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 2 configuration, 3 numerical non-convergence, 4 i/o, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<bswg_core::Error> for CliError {
    fn from(e: bswg_core::Error) -> Self {
        use bswg_core::Error as E;
        match e {
            E::Io(io) => CliError::Io(io.to_string()),
            e if e.is_numerical() => CliError::Numeric(e.to_string()),
            e @ (E::InvalidParameter(_)
            | E::Domain { .. }
            | E::UnsupportedEmitterCount { .. }
            | E::ChainTooShort { .. }) => CliError::Config(e.to_string()),
            e => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bswg_core::Error as E;

    #[test]
    fn exit_codes_by_failure_class() {
        assert_eq!(
            CliError::from(E::InvalidParameter("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(E::ChainTooShort {
                t_max: 1.0,
                min_cavities: 9
            })
            .exit_code(),
            2
        );
        assert_eq!(
            CliError::from(E::RootNotConverged {
                lo: 0.0,
                hi: 1.0,
                iterations: 200
            })
            .exit_code(),
            3
        );
        assert_eq!(
            CliError::from(E::InaccurateEigensystem { residual: 1.0 }).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(E::Io(std::io::Error::other("disk"))).exit_code(),
            4
        );
        assert_eq!(CliError::Other("?".into()).exit_code(), 1);
    }
}
