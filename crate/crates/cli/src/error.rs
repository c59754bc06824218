use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] thq_core::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl CliError {
    /// Process exit status: 2 parse, 3 physics domain, 4 numerical,
    /// 5 optimizer, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use thq_core::Error as E;
        match self {
            Self::Core(e) => match e {
                E::Parse(_) => 2,
                E::Config(_) | E::Unsupported(_) | E::Domain(_) | E::Shape { .. } | E::Resonance { .. } => 3,
                E::Numerical(_) | E::Truncation { .. } | E::Fit(_) => 4,
                E::Optimization { .. } => 5,
            },
            Self::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "parse",
            3 => "domain",
            4 => "numerical",
            5 => "optimizer",
            _ => "io",
        }
    }
}
