use std::fmt;

/// Coarse error class, printed as the prefix of the error line and mapped to
/// the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Input,
    Numerical,
    Io,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Input => "input",
            Category::Numerical => "numerical",
            Category::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 3,
            Category::Data => 4,
            Category::Input => 5,
            Category::Numerical => 6,
            Category::Io => 7,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Category::Input, message)
    }

    /// Prefix the message with where the error happened.
    pub fn context(mut self, ctx: impl fmt::Display) -> Self {
        self.message = format!("{ctx}: {}", self.message);
        self
    }
}

impl From<lrssc::Error> for CliError {
    fn from(e: lrssc::Error) -> Self {
        use lrssc::Error as E;
        let category = match &e {
            E::Parse(_) => Category::Data,
            E::Io(_) => Category::Io,
            E::Numerical(_) | E::NonFinite { .. } => Category::Numerical,
            E::InvalidInput(_) | E::DimensionMismatch { .. } => Category::Input,
        };
        Self::new(category, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Category::Io, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(Category::Data, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
