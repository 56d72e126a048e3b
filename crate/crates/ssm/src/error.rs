use std::fmt;
use std::path::Path;

/// Failure category, which also selects the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Computation,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Data => 3,
            Category::Computation => 4,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Computation => "computation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{category} error: {message}")]
pub struct AppError {
    pub category: Category,
    pub message: String,
}

impl AppError {
    pub fn config(message: impl Into<String>) -> Self {
        AppError { category: Category::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        AppError { category: Category::Data, message: message.into() }
    }

    pub fn computation(message: impl Into<String>) -> Self {
        AppError { category: Category::Computation, message: message.into() }
    }

    pub fn io(category: Category, path: &Path, err: std::io::Error) -> Self {
        AppError { category, message: format!("{}: {err}", path.display()) }
    }
}

impl From<ssm_core::Error> for AppError {
    fn from(e: ssm_core::Error) -> Self {
        use ssm_core::Error as E;
        let category = match e {
            E::Config(_) | E::Parameter(_) => Category::Config,
            E::Trajectory { .. } | E::MissingVelocity(_) | E::SignalLog(_) => Category::Data,
            _ => Category::Computation,
        };
        AppError { category, message: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
