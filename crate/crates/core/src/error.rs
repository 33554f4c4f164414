//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by the identification library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or dimension failed validation before any computation ran.
    #[error("parameter validation: {0}")]
    Validation(String),

    /// Degrees of freedom too small for a required moment to exist.
    #[error("degrees of freedom {nu} must exceed {min}")]
    DegreesOfFreedom { nu: f64, min: f64 },

    /// A factorization or inversion lost positive definiteness.
    ///
    /// `context` names the quantity that failed (and, inside the VB loop,
    /// the iteration); `step` is the time index attached by the outer
    /// recursion when one is known.
    #[error("numerical degeneracy in {context}{}", step_suffix(.step))]
    Degeneracy {
        context: String,
        step: Option<usize>,
    },

    /// A simulated trajectory left the representable range.
    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    /// A data or snapshot file had a malformed row.
    #[error("line {line}: {message}")]
    Data { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a time-step index to a degeneracy raised deeper in the stack.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::Degeneracy { context, step: None } => Error::Degeneracy {
                context,
                step: Some(step),
            },
            other => other,
        }
    }

    pub(crate) fn degenerate(context: impl Into<String>) -> Self {
        Error::Degeneracy {
            context: context.into(),
            step: None,
        }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
